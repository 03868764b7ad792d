//! Seeded generators for the benchmark problems and the small hand-checkable
//! fixtures.
//!
//! Random instances draw from a ChaCha8 stream keyed by
//! `derive_seed(problem, n, seed)`, consumed in lexicographic multi-index
//! order, so an instance is a pure function of `(problem, n, seed)`.

use std::fmt;
use std::str::FromStr;

use rand::distributions::{Distribution, Open01};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{contract_full, DenseTensor};

/// Seed used for the right-hand side of problem 2, which has no seed of its own.
pub const PROBLEM2_RHS_SEED: u64 = 0;

/// Margin factor on the largest row sum used to build `s` in problems 1 and 4.
pub const SHIFT_MARGIN: f64 = 1.01;

pub const GRAVITATIONAL_CONSTANT: f64 = 6.67e-11;
pub const EARTH_MASS: f64 = 5.98e24;
pub const EARTH_RADIUS: f64 = 6.37e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProblemId {
    #[serde(rename = "1")]
    P1,
    #[serde(rename = "2")]
    P2,
    #[serde(rename = "3")]
    P3,
    #[serde(rename = "4")]
    P4,
    #[serde(rename = "ex11")]
    Ex11,
    #[serde(rename = "ex21")]
    Ex21,
    #[serde(rename = "ex22")]
    Ex22,
}

impl ProblemId {
    pub fn as_str(self) -> &'static str {
        match self {
            ProblemId::P1 => "1",
            ProblemId::P2 => "2",
            ProblemId::P3 => "3",
            ProblemId::P4 => "4",
            ProblemId::Ex11 => "ex11",
            ProblemId::Ex21 => "ex21",
            ProblemId::Ex22 => "ex22",
        }
    }

    fn tag(self) -> u64 {
        match self {
            ProblemId::P1 => 1,
            ProblemId::P2 => 2,
            ProblemId::P3 => 3,
            ProblemId::P4 => 4,
            ProblemId::Ex11 => 11,
            ProblemId::Ex21 => 21,
            ProblemId::Ex22 => 22,
        }
    }

    pub fn fixture_id(self) -> Option<FixtureId> {
        match self {
            ProblemId::Ex11 => Some(FixtureId::Ex11),
            ProblemId::Ex21 => Some(FixtureId::Ex21),
            ProblemId::Ex22 => Some(FixtureId::Ex22),
            _ => None,
        }
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "1" | "p1" => ProblemId::P1,
            "2" | "p2" => ProblemId::P2,
            "3" | "p3" => ProblemId::P3,
            "4" | "p4" => ProblemId::P4,
            "ex11" => ProblemId::Ex11,
            "ex21" => ProblemId::Ex21,
            "ex22" => ProblemId::Ex22,
            other => return Err(Error::Parse(format!("unknown problem '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixtureId {
    Ex11,
    Ex21,
    Ex22,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub problem: ProblemId,
    pub n: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Scale factor applied by the solver protocol, when known.
    #[serde(default)]
    pub scale: Option<f64>,
    /// The shift `s` in `M = s I - B` for generated M-tensors.
    #[serde(default)]
    pub shift: Option<f64>,
    #[serde(default)]
    pub known_solutions: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub tensor: DenseTensor,
    pub rhs: Vec<f64>,
    pub meta: InstanceMeta,
}

impl ProblemInstance {
    pub fn known_solutions(&self) -> &[Vec<f64>] {
        &self.meta.known_solutions
    }
}

/// SplitMix64 finalizer folded over `parts`.
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x9E37_79B9_7F4A_7C15u64, |h, &p| {
        let mut z = (h ^ p).wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    })
}

fn rng_for(problem: ProblemId, n: usize, seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(&[problem.tag(), n as u64, seed]))
}

fn uniform_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| Open01.sample(rng)).collect()
}

/// `M = s I - B` with `s = 1.01 * max_i (B e^3)_i`. Returns `(M, s)`.
fn shifted_mtensor(b: DenseTensor) -> (DenseTensor, f64) {
    let n = b.dim();
    let row_sums = contract_full(&b, &vec![1.0; n]).expect("dimension is consistent");
    let s = SHIFT_MARGIN * row_sums.iter().copied().fold(f64::MIN, f64::max);
    shift_by(b, s)
}

fn shift_by(b: DenseTensor, s: f64) -> (DenseTensor, f64) {
    let n = b.dim();
    let order = b.order();
    let mut data: Vec<f64> = b.as_slice().iter().map(|v| -v).collect();
    for i in 0..n {
        data[b.diagonal_offset(i)] += s;
    }
    let m = DenseTensor::from_vec(order, n, data).expect("shape preserved");
    (m, s)
}

fn check_n(n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(Error::InvalidConfig(format!("n must be >= {min}, got {n}")));
    }
    Ok(())
}

/// Symmetric strong M-tensor of order 4: one uniform draw per sorted index
/// multiset, replicated over its permutations.
pub fn gen_problem1(n: usize, seed: u64) -> Result<ProblemInstance> {
    check_n(n, 2)?;
    let mut rng = rng_for(ProblemId::P1, n, seed);
    let mut b = DenseTensor::zeros(4, n)?;
    let entries: Vec<(Vec<usize>, f64)> = b.indexed().collect();
    let mut data = vec![0.0; b.len()];
    for (o, (idx, _)) in entries.iter().enumerate() {
        if idx.windows(2).all(|w| w[0] <= w[1]) {
            data[o] = Open01.sample(&mut rng);
        } else {
            let mut key = idx.clone();
            key.sort_unstable();
            // the sorted arrangement precedes every other permutation
            data[o] = data[b.offset(&key)];
        }
    }
    b = DenseTensor::from_vec(4, n, data)?;
    let (tensor, s) = shifted_mtensor(b);
    let rhs = uniform_vec(&mut rng, n);
    Ok(ProblemInstance {
        tensor,
        rhs,
        meta: InstanceMeta {
            problem: ProblemId::P1,
            n,
            seed: Some(seed),
            scale: None,
            shift: Some(s),
            known_solutions: Vec::new(),
        },
    })
}

/// `B(i1..i4) = |sin(i1 + i2 + i3 + i4)|` (1-based) and `s = n^3`.
pub fn gen_problem2(n: usize) -> Result<ProblemInstance> {
    check_n(n, 2)?;
    let b = DenseTensor::from_fn(4, n, |idx| {
        let sum: usize = idx.iter().map(|i| i + 1).sum();
        (sum as f64).sin().abs()
    })?;
    let (tensor, s) = shift_by(b, (n as f64).powi(3));
    let mut rng = rng_for(ProblemId::P2, n, PROBLEM2_RHS_SEED);
    let rhs = uniform_vec(&mut rng, n);
    Ok(ProblemInstance {
        tensor,
        rhs,
        meta: InstanceMeta {
            problem: ProblemId::P2,
            n,
            seed: Some(PROBLEM2_RHS_SEED),
            scale: None,
            shift: Some(s),
            known_solutions: Vec::new(),
        },
    })
}

/// Discretized two-point boundary problem for a particle under gravitation.
pub fn gen_problem3(n: usize) -> Result<ProblemInstance> {
    check_n(n, 3)?;
    let mut t = DenseTensor::zeros(4, n)?;
    t.set(&[0, 0, 0, 0], 1.0);
    t.set(&[n - 1, n - 1, n - 1, n - 1], 1.0);
    let third = -1.0 / 3.0;
    for i in 1..n - 1 {
        t.set(&[i, i, i, i], 2.0);
        for j in [i - 1, i + 1] {
            t.set(&[i, j, i, i], third);
            t.set(&[i, i, j, i], third);
            t.set(&[i, i, i, j], third);
        }
    }
    let boundary = EARTH_RADIUS.powi(3);
    let interior = GRAVITATIONAL_CONSTANT * EARTH_MASS / ((n - 1) as f64).powi(2);
    let mut rhs = vec![interior; n];
    rhs[0] = boundary;
    rhs[n - 1] = boundary;
    Ok(ProblemInstance {
        tensor: t,
        rhs,
        meta: InstanceMeta {
            problem: ProblemId::P3,
            n,
            seed: None,
            scale: None,
            shift: None,
            known_solutions: Vec::new(),
        },
    })
}

/// Nonsymmetric strong M-tensor of order 4 with i.i.d. uniform `B`.
pub fn gen_problem4(n: usize, seed: u64) -> Result<ProblemInstance> {
    check_n(n, 2)?;
    let mut rng = rng_for(ProblemId::P4, n, seed);
    let len = n.pow(4);
    let b = DenseTensor::from_vec(4, n, (0..len).map(|_| Open01.sample(&mut rng)).collect())?;
    let (tensor, s) = shifted_mtensor(b);
    let rhs = uniform_vec(&mut rng, n);
    Ok(ProblemInstance {
        tensor,
        rhs,
        meta: InstanceMeta {
            problem: ProblemId::P4,
            n,
            seed: Some(seed),
            scale: None,
            shift: Some(s),
            known_solutions: Vec::new(),
        },
    })
}

fn tensor_from(order: usize, n: usize, entries: &[(&[usize], f64)]) -> DenseTensor {
    let mut t = DenseTensor::zeros(order, n).expect("valid fixture shape");
    for (idx, v) in entries {
        let zero_based: Vec<usize> = idx.iter().map(|i| i - 1).collect();
        t.set(&zero_based, *v);
    }
    t
}

/// Exact small systems with their listed solutions (1-based indices below).
pub fn fixture(id: FixtureId) -> ProblemInstance {
    let (problem, tensor, rhs, known) = match id {
        FixtureId::Ex11 => (
            ProblemId::Ex11,
            tensor_from(
                3,
                3,
                &[
                    (&[1, 1, 1], 1.0),
                    (&[2, 2, 2], 1.0),
                    (&[3, 3, 3], 1.0),
                    (&[2, 1, 1], 1.0),
                    (&[3, 2, 2], 1.0),
                    (&[3, 1, 1], -1.0),
                ],
            ),
            vec![1.0, 1.0, -1.0],
            vec![vec![1.0, 0.0, 0.0]],
        ),
        FixtureId::Ex21 => (
            ProblemId::Ex21,
            tensor_from(
                4,
                2,
                &[
                    (&[1, 1, 1, 1], 3.0),
                    (&[1, 1, 2, 2], -1.5),
                    (&[1, 2, 2, 2], -0.5),
                    (&[2, 2, 2, 2], 3.0),
                ],
            ),
            vec![-7.0, 24.0],
            vec![vec![1.0, 2.0], vec![(5f64.sqrt() - 1.0) / 2.0, 2.0]],
        ),
        FixtureId::Ex22 => (
            ProblemId::Ex22,
            tensor_from(
                3,
                2,
                &[
                    (&[1, 1, 1], 1.0),
                    (&[1, 1, 2], -1.5),
                    (&[1, 2, 2], -1.0),
                    (&[2, 2, 2], 1.0),
                ],
            ),
            vec![-6.0, 4.0],
            vec![vec![1.0, 2.0], vec![2.0, 2.0]],
        ),
    };
    let n = tensor.dim();
    ProblemInstance {
        tensor,
        rhs,
        meta: InstanceMeta {
            problem,
            n,
            seed: None,
            scale: None,
            shift: None,
            known_solutions: known,
        },
    }
}

/// Dispatch by id. `seed` is ignored by the deterministic problems and the
/// fixtures; `n` is ignored by the fixtures.
pub fn generate(problem: ProblemId, n: usize, seed: u64) -> Result<ProblemInstance> {
    match problem {
        ProblemId::P1 => gen_problem1(n, seed),
        ProblemId::P2 => gen_problem2(n),
        ProblemId::P3 => gen_problem3(n),
        ProblemId::P4 => gen_problem4(n, seed),
        other => Ok(fixture(other.fixture_id().expect("fixture id"))),
    }
}
