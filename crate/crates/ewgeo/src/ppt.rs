//! Fast positive-partial-transpose test for EW states.
//!
//! `ρ^{T₁}` commutes with every `Ū⊗U⊗U`, so it is block diagonal on the
//! isotypic decomposition of that action with blocks the size of the
//! multiplicity spaces (at most 2 for the shapes used here). The blocks are
//! found once per `d` by diagonalizing a generic Hermitian element of the
//! span of `Ū⊗U⊗U`: each of its eigenspaces is one copy of a multiplicity
//! space. Copies belonging to the same irrep give the same block, so only
//! one copy is kept per irrep.

use std::sync::OnceLock;

use ewgeo_core::point::check_state;
use ewgeo_core::{EWPoint, Error, Result};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::oracle::{basis, hermitian_eigen, linear_coefficients, min_hermitian_eigenvalue, partial_transpose, CMatrix, MAX_DIMENSION, PSD_TOL};

const SEED: u64 = 0x5eed_0001;
const CLUSTER_TOL: f64 = 1e-8;
const MIN_GAP: f64 = 1e-5;
const INVARIANCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
enum Block {
    Scalar([f64; 6]),
    Pair { a: [f64; 6], d: [f64; 6], off: [Complex64; 6] },
    Dense(Vec<CMatrix>),
}

impl Block {
    fn min_eigenvalue(&self, c: &[f64; 6]) -> f64 {
        let dot = |w: &[f64; 6]| w.iter().zip(c).map(|(x, y)| x * y).sum::<f64>();
        match self {
            Block::Scalar(w) => dot(w),
            Block::Pair { a, d, off } => {
                let (a, d) = (dot(a), dot(d));
                let o: Complex64 = off.iter().zip(c).map(|(x, y)| x * y).sum();
                let h = 0.5 * (a - d);
                0.5 * (a + d) - (h * h + o.norm_sqr()).sqrt()
            }
            Block::Dense(ms) => {
                let mut m = ms[0].clone() * Complex64::from(c[0]);
                for (mk, ck) in ms.iter().zip(c).skip(1) {
                    m += mk * Complex64::from(*ck);
                }
                min_hermitian_eigenvalue(&m)
            }
        }
    }
}

/// Precomputed blocks of `ρ^{T₁}` for one `d`.
#[derive(Debug, Clone)]
pub struct PptReducer {
    d: u64,
    blocks: Vec<Block>,
    sizes: Vec<usize>,
}

fn random_unitary(d: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let z = CMatrix::from_fn(d, d, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im)
    });
    let qr = z.qr();
    let (q, r) = (qr.q(), qr.r());
    let phases = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(d, (0..d).map(|i| r[(i, i)] / r[(i, i)].norm())));
    q * phases
}

fn group_element(u: &CMatrix) -> CMatrix {
    u.map(|z| z.conj()).kronecker(u).kronecker(u)
}

fn clusters(values: &[f64]) -> Option<Vec<(usize, usize)>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i] - values[i - 1] > CLUSTER_TOL {
            if i < values.len() && values[i] - values[i - 1] < MIN_GAP {
                return None;
            }
            out.push((start, i));
            start = i;
        }
    }
    Some(out)
}

fn sorted_spectrum(ms: &[CMatrix], c: &[f64; 6]) -> Vec<f64> {
    let mut m = ms[0].clone() * Complex64::from(c[0]);
    for (mk, ck) in ms.iter().zip(c).skip(1) {
        m += mk * Complex64::from(*ck);
    }
    hermitian_eigen(&m).0
}

impl PptReducer {
    pub fn build(d: u64) -> Result<Self> {
        let b = basis(d)?;
        let du = d as usize;
        let transposed: Vec<CMatrix> =
            b.linear_basis().iter().map(|m| partial_transpose(m, d)).collect::<Result<_>>()?;
        let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ d);
        for _attempt in 0..16 {
            let mut g = CMatrix::zeros(b.size(), b.size());
            for _ in 0..3 {
                let k = group_element(&random_unitary(du, &mut rng));
                g += &k + k.adjoint();
            }
            let (values, vectors) = hermitian_eigen(&g);
            let Some(groups) = clusters(&values) else { continue };

            let probes = [[0.31, 0.07, 0.62, 0.13, -0.21, 0.05], [0.11, 0.52, 0.37, -0.08, 0.19, 0.23]];
            let mut kept: Vec<(Vec<CMatrix>, [Vec<f64>; 2])> = Vec::new();
            let mut ok = true;
            for &(lo, hi) in &groups {
                let q = vectors.columns(lo, hi - lo).into_owned();
                let qd = q.adjoint();
                let mut local = Vec::with_capacity(6);
                for t in &transposed {
                    let tq = t * &q;
                    let blk = &qd * &tq;
                    if (tq - &q * &blk).camax() > INVARIANCE_TOL {
                        ok = false;
                        break;
                    }
                    local.push(blk);
                }
                if !ok {
                    break;
                }
                let sig = [sorted_spectrum(&local, &probes[0]), sorted_spectrum(&local, &probes[1])];
                let seen = kept.iter().any(|(m, s)| {
                    m[0].nrows() == local[0].nrows()
                        && s.iter().zip(&sig).all(|(x, y)| x.iter().zip(y).all(|(u, v)| (u - v).abs() < 1e-9))
                });
                if !seen {
                    kept.push((local, sig));
                }
            }
            if !ok {
                continue;
            }
            let sizes = kept.iter().map(|(m, _)| m[0].nrows()).collect();
            let blocks = kept.into_iter().map(|(m, _)| to_block(m)).collect();
            return Ok(Self { d, blocks, sizes });
        }
        Err(Error::NonConvergence(format!("could not separate the isotypic blocks for d = {d}")))
    }

    pub fn d(&self) -> u64 {
        self.d
    }

    /// Sizes of the distinct blocks.
    pub fn block_sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Minimum eigenvalue of `ρ^{T₁}` without validity checks.
    pub fn min_eigenvalue_unchecked(&self, p: &EWPoint) -> f64 {
        let c = linear_coefficients(p);
        self.blocks.iter().map(|b| b.min_eigenvalue(&c)).fold(f64::INFINITY, f64::min)
    }

    pub fn min_eigenvalue(&self, p: &EWPoint) -> Result<f64> {
        check_state(p, self.d)?;
        Ok(self.min_eigenvalue_unchecked(p))
    }
}

fn to_block(m: Vec<CMatrix>) -> Block {
    match m[0].nrows() {
        1 => Block::Scalar(std::array::from_fn(|k| m[k][(0, 0)].re)),
        2 => Block::Pair {
            a: std::array::from_fn(|k| m[k][(0, 0)].re),
            d: std::array::from_fn(|k| m[k][(1, 1)].re),
            off: std::array::from_fn(|k| m[k][(0, 1)]),
        },
        _ => Block::Dense(m),
    }
}

/// Memoized reducer for `d`.
pub fn reducer(d: u64) -> Result<&'static PptReducer> {
    static CACHE: [OnceLock<PptReducer>; MAX_DIMENSION as usize + 1] = [const { OnceLock::new() }; MAX_DIMENSION as usize + 1];
    if !(2..=MAX_DIMENSION).contains(&d) {
        return Err(Error::InvalidParameters(format!("oracle dimension d = {d} outside 2..={MAX_DIMENSION}")));
    }
    if let Some(r) = CACHE[d as usize].get() {
        return Ok(r);
    }
    let built = PptReducer::build(d)?;
    Ok(CACHE[d as usize].get_or_init(|| built))
}

/// `true` iff `ρ^{T₁} ≥ −1e−10`, using the reduced blocks.
pub fn ppt_oracle(p: &EWPoint, d: u64) -> Result<bool> {
    if !(d == 2 || d == 3) {
        return Err(Error::InvalidParameters(format!("PPT predicate supports d = 2 or 3, got {d}")));
    }
    Ok(reducer(d)?.min_eigenvalue(p)? >= -PSD_TOL)
}
