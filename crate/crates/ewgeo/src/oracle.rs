//! Explicit density matrices of EW states on `(C^d)^{⊗3}`, and quantities
//! computed from them without using any closed-form geometry.
//!
//! Basis index of `|i, j, k⟩` is `i·d² + j·d + k`.

use std::sync::OnceLock;

use ewgeo_core::metric::VolumeElementCase;
use ewgeo_core::point::check_state;
use ewgeo_core::{Coord, EWPoint, Error, MetricTensor, Multiplicities, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

/// Largest subsystem dimension the oracle builds (216×216 matrices).
pub const MAX_DIMENSION: u64 = 6;

/// Threshold on `λ_α + λ_β` for the direct metric.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Eigenvalues below `−PSD_TOL` make a matrix non-PSD.
pub const PSD_TOL: f64 = 1e-10;

/// Off-diagonal threshold and sweep cap of the Hermitian eigensolver.
const EIGEN_EPS: f64 = 1e-20;
const EIGEN_MAX_ITER: usize = 100_000;

/// Hermiticity and unit-trace tolerance of [`DensityMatrix::from_matrix`].
pub const STATE_TOL: f64 = 1e-12;

/// Elements of S₃ as images of the tensor positions `(0, 1, 2)`: identity,
/// `(12)`, `(13)`, `(23)`, and the two 3-cycles.
pub const PERMUTATIONS: [[usize; 3]; 6] = [[0, 1, 2], [1, 0, 2], [2, 1, 0], [0, 2, 1], [1, 2, 0], [2, 0, 1]];
pub const SIGNS: [f64; 6] = [1.0, -1.0, -1.0, -1.0, 1.0, 1.0];

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);

fn check_dimension(d: u64) -> Result<usize> {
    if !(2..=MAX_DIMENSION).contains(&d) {
        return Err(Error::InvalidParameters(format!("oracle dimension d = {d} outside 2..={MAX_DIMENSION}")));
    }
    Ok(d as usize)
}

fn digits(idx: usize, d: usize) -> [usize; 3] {
    [idx / (d * d), (idx / d) % d, idx % d]
}

fn index(t: [usize; 3], d: usize) -> usize {
    (t[0] * d + t[1]) * d + t[2]
}

/// The six operators `V_π`, moving the factor at position `a` to `π(a)`,
/// in the order of [`PERMUTATIONS`].
pub fn permutation_operators(d: u64) -> Result<[CMatrix; 6]> {
    let d = check_dimension(d)?;
    let n = d * d * d;
    Ok(PERMUTATIONS.map(|pi| {
        let mut v = CMatrix::zeros(n, n);
        for col in 0..n {
            let src = digits(col, d);
            let mut dst = [0; 3];
            for a in 0..3 {
                dst[pi[a]] = src[a];
            }
            v[(index(dst, d), col)] = C1;
        }
        v
    }))
}

/// Permutation operators, S₃ isotypic projectors and the para-block
/// generators for one `d`.
#[derive(Debug, Clone)]
pub struct CommutantBasis {
    pub d: u64,
    pub multiplicities: Multiplicities,
    pub permutations: [CMatrix; 6],
    pub p_plus: CMatrix,
    pub p_minus: CMatrix,
    pub p_zero: CMatrix,
    pub sigma: [CMatrix; 3],
}

impl CommutantBasis {
    pub fn build(d: u64) -> Result<Self> {
        let permutations = permutation_operators(d)?;
        let n = permutations[0].nrows();
        let mut p_plus = CMatrix::zeros(n, n);
        let mut p_minus = CMatrix::zeros(n, n);
        for (v, s) in permutations.iter().zip(SIGNS) {
            p_plus += v;
            p_minus += v * Complex64::from(s);
        }
        p_plus /= Complex64::from(6.0);
        p_minus /= Complex64::from(6.0);
        let p_zero = CMatrix::identity(n, n) - &p_plus - &p_minus;

        let s3 = &p_zero * &permutations[1] * &p_zero;
        let s1 = (&p_zero * &permutations[3] * &p_zero * Complex64::from(2.0) + &s3) / Complex64::from(3f64.sqrt());
        let s2 = (&s1 * &s3 - &s3 * &s1) * Complex64::new(0.0, 0.5);
        let basis = Self {
            d,
            multiplicities: Multiplicities::for_dimension(d)?,
            permutations,
            p_plus,
            p_minus,
            p_zero,
            sigma: [s1, s2, s3],
        };
        let dev = (&basis.sigma[0] * &basis.sigma[0] - &basis.p_zero).camax();
        if dev > 1e-10 {
            return Err(Error::NonConvergence(format!("para-block generators fail Σ₁² = P₀ by {dev:e}")));
        }
        Ok(basis)
    }

    pub fn size(&self) -> usize {
        self.p_zero.nrows()
    }

    /// Largest deviation from the projector and generator algebra.
    pub fn algebra_deviation(&self) -> f64 {
        let n = self.size();
        let id = CMatrix::identity(n, n);
        let projectors = [&self.p_plus, &self.p_minus, &self.p_zero];
        let mut dev: f64 = (projectors.iter().fold(CMatrix::zeros(n, n), |acc, p| acc + *p) - id).camax();
        for (a, p) in projectors.iter().enumerate() {
            dev = dev.max((*p * *p - *p).camax());
            dev = dev.max((p.adjoint() - *p).camax());
            for q in &projectors[..a] {
                dev = dev.max((*p * *q).camax());
            }
        }
        for i in 0..3 {
            let s = &self.sigma[i];
            dev = dev.max((s.adjoint() - s).camax());
            dev = dev.max(s.trace().norm());
            dev = dev.max((&self.p_zero * s - s).camax());
            for j in 0..3 {
                let anti = s * &self.sigma[j] + &self.sigma[j] * s;
                let want = if i == j { self.p_zero.clone() * Complex64::from(2.0) } else { CMatrix::zeros(n, n) };
                dev = dev.max((anti - want).camax());
            }
        }
        dev
    }

    /// `∂ρ/∂c` for a Cartesian coordinate `c`.
    pub fn derivative(&self, c: Coord) -> Result<CMatrix> {
        let m = self.multiplicities;
        let half_zero = Complex64::from(1.0 / (2.0 * m.nu_zero as f64));
        let para = &self.p_zero * half_zero;
        Ok(match c {
            Coord::RMinus if m.nu_minus > 0 => &self.p_minus / Complex64::from(m.nu_minus as f64) - para,
            Coord::RMinus => -para,
            Coord::RPlus => &self.p_plus / Complex64::from(m.nu_plus as f64) - para,
            Coord::R1 => &self.sigma[0] * half_zero,
            Coord::R2 => &self.sigma[1] * half_zero,
            Coord::R3 => &self.sigma[2] * half_zero,
            other => return Err(Error::InvalidParameters(format!("no constant derivative for {}", other.name()))),
        })
    }

    /// Matrices `B` with `ρ = Σ c_k B_k` for `c = (r₊, r₋, r₀, r₁, r₂, r₃)`.
    pub fn linear_basis(&self) -> [CMatrix; 6] {
        let m = self.multiplicities;
        let n = self.size();
        let half_zero = Complex64::from(1.0 / (2.0 * m.nu_zero as f64));
        [
            &self.p_plus / Complex64::from(m.nu_plus as f64),
            if m.nu_minus > 0 { &self.p_minus / Complex64::from(m.nu_minus as f64) } else { CMatrix::zeros(n, n) },
            &self.p_zero * half_zero,
            &self.sigma[0] * half_zero,
            &self.sigma[1] * half_zero,
            &self.sigma[2] * half_zero,
        ]
    }
}

/// Coefficients of `p` against [`CommutantBasis::linear_basis`].
pub fn linear_coefficients(p: &EWPoint) -> [f64; 6] {
    [p.r_plus, p.r_minus, p.r0(), p.r[0], p.r[1], p.r[2]]
}

/// Memoized basis for `d`; built once per process.
pub fn basis(d: u64) -> Result<&'static CommutantBasis> {
    static CACHE: [OnceLock<CommutantBasis>; MAX_DIMENSION as usize + 1] = [const { OnceLock::new() }; MAX_DIMENSION as usize + 1];
    let i = check_dimension(d)?;
    if let Some(b) = CACHE[i].get() {
        return Ok(b);
    }
    let built = CommutantBasis::build(d)?;
    Ok(CACHE[i].get_or_init(|| built))
}

pub fn projectors(d: u64) -> Result<(CMatrix, CMatrix, CMatrix)> {
    let b = basis(d)?;
    Ok((b.p_plus.clone(), b.p_minus.clone(), b.p_zero.clone()))
}

pub fn sigma_operators(d: u64) -> Result<[CMatrix; 3]> {
    Ok(basis(d)?.sigma.clone())
}

/// Hermitian unit-trace `d³ × d³` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    d: u64,
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn from_matrix(d: u64, matrix: CMatrix) -> Result<Self> {
        let n = check_dimension(d)?.pow(3);
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::InvalidParameters(format!("expected a {n}×{n} matrix for d = {d}")));
        }
        let herm = (matrix.adjoint() - &matrix).camax();
        if herm > STATE_TOL {
            return Err(Error::InvalidParameters(format!("matrix not Hermitian (deviation {herm:e})")));
        }
        let tr = matrix.trace();
        if (tr - C1).norm() > STATE_TOL {
            return Err(Error::InvalidParameters(format!("trace {} differs from 1", tr.re)));
        }
        Ok(Self { d, matrix })
    }

    pub fn d(&self) -> u64 {
        self.d
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Ascending eigenvalues and the matching eigenvector columns.
    pub fn eigen(&self) -> (Vec<f64>, CMatrix) {
        hermitian_eigen(&self.matrix)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigen().0
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    fn ensure_psd(&self) -> Result<()> {
        let m = self.min_eigenvalue();
        if m < -PSD_TOL {
            return Err(Error::InvalidParameters(format!("matrix is not positive semidefinite (eigenvalue {m:e})")));
        }
        Ok(())
    }
}

/// Ascending eigen-decomposition of a Hermitian matrix.
///
/// nalgebra's default stopping rule leaves residuals near 1e-5 on these
/// matrices, so the off-diagonal threshold is set well below machine epsilon.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let e = SymmetricEigen::try_new(m.clone(), EIGEN_EPS, EIGEN_MAX_ITER).unwrap_or_else(|| m.clone().symmetric_eigen());
    let mut order: Vec<usize> = (0..e.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
    let values = order.iter().map(|&i| e.eigenvalues[i]).collect();
    let vectors = CMatrix::from_columns(&order.iter().map(|&i| e.eigenvectors.column(i).into_owned()).collect::<Vec<_>>());
    (values, vectors)
}

pub fn min_hermitian_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigen(m).0[0]
}

/// `ρ = r₊P₊/ν₊ + r₋P₋/ν₋ + (r₀P₀ + r·Σ)/(2ν₀)`.
pub fn density_matrix(p: &EWPoint, d: u64) -> Result<DensityMatrix> {
    check_state(p, d)?;
    let b = basis(d)?;
    let c = linear_coefficients(p);
    let mut m = CMatrix::zeros(b.size(), b.size());
    for (ck, bk) in c.iter().zip(b.linear_basis().iter()) {
        m += bk * Complex64::from(*ck);
    }
    Ok(DensityMatrix { d, matrix: m })
}

/// SD metric from the spectral formula `g_ij = 2 Σ Re(⟨α|∂_iρ|β⟩⟨β|∂_jρ|α⟩)/(λ_α+λ_β)`.
///
/// `d = 2` yields the four qubit coordinates, otherwise all five.
pub fn sd_tensor_direct(p: &EWPoint, d: u64) -> Result<MetricTensor> {
    let rho = density_matrix(p, d)?;
    let b = basis(d)?;
    let case = if d == 2 { VolumeElementCase::Qubit } else { VolumeElementCase::General };
    let labels = case.cartesian_labels();
    let derivatives = labels.iter().map(|&c| b.derivative(c)).collect::<Result<Vec<_>>>()?;
    MetricTensor::new(labels.to_vec(), spectral_metric(rho.matrix(), &derivatives)?)
}

/// SD metric components of a Hermitian family with tangent vectors `derivatives` at `rho`.
pub fn spectral_metric(rho: &CMatrix, derivatives: &[CMatrix]) -> Result<DMatrix<f64>> {
    let (lambda, u) = hermitian_eigen(rho);
    let n = lambda.len();
    let min_pair = 2.0 * lambda[0];
    if min_pair < DEGENERACY_TOL {
        return Err(Error::DegenerateSpectrum(min_pair));
    }
    let ud = u.adjoint();
    let rotated: Vec<CMatrix> = derivatives.iter().map(|dm| &ud * dm * &u).collect();
    let mut inv = DMatrix::<f64>::zeros(n, n);
    for a in 0..n {
        for bb in 0..n {
            inv[(a, bb)] = 1.0 / (lambda[a] + lambda[bb]);
        }
    }
    let k = derivatives.len();
    let mut g = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        for j in 0..=i {
            let mut s = 0.0;
            for (x, (di, dj)) in rotated[i].iter().zip(rotated[j].iter()).enumerate() {
                s += (di * dj.conj()).re * inv[(x % n, x / n)];
            }
            g[(i, j)] = 2.0 * s;
            g[(j, i)] = 2.0 * s;
        }
    }
    Ok(g)
}

fn psd_sqrt(m: &DensityMatrix) -> CMatrix {
    let (vals, u) = m.eigen();
    let diag = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&v| Complex64::from(v.max(0.0).sqrt())),
    ));
    &u * diag * u.adjoint()
}

/// Fidelity `F = (tr √(√ρ₁ ρ₂ √ρ₁))²` and Bures distance squared `2 − 2√F`.
pub fn fidelity_bures(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<(f64, f64)> {
    if rho1.d != rho2.d {
        return Err(Error::InvalidParameters("fidelity of states with different dimensions".into()));
    }
    rho1.ensure_psd()?;
    rho2.ensure_psd()?;
    // √F is the trace norm of √ρ₁√ρ₂; singular values avoid square roots of
    // rounding noise in vanishing eigenvalues
    let product = psd_sqrt(rho1) * psd_sqrt(rho2);
    let root_f: f64 = product.svd(false, false).singular_values.iter().sum();
    let root_f = root_f.min(1.0);
    Ok((root_f * root_f, 2.0 - 2.0 * root_f))
}

/// Transpose on the first tensor factor.
pub fn partial_transpose(m: &CMatrix, d: u64) -> Result<CMatrix> {
    let du = check_dimension(d)?;
    let n = du * du * du;
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::InvalidParameters(format!("expected a {n}×{n} matrix for d = {d}")));
    }
    let mut out = CMatrix::from_element(n, n, C0);
    for row in 0..n {
        let [i, j, k] = digits(row, du);
        for col in 0..n {
            let [i2, j2, k2] = digits(col, du);
            out[(row, col)] = m[(index([i2, j, k], du), index([i, j2, k2], du))];
        }
    }
    Ok(out)
}

/// Minimum eigenvalue of `ρ^{T₁}` from the full `d³ × d³` matrix.
pub fn partial_transpose_min_eig(p: &EWPoint, d: u64) -> Result<f64> {
    let rho = density_matrix(p, d)?;
    Ok(min_hermitian_eigenvalue(&partial_transpose(rho.matrix(), d)?))
}

fn trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    // tr(AB) = Σ A_ij B_ji; real for Hermitian A, B
    let mut s = C0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            s += a[(i, j)] * b[(j, i)];
        }
    }
    s.re
}

/// Projection onto the EW family: `(tr ρP₋, tr ρP₊, tr ρΣ₁, tr ρΣ₂, tr ρΣ₃)`.
pub fn twirl(rho: &DensityMatrix) -> Result<EWPoint> {
    let b = basis(rho.d)?;
    let r_minus = if b.multiplicities.nu_minus > 0 { trace_product(&rho.matrix, &b.p_minus) } else { 0.0 };
    Ok(EWPoint::new(
        r_minus,
        trace_product(&rho.matrix, &b.p_plus),
        [
            trace_product(&rho.matrix, &b.sigma[0]),
            trace_product(&rho.matrix, &b.sigma[1]),
            trace_product(&rho.matrix, &b.sigma[2]),
        ],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ewgeo_core::metric::sd_tensor_cartesian;
    use ewgeo_core::point::spectrum;

    #[test]
    fn permutation_traces() {
        for d in 2..=4u64 {
            let v = permutation_operators(d).unwrap();
            let n = (d * d * d) as usize;
            assert_eq!(v[0], CMatrix::identity(n, n));
            for t in 1..4 {
                assert_relative_eq!(v[t].trace().re, (d * d) as f64);
            }
            for c in 4..6 {
                assert_relative_eq!(v[c].trace().re, d as f64);
            }
        }
        assert!(permutation_operators(1).is_err());
        assert!(permutation_operators(7).is_err());
    }

    #[test]
    fn projector_traces_and_algebra() {
        for d in 2..=4u64 {
            let b = basis(d).unwrap();
            let m = b.multiplicities;
            assert_relative_eq!(b.p_plus.trace().re, m.nu_plus as f64, epsilon = 1e-12);
            assert_relative_eq!(b.p_minus.trace().re, m.nu_minus as f64, epsilon = 1e-12);
            assert_relative_eq!(b.p_zero.trace().re, 2.0 * m.nu_zero as f64, epsilon = 1e-12);
            assert!(b.algebra_deviation() < 1e-12, "d = {d}: {}", b.algebra_deviation());
        }
        assert!(basis(2).unwrap().p_minus.camax() == 0.0);
    }

    #[test]
    fn maximally_mixed_state() {
        let p = EWPoint::new(1.0 / 27.0, 10.0 / 27.0, [0.0; 3]);
        let rho = density_matrix(&p, 3).unwrap();
        let id = CMatrix::identity(27, 27) / Complex64::from(27.0);
        assert!((rho.matrix() - id).camax() < 1e-15);
        assert_relative_eq!(partial_transpose_min_eig(&p, 3).unwrap(), 1.0 / 27.0, epsilon = 1e-14);
    }

    #[test]
    fn eigenvalues_match_spectrum() {
        for (p, d) in [
            (EWPoint::qubit(0.25, [0.0, 0.0, 0.75]), 2),
            (EWPoint::new(0.1, 0.3, [0.1, 0.2, 0.1]), 3),
            (EWPoint::new(0.2, 0.2, [-0.3, 0.1, 0.2]), 4),
        ] {
            let got = density_matrix(&p, d).unwrap().eigenvalues();
            let mut want = spectrum(&p, d).unwrap().expanded();
            want.sort_by(f64::total_cmp);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-12, "{g} vs {w}");
            }
        }
    }

    #[test]
    fn direct_tensor_matches_closed_form() {
        let p = EWPoint::new(0.1, 0.3, [0.1, 0.2, 0.1]);
        let dev = sd_tensor_direct(&p, 3)
            .unwrap()
            .max_relative_deviation(&sd_tensor_cartesian(&p, VolumeElementCase::General).unwrap(), 1e-12)
            .unwrap();
        assert!(dev < 1e-8, "{dev}");
        let q = EWPoint::qubit(0.25, [0.05, 0.05, 0.05]);
        let dev = sd_tensor_direct(&q, 2)
            .unwrap()
            .max_relative_deviation(&sd_tensor_cartesian(&q, VolumeElementCase::Qubit).unwrap(), 1e-12)
            .unwrap();
        assert!(dev < 1e-8, "{dev}");
        let origin = sd_tensor_direct(&EWPoint::qubit(0.25, [0.0; 3]), 2).unwrap();
        assert_relative_eq!(origin.component(Coord::RPlus, Coord::RPlus).unwrap(), 16.0 / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn degenerate_spectrum_is_rejected() {
        let p = EWPoint::new(0.0, 0.5, [0.1, 0.0, 0.0]);
        assert!(matches!(sd_tensor_direct(&p, 3), Err(Error::DegenerateSpectrum(_))));
    }

    #[test]
    fn commuting_fidelity() {
        let a = density_matrix(&EWPoint::qubit(1.0, [0.0; 3]), 2).unwrap();
        let b = density_matrix(&EWPoint::qubit(0.25, [0.0; 3]), 2).unwrap();
        let (f, db2) = fidelity_bures(&a, &b).unwrap();
        assert_relative_eq!(f, 0.25, max_relative = 1e-12);
        assert_relative_eq!(db2, 1.0, max_relative = 1e-12);
        let (f, db2) = fidelity_bures(&b, &b).unwrap();
        assert_relative_eq!(f, 1.0, max_relative = 1e-12);
        assert!(db2.abs() < 1e-12);
    }

    #[test]
    fn twirl_of_product_basis_state() {
        let mut m = CMatrix::zeros(8, 8);
        m[(0, 0)] = C1;
        let p = twirl(&DensityMatrix::from_matrix(2, m).unwrap()).unwrap();
        assert_eq!(p.r_minus, 0.0);
        assert_relative_eq!(p.r_plus, 1.0, epsilon = 1e-15);
        assert!(p.r.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn twirl_fixes_ew_states() {
        let p = EWPoint::new(0.15, 0.35, [0.2, -0.1, 0.25]);
        let q = twirl(&density_matrix(&p, 3).unwrap()).unwrap();
        assert!((q.r_minus - p.r_minus).abs() < 1e-12 && (q.r_plus - p.r_plus).abs() < 1e-12);
        for k in 0..3 {
            assert!((q.r[k] - p.r[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn from_matrix_rejects_bad_input() {
        assert!(DensityMatrix::from_matrix(2, CMatrix::identity(8, 8)).is_err());
        assert!(DensityMatrix::from_matrix(2, CMatrix::identity(4, 4)).is_err());
        let mut m = CMatrix::identity(8, 8) / Complex64::from(8.0);
        m[(0, 1)] = Complex64::new(0.0, 0.1);
        assert!(DensityMatrix::from_matrix(2, m).is_err());
    }
}
