//! Closed-form SD metric tensors and volume elements of the EW family.
//!
//! The SD metric is four times the Bures metric. In the spherical chart
//! `(r₋, r₊, R, θ, φ)` the nonzero components are, with `D = (r₀+R)(r₀−R)`:
//!
//! ```text
//! g_{r₋r₋} = 1/r₋ + r₀/D     g_{r₋r₊} = r₀/D     g_{r₋R} = R/D
//! g_{r₊r₊} = 1/r₊ + r₀/D     g_{r₊R}  = R/D      g_{RR}  = r₀/D
//! g_{θθ}   = R²/r₀           g_{φφ}   = R² sin²θ / r₀
//! ```
//!
//! The same tensor serves every subsystem dimension `d ≥ 3`; the three-qubit
//! tensor is the `r₋ = 0` slice with the `r₋` row and column removed.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::DMatrix;

use crate::point::{to_spherical, EWPoint, SphericalPoint};
use crate::{Error, Result};

/// Coordinate labels for tensor rows and columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Coord {
    RMinus,
    RPlus,
    Radius,
    Theta,
    Phi,
    R1,
    R2,
    R3,
}

impl Coord {
    pub fn name(self) -> &'static str {
        match self {
            Coord::RMinus => "r_minus",
            Coord::RPlus => "r_plus",
            Coord::Radius => "R",
            Coord::Theta => "theta",
            Coord::Phi => "phi",
            Coord::R1 => "r1",
            Coord::R2 => "r2",
            Coord::R3 => "r3",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "r_minus" => Coord::RMinus,
            "r_plus" => Coord::RPlus,
            "R" => Coord::Radius,
            "theta" => Coord::Theta,
            "phi" => Coord::Phi,
            "r1" => Coord::R1,
            "r2" => Coord::R2,
            "r3" => Coord::R3,
            _ => return None,
        })
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Three-qubit family (`r₋ ≡ 0`, four parameters) or `d ≥ 3` (five parameters).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VolumeElementCase {
    Qubit,
    General,
}

impl VolumeElementCase {
    pub fn name(self) -> &'static str {
        match self {
            VolumeElementCase::Qubit => "qubit",
            VolumeElementCase::General => "general",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "qubit" => Some(VolumeElementCase::Qubit),
            "general" => Some(VolumeElementCase::General),
            _ => None,
        }
    }

    /// Cartesian coordinate labels of this family.
    pub fn cartesian_labels(self) -> &'static [Coord] {
        match self {
            VolumeElementCase::Qubit => &[Coord::RPlus, Coord::R1, Coord::R2, Coord::R3],
            VolumeElementCase::General => {
                &[Coord::RMinus, Coord::RPlus, Coord::R1, Coord::R2, Coord::R3]
            }
        }
    }

    pub fn spherical_labels(self) -> &'static [Coord] {
        match self {
            VolumeElementCase::Qubit => &[Coord::RPlus, Coord::Radius, Coord::Theta, Coord::Phi],
            VolumeElementCase::General => {
                &[Coord::RMinus, Coord::RPlus, Coord::Radius, Coord::Theta, Coord::Phi]
            }
        }
    }

    /// Labels of the block used for boundary areas.
    pub fn boundary_labels(self) -> &'static [Coord] {
        match self {
            VolumeElementCase::Qubit => &[Coord::R1, Coord::R2, Coord::R3],
            VolumeElementCase::General => &[Coord::RPlus, Coord::R1, Coord::R2, Coord::R3],
        }
    }
}

/// A symmetric matrix of metric components with labeled rows and columns.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricTensor {
    labels: Vec<Coord>,
    matrix: DMatrix<f64>,
}

impl MetricTensor {
    pub fn new(labels: Vec<Coord>, matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != labels.len() || matrix.ncols() != labels.len() {
            return Err(Error::invalid(format!(
                "{} labels for a {}x{} matrix",
                labels.len(),
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { labels, matrix })
    }

    pub fn labels(&self) -> &[Coord] {
        &self.labels
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn index_of(&self, c: Coord) -> Option<usize> {
        self.labels.iter().position(|&l| l == c)
    }

    /// Component `g_{ab}` by label.
    pub fn component(&self, a: Coord, b: Coord) -> Option<f64> {
        Some(self.matrix[(self.index_of(a)?, self.index_of(b)?)])
    }

    /// Rows and columns restricted to `keep`, in that order.
    pub fn submatrix(&self, keep: &[Coord]) -> Result<Self> {
        let idx: Vec<usize> = keep
            .iter()
            .map(|&c| {
                self.index_of(c)
                    .ok_or_else(|| Error::invalid(format!("tensor has no coordinate {c}")))
            })
            .collect::<Result<_>>()?;
        let m = DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.matrix[(idx[i], idx[j])]);
        Ok(Self { labels: keep.to_vec(), matrix: m })
    }

    pub fn determinant(&self) -> f64 {
        self.matrix.clone().determinant()
    }

    /// `sqrt(det g)`; the Riemannian volume density in this chart.
    pub fn sqrt_det(&self) -> f64 {
        libm::sqrt(self.determinant())
    }

    pub fn is_positive_definite(&self) -> bool {
        self.matrix.clone().cholesky().is_some()
    }

    pub fn max_asymmetry(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..i {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)]).abs());
            }
        }
        worst
    }

    /// Rescales SD components to the Bures normalization (factor 1/4).
    pub fn to_bures(&self) -> Self {
        Self { labels: self.labels.clone(), matrix: &self.matrix * 0.25 }
    }

    /// Largest componentwise relative deviation `|a−b| / max(|a|, |b|, floor)`.
    pub fn max_relative_deviation(&self, other: &Self, floor: f64) -> Result<f64> {
        if self.labels != other.labels {
            return Err(Error::invalid("tensors carry different coordinate labels"));
        }
        let mut worst = 0.0f64;
        for (a, b) in self.matrix.iter().zip(other.matrix.iter()) {
            let scale = a.abs().max(b.abs()).max(floor);
            worst = worst.max((a - b).abs() / scale);
        }
        Ok(worst)
    }
}

fn require_qubit_slice(r_minus: f64, case: VolumeElementCase) -> Result<()> {
    if case == VolumeElementCase::Qubit && r_minus != 0.0 {
        return Err(Error::invalid("qubit-case points must carry r_minus = 0"));
    }
    Ok(())
}

/// Common interior test: `r₊ > 0`, `r₀ > 0`, `R < r₀` and, for the general
/// case, `r₋ > 0`.
fn require_interior(r_minus: f64, r_plus: f64, r0: f64, gap: f64, case: VolumeElementCase) -> Result<()> {
    require_qubit_slice(r_minus, case)?;
    if case == VolumeElementCase::General && !(r_minus > 0.0) {
        return Err(Error::boundary(format!("r_minus = {r_minus} is not > 0")));
    }
    if !(r_plus > 0.0) {
        return Err(Error::boundary(format!("r_plus = {r_plus} is not > 0")));
    }
    if !(r0 > 0.0) {
        return Err(Error::boundary(format!("r0 = {r0} is not > 0")));
    }
    if !(gap > 0.0) {
        return Err(Error::boundary(format!("r0² − R² = {gap} is not > 0")));
    }
    Ok(())
}

/// Drops the `r₋` row and column for the qubit case.
fn finish(full: DMatrix<f64>, labels: &[Coord], case: VolumeElementCase) -> MetricTensor {
    match case {
        VolumeElementCase::General => MetricTensor { labels: labels.to_vec(), matrix: full },
        VolumeElementCase::Qubit => MetricTensor {
            labels: labels[1..].to_vec(),
            matrix: full.remove_row(0).remove_column(0),
        },
    }
}

/// SD tensor in the spherical chart.
///
/// At `R = 0` or `θ ∈ {0, π}` the chart is degenerate (zero angular
/// components); the call still succeeds there.
pub fn sd_tensor_spherical(s: &SphericalPoint, case: VolumeElementCase) -> Result<MetricTensor> {
    let g = spherical_components(s, case)?;
    Ok(finish(g, VolumeElementCase::General.spherical_labels(), case))
}

/// Full 5x5 spherical component matrix; the `r₋` row is zero in the qubit case.
fn spherical_components(s: &SphericalPoint, case: VolumeElementCase) -> Result<DMatrix<f64>> {
    if !(s.radius >= 0.0) || !(0.0..=core::f64::consts::PI).contains(&s.theta) {
        return Err(Error::invalid("spherical point needs R ≥ 0 and θ ∈ [0, π]"));
    }
    let r0 = s.r0();
    let radius = s.radius;
    let d = (r0 + radius) * (r0 - radius);
    require_interior(s.r_minus, s.r_plus, r0, d, case)?;

    let mut g = DMatrix::zeros(5, 5);
    let (im, ip, ir, it, ifi) = (0, 1, 2, 3, 4);
    g[(ip, ip)] = 0.5 * (2.0 / s.r_plus + 1.0 / (r0 + radius) - 1.0 / (radius - r0));
    if case == VolumeElementCase::General {
        g[(im, im)] = 0.5 * (2.0 / s.r_minus + 1.0 / (r0 + radius) - 1.0 / (radius - r0));
        g[(im, ip)] = r0 / d;
        g[(ip, im)] = r0 / d;
        g[(im, ir)] = radius / d;
        g[(ir, im)] = radius / d;
    }
    g[(ip, ir)] = radius / d;
    g[(ir, ip)] = radius / d;
    g[(ir, ir)] = r0 / d;
    g[(it, it)] = radius * radius / r0;
    let st = libm::sin(s.theta);
    g[(ifi, ifi)] = radius * radius * st * st / r0;
    Ok(g)
}

/// SD tensor in the original coordinates `(r₋, r₊, r₁, r₂, r₃)`.
///
/// Evaluated from the expanded pullback of the spherical tensor, which is
/// smooth through `R = 0`:
/// `g_{r±,r_k} = r_k/D` and `g_{r_k r_l} = δ_kl/r₀ + r_k r_l/(r₀ D)`.
pub fn sd_tensor_cartesian(p: &EWPoint, case: VolumeElementCase) -> Result<MetricTensor> {
    let r0 = p.r0();
    let d = p.ball_gap();
    require_interior(p.r_minus, p.r_plus, r0, d, case)?;

    let mut g = DMatrix::zeros(5, 5);
    let simplex = r0 / d;
    g[(0, 0)] = 1.0 / p.r_minus + simplex;
    g[(1, 1)] = 1.0 / p.r_plus + simplex;
    g[(0, 1)] = simplex;
    g[(1, 0)] = simplex;
    for k in 0..3 {
        let c = p.r[k] / d;
        for i in 0..2 {
            g[(i, 2 + k)] = c;
            g[(2 + k, i)] = c;
        }
        for l in 0..3 {
            let delta = if k == l { 1.0 / r0 } else { 0.0 };
            g[(2 + k, 2 + l)] = delta + p.r[k] * p.r[l] / (r0 * d);
        }
    }
    if case == VolumeElementCase::Qubit {
        g[(0, 0)] = 0.0;
    }
    Ok(finish(g, VolumeElementCase::General.cartesian_labels(), case))
}

/// Jacobian `∂(r₋, r₊, R, θ, φ) / ∂(r₋, r₊, r₁, r₂, r₃)`; needs `R > 0`, `sinθ > 0`.
pub fn spherical_jacobian(p: &EWPoint) -> Result<DMatrix<f64>> {
    let [r1, r2, r3] = p.r;
    let rho_sq = r2 * r2 + r3 * r3;
    let radius_sq = rho_sq + r1 * r1;
    if !(rho_sq > 0.0) {
        return Err(Error::invalid("spherical chart degenerate on the r1 axis"));
    }
    let radius = libm::sqrt(radius_sq);
    let rho = libm::sqrt(rho_sq);
    let mut j = DMatrix::zeros(5, 5);
    j[(0, 0)] = 1.0;
    j[(1, 1)] = 1.0;
    j[(2, 2)] = r1 / radius;
    j[(2, 3)] = r2 / radius;
    j[(2, 4)] = r3 / radius;
    j[(3, 2)] = -rho / radius_sq;
    j[(3, 3)] = r1 * r2 / (radius_sq * rho);
    j[(3, 4)] = r1 * r3 / (radius_sq * rho);
    j[(4, 3)] = -r3 / rho_sq;
    j[(4, 4)] = r2 / rho_sq;
    Ok(j)
}

/// Chain-rule route to the Cartesian tensor: `Jᵀ g_sph J`.
pub fn sd_tensor_cartesian_via_chart(p: &EWPoint, case: VolumeElementCase) -> Result<MetricTensor> {
    let g = spherical_components(&to_spherical(p), case)?;
    let j = spherical_jacobian(p)?;
    let pulled = j.transpose() * g * j;
    Ok(finish(pulled, VolumeElementCase::General.cartesian_labels(), case))
}

/// The quadratic as printed in the closed-form volume elements,
/// `−r₁² − r₂² − (r₀ + r₃)(−r₀ + r₃)`; algebraically `r₀² − R²`.
pub fn printed_quadratic(p: &EWPoint) -> f64 {
    let [r1, r2, r3] = p.r;
    let r0 = p.r0();
    -r1 * r1 - r2 * r2 - (r0 + r3) * (-r0 + r3)
}

/// `sqrt(det g)` in the original coordinates:
/// qubit `1/(r₀ sqrt(r₊(r₀²−R²)))`, general `1/(r₀ sqrt(r₋ r₊ (r₀²−R²)))`.
pub fn volume_element(p: &EWPoint, case: VolumeElementCase) -> Result<f64> {
    let r0 = p.r0();
    let gap = p.ball_gap();
    require_interior(p.r_minus, p.r_plus, r0, gap, case)?;
    let inner = match case {
        VolumeElementCase::Qubit => p.r_plus * gap,
        VolumeElementCase::General => p.r_minus * p.r_plus * gap,
    };
    Ok(1.0 / (r0 * libm::sqrt(inner)))
}

/// Sub-block used for boundary areas, and `h = sqrt(det)` of it.
///
/// Qubit: rows `(r₁, r₂, r₃)`. General: rows `(r₊, r₁, r₂, r₃)`. Only the
/// components inside the block must be finite, so `r₋ = 0` is accepted in
/// the general case and `r₊ = 0` in the qubit case.
pub fn boundary_subtensor(p: &EWPoint, case: VolumeElementCase) -> Result<(MetricTensor, f64)> {
    require_qubit_slice(p.r_minus, case)?;
    let r0 = p.r0();
    let gap = p.ball_gap();
    if !(r0 > 0.0) || !(gap > 0.0) {
        return Err(Error::boundary(format!("r0 = {r0}, r0² − R² = {gap}")));
    }
    if case == VolumeElementCase::General && !(p.r_plus > 0.0) {
        return Err(Error::boundary(format!("r_plus = {} is not > 0", p.r_plus)));
    }
    let labels = case.boundary_labels();
    let n = labels.len();
    let offset = n - 3;
    let mut m = DMatrix::zeros(n, n);
    if case == VolumeElementCase::General {
        m[(0, 0)] = 1.0 / p.r_plus + r0 / gap;
        for k in 0..3 {
            m[(0, 1 + k)] = p.r[k] / gap;
            m[(1 + k, 0)] = p.r[k] / gap;
        }
    }
    for k in 0..3 {
        for l in 0..3 {
            let delta = if k == l { 1.0 / r0 } else { 0.0 };
            m[(offset + k, offset + l)] = delta + p.r[k] * p.r[l] / (r0 * gap);
        }
    }
    let t = MetricTensor { labels: labels.to_vec(), matrix: m };
    let det = t.determinant();
    if !(det > 0.0) {
        return Err(Error::boundary(format!("boundary block determinant {det} is not > 0")));
    }
    Ok((t, libm::sqrt(det)))
}

/// Fisher metric of the commutative (r = 0) slice, `[[1/r₋+1/r₀, 1/r₀], [1/r₀, 1/r₊+1/r₀]]`.
pub fn abelian_fisher_block(r_minus: f64, r_plus: f64) -> DMatrix<f64> {
    let r0 = 1.0 - r_minus - r_plus;
    DMatrix::from_row_slice(2, 2, &[1.0 / r_minus + 1.0 / r0, 1.0 / r0, 1.0 / r0, 1.0 / r_plus + 1.0 / r0])
}
