//! EW parameters, validation, the spherical chart and the spectrum.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use crate::{Error, Result};

/// Default slack for points produced by floating-point arithmetic.
pub const DEFAULT_SLACK: f64 = 1e-12;

/// The five EW parameters `(r₋, r₊, r₁, r₂, r₃)`.
///
/// `r₀ = 1 − r₋ − r₊` is always derived, so the simplex identity holds by
/// construction. Construction does not validate; use [`validate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EWPoint {
    pub r_minus: f64,
    pub r_plus: f64,
    pub r: [f64; 3],
}

impl EWPoint {
    pub const fn new(r_minus: f64, r_plus: f64, r: [f64; 3]) -> Self {
        Self { r_minus, r_plus, r }
    }

    /// Three-qubit point: `r₋` is exactly zero.
    pub const fn qubit(r_plus: f64, r: [f64; 3]) -> Self {
        Self::new(0.0, r_plus, r)
    }

    /// The third simplex coordinate `r₀ = 1 − r₋ − r₊`.
    #[inline]
    pub fn r0(&self) -> f64 {
        1.0 - self.r_minus - self.r_plus
    }

    #[inline]
    pub fn radius_sq(&self) -> f64 {
        self.r[0] * self.r[0] + self.r[1] * self.r[1] + self.r[2] * self.r[2]
    }

    /// `R = |(r₁, r₂, r₃)|`.
    #[inline]
    pub fn radius(&self) -> f64 {
        libm::sqrt(self.radius_sq())
    }

    /// `r₀² − R²`, the quadratic under the square root of the volume element.
    #[inline]
    pub fn ball_gap(&self) -> f64 {
        let r0 = self.r0();
        r0 * r0 - self.radius_sq()
    }

    pub fn is_valid(&self) -> bool {
        validate(self).is_valid()
    }
}

/// One violated constraint of the EW parameter domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Violation {
    NegativeRMinus(f64),
    NegativeRPlus(f64),
    NegativeR0(f64),
    /// `R` exceeds `r₀`; carries `(R², r₀²)`.
    OutsideBall { radius_sq: f64, r0_sq: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NegativeRMinus(v) => write!(f, "r_minus = {v} < 0"),
            Violation::NegativeRPlus(v) => write!(f, "r_plus = {v} < 0"),
            Violation::NegativeR0(v) => write!(f, "r0 = {v} < 0"),
            Violation::OutsideBall { radius_sq, r0_sq } => {
                write!(f, "r1²+r2²+r3² = {radius_sq} > r0² = {r0_sq}")
            }
        }
    }
}

/// Outcome of [`validate`]: empty violation list means valid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationResult {
    pub violations: Vec<Violation>,
}

impl ValidationResult {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `r₋, r₊, r₀ ≥ 0` and `r₁² + r₂² + r₃² ≤ r₀²` with exact comparisons.
pub fn validate(p: &EWPoint) -> ValidationResult {
    validate_with_slack(p, 0.0)
}

/// As [`validate`], but every inequality may be violated by up to `eps`.
pub fn validate_with_slack(p: &EWPoint, eps: f64) -> ValidationResult {
    let mut violations = Vec::new();
    let r0 = p.r0();
    if !(p.r_minus >= -eps) {
        violations.push(Violation::NegativeRMinus(p.r_minus));
    }
    if !(p.r_plus >= -eps) {
        violations.push(Violation::NegativeRPlus(p.r_plus));
    }
    if !(r0 >= -eps) {
        violations.push(Violation::NegativeR0(r0));
    }
    let radius_sq = p.radius_sq();
    let r0_sq = if r0 > 0.0 { r0 * r0 } else { 0.0 };
    if !(radius_sq <= r0_sq + eps) {
        violations.push(Violation::OutsideBall { radius_sq, r0_sq });
    }
    ValidationResult { violations }
}

/// `(r₋, r₊, R, θ, φ)` with `r₁ = R cosθ`, `r₂ = R sinθ cosφ`, `r₃ = R sinθ sinφ`.
///
/// Note the polar axis is `r₁`, not `r₃`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalPoint {
    pub r_minus: f64,
    pub r_plus: f64,
    pub radius: f64,
    pub theta: f64,
    pub phi: f64,
}

impl SphericalPoint {
    pub const fn new(r_minus: f64, r_plus: f64, radius: f64, theta: f64, phi: f64) -> Self {
        Self { r_minus, r_plus, radius, theta, phi }
    }

    #[inline]
    pub fn r0(&self) -> f64 {
        1.0 - self.r_minus - self.r_plus
    }
}

/// Cartesian to spherical. At `R = 0` the angles are set to zero.
pub fn to_spherical(p: &EWPoint) -> SphericalPoint {
    let radius = p.radius();
    if radius == 0.0 {
        return SphericalPoint::new(p.r_minus, p.r_plus, 0.0, 0.0, 0.0);
    }
    let [r1, r2, r3] = p.r;
    let theta = libm::atan2(libm::hypot(r2, r3), r1);
    let mut phi = libm::atan2(r3, r2);
    if phi < 0.0 {
        phi += 2.0 * PI;
    }
    if phi >= 2.0 * PI {
        phi = 0.0;
    }
    SphericalPoint::new(p.r_minus, p.r_plus, radius, theta, phi)
}

pub fn to_cartesian(s: &SphericalPoint) -> EWPoint {
    let (st, ct) = (libm::sin(s.theta), libm::cos(s.theta));
    let (sp, cp) = (libm::sin(s.phi), libm::cos(s.phi));
    EWPoint::new(
        s.r_minus,
        s.r_plus,
        [s.radius * ct, s.radius * st * cp, s.radius * st * sp],
    )
}

/// Dimensions of the Bose, Fermi and para sectors of `(C^d)^{⊗3}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Multiplicities {
    pub d: u64,
    pub nu_plus: u64,
    pub nu_minus: u64,
    pub nu_zero: u64,
}

impl Multiplicities {
    pub fn for_dimension(d: u64) -> Result<Self> {
        if d < 2 {
            return Err(Error::invalid("subsystem dimension d must be at least 2"));
        }
        if d > 1_000_000 {
            return Err(Error::invalid("subsystem dimension too large"));
        }
        let (d1, d2, d3) = (d, d * d, d * d * d);
        Ok(Self {
            d,
            nu_plus: (d3 + 3 * d2 + 2 * d1) / 6,
            nu_minus: (d3 + 2 * d1 - 3 * d2) / 6,
            nu_zero: (d3 - d1) / 3,
        })
    }
}

/// Eigenvalues of an EW density matrix with multiplicities.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub entries: Vec<(f64, u64)>,
}

impl Spectrum {
    pub fn weighted_sum(&self) -> f64 {
        self.entries.iter().map(|&(l, m)| l * m as f64).sum()
    }

    pub fn total_multiplicity(&self) -> u64 {
        self.entries.iter().map(|&(_, m)| m).sum()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.entries.iter().map(|&(l, _)| l).fold(f64::INFINITY, f64::min)
    }

    /// Eigenvalues expanded by multiplicity, ascending.
    pub fn expanded(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .entries
            .iter()
            .flat_map(|&(l, m)| core::iter::repeat_n(l, m as usize))
            .collect();
        out.sort_by(f64::total_cmp);
        out
    }
}

/// Checks the preconditions shared by the spectrum and density-matrix builders.
pub fn check_state(p: &EWPoint, d: u64) -> Result<Multiplicities> {
    let nu = Multiplicities::for_dimension(d)?;
    let v = validate(p);
    if let Some(first) = v.violations.first() {
        return Err(Error::InvalidParameters(alloc::format!("not an EW state: {first}")));
    }
    if nu.nu_minus == 0 && p.r_minus != 0.0 {
        return Err(Error::invalid("r_minus must be exactly 0 when d = 2"));
    }
    Ok(nu)
}

pub fn spectrum(p: &EWPoint, d: u64) -> Result<Spectrum> {
    let nu = check_state(p, d)?;
    let r0 = p.r0();
    let radius = p.radius();
    let mut entries = Vec::with_capacity(4);
    entries.push((p.r_plus / nu.nu_plus as f64, nu.nu_plus));
    if nu.nu_minus > 0 {
        entries.push((p.r_minus / nu.nu_minus as f64, nu.nu_minus));
    }
    let two_nu0 = 2.0 * nu.nu_zero as f64;
    entries.push(((r0 + radius) / two_nu0, nu.nu_zero));
    entries.push(((r0 - radius) / two_nu0, nu.nu_zero));
    Ok(Spectrum { entries })
}
