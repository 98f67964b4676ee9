//! Deterministic integration over the EW simplex.
//!
//! The volume element is integrated over the ball `R ≤ r₀` analytically,
//! which leaves smooth densities on the `(r₋, r₊)` simplex with `1/√`
//! endpoint factors. Those factors are removed by substituting `x = a + t²`
//! before handing the integrand to an adaptive Gauss–Kronrod (10/21) rule.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::metric::VolumeElementCase;
use crate::region::{Constraint, Relation};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: u64,
    pub method: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { abs: 1e-13, rel: 1e-11, max_intervals: 2000 }
    }
}

impl Tolerance {
    pub fn relative(rel: f64) -> Self {
        Self { abs: 0.0, rel, ..Self::default() }
    }
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// One 21-point Kronrod panel: `(estimate, |kronrod − gauss|)`.
fn gk21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[10];
    let mut gauss = 0.0;
    for (j, &x) in XGK[..10].iter().enumerate() {
        let dx = h * x;
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive GK21 with global bisection of the worst panel.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<QuadratureResult> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::invalid("integration limits must be finite"));
    }
    if a == b {
        return Ok(QuadratureResult { value: 0.0, error: 0.0, evaluations: 0, method: "gk21-adaptive".into() });
    }
    let mut panels: Vec<(f64, f64, f64, f64)> = Vec::new();
    let (v, e) = gk21(&mut f, a, b);
    panels.push((a, b, v, e));
    let mut evals = 21u64;
    loop {
        let value: f64 = panels.iter().map(|p| p.2).sum();
        let error: f64 = panels.iter().map(|p| p.3).sum();
        if !value.is_finite() {
            return Err(Error::NonConvergence("integrand produced a non-finite value".into()));
        }
        if error <= tol.abs.max(tol.rel * value.abs()) {
            return Ok(QuadratureResult { value, error, evaluations: evals, method: "gk21-adaptive".into() });
        }
        if panels.len() >= tol.max_intervals {
            return Err(Error::NonConvergence(alloc::format!(
                "error estimate {error:e} above tolerance after {} panels",
                panels.len()
            )));
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, p)| if p.3 > best.1 { (i, p.3) } else { best });
        let (lo, hi, _, _) = panels.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            return Err(Error::NonConvergence("panel width underflow".into()));
        }
        let (v1, e1) = gk21(&mut f, lo, mid);
        let (v2, e2) = gk21(&mut f, mid, hi);
        evals += 42;
        panels.push((lo, mid, v1, e1));
        panels.push((mid, hi, v2, e2));
        // keep summation order independent of the swap_remove history
        panels.sort_by(|x, y| x.0.total_cmp(&y.0));
    }
}

/// `∫_a^b f` for `f` with an integrable `1/√(x − a)` factor, via `x = a + t²`.
pub fn integrate_sqrt_lower<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<QuadratureResult> {
    if b <= a {
        return integrate(|_| 0.0, a, a, tol);
    }
    let mut r = integrate(|t| 2.0 * t * f(a + t * t), 0.0, libm::sqrt(b - a), tol)?;
    r.method = "gk21-adaptive+sqrt-substitution".into();
    Ok(r)
}

/// `∫_a^b f` for `f` with a `1/√(b − x)` factor, via `x = b − t²`.
pub fn integrate_sqrt_upper<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<QuadratureResult> {
    if b <= a {
        return integrate(|_| 0.0, a, a, tol);
    }
    let mut r = integrate(|t| 2.0 * t * f(b - t * t), 0.0, libm::sqrt(b - a), tol)?;
    r.method = "gk21-adaptive+sqrt-substitution".into();
    Ok(r)
}

/// Integral of the volume element over the ball `R ≤ r₀` at fixed
/// simplex coordinates: `π² r₀ / √(r₋ r₊)` (general) or `π² r₀ / √r₊` (qubit).
pub fn reduced_integrand(case: VolumeElementCase, r_minus: f64, r_plus: f64) -> f64 {
    match case {
        VolumeElementCase::General => PI * PI * (1.0 - r_minus - r_plus) / libm::sqrt(r_minus * r_plus),
        VolumeElementCase::Qubit => PI * PI * (1.0 - r_plus) / libm::sqrt(r_plus),
    }
}

/// Direct 3D quadrature of the volume element over the ball, in Cartesian
/// `(r₁, r₂, r₃)` with the `√` substitution at the ball surface. Independent
/// cross-check of [`reduced_integrand`].
pub fn ball_integral_direct(case: VolumeElementCase, r_minus: f64, r_plus: f64, tol: Tolerance) -> Result<QuadratureResult> {
    let r0 = 1.0 - r_minus - r_plus;
    let prefactor = match case {
        VolumeElementCase::General => 1.0 / (r0 * libm::sqrt(r_minus * r_plus)),
        VolumeElementCase::Qubit => 1.0 / (r0 * libm::sqrt(r_plus)),
    };
    if !(prefactor.is_finite() && r0 > 0.0) {
        return Err(Error::boundary("ball integral needs an interior simplex point"));
    }
    let mut evals = 0u64;
    let mut failure = None;
    let shell = |x: f64, y: f64, evals: &mut u64, failure: &mut Option<Error>| -> f64 {
        let b2 = r0 * r0 - x * x - y * y;
        if b2 <= 0.0 {
            return 0.0;
        }
        let b = libm::sqrt(b2);
        let w = |z: f64| prefactor / libm::sqrt((b - z) * (b + z));
        // split at 0; each half has one surface singularity
        let upper = integrate_sqrt_upper(w, 0.0, b, tol);
        let lower = integrate_sqrt_lower(w, -b, 0.0, tol);
        match (upper, lower) {
            (Ok(u), Ok(l)) => {
                *evals += u.evaluations + l.evaluations;
                u.value + l.value
            }
            (Err(e), _) | (_, Err(e)) => {
                *failure = Some(e);
                0.0
            }
        }
    };
    let plane = |x: f64, evals: &mut u64, failure: &mut Option<Error>| -> f64 {
        let a = libm::sqrt((r0 * r0 - x * x).max(0.0));
        let mut inner_evals = 0u64;
        let mut inner_fail = None;
        let r = integrate(|y| shell(x, y, &mut inner_evals, &mut inner_fail), -a, a, tol);
        *evals += inner_evals;
        if let Some(e) = inner_fail {
            *failure = Some(e);
        }
        match r {
            Ok(v) => v.value,
            Err(e) => {
                *failure = Some(e);
                0.0
            }
        }
    };
    let outer = integrate(|x| plane(x, &mut evals, &mut failure), -r0, r0, tol)?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(QuadratureResult {
        value: outer.value,
        error: outer.error,
        evaluations: evals,
        method: "nested-gk21-cartesian-ball".into(),
    })
}

/// Region of the `(r₋, r₊)` simplex bounded by linear inequalities:
/// `r₋ ∈ [r₋min, r₋max]` and `r₊` between the largest lower line and the
/// smallest upper line, each of the form `α + β r₋`, intersected with
/// `0 ≤ r₊ ≤ 1 − r₋`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MarginalRegion {
    pub r_minus_min: f64,
    pub r_minus_max: f64,
    pub lower: Vec<(f64, f64)>,
    pub upper: Vec<(f64, f64)>,
}

impl MarginalRegion {
    pub fn full() -> Self {
        Self { r_minus_min: 0.0, r_minus_max: 1.0, lower: Vec::new(), upper: Vec::new() }
    }

    /// Builds the region from constraints of degree ≤ 1 in `(r₋, r₊)` only.
    pub fn from_constraints(constraints: &[Constraint]) -> Result<Self> {
        let mut out = Self::full();
        for c in constraints {
            if !c.polynomial.is_marginal() {
                return Err(Error::invalid("constraint depends on r1, r2 or r3"));
            }
            let (mut k0, mut km, mut kp) = (0.0, 0.0, 0.0);
            for t in &c.polynomial.terms {
                let v = *t.coeff.numer() as f64 / *t.coeff.denom() as f64;
                match (t.exponents[0], t.exponents[1]) {
                    (0, 0) => k0 += v,
                    (1, 0) => km += v,
                    (0, 1) => kp += v,
                    _ => return Err(Error::invalid("only linear (r_minus, r_plus) constraints are supported")),
                }
            }
            let rhs = *c.rhs.numer() as f64 / *c.rhs.denom() as f64 - k0;
            // km·r₋ + kp·r₊ (rel) rhs
            if kp == 0.0 {
                if km == 0.0 {
                    let ok = match c.relation {
                        Relation::Le => 0.0 <= rhs,
                        Relation::Ge => 0.0 >= rhs,
                    };
                    if !ok {
                        out.r_minus_max = out.r_minus_min;
                    }
                    continue;
                }
                let bound = rhs / km;
                let is_upper = (c.relation == Relation::Le) == (km > 0.0);
                if is_upper {
                    out.r_minus_max = out.r_minus_max.min(bound);
                } else {
                    out.r_minus_min = out.r_minus_min.max(bound);
                }
            } else {
                let line = (rhs / kp, -km / kp);
                let is_upper = (c.relation == Relation::Le) == (kp > 0.0);
                if is_upper {
                    out.upper.push(line);
                } else {
                    out.lower.push(line);
                }
            }
        }
        Ok(out)
    }

    /// `r₊` interval at `r₋`, or `None` when empty.
    pub fn r_plus_range(&self, r_minus: f64) -> Option<(f64, f64)> {
        let mut lo: f64 = 0.0;
        let mut hi: f64 = 1.0 - r_minus;
        for &(a, b) in &self.lower {
            lo = lo.max(a + b * r_minus);
        }
        for &(a, b) in &self.upper {
            hi = hi.min(a + b * r_minus);
        }
        if hi > lo {
            Some((lo, hi))
        } else {
            None
        }
    }

    /// `r₋` breakpoints where the active bound lines can change.
    pub fn breakpoints(&self) -> Vec<f64> {
        let lo = self.r_minus_min.max(0.0);
        let hi = self.r_minus_max.min(1.0);
        let mut lines: Vec<(f64, f64)> = alloc::vec![(0.0, 0.0), (1.0, -1.0)];
        lines.extend(self.lower.iter().copied());
        lines.extend(self.upper.iter().copied());
        let mut pts = alloc::vec![lo, hi];
        for i in 0..lines.len() {
            for j in 0..i {
                let (a1, b1) = lines[i];
                let (a2, b2) = lines[j];
                if b1 != b2 {
                    let x = (a2 - a1) / (b1 - b2);
                    if x > lo && x < hi {
                        pts.push(x);
                    }
                }
            }
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }
}

fn combine(parts: &[QuadratureResult], method: &str) -> QuadratureResult {
    QuadratureResult {
        value: parts.iter().map(|p| p.value).sum(),
        error: parts.iter().map(|p| p.error).sum(),
        evaluations: parts.iter().map(|p| p.evaluations).sum(),
        method: method.into(),
    }
}

/// Unnormalized SD mass of a marginal region.
pub fn integrate_mass(case: VolumeElementCase, region: &MarginalRegion, tol: Tolerance) -> Result<QuadratureResult> {
    let inner_tol = Tolerance { abs: tol.abs * 1e-2, rel: tol.rel * 1e-2, ..tol };
    match case {
        VolumeElementCase::Qubit => {
            if region.r_minus_min > 0.0 || region.r_minus_max < 0.0 {
                return Ok(combine(&[], "empty"));
            }
            let Some((lo, hi)) = region.r_plus_range(0.0) else {
                return Ok(combine(&[], "empty"));
            };
            let f = |rp: f64| reduced_integrand(VolumeElementCase::Qubit, 0.0, rp);
            let r = if lo == 0.0 { integrate_sqrt_lower(f, lo, hi, tol)? } else { integrate(f, lo, hi, tol)? };
            Ok(combine(&[r], "gk21-adaptive+sqrt-substitution (qubit, r_plus)"))
        }
        VolumeElementCase::General => {
            let mut evals = 0u64;
            let mut failure: Option<Error> = None;
            // ∫ dr₊ (1 − r₋ − r₊)/√r₊ over the r₊ slice; the 1/√r₋ factor is handled outside.
            let mut slice = |rm: f64| -> f64 {
                let Some((lo, hi)) = region.r_plus_range(rm) else { return 0.0 };
                let g = |rp: f64| (1.0 - rm - rp) / libm::sqrt(rp);
                let r = if lo == 0.0 { integrate_sqrt_lower(g, lo, hi, inner_tol) } else { integrate(g, lo, hi, inner_tol) };
                match r {
                    Ok(r) => {
                        evals += r.evaluations;
                        r.value
                    }
                    Err(e) => {
                        failure = Some(e);
                        0.0
                    }
                }
            };
            let pts = region.breakpoints();
            let mut parts = Vec::new();
            for w in pts.windows(2) {
                let (a, b) = (w[0], w[1]);
                if b <= a {
                    continue;
                }
                let outer = |rm: f64| PI * PI * slice(rm) / libm::sqrt(rm);
                let r = if a == 0.0 { integrate_sqrt_lower(outer, a, b, tol)? } else { integrate(outer, a, b, tol)? };
                parts.push(r);
            }
            if let Some(e) = failure {
                return Err(e);
            }
            let mut out = combine(&parts, "nested gk21-adaptive+sqrt-substitution (r_minus, r_plus)");
            out.evaluations += evals;
            Ok(out)
        }
    }
}

/// SD probability of a marginal region: its mass over the full-simplex mass.
pub fn integrate_probability(case: VolumeElementCase, region: &MarginalRegion, tol: Tolerance) -> Result<QuadratureResult> {
    let part = integrate_mass(case, region, tol)?;
    let total = integrate_mass(case, &MarginalRegion::full(), tol)?;
    let value = part.value / total.value;
    let error = part.error / total.value + value * total.error / total.value;
    Ok(QuadratureResult {
        value,
        error,
        evaluations: part.evaluations + total.evaluations,
        method: alloc::format!("ratio of {}", part.method),
    })
}

/// Full-domain SD volumes, with the constants they are compared against.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationReport {
    pub general: QuadratureResult,
    pub qubit: QuadratureResult,
    /// `π³/2`.
    pub general_published: f64,
    /// `2π²/3` as published for the qubit family.
    pub qubit_published: f64,
    /// `π² ∫₀¹ (1 − r) r^{-1/2} dr = 4π²/3`.
    pub qubit_derived: f64,
}

pub fn normalization_constants(tol: Tolerance) -> Result<NormalizationReport> {
    Ok(NormalizationReport {
        general: integrate_mass(VolumeElementCase::General, &MarginalRegion::full(), tol)?,
        qubit: integrate_mass(VolumeElementCase::Qubit, &MarginalRegion::full(), tol)?,
        general_published: PI * PI * PI / 2.0,
        qubit_published: 2.0 * PI * PI / 3.0,
        qubit_derived: 4.0 * PI * PI / 3.0,
    })
}

/// Integral of the commutative-slice Fisher density `1/√(r₊ r₋ r₀)` over a
/// marginal region.
///
/// Uses `(r₋, r₊, r₀) = (cos²a, sin²a cos²b, sin²a sin²b)`, under which the
/// measure is `4 sin a da db` and the `b` integral is an arc length. The full
/// simplex gives `2π`.
pub fn simplex_fisher_integrate(region: &MarginalRegion, tol: Tolerance) -> Result<QuadratureResult> {
    let arc = |a: f64| -> f64 {
        let rm = libm::cos(a) * libm::cos(a);
        if rm < region.r_minus_min || rm > region.r_minus_max {
            return 0.0;
        }
        let Some((lo, hi)) = region.r_plus_range(rm) else { return 0.0 };
        // tan b = √(r₀ / r₊)
        let b = |rp: f64| libm::atan2(libm::sqrt((1.0 - rm - rp).max(0.0)), libm::sqrt(rp.max(0.0)));
        4.0 * libm::sin(a) * (b(lo) - b(hi))
    };
    let mut pts: Vec<f64> = region
        .breakpoints()
        .iter()
        .map(|&rm| libm::acos(libm::sqrt(rm.clamp(0.0, 1.0))))
        .collect();
    pts.push(0.0);
    pts.push(PI / 2.0);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut parts = Vec::new();
    for w in pts.windows(2) {
        if w[1] > w[0] {
            parts.push(integrate(arc, w[0], w[1], tol)?);
        }
    }
    Ok(combine(&parts, "gk21-adaptive on the octant chart"))
}

/// [`simplex_fisher_integrate`] divided by `2π`.
pub fn simplex_fisher_probability(region: &MarginalRegion, tol: Tolerance) -> Result<QuadratureResult> {
    let mut r = simplex_fisher_integrate(region, tol)?;
    r.value /= 2.0 * PI;
    r.error /= 2.0 * PI;
    Ok(r)
}

/// Published closed form of the triseparable upper bound,
/// `(−70 − 325√2 csc⁻¹√3 + 224√5 sin⁻¹√(5/6)) / (400π)`.
pub fn trisep_bound_closed_form() -> f64 {
    let acsc_sqrt3 = libm::asin(1.0 / libm::sqrt(3.0));
    (-70.0 - 325.0 * libm::sqrt(2.0) * acsc_sqrt3 + 224.0 * libm::sqrt(5.0) * libm::asin(libm::sqrt(5.0 / 6.0)))
        / (400.0 * PI)
}

/// Published closed form of the `r₋ ≤ 1/3` bound, `(26√2 + 54 csc⁻¹√3) / (27π)`.
pub fn bisep_bound_closed_form() -> f64 {
    (26.0 * libm::sqrt(2.0) + 54.0 * libm::asin(1.0 / libm::sqrt(3.0))) / (27.0 * PI)
}

/// The two published commutative-slice constants evaluated as printed.
pub fn simplex_constants_as_printed() -> (f64, f64) {
    let s6 = libm::sqrt(6.0);
    let s5 = libm::sqrt(5.0);
    let sep = PI / 40.0 * (-16.0 + 6.0 * s6 + 5.0 * libm::log(3.0 * (6.0 - s6) / (6.0 + s6)));
    let bisep = PI / 10.0
        * (1.0 - 5.0 * s5 + 4.0 * s6 - 10.0 * libm::log((5.0 + s5) * (6.0 - s6) / ((5.0 - s5) * (6.0 + s6))));
    (sep, bisep)
}
