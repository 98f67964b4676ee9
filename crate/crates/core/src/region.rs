//! Separability regions as conjunctions of polynomial inequalities.
//!
//! Variables are ordered `(r₋, r₊, r₁, r₂, r₃)`. Coefficients are exact
//! rationals; evaluation is in floating point and equality counts as
//! membership.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_rational::Rational64;

use crate::metric::VolumeElementCase;
use crate::point::{validate, EWPoint};
use crate::{Error, Result};

/// Number of polynomial variables.
pub const NUM_VARS: usize = 5;

/// Variable names in exponent order.
pub const VAR_NAMES: [&str; NUM_VARS] = ["r_minus", "r_plus", "r1", "r2", "r3"];

/// Label carried by the convexity constraint `r₁²+r₂²+r₃² ≤ 4(r₊−r₋)²`.
pub const CONVEXITY_LABEL: &str = "convexity";

#[inline]
pub fn point_vars(p: &EWPoint) -> [f64; NUM_VARS] {
    [p.r_minus, p.r_plus, p.r[0], p.r[1], p.r[2]]
}

#[inline]
pub fn vars_point(v: &[f64; NUM_VARS]) -> EWPoint {
    EWPoint::new(v[0], v[1], [v[2], v[3], v[4]])
}

fn to_f64(q: Rational64) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coeff: Rational64,
    pub exponents: [u32; NUM_VARS],
    coeff_f64: f64,
}

#[inline]
fn ipow(x: f64, e: u32) -> f64 {
    let mut v = 1.0;
    for _ in 0..e {
        v *= x;
    }
    v
}

impl Term {
    pub fn new(coeff: Rational64, exponents: [u32; NUM_VARS]) -> Self {
        Self { coeff, exponents, coeff_f64: to_f64(coeff) }
    }

    fn eval(&self, x: &[f64; NUM_VARS]) -> f64 {
        let mut v = self.coeff_f64;
        for (xi, &e) in x.iter().zip(&self.exponents) {
            if e > 0 {
                v *= ipow(*xi, e);
            }
        }
        v
    }
}

/// A polynomial in `(r₋, r₊, r₁, r₂, r₃)` with rational coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    pub terms: Vec<Term>,
}

impl Polynomial {
    pub fn new(terms: Vec<Term>) -> Self {
        Self { terms }
    }

    /// Convenience constructor from `(numerator, denominator, exponents)` triples.
    pub fn from_terms(terms: &[(i64, i64, [u32; NUM_VARS])]) -> Self {
        Self::new(terms.iter().map(|&(n, d, e)| Term::new(Rational64::new(n, d), e)).collect())
    }

    pub fn eval(&self, x: &[f64; NUM_VARS]) -> f64 {
        self.terms.iter().map(|t| t.eval(x)).sum()
    }

    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.iter().map(|t| t.exponents[var]).max().unwrap_or(0)
    }

    /// Does the polynomial depend only on `r₋` and `r₊`?
    pub fn is_marginal(&self) -> bool {
        self.terms.iter().all(|t| t.exponents[2..].iter().all(|&e| e == 0))
    }

    /// Coefficients `c_k` of `Σ c_k t^k` obtained by fixing every variable
    /// except `var` at the values in `x`.
    pub fn restrict(&self, var: usize, x: &[f64; NUM_VARS]) -> Vec<f64> {
        let deg = self.degree_in(var) as usize;
        let mut coeffs = alloc::vec![0.0; deg + 1];
        for t in &self.terms {
            let mut v = t.coeff_f64;
            for (i, (&xi, &e)) in x.iter().zip(&t.exponents).enumerate() {
                if i != var && e > 0 {
                    v *= ipow(xi, e);
                }
            }
            coeffs[t.exponents[var] as usize] += v;
        }
        coeffs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
        }
    }
}

/// `polynomial rel rhs`, closed.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub polynomial: Polynomial,
    pub relation: Relation,
    pub rhs: Rational64,
    pub label: Option<String>,
}

impl Constraint {
    pub fn new(polynomial: Polynomial, relation: Relation, rhs: Rational64) -> Self {
        Self { polynomial, relation, rhs, label: None }
    }

    pub fn labeled(mut self, label: &str) -> Self {
        self.label = Some(label.to_string());
        self
    }

    /// `lhs − rhs`; the constraint holds iff this is `≤ 0` (Le) or `≥ 0` (Ge).
    pub fn residual(&self, x: &[f64; NUM_VARS]) -> f64 {
        self.polynomial.eval(x) - to_f64(self.rhs)
    }

    pub fn holds(&self, x: &[f64; NUM_VARS]) -> bool {
        let r = self.residual(x);
        match self.relation {
            Relation::Le => r <= 0.0,
            Relation::Ge => r >= 0.0,
        }
    }

    /// Restriction of `lhs − rhs` to a single variable.
    pub fn restrict(&self, var: usize, x: &[f64; NUM_VARS]) -> Vec<f64> {
        let mut c = self.polynomial.restrict(var, x);
        c[0] -= to_f64(self.rhs);
        c
    }
}

/// A named region: EW validity AND every constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionSpec {
    pub name: String,
    pub case: VolumeElementCase,
    pub constraints: Vec<Constraint>,
    /// Set for shipped specs that only carry necessary conditions.
    pub necessary_only: bool,
}

impl RegionSpec {
    pub fn new(name: &str, case: VolumeElementCase, constraints: Vec<Constraint>) -> Result<Self> {
        if constraints.is_empty() {
            return Err(Error::invalid("a region needs at least one constraint"));
        }
        Ok(Self { name: name.to_string(), case, constraints, necessary_only: false })
    }

    pub fn contains(&self, p: &EWPoint) -> bool {
        eval_region(self, p)
    }

    /// Adds every constraint of `other`.
    pub fn intersect(&self, other: &RegionSpec) -> RegionSpec {
        let mut out = self.clone();
        out.constraints.extend(other.constraints.iter().cloned());
        out.name = alloc::format!("{}&{}", self.name, other.name);
        out.necessary_only = self.necessary_only || other.necessary_only;
        out
    }

    /// The same region without the constraints carrying `label`.
    pub fn without_label(&self, label: &str) -> Option<RegionSpec> {
        let kept: Vec<Constraint> = self
            .constraints
            .iter()
            .filter(|c| c.label.as_deref() != Some(label))
            .cloned()
            .collect();
        if kept.is_empty() {
            return None;
        }
        Some(RegionSpec { constraints: kept, ..self.clone() })
    }
}

/// `true` iff `p` is a valid EW point of the region's family and satisfies
/// every constraint.
pub fn eval_region(spec: &RegionSpec, p: &EWPoint) -> bool {
    if spec.case == VolumeElementCase::Qubit && p.r_minus != 0.0 {
        return false;
    }
    if !validate(p).is_valid() {
        return false;
    }
    let x = point_vars(p);
    spec.constraints.iter().all(|c| c.holds(&x))
}

/// `r₁² + r₂² + r₃² − 4(r₊ − r₋)² ≤ 0`.
pub fn convexity_constraint() -> Constraint {
    Constraint::new(
        Polynomial::from_terms(&[
            (1, 1, [0, 0, 2, 0, 0]),
            (1, 1, [0, 0, 0, 2, 0]),
            (1, 1, [0, 0, 0, 0, 2]),
            (-4, 1, [0, 2, 0, 0, 0]),
            (8, 1, [1, 1, 0, 0, 0]),
            (-4, 1, [2, 0, 0, 0, 0]),
        ]),
        Relation::Le,
        Rational64::from_integer(0),
    )
    .labeled(CONVEXITY_LABEL)
}

/// Quoted triseparability bounds `r₋ ≤ 1/6`, `(1−2r₋)/4 ≤ r₊ ≤ 1 − 5r₋`.
/// `r₋ ≥ 0` is already part of EW validity.
pub fn triseparable_marginal_constraints() -> Vec<Constraint> {
    alloc::vec![
        Constraint::new(Polynomial::from_terms(&[(1, 1, [1, 0, 0, 0, 0])]), Relation::Le, Rational64::new(1, 6))
            .labeled("r_minus_max"),
        Constraint::new(
            Polynomial::from_terms(&[(1, 1, [0, 1, 0, 0, 0]), (1, 2, [1, 0, 0, 0, 0])]),
            Relation::Ge,
            Rational64::new(1, 4),
        )
        .labeled("r_plus_min"),
        Constraint::new(
            Polynomial::from_terms(&[(1, 1, [0, 1, 0, 0, 0]), (5, 1, [1, 0, 0, 0, 0])]),
            Relation::Le,
            Rational64::from_integer(1),
        )
        .labeled("r_plus_max"),
    ]
}

/// Necessary conditions for triseparability: the quoted bounds plus convexity.
pub fn trisep_quoted(case: VolumeElementCase) -> RegionSpec {
    let mut constraints = triseparable_marginal_constraints();
    constraints.push(convexity_constraint());
    RegionSpec {
        name: match case {
            VolumeElementCase::General => "trisep_quoted".to_string(),
            VolumeElementCase::Qubit => "trisep_quoted_qubit".to_string(),
        },
        case,
        constraints,
        necessary_only: true,
    }
}

/// Necessary condition for 1|23 biseparability: `r₋ ≤ 1/3`.
pub fn bisep_necessary() -> RegionSpec {
    RegionSpec {
        name: "bisep_necessary".to_string(),
        case: VolumeElementCase::General,
        constraints: alloc::vec![Constraint::new(
            Polynomial::from_terms(&[(1, 1, [1, 0, 0, 0, 0])]),
            Relation::Le,
            Rational64::new(1, 3),
        )
        .labeled("r_minus_max")],
        necessary_only: true,
    }
}

/// Shipped triseparability predicate, optionally tightened by extra specs
/// (e.g. a user-supplied cubic constraint).
pub fn triseparable_with(p: &EWPoint, extras: &[RegionSpec]) -> bool {
    let case = if p.r_minus == 0.0 { VolumeElementCase::Qubit } else { VolumeElementCase::General };
    let base = trisep_quoted(case);
    eval_region(&base, p) && extras.iter().all(|s| eval_region_lenient(s, p))
}

/// Shipped triseparability predicate: necessary conditions only.
pub fn triseparable_shipped(p: &EWPoint) -> bool {
    triseparable_with(p, &[])
}

/// Region test that ignores the region's family tag; used when a general-case
/// spec is applied on the `r₋ = 0` slice.
fn eval_region_lenient(spec: &RegionSpec, p: &EWPoint) -> bool {
    validate(p).is_valid() && spec.constraints.iter().all(|c| c.holds(&point_vars(p)))
}

/// Which two of `(r₁, r₂, r₃)` span a cross-section; the third is zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Plane {
    #[default]
    R1R2,
    R1R3,
    R2R3,
}

impl Plane {
    pub fn name(self) -> &'static str {
        match self {
            Plane::R1R2 => "r1r2",
            Plane::R1R3 => "r1r3",
            Plane::R2R3 => "r2r3",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "r1r2" => Some(Plane::R1R2),
            "r1r3" => Some(Plane::R1R3),
            "r2r3" => Some(Plane::R2R3),
            _ => None,
        }
    }

    /// Names of the horizontal and vertical raster axes.
    pub fn axis_names(self) -> (&'static str, &'static str) {
        match self {
            Plane::R1R2 => ("r1", "r2"),
            Plane::R1R3 => ("r1", "r3"),
            Plane::R2R3 => ("r2", "r3"),
        }
    }

    fn embed(self, u: f64, v: f64) -> [f64; 3] {
        match self {
            Plane::R1R2 => [u, v, 0.0],
            Plane::R1R3 => [u, 0.0, v],
            Plane::R2R3 => [0.0, u, v],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellLabel {
    OutsideEw,
    EwOnly,
    RegionMember,
    ExcludedByConvexity,
}

impl CellLabel {
    pub const ALL: [CellLabel; 4] =
        [CellLabel::OutsideEw, CellLabel::EwOnly, CellLabel::RegionMember, CellLabel::ExcludedByConvexity];

    pub fn name(self) -> &'static str {
        match self {
            CellLabel::OutsideEw => "outside-EW",
            CellLabel::EwOnly => "EW-only",
            CellLabel::RegionMember => "region-member",
            CellLabel::ExcludedByConvexity => "excluded-by-convexity",
        }
    }
}

/// Labeled grid over `[−r₀, r₀]²` at fixed `(r₋, r₊)`.
///
/// Row 0 is the top edge (largest second coordinate).
#[derive(Debug, Clone, PartialEq)]
pub struct RasterGrid {
    pub r_minus: f64,
    pub r_plus: f64,
    pub plane: Plane,
    pub resolution: usize,
    pub labels: Vec<CellLabel>,
}

impl RasterGrid {
    pub fn half_width(&self) -> f64 {
        1.0 - self.r_minus - self.r_plus
    }

    /// In-plane coordinates of the centre of cell `(row, col)`.
    pub fn cell_center(&self, row: usize, col: usize) -> (f64, f64) {
        cell_center(self.half_width(), self.resolution, row, col)
    }

    pub fn point(&self, row: usize, col: usize) -> EWPoint {
        let (u, v) = self.cell_center(row, col);
        EWPoint::new(self.r_minus, self.r_plus, self.plane.embed(u, v))
    }

    pub fn label(&self, row: usize, col: usize) -> CellLabel {
        self.labels[row * self.resolution + col]
    }

    pub fn count(&self, label: CellLabel) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }
}

fn cell_center(r0: f64, res: usize, row: usize, col: usize) -> (f64, f64) {
    let w = 2.0 * r0 / res as f64;
    (-r0 + (col as f64 + 0.5) * w, r0 - (row as f64 + 0.5) * w)
}

/// Pointwise label used by [`cross_section_raster`].
pub fn classify_point(p: &EWPoint, extras: &[RegionSpec]) -> CellLabel {
    if !validate(p).is_valid() {
        return CellLabel::OutsideEw;
    }
    if triseparable_with(p, extras) {
        return CellLabel::RegionMember;
    }
    let x = point_vars(p);
    let marginal_ok = triseparable_marginal_constraints().iter().all(|c| c.holds(&x))
        && extras.iter().all(|s| eval_region_lenient(s, p));
    if marginal_ok {
        CellLabel::ExcludedByConvexity
    } else {
        CellLabel::EwOnly
    }
}

pub fn cross_section_raster(
    r_minus: f64,
    r_plus: f64,
    plane: Plane,
    resolution: usize,
    extras: &[RegionSpec],
) -> Result<RasterGrid> {
    if resolution < 16 {
        return Err(Error::invalid("raster resolution must be at least 16"));
    }
    let r0 = 1.0 - r_minus - r_plus;
    if !(r_minus >= 0.0) || !(r_plus >= 0.0) || !(r0 > 0.0) {
        return Err(Error::invalid("cross-section needs r_minus, r_plus ≥ 0 and r0 > 0"));
    }
    let mut labels = Vec::with_capacity(resolution * resolution);
    for row in 0..resolution {
        for col in 0..resolution {
            let (u, v) = cell_center(r0, resolution, row, col);
            labels.push(classify_point(&EWPoint::new(r_minus, r_plus, plane.embed(u, v)), extras));
        }
    }
    Ok(RasterGrid { r_minus, r_plus, plane, resolution, labels })
}

#[cfg(test)]
mod tests {
    use super::*;

    const PARADOX: EWPoint = EWPoint::new(0.1, 0.27, [0.589304, 0.08100014, -0.138433]);

    #[test]
    fn shipped_specs_have_expected_shape() {
        assert_eq!(trisep_quoted(VolumeElementCase::General).constraints.len(), 4);
        assert_eq!(bisep_necessary().constraints.len(), 1);
        assert!(trisep_quoted(VolumeElementCase::General).necessary_only);
    }

    #[test]
    fn paradox_point_fails_convexity_only() {
        assert!(validate(&PARADOX).is_valid());
        let x = point_vars(&PARADOX);
        assert!(triseparable_marginal_constraints().iter().all(|c| c.holds(&x)));
        let conv = convexity_constraint();
        assert!(!conv.holds(&x));
        assert!((conv.residual(&x) - (0.37300 - 0.1156)).abs() < 1e-5);
        assert!(!triseparable_shipped(&PARADOX));
        assert_eq!(classify_point(&PARADOX, &[]), CellLabel::ExcludedByConvexity);
    }

    #[test]
    fn maximally_mixed_is_in_shipped_trisep() {
        assert!(triseparable_shipped(&EWPoint::new(1.0 / 27.0, 10.0 / 27.0, [0.0; 3])));
        assert!(!triseparable_shipped(&EWPoint::new(0.2, 0.5, [0.0; 3])));
    }

    #[test]
    fn bisep_necessary_examples() {
        let b = bisep_necessary();
        assert!(!b.contains(&EWPoint::new(0.34, 0.3, [0.0; 3])));
        assert!(b.contains(&EWPoint::new(0.2, 0.3, [0.1, 0.0, 0.2])));
        assert!(!b.contains(&EWPoint::new(0.5, 0.6, [0.0; 3])));
    }

    #[test]
    fn ties_count_as_members() {
        assert!(bisep_necessary().contains(&EWPoint::new(1.0 / 3.0, 0.3, [0.0; 3])));
    }

    #[test]
    fn qubit_spec_rejects_nonzero_r_minus() {
        let q = trisep_quoted(VolumeElementCase::Qubit);
        assert!(q.contains(&EWPoint::qubit(0.5, [0.1, 0.0, 0.0])));
        assert!(!q.contains(&EWPoint::new(1e-3, 0.5, [0.1, 0.0, 0.0])));
    }

    #[test]
    fn restriction_reproduces_evaluation() {
        let c = convexity_constraint();
        let x = point_vars(&PARADOX);
        let coeffs = c.restrict(1, &x);
        assert_eq!(coeffs.len(), 3);
        let t = x[1];
        let via = coeffs[0] + coeffs[1] * t + coeffs[2] * t * t;
        assert!((via - c.residual(&x)).abs() < 1e-14);
    }

    #[test]
    fn raster_at_paradox_section() {
        let g = cross_section_raster(0.1, 0.27, Plane::R1R2, 64, &[]).unwrap();
        assert!(g.count(CellLabel::ExcludedByConvexity) > 0);
        assert!(g.count(CellLabel::RegionMember) > 0);
        for row in 0..64 {
            for col in 0..64 {
                let (u, v) = g.cell_center(row, col);
                if u * u + v * v > 0.63 * 0.63 {
                    assert_eq!(g.label(row, col), CellLabel::OutsideEw);
                }
                assert_eq!(g.label(row, col), classify_point(&g.point(row, col), &[]));
            }
        }
        assert!(cross_section_raster(0.1, 0.27, Plane::R1R2, 8, &[]).is_err());
        assert!(cross_section_raster(0.6, 0.5, Plane::R1R2, 32, &[]).is_err());
    }

    #[test]
    fn raster_matches_shipped_predicate_at_r_plus_point_nine() {
        let g = cross_section_raster(0.0, 0.9, Plane::R2R3, 32, &[]).unwrap();
        for row in 0..32 {
            for col in 0..32 {
                let p = g.point(row, col);
                assert_eq!(g.label(row, col) == CellLabel::RegionMember, triseparable_shipped(&p));
            }
        }
        assert!(g.count(CellLabel::RegionMember) > 0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn adding_constraints_never_enlarges(
                a in 0.0..1.0f64, b in 0.0..1.0f64,
                r1 in -1.0..1.0f64, r2 in -1.0..1.0f64, r3 in -1.0..1.0f64,
            ) {
                let p = EWPoint::new(a, b, [r1, r2, r3]);
                let base = bisep_necessary();
                let tighter = base.intersect(&trisep_quoted(VolumeElementCase::General));
                if tighter.contains(&p) {
                    prop_assert!(base.contains(&p));
                }
                if !p.is_valid() {
                    prop_assert!(!base.contains(&p));
                }
            }
        }
    }
}
