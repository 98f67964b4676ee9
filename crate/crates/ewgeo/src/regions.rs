//! Named regions for the sampler: built-in predicates and spec files.

use std::path::Path;

use ewgeo_core::metric::VolumeElementCase;
use ewgeo_core::quadrature::{bisep_bound_closed_form, trisep_bound_closed_form};
use ewgeo_core::region::{bisep_necessary, eval_region, triseparable_marginal_constraints, trisep_quoted};
use ewgeo_core::{EWPoint, Error, RegionSpec, Result};

use crate::io::{load_region_spec, region_spec_to_json};
use crate::oracle::PSD_TOL;
use crate::ppt::{reducer, PptReducer};
use crate::report::{sha256_hex, Json, Provenance};

pub const BUILTIN_NAMES: [&str; 5] = ["all", "ppt-oracle", "trisep-quoted", "trisep-marginal", "bisep-necessary"];

#[derive(Debug, Clone)]
pub enum RegionKind {
    All,
    Ppt(&'static PptReducer),
    Spec(RegionSpec),
}

#[derive(Debug, Clone)]
pub struct NamedRegion {
    pub name: String,
    pub case: VolumeElementCase,
    pub kind: RegionKind,
    /// `builtin` or the region file path.
    pub source: String,
}

/// The quoted triseparability bounds without the convexity constraint.
pub fn trisep_marginal(case: VolumeElementCase) -> RegionSpec {
    let mut spec = RegionSpec::new("trisep_marginal", case, triseparable_marginal_constraints())
        .expect("shipped constraints are nonempty");
    spec.necessary_only = true;
    spec
}

impl NamedRegion {
    /// A built-in name, or else a path to a region-spec file.
    pub fn resolve(name: &str, case: VolumeElementCase) -> Result<Self> {
        let builtin = |kind| Ok(Self { name: name.to_string(), case, kind, source: "builtin".into() });
        match name {
            "all" => builtin(RegionKind::All),
            "ppt-oracle" => {
                let d = if case == VolumeElementCase::Qubit { 2 } else { 3 };
                builtin(RegionKind::Ppt(reducer(d)?))
            }
            "trisep-quoted" => builtin(RegionKind::Spec(trisep_quoted(case))),
            "trisep-marginal" => builtin(RegionKind::Spec(trisep_marginal(case))),
            "bisep-necessary" => {
                let mut spec = bisep_necessary();
                spec.case = case;
                builtin(RegionKind::Spec(spec))
            }
            path => {
                let p = Path::new(path);
                if !p.exists() {
                    return Err(Error::InvalidParameters(format!(
                        "unknown region \"{path}\": not one of {} and not a file",
                        BUILTIN_NAMES.join(", ")
                    )));
                }
                let spec = load_region_spec(p)?;
                if spec.case != case {
                    return Err(Error::InvalidParameters(format!(
                        "region file {path} is for the {} case, run is {}",
                        spec.case.name(),
                        case.name()
                    )));
                }
                Ok(Self { name: spec.name.clone(), case, kind: RegionKind::Spec(spec), source: path.to_string() })
            }
        }
    }

    pub fn contains(&self, p: &EWPoint) -> bool {
        match &self.kind {
            RegionKind::All => true,
            RegionKind::Ppt(r) => {
                p.is_valid()
                    && (self.case == VolumeElementCase::General || p.r_minus == 0.0)
                    && r.min_eigenvalue_unchecked(p) >= -PSD_TOL
            }
            RegionKind::Spec(s) => eval_region(s, p),
        }
    }

    pub fn spec(&self) -> Option<&RegionSpec> {
        match &self.kind {
            RegionKind::Spec(s) => Some(s),
            _ => None,
        }
    }

    pub fn necessary_only(&self) -> bool {
        self.spec().is_some_and(|s| s.necessary_only)
    }

    /// Description embedded in report configs.
    pub fn config_json(&self) -> Json {
        let mut o = Json::obj([("name", Json::str(self.name.clone())), ("source", Json::str(self.source.clone()))]);
        if let Some(s) = self.spec() {
            let doc = region_spec_to_json(s);
            o.push("spec_digest", Json::str(format!("sha256:{}", sha256_hex(doc.render().as_bytes()))));
            o.push("spec", doc);
        }
        o
    }
}

/// A reference number attached to a region in reports.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub what: &'static str,
    pub value: f64,
    pub provenance: Provenance,
}

impl Reference {
    pub fn to_json(&self) -> Json {
        Json::obj([
            ("what", Json::str(self.what)),
            ("value", Json::Num(self.value)),
            ("provenance", Json::str(self.provenance.label())),
        ])
    }
}

/// Reference values for a built-in region under the SD measure.
pub fn references(name: &str, case: VolumeElementCase) -> Vec<Reference> {
    use Provenance::*;
    use VolumeElementCase::*;
    let r = |what, value, provenance| Reference { what, value, provenance };
    match (name, case) {
        ("all", _) => vec![r("probability", 1.0, DerivedOracle)],
        ("ppt-oracle", General) => vec![r("probability (qutrit PPT table column)", 0.0963689, Published)],
        ("ppt-oracle", Qubit) => vec![r("probability (qubit biseparable table column)", 0.216769, Published)],
        ("trisep-marginal", General) => vec![
            r("probability (exact upper bound)", 0.177661, Published),
            r("probability (closed form of the exact upper bound)", trisep_bound_closed_form(), DerivedOracle),
        ],
        ("trisep-marginal", Qubit) => vec![
            r("probability (stated qubit bound)", 27.0 / 64.0, Published),
            r("probability (antiderivative of the qubit volume element)", 5.0 / 16.0, DerivedOracle),
        ],
        ("trisep-quoted", General) => vec![
            r("lower value this necessary-conditions region must exceed (qutrit triseparable table column)", 0.0142526, Published),
            r("alternative published triseparable probability, differing from the subsample column", 0.0165952, Published),
        ],
        ("trisep-quoted", Qubit) => {
            vec![r("lower value this necessary-conditions region must exceed (qubit triseparable table column)", 0.0630532, Published)]
        }
        ("bisep-necessary", General) => vec![
            r("probability (exact upper bound)", 0.825312, Published),
            r("probability (closed form of the exact upper bound)", bisep_bound_closed_form(), DerivedOracle),
            r("lower value this necessary-conditions region must exceed (qutrit biseparable table column)", 0.0694443, Published),
        ],
        _ => Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_resolve() {
        for name in BUILTIN_NAMES {
            for case in [VolumeElementCase::General, VolumeElementCase::Qubit] {
                let r = NamedRegion::resolve(name, case).unwrap();
                assert_eq!(r.name, name);
            }
        }
        assert!(matches!(NamedRegion::resolve("no-such-region", VolumeElementCase::General), Err(Error::InvalidParameters(_))));
    }

    #[test]
    fn ppt_region_on_maximally_mixed_point() {
        let r = NamedRegion::resolve("ppt-oracle", VolumeElementCase::General).unwrap();
        assert!(r.contains(&EWPoint::new(1.0 / 27.0, 10.0 / 27.0, [0.0; 3])));
        assert!(!r.contains(&EWPoint::new(0.5, 0.6, [0.0; 3])));
        let q = NamedRegion::resolve("ppt-oracle", VolumeElementCase::Qubit).unwrap();
        assert!(!q.contains(&EWPoint::new(0.1, 0.3, [0.0; 3])));
    }
}
