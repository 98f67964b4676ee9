use ewgeo_core::metric::VolumeElementCase;
use ewgeo_core::montecarlo::{
    analytic_acceptance, estimate_many, sample_ew, Chunking, EstimateConfig, Predicate, Sequential,
};
use ewgeo_core::point::EWPoint;
use ewgeo_core::quadrature::{integrate_probability, MarginalRegion, Tolerance};
use ewgeo_core::region::{
    bisep_necessary, classify_point, cross_section_raster, eval_region, triseparable_marginal_constraints, trisep_quoted,
    Plane, RegionSpec,
};
use VolumeElementCase::{General, Qubit};

fn marginal_spec(case: VolumeElementCase) -> RegionSpec {
    RegionSpec::new("marginal", case, triseparable_marginal_constraints()).unwrap()
}

#[test]
fn acceptance_rate_within_four_binomial_errors() {
    for case in [General, Qubit] {
        let stats = sample_ew(case, 10_000_000, 21, Chunking::default(), |_| {}).unwrap();
        let p = analytic_acceptance(case);
        let se = (p * (1.0 - p) / stats.raw as f64).sqrt();
        assert!((stats.rate() - p).abs() < 4.0 * se, "{case:?}: {} vs {p}", stats.rate());
    }
}

#[test]
fn quadrature_and_monte_carlo_agree() {
    let tol = Tolerance::relative(1e-10);
    let cases: [(VolumeElementCase, RegionSpec, MarginalRegion); 3] = [
        (General, marginal_spec(General), MarginalRegion::from_constraints(&triseparable_marginal_constraints()).unwrap()),
        (General, bisep_necessary(), MarginalRegion::from_constraints(&bisep_necessary().constraints).unwrap()),
        (Qubit, marginal_spec(Qubit), MarginalRegion::from_constraints(&triseparable_marginal_constraints()).unwrap()),
    ];
    for (case, spec, region) in cases {
        let exact = integrate_probability(case, &region, tol).unwrap().value;
        let config = EstimateConfig { case, subsamples: 5, n_raw_per: 4_000_000, seed: 22, chunking: Chunking::default() };
        let pred = |p: &EWPoint| eval_region(&spec, p);
        let rep = estimate_many(&config, &[("r", &pred as Predicate<'_>)], &Sequential).unwrap().remove(0);
        let sd = rep.std_dev.unwrap();
        assert!((rep.pooled_probability - exact).abs() < 3.0 * sd, "{}: {} vs {exact} (sd {sd})", spec.name, rep.pooled_probability);
        let discarded = rep.total_discarded() as f64 / rep.total_accepted() as f64;
        assert!(discarded < 1e-6);
    }
}

#[test]
fn complements_sum_to_one_and_nested_regions_are_ordered() {
    let quoted = trisep_quoted(General);
    let marginal = marginal_spec(General);
    let bisep = bisep_necessary();
    let a = |p: &EWPoint| eval_region(&quoted, p);
    let b = |p: &EWPoint| eval_region(&marginal, p);
    let c = |p: &EWPoint| eval_region(&bisep, p);
    let not_b = |p: &EWPoint| !eval_region(&marginal, p);
    let preds: [(&str, Predicate<'_>); 4] = [("a", &a), ("b", &b), ("c", &c), ("not b", &not_b)];
    let config = EstimateConfig { case: General, subsamples: 3, n_raw_per: 1_000_000, seed: 23, chunking: Chunking { chunk_size: 1 << 17 } };
    let reps = estimate_many(&config, &preds, &Sequential).unwrap();
    for s in 0..3 {
        let p: Vec<f64> = reps.iter().map(|r| r.subsamples[s].probability).collect();
        assert!(p[0] <= p[1] && p[1] <= p[2], "{p:?}");
        assert!((p[1] + p[3] - 1.0).abs() < 1e-12);
    }
    let total: f64 = reps[1].subsamples.iter().map(|s| s.sum_region_weights).sum();
    let weights: f64 = reps[1].subsamples.iter().map(|s| s.sum_weights).sum();
    assert!((reps[1].pooled_probability - total / weights).abs() < 1e-15);
}

#[test]
fn tighter_tolerance_moves_quadrature_less_than_its_error_estimate() {
    let region = MarginalRegion::from_constraints(&triseparable_marginal_constraints()).unwrap();
    for case in [General, Qubit] {
        let coarse = integrate_probability(case, &region, Tolerance::relative(1e-8)).unwrap();
        let fine = integrate_probability(case, &region, Tolerance::relative(5e-9)).unwrap();
        assert!((coarse.value - fine.value).abs() <= coarse.error.max(1e-15), "{case:?}");
        assert!(coarse.error >= 0.0 && coarse.value.is_finite());
    }
}

#[test]
fn raster_labels_equal_pointwise_classification() {
    for (rm, rp, plane) in [(0.1, 0.27, Plane::R1R2), (0.05, 0.5, Plane::R1R3), (0.0, 0.4, Plane::R2R3), (0.2, 0.2, Plane::R1R2)] {
        let grid = cross_section_raster(rm, rp, plane, 64, &[]).unwrap();
        for row in 0..64 {
            for col in 0..64 {
                assert_eq!(grid.label(row, col), classify_point(&grid.point(row, col), &[]));
            }
        }
    }
}
