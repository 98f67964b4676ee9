use ewgeo::oracle::{
    basis, density_matrix, fidelity_bures, partial_transpose_min_eig, sd_tensor_direct, spectral_metric, twirl, CMatrix,
    DensityMatrix,
};
use ewgeo::ppt::reducer;
use ewgeo::sample::interior_points;
use ewgeo_core::metric::{sd_tensor_cartesian, VolumeElementCase};
use ewgeo_core::point::{spectrum, EWPoint};
use nalgebra::{DMatrix, Matrix3, Vector3};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use VolumeElementCase::{General, Qubit};

#[test]
fn spectral_tensor_matches_closed_form() {
    for (d, case) in [(2, Qubit), (3, General)] {
        for p in interior_points(case, 300, 31, 0.01) {
            let direct = sd_tensor_direct(&p, d).unwrap();
            let closed = sd_tensor_cartesian(&p, case).unwrap();
            let dev = direct.max_relative_deviation(&closed, 1e-12).unwrap();
            assert!(dev < 1e-8, "d = {d}, {p:?}: {dev}");
        }
    }
}

#[test]
fn four_dimensional_oracle_reproduces_the_qutrit_tensor() {
    for p in interior_points(General, 10, 32, 0.01) {
        let dev = sd_tensor_direct(&p, 4).unwrap().max_relative_deviation(&sd_tensor_cartesian(&p, General).unwrap(), 1e-12).unwrap();
        assert!(dev < 1e-6, "{p:?}: {dev}");
    }
}

#[test]
fn density_matrix_spectrum_matches_multiplicities() {
    for (d, case) in [(2, Qubit), (3, General), (4, General)] {
        for p in interior_points(case, 50, 33, 0.0) {
            let got = density_matrix(&p, d).unwrap().eigenvalues();
            let mut want = spectrum(&p, d).unwrap().expanded();
            want.sort_by(f64::total_cmp);
            assert_eq!(got.len(), want.len());
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-10, "d = {d}: {g} vs {w}");
            }
        }
    }
}

fn rotated_tensor(p: &EWPoint, o: &Matrix3<f64>) -> DMatrix<f64> {
    // Σ'_j = Σ_k O_kj Σ_k, so ρ'(r) = ρ(O r).
    let b = basis(3).unwrap();
    let lin = b.linear_basis();
    let sigma: Vec<CMatrix> = (0..3)
        .map(|j| (0..3).fold(CMatrix::zeros(27, 27), |acc, k| acc + &lin[3 + k] * Complex64::from(o[(k, j)])))
        .collect();
    let mut rho = &lin[0] * Complex64::from(p.r_plus) + &lin[1] * Complex64::from(p.r_minus) + &lin[2] * Complex64::from(p.r0());
    for j in 0..3 {
        rho += &sigma[j] * Complex64::from(p.r[j]);
    }
    let mut tangents = vec![lin[1].clone() - lin[2].clone(), lin[0].clone() - lin[2].clone()];
    tangents.extend(sigma);
    spectral_metric(&rho, &tangents).unwrap()
}

fn orthogonal(seed: u64) -> Matrix3<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = Matrix3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
    let mut q = m.qr().q();
    if rng.gen_bool(0.5) {
        q.column_mut(0).neg_mut();
    }
    q
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn tensor_is_independent_of_sigma_orientation(seed in 0u64..u64::MAX, k in 0usize..64) {
        let p = interior_points(General, 64, 34, 0.01)[k];
        let o = orthogonal(seed);
        let moved = o * Vector3::from(p.r);
        let q = EWPoint::new(p.r_minus, p.r_plus, [moved[0], moved[1], moved[2]]);
        let mut ext = DMatrix::<f64>::identity(5, 5);
        ext.view_mut((2, 2), (3, 3)).copy_from(&o);
        let want = ext.transpose() * sd_tensor_cartesian(&q, General).unwrap().matrix() * &ext;
        let got = rotated_tensor(&p, &o);
        prop_assert!((&got - &want).abs().max() < 1e-8 * want.abs().max());
    }

    #[test]
    fn reduced_ppt_matches_full_partial_transpose(k in 0usize..200, qubit in any::<bool>()) {
        let (d, case) = if qubit { (2, Qubit) } else { (3, General) };
        let p = interior_points(case, 200, 35, 0.0)[k];
        let fast = reducer(d).unwrap().min_eigenvalue(&p).unwrap();
        let full = partial_transpose_min_eig(&p, d).unwrap();
        prop_assert!((fast - full).abs() < 1e-12);
    }
}

/// Slope of log residual against log step for `dB² − g(v,v)ε²/4`.
fn taylor_exponent(p: &EWPoint, v: [f64; 5]) -> f64 {
    let g = sd_tensor_cartesian(p, General).unwrap();
    let vv = DMatrix::from_row_slice(1, 5, &v);
    let quad = (&vv * g.matrix() * vv.transpose())[(0, 0)] / 4.0;
    let rho = density_matrix(p, 3).unwrap();
    let steps = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4];
    let pts: Vec<(f64, f64)> = steps
        .iter()
        .map(|&e| {
            let q = EWPoint::new(p.r_minus + e * v[0], p.r_plus + e * v[1], [p.r[0] + e * v[2], p.r[1] + e * v[3], p.r[2] + e * v[4]]);
            let (_, db2) = fidelity_bures(&rho, &density_matrix(&q, 3).unwrap()).unwrap();
            (e.ln(), (db2 - quad * e * e).abs().ln())
        })
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|x| x.0).sum::<f64>() / n;
    let my = pts.iter().map(|x| x.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|x| (x.0 - mx) * (x.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|x| (x.0 - mx) * (x.0 - mx)).sum();
    sxy / sxx
}

#[test]
fn fidelity_residual_is_third_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(36);
    for p in interior_points(General, 10, 36, 0.05) {
        let mut v = [0.0; 5];
        for x in &mut v {
            *x = rng.gen_range(-1.0..1.0);
        }
        let slope = taylor_exponent(&p, v);
        assert!(slope >= 2.7, "{p:?}: exponent {slope}");
    }
}

fn random_state(d: u64, rng: &mut ChaCha8Rng) -> DensityMatrix {
    let n = (d * d * d) as usize;
    let a = CMatrix::from_fn(n, n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let m = &a * a.adjoint();
    let tr = m.trace();
    DensityMatrix::from_matrix(d, m / tr).unwrap()
}

#[test]
fn twirl_is_idempotent_on_random_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    for d in [2, 3] {
        for _ in 0..20 {
            let p = twirl(&random_state(d, &mut rng)).unwrap();
            let again = twirl(&density_matrix(&p, d).unwrap()).unwrap();
            assert!((p.r_minus - again.r_minus).abs() < 1e-12 && (p.r_plus - again.r_plus).abs() < 1e-12);
            for k in 0..3 {
                assert!((p.r[k] - again.r[k]).abs() < 1e-12);
            }
        }
    }
}
