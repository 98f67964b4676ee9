//! Random interior points for oracle comparisons and property checks.

use ewgeo_core::metric::VolumeElementCase;
use ewgeo_core::rng::CounterStream;
use ewgeo_core::EWPoint;

/// `n` points drawn uniformly from the EW body of `case`, kept only when
/// `r₋` (general), `r₊` and `r₀ − R` all exceed `margin` and `R > margin`.
pub fn interior_points(case: VolumeElementCase, n: usize, seed: u64, margin: f64) -> Vec<EWPoint> {
    let mut rng = CounterStream::new(seed, u64::MAX);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let r_minus = match case {
            VolumeElementCase::General => rng.uniform(),
            VolumeElementCase::Qubit => 0.0,
        };
        let r_plus = rng.uniform();
        let r = [rng.uniform_in(-1.0, 1.0), rng.uniform_in(-1.0, 1.0), rng.uniform_in(-1.0, 1.0)];
        let p = EWPoint::new(r_minus, r_plus, r);
        let minus_ok = case == VolumeElementCase::Qubit || p.r_minus > margin;
        if minus_ok && p.r_plus > margin && p.r0() - p.radius() > margin && p.radius() > margin {
            out.push(p);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_are_interior_and_deterministic() {
        let a = interior_points(VolumeElementCase::General, 50, 3, 0.01);
        assert_eq!(a, interior_points(VolumeElementCase::General, 50, 3, 0.01));
        assert!(a.iter().all(|p| p.is_valid() && p.r_minus > 0.01 && p.r0() - p.radius() > 0.01));
        let q = interior_points(VolumeElementCase::Qubit, 20, 3, 0.01);
        assert!(q.iter().all(|p| p.r_minus == 0.0));
    }
}
