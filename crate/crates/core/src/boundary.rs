//! Ratios of SD boundary areas between two regions.
//!
//! For each draw of the free coordinates, every constraint of a region is
//! solved for the saturation variable (`r₊` in the qubit case, `r₋`
//! otherwise). Each root that also satisfies the remaining constraints and EW
//! validity contributes `h = sqrt(det)` of the boundary block of the metric.
//! No surface Jacobian is applied: the estimator is the plain sum of `h`.

use alloc::string::String;
use alloc::vec::Vec;

use crate::metric::{boundary_subtensor, VolumeElementCase};
use crate::montecarlo::{plan, ChunkExecutor, ChunkTask, Chunking};
use crate::point::{validate_with_slack, EWPoint};
use crate::region::{point_vars, vars_point, RegionSpec, NUM_VARS};
use crate::rng::CounterStream;
use crate::{Error, Result};

/// Slack on the non-saturated constraints and on EW validity at a root.
pub const ROOT_SLACK: f64 = 1e-10;

/// Where the free `(r₁, r₂, r₃)` are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundarySampling {
    /// Uniform on `[−1, 1]³`, kept only when `R ≤ 1`.
    #[default]
    CubeBallFiltered,
    /// Uniform on `[−1, 1]³`, no filter.
    Cube,
}

impl BoundarySampling {
    pub fn name(self) -> &'static str {
        match self {
            BoundarySampling::CubeBallFiltered => "cube-ball-filtered",
            BoundarySampling::Cube => "cube",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BoundaryAccumulator {
    pub draws: u64,
    pub sum_h: [f64; 2],
    pub points: [u64; 2],
    pub singular: u64,
}

impl BoundaryAccumulator {
    fn merge(&mut self, o: &Self) {
        self.draws += o.draws;
        self.singular += o.singular;
        for k in 0..2 {
            self.sum_h[k] += o.sum_h[k];
            self.points[k] += o.points[k];
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryAreaReport {
    pub region_a: String,
    pub region_b: String,
    pub case: VolumeElementCase,
    pub draws: u64,
    pub sum_h: [f64; 2],
    pub saturation_points: [u64; 2],
    pub singular: u64,
    pub ratio: Option<f64>,
    pub seed: u64,
    pub sampling: BoundarySampling,
}

/// Real roots in `[0, 1]` of `Σ c_k t^k`.
pub fn roots_in_unit_interval(coeffs: &[f64]) -> Vec<f64> {
    let mut c: Vec<f64> = coeffs.to_vec();
    while c.len() > 1 && c[c.len() - 1] == 0.0 {
        c.pop();
    }
    let mut out = Vec::new();
    let keep = |t: f64, out: &mut Vec<f64>| {
        if (0.0..=1.0).contains(&t) {
            out.push(t);
        }
    };
    match c.len() {
        0 | 1 => {}
        2 => keep(-c[0] / c[1], &mut out),
        3 => {
            let (a, b, cc) = (c[2], c[1], c[0]);
            let disc = b * b - 4.0 * a * cc;
            if disc >= 0.0 {
                let sq = libm::sqrt(disc);
                // stable form
                let q = -0.5 * (b + if b >= 0.0 { sq } else { -sq });
                if q != 0.0 {
                    keep(q / a, &mut out);
                    keep(cc / q, &mut out);
                } else {
                    keep(0.0, &mut out);
                }
            }
        }
        _ => bracketed_roots(&c, &mut out),
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

fn horner(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * t + k)
}

/// Scan-and-bisect for higher degrees.
fn bracketed_roots(c: &[f64], out: &mut Vec<f64>) {
    const SCAN: usize = 512;
    let mut t0 = 0.0;
    let mut f0 = horner(c, t0);
    if f0 == 0.0 {
        out.push(0.0);
    }
    for i in 1..=SCAN {
        let t1 = i as f64 / SCAN as f64;
        let f1 = horner(c, t1);
        if f1 == 0.0 {
            out.push(t1);
        } else if f0 != 0.0 && (f0 < 0.0) != (f1 < 0.0) {
            let (mut lo, mut hi, mut flo) = (t0, t1, f0);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                let fm = horner(c, mid);
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (fm < 0.0) == (flo < 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        t0 = t1;
        f0 = f1;
    }
}

fn holds_with_slack(spec: &RegionSpec, x: &[f64; NUM_VARS], skip: usize) -> bool {
    spec.constraints.iter().enumerate().all(|(i, c)| {
        if i == skip {
            return true;
        }
        let r = c.residual(x);
        match c.relation {
            crate::region::Relation::Le => r <= ROOT_SLACK,
            crate::region::Relation::Ge => r >= -ROOT_SLACK,
        }
    })
}

/// Sum of `h` over the saturation points of `spec` reachable from `base`.
fn accumulate_region(spec: &RegionSpec, case: VolumeElementCase, base: &EWPoint, sum: &mut f64, points: &mut u64, singular: &mut u64) {
    let var = match case {
        VolumeElementCase::Qubit => 1,
        VolumeElementCase::General => 0,
    };
    let x0 = point_vars(base);
    for (i, c) in spec.constraints.iter().enumerate() {
        let coeffs = c.restrict(var, &x0);
        for t in roots_in_unit_interval(&coeffs) {
            let mut x = x0;
            x[var] = t;
            let p = vars_point(&x);
            if !validate_with_slack(&p, ROOT_SLACK).is_valid() || !holds_with_slack(spec, &x, i) {
                continue;
            }
            match boundary_subtensor(&p, case) {
                Ok((_, h)) => {
                    *sum += h;
                    *points += 1;
                }
                Err(_) => *singular += 1,
            }
        }
    }
}

fn run_boundary_chunk(
    specs: [&RegionSpec; 2],
    case: VolumeElementCase,
    seed: u64,
    sampling: BoundarySampling,
    task: &ChunkTask,
) -> BoundaryAccumulator {
    let mut rng = CounterStream::new(seed, task.stream());
    let mut acc = BoundaryAccumulator::default();
    for _ in 0..task.n_raw {
        let free = match case {
            VolumeElementCase::General => rng.uniform(),
            VolumeElementCase::Qubit => 0.0,
        };
        let r = [rng.uniform_in(-1.0, 1.0), rng.uniform_in(-1.0, 1.0), rng.uniform_in(-1.0, 1.0)];
        acc.draws += 1;
        if sampling == BoundarySampling::CubeBallFiltered && r[0] * r[0] + r[1] * r[1] + r[2] * r[2] > 1.0 {
            continue;
        }
        // The saturation variable is overwritten per root.
        let base = match case {
            VolumeElementCase::General => EWPoint::new(0.0, free, r),
            VolumeElementCase::Qubit => EWPoint::qubit(0.0, r),
        };
        for (k, spec) in specs.iter().enumerate() {
            let (mut s, mut n) = (acc.sum_h[k], acc.points[k]);
            accumulate_region(spec, case, &base, &mut s, &mut n, &mut acc.singular);
            acc.sum_h[k] = s;
            acc.points[k] = n;
        }
    }
    acc
}

/// Boundary-area ratio `Σh(A) / Σh(B)` over `n` draws.
pub fn boundary_area_ratio<E: ChunkExecutor>(
    spec_a: &RegionSpec,
    spec_b: &RegionSpec,
    case: VolumeElementCase,
    n: u64,
    seed: u64,
    sampling: BoundarySampling,
    executor: &E,
) -> Result<BoundaryAreaReport> {
    let tasks = plan(1, n, Chunking { chunk_size: 1 << 16 })?;
    let parts = executor.run(&tasks, |t| run_boundary_chunk([spec_a, spec_b], case, seed, sampling, t));
    let mut acc = BoundaryAccumulator::default();
    for p in &parts {
        acc.merge(p);
    }
    if acc.points[0] == 0 && acc.points[1] == 0 {
        return Err(Error::NonConvergence("no saturation points found for either region".into()));
    }
    let ratio = if acc.sum_h[1] > 0.0 { Some(acc.sum_h[0] / acc.sum_h[1]) } else { None };
    Ok(BoundaryAreaReport {
        region_a: spec_a.name.clone(),
        region_b: spec_b.name.clone(),
        case,
        draws: acc.draws,
        sum_h: acc.sum_h,
        saturation_points: acc.points,
        singular: acc.singular,
        ratio,
        seed,
        sampling,
    })
}
