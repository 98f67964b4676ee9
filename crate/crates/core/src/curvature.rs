//! Ricci scalar of a metric field from central differences.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::metric::{sd_tensor_cartesian, VolumeElementCase};
use crate::point::{to_cartesian, SphericalPoint};
use crate::{Error, Result};

/// Ricci scalar at `x` of the metric field `metric`, using second-order
/// central differences with step `h` for the first and second derivatives of
/// the components.
///
/// Sign convention: the unit 2-sphere has scalar curvature `+2`.
pub fn ricci_scalar<F>(metric: F, x: &[f64], h: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<DMatrix<f64>>,
{
    if !(h > 0.0) {
        return Err(Error::invalid("finite-difference step must be positive"));
    }
    let n = x.len();
    let at = |shifts: &[(usize, f64)]| {
        let mut y = x.to_vec();
        for &(k, s) in shifts {
            y[k] += s;
        }
        metric(&y)
    };

    let g = metric(x)?;
    if g.nrows() != n || g.ncols() != n {
        return Err(Error::invalid("metric dimension differs from the coordinate count"));
    }
    let ginv = g
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NonConvergence("metric is singular at the stencil centre".into()))?;

    let mut plus = Vec::with_capacity(n);
    let mut minus = Vec::with_capacity(n);
    for k in 0..n {
        plus.push(at(&[(k, h)])?);
        minus.push(at(&[(k, -h)])?);
    }
    // ∂_k g
    let dg: Vec<DMatrix<f64>> = (0..n).map(|k| (&plus[k] - &minus[k]) / (2.0 * h)).collect();
    // ∂_k ∂_l g
    let mut ddg = alloc::vec![alloc::vec![DMatrix::<f64>::zeros(n, n); n]; n];
    for k in 0..n {
        ddg[k][k] = (&plus[k] - &g * 2.0 + &minus[k]) / (h * h);
        for l in 0..k {
            let pp = at(&[(k, h), (l, h)])?;
            let pm = at(&[(k, h), (l, -h)])?;
            let mp = at(&[(k, -h), (l, h)])?;
            let mm = at(&[(k, -h), (l, -h)])?;
            let mixed = (pp - pm - mp + mm) / (4.0 * h * h);
            ddg[k][l] = mixed.clone();
            ddg[l][k] = mixed;
        }
    }

    // Γ^a_{ij} = g^{ak} Γ_{k,ij},  Γ_{k,ij} = ½(∂_i g_kj + ∂_j g_ki − ∂_k g_ij)
    let mut gamma = alloc::vec![0.0; n * n * n];
    let idx = |a: usize, i: usize, j: usize| (a * n + i) * n + j;
    for i in 0..n {
        for j in 0..n {
            for a in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    let first = 0.5 * (dg[i][(k, j)] + dg[j][(k, i)] - dg[k][(i, j)]);
                    s += ginv[(a, k)] * first;
                }
                gamma[idx(a, i, j)] = s;
            }
        }
    }

    let mut scalar = 0.0;
    for i in 0..n {
        for k in 0..n {
            for l in 0..n {
                let gil = ginv[(i, l)];
                if gil == 0.0 {
                    continue;
                }
                for m in 0..n {
                    let gkm = ginv[(k, m)];
                    if gkm == 0.0 {
                        continue;
                    }
                    let mut r = 0.5
                        * (ddg[k][l][(i, m)] + ddg[i][m][(k, l)]
                            - ddg[k][m][(i, l)]
                            - ddg[i][l][(k, m)]);
                    for a in 0..n {
                        for b in 0..n {
                            r += g[(a, b)]
                                * (gamma[idx(a, k, l)] * gamma[idx(b, i, m)]
                                    - gamma[idx(a, k, m)] * gamma[idx(b, i, l)]);
                        }
                    }
                    scalar += gil * gkm * r;
                }
            }
        }
    }
    Ok(scalar)
}

/// Default step: `3e-3` times the distance scale `min(r₋, r₊, r₀ − R, r₀)`.
pub fn default_step(s: &SphericalPoint) -> f64 {
    let r0 = s.r0();
    3e-3 * s.r_minus.min(s.r_plus).min(r0 - s.radius).min(r0)
}

/// Bures-normalized Ricci scalar of the five-parameter family at `s`.
///
/// Evaluated in the Cartesian chart, where the tensor is smooth, with
/// steps `step` and `step/2` combined by Richardson extrapolation. The SD
/// scalar is one quarter of the returned value.
pub fn scalar_curvature_fd(s: &SphericalPoint, step: f64) -> Result<f64> {
    if !(step > 0.0) {
        return Err(Error::invalid("finite-difference step must be positive"));
    }
    let p = to_cartesian(s);
    let x = [p.r_minus, p.r_plus, p.r[0], p.r[1], p.r[2]];
    let bures = |y: &[f64]| -> Result<DMatrix<f64>> {
        let q = crate::point::EWPoint::new(y[0], y[1], [y[2], y[3], y[4]]);
        Ok(sd_tensor_cartesian(&q, VolumeElementCase::General)?.matrix() * 0.25)
    };
    let coarse = ricci_scalar(bures, &x, step)?;
    let fine = ricci_scalar(bures, &x, 0.5 * step)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// The closed-form Bures scalar curvature `20 + 18/r₀`.
pub fn reference_scalar_curvature(r0: f64) -> f64 {
    20.0 + 18.0 / r0
}
