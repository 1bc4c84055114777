//! Finite Hilbert transform `H(g; x) = p.v. int_{-1}^{1} g(y) / (x - y) dy`, the two-weight
//! ratio `||H(g) U||_p / ||g V||_p`, and grid checks of the one-point conditions that decide
//! whether that ratio is bounded.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::conditions::conjugate;
use crate::quad::{self, integrate_local, QuadError, Region};
use crate::sampling::{checked_ratio, digest, RatioError, RatioSample};
use crate::weights::{local_integrability, product, Density, Factor, PowerProduct, Verdict, WeightSpec};

pub const THEOREM: &str = "hilbert";

/// Slope of `log(product)` against `log log(1/delta)` above which a product counts as growing.
pub const GROWTH_SLOPE: f64 = 0.2;

/// Number of trailing grid points used by the slope fit.
pub const SLOPE_WINDOW: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PVResult {
    pub value: f64,
    pub error_estimate: f64,
}

/// `H(g; x)` by subtracting `g(x)`: the remaining integrand is bounded for Hölder `g`, and the
/// subtracted constant contributes `g(x) ln((1 + x) / (1 - x))`.
pub fn transform(g: impl Fn(f64) -> f64 + Sync, x: f64, tol: f64) -> Result<PVResult, QuadError> {
    if !(x.abs() < 1.0) {
        return Err(QuadError::BadRegion);
    }
    let gx = g(x);
    let region = Region::custom(vec![(-1.0, x), (x, 1.0)])?;
    let f = |y: f64| {
        let d = x - y;
        if d == 0.0 {
            0.0
        } else {
            (g(y) - gx) / d
        }
    };
    let r = quad::integrate(f, &WeightSpec::legendre(), &region, tol)?;
    let value = r.value + gx * ((1.0 + x) / (1.0 - x)).ln();
    Ok(PVResult { value, error_estimate: r.error_estimate })
}

fn weighted_density(w: &WeightSpec, p: f64) -> PowerProduct {
    PowerProduct { terms: vec![(Arc::new(w.clone()) as Arc<dyn Density>, p)] }
}

fn inner_tol(tol: f64) -> f64 {
    (tol * 1e-3).max(1e-13)
}

/// `(int |H(g)|^p U^p)^{1/p} / (int |g|^p V^p)^{1/p}`; the transform at each outer node is
/// computed to a tighter tolerance than the outer integral.
pub fn weighted_ratio(
    g: impl Fn(f64) -> f64 + Sync,
    big_u: &WeightSpec,
    big_v: &WeightSpec,
    p: f64,
    tol: f64,
) -> Result<RatioSample, RatioError> {
    if !(p > 1.0) {
        return Err(RatioError::Invalid(format!("p = {p} must exceed 1")));
    }
    let full = Region::full();
    let den = quad::integrate(|y| g(y).abs().powf(p), &weighted_density(big_v, p), &full, tol)?.value;
    let itol = inner_tol(tol);
    let h = |x: f64| transform(&g, x, itol).map(|r| r.value.abs().powf(p)).unwrap_or(f64::NAN);
    let num = quad::integrate(h, &weighted_density(big_u, p), &full, tol)?.value;
    if num.is_nan() {
        return Err(RatioError::Quad(QuadError::NoConvergence { value: f64::NAN, error: f64::NAN, panels: 0 }));
    }
    let ratio = checked_ratio(num.max(0.0).powf(1.0 / p), den.max(0.0).powf(1.0 / p))?;
    Ok(RatioSample {
        theorem: THEOREM.into(),
        ratio,
        n: 0,
        p,
        m: 0,
        seed: 0,
        trial: 0,
        witness: format!("num^p={num:.6e} den^p={den:.6e}"),
        digest: digest(&[num, den]),
    })
}

/// Lower bounds for the two-weight norm from the extremal profiles `g = V^{-q}` on a one-sided
/// neighbourhood of width `delta` at the `point`-th singular point of `V`.
///
/// The transform is only evaluated at distance `>= 2 delta` from that point, where it is a
/// regular integral, so each value is a lower bound for the ratio of the full profile. When
/// `gamma(U) - gamma(V) + 1 > 0` at a point with `Gamma(U) = Gamma(V) = 1/q` these bounds grow
/// like `log(1/delta)^{gamma(U) - gamma(V) + 1}`.
pub fn extremal_profile_ratios(
    big_u: &WeightSpec,
    big_v: &WeightSpec,
    p: f64,
    point: usize,
    deltas: &[f64],
    tol: f64,
) -> Result<Vec<(f64, f64)>, RatioError> {
    if !(p > 1.0) {
        return Err(RatioError::Invalid(format!("p = {p} must exceed 1")));
    }
    let q = conjugate(p);
    let at = *big_v
        .points()
        .get(point)
        .ok_or_else(|| RatioError::Invalid(format!("weight has no singular point {point}")))?;
    let local = big_v.factors()[point].scaled(-q);
    let side = if at >= 1.0 { -1.0 } else { 1.0 };
    // V^{-q} at distance s, split into the local factor and a smooth remainder
    let smooth = |s: f64| big_v.density_at(at, side * s).powf(-q) / local.local(s);
    let itol = inner_tol(tol);
    deltas
        .par_iter()
        .map(|&delta| {
            if !(delta > 0.0 && delta <= 0.25) {
                return Err(RatioError::Invalid(format!("delta = {delta} outside (0, 1/4]")));
            }
            let den = integrate_local(smooth, local, 0.0, delta, itol)?.value;
            let mut pieces = Vec::new();
            if at - 2.0 * delta > -1.0 {
                pieces.push((-1.0, at - 2.0 * delta));
            }
            if at + 2.0 * delta < 1.0 {
                pieces.push(((at + 2.0 * delta).max(-1.0), 1.0));
            }
            let region = Region::custom(pieces)?;
            let hg = |x: f64| {
                integrate_local(|s| smooth(s) / (x - at - side * s), local, 0.0, delta, itol)
                    .map(|r| r.value.abs().powf(p))
                    .unwrap_or(f64::NAN)
            };
            let num = quad::integrate(hg, &weighted_density(big_u, p), &region, tol)?.value;
            if num.is_nan() {
                return Err(RatioError::Quad(QuadError::NoConvergence { value: f64::NAN, error: f64::NAN, panels: 0 }));
            }
            Ok((delta, checked_ratio(num.powf(1.0 / p), den.powf(1.0 / p))?))
        })
        .collect()
}

/// `2^{-k}` for `k = 2..=24`.
pub fn default_delta_grid() -> Vec<f64> {
    (2..=24).map(|k| 0.5f64.powi(k)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SupVerdict {
    NoGrowthDetected,
    Growing,
    Divergent,
}

impl SupVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            SupVerdict::NoGrowthDetected => "no growth detected",
            SupVerdict::Growing => "growing",
            SupVerdict::Divergent => "divergent",
        }
    }

    /// The symbolic verdict this grid outcome is consistent with.
    pub fn as_verdict(self) -> Verdict {
        match self {
            SupVerdict::NoGrowthDetected => Verdict::Holds,
            SupVerdict::Growing | SupVerdict::Divergent => Verdict::Fails,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridRow {
    pub point: usize,
    pub delta: f64,
    pub product_u_kernel: f64,
    pub product_v_kernel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointSummary {
    pub point: usize,
    pub at: f64,
    pub u: Factor,
    pub v: Factor,
    pub sup_u_kernel: f64,
    pub sup_v_kernel: f64,
    pub slope: f64,
    pub verdict: SupVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionSup {
    pub p: f64,
    pub rows: Vec<GridRow>,
    pub points: Vec<PointSummary>,
}

pub const CSV_HEADER: &str = "i,delta,product_u_kernel,product_v_kernel,slope,verdict";

impl ConditionSup {
    pub fn verdict(&self) -> SupVerdict {
        let rank = |v: SupVerdict| match v {
            SupVerdict::NoGrowthDetected => 0,
            SupVerdict::Growing => 1,
            SupVerdict::Divergent => 2,
        };
        self.points.iter().map(|s| s.verdict).max_by_key(|&v| rank(v)).unwrap_or(SupVerdict::NoGrowthDetected)
    }

    pub fn sup(&self) -> f64 {
        self.points.iter().map(|s| s.sup_u_kernel.max(s.sup_v_kernel)).fold(0.0, f64::max)
    }

    pub fn max_slope(&self) -> f64 {
        self.points.iter().map(|s| s.slope).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for r in &self.rows {
            let s = &self.points[r.point];
            writeln!(out, "{},{:e},{:e},{:e},{:.6},{}", r.point, r.delta, r.product_u_kernel, r.product_v_kernel, s.slope, s.verdict.as_str())?;
        }
        Ok(())
    }
}

/// Least-squares slope of `ys` against `xs`.
fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx > 0.0 {
        sxy / sxx
    } else {
        0.0
    }
}

/// `int_0^hi f(t) U_i(t) dt`, infinite when the factor is not integrable at 0. The range is cut
/// at `scale`, below which `f` is roughly constant, so the tail model only sees the factor.
fn local_or_divergent(f: impl Fn(f64) -> f64, factor: Factor, scale: f64, hi: f64, tol: f64) -> Result<f64, RatioError> {
    if local_integrability(factor) != Verdict::Holds {
        return Ok(f64::INFINITY);
    }
    let cut = scale.min(hi);
    let near = match integrate_local(&f, factor, 0.0, cut, tol) {
        Ok(r) => r.value,
        Err(QuadError::DivergentIntegrand { .. }) => return Ok(f64::INFINITY),
        Err(e) => return Err(e.into()),
    };
    let far = if cut < hi { integrate_local(&f, factor, cut, hi, tol)?.value } else { 0.0 };
    Ok(near + far)
}

/// The two one-point products at every singular point of `U V` and every `delta`:
///
/// `[int_0^1 U_i^p / (delta + t)^p] [int_0^delta V_i^{-q}]^{p-1}` and
/// `[int_0^delta U_i^p] [int_0^1 V_i^{-q} / (delta + t)^q]^{p-1}`,
///
/// with `U_i, V_i` the local factors `t^Gamma log(e/t)^gamma`. A point whose factor integrals
/// diverge is reported as divergent; otherwise the slope of `log(product)` against
/// `log log(1/delta)` over the last [`SLOPE_WINDOW`] grid points separates growth from
/// "no growth detected". A finite grid cannot prove boundedness.
pub fn condition_sup(big_u: &WeightSpec, big_v: &WeightSpec, p: f64, delta_grid: &[f64], tol: f64) -> Result<ConditionSup, RatioError> {
    if !(p > 1.0) {
        return Err(RatioError::Invalid(format!("p = {p} must exceed 1")));
    }
    if delta_grid.len() < 2 || delta_grid.iter().any(|&d| !(d > 0.0 && d < 1.0)) {
        return Err(RatioError::Invalid("delta grid needs at least two values in (0, 1)".into()));
    }
    let q = conjugate(p);
    let ua = product(&[(big_u, 1.0), (big_v, 0.0)], 0.0)?;
    let va = product(&[(big_v, 1.0), (big_u, 0.0)], 0.0)?;
    let mut grid = delta_grid.to_vec();
    grid.sort_by(|a, b| b.partial_cmp(a).unwrap());

    let mut rows = Vec::new();
    let mut points = Vec::new();
    for (i, (&at, (&fu, &fv))) in ua.points().iter().zip(ua.factors().iter().zip(va.factors())).enumerate() {
        let up = fu.scaled(p);
        let vq = fv.scaled(-q);
        let cells: Vec<(f64, f64)> = grid
            .par_iter()
            .map(|&d| -> Result<(f64, f64), RatioError> {
                let u_kernel = local_or_divergent(|t| (d + t).powf(-p), up, d, 1.0, tol)?;
                let v_near = local_or_divergent(|_| 1.0, vq, d, d, tol)?;
                let u_near = local_or_divergent(|_| 1.0, up, d, d, tol)?;
                let v_kernel = local_or_divergent(|t| (d + t).powf(-q), vq, d, 1.0, tol)?;
                Ok((u_kernel * v_near.powf(p - 1.0), u_near * v_kernel.powf(p - 1.0)))
            })
            .collect::<Result<_, _>>()?;
        let divergent = cells.iter().any(|(a, b)| !a.is_finite() || !b.is_finite());
        let tail = &cells[cells.len().saturating_sub(SLOPE_WINDOW)..];
        let xs: Vec<f64> = grid[grid.len() - tail.len()..].iter().map(|d| (1.0 / d).ln().ln()).collect();
        let slope = if divergent {
            f64::INFINITY
        } else {
            let su = ls_slope(&xs, &tail.iter().map(|c| c.0.ln()).collect::<Vec<_>>());
            let sv = ls_slope(&xs, &tail.iter().map(|c| c.1.ln()).collect::<Vec<_>>());
            su.max(sv)
        };
        let verdict = if divergent {
            SupVerdict::Divergent
        } else if slope > GROWTH_SLOPE {
            SupVerdict::Growing
        } else {
            SupVerdict::NoGrowthDetected
        };
        rows.extend(grid.iter().zip(&cells).map(|(&delta, &(a, b))| GridRow { point: i, delta, product_u_kernel: a, product_v_kernel: b }));
        points.push(PointSummary {
            point: i,
            at,
            u: fu,
            v: fv,
            sup_u_kernel: cells.iter().map(|c| c.0).fold(0.0, f64::max),
            sup_v_kernel: cells.iter().map(|c| c.1).fold(0.0, f64::max),
            slope,
            verdict,
        });
    }
    Ok(ConditionSup { p, rows, points })
}
