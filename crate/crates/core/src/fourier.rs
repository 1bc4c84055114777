//! Fourier orthogonal coefficients, partial sums `S_n(dalpha; f)`, Pollard's three-part split of
//! the Christoffel-Darboux kernel, and sampled lower bounds for the norm of `S_n` between
//! weighted `L^p` spaces.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::orthopoly::{RecurrenceTable, DEFAULT_TOL as ORTHO_TOL};
use crate::quad::Region;
pub use crate::sampling::Sampler;
use crate::sampling::{checked_ratio, digest, sup_over_trials, trial_rng, DiscreteMeasure, RatioError, RatioSample};
use crate::weights::{Density, PowerProduct, WeightSpec};

/// `c_k = int f p_k dalpha` for `k < n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientVector {
    pub measure: String,
    pub coeffs: Vec<f64>,
}

impl CoefficientVector {
    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }
}

pub fn project(f: impl Fn(f64) -> f64 + Sync, table: &RecurrenceTable, n: usize, tol: f64) -> Result<CoefficientVector, RatioError> {
    let coeffs = table.coefficients(f, n, tol)?;
    Ok(CoefficientVector { measure: table.measure().label(), coeffs })
}

/// `S_n(f, x) = sum_{k<n} c_k p_k(x)`.
pub fn partial_sum(coeffs: &CoefficientVector, table: &RecurrenceTable, x: f64) -> f64 {
    table.eval_series(&coeffs.coeffs, x)
}

/// `K_n(x, y) = alpha_n h1 + beta_n (h2 + h3)` with `q_k` orthonormal for `(1 - x^2) dalpha`.
#[derive(Debug, Clone)]
pub struct PollardSplit {
    pub n: usize,
    pub alpha_n: f64,
    pub beta_n: f64,
    pub qtable: Arc<RecurrenceTable>,
    pub residual: f64,
}

impl PollardSplit {
    /// `(h1, h2, h3)` at `(x, y)`, `x != y`.
    pub fn parts(&self, table: &RecurrenceTable, x: f64, y: f64) -> Result<(f64, f64, f64), RatioError> {
        let n = self.n;
        let (pnx, _) = table.eval_poly(n, x)?;
        let (pny, _) = table.eval_poly(n, y)?;
        let (qx, _) = self.qtable.eval_poly(n - 1, x)?;
        let (qy, _) = self.qtable.eval_poly(n - 1, y)?;
        let h1 = pnx * pny;
        let h2 = (1.0 - y * y) * pnx * qy / (x - y);
        let h3 = (1.0 - x * x) * pny * qx / (y - x);
        Ok((h1, h2, h3))
    }

    pub fn eval(&self, table: &RecurrenceTable, x: f64, y: f64) -> Result<f64, RatioError> {
        let (h1, h2, h3) = self.parts(table, x, y)?;
        Ok(self.alpha_n * h1 + self.beta_n * (h2 + h3))
    }
}

/// Off-diagonal pairs of a 23-point grid in `[-0.97, 0.97]`.
pub fn pollard_probe_grid() -> Vec<(f64, f64)> {
    let g: Vec<f64> = (0..23).map(|i| -0.97 + 0.97 * 2.0 * i as f64 / 22.0).collect();
    let mut out = Vec::new();
    for &x in &g {
        for &y in &g {
            if x != y {
                out.push((x, y));
            }
        }
    }
    out
}

pub fn pollard_split(table: &RecurrenceTable, n: usize) -> Result<PollardSplit, RatioError> {
    if n == 0 {
        return Err(RatioError::Invalid("Pollard split needs n >= 1".into()));
    }
    let measure = PowerProduct { terms: vec![(table.measure().clone(), 1.0), (Arc::new(WeightSpec::phi()) as Arc<dyn Density>, 2.0)] };
    let qtable = Arc::new(RecurrenceTable::build(Arc::new(measure), n, ORTHO_TOL)?);
    let mut split = PollardSplit { n, alpha_n: 0.0, beta_n: 0.0, qtable, residual: 0.0 };
    let grid = pollard_probe_grid();
    let mut rows = Vec::with_capacity(grid.len());
    for &(x, y) in &grid {
        let (h1, h2, h3) = split.parts(table, x, y)?;
        rows.push((h1, h2 + h3, table.cd_kernel(n, x, y)?));
    }
    let (mut s11, mut s12, mut s22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(a, b, k) in &rows {
        s11 += a * a;
        s12 += a * b;
        s22 += b * b;
        r1 += a * k;
        r2 += b * k;
    }
    let det = s11 * s22 - s12 * s12;
    if !(det > 1e-12 * s11 * s22) {
        return Err(RatioError::IllConditioned(format!("Gram determinant {det:e} at n = {n}")));
    }
    split.alpha_n = (r1 * s22 - r2 * s12) / det;
    split.beta_n = (r2 * s11 - r1 * s12) / det;
    let kmax = rows.iter().map(|r| r.2.abs()).fold(0.0, f64::max);
    split.residual = rows.iter().map(|&(a, b, k)| (k - split.alpha_n * a - split.beta_n * b).abs()).fold(0.0, f64::max) / kmax;
    Ok(split)
}

/// `sgn(v) |v|^e`.
fn dual(v: f64, e: f64) -> f64 {
    v.signum() * v.abs().powf(e)
}

struct NormProblem<'a> {
    d: DiscreteMeasure,
    n: usize,
    p: f64,
    u: Vec<f64>,
    w: Vec<f64>,
    mask: Option<Vec<bool>>,
    centers: Vec<(f64, bool)>,
    table: &'a RecurrenceTable,
}

impl NormProblem<'_> {
    fn apply(&self, f: &[f64]) -> Vec<f64> {
        self.d.synthesize(&self.d.project(f, self.n))
    }

    fn restrict(&self, f: &mut [f64]) {
        if let Some(m) = &self.mask {
            for (v, keep) in f.iter_mut().zip(m) {
                if !keep {
                    *v = 0.0;
                }
            }
        }
    }

    fn ratio(&self, f: &[f64]) -> Result<f64, RatioError> {
        let s = self.apply(f);
        checked_ratio(self.d.lp_norm(&s, Some(&self.w), self.p), self.d.lp_norm(f, Some(&self.u), self.p))
    }

    /// One step of Boyd's power method for `F -> w S(F / u)` in discrete `L^p`.
    fn power_step(&self, f: &[f64]) -> Vec<f64> {
        let q = self.p / (self.p - 1.0);
        let s = self.apply(f);
        let g: Vec<f64> = s.iter().zip(&self.w).map(|(v, w)| w * dual(w * v, self.p - 1.0)).collect();
        let t = self.apply(&g);
        let mut out: Vec<f64> = t.iter().zip(&self.u).map(|(v, u)| dual(v / u, q - 1.0) / u).collect();
        for v in out.iter_mut() {
            if !v.is_finite() {
                *v = 0.0;
            }
        }
        self.restrict(&mut out);
        let scale = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale > 0.0 {
            out.iter_mut().for_each(|v| *v /= scale);
        }
        out
    }

    fn sample(&self, sampler: &Sampler, trial: usize) -> Result<RatioSample, RatioError> {
        let mut rng = trial_rng(sampler.seed, trial);
        let n = self.n;
        let dim = self.d.dim();
        let (mut f, witness) = match trial % 4 {
            0 | 1 => {
                let k = [n, 2 * n, 4 * n][rng.random_range(0..3)].min(dim);
                let c: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
                (self.d.synthesize(&c), format!("random degree<{k}"))
            }
            2 => {
                let j = rng.random_range(n.saturating_sub(1)..(n + 2).min(dim));
                let q = self.p / (self.p - 1.0);
                let f = (0..self.d.len()).map(|i| dual(self.d.row(i)[j], q - 1.0)).collect();
                (f, format!("sign profile of p_{j}"))
            }
            _ => {
                let (c, endpoint) = self.centers[rng.random_range(0..self.centers.len())];
                let base = if endpoint { 1.0 / (n * n) as f64 } else { 1.0 / n as f64 };
                let width = base * rng.random_range(0.5..2.0);
                let shift = if endpoint { 0.0 } else { width * rng.random_range(-1.0..1.0) };
                let center = c + shift;
                let f = self.d.nodes().iter().map(|x| (-((x - center) / width).powi(2)).exp()).collect();
                (f, format!("bump at {center:.6} width {width:.3e}"))
            }
        };
        self.restrict(&mut f);
        let mut best = self.ratio(&f)?;
        let mut best_f = f.clone();
        let mut steps_used = 0;
        for step in 1..=sampler.power_steps {
            f = self.power_step(&f);
            match self.ratio(&f) {
                Ok(r) if r > best => {
                    best = r;
                    best_f.clone_from(&f);
                    steps_used = step;
                }
                Ok(_) => {}
                Err(_) => break,
            }
        }
        let coeffs = self.d.project(&best_f, dim);
        Ok(RatioSample {
            theorem: "partial sum operator norm".into(),
            ratio: best,
            n,
            p: self.p,
            m: 1,
            seed: sampler.seed,
            trial,
            witness: format!("{witness}; {steps_used} power steps; measure {}", self.table.measure().label()),
            digest: digest(&coeffs),
        })
    }
}

/// Lower bound for `sup_f ||S_n(f) w||_{dalpha,p} / ||f u||_{dalpha,p}` over sampled `f`.
///
/// Samples mix random orthonormal expansions of degree below `n`, `2n`, `4n` (half of the
/// trials), sign profiles `sgn(p_j) |p_j|^{q-1}` near `j = n` (a quarter), and Gaussian bumps
/// of width `1/n` at interior singular points or `1/n^2` at the endpoints (a quarter).
#[allow(clippy::too_many_arguments)]
pub fn operator_norm_estimate(
    table: &RecurrenceTable,
    n: usize,
    p: f64,
    u: &WeightSpec,
    w: &WeightSpec,
    sampler: &Sampler,
    trials: usize,
) -> Result<RatioSample, RatioError> {
    estimate(table, n, p, u, w, sampler, trials, None)
}

/// As [`operator_norm_estimate`], with every `f` restricted to `region`.
#[allow(clippy::too_many_arguments)]
pub fn operator_norm_estimate_on(
    table: &RecurrenceTable,
    n: usize,
    p: f64,
    u: &WeightSpec,
    w: &WeightSpec,
    sampler: &Sampler,
    trials: usize,
    region: &Region,
) -> Result<RatioSample, RatioError> {
    estimate(table, n, p, u, w, sampler, trials, Some(region))
}

#[allow(clippy::too_many_arguments)]
fn estimate(
    table: &RecurrenceTable,
    n: usize,
    p: f64,
    u: &WeightSpec,
    w: &WeightSpec,
    sampler: &Sampler,
    trials: usize,
    region: Option<&Region>,
) -> Result<RatioSample, RatioError> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(RatioError::Invalid(format!("p = {p} must exceed 1")));
    }
    if n == 0 || n > table.n_max() {
        return Err(RatioError::Invalid(format!("n = {n} outside 1..={}", table.n_max())));
    }
    let dim = (4 * n).min(table.n_max() + 1);
    let degree = dim * (p.max(2.0).ceil() as usize);
    let extra: Vec<Arc<dyn Density>> = vec![Arc::new(u.clone()), Arc::new(w.clone())];
    let d = DiscreteMeasure::new(table, &extra, degree, dim)?;
    let u_vals = d.nodes().iter().map(|&x| u.eval(x)).collect::<Result<Vec<_>, _>>()?;
    let w_vals = d.nodes().iter().map(|&x| w.eval(x)).collect::<Result<Vec<_>, _>>()?;
    let mask = region.map(|r| d.nodes().iter().map(|&x| r.contains(x)).collect());
    let mut centers: Vec<(f64, bool)> = Vec::new();
    for spec in [table.measure().exponents(), u.clone(), w.clone()] {
        for (i, &t) in spec.points().iter().enumerate() {
            if !centers.iter().any(|c| c.0 == t) {
                centers.push((t, spec.is_endpoint(i)));
            }
        }
    }
    let problem = NormProblem { d, n, p, u: u_vals, w: w_vals, mask, centers, table };
    sup_over_trials(trials, |t| problem.sample(sampler, t))
}
