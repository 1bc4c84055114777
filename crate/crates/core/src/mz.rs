//! Marcinkiewicz-Zygmund, quadrature-sum, Bernstein-Markov and restricted-range inequalities
//! evaluated as ratios, for a given polynomial or maximized over sampled polynomials.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::conditions::{sigma_max, sigma_min};
use crate::interp::PolyEvaluator;
use crate::orthopoly::{GaussRule, RecurrenceTable, DEFAULT_TOL as ORTHO_TOL};
use crate::quad::{self, delta_region, Region};
use crate::sampling::{checked_ratio, digest, sup_over_trials, trial_rng, DiscreteMeasure, RatioError, RatioSample, Sampler};
use crate::weights::{product, varphi, Density, PowerProduct, WeightSpec};

pub const MZ: &str = "MZ";
pub const MZ_HERMITE: &str = "MZ Hermite";
pub const QUAD_SUM: &str = "quadrature sum";
pub const BERNSTEIN: &str = "Bernstein-Markov";
pub const RESTRICTED: &str = "restricted range";

fn probe_digest(p: &PolyEvaluator) -> u64 {
    let vals: Vec<f64> = (0..17).map(|i| p.eval(-1.0 + i as f64 / 8.0)).collect();
    digest(&vals)
}

fn single(theorem: &str, ratio: f64, n: usize, p: f64, m: usize, poly: &PolyEvaluator) -> RatioSample {
    RatioSample {
        theorem: theorem.into(),
        ratio,
        n,
        p,
        m,
        seed: 0,
        trial: 0,
        witness: "given polynomial".into(),
        digest: probe_digest(poly),
    }
}

/// `||P||_{dbeta,p} / (sum_k |P(x_k)|^p W_k)^{1/p}` for arbitrary node weights `W_k`.
pub fn mz_ratio_weighted(
    poly: &PolyEvaluator,
    beta: &dyn Density,
    p: f64,
    nodes: &[f64],
    weights: &[f64],
    tol: f64,
) -> Result<f64, RatioError> {
    let num = quad::lp_norm(|x| poly.eval(x), beta, p, &Region::full(), tol)?;
    let den: f64 = nodes.iter().zip(weights).map(|(x, w)| w * poly.eval(*x).abs().powf(p)).sum();
    checked_ratio(num, den.powf(1.0 / p))
}

/// `||P||_{dbeta,p} / (sum_k |P(x_kn)|^p u(x_kn) lambda_kn)^{1/p}` at the nodes of `rule`.
pub fn mz_ratio(poly: &PolyEvaluator, beta: &WeightSpec, u: &WeightSpec, p: f64, rule: &GaussRule, tol: f64) -> Result<RatioSample, RatioError> {
    let weights = rule.nodes.iter().zip(&rule.cotes).map(|(x, l)| Ok(u.eval(*x)? * l)).collect::<Result<Vec<_>, RatioError>>()?;
    let r = mz_ratio_weighted(poly, beta, p, &rule.nodes, &weights, tol)?;
    Ok(single(MZ, r, rule.n, p, 1, poly))
}

/// Recurrence table of `dsigma`: the minimum envelope `min{a', b', 1/phi}` for `m = 1`, the
/// maximum envelope built from `v` and `v*` for `m >= 2`.
pub fn sigma_table(alpha: &WeightSpec, beta: &WeightSpec, m: usize, n: usize) -> Result<RecurrenceTable, RatioError> {
    let sigma = if m <= 1 { sigma_min(alpha, beta)? } else { sigma_max(alpha, beta, m)? };
    Ok(RecurrenceTable::build(sigma, n, ORTHO_TOL)?)
}

/// `lambda_n(dsigma; x_kn)`, the Christoffel function of `sigma` at the nodes of `rule`.
pub fn sigma_weights(sigma: &RecurrenceTable, rule: &GaussRule) -> Result<Vec<f64>, RatioError> {
    rule.nodes.iter().map(|&x| Ok(sigma.christoffel(rule.n, x)?)).collect()
}

/// `||P||_{dbeta,p} / (sum_{j<m} n^{-jp} sum_k |phi(x_kn)^j P^{(j)}(x_kn)|^p lambda_n(dsigma; x_kn))^{1/p}`.
pub fn mz_hermite_ratio(
    poly: &PolyEvaluator,
    beta: &WeightSpec,
    p: f64,
    m: usize,
    rule: &GaussRule,
    sigma: &RecurrenceTable,
    tol: f64,
) -> Result<RatioSample, RatioError> {
    let lam = sigma_weights(sigma, rule)?;
    let den = hermite_denominator(poly, p, m, rule, &lam);
    let num = quad::lp_norm(|x| poly.eval(x), beta, p, &Region::full(), tol)?;
    let r = checked_ratio(num, den.powf(1.0 / p))?;
    Ok(single(MZ_HERMITE, r, rule.n, p, m, poly))
}

/// The discrete side of the Hermite-type inequality, before the `1/p` power.
pub fn hermite_denominator(poly: &PolyEvaluator, p: f64, m: usize, rule: &GaussRule, weights: &[f64]) -> f64 {
    let n = rule.n as f64;
    let mut total = 0.0;
    for (x, w) in rule.nodes.iter().zip(weights) {
        let d = poly.derivs(*x, m.saturating_sub(1));
        let ph = varphi(*x, None);
        for (j, dj) in d.iter().enumerate().take(m) {
            total += w * (ph.powi(j as i32) * dj / n.powi(j as i32)).abs().powf(p);
        }
    }
    total
}

/// `sum_k lambda_n(v; x_kn) |P(x_kn)|^p / int |P|^p v`; `v` is the measure of `v_table`.
pub fn quad_sum_ratio(poly: &PolyEvaluator, v_table: &RecurrenceTable, p: f64, rule: &GaussRule, tol: f64) -> Result<RatioSample, RatioError> {
    let mut num = 0.0;
    for &x in &rule.nodes {
        num += v_table.christoffel(rule.n, x)? * poly.eval(x).abs().powf(p);
    }
    let den = quad::integrate(|x| poly.eval(x).abs().powf(p), v_table.measure().as_ref(), &Region::full(), tol)?.value;
    let r = checked_ratio(num, den)?;
    Ok(single(QUAD_SUM, r, rule.n, p, 1, poly))
}

/// `int |P^{(j)} phi(n,.)^j|^p w(n,.) phi(n,.) dalpha / (n^{jp} int |P|^p w(n,.) phi(n,.) dalpha)`.
pub fn bernstein_ratio(
    poly: &PolyEvaluator,
    alpha: &WeightSpec,
    w: &WeightSpec,
    p: f64,
    j: usize,
    n: usize,
    tol: f64,
) -> Result<RatioSample, RatioError> {
    if j == 0 || n == 0 {
        return Err(RatioError::Invalid("Bernstein ratio needs j >= 1 and n >= 1".into()));
    }
    w.eval_regularized(n, 0.0)?;
    let reg = |x: f64| w.eval_regularized(n, x).unwrap_or(0.0) * varphi(x, Some(n));
    let measure = PowerProduct { terms: vec![(Arc::new(alpha.clone()) as Arc<dyn Density>, 1.0), (Arc::new(w.clone()), 0.0)] };
    let full = Region::full();
    let jp = j as f64 * p;
    let num = quad::integrate(
        |x| (poly.derivs(x, j)[j] * varphi(x, Some(n)).powi(j as i32)).abs().powf(p) * reg(x),
        &measure,
        &full,
        tol,
    )?
    .value;
    let den = quad::integrate(|x| poly.eval(x).abs().powf(p) * reg(x), &measure, &full, tol)?.value;
    let r = checked_ratio(num, (n as f64).powf(jp) * den)?;
    Ok(single(BERNSTEIN, r, n, p, j, poly))
}

/// Merged singular points of `beta` and `u`, for the region `Delta_n(eps)`.
fn support_points(beta: &WeightSpec, u: &WeightSpec) -> Result<WeightSpec, RatioError> {
    Ok(product(&[(beta, 1.0), (u, 0.0)], 0.0)?)
}

/// `int |P|^p u(n,.) dbeta / int_{Delta_n(eps)} |P|^p u(n,.) dbeta`.
#[allow(clippy::too_many_arguments)]
pub fn restricted_ratio(
    poly: &PolyEvaluator,
    beta: &WeightSpec,
    u: &WeightSpec,
    p: f64,
    n: usize,
    eps: f64,
    tol: f64,
) -> Result<RatioSample, RatioError> {
    let region = delta_region(n, eps, &support_points(beta, u)?)?;
    u.eval_regularized(n, 0.0)?;
    let measure = PowerProduct { terms: vec![(Arc::new(beta.clone()) as Arc<dyn Density>, 1.0), (Arc::new(u.clone()), 0.0)] };
    let g = |x: f64| poly.eval(x).abs().powf(p) * u.eval_regularized(n, x).unwrap_or(0.0);
    let num = quad::integrate(g, &measure, &Region::full(), tol)?.value;
    let den = quad::integrate(g, &measure, &region, tol)?.value;
    let r = checked_ratio(num, den)?;
    Ok(single(RESTRICTED, r, n, p, 1, poly))
}

/// Which inequality [`adversarial_sup`] maximizes.
#[derive(Debug, Clone)]
pub enum RatioKind {
    Mz { u: WeightSpec },
    MzHermite { m: usize, sigma: Arc<RecurrenceTable> },
    QuadSum { v: Arc<RecurrenceTable>, m: usize },
    Bernstein { w: WeightSpec, j: usize },
    Restricted { u: WeightSpec, eps: f64 },
}

impl RatioKind {
    pub fn theorem(&self) -> &'static str {
        match self {
            RatioKind::Mz { .. } => MZ,
            RatioKind::MzHermite { .. } => MZ_HERMITE,
            RatioKind::QuadSum { .. } => QUAD_SUM,
            RatioKind::Bernstein { .. } => BERNSTEIN,
            RatioKind::Restricted { .. } => RESTRICTED,
        }
    }

    /// Number of orthonormal basis functions spanning the admissible polynomials.
    pub fn dim(&self, n: usize) -> usize {
        match self {
            RatioKind::Mz { .. } => n,
            RatioKind::MzHermite { m, .. } => m * n,
            RatioKind::QuadSum { m, .. } => m * n + 1,
            RatioKind::Bernstein { .. } | RatioKind::Restricted { .. } => n + 1,
        }
    }

    fn m(&self) -> usize {
        match self {
            RatioKind::MzHermite { m, .. } | RatioKind::QuadSum { m, .. } => *m,
            RatioKind::Bernstein { j, .. } => *j,
            _ => 1,
        }
    }
}

/// Measure `alpha` (its recurrence table gives the nodes and the coefficient basis), measure
/// `beta`, exponent `p` and node count `n`.
#[derive(Debug, Clone)]
pub struct MzParams {
    pub alpha: Arc<RecurrenceTable>,
    pub beta: WeightSpec,
    pub p: f64,
    pub n: usize,
}

/// `sum_i weights_i |rows_i . c|^p`.
#[derive(Debug, Clone)]
struct Term {
    rows: Vec<f64>,
    weights: Vec<f64>,
}

impl Term {
    fn from_measure(d: &DiscreteMeasure, scale: impl Fn(f64) -> f64) -> Term {
        let dim = d.dim();
        let mut rows = Vec::with_capacity(d.len() * dim);
        for i in 0..d.len() {
            rows.extend_from_slice(d.row(i));
        }
        let weights = d.nodes().iter().zip(d.weights()).map(|(x, w)| w * scale(*x)).collect();
        Term { rows, weights }
    }

    fn derivative_rows(table: &RecurrenceTable, xs: &[f64], dim: usize, j: usize) -> Result<Vec<f64>, RatioError> {
        let per: Vec<Vec<f64>> = xs
            .par_iter()
            .map(|&x| table.eval_all_derivs(x, dim, j).map(|mut d| d.swap_remove(j)))
            .collect::<Result<_, _>>()?;
        Ok(per.concat())
    }

    fn eval(&self, c: &[f64], p: f64, grad: Option<&mut [f64]>) -> f64 {
        let dim = c.len();
        let mut total = 0.0;
        let mut g = grad;
        for (row, w) in self.rows.chunks_exact(dim).zip(&self.weights) {
            if *w == 0.0 {
                continue;
            }
            let v: f64 = row.iter().zip(c).map(|(a, b)| a * b).sum();
            let a = v.abs();
            total += w * a.powf(p);
            if let Some(g) = g.as_deref_mut() {
                let s = w * p * a.powf(p - 1.0) * v.signum();
                for (gi, r) in g.iter_mut().zip(row) {
                    *gi += s * r;
                }
            }
        }
        total
    }
}

struct Problem {
    num: Vec<Term>,
    den: Vec<Term>,
    den_scale: f64,
    root: bool,
    p: f64,
    dim: usize,
    /// Points where kernel spikes are centered, with the spike's natural offset scale.
    centers: Vec<(f64, f64)>,
    /// Cotes numbers and `u` at the Gauss nodes, when the discrete side is a plain Gauss sum.
    gauss_side: Option<(Vec<f64>, Vec<f64>)>,
}

impl Problem {
    fn sides(&self, c: &[f64], grads: Option<(&mut [f64], &mut [f64])>) -> (f64, f64) {
        match grads {
            Some((gn, gd)) => {
                let num = self.num.iter().map(|t| t.eval(c, self.p, Some(gn))).sum();
                let den = self.den.iter().map(|t| t.eval(c, self.p, Some(gd))).sum();
                (num, den)
            }
            None => (self.num.iter().map(|t| t.eval(c, self.p, None)).sum(), self.den.iter().map(|t| t.eval(c, self.p, None)).sum()),
        }
    }

    fn ratio(&self, c: &[f64]) -> Result<f64, RatioError> {
        let (num, den) = self.sides(c, None);
        self.finish(num, den)
    }

    fn finish(&self, num: f64, den: f64) -> Result<f64, RatioError> {
        let r = checked_ratio(num, den * self.den_scale)?;
        Ok(if self.root { r.powf(1.0 / self.p) } else { r })
    }

    /// Boyd's power method for Lagrange interpolation from `l^p(u lambda)` at the nodes to
    /// `L^p(dbeta)`. The node matrix `B_kj = p_j(x_k)` has inverse `B^T diag(lambda)`.
    fn boyd_step(&self, c: &[f64], lam: &[f64], u: &[f64]) -> Vec<f64> {
        let mut h = vec![0.0; self.dim];
        self.num[0].eval(c, self.p, Some(&mut h));
        let q = self.p / (self.p - 1.0);
        let mut out = vec![0.0; self.dim];
        for ((row, l), uk) in self.den[0].rows.chunks_exact(self.dim).zip(lam).zip(u) {
            let bh: f64 = row.iter().zip(&h).map(|(a, b)| a * b).sum();
            let y = (bh / uk).signum() * (bh / uk).abs().powf(q - 1.0);
            for (o, r) in out.iter_mut().zip(row) {
                *o += l * y * r;
            }
        }
        let scale = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale > 0.0 {
            out.iter_mut().for_each(|v| *v /= scale);
        }
        out
    }

    /// Local ascent keeping the best iterate: Boyd's power method when the discrete side is a
    /// Gauss sum with `p > 1`, otherwise normalized gradient ascent on `log(num / den)`.
    fn ascend(&self, c: &mut Vec<f64>, mut best: f64, steps: usize) -> (f64, usize) {
        if let (Some((lam, u)), true) = (&self.gauss_side, self.p > 1.0) {
            let mut used = 0;
            let mut cur = c.clone();
            for step in 1..=steps {
                cur = self.boyd_step(&cur, lam, u);
                if let Ok(r) = self.ratio(&cur) {
                    if r > best {
                        best = r;
                        c.clone_from(&cur);
                        used = step;
                    }
                }
            }
            return (best, used);
        }
        let mut eta = 0.3;
        let mut used = 0;
        for step in 1..=steps {
            let mut gn = vec![0.0; self.dim];
            let mut gd = vec![0.0; self.dim];
            let (num, den) = self.sides(c, Some((&mut gn, &mut gd)));
            if !(num > 0.0 && den > 0.0) {
                break;
            }
            let g: Vec<f64> = gn.iter().zip(&gd).map(|(a, b)| a / num - b / den).collect();
            let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            let cnorm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(gnorm > 0.0) || !gnorm.is_finite() {
                break;
            }
            let trial: Vec<f64> = c.iter().zip(&g).map(|(ci, gi)| ci + eta * cnorm * gi / gnorm).collect();
            match self.ratio(&trial) {
                Ok(r) if r > best => {
                    best = r;
                    *c = trial;
                    used = step;
                    eta *= 1.5;
                }
                _ => eta *= 0.3,
            }
        }
        (best, used)
    }

    fn sample(&self, table: &RecurrenceTable, theorem: &str, params: &MzParams, m: usize, sampler: &Sampler, trial: usize) -> Result<RatioSample, RatioError> {
        let (c, witness) = self.initial(table, sampler, trial)?;
        let mut c = c;
        let start = self.ratio(&c)?;
        let (ratio, used) = self.ascend(&mut c, start, sampler.power_steps);
        Ok(RatioSample {
            theorem: theorem.into(),
            ratio,
            n: params.n,
            p: params.p,
            m,
            seed: sampler.seed,
            trial,
            witness: format!("{witness}; {used} ascent steps"),
            digest: digest(&c),
        })
    }

    fn initial(&self, table: &RecurrenceTable, sampler: &Sampler, trial: usize) -> Result<(Vec<f64>, String), RatioError> {
        let mut rng = trial_rng(sampler.seed, trial);
        let mut c = vec![0.0; self.dim];
        if trial.is_multiple_of(2) {
            let k = rng.random_range(1..=self.dim);
            for ci in c.iter_mut().take(k) {
                *ci = rng.sample(StandardNormal);
            }
            Ok((c, format!("random degree<{k}")))
        } else {
            let (t, scale) = self.centers[rng.random_range(0..self.centers.len())];
            let r: f64 = rng.random_range(0.0..4.0);
            let y = if t >= 1.0 {
                1.0 - r * scale
            } else if t <= -1.0 {
                -1.0 + r * scale
            } else {
                t + (r - 2.0) * scale
            };
            let y = y.clamp(-1.0, 1.0);
            table.eval_all(y, &mut c)?;
            Ok((c, format!("kernel at {y:.8}")))
        }
    }
}

fn build_problem(kind: &RatioKind, params: &MzParams) -> Result<Problem, RatioError> {
    let MzParams { alpha, beta, p, n } = params;
    let (p, n) = (*p, *n);
    if !(p >= 1.0) || !p.is_finite() {
        return Err(RatioError::Invalid(format!("p = {p} must be at least 1")));
    }
    if n == 0 {
        return Err(RatioError::Invalid("n must be positive".into()));
    }
    let dim = kind.dim(n);
    if dim > alpha.n_max() + 1 {
        return Err(RatioError::Invalid(format!("need {dim} basis polynomials; table has {}", alpha.n_max() + 1)));
    }
    // |P|^p has kinks at the zeros of P for odd or fractional p, so the rule is oversampled
    let degree = 4 * dim * (p.max(2.0).ceil() as usize);
    let rule = || alpha.gauss_rule(n);
    let node_term = |rule: &GaussRule, weights: Vec<f64>, j: usize| -> Result<Term, RatioError> {
        Ok(Term { rows: Term::derivative_rows(alpha, &rule.nodes, dim, j)?, weights })
    };
    let beta_d = |extra: Option<&WeightSpec>| -> Result<DiscreteMeasure, RatioError> {
        let mut terms: Vec<(Arc<dyn Density>, f64)> = vec![(Arc::new(beta.clone()), 1.0)];
        if let Some(e) = extra {
            terms.push((Arc::new(e.clone()), 0.0));
        }
        DiscreteMeasure::for_density(alpha, &PowerProduct { terms }, degree, dim)
    };
    let nf = n as f64;
    let mut centers: Vec<(f64, f64)> = Vec::new();
    for spec in [alpha.measure().exponents(), beta.clone()] {
        for (i, &t) in spec.points().iter().enumerate() {
            let scale = if spec.is_endpoint(i) { 1.0 / (nf * nf) } else { 1.0 / nf };
            if !centers.iter().any(|c| c.0 == t) {
                centers.push((t, scale));
            }
        }
    }
    let mut problem = Problem { num: vec![], den: vec![], den_scale: 1.0, root: true, p, dim, centers, gauss_side: None };
    match kind {
        RatioKind::Mz { u } => {
            let r = rule()?;
            let uk = r.nodes.iter().map(|x| u.eval(*x)).collect::<Result<Vec<_>, _>>()?;
            let w = uk.iter().zip(&r.cotes).map(|(a, l)| a * l).collect();
            problem.num.push(Term::from_measure(&beta_d(None)?, |_| 1.0));
            problem.den.push(node_term(&r, w, 0)?);
            problem.gauss_side = Some((r.cotes.clone(), uk));
            problem.centers.extend(r.nodes.iter().map(|&x| (x, 0.0)));
        }
        RatioKind::MzHermite { m, sigma } => {
            let r = rule()?;
            let lam = sigma_weights(sigma, &r)?;
            problem.num.push(Term::from_measure(&beta_d(None)?, |_| 1.0));
            for j in 0..*m {
                let w = r.nodes.iter().zip(&lam).map(|(x, l)| l * (varphi(*x, None) / nf).powi(j as i32).powf(p)).collect();
                problem.den.push(node_term(&r, w, j)?);
            }
            problem.centers.extend(r.nodes.iter().map(|&x| (x, 0.0)));
        }
        RatioKind::QuadSum { v, .. } => {
            let r = rule()?;
            let lam = r.nodes.iter().map(|&x| Ok(v.christoffel(n, x)?)).collect::<Result<Vec<_>, RatioError>>()?;
            problem.num.push(node_term(&r, lam, 0)?);
            let d = DiscreteMeasure::for_density(alpha, v.measure().as_ref(), degree, dim)?;
            problem.den.push(Term::from_measure(&d, |_| 1.0));
            problem.root = false;
            problem.centers.extend(r.nodes.iter().map(|&x| (x, 0.0)));
        }
        RatioKind::Bernstein { w, j } => {
            w.eval_regularized(n, 0.0)?;
            let extra: Vec<Arc<dyn Density>> = vec![Arc::new(w.clone())];
            let d = DiscreteMeasure::new(alpha, &extra, degree, dim)?;
            let reg = |x: f64| w.eval_regularized(n, x).unwrap_or(0.0) * varphi(x, Some(n));
            let rows = Term::derivative_rows(alpha, d.nodes(), dim, *j)?;
            let weights = d.nodes().iter().zip(d.weights()).map(|(x, wt)| wt * reg(*x) * varphi(*x, Some(n)).powi(*j as i32).powf(p)).collect();
            problem.num.push(Term { rows, weights });
            problem.den.push(Term::from_measure(&d, reg));
            problem.den_scale = nf.powf(*j as f64 * p);
            problem.root = false;
        }
        RatioKind::Restricted { u, eps } => {
            let region = delta_region(n, *eps, &support_points(beta, u)?)?;
            u.eval_regularized(n, 0.0)?;
            let d = beta_d(Some(u))?;
            let reg = |x: f64| u.eval_regularized(n, x).unwrap_or(0.0);
            problem.num.push(Term::from_measure(&d, reg));
            problem.den.push(Term::from_measure(&d, |x| if region.contains(x) { reg(x) } else { 0.0 }));
            problem.root = false;
        }
    }
    Ok(problem)
}

/// Largest ratio over `trials` sampled polynomials: random orthonormal expansions (even trials)
/// and Christoffel-Darboux kernel spikes at nodes, endpoints and singular points (odd trials),
/// each improved by `sampler.power_steps` ascent steps. Deterministic given the sampler seed.
pub fn adversarial_sup(kind: &RatioKind, params: &MzParams, sampler: &Sampler, trials: usize) -> Result<RatioSample, RatioError> {
    if trials == 0 {
        return Err(RatioError::Invalid("trials must be at least 1".into()));
    }
    let problem = build_problem(kind, params)?;
    let theorem = kind.theorem();
    let m = kind.m();
    sup_over_trials(trials, |t| problem.sample(&params.alpha, theorem, params, m, sampler, t))
}

/// Recomputes the witness of trial `trial`: its orthonormal coefficients in the basis of
/// `params.alpha` and the sample.
pub fn replay(kind: &RatioKind, params: &MzParams, sampler: &Sampler, trial: usize) -> Result<(Vec<f64>, RatioSample), RatioError> {
    let problem = build_problem(kind, params)?;
    let (mut c, _) = problem.initial(&params.alpha, sampler, trial)?;
    let start = problem.ratio(&c)?;
    problem.ascend(&mut c, start, sampler.power_steps);
    let sample = problem.sample(&params.alpha, kind.theorem(), params, kind.m(), sampler, trial)?;
    Ok((c, sample))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditions::u_for_lagrange;
    use crate::orthopoly::recurrence_table;
    use crate::weights::Factor;
    use proptest::prelude::*;
    use rand::Rng;

    const TOL: f64 = 1e-11;

    fn table(spec: &WeightSpec, n: usize) -> Arc<RecurrenceTable> {
        Arc::new(recurrence_table(spec, n, ORTHO_TOL).unwrap())
    }

    fn ortho(t: &Arc<RecurrenceTable>, coeffs: Vec<f64>) -> PolyEvaluator {
        PolyEvaluator::Orthogonal { table: t.clone(), coeffs }
    }

    fn random_coeffs(seed: u64, k: usize) -> Vec<f64> {
        let mut rng = trial_rng(seed, 0);
        (0..k).map(|_| rng.sample(StandardNormal)).collect()
    }

    fn gj_log() -> WeightSpec {
        WeightSpec::endpoints(Factor::new(0.25, 1.0), Factor::new(-0.25, -1.0)).with_interior(0.3, Factor::new(1.0, -1.0)).unwrap()
    }

    #[test]
    fn mz_identity_at_p2() {
        for spec in [WeightSpec::legendre(), WeightSpec::chebyshev(), gj_log()] {
            let t = table(&spec, 64);
            for (i, n) in [4usize, 9, 16, 33].into_iter().enumerate() {
                let rule = t.gauss_rule(n).unwrap();
                let p = ortho(&t, random_coeffs(i as u64, n));
                let r = mz_ratio(&p, &spec, &WeightSpec::legendre(), 2.0, &rule, TOL).unwrap();
                assert!((r.ratio - 1.0).abs() < 1e-8, "{} n={n} {}", spec.label(), r.ratio);
                let mut c = vec![0.0; n];
                c[n - 1] = 1.0;
                let r = mz_ratio(&ortho(&t, c), &spec, &WeightSpec::legendre(), 2.0, &rule, TOL).unwrap();
                assert!((r.ratio - 1.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn zero_polynomial_is_rejected() {
        let t = table(&WeightSpec::legendre(), 8);
        let rule = t.gauss_rule(4).unwrap();
        let one = WeightSpec::legendre();
        assert_eq!(mz_ratio(&ortho(&t, vec![0.0; 4]), &one, &one, 2.0, &rule, TOL), Err(RatioError::ZeroDenominator));
    }

    #[test]
    fn hermite_reduces_and_dominates() {
        let a = gj_log();
        let b = WeightSpec::legendre();
        let t = table(&a, 40);
        let n = 10;
        let rule = t.gauss_rule(n).unwrap();
        let sigma = sigma_table(&a, &b, 1, n).unwrap();
        let lam = sigma_weights(&sigma, &rule).unwrap();
        let p = ortho(&t, random_coeffs(3, n));
        let h1 = mz_hermite_ratio(&p, &b, 3.0, 1, &rule, &sigma, TOL).unwrap();
        let direct = mz_ratio_weighted(&p, &b, 3.0, &rule.nodes, &lam, TOL).unwrap();
        assert!((h1.ratio - direct).abs() < 1e-10 * direct);
        // with the same sigma weights the m-term denominator only gains nonnegative terms
        let q = ortho(&t, random_coeffs(4, 2 * n));
        let mut prev = f64::INFINITY;
        for m in 1..=3 {
            let r = mz_hermite_ratio(&q, &b, 3.0, m, &rule, &sigma, TOL).unwrap().ratio;
            assert!(r <= prev && r.is_finite());
            prev = r;
        }
        // u = a'/sigma' makes the discrete weights comparable
        let u = u_for_lagrange(&a, &b).unwrap();
        let m1 = mz_ratio(&p, &b, &u, 3.0, &rule, TOL).unwrap().ratio;
        assert!(m1 / h1.ratio < 10.0 && h1.ratio / m1 < 10.0);
    }

    #[test]
    fn quad_sum_examples() {
        let ch = WeightSpec::chebyshev();
        let t = table(&ch, 40);
        for n in [4, 8, 16] {
            let rule = t.gauss_rule(n).unwrap();
            let p = ortho(&t, random_coeffs(n as u64, n + 1));
            let r = quad_sum_ratio(&p, &t, 2.0, &rule, TOL).unwrap();
            assert!(r.ratio <= 1.0 + 1e-8, "{}", r.ratio);
            let one = ortho(&t, vec![1.0]);
            let r = quad_sum_ratio(&one, &t, 2.0, &rule, TOL).unwrap();
            assert!((r.ratio - 1.0).abs() < 1e-8);
        }
        let params = MzParams { alpha: t.clone(), beta: ch.clone(), p: 2.0, n: 8 };
        let kind = RatioKind::QuadSum { v: t.clone(), m: 2 };
        let s = adversarial_sup(&kind, &params, &Sampler::new(1), 40).unwrap();
        assert!(s.ratio.is_finite() && s.ratio > 0.0);
    }

    #[test]
    fn bernstein_examples() {
        let ch = WeightSpec::chebyshev();
        let one = WeightSpec::legendre();
        let t = table(&ch, 160);
        let r = bernstein_ratio(&ortho(&t, vec![1.0]), &ch, &one, 2.0, 1, 8, TOL).unwrap();
        assert_eq!(r.ratio, 0.0);
        let vals: Vec<f64> = [8usize, 16, 32, 64, 128]
            .iter()
            .map(|&n| {
                let mut c = vec![0.0; n + 1];
                c[n] = 1.0;
                bernstein_ratio(&ortho(&t, c), &ch, &one, 2.0, 1, n, TOL).unwrap().ratio
            })
            .collect();
        let (lo, hi) = vals.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
        assert!(hi / lo <= 3.0, "{vals:?}");
    }

    #[test]
    fn restricted_examples() {
        let leg = WeightSpec::legendre();
        let t = table(&leg, 160);
        let one = ortho(&t, vec![1.0]);
        let r1 = restricted_ratio(&one, &leg, &leg, 2.0, 8, 1e-3, TOL).unwrap().ratio;
        let r2 = restricted_ratio(&one, &leg, &leg, 2.0, 8, 1e-6, TOL).unwrap().ratio;
        assert!(r2 < r1 && (r2 - 1.0).abs() < 1e-6);
        for n in [8usize, 16, 32, 64, 128] {
            let mut c = vec![0.0; n + 1];
            c[n] = 1.0;
            let r = restricted_ratio(&ortho(&t, c), &leg, &leg, 2.0, n, 0.5, TOL).unwrap().ratio;
            assert!(r <= 10.0, "n={n} {r}");
        }
    }

    #[test]
    fn adversarial_single_trial_matches_direct_ratio() {
        let ch = WeightSpec::chebyshev();
        let t = table(&ch, 64);
        let params = MzParams { alpha: t.clone(), beta: ch.clone(), p: 3.0, n: 12 };
        let kind = RatioKind::Mz { u: WeightSpec::legendre() };
        let sampler = Sampler::new(9);
        for trial in [0, 1] {
            let (c, s) = replay(&kind, &params, &sampler, trial).unwrap();
            let rule = t.gauss_rule(12).unwrap();
            let direct = mz_ratio(&ortho(&t, c), &ch, &WeightSpec::legendre(), 3.0, &rule, TOL).unwrap().ratio;
            assert!((s.ratio - direct).abs() < 1e-6 * direct, "{} {direct}", s.ratio);
        }
        let one = adversarial_sup(&kind, &params, &sampler, 1).unwrap();
        assert_eq!(one, replay(&kind, &params, &sampler, 0).unwrap().1);
        let mut prev = 0.0;
        for trials in [1, 3, 8, 20] {
            let r = adversarial_sup(&kind, &params, &sampler, trials).unwrap().ratio;
            assert!(r >= prev);
            prev = r;
        }
    }

    #[test]
    fn adversarial_mz_at_p2_is_one() {
        let leg = WeightSpec::legendre();
        let t = table(&leg, 64);
        for n in [4, 16, 64] {
            let params = MzParams { alpha: t.clone(), beta: leg.clone(), p: 2.0, n };
            let s = adversarial_sup(&RatioKind::Mz { u: leg.clone() }, &params, &Sampler::new(2), 30).unwrap();
            assert!((s.ratio - 1.0).abs() < 1e-8, "n={n} {}", s.ratio);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn ratios_are_scale_invariant(seed in 0u64..1000, scale in prop_oneof![-1e3f64..-1e-3, 1e-3f64..1e3]) {
            let a = gj_log();
            let t = table(&a, 24);
            let n = 8;
            let rule = t.gauss_rule(n).unwrap();
            let c = random_coeffs(seed, n);
            let cs: Vec<f64> = c.iter().map(|v| v * scale).collect();
            let (p1, p2) = (ortho(&t, c), ortho(&t, cs));
            let leg = WeightSpec::legendre();
            let r = |p: &PolyEvaluator| [
                mz_ratio(p, &leg, &leg, 3.0, &rule, TOL).unwrap().ratio,
                quad_sum_ratio(p, &t, 2.5, &rule, TOL).unwrap().ratio,
                bernstein_ratio(p, &a, &leg, 2.0, 1, n, TOL).unwrap().ratio,
                restricted_ratio(p, &a, &leg, 2.0, n, 0.5, TOL).unwrap().ratio,
            ];
            for (x, y) in r(&p1).iter().zip(r(&p2)) {
                prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-300) * 10.0);
            }
        }
    }
}
