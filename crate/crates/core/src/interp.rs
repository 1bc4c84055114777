//! Lagrange and Hermite interpolation at the zeros of `p_n`, a near-best uniform error proxy,
//! and weighted convergence sweeps.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::conditions::ConditionReport;
use crate::orthopoly::{GaussRule, OrthoError, RecurrenceTable};
use crate::quad::{self, QuadError, Region};
use crate::weights::Density;

/// Distance below which a fundamental polynomial is replaced by its node value.
pub const NODE_SNAP: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InterpError {
    #[error("expected {expected} values, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("divided differences overflowed; nodes too clustered for degree {0}")]
    NumericalBreakdown(usize),
    #[error(transparent)]
    Ortho(#[from] OrthoError),
    #[error(transparent)]
    Quad(#[from] QuadError),
}

/// Values `f^{(j)}(x_k)`, `j < m`, for every node.
#[derive(Debug, Clone, PartialEq)]
pub struct JetData {
    pub m: usize,
    pub jets: Vec<Vec<f64>>,
}

impl JetData {
    pub fn from_fn(nodes: &[f64], m: usize, f: impl Fn(f64) -> Vec<f64>) -> Self {
        JetData { m, jets: nodes.iter().map(|&x| f(x).into_iter().take(m).collect()).collect() }
    }
}

/// A polynomial in one of three representations.
#[derive(Debug, Clone)]
pub enum PolyEvaluator {
    /// `sum_k f_k p_n(x) / (p_n'(x_k) (x - x_k))`.
    Lagrange { table: Arc<RecurrenceTable>, nodes: Vec<f64>, derivs: Vec<f64>, values: Vec<f64>, cotes: Vec<f64> },
    /// Confluent Newton form on `points` with divided differences `coeffs`.
    Newton { points: Vec<f64>, coeffs: Vec<f64> },
    /// `sum_k c_k p_k` in the orthonormal basis of `table`.
    Orthogonal { table: Arc<RecurrenceTable>, coeffs: Vec<f64> },
}

impl PolyEvaluator {
    pub fn degree_bound(&self) -> usize {
        match self {
            PolyEvaluator::Lagrange { nodes, .. } => nodes.len().saturating_sub(1),
            PolyEvaluator::Newton { coeffs, .. } | PolyEvaluator::Orthogonal { coeffs, .. } => {
                coeffs.len().saturating_sub(1)
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            PolyEvaluator::Lagrange { table, nodes, derivs, values, .. } => {
                if let Some(k) = nodes.iter().position(|&t| (x - t).abs() < NODE_SNAP) {
                    return values[k];
                }
                let (pn, _) = table.eval_poly(nodes.len(), x).expect("degree checked at construction");
                nodes.iter().zip(derivs).zip(values).map(|((t, d), v)| v * pn / (d * (x - t))).sum()
            }
            PolyEvaluator::Newton { points, coeffs } => {
                let mut acc = 0.0;
                for i in (0..coeffs.len()).rev() {
                    acc = acc * (x - points[i]) + coeffs[i];
                }
                acc
            }
            PolyEvaluator::Orthogonal { table, coeffs } => table.eval_series(coeffs, x),
        }
    }

    /// Value and derivatives up to `order`, by analytic differentiation of the representation.
    pub fn derivs(&self, x: f64, order: usize) -> Vec<f64> {
        match self {
            PolyEvaluator::Newton { points, coeffs } => {
                let mut d = vec![0.0; order + 1];
                for i in (0..coeffs.len()).rev() {
                    for r in (1..=order).rev() {
                        d[r] = d[r] * (x - points[i]) + d[r - 1];
                    }
                    d[0] = d[0] * (x - points[i]) + coeffs[i];
                }
                let mut fact = 1.0;
                for (r, v) in d.iter_mut().enumerate().skip(1) {
                    fact *= r as f64;
                    *v *= fact;
                }
                d
            }
            PolyEvaluator::Orthogonal { table, coeffs } => table.eval_series_derivs(coeffs, x, order),
            PolyEvaluator::Lagrange { .. } => {
                if order == 0 {
                    return vec![self.eval(x)];
                }
                self.to_orthogonal().derivs(x, order)
            }
        }
    }

    /// Orthonormal coefficients of a Lagrange interpolant, exact by Gauss quadrature.
    pub fn to_orthogonal(&self) -> PolyEvaluator {
        match self {
            PolyEvaluator::Lagrange { table, nodes, values, cotes, .. } => {
                let n = nodes.len();
                let mut coeffs = vec![0.0; n];
                let mut buf = vec![0.0; n];
                for ((x, v), l) in nodes.iter().zip(values).zip(cotes) {
                    table.eval_all(*x, &mut buf).expect("degree checked at construction");
                    for (c, p) in coeffs.iter_mut().zip(&buf) {
                        *c += l * v * p;
                    }
                }
                PolyEvaluator::Orthogonal { table: table.clone(), coeffs }
            }
            other => other.clone(),
        }
    }
}

pub fn lagrange(rule: &GaussRule, table: &Arc<RecurrenceTable>, fvals: &[f64]) -> Result<PolyEvaluator, InterpError> {
    if fvals.len() != rule.n {
        return Err(InterpError::SizeMismatch { expected: rule.n, got: fvals.len() });
    }
    if rule.n > table.n_max() {
        return Err(OrthoError::DegreeOutOfRange { n: rule.n, max: table.n_max() }.into());
    }
    Ok(PolyEvaluator::Lagrange {
        table: table.clone(),
        nodes: rule.nodes.clone(),
        derivs: rule.derivatives.clone(),
        values: fvals.to_vec(),
        cotes: rule.cotes.clone(),
    })
}

/// Leja order: start at the largest `|x|`, then repeatedly take the point maximizing the product of
/// distances to those already chosen.
fn leja_order(nodes: &[f64]) -> Vec<usize> {
    let n = nodes.len();
    let mut order = Vec::with_capacity(n);
    let mut used = vec![false; n];
    let mut score = vec![0.0f64; n];
    let first = (0..n).max_by(|&i, &j| nodes[i].abs().partial_cmp(&nodes[j].abs()).unwrap()).unwrap_or(0);
    let mut last = first;
    for _ in 0..n {
        order.push(last);
        used[last] = true;
        let mut best = None;
        for i in 0..n {
            if used[i] {
                continue;
            }
            score[i] += (nodes[i] - nodes[last]).abs().ln();
            if best.is_none_or(|b: usize| score[i] > score[b]) {
                best = Some(i);
            }
        }
        match best {
            Some(b) => last = b,
            None => break,
        }
    }
    order
}

/// Confluent Hermite interpolant: `H^{(j)}(x_k) = f^{(j)}(x_k)` for `j < m`.
pub fn hermite(rule: &GaussRule, jets: &JetData, m: usize) -> Result<PolyEvaluator, InterpError> {
    let n = rule.n;
    if jets.jets.len() != n {
        return Err(InterpError::SizeMismatch { expected: n, got: jets.jets.len() });
    }
    if let Some(bad) = jets.jets.iter().find(|j| j.len() < m) {
        return Err(InterpError::SizeMismatch { expected: m, got: bad.len() });
    }
    let order = leja_order(&rule.nodes);
    let mut z = Vec::with_capacity(n * m);
    let mut node_of = Vec::with_capacity(n * m);
    for &k in &order {
        for _ in 0..m {
            z.push(rule.nodes[k]);
            node_of.push(k);
        }
    }
    let total = z.len();
    // d[i] holds the divided difference f[z_{i-j}, ..., z_i] after column j
    let mut d: Vec<f64> = node_of.iter().map(|&k| jets.jets[k][0]).collect();
    let mut coeffs = vec![d[0]];
    let mut fact = 1.0;
    for j in 1..total {
        fact *= j as f64;
        for i in (j..total).rev() {
            d[i] = if node_of[i] == node_of[i - j] {
                jets.jets[node_of[i]][j] / fact
            } else {
                (d[i] - d[i - 1]) / (z[i] - z[i - j])
            };
        }
        if !d[j].is_finite() {
            return Err(InterpError::NumericalBreakdown(total - 1));
        }
        coeffs.push(d[j]);
    }
    Ok(PolyEvaluator::Newton { points: z, coeffs })
}

/// Uniform error of the degree-`n` Chebyshev interpolant on a dense grid, an upper bound for
/// the best approximation error `E_n(f)` up to the Lebesgue constant of Chebyshev points.
pub fn best_error(f: impl Fn(f64) -> f64 + Sync, n: usize) -> f64 {
    let pts: Vec<f64> = (0..=n).map(|j| (PI * j as f64 / n.max(1) as f64).cos()).collect();
    let vals: Vec<f64> = pts.iter().map(|&x| f(x)).collect();
    let w: Vec<f64> = (0..=n)
        .map(|j| {
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == n { s / 2.0 } else { s }
        })
        .collect();
    let interp = |x: f64| {
        let (mut num, mut den) = (0.0, 0.0);
        for j in 0..=n {
            let dx = x - pts[j];
            if dx == 0.0 {
                return vals[j];
            }
            num += w[j] / dx * vals[j];
            den += w[j] / dx;
        }
        num / den
    };
    if n == 0 {
        let c = f(1.0);
        return (0..=2000).map(|i| (f(-1.0 + i as f64 / 1000.0) - c).abs()).fold(0.0, f64::max);
    }
    let m = 40 * (n + 1);
    (0..=m)
        .into_par_iter()
        .map(|i| {
            let x = (PI * (i as f64 + 0.5) / (m as f64 + 1.0)).cos();
            let y = -1.0 + 2.0 * i as f64 / m as f64;
            (interp(x) - f(x)).abs().max((interp(y) - f(y)).abs())
        })
        .reduce(|| 0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub error: f64,
}

#[derive(Debug, Clone)]
pub struct Sweep {
    pub rows: Vec<SweepRow>,
    pub report: ConditionReport,
}

/// `||H_{nm}^{(k)}(f) - f^{(k)}||_{dbeta,p}` for each `n`; `jet(x)` returns
/// `f(x), f'(x), ...` with at least `max(m, k + 1)` entries.
#[allow(clippy::too_many_arguments)]
pub fn converge_sweep(
    jet: impl Fn(f64) -> Vec<f64> + Sync,
    table: &Arc<RecurrenceTable>,
    beta: &dyn Density,
    p: f64,
    m: usize,
    k: usize,
    ns: &[usize],
    report: ConditionReport,
    tol: f64,
) -> Result<Sweep, InterpError> {
    let rows = ns
        .par_iter()
        .map(|&n| -> Result<SweepRow, InterpError> {
            let rule = table.gauss_rule(n)?;
            let jets = JetData::from_fn(&rule.nodes, m, &jet);
            let h = hermite(&rule, &jets, m)?;
            let diff = |x: f64| h.derivs(x, k)[k] - jet(x)[k];
            let error = match quad::lp_norm(diff, beta, p, &Region::full(), tol) {
                Ok(e) => e,
                // an error at round-off level has no relative accuracy; accept it against the target's scale
                Err(QuadError::NoConvergence { value, error, .. }) => {
                    let scale = quad::lp_norm(|x| jet(x)[k], beta, p, &Region::full(), tol)?.max(1.0);
                    if error > tol * scale.powf(p) {
                        return Err(QuadError::NoConvergence { value, error, panels: 0 }.into());
                    }
                    value.max(0.0).powf(1.0 / p)
                }
                Err(e) => return Err(e.into()),
            };
            Ok(SweepRow { n, error })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Sweep { rows, report })
}
