//! Orthonormal polynomials for a weight on [-1, 1]: recurrence coefficients, evaluation,
//! Gauss rules, Christoffel function and the Christoffel-Darboux kernel.

use std::io::{BufRead, Write};
use std::sync::{Arc, OnceLock};

use thiserror::Error;

use crate::quad::{self, QuadError};
use crate::weights::{local_integrability, varphi, Density, Verdict, WeightSpec};

pub const DEFAULT_N_MAX: usize = 512;
pub const DEFAULT_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrthoError {
    #[error("weight is not integrable near t = {at}")]
    NotIntegrable { at: f64 },
    #[error("recurrence construction did not settle (last change {change:e})")]
    ConvergenceFailure { change: f64 },
    #[error("degree {n} outside 0..={max}")]
    DegreeOutOfRange { n: usize, max: usize },
    #[error("eigenvalue iteration failed for n = {0}")]
    EigenFailure(usize),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error("table format: {0}")]
    Format(String),
}

/// Symmetric Jacobi matrix of the orthonormal system:
/// `x p_k = b_{k+1} p_{k+1} + a_k p_k + b_k p_{k-1}`.
#[derive(Debug)]
pub struct RecurrenceTable {
    measure: Arc<dyn Density>,
    a: Vec<f64>,
    b: Vec<f64>,
    mu0: f64,
    fine: OnceLock<GaussRule>,
}

impl Clone for RecurrenceTable {
    fn clone(&self) -> Self {
        RecurrenceTable {
            measure: self.measure.clone(),
            a: self.a.clone(),
            b: self.b.clone(),
            mu0: self.mu0,
            fine: OnceLock::new(),
        }
    }
}

/// Gauss rule with nodes in decreasing order `x_1n > x_2n > ... > x_nn`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub n: usize,
    pub nodes: Vec<f64>,
    pub cotes: Vec<f64>,
    pub derivatives: Vec<f64>,
}

pub fn recurrence_table(spec: &WeightSpec, n: usize, tol: f64) -> Result<RecurrenceTable, OrthoError> {
    RecurrenceTable::build(Arc::new(spec.clone()), n, tol)
}

fn stieltjes(nodes: &[(f64, f64)], n: usize) -> (Vec<f64>, Vec<f64>, f64) {
    let mu0: f64 = nodes.iter().map(|(_, w)| w).sum();
    let m = nodes.len();
    let mut prev = vec![0.0; m];
    let mut cur = vec![1.0 / mu0.sqrt(); m];
    let mut a = Vec::with_capacity(n);
    let mut b = vec![0.0];
    for k in 0..n {
        let ak: f64 = nodes.iter().zip(&cur).map(|((x, w), p)| w * x * p * p).sum();
        let bk = b[k];
        let mut next: Vec<f64> = (0..m).map(|j| (nodes[j].0 - ak) * cur[j] - bk * prev[j]).collect();
        // one pass of reorthogonalization against p_k and p_{k-1}
        for basis in [&cur, &prev] {
            let c: f64 = (0..m).map(|j| nodes[j].1 * next[j] * basis[j]).sum();
            for j in 0..m {
                next[j] -= c * basis[j];
            }
        }
        let norm = nodes.iter().zip(&next).map(|((_, w), p)| w * p * p).sum::<f64>().sqrt();
        for v in next.iter_mut() {
            *v /= norm;
        }
        a.push(ak);
        b.push(norm);
        prev = std::mem::replace(&mut cur, next);
    }
    (a, b, mu0)
}

impl RecurrenceTable {
    /// Discretized Stieltjes procedure on a composite rule that is exact for polynomials of
    /// degree `2n + 2`; the rule is refined until the coefficients stop moving.
    pub fn build(measure: Arc<dyn Density>, n: usize, tol: f64) -> Result<Self, OrthoError> {
        let n = n.max(1);
        let spec = measure.exponents();
        for (t, f) in spec.points().iter().zip(spec.factors()) {
            if local_integrability(*f) != Verdict::Holds {
                return Err(OrthoError::NotIntegrable { at: *t });
            }
        }
        let degree = 2 * n + 2;
        let threshold = tol.max(1e-13);
        let mut over = 1.0;
        let mut last = stieltjes(&quad::discretize(measure.as_ref(), degree, over)?, n);
        let mut change = f64::INFINITY;
        for _ in 0..4 {
            over *= 1.6;
            let next = stieltjes(&quad::discretize(measure.as_ref(), degree, over)?, n);
            change = last
                .0
                .iter()
                .zip(&next.0)
                .chain(last.1.iter().zip(&next.1))
                .map(|(p, q)| (p - q).abs())
                .fold((last.2 / next.2 - 1.0).abs(), f64::max);
            last = next;
            if change <= threshold {
                let (a, b, mu0) = last;
                return Ok(RecurrenceTable { measure, a, b, mu0, fine: OnceLock::new() });
            }
        }
        Err(OrthoError::ConvergenceFailure { change })
    }

    pub fn measure(&self) -> &Arc<dyn Density> {
        &self.measure
    }

    pub fn n_max(&self) -> usize {
        self.a.len()
    }

    pub fn mu0(&self) -> f64 {
        self.mu0
    }

    pub fn a(&self, k: usize) -> f64 {
        self.a[k]
    }

    /// Off-diagonal `b_k`, `1 <= k <= n_max`.
    pub fn b(&self, k: usize) -> f64 {
        self.b[k]
    }

    fn check(&self, n: usize) -> Result<(), OrthoError> {
        if n > self.n_max() {
            return Err(OrthoError::DegreeOutOfRange { n, max: self.n_max() });
        }
        Ok(())
    }

    /// `p_n(x)` and `p_n'(x)` by the forward recurrence.
    pub fn eval_poly(&self, n: usize, x: f64) -> Result<(f64, f64), OrthoError> {
        self.check(n)?;
        let (mut p0, mut p1) = (0.0, 1.0 / self.mu0.sqrt());
        let (mut d0, mut d1) = (0.0, 0.0);
        for k in 0..n {
            let p2 = ((x - self.a[k]) * p1 - self.b[k] * p0) / self.b[k + 1];
            let d2 = (p1 + (x - self.a[k]) * d1 - self.b[k] * d0) / self.b[k + 1];
            (p0, p1, d0, d1) = (p1, p2, d1, d2);
        }
        Ok((p1, d1))
    }

    /// Writes `p_0(x), ..., p_{out.len()-1}(x)`.
    pub fn eval_all(&self, x: f64, out: &mut [f64]) -> Result<(), OrthoError> {
        if out.is_empty() {
            return Ok(());
        }
        self.check(out.len() - 1)?;
        out[0] = 1.0 / self.mu0.sqrt();
        let mut prev = 0.0;
        for k in 0..out.len() - 1 {
            let next = ((x - self.a[k]) * out[k] - self.b[k] * prev) / self.b[k + 1];
            prev = out[k];
            out[k + 1] = next;
        }
        Ok(())
    }

    /// `out[i][k] = p_k^{(i)}(x)` for `i <= order`, `k < dim`.
    pub fn eval_all_derivs(&self, x: f64, dim: usize, order: usize) -> Result<Vec<Vec<f64>>, OrthoError> {
        let mut out = vec![vec![0.0; dim]; order + 1];
        if dim == 0 {
            return Ok(out);
        }
        self.check(dim - 1)?;
        out[0][0] = 1.0 / self.mu0.sqrt();
        for k in 0..dim - 1 {
            for i in 0..=order {
                let prev = if k > 0 { out[i][k - 1] } else { 0.0 };
                let lower = if i > 0 { i as f64 * out[i - 1][k] } else { 0.0 };
                out[i][k + 1] = ((x - self.a[k]) * out[i][k] + lower - self.b[k] * prev) / self.b[k + 1];
            }
        }
        Ok(out)
    }

    /// `sum_k c_k p_k(x)` by Clenshaw's recurrence.
    pub fn eval_series(&self, coeffs: &[f64], x: f64) -> f64 {
        let n = coeffs.len();
        if n == 0 {
            return 0.0;
        }
        let (mut u1, mut u2) = (0.0, 0.0);
        for k in (0..n).rev() {
            let next_b = if k + 1 < n { self.b[k + 1] } else { 1.0 };
            let after_b = if k + 2 < n + 1 && k + 2 <= self.n_max() { self.b[k + 2] } else { 1.0 };
            let u = coeffs[k] + (x - self.a[k]) / next_b * u1 - next_b / after_b * u2;
            u2 = u1;
            u1 = u;
        }
        u1 / self.mu0.sqrt()
    }

    /// Value and derivative of `sum_k c_k p_k`.
    pub fn eval_series_deriv(&self, coeffs: &[f64], x: f64) -> (f64, f64) {
        let (mut p0, mut p1) = (0.0, 1.0 / self.mu0.sqrt());
        let (mut d0, mut d1) = (0.0, 0.0);
        let (mut v, mut d) = (0.0, 0.0);
        for (k, c) in coeffs.iter().enumerate() {
            v += c * p1;
            d += c * d1;
            if k + 1 < coeffs.len() {
                let p2 = ((x - self.a[k]) * p1 - self.b[k] * p0) / self.b[k + 1];
                let d2 = (p1 + (x - self.a[k]) * d1 - self.b[k] * d0) / self.b[k + 1];
                (p0, p1, d0, d1) = (p1, p2, d1, d2);
            }
        }
        (v, d)
    }

    /// `(d/dx)^i sum_k c_k p_k(x)` for `i = 0..=order`, from the recurrence differentiated
    /// `i` times: `b_{k+1} p_{k+1}^{(i)} = (x - a_k) p_k^{(i)} + i p_k^{(i-1)} - b_k p_{k-1}^{(i)}`.
    pub fn eval_series_derivs(&self, coeffs: &[f64], x: f64, order: usize) -> Vec<f64> {
        let mut out = vec![0.0; order + 1];
        let mut prev = vec![0.0; order + 1];
        let mut cur = vec![0.0; order + 1];
        cur[0] = 1.0 / self.mu0.sqrt();
        for (k, c) in coeffs.iter().enumerate() {
            for i in 0..=order {
                out[i] += c * cur[i];
            }
            if k + 1 < coeffs.len() {
                let mut next = vec![0.0; order + 1];
                for i in 0..=order {
                    let lower = if i > 0 { i as f64 * cur[i - 1] } else { 0.0 };
                    next[i] = ((x - self.a[k]) * cur[i] + lower - self.b[k] * prev[i]) / self.b[k + 1];
                }
                prev = std::mem::replace(&mut cur, next);
            }
        }
        out
    }

    pub fn gauss_rule(&self, n: usize) -> Result<GaussRule, OrthoError> {
        self.check(n)?;
        if n == 0 {
            return Ok(GaussRule { n, nodes: vec![], cotes: vec![], derivatives: vec![] });
        }
        let mut d: Vec<f64> = self.a[..n].to_vec();
        let mut e: Vec<f64> = (1..n).map(|k| self.b[k]).chain([0.0]).collect();
        let mut z = vec![0.0; n];
        z[0] = 1.0;
        tridiagonal_ql(&mut d, &mut e, &mut z).ok_or(OrthoError::EigenFailure(n))?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).unwrap());
        let mut nodes = Vec::with_capacity(n);
        let mut cotes = Vec::with_capacity(n);
        let mut derivatives = Vec::with_capacity(n);
        let mut buf = vec![0.0; n];
        for &i in &order {
            let mut x = d[i];
            let (mut p, mut dp) = self.eval_poly(n, x)?;
            if dp != 0.0 {
                let step = p / dp;
                if step.abs() < 1e-6 {
                    x -= step;
                    (p, dp) = self.eval_poly(n, x)?;
                }
            }
            let _ = p;
            // Christoffel sums give the Cotes numbers to full relative precision, including
            // the nodes closest to the endpoints where mu0 * z^2 loses digits
            self.eval_all(x, &mut buf)?;
            let lam = 1.0 / buf.iter().map(|v| v * v).sum::<f64>();
            nodes.push(x);
            cotes.push(lam);
            derivatives.push(dp);
        }
        let _ = z;
        Ok(GaussRule { n, nodes, cotes, derivatives })
    }

    /// `lambda_n(x) = 1 / sum_{k<n} p_k(x)^2`.
    pub fn christoffel(&self, n: usize, x: f64) -> Result<f64, OrthoError> {
        Ok(1.0 / self.cd_kernel(n, x, x)?)
    }

    /// `K_n(x, y) = sum_{k<n} p_k(x) p_k(y)` by direct summation.
    pub fn cd_kernel(&self, n: usize, x: f64, y: f64) -> Result<f64, OrthoError> {
        if n == 0 {
            return Ok(0.0);
        }
        self.check(n)?;
        let (mut px0, mut px1) = (0.0, 1.0 / self.mu0.sqrt());
        let (mut py0, mut py1) = (0.0, px1);
        let mut sum = 0.0;
        for k in 0..n {
            sum += px1 * py1;
            if k + 1 < n {
                let nx = ((x - self.a[k]) * px1 - self.b[k] * px0) / self.b[k + 1];
                let ny = ((y - self.a[k]) * py1 - self.b[k] * py0) / self.b[k + 1];
                (px0, px1, py0, py1) = (px1, nx, py1, ny);
            }
        }
        Ok(sum)
    }

    /// Christoffel-Darboux quotient `b_n (p_n(x) p_{n-1}(y) - p_{n-1}(x) p_n(y)) / (x - y)`.
    pub fn cd_kernel_quotient(&self, n: usize, x: f64, y: f64) -> Result<f64, OrthoError> {
        if n == 0 {
            return Ok(0.0);
        }
        self.check(n)?;
        let (pnx, _) = self.eval_poly(n, x)?;
        let (pmx, _) = self.eval_poly(n - 1, x)?;
        let (pny, _) = self.eval_poly(n, y)?;
        let (pmy, _) = self.eval_poly(n - 1, y)?;
        Ok(self.b[n] * (pnx * pmy - pmx * pny) / (x - y))
    }

    /// Gauss rule with `n_max` nodes, exact for degree `2 n_max - 1`; built once.
    pub fn fine_rule(&self) -> Result<&GaussRule, OrthoError> {
        if let Some(r) = self.fine.get() {
            return Ok(r);
        }
        let r = self.gauss_rule(self.n_max())?;
        Ok(self.fine.get_or_init(|| r))
    }

    /// `c_k = int f p_k dalpha` for `k < n`, by adaptive quadrature.
    pub fn coefficients(&self, f: impl Fn(f64) -> f64 + Sync, n: usize, tol: f64) -> Result<Vec<f64>, OrthoError> {
        self.check(n.saturating_sub(1))?;
        let g = |t: f64, out: &mut [f64]| {
            let fv = f(t);
            let _ = self.eval_all(t, out);
            for o in out.iter_mut() {
                *o *= fv;
            }
        };
        let r = quad::integrate_many(&g, n, self.measure.as_ref(), &quad::Region::full(), tol)?;
        Ok(r.into_iter().map(|c| c.value).collect())
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), OrthoError> {
        let mut w = w;
        let fmt = |e: std::io::Error| OrthoError::Format(e.to_string());
        writeln!(w, "# mu0={:e} weight={}", self.mu0, self.measure.label()).map_err(fmt)?;
        let mut c = csv::Writer::from_writer(w);
        let cerr = |e: csv::Error| OrthoError::Format(e.to_string());
        c.write_record(["k", "a_k", "b_k"]).map_err(cerr)?;
        for k in 0..self.n_max() {
            c.write_record([k.to_string(), format!("{:e}", self.a[k]), format!("{:e}", self.b[k + 1])])
                .map_err(cerr)?;
        }
        c.flush().map_err(fmt)?;
        Ok(())
    }

    /// Reads a table written by [`RecurrenceTable::write_csv`] for a [`WeightSpec`] measure.
    pub fn read_csv<R: BufRead>(mut r: R) -> Result<Self, OrthoError> {
        let bad = |m: &str| OrthoError::Format(m.to_string());
        let mut header = String::new();
        r.read_line(&mut header).map_err(|e| OrthoError::Format(e.to_string()))?;
        let rest = header.trim().strip_prefix("# mu0=").ok_or_else(|| bad("missing header"))?;
        let (mu, record) = rest.split_once(" weight=").ok_or_else(|| bad("missing weight record"))?;
        let mu0: f64 = mu.parse().map_err(|_| bad("mu0"))?;
        let spec: WeightSpec = serde_json::from_str(record).map_err(|e| OrthoError::Format(e.to_string()))?;
        let mut a = Vec::new();
        let mut b = vec![0.0];
        for row in csv::Reader::from_reader(r).records() {
            let row = row.map_err(|e| OrthoError::Format(e.to_string()))?;
            let k: usize = row[0].parse().map_err(|_| bad("k"))?;
            if k != a.len() {
                return Err(bad("rows out of order"));
            }
            a.push(row[1].parse().map_err(|_| bad("a_k"))?);
            b.push(row[2].parse().map_err(|_| bad("b_k"))?);
        }
        if a.is_empty() || !(mu0 > 0.0) || b[1..].iter().any(|&v| !(v > 0.0)) {
            return Err(bad("empty or invalid table"));
        }
        Ok(RecurrenceTable { measure: Arc::new(spec), a, b, mu0, fine: OnceLock::new() })
    }
}

/// Normalized size of `p_n`, `p_n'` at the zeros, and `lambda_n` for one `n`.
///
/// Each ratio divides by the rate `(w(n,x) phi(n,x))^{-1/2}`, `n / (phi (w phi)^{1/2})` or
/// `w phi / n`, with `w(n, x)` from [`WeightSpec::eval_smoothed`]; uniform bounds for the
/// measure mean these stay in a fixed band as `n` grows.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct EnvelopeStats {
    pub n: usize,
    /// `max_x |p_n(x)| (w(n,x) phi(n,x))^{1/2}` over the probes.
    pub pn_sup: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub deriv_min: f64,
    pub deriv_max: f64,
}

/// Probe points for uniform estimates at degree `n`: a Chebyshev-spaced grid plus points at
/// distance `c / n^2` from the endpoints and `c / n` from the interior singular points.
pub fn envelope_probes(spec: &WeightSpec, n: usize, count: usize) -> Vec<f64> {
    let nf = n.max(1) as f64;
    let mut xs: Vec<f64> = (0..count).map(|j| (std::f64::consts::PI * (j as f64 + 0.5) / count as f64).cos()).collect();
    for c in [0.0, 0.1, 1.0, 4.0] {
        xs.push(1.0 - c / (nf * nf));
        xs.push(-1.0 + c / (nf * nf));
    }
    let pts = spec.points();
    for &t in &pts[1..pts.len() - 1] {
        for c in [0.01, 0.5, 2.0] {
            xs.extend([t - c / nf, t + c / nf]);
        }
        xs.push(t);
    }
    xs.retain(|x| (-1.0..=1.0).contains(x));
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup();
    xs
}

pub fn envelope_stats(table: &RecurrenceTable, spec: &WeightSpec, n: usize, probes: &[f64]) -> Result<EnvelopeStats, OrthoError> {
    let wphi = |x: f64| -> Result<f64, OrthoError> {
        let w = spec.eval_smoothed(n, x).map_err(|e| OrthoError::Format(e.to_string()))?;
        Ok(w * varphi(x, Some(n)))
    };
    let nf = n as f64;
    let mut out = EnvelopeStats {
        n,
        pn_sup: 0.0,
        lambda_min: f64::INFINITY,
        lambda_max: 0.0,
        deriv_min: f64::INFINITY,
        deriv_max: 0.0,
    };
    for &x in probes {
        let s = wphi(x)?;
        let (p, _) = table.eval_poly(n, x)?;
        out.pn_sup = out.pn_sup.max(p.abs() * s.sqrt());
        let r = table.christoffel(n, x)? * nf / s;
        out.lambda_min = out.lambda_min.min(r);
        out.lambda_max = out.lambda_max.max(r);
    }
    let rule = table.gauss_rule(n)?;
    for (&x, &d) in rule.nodes.iter().zip(&rule.derivatives) {
        let r = d.abs() * varphi(x, Some(n)) * wphi(x)?.sqrt() / nf;
        out.deriv_min = out.deriv_min.min(r);
        out.deriv_max = out.deriv_max.max(r);
    }
    Ok(out)
}

/// Implicit QL for a symmetric tridiagonal matrix (`d` diagonal, `e[i]` couples `i` and
/// `i + 1`), rotating `z` along so it ends as the first row of the eigenvector matrix.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], z: &mut [f64]) -> Option<()> {
    let n = d.len();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return None;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let zf = z[i + 1];
                z[i + 1] = s * z[i] + c * zf;
                z[i] = c * z[i] - s * zf;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Some(())
}
