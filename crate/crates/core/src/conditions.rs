//! Exact decision of the exponent hypotheses behind the norm inequalities, for GJ·log
//! weights, and construction of the derived weights `U`, `V`, `v`, `v*` and `sigma'`.
//!
//! Every clause reduces to comparisons of `(Gamma_i, gamma_i)` at the singular points of a
//! product weight built with [`product`].

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::io::Write;
use std::sync::Arc;

use serde::Serialize;

use crate::weights::{
    classify, cmp_exponent, envelope, local_integrability, product, strictly_above, Density, EnvelopeMode,
    Factor, HFactor, Verdict, WeightError, WeightSpec,
};

/// The conjugate exponent `p / (p - 1)`.
pub fn conjugate(p: f64) -> f64 {
    p / (p - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Witness {
    pub index: usize,
    pub point: f64,
    pub power: f64,
    pub log_power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Clause {
    pub label: String,
    pub verdict: Verdict,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub theorem: String,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub m: Option<usize>,
    pub clauses: Vec<Clause>,
}

impl ConditionReport {
    fn new(theorem: &str, p: Option<f64>, m: Option<usize>) -> Self {
        ConditionReport { theorem: theorem.to_string(), p, q: p.map(conjugate), m, clauses: Vec::new() }
    }

    pub fn overall(&self) -> Verdict {
        Verdict::all(self.clauses.iter().map(|c| c.verdict))
    }

    pub fn clause(&self, label: &str) -> Option<&Clause> {
        self.clauses.iter().find(|c| c.label == label)
    }

    fn push(&mut self, c: Clause) {
        self.clauses.push(c);
    }

    fn extend_prefixed(&mut self, prefix: &str, other: ConditionReport) {
        for mut c in other.clauses {
            c.label = format!("{prefix}{}", c.label);
            self.clauses.push(c);
        }
    }

    /// Multi-line human-readable record.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "{}", self.theorem);
        if let (Some(p), Some(q)) = (self.p, self.q) {
            let _ = write!(s, " p={p} q={q}");
        }
        if let Some(m) = self.m {
            let _ = write!(s, " m={m}");
        }
        let _ = writeln!(s, ": {}", self.overall());
        for c in &self.clauses {
            let _ = write!(s, "  [{}] {}", c.verdict, c.label);
            if let Some(w) = c.witness {
                let _ = write!(s, " (t_{} = {}: Gamma = {}, gamma = {})", w.index, w.point, w.power, w.log_power);
            }
            s.push('\n');
        }
        s
    }

    /// Rows `theorem, clause, verdict, witness_point, witness_exponents`.
    pub fn write_csv<W: Write>(&self, w: &mut csv::Writer<W>) -> csv::Result<()> {
        for c in &self.clauses {
            let (pt, ex) = match c.witness {
                Some(w) => (w.point.to_string(), format!("{};{}", w.power, w.log_power)),
                None => (String::new(), String::new()),
            };
            w.write_record([self.theorem.as_str(), c.label.as_str(), c.verdict.as_str(), &pt, &ex])?;
        }
        Ok(())
    }
}

pub const CSV_HEADER: [&str; 5] = ["theorem", "clause", "verdict", "witness_point", "witness_exponents"];

fn severity(v: Verdict) -> u8 {
    match v {
        Verdict::Holds => 0,
        Verdict::Boundary => 1,
        Verdict::Fails => 2,
    }
}

/// Conjunction over the singular points of `spec`, witnessed by the first worst point.
fn pointwise(label: impl Into<String>, spec: &WeightSpec, test: impl Fn(usize, Factor) -> Verdict) -> Clause {
    let mut verdict = Verdict::Holds;
    let mut witness = None;
    for (i, (&t, &f)) in spec.points().iter().zip(spec.factors()).enumerate() {
        let v = test(i, f);
        if severity(v) > severity(verdict) {
            verdict = v;
            witness = Some(Witness { index: i, point: t, power: f.power, log_power: f.log_power });
        }
    }
    Clause { label: label.into(), verdict, witness }
}

fn integrable(label: impl Into<String>, spec: &WeightSpec) -> Clause {
    pointwise(label, spec, |_, f| local_integrability(f))
}

fn power_above(label: impl Into<String>, spec: &WeightSpec, threshold: f64) -> Clause {
    pointwise(label, spec, |_, f| strictly_above(f.power, threshold))
}

/// `ratio <= c` near every singular point, from the exponents of `ratio`.
fn bounded(label: impl Into<String>, ratio: &WeightSpec) -> Clause {
    pointwise(label, ratio, |_, f| match cmp_exponent(f.power, 0.0) {
        Ordering::Greater => Verdict::Holds,
        Ordering::Less => Verdict::Fails,
        Ordering::Equal => {
            if cmp_exponent(f.log_power, 0.0) == Ordering::Greater {
                Verdict::Fails
            } else {
                Verdict::Holds
            }
        }
    })
}

fn flag(label: &str, ok: bool) -> Clause {
    Clause { label: label.to_string(), verdict: if ok { Verdict::Holds } else { Verdict::Fails }, witness: None }
}

/// L1 membership: `Gamma_i > -1`, or `Gamma_i = -1` with `gamma_i < -1`; `Gamma = gamma = -1`
/// is the log-critical boundary.
pub fn is_integrable(spec: &WeightSpec) -> Verdict {
    classify(spec).l1
}

fn phi_alpha(alpha: &WeightSpec, e: f64) -> Result<WeightSpec, WeightError> {
    product(&[(alpha, e)], e)
}

/// Integrability of `(alpha' phi)^{-p/2} beta'`, the classical condition for mean convergence
/// of Lagrange interpolation.
///
/// An exponent exactly at `-1` is reported as a boundary whatever its log power.
pub fn nevai(alpha: &WeightSpec, beta: &WeightSpec, p: f64) -> Result<ConditionReport, WeightError> {
    let mut r = ConditionReport::new("nevai", Some(p), None);
    let s = product(&[(alpha, -p / 2.0), (beta, 1.0)], -p / 2.0)?;
    r.push(power_above("(a' phi)^{-p/2} b' in L1", &s, -1.0));
    Ok(r)
}

/// Which derived pair to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UvContext {
    /// `U^p = w^p (a' phi)^{-p/2} a'`, `V^{-q} = phi^q u^{-q} (a' phi)^{-q/2} a'`.
    Fourier,
    /// `U^q = u^{1-q} (a' phi)^{-q/2} a'`, `V^{-p} = phi^p (a' phi)^{-p/2} b'`.
    Mz,
    /// `U^q = u^{1-q} v^{(j-1)q/2} (a' phi)^{-q/2} a'`, `V^{-p} = phi^p (a' phi)^{-jp/2} b'`.
    MzHermite { j: usize },
}

/// Returns `(U, V)`. The second weight is `w` in the Fourier context and `beta'` otherwise.
pub fn build_uv(
    alpha: &WeightSpec,
    second: &WeightSpec,
    u: &WeightSpec,
    p: f64,
    ctx: UvContext,
) -> Result<(WeightSpec, WeightSpec), WeightError> {
    let q = conjugate(p);
    match ctx {
        UvContext::Fourier => {
            let big_u = product(&[(second, 1.0), (alpha, -0.5 + 1.0 / p)], -0.5)?;
            let big_v = product(&[(u, 1.0), (alpha, 0.5 - 1.0 / q)], -0.5)?;
            Ok((big_u, big_v))
        }
        UvContext::Mz | UvContext::MzHermite { .. } => {
            let j = match ctx {
                UvContext::MzHermite { j } => j.max(1),
                _ => 1,
            };
            let v = aux_v(alpha)?;
            let jf = j as f64;
            let big_u = product(&[(u, (1.0 - q) / q), (alpha, -0.5 + 1.0 / q), (&v, (jf - 1.0) / 2.0)], -0.5)?;
            let big_v = product(&[(alpha, jf / 2.0), (second, -1.0 / p)], -1.0 + jf / 2.0)?;
            Ok((big_u, big_v))
        }
    }
}

/// `v = max{c, a' phi}` with `c = max h(a')`.
pub fn aux_v(alpha: &WeightSpec) -> Result<WeightSpec, WeightError> {
    let ap = phi_alpha(alpha, 1.0)?;
    let c = alpha.h().bounds().1;
    let factors = ap.factors().iter().map(|f| if f.cmp_size(&Factor::ONE) == Ordering::Greater { *f } else { Factor::ONE }).collect();
    Ok(WeightSpec::new(ap.points().to_vec(), factors)?.with_h(HFactor::Constant(c)))
}

/// `v* = a' phi / v`.
pub fn aux_v_star(alpha: &WeightSpec) -> Result<WeightSpec, WeightError> {
    let v = aux_v(alpha)?;
    product(&[(alpha, 1.0), (&v, -1.0)], 1.0)
}

/// `sigma' = min{a', b', phi^{-1}}`, paired with `u = a' / sigma'` (Lagrange case).
pub fn sigma_min(alpha: &WeightSpec, beta: &WeightSpec) -> Result<Arc<dyn Density>, WeightError> {
    let ab = envelope(Arc::new(alpha.clone()), Arc::new(beta.clone()), EnvelopeMode::Min);
    let inv_phi = product(&[(&WeightSpec::legendre(), 1.0)], -1.0)?;
    Ok(Arc::new(envelope(Arc::new(ab), Arc::new(inv_phi), EnvelopeMode::Min)))
}

/// `sigma' = max{a' v^{(m-1)/2}, phi v^{(m-1)/2}, (v*)^{-(m-1)/2} b'}`, paired with
/// `u = sigma' / a'` (Hermite case).
pub fn sigma_max(alpha: &WeightSpec, beta: &WeightSpec, m: usize) -> Result<Arc<dyn Density>, WeightError> {
    let e = (m as f64 - 1.0) / 2.0;
    let v = aux_v(alpha)?;
    let vs = aux_v_star(alpha)?;
    let a = product(&[(alpha, 1.0), (&v, e)], 0.0)?;
    let b = product(&[(&v, e)], 1.0)?;
    let c = product(&[(&vs, -e), (beta, 1.0)], 0.0)?;
    let ab = envelope(Arc::new(a), Arc::new(b), EnvelopeMode::Max);
    Ok(Arc::new(envelope(Arc::new(ab), Arc::new(c), EnvelopeMode::Max)))
}

/// Admissibility of `alpha'` from its exponents and declared flags.
fn admissible(r: &mut ConditionReport, alpha: &WeightSpec) {
    let c = classify(alpha);
    r.push(Clause { label: "a' in GJ2".into(), ..power_above("", alpha, -1.0) });
    r.push(Clause { label: "a' in GJ4".into(), verdict: c.gj4, witness: None });
    r.push(flag("a' GJ1 (declared)", c.gj1));
    r.push(flag("a' GJ3 (declared)", c.gj3));
}

/// Hypotheses and conditions for `||S_n(f) w||_p <= c ||f u||_p`.
pub fn fourier_check(alpha: &WeightSpec, w: &WeightSpec, u: &WeightSpec, p: f64) -> Result<ConditionReport, WeightError> {
    let q = conjugate(p);
    let mut r = ConditionReport::new("fourier", Some(p), None);
    r.push(integrable("w^p a' in L1", &product(&[(w, p), (alpha, 1.0)], 0.0)?));
    r.push(integrable("u^{-q} a' in L1", &product(&[(u, -q), (alpha, 1.0)], 0.0)?));
    r.push(integrable("w^p (a' phi)^{-p/2} a' in L1", &product(&[(w, p), (alpha, 1.0 - p / 2.0)], -p / 2.0)?));
    r.push(integrable("u^{-q} (a' phi)^{-q/2} a' in L1", &product(&[(u, -q), (alpha, 1.0 - q / 2.0)], -q / 2.0)?));
    r.push(bounded("w <= c u", &product(&[(w, 1.0), (u, -1.0)], 0.0)?));
    let (big_u, big_v) = build_uv(alpha, w, u, p, UvContext::Fourier)?;
    r.push(power_above("p Gamma_i(U) > -1", &product(&[(&big_u, p)], 0.0)?, -1.0));
    r.push(power_above("-q Gamma_i(V) > -1", &product(&[(&big_v, -q)], 0.0)?, -1.0));
    admissible(&mut r, alpha);
    let c = classify(alpha);
    r.push(Clause { label: "a'_i nondecreasing at interior points".into(), verdict: c.monotone_near_interior_nodes, witness: None });
    r.push(Clause { label: "a'_i phi^3 nondecreasing at endpoints".into(), verdict: c.monotone_phi3_at_endpoints, witness: None });
    Ok(r)
}

/// Sufficient conditions for the two-weight Hilbert transform bound
/// `||H(g) U||_p <= c ||g V||_p`, with the log refinement at the critical exponent.
pub fn hilbert_check(big_u: &WeightSpec, big_v: &WeightSpec, p: f64) -> Result<ConditionReport, WeightError> {
    let q = conjugate(p);
    let mut r = ConditionReport::new("hilbert", Some(p), None);
    // align both weights on the union of their points
    let ua = product(&[(big_u, 1.0), (big_v, 0.0)], 0.0)?;
    let va = product(&[(big_v, 1.0), (big_u, 0.0)], 0.0)?;
    r.push(pointwise("p Gamma_i(U) > -1", &ua, |_, f| strictly_above(p * f.power, -1.0)));
    r.push(pointwise("-q Gamma_i(V) > -1", &va, |_, f| strictly_above(-q * f.power, -1.0)));
    r.push(bounded("U <= c V", &product(&[(big_u, 1.0), (big_v, -1.0)], 0.0)?));
    let vf = va.factors().to_vec();
    r.push(pointwise("gamma_i(U) - gamma_i(V) + 1 <= 0 where -q Gamma_i(V) = -1 = -q Gamma_i(U)", &ua, |i, f| {
        let g = vf[i];
        if cmp_exponent(-q * g.power, -1.0) == Ordering::Equal && cmp_exponent(f.power, g.power) == Ordering::Equal {
            match cmp_exponent(f.log_power - g.log_power + 1.0, 0.0) {
                Ordering::Less => Verdict::Holds,
                Ordering::Equal => Verdict::Boundary,
                Ordering::Greater => Verdict::Fails,
            }
        } else {
            Verdict::Holds
        }
    }));
    Ok(r)
}

/// Hypotheses of the Marcinkiewicz-Zygmund inequality with `m - 1` derivatives on the right.
pub fn mz_check(alpha: &WeightSpec, beta: &WeightSpec, u: &WeightSpec, p: f64, m: usize) -> Result<ConditionReport, WeightError> {
    let m = m.max(1);
    let q = conjugate(p);
    let mf = m as f64;
    let mut r = ConditionReport::new(if m == 1 { "mz" } else { "mz_hermite" }, Some(p), Some(m));
    admissible(&mut r, alpha);
    r.push(Clause { label: "b' in GJ2".into(), ..power_above("", beta, -1.0) });
    if m == 1 {
        r.push(bounded("u a' >= c b'", &product(&[(beta, 1.0), (u, -1.0), (alpha, -1.0)], 0.0)?));
        r.push(integrable("(a' phi)^{-p/2} b' in L1", &product(&[(alpha, -p / 2.0), (beta, 1.0)], -p / 2.0)?));
        r.push(power_above("u^{1-q} a' in GJ2 and GJ4", &product(&[(u, 1.0 - q), (alpha, 1.0)], 0.0)?, -1.0));
    } else {
        let v = aux_v(alpha)?;
        let vs = aux_v_star(alpha)?;
        let e = (mf - 1.0) / 2.0;
        r.push(integrable(
            "u^{1-q} v^{(m-1)q/2} (a' phi)^{-q/2} a' in L1",
            &product(&[(u, 1.0 - q), (&v, e * q), (alpha, 1.0 - q / 2.0)], -q / 2.0)?,
        ));
        r.push(bounded(
            "u a' >= c b' (v*)^{-(m-1)p/2}",
            &product(&[(beta, 1.0), (&vs, -e * p), (u, -1.0), (alpha, -1.0)], 0.0)?,
        ));
        r.push(integrable("(a' phi)^{-mp/2} b' in L1", &product(&[(alpha, -mf * p / 2.0), (beta, 1.0)], -mf * p / 2.0)?));
        r.push(power_above("u^{1-q} v^{(m-1)q/2} a' in GJ2 and GJ4", &product(&[(u, 1.0 - q), (&v, e * q), (alpha, 1.0)], 0.0)?, -1.0));
        r.push(power_above("u a' in GJ2 and GJ4", &product(&[(u, 1.0), (alpha, 1.0)], 0.0)?, -1.0));
        let sigma = sigma_max(alpha, beta, m)?;
        r.push(integrable("sigma' in L1", &sigma.exponents()));
    }
    let last = alpha.points().len() - 1;
    r.push(pointwise("Gamma(a') > -2/(m+1) inside, > -1/2 - 1/(m+1) at endpoints", alpha, |i, f| {
        let threshold = if i == 0 || i == last { -0.5 - 1.0 / (mf + 1.0) } else { -2.0 / (mf + 1.0) };
        strictly_above(f.power, threshold)
    }));
    let inner = product(&[(alpha, -mf * p / 2.0), (beta, 1.0)], 0.0)?;
    r.push(pointwise("Gamma_i(a'^{-mp/2} b') > -1 inside", &inner, |i, f| {
        if i == 0 || i == inner.points().len() - 1 {
            Verdict::Holds
        } else {
            strictly_above(f.power, -1.0)
        }
    }));
    for j in 1..=m {
        let ctx = if m == 1 { UvContext::Mz } else { UvContext::MzHermite { j } };
        let (big_u, big_v) = build_uv(alpha, beta, u, p, ctx)?;
        // the Hilbert conditions with p and q exchanged
        let prefix = if m == 1 { "U,V: ".to_string() } else { format!("U,V (j={j}): ") };
        r.extend_prefixed(&prefix, hilbert_check(&big_u, &big_v, q)?);
    }
    Ok(r)
}

/// `u = a' / sigma'` for the Lagrange case, as exponents.
pub fn u_for_lagrange(alpha: &WeightSpec, beta: &WeightSpec) -> Result<WeightSpec, WeightError> {
    let sigma = sigma_min(alpha, beta)?.exponents();
    product(&[(alpha, 1.0), (&sigma, -1.0)], 0.0).map(|s| s.with_h(HFactor::One))
}

/// `u = sigma' / a'` for the Hermite case, as exponents.
pub fn u_for_hermite(alpha: &WeightSpec, beta: &WeightSpec, m: usize) -> Result<WeightSpec, WeightError> {
    let sigma = sigma_max(alpha, beta, m)?.exponents();
    product(&[(&sigma, 1.0), (alpha, -1.0)], 0.0).map(|s| s.with_h(HFactor::One))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn endpoint_pair(g0: Factor, g1: Factor) -> WeightSpec {
        WeightSpec::endpoints(g0, g1)
    }

    #[test]
    fn integrability_examples() {
        assert_eq!(is_integrable(&WeightSpec::legendre()), Verdict::Holds);
        assert_eq!(is_integrable(&endpoint_pair(Factor::new(-1.0, 0.0), Factor::ONE)), Verdict::Fails);
        assert_eq!(is_integrable(&endpoint_pair(Factor::new(-1.0, -1.0), Factor::ONE)), Verdict::Boundary);
    }

    #[test]
    fn nevai_examples() {
        let leg = WeightSpec::legendre();
        let v = |p| nevai(&leg, &leg, p).unwrap().overall();
        assert_eq!(v(2.0), Verdict::Holds);
        assert_eq!(v(3.9), Verdict::Holds);
        assert_eq!(v(4.0), Verdict::Boundary);
        assert_eq!(v(4.1), Verdict::Fails);
        assert_eq!(v(6.0), Verdict::Fails);
        let ch = WeightSpec::chebyshev();
        assert_eq!(nevai(&ch, &ch, 2.0).unwrap().overall(), Verdict::Holds);
        let w = nevai(&leg, &leg, 4.0).unwrap().clauses[0].witness.unwrap();
        assert!((w.power + 1.0).abs() < 1e-15);
    }

    #[test]
    fn fourier_examples() {
        let leg = WeightSpec::legendre();
        let r = fourier_check(&leg, &leg, &leg, 2.0).unwrap();
        assert_eq!(r.overall(), Verdict::Holds, "{}", r.to_text());
        let r = fourier_check(&leg, &leg, &leg, 4.0).unwrap();
        assert_eq!(r.clause("w^p (a' phi)^{-p/2} a' in L1").unwrap().verdict, Verdict::Fails);
        assert_eq!(r.overall(), Verdict::Fails);
        let w = endpoint_pair(Factor::new(0.5, 1.0), Factor::ONE);
        let u = endpoint_pair(Factor::new(0.5, 0.0), Factor::ONE);
        let r = fourier_check(&leg, &w, &u, 2.0).unwrap();
        assert_eq!(r.clause("w <= c u").unwrap().verdict, Verdict::Fails);
        let r = fourier_check(&leg, &u, &w, 2.0).unwrap();
        assert_eq!(r.clause("w <= c u").unwrap().verdict, Verdict::Holds);
    }

    #[test]
    fn uv_examples() {
        let leg = WeightSpec::legendre();
        let (u, v) = build_uv(&leg, &leg, &leg, 2.0, UvContext::Fourier).unwrap();
        let u2 = product(&[(&u, 2.0)], 0.0).unwrap();
        let v2 = product(&[(&v, -2.0)], 0.0).unwrap();
        for i in [0, 1] {
            assert!((u2.factors()[i].power + 0.5).abs() < 1e-15);
            assert!((v2.factors()[i].power - 0.5).abs() < 1e-15);
        }
        let ch = WeightSpec::chebyshev();
        let (u, _) = build_uv(&ch, &ch, &leg, 2.0, UvContext::Mz).unwrap();
        let u2 = product(&[(&u, 2.0)], 0.0).unwrap();
        assert!((u2.factors()[0].power + 0.5).abs() < 1e-15);
        let a = build_uv(&ch, &leg, &leg, 3.0, UvContext::Mz).unwrap();
        let b = build_uv(&ch, &leg, &leg, 3.0, UvContext::MzHermite { j: 1 }).unwrap();
        assert_eq!(a.0.factors(), b.0.factors());
        assert_eq!(a.1.factors(), b.1.factors());
    }

    #[test]
    fn hilbert_examples() {
        let leg = WeightSpec::legendre();
        assert_eq!(hilbert_check(&leg, &leg, 3.0).unwrap().overall(), Verdict::Holds);
        let p = 3.0;
        let q = conjugate(p);
        let v = endpoint_pair(Factor::new(1.0 / q, 0.5), Factor::ONE);
        let u_same = endpoint_pair(Factor::new(1.0 / q, 0.5), Factor::ONE);
        assert_eq!(hilbert_check(&u_same, &v, p).unwrap().overall(), Verdict::Fails);
        let u_lower = endpoint_pair(Factor::new(1.0 / q, -0.5), Factor::ONE);
        let r = hilbert_check(&u_lower, &v, p).unwrap();
        assert_eq!(r.overall(), Verdict::Boundary);
        assert_eq!(r.clauses[3].verdict, Verdict::Boundary);
        assert_eq!(r.clauses[0].verdict, Verdict::Holds);
    }

    #[test]
    fn mz_examples() {
        let ch = WeightSpec::chebyshev();
        let u = u_for_lagrange(&ch, &ch).unwrap();
        assert!(u.factors().iter().all(|f| f.power.abs() < 1e-15 && f.log_power == 0.0));
        let r = mz_check(&ch, &ch, &u, 2.0, 1).unwrap();
        assert_eq!(r.overall(), Verdict::Holds, "{}", r.to_text());
        let leg = WeightSpec::legendre();
        let r = mz_check(&leg, &leg, &leg, 2.0, 1).unwrap();
        assert_eq!(r.clause("Gamma(a') > -2/(m+1) inside, > -1/2 - 1/(m+1) at endpoints").unwrap().verdict, Verdict::Holds);
        let r = mz_check(&leg, &leg, &leg, 4.0, 1).unwrap();
        assert_eq!(r.clause("(a' phi)^{-p/2} b' in L1").unwrap().verdict, Verdict::Fails);
        // Hermite construction with Chebyshev: v = c, v* = a' phi, sigma' = max{a', phi, b'}
        let uh = u_for_hermite(&ch, &ch, 2).unwrap();
        assert!(uh.factors().iter().all(|f| f.power.abs() < 1e-15));
        let r = mz_check(&ch, &ch, &uh, 2.0, 2).unwrap();
        assert_eq!(r.overall(), Verdict::Holds, "{}", r.to_text());
    }

    #[test]
    fn report_rendering() {
        let leg = WeightSpec::legendre();
        let r = nevai(&leg, &leg, 4.0).unwrap();
        assert!(r.to_text().contains("boundary"));
        let mut w = csv::Writer::from_writer(Vec::new());
        r.write_csv(&mut w).unwrap();
        let s = String::from_utf8(w.into_inner().unwrap()).unwrap();
        assert!(s.starts_with("nevai,"));
        assert!((r.q.unwrap() * (r.p.unwrap() - 1.0) - r.p.unwrap()).abs() < 1e-15);
    }

    fn factor() -> impl Strategy<Value = Factor> {
        (-8i32..=8, -4i32..=4).prop_map(|(a, b)| Factor::new(a as f64 / 8.0, b as f64 / 2.0))
    }

    proptest! {
        #[test]
        fn conjugate_identity(p in 1.0001f64..50.0) {
            prop_assert!((conjugate(p) * (p - 1.0) - p).abs() <= 1e-15 * p.max(1.0) * 4.0);
        }

        #[test]
        fn nevai_monotone_in_p(a0 in factor(), a1 in factor(), b0 in factor(), p in 1.1f64..8.0, dp in 0.01f64..4.0) {
            let a = endpoint_pair(a0, a1);
            let b = endpoint_pair(Factor::new(b0.power.abs() - 0.5, b0.log_power), Factor::ONE);
            if nevai(&a, &b, p).unwrap().overall() == Verdict::Fails {
                // the exponent decreases in p only where a' phi does not blow up
                if a.factors().iter().all(|f| f.power + 0.5 >= 0.0) {
                    prop_assert_eq!(nevai(&a, &b, p + dp).unwrap().overall(), Verdict::Fails);
                }
            }
        }

        #[test]
        fn hermite_report_implies_lower_order(a0 in factor(), a1 in factor(), ai in factor(), b0 in factor(), p in 1.2f64..5.0) {
            let alpha = endpoint_pair(a0, a1).with_interior(0.25, ai).unwrap();
            let beta = endpoint_pair(b0, Factor::ONE);
            let u = u_for_hermite(&alpha, &beta, 2).unwrap();
            if mz_check(&alpha, &beta, &u, p, 2).unwrap().overall() == Verdict::Holds {
                prop_assert_eq!(mz_check(&alpha, &beta, &u, p, 1).unwrap().overall(), Verdict::Holds);
            }
        }
    }
}
