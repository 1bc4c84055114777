//! Independent oracles shared by the integration tests: a tanh-sinh rule, classical Legendre
//! nodes by Newton iteration, and a truncated-integral convergence probe for local factors.
#![allow(dead_code)]

use gjlog::conditions::{self, ConditionReport};
use gjlog::weights::{Factor, Verdict, WeightSpec};

/// Tanh-sinh rule on `[a, b]`: `f(x, x - a, b - x)` with the distances computed without
/// cancellation, so endpoint singularities are resolved.
pub fn tanh_sinh(a: f64, b: f64, f: impl Fn(f64, f64, f64) -> f64) -> f64 {
    let h = 1.0 / 64.0;
    let half = std::f64::consts::FRAC_PI_2;
    let len = b - a;
    let mut sum = 0.0;
    let k_max = (4.5 / h) as i64;
    for k in -k_max..=k_max {
        let u = k as f64 * h;
        let v = half * u.sinh();
        let da = len / (1.0 + (-2.0 * v).exp());
        let db = len / (1.0 + (2.0 * v).exp());
        if da <= 0.0 || db <= 0.0 {
            continue;
        }
        let w = len / 2.0 * half * u.cosh() / v.cosh().powi(2);
        let x = if da < db { a + da } else { b - db };
        sum += w * f(x, da, db);
    }
    sum * h
}

/// `s^Gamma log(e/s)^gamma`.
pub fn local(s: f64, power: f64, log_power: f64) -> f64 {
    s.powf(power) * (1.0 - s.ln()).powf(log_power)
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule from the classical recurrence.
pub fn legendre_rule(n: usize) -> Vec<(f64, f64)> {
    let pn = |x: f64| {
        let (mut p0, mut p1) = (1.0, x);
        if n == 0 {
            return (1.0, 0.0);
        }
        for k in 1..n {
            let kf = k as f64;
            let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
            p0 = p1;
            p1 = p2;
        }
        let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        (p1, d)
    };
    (1..=n)
        .map(|k| {
            let mut x = (std::f64::consts::PI * (k as f64 - 0.25) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, d) = pn(x);
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = pn(x);
            (x, 2.0 / ((1.0 - x * x) * d * d))
        })
        .collect()
}

fn simpson(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let m = 2000;
    let h = (b - a) / m as f64;
    let mut s = f(a) + f(b);
    for i in 1..m {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Whether `int_0 s^E log(e/s)^G ds` converges, decided from the dyadic increments of the
/// truncated integral after the substitution `s = e^{-y}`.
pub fn truncated_integral_converges(power: f64, log_power: f64) -> bool {
    let g = |y: f64| (-(power + 1.0) * y).exp() * (1.0 + y).powf(log_power);
    let incs: Vec<f64> = (3..=10).map(|k| simpson((1u64 << (k - 1)) as f64, (1u64 << k) as f64, g)).collect();
    if incs.iter().any(|d| !d.is_finite()) {
        return false;
    }
    incs[incs.len() - 4..].windows(2).all(|w| w[1] == 0.0 || w[1] < 0.9 * w[0])
}

pub struct VerdictCase {
    pub name: &'static str,
    pub clause: &'static str,
    pub report: ConditionReport,
    /// Local exponents `(E, G)` of the clause integrand at each singular point, derived by hand.
    pub locals: Vec<(f64, f64)>,
}

impl VerdictCase {
    pub fn symbolic(&self) -> Verdict {
        self.report.clause(self.clause).unwrap_or_else(|| panic!("{}: no clause {}", self.name, self.clause)).verdict
    }

    pub fn probe(&self) -> bool {
        self.locals.iter().all(|&(e, g)| truncated_integral_converges(e, g))
    }
}

fn both(power: f64, log_power: f64) -> WeightSpec {
    WeightSpec::endpoints(Factor::new(power, log_power), Factor::new(power, log_power))
}

fn left(power: f64, log_power: f64) -> WeightSpec {
    WeightSpec::endpoints(Factor::new(power, log_power), Factor::new(0.0, 0.0))
}

/// `a'^{1-p/2} phi^{-p/2}` at an endpoint factor `(G, g)`.
fn endpoint_nevai(power: f64, log_power: f64, p: f64) -> (f64, f64) {
    (power * (1.0 - p / 2.0) - p / 4.0, log_power * (1.0 - p / 2.0))
}

/// Thirty cases over the Lagrange mean-convergence condition, the Fourier integrability
/// conditions, the Hilbert exponent conditions and the Marcinkiewicz-Zygmund conditions.
pub fn verdict_matrix() -> Vec<VerdictCase> {
    let leg = WeightSpec::legendre;
    let cheb = WeightSpec::chebyshev;
    let mut cases = Vec::new();
    let nev = "(a' phi)^{-p/2} b' in L1";
    let mut nevai = |name, spec: WeightSpec, p: f64, locals| {
        cases.push(VerdictCase { name, clause: nev, report: conditions::nevai(&spec, &spec, p).unwrap(), locals });
    };
    for (name, p) in [("legendre p=2", 2.0), ("legendre p=3.9", 3.9), ("legendre p=4.1", 4.1), ("legendre p=4", 4.0)] {
        nevai(name, leg(), p, vec![endpoint_nevai(0.0, 0.0, p); 2]);
    }
    nevai("log endpoints p=2.5", both(0.5, 1.0), 2.5, vec![endpoint_nevai(0.5, 1.0, 2.5); 2]);
    nevai("log endpoints p=3.5", both(0.5, 1.0), 3.5, vec![endpoint_nevai(0.5, 1.0, 3.5); 2]);
    nevai("chebyshev p=8", cheb(), 8.0, vec![endpoint_nevai(-0.5, 0.0, 8.0); 2]);
    nevai("zero of order 1 p=3", both(1.0, 2.0), 3.0, vec![endpoint_nevai(1.0, 2.0, 3.0); 2]);
    let interior = |g: f64, l: f64| leg().with_interior(0.3, Factor::new(g, l)).unwrap();
    nevai("interior zero p=3", interior(0.8, 1.0), 3.0, vec![endpoint_nevai(0.0, 0.0, 3.0), (0.8 * -0.5, -0.5), endpoint_nevai(0.0, 0.0, 3.0)]);
    nevai("deep interior zero p=3.5", interior(2.5, 0.0), 3.5, vec![endpoint_nevai(0.0, 0.0, 3.5), (2.5 * -0.75, 0.0), endpoint_nevai(0.0, 0.0, 3.5)]);

    let wc = "w^p (a' phi)^{-p/2} a' in L1";
    let uc = "u^{-q} (a' phi)^{-q/2} a' in L1";
    let mut fourier = |name, clause, alpha: WeightSpec, w: WeightSpec, u: WeightSpec, p: f64, locals| {
        cases.push(VerdictCase { name, clause, report: conditions::fourier_check(&alpha, &w, &u, p).unwrap(), locals });
    };
    fourier("fourier legendre p=3", wc, leg(), leg(), leg(), 3.0, vec![endpoint_nevai(0.0, 0.0, 3.0); 2]);
    fourier("fourier legendre p=5", wc, leg(), leg(), leg(), 5.0, vec![endpoint_nevai(0.0, 0.0, 5.0); 2]);
    fourier("fourier chebyshev p=3", wc, cheb(), leg(), leg(), 3.0, vec![endpoint_nevai(-0.5, 0.0, 3.0); 2]);
    fourier("fourier log excess p=3", wc, both(0.5, -2.0), leg(), leg(), 3.0, vec![endpoint_nevai(0.5, -2.0, 3.0); 2]);
    fourier("fourier log rescue p=3", wc, both(0.5, 4.0), leg(), leg(), 3.0, vec![endpoint_nevai(0.5, 4.0, 3.0); 2]);
    fourier("fourier log critical p=3", wc, both(0.5, 2.0), leg(), leg(), 3.0, vec![endpoint_nevai(0.5, 2.0, 3.0); 2]);
    fourier("fourier legendre p=1.2", uc, leg(), leg(), leg(), 1.2, vec![endpoint_nevai(0.0, 0.0, 6.0); 2]);
    fourier("fourier u-side p=1.5", uc, both(0.25, 0.0), leg(), leg(), 1.5, vec![endpoint_nevai(0.25, 0.0, 3.0); 2]);
    fourier("fourier vanishing w p=5", wc, leg(), both(0.25, 0.0), leg(), 5.0, vec![(0.0, 0.0); 2]);
    fourier("fourier weak w p=5", wc, leg(), both(0.02, 0.0), leg(), 5.0, vec![(-1.15, 0.0); 2]);

    let uh = "p Gamma_i(U) > -1";
    let vh = "-q Gamma_i(V) > -1";
    let mut hilbert = |name, clause, u: WeightSpec, v: WeightSpec, p: f64, locals| {
        cases.push(VerdictCase { name, clause, report: conditions::hilbert_check(&u, &v, p).unwrap(), locals });
    };
    hilbert("hilbert U^p integrable", uh, left(-0.3, 0.0), leg(), 3.0, vec![(-0.9, 0.0)]);
    hilbert("hilbert U^p not integrable", uh, left(-0.4, 0.0), leg(), 3.0, vec![(-1.2, 0.0)]);
    hilbert("hilbert U^p critical", uh, left(-0.5, -3.0), leg(), 2.0, vec![(-1.0, -6.0)]);
    hilbert("hilbert V^-q not integrable", vh, leg(), left(0.6, 0.0), 2.0, vec![(-1.2, 0.0)]);
    hilbert("hilbert V^-q integrable", vh, leg(), left(0.4, 0.0), 2.0, vec![(-0.8, 0.0)]);

    let mz_nev = "(a' phi)^{-p/2} b' in L1";
    let mz_u = "u^{1-q} a' in GJ2 and GJ4";
    let mut mz = |name, clause, alpha: WeightSpec, u: WeightSpec, p: f64, locals| {
        cases.push(VerdictCase { name, clause, report: conditions::mz_check(&alpha, &alpha, &u, p, 1).unwrap(), locals });
    };
    mz("mz chebyshev p=3", mz_nev, cheb(), leg(), 3.0, vec![endpoint_nevai(-0.5, 0.0, 3.0); 2]);
    mz("mz log rescue p=3", mz_nev, both(0.5, 3.0), leg(), 3.0, vec![endpoint_nevai(0.5, 3.0, 3.0); 2]);
    mz("mz log excess p=3", mz_nev, both(0.5, 1.0), leg(), 3.0, vec![endpoint_nevai(0.5, 1.0, 3.0); 2]);
    mz("mz heavy u p=2", mz_u, leg(), left(1.2, 0.0), 2.0, vec![(-1.2, 0.0), (0.0, 0.0)]);
    mz("mz light u p=2", mz_u, leg(), left(0.8, 0.0), 2.0, vec![(-0.8, 0.0), (0.0, 0.0)]);
    cases
}
