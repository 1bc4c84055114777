//! Lagrange and Hermite interpolation at Gauss nodes: weighted L^p error ladders against the
//! best uniform approximation error.

use std::sync::Arc;

use gjlog::conditions;
use gjlog::interp::{best_error, converge_sweep, hermite, JetData};
use gjlog::orthopoly::{recurrence_table, DEFAULT_TOL};
use gjlog::weights::WeightSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let alpha = WeightSpec::chebyshev();
    let table = Arc::new(recurrence_table(&alpha, 257, DEFAULT_TOL)?);
    let ns = [16, 32, 64, 128, 256];
    let abs_jet = |x: f64| vec![x.abs(), x.signum()];

    let report = conditions::mz_check(&alpha, &alpha, &WeightSpec::legendre(), 2.0, 1)?;
    println!("hypotheses: {}", report.overall().as_str());
    let sweep = converge_sweep(abs_jet, &table, &alpha, 2.0, 1, 0, &ns, report, 1e-10)?;
    for (row, n) in sweep.rows.iter().zip(ns) {
        println!("n = {n:3}: ||L_n|x| - |x||_2 = {:.3e}   E_n(|x|) ~ {:.3e}", row.error, best_error(f64::abs, n));
    }

    // Hermite interpolation reproduces polynomials of degree below m n
    let rule = table.gauss_rule(6)?;
    let f = |x: f64| vec![x.powi(9) - x, 9.0 * x.powi(8) - 1.0];
    let jets = JetData::from_fn(&rule.nodes, 2, f);
    let h = hermite(&rule, &jets, 2)?;
    let err = [-0.95, -0.3, 0.4, 0.8].iter().map(|&x| (h.eval(x) - f(x)[0]).abs()).fold(0.0, f64::max);
    println!("Hermite m = 2, n = 6 on x^9 - x: max error {err:.2e}");

    let report = conditions::mz_check(&alpha, &alpha, &WeightSpec::legendre(), 2.0, 2)?;
    let exp_jet = |x: f64| vec![x.exp(); 2];
    let sweep = converge_sweep(exp_jet, &table, &alpha, 2.0, 2, 1, &[4, 8, 12], report, 1e-10)?;
    for r in &sweep.rows {
        println!("n = {:2}: derivative error {:.3e}", r.n, r.error);
    }
    Ok(())
}
