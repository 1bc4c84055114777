//! Recurrence coefficients, Gauss rules, Christoffel functions and the uniform envelopes of
//! orthonormal polynomials for a weight with an interior logarithmic singularity.

use gjlog::orthopoly::{envelope_probes, envelope_stats, recurrence_table, DEFAULT_TOL};
use gjlog::weights::{Factor, WeightSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = WeightSpec::jacobi(0.5, -0.5).with_interior(-0.2, Factor::new(0.5, 1.0))?;
    let table = recurrence_table(&spec, 129, DEFAULT_TOL)?;
    println!("mu0 = {:.12}", table.mu0());
    for k in [0, 1, 2, 8, 64, 128] {
        println!("a_{k} = {:+.12}  b_{k} = {:.12}", table.a(k), table.b(k));
    }

    let rule = table.gauss_rule(12)?;
    let mass: f64 = rule.cotes.iter().sum();
    println!("12-point rule: first node {:.10}, sum of weights {:.12}", rule.nodes[0], mass);
    let exact = table.coefficients(|x| x.powi(5), 1, 1e-12)?[0] * table.mu0().sqrt();
    let gauss: f64 = rule.nodes.iter().zip(&rule.cotes).map(|(x, l)| l * x.powi(5)).sum();
    println!("integral of x^5: adaptive {exact:.12}, Gauss {gauss:.12}");

    println!("   n   pn_sup  lambda_min  lambda_max  deriv_min  deriv_max");
    for n in [8, 16, 32, 64, 128] {
        let probes = envelope_probes(&spec, n, 400);
        let s = envelope_stats(&table, &spec, n, &probes)?;
        println!(
            "{n:4} {:8.4} {:11.4} {:11.4} {:10.4} {:10.4}",
            s.pn_sup, s.lambda_min, s.lambda_max, s.deriv_min, s.deriv_max
        );
    }

    let mut out = Vec::new();
    table.write_csv(&mut out)?;
    println!("recurrence CSV: {} lines", String::from_utf8(out)?.lines().count());
    Ok(())
}
