//! Finite Hilbert transform: principal values, a weighted two-weight ratio, the extremal
//! profile probe and the sampled supremum of the Muckenhoupt-type products.

use gjlog::conditions;
use gjlog::hilbert::{condition_sup, default_delta_grid, extremal_profile_ratios, transform, weighted_ratio};
use gjlog::weights::{Factor, WeightSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // H(sqrt(1 - y^2) U_1)(x) = pi T_2(x)
    for x in [-0.5, 0.0, 0.7] {
        let r = transform(|y: f64| (1.0 - y * y).sqrt() * 2.0 * y, x, 1e-12)?;
        println!("x = {x:+.1}: H = {:+.12}  pi T_2 = {:+.12}", r.value, std::f64::consts::PI * (2.0 * x * x - 1.0));
    }

    let bump = |y: f64| (-(y - 0.2f64).powi(2) * 20.0).exp();
    let unit = WeightSpec::legendre();
    let r = weighted_ratio(bump, &unit, &unit, 2.0, 1e-9)?;
    println!("unweighted L2 ratio of a bump: {:.6} (norm is pi)", r.ratio);

    let log_pair = WeightSpec::endpoints(Factor::new(0.5, 1.0), Factor::new(0.0, 0.0));
    let pairs = [
        ("power pair", WeightSpec::jacobi(0.2, 0.0), WeightSpec::jacobi(0.2, 0.0)),
        ("log pair", log_pair.clone(), log_pair),
    ];
    for (name, big_u, big_v) in pairs {
        let symbolic = conditions::hilbert_check(&big_u, &big_v, 2.0)?.overall();
        let s = condition_sup(&big_u, &big_v, 2.0, &default_delta_grid(), 1e-10)?;
        println!(
            "{name}: symbolic {}, sampled sup {:.4}, max slope {:.3}, {}",
            symbolic.as_str(),
            s.sup(),
            s.max_slope(),
            s.verdict().as_str()
        );
        let deltas = [0.25, 0.0625, 0.015625, 0.00390625];
        let probes = extremal_profile_ratios(&big_u, &big_v, 2.0, 0, &deltas, 1e-9)?;
        let line: Vec<String> = probes.iter().map(|(d, r)| format!("{d}: {r:.4}")).collect();
        println!("  extremal profiles at -1: {}", line.join(", "));
    }
    Ok(())
}
