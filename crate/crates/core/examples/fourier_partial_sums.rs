//! Fourier partial sums in orthonormal polynomials: pointwise convergence and sampled lower
//! bounds for the weighted L^p operator norm on both sides of the Legendre threshold.

use gjlog::conditions;
use gjlog::fourier::{operator_norm_estimate, partial_sum, project, Sampler};
use gjlog::orthopoly::{recurrence_table, DEFAULT_TOL};
use gjlog::weights::WeightSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let legendre = WeightSpec::legendre();
    let table = recurrence_table(&legendre, 256, DEFAULT_TOL)?;

    let f = |x: f64| (3.0 * x).sin() + x.abs();
    for n in [8, 32, 128] {
        let c = project(f, &table, n, 1e-12)?;
        let err = [-0.7, 0.1, 0.5].iter().map(|&x| (partial_sum(&c, &table, x) - f(x)).abs()).fold(0.0, f64::max);
        println!("S_{n}: max pointwise error {err:.3e}");
    }

    let unit = WeightSpec::legendre();
    let sampler = Sampler::new(2024);
    for p in [3.0, 5.0] {
        let verdict = conditions::fourier_check(&legendre, &unit, &unit, p)?.overall();
        print!("p = {p} ({}):", verdict.as_str());
        for n in [8, 16, 32, 64] {
            let r = operator_norm_estimate(&table, n, p, &unit, &unit, &sampler, 40)?;
            print!(" {:.3}", r.ratio);
        }
        println!();
    }
    Ok(())
}
