//! Marcinkiewicz-Zygmund ratios: the exact Gauss identity at p = 2, sampled suprema for other
//! p, replay of the maximizing trial, and the Hermite variant with m = 2.

use std::sync::Arc;

use gjlog::conditions;
use gjlog::fourier::Sampler;
use gjlog::mz::{adversarial_sup, replay, sigma_table, MzParams, RatioKind};
use gjlog::orthopoly::{recurrence_table, DEFAULT_TOL};
use gjlog::weights::WeightSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let alpha = WeightSpec::chebyshev();
    let table = Arc::new(recurrence_table(&alpha, 130, DEFAULT_TOL)?);
    let sampler = Sampler::new(7);
    let kind = RatioKind::Mz { u: WeightSpec::legendre() };

    for p in [1.5, 2.0, 4.0] {
        let verdict = conditions::mz_check(&alpha, &alpha, &WeightSpec::legendre(), p, 1)?.overall();
        print!("p = {p} ({}):", verdict.as_str());
        for n in [8, 16, 32, 64] {
            let params = MzParams { alpha: table.clone(), beta: alpha.clone(), p, n };
            let r = adversarial_sup(&kind, &params, &sampler, 20)?;
            print!(" {:.6}", r.ratio);
        }
        println!();
    }

    let params = MzParams { alpha: table.clone(), beta: alpha.clone(), p: 4.0, n: 32 };
    let best = adversarial_sup(&kind, &params, &sampler, 20)?;
    let (coeffs, again) = replay(&kind, &params, &sampler, best.trial)?;
    println!(
        "trial {} digest {} replays to {:.12} (was {:.12}) from {} coefficients",
        best.trial,
        best.digest_hex(),
        again.ratio,
        best.ratio,
        coeffs.len()
    );

    let sigma = Arc::new(sigma_table(&alpha, &alpha, 2, 33)?);
    let hermite = RatioKind::MzHermite { m: 2, sigma };
    let r = adversarial_sup(&hermite, &params, &sampler, 20)?;
    println!("Hermite m = 2, p = 4, n = 32: {:.6} ({})", r.ratio, r.witness);
    Ok(())
}
