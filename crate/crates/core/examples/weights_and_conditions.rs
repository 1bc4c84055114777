//! Build generalized Jacobi weights with logarithmic factors, classify them and evaluate the
//! symbolic hypotheses of the bounded-operator results.

use gjlog::conditions;
use gjlog::weights::{classify, product, Factor, WeightSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // (1-t)^{1/2} (1+t)^{-1/2} |t - 0.3|^{0.4} log(e/|t - 0.3|)
    let alpha = WeightSpec::jacobi(0.5, -0.5).with_interior(0.3, Factor::new(0.4, 1.0))?;
    for t in [-0.9, 0.0, 0.3 + 1e-6, 0.99] {
        println!("alpha({t}) = {:.6}", alpha.eval(t)?);
    }
    println!("regularized at n = 16, t = 0.3: {:.6}", alpha.eval_regularized(16, 0.3)?);

    let c = classify(&alpha);
    println!("L1: {}, GJ2: {}, GJ1: {}, GJ3: {}", c.l1.as_str(), c.gj2.as_str(), c.gj1, c.gj3);

    // alpha^2 / phi as an exponent product
    let squared = product(&[(&alpha, 2.0)], -1.0)?;
    println!("alpha^2/phi factors: {:?}", squared.factors());

    for p in [2.0, 3.9, 4.0, 6.0] {
        let r = conditions::nevai(&WeightSpec::legendre(), &WeightSpec::legendre(), p)?;
        print!("{}", r.to_text());
    }

    let u = WeightSpec::jacobi(0.25, 0.25);
    let report = conditions::fourier_check(&alpha, &WeightSpec::legendre(), &u, 3.0)?;
    print!("{}", report.to_text());
    let mut w = csv::Writer::from_writer(std::io::stdout());
    w.write_record(conditions::CSV_HEADER)?;
    report.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}
