//! Symbolic Hilbert-transform conditions against the sampled supremum of the
//! Muckenhoupt-type products on a dyadic `delta` grid.

use gjlog::conditions::hilbert_check;
use gjlog::hilbert::{condition_sup, default_delta_grid, SupVerdict};
use gjlog::weights::{Factor, Verdict, WeightSpec};

fn left(power: f64, log_power: f64) -> WeightSpec {
    WeightSpec::endpoints(Factor::new(power, log_power), Factor::new(0.0, 0.0))
}

/// `(Gamma_U, gamma_U, Gamma_V, gamma_V, p)` at `-1`, with the expected symbolic verdict.
const CASES: [(f64, f64, f64, f64, f64, Verdict); 20] = [
    (0.2, 0.0, 0.2, 0.0, 2.0, Verdict::Holds),
    (0.3, 0.0, 0.1, 0.0, 2.0, Verdict::Holds),
    (0.0, 0.0, 0.0, 0.0, 3.0, Verdict::Holds),
    (0.1, -1.0, 0.1, 0.0, 2.0, Verdict::Holds),
    (-0.3, 0.0, -0.3, 0.0, 2.0, Verdict::Holds),
    (0.1, 0.0, 0.1, 0.0, 1.5, Verdict::Holds),
    (0.2, 0.0, -0.2, 0.0, 4.0, Verdict::Holds),
    (0.5, 2.0, 0.2, 0.0, 2.0, Verdict::Holds),
    (0.0, 0.0, -0.5, 0.0, 3.0, Verdict::Holds),
    (-0.6, 0.0, 0.0, 0.0, 2.0, Verdict::Fails),
    (0.0, 0.0, 0.6, 0.0, 2.0, Verdict::Fails),
    (0.1, 0.0, 0.3, 0.0, 2.0, Verdict::Fails),
    (0.2, 0.8, 0.2, 0.0, 2.0, Verdict::Fails),
    (0.5, 0.5, 0.5, 1.0, 2.0, Verdict::Fails),
    (0.5, 1.0, 0.5, 1.0, 2.0, Verdict::Fails),
    (2.0 / 3.0, 0.5, 2.0 / 3.0, 1.0, 3.0, Verdict::Fails),
    (-0.5, -1.0, 0.0, 0.0, 2.0, Verdict::Fails),
    (0.5, 0.0, 0.5, 1.0, 2.0, Verdict::Boundary),
    (0.5, -0.5, 0.5, 1.0, 2.0, Verdict::Boundary),
    (-0.5, -1.0, -0.5, -1.0, 2.0, Verdict::Boundary),
];

#[test]
fn symbolic_and_sampled_verdicts_agree() {
    let grid = default_delta_grid();
    for (gu, lu, gv, lv, p, expected) in CASES {
        let (u, v) = (left(gu, lu), left(gv, lv));
        let symbolic = hilbert_check(&u, &v, p).unwrap().overall();
        assert_eq!(symbolic, expected, "U=({gu},{lu}) V=({gv},{lv}) p={p}");
        if symbolic == Verdict::Boundary {
            continue;
        }
        let s = condition_sup(&u, &v, p, &grid, 1e-10).unwrap();
        let sampled = s.verdict();
        assert_eq!(
            symbolic == Verdict::Holds,
            sampled == SupVerdict::NoGrowthDetected,
            "U=({gu},{lu}) V=({gv},{lv}) p={p}: sampled {} slope {}",
            sampled.as_str(),
            s.max_slope()
        );
    }
}
