//! Ratio samples, seeded per-trial randomness, and discrete measures used by the empirical
//! inequality estimators.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::interp::InterpError;
use crate::orthopoly::{OrthoError, RecurrenceTable};
use crate::quad::{self, QuadError};
use crate::weights::{Density, PowerProduct, WeightError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RatioError {
    #[error("denominator vanishes")]
    ZeroDenominator,
    #[error("every sampled denominator underflowed")]
    DegenerateSample,
    #[error("least-squares system is rank deficient: {0}")]
    IllConditioned(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Ortho(#[from] OrthoError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error(transparent)]
    Interp(#[from] InterpError),
}

/// One evaluation of an inequality ratio `LHS / RHS` and what produced it.
///
/// `(seed, trial)` replays the witness; `digest` fingerprints the sampled coefficients or values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioSample {
    pub theorem: String,
    pub ratio: f64,
    pub n: usize,
    pub p: f64,
    pub m: usize,
    pub seed: u64,
    pub trial: usize,
    pub witness: String,
    pub digest: u64,
}

impl RatioSample {
    pub fn digest_hex(&self) -> String {
        format!("{:016x}", self.digest)
    }
}

/// Seed and local-improvement budget for the sampled norm estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sampler {
    pub seed: u64,
    /// Local ascent steps applied to each sample; the best iterate is kept, so extra steps
    /// never lower the reported ratio.
    pub power_steps: usize,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler { seed, power_steps: 6 }
    }

    pub fn with_power_steps(mut self, steps: usize) -> Self {
        self.power_steps = steps;
        self
    }
}

/// Independent stream for trial `trial` of the run seeded by `seed`.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// FNV-1a over the bit patterns.
pub fn digest(values: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in values {
        for b in v.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

/// `ratio = num / den`, rejecting vanishing or non-finite denominators.
pub fn checked_ratio(num: f64, den: f64) -> Result<f64, RatioError> {
    if !(den > f64::MIN_POSITIVE) || !den.is_finite() || !num.is_finite() {
        return Err(RatioError::ZeroDenominator);
    }
    Ok(num / den)
}

/// Runs `trials` independent trials in parallel and keeps the largest ratio; ties go to the
/// lowest trial index, so the result does not depend on scheduling.
pub fn sup_over_trials(
    trials: usize,
    f: impl Fn(usize) -> Result<RatioSample, RatioError> + Sync,
) -> Result<RatioSample, RatioError> {
    let results: Vec<Result<RatioSample, RatioError>> = (0..trials).into_par_iter().map(&f).collect();
    let mut best: Option<RatioSample> = None;
    for r in results {
        match r {
            Ok(s) => {
                if best.as_ref().is_none_or(|b| s.ratio > b.ratio) {
                    best = Some(s);
                }
            }
            Err(RatioError::ZeroDenominator) => {}
            Err(e) => return Err(e),
        }
    }
    best.ok_or(RatioError::DegenerateSample)
}

/// A composite rule for a measure together with the orthonormal basis tabulated at its nodes.
#[derive(Debug, Clone)]
pub struct DiscreteMeasure {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    basis: Vec<f64>,
    dim: usize,
}

impl DiscreteMeasure {
    /// Rule for `table.measure()` resolving polynomials of degree about `degree`, with grading
    /// also toward the singular points of `extra` (which do not change the measure), and the
    /// first `dim` orthonormal polynomials tabulated.
    pub fn new(table: &RecurrenceTable, extra: &[Arc<dyn Density>], degree: usize, dim: usize) -> Result<Self, RatioError> {
        let mut terms: Vec<(Arc<dyn Density>, f64)> = vec![(table.measure().clone(), 1.0)];
        terms.extend(extra.iter().map(|d| (d.clone(), 0.0)));
        let density = PowerProduct { terms };
        let rule = quad::discretize(&density, degree.max(dim), 1.25)?;
        Self::from_rule(table, rule, dim)
    }

    /// Same, for an arbitrary density (the basis is still that of `table`).
    pub fn for_density(table: &RecurrenceTable, density: &dyn Density, degree: usize, dim: usize) -> Result<Self, RatioError> {
        let rule = quad::discretize(density, degree.max(dim), 1.25)?;
        Self::from_rule(table, rule, dim)
    }

    fn from_rule(table: &RecurrenceTable, rule: Vec<(f64, f64)>, dim: usize) -> Result<Self, RatioError> {
        let (nodes, weights): (Vec<f64>, Vec<f64>) = rule.into_iter().unzip();
        let mut basis = vec![0.0; nodes.len() * dim];
        basis
            .par_chunks_mut(dim.max(1))
            .zip(&nodes)
            .try_for_each(|(row, &x)| table.eval_all(x, &mut row[..dim]))?;
        Ok(DiscreteMeasure { nodes, weights, basis, dim })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `p_0(x_i), ..., p_{dim-1}(x_i)`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.basis[i * self.dim..(i + 1) * self.dim]
    }

    /// Values of `sum_k c_k p_k` at the nodes; `coeffs.len() <= dim`.
    pub fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        (0..self.len()).map(|i| self.row(i).iter().zip(coeffs).map(|(p, c)| p * c).sum()).collect()
    }

    /// Discrete coefficients `sum_i W_i v_i p_k(x_i)`, `k < k_max`.
    pub fn project(&self, values: &[f64], k_max: usize) -> Vec<f64> {
        let mut c = vec![0.0; k_max];
        for (i, (v, w)) in values.iter().zip(&self.weights).enumerate() {
            let s = v * w;
            if s != 0.0 {
                for (ck, p) in c.iter_mut().zip(&self.row(i)[..k_max]) {
                    *ck += s * p;
                }
            }
        }
        c
    }

    /// `(sum_i W_i |v_i s_i|^p)^{1/p}` with optional pointwise scale `s`.
    pub fn lp_norm(&self, values: &[f64], scale: Option<&[f64]>, p: f64) -> f64 {
        let sum: f64 = match scale {
            Some(s) => values.iter().zip(s).zip(&self.weights).map(|((v, s), w)| w * (v * s).abs().powf(p)).sum(),
            None => values.iter().zip(&self.weights).map(|(v, w)| w * v.abs().powf(p)).sum(),
        };
        sum.powf(1.0 / p)
    }
}
