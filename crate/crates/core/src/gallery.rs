//! Fixed regression fixtures with recorded expectations: projection and
//! rank-one families, the shift orbit, the Linde–Pietsch section, the
//! modulated and power-scaled Gram bounds and the factor-four identity.

use std::fmt::Write as _;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::families::shift_orbit_divergence;
use crate::gamma_norm::{cauchy_tail_profile, gamma_norm_sq, mixed_gaussian_sum_sq, ColumnOperator, OrthonormalBasis};
use crate::hilbert_sequences::{gram, HilbertSequenceSpec};
use crate::sampling::GaussianDrawConfig;
use crate::spaces::SpaceSpec;
use crate::weiss::{factor_four_identity, DiagonalSystem, ModeLaw};

/// Brute-force value of `E max_{k≤1000} γ_k²/ln(k+1)` and its tail from
/// `k = 100`, by exact-CDF quadrature.
pub const LINDE_PIETSCH_FULL: f64 = 3.2018236484743094;
pub const LINDE_PIETSCH_TAIL_100: f64 = 1.9712549498281475;
pub const MODULATED_BOUND: f64 = 1.0754151025300258;

pub const DEFAULT_SEED: u64 = 20_240_917;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Tolerance {
    /// `|value − expected| ≤ tol · max(|expected|, 1)`.
    Relative(f64),
    /// Within `k` standard errors.
    Sigma(f64),
    /// `value ≤ expected`.
    AtMost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GalleryRow {
    pub experiment: String,
    pub parameter: String,
    pub value: f64,
    pub std_error: f64,
    pub truncation: usize,
    pub expected: f64,
    pub tolerance: Tolerance,
    pub pass: bool,
}

impl GalleryRow {
    fn new(experiment: &str, parameter: String, value: f64, std_error: f64, truncation: usize, expected: f64, tolerance: Tolerance) -> Self {
        let pass = match tolerance {
            Tolerance::Relative(t) => (value - expected).abs() <= t * expected.abs().max(1.0),
            Tolerance::Sigma(k) => (value - expected).abs() <= k * std_error,
            Tolerance::AtMost => value <= expected,
        };
        Self { experiment: experiment.into(), parameter, value, std_error, truncation, expected, tolerance, pass }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GalleryOptions {
    pub seed: u64,
    /// Shifts every recorded expectation by 1%; a negative control.
    pub perturb: bool,
}

impl Default for GalleryOptions {
    fn default() -> Self {
        Self { seed: DEFAULT_SEED, perturb: false }
    }
}

fn one(x: f64) -> Complex<f64> {
    Complex::new(x, 0.0)
}

/// Runs every fixture. Exact rows do not depend on the seed.
pub fn run_gallery(opts: &GalleryOptions) -> Result<Vec<GalleryRow>> {
    let mut rows = Vec::new();
    let cfg = GaussianDrawConfig::new(opts.seed, 100_000, 50)?;
    let std = OrthonormalBasis::standard();

    let n = 100;
    let proj: Vec<_> = (0..n)
        .map(|k| ColumnOperator::new(SpaceSpec::l2(), n)?.with_column(k, vec![(k, one(1.0))]))
        .collect::<Result<_>>()?;
    let cuts = [0, 24, 49, 99];
    for (&c, e) in cuts.iter().zip(cauchy_tail_profile(&proj, &std, &cuts, n, &cfg)?) {
        rows.push(GalleryRow::new("projection-tail", format!("cut={}", c + 1), e.mean, e.std_error, n, (n - c) as f64, Tolerance::Relative(0.0)));
    }

    let n = 20;
    let rank_one: Vec<_> = (0..n)
        .map(|k| ColumnOperator::new(SpaceSpec::l2(), n)?.with_column(k, vec![(0, one(0.5f64.powi(k as i32)))]))
        .collect::<Result<_>>()?;
    let e = mixed_gaussian_sum_sq(&rank_one, &std, 0..n, &cfg)?;
    let geometric = 4.0 / 3.0 * (1.0 - 0.25f64.powi(n as i32));
    rows.push(GalleryRow::new("rank-one", "range=1..20".into(), e.mean, e.std_error, n, geometric, Tolerance::Relative(1e-14)));
    let e = mixed_gaussian_sum_sq(&rank_one, &std, 9..n, &cfg)?;
    let tail = 4.0 / 3.0 * (0.25f64.powi(9) - 0.25f64.powi(n as i32));
    rows.push(GalleryRow::new("rank-one", "range=10..20".into(), e.mean, e.std_error, n, tail, Tolerance::Relative(1e-14)));

    let shift = shift_orbit_divergence::<f64>(20)?;
    for b in shift.blocks.iter().filter(|b| [2, 10, 20].contains(&b.n)) {
        rows.push(GalleryRow::new("shift-orbit", format!("n={}", b.n), b.norm, 0.0, b.terms as usize, b.expected_norm, Tolerance::Relative(1e-12)));
    }

    let n = 1000;
    let lp = |from: usize| -> Result<ColumnOperator<f64>> {
        let mut op = ColumnOperator::new(SpaceSpec::c0(), n)?;
        for k in from..n {
            op.set_column(k, vec![(k, one(((k + 2) as f64).ln().powf(-0.5)))])?;
        }
        Ok(op)
    };
    let e = gamma_norm_sq(&lp(0)?, &cfg)?;
    rows.push(GalleryRow::new("linde-pietsch", "cut=1".into(), e.mean, e.std_error, n, LINDE_PIETSCH_FULL, Tolerance::Sigma(4.0)));
    let e = gamma_norm_sq(&lp(99)?, &cfg)?;
    rows.push(GalleryRow::new("linde-pietsch", "cut=100".into(), e.mean, e.std_error, n, LINDE_PIETSCH_TAIL_100, Tolerance::Sigma(4.0)));

    for rho in [0.0, 0.5] {
        let g = gram(&HilbertSequenceSpec::modulated(1.0, rho, -128, 128)?)?;
        rows.push(GalleryRow::new("gram-modulated", format!("b=1;rho={rho};window=257"), g.op_norm_sqrt, 0.0, g.dim, MODULATED_BOUND + 1e-9, Tolerance::AtMost));
    }
    let g = gram(&HilbertSequenceSpec::power_scaled(0.5, 1.0, 0.0, 0, 511)?)?;
    rows.push(GalleryRow::new("gram-power-scaled", "alpha=0.5;r=1;theta=0;window=512".into(), g.op_norm_sqrt, 0.0, g.dim, 1.0 + 2f64.sqrt() + 1e-9, Tolerance::AtMost));

    let sys = DiagonalSystem::from_laws(ModeLaw::Power(2.0), ModeLaw::Constant(1.0), 10_000)?;
    let f = factor_four_identity(&sys, 10_000)?;
    rows.push(GalleryRow::new("factor-four", "lambda=k^2;beta=1".into(), f.relative_gap, 0.0, 10_000, 1e-12, Tolerance::AtMost));

    if opts.perturb {
        for r in &mut rows {
            let shifted = GalleryRow::new(&r.experiment, r.parameter.clone(), r.value, r.std_error, r.truncation, r.expected * 1.01 + 0.01, r.tolerance);
            *r = shifted;
        }
    }
    Ok(rows)
}

pub const GALLERY_HEADER: &str = "experiment,parameter,value,std_error,truncation,seed,expected,status";

/// Fixed column order; floats in shortest round-trip form.
pub fn gallery_csv(rows: &[GalleryRow], seed: u64) -> String {
    let mut out = format!("{GALLERY_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.experiment,
            r.parameter,
            r.value,
            r.std_error,
            r.truncation,
            seed,
            r.expected,
            if r.pass { "pass" } else { "FAIL" }
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_gallery_passes_and_perturbed_fails() {
        let rows = run_gallery(&GalleryOptions::default()).unwrap();
        assert!(rows.iter().all(|r| r.pass), "{rows:#?}");
        let bad = run_gallery(&GalleryOptions { perturb: true, ..Default::default() }).unwrap();
        assert!(bad.iter().any(|r| !r.pass));
    }

    #[test]
    fn seed_changes_only_monte_carlo_rows() {
        let a = run_gallery(&GalleryOptions::default()).unwrap();
        let b = run_gallery(&GalleryOptions { seed: 11, perturb: false }).unwrap();
        for (x, y) in a.iter().zip(&b) {
            if x.experiment == "linde-pietsch" {
                assert!(y.pass);
            } else {
                assert_eq!(x, y);
            }
        }
        assert_eq!(gallery_csv(&a, 1), gallery_csv(&run_gallery(&GalleryOptions::default()).unwrap(), 1));
    }
}
