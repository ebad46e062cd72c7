//! Acceptance criteria, one line per criterion. Tolerances and runtime
//! budgets are pinned below; any failure makes the binary exit nonzero.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use gammarad::families::{certify_tails, shift_orbit_divergence, TailVerdict};
use gammarad::gallery::{gallery_csv, run_gallery, GalleryOptions};
use gammarad::gamma_norm::{cauchy_tail_profile, gamma_norm_sq_monte_carlo};
use gammarad::hilbert_sequences::gram;
use gammarad::laplace::{gamma_rl_decay, halfplane_scaling, poisson_normalization, sector_family, HalfPlaneLattice};
use gammarad::weiss::{
    factor_four_identity, half_power_gamma, invariant_measure_quantity, off_diagonal_contrapositive_run, ou_simulate, weiss_corpus,
    weiss_equivalence_report, ChainVerdict, EquivalenceVerdict, ModeLaw, ResolventGrid, CORPUS_TRUNCATION,
};
use gammarad::{
    ColumnOperator, Complex64, DiagonalSystem, GaussianDrawConfig, HilbertSequenceSpec, OffDiagonalSystem, OperatorFamily,
    OrthonormalBasis, RepresentableOperator, SearchOptions, SectorGrid, SpaceSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FACTOR_FOUR_GAP: f64 = 1e-12;
const BASEL_HALF_POWER_TOL: f64 = 1e-4;
const BASEL_INVARIANT_TOL: f64 = 5e-5;
const GRAM_SLACK: f64 = 1e-9;
const MODULATED_BOUND: f64 = 1.07547;
const MC_SIGMAS: f64 = 4.0;
const MC_MIN_PASSES: usize = 48;
const MC_SAMPLES: usize = 100_000;
const SHIFT_REL_TOL: f64 = 1e-12;
const HALFPLANE_SLOPE: (f64, f64) = (-0.65, -0.35);
const SECTOR_SLACK: f64 = 1e-9;
const SECTOR_REL: f64 = 0.10;
const RL_AT_100: f64 = 2e-3;
const POISSON_TOL: f64 = 1e-6;
const OU_SIGMAS: f64 = 3.0;

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn squares(n: usize) -> RepresentableOperator<f64> {
    let rates: Vec<f64> = (1..=n).map(|k| (k * k) as f64).collect();
    RepresentableOperator::diagonal_real(&vec![1.0; n], &rates).unwrap()
}

fn factor_four() -> Outcome {
    let sys = DiagonalSystem::from_laws(ModeLaw::Power(2.0), ModeLaw::Constant(1.0), 10_000).unwrap();
    let f = factor_four_identity(&sys, 10_000).unwrap();
    ensure(f.relative_gap <= FACTOR_FOUR_GAP, format!("gap {:e}", f.relative_gap))
}

fn basel() -> Outcome {
    let sys = DiagonalSystem::from_laws(ModeLaw::Power(2.0), ModeLaw::Constant(1.0), 10_000).unwrap();
    let hp = half_power_gamma(&sys).value;
    let inv = invariant_measure_quantity(&sys).value;
    let (d1, d2) = ((hp - PI * PI / 6.0).abs(), (inv - PI * PI / 12.0).abs());
    ensure(d1 <= BASEL_HALF_POWER_TOL && d2 <= BASEL_INVARIANT_TOL, format!("half-power off by {d1:.6e}, invariant off by {d2:.6e}"))
}

fn gram_bounds() -> Outcome {
    let ray = 1.0 + 2f64.sqrt();
    let mut prev = 0.0;
    let mut worst: f64 = 0.0;
    for n in [8, 16, 32, 64, 128, 256, 512] {
        let g = gram(&HilbertSequenceSpec::power_scaled(0.5, 1.0, 0.0, 0, n - 1).unwrap()).unwrap();
        if g.op_norm_sqrt < prev || g.op_norm_sqrt > ray + GRAM_SLACK {
            return Err(format!("power-scaled window {n}: {} after {prev}", g.op_norm_sqrt));
        }
        prev = g.op_norm_sqrt;
    }
    for rho in [0.0, 0.25, 0.5, 0.9] {
        for half in [1, 8, 32, 128] {
            let g = gram(&HilbertSequenceSpec::modulated(1.0, rho, -half, half).unwrap()).unwrap();
            worst = worst.max(g.op_norm_sqrt);
        }
    }
    ensure(worst <= MODULATED_BOUND + GRAM_SLACK, format!("power-scaled max {prev:.6} <= {ray:.6}, modulated max {worst:.6}"))
}

fn monte_carlo_vs_exact() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let mut passes = 0;
    for i in 0..50 {
        let cols = rng.random_range(1..=64);
        let dim = rng.random_range(1..=32);
        let mut op = ColumnOperator::new(SpaceSpec::l2(), cols.max(dim)).unwrap();
        let mut exact = 0.0;
        for k in 0..cols {
            let entries: Vec<(usize, Complex64)> = (0..rng.random_range(1..=4))
                .map(|_| (rng.random_range(0..dim), Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))))
                .collect();
            op.set_column(k, entries).unwrap();
            exact += op.column_norm_sq(k);
        }
        let cfg = GaussianDrawConfig::new(1000 + i, MC_SAMPLES, 50).unwrap();
        let est = gamma_norm_sq_monte_carlo(&op, &cfg).unwrap();
        if est.agrees_with(exact, MC_SIGMAS) {
            passes += 1;
        }
    }
    ensure(passes >= MC_MIN_PASSES, format!("{passes}/50 within {MC_SIGMAS} standard errors"))
}

fn shift_counterexample() -> Outcome {
    let r = shift_orbit_divergence::<f64>(20).unwrap();
    let worst = r.blocks.iter().filter(|b| b.n >= 2).map(|b| b.relative_error).fold(0.0, f64::max);
    let last = r.blocks.last().unwrap().norm;
    ensure(
        worst <= SHIFT_REL_TOL && last > r.blocks[1].norm && r.unbounded_evidence,
        format!("max relative error {worst:.1e}, block 20 = {last} > block 2 = {}", r.blocks[1].norm),
    )
}

fn projection_family() -> Outcome {
    let n = 100;
    let fam = OperatorFamily::<f64>::projection(n).unwrap();
    let cuts: Vec<usize> = (0..n).collect();
    let cfg = GaussianDrawConfig::default();
    let prof = cauchy_tail_profile(fam.members(), &OrthonormalBasis::standard(), &cuts, n, &cfg).unwrap();
    let exact = cuts.iter().zip(&prof).all(|(&c, e)| e.mean == (n - c) as f64);
    let cert = certify_tails(&fam, &[25, 50, 100], 1.0, &SearchOptions::standard_only(), &cfg).unwrap();
    let witness = cert.reports.last().map(|r| r.witness.members.len()).unwrap_or(0);
    ensure(
        exact && cert.verdict == TailVerdict::NotUniformlyGammaRadonifying && witness == n,
        format!("tails exact: {exact}, verdict {:?}, witness of length {witness}", cert.verdict),
    )
}

fn halfplane() -> Outcome {
    let bs: Vec<f64> = (-4..=4).map(|e| 2f64.powi(e)).collect();
    let cfg = GaussianDrawConfig::default();
    let s = halfplane_scaling(&squares(1000), &bs, &HalfPlaneLattice::default(), &SearchOptions::standard_only(), &cfg).unwrap();
    let consistent = s.rows.iter().all(|r| r.report.is_consistent());
    ensure(
        s.slope >= HALFPLANE_SLOPE.0 && s.slope <= HALFPLANE_SLOPE.1 && consistent,
        format!("slope {:.4}, below upper bound at every b: {consistent}", s.slope),
    )
}

fn sector() -> Outcome {
    let phi = squares(1000);
    let cfg = GaussianDrawConfig::default();
    let opts = SearchOptions::standard_only();
    let (_, dy) = sector_family(&phi, 0.0, &SectorGrid::dyadic(-2, 22), &opts, &cfg).unwrap();
    let cap = (1.0 + 2f64.sqrt()) * (PI * PI / 12.0).sqrt() + SECTOR_SLACK;
    let (_, fine) = sector_family(&phi, 0.0, &SectorGrid::per_decade(0.1, 1e7, 8), &opts, &cfg).unwrap();
    let target = PI * PI / 24.0;
    let rel = (fine.lower_bound_sq - target).abs() / target;
    ensure(
        dy.lower_bound() <= cap && fine.lower_bound() <= cap && rel <= SECTOR_REL && fine.lower_bound_sq >= dy.lower_bound_sq,
        format!("dyadic {:.5} and refined {:.5} below {cap:.5}; refined square {:.5} vs pi^2/24 ({:.2}%)", dy.lower_bound(), fine.lower_bound(), fine.lower_bound_sq, 100.0 * rel),
    )
}

fn rl_decay() -> Outcome {
    let grid: Vec<f64> = (0..=100).map(f64::from).collect();
    let t = gamma_rl_decay(&squares(10_000), 1.0, &grid).unwrap();
    let last = t.rows[100].value_sq;
    ensure(t.strictly_decreasing && last <= RL_AT_100, format!("strictly decreasing: {}, value at s=100 {last:.3e}", t.strictly_decreasing))
}

fn poisson() -> Outcome {
    let mut worst: f64 = 0.0;
    for a in [0.25, 0.5, 0.75] {
        worst = worst.max((poisson_normalization::<f64>(a, 40.0, 400).unwrap() - 1.0).abs());
    }
    ensure(worst <= POISSON_TOL, format!("max |mass - 1| = {worst:.2e}"))
}

fn ou() -> Outcome {
    let sys = DiagonalSystem::from_laws(ModeLaw::Power(2.0), ModeLaw::Constant(1.0), 50).unwrap();
    let cfg = GaussianDrawConfig::new(31_337, 10_000, 20).unwrap();
    let r = ou_simulate(&sys, 0.1, 20.0, 10_000, &cfg).unwrap();
    let bad: Vec<usize> = r
        .coordinates
        .iter()
        .enumerate()
        .filter(|(k, c)| (c.variance - 1.0 / (2.0 * ((k + 1) * (k + 1)) as f64)).abs() > OU_SIGMAS * c.std_error)
        .map(|(k, _)| k + 1)
        .collect();
    let partial = invariant_measure_quantity(&sys).value;
    let total_ok = (r.total - partial).abs() <= OU_SIGMAS * r.total_std_error;
    ensure(
        bad.is_empty() && total_ok,
        format!("coordinates outside 3 sigma: {bad:?}; sum {:.5} +- {:.5} vs {partial:.5}", r.total, r.total_std_error),
    )
}

fn corpus() -> Outcome {
    let mut divergent = Vec::new();
    for (l, b) in weiss_corpus::<f64>() {
        let sys = DiagonalSystem::from_laws(l, b, CORPUS_TRUNCATION).unwrap();
        let r = weiss_equivalence_report(&sys, &ResolventGrid::dyadic(), &format!("lambda={l};beta={b}")).unwrap();
        if r.verdict != EquivalenceVerdict::Consistent {
            return Err(format!("{} inconsistent: {:?} {:?} {:?}", r.label, r.invariant.trend, r.half_power.trend, r.resolvent.trend));
        }
        if r.invariant.trend == gammarad::weiss::SeriesTrend::Divergent {
            divergent.push(r.label);
        }
    }
    ensure(true, format!("12/12 consistent; divergent: {divergent:?}"))
}

fn off_diagonal() -> Outcome {
    let n = 1 << 16;
    let lam: Vec<f64> = (1..=n).map(|k| k as f64).collect();
    let sys = OffDiagonalSystem::diagonal(&lam, &vec![1.0; n]).unwrap();
    let mut detail = Vec::new();
    for m in [2.0, 5.0, 10.0] {
        let t = off_diagonal_contrapositive_run(&sys, m).unwrap();
        let min_slack = t.steps.iter().map(|s| s.slack).fold(f64::INFINITY, f64::min);
        let floor = m / (t.c_delta_prime * t.c_delta_prime);
        let w = t.witness_value * t.witness_value;
        if t.verdict != ChainVerdict::Witnessed || min_slack < 0.0 || w < floor {
            return Err(format!("M={m}: {:?}, min slack {min_slack:e}, witness {w} vs {floor}", t.verdict));
        }
        detail.push(format!("M={m}: K={}, witness {w:.4} >= {floor:.4}", t.k));
    }
    ensure(true, detail.join("; "))
}

fn determinism() -> Outcome {
    let opts = GalleryOptions::default();
    let a = gallery_csv(&run_gallery(&opts).unwrap(), opts.seed);
    let b = gallery_csv(&run_gallery(&opts).unwrap(), opts.seed);
    ensure(a == b && !a.contains("FAIL"), format!("{} bytes, identical: {}", a.len(), a == b))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 14] = [
        ("factor-4 identity", Duration::from_secs(1), factor_four),
        ("Basel oracles", Duration::from_secs(1), basel),
        ("Gram bounds", Duration::from_secs(30), gram_bounds),
        ("Monte Carlo vs exact", Duration::from_secs(120), monte_carlo_vs_exact),
        ("shift counterexample", Duration::from_secs(1), shift_counterexample),
        ("projection family", Duration::from_secs(1), projection_family),
        ("half-plane scaling", Duration::from_secs(60), halfplane),
        ("sector bound", Duration::from_secs(60), sector),
        ("gamma-RL decay", Duration::from_secs(1), rl_decay),
        ("Poisson normalization", Duration::from_secs(1), poisson),
        ("OU consistency", Duration::from_secs(120), ou),
        ("Weiss equivalence corpus", Duration::from_secs(120), corpus),
        ("off-diagonal chain", Duration::from_secs(60), off_diagonal),
        ("determinism", Duration::from_secs(120), determinism),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let (status, detail) = match outcome {
            Ok(d) if took <= *budget => ("PASS", d),
            Ok(d) => ("FAIL", format!("{d}; over budget {budget:?}")),
            Err(d) => ("FAIL", d),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!("criterion {:>2} {status} {name} ({took:.2?}): {detail}", i + 1);
    }
    println!("acceptance: {}/14 passed", 14 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
