//! One runner per experiment kind. Each returns report rows plus any
//! violated invariants; library errors become input errors.

use gammarad::families::{certify_tails, shift_orbit_divergence, unif_gamma_lower, TailVerdict};
use gammarad::gallery::{run_gallery, GalleryOptions};
use gammarad::gamma_norm::{gamma_norm_sq, gamma_norm_sq_monte_carlo};
use gammarad::hilbert_sequences::{gram, phi_bound, ray_constant, ray_majorant};
use gammarad::laplace::{gamma_rl_decay, halfplane_scaling, sector_family, HalfPlaneLattice};
use gammarad::weiss::{
    factor_four_identity, off_diagonal_conditions, off_diagonal_contrapositive_run, ou_simulate, weiss_equivalence_report,
    ChainVerdict, EquivalenceVerdict, ResolventGrid,
};
use gammarad::{
    ColumnOperator, Complex64, DiagonalSystem, GaussianDrawConfig, HilbertSequenceSpec, OffDiagonalSystem, OperatorFamily,
    RepresentableOperator, SearchOptions, SectorGrid,
};

use crate::config::{Experiment, FamilyParams, GramParams, GridParams, OperatorSpec, SystemParams};

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub parameter: String,
    pub value: f64,
    pub std_error: f64,
    pub truncation: usize,
}

fn row(parameter: impl Into<String>, value: f64, std_error: f64, truncation: usize) -> Row {
    Row { parameter: parameter.into(), value, std_error, truncation }
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub rows: Vec<Row>,
    /// Violated invariants with their witnesses.
    pub violations: Vec<String>,
}

impl Outcome {
    fn push(&mut self, r: Row) {
        self.rows.push(r);
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.violations.push(what());
        }
    }
}

type Run = Result<Outcome, String>;

fn err(e: gammarad::Error) -> String {
    e.to_string()
}

fn diagonal(s: &SystemParams) -> Result<DiagonalSystem<f64>, String> {
    if s.n.0 < 1 {
        return Err("at `params.system.n`: must be positive".into());
    }
    DiagonalSystem::from_laws(s.lambda.0, s.beta.0, s.n.usize()).map_err(err)
}

fn orbit(s: &SystemParams) -> Result<RepresentableOperator<f64>, String> {
    diagonal(s)?.orbit_operator().map_err(err)
}

fn system_label(s: &SystemParams) -> String {
    format!("lambda={};beta={}", s.lambda, s.beta)
}

pub fn run(exp: &Experiment, cfg: &GaussianDrawConfig) -> Run {
    match exp {
        Experiment::GammaNorm(p) => gamma_norm(p, cfg),
        Experiment::FamilyBound(p) => family_bound(p, cfg),
        Experiment::Gram(p) => gram_summary(p),
        Experiment::PhiBound(p) => {
            let (theta, q) = (p.theta.0, p.ratio.0);
            let (phi, tail) = ray_majorant(theta, q, p.terms.usize());
            let bound = phi_bound(&phi, tail).map_err(err)?.unwrap_or(f64::INFINITY);
            let closed = ray_constant(theta, q);
            let mut out = Outcome::default();
            out.push(row(format!("theta={theta};ratio={q};bound"), bound, 0.0, phi.len()));
            out.push(row(format!("theta={theta};ratio={q};closed_form"), closed, 0.0, phi.len()));
            out.check((bound - closed).abs() <= 1e-9 * closed, || format!("phi bound {bound} differs from closed form {closed}"));
            Ok(out)
        }
        Experiment::Halfplane(p) => {
            let phi = orbit(&p.system)?;
            let lattice = HalfPlaneLattice { rho: p.rho.map_or(0.0, |r| r.0), ..Default::default() };
            let bs: Vec<f64> = p.b.iter().map(|b| b.0).collect();
            let s = halfplane_scaling(&phi, &bs, &lattice, &SearchOptions::standard_only(), cfg).map_err(err)?;
            let mut out = Outcome::default();
            let label = system_label(&p.system);
            for r in &s.rows {
                let t = r.report.truncation;
                out.push(row(format!("{label};b={};lower", r.b), r.report.lower_bound(), r.report.std_error, t));
                out.push(row(format!("{label};b={};upper", r.b), r.report.upper_bound.unwrap_or(f64::INFINITY), 0.0, t));
                out.check(r.report.is_consistent(), || format!("b = {}: lower bound {} above upper bound {:?}", r.b, r.report.lower_bound(), r.report.upper_bound));
            }
            out.push(row(format!("{label};slope"), s.slope, 0.0, phi.truncation()));
            out.push(row(format!("{label};fitted_constant"), s.fitted_constant, 0.0, phi.truncation()));
            Ok(out)
        }
        Experiment::Sector(p) => {
            let phi = orbit(&p.system)?;
            let grid = match p.grid {
                GridParams::Dyadic { n_min, n_max } => SectorGrid::dyadic(n_min.0, n_max.0),
                GridParams::PerDecade { lo, hi, points } => SectorGrid::per_decade(lo.0, hi.0, points.usize().max(1)),
            };
            let (fam, r) = sector_family(&phi, p.theta.0, &grid, &SearchOptions::standard_only(), cfg).map_err(err)?;
            let label = format!("{};theta={};members={}", system_label(&p.system), p.theta.0, fam.len());
            let mut out = Outcome::default();
            out.push(row(format!("{label};lower"), r.lower_bound(), r.std_error, r.truncation));
            out.push(row(format!("{label};upper"), r.upper_bound.unwrap_or(f64::INFINITY), 0.0, r.truncation));
            out.check(r.is_consistent(), || format!("sector lower bound {} above upper bound {:?}", r.lower_bound(), r.upper_bound));
            Ok(out)
        }
        Experiment::RlDecay(p) => {
            let phi = orbit(&p.system)?;
            let s: Vec<f64> = p.s.iter().map(|x| x.0).collect();
            let t = gamma_rl_decay(&phi, p.b.0, &s).map_err(err)?;
            let mut out = Outcome::default();
            for r in &t.rows {
                out.push(row(format!("b={};s={}", t.b, r.s), r.value_sq, 0.0, t.truncation));
            }
            out.check(t.strictly_decreasing, || "decay curve is not strictly decreasing in |s|".into());
            Ok(out)
        }
        Experiment::WeissEquivalence(p) => {
            let sys = diagonal(&p.system)?;
            let grid = p.refine.map_or(ResolventGrid::dyadic(), |m| ResolventGrid::refined(m.0.clamp(1, 64) as u32));
            let label = system_label(&p.system);
            let r = weiss_equivalence_report(&sys, &grid, &label).map_err(err)?;
            let mut out = Outcome::default();
            for (name, s) in [("invariant", &r.invariant), ("half_power", &r.half_power), ("resolvent", &r.resolvent)] {
                for &(n, v) in &s.partials {
                    out.push(row(format!("{label};{name};trend={:?}", s.trend), v, 0.0, n));
                }
            }
            out.push(row(format!("{label};verdict={:?}", r.verdict), f64::from(u8::from(r.verdict == EquivalenceVerdict::Consistent)), 0.0, sys.len()));
            if sys.is_real() {
                let f = factor_four_identity(&sys, sys.len()).map_err(err)?;
                out.push(row(format!("{label};factor_four_gap"), f.relative_gap, 0.0, sys.len()));
                out.check(f.relative_gap <= 1e-12, || format!("factor-four gap {:e}", f.relative_gap));
            }
            out.check(r.verdict == EquivalenceVerdict::Consistent, || {
                format!("INCONSISTENT: invariant {:?}, half-power {:?}, resolvent {:?}", r.invariant, r.half_power, r.resolvent)
            });
            Ok(out)
        }
        Experiment::OffDiagonal(p) => off_diagonal(p),
        Experiment::OuSim(p) => {
            let sys = diagonal(&p.system)?;
            let r = ou_simulate(&sys, p.dt.0, p.horizon.0, p.paths.usize(), cfg).map_err(err)?;
            let label = system_label(&p.system);
            let mut out = Outcome::default();
            for (k, c) in r.coordinates.iter().enumerate() {
                out.push(row(format!("{label};k={};exact={}", k + 1, c.exact), c.variance, c.std_error, sys.len()));
            }
            out.push(row(format!("{label};total;exact={}", r.total_exact), r.total, r.total_std_error, sys.len()));
            out.check((r.total - r.total_exact).abs() <= 4.0 * r.total_std_error, || {
                format!("total variance {} +- {} vs exact {}", r.total, r.total_std_error, r.total_exact)
            });
            Ok(out)
        }
        Experiment::CounterexampleGallery(p) => {
            let rows = run_gallery(&GalleryOptions { seed: cfg.seed, perturb: p.perturb }).map_err(err)?;
            let mut out = Outcome::default();
            for r in &rows {
                out.push(row(format!("{}:{};expected={}", r.experiment, r.parameter, r.expected), r.value, r.std_error, r.truncation));
                out.check(r.pass, || format!("{} {}: {} vs expected {} ({:?})", r.experiment, r.parameter, r.value, r.expected, r.tolerance));
            }
            Ok(out)
        }
    }
}

fn gamma_norm(p: &crate::config::GammaNormParams, cfg: &GaussianDrawConfig) -> Run {
    let space = p.space.0;
    let op = match &p.operator {
        OperatorSpec::Diagonal { values } => {
            let d: Vec<f64> = values.iter().map(|v| v.0).collect();
            ColumnOperator::diagonal_real(space, &d).map_err(err)?
        }
        OperatorSpec::Columns { columns } => {
            let dim = columns.iter().flatten().map(|(i, _)| i.usize() + 1).chain([columns.len()]).max().unwrap_or(1);
            let mut op = ColumnOperator::new(space, dim).map_err(err)?;
            for (k, c) in columns.iter().enumerate() {
                if c.iter().any(|(i, _)| i.0 < 0) {
                    return Err(format!("at `params.operator.columns[{k}]`: negative index"));
                }
                op.set_column(k, c.iter().map(|(i, v)| (i.usize(), Complex64::new(v.0, 0.0))).collect()).map_err(err)?;
            }
            op
        }
        OperatorSpec::LindePietsch { n } => {
            let d: Vec<f64> = (1..=n.usize()).map(|k| ((k + 1) as f64).ln().powf(-0.5)).collect();
            ColumnOperator::diagonal_real(space, &d).map_err(err)?
        }
    };
    let e = if p.monte_carlo { gamma_norm_sq_monte_carlo(&op, cfg) } else { gamma_norm_sq(&op, cfg) }.map_err(err)?;
    let mut out = Outcome::default();
    out.push(row(format!("samples={}", e.n_samples), e.mean, e.std_error, e.truncation));
    Ok(out)
}

fn family_bound(p: &FamilyParams, cfg: &GaussianDrawConfig) -> Run {
    let mut out = Outcome::default();
    let opts = SearchOptions::default();
    match *p {
        FamilyParams::Projection { n } => {
            let n = n.usize();
            let fam = OperatorFamily::projection(n).map_err(err)?;
            let truncs: Vec<usize> = [n / 4, n / 2, n].into_iter().filter(|&t| t > 0).collect();
            let cert = certify_tails(&fam, &truncs, 1.0, &opts, cfg).map_err(err)?;
            for r in &cert.reports {
                out.push(row("lower_bound_sq", r.lower_bound_sq, r.std_error, r.truncation));
                for (c, e) in &r.tail_profile {
                    out.push(row(format!("tail;cut={}", c + 1), e.mean, e.std_error, r.truncation));
                }
            }
            out.push(row(format!("verdict={:?}", cert.verdict), 0.0, 0.0, n));
            out.check(cert.verdict == TailVerdict::NotUniformlyGammaRadonifying, || format!("projection family verdict {:?}", cert.verdict));
        }
        FamilyParams::RankOne { n, ratio } => {
            let n = n.usize();
            let members = (0..n)
                .map(|j| {
                    let mut op = ColumnOperator::new(gammarad::SpaceSpec::l2(), n)?;
                    for k in 0..n {
                        op.set_column(k, vec![(j, Complex64::new(ratio.0.powi(k as i32), 0.0))])?;
                    }
                    Ok(op)
                })
                .collect::<gammarad::Result<Vec<_>>>()
                .map_err(err)?;
            let fam = OperatorFamily::explicit(members).map_err(err)?;
            let r = unif_gamma_lower(&fam, n, &opts, cfg).map_err(err)?;
            let exact: f64 = (0..n).map(|k| ratio.0.powi(2 * k as i32)).sum();
            out.push(row("lower_bound_sq", r.lower_bound_sq, r.std_error, n));
            out.push(row("norm_sq_h", exact, 0.0, n));
            out.check(r.lower_bound_sq <= exact * (1.0 + 1e-12) + 4.0 * r.std_error, || format!("rank-one lower bound {} above ‖h‖² = {exact}", r.lower_bound_sq));
        }
        FamilyParams::ShiftOrbit { n_max } => {
            let n_max = u32::try_from(n_max.0).map_err(|_| "at `params.n_max`: out of range".to_string())?;
            let r = shift_orbit_divergence::<f64>(n_max).map_err(err)?;
            for b in &r.blocks {
                out.push(row(format!("block;n={};expected={}", b.n, b.expected_norm), b.norm, 0.0, b.terms as usize));
                out.check(b.relative_error <= 1e-12, || format!("block {} norm {} vs {}", b.n, b.norm, b.expected_norm));
            }
            out.push(row(format!("unbounded_evidence={}", r.unbounded_evidence), 0.0, 0.0, r.blocks.len()));
        }
    }
    Ok(out)
}

fn gram_summary(p: &GramParams) -> Run {
    let spec = match p {
        GramParams::Modulated { b, rho, n_min, n_max } => HilbertSequenceSpec::modulated(b.0, rho.0, n_min.0, n_max.0),
        GramParams::PowerScaled { alpha, r, theta, ratio, n_min, n_max } => match ratio {
            Some(q) => HilbertSequenceSpec::power_scaled_with_ratio(alpha.0, r.0, theta.0, q.0, n_min.0, n_max.0),
            None => HilbertSequenceSpec::power_scaled(alpha.0, r.0, theta.0, n_min.0, n_max.0),
        },
        GramParams::PureExp { re, im } => {
            if re.len() != im.len() {
                return Err("at `params.im`: needs one entry per `re`".into());
            }
            HilbertSequenceSpec::pure_exp(re.iter().zip(im).map(|(a, b)| Complex64::new(a.0, b.0)).collect())
        }
    }
    .map_err(err)?;
    let g = gram(&spec).map_err(err)?;
    let mut out = Outcome::default();
    out.push(row("op_norm_sqrt", g.op_norm_sqrt, 0.0, g.dim));
    out.push(row("min_eigenvalue", g.min_eigenvalue, 0.0, g.dim));
    out.push(row("residual", g.residual, 0.0, g.dim));
    if let Some(c) = spec.analytic_constant() {
        out.push(row("analytic_constant", c, 0.0, g.dim));
        out.check(g.op_norm_sqrt <= c + 1e-9, || format!("Gram norm {} exceeds the analytic constant {c}", g.op_norm_sqrt));
    }
    out.check(g.is_psd(), || format!("Gram matrix has eigenvalue {}", g.min_eigenvalue));
    Ok(out)
}

fn off_diagonal(p: &crate::config::OffDiagonalParams) -> Run {
    let s = &p.system;
    let n = s.n.usize();
    if n == 0 {
        return Err("at `params.system.n`: must be positive".into());
    }
    let band: Vec<f64> = p.band.as_ref().map_or(vec![1.0], |b| b.iter().map(|x| x.0).collect());
    if band.is_empty() {
        return Err("at `params.band`: must be nonempty".into());
    }
    let j = band.len();
    let rows = (1..=n)
        .map(|k| {
            let b = s.beta.0.eval(k);
            band.iter().enumerate().map(|(i, w)| (k - 1 + i, Complex64::new(w * b, 0.0))).collect()
        })
        .collect();
    let lambdas = (1..=n).map(|k| Complex64::new(s.lambda.0.eval(k), 0.0)).collect();
    let sets = (0..n).map(|k| (k..k + j).collect()).collect();
    let sys = OffDiagonalSystem::new(rows, lambdas, sets, p.delta.0, j, 1.0).map_err(err)?;
    let cond = off_diagonal_conditions(&sys);
    let mut out = Outcome::default();
    out.push(row("delta_i_max", cond.delta_i_max, 0.0, n));
    out.push(row("delta_ii_max", cond.delta_ii_max, 0.0, n));
    if !cond.holds {
        return Err(format!("conditions fail at delta = {}: (i) admits {}, (ii) admits {}", p.delta.0, cond.delta_i_max, cond.delta_ii_max));
    }
    for m in &p.targets {
        let t = off_diagonal_contrapositive_run(&sys, m.0).map_err(err)?;
        for st in &t.steps {
            out.push(row(format!("M={};step={};constant={};rhs={}", m.0, st.name, st.constant, st.rhs), st.lhs, 0.0, t.k));
        }
        out.push(row(format!("M={};witness_value;verdict={:?};support={}", m.0, t.verdict, t.witness.len()), t.witness_value, 0.0, n));
        out.check(t.verdict != ChainVerdict::Violated, || {
            let bad: Vec<_> = t.steps.iter().filter(|s| !s.holds()).collect();
            format!("chain violated at M = {}: {bad:?}; witness {:?}", m.0, t.witness)
        });
    }
    Ok(out)
}
