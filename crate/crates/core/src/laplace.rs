//! Laplace transforms of operators `Φ: L²(ℝ₊; H) → E` whose columns are
//! damped exponential profiles `t ↦ c_k e^{−μ_k t} e_{σ(k)}`.
//!
//! Transforms are closed forms: `Φ̂(λ) h_k = c_k/(λ + μ_k) e_{σ(k)}`. Only
//! exponential profiles are supported.

use std::fmt::Write as _;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Error, Result};
use crate::families::{unif_gamma_lower, OperatorFamily, SearchOptions, UnifGammaBoundReport};
use crate::gamma_norm::ColumnOperator;
use crate::hilbert_sequences::ray_constant;
use crate::quadrature::GaussLegendre;
use crate::sampling::GaussianDrawConfig;
use crate::scalar::{csqrt, KahanSum, Real};
use crate::spaces::SpaceSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpProfile<T> {
    pub coef: Complex<T>,
    pub rate: Complex<T>,
    pub target: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentableOperator<T> {
    space: SpaceSpec<T>,
    profiles: Vec<ExpProfile<T>>,
    trunc: usize,
}

impl<T: Real> RepresentableOperator<T> {
    /// Profile `k` describes the column of `h_k`.
    pub fn new(space: SpaceSpec<T>, profiles: Vec<ExpProfile<T>>) -> Result<Self> {
        if profiles.is_empty() {
            return invalid("need at least one profile");
        }
        for (k, p) in profiles.iter().enumerate() {
            if !(p.rate.re > T::zero()) || !p.rate.im.is_finite() {
                return domain(format!("profile {k} has rate {} outside the open right half-plane", p.rate));
            }
            if !p.coef.re.is_finite() || !p.coef.im.is_finite() {
                return invalid(format!("profile {k} has a non-finite coefficient"));
            }
        }
        let trunc = profiles.iter().map(|p| p.target + 1).max().unwrap_or(1).max(profiles.len());
        Ok(Self { space, profiles, trunc })
    }

    /// `σ(k) = k` on `ℓ²`.
    pub fn diagonal(coefs: &[Complex<T>], rates: &[Complex<T>]) -> Result<Self> {
        if coefs.len() != rates.len() {
            return invalid("one rate per coefficient required");
        }
        let profiles = coefs
            .iter()
            .zip(rates)
            .enumerate()
            .map(|(k, (&coef, &rate))| ExpProfile { coef, rate, target: k })
            .collect();
        Self::new(SpaceSpec::l2(), profiles)
    }

    pub fn diagonal_real(coefs: &[T], rates: &[T]) -> Result<Self> {
        let c: Vec<_> = coefs.iter().map(|&x| Complex::new(x, T::zero())).collect();
        let r: Vec<_> = rates.iter().map(|&x| Complex::new(x, T::zero())).collect();
        Self::diagonal(&c, &r)
    }

    pub fn profiles(&self) -> &[ExpProfile<T>] {
        &self.profiles
    }

    pub fn truncation(&self) -> usize {
        self.trunc
    }

    pub fn space(&self) -> &SpaceSpec<T> {
        &self.space
    }

    pub fn is_zero(&self) -> bool {
        self.profiles.iter().all(|p| p.coef.norm_sqr() == T::zero())
    }

    /// `‖Φ‖²_γ = Σ |c_k|²/(2 Re μ_k)` on a Hilbert target.
    pub fn gamma_norm_sq(&self) -> Result<T> {
        if !self.space.is_hilbert() {
            return Err(Error::UnsupportedSpace("closed-form γ-norm needs a Hilbert target".into()));
        }
        let mut acc = KahanSum::new();
        for p in &self.profiles {
            acc.add(p.coef.norm_sqr() / (p.rate.re + p.rate.re));
        }
        Ok(acc.value())
    }
}

fn check_half_plane<T: Real>(lambda: Complex<T>) -> Result<()> {
    if !(lambda.re > T::zero()) || !lambda.im.is_finite() {
        return domain(format!("λ = {lambda} is not in the open right half-plane"));
    }
    Ok(())
}

/// `Φ̂(λ)` as a column operator.
pub fn laplace_hat<T: Real>(phi: &RepresentableOperator<T>, lambda: Complex<T>) -> Result<ColumnOperator<T>> {
    check_half_plane(lambda)?;
    scaled_hat(phi, lambda, Complex::new(T::one(), T::zero()))
}

fn scaled_hat<T: Real>(phi: &RepresentableOperator<T>, lambda: Complex<T>, scale: Complex<T>) -> Result<ColumnOperator<T>> {
    let mut op = ColumnOperator::new(phi.space, phi.trunc)?;
    for (k, p) in phi.profiles.iter().enumerate() {
        op.set_column(k, vec![(p.target, scale * p.coef / (lambda + p.rate))])?;
    }
    Ok(op)
}

/// `|c/(λ+μ)|² ≤ (|c|²/(2 Re μ)) (1/(2 Re λ))` for every column.
pub fn satisfies_column_bound<T: Real>(phi: &RepresentableOperator<T>, lambda: Complex<T>) -> Result<bool> {
    check_half_plane(lambda)?;
    let slack = T::one() + T::lit(16.0) * T::epsilon();
    Ok(phi.profiles.iter().all(|p| {
        let lhs = (p.coef / (lambda + p.rate)).norm_sqr();
        let rhs = p.coef.norm_sqr() / (T::lit(4.0) * p.rate.re * lambda.re);
        lhs <= rhs * slack
    }))
}

/// Largest Cauchy–Riemann defect `|i ∂ₓf − ∂ᵧf|` of the columns at `λ`,
/// by central differences with step `h`; `O(h²)` for analytic `f`.
pub fn cauchy_riemann_defect<T: Real>(phi: &RepresentableOperator<T>, lambda: Complex<T>, h: T) -> Result<T> {
    check_half_plane(lambda)?;
    if !(h > T::zero()) || !(h < lambda.re) {
        return invalid("step must be positive and keep the stencil in the half-plane");
    }
    let two_h = h + h;
    let hx = Complex::new(h, T::zero());
    let hy = Complex::new(T::zero(), h);
    let i = Complex::new(T::zero(), T::one());
    Ok(phi
        .profiles
        .iter()
        .map(|p| {
            let f = |z: Complex<T>| p.coef / (z + p.rate);
            let dx = (f(lambda + hx) - f(lambda - hx)) / two_h;
            let dy = (f(lambda + hy) - f(lambda - hy)) / two_h;
            (i * dx - dy).norm()
        })
        .fold(T::zero(), T::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRow<T> {
    pub s: T,
    /// `‖Φ̂(b + is)‖²_γ`.
    pub value_sq: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayTable<T> {
    pub b: T,
    pub rows: Vec<DecayRow<T>>,
    pub truncation: usize,
    /// Values strictly decrease in `|s|` along the grid.
    pub strictly_decreasing: bool,
    /// Values at `s` and `−s` agree, for grids containing both.
    pub symmetric: bool,
}

impl<T: Real> DecayTable<T> {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("parameter,value,std_error,truncation\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},0,{}", r.s, r.value_sq, self.truncation);
        }
        out
    }
}

/// Exact `‖Φ̂(b + is)‖²_γ = Σ |c_k|²/|b + is + μ_k|²` along `s_grid` (for
/// profiles with distinct targets on `ℓ²`).
pub fn gamma_rl_decay<T: Real>(phi: &RepresentableOperator<T>, b: T, s_grid: &[T]) -> Result<DecayTable<T>> {
    if !(b > T::zero()) {
        return domain("b must be positive");
    }
    if !phi.space.is_hilbert() {
        return Err(Error::UnsupportedSpace("exact decay tables need a Hilbert target".into()));
    }
    let rows: Vec<DecayRow<T>> = s_grid
        .par_iter()
        .map(|&s| {
            let lambda = Complex::new(b, s);
            let mut acc = KahanSum::new();
            for p in &phi.profiles {
                acc.add((p.coef / (lambda + p.rate)).norm_sqr());
            }
            DecayRow { s, value_sq: acc.value() }
        })
        .collect();
    let mut by_abs: Vec<&DecayRow<T>> = rows.iter().collect();
    by_abs.sort_by(|a, b| a.s.abs().partial_cmp(&b.s.abs()).expect("finite grid"));
    let strictly_decreasing = by_abs
        .windows(2)
        .all(|w| w[0].s.abs() == w[1].s.abs() || w[1].value_sq < w[0].value_sq);
    let tol = T::lit(1e-12);
    let symmetric = rows.iter().all(|r| {
        rows.iter()
            .filter(|q| q.s == -r.s)
            .all(|q| (q.value_sq - r.value_sq).abs() <= tol * r.value_sq.abs().max(T::min_positive_value()))
    });
    Ok(DecayTable { b, rows, truncation: phi.trunc, strictly_decreasing, symmetric })
}

/// Lattice `{b(1 + j/2) + i(n + ρ)b : 0 ≤ j < re_steps, |n| ≤ im_radius}`
/// inside `{Re λ ≥ b}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfPlaneLattice<T> {
    pub re_steps: usize,
    pub im_radius: usize,
    pub rho: T,
}

impl<T: Real> Default for HalfPlaneLattice<T> {
    fn default() -> Self {
        Self { re_steps: 4, im_radius: 4, rho: T::zero() }
    }
}

impl<T: Real> HalfPlaneLattice<T> {
    pub fn points(&self, b: T) -> Vec<Complex<T>> {
        let half = T::lit(0.5);
        let r = self.im_radius as i64;
        let mut pts = Vec::with_capacity(self.re_steps * (2 * self.im_radius + 1));
        for j in 0..self.re_steps {
            let re = b * (T::one() + half * T::from_usize_lossy(j));
            for n in -r..=r {
                pts.push(Complex::new(re, (T::from_i64(n).expect("index") + self.rho) * b));
            }
        }
        pts
    }
}

/// `C = √(2π e^{2π}/(e^{2π} − 1))`, the half-plane constant.
pub fn halfplane_constant<T: Real>() -> T {
    let e = T::TAU().exp();
    (T::TAU() * e / (e - T::one())).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfPlaneRow<T> {
    pub b: T,
    pub report: UnifGammaBoundReport<T>,
    /// `lower · √b / ‖Φ‖_γ`.
    pub ratio: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfPlaneScaling<T> {
    pub rows: Vec<HalfPlaneRow<T>>,
    /// Least-squares slope of `log lower` against `log b`.
    pub slope: T,
    /// Largest observed ratio: the empirical constant.
    pub fitted_constant: T,
}

/// `{Φ̂(λ) : λ in the lattice}` with the certified lower bound; the upper
/// bound `C ‖Φ‖_γ/√b` is attached.
pub fn halfplane_family<T: Real>(
    phi: &RepresentableOperator<T>,
    b: T,
    lattice: &HalfPlaneLattice<T>,
    opts: &SearchOptions,
    cfg: &GaussianDrawConfig,
) -> Result<(OperatorFamily<T>, UnifGammaBoundReport<T>)> {
    if !(b > T::zero()) {
        return domain("b must be positive");
    }
    let pts = lattice.points(b);
    if pts.is_empty() {
        return domain("empty lattice");
    }
    let members = pts.iter().map(|&l| laplace_hat(phi, l)).collect::<Result<Vec<_>>>()?;
    let family = OperatorFamily::resolvent(members)?;
    let report = unif_gamma_lower(&family, phi.trunc, opts, cfg)?;
    let upper = phi.gamma_norm_sq().ok().map(|g| halfplane_constant::<T>() * (g / b).sqrt());
    Ok((family, report.with_upper_bound(upper)))
}

/// Runs [`halfplane_family`] across `bs` and fits the scaling law.
pub fn halfplane_scaling<T: Real>(
    phi: &RepresentableOperator<T>,
    bs: &[T],
    lattice: &HalfPlaneLattice<T>,
    opts: &SearchOptions,
    cfg: &GaussianDrawConfig,
) -> Result<HalfPlaneScaling<T>> {
    if bs.len() < 2 {
        return invalid("need at least two values of b");
    }
    let norm = phi.gamma_norm_sq()?.sqrt();
    let rows = bs
        .iter()
        .map(|&b| {
            let (_, report) = halfplane_family(phi, b, lattice, opts, cfg)?;
            let ratio = if norm > T::zero() { report.lower_bound() * b.sqrt() / norm } else { T::zero() };
            Ok(HalfPlaneRow { b, report, ratio })
        })
        .collect::<Result<Vec<_>>>()?;
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.report.lower_bound_sq > T::zero())
        .map(|r| (r.b.as_f64().ln(), r.report.lower_bound().as_f64().ln()))
        .collect();
    let slope = T::lit(ls_slope(&pts));
    let fitted_constant = rows.iter().map(|r| r.ratio).fold(T::zero(), T::max);
    Ok(HalfPlaneScaling { rows, slope, fitted_constant })
}

pub(crate) fn ls_slope(pts: &[(f64, f64)]) -> f64 {
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Geometric ray grid `λ_n = r qⁿ e^{±iθ}`, `n_min ≤ n ≤ n_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorGrid<T> {
    pub r: T,
    pub ratio: T,
    pub n_min: i64,
    pub n_max: i64,
    /// Include the conjugate ray `e^{−iθ}` (ignored at `θ = 0`).
    pub both_rays: bool,
}

impl<T: Real> SectorGrid<T> {
    pub fn dyadic(n_min: i64, n_max: i64) -> Self {
        Self { r: T::one(), ratio: T::lit(2.0), n_min, n_max, both_rays: true }
    }

    /// `per_decade` points per decade on `[lo, hi]`.
    pub fn per_decade(lo: T, hi: T, per_decade: usize) -> Self {
        let ratio = T::lit(10.0).powf(T::one() / T::from_usize_lossy(per_decade));
        let steps = ((hi / lo).log10() * T::from_usize_lossy(per_decade)).round().to_i64().unwrap_or(0);
        Self { r: lo, ratio, n_min: 0, n_max: steps, both_rays: true }
    }

    pub fn points(&self, theta: T) -> Vec<Complex<T>> {
        let mut pts = Vec::new();
        for n in self.n_min..=self.n_max {
            let rad = self.r * self.ratio.powi(n as i32);
            pts.push(Complex::from_polar(rad, theta));
            if self.both_rays && theta != T::zero() {
                pts.push(Complex::from_polar(rad, -theta));
            }
        }
        pts
    }
}

/// `{√λ Φ̂(λ) : λ on the ray grid}` with the certified lower bound and the
/// upper bound `C_θ ‖Φ‖_γ` from the ray's φ-majorant (`√2` larger when
/// both rays are used).
pub fn sector_family<T: Real>(
    phi: &RepresentableOperator<T>,
    theta: T,
    grid: &SectorGrid<T>,
    opts: &SearchOptions,
    cfg: &GaussianDrawConfig,
) -> Result<(OperatorFamily<T>, UnifGammaBoundReport<T>)> {
    if !(theta.abs() < T::FRAC_PI_2()) {
        return domain("|θ| must be below π/2");
    }
    if !(grid.r > T::zero()) || !(grid.ratio > T::one()) || grid.n_max < grid.n_min {
        return domain("sector grid needs r > 0, ratio > 1 and a nonempty index range");
    }
    let pts = grid.points(theta);
    let members = pts
        .iter()
        .map(|&l| scaled_hat(phi, l, csqrt(l)))
        .collect::<Result<Vec<_>>>()?;
    let family = OperatorFamily::resolvent(members)?;
    let report = unif_gamma_lower(&family, phi.trunc, opts, cfg)?;
    let rays = if grid.both_rays && theta != T::zero() { T::lit(2.0).sqrt() } else { T::one() };
    let upper = phi.gamma_norm_sq().ok().map(|g| rays * ray_constant(theta, grid.ratio) * g.sqrt());
    Ok((family, report.with_upper_bound(upper)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonKernelParams<T> {
    pub j: u8,
    pub alpha: T,
    pub s: T,
}

/// Poisson kernel of the strip `0 < Re λ < 1` for the boundary line
/// `Re λ = j`:
/// `P_j(α, s) = e^{πs} sin(πα) / (sin²(πα) + (cos(πα) − (−1)^j e^{πs})²)`,
/// equivalently `sin(πα) / (2 (cosh(πs) − (−1)^j cos(πα)))`. It is
/// normalized so that `∫ (P_0 + P_1) ds = 1`; a leading `1/π` would make
/// the total `1/π`.
pub fn poisson_kernel<T: Real>(params: PoissonKernelParams<T>) -> Result<T> {
    let PoissonKernelParams { j, alpha, s } = params;
    if j > 1 {
        return invalid("j must be 0 or 1");
    }
    if !(alpha > T::zero() && alpha < T::one()) {
        return domain("α must lie in (0, 1)");
    }
    let pi = T::PI();
    let (sn, cs) = (pi * alpha).sin_cos();
    let sign = if j == 0 { T::one() } else { -T::one() };
    // divide through by e^{2πs} for large s
    if s > T::zero() {
        let e = (-pi * s).exp();
        let d = cs * e - sign;
        return Ok(e * sn / (sn * sn * e * e + d * d));
    }
    let e = (pi * s).exp();
    let d = cs - sign * e;
    Ok(e * sn / (sn * sn + d * d))
}

/// `∫_{−L}^{L} (P_0 + P_1)(α, s) ds` by composite Gauss–Legendre.
pub fn poisson_normalization<T: Real>(alpha: T, half_width: T, panels: usize) -> Result<T> {
    if !(alpha > T::zero() && alpha < T::one()) {
        return domain("α must lie in (0, 1)");
    }
    let a = alpha.as_f64();
    let f = |s: f64| {
        let p = |j| poisson_kernel(PoissonKernelParams { j, alpha: a, s }).expect("α validated");
        p(0) + p(1)
    };
    let l = half_width.as_f64();
    Ok(T::lit(GaussLegendre::new(20).integrate_composite(-l, l, panels.max(1), f)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sq(n: usize) -> RepresentableOperator<f64> {
        let rates: Vec<f64> = (1..=n).map(|k| (k * k) as f64).collect();
        RepresentableOperator::diagonal_real(&vec![1.0; n], &rates).unwrap()
    }

    fn cfg() -> GaussianDrawConfig {
        GaussianDrawConfig::new(3, 20_000, 20).unwrap()
    }

    #[test]
    fn transform_columns() {
        let phi = sq(5);
        let op = laplace_hat(&phi, Complex::new(1.0, 0.0)).unwrap();
        assert_relative_eq!(op.column(2)[0].1.re, 1.0 / 10.0, epsilon = 1e-16);
        let one = RepresentableOperator::diagonal_real(&[1.0], &[1.0]).unwrap();
        let op = laplace_hat(&one, Complex::new(1.0, 1.0)).unwrap();
        let z = op.column(0)[0].1;
        let expected = Complex::new(1.0, 0.0) / Complex::new(2.0, 1.0);
        assert_relative_eq!((z - expected).norm(), 0.0, epsilon = 1e-16);
        assert!(laplace_hat(&one, Complex::new(0.0, 1.0)).is_err());
        let big = laplace_hat(&one, Complex::new(1e6, 0.0)).unwrap().column(0)[0].1.re;
        assert_relative_eq!(big * 1e6, 1.0, max_relative = 1e-5);
    }

    #[test]
    fn decay_table() {
        let phi = sq(10_000);
        let grid: Vec<f64> = (0..=100).map(f64::from).collect();
        let t = gamma_rl_decay(&phi, 1.0, &grid).unwrap();
        assert!(t.strictly_decreasing);
        assert!(t.rows[100].value_sq <= 2e-3);
        let single = RepresentableOperator::diagonal_real(&[1.0], &[2.0]).unwrap();
        let t = gamma_rl_decay(&single, 1.0, &[-3.0, 0.0, 3.0]).unwrap();
        assert_relative_eq!(t.rows[2].value_sq, 1.0 / (9.0 + 9.0), epsilon = 1e-16);
        assert!(t.symmetric);
        assert!(t.to_csv().starts_with("parameter,value,std_error,truncation\n-3,"));
    }

    #[test]
    fn poisson_values() {
        let p = |j| poisson_kernel(PoissonKernelParams { j, alpha: 0.5, s: 0.0 }).unwrap();
        assert_relative_eq!(p(0), 0.5, epsilon = 1e-16);
        assert_relative_eq!(p(1), 0.5, epsilon = 1e-16);
        let q = poisson_kernel(PoissonKernelParams { j: 1, alpha: 0.3, s: 2.0 }).unwrap();
        let pi = std::f64::consts::PI;
        assert_relative_eq!(q, (0.3 * pi).sin() / (2.0 * ((2.0 * pi).cosh() + (0.3 * pi).cos())), max_relative = 1e-14);
        assert!(poisson_kernel(PoissonKernelParams { j: 0, alpha: 1.0, s: 0.0 }).is_err());
        for alpha in [0.25, 0.5, 0.75] {
            let v: f64 = poisson_normalization(alpha, 40.0, 400).unwrap();
            assert!((v - 1.0).abs() < 1e-9, "{alpha}: {v}");
        }
    }

    #[test]
    fn columnwise_bound_and_analyticity() {
        let phi = RepresentableOperator::diagonal(
            &[Complex::new(1.0, 2.0), Complex::new(-0.5, 0.1)],
            &[Complex::new(0.3, 4.0), Complex::new(2.0, -1.0)],
        )
        .unwrap();
        for l in [Complex::new(0.1, 0.0), Complex::new(3.0, -7.0)] {
            assert!(satisfies_column_bound(&phi, l).unwrap());
        }
        let d = cauchy_riemann_defect(&phi, Complex::new(1.0, 0.5), 1e-4).unwrap();
        assert!(d < 1e-7, "{d}");
    }

    #[test]
    fn halfplane_lower_bound_is_greedy_sum() {
        let phi = sq(50);
        let (fam, r) = halfplane_family(&phi, 1.0, &HalfPlaneLattice::default(), &SearchOptions::standard_only(), &cfg()).unwrap();
        assert_eq!(fam.len(), 36);
        let expected: f64 = (1..=50).map(|k| 1.0 / (1.0 + (k * k) as f64).powi(2)).sum();
        assert_relative_eq!(r.lower_bound_sq, expected, epsilon = 1e-14);
        assert!(r.is_consistent());
        let zero = RepresentableOperator::diagonal_real(&[0.0], &[1.0]).unwrap();
        let (_, r) = halfplane_family(&zero, 1.0, &HalfPlaneLattice::default(), &SearchOptions::standard_only(), &cfg()).unwrap();
        assert_eq!(r.lower_bound_sq, 0.0);
    }

    #[test]
    fn sector_bound_holds_at_zero_angle() {
        let phi = sq(200);
        let (_, r) = sector_family(&phi, 0.0, &SectorGrid::dyadic(0, 16), &SearchOptions::standard_only(), &cfg()).unwrap();
        let upper = r.upper_bound.unwrap();
        let inv: f64 = (1..=200).map(|k| 1.0 / (2.0 * (k * k) as f64)).sum();
        assert_relative_eq!(upper, (1.0 + 2f64.sqrt()) * inv.sqrt(), epsilon = 1e-13);
        assert!(r.lower_bound() <= upper);
        assert!(sector_family(&phi, 1.6, &SectorGrid::dyadic(0, 4), &SearchOptions::standard_only(), &cfg()).is_err());
    }
}
