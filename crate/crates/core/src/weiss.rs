//! Diagonal and off-diagonal control systems `dU = AU dt + B dW_H`: the
//! three quantities of the stochastic Weiss equivalence, the off-diagonal
//! contrapositive chain, and an Ornstein–Uhlenbeck simulator.
//!
//! Sign convention: `A x_k = −λ_k x_k` with `Re λ_k > 0`, so
//! `R(μ, A) B h_k = β_k/(μ + λ_k) x_k` in the diagonal case.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Error, Result};
use crate::families::{
    OperatorFamily, SearchOptions, UnifGammaBoundReport, Witness,
};
use crate::gamma_norm::{BasisLabel, ColumnOperator, GaussianSumEstimate};
use crate::hilbert_sequences::ray_constant;
use crate::laplace::{sector_family, RepresentableOperator, SectorGrid};
use crate::sampling::GaussianDrawConfig;
use crate::scalar::{csqrt, KahanSum, Real};
use crate::spaces::SpaceSpec;

/// A sequence `k ↦ a_k`, `k ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ModeLaw<T> {
    Constant(T),
    /// `k^p`.
    Power(T),
    /// `q^k`.
    Geometric(T),
    /// `k log²(k+1)`.
    KLogSquared,
}

impl<T: Real> ModeLaw<T> {
    pub fn eval(&self, k: usize) -> T {
        let kf = T::from_usize_lossy(k);
        match *self {
            ModeLaw::Constant(c) => c,
            ModeLaw::Power(p) => kf.powf(p),
            ModeLaw::Geometric(q) => q.powf(kf),
            ModeLaw::KLogSquared => {
                let l = (kf + T::one()).ln();
                kf * l * l
            }
        }
    }
}

impl<T: Real> fmt::Display for ModeLaw<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModeLaw::Constant(c) => write!(f, "{c}"),
            ModeLaw::Power(p) if *p == T::one() => write!(f, "k"),
            ModeLaw::Power(p) => write!(f, "k^{p}"),
            ModeLaw::Geometric(q) => write!(f, "{q}^k"),
            ModeLaw::KLogSquared => write!(f, "k log^2(k+1)"),
        }
    }
}

impl<T: Real> FromStr for ModeLaw<T> {
    type Err = Error;

    /// Accepts `c`, `k`, `k^p`, `q^k` and `k log^2(k+1)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let num = |x: &str| x.trim().parse::<f64>().ok().filter(|v| v.is_finite()).map(T::lit);
        let bad = || Error::InvalidInput(format!("cannot read mode law `{s}`"));
        if s.replace(' ', "") == "klog^2(k+1)" {
            return Ok(ModeLaw::KLogSquared);
        }
        if s == "k" {
            return Ok(ModeLaw::Power(T::one()));
        }
        if let Some(p) = s.strip_prefix("k^") {
            return num(p).map(ModeLaw::Power).ok_or_else(bad);
        }
        if let Some(q) = s.strip_suffix("^k") {
            return num(q).map(ModeLaw::Geometric).ok_or_else(bad);
        }
        num(s).map(ModeLaw::Constant).ok_or_else(bad)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalSystem<T> {
    lambdas: Vec<Complex<T>>,
    betas: Vec<Complex<T>>,
    space: SpaceSpec<T>,
}

impl<T: Real> DiagonalSystem<T> {
    /// Eigenvalues may be `+∞` (modes that have numerically decayed).
    pub fn new(lambdas: Vec<Complex<T>>, betas: Vec<Complex<T>>) -> Result<Self> {
        if lambdas.len() != betas.len() {
            return invalid("one input coefficient per eigenvalue required");
        }
        if lambdas.is_empty() {
            return invalid("system needs at least one mode");
        }
        if let Some((k, l)) = lambdas.iter().enumerate().find(|(_, l)| !(l.re > T::zero()) || l.im.is_nan()) {
            return domain(format!("λ_{} = {l} is not in the open right half-plane", k + 1));
        }
        if betas.iter().any(|b| !b.re.is_finite() || !b.im.is_finite()) {
            return invalid("input coefficients must be finite");
        }
        Ok(Self { lambdas, betas, space: SpaceSpec::l2() })
    }

    pub fn real(lambdas: &[T], betas: &[T]) -> Result<Self> {
        let re = |v: &[T]| v.iter().map(|&x| Complex::new(x, T::zero())).collect();
        Self::new(re(lambdas), re(betas))
    }

    /// Modes `k = 1..=n`.
    pub fn from_laws(lambda: ModeLaw<T>, beta: ModeLaw<T>, n: usize) -> Result<Self> {
        let l: Vec<T> = (1..=n).map(|k| lambda.eval(k)).collect();
        let b: Vec<T> = (1..=n).map(|k| beta.eval(k)).collect();
        Self::real(&l, &b)
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn lambdas(&self) -> &[Complex<T>] {
        &self.lambdas
    }

    pub fn betas(&self) -> &[Complex<T>] {
        &self.betas
    }

    pub fn space(&self) -> &SpaceSpec<T> {
        &self.space
    }

    /// `ω₀ = s(A) = s₀(A) = −inf Re λ_k`.
    pub fn growth_bound(&self) -> T {
        -self.lambdas.iter().map(|l| l.re).fold(T::infinity(), T::min)
    }

    /// `inf Re λ_k > 0` over the stored modes.
    pub fn is_invertible(&self) -> bool {
        self.growth_bound() < T::zero()
    }

    /// `‖B‖ = sup |β_k|`.
    pub fn input_norm(&self) -> T {
        self.betas.iter().map(|b| b.norm()).fold(T::zero(), T::max)
    }

    /// Largest `|arg λ_k|`.
    pub fn sector_angle(&self) -> T {
        self.lambdas.iter().filter(|l| l.re.is_finite()).map(|l| l.arg().abs()).fold(T::zero(), T::max)
    }

    pub fn is_real(&self) -> bool {
        self.lambdas.iter().all(|l| l.im == T::zero())
    }

    /// `S(·)B` as an operator `L²(ℝ₊; H) → E`.
    pub fn orbit_operator(&self) -> Result<RepresentableOperator<T>> {
        if self.lambdas.iter().any(|l| !l.re.is_finite()) {
            return Err(Error::NumericRange("orbit operator needs finite eigenvalues".into()));
        }
        RepresentableOperator::diagonal(&self.betas, &self.lambdas)
    }

    /// `R(μ, A) B`.
    pub fn resolvent_input(&self, mu: Complex<T>) -> Result<ColumnOperator<T>> {
        if !(mu.re > T::zero()) {
            return domain("μ must lie in the open right half-plane");
        }
        let mut op = ColumnOperator::new(self.space, self.len())?;
        for (k, (&l, &b)) in self.lambdas.iter().zip(&self.betas).enumerate() {
            if l.re.is_finite() {
                op.set_column(k, vec![(k, b / (mu + l))])?;
            }
        }
        Ok(op)
    }

    fn terms(&self, f: impl Fn(Complex<T>, T) -> T) -> Vec<T> {
        self.lambdas
            .iter()
            .zip(&self.betas)
            .map(|(&l, b)| if l.re.is_finite() { f(l, b.norm_sqr()) } else { T::zero() })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeriesTrend {
    Convergent,
    Divergent,
    /// Fewer than four doublings available.
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesReport<T> {
    /// Partial sum over all stored modes.
    pub value: T,
    /// Partial sums at `N = 2^j` and at the full length.
    pub partials: Vec<(usize, T)>,
    pub trend: SeriesTrend,
    pub truncation: usize,
}

/// Increment ratio at or above which a doubling counts as non-decaying.
pub const DIVERGENCE_RATIO: f64 = 0.9;
pub const DIVERGENCE_DOUBLINGS: usize = 4;

/// Divergent-trending iff over the last four doublings every increment
/// is positive and at least 0.9 times the previous one. A convergent
/// power law `k^{−1−ε}` has ratio `2^{−ε}`; the harmonic series has ratio
/// `→ 1`.
pub fn classify_trend<T: Real>(doubling_partials: &[T]) -> SeriesTrend {
    if doubling_partials.len() < DIVERGENCE_DOUBLINGS + 1 {
        return SeriesTrend::Undetermined;
    }
    let last = &doubling_partials[doubling_partials.len() - DIVERGENCE_DOUBLINGS - 1..];
    let inc: Vec<T> = last.windows(2).map(|w| w[1] - w[0]).collect();
    let ratio = T::lit(DIVERGENCE_RATIO);
    let divergent = inc.iter().all(|&d| d > T::zero()) && inc.windows(2).all(|w| w[1] >= ratio * w[0]);
    if divergent {
        SeriesTrend::Divergent
    } else {
        SeriesTrend::Convergent
    }
}

/// Partial sums at every power of two up to `terms.len()`.
pub fn series_report<T: Real>(terms: &[T]) -> SeriesReport<T> {
    let mut acc = KahanSum::new();
    let mut partials = Vec::new();
    let mut doubling = Vec::new();
    let mut next = 1usize;
    for (i, &t) in terms.iter().enumerate() {
        acc.add(t);
        if i + 1 == next {
            partials.push((next, acc.value()));
            doubling.push(acc.value());
            next *= 2;
        }
    }
    let value = acc.value();
    if partials.last().is_none_or(|&(n, _)| n != terms.len()) {
        partials.push((terms.len(), value));
    }
    SeriesReport { value, partials, trend: classify_trend(&doubling), truncation: terms.len() }
}

/// `Σ |β_k|²/(2 Re λ_k)`: the γ-norm of `S(·)B`, finite iff an invariant
/// measure exists.
pub fn invariant_measure_quantity<T: Real>(sys: &DiagonalSystem<T>) -> SeriesReport<T> {
    series_report(&sys.terms(|l, b2| b2 / (l.re + l.re)))
}

/// `Σ |β_k|²/|λ_k|`: the γ-norm of `(−A)^{−1/2} B`.
pub fn half_power_gamma<T: Real>(sys: &DiagonalSystem<T>) -> SeriesReport<T> {
    series_report(&sys.terms(|l, b2| b2 / l.norm()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorFour<T> {
    pub lhs: T,
    pub rhs: T,
    pub relative_gap: T,
}

/// `Σ β²/λ` against `4 Σ λβ²/(2λ)²`, both over the first `n` modes.
pub fn factor_four_identity<T: Real>(sys: &DiagonalSystem<T>, n: usize) -> Result<FactorFour<T>> {
    if !sys.is_real() {
        return Err(Error::UnsupportedStructure("the identity is stated for real eigenvalues".into()));
    }
    if n == 0 || n > sys.len() {
        return invalid(format!("truncation {n} outside 1..={}", sys.len()));
    }
    let (mut l, mut r) = (KahanSum::new(), KahanSum::new());
    let four = T::lit(4.0);
    for (lam, b) in sys.lambdas[..n].iter().zip(&sys.betas[..n]) {
        if !lam.re.is_finite() {
            continue;
        }
        let (t, b2) = (lam.re, b.norm_sqr());
        l.add(b2 / t);
        let d = t + t;
        r.add(four * t * b2 / (d * d));
    }
    let (lhs, rhs) = (l.value(), r.value());
    let scale = lhs.abs().max(rhs.abs());
    let relative_gap = if scale > T::zero() { (lhs - rhs).abs() / scale } else { T::zero() };
    Ok(FactorFour { lhs, rhs, relative_gap })
}

/// Probe grid `{r qⁿ : n ∈ ℤ}` on the positive axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolventGrid<T> {
    pub r: T,
    pub ratio: T,
}

impl<T: Real> ResolventGrid<T> {
    pub fn dyadic() -> Self {
        Self { r: T::one(), ratio: T::lit(2.0) }
    }

    /// `ratio = 2^{1/m}`.
    pub fn refined(m: u32) -> Self {
        Self { r: T::one(), ratio: T::lit(2.0).powf(T::one() / T::from_u32(m).expect("small")) }
    }

    pub fn point(&self, n: i64) -> T {
        self.r * self.ratio.powi(n as i32)
    }
}

/// `sup_n λ_n |β|²/|λ_n + λ_k|²` over the grid, attained at one of the two
/// grid neighbours of `|λ_k|` because the map is unimodal in `log λ`.
fn grid_sup<T: Real>(grid: &ResolventGrid<T>, lam: Complex<T>, b2: T) -> (T, i64) {
    if !lam.re.is_finite() || b2 == T::zero() {
        return (T::zero(), 0);
    }
    let x = (lam.norm() / grid.r).ln() / grid.ratio.ln();
    let n0 = x.floor().to_i64().unwrap_or(0);
    let g = |n: i64| {
        let t = grid.point(n);
        t * b2 / (Complex::new(t, T::zero()) + lam).norm_sqr()
    };
    let (a, b) = (g(n0), g(n0 + 1));
    if a >= b {
        (a, n0)
    } else {
        (b, n0 + 1)
    }
}

/// Lower bound of `‖{√λ R(λ,A)B : λ on the grid}‖²_unif-γ` by the exact
/// greedy sum `Σ_k sup_n λ_n|β_k|²/|λ_n + λ_k|²`, with the upper bound
/// `C_q (Σ |β_k|²/(2 Re λ_k))^{1/2}` when the invariant quantity is
/// convergent-trending.
pub fn resolvent_family_bounds<T: Real>(sys: &DiagonalSystem<T>, grid: &ResolventGrid<T>) -> Result<UnifGammaBoundReport<T>> {
    if !(grid.r > T::zero()) || !(grid.ratio > T::one()) {
        return domain("grid needs r > 0 and ratio > 1");
    }
    let sups: Vec<(T, i64)> = sys
        .lambdas
        .iter()
        .zip(&sys.betas)
        .map(|(&l, b)| grid_sup(grid, l, b.norm_sqr()))
        .collect();
    let n_lo = sups.iter().filter(|s| s.0 > T::zero()).map(|s| s.1).min().unwrap_or(0);
    let terms: Vec<T> = sups.iter().map(|s| s.0).collect();
    let report = series_report(&terms);
    let n = terms.len();
    let mut tail_profile = Vec::new();
    for cut in [0, n / 4, n / 2, 3 * n / 4] {
        if tail_profile.last().is_some_and(|(c, _)| *c == cut) {
            continue;
        }
        let mut acc = KahanSum::new();
        terms[cut..].iter().for_each(|&t| acc.add(t));
        tail_profile.push((cut, GaussianSumEstimate::exact(acc.value(), n)));
    }
    let inv = invariant_measure_quantity(sys);
    let upper = (inv.trend != SeriesTrend::Divergent)
        .then(|| ray_constant(sys.sector_angle(), grid.ratio) * inv.value.sqrt());
    Ok(UnifGammaBoundReport {
        lower_bound_sq: report.value,
        std_error: T::zero(),
        standard_lower_sq: report.value,
        probe_lower_sq: Vec::new(),
        upper_bound: upper,
        witness: Witness {
            basis: BasisLabel::Standard,
            members: sups.iter().map(|s| (s.1 - n_lo).max(0) as usize).collect(),
        },
        tail_profile,
        truncation: n,
    })
}

/// Same lower bound through the materialised family `√λ_n Φ̂(λ_n)` on
/// grid indices `n_min..=n_max`; for cross-checking.
pub fn resolvent_family_materialized<T: Real>(
    sys: &DiagonalSystem<T>,
    grid: &ResolventGrid<T>,
    n_min: i64,
    n_max: i64,
    opts: &SearchOptions,
    cfg: &GaussianDrawConfig,
) -> Result<(OperatorFamily<T>, UnifGammaBoundReport<T>)> {
    let phi = sys.orbit_operator()?;
    let sg = SectorGrid { r: grid.r, ratio: grid.ratio, n_min, n_max, both_rays: false };
    sector_family(&phi, T::zero(), &sg, opts, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EquivalenceVerdict {
    Consistent,
    Inconsistent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport<T> {
    pub label: String,
    pub invariant: SeriesReport<T>,
    pub half_power: SeriesReport<T>,
    pub resolvent: SeriesReport<T>,
    pub verdict: EquivalenceVerdict,
}

/// Evaluates the three quantities on the same modes and compares trends.
pub fn weiss_equivalence_report<T: Real>(sys: &DiagonalSystem<T>, grid: &ResolventGrid<T>, label: &str) -> Result<EquivalenceReport<T>> {
    let invariant = invariant_measure_quantity(sys);
    let half_power = half_power_gamma(sys);
    let terms: Vec<T> = sys
        .lambdas
        .iter()
        .zip(&sys.betas)
        .map(|(&l, b)| grid_sup(grid, l, b.norm_sqr()).0)
        .collect();
    let resolvent = series_report(&terms);
    let trends = [invariant.trend, half_power.trend, resolvent.trend];
    let verdict = if trends.iter().all(|&t| t == trends[0]) && trends[0] != SeriesTrend::Undetermined {
        EquivalenceVerdict::Consistent
    } else {
        EquivalenceVerdict::Inconsistent
    };
    Ok(EquivalenceReport { label: label.to_string(), invariant, half_power, resolvent, verdict })
}

/// The regression corpus `λ ∈ {k, k², 2^k, k log²(k+1)} × β ∈ {1, k^{−1/2}, k^{−1}}`.
pub fn weiss_corpus<T: Real>() -> Vec<(ModeLaw<T>, ModeLaw<T>)> {
    let lambdas = [ModeLaw::Power(T::one()), ModeLaw::Power(T::lit(2.0)), ModeLaw::Geometric(T::lit(2.0)), ModeLaw::KLogSquared];
    let betas = [ModeLaw::Constant(T::one()), ModeLaw::Power(T::lit(-0.5)), ModeLaw::Power(-T::one())];
    lambdas.iter().flat_map(|&l| betas.iter().map(move |&b| (l, b))).collect()
}

/// Default truncation for trend detection: `2^16` modes, i.e. doublings
/// from `2^10` on are all available.
pub const CORPUS_TRUNCATION: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffDiagonalSystem<T> {
    /// `rows[k]` lists `(n, β_{nk})`: `B h_n = Σ_k β_{nk} x_k` (0-based).
    rows: Vec<Vec<(usize, Complex<T>)>>,
    lambdas: Vec<Complex<T>>,
    delta_sets: Vec<Vec<usize>>,
    delta: T,
    j_max: usize,
    basis_constant: T,
}

impl<T: Real> OffDiagonalSystem<T> {
    pub fn new(
        rows: Vec<Vec<(usize, Complex<T>)>>,
        lambdas: Vec<Complex<T>>,
        delta_sets: Vec<Vec<usize>>,
        delta: T,
        j_max: usize,
        basis_constant: T,
    ) -> Result<Self> {
        if rows.len() != lambdas.len() || rows.len() != delta_sets.len() || rows.is_empty() {
            return invalid("rows, eigenvalues and Δ-sets must have one entry per mode");
        }
        if !(delta > T::zero() && delta <= T::one()) {
            return domain("δ must lie in (0, 1]");
        }
        if j_max == 0 {
            return invalid("J must be positive");
        }
        if !(basis_constant >= T::one()) {
            return domain("basis constant is at least 1");
        }
        if let Some(k) = delta_sets.iter().position(|d| d.len() > j_max) {
            return invalid(format!("Δ_{} has more than J = {j_max} elements", k + 1));
        }
        if lambdas.iter().any(|l| !(l.re > T::zero()) || !l.re.is_finite()) {
            return domain("eigenvalues must be finite with positive real part");
        }
        if rows.iter().flatten().any(|(_, b)| !b.re.is_finite() || !b.im.is_finite()) {
            return invalid("β entries must be finite");
        }
        Ok(Self { rows, lambdas, delta_sets, delta, j_max, basis_constant })
    }

    /// `β_{nk} = β_k δ_{nk}`, `Δ_k = {k}`, `J = 1`, `δ = 1`, `C = 1`.
    pub fn diagonal(lambdas: &[T], betas: &[T]) -> Result<Self> {
        let rows = betas.iter().enumerate().map(|(k, &b)| vec![(k, Complex::new(b, T::zero()))]).collect();
        let l = lambdas.iter().map(|&x| Complex::new(x, T::zero())).collect();
        let d = (0..betas.len()).map(|k| vec![k]).collect();
        Self::new(rows, l, d, T::one(), 1, T::one())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    pub fn j_max(&self) -> usize {
        self.j_max
    }

    fn beta(&self, n: usize, k: usize) -> Complex<T> {
        self.rows[k].iter().find(|e| e.0 == n).map(|e| e.1).unwrap_or_default()
    }

    fn row_norm_sq(&self, k: usize) -> T {
        self.rows[k].iter().map(|(_, b)| b.norm_sqr()).sum()
    }

    /// `Σ_k Σ_n |β_{nk}|²/|λ_k|`, the half-power quantity.
    pub fn half_power_gamma(&self) -> SeriesReport<T> {
        let terms: Vec<T> = (0..self.len()).map(|k| self.row_norm_sq(k) / self.lambdas[k].norm()).collect();
        series_report(&terms)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport<T> {
    /// Largest δ for which (i) holds; 1 when no two Δ-sets overlap.
    pub delta_i_max: T,
    /// Largest δ for which (ii) holds.
    pub delta_ii_max: T,
    /// Modes with empty Δ_k.
    pub degenerate: Vec<usize>,
    pub holds: bool,
}

/// Exhaustive check of (i) `Δ_j ∩ Δ_k ≠ ∅ ⇒ |λ_j/λ_k| ≥ δ` and (ii)
/// `Σ_{n∈Δ_k} |β_{nk}|² ≥ δ Σ_n |β_{nk}|²`.
pub fn off_diagonal_conditions<T: Real>(sys: &OffDiagonalSystem<T>) -> ConditionReport<T> {
    let mut owners: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (k, d) in sys.delta_sets.iter().enumerate() {
        for &n in d {
            owners.entry(n).or_default().push(k);
        }
    }
    let mut delta_i = T::one();
    let mut seen = BTreeSet::new();
    for ks in owners.values() {
        for (a, &j) in ks.iter().enumerate() {
            for &k in &ks[a + 1..] {
                if j != k && seen.insert((j, k)) {
                    let r = sys.lambdas[j].norm() / sys.lambdas[k].norm();
                    delta_i = delta_i.min(r.min(T::one() / r));
                }
            }
        }
    }
    let mut delta_ii = T::one();
    let mut degenerate = Vec::new();
    for k in 0..sys.len() {
        if sys.delta_sets[k].is_empty() {
            degenerate.push(k);
        }
        let total = sys.row_norm_sq(k);
        if total > T::zero() {
            let inside: T = sys.delta_sets[k].iter().map(|&n| sys.beta(n, k).norm_sqr()).sum();
            delta_ii = delta_ii.min(inside / total);
        }
    }
    let holds = degenerate.is_empty() && delta_i >= sys.delta && delta_ii >= sys.delta;
    ConditionReport { delta_i_max: delta_i, delta_ii_max: delta_ii, degenerate, holds }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainStep<T> {
    pub name: String,
    /// Norm-level values of the two sides of `lhs ≤ rhs`.
    pub lhs: T,
    pub rhs: T,
    /// Constant applied on the right-hand side (1 for plain steps).
    pub constant: T,
    /// `rhs − lhs`, or the remaining rounding budget for identities.
    pub slack: T,
}

impl<T: Real> ChainStep<T> {
    pub fn holds(&self) -> bool {
        self.slack >= T::zero()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChainVerdict {
    /// A witness sequence was found and every step holds.
    Witnessed,
    /// A step failed; this would falsify the implementation.
    Violated,
    /// The half-power quantity is convergent-trending.
    NotApplicable,
    /// No truncation reached the required half-power level.
    Insufficient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainTrace<T> {
    /// Second-moment level `M`; the norm-level target is `√M`.
    pub target: T,
    pub k: usize,
    pub j0: usize,
    pub steps: Vec<ChainStep<T>>,
    /// `(n, μ_n)` with `μ_n ≠ 0` (0-based `n`).
    pub witness: Vec<(usize, Complex<T>)>,
    /// `(E‖Σ_n γ_n √μ_n R(μ_n, A) B h_n‖²)^{1/2}`.
    pub witness_value: T,
    pub c_delta: T,
    pub c_delta_prime: T,
    pub verdict: ChainVerdict,
}

fn identity_step<T: Real>(name: &str, a: T, b: T, terms: usize) -> ChainStep<T> {
    let budget = T::lit(4.0) * T::from_usize_lossy(terms.max(1)) * T::epsilon() * a.abs().max(b.abs());
    ChainStep { name: name.into(), lhs: a, rhs: b, constant: T::one(), slack: budget - (a - b).abs() }
}

fn inequality_step<T: Real>(name: &str, lhs: T, rhs: T, constant: T) -> ChainStep<T> {
    ChainStep { name: name.into(), lhs, rhs, constant, slack: rhs - lhs }
}

fn sum_sq<T: Real>(it: impl Iterator<Item = T>) -> T {
    let mut acc = KahanSum::new();
    it.for_each(|x| acc.add(x));
    acc.value()
}

/// Runs the contrapositive chain of the off-diagonal estimate for a
/// second-moment target `M`: finds `K` with half-power partial sum at
/// least `(√M J/δ)²`, performs the selection and pigeonhole steps, builds
/// the witness `(μ_n)` and checks every inequality with certified
/// constants on `ℓ²`.
pub fn off_diagonal_contrapositive_run<T: Real>(sys: &OffDiagonalSystem<T>, target: T) -> Result<ChainTrace<T>> {
    if !(target > T::zero()) {
        return domain("target must be positive");
    }
    let cond = off_diagonal_conditions(sys);
    if !cond.holds {
        return domain(format!(
            "conditions fail at δ = {}: (i) admits {}, (ii) admits {}",
            sys.delta, cond.delta_i_max, cond.delta_ii_max
        ));
    }
    let empty = |verdict| ChainTrace {
        target,
        k: 0,
        j0: 0,
        steps: Vec::new(),
        witness: Vec::new(),
        witness_value: T::zero(),
        c_delta: T::zero(),
        c_delta_prime: T::zero(),
        verdict,
    };
    let hp = sys.half_power_gamma();
    if hp.trend == SeriesTrend::Convergent {
        return Ok(empty(ChainVerdict::NotApplicable));
    }
    let m = target.sqrt();
    let (delta, jf) = (sys.delta, T::from_usize_lossy(sys.j_max));
    let need = m * jf / delta;
    let eps_k = |k: usize| T::one() + T::lit(2.0) * T::from_usize_lossy(k) * T::epsilon();

    // S0: smallest K with half-power partial sum ≥ (mJ/δ)²
    let mut acc = KahanSum::new();
    let mut big_k = None;
    for k in 0..sys.len() {
        acc.add(sys.row_norm_sq(k) / sys.lambdas[k].norm());
        if acc.value().sqrt() >= need {
            big_k = Some(k + 1);
            break;
        }
    }
    let Some(kk) = big_k else {
        return Ok(empty(ChainVerdict::Insufficient));
    };
    let lam_abs: Vec<T> = sys.lambdas[..kk].iter().map(|l| l.norm()).collect();
    let q0 = sum_sq((0..kk).map(|k| sys.row_norm_sq(k) / lam_abs[k]));
    let mut steps = vec![inequality_step("hypothesis", need, q0.sqrt(), T::one())];

    // S1: restrict to Δ_k
    let q1 = sum_sq((0..kk).flat_map(|k| sys.delta_sets[k].iter().map(move |&n| (n, k))).map(|(n, k)| sys.beta(n, k).norm_sqr() / lam_abs[k]));
    let c1 = T::one() / delta.sqrt();
    steps.push(inequality_step("condition (ii)", q0.sqrt(), c1 * q1.sqrt() * eps_k(kk), c1));

    // S2: pad Δ_k to exactly J entries with fresh indices, φ_j(k) = j-th entry
    let fresh_base = sys.rows.iter().flatten().map(|e| e.0 + 1).chain(sys.delta_sets.iter().flatten().map(|&n| n + 1)).max().unwrap_or(0);
    let mut next_fresh = fresh_base;
    let phi: Vec<Vec<usize>> = (0..kk)
        .map(|k| {
            let mut d: Vec<usize> = sys.delta_sets[k].clone();
            d.sort_unstable();
            while d.len() < sys.j_max {
                d.push(next_fresh);
                next_fresh += 1;
            }
            d
        })
        .collect();
    let beta_at = |n: usize, k: usize| if n >= fresh_base { Complex::default() } else { sys.beta(n, k) };
    let q2 = sum_sq((0..kk).flat_map(|k| phi[k].iter().map(move |&n| (n, k))).map(|(n, k)| beta_at(n, k).norm_sqr() / lam_abs[k]));
    steps.push(identity_step("selection maps", q1.sqrt(), q2.sqrt(), kk * sys.j_max));

    // S3: triangle inequality over j
    let q3: Vec<T> = (0..sys.j_max)
        .map(|j| sum_sq((0..kk).map(|k| beta_at(phi[k][j], k).norm_sqr() / lam_abs[k])))
        .collect();
    let tri: T = q3.iter().map(|q| q.sqrt()).sum();
    steps.push(inequality_step("triangle inequality", q2.sqrt(), tri * eps_k(kk * sys.j_max), T::one()));

    // S4: pigeonhole
    let (j0, q4) = q3
        .iter()
        .copied()
        .enumerate()
        .fold((0, T::neg_infinity()), |best, (j, q)| if q > best.1 { (j, q) } else { best });
    steps.push(inequality_step("pigeonhole", m, q4.sqrt() * eps_k(kk * sys.j_max), T::one()));

    // S5: first-occurrence map m(k) and the witness μ
    let tau: Vec<usize> = (0..kk).map(|k| phi[k][j0]).collect();
    let mut first: BTreeMap<usize, usize> = BTreeMap::new();
    let mk: Vec<usize> = (0..kk).map(|k| *first.entry(tau[k]).or_insert(k)).collect();
    let mu: BTreeMap<usize, Complex<T>> = first.iter().filter(|(n, _)| **n < fresh_base).map(|(&n, &k)| (n, sys.lambdas[k])).collect();
    let b_tau: Vec<Complex<T>> = (0..kk).map(|k| beta_at(tau[mk[k]], k)).collect();
    let q5 = sum_sq((0..kk).map(|k| b_tau[k].norm_sqr() / lam_abs[k]));
    steps.push(identity_step("first-occurrence map", q4.sqrt(), q5.sqrt(), kk));

    // S6: contraction with |1 + √(λ_{m(k)}/λ_k)| ≤ 1 + 1/√δ
    let sq: Vec<Complex<T>> = sys.lambdas[..kk].iter().map(|&l| csqrt(l)).collect();
    let c_delta = T::one() + T::one() / delta.sqrt();
    let observed = (0..kk).map(|k| (sq[mk[k]] + sq[k]).norm() / sq[k].norm()).fold(T::zero(), T::max);
    if observed > c_delta * eps_k(1) {
        return Err(Error::Domain(format!("ratio bound violated: {observed} > {c_delta}")));
    }
    let q6 = sum_sq((0..kk).map(|k| (b_tau[k] / (sq[mk[k]] + sq[k])).norm_sqr()));
    steps.push(inequality_step("contraction (C_δ)", q5.sqrt(), c_delta * q6.sqrt() * eps_k(kk), c_delta));

    // S7: √λ_m β / (λ_m + √(λ_m λ_k))
    let lam = &sys.lambdas;
    let r7: Vec<Complex<T>> = (0..kk).map(|k| sq[mk[k]] * b_tau[k] / (lam[mk[k]] + sq[mk[k]] * sq[k])).collect();
    let q7 = sum_sq(r7.iter().map(|z| z.norm_sqr()));
    steps.push(identity_step("rewrite", q6.sqrt(), q7.sqrt(), kk));

    // S8: add the terms n ≠ τ(k); each row keeps its τ(k) term first
    let extra = |k: usize| {
        let d = sq[mk[k]] * sq[k];
        sum_sq(sys.rows[k].iter().filter(|e| e.0 != tau[k]).filter_map(|&(n, b)| {
            mu.get(&n).map(|&u| (csqrt(u) * b / (u + d)).norm_sqr())
        }))
    };
    let q8 = sum_sq((0..kk).map(|k| r7[k].norm_sqr() + extra(k)));
    steps.push(inequality_step("adding terms", q7.sqrt(), q8.sqrt() * eps_k(kk), T::one()));

    // S9: replace √(λ_m λ_k) by λ_k and insert the factor 2
    let mut c_pp = T::zero();
    for k in 0..kk {
        let d = sq[mk[k]] * sq[k];
        for &(n, b) in &sys.rows[k] {
            if let (Some(&u), true) = (mu.get(&n), b.norm_sqr() > T::zero()) {
                c_pp = c_pp.max((u + lam[k]).norm() / (T::lit(2.0) * (u + d).norm()));
            }
        }
    }
    let c_pp = c_pp * eps_k(1);
    let w_k = |k: usize| {
        sum_sq(sys.rows[k].iter().filter_map(|&(n, b)| mu.get(&n).map(|&u| (csqrt(u) * b / (u + lam[k])).norm_sqr())))
    };
    let q10 = sum_sq((0..kk).map(w_k));
    let q9 = T::lit(4.0) * q10;
    steps.push(inequality_step("contraction (C'')", q8.sqrt(), c_pp * q9.sqrt() * eps_k(kk), c_pp));

    // S10: drop the factor 2
    steps.push(identity_step("factor 2", q9.sqrt(), T::lit(2.0) * q10.sqrt(), kk));

    // S11: projection onto the first K coordinates
    let c = sys.basis_constant;
    let w = sum_sq((0..sys.len()).map(w_k));
    steps.push(inequality_step("basis projection", q10.sqrt(), c * w.sqrt() * eps_k(sys.len()), c));

    let c_delta_prime = c_delta * c_pp * T::lit(2.0);
    let witness_value = w.sqrt();
    steps.push(inequality_step("witness", m / (c * c_delta_prime), witness_value * eps_k(sys.len()), c * c_delta_prime));
    let verdict = if steps.iter().all(ChainStep::holds) { ChainVerdict::Witnessed } else { ChainVerdict::Violated };
    Ok(ChainTrace {
        target,
        k: kk,
        j0,
        steps,
        witness: mu.into_iter().collect(),
        witness_value,
        c_delta,
        c_delta_prime,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuCoordinate<T> {
    pub variance: T,
    pub std_error: T,
    /// `β²(1 − e^{−2λT})/(2λ)`.
    pub exact: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuReport<T> {
    pub coordinates: Vec<OuCoordinate<T>>,
    /// Empirical `E Σ_k U_k(T)²` with its standard error.
    pub total: T,
    pub total_std_error: T,
    pub total_exact: T,
    pub steps: usize,
    pub n_paths: usize,
}

/// Simulates `U(0) = 0` to `horizon` with the exact Gaussian transition
/// `U ← e^{−λ dt} U + √(β²(1 − e^{−2λ dt})/(2λ)) ξ` per coordinate. Paths
/// are split over the batches of `cfg`, each with its own stream.
pub fn ou_simulate<T: Real>(sys: &DiagonalSystem<T>, dt: T, horizon: T, n_paths: usize, cfg: &GaussianDrawConfig) -> Result<OuReport<T>> {
    if !sys.is_real() || sys.lambdas.iter().any(|l| !l.re.is_finite()) {
        return Err(Error::UnsupportedStructure("simulation needs finite real eigenvalues".into()));
    }
    let lam_min = sys.lambdas.iter().map(|l| l.re).fold(T::infinity(), T::min);
    if !(dt > T::zero()) || dt > T::lit(0.1) / lam_min {
        return Err(Error::Domain(format!("time step {dt} exceeds 0.1/λ_min = {}", T::lit(0.1) / lam_min)));
    }
    if !(horizon > T::zero()) || n_paths < 2 {
        return invalid("need a positive horizon and at least two paths");
    }
    let steps = (horizon / dt).ceil().to_usize().unwrap_or(0).max(1);
    let dt_eff = horizon.as_f64() / steps as f64;
    let modes: Vec<(f64, f64)> = sys
        .lambdas
        .iter()
        .zip(&sys.betas)
        .map(|(l, b)| {
            let l = l.re.as_f64();
            let b2 = b.norm_sqr().as_f64();
            ((-l * dt_eff).exp(), (b2 * -(-2.0 * l * dt_eff).exp_m1() / (2.0 * l)).sqrt())
        })
        .collect();
    let batches = cfg.batch_count.min(n_paths);
    let sizes: Vec<usize> = (0..batches).map(|b| n_paths / batches + usize::from(b < n_paths % batches)).collect();
    let dim = modes.len();
    // per batch: Σ U², Σ U⁴ per coordinate, then Σ total, Σ total²
    let parts: Vec<(Vec<f64>, Vec<f64>, f64, f64)> = sizes
        .par_iter()
        .enumerate()
        .map(|(b, &size)| {
            let mut rng = cfg.batch_rng(b);
            let (mut s2, mut s4) = (vec![0.0; dim], vec![0.0; dim]);
            let (mut t1, mut t2) = (0.0, 0.0);
            let mut u = vec![0.0; dim];
            for _ in 0..size {
                u.iter_mut().for_each(|x| *x = 0.0);
                for _ in 0..steps {
                    for (x, &(a, s)) in u.iter_mut().zip(&modes) {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        *x = a * *x + s * z;
                    }
                }
                let mut tot = 0.0;
                for (i, &x) in u.iter().enumerate() {
                    let x2 = x * x;
                    s2[i] += x2;
                    s4[i] += x2 * x2;
                    tot += x2;
                }
                t1 += tot;
                t2 += tot * tot;
            }
            (s2, s4, t1, t2)
        })
        .collect();
    let n = n_paths as f64;
    let mut coordinates = Vec::with_capacity(dim);
    for (i, (l, bb)) in sys.lambdas.iter().zip(&sys.betas).enumerate() {
        let s2: f64 = parts.iter().map(|p| p.0[i]).sum();
        let s4: f64 = parts.iter().map(|p| p.1[i]).sum();
        let mean = s2 / n;
        let var = (s4 / n - mean * mean).max(0.0) * n / (n - 1.0);
        let (l, b2) = (l.re.as_f64(), bb.norm_sqr().as_f64());
        let exact = -b2 * (-2.0 * l * horizon.as_f64()).exp_m1() / (2.0 * l);
        coordinates.push(OuCoordinate { variance: T::lit(mean), std_error: T::lit((var / n).sqrt()), exact: T::lit(exact) });
    }
    let t1: f64 = parts.iter().map(|p| p.2).sum();
    let t2: f64 = parts.iter().map(|p| p.3).sum();
    let mean = t1 / n;
    let var = (t2 / n - mean * mean).max(0.0) * n / (n - 1.0);
    let total_exact = coordinates.iter().map(|c| c.exact).sum();
    Ok(OuReport {
        coordinates,
        total: T::lit(mean),
        total_std_error: T::lit((var / n).sqrt()),
        total_exact,
        steps,
        n_paths,
    })
}
