//! Operator families, certified lower bounds for the uniform γ-norm, the
//! permanence checks, and the counterexample gallery.
//!
//! The supremum over all orthonormal bases cannot be computed. Reports
//! carry a certified lower bound (an explicit witness: basis plus member
//! sequence), an analytic upper bound when a theorem supplies one, and the
//! witness tail profile as convergence evidence.

use std::collections::{BTreeMap, HashSet};

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Error, Result};
use crate::gamma_norm::{
    gaussian_sum_sq, BasisLabel, ColumnOperator, GaussianSumEstimate, OrthonormalBasis, SparseEntries,
};
use crate::sampling::{rademacher, standard_normal, GaussianDrawConfig};
use crate::scalar::{KahanSum, Real};
use crate::spaces::{ScalarField, SpaceSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FamilyKind {
    Explicit,
    ShiftOrbit { max_power: usize },
    Projection { n: usize },
    /// Laplace transforms or resolvents sampled on a parameter grid.
    Resolvent { points: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorFamily<T> {
    kind: FamilyKind,
    space: SpaceSpec<T>,
    members: Vec<ColumnOperator<T>>,
}

impl<T: Real> OperatorFamily<T> {
    /// Nonempty list sharing one target space; duplicates (same column
    /// fingerprint) are dropped, keeping first occurrences.
    pub fn explicit(members: Vec<ColumnOperator<T>>) -> Result<Self> {
        Self::build(FamilyKind::Explicit, members)
    }

    /// `{T Sᵐ : 0 ≤ m ≤ max_power}` with `S` the right shift.
    pub fn shift_orbit(base: &ColumnOperator<T>, max_power: usize) -> Result<Self> {
        let members = (0..=max_power).map(|m| base.shifted(m)).collect();
        Self::build(FamilyKind::ShiftOrbit { max_power }, members)
    }

    /// Rank-one projections `P_k = e_k ⊗ e_k` on `ℓ²`, `k < n`.
    pub fn projection(n: usize) -> Result<Self> {
        let one = Complex::new(T::one(), T::zero());
        let members = (0..n)
            .map(|k| ColumnOperator::new(SpaceSpec::l2(), n)?.with_column(k, vec![(k, one)]))
            .collect::<Result<Vec<_>>>()?;
        Self::build(FamilyKind::Projection { n }, members)
    }

    pub(crate) fn resolvent(members: Vec<ColumnOperator<T>>) -> Result<Self> {
        let points = members.len();
        Self::build(FamilyKind::Resolvent { points }, members)
    }

    fn build(kind: FamilyKind, members: Vec<ColumnOperator<T>>) -> Result<Self> {
        let first = members.first().ok_or_else(|| Error::Domain("empty operator family".into()))?;
        let space = *first.space();
        if members.iter().any(|m| *m.space() != space) {
            return invalid("family members must share the target space");
        }
        let mut seen = HashSet::new();
        let members = members.into_iter().filter(|m| seen.insert(m.fingerprint())).collect();
        Ok(Self { kind, space, members })
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn space(&self) -> &SpaceSpec<T> {
        &self.space
    }

    pub fn members(&self) -> &[ColumnOperator<T>] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn truncation(&self) -> usize {
        self.members.iter().map(ColumnOperator::truncation).max().unwrap_or(1)
    }

    fn fingerprints(&self) -> HashSet<u64> {
        self.members.iter().map(ColumnOperator::fingerprint).collect()
    }
}

/// How hard the lower-bound search works.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    /// Number of random orthonormal bases probed besides the standard one.
    pub probes: usize,
    /// Random rotations act on the leading `probe_dim` basis vectors.
    pub probe_dim: usize,
    pub probe_seed: u64,
    /// Cut points of the witness tail profile; defaults to quarters of the
    /// truncation.
    pub cuts: Option<Vec<usize>>,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { probes: 8, probe_dim: 32, probe_seed: 0x5eed, cuts: None }
    }
}

impl SearchOptions {
    pub fn standard_only() -> Self {
        Self { probes: 0, ..Self::default() }
    }
}

/// Basis together with the member chosen for each basis vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub basis: BasisLabel,
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnifGammaBoundReport<T> {
    /// Certified lower bound for `‖𝒯‖²_unif-γ` (second-moment units).
    pub lower_bound_sq: T,
    /// Zero when the witness sum was evaluated exactly.
    pub std_error: T,
    pub standard_lower_sq: T,
    pub probe_lower_sq: Vec<T>,
    /// Analytic upper bound for `‖𝒯‖_unif-γ` (norm units); `None` is the
    /// +∞ flag.
    pub upper_bound: Option<T>,
    pub witness: Witness,
    pub tail_profile: Vec<(usize, GaussianSumEstimate<T>)>,
    pub truncation: usize,
}

impl<T: Real> UnifGammaBoundReport<T> {
    /// Lower bound in norm units.
    pub fn lower_bound(&self) -> T {
        self.lower_bound_sq.sqrt()
    }

    pub fn with_upper_bound(mut self, upper: Option<T>) -> Self {
        self.upper_bound = upper;
        self
    }

    /// `lower ≤ upper`, with four standard errors of slack on Monte Carlo
    /// paths; trivially true without an upper bound.
    pub fn is_consistent(&self) -> bool {
        match self.upper_bound {
            Some(u) => self.lower_bound_sq - T::lit(4.0) * self.std_error <= u * u,
            None => true,
        }
    }
}

fn greedy_choice<T: Real>(
    family: &OperatorFamily<T>,
    basis: &OrthonormalBasis<T>,
    trunc: usize,
) -> (Vec<usize>, Vec<SparseEntries<T>>) {
    let mut choice = Vec::with_capacity(trunc);
    let mut images = Vec::with_capacity(trunc);
    for k in 0..trunc {
        let mut best: Option<(T, usize, SparseEntries<T>)> = None;
        for (idx, m) in family.members().iter().enumerate() {
            let img = basis.image(m, k);
            let vals: Vec<_> = img.iter().map(|&(_, v)| v).collect();
            let score = if vals.is_empty() { T::zero() } else { family.space().norm_sq_unchecked(&vals) };
            if best.as_ref().is_none_or(|(s, _, _)| score > *s) {
                best = Some((score, idx, img));
            }
        }
        let (_, idx, img) = best.expect("family is nonempty");
        choice.push(idx);
        images.push(img);
    }
    (choice, images)
}

fn default_cuts(trunc: usize) -> Vec<usize> {
    let mut cuts: Vec<usize> = [0, trunc / 4, trunc / 2, 3 * trunc / 4].into_iter().filter(|&c| c < trunc).collect();
    cuts.dedup();
    cuts
}

/// Greedy lower bound for `‖𝒯‖²_unif-γ` over the first `trunc` basis
/// vectors: for each `k` the member maximising `‖T h_k‖` is chosen, on the
/// standard basis and on `opts.probes` random rotations; the best witness
/// sum is kept.
pub fn unif_gamma_lower<T: Real>(
    family: &OperatorFamily<T>,
    trunc: usize,
    opts: &SearchOptions,
    cfg: &GaussianDrawConfig,
) -> Result<UnifGammaBoundReport<T>> {
    if family.is_empty() {
        return domain("empty operator family");
    }
    if trunc == 0 {
        return invalid("truncation must be positive");
    }
    let space = *family.space();
    let mut bases = vec![OrthonormalBasis::standard()];
    for p in 0..opts.probes {
        let dim = opts.probe_dim.min(trunc).max(1);
        bases.push(OrthonormalBasis::random_rotation(dim, opts.probe_seed.wrapping_add(p as u64)));
    }
    let mut best: Option<(GaussianSumEstimate<T>, Witness, Vec<SparseEntries<T>>)> = None;
    let mut standard_lower_sq = T::zero();
    let mut probe_lower_sq = Vec::new();
    for (b, basis) in bases.iter().enumerate() {
        let (choice, images) = greedy_choice(family, basis, trunc);
        let est = gaussian_sum_sq(&space, trunc, &images, cfg)?;
        if b == 0 {
            standard_lower_sq = est.mean;
        } else {
            probe_lower_sq.push(est.mean);
        }
        if best.as_ref().is_none_or(|(e, _, _)| est.mean > e.mean) {
            best = Some((est, Witness { basis: basis.label(), members: choice }, images));
        }
    }
    let (est, witness, images) = best.expect("at least the standard basis");
    let cuts = opts.cuts.clone().unwrap_or_else(|| default_cuts(trunc));
    let tail_profile = cuts
        .iter()
        .filter(|&&c| c < trunc)
        .map(|&c| Ok((c, gaussian_sum_sq(&space, trunc, &images[c..], cfg)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(UnifGammaBoundReport {
        lower_bound_sq: est.mean,
        std_error: est.std_error,
        standard_lower_sq,
        probe_lower_sq,
        upper_bound: None,
        witness,
        tail_profile,
        truncation: trunc,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailVerdict {
    /// Witness tails stay above `δ²` at every probed cut of every
    /// truncation: evidence that the family is not uniformly γ-radonifying.
    NotUniformlyGammaRadonifying,
    /// The probed tail fell below `δ²` at the largest truncation.
    TailsVanishing,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCertificate<T> {
    pub delta_sq: T,
    pub reports: Vec<UnifGammaBoundReport<T>>,
    pub verdict: TailVerdict,
}

/// Runs [`unif_gamma_lower`] across `truncations` and classifies the
/// witness tails against `delta_sq`. Monte Carlo tails count as above the
/// floor only if `mean − 4σ ≥ δ²`.
pub fn certify_tails<T: Real>(
    family: &OperatorFamily<T>,
    truncations: &[usize],
    delta_sq: T,
    opts: &SearchOptions,
    cfg: &GaussianDrawConfig,
) -> Result<TailCertificate<T>> {
    if truncations.is_empty() || !(delta_sq > T::zero()) {
        return invalid("need at least one truncation and a positive tail floor");
    }
    let reports = truncations
        .iter()
        .map(|&n| unif_gamma_lower(family, n, opts, cfg))
        .collect::<Result<Vec<_>>>()?;
    let four = T::lit(4.0);
    let all_above = reports
        .iter()
        .all(|r| r.tail_profile.iter().all(|(_, e)| e.mean - four * e.std_error >= delta_sq));
    let last_below = reports
        .last()
        .and_then(|r| r.tail_profile.last())
        .is_some_and(|(_, e)| e.mean + four * e.std_error < delta_sq);
    let verdict = if all_above {
        TailVerdict::NotUniformlyGammaRadonifying
    } else if last_below {
        TailVerdict::TailsVanishing
    } else {
        TailVerdict::Inconclusive
    };
    Ok(TailCertificate { delta_sq, reports, verdict })
}

/// One block of the shift-orbit counterexample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftBlock<T> {
    pub n: u32,
    /// Number of Gaussian terms in the block, `2ⁿ`.
    pub terms: u64,
    pub second_moment: T,
    pub norm: T,
    /// `n⁻² 2^{n/2}`.
    pub expected_norm: T,
    pub relative_error: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftOrbitReport<T> {
    pub blocks: Vec<ShiftBlock<T>>,
    /// Block norms increase strictly from `n = 6` on and the last one
    /// exceeds all earlier ones.
    pub unbounded_evidence: bool,
}

pub const SHIFT_ORBIT_MAX_N: u32 = 24;

/// `M_m` with `M_1 = 1`, `M_{m+1} = M_m + m`.
pub fn shift_block_start(m: u64) -> u64 {
    1 + m * (m - 1) / 2
}

/// The scalar functional `T = Σ_{n ≤ n_max} n⁻² T_{2ⁿ}` where
/// `T_m h_{M_{m+1}} = 1`, as a column operator into the scalar field.
pub fn shift_counterexample_base<T: Real>(n_max: u32) -> Result<ColumnOperator<T>> {
    if n_max == 0 || n_max > SHIFT_ORBIT_MAX_N {
        return Err(Error::NumericRange(format!(
            "n_max = {n_max} outside 1..={SHIFT_ORBIT_MAX_N} supported by the index arithmetic"
        )));
    }
    let last = shift_block_start((1u64 << n_max) + 1);
    let mut op = ColumnOperator::new(SpaceSpec::l2(), usize::try_from(last).map_err(|_| Error::NumericRange("index overflow".into()))?)?;
    for n in 1..=n_max {
        let col = shift_block_start((1u64 << n) + 1) - 1;
        let w = T::one() / T::from_u32(n * n).expect("small integer");
        op.set_column(col as usize, vec![(0, Complex::new(w, T::zero()))])?;
    }
    Ok(op)
}

/// Shift powers `m_k = m − j` for `k = M_m + j`, `j = 1..=m`, `m = 2ⁿ`
/// (1-based `k`).
pub fn shift_witness_powers(n: u32) -> impl Iterator<Item = (u64, u64)> {
    let m = 1u64 << n;
    let start = shift_block_start(m);
    (1..=m).map(move |j| (start + j, m - j))
}

/// Exact block second moments `E|Σ_{k in block n} γ_k T S^{m_k} h_k|²` of
/// the shift-orbit counterexample, evaluated by running over every term.
pub fn shift_orbit_divergence<T: Real>(n_max: u32) -> Result<ShiftOrbitReport<T>> {
    let base = shift_counterexample_base::<T>(n_max)?;
    let mut blocks = Vec::with_capacity(n_max as usize);
    for n in 1..=n_max {
        let mut acc = KahanSum::new();
        for (k, m) in shift_witness_powers(n) {
            // T Sᵐ h_k = T h_{k+m}; columns are 0-based
            let v: T = base.column((k + m - 1) as usize).iter().map(|(_, x)| x.norm_sqr()).sum();
            acc.add(v);
        }
        let second_moment = acc.value();
        let norm = second_moment.sqrt();
        let nf = T::from_u32(n).expect("small integer");
        let expected_norm = T::lit(2.0).powf(nf / T::lit(2.0)) / (nf * nf);
        blocks.push(ShiftBlock {
            n,
            terms: 1u64 << n,
            second_moment,
            norm,
            expected_norm,
            relative_error: ((norm - expected_norm) / expected_norm).abs(),
        });
    }
    let increasing = blocks.windows(2).filter(|w| w[0].n >= 6).all(|w| w[1].norm > w[0].norm);
    let last = blocks.last().map(|b| b.norm).unwrap_or(T::zero());
    let exceeds = blocks.iter().rev().skip(1).all(|b| b.norm < last);
    Ok(ShiftOrbitReport { blocks, unbounded_evidence: n_max >= 8 && increasing && exceeds })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexHullReport<T> {
    pub family_lower: T,
    pub hull_lower: T,
    /// `1` for real scalars, `2` for complex scalars.
    pub factor: T,
    pub std_error: T,
    pub holds: bool,
}

/// Compares the lower bound of convex combinations `Σ w_i T_i` (one per
/// weight draw) with that of the family: `hull ≤ factor · family + 4σ`
/// in norm units.
pub fn permanence_convex<T: Real>(
    family: &OperatorFamily<T>,
    weight_draws: &[Vec<T>],
    trunc: usize,
    opts: &SearchOptions,
    cfg: &GaussianDrawConfig,
) -> Result<ConvexHullReport<T>> {
    if family.len() > 16 {
        return invalid("convex permanence check supports at most 16 members");
    }
    if weight_draws.is_empty() {
        return invalid("need at least one weight vector");
    }
    let tol = T::lit(1e-12);
    let mut hull = Vec::with_capacity(weight_draws.len());
    for w in weight_draws {
        if w.len() != family.len() {
            return domain(format!("weight vector has {} entries for {} members", w.len(), family.len()));
        }
        let s: T = w.iter().copied().sum();
        if w.iter().any(|&x| !(x >= T::zero())) || (s - T::one()).abs() > tol {
            return domain("weights must be nonnegative and sum to one");
        }
        let cw: Vec<_> = w.iter().map(|&x| Complex::new(x, T::zero())).collect();
        hull.push(ColumnOperator::linear_combination(family.members(), &cw)?);
    }
    let hull = OperatorFamily::explicit(hull)?;
    let fam = unif_gamma_lower(family, trunc, opts, cfg)?;
    let hul = unif_gamma_lower(&hull, trunc, opts, cfg)?;
    let factor = match family.space().scalar() {
        ScalarField::Real => T::one(),
        ScalarField::Complex => T::lit(2.0),
    };
    let sigma = norm_sigma(&fam).max(norm_sigma(&hul));
    let holds = hul.lower_bound() <= factor * fam.lower_bound() + T::lit(4.0) * sigma;
    Ok(ConvexHullReport {
        family_lower: fam.lower_bound(),
        hull_lower: hul.lower_bound(),
        factor,
        std_error: sigma,
        holds,
    })
}

/// Delta-method standard error of the square root.
fn norm_sigma<T: Real>(r: &UnifGammaBoundReport<T>) -> T {
    if r.std_error == T::zero() || r.lower_bound_sq <= T::zero() {
        T::zero()
    } else {
        r.std_error / (T::lit(2.0) * r.lower_bound())
    }
}

/// Largest number of terms whose Rademacher sign patterns are enumerated.
pub const RADEMACHER_ENUMERATION_LIMIT: usize = 12;

/// `E‖Σ r_k y_k‖²` with Rademacher `r_k`: exact enumeration of the `2ⁿ`
/// sign patterns for `n ≤ 12`, batch Monte Carlo above.
pub fn rademacher_second_moment<T: Real>(
    space: &SpaceSpec<T>,
    vectors: &[Vec<Complex<T>>],
    cfg: &GaussianDrawConfig,
) -> Result<GaussianSumEstimate<T>> {
    let n = vectors.len();
    let dim = vectors.iter().map(Vec::len).max().unwrap_or(0);
    if n == 0 || dim == 0 {
        return Ok(GaussianSumEstimate::exact(T::zero(), dim));
    }
    let signed_sum = |signs: &dyn Fn(usize) -> T| {
        let mut acc = vec![Complex::<T>::default(); dim];
        for (k, v) in vectors.iter().enumerate() {
            let s = signs(k);
            for (a, &x) in acc.iter_mut().zip(v) {
                *a = *a + x * s;
            }
        }
        space.norm_sq_unchecked(&acc)
    };
    if n <= RADEMACHER_ENUMERATION_LIMIT {
        let patterns = 1usize << n;
        let total: T = (0..patterns)
            .map(|bits| signed_sum(&|k| if bits >> k & 1 == 1 { -T::one() } else { T::one() }))
            .sum();
        return Ok(GaussianSumEstimate::exact(total / T::from_usize_lossy(patterns), dim));
    }
    let est = cfg.estimate(dim, |rng| {
        let signs: Vec<f64> = (0..n).map(|_| rademacher(rng)).collect();
        signed_sum(&|k| T::lit(signs[k])).as_f64()
    })?;
    Ok(est.cast())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RBoundReport<T> {
    /// Best found `(E‖Σ r_k S_k x_k‖² / E‖Σ r_k x_k‖²)^{1/2}`.
    pub r_lower: T,
    /// Uniform γ-bound used for the comparison (norm units).
    pub unif: T,
    /// Whether `unif` is an analytic upper bound; otherwise it is the
    /// certified lower bound, which makes the check stronger.
    pub unif_is_upper: bool,
    pub ratio: T,
    pub holds: bool,
}

/// Lower estimate of the R-bound of `family`, compared with
/// `√(π/2) · ‖𝒯‖_unif-γ`.
///
/// Candidates are single basis vectors for every member and `trials`
/// random selections of 2 to 12 terms with Gaussian vectors `x_k ∈ H`.
pub fn gamma_bound_vs_unif<T: Real>(
    family: &OperatorFamily<T>,
    trunc: usize,
    trials: usize,
    unif_report: &UnifGammaBoundReport<T>,
    cfg: &GaussianDrawConfig,
) -> Result<RBoundReport<T>> {
    if family.is_empty() {
        return domain("empty operator family");
    }
    let space = *family.space();
    let mut best = T::zero();
    for m in family.members() {
        for k in 0..trunc {
            best = best.max(m.column_norm_sq(k));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x7262_6f75_6e64);
    let mut sigma = T::zero();
    let h_space = SpaceSpec::<T>::l2();
    for t in 0..trials {
        let n = 2 + t % (RADEMACHER_ENUMERATION_LIMIT - 1);
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for _ in 0..n {
            let member = &family.members()[rng.random_range(0..family.len())];
            let x: Vec<Complex<T>> = (0..trunc).map(|_| Complex::new(T::lit(standard_normal(&mut rng)), T::zero())).collect();
            let y = crate::gamma_norm::densify(&member.apply(&x), member.truncation());
            xs.push(x);
            ys.push(y);
        }
        let num = rademacher_second_moment(&space, &ys, cfg)?;
        let den = rademacher_second_moment(&h_space, &xs, cfg)?;
        if den.mean > T::zero() {
            let r = num.mean / den.mean;
            if r > best {
                best = r;
                sigma = num.std_error / den.mean;
            }
        }
    }
    let (unif_sq, unif_is_upper) = match unif_report.upper_bound {
        Some(u) => (u * u, true),
        None => (unif_report.lower_bound_sq, false),
    };
    let half_pi = T::FRAC_PI_2();
    let four = T::lit(4.0);
    let holds = best - four * sigma <= half_pi * (unif_sq + four * unif_report.std_error);
    let r_lower = best.sqrt();
    let unif = unif_sq.sqrt();
    let ratio = if unif > T::zero() { r_lower / unif } else { T::infinity() };
    Ok(RBoundReport { r_lower, unif, unif_is_upper, ratio, holds })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationReport<T> {
    pub dominated: bool,
    /// `max_i w_T(i) / w_S(i)` over members and target coordinates.
    pub worst_ratio: T,
    /// Informational: domination gives relative compactness in `γ(H,E)`.
    pub relatively_compact: bool,
}

/// Checks `‖T* x*‖ ≤ ‖S* x*‖` for all members, which for operators whose
/// columns are single entries on distinct coordinates reduces to
/// `|t_i| ≤ |s_i|` per target coordinate.
pub fn dominated_check<T: Real>(family: &OperatorFamily<T>, dominant: &ColumnOperator<T>) -> Result<DominationReport<T>> {
    let structure_err = || Error::UnsupportedStructure("domination check needs diagonal-type operators".into());
    let ws = dominant.monomial_weights().ok_or_else(structure_err)?;
    let slack = T::one() + T::lit(8.0) * T::epsilon();
    let mut worst = T::zero();
    let mut dominated = true;
    for m in family.members() {
        let wt = m.monomial_weights().ok_or_else(structure_err)?;
        for (i, t) in wt {
            let s = ws.get(&i).copied().unwrap_or(T::zero());
            let ratio = if s > T::zero() { t / s } else { T::infinity() };
            worst = worst.max(ratio);
            if t > s * slack {
                dominated = false;
            }
        }
    }
    Ok(DominationReport { dominated, worst_ratio: worst, relatively_compact: dominated })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FatouReport<T> {
    pub member_lower_sq: Vec<T>,
    pub union: UnifGammaBoundReport<T>,
    /// The union bound is guaranteed only when the target contains no copy
    /// of `c₀`.
    pub applies: bool,
    pub holds: bool,
}

/// Lower bounds of a nested chain `F_1 ⊂ … ⊂ F_m` and of its union.
pub fn fatou_union_bound<T: Real>(
    chain: &[OperatorFamily<T>],
    trunc: usize,
    opts: &SearchOptions,
    cfg: &GaussianDrawConfig,
) -> Result<FatouReport<T>> {
    if chain.is_empty() {
        return domain("empty chain");
    }
    for (i, w) in chain.windows(2).enumerate() {
        if !w[0].fingerprints().is_subset(&w[1].fingerprints()) {
            return domain(format!("chain is not nested at position {}", i + 1));
        }
    }
    let mut member_lower_sq = Vec::with_capacity(chain.len());
    let mut worst_sigma = T::zero();
    for f in chain {
        let r = unif_gamma_lower(f, trunc, opts, cfg)?;
        worst_sigma = worst_sigma.max(r.std_error);
        member_lower_sq.push(r.lower_bound_sq);
    }
    let mut all: BTreeMap<u64, ColumnOperator<T>> = BTreeMap::new();
    for f in chain {
        for m in f.members() {
            all.entry(m.fingerprint()).or_insert_with(|| m.clone());
        }
    }
    let union_family = OperatorFamily::explicit(all.into_values().collect())?;
    let union = unif_gamma_lower(&union_family, trunc, opts, cfg)?;
    let applies = chain[0].space().excludes_c0();
    let max_member = member_lower_sq.iter().copied().fold(T::zero(), T::max);
    let sigma = worst_sigma.max(union.std_error);
    let holds = union.lower_bound_sq <= max_member + T::lit(4.0) * sigma;
    Ok(FatouReport { member_lower_sq, union, applies, holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg() -> GaussianDrawConfig {
        GaussianDrawConfig::new(5, 20_000, 20).unwrap()
    }

    fn c(x: f64) -> Complex<f64> {
        Complex::new(x, 0.0)
    }

    #[test]
    fn projection_family_grows_linearly() {
        let f = OperatorFamily::<f64>::projection(100).unwrap();
        let r = unif_gamma_lower(&f, 100, &SearchOptions::default(), &cfg()).unwrap();
        assert!(r.lower_bound_sq >= 100.0);
        assert_eq!(r.standard_lower_sq, 100.0);
        assert_eq!(r.witness.basis, BasisLabel::Standard);
        assert_eq!(r.witness.members[17], 17);
        let small = unif_gamma_lower(&f, 50, &SearchOptions::standard_only(), &cfg()).unwrap();
        assert_eq!(small.lower_bound_sq, 50.0);
    }

    #[test]
    fn singleton_reduces_to_gamma_norm() {
        let t = ColumnOperator::diagonal_real(SpaceSpec::l2(), &[1.0, 1.0]).unwrap();
        let f = OperatorFamily::explicit(vec![t.clone(), t]).unwrap();
        assert_eq!(f.len(), 1);
        let r = unif_gamma_lower(&f, 2, &SearchOptions::default(), &cfg()).unwrap();
        assert_relative_eq!(r.lower_bound_sq, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn rank_one_family_is_basis_choice_independent() {
        let n = 40;
        let h = |k: usize| 2f64.powf(-(k as f64) / 2.0);
        let members: Vec<_> = (0..n)
            .map(|j| {
                let mut op = ColumnOperator::new(SpaceSpec::l2(), n).unwrap();
                for k in 0..n {
                    op.set_column(k, vec![(j, c(h(k)))]).unwrap();
                }
                op
            })
            .collect();
        let f = OperatorFamily::explicit(members).unwrap();
        let r = unif_gamma_lower(&f, n, &SearchOptions::standard_only(), &cfg()).unwrap();
        let expected: f64 = (0..n).map(|k| 2f64.powi(-(k as i32))).sum();
        assert_relative_eq!(r.lower_bound_sq, expected, epsilon = 1e-14);
        assert!(r.lower_bound_sq <= 2.0);
    }

    #[test]
    fn empty_family_is_rejected() {
        assert!(matches!(OperatorFamily::<f64>::explicit(vec![]), Err(Error::Domain(_))));
    }

    #[test]
    fn shift_blocks_match_closed_form() {
        let r = shift_orbit_divergence::<f64>(12).unwrap();
        let b2 = r.blocks[1];
        assert_eq!(b2.n, 2);
        assert_relative_eq!(b2.norm, 0.5, epsilon = 1e-15);
        assert_relative_eq!(r.blocks[9].norm, 0.32, max_relative = 1e-12);
        assert!(!r.unbounded_evidence);
        let r = shift_orbit_divergence::<f64>(20).unwrap();
        assert_relative_eq!(r.blocks[19].norm, 2.56, max_relative = 1e-12);
        assert!(r.unbounded_evidence);
        assert!(shift_orbit_divergence::<f64>(25).is_err());
        assert_eq!(shift_block_start(1), 1);
        assert_eq!(shift_block_start(4), 7);
        let w: Vec<_> = shift_witness_powers(1).collect();
        assert_eq!(w, vec![(3, 1), (4, 0)]);
    }

    #[test]
    fn convex_hull_cases() {
        let t = ColumnOperator::diagonal_real(SpaceSpec::l2().with_scalar(ScalarField::Real), &[1.0, -2.0, 0.5]).unwrap();
        let single = OperatorFamily::explicit(vec![t.clone()]).unwrap();
        let r = permanence_convex(&single, &[vec![1.0]], 3, &SearchOptions::standard_only(), &cfg()).unwrap();
        assert_relative_eq!(r.hull_lower, r.family_lower, epsilon = 1e-14);
        assert!(r.holds);
        let pm = OperatorFamily::explicit(vec![t.clone(), t.scaled(c(-1.0))]).unwrap();
        let r = permanence_convex(&pm, &[vec![0.5, 0.5]], 3, &SearchOptions::standard_only(), &cfg()).unwrap();
        assert_eq!(r.hull_lower, 0.0);
        assert!(r.holds);
        assert!(permanence_convex(&pm, &[vec![0.7, 0.7]], 3, &SearchOptions::standard_only(), &cfg()).is_err());
        assert!(permanence_convex(&pm, &[vec![1.5, -0.5]], 3, &SearchOptions::standard_only(), &cfg()).is_err());
    }

    #[test]
    fn rademacher_enumeration_matches_orthogonality() {
        let s = SpaceSpec::<f64>::l2();
        let vs = vec![vec![c(1.0), c(2.0)], vec![c(-1.0), c(0.5)], vec![c(0.0), c(3.0)]];
        let e = rademacher_second_moment(&s, &vs, &cfg()).unwrap();
        assert_relative_eq!(e.mean, 5.0 + 1.25 + 9.0, epsilon = 1e-14);
        // in ℓ¹ the moment is not additive; brute force two terms by hand
        let l1 = SpaceSpec::<f64>::lp(1.0).unwrap();
        let two = vec![vec![c(1.0), c(1.0)], vec![c(1.0), c(-1.0)]];
        let e = rademacher_second_moment(&l1, &two, &cfg()).unwrap();
        assert_relative_eq!(e.mean, 4.0, epsilon = 1e-14);
    }

    #[test]
    fn identity_has_unit_r_bound() {
        let n = 6;
        let id = ColumnOperator::diagonal_real(SpaceSpec::l2(), &vec![1.0; n]).unwrap();
        let f = OperatorFamily::explicit(vec![id]).unwrap();
        let u = unif_gamma_lower(&f, n, &SearchOptions::standard_only(), &cfg()).unwrap();
        let r = gamma_bound_vs_unif(&f, n, 12, &u, &cfg()).unwrap();
        assert_relative_eq!(r.r_lower, 1.0, epsilon = 1e-12);
        assert!(r.holds);
    }

    #[test]
    fn domination_cases() {
        let t = ColumnOperator::diagonal_real(SpaceSpec::l2(), &[1.0, 0.5, 0.25, 0.125]).unwrap();
        let orbit = OperatorFamily::shift_orbit(&t, 3).unwrap();
        assert!(dominated_check(&orbit, &t).unwrap().dominated);
        let doubled = OperatorFamily::explicit(vec![t.scaled(c(2.0))]).unwrap();
        let r = dominated_check(&doubled, &t).unwrap();
        assert!(!r.dominated);
        assert_relative_eq!(r.worst_ratio, 4.0);
        let dense = ColumnOperator::new(SpaceSpec::l2(), 2).unwrap().with_column(0, vec![(0, c(1.0)), (1, c(1.0))]).unwrap();
        let f = OperatorFamily::explicit(vec![dense]).unwrap();
        assert!(matches!(dominated_check(&f, &t), Err(Error::UnsupportedStructure(_))));
    }

    #[test]
    fn fatou_chain_of_projection_prefixes() {
        let p = OperatorFamily::<f64>::projection(30).unwrap();
        let prefix = |n: usize| OperatorFamily::explicit(p.members()[..n].to_vec()).unwrap();
        let chain = vec![prefix(10), prefix(20), prefix(30)];
        let r = fatou_union_bound(&chain, 30, &SearchOptions::standard_only(), &cfg()).unwrap();
        assert_eq!(r.member_lower_sq, vec![10.0, 20.0, 30.0]);
        assert_eq!(r.union.lower_bound_sq, 30.0);
        assert!(r.applies && r.holds);
        let broken = vec![prefix(20), OperatorFamily::explicit(p.members()[25..].to_vec()).unwrap()];
        assert!(matches!(fatou_union_bound(&broken, 30, &SearchOptions::standard_only(), &cfg()), Err(Error::Domain(_))));
    }
}
