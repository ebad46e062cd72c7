//! Operators given by their columns and the Gaussian second moments that
//! define the γ-radonifying norm.
//!
//! An operator `T: H → E` is stored through the images `T h_k` of the
//! standard basis of `H` (0-based `k`). Columns are sparse; unset
//! coordinates are exact zeros.

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};
use std::ops::Range;

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::sampling::{standard_normal, GaussianDrawConfig};
use crate::scalar::Real;
use crate::spaces::{FiniteVector, SpaceSpec};

pub use crate::sampling::GaussianSumEstimate;

/// Orthonormality tolerance for basis input.
pub const BASIS_TOLERANCE: f64 = 1e-10;

pub type SparseEntries<T> = Vec<(usize, Complex<T>)>;

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnOperator<T> {
    space: SpaceSpec<T>,
    trunc: usize,
    columns: BTreeMap<usize, SparseEntries<T>>,
}

impl<T: Real> ColumnOperator<T> {
    /// The zero operator on the first `trunc` coordinates.
    pub fn new(space: SpaceSpec<T>, trunc: usize) -> Result<Self> {
        if trunc == 0 {
            return invalid("declared truncation must be positive");
        }
        Ok(Self { space, trunc, columns: BTreeMap::new() })
    }

    /// `T h_k = d_k e_k`.
    pub fn diagonal(space: SpaceSpec<T>, diag: &[Complex<T>]) -> Result<Self> {
        let mut op = Self::new(space, diag.len().max(1))?;
        for (k, &d) in diag.iter().enumerate() {
            op.set_column(k, vec![(k, d)])?;
        }
        Ok(op)
    }

    pub fn diagonal_real(space: SpaceSpec<T>, diag: &[T]) -> Result<Self> {
        let d: Vec<_> = diag.iter().map(|&x| Complex::new(x, T::zero())).collect();
        Self::diagonal(space, &d)
    }

    pub fn with_column(mut self, k: usize, entries: SparseEntries<T>) -> Result<Self> {
        self.set_column(k, entries)?;
        Ok(self)
    }

    /// Replaces column `k`. Duplicate indices are summed and zeros dropped.
    pub fn set_column(&mut self, k: usize, entries: SparseEntries<T>) -> Result<()> {
        if k >= self.trunc {
            return invalid(format!("column {k} outside truncation {}", self.trunc));
        }
        let mut merged: BTreeMap<usize, Complex<T>> = BTreeMap::new();
        for (i, v) in entries {
            if i >= self.trunc {
                return invalid(format!("column {k} has coordinate {i} outside truncation {}", self.trunc));
            }
            if !v.re.is_finite() || !v.im.is_finite() {
                return invalid(format!("column {k} has a non-finite entry"));
            }
            let e = merged.entry(i).or_default();
            *e = *e + v;
        }
        let col: SparseEntries<T> = merged.into_iter().filter(|(_, v)| v.norm_sqr() != T::zero()).collect();
        if col.is_empty() {
            self.columns.remove(&k);
        } else {
            self.columns.insert(k, col);
        }
        Ok(())
    }

    pub fn space(&self) -> &SpaceSpec<T> {
        &self.space
    }

    pub fn truncation(&self) -> usize {
        self.trunc
    }

    pub fn column(&self, k: usize) -> &[(usize, Complex<T>)] {
        self.columns.get(&k).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn columns(&self) -> impl Iterator<Item = (usize, &[(usize, Complex<T>)])> {
        self.columns.iter().map(|(&k, c)| (k, c.as_slice()))
    }

    pub fn is_zero(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn column_vector(&self, k: usize) -> FiniteVector<T> {
        FiniteVector::new(densify(self.column(k), self.trunc)).expect("positive truncation")
    }

    /// `‖T h_k‖²` in the target norm.
    pub fn column_norm_sq(&self, k: usize) -> T {
        let col = self.column(k);
        if col.is_empty() {
            return T::zero();
        }
        let vals: Vec<Complex<T>> = col.iter().map(|&(_, v)| v).collect();
        self.space.norm_sq_unchecked(&vals)
    }

    /// `T h` for a vector `h` given in standard coordinates of `H`.
    pub fn apply(&self, h: &[Complex<T>]) -> SparseEntries<T> {
        let mut acc = vec![Complex::default(); self.trunc];
        for (j, &hj) in h.iter().enumerate() {
            if hj.norm_sqr() == T::zero() {
                continue;
            }
            for &(i, v) in self.column(j) {
                acc[i] = acc[i] + v * hj;
            }
        }
        sparsify(acc)
    }

    /// `T ∘ Sᵐ` with `S` the right shift `S h_k = h_{k+1}`.
    pub fn shifted(&self, m: usize) -> Self {
        let columns = self
            .columns
            .range(m..)
            .map(|(&k, c)| (k - m, c.clone()))
            .collect();
        Self { space: self.space, trunc: self.trunc, columns }
    }

    pub fn scaled(&self, a: Complex<T>) -> Self {
        let columns = self
            .columns
            .iter()
            .map(|(&k, c)| (k, c.iter().map(|&(i, v)| (i, v * a)).collect()))
            .filter(|(_, c): &(usize, SparseEntries<T>)| c.iter().any(|(_, v)| v.norm_sqr() != T::zero()))
            .collect();
        Self { space: self.space, trunc: self.trunc, columns }
    }

    /// `Σ w_i T_i`; all operators must share space and truncation.
    pub fn linear_combination(ops: &[Self], weights: &[Complex<T>]) -> Result<Self> {
        let first = ops.first().ok_or_else(|| Error::InvalidInput("empty combination".into()))?;
        if ops.len() != weights.len() {
            return invalid("one weight per operator required");
        }
        let mut out = Self::new(first.space, first.trunc)?;
        let mut cols: BTreeMap<usize, SparseEntries<T>> = BTreeMap::new();
        for (op, &w) in ops.iter().zip(weights) {
            if op.trunc != first.trunc || op.space != first.space {
                return invalid("operators in a combination must share space and truncation");
            }
            for (k, c) in op.columns() {
                cols.entry(k).or_default().extend(c.iter().map(|&(i, v)| (i, v * w)));
            }
        }
        for (k, entries) in cols {
            out.set_column(k, entries)?;
        }
        Ok(out)
    }

    /// `S ∘ T` for the coordinatewise multiplier `(Sx)_i = s_i x_i`.
    pub fn left_multiply_diagonal(&self, s: &[Complex<T>]) -> Self {
        let zero = Complex::default();
        let columns = self
            .columns
            .iter()
            .map(|(&k, c)| (k, c.iter().map(|&(i, v)| (i, v * s.get(i).copied().unwrap_or(zero))).collect()))
            .collect::<BTreeMap<usize, SparseEntries<T>>>();
        let mut out = Self { space: self.space, trunc: self.trunc, columns: BTreeMap::new() };
        for (k, c) in columns {
            out.set_column(k, c).expect("indices already validated");
        }
        out
    }

    /// `T ∘ R` where `r[k]` holds the coordinates of `R h_k`.
    pub fn right_multiply(&self, r: &[Vec<Complex<T>>]) -> Self {
        let mut out = Self { space: self.space, trunc: self.trunc, columns: BTreeMap::new() };
        for (k, rk) in r.iter().enumerate().take(self.trunc) {
            out.set_column(k, self.apply(rk)).expect("indices already validated");
        }
        out
    }

    /// Hash of the exact column content, used to deduplicate families.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.trunc.hash(&mut h);
        for (k, c) in &self.columns {
            k.hash(&mut h);
            for &(i, v) in c {
                i.hash(&mut h);
                v.re.as_f64().to_bits().hash(&mut h);
                v.im.as_f64().to_bits().hash(&mut h);
            }
        }
        h.finish()
    }

    /// For operators whose columns each have at most one nonzero entry, and
    /// distinct columns hit distinct coordinates, returns `|t|²` keyed by
    /// target coordinate. Then `‖T* x*‖² = Σ_i w_i |x*_i|²`.
    pub fn monomial_weights(&self) -> Option<BTreeMap<usize, T>> {
        let mut w = BTreeMap::new();
        for c in self.columns.values() {
            if c.len() != 1 {
                return None;
            }
            let (i, v) = c[0];
            if w.insert(i, v.norm_sqr()).is_some() {
                return None;
            }
        }
        Some(w)
    }
}

pub(crate) fn densify<T: Real>(entries: &[(usize, Complex<T>)], dim: usize) -> Vec<Complex<T>> {
    let mut v = vec![Complex::default(); dim.max(1)];
    for &(i, x) in entries {
        v[i] = x;
    }
    v
}

pub(crate) fn sparsify<T: Real>(dense: Vec<Complex<T>>) -> SparseEntries<T> {
    dense
        .into_iter()
        .enumerate()
        .filter(|(_, v)| v.norm_sqr() != T::zero())
        .collect()
}

/// An orthonormal basis of `H` whose first `d` vectors may be rotated;
/// from index `d` on it agrees with the standard basis.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalBasis<T> {
    head: Vec<Vec<Complex<T>>>,
    label: BasisLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum BasisLabel {
    Standard,
    RandomRotation { seed: u64, dim: usize },
    Custom,
}

impl<T: Real> OrthonormalBasis<T> {
    pub fn standard() -> Self {
        Self { head: Vec::new(), label: BasisLabel::Standard }
    }

    /// Validates `vectors` (each of length `vectors.len()`) to Gram defect
    /// [`BASIS_TOLERANCE`], relaxed to a few ulps of `T` for single precision.
    pub fn from_vectors(vectors: Vec<Vec<Complex<T>>>) -> Result<Self> {
        let d = vectors.len();
        if vectors.iter().any(|v| v.len() != d) {
            return invalid("basis vectors must all have length equal to the number of vectors");
        }
        let tol = BASIS_TOLERANCE.max(64.0 * T::epsilon().as_f64() * d.max(1) as f64);
        let mut worst = (0.0, 0, 0);
        for i in 0..d {
            for j in i..d {
                let ip: Complex<T> = vectors[i].iter().zip(&vectors[j]).map(|(a, b)| a * b.conj()).sum();
                let target = if i == j { Complex::new(T::one(), T::zero()) } else { Complex::default() };
                let defect = (ip - target).norm().as_f64();
                if defect > worst.0 {
                    worst = (defect, i, j);
                }
            }
        }
        if worst.0 > tol {
            return Err(Error::InvalidBasis { defect: worst.0, row: worst.1, col: worst.2 });
        }
        Ok(Self { head: vectors, label: BasisLabel::Custom })
    }

    /// Haar-distributed real rotation of the first `dim` coordinates.
    pub fn random_rotation(dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = DMatrix::<f64>::from_fn(dim, dim, |_, _| standard_normal(&mut rng));
        let qr = g.qr();
        let (q, r) = (qr.q(), qr.r());
        let head = (0..dim)
            .map(|k| {
                let sign = if r[(k, k)] < 0.0 { -1.0 } else { 1.0 };
                (0..dim).map(|j| Complex::new(T::lit(sign * q[(j, k)]), T::zero())).collect()
            })
            .collect();
        Self { head, label: BasisLabel::RandomRotation { seed, dim } }
    }

    pub fn label(&self) -> BasisLabel {
        self.label
    }

    pub fn rotated_dim(&self) -> usize {
        self.head.len()
    }

    /// `T h_k` for this basis.
    pub fn image(&self, op: &ColumnOperator<T>, k: usize) -> SparseEntries<T> {
        match self.head.get(k) {
            Some(h) => op.apply(h),
            None => op.column(k).to_vec(),
        }
    }
}

/// `E‖Σ γ_k v_k‖²` for sparse vectors in `space` truncated at `trunc`:
/// closed form on `ℓ²`, batch Monte Carlo otherwise.
pub fn gaussian_sum_sq<T: Real>(
    space: &SpaceSpec<T>,
    trunc: usize,
    vectors: &[SparseEntries<T>],
    cfg: &GaussianDrawConfig,
) -> Result<GaussianSumEstimate<T>> {
    if vectors.iter().all(Vec::is_empty) {
        return Ok(GaussianSumEstimate::exact(T::zero(), trunc));
    }
    if space.is_hilbert() {
        let mut total = T::zero();
        for v in vectors {
            total = total + v.iter().map(|(_, x)| x.norm_sqr()).sum();
        }
        if !total.is_finite() {
            return Err(Error::NumericRange("Gaussian second moment overflowed".into()));
        }
        return Ok(GaussianSumEstimate::exact(total, trunc));
    }
    gaussian_sum_sq_monte_carlo(space, trunc, vectors, cfg)
}

/// Monte Carlo estimate of `E‖Σ γ_k v_k‖²`, regardless of the space.
pub fn gaussian_sum_sq_monte_carlo<T: Real>(
    space: &SpaceSpec<T>,
    trunc: usize,
    vectors: &[SparseEntries<T>],
    cfg: &GaussianDrawConfig,
) -> Result<GaussianSumEstimate<T>> {
    let dim = vectors
        .iter()
        .flat_map(|v| v.iter().map(|&(i, _)| i + 1))
        .max()
        .unwrap_or(1)
        .max(1);
    let est = cfg.estimate(trunc, |rng| {
        let mut acc = vec![Complex::<T>::default(); dim];
        for v in vectors {
            let g = T::lit(standard_normal(rng));
            for &(i, x) in v {
                acc[i] = acc[i] + x * g;
            }
        }
        space.norm_sq_unchecked(&acc).as_f64()
    })?;
    if !est.mean.is_finite() || !est.std_error.is_finite() {
        return Err(Error::NumericRange("Gaussian sum norm overflowed".into()));
    }
    Ok(est.cast())
}

/// `‖T‖²_γ = E‖Σ γ_k T h_k‖²` over the declared truncation.
pub fn gamma_norm_sq<T: Real>(op: &ColumnOperator<T>, cfg: &GaussianDrawConfig) -> Result<GaussianSumEstimate<T>> {
    let cols: Vec<SparseEntries<T>> = op.columns().map(|(_, c)| c.to_vec()).collect();
    gaussian_sum_sq(op.space(), op.truncation(), &cols, cfg)
}

/// Monte Carlo path of [`gamma_norm_sq`] without the `ℓ²` shortcut.
pub fn gamma_norm_sq_monte_carlo<T: Real>(
    op: &ColumnOperator<T>,
    cfg: &GaussianDrawConfig,
) -> Result<GaussianSumEstimate<T>> {
    let cols: Vec<SparseEntries<T>> = op.columns().map(|(_, c)| c.to_vec()).collect();
    if cols.is_empty() {
        return Ok(GaussianSumEstimate::exact(T::zero(), op.truncation()));
    }
    gaussian_sum_sq_monte_carlo(op.space(), op.truncation(), &cols, cfg)
}

fn check_sequence<T: Real>(seq: &[ColumnOperator<T>], end: usize) -> Result<(SpaceSpec<T>, usize)> {
    let first = seq.first().ok_or_else(|| Error::InvalidInput("empty operator sequence".into()))?;
    if seq.len() < end {
        return invalid(format!("sequence has {} operators, range needs {end}", seq.len()));
    }
    let trunc = seq.iter().map(ColumnOperator::truncation).max().unwrap_or(1);
    if seq.iter().any(|t| t.space() != first.space()) {
        return invalid("operators in a sequence must share the target space");
    }
    Ok((*first.space(), trunc))
}

/// `E‖Σ_{k ∈ range} γ_k T_k h_k‖²` (0-based, half-open range).
pub fn mixed_gaussian_sum_sq<T: Real>(
    seq: &[ColumnOperator<T>],
    basis: &OrthonormalBasis<T>,
    range: Range<usize>,
    cfg: &GaussianDrawConfig,
) -> Result<GaussianSumEstimate<T>> {
    let (space, trunc) = check_sequence(seq, range.end)?;
    let images: Vec<_> = range.map(|k| basis.image(&seq[k], k)).collect();
    gaussian_sum_sq(&space, trunc, &images, cfg)
}

/// Tail second moments `E‖Σ_{k=c}^{end-1} γ_k T_k h_k‖²` at each cut `c`.
pub fn cauchy_tail_profile<T: Real>(
    seq: &[ColumnOperator<T>],
    basis: &OrthonormalBasis<T>,
    cuts: &[usize],
    end: usize,
    cfg: &GaussianDrawConfig,
) -> Result<Vec<GaussianSumEstimate<T>>> {
    if cuts.windows(2).any(|w| w[0] >= w[1]) || cuts.last().is_some_and(|&c| c >= end) {
        return invalid("cut points must increase strictly and stay below the end of the range");
    }
    let (space, trunc) = check_sequence(seq, end)?;
    let images: Vec<_> = (0..end).map(|k| basis.image(&seq[k], k)).collect();
    cuts.iter()
        .map(|&c| gaussian_sum_sq(&space, trunc, &images[c..], cfg))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(x: f64) -> Complex<f64> {
        Complex::new(x, 0.0)
    }

    fn cfg() -> GaussianDrawConfig {
        GaussianDrawConfig::new(11, 20_000, 20).unwrap()
    }

    #[test]
    fn exact_path_and_zero_operator() {
        let t = ColumnOperator::diagonal_real(SpaceSpec::l2(), &[1.0, 2.0]).unwrap();
        let e = gamma_norm_sq(&t, &cfg()).unwrap();
        assert_eq!((e.mean, e.std_error, e.n_samples), (5.0, 0.0, 0));
        let z = ColumnOperator::<f64>::new(SpaceSpec::c0(), 10).unwrap();
        assert_eq!(gamma_norm_sq(&z, &cfg()).unwrap().mean, 0.0);
    }

    #[test]
    fn column_validation() {
        let mut t = ColumnOperator::<f64>::new(SpaceSpec::l2(), 3).unwrap();
        assert!(t.set_column(3, vec![]).is_err());
        assert!(t.set_column(0, vec![(5, c(1.0))]).is_err());
        assert!(t.set_column(0, vec![(1, c(f64::INFINITY))]).is_err());
        t.set_column(0, vec![(1, c(1.0)), (1, c(2.0)), (2, c(0.0))]).unwrap();
        assert_eq!(t.column(0), &[(1, c(3.0))]);
        assert!(ColumnOperator::<f64>::new(SpaceSpec::l2(), 0).is_err());
    }

    #[test]
    fn shift_and_apply() {
        let t = ColumnOperator::diagonal_real(SpaceSpec::l2(), &[1.0, 2.0, 3.0]).unwrap();
        let ts = t.shifted(1);
        assert_eq!(ts.column(0), &[(1, c(2.0))]);
        assert_eq!(ts.column(1), &[(2, c(3.0))]);
        assert!(ts.column(2).is_empty());
        let img = t.apply(&[c(1.0), c(1.0), c(0.0)]);
        assert_eq!(img, vec![(0, c(1.0)), (1, c(2.0))]);
    }

    #[test]
    fn basis_checks() {
        let bad = vec![vec![c(1.0), c(0.0)], vec![c(1e-6), c(1.0)]];
        match OrthonormalBasis::from_vectors(bad) {
            Err(Error::InvalidBasis { defect, row, col }) => {
                assert!((defect - 1e-6).abs() < 1e-12);
                assert_eq!((row, col), (0, 1));
            }
            other => panic!("expected basis error, got {other:?}"),
        }
        let rot = OrthonormalBasis::<f64>::random_rotation(6, 3);
        let check = OrthonormalBasis::from_vectors(rot.head.clone());
        assert!(check.is_ok());
    }

    #[test]
    fn rank_one_family_sum() {
        // T_k = h ⊗ e_k with h = (1, 1/2, 1/4, ...): T_k e_k = [h, e_k] e_0
        let n = 20;
        let seq: Vec<_> = (0..n)
            .map(|k| {
                ColumnOperator::new(SpaceSpec::l2(), n)
                    .unwrap()
                    .with_column(k, vec![(0, c(0.5f64.powi(k as i32)))])
                    .unwrap()
            })
            .collect();
        let e = mixed_gaussian_sum_sq(&seq, &OrthonormalBasis::standard(), 0..n, &cfg()).unwrap();
        let geometric: f64 = (0..n).map(|k| 0.25f64.powi(k as i32)).sum();
        assert_relative_eq!(e.mean, geometric, epsilon = 1e-15);
        let zero = vec![ColumnOperator::<f64>::new(SpaceSpec::l2(), n).unwrap(); n];
        assert_eq!(mixed_gaussian_sum_sq(&zero, &OrthonormalBasis::standard(), 0..n, &cfg()).unwrap().mean, 0.0);
    }

    #[test]
    fn projection_tails_are_exact() {
        let n = 100;
        let seq: Vec<_> = (0..n)
            .map(|k| ColumnOperator::new(SpaceSpec::l2(), n).unwrap().with_column(k, vec![(k, c(1.0))]).unwrap())
            .collect();
        let cuts: Vec<usize> = (0..n).step_by(7).collect();
        let prof = cauchy_tail_profile(&seq, &OrthonormalBasis::standard(), &cuts, n, &cfg()).unwrap();
        for (&cut, e) in cuts.iter().zip(&prof) {
            // 1-based cut n' = cut + 1 gives N - n' + 1 = N - cut
            assert_eq!(e.mean, (n - cut) as f64);
        }
        assert!(cauchy_tail_profile(&seq, &OrthonormalBasis::standard(), &[5, 3], n, &cfg()).is_err());
    }

    #[test]
    fn monte_carlo_matches_exact_on_l2() {
        let t = ColumnOperator::new(SpaceSpec::l2(), 4)
            .unwrap()
            .with_column(0, vec![(0, c(1.0)), (1, Complex::new(0.0, 1.0))])
            .unwrap()
            .with_column(2, vec![(1, c(-0.5)), (3, c(2.0))])
            .unwrap();
        let exact = gamma_norm_sq(&t, &cfg()).unwrap().mean;
        assert_relative_eq!(exact, 2.0 + 4.25);
        let mc = gamma_norm_sq_monte_carlo(&t, &cfg()).unwrap();
        assert!(mc.agrees_with(exact, 4.0), "{mc:?} vs {exact}");
    }

    #[test]
    fn monomial_structure() {
        let t = ColumnOperator::diagonal_real(SpaceSpec::<f64>::l2(), &[1.0, 2.0]).unwrap();
        assert_eq!(t.monomial_weights().unwrap()[&1], 4.0);
        let clash = ColumnOperator::new(SpaceSpec::<f64>::l2(), 2)
            .unwrap()
            .with_column(0, vec![(0, c(1.0))])
            .unwrap()
            .with_column(1, vec![(0, c(1.0))])
            .unwrap();
        assert!(clash.monomial_weights().is_none());
    }
}
