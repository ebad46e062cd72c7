//! Hilbert sequences of damped exponentials in `L²(ℝ₊)`.
//!
//! Every element has the form `f(t) = a e^{−νt}` with `Re ν > 0`, so inner
//! products are closed forms: `[f, g] = a ā' / (ν + ν̄')`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Error, Result};
use crate::gamma_norm::GaussianSumEstimate;
use crate::quadrature::GaussLegendre;
use crate::scalar::{KahanSum, Real};

pub const MAX_WINDOW: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum HilbertSequenceKind<T> {
    /// `e_{λ_n}(t) = e^{−λ_n t}`, indexed by position in the list.
    PureExp { lambdas: Vec<Complex<T>> },
    /// `f_n(t) = e^{−bt} e^{2πi(n+ρ)t}`.
    Modulated { b: T, rho: T },
    /// `f_n(t) = μ_n^α e^{−μ_n t}` with `μ_n = r qⁿ e^{iθ}`; `q = 2` is the
    /// dyadic ray.
    PowerScaled { alpha: T, r: T, theta: T, ratio: T },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HilbertSequenceSpec<T> {
    kind: HilbertSequenceKind<T>,
    n_min: i64,
    n_max: i64,
}

/// One element `a e^{−νt}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpElement<T> {
    pub amp: Complex<T>,
    pub rate: Complex<T>,
}

impl<T: Real> ExpElement<T> {
    pub fn inner(&self, other: &Self) -> Complex<T> {
        self.amp * other.amp.conj() / (self.rate + other.rate.conj())
    }

    pub fn eval(&self, t: T) -> Complex<T> {
        self.amp * (-self.rate * t).exp()
    }
}

impl<T: Real> HilbertSequenceSpec<T> {
    pub fn pure_exp(lambdas: Vec<Complex<T>>) -> Result<Self> {
        if lambdas.is_empty() {
            return invalid("empty exponent list");
        }
        if let Some(l) = lambdas.iter().find(|l| !(l.re > T::zero()) || !l.im.is_finite()) {
            return domain(format!("exponent {l} is not in the open right half-plane"));
        }
        let n_max = lambdas.len() as i64 - 1;
        Self::checked(HilbertSequenceKind::PureExp { lambdas }, 0, n_max)
    }

    pub fn modulated(b: T, rho: T, n_min: i64, n_max: i64) -> Result<Self> {
        if !(b > T::zero()) || !b.is_finite() {
            return domain("damping b must be positive");
        }
        if !(rho >= T::zero() && rho < T::one()) {
            return domain("shift ρ must lie in [0, 1)");
        }
        Self::checked(HilbertSequenceKind::Modulated { b, rho }, n_min, n_max)
    }

    pub fn power_scaled(alpha: T, r: T, theta: T, n_min: i64, n_max: i64) -> Result<Self> {
        Self::power_scaled_with_ratio(alpha, r, theta, T::lit(2.0), n_min, n_max)
    }

    pub fn power_scaled_with_ratio(alpha: T, r: T, theta: T, ratio: T, n_min: i64, n_max: i64) -> Result<Self> {
        if !(alpha > T::zero() && alpha <= T::lit(0.5)) {
            return domain("α must lie in (0, 1/2]");
        }
        if !(r > T::zero()) || !r.is_finite() {
            return domain("radius r must be positive");
        }
        if !(theta.abs() < T::FRAC_PI_2()) {
            return domain("|θ| must be below π/2");
        }
        if !(ratio > T::one()) || !ratio.is_finite() {
            return domain("grid ratio must exceed 1");
        }
        Self::checked(HilbertSequenceKind::PowerScaled { alpha, r, theta, ratio }, n_min, n_max)
    }

    fn checked(kind: HilbertSequenceKind<T>, n_min: i64, n_max: i64) -> Result<Self> {
        if n_max < n_min {
            return invalid("index window is empty");
        }
        Ok(Self { kind, n_min, n_max })
    }

    pub fn kind(&self) -> &HilbertSequenceKind<T> {
        &self.kind
    }

    pub fn window(&self) -> (i64, i64) {
        (self.n_min, self.n_max)
    }

    pub fn len(&self) -> usize {
        (self.n_max - self.n_min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn indices(&self) -> impl Iterator<Item = i64> {
        self.n_min..=self.n_max
    }

    /// Element `f_n` for `n` in the window.
    pub fn element(&self, n: i64) -> ExpElement<T> {
        match &self.kind {
            HilbertSequenceKind::PureExp { lambdas } => {
                ExpElement { amp: Complex::new(T::one(), T::zero()), rate: lambdas[n as usize] }
            }
            HilbertSequenceKind::Modulated { b, rho } => {
                let freq = T::TAU() * (T::from_i64(n).expect("index") + *rho);
                ExpElement { amp: Complex::new(T::one(), T::zero()), rate: Complex::new(*b, -freq) }
            }
            HilbertSequenceKind::PowerScaled { alpha, r, theta, ratio } => {
                let mu = Complex::from_polar(*r * ratio.powi(n as i32), *theta);
                ExpElement { amp: mu.powf(*alpha), rate: mu }
            }
        }
    }

    /// `[f_n, f_m]` by its closed form, evaluated without overflow.
    pub fn entry(&self, n: i64, m: i64) -> Complex<T> {
        match &self.kind {
            HilbertSequenceKind::PureExp { .. } => self.element(n).inner(&self.element(m)),
            HilbertSequenceKind::Modulated { b, .. } => {
                let d = T::TAU() * T::from_i64(n - m).expect("index");
                Complex::new(T::one(), T::zero()) / Complex::new(*b + *b, -d)
            }
            HilbertSequenceKind::PowerScaled { alpha, r, theta, ratio } => {
                // r^{2α−1} q^{α(n+m)} / (qⁿe^{iθ} + qᵐe^{−iθ}), scaled by q^{max}
                let top = n.max(m);
                let nf = T::from_i64(n).expect("index");
                let mf = T::from_i64(m).expect("index");
                let tf = T::from_i64(top).expect("index");
                let num = r.powf(*alpha + *alpha - T::one()) * ratio.powf(*alpha * (nf + mf) - tf);
                let den = Complex::from_polar(ratio.powf(nf - tf), *theta) + Complex::from_polar(ratio.powf(mf - tf), -*theta);
                Complex::new(num, T::zero()) / den
            }
        }
    }

    /// Hilbert constant of the infinite sequence when a closed form is
    /// known: `1/√(1 − e^{−2b})` for modulated sequences (from the Toeplitz
    /// symbol, independent of ρ) and the φ-majorant bound for
    /// `α = 1/2` power-scaled sequences.
    pub fn analytic_constant(&self) -> Option<T> {
        match &self.kind {
            HilbertSequenceKind::Modulated { b, .. } => Some(T::one() / (T::one() - (-(*b + *b)).exp()).sqrt()),
            HilbertSequenceKind::PowerScaled { alpha, theta, ratio, .. } if *alpha == T::lit(0.5) => {
                Some(ray_constant(*theta, *ratio))
            }
            _ => None,
        }
    }
}

/// φ-summability bound for the `α = 1/2` ray `μ_n = r qⁿ e^{iθ}`:
/// `|[f_n, f_m]| ≤ q^{−|n−m|/2}/cos θ`, so
/// `C ≤ √((1 + q^{−1/2})/((1 − q^{−1/2}) cos θ))`; `1 + √2` for `q = 2`,
/// `θ = 0`.
pub fn ray_constant<T: Real>(theta: T, ratio: T) -> T {
    let s = ratio.powf(T::lit(-0.5));
    ((T::one() + s) / ((T::one() - s) * theta.cos())).sqrt()
}

/// The majorant `φ(j) = q^{−j/2}/cos θ` for `j ≤ terms`, with the geometric
/// tail for `j > terms`.
pub fn ray_majorant<T: Real>(theta: T, ratio: T, terms: usize) -> (Vec<T>, PhiTail<T>) {
    let s = ratio.powf(T::lit(-0.5));
    let c = theta.cos();
    let phi = (0..=terms).map(|j| s.powi(j as i32) / c).collect();
    let tail = s.powi(terms as i32 + 1) / ((T::one() - s) * c);
    (phi, PhiTail::Finite(tail))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PhiTail<T> {
    /// Upper bound for `Σ_{j>J} φ(j)`.
    Finite(T),
    Divergent,
}

/// `√(φ(0) + 2 Σ_{j≥1} φ(j))`; `None` flags a divergent tail.
pub fn phi_bound<T: Real>(phi: &[T], tail: PhiTail<T>) -> Result<Option<T>> {
    if phi.is_empty() {
        return invalid("φ needs at least φ(0)");
    }
    if phi.iter().any(|x| !(*x >= T::zero()) || !x.is_finite()) {
        return invalid("φ values must be finite and nonnegative");
    }
    let tail = match tail {
        PhiTail::Finite(t) if t >= T::zero() && t.is_finite() => t,
        PhiTail::Finite(_) => return invalid("tail bound must be finite and nonnegative"),
        PhiTail::Divergent => return Ok(None),
    };
    let mut acc = KahanSum::new();
    for &x in &phi[1..] {
        acc.add(x);
    }
    acc.add(tail);
    Ok(Some((phi[0] + T::lit(2.0) * acc.value()).sqrt()))
}

/// Whether `φ(|n−m|)` dominates every off-diagonal `|[f_n, f_m]|` and `φ(0)`
/// the diagonal, for the Gram matrix `g` of a window.
pub fn majorizes<T: Real>(g: &GramSummary<T>, phi: &[T], tail_value: impl Fn(usize) -> T) -> bool {
    let n = g.dim;
    (0..n).all(|i| {
        (0..n).all(|j| {
            let d = i.abs_diff(j);
            let p = phi.get(d).copied().unwrap_or_else(|| tail_value(d));
            g.entries[(i, j)].norm() <= p * (T::one() + T::lit(1e-12))
        })
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GramSummary<T> {
    pub dim: usize,
    pub entries: DMatrix<Complex<T>>,
    /// Square root of the largest eigenvalue: the Hilbert constant of the
    /// finite window, a lower bound for that of the whole sequence.
    pub op_norm_sqrt: T,
    pub min_eigenvalue: T,
    /// `‖G v − λ v‖` for the top eigenpair, relative to `λ`.
    pub residual: T,
}

impl<T: Real> GramSummary<T> {
    pub fn is_psd(&self) -> bool {
        self.min_eigenvalue >= T::lit(-1e-10)
    }

    /// Row-major CSV, each complex entry written as `re,im`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| {
                    let z = self.entries[(i, j)];
                    format!("{},{}", z.re, z.im)
                })
                .collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }
}

/// Exact Gram matrix of the window and its spectral summary.
pub fn gram<T: Real>(spec: &HilbertSequenceSpec<T>) -> Result<GramSummary<T>> {
    let dim = spec.len();
    if dim > MAX_WINDOW {
        return invalid(format!("window of {dim} exceeds {MAX_WINDOW}"));
    }
    let idx: Vec<i64> = spec.indices().collect();
    let rows: Vec<Vec<Complex<T>>> = idx
        .par_iter()
        .map(|&n| idx.iter().map(|&m| spec.entry(n, m)).collect())
        .collect();
    if rows.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NumericRange("Gram entry overflowed".into()));
    }
    let entries = DMatrix::from_fn(dim, dim, |i, j| rows[i][j]);
    let g64 = DMatrix::from_fn(dim, dim, |i, j| {
        let z = entries[(i, j)];
        Complex::new(z.re.as_f64(), z.im.as_f64())
    });
    let eig = g64.clone().symmetric_eigen();
    let (top, &lmax) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty window");
    let lmin = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let v: DVector<Complex<f64>> = eig.eigenvectors.column(top).into_owned();
    let r = &g64 * &v - v.map(|x| x * lmax);
    let residual = r.norm() / lmax.abs().max(f64::MIN_POSITIVE);
    Ok(GramSummary {
        dim,
        entries,
        op_norm_sqrt: T::lit(lmax.max(0.0).sqrt()),
        min_eigenvalue: T::lit(lmin),
        residual: T::lit(residual),
    })
}

/// `inf_{m≠n} |(λ_m − λ_n)/(λ_m + λ̄_n)|` by exhaustive pair scan; `0` for
/// repeated exponents.
pub fn properly_spaced_margin<T: Real>(lambdas: &[Complex<T>]) -> Result<T> {
    if lambdas.len() < 2 {
        return invalid("need at least two exponents");
    }
    if let Some(l) = lambdas.iter().find(|l| !(l.re > T::zero())) {
        return domain(format!("exponent {l} is not in the open right half-plane"));
    }
    let mut best = T::infinity();
    for (i, &a) in lambdas.iter().enumerate() {
        for &b in &lambdas[i + 1..] {
            best = best.min(((a - b) / (a + b.conj())).norm());
        }
    }
    Ok(best)
}

/// Integral operator `L²(ℝ₊) → ℓ²`, `(Tf)_j = ∫₀^∞ c_j e^{−κ_j t} f(t) dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentialKernel<T> {
    rows: Vec<ExpElement<T>>,
}

impl<T: Real> ExponentialKernel<T> {
    pub fn new(rows: Vec<(Complex<T>, Complex<T>)>) -> Result<Self> {
        if rows.is_empty() {
            return invalid("kernel needs at least one row");
        }
        if rows.iter().any(|(_, k)| !(k.re > T::zero())) {
            return domain("kernel rates must have positive real part");
        }
        Ok(Self { rows: rows.into_iter().map(|(amp, rate)| ExpElement { amp, rate }).collect() })
    }

    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    /// `‖T‖²_γ = Σ_j |c_j|²/(2 Re κ_j)` (Hilbert–Schmidt norm).
    pub fn gamma_norm_sq(&self) -> T {
        self.rows.iter().map(|r| r.inner(r).re).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferReport<T> {
    /// `E‖Σ γ_i T f_i‖²` over the window, from the quadrature images.
    pub lhs: GaussianSumEstimate<T>,
    pub gamma_norm_sq: T,
    /// Square root of the window's Gram norm.
    pub hilbert_constant: T,
    /// `C² ‖T‖²_γ`.
    pub bound: T,
    pub holds: bool,
    /// Largest relative deviation of a quadrature image from its closed form.
    pub quadrature_error: T,
    pub accuracy_warning: Option<String>,
}

/// Quadrature images `(T f)_j`: composite Gauss–Legendre on `[0, t_cut]`
/// over panels that double in width from the fastest decay scale, each
/// split further to follow the oscillation, plus the exact exponential tail.
fn images_by_quadrature<T: Real>(kernel: &ExponentialKernel<T>, elems: &[ExpElement<T>], refine: usize) -> Vec<Vec<Complex<f64>>> {
    let c64 = |z: Complex<T>| Complex::new(z.re.as_f64(), z.im.as_f64());
    let rates: Vec<Complex<f64>> = kernel
        .rows
        .iter()
        .flat_map(|r| elems.iter().map(move |e| c64(r.rate + e.rate)))
        .collect();
    let slowest = rates.iter().map(|k| k.re).fold(f64::INFINITY, f64::min);
    let fastest = rates.iter().map(|k| k.re).fold(0.0, f64::max);
    let max_freq = rates.iter().map(|k| k.im.abs()).fold(0.0, f64::max);
    let t_cut = 40.0 / slowest;
    let rule = GaussLegendre::new(16);
    let mut nodes = Vec::new();
    let (mut lo, mut width) = (0.0, 1.0 / fastest);
    while lo < t_cut {
        let hi = (lo + width).min(t_cut);
        let pieces = refine * (1.0 + (hi - lo) * max_freq / std::f64::consts::PI).ceil() as usize;
        nodes.extend(rule.composite(lo, hi, pieces));
        lo = hi;
        width *= 2.0;
    }
    elems
        .par_iter()
        .map(|e| {
            kernel
                .rows
                .iter()
                .map(|r| {
                    let (a, k) = (c64(r.amp * e.amp), c64(r.rate + e.rate));
                    let body: Complex<f64> = nodes.iter().map(|&(t, w)| a * (-k * t).exp() * w).sum();
                    body + a * (-k * t_cut).exp() / k
                })
                .collect()
        })
        .collect()
}

/// Checks `E‖Σ γ_i T f_i‖² ≤ C² ‖T‖²_γ` for the elements `f_i` of `spec`,
/// with `C` the Hilbert constant of the window.
pub fn hilbert_sequence_gaussian_transfer<T: Real>(
    kernel: &ExponentialKernel<T>,
    spec: &HilbertSequenceSpec<T>,
) -> Result<TransferReport<T>> {
    let g = gram(spec)?;
    let elems: Vec<ExpElement<T>> = spec.indices().map(|n| spec.element(n)).collect();
    if elems.iter().any(|e| !e.amp.norm().is_finite() || !e.rate.norm().is_finite()) {
        return Err(Error::NumericRange("sequence element overflowed".into()));
    }
    let total = |imgs: &[Vec<Complex<f64>>]| imgs.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>();
    let coarse = images_by_quadrature(kernel, &elems, 1);
    let mid = images_by_quadrature(kernel, &elems, 2);
    let fine = images_by_quadrature(kernel, &elems, 4);
    let (v1, v2, v4) = (total(&coarse), total(&mid), total(&fine));
    let floor = 1e-13 * v4.abs().max(f64::MIN_POSITIVE);
    let (d1, d2) = ((v2 - v1).abs(), (v4 - v2).abs());
    let accuracy_warning = (d2 > floor && d2 > 0.1 * d1)
        .then(|| format!("quadrature refinement changed the sum by {d2:e} after {d1:e}"));
    let mut quadrature_error = 0.0f64;
    for (e, img) in elems.iter().zip(&fine) {
        for (r, &z) in kernel.rows.iter().zip(img) {
            let exact = r.amp * e.amp / (r.rate + e.rate);
            let exact = Complex::new(exact.re.as_f64(), exact.im.as_f64());
            quadrature_error = quadrature_error.max((z - exact).norm() / exact.norm().max(f64::MIN_POSITIVE));
        }
    }
    let lhs = T::lit(v4);
    let gamma_norm_sq = kernel.gamma_norm_sq();
    let c = g.op_norm_sqrt;
    let bound = c * c * gamma_norm_sq;
    let holds = lhs <= bound * (T::one() + T::lit(1e-10));
    Ok(TransferReport {
        lhs: GaussianSumEstimate::exact(lhs, spec.len()),
        gamma_norm_sq,
        hilbert_constant: c,
        bound,
        holds,
        quadrature_error: T::lit(quadrature_error),
        accuracy_warning,
    })
}
