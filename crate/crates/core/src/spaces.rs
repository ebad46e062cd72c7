//! Sequence spaces `ℓᵖ` and `c₀`, finite sections of their elements, and
//! the Gaussian constants used as oracles for sums in these spaces.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Error, Result};
use crate::scalar::Real;

/// Which norm a sequence space carries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SpaceKind<T> {
    /// `ℓᵖ` with exponent `p ≥ 1`.
    Lp(T),
    /// `c₀` with the supremum norm, modelled by finite sections.
    C0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScalarField {
    Real,
    Complex,
}

/// A concrete Banach sequence space.
///
/// Complex coordinates enter the norm through their modulus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceSpec<T> {
    kind: SpaceKind<T>,
    scalar: ScalarField,
}

impl<T: Real> SpaceSpec<T> {
    pub fn lp(p: T) -> Result<Self> {
        if !(p >= T::one()) || !p.is_finite() {
            return domain(format!("exponent p = {p} must be a finite real >= 1"));
        }
        Ok(Self { kind: SpaceKind::Lp(p), scalar: ScalarField::Complex })
    }

    pub fn l2() -> Self {
        Self { kind: SpaceKind::Lp(T::lit(2.0)), scalar: ScalarField::Complex }
    }

    pub fn c0() -> Self {
        Self { kind: SpaceKind::C0, scalar: ScalarField::Complex }
    }

    pub fn with_scalar(mut self, scalar: ScalarField) -> Self {
        self.scalar = scalar;
        self
    }

    pub fn kind(&self) -> SpaceKind<T> {
        self.kind
    }

    pub fn scalar(&self) -> ScalarField {
        self.scalar
    }

    /// True for `ℓ²`, where Gaussian second moments have a closed form.
    pub fn is_hilbert(&self) -> bool {
        matches!(self.kind, SpaceKind::Lp(p) if p == T::lit(2.0))
    }

    /// True for `ℓᵖ` with `p < ∞`; these spaces contain no copy of `c₀`.
    pub fn excludes_c0(&self) -> bool {
        matches!(self.kind, SpaceKind::Lp(_))
    }

    pub fn norm(&self, v: &FiniteVector<T>) -> Result<T> {
        self.norm_of(v.coeffs())
    }

    /// Norm of a coefficient slice. Rejects non-finite input and reports
    /// overflow as a numeric-range error.
    pub fn norm_of(&self, coeffs: &[Complex<T>]) -> Result<T> {
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return invalid("vector has a non-finite coefficient");
        }
        let n = norm_unchecked(self.kind, coeffs);
        if n.is_finite() {
            Ok(n)
        } else {
            Err(Error::NumericRange("norm overflowed".into()))
        }
    }

    pub(crate) fn norm_sq_unchecked(&self, coeffs: &[Complex<T>]) -> T {
        match self.kind {
            SpaceKind::Lp(p) if p == T::lit(2.0) => coeffs.iter().map(|c| c.norm_sqr()).sum(),
            kind => {
                let n = norm_unchecked(kind, coeffs);
                n * n
            }
        }
    }
}

fn norm_unchecked<T: Real>(kind: SpaceKind<T>, coeffs: &[Complex<T>]) -> T {
    let scale = coeffs.iter().map(|c| c.norm()).fold(T::zero(), T::max);
    match kind {
        SpaceKind::C0 => scale,
        _ if scale == T::zero() => T::zero(),
        SpaceKind::Lp(p) if p == T::one() => coeffs.iter().map(|c| c.norm()).sum(),
        SpaceKind::Lp(p) if p == T::lit(2.0) => {
            let s: T = coeffs.iter().map(|c| (c / scale).norm_sqr()).sum();
            scale * s.sqrt()
        }
        SpaceKind::Lp(p) => {
            let s: T = coeffs.iter().map(|c| (c.norm() / scale).powf(p)).sum();
            scale * s.powf(p.recip())
        }
    }
}

/// A finite section `(x₁, …, x_dim)` of a sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteVector<T> {
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> FiniteVector<T> {
    pub fn new(coeffs: Vec<Complex<T>>) -> Result<Self> {
        if coeffs.is_empty() {
            return invalid("vector dimension must be positive");
        }
        Ok(Self { coeffs })
    }

    pub fn from_real(values: &[T]) -> Result<Self> {
        Self::new(values.iter().map(|&x| Complex::new(x, T::zero())).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        Self { coeffs: vec![Complex::new(T::zero(), T::zero()); dim.max(1)] }
    }

    /// `scale · e_index` in dimension `dim` (0-based index).
    pub fn unit(dim: usize, index: usize, scale: T) -> Self {
        let mut v = Self::zeros(dim.max(index + 1));
        v.coeffs[index] = Complex::new(scale, T::zero());
        v
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn scaled(&self, a: Complex<T>) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c * a).collect() }
    }

    /// Coordinatewise sum; the shorter vector is padded with zeros.
    pub fn add(&self, other: &Self) -> Self {
        let dim = self.dim().max(other.dim());
        let zero = Complex::new(T::zero(), T::zero());
        let coeffs = (0..dim)
            .map(|i| {
                self.coeffs.get(i).copied().unwrap_or(zero)
                    + other.coeffs.get(i).copied().unwrap_or(zero)
            })
            .collect();
        Self { coeffs }
    }
}

/// `E|γ|ᵖ = 2^{p/2} Γ((p+1)/2) / √π` for a standard real Gaussian `γ`.
pub fn gaussian_abs_moment<T: Real>(p: T) -> Result<T> {
    if !(p >= T::one()) || !p.is_finite() {
        return domain(format!("absolute moment needs p >= 1, got {p}"));
    }
    let pf = p.as_f64();
    let log = 0.5 * pf * std::f64::consts::LN_2 + statrs::function::gamma::ln_gamma(0.5 * (pf + 1.0))
        - 0.5 * std::f64::consts::PI.ln();
    Ok(T::lit(log.exp()))
}

/// `E‖Σ γ_k v_k‖²` in `ℓ²`, which by orthogonality of the real Gaussians
/// equals `Σ ‖v_k‖²` (also for complex `v_k`).
pub fn second_moment_exact_l2<T: Real>(space: &SpaceSpec<T>, columns: &[FiniteVector<T>]) -> Result<T> {
    if !space.is_hilbert() {
        return Err(Error::UnsupportedSpace(
            "closed-form Gaussian second moment requires the p = 2 space".into(),
        ));
    }
    let mut total = T::zero();
    for v in columns {
        let n = space.norm(v)?;
        total = total + n * n;
    }
    Ok(total)
}
