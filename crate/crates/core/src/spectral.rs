//! Dirichlet sine basis on `(0, L)`, coefficient fields, Sobolev norms and
//! pseudospectral evaluation of polynomial nonlinearities.
//!
//! Mode `k` (1-based) is the normalized eigenfunction
//! `e_k(x) = sqrt(2/L) sin(k pi x / L)` of `-d^2/dx^2` with eigenvalue
//! `lambda_k = (k pi / L)^2`. Fields are stored as coefficient vectors in
//! this basis; index `i` of a coefficient vector holds mode `k = i + 1`.
//!
//! Physical samples live on the `M` interior nodes `x_j = j L / (M + 1)`.
//! The sine transform between the two is a type-I DST computed with an FFT of
//! length `2 (M + 1)`. `M + 1` is the smallest power of two above `2N`, which
//! keeps the projection of a cubic of band-limited fields alias-free.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone)]
pub struct SpectralBasis {
    length: f64,
    eigenvalues: Vec<f64>,
    grid_len: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SpectralBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralBasis")
            .field("length", &self.length)
            .field("modes", &self.eigenvalues.len())
            .field("grid_len", &self.grid_len)
            .finish()
    }
}

impl PartialEq for SpectralBasis {
    fn eq(&self, other: &Self) -> bool {
        self.length == other.length && self.eigenvalues.len() == other.eigenvalues.len()
    }
}

impl SpectralBasis {
    pub fn new(length: f64, modes: usize) -> Result<Self> {
        let mut violations = Vec::new();
        if !(length.is_finite() && length > 0.0) {
            violations.push(format!("domain length must be positive, got {length}"));
        }
        if modes == 0 {
            violations.push("mode count must be at least 1".to_string());
        }
        if !violations.is_empty() {
            return Err(Error::Config(violations));
        }
        let eigenvalues = (1..=modes)
            .map(|k| {
                let w = k as f64 * PI / length;
                w * w
            })
            .collect();
        let grid_len = (2 * modes + 1).next_power_of_two() - 1;
        let fft = FftPlanner::new().plan_fft_forward(2 * (grid_len + 1));
        Ok(Self {
            length,
            eigenvalues,
            grid_len,
            fft,
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn modes(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `lambda_k` for k = 1..N, stored at index k - 1.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Number of interior quadrature nodes `M`.
    pub fn grid_len(&self) -> usize {
        self.grid_len
    }

    pub fn spacing(&self) -> f64 {
        self.length / (self.grid_len + 1) as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        let dx = self.spacing();
        (1..=self.grid_len).map(|j| j as f64 * dx).collect()
    }

    /// Value of the normalized eigenfunction `e_k` at `x` (k is 1-based).
    pub fn eigenfunction(&self, k: usize, x: f64) -> f64 {
        (2.0 / self.length).sqrt() * (k as f64 * PI * x / self.length).sin()
    }

    pub fn zeros(&self) -> SpectralField {
        SpectralField::zeros(self.modes())
    }

    /// Unit coefficient on mode `k` (1-based).
    pub fn unit(&self, k: usize) -> Result<SpectralField> {
        if k == 0 || k > self.modes() {
            return Err(Error::config(format!("mode {k} outside 1..={}", self.modes())));
        }
        let mut f = self.zeros();
        f.coeffs[k - 1] = 1.0;
        Ok(f)
    }

    pub fn check(&self, field: &SpectralField) -> Result<()> {
        if field.len() != self.modes() {
            return Err(Error::Dimension {
                expected: self.modes(),
                got: field.len(),
            });
        }
        Ok(())
    }

    /// Unnormalized DST-I: `out[k-1] = sum_{j=1}^{M} x_j sin(pi j k / (M+1))`
    /// for `k = 1..=out_len`. `input` may be shorter than `M` (zero padded).
    fn dst1(&self, input: &[f64], out_len: usize) -> Vec<f64> {
        let m1 = self.grid_len + 1;
        let mut buf = vec![Complex::new(0.0, 0.0); 2 * m1];
        for (j, &x) in input.iter().enumerate() {
            buf[j + 1].re = x;
            buf[2 * m1 - j - 1].re = -x;
        }
        let mut scratch = vec![Complex::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        self.fft.process_with_scratch(&mut buf, &mut scratch);
        buf[1..=out_len].iter().map(|c| -0.5 * c.im).collect()
    }

    /// Samples of the field at the interior nodes.
    pub fn to_physical(&self, field: &SpectralField) -> Result<Vec<f64>> {
        self.check(field)?;
        let scale = (2.0 / self.length).sqrt();
        let mut out = self.dst1(&field.coeffs, self.grid_len);
        out.iter_mut().for_each(|x| *x *= scale);
        Ok(out)
    }

    /// L2 projection of nodal samples onto modes 1..N (trapezoid quadrature
    /// with zero boundary values, exact for sine modes below `M + 1`).
    pub fn from_physical(&self, samples: &[f64]) -> Result<SpectralField> {
        if samples.len() != self.grid_len {
            return Err(Error::Dimension {
                expected: self.grid_len,
                got: samples.len(),
            });
        }
        let scale = (2.0 / self.length).sqrt() * self.spacing();
        let mut coeffs = self.dst1(samples, self.modes());
        coeffs.iter_mut().for_each(|a| *a *= scale);
        Ok(SpectralField { coeffs })
    }

    /// Quadrature `L2` norm of nodal samples.
    pub fn physical_norm(&self, samples: &[f64]) -> f64 {
        (self.spacing() * samples.iter().map(|x| x * x).sum::<f64>()).sqrt()
    }

    /// `(sum_k lambda_k^s a_k^2)^{1/2}`.
    pub fn sobolev_norm(&self, field: &SpectralField, s: f64) -> f64 {
        debug_assert_eq!(field.len(), self.modes());
        if s == 0.0 {
            return field.norm();
        }
        field
            .coeffs
            .iter()
            .zip(&self.eigenvalues)
            .map(|(a, l)| l.powf(s) * a * a)
            .sum::<f64>()
            .sqrt()
    }

    /// Projection of `f(u(x))` onto modes 1..N, evaluated on the dealiased grid.
    /// Odd powers of `u` are projected exactly and the constant term is
    /// added in closed form. A quadratic term has an infinite sine series and
    /// carries a small quadrature error that decays with the grid size.
    pub fn apply_nonlinearity(&self, f: &Nonlinearity, u: &SpectralField) -> Result<SpectralField> {
        let c0 = f.coefficients()[0];
        let mut samples = self.to_physical(u)?;
        samples.iter_mut().for_each(|x| *x = f.eval(*x) - c0);
        let mut out = self.from_physical(&samples)?;
        if c0 != 0.0 {
            // int_0^L e_k = sqrt(2/L) L (1 - (-1)^k) / (k pi)
            let scale = (2.0 / self.length).sqrt() * self.length / PI;
            for (i, a) in out.coeffs.iter_mut().enumerate() {
                let k = i + 1;
                if k % 2 == 1 {
                    *a += c0 * scale * 2.0 / k as f64;
                }
            }
        }
        Ok(out)
    }

    /// `-A u`, i.e. the spectral Laplacian.
    pub fn laplacian(&self, u: &SpectralField) -> SpectralField {
        SpectralField {
            coeffs: u.coeffs.iter().zip(&self.eigenvalues).map(|(a, l)| -l * a).collect(),
        }
    }

    /// Quadrature of `int_D F(u(x)) dx` with `F` the antiderivative of `f`.
    pub fn potential(&self, f: &Nonlinearity, u: &SpectralField) -> Result<f64> {
        let samples = self.to_physical(u)?;
        Ok(self.spacing() * samples.iter().map(|&x| f.antiderivative(x)).sum::<f64>())
    }
}

/// Coefficient vector of a field in the sine basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralField {
    pub coeffs: Vec<f64>,
}

impl SpectralField {
    pub fn zeros(modes: usize) -> Self {
        Self {
            coeffs: vec![0.0; modes],
        }
    }

    pub fn from_coeffs(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `||.||_0`, the Euclidean norm of the coefficients.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &SpectralField) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum()
    }

    pub fn scaled(&self, c: f64) -> SpectralField {
        SpectralField {
            coeffs: self.coeffs.iter().map(|a| c * a).collect(),
        }
    }

    /// `self += c * other`
    pub fn axpy(&mut self, c: f64, other: &SpectralField) {
        self.coeffs.iter_mut().zip(&other.coeffs).for_each(|(a, b)| *a += c * b);
    }

    pub fn distance(&self, other: &SpectralField) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|a| a.is_finite())
    }
}

/// Polynomial reaction term `f(s) = c0 + c1 s + c2 s^2 + c3 s^3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum Nonlinearity {
    /// `f(s) = s - s^3`
    CubicDefault,
    CustomPolynomial {
        coefficients: [f64; 4],
    },
    /// `f = 0`; handy for linear checks.
    Zero,
}

impl Nonlinearity {
    pub fn polynomial(coefficients: &[f64]) -> Result<Self> {
        if coefficients.len() > 4 {
            return Err(Error::config(format!(
                "nonlinearity must have degree <= 3, got {} coefficients",
                coefficients.len()
            )));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::config("nonlinearity coefficients must be finite"));
        }
        let mut c = [0.0; 4];
        c[..coefficients.len()].copy_from_slice(coefficients);
        Ok(Nonlinearity::CustomPolynomial { coefficients: c })
    }

    pub fn coefficients(&self) -> [f64; 4] {
        match self {
            Nonlinearity::CubicDefault => [0.0, 1.0, 0.0, -1.0],
            Nonlinearity::CustomPolynomial { coefficients } => *coefficients,
            Nonlinearity::Zero => [0.0; 4],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients() == [0.0; 4]
    }

    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        let [c0, c1, c2, c3] = self.coefficients();
        c0 + s * (c1 + s * (c2 + s * c3))
    }

    /// `F(s) = int_0^s f(r) dr`
    pub fn antiderivative(&self, s: f64) -> f64 {
        let [c0, c1, c2, c3] = self.coefficients();
        s * (c0 + s * (c1 / 2.0 + s * (c2 / 3.0 + s * c3 / 4.0)))
    }

    pub fn derivative(&self, s: f64) -> f64 {
        let [_, c1, c2, c3] = self.coefficients();
        c1 + s * (2.0 * c2 + s * 3.0 * c3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_interval_spectrum() {
        let b = SpectralBasis::new(1.0, 3).unwrap();
        let pi2 = PI * PI;
        assert_eq!(b.eigenvalues(), &[pi2, 4.0 * pi2, 9.0 * pi2]);
        let b2 = SpectralBasis::new(2.0, 1).unwrap();
        assert!((b2.eigenvalues()[0] - pi2 / 4.0).abs() < 1e-15);
        let b64 = SpectralBasis::new(1.0, 64).unwrap();
        let ratio = b64.eigenvalues()[63] / b64.eigenvalues()[0];
        assert!((ratio - 4096.0).abs() < 1e-9);
        assert!(b64.grid_len() >= 128);
    }

    #[test]
    fn rejects_bad_basis() {
        assert!(matches!(SpectralBasis::new(0.0, 4), Err(Error::Config(_))));
        assert!(matches!(SpectralBasis::new(-1.0, 4), Err(Error::Config(_))));
        match SpectralBasis::new(-1.0, 0) {
            Err(Error::Config(v)) => assert_eq!(v.len(), 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_field_round_trip() {
        let b = SpectralBasis::new(1.0, 8).unwrap();
        let s = b.to_physical(&b.zeros()).unwrap();
        assert!(s.iter().all(|&x| x == 0.0));
        assert_eq!(b.from_physical(&s).unwrap(), b.zeros());
    }

    #[test]
    fn first_mode_samples() {
        let b = SpectralBasis::new(1.0, 4).unwrap();
        let s = b.to_physical(&b.unit(1).unwrap()).unwrap();
        for (x, v) in b.nodes().iter().zip(&s) {
            assert!((v - 2f64.sqrt() * (PI * x).sin()).abs() < 1e-14);
        }
    }

    #[test]
    fn mismatched_sizes_rejected() {
        let b = SpectralBasis::new(1.0, 4).unwrap();
        assert!(b.to_physical(&SpectralField::zeros(5)).is_err());
        assert!(b.from_physical(&[0.0; 3]).is_err());
        assert!(b.unit(5).is_err());
    }

    #[test]
    fn sobolev_norm_examples() {
        let b = SpectralBasis::new(1.0, 2).unwrap();
        let e1 = b.unit(1).unwrap();
        assert_eq!(b.sobolev_norm(&e1, 0.0), 1.0);
        assert!((b.sobolev_norm(&e1, 1.0) - PI).abs() < 1e-15);
        let ones = SpectralField::from_coeffs(vec![1.0, 1.0]);
        let expect = (1.0 / (PI * PI) + 1.0 / (4.0 * PI * PI)).sqrt();
        assert!((b.sobolev_norm(&ones, -1.0) - expect).abs() < 1e-15);
    }

    #[test]
    fn nonlinearity_small_and_zero() {
        let b = SpectralBasis::new(1.0, 8).unwrap();
        let f = Nonlinearity::CubicDefault;
        let zero = b.apply_nonlinearity(&f, &b.zeros()).unwrap();
        assert!(zero.coeffs.iter().all(|&a| a == 0.0));
        let eps = 1e-6;
        let u = b.unit(1).unwrap().scaled(eps);
        let fu = b.apply_nonlinearity(&f, &u).unwrap();
        assert!(fu.distance(&u) < 1e-15, "{}", fu.distance(&u));
    }

    #[test]
    fn cubic_default_satisfies_growth_bound() {
        let f = Nonlinearity::CubicDefault;
        for i in -2000..=2000 {
            let s = i as f64 * 0.01;
            assert!(f.eval(s).abs() <= 2.0 * (1.0 + s.abs().powi(3)));
            assert!(f.derivative(s).abs() <= 3.0 * (1.0 + s * s));
            let big_f = f.antiderivative(s);
            // a single constant in F <= -C3 (s^4 - 1) is unattainable for s - s^3;
            // the two-constant form is what the energy estimates use
            assert!(big_f <= -s.powi(4) / 8.0 + 0.5 + 1e-12);
            assert!(s * f.eval(s) <= -4.0 * (big_f - 1.0));
        }
        let worst = |c: f64| {
            (0..4000)
                .map(|i| i as f64 * 1e-3)
                .map(|x| x / 2.0 - x * x / 4.0 + c * (x * x - 1.0))
                .fold(f64::MIN, f64::max)
        };
        assert!([0.01, 0.1, 0.2, 0.24].iter().all(|&c| worst(c) > 0.0));
    }

    #[test]
    fn polynomial_degree_limit() {
        assert!(Nonlinearity::polynomial(&[0.0, 1.0, 0.0, -1.0, 2.0]).is_err());
        let p = Nonlinearity::polynomial(&[0.0, 1.0, 0.0, -1.0]).unwrap();
        assert_eq!(p.coefficients(), Nonlinearity::CubicDefault.coefficients());
        assert_eq!(p.antiderivative(2.0), 2.0 - 4.0);
    }
}
