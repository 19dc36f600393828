//! Closed-form checks run by `kramers oracle-suite`.

use serde::{Deserialize, Serialize};

use crate::dynamics::{run_split, simulate_det_wave, simulate_heat, ModelParams, Sampling};
use crate::error::Result;
use crate::noise::{CovarianceSpectrum, NoisePath};
use crate::spectral::{Nonlinearity, SpectralBasis, SpectralField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub name: String,
    pub computed: f64,
    pub expected: f64,
    /// Relative error, or absolute error when `|expected| < 1`.
    pub error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl OracleCheck {
    fn new(name: String, computed: f64, expected: f64, tolerance: f64) -> Self {
        let error = (computed - expected).abs() / expected.abs().max(1.0);
        Self {
            name,
            computed,
            expected,
            error,
            tolerance,
            passed: error <= tolerance,
        }
    }
}

/// Single damped oscillator `nu u'' + u' + lambda u = 0`, `u(0) = u0`,
/// `u'(0) = u1`, from the roots of `nu r^2 + r + lambda = 0`.
pub fn damped_mode(nu: f64, lambda: f64, u0: f64, u1: f64, t: f64) -> f64 {
    let disc = 1.0 - 4.0 * nu * lambda;
    if disc > 0.0 {
        let s = disc.sqrt();
        // stable root pair without cancellation
        let r1 = -(1.0 + s) / (2.0 * nu);
        let r2 = -2.0 * lambda / (1.0 + s);
        let b = (u1 - r1 * u0) / (r2 - r1);
        let a = u0 - b;
        a * (r1 * t).exp() + b * (r2 * t).exp()
    } else if disc < 0.0 {
        let re = -1.0 / (2.0 * nu);
        let im = (-disc).sqrt() / (2.0 * nu);
        let c = (u1 - re * u0) / im;
        (re * t).exp() * (u0 * (im * t).cos() + c * (im * t).sin())
    } else {
        let r = -1.0 / (2.0 * nu);
        (u0 + (u1 - r * u0) * t) * (r * t).exp()
    }
}

fn single_mode_params(nu: f64, modes: usize, steps: usize, horizon: f64) -> Result<ModelParams> {
    ModelParams::new(
        nu,
        0.0,
        horizon,
        steps,
        SpectralBasis::new(1.0, modes)?,
        Nonlinearity::Zero,
        CovarianceSpectrum::zero(modes),
    )
}

/// Runs every closed-form check; failures are reported, not raised.
pub fn run_oracle_suite() -> Result<Vec<OracleCheck>> {
    let mut checks = Vec::new();

    // slow velocity component v1bar(t) = nu u1 exp(-t/nu)
    for nu in [1.0, 0.1, 0.01] {
        let params = single_mode_params(nu, 2, 1000, 10.0 * nu)?;
        let noise = NoisePath::sample(&params.q, params.horizon, params.steps, 0)?;
        let u0 = SpectralField::zeros(2);
        let u1 = SpectralField::from_coeffs(vec![1.0, -0.5]);
        let sampling = Sampling::at_steps(vec![0, 100, 1000]);
        let traj = run_split(&params, &noise, &u0, &u1, &sampling)?;
        let split = traj.split.as_ref().expect("split run records components");
        for (s, t) in split.iter().zip(&traj.times) {
            let expected = nu * (-t / nu).exp();
            let computed = s.v1bar.coeffs[0];
            let rel = if expected == 0.0 {
                0.0
            } else {
                (computed - expected).abs() / expected.abs()
            };
            checks.push(OracleCheck {
                name: format!("v1bar nu={nu} t={t}"),
                computed,
                expected,
                error: rel,
                tolerance: 1e-12,
                passed: rel <= 1e-12,
            });
        }
    }

    // noiseless linear wave mode against its characteristic roots
    for nu in [1e-1, 1e-3] {
        for k in [1usize, 10] {
            let steps = 400;
            let params = single_mode_params(nu, k, steps, 1.0)?;
            let lambda = params.basis.eigenvalues()[k - 1];
            let mut u0 = SpectralField::zeros(k);
            let mut u1 = SpectralField::zeros(k);
            u0.coeffs[k - 1] = 1.0;
            u1.coeffs[k - 1] = 0.5;
            let traj = simulate_det_wave(&params, &u0, &u1, &Sampling::every(40, steps))?;
            let worst = traj
                .u
                .iter()
                .zip(&traj.times)
                .map(|(u, &t)| (u.coeffs[k - 1], damped_mode(nu, lambda, 1.0, 0.5, t)))
                .max_by(|a, b| (a.0 - a.1).abs().total_cmp(&(b.0 - b.1).abs()))
                .expect("samples recorded");
            checks.push(OracleCheck::new(
                format!("wave mode nu={nu} lambda={k}^2 pi^2"),
                worst.0,
                worst.1,
                1e-10,
            ));
        }
    }

    // heat mode exp(-lambda t)
    for k in [1usize, 3] {
        let steps = 64;
        let params = single_mode_params(1.0, k, steps, 0.5)?;
        let noise = NoisePath::sample(&params.q, params.horizon, steps, 0)?;
        let lambda = params.basis.eigenvalues()[k - 1];
        let mut u0 = SpectralField::zeros(k);
        u0.coeffs[k - 1] = 1.0;
        let traj = simulate_heat(&params, &noise, &u0, &Sampling::every(16, steps))?;
        for (u, &t) in traj.u.iter().zip(&traj.times) {
            let expected = (-lambda * t).exp();
            let computed = u.coeffs[k - 1];
            let rel = (computed - expected).abs() / expected;
            checks.push(OracleCheck {
                name: format!("heat mode k={k} t={t}"),
                computed,
                expected,
                error: rel,
                tolerance: 1e-12,
                passed: rel <= 1e-12,
            });
        }
    }
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes() {
        let checks = run_oracle_suite().unwrap();
        assert!(checks.len() >= 20);
        for c in &checks {
            assert!(c.passed, "{c:?}");
        }
    }

    #[test]
    fn damped_mode_initial_conditions() {
        for (nu, lambda) in [(0.1, 1.0), (0.1, 100.0), (0.25, 1.0)] {
            assert!((damped_mode(nu, lambda, 1.0, 2.0, 0.0) - 1.0).abs() < 1e-14);
            let h = 1e-6;
            let d = (damped_mode(nu, lambda, 1.0, 2.0, h) - damped_mode(nu, lambda, 1.0, 2.0, -h)) / (2.0 * h);
            assert!((d - 2.0).abs() < 1e-5, "{d}");
        }
    }
}
