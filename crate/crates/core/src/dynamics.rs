//! Time integration of the damped stochastic wave system, its velocity
//! splitting, and the two small-`nu` limit models.
//!
//! Every integrator treats the linear part exactly mode by mode and freezes
//! the reaction term `f(u)` over a step (exponential Euler). Noise enters as
//! the constant forcing `Delta W / h` over each step, so a step is the exact
//! solution of the linear modal system driven by the piecewise-linear
//! interpolant of the Brownian path. Step sizes are therefore independent of
//! `nu`.
//!
//! Per mode the full system in `(u, v)` is
//!
//! ```text
//! u' = v
//! v' = (-lambda u - v + f_k(u)) / nu + nu^(alpha - 1) dW_k/dt
//! ```
//!
//! whose propagator is `exp(hA) = c0 I + c1 A` (Cayley-Hamilton) with
//! `A = [[0, 1], [-lambda/nu, -1/nu]]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{CovarianceSpectrum, NoiseAudit, NoiseCursor, NoisePath};
use crate::spectral::{Nonlinearity, SpectralBasis, SpectralField};

/// Magnitude above which a coefficient counts as a blow-up.
pub const BLOW_UP_THRESHOLD: f64 = 1e8;

#[derive(Debug, Clone)]
pub struct ModelParams {
    pub nu: f64,
    pub alpha: f64,
    pub horizon: f64,
    pub steps: usize,
    pub basis: SpectralBasis,
    pub nonlinearity: Nonlinearity,
    pub q: CovarianceSpectrum,
}

impl ModelParams {
    pub fn new(
        nu: f64,
        alpha: f64,
        horizon: f64,
        steps: usize,
        basis: SpectralBasis,
        nonlinearity: Nonlinearity,
        q: CovarianceSpectrum,
    ) -> Result<Self> {
        let p = Self {
            nu,
            alpha,
            horizon,
            steps,
            basis,
            nonlinearity,
            q,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let mut v = Vec::new();
        if !(self.nu > 0.0 && self.nu <= 1.0) {
            v.push(format!("nu must lie in (0, 1], got {}", self.nu));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            v.push(format!("alpha must be >= 0, got {}", self.alpha));
        }
        if self.alpha == 1.0 {
            v.push(ALPHA_ONE_MESSAGE.to_string());
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            v.push(format!("horizon must be positive, got {}", self.horizon));
        }
        if self.steps == 0 {
            v.push("step count must be at least 1".to_string());
        }
        if self.q.modes() != self.basis.modes() {
            v.push(format!(
                "covariance has {} modes but basis has {}",
                self.q.modes(),
                self.basis.modes()
            ));
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn time(&self, j: usize) -> f64 {
        if j == self.steps {
            self.horizon
        } else {
            j as f64 * self.dt()
        }
    }

    /// Noise amplitude `sigma = nu^alpha`.
    pub fn sigma(&self) -> f64 {
        self.nu.powf(self.alpha)
    }

    pub fn with_steps(&self, steps: usize) -> Self {
        Self { steps, ..self.clone() }
    }

    pub fn with_nu(&self, nu: f64) -> Self {
        Self { nu, ..self.clone() }
    }

    fn check_noise(&self, noise: &NoisePath) -> Result<()> {
        if noise.steps() != self.steps || noise.modes() != self.basis.modes() {
            return Err(Error::config(format!(
                "noise grid ({} steps, {} modes) does not match model grid ({} steps, {} modes); coarsen the path first",
                noise.steps(),
                noise.modes(),
                self.steps,
                self.basis.modes()
            )));
        }
        if (noise.horizon() - self.horizon).abs() > 1e-12 * self.horizon {
            return Err(Error::config(format!(
                "noise horizon {} differs from model horizon {}",
                noise.horizon(),
                self.horizon
            )));
        }
        Ok(())
    }
}

pub const ALPHA_ONE_MESSAGE: &str =
    "alpha = 1 is not supported: the two retained O(nu) terms coincide there and that case is deferred";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveState {
    pub u: SpectralField,
    pub v: SpectralField,
    pub t: f64,
}

impl WaveState {
    /// `nu ||v||^2 / 2 + ||u||_1^2 / 2 - int F(u)`
    pub fn energy(&self, basis: &SpectralBasis, f: &Nonlinearity, nu: f64) -> Result<f64> {
        let kinetic = 0.5 * nu * self.v.norm().powi(2);
        let elastic = 0.5 * basis.sobolev_norm(&self.u, 1.0).powi(2);
        Ok(kinetic + elastic - basis.potential(f, &self.u)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitState {
    pub v1bar: SpectralField,
    pub v2bar: SpectralField,
    pub v3bar: SpectralField,
    pub t: f64,
}

/// Grid steps at which a trajectory is recorded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sampling {
    steps: Vec<usize>,
}

impl Sampling {
    /// Steps `0, stride, 2 stride, ...` up to and including `total` when it
    /// is a multiple of `stride`.
    pub fn every(stride: usize, total: usize) -> Self {
        let stride = stride.max(1);
        Self {
            steps: (0..=total).step_by(stride).collect(),
        }
    }

    pub fn final_only(total: usize) -> Self {
        Self { steps: vec![total] }
    }

    pub fn at_steps(mut steps: Vec<usize>) -> Self {
        steps.sort_unstable();
        steps.dedup();
        Self { steps }
    }

    /// Sample times that must coincide with grid times `j T / J`.
    pub fn at_times(times: &[f64], horizon: f64, total: usize) -> Result<Self> {
        let dt = horizon / total as f64;
        let mut steps = Vec::with_capacity(times.len());
        let mut bad = Vec::new();
        for &t in times {
            let j = (t / dt).round();
            if !(0.0..=total as f64).contains(&j) || (j * dt - t).abs() > 1e-9 * dt.max(t.abs()) {
                bad.push(format!("output time {t} is not on the step grid (dt = {dt})"));
            } else {
                steps.push(j as usize);
            }
        }
        if bad.is_empty() {
            Ok(Self::at_steps(steps))
        } else {
            Err(Error::Config(bad))
        }
    }

    pub fn steps(&self) -> &[usize] {
        &self.steps
    }

    fn validate(&self, total: usize) -> Result<()> {
        match self.steps.last() {
            Some(&last) if last > total => Err(Error::config(format!("sample step {last} exceeds step count {total}"))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub steps: Vec<usize>,
    pub step_size: f64,
    pub u: Vec<SpectralField>,
    pub v: Option<Vec<SpectralField>>,
    pub split: Option<Vec<SplitState>>,
    /// Displacement integrated from the split velocity.
    pub u_split: Option<Vec<SpectralField>>,
    pub noise_audit: NoiseAudit,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Index of sample time `t`, if it is one.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let tol = 1e-9 * self.step_size.max(f64::MIN_POSITIVE);
        self.times.iter().position(|&s| (s - t).abs() <= tol)
    }

    pub fn last_u(&self) -> Option<&SpectralField> {
        self.u.last()
    }
}

/// Scalar coefficients of `exp(hA) = c0 I + c1 A` for one mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModePropagator {
    pub c0: f64,
    pub c1: f64,
}

impl ModePropagator {
    pub fn new(lambda: f64, nu: f64, h: f64) -> Self {
        let disc = 1.0 - 4.0 * nu * lambda;
        if disc > 0.0 {
            let s = disc.sqrt();
            let mu_fast = -(1.0 + s) / (2.0 * nu);
            let mu_slow = -2.0 * lambda / (1.0 + s);
            let gap = s / nu;
            // divided difference (e^{h mu_slow} - e^{h mu_fast}) / gap
            let c1 = (h * mu_slow).exp() * h * one_minus_exp_over(h * gap);
            let c0 = (h * mu_fast).exp() - mu_fast * c1;
            Self { c0, c1 }
        } else {
            let a = -1.0 / (2.0 * nu);
            let omega = (-disc).sqrt() / (2.0 * nu);
            let decay = (h * a).exp();
            let c1 = decay * h * sinc(h * omega);
            let c0 = decay * (h * omega).cos() - a * c1;
            Self { c0, c1 }
        }
    }

    /// Entries `[[e00, e01], [e10, e11]]` of `exp(hA)`.
    pub fn matrix(&self, lambda: f64, nu: f64) -> [[f64; 2]; 2] {
        [[self.c0, self.c1], [-lambda / nu * self.c1, self.c0 - self.c1 / nu]]
    }
}

/// `(1 - e^{-x}) / x`, continuous at 0.
fn one_minus_exp_over(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - 0.5 * x
    } else {
        -(-x).exp_m1() / x
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-6 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Precomputed exponential-Euler step for the full `(u, v)` system.
#[derive(Debug, Clone)]
pub struct FullWaveStepper {
    props: Vec<ModePropagator>,
    lambda: Vec<f64>,
    nu: f64,
    sigma: f64,
    h: f64,
}

impl FullWaveStepper {
    pub fn new(params: &ModelParams, h: f64) -> Self {
        let lambda = params.basis.eigenvalues().to_vec();
        Self {
            props: lambda.iter().map(|&l| ModePropagator::new(l, params.nu, h)).collect(),
            lambda,
            nu: params.nu,
            sigma: params.sigma(),
            h,
        }
    }

    /// Advances `(u, v)` by one step with the reaction term `fu = f(u)` frozen
    /// and noise increments `dw`.
    ///
    /// With `F = f_k + sigma dW_k / h` the constant forcing of `nu v` has the
    /// fixed point `u* = F / lambda`, so the step is
    /// `X <- exp(hA) X + (I - exp(hA)) (u*, 0)`.
    pub fn step(&self, u: &mut SpectralField, v: &mut SpectralField, fu: &SpectralField, dw: &[f64]) {
        let inv_h = 1.0 / self.h;
        for k in 0..self.lambda.len() {
            let ModePropagator { c0, c1 } = self.props[k];
            let l = self.lambda[k];
            let forcing = fu.coeffs[k] + self.sigma * dw[k] * inv_h;
            let (uk, vk) = (u.coeffs[k], v.coeffs[k]);
            u.coeffs[k] = c0 * uk + c1 * vk + (1.0 - c0) / l * forcing;
            v.coeffs[k] = -l / self.nu * c1 * uk + (c0 - c1 / self.nu) * vk + c1 / self.nu * forcing;
        }
    }
}

/// Precomputed exponential-Euler step for the limiting heat equation.
#[derive(Debug, Clone)]
pub struct HeatStepper {
    decay: Vec<f64>,
    gain: Vec<f64>,
    sigma: f64,
    h: f64,
}

impl HeatStepper {
    pub fn new(params: &ModelParams, h: f64) -> Self {
        let lambda = params.basis.eigenvalues();
        Self {
            decay: lambda.iter().map(|l| (-l * h).exp()).collect(),
            gain: lambda.iter().map(|l| -(-l * h).exp_m1() / l).collect(),
            sigma: params.sigma(),
            h,
        }
    }

    pub fn step(&self, u: &mut SpectralField, fu: &SpectralField, dw: &[f64]) {
        let inv_h = 1.0 / self.h;
        for k in 0..self.decay.len() {
            let forcing = fu.coeffs[k] + self.sigma * dw[k] * inv_h;
            u.coeffs[k] = self.decay[k] * u.coeffs[k] + self.gain[k] * forcing;
        }
    }
}

/// One step of the full system from `state` with increments `dw` over `h`.
pub fn step_full_wave(state: &WaveState, params: &ModelParams, dw: &[f64], h: f64) -> Result<WaveState> {
    params.basis.check(&state.u)?;
    params.basis.check(&state.v)?;
    if dw.len() != params.basis.modes() {
        return Err(Error::Dimension {
            expected: params.basis.modes(),
            got: dw.len(),
        });
    }
    let stepper = FullWaveStepper::new(params, h);
    let fu = reaction(params, &state.u)?;
    let mut next = state.clone();
    stepper.step(&mut next.u, &mut next.v, &fu, dw);
    next.t += h;
    guard(&next.u, next.t, 1)?;
    guard(&next.v, next.t, 1)?;
    Ok(next)
}

/// `v1bar(t) = nu e^{-t/nu} u1`
pub fn evolve_v1(nu: f64, u1: &SpectralField, t: f64) -> SpectralField {
    u1.scaled(nu * (-t / nu).exp())
}

/// Mean part: `v2bar <- e^{-h/nu} v2bar + (1 - e^{-h/nu}) g` with
/// `g = -A u + f(u)` frozen over the step.
pub fn step_v2(v2bar: &SpectralField, u: &SpectralField, params: &ModelParams, h: f64) -> Result<SpectralField> {
    let g = drift(params, u)?;
    let mut out = v2bar.clone();
    relax_towards(&mut out, &g, params.nu, h);
    Ok(out)
}

/// Diffusion part: exact OU decay with the innovation `c(h, nu) dW_k`, where
/// `c^2 = (1 - e^{-2h/nu}) / (2h)` makes its variance `b_k (1 - e^{-2h/nu}) / 2`.
pub fn step_v3(v3bar: &SpectralField, params: &ModelParams, dw: &[f64], h: f64) -> SpectralField {
    let mut out = v3bar.clone();
    let (decay, gain) = ou_coefficients(params.nu, h);
    out.coeffs
        .iter_mut()
        .zip(dw)
        .for_each(|(a, w)| *a = decay * *a + gain * w);
    out
}

fn ou_coefficients(nu: f64, h: f64) -> (f64, f64) {
    let decay = (-h / nu).exp();
    let gain = (-(-2.0 * h / nu).exp_m1() / (2.0 * h)).sqrt();
    (decay, gain)
}

fn relax_towards(x: &mut SpectralField, target: &SpectralField, nu: f64, h: f64) {
    let decay = (-h / nu).exp();
    let gain = -(-h / nu).exp_m1();
    x.coeffs
        .iter_mut()
        .zip(&target.coeffs)
        .for_each(|(a, g)| *a = decay * *a + gain * g);
}

fn reaction(params: &ModelParams, u: &SpectralField) -> Result<SpectralField> {
    if params.nonlinearity.is_zero() {
        Ok(SpectralField::zeros(u.len()))
    } else {
        params.basis.apply_nonlinearity(&params.nonlinearity, u)
    }
}

/// `-A u + f(u)`
pub fn drift(params: &ModelParams, u: &SpectralField) -> Result<SpectralField> {
    let mut g = params.basis.laplacian(u);
    g.axpy(1.0, &reaction(params, u)?);
    Ok(g)
}

fn guard(x: &SpectralField, t: f64, step: usize) -> Result<()> {
    for (i, a) in x.coeffs.iter().enumerate() {
        if !a.is_finite() || a.abs() > BLOW_UP_THRESHOLD {
            return Err(Error::BlowUp {
                t,
                step,
                detail: format!("mode {} coefficient {a}", i + 1),
            });
        }
    }
    Ok(())
}

struct Recorder<'s> {
    sampling: &'s Sampling,
    next: usize,
}

impl<'s> Recorder<'s> {
    fn new(sampling: &'s Sampling) -> Self {
        Self { sampling, next: 0 }
    }

    fn due(&mut self, step: usize) -> bool {
        if self.sampling.steps.get(self.next) == Some(&step) {
            self.next += 1;
            true
        } else {
            false
        }
    }
}

fn check_initial(params: &ModelParams, fields: &[&SpectralField]) -> Result<()> {
    fields.iter().try_for_each(|f| params.basis.check(f))
}

fn full_wave_loop(
    params: &ModelParams,
    mut cursor: NoiseCursor<'_>,
    u0: &SpectralField,
    u1: &SpectralField,
    sampling: &Sampling,
) -> Result<Trajectory> {
    params.validate()?;
    check_initial(params, &[u0, u1])?;
    sampling.validate(params.steps)?;
    let h = params.dt();
    let stepper = FullWaveStepper::new(params, h);
    let (mut u, mut v) = (u0.clone(), u1.clone());
    let mut dw = vec![0.0; params.basis.modes()];
    let mut traj = Trajectory {
        step_size: h,
        v: Some(Vec::new()),
        ..Default::default()
    };
    let mut rec = Recorder::new(sampling);
    for j in 0..=params.steps {
        if rec.due(j) {
            traj.times.push(params.time(j));
            traj.steps.push(j);
            traj.u.push(u.clone());
            traj.v.as_mut().unwrap().push(v.clone());
        }
        if j == params.steps {
            break;
        }
        let fu = reaction(params, &u)?;
        cursor.advance(&mut dw);
        stepper.step(&mut u, &mut v, &fu, &dw);
        guard(&u, params.time(j + 1), j + 1)?;
        guard(&v, params.time(j + 1), j + 1)?;
    }
    traj.noise_audit = cursor.audit();
    Ok(traj)
}

/// Full singularly perturbed system driven by `noise`.
pub fn simulate_full(
    params: &ModelParams,
    noise: &NoisePath,
    u0: &SpectralField,
    u1: &SpectralField,
    sampling: &Sampling,
) -> Result<Trajectory> {
    params.check_noise(noise)?;
    full_wave_loop(params, NoiseCursor::new(noise), u0, u1, sampling)
}

/// Deterministic damped wave limit `nu u'' + u' = -A u + f(u)`.
pub fn simulate_det_wave(
    params: &ModelParams,
    u0: &SpectralField,
    u1: &SpectralField,
    sampling: &Sampling,
) -> Result<Trajectory> {
    full_wave_loop(params, NoiseCursor::silent(), u0, u1, sampling)
}

/// Stochastic heat limit `u' = -A u + f(u) + nu^alpha dW/dt` on the same path.
pub fn simulate_heat(
    params: &ModelParams,
    noise: &NoisePath,
    u0: &SpectralField,
    sampling: &Sampling,
) -> Result<Trajectory> {
    params.validate()?;
    params.check_noise(noise)?;
    check_initial(params, &[u0])?;
    sampling.validate(params.steps)?;
    let h = params.dt();
    let stepper = HeatStepper::new(params, h);
    let mut cursor = NoiseCursor::new(noise);
    let mut u = u0.clone();
    let mut dw = vec![0.0; params.basis.modes()];
    let mut traj = Trajectory {
        step_size: h,
        ..Default::default()
    };
    let mut rec = Recorder::new(sampling);
    for j in 0..=params.steps {
        if rec.due(j) {
            traj.times.push(params.time(j));
            traj.steps.push(j);
            traj.u.push(u.clone());
        }
        if j == params.steps {
            break;
        }
        let fu = reaction(params, &u)?;
        cursor.advance(&mut dw);
        stepper.step(&mut u, &fu, &dw);
        guard(&u, params.time(j + 1), j + 1)?;
    }
    traj.noise_audit = cursor.audit();
    Ok(traj)
}

/// Advances the full system together with `v1bar`, `v2bar`, `v3bar` and the
/// displacement reconstructed from `u' = v1bar/nu + v2bar + nu^(alpha-1/2) v3bar`.
///
/// Step integrals of the components follow from their own equations:
/// `int v1bar = nu (v1_n - v1_{n+1})`,
/// `int v2bar = nu (v2_n - v2_{n+1}) + h g_n`,
/// `int v3bar = nu (v3_n - v3_{n+1}) + sqrt(nu) dW_n`.
pub fn run_split(
    params: &ModelParams,
    noise: &NoisePath,
    u0: &SpectralField,
    u1: &SpectralField,
    sampling: &Sampling,
) -> Result<Trajectory> {
    params.validate()?;
    params.check_noise(noise)?;
    check_initial(params, &[u0, u1])?;
    sampling.validate(params.steps)?;
    let nu = params.nu;
    let h = params.dt();
    let n = params.basis.modes();
    let stepper = FullWaveStepper::new(params, h);
    let (ou_decay, ou_gain) = ou_coefficients(nu, h);
    let v3_weight = nu.powf(params.alpha - 0.5);
    let sqrt_nu = nu.sqrt();

    let mut cursor = NoiseCursor::new(noise);
    let (mut u, mut v) = (u0.clone(), u1.clone());
    let mut v1 = evolve_v1(nu, u1, 0.0);
    let mut v2 = SpectralField::zeros(n);
    let mut v3 = SpectralField::zeros(n);
    let mut u_split = u0.clone();
    let mut dw = vec![0.0; n];

    let mut traj = Trajectory {
        step_size: h,
        v: Some(Vec::new()),
        split: Some(Vec::new()),
        u_split: Some(Vec::new()),
        ..Default::default()
    };
    let mut rec = Recorder::new(sampling);
    for j in 0..=params.steps {
        let t = params.time(j);
        if rec.due(j) {
            traj.times.push(t);
            traj.steps.push(j);
            traj.u.push(u.clone());
            traj.v.as_mut().unwrap().push(v.clone());
            traj.split.as_mut().unwrap().push(SplitState {
                v1bar: v1.clone(),
                v2bar: v2.clone(),
                v3bar: v3.clone(),
                t,
            });
            traj.u_split.as_mut().unwrap().push(u_split.clone());
        }
        if j == params.steps {
            break;
        }
        let fu = reaction(params, &u)?;
        let mut g = params.basis.laplacian(&u);
        g.axpy(1.0, &fu);
        cursor.advance(&mut dw);

        let v1_next = evolve_v1(nu, u1, params.time(j + 1));
        let mut v2_next = v2.clone();
        relax_towards(&mut v2_next, &g, nu, h);
        for k in 0..n {
            let v3_next = ou_decay * v3.coeffs[k] + ou_gain * dw[k];
            let int1 = nu * (v1.coeffs[k] - v1_next.coeffs[k]);
            let int2 = nu * (v2.coeffs[k] - v2_next.coeffs[k]) + h * g.coeffs[k];
            let int3 = nu * (v3.coeffs[k] - v3_next) + sqrt_nu * dw[k];
            u_split.coeffs[k] += int1 / nu + int2 + v3_weight * int3;
            v3.coeffs[k] = v3_next;
        }
        v1 = v1_next;
        v2 = v2_next;
        stepper.step(&mut u, &mut v, &fu, &dw);
        let t_next = params.time(j + 1);
        for x in [&u, &v, &v2, &v3, &u_split] {
            guard(x, t_next, j + 1)?;
        }
    }
    traj.noise_audit = cursor.audit();
    Ok(traj)
}

/// `max_t || nu v - v1bar - nu v2bar - nu^(alpha+1/2) v3bar ||_0` over the
/// samples of a split run.
pub fn reconstruction_defect(params: &ModelParams, traj: &Trajectory) -> Result<f64> {
    let v = traj.v.as_ref().ok_or(Error::MissingData("velocity samples"))?;
    let split = traj.split.as_ref().ok_or(Error::MissingData("split components"))?;
    let nu = params.nu;
    let w3 = nu.powf(params.alpha + 0.5);
    Ok(v.iter()
        .zip(split)
        .map(|(v, s)| {
            let mut r = v.scaled(nu);
            r.axpy(-1.0, &s.v1bar);
            r.axpy(-nu, &s.v2bar);
            r.axpy(-w3, &s.v3bar);
            r.norm()
        })
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn params(nu: f64, alpha: f64, modes: usize, steps: usize, f: Nonlinearity, q: CovarianceSpectrum) -> ModelParams {
        ModelParams::new(nu, alpha, 1.0, steps, SpectralBasis::new(1.0, modes).unwrap(), f, q).unwrap()
    }

    #[test]
    fn alpha_one_rejected() {
        let err = ModelParams::new(
            0.1,
            1.0,
            1.0,
            10,
            SpectralBasis::new(1.0, 2).unwrap(),
            Nonlinearity::CubicDefault,
            CovarianceSpectrum::default_for(2),
        )
        .unwrap_err();
        assert!(err.to_string().contains("deferred"));
    }

    #[test]
    fn invalid_params_list_all() {
        match ModelParams::new(
            -1.0,
            -2.0,
            0.0,
            0,
            SpectralBasis::new(1.0, 2).unwrap(),
            Nonlinearity::CubicDefault,
            CovarianceSpectrum::default_for(3),
        ) {
            Err(Error::Config(v)) => assert_eq!(v.len(), 5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn propagator_is_continuous_across_critical_damping() {
        let nu = 0.25;
        let crit = 1.0 / (4.0 * nu);
        let h = 0.1;
        let a = ModePropagator::new(crit * (1.0 - 1e-12), nu, h);
        let b = ModePropagator::new(crit * (1.0 + 1e-12), nu, h);
        let c = ModePropagator::new(crit, nu, h);
        assert!((a.c0 - c.c0).abs() < 1e-9 && (a.c1 - c.c1).abs() < 1e-9);
        assert!((b.c0 - c.c0).abs() < 1e-9 && (b.c1 - c.c1).abs() < 1e-9);
    }

    #[test]
    fn propagator_has_no_overflow_when_very_stiff() {
        let p = ModePropagator::new(PI * PI, 1e-6, 0.5);
        assert!(p.c0.is_finite() && p.c1.is_finite());
        // the slow root dominates: c0 ~ exp(-lambda h)
        assert!((p.c0 - (-PI * PI * 0.5f64).exp()).abs() < 1e-4);
    }

    #[test]
    fn zero_state_stays_zero() {
        let p = params(0.1, 0.0, 4, 50, Nonlinearity::CubicDefault, CovarianceSpectrum::zero(4));
        let noise = NoisePath::sample(&p.q, 1.0, 50, 1).unwrap();
        let z = SpectralField::zeros(4);
        let t = simulate_full(&p, &noise, &z, &z, &Sampling::every(10, 50)).unwrap();
        assert!(t.u.iter().all(|u| u.coeffs.iter().all(|&a| a == 0.0)));
        let t = simulate_heat(&p, &noise, &z, &Sampling::every(10, 50)).unwrap();
        assert!(t.u.iter().all(|u| u.coeffs.iter().all(|&a| a == 0.0)));
    }

    #[test]
    fn evolve_v1_values() {
        let u1 = SpectralField::from_coeffs(vec![1.0, 0.0]);
        assert_eq!(evolve_v1(0.3, &u1, 0.0).coeffs, vec![0.3, 0.0]);
        let v = evolve_v1(0.1, &u1, 0.1);
        assert!((v.coeffs[0] - 0.1 * (-1f64).exp()).abs() < 1e-16);
        assert!((v.coeffs[0] - 0.0367879).abs() < 1e-7);
        let far = evolve_v1(0.1, &u1, 10.0);
        assert!(far.norm() <= 0.1 * (-100f64).exp() * 1.0 + 1e-300);
    }

    #[test]
    fn v2_decay_and_relaxation() {
        let p = params(0.01, 0.0, 2, 10, Nonlinearity::Zero, CovarianceSpectrum::zero(2));
        let e1 = SpectralField::from_coeffs(vec![1.0, 0.0]);
        let zero = SpectralField::zeros(2);
        let h = 0.01 * 2f64.ln();
        let out = step_v2(&e1, &zero, &p, h).unwrap();
        assert!((out.coeffs[0] - 0.5).abs() < 1e-15);
        let u = SpectralField::from_coeffs(vec![0.2, -0.1]);
        let g = drift(&p, &u).unwrap();
        let out = step_v2(&zero, &u, &p, 10.0).unwrap();
        assert!(out.distance(&g) < 1e-12);
    }

    #[test]
    fn v3_pure_decay_without_noise() {
        let p = params(0.1, 0.0, 2, 10, Nonlinearity::Zero, CovarianceSpectrum::zero(2));
        let x = SpectralField::from_coeffs(vec![1.0, -2.0]);
        let out = step_v3(&x, &p, &[0.0, 0.0], 0.05);
        let d = (-0.5f64).exp();
        assert!((out.coeffs[0] - d).abs() < 1e-15 && (out.coeffs[1] + 2.0 * d).abs() < 1e-15);
    }

    #[test]
    fn heat_mode_one_decay() {
        let p = params(0.1, 0.0, 3, 64, Nonlinearity::Zero, CovarianceSpectrum::zero(3));
        let noise = NoisePath::sample(&p.q, 1.0, 64, 0).unwrap();
        let e1 = p.basis.unit(1).unwrap();
        let t = simulate_heat(&p, &noise, &e1, &Sampling::every(16, 64)).unwrap();
        for (ti, u) in t.times.iter().zip(&t.u) {
            let exact = (-PI * PI * ti).exp();
            assert!((u.coeffs[0] - exact).abs() <= 1e-12 * exact.max(1e-300) + 1e-15);
        }
    }

    #[test]
    fn detwave_matches_noiseless_full_bitwise() {
        let p = params(
            0.05,
            2.0,
            8,
            200,
            Nonlinearity::CubicDefault,
            CovarianceSpectrum::zero(8),
        );
        let noise = NoisePath::sample(&p.q, 1.0, 200, 4).unwrap();
        let u0 = SpectralField::from_coeffs(vec![0.8, 0.3, 0.0, -0.1, 0.0, 0.0, 0.0, 0.0]);
        let u1 = SpectralField::from_coeffs(vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5]);
        let s = Sampling::every(1, 200);
        let a = simulate_full(&p, &noise, &u0, &u1, &s).unwrap();
        let b = simulate_det_wave(&p, &u0, &u1, &s).unwrap();
        assert_eq!(a.u, b.u);
        assert_eq!(a.v, b.v);
    }

    #[test]
    fn noise_consumption_is_identical_across_models() {
        let p = params(
            0.01,
            0.0,
            6,
            128,
            Nonlinearity::CubicDefault,
            CovarianceSpectrum::default_for(6),
        );
        let noise = NoisePath::sample(&p.q, 1.0, 128, 99).unwrap();
        let z = SpectralField::zeros(6);
        let s = Sampling::final_only(128);
        let a = simulate_full(&p, &noise, &z, &z, &s).unwrap();
        let b = simulate_heat(&p, &noise, &z, &s).unwrap();
        let c = run_split(&p, &noise, &z, &z, &s).unwrap();
        assert_eq!(a.noise_audit, b.noise_audit);
        assert_eq!(a.noise_audit, c.noise_audit);
        assert_eq!(a.noise_audit.steps, 128);
    }

    #[test]
    fn mismatched_noise_grid_rejected() {
        let p = params(0.1, 0.0, 2, 64, Nonlinearity::Zero, CovarianceSpectrum::default_for(2));
        let noise = NoisePath::sample(&p.q, 1.0, 128, 0).unwrap();
        let z = SpectralField::zeros(2);
        assert!(simulate_full(&p, &noise, &z, &z, &Sampling::final_only(64)).is_err());
        assert!(simulate_full(&p, &noise.coarsen(2).unwrap(), &z, &z, &Sampling::final_only(64)).is_ok());
    }

    #[test]
    fn blow_up_is_reported() {
        // f(s) = s^3 is not dissipative; a large start blows up
        let p = params(
            0.1,
            0.0,
            2,
            1000,
            Nonlinearity::polynomial(&[0.0, 0.0, 0.0, 1.0]).unwrap(),
            CovarianceSpectrum::zero(2),
        );
        let u0 = SpectralField::from_coeffs(vec![20.0, 0.0]);
        let z = SpectralField::zeros(2);
        let err = simulate_det_wave(&p, &u0, &z, &Sampling::final_only(1000)).unwrap_err();
        assert!(matches!(err, Error::BlowUp { .. }), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn split_components_vanish_in_degenerate_cases() {
        let p = params(
            0.05,
            0.5,
            4,
            100,
            Nonlinearity::CubicDefault,
            CovarianceSpectrum::zero(4),
        );
        let noise = NoisePath::sample(&p.q, 1.0, 100, 0).unwrap();
        let u0 = SpectralField::from_coeffs(vec![0.5, 0.0, 0.1, 0.0]);
        let u1 = SpectralField::from_coeffs(vec![0.0, 1.0, 0.0, 0.0]);
        let t = run_split(&p, &noise, &u0, &u1, &Sampling::every(10, 100)).unwrap();
        assert!(t.split.as_ref().unwrap().iter().all(|s| s.v3bar.max_abs() == 0.0));

        let q = CovarianceSpectrum::default_for(4);
        let p = params(0.05, 0.5, 4, 100, Nonlinearity::CubicDefault, q);
        let noise = NoisePath::sample(&p.q, 1.0, 100, 0).unwrap();
        let t = run_split(&p, &noise, &u0, &SpectralField::zeros(4), &Sampling::every(10, 100)).unwrap();
        assert!(t.split.as_ref().unwrap().iter().all(|s| s.v1bar.max_abs() == 0.0));
    }
}
