//! Weak pairings, error norms between coupled trajectories, the weak-identity
//! term audit, Monte Carlo ensembles and log-log rate fits.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{drift, ModelParams, Trajectory};
use crate::error::{Error, Result};
use crate::noise::{replica_seed, NoisePath};
use crate::spectral::SpectralField;

/// Temporal factor `g(t)` of a separable test function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Temporal {
    /// `sum_i c_i t^i`
    Polynomial { coefficients: Vec<f64> },
    /// `a cos(w t) + b sin(w t)`
    Trig { cos: f64, sin: f64, omega: f64 },
}

impl Temporal {
    pub fn constant(c: f64) -> Self {
        Temporal::Polynomial { coefficients: vec![c] }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            Temporal::Polynomial { coefficients } => coefficients.iter().rev().fold(0.0, |acc, c| acc * t + c),
            Temporal::Trig { cos, sin, omega } => cos * (omega * t).cos() + sin * (omega * t).sin(),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            Temporal::Polynomial { coefficients } => coefficients
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (i, c)| acc * t + i as f64 * c),
            Temporal::Trig { cos, sin, omega } => omega * (sin * (omega * t).cos() - cos * (omega * t).sin()),
        }
    }
}

/// `phi(t, x) = g(t) sum_k p_k e_k(x)`; vanishes on the boundary because every
/// basis function does.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub spatial: SpectralField,
    pub temporal: Temporal,
}

impl TestFunction {
    pub fn new(spatial: SpectralField, temporal: Temporal) -> Self {
        Self { spatial, temporal }
    }

    pub fn at(&self, t: f64) -> SpectralField {
        self.spatial.scaled(self.temporal.value(t))
    }

    pub fn time_derivative_at(&self, t: f64) -> SpectralField {
        self.spatial.scaled(self.temporal.derivative(t))
    }
}

/// `<u(t), phi(t)>` at a sample time of the trajectory.
pub fn weak_pairing(traj: &Trajectory, phi: &TestFunction, t: f64) -> Result<f64> {
    let i = traj.index_of(t).ok_or(Error::OffGrid(t))?;
    let u = &traj.u[i];
    if u.len() != phi.spatial.len() {
        return Err(Error::Dimension {
            expected: u.len(),
            got: phi.spatial.len(),
        });
    }
    Ok(phi.temporal.value(traj.times[i]) * u.dot(&phi.spatial))
}

/// Terms of the weak identity at one time.
///
/// `lhs = <u(t),phi(t)> - <u0,phi(0)> - int <u,phi_t> - int <u,Lap phi> - int <f(u),phi>`
/// and the right-hand side is `v1_term + v2_boundary + v2_integral + v3_term`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub t: f64,
    pub lhs: f64,
    /// `(1/nu) int <v1bar, phi>`
    pub v1_term: f64,
    /// `-nu <v2bar(t), phi(t)>`
    pub v2_boundary: f64,
    /// `nu int <v2bar, phi_t>`
    pub v2_integral: f64,
    /// `nu^(alpha-1/2) int <v3bar, phi>`
    pub v3_term: f64,
    /// `nu^alpha int <phi, dW>` (left-point)
    pub ito: f64,
    /// `lhs - (v1_term + v2_boundary + v2_integral + v3_term)`
    pub defect: f64,
}

impl AuditRow {
    /// `v3_term - ito`
    pub fn v3_residual(&self) -> f64 {
        self.v3_term - self.ito
    }
}

/// Evaluates every term of the weak identity along a split run recorded at
/// every step. Rows are returned for every grid time.
///
/// Step integrals of `v1bar`, `v2bar`, `v3bar` are taken from their own
/// equations (see [`crate::dynamics::run_split`]) and paired with the
/// step-averaged test function; integrals of `u` and `f(u)` use the trapezoid
/// rule.
pub fn expansion_audit(
    params: &ModelParams,
    noise: &NoisePath,
    traj: &Trajectory,
    phi: &TestFunction,
) -> Result<Vec<AuditRow>> {
    let split = traj.split.as_ref().ok_or(Error::MissingData("split components"))?;
    if traj.steps.len() != params.steps + 1 || traj.steps.iter().enumerate().any(|(i, &s)| i != s) {
        return Err(Error::MissingData("samples at every integrator step"));
    }
    if noise.steps() != params.steps || noise.modes() != params.basis.modes() {
        return Err(Error::config("noise grid does not match the audited run"));
    }
    params.basis.check(&phi.spatial)?;

    let nu = params.nu;
    let h = params.dt();
    let sqrt_nu = nu.sqrt();
    let w3 = nu.powf(params.alpha - 0.5);
    let sigma = params.sigma();
    let ps = &phi.spatial;
    let lap_ps = params.basis.laplacian(ps);
    let g = |t: f64| phi.temporal.value(t);
    let dg = |t: f64| phi.temporal.derivative(t);

    // per-step pairings with the spatial profile
    let mut pu = Vec::with_capacity(traj.len());
    let mut plap = Vec::with_capacity(traj.len());
    let mut pf = Vec::with_capacity(traj.len());
    let mut pg = Vec::with_capacity(traj.len());
    for u in &traj.u {
        let drift_u = drift(params, u)?;
        let lap_u_dot = u.dot(&lap_ps);
        pu.push(u.dot(ps));
        plap.push(lap_u_dot);
        // <f(u), p> = <g(u), p> - <Lap u, p>, and <Lap u, p> = <u, Lap p>
        pf.push(drift_u.dot(ps) - lap_u_dot);
        pg.push(drift_u.dot(ps));
    }

    let mut rows = Vec::with_capacity(traj.len());
    let (mut int_u_phit, mut int_u_lap, mut int_f) = (0.0, 0.0, 0.0);
    let (mut int_v1, mut int_v2t, mut int_v3, mut ito) = (0.0, 0.0, 0.0, 0.0);
    let u0_pair = g(0.0) * pu[0];
    for n in 0..traj.len() {
        let t = traj.times[n];
        if n > 0 {
            let m = n - 1;
            let (ta, tb) = (traj.times[m], t);
            let (ga, gb) = (g(ta), g(tb));
            let (da, db) = (dg(ta), dg(tb));
            let g_mid = 0.5 * (ga + gb);
            let d_mid = 0.5 * (da + db);
            int_u_phit += 0.5 * h * (da * pu[m] + db * pu[n]);
            int_u_lap += 0.5 * h * (ga * plap[m] + gb * plap[n]);
            int_f += 0.5 * h * (ga * pf[m] + gb * pf[n]);

            let (s0, s1) = (&split[m], &split[n]);
            let mut dw_pair = 0.0;
            let mut i1 = 0.0;
            let mut i2 = 0.0;
            let mut i3 = 0.0;
            for k in 0..ps.len() {
                let dw = noise.increment(k, m);
                dw_pair += ps.coeffs[k] * dw;
                i1 += ps.coeffs[k] * nu * (s0.v1bar.coeffs[k] - s1.v1bar.coeffs[k]);
                i2 += ps.coeffs[k] * nu * (s0.v2bar.coeffs[k] - s1.v2bar.coeffs[k]);
                i3 += ps.coeffs[k] * (nu * (s0.v3bar.coeffs[k] - s1.v3bar.coeffs[k]) + sqrt_nu * dw);
            }
            i2 += h * pg[m];
            int_v1 += g_mid * i1;
            int_v2t += d_mid * i2;
            int_v3 += g_mid * i3;
            ito += ga * dw_pair;
        }
        let lhs = g(t) * pu[n] - u0_pair - int_u_phit - int_u_lap - int_f;
        let v1_term = int_v1 / nu;
        let v2_boundary = -nu * g(t) * split[n].v2bar.dot(ps);
        let v2_integral = nu * int_v2t;
        let v3_term = w3 * int_v3;
        rows.push(AuditRow {
            t,
            lhs,
            v1_term,
            v2_boundary,
            v2_integral,
            v3_term,
            ito: sigma * ito,
            defect: lhs - (v1_term + v2_boundary + v2_integral + v3_term),
        });
    }
    Ok(rows)
}

/// Per-time `L2` distances between two trajectories and their maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub times: Vec<f64>,
    pub errors: Vec<f64>,
    pub sup_error: f64,
    pub nu: f64,
    pub alpha: f64,
    pub seed: u64,
}

impl ErrorReport {
    pub fn with_echo(mut self, nu: f64, alpha: f64, seed: u64) -> Self {
        self.nu = nu;
        self.alpha = alpha;
        self.seed = seed;
        self
    }
}

/// `max_t ||a(t) - b(t)||_0` over the shared sample times.
pub fn sup_error(a: &Trajectory, b: &Trajectory) -> Result<ErrorReport> {
    if a.times.len() != b.times.len() || a.steps != b.steps || a.times.iter().zip(&b.times).any(|(x, y)| x != y) {
        return Err(Error::config("trajectories have different sample grids"));
    }
    let errors: Vec<f64> = a.u.iter().zip(&b.u).map(|(x, y)| x.distance(y)).collect();
    Ok(ErrorReport {
        times: a.times.clone(),
        sup_error: errors.iter().copied().fold(0.0, f64::max),
        errors,
        nu: f64::NAN,
        alpha: f64::NAN,
        seed: 0,
    })
}

/// Least-squares line through `(ln nu, ln error)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn rate_fit(points: &[(f64, f64)]) -> Result<RateFit> {
    if let Some((nu, e)) = points.iter().find(|(_, e)| !(*e > 0.0)) {
        return Err(Error::Fit(format!(
            "error {e} at nu = {nu} is below noise floor (must be > 0)"
        )));
    }
    if points.iter().any(|(nu, _)| !(*nu > 0.0)) {
        return Err(Error::Fit("nu values must be positive".into()));
    }
    let mut distinct: Vec<f64> = points.iter().map(|p| p.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::Fit(format!(
            "need at least 3 distinct nu values, got {}",
            distinct.len()
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(RateFit {
        points: points.to_vec(),
        slope,
        intercept,
        r2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

/// Sample mean and standard error, summed in the given order.
pub fn mean_stderr(values: &[f64]) -> EnsembleStats {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let stderr = if n > 1 {
        let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        f64::NAN
    };
    EnsembleStats { mean, stderr, count: n }
}

/// Runs `job(replica_index, replica_seed)` for every replica and returns the
/// results in replica order. With `threads > 1` replicas run on a dedicated
/// pool; the output does not depend on scheduling.
pub fn ensemble_map<T, F>(replicas: usize, base_seed: u64, threads: usize, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, u64) -> Result<T> + Sync + Send,
{
    let run = |r: usize| job(r, replica_seed(base_seed, r as u64));
    if threads <= 1 {
        return (0..replicas).map(run).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::config(format!("thread pool: {e}")))?;
    pool.install(|| (0..replicas).into_par_iter().map(run).collect())
}

/// Mean and standard error of a scalar statistic over `replicas >= 2` runs.
pub fn ensemble<F>(replicas: usize, base_seed: u64, threads: usize, stat: F) -> Result<EnsembleStats>
where
    F: Fn(usize, u64) -> Result<f64> + Sync + Send,
{
    if replicas < 2 {
        return Err(Error::config("an ensemble needs at least 2 replicas"));
    }
    let values = ensemble_map(replicas, base_seed, threads, stat)?;
    Ok(mean_stderr(&values))
}
