use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::analysis::{ensemble_map, expansion_audit, mean_stderr, rate_fit, sup_error, EnsembleStats};
use crate::dynamics::{
    reconstruction_defect, run_split, simulate_det_wave, simulate_full, simulate_heat, ModelParams, Sampling,
    Trajectory,
};
use crate::error::{Error, Result};
use crate::harness::config::{ExperimentConfig, ExperimentKind};
use crate::harness::oracle::{run_oracle_suite, OracleCheck};
use crate::noise::{replica_seed, NoisePath};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// One line of `errors.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub nu: f64,
    pub alpha: f64,
    pub seed: u64,
    pub t: f64,
    pub l2_error: f64,
}

/// One line of `rates.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub experiment: String,
    pub alpha: f64,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub n_points: usize,
}

/// Weak-identity terms of one split run at one output time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditLine {
    pub nu: f64,
    pub seed: u64,
    pub t: f64,
    pub lhs: f64,
    pub v1_term: f64,
    pub v2_boundary: f64,
    pub v2_integral: f64,
    pub v3_term: f64,
    pub ito: f64,
    pub v3_residual: f64,
    pub defect: f64,
}

/// Ensemble statistic of one quantity at one `nu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuStat {
    pub quantity: String,
    pub nu: f64,
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

impl NuStat {
    fn new(quantity: &str, nu: f64, s: EnsembleStats) -> Self {
        Self {
            quantity: quantity.into(),
            nu,
            mean: s.mean,
            stderr: s.stderr,
            count: s.count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub version: String,
    pub kind: ExperimentKind,
    /// Canonical config text; parsing it reproduces this run.
    pub config: String,
    pub wall_time_s: f64,
    pub q_trace: f64,
    pub q_weighted_trace: f64,
    pub seeds: Vec<u64>,
    pub errors: Vec<ErrorRow>,
    pub stats: Vec<NuStat>,
    pub rates: Vec<RateRow>,
    pub audit: Vec<AuditLine>,
    pub oracle: Vec<OracleCheck>,
    pub notes: Vec<String>,
}

impl RunRecord {
    pub fn empty(config: &ExperimentConfig) -> Self {
        Self {
            version: VERSION.into(),
            kind: config.kind,
            config: config.to_toml(),
            wall_time_s: 0.0,
            q_trace: 0.0,
            q_weighted_trace: 0.0,
            seeds: Vec::new(),
            errors: Vec::new(),
            stats: Vec::new(),
            rates: Vec::new(),
            audit: Vec::new(),
            oracle: Vec::new(),
            notes: Vec::new(),
        }
    }

    /// Ensemble means of `quantity`, ordered as the `nu` grid.
    pub fn means(&self, quantity: &str) -> Vec<(f64, f64)> {
        self.stats
            .iter()
            .filter(|s| s.quantity == quantity)
            .map(|s| (s.nu, s.mean))
            .collect()
    }

    pub fn rate(&self, experiment: &str) -> Option<&RateRow> {
        self.rates.iter().find(|r| r.experiment == experiment)
    }

    pub fn oracle_passed(&self) -> bool {
        self.oracle.iter().all(|c| c.passed)
    }
}

/// Per-replica output, reduced in replica order afterwards.
#[derive(Default)]
struct ReplicaOut {
    errors: Vec<ErrorRow>,
    /// `(quantity, nu index, value)`
    scalars: Vec<(&'static str, usize, f64)>,
    /// Per-time series `(quantity, nu index, values)` averaged across replicas
    /// before taking the sup over time.
    series: Vec<(&'static str, usize, Vec<f64>)>,
    audit: Vec<AuditLine>,
}

fn provenance(e: Error, nu: f64, seed: u64) -> Error {
    e.context(format!("nu = {nu}, seed = {seed}"))
}

fn comparison(
    config: &ExperimentConfig,
    params: &ModelParams,
    noise: &NoisePath,
    seed: u64,
    out: &mut ReplicaOut,
    i: usize,
) -> Result<()> {
    let u0 = config.initial_displacement();
    let u1 = config.initial_velocity(params)?;
    let sampling = config.sampling();
    let full = simulate_full(params, noise, &u0, &u1, &sampling)?;
    let limit = match config.kind {
        ExperimentKind::FullVsDetwave => simulate_det_wave(params, &u0, &u1, &sampling)?,
        _ => simulate_heat(params, noise, &u0, &sampling)?,
    };
    let report = sup_error(&full, &limit)?;
    for (&t, &e) in report.times.iter().zip(&report.errors) {
        out.errors.push(ErrorRow {
            nu: params.nu,
            alpha: params.alpha,
            seed,
            t,
            l2_error: e,
        });
    }
    out.scalars.push(("sup_error", i, report.sup_error));
    Ok(())
}

fn audit(
    config: &ExperimentConfig,
    params: &ModelParams,
    noise: &NoisePath,
    seed: u64,
    out: &mut ReplicaOut,
    i: usize,
) -> Result<()> {
    let u0 = config.initial_displacement();
    let u1 = config.initial_velocity(params)?;
    let traj = run_split(params, noise, &u0, &u1, &Sampling::every(1, params.steps))?;
    let rows = expansion_audit(params, noise, &traj, &config.test_function())?;
    let split_u = traj
        .u_split
        .as_ref()
        .ok_or(Error::MissingData("reconstructed displacement"))?;
    let mut sup = [0.0f64; 5];
    for &j in &config.output_steps {
        let r = &rows[j];
        out.audit.push(AuditLine {
            nu: params.nu,
            seed,
            t: r.t,
            lhs: r.lhs,
            v1_term: r.v1_term,
            v2_boundary: r.v2_boundary,
            v2_integral: r.v2_integral,
            v3_term: r.v3_term,
            ito: r.ito,
            v3_residual: r.v3_residual(),
            defect: r.defect,
        });
        out.errors.push(ErrorRow {
            nu: params.nu,
            alpha: params.alpha,
            seed,
            t: r.t,
            l2_error: traj.u[j].distance(&split_u[j]),
        });
        let terms = [r.v1_term, r.v2_boundary, r.v2_integral, r.v3_residual(), r.defect];
        for (s, x) in sup.iter_mut().zip(terms) {
            *s = s.max(x.abs());
        }
    }
    for (name, s) in AUDIT_COLUMNS.iter().zip(sup) {
        out.scalars.push((name, i, s));
    }
    out.scalars
        .push(("reconstruction_defect", i, reconstruction_defect(params, &traj)?));
    Ok(())
}

const AUDIT_COLUMNS: [&str; 5] = ["v1_term", "v2_boundary", "v2_integral", "v3_residual", "defect"];

fn scaling(
    config: &ExperimentConfig,
    params: &ModelParams,
    noise: &NoisePath,
    out: &mut ReplicaOut,
    i: usize,
) -> Result<()> {
    let u0 = config.initial_displacement();
    let u1 = config.initial_velocity(params)?;
    let traj: Trajectory = run_split(params, noise, &u0, &u1, &config.sampling())?;
    let basis = &params.basis;
    let u_h1 = traj.u.iter().map(|u| basis.sobolev_norm(u, 1.0)).fold(0.0, f64::max);
    let split = traj.split.as_ref().ok_or(Error::MissingData("split components"))?;
    let v2: Vec<f64> = split.iter().map(|s| basis.sobolev_norm(&s.v2bar, -1.0)).collect();
    out.scalars.push(("sup_u_h1", i, u_h1));
    out.series.push(("v2_hm1", i, v2));
    Ok(())
}

fn replica(config: &ExperimentConfig, base: &[ModelParams], seed: u64) -> Result<ReplicaOut> {
    let first = &base[0];
    let noise = NoisePath::sample(&first.q, config.horizon, config.steps, seed)?;
    let mut out = ReplicaOut::default();
    for (i, params) in base.iter().enumerate() {
        let r = match config.kind {
            ExperimentKind::FullVsHeat | ExperimentKind::FullVsDetwave => {
                comparison(config, params, &noise, seed, &mut out, i)
            }
            ExperimentKind::SplitAudit => audit(config, params, &noise, seed, &mut out, i),
            ExperimentKind::ComponentScaling => scaling(config, params, &noise, &mut out, i),
            ExperimentKind::OracleSuite => Ok(()),
        };
        r.map_err(|e| provenance(e, params.nu, seed))?;
    }
    Ok(out)
}

fn fit(record: &mut RunRecord, name: &str, alpha: f64, points: &[(f64, f64)]) {
    match rate_fit(points) {
        Ok(f) => record.rates.push(RateRow {
            experiment: name.into(),
            alpha,
            slope: f.slope,
            intercept: f.intercept,
            r2: f.r2,
            n_points: f.points.len(),
        }),
        Err(e) => record.notes.push(format!("{name}: {e}")),
    }
}

/// Runs the experiment described by `config`. Every replica draws one master
/// noise path that all models and every `nu` consume.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunRecord> {
    config.validate()?;
    let start = Instant::now();
    let mut record = RunRecord::empty(config);
    let q = config.covariance()?;
    let basis = config.basis()?;
    record.q_trace = q.trace();
    record.q_weighted_trace = q.weighted_trace(&basis);

    if config.kind == ExperimentKind::OracleSuite {
        record.oracle = run_oracle_suite()?;
        record.wall_time_s = start.elapsed().as_secs_f64();
        return Ok(record);
    }

    let base: Vec<ModelParams> = config.nu.iter().map(|&nu| config.params(nu)).collect::<Result<_>>()?;
    record.seeds = (0..config.replicas)
        .map(|r| replica_seed(config.seed, r as u64))
        .collect();
    let outs = ensemble_map(config.replicas, config.seed, config.threads, |_, seed| {
        replica(config, &base, seed)
    })?;

    for o in &outs {
        record.errors.extend_from_slice(&o.errors);
        record.audit.extend_from_slice(&o.audit);
    }
    // nu-major row order regardless of replica order
    let nu_index = |nu: f64| config.nu.iter().position(|&x| x == nu).unwrap_or(0);
    record.errors.sort_by_key(|r| nu_index(r.nu));
    record.audit.sort_by_key(|r| nu_index(r.nu));

    let mut quantities: Vec<&'static str> = Vec::new();
    for o in &outs {
        for (name, _, _) in &o.scalars {
            if !quantities.contains(name) {
                quantities.push(name);
            }
        }
    }
    for name in &quantities {
        for (i, &nu) in config.nu.iter().enumerate() {
            let values: Vec<f64> = outs
                .iter()
                .flat_map(|o| o.scalars.iter().filter(|s| s.0 == *name && s.1 == i).map(|s| s.2))
                .collect();
            record.stats.push(NuStat::new(name, nu, mean_stderr(&values)));
        }
    }
    // sup over time of the ensemble mean
    if outs.iter().any(|o| !o.series.is_empty()) {
        for (i, &nu) in config.nu.iter().enumerate() {
            let series: Vec<&Vec<f64>> = outs
                .iter()
                .flat_map(|o| o.series.iter().filter(|s| s.1 == i).map(|s| &s.2))
                .collect();
            let len = series[0].len();
            let (mut best, mut best_t) = (f64::NEG_INFINITY, 0);
            for t in 0..len {
                let values: Vec<f64> = series.iter().map(|s| s[t]).collect();
                let m = mean_stderr(&values).mean;
                if m > best {
                    best = m;
                    best_t = t;
                }
            }
            let at_best: Vec<f64> = series.iter().map(|s| s[best_t]).collect();
            record
                .stats
                .push(NuStat::new("sup_mean_v2_hm1", nu, mean_stderr(&at_best)));
        }
    }

    let alpha = config.alpha;
    match config.kind {
        ExperimentKind::FullVsHeat | ExperimentKind::FullVsDetwave => {
            let name = config.kind.name();
            let raw = record.means("sup_error");
            fit(&mut record, name, alpha, &raw);
            // nu^-alpha below the critical exponent, nu^-1 above it
            let power = if config.kind == ExperimentKind::FullVsHeat {
                alpha
            } else {
                1.0
            };
            let normalized: Vec<(f64, f64)> = raw.iter().map(|&(nu, e)| (nu, e * nu.powf(-power))).collect();
            fit(&mut record, &format!("{name}_normalized"), alpha, &normalized);
        }
        ExperimentKind::SplitAudit => {
            for col in AUDIT_COLUMNS.iter().take(4) {
                let pts = record.means(col);
                fit(&mut record, &format!("split_audit_{col}"), alpha, &pts);
            }
        }
        ExperimentKind::ComponentScaling => {
            for q in ["sup_u_h1", "sup_mean_v2_hm1"] {
                let pts = record.means(q);
                fit(&mut record, &format!("component_scaling_{q}"), alpha, &pts);
            }
        }
        ExperimentKind::OracleSuite => {}
    }
    record.wall_time_s = start.elapsed().as_secs_f64();
    Ok(record)
}

/// Rebuilds rate fits from `errors.csv` rows: sup over time per run, mean over
/// seeds per `nu`, then raw and `nu^-alpha`-normalized fits.
pub fn rates_from_errors(rows: &[ErrorRow]) -> Result<Vec<RateRow>> {
    let mut nus: Vec<f64> = Vec::new();
    let mut alpha = None;
    for r in rows {
        if !nus.contains(&r.nu) {
            nus.push(r.nu);
        }
        match alpha {
            None => alpha = Some(r.alpha),
            Some(a) if a != r.alpha => return Err(Error::Fit("errors table mixes several alpha values".into())),
            _ => {}
        }
    }
    let alpha = alpha.ok_or_else(|| Error::Fit("errors table is empty".into()))?;
    let mut points = Vec::new();
    for &nu in &nus {
        let mut seeds: Vec<(u64, f64)> = Vec::new();
        for r in rows.iter().filter(|r| r.nu == nu) {
            match seeds.iter_mut().find(|s| s.0 == r.seed) {
                Some(s) => s.1 = s.1.max(r.l2_error),
                None => seeds.push((r.seed, r.l2_error)),
            }
        }
        let sups: Vec<f64> = seeds.iter().map(|s| s.1).collect();
        points.push((nu, mean_stderr(&sups).mean));
    }
    let mut out = Vec::new();
    let power = if alpha > 1.0 { 1.0 } else { alpha };
    for (name, pts) in [
        ("raw", points.clone()),
        (
            "normalized",
            points.iter().map(|&(nu, e)| (nu, e * nu.powf(-power))).collect(),
        ),
    ] {
        let f = rate_fit(&pts)?;
        out.push(RateRow {
            experiment: name.into(),
            alpha,
            slope: f.slope,
            intercept: f.intercept,
            r2: f.r2,
            n_points: pts.len(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::parse_config;

    const SMALL: &str = "[basis]\nmodes = 4\n[model]\nnu = [0.1, 0.01, 0.001]\n[time]\nsteps = 256\nsamples = 8\n[ensemble]\nreplicas = 2\nseed = 5\n";

    #[test]
    fn comparison_run_shapes() {
        let c = parse_config(SMALL).unwrap();
        let r = run_experiment(&c).unwrap();
        assert_eq!(r.errors.len(), 3 * 2 * 9);
        assert_eq!(r.means("sup_error").len(), 3);
        assert!(r.rate("full_vs_heat").is_some());
        assert!(r.rate("full_vs_heat_normalized").is_some());
        assert_eq!(parse_config(&r.config).unwrap(), c);
        let again = run_experiment(&c).unwrap();
        assert_eq!(r.errors, again.errors);
    }

    #[test]
    fn threads_do_not_change_results() {
        let c = parse_config(SMALL).unwrap();
        let mut c4 = c.clone();
        c4.threads = 3;
        assert_eq!(run_experiment(&c).unwrap().errors, run_experiment(&c4).unwrap().errors);
    }

    #[test]
    fn blow_up_carries_provenance() {
        let text = "[basis]\nmodes = 2\n[model]\npolynomial = [0.0, 0.0, 0.0, 1.0]\nnu = [0.5]\n[initial]\nu0 = [50.0]\nu1 = \"zero\"\n[time]\nsteps = 64\nsamples = 4\n";
        let err = run_experiment(&parse_config(text).unwrap()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let msg = err.to_string();
        assert!(msg.contains("nu = 0.5") && msg.contains("seed ="), "{msg}");
    }

    #[test]
    fn rates_rebuilt_from_rows() {
        let c = parse_config(SMALL).unwrap();
        let r = run_experiment(&c).unwrap();
        let rebuilt = rates_from_errors(&r.errors).unwrap();
        let direct = r.rate("full_vs_heat").unwrap();
        assert!((rebuilt[0].slope - direct.slope).abs() < 1e-12);
    }
}
