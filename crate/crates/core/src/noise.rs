//! Q-Wiener noise in the sine eigenbasis.
//!
//! `W(t) = sum_k sqrt(b_k) w_k(t) e_k` with independent scalar Brownian motions
//! `w_k`. A [`NoisePath`] stores the coefficient paths `W_k(t_j)` on a uniform
//! grid; increments are differences of consecutive values, so coarsening
//! (subsampling) leaves `W` at every shared time bit-identical.
//!
//! Draws for mode `k` come from their own ChaCha stream keyed by the seed, so
//! a path is a pure function of `(seed, b, T, J)` and mode `k`'s draws do not
//! depend on how many other modes are retained.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{SpectralBasis, SpectralField};

/// Eigenvalues `b_k` of the covariance operator `Q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceSpectrum {
    b: Vec<f64>,
}

impl CovarianceSpectrum {
    pub fn new(b: Vec<f64>) -> Result<Self> {
        let bad: Vec<String> = b
            .iter()
            .enumerate()
            .filter(|(_, v)| !(v.is_finite() && **v >= 0.0))
            .map(|(i, v)| format!("b_{} = {v} must be finite and non-negative", i + 1))
            .collect();
        if !bad.is_empty() {
            return Err(Error::Config(bad));
        }
        Ok(Self { b })
    }

    /// `b_k = k^{-exponent}`, k = 1..modes.
    pub fn power_law(modes: usize, exponent: f64) -> Result<Self> {
        if !exponent.is_finite() {
            return Err(Error::config("covariance exponent must be finite"));
        }
        Self::new((1..=modes).map(|k| (k as f64).powf(-exponent)).collect())
    }

    /// Default spectrum `b_k = k^{-4}`.
    pub fn default_for(modes: usize) -> Self {
        Self::power_law(modes, 4.0).expect("finite exponent")
    }

    pub fn zero(modes: usize) -> Self {
        Self { b: vec![0.0; modes] }
    }

    /// `b_k = value` on mode `k` (1-based), zero elsewhere.
    pub fn single_mode(modes: usize, k: usize, value: f64) -> Result<Self> {
        if k == 0 || k > modes {
            return Err(Error::config(format!("mode {k} outside 1..={modes}")));
        }
        let mut b = vec![0.0; modes];
        b[k - 1] = value;
        Self::new(b)
    }

    pub fn values(&self) -> &[f64] {
        &self.b
    }

    pub fn modes(&self) -> usize {
        self.b.len()
    }

    /// `tr Q = sum_k b_k`
    pub fn trace(&self) -> f64 {
        self.b.iter().sum()
    }

    /// `sum_k lambda_k b_k`
    pub fn weighted_trace(&self, basis: &SpectralBasis) -> f64 {
        self.b.iter().zip(basis.eigenvalues()).map(|(b, l)| b * l).sum()
    }
}

/// Seed of replica `index` derived from an experiment's base seed.
pub fn replica_seed(base: u64, index: u64) -> u64 {
    splitmix64(base ^ splitmix64(index.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Sampled coefficient paths `W_k(t_j)`, `t_j = j T / J`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    seed: u64,
    horizon: f64,
    steps: usize,
    spectrum: Vec<f64>,
    // mode-major, `steps + 1` values per mode, W_k(0) = 0
    values: Vec<f64>,
}

impl NoisePath {
    pub fn sample(q: &CovarianceSpectrum, horizon: f64, steps: usize, seed: u64) -> Result<Self> {
        validate_grid(horizon, steps)?;
        let n = q.modes();
        let dt = horizon / steps as f64;
        let mut values = vec![0.0; n * (steps + 1)];
        for (k, &b) in q.values().iter().enumerate() {
            let row = &mut values[k * (steps + 1)..(k + 1) * (steps + 1)];
            if b == 0.0 {
                continue;
            }
            let sd = (b * dt).sqrt();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let mut w = 0.0;
            for slot in row.iter_mut().skip(1) {
                let z: f64 = StandardNormal.sample(&mut rng);
                w += sd * z;
                *slot = w;
            }
        }
        Ok(Self {
            seed,
            horizon,
            steps,
            spectrum: q.values().to_vec(),
            values,
        })
    }

    /// Builds a path from mode-major increments (`increments[k][j]`).
    pub fn from_increments(q: &CovarianceSpectrum, horizon: f64, seed: u64, increments: &[Vec<f64>]) -> Result<Self> {
        if increments.len() != q.modes() {
            return Err(Error::Dimension {
                expected: q.modes(),
                got: increments.len(),
            });
        }
        let steps = increments.first().map_or(0, Vec::len);
        validate_grid(horizon, steps)?;
        let mut values = Vec::with_capacity(q.modes() * (steps + 1));
        for row in increments {
            if row.len() != steps {
                return Err(Error::Dimension {
                    expected: steps,
                    got: row.len(),
                });
            }
            let mut w = 0.0;
            values.push(0.0);
            for dw in row {
                w += dw;
                values.push(w);
            }
        }
        Ok(Self {
            seed,
            horizon,
            steps,
            spectrum: q.values().to_vec(),
            values,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn modes(&self) -> usize {
        self.spectrum.len()
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

    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    /// `W_k(t_j)` for mode index `k` (0-based).
    pub fn value(&self, k: usize, j: usize) -> f64 {
        self.values[k * (self.steps + 1) + j]
    }

    /// `Delta W_{k,j} = W_k(t_{j+1}) - W_k(t_j)` for mode index `k` (0-based).
    #[inline]
    pub fn increment(&self, k: usize, j: usize) -> f64 {
        let base = k * (self.steps + 1) + j;
        self.values[base + 1] - self.values[base]
    }

    /// All mode increments of step `j`.
    pub fn increments_at(&self, j: usize, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.modes());
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = self.increment(k, j);
        }
    }

    pub fn terminal(&self) -> SpectralField {
        SpectralField::from_coeffs((0..self.modes()).map(|k| self.value(k, self.steps)).collect())
    }

    /// Path on the grid with step `factor * dt`; increments are block sums of
    /// the fine increments and `W` agrees exactly at shared times.
    pub fn coarsen(&self, factor: usize) -> Result<NoisePath> {
        if factor == 0 || self.steps % factor != 0 {
            return Err(Error::config(format!(
                "coarsening factor {factor} does not divide step count {}",
                self.steps
            )));
        }
        let steps = self.steps / factor;
        let mut values = Vec::with_capacity(self.modes() * (steps + 1));
        for k in 0..self.modes() {
            values.extend((0..=steps).map(|j| self.value(k, j * factor)));
        }
        Ok(NoisePath {
            seed: self.seed,
            horizon: self.horizon,
            steps,
            spectrum: self.spectrum.clone(),
            values,
        })
    }

    /// Path with the same samples restricted to the first `modes` modes.
    pub fn truncate_modes(&self, modes: usize) -> Result<NoisePath> {
        if modes > self.modes() {
            return Err(Error::Dimension {
                expected: self.modes(),
                got: modes,
            });
        }
        Ok(NoisePath {
            seed: self.seed,
            horizon: self.horizon,
            steps: self.steps,
            spectrum: self.spectrum[..modes].to_vec(),
            values: self.values[..modes * (self.steps + 1)].to_vec(),
        })
    }

    /// Little-endian dump: seed (u64), N (u64), J (u64), T (f64), b_1..b_N
    /// (f64), then the increments `Delta W_{k,j}` row by row (mode-major).
    pub fn write_dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&(self.modes() as u64).to_le_bytes())?;
        w.write_all(&(self.steps as u64).to_le_bytes())?;
        w.write_all(&self.horizon.to_le_bytes())?;
        for b in &self.spectrum {
            w.write_all(&b.to_le_bytes())?;
        }
        for k in 0..self.modes() {
            for j in 0..self.steps {
                w.write_all(&self.increment(k, j).to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_dump<R: Read>(mut r: R) -> Result<NoiseDump> {
        let mut word = [0u8; 8];
        let mut next = |r: &mut R| -> Result<[u8; 8]> {
            r.read_exact(&mut word).map_err(|e| Error::io("<noise dump>", e))?;
            Ok(word)
        };
        let seed = u64::from_le_bytes(next(&mut r)?);
        let modes = u64::from_le_bytes(next(&mut r)?) as usize;
        let steps = u64::from_le_bytes(next(&mut r)?) as usize;
        let horizon = f64::from_le_bytes(next(&mut r)?);
        let spectrum = (0..modes)
            .map(|_| next(&mut r).map(f64::from_le_bytes))
            .collect::<Result<Vec<_>>>()?;
        let increments = (0..modes)
            .map(|_| {
                (0..steps)
                    .map(|_| next(&mut r).map(f64::from_le_bytes))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(NoiseDump {
            seed,
            horizon,
            spectrum,
            increments,
        })
    }
}

/// Decoded contents of a noise dump.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseDump {
    pub seed: u64,
    pub horizon: f64,
    pub spectrum: Vec<f64>,
    /// `increments[k][j]`
    pub increments: Vec<Vec<f64>>,
}

impl NoiseDump {
    pub fn into_path(self) -> Result<NoisePath> {
        let q = CovarianceSpectrum::new(self.spectrum)?;
        NoisePath::from_increments(&q, self.horizon, self.seed, &self.increments)
    }
}

fn validate_grid(horizon: f64, steps: usize) -> Result<()> {
    let mut v = Vec::new();
    if !(horizon.is_finite() && horizon > 0.0) {
        v.push(format!("horizon must be positive, got {horizon}"));
    }
    if steps == 0 {
        v.push("step count must be at least 1".to_string());
    }
    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(v))
    }
}

/// Record of the increments an integrator consumed from a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NoiseAudit {
    pub steps: usize,
    pub draws: usize,
    pub checksum: u64,
}

impl NoiseAudit {
    fn absorb(&mut self, increments: &[f64]) {
        self.steps += 1;
        for x in increments {
            self.draws += 1;
            // FNV-1a over the bit patterns
            self.checksum ^= x.to_bits();
            self.checksum = self.checksum.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
}

/// Sequential reader of a path's increments with consumption accounting.
#[derive(Debug)]
pub struct NoiseCursor<'a> {
    path: Option<&'a NoisePath>,
    next: usize,
    audit: NoiseAudit,
}

impl<'a> NoiseCursor<'a> {
    pub fn new(path: &'a NoisePath) -> Self {
        Self {
            path: Some(path),
            next: 0,
            audit: NoiseAudit::default(),
        }
    }

    /// A cursor that yields zero increments (noise-free models).
    pub fn silent() -> Self {
        Self {
            path: None,
            next: 0,
            audit: NoiseAudit::default(),
        }
    }

    /// Fills `out` with the increments of the next step.
    pub fn advance(&mut self, out: &mut [f64]) {
        match self.path {
            Some(p) => {
                p.increments_at(self.next, out);
                self.audit.absorb(out);
            }
            None => out.iter_mut().for_each(|x| *x = 0.0),
        }
        self.next += 1;
    }

    pub fn audit(&self) -> NoiseAudit {
        self.audit
    }
}

/// Left-point sum `sum_j <phi(t_j), Delta W_j>`.
pub fn stochastic_integral<F>(path: &NoisePath, mut phi: F) -> f64
where
    F: FnMut(f64) -> SpectralField,
{
    let mut dw = vec![0.0; path.modes()];
    (0..path.steps())
        .map(|j| {
            path.increments_at(j, &mut dw);
            let p = phi(path.time(j));
            p.coeffs.iter().zip(&dw).map(|(a, b)| a * b).sum::<f64>()
        })
        .sum()
}
