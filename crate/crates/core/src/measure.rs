//! Born-rule measurement records with optional Poisson counting noise.

use std::io::{BufRead, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::TruncationConfig;
use crate::povm::{PovmElement, SamplingGrid};
use crate::state::{DensityMatrix, StateSpec};

const IMAG_TOL: f64 = 1e-10;

/// One measured outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub element_id: String,
    /// Frequency handed to the reconstruction.
    pub frequency: f64,
    /// Noiseless `Tr(ρ E)`.
    pub ideal: f64,
    /// Simulated counts, present only when noise is on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    pub enabled: bool,
    /// Relative noise level in percent; the Poisson intensity is `(100/snr)²`.
    pub snr_percent: f64,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            snr_percent: 10.0,
            seed: 0,
        }
    }
}

impl NoiseConfig {
    pub fn noisy(snr_percent: f64, seed: u64) -> Self {
        Self {
            enabled: true,
            snr_percent,
            seed,
        }
    }

    /// Mean count per record, `λ = (100/snr)²`.
    pub fn intensity(&self) -> Result<f64> {
        if !(self.snr_percent > 0.0) || !self.snr_percent.is_finite() {
            return Err(Error::Config(format!(
                "noise level {} must be positive",
                self.snr_percent
            )));
        }
        Ok((100.0 / self.snr_percent).powi(2))
    }
}

/// `Tr(ρ E)` for a weighted element.
pub fn expectation(rho: &DensityMatrix, element: &PovmElement) -> Result<f64> {
    if element.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: element.dim(),
        });
    }
    let v = element.vector();
    let z = v.dotc(&(&rho.entries * v)) * element.weight;
    if z.im.abs() > IMAG_TOL * z.re.abs().max(1.0) {
        return Err(Error::Numerical(format!(
            "expectation of {} has imaginary part {:.3e}",
            element.id, z.im
        )));
    }
    Ok(z.re)
}

/// Ideal probabilities for every element, optionally replaced by Poisson
/// counts rescaled to the same mean.
///
/// With noise on, record `i` draws `n_i ~ Poisson(λ p_i / p̄)` from its own
/// stream of the seeded generator, so records are independent of ordering
/// and of how many other records exist.
pub fn simulate(
    rho: &DensityMatrix,
    elements: &[PovmElement],
    noise: &NoiseConfig,
) -> Result<Vec<MeasurementRecord>> {
    let ideal = elements
        .iter()
        .map(|e| expectation(rho, e))
        .collect::<Result<Vec<_>>>()?;
    if !noise.enabled {
        return Ok(elements
            .iter()
            .zip(&ideal)
            .map(|(e, &p)| MeasurementRecord {
                element_id: e.id.clone(),
                frequency: p,
                ideal: p,
                counts: None,
            })
            .collect());
    }
    let lambda = noise.intensity()?;
    let mean = ideal.iter().map(|p| p.max(0.0)).sum::<f64>() / ideal.len().max(1) as f64;
    if !(mean > 0.0) {
        return Err(Error::Degenerate(
            "all ideal probabilities vanish; noise scale is undefined".into(),
        ));
    }
    elements
        .iter()
        .zip(&ideal)
        .enumerate()
        .map(|(i, (e, &p))| {
            let rate = lambda * p.max(0.0) / mean;
            let counts = if rate > 0.0 {
                let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
                rng.set_stream(i as u64);
                let dist = Poisson::new(rate)
                    .map_err(|err| Error::Numerical(format!("Poisson rate {rate}: {err}")))?;
                dist.sample(&mut rng) as u64
            } else {
                0
            };
            Ok(MeasurementRecord {
                element_id: e.id.clone(),
                frequency: mean * counts as f64 / lambda,
                ideal: p,
                counts: Some(counts),
            })
        })
        .collect()
}

/// First line of a dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<StateSpec>,
    pub trunc: TruncationConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<SamplingGrid>,
    pub noise: NoiseConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poisson_intensity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created: Option<String>,
}

/// Header plus records, stored as JSON lines.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub header: DatasetHeader,
    pub records: Vec<MeasurementRecord>,
}

impl Dataset {
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer(&mut out, &self.header)?;
        out.write_all(b"\n")?;
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().filter(|l| !matches!(l, Ok(s) if s.trim().is_empty()));
        let header: DatasetHeader = match lines.next() {
            Some(line) => serde_json::from_str(&line?)?,
            None => return Err(Error::Parse("dataset is empty".into())),
        };
        let mut records = Vec::new();
        for (k, line) in lines.enumerate() {
            let line = line?;
            let rec: MeasurementRecord = serde_json::from_str(&line)
                .map_err(|e| Error::Parse(format!("record {}: {e}", k + 1)))?;
            records.push(rec);
        }
        Ok(Self { header, records })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_jsonl(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_jsonl(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}
