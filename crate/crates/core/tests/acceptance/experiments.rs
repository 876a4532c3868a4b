//! Noisy two-mode reconstructions shared by several criteria.
//!
//! Each state is swept through the pipeline at one subset size with
//! `SEEDS` repeats. Repeat `r` uses subset and noise seed `1 + r`; the
//! biased runs reuse the same seeds and therefore the same data.

use std::path::{Path, PathBuf};
use std::time::Instant;

use cvtomo::measure::NoiseConfig;
use cvtomo::pipeline::{self, GridSpec, Manifest, Method, RunConfig, SweepConfig};
use cvtomo::{StateSpec, TruncationConfig};

pub const SEEDS: usize = 5;
pub const SEED_BASE: u64 = 1;
pub const QUAD_SUBSET: usize = 400;
pub const COHERENT_SUBSET: usize = 100;
pub const NOISE_SNR: f64 = 10.0;

pub fn quadrature_grid() -> GridSpec {
    GridSpec::Quadrature {
        q_count: 21,
        theta_count: 8,
    }
}

pub fn coherent_grid() -> GridSpec {
    GridSpec::Coherent {
        z_count: 10,
        z_cell_im: None,
    }
}

pub fn states() -> Vec<(&'static str, StateSpec)> {
    vec![
        ("noon", StateSpec::Noon),
        ("hermite_gauss", StateSpec::benchmark_hermite_gauss()),
        ("squeezed_vacuum", StateSpec::benchmark_squeezed_vacuum()),
        ("dephased_cat", StateSpec::benchmark_dephased_cat()),
    ]
}

pub struct Sweep {
    pub config: SweepConfig,
    pub manifests: Vec<Manifest>,
    pub seconds: f64,
}

impl Sweep {
    pub fn fidelities(&self) -> Vec<f64> {
        self.manifests.iter().map(|m| m.summary.fidelity).collect()
    }

    pub fn negativities(&self) -> Vec<f64> {
        self.manifests.iter().filter_map(|m| m.summary.negativity).collect()
    }

    pub fn cell_dir(&self, repeat: usize) -> PathBuf {
        self.config.cell(self.config.subset_sizes[0], repeat).outputs
    }
}

pub struct StateRuns {
    pub name: &'static str,
    pub spec: StateSpec,
    pub quadrature: Sweep,
    pub quadrature_biased: Option<Sweep>,
    pub coherent: Sweep,
}

pub fn base_config(spec: &StateSpec, grid: GridSpec, size: usize, method: Method, dir: &Path) -> RunConfig {
    RunConfig {
        state: spec.clone(),
        trunc: TruncationConfig::two_mode(10),
        grid,
        subset_size: size,
        subset_seed: SEED_BASE,
        noise: NoiseConfig::noisy(NOISE_SNR, SEED_BASE),
        method,
        outputs: dir.to_path_buf(),
        ..RunConfig::default()
    }
}

fn sweep(base: RunConfig) -> Sweep {
    let size = base.subset_size;
    let config = SweepConfig {
        base,
        subset_sizes: vec![size],
        repeats: SEEDS,
    };
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    let started = Instant::now();
    let report = pipeline::sweep(&config, jobs).expect("sweep configuration is valid");
    let seconds = started.elapsed().as_secs_f64();
    for cell in &report.cells {
        if let Some(e) = &cell.error {
            panic!("{} cell r{} failed: {e}", config.base.state.name(), cell.repeat);
        }
    }
    let manifests = (0..SEEDS)
        .map(|r| Manifest::load(&config.cell(size, r).outputs.join("manifest.json")).expect("manifest"))
        .collect();
    Sweep {
        config,
        manifests,
        seconds,
    }
}

/// Runs every sweep; biased twins only for the states the entropy
/// criterion looks at.
pub fn run_all(root: &Path) -> Vec<StateRuns> {
    states()
        .into_iter()
        .map(|(name, spec)| {
            let dir = root.join(name);
            eprintln!("  running {name} ...");
            let quadrature = sweep(base_config(&spec, quadrature_grid(), QUAD_SUBSET, Method::Sdp, &dir.join("quad")));
            let quadrature_biased = matches!(spec, StateSpec::Noon | StateSpec::HermiteGauss { .. }).then(|| {
                sweep(base_config(
                    &spec,
                    quadrature_grid(),
                    QUAD_SUBSET,
                    Method::SdpBiased,
                    &dir.join("quad_biased"),
                ))
            });
            let coherent = sweep(base_config(&spec, coherent_grid(), COHERENT_SUBSET, Method::Sdp, &dir.join("coherent")));
            StateRuns {
                name,
                spec,
                quadrature,
                quadrature_biased,
                coherent,
            }
        })
        .collect()
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}
