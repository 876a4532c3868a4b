//! End-to-end runs and fidelity sweeps.
//!
//! A run goes state → grid → measured subset → simulated data →
//! reconstruction → metrics, writing every artifact into one directory
//! together with a `manifest.json` that lists SHA-256 digests of the files
//! and the summary numbers.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result, StageContext};
use crate::fock::TruncationConfig;
use crate::linalg;
use crate::measure::{simulate, Dataset, DatasetHeader, MeasurementRecord, NoiseConfig};
use crate::metrics;
use crate::povm::{sample_indices, GridKind, PovmElement, PovmSetFile, SamplingGrid};
use crate::radon::{self, KernelConfig};
use crate::sdp::{self, Residuals, SolveStatus, SolverConfig, DEFAULT_EPSILON_FLOOR};
use crate::state::{build_state, DensityMatrix, StateSpec};
use crate::wigner::{self, ModeSlice};

/// Diagonal entries below this count as negative in the non-physicality flag.
pub const NEGATIVE_DIAGONAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Sdp,
    SdpBiased,
    Irt,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sdp" => Ok(Self::Sdp),
            "sdp_biased" | "sdp-biased" => Ok(Self::SdpBiased),
            "irt" => Ok(Self::Irt),
            other => Err(Error::Config(format!("unknown method {other}"))),
        }
    }
}

/// Grid recipe; the mode count comes from the truncation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridSpec {
    Quadrature {
        q_count: usize,
        theta_count: usize,
    },
    Coherent {
        z_count: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        z_cell_im: Option<f64>,
    },
    /// Seven `q` values and the five angles `0, π/4, …, π` on one mode.
    FockDemo,
}

impl GridSpec {
    pub fn build(&self, modes: usize) -> Result<SamplingGrid> {
        match *self {
            GridSpec::Quadrature { q_count, theta_count } => SamplingGrid::quadrature(q_count, theta_count, modes),
            GridSpec::Coherent { z_count, z_cell_im } => {
                let base = SamplingGrid::coherent(z_count, modes)?;
                SamplingGrid::coherent_with_axis(base.z_axis, z_cell_im, modes)
            }
            GridSpec::FockDemo => {
                if modes != 1 {
                    return Err(Error::Config("fock_demo is a single-mode grid".into()));
                }
                Ok(SamplingGrid::fock_demo())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IrtConfig {
    pub cutoff_kc: f64,
    /// Output phase-space axis `lo:step:hi`, used for both `q` and `p`.
    pub grid: String,
}

impl Default for IrtConfig {
    fn default() -> Self {
        Self {
            cutoff_kc: KernelConfig::default().cutoff_kc,
            grid: "-5:0.1:5".into(),
        }
    }
}

/// Unmeasured elements drawn for the entropy probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeConfig {
    pub count: usize,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { count: 10, seed: 0 }
    }
}

/// Everything a single run needs. Missing keys fall back to the noiseless
/// Fock-1 demo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub state: StateSpec,
    pub trunc: TruncationConfig,
    pub grid: GridSpec,
    /// Number of measured product elements.
    pub subset_size: usize,
    pub subset_seed: u64,
    pub noise: NoiseConfig,
    pub method: Method,
    pub solver: SolverConfig,
    pub epsilon_floor: f64,
    pub irt: IrtConfig,
    pub probe: ProbeConfig,
    pub outputs: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            state: StateSpec::Fock { n: 1 },
            trunc: TruncationConfig::single_mode(10),
            grid: GridSpec::FockDemo,
            subset_size: 35,
            subset_seed: 0,
            noise: NoiseConfig::default(),
            method: Method::Sdp,
            solver: SolverConfig::default(),
            epsilon_floor: DEFAULT_EPSILON_FLOOR,
            irt: IrtConfig::default(),
            probe: ProbeConfig::default(),
            outputs: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    /// Checks everything that can be checked before any stage runs and
    /// returns the grid.
    pub fn validate(&self) -> Result<SamplingGrid> {
        TruncationConfig::new(self.trunc.cutoff_n, self.trunc.modes)?;
        self.state.validate(&self.trunc)?;
        self.solver.validate()?;
        if self.noise.enabled {
            self.noise.intensity()?;
        }
        if !(self.epsilon_floor >= 0.0) {
            return Err(Error::Config("epsilon_floor must be >= 0".into()));
        }
        let grid = self.grid.build(self.trunc.modes)?;
        if self.subset_size == 0 {
            return Err(Error::Config("subset_size must be positive".into()));
        }
        if self.subset_size > grid.cardinality() {
            return Err(Error::Config(format!(
                "subset_size {} exceeds the grid's {} elements",
                self.subset_size,
                grid.cardinality()
            )));
        }
        if self.method == Method::Irt {
            if self.trunc.modes != 1 || grid.kind != GridKind::Quadrature {
                return Err(Error::Config(
                    "method irt needs a single-mode quadrature grid".into(),
                ));
            }
            if self.subset_size != grid.cardinality() {
                return Err(Error::Config(
                    "method irt needs the full grid measured (subset_size = grid size)".into(),
                ));
            }
            KernelConfig {
                cutoff_kc: self.irt.cutoff_kc,
            }
            .validate()?;
            wigner::parse_axis(&self.irt.grid)?;
        }
        Ok(grid)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    /// Fidelity to the target. For a non-physical reconstruction this is
    /// taken after projecting onto the PSD cone and renormalizing.
    pub fidelity: f64,
    pub negativity: Option<f64>,
    pub entropy_probe: Option<f64>,
    pub status: Option<SolveStatus>,
    pub iterations: Option<usize>,
    pub objective: Option<f64>,
    /// Final solver residuals in band-scaled units.
    pub residuals: Option<Residuals>,
    pub min_eigenvalue: f64,
    pub negative_diagonal: bool,
    pub physical: bool,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: RunConfig,
    pub measured: usize,
    pub summary: RunSummary,
    pub files: Vec<FileEntry>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

/// Hex SHA-256 of a file.
pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn record_file(dir: &Path, name: &str, files: &mut Vec<FileEntry>) -> Result<()> {
    let path = dir.join(name);
    files.push(FileEntry {
        name: name.to_string(),
        sha256: file_digest(&path)?,
        bytes: fs::metadata(&path)?.len(),
    });
    Ok(())
}

/// `count` grid elements outside `measured`, drawn uniformly with `seed`.
pub fn unmeasured_probes(
    grid: &SamplingGrid,
    trunc: &TruncationConfig,
    measured: &[usize],
    count: usize,
    seed: u64,
) -> Result<Vec<PovmElement>> {
    let mut taken = vec![false; grid.cardinality()];
    for &i in measured {
        taken[i] = true;
    }
    let free: Vec<usize> = (0..taken.len()).filter(|&i| !taken[i]).collect();
    let picks = sample_indices(free.len(), count, seed)?;
    let chosen: Vec<usize> = picks.iter().map(|&k| free[k]).collect();
    grid.elements_at(&chosen, trunc)
}

/// Smallest diagonal entry of a Hermitian matrix.
fn min_diagonal(rho: &DensityMatrix) -> f64 {
    rho.entries.diagonal().iter().map(|z| z.re).fold(f64::INFINITY, f64::min)
}

/// PSD projection with unit trace, for scoring non-physical matrices.
fn physical_part(rho: &DensityMatrix) -> Result<DensityMatrix> {
    DensityMatrix::normalized(rho.trunc, linalg::project_psd(&rho.entries))
}

struct Reconstruction {
    rho: DensityMatrix,
    status: Option<SolveStatus>,
    iterations: Option<usize>,
    objective: Option<f64>,
    residuals: Option<Residuals>,
}

fn reconstruct(
    config: &RunConfig,
    grid: &SamplingGrid,
    elements: &[PovmElement],
    records: &[MeasurementRecord],
    dir: &Path,
    files: &mut Vec<FileEntry>,
) -> Result<Reconstruction> {
    match config.method {
        Method::Sdp | Method::SdpBiased => {
            let problem = sdp::assemble(elements, records, &config.trunc, config.epsilon_floor)?;
            let result = if config.method == Method::Sdp {
                sdp::solve(&problem, &config.solver)?
            } else {
                sdp::solve_biased(&problem, &config.solver)?
            };
            if result.status == SolveStatus::Infeasible {
                return Err(Error::Infeasible(
                    "the measured bands admit no density matrix".into(),
                ));
            }
            Ok(Reconstruction {
                rho: result.rho,
                status: Some(result.status),
                iterations: Some(result.iterations),
                objective: Some(result.objective),
                residuals: Some(result.residuals),
            })
        }
        Method::Irt => {
            let sino = radon::sinogram_from_records(grid, elements, records)?;
            sino.save_csv(&dir.join("sinogram.csv"))?;
            record_file(dir, "sinogram.csv", files)?;
            let axis = wigner::parse_axis(&config.irt.grid)?;
            let kernel = KernelConfig {
                cutoff_kc: config.irt.cutoff_kc,
            };
            let w = radon::inverse_radon(&sino, &kernel, &axis, &axis)?;
            w.save_csv(&dir.join("wigner_irt.csv"))?;
            record_file(dir, "wigner_irt.csv", files)?;
            let rho = DensityMatrix::unchecked(config.trunc, radon::density_from_wigner(&w, &config.trunc)?)?;
            Ok(Reconstruction {
                rho,
                status: None,
                iterations: None,
                objective: None,
                residuals: None,
            })
        }
    }
}

/// Executes one run and writes its artifacts into `config.outputs`.
///
/// Solver non-optimality is reported in the summary rather than as an
/// error; an infeasible program is an error.
pub fn run(config: &RunConfig) -> Result<Manifest> {
    let started = Instant::now();
    let grid = config.validate().stage("config")?;
    let dir = config.outputs.as_path();
    fs::create_dir_all(dir).map_err(Error::from).stage("outputs")?;
    let mut files = Vec::new();

    let target = build_state(&config.state, &config.trunc).stage("gen-state")?;
    target.save(&dir.join("state.json")).stage("gen-state")?;
    record_file(dir, "state.json", &mut files)?;

    let (indices, elements) = (|| {
        let indices = sample_indices(grid.cardinality(), config.subset_size, config.subset_seed)?;
        let elements = grid.elements_at(&indices, &config.trunc)?;
        fs::write(dir.join("grid.json"), serde_json::to_string_pretty(&grid)?)?;
        PovmSetFile::from_elements(&grid, &config.trunc, &elements, false).save(&dir.join("povm.json"))?;
        Ok((indices, elements))
    })()
    .stage("gen-povm")?;
    record_file(dir, "grid.json", &mut files)?;
    record_file(dir, "povm.json", &mut files)?;

    let records = (|| {
        let records = simulate(&target, &elements, &config.noise)?;
        let dataset = Dataset {
            header: DatasetHeader {
                state: Some(config.state.clone()),
                trunc: config.trunc,
                grid: Some(grid.clone()),
                noise: config.noise,
                poisson_intensity: if config.noise.enabled {
                    Some(config.noise.intensity()?)
                } else {
                    None
                },
                created: None,
            },
            records,
        };
        dataset.save(&dir.join("data.jsonl"))?;
        Ok(dataset.records)
    })()
    .stage("simulate")?;
    record_file(dir, "data.jsonl", &mut files)?;

    let rec = reconstruct(config, &grid, &elements, &records, dir, &mut files).stage("reconstruct")?;
    rec.rho.save(&dir.join("rho.json")).stage("reconstruct")?;
    record_file(dir, "rho.json", &mut files)?;

    let summary = (|| {
        let min_eigenvalue = rec.rho.min_eigenvalue();
        let negative_diagonal = min_diagonal(&rec.rho) < -NEGATIVE_DIAGONAL_TOL;
        let physical = min_eigenvalue >= -metrics::PSD_TOL && !negative_diagonal;
        let scored = if physical { rec.rho.clone() } else { physical_part(&rec.rho)? };
        let fidelity = metrics::fidelity(&scored, &target)?;
        let negativity = if config.trunc.modes == 2 {
            Some(metrics::negativity(&scored)?)
        } else {
            None
        };
        let free = grid.cardinality() - indices.len();
        let entropy_probe = if config.probe.count > 0 && free >= config.probe.count {
            let probes = unmeasured_probes(&grid, &config.trunc, &indices, config.probe.count, config.probe.seed)?;
            Some(metrics::shannon_entropy_probe(&scored, &probes)?)
        } else {
            None
        };
        write_wigner(&rec.rho, dir)?;
        Ok(RunSummary {
            fidelity,
            negativity,
            entropy_probe,
            status: rec.status,
            iterations: rec.iterations,
            objective: rec.objective,
            residuals: rec.residuals,
            min_eigenvalue,
            negative_diagonal,
            physical,
            wall_seconds: started.elapsed().as_secs_f64(),
        })
    })()
    .stage("metrics")?;
    record_file(dir, "wigner.csv", &mut files)?;

    let manifest = Manifest {
        config: config.clone(),
        measured: indices.len(),
        summary,
        files,
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

/// Wigner function of the reconstruction on `[−5, 5]²`: the full function
/// for one mode, the slice through the origin of mode 2 for two.
fn write_wigner(rho: &DensityMatrix, dir: &Path) -> Result<()> {
    let axis = wigner::uniform_axis(-5.0, 0.1, 5.0)?;
    let grid = match rho.trunc.modes {
        1 => wigner::wigner_grid(rho, &axis, &axis)?,
        2 => {
            let slice = ModeSlice {
                plot_mode: 1,
                fixed_q: 0.0,
                fixed_p: 0.0,
            };
            wigner::wigner_two_mode_slice(rho, slice, &axis, &axis)?
        }
        m => return Err(Error::Unsupported(format!("Wigner output for {m} modes"))),
    };
    grid.save_csv(&dir.join("wigner.csv"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub base: RunConfig,
    pub subset_sizes: Vec<usize>,
    /// Runs per size; repeat `r` offsets both the subset and noise seeds by `r`.
    pub repeats: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            base: RunConfig::default(),
            subset_sizes: Vec::new(),
            repeats: 5,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.subset_sizes.is_empty() {
            return Err(Error::Config("subset_sizes is empty".into()));
        }
        if self.subset_sizes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("subset_sizes must be strictly increasing".into()));
        }
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be positive".into()));
        }
        if self.base.noise.enabled && self.repeats < 3 {
            return Err(Error::Config("noisy sweeps need repeats >= 3".into()));
        }
        for &size in &self.subset_sizes {
            RunConfig {
                subset_size: size,
                ..self.base.clone()
            }
            .validate()?;
        }
        Ok(())
    }

    /// Configuration of cell `(size, repeat)`.
    pub fn cell(&self, size: usize, repeat: usize) -> RunConfig {
        let mut cfg = self.base.clone();
        cfg.subset_size = size;
        cfg.subset_seed = self.base.subset_seed.wrapping_add(repeat as u64);
        cfg.noise.seed = self.base.noise.seed.wrapping_add(repeat as u64);
        cfg.outputs = self.base.outputs.join(format!("n{size}")).join(format!("r{repeat}"));
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellOutcome {
    pub subset_size: usize,
    pub repeat: usize,
    pub fidelity: Option<f64>,
    pub status: Option<SolveStatus>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub subset_size: usize,
    pub mean_fidelity: f64,
    pub std_fidelity: f64,
    pub runs: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub cells: Vec<CellOutcome>,
}

impl SweepReport {
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "subset_size,mean_fidelity,std_fidelity,runs,failures")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.subset_size, r.mean_fidelity, r.std_fidelity, r.runs, r.failures
            )?;
        }
        Ok(())
    }
}

/// Mean and sample standard deviation (0 for fewer than two values).
fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Runs every `(size, repeat)` cell on up to `jobs` threads. A failing cell
/// is recorded and the sweep carries on. Writes `sweep.csv` and
/// `sweep.json` into the base output directory.
pub fn sweep(config: &SweepConfig, jobs: usize) -> Result<SweepReport> {
    config.validate().stage("config")?;
    let cells: Vec<(usize, usize)> = config
        .subset_sizes
        .iter()
        .flat_map(|&s| (0..config.repeats).map(move |r| (s, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let outcomes: Vec<CellOutcome> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(size, repeat)| match run(&config.cell(size, repeat)) {
                Ok(m) => CellOutcome {
                    subset_size: size,
                    repeat,
                    fidelity: Some(m.summary.fidelity),
                    status: m.summary.status,
                    error: None,
                },
                Err(e) => {
                    log::warn!("sweep cell n={size} r={repeat} failed: {e}");
                    CellOutcome {
                        subset_size: size,
                        repeat,
                        fidelity: None,
                        status: None,
                        error: Some(e.to_string()),
                    }
                }
            })
            .collect()
    });
    let rows = config
        .subset_sizes
        .iter()
        .map(|&size| {
            let fids: Vec<f64> = outcomes
                .iter()
                .filter(|c| c.subset_size == size)
                .filter_map(|c| c.fidelity)
                .collect();
            let (mean, std) = mean_std(&fids);
            SweepRow {
                subset_size: size,
                mean_fidelity: mean,
                std_fidelity: std,
                runs: fids.len(),
                failures: config.repeats - fids.len(),
            }
        })
        .collect();
    let report = SweepReport { rows, cells: outcomes };
    let dir = &config.base.outputs;
    fs::create_dir_all(dir)?;
    report.write_csv(std::io::BufWriter::new(fs::File::create(dir.join("sweep.csv"))?))?;
    fs::write(dir.join("sweep.json"), serde_json::to_string_pretty(&report)?)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo(dir: &Path, method: Method) -> RunConfig {
        RunConfig {
            method,
            outputs: dir.to_path_buf(),
            ..RunConfig::default()
        }
    }

    #[test]
    fn fock_one_demo_sdp_and_irt() {
        let tmp = tempfile::tempdir().unwrap();
        let sdp = run(&demo(&tmp.path().join("sdp"), Method::Sdp)).unwrap();
        assert!(sdp.summary.fidelity >= 0.99, "{}", sdp.summary.fidelity);
        assert!(sdp.summary.physical);
        assert_eq!(sdp.summary.status, Some(SolveStatus::Optimal));
        let irt = run(&demo(&tmp.path().join("irt"), Method::Irt)).unwrap();
        assert!(irt.summary.negative_diagonal);
        assert!(!irt.summary.physical);
    }

    #[test]
    fn manifest_files_exist_and_match_digests() {
        let tmp = tempfile::tempdir().unwrap();
        let m = run(&demo(tmp.path(), Method::Sdp)).unwrap();
        for f in &m.files {
            let path = tmp.path().join(&f.name);
            assert_eq!(file_digest(&path).unwrap(), f.sha256, "{}", f.name);
        }
        let rho = DensityMatrix::load(&tmp.path().join("rho.json")).unwrap();
        let target = DensityMatrix::load(&tmp.path().join("state.json")).unwrap();
        assert_eq!(metrics::fidelity(&rho, &target).unwrap(), m.summary.fidelity);
        let back = Manifest::load(&tmp.path().join("manifest.json")).unwrap();
        assert_eq!(back.files, m.files);
    }

    #[test]
    fn reruns_are_bit_identical() {
        let tmp = tempfile::tempdir().unwrap();
        let a = run(&demo(&tmp.path().join("a"), Method::Sdp)).unwrap();
        let b = run(&demo(&tmp.path().join("b"), Method::Sdp)).unwrap();
        assert_eq!(a.files, b.files);
    }

    #[test]
    fn subset_seed_changes_only_the_measured_set() {
        let tmp = tempfile::tempdir().unwrap();
        let base = RunConfig {
            grid: GridSpec::Quadrature {
                q_count: 11,
                theta_count: 6,
            },
            subset_size: 30,
            outputs: tmp.path().join("a"),
            ..RunConfig::default()
        };
        let a = run(&base).unwrap();
        let b = run(&RunConfig {
            subset_seed: 9,
            outputs: tmp.path().join("b"),
            ..base
        })
        .unwrap();
        let digest = |m: &Manifest, name: &str| m.files.iter().find(|f| f.name == name).unwrap().sha256.clone();
        assert_eq!(digest(&a, "state.json"), digest(&b, "state.json"));
        assert_eq!(digest(&a, "grid.json"), digest(&b, "grid.json"));
        assert_ne!(digest(&a, "povm.json"), digest(&b, "povm.json"));
    }

    #[test]
    fn empty_subset_is_a_config_error() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            subset_size: 0,
            outputs: tmp.path().join("never"),
            ..RunConfig::default()
        };
        let err = run(&cfg).unwrap_err();
        assert!(matches!(err.root(), Error::Config(_)), "{err}");
        assert!(!tmp.path().join("never").exists());
    }

    #[test]
    fn irt_rejects_partial_or_two_mode_grids() {
        let partial = RunConfig {
            method: Method::Irt,
            subset_size: 20,
            ..RunConfig::default()
        };
        assert!(partial.validate().is_err());
        let two = RunConfig {
            method: Method::Irt,
            state: StateSpec::Noon,
            trunc: TruncationConfig::two_mode(3),
            grid: GridSpec::Quadrature {
                q_count: 3,
                theta_count: 2,
            },
            subset_size: 36,
            ..RunConfig::default()
        };
        assert!(two.validate().is_err());
    }

    #[test]
    fn sweep_reports_means_and_records_failures() {
        let tmp = tempfile::tempdir().unwrap();
        let base = RunConfig {
            state: StateSpec::Fock { n: 1 },
            trunc: TruncationConfig::single_mode(4),
            grid: GridSpec::Quadrature {
                q_count: 9,
                theta_count: 4,
            },
            outputs: tmp.path().to_path_buf(),
            ..RunConfig::default()
        };
        let cfg = SweepConfig {
            base,
            subset_sizes: vec![10, 20, 36],
            repeats: 2,
        };
        let report = sweep(&cfg, 2).unwrap();
        assert_eq!(report.rows.len(), 3);
        assert_eq!(report.cells.len(), 6);
        assert!(report.rows[2].mean_fidelity > 0.99);
        assert!(tmp.path().join("sweep.csv").exists());
        assert!(tmp.path().join("n20").join("r1").join("manifest.json").exists());

        let bad = SweepConfig {
            subset_sizes: vec![20, 10],
            ..cfg.clone()
        };
        assert!(sweep(&bad, 1).is_err());
        let noisy = SweepConfig {
            base: RunConfig {
                noise: NoiseConfig::noisy(10.0, 1),
                ..cfg.base.clone()
            },
            ..cfg
        };
        assert!(noisy.validate().is_err());
    }

    #[test]
    fn mean_std_matches_hand_values() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(&[0.7]), (0.7, 0.0));
    }

    #[test]
    fn run_config_round_trips_through_json() {
        let cfg = RunConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        let partial: RunConfig = serde_json::from_str(r#"{"subset_size": 7}"#).unwrap();
        assert_eq!(partial.subset_size, 7);
        assert_eq!(partial.grid, GridSpec::FockDemo);
    }
}
