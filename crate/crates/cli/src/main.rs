//! `cvtomo`: target states, POVM sets, simulated data, reconstructions and
//! fidelity sweeps from the command line.
//!
//! Every subcommand starts from a [`RunConfig`] (the `--config` TOML file or
//! the built-in Fock-1 demo), applies its own flags on top and reads or
//! writes files under the output directory unless told otherwise. Reports
//! go to stdout as JSON; `sweep` prints its CSV table.
//!
//! Exit codes: 0 success, 1 configuration or input error, 2 solver stopped
//! before optimality, 3 infeasible program.

mod args;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;

use cvtomo::error::{Error, Result};
use cvtomo::measure::{simulate, Dataset, DatasetHeader};
use cvtomo::pipeline::{self, GridSpec, Method, RunConfig, SweepConfig};
use cvtomo::povm::{sample_indices, PovmSetFile};
use cvtomo::radon::{self, KernelConfig, Sinogram};
use cvtomo::sdp::{self, Algorithm, SolveStatus};
use cvtomo::state::{build_state, DensityMatrixFile};
use cvtomo::wigner::{self, ModeSlice};
use cvtomo::{linalg, metrics, DensityMatrix, StateSpec, TruncationConfig};

use args::{
    AlgorithmArg, Cli, Command, GenPovmArgs, GenStateArgs, GlobalArgs, GridKindArg, MethodArg, MetricsArgs,
    ReconstructIrtArgs, ReconstructSdpArgs, RunArgs, SimulateArgs, StateKind, SweepArgs, TruncArgs,
    WignerArgs,
};

fn exit_code(err: &Error) -> u8 {
    match err.root() {
        Error::Infeasible(_) => 3,
        Error::Numerical(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // clap would exit with 2, which is reserved for solver status.
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn dispatch(cli: &Cli) -> Result<u8> {
    let g = &cli.global;
    if let Command::Sweep(a) = &cli.command {
        return cmd_sweep(g, a);
    }
    let mut cfg = run_config(g)?;
    match &cli.command {
        Command::GenState(a) => cmd_gen_state(g, &mut cfg, a),
        Command::GenPovm(a) => cmd_gen_povm(g, &mut cfg, a),
        Command::Simulate(a) => cmd_simulate(g, &mut cfg, a),
        Command::ReconstructSdp(a) => cmd_reconstruct_sdp(g, &mut cfg, a),
        Command::ReconstructIrt(a) => cmd_reconstruct_irt(g, &mut cfg, a),
        Command::Wigner(a) => cmd_wigner(g, &cfg, a),
        Command::Metrics(a) => cmd_metrics(g, &cfg, a),
        Command::Run(a) => cmd_run(g, &mut cfg, a),
        Command::Sweep(_) => unreachable!("handled above"),
    }
}

fn read_toml<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p)?;
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
        }
    }
}

/// The configured run with `--out-dir` and `--seed` applied.
fn run_config(g: &GlobalArgs) -> Result<RunConfig> {
    let mut cfg: RunConfig = read_toml(g.config.as_deref())?;
    if let Some(dir) = &g.out_dir {
        cfg.outputs = dir.clone();
    }
    if let Some(seed) = g.seed {
        cfg.subset_seed = seed;
        cfg.noise.seed = seed;
    }
    Ok(cfg)
}

fn print_toml<T: Serialize>(value: &T) -> Result<u8> {
    let text = toml::to_string_pretty(value).map_err(|e| Error::Config(format!("serializing config: {e}")))?;
    write_stdout(text.as_bytes())?;
    Ok(0)
}

/// Writes to stdout; a reader that went away (`| head`) is not an error.
fn write_stdout(bytes: &[u8]) -> Result<()> {
    match std::io::stdout().lock().write_all(bytes) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn emit(value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_stdout(text.as_bytes())
}

fn input_path(explicit: &Option<PathBuf>, cfg: &RunConfig, name: &str) -> PathBuf {
    explicit.clone().unwrap_or_else(|| cfg.outputs.join(name))
}

/// Output location; parent directories are created.
fn output_path(explicit: &Option<PathBuf>, cfg: &RunConfig, name: &str) -> Result<PathBuf> {
    let path = input_path(explicit, cfg, name);
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    Ok(path)
}

/// Density matrices from disk are accepted even when non-physical, since
/// the back-projection baseline produces such matrices.
fn load_density(path: &Path) -> Result<DensityMatrix> {
    let file: DensityMatrixFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    file.into_density(true)
}

fn apply_trunc(cfg: &mut RunConfig, t: &TruncArgs) -> Result<()> {
    let cutoff = t.cutoff.unwrap_or(cfg.trunc.cutoff_n);
    let modes = t.modes.unwrap_or(cfg.trunc.modes);
    cfg.trunc = TruncationConfig::new(cutoff, modes)?;
    Ok(())
}

fn state_from_flags(kind: StateKind, a: &GenStateArgs) -> StateSpec {
    match kind {
        StateKind::Noon => StateSpec::Noon,
        StateKind::HermiteGauss => {
            let StateSpec::HermiteGauss {
                sigma_plus,
                sigma_minus,
                n,
            } = StateSpec::benchmark_hermite_gauss()
            else {
                unreachable!()
            };
            StateSpec::HermiteGauss {
                sigma_plus: a.sigma_plus.unwrap_or(sigma_plus),
                sigma_minus: a.sigma_minus.unwrap_or(sigma_minus),
                n: a.n.unwrap_or(n),
            }
        }
        StateKind::SqueezedVacuum => StateSpec::SqueezedVacuum {
            zeta: a.zeta.unwrap_or(0.2),
        },
        StateKind::DephasedCat => StateSpec::DephasedCat {
            alpha: a.alpha.unwrap_or(1.0),
            p: a.p.unwrap_or(0.5),
        },
        StateKind::Fock => StateSpec::Fock { n: a.n.unwrap_or(1) },
        StateKind::Coherent => StateSpec::Coherent {
            z_re: a.z_re.unwrap_or(1.0),
            z_im: a.z_im.unwrap_or(0.0),
        },
    }
}

fn cmd_gen_state(g: &GlobalArgs, cfg: &mut RunConfig, a: &GenStateArgs) -> Result<u8> {
    if let Some(kind) = a.state {
        cfg.state = state_from_flags(kind, a);
        let two_mode = !matches!(kind, StateKind::Fock | StateKind::Coherent);
        if two_mode && a.trunc.modes.is_none() {
            cfg.trunc.modes = 2;
        }
    }
    apply_trunc(cfg, &a.trunc)?;
    if g.print_config {
        return print_toml(cfg);
    }
    let rho = build_state(&cfg.state, &cfg.trunc)?;
    let out = output_path(&a.out, cfg, "state.json")?;
    rho.save(&out)?;
    emit(&json!({
        "state": cfg.state,
        "dim": rho.dim(),
        "purity": rho.purity(),
        "path": out,
    }))?;
    Ok(0)
}

fn cmd_gen_povm(g: &GlobalArgs, cfg: &mut RunConfig, a: &GenPovmArgs) -> Result<u8> {
    if let Some(kind) = a.grid {
        cfg.grid = match kind {
            GridKindArg::Quadrature => GridSpec::Quadrature {
                q_count: a.q_count,
                theta_count: a.theta_count,
            },
            GridKindArg::Coherent => GridSpec::Coherent {
                z_count: a.z_count,
                z_cell_im: a.z_cell_im,
            },
            GridKindArg::FockDemo => GridSpec::FockDemo,
        };
    }
    apply_trunc(cfg, &a.trunc)?;
    let grid = cfg.grid.build(cfg.trunc.modes)?;
    cfg.subset_size = match (a.subset, &g.config) {
        (Some(n), _) => n,
        (None, Some(_)) => cfg.subset_size,
        (None, None) => grid.cardinality(),
    };
    if g.print_config {
        return print_toml(cfg);
    }
    let indices = sample_indices(grid.cardinality(), cfg.subset_size, cfg.subset_seed)?;
    let elements = grid.elements_at(&indices, &cfg.trunc)?;
    let out = output_path(&a.out, cfg, "povm.json")?;
    PovmSetFile::from_elements(&grid, &cfg.trunc, &elements, a.materialize).save(&out)?;
    emit(&json!({
        "grid": grid.kind,
        "cardinality": grid.cardinality(),
        "measured": elements.len(),
        "subset_seed": cfg.subset_seed,
        "path": out,
    }))?;
    Ok(0)
}

fn cmd_simulate(g: &GlobalArgs, cfg: &mut RunConfig, a: &SimulateArgs) -> Result<u8> {
    if a.noiseless {
        cfg.noise.enabled = false;
    }
    if let Some(snr) = a.noise_snr {
        cfg.noise.enabled = true;
        cfg.noise.snr_percent = snr;
    }
    if let Some(seed) = a.noise_seed {
        cfg.noise.seed = seed;
    }
    if g.print_config {
        return print_toml(cfg);
    }
    let rho = load_density(&input_path(&a.state_file, cfg, "state.json"))?;
    let povm = PovmSetFile::load(&input_path(&a.povm, cfg, "povm.json"))?;
    let (grid, trunc) = (povm.header.grid.clone(), povm.header.trunc);
    if trunc != rho.trunc {
        return Err(Error::Config(format!(
            "state truncation {:?} differs from the POVM's {:?}",
            rho.trunc, trunc
        )));
    }
    let elements = povm.into_elements()?;
    let records = simulate(&rho, &elements, &cfg.noise)?;
    let poisson_intensity = if cfg.noise.enabled {
        Some(cfg.noise.intensity()?)
    } else {
        None
    };
    let dataset = Dataset {
        header: DatasetHeader {
            state: None,
            trunc,
            grid: Some(grid),
            noise: cfg.noise,
            poisson_intensity,
            created: None,
        },
        records,
    };
    let out = output_path(&a.out, cfg, "data.jsonl")?;
    dataset.save(&out)?;
    emit(&json!({
        "records": dataset.records.len(),
        "noise": cfg.noise,
        "path": out,
    }))?;
    Ok(0)
}

fn cmd_reconstruct_sdp(g: &GlobalArgs, cfg: &mut RunConfig, a: &ReconstructSdpArgs) -> Result<u8> {
    if let Some(alg) = a.algorithm {
        cfg.solver.algorithm = match alg {
            AlgorithmArg::Ip => Algorithm::InteriorPoint,
            AlgorithmArg::Admm => Algorithm::Admm,
        };
    }
    if let Some(tol) = a.tol {
        cfg.solver = cfg.solver.with_tol(tol);
    }
    if let Some(n) = a.max_iters {
        cfg.solver.max_iters = Some(n);
    }
    if let Some(eps) = a.epsilon_floor {
        cfg.epsilon_floor = eps;
    }
    if a.no_maxent {
        cfg.method = Method::SdpBiased;
    } else if cfg.method == Method::Irt {
        cfg.method = Method::Sdp;
    }
    if g.print_config {
        return print_toml(cfg);
    }
    cfg.solver.validate()?;
    let data = Dataset::load(&input_path(&a.data, cfg, "data.jsonl"))?;
    let povm = PovmSetFile::load(&input_path(&a.povm, cfg, "povm.json"))?;
    let trunc = povm.header.trunc;
    if data.header.trunc != trunc {
        return Err(Error::Config("dataset and POVM truncations differ".into()));
    }
    let elements = povm.into_elements()?;
    let problem = sdp::assemble(&elements, &data.records, &trunc, cfg.epsilon_floor)?;
    let result = if cfg.method == Method::SdpBiased {
        sdp::solve_biased(&problem, &cfg.solver)?
    } else {
        sdp::solve(&problem, &cfg.solver)?
    };
    let out = output_path(&a.out, cfg, "rho.json")?;
    let written = result.status != SolveStatus::Infeasible;
    if written {
        result.rho.save(&out)?;
    }
    emit(&json!({
        "status": result.status,
        "iterations": result.iterations,
        "objective": result.objective,
        "residuals": result.residuals,
        "delta_maxent": result.delta_maxent,
        "raw_min_eigenvalue": result.raw_min_eigenvalue,
        "projection_distance": result.projection_distance,
        "runtime_seconds": result.runtime_seconds,
        "path": written.then_some(out),
    }))?;
    Ok(result.status.exit_code() as u8)
}

fn cmd_reconstruct_irt(g: &GlobalArgs, cfg: &mut RunConfig, a: &ReconstructIrtArgs) -> Result<u8> {
    if let Some(kc) = a.kc {
        cfg.irt.cutoff_kc = kc;
    }
    if let Some(grid) = &a.grid {
        cfg.irt.grid = grid.clone();
    }
    cfg.trunc = TruncationConfig::new(a.cutoff.unwrap_or(cfg.trunc.cutoff_n), 1)?;
    cfg.method = Method::Irt;
    if g.print_config {
        return print_toml(cfg);
    }
    let kernel = KernelConfig {
        cutoff_kc: cfg.irt.cutoff_kc,
    };
    kernel.validate()?;
    let axis = wigner::parse_axis(&cfg.irt.grid)?;
    let sino = match &a.sinogram {
        Some(path) => Sinogram::load_csv(path)?,
        None => {
            let data = Dataset::load(&input_path(&a.data, cfg, "data.jsonl"))?;
            let povm = PovmSetFile::load(&input_path(&a.povm, cfg, "povm.json"))?;
            let grid = povm.header.grid.clone();
            let elements = povm.into_elements()?;
            radon::sinogram_from_records(&grid, &elements, &data.records)?
        }
    };
    if let Some(path) = &a.sinogram_out {
        sino.save_csv(path)?;
    }
    let w = radon::inverse_radon(&sino, &kernel, &axis, &axis)?;
    let out = output_path(&a.out, cfg, "wigner_irt.csv")?;
    w.save_csv(&out)?;
    let mut report = json!({
        "cutoff_kc": kernel.cutoff_kc,
        "integral": w.integral(),
        "min": w.min(),
        "max": w.max(),
        "path": out,
    });
    if let Some(path) = &a.rho_out {
        let rho = DensityMatrix::unchecked(cfg.trunc, radon::density_from_wigner(&w, &cfg.trunc)?)?;
        rho.save(path)?;
        let diag: Vec<f64> = rho.entries.diagonal().iter().map(|z| z.re).collect();
        report["rho"] = json!({
            "trace": rho.trace(),
            "min_eigenvalue": rho.min_eigenvalue(),
            "negative_diagonal": diag.iter().any(|&d| d < -pipeline::NEGATIVE_DIAGONAL_TOL),
            "diagonal": diag,
            "path": path,
        });
    }
    emit(&report)?;
    Ok(0)
}

fn cmd_wigner(g: &GlobalArgs, cfg: &RunConfig, a: &WignerArgs) -> Result<u8> {
    if g.print_config {
        return print_toml(cfg);
    }
    let rho = load_density(&input_path(&a.rho, cfg, "rho.json"))?;
    let q_axis = wigner::parse_axis(&a.grid)?;
    let p_axis = match &a.p_grid {
        Some(spec) => wigner::parse_axis(spec)?,
        None => q_axis.clone(),
    };
    let out = output_path(&a.out, cfg, "wigner.csv")?;
    if a.full {
        if rho.trunc.modes != 2 {
            return Err(Error::Config("--full applies to two-mode states".into()));
        }
        if a.json.is_some() {
            return Err(Error::Config("--json is not available with --full".into()));
        }
        let slices = wigner::wigner_two_mode_full(&rho, &q_axis, &p_axis)?;
        let mut w = std::io::BufWriter::new(fs::File::create(&out)?);
        writeln!(w, "q1,p1,q2,p2,w")?;
        for s in &slices {
            let fixed = s.mode_slice.expect("full output is built from slices");
            for (i, q) in s.q_axis.iter().enumerate() {
                for (j, p) in s.p_axis.iter().enumerate() {
                    writeln!(w, "{q},{p},{},{},{}", fixed.fixed_q, fixed.fixed_p, s.values[(i, j)])?;
                }
            }
        }
        w.flush()?;
        emit(&json!({ "points": slices.len() * q_axis.len() * p_axis.len(), "path": out }))?;
        return Ok(0);
    }
    let grid = match rho.trunc.modes {
        1 => wigner::wigner_grid(&rho, &q_axis, &p_axis)?,
        2 => {
            let slice = ModeSlice {
                plot_mode: a.plot_mode,
                fixed_q: a.fixed_q,
                fixed_p: a.fixed_p,
            };
            wigner::wigner_two_mode_slice(&rho, slice, &q_axis, &p_axis)?
        }
        m => return Err(Error::Unsupported(format!("Wigner output for {m} modes"))),
    };
    grid.save_csv(&out)?;
    if let Some(path) = &a.json {
        grid.save_json(path)?;
    }
    emit(&json!({
        "integral": grid.integral(),
        "min": grid.min(),
        "max": grid.max(),
        "mode_slice": grid.mode_slice,
        "path": out,
    }))?;
    Ok(0)
}

fn cmd_metrics(g: &GlobalArgs, cfg: &RunConfig, a: &MetricsArgs) -> Result<u8> {
    if g.print_config {
        return print_toml(cfg);
    }
    let rho = load_density(&input_path(&a.rho, cfg, "rho.json"))?;
    let min_eigenvalue = rho.min_eigenvalue();
    let min_diagonal = rho.entries.diagonal().iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let physical = min_eigenvalue >= -metrics::PSD_TOL;
    // Non-physical matrices are scored through their PSD projection.
    let scored = if physical {
        rho.clone()
    } else {
        DensityMatrix::normalized(rho.trunc, linalg::project_psd(&rho.entries))?
    };
    let mut report = json!({
        "trace": rho.trace(),
        "purity": rho.purity(),
        "min_eigenvalue": min_eigenvalue,
        "min_diagonal": min_diagonal,
        "physical": physical,
    });
    if rho.trunc.modes == 2 {
        report["negativity"] = json!(metrics::negativity(&scored)?);
    }
    let target_path = a.target.clone().or_else(|| {
        let p = cfg.outputs.join("state.json");
        p.exists().then_some(p)
    });
    if let Some(path) = target_path {
        let target = load_density(&path)?;
        report["fidelity"] = json!(metrics::fidelity(&scored, &target)?);
        report["trace_distance"] = json!(metrics::trace_distance(&scored, &target)?);
        report["target"] = json!(path);
    }
    if let Some(path) = &a.probes {
        let probes = PovmSetFile::load(path)?.into_elements()?;
        report["entropy_probe"] = json!(metrics::shannon_entropy_probe(&scored, &probes)?);
    }
    if let Some(path) = &a.out {
        fs::write(path, serde_json::to_string_pretty(&report)?)?;
    }
    emit(&report)?;
    Ok(0)
}

fn cmd_run(g: &GlobalArgs, cfg: &mut RunConfig, a: &RunArgs) -> Result<u8> {
    if let Some(m) = a.method {
        cfg.method = match m {
            MethodArg::Sdp => Method::Sdp,
            MethodArg::SdpBiased => Method::SdpBiased,
            MethodArg::Irt => Method::Irt,
        };
    }
    if let Some(n) = a.subset {
        cfg.subset_size = n;
    }
    if g.print_config {
        return print_toml(cfg);
    }
    let manifest = pipeline::run(cfg)?;
    emit(&json!({
        "outputs": cfg.outputs,
        "measured": manifest.measured,
        "summary": manifest.summary,
    }))?;
    Ok(manifest.summary.status.map_or(0, |s| s.exit_code() as u8))
}

fn cmd_sweep(g: &GlobalArgs, a: &SweepArgs) -> Result<u8> {
    let mut sc: SweepConfig = read_toml(g.config.as_deref())?;
    if let Some(dir) = &g.out_dir {
        sc.base.outputs = dir.clone();
    }
    if let Some(seed) = g.seed {
        sc.base.subset_seed = seed;
        sc.base.noise.seed = seed;
    }
    if let Some(sizes) = &a.sizes {
        sc.subset_sizes = sizes.clone();
    }
    if let Some(r) = a.repeats {
        sc.repeats = r;
    }
    if g.print_config {
        return print_toml(&sc);
    }
    let jobs = match g.jobs {
        Some(0) => return Err(Error::Config("--jobs must be positive".into())),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let report = pipeline::sweep(&sc, jobs)?;
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    write_stdout(&csv)?;
    Ok(0)
}
