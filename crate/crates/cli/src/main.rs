//! `pufkey`: rate regions, figure tables, discrete bound search, binning
//! simulation and self-checks.
//!
//! Exit codes: 0 success, 2 input error, 3 resource cap exceeded, 1 other.

mod io;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use pufkey_core::binning::{run_trials_traced, trace_csv, SimConfig, SimMode};
use pufkey_core::discrete::{
    single_state_gap, outer_intersection, search_inner_region, Caps, DiscreteCompoundModel, SearchConfig,
    TestChannelPair,
};
use pufkey_core::gaussian::{degradedness_check, saddle_gains, trace_curve, DEFAULT_CURVE_POINTS};
use pufkey_core::selfcheck::{self, Mutation};
use pufkey_core::{figures, CompoundGaussianModel, RegionKind};

use crate::io::{manifest_path, read_json, sibling, write_atomic, InputError, RunManifest};

#[derive(Parser)]
#[command(name = "pufkey", version, about = "Key, storage and leakage rate regions for PUF key generation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Trace the GS or CS boundary of a compound Gaussian model.
    GaussianRegion {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = "gs")]
        kind: RegionKind,
        #[arg(long, default_value_t = DEFAULT_CURVE_POINTS)]
        points: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the four built-in case tables (fig3a.csv .. fig3d.csv).
    Fig3 {
        #[arg(long)]
        out: PathBuf,
    },
    /// Search inner and outer bounds of a discrete compound model.
    ///
    /// Writes the inner Pareto set to OUT, the outer support table to
    /// OUT.outer.csv and, for single-state models, the coincidence gap to
    /// OUT.gap.csv.
    DiscreteBounds {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = "gs")]
        kind: RegionKind,
        /// Objective evaluations: in total for the inner search, per state
        /// pair for the outer search.
        #[arg(long, default_value_t = 5000)]
        budget: usize,
        /// Auxiliary alphabet caps `UxV`; defaults to the cardinality bounds.
        #[arg(long)]
        caps: Option<Caps>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the binning scheme and write a JSON report.
    Simulate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        test_channels: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Force exact enumeration.
        #[arg(long, conflicts_with = "trials")]
        exact: bool,
        /// Force Monte-Carlo mode with this many trials.
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Per-trial CSV (Monte-Carlo mode).
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the identity and property checks.
    Selfcheck {
        /// Perturb one formula to confirm its check fails.
        #[arg(long, hide = true)]
        mutate: Option<Mutation>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(core) = cause.downcast_ref::<pufkey_core::Error>() {
            return if matches!(core, pufkey_core::Error::CapExceeded { .. }) { 3 } else { 2 };
        }
        if cause.is::<InputError>() || cause.is::<serde_json::Error>() {
            return 2;
        }
    }
    1
}

fn run(cmd: Command) -> Result<ExitCode> {
    let started = Instant::now();
    match cmd {
        Command::GaussianRegion {
            model,
            kind,
            points,
            out,
        } => gaussian_region(&model, kind, points, &out, started),
        Command::Fig3 { out } => fig3(&out, started),
        Command::DiscreteBounds {
            model,
            kind,
            budget,
            caps,
            seed,
            out,
        } => discrete_bounds(&model, kind, budget, caps, seed, &out, started),
        Command::Simulate {
            model,
            test_channels,
            config,
            exact,
            trials,
            seed,
            trace,
            out,
        } => simulate(
            &model,
            &test_channels,
            &config,
            Overrides { exact, trials, seed },
            trace.as_deref(),
            &out,
            started,
        ),
        Command::Selfcheck { mutate } => Ok(selfcheck(mutate)),
    }
}

fn gaussian_region(model: &Path, kind: RegionKind, points: usize, out: &Path, started: Instant) -> Result<ExitCode> {
    let m: CompoundGaussianModel = read_json(model, "model")?;
    let g = saddle_gains(&m);
    println!("saddle indices: k* = {}, l* = {}", g.k_star, g.l_star);
    println!("power gains: nu_y = {}, nu_z = {}", g.nu_y, g.nu_z);
    let mut manifest = RunManifest::new("gaussian-region", started).input(model).output(out);
    if degradedness_check(&m) {
        println!("degraded: yes");
        let curve = trace_curve(&m, kind, points)?;
        write_atomic(out, curve.to_csv().as_bytes())?;
    } else {
        let note = "model is not degraded; the region is R_S = 0 with any storage and leakage rate";
        println!("degraded: no");
        eprintln!("warning: {note}");
        write_atomic(out, b"alpha,r_s,r_j,r_l\n")?;
        manifest = manifest.note(note);
    }
    manifest.duration_secs = started.elapsed().as_secs_f64();
    manifest.write(&manifest_path(out))?;
    Ok(ExitCode::SUCCESS)
}

fn fig3(out: &Path, started: Instant) -> Result<ExitCode> {
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let mut manifest = RunManifest::new("fig3", started);
    for table in figures::all()? {
        let path = out.join(format!("{}.csv", table.name));
        write_atomic(&path, table.to_csv().as_bytes())?;
        manifest = manifest.output(&path);
    }
    manifest.duration_secs = started.elapsed().as_secs_f64();
    manifest.write(&out.join("manifest.json"))?;
    Ok(ExitCode::SUCCESS)
}

fn discrete_bounds(
    model: &Path,
    kind: RegionKind,
    budget: usize,
    caps: Option<Caps>,
    seed: u64,
    out: &Path,
    started: Instant,
) -> Result<ExitCode> {
    let m: DiscreteCompoundModel = read_json(model, "model")?;
    let inner_cfg = SearchConfig::new(kind, budget, caps.unwrap_or_else(|| Caps::inner_default(&m)), seed)?;
    let outer_cfg = SearchConfig::new(kind, budget, caps.unwrap_or_else(|| Caps::outer_default(&m)), seed)?;
    let front = search_inner_region(&m, &inner_cfg)?;
    let warm: Vec<TestChannelPair> = front.entries().iter().map(|e| e.channels.clone()).collect();
    let outer = outer_intersection(&m, &outer_cfg, &warm)?;
    println!("inner Pareto points: {}", front.len());
    println!("max key rate found: {}", front.max_key_rate());

    let outer_path = sibling(out, "outer");
    write_atomic(out, front.to_csv().as_bytes())?;
    write_atomic(&outer_path, outer.to_csv().as_bytes())?;
    let mut manifest = RunManifest::new("discrete-bounds", started)
        .input(model)
        .seed(seed)
        .output(out)
        .output(&outer_path);
    if m.num_decoder_states() == 1 && m.num_eve_states() == 1 {
        let gap = single_state_gap(&m, &outer_cfg)?;
        println!("inner/outer support gap: {}", gap.gap);
        let gap_path = sibling(out, "gap");
        write_atomic(&gap_path, gap.to_csv().as_bytes())?;
        manifest = manifest.output(&gap_path);
    }
    manifest.duration_secs = started.elapsed().as_secs_f64();
    manifest.write(&manifest_path(out))?;
    Ok(ExitCode::SUCCESS)
}

struct Overrides {
    exact: bool,
    trials: Option<usize>,
    seed: Option<u64>,
}

fn simulate(
    model: &Path,
    test_channels: &Path,
    config: &Path,
    over: Overrides,
    trace: Option<&Path>,
    out: &Path,
    started: Instant,
) -> Result<ExitCode> {
    let m: DiscreteCompoundModel = read_json(model, "model")?;
    let t: TestChannelPair = read_json(test_channels, "test channels")?;
    let mut cfg: SimConfig = read_json(config, "simulation config")?;
    if over.exact {
        cfg.mode = SimMode::Exact;
    }
    if let Some(n) = over.trials {
        cfg.mode = SimMode::MonteCarlo;
        cfg.trials = n;
    }
    if let Some(s) = over.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let (report, records) = run_trials_traced(&m, &t, &cfg)?;
    let mut json = serde_json::to_vec_pretty(&report)?;
    json.push(b'\n');
    write_atomic(out, &json)?;
    println!("max error probability: {}", report.max_error_prob);
    println!("key TV distance to uniform: {}", report.key_tv_uniform);
    println!("max secrecy leakage: {} bits", report.max_secrecy_leak);
    println!("max privacy leakage: {} bits", report.max_privacy_leak);
    let mut manifest = RunManifest::new("simulate", started)
        .input(model)
        .input(test_channels)
        .input(config)
        .seed(cfg.seed)
        .output(out);
    if let Some(path) = trace {
        if cfg.mode == SimMode::Exact {
            eprintln!("warning: no per-trial trace in exact mode");
        } else {
            write_atomic(path, trace_csv(&records).as_bytes())?;
            manifest = manifest.output(path);
        }
    }
    manifest.duration_secs = started.elapsed().as_secs_f64();
    manifest.write(&manifest_path(out))?;
    Ok(ExitCode::SUCCESS)
}

fn selfcheck(mutate: Option<Mutation>) -> ExitCode {
    if let Some(m) = mutate {
        println!("mutation active: {m}");
    }
    let outcomes = selfcheck::run(mutate);
    for o in &outcomes {
        println!("{o}");
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    if failed == 0 {
        println!("all {} checks passed", outcomes.len());
        ExitCode::SUCCESS
    } else {
        println!("{failed} of {} checks failed", outcomes.len());
        ExitCode::FAILURE
    }
}
