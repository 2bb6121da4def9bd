//! `sogrid optimize`: search placement space, log progress, and emit the
//! best placement plus an optimality certificate.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use sogrid_core::grid::load_psog;
use sogrid_core::optimizer::cma::{optimize, CmaParams, OptimizeConfig};
use sogrid_core::optimizer::{certify, ConstraintSpec, PlacementObjective};
use sogrid_core::raycast::{save_placements, NamedPlacement, OcclusionMode, Placement};
use sogrid_core::LidarSpec;

use crate::commands::{resolve_mode, write_atomic};
use crate::config::{read_toml, OptimizeRunConfig};
use crate::errors::{CliError, CliResult};
use crate::manifest::RunRecorder;

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Field file; overrides the config's `psog` entry.
    #[arg(long)]
    pub psog: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the config's iteration budget.
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Output directory; created if missing.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &OptimizeArgs) -> CliResult<()> {
    let mut recorder = RunRecorder::new("optimize");
    recorder.config(&args.config).input(&args.config);

    let cfg: OptimizeRunConfig = read_toml(&args.config)?;
    let seed = args.seed.unwrap_or(cfg.seed);
    let iterations = args.iterations.unwrap_or(cfg.iterations);
    recorder.seed(seed);

    let psog_path = args
        .psog
        .clone()
        .or_else(|| cfg.psog.clone())
        .ok_or_else(|| CliError::usage("no field file: set `psog` in the config or pass --psog"))?;
    recorder.input(&psog_path);

    let psog = load_psog(&psog_path).map_err(CliError::data)?;
    let field = psog.finalize().map_err(CliError::data)?;
    let mode = resolve_mode(&cfg.mode, field.classes())?;
    let occlusion: OcclusionMode = cfg.occlusion.parse().map_err(CliError::usage)?;
    let spec = match &cfg.sensor {
        Some(s) => s.build_spec()?,
        None => LidarSpec::default(),
    };
    let space = cfg.build_space()?;

    let constraints = ConstraintSpec {
        min_mutual_distance: cfg.min_mutual_distance,
        lambda: cfg.lambda.unwrap_or(0.0),
    };
    let mut objective =
        PlacementObjective::new(&field, mode, spec, occlusion, constraints, space.clone())
            .map_err(CliError::usage)?;
    let lambda = match cfg.lambda {
        Some(l) => l,
        None => objective.calibrate_lambda(seed),
    };
    objective.constraints.lambda = lambda;

    let mut params = CmaParams::standard(space.n_dims());
    params.whiten_step_path = cfg.whiten_step_path;
    let run_config = OptimizeConfig {
        space: space.clone(),
        iterations,
        seed,
        init_mean: None,
        init_sigma: cfg.init_sigma,
        params: Some(params),
    };
    let result = optimize(&run_config, |u| objective.evaluate(u)).map_err(CliError::numeric)?;
    let certificate = certify(&result.evals, &space, result.best_g, cfg.analytic_k_g)
        .map_err(CliError::numeric)?;

    std::fs::create_dir_all(&args.out).map_err(CliError::data)?;

    // Per-iteration log; the best-so-far column never increases.
    let status = if result.feasible_found {
        "feasible"
    } else {
        "no-feasible-candidate"
    };
    let mut log = String::new();
    writeln!(log, "# seed {seed} iterations {iterations} lambda {lambda} mode {mode}").unwrap();
    writeln!(log, "# status {status}").unwrap();
    writeln!(log, "# k\tbest_g\tmean_g\tsigma").unwrap();
    for row in &result.history {
        writeln!(log, "{}\t{}\t{}\t{}", row.k, row.best_so_far, row.mean_g, row.sigma).unwrap();
    }
    let log_path = args.out.join("optimize.log");
    write_atomic(&log_path, &log)?;

    let placement =
        Placement::from_vector(&result.best_u, spec).map_err(CliError::numeric)?;
    let best_path = args.out.join("best.placements");
    save_placements(
        &[NamedPlacement {
            name: "optimized".to_string(),
            placement,
        }],
        &best_path,
    )
    .map_err(CliError::data)?;

    let cert_path = args.out.join("certificate.txt");
    write_atomic(&cert_path, &certificate.to_text_block())?;

    if !result.feasible_found {
        eprintln!("warning: no feasible candidate was sampled; best is constraint-violating");
    }
    println!(
        "optimize: best G {} ({}), penalty {}, {} evaluations, bound_thm1 {}",
        result.best_g,
        status,
        result.best_penalty,
        certificate.n_samples,
        certificate.bound_thm1
    );

    recorder
        .output(&best_path)
        .output(&log_path)
        .output(&cert_path);
    recorder.write(&args.out.join("run.manifest.toml"))
}
