//! Command-line front end for witness-forge.
//!
//! Every subcommand emits a [`RunReport`] as JSON: the echoed arguments, the
//! seed, the effective tolerances, the result payload and the wall time.
//! Re-running the echoed arguments with the same seed reproduces the payload.

pub mod error;
pub mod matrix_file;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use witness_forge_core::duality::{self, detects, kill_value, pairing};
use witness_forge_core::exposed::{
    canonical_kill_vectors, certify_exposedness, d_polynomial, d_scale, decompose_on_plane, det_oracle,
    inequality_chain_check, DoubleDualParams, ExposednessConfig,
};
use witness_forge_core::linalg::{eig_min, span_rank, CMatrix, CVector, DEFAULT_RANK_TOL};
use witness_forge_core::maps::{
    classify_choi_params_detailed, generalized_choi, identity_map, is_ccp, is_cp, phi_t, transpose_map,
};
use witness_forge_core::ppt::{find_detected_ppt_state, search_succeeded, PptSearchConfig};
use witness_forge_core::{ChoiParams, LinMapRep, TParam};

pub use error::{CliError, CliResult};
pub use matrix_file::{MatrixFile, MatrixKind};

#[derive(Debug, Parser)]
#[command(name = "witness-forge", version, about = "Entanglement witnesses from positive maps")]
pub struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, env = "WITNESS_FORGE_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Overrides the main tolerance of the subcommand.
    #[arg(long, global = true)]
    pub tol: Option<f64>,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Builtin {
    Identity,
    Transpose,
}

/// Where the map comes from: a Choi file, `Φ(t)`, `Φ[a,b,c]` or a builtin.
#[derive(Debug, Clone, Args)]
pub struct MapArgs {
    #[arg(long)]
    pub map: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub t: Option<f64>,
    #[arg(long, allow_negative_numbers = true, requires_all = ["b", "c"])]
    pub a: Option<f64>,
    #[arg(long, allow_negative_numbers = true, requires_all = ["a", "c"])]
    pub b: Option<f64>,
    #[arg(long, allow_negative_numbers = true, requires_all = ["a", "b"])]
    pub c: Option<f64>,
    #[arg(long, value_enum)]
    pub builtin: Option<Builtin>,
    /// Dimension for builtin maps.
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
}

impl MapArgs {
    pub fn resolve(&self) -> CliResult<LinMapRep> {
        let sources = [self.map.is_some(), self.t.is_some(), self.a.is_some(), self.builtin.is_some()];
        match sources.iter().filter(|&&s| s).count() {
            0 => return Err(CliError::Usage("give one of --map, --t, --a/--b/--c or --builtin".into())),
            1 => {}
            _ => return Err(CliError::Usage("--map, --t, --a/--b/--c and --builtin are exclusive".into())),
        }
        if let Some(path) = &self.map {
            return MatrixFile::load(path)?.to_map();
        }
        if let Some(t) = self.t {
            return Ok(phi_t(&TParam::new(t)?));
        }
        if let (Some(a), Some(b), Some(c)) = (self.a, self.b, self.c) {
            return Ok(generalized_choi(&ChoiParams::new(a, b, c)?));
        }
        if self.dim == 0 {
            return Err(CliError::Usage("--dim must be positive".into()));
        }
        Ok(match self.builtin.expect("one source is set") {
            Builtin::Identity => identity_map(self.dim),
            Builtin::Transpose => transpose_map(self.dim),
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct AbcArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub a: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub b: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub c: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form classification of Φ[a,b,c].
    Classify(AbcArgs),
    /// Choi matrix of a map.
    Choi {
        #[command(flatten)]
        map: MapArgs,
        /// Also save the Choi matrix as a map-choi file.
        #[arg(long)]
        save: Option<PathBuf>,
    },
    /// Applies a map to a matrix stored as a state file with dims [m, 1].
    Apply {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long)]
        x: PathBuf,
    },
    /// Pairing between a state and a map.
    Pairing {
        #[arg(long)]
        state: PathBuf,
        #[command(flatten)]
        map: MapArgs,
    },
    /// Witness report of a map against a state.
    Detect {
        #[arg(long)]
        state: PathBuf,
        #[command(flatten)]
        map: MapArgs,
    },
    /// The nine canonical kill vectors of Φ(t) and their span ranks.
    Killset {
        #[arg(long, allow_negative_numbers = true)]
        t: f64,
    },
    /// Exposedness certificate for Φ(t).
    Expose {
        #[arg(long, allow_negative_numbers = true)]
        t: f64,
        #[arg(long, default_value_t = 24)]
        phases: usize,
        #[arg(long, default_value_t = 5000)]
        budget: usize,
    },
    /// Searches for a PPT state detected by the map.
    FindPpt {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, default_value_t = 2000)]
        iterations: usize,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
        #[arg(long, default_value_t = 0.05)]
        step_size: f64,
        #[arg(long, default_value_t = 1e-6)]
        mixing: f64,
        /// Save the best state found as a state file.
        #[arg(long)]
        save: Option<PathBuf>,
    },
    /// Splits Φ[a,b,c] with a+b+c=2 into Φ[2,0,0] and Φ(t).
    Decompose(AbcArgs),
    /// The determinant polynomial D of the double-dual candidate.
    Dpoly {
        #[arg(long, allow_negative_numbers = true)]
        t: f64,
        #[arg(long, allow_negative_numbers = true)]
        p: f64,
        #[arg(long, allow_negative_numbers = true)]
        q: f64,
        #[arg(long, allow_negative_numbers = true)]
        r: f64,
        /// Defaults to 3α = (1-t)²(p+q+r).
        #[arg(long, allow_negative_numbers = true)]
        alpha: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: Vec<String>,
    pub seed: u64,
    pub tolerances: BTreeMap<String, f64>,
    pub result: Value,
    pub wall_time_secs: f64,
}

fn cvec_json(v: &CVector) -> Value {
    json!({
        "re": v.iter().map(|z| z.re).collect::<Vec<_>>(),
        "im": v.iter().map(|z| z.im).collect::<Vec<_>>(),
    })
}

fn cmat_json(a: &CMatrix) -> Value {
    let (rows, cols) = a.shape();
    let entries = |f: fn(&witness_forge_core::C64) -> f64| -> Vec<f64> {
        (0..rows).flat_map(|r| (0..cols).map(move |c| (r, c))).map(|(r, c)| f(&a[(r, c)])).collect()
    };
    json!({ "rows": rows, "cols": cols, "re": entries(|z| z.re), "im": entries(|z| z.im) })
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report payloads serialize")
}

fn load_state(path: &Path, map: &LinMapRep) -> CliResult<(witness_forge_core::HermMatrix, witness_forge_core::BipartiteDims)> {
    let file = MatrixFile::load(path)?;
    let a = file.to_state()?;
    let dims = file.bipartite_dims()?;
    if dims != map.state_dims() {
        return Err(witness_forge_core::Error::DimensionMismatch(format!(
            "state dims {:?} but the map pairs with C^{} ⊗ C^{}",
            file.dims,
            map.dim_out(),
            map.dim_in()
        ))
        .into());
    }
    Ok((a, dims))
}

/// Runs one parsed command and returns its payload and effective tolerances.
fn dispatch(cli: &Cli) -> CliResult<(Value, BTreeMap<String, f64>)> {
    let mut tols = BTreeMap::new();
    let result = match &cli.command {
        Command::Classify(p) => {
            let params = ChoiParams::new(p.a, p.b, p.c)?;
            let detail = classify_choi_params_detailed(&params);
            let map = generalized_choi(&params);
            json!({
                "params": params,
                "class": detail.class,
                "margins": {
                    "sum": detail.sum_margin,
                    "positivity": detail.positivity_margin,
                    "decomposability": detail.decomposability_margin,
                    "cp": detail.cp_margin,
                    "cocp": detail.cocp_margin,
                },
                "eigen_cp": is_cp(&map),
                "eigen_cocp": is_ccp(&map),
            })
        }
        Command::Choi { map, save } => {
            let w = map.resolve()?;
            let file = MatrixFile::from_map(&w);
            if let Some(path) = save {
                file.save(path)?;
            }
            json!({
                "dim_in": w.dim_in(),
                "dim_out": w.dim_out(),
                "min_eigenvalue": eig_min(w.choi()),
                "choi": to_value(&file),
            })
        }
        Command::Apply { map, x } => {
            let w = map.resolve()?;
            let file = MatrixFile::load(x)?;
            let xm = file.to_state()?;
            if file.dims[1] != 1 {
                return Err(CliError::Usage("--x must be a state file with dims [m, 1]".into()));
            }
            let out = w.apply(xm.as_matrix())?;
            json!({ "output": cmat_json(&out) })
        }
        Command::Pairing { state, map } => {
            let w = map.resolve()?;
            let (a, _) = load_state(state, &w)?;
            json!({ "pairing": pairing(&a, &w)? })
        }
        Command::Detect { state, map } => {
            let w = map.resolve()?;
            let (a, dims) = load_state(state, &w)?;
            tols.insert("detection_threshold".into(), duality::detection_threshold(&w, &a));
            to_value(&detects(&w, &a, dims)?)
        }
        Command::Killset { t } => {
            let tol = cli.tol.unwrap_or(1e-10);
            tols.insert("kill_value".into(), tol);
            tols.insert("rank".into(), DEFAULT_RANK_TOL);
            let set = canonical_kill_vectors(*t)?;
            let w = phi_t(&TParam::new(*t)?);
            let mut vectors = Vec::new();
            let mut max_abs = 0.0f64;
            for pv in &set.vectors {
                let value = kill_value(&w, pv)?;
                max_abs = max_abs.max(value.abs());
                vectors.push(json!({ "x": cvec_json(pv.x()), "ybar": cvec_json(&pv.ybar()), "kill_value": value }));
            }
            let embedded: Vec<_> = set.vectors.iter().map(|p| p.embedded().clone()).collect();
            let conjugate: Vec<_> = set.vectors.iter().map(|p| p.partial_conjugate().clone()).collect();
            json!({
                "t": set.t,
                "vectors": vectors,
                "max_abs_kill_value": max_abs,
                "all_killed": max_abs <= tol,
                "embedded_rank": span_rank(&embedded, DEFAULT_RANK_TOL)?,
                "conjugate_rank": span_rank(&conjugate, DEFAULT_RANK_TOL)?,
            })
        }
        Command::Expose { t, phases, budget } => {
            let mut cfg = ExposednessConfig { phase_samples: *phases, budget: *budget, seed: cli.seed, ..Default::default() };
            if let Some(tol) = cli.tol {
                cfg.positivity_tol = tol;
            }
            tols.insert("positivity".into(), cfg.positivity_tol);
            tols.insert("svd_cutoff".into(), cfg.svd_cutoff);
            to_value(&certify_exposedness(*t, &cfg)?)
        }
        Command::FindPpt { map, iterations, restarts, step_size, mixing, save } => {
            let w = map.resolve()?;
            let mut cfg = PptSearchConfig {
                max_iterations: *iterations,
                restarts: *restarts,
                step_size: *step_size,
                mixing_epsilon: *mixing,
                seed: cli.seed,
                ..Default::default()
            };
            if let Some(tol) = cli.tol {
                cfg.tolerance = tol;
            }
            tols.insert("detection".into(), cfg.tolerance);
            tols.insert("mixing_epsilon".into(), cfg.mixing_epsilon);
            let (state, report) = find_detected_ppt_state(&w, &cfg)?;
            let found = search_succeeded(&report, &cfg);
            let file = MatrixFile::from_state(&state, w.state_dims());
            if let Some(path) = save {
                file.save(path)?;
            }
            json!({
                "found": found,
                "summary": if found { "detected a PPT state" } else { "no detection found within budget" },
                "report": report,
                "trace": state.trace(),
                "config": cfg,
                "state": to_value(&file),
            })
        }
        Command::Decompose(p) => {
            let tol = cli.tol.unwrap_or(1e-6);
            tols.insert("plane".into(), tol);
            let params = ChoiParams::new(p.a, p.b, p.c)?;
            to_value(&decompose_on_plane(&params, tol)?)
        }
        Command::Dpoly { t, p, q, r, alpha } => {
            let params = match alpha {
                Some(alpha) => DoubleDualParams::new(*t, *alpha, *p, *q, *r)?,
                None => DoubleDualParams::with_case1_constraint(*t, *p, *q, *r)?,
            };
            let chain = inequality_chain_check(&params)?;
            json!({
                "params": params,
                "d": d_polynomial(&params),
                "determinant": det_oracle(&params),
                "scale": d_scale(&params),
                "case1_defect": params.case1_defect(),
                "chain": chain,
            })
        }
    };
    Ok((result, tols))
}

/// Executes a parsed command line; `argv` is echoed into the report.
pub fn execute(cli: &Cli, argv: Vec<String>) -> CliResult<RunReport> {
    let start = Instant::now();
    let (result, tolerances) = dispatch(cli)?;
    Ok(RunReport { command: argv, seed: cli.seed, tolerances, result, wall_time_secs: start.elapsed().as_secs_f64() })
}

/// Parses, runs and writes the report; returns the process exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = execute(&cli, argv.iter().skip(1).cloned().collect()).and_then(|report| {
        let text = serde_json::to_string_pretty(&report).expect("reports serialize") + "\n";
        match &cli.out {
            Some(path) => fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    });
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("witness-forge: {e}");
            e.exit_code()
        }
    }
}
