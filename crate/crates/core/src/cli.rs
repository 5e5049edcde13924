//! Command-line front end. Exit codes: 0 success, 1 unreadable or malformed
//! input, 2 violated numeric precondition, 3 resource cap, 4 a validation
//! check failed. Set `RAYON_NUM_THREADS` to bound the worker threads.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::error::{Error, Result};
use crate::modelfile::ModelSpec;
use crate::models::{build_dgp, build_percolation};
use crate::ode::ode_solve;
use crate::purebirth::{geometric_bound, pn_closed_form, pn_finite_n, birth_step, truncation_index, TAIL_TOL};
use crate::simulator::{tagged_histories, tagged_law, simulate, Init};
use crate::statespace::Measure;
use crate::trees::{count_arrangements, count_trees, enumerate_arrangements, enumerate_trees, DEFAULT_ARRANGEMENT_CAP, DEFAULT_TREE_CAP};
use crate::validate::{validate_model, ValidateConfig};

pub const EXIT_CHECK_FAILED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "wildkac", version, about = "Series, integrator and simulator for m-ary interaction models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print a built-in model in the model file format.
    Model(ModelArgs),
    /// Count or list interaction trees and arrangements.
    Trees(TreesArgs),
    /// Branching-count laws side by side as CSV.
    Birth(BirthArgs),
    /// Law of one component at time t.
    Solve(SolveArgs),
    /// Run the agent simulation.
    Simulate(SimulateArgs),
    /// Cross-check series, integrator and simulator on one model.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BuiltinModel {
    Dgp,
    Percolation,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    pub which: BuiltinModel,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Up-move rate of the market model.
    #[arg(long, default_value_t = 0.2)]
    pub gamma_u: f64,
    /// Down-move rate of the market model.
    #[arg(long, default_value_t = 0.05)]
    pub gamma_d: f64,
    /// Regression rate of the information model.
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    /// Meeting size of the information model.
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    /// Highest information level.
    #[arg(long, default_value_t = 16)]
    pub levels: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TreesArgs {
    #[command(subcommand)]
    pub action: TreesAction,
}

#[derive(Debug, Subcommand)]
pub enum TreesAction {
    /// Number of ordered m-ary trees with n internal nodes.
    Count {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
    },
    /// Every tree, one per line, e.g. ((LLL)LL).
    List {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        /// Print node labels, e.g. (1:(2:LLL)LL).
        #[arg(long)]
        labeled: bool,
        #[arg(long, default_value_t = DEFAULT_TREE_CAP)]
        cap: usize,
    },
    /// Number of ways to put p moves on the given number of branches.
    Arrangements {
        #[arg(long)]
        boxes: usize,
        #[arg(long)]
        p: usize,
        /// Print every arrangement.
        #[arg(long)]
        list: bool,
        #[arg(long, default_value_t = DEFAULT_ARRANGEMENT_CAP)]
        cap: usize,
    },
}

#[derive(Debug, Args)]
pub struct BirthArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub t: f64,
    /// Population size of the finite-population column.
    #[arg(long = "agents", visible_alias = "N")]
    pub agents: usize,
    #[arg(long)]
    pub n_max: Option<usize>,
    #[arg(long)]
    pub step: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Wild,
    Ode,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Flags shared by the model-driven commands.
#[derive(Debug, Args)]
pub struct RunConfig {
    /// Model file, or `dgp` / `percolation` for the built-in defaults.
    #[arg(long, default_value = "dgp")]
    pub model: String,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub step: f64,
    /// Bound on the discarded series mass.
    #[arg(long, default_value_t = 1e-8)]
    pub eps: f64,
    #[arg(long, default_value_t = 1000)]
    pub agents: usize,
    #[arg(long, default_value_t = 100)]
    pub replications: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long, value_enum, default_value_t = Method::Wild)]
    pub method: Method,
    #[command(flatten)]
    pub run: RunConfig,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub run: RunConfig,
    /// Print the reduced history of agent 0 of every replication.
    #[arg(long)]
    pub tag_histories: bool,
    /// Write the events of replication 0 as JSON lines.
    #[arg(long)]
    pub events: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub run: RunConfig,
    #[arg(long, default_value_t = 1e-6)]
    pub ode_tol: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub residual_tol: f64,
    #[arg(long, default_value_t = 0.05)]
    pub mc_tol: f64,
}

pub fn load_model(name: &str) -> Result<ModelSpec> {
    match name {
        "dgp" => Ok(build_dgp(1.0, 0.2, 0.05).to_spec()),
        "percolation" => {
            let mut pi = vec![0.0; 17];
            pi[1] = 1.0;
            Ok(build_percolation(2, 16, &pi, 1.0, 0.5)?.to_spec())
        }
        path => ModelSpec::parse(&fs::read_to_string(path)?),
    }
}

fn emit(out: &mut dyn Write, path: &Option<PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn law_table(law: &Measure, format: Format, meta: serde_json::Value) -> String {
    let labels = law.space().labels();
    match format {
        Format::Csv => {
            let mut s = String::new();
            if let Some(obj) = meta.as_object() {
                let parts: Vec<String> = obj.iter().map(|(k, v)| format!("{k}={v}")).collect();
                s.push_str(&format!("# {}\n", parts.join(" ")));
            }
            s.push_str("state,weight\n");
            for (l, w) in labels.iter().zip(law.weights()) {
                s.push_str(&format!("{l},{w}\n"));
            }
            s
        }
        Format::Json => {
            let rows: Vec<_> = labels
                .iter()
                .zip(law.weights())
                .map(|(l, w)| json!({"state": l, "weight": w}))
                .collect();
            let mut doc = meta;
            doc["law"] = json!(rows);
            format!("{}\n", serde_json::to_string_pretty(&doc).expect("serialisable"))
        }
    }
}

/// Runs one command, writing its output to `out` unless an output path is
/// given; returns the process exit code.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    match cli.command {
        Command::Model(a) => cmd_model(a, out),
        Command::Trees(a) => cmd_trees(a, out),
        Command::Birth(a) => cmd_birth(a, out),
        Command::Solve(a) => cmd_solve(a, out),
        Command::Simulate(a) => cmd_simulate(a, out),
        Command::Validate(a) => cmd_validate(a, out),
    }
}

fn cmd_model(a: ModelArgs, out: &mut dyn Write) -> Result<i32> {
    let spec = match a.which {
        BuiltinModel::Dgp => build_dgp(a.lambda, a.gamma_u, a.gamma_d).to_spec(),
        BuiltinModel::Percolation => {
            let mut pi = vec![0.0; a.levels + 1];
            *pi.get_mut(1).ok_or_else(|| Error::param("levels must be at least 1"))? = 1.0;
            build_percolation(a.m, a.levels, &pi, a.lambda, a.gamma)?.to_spec()
        }
    };
    emit(out, &a.out, &spec.to_text())?;
    Ok(0)
}

fn cmd_trees(a: TreesArgs, out: &mut dyn Write) -> Result<i32> {
    let text = match a.action {
        TreesAction::Count { m, n } => {
            if m < 2 {
                return Err(Error::param("m must be at least 2"));
            }
            format!("{}\n", count_trees(m, n))
        }
        TreesAction::List { m, n, labeled, cap } => {
            let mut s = String::new();
            for t in enumerate_trees(m, n, cap)? {
                s.push_str(&if labeled { t.labeled() } else { t.shape() });
                s.push('\n');
            }
            s
        }
        TreesAction::Arrangements { boxes, p, list, cap } => {
            if boxes == 0 {
                return Err(Error::param("boxes must be at least 1"));
            }
            if list {
                let mut s = String::new();
                for arr in enumerate_arrangements(boxes, p, cap)? {
                    let c: Vec<String> = arr.counts().iter().map(|c| c.to_string()).collect();
                    s.push_str(&format!("{}\n", c.join(",")));
                }
                s
            } else {
                format!("{}\n", count_arrangements(boxes, p))
            }
        }
    };
    out.write_all(text.as_bytes())?;
    Ok(0)
}

fn cmd_birth(a: BirthArgs, out: &mut dyn Write) -> Result<i32> {
    let n_max = a.n_max.unwrap_or_else(|| truncation_index(a.m, a.t, TAIL_TOL));
    let step = a.step.unwrap_or_else(|| birth_step(a.t));
    let finite = pn_finite_n(a.m, a.agents, a.t, n_max, step)?;
    let mut s = String::from("n,limit,finite_n,dominating\n");
    for n in 0..=n_max {
        s.push_str(&format!(
            "{n},{},{},{}\n",
            pn_closed_form(a.m, a.t, n),
            finite.get(n),
            geometric_bound(a.m, a.t, n)
        ));
    }
    out.write_all(s.as_bytes())?;
    Ok(0)
}

fn cmd_solve(a: SolveArgs, out: &mut dyn Write) -> Result<i32> {
    let r = &a.run;
    let spec = load_model(&r.model)?;
    let mu0 = &spec.init;
    let (law, meta) = match a.method {
        Method::Wild => {
            let res = spec.series(mu0, r.t, r.eps)?;
            let meta = json!({
                "method": "wild", "t": r.t, "eps": r.eps,
                "terms_used": [res.terms_used.0, res.terms_used.1],
                "tail_bound": res.tail_bound,
            });
            (res.law, meta)
        }
        Method::Ode => {
            let law = ode_solve(&spec.generator()?, mu0, r.t, r.step.min(r.t.max(f64::MIN_POSITIVE)))?;
            (law, json!({"method": "ode", "t": r.t, "step": r.step}))
        }
        Method::Mc => {
            let est = tagged_law(&spec.sim_model()?, mu0, r.agents, r.t, r.seed, r.replications)?;
            let meta = json!({
                "method": "mc", "t": r.t, "agents": r.agents, "replications": r.replications,
                "seed": r.seed, "half_width": est.half_width,
            });
            (est.law, meta)
        }
    };
    emit(out, &r.out, &law_table(&law, r.format, meta))?;
    Ok(0)
}

fn cmd_simulate(a: SimulateArgs, out: &mut dyn Write) -> Result<i32> {
    let r = &a.run;
    let spec = load_model(&r.model)?;
    let model = spec.sim_model()?;
    if let Some(path) = &a.events {
        let (_, log) = simulate(&model, &Init::Law(spec.init.clone()), r.agents, r.t, r.seed)?;
        log.write_jsonl(fs::File::create(path)?)?;
    }
    let text = if a.tag_histories {
        let hs = tagged_histories(&model, &Init::Law(spec.init.clone()), r.agents, r.t, r.seed, r.replications, 1)?;
        let mut s = String::from("replication,branchings,shape,unary_moves,cycles\n");
        for (i, h) in hs.iter().enumerate() {
            s.push_str(&format!(
                "{i},{},{},{},{}\n",
                h.tree.internal_count(),
                h.tree.shape(),
                h.arrangement.total(),
                h.cycle_count
            ));
        }
        s
    } else {
        let est = tagged_law(&model, &spec.init, r.agents, r.t, r.seed, r.replications)?;
        let meta = json!({
            "method": "mc", "t": r.t, "agents": r.agents, "replications": r.replications,
            "seed": r.seed, "half_width": est.half_width,
        });
        law_table(&est.law, r.format, meta)
    };
    emit(out, &r.out, &text)?;
    Ok(0)
}

fn cmd_validate(a: ValidateArgs, out: &mut dyn Write) -> Result<i32> {
    let r = &a.run;
    let spec = load_model(&r.model)?;
    let cfg = ValidateConfig {
        t: r.t,
        eps: r.eps,
        step: r.step,
        agents: r.agents,
        replications: r.replications,
        seed: r.seed,
        ode_tol: a.ode_tol,
        residual_tol: a.residual_tol,
        mc_tol: a.mc_tol,
    };
    let report = validate_model(&spec, &cfg)?;
    let text = format!("{}\n", serde_json::to_string_pretty(&report).expect("serialisable"));
    emit(out, &r.out, &text)?;
    Ok(if report.all_pass { 0 } else { EXIT_CHECK_FAILED })
}
