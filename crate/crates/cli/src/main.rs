use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lctrotter::experiments::{self, ExperimentConfig, OutputFormat, Table};
use lctrotter::trotter::MergePolicy;
use lctrotter::{Error, NormMode};

#[derive(Parser, Debug)]
#[command(name = "lctrotter", version, about = "Light-cone Trotter bounds, circuits and experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Default)]
struct Common {
    /// JSON config file; flags given on the command line override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// mfi, tfi, powerlaw, nn2d or file.
    #[arg(long, global = true)]
    model: Option<String>,
    /// Model parameters, e.g. `J=1,h=0.5,alpha=4`.
    #[arg(long, global = true)]
    params: Option<String>,
    /// Hamiltonian file (JSON or text) for `--model file`.
    #[arg(long, global = true)]
    file: Option<String>,
    /// z:<q>, zsum, mag, zz-avg, proj:<k> or file:<path>.
    #[arg(long, global = true)]
    observable: Option<String>,
    /// System size, or a comma-separated sweep.
    #[arg(long, global = true, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long, global = true)]
    t: Option<f64>,
    /// Evolution time per site (t = value · n).
    #[arg(long, global = true)]
    t_per_n: Option<f64>,
    #[arg(long, global = true)]
    r: Option<usize>,
    #[arg(long, global = true)]
    order: Option<u32>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// dense or one-norm.
    #[arg(long, global = true)]
    norm_mode: Option<NormMode>,
    /// Disable merging of identical adjacent exponentials.
    #[arg(long, global = true)]
    no_merge: bool,
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// csv or json.
    #[arg(long, global = true)]
    format: Option<OutputFormat>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate one error bound, optionally searching for the step count.
    Bound {
        /// worst, thm1, thm2, rand2, rand1 or rand-noobs.
        #[arg(long)]
        bound: Option<String>,
        #[arg(long)]
        search_r: bool,
        #[arg(long)]
        r_max: Option<usize>,
    },
    /// Step and exponential counts per method over a size sweep.
    Gatecount {
        /// Summed observable for the chromatic comparison.
        #[arg(long)]
        global_observable: Option<String>,
        #[arg(long)]
        empirical_limit: Option<usize>,
        #[arg(long)]
        r_max: Option<usize>,
    },
    /// Guaranteed times under a gate budget and rate-function series.
    Dqpt {
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long)]
        t_step: Option<f64>,
        /// Also write the rate-function series to this path.
        #[arg(long)]
        series: Option<PathBuf>,
    },
    /// Average-case bounds against Haar-sampled errors.
    Random {
        #[arg(long)]
        empirical_limit: Option<usize>,
    },
    /// Build one circuit and measure its error.
    Simulate {
        /// standard, reduced or chromatic.
        #[arg(long)]
        method: Option<String>,
        /// Write the gate list as JSON.
        #[arg(long)]
        emit_circuit: Option<PathBuf>,
    },
    /// Dump a decomposition of the model as JSON.
    Decompose {
        /// edge-sets, hypergraph or cubes.
        #[arg(long, default_value = "edge-sets")]
        kind: String,
        /// Truncation radius for `cubes`.
        #[arg(long)]
        d0: Option<f64>,
    },
}

fn resolve(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let c = &cli.common;
    let mut cfg = match &c.config {
        Some(path) => ExperimentConfig::from_json(&std::fs::read_to_string(path)?)?,
        None => ExperimentConfig::default(),
    };
    macro_rules! set {
        ($src:expr => $dst:expr) => {
            if let Some(v) = $src.clone() {
                $dst = v;
            }
        };
        ($src:expr => opt $dst:expr) => {
            if let Some(v) = $src.clone() {
                $dst = Some(v);
            }
        };
    }
    set!(c.model => cfg.model);
    if let Some(p) = &c.params {
        cfg.set_params(p)?;
    }
    set!(c.file => opt cfg.file);
    set!(c.observable => cfg.observable);
    match c.n.len() {
        0 => {}
        1 => {
            cfg.n = Some(c.n[0]);
            cfg.n_values.clear();
        }
        _ => cfg.n_values = c.n.clone(),
    }
    set!(c.t => opt cfg.t);
    set!(c.t_per_n => opt cfg.t_per_n);
    set!(c.r => opt cfg.r);
    set!(c.order => cfg.order);
    set!(c.epsilon => opt cfg.epsilon);
    set!(c.samples => cfg.samples);
    set!(c.seed => opt cfg.seed);
    set!(c.norm_mode => cfg.norm_mode);
    if c.no_merge {
        cfg.merge = MergePolicy::Off;
        cfg.dqpt.merge = MergePolicy::Off;
    }
    if let Some(p) = &c.output {
        cfg.output = Some(p.display().to_string());
    }
    set!(c.format => cfg.format);

    match &cli.command {
        Command::Bound { bound, search_r, r_max } => {
            cfg.experiment = "bound".into();
            set!(bound => cfg.bound);
            cfg.search_r |= *search_r;
            set!(r_max => cfg.r_max);
        }
        Command::Gatecount { global_observable, empirical_limit, r_max } => {
            cfg.experiment = "gatecount".into();
            set!(global_observable => cfg.global_observable);
            set!(empirical_limit => cfg.empirical_limit);
            set!(r_max => cfg.r_max);
        }
        Command::Dqpt { budget, k, t_max, t_step, .. } => {
            cfg.experiment = "dqpt".into();
            set!(budget => cfg.dqpt.budget);
            set!(k => cfg.dqpt.k);
            set!(t_max => cfg.dqpt.t_max);
            set!(t_step => cfg.dqpt.t_step);
        }
        Command::Random { empirical_limit } => {
            cfg.experiment = "random".into();
            set!(empirical_limit => cfg.empirical_limit);
        }
        Command::Simulate { method, .. } => {
            cfg.experiment = "simulate".into();
            set!(method => cfg.method);
        }
        Command::Decompose { kind, d0 } => {
            cfg.experiment = "decompose".into();
            cfg.decompose = kind.clone();
            set!(d0 => opt cfg.d0);
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_out(cfg: &ExperimentConfig, text: &str) -> Result<(), Error> {
    match &cfg.output {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn write_table(cfg: &ExperimentConfig, table: &Table) -> Result<(), Error> {
    write_out(cfg, &experiments::render_with_config(table, cfg)?)
}

/// Runs the command; `Ok(false)` means results were written but something was flagged.
fn run(cli: &Cli, cfg: &ExperimentConfig) -> Result<bool, Error> {
    match &cli.command {
        Command::Bound { .. } => {
            let out = experiments::run_bound(cfg)?;
            match cfg.format {
                OutputFormat::Json => {
                    let doc = serde_json::json!({ "config": cfg, "report": out.report, "steps": out.steps });
                    write_out(cfg, &(serde_json::to_string_pretty(&doc)? + "\n"))?;
                }
                OutputFormat::Csv => write_table(cfg, &out.table())?,
            }
            Ok(out.steps.is_none_or(|s| s.steps().is_some()))
        }
        Command::Gatecount { .. } => {
            let table = experiments::run_gatecount(cfg)?;
            write_table(cfg, &table)?;
            Ok(true)
        }
        Command::Dqpt { series, .. } => {
            let out = experiments::run_dqpt(cfg)?;
            write_table(cfg, &out.guaranteed_table())?;
            if let Some(path) = series {
                std::fs::write(path, experiments::render_with_config(&out.series, cfg)?)?;
            }
            Ok(out.guaranteed.iter().all(|g| g.t.is_some()))
        }
        Command::Random { .. } => {
            let table = experiments::run_random(cfg)?;
            write_table(cfg, &table)?;
            Ok(true)
        }
        Command::Simulate { emit_circuit, .. } => {
            let (table, circuit) = experiments::run_simulate(cfg)?;
            if let Some(path) = emit_circuit {
                std::fs::write(path, circuit.to_json() + "\n")?;
            }
            write_table(cfg, &table)?;
            Ok(true)
        }
        Command::Decompose { .. } => {
            let doc = serde_json::json!({ "config": cfg, "decomposition": experiments::run_decompose(cfg)? });
            write_out(cfg, &(serde_json::to_string_pretty(&doc)? + "\n"))?;
            Ok(true)
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::DenseLimit { .. } | Error::Budget { .. } | Error::NotMonotone { .. } => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match resolve(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&cli, &cfg) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("warning: target not reachable within the configured limits");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
