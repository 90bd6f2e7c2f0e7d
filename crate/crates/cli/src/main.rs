use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use desloc::dot::to_dot;
use desloc::heterarchical::{run_pipeline, Pipeline, PipelineConfig};
use desloc::io::{generator_to_json, parse_generator};
use desloc::localization::{check_loc_contract, localize, verify_theorem1};
use desloc::partial_obs::{build_supo, control_tables, feasible_form};
use desloc::report::{localization_report, pipeline_report, RunReport};
use desloc::synthesis::{is_controllable, is_relatively_observable, sup_co, supcon};
use desloc::{ops, EventId, Generator};

/// Partial-observation supervisor synthesis and localization.
#[derive(Parser)]
#[command(name = "desloc", version)]
struct Cli {
    #[command(flatten)]
    flags: FlagOverrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct FlagOverrides {
    /// Observable event ids, comma-separated; all other events become unobservable
    #[arg(long, global = true, value_delimiter = ',')]
    obs: Option<Vec<u32>>,
    /// Controllable event ids, comma-separated; all other events become uncontrollable
    #[arg(long, global = true, value_delimiter = ',')]
    ctrl: Option<Vec<u32>>,
}

#[derive(Subcommand)]
enum Command {
    /// Synchronous product of several generators
    Sync {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Reachable and coreachable part
    Trim {
        input: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Natural projection onto the given events
    Project {
        input: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        keep: Vec<u32>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Supremal controllable sublanguage
    Supcon {
        #[arg(long)]
        plant: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Supremal controllable and relatively observable sublanguage
    Supco {
        #[arg(long)]
        plant: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Write iteration and pruning counts here
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Observer of a supervisor over its uncertainty sets
    Supo {
        #[arg(long)]
        sup: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Add the unobservable selfloops of the feasible form
        #[arg(long)]
        feasible: bool,
    },
    /// Enable/disable/marking tables over the uncertainty sets
    Tables {
        #[arg(long)]
        plant: PathBuf,
        #[arg(long)]
        sup: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// One local controller per controllable event
    Localize {
        #[arg(long)]
        plant: PathBuf,
        #[arg(long)]
        sup: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Check that local controllers reproduce the supervisor
    Verify {
        #[arg(long)]
        plant: PathBuf,
        #[arg(long)]
        sup: PathBuf,
        /// Directory of loc_<event>.json files
        #[arg(long)]
        locs: PathBuf,
    },
    /// Heterarchical synthesis and localization from a config file
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Record wall-clock timings in report.json
        #[arg(long)]
        timings: bool,
    },
    /// Graphviz export
    Dot {
        input: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

/// A result of our own computation failed its self-check.
#[derive(Debug)]
struct InvariantBreach(String);

impl std::fmt::Display for InvariantBreach {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "internal invariant violated: {}", self.0)
    }
}

impl std::error::Error for InvariantBreach {}

impl FlagOverrides {
    fn load(&self, path: &Path) -> Result<Generator> {
        let mut g = parse_generator(path)?;
        if let Some(obs) = &self.obs {
            let set: BTreeSet<EventId> = obs.iter().map(|&i| EventId(i)).collect();
            let a = g.alphabet().with_observable(&set);
            g = g.relabel_flags(a)?;
        }
        if let Some(ctrl) = &self.ctrl {
            let set: BTreeSet<EventId> = ctrl.iter().map(|&i| EventId(i)).collect();
            let a = g.alphabet().with_controllable(&set);
            g = g.relabel_flags(a)?;
        }
        Ok(g)
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_generator(g: &Generator, out: Option<&Path>) -> Result<()> {
    emit(&generator_to_json(g), out)
}

fn pretty(v: serde_json::Value) -> Result<String> {
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

fn loc_files(dir: &Path) -> Result<Vec<(EventId, PathBuf)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        if let Some(id) = stem.strip_prefix("loc_").and_then(|s| s.parse::<u32>().ok()) {
            if path.extension().is_some_and(|e| e == "json") {
                out.push((EventId(id), path));
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Runs the command; `Ok(false)` means a verification came out negative.
fn run(cli: Cli) -> Result<bool> {
    let flags = &cli.flags;
    match &cli.command {
        Command::Sync { inputs, out } => {
            let gs = inputs.iter().map(|p| flags.load(p)).collect::<Result<Vec<_>>>()?;
            let refs: Vec<&Generator> = gs.iter().collect();
            emit_generator(&ops::sync(&refs)?, out.as_deref())?;
        }
        Command::Trim { input, out } => emit_generator(&ops::trim(&flags.load(input)?), out.as_deref())?,
        Command::Project { input, keep, out } => {
            let keep: BTreeSet<EventId> = keep.iter().map(|&i| EventId(i)).collect();
            emit_generator(&ops::project(&flags.load(input)?, &keep)?, out.as_deref())?;
        }
        Command::Supcon { plant, spec, out } => {
            let sup = supcon(&flags.load(plant)?, &flags.load(spec)?)?;
            emit_generator(&sup, out.as_deref())?;
        }
        Command::Supco {
            plant,
            spec,
            out,
            stats,
        } => {
            let g = flags.load(plant)?;
            let r = sup_co(&g, &flags.load(spec)?)?;
            if !r.sup.is_empty() {
                let c = is_controllable(&r.sup, &g)?;
                let o = is_relatively_observable(&r.sup, &r.sup, &g, &g.alphabet().observable())?;
                if !c.controllable || !o.observable {
                    return Err(InvariantBreach("sup_co output fails its own checks".into()).into());
                }
            }
            emit_generator(&r.sup, out.as_deref())?;
            if let Some(path) = stats {
                let v = serde_json::json!({
                    "states": r.sup.num_states(),
                    "transitions": r.sup.num_transitions(),
                    "iterations": r.iterations,
                    "pruned": r.pruned,
                });
                emit(&pretty(v)?, Some(path))?;
            }
        }
        Command::Supo { sup, out, feasible } => {
            let sup = flags.load(sup)?;
            let supo = build_supo(&sup);
            let g = if *feasible {
                feasible_form(&supo, &sup)
            } else {
                supo.to_generator()
            };
            emit_generator(&g, out.as_deref())?;
        }
        Command::Tables { plant, sup, out } => {
            let (g, sup) = (flags.load(plant)?, flags.load(sup)?);
            let supo = build_supo(&sup);
            let t = control_tables(&g, &sup, &supo);
            emit(&pretty(t.to_json(&supo))?, out.as_deref())?;
        }
        Command::Localize { plant, sup, out_dir } => {
            let (g, sup) = (flags.load(plant)?, flags.load(sup)?);
            let l = localize(&g, &sup)?;
            let th = verify_theorem1(&g, &sup, &l.generators())?;
            if !th.holds() {
                return Err(InvariantBreach("local controllers do not reproduce the supervisor".into()).into());
            }
            fs::create_dir_all(out_dir)?;
            for (a, c) in &l.controllers {
                fs::write(out_dir.join(format!("loc_{a}.json")), generator_to_json(&c.generator))?;
            }
            fs::write(out_dir.join("report.json"), pretty(localization_report(&l, Some(th)))?)?;
            for c in l.controllers.values() {
                println!(
                    "LOC{}: {} states, communication events {:?}",
                    c.event,
                    c.num_states(),
                    c.comm_events.iter().map(|e| e.0).collect::<Vec<_>>()
                );
            }
        }
        Command::Verify { plant, sup, locs } => {
            let (g, sup) = (flags.load(plant)?, flags.load(sup)?);
            let files = loc_files(locs)?;
            if files.is_empty() {
                bail!("no loc_<event>.json files in {}", locs.display());
            }
            let gens = files.iter().map(|(_, p)| flags.load(p)).collect::<Result<Vec<_>>>()?;
            let mut report = RunReport::new("verify");
            for ((a, _), loc) in files.iter().zip(&gens) {
                report.verdict(format!("contract.{a}"), check_loc_contract(loc, *a, &g, &sup).is_none());
            }
            let th = verify_theorem1(&g, &sup, &gens.iter().collect::<Vec<_>>())?;
            report.verdict("theorem1.closed", th.closed_equal);
            report.verdict("theorem1.marked", th.marked_equal);
            print!("{}", pretty(serde_json::to_value(&report)?)?);
            return Ok(report.all_pass());
        }
        Command::Pipeline {
            config,
            out_dir,
            timings,
        } => {
            let cfg = PipelineConfig::from_file(config)?;
            let base = config.parent().unwrap_or(Path::new("."));
            let p = Pipeline::load(&cfg, base)?;
            let start = Instant::now();
            let r = run_pipeline(&p)?;
            fs::create_dir_all(out_dir)?;
            fs::write(out_dir.join("sizes.csv"), r.sizes_csv())?;
            let mut report = pipeline_report(&r);
            if *timings {
                report["elapsed_ms"] = serde_json::json!(start.elapsed().as_secs_f64() * 1e3);
            }
            fs::write(out_dir.join("report.json"), pretty(report)?)?;
            for u in &r.units {
                let dir = out_dir.join(&u.name);
                fs::create_dir_all(&dir)?;
                fs::write(dir.join("sup.json"), generator_to_json(&u.sup))?;
                for (a, c) in &u.localization.controllers {
                    fs::write(dir.join(format!("loc_{a}.json")), generator_to_json(&c.generator))?;
                }
            }
            print!("{}", r.sizes_csv());
            return Ok(r.all_verified());
        }
        Command::Dot { input, out } => emit(&to_dot(&flags.load(input)?), out.as_deref())?,
    }
    Ok(true)
}

/// 3 for a failed self-check, 2 for anything wrong with the inputs.
fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<InvariantBreach>().is_some() {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
