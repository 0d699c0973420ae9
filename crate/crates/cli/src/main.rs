//! `coarsen`: command-line front end.
//!
//! Exit status is 0 on success, 1 for invalid input, and 2 when a checked
//! guarantee fails at run time (for instance a coupling order violation).

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use coarsen::experiment::{self, ExperimentConfig, GraphSpec, Overlay, Seeds};
use coarsen::geometry;
use coarsen::harris::{self, EventLog, HarrisSchedule};
use coarsen::plane_graph::{io::write_atomic, write_graph, BoundarySpec, LatticeKind, Window};
use coarsen::{shrink, symmetry, Point};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "coarsen", version, about = "Zero-temperature majority dynamics on planar lattices")]
struct Cli {
    /// Seed for every random choice of the command.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print nothing but errors.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct GraphArgs {
    /// Lattice builder (square, triangular, hexagonal, double_triangular,
    /// modified_double_square, stripe_pi).
    #[arg(long, conflicts_with = "graph")]
    lattice: Option<LatticeKind>,
    #[arg(long, default_value_t = 16)]
    extent: usize,
    /// Graph file in the JSON graph format.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// free, periodic, fixed_plus or fixed_minus.
    #[arg(long, default_value = "free")]
    boundary: BoundarySpec,
}

impl GraphArgs {
    fn spec(&self) -> Result<GraphSpec> {
        Ok(match (&self.lattice, &self.graph) {
            (Some(k), None) => GraphSpec { builder: Some(*k), extent: Some(self.extent), file: None, boundary: self.boundary },
            (None, Some(f)) => GraphSpec { builder: None, extent: None, file: Some(f.clone()), boundary: self.boundary },
            _ => bail!(coarsen::Error::InvalidParameter("give --lattice or --graph".into())),
        })
    }

    fn window(&self) -> Result<Window> {
        Ok(self.spec()?.build()?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build a lattice window and write it as a graph file.
    BuildGraph {
        #[arg(long)]
        lattice: LatticeKind,
        #[arg(long, default_value_t = 16)]
        extent: usize,
        #[arg(long, default_value = "free")]
        boundary: BoundarySpec,
    },
    /// Verify translations and rotations and report orbit classes.
    CheckSymmetry {
        #[command(flatten)]
        g: GraphArgs,
        /// Domain margin (default: twice the longest declared translation).
        #[arg(long)]
        margin: Option<f64>,
        /// Check one rotation order about the declared centre.
        #[arg(long)]
        rotation: Option<u32>,
    },
    /// Search for sets violating the shrink or planar-shrink property.
    CheckShrink {
        #[command(flatten)]
        g: GraphArgs,
        #[arg(long, default_value_t = 8)]
        max_size: usize,
        #[arg(long, default_value_t = u64::MAX)]
        budget: u64,
        /// Check the planar variant.
        #[arg(long)]
        planar: bool,
        /// Candidate lines per set in planar mode.
        #[arg(long, default_value_t = 24)]
        lines: usize,
        /// Also run the line-arrangement certificate with this many samples.
        #[arg(long)]
        certify: Option<usize>,
    },
    /// Build the crossing geometry and print it as JSON.
    Geometry {
        #[command(flatten)]
        g: GraphArgs,
        #[arg(long)]
        a: u32,
        #[arg(long = "L")]
        l: u32,
        #[arg(long, default_value_t = geometry::MIN_Q)]
        q: u32,
    },
    /// Run the dynamics once.
    Simulate {
        #[command(flatten)]
        g: GraphArgs,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long, default_value_t = 10.0)]
        horizon: f64,
        /// Write every event to this CSV file.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Run a JSON experiment configuration.
    Experiment {
        config: PathBuf,
        /// Replace the configured seeds by `--seed`.
        #[arg(long)]
        single_seed: bool,
    },
    /// Run to a time and draw the configuration as SVG.
    Render {
        #[command(flatten)]
        g: GraphArgs,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long, default_value_t = 0.0)]
        time: f64,
        /// Overlay T_L, W_L and cover balls for this rotation order.
        #[arg(long)]
        a: Option<u32>,
        #[arg(long = "L")]
        l: Option<u32>,
        #[arg(long, default_value = "snapshot.svg")]
        file: PathBuf,
    },
}

fn out_path(cli: &Cli, name: &str) -> Result<PathBuf> {
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir.join(name))
}

fn emit<T: Serialize>(cli: &Cli, value: &T, name: &str) -> Result<()> {
    let mut json = serde_json::to_string_pretty(value)?;
    json.push('\n');
    if cli.out.is_some() {
        let p = out_path(cli, name)?;
        write_atomic(&p, json.as_bytes())?;
        if !cli.quiet {
            eprintln!("wrote {}", p.display());
        }
    } else if !cli.quiet {
        print!("{json}");
    }
    Ok(())
}

fn default_margin(w: &Window) -> f64 {
    w.graph()
        .declared_symmetry()
        .map(|s| 2.0 * s.translations.iter().map(|t| t.norm2().to_f64().sqrt()).fold(0.0, f64::max))
        .unwrap_or(0.0)
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::BuildGraph { lattice, extent, boundary } => {
            let w = coarsen::build_lattice(*lattice, *extent, *boundary)?;
            let p = out_path(cli, &format!("{}_{extent}.json", lattice.name()))?;
            write_graph(w.graph(), &p)?;
            if !cli.quiet {
                println!(
                    "{}: {} vertices, {} edges -> {}",
                    w.descriptor(),
                    w.len(),
                    w.graph().edge_count(),
                    p.display()
                );
            }
        }
        Command::CheckSymmetry { g, margin, rotation } => {
            let w = g.window()?;
            let margin = margin.unwrap_or_else(|| default_margin(&w));
            if let Some(a) = rotation {
                let center =
                    w.graph().declared_symmetry().map(|s| s.center.clone()).unwrap_or_else(Point::origin);
                let outcome = symmetry::check_rotation(w.graph(), *a, &center, margin)?;
                emit(cli, &outcome, "rotation.json")?;
            } else {
                emit(cli, &symmetry::classify(w.graph(), margin)?, "symmetry.json")?;
            }
        }
        Command::CheckShrink { g, max_size, budget, planar, lines, certify } => {
            let w = g.window()?;
            let report = if *planar {
                shrink::search_planar_violation(&w, *max_size, *lines, *budget)?
            } else {
                shrink::search_frozen_set(&w, *max_size, *budget)?
            };
            emit(cli, &report, "shrink.json")?;
            if let Some(samples) = certify {
                emit(cli, &shrink::certify_class_h(&w, *samples, *max_size, cli.seed)?, "class_h.json")?;
            }
        }
        Command::Geometry { g, a, l, q } => {
            let w = g.window()?;
            let geom = geometry::build_crossing_geometry(&w, *a, &geometry::size_from_f64(*l as f64)?, *q)?;
            emit(cli, &geom, "geometry.json")?;
        }
        Command::Simulate { g, p, horizon, log } => {
            let w = g.window()?;
            let schedule = HarrisSchedule::new(cli.seed);
            let init = harris::sample_initial(&w, *p, &schedule)?;
            let mut events = EventLog::default();
            let fin = harris::run(&w, &init, schedule, *horizon, &mut [&mut events])?;
            if let Some(path) = log {
                write_atomic(path, events.to_csv().as_bytes())?;
            }
            let flips = events.events.iter().filter(|e| e.flipped).count();
            if !cli.quiet {
                println!(
                    "{}: {} events, {} flips, plus fraction {:.4} -> {:.4}",
                    w.descriptor(),
                    events.events.len(),
                    flips,
                    init.plus_fraction(),
                    fin.plus_fraction()
                );
            }
        }
        Command::Experiment { config, single_seed } => {
            let mut c = ExperimentConfig::load(config).with_context(|| format!("reading {}", config.display()))?;
            if *single_seed {
                c.seeds = Seeds::List(vec![cli.seed]);
            }
            let r = experiment::run_experiment(&c, cli.out.as_deref())?;
            if !cli.quiet {
                println!("{}: {} replicas -> {}", r.manifest.name, r.manifest.summary.replicas, r.dir.display());
                println!("{}", serde_json::to_string_pretty(&r.manifest.summary)?);
            }
        }
        Command::Render { g, p, time, a, l, file } => {
            let w = g.window()?;
            let schedule = HarrisSchedule::new(cli.seed);
            let init = harris::sample_initial(&w, *p, &schedule)?;
            let mut d = harris::Dynamics::new(&w, &init, schedule)?;
            d.advance_to(*time, &mut []);
            let geom = match (a, l) {
                (Some(a), Some(l)) => {
                    Some(geometry::build_crossing_geometry(&w, *a, &geometry::size_from_f64(*l as f64)?, geometry::MIN_Q)?)
                }
                (None, None) => None,
                _ => bail!(coarsen::Error::InvalidParameter("overlays need both --a and --L".into())),
            };
            let overlay = Overlay { geometry: geom.as_ref(), region: true, annulus: true, balls: true };
            let path = match &cli.out {
                Some(_) => out_path(cli, &file.to_string_lossy())?,
                None => file.clone(),
            };
            experiment::render_snapshot(&w, d.spins(), &path, overlay)?;
            if !cli.quiet {
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<coarsen::Error>() {
        Some(e) if e.is_internal() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    env_logger::Builder::new()
        .filter_level(if cli.quiet { log::LevelFilter::Error } else { log::LevelFilter::Warn })
        .parse_default_env()
        .init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
