//! `zhang`: command-line front end. Every run writes its artifacts plus `manifest.toml`, which can be
//! passed back through `--config` to reproduce the run.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::anyhow;
use clap::{Args, Parser, Subcommand};
use zhang_core::ZhangError;

use config::{Rat, RunConfig, ENV_OUTPUT_DIR, ENV_THREADS};
use output::Sink;

#[derive(Parser, Debug)]
#[command(name = "zhang", version, about = "Zhang sandpile model: simulation, exact geometry, coding, entropy and scaling.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Driven run of the return map; event stream, histograms and final state.
    Simulate(Flags),
    /// Exact continuity pieces of every F_i.
    Atlas(Flags),
    /// Exact iteration of U_n up to the first level that misses the singularities.
    Regions(Flags),
    /// Removable(m), NonRemovable with a witness orbit, or Inconclusive.
    Removability(Flags),
    /// Markov coding of the attractor components and its chain statistics.
    Coding(Flags),
    /// Fiber Lyapunov spectrum and the sum identity.
    Lyapunov(Flags),
    /// Singularity and multiplicity entropies, expansion rates, contraction horizon.
    Entropy(Flags),
    /// Attractor samples, box counting and Moran bounds.
    Dimension(Flags),
    /// Driven-run statistics over side lengths or thresholds.
    Sweep(Flags),
    /// The avalanche from the marginally stable state.
    Maximal(Flags),
    /// Avalanche-pattern signatures over an (eps, E_c) grid.
    Bifurcation(Flags),
    /// Waiting-time rescaling and the entropy of the physical map.
    Rescale(Flags),
}

impl Command {
    fn parts(&self) -> (&'static str, &Flags) {
        match self {
            Command::Simulate(f) => ("simulate", f),
            Command::Atlas(f) => ("atlas", f),
            Command::Regions(f) => ("regions", f),
            Command::Removability(f) => ("removability", f),
            Command::Coding(f) => ("coding", f),
            Command::Lyapunov(f) => ("lyapunov", f),
            Command::Entropy(f) => ("entropy", f),
            Command::Dimension(f) => ("dimension", f),
            Command::Sweep(f) => ("sweep", f),
            Command::Maximal(f) => ("maximal", f),
            Command::Bifurcation(f) => ("bifurcation", f),
            Command::Rescale(f) => ("rescale", f),
        }
    }
}

#[derive(Args, Debug)]
struct Flags {
    /// TOML config, or the manifest of an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = ENV_OUTPUT_DIR)]
    out: Option<String>,
    /// Worker threads (sweeps only; outputs do not depend on it).
    #[arg(long, env = ENV_THREADS)]
    threads: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long = "L")]
    l: Option<usize>,
    /// Critical energy, e.g. `7/2` or `0.05`.
    #[arg(long = "Ec")]
    ec: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Deepest level of U_n (regions, removability, coding, entropy clean-level search).
    #[arg(long)]
    max_n: Option<usize>,
    /// Length of the entropy sequences.
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    events: Option<u64>,
    #[arg(long)]
    burn_in: Option<u64>,
    /// Exact rational arithmetic (simulate).
    #[arg(long)]
    exact: bool,
    /// Sampling mode: orbit, ifs or exact (dimension).
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    transient: Option<u64>,
    /// Comma-separated side lengths (maximal).
    #[arg(long, value_delimiter = ',')]
    sides: Option<Vec<usize>>,
    /// Keep the energy field of every stage (maximal).
    #[arg(long)]
    frames: bool,
    /// Sweep axis: L or Ec.
    #[arg(long)]
    axis: Option<String>,
    /// Comma-separated sweep grid.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<String>>,
    #[arg(long)]
    hbar: Option<f64>,
    #[arg(long)]
    piece_budget: Option<usize>,
    #[arg(long)]
    region_budget: Option<usize>,
    #[arg(long)]
    word_budget: Option<usize>,
    /// Any config value as `section.key=value`, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn not_for(flag: &str, command: &str) -> anyhow::Error {
    anyhow!(ZhangError::Domain(format!("--{flag} does not apply to `{command}`")))
}

fn resolve(command: &str, fl: &Flags) -> anyhow::Result<RunConfig> {
    let mut c = match &fl.config {
        Some(p) => RunConfig::from_toml(&std::fs::read_to_string(p).map_err(|e| anyhow!("cannot read {}: {e}", p.display()))?)?,
        None => RunConfig::default(),
    };
    if let Some(v) = &fl.out {
        c.output.directory = v.clone();
    }
    if let Some(v) = fl.threads {
        c.runtime.threads = v;
    }
    if let Some(v) = fl.d {
        c.model.d = v;
    }
    if let Some(v) = fl.l {
        c.model.l = v;
    }
    if let Some(v) = &fl.ec {
        c.model.ec = Rat::new(v)?;
    }
    if let Some(v) = &fl.eps {
        c.model.eps = Rat::new(v)?;
    }
    if let Some(v) = &fl.delta {
        c.model.delta = Rat::new(v)?;
    }
    if let Some(v) = fl.seed {
        c.rng.seed = v;
    }
    if let Some(v) = fl.piece_budget {
        c.budgets.piece_budget = v;
    }
    if let Some(v) = fl.region_budget {
        c.budgets.region_budget = v;
    }
    if let Some(v) = fl.word_budget {
        c.budgets.word_budget = v;
    }
    if let Some(v) = fl.max_n {
        match command {
            "regions" => c.regions.max_n = v,
            "removability" => c.removability.max_n = v,
            "coding" => c.coding.max_n = v,
            "entropy" => c.entropy.clean_max_n = v,
            _ => return Err(not_for("max-n", command)),
        }
    }
    if let Some(v) = fl.n_max {
        match command {
            "entropy" => c.entropy.n_max = v,
            _ => return Err(not_for("n-max", command)),
        }
    }
    if let Some(v) = fl.events {
        match command {
            "simulate" => c.simulate.events = v,
            "lyapunov" => c.lyapunov.events = v,
            "sweep" => c.sweep.events = v,
            "rescale" => c.rescale.events = v,
            _ => return Err(not_for("events", command)),
        }
    }
    if let Some(v) = fl.burn_in {
        match command {
            "simulate" => c.simulate.burn_in = v,
            "lyapunov" => c.lyapunov.burn_in = v,
            "sweep" => c.sweep.burn_in = v,
            "rescale" => c.rescale.burn_in = v,
            _ => return Err(not_for("burn-in", command)),
        }
    }
    if fl.exact {
        match command {
            "simulate" => c.simulate.exact = true,
            _ => return Err(not_for("exact", command)),
        }
    }
    let dim_only = |flag: &str| if command == "dimension" { Ok(()) } else { Err(not_for(flag, command)) };
    if let Some(v) = &fl.mode {
        dim_only("mode")?;
        c.dimension.mode = v.clone();
    }
    if let Some(v) = fl.points {
        dim_only("points")?;
        c.dimension.points = v;
    }
    if let Some(v) = fl.transient {
        dim_only("transient")?;
        c.dimension.transient = v;
    }
    if let Some(v) = &fl.sides {
        if command != "maximal" {
            return Err(not_for("sides", command));
        }
        c.maximal.sides = v.clone();
    }
    if fl.frames {
        if command != "maximal" {
            return Err(not_for("frames", command));
        }
        c.maximal.frames = true;
    }
    if let Some(v) = &fl.axis {
        if command != "sweep" {
            return Err(not_for("axis", command));
        }
        c.sweep.axis = v.clone();
    }
    if let Some(v) = &fl.grid {
        if command != "sweep" {
            return Err(not_for("grid", command));
        }
        c.sweep.grid = v.iter().map(|s| Rat::new(s)).collect::<anyhow::Result<_>>()?;
    }
    if let Some(v) = fl.hbar {
        if command != "rescale" {
            return Err(not_for("hbar", command));
        }
        c.rescale.hbar = v;
    }
    for kv in &fl.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| anyhow!("--set expects KEY=VALUE, got `{kv}`"))?;
        c.set(k.trim(), v.trim())?;
    }
    c.validate()?;
    Ok(c)
}

fn is_budget(e: &anyhow::Error) -> bool {
    matches!(e.downcast_ref::<ZhangError>(), Some(ZhangError::Budget(_)))
}

fn execute(command: &str, fl: &Flags) -> anyhow::Result<u8> {
    let cfg = resolve(command, fl)?;
    let mut sink = Sink::new(&PathBuf::from(&cfg.output.directory), &cfg.output.formats)?;
    let result = commands::run(command, &cfg, &mut sink);
    match result {
        Ok(()) => {}
        Err(e) if is_budget(&e) => {
            sink.partial = true;
            sink.notes.push(e.to_string());
        }
        Err(e) => return Err(e),
    }
    let partial = sink.partial;
    let m = sink.finish(command, &cfg)?;
    for n in &m.notes {
        eprintln!("note: {n}");
    }
    if partial {
        eprintln!("budget exhausted: outputs in {} are partial", cfg.output.directory);
        return Ok(2);
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let (command, flags) = cli.command.parts();
    match execute(command, flags) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<ZhangError>().map(|z| z.exit_code()).unwrap_or(1);
            ExitCode::from(code as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(args: &[&str]) -> (String, Flags) {
        let cli = Cli::try_parse_from(std::iter::once("zhang").chain(args.iter().copied())).unwrap();
        let (c, f) = match cli.command {
            Command::Coding(f) => ("coding", f),
            Command::Simulate(f) => ("simulate", f),
            other => panic!("unexpected {other:?}"),
        };
        (c.into(), f)
    }

    #[test]
    fn flags_land_in_the_config() {
        let (c, f) = flags(&["coding", "--d", "1", "--L", "2", "--Ec", "1/3", "--eps", "0.5", "--max-n", "6"]);
        let cfg = resolve(&c, &f).unwrap();
        assert_eq!((cfg.model.ec.0.as_str(), cfg.model.eps.0.as_str(), cfg.coding.max_n), ("1/3", "1/2", 6));
    }

    #[test]
    fn misplaced_and_malformed_flags_fail() {
        let (c, f) = flags(&["simulate", "--max-n", "3"]);
        assert!(resolve(&c, &f).is_err());
        let (c, f) = flags(&["simulate", "--Ec", "1/x"]);
        assert!(resolve(&c, &f).is_err());
        assert!(Cli::try_parse_from(["zhang", "simulate", "--colour"]).is_err());
    }
}

