//! antsim drives the simulator end to end: generate a topology, explore it
//! with ants, route packets over the converged tables, sweep the eligibility
//! threshold, or fit measured path lengths against the closed-form curve.
//!
//! Every command writes a JSON manifest next to its primary output with all
//! parameters resolved, including seeds drawn from entropy when --seed is
//! omitted. `rerun <manifest>` replays the recorded invocation and
//! reproduces the outputs byte for byte. Artifacts reference their manifest
//! in a leading `#` comment.
//!
//! Exit codes: 0 success, 1 usage error, 2 bad input data, 3 violated
//! internal invariant.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::Rng as _;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use antsim_core::{
    dump, fit_kappa, generate_clique_grid, generate_tree, generate_velcro, generate_waxman,
    measure_avg_shortest_path, operating_curve, parse_topology, run_exploration,
    run_traffic_experiment, serialize_topology, traffic_decile_buckets, AntPolicy, CostFn,
    CostRange, Error as CoreError, ReinforcementParams, SimConfig, Topology, TrafficConfig,
    WaxmanCostMode,
};

#[derive(Parser)]
#[command(name = "antsim", version, about = "Ant-driven reachability routing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated topology file
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Run ant exploration and dump the converged routing tables
    Explore(ExploreArgs),
    /// Route packets over dumped tables and report delivery metrics
    Route(RouteArgs),
    /// Run exploration plus traffic at every point of a tau grid
    Sweep(SweepArgs),
    /// Measure phi=1 path lengths over a size ladder and fit them
    Fit(FitArgs),
    /// Replay a manifest, reproducing its outputs exactly
    Rerun(RerunArgs),
}

#[derive(Subcommand, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum GenKind {
    /// Random tree; node 0 is the root
    Tree {
        #[arg(long)]
        nodes: usize,
        /// Cap on children per node
        #[arg(long, default_value_t = 3)]
        max_children: usize,
        #[arg(long, default_value_t = 1.0)]
        cost_min: f64,
        #[arg(long, default_value_t = 1.0)]
        cost_max: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rectangular grid lattice
    Clique {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        #[arg(long, default_value_t = 1.0)]
        cost_min: f64,
        #[arg(long, default_value_t = 1.0)]
        cost_max: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Direct source-sink link in parallel with a fulcrum chain carrying
    /// attached cycles
    Velcro {
        #[arg(long, default_value_t = 3)]
        fulcrums: usize,
        /// Nodes per attached cycle
        #[arg(long, default_value_t = 5)]
        loop_size: usize,
        /// Cost of the direct link
        #[arg(long, default_value_t = 10.0)]
        main_cost: f64,
        /// Total cost of the chain, split evenly over its hops
        #[arg(long, default_value_t = 3.0)]
        chain_cost: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Plane-embedded random graph with connectivity repair
    Waxman {
        #[arg(long)]
        nodes: usize,
        /// Link-probability scale
        #[arg(long, default_value_t = 0.15)]
        alpha: f64,
        /// Distance decay; larger values favor long links
        #[arg(long, default_value_t = 0.2)]
        beta: f64,
        #[arg(long, default_value_t = 1000.0)]
        plane_size: f64,
        /// uniform: integer costs from the range; distance: Euclidean length
        #[arg(long, value_enum, default_value = "uniform")]
        cost_mode: CostModeArg,
        #[arg(long, default_value_t = 1.0)]
        cost_min: f64,
        #[arg(long, default_value_t = 1.0)]
        cost_max: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(ValueEnum, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum CostModeArg {
    Uniform,
    Distance,
}

impl From<CostModeArg> for WaxmanCostMode {
    fn from(v: CostModeArg) -> Self {
        match v {
            CostModeArg::Uniform => WaxmanCostMode::Uniform,
            CostModeArg::Distance => WaxmanCostMode::Distance,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum PolicyArg {
    /// Uncontrolled warm-up, then loop-model-guided selection
    Model,
    /// Uncontrolled for the whole run
    Uniform,
    /// Sample the routing table itself
    Regular,
}

impl From<PolicyArg> for AntPolicy {
    fn from(v: PolicyArg) -> Self {
        match v {
            PolicyArg::Model => AntPolicy::ModelBased,
            PolicyArg::Uniform => AntPolicy::UniformAnts,
            PolicyArg::Regular => AntPolicy::RegularAnts,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum CostFnArg {
    Linear,
    Quadratic,
}

impl From<CostFnArg> for CostFn {
    fn from(v: CostFnArg) -> Self {
        match v {
            CostFnArg::Linear => CostFn::Linear,
            CostFnArg::Quadratic => CostFn::Quadratic,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Toggle {
    On,
    Off,
}

impl Toggle {
    fn is_on(self) -> bool {
        matches!(self, Toggle::On)
    }
}

/// Exploration parameters shared by explore, sweep and fit.
#[derive(clap::Args, Clone, Serialize, Deserialize)]
struct ExploreKnobs {
    /// Simulated run length, microseconds
    #[arg(long, default_value_t = 10_000_000)]
    duration: u64,
    /// Gap between consecutive ants from one node, microseconds
    #[arg(long, default_value_t = 10_000)]
    ant_period: u64,
    /// How moving ants pick interfaces
    #[arg(long, value_enum, default_value = "model")]
    policy: PolicyArg,
    /// Reinforce at intermediate nodes too
    #[arg(long, value_enum, default_value = "on")]
    subpath: Toggle,
    /// Skip the arrival interface when another eligible interface exists
    #[arg(long, value_enum, default_value = "on")]
    no_return: Toggle,
    /// Reinforcement strength in delta-p = lambda / f(cost)
    #[arg(long, default_value_t = 0.1)]
    lambda: f64,
    /// Shape of f in delta-p = lambda / f(cost)
    #[arg(long, value_enum, default_value = "linear")]
    cost_fn: CostFnArg,
    /// Leading fraction of the run that explores blindly
    #[arg(long, default_value_t = 0.125)]
    uncontrolled_fraction: f64,
    /// One-hop transit time, microseconds
    #[arg(long, default_value_t = 100)]
    link_delay: u64,
}

impl ExploreKnobs {
    fn sim_config(&self, tau: f64, seed: u64) -> SimConfig {
        SimConfig {
            duration: self.duration,
            ant_period: self.ant_period,
            uncontrolled_fraction: self.uncontrolled_fraction,
            params: ReinforcementParams { lambda: self.lambda, cost_fn: self.cost_fn.into(), tau },
            ant_policy: self.policy.into(),
            subpath_reinforcement: self.subpath.is_on(),
            controlled_no_return: self.no_return.is_on(),
            link_delay: self.link_delay,
            seed,
        }
    }
}

#[derive(clap::Args, Clone, Serialize, Deserialize)]
struct ExploreArgs {
    /// Topology file
    #[arg(long)]
    topo: PathBuf,
    /// Eligibility threshold on returned/sent
    #[arg(long, default_value_t = 0.5)]
    tau: f64,
    #[command(flatten)]
    #[serde(flatten)]
    knobs: ExploreKnobs,
    /// Omit to draw one from entropy; the resolved value lands in the manifest
    #[arg(long)]
    seed: Option<u64>,
    /// Tables CSV; exploration counters land alongside as <stem>.stats.csv
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args, Clone, Serialize, Deserialize)]
struct RouteArgs {
    /// Topology file
    #[arg(long)]
    topo: PathBuf,
    /// Table dump produced by explore
    #[arg(long)]
    tables: PathBuf,
    /// Interfaces competing per hop: a count, or "max" for the topology's
    /// maximum degree
    #[arg(long, default_value = "1")]
    phi: String,
    /// Destroy packets that walk back into their source
    #[arg(long, value_enum, default_value = "on")]
    absorption: Toggle,
    #[arg(long, default_value_t = 100)]
    packets_per_pair: u32,
    #[arg(long, default_value_t = 255)]
    ttl: u32,
    /// Omit to draw one from entropy; the resolved value lands in the manifest
    #[arg(long)]
    seed: Option<u64>,
    /// Metrics CSV; loop histogram and per-decile traffic land alongside as
    /// <stem>.hist.csv and <stem>.paths.csv
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args, Clone, Serialize, Deserialize)]
struct SweepArgs {
    /// Topology file
    #[arg(long)]
    topo: PathBuf,
    /// "start:stop:step" or comma-separated values, ascending in [0, 1]
    #[arg(long, default_value = "0.05:1:0.05")]
    tau_grid: String,
    #[command(flatten)]
    #[serde(flatten)]
    knobs: ExploreKnobs,
    /// Interfaces competing per hop; defaults to the maximum degree
    #[arg(long, default_value = "max")]
    phi: String,
    /// Destroy packets that walk back into their source
    #[arg(long, value_enum, default_value = "off")]
    absorption: Toggle,
    #[arg(long, default_value_t = 100)]
    packets_per_pair: u32,
    #[arg(long, default_value_t = 255)]
    ttl: u32,
    /// Exploration seed; omit to draw one from entropy
    #[arg(long)]
    seed: Option<u64>,
    /// Traffic seed; defaults to the exploration seed + 1
    #[arg(long)]
    traffic_seed: Option<u64>,
    /// Operating-curve CSV, one row per tau
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args, Clone, Serialize, Deserialize)]
struct FitArgs {
    /// Node counts, one unit-cost Waxman topology per entry
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    /// One value for all sizes, or one per size
    #[arg(long, value_delimiter = ',', default_value = "0.15")]
    alpha: Vec<f64>,
    /// One value for all sizes, or one per size
    #[arg(long, value_delimiter = ',', default_value = "0.2")]
    beta: Vec<f64>,
    #[arg(long, default_value_t = 1000.0)]
    plane_size: f64,
    /// One topology seed per size; defaults to seed, seed+1, ...
    #[arg(long, value_delimiter = ',')]
    topo_seeds: Vec<u64>,
    /// Eligibility threshold used for every exploration
    #[arg(long, default_value_t = 0.5)]
    tau: f64,
    #[command(flatten)]
    #[serde(flatten)]
    knobs: ExploreKnobs,
    /// Exploration seed for the first size; size i uses seed + i
    #[arg(long)]
    seed: Option<u64>,
    /// Fit CSV: per-size measured and theoretical lengths plus residuals
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct RerunArgs {
    /// Manifest written by a previous command
    manifest: PathBuf,
}

/// Written next to every primary output as <output>.manifest.json.
/// Re-running it reproduces all outputs byte for byte.
#[derive(Serialize, Deserialize)]
struct RunManifest {
    tool: String,
    version: String,
    command: String,
    params: serde_json::Value,
    seed: u64,
    outputs: Vec<String>,
}

enum CliError {
    Usage(String),
    Core(CoreError),
    Io { path: PathBuf, source: std::io::Error },
    Manifest(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Manifest(m) => write!(f, "{m}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

fn exit_code(e: &CliError) -> u8 {
    match e {
        CliError::Usage(_) => 1,
        CliError::Core(CoreError::InvalidParameter(_)) => 1,
        CliError::Core(CoreError::InternalConsistency(_)) => 3,
        CliError::Core(_) => 2,
        CliError::Io { .. } => 2,
        CliError::Manifest(_) => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version print to stdout and succeed; real parse
            // errors go to stderr with the usage exit code
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Gen { kind } => cmd_gen(kind),
        Command::Explore(args) => cmd_explore(args),
        Command::Route(args) => cmd_route(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Rerun(args) => cmd_rerun(args),
    }
}

fn cmd_gen(kind: GenKind) -> Result<(), CliError> {
    // each arm yields the topology plus the fully resolved parameter set
    let (topo, resolved, seed, out) = match kind {
        GenKind::Tree { nodes, max_children, cost_min, cost_max, seed, out } => {
            let seed = resolve_seed(seed);
            let costs = CostRange::new(cost_min, cost_max)?;
            let topo = generate_tree(nodes, max_children, costs, seed)?;
            let resolved = GenKind::Tree {
                nodes,
                max_children,
                cost_min,
                cost_max,
                seed: Some(seed),
                out: out.clone(),
            };
            (topo, resolved, seed, out)
        }
        GenKind::Clique { rows, cols, cost_min, cost_max, seed, out } => {
            let seed = resolve_seed(seed);
            let costs = CostRange::new(cost_min, cost_max)?;
            let topo = generate_clique_grid(rows, cols, costs, seed)?;
            let resolved = GenKind::Clique {
                rows,
                cols,
                cost_min,
                cost_max,
                seed: Some(seed),
                out: out.clone(),
            };
            (topo, resolved, seed, out)
        }
        GenKind::Velcro { fulcrums, loop_size, main_cost, chain_cost, out } => {
            let topo = generate_velcro(main_cost, chain_cost, fulcrums, loop_size)?;
            let resolved =
                GenKind::Velcro { fulcrums, loop_size, main_cost, chain_cost, out: out.clone() };
            // fully deterministic construction, nothing to seed
            (topo, resolved, 0, out)
        }
        GenKind::Waxman {
            nodes,
            alpha,
            beta,
            plane_size,
            cost_mode,
            cost_min,
            cost_max,
            seed,
            out,
        } => {
            let seed = resolve_seed(seed);
            let costs = CostRange::new(cost_min, cost_max)?;
            let topo =
                generate_waxman(nodes, alpha, beta, plane_size, cost_mode.into(), costs, seed)?;
            let resolved = GenKind::Waxman {
                nodes,
                alpha,
                beta,
                plane_size,
                cost_mode,
                cost_min,
                cost_max,
                seed: Some(seed),
                out: out.clone(),
            };
            (topo, resolved, seed, out)
        }
    };
    let mname = manifest_file_name(&out);
    write_artifact(&out, &mname, &serialize_topology(&topo))?;
    write_manifest(&out, "gen", &resolved, seed, &[&out])?;
    println!("wrote {}: {} nodes, {} links", out.display(), topo.node_count(), topo.links().len());
    Ok(())
}

fn cmd_explore(args: ExploreArgs) -> Result<(), CliError> {
    let topo = load_topology(&args.topo)?;
    let seed = resolve_seed(args.seed);
    let config = args.knobs.sim_config(args.tau, seed);
    let exploration = run_exploration(&topo, &config)?;

    let stats_path = sibling(&args.out, "stats");
    let mname = manifest_file_name(&args.out);
    write_artifact(
        &args.out,
        &mname,
        &dump::tables_to_csv(&exploration.tables, &exploration.models, Some(args.tau)),
    )?;
    write_artifact(&stats_path, &mname, &dump::stats_to_csv(&exploration.stats))?;
    let resolved = ExploreArgs { seed: Some(seed), ..args };
    write_manifest(&resolved.out, "explore", &resolved, seed, &[&resolved.out, &stats_path])?;
    println!(
        "explored {}: {} ants, fallback fraction {:.6}",
        resolved.topo.display(),
        exploration.stats.ants_generated,
        exploration.stats.fallback_fraction()
    );
    println!("tables -> {}", resolved.out.display());
    Ok(())
}

fn cmd_route(args: RouteArgs) -> Result<(), CliError> {
    let topo = load_topology(&args.topo)?;
    let (tables, _, tau) = dump::tables_from_csv(&read(&args.tables)?)?;
    let phi = resolve_phi(&args.phi, &topo)?;
    let seed = resolve_seed(args.seed);
    let config = TrafficConfig {
        phi,
        source_absorption: args.absorption.is_on(),
        packets_per_pair: args.packets_per_pair,
        ttl: args.ttl,
        seed,
    };
    let (metrics, record) = run_traffic_experiment(&topo, &tables, &config)?;
    let buckets = traffic_decile_buckets(&topo, &record);

    let hist_path = sibling(&args.out, "hist");
    let paths_path = sibling(&args.out, "paths");
    let mname = manifest_file_name(&args.out);
    write_artifact(&args.out, &mname, &dump::metrics_to_csv(phi, tau, &metrics))?;
    write_artifact(&hist_path, &mname, &dump::histogram_to_csv(&metrics))?;
    write_artifact(&paths_path, &mname, &dump::buckets_to_csv(&buckets))?;
    let resolved = RouteArgs { seed: Some(seed), ..args };
    write_manifest(
        &resolved.out,
        "route",
        &resolved,
        seed,
        &[&resolved.out, &hist_path, &paths_path],
    )?;
    println!(
        "routed {} packets at phi {}: success {:.2}%, loops {:.2}%, multipath {:.2}%, drops {}",
        metrics.injected,
        phi,
        metrics.success_pct(),
        metrics.loop_pct(),
        metrics.multipath_pct(),
        metrics.ttl_drops
    );
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let topo = load_topology(&args.topo)?;
    let grid = parse_tau_grid(&args.tau_grid)?;
    let phi = resolve_phi(&args.phi, &topo)?;
    let seed = resolve_seed(args.seed);
    let traffic_seed = args.traffic_seed.unwrap_or_else(|| seed.wrapping_add(1));
    // tau is overwritten per grid point
    let sim = args.knobs.sim_config(0.5, seed);
    let traffic = TrafficConfig {
        phi,
        source_absorption: args.absorption.is_on(),
        packets_per_pair: args.packets_per_pair,
        ttl: args.ttl,
        seed: traffic_seed,
    };
    let points = operating_curve(&topo, &grid, &sim, &traffic)?;

    let mname = manifest_file_name(&args.out);
    write_artifact(&args.out, &mname, &dump::curve_to_csv(&points))?;
    let resolved = SweepArgs { seed: Some(seed), traffic_seed: Some(traffic_seed), ..args };
    write_manifest(&resolved.out, "sweep", &resolved, seed, &[&resolved.out])?;
    for p in &points {
        println!(
            "tau {:.3}: loops {:.2}%, multipath {:.2}%, success {:.2}%, in force {}",
            p.tau, p.loop_pct, p.multipath_pct, p.success_pct, p.model_in_force
        );
    }
    println!("curve -> {}", resolved.out.display());
    Ok(())
}

fn cmd_fit(args: FitArgs) -> Result<(), CliError> {
    let n_sizes = args.sizes.len();
    let alphas = broadcast(&args.alpha, n_sizes, "alpha")?;
    let betas = broadcast(&args.beta, n_sizes, "beta")?;
    let seed = resolve_seed(args.seed);
    let topo_seeds: Vec<u64> = if args.topo_seeds.is_empty() {
        (0..n_sizes as u64).map(|i| seed.wrapping_add(i)).collect()
    } else if args.topo_seeds.len() == n_sizes {
        args.topo_seeds.clone()
    } else {
        return Err(CliError::Usage(format!(
            "{} topo seeds for {} sizes",
            args.topo_seeds.len(),
            n_sizes
        )));
    };

    let runs: Result<Vec<_>, CoreError> = args
        .sizes
        .par_iter()
        .enumerate()
        .map(|(i, &n)| {
            let topo = generate_waxman(
                n,
                alphas[i],
                betas[i],
                args.plane_size,
                WaxmanCostMode::Uniform,
                CostRange::UNIT,
                topo_seeds[i],
            )?;
            let sim = args.knobs.sim_config(args.tau, seed.wrapping_add(i as u64));
            let exploration = run_exploration(&topo, &sim)?;
            let measure = measure_avg_shortest_path(&topo, &exploration.tables)?;
            Ok((n, measure))
        })
        .collect();
    let runs = runs?;
    for (n, m) in &runs {
        println!(
            "n={n}: measured length {:.4}, {}/{} pairs matched the oracle",
            m.average_hops, m.matched_pairs, m.pair_count
        );
    }
    let samples: Vec<(usize, f64)> = runs.iter().map(|(n, m)| (*n, m.average_hops)).collect();
    let fit = fit_kappa(&samples)?;

    let mname = manifest_file_name(&args.out);
    write_artifact(&args.out, &mname, &dump::fit_to_csv(&fit))?;
    let resolved = FitArgs { alpha: alphas, beta: betas, topo_seeds, seed: Some(seed), ..args };
    write_manifest(&resolved.out, "fit", &resolved, seed, &[&resolved.out])?;
    println!("kappa {:.6}, r_squared {:.6}", fit.kappa, fit.r_squared);
    Ok(())
}

fn cmd_rerun(args: RerunArgs) -> Result<(), CliError> {
    let text = read(&args.manifest)?;
    let manifest: RunManifest = serde_json::from_str(&text)
        .map_err(|e| CliError::Manifest(format!("{}: {e}", args.manifest.display())))?;
    match manifest.command.as_str() {
        "gen" => cmd_gen(from_params(manifest.params)?),
        "explore" => cmd_explore(from_params(manifest.params)?),
        "route" => cmd_route(from_params(manifest.params)?),
        "sweep" => cmd_sweep(from_params(manifest.params)?),
        "fit" => cmd_fit(from_params(manifest.params)?),
        other => Err(CliError::Manifest(format!("manifest names unknown command {other:?}"))),
    }
}

fn from_params<T: DeserializeOwned>(params: serde_json::Value) -> Result<T, CliError> {
    serde_json::from_value(params)
        .map_err(|e| CliError::Manifest(format!("bad manifest params: {e}")))
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| rand::rng().random())
}

fn resolve_phi(raw: &str, topo: &Topology) -> Result<usize, CliError> {
    if raw == "max" {
        return Ok(topo.max_degree());
    }
    match raw.parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v),
        _ => Err(CliError::Usage(format!("phi must be a positive count or \"max\", got {raw:?}"))),
    }
}

/// Grid values are carried in billionths so "0.05:1:0.05" lands exactly on
/// 0.05, 0.10, ..., 1.00 instead of drifting through repeated float adds.
fn parse_tau_grid(raw: &str) -> Result<Vec<f64>, CliError> {
    let bad = |msg: &str| CliError::Usage(format!("tau grid {raw:?}: {msg}"));
    let raw = raw.trim();
    if raw.is_empty() {
        return Err(bad("empty"));
    }
    if raw.contains(':') {
        let parts: Vec<&str> = raw.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("range form is start:stop:step"));
        }
        let mut nano = [0i64; 3];
        for (slot, part) in nano.iter_mut().zip(&parts) {
            let v: f64 = part.parse().map_err(|_| bad("not a number"))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(bad("values must lie in [0, 1]"));
            }
            *slot = (v * 1e9).round() as i64;
        }
        let [start, stop, step] = nano;
        if step <= 0 {
            return Err(bad("step must be positive"));
        }
        if start > stop {
            return Err(bad("start exceeds stop"));
        }
        let mut grid = Vec::new();
        let mut at = start;
        while at <= stop {
            grid.push(at as f64 / 1e9);
            at += step;
        }
        Ok(grid)
    } else {
        raw.split(',')
            .map(|part| part.trim().parse::<f64>().map_err(|_| bad("not a number")))
            .collect()
    }
}

fn broadcast(values: &[f64], n: usize, name: &str) -> Result<Vec<f64>, CliError> {
    match values.len() {
        1 => Ok(vec![values[0]; n]),
        len if len == n => Ok(values.to_vec()),
        len => Err(CliError::Usage(format!(
            "{name} takes one value or one per size, got {len} for {n} sizes"
        ))),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

fn load_topology(path: &Path) -> Result<Topology, CliError> {
    Ok(parse_topology(&read(path)?)?)
}

/// metrics.csv -> metrics.<tag>.csv, keeping the directory.
fn sibling(out: &Path, tag: &str) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    out.with_file_name(format!("{stem}.{tag}.csv"))
}

fn manifest_file_name(out: &Path) -> String {
    let name = out.file_name().and_then(|s| s.to_str()).unwrap_or("out");
    format!("{name}.manifest.json")
}

fn write_artifact(path: &Path, manifest_name: &str, body: &str) -> Result<(), CliError> {
    let text = format!("# manifest: {manifest_name}\n{body}");
    fs::write(path, text).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

fn write_manifest(
    primary: &Path,
    command: &str,
    params: &impl Serialize,
    seed: u64,
    outputs: &[&Path],
) -> Result<(), CliError> {
    let manifest = RunManifest {
        tool: "antsim".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        params: serde_json::to_value(params)
            .map_err(|e| CliError::Manifest(format!("cannot encode parameters: {e}")))?,
        seed,
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
    };
    let path = primary.with_file_name(manifest_file_name(primary));
    let mut text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CliError::Manifest(format!("cannot encode manifest: {e}")))?;
    text.push('\n');
    fs::write(&path, text).map_err(|source| CliError::Io { path, source })
}
