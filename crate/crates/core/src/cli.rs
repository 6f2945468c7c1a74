//! The `v2v-aoi` command line: `solve`, `compare`, `aoi` and `verify`.
//!
//! Every command resolves its settings into an [`ExperimentConfig`] (config
//! file first, flags on top, defaults for the rest), runs, and produces a
//! [`Report`]: an aligned text rendering plus a list of JSON records. The
//! first record of every report is the resolved configuration.
//!
//! Seeds: per-trial seeds come from `mix64(stream + trial)`, where the
//! stream seed for a given purpose and vehicle count is
//! `mix64(master + purpose_offset + n)`; see [`stream_seed`].

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::allocator::{
    genetic_pa, greedy_pa, oracle_pa, AllocationProblem, AllocationResult, GeneticConfig, GreedyConfig, Strategy,
};
use crate::aoi::{aoi_summary, build_aoi_records, zero_delay_records, AoiConfig, AoiRecord, AoiSummary};
use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metrics::{run_comparison, ComparisonConfig, StrategyComparison};
use crate::proxy::{estimate_scene_ap, CurveSet, SceneApEstimate};
use crate::scenario::{generate_scene, load_scene, Placement, Scene, ScenarioSpec};
use crate::seed::derive_seed;

/// Datasize fraction left after feature selection in the reduced-payload
/// experiment.
pub const REDUCED_RATE_FACTOR: f64 = 0.2154;

const SCENE_STREAM: u64 = 0x1000;
const GA_STREAM: u64 = 0x2000;
const AOI_STREAM: u64 = 0x3000;

/// Stream seed for one purpose and vehicle count under the master seed.
pub fn stream_seed(master: u64, stream: u64, n: usize) -> u64 {
    derive_seed(master, stream + n as u64)
}

#[derive(Debug, Parser)]
#[command(name = "v2v-aoi", version, about = "V2V power allocation and Age-of-Information experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one scene with one strategy and print powers, SNRs and delays.
    Solve(RunArgs),
    /// Compare DefaultPA, GreedyPA and GeneticPA over seeded trials.
    Compare(RunArgs),
    /// Data ages and proxy AP for Zero-Delay, DefaultPA and GreedyPA.
    Aoi(RunArgs),
    /// Check the heuristics against the exhaustive grid oracle (n ≤ 3).
    Verify(RunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Solve(_) => "solve",
            Command::Compare(_) => "compare",
            Command::Aoi(_) => "aoi",
            Command::Verify(_) => "verify",
        }
    }

    pub fn args(&self) -> &RunArgs {
        match self {
            Command::Solve(a) | Command::Compare(a) | Command::Aoi(a) | Command::Verify(a) => a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Text,
    Records,
}

/// Flags shared by every command. The optional config file uses the same
/// keys (kebab-case TOML); flags given on the command line win.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunArgs {
    /// TOML file with any of these settings.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Distance-matrix file; replaces synthetic scenes.
    #[arg(long)]
    pub scene: Option<PathBuf>,
    /// Vehicle counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_parser = parse_strategy)]
    pub strategy: Option<Strategy>,
    /// GreedyPA epoch limit.
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learn_rate: Option<f64>,
    /// Perception cycle in seconds.
    #[arg(long)]
    pub looptime: Option<f64>,
    /// Fraction of the payload actually transmitted, in (0, 1].
    #[arg(long)]
    pub rate_factor: Option<f64>,
    /// Worker threads for trial-level parallelism.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Write the machine-readable records here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Write two-column plot series here.
    #[arg(long)]
    pub plot_data: Option<PathBuf>,
    /// Per-vehicle computation delay in seconds.
    #[arg(long)]
    pub compute_delay: Option<f64>,
    /// Sensor sampling period in seconds.
    #[arg(long)]
    pub sample_period: Option<f64>,
    #[arg(long)]
    pub payload_bits: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub bandwidth_hz: Option<f64>,
    #[arg(long)]
    pub noise_w: Option<f64>,
    #[arg(long)]
    pub p_min_w: Option<f64>,
    #[arg(long)]
    pub p_max_w: Option<f64>,
    #[arg(long)]
    pub population: Option<usize>,
    #[arg(long)]
    pub generations: Option<usize>,
    /// Oracle grid points per link (`verify`).
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// Largest acceptable greedy optimality gap (`verify`).
    #[arg(long)]
    pub gap_threshold: Option<f64>,
    /// TOML file with replacement degradation curves (`aoi`).
    #[arg(long)]
    pub curves: Option<PathBuf>,
}

fn parse_strategy(s: &str) -> std::result::Result<Strategy, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

macro_rules! overlay {
    ($flags:expr, $file:expr, $($field:ident),+ $(,)?) => {
        RunArgs {
            config: $flags.config.clone(),
            $($field: $flags.$field.clone().or_else(|| $file.$field.clone()),)+
        }
    };
}

impl RunArgs {
    /// Flags over config-file values.
    pub fn merged(&self) -> Result<RunArgs> {
        let Some(path) = &self.config else {
            return Ok(self.clone());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let file: RunArgs =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))?;
        Ok(overlay!(
            self,
            file,
            scene,
            n,
            trials,
            seed,
            strategy,
            epochs,
            learn_rate,
            looptime,
            rate_factor,
            jobs,
            out,
            format,
            plot_data,
            compute_delay,
            sample_period,
            payload_bits,
            alpha,
            bandwidth_hz,
            noise_w,
            p_min_w,
            p_max_w,
            population,
            generations,
            grid_points,
            gap_threshold,
            curves,
        ))
    }
}

/// Fully resolved settings of one run. Serialized at the head of every
/// report; output routing (`--out`, `--format`, `--plot-data`, `--jobs`) is
/// kept in [`OutputOptions`] so it never changes the records.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub command: String,
    pub scene: Option<PathBuf>,
    pub vehicle_counts: Vec<usize>,
    pub trials: usize,
    pub master_seed: u64,
    pub strategy: Strategy,
    pub channel: ChannelParams,
    /// Payload after the rate factor; delays scale by `rate_factor` exactly.
    pub effective_payload_bits: f64,
    pub rate_factor: f64,
    pub greedy: GreedyConfig,
    pub greedy_epoch_ablation: Vec<usize>,
    pub genetic: GeneticConfig,
    pub aoi: AoiConfig,
    pub grid_points: usize,
    pub gap_threshold: f64,
    pub curves: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputOptions {
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
    pub plot_data: Option<PathBuf>,
    pub jobs: usize,
}

pub fn resolve(command: &str, flags: &RunArgs) -> Result<(ExperimentConfig, OutputOptions)> {
    let a = flags.merged()?;
    let defaults = ChannelParams::default();
    let channel = ChannelParams {
        alpha: a.alpha.unwrap_or(defaults.alpha),
        bandwidth_hz: a.bandwidth_hz.unwrap_or(defaults.bandwidth_hz),
        noise_w: a.noise_w.unwrap_or(defaults.noise_w),
        p_min_w: a.p_min_w.unwrap_or(defaults.p_min_w),
        p_max_w: a.p_max_w.unwrap_or(defaults.p_max_w),
        payload_bits: a.payload_bits.unwrap_or(defaults.payload_bits),
        ..defaults
    };
    channel.validate()?;
    let rate_factor = a.rate_factor.unwrap_or(1.0);
    if !(rate_factor > 0.0 && rate_factor <= 1.0) {
        return Err(Error::Config(format!("rate factor must be in (0, 1], got {rate_factor}")));
    }

    let greedy = GreedyConfig {
        learn_rate: a.learn_rate.unwrap_or(GreedyConfig::default().learn_rate),
        max_epochs: a.epochs.unwrap_or(GreedyConfig::default().max_epochs),
        ..GreedyConfig::default()
    };
    greedy.validate()?;
    let master_seed = a.seed.unwrap_or(0);
    let genetic = GeneticConfig {
        population_size: a.population.unwrap_or(GeneticConfig::default().population_size),
        max_generations: a.generations.unwrap_or(GeneticConfig::default().max_generations),
        rng_seed: master_seed,
        ..GeneticConfig::default()
    };
    genetic.validate()?;
    let aoi = AoiConfig {
        compute_delay_s: a.compute_delay.unwrap_or(0.0),
        sample_period_s: a.sample_period.unwrap_or(AoiConfig::default().sample_period_s),
        looptime_s: a.looptime.unwrap_or(AoiConfig::default().looptime_s),
        rng_seed: master_seed,
        ..AoiConfig::default()
    };
    aoi.validate()?;

    let default_counts = match command {
        "compare" | "aoi" => vec![3, 4, 5],
        _ => vec![3],
    };
    let default_trials = match command {
        "compare" => 15,
        "verify" => 10,
        "aoi" => 5,
        _ => 1,
    };
    let vehicle_counts = a.n.clone().unwrap_or(default_counts);
    if vehicle_counts.is_empty() || vehicle_counts.iter().any(|&n| n < 2) {
        return Err(Error::Config("vehicle counts must all be at least 2".into()));
    }
    let trials = a.trials.unwrap_or(default_trials);
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let gap_threshold = a.gap_threshold.unwrap_or(0.05);
    if !(gap_threshold >= 0.0) {
        return Err(Error::Config(format!("gap threshold must be non-negative, got {gap_threshold}")));
    }

    let config = ExperimentConfig {
        command: command.to_string(),
        scene: a.scene.clone(),
        vehicle_counts,
        trials,
        master_seed,
        strategy: a.strategy.unwrap_or(Strategy::Greedy),
        effective_payload_bits: channel.payload_bits * rate_factor,
        channel,
        rate_factor,
        greedy,
        greedy_epoch_ablation: vec![5000, 500, 50],
        genetic,
        aoi,
        grid_points: a.grid_points.unwrap_or(20),
        gap_threshold,
        curves: a.curves.clone(),
    };
    let output = OutputOptions {
        format: a.format.unwrap_or(OutputFormat::Text),
        out: a.out.clone(),
        plot_data: a.plot_data.clone(),
        jobs: a.jobs.unwrap_or(1),
    };
    Ok((config, output))
}

impl ExperimentConfig {
    fn effective_channel(&self) -> ChannelParams {
        self.channel.with_payload_scale(self.rate_factor)
    }

    /// Scene for trial `trial` at `n` vehicles (file scenes ignore both).
    fn scene(&self, n: usize, trial: usize) -> Result<Scene> {
        match &self.scene {
            Some(path) => load_scene(path),
            None => generate_scene(&ScenarioSpec::synthetic(
                n,
                derive_seed(stream_seed(self.master_seed, SCENE_STREAM, n), trial as u64),
            )),
        }
    }

    fn scenario_spec(&self, n: usize) -> ScenarioSpec {
        let mut spec = ScenarioSpec::synthetic(n, stream_seed(self.master_seed, SCENE_STREAM, n));
        if let Some(path) = &self.scene {
            spec.placement = Placement::File { path: path.clone() };
        }
        spec
    }

    fn genetic_for(&self, n: usize, trial: usize) -> GeneticConfig {
        GeneticConfig {
            rng_seed: derive_seed(stream_seed(self.master_seed, GA_STREAM, n), trial as u64),
            ..self.genetic
        }
    }

    fn vehicle_counts_for_scene(&self) -> Result<Vec<usize>> {
        match &self.scene {
            Some(path) => Ok(vec![load_scene(path)?.dist.n()]),
            None => Ok(self.vehicle_counts.clone()),
        }
    }
}

/// Output of one command.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub text: String,
    pub records: Vec<Value>,
    pub plot: Option<String>,
    /// False when a verification threshold was exceeded.
    pub passed: bool,
}

impl Report {
    fn new(config: &ExperimentConfig) -> Self {
        let echo = serde_json::to_string(config).expect("config serializes");
        Self {
            text: format!("# config {echo}\n"),
            records: vec![json!({ "record": "config", "config": config })],
            plot: None,
            passed: true,
        }
    }

    /// Records as JSON lines.
    pub fn records_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        out
    }
}

fn fmt_matrix(out: &mut String, title: &str, m: &Matrix, unit: &str) {
    let _ = writeln!(out, "{title} [{unit}]");
    for i in 0..m.n() {
        let row: Vec<String> = (0..m.n())
            .map(|j| if i == j { format!("{:>12}", "-") } else { format!("{:>12.4e}", m.get(i, j)) })
            .collect();
        let _ = writeln!(out, "  {}", row.join(" "));
    }
}

pub fn cmd_solve(config: &ExperimentConfig) -> Result<Report> {
    let mut report = Report::new(config);
    let n = *config.vehicle_counts.first().expect("validated non-empty");
    let scene = config.scene(n, 0)?;
    let problem = AllocationProblem::new(config.effective_channel(), scene.dist)?;
    let genetic = config.genetic_for(problem.n(), 0);
    let result = config.strategy.solve(&problem, &config.greedy, &genetic)?;

    let t = &mut report.text;
    let _ = writeln!(t, "strategy {}  vehicles {}", result.strategy_name, problem.n());
    fmt_matrix(t, "distance", problem.dist.matrix(), "m");
    fmt_matrix(t, "power", result.power.matrix(), "W");
    fmt_matrix(t, "snr", &result.metrics.snr, "linear");
    fmt_matrix(t, "delay", &result.metrics.delay_s, "s");
    let _ = writeln!(t, "min snr        {:.6e}", result.objective_min_snr);
    let _ = writeln!(t, "max delay      {:.6} s", result.objective_max_delay_s);
    let _ = writeln!(t, "epochs used    {}  converged {}", result.epochs_used, result.converged);
    if result.metrics.snr_floor_hit {
        let _ = writeln!(t, "warning: SNR floor applied on at least one link");
    }

    report.records.push(json!({
        "record": "solve",
        "distances": problem.dist.matrix(),
        "result": result_record(&result),
    }));
    if !result.trace.is_empty() {
        let mut plot = format!("# series {} best_min_snr_vs_epoch\n", result.strategy_name);
        for (k, v) in result.trace.iter().enumerate() {
            let _ = writeln!(plot, "{k} {v:e}");
        }
        report.plot = Some(plot);
    }
    Ok(report)
}

fn result_record(r: &AllocationResult) -> Value {
    json!({
        "strategy": r.strategy_name,
        "power_w": r.power.matrix(),
        "snr": r.metrics.snr,
        "delay_s": r.metrics.delay_s,
        "min_snr": r.objective_min_snr,
        "max_delay_s": r.objective_max_delay_s,
        "epochs_used": r.epochs_used,
        "converged": r.converged,
        "snr_floor_hit": r.metrics.snr_floor_hit,
    })
}

pub fn run_compare(config: &ExperimentConfig, jobs: usize) -> Result<Vec<StrategyComparison>> {
    let cmp_cfg = ComparisonConfig {
        params: config.effective_channel(),
        greedy: config.greedy,
        genetic: config.genetic,
        greedy_epoch_ablation: config.greedy_epoch_ablation.clone(),
        jobs,
    };
    let mut out = Vec::new();
    for n in config.vehicle_counts_for_scene()? {
        let cfg = ComparisonConfig {
            genetic: GeneticConfig {
                rng_seed: stream_seed(config.master_seed, GA_STREAM, n),
                ..cmp_cfg.genetic
            },
            ..cmp_cfg.clone()
        };
        out.push(run_comparison(&config.scenario_spec(n), config.trials, &cfg)?);
    }
    Ok(out)
}

pub fn cmd_compare(config: &ExperimentConfig, jobs: usize) -> Result<Report> {
    let mut report = Report::new(config);
    let comparisons = run_compare(config, jobs)?;

    let t = &mut report.text;
    let _ = writeln!(
        t,
        "{} trials per vehicle count; RMSE against {}; delays in seconds",
        config.trials,
        Strategy::Genetic.label()
    );
    let header: Vec<String> = comparisons.iter().map(|c| format!("{:>14}", format!("cav={}", c.n_vehicles))).collect();
    let _ = writeln!(t, "{:<28}{}", "metric", header.join(""));
    let mut row = |label: String, f: &dyn Fn(&StrategyComparison) -> Option<f64>| {
        let cells: Vec<String> = comparisons
            .iter()
            .map(|c| f(c).map_or_else(|| format!("{:>14}", "-"), |v| format!("{v:>14.4e}")))
            .collect();
        let _ = writeln!(t, "{label:<28}{}", cells.join(""));
    };
    row("RMSE_DefaultPA".into(), &|c| c.aggregate("DefaultPA", None).map(|a| a.rmse_vs_reference_s));
    for &cap in &config.greedy_epoch_ablation {
        row(format!("RMSE_GreedyPA_epoch{cap}"), &|c| {
            c.aggregate("GreedyPA", Some(cap)).map(|a| a.rmse_vs_reference_s)
        });
    }
    for s in Strategy::ALL {
        row(format!("VAR_{}", s.label()), &|c| c.aggregate(s.label(), None).map(|a| a.variance_s2));
    }
    for s in Strategy::ALL {
        row(format!("MEAN_{}", s.label()), &|c| c.aggregate(s.label(), None).map(|a| a.mean_s));
    }

    let mut plot = String::new();
    for s in Strategy::ALL {
        let _ = writeln!(plot, "# series MEAN_{} vs n", s.label());
        for c in &comparisons {
            if let Some(a) = c.aggregate(s.label(), None) {
                let _ = writeln!(plot, "{} {:e}", c.n_vehicles, a.mean_s);
            }
        }
        plot.push_str("\n\n");
    }
    report.plot = Some(plot);

    for c in &comparisons {
        for trial in &c.trials {
            report.records.push(json!({ "record": "trial", "n": c.n_vehicles, "trial": trial }));
        }
        for agg in &c.aggregates {
            report.records.push(json!({
                "record": "aggregate",
                "n": c.n_vehicles,
                "reference": c.reference,
                "variance_kind": c.variance_kind,
                "aggregate": agg,
            }));
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AoiMode {
    #[serde(rename = "Zero-Delay")]
    ZeroDelay,
    #[serde(rename = "DefaultPA")]
    Default,
    #[serde(rename = "GreedyPA")]
    Greedy,
}

impl AoiMode {
    pub const ALL: [AoiMode; 3] = [AoiMode::ZeroDelay, AoiMode::Default, AoiMode::Greedy];

    pub fn label(self) -> &'static str {
        match self {
            AoiMode::ZeroDelay => "Zero-Delay",
            AoiMode::Default => "DefaultPA",
            AoiMode::Greedy => "GreedyPA",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AoiRow {
    pub n: usize,
    pub trial: usize,
    pub mode: AoiMode,
    pub summary: AoiSummary,
    pub proxy: SceneApEstimate,
    pub records: Vec<AoiRecord>,
}

/// Per-mode rows for every vehicle count and trial. Summaries and the proxy
/// use the received links only; ego records are kept alongside.
pub fn run_aoi(config: &ExperimentConfig) -> Result<Vec<AoiRow>> {
    let curves = match &config.curves {
        Some(path) => CurveSet::load(path)?,
        None => CurveSet::default(),
    };
    let channel = config.effective_channel();
    let mut rows = Vec::new();
    for n in config.vehicle_counts_for_scene()? {
        for trial in 0..config.trials {
            let scene = config.scene(n, trial)?;
            let problem = AllocationProblem::new(channel, scene.dist)?;
            let aoi_cfg = AoiConfig {
                rng_seed: derive_seed(stream_seed(config.master_seed, AOI_STREAM, n), trial as u64),
                ..config.aoi.clone()
            };
            for mode in AoiMode::ALL {
                let records = match mode {
                    AoiMode::ZeroDelay => zero_delay_records(problem.n(), &aoi_cfg)?,
                    AoiMode::Default => {
                        build_aoi_records(&Strategy::Default.solve(&problem, &config.greedy, &config.genetic)?.metrics, &aoi_cfg)?
                    }
                    AoiMode::Greedy => {
                        build_aoi_records(&Strategy::Greedy.solve(&problem, &config.greedy, &config.genetic)?.metrics, &aoi_cfg)?
                    }
                };
                let received: Vec<AoiRecord> = records.iter().filter(|r| !r.is_ego()).cloned().collect();
                rows.push(AoiRow {
                    n: problem.n(),
                    trial,
                    mode,
                    summary: aoi_summary(&received, aoi_cfg.looptime_s)?,
                    proxy: estimate_scene_ap(&received, &curves)?,
                    records,
                });
            }
        }
    }
    Ok(rows)
}

pub fn cmd_aoi(config: &ExperimentConfig) -> Result<Report> {
    let mut report = Report::new(config);
    let rows = run_aoi(config)?;
    let t = &mut report.text;
    let _ = writeln!(
        t,
        "ages in seconds; effective age = age + looptime ({} s); AP values are {}",
        config.aoi.looptime_s,
        crate::proxy::PROXY_LABEL
    );
    let _ = writeln!(
        t,
        "{:>3} {:>5} {:<11}{:>9}{:>9}{:>11}{:>7}{:>10}{:>8}{:>8}{:>8}",
        "n", "trial", "mode", "max", "mean", "variance", "stale", "eff.mean", "AP@0.3", "AP@0.5", "AP@0.7"
    );
    for r in &rows {
        let s = &r.summary;
        let ap = r.proxy.combined;
        let _ = writeln!(
            t,
            "{:>3} {:>5} {:<11}{:>9.3}{:>9.3}{:>11.4e}{:>7}{:>10.3}{:>8.3}{:>8.3}{:>8.3}",
            r.n,
            r.trial,
            r.mode.label(),
            s.max_age_s,
            s.mean_age_s,
            s.age_variance_s2,
            s.stale_count,
            s.effective_mean_age_s,
            ap.ap30,
            ap.ap50,
            ap.ap70
        );
    }
    for r in &rows {
        report.records.push(json!({ "record": "aoi", "row": r }));
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyRow {
    pub trial: usize,
    pub n: usize,
    pub oracle_min_snr: f64,
    pub greedy_min_snr: f64,
    pub genetic_min_snr: f64,
    /// `(oracle − heuristic) / oracle`; negative when the heuristic beats the grid.
    pub greedy_gap: f64,
    pub genetic_gap: f64,
}

pub fn run_verify(config: &ExperimentConfig) -> Result<Vec<VerifyRow>> {
    let channel = config.effective_channel();
    let mut rows = Vec::new();
    for n in config.vehicle_counts_for_scene()? {
        for trial in 0..config.trials {
            let problem = AllocationProblem::new(channel, config.scene(n, trial)?.dist)?;
            let oracle = oracle_pa(&problem, config.grid_points)?;
            let greedy = greedy_pa(&problem, &config.greedy)?;
            let genetic = genetic_pa(&problem, &config.genetic_for(problem.n(), trial))?;
            let gap = |v: f64| (oracle.objective_min_snr - v) / oracle.objective_min_snr;
            rows.push(VerifyRow {
                trial,
                n: problem.n(),
                oracle_min_snr: oracle.objective_min_snr,
                greedy_min_snr: greedy.objective_min_snr,
                genetic_min_snr: genetic.objective_min_snr,
                greedy_gap: gap(greedy.objective_min_snr),
                genetic_gap: gap(genetic.objective_min_snr),
            });
        }
    }
    Ok(rows)
}

pub fn cmd_verify(config: &ExperimentConfig) -> Result<Report> {
    let mut report = Report::new(config);
    let rows = run_verify(config)?;
    let t = &mut report.text;
    let _ = writeln!(
        t,
        "oracle: {} log-spaced grid points per link; gap = (oracle - heuristic) / oracle; threshold {}",
        config.grid_points, config.gap_threshold
    );
    let _ = writeln!(
        t,
        "{:>3} {:>5}{:>14}{:>14}{:>14}{:>12}{:>12}",
        "n", "trial", "oracle", "greedy", "genetic", "greedy gap", "ga gap"
    );
    for r in &rows {
        let _ = writeln!(
            t,
            "{:>3} {:>5}{:>14.6e}{:>14.6e}{:>14.6e}{:>12.4}{:>12.4}",
            r.n, r.trial, r.oracle_min_snr, r.greedy_min_snr, r.genetic_min_snr, r.greedy_gap, r.genetic_gap
        );
        report.records.push(json!({ "record": "verify", "row": r }));
    }
    let worst = rows.iter().map(|r| r.greedy_gap).fold(f64::NEG_INFINITY, f64::max);
    report.passed = worst <= config.gap_threshold;
    let _ = writeln!(
        t,
        "worst greedy gap {worst:.4}: {}",
        if report.passed { "PASS" } else { "FAIL" }
    );
    Ok(report)
}

pub fn execute(config: &ExperimentConfig, jobs: usize) -> Result<Report> {
    match config.command.as_str() {
        "solve" => cmd_solve(config),
        "compare" => cmd_compare(config, jobs),
        "aoi" => cmd_aoi(config),
        "verify" => cmd_verify(config),
        other => Err(Error::Config(format!("unknown command '{other}'"))),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, contents)?;
    Ok(())
}

/// Resolve, execute and emit. Returns whether the command's checks passed.
pub fn run(cli: &Cli, stdout: &mut dyn std::io::Write) -> Result<bool> {
    let (config, output) = resolve(cli.command.name(), cli.command.args())?;
    let report = execute(&config, output.jobs)?;
    match output.format {
        OutputFormat::Text => stdout.write_all(report.text.as_bytes())?,
        OutputFormat::Records => stdout.write_all(report.records_jsonl().as_bytes())?,
    }
    if let Some(path) = &output.out {
        write_file(path, &report.records_jsonl())?;
    }
    if let (Some(path), Some(plot)) = (&output.plot_data, &report.plot) {
        write_file(path, plot)?;
    }
    Ok(report.passed)
}
