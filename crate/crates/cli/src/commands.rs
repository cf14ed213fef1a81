//! The five subcommands as library functions. Each returns a typed error
//! whose [`CliError::exit_code`] the binary reports.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use bliss_milp::{export_lp, SolveStatus};
use bliss_tamp::encoder::{check_plan, encode, EncodeError, Plan, ProblemConfig, Settings};
use bliss_tamp::geometry::WorldMap;
use bliss_tamp::planners::{plan_with, PlannerError, PlannerKind, PlannerOutput};
use bliss_tamp::simharness::{monte_carlo, ExecutionTrace, MetricsRow, RunMetrics, CSV_HEADER};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, MapSource};
use crate::error::{io_error, CliError, Result};
use crate::maps::{bundled, random_maps, MapFamily, RandomMapParams};
use crate::svg::render_plan;

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| io_error(path, e))
}

fn planner_error(e: PlannerError) -> CliError {
    match e {
        PlannerError::NoPath | PlannerError::Unschedulable(_) | PlannerError::NoSolution(_) => {
            CliError::Infeasible(e.to_string())
        }
        PlannerError::Encode(EncodeError::RiskInfeasible(_)) => CliError::Infeasible(e.to_string()),
        PlannerError::Encode(EncodeError::InvalidConfig(_)) => CliError::Validation(e.to_string()),
        other => CliError::Internal(other.to_string()),
    }
}

pub fn status_name(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Optimal => "optimal",
        SolveStatus::Infeasible => "infeasible",
        SolveStatus::Unbounded => "unbounded",
        SolveStatus::LimitReached => "limit_reached",
    }
}

/// The plan document written by `plan`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub planner: PlannerKind,
    pub map: String,
    /// `None` for the two-stage planner.
    pub solver_status: Option<String>,
    pub relative_gap: f64,
    /// Seconds; not reproducible.
    pub compute_time: f64,
    /// Settings the plan was made with.
    pub settings: Settings,
    pub plan: Plan,
}

impl PlanFile {
    pub fn new(planner: PlannerKind, map: &str, settings: &Settings, out: &PlannerOutput) -> Self {
        Self {
            planner,
            map: map.into(),
            solver_status: out.solver_status.map(|s| status_name(s).to_string()),
            relative_gap: out.gap,
            compute_time: out.compute_time,
            settings: settings.clone(),
            plan: out.plan.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plan serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, Default)]
pub struct PlanArgs {
    pub planner: Option<PlannerKind>,
    pub map: String,
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub export_milp: Option<PathBuf>,
    pub time_limit: Option<f64>,
}

/// Plans once. Writes the plan JSON to `out` (and returns it), the model in
/// LP format before solving with `export_milp`, and a rendering with `svg`.
pub fn cmd_plan(args: &PlanArgs) -> Result<PlanFile> {
    let (config, base) = match &args.config {
        Some(p) => {
            let l = ExperimentConfig::load(p)?;
            (l.config, l.base_dir)
        }
        None => (ExperimentConfig::default(), PathBuf::new()),
    };
    config.validate()?;
    let (name, map) = MapSource(args.map.clone()).load(Path::new(""))
        .or_else(|_| MapSource(args.map.clone()).load(&base))?;
    let problem = ProblemConfig::new(map, config.settings.clone());
    problem.validate().map_err(|e| CliError::Validation(e.to_string()))?;
    let mut exec = config.execution.settings();
    if let Some(t) = args.time_limit {
        if !(t > 0.0) {
            return Err(CliError::Validation(format!("time limit {t} must be positive")));
        }
        exec.limits.time_limit = t;
    }
    if let Some(path) = &args.export_milp {
        let encoded = encode(&problem).map_err(|e| planner_error(e.into()))?;
        write_file(path, &export_lp(&encoded.model))?;
    }
    let planner = args.planner.unwrap_or(PlannerKind::Milp);
    let out = plan_with(planner, &problem, &exec.limits).map_err(planner_error)?;
    let file = PlanFile::new(planner, &name, &problem.settings, &out);
    if let Some(path) = &args.out {
        write_file(path, &file.to_json())?;
    }
    if let Some(path) = &args.svg {
        write_file(path, &render_plan(&problem.map, &out.plan, &problem.settings))?;
    }
    Ok(file)
}

#[derive(Debug, Clone, Default)]
pub struct RunOverrides {
    pub runs: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub time_limit: Option<f64>,
}

fn apply(config: &mut ExperimentConfig, base: &Path, o: &RunOverrides) -> PathBuf {
    if let Some(r) = o.runs {
        config.n_runs = r;
    }
    if let Some(s) = o.seed {
        config.base_seed = s;
    }
    if let Some(t) = o.time_limit {
        config.execution.time_limit = t;
    }
    match &o.out {
        Some(p) => p.clone(),
        None => base.join(&config.output_dir),
    }
}

/// Per-map, per-planner summary: success rate and ET/CT statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryCell {
    pub sr: f64,
    pub et_mean: Option<f64>,
    pub et_sd: Option<f64>,
    pub ct_mean: Option<f64>,
    pub ct_sd: Option<f64>,
    pub scans_mean: Option<f64>,
}

impl From<&RunMetrics> for SummaryCell {
    fn from(m: &RunMetrics) -> Self {
        Self { sr: m.sr, et_mean: m.et_mean, et_sd: m.et_sd, ct_mean: m.ct_mean, ct_sd: m.ct_sd, scans_mean: m.scans_mean }
    }
}

pub type Summary = BTreeMap<String, BTreeMap<String, SummaryCell>>;

#[derive(Debug, Clone)]
pub struct BenchmarkReport {
    pub csv_path: PathBuf,
    pub summary_path: PathBuf,
    pub rows: Vec<MetricsRow>,
    pub summary: Summary,
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| CliError::Internal(format!("{}: {e}", path.display())))
}

fn csv_error(e: impl std::fmt::Display) -> CliError {
    CliError::Internal(format!("csv: {e}"))
}

/// Full Monte Carlo per planner per map. Rows are flushed as each cell
/// finishes, so an interrupted run leaves the completed cells on disk.
/// Traces go to `traces/<map>_<planner>_<seed>.json` under the output
/// directory.
pub fn cmd_benchmark(config_path: &Path, overrides: &RunOverrides) -> Result<BenchmarkReport> {
    let loaded = ExperimentConfig::load(config_path)?;
    let mut config = loaded.config;
    let out_dir = apply(&mut config, &loaded.base_dir, overrides);
    config.validate()?;
    let maps = config.resolve_maps(&loaded.base_dir)?;
    let exec = config.execution.settings();
    let csv_path = out_dir.join("metrics.csv");
    let summary_path = out_dir.join("summary.json");
    let mut writer = csv_writer(&csv_path)?;
    writer.write_record(CSV_HEADER.split(',')).map_err(csv_error)?;
    writer.flush().map_err(|e| io_error(&csv_path, e))?;
    let mut rows = Vec::new();
    let mut summary = Summary::new();
    for (name, map) in &maps {
        let problem = ProblemConfig::new(map.clone(), config.settings.clone());
        for &planner in &config.planners {
            let (metrics, traces) = monte_carlo(planner, &problem, config.n_runs, config.base_seed, &exec)
                .map_err(|e| CliError::Internal(e.to_string()))?;
            let row = MetricsRow::new(planner, name, config.settings.delta_c, &metrics);
            writer.serialize(&row).map_err(csv_error)?;
            writer.flush().map_err(|e| io_error(&csv_path, e))?;
            write_traces(&out_dir, name, planner, &traces)?;
            summary.entry(name.clone()).or_default().insert(planner.name().into(), SummaryCell::from(&metrics));
            rows.push(row);
        }
    }
    let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    text.push('\n');
    write_file(&summary_path, &text)?;
    Ok(BenchmarkReport { csv_path, summary_path, rows, summary })
}

fn write_traces(out_dir: &Path, map: &str, planner: PlannerKind, traces: &[ExecutionTrace]) -> Result<()> {
    let dir = out_dir.join("traces");
    for t in traces {
        let path = dir.join(format!("{map}_{}_{}.json", planner.name(), t.seed));
        write_file(&path, &(t.to_json() + "\n"))?;
    }
    Ok(())
}

pub const SWEEP_HEADER: &str = "planner,delta_c,maps,runs,successes,scans_mean,ct_mean";

/// One sweep row: statistics pooled over every successful run on every map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub planner: String,
    pub delta_c: f64,
    pub maps: usize,
    pub runs: usize,
    pub successes: usize,
    pub scans_mean: Option<f64>,
    pub ct_mean: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub csv_path: PathBuf,
    pub rows: Vec<SweepRow>,
}

/// Runs every map at each `delta_sweep` value; one CSV row per planner and
/// value.
pub fn cmd_sweep(config_path: &Path, overrides: &RunOverrides) -> Result<SweepReport> {
    let loaded = ExperimentConfig::load(config_path)?;
    let mut config = loaded.config;
    let out_dir = apply(&mut config, &loaded.base_dir, overrides);
    config.validate()?;
    let Some(sweep) = config.delta_sweep.clone() else {
        return Err(CliError::Validation("sweep needs a non-empty delta_sweep".into()));
    };
    let maps = config.resolve_maps(&loaded.base_dir)?;
    let exec = config.execution.settings();
    let csv_path = out_dir.join("sweep.csv");
    let mut writer = csv_writer(&csv_path)?;
    writer.write_record(SWEEP_HEADER.split(',')).map_err(csv_error)?;
    let mut rows = Vec::new();
    for &planner in &config.planners {
        for &delta_c in &sweep {
            let settings = Settings { delta_c, ..config.settings.clone() };
            let mut scans = Vec::new();
            let mut cts = Vec::new();
            let mut runs = 0;
            for (_, map) in &maps {
                let problem = ProblemConfig::new(map.clone(), settings.clone());
                let (_, traces) = monte_carlo(planner, &problem, config.n_runs, config.base_seed, &exec)
                    .map_err(|e| CliError::Internal(e.to_string()))?;
                runs += traces.len();
                for t in traces.iter().filter(|t| t.is_success()) {
                    scans.push(t.scan_count() as f64);
                    cts.push(t.compute_time());
                }
            }
            let mean = |xs: &[f64]| (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64);
            let row = SweepRow {
                planner: planner.name().into(),
                delta_c,
                maps: maps.len(),
                runs,
                successes: scans.len(),
                scans_mean: mean(&scans),
                ct_mean: mean(&cts),
            };
            writer.serialize(&row).map_err(csv_error)?;
            writer.flush().map_err(|e| io_error(&csv_path, e))?;
            rows.push(row);
        }
    }
    Ok(SweepReport { csv_path, rows })
}

#[derive(Debug, Clone)]
pub struct GenMapsArgs {
    pub family: MapFamily,
    pub seed: u64,
    pub count: usize,
    pub out: PathBuf,
}

/// Writes the bundled map of a fixed family, or `count` random maps named
/// `rnd_000.json`, `rnd_001.json`, ...
pub fn cmd_gen_maps(args: &GenMapsArgs) -> Result<Vec<PathBuf>> {
    let maps: Vec<(String, WorldMap)> = match bundled(args.family) {
        Some(m) => vec![(args.family.name().to_string(), m)],
        None => {
            if args.count == 0 {
                return Err(CliError::Validation("count must be at least 1".into()));
            }
            random_maps(args.seed, args.count, &RandomMapParams::default())?
                .into_iter()
                .enumerate()
                .map(|(i, m)| (format!("rnd_{i:03}"), m))
                .collect()
        }
    };
    let mut paths = Vec::new();
    for (name, map) in maps {
        let path = args.out.join(format!("{name}.json"));
        write_file(&path, &map.to_json())?;
        paths.push(path);
    }
    Ok(paths)
}

/// The formats `validate` recognizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileKind {
    Map,
    Plan,
    Trace,
    Config,
    MetricsCsv,
    SweepCsv,
}

/// Parses a file in any emitted format, re-serializes it and parses the
/// result again; the two parses must agree. Plans are also checked against
/// the decoded-plan invariants when the map is bundled.
pub fn cmd_validate(path: &Path) -> Result<FileKind> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let fail = |m: String| CliError::Validation(format!("{}: {m}", path.display()));
    let first = text.lines().next().unwrap_or("").trim();
    if first == CSV_HEADER || first == SWEEP_HEADER {
        let metrics = first == CSV_HEADER;
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let mut out = csv::WriterBuilder::new().from_writer(Vec::new());
        if metrics {
            let rows: Vec<MetricsRow> = reader.deserialize().collect::<std::result::Result<_, _>>().map_err(|e| fail(e.to_string()))?;
            rows.iter().try_for_each(|r| out.serialize(r)).map_err(|e| fail(e.to_string()))?;
            let again = String::from_utf8(out.into_inner().map_err(|e| fail(e.to_string()))?).expect("utf8");
            let back: Vec<MetricsRow> = csv::Reader::from_reader(again.as_bytes())
                .deserialize()
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| fail(e.to_string()))?;
            return if back == rows { Ok(FileKind::MetricsCsv) } else { Err(fail("round trip changed rows".into())) };
        }
        let rows: Vec<SweepRow> = reader.deserialize().collect::<std::result::Result<_, _>>().map_err(|e| fail(e.to_string()))?;
        rows.iter().try_for_each(|r| out.serialize(r)).map_err(|e| fail(e.to_string()))?;
        let again = String::from_utf8(out.into_inner().map_err(|e| fail(e.to_string()))?).expect("utf8");
        let back: Vec<SweepRow> = csv::Reader::from_reader(again.as_bytes())
            .deserialize()
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| fail(e.to_string()))?;
        return if back == rows { Ok(FileKind::SweepCsv) } else { Err(fail("round trip changed rows".into())) };
    }
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| fail(e.to_string()))?;
    let has = |k: &str| value.get(k).is_some();
    if has("bounds") && has("obstacles") {
        let map = WorldMap::from_json(&text).map_err(|e| fail(e.to_string()))?;
        let back = WorldMap::from_json(&map.to_json()).map_err(|e| fail(e.to_string()))?;
        return if back == map { Ok(FileKind::Map) } else { Err(fail("round trip changed the map".into())) };
    }
    if has("plan") && has("planner") {
        let file: PlanFile = serde_json::from_str(&text).map_err(|e| fail(e.to_string()))?;
        let back: PlanFile = serde_json::from_str(&file.to_json()).map_err(|e| fail(e.to_string()))?;
        if back != file {
            return Err(fail("round trip changed the plan".into()));
        }
        if let Ok(family) = file.map.parse::<MapFamily>() {
            if let Some(map) = bundled(family) {
                let problem = ProblemConfig::new(map, file.settings.clone());
                let relaxed = file.settings.absorbing_goal && problem.goal_region_clear().unwrap_or(false);
                check_plan(&problem, &file.plan, relaxed).map_err(|e| fail(e.to_string()))?;
            }
        }
        return Ok(FileKind::Plan);
    }
    if has("outcome") && has("true_positions") {
        let trace: ExecutionTrace = serde_json::from_str(&text).map_err(|e| fail(e.to_string()))?;
        let back: ExecutionTrace = serde_json::from_str(&trace.to_json()).map_err(|e| fail(e.to_string()))?;
        if back != trace {
            return Err(fail("round trip changed the trace".into()));
        }
        if trace.true_positions.len() != trace.actions.len() + 1 || trace.belief_means.len() != trace.actions.len() + 1 {
            return Err(fail("trace lengths are inconsistent".into()));
        }
        return Ok(FileKind::Trace);
    }
    let config = ExperimentConfig::from_json(&text).map_err(|e| fail(e.to_string()))?;
    config.validate()?;
    let back = ExperimentConfig::from_json(&config.to_json())?;
    if back != config {
        return Err(fail("round trip changed the config".into()));
    }
    Ok(FileKind::Config)
}

/// Prints a one-line summary of a plan to standard output.
pub fn print_plan_summary(file: &PlanFile) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(
        out,
        "{} on {}: objective {:.2}, {} scans, {} moves, status {}",
        file.planner.name(),
        file.map,
        file.plan.objective_value,
        file.plan.scan_count,
        file.plan.move_count,
        file.solver_status.as_deref().unwrap_or("n/a")
    );
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planner_errors_map_to_exit_classes() {
        assert_eq!(planner_error(PlannerError::NoPath).exit_code(), 3);
        assert_eq!(planner_error(PlannerError::NoSolution(SolveStatus::Infeasible)).exit_code(), 3);
        assert_eq!(planner_error(PlannerError::Encode(EncodeError::InvalidConfig("x".into()))).exit_code(), 2);
    }

    #[test]
    fn two_stage_plan_file_round_trips() {
        let file = cmd_plan(&PlanArgs { planner: Some(PlannerKind::TwoStage), map: "standard".into(), ..PlanArgs::default() }).unwrap();
        assert_eq!(file.solver_status, None);
        let back: PlanFile = serde_json::from_str(&file.to_json()).unwrap();
        assert_eq!(back, file);
    }

    #[test]
    fn non_positive_time_limit_is_rejected() {
        let args = PlanArgs { map: "standard".into(), time_limit: Some(0.0), ..PlanArgs::default() };
        assert!(matches!(cmd_plan(&args), Err(CliError::Validation(_))));
    }
}
