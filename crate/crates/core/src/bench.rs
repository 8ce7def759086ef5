//! Benchmark harness: solver comparisons over seeds, CSV traces, summary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{IlcError, Result};
use crate::lifted::{lift, LiftedSystem, SystemFile};
use crate::plant::{NoiseKind, NoiseModel, PlantOracle};
use crate::signal::{Signal, Space};
use crate::solvers::{self, SolverConfig};
use crate::sysgen;
use crate::trace::RunTrace;

/// Environment variable that replaces the spec's seed list with one seed.
pub const MASTER_SEED_ENV: &str = "ILC_MASTER_SEED";

/// Relative cost thresholds reported in the summary.
pub const THRESHOLDS: [f64; 3] = [1e-1, 1e-2, 1e-3];

/// Default noise level as a fraction of the disturbance RMS.
pub const DEFAULT_NOISE_FRACTION: f64 = 0.01;

fn default_trial_length() -> usize {
    100
}

fn default_amplitude() -> f64 {
    1.0
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSource {
    Generate {
        n_x: usize,
        n_i: usize,
        n_o: usize,
        #[serde(rename = "N", default = "default_trial_length")]
        n: usize,
        seed: u64,
    },
    /// A system JSON file; relative paths resolve against the spec file.
    Load { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DisturbanceSpec {
    Step {
        #[serde(default = "default_amplitude")]
        amplitude: f64,
    },
    /// A disturbance JSON file, see [`parse_disturbance`].
    Custom { path: PathBuf },
}

impl Default for DisturbanceSpec {
    fn default() -> Self {
        DisturbanceSpec::Step { amplitude: 1.0 }
    }
}

/// Noise block of a spec. `sigma` defaults to 1% of the RMS of `r`; `seed`
/// defaults to the run seed.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[serde(default)]
    pub kind: NoiseKind,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl NoiseSpec {
    pub fn model(&self, disturbance: &Signal, run_seed: u64) -> NoiseModel {
        match self.kind {
            NoiseKind::None => NoiseModel::none(),
            NoiseKind::Gaussian => NoiseModel::gaussian(
                self.sigma
                    .unwrap_or(DEFAULT_NOISE_FRACTION * disturbance.rms()),
                self.seed.unwrap_or(run_seed),
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSpec {
    pub system: SystemSource,
    #[serde(default)]
    pub disturbance: DisturbanceSpec,
    #[serde(default)]
    pub noise: NoiseSpec,
    pub solvers: Vec<SolverConfig>,
    /// Cumulative experiments per run.
    pub budget: u64,
    /// Each seed drives the mask stream and, by default, the noise stream.
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
}

impl BenchmarkSpec {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Reads a spec and resolves relative file references against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut spec = Self::from_json_str(&fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let SystemSource::Load { path: p } = &mut spec.system {
            *p = base.join(&*p);
        }
        if let DisturbanceSpec::Custom { path: p } = &mut spec.disturbance {
            *p = base.join(&*p);
        }
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.solvers.is_empty() {
            return Err(IlcError::Config("benchmark needs at least one solver".into()));
        }
        if self.budget == 0 {
            return Err(IlcError::Config("benchmark budget must be positive".into()));
        }
        if self.seeds.is_empty() {
            return Err(IlcError::Config("benchmark needs at least one seed".into()));
        }
        if let DisturbanceSpec::Step { amplitude } = self.disturbance {
            if !amplitude.is_finite() {
                return Err(IlcError::Config("step amplitude must be finite".into()));
            }
        }
        if let Some(s) = self.noise.sigma {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(IlcError::Config("noise sigma must be finite and non-negative".into()));
            }
        }
        Ok(())
    }

    /// Replaces `seeds` with `[v]` when `value` holds a seed.
    pub fn with_seed_override(mut self, value: Option<&str>) -> Result<Self> {
        if let Some(v) = value {
            let seed = v.trim().parse().map_err(|_| {
                IlcError::Config(format!("{MASTER_SEED_ENV} must be an unsigned integer, got {v:?}"))
            })?;
            self.seeds = vec![seed];
        }
        Ok(self)
    }

    /// Applies [`MASTER_SEED_ENV`] when set.
    pub fn with_env_override(self) -> Result<Self> {
        let value = std::env::var(MASTER_SEED_ENV).ok();
        self.with_seed_override(value.as_deref())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DisturbanceFile {
    channels: Vec<Vec<f64>>,
}

/// Parses `{"channels": [[r_1(0), ..], ..]}` into an output signal of the
/// given shape. Samples must be finite.
pub fn parse_disturbance(s: &str, n: usize, n_o: usize) -> Result<Signal> {
    let file: DisturbanceFile = serde_json::from_str(s)?;
    if file.channels.iter().flatten().any(|x| !x.is_finite()) {
        return Err(IlcError::Parse("disturbance samples must be finite".into()));
    }
    let r = Signal::from_channels(Space::Output, &file.channels)?;
    r.check_shape(Space::Output, n, n_o)?;
    Ok(r)
}

/// Builds the lifted plant and disturbance the spec describes.
pub fn build_plant(spec: &BenchmarkSpec) -> Result<(Arc<LiftedSystem>, Signal)> {
    let system = match &spec.system {
        SystemSource::Generate { n_x, n_i, n_o, n, seed } => {
            lift(&sysgen::generate_system(*n_x, *n_i, *n_o, *seed)?, *n)?
        }
        SystemSource::Load { path } => SystemFile::from_json_str(&fs::read_to_string(path)?)?.lifted()?,
    };
    let r = match &spec.disturbance {
        DisturbanceSpec::Step { amplitude } => {
            sysgen::make_step_disturbance(system.trial_length(), system.n_o(), *amplitude)
        }
        DisturbanceSpec::Custom { path } => {
            parse_disturbance(&fs::read_to_string(path)?, system.trial_length(), system.n_o())?
        }
    };
    Ok((Arc::new(system), r))
}

#[derive(Debug)]
pub struct RunOutcome {
    /// Unique within a benchmark; used for file names.
    pub label: String,
    pub seed: u64,
    pub noisy: bool,
    pub result: std::result::Result<RunTrace, String>,
}

impl RunOutcome {
    pub fn file_name(&self) -> String {
        format!("{}_seed{}.csv", self.label, self.seed)
    }

    pub fn summary(&self) -> SummaryRow {
        let mut row = SummaryRow {
            label: self.label.clone(),
            seed: self.seed,
            status: "ok".into(),
            iterations: 0,
            experiments: 0,
            initial_cost: f64::NAN,
            final_cost: f64::NAN,
            final_cost_true: f64::NAN,
            reach: [None; 3],
            diverged: false,
            stop: String::new(),
        };
        match &self.result {
            Err(e) => row.status = format!("failed: {e}"),
            Ok(t) => {
                if let (Some(first), Some(last)) = (t.records.first(), t.records.last()) {
                    row.iterations = t.records.len();
                    row.experiments = last.experiments_cum;
                    row.initial_cost = first.cost_measured;
                    row.final_cost = last.cost_measured;
                    row.final_cost_true = last.cost_true;
                    row.diverged = last.cost_measured > first.cost_measured;
                }
                for (slot, ratio) in row.reach.iter_mut().zip(THRESHOLDS) {
                    *slot = t.experiments_to_reach(ratio, !self.noisy);
                }
                row.stop = serde_json::to_value(t.stop)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_string))
                    .unwrap_or_default();
            }
        }
        row
    }
}

/// One line of the benchmark summary. `reach[k]` is the cumulative
/// experiment count at which the cost first dropped to `THRESHOLDS[k]`
/// times its first value; `cost_true` is used for noise-free runs and
/// `cost_measured` otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub label: String,
    pub seed: u64,
    pub status: String,
    pub iterations: usize,
    pub experiments: u64,
    pub initial_cost: f64,
    pub final_cost: f64,
    pub final_cost_true: f64,
    pub reach: [Option<u64>; 3],
    /// Final measured cost above the initial measured cost.
    pub diverged: bool,
    pub stop: String,
}

pub const SUMMARY_HEADER: [&str; 14] = [
    "label",
    "seed",
    "status",
    "iterations",
    "experiments",
    "initial_cost",
    "final_cost",
    "final_cost_true",
    "exp_to_1e-1",
    "exp_to_1e-2",
    "exp_to_1e-3",
    "diverged",
    "stop",
    "file",
];

#[derive(Debug)]
pub struct BenchmarkOutcome {
    pub runs: Vec<RunOutcome>,
}

impl BenchmarkOutcome {
    pub fn summary(&self) -> Vec<SummaryRow> {
        self.runs.iter().map(RunOutcome::summary).collect()
    }

    pub fn failures(&self) -> usize {
        self.runs.iter().filter(|r| r.result.is_err()).count()
    }

    pub fn summary_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(SUMMARY_HEADER).expect("writing to memory");
        for (run, row) in self.runs.iter().zip(self.summary()) {
            let reach = row.reach.map(|r| r.map(|x| x.to_string()).unwrap_or_default());
            let [r1, r2, r3] = reach;
            w.write_record([
                row.label,
                row.seed.to_string(),
                row.status,
                row.iterations.to_string(),
                row.experiments.to_string(),
                format!("{:.16e}", row.initial_cost),
                format!("{:.16e}", row.final_cost),
                format!("{:.16e}", row.final_cost_true),
                r1,
                r2,
                r3,
                u8::from(row.diverged).to_string(),
                row.stop,
                if run.result.is_ok() { run.file_name() } else { String::new() },
            ])
            .expect("writing to memory");
        }
        String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv is utf-8")
    }

    /// Fixed-width table for terminals.
    pub fn summary_table(&self) -> String {
        let rows = self.summary();
        let width = rows.iter().map(|r| r.label.len()).max().unwrap_or(5).max(5);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$} {:>6} {:>6} {:>8} {:>11} {:>11} {:>8} {:>8} {:>8} {:>4}",
            "label", "seed", "iters", "exps", "initial", "final", "1e-1", "1e-2", "1e-3", "div"
        );
        let cell = |x: Option<u64>| x.map_or("-".to_string(), |v| v.to_string());
        for r in rows {
            if r.status != "ok" {
                let _ = writeln!(out, "{:<width$} {:>6} {}", r.label, r.seed, r.status);
                continue;
            }
            let _ = writeln!(
                out,
                "{:<width$} {:>6} {:>6} {:>8} {:>11.4e} {:>11.4e} {:>8} {:>8} {:>8} {:>4}",
                r.label,
                r.seed,
                r.iterations,
                r.experiments,
                r.initial_cost,
                r.final_cost,
                cell(r.reach[0]),
                cell(r.reach[1]),
                cell(r.reach[2]),
                if r.diverged { "yes" } else { "no" }
            );
        }
        out
    }

    /// Writes one trace CSV per successful run and `summary.csv`.
    pub fn write(&self, out_dir: &Path) -> Result<()> {
        fs::create_dir_all(out_dir)?;
        for run in &self.runs {
            if let Ok(trace) = &run.result {
                let file = fs::File::create(out_dir.join(run.file_name()))?;
                trace.write_csv(std::io::BufWriter::new(file))?;
            }
        }
        fs::write(out_dir.join("summary.csv"), self.summary_csv())?;
        Ok(())
    }
}

/// Distinct labels for the spec's solvers; repeats get `_2`, `_3`, ...
fn unique_labels(solvers: &[SolverConfig]) -> Vec<String> {
    let mut labels: Vec<String> = Vec::with_capacity(solvers.len());
    for cfg in solvers {
        let base: String = cfg
            .label()
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || "+-_.".contains(c) { c } else { '_' })
            .collect();
        let mut label = base.clone();
        let mut k = 2;
        while labels.contains(&label) {
            label = format!("{base}_{k}");
            k += 1;
        }
        labels.push(label);
    }
    labels
}

/// Runs every (solver, seed) pair on a fresh oracle. A failing run is
/// recorded in its outcome; the others still run.
pub fn run_benchmark(spec: &BenchmarkSpec) -> Result<BenchmarkOutcome> {
    spec.validate()?;
    let (system, r) = build_plant(spec)?;
    let mut runs = Vec::new();
    for (cfg, label) in spec.solvers.iter().zip(unique_labels(&spec.solvers)) {
        for &seed in &spec.seeds {
            let noise = spec.noise.model(&r, seed);
            let mut cfg = cfg.clone().with_seed(seed);
            cfg.max_experiments = Some(cfg.max_experiments.map_or(spec.budget, |b| b.min(spec.budget)));
            let result = PlantOracle::new(system.clone(), r.clone(), noise)
                .and_then(|mut oracle| solvers::run(&mut oracle, &cfg))
                .map_err(|e| e.to_string());
            runs.push(RunOutcome {
                label: label.clone(),
                seed,
                noisy: noise.is_active(),
                result,
            });
        }
    }
    Ok(BenchmarkOutcome { runs })
}
