//! Declarative experiments: the four-model comparison over (N, β), pulse
//! duration sweeps, the scaling-law collapse, Talbot-period scans and single
//! distribution runs. Each produces a [`ScanResult`] whose CSV body is a pure
//! function of the configuration and seed.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::ensemble::{
    thermal_pcl_distribution, thermal_quantum_distribution, thermal_reference_distribution, Binning,
    MomentumDistribution, PclRunConfig, QuantumRunConfig, ThermalInit, ThermalQuantumSolver,
};
use crate::error::{invalid, Error, Result};
use crate::imaging::{analyze_difference, tof_project, AnalysisConfig, DifferenceAnalysis, TofGeometry};
use crate::pcl::{energy_history, trajectory_rng, PendulumIntegrator, TrajectoryEnsemble, TrajectoryModel};
use crate::qsim::{delta_kick_step, floquet_step, ManifoldState, PulsePropagatorConfig, QuantumModel, DEFAULT_N_MAX};
use crate::stats::{linear_fit, refined_peak};
use crate::units::{derive_dimensionless, scale_deltap, talbot_time, DimensionlessParams, PhysicalParams};

pub const CODE_VERSION: &str = concat!("qrkick ", env!("CARGO_PKG_VERSION"));

/// The four dynamical models.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    /// Finite-duration pulses, exact quantum evolution.
    Quantum,
    /// Instantaneous phase-grating kicks.
    DeltaKick,
    Pseudoclassical,
    Classical,
}

impl Model {
    pub const ALL: [Model; 4] = [
        Model::Quantum,
        Model::DeltaKick,
        Model::Pseudoclassical,
        Model::Classical,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Model::Quantum => "quantum",
            Model::DeltaKick => "delta_kick",
            Model::Pseudoclassical => "pseudoclassical",
            Model::Classical => "classical",
        }
    }

    fn is_trajectory(self) -> bool {
        matches!(self, Model::Pseudoclassical | Model::Classical)
    }

    fn trajectory_model(self) -> TrajectoryModel {
        match self {
            Model::Classical => TrajectoryModel::Classical,
            _ => TrajectoryModel::Pseudoclassical,
        }
    }

    fn quantum_model(self) -> QuantumModel {
        match self {
            Model::DeltaKick => QuantumModel::DeltaKick,
            _ => QuantumModel::Full,
        }
    }
}

/// A swept variable: explicit values, `count` evenly spaced points, or a
/// fixed step from `start` up to and including `stop`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sweep {
    Values(Vec<f64>),
    Linear { start: f64, stop: f64, count: usize },
    Stepped { start: f64, stop: f64, step: f64 },
}

impl Sweep {
    pub fn values(&self) -> Result<Vec<f64>> {
        let out = match self {
            Sweep::Values(v) => v.clone(),
            Sweep::Linear { start, stop, count } => match count {
                0 => Vec::new(),
                1 => vec![*start],
                n => (0..*n)
                    .map(|i| start + (stop - start) * i as f64 / (*n - 1) as f64)
                    .collect(),
            },
            Sweep::Stepped { start, stop, step } => {
                if !(*step > 0.0) {
                    return Err(invalid("step", "must be positive"));
                }
                let count = ((stop - start) / step + 1e-9).floor();
                if count < 0.0 {
                    Vec::new()
                } else {
                    (0..=count as usize).map(|i| start + i as f64 * step).collect()
                }
            }
        };
        if out.is_empty() {
            return Err(invalid("sweep", "swept range is empty"));
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(invalid("sweep", "swept values must be finite"));
        }
        Ok(out)
    }
}

fn nanoseconds(values: &[f64]) -> Sweep {
    Sweep::Values(values.iter().map(|ns| ns * 1e-9).collect())
}

/// A (pulse count, potential depth) pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub pulse_count: u32,
    pub depth_hz: f64,
}

impl Series {
    pub fn new(pulse_count: u32, depth_mhz: f64) -> Self {
        Self {
            pulse_count,
            depth_hz: depth_mhz * 1e6,
        }
    }

    fn label(&self) -> String {
        format!("N={} Vd={}MHz", self.pulse_count, self.depth_hz / 1e6)
    }
}

/// ⟨𝒥²/2⟩ over a (N, β) grid for each model at fixed (ε, Ṽ).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompareModelsSpec {
    pub epsilon: f64,
    pub v_tilde: f64,
    pub max_pulses: u32,
    pub betas: Sweep,
    pub trajectories: usize,
    pub models: Vec<Model>,
}

impl Default for CompareModelsSpec {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            v_tilde: 1.0,
            max_pulses: 15,
            betas: Sweep::Stepped {
                start: 0.0,
                stop: 0.975,
                step: 0.025,
            },
            trajectories: 100_000,
            models: Model::ALL.to_vec(),
        }
    }
}

/// Thermal ΔP_max against pulse duration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepTpSpec {
    pub pulse_durations: Sweep,
    pub models: Vec<Model>,
}

impl Default for SweepTpSpec {
    fn default() -> Self {
        Self {
            pulse_durations: nanoseconds(&[
                50.0, 100.0, 150.0, 200.0, 250.0, 300.0, 400.0, 500.0, 600.0, 800.0, 1000.0, 1250.0, 1500.0, 1750.0,
                2000.0,
            ]),
            models: vec![Model::DeltaKick, Model::Quantum, Model::Pseudoclassical],
        }
    }
}

/// Scaling-law series: thermal ΔP_max scaled by sqrt(N·V_d/h), and the
/// β = 0 energy ⟨𝒥²/2⟩, both against NṼ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScalingSpec {
    pub pulse_durations: Sweep,
    pub series: Vec<Series>,
    pub model: Model,
    pub inset_pulse_durations: Sweep,
    pub inset_series: Vec<Series>,
    pub inset_trajectories: usize,
}

impl Default for ScalingSpec {
    fn default() -> Self {
        Self {
            pulse_durations: nanoseconds(&[
                50.0, 100.0, 150.0, 200.0, 250.0, 300.0, 350.0, 400.0, 450.0, 500.0, 600.0, 700.0, 800.0, 1000.0,
                1200.0,
            ]),
            series: vec![
                Series::new(6, 7.24),
                Series::new(9, 6.64),
                Series::new(10, 3.47),
                Series::new(14, 2.57),
            ],
            model: Model::Pseudoclassical,
            inset_pulse_durations: Sweep::Linear {
                start: 50e-9,
                stop: 700e-9,
                count: 14,
            },
            inset_series: vec![Series::new(10, 18.5), Series::new(50, 3.7), Series::new(100, 0.62)],
            inset_trajectories: 10_000,
        }
    }
}

/// Pulse periods scanned as `center ± half_width` in steps of `step`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodWindow {
    /// Scan centre (s); defaults to L·T_T.
    #[serde(default)]
    pub center: Option<f64>,
    pub half_width: f64,
    pub step: f64,
}

impl Default for PeriodWindow {
    fn default() -> Self {
        Self {
            center: None,
            half_width: 3e-6,
            step: 50e-9,
        }
    }
}

/// Thermal quantum ΔP_max against the pulse period.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanPeriodSpec {
    pub pulse_durations: Vec<f64>,
    pub window: PeriodWindow,
}

impl Default for ScanPeriodSpec {
    fn default() -> Self {
        Self {
            pulse_durations: vec![180e-9, 430e-9, 650e-9],
            window: PeriodWindow::default(),
        }
    }
}

/// Momentum distributions with and without the standing wave for one
/// parameter set, and their difference curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DistributionSpec {
    pub model: Model,
}

impl Default for DistributionSpec {
    fn default() -> Self {
        Self {
            model: Model::Pseudoclassical,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Experiment {
    CompareModels(CompareModelsSpec),
    SweepTp(SweepTpSpec),
    Scaling(ScalingSpec),
    ScanPeriod(ScanPeriodSpec),
    Distribution(DistributionSpec),
}

impl Experiment {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Experiment::CompareModels(_) => "compare-models",
            Experiment::SweepTp(_) => "sweep-tp",
            Experiment::Scaling(_) => "scaling",
            Experiment::ScanPeriod(_) => "scan-period",
            Experiment::Distribution(_) => "distribution",
        }
    }
}

/// Quantum solver settings shared by every quantum run of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuantumSettings {
    pub propagator: PulsePropagatorConfig,
    pub n_max: usize,
    pub max_n_max: usize,
}

impl Default for QuantumSettings {
    fn default() -> Self {
        Self {
            propagator: PulsePropagatorConfig::default(),
            n_max: DEFAULT_N_MAX,
            max_n_max: 8 * DEFAULT_N_MAX,
        }
    }
}

/// Trajectory-model fidelity for thermal runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrajectorySettings {
    pub trajectories: usize,
    pub integrator: PendulumIntegrator,
}

impl Default for TrajectorySettings {
    fn default() -> Self {
        Self {
            trajectories: 100_000,
            integrator: PendulumIntegrator::thermal(),
        }
    }
}

/// One experiment, fully specified.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Base physical parameters; swept quantities override them per point.
    #[serde(default = "PhysicalParams::rb85")]
    pub params: PhysicalParams,
    /// Thermal initial state; defaults to the temperature and cloud size in
    /// `params`.
    #[serde(default)]
    pub thermal: Option<ThermalInit>,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub binning: Binning,
    #[serde(default)]
    pub quantum: QuantumSettings,
    #[serde(default)]
    pub trajectories: TrajectorySettings,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment, params: PhysicalParams) -> Self {
        Self {
            experiment,
            params,
            thermal: None,
            analysis: AnalysisConfig::default(),
            binning: Binning::default(),
            quantum: QuantumSettings::default(),
            trajectories: TrajectorySettings::default(),
            seed: 0,
            output_dir: None,
        }
    }

    /// Defaults for one experiment kind, with the base parameters of the
    /// matching measurement.
    pub fn default_for(kind: &str) -> Result<Self> {
        let rb = PhysicalParams::rb85();
        let (experiment, params) = match kind {
            "compare-models" => (Experiment::CompareModels(CompareModelsSpec::default()), rb),
            "sweep-tp" => (Experiment::SweepTp(SweepTpSpec::default()), rb),
            "scaling" => (Experiment::Scaling(ScalingSpec::default()), rb),
            "scan-period" => (
                Experiment::ScanPeriod(ScanPeriodSpec::default()),
                rb.with_pulses(10).with_depth_hz(5.89e6).with_pulse_duration(430e-9),
            ),
            "distribution" => (Experiment::Distribution(DistributionSpec::default()), rb),
            other => return Err(Error::Config(format!("unknown experiment kind `{other}`"))),
        };
        Ok(Self::new(experiment, params))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn thermal_init(&self) -> ThermalInit {
        self.thermal
            .clone()
            .unwrap_or_else(|| ThermalInit::from_params(&self.params))
    }

    /// SHA-256 of the canonical JSON form, ignoring the output directory.
    pub fn hash(&self) -> String {
        let canonical = Self {
            output_dir: None,
            ..self.clone()
        };
        let bytes = serde_json::to_vec(&canonical).expect("config serialises");
        hex::encode(Sha256::digest(bytes))
    }

    fn quantum_run_config(&self) -> QuantumRunConfig {
        QuantumRunConfig {
            propagator: self.quantum.propagator,
            n_max: self.quantum.n_max,
            max_n_max: self.quantum.max_n_max.max(self.quantum.n_max),
            binning: self.binning,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.thermal_init().validate()?;
        self.analysis.validate()?;
        self.binning.validate()?;
        self.quantum.propagator.validate()?;
        self.trajectories.integrator.validate()?;
        let params = |t_p: f64| self.params.clone().with_pulse_duration(t_p);
        match &self.experiment {
            Experiment::CompareModels(s) => {
                if !(s.epsilon > 0.0) || !(s.v_tilde >= 0.0) {
                    return Err(invalid("epsilon", "ε must be positive and Ṽ non-negative"));
                }
                if s.max_pulses == 0 || s.trajectories == 0 || s.models.is_empty() {
                    return Err(invalid(
                        "compare-models",
                        "pulses, trajectories and models must be nonempty",
                    ));
                }
                s.betas.values()?;
            }
            Experiment::SweepTp(s) => {
                for t_p in s.pulse_durations.values()? {
                    params(t_p).validate()?;
                }
                if s.models.is_empty() {
                    return Err(invalid("models", "at least one model is required"));
                }
            }
            Experiment::Scaling(s) => {
                for t_p in s
                    .pulse_durations
                    .values()?
                    .into_iter()
                    .chain(s.inset_pulse_durations.values()?)
                {
                    params(t_p).validate()?;
                }
                if s.series.is_empty() && s.inset_series.is_empty() {
                    return Err(invalid("series", "at least one series is required"));
                }
            }
            Experiment::ScanPeriod(s) => {
                if s.pulse_durations.is_empty() {
                    return Err(invalid("pulse_durations", "at least one pulse duration is required"));
                }
                for &t_p in &s.pulse_durations {
                    for period in period_values(&params(t_p), &s.window)? {
                        params(t_p).with_period(Some(period)).validate()?;
                    }
                }
            }
            Experiment::Distribution(_) => self.params.validate()?,
        }
        Ok(())
    }
}

fn period_values(p: &PhysicalParams, window: &PeriodWindow) -> Result<Vec<f64>> {
    let center = window.center.unwrap_or(p.resonance_order as f64 * talbot_time(p));
    if !(window.half_width >= 0.0) {
        return Err(invalid("half_width", "must be non-negative"));
    }
    Sweep::Stepped {
        start: center - window.half_width,
        stop: center + window.half_width,
        step: window.step,
    }
    .values()
}

/// Per-point seed derived from the run seed and the point index.
pub fn point_seed(seed: u64, index: u64) -> u64 {
    trajectory_rng(seed, (1 << 48) + index).next_u64()
}

/// Configurations where experiments departed markedly from every model.
pub fn regime_warning(p: &PhysicalParams) -> Option<String> {
    (p.pulse_duration > 2e-6 && p.potential_depth_hz > 7e6 && p.pulse_count > 12).then(|| {
        format!(
            "t_p = {:.0} ns, V_d/h = {:.2} MHz, N = {}: long, deep pulse trains are where measurements showed \
             significant discrepancies from all models",
            p.pulse_duration * 1e9,
            p.potential_depth_hz / 1e6,
            p.pulse_count
        )
    })
}

/// A table cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Num(f64),
    Text(String),
    Missing,
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Num(x) => Some(*x),
            _ => None,
        }
    }

    fn csv(&self) -> String {
        match self {
            Value::Int(i) => i.to_string(),
            Value::Num(x) if x.is_finite() => format!("{x}"),
            Value::Num(_) | Value::Missing => String::new(),
            Value::Text(s) => csv_text(s),
        }
    }
}

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\"").replace('\n', " "))
    } else {
        s.to_string()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub values: Vec<Value>,
    /// Set when this point failed; its observables are then `Missing`.
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub code_version: String,
}

/// A named auxiliary output (intermediate distributions, profiles, …).
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

/// One row per swept point, in configuration order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub kind: String,
    pub columns: Vec<String>,
    pub rows: Vec<ResultRow>,
    pub provenance: Provenance,
    /// Derived quantities (fits, peaks, crossings).
    pub summary: serde_json::Value,
    pub warnings: Vec<String>,
    /// Wall-clock seconds per row; kept out of the CSV so reruns compare equal.
    pub runtimes: Vec<f64>,
    #[serde(skip)]
    pub artifacts: Vec<Artifact>,
}

impl ScanResult {
    pub fn failed_count(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric column; failed or non-numeric cells become NaN.
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self
            .column_index(name)
            .ok_or_else(|| Error::Config(format!("no column `{name}`")))?;
        Ok(self
            .rows
            .iter()
            .map(|r| r.values[i].as_f64().unwrap_or(f64::NAN))
            .collect())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{},status", self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.values.iter().map(Value::csv).collect();
            let status = match &row.error {
                None => "ok".to_string(),
                Some(e) => csv_text(&format!("error: {e}")),
            };
            writeln!(out, "{},{status}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("utf-8 csv")
    }

    /// Writes `result.csv`, the `result.json` sidecar (with `config`) and any
    /// artifacts under `intermediates/`.
    pub fn write_outputs(&self, dir: &Path, config: &ExperimentConfig) -> Result<()> {
        fs::create_dir_all(dir)?;
        self.write_csv(fs::File::create(dir.join("result.csv"))?)?;
        let sidecar = json!({
            "kind": self.kind,
            "columns": self.columns,
            "provenance": self.provenance,
            "summary": self.summary,
            "warnings": self.warnings,
            "runtimes_s": self.runtimes,
            "failed_points": self.failed_count(),
            "config": config,
        });
        fs::write(dir.join("result.json"), serde_json::to_string_pretty(&sidecar)?)?;
        if !self.artifacts.is_empty() {
            let inter = dir.join("intermediates");
            fs::create_dir_all(&inter)?;
            for a in &self.artifacts {
                fs::write(inter.join(&a.name), &a.contents)?;
            }
        }
        Ok(())
    }
}

/// Runtime switches that do not change results.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunOptions {
    pub emit_intermediates: bool,
}

struct Point {
    keys: Vec<Value>,
    outcome: Result<(Vec<Value>, Vec<Artifact>)>,
    runtime: f64,
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

struct Table {
    columns: Vec<String>,
    observables: usize,
    rows: Vec<ResultRow>,
    runtimes: Vec<f64>,
    artifacts: Vec<Artifact>,
}

impl Table {
    fn new(keys: &[&str], observables: &[String]) -> Self {
        let mut columns: Vec<String> = keys.iter().map(|s| s.to_string()).collect();
        columns.extend(observables.iter().cloned());
        Self {
            columns,
            observables: observables.len(),
            rows: Vec::new(),
            runtimes: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    fn push(&mut self, point: Point) {
        let mut values = point.keys;
        match point.outcome {
            Ok((obs, artifacts)) => {
                debug_assert_eq!(obs.len(), self.observables);
                values.extend(obs);
                self.rows.push(ResultRow { values, error: None });
                self.artifacts.extend(artifacts);
            }
            Err(e) => {
                log::warn!("point failed: {e}");
                values.extend(std::iter::repeat_n(Value::Missing, self.observables));
                self.rows.push(ResultRow {
                    values,
                    error: Some(e.to_string()),
                });
            }
        }
        self.runtimes.push(point.runtime);
    }

    fn finish(self, cfg: &ExperimentConfig, summary: serde_json::Value, warnings: Vec<String>) -> ScanResult {
        ScanResult {
            kind: cfg.experiment.kind_name().to_string(),
            columns: self.columns,
            rows: self.rows,
            provenance: Provenance {
                config_hash: cfg.hash(),
                seed: cfg.seed,
                code_version: CODE_VERSION.into(),
            },
            summary,
            warnings,
            runtimes: self.runtimes,
            artifacts: self.artifacts,
        }
    }
}

/// Runs whichever experiment the configuration describes.
pub fn run_experiment(cfg: &ExperimentConfig, opts: RunOptions) -> Result<ScanResult> {
    cfg.validate()?;
    match &cfg.experiment {
        Experiment::CompareModels(_) => compare_models(cfg, opts),
        Experiment::SweepTp(_) => sweep_tp(cfg, opts),
        Experiment::Scaling(_) => scaling_curve(cfg, opts),
        Experiment::ScanPeriod(_) => scan_period(cfg, opts),
        Experiment::Distribution(_) => distribution(cfg, opts),
    }
}

fn wrong_kind(cfg: &ExperimentConfig, expected: &str) -> Error {
    Error::Config(format!(
        "expected a {expected} experiment, got {}",
        cfg.experiment.kind_name()
    ))
}

/// ⟨𝒥²/2⟩ after 1..=pulses steps of a quantum model from the plane wave
/// n = 0 on manifold β, escalating the ladder on truncation.
fn quantum_energy_history(
    d: &DimensionlessParams,
    model: QuantumModel,
    pulses: u32,
    settings: &QuantumSettings,
    emit: Option<&str>,
) -> Result<(Vec<f64>, Vec<Artifact>)> {
    let mut n_max = settings.n_max;
    'escalate: loop {
        let mut state = ManifoldState::plane_wave(0, d.beta, n_max, d.epsilon)?;
        let mut energies = Vec::with_capacity(pulses as usize);
        for _ in 0..pulses {
            let next = match model {
                QuantumModel::Full => floquet_step(&state, d, &settings.propagator),
                QuantumModel::DeltaKick => delta_kick_step(&state, d),
            };
            match next {
                Ok(s) => state = s,
                Err(Error::Truncation { .. }) if n_max < settings.max_n_max => {
                    n_max = (2 * n_max).min(settings.max_n_max);
                    continue 'escalate;
                }
                Err(e) => return Err(e),
            }
            energies.push(state.energy());
        }
        let mut artifacts = Vec::new();
        if let Some(name) = emit {
            let mut buf = Vec::new();
            state.write_populations_csv(&mut buf)?;
            artifacts.push(Artifact {
                name: name.to_string(),
                contents: String::from_utf8(buf).expect("utf-8"),
            });
        }
        return Ok((energies, artifacts));
    }
}

/// Rows for one β (one per pulse count), its artifacts and its runtime.
type BetaBlock = (Result<Vec<Vec<Value>>>, Vec<Artifact>, f64);

/// Four-model comparison of ⟨𝒥²/2⟩ on an (N, β) grid. Each β starts from
/// momentum βħK: the quantum models from the plane wave, the trajectory
/// models from 𝒥 = βε with θ uniform.
pub fn compare_models(cfg: &ExperimentConfig, opts: RunOptions) -> Result<ScanResult> {
    let Experiment::CompareModels(study) = &cfg.experiment else {
        return Err(wrong_kind(cfg, "compare-models"));
    };
    let betas = study.betas.values()?;
    let mut observables = Vec::new();
    for m in &study.models {
        observables.push(format!("{}_energy", m.name()));
        if m.is_trajectory() {
            observables.push(format!("{}_stderr", m.name()));
        }
    }
    let base = DimensionlessParams::new(
        study.epsilon,
        study.v_tilde,
        cfg.params.resonance_order,
        study.max_pulses,
    );
    let blocks: Vec<BetaBlock> = betas
        .par_iter()
        .enumerate()
        .map(|(index, &beta)| {
            let (out, runtime) = timed(|| -> Result<(Vec<Vec<Value>>, Vec<Artifact>)> {
                let d = base.with_beta(beta);
                let mut per_pulse = vec![Vec::new(); study.max_pulses as usize];
                let mut artifacts = Vec::new();
                for &m in &study.models {
                    if m.is_trajectory() {
                        let init = TrajectoryEnsemble::uniform_theta(
                            study.trajectories,
                            d.beta,
                            d.beta * d.epsilon,
                            point_seed(cfg.seed, index as u64),
                        )?;
                        let integrator = PendulumIntegrator::default();
                        let history = energy_history(&init, &d, m.trajectory_model(), study.max_pulses, &integrator);
                        for (row, (mean, se)) in per_pulse.iter_mut().zip(history) {
                            row.push(Value::Num(mean));
                            row.push(Value::Num(se));
                        }
                        if opts.emit_intermediates {
                            let last = crate::pcl::run_ensemble(
                                &init,
                                &d,
                                m.trajectory_model(),
                                study.max_pulses,
                                &integrator,
                            );
                            let mut buf = Vec::new();
                            last.write_csv(&mut buf)?;
                            artifacts.push(Artifact {
                                name: format!("beta_{beta:.4}_{}_snapshot.csv", m.name()),
                                contents: String::from_utf8(buf).expect("utf-8"),
                            });
                        }
                    } else {
                        let name = format!("beta_{beta:.4}_{}_populations.csv", m.name());
                        let (energies, arts) = quantum_energy_history(
                            &d,
                            m.quantum_model(),
                            study.max_pulses,
                            &cfg.quantum,
                            opts.emit_intermediates.then_some(name.as_str()),
                        )?;
                        artifacts.extend(arts);
                        for (row, e) in per_pulse.iter_mut().zip(energies) {
                            row.push(Value::Num(e));
                        }
                    }
                }
                Ok((per_pulse, artifacts))
            });
            match out {
                Ok((rows, arts)) => (Ok(rows), arts, runtime),
                Err(e) => (Err(e), Vec::new(), runtime),
            }
        })
        .collect();

    let mut table = Table::new(&["beta", "pulses"], &observables);
    for (&beta, (block, artifacts, runtime)) in betas.iter().zip(blocks) {
        table.artifacts.extend(artifacts);
        let share = runtime / study.max_pulses as f64;
        match block {
            Ok(rows) => {
                for (n, obs) in rows.into_iter().enumerate() {
                    table.push(Point {
                        keys: vec![Value::Num(beta), Value::Int(n as i64 + 1)],
                        outcome: Ok((obs, Vec::new())),
                        runtime: share,
                    });
                }
            }
            Err(e) => {
                let message = e.to_string();
                for n in 0..study.max_pulses {
                    table.push(Point {
                        keys: vec![Value::Num(beta), Value::Int(n as i64 + 1)],
                        outcome: Err(Error::Config(message.clone())),
                        runtime: share,
                    });
                }
            }
        }
    }
    let summary = json!({ "epsilon": study.epsilon, "v_tilde": study.v_tilde, "max_pulses": study.max_pulses });
    Ok(table.finish(cfg, summary, Vec::new()))
}

/// Thermal distributions with and without the standing wave, the imaged
/// difference, and its ΔP_max.
pub struct ThermalOutcome {
    pub with_sw: MomentumDistribution,
    pub without_sw: MomentumDistribution,
    pub analysis: DifferenceAnalysis,
}

/// Runs one model at one parameter set through the full imaging pipeline.
pub fn thermal_outcome(cfg: &ExperimentConfig, p: &PhysicalParams, model: Model, seed: u64) -> Result<ThermalOutcome> {
    let init = ThermalInit {
        temperature: p.temperature,
        ..cfg.thermal_init()
    };
    let (with_sw, without_sw) = if model.is_trajectory() {
        let run = PclRunConfig {
            trajectories: cfg.trajectories.trajectories,
            integrator: cfg.trajectories.integrator,
            model: model.trajectory_model(),
            seed,
            binning: cfg.binning,
        };
        let reference = PhysicalParams {
            pulse_count: 0,
            ..p.clone()
        };
        (
            thermal_pcl_distribution(&init, p, &run)?,
            thermal_pcl_distribution(&init, &reference, &run)?,
        )
    } else {
        let q = cfg.quantum_run_config();
        (
            thermal_quantum_distribution(&init, p, model.quantum_model(), &q)?,
            thermal_reference_distribution(&init, p, &cfg.binning)?,
        )
    };
    let analysis = image_difference(cfg, p, &init, &with_sw, &without_sw)?;
    Ok(ThermalOutcome {
        with_sw,
        without_sw,
        analysis,
    })
}

fn image_difference(
    cfg: &ExperimentConfig,
    p: &PhysicalParams,
    init: &ThermalInit,
    with_sw: &MomentumDistribution,
    without_sw: &MomentumDistribution,
) -> Result<DifferenceAnalysis> {
    let (a, b) = MomentumDistribution::common_grid(with_sw, without_sw)?;
    let geometry = TofGeometry::from_params(p);
    let hash = Some(cfg.hash());
    let mut pa = tof_project(&a, init.spatial_sigma, &geometry)?;
    let mut pb = tof_project(&b, init.spatial_sigma, &geometry)?;
    pa.params_hash = hash.clone();
    pb.params_hash = hash;
    analyze_difference(&pa, &pb, &cfg.analysis)
}

fn outcome_artifacts(
    cfg: &ExperimentConfig,
    p: &PhysicalParams,
    label: &str,
    o: &ThermalOutcome,
) -> Result<Vec<Artifact>> {
    let header = json!({ "params": p, "seed": cfg.seed, "build": CODE_VERSION, "config_hash": cfg.hash() });
    let dist = |m: &MomentumDistribution| -> Result<String> {
        let mut buf = Vec::new();
        m.write_csv(&mut buf, &header)?;
        Ok(String::from_utf8(buf).expect("utf-8"))
    };
    let mut diff = Vec::new();
    o.analysis.write_csv(&mut diff)?;
    Ok(vec![
        Artifact {
            name: format!("{label}_with_sw.csv"),
            contents: dist(&o.with_sw)?,
        },
        Artifact {
            name: format!("{label}_without_sw.csv"),
            contents: dist(&o.without_sw)?,
        },
        Artifact {
            name: format!("{label}_difference.csv"),
            contents: String::from_utf8(diff).expect("utf-8"),
        },
        Artifact {
            name: format!("{label}_analysis.json"),
            contents: serde_json::to_string_pretty(&o.analysis.metadata())?,
        },
    ])
}

fn collect_warnings<'a>(params: impl Iterator<Item = &'a PhysicalParams>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for p in params {
        if let Some(w) = regime_warning(p) {
            if !out.contains(&w) {
                log::warn!("{w}");
                out.push(w);
            }
        }
    }
    out
}

/// ΔP_max against pulse duration for each selected model; the δ-kick
/// series gets a straight-line fit in the summary.
pub fn sweep_tp(cfg: &ExperimentConfig, opts: RunOptions) -> Result<ScanResult> {
    let Experiment::SweepTp(study) = &cfg.experiment else {
        return Err(wrong_kind(cfg, "sweep-tp"));
    };
    let durations = study.pulse_durations.values()?;
    let points: Vec<PhysicalParams> = durations
        .iter()
        .map(|&t| cfg.params.clone().with_pulse_duration(t))
        .collect();
    let warnings = collect_warnings(points.iter());
    let observables: Vec<String> = study
        .models
        .iter()
        .map(|m| format!("delta_p_max_{}", m.name()))
        .collect();
    let mut observables_all = vec!["epsilon".to_string(), "n_v_tilde".to_string()];
    observables_all.extend(observables);

    let computed: Vec<Point> = points
        .par_iter()
        .enumerate()
        .map(|(index, p)| {
            let (outcome, runtime) = timed(|| -> Result<(Vec<Value>, Vec<Artifact>)> {
                let d = derive_dimensionless(p)?;
                let mut values = vec![Value::Num(d.epsilon), Value::Num(p.pulse_count as f64 * d.v_tilde)];
                let mut artifacts = Vec::new();
                for &m in &study.models {
                    let o = thermal_outcome(cfg, p, m, point_seed(cfg.seed, index as u64))?;
                    values.push(Value::Num(o.analysis.delta_p_max));
                    if opts.emit_intermediates {
                        let label = format!("tp_{:.0}ns_{}", p.pulse_duration * 1e9, m.name());
                        artifacts.extend(outcome_artifacts(cfg, p, &label, &o)?);
                    }
                }
                Ok((values, artifacts))
            });
            Point {
                keys: vec![Value::Num(p.pulse_duration)],
                outcome,
                runtime,
            }
        })
        .collect();
    let mut table = Table::new(&["pulse_duration_s"], &observables_all);
    for point in computed {
        table.push(point);
    }
    let mut summary = json!({});
    if study.models.contains(&Model::DeltaKick) {
        let result = table_snapshot(&table);
        let (x, y): (Vec<f64>, Vec<f64>) = numeric_pairs(&result, "pulse_duration_s", "delta_p_max_delta_kick");
        if x.len() >= 2 {
            let (intercept, slope) = linear_fit(&x, &y);
            summary["delta_kick_fit"] = json!({ "intercept": intercept, "slope_per_s": slope });
        }
    }
    Ok(table.finish(cfg, summary, warnings))
}

fn table_snapshot(table: &Table) -> (Vec<String>, Vec<ResultRow>) {
    (table.columns.clone(), table.rows.clone())
}

fn numeric_pairs(snapshot: &(Vec<String>, Vec<ResultRow>), xs: &str, ys: &str) -> (Vec<f64>, Vec<f64>) {
    let (columns, rows) = snapshot;
    let xi = columns.iter().position(|c| c == xs);
    let yi = columns.iter().position(|c| c == ys);
    let (Some(xi), Some(yi)) = (xi, yi) else {
        return (Vec::new(), Vec::new());
    };
    rows.iter()
        .filter_map(|r| Some((r.values[xi].as_f64()?, r.values[yi].as_f64()?)))
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .unzip()
}

/// Scaling-law series. Thermal rows carry ΔP_max and the t_p-independent
/// ordinate ΔP_max/sqrt(N·V_d/h); inset rows carry the β = 0 ⟨𝒥²/2⟩ from
/// the trajectory model. Both are indexed by NṼ.
pub fn scaling_curve(cfg: &ExperimentConfig, opts: RunOptions) -> Result<ScanResult> {
    let Experiment::Scaling(study) = &cfg.experiment else {
        return Err(wrong_kind(cfg, "scaling"));
    };
    struct Job {
        inset: bool,
        series: Series,
        p: PhysicalParams,
    }
    let mut jobs = Vec::new();
    for s in &study.series {
        for t_p in study.pulse_durations.values()? {
            let p = cfg
                .params
                .clone()
                .with_pulses(s.pulse_count)
                .with_depth_hz(s.depth_hz)
                .with_pulse_duration(t_p);
            jobs.push(Job {
                inset: false,
                series: *s,
                p,
            });
        }
    }
    for s in &study.inset_series {
        for t_p in study.inset_pulse_durations.values()? {
            let p = cfg
                .params
                .clone()
                .with_pulses(s.pulse_count)
                .with_depth_hz(s.depth_hz)
                .with_pulse_duration(t_p);
            jobs.push(Job {
                inset: true,
                series: *s,
                p,
            });
        }
    }
    let warnings = collect_warnings(jobs.iter().map(|j| &j.p));
    let observables: Vec<String> = [
        "epsilon",
        "n_v_tilde",
        "delta_p_max",
        "scaled_ordinate",
        "mean_scaled_energy",
        "energy_stderr",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let computed: Vec<Point> = jobs
        .par_iter()
        .enumerate()
        .map(|(index, job)| {
            let seed = point_seed(cfg.seed, index as u64);
            let (outcome, runtime) = timed(|| -> Result<(Vec<Value>, Vec<Artifact>)> {
                let d = derive_dimensionless(&job.p)?;
                let n_v = job.p.pulse_count as f64 * d.v_tilde;
                if job.inset {
                    let init = TrajectoryEnsemble::uniform_theta(study.inset_trajectories, 0.0, 0.0, seed)?;
                    let out = crate::pcl::run_ensemble(
                        &init,
                        &d,
                        TrajectoryModel::Pseudoclassical,
                        job.p.pulse_count,
                        &cfg.trajectories.integrator,
                    );
                    let (mean, se) = out.energy_with_error();
                    Ok((
                        vec![
                            Value::Num(d.epsilon),
                            Value::Num(n_v),
                            Value::Missing,
                            Value::Missing,
                            Value::Num(mean),
                            Value::Num(se),
                        ],
                        Vec::new(),
                    ))
                } else {
                    let o = thermal_outcome(cfg, &job.p, study.model, seed)?;
                    let (_, ordinate) = scale_deltap(o.analysis.delta_p_max, &job.p)?;
                    let artifacts = if opts.emit_intermediates {
                        let label = format!(
                            "N{}_{:.2}MHz_tp_{:.0}ns",
                            job.series.pulse_count,
                            job.series.depth_hz / 1e6,
                            job.p.pulse_duration * 1e9
                        );
                        outcome_artifacts(cfg, &job.p, &label, &o)?
                    } else {
                        Vec::new()
                    };
                    Ok((
                        vec![
                            Value::Num(d.epsilon),
                            Value::Num(n_v),
                            Value::Num(o.analysis.delta_p_max),
                            Value::Num(ordinate),
                            Value::Missing,
                            Value::Missing,
                        ],
                        artifacts,
                    ))
                }
            });
            Point {
                keys: vec![
                    Value::Text(if job.inset { "inset" } else { "thermal" }.into()),
                    Value::Int(job.series.pulse_count as i64),
                    Value::Num(job.series.depth_hz),
                    Value::Num(job.p.pulse_duration),
                ],
                outcome,
                runtime,
            }
        })
        .collect();
    let mut table = Table::new(&["series", "pulse_count", "depth_hz", "pulse_duration_s"], &observables);
    for point in computed {
        table.push(point);
    }
    // optimal pulse duration per thermal series from the ordinate peak
    let mut peaks = Vec::new();
    for s in &study.series {
        let (t, y): (Vec<f64>, Vec<f64>) = table
            .rows
            .iter()
            .filter(|r| {
                r.values[0] == Value::Text("thermal".into())
                    && r.values[1] == Value::Int(s.pulse_count as i64)
                    && r.values[2] == Value::Num(s.depth_hz)
            })
            .filter_map(|r| Some((r.values[3].as_f64()?, r.values[7].as_f64()?)))
            .unzip();
        if !t.is_empty() {
            let (t_opt, y_peak) = refined_peak(&t, &y);
            peaks.push(json!({
                "series": s.label(),
                "pulse_count": s.pulse_count,
                "depth_hz": s.depth_hz,
                "optimal_pulse_duration_s": t_opt,
                "peak_scaled_ordinate": y_peak,
            }));
        }
    }
    Ok(table.finish(cfg, json!({ "series_peaks": peaks }), warnings))
}

/// Peak position, height, baseline and full width at half height above
/// baseline of a sampled curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakSummary {
    pub position: f64,
    pub height: f64,
    pub baseline: f64,
    pub fwhm: Option<f64>,
}

pub fn summarize_peak(x: &[f64], y: &[f64]) -> Option<PeakSummary> {
    if x.is_empty() {
        return None;
    }
    let (position, height) = refined_peak(x, y);
    let baseline = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let half = baseline + (height - baseline) / 2.0;
    let top = (0..y.len()).max_by(|&a, &b| y[a].total_cmp(&y[b]))?;
    let cross = |range: Box<dyn Iterator<Item = usize>>, step: isize| -> Option<f64> {
        for i in range {
            let j = (i as isize + step) as usize;
            if y[j] < half {
                return Some(x[i] + (y[i] - half) / (y[i] - y[j]) * (x[j] - x[i]));
            }
        }
        None
    };
    let left = if top == 0 {
        None
    } else {
        cross(Box::new((1..=top).rev()), -1)
    };
    let right = cross(Box::new(top..y.len().saturating_sub(1)), 1);
    let fwhm = match (left, right) {
        (Some(l), Some(r)) => Some(r - l),
        _ => None,
    };
    Some(PeakSummary {
        position,
        height,
        baseline,
        fwhm,
    })
}

/// Thermal quantum ΔP_max as the pulse period is scanned across L·T_T.
pub fn scan_period(cfg: &ExperimentConfig, opts: RunOptions) -> Result<ScanResult> {
    let Experiment::ScanPeriod(study) = &cfg.experiment else {
        return Err(wrong_kind(cfg, "scan-period"));
    };
    let mut table = Table::new(&["pulse_duration_s", "period_s"], &["delta_p_max".to_string()]);
    let mut peaks = Vec::new();
    let mut warnings = Vec::new();
    for &t_p in &study.pulse_durations {
        let p = cfg.params.clone().with_pulse_duration(t_p);
        warnings.extend(collect_warnings(std::iter::once(&p)));
        let periods = period_values(&p, &study.window)?;
        let init = ThermalInit {
            temperature: p.temperature,
            ..cfg.thermal_init()
        };
        let setup = ThermalQuantumSolver::new(&init, &p, QuantumModel::Full, &cfg.quantum_run_config())
            .and_then(|solver| Ok((solver, thermal_reference_distribution(&init, &p, &cfg.binning)?)));
        let (solver, reference) = match setup {
            Ok(s) => s,
            Err(e) => {
                let message = e.to_string();
                for &period in &periods {
                    table.push(Point {
                        keys: vec![Value::Num(t_p), Value::Num(period)],
                        outcome: Err(Error::Config(message.clone())),
                        runtime: 0.0,
                    });
                }
                continue;
            }
        };
        let mut series = (Vec::new(), Vec::new());
        for &period in &periods {
            let (outcome, runtime) = timed(|| -> Result<(Vec<Value>, Vec<Artifact>)> {
                let with_sw = solver.distribution(Some(period))?;
                let pp = p.clone().with_period(Some(period));
                let analysis = image_difference(cfg, &pp, &init, &with_sw, &reference)?;
                let artifacts = if opts.emit_intermediates {
                    let label = format!("tp_{:.0}ns_T_{:.3}us", t_p * 1e9, period * 1e6);
                    let o = ThermalOutcome {
                        with_sw,
                        without_sw: reference.clone(),
                        analysis: analysis.clone(),
                    };
                    outcome_artifacts(cfg, &pp, &label, &o)?
                } else {
                    Vec::new()
                };
                Ok((vec![Value::Num(analysis.delta_p_max)], artifacts))
            });
            if let Ok((v, _)) = &outcome {
                series.0.push(period);
                series.1.push(v[0].as_f64().unwrap_or(f64::NAN));
            }
            table.push(Point {
                keys: vec![Value::Num(t_p), Value::Num(period)],
                outcome,
                runtime,
            });
        }
        if let Some(peak) = summarize_peak(&series.0, &series.1) {
            peaks.push(json!({ "pulse_duration_s": t_p, "peak": peak }));
        }
    }
    Ok(table.finish(cfg, json!({ "peaks": peaks }), warnings))
}

/// Momentum distributions for one parameter set, imaged and differenced.
pub fn distribution(cfg: &ExperimentConfig, opts: RunOptions) -> Result<ScanResult> {
    let Experiment::Distribution(study) = &cfg.experiment else {
        return Err(wrong_kind(cfg, "distribution"));
    };
    let warnings = collect_warnings(std::iter::once(&cfg.params));
    let (outcome, runtime) = timed(|| thermal_outcome(cfg, &cfg.params, study.model, point_seed(cfg.seed, 0)));
    let o = outcome?;
    let (with_sw, without_sw) = MomentumDistribution::common_grid(&o.with_sw, &o.without_sw)?;
    let observables: Vec<String> = ["with_sw", "without_sw", "difference", "smoothed"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut table = Table::new(&["p_recoil"], &observables);
    // imaged curves live on the padded position grid; report them there and
    // fill the raw momentum densities where the grids coincide
    let per = |m: &MomentumDistribution| m.density_per_recoil();
    let (dw, db) = (per(&with_sw), per(&without_sw));
    let offset = o.analysis.momenta.len().saturating_sub(with_sw.centers.len()) / 2;
    for (i, &p) in o.analysis.momenta.iter().enumerate() {
        let raw = i.checked_sub(offset).filter(|&k| k < dw.len());
        let pick = |v: &[f64]| raw.map_or(Value::Missing, |k| Value::Num(v[k]));
        // the imaged grid is the bin grid up to rounding in the x ↔ p maps
        let p = (p / with_sw.bin_width).round() * with_sw.bin_width;
        table.push(Point {
            keys: vec![Value::Num(p)],
            outcome: Ok((
                vec![
                    pick(&dw),
                    pick(&db),
                    Value::Num(o.analysis.difference[i]),
                    Value::Num(o.analysis.smoothed[i]),
                ],
                Vec::new(),
            )),
            runtime: 0.0,
        });
    }
    if let Some(first) = table.runtimes.first_mut() {
        *first = runtime;
    }
    if opts.emit_intermediates {
        table
            .artifacts
            .extend(outcome_artifacts(cfg, &cfg.params, study.model.name(), &o)?);
    }
    let summary = json!({
        "model": study.model,
        "delta_p_max": o.analysis.delta_p_max,
        "crossings": o.analysis.crossings,
        "threshold": cfg.analysis.threshold,
        "with_sw_total": o.with_sw.total(),
        "without_sw_total": o.without_sw.total(),
    });
    Ok(table.finish(cfg, summary, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweeps_expand() {
        assert_eq!(Sweep::Values(vec![1.0, 2.0]).values().unwrap(), vec![1.0, 2.0]);
        assert_eq!(
            Sweep::Linear {
                start: 0.0,
                stop: 1.0,
                count: 3
            }
            .values()
            .unwrap(),
            vec![0.0, 0.5, 1.0]
        );
        let stepped = Sweep::Stepped {
            start: 0.0,
            stop: 0.975,
            step: 0.025,
        }
        .values()
        .unwrap();
        assert_eq!(stepped.len(), 40);
        assert!(Sweep::Values(vec![]).values().is_err());
    }

    #[test]
    fn default_configs_validate_and_roundtrip() {
        for kind in ["compare-models", "sweep-tp", "scaling", "scan-period", "distribution"] {
            let cfg = ExperimentConfig::default_for(kind).unwrap();
            cfg.validate().unwrap();
            let text = serde_json::to_string(&cfg).unwrap();
            let back = ExperimentConfig::from_json(&text).unwrap();
            assert_eq!(back, cfg);
            assert_eq!(back.hash(), cfg.hash());
            assert_eq!(cfg.experiment.kind_name(), kind);
        }
        assert!(ExperimentConfig::default_for("fig7").is_err());
    }

    #[test]
    fn minimal_json_uses_defaults() {
        let cfg =
            ExperimentConfig::from_json(r#"{"experiment": {"kind": "sweep-tp", "pulse_durations": [1e-7]}}"#).unwrap();
        let Experiment::SweepTp(study) = &cfg.experiment else {
            panic!()
        };
        assert_eq!(study.models, SweepTpSpec::default().models);
        assert_eq!(cfg.params, PhysicalParams::rb85());
        assert!(ExperimentConfig::from_json(r#"{"experiment": {"kind": "sweep-tp"}, "bogus": 1}"#).is_err());
    }

    #[test]
    fn pulse_longer_than_period_is_rejected() {
        let mut cfg = ExperimentConfig::default_for("sweep-tp").unwrap();
        cfg.experiment = Experiment::SweepTp(SweepTpSpec {
            pulse_durations: Sweep::Values(vec![70e-6]),
            ..Default::default()
        });
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn hash_ignores_output_dir_only() {
        let a = ExperimentConfig::default_for("distribution").unwrap();
        let b = ExperimentConfig {
            output_dir: Some("/tmp/x".into()),
            ..a.clone()
        };
        let c = ExperimentConfig { seed: 9, ..a.clone() };
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn warning_guard() {
        let p = PhysicalParams::rb85()
            .with_pulses(13)
            .with_depth_hz(7.5e6)
            .with_pulse_duration(2.5e-6);
        assert!(regime_warning(&p).is_some());
        assert!(regime_warning(&p.clone().with_pulses(12)).is_none());
        assert!(regime_warning(&PhysicalParams::rb85()).is_none());
    }

    #[test]
    fn peak_summary_of_a_triangle() {
        let x: Vec<f64> = (0..11).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 10.0 - 2.0 * (v - 5.0f64).abs()).collect();
        let s = summarize_peak(&x, &y).unwrap();
        assert_eq!(s.position, 5.0);
        assert_eq!(s.baseline, 0.0);
        assert!((s.fwhm.unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn point_seeds_differ() {
        assert_ne!(point_seed(1, 0), point_seed(1, 1));
        assert_ne!(point_seed(1, 0), point_seed(2, 0));
        assert_eq!(point_seed(5, 3), point_seed(5, 3));
    }

    #[test]
    fn csv_marks_failures() {
        let cfg = ExperimentConfig::default_for("sweep-tp").unwrap();
        let mut table = Table::new(&["x"], &["y".to_string()]);
        table.push(Point {
            keys: vec![Value::Num(1.0)],
            outcome: Ok((vec![Value::Num(2.5)], vec![])),
            runtime: 0.1,
        });
        table.push(Point {
            keys: vec![Value::Num(2.0)],
            outcome: Err(invalid("x", "bad, really")),
            runtime: 0.1,
        });
        let result = table.finish(&cfg, json!({}), vec![]);
        assert_eq!(result.failed_count(), 1);
        let csv = result.csv_string();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "x,y,status");
        assert_eq!(lines[1], "1,2.5,ok");
        assert!(lines[2].starts_with("2,,\"error: invalid parameter"));
    }
}
