//! Thermal-gas layer: Maxwell-Boltzmann initial conditions, per-manifold
//! quantum evolution or trajectory sampling, and aggregation into a binned
//! laboratory momentum distribution.
//!
//! Momenta are in units of the photon recoil ħk_L throughout. A lattice
//! momentum p decomposes as p = 2(n + β) with integer ladder site n and
//! quasimomentum β ∈ [0, 1).

use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::pcl::{trajectory_rng, wrap_angle, CompositeStep, PendulumIntegrator, Trajectory, TrajectoryModel};
use crate::qsim::{
    FreeEvolution, ManifoldBatch, PhaseGrating, PulsePropagator, PulsePropagatorConfig, QuantumModel, DEFAULT_N_MAX,
};
use crate::stats::pairwise_sum;
use crate::units::{derive_dimensionless, fractional, PhysicalParams};

/// Per-atom spread of the dipole potential depth.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DepthVariation {
    #[default]
    None,
    /// Multiplier s·u: u uniform on [spatial_min_ratio, 1] for the spatial
    /// intensity profile, s ~ N(1, shot_sigma²) for shot-to-shot fluctuation.
    Spread { spatial_min_ratio: f64, shot_sigma: f64 },
}

impl DepthVariation {
    /// Factor-2 spatial intensity spread with 5 % shot-to-shot noise.
    pub fn measured() -> Self {
        DepthVariation::Spread {
            spatial_min_ratio: 0.5,
            shot_sigma: 0.05,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let DepthVariation::Spread {
            spatial_min_ratio,
            shot_sigma,
        } = *self
        {
            if !(spatial_min_ratio > 0.0 && spatial_min_ratio <= 1.0) {
                return Err(invalid("spatial_min_ratio", "must lie in (0, 1]"));
            }
            if !(shot_sigma >= 0.0 && shot_sigma.is_finite()) {
                return Err(invalid("shot_sigma", "must be non-negative"));
            }
        }
        Ok(())
    }

    /// Mean of the multiplier distribution.
    pub fn mean(&self) -> f64 {
        match *self {
            DepthVariation::None => 1.0,
            DepthVariation::Spread { spatial_min_ratio, .. } => (1.0 + spatial_min_ratio) / 2.0,
        }
    }
}

/// Draws one per-atom V_d multiplier. `None` returns exactly 1 without
/// consuming randomness.
pub fn sample_potential_depth<R: Rng + ?Sized>(variation: &DepthVariation, rng: &mut R) -> f64 {
    match *variation {
        DepthVariation::None => 1.0,
        DepthVariation::Spread {
            spatial_min_ratio,
            shot_sigma,
        } => {
            let u = spatial_min_ratio + (1.0 - spatial_min_ratio) * rng.gen::<f64>();
            let s = if shot_sigma > 0.0 {
                Normal::new(1.0, shot_sigma).expect("validated sigma").sample(rng)
            } else {
                1.0
            };
            (s * u).max(0.0)
        }
    }
}

/// Initial-momentum quadrature grid p₀ = j·spacing, |p₀| ≤ span_sigmas·σ_p.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialMomentumGrid {
    /// Grid spacing in ħk_L.
    pub spacing: f64,
    /// Half-width in thermal standard deviations.
    pub span_sigmas: f64,
}

impl Default for InitialMomentumGrid {
    fn default() -> Self {
        Self {
            spacing: 0.05,
            span_sigmas: 4.0,
        }
    }
}

/// Thermal initial state of the cloud.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalInit {
    /// Temperature (K).
    pub temperature: f64,
    #[serde(default)]
    pub momentum_grid: InitialMomentumGrid,
    /// rms radius of the initial cloud along the standing wave (m).
    pub spatial_sigma: f64,
    #[serde(default)]
    pub depth_variation: DepthVariation,
}

impl ThermalInit {
    /// Temperature and cloud size taken from the physical parameters.
    pub fn from_params(p: &PhysicalParams) -> Self {
        Self {
            temperature: p.temperature,
            momentum_grid: InitialMomentumGrid::default(),
            spatial_sigma: p.cloud_sigma,
            depth_variation: DepthVariation::None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(invalid("temperature", "must be positive"));
        }
        if !(self.momentum_grid.spacing > 0.0) || !(self.momentum_grid.span_sigmas > 0.0) {
            return Err(invalid("momentum_grid", "spacing and span must be positive"));
        }
        if !(self.spatial_sigma >= 0.0) {
            return Err(invalid("spatial_sigma", "must be non-negative"));
        }
        self.depth_variation.validate()
    }

    /// rms momentum width in ħk_L at this temperature.
    pub fn momentum_width(&self, p: &PhysicalParams) -> f64 {
        PhysicalParams {
            temperature: self.temperature,
            ..p.clone()
        }
        .thermal_momentum_width()
    }

    /// Symmetric quadrature grid with normalised Maxwell-Boltzmann weights.
    pub fn weighted_grid(&self, p: &PhysicalParams) -> Vec<(f64, f64)> {
        let sigma = self.momentum_width(p);
        let h = self.momentum_grid.spacing;
        let half = (self.momentum_grid.span_sigmas * sigma / h).ceil() as i64;
        let raw: Vec<(f64, f64)> = (-half..=half)
            .map(|j| {
                let p0 = j as f64 * h;
                (p0, (-p0 * p0 / (2.0 * sigma * sigma)).exp())
            })
            .collect();
        let total = pairwise_sum(&raw.iter().map(|&(_, w)| w).collect::<Vec<_>>());
        raw.into_iter().map(|(p0, w)| (p0, w / total)).collect()
    }
}

/// Output histogram layout. Bin centres sit on integer multiples of the
/// width so that the β = 0 ladder momenta fall on centres.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Binning {
    /// Bin width in ħk_L.
    pub width: f64,
    /// Nominal half-range in ħk_L; extended automatically to cover the data.
    pub half_range: f64,
}

impl Default for Binning {
    fn default() -> Self {
        Self {
            width: 0.5,
            half_range: 320.0,
        }
    }
}

impl Binning {
    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0 && self.half_range > 0.0) {
            return Err(invalid("binning", "width and half_range must be positive"));
        }
        Ok(())
    }
}

/// Binned momentum distribution; `densities` holds the probability per bin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentumDistribution {
    pub centers: Vec<f64>,
    pub densities: Vec<f64>,
    pub bin_width: f64,
}

impl MomentumDistribution {
    /// Histogram of weighted momentum samples. A sample lying exactly on a
    /// bin edge is split evenly between the two neighbours. The grid stays
    /// symmetric and grows past `half_range` whenever a sample needs it.
    pub fn from_samples(samples: &[(f64, f64)], binning: &Binning) -> Result<Self> {
        binning.validate()?;
        let w = binning.width;
        let reach = samples.iter().map(|&(p, _)| p.abs()).fold(binning.half_range, f64::max);
        let half_bins = (reach / w).ceil() as i64 + 1;
        let mut densities = vec![0.0; (2 * half_bins + 1) as usize];
        for &(p, weight) in samples {
            let x = p / w + 0.5;
            let lower = x.floor();
            let index = (lower as i64 + half_bins) as usize;
            if x == lower && index > 0 {
                densities[index - 1] += weight / 2.0;
                densities[index] += weight / 2.0;
            } else {
                densities[index] += weight;
            }
        }
        let centers = (-half_bins..=half_bins).map(|k| k as f64 * w).collect();
        Ok(Self {
            centers,
            densities,
            bin_width: w,
        })
    }

    pub fn total(&self) -> f64 {
        pairwise_sum(&self.densities)
    }

    /// Probability density per ħk_L.
    pub fn density_per_recoil(&self) -> Vec<f64> {
        self.densities.iter().map(|d| d / self.bin_width).collect()
    }

    pub fn mean_square(&self) -> f64 {
        let terms: Vec<f64> = self
            .centers
            .iter()
            .zip(&self.densities)
            .map(|(p, d)| p * p * d)
            .collect();
        pairwise_sum(&terms)
    }

    /// Resamples onto the (wider or equal) grid of `other` by centre lookup.
    pub fn aligned_to(&self, other: &MomentumDistribution) -> Result<Self> {
        if self.bin_width != other.bin_width {
            return Err(Error::GridMismatch(format!(
                "bin widths {} and {} differ",
                self.bin_width, other.bin_width
            )));
        }
        let half_other = (other.centers.len() / 2) as i64;
        let half_self = (self.centers.len() / 2) as i64;
        if half_self > half_other {
            return Err(Error::GridMismatch("target grid is narrower".into()));
        }
        let mut densities = vec![0.0; other.centers.len()];
        for (k, d) in self.densities.iter().enumerate() {
            densities[(k as i64 - half_self + half_other) as usize] = *d;
        }
        Ok(Self {
            centers: other.centers.clone(),
            densities,
            bin_width: self.bin_width,
        })
    }

    /// Brings two distributions onto their common (wider) grid.
    pub fn common_grid(a: &Self, b: &Self) -> Result<(Self, Self)> {
        if a.centers.len() >= b.centers.len() {
            Ok((a.clone(), b.aligned_to(a)?))
        } else {
            Ok((a.aligned_to(b)?, b.clone()))
        }
    }

    /// CSV with a JSON header block on `#`-prefixed lines.
    pub fn write_csv<W: Write>(&self, mut out: W, header: &serde_json::Value) -> Result<()> {
        for line in serde_json::to_string_pretty(header)?.lines() {
            writeln!(out, "# {line}")?;
        }
        writeln!(out, "p_recoil,density")?;
        for (p, d) in self.centers.iter().zip(&self.densities) {
            writeln!(out, "{p},{d:e}")?;
        }
        Ok(())
    }
}

/// Settings for the thermal quantum pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantumRunConfig {
    #[serde(default)]
    pub propagator: PulsePropagatorConfig,
    /// Initial ladder half-size; doubled whenever the truncation guard trips.
    pub n_max: usize,
    /// Escalation ceiling.
    pub max_n_max: usize,
    #[serde(default)]
    pub binning: Binning,
}

impl Default for QuantumRunConfig {
    fn default() -> Self {
        Self {
            propagator: PulsePropagatorConfig::default(),
            n_max: DEFAULT_N_MAX,
            max_n_max: 8 * DEFAULT_N_MAX,
            binning: Binning::default(),
        }
    }
}

/// Initial momenta sharing one quasimomentum.
struct BetaGroup {
    beta: f64,
    sites: Vec<i64>,
    weights: Vec<f64>,
}

fn beta_groups(grid: &[(f64, f64)]) -> Vec<BetaGroup> {
    // keyed on β to 1e-12 so grid points two recoils apart share a manifold
    let mut map: BTreeMap<i64, BetaGroup> = BTreeMap::new();
    for &(p0, w) in grid {
        let half = p0 / 2.0;
        let mut beta = fractional(half);
        if beta > 1.0 - 1e-12 {
            beta = 0.0;
        }
        let site = (half - beta).round() as i64;
        let key = (beta * 1e12).round() as i64;
        let group = map.entry(key).or_insert_with(|| BetaGroup {
            beta,
            sites: Vec::new(),
            weights: Vec::new(),
        });
        group.sites.push(site);
        group.weights.push(w);
    }
    map.into_values().collect()
}

/// Evaluates thermal quantum distributions for one set of pulse
/// parameters, caching the per-β pulse propagators so that scans over the
/// pulse period reuse them.
/// Ladder half-width and the propagator built for it.
type CachedPropagator = (usize, std::sync::Arc<PulsePropagator>);

pub struct ThermalQuantumSolver {
    params: PhysicalParams,
    model: QuantumModel,
    cfg: QuantumRunConfig,
    groups: Vec<BetaGroup>,
    cache: std::sync::Mutex<Vec<Option<CachedPropagator>>>,
}

impl ThermalQuantumSolver {
    pub fn new(init: &ThermalInit, p: &PhysicalParams, model: QuantumModel, cfg: &QuantumRunConfig) -> Result<Self> {
        init.validate()?;
        p.validate()?;
        cfg.propagator.validate()?;
        cfg.binning.validate()?;
        let groups = beta_groups(&init.weighted_grid(p));
        let slots = groups.len();
        Ok(Self {
            params: p.clone(),
            model,
            cfg: cfg.clone(),
            groups,
            cache: std::sync::Mutex::new(vec![None; slots]),
        })
    }

    /// Number of distinct quasimomentum manifolds in the grid.
    pub fn manifold_count(&self) -> usize {
        self.groups.len()
    }

    fn propagator(
        &self,
        index: usize,
        n_max: usize,
        beta: f64,
        epsilon: f64,
        kick: f64,
    ) -> std::sync::Arc<PulsePropagator> {
        if let Some((cached_n, prop)) = &self.cache.lock().expect("cache lock")[index] {
            if *cached_n == n_max {
                return prop.clone();
            }
        }
        let prop = std::sync::Arc::new(PulsePropagator::new(beta, epsilon, kick, n_max, &self.cfg.propagator));
        self.cache.lock().expect("cache lock")[index] = Some((n_max, prop.clone()));
        prop
    }

    /// Distribution after the configured pulse train with period `period`
    /// (None: L·T_T from the parameters).
    pub fn distribution(&self, period: Option<f64>) -> Result<MomentumDistribution> {
        let p = PhysicalParams {
            pulse_period: period.or(self.params.pulse_period),
            ..self.params.clone()
        };
        p.validate()?;
        let d = derive_dimensionless(&p)?;
        let free = match (self.model, p.pulse_period) {
            (QuantumModel::Full, None) => FreeEvolution::Resonant {
                resonance_order: p.resonance_order,
            },
            (QuantumModel::Full, Some(t)) => FreeEvolution::for_period(t, &p),
            (QuantumModel::DeltaKick, None) => FreeEvolution::Duration {
                talbot_multiple: p.resonance_order,
                offset: 0.0,
            },
            (QuantumModel::DeltaKick, Some(t)) => FreeEvolution::for_kicked_period(t, &p),
        };
        let per_group: Vec<Result<Vec<(f64, f64)>>> = (0..self.groups.len())
            .into_par_iter()
            .map(|g| self.evolve_group(g, &d, &free, p.pulse_count))
            .collect();
        let mut samples = Vec::new();
        for group in per_group {
            samples.extend(group?);
        }
        MomentumDistribution::from_samples(&samples, &self.cfg.binning)
    }

    fn evolve_group(
        &self,
        index: usize,
        d: &crate::units::DimensionlessParams,
        free: &FreeEvolution,
        pulses: u32,
    ) -> Result<Vec<(f64, f64)>> {
        let group = &self.groups[index];
        let reach = group.sites.iter().map(|s| s.unsigned_abs() as usize).max().unwrap_or(0);
        let mut n_max = self.cfg.n_max.max(2 * reach + 16);
        loop {
            match self.try_evolve(index, n_max, d, free, pulses) {
                Ok(batch) => {
                    let n = n_max as i64;
                    let mut out = Vec::with_capacity(batch.re.nrows());
                    for (col, w) in group.weights.iter().enumerate() {
                        for (site, pop) in (-n..=n).zip(batch.populations(col)) {
                            if pop > 0.0 {
                                out.push((2.0 * (site as f64 + group.beta), w * pop));
                            }
                        }
                    }
                    return Ok(out);
                }
                Err(Error::Truncation { .. }) if n_max < self.cfg.max_n_max => {
                    n_max = (2 * n_max).min(self.cfg.max_n_max);
                    log::debug!("β = {}: escalating ladder to ±{n_max}", group.beta);
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn try_evolve(
        &self,
        index: usize,
        n_max: usize,
        d: &crate::units::DimensionlessParams,
        free: &FreeEvolution,
        pulses: u32,
    ) -> Result<ManifoldBatch> {
        let group = &self.groups[index];
        let mut batch = ManifoldBatch::plane_waves(group.beta, n_max, &group.sites)?;
        let phases = free.phases(n_max, group.beta, d.epsilon);
        match self.model {
            QuantumModel::Full => {
                if pulses > 0 {
                    let prop = self.propagator(index, n_max, group.beta, d.epsilon, d.kick_strength);
                    for _ in 0..pulses {
                        batch.pulse(&prop);
                        batch.free(&phases);
                    }
                }
            }
            QuantumModel::DeltaKick => {
                let grating = PhaseGrating::new(d.kick_strength);
                for _ in 0..pulses {
                    batch.kick(&grating);
                    batch.free(&phases);
                }
            }
        }
        batch.check_truncation()?;
        Ok(batch)
    }
}

/// Maxwell-Boltzmann average of per-manifold quantum evolutions.
pub fn thermal_quantum_distribution(
    init: &ThermalInit,
    p: &PhysicalParams,
    model: QuantumModel,
    cfg: &QuantumRunConfig,
) -> Result<MomentumDistribution> {
    ThermalQuantumSolver::new(init, p, model, cfg)?.distribution(None)
}

/// Settings for the thermal trajectory pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PclRunConfig {
    pub trajectories: usize,
    #[serde(default = "PendulumIntegrator::thermal")]
    pub integrator: PendulumIntegrator,
    pub model: TrajectoryModel,
    pub seed: u64,
    #[serde(default)]
    pub binning: Binning,
}

impl Default for PclRunConfig {
    fn default() -> Self {
        Self {
            trajectories: 100_000,
            integrator: PendulumIntegrator::thermal(),
            model: TrajectoryModel::Pseudoclassical,
            seed: 0,
            binning: Binning::default(),
        }
    }
}

/// Monte-Carlo thermal distribution from pseudoclassical (or classical)
/// trajectories. Atom i draws, from its own random stream, an initial
/// momentum p₀ ~ N(0, σ_p²), a uniform position θ and a depth multiplier;
/// it starts at 𝒥 = p₀ε/2 on the manifold β = frac(p₀/2) and ends at
/// momentum p = 2𝒥/ε.
pub fn thermal_pcl_distribution(
    init: &ThermalInit,
    p: &PhysicalParams,
    cfg: &PclRunConfig,
) -> Result<MomentumDistribution> {
    let samples = thermal_pcl_samples(init, p, cfg)?;
    MomentumDistribution::from_samples(&samples, &cfg.binning)
}

/// Final (momentum, weight) pairs of the thermal trajectory run.
pub fn thermal_pcl_samples(init: &ThermalInit, p: &PhysicalParams, cfg: &PclRunConfig) -> Result<Vec<(f64, f64)>> {
    init.validate()?;
    p.validate()?;
    cfg.integrator.validate()?;
    if cfg.trajectories == 0 {
        return Err(invalid("trajectories", "must be at least 1"));
    }
    let d = derive_dimensionless(p)?;
    let sigma = init.momentum_width(p);
    let step = CompositeStep::new(&d, cfg.model, &cfg.integrator);
    let weight = 1.0 / cfg.trajectories as f64;
    let eps = d.epsilon;
    Ok((0..cfg.trajectories)
        .into_par_iter()
        .with_min_len(256)
        .map(|i| {
            let mut rng = trajectory_rng(cfg.seed, i as u64);
            let z: f64 = StandardNormal.sample(&mut rng);
            let p0 = sigma * z;
            let theta = wrap_angle(rng.gen::<f64>() * std::f64::consts::TAU);
            let v = d.v_tilde * sample_potential_depth(&init.depth_variation, &mut rng);
            let beta = fractional(p0 / 2.0);
            let mut t = Trajectory {
                theta,
                j: p0 * eps / 2.0,
            };
            for _ in 0..p.pulse_count {
                t = step.apply(t, v, beta);
            }
            (2.0 * t.j / eps, weight)
        })
        .collect())
}

/// The binned initial Maxwell-Boltzmann distribution on the quadrature grid
/// (the no-standing-wave reference of the quantum pipeline).
pub fn thermal_reference_distribution(
    init: &ThermalInit,
    p: &PhysicalParams,
    binning: &Binning,
) -> Result<MomentumDistribution> {
    init.validate()?;
    MomentumDistribution::from_samples(&init.weighted_grid(p), binning)
}
