//! ε-pseudoclassical and classical trajectory models.
//!
//! A pulse is one unit of time under the pendulum Hamiltonian
//! H₁ = 𝒥²/2 − Ṽ cos θ. Between pulses the pseudoclassical model applies the
//! rewound free map θ → θ − 𝒥 + 4πLβ, while the classical model streams
//! forward for the real inter-pulse duration.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::stats::weighted_mean_and_error;
use crate::units::DimensionlessParams;

/// A phase-space point (θ, 𝒥) with θ kept in [0, 2π).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub theta: f64,
    pub j: f64,
}

impl Trajectory {
    pub fn new(theta: f64, j: f64) -> Self {
        Self {
            theta: wrap_angle(theta),
            j,
        }
    }

    /// H₁ = 𝒥²/2 − Ṽ cos θ.
    pub fn pendulum_energy(&self, v_tilde: f64) -> f64 {
        self.j * self.j / 2.0 - v_tilde * self.theta.cos()
    }
}

/// Wraps an angle into [0, 2π).
pub fn wrap_angle(theta: f64) -> f64 {
    let w = theta.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Symmetric compositions of the kick-drift-kick step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymplecticScheme {
    /// Second-order kick-drift-kick.
    Leapfrog,
    /// Fourth-order triple jump.
    Yoshida4,
    /// Sixth-order composition (Yoshida's solution A).
    Yoshida6,
    /// Eighth-order composition (Yoshida's solution D).
    Yoshida8,
}

impl SymplecticScheme {
    fn weights(self) -> Vec<f64> {
        let symmetric = |outer_to_inner: &[f64]| {
            let w0 = 1.0 - 2.0 * outer_to_inner.iter().sum::<f64>();
            let mut w: Vec<f64> = outer_to_inner.to_vec();
            w.push(w0);
            w.extend(outer_to_inner.iter().rev());
            w
        };
        match self {
            SymplecticScheme::Leapfrog => vec![1.0],
            SymplecticScheme::Yoshida4 => {
                let c = 2f64.cbrt();
                let w1 = 1.0 / (2.0 - c);
                vec![w1, -c * w1, w1]
            }
            SymplecticScheme::Yoshida6 => {
                symmetric(&[0.784_513_610_477_560, 0.235_573_213_359_357, -1.177_679_984_178_87])
            }
            SymplecticScheme::Yoshida8 => symmetric(&[
                0.914_844_246_229_740,
                0.253_693_336_566_229,
                -1.444_852_236_860_48,
                -0.158_240_635_368_243,
                1.938_139_137_622_76,
                -1.960_610_232_975_49,
                0.102_799_849_391_985,
            ]),
        }
    }
}

/// Fixed-step symplectic integrator for one unit of pendulum time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PendulumIntegrator {
    pub scheme: SymplecticScheme,
    pub substeps: usize,
}

impl Default for PendulumIntegrator {
    fn default() -> Self {
        Self {
            scheme: SymplecticScheme::Yoshida6,
            substeps: 64,
        }
    }
}

impl PendulumIntegrator {
    /// Cheaper setting for thermal ensembles: about 1e-7 per pulse for Ṽ ≲ 4.
    pub fn thermal() -> Self {
        Self {
            scheme: SymplecticScheme::Yoshida6,
            substeps: 16,
        }
    }

    pub fn leapfrog(substeps: usize) -> Self {
        Self {
            scheme: SymplecticScheme::Leapfrog,
            substeps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.substeps == 0 {
            return Err(invalid("substeps", "must be at least 1"));
        }
        Ok(())
    }

    /// Precomputed kick/drift sequence for repeated use.
    pub fn flow(&self) -> PendulumFlow {
        let h = 1.0 / self.substeps.max(1) as f64;
        let weights = self.scheme.weights();
        let mut kicks = vec![0.0];
        let mut drifts = Vec::new();
        for _ in 0..self.substeps.max(1) {
            for w in &weights {
                *kicks.last_mut().unwrap() += w * h / 2.0;
                drifts.push(w * h);
                kicks.push(w * h / 2.0);
            }
        }
        PendulumFlow { kicks, drifts }
    }
}

/// Kick coefficients interleaved with drifts: K₀ D₀ K₁ D₁ … D_{m−1} K_m.
#[derive(Clone, Debug)]
pub struct PendulumFlow {
    kicks: Vec<f64>,
    drifts: Vec<f64>,
}

impl PendulumFlow {
    /// Evolves (θ, 𝒥) for one unit of time under H₁ with the given Ṽ.
    #[inline]
    pub fn apply(&self, t: Trajectory, v_tilde: f64) -> Trajectory {
        if v_tilde == 0.0 {
            return Trajectory::new(t.theta + t.j, t.j);
        }
        let mut theta = t.theta;
        let mut j = t.j - v_tilde * self.kicks[0] * theta.sin();
        for (d, k) in self.drifts.iter().zip(&self.kicks[1..]) {
            theta += d * j;
            j -= v_tilde * k * theta.sin();
        }
        Trajectory::new(theta, j)
    }
}

/// One pulse: Hamilton's equations of H₁ for one unit of dimensionless time.
pub fn pulse_map(t: Trajectory, v_tilde: f64, integrator: &PendulumIntegrator) -> Trajectory {
    integrator.flow().apply(t, v_tilde)
}

/// Rewound free map: θ → θ − 𝒥 + 4πLβ, 𝒥 unchanged.
#[inline]
pub fn free_map(t: Trajectory, beta: f64, resonance_order: u32) -> Trajectory {
    Trajectory {
        theta: wrap_angle(t.theta - t.j + 4.0 * PI * resonance_order as f64 * beta),
        j: t.j,
    }
}

/// Forward free flight for `free_time` pulse durations: θ → θ + 𝒥·free_time.
#[inline]
pub fn classical_free_map(t: Trajectory, free_time: f64) -> Trajectory {
    Trajectory {
        theta: wrap_angle(t.theta + t.j * free_time),
        j: t.j,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrajectoryModel {
    Pseudoclassical,
    Classical,
}

/// Pulse followed by the model's free map, for one trajectory.
#[derive(Clone, Debug)]
pub struct CompositeStep {
    flow: PendulumFlow,
    model: TrajectoryModel,
    resonance_order: u32,
    classical_free_time: f64,
}

impl CompositeStep {
    pub fn new(d: &DimensionlessParams, model: TrajectoryModel, integrator: &PendulumIntegrator) -> Self {
        Self {
            flow: integrator.flow(),
            model,
            resonance_order: d.resonance_order,
            classical_free_time: d.classical_free_time(),
        }
    }

    #[inline]
    pub fn apply(&self, t: Trajectory, v_tilde: f64, beta: f64) -> Trajectory {
        let t = self.flow.apply(t, v_tilde);
        match self.model {
            TrajectoryModel::Pseudoclassical => free_map(t, beta, self.resonance_order),
            TrajectoryModel::Classical => classical_free_map(t, self.classical_free_time),
        }
    }
}

/// Per-trajectory random stream: trajectory `index` of a run seeded with
/// `seed` always sees the same numbers, whatever the scheduling.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Trajectories sharing one quasimomentum β.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryEnsemble {
    pub trajectories: Vec<Trajectory>,
    pub beta: f64,
    /// Normalised weights, one per trajectory.
    pub weights: Vec<f64>,
    pub seed: u64,
    /// Stream id of trajectory i is `first_stream + i`.
    pub first_stream: u64,
}

impl TrajectoryEnsemble {
    /// `count` trajectories with θ uniform on [0, 2π) and 𝒥 = `j0`.
    pub fn uniform_theta(count: usize, beta: f64, j0: f64, seed: u64) -> Result<Self> {
        if count == 0 {
            return Err(invalid("count", "ensemble must be nonempty"));
        }
        let trajectories = (0..count)
            .into_par_iter()
            .map(|i| {
                let mut rng = trajectory_rng(seed, i as u64);
                Trajectory::new(rng.gen::<f64>() * TAU, j0)
            })
            .collect();
        Ok(Self {
            trajectories,
            beta,
            weights: vec![1.0 / count as f64; count],
            seed,
            first_stream: 0,
        })
    }

    /// Equal-weight ensemble from explicit trajectories.
    pub fn from_trajectories(trajectories: Vec<Trajectory>, beta: f64) -> Result<Self> {
        if trajectories.is_empty() {
            return Err(invalid("trajectories", "ensemble must be nonempty"));
        }
        let n = trajectories.len();
        Ok(Self {
            trajectories,
            beta,
            weights: vec![1.0 / n as f64; n],
            seed: 0,
            first_stream: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    /// Snapshot with one row per trajectory.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "theta,j,weight")?;
        for (t, w) in self.trajectories.iter().zip(&self.weights) {
            writeln!(out, "{},{},{:e}", t.theta, t.j, w)?;
        }
        Ok(())
    }

    fn scaled_energies(&self) -> Vec<f64> {
        self.trajectories.iter().map(|t| t.j * t.j / 2.0).collect()
    }

    /// Weighted ⟨𝒥²/2⟩ and its Monte-Carlo standard error.
    pub fn energy_with_error(&self) -> (f64, f64) {
        weighted_mean_and_error(&self.scaled_energies(), &self.weights)
    }
}

/// Applies `pulses` composite steps to every trajectory.
pub fn run_ensemble(
    init: &TrajectoryEnsemble,
    d: &DimensionlessParams,
    model: TrajectoryModel,
    pulses: u32,
    integrator: &PendulumIntegrator,
) -> TrajectoryEnsemble {
    let step = CompositeStep::new(d, model, integrator);
    let beta = init.beta;
    let trajectories = init
        .trajectories
        .par_iter()
        .with_min_len(256)
        .map(|&t| (0..pulses).fold(t, |t, _| step.apply(t, d.v_tilde, beta)))
        .collect();
    TrajectoryEnsemble {
        trajectories,
        ..init.clone()
    }
}

/// ⟨𝒥²/2⟩ after each of 1..=pulses steps, with standard errors.
pub fn energy_history(
    init: &TrajectoryEnsemble,
    d: &DimensionlessParams,
    model: TrajectoryModel,
    pulses: u32,
    integrator: &PendulumIntegrator,
) -> Vec<(f64, f64)> {
    let mut current = init.clone();
    (0..pulses)
        .map(|_| {
            current = run_ensemble(&current, d, model, 1, integrator);
            current.energy_with_error()
        })
        .collect()
}

/// Weighted mean of 𝒥²/2 over the ensemble.
pub fn mean_scaled_energy(e: &TrajectoryEnsemble) -> f64 {
    e.energy_with_error().0
}
