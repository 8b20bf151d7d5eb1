//! Exact quantum evolution of one quasimomentum manifold.
//!
//! A manifold with quasimomentum β is the ladder of momenta
//! p_n = (n + β)ħK, n ∈ [−n_max, n_max]. In scaled units 𝒥_n = (n + β)ε.
//! The pulse factor exp(−i/ε[𝒥²/2 − Ṽ cos θ]) is a tridiagonal matrix on
//! this ladder (diagonal (n+β)²ε/2, off-diagonal −φ_d/2); the free factor
//! is diagonal.

mod kick;
mod pulse;
pub mod tridiag;

use std::f64::consts::{PI, TAU};

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::units::{fractional, talbot_time, DimensionlessParams, PhysicalParams};

pub use kick::PhaseGrating;
pub use pulse::{ExactPulse, PulsePropagator, SplitOperatorPulse};

/// Sites at each edge of the ladder watched by the truncation guard.
pub const GUARD_SITES: usize = 4;
/// Largest population tolerated in the guard band (and largest norm loss).
pub const GUARD_POPULATION: f64 = 1e-8;
/// Default ladder half-width.
pub const DEFAULT_N_MAX: usize = 160;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PropagatorMethod {
    /// Diagonalise the tridiagonal pulse Hamiltonian once and exponentiate.
    TridiagonalExponential,
    /// Strang splitting on a θ grid with FFTs.
    SplitOperator,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulsePropagatorConfig {
    /// Sub-steps per pulse for the split-operator method.
    pub substeps_per_pulse: usize,
    pub method: PropagatorMethod,
    /// L² tolerance the split-operator result must meet; also the accepted
    /// norm drift of that method.
    pub convergence_tolerance: f64,
}

impl Default for PulsePropagatorConfig {
    fn default() -> Self {
        Self {
            substeps_per_pulse: 256,
            method: PropagatorMethod::TridiagonalExponential,
            convergence_tolerance: 1e-6,
        }
    }
}

impl PulsePropagatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.substeps_per_pulse == 0 {
            return Err(invalid("substeps_per_pulse", "must be at least 1"));
        }
        if !(self.convergence_tolerance > 0.0) {
            return Err(invalid("convergence_tolerance", "must be positive"));
        }
        Ok(())
    }
}

/// Amplitudes c_n on the ladder of one quasimomentum manifold.
#[derive(Clone, Debug, PartialEq)]
pub struct ManifoldState {
    beta: f64,
    n_max: usize,
    epsilon: f64,
    amplitudes: Vec<Complex64>,
}

impl ManifoldState {
    /// Momentum eigenstate p = (n0 + β)ħK.
    pub fn plane_wave(n0: i64, beta: f64, n_max: usize, epsilon: f64) -> Result<Self> {
        if n0.unsigned_abs() as usize > n_max {
            return Err(invalid("n0", format!("site {n0} outside ladder ±{n_max}")));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 2 * n_max + 1];
        amplitudes[(n0 + n_max as i64) as usize] = Complex64::new(1.0, 0.0);
        Ok(Self {
            beta: fractional(beta),
            n_max,
            epsilon,
            amplitudes,
        })
    }

    /// Builds a state from amplitudes indexed from n = −n_max; normalises them.
    pub fn from_amplitudes(beta: f64, epsilon: f64, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len().is_multiple_of(2) {
            return Err(invalid("amplitudes", "ladder length must be odd (2 n_max + 1)"));
        }
        let norm = amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(invalid("amplitudes", "state has zero norm"));
        }
        let n_max = amplitudes.len() / 2;
        Ok(Self {
            beta: fractional(beta),
            n_max,
            epsilon,
            amplitudes: amplitudes.into_iter().map(|c| c / norm).collect(),
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Ladder indices n in storage order.
    pub fn sites(&self) -> impl Iterator<Item = i64> {
        let n = self.n_max as i64;
        -n..=n
    }

    pub fn amplitude(&self, n: i64) -> Complex64 {
        self.amplitudes[(n + self.n_max as i64) as usize]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|c| c.norm_sqr()).collect()
    }

    /// Population in the guard band at both ends of the ladder.
    pub fn boundary_population(&self) -> f64 {
        boundary_population(&self.populations())
    }

    /// Fails when the ladder is too short to hold the state.
    pub fn check_truncation(&self) -> Result<()> {
        check_guard(&self.populations(), self.n_max)
    }

    /// Same state on a ladder of a different half-width. Shrinking fails if
    /// it would discard more than the guard population.
    pub fn with_n_max(&self, n_max: usize) -> Result<Self> {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 2 * n_max + 1];
        let mut lost = 0.0;
        for (n, c) in self.sites().zip(&self.amplitudes) {
            if n.unsigned_abs() as usize <= n_max {
                amplitudes[(n + n_max as i64) as usize] = *c;
            } else {
                lost += c.norm_sqr();
            }
        }
        if lost > GUARD_POPULATION {
            return Err(Error::Truncation {
                n_max,
                population: lost,
            });
        }
        Ok(Self {
            amplitudes,
            n_max,
            ..*self
        })
    }

    /// ⟨𝒥²/2⟩ = Σ |c_n|² ((n+β)ε)²/2.
    pub fn energy(&self) -> f64 {
        self.sites()
            .zip(&self.amplitudes)
            .map(|(n, c)| {
                let j = (n as f64 + self.beta) * self.epsilon;
                c.norm_sqr() * j * j / 2.0
            })
            .sum()
    }

    /// Debug dump: one row per ladder site.
    pub fn write_populations_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "n,p_recoil,population")?;
        for (n, c) in self.sites().zip(&self.amplitudes) {
            writeln!(out, "{n},{},{:e}", 2.0 * (n as f64 + self.beta), c.norm_sqr())?;
        }
        Ok(())
    }

    /// (p in units of ħk_L, probability) with p_n = 2(n + β).
    pub fn momentum_populations(&self) -> Vec<(f64, f64)> {
        self.sites()
            .zip(&self.amplitudes)
            .map(|(n, c)| (2.0 * (n as f64 + self.beta), c.norm_sqr()))
            .collect()
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }
}

pub(crate) fn boundary_population(pops: &[f64]) -> f64 {
    let g = GUARD_SITES.min(pops.len() / 2);
    pops[..g].iter().sum::<f64>() + pops[pops.len() - g..].iter().sum::<f64>()
}

fn check_guard(pops: &[f64], n_max: usize) -> Result<()> {
    let edge = boundary_population(pops);
    let lost = (1.0 - pops.iter().sum::<f64>()).max(0.0);
    let worst = edge.max(lost);
    if worst > GUARD_POPULATION {
        return Err(Error::Truncation {
            n_max,
            population: worst,
        });
    }
    Ok(())
}

/// Free evolution between pulses, as a diagonal phase on the ladder.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FreeEvolution {
    /// Rewound resonant form: exp(+i𝒥²/2ε − i4πLβ𝒥/ε).
    Resonant { resonance_order: u32 },
    /// Laboratory phases exp(−i p²τ/2Mħ) for a free duration
    /// τ = talbot_multiple·T_T + offset·t_p. The 2π multiples of the
    /// Talbot part are removed exactly before evaluating the phase.
    Duration { talbot_multiple: u32, offset: f64 },
}

impl FreeEvolution {
    /// Free flight for a pulse period `period` after a pulse of length t_p.
    pub fn for_period(period: f64, p: &PhysicalParams) -> Self {
        Self::lab_frame(period - p.pulse_duration, p)
    }

    /// δ-kick model: free flight for the full period.
    pub fn for_kicked_period(period: f64, p: &PhysicalParams) -> Self {
        Self::lab_frame(period, p)
    }

    fn lab_frame(duration: f64, p: &PhysicalParams) -> Self {
        let tt = talbot_time(p);
        let multiple = (duration / tt).round().max(0.0);
        FreeEvolution::Duration {
            talbot_multiple: multiple as u32,
            offset: (duration - multiple * tt) / p.pulse_duration,
        }
    }

    /// Phase accumulated by site n.
    pub fn phase(&self, n: i64, beta: f64, epsilon: f64) -> f64 {
        let k = n as f64 + beta;
        match *self {
            FreeEvolution::Resonant { resonance_order } => {
                k * k * epsilon / 2.0 - 4.0 * PI * resonance_order as f64 * beta * k
            }
            FreeEvolution::Duration {
                talbot_multiple,
                offset,
            } => {
                // (n+β)² 2πL ≡ 2πL(2nβ + β²) mod 2π
                let talbot = if talbot_multiple == 0 || beta == 0.0 {
                    0.0
                } else {
                    let lb = talbot_multiple as f64 * beta;
                    TAU * fractional(2.0 * n as f64 * lb + lb * beta)
                };
                -talbot - k * k * epsilon * offset / 2.0
            }
        }
    }

    pub fn phases(&self, n_max: usize, beta: f64, epsilon: f64) -> Vec<Complex64> {
        let n = n_max as i64;
        (-n..=n)
            .map(|site| Complex64::from_polar(1.0, self.phase(site, beta, epsilon)))
            .collect()
    }
}

fn apply_phases(amps: &mut [Complex64], phases: &[Complex64]) {
    for (a, p) in amps.iter_mut().zip(phases) {
        *a *= p;
    }
}

fn check_state(s: &ManifoldState, d: &DimensionlessParams) -> Result<()> {
    if !(d.epsilon > 0.0) {
        return Err(invalid("epsilon", "must be positive"));
    }
    if (s.beta - fractional(d.beta)).abs() > 1e-12 {
        return Err(invalid(
            "beta",
            format!(
                "state is on manifold β = {} but parameters carry β = {}",
                s.beta, d.beta
            ),
        ));
    }
    Ok(())
}

/// Evolves the state for one pulse (one unit of dimensionless time under
/// 𝒥²/2 − Ṽ cos θ).
pub fn apply_pulse(s: &ManifoldState, d: &DimensionlessParams, cfg: &PulsePropagatorConfig) -> Result<ManifoldState> {
    check_state(s, d)?;
    cfg.validate()?;
    let prop = PulsePropagator::new(s.beta, d.epsilon, d.kick_strength, s.n_max, cfg);
    let mut out = s.clone();
    out.epsilon = d.epsilon;
    prop.apply(out.amplitudes_mut());
    out.check_truncation()?;
    Ok(out)
}

/// Free evolution at resonance in the rewound (dimensionless) form.
pub fn apply_free(s: &ManifoldState, d: &DimensionlessParams) -> ManifoldState {
    let mut out = s.clone();
    let free = FreeEvolution::Resonant {
        resonance_order: d.resonance_order,
    };
    apply_phases(&mut out.amplitudes, &free.phases(s.n_max, s.beta, d.epsilon));
    out
}

/// One Floquet period at resonance: pulse, then free evolution.
pub fn floquet_step(s: &ManifoldState, d: &DimensionlessParams, cfg: &PulsePropagatorConfig) -> Result<ManifoldState> {
    Ok(apply_free(&apply_pulse(s, d, cfg)?, d))
}

/// One period T of arbitrary length: pulse, then free flight for T − t_p
/// with laboratory-frame phases.
pub fn floquet_step_general_period(
    s: &ManifoldState,
    d: &DimensionlessParams,
    period: f64,
    p: &PhysicalParams,
    cfg: &PulsePropagatorConfig,
) -> Result<ManifoldState> {
    if !(period > p.pulse_duration) {
        return Err(invalid(
            "pulse_period",
            format!(
                "period {period:e} s must exceed the pulse duration {:e} s",
                p.pulse_duration
            ),
        ));
    }
    let mut out = apply_pulse(s, d, cfg)?;
    let free = FreeEvolution::for_period(period, p);
    apply_phases(&mut out.amplitudes, &free.phases(out.n_max, out.beta, d.epsilon));
    Ok(out)
}

/// δ-kicked particle: phase grating exp(iφ_d cos θ), then free evolution
/// for exactly L·T_T.
pub fn delta_kick_step(s: &ManifoldState, d: &DimensionlessParams) -> Result<ManifoldState> {
    let mut out = s.clone();
    PhaseGrating::new(d.kick_strength).apply(out.amplitudes_mut());
    let free = FreeEvolution::Duration {
        talbot_multiple: d.resonance_order,
        offset: 0.0,
    };
    apply_phases(&mut out.amplitudes, &free.phases(out.n_max, out.beta, d.epsilon));
    out.check_truncation()?;
    Ok(out)
}

/// ⟨𝒥²/2⟩ of a manifold state.
pub fn energy(s: &ManifoldState) -> f64 {
    s.energy()
}

pub fn momentum_populations(s: &ManifoldState) -> Vec<(f64, f64)> {
    s.momentum_populations()
}

/// Which quantum model a run uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuantumModel {
    Full,
    DeltaKick,
}

/// A batch of states on the same manifold, stored as real and imaginary
/// parts with one state per column, so pulses become real matrix products.
#[derive(Clone, Debug)]
pub struct ManifoldBatch {
    pub beta: f64,
    pub n_max: usize,
    pub re: Array2<f64>,
    pub im: Array2<f64>,
}

impl ManifoldBatch {
    /// Plane waves at the given ladder sites.
    pub fn plane_waves(beta: f64, n_max: usize, sites: &[i64]) -> Result<Self> {
        let dim = 2 * n_max + 1;
        let mut re = Array2::zeros((dim, sites.len()));
        for (col, &n0) in sites.iter().enumerate() {
            if n0.unsigned_abs() as usize > n_max {
                return Err(invalid("n0", format!("site {n0} outside ladder ±{n_max}")));
            }
            re[[(n0 + n_max as i64) as usize, col]] = 1.0;
        }
        Ok(Self {
            beta: fractional(beta),
            n_max,
            im: Array2::zeros(re.dim()),
            re,
        })
    }

    pub fn len(&self) -> usize {
        self.re.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn pulse(&mut self, prop: &PulsePropagator) {
        match prop {
            PulsePropagator::Exact(exact) => exact.apply_batch(&mut self.re, &mut self.im),
            _ => self.for_each_column(|amps| prop.apply(amps)),
        }
    }

    pub fn kick(&mut self, grating: &PhaseGrating) {
        self.for_each_column(|amps| grating.apply(amps));
    }

    pub fn free(&mut self, phases: &[Complex64]) {
        for (i, ph) in phases.iter().enumerate() {
            let mut re = self.re.row_mut(i);
            let mut im = self.im.row_mut(i);
            for (a, b) in re.iter_mut().zip(im.iter_mut()) {
                let z = Complex64::new(*a, *b) * ph;
                *a = z.re;
                *b = z.im;
            }
        }
    }

    fn for_each_column(&mut self, mut f: impl FnMut(&mut [Complex64])) {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.re.nrows()];
        for col in 0..self.len() {
            for (i, z) in buf.iter_mut().enumerate() {
                *z = Complex64::new(self.re[[i, col]], self.im[[i, col]]);
            }
            f(&mut buf);
            for (i, z) in buf.iter().enumerate() {
                self.re[[i, col]] = z.re;
                self.im[[i, col]] = z.im;
            }
        }
    }

    /// Populations of one column.
    pub fn populations(&self, col: usize) -> Vec<f64> {
        self.re
            .column(col)
            .iter()
            .zip(self.im.column(col).iter())
            .map(|(a, b)| a * a + b * b)
            .collect()
    }

    pub fn check_truncation(&self) -> Result<()> {
        (0..self.len()).try_for_each(|c| check_guard(&self.populations(c), self.n_max))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::bessel_j;

    fn exact() -> PulsePropagatorConfig {
        PulsePropagatorConfig::default()
    }

    fn l2_distance(a: &ManifoldState, b: &ManifoldState) -> f64 {
        a.amplitudes()
            .iter()
            .zip(b.amplitudes())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn zero_potential_gives_kinetic_phases() {
        let beta = 0.3;
        let eps = 0.2;
        let d = DimensionlessParams::new(eps, 0.0, 1, 1).with_beta(beta);
        // guard band left empty so the truncation check passes
        let amps: Vec<Complex64> = (0..41)
            .map(|i| {
                if (GUARD_SITES..41 - GUARD_SITES).contains(&i) {
                    Complex64::new((i as f64 * 0.3).sin(), (i as f64 * 0.7).cos())
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        let padded = ManifoldState::from_amplitudes(beta, eps, amps).unwrap();
        for cfg in [
            exact(),
            PulsePropagatorConfig {
                method: PropagatorMethod::SplitOperator,
                ..exact()
            },
        ] {
            let out = apply_pulse(&padded, &d, &cfg).unwrap();
            for n in padded.sites() {
                let k = n as f64 + beta;
                let expected = padded.amplitude(n) * Complex64::from_polar(1.0, -k * k * eps / 2.0);
                assert!((out.amplitude(n) - expected).norm() < 1e-12, "{cfg:?} n={n}");
            }
        }
    }

    #[test]
    fn raman_nath_limit_approaches_bessel() {
        let phi = 2.0;
        let mut prev = f64::INFINITY;
        for eps in [0.02, 0.005, 1e-4] {
            let d = DimensionlessParams::new(eps, phi * eps, 1, 1);
            let s = ManifoldState::plane_wave(0, 0.0, 40, eps).unwrap();
            let out = apply_pulse(&s, &d, &exact()).unwrap();
            let err = (-20..=20)
                .map(|n: i64| (out.amplitude(n).norm_sqr() - bessel_j(n, phi).powi(2)).abs())
                .fold(0.0, f64::max);
            assert!(err < prev);
            prev = err;
        }
        assert!(prev < 1e-6, "{prev}");
    }

    #[test]
    fn split_operator_self_convergence() {
        let d = DimensionlessParams::new(0.1, 1.0, 1, 1);
        let s = ManifoldState::plane_wave(0, 0.0, 60, 0.1).unwrap();
        let tol = 1e-6;
        let run = |substeps| {
            let cfg = PulsePropagatorConfig {
                substeps_per_pulse: substeps,
                method: PropagatorMethod::SplitOperator,
                convergence_tolerance: tol,
            };
            apply_pulse(&s, &d, &cfg).unwrap()
        };
        let coarse = run(256);
        let fine = run(512);
        assert!(l2_distance(&coarse, &fine) < tol, "{}", l2_distance(&coarse, &fine));
        let reference = apply_pulse(&s, &d, &exact()).unwrap();
        assert!(l2_distance(&fine, &reference) < tol);
    }

    #[test]
    fn free_factor_keeps_populations() {
        let d = DimensionlessParams::new(0.3, 1.0, 2, 1).with_beta(0.17);
        let amps: Vec<Complex64> = (0..21).map(|i| Complex64::new(1.0 + i as f64, -0.5)).collect();
        let s = ManifoldState::from_amplitudes(0.17, 0.3, amps).unwrap();
        let out = apply_free(&s, &d);
        assert_eq!(s.populations().len(), out.populations().len());
        for (a, b) in s.populations().iter().zip(out.populations()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn free_factor_phase_at_beta_zero() {
        let eps = 0.1;
        let d = DimensionlessParams::new(eps, 1.0, 1, 1);
        let amps = vec![Complex64::new(1.0, 0.0); 11];
        let s = ManifoldState::from_amplitudes(0.0, eps, amps).unwrap();
        let out = apply_free(&s, &d);
        let c = s.amplitude(0);
        for n in -5i64..=5 {
            let expected = c * Complex64::from_polar(1.0, (n * n) as f64 * eps / 2.0);
            assert!((out.amplitude(n) - expected).norm() < 1e-15);
        }
    }

    #[test]
    fn general_period_reduces_to_resonant_step() {
        let p = PhysicalParams::rb85();
        let d = crate::units::derive_dimensionless(&p).unwrap();
        let s = ManifoldState::plane_wave(0, 0.0, 80, d.epsilon).unwrap();
        let a = floquet_step(&s, &d, &exact()).unwrap();
        let b = floquet_step_general_period(&s, &d, talbot_time(&p), &p, &exact()).unwrap();
        assert!(l2_distance(&a, &b) < 1e-12, "{}", l2_distance(&a, &b));
        assert!(floquet_step_general_period(&s, &d, p.pulse_duration, &p, &exact()).is_err());
    }

    #[test]
    fn general_period_matches_up_to_global_phase_off_zero_beta() {
        let p = PhysicalParams::rb85();
        let d = crate::units::derive_dimensionless(&p).unwrap().with_beta(0.31);
        let s = ManifoldState::plane_wave(2, 0.31, 60, d.epsilon).unwrap();
        let a = floquet_step(&s, &d, &exact()).unwrap();
        let b = floquet_step_general_period(&s, &d, talbot_time(&p), &p, &exact()).unwrap();
        let overlap: Complex64 = a
            .amplitudes()
            .iter()
            .zip(b.amplitudes())
            .map(|(x, y)| x.conj() * y)
            .sum();
        assert!((overlap.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn delta_kick_single_kick_is_bessel() {
        for phi in [0.0, 0.7, 3.0] {
            let d = DimensionlessParams::new(0.05, phi * 0.05, 1, 1);
            let s = ManifoldState::plane_wave(0, 0.0, 40, 0.05).unwrap();
            let out = delta_kick_step(&s, &d).unwrap();
            for n in -20i64..=20 {
                assert!((out.amplitude(n).norm_sqr() - bessel_j(n, phi).powi(2)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn energy_fixtures() {
        let s = ManifoldState::plane_wave(0, 0.0, 5, 0.1).unwrap();
        assert_eq!(energy(&s), 0.0);
        let s = ManifoldState::plane_wave(3, 0.0, 5, 0.1).unwrap();
        assert!((energy(&s) - 0.045).abs() < 1e-15);
        let mut amps = vec![Complex64::new(0.0, 0.0); 11];
        amps[4] = Complex64::new(1.0, 0.0);
        amps[6] = Complex64::new(0.0, 1.0);
        let s = ManifoldState::from_amplitudes(0.0, 0.1, amps).unwrap();
        assert!((energy(&s) - 0.01 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn momentum_population_fixtures() {
        let s = ManifoldState::plane_wave(2, 0.25, 4, 0.1).unwrap();
        let pops = momentum_populations(&s);
        assert_eq!(pops.len(), 9);
        let (p, w) = pops.iter().copied().find(|(_, w)| *w > 0.0).unwrap();
        assert_eq!((p, w), (4.5, 1.0));

        let mut amps = vec![Complex64::new(0.0, 0.0); 9];
        amps[3] = Complex64::new(1.0, 0.0);
        amps[5] = Complex64::new(1.0, 0.0);
        let s = ManifoldState::from_amplitudes(0.0, 0.1, amps).unwrap();
        let pops = momentum_populations(&s);
        assert!((pops[3].0 + 2.0).abs() < 1e-15 && (pops[3].1 - 0.5).abs() < 1e-15);
        assert!((pops[5].0 - 2.0).abs() < 1e-15 && (pops[5].1 - 0.5).abs() < 1e-15);
        assert!((pops.iter().map(|x| x.1).sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn truncation_guard_trips() {
        let d = DimensionlessParams::new(0.01, 0.01 * 30.0, 1, 1);
        let s = ManifoldState::plane_wave(0, 0.0, 10, 0.01).unwrap();
        assert!(matches!(apply_pulse(&s, &d, &exact()), Err(Error::Truncation { .. })));
        assert!(matches!(delta_kick_step(&s, &d), Err(Error::Truncation { .. })));
    }

    #[test]
    fn pulse_inverse_restores_state() {
        let d = DimensionlessParams::new(0.1, 1.0, 1, 1).with_beta(0.2);
        let s = ManifoldState::plane_wave(1, 0.2, 60, 0.1).unwrap();
        let prop = ExactPulse::new(0.2, 0.1, 10.0, 60);
        let mut amps = s.amplitudes().to_vec();
        prop.apply(&mut amps);
        prop.apply_inverse(&mut amps);
        let back = ManifoldState::from_amplitudes(0.2, 0.1, amps).unwrap();
        assert!(l2_distance(&s, &back) < 1e-10);
        let forward = apply_pulse(&s, &d, &exact()).unwrap();
        assert!(l2_distance(&s, &forward) > 0.1);
    }
}
