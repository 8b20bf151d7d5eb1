//! Physical constants, laboratory parameters and their conversion to the
//! dimensionless quantities that drive the dynamics.
//!
//! The standing-wave potential is written as `-(V_d/2) cos(K x)` with
//! `K = 2 k_L`, and a positive `V_d` is the depth of that potential. Red
//! detuned light produces a negative (attractive) light shift; [`dipole_depth`]
//! reports its magnitude as a positive depth.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// CODATA 2018 values (SI).
pub mod constants {
    pub const HBAR: f64 = 1.054_571_817e-34;
    pub const PLANCK: f64 = 6.626_070_15e-34;
    pub const BOLTZMANN: f64 = 1.380_649e-23;
    pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
    pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
    pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
    pub const BOHR_RADIUS: f64 = 5.291_772_109_03e-11;
    pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

    /// ⁸⁵Rb atomic mass in u.
    pub const RB85_MASS_U: f64 = 84.911_789_738;
    /// ⁸⁵Rb D₂ vacuum wavelength (m).
    pub const RB85_D2_WAVELENGTH: f64 = 780.241_209_686e-9;
}

use constants::*;

/// Laboratory-frame description of one experiment: atom, laser, pulse
/// train and atomic cloud. Fields omitted when deserialising take their
/// [`PhysicalParams::rb85`] values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicalParams {
    /// Atomic mass M (kg).
    pub mass: f64,
    /// Laser wavenumber k_L (rad/m); the standing wave has K = 2 k_L.
    pub laser_wavenumber: f64,
    /// Pulse duration t_p (s).
    pub pulse_duration: f64,
    /// Standing-wave depth V_d expressed as V_d/h (Hz).
    pub potential_depth_hz: f64,
    /// Number of pulses N. Zero is accepted and denotes the no-standing-wave
    /// reference sequence.
    pub pulse_count: u32,
    /// Pulse period T (s). `None` means exactly L·T_T.
    #[serde(default)]
    pub pulse_period: Option<f64>,
    /// Resonance order L.
    pub resonance_order: u32,
    /// Initial cloud temperature (K).
    pub temperature: f64,
    /// Initial cloud rms radius along the standing-wave axis (m).
    pub cloud_sigma: f64,
    /// Time of flight before imaging (s).
    pub tof_duration: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self::rb85()
    }
}

impl PhysicalParams {
    /// ⁸⁵Rb at 780 nm with the pulse-train parameters of the momentum
    /// distribution measurement (N = 6, t_p = 250 ns, V_d/h = 7.24 MHz, L = 1).
    pub fn rb85() -> Self {
        Self {
            mass: RB85_MASS_U * ATOMIC_MASS_UNIT,
            laser_wavenumber: 2.0 * PI / RB85_D2_WAVELENGTH,
            pulse_duration: 250e-9,
            potential_depth_hz: 7.24e6,
            pulse_count: 6,
            pulse_period: None,
            resonance_order: 1,
            temperature: 6.4e-6,
            cloud_sigma: 100e-6,
            tof_duration: 9.9e-3,
        }
    }

    pub fn with_pulse_duration(mut self, t_p: f64) -> Self {
        self.pulse_duration = t_p;
        self
    }

    pub fn with_pulses(mut self, count: u32) -> Self {
        self.pulse_count = count;
        self
    }

    pub fn with_depth_hz(mut self, depth_hz: f64) -> Self {
        self.potential_depth_hz = depth_hz;
        self
    }

    pub fn with_period(mut self, period: Option<f64>) -> Self {
        self.pulse_period = period;
        self
    }

    /// Standing-wave wavenumber K = 2 k_L.
    pub fn grating_wavenumber(&self) -> f64 {
        2.0 * self.laser_wavenumber
    }

    /// V_d in joules.
    pub fn potential_depth(&self) -> f64 {
        self.potential_depth_hz * PLANCK
    }

    /// Photon recoil momentum P_r = ħ k_L.
    pub fn recoil_momentum(&self) -> f64 {
        HBAR * self.laser_wavenumber
    }

    /// Pulse period, resolving the default of L·T_T.
    pub fn period(&self) -> f64 {
        self.pulse_period
            .unwrap_or_else(|| self.resonance_order as f64 * talbot_time(self))
    }

    /// Thermal rms momentum of the initial cloud in units of ħ k_L.
    pub fn thermal_momentum_width(&self) -> f64 {
        (self.mass * BOLTZMANN * self.temperature).sqrt() / self.recoil_momentum()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass", self.mass),
            ("laser_wavenumber", self.laser_wavenumber),
            ("pulse_duration", self.pulse_duration),
            ("temperature", self.temperature),
            ("tof_duration", self.tof_duration),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(invalid(name, format!("must be positive and finite, got {value}")));
            }
        }
        if !(self.potential_depth_hz >= 0.0 && self.potential_depth_hz.is_finite()) {
            return Err(invalid("potential_depth_hz", "must be non-negative"));
        }
        if !(self.cloud_sigma >= 0.0 && self.cloud_sigma.is_finite()) {
            return Err(invalid("cloud_sigma", "must be non-negative"));
        }
        if self.resonance_order == 0 {
            return Err(invalid("resonance_order", "L must be at least 1"));
        }
        let period = self.period();
        if !(period > self.pulse_duration) {
            return Err(invalid(
                "pulse_period",
                format!(
                    "period {period:e} s must exceed the pulse duration {:e} s",
                    self.pulse_duration
                ),
            ));
        }
        Ok(())
    }
}

/// The rescaled quantities driving all four dynamical models.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionlessParams {
    /// ε = ħK²t_p/M, the effective Planck constant.
    pub epsilon: f64,
    /// Ṽ = V_d t_p ε / 2ħ.
    pub v_tilde: f64,
    /// Quasimomentum β ∈ [0, 1).
    pub beta: f64,
    pub resonance_order: u32,
    pub pulse_count: u32,
    /// φ_d = V_d t_p / 2ħ = Ṽ/ε, the phase-grating depth of one pulse.
    pub kick_strength: f64,
}

impl DimensionlessParams {
    pub fn new(epsilon: f64, v_tilde: f64, resonance_order: u32, pulse_count: u32) -> Self {
        Self {
            epsilon,
            v_tilde,
            beta: 0.0,
            resonance_order,
            pulse_count,
            kick_strength: v_tilde / epsilon,
        }
    }

    /// Returns a copy on the quasimomentum manifold `beta` (wrapped into [0, 1)).
    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = fractional(beta);
        self
    }

    /// Classical free-flight duration between pulses in units of t_p:
    /// (L·T_T − t_p)/t_p = 4πL/ε − 1.
    pub fn classical_free_time(&self) -> f64 {
        4.0 * PI * self.resonance_order as f64 / self.epsilon - 1.0
    }
}

/// Fractional part in [0, 1), robust against `x - floor(x)` rounding up to 1.
pub fn fractional(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

pub fn derive_dimensionless(p: &PhysicalParams) -> Result<DimensionlessParams> {
    for (name, value) in [
        ("pulse_duration", p.pulse_duration),
        ("mass", p.mass),
        ("laser_wavenumber", p.laser_wavenumber),
    ] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(invalid(name, format!("must be positive, got {value}")));
        }
    }
    if p.resonance_order == 0 {
        return Err(invalid("resonance_order", "L must be at least 1"));
    }
    let k = p.grating_wavenumber();
    let epsilon = HBAR * k * k * p.pulse_duration / p.mass;
    let kick_strength = p.potential_depth() * p.pulse_duration / (2.0 * HBAR);
    Ok(DimensionlessParams {
        epsilon,
        v_tilde: kick_strength * epsilon,
        beta: 0.0,
        resonance_order: p.resonance_order,
        pulse_count: p.pulse_count,
        kick_strength,
    })
}

/// Talbot time T_T = 4πM/ħK².
pub fn talbot_time(p: &PhysicalParams) -> f64 {
    let k = p.grating_wavenumber();
    4.0 * PI * p.mass / (HBAR * k * k)
}

/// Scaling-law transform of a measured ΔP_max (in units of ħk_L).
///
/// Returns `(N·Ṽ, ΔP_max / sqrt(N · V_d/h))`. The ordinate is
/// ΔJ_max/sqrt(NṼ) with the constant sqrt(2/M) dropped and divided by
/// P_r/sqrt(h), so it carries units of sqrt(s) and does not depend on t_p.
pub fn scale_deltap(dp_max: f64, p: &PhysicalParams) -> Result<(f64, f64)> {
    if !(dp_max >= 0.0) {
        return Err(invalid("dp_max", format!("must be non-negative, got {dp_max}")));
    }
    let d = derive_dimensionless(p)?;
    let n_v = p.pulse_count as f64 * d.v_tilde;
    if !(n_v > 0.0) {
        return Err(Error::UndefinedOrdinate(n_v));
    }
    let ordinate = dp_max / (p.pulse_count as f64 * p.potential_depth_hz).sqrt();
    Ok((n_v, ordinate))
}

/// One dipole transition contributing to the light shift.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    /// Ground-state magnetic sublevel the transition starts from.
    pub m_f: i32,
    /// Dipole matrix element μ (C·m).
    pub dipole: f64,
    /// Laser detuning Δ = ω_L − ω_atom (rad/s). Negative is red.
    pub detuning: f64,
}

/// The line data needed to evaluate the light shift of the ground state.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomLineData {
    pub transitions: Vec<Transition>,
    /// Intensity of the incoming beam I₀ (W/m²).
    pub intensity: f64,
    /// Retro-reflected over incoming power, r ∈ [0, 1].
    pub retro_power_ratio: f64,
}

/// On-disk schema of an atom/laser data file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AtomLineFile {
    pub schema_version: u32,
    pub atom: String,
    #[serde(default)]
    pub line: String,
    pub mass_u: f64,
    pub wavelength_m: f64,
    pub laser: LaserSpec,
    pub transitions: Vec<TransitionSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LaserSpec {
    #[serde(default)]
    pub description: String,
    pub intensity_w_m2: f64,
    pub retro_power_ratio: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransitionSpec {
    pub m_f: i32,
    #[serde(default)]
    pub excited_f: Option<i32>,
    /// Dipole matrix element in units of e·a₀.
    pub dipole_ea0: f64,
    /// Detuning in Hz (laser minus atomic frequency).
    pub detuning_hz: f64,
}

const RB85_D2_JSON: &str = include_str!("../data/rb85_d2.json");

impl AtomLineFile {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// The ⁸⁵Rb D₂ table shipped with the crate.
    pub fn rb85_d2() -> Self {
        serde_json::from_str(RB85_D2_JSON).expect("bundled rb85_d2.json is valid")
    }

    pub fn line_data(&self) -> AtomLineData {
        let ea0 = ELEMENTARY_CHARGE * BOHR_RADIUS;
        AtomLineData {
            transitions: self
                .transitions
                .iter()
                .map(|t| Transition {
                    m_f: t.m_f,
                    dipole: t.dipole_ea0 * ea0,
                    detuning: 2.0 * PI * t.detuning_hz,
                })
                .collect(),
            intensity: self.laser.intensity_w_m2,
            retro_power_ratio: self.laser.retro_power_ratio,
        }
    }

    pub fn mass(&self) -> f64 {
        self.mass_u * ATOMIC_MASS_UNIT
    }
}

impl AtomLineData {
    fn validate(&self) -> Result<()> {
        if self.transitions.is_empty() {
            return Err(invalid("transitions", "at least one transition is required"));
        }
        if !(0.0..=1.0).contains(&self.retro_power_ratio) {
            return Err(invalid(
                "retro_power_ratio",
                format!("must lie in [0, 1], got {}", self.retro_power_ratio),
            ));
        }
        if !(self.intensity >= 0.0) {
            return Err(invalid("intensity", "must be non-negative"));
        }
        if let Some(t) = self.transitions.iter().find(|t| t.detuning == 0.0) {
            return Err(Error::Singular(format!(
                "zero detuning on an m_F = {} transition",
                t.m_f
            )));
        }
        Ok(())
    }

    fn intensity_contrast(&self) -> f64 {
        // (1 + √r)² − (1 − √r)²
        4.0 * self.retro_power_ratio.sqrt()
    }
}

/// Light shift per unit intensity, U/I = Σ μ²/Δ / (2ε₀cħ), for one m_F.
fn shift_per_intensity<'a>(transitions: impl Iterator<Item = &'a Transition>) -> f64 {
    let sum: f64 = transitions.map(|t| t.dipole * t.dipole / t.detuning).sum();
    sum / (2.0 * VACUUM_PERMITTIVITY * SPEED_OF_LIGHT * HBAR)
}

/// Standing-wave depth per ground-state sublevel, sorted by m_F.
pub fn depth_per_sublevel(line: &AtomLineData) -> Result<Vec<(i32, f64)>> {
    line.validate()?;
    let mut sublevels: Vec<i32> = line.transitions.iter().map(|t| t.m_f).collect();
    sublevels.sort_unstable();
    sublevels.dedup();
    let scale = line.intensity * line.intensity_contrast();
    Ok(sublevels
        .into_iter()
        .map(|m| {
            let u = shift_per_intensity(line.transitions.iter().filter(|t| t.m_f == m));
            // antinode minus node, sign flipped so red detuning is a positive depth
            (m, -u * scale)
        })
        .collect())
}

/// Depth V_d (J) of the standing-wave potential, averaged over m_F.
///
/// The light shift is evaluated at the antinode intensity I₀(1+√r)² and the
/// node intensity I₀(1−√r)²; V_d is minus their difference.
pub fn dipole_depth(line: &AtomLineData) -> Result<f64> {
    let per = depth_per_sublevel(line)?;
    log::debug!("per-m_F depths (J): {per:?}");
    Ok(per.iter().map(|(_, v)| v).sum::<f64>() / per.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn epsilon_at_two_microseconds() {
        let p = PhysicalParams::rb85().with_pulse_duration(2e-6);
        let d = derive_dimensionless(&p).unwrap();
        assert!((d.epsilon - 0.39).abs() < 0.005, "{}", d.epsilon);
    }

    #[test]
    fn epsilon_at_250_ns() {
        let d = derive_dimensionless(&PhysicalParams::rb85()).unwrap();
        assert!((d.epsilon - 0.0485).abs() < 2e-4, "{}", d.epsilon);
        let long = derive_dimensionless(&PhysicalParams::rb85().with_pulse_duration(2e-6)).unwrap();
        assert_relative_eq!(d.epsilon, long.epsilon * 0.125, max_relative = 1e-14);
    }

    #[test]
    fn zero_depth_gives_zero_kick() {
        for t_p in [50e-9, 1e-6, 4e-6] {
            let p = PhysicalParams::rb85().with_depth_hz(0.0).with_pulse_duration(t_p);
            let d = derive_dimensionless(&p).unwrap();
            assert_eq!(d.v_tilde, 0.0);
            assert_eq!(d.kick_strength, 0.0);
        }
    }

    #[test]
    fn rejects_non_positive_inputs() {
        let mut p = PhysicalParams::rb85();
        p.pulse_duration = 0.0;
        assert!(derive_dimensionless(&p).is_err());
        let mut p = PhysicalParams::rb85();
        p.mass = -1.0;
        assert!(derive_dimensionless(&p).is_err());
        let mut p = PhysicalParams::rb85();
        p.laser_wavenumber = 0.0;
        assert!(derive_dimensionless(&p).is_err());
    }

    #[test]
    fn pulse_must_fit_in_period() {
        let p = PhysicalParams::rb85().with_period(Some(200e-9));
        assert!(p.validate().is_err());
        assert!(PhysicalParams::rb85().validate().is_ok());
    }

    #[test]
    fn talbot_time_rb85() {
        let tt = talbot_time(&PhysicalParams::rb85());
        assert!((tt / 64.8e-6 - 1.0).abs() < 0.005, "{tt}");
    }

    #[test]
    fn talbot_time_quarters_when_k_doubles() {
        let p = PhysicalParams::rb85();
        let mut q = p.clone();
        q.laser_wavenumber *= 2.0;
        assert_relative_eq!(talbot_time(&q), talbot_time(&p) / 4.0, max_relative = 1e-15);
        let k = p.grating_wavenumber();
        assert_relative_eq!(talbot_time(&p) * HBAR * k * k / p.mass, 4.0 * PI, max_relative = 1e-15);
    }

    fn single_line(r: f64, detuning: f64) -> AtomLineData {
        AtomLineData {
            transitions: vec![Transition {
                m_f: 0,
                dipole: 3e-29,
                detuning,
            }],
            intensity: 1e4,
            retro_power_ratio: r,
        }
    }

    #[test]
    fn perfect_retro_single_transition() {
        let line = single_line(1.0, -2.0 * PI * 3e9);
        let mu: f64 = 3e-29;
        let expected = -4.0 * 1e4 * mu * mu / (2.0 * VACUUM_PERMITTIVITY * SPEED_OF_LIGHT * HBAR * (-2.0 * PI * 3e9));
        assert_relative_eq!(dipole_depth(&line).unwrap(), expected, max_relative = 1e-14);
        assert!(expected > 0.0);
    }

    #[test]
    fn no_retro_beam_no_depth() {
        assert_eq!(dipole_depth(&single_line(0.0, -1e9)).unwrap(), 0.0);
    }

    #[test]
    fn zero_detuning_is_singular() {
        assert!(matches!(dipole_depth(&single_line(1.0, 0.0)), Err(Error::Singular(_))));
        assert!(dipole_depth(&single_line(1.5, 1e9)).is_err());
    }

    #[test]
    fn bundled_rb85_depth_matches_calibration() {
        let file = AtomLineFile::rb85_d2();
        let vd = dipole_depth(&file.line_data()).unwrap();
        assert!((vd / PLANCK / 7.24e6 - 1.0).abs() < 1e-6, "{}", vd / PLANCK);
        let per = depth_per_sublevel(&file.line_data()).unwrap();
        assert_eq!(per.len(), 5);
        let max = per.iter().map(|p| p.1).fold(f64::MIN, f64::max);
        let min = per.iter().map(|p| p.1).fold(f64::MAX, f64::min);
        assert!((max - min) / vd < 0.01);
        assert_relative_eq!(file.mass(), PhysicalParams::rb85().mass, max_relative = 1e-15);
    }

    #[test]
    fn zero_deltap_scales_to_zero() {
        let (x, y) = scale_deltap(0.0, &PhysicalParams::rb85()).unwrap();
        assert!(x > 0.0);
        assert_eq!(y, 0.0);
        let flat = PhysicalParams::rb85().with_depth_hz(0.0);
        assert!(matches!(scale_deltap(10.0, &flat), Err(Error::UndefinedOrdinate(_))));
    }

    #[test]
    fn scaled_ordinate_matches_the_momentum_chain() {
        // ΔJ_max/sqrt(NṼ), drop sqrt(2/M), divide by P_r/sqrt(h).
        let p = PhysicalParams::rb85()
            .with_pulse_duration(430e-9)
            .with_pulses(10)
            .with_depth_hz(5.89e6);
        let dp = 202.0;
        let d = derive_dimensionless(&p).unwrap();
        let dj = dp * p.recoil_momentum() * p.grating_wavenumber() * p.pulse_duration / p.mass;
        let n_v = p.pulse_count as f64 * d.v_tilde;
        let chain = dj / n_v.sqrt() / (2.0 / p.mass).sqrt() / (p.recoil_momentum() / PLANCK.sqrt());
        let (x, y) = scale_deltap(dp, &p).unwrap();
        assert_relative_eq!(x, n_v, max_relative = 1e-15);
        assert_relative_eq!(y, chain, max_relative = 1e-12);
    }

    #[test]
    fn fig5_series_abscissae() {
        // equal NṼ at equal N·V_d·t_p²: the three inset series share an NṼ range
        for (n, vd) in [(10u32, 18.5e6), (50, 3.7e6), (100, 0.62e6)] {
            let p = PhysicalParams::rb85()
                .with_pulses(n)
                .with_depth_hz(vd)
                .with_pulse_duration(300e-9);
            let (x, _) = scale_deltap(1.0, &p).unwrap();
            let d = derive_dimensionless(&p).unwrap();
            assert_relative_eq!(x, n as f64 * d.v_tilde, max_relative = 1e-15);
        }
    }

    proptest! {
        #[test]
        fn pulse_duration_scaling(a in 0.1f64..10.0, t_p in 20e-9f64..2e-6) {
            let p = PhysicalParams::rb85().with_pulse_duration(t_p);
            let q = p.clone().with_pulse_duration(a * t_p);
            let d = derive_dimensionless(&p).unwrap();
            let e = derive_dimensionless(&q).unwrap();
            prop_assert!((e.epsilon / (a * d.epsilon) - 1.0).abs() < 1e-12);
            prop_assert!((e.v_tilde / (a * a * d.v_tilde) - 1.0).abs() < 1e-12);
            prop_assert!((e.kick_strength / (a * d.kick_strength) - 1.0).abs() < 1e-12);
            prop_assert!((e.kick_strength - e.v_tilde / e.epsilon).abs() <= 1e-12 * e.kick_strength);
        }

        #[test]
        fn depth_linear_in_intensity_and_odd_in_detuning(
            scale in 0.1f64..10.0,
            det in 1e8f64..1e10,
            r in 0.01f64..1.0,
        ) {
            let base = AtomLineData {
                transitions: vec![
                    Transition { m_f: 0, dipole: 2e-29, detuning: -2.0 * PI * det },
                    Transition { m_f: 0, dipole: 1e-29, detuning: -2.0 * PI * det * 1.02 },
                ],
                intensity: 5e3,
                retro_power_ratio: r,
            };
            let v = dipole_depth(&base).unwrap();
            prop_assert!(v > 0.0);
            let mut brighter = base.clone();
            brighter.intensity *= scale;
            prop_assert!((dipole_depth(&brighter).unwrap() / (scale * v) - 1.0).abs() < 1e-12);
            let mut blue = base.clone();
            for t in &mut blue.transitions { t.detuning = -t.detuning; }
            prop_assert!((dipole_depth(&blue).unwrap() + v).abs() < 1e-12 * v);
        }

        #[test]
        fn ordinate_independent_of_t_p_at_fixed_nv(a in 0.3f64..3.0, dp in 0.0f64..400.0) {
            // t_p → a t_p with V_d → V_d/a² keeps NṼ; equal universal value
            // means equal ΔJ_max, i.e. ΔP_max → ΔP_max/a.
            let p = PhysicalParams::rb85().with_pulse_duration(400e-9).with_pulses(10).with_depth_hz(5e6);
            let q = p.clone().with_pulse_duration(a * 400e-9).with_depth_hz(5e6 / (a * a));
            let (x1, y1) = scale_deltap(dp, &p).unwrap();
            let (x2, y2) = scale_deltap(dp / a, &q).unwrap();
            prop_assert!((x1 / x2 - 1.0).abs() < 1e-12);
            prop_assert!((y1 - y2).abs() <= 1e-12 * y1.abs().max(1e-300));
        }
    }
}
