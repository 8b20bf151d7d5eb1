//! Time-of-flight imaging and the ΔP_max analysis.
//!
//! A momentum distribution becomes a 1D spatial profile through x = p·t/M,
//! broadened by the initial cloud. ΔP_max is read off the smoothed
//! difference between profiles taken with and without the standing wave: it
//! is the distance between the outermost points where that difference
//! crosses a fixed threshold.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::ensemble::MomentumDistribution;
use crate::error::{invalid, Error, Result};
use crate::stats::pairwise_sum;
use crate::units::PhysicalParams;

/// Conversion between momentum (in ħk_L) and position after free expansion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TofGeometry {
    /// Time of flight (s).
    pub tof_duration: f64,
    /// Atomic mass (kg).
    pub mass: f64,
    /// Photon recoil ħk_L (kg m/s).
    pub recoil_momentum: f64,
}

impl TofGeometry {
    pub fn from_params(p: &PhysicalParams) -> Self {
        Self {
            tof_duration: p.tof_duration,
            mass: p.mass,
            recoil_momentum: p.recoil_momentum(),
        }
    }

    /// Distance travelled by an atom carrying one recoil momentum.
    pub fn meters_per_recoil(&self) -> f64 {
        self.recoil_momentum * self.tof_duration / self.mass
    }

    /// p = xM/t, in units of ħk_L.
    pub fn momentum_of(&self, x: f64) -> f64 {
        x * self.mass / self.tof_duration / self.recoil_momentum
    }

    pub fn position_of(&self, p_recoil: f64) -> f64 {
        p_recoil * self.meters_per_recoil()
    }
}

/// Atom density along the standing-wave axis after time of flight.
/// `densities` holds the probability per grid cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatialProfile {
    pub positions: Vec<f64>,
    pub densities: Vec<f64>,
    pub geometry: TofGeometry,
    #[serde(default)]
    pub params_hash: Option<String>,
}

impl SpatialProfile {
    pub fn spacing(&self) -> f64 {
        if self.positions.len() < 2 {
            return 0.0;
        }
        self.positions[1] - self.positions[0]
    }

    pub fn total(&self) -> f64 {
        pairwise_sum(&self.densities)
    }

    /// Positions converted back to momentum (ħk_L).
    pub fn momenta(&self) -> Vec<f64> {
        self.positions.iter().map(|&x| self.geometry.momentum_of(x)).collect()
    }

    /// Grid spacing in ħk_L.
    pub fn momentum_spacing(&self) -> f64 {
        self.geometry.momentum_of(self.spacing())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x_m,p_recoil,density")?;
        for (x, d) in self.positions.iter().zip(&self.densities) {
            writeln!(out, "{x:e},{},{d:e}", self.geometry.momentum_of(*x))?;
        }
        Ok(())
    }
}

/// Maps each momentum bin to x = p·t/M and convolves with the Gaussian
/// initial cloud of rms width `spatial_sigma`. The output grid is padded so
/// that no probability leaves it.
pub fn tof_project(m: &MomentumDistribution, spatial_sigma: f64, geometry: &TofGeometry) -> Result<SpatialProfile> {
    if !(geometry.tof_duration > 0.0) {
        return Err(invalid("tof_duration", "must be positive"));
    }
    if !(spatial_sigma >= 0.0) {
        return Err(invalid("spatial_sigma", "must be non-negative"));
    }
    let dx = geometry.position_of(m.bin_width);
    let kernel = gaussian_kernel(spatial_sigma / dx);
    let pad = kernel.len() / 2;
    let n = m.densities.len();
    let mut densities = vec![0.0; n + 2 * pad];
    for (i, &d) in m.densities.iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        for (k, &g) in kernel.iter().enumerate() {
            densities[i + k] += d * g;
        }
    }
    let x0 = geometry.position_of(m.centers[0]) - pad as f64 * dx;
    let positions = (0..densities.len()).map(|i| x0 + i as f64 * dx).collect();
    Ok(SpatialProfile {
        positions,
        densities,
        geometry: *geometry,
        params_hash: None,
    })
}

/// Normalised sampled Gaussian with rms width `sigma_cells` grid cells,
/// truncated at 6σ. Collapses to the identity for widths far below a cell.
fn gaussian_kernel(sigma_cells: f64) -> Vec<f64> {
    if sigma_cells < 1e-3 {
        return vec![1.0];
    }
    let half = (6.0 * sigma_cells).ceil() as i64;
    let raw: Vec<f64> = (-half..=half)
        .map(|j| (-(j * j) as f64 / (2.0 * sigma_cells * sigma_cells)).exp())
        .collect();
    let total = pairwise_sum(&raw);
    raw.into_iter().map(|g| g / total).collect()
}

/// Which curve is smoothed before the threshold search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmoothingOrder {
    /// Subtract first, then smooth the difference.
    DifferenceThenSmooth,
    /// Smooth both profiles, then subtract.
    SmoothThenDifference,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Threshold on the difference curve, as a fraction of the total atom
    /// number per ħk_L.
    pub threshold: f64,
    /// Moving-average span in ħk_L.
    pub smoothing_span: f64,
    pub smoothing_passes: u32,
    #[serde(default = "default_order")]
    pub order: SmoothingOrder,
}

fn default_order() -> SmoothingOrder {
    SmoothingOrder::DifferenceThenSmooth
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            threshold: 1e-4,
            smoothing_span: 4.0,
            smoothing_passes: 5,
            order: default_order(),
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0) {
            return Err(invalid("threshold", "must be positive"));
        }
        if !(self.smoothing_span > 0.0) {
            return Err(invalid("smoothing_span", "must be positive"));
        }
        if self.smoothing_passes == 0 {
            return Err(invalid("smoothing_passes", "must be at least 1"));
        }
        Ok(())
    }

    /// Odd window length in grid cells for a grid of spacing `cell` (in the
    /// same units as the span); an even count is reduced by one.
    pub fn span_cells(&self, cell: f64) -> Result<usize> {
        let raw = (self.smoothing_span / cell).round() as usize;
        if raw == 0 {
            return Err(invalid("smoothing_span", "must be at least one grid cell"));
        }
        Ok(if raw.is_multiple_of(2) { raw - 1 } else { raw })
    }
}

/// Centred moving average over `span` samples (odd), applied `passes`
/// times. Near the ends the window shrinks symmetrically to the samples
/// available, so the first and last points are left as they are.
pub fn moving_average(values: &[f64], span: usize, passes: u32) -> Vec<f64> {
    let half = span.saturating_sub(1) / 2;
    let n = values.len();
    let mut current = values.to_vec();
    for _ in 0..passes {
        if half == 0 {
            break;
        }
        let mut prefix = Vec::with_capacity(n + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        // compensated running sum keeps long windows exact for flat data
        let mut carry = 0.0;
        for &v in &current {
            let y = v - carry;
            let t = acc + y;
            carry = (t - acc) - y;
            acc = t;
            prefix.push(acc);
        }
        current = (0..n)
            .map(|i| {
                let h = half.min(i).min(n - 1 - i);
                if h == 0 {
                    return current[i];
                }
                let sum = if h <= 8 {
                    current[i - h..=i + h].iter().sum::<f64>()
                } else {
                    prefix[i + h + 1] - prefix[i - h]
                };
                sum / (2 * h + 1) as f64
            })
            .collect();
    }
    current
}

/// Smoothing with the configured span and pass count.
pub trait Smooth: Sized {
    fn smooth(&self, cfg: &AnalysisConfig) -> Result<Self>;
}

impl Smooth for SpatialProfile {
    fn smooth(&self, cfg: &AnalysisConfig) -> Result<Self> {
        let span = cfg.span_cells(self.momentum_spacing())?;
        Ok(Self {
            densities: moving_average(&self.densities, span, cfg.smoothing_passes),
            ..self.clone()
        })
    }
}

impl Smooth for MomentumDistribution {
    fn smooth(&self, cfg: &AnalysisConfig) -> Result<Self> {
        let span = cfg.span_cells(self.bin_width)?;
        Ok(Self {
            densities: moving_average(&self.densities, span, cfg.smoothing_passes),
            ..self.clone()
        })
    }
}

/// Everything the ΔP_max search saw, for export and plotting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DifferenceAnalysis {
    /// ΔP_max in ħk_L (0 when the threshold is never exceeded).
    pub delta_p_max: f64,
    /// Outermost threshold crossings in ħk_L, left and right.
    pub crossings: Option<(f64, f64)>,
    pub momenta: Vec<f64>,
    /// Raw difference per ħk_L.
    pub difference: Vec<f64>,
    /// Difference curve the threshold was applied to, per ħk_L.
    pub smoothed: Vec<f64>,
    pub config: AnalysisConfig,
}

impl DifferenceAnalysis {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "p_recoil,difference,smoothed")?;
        for ((p, d), s) in self.momenta.iter().zip(&self.difference).zip(&self.smoothed) {
            writeln!(out, "{p},{d:e},{s:e}")?;
        }
        Ok(())
    }

    /// Analysis metadata for the JSON sidecar.
    pub fn metadata(&self) -> serde_json::Value {
        serde_json::json!({
            "delta_p_max": self.delta_p_max,
            "crossings": self.crossings,
            "threshold": self.config.threshold,
            "smoothing_span": self.config.smoothing_span,
            "smoothing_passes": self.config.smoothing_passes,
            "order": self.config.order,
        })
    }
}

fn check_same_grid(a: &SpatialProfile, b: &SpatialProfile) -> Result<()> {
    if a.positions.len() != b.positions.len() {
        return Err(Error::GridMismatch(format!(
            "{} vs {} grid points",
            a.positions.len(),
            b.positions.len()
        )));
    }
    let scale = a.spacing().abs().max(f64::MIN_POSITIVE);
    if a.positions
        .iter()
        .zip(&b.positions)
        .any(|(x, y)| (x - y).abs() > 1e-9 * scale)
    {
        return Err(Error::GridMismatch("profile positions differ".into()));
    }
    if a.geometry != b.geometry {
        return Err(Error::GridMismatch(
            "profiles use different time-of-flight geometry".into(),
        ));
    }
    Ok(())
}

/// Smoothed SW − no-SW difference and its outermost threshold crossings.
pub fn analyze_difference(
    with_sw: &SpatialProfile,
    without_sw: &SpatialProfile,
    cfg: &AnalysisConfig,
) -> Result<DifferenceAnalysis> {
    cfg.validate()?;
    check_same_grid(with_sw, without_sw)?;
    let cell = with_sw.momentum_spacing();
    let span = cfg.span_cells(cell)?;
    let per_recoil = |v: &[f64]| v.iter().map(|d| d / cell).collect::<Vec<f64>>();
    let difference: Vec<f64> = with_sw
        .densities
        .iter()
        .zip(&without_sw.densities)
        .map(|(a, b)| (a - b) / cell)
        .collect();
    let smoothed = match cfg.order {
        SmoothingOrder::DifferenceThenSmooth => moving_average(&difference, span, cfg.smoothing_passes),
        SmoothingOrder::SmoothThenDifference => {
            let a = per_recoil(&moving_average(&with_sw.densities, span, cfg.smoothing_passes));
            let b = per_recoil(&moving_average(&without_sw.densities, span, cfg.smoothing_passes));
            a.iter().zip(&b).map(|(x, y)| x - y).collect()
        }
    };
    let momenta = with_sw.momenta();
    let crossings = outer_crossings(&momenta, &smoothed, cfg.threshold);
    Ok(DifferenceAnalysis {
        delta_p_max: crossings.map_or(0.0, |(l, r)| r - l),
        crossings,
        momenta,
        difference,
        smoothed,
        config: *cfg,
    })
}

/// ΔP_max in ħk_L.
pub fn delta_p_max(with_sw: &SpatialProfile, without_sw: &SpatialProfile, cfg: &AnalysisConfig) -> Result<f64> {
    Ok(analyze_difference(with_sw, without_sw, cfg)?.delta_p_max)
}

/// Outermost points where `y` falls through `threshold`, linearly
/// interpolated between grid points.
fn outer_crossings(x: &[f64], y: &[f64], threshold: f64) -> Option<(f64, f64)> {
    let first = y.iter().position(|&v| v >= threshold)?;
    let last = y.iter().rposition(|&v| v >= threshold)?;
    let interpolate = |inside: usize, outside: usize| {
        let (yi, yo) = (y[inside], y[outside]);
        x[inside] + (yi - threshold) / (yi - yo) * (x[outside] - x[inside])
    };
    let left = if first == 0 {
        x[0]
    } else {
        interpolate(first, first - 1)
    };
    let right = if last + 1 == y.len() {
        x[last]
    } else {
        interpolate(last, last + 1)
    };
    Some((left, right))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::Binning;

    fn geometry() -> TofGeometry {
        TofGeometry::from_params(&PhysicalParams::rb85())
    }

    fn profile_from(p_and_density: &[(f64, f64)], width: f64) -> SpatialProfile {
        let m = MomentumDistribution::from_samples(
            p_and_density,
            &Binning {
                width,
                half_range: 200.0,
            },
        )
        .unwrap();
        tof_project(&m, 0.0, &geometry()).unwrap()
    }

    #[test]
    fn one_recoil_travel_distance() {
        let g = geometry();
        assert!(
            (g.meters_per_recoil() - 5.9627e-5).abs() < 1e-8,
            "{}",
            g.meters_per_recoil()
        );
        assert!((g.momentum_of(g.position_of(37.0)) - 37.0).abs() < 1e-12);
    }

    #[test]
    fn point_source_becomes_cloud_gaussian() {
        let g = geometry();
        let m = MomentumDistribution::from_samples(
            &[(20.0, 1.0)],
            &Binning {
                width: 0.5,
                half_range: 40.0,
            },
        )
        .unwrap();
        let sigma = 100e-6;
        let prof = tof_project(&m, sigma, &g).unwrap();
        assert!((prof.total() - 1.0).abs() < 1e-12);
        let mean: f64 = prof.positions.iter().zip(&prof.densities).map(|(x, d)| x * d).sum();
        let var: f64 = prof
            .positions
            .iter()
            .zip(&prof.densities)
            .map(|(x, d)| (x - mean).powi(2) * d)
            .sum();
        assert!((mean - g.position_of(20.0)).abs() < 1e-9);
        assert!((var.sqrt() - sigma).abs() < 0.01 * sigma);
    }

    #[test]
    fn zero_sigma_is_a_rescaling() {
        let m = MomentumDistribution::from_samples(
            &[(3.0, 0.25), (-1.0, 0.75)],
            &Binning {
                width: 0.5,
                half_range: 10.0,
            },
        )
        .unwrap();
        let prof = tof_project(&m, 0.0, &geometry()).unwrap();
        assert_eq!(prof.densities, m.densities);
        for (p, c) in prof.momenta().iter().zip(&m.centers) {
            assert!((p - c).abs() < 1e-9);
        }
    }

    #[test]
    fn moving_average_fixtures() {
        let flat = vec![2.5; 50];
        assert_eq!(moving_average(&flat, 7, 5), flat);

        let mut delta = vec![0.0; 21];
        delta[10] = 1.0;
        let out = moving_average(&delta, 5, 1);
        for (i, v) in out.iter().enumerate() {
            let expect = if (8..=12).contains(&i) { 0.2 } else { 0.0 };
            assert!((v - expect).abs() < 1e-15);
        }

        let ramp: Vec<f64> = (0..40).map(|i| 0.3 * i as f64 - 2.0).collect();
        let out = moving_average(&ramp, 7, 1);
        for i in 0..40 {
            assert!((out[i] - ramp[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn moving_average_conserves_interior_mass() {
        let mut v = vec![0.0; 200];
        for (i, x) in v.iter_mut().enumerate().skip(60).take(80) {
            *x = ((i * 37 % 11) as f64).sin().abs();
        }
        let out = moving_average(&v, 9, 5);
        assert!((out.iter().sum::<f64>() - v.iter().sum::<f64>()).abs() < 1e-12);
    }

    #[test]
    fn span_cells_rounds_to_odd() {
        let cfg = AnalysisConfig::default();
        assert_eq!(cfg.span_cells(0.5).unwrap(), 7);
        assert_eq!(cfg.span_cells(1.0).unwrap(), 3);
        assert_eq!(
            AnalysisConfig {
                smoothing_span: 5.0,
                ..cfg
            }
            .span_cells(1.0)
            .unwrap(),
            5
        );
        assert!(cfg.span_cells(10.0).is_err());
    }

    #[test]
    fn identical_profiles_give_zero() {
        let a = profile_from(&[(0.0, 0.5), (10.0, 0.5)], 0.5);
        assert_eq!(delta_p_max(&a, &a, &AnalysisConfig::default()).unwrap(), 0.0);
    }

    #[test]
    fn box_difference_fixture() {
        let cfg = AnalysisConfig {
            smoothing_span: 0.5,
            smoothing_passes: 1,
            ..AnalysisConfig::default()
        };
        let w = 0.5;
        let level = 10.0 * cfg.threshold * w;
        let boxed: Vec<(f64, f64)> = (-199..=199).map(|k| (k as f64 * w, level)).collect();
        let with_sw = profile_from(&boxed, w);
        let without = profile_from(&[(0.0, 0.0)], w);
        let dp = delta_p_max(&with_sw, &without, &cfg).unwrap();
        assert!((dp - 200.0).abs() <= w, "{dp}");
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let a = profile_from(&[(0.0, 1.0)], 0.5);
        let b = profile_from(&[(0.0, 1.0)], 1.0);
        assert!(matches!(
            delta_p_max(&a, &b, &AnalysisConfig::default()),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn raising_the_difference_widens_the_crossings() {
        let cfg = AnalysisConfig::default();
        let w = 0.5;
        let shape = |scale: f64| -> Vec<(f64, f64)> {
            (-160..=160)
                .map(|k| (k as f64 * w, scale * 1e-3 * (-(k as f64 * w / 30.0).powi(2)).exp()))
                .collect()
        };
        let base = profile_from(&[(0.0, 0.0)], w);
        let mut last = 0.0;
        for scale in [0.5, 1.0, 2.0, 4.0] {
            let dp = delta_p_max(&profile_from(&shape(scale), w), &base, &cfg).unwrap();
            assert!(dp >= last);
            last = dp;
        }
        assert!(last > 0.0);
    }
}
