use std::f64::consts::TAU;
use std::sync::Arc;

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::tridiag::symmetric_tridiagonal_eigen;
use super::{PropagatorMethod, PulsePropagatorConfig};

/// Pulse propagator exp(−i[(n+β)²ε/2 − φ_d cos θ]) on one ladder.
pub enum PulsePropagator {
    Exact(ExactPulse),
    Split(SplitOperatorPulse),
}

impl PulsePropagator {
    pub fn new(beta: f64, epsilon: f64, kick_strength: f64, n_max: usize, cfg: &PulsePropagatorConfig) -> Self {
        match cfg.method {
            PropagatorMethod::TridiagonalExponential => {
                PulsePropagator::Exact(ExactPulse::new(beta, epsilon, kick_strength, n_max))
            }
            PropagatorMethod::SplitOperator => PulsePropagator::Split(SplitOperatorPulse::new(
                beta,
                epsilon,
                kick_strength,
                n_max,
                cfg.substeps_per_pulse,
            )),
        }
    }

    pub fn apply(&self, amps: &mut [Complex64]) {
        match self {
            PulsePropagator::Exact(p) => p.apply(amps),
            PulsePropagator::Split(p) => p.apply(amps),
        }
    }
}

/// Pulse propagator from the eigen-decomposition of the tridiagonal
/// Hamiltonian: U = V diag(e^{−iλ}) Vᵀ.
pub struct ExactPulse {
    n_max: usize,
    /// One eigenvector per row.
    vectors: Array2<f64>,
    phases: Vec<Complex64>,
}

impl ExactPulse {
    pub fn new(beta: f64, epsilon: f64, kick_strength: f64, n_max: usize) -> Self {
        let n = n_max as i64;
        let diag: Vec<f64> = (-n..=n)
            .map(|site| (site as f64 + beta).powi(2) * epsilon / 2.0)
            .collect();
        let off = vec![-kick_strength / 2.0; diag.len() - 1];
        let eig = symmetric_tridiagonal_eigen(&diag, &off);
        let dim = eig.dim;
        Self {
            n_max,
            vectors: Array2::from_shape_vec((dim, dim), eig.vectors).expect("square eigenvector matrix"),
            phases: eig.values.iter().map(|&l| Complex64::from_polar(1.0, -l)).collect(),
        }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn apply(&self, amps: &mut [Complex64]) {
        self.apply_with(amps, false)
    }

    /// Applies U† (the conjugate propagator).
    pub fn apply_inverse(&self, amps: &mut [Complex64]) {
        self.apply_with(amps, true)
    }

    fn apply_with(&self, amps: &mut [Complex64], inverse: bool) {
        let dim = self.vectors.nrows();
        assert_eq!(amps.len(), dim, "state ladder does not match propagator");
        let mut re = Array2::from_shape_fn((dim, 1), |(i, _)| amps[i].re);
        let mut im = Array2::from_shape_fn((dim, 1), |(i, _)| amps[i].im);
        self.apply_batch_with(&mut re, &mut im, inverse);
        for (i, a) in amps.iter_mut().enumerate() {
            *a = Complex64::new(re[[i, 0]], im[[i, 0]]);
        }
    }

    /// Applies U to every column of (re + i·im).
    pub fn apply_batch(&self, re: &mut Array2<f64>, im: &mut Array2<f64>) {
        self.apply_batch_with(re, im, false)
    }

    fn apply_batch_with(&self, re: &mut Array2<f64>, im: &mut Array2<f64>, inverse: bool) {
        let mut c_re = self.vectors.dot(&*re);
        let mut c_im = self.vectors.dot(&*im);
        for (k, ph) in self.phases.iter().enumerate() {
            let ph = if inverse { ph.conj() } else { *ph };
            let mut row_re = c_re.row_mut(k);
            let mut row_im = c_im.row_mut(k);
            for (a, b) in row_re.iter_mut().zip(row_im.iter_mut()) {
                let z = Complex64::new(*a, *b) * ph;
                *a = z.re;
                *b = z.im;
            }
        }
        let vt: ArrayView2<f64> = self.vectors.t();
        *re = vt.dot(&c_re);
        *im = vt.dot(&c_im);
    }
}

/// Split-operator pulse on a periodic θ grid: each substep is a fourth-order
/// triple-jump composition of Strang steps. The ladder is embedded in an FFT
/// box at least twice its length; anything scattered past ±n_max is dropped
/// and shows up as norm loss in the truncation guard.
pub struct SplitOperatorPulse {
    n_max: usize,
    size: usize,
    /// Kinetic factor tables, indexed by `kinetic_sequence`.
    kinetic_tables: Vec<Vec<Complex64>>,
    /// Potential factor tables, indexed by `potential_sequence`.
    potential_tables: Vec<Vec<Complex64>>,
    kinetic_sequence: Vec<usize>,
    potential_sequence: Vec<usize>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl SplitOperatorPulse {
    pub fn new(beta: f64, epsilon: f64, kick_strength: f64, n_max: usize, substeps: usize) -> Self {
        let size = (4 * n_max + 2).next_power_of_two();
        let dt = 1.0 / substeps.max(1) as f64;
        let c = 2f64.cbrt();
        let w1 = 1.0 / (2.0 - c);
        let weights = [w1, -c * w1, w1];

        // K(c₀) V(d₀) K(c₁) V(d₁) … K(c_m) with adjacent half-kinetic steps merged
        let mut kinetic_times = vec![0.0];
        let mut potential_times = Vec::new();
        for _ in 0..substeps.max(1) {
            for w in weights {
                *kinetic_times.last_mut().unwrap() += w * dt / 2.0;
                potential_times.push(w * dt);
                kinetic_times.push(w * dt / 2.0);
            }
        }
        let (kinetic_keys, kinetic_sequence) = dedup_times(&kinetic_times);
        let (potential_keys, potential_sequence) = dedup_times(&potential_times);

        let signed = |i: usize| if i < size / 2 { i as f64 } else { i as f64 - size as f64 };
        let kinetic_tables = kinetic_keys
            .iter()
            .map(|&t| {
                (0..size)
                    .map(|i| {
                        let k = signed(i) + beta;
                        Complex64::from_polar(1.0, -k * k * epsilon / 2.0 * t)
                    })
                    .collect()
            })
            .collect();
        let potential_tables = potential_keys
            .iter()
            .map(|&t| {
                (0..size)
                    .map(|j| {
                        let theta = TAU * j as f64 / size as f64;
                        Complex64::from_polar(1.0, kick_strength * theta.cos() * t)
                    })
                    .collect()
            })
            .collect();
        let mut planner = FftPlanner::new();
        Self {
            n_max,
            size,
            kinetic_tables,
            potential_tables,
            kinetic_sequence,
            potential_sequence,
            forward: planner.plan_fft_forward(size),
            inverse: planner.plan_fft_inverse(size),
        }
    }

    pub fn apply(&self, amps: &mut [Complex64]) {
        let dim = 2 * self.n_max + 1;
        assert_eq!(amps.len(), dim, "state ladder does not match propagator");
        let n = self.n_max as i64;
        let mut buf = vec![Complex64::new(0.0, 0.0); self.size];
        for (site, a) in (-n..=n).zip(amps.iter()) {
            buf[site.rem_euclid(self.size as i64) as usize] = *a;
        }
        let scale = 1.0 / self.size as f64;
        for (&k, &v) in self.kinetic_sequence.iter().zip(&self.potential_sequence) {
            mul(&mut buf, &self.kinetic_tables[k]);
            // c_n → ψ(θ_j) = Σ c_n e^{inθ_j}
            self.inverse.process(&mut buf);
            mul(&mut buf, &self.potential_tables[v]);
            self.forward.process(&mut buf);
            for z in buf.iter_mut() {
                *z *= scale;
            }
        }
        mul(&mut buf, &self.kinetic_tables[*self.kinetic_sequence.last().unwrap()]);
        for (site, a) in (-n..=n).zip(amps.iter_mut()) {
            *a = buf[site.rem_euclid(self.size as i64) as usize];
        }
    }
}

/// Distinct values (to a relative 1e-14) and, per input, the index of its value.
fn dedup_times(times: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut keys: Vec<f64> = Vec::new();
    let sequence = times
        .iter()
        .map(
            |&t| match keys.iter().position(|&k| (k - t).abs() <= 1e-14 * t.abs().max(1e-300)) {
                Some(i) => i,
                None => {
                    keys.push(t);
                    keys.len() - 1
                }
            },
        )
        .collect();
    (keys, sequence)
}

fn mul(buf: &mut [Complex64], factors: &[Complex64]) {
    for (z, f) in buf.iter_mut().zip(factors) {
        *z *= f;
    }
}
