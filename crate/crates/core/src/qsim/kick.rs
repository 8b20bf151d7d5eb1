use num_complex::Complex64;

use crate::special::{bessel_cutoff, bessel_j_sequence};

/// Instantaneous phase grating exp(iφ_d cos θ), applied on the ladder as
/// c'_n = Σ_k i^k J_k(φ_d) c_{n−k}.
#[derive(Clone, Debug)]
pub struct PhaseGrating {
    /// a_k = i^k J_k(φ_d) for k = 0..=cutoff; a_{−k} = a_k.
    coefficients: Vec<Complex64>,
}

impl PhaseGrating {
    pub fn new(kick_strength: f64) -> Self {
        let cutoff = bessel_cutoff(kick_strength);
        let j = bessel_j_sequence(cutoff, kick_strength);
        let coefficients = j
            .iter()
            .enumerate()
            .map(|(k, &jk)| match k % 4 {
                0 => Complex64::new(jk, 0.0),
                1 => Complex64::new(0.0, jk),
                2 => Complex64::new(-jk, 0.0),
                _ => Complex64::new(0.0, -jk),
            })
            .collect();
        Self { coefficients }
    }

    pub fn reach(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn apply(&self, amps: &mut [Complex64]) {
        let dim = amps.len() as i64;
        let reach = self.reach() as i64;
        let src = amps.to_vec();
        for (n, out) in amps.iter_mut().enumerate() {
            let n = n as i64;
            let lo = (n - reach).max(0);
            let hi = (n + reach).min(dim - 1);
            let mut acc = Complex64::new(0.0, 0.0);
            for m in lo..=hi {
                // k = n - m
                let k = (n - m).unsigned_abs() as usize;
                acc += self.coefficients[k] * src[m as usize];
            }
            *out = acc;
        }
    }
}
