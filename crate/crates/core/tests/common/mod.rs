//! Independent reference implementations used only by the integration tests.
#![allow(dead_code)]

pub mod elliptic {
    //! Jacobi amplitude via the arithmetic-geometric mean and incomplete
    //! elliptic integrals via Carlson's R_F; enough to write the pendulum
    //! flow in closed form.
    use std::f64::consts::{FRAC_PI_2, PI};

    /// Carlson symmetric integral R_F(x, y, z) by duplication.
    pub fn carlson_rf(x: f64, y: f64, z: f64) -> f64 {
        let (mut x, mut y, mut z) = (x, y, z);
        for _ in 0..100 {
            let lambda = x.sqrt() * y.sqrt() + y.sqrt() * z.sqrt() + z.sqrt() * x.sqrt();
            x = (x + lambda) / 4.0;
            y = (y + lambda) / 4.0;
            z = (z + lambda) / 4.0;
            let mean = (x + y + z) / 3.0;
            let dx = 1.0 - x / mean;
            let dy = 1.0 - y / mean;
            let dz = 1.0 - z / mean;
            if dx.abs().max(dy.abs()).max(dz.abs()) < 1e-4 {
                let e2 = dx * dy - dz * dz;
                let e3 = dx * dy * dz;
                return (1.0 - e2 / 10.0 + e3 / 14.0 + e2 * e2 / 24.0 - 3.0 * e2 * e3 / 44.0) / mean.sqrt();
            }
        }
        panic!("R_F did not converge");
    }

    /// Complete integral K(m).
    pub fn complete_k(m: f64) -> f64 {
        carlson_rf(0.0, 1.0 - m, 1.0)
    }

    /// Incomplete integral F(φ | m) for any real φ (quasi-periodic extension).
    pub fn incomplete_f(phi: f64, m: f64) -> f64 {
        let j = (phi / PI).round();
        let r = phi - j * PI;
        debug_assert!(r.abs() <= FRAC_PI_2 + 1e-15);
        let s = r.sin();
        let c = r.cos();
        2.0 * j * complete_k(m) + s * carlson_rf(c * c, 1.0 - m * s * s, 1.0)
    }

    /// Jacobi amplitude am(u | m), 0 ≤ m < 1, by the descending AGM scheme.
    pub fn amplitude(u: f64, m: f64) -> f64 {
        let mut a = vec![1.0_f64];
        let mut c = vec![m.sqrt()];
        let mut b = (1.0 - m).sqrt();
        loop {
            let an = *a.last().unwrap();
            let cn = (an - b) / 2.0;
            let next_a = (an + b) / 2.0;
            b = (an * b).sqrt();
            a.push(next_a);
            c.push(cn);
            if cn.abs() < 1e-16 * next_a || a.len() > 60 {
                break;
            }
        }
        let n = a.len() - 1;
        let mut phi = 2f64.powi(n as i32) * a[n] * u;
        for i in (1..=n).rev() {
            phi = (phi + (c[i] / a[i] * phi.sin()).asin()) / 2.0;
        }
        phi
    }

    /// Exact pendulum flow of H = 𝒥²/2 − V cos θ over time `t`.
    /// Returns (θ in (−π, π], 𝒥).
    pub fn pendulum_flow(theta0: f64, j0: f64, v: f64, t: f64) -> (f64, f64) {
        let theta0 = theta0 - 2.0 * PI * ((theta0 + PI) / (2.0 * PI)).floor();
        let theta0 = if theta0 > PI { theta0 - 2.0 * PI } else { theta0 };
        if v == 0.0 {
            return (wrap(theta0 + j0 * t), j0);
        }
        let energy = j0 * j0 / 2.0 - v * theta0.cos();
        let m = (energy + v) / (2.0 * v);
        let w0 = v.sqrt();
        if m < 1.0 {
            // libration: sin(θ/2) = k sn(u), 𝒥 = 2k√V cn(u)
            let k = m.sqrt();
            if k == 0.0 {
                return (theta0, j0);
            }
            let s = ((theta0 / 2.0).sin() / k).clamp(-1.0, 1.0);
            let c = j0 / (2.0 * k * w0);
            let phi0 = s.atan2(c);
            let phi = amplitude(w0 * t + incomplete_f(phi0, m), m);
            let theta = 2.0 * (k * phi.sin()).clamp(-1.0, 1.0).asin();
            (wrap(theta), 2.0 * k * w0 * phi.cos())
        } else {
            // rotation: θ/2 = ±am(ω't + u₀ | 1/m), 𝒥 = ±2ω' dn
            let mp = 1.0 / m;
            let wp = ((energy + v) / 2.0).sqrt();
            let sign = j0.signum();
            let psi0 = sign * theta0 / 2.0;
            let psi = amplitude(wp * t + incomplete_f(psi0, mp), mp);
            let dn = (1.0 - mp * psi.sin().powi(2)).max(0.0).sqrt();
            (wrap(2.0 * sign * psi), 2.0 * sign * wp * dn)
        }
    }

    fn wrap(theta: f64) -> f64 {
        let w = theta.rem_euclid(2.0 * PI);
        if w > PI {
            w - 2.0 * PI
        } else {
            w
        }
    }

    /// Smallest signed difference between two angles.
    pub fn angle_difference(a: f64, b: f64) -> f64 {
        (a - b + PI).rem_euclid(2.0 * PI) - PI
    }
}

pub mod bessel {
    //! J_n(x) by trapezoidal quadrature of (1/2π)∫₀^{2π} cos(nτ − x sin τ) dτ,
    //! which converges geometrically for this periodic integrand.
    use std::f64::consts::PI;

    pub fn bessel_j(n: i64, x: f64) -> f64 {
        let points = 2048;
        let h = 2.0 * PI / points as f64;
        let sum: f64 = (0..points)
            .map(|k| {
                let tau = k as f64 * h;
                (n as f64 * tau - x * tau.sin()).cos()
            })
            .sum();
        sum * h / (2.0 * PI)
    }
}

/// Random (θ, 𝒥, Ṽ) away from the separatrix band.
pub fn initial_conditions(count: usize, seed: u64) -> Vec<(f64, f64, f64)> {
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let theta = rng.gen::<f64>() * 2.0 * PI;
        let j = rng.gen_range(-3.0..3.0);
        let v = rng.gen_range(0.05..4.0);
        let energy: f64 = j * j / 2.0 - v * f64::cos(theta);
        if (energy - v).abs() >= 1e-6 * v {
            out.push((theta, j, v));
        }
    }
    out
}
