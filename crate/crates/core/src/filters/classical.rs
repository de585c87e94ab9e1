//! Band-limited classical shearlets: Meyer-type ψ1, bump ψ2 and a square scaling window.
//!
//! The 2D generator is ψ̂(ξ) = ψ̂1(λξ1) ψ̂2(ξ2/ξ1) with λ = 2, so the whole
//! spectrum of every scale-0 element fits in [−1/2, 1/2]² and the integer
//! lattice (c = 1) is alias-free.

/// Frequency scaling of the classical generator.
pub const LAMBDA: f64 = 2.0;
/// At the finest scale the Nyquist frequency maps to η1 = 1/4 (λη1 = 1/2).
pub const NYQUIST_ETA: f64 = 0.25;

/// ν(t) = t⁴(35 − 84t + 70t² − 20t³) on [0,1], clamped outside; ν(t) + ν(1−t) = 1.
pub fn nu(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t.powi(4) * (35.0 - 84.0 * t + 70.0 * t * t - 20.0 * t.powi(3))
    }
}

/// Φ(u)²: 1 on |u| ≤ 1/4, 0 on |u| ≥ 1/2, ν-ramp in between.
pub fn window_sq(u: f64) -> f64 {
    1.0 - nu(4.0 * u.abs() - 1.0)
}

/// ψ̂1(u) = (Φ(u/2)² − Φ(u)²)^{1/2}, supported in 1/4 ≤ |u| ≤ 1.
pub fn psi1_hat(u: f64) -> f64 {
    (window_sq(0.5 * u) - window_sq(u)).max(0.0).sqrt()
}

/// ψ̂2(v) = ν(1 − |v|)^{1/2}, supported in [−1, 1].
pub fn psi2_hat(v: f64) -> f64 {
    nu(1.0 - v.abs()).sqrt()
}

pub fn shearlet_hat(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    psi1_hat(LAMBDA * a) * psi2_hat(b / a)
}

pub fn scaling_hat(x: f64, y: f64) -> f64 {
    window_sq(LAMBDA * x.abs().max(y.abs())).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_symmetry() {
        for i in 0..=20 {
            let t = i as f64 / 20.0;
            assert!((nu(t) + nu(1.0 - t) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn calderon_partition() {
        for i in 0..=160 {
            let xi = 2f64.powf(-8.0 + 16.0 * i as f64 / 160.0);
            let s: f64 = (-20..=20).map(|j| psi1_hat(2f64.powi(-j) * xi).powi(2)).sum();
            assert!((s - 1.0).abs() < 1e-10, "ξ={xi}: {s}");
        }
    }

    #[test]
    fn bump_partition() {
        assert!((psi2_hat(0.0).powi(2) + psi2_hat(1.0).powi(2) + psi2_hat(-1.0).powi(2) - 1.0).abs() < 1e-10);
        for i in 0..=100 {
            let v = -1.0 + 2.0 * i as f64 / 100.0;
            let s: f64 = (-1..=1).map(|k| psi2_hat(v + k as f64).powi(2)).sum();
            assert!((s - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn supports() {
        assert_eq!(psi1_hat(0.24), 0.0);
        assert_eq!(psi1_hat(1.01), 0.0);
        assert!(psi1_hat(0.6) > 0.0);
        assert_eq!(psi2_hat(1.0), 0.0);
        assert_eq!(shearlet_hat(0.1, 0.0), 0.0);
    }
}
