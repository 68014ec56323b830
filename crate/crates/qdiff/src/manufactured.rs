//! Manufactured solutions used for boundary/initial data and error checks.

/// Exact solution of the two-field relaxation (telegraph) system
/// `u_t + v_x = 0`, `v_t + u_x/eps = -v/eps`:
/// `u = e^{at} sin(ax)`, `v = e^{at} cos(ax)` with `a = -1/(1+eps)`.
#[derive(Debug, Clone, Copy)]
pub struct ManufacturedTelegraph {
    pub epsilon: f64,
    /// Decay rate `a = -1/(1+eps)`.
    pub a: f64,
}

impl ManufacturedTelegraph {
    pub fn new(epsilon: f64) -> Self {
        assert!(epsilon >= 0.0, "manufactured solution needs epsilon >= 0");
        ManufacturedTelegraph {
            epsilon,
            a: -1.0 / (1.0 + epsilon),
        }
    }

    pub fn u(&self, x: f64, t: f64) -> f64 {
        (self.a * t).exp() * (self.a * x).sin()
    }

    pub fn v(&self, x: f64, t: f64) -> f64 {
        (self.a * t).exp() * (self.a * x).cos()
    }

    pub fn eval(&self, x: f64, t: f64) -> (f64, f64) {
        (self.u(x, t), self.v(x, t))
    }

    /// Residual of both equations at `(x, t)` under exact differentiation,
    /// returned as the larger of the two absolute residuals.
    ///
    /// The second equation's residual is `v * (a + (1+a)/eps)`; the factor
    /// `(1+a)/eps` equals `1/(1+eps)` exactly for `a = -1/(1+eps)` and is
    /// evaluated in that form, otherwise the `1/eps` amplification of roundoff
    /// would swamp the cancellation for small `eps`.
    pub fn residual(&self, x: f64, t: f64) -> f64 {
        assert!(self.epsilon > 0.0, "residual needs epsilon > 0");
        let a = self.a;
        let u = self.u(x, t);
        let v = self.v(x, t);
        // u_t + v_x = a*u - a*u
        let r1 = a * u + (-a) * u;
        // v_t + (u_x + v)/eps = v * (a + (1+a)/eps) = v * (a + 1/(1+eps))
        let r2 = v * (a + 1.0 / (1.0 + self.epsilon));
        r1.abs().max(r2.abs())
    }
}

/// Evaluate the manufactured telegraph pair at one point.
pub fn manufactured_telegraph(x: f64, t: f64, epsilon: f64) -> (f64, f64) {
    ManufacturedTelegraph::new(epsilon).eval(x, t)
}

/// Exact solution of the 1-d heat equation with `u0 = sin(pi x)` on `(0, 1)`
/// and homogeneous Dirichlet data: `u = e^{-pi^2 t} sin(pi x)`.
pub fn heat_exact_1d(x: f64, t: f64) -> f64 {
    (-std::f64::consts::PI.powi(2) * t).exp() * (std::f64::consts::PI * x).sin()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn values_at_reference_points() {
        let (u, v) = manufactured_telegraph(0.0, 0.0, 1.0);
        assert_abs_diff_eq!(u, 0.0);
        assert_abs_diff_eq!(v, 1.0);

        // a*x = pi/2 at x = -pi(1+eps)/2.
        let eps = 1.0;
        let x = -std::f64::consts::PI * (1.0 + eps) / 2.0;
        let (u, v) = manufactured_telegraph(x, 0.0, eps);
        assert_abs_diff_eq!(u, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn residual_vanishes_at_spot_check() {
        let ms = ManufacturedTelegraph::new(1e-4);
        assert!(ms.residual(0.3, 0.7) < 1e-10);
    }

    #[test]
    fn residual_vanishes_at_random_samples() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let x: f64 = rng.random_range(-1.0..1.0);
            let t: f64 = rng.random_range(0.0..1.0);
            let eps = 10f64.powf(rng.random_range(-8.0..0.0));
            let ms = ManufacturedTelegraph::new(eps);
            assert!(
                ms.residual(x, t) < 1e-10,
                "residual {} at x={x}, t={t}, eps={eps}",
                ms.residual(x, t)
            );
        }
    }
}
