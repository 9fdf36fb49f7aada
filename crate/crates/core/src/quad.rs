//! Gauss-Hermite quadrature for Gaussian ensemble averages.
//!
//! Nodes are the roots of the physicists' Hermite polynomial H_n,
//! found by Newton iteration on the orthonormal recurrence; weights
//! come from the Christoffel formula 1 / sum_k p_k(x)^2. For an
//! integrand f averaged over N(0, sigma^2),
//!   <f> = sum_i (w_i / sqrt(pi)) f(sqrt(2) sigma x_i).

use crate::error::{Error, Result};

/// Quadrature rule on (-inf, inf) with weight exp(-x^2).
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Evaluate the orthonormal Hermite functions p_0..p_n at x and return
/// (p_n, p_n') using the recurrence
///   p_{k+1} = x sqrt(2/(k+1)) p_k - sqrt(k/(k+1)) p_{k-1}.
fn hermite_orthonormal(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 0.0;
    let mut p = std::f64::consts::PI.powf(-0.25); // p_0, normalized for weight e^{-x^2}
    for k in 0..n {
        let next = x * (2.0 / (k as f64 + 1.0)).sqrt() * p
            - (k as f64 / (k as f64 + 1.0)).sqrt() * p_prev;
        p_prev = p;
        p = next;
    }
    // p_n' = sqrt(2n) p_{n-1}
    let dp = (2.0 * n as f64).sqrt() * p_prev;
    (p, dp)
}

impl GaussHermite {
    pub fn new(order: usize) -> Result<GaussHermite> {
        if order < 1 || order > 200 {
            return Err(Error::InvalidArgument(format!(
                "quadrature order must be in 1..=200, got {order}"
            )));
        }
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];

        // positive-half roots, largest first; initial guesses from the
        // asymptotic edge location x_max ~ sqrt(2n+1), then marching inward
        for i in 0..(n + 1) / 2 {
            let mut x = if i == 0 {
                (2.0 * n as f64 + 1.0).sqrt() - 1.85575 * (2.0 * n as f64 + 1.0).powf(-1.0 / 6.0)
            } else {
                // march inward from the previous root
                nodes[n - i] - std::f64::consts::PI / (2.0 * n as f64 + 1.0).sqrt() * 1.1
            };
            if n % 2 == 1 && i == (n - 1) / 2 {
                x = 0.0; // exact middle root for odd order
            }
            for _ in 0..100 {
                let (p, dp) = hermite_orthonormal(n, x);
                if dp == 0.0 {
                    break;
                }
                let delta = p / dp;
                x -= delta;
                if delta.abs() < 1e-15 * (1.0 + x.abs()) {
                    break;
                }
            }
            let (_, dp) = hermite_orthonormal(n, x);
            // Christoffel-Darboux at a root collapses 1 / sum_k p_k^2
            // to 2 / p_n'(x)^2 for this orthonormal family.
            let w = 2.0 / (dp * dp);
            nodes[n - 1 - i] = x;
            nodes[i] = -x;
            weights[n - 1 - i] = w;
            weights[i] = w;
        }

        let sum: f64 = weights.iter().sum();
        let target = std::f64::consts::PI.sqrt();
        if (sum - target).abs() > 1e-10 * target {
            return Err(Error::IntegrationFailure(format!(
                "gauss-hermite weights sum to {sum}, expected sqrt(pi)"
            )));
        }
        Ok(GaussHermite { nodes, weights })
    }

    /// Average f over a zero-mean Gaussian with standard deviation sigma.
    pub fn gaussian_average<F: FnMut(f64) -> f64>(&self, sigma: f64, mut f: F) -> f64 {
        let norm = std::f64::consts::PI.sqrt();
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w / norm * f(std::f64::consts::SQRT_2 * sigma * x))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn low_order_nodes_match_closed_forms() {
        let gh = GaussHermite::new(2).unwrap();
        assert_abs_diff_eq!(gh.nodes[1], (0.5f64).sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(
            gh.weights[0],
            std::f64::consts::PI.sqrt() / 2.0,
            epsilon = 1e-13
        );
        let gh3 = GaussHermite::new(3).unwrap();
        assert_abs_diff_eq!(gh3.nodes[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(gh3.nodes[2], (1.5f64).sqrt(), epsilon = 1e-13);
        assert_abs_diff_eq!(
            gh3.weights[1],
            2.0 * std::f64::consts::PI.sqrt() / 3.0,
            epsilon = 1e-13
        );
    }

    #[test]
    fn moments_exact_up_to_degree_2n_minus_1() {
        for order in [5usize, 21, 41] {
            let gh = GaussHermite::new(order).unwrap();
            // int x^{2m} e^{-x^2} dx = sqrt(pi) (2m-1)!! / 2^m
            let mut exact = std::f64::consts::PI.sqrt();
            let mut m = 0usize;
            while 2 * m + 2 <= 2 * order - 1 {
                exact *= (2 * m + 1) as f64 / 2.0;
                m += 1;
                let q: f64 = gh
                    .nodes
                    .iter()
                    .zip(&gh.weights)
                    .map(|(&x, &w)| w * x.powi(2 * m as i32))
                    .sum();
                assert_abs_diff_eq!(q / exact, 1.0, epsilon = 1e-11);
            }
        }
    }

    #[test]
    fn gaussian_average_of_cosine_is_exact_decay() {
        // <cos(a d)> over N(0, sigma^2) = exp(-a^2 sigma^2 / 2)
        let gh = GaussHermite::new(21).unwrap();
        for (a, sigma) in [(1.0, 0.5), (3.0, 0.3), (0.7, 1.2)] {
            let got = gh.gaussian_average(sigma, |d| (a * d).cos());
            let want = (-0.5 * (a * sigma) as f64 * a * sigma).exp();
            assert_abs_diff_eq!(got, want, epsilon = 1e-10);
        }
    }

    #[test]
    fn nodes_are_symmetric_and_sorted() {
        let gh = GaussHermite::new(41).unwrap();
        for i in 1..gh.nodes.len() {
            assert!(gh.nodes[i] > gh.nodes[i - 1]);
        }
        for i in 0..gh.nodes.len() {
            assert_abs_diff_eq!(
                gh.nodes[i],
                -gh.nodes[gh.nodes.len() - 1 - i],
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn rejects_zero_order() {
        assert!(GaussHermite::new(0).is_err());
    }
}
