use std::f64::consts::PI;

use super::legendre_pair_unchecked;

/// Gauss–Legendre rule on `[−1, 1]`.
///
/// Nodes are stored in decreasing order of `x`, i.e. increasing colatitude
/// `θ = acos x`; `thetas` holds those colatitudes computed directly (no `acos`
/// round trip) so polar nodes keep full relative precision.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub thetas: Vec<f64>,
    pub weights: Vec<f64>,
}

/// n-point rule, by Newton iteration in θ on `P_n(cos θ)`.
pub fn gauss_legendre(n: usize) -> GaussLegendre {
    let mut nodes = Vec::with_capacity(n);
    let mut thetas = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let nf = n as f64;
    let half = n / 2;
    for i in 0..n.div_ceil(2) {
        let mut theta = PI * (i as f64 + 0.75) / (nf + 0.5);
        let mut sin_dp = 0.0;
        for _ in 0..100 {
            let (sin_t, x) = theta.sin_cos();
            let (p, pm1) = legendre_pair_unchecked(n, x);
            // sin θ · P'_n(x) = n (P_{n−1} − x P_n) / sin θ
            sin_dp = nf * (pm1 - x * p) / sin_t;
            // d/dθ P_n(cos θ) = −sin θ P'_n
            let step = p / (-sin_dp);
            theta -= step;
            if step.abs() < 1e-15 * theta.max(1.0) {
                break;
            }
        }
        if n % 2 == 1 && i == half {
            theta = PI / 2.0;
            let (p, pm1) = legendre_pair_unchecked(n, 0.0);
            sin_dp = nf * (pm1 - 0.0 * p);
        }
        let (_, x) = theta.sin_cos();
        nodes.push(x);
        thetas.push(theta);
        weights.push(2.0 / (sin_dp * sin_dp));
    }
    // mirror into the southern hemisphere
    for i in (0..half).rev() {
        nodes.push(-nodes[i]);
        thetas.push(PI - thetas[i]);
        weights.push(weights[i]);
    }
    GaussLegendre {
        nodes,
        thetas,
        weights,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_rules_exact() {
        let g = gauss_legendre(1);
        assert_eq!(g.nodes.len(), 1);
        assert!(g.nodes[0].abs() < 1e-16);
        assert!((g.weights[0] - 2.0).abs() < 1e-15);

        let g = gauss_legendre(2);
        assert!((g.nodes[0] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((g.weights[0] - 1.0).abs() < 1e-14);

        let g = gauss_legendre(3);
        assert!((g.nodes[0] - 0.6f64.sqrt()).abs() < 1e-15);
        assert!((g.weights[0] - 5.0 / 9.0).abs() < 1e-14);
        assert!((g.weights[1] - 8.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn weights_sum_and_ordering() {
        for &n in &[5usize, 64, 257, 2050] {
            let g = gauss_legendre(n);
            let sum: f64 = g.weights.iter().sum();
            assert!((sum - 2.0).abs() < 1e-12, "n={n}");
            assert!(g.thetas.windows(2).all(|w| w[0] < w[1]));
            assert!(g.thetas[0] > 0.0 && *g.thetas.last().unwrap() < PI);
        }
    }

    #[test]
    fn integrates_polynomials_exactly() {
        let g = gauss_legendre(12);
        for k in 0..24u32 {
            let got: f64 = g
                .nodes
                .iter()
                .zip(&g.weights)
                .map(|(x, w)| w * x.powi(k as i32))
                .sum();
            let exact = if k % 2 == 1 {
                0.0
            } else {
                2.0 / (k as f64 + 1.0)
            };
            assert!((got - exact).abs() < 1e-14, "k={k}");
        }
    }
}
