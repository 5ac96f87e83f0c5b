//! Quadrature rules on the reference interval [-1, 1]: Gauss–Legendre,
//! Chebyshev–Lobatto with Clenshaw–Curtis weights, barycentric
//! interpolation, and adaptive scalar integration.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on [-1, 1], nodes ascending.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss–Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, refined by Newton on P_n
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Chebyshev–Lobatto points `x_j = -cos(pi j / (p - 1))` (ascending) with
/// Clenshaw–Curtis weights, barycentric weights and the spectral
/// integration matrix `W[q][r] = ∫_{-1}^{x_q} l_r(s) ds`.
#[derive(Debug, Clone)]
pub struct ChebyshevPanel {
    pub nodes: Vec<f64>,
    pub cc_weights: Vec<f64>,
    pub bary_weights: Vec<f64>,
    pub integration: Vec<Vec<f64>>,
}

impl ChebyshevPanel {
    pub fn new(p: usize) -> Self {
        assert!(p >= 2, "Chebyshev panel needs at least two points");
        let n = p - 1;
        let nodes: Vec<f64> = (0..p).map(|j| -(PI * j as f64 / n as f64).cos()).collect();
        let bary_weights: Vec<f64> = (0..p)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == n {
                    0.5 * s
                } else {
                    s
                }
            })
            .collect();
        let cc_weights = clenshaw_curtis(n);
        // Lagrange basis has degree n; a Gauss rule with p nodes integrates
        // degree 2p - 1 exactly.
        let gl = GaussLegendre::new(p);
        let integration = nodes
            .iter()
            .map(|&xq| {
                let mut row = vec![0.0; p];
                if xq > -1.0 {
                    for (s, w) in gl.mapped(-1.0, xq) {
                        let basis = lagrange_basis(&nodes, &bary_weights, s);
                        for (r, l) in basis.iter().enumerate() {
                            row[r] += w * l;
                        }
                    }
                }
                row
            })
            .collect();
        Self {
            nodes,
            cc_weights,
            bary_weights,
            integration,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Values of all Lagrange basis polynomials at `x` in [-1, 1].
    pub fn basis_at(&self, x: f64) -> Vec<f64> {
        lagrange_basis(&self.nodes, &self.bary_weights, x)
    }
}

fn lagrange_basis(nodes: &[f64], weights: &[f64], x: f64) -> Vec<f64> {
    if let Some(hit) = nodes.iter().position(|&xj| xj == x) {
        let mut out = vec![0.0; nodes.len()];
        out[hit] = 1.0;
        return out;
    }
    let terms: Vec<f64> = nodes
        .iter()
        .zip(weights)
        .map(|(&xj, &wj)| wj / (x - xj))
        .collect();
    let total: f64 = terms.iter().sum();
    terms.into_iter().map(|t| t / total).collect()
}

fn clenshaw_curtis(n: usize) -> Vec<f64> {
    // weights for x_j = cos(pi j / n); symmetric, so order is irrelevant
    let mut w = vec![0.0; n + 1];
    for (j, wj) in w.iter_mut().enumerate() {
        let theta = PI * j as f64 / n as f64;
        let mut sum = 0.0;
        for k in 1..=(n / 2) {
            let b = if 2 * k == n { 1.0 } else { 2.0 };
            sum += b * (2.0 * k as f64 * theta).cos() / (4.0 * (k * k) as f64 - 1.0);
        }
        let c = if j == 0 || j == n { 1.0 } else { 2.0 };
        *wj = c / n as f64 * (1.0 - sum);
    }
    w
}

/// Adaptive Gauss–Legendre integration of a scalar function: a panel is
/// accepted when its 8-point value agrees with the sum over its halves to
/// `tol` relative to the running magnitude.
pub fn adaptive_integrate(
    f: &mut dyn FnMut(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: usize,
) -> (f64, f64) {
    let gl = GaussLegendre::new(8);
    let rule = |lo: f64, hi: f64, f: &mut dyn FnMut(f64) -> f64| -> f64 {
        gl.mapped(lo, hi).map(|(x, w)| w * f(x)).sum()
    };
    let mut stack = vec![(a, b, rule(a, b, f), 0usize)];
    let mut total = 0.0;
    let mut err = 0.0;
    while let Some((lo, hi, whole, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = rule(lo, mid, f);
        let right = rule(mid, hi, f);
        let diff = (left + right - whole).abs();
        let width_share = (hi - lo) / (b - a);
        if diff <= tol * width_share.max(1e-3) * (1.0 + (left + right).abs()) || depth >= max_depth
        {
            total += left + right;
            err += diff;
        } else {
            stack.push((mid, hi, right, depth + 1));
            stack.push((lo, mid, left, depth + 1));
        }
    }
    (total, err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exactness() {
        for n in [1, 2, 5, 8, 16] {
            let gl = GaussLegendre::new(n);
            assert!((gl.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            // x^(2n-2) integrates exactly: 2/(2n-1)
            let deg = 2 * n - 2;
            let q: f64 = gl
                .nodes
                .iter()
                .zip(&gl.weights)
                .map(|(x, w)| w * x.powi(deg as i32))
                .sum();
            assert!((q - 2.0 / (deg as f64 + 1.0)).abs() < 1e-13, "n = {n}");
        }
        let gl = GaussLegendre::new(8);
        let q: f64 = gl.mapped(0.0, 2.0).map(|(x, w)| w * x.exp()).sum();
        assert!((q - (2f64.exp() - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn chebyshev_panel_rules() {
        let panel = ChebyshevPanel::new(16);
        assert!((panel.cc_weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let cc: f64 = panel
            .nodes
            .iter()
            .zip(&panel.cc_weights)
            .map(|(x, w)| w * x.exp())
            .sum();
        assert!((cc - (1f64.exp() - (-1f64).exp())).abs() < 1e-14);
        // spectral integration of exp from -1 to each node
        for (q, &xq) in panel.nodes.iter().enumerate() {
            let v: f64 = panel.integration[q]
                .iter()
                .zip(&panel.nodes)
                .map(|(w, x)| w * x.exp())
                .sum();
            assert!((v - (xq.exp() - (-1f64).exp())).abs() < 1e-13);
        }
        let basis = panel.basis_at(0.3);
        let interp: f64 = basis
            .iter()
            .zip(&panel.nodes)
            .map(|(l, x)| l * x.sin())
            .sum();
        assert!((interp - 0.3f64.sin()).abs() < 1e-14);
    }

    #[test]
    fn adaptive_integration() {
        let (v, _) = adaptive_integrate(&mut |t: f64| (-t).exp(), 0.0, 40.0, 1e-12, 40);
        assert!((v - (1.0 - (-40f64).exp())).abs() < 1e-11);
        let (v, _) = adaptive_integrate(&mut |t: f64| t.sqrt(), 0.0, 1.0, 1e-12, 50);
        assert!((v - 2.0 / 3.0).abs() < 1e-9);
    }
}
