//! Gauss–Legendre rules on (-1, 1) and a Duffy-collapsed rule on triangles.

use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule, nodes ascending. Roots found by Newton's method from
    /// the Chebyshev-like initial guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "quadrature needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
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
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights rescaled to `(a, b)`.
    pub fn on_interval(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| (mid + half * x, half * w))
            .collect()
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    let d = n * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Tensor rule on a triangle via the Duffy map
/// `(u, v) -> a + u (b - a) + u v (c - b)`, which collapses the edge `u = 0`
/// onto vertex `a`. Weights include the Jacobian, so they sum to the area.
pub fn triangle_rule(n: usize, a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> Vec<([f64; 2], f64)> {
    let gl = GaussLegendre::new(n).on_interval(0.0, 1.0);
    let ba = [b[0] - a[0], b[1] - a[1]];
    let cb = [c[0] - b[0], c[1] - b[1]];
    let det = (ba[0] * cb[1] - ba[1] * cb[0]).abs();
    let mut out = Vec::with_capacity(n * n);
    for &(u, wu) in &gl {
        for &(v, wv) in &gl {
            let p = [
                a[0] + u * ba[0] + u * v * cb[0],
                a[1] + u * ba[1] + u * v * cb[1],
            ];
            out.push((p, wu * wv * u * det));
        }
    }
    out
}
