//! Legendre polynomials and Gauss-Legendre rules on `[-1, 1]`.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

/// `P_l(x)` by the three-term recurrence.
pub fn legendre(l: usize, x: f64) -> f64 {
    match l {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut prev, mut cur) = (1.0, x);
            for k in 1..l {
                let k = k as f64;
                let next = ((2.0 * k + 1.0) * x * cur - k * prev) / (k + 1.0);
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// Fills `out[l] = P_l(x)` for `l = 0..out.len()`.
pub fn legendre_table(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = x;
    }
    for l in 1..out.len().saturating_sub(1) {
        let k = l as f64;
        out[l + 1] = ((2.0 * k + 1.0) * x * out[l] - k * out[l - 1]) / (k + 1.0);
    }
}

/// A Gauss-Legendre rule on `[-1, 1]`, exact for polynomials of degree
/// `2 * order - 1`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(order: usize) -> Self {
        let order = NonZeroUsize::new(order.max(1)).expect("order is at least one");
        let (nodes, weights) = GaussLegendre::new(order).as_node_weight_pairs().iter().copied().unzip();
        GaussRule { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// `∫_a^b f`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        half * self.iter().map(|(x, w)| w * f(mid + half * x)).sum::<f64>()
    }
}
