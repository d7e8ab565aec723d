//! Legendre-Gauss-Lobatto collocation operators with the diagonal-norm
//! summation-by-parts property, and Gauss-Legendre rules on `[0, 1]`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

pub const MAX_DEGREE: usize = 20;
pub const MAX_GAUSS_POINTS: usize = 10;

const NEWTON_TOL: f64 = 1e-15;
const NEWTON_MAX_ITER: usize = 100;

/// LGL nodes, weights and the collocation derivative matrix on `[-1, 1]`.
///
/// Degree 0 is accepted as the degenerate one-node operator (cell averages,
/// i.e. a first order finite volume scheme): node `0`, weight `2`, `D = 0`.
/// That node is simultaneously the left and the right boundary node.
#[derive(Debug, Clone, PartialEq)]
pub struct LobattoBasis {
    degree: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    deriv: Vec<f64>,
}

impl LobattoBasis {
    pub fn new(degree: usize) -> Result<Self> {
        if degree > MAX_DEGREE {
            return Err(Error::Config(format!(
                "polynomial degree {degree} outside 0..={MAX_DEGREE}"
            )));
        }
        if degree == 0 {
            return Ok(Self {
                degree,
                nodes: vec![0.0],
                weights: vec![2.0],
                deriv: vec![0.0],
            });
        }
        let nodes = lobatto_nodes(degree);
        let nn = (degree * (degree + 1)) as f64;
        let weights = nodes
            .iter()
            .map(|&x| {
                let (l, _) = legendre(degree, x);
                2.0 / (nn * l * l)
            })
            .collect();
        let deriv = barycentric_derivative(&nodes);
        Ok(Self {
            degree,
            nodes,
            weights,
            deriv,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `D_ij = l_j'(xi_i)`.
    #[inline]
    pub fn deriv(&self, i: usize, j: usize) -> f64 {
        self.deriv[i * self.nodes.len() + j]
    }

    #[inline]
    pub fn deriv_row(&self, i: usize) -> &[f64] {
        let n = self.nodes.len();
        &self.deriv[i * n..(i + 1) * n]
    }

    /// Applies the derivative matrix to nodal values.
    pub fn differentiate(&self, values: &[f64]) -> Vec<f64> {
        (0..self.n_nodes())
            .map(|i| {
                self.deriv_row(i)
                    .iter()
                    .zip(values)
                    .map(|(d, v)| d * v)
                    .sum()
            })
            .collect()
    }

    /// Max entrywise `|Q + Q^T - B|` with `Q = W D` and
    /// `B = diag(-1, 0, ..., 0, 1)`.
    pub fn sbp_defect(&self) -> f64 {
        let n = self.n_nodes();
        let mut defect: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let q_ij = self.weights[i] * self.deriv(i, j);
                let q_ji = self.weights[j] * self.deriv(j, i);
                let mut b = 0.0;
                if i == j && i == n - 1 {
                    b += 1.0;
                }
                if i == j && i == 0 {
                    b -= 1.0;
                }
                defect = defect.max((q_ij + q_ji - b).abs());
            }
        }
        defect
    }

    /// Evaluates the interpolating polynomial through `values` at `xi`.
    pub fn interpolate(&self, values: &[f64], xi: f64) -> f64 {
        let n = self.n_nodes();
        if n == 1 {
            return values[0];
        }
        let mut acc = 0.0;
        for j in 0..n {
            let mut l = 1.0;
            for k in 0..n {
                if k != j {
                    l *= (xi - self.nodes[k]) / (self.nodes[j] - self.nodes[k]);
                }
            }
            acc += l * values[j];
        }
        acc
    }

    #[cfg(test)]
    pub(crate) fn zero_derivative(&mut self) {
        self.deriv.iter_mut().for_each(|d| *d = 0.0);
    }
}

/// Legendre polynomial `L_n(x)` and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    match n {
        0 => (1.0, 0.0),
        1 => (x, 1.0),
        _ => {
            let (mut l_prev, mut l) = (1.0, x);
            let (mut d_prev, mut d) = (0.0, 1.0);
            for k in 1..n {
                let kf = k as f64;
                let l_next = ((2.0 * kf + 1.0) * x * l - kf * l_prev) / (kf + 1.0);
                let d_next = d_prev + (2.0 * kf + 1.0) * l;
                l_prev = l;
                l = l_next;
                d_prev = d;
                d = d_next;
            }
            (l, d)
        }
    }
}

/// Interior LGL nodes are the roots of `L_N'`; Newton iteration uses
/// `L_N'' = (2x L_N' - N(N+1) L_N) / (1 - x^2)` and starts from the
/// Chebyshev-Lobatto points. The left half is computed and mirrored.
fn lobatto_nodes(degree: usize) -> Vec<f64> {
    let n = degree;
    let nn = (n * (n + 1)) as f64;
    let mut nodes = vec![0.0; n + 1];
    nodes[0] = -1.0;
    nodes[n] = 1.0;
    for j in 1..(n + 1) / 2 {
        let mut x = -math::cos(core::f64::consts::PI * j as f64 / n as f64);
        for _ in 0..NEWTON_MAX_ITER {
            let (l, d) = legendre(n, x);
            let d2 = (2.0 * x * d - nn * l) / (1.0 - x * x);
            let delta = d / d2;
            x -= delta;
            if delta.abs() <= NEWTON_TOL * x.abs().max(1.0) {
                break;
            }
        }
        nodes[j] = x;
        nodes[n - j] = -x;
    }
    if n % 2 == 0 {
        nodes[n / 2] = 0.0;
    }
    nodes
}

/// Collocation derivative matrix from barycentric weights, diagonal set to
/// the negative off-diagonal row sum.
fn barycentric_derivative(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let lambda: Vec<f64> = (0..n)
        .map(|j| {
            let p: f64 = (0..n)
                .filter(|&k| k != j)
                .map(|k| nodes[j] - nodes[k])
                .product();
            1.0 / p
        })
        .collect();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        let mut row_sum = 0.0;
        for j in 0..n {
            if i != j {
                let v = lambda[j] / lambda[i] / (nodes[i] - nodes[j]);
                d[i * n + j] = v;
                row_sum += v;
            }
        }
        d[i * n + i] = -row_sum;
    }
    d
}

/// Gauss-Legendre rule mapped to `[0, 1]`.
///
/// Nodes are ascending and exactly mirrored: `nodes[n-1-i]` is stored as
/// `1 - nodes[i]`, so paths traversed in either direction hit bitwise
/// identical parameter values.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(n_points: usize) -> Result<Self> {
        if !(1..=MAX_GAUSS_POINTS).contains(&n_points) {
            return Err(Error::Config(format!(
                "Gauss rule with {n_points} points outside 1..={MAX_GAUSS_POINTS}"
            )));
        }
        let n = n_points;
        let mut nodes = vec![0.5; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            // roots of P_n on [-1, 1], seeded near the i-th root from the left
            let mut x = -math::cos(core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5));
            for _ in 0..NEWTON_MAX_ITER {
                let (p, dp) = legendre(n, x);
                let delta = p / dp;
                x -= delta;
                if delta.abs() <= NEWTON_TOL {
                    break;
                }
            }
            if n % 2 == 1 && i == n / 2 {
                x = 0.0;
            }
            let (_, dp) = legendre(n, x);
            let w = 1.0 / ((1.0 - x * x) * dp * dp);
            let s = 0.5 * (1.0 + x);
            nodes[i] = s;
            weights[i] = w;
            if i != n - 1 - i {
                nodes[n - 1 - i] = 1.0 - s;
                weights[n - 1 - i] = w;
            }
        }
        Ok(Self { nodes, weights })
    }

    pub fn n_points(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `sum_q w_q f(s_q)`.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&s, &w)| w * f(s))
            .sum()
    }
}
