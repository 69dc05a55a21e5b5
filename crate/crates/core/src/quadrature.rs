//! Gauss-Hermite quadrature on the real line and the plane.
//!
//! Rules are stored with the Gaussian weight folded back in, so
//! `∫ f(x) dx ≈ s Σ W_i f(s t_i)` for any length scale `s`. Overlap integrands
//! are polynomials times Gaussians, for which a rule with enough points is exact.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::hg_modes::hermite_function;

/// Node counts tried by the adaptive integrator, in order.
pub const ADAPTIVE_POINTS: [usize; 4] = [32, 64, 128, 256];

/// Default convergence tolerance between successive refinements.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    /// `w_i · exp(t_i²)`
    scaled_weights: Vec<f64>,
}

impl GaussHermite {
    /// Builds an `n`-point rule.
    ///
    /// Nodes are the eigenvalues of the Hermite Jacobi matrix, isolated by
    /// Sturm-sequence bisection and polished with Newton steps on the Hermite
    /// functions. Weights come from `w·e^{t²} = 1 / (n ψ_{n-1}(t)²)`, which
    /// stays representable for the outermost nodes.
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "Gauss-Hermite rule needs at least one node");
        let nf = n as f64;
        let order = n as u32;
        // off-diagonal b_k² = k/2, zero diagonal
        let bound = (2.0 * nf).sqrt() + 1.0;
        let mut nodes: Vec<f64> = (0..n)
            .map(|k| {
                let (mut lo, mut hi) = (-bound, bound);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if eigenvalues_below(n, mid) > k {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                0.5 * (lo + hi)
            })
            .collect();
        for z in nodes.iter_mut() {
            for _ in 0..3 {
                let upper = hermite_function(order, *z);
                let lower = hermite_function(order - 1, *z);
                if lower == 0.0 {
                    break;
                }
                *z -= upper / ((2.0 * nf).sqrt() * lower);
            }
        }
        // exact symmetry
        for i in 0..n / 2 {
            let t = 0.5 * (nodes[n - 1 - i] - nodes[i]);
            nodes[i] = -t;
            nodes[n - 1 - i] = t;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        let scaled_weights = nodes
            .iter()
            .map(|&t| {
                let lower = hermite_function(order - 1, t);
                1.0 / (nf * lower * lower)
            })
            .collect();
        Self { nodes, scaled_weights }
    }

    /// Shared, lazily built rule for one of the [`ADAPTIVE_POINTS`] sizes.
    pub fn cached(n: usize) -> &'static GaussHermite {
        static RULES: [OnceLock<GaussHermite>; 4] =
            [OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new()];
        match ADAPTIVE_POINTS.iter().position(|&p| p == n) {
            Some(slot) => RULES[slot].get_or_init(|| GaussHermite::new(n)),
            None => panic!("no cached Gauss-Hermite rule with {n} points"),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Standard weights `w_i` for `∫ e^{-t²} g(t) dt ≈ Σ w_i g(t_i)`.
    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes
            .iter()
            .zip(&self.scaled_weights)
            .map(|(t, w)| w * (-t * t).exp())
    }

    /// `∫ f(x) dx` with nodes placed at `scale · t_i`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, scale: f64, f: F) -> f64 {
        scale
            * self
                .nodes
                .iter()
                .zip(&self.scaled_weights)
                .map(|(&t, &w)| w * f(scale * t))
                .sum::<f64>()
    }

    /// `∬ f(x, y) dx dy` on the tensor-product grid.
    pub fn integrate_2d<F: Fn(f64, f64) -> f64>(&self, scale_x: f64, scale_y: f64, f: F) -> f64 {
        let mut total = 0.0;
        for (&ty, &wy) in self.nodes.iter().zip(&self.scaled_weights) {
            let y = scale_y * ty;
            let row: f64 = self
                .nodes
                .iter()
                .zip(&self.scaled_weights)
                .map(|(&tx, &wx)| wx * f(scale_x * tx, y))
                .sum();
            total += wy * row;
        }
        scale_x * scale_y * total
    }
}

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    /// Absolute change between the last two refinements.
    pub error_estimate: f64,
    pub points: usize,
}

/// Number of eigenvalues of the `n × n` Hermite Jacobi matrix below `x`.
fn eigenvalues_below(n: usize, x: f64) -> usize {
    let mut count = 0;
    let mut d = -x;
    for k in 0..n {
        if k > 0 {
            let b2 = k as f64 / 2.0;
            d = -x - b2 / if d == 0.0 { f64::EPSILON } else { d };
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// Adaptive tensor-product Gauss-Hermite integration over the plane.
///
/// Doubles the node count from 32 until two successive results differ by less
/// than `tolerance · max(1, |I|)`.
pub fn integrate_plane<F>(scale: f64, tolerance: f64, f: F) -> Result<Integral>
where
    F: Fn(f64, f64) -> f64,
{
    let mut previous = GaussHermite::cached(ADAPTIVE_POINTS[0]).integrate_2d(scale, scale, &f);
    let mut change = f64::INFINITY;
    for &points in &ADAPTIVE_POINTS[1..] {
        let current = GaussHermite::cached(points).integrate_2d(scale, scale, &f);
        if !current.is_finite() {
            return Err(Error::NumericalInstability(format!(
                "non-finite quadrature sum with {points} points"
            )));
        }
        change = (current - previous).abs();
        if change < tolerance * current.abs().max(1.0) {
            return Ok(Integral {
                value: current,
                error_estimate: change,
                points,
            });
        }
        previous = current;
    }
    Err(Error::QuadratureFailure {
        estimate: change,
        points: *ADAPTIVE_POINTS.last().unwrap(),
    })
}

/// Node scale matching the Gaussian envelope of a product of profiles with
/// the given waists: `exp(-x² Σ 1/w_k²) = exp(-t²)`.
pub fn envelope_scale(waists: &[f64]) -> f64 {
    let rate: f64 = waists.iter().map(|w| 1.0 / (w * w)).sum();
    1.0 / rate.sqrt()
}
