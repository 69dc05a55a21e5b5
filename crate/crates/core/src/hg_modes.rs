//! Normalised Hermite-Gauss transverse modes at the beam waist.
//!
//! Profiles are real (curvature and Gouy phases vanish at the waist) and use
//! the physicists' Hermite polynomials:
//!
//! ```text
//! u_nm(x, y) = N_nm H_n(√2 x / w) H_m(√2 y / w) exp(-(x² + y²) / w²)
//! ```
//!
//! with `N_nm` fixed by `∬ u_nm² dx dy = 1`.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};

/// Physicists' Hermite polynomial `H_n(x)`.
pub fn hermite_polynomial(n: u32, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut curr = 2.0 * x;
    for k in 1..n {
        let next = 2.0 * x * curr - 2.0 * f64::from(k) * prev;
        prev = curr;
        curr = next;
    }
    curr
}

/// Orthonormal Hermite function `H_n(t) e^{-t²/2} / √(2ⁿ n! √π)`.
///
/// Evaluated with the normalised recurrence so large orders neither overflow
/// nor lose precision to the factorial.
pub fn hermite_function(n: u32, t: f64) -> f64 {
    let mut prev = PI.powf(-0.25) * (-0.5 * t * t).exp();
    if n == 0 {
        return prev;
    }
    let mut curr = 2.0_f64.sqrt() * t * prev;
    for k in 1..n {
        let k = f64::from(k);
        let next = (2.0 / (k + 1.0)).sqrt() * t * curr - (k / (k + 1.0)).sqrt() * prev;
        prev = curr;
        curr = next;
    }
    curr
}

/// One-dimensional factor of an HG mode, unit L2 norm on the real line.
pub fn profile_1d(order: u32, waist: f64, x: f64) -> f64 {
    let scale = 2.0_f64.sqrt() / waist;
    scale.sqrt() * hermite_function(order, scale * x)
}

/// Anything with a real transverse amplitude that can enter an overlap integral.
///
/// `waist` is a length scale hint: the quadrature uses it to place its nodes,
/// so it should be the 1/e field radius of the dominant Gaussian envelope.
pub trait TransverseProfile: Sync {
    fn amplitude(&self, x: f64, y: f64) -> f64;
    fn waist(&self) -> f64;
}

/// A normalised Hermite-Gauss mode `HG_nm` of a given waist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HGMode {
    n: u32,
    m: u32,
    waist: f64,
}

impl HGMode {
    pub fn new(n: u32, m: u32, waist: f64) -> Result<Self> {
        if !(waist.is_finite() && waist > 0.0) {
            return Err(Error::param("waist", format!("must be positive, got {waist}")));
        }
        Ok(Self { n, m, waist })
    }

    /// `HG_n0` with the given waist.
    pub fn row(n: u32, waist: f64) -> Result<Self> {
        Self::new(n, 0, waist)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn waist(&self) -> f64 {
        self.waist
    }

    /// Total transverse order `n + m`.
    pub fn order(&self) -> u32 {
        self.n + self.m
    }

    pub fn indices(&self) -> (u32, u32) {
        (self.n, self.m)
    }

    pub fn with_waist(self, waist: f64) -> Result<Self> {
        Self::new(self.n, self.m, waist)
    }

    /// Field amplitude `u_nm(x, y)`.
    pub fn amplitude(&self, x: f64, y: f64) -> f64 {
        profile_1d(self.n, self.waist, x) * profile_1d(self.m, self.waist, y)
    }

    /// The normalisation constant `N_nm` multiplying the bare Hermite product.
    pub fn normalization(&self) -> f64 {
        let one_d = |k: u32| -> f64 {
            // (2/π)^{1/4} / √(w 2^k k!)
            let log_fact: f64 = (1..=k).map(|j| f64::from(j).ln()).sum();
            let log = 0.25 * (2.0 / PI).ln() - 0.5 * (self.waist.ln() + f64::from(k) * 2.0_f64.ln() + log_fact);
            log.exp()
        };
        one_d(self.n) * one_d(self.m)
    }
}

impl TransverseProfile for HGMode {
    fn amplitude(&self, x: f64, y: f64) -> f64 {
        HGMode::amplitude(self, x, y)
    }

    fn waist(&self) -> f64 {
        self.waist
    }
}

impl fmt::Display for HGMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HG{}{}", self.n, self.m)
    }
}
