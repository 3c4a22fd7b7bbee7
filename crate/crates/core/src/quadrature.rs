//! Gauss–Legendre quadrature with convergence control by order doubling.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::{Error, Result};

/// Nodes and weights of the n-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "rule needs at least one node");
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for i in 0..n {
            // Tricomi's initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            nodes.push(x);
            weights.push(2.0 / ((1.0 - x * x) * dp * dp));
        }
        Self { nodes, weights }
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

    /// Integral of `f` over [a, b].
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Integral of complex-valued `f` split uniformly into `panels` pieces.
    pub fn integrate_composite<F: FnMut(f64) -> Complex64>(
        &self,
        a: f64,
        b: f64,
        panels: usize,
        mut f: F,
    ) -> Complex64 {
        let width = (b - a) / panels as f64;
        let half = 0.5 * width;
        let mut total = Complex64::new(0.0, 0.0);
        for p in 0..panels {
            let mid = a + (p as f64 + 0.5) * width;
            let mut acc = Complex64::new(0.0, 0.0);
            for (&x, &w) in self.nodes.iter().zip(&self.weights) {
                acc += f(mid + half * x) * w;
            }
            total += acc * half;
        }
        total
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Settings for [`integrate_adaptive`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Nodes per panel.
    pub order: usize,
    pub initial_panels: usize,
    pub max_panels: usize,
    /// Accepted relative change between successive doublings.
    pub rel_tol: f64,
    /// Absolute floor below which results are treated as converged.
    pub abs_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            order: 16,
            initial_panels: 8,
            max_panels: 1 << 15,
            rel_tol: 1e-10,
            abs_tol: 1e-300,
        }
    }
}

/// Converged integral and the number of panels it took.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: Complex64,
    pub panels: usize,
}

/// Composite Gauss–Legendre with the panel count doubled until two
/// successive results agree to `spec.rel_tol`.
pub fn integrate_adaptive<F: FnMut(f64) -> Complex64>(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
    mut f: F,
) -> Result<Quadrature> {
    let mut panels = spec.initial_panels.max(1);
    let mut previous = rule.integrate_composite(a, b, panels, &mut f);
    loop {
        let next_panels = panels * 2;
        if next_panels > spec.max_panels {
            let change = (previous - rule.integrate_composite(a, b, panels / 2, &mut f)).norm()
                / previous.norm().max(spec.abs_tol);
            return Err(Error::QuadratureNotConverged { relative_change: change, panels });
        }
        let current = rule.integrate_composite(a, b, next_panels, &mut f);
        let change = (current - previous).norm();
        let scale = current.norm();
        if change <= spec.rel_tol * scale || scale <= spec.abs_tol {
            return Ok(Quadrature { value: current, panels: next_panels });
        }
        previous = current;
        panels = next_panels;
    }
}
