//! Quadrature path: Gauss–Legendre panel marching of the augmented equations.
//!
//! Each absorbed-event block obeys `y' = A y + g(u)` in the backward time
//! `u`, where `g` collects transitions out of smaller blocks. On a panel the
//! solution is written with the block propagator as an integrating factor,
//! `y(u) = E(u - u0) [y(u0) + ∫ E(u0 - v) g(v) dv]`, and the integral is
//! taken with the panel's Gauss–Legendre nodes. Blocks are processed in
//! order of size so that every source is known at the nodes.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{expm, norm1, CMat, C64};
use crate::metrics::model::Augmented;
use crate::quad::gauss_legendre;
use crate::regression::RegressionEngine;

/// Largest `h · ||A||₁` allowed on one panel.
const PANEL_STIFFNESS: f64 = 2.0;
/// Hard cap on the number of panels in one call.
const MAX_PANELS: usize = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOutcome {
    pub value: C64,
    /// Spread between the `n`-node and `n + 2`-node results.
    pub error: f64,
}

/// Nodes, weights and the node-to-node integration matrix on `[-1, 1]`:
/// `cumulative[j][k] = ∫_{-1}^{x_j} ℓ_k(x) dx` for the Lagrange basis `ℓ_k`.
#[derive(Debug, Clone)]
pub struct PanelRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub cumulative: Vec<Vec<f64>>,
}

impl PanelRule {
    pub fn new(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        let lagrange = |k: usize, t: f64| {
            x.iter()
                .enumerate()
                .filter(|&(m, _)| m != k)
                .map(|(_, &xm)| (t - xm) / (x[k] - xm))
                .product::<f64>()
        };
        let cumulative = x
            .iter()
            .map(|&xj| {
                let half = 0.5 * (xj + 1.0);
                (0..n)
                    .map(|k| {
                        x.iter()
                            .zip(&w)
                            .map(|(&xi, &wi)| wi * half * lagrange(k, -1.0 + half * (xi + 1.0)))
                            .sum()
                    })
                    .collect()
            })
            .collect();
        Self { nodes: x, weights: w, cumulative }
    }
}

/// Integral with an error estimate from a second, higher-order march.
pub fn integrate(aug: &Augmented, engine: &RegressionEngine, nodes: usize) -> Result<QuadOutcome> {
    let a = march(aug, engine, &PanelRule::new(nodes))?;
    let b = march(aug, engine, &PanelRule::new(nodes + 2))?;
    Ok(QuadOutcome { value: a, error: (a - b).norm() })
}

struct BlockPlan {
    /// `E(τ_j)` at the panel nodes.
    forward: Vec<CMat>,
    /// `E(-τ_j)` at the panel nodes.
    backward: Vec<CMat>,
    /// `E(h)`.
    full: CMat,
    /// Incoming transitions `(source subset, coefficient · map)`.
    sources: Vec<(usize, CMat)>,
}

/// March the augmented system with a fixed panel rule.
pub fn march(aug: &Augmented, engine: &RegressionEngine, rule: &PanelRule) -> Result<C64> {
    let n_sub = aug.subsets();
    let n_ev = aug.model.events.len();
    let mut order: Vec<usize> = (0..n_sub).collect();
    order.sort_by_key(|&s| (s as u32).count_ones());
    let mut y: Vec<DVector<C64>> = aug.dims.iter().map(|&d| DVector::zeros(d)).collect();
    y[0][0] = C64::from(1.0);
    let n = rule.nodes.len();
    let mut panels_used = 0usize;
    let segs: Vec<(f64, f64)> = aug.breaks.windows(2).map(|w| (w[0], w[1])).collect();
    for &(lo, hi) in segs.iter().rev() {
        let len = hi - lo;
        if len <= 0.0 {
            continue;
        }
        let gens: Vec<CMat> = (0..n_sub)
            .map(|s| aug.block_generator(engine, s as u32, lo, hi))
            .collect();
        let stiff = gens.iter().map(norm1).fold(0.0, f64::max);
        let panels = ((len * stiff / PANEL_STIFFNESS).ceil() as usize).max(1);
        panels_used += panels;
        if panels_used > MAX_PANELS {
            return Err(Error::Resource(format!(
                "quadrature march needs more than {MAX_PANELS} panels"
            )));
        }
        let h = len / panels as f64;
        let taus: Vec<f64> = rule.nodes.iter().map(|x| 0.5 * h * (x + 1.0)).collect();
        let plans = gens
            .iter()
            .enumerate()
            .map(|(s, g)| -> Result<BlockPlan> {
                let mut sources = Vec::new();
                for e in 0..n_ev {
                    if s & (1 << e) == 0 {
                        continue;
                    }
                    if let Some(coef) = aug.absorb_coef(e, lo, hi) {
                        let src = s & !(1 << e);
                        sources.push((src, aug.transition(src as u32, e)? * coef));
                    }
                }
                Ok(BlockPlan {
                    forward: taus.iter().map(|&t| expm(&(g * C64::from(t)))).collect::<Result<_>>()?,
                    backward: taus.iter().map(|&t| expm(&(g * C64::from(-t)))).collect::<Result<_>>()?,
                    full: expm(&(g * C64::from(h)))?,
                    sources,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let half = 0.5 * h;
        let mut at_nodes: Vec<Vec<DVector<C64>>> = aug
            .dims
            .iter()
            .map(|&d| vec![DVector::zeros(d); n])
            .collect();
        for _ in 0..panels {
            let mut next = y.clone();
            for &s in &order {
                let plan = &plans[s];
                let d = aug.dims[s];
                let phi: Vec<DVector<C64>> = (0..n)
                    .map(|j| {
                        let mut g = DVector::<C64>::zeros(d);
                        for (src, map) in &plan.sources {
                            g += map * &at_nodes[*src][j];
                        }
                        &plan.backward[j] * g
                    })
                    .collect();
                for (j, slot) in at_nodes[s].iter_mut().enumerate().take(n) {
                    let mut z = y[s].clone();
                    for (k, p) in phi.iter().enumerate() {
                        z += p * C64::from(half * rule.cumulative[j][k]);
                    }
                    *slot = &plan.forward[j] * z;
                }
                let mut z = y[s].clone();
                for (k, p) in phi.iter().enumerate() {
                    z += p * C64::from(half * rule.weights[k]);
                }
                next[s] = &plan.full * z;
            }
            y = next;
        }
    }
    Ok(aug.model.coef * y[n_sub - 1][0])
}
