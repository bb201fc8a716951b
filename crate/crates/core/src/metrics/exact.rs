//! Semi-analytic evaluation: exact exponentials of the augmented generator.
//!
//! Carrier components that are unreachable from the start vector, or that
//! cannot feed the result component, stay identically zero and are pruned
//! before exponentiation. The remaining block is exponentiated per segment,
//! which integrates every exponential product in closed form, including the
//! confluent cases.

use nalgebra::DVector;

use crate::error::Result;
use crate::linalg::{expm, CMat, C64};
use crate::metrics::model::Augmented;
use crate::regression::RegressionEngine;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactOutcome {
    pub value: C64,
    /// Number of carrier components kept after pruning.
    pub kept: usize,
}

/// Indices reachable from `start` along non-zero entries of any matrix,
/// intersected with the indices that reach `target`.
pub fn live_indices(mats: &[CMat], start: usize, target: usize) -> Vec<usize> {
    let n = mats[0].nrows();
    let walk = |from: usize, forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if seen[j] {
                    continue;
                }
                let linked = mats.iter().any(|m| {
                    let z = if forward { m[(j, i)] } else { m[(i, j)] };
                    z.re != 0.0 || z.im != 0.0
                });
                if linked {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen
    };
    let fwd = walk(start, true);
    let bwd = walk(target, false);
    (0..n).filter(|&i| fwd[i] && bwd[i]).collect()
}

fn restrict(m: &CMat, idx: &[usize]) -> CMat {
    CMat::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

/// Integral of an augmented model by per-segment matrix exponentials.
pub fn integrate(aug: &Augmented, engine: &RegressionEngine) -> Result<ExactOutcome> {
    let segs: Vec<(f64, f64)> = aug
        .breaks
        .windows(2)
        .map(|w| (w[0], w[1]))
        .filter(|(lo, hi)| hi > lo)
        .collect();
    let mats = segs
        .iter()
        .map(|&(lo, hi)| aug.segment_matrix(engine, lo, hi))
        .collect::<Result<Vec<_>>>()?;
    let target = aug.result_index();
    if mats.is_empty() {
        return Ok(ExactOutcome { value: C64::from(0.0), kept: 0 });
    }
    let live = live_indices(&mats, 0, target);
    let Some(start) = live.iter().position(|&i| i == 0) else {
        return Ok(ExactOutcome { value: C64::from(0.0), kept: 0 });
    };
    let Some(out) = live.iter().position(|&i| i == target) else {
        return Ok(ExactOutcome { value: C64::from(0.0), kept: 0 });
    };
    let mut y = DVector::<C64>::zeros(live.len());
    y[start] = C64::from(1.0);
    for (m, &(lo, hi)) in mats.iter().zip(&segs).rev() {
        let r = restrict(m, &live) * C64::from(hi - lo);
        y = expm(&r)? * y;
    }
    Ok(ExactOutcome {
        value: aug.model.coef * y[out],
        kept: live.len(),
    })
}
