//! Generalized quantum regression for products of single-emitter operators
//! with arbitrary time arguments.
//!
//! Operators are absorbed from the latest time backwards into Heisenberg
//! carriers. Absorbed product positions form maximal runs ("groups"); one
//! group is a vectorized 2x2 observable evolving under the adjoint
//! generator, two separated groups form a 16-dimensional tensor `Y ⊗ Z`
//! evolving under the pair generator, which couples the factors through
//! the jump operators. Pairing the final carrier with the initial ground
//! state gives the correlator.

use std::cell::RefCell;
use std::collections::HashMap;

use nalgebra::Matrix2;

use crate::error::{Error, Result};
use crate::linalg::{expm, kron, CMat, C64, ONE};
use crate::liouville::{adjoint_generator, jump_operators, Mat2, Op, RateSet, GG};

/// Most groups a carrier can hold.
pub const MAX_GROUPS: usize = 2;

fn mat2_to_dyn(m: &Mat2) -> CMat {
    CMat::from_fn(2, 2, |i, j| m[(i, j)])
}

fn unit(k: usize) -> Mat2 {
    let mut m = Matrix2::zeros();
    m[(k / 2, k % 2)] = ONE;
    m
}

fn vec_of(m: &Mat2) -> [C64; 4] {
    [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]]
}

/// Maximal runs of consecutive set bits, as inclusive `(first, last)` pairs.
pub fn runs(mask: u32) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut k = 0;
    while k < 32 {
        if mask & (1 << k) != 0 {
            let start = k;
            while k + 1 < 32 && mask & (1 << (k + 1)) != 0 {
                k += 1;
            }
            out.push((start, k));
        }
        k += 1;
    }
    out
}

/// Carrier dimension for an absorbed position set.
pub fn block_dim(mask: u32) -> usize {
    match runs(mask).len() {
        0 => 1,
        1 => 4,
        _ => 16,
    }
}

/// Pair generator acting on `vec(Y) ⊗ vec(Z)` for two separated groups.
pub fn pair_generator(rates: &RateSet, pump_on: bool) -> CMat {
    let d = adjoint_generator(rates, pump_on).to_dynamic();
    let i2 = CMat::identity(2, 2);
    let i4 = CMat::identity(4, 4);
    let mut g = kron(&d, &i4) + kron(&i4, &d);
    for l in jump_operators(rates, pump_on) {
        let l = mat2_to_dyn(&l);
        let ld = l.adjoint();
        let comm_left = kron(&ld, &i2) - kron(&i2, &ld.transpose());
        let comm_right = kron(&i2, &l.transpose()) - kron(&l, &i2);
        g += kron(&comm_left, &comm_right);
    }
    g
}

/// Generator for a carrier holding `groups` groups.
pub fn group_generator(rates: &RateSet, groups: usize, pump_on: bool) -> CMat {
    match groups {
        0 => CMat::zeros(1, 1),
        1 => adjoint_generator(rates, pump_on).to_dynamic(),
        2 => pair_generator(rates, pump_on),
        _ => panic!("carriers hold at most {MAX_GROUPS} groups"),
    }
}

/// Linear map from the carrier of `mask` to the carrier of `mask | 1 << pos`
/// when the operator `op` is absorbed at product position `pos`.
pub fn transition(mask: u32, pos: usize, op: &Mat2) -> Result<CMat> {
    if mask & (1 << pos) != 0 {
        return Err(Error::Usage(format!("position {pos} absorbed twice")));
    }
    let gs = runs(mask);
    let i4 = CMat::identity(4, 4);
    let lm = |a: &Mat2| kron(&mat2_to_dyn(a), &CMat::identity(2, 2));
    let rm = |a: &Mat2| kron(&CMat::identity(2, 2), &mat2_to_dyn(&a.transpose()));
    let vo = CMat::from_iterator(4, 1, vec_of(op));
    let p = pos as isize;
    let out = match gs.as_slice() {
        [] => vo,
        [(lo, hi)] => {
            let (lo, hi) = (*lo as isize, *hi as isize);
            if p == lo - 1 {
                lm(op)
            } else if p == hi + 1 {
                rm(op)
            } else if p < lo {
                kron(&vo, &i4)
            } else {
                kron(&i4, &vo)
            }
        }
        [(llo, lhi), (rlo, rhi)] => {
            let (llo, lhi, rlo, rhi) = (*llo as isize, *lhi as isize, *rlo as isize, *rhi as isize);
            if p == lhi + 1 && p == rlo - 1 {
                let mut m = CMat::zeros(4, 16);
                for a in 0..4 {
                    for b in 0..4 {
                        let v = vec_of(&(unit(a) * op * unit(b)));
                        for (r, z) in v.iter().enumerate() {
                            m[(r, a * 4 + b)] = *z;
                        }
                    }
                }
                m
            } else if p == lhi + 1 {
                kron(&rm(op), &i4)
            } else if p == llo - 1 {
                kron(&lm(op), &i4)
            } else if p == rlo - 1 {
                kron(&i4, &lm(op))
            } else if p == rhi + 1 {
                kron(&i4, &rm(op))
            } else {
                return Err(Error::Usage(format!(
                    "absorbing position {pos} would create more than {MAX_GROUPS} groups"
                )));
            }
        }
        _ => unreachable!("carriers never exceed two groups"),
    };
    Ok(out)
}

/// Operator product evaluator with a per-instance propagator cache.
///
/// The cache is not shared between threads; build one evaluator per worker.
#[derive(Debug)]
pub struct RegressionEngine {
    rates: RateSet,
    generators: [[CMat; 3]; 2],
    cache: RefCell<HashMap<(usize, bool, u64), CMat>>,
}

impl RegressionEngine {
    pub fn new(rates: &RateSet) -> Self {
        let gens = |on: bool| {
            [
                group_generator(rates, 0, on),
                group_generator(rates, 1, on),
                group_generator(rates, 2, on),
            ]
        };
        Self {
            rates: *rates,
            generators: [gens(false), gens(true)],
            cache: RefCell::new(HashMap::new()),
        }
    }

    pub fn rates(&self) -> &RateSet {
        &self.rates
    }

    pub fn generator(&self, groups: usize, pump_on: bool) -> &CMat {
        &self.generators[pump_on as usize][groups]
    }

    fn propagator(&self, groups: usize, pump_on: bool, dt: f64) -> Result<CMat> {
        let key = (groups, pump_on, dt.to_bits());
        if let Some(m) = self.cache.borrow().get(&key) {
            return Ok(m.clone());
        }
        let m = expm(&(self.generator(groups, pump_on) * C64::from(dt)))?;
        let mut cache = self.cache.borrow_mut();
        if cache.len() > 50_000 {
            cache.clear();
        }
        cache.insert(key, m.clone());
        Ok(m)
    }

    /// Evolve a carrier backwards from `hi` down to `lo`.
    fn evolve(&self, x: CMat, mask: u32, lo: f64, hi: f64) -> Result<CMat> {
        let groups = runs(mask).len();
        if groups == 0 || hi <= lo {
            return Ok(x);
        }
        let t = self.rates.pulse_t;
        let mut x = x;
        let mut hi = hi;
        if hi > t {
            let mid = lo.max(t);
            x = self.propagator(groups, false, hi - mid)? * x;
            hi = mid;
        }
        if hi > lo {
            x = self.propagator(groups, true, hi - lo)? * x;
        }
        Ok(x)
    }

    /// `⟨A_0(t_0) A_1(t_1) ... ⟩` for the product of `ops` in list order.
    pub fn correlate(&self, ops: &[(f64, Op)]) -> Result<C64> {
        self.correlate_matrices(&ops.iter().map(|(t, o)| (*t, o.matrix())).collect::<Vec<_>>())
    }

    pub fn correlate_matrices(&self, ops: &[(f64, Mat2)]) -> Result<C64> {
        if ops.is_empty() {
            return Ok(ONE);
        }
        if ops.len() > 31 {
            return Err(Error::Usage("too many operators".into()));
        }
        for (t, _) in ops {
            if !t.is_finite() || *t < 0.0 {
                return Err(Error::Domain(format!("times must be finite and >= 0, got {t}")));
            }
        }
        let mut order: Vec<usize> = (0..ops.len()).collect();
        order.sort_by(|&a, &b| ops[b].0.partial_cmp(&ops[a].0).unwrap());
        let mut mask = 0u32;
        let mut x = CMat::from_element(1, 1, ONE);
        let mut now = ops[order[0]].0;
        for &e in &order {
            let (t, op) = &ops[e];
            x = self.evolve(x, mask, *t, now)?;
            now = *t;
            x = transition(mask, e, op)? * x;
            mask |= 1 << e;
        }
        x = self.evolve(x, mask, 0.0, now)?;
        debug_assert_eq!(x.nrows(), 4);
        Ok(x[(GG, 0)])
    }
}

/// Initial carrier for the empty product.
pub fn empty_carrier() -> CMat {
    CMat::from_element(1, 1, ONE)
}
