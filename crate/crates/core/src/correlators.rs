//! Two-time and four-time dipole correlators of the pulsed emitter.

use std::cell::RefCell;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{C64, ZERO};
use crate::liouville::{
    build_liouvillian, left_mult, right_mult, Op, RateSet, StateVector, Superoperator,
};
use crate::regression::RegressionEngine;

/// How a correlator value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    StandardQrt,
    GeneralizedQrt,
    AppendixReduction,
    ForcedZero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelatorValue {
    pub value: C64,
    pub provenance: Provenance,
}

/// Time arguments of `⟨σ†σ⟩` or `⟨σ†σ†σσ⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeTuple {
    times: Vec<f64>,
}

impl TimeTuple {
    pub fn new(times: &[f64]) -> Result<Self> {
        if times.len() != 2 && times.len() != 4 {
            return Err(Error::Usage(format!(
                "correlators take 2 or 4 times, got {}",
                times.len()
            )));
        }
        for &t in times {
            if !t.is_finite() || t < 0.0 {
                return Err(Error::Domain(format!("times must be finite and >= 0, got {t}")));
            }
        }
        Ok(Self { times: times.to_vec() })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Operator at each product position.
    pub fn ops(&self) -> &'static [Op] {
        if self.times.len() == 2 {
            &[Op::Raise, Op::Lower]
        } else {
            &[Op::Raise, Op::Raise, Op::Lower, Op::Lower]
        }
    }

    fn pairs(&self) -> Vec<(f64, Op)> {
        self.times.iter().copied().zip(self.ops().iter().copied()).collect()
    }
}

/// Correlator evaluator for one rate set, with call-local propagator caches.
#[derive(Debug)]
pub struct CorrelatorEngine {
    rates: RateSet,
    l_on: Superoperator,
    l_off: Superoperator,
    regression: RegressionEngine,
    cache: RefCell<HashMap<(bool, u64), Superoperator>>,
}

impl CorrelatorEngine {
    pub fn new(rates: &RateSet) -> Self {
        Self {
            rates: *rates,
            l_on: build_liouvillian(rates, true),
            l_off: build_liouvillian(rates, false),
            regression: RegressionEngine::new(rates),
            cache: RefCell::new(HashMap::new()),
        }
    }

    pub fn rates(&self) -> &RateSet {
        &self.rates
    }

    fn step(&self, pump_on: bool, dt: f64) -> Result<Superoperator> {
        let key = (pump_on, dt.to_bits());
        if let Some(s) = self.cache.borrow().get(&key) {
            return Ok(*s);
        }
        let l = if pump_on { &self.l_on } else { &self.l_off };
        let s = l.exp(dt)?;
        let mut cache = self.cache.borrow_mut();
        if cache.len() > 100_000 {
            cache.clear();
        }
        cache.insert(key, s);
        Ok(s)
    }

    fn forward(&self, x: StateVector, from: f64, to: f64) -> Result<StateVector> {
        let t = self.rates.pulse_t;
        let mut x = x;
        let mut from = from;
        if from < t && to > from {
            let end = to.min(t);
            x = self.step(true, end - from)?.apply(&x);
            from = end;
        }
        if to > from {
            x = self.step(false, to - from)?.apply(&x);
        }
        Ok(x)
    }

    /// Standard regression (insertion procedure over ascending times).
    /// Returns `None` for out-of-time-order products.
    pub fn standard_qrt(&self, ops: &[(f64, Op)]) -> Result<Option<C64>> {
        let mut steps: Vec<f64> = ops.iter().map(|o| o.0).collect();
        steps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        steps.dedup();
        let mut x = StateVector::ground();
        let mut now = 0.0;
        for (k, &ts) in steps.iter().enumerate() {
            x = self.forward(x, now, ts)?;
            now = ts;
            let here: Vec<usize> = (0..ops.len()).filter(|&j| ops[j].0 == ts).collect();
            if k + 1 == steps.len() {
                for &j in here.iter().rev() {
                    x = left_mult(ops[j].1).apply(&x);
                }
                return Ok(Some(x.trace()));
            }
            let later: Vec<usize> = (0..ops.len()).filter(|&j| ops[j].0 > ts).collect();
            let mut rights = Vec::new();
            let mut lefts = Vec::new();
            for &j in &here {
                if later.iter().all(|&m| m > j) {
                    rights.push(j);
                } else if later.iter().all(|&m| m < j) {
                    lefts.push(j);
                } else {
                    return Ok(None);
                }
            }
            for &j in &rights {
                x = right_mult(ops[j].1).apply(&x);
            }
            for &j in lefts.iter().rev() {
                x = left_mult(ops[j].1).apply(&x);
            }
        }
        Ok(Some(x.trace()))
    }

    /// Generalized regression path, valid for every time order.
    pub fn generalized_qrt(&self, ops: &[(f64, Op)]) -> Result<C64> {
        self.regression.correlate(ops)
    }

    /// `⟨σ†(t1) σ(t2)⟩`.
    pub fn two_time(&self, t1: f64, t2: f64) -> Result<CorrelatorValue> {
        let tuple = TimeTuple::new(&[t1, t2])?;
        let v = self
            .standard_qrt(&tuple.pairs())?
            .expect("two-operator products are always time ordered");
        Ok(CorrelatorValue {
            value: v,
            provenance: Provenance::StandardQrt,
        })
    }

    /// `⟨σ†(t1) σ†(t2) σ(t3) σ(t4)⟩` for any order of the times.
    pub fn four_time(&self, t1: f64, t2: f64, t3: f64, t4: f64) -> Result<CorrelatorValue> {
        let tuple = TimeTuple::new(&[t1, t2, t3, t4])?;
        if t1 == t2 || t3 == t4 {
            return Ok(CorrelatorValue {
                value: ZERO,
                provenance: Provenance::ForcedZero,
            });
        }
        let pairs = tuple.pairs();
        if let Some(v) = self.standard_qrt(&pairs)? {
            return Ok(CorrelatorValue {
                value: v,
                provenance: Provenance::StandardQrt,
            });
        }
        Ok(CorrelatorValue {
            value: self.generalized_qrt(&pairs)?,
            provenance: Provenance::GeneralizedQrt,
        })
    }

    /// Closed-form reduction of a four-time correlator with times past the
    /// pulse to boundary correlators with every time inside it.
    pub fn appendix_reduction(
        &self,
        t1: f64,
        t2: f64,
        t3: f64,
        t4: f64,
    ) -> Result<Option<CorrelatorValue>> {
        let ts = TimeTuple::new(&[t1, t2, t3, t4])?;
        let t = self.rates.pulse_t;
        let beyond: Vec<usize> = (0..4).filter(|&i| ts.times[i] > t).collect();
        let zero = Ok(Some(CorrelatorValue {
            value: ZERO,
            provenance: Provenance::ForcedZero,
        }));
        let g_off = self.rates.transverse_off();
        let g_d = self.rates.gamma_diss;
        let boundary = |clamped: &[usize]| -> Result<C64> {
            let mut b = ts.times.clone();
            for &i in clamped {
                b[i] = t;
            }
            Ok(self.four_time(b[0], b[1], b[2], b[3])?.value)
        };
        let factor = match beyond.as_slice() {
            [] => return Ok(None),
            [i] => (-g_off * (ts.times[*i] - t)).exp(),
            [0, 1] | [2, 3] => return zero,
            [a, b] => {
                let (ta, tb) = (ts.times[*a], ts.times[*b]);
                (-g_off * (ta - tb).abs()).exp() * (-g_d * (ta.min(tb) - t)).exp()
            }
            _ => return zero,
        };
        Ok(Some(CorrelatorValue {
            value: boundary(&beyond)? * factor,
            provenance: Provenance::AppendixReduction,
        }))
    }
}

/// `⟨σ†(t1) σ(t2)⟩` in the rotating frame.
pub fn two_time(t1: f64, t2: f64, rates: &RateSet) -> Result<CorrelatorValue> {
    CorrelatorEngine::new(rates).two_time(t1, t2)
}

/// `⟨σ†(t1) σ†(t2) σ(t3) σ(t4)⟩` in the rotating frame.
pub fn four_time(t1: f64, t2: f64, t3: f64, t4: f64, rates: &RateSet) -> Result<CorrelatorValue> {
    CorrelatorEngine::new(rates).four_time(t1, t2, t3, t4)
}

pub fn appendix_reduction(
    t1: f64,
    t2: f64,
    t3: f64,
    t4: f64,
    rates: &RateSet,
) -> Result<Option<CorrelatorValue>> {
    CorrelatorEngine::new(rates).appendix_reduction(t1, t2, t3, t4)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::liouville::density_matrix_at;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm().max(1e-300) || (a - b).norm() < 1e-15
    }

    #[test]
    fn tuple_validation() {
        assert!(TimeTuple::new(&[1.0]).is_err());
        assert!(TimeTuple::new(&[1.0, -0.1]).is_err());
        assert!(TimeTuple::new(&[1.0, f64::NAN, 0.0, 0.0]).is_err());
        assert!(two_time(-1.0, 0.0, &RateSet::new(1.0, 0.0, 1.0).unwrap()).is_err());
    }

    #[test]
    fn equal_times_give_population() {
        let r = RateSet::new(2.0, 1.0, 0.6).unwrap();
        for &t in &[0.0, 0.3, 0.6, 1.9] {
            let v = two_time(t, t, &r).unwrap().value;
            let p = density_matrix_at(t, &r).unwrap().excited_population();
            assert!(v.im.abs() < 1e-15 && (v.re - p).abs() < 1e-14);
        }
    }

    #[test]
    fn quasi_steady_state_decay() {
        // p = 1/2 and Γ = 6: 0.5 · e^{-0.6}.
        let r = RateSet::new(1.0, 10.0, 100.0).unwrap();
        let v = two_time(30.0, 30.1, &r).unwrap().value;
        assert!(close(v, c(0.5 * (-0.6f64).exp(), 0.0), 1e-12));
        assert!((v.re - 0.2744).abs() < 1e-4);
    }

    #[test]
    fn within_pump_two_time_decay() {
        let r = RateSet::new(0.8, 2.0, 3.0).unwrap();
        let big_gamma = r.derived().transverse;
        for &(t1, t2) in &[(0.1, 0.5), (1.0, 3.0), (0.0, 2.0), (2.2, 2.3)] {
            let v = two_time(t1, t2, &r).unwrap().value.norm();
            let p = density_matrix_at(t1, &r).unwrap().excited_population();
            assert!((v - p * (-big_gamma * (t2 - t1)).exp()).abs() < 1e-9 * p.max(1e-300));
        }
    }

    #[test]
    fn two_time_hermiticity() {
        let r = RateSet::new(0.8, 2.0, 1.0).unwrap();
        let e = CorrelatorEngine::new(&r);
        for &(a, b) in &[(0.1, 0.5), (1.2, 0.2), (3.0, 0.9)] {
            let x = e.two_time(a, b).unwrap().value;
            let y = e.two_time(b, a).unwrap().value;
            assert!(close(x, y.conj(), 1e-14));
        }
    }

    #[test]
    fn equal_times_four_time_vanish() {
        let r = RateSet::new(0.8, 2.0, 1.0).unwrap();
        let v = four_time(0.4, 0.4, 0.4, 0.4, &r).unwrap();
        assert_eq!(v.value, ZERO);
        assert_eq!(v.provenance, Provenance::ForcedZero);
    }

    #[test]
    fn standard_and_generalized_paths_agree_on_time_ordered_tuples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let r = RateSet::new(rng.gen_range(0.0..4.0), rng.gen_range(0.0..6.0), rng.gen_range(0.0..2.0)).unwrap();
            let e = CorrelatorEngine::new(&r);
            let ts: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..3.0)).collect();
            let pairs: Vec<(f64, Op)> = ts
                .iter()
                .copied()
                .zip([Op::Raise, Op::Raise, Op::Lower, Op::Lower])
                .collect();
            if let Some(v) = e.standard_qrt(&pairs).unwrap() {
                let g = e.generalized_qrt(&pairs).unwrap();
                assert!((v - g).norm() < 1e-12, "{ts:?}: {v} vs {g}");
            }
        }
    }

    #[test]
    fn provenance_tags() {
        let r = RateSet::new(1.0, 1.0, 2.0).unwrap();
        let e = CorrelatorEngine::new(&r);
        assert_eq!(e.four_time(0.1, 0.2, 0.3, 0.4).unwrap().provenance, Provenance::StandardQrt);
        assert_eq!(e.four_time(0.1, 0.3, 0.4, 0.2).unwrap().provenance, Provenance::StandardQrt);
        // t2 is the earliest time, flanked by later times on both sides.
        assert_eq!(e.four_time(0.5, 0.1, 0.4, 0.3).unwrap().provenance, Provenance::GeneralizedQrt);
        assert!(e.appendix_reduction(0.1, 0.2, 0.3, 0.4).unwrap().is_none());
        assert_eq!(
            e.appendix_reduction(0.1, 0.2, 0.3, 2.4).unwrap().unwrap().provenance,
            Provenance::AppendixReduction
        );
        assert_eq!(
            e.appendix_reduction(2.1, 2.2, 2.3, 2.4).unwrap().unwrap().provenance,
            Provenance::ForcedZero
        );
    }

    #[test]
    fn single_time_beyond_the_pulse() {
        let r = RateSet::new(1.5, 3.0, 1.0).unwrap();
        let e = CorrelatorEngine::new(&r);
        let v = e.four_time(0.2, 0.7, 0.4, 1.8).unwrap().value;
        let b = e.four_time(0.2, 0.7, 0.4, 1.0).unwrap().value;
        assert!(b.norm() > 1e-6);
        assert!(close(v, b * (-2.0 * 0.8f64).exp(), 1e-10));
    }
}
