//! Metric integrals expressed as weighted multi-time correlator integrals.
//!
//! An [`EventModel`] describes
//! `coef · ∫ Π_e w_e(s_e) · Π_pairs k(s_a, s_b) · Π_systems ⟨ordered product⟩ ds`,
//! where each event inserts one operator into one emitter copy, each weight
//! is piecewise exponential, and each pair kernel decays with the gap
//! between two event times. The integral is evaluated by augmenting the
//! regression carriers with the set of already absorbed events and marching
//! backwards in time; see [`Augmented`].

use crate::error::{Error, Result};
use crate::filter::FilterSpec;
use crate::linalg::{c, kron, CMat, C64, ONE, ZERO};
use crate::liouville::{Mat2, Op, RateSet};
use crate::regression::{block_dim, runs, transition, RegressionEngine};

/// `coef · exp(-rate · (end - s))` for `s` in `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub start: f64,
    pub end: f64,
    pub coef: C64,
    pub rate: C64,
}

impl Piece {
    pub fn flat(start: f64, end: f64) -> Self {
        Self { start, end, coef: ONE, rate: ZERO }
    }

    pub fn eval(&self, s: f64) -> C64 {
        if s < self.start || s > self.end {
            ZERO
        } else {
            self.coef * (-self.rate * (self.end - s)).exp()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    /// Emitter copy the operator acts on.
    pub system: usize,
    /// Product position within that copy's correlator.
    pub position: usize,
    pub op: Mat2,
    /// Non-overlapping weight pieces in increasing time order.
    pub pieces: Vec<Piece>,
}

impl Event {
    pub fn weight(&self, s: f64) -> C64 {
        self.pieces
            .iter()
            .find(|p| s >= p.start && s <= p.end)
            .map_or(ZERO, |p| p.eval(s))
    }
}

/// `exp(-rate · |s_a - s_b|)` with a rate that depends on which event is later.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairKernel {
    pub a: usize,
    pub b: usize,
    pub rate_a_later: C64,
    pub rate_b_later: C64,
}

impl PairKernel {
    pub fn eval(&self, sa: f64, sb: f64) -> C64 {
        if sa >= sb {
            (-self.rate_a_later * (sa - sb)).exp()
        } else {
            (-self.rate_b_later * (sb - sa)).exp()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventModel {
    pub systems: usize,
    pub events: Vec<Event>,
    pub pairs: Vec<PairKernel>,
    pub coef: C64,
}

impl EventModel {
    pub fn validate(&self) -> Result<()> {
        if self.events.is_empty() || self.events.len() > 8 {
            return Err(Error::Usage("event models hold 1 to 8 events".into()));
        }
        for s in 0..self.systems {
            let mut pos: Vec<usize> = self
                .events
                .iter()
                .filter(|e| e.system == s)
                .map(|e| e.position)
                .collect();
            pos.sort_unstable();
            if pos.iter().enumerate().any(|(i, &p)| i != p) {
                return Err(Error::Usage(format!(
                    "positions of system {s} must be 0..n without gaps"
                )));
            }
        }
        for e in &self.events {
            if e.system >= self.systems {
                return Err(Error::Usage("event refers to a missing system".into()));
            }
            for w in e.pieces.windows(2) {
                if w[0].end > w[1].start {
                    return Err(Error::Usage("weight pieces overlap".into()));
                }
            }
            for p in &e.pieces {
                if !(p.start >= 0.0 && p.end >= p.start && p.end.is_finite()) {
                    return Err(Error::Usage("weight piece has an invalid range".into()));
                }
            }
        }
        for p in &self.pairs {
            if p.a == p.b || p.a >= self.events.len() || p.b >= self.events.len() {
                return Err(Error::Usage("pair kernel refers to invalid events".into()));
            }
        }
        Ok(())
    }

    /// Latest time any weight is non-zero.
    pub fn end(&self) -> f64 {
        self.events
            .iter()
            .flat_map(|e| e.pieces.iter().map(|p| p.end))
            .fold(0.0, f64::max)
    }

    /// Integrand at one time tuple, built from the regression engine.
    pub fn integrand(&self, engine: &RegressionEngine, s: &[f64]) -> Result<C64> {
        let mut v = self.coef;
        for (e, &t) in self.events.iter().zip(s) {
            v *= e.weight(t);
        }
        for p in &self.pairs {
            v *= p.eval(s[p.a], s[p.b]);
        }
        if v == ZERO {
            return Ok(ZERO);
        }
        for sys in 0..self.systems {
            let mut ops: Vec<(usize, f64, Mat2)> = self
                .events
                .iter()
                .zip(s)
                .filter(|(e, _)| e.system == sys)
                .map(|(e, &t)| (e.position, t, e.op))
                .collect();
            ops.sort_by_key(|o| o.0);
            let ops: Vec<(f64, Mat2)> = ops.into_iter().map(|o| (o.1, o.2)).collect();
            v *= engine.correlate_matrices(&ops)?;
        }
        Ok(v)
    }
}

fn event(system: usize, position: usize, op: Op, pieces: Vec<Piece>) -> Event {
    Event { system, position, op: op.matrix(), pieces }
}

/// `∫₀^H ⟨σ†σ⟩(s) ds`.
pub fn emission(horizon: f64) -> EventModel {
    EventModel {
        systems: 1,
        events: vec![event(0, 0, Op::Number, vec![Piece::flat(0.0, horizon)])],
        pairs: vec![],
        coef: ONE,
    }
}

/// `∫∫ x(s1 - s2) ⟨σ†(s1) σ(s2)⟩`, the filtered photon number.
pub fn filtered_number(filter: &FilterSpec, horizon: f64) -> EventModel {
    let k = filter.kappa();
    EventModel {
        systems: 1,
        events: vec![
            event(0, 0, Op::Raise, vec![Piece::flat(0.0, horizon)]),
            event(0, 1, Op::Lower, vec![Piece::flat(0.0, horizon)]),
        ],
        pairs: vec![PairKernel { a: 0, b: 1, rate_a_later: k, rate_b_later: k.conj() }],
        coef: c(filter.gamma_f / 2.0, 0.0),
    }
}

/// Two-photon interference numerator:
/// `∫ x(s1 - s3) x*(s2 - s4) ⟨σ†(s1) σ(s2)⟩ ⟨σ†(s4) σ(s3)⟩`.
pub fn interference(filter: &FilterSpec, horizon: f64) -> EventModel {
    let k = filter.kappa();
    let flat = || vec![Piece::flat(0.0, horizon)];
    EventModel {
        systems: 2,
        events: vec![
            event(0, 0, Op::Raise, flat()),
            event(0, 1, Op::Lower, flat()),
            event(1, 0, Op::Raise, flat()),
            event(1, 1, Op::Lower, flat()),
        ],
        pairs: vec![
            PairKernel { a: 0, b: 3, rate_a_later: k, rate_b_later: k.conj() },
            PairKernel { a: 1, b: 2, rate_a_later: k.conj(), rate_b_later: k },
        ],
        coef: c((filter.gamma_f / 2.0).powi(2), 0.0),
    }
}

fn weighted(ops: &[Op], pieces: impl Fn(Op) -> Vec<Piece>) -> EventModel {
    EventModel {
        systems: 1,
        events: ops
            .iter()
            .enumerate()
            .map(|(i, &op)| event(0, i, op, pieces(op)))
            .collect(),
        pairs: vec![],
        coef: ONE,
    }
}

const PAIR: [Op; 2] = [Op::Raise, Op::Lower];
const QUAD: [Op; 4] = [Op::Raise, Op::Raise, Op::Lower, Op::Lower];

fn kernel_piece(filter: &FilterSpec, op: Op, end: f64) -> Piece {
    let k = filter.kappa();
    let amp = c(0.0, -filter.gamma_f);
    match op {
        Op::Raise => Piece { start: 0.0, end, coef: amp.conj(), rate: k.conj() },
        _ => Piece { start: 0.0, end, coef: amp, rate: k },
    }
}

/// Numerator and denominator base of the filtered `g²` at the end of the pulse.
pub fn filtered_g2_at(filter: &FilterSpec, t: f64) -> (EventModel, EventModel) {
    let pieces = |op| vec![kernel_piece(filter, op, t)];
    (weighted(&QUAD, pieces), weighted(&PAIR, pieces))
}

/// Numerator and denominator base of the unfiltered long-detector `g²`.
pub fn unfiltered_g2(horizon: f64) -> (EventModel, EventModel) {
    let pieces = |_| vec![Piece::flat(0.0, horizon)];
    (weighted(&QUAD, pieces), weighted(&PAIR, pieces))
}

/// Window–kernel weight split into two exponential modes for the lowering
/// operator. The raising operator uses the complex conjugates.
fn window_mode(filter: &FilterSpec, t0: f64, tau: f64, mode: usize, raise: bool) -> Vec<Piece> {
    let k = filter.kappa();
    let g = c(0.0, -filter.gamma_f) / k;
    let conj = |z: C64| if raise { z.conj() } else { z };
    let end = t0 + tau;
    let mut out = Vec::new();
    if mode == 0 {
        if t0 > 0.0 {
            out.push(Piece {
                start: 0.0,
                end: t0,
                coef: conj(g * (ONE - (-k * tau).exp())),
                rate: conj(k),
            });
        }
        out.push(Piece { start: t0, end, coef: conj(g), rate: ZERO });
    } else {
        out.push(Piece { start: t0, end, coef: conj(-g), rate: conj(k) });
    }
    out
}

/// Mode expansions of the detector-window `g²` numerator (16 models) and
/// denominator base (4 models).
pub fn detector_window(
    filter: &FilterSpec,
    t0: f64,
    tau: f64,
) -> (Vec<EventModel>, Vec<EventModel>) {
    let expand = |ops: &[Op]| {
        let n = ops.len();
        (0..1usize << n)
            .map(|modes| EventModel {
                systems: 1,
                events: ops
                    .iter()
                    .enumerate()
                    .map(|(i, &op)| {
                        let m = (modes >> i) & 1;
                        event(0, i, op, window_mode(filter, t0, tau, m, op == Op::Raise))
                    })
                    .collect(),
                pairs: vec![],
                coef: ONE,
            })
            .collect::<Vec<_>>()
    };
    (expand(&QUAD), expand(&PAIR))
}

/// Block layout of the augmented carrier: one block per absorbed-event subset.
#[derive(Debug, Clone)]
pub struct Augmented {
    pub model: EventModel,
    pub offsets: Vec<usize>,
    pub dims: Vec<usize>,
    pub total: usize,
    /// Time breakpoints in increasing order, from 0 to the model end.
    pub breaks: Vec<f64>,
}

impl Augmented {
    pub fn new(model: &EventModel, pulse_t: f64) -> Result<Self> {
        model.validate()?;
        let n = model.events.len();
        let mut offsets = Vec::with_capacity(1 << n);
        let mut dims = Vec::with_capacity(1 << n);
        let mut total = 0;
        for s in 0..1u32 << n {
            let d: usize = (0..model.systems)
                .map(|sys| block_dim(system_mask(model, s, sys)))
                .product();
            offsets.push(total);
            dims.push(d);
            total += d;
        }
        let end = model.end();
        let mut breaks = vec![0.0, end];
        if pulse_t > 0.0 && pulse_t < end {
            breaks.push(pulse_t);
        }
        for e in &model.events {
            for p in &e.pieces {
                for b in [p.start, p.end] {
                    if b > 0.0 && b < end {
                        breaks.push(b);
                    }
                }
            }
        }
        breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breaks.dedup();
        Ok(Self { model: model.clone(), offsets, dims, total, breaks })
    }

    pub fn subsets(&self) -> usize {
        self.offsets.len()
    }

    /// Index of the result component in the full-subset block.
    pub fn result_index(&self) -> usize {
        self.offsets[self.subsets() - 1]
    }

    /// Per-system carrier masks of subset `s`.
    pub fn masks(&self, s: u32) -> Vec<u32> {
        (0..self.model.systems).map(|sys| system_mask(&self.model, s, sys)).collect()
    }

    /// Piece of event `e` covering `[lo, hi]`.
    pub fn piece(&self, e: usize, lo: f64, hi: f64) -> Option<(usize, &Piece)> {
        self.model.events[e]
            .pieces
            .iter()
            .enumerate()
            .find(|(_, p)| p.start <= lo && p.end >= hi)
    }

    /// Scalar shift of the block for subset `s` on segment `[lo, hi]`.
    pub fn shift(&self, s: u32, lo: f64, hi: f64) -> C64 {
        let mut sh = ZERO;
        for e in 0..self.model.events.len() {
            if s & (1 << e) == 0 {
                if let Some((_, p)) = self.piece(e, lo, hi) {
                    sh -= p.rate;
                }
            }
        }
        for p in &self.model.pairs {
            let ina = s & (1 << p.a) != 0;
            let inb = s & (1 << p.b) != 0;
            if ina && !inb {
                sh -= p.rate_a_later;
            } else if inb && !ina {
                sh -= p.rate_b_later;
            }
        }
        sh
    }

    /// Coefficient attached to absorbing event `e` on segment `[lo, hi]`,
    /// or `None` when its weight vanishes there.
    pub fn absorb_coef(&self, e: usize, lo: f64, hi: f64) -> Option<C64> {
        let (idx, p) = self.piece(e, lo, hi)?;
        let later: C64 = self.model.events[e].pieces[idx + 1..]
            .iter()
            .map(|q| q.rate * (q.end - q.start))
            .sum();
        Some(p.coef * later.exp())
    }

    /// Block generator for subset `s` on `[lo, hi]`, excluding transitions.
    pub fn block_generator(&self, engine: &RegressionEngine, s: u32, lo: f64, hi: f64) -> CMat {
        let on = hi <= engine.rates().pulse_t;
        let masks = self.masks(s);
        let dims: Vec<usize> = masks.iter().map(|&m| block_dim(m)).collect();
        let d = self.dims[s as usize];
        let mut g = CMat::zeros(d, d);
        for (k, &m) in masks.iter().enumerate() {
            let gk = engine.generator(runs(m).len(), on);
            let before: usize = dims[..k].iter().product();
            let after: usize = dims[k + 1..].iter().product();
            g += kron(&kron(&CMat::identity(before, before), gk), &CMat::identity(after, after));
        }
        let sh = self.shift(s, lo, hi);
        for i in 0..d {
            g[(i, i)] += sh;
        }
        g
    }

    /// Map from the block of `s` to the block of `s | 1 << e`.
    pub fn transition(&self, s: u32, e: usize) -> Result<CMat> {
        let ev = &self.model.events[e];
        let masks = self.masks(s);
        let dims: Vec<usize> = masks.iter().map(|&m| block_dim(m)).collect();
        let t = transition(masks[ev.system], ev.position, &ev.op)?;
        let before: usize = dims[..ev.system].iter().product();
        let after: usize = dims[ev.system + 1..].iter().product();
        Ok(kron(&kron(&CMat::identity(before, before), &t), &CMat::identity(after, after)))
    }

    /// Full augmented generator on `[lo, hi]`.
    pub fn segment_matrix(&self, engine: &RegressionEngine, lo: f64, hi: f64) -> Result<CMat> {
        let mut m = CMat::zeros(self.total, self.total);
        let n = self.model.events.len();
        for s in 0..self.subsets() as u32 {
            let (o, d) = (self.offsets[s as usize], self.dims[s as usize]);
            m.view_mut((o, o), (d, d))
                .copy_from(&self.block_generator(engine, s, lo, hi));
            for e in 0..n {
                if s & (1 << e) == 0 {
                    continue;
                }
                let Some(coef) = self.absorb_coef(e, lo, hi) else { continue };
                let src = s & !(1 << e);
                let (so, sd) = (self.offsets[src as usize], self.dims[src as usize]);
                let t = self.transition(src, e)? * coef;
                let mut view = m.view_mut((o, so), (d, sd));
                view += t;
            }
        }
        Ok(m)
    }

    /// Start vector: the empty product.
    pub fn initial(&self) -> nalgebra::DVector<C64> {
        let mut v = nalgebra::DVector::zeros(self.total);
        v[0] = ONE;
        v
    }
}

fn system_mask(model: &EventModel, s: u32, sys: usize) -> u32 {
    model
        .events
        .iter()
        .enumerate()
        .filter(|(i, e)| e.system == sys && s & (1 << i) != 0)
        .fold(0, |m, (_, e)| m | (1 << e.position))
}

/// Horizon for integrals over `[0, ∞)`.
pub fn horizon(rates: &RateSet, horizon_factor: f64) -> f64 {
    let slowest = rates.gamma_diss.min(rates.transverse_off());
    rates.pulse_t + horizon_factor / slowest
}
