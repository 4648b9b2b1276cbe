//! Frank-Wolfe and stochastic Frank-Wolfe training loops.
//!
//! Both start from the zero measure and take the step `λ_t = 2/(t+1)`:
//! every existing weight is scaled by `1 − λ_t` and the oracle atom enters
//! with weight `λ_t · (±δ)`, so the total variation never exceeds `δ`.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::lmo::{lmo_relu, LmoOutcome};
use crate::model::{loss_of_predictions, Atom, AtomicMeasure, Dataset};
use crate::num::{norm2, spectral_norm, Matrix, RngStream};

#[derive(Debug, Clone)]
pub struct FwConfig {
    /// Radius of the variation-norm ball.
    pub delta: f64,
    /// Stop once the duality gap is at most this.
    pub epsilon: f64,
    pub t_max: usize,
    pub record_trace: bool,
}

impl FwConfig {
    pub fn new(delta: f64, epsilon: f64, t_max: usize) -> Self {
        Self { delta, epsilon, t_max, record_trace: true }
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidArgument(format!("delta must be positive, got {}", self.delta)));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::InvalidArgument(format!("epsilon must be nonnegative, got {}", self.epsilon)));
        }
        if self.t_max == 0 {
            return Err(Error::InvalidArgument("t_max must be at least 1".into()));
        }
        Ok(())
    }
}

/// How SFW draws its minibatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampling {
    /// `m_t` indices i.i.d. uniform with replacement.
    #[default]
    Iid,
    /// The full index set every iteration (reduces SFW to plain FW).
    FullBatch,
}

#[derive(Debug, Clone)]
pub struct SfwConfig {
    pub delta: f64,
    /// Bound on the Lipschitz constants of the per-sample gradients.
    pub g: f64,
    /// Smoothness constant.
    pub l: f64,
    /// Diameter of the feasible set.
    pub d: f64,
    pub t_max: usize,
    /// Largest subset size believed to keep the LMO exact.
    pub m_a_hint: Option<usize>,
    pub rng: RngStream,
    pub sampling: Sampling,
}

impl SfwConfig {
    /// Default constants `G = 2δ σ_max(A) max_i ‖a_i‖ + 2‖y‖`, `L = 2`,
    /// `D = 2δ`.
    pub fn with_defaults(data: &Dataset, delta: f64, t_max: usize, rng: RngStream) -> Result<Self> {
        let (g, l, d) = default_constants(data, delta)?;
        Ok(Self { delta, g, l, d, t_max, m_a_hint: None, rng, sampling: Sampling::Iid })
    }

    /// Largest `t` with `m_t ≤ m_A`, i.e. `⌊LD√m_A / G⌋ − 1` (at least 1).
    pub fn iteration_cap(&self) -> Option<usize> {
        self.m_a_hint.map(|m| {
            let bound = self.l * self.d * (m as f64).sqrt() / self.g - 1.0;
            // guard the floor against rounding right at an integer
            let mut t = bound.floor().max(1.0) as usize;
            while t > 1 && raw_schedule(t, self) > m as f64 + 1e-9 {
                t -= 1;
            }
            t
        })
    }

    /// `t_max` after clamping to the cap implied by `m_a_hint`.
    pub fn effective_t_max(&self) -> usize {
        match self.iteration_cap() {
            Some(cap) => self.t_max.min(cap),
            None => self.t_max,
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [("delta", self.delta), ("G", self.g), ("L", self.l), ("D", self.d)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if self.t_max == 0 {
            return Err(Error::InvalidArgument("t_max must be at least 1".into()));
        }
        if self.m_a_hint == Some(0) {
            return Err(Error::InvalidArgument("m_A hint must be positive".into()));
        }
        Ok(())
    }
}

pub fn default_constants(data: &Dataset, delta: f64) -> Result<(f64, f64, f64)> {
    let smax = spectral_norm(&data.a)?;
    let max_row = (0..data.n()).map(|i| norm2(data.a.row(i))).fold(0.0, f64::max);
    let g = 2.0 * delta * smax * max_row + 2.0 * norm2(&data.y);
    // a zero dataset would give G = 0; keep the schedule well defined
    Ok((g.max(f64::MIN_POSITIVE), 2.0, 2.0 * delta))
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub t: usize,
    /// Full-data loss of `μ_t`.
    pub loss: f64,
    /// Duality gap at `μ_t`; `None` for SFW.
    pub gap: Option<f64>,
    pub atoms: usize,
    pub total_variation: f64,
    pub degenerate_lmo: bool,
    /// Minibatch size (SFW only).
    pub batch: Option<usize>,
    /// Seconds since the start of training.
    pub elapsed: f64,
}

#[derive(Debug, Clone, Default)]
pub struct TrainTrace {
    pub records: Vec<IterationRecord>,
    /// Oracle atoms in order of appearance (`None` for degenerate calls).
    pub oracle_atoms: Vec<Option<Atom>>,
    pub final_measure: AtomicMeasure,
}

/// FW duality gap `Σ_i g_i (f_μ(a_i) − f_d(a_i))`.
pub fn duality_gap(g: &[f64], mu: &AtomicMeasure, outcome: &LmoOutcome, a: &Matrix) -> Result<f64> {
    let current = mu.forward(a)?;
    gap_from_predictions(g, &current, outcome, a)
}

fn gap_from_predictions(g: &[f64], current: &[f64], outcome: &LmoOutcome, a: &Matrix) -> Result<f64> {
    if g.len() != a.rows() || current.len() != a.rows() {
        return Err(Error::Shape("gap inputs of inconsistent length".into()));
    }
    let vertex = outcome.predictions(a)?;
    Ok(g.iter().zip(current.iter().zip(&vertex)).map(|(gi, (c, v))| gi * (c - v)).sum())
}

/// `(1 − λ) μ + λ · atom`, or just the shrink when the oracle was degenerate.
fn fw_step(mu: &mut AtomicMeasure, outcome: &LmoOutcome, lambda: f64) -> Result<Option<Atom>> {
    mu.scale(1.0 - lambda);
    if outcome.degenerate {
        return Ok(None);
    }
    let atom = Atom { weight: outcome.atom_weight, direction: outcome.direction.clone() };
    mu.push(Atom { weight: lambda * atom.weight, direction: atom.direction.clone() })?;
    Ok(Some(atom))
}

fn step_size(t: usize) -> f64 {
    2.0 / (t as f64 + 1.0)
}

/// Frank-Wolfe with the exact ReLU oracle.
///
/// Iteration `t` evaluates loss and gap at `μ_t`, then stops if the gap is
/// at most `ε` or `t = t_max`; otherwise it moves to `μ_{t+1}`. The returned
/// measure is the last evaluated iterate.
pub fn fw_train(data: &Dataset, cfg: &FwConfig) -> Result<(AtomicMeasure, TrainTrace)> {
    cfg.validate()?;
    let start = Instant::now();
    let mut mu = AtomicMeasure::empty();
    let mut trace = TrainTrace::default();
    for t in 1..=cfg.t_max {
        let pred = mu.forward(&data.a)?;
        let g: Vec<f64> = pred.iter().zip(&data.y).map(|(f, y)| 2.0 * (f - y)).collect();
        let outcome = lmo_relu(&data.a, &g, cfg.delta)?;
        let gap = gap_from_predictions(&g, &pred, &outcome, &data.a)?;
        if cfg.record_trace {
            trace.records.push(IterationRecord {
                t,
                loss: loss_of_predictions(&pred, &data.y),
                gap: Some(gap),
                atoms: mu.len(),
                total_variation: mu.total_variation(),
                degenerate_lmo: outcome.degenerate,
                batch: None,
                elapsed: start.elapsed().as_secs_f64(),
            });
        }
        if gap <= cfg.epsilon || t == cfg.t_max {
            break;
        }
        let atom = fw_step(&mut mu, &outcome, step_size(t))?;
        trace.oracle_atoms.push(atom);
    }
    trace.final_measure = mu.clone();
    Ok((mu, trace))
}

fn raw_schedule(t: usize, cfg: &SfwConfig) -> f64 {
    (cfg.g * (t as f64 + 1.0) / (cfg.l * cfg.d)).powi(2)
}

/// `m_t = ⌈(G(t+1)/(LD))²⌉`, clamped to `[1, n]` and to the `m_A` hint.
pub fn minibatch_schedule(t: usize, cfg: &SfwConfig, n: usize) -> usize {
    let raw = raw_schedule(t.max(1), cfg);
    // absorb rounding noise right at an integer before taking the ceiling
    let mut m = if raw >= (n as f64) { n } else { (raw - 1e-9 * raw.max(1.0)).ceil().max(1.0) as usize };
    if let Some(hint) = cfg.m_a_hint {
        m = m.min(hint);
    }
    m.clamp(1, n.max(1))
}

/// Stochastic Frank-Wolfe: the oracle sees only `m_t` sampled rows with the
/// gradient rescaled by `n / m_t`. Runs exactly `effective_t_max()`
/// iterations; no gap is reported.
pub fn sfw_train(data: &Dataset, cfg: &SfwConfig) -> Result<(AtomicMeasure, TrainTrace)> {
    cfg.validate()?;
    let start = Instant::now();
    let n = data.n();
    let mut rng = cfg.rng.clone();
    let t_max = cfg.effective_t_max();
    let mut mu = AtomicMeasure::empty();
    let mut trace = TrainTrace::default();
    for t in 1..=t_max {
        let batch = match cfg.sampling {
            Sampling::Iid => minibatch_schedule(t, cfg, n),
            Sampling::FullBatch => n,
        };
        let idx: Vec<usize> = match cfg.sampling {
            Sampling::Iid => (0..batch).map(|_| rng.index(n)).collect(),
            Sampling::FullBatch => (0..n).collect(),
        };
        let a_sub = data.a.select_rows(&idx);
        let pred_sub = mu.forward(&a_sub)?;
        let scale = n as f64 / batch as f64;
        let g_sub: Vec<f64> = pred_sub.iter().zip(&idx).map(|(f, &i)| scale * 2.0 * (f - data.y[i])).collect();
        let outcome = lmo_relu(&a_sub, &g_sub, cfg.delta)?;

        let pred = mu.forward(&data.a)?;
        trace.records.push(IterationRecord {
            t,
            loss: loss_of_predictions(&pred, &data.y),
            gap: None,
            atoms: mu.len(),
            total_variation: mu.total_variation(),
            degenerate_lmo: outcome.degenerate,
            batch: Some(batch),
            elapsed: start.elapsed().as_secs_f64(),
        });
        if t == t_max {
            break;
        }
        let atom = fw_step(&mut mu, &outcome, step_size(t))?;
        trace.oracle_atoms.push(atom);
    }
    trace.final_measure = mu.clone();
    Ok((mu, trace))
}
