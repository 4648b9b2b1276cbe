//! Experiment drivers: seeded data generation and CSV output for the phase
//! transition, convergence, stochastic and certification studies.
//!
//! Every CSV starts with `#` lines echoing the resolved configuration, then
//! a header row. Floats are written with 17 significant digits so reruns
//! with the same seed are byte-identical.

use std::fmt;
use std::io::Write;
use std::path::PathBuf;

use crate::certify::certify_spike_free;
use crate::error::{Error, Result};
use crate::fw::{fw_train, sfw_train, FwConfig, SfwConfig, TrainTrace};
use crate::lmo::{cone_nontrivial, lmo_bruteforce, lmo_relu, LmoOutcome};
use crate::model::{Atom, AtomicMeasure, Dataset};
use crate::num::{whiten, Matrix, RngStream};

pub const TOOL_VERSION: &str = concat!("relufw ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    PhaseTransition,
    TrainFw,
    TrainSfw,
    Certify,
    LmoCheck,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::PhaseTransition => "phase-transition",
            ExperimentKind::TrainFw => "train-fw",
            ExperimentKind::TrainSfw => "train-sfw",
            ExperimentKind::Certify => "certify",
            ExperimentKind::LmoCheck => "lmo-check",
        }
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "phase-transition" => ExperimentKind::PhaseTransition,
            "train-fw" => ExperimentKind::TrainFw,
            "train-sfw" => ExperimentKind::TrainSfw,
            "certify" => ExperimentKind::Certify,
            "lmo-check" => ExperimentKind::LmoCheck,
            other => return Err(Error::InvalidArgument(format!("unknown experiment kind {other:?}"))),
        })
    }
}

/// Inclusive `start:end:step` range of sample counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NRange {
    pub start: usize,
    pub end: usize,
    pub step: usize,
}

impl NRange {
    pub fn values(&self) -> Vec<usize> {
        (self.start..=self.end).step_by(self.step).collect()
    }
}

impl fmt::Display for NRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.end, self.step)
    }
}

impl std::str::FromStr for NRange {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("n-range must look like A:B:STEP, got {s:?}"));
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let [a, b, step] = parts.as_slice() else { return Err(bad()) };
        let parse = |v: &str| v.parse::<usize>().map_err(|_| bad());
        Ok(NRange { start: parse(a)?, end: parse(b)?, step: parse(step)? })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub d: usize,
    pub n: Option<usize>,
    pub n_range: Option<NRange>,
    pub trials: usize,
    pub seed: u64,
    pub delta: f64,
    pub epsilon: f64,
    pub max_iters: usize,
    pub whiten: bool,
    pub teacher_neurons: usize,
    pub rho: f64,
    pub budget: usize,
    pub sfw_g: Option<f64>,
    pub sfw_l: Option<f64>,
    pub sfw_d: Option<f64>,
    pub m_a_hint: Option<usize>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Defaults for each experiment, matching the desk-scale studies.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let (d, n, n_range, trials) = match kind {
            ExperimentKind::PhaseTransition => (20, None, Some(NRange { start: 20, end: 75, step: 5 }), 200),
            ExperimentKind::TrainFw => (25, Some(20), None, 1),
            ExperimentKind::TrainSfw => (20, Some(25), None, 1),
            ExperimentKind::Certify => (10, None, Some(NRange { start: 5, end: 10, step: 5 }), 10),
            ExperimentKind::LmoCheck => (3, Some(3), None, 1),
        };
        Self {
            kind,
            d,
            n,
            n_range,
            trials,
            seed: 0,
            delta: 1.0,
            epsilon: 1e-6,
            max_iters: 200,
            whiten: true,
            teacher_neurons: 10,
            rho: 1.0,
            budget: crate::certify::DEFAULT_BUDGET,
            sfw_g: None,
            sfw_l: None,
            sfw_d: None,
            m_a_hint: None,
            out: None,
        }
    }

    /// Sample counts to sweep: the range when given, else the single `n`.
    pub fn n_values(&self) -> Result<Vec<usize>> {
        if let Some(r) = self.n_range {
            return Ok(r.values());
        }
        self.n.map(|n| vec![n]).ok_or_else(|| Error::InvalidArgument("either n or n-range is required".into()))
    }

    fn single_n(&self) -> Result<usize> {
        self.n.ok_or_else(|| Error::InvalidArgument(format!("{} needs --n", self.kind.as_str())))
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidArgument(msg));
        if self.d == 0 {
            return invalid("d must be positive".into());
        }
        if self.n == Some(0) {
            return invalid("n must be positive".into());
        }
        if let Some(r) = self.n_range {
            if r.start == 0 || r.step == 0 || r.end < r.start {
                return invalid(format!("n-range {r} must be nonempty and increasing"));
            }
        }
        if self.trials == 0 || self.max_iters == 0 || self.teacher_neurons == 0 || self.budget == 0 {
            return invalid("counts (trials, max-iters, teacher-neurons, budget) must be positive".into());
        }
        if !(self.delta > 0.0) || !(self.rho > 0.0) || !(self.epsilon >= 0.0) {
            return invalid("delta and rho must be positive, epsilon nonnegative".into());
        }
        for v in [self.sfw_g, self.sfw_l, self.sfw_d].into_iter().flatten() {
            if !(v > 0.0) {
                return invalid("G, L and D must be positive".into());
            }
        }
        if self.m_a_hint == Some(0) {
            return invalid("m-a-hint must be positive".into());
        }
        if self.kind == ExperimentKind::Certify {
            for n in self.n_values()? {
                if n > self.d {
                    return invalid(format!("certification needs n <= d (n={n}, d={})", self.d));
                }
            }
        }
        Ok(())
    }

    /// `key = value` lines for the CSV preamble, every field included.
    pub fn echo_lines(&self) -> Vec<String> {
        let opt = |v: Option<String>| v.unwrap_or_else(|| "none".into());
        vec![
            format!("kind = {}", self.kind.as_str()),
            format!("d = {}", self.d),
            format!("n = {}", opt(self.n.map(|v| v.to_string()))),
            format!("n-range = {}", opt(self.n_range.map(|v| v.to_string()))),
            format!("trials = {}", self.trials),
            format!("seed = {}", self.seed),
            format!("delta = {}", fmt_f64(self.delta)),
            format!("epsilon = {}", fmt_f64(self.epsilon)),
            format!("max-iters = {}", self.max_iters),
            format!("whiten = {}", self.whiten),
            format!("teacher-neurons = {}", self.teacher_neurons),
            format!("rho = {}", fmt_f64(self.rho)),
            format!("budget = {}", self.budget),
            format!("G = {}", opt(self.sfw_g.map(fmt_f64))),
            format!("L = {}", opt(self.sfw_l.map(fmt_f64))),
            format!("D = {}", opt(self.sfw_d.map(fmt_f64))),
            format!("m-a-hint = {}", opt(self.m_a_hint.map(|v| v.to_string()))),
        ]
    }
}

/// 17 significant digits, `.` decimal point.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_preamble(out: &mut dyn Write, cfg: &ExperimentConfig, notes: &[&str]) -> Result<()> {
    writeln!(out, "# {TOOL_VERSION}")?;
    for line in cfg.echo_lines() {
        writeln!(out, "# {line}")?;
    }
    for note in notes {
        writeln!(out, "# note: {note}")?;
    }
    Ok(())
}

/// Teacher network and its noiseless dataset.
///
/// `A` is an `n x d` Gaussian draw from stream 0 of `seed`, whitened before
/// labelling when requested; the teacher has unit-norm Gaussian directions
/// and Gaussian output weights rescaled so that `Σ|η| = δ`.
pub fn teacher_dataset(
    n: usize,
    d: usize,
    neurons: usize,
    delta: f64,
    whitened: bool,
    seed: u64,
) -> Result<(Dataset, AtomicMeasure)> {
    let mut rng = RngStream::new(seed, 0);
    let raw = rng.gaussian_matrix(n, d);
    let a = if whitened { whiten(&raw)? } else { raw };
    let directions: Vec<Vec<f64>> = (0..neurons).map(|_| rng.unit_vector(d)).collect();
    let weights = rng.gaussian_vec(neurons);
    let tv: f64 = weights.iter().map(|w| w.abs()).sum();
    let teacher = AtomicMeasure::from_atoms(
        weights.iter().zip(directions).map(|(w, direction)| Atom { weight: delta * w / tv, direction }),
    )?;
    let y = teacher.forward(&a)?;
    let mut data = Dataset::new(a, y)?.with_provenance(seed, 0);
    data.whitened = whitened;
    Ok((data, teacher))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseRow {
    pub n: usize,
    pub trials: usize,
    pub successes: usize,
    pub probability: f64,
}

/// Empirical probability that `{θ : Aθ ≥ 0} ≠ {0}` for (whitened) Gaussian
/// `A`, trial `k` drawing from stream `k`.
pub fn run_phase_transition(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<Vec<PhaseRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for n in cfg.n_values()? {
        let mut successes = 0;
        for trial in 0..cfg.trials {
            let raw = RngStream::new(cfg.seed, trial as u64).gaussian_matrix(n, cfg.d);
            let a = if cfg.whiten { whiten(&raw)? } else { raw };
            if cone_nontrivial(&a)? {
                successes += 1;
            }
        }
        rows.push(PhaseRow { n, trials: cfg.trials, successes, probability: successes as f64 / cfg.trials as f64 });
    }
    write_preamble(out, cfg, &[])?;
    writeln!(out, "n,trials,successes,probability")?;
    for r in &rows {
        writeln!(out, "{},{},{},{}", r.n, r.trials, r.successes, fmt_f64(r.probability))?;
    }
    Ok(rows)
}

/// Deterministic Frank-Wolfe on a noiseless teacher.
pub fn run_convergence(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<TrainTrace> {
    cfg.validate()?;
    let n = cfg.single_n()?;
    let (data, _) = teacher_dataset(n, cfg.d, cfg.teacher_neurons, cfg.delta, cfg.whiten, cfg.seed)?;
    let (_, trace) = fw_train(&data, &FwConfig::new(cfg.delta, cfg.epsilon, cfg.max_iters))?;
    write_preamble(out, cfg, &[])?;
    writeln!(out, "t,loss,gap,atoms,degenerate")?;
    for r in &trace.records {
        let gap = r.gap.expect("deterministic FW records a gap");
        writeln!(out, "{},{},{},{},{}", r.t, fmt_f64(r.loss), fmt_f64(gap), r.atoms, u8::from(r.degenerate_lmo))?;
    }
    Ok(trace)
}

/// Resolved SFW configuration for an experiment (defaults for unset constants).
pub fn sfw_config(cfg: &ExperimentConfig, data: &Dataset) -> Result<SfwConfig> {
    let mut sfw = SfwConfig::with_defaults(data, cfg.delta, cfg.max_iters, RngStream::new(cfg.seed, 1))?;
    if let Some(g) = cfg.sfw_g {
        sfw.g = g;
    }
    if let Some(l) = cfg.sfw_l {
        sfw.l = l;
    }
    if let Some(d) = cfg.sfw_d {
        sfw.d = d;
    }
    sfw.m_a_hint = cfg.m_a_hint;
    Ok(sfw)
}

/// Stochastic Frank-Wolfe on a noiseless teacher; minibatches from stream 1.
pub fn run_sfw(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<TrainTrace> {
    cfg.validate()?;
    let n = cfg.single_n()?;
    let (data, _) = teacher_dataset(n, cfg.d, cfg.teacher_neurons, cfg.delta, cfg.whiten, cfg.seed)?;
    let sfw = sfw_config(cfg, &data)?;
    let (_, trace) = sfw_train(&data, &sfw)?;
    let constants =
        format!("resolved G = {}, L = {}, D = {}", fmt_f64(sfw.g), fmt_f64(sfw.l), fmt_f64(sfw.d));
    write_preamble(out, cfg, &["stochastic Frank-Wolfe produces no valid duality gap", &constants])?;
    writeln!(out, "t,m_t,loss,atoms,degenerate")?;
    for r in &trace.records {
        let m_t = r.batch.expect("SFW records a batch size");
        writeln!(out, "{},{},{},{},{}", r.t, m_t, fmt_f64(r.loss), r.atoms, u8::from(r.degenerate_lmo))?;
    }
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertRow {
    /// Trial index, used as the stream id under the configured seed.
    pub seed: u64,
    pub n: usize,
    pub d: usize,
    pub whitened: bool,
    pub status: &'static str,
    pub max_violation: f64,
    pub sweeps: usize,
}

pub fn run_certification(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<Vec<CertRow>> {
    run_certification_with(cfg, out, |n, d, rng| rng.gaussian_matrix(n, d))
}

/// Certification study with a custom matrix sampler (whitening still applies).
pub fn run_certification_with(
    cfg: &ExperimentConfig,
    out: &mut dyn Write,
    mut sample: impl FnMut(usize, usize, &mut RngStream) -> Matrix,
) -> Result<Vec<CertRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for n in cfg.n_values()? {
        for trial in 0..cfg.trials as u64 {
            let mut rng = RngStream::new(cfg.seed, trial);
            let raw = sample(n, cfg.d, &mut rng);
            let a = if cfg.whiten { whiten(&raw)? } else { raw };
            let report = certify_spike_free(&a, cfg.rho, cfg.budget)?;
            rows.push(CertRow {
                seed: trial,
                n,
                d: cfg.d,
                whitened: cfg.whiten,
                status: report.status.as_str(),
                max_violation: report.max_violation,
                sweeps: report.sweeps,
            });
        }
    }
    write_preamble(out, cfg, &["seed column is the trial stream id under the configured seed"])?;
    writeln!(out, "seed,n,d,whitened,status,max_violation,sweeps")?;
    for r in &rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.seed,
            r.n,
            r.d,
            r.whitened,
            r.status,
            fmt_f64(r.max_violation),
            r.sweeps
        )?;
    }
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct LmoCheck {
    pub outcome: LmoOutcome,
    /// Multi-start lower bound on the true oracle value (divided by δ).
    pub bruteforce: f64,
}

/// Single-instance oracle diagnostic: one Gaussian `A` (optionally
/// whitened) and Gaussian `g`, both from stream 0.
pub fn run_lmo_check(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<LmoCheck> {
    cfg.validate()?;
    let n = cfg.single_n()?;
    let mut rng = RngStream::new(cfg.seed, 0);
    let raw = rng.gaussian_matrix(n, cfg.d);
    let a = if cfg.whiten { whiten(&raw)? } else { raw };
    let g = rng.gaussian_vec(n);
    let outcome = lmo_relu(&a, &g, cfg.delta)?;
    let bruteforce = lmo_bruteforce(&a, &g, cfg.trials.max(50), &mut RngStream::new(cfg.seed, 1));
    write_preamble(out, cfg, &["bruteforce is a multi-start lower bound on max |g'(A theta)_+|"])?;
    writeln!(out, "value,sign,atom_weight,degenerate,bruteforce,theta")?;
    let theta: Vec<String> = outcome.direction.iter().map(|v| fmt_f64(*v)).collect();
    writeln!(
        out,
        "{},{},{},{},{},{}",
        fmt_f64(outcome.value),
        fmt_f64(outcome.sign),
        fmt_f64(outcome.atom_weight),
        u8::from(outcome.degenerate),
        fmt_f64(bruteforce),
        theta.join(" ")
    )?;
    Ok(LmoCheck { outcome, bruteforce })
}

/// Dispatches on `cfg.kind`.
pub fn run(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<()> {
    match cfg.kind {
        ExperimentKind::PhaseTransition => run_phase_transition(cfg, out).map(drop),
        ExperimentKind::TrainFw => run_convergence(cfg, out).map(drop),
        ExperimentKind::TrainSfw => run_sfw(cfg, out).map(drop),
        ExperimentKind::Certify => run_certification(cfg, out).map(drop),
        ExperimentKind::LmoCheck => run_lmo_check(cfg, out).map(drop),
    }
}
