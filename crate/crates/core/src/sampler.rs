//! Reference Poisson sampling and the birth-death Metropolis-Hastings chain.

use crate::error::{Error, Result};
use crate::geometry::Facet;
use crate::model::ModelParams;
use crate::rng::{chain_init_stream, chain_stream, seek_step, stream_rng};
use crate::stats::{BatchStats, Estimate};
use crate::ustat::{g_increment_of_member, g_vector, FacetPattern, GVector};
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;
use std::io::Write;

/// Finite intensity measure from which births are proposed.
pub trait ReferenceMeasure {
    /// Total mass `lambda_a(Y)`.
    fn total_mass(&self) -> f64;
    /// One facet from the normalised measure.
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Facet;
}

impl ReferenceMeasure for ModelParams {
    fn total_mass(&self) -> f64 {
        self.expected_count()
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Facet {
        self.sample_facet(rng)
    }
}

/// A Poisson pattern with intensity `a * lambda`, drawn from `rng`.
pub fn sample_poisson_with<R: Rng + ?Sized>(p: &ModelParams, rng: &mut R) -> FacetPattern {
    let mean = p.expected_count();
    let n = Poisson::new(mean).expect("positive Poisson mean").sample(rng) as usize;
    let mut x = FacetPattern::new(p.dim()).expect("validated dimension");
    for _ in 0..n {
        // Duplicates have probability zero under continuous center laws.
        let _ = x.insert(p.sample_facet(rng));
    }
    x
}

/// A Poisson pattern with intensity `a * lambda` keyed by `(seed, stream)`.
pub fn sample_poisson(p: &ModelParams, seed: u64, stream: u64) -> FacetPattern {
    sample_poisson_with(p, &mut stream_rng(seed, stream))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MoveKind {
    Birth,
    Death,
}

impl MoveKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MoveKind::Birth => "birth",
            MoveKind::Death => "death",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct StepOutcome {
    pub kind: MoveKind,
    pub accepted: bool,
}

/// Log Metropolis-Hastings ratio for adding `u` to `x` given the increment
/// `delta = G(x ∪ u) - G(x)`.
pub fn birth_log_ratio(delta: &GVector, nu: &[f64], n: usize, total_mass: f64) -> f64 {
    delta.dot(nu) + total_mass.ln() - ((n + 1) as f64).ln()
}

/// Log Metropolis-Hastings ratio for deleting a facet from a pattern with
/// `n >= 1` facets, given that facet's increment `delta` relative to the
/// rest.  This is exactly the negated ratio of the reverse birth.
pub fn death_log_ratio(delta: &GVector, nu: &[f64], n: usize, total_mass: f64) -> f64 {
    -birth_log_ratio(delta, nu, n - 1, total_mass)
}

fn accept<R: Rng + ?Sized>(log_ratio: f64, rng: &mut R) -> bool {
    log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio
}

/// One birth-death step against an arbitrary reference measure.  When
/// `running` is given it is kept equal to `G(x)` by adding or subtracting the
/// accepted increment.
pub fn bdmh_step_with<M: ReferenceMeasure, R: Rng + ?Sized>(
    x: &mut FacetPattern,
    running: Option<&mut GVector>,
    nu: &[f64],
    measure: &M,
    rng: &mut R,
) -> StepOutcome {
    let n = x.len();
    if rng.random::<bool>() {
        let u = measure.draw(rng);
        let Ok(delta) = crate::ustat::g_increment(x, &u) else {
            // Only reachable for atomic reference measures: a duplicate is
            // not a simple pattern, so the proposal is rejected.
            return StepOutcome { kind: MoveKind::Birth, accepted: false };
        };
        let accepted = accept(birth_log_ratio(&delta, nu, n, measure.total_mass()), rng);
        if accepted {
            x.insert_unchecked(u);
            if let Some(g) = running {
                g.add_assign(&delta);
            }
        }
        StepOutcome { kind: MoveKind::Birth, accepted }
    } else {
        if n == 0 {
            return StepOutcome { kind: MoveKind::Death, accepted: false };
        }
        let idx = rng.random_range(0..n);
        let delta = g_increment_of_member(x, idx);
        let accepted = accept(death_log_ratio(&delta, nu, n, measure.total_mass()), rng);
        if accepted {
            x.remove(idx);
            if let Some(g) = running {
                g.sub_assign(&delta);
            }
        }
        StepOutcome { kind: MoveKind::Death, accepted }
    }
}

/// One birth-death Metropolis-Hastings step for the model `p`.
pub fn bdmh_step<R: Rng + ?Sized>(x: &mut FacetPattern, p: &ModelParams, rng: &mut R) -> StepOutcome {
    bdmh_step_with(x, None, p.nu(), p, rng)
}

/// Run-length and seeding of one chain.
#[derive(Clone, Debug)]
pub struct ChainConfig {
    pub n_steps: u64,
    pub burn_in: u64,
    pub thin: u64,
    pub seed: u64,
    pub chain_index: u64,
    /// Starting pattern; a Poisson draw when absent.
    pub initial: Option<FacetPattern>,
    /// Keep a per-sample trace of `G` in the diagnostics.
    pub record_trace: bool,
    /// Number of batches used for batch-means errors.
    pub batches: usize,
}

impl ChainConfig {
    /// Defaults scaled to the expected point count `aT`: burn-in `10 aT`
    /// steps and thinning `max(1, aT/10)`.
    pub fn for_params(p: &ModelParams, n_steps: u64, seed: u64) -> Self {
        let at = p.expected_count();
        ChainConfig {
            n_steps,
            burn_in: (10.0 * at).ceil() as u64,
            thin: ((at / 10.0).round() as u64).max(1),
            seed,
            chain_index: 0,
            initial: None,
            record_trace: true,
            batches: 32,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_steps <= self.burn_in {
            return Err(Error::InvalidParams(format!(
                "n_steps ({}) must exceed burn_in ({})",
                self.n_steps, self.burn_in
            )));
        }
        if self.thin == 0 {
            return Err(Error::InvalidParams("thin must be >= 1".into()));
        }
        Ok(())
    }

    pub fn retained(&self) -> u64 {
        self.n_steps.saturating_sub(self.burn_in) / self.thin.max(1)
    }
}

/// One retained row of a chain trace.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub step: u64,
    pub n: usize,
    pub g: GVector,
    pub accepted: bool,
    pub kind: MoveKind,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainDiagnostics {
    pub birth_acceptance: f64,
    pub death_acceptance: f64,
    pub retained: u64,
    pub trace: Vec<TraceRow>,
    /// Mean of each `G_j` over retained states, with batch-means errors.
    pub g_mean: Vec<Estimate>,
    pub n_mean: Estimate,
    /// `axes_present[k]`: retained states with exactly `k` axis classes present.
    pub axes_present: Vec<u64>,
    /// `axis_presence[i]`: retained states containing a facet with axis `i`.
    pub axis_presence: Vec<u64>,
}

impl ChainDiagnostics {
    /// Fraction of retained states using at most `k` distinct axis classes.
    pub fn occupancy_at_most(&self, k: usize) -> f64 {
        let hits: u64 = self.axes_present.iter().take(k + 1).sum();
        hits as f64 / self.retained as f64
    }
}

/// A retained chain state handed to streaming consumers.
pub struct ChainState<'a> {
    pub step: u64,
    pub pattern: &'a FacetPattern,
    pub g: &'a GVector,
    pub last: StepOutcome,
}

/// Exact recomputation of the running `G` every this many retained states
/// keeps floating-point drift of the incremental updates bounded.
const RESYNC_EVERY: u64 = 1024;

/// Runs a chain, calling `visit` on each retained state.
pub fn run_chain_streaming(
    p: &ModelParams,
    c: &ChainConfig,
    mut visit: impl FnMut(&ChainState<'_>),
) -> Result<ChainDiagnostics> {
    p.validate()?;
    c.validate()?;
    let d = p.dim();
    let mut x = match &c.initial {
        Some(x0) => {
            if x0.dim() != d {
                return Err(Error::Dimension(x0.dim()));
            }
            x0.clone()
        }
        None => sample_poisson_with(p, &mut stream_rng(c.seed, chain_init_stream(c.chain_index))),
    };
    let mut g = g_vector(&x);
    let mut rng = stream_rng(c.seed, chain_stream(c.chain_index));
    let retained = c.retained();
    let mut stats = BatchStats::new(d + 1, retained, c.batches);
    let mut diag = ChainDiagnostics {
        birth_acceptance: 0.0,
        death_acceptance: 0.0,
        retained: 0,
        trace: Vec::new(),
        g_mean: Vec::new(),
        n_mean: Estimate::exact(0.0),
        axes_present: vec![0; d + 1],
        axis_presence: vec![0; d],
    };
    let (mut births, mut birth_acc, mut deaths, mut death_acc) = (0u64, 0u64, 0u64, 0u64);
    let mut row = vec![0.0; d + 1];
    for step in 1..=c.n_steps {
        seek_step(&mut rng, step);
        let out = bdmh_step_with(&mut x, Some(&mut g), p.nu(), p, &mut rng);
        match out.kind {
            MoveKind::Birth => {
                births += 1;
                birth_acc += out.accepted as u64;
            }
            MoveKind::Death => {
                deaths += 1;
                death_acc += out.accepted as u64;
            }
        }
        if step <= c.burn_in || !(step - c.burn_in).is_multiple_of(c.thin) {
            continue;
        }
        if diag.retained.is_multiple_of(RESYNC_EVERY) {
            g = g_vector(&x);
        }
        diag.retained += 1;
        row[0] = x.len() as f64;
        row[1..].copy_from_slice(g.as_slice());
        stats.push(&row);
        let counts = x.axis_counts();
        diag.axes_present[counts.iter().filter(|&&k| k > 0).count()] += 1;
        for (presence, k) in diag.axis_presence.iter_mut().zip(&counts) {
            *presence += (*k > 0) as u64;
        }
        if c.record_trace {
            diag.trace.push(TraceRow { step, n: x.len(), g: g.clone(), accepted: out.accepted, kind: out.kind });
        }
        visit(&ChainState { step, pattern: &x, g: &g, last: out });
    }
    diag.birth_acceptance = if births > 0 { birth_acc as f64 / births as f64 } else { 0.0 };
    diag.death_acceptance = if deaths > 0 { death_acc as f64 / deaths as f64 } else { 0.0 };
    diag.n_mean = stats.mean(0);
    diag.g_mean = (1..=d).map(|j| stats.mean(j)).collect();
    Ok(diag)
}

/// Runs a chain and collects every retained state.
pub fn run_chain(p: &ModelParams, c: &ChainConfig) -> Result<(Vec<FacetPattern>, ChainDiagnostics)> {
    c.validate()?;
    let mut samples = Vec::with_capacity(c.retained() as usize);
    let diag = run_chain_streaming(p, c, |s| samples.push(s.pattern.clone()))?;
    Ok((samples, diag))
}

/// Writes a trace as CSV with columns `step, n, G_1..G_d, accepted, move`.
pub fn write_trace_csv<W: Write>(out: W, trace: &[TraceRow], d: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["step".to_string(), "n".to_string()];
    header.extend((1..=d).map(|j| format!("G_{j}")));
    header.extend(["accepted".to_string(), "move".to_string()]);
    w.write_record(&header)?;
    for r in trace {
        let mut rec = vec![r.step.to_string(), r.n.to_string()];
        rec.extend(r.g.as_slice().iter().map(|v| v.to_string()));
        rec.push(r.accepted.to_string());
        rec.push(r.kind.as_str().to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
