use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::Serialize;

use super::thinning::pick_index;
use crate::error::{Error, Result};
use crate::hawkes::intensity::{decay_in_place, jump_in_place};
use crate::hawkes::{Event, EventKind, EventLog, IntensityVector, NetworkModel};
use crate::rng::{stream_rng, CONTROL_STREAM, ORGANIC_STREAM};

/// Total events per run before a simulation is stopped and flagged.
pub const DEFAULT_EVENT_CAP: usize = 200_000;

/// Source of incentivized events coupled to the organic process.
///
/// The engine keeps one pending candidate `(user, time)`. Organic events may
/// only bring it forward (`on_organic`); once an incentivized event fires the
/// source is asked for a fresh candidate.
pub trait ControlSource {
    /// First arrival after `from` of the control intensity as it stands,
    /// assuming no further events; `None` if nothing arrives before `tf`.
    fn sample_next(&mut self, rng: &mut ChaCha8Rng, from: f64, tf: f64) -> Result<Option<(usize, f64)>>;

    /// An organic event happened; returns a candidate from whatever control
    /// mass that event adds, if any arrives before `tf`.
    fn on_organic(&mut self, rng: &mut ChaCha8Rng, user: usize, time: f64, tf: f64) -> Result<Option<(usize, f64)>>;

    /// An incentivized event was recorded.
    fn on_incentivized(&mut self, user: usize, time: f64);

    fn diagnostics(&self) -> Option<ControlDiagnostics> {
        None
    }
}

/// Clamp statistics of a feedback control over one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct ControlDiagnostics {
    /// Smallest pre-clamp control component seen (negative means the clamp fired).
    pub min_pre_clamp: f64,
    /// Largest control component seen.
    pub max_control: f64,
    pub evaluations: u64,
}

impl ControlDiagnostics {
    pub fn relative_negativity(&self) -> f64 {
        if self.max_control > 0.0 {
            (-self.min_pre_clamp).max(0.0) / self.max_control
        } else {
            (-self.min_pre_clamp).max(0.0)
        }
    }
}

/// Markov state of a run: current intensity, clock, history and random streams.
pub struct SimulationState {
    lambda: Vec<f64>,
    clock: f64,
    log: EventLog,
    organic_rng: ChaCha8Rng,
    control_rng: ChaCha8Rng,
    event_cap: usize,
    capped: bool,
}

impl SimulationState {
    pub fn new(model: &NetworkModel, t0: f64, tf: f64, seed: u64, event_cap: usize) -> Self {
        Self {
            lambda: model.lambda0().to_vec(),
            clock: t0,
            log: EventLog::empty(model.n(), t0, tf),
            organic_rng: stream_rng(seed, ORGANIC_STREAM),
            control_rng: stream_rng(seed, CONTROL_STREAM),
            event_cap,
            capped: false,
        }
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn intensity(&self) -> IntensityVector {
        IntensityVector::new(self.lambda.clone(), self.clock)
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    pub fn capped(&self) -> bool {
        self.capped
    }

    fn advance(&mut self, model: &NetworkModel, t: f64) {
        decay_in_place(model, &mut self.lambda, t - self.clock);
        self.clock = t;
    }

    fn record(&mut self, model: &NetworkModel, user: usize, time: f64, kind: EventKind) {
        self.advance(model, time);
        self.log.push(Event { time, user, kind });
        jump_in_place(model, &mut self.lambda, user);
        if self.log.len() >= self.event_cap {
            self.capped = true;
        }
    }

    /// Ogata thinning for the next organic event before `until`. The upper
    /// bound is the current total intensity, valid because intensities only
    /// decay between events; it is refreshed after every proposal. When no
    /// event is accepted the clock is left at `until`.
    fn next_organic(&mut self, model: &NetworkModel, until: f64) -> Option<usize> {
        loop {
            let bound: f64 = self.lambda.iter().sum();
            if !(bound > 0.0) {
                self.advance(model, until);
                return None;
            }
            let e: f64 = Exp1.sample(&mut self.organic_rng);
            let t = self.clock + e / bound;
            if t >= until {
                self.advance(model, until);
                return None;
            }
            self.advance(model, t);
            let total: f64 = self.lambda.iter().sum();
            if self.organic_rng.gen::<f64>() * bound < total {
                return Some(pick_index(&self.lambda, total, &mut self.organic_rng));
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationResult {
    #[serde(skip)]
    pub log: EventLog,
    pub capped: bool,
    pub organic_count: usize,
    pub incentivized_count: usize,
    pub runtime: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub control: Option<ControlDiagnostics>,
}

impl SimulationResult {
    /// `{organic_count, incentivized_count, capped, seed}` summary.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "organic_count": self.organic_count,
            "incentivized_count": self.incentivized_count,
            "capped": self.capped,
            "seed": self.seed,
        })
    }
}

/// Event-driven simulator of organic activity plus an optional control source.
///
/// Organic events come from Ogata thinning; incentivized ones from the
/// control source. Both kinds add the acting user's column of `A` to λ.
pub struct Simulator<'a, C: ControlSource> {
    model: &'a NetworkModel,
    control: Option<C>,
    state: SimulationState,
    pending: Option<(usize, f64)>,
    tf: f64,
    seed: u64,
    started: Instant,
}

impl<'a, C: ControlSource> Simulator<'a, C> {
    pub fn new(model: &'a NetworkModel, control: Option<C>, t0: f64, tf: f64, seed: u64, cap: usize) -> Result<Self> {
        if !(tf > t0) {
            return Err(Error::Config(format!("horizon end {tf} must exceed start {t0}")));
        }
        if cap == 0 {
            return Err(Error::Config("event cap must be positive".into()));
        }
        let mut state = SimulationState::new(model, t0, tf, seed, cap);
        let mut control = control;
        let pending = match control.as_mut() {
            Some(c) => c.sample_next(&mut state.control_rng, t0, tf)?,
            None => None,
        };
        Ok(Self { model, control, state, pending, tf, seed, started: Instant::now() })
    }

    pub fn state(&self) -> &SimulationState {
        &self.state
    }

    pub fn control(&self) -> Option<&C> {
        self.control.as_ref()
    }

    pub fn done(&self) -> bool {
        self.state.capped || self.state.clock >= self.tf
    }

    /// Processes every event strictly before `t` (clamped to the horizon) and
    /// leaves the clock at `t`.
    pub fn run_until(&mut self, t: f64) -> Result<()> {
        let t = t.min(self.tf);
        while !self.state.capped && self.state.clock < t {
            let limit = self.pending.map_or(t, |(_, tau)| tau.min(t));
            if let Some(user) = self.state.next_organic(self.model, limit) {
                let time = self.state.clock;
                self.state.record(self.model, user, time, EventKind::Organic);
                if let Some(c) = self.control.as_mut() {
                    if let Some((k, r)) = c.on_organic(&mut self.state.control_rng, user, time, self.tf)? {
                        if self.pending.is_none_or(|(_, tau)| r < tau) {
                            self.pending = Some((k, r));
                        }
                    }
                }
                continue;
            }
            match self.pending {
                Some((user, tau)) if tau <= self.state.clock => {
                    self.state.record(self.model, user, tau, EventKind::Incentivized);
                    let c = self.control.as_mut().expect("pending event without control source");
                    c.on_incentivized(user, tau);
                    self.pending = c.sample_next(&mut self.state.control_rng, tau, self.tf)?;
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<SimulationResult> {
        let tf = self.tf;
        self.run_until(tf)?;
        let log = self.state.log;
        let incentivized_count = log.count(EventKind::Incentivized);
        Ok(SimulationResult {
            organic_count: log.len() - incentivized_count,
            incentivized_count,
            capped: self.state.capped,
            runtime: self.started.elapsed().as_secs_f64(),
            seed: self.seed,
            control: self.control.as_ref().and_then(ControlSource::diagnostics),
            log,
        })
    }
}

/// Placeholder source for runs without control.
pub struct NoControl;

impl ControlSource for NoControl {
    fn sample_next(&mut self, _: &mut ChaCha8Rng, _: f64, _: f64) -> Result<Option<(usize, f64)>> {
        Ok(None)
    }

    fn on_organic(&mut self, _: &mut ChaCha8Rng, _: usize, _: f64, _: f64) -> Result<Option<(usize, f64)>> {
        Ok(None)
    }

    fn on_incentivized(&mut self, _: usize, _: f64) {}
}

/// Organic Hawkes activity only.
pub fn simulate_uncontrolled(
    model: &NetworkModel,
    t0: f64,
    tf: f64,
    seed: u64,
    cap: usize,
) -> Result<SimulationResult> {
    Simulator::<NoControl>::new(model, None, t0, tf, seed, cap)?.finish()
}

/// Deterministic, time-constant control intensities (PageRank / degree baselines).
#[derive(Debug, Clone)]
pub struct ConstantControl {
    rates: Vec<f64>,
    total: f64,
}

impl ConstantControl {
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        if rates.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::Config("control rates must be finite and nonnegative".into()));
        }
        let total = rates.iter().sum();
        Ok(Self { rates, total })
    }
}

impl ControlSource for ConstantControl {
    fn sample_next(&mut self, rng: &mut ChaCha8Rng, from: f64, tf: f64) -> Result<Option<(usize, f64)>> {
        if !(self.total > 0.0) {
            return Ok(None);
        }
        let e: f64 = Exp1.sample(rng);
        let t = from + e / self.total;
        if t >= tf {
            return Ok(None);
        }
        Ok(Some((pick_index(&self.rates, self.total, rng), t)))
    }

    fn on_organic(&mut self, _: &mut ChaCha8Rng, _: usize, _: f64, _: f64) -> Result<Option<(usize, f64)>> {
        Ok(None)
    }

    fn on_incentivized(&mut self, _: usize, _: f64) {}
}

pub fn simulate_with_constant_control(
    model: &NetworkModel,
    rates: &[f64],
    t0: f64,
    tf: f64,
    seed: u64,
    cap: usize,
) -> Result<SimulationResult> {
    if rates.len() != model.n() {
        return Err(Error::Config(format!("{} control rates for {} users", rates.len(), model.n())));
    }
    let control = ConstantControl::new(rates.to_vec())?;
    Simulator::new(model, Some(control), t0, tf, seed, cap)?.finish()
}
