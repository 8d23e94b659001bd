//! Online sampling of incentivized actions from the optimal feedback law.

use rand_chacha::ChaCha8Rng;

use super::policy::{ControlEvaluation, FeedbackPolicy};
use crate::error::{Error, Result};
use crate::hawkes::NetworkModel;
use crate::simulation::{sample_inhomog_poisson_multi, ControlDiagnostics, ControlSource, SimulationResult, Simulator};

/// The optimal control intensity maintained as a superposition.
///
/// `u(t) = base_u(t) + Σ_j K(t) a_{u_j} κ(t - s_j)`, one term per past event
/// `(u_j, s_j)` of either kind. All terms share the kernel `κ(t) = e^{-ωt}`,
/// so their sum is carried as a single excitation vector
/// `z(t) = Σ_j a_{u_j} κ(t - s_j)` that decays between events and gains
/// `a_u` at each event. When the run starts away from the baseline the
/// initial offset `λ₀ - μ₀` enters `z` as an extra decaying term.
pub struct CheshireControl<'a> {
    policy: &'a FeedbackPolicy,
    excitation: Vec<f64>,
    as_of: f64,
    diagnostics: ControlDiagnostics,
    scratch: Vec<f64>,
    buffer: Vec<f64>,
}

impl<'a> CheshireControl<'a> {
    pub fn new(policy: &'a FeedbackPolicy, t0: f64) -> Self {
        let model = policy.model();
        let excitation = model.lambda0().iter().zip(model.mu0()).map(|(l, m)| l - m).collect();
        let n = policy.n();
        Self {
            policy,
            excitation,
            as_of: t0,
            diagnostics: ControlDiagnostics { min_pre_clamp: f64::INFINITY, max_control: 0.0, evaluations: 0 },
            scratch: vec![0.0; n],
            buffer: vec![0.0; n],
        }
    }

    pub fn excitation(&self) -> &[f64] {
        &self.excitation
    }

    fn decay_to(&mut self, t: f64) {
        debug_assert!(t >= self.as_of);
        if t > self.as_of {
            let k = (-self.policy.model().omega() * (t - self.as_of)).exp();
            self.excitation.iter_mut().for_each(|z| *z *= k);
            self.as_of = t;
        }
    }

    /// Adds the component started by an event of `user` at `time`.
    fn add_component(&mut self, user: usize, time: f64) {
        self.decay_to(time);
        for &(v, a) in self.policy.model().column(user) {
            self.excitation[v] += a;
        }
    }

    /// Superposed control intensity at `t >= as_of`, without changing state.
    pub fn superposed_intensity(&self, t: f64) -> Result<ControlEvaluation> {
        if t < self.as_of {
            return Err(Error::TimeReversal { requested: t, as_of: self.as_of });
        }
        if t > self.policy.tf() {
            return Err(Error::OutsideHorizon { t, t0: self.policy.t0(), tf: self.policy.tf() });
        }
        let n = self.policy.n();
        let factor = (-self.policy.model().omega() * (t - self.as_of)).exp();
        let mut base = vec![0.0; n];
        let mut scratch = vec![0.0; n];
        let mut gain = vec![0.0; n];
        self.policy.base_u(t, &mut base);
        self.policy.gain_times(t, &self.excitation, &mut scratch, &mut gain);
        let pre = base.iter().zip(&gain).map(|(b, g)| b + factor * g).collect();
        Ok(evaluation(pre))
    }

    pub fn diagnostics(&self) -> ControlDiagnostics {
        self.diagnostics
    }

    /// Next arrival of the whole superposition as it stands at `from`.
    fn sample_superposition(&mut self, rng: &mut ChaCha8Rng, from: f64, tf: f64) -> Result<Option<(usize, f64)>> {
        self.decay_to(from);
        let tf = tf.min(self.policy.tf());
        let omega = self.policy.model().omega();
        let policy = self.policy;
        let z = &self.excitation;
        let diag = &mut self.diagnostics;
        let scratch = &mut self.scratch;
        let buffer = &mut self.buffer;
        sample_inhomog_poisson_multi(
            policy.n(),
            |t, out| {
                let factor = (-omega * (t - from)).exp();
                policy.base_u(t, out);
                policy.gain_times(t, z, scratch, buffer);
                let mut total = 0.0;
                for (o, g) in out.iter_mut().zip(buffer.iter()) {
                    let v = *o + factor * g;
                    diag.min_pre_clamp = diag.min_pre_clamp.min(v);
                    diag.max_control = diag.max_control.max(v);
                    *o = v.max(0.0);
                    total += *o;
                }
                diag.evaluations += 1;
                total
            },
            |t| policy.superposition_envelope(t, z, (-omega * (t - from)).exp()),
            from,
            tf,
            rng,
        )
    }

    /// First arrival of the single component `K(t) a_user κ(t - start)`.
    fn sample_component(
        &mut self,
        rng: &mut ChaCha8Rng,
        user: usize,
        start: f64,
        tf: f64,
    ) -> Result<Option<(usize, f64)>> {
        let tf = tf.min(self.policy.tf());
        let omega = self.policy.model().omega();
        let policy = self.policy;
        let scratch = &mut self.scratch;
        sample_inhomog_poisson_multi(
            policy.n(),
            |t, out| {
                let factor = (-omega * (t - start)).exp();
                policy.gain_times_column(t, user, scratch, out);
                let mut total = 0.0;
                for o in out.iter_mut() {
                    *o = (*o * factor).max(0.0);
                    total += *o;
                }
                total
            },
            |t| policy.component_envelope(t, user) * (-omega * (t - start)).exp(),
            start,
            tf,
            rng,
        )
    }
}

fn evaluation(pre: Vec<f64>) -> ControlEvaluation {
    let min_pre_clamp = pre.iter().copied().fold(f64::INFINITY, f64::min);
    let u = pre.iter().map(|x| x.max(0.0)).collect();
    ControlEvaluation { u, pre_clamp: pre, min_pre_clamp }
}

impl ControlSource for CheshireControl<'_> {
    fn sample_next(&mut self, rng: &mut ChaCha8Rng, from: f64, tf: f64) -> Result<Option<(usize, f64)>> {
        self.sample_superposition(rng, from, tf)
    }

    fn on_organic(&mut self, rng: &mut ChaCha8Rng, user: usize, time: f64, tf: f64) -> Result<Option<(usize, f64)>> {
        self.add_component(user, time);
        self.sample_component(rng, user, time, tf)
    }

    fn on_incentivized(&mut self, user: usize, time: f64) {
        self.add_component(user, time);
    }

    fn diagnostics(&self) -> Option<ControlDiagnostics> {
        Some(self.diagnostics)
    }
}

/// One round of the online sampler: draws the next arrival of the current
/// superposition after `clock` and, if the next organic action
/// `(user, time)` precedes it, registers that action's component and keeps
/// the earlier of the two candidates. Returns `None` when nothing arrives
/// before `tf`.
pub fn cheshire_next(
    control: &mut CheshireControl<'_>,
    rng: &mut ChaCha8Rng,
    clock: f64,
    next_organic: Option<(usize, f64)>,
    tf: f64,
) -> Result<Option<(usize, f64)>> {
    let mut candidate = control.sample_next(rng, clock, tf)?;
    if let Some((user, s)) = next_organic {
        if s < tf && candidate.is_none_or(|(_, tau)| s < tau) {
            if let Some((k, r)) = control.on_organic(rng, user, s, tf)? {
                if candidate.is_none_or(|(_, tau)| r < tau) {
                    candidate = Some((k, r));
                }
            }
        }
    }
    Ok(candidate)
}

/// Controlled dynamics: organic events by Ogata thinning, incentivized
/// events from the feedback policy, both feeding back through `A`.
pub fn simulate_controlled(
    model: &NetworkModel,
    policy: &FeedbackPolicy,
    t0: f64,
    tf: f64,
    seed: u64,
    cap: usize,
) -> Result<SimulationResult> {
    controlled_simulator(model, policy, t0, tf, seed, cap)?.finish()
}

/// Simulator wired to the online sampler, for callers that need to inspect
/// the state mid-run.
pub fn controlled_simulator<'a>(
    model: &'a NetworkModel,
    policy: &'a FeedbackPolicy,
    t0: f64,
    tf: f64,
    seed: u64,
    cap: usize,
) -> Result<Simulator<'a, CheshireControl<'a>>> {
    if policy.n() != model.n() {
        return Err(Error::Config(format!("policy has n={}, model has n={}", policy.n(), model.n())));
    }
    if !policy.covers(t0, tf) {
        return Err(Error::Config(format!(
            "policy horizon [{}, {}] does not cover [{t0}, {tf}]",
            policy.t0(),
            policy.tf()
        )));
    }
    Simulator::new(model, Some(CheshireControl::new(policy, t0)), t0, tf, seed, cap)
}
