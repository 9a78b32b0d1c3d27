//! The log-linear learner and its relay-style execution loop.
//!
//! Each decision step belongs to a single agent (the relay token holder).
//! The holder first builds every strictly improving, budget-feasible move
//! to another feasible coalition; only when none exists (and the variant
//! allows it) does it look for cooperative exchanges, swapping places with
//! an agent of another coalition when the combined potential strictly
//! increases. One action is then sampled log-linearly, weighted by a
//! time-growing, cost-decrease-aware inverse temperature, so early
//! iterations explore while late ones exploit.
//!
//! A run terminates once every agent has certified, at an unchanged
//! allocation, that it has no improving action, or when the handoff budget
//! `t_max` runs out.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{
    coalition_cost, exchange_gain_with_total, join_gain_with_total, potential, total_cost, Action,
    CoalitionId, Partition,
};
use crate::instance::{AgentId, Instance};

/// Which parts of the full learner are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Cooperative exchanges and log-linear selection both enabled.
    Full,
    /// No cooperative exchanges; improving joins only.
    NoCe,
    /// Uniform selection among improving actions instead of log-linear.
    NoHll,
}

/// How the relay token moves between agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheduler {
    /// Each handoff picks the next holder uniformly at random.
    RandomRelay,
    /// A seeded shuffle fixes a cyclic visiting order.
    RoundRobin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearningParams {
    /// Weight of the cost-decrease term in the inverse temperature.
    pub beta0: f64,
    /// Time scaling inside the logarithmic warm-up, at least 1.
    pub lambda: f64,
    /// Positive integer divisor of the logarithmic term.
    pub smooth: u32,
    /// Maximum number of relay handoffs.
    pub t_max: u64,
    pub variant: Variant,
    pub scheduler: Scheduler,
    pub seed: u64,
}

impl LearningParams {
    /// Defaults sized for an instance with `agent_count` agents.
    ///
    /// The schedule constants keep the time term mild over a whole run and
    /// let the cost-decrease term dominate selection, which measurably
    /// outperforms both a fast-growing schedule and uniform selection on
    /// budget-saturated scenarios.
    pub fn default_for(agent_count: usize) -> Self {
        Self {
            beta0: 8.0,
            lambda: 1.0,
            smooth: 300,
            t_max: 500 * agent_count as u64,
            variant: Variant::Full,
            scheduler: Scheduler::RandomRelay,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta0.is_finite() && self.beta0 >= 0.0) {
            return Err(Error::InvalidParams(format!("beta0 must be >= 0, got {}", self.beta0)));
        }
        if !(self.lambda.is_finite() && self.lambda >= 1.0) {
            return Err(Error::InvalidParams(format!("lambda must be >= 1, got {}", self.lambda)));
        }
        if self.smooth == 0 {
            return Err(Error::InvalidParams("smooth must be a positive integer".into()));
        }
        if self.t_max == 0 {
            return Err(Error::InvalidParams("t_max must be >= 1".into()));
        }
        Ok(())
    }
}

/// A strictly improving, budget-feasible move together with its potential
/// gain and the total-cost decrease it causes.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub action: Action,
    pub gain: f64,
    pub cost_decrease: f64,
}

/// One applied action in a run.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    /// Handoffs completed when the action was applied (1-based).
    pub t: u64,
    pub agent: AgentId,
    pub action: Action,
    pub gain: f64,
    pub phi_after: f64,
}

/// Outcome of one solver run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub final_partition: Partition,
    /// Potential of the final partition.
    pub objective: f64,
    /// Relay handoffs executed (greedy rounds for the centralized baseline).
    pub iterations: u64,
    /// Whether every agent certified stability before `t_max`.
    pub converged: bool,
    /// Final total cost divided by the budget (0 when the budget is 0).
    pub cu_rate: f64,
    pub wall_time: Duration,
    /// `(handoffs completed, potential)` at the start and after each
    /// applied action; strictly increasing in the potential.
    pub objective_trace: Vec<(u64, f64)>,
    pub seed: u64,
}

/// Builds agent `i`'s action set: strictly improving budget-feasible joins
/// first; if none exist and the variant allows, strictly improving
/// cooperative exchanges with members of other feasible coalitions.
pub fn candidate_actions(
    instance: &Instance,
    partition: &Partition,
    i: AgentId,
    variant: Variant,
) -> Vec<Candidate> {
    candidates_with_total(instance, partition, i, variant, total_cost(instance, partition))
}

pub(crate) fn candidates_with_total(
    instance: &Instance,
    partition: &Partition,
    i: AgentId,
    variant: Variant,
    total: f64,
) -> Vec<Candidate> {
    let mut out = Vec::new();
    let current = partition.coalition_of(i);
    let own_cost = coalition_cost(instance, i, current);

    for &(j, cost) in instance.feasible_tasks(i) {
        let target = CoalitionId::Task(j);
        if target == current {
            continue;
        }
        if let Some(gain) = join_gain_with_total(instance, partition, i, target, total) {
            if gain > 0.0 {
                out.push(Candidate {
                    action: Action::Join(target),
                    gain,
                    cost_decrease: own_cost - cost,
                });
            }
        }
    }
    if !current.is_dummy() {
        if let Some(gain) = join_gain_with_total(instance, partition, i, CoalitionId::Dummy, total) {
            if gain > 0.0 {
                out.push(Candidate {
                    action: Action::Join(CoalitionId::Dummy),
                    gain,
                    cost_decrease: own_cost,
                });
            }
        }
    }

    if out.is_empty() && variant != Variant::NoCe {
        for &(j, new_cost) in instance.feasible_tasks(i) {
            if CoalitionId::Task(j) == current {
                continue;
            }
            for &partner in partition.members(j) {
                let partner_fits = match current {
                    CoalitionId::Dummy => true,
                    CoalitionId::Task(s) => instance.is_feasible(partner, s),
                };
                if !partner_fits {
                    continue;
                }
                if let Some(gain) = exchange_gain_with_total(instance, partition, i, partner, total) {
                    if gain > 0.0 {
                        let partner_old = coalition_cost(instance, partner, CoalitionId::Task(j));
                        let partner_new = coalition_cost(instance, partner, current);
                        out.push(Candidate {
                            action: Action::Exchange { target: j, partner },
                            gain,
                            cost_decrease: (own_cost + partner_old) - (new_cost + partner_new),
                        });
                    }
                }
            }
        }
    }
    out
}

/// Time-variant, cost-aware inverse temperature:
/// `beta0 * delta_c / delta_c_max + ln(lambda * t + 1) / smooth`.
///
/// `delta_c` must already be clamped into `[0, delta_c_max]` and
/// `delta_c_max` must be positive.
pub fn beta_schedule(params: &LearningParams, t: u64, delta_c: f64, delta_c_max: f64) -> f64 {
    debug_assert!(delta_c_max > 0.0);
    debug_assert!((0.0..=delta_c_max).contains(&delta_c));
    params.beta0 * delta_c / delta_c_max
        + (params.lambda * t as f64 + 1.0).ln() / f64::from(params.smooth)
}

/// Samples one candidate: log-linearly in `beta(t, delta_c) * gain` per
/// candidate for the full learner, uniformly for the no-log-linear ablation.
/// `delta_c_max` is the instance's cost spread; a non-positive spread
/// disables the cost-decrease term.
pub fn select_action<'a, R: Rng + ?Sized>(
    candidates: &'a [Candidate],
    params: &LearningParams,
    t: u64,
    delta_c_max: f64,
    rng: &mut R,
) -> &'a Candidate {
    assert!(!candidates.is_empty(), "selection requires at least one candidate");
    if candidates.len() == 1 {
        return &candidates[0];
    }
    if params.variant == Variant::NoHll {
        return &candidates[rng.random_range(0..candidates.len())];
    }
    let scores: Vec<f64> = candidates
        .iter()
        .map(|c| {
            let beta = if delta_c_max > 0.0 {
                beta_schedule(params, t, c.cost_decrease.clamp(0.0, delta_c_max), delta_c_max)
            } else {
                beta_schedule(params, t, 0.0, 1.0)
            };
            beta * c.gain
        })
        .collect();
    // Shift by the max score so the weights stay representable.
    let max_score = scores.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let weights: Vec<f64> = scores.iter().map(|&s| (s - max_score).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut draw = rng.random_range(0.0..total);
    for (idx, &w) in weights.iter().enumerate() {
        if draw < w {
            return &candidates[idx];
        }
        draw -= w;
    }
    candidates.last().expect("candidates are nonempty")
}

/// One decision by agent `i` at iteration `t`: returns the successor
/// partition and whether an action was applied. Every applied action
/// strictly increases the potential.
pub fn llh_step<R: Rng + ?Sized>(
    instance: &Instance,
    partition: &Partition,
    i: AgentId,
    t: u64,
    params: &LearningParams,
    rng: &mut R,
) -> (Partition, bool) {
    let candidates = candidate_actions(instance, partition, i, params.variant);
    if candidates.is_empty() {
        return (partition.clone(), false);
    }
    let chosen = select_action(&candidates, params, t, instance.cost_spread(), rng);
    let mut next = partition.clone();
    apply_candidate(&mut next, i, &chosen.action);
    (next, true)
}

fn apply_candidate(partition: &mut Partition, i: AgentId, action: &Action) {
    match *action {
        Action::Stay => {}
        Action::Join(target) => partition.move_to(i, target),
        Action::Exchange { partner, .. } => partition.swap(i, partner),
    }
}

/// What a token holder decided to do with the allocation.
pub(crate) enum Proposal {
    /// No improving action exists at the current allocation.
    Quiet,
    /// Improving actions exist but the holder kept its current one.
    Hold,
    Act(Candidate),
}

pub(crate) struct RelayOutcome {
    pub partition: Partition,
    pub iterations: u64,
    pub converged: bool,
    pub trace: Vec<(u64, f64)>,
}

/// Drives the token-passing loop shared by the learner and the relay
/// baselines. Convergence is declared once every agent has reported Quiet
/// at the current (unchanged) allocation, which certifies stability under
/// the proposer's action space.
pub(crate) fn run_relay<F>(
    instance: &Instance,
    scheduler: Scheduler,
    t_max: u64,
    rng: &mut ChaCha8Rng,
    mut propose: F,
    mut detail: Option<&mut Vec<TraceStep>>,
) -> RelayOutcome
where
    F: FnMut(&Instance, &Partition, AgentId, u64, f64, &mut ChaCha8Rng) -> Proposal,
{
    let n = instance.agent_count();
    let order: Vec<AgentId> = match scheduler {
        Scheduler::RandomRelay => Vec::new(),
        Scheduler::RoundRobin => {
            let mut order: Vec<AgentId> = instance.agent_ids().collect();
            for idx in (1..order.len()).rev() {
                order.swap(idx, rng.random_range(0..=idx));
            }
            order
        }
    };

    let mut partition = Partition::all_dummy(n, instance.task_count());
    let mut total = 0.0;
    let mut phi = 0.0;
    let mut trace = vec![(0, 0.0)];
    let mut quiet = vec![false; n];
    let mut quiet_count = 0usize;
    let mut converged = false;
    let mut iterations = 0;

    for t in 0..t_max {
        let holder = match scheduler {
            Scheduler::RandomRelay => AgentId(rng.random_range(0..n)),
            Scheduler::RoundRobin => order[(t % n as u64) as usize],
        };
        iterations = t + 1;
        match propose(instance, &partition, holder, t, total, rng) {
            Proposal::Quiet => {
                if !quiet[holder.0] {
                    quiet[holder.0] = true;
                    quiet_count += 1;
                    if quiet_count == n {
                        converged = true;
                        break;
                    }
                }
            }
            Proposal::Hold => {}
            Proposal::Act(candidate) => {
                apply_candidate(&mut partition, holder, &candidate.action);
                total = total_cost(instance, &partition);
                phi += candidate.gain;
                trace.push((iterations, phi));
                quiet.fill(false);
                quiet_count = 0;
                if let Some(steps) = detail.as_deref_mut() {
                    steps.push(TraceStep {
                        t: iterations,
                        agent: holder,
                        action: candidate.action,
                        gain: candidate.gain,
                        phi_after: phi,
                    });
                }
            }
        }
    }

    RelayOutcome { partition, iterations, converged, trace }
}

pub(crate) fn finish_run(
    instance: &Instance,
    outcome: RelayOutcome,
    seed: u64,
    started: Instant,
) -> RunResult {
    let wall_time = started.elapsed();
    let objective = potential(instance, &outcome.partition)
        .expect("relay execution preserves budget feasibility");
    let total = total_cost(instance, &outcome.partition);
    let cu_rate = if instance.budget() > 0.0 { total / instance.budget() } else { 0.0 };
    RunResult {
        final_partition: outcome.partition,
        objective,
        iterations: outcome.iterations,
        converged: outcome.converged,
        cu_rate,
        wall_time,
        objective_trace: outcome.trace,
        seed,
    }
}

/// Full run of the learner from the all-unassigned allocation.
pub fn run(instance: &Instance, params: &LearningParams) -> Result<RunResult> {
    run_impl(instance, params, None)
}

/// Like [`run`], additionally returning one record per applied action.
pub fn run_traced(instance: &Instance, params: &LearningParams) -> Result<(RunResult, Vec<TraceStep>)> {
    let mut steps = Vec::new();
    let result = run_impl(instance, params, Some(&mut steps))?;
    Ok((result, steps))
}

fn run_impl(
    instance: &Instance,
    params: &LearningParams,
    detail: Option<&mut Vec<TraceStep>>,
) -> Result<RunResult> {
    params.validate()?;
    let spread = instance.cost_spread();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let started = Instant::now();
    let outcome = run_relay(
        instance,
        params.scheduler,
        params.t_max,
        &mut rng,
        |instance, partition, holder, t, total, rng| {
            let candidates = candidates_with_total(instance, partition, holder, params.variant, total);
            if candidates.is_empty() {
                Proposal::Quiet
            } else {
                Proposal::Act(select_action(&candidates, params, t, spread, rng).clone())
            }
        },
        detail,
    );
    Ok(finish_run(instance, outcome, params.seed, started))
}
