//! Comparison algorithms: a centralized cost-efficiency greedy, the
//! better-reply process, and the best-response rule. The relay baselines
//! share the learner's token-passing loop and improving-join construction;
//! neither considers cooperative exchanges.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::game::{join_gain_with_total, CoalitionId, Partition};
use crate::instance::{AgentId, Instance, TaskId};
use crate::learning::{
    candidates_with_total, finish_run, run_relay, Proposal, RelayOutcome, RunResult, Scheduler,
    Variant,
};

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineParams {
    /// Probability that a better-reply holder keeps its current action.
    pub chi: f64,
    pub t_max: u64,
    pub seed: u64,
    pub scheduler: Scheduler,
}

impl BaselineParams {
    pub fn default_for(agent_count: usize) -> Self {
        Self { chi: 0.3, t_max: 500 * agent_count as u64, seed: 0, scheduler: Scheduler::RandomRelay }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.chi.is_finite() && (0.0..1.0).contains(&self.chi)) {
            return Err(Error::InvalidParams(format!("chi must lie in [0, 1), got {}", self.chi)));
        }
        if self.t_max == 0 {
            return Err(Error::InvalidParams("t_max must be >= 1".into()));
        }
        Ok(())
    }
}

/// Centralized cost-efficiency greedy: repeatedly assigns the unassigned
/// agent/task pair maximizing marginal reward divided by the agent's
/// average cost, charging the true cost against the budget, until no
/// positive feasible pair remains. Assigned agents are never moved again.
/// Deterministic for a given instance; the seed only labels the result.
pub fn run_cf(instance: &Instance, params: &BaselineParams) -> Result<RunResult> {
    params.validate()?;
    let started = Instant::now();
    let n = instance.agent_count();
    let average_cost: Vec<Option<f64>> =
        instance.agent_ids().map(|i| instance.average_cost(i)).collect();

    let mut partition = Partition::all_dummy(n, instance.task_count());
    let mut total = 0.0;
    let mut phi = 0.0;
    let mut trace = vec![(0, 0.0)];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < params.t_max {
        let mut best: Option<(f64, AgentId, TaskId, f64)> = None;
        for i in instance.agent_ids() {
            if !partition.coalition_of(i).is_dummy() {
                continue;
            }
            let Some(avg) = average_cost[i.0] else { continue };
            for &(j, cost) in instance.feasible_tasks(i) {
                if total + cost > instance.budget() {
                    continue;
                }
                let gain = join_gain_with_total(instance, &partition, i, CoalitionId::Task(j), total)
                    .expect("pair was checked against the budget");
                if gain <= 0.0 {
                    continue;
                }
                let factor = gain / avg;
                if best.is_none_or(|(f, ..)| factor > f) {
                    best = Some((factor, i, j, gain));
                }
            }
        }
        let Some((_, i, j, gain)) = best else {
            converged = true;
            break;
        };
        partition.move_to(i, CoalitionId::Task(j));
        total = crate::game::total_cost(instance, &partition);
        phi += gain;
        iterations += 1;
        trace.push((iterations, phi));
    }

    let outcome = RelayOutcome { partition, iterations, converged, trace };
    Ok(finish_run(instance, outcome, params.seed, started))
}

/// Better-reply process: the token holder keeps its action with probability
/// `chi`, otherwise plays one of its strictly improving feasible joins
/// uniformly at random.
pub fn run_brp(instance: &Instance, params: &BaselineParams) -> Result<RunResult> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let started = Instant::now();
    let outcome = run_relay(
        instance,
        params.scheduler,
        params.t_max,
        &mut rng,
        |instance, partition, holder, _t, total, rng| {
            let better = candidates_with_total(instance, partition, holder, Variant::NoCe, total);
            if better.is_empty() {
                Proposal::Quiet
            } else if rng.random_bool(params.chi) {
                Proposal::Hold
            } else {
                Proposal::Act(better[rng.random_range(0..better.len())].clone())
            }
        },
        None,
    );
    Ok(finish_run(instance, outcome, params.seed, started))
}

/// Best response: the token holder deterministically plays its
/// maximal-gain feasible join, breaking ties toward the lowest task id.
pub fn run_bra(instance: &Instance, params: &BaselineParams) -> Result<RunResult> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let started = Instant::now();
    let outcome = run_relay(
        instance,
        params.scheduler,
        params.t_max,
        &mut rng,
        |instance, partition, holder, _t, total, _rng| {
            let candidates = candidates_with_total(instance, partition, holder, Variant::NoCe, total);
            // Candidates come ordered by target task id; keeping the first
            // strict maximum realizes the lowest-id tie-break.
            let mut best: Option<&crate::learning::Candidate> = None;
            for candidate in &candidates {
                if best.is_none_or(|b| candidate.gain > b.gain) {
                    best = Some(candidate);
                }
            }
            match best {
                None => Proposal::Quiet,
                Some(best) => Proposal::Act(best.clone()),
            }
        },
        None,
    );
    Ok(finish_run(instance, outcome, params.seed, started))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{is_nash_stable, potential, total_cost};
    use crate::instance::{generate_instance, Agent, GeneratorConfig, Task};
    use crate::oracle::brute_force_optimum;
    use crate::testutil::instance_of;

    fn nine_agent_cfg(seed: u64) -> GeneratorConfig {
        let mut cfg = GeneratorConfig::new(3).with_seed(seed);
        cfg.feasible_fraction = (0.4, 1.0);
        cfg
    }

    fn zero_budget_instance() -> Instance {
        instance_of(
            vec![
                Agent { capabilities: vec![(0, 3.0)], feasible: vec![(TaskId(0), 1.0)] },
                Agent { capabilities: vec![(0, 2.0)], feasible: vec![(TaskId(0), 2.0)] },
            ],
            vec![Task { required: vec![0] }],
            1,
            0.0,
        )
    }

    #[test]
    fn zero_budget_yields_zero_objective() {
        let instance = zero_budget_instance();
        let params = BaselineParams::default_for(2);
        for run in [run_cf, run_brp, run_bra] {
            let result = run(&instance, &params).unwrap();
            assert_eq!(result.objective, 0.0);
            assert!(result.converged);
            assert_eq!(result.final_partition.assigned_count(), 0);
        }
    }

    #[test]
    fn cf_assigns_single_agent_iff_affordable_and_useful() {
        let mk = |cost: f64, budget: f64, competency: f64| {
            instance_of(
                vec![Agent { capabilities: vec![(0, competency)], feasible: vec![(TaskId(0), cost)] }],
                vec![Task { required: vec![0] }],
                1,
                budget,
            )
        };
        let params = BaselineParams::default_for(1);

        let assigned = run_cf(&mk(2.0, 5.0, 4.0), &params).unwrap();
        assert_eq!(assigned.objective, 4.0);
        assert_eq!(assigned.iterations, 1);

        let unaffordable = run_cf(&mk(6.0, 5.0, 4.0), &params).unwrap();
        assert_eq!(unaffordable.objective, 0.0);

        let useless = run_cf(&mk(2.0, 5.0, 0.0), &params).unwrap();
        assert_eq!(useless.final_partition.assigned_count(), 0);
    }

    #[test]
    fn cf_prefers_cost_efficient_agents() {
        // Both agents reward 6, but agent 2's average cost is half, so its
        // factor wins even though task costs tie.
        let instance = instance_of(
            vec![
                Agent { capabilities: vec![(0, 6.0)], feasible: vec![(TaskId(0), 4.0), (TaskId(1), 4.0)] },
                Agent { capabilities: vec![(0, 6.0)], feasible: vec![(TaskId(0), 4.0), (TaskId(1), 2.0)] },
            ],
            vec![Task { required: vec![0] }, Task { required: vec![0] }],
            1,
            4.0,
        );
        let result = run_cf(&instance, &BaselineParams::default_for(2)).unwrap();
        assert_eq!(result.final_partition.coalition_of(AgentId(1)), CoalitionId::Task(TaskId(0)));
        assert!(result.final_partition.coalition_of(AgentId(0)).is_dummy());
    }

    #[test]
    fn cf_never_beats_the_oracle() {
        for seed in 0..10 {
            let instance = generate_instance(&nine_agent_cfg(seed)).unwrap();
            let optimum = brute_force_optimum(&instance).unwrap();
            let result = run_cf(&instance, &BaselineParams::default_for(9)).unwrap();
            assert!(result.objective <= optimum.best_value + 1e-9, "seed {seed}");
        }
    }

    #[test]
    fn cf_is_deterministic() {
        let instance = generate_instance(&nine_agent_cfg(2)).unwrap();
        let a = run_cf(&instance, &BaselineParams::default_for(9).with_seed(1)).unwrap();
        let b = run_cf(&instance, &BaselineParams::default_for(9).with_seed(2)).unwrap();
        assert_eq!(a.final_partition, b.final_partition);
        assert_eq!(a.objective, b.objective);
    }

    #[test]
    fn brp_with_zero_chi_always_moves_when_possible() {
        let instance = instance_of(
            vec![Agent { capabilities: vec![(0, 4.0)], feasible: vec![(TaskId(0), 2.0)] }],
            vec![Task { required: vec![0] }],
            1,
            5.0,
        );
        let mut params = BaselineParams::default_for(1);
        params.chi = 0.0;
        let result = run_brp(&instance, &params).unwrap();
        assert_eq!(result.objective, 4.0);
        assert_eq!(result.iterations, 2);
    }

    #[test]
    fn brp_converges_despite_high_stay_probability() {
        let instance = generate_instance(&nine_agent_cfg(4)).unwrap();
        let mut params = BaselineParams::default_for(instance.agent_count()).with_seed(3);
        params.chi = 0.9;
        let result = run_brp(&instance, &params).unwrap();
        assert!(result.converged);
        assert!(is_nash_stable(&instance, &result.final_partition, false));
    }

    #[test]
    fn relay_baselines_settle_at_join_stable_allocations() {
        for seed in 0..10 {
            let instance = generate_instance(&nine_agent_cfg(seed)).unwrap();
            let params = BaselineParams::default_for(instance.agent_count()).with_seed(seed);
            for (name, run) in
                [("brp", run_brp as fn(&Instance, &BaselineParams) -> Result<RunResult>), ("bra", run_bra)]
            {
                let result = run(&instance, &params).unwrap();
                assert!(result.converged, "{name} seed {seed} did not converge");
                assert!(
                    is_nash_stable(&instance, &result.final_partition, false),
                    "{name} seed {seed} converged but is not join-stable"
                );
                assert!(result.objective <= brute_force_optimum(&instance).unwrap().best_value + 1e-9);
            }
        }
    }

    #[test]
    fn bra_takes_the_highest_gain_and_breaks_ties_low() {
        // Gains differ: task 2 rewards 5, task 1 rewards 3.
        let instance = instance_of(
            vec![Agent {
                capabilities: vec![(0, 3.0), (1, 5.0)],
                feasible: vec![(TaskId(0), 1.0), (TaskId(1), 1.0)],
            }],
            vec![Task { required: vec![0] }, Task { required: vec![1] }],
            2,
            10.0,
        );
        let result = run_bra(&instance, &BaselineParams::default_for(1)).unwrap();
        assert_eq!(result.final_partition.coalition_of(AgentId(0)), CoalitionId::Task(TaskId(1)));

        // Equal gains: the lower task id wins.
        let tie = instance_of(
            vec![Agent {
                capabilities: vec![(0, 4.0)],
                feasible: vec![(TaskId(0), 1.0), (TaskId(1), 1.0)],
            }],
            vec![Task { required: vec![0] }, Task { required: vec![0] }],
            1,
            10.0,
        );
        let result = run_bra(&tie, &BaselineParams::default_for(1)).unwrap();
        assert_eq!(result.final_partition.coalition_of(AgentId(0)), CoalitionId::Task(TaskId(0)));
    }

    #[test]
    fn traces_increase_and_respect_budget() {
        for seed in 0..5 {
            let instance = generate_instance(&nine_agent_cfg(seed)).unwrap();
            let params = BaselineParams::default_for(9).with_seed(seed);
            for run in [run_cf, run_brp, run_bra] {
                let result = run(&instance, &params).unwrap();
                for pair in result.objective_trace.windows(2) {
                    assert!(pair[1].1 > pair[0].1);
                }
                assert!(total_cost(&instance, &result.final_partition) <= instance.budget());
                assert!(
                    (potential(&instance, &result.final_partition).unwrap() - result.objective).abs()
                        < 1e-9
                );
            }
        }
    }
}
