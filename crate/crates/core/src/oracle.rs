//! Ground-truth engines for small instances: an exhaustive optimal solver
//! and a randomized checker for the exact-potential identity. Both anchor
//! the test suites; neither shares code with the solvers they certify.

use rand::Rng;

use crate::error::{Error, Result};
use crate::game::{
    agent_utility, apply_action, potential, reward_over, Action, CoalitionId, Partition,
};
use crate::instance::{AgentId, Instance, TaskId};

/// Default bound on the number of assignment vectors the solver may visit.
pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

#[derive(Debug, Clone)]
pub struct OracleResult {
    /// Budget-feasible partition maximizing the objective; ties resolve to
    /// the lexicographically smallest assignment vector (dummy last).
    pub best_partition: Partition,
    pub best_value: f64,
    /// Complete assignments evaluated after pruning.
    pub states_enumerated: u64,
}

/// Exhaustive search over every feasible assignment, with the default
/// state-count cap.
pub fn brute_force_optimum(instance: &Instance) -> Result<OracleResult> {
    brute_force_optimum_capped(instance, DEFAULT_ENUMERATION_CAP)
}

/// Exhaustive search with an explicit cap on the per-agent choice product.
pub fn brute_force_optimum_capped(instance: &Instance, cap: u64) -> Result<OracleResult> {
    let mut states: u128 = 1;
    for i in instance.agent_ids() {
        states = states.saturating_mul(instance.feasible_tasks(i).len() as u128 + 1);
        if states > u128::from(cap) {
            return Err(Error::InstanceTooLarge { states, cap });
        }
    }

    let mut search = Search {
        instance,
        assignment: vec![CoalitionId::Dummy; instance.agent_count()],
        members: vec![Vec::new(); instance.task_count()],
        best_value: f64::NEG_INFINITY,
        best_assignment: Vec::new(),
        leaves: 0,
    };
    search.descend(0, 0.0);

    debug_assert!(!search.best_assignment.is_empty(), "all-dummy is always feasible");
    let best_partition = Partition::from_assignment(instance, search.best_assignment)?;
    let best_value = potential(instance, &best_partition)?;
    Ok(OracleResult { best_partition, best_value, states_enumerated: search.leaves })
}

struct Search<'a> {
    instance: &'a Instance,
    assignment: Vec<CoalitionId>,
    members: Vec<Vec<AgentId>>,
    best_value: f64,
    best_assignment: Vec<CoalitionId>,
    leaves: u64,
}

impl Search<'_> {
    /// Depth-first over agents; per-agent choices ascend (tasks, then
    /// dummy) so the first maximum found is lexicographically smallest.
    /// Branches that already exceed the budget are cut.
    fn descend(&mut self, depth: usize, cost: f64) {
        if depth == self.instance.agent_count() {
            self.leaves += 1;
            let value: f64 = self
                .instance
                .task_ids()
                .map(|j| reward_over(self.instance, j, self.members[j.0].iter().copied()))
                .sum();
            if value > self.best_value {
                self.best_value = value;
                self.best_assignment = self.assignment.clone();
            }
            return;
        }
        let agent = AgentId(depth);
        for &(j, c) in self.instance.feasible_tasks(agent) {
            if cost + c > self.instance.budget() {
                continue;
            }
            self.assignment[depth] = CoalitionId::Task(j);
            self.members[j.0].push(agent);
            self.descend(depth + 1, cost + c);
            self.members[j.0].pop();
        }
        self.assignment[depth] = CoalitionId::Dummy;
        self.descend(depth + 1, cost);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityReport {
    /// Largest observed `|Δu_i - Δφ|` over all evaluated deviations.
    pub max_abs_error: f64,
    pub trials_run: u64,
}

/// Samples a budget-feasible partition: agents in random order each pick
/// uniformly among staying idle and the feasible tasks still affordable.
pub fn random_feasible_partition<R: Rng + ?Sized>(instance: &Instance, rng: &mut R) -> Partition {
    let mut order: Vec<usize> = (0..instance.agent_count()).collect();
    for idx in (1..order.len()).rev() {
        order.swap(idx, rng.random_range(0..=idx));
    }
    let mut partition = Partition::all_dummy(instance.agent_count(), instance.task_count());
    let mut total = 0.0;
    for idx in order {
        let i = AgentId(idx);
        let mut options: Vec<Option<(TaskId, f64)>> = vec![None];
        options.extend(
            instance
                .feasible_tasks(i)
                .iter()
                .filter(|&&(_, c)| total + c <= instance.budget())
                .map(|&p| Some(p)),
        );
        if let Some((j, c)) = options[rng.random_range(0..options.len())] {
            partition.move_to(i, CoalitionId::Task(j));
            total += c;
        }
    }
    partition
}

fn random_legal_join<R: Rng + ?Sized>(
    instance: &Instance,
    partition: &Partition,
    rng: &mut R,
) -> Option<(AgentId, CoalitionId)> {
    let total = crate::game::total_cost(instance, partition);
    let mut moves = Vec::new();
    for i in instance.agent_ids() {
        let current = partition.coalition_of(i);
        let current_cost = current
            .task()
            .map(|j| instance.cost(i, j).expect("assigned task is feasible"))
            .unwrap_or(0.0);
        for &(j, c) in instance.feasible_tasks(i) {
            let target = CoalitionId::Task(j);
            if target != current && total - current_cost + c <= instance.budget() {
                moves.push((i, target));
            }
        }
        if !current.is_dummy() {
            moves.push((i, CoalitionId::Dummy));
        }
    }
    if moves.is_empty() {
        None
    } else {
        Some(moves[rng.random_range(0..moves.len())])
    }
}

/// Fuzzes the exact-potential identity: for random feasible partitions and
/// random legal unilateral moves, compares the deviating agent's utility
/// change against the potential change, both evaluated from scratch.
pub fn check_potential_identity<R: Rng + ?Sized>(
    instance: &Instance,
    trials: u64,
    rng: &mut R,
) -> IdentityReport {
    let mut max_abs_error = 0.0f64;
    let mut trials_run = 0;
    for _ in 0..trials {
        let mut sampled = None;
        for _ in 0..16 {
            let partition = random_feasible_partition(instance, rng);
            if let Some(mv) = random_legal_join(instance, &partition, rng) {
                sampled = Some((partition, mv));
                break;
            }
        }
        let Some((partition, (i, target))) = sampled else { continue };
        let after = apply_action(instance, &partition, i, &Action::Join(target))
            .expect("sampled move is legal");
        let du = agent_utility(instance, &after, i) - agent_utility(instance, &partition, i);
        let dphi = potential(instance, &after).expect("sampled move stays within budget")
            - potential(instance, &partition).expect("sampled partition is feasible");
        max_abs_error = max_abs_error.max((du - dphi).abs());
        trials_run += 1;
    }
    IdentityReport { max_abs_error, trials_run }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{is_budget_feasible, is_nash_stable, total_cost};
    use crate::instance::{generate_instance, Agent, GeneratorConfig, Task};
    use crate::testutil::instance_of;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn oracle_scale_cfg(m: usize, seed: u64) -> GeneratorConfig {
        let mut cfg = GeneratorConfig::new(m).with_seed(seed);
        cfg.feasible_fraction = (0.4, 1.0);
        cfg
    }

    #[test]
    fn single_affordable_task_is_taken() {
        let instance = instance_of(
            vec![Agent { capabilities: vec![(0, 3.0), (1, 2.0)], feasible: vec![(TaskId(0), 1.0)] }],
            vec![Task { required: vec![0, 1] }],
            2,
            5.0,
        );
        let result = brute_force_optimum(&instance).unwrap();
        assert_eq!(result.best_value, 5.0);
        assert_eq!(result.best_partition.coalition_of(AgentId(0)), CoalitionId::Task(TaskId(0)));
    }

    #[test]
    fn zero_budget_forces_the_empty_allocation() {
        let instance = instance_of(
            vec![
                Agent { capabilities: vec![(0, 3.0)], feasible: vec![(TaskId(0), 1.0)] },
                Agent { capabilities: vec![(0, 5.0)], feasible: vec![(TaskId(0), 2.0)] },
            ],
            vec![Task { required: vec![0] }],
            1,
            0.0,
        );
        let result = brute_force_optimum(&instance).unwrap();
        assert_eq!(result.best_value, 0.0);
        assert_eq!(result.best_partition.assigned_count(), 0);
    }

    #[test]
    fn optimum_dominates_random_sampling() {
        let mut cfg = oracle_scale_cfg(2, 3);
        cfg.feasible_fraction = (0.5, 1.0);
        cfg.agents_per_task_ratio = 3;
        let instance = generate_instance(&cfg).unwrap();
        let result = brute_force_optimum(&instance).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..1000 {
            let partition = random_feasible_partition(&instance, &mut rng);
            let value = potential(&instance, &partition).unwrap();
            assert!(value <= result.best_value + 1e-9);
        }
        assert!(result.states_enumerated > 0);
    }

    #[test]
    fn optimum_is_nash_stable_with_and_without_exchanges() {
        for seed in 0..10 {
            let instance = generate_instance(&oracle_scale_cfg(3, seed)).unwrap();
            let result = brute_force_optimum(&instance).unwrap();
            assert!(is_nash_stable(&instance, &result.best_partition, false), "seed {seed}");
            assert!(is_nash_stable(&instance, &result.best_partition, true), "seed {seed}");
        }
    }

    #[test]
    fn optimum_is_invariant_under_relabeling() {
        let instance = generate_instance(&oracle_scale_cfg(3, 7)).unwrap();
        let base = brute_force_optimum(&instance).unwrap();

        // Reverse both task ids and agent ids.
        let m = instance.task_count();
        let relabeled_tasks: Vec<Task> =
            (0..m).rev().map(|j| instance.task(TaskId(j)).clone()).collect();
        let relabeled_agents: Vec<Agent> = (0..instance.agent_count())
            .rev()
            .map(|idx| {
                let agent = instance.agent(AgentId(idx));
                Agent {
                    capabilities: agent.capabilities.clone(),
                    feasible: agent
                        .feasible
                        .iter()
                        .map(|&(j, c)| (TaskId(m - 1 - j.0), c))
                        .collect(),
                }
            })
            .collect();
        let relabeled = Instance::new(
            relabeled_agents,
            relabeled_tasks,
            instance.universe_size(),
            instance.budget(),
        )
        .unwrap();
        let permuted = brute_force_optimum(&relabeled).unwrap();
        assert!((base.best_value - permuted.best_value).abs() < 1e-9);
    }

    #[test]
    fn cap_is_enforced() {
        let instance = generate_instance(&oracle_scale_cfg(3, 1)).unwrap();
        assert!(matches!(
            brute_force_optimum_capped(&instance, 16),
            Err(Error::InstanceTooLarge { .. })
        ));
    }

    #[test]
    fn identity_error_stays_at_float_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for seed in 0..5 {
            let instance = generate_instance(&oracle_scale_cfg(4, seed)).unwrap();
            let report = check_potential_identity(&instance, 500, &mut rng);
            assert_eq!(report.trials_run, 500);
            assert!(report.max_abs_error <= 1e-9, "seed {seed}: {}", report.max_abs_error);
        }
    }

    #[test]
    fn zero_trials_is_vacuous() {
        let instance = generate_instance(&oracle_scale_cfg(3, 0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let report = check_potential_identity(&instance, 0, &mut rng);
        assert_eq!(report, IdentityReport { max_abs_error: 0.0, trials_run: 0 });
    }

    #[test]
    fn potential_differences_negate_on_reversal() {
        let instance = generate_instance(&oracle_scale_cfg(3, 21)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let partition = random_feasible_partition(&instance, &mut rng);
        let (i, target) = random_legal_join(&instance, &partition, &mut rng).unwrap();
        let source = partition.coalition_of(i);
        let there = apply_action(&instance, &partition, i, &Action::Join(target)).unwrap();
        if !is_budget_feasible(&instance, &there) {
            return;
        }
        let back = apply_action(&instance, &there, i, &Action::Join(source)).unwrap();
        assert_eq!(back, partition);
        let d1 = potential(&instance, &there).unwrap() - potential(&instance, &partition).unwrap();
        let d2 = potential(&instance, &back).unwrap() - potential(&instance, &there).unwrap();
        assert!((d1 + d2).abs() < 1e-12);
        let _ = total_cost(&instance, &back);
    }
}
