//! Coalition-formation core: partitions, coalition values, the potential
//! function, deviation gains, and Nash-stability certification.
//!
//! A partition assigns every agent to one task coalition or to the dummy
//! coalition of unassigned agents. Coalition values are task rewards when
//! the global allocation respects the budget; any budget violation makes
//! every task coalition worthless ([`CoalitionValue::Infeasible`]). The
//! potential of a feasible partition is the sum of coalition values, which
//! coincides with the allocation objective, and every unilateral deviation
//! changes an agent's utility by exactly the potential difference. Gains
//! below are therefore computed as local potential differences.

use std::fmt;
use std::iter;

use crate::error::{Error, Result};
use crate::instance::{AgentId, Instance, TaskId};

/// A coalition: one per task, plus the dummy coalition holding unassigned
/// agents. The dummy orders after every task coalition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CoalitionId {
    Task(TaskId),
    Dummy,
}

impl CoalitionId {
    pub fn task(self) -> Option<TaskId> {
        match self {
            CoalitionId::Task(j) => Some(j),
            CoalitionId::Dummy => None,
        }
    }

    pub fn is_dummy(self) -> bool {
        matches!(self, CoalitionId::Dummy)
    }
}

impl fmt::Display for CoalitionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoalitionId::Task(j) => write!(f, "{j}"),
            CoalitionId::Dummy => write!(f, "dummy"),
        }
    }
}

/// A unilateral or pairwise move available to an agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Stay,
    /// Move to the given coalition (a feasible task, or the dummy).
    Join(CoalitionId),
    /// Swap coalitions with `partner`, currently assigned to `target`.
    Exchange { target: TaskId, partner: AgentId },
}

/// Value of one coalition: its task reward, or the marker for a partition
/// that violates the budget. `Infeasible` orders below every finite value
/// and never enters arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum CoalitionValue {
    Infeasible,
    Finite(f64),
}

impl CoalitionValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            CoalitionValue::Finite(v) => Some(v),
            CoalitionValue::Infeasible => None,
        }
    }
}

/// A coalition structure: a total assignment of agents to coalitions,
/// with per-task member lists kept sorted for deterministic iteration.
///
/// Equality is structural on the assignment; member lists are canonical and
/// therefore agree whenever assignments do.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    assignment: Vec<CoalitionId>,
    members: Vec<Vec<AgentId>>,
}

impl Partition {
    /// The initial structure: every agent unassigned.
    pub fn all_dummy(agent_count: usize, task_count: usize) -> Self {
        Self {
            assignment: vec![CoalitionId::Dummy; agent_count],
            members: vec![Vec::new(); task_count],
        }
    }

    /// Builds a partition from an assignment vector, validating that every
    /// assigned agent is on one of its feasible tasks.
    pub fn from_assignment(instance: &Instance, assignment: Vec<CoalitionId>) -> Result<Self> {
        if assignment.len() != instance.agent_count() {
            return Err(Error::InvalidPartition(format!(
                "assignment covers {} agents, instance has {}",
                assignment.len(),
                instance.agent_count()
            )));
        }
        let mut members = vec![Vec::new(); instance.task_count()];
        for (idx, &c) in assignment.iter().enumerate() {
            if let CoalitionId::Task(j) = c {
                if j.0 >= instance.task_count() {
                    return Err(Error::InvalidPartition(format!(
                        "agent {} assigned to unknown task {}",
                        AgentId(idx),
                        j
                    )));
                }
                if !instance.is_feasible(AgentId(idx), j) {
                    return Err(Error::InvalidPartition(format!(
                        "agent {} assigned to infeasible task {}",
                        AgentId(idx),
                        j
                    )));
                }
                members[j.0].push(AgentId(idx));
            }
        }
        Ok(Self { assignment, members })
    }

    pub fn agent_count(&self) -> usize {
        self.assignment.len()
    }

    pub fn task_count(&self) -> usize {
        self.members.len()
    }

    pub fn coalition_of(&self, i: AgentId) -> CoalitionId {
        self.assignment[i.0]
    }

    pub fn assignment(&self) -> &[CoalitionId] {
        &self.assignment
    }

    /// Members of task coalition `j`, ascending by agent id.
    pub fn members(&self, j: TaskId) -> &[AgentId] {
        &self.members[j.0]
    }

    pub fn assigned_count(&self) -> usize {
        self.assignment.iter().filter(|c| !c.is_dummy()).count()
    }

    fn detach(&mut self, i: AgentId) {
        if let CoalitionId::Task(j) = self.assignment[i.0] {
            self.members[j.0].retain(|&a| a != i);
        }
    }

    pub(crate) fn move_to(&mut self, i: AgentId, target: CoalitionId) {
        self.detach(i);
        self.assignment[i.0] = target;
        if let CoalitionId::Task(j) = target {
            let list = &mut self.members[j.0];
            let pos = list.partition_point(|&a| a < i);
            list.insert(pos, i);
        }
    }

    pub(crate) fn swap(&mut self, i: AgentId, partner: AgentId) {
        let ci = self.coalition_of(i);
        let cp = self.coalition_of(partner);
        self.move_to(i, cp);
        self.move_to(partner, ci);
    }
}

/// Reward of task `j` for a hypothetical member set: the sum over the
/// task's required capabilities of the best member competency, where a
/// capability no member holds contributes 0.
pub(crate) fn reward_over<I>(instance: &Instance, j: TaskId, members: I) -> f64
where
    I: Iterator<Item = AgentId> + Clone,
{
    instance
        .task(j)
        .required
        .iter()
        .map(|&k| {
            members
                .clone()
                .map(|i| instance.competency(i, k))
                .fold(0.0, f64::max)
        })
        .sum()
}

/// Reward accrued by task `j` under `partition`.
pub fn task_reward(instance: &Instance, partition: &Partition, j: TaskId) -> f64 {
    reward_over(instance, j, partition.members(j).iter().copied())
}

/// Total allocation cost: the sum of each assigned agent's cost on its task.
pub fn total_cost(instance: &Instance, partition: &Partition) -> f64 {
    partition
        .assignment()
        .iter()
        .enumerate()
        .map(|(idx, &c)| match c {
            CoalitionId::Task(j) => instance
                .cost(AgentId(idx), j)
                .expect("assigned task is feasible by partition invariant"),
            CoalitionId::Dummy => 0.0,
        })
        .sum()
}

pub fn is_budget_feasible(instance: &Instance, partition: &Partition) -> bool {
    total_cost(instance, partition) <= instance.budget()
}

/// Value of coalition `c`: the dummy is always worth 0; a task coalition is
/// worth its reward while the global allocation respects the budget and is
/// `Infeasible` otherwise.
pub fn coalition_value(instance: &Instance, partition: &Partition, c: CoalitionId) -> CoalitionValue {
    match c {
        CoalitionId::Dummy => CoalitionValue::Finite(0.0),
        CoalitionId::Task(j) => {
            if is_budget_feasible(instance, partition) {
                CoalitionValue::Finite(task_reward(instance, partition, j))
            } else {
                CoalitionValue::Infeasible
            }
        }
    }
}

/// Marginal contribution of agent `i` to its coalition's value; 0 for
/// unassigned agents. Assumes a budget-feasible partition.
pub fn agent_utility(instance: &Instance, partition: &Partition, i: AgentId) -> f64 {
    match partition.coalition_of(i) {
        CoalitionId::Dummy => 0.0,
        CoalitionId::Task(j) => {
            let members = partition.members(j);
            reward_over(instance, j, members.iter().copied())
                - reward_over(instance, j, members.iter().copied().filter(|&a| a != i))
        }
    }
}

/// Sum of all coalition values; equals the allocation objective. Errors on
/// a budget-violating partition, whose coalition values are infeasible.
pub fn potential(instance: &Instance, partition: &Partition) -> Result<f64> {
    if !is_budget_feasible(instance, partition) {
        return Err(Error::InfeasiblePartition);
    }
    Ok(instance
        .task_ids()
        .map(|j| task_reward(instance, partition, j))
        .sum())
}

/// Cost agent `i` would incur as a member of coalition `c`.
pub(crate) fn coalition_cost(instance: &Instance, i: AgentId, c: CoalitionId) -> f64 {
    match c {
        CoalitionId::Dummy => 0.0,
        CoalitionId::Task(j) => instance
            .cost(i, j)
            .expect("coalition must be feasible for the agent"),
    }
}

/// Potential change if agent `i` moved to `target`, or `None` when the move
/// would violate the budget. Computed locally from the source and target
/// coalitions only.
pub fn join_gain(
    instance: &Instance,
    partition: &Partition,
    i: AgentId,
    target: CoalitionId,
) -> Option<f64> {
    join_gain_with_total(instance, partition, i, target, total_cost(instance, partition))
}

pub(crate) fn join_gain_with_total(
    instance: &Instance,
    partition: &Partition,
    i: AgentId,
    target: CoalitionId,
    current_total: f64,
) -> Option<f64> {
    let source = partition.coalition_of(i);
    debug_assert!(target != source, "join target must differ from the current coalition");
    let new_total =
        current_total - coalition_cost(instance, i, source) + coalition_cost(instance, i, target);
    if new_total > instance.budget() {
        return None;
    }
    let mut gain = 0.0;
    if let CoalitionId::Task(j) = target {
        let members = partition.members(j).iter().copied();
        gain += reward_over(instance, j, members.clone().chain(iter::once(i)))
            - reward_over(instance, j, members);
    }
    if let CoalitionId::Task(j) = source {
        let members = partition.members(j).iter().copied();
        gain += reward_over(instance, j, members.clone().filter(|&a| a != i))
            - reward_over(instance, j, members);
    }
    Some(gain)
}

/// Potential change if agents `i` and `partner` swapped coalitions, or
/// `None` when the swap would violate the budget. The caller guarantees the
/// swap is feasible for both sides (the dummy is feasible for everyone).
pub fn exchange_gain(
    instance: &Instance,
    partition: &Partition,
    i: AgentId,
    partner: AgentId,
) -> Option<f64> {
    exchange_gain_with_total(instance, partition, i, partner, total_cost(instance, partition))
}

pub(crate) fn exchange_gain_with_total(
    instance: &Instance,
    partition: &Partition,
    i: AgentId,
    partner: AgentId,
    current_total: f64,
) -> Option<f64> {
    let ci = partition.coalition_of(i);
    let cp = partition.coalition_of(partner);
    debug_assert!(i != partner && ci != cp, "exchange requires two agents in distinct coalitions");
    let new_total = current_total - coalition_cost(instance, i, ci) - coalition_cost(instance, partner, cp)
        + coalition_cost(instance, i, cp)
        + coalition_cost(instance, partner, ci);
    if new_total > instance.budget() {
        return None;
    }
    let mut gain = 0.0;
    if let CoalitionId::Task(j) = cp {
        let members = partition.members(j).iter().copied();
        gain += reward_over(
            instance,
            j,
            members.clone().filter(|&a| a != partner).chain(iter::once(i)),
        ) - reward_over(instance, j, members);
    }
    if let CoalitionId::Task(j) = ci {
        let members = partition.members(j).iter().copied();
        gain += reward_over(
            instance,
            j,
            members.clone().filter(|&a| a != i).chain(iter::once(partner)),
        ) - reward_over(instance, j, members);
    }
    Some(gain)
}

/// Applies an action for agent `i`, returning the successor partition.
/// The input partition is left untouched. Illegal actions are rejected.
pub fn apply_action(
    instance: &Instance,
    partition: &Partition,
    i: AgentId,
    action: &Action,
) -> Result<Partition> {
    match *action {
        Action::Stay => {}
        Action::Join(CoalitionId::Dummy) => {}
        Action::Join(CoalitionId::Task(j)) => {
            if !instance.is_feasible(i, j) {
                return Err(Error::IllegalAction(format!("task {j} is not feasible for agent {i}")));
            }
        }
        Action::Exchange { target, partner } => {
            if partner == i {
                return Err(Error::IllegalAction(format!("agent {i} cannot exchange with itself")));
            }
            if partition.coalition_of(partner) != CoalitionId::Task(target) {
                return Err(Error::IllegalAction(format!(
                    "agent {partner} is not assigned to task {target}"
                )));
            }
            if !instance.is_feasible(i, target) {
                return Err(Error::IllegalAction(format!("task {target} is not feasible for agent {i}")));
            }
            if let CoalitionId::Task(j) = partition.coalition_of(i) {
                if !instance.is_feasible(partner, j) {
                    return Err(Error::IllegalAction(format!(
                        "task {j} is not feasible for exchange partner {partner}"
                    )));
                }
            }
        }
    }
    let mut next = partition.clone();
    match *action {
        Action::Stay => {}
        Action::Join(target) => next.move_to(i, target),
        Action::Exchange { partner, .. } => next.swap(i, partner),
    }
    Ok(next)
}

/// Whether no agent can strictly improve the potential by a unilateral
/// feasible move, and (optionally) no pair by a feasible exchange.
pub fn is_nash_stable(instance: &Instance, partition: &Partition, with_exchange: bool) -> bool {
    let total = total_cost(instance, partition);
    for i in instance.agent_ids() {
        let current = partition.coalition_of(i);
        for &(j, _) in instance.feasible_tasks(i) {
            let target = CoalitionId::Task(j);
            if target == current {
                continue;
            }
            if matches!(join_gain_with_total(instance, partition, i, target, total), Some(g) if g > 0.0)
            {
                return false;
            }
        }
        if !current.is_dummy()
            && matches!(
                join_gain_with_total(instance, partition, i, CoalitionId::Dummy, total),
                Some(g) if g > 0.0
            )
        {
            return false;
        }
    }
    if with_exchange {
        for i in instance.agent_ids() {
            let ci = partition.coalition_of(i);
            for &(j, _) in instance.feasible_tasks(i) {
                if CoalitionId::Task(j) == ci {
                    continue;
                }
                for &partner in partition.members(j) {
                    let partner_fits = match ci {
                        CoalitionId::Dummy => true,
                        CoalitionId::Task(s) => instance.is_feasible(partner, s),
                    };
                    if !partner_fits {
                        continue;
                    }
                    if matches!(
                        exchange_gain_with_total(instance, partition, i, partner, total),
                        Some(g) if g > 0.0
                    ) {
                        return false;
                    }
                }
            }
        }
    }
    true
}
