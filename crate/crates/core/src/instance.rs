//! Problem data model and scenario generation.
//!
//! An [`Instance`] describes agents with heterogeneous capabilities and
//! per-task execution costs, tasks with capability requirements, and a
//! global cost budget. Instances are immutable after construction and
//! safe to share read-only across threads.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// Zero-based agent index. Rendered one-based in files and CLI output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AgentId(pub usize);

/// Zero-based task index. Rendered one-based in files and CLI output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TaskId(pub usize);

/// Zero-based capability index into the capability universe.
pub type CapabilityId = usize;

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0 + 1)
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0 + 1)
    }
}

/// A task and the capabilities it rewards.
#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    /// Capability ids contributing to this task's reward, sorted, unique,
    /// nonempty.
    pub required: Vec<CapabilityId>,
}

/// One agent: its competencies and the tasks it can execute.
#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    /// `(capability, competency)` pairs, sorted by capability, unique keys.
    pub capabilities: Vec<(CapabilityId, f64)>,
    /// `(task, execution cost)` pairs, sorted by task, unique keys. Tasks
    /// absent from this list are infeasible for the agent.
    pub feasible: Vec<(TaskId, f64)>,
}

/// An immutable problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    agents: Vec<Agent>,
    tasks: Vec<Task>,
    universe: usize,
    budget: f64,
    /// `(min, max)` over all defined costs; `None` when no agent has a
    /// feasible task.
    cost_bounds: Option<(f64, f64)>,
}

impl Instance {
    /// Builds an instance, normalizing list order and validating every
    /// structural invariant.
    pub fn new(
        mut agents: Vec<Agent>,
        mut tasks: Vec<Task>,
        universe: usize,
        budget: f64,
    ) -> Result<Self> {
        if agents.is_empty() {
            return Err(Error::InvalidInstance("at least one agent required".into()));
        }
        if tasks.is_empty() {
            return Err(Error::InvalidInstance("at least one task required".into()));
        }
        if universe == 0 {
            return Err(Error::InvalidInstance("capability universe must be nonempty".into()));
        }
        if !budget.is_finite() || budget < 0.0 {
            return Err(Error::InvalidInstance(format!("budget must be finite and >= 0, got {budget}")));
        }

        let task_count = tasks.len();
        for (idx, task) in tasks.iter_mut().enumerate() {
            task.required.sort_unstable();
            if task.required.is_empty() {
                return Err(Error::InvalidInstance(format!("task {}: required capabilities empty", idx + 1)));
            }
            if task.required.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidInstance(format!("task {}: duplicate required capability", idx + 1)));
            }
            if let Some(&k) = task.required.iter().find(|&&k| k >= universe) {
                return Err(Error::InvalidInstance(format!(
                    "task {}: capability id {} out of range 1..={universe}",
                    idx + 1,
                    k + 1
                )));
            }
        }

        for (idx, agent) in agents.iter_mut().enumerate() {
            agent.capabilities.sort_unstable_by_key(|&(k, _)| k);
            agent.feasible.sort_unstable_by_key(|&(j, _)| j);
            if agent.capabilities.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::InvalidInstance(format!("agent {}: duplicate capability", idx + 1)));
            }
            if agent.feasible.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::InvalidInstance(format!("agent {}: duplicate feasible task", idx + 1)));
            }
            for &(k, h) in &agent.capabilities {
                if k >= universe {
                    return Err(Error::InvalidInstance(format!(
                        "agent {}: capability id {} out of range 1..={universe}",
                        idx + 1,
                        k + 1
                    )));
                }
                if !h.is_finite() || h < 0.0 {
                    return Err(Error::InvalidInstance(format!(
                        "agent {}: competency for capability {} must be finite and >= 0, got {h}",
                        idx + 1,
                        k + 1
                    )));
                }
            }
            for &(j, c) in &agent.feasible {
                if j.0 >= task_count {
                    return Err(Error::InvalidInstance(format!(
                        "agent {}: feasible task id {} out of range 1..={task_count}",
                        idx + 1,
                        j.0 + 1
                    )));
                }
                if !c.is_finite() || c <= 0.0 {
                    return Err(Error::InvalidInstance(format!(
                        "agent {}: cost for task {} must be finite and > 0, got {c}",
                        idx + 1,
                        j.0 + 1
                    )));
                }
            }
        }

        let mut cost_bounds: Option<(f64, f64)> = None;
        for agent in &agents {
            for &(_, c) in &agent.feasible {
                cost_bounds = Some(match cost_bounds {
                    None => (c, c),
                    Some((lo, hi)) => (lo.min(c), hi.max(c)),
                });
            }
        }

        Ok(Self { agents, tasks, universe, budget, cost_bounds })
    }

    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    pub fn task_count(&self) -> usize {
        self.tasks.len()
    }

    pub fn universe_size(&self) -> usize {
        self.universe
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn agent(&self, i: AgentId) -> &Agent {
        &self.agents[i.0]
    }

    pub fn task(&self, j: TaskId) -> &Task {
        &self.tasks[j.0]
    }

    pub fn agent_ids(&self) -> impl Iterator<Item = AgentId> {
        (0..self.agents.len()).map(AgentId)
    }

    pub fn task_ids(&self) -> impl Iterator<Item = TaskId> {
        (0..self.tasks.len()).map(TaskId)
    }

    /// Competency of agent `i` for capability `k`; 0 when the agent lacks
    /// the capability.
    pub fn competency(&self, i: AgentId, k: CapabilityId) -> f64 {
        let caps = &self.agents[i.0].capabilities;
        match caps.binary_search_by_key(&k, |&(c, _)| c) {
            Ok(pos) => caps[pos].1,
            Err(_) => 0.0,
        }
    }

    /// Execution cost of task `j` for agent `i`; `None` when infeasible.
    pub fn cost(&self, i: AgentId, j: TaskId) -> Option<f64> {
        let feas = &self.agents[i.0].feasible;
        feas.binary_search_by_key(&j, |&(t, _)| t).ok().map(|pos| feas[pos].1)
    }

    pub fn is_feasible(&self, i: AgentId, j: TaskId) -> bool {
        self.cost(i, j).is_some()
    }

    /// `(task, cost)` pairs feasible for agent `i`, ascending by task id.
    pub fn feasible_tasks(&self, i: AgentId) -> &[(TaskId, f64)] {
        &self.agents[i.0].feasible
    }

    /// Mean execution cost of agent `i` over its feasible tasks.
    pub fn average_cost(&self, i: AgentId) -> Option<f64> {
        let feas = &self.agents[i.0].feasible;
        if feas.is_empty() {
            return None;
        }
        Some(feas.iter().map(|&(_, c)| c).sum::<f64>() / feas.len() as f64)
    }

    /// `(min, max)` over every defined cost, `None` when no costs exist.
    pub fn cost_bounds(&self) -> Option<(f64, f64)> {
        self.cost_bounds
    }

    /// Width of the instance's cost range; 0 when fewer than two distinct
    /// cost values exist.
    pub fn cost_spread(&self) -> f64 {
        match self.cost_bounds {
            Some((lo, hi)) => hi - lo,
            None => 0.0,
        }
    }
}

/// Ratio of the budget to the number of tasks.
pub fn budget_rate(instance: &Instance) -> f64 {
    instance.budget() / instance.task_count() as f64
}

/// Normalized cost spread `(max_cost - min_cost) / global_max_cost`,
/// in `[0, 1]`.
pub fn heterogeneity_degree(min_cost: f64, max_cost: f64, global_max_cost: f64) -> Result<f64> {
    if !(min_cost > 0.0 && min_cost <= max_cost && max_cost <= global_max_cost)
        || !global_max_cost.is_finite()
    {
        return Err(Error::InvalidParams(format!(
            "cost bounds must satisfy 0 < min <= max <= global_max, got ({min_cost}, {max_cost}, {global_max_cost})"
        )));
    }
    Ok((max_cost - min_cost) / global_max_cost)
}

/// Scenario generator settings.
///
/// Default ranges match the standard experimental scenario: agent count is
/// `agents_per_task_ratio` times the task count, each agent can execute a
/// random fraction of the tasks, and competencies/costs are drawn uniformly
/// from the configured ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    /// Number of tasks (`m`).
    pub task_count: usize,
    /// Agents per task; `n = ratio * m`.
    #[serde(default = "defaults::ratio")]
    pub agents_per_task_ratio: usize,
    /// Fraction interval of the task count giving each agent's feasible
    /// task count: counts are drawn uniformly from
    /// `[floor(lo * m), ceil(hi * m)]` inclusive.
    #[serde(default = "defaults::feasible_fraction")]
    pub feasible_fraction: (f64, f64),
    /// Inclusive range for the number of capabilities per agent.
    #[serde(default = "defaults::caps_per_agent")]
    pub capabilities_per_agent: (usize, usize),
    /// Inclusive range for the number of capabilities per task.
    #[serde(default = "defaults::caps_per_task")]
    pub capabilities_per_task: (usize, usize),
    /// Inclusive integer range for competency values.
    #[serde(default = "defaults::competency_range")]
    pub competency_range: (u32, u32),
    /// Cost interval; costs are drawn uniformly from `[lo, hi)`, or fixed
    /// at `lo` when the interval is degenerate.
    #[serde(default = "defaults::cost_range")]
    pub cost_range: (f64, f64),
    /// Budget per task; the instance budget is `budget_rate * m`.
    #[serde(default = "defaults::budget_rate")]
    pub budget_rate: f64,
    /// Capability universe size.
    #[serde(default = "defaults::universe")]
    pub universe: usize,
    #[serde(default)]
    pub seed: u64,
}

mod defaults {
    pub fn ratio() -> usize {
        3
    }
    pub fn feasible_fraction() -> (f64, f64) {
        (0.1, 0.2)
    }
    pub fn caps_per_agent() -> (usize, usize) {
        (1, 10)
    }
    pub fn caps_per_task() -> (usize, usize) {
        (5, 10)
    }
    pub fn competency_range() -> (u32, u32) {
        (1, 10)
    }
    pub fn cost_range() -> (f64, f64) {
        (1.0, 20.0)
    }
    pub fn budget_rate() -> f64 {
        5.0
    }
    pub fn universe() -> usize {
        10
    }
}

impl GeneratorConfig {
    /// Config with the default scenario parameters for `task_count` tasks.
    pub fn new(task_count: usize) -> Self {
        Self {
            task_count,
            agents_per_task_ratio: defaults::ratio(),
            feasible_fraction: defaults::feasible_fraction(),
            capabilities_per_agent: defaults::caps_per_agent(),
            capabilities_per_task: defaults::caps_per_task(),
            competency_range: defaults::competency_range(),
            cost_range: defaults::cost_range(),
            budget_rate: defaults::budget_rate(),
            universe: defaults::universe(),
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Inclusive bounds of the per-agent feasible-task count implied by
    /// `feasible_fraction`.
    pub fn feasible_count_bounds(&self) -> (usize, usize) {
        let m = self.task_count as f64;
        let lo = (self.feasible_fraction.0 * m).floor() as usize;
        let hi = (self.feasible_fraction.1 * m).ceil() as usize;
        (lo, hi.min(self.task_count))
    }

    pub fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(Error::DegenerateConfig(msg));
        if self.task_count == 0 {
            return err("task_count must be >= 1".into());
        }
        if self.agents_per_task_ratio == 0 {
            return err("agents_per_task_ratio must be >= 1".into());
        }
        if self.universe == 0 {
            return err("universe must be >= 1".into());
        }
        let (flo, fhi) = self.feasible_fraction;
        if !(flo > 0.0 && flo <= fhi && fhi <= 1.0) {
            return err(format!("feasible_fraction must satisfy 0 < lo <= hi <= 1, got ({flo}, {fhi})"));
        }
        let (alo, ahi) = self.capabilities_per_agent;
        if !(1 <= alo && alo <= ahi && ahi <= self.universe) {
            return err(format!("capabilities_per_agent must satisfy 1 <= lo <= hi <= universe, got ({alo}, {ahi})"));
        }
        let (tlo, thi) = self.capabilities_per_task;
        if !(1 <= tlo && tlo <= thi && thi <= self.universe) {
            return err(format!("capabilities_per_task must satisfy 1 <= lo <= hi <= universe, got ({tlo}, {thi})"));
        }
        if self.competency_range.0 > self.competency_range.1 {
            return err(format!("competency_range is empty: {:?}", self.competency_range));
        }
        let (clo, chi) = self.cost_range;
        if !(clo.is_finite() && chi.is_finite() && clo > 0.0 && clo <= chi) {
            return err(format!("cost_range must satisfy 0 < lo <= hi, got ({clo}, {chi})"));
        }
        if !(self.budget_rate.is_finite() && self.budget_rate > 0.0) {
            return err(format!("budget_rate must be > 0, got {}", self.budget_rate));
        }
        let (count_lo, _) = self.feasible_count_bounds();
        if count_lo < 1 {
            return err(format!(
                "feasible-task count lower bound floor({} * {}) < 1: no agent could act",
                self.feasible_fraction.0, self.task_count
            ));
        }
        Ok(())
    }
}

/// Generates a random instance. Deterministic function of the config,
/// including its seed.
pub fn generate_instance(cfg: &GeneratorConfig) -> Result<Instance> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let m = cfg.task_count;
    let n = cfg.agents_per_task_ratio * m;

    let tasks: Vec<Task> = (0..m)
        .map(|_| {
            let count = rng.random_range(cfg.capabilities_per_task.0..=cfg.capabilities_per_task.1);
            let mut required = sample(&mut rng, cfg.universe, count).into_vec();
            required.sort_unstable();
            Task { required }
        })
        .collect();

    let (count_lo, count_hi) = cfg.feasible_count_bounds();
    let agents: Vec<Agent> = (0..n)
        .map(|_| {
            let cap_count = rng.random_range(cfg.capabilities_per_agent.0..=cfg.capabilities_per_agent.1);
            let mut cap_ids = sample(&mut rng, cfg.universe, cap_count).into_vec();
            cap_ids.sort_unstable();
            let capabilities = cap_ids
                .into_iter()
                .map(|k| {
                    let h = rng.random_range(cfg.competency_range.0..=cfg.competency_range.1);
                    (k, f64::from(h))
                })
                .collect();

            let feas_count = rng.random_range(count_lo..=count_hi);
            let mut task_ids = sample(&mut rng, m, feas_count).into_vec();
            task_ids.sort_unstable();
            let feasible = task_ids
                .into_iter()
                .map(|j| (TaskId(j), sample_cost(&mut rng, cfg.cost_range)))
                .collect();

            Agent { capabilities, feasible }
        })
        .collect();

    Instance::new(agents, tasks, cfg.universe, cfg.budget_rate * m as f64)
}

fn sample_cost(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo >= hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

// --- file format ------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    n: usize,
    m: usize,
    universe: usize,
    budget: f64,
    agents: Vec<AgentRecord>,
    tasks: Vec<TaskRecord>,
}

#[derive(Serialize, Deserialize)]
struct AgentRecord {
    id: usize,
    capabilities: Vec<(usize, f64)>,
    feasible: Vec<(usize, f64)>,
}

#[derive(Serialize, Deserialize)]
struct TaskRecord {
    id: usize,
    required: Vec<usize>,
}

/// Renders an instance as canonical JSON text: fixed field order, one-based
/// ids, sorted record lists. Byte-deterministic for equal instances, and
/// reals survive a round trip exactly.
pub fn serialize_instance(instance: &Instance) -> String {
    let file = InstanceFile {
        n: instance.agent_count(),
        m: instance.task_count(),
        universe: instance.universe_size(),
        budget: instance.budget(),
        agents: instance
            .agent_ids()
            .map(|i| AgentRecord {
                id: i.0 + 1,
                capabilities: instance.agent(i).capabilities.iter().map(|&(k, h)| (k + 1, h)).collect(),
                feasible: instance.agent(i).feasible.iter().map(|&(j, c)| (j.0 + 1, c)).collect(),
            })
            .collect(),
        tasks: instance
            .task_ids()
            .map(|j| TaskRecord {
                id: j.0 + 1,
                required: instance.task(j).required.iter().map(|&k| k + 1).collect(),
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("instance serialization cannot fail");
    text.push('\n');
    text
}

/// Parses the text produced by [`serialize_instance`], reporting the first
/// structural or semantic violation.
pub fn parse_instance(text: &str) -> Result<Instance> {
    let file: InstanceFile =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if file.agents.len() != file.n {
        return Err(Error::Parse(format!(
            "field n = {} does not match {} agent records",
            file.n,
            file.agents.len()
        )));
    }
    if file.tasks.len() != file.m {
        return Err(Error::Parse(format!(
            "field m = {} does not match {} task records",
            file.m,
            file.tasks.len()
        )));
    }
    for (pos, rec) in file.agents.iter().enumerate() {
        if rec.id != pos + 1 {
            return Err(Error::Parse(format!(
                "agents[{pos}]: expected id {} in canonical order, got {}",
                pos + 1,
                rec.id
            )));
        }
    }
    for (pos, rec) in file.tasks.iter().enumerate() {
        if rec.id != pos + 1 {
            return Err(Error::Parse(format!(
                "tasks[{pos}]: expected id {} in canonical order, got {}",
                pos + 1,
                rec.id
            )));
        }
    }

    let one_based = |label: &str, id: usize, max: usize| -> Result<usize> {
        if id == 0 || id > max {
            Err(Error::Parse(format!("{label}: id {id} out of range 1..={max}")))
        } else {
            Ok(id - 1)
        }
    };

    let mut agents = Vec::with_capacity(file.agents.len());
    for rec in &file.agents {
        let capabilities = rec
            .capabilities
            .iter()
            .map(|&(k, h)| Ok((one_based(&format!("agent {}: capability", rec.id), k, file.universe)?, h)))
            .collect::<Result<Vec<_>>>()?;
        let feasible = rec
            .feasible
            .iter()
            .map(|&(j, c)| {
                Ok((TaskId(one_based(&format!("agent {}: feasible task", rec.id), j, file.m)?), c))
            })
            .collect::<Result<Vec<_>>>()?;
        agents.push(Agent { capabilities, feasible });
    }
    let mut tasks = Vec::with_capacity(file.tasks.len());
    for rec in &file.tasks {
        let required = rec
            .required
            .iter()
            .map(|&k| one_based(&format!("task {}: required capability", rec.id), k, file.universe))
            .collect::<Result<Vec<_>>>()?;
        tasks.push(Task { required });
    }

    Instance::new(agents, tasks, file.universe, file.budget)
        .map_err(|e| Error::Parse(e.to_string()))
}
