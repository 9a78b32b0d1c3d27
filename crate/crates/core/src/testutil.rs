//! Hand-built fixtures shared by unit tests.

use crate::game::{CoalitionId, Partition};
use crate::instance::{Agent, Instance, Task, TaskId};

pub(crate) fn instance_of(agents: Vec<Agent>, tasks: Vec<Task>, universe: usize, budget: f64) -> Instance {
    Instance::new(agents, tasks, universe, budget).unwrap()
}

/// Seven agents, three single-capability tasks, budget 10. Agents 1-6 fill
/// the three coalitions at a total cost of exactly 10, so the unassigned
/// agent 7 cannot join anywhere, but swapping it for agent 6 lowers the
/// cost to 9.5 and raises task 3's reward from 3 to 5.
pub(crate) fn fig1_replica() -> Instance {
    let tasks = vec![
        Task { required: vec![0] },
        Task { required: vec![1] },
        Task { required: vec![2] },
    ];
    let agents = vec![
        Agent { capabilities: vec![(0, 4.0)], feasible: vec![(TaskId(0), 2.0)] },
        Agent { capabilities: vec![(0, 2.0)], feasible: vec![(TaskId(0), 2.0)] },
        Agent { capabilities: vec![(1, 4.0)], feasible: vec![(TaskId(1), 1.0)] },
        Agent { capabilities: vec![(1, 2.0)], feasible: vec![(TaskId(1), 2.0)] },
        Agent { capabilities: vec![(2, 1.0)], feasible: vec![(TaskId(2), 1.0)] },
        Agent { capabilities: vec![(2, 3.0)], feasible: vec![(TaskId(2), 2.0)] },
        Agent { capabilities: vec![(2, 5.0)], feasible: vec![(TaskId(2), 1.5)] },
    ];
    instance_of(agents, tasks, 3, 10.0)
}

/// The saturated allocation: coalitions {1,2}, {3,4}, {5,6}, agent 7 idle.
pub(crate) fn fig1_partition(instance: &Instance) -> Partition {
    Partition::from_assignment(
        instance,
        vec![
            CoalitionId::Task(TaskId(0)),
            CoalitionId::Task(TaskId(0)),
            CoalitionId::Task(TaskId(1)),
            CoalitionId::Task(TaskId(1)),
            CoalitionId::Task(TaskId(2)),
            CoalitionId::Task(TaskId(2)),
            CoalitionId::Dummy,
        ],
    )
    .unwrap()
}
