//! Exhaustive breadth-first search for the shortest action sequence.
//!
//! Independent of the learning code: it only uses the environment's step
//! function and the same bin-based success test as the planner, so its answer
//! is the ground truth the trained policy is compared against.

use std::collections::{HashSet, VecDeque};

use crate::agent::EmployeeAgent;
use crate::error::{Error, Result};
use crate::planner::{discretize, Environment, ModelEnvironment, Plan};
use crate::state::StateFunction;

/// Largest `actions^max_depth` accepted without `allow_large`.
pub const NODE_LIMIT: u64 = 10_000_000;

const QUANTUM: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub max_depth: usize,
    pub bin_width: f64,
    /// Skip feature vectors already reached at an earlier or equal depth.
    pub prune_duplicates: bool,
    /// Bypass the `NODE_LIMIT` guard.
    pub allow_large: bool,
}

impl SearchOptions {
    pub fn new(max_depth: usize) -> Self {
        SearchOptions {
            max_depth,
            bin_width: 0.01,
            prune_duplicates: true,
            allow_large: false,
        }
    }
}

#[derive(Debug, Clone)]
struct SearchNode {
    features: Vec<f64>,
    state: f64,
    depth: usize,
    parent: Option<(usize, usize)>,
}

fn quantize(features: &[f64]) -> Vec<i64> {
    features.iter().map(|v| (v / QUANTUM).round() as i64).collect()
}

fn check_tractable(actions: usize, opts: &SearchOptions) -> Result<()> {
    if opts.allow_large {
        return Ok(());
    }
    let size = (actions as f64).powi(opts.max_depth as i32);
    if size > NODE_LIMIT as f64 {
        return Err(Error::Intractable {
            branching: actions,
            depth: opts.max_depth,
            limit: NODE_LIMIT,
        });
    }
    Ok(())
}

/// Shortest sequence reaching `bin(S) >= bin(target)`, ties broken by the
/// lexicographically smallest action-index sequence. `None` when nothing
/// within `max_depth` reaches the target.
pub fn bfs_shortest<E: Environment + ?Sized>(
    env: &E,
    features: &[f64],
    start_state: f64,
    target: f64,
    opts: &SearchOptions,
) -> Result<Option<Vec<usize>>> {
    let actions = env.action_count();
    if actions == 0 {
        return Err(Error::Config("search needs at least one action".into()));
    }
    check_tractable(actions, opts)?;
    let goal = discretize(target, opts.bin_width)?;
    if discretize(start_state, opts.bin_width)? >= goal {
        return Ok(Some(Vec::new()));
    }

    let mut nodes = vec![SearchNode {
        features: features.to_vec(),
        state: start_state,
        depth: 0,
        parent: None,
    }];
    let mut seen: HashSet<Vec<i64>> = HashSet::new();
    if opts.prune_duplicates {
        seen.insert(quantize(features));
    }
    let mut frontier = VecDeque::from([0usize]);

    // FIFO order with children expanded by ascending action index visits each
    // depth in lexicographic order of paths, so the first goal generated is
    // the lexicographically smallest shortest plan.
    while let Some(id) = frontier.pop_front() {
        if nodes[id].depth == opts.max_depth {
            continue;
        }
        for a in 0..actions {
            let t = env.step(&nodes[id].features, a)?;
            if opts.prune_duplicates && !seen.insert(quantize(&t.features)) {
                continue;
            }
            let child = SearchNode {
                depth: nodes[id].depth + 1,
                parent: Some((id, a)),
                state: t.state,
                features: t.features,
            };
            let reached = discretize(child.state, opts.bin_width)? >= goal;
            nodes.push(child);
            let child_id = nodes.len() - 1;
            if reached {
                return Ok(Some(path_to(&nodes, child_id)));
            }
            frontier.push_back(child_id);
        }
    }
    Ok(None)
}

fn path_to(nodes: &[SearchNode], mut id: usize) -> Vec<usize> {
    let mut path = Vec::with_capacity(nodes[id].depth);
    while let Some((parent, a)) = nodes[id].parent {
        path.push(a);
        id = parent;
    }
    path.reverse();
    path
}

/// Runs [`bfs_shortest`] over the agent's catalog and prices the result.
pub fn bfs_shortest_plan<M: StateFunction + ?Sized>(
    model: &M,
    agent: &EmployeeAgent,
    target: f64,
    opts: &SearchOptions,
) -> Result<Option<Plan>> {
    let env = ModelEnvironment::new(model, &agent.catalog);
    let Some(actions) = bfs_shortest(&env, &agent.features, agent.state, target, opts)? else {
        return Ok(None);
    };
    let names = agent.catalog.names();
    let plan = Plan::replay(
        &env,
        &names,
        &agent.features,
        agent.state,
        target,
        opts.bin_width,
        agent.meta_cost(),
        &actions,
    )?;
    debug_assert!(plan.reached);
    Ok(Some(plan))
}
