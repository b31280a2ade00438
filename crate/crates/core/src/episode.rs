//! Episode loop: observe, propose, shield, move, scan, reward, terminate.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::config::EnvConfig;
use crate::error::{EpisodeError, GnnError};
use crate::frontier::{detect_frontiers, map_diagonal, state_potential_with, FrontierSet, UnknownCounts};
use crate::graph::{build_graph_capped, ExplorationGraph};
use crate::grid::{Action, ActionSet, Cell, Grid};
use crate::gridworld::{
    apply_action, exploration_ratio, generate_map, is_terminal, place_agent, AgentMap, AgentState,
    GroundTruthMap, ReachableSet,
};
use crate::policy::Policy;
use crate::reward::{compute_reward, RewardParams, RewardTerms};
use crate::sensing::{integrate_scan, integrate_scan_with, RayFan};
use crate::shield::{feasible_actions, shield, Executed, ShieldOutcome};

/// What the policy sees before choosing an action. The graph is built on
/// first access.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub agent_map: AgentMap,
    pub agent_cell: Cell,
    pub feasible: ActionSet,
    pub frontiers: FrontierSet,
    pub step: usize,
    pub coverage: f64,
    window: usize,
    max_frontier_nodes: Option<usize>,
    graph: OnceLock<ExplorationGraph<f64>>,
}

impl Observation {
    pub fn graph(&self) -> &ExplorationGraph<f64> {
        self.graph.get_or_init(|| {
            build_graph_capped(
                &self.agent_map,
                self.agent_cell,
                &self.frontiers,
                self.feasible,
                self.window,
                self.max_frontier_nodes,
            )
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// 1-based index of this step.
    pub step: usize,
    pub proposed: usize,
    /// `None` when the shield had nothing feasible and the agent stayed.
    pub executed: Option<usize>,
    pub intervened: bool,
    pub n_e: usize,
    pub coverage: f64,
    pub reward: RewardTerms<f64>,
    pub agent_cell: Cell,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Coverage,
    StepLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub seed: u64,
    pub config: EnvConfig,
    pub start_cell: Cell,
    pub initial_n_e: usize,
    pub initial_coverage: f64,
    pub steps: Vec<StepRecord>,
    pub final_coverage: f64,
    pub termination: Termination,
    pub intervention_rate: f64,
}

/// Seed for agent placement, derived from the episode seed.
pub fn placement_seed(seed: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub struct Episode {
    config: EnvConfig,
    seed: u64,
    truth: GroundTruthMap,
    agent_map: AgentMap,
    agent: AgentState,
    start_cell: Cell,
    reachable: ReachableSet,
    fan: RayFan,
    frontiers: FrontierSet,
    /// Unknown cells in each cell's information-gain window.
    gains: Grid<u32>,
    feasible: ActionSet,
    coverage: f64,
    /// Reachable cells known to the agent.
    known_reachable: usize,
    potential: f64,
    initial_n_e: usize,
    initial_coverage: f64,
    done: bool,
    trace: Vec<StepRecord>,
}

impl Episode {
    /// Generates the map, places the agent and performs the first scan.
    pub fn reset(config: &EnvConfig, seed: u64) -> Result<Self, EpisodeError> {
        config.validate()?;
        let truth =
            generate_map(seed, config.height, config.width, config.trunks, config.radius_range)?;
        let agent = place_agent(&truth, placement_seed(seed))?;
        Self::from_parts(config, seed, truth, agent)
    }

    /// Starts an episode on a given map and start state.
    pub fn from_parts(
        config: &EnvConfig,
        seed: u64,
        truth: GroundTruthMap,
        agent: AgentState,
    ) -> Result<Self, EpisodeError> {
        let reachable = ReachableSet::flood(&truth, agent.position);
        let mut agent_map = AgentMap::like(&truth);
        let fan = RayFan::new(config.lidar_range, config.lidar_rays)?;
        let scan = fan.scan(&truth, agent.position)?;
        let initial_n_e = integrate_scan(&mut agent_map, &scan)?;
        let coverage = exploration_ratio(&agent_map, &reachable);
        let known_reachable =
            reachable.cells().iter().filter(|&&c| !agent_map.is_unknown(c)).count();
        let frontiers = detect_frontiers(&agent_map);
        let gains = UnknownCounts::new(&agent_map).all_windows(config.window);
        let feasible = feasible_actions(&agent_map, agent.position);
        let potential = state_potential_with(
            &frontiers,
            agent.position,
            config.beta,
            config.window,
            map_diagonal(&agent_map),
            |c| gains.get(c).unwrap_or(0) as usize,
        );
        let done = is_terminal(coverage, agent.steps, config.coverage_threshold, config.max_steps);
        Ok(Self {
            config: config.clone(),
            seed,
            truth,
            agent_map,
            agent,
            start_cell: agent.position,
            reachable,
            fan,
            frontiers,
            gains,
            feasible,
            coverage,
            known_reachable,
            potential,
            initial_n_e,
            initial_coverage: coverage,
            done,
            trace: Vec::new(),
        })
    }

    pub fn observation(&self) -> Observation {
        Observation {
            agent_map: self.agent_map.clone(),
            agent_cell: self.agent.position,
            feasible: self.feasible,
            frontiers: self.frontiers.clone(),
            step: self.agent.steps,
            coverage: self.coverage,
            window: self.config.window,
            max_frontier_nodes: self.config.max_frontier_nodes,
            graph: OnceLock::new(),
        }
    }

    /// Executes one step and returns its record and the next observation.
    pub fn step(&mut self, proposed: Action) -> Result<(StepRecord, Observation, bool), EpisodeError> {
        let record = self.advance(proposed)?;
        Ok((record, self.observation(), self.done))
    }

    /// As [`Episode::step`] without building the next observation graph.
    pub fn advance(&mut self, proposed: Action) -> Result<StepRecord, EpisodeError> {
        if self.done {
            return Err(EpisodeError::Finished);
        }
        let outcome: ShieldOutcome = shield(proposed, self.feasible);
        let phi_before = self.potential;
        self.agent = match outcome.executed {
            Executed::Move(action) => apply_action(self.agent, action, &self.truth, &self.agent_map)?,
            Executed::Stay => AgentState { position: self.agent.position, steps: self.agent.steps + 1 },
        };
        let pos = self.agent.position;
        let scan = self.fan.scan(&self.truth, pos)?;
        let mut changed = Vec::new();
        let n_e = integrate_scan_with(&mut self.agent_map, &scan, |c, _| changed.push(c))?;
        self.known_reachable += changed.iter().filter(|&&c| self.reachable.contains(c)).count();
        self.coverage = self.ratio();
        self.frontiers.refresh(&self.agent_map, &changed);
        let half = (self.config.window / 2) as i32;
        for &c in &changed {
            for dr in -half..=half {
                for dc in -half..=half {
                    let cell = c.offset(dr, dc);
                    if let Some(g) = self.gains.get(cell) {
                        self.gains.set(cell, g - 1);
                    }
                }
            }
        }
        self.feasible = feasible_actions(&self.agent_map, pos);
        self.potential = state_potential_with(
            &self.frontiers,
            pos,
            self.config.beta,
            self.config.window,
            map_diagonal(&self.agent_map),
            |c| self.gains.get(c).unwrap_or(0) as usize,
        );
        let reward = compute_reward(
            self.coverage,
            outcome.intervened,
            n_e,
            phi_before,
            self.potential,
            &self.reward_params(),
        );
        self.done = is_terminal(
            self.coverage,
            self.agent.steps,
            self.config.coverage_threshold,
            self.config.max_steps,
        );
        let record = StepRecord {
            step: self.agent.steps,
            proposed: proposed.index(),
            executed: outcome.executed.action().map(Action::index),
            intervened: outcome.intervened,
            n_e,
            coverage: self.coverage,
            reward,
            agent_cell: pos,
        };
        self.trace.push(record.clone());
        Ok(record)
    }

    fn ratio(&self) -> f64 {
        if self.reachable.is_empty() {
            1.0
        } else {
            self.known_reachable as f64 / self.reachable.len() as f64
        }
    }

    pub fn reward_params(&self) -> RewardParams<f64> {
        RewardParams {
            coverage_threshold: self.config.coverage_threshold,
            r_exp: self.config.r_exp,
            r_sigma: self.config.r_sigma,
        }
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn coverage(&self) -> f64 {
        self.coverage
    }

    pub fn potential(&self) -> f64 {
        self.potential
    }

    pub fn initial_n_e(&self) -> usize {
        self.initial_n_e
    }

    pub fn agent(&self) -> AgentState {
        self.agent
    }

    pub fn truth(&self) -> &GroundTruthMap {
        &self.truth
    }

    pub fn agent_map(&self) -> &AgentMap {
        &self.agent_map
    }

    pub fn reachable(&self) -> &ReachableSet {
        &self.reachable
    }

    pub fn frontiers(&self) -> &FrontierSet {
        &self.frontiers
    }

    pub fn feasible(&self) -> ActionSet {
        self.feasible
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn trace(&self) -> &[StepRecord] {
        &self.trace
    }

    pub fn record(&self) -> EpisodeRecord {
        let steps = self.trace.len();
        let interventions = self.trace.iter().filter(|s| s.intervened).count();
        let termination = if self.coverage >= self.config.coverage_threshold {
            Termination::Coverage
        } else {
            Termination::StepLimit
        };
        EpisodeRecord {
            seed: self.seed,
            config: self.config.clone(),
            start_cell: self.start_cell,
            initial_n_e: self.initial_n_e,
            initial_coverage: self.initial_coverage,
            steps: self.trace.clone(),
            final_coverage: self.coverage,
            termination,
            intervention_rate: if steps == 0 { 0.0 } else { interventions as f64 / steps as f64 },
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Episode(#[from] EpisodeError),
    #[error(transparent)]
    Policy(#[from] GnnError),
}

/// Runs `policy` for at most `step_cap` steps (and never past the
/// configured step budget).
pub fn run_episode(
    config: &EnvConfig,
    seed: u64,
    policy: &mut dyn Policy,
    step_cap: usize,
) -> Result<EpisodeRecord, RunError> {
    let mut episode = Episode::reset(config, seed)?;
    let mut obs = episode.observation();
    while !episode.is_done() && episode.trace().len() < step_cap {
        let action = policy.propose(&obs)?;
        let (_, next, _) = episode.step(action)?;
        obs = next;
    }
    Ok(episode.record())
}
