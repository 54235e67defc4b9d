//! The outer algorithm: initialize and scatter a population, run the tick
//! schedule until a solution or a dead row, restart on failure, and chain
//! RunSeq attempts over the surviving population.

use crate::agents::{
    self, Agent, AgentParams, Behavior, MoveOutcome, OutcomeKind, TargetScratch,
};
use crate::csp::{CspInstance, InstanceKind};
use crate::space::{cell, AgentId, Space};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("row_num must satisfy 1 <= row_num < n for queens (got {row_num} for n = {n})")]
    RowNumOutOfRange { row_num: usize, n: usize },
    #[error("row_num must be at least 1")]
    RowNumZero,
    #[error("run_num must be at least 1")]
    RunNumZero,
    #[error("tick_budget must be at least 1")]
    TickBudgetZero,
    #[error("initial_energy must be at least 1")]
    InitialEnergyZero,
    #[error("{name} must be non-negative")]
    NegativeEnergy { name: &'static str },
    #[error("{name} must be a finite non-negative weight")]
    BadWeight { name: &'static str },
    #[error("coop_bit_density must be within [0, 1]")]
    BadCoopDensity,
}

/// Every tunable of one solver run.
#[derive(Debug, Clone)]
pub struct Config {
    pub instance: Arc<CspInstance>,
    /// Agents initially placed per row (RowNum). On queens boards any value
    /// works: surplus agents keep colliding until they are eaten or starve,
    /// because more occupied cells than columns always produces a conflict
    /// somewhere. Sparse instances lack that guarantee — with row_num > 1
    /// the population can rest in a conflict-free arrangement whose rows
    /// never coalesce, burning the whole tick budget. Prefer row_num = 1
    /// for loosely constrained instances.
    pub row_num: usize,
    /// Consecutive solutions requested from one population (RunNum).
    pub run_num: u32,
    pub tick_budget: u64,
    pub restart_budget: u32,
    pub seed: u64,
    pub agent: AgentParams,
}

impl Config {
    pub fn queens(n: usize) -> Self {
        Config::for_instance(Arc::new(CspInstance::queens(n)))
    }

    pub fn for_instance(instance: Arc<CspInstance>) -> Self {
        Config {
            instance,
            row_num: 3,
            run_num: 1,
            tick_budget: 1_000_000,
            restart_budget: 10,
            seed: 0,
            agent: AgentParams::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.row_num == 0 {
            return Err(ConfigError::RowNumZero);
        }
        // Queens boards accept 1..n-1 agents per row; generic instances
        // only need a non-empty population per row.
        if let InstanceKind::Queens(n) = self.instance.kind() {
            if self.row_num >= *n {
                return Err(ConfigError::RowNumOutOfRange {
                    row_num: self.row_num,
                    n: *n,
                });
            }
        }
        if self.run_num == 0 {
            return Err(ConfigError::RunNumZero);
        }
        if self.tick_budget == 0 {
            return Err(ConfigError::TickBudgetZero);
        }
        if self.agent.initial_energy < 1 {
            return Err(ConfigError::InitialEnergyZero);
        }
        for (name, v) in [
            ("step_lose_energy", self.agent.step_lose_energy),
            ("merge_threshold", self.agent.merge_threshold),
        ] {
            if v < 0 {
                return Err(ConfigError::NegativeEnergy { name });
            }
        }
        for (name, w) in [
            ("max_random_w", self.agent.max_random_w),
            ("max_least_w", self.agent.max_least_w),
            ("max_coop_w", self.agent.max_coop_w),
        ] {
            if !w.is_finite() || w < 0.0 {
                return Err(ConfigError::BadWeight { name });
            }
        }
        if !(0.0..=1.0).contains(&self.agent.coop_bit_density) {
            return Err(ConfigError::BadCoopDensity);
        }
        Ok(())
    }
}

/// Per-attempt statistics; the unit of benchmark output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunStats {
    /// 1-based index of the attempt since the last fresh population.
    pub run_seq: u32,
    pub ticks: u64,
    pub wall_millis: u64,
    pub deaths: u64,
    pub eats: u64,
    /// Full restarts that happened before this attempt started.
    pub restarts_before: u32,
    /// Live population when the attempt ended.
    pub population_at_solution: usize,
    pub solved: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DetectedState {
    Solution(Vec<usize>),
    /// First row with zero live agents.
    NoSolution(usize),
    Ongoing,
}

/// Solution / no-solution / ongoing verdict for a space. A solution needs
/// every row's agents on one distinct position (overlap counts as one
/// queen) and every occupied cell attack-free.
pub fn detect(space: &Space) -> DetectedState {
    if space.has_empty_row() {
        return DetectedState::NoSolution(space.first_empty_row().expect("empty row"));
    }
    if space.solution_ready() && space.confirm_solution() {
        return DetectedState::Solution(space.assignment().expect("single rows"));
    }
    DetectedState::Ongoing
}

/// One agent action as seen by a trace consumer.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEvent {
    pub tick: u64,
    pub outcome: MoveOutcome,
    /// Sum of live agent energies after the action; only populated when the
    /// sink asks for it.
    pub total_energy_after: Option<i64>,
}

pub trait TraceSink {
    fn record(&mut self, event: TraceEvent);
    /// Whether events should be produced at all.
    fn enabled(&self) -> bool {
        true
    }
    /// Whether total_energy_after should be computed (costs a population
    /// scan per event).
    fn wants_energy(&self) -> bool {
        false
    }
}

pub struct NoTrace;

impl TraceSink for NoTrace {
    fn record(&mut self, _: TraceEvent) {}
    fn enabled(&self) -> bool {
        false
    }
}

/// Collects everything, including energy totals; meant for tests.
#[derive(Default)]
pub struct MemoryTrace {
    pub events: Vec<TraceEvent>,
}

impl TraceSink for MemoryTrace {
    fn record(&mut self, event: TraceEvent) {
        self.events.push(event);
    }
    fn wants_energy(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttemptRecord {
    pub stats: RunStats,
    pub assignment: Option<Vec<usize>>,
}

/// All attempts of one solve_sequence call, solved or not, in order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveOutcome {
    pub attempts: Vec<AttemptRecord>,
}

impl SolveOutcome {
    pub fn solutions(&self) -> impl Iterator<Item = (&[usize], &RunStats)> {
        self.attempts
            .iter()
            .filter_map(|a| a.assignment.as_deref().map(|s| (s, &a.stats)))
    }

    pub fn solved_count(&self) -> usize {
        self.attempts.iter().filter(|a| a.stats.solved).count()
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("budget exhausted after {} attempts ({} solved)", .0.attempts.len(), .0.solved_count())]
    BudgetExhausted(SolveOutcome),
}

/// Live solver state for one configuration.
pub struct Engine {
    cfg: Config,
    pop: Vec<Agent>,
    space: Space,
    rng: ChaCha8Rng,
    scratch: TargetScratch,
    schedule: Vec<AgentId>,
    run_seq: u32,
    restarts: u32,
    attempt_ticks: u64,
    attempt_deaths: u64,
    attempt_eats: u64,
}

impl Engine {
    pub fn new(cfg: Config) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let space = Space::new(cfg.instance.clone());
        Ok(Engine {
            cfg,
            pop: Vec::new(),
            space,
            rng,
            scratch: TargetScratch::default(),
            schedule: Vec::new(),
            run_seq: 1,
            restarts: 0,
            attempt_ticks: 0,
            attempt_deaths: 0,
            attempt_eats: 0,
        })
    }

    pub fn config(&self) -> &Config {
        &self.cfg
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn agents(&self) -> &[Agent] {
        &self.pop
    }

    pub fn run_seq(&self) -> u32 {
        self.run_seq
    }

    pub fn live_energy_total(&self) -> i64 {
        self.pop
            .iter()
            .filter(|a| a.alive)
            .map(|a| a.energy)
            .sum()
    }

    /// Replaces whatever population exists with a fresh one: row_num agents
    /// per row, freshly drawn parameters. Ids keep growing so traces stay
    /// unambiguous across restarts.
    pub fn init_population(&mut self) {
        for a in &mut self.pop {
            a.alive = false;
        }
        let rows = self.cfg.instance.num_vars();
        for row in 0..rows {
            for _ in 0..self.cfg.row_num {
                let id = self.pop.len();
                self.pop
                    .push(agents::spawn_agent(id, row, rows, &self.cfg.agent, &mut self.rng));
            }
        }
    }

    /// Rebuilds the space and places every live agent uniformly at random
    /// in its own row.
    pub fn scatter(&mut self) {
        self.space = Space::new(self.cfg.instance.clone());
        for idx in 0..self.pop.len() {
            if !self.pop[idx].alive {
                continue;
            }
            let row = self.pop[idx].row;
            let pos = self.rng.random_range(0..self.space.width(row));
            self.space
                .update_occupancy(self.pop[idx].id, None, Some(cell(row, pos)));
        }
    }

    pub fn detect_state(&self) -> DetectedState {
        detect(&self.space)
    }

    /// One scheduler pass: live agents in a fresh seeded permutation, each
    /// selecting a behavior and resolving its move. Aborts early when the
    /// space reaches a solution or loses a row. Returns the state seen last.
    pub fn tick(&mut self, sink: &mut dyn TraceSink) -> DetectedState {
        self.attempt_ticks += 1;
        self.schedule.clear();
        self.schedule
            .extend(self.pop.iter().filter(|a| a.alive).map(|a| a.id));
        self.schedule.shuffle(&mut self.rng);

        for i in 0..self.schedule.len() {
            let id = self.schedule[i];
            if !self.pop[id].alive {
                continue; // eaten or killed earlier this tick
            }
            let agent = &self.pop[id];
            // A conflict-free agent is at its energy fixed point: staying is
            // free, any move costs at least the step price, so it rests
            // without consuming randomness. Leaving satisfied agents in the
            // roulette keeps the whole population in perpetual low-level
            // churn, and the chance of every agent being conflict-free at
            // one instant then vanishes with board size.
            let current = self.space.cell_of(id).expect("scheduled agent placed");
            if self.space.conflicts_at(current, Some(id)) == 0 {
                if sink.enabled() {
                    let total_energy_after =
                        sink.wants_energy().then(|| self.live_energy_total());
                    sink.record(TraceEvent {
                        tick: self.attempt_ticks,
                        outcome: agents::MoveOutcome {
                            agent_id: id,
                            row: current.row,
                            from: current.pos,
                            to: current.pos,
                            kind: OutcomeKind::Stayed,
                            energy_delta_self: 0,
                            attackers_penalized: Vec::new(),
                            deaths: Vec::new(),
                        },
                        total_energy_after,
                    });
                }
                continue;
            }
            let dest = match agents::select_behavior(agent, &mut self.rng) {
                Behavior::Stay => self.space.cell_of(id).expect("scheduled agent placed").pos,
                Behavior::Random => agents::target_random(agent, &self.space, &mut self.rng),
                Behavior::Least => {
                    agents::target_least(agent, &self.space, &mut self.rng, &mut self.scratch)
                }
                Behavior::Coop => {
                    agents::target_coop(agent, &self.space, &mut self.rng, &mut self.scratch)
                }
            };
            let outcome =
                agents::resolve_move(&mut self.pop, id, dest, &mut self.space, &self.cfg.agent);
            self.attempt_deaths += outcome.deaths.len() as u64;
            if let OutcomeKind::MovedAndAte { eaten } = &outcome.kind {
                self.attempt_eats += eaten.len() as u64;
            }
            if sink.enabled() {
                let total_energy_after = sink.wants_energy().then(|| self.live_energy_total());
                sink.record(TraceEvent {
                    tick: self.attempt_ticks,
                    outcome,
                    total_energy_after,
                });
            }
            match self.detect_state() {
                DetectedState::Ongoing => {}
                terminal => return terminal,
            }
        }
        DetectedState::Ongoing
    }

    /// Ticks until Solution, NoSolution, or tick_budget exhaustion. An
    /// already-solved scatter returns immediately with zero ticks.
    pub fn run_attempt(&mut self, sink: &mut dyn TraceSink) -> (RunStats, DetectedState) {
        let started = Instant::now();
        self.attempt_ticks = 0;
        self.attempt_deaths = 0;
        self.attempt_eats = 0;
        let restarts_before = self.restarts;

        let mut verdict = self.detect_state();
        while verdict == DetectedState::Ongoing && self.attempt_ticks < self.cfg.tick_budget {
            verdict = self.tick(sink);
        }

        let stats = RunStats {
            run_seq: self.run_seq,
            ticks: self.attempt_ticks,
            wall_millis: started.elapsed().as_millis() as u64,
            deaths: self.attempt_deaths,
            eats: self.attempt_eats,
            restarts_before,
            population_at_solution: self.space.population(),
            solved: matches!(verdict, DetectedState::Solution(_)),
        };
        (stats, verdict)
    }
}

/// The complete outer algorithm. Survivors of a solution keep their
/// energies and weights and are re-scattered for the next RunSeq; a dead
/// row forces a fresh population (run_seq resets to 1) and consumes one
/// unit of restart_budget. Exhausting tick_budget ends the sequence.
pub fn solve_sequence(cfg: Config, sink: &mut dyn TraceSink) -> Result<SolveOutcome, EngineError> {
    let mut engine = Engine::new(cfg)?;
    let mut outcome = SolveOutcome::default();
    engine.init_population();
    engine.scatter();
    loop {
        let (stats, verdict) = engine.run_attempt(sink);
        match verdict {
            DetectedState::Solution(assignment) => {
                let done = engine.run_seq >= engine.cfg.run_num;
                outcome.attempts.push(AttemptRecord {
                    stats,
                    assignment: Some(assignment),
                });
                if done {
                    return Ok(outcome);
                }
                engine.run_seq += 1;
                engine.scatter();
            }
            DetectedState::NoSolution(_) => {
                outcome.attempts.push(AttemptRecord {
                    stats,
                    assignment: None,
                });
                if engine.restarts >= engine.cfg.restart_budget {
                    return Err(EngineError::BudgetExhausted(outcome));
                }
                engine.restarts += 1;
                engine.run_seq = 1;
                engine.init_population();
                engine.scatter();
            }
            DetectedState::Ongoing => {
                // Tick budget ran out with the population still alive.
                outcome.attempts.push(AttemptRecord {
                    stats,
                    assignment: None,
                });
                return Err(EngineError::BudgetExhausted(outcome));
            }
        }
    }
}
