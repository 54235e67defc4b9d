//! Agent state and the single-agent action: behavior selection by roulette
//! wheel, target choice under the Random/Least/Coop strategies, and move
//! resolution with energy costs, eating, and death.

use crate::space::{cell, AgentId, Space};
use rand::seq::IndexedRandom;
use rand::Rng;

/// Roulette-wheel selection weights for the three strategies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BehaviorWeights {
    pub random_w: f64,
    pub least_w: f64,
    pub coop_w: f64,
}

/// Parameters an agent needs at spawn and move time. The engine's Config
/// embeds one of these.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentParams {
    pub initial_energy: i64,
    pub step_lose_energy: i64,
    pub merge_threshold: i64,
    pub max_random_w: f64,
    pub max_least_w: f64,
    pub max_coop_w: f64,
    /// Assign the maxima exactly instead of drawing uniformly below them.
    pub fixed_weights: bool,
    pub coop_bit_density: f64,
}

impl Default for AgentParams {
    /// merge_threshold defaults to 0 (any energy difference lets the richer
    /// co-located agent eat the poorer). Larger thresholds let equal-energy
    /// agents pile up without pruning, which stalls the chained-run speedup
    /// and, with no randomness, can freeze whole boards short of a solution.
    fn default() -> Self {
        AgentParams {
            initial_energy: 100,
            step_lose_energy: 1,
            merge_threshold: 0,
            max_random_w: 1.0,
            max_least_w: 90.0,
            max_coop_w: 20.0,
            fixed_weights: false,
            coop_bit_density: 0.25,
        }
    }
}

/// Fixed-width bit vector over rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowBits {
    words: Vec<u64>,
    len: usize,
}

impl RowBits {
    pub fn with_len(len: usize) -> Self {
        RowBits {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len);
        self.words[i / 64] & (1 << (i % 64)) != 0
    }

    pub fn none_set(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &word)| {
            let mut rest = word;
            std::iter::from_fn(move || {
                if rest == 0 {
                    None
                } else {
                    let bit = rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    Some(wi * 64 + bit)
                }
            })
        })
    }
}

/// A living queen candidate. The row never changes; the current position is
/// tracked by the Space.
#[derive(Debug, Clone)]
pub struct Agent {
    pub id: AgentId,
    pub row: usize,
    pub energy: i64,
    pub weights: BehaviorWeights,
    /// Rows whose agents this one tries not to attack (own row always 0).
    pub coop_rows: RowBits,
    pub alive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Behavior {
    Random,
    Least,
    Coop,
    Stay,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OutcomeKind {
    Stayed,
    Moved,
    /// Prey ids with the energy absorbed from each, in eat order.
    MovedAndAte { eaten: Vec<(AgentId, i64)> },
    WasEaten { winner: AgentId },
}

/// Event record for one agent action; the unit of traces and tests.
#[derive(Debug, Clone, PartialEq)]
pub struct MoveOutcome {
    pub agent_id: AgentId,
    pub row: usize,
    pub from: usize,
    pub to: usize,
    pub kind: OutcomeKind,
    pub energy_delta_self: i64,
    pub attackers_penalized: Vec<AgentId>,
    /// Agents whose post-step energy dropped to 0 or below, ascending.
    pub deaths: Vec<AgentId>,
}

/// Reusable buffers for the target-selection scans.
#[derive(Debug, Default)]
pub struct TargetScratch {
    profile: Vec<u32>,
    hits: Vec<u32>,
    ties: Vec<usize>,
}

pub fn spawn_agent(
    id: AgentId,
    row: usize,
    num_rows: usize,
    params: &AgentParams,
    rng: &mut impl Rng,
) -> Agent {
    let weights = if params.fixed_weights {
        BehaviorWeights {
            random_w: params.max_random_w,
            least_w: params.max_least_w,
            coop_w: params.max_coop_w,
        }
    } else {
        BehaviorWeights {
            random_w: rng.random_range(0.0..=params.max_random_w),
            least_w: rng.random_range(0.0..=params.max_least_w),
            coop_w: rng.random_range(0.0..=params.max_coop_w),
        }
    };
    let mut coop_rows = RowBits::with_len(num_rows);
    for r in 0..num_rows {
        coop_rows.set(r, rng.random_bool(params.coop_bit_density));
    }
    coop_rows.set(row, false);
    Agent {
        id,
        row,
        energy: params.initial_energy,
        weights,
        coop_rows,
        alive: true,
    }
}

/// Roulette wheel over the three weights; an all-zero wheel degenerates to
/// staying put.
pub fn select_behavior(agent: &Agent, rng: &mut impl Rng) -> Behavior {
    let w = agent.weights;
    let sum = w.random_w + w.least_w + w.coop_w;
    if sum <= 0.0 {
        return Behavior::Stay;
    }
    let u = rng.random_range(0.0..sum);
    if u < w.random_w {
        Behavior::Random
    } else if u < w.random_w + w.least_w {
        Behavior::Least
    } else {
        Behavior::Coop
    }
}

/// Uniform over the row, including the current position (which resolves to
/// a stay).
pub fn target_random(agent: &Agent, space: &Space, rng: &mut impl Rng) -> usize {
    rng.random_range(0..space.width(agent.row))
}

fn pick_tie(ties: &[usize], rng: &mut impl Rng) -> usize {
    if ties.len() == 1 {
        ties[0]
    } else {
        *ties.choose(rng).expect("non-empty tie set")
    }
}

/// Position minimizing the row's conflict profile; ties uniform. An agent
/// whose current position is already conflict-free keeps it: staying there
/// costs nothing, every move costs at least the step price, and resting is
/// what lets the population settle instead of reshuffling between
/// equivalent free cells.
pub fn target_least(
    agent: &Agent,
    space: &Space,
    rng: &mut impl Rng,
    scratch: &mut TargetScratch,
) -> usize {
    space.row_conflict_profile_into(agent.row, Some(agent.id), &mut scratch.profile);
    let cur = space.cell_of(agent.id).expect("placed agent").pos;
    if scratch.profile[cur] == 0 {
        return cur;
    }
    let min = *scratch.profile.iter().min().expect("non-empty row");
    scratch.ties.clear();
    scratch
        .ties
        .extend(scratch.profile.iter().enumerate().filter_map(|(p, &v)| {
            (v == min).then_some(p)
        }));
    pick_tie(&scratch.ties, rng)
}

/// Position minimizing (hits on CoopVector-protected rows, total conflicts)
/// lexicographically; ties uniform. With an all-zero vector this reduces to
/// target_least. A conflict-free current position is kept outright — it
/// attains the global minimum (0, 0), and resting mirrors target_least.
pub fn target_coop(
    agent: &Agent,
    space: &Space,
    rng: &mut impl Rng,
    scratch: &mut TargetScratch,
) -> usize {
    space.row_conflict_profile_into(agent.row, Some(agent.id), &mut scratch.profile);
    let cur = space.cell_of(agent.id).expect("placed agent").pos;
    if scratch.profile[cur] == 0 {
        return cur;
    }
    let width = scratch.profile.len();
    scratch.hits.clear();
    scratch.hits.resize(width, 0);
    for protected in agent.coop_rows.iter_ones() {
        space.add_attack_hits(protected, agent.row, &mut scratch.hits);
    }
    let best = (0..width)
        .map(|p| (scratch.hits[p], scratch.profile[p]))
        .min()
        .expect("non-empty row");
    scratch.ties.clear();
    scratch.ties.extend(
        (0..width).filter(|&p| (scratch.hits[p], scratch.profile[p]) == best),
    );
    pick_tie(&scratch.ties, rng)
}

/// Executes a move chosen by one of the strategies. Staying is free; moving
/// runs eat resolution against co-located residents (ascending id, current
/// energies), then — if the mover survived — applies the movement cost
/// StepLoseEnergy + m and charges each of the m attackers one unit. Agents
/// at energy ≤ 0 are removed immediately.
pub fn resolve_move(
    pop: &mut [Agent],
    mover: AgentId,
    dest: usize,
    space: &mut Space,
    params: &AgentParams,
) -> MoveOutcome {
    let from_cell = space
        .cell_of(mover)
        .unwrap_or_else(|| panic!("contract violation: agent {mover} is not placed"));
    assert!(pop[mover].alive, "contract violation: dead agent scheduled");
    let row = from_cell.row;
    let from = from_cell.pos;
    let pre_energy = pop[mover].energy;

    if dest == from {
        return MoveOutcome {
            agent_id: mover,
            row,
            from,
            to: dest,
            kind: OutcomeKind::Stayed,
            energy_delta_self: 0,
            attackers_penalized: Vec::new(),
            deaths: Vec::new(),
        };
    }

    let dest_cell = cell(row, dest);
    space.update_occupancy(mover, Some(from_cell), Some(dest_cell));

    let mut eaten: Vec<(AgentId, i64)> = Vec::new();
    for resident in space.residents_at(dest_cell) {
        if resident == mover {
            continue;
        }
        let (e_mover, e_resident) = (pop[mover].energy, pop[resident].energy);
        if (e_mover - e_resident).abs() > params.merge_threshold {
            if e_mover > e_resident {
                pop[mover].energy += e_resident;
                pop[resident].alive = false;
                space.update_occupancy(resident, Some(dest_cell), None);
                eaten.push((resident, e_resident));
            } else {
                pop[resident].energy += e_mover;
                pop[mover].alive = false;
                space.update_occupancy(mover, Some(dest_cell), None);
                return MoveOutcome {
                    agent_id: mover,
                    row,
                    from,
                    to: dest,
                    kind: OutcomeKind::WasEaten { winner: resident },
                    energy_delta_self: -pre_energy,
                    attackers_penalized: Vec::new(),
                    deaths: Vec::new(),
                };
            }
        }
    }

    let mut attackers = Vec::new();
    space.attackers_of(dest_cell, Some(mover), &mut attackers);
    let m = attackers.len() as i64;
    pop[mover].energy -= params.step_lose_energy + m;

    let mut deaths = Vec::new();
    for &a in &attackers {
        pop[a].energy -= 1;
        if pop[a].energy <= 0 {
            pop[a].alive = false;
            let c = space.cell_of(a).expect("attacker placed");
            space.update_occupancy(a, Some(c), None);
            deaths.push(a);
        }
    }
    if pop[mover].energy <= 0 {
        pop[mover].alive = false;
        space.update_occupancy(mover, Some(dest_cell), None);
        deaths.push(mover);
    }
    deaths.sort_unstable();

    MoveOutcome {
        agent_id: mover,
        row,
        from,
        to: dest,
        kind: if eaten.is_empty() {
            OutcomeKind::Moved
        } else {
            OutcomeKind::MovedAndAte { eaten }
        },
        energy_delta_self: pop[mover].energy - pre_energy,
        attackers_penalized: attackers,
        deaths,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::CspInstance;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn queens_space(n: usize) -> Space {
        Space::new(Arc::new(CspInstance::queens(n)))
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn agent_with(id: AgentId, row: usize, num_rows: usize, energy: i64) -> Agent {
        Agent {
            id,
            row,
            energy,
            weights: BehaviorWeights {
                random_w: 0.0,
                least_w: 1.0,
                coop_w: 0.0,
            },
            coop_rows: RowBits::with_len(num_rows),
            alive: true,
        }
    }

    /// Spawns a population and places each agent somewhere for move tests.
    fn build_population(
        space: &mut Space,
        placements: &[(usize, usize, i64)], // (row, pos, energy)
    ) -> Vec<Agent> {
        let n = space.num_rows();
        placements
            .iter()
            .enumerate()
            .map(|(id, &(row, pos, energy))| {
                space.update_occupancy(id, None, Some(cell(row, pos)));
                agent_with(id, row, n, energy)
            })
            .collect()
    }

    #[test]
    fn spawn_respects_weight_bounds() {
        let params = AgentParams::default();
        let mut r = rng(3);
        for id in 0..200 {
            let a = spawn_agent(id, id % 8, 8, &params, &mut r);
            assert!(a.weights.random_w >= 0.0 && a.weights.random_w <= 1.0);
            assert!(a.weights.least_w >= 0.0 && a.weights.least_w <= 90.0);
            assert!(a.weights.coop_w >= 0.0 && a.weights.coop_w <= 20.0);
            assert_eq!(a.energy, 100);
            assert!(!a.coop_rows.get(a.row));
        }
    }

    #[test]
    fn spawn_zero_density_gives_empty_coop_vector() {
        let params = AgentParams {
            coop_bit_density: 0.0,
            ..AgentParams::default()
        };
        let a = spawn_agent(0, 2, 8, &params, &mut rng(1));
        assert!(a.coop_rows.none_set());
    }

    #[test]
    fn spawn_is_seed_deterministic() {
        let params = AgentParams::default();
        let spawn_all = || {
            let mut r = rng(42);
            (0..24)
                .map(|id| spawn_agent(id, id % 8, 8, &params, &mut r))
                .collect::<Vec<_>>()
        };
        let (a, b) = (spawn_all(), spawn_all());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.weights, y.weights);
            assert_eq!(x.coop_rows, y.coop_rows);
        }
    }

    #[test]
    fn fixed_weights_assign_maxima_exactly() {
        let params = AgentParams {
            fixed_weights: true,
            ..AgentParams::default()
        };
        let a = spawn_agent(0, 0, 8, &params, &mut rng(5));
        assert_eq!(a.weights.random_w, 1.0);
        assert_eq!(a.weights.least_w, 90.0);
        assert_eq!(a.weights.coop_w, 20.0);
    }

    #[test]
    fn degenerate_wheels() {
        let mut a = agent_with(0, 0, 4, 100);
        let mut r = rng(7);
        for _ in 0..50 {
            assert_eq!(select_behavior(&a, &mut r), Behavior::Least);
        }
        a.weights = BehaviorWeights {
            random_w: 0.0,
            least_w: 0.0,
            coop_w: 0.0,
        };
        assert_eq!(select_behavior(&a, &mut r), Behavior::Stay);
    }

    #[test]
    fn behavior_frequencies_match_weights() {
        let mut a = agent_with(0, 0, 4, 100);
        a.weights = BehaviorWeights {
            random_w: 1.0,
            least_w: 90.0,
            coop_w: 20.0,
        };
        let mut r = rng(11);
        let draws = 100_000usize;
        let mut counts = [0usize; 3];
        for _ in 0..draws {
            match select_behavior(&a, &mut r) {
                Behavior::Random => counts[0] += 1,
                Behavior::Least => counts[1] += 1,
                Behavior::Coop => counts[2] += 1,
                Behavior::Stay => unreachable!(),
            }
        }
        for (count, p) in counts.iter().zip([1.0 / 111.0, 90.0 / 111.0, 20.0 / 111.0]) {
            let expected = draws as f64 * p;
            let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
            assert!(
                (*count as f64 - expected).abs() < 3.0 * sigma,
                "count {count} vs expected {expected:.1} ± {sigma:.1}"
            );
        }
    }

    #[test]
    fn random_target_on_unit_row() {
        let mut space = queens_space(1);
        let pop = build_population(&mut space, &[(0, 0, 100)]);
        assert_eq!(target_random(&pop[0], &space, &mut rng(1)), 0);
    }

    #[test]
    fn random_target_is_uniform() {
        let mut space = queens_space(4);
        let pop = build_population(&mut space, &[(0, 0, 100)]);
        let mut r = rng(23);
        let draws = 100_000usize;
        let mut counts = [0usize; 4];
        for _ in 0..draws {
            counts[target_random(&pop[0], &space, &mut r)] += 1;
        }
        // Chi-square against uniform, df = 3; 16.27 is the p = 0.001 cutoff.
        let expected = draws as f64 / 4.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        assert!(chi2 < 16.27, "chi-square {chi2}");
    }

    #[test]
    fn least_picks_unique_argmin() {
        let mut space = queens_space(4);
        // Row 1 profile becomes [2,1,1,0]: (0,0) attacks 0,1; (3,0) attacks 0,2.
        // The mover starts on the conflicted position 0 and must find 3.
        let pop = build_population(&mut space, &[(0, 0, 100), (3, 0, 100), (1, 0, 100)]);
        assert_eq!(space.row_conflict_profile(1, Some(2)), vec![2, 1, 1, 0]);
        let mut scratch = TargetScratch::default();
        for seed in 0..20 {
            assert_eq!(target_least(&pop[2], &space, &mut rng(seed), &mut scratch), 3);
        }
    }

    #[test]
    fn least_and_coop_rest_on_conflict_free_position() {
        let mut space = queens_space(4);
        // Row 1 profile [1,1,0,0]: the mover sits on position 2, which is
        // conflict-free but tied with 3. It must keep 2 rather than drift.
        let mut pop = build_population(&mut space, &[(0, 0, 100), (1, 2, 100)]);
        pop[1].coop_rows.set(0, true);
        let mut scratch = TargetScratch::default();
        for seed in 0..50 {
            assert_eq!(target_least(&pop[1], &space, &mut rng(seed), &mut scratch), 2);
            assert_eq!(target_coop(&pop[1], &space, &mut rng(seed), &mut scratch), 2);
        }
    }

    #[test]
    fn least_breaks_ties_uniformly() {
        let mut space = queens_space(4);
        // Row 1 profile [1,1,0,0]: ties {2,3}.
        let pop = build_population(&mut space, &[(0, 0, 100), (1, 0, 100)]);
        assert_eq!(space.row_conflict_profile(1, Some(1)), vec![1, 1, 0, 0]);
        let mut scratch = TargetScratch::default();
        let mut r = rng(31);
        let mut counts = [0usize; 4];
        let draws = 20_000;
        for _ in 0..draws {
            counts[target_least(&pop[1], &space, &mut r, &mut scratch)] += 1;
        }
        assert_eq!(counts[0] + counts[1], 0);
        let half = draws as f64 / 2.0;
        let sigma = (draws as f64 * 0.25).sqrt();
        assert!((counts[2] as f64 - half).abs() < 4.0 * sigma);
    }

    #[test]
    fn coop_avoids_protected_rows() {
        let mut space = queens_space(4);
        // Row 3 profile [3,1,2,1]; protecting row 0 adds hits [1,0,0,1],
        // so the lexicographic minimum is uniquely position 1.
        let mut pop = build_population(
            &mut space,
            &[(0, 0, 100), (1, 2, 100), (2, 1, 100), (3, 3, 100)],
        );
        assert_eq!(space.row_conflict_profile(3, Some(3)), vec![3, 1, 2, 1]);
        pop[3].coop_rows.set(0, true);
        let mut scratch = TargetScratch::default();
        for seed in 0..20 {
            assert_eq!(target_coop(&pop[3], &space, &mut rng(seed), &mut scratch), 1);
        }
    }

    #[test]
    fn coop_falls_back_when_no_cell_is_clean() {
        let mut space = queens_space(4);
        let mut pop = build_population(
            &mut space,
            &[(0, 0, 100), (1, 2, 100), (2, 1, 100), (3, 3, 100)],
        );
        // Protecting all other rows: hits [3,1,2,1], totals [3,1,2,1];
        // lexicographic minimum ties on {1,3}.
        for r in 0..3 {
            pop[3].coop_rows.set(r, true);
        }
        let mut scratch = TargetScratch::default();
        let mut r = rng(37);
        let mut seen = [0usize; 4];
        for _ in 0..4000 {
            seen[target_coop(&pop[3], &space, &mut r, &mut scratch)] += 1;
        }
        assert_eq!(seen[0] + seen[2], 0);
        assert!(seen[1] > 1500 && seen[3] > 1500);
    }

    #[test]
    fn coop_with_empty_vector_equals_least() {
        let mut r = rng(41);
        for round in 0..100 {
            let n = 4 + (round % 5);
            let mut space = queens_space(n);
            let placements: Vec<(usize, usize, i64)> = (0..n)
                .map(|row| (row, r.random_range(0..n), 100))
                .collect();
            let pop = build_population(&mut space, &placements);
            let probe = &pop[r.random_range(0..n)];
            let mut scratch = TargetScratch::default();
            let mut ra = r.clone();
            let mut rb = r.clone();
            let a = target_least(probe, &space, &mut ra, &mut scratch);
            let b = target_coop(probe, &space, &mut rb, &mut scratch);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn staying_is_free() {
        let mut space = queens_space(4);
        let mut pop = build_population(&mut space, &[(0, 1, 100), (1, 1, 100)]);
        let before = space.conflict_pairs();
        let out = resolve_move(&mut pop, 0, 1, &mut space, &AgentParams::default());
        assert_eq!(out.kind, OutcomeKind::Stayed);
        assert_eq!(out.energy_delta_self, 0);
        assert_eq!(pop[0].energy, 100);
        assert_eq!(space.conflict_pairs(), before);
    }

    #[test]
    fn move_cost_charges_mover_and_attackers() {
        let mut space = queens_space(4);
        // Moving to (1,0) meets column attackers at (0,0) and (2,0): m = 2.
        let mut pop = build_population(&mut space, &[(0, 0, 100), (2, 0, 100), (1, 3, 50)]);
        let out = resolve_move(&mut pop, 2, 0, &mut space, &AgentParams::default());
        assert_eq!(out.kind, OutcomeKind::Moved);
        assert_eq!(pop[2].energy, 47);
        assert_eq!(out.energy_delta_self, -3);
        assert_eq!(out.attackers_penalized, vec![0, 1]);
        assert_eq!(pop[0].energy, 99);
        assert_eq!(pop[1].energy, 99);
        assert!(out.deaths.is_empty());
    }

    #[test]
    fn richer_mover_eats_resident() {
        let mut space = queens_space(4);
        // Resident in the mover's row, no cross-row attackers at dest.
        let mut pop = build_population(&mut space, &[(0, 0, 30), (0, 3, 100)]);
        let out = resolve_move(&mut pop, 1, 0, &mut space, &AgentParams::default());
        assert_eq!(
            out.kind,
            OutcomeKind::MovedAndAte {
                eaten: vec![(0, 30)]
            }
        );
        assert_eq!(pop[1].energy, 129); // 100 + 30 − 1
        assert!(!pop[0].alive);
        assert_eq!(space.cell_of(0), None);
        assert!(out.deaths.is_empty());
    }

    #[test]
    fn poorer_mover_is_eaten_and_pays_nothing() {
        let mut space = queens_space(4);
        // A cross-row attacker watches the destination; it must NOT be
        // penalized because the mover never completes the move.
        let mut pop =
            build_population(&mut space, &[(0, 0, 100), (0, 3, 10), (1, 1, 80)]);
        let out = resolve_move(&mut pop, 1, 0, &mut space, &AgentParams::default());
        assert_eq!(out.kind, OutcomeKind::WasEaten { winner: 0 });
        assert_eq!(out.energy_delta_self, -10);
        assert_eq!(pop[0].energy, 110);
        assert_eq!(pop[2].energy, 80);
        assert!(!pop[1].alive);
        assert_eq!(space.cell_of(1), None);
        assert!(out.attackers_penalized.is_empty());
        assert!(out.deaths.is_empty());
    }

    #[test]
    fn energy_gap_at_threshold_coexists() {
        let mut space = queens_space(4);
        let mut pop = build_population(&mut space, &[(0, 0, 100), (0, 3, 120)]);
        let params = AgentParams {
            merge_threshold: 20,
            ..AgentParams::default()
        };
        let out = resolve_move(&mut pop, 1, 0, &mut space, &params);
        assert_eq!(out.kind, OutcomeKind::Moved);
        assert!(pop[0].alive && pop[1].alive);
        assert_eq!(pop[0].energy, 100);
        assert_eq!(pop[1].energy, 119); // only the step cost
        assert_eq!(space.residents_at(cell(0, 0)), vec![0, 1]);
    }

    #[test]
    fn deaths_are_removed_immediately() {
        let mut space = queens_space(4);
        // The attacker at (0,0) has 1 energy: the −1 penalty kills it.
        let mut pop = build_population(&mut space, &[(0, 0, 1), (1, 3, 50)]);
        let out = resolve_move(&mut pop, 1, 0, &mut space, &AgentParams::default());
        assert_eq!(out.deaths, vec![0]);
        assert!(!pop[0].alive);
        assert_eq!(space.cell_of(0), None);
        assert_eq!(pop[1].energy, 48);
    }

    #[test]
    fn mover_can_die_from_its_own_cost() {
        let mut space = queens_space(4);
        let mut pop = build_population(&mut space, &[(0, 0, 100), (1, 3, 2)]);
        let out = resolve_move(&mut pop, 1, 0, &mut space, &AgentParams::default());
        assert_eq!(out.deaths, vec![1]);
        assert!(!pop[1].alive);
        assert_eq!(space.cell_of(1), None);
        assert_eq!(pop[0].energy, 99); // penalty applied before the death
    }

    #[test]
    #[should_panic(expected = "contract violation")]
    fn unplaced_mover_is_rejected() {
        let mut space = queens_space(4);
        let mut pop = vec![agent_with(0, 0, 4, 100)];
        resolve_move(&mut pop, 0, 1, &mut space, &AgentParams::default());
    }

    /// Random move traffic; checks the energy-accounting invariants.
    #[test]
    fn energy_accounting_under_random_traffic() {
        let params = AgentParams::default();
        let mut r = rng(47);
        for _ in 0..200 {
            let n = r.random_range(4..=8usize);
            let mut space = queens_space(n);
            let mut pop: Vec<Agent> = Vec::new();
            for id in 0..2 * n {
                let row = id % n;
                let a = agent_with(id, row, n, r.random_range(1..=120));
                space.update_occupancy(id, None, Some(cell(row, r.random_range(0..n))));
                pop.push(a);
            }
            for _ in 0..60 {
                let movers: Vec<AgentId> =
                    pop.iter().filter(|a| a.alive).map(|a| a.id).collect();
                if movers.is_empty() {
                    break;
                }
                let mover = movers[r.random_range(0..movers.len())];
                let dest = r.random_range(0..n);
                let total_before: i64 =
                    pop.iter().filter(|a| a.alive).map(|a| a.energy).sum();
                let out = resolve_move(&mut pop, mover, dest, &mut space, &params);
                let total_after: i64 =
                    pop.iter().filter(|a| a.alive).map(|a| a.energy).sum();

                assert!(total_after <= total_before, "energy must never increase");
                match &out.kind {
                    OutcomeKind::Stayed => assert_eq!(total_after, total_before),
                    OutcomeKind::WasEaten { .. } => {
                        // Pure transfer: the winner holds the mover's energy.
                        assert_eq!(total_after, total_before);
                    }
                    OutcomeKind::Moved | OutcomeKind::MovedAndAte { .. } => {
                        if out.deaths.is_empty() {
                            let m = out.attackers_penalized.len() as i64;
                            assert_eq!(
                                total_before - total_after,
                                params.step_lose_energy + 2 * m
                            );
                        }
                        if let OutcomeKind::MovedAndAte { eaten } = &out.kind {
                            // Absorption is exact: delta = gains − move cost.
                            let gained: i64 = eaten.iter().map(|&(_, e)| e).sum();
                            if pop[mover].alive {
                                let m = out.attackers_penalized.len() as i64;
                                assert_eq!(
                                    out.energy_delta_self,
                                    gained - params.step_lose_energy - m
                                );
                            }
                        }
                    }
                }
                // Row immutability: whatever happened, nobody changed rows.
                for a in &pop {
                    if let Some(c) = space.cell_of(a.id) {
                        assert_eq!(c.row, a.row);
                    }
                }
            }
        }
    }
}
