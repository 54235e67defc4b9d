//! The environment: which agent sits on which cell, and how many agents
//! attack any given cell. Queens boards use O(N) line counters; generic
//! instances keep a dense per-cell conflict counter updated through the
//! precomputed conflict adjacency.

use crate::csp::{build_conflict_index, ConflictIndex, CspInstance, InstanceKind};
use std::sync::Arc;

pub type AgentId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellRef {
    pub row: usize,
    pub pos: usize,
}

pub fn cell(row: usize, pos: usize) -> CellRef {
    CellRef { row, pos }
}

/// Per-line agent tallies for a queens board. A queen at (r, c) sits on
/// column c, difference-diagonal r − c + n − 1, and sum-diagonal r + c.
#[derive(Debug, Clone)]
pub struct QueensCounters {
    pub col_count: Vec<u32>,
    pub diag_count: Vec<u32>,
    pub adiag_count: Vec<u32>,
}

struct QueensBackend {
    n: usize,
    counters: QueensCounters,
    /// Ids of the agents on each line, for attacker enumeration. Order
    /// within a list is unspecified; consumers sort.
    col_agents: Vec<Vec<AgentId>>,
    diag_agents: Vec<Vec<AgentId>>,
    adiag_agents: Vec<Vec<AgentId>>,
}

impl QueensBackend {
    fn new(n: usize) -> Self {
        QueensBackend {
            n,
            counters: QueensCounters {
                col_count: vec![0; n],
                diag_count: vec![0; 2 * n - 1],
                adiag_count: vec![0; 2 * n - 1],
            },
            col_agents: vec![Vec::new(); n],
            diag_agents: vec![Vec::new(); 2 * n - 1],
            adiag_agents: vec![Vec::new(); 2 * n - 1],
        }
    }

    fn lines(&self, c: CellRef) -> (usize, usize, usize) {
        (c.pos, c.row + self.n - 1 - c.pos, c.row + c.pos)
    }

    fn attach(&mut self, agent: AgentId, c: CellRef) {
        let (col, diag, adiag) = self.lines(c);
        self.counters.col_count[col] += 1;
        self.counters.diag_count[diag] += 1;
        self.counters.adiag_count[adiag] += 1;
        self.col_agents[col].push(agent);
        self.diag_agents[diag].push(agent);
        self.adiag_agents[adiag].push(agent);
    }

    fn detach(&mut self, agent: AgentId, c: CellRef) {
        let (col, diag, adiag) = self.lines(c);
        self.counters.col_count[col] -= 1;
        self.counters.diag_count[diag] -= 1;
        self.counters.adiag_count[adiag] -= 1;
        for list in [
            &mut self.col_agents[col],
            &mut self.diag_agents[diag],
            &mut self.adiag_agents[adiag],
        ] {
            let at = list.iter().position(|&a| a == agent).expect("agent on line");
            list.swap_remove(at);
        }
    }

    fn line_sum(&self, c: CellRef) -> u32 {
        let (col, diag, adiag) = self.lines(c);
        self.counters.col_count[col]
            + self.counters.diag_count[diag]
            + self.counters.adiag_count[adiag]
    }
}

struct GenericBackend {
    index: ConflictIndex,
    /// cell_conflicts[flat] = number of placed agents whose cell conflicts
    /// with `flat`. Same-variable cells are never adjacent, so same-row
    /// agents are excluded by construction.
    cell_conflicts: Vec<u32>,
}

impl GenericBackend {
    fn attach(&mut self, c: CellRef) {
        for &g in self.index.adjacent(c.row, c.pos) {
            self.cell_conflicts[g as usize] += 1;
        }
    }

    fn detach(&mut self, c: CellRef) {
        for &g in self.index.adjacent(c.row, c.pos) {
            self.cell_conflicts[g as usize] -= 1;
        }
    }
}

enum Backend {
    Queens(QueensBackend),
    Generic(GenericBackend),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RowState {
    Empty,
    Single,
    Multi,
}

/// Occupancy plus conflict counters for one engine run.
pub struct Space {
    instance: Arc<CspInstance>,
    num_rows: usize,
    agent_cell: Vec<Option<CellRef>>,
    row_members: Vec<Vec<AgentId>>,
    row_state: Vec<RowState>,
    empty_rows: usize,
    single_rows: usize,
    /// Unordered cross-row agent pairs currently in conflict.
    conflict_pairs: u64,
    population: usize,
    backend: Backend,
}

impl Space {
    pub fn new(instance: Arc<CspInstance>) -> Self {
        let num_rows = instance.num_vars();
        let backend = match instance.kind() {
            InstanceKind::Queens(n) => Backend::Queens(QueensBackend::new(*n)),
            _ => {
                let index = build_conflict_index(&instance);
                let cells = index.num_cells();
                Backend::Generic(GenericBackend {
                    index,
                    cell_conflicts: vec![0; cells],
                })
            }
        };
        Space {
            instance,
            num_rows,
            agent_cell: Vec::new(),
            row_members: vec![Vec::new(); num_rows],
            row_state: vec![RowState::Empty; num_rows],
            empty_rows: num_rows,
            single_rows: 0,
            conflict_pairs: 0,
            population: 0,
            backend,
        }
    }

    pub fn instance(&self) -> &Arc<CspInstance> {
        &self.instance
    }

    pub fn num_rows(&self) -> usize {
        self.num_rows
    }

    pub fn width(&self, row: usize) -> usize {
        self.instance.domain_size(row)
    }

    pub fn population(&self) -> usize {
        self.population
    }

    pub fn cell_of(&self, agent: AgentId) -> Option<CellRef> {
        self.agent_cell.get(agent).copied().flatten()
    }

    /// Agents currently placed in `row`, in unspecified order.
    pub fn members(&self, row: usize) -> &[AgentId] {
        &self.row_members[row]
    }

    pub fn conflict_pairs(&self) -> u64 {
        self.conflict_pairs
    }

    pub fn counters(&self) -> Option<&QueensCounters> {
        match &self.backend {
            Backend::Queens(q) => Some(&q.counters),
            Backend::Generic(_) => None,
        }
    }

    fn assert_valid_cell(&self, c: CellRef) {
        assert!(
            c.row < self.num_rows && c.pos < self.width(c.row),
            "cell ({}, {}) outside the space",
            c.row,
            c.pos
        );
    }

    /// Removes an agent from `from` and/or places it at `to`. Both present
    /// is a move; rows may never differ between the two.
    pub fn update_occupancy(&mut self, agent: AgentId, from: Option<CellRef>, to: Option<CellRef>) {
        if let (Some(f), Some(t)) = (from, to) {
            assert_eq!(f.row, t.row, "contract violation: agents never change rows");
        }
        if let Some(f) = from {
            self.assert_valid_cell(f);
            assert_eq!(
                self.cell_of(agent),
                Some(f),
                "contract violation: agent {agent} is not at ({}, {})",
                f.row,
                f.pos
            );
            self.conflict_pairs -= u64::from(self.conflicts_at(f, Some(agent)));
            match &mut self.backend {
                Backend::Queens(q) => q.detach(agent, f),
                Backend::Generic(g) => g.detach(f),
            }
            let members = &mut self.row_members[f.row];
            let at = members.iter().position(|&a| a == agent).expect("member");
            members.swap_remove(at);
            self.agent_cell[agent] = None;
            self.population -= 1;
            self.refresh_row(f.row);
        } else {
            assert_eq!(
                self.cell_of(agent),
                None,
                "contract violation: agent {agent} is already placed"
            );
        }
        if let Some(t) = to {
            self.assert_valid_cell(t);
            if self.agent_cell.len() <= agent {
                self.agent_cell.resize(agent + 1, None);
            }
            self.agent_cell[agent] = Some(t);
            self.row_members[t.row].push(agent);
            match &mut self.backend {
                Backend::Queens(q) => q.attach(agent, t),
                Backend::Generic(g) => g.attach(t),
            }
            self.population += 1;
            self.conflict_pairs += u64::from(self.conflicts_at(t, Some(agent)));
            self.refresh_row(t.row);
        }
    }

    fn refresh_row(&mut self, row: usize) {
        let members = &self.row_members[row];
        let state = if members.is_empty() {
            RowState::Empty
        } else {
            let first = self.agent_cell[members[0]].expect("placed member").pos;
            let single = members[1..]
                .iter()
                .all(|&a| self.agent_cell[a].expect("placed member").pos == first);
            if single {
                RowState::Single
            } else {
                RowState::Multi
            }
        };
        let old = std::mem::replace(&mut self.row_state[row], state);
        match old {
            RowState::Empty => self.empty_rows -= 1,
            RowState::Single => self.single_rows -= 1,
            RowState::Multi => {}
        }
        match state {
            RowState::Empty => self.empty_rows += 1,
            RowState::Single => self.single_rows += 1,
            RowState::Multi => {}
        }
    }

    /// Number of placed agents in other rows whose cell conflicts with
    /// `cell`. `exclude` (the querying agent) never counts; same-row agents
    /// never count.
    pub fn conflicts_at(&self, cell: CellRef, exclude: Option<AgentId>) -> u32 {
        self.assert_valid_cell(cell);
        let raw = match &self.backend {
            Backend::Queens(q) => {
                // Line sums count every agent on the cell's three lines.
                // Same-row agents can only hit all three lines at once (by
                // standing on the cell itself), so subtracting 3 per
                // co-located agent leaves exactly the cross-row attackers.
                let occupants = self.row_members[cell.row]
                    .iter()
                    .filter(|&&a| self.agent_cell[a] == Some(cell))
                    .count() as u32;
                q.line_sum(cell) - 3 * occupants
            }
            Backend::Generic(g) => g.cell_conflicts[g.index.flat(cell.row, cell.pos)],
        };
        let excluded = exclude
            .and_then(|e| self.cell_of(e))
            .is_some_and(|ec| ec.row != cell.row && self.cell_conflicts_cell(ec, cell));
        raw - u32::from(excluded)
    }

    fn cell_conflicts_cell(&self, a: CellRef, b: CellRef) -> bool {
        self.instance.conflicts(a.row, a.pos, b.row, b.pos)
    }

    pub fn row_conflict_profile(&self, row: usize, exclude: Option<AgentId>) -> Vec<u32> {
        let mut out = Vec::new();
        self.row_conflict_profile_into(row, exclude, &mut out);
        out
    }

    /// Writes conflicts_at((row, p), exclude) for every p into `out`.
    /// O(width) for queens, O(width + degree of the excluded cell) generally.
    pub fn row_conflict_profile_into(
        &self,
        row: usize,
        exclude: Option<AgentId>,
        out: &mut Vec<u32>,
    ) {
        out.clear();
        match &self.backend {
            Backend::Queens(q) => {
                let n = q.n;
                let col = &q.counters.col_count;
                let diag = &q.counters.diag_count;
                let adiag = &q.counters.adiag_count;
                out.extend(
                    (0..n).map(|c| col[c] + diag[row + n - 1 - c] + adiag[row + c]),
                );
                for &a in &self.row_members[row] {
                    let p = self.agent_cell[a].expect("placed member").pos;
                    out[p] -= 3;
                }
                if let Some(ec) = exclude.and_then(|e| self.cell_of(e)) {
                    if ec.row != row {
                        let delta = ec.row.abs_diff(row);
                        if delta <= ec.pos {
                            out[ec.pos - delta] -= 1;
                        }
                        out[ec.pos] -= 1;
                        if ec.pos + delta < n {
                            out[ec.pos + delta] -= 1;
                        }
                    }
                }
            }
            Backend::Generic(g) => {
                let base = g.index.flat(row, 0);
                out.extend_from_slice(
                    &g.cell_conflicts[base..base + self.width(row)],
                );
                if let Some(ec) = exclude.and_then(|e| self.cell_of(e)) {
                    if ec.row != row {
                        for &flat in g.index.adjacent_in_var(ec.row, ec.pos, row) {
                            out[flat as usize - base] -= 1;
                        }
                    }
                }
            }
        }
    }

    /// Placed agents co-located with `cell`, ascending by id.
    pub fn residents_at(&self, cell: CellRef) -> Vec<AgentId> {
        let mut ids: Vec<AgentId> = self.row_members[cell.row]
            .iter()
            .copied()
            .filter(|&a| self.agent_cell[a] == Some(cell))
            .collect();
        ids.sort_unstable();
        ids
    }

    /// Cross-row agents conflicting with `cell` (minus `exclude`), ascending
    /// by id. The count always equals conflicts_at(cell, exclude).
    pub fn attackers_of(&self, cell: CellRef, exclude: Option<AgentId>, out: &mut Vec<AgentId>) {
        out.clear();
        match &self.backend {
            Backend::Queens(q) => {
                let (col, diag, adiag) = q.lines(cell);
                for list in [&q.col_agents[col], &q.diag_agents[diag], &q.adiag_agents[adiag]] {
                    for &a in list {
                        if Some(a) != exclude
                            && self.agent_cell[a].expect("on line").row != cell.row
                        {
                            out.push(a);
                        }
                    }
                }
            }
            Backend::Generic(g) => {
                for &flat in g.index.adjacent(cell.row, cell.pos) {
                    let (row, pos) = g.index.unflatten(flat as usize);
                    for &a in &self.row_members[row] {
                        if Some(a) != exclude
                            && self.agent_cell[a] == Some(CellRef { row, pos })
                        {
                            out.push(a);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        debug_assert_eq!(out.len() as u32, self.conflicts_at(cell, exclude));
    }

    /// Adds, for every agent placed in `from_row`, one hit on each cell of
    /// `onto_row` that the agent attacks. Used by the cooperative strategy.
    pub fn add_attack_hits(&self, from_row: usize, onto_row: usize, hits: &mut [u32]) {
        assert_ne!(from_row, onto_row);
        match &self.backend {
            Backend::Queens(q) => {
                let delta = from_row.abs_diff(onto_row);
                for &a in &self.row_members[from_row] {
                    let p = self.agent_cell[a].expect("placed member").pos;
                    if delta <= p {
                        hits[p - delta] += 1;
                    }
                    hits[p] += 1;
                    if p + delta < q.n {
                        hits[p + delta] += 1;
                    }
                }
            }
            Backend::Generic(g) => {
                let base = g.index.flat(onto_row, 0);
                for &a in &self.row_members[from_row] {
                    let c = self.agent_cell[a].expect("placed member");
                    for &flat in g.index.adjacent_in_var(c.row, c.pos, onto_row) {
                        hits[flat as usize - base] += 1;
                    }
                }
            }
        }
    }

    /// O(1) necessary conditions for a solution: no empty row, one distinct
    /// position per row, zero conflicting pairs.
    pub fn solution_ready(&self) -> bool {
        self.empty_rows == 0 && self.single_rows == self.num_rows && self.conflict_pairs == 0
    }

    pub fn has_empty_row(&self) -> bool {
        self.empty_rows > 0
    }

    pub fn first_empty_row(&self) -> Option<usize> {
        self.row_state.iter().position(|&s| s == RowState::Empty)
    }

    /// The one-position-per-row assignment, if every row is single.
    pub fn assignment(&self) -> Option<Vec<usize>> {
        if self.empty_rows != 0 || self.single_rows != self.num_rows {
            return None;
        }
        Some(
            (0..self.num_rows)
                .map(|r| self.agent_cell[self.row_members[r][0]].expect("placed").pos)
                .collect(),
        )
    }

    /// Full O(N) confirmation behind the cheap gates: every row single and
    /// every representative cell attack-free.
    pub fn confirm_solution(&self) -> bool {
        if self.empty_rows != 0 || self.single_rows != self.num_rows {
            return false;
        }
        (0..self.num_rows).all(|r| {
            let rep = self.agent_cell[self.row_members[r][0]].expect("placed");
            self.conflicts_at(rep, None) == 0
        })
    }
}
