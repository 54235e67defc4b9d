//! Problem definitions: variables, per-variable domains, and a symmetric
//! binary conflict relation. N-queens is one built-in instance kind; anything
//! else is expressed extensionally as forbidden value pairs (nogoods).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("malformed instance document: {0}")]
    MalformedDocument(#[from] serde_json::Error),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
}

/// How an instance came to be. Queens instances answer conflict queries
/// structurally; the other kinds carry explicit nogood tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InstanceKind {
    Queens(usize),
    Extensional,
    Generated,
}

/// True iff queens on distinct rows `i` and `j` at columns `a` and `b`
/// attack each other (same column or same diagonal).
pub fn queens_conflict(i: usize, a: usize, j: usize, b: usize) -> bool {
    assert_ne!(i, j, "queens_conflict is defined for distinct rows only");
    a == b || i.abs_diff(j) == a.abs_diff(b)
}

type NogoodTable = BTreeMap<(usize, usize), BTreeSet<(usize, usize)>>;

/// A binary CSP: `num_vars` variables, a domain size per variable, and a
/// symmetric conflict predicate over value pairs of distinct variables.
#[derive(Debug, Clone)]
pub struct CspInstance {
    kind: InstanceKind,
    num_vars: usize,
    domain_sizes: Vec<usize>,
    /// Forbidden pairs keyed by `(i, j)` with `i < j`; entries are `(a, b)`
    /// with `a` for variable `i`. Empty for queens instances.
    nogoods: NogoodTable,
}

impl CspInstance {
    pub fn queens(n: usize) -> Self {
        assert!(n >= 1, "queens instance needs at least one row");
        CspInstance {
            kind: InstanceKind::Queens(n),
            num_vars: n,
            domain_sizes: vec![n; n],
            nogoods: NogoodTable::new(),
        }
    }

    fn extensional(
        kind: InstanceKind,
        domain_sizes: Vec<usize>,
        nogoods: NogoodTable,
    ) -> Self {
        CspInstance {
            kind,
            num_vars: domain_sizes.len(),
            domain_sizes,
            nogoods,
        }
    }

    pub fn kind(&self) -> &InstanceKind {
        &self.kind
    }

    /// Board size if this is a queens instance.
    pub fn queens_n(&self) -> Option<usize> {
        match self.kind {
            InstanceKind::Queens(n) => Some(n),
            _ => None,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn domain_sizes(&self) -> &[usize] {
        &self.domain_sizes
    }

    pub fn domain_size(&self, var: usize) -> usize {
        self.domain_sizes[var]
    }

    /// Σ|Dᵢ|, the number of distinct cells.
    pub fn total_cells(&self) -> usize {
        self.domain_sizes.iter().sum()
    }

    /// The conflict predicate. Symmetric; never defined for `i == j`.
    pub fn conflicts(&self, i: usize, a: usize, j: usize, b: usize) -> bool {
        assert_ne!(i, j, "conflict relation is over distinct variables");
        match self.kind {
            InstanceKind::Queens(_) => queens_conflict(i, a, j, b),
            _ => {
                let (key, pair) = if i < j { ((i, j), (a, b)) } else { ((j, i), (b, a)) };
                self.nogoods
                    .get(&key)
                    .is_some_and(|set| set.contains(&pair))
            }
        }
    }

    /// Re-expresses the instance as an explicit nogood table. Used to run a
    /// queens problem through the generic engine path.
    pub fn as_extensional(&self) -> CspInstance {
        let mut nogoods = NogoodTable::new();
        for i in 0..self.num_vars {
            for j in (i + 1)..self.num_vars {
                let mut set = BTreeSet::new();
                for a in 0..self.domain_sizes[i] {
                    for b in 0..self.domain_sizes[j] {
                        if self.conflicts(i, a, j, b) {
                            set.insert((a, b));
                        }
                    }
                }
                if !set.is_empty() {
                    nogoods.insert((i, j), set);
                }
            }
        }
        CspInstance::extensional(InstanceKind::Extensional, self.domain_sizes.clone(), nogoods)
    }

    /// Extensional equality of the conflict relation (kind tags ignored).
    /// Quadratic in cells; intended for tests and small instances.
    pub fn same_constraints(&self, other: &CspInstance) -> bool {
        if self.num_vars != other.num_vars || self.domain_sizes != other.domain_sizes {
            return false;
        }
        for i in 0..self.num_vars {
            for j in (i + 1)..self.num_vars {
                for a in 0..self.domain_sizes[i] {
                    for b in 0..self.domain_sizes[j] {
                        if self.conflicts(i, a, j, b) != other.conflicts(i, a, j, b) {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDocument {
    format_version: u32,
    num_vars: usize,
    domains: Vec<usize>,
    constraints: Vec<ConstraintDocument>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstraintDocument {
    scope: Vec<usize>,
    forbidden: Vec<Vec<usize>>,
}

/// Parses the JSON instance document. Forbidden pairs are deduplicated and
/// stored symmetrically; indices are validated against the declared domains.
pub fn parse_instance(document: &str) -> Result<CspInstance, InstanceError> {
    let doc: InstanceDocument = serde_json::from_str(document)?;
    if doc.format_version != 1 {
        return Err(InstanceError::InvalidInstance(format!(
            "unsupported format_version {} (expected 1)",
            doc.format_version
        )));
    }
    if doc.domains.len() != doc.num_vars {
        return Err(InstanceError::InvalidInstance(format!(
            "num_vars is {} but {} domains are declared",
            doc.num_vars,
            doc.domains.len()
        )));
    }
    if let Some(var) = doc.domains.iter().position(|&d| d == 0) {
        return Err(InstanceError::InvalidInstance(format!(
            "variable {var} has an empty domain"
        )));
    }

    let mut nogoods = NogoodTable::new();
    for (idx, constraint) in doc.constraints.iter().enumerate() {
        let [i, j] = constraint.scope[..] else {
            return Err(InstanceError::InvalidInstance(format!(
                "constraint {idx}: scope must name exactly two variables, got {}",
                constraint.scope.len()
            )));
        };
        if i == j {
            return Err(InstanceError::InvalidInstance(format!(
                "constraint {idx}: scope [{i}, {j}] names the same variable twice"
            )));
        }
        if i >= doc.num_vars || j >= doc.num_vars {
            return Err(InstanceError::InvalidInstance(format!(
                "constraint {idx}: scope [{i}, {j}] is out of range for {} variables",
                doc.num_vars
            )));
        }
        let set = nogoods.entry(if i < j { (i, j) } else { (j, i) }).or_default();
        for pair in &constraint.forbidden {
            let [a, b] = pair[..] else {
                return Err(InstanceError::InvalidInstance(format!(
                    "constraint {idx}: forbidden entries must be value pairs"
                )));
            };
            if a >= doc.domains[i] || b >= doc.domains[j] {
                return Err(InstanceError::InvalidInstance(format!(
                    "constraint {idx}: forbidden pair [{a}, {b}] is out of domain range"
                )));
            }
            set.insert(if i < j { (a, b) } else { (b, a) });
        }
    }
    nogoods.retain(|_, set| !set.is_empty());

    Ok(CspInstance::extensional(
        InstanceKind::Extensional,
        doc.domains,
        nogoods,
    ))
}

/// Serializes an instance to the document format. Queens instances are
/// materialized into explicit nogoods first.
pub fn emit_instance(instance: &CspInstance) -> String {
    let materialized;
    let source = match instance.kind {
        InstanceKind::Queens(_) => {
            materialized = instance.as_extensional();
            &materialized
        }
        _ => instance,
    };
    let constraints = source
        .nogoods
        .iter()
        .map(|(&(i, j), set)| ConstraintDocument {
            scope: vec![i, j],
            forbidden: set.iter().map(|&(a, b)| vec![a, b]).collect(),
        })
        .collect();
    let doc = InstanceDocument {
        format_version: 1,
        num_vars: source.num_vars,
        domains: source.domain_sizes.clone(),
        constraints,
    };
    serde_json::to_string_pretty(&doc).expect("instance document serialization cannot fail")
}

/// Precomputed adjacency over cells: for each cell `(i, a)`, every cell
/// `(j, b)` whose value pair conflicts with it.
#[derive(Debug, Clone)]
pub struct ConflictIndex {
    /// Flat cell index base per variable; `offsets[num_vars]` is Σ|Dᵢ|.
    offsets: Vec<usize>,
    /// Variable owning each flat cell.
    cell_var: Vec<u32>,
    /// Sorted flat ids of conflicting cells, per flat cell.
    adjacency: Vec<Vec<u32>>,
}

impl ConflictIndex {
    pub fn num_cells(&self) -> usize {
        self.cell_var.len()
    }

    pub fn flat(&self, var: usize, val: usize) -> usize {
        self.offsets[var] + val
    }

    pub fn unflatten(&self, flat: usize) -> (usize, usize) {
        let var = self.cell_var[flat] as usize;
        (var, flat - self.offsets[var])
    }

    pub fn var_range(&self, var: usize) -> std::ops::Range<usize> {
        self.offsets[var]..self.offsets[var + 1]
    }

    /// Conflicting cells of `(var, val)`, as sorted flat ids.
    pub fn adjacent(&self, var: usize, val: usize) -> &[u32] {
        &self.adjacency[self.flat(var, val)]
    }

    /// The sub-slice of `adjacent(var, val)` that lies in `other_var`'s row.
    pub fn adjacent_in_var(&self, var: usize, val: usize, other_var: usize) -> &[u32] {
        let adj = self.adjacent(var, val);
        let range = self.var_range(other_var);
        let lo = adj.partition_point(|&c| (c as usize) < range.start);
        let hi = adj.partition_point(|&c| (c as usize) < range.end);
        &adj[lo..hi]
    }
}

/// Materializes the conflict adjacency for an instance. Queens adjacency is
/// enumerated structurally (three attacked cells per foreign row); nogood
/// tables are walked directly.
pub fn build_conflict_index(instance: &CspInstance) -> ConflictIndex {
    let num_vars = instance.num_vars();
    let mut offsets = Vec::with_capacity(num_vars + 1);
    let mut total = 0usize;
    for &d in instance.domain_sizes() {
        offsets.push(total);
        total += d;
    }
    offsets.push(total);

    let mut cell_var = vec![0u32; total];
    for var in 0..num_vars {
        cell_var[offsets[var]..offsets[var + 1]].fill(var as u32);
    }

    let mut adjacency = vec![Vec::new(); total];
    match instance.kind {
        InstanceKind::Queens(n) => {
            for i in 0..n {
                for a in 0..n {
                    let flat = offsets[i] + a;
                    for (j, &row_base) in offsets.iter().enumerate().take(n) {
                        if j == i {
                            continue;
                        }
                        let delta = i.abs_diff(j);
                        let mut push = |b: usize| adjacency[flat].push((row_base + b) as u32);
                        if delta <= a {
                            push(a - delta);
                        }
                        push(a);
                        if a + delta < n {
                            push(a + delta);
                        }
                    }
                }
            }
        }
        _ => {
            for (&(i, j), set) in &instance.nogoods {
                for &(a, b) in set {
                    adjacency[offsets[i] + a].push((offsets[j] + b) as u32);
                    adjacency[offsets[j] + b].push((offsets[i] + a) as u32);
                }
            }
        }
    }
    for list in &mut adjacency {
        list.sort_unstable();
        list.dedup();
    }

    ConflictIndex {
        offsets,
        cell_var,
        adjacency,
    }
}

/// One variable per vertex, domain `0..k`, and a not-equal constraint per
/// edge. Rejects self-loops and out-of-range endpoints.
pub fn gen_graph_coloring(
    num_vertices: usize,
    edges: &[(usize, usize)],
    k: usize,
) -> Result<CspInstance, InstanceError> {
    if k == 0 {
        return Err(InstanceError::InvalidInstance(
            "coloring needs at least one color".into(),
        ));
    }
    let mut nogoods = NogoodTable::new();
    for &(u, v) in edges {
        if u == v {
            return Err(InstanceError::InvalidInstance(format!(
                "self-loop on vertex {u}"
            )));
        }
        if u >= num_vertices || v >= num_vertices {
            return Err(InstanceError::InvalidInstance(format!(
                "edge ({u}, {v}) is out of range for {num_vertices} vertices"
            )));
        }
        let set = nogoods.entry(if u < v { (u, v) } else { (v, u) }).or_default();
        for c in 0..k {
            set.insert((c, c));
        }
    }
    Ok(CspInstance::extensional(
        InstanceKind::Generated,
        vec![k; num_vertices],
        nogoods,
    ))
}

/// Classic random binary CSP: each variable pair is constrained with
/// probability `density`, and each value pair of a constrained pair is
/// forbidden with probability `tightness`. Fully determined by `seed`.
pub fn gen_random_csp(
    num_vars: usize,
    domain: usize,
    density: f64,
    tightness: f64,
    seed: u64,
) -> CspInstance {
    assert!((0.0..=1.0).contains(&density), "density must be in [0, 1]");
    assert!(
        (0.0..=1.0).contains(&tightness),
        "tightness must be in [0, 1]"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nogoods = NogoodTable::new();
    for i in 0..num_vars {
        for j in (i + 1)..num_vars {
            if !rng.random_bool(density) {
                continue;
            }
            let mut set = BTreeSet::new();
            for a in 0..domain {
                for b in 0..domain {
                    if rng.random_bool(tightness) {
                        set.insert((a, b));
                    }
                }
            }
            if !set.is_empty() {
                nogoods.insert((i, j), set);
            }
        }
    }
    CspInstance::extensional(InstanceKind::Generated, vec![domain; num_vars], nogoods)
}
