//! Independent correctness oracle: solution checkers and brute-force
//! enumerators. Deliberately shares no code with the engine's detection
//! path — the checkers are seen-set scans and the enumerators are plain
//! backtracking / product-space search.

use crate::csp::CspInstance;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("assignment carries {got} values, expected {expected}")]
    WrongLength { expected: usize, got: usize },
    #[error("value {value} at index {index} exceeds domain size {domain}")]
    OutOfRange {
        index: usize,
        value: usize,
        domain: usize,
    },
    #[error("problem size {size} exceeds the enumeration bound {bound}")]
    BoundExceeded { size: u128, bound: u128 },
}

pub const QUEENS_ENUM_BOUND: usize = 10;
pub const CSP_ENUM_BOUND: u128 = 1_000_000;

/// True iff the columns are a valid n-queens placement: all distinct and no
/// pair on a shared diagonal. O(n) via seen-sets on columns and diagonals.
pub fn check_queens(n: usize, assignment: &[usize]) -> Result<bool, VerifyError> {
    if assignment.len() != n {
        return Err(VerifyError::WrongLength {
            expected: n,
            got: assignment.len(),
        });
    }
    let mut cols = vec![false; n];
    let mut diag = vec![false; 2 * n.max(1) - 1];
    let mut adiag = vec![false; 2 * n.max(1) - 1];
    for (row, &col) in assignment.iter().enumerate() {
        if col >= n {
            return Err(VerifyError::OutOfRange {
                index: row,
                value: col,
                domain: n,
            });
        }
        let d = row + n - 1 - col;
        let a = row + col;
        if cols[col] || diag[d] || adiag[a] {
            return Ok(false);
        }
        cols[col] = true;
        diag[d] = true;
        adiag[a] = true;
    }
    Ok(true)
}

/// True iff no constrained variable pair sits in a forbidden configuration.
pub fn check_csp(instance: &CspInstance, assignment: &[usize]) -> Result<bool, VerifyError> {
    let n = instance.num_vars();
    if assignment.len() != n {
        return Err(VerifyError::WrongLength {
            expected: n,
            got: assignment.len(),
        });
    }
    for (i, &v) in assignment.iter().enumerate() {
        if v >= instance.domain_size(i) {
            return Err(VerifyError::OutOfRange {
                index: i,
                value: v,
                domain: instance.domain_size(i),
            });
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if instance.conflicts(i, assignment[i], j, assignment[j]) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

pub fn enumerate_queens(n: usize) -> Result<Vec<Vec<usize>>, VerifyError> {
    enumerate_queens_bounded(n, QUEENS_ENUM_BOUND)
}

/// Complete n-queens solution set in lexicographic order, by permutation
/// backtracking with diagonal pruning.
pub fn enumerate_queens_bounded(n: usize, bound: usize) -> Result<Vec<Vec<usize>>, VerifyError> {
    if n > bound {
        return Err(VerifyError::BoundExceeded {
            size: n as u128,
            bound: bound as u128,
        });
    }
    let mut solutions = Vec::new();
    let mut partial = Vec::with_capacity(n);
    let mut cols = vec![false; n];
    let mut diag = vec![false; 2 * n.max(1) - 1];
    let mut adiag = vec![false; 2 * n.max(1) - 1];
    fn descend(
        n: usize,
        partial: &mut Vec<usize>,
        cols: &mut [bool],
        diag: &mut [bool],
        adiag: &mut [bool],
        solutions: &mut Vec<Vec<usize>>,
    ) {
        let row = partial.len();
        if row == n {
            solutions.push(partial.clone());
            return;
        }
        for col in 0..n {
            let (d, a) = (row + n - 1 - col, row + col);
            if cols[col] || diag[d] || adiag[a] {
                continue;
            }
            cols[col] = true;
            diag[d] = true;
            adiag[a] = true;
            partial.push(col);
            descend(n, partial, cols, diag, adiag, solutions);
            partial.pop();
            cols[col] = false;
            diag[d] = false;
            adiag[a] = false;
        }
    }
    descend(n, &mut partial, &mut cols, &mut diag, &mut adiag, &mut solutions);
    Ok(solutions)
}

pub fn enumerate_csp(instance: &CspInstance) -> Result<Vec<Vec<usize>>, VerifyError> {
    enumerate_csp_bounded(instance, CSP_ENUM_BOUND)
}

/// Complete solution set by exhaustive product-space scan filtered through
/// check_csp, in lexicographic order.
pub fn enumerate_csp_bounded(
    instance: &CspInstance,
    bound: u128,
) -> Result<Vec<Vec<usize>>, VerifyError> {
    let size = instance
        .domain_sizes()
        .iter()
        .fold(1u128, |acc, &d| acc.saturating_mul(d as u128));
    if size > bound {
        return Err(VerifyError::BoundExceeded { size, bound });
    }
    let n = instance.num_vars();
    let mut solutions = Vec::new();
    let mut current = vec![0usize; n];
    loop {
        if check_csp(instance, &current)? {
            solutions.push(current.clone());
        }
        // Odometer increment, most significant digit first in the output
        // ordering (so results come out lexicographically sorted).
        let mut i = n;
        loop {
            if i == 0 {
                return Ok(solutions);
            }
            i -= 1;
            current[i] += 1;
            if current[i] < instance.domain_size(i) {
                break;
            }
            current[i] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::{gen_graph_coloring, parse_instance, CspInstance};

    #[test]
    fn checker_examples() {
        assert!(check_queens(4, &[1, 3, 0, 2]).unwrap());
        assert!(!check_queens(4, &[0, 1, 2, 3]).unwrap());
        assert!(!check_queens(2, &[0, 0]).unwrap());
    }

    #[test]
    fn checker_rejects_malformed_assignments() {
        assert!(matches!(
            check_queens(4, &[1, 3, 0]),
            Err(VerifyError::WrongLength { .. })
        ));
        assert!(matches!(
            check_queens(4, &[1, 3, 0, 9]),
            Err(VerifyError::OutOfRange { .. })
        ));
    }

    #[test]
    fn csp_checker_examples() {
        let k3 = parse_instance(crate::csp::tests::K3_DOCUMENT).unwrap();
        assert!(check_csp(&k3, &[0, 1, 2]).unwrap());
        assert!(!check_csp(&k3, &[0, 0, 1]).unwrap());

        let free = parse_instance(
            r#"{"format_version":1,"num_vars":2,"domains":[2,2],"constraints":[]}"#,
        )
        .unwrap();
        assert!(check_csp(&free, &[1, 0]).unwrap());
    }

    #[test]
    fn four_queens_has_exactly_the_two_known_solutions() {
        assert_eq!(
            enumerate_queens(4).unwrap(),
            vec![vec![1, 3, 0, 2], vec![2, 0, 3, 1]]
        );
    }

    #[test]
    fn small_board_solution_counts() {
        // 1, 0, 0, 2, 10, 4, 40, 92 solutions for n = 1..=8.
        let counts: Vec<usize> = (1..=8)
            .map(|n| enumerate_queens(n).unwrap().len())
            .collect();
        assert_eq!(counts, vec![1, 0, 0, 2, 10, 4, 40, 92]);
    }

    #[test]
    fn enumeration_bound_is_enforced() {
        assert!(matches!(
            enumerate_queens(11),
            Err(VerifyError::BoundExceeded { .. })
        ));
        assert!(enumerate_queens_bounded(11, 11).is_ok());
    }

    #[test]
    fn every_enumerated_solution_passes_the_checker() {
        for n in 1..=8 {
            for s in enumerate_queens(n).unwrap() {
                assert!(check_queens(n, &s).unwrap());
            }
        }
    }

    #[test]
    fn single_value_mutations_leave_the_solution_set() {
        for n in [4, 5, 6] {
            let set = enumerate_queens(n).unwrap();
            for s in &set {
                for i in 0..n {
                    for v in 0..n {
                        if v == s[i] {
                            continue;
                        }
                        let mut mutated = s.clone();
                        mutated[i] = v;
                        let ok = check_queens(n, &mutated).unwrap();
                        assert!(
                            !ok || set.contains(&mutated),
                            "mutation {mutated:?} passed but is not enumerated"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn k3_has_six_colorings() {
        let k3 = parse_instance(crate::csp::tests::K3_DOCUMENT).unwrap();
        let solutions = enumerate_csp(&k3).unwrap();
        assert_eq!(solutions.len(), 6);
        for s in &solutions {
            assert!(check_csp(&k3, s).unwrap());
        }
    }

    #[test]
    fn cross_oracle_agreement_on_queens() {
        for n in [4, 5, 6] {
            let as_csp = CspInstance::queens(n);
            assert_eq!(
                enumerate_csp(&as_csp).unwrap(),
                enumerate_queens(n).unwrap()
            );
            let extensional = as_csp.as_extensional();
            assert_eq!(
                enumerate_csp(&extensional).unwrap(),
                enumerate_queens(n).unwrap()
            );
        }
    }

    #[test]
    fn coloring_edge_cases() {
        let impossible = gen_graph_coloring(2, &[(0, 1)], 1).unwrap();
        assert!(enumerate_csp(&impossible).unwrap().is_empty());

        let edgeless = gen_graph_coloring(3, &[], 2).unwrap();
        assert_eq!(enumerate_csp(&edgeless).unwrap().len(), 8);
    }

    #[test]
    fn csp_enumeration_bound_is_enforced() {
        let big = CspInstance::queens(9); // 9^9 > 10^6
        assert!(matches!(
            enumerate_csp(&big),
            Err(VerifyError::BoundExceeded { .. })
        ));
    }
}
