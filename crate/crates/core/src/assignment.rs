//! Exact linear assignment.
//!
//! [`solve_assignment`] runs a shortest-augmenting-path Hungarian method in
//! O(n³) and then walks the equality subgraph of the optimal duals to return
//! the lexicographically smallest optimal permutation. Distance routines that
//! only need the optimal value call [`min_cost`], which skips the tie-break.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Optimal assignment: row `i` is matched to column `permutation[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentResult {
    pub permutation: Vec<usize>,
    pub cost: f64,
}

fn validate(cost: &[Vec<f64>]) -> Result<()> {
    let rows = cost.len();
    for (row, r) in cost.iter().enumerate() {
        if r.len() != rows {
            return Err(Error::NonSquare { rows, row, cols: r.len() });
        }
        crate::error::ensure_finite(r, "cost matrix")?;
    }
    Ok(())
}

/// Hungarian method. Returns `(row -> column, row potentials, column potentials)`
/// with `cost[i][j] - u[i] - v[j] >= 0` up to rounding and equality on matched pairs.
fn hungarian(cost: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    let n = cost.len();
    // 1-based internal arrays; index 0 is the virtual source column.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut matched_row = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0; n + 1];
    let mut used = vec![false; n + 1];
    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0usize;
        minv.iter_mut().for_each(|m| *m = f64::INFINITY);
        used.iter_mut().for_each(|f| *f = false);
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        assignment[matched_row[j] - 1] = j - 1;
    }
    (assignment, u[1..].to_vec(), v[1..].to_vec())
}

/// Optimal assignment value without tie-breaking. Inputs are trusted.
pub(crate) fn min_cost(cost: &[Vec<f64>]) -> f64 {
    match cost.len() {
        0 => 0.0,
        1 => cost[0][0],
        2 => (cost[0][0] + cost[1][1]).min(cost[0][1] + cost[1][0]),
        _ => {
            let (assignment, _, _) = hungarian(cost);
            assignment.iter().enumerate().map(|(i, &j)| cost[i][j]).sum()
        }
    }
}

/// Globally optimal assignment with the lexicographically smallest
/// permutation among all optima.
pub fn solve_assignment(cost: &[Vec<f64>]) -> Result<AssignmentResult> {
    validate(cost)?;
    let n = cost.len();
    if n == 0 {
        return Ok(AssignmentResult { permutation: Vec::new(), cost: 0.0 });
    }
    let (assignment, u, v) = hungarian(cost);
    let scale = cost.iter().flatten().fold(1.0f64, |m, c| m.max(c.abs()));
    let tol = 1e-12 * scale * n as f64;
    let tight: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| cost[i][j] - u[i] - v[j] <= tol).collect()).collect();
    let permutation = lexicographic_matching(&tight, assignment);
    let total = permutation.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
    Ok(AssignmentResult { permutation, cost: total })
}

const NONE: usize = usize::MAX;

/// Lexicographically smallest perfect matching inside `tight`, starting from
/// a known perfect matching `row_to_col` that uses only tight edges.
fn lexicographic_matching(tight: &[Vec<bool>], mut row_to_col: Vec<usize>) -> Vec<usize> {
    let n = tight.len();
    let mut col_to_row = vec![NONE; n];
    for (i, &j) in row_to_col.iter().enumerate() {
        col_to_row[j] = i;
    }
    let mut col_fixed = vec![false; n];
    for i in 0..n {
        for j in 0..n {
            if col_fixed[j] || !tight[i][j] {
                continue;
            }
            if row_to_col[i] == j {
                col_fixed[j] = true;
                break;
            }
            // Move i onto j; the displaced row r must reach the column i freed.
            let freed = row_to_col[i];
            let r = col_to_row[j];
            let snapshot = (row_to_col.clone(), col_to_row.clone());
            row_to_col[i] = j;
            col_to_row[j] = i;
            col_to_row[freed] = NONE;
            row_to_col[r] = NONE;
            col_fixed[j] = true;
            let mut seen = vec![false; n];
            if augment(r, tight, &col_fixed, &mut seen, &mut row_to_col, &mut col_to_row) {
                break;
            }
            col_fixed[j] = false;
            row_to_col = snapshot.0;
            col_to_row = snapshot.1;
        }
    }
    row_to_col
}

fn augment(
    row: usize,
    tight: &[Vec<bool>],
    col_fixed: &[bool],
    seen: &mut [bool],
    row_to_col: &mut [usize],
    col_to_row: &mut [usize],
) -> bool {
    for c in 0..tight.len() {
        if col_fixed[c] || seen[c] || !tight[row][c] {
            continue;
        }
        seen[c] = true;
        let owner = col_to_row[c];
        if owner == NONE || augment(owner, tight, col_fixed, seen, row_to_col, col_to_row) {
            row_to_col[row] = c;
            col_to_row[c] = row;
            return true;
        }
    }
    false
}
