//! Exact earth mover's distance between uniform marginals by the
//! transportation simplex.
//!
//! With `S` sources and `K` sinks, supplies are scaled to the integers `K`
//! (per source) and demands to `S` (per sink), so every basic solution has
//! integral flows and the marginals of the returned plan are exact up to a
//! single division.

use std::collections::VecDeque;

use crate::error::{shape_err, Error, Result};

/// Optimal plan (`rows × cols`, row-major) and its cost.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub rows: usize,
    pub cols: usize,
    pub plan: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

impl TransportPlan {
    pub fn get(&self, s: usize, k: usize) -> f64 {
        self.plan[s * self.cols + k]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|s| self.plan[s * self.cols..(s + 1) * self.cols].iter().sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|k| (0..self.rows).map(|s| self.get(s, k)).sum())
            .collect()
    }
}

struct Basis {
    rows: usize,
    cols: usize,
    /// Basic cells as `row * cols + col`.
    cells: Vec<usize>,
    flow: Vec<i64>,
    is_basic: Vec<bool>,
}

impl Basis {
    fn northwest(rows: usize, cols: usize) -> Self {
        let mut supply = vec![cols as i64; rows];
        let mut demand = vec![rows as i64; cols];
        let mut b = Basis {
            rows,
            cols,
            cells: Vec::with_capacity(rows + cols - 1),
            flow: vec![0; rows * cols],
            is_basic: vec![false; rows * cols],
        };
        let (mut i, mut j) = (0, 0);
        while i < rows && j < cols {
            let q = supply[i].min(demand[j]);
            let c = i * cols + j;
            b.flow[c] = q;
            b.is_basic[c] = true;
            b.cells.push(c);
            supply[i] -= q;
            demand[j] -= q;
            // When both hit zero only the row advances, which leaves a
            // zero-flow basic cell in the next row and keeps the basis a tree.
            if supply[i] == 0 {
                i += 1;
            } else {
                j += 1;
            }
        }
        debug_assert_eq!(b.cells.len(), rows + cols - 1);
        b
    }

    /// Potentials with `u[0] = 0` and `u_i + v_j = c_ij` on basic cells.
    fn potentials(&self, cost: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (rows, cols) = (self.rows, self.cols);
        let adj = self.adjacency();
        let mut u = vec![f64::NAN; rows];
        let mut v = vec![f64::NAN; cols];
        u[0] = 0.0;
        let mut queue = VecDeque::from([0usize]);
        while let Some(node) = queue.pop_front() {
            for &(other, cell) in &adj[node] {
                if node < rows {
                    let j = other - rows;
                    if v[j].is_nan() {
                        v[j] = cost[cell] - u[node];
                        queue.push_back(other);
                    }
                } else if u[other].is_nan() {
                    u[other] = cost[cell] - v[node - rows];
                    queue.push_back(other);
                }
            }
        }
        (u, v)
    }

    /// Row nodes are `0..rows`, column nodes `rows..rows + cols`.
    fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.rows + self.cols];
        for &c in &self.cells {
            let (i, j) = (c / self.cols, c % self.cols);
            adj[i].push((self.rows + j, c));
            adj[self.rows + j].push((i, c));
        }
        adj
    }

    /// Cells on the tree path from row `i` to column `j`, in path order
    /// starting at the cell incident to row `i`.
    fn tree_path(&self, i: usize, j: usize) -> Vec<usize> {
        let adj = self.adjacency();
        let n = self.rows + self.cols;
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; n];
        let mut seen = vec![false; n];
        seen[i] = true;
        let mut queue = VecDeque::from([i]);
        let target = self.rows + j;
        while let Some(node) = queue.pop_front() {
            if node == target {
                break;
            }
            for &(other, cell) in &adj[node] {
                if !seen[other] {
                    seen[other] = true;
                    prev[other] = Some((node, cell));
                    queue.push_back(other);
                }
            }
        }
        let mut path = Vec::new();
        let mut node = target;
        while let Some((p, cell)) = prev[node] {
            path.push(cell);
            node = p;
        }
        path.reverse();
        path
    }
}

/// Minimizes `⟨T, C⟩` over plans with row sums `1/S` and column sums `1/K`.
pub fn emd_solve(cost: &[f64], rows: usize, cols: usize) -> Result<TransportPlan> {
    if rows == 0 || cols == 0 || cost.len() != rows * cols {
        return Err(shape_err(
            "emd_solve",
            format!("{} costs for a {rows}×{cols} problem", cost.len()),
        ));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("transport cost"));
    }
    let scale = cost.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let tol = 1e-12 * (1.0 + scale);
    let mut basis = Basis::northwest(rows, cols);
    let mut pivots = 0;
    // Most negative reduced cost until a long run of degenerate pivots,
    // then Bland's rule for the rest of the solve, which cannot cycle.
    let mut bland = false;
    let mut degenerate_run = 0;

    loop {
        let (u, v) = basis.potentials(cost);
        let reduced = |c: usize| cost[c] - u[c / cols] - v[c % cols];
        let entering = if bland {
            (0..rows * cols).find(|&c| !basis.is_basic[c] && reduced(c) < -tol)
        } else {
            let mut best = None;
            let mut best_rc = -tol;
            for c in 0..rows * cols {
                if !basis.is_basic[c] {
                    let rc = reduced(c);
                    if rc < best_rc {
                        best_rc = rc;
                        best = Some(c);
                    }
                }
            }
            best
        };
        let Some(enter) = entering else { break };
        let (ei, ej) = (enter / cols, enter % cols);

        // The cycle is the entering cell followed by the tree path from its
        // column back to its row; signs alternate starting with '+'.
        let path = basis.tree_path(ei, ej);
        // path runs row ei → … → column ej; walking it backwards from the
        // entering cell gives the alternating order (−, +, −, …).
        let minus: Vec<usize> = path.iter().rev().step_by(2).copied().collect();
        let plus: Vec<usize> = path.iter().rev().skip(1).step_by(2).copied().collect();
        let theta = minus.iter().map(|&c| basis.flow[c]).min().expect("cycle");
        // Lowest index among tied leaving cells.
        let leave = *minus
            .iter()
            .filter(|&&c| basis.flow[c] == theta)
            .min()
            .expect("leaving cell");

        for &c in &minus {
            basis.flow[c] -= theta;
        }
        for &c in &plus {
            basis.flow[c] += theta;
        }
        basis.flow[enter] += theta;
        basis.is_basic[leave] = false;
        basis.is_basic[enter] = true;
        let pos = basis.cells.iter().position(|&c| c == leave).expect("basic");
        basis.cells[pos] = enter;
        pivots += 1;
        if theta == 0 {
            degenerate_run += 1;
            bland |= degenerate_run > rows + cols;
        } else {
            degenerate_run = 0;
        }
    }

    let total = (rows * cols) as f64;
    let plan: Vec<f64> = basis.flow.iter().map(|&f| f as f64 / total).collect();
    let objective = plan.iter().zip(cost).map(|(t, c)| t * c).sum();
    Ok(TransportPlan {
        rows,
        cols,
        plan,
        objective,
        pivots,
    })
}
