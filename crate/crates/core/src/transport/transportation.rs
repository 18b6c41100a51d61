//! Transportation simplex (northwest-corner start, MODI potentials, cycle
//! pivots) for balanced supply/demand problems.

use std::collections::VecDeque;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const MAX_DEGENERATE_RUN: usize = 50;

/// Minimum-cost plan moving `supply[i]` out of source `i` into `demand[j]`
/// at sink `j`, with `cost[(i, j)]` per unit. Demands are rescaled to the
/// total supply to absorb round-off imbalance.
pub(crate) fn solve(cost: &DMatrix<f64>, supply: &[f64], demand: &[f64]) -> Result<(f64, DMatrix<f64>)> {
    let (p, q) = (supply.len(), demand.len());
    if cost.nrows() != p || cost.ncols() != q {
        return Err(Error::Solver("cost matrix shape does not match supply/demand".into()));
    }
    if supply.iter().chain(demand).any(|&v| !(v >= 0.0 && v.is_finite())) {
        return Err(Error::Solver("supplies and demands must be finite and nonnegative".into()));
    }
    let total_s: f64 = supply.iter().sum();
    let total_d: f64 = demand.iter().sum();
    if p == 0 || q == 0 || total_s == 0.0 {
        return Ok((0.0, DMatrix::zeros(p, q)));
    }
    if (total_s - total_d).abs() > 1e-9 * total_s.max(total_d) {
        return Err(Error::Solver(format!("unbalanced transportation problem ({total_s} vs {total_d})")));
    }
    let ratio = total_s / total_d;
    let demand: Vec<f64> = demand.iter().map(|d| d * ratio).collect();

    // northwest corner: p + q - 1 basic cells forming a spanning tree
    let mut flow = DMatrix::zeros(p, q);
    let mut basis: Vec<(usize, usize)> = Vec::with_capacity(p + q - 1);
    let (mut s, mut d) = (supply.to_vec(), demand.clone());
    let (mut i, mut j) = (0, 0);
    loop {
        let amount = s[i].min(d[j]);
        flow[(i, j)] = amount;
        basis.push((i, j));
        s[i] -= amount;
        d[j] -= amount;
        if i == p - 1 && j == q - 1 {
            break;
        }
        if j == q - 1 || (i < p - 1 && s[i] <= d[j]) {
            i += 1;
        } else {
            j += 1;
        }
    }
    debug_assert_eq!(basis.len(), p + q - 1);

    let scale = cost.amax().max(1.0);
    let eps = 1e-12 * scale;
    let max_iter = 50 * p * q + 1000;
    let mut degenerate_run = 0;
    for _ in 0..max_iter {
        let (u, v) = potentials(cost, &basis, p, q);
        let mut entering: Option<(usize, usize, f64)> = None;
        let bland = degenerate_run >= MAX_DEGENERATE_RUN;
        'search: for a in 0..p {
            for b in 0..q {
                let red = cost[(a, b)] - u[a] - v[b];
                if red < -eps && !basis.contains(&(a, b)) {
                    if bland {
                        entering = Some((a, b, red));
                        break 'search;
                    }
                    if entering.map_or(true, |e| red < e.2) {
                        entering = Some((a, b, red));
                    }
                }
            }
        }
        let Some((ea, eb, _)) = entering else {
            let value = flow.iter().zip(cost.iter()).map(|(f, c)| f * c).sum();
            return Ok((value, flow));
        };
        // cycle: entering cell then the tree path from column eb back to row ea
        let path = tree_path(&basis, p, q, ea, eb);
        // path alternates cells: odd positions lose flow
        let mut leave = None;
        for (k, &cell) in path.iter().enumerate() {
            if k % 2 == 0 {
                let f = flow[cell];
                let better = match leave {
                    None => true,
                    Some((_, lf, lc)) => f < lf || (f == lf && cell < lc),
                };
                if better {
                    leave = Some((k, f, cell));
                }
            }
        }
        let (_, theta, leaving) = leave.expect("a cycle always has a decreasing cell");
        degenerate_run = if theta > 0.0 { 0 } else { degenerate_run + 1 };
        flow[(ea, eb)] += theta;
        for (k, &cell) in path.iter().enumerate() {
            if k % 2 == 0 {
                flow[cell] = (flow[cell] - theta).max(0.0);
            } else {
                flow[cell] += theta;
            }
        }
        flow[leaving] = 0.0;
        let pos = basis.iter().position(|&c| c == leaving).expect("leaving cell is basic");
        basis[pos] = (ea, eb);
    }
    Err(Error::Solver("transportation simplex iteration limit reached".into()))
}

/// Row potentials `u` and column potentials `v` with `u_i + v_j = c_ij` on the basis, `u_0 = 0`.
fn potentials(cost: &DMatrix<f64>, basis: &[(usize, usize)], p: usize, q: usize) -> (Vec<f64>, Vec<f64>) {
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); p];
    let mut cols: Vec<Vec<usize>> = vec![Vec::new(); q];
    for &(i, j) in basis {
        rows[i].push(j);
        cols[j].push(i);
    }
    let mut u = vec![f64::NAN; p];
    let mut v = vec![f64::NAN; q];
    u[0] = 0.0;
    // node ids: rows 0..p, columns p..p+q
    let mut queue = VecDeque::from([0usize]);
    while let Some(node) = queue.pop_front() {
        if node < p {
            for &j in &rows[node] {
                if v[j].is_nan() {
                    v[j] = cost[(node, j)] - u[node];
                    queue.push_back(p + j);
                }
            }
        } else {
            let j = node - p;
            for &i in &cols[j] {
                if u[i].is_nan() {
                    u[i] = cost[(i, j)] - v[j];
                    queue.push_back(i);
                }
            }
        }
    }
    (u, v)
}

/// Basic cells on the tree path from column `col` to row `row`, in order.
fn tree_path(basis: &[(usize, usize)], p: usize, q: usize, row: usize, col: usize) -> Vec<(usize, usize)> {
    let mut adj: Vec<Vec<(usize, (usize, usize))>> = vec![Vec::new(); p + q];
    for &(i, j) in basis {
        adj[i].push((p + j, (i, j)));
        adj[p + j].push((i, (i, j)));
    }
    let start = p + col;
    let mut prev: Vec<Option<(usize, (usize, usize))>> = vec![None; p + q];
    let mut seen = vec![false; p + q];
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(node) = queue.pop_front() {
        if node == row {
            break;
        }
        for &(next, cell) in &adj[node] {
            if !seen[next] {
                seen[next] = true;
                prev[next] = Some((node, cell));
                queue.push_back(next);
            }
        }
    }
    let mut path = Vec::new();
    let mut node = row;
    while node != start {
        let (back, cell) = prev[node].expect("basis is a spanning tree");
        path.push(cell);
        node = back;
    }
    // path runs from the entering cell's column to its row; reverse to start next to the column
    path.reverse();
    path
}
