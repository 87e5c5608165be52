//! Reverse Cuthill–McKee ordering for profile reduction.

use std::collections::VecDeque;

use crate::fem2d::SymSparse;

/// Adjacency lists (off-diagonal pattern), neighbours sorted ascending.
pub fn adjacency(a: &SymSparse) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); a.n];
    for k in 0..a.nnz() {
        let (r, c) = (a.rows[k], a.cols[k]);
        if r != c {
            adj[r].push(c);
            adj[c].push(r);
        }
    }
    for l in &mut adj {
        l.sort_unstable();
        l.dedup();
    }
    adj
}

fn bfs_levels(adj: &[Vec<usize>], start: usize, mark: &mut [bool]) -> Vec<Vec<usize>> {
    let mut levels = vec![vec![start]];
    let mut seen: Vec<usize> = vec![start];
    mark[start] = true;
    loop {
        let mut next = Vec::new();
        for &u in levels.last().unwrap() {
            for &v in &adj[u] {
                if !mark[v] {
                    mark[v] = true;
                    seen.push(v);
                    next.push(v);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        levels.push(next);
    }
    for v in seen {
        mark[v] = false;
    }
    levels
}

/// George–Liu pseudo-peripheral node search starting at `start`.
fn pseudo_peripheral(adj: &[Vec<usize>], start: usize, mark: &mut [bool]) -> usize {
    let mut node = start;
    let mut depth = bfs_levels(adj, node, mark).len();
    loop {
        let levels = bfs_levels(adj, node, mark);
        let last = levels.last().unwrap();
        let cand = *last.iter().min_by_key(|&&v| (adj[v].len(), v)).unwrap();
        let d = bfs_levels(adj, cand, mark).len();
        if d > depth {
            depth = d;
            node = cand;
        } else {
            return node;
        }
    }
}

/// Permutation `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &SymSparse) -> Vec<usize> {
    let adj = adjacency(a);
    let n = a.n;
    let mut placed = vec![false; n];
    let mut mark = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    for seed in 0..n {
        if placed[seed] {
            continue;
        }
        let start = pseudo_peripheral(&adj, seed, &mut mark);
        placed[start] = true;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let mut nbrs: Vec<usize> = adj[u].iter().copied().filter(|&v| !placed[v]).collect();
            nbrs.sort_by_key(|&v| (adj[v].len(), v));
            for v in nbrs {
                placed[v] = true;
                queue.push_back(v);
            }
        }
    }
    order.reverse();
    order
}

/// Sum over rows of `i - min column` under the permutation.
pub fn profile(a: &SymSparse, perm: &[usize]) -> usize {
    let mut inv = vec![0; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let mut first: Vec<usize> = (0..a.n).collect();
    for k in 0..a.nnz() {
        let (r, c) = (inv[a.rows[k]], inv[a.cols[k]]);
        let (hi, lo) = (r.max(c), r.min(c));
        first[hi] = first[hi].min(lo);
    }
    first.iter().enumerate().map(|(i, &f)| i - f).sum()
}
