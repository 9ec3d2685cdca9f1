#![allow(dead_code)]

use std::collections::VecDeque;

use exchange_net::{LatticeSpec, NodeId, Topology};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Dense averaging matrix: `1/(q+1)` at `(i, j)` for `j` in `in(i)` and `j = i`.
pub fn averaging_matrix(t: &Topology) -> DMatrix<f64> {
    let n = t.n_nodes();
    let w = 1.0 / (t.q() + 1) as f64;
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] += w;
        for &j in t.in_list(NodeId::new(i)) {
            m[(i, j.index())] += w;
        }
    }
    m
}

pub fn matrix_power_apply(m: &DMatrix<f64>, x: &[f64], k: usize) -> Vec<f64> {
    let mut v = DVector::from_column_slice(x);
    for _ in 0..k {
        v = m * v;
    }
    v.iter().copied().collect()
}

/// Plain per-source BFS along information flow (`j -> i` when `j` is in `in(i)`).
/// Returns (max finite distance, sum of distances, reached pairs).
pub fn scalar_bfs(t: &Topology, sources: &[usize]) -> (u32, u64, u64) {
    let n = t.n_nodes();
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for &j in t.in_list(NodeId::new(i)) {
            out[j.index()].push(i);
        }
    }
    let (mut max, mut sum, mut reached) = (0u32, 0u64, 0u64);
    let mut dist = vec![u32::MAX; n];
    let mut queue = VecDeque::new();
    for &s in sources {
        dist.fill(u32::MAX);
        dist[s] = 0;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for &v in &out[u] {
                if dist[v] == u32::MAX {
                    dist[v] = dist[u] + 1;
                    max = max.max(dist[v]);
                    sum += dist[v] as u64;
                    reached += 1;
                    queue.push_back(v);
                }
            }
        }
    }
    (max, sum, reached)
}

/// A valid 8-regular topology with at most `max_nodes` nodes: a small torus,
/// shuffled by rewiring and resized by churn.
pub fn random_topology<R: Rng>(rng: &mut R, max_nodes: usize) -> Topology {
    loop {
        let rows = rng.gen_range(3..=8);
        let cols = rng.gen_range(3..=8);
        if rows * cols > max_nodes {
            continue;
        }
        let mut t = Topology::moore_lattice(&LatticeSpec::torus(rows, cols)).unwrap();
        for _ in 0..rng.gen_range(0..4) {
            t.rewire_round(rng);
        }
        for _ in 0..rng.gen_range(0..4) {
            if rng.gen_bool(0.5) && t.n_nodes() < max_nodes {
                t.insert_node(rng).unwrap();
            } else if t.n_nodes() > t.q() + 1 {
                let v = NodeId::new(rng.gen_range(0..t.n_nodes()));
                t.delete_node(v, rng).unwrap();
            }
        }
        return t;
    }
}
