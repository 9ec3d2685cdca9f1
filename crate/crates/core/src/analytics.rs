//! Clustering coefficient, diameter and characteristic path length.
//!
//! Distances follow the direction information travels: an edge `j -> i`
//! exists when `j` is in `i`'s in-list. Clustering uses the undirected
//! simple projection.

use rand::seq::index;
use rand::Rng;
use serde::Serialize;

use crate::graph::{GraphError, Topology};
use crate::par;

/// Above this many nodes [`PathMethod::Auto`] samples sources.
pub const DEFAULT_NODE_BUDGET: usize = 200_000;
pub const DEFAULT_SAMPLE_SIZE: usize = 500;

/// Sources traversed together, one per bit.
const BATCH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathMethod {
    /// Traverse from every node.
    Exact,
    /// Traverse from `sample_size` distinct uniformly drawn sources.
    Sampled { sample_size: usize, seed: u64 },
    /// Exact up to `node_budget` nodes, sampled beyond.
    Auto {
        node_budget: usize,
        sample_size: usize,
        seed: u64,
    },
}

impl Default for PathMethod {
    fn default() -> Self {
        PathMethod::Auto {
            node_budget: DEFAULT_NODE_BUDGET,
            sample_size: DEFAULT_SAMPLE_SIZE,
            seed: 0,
        }
    }
}

/// How a [`PathStats`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Method {
    Exact,
    Sampled { sample_size: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathStats {
    /// Largest finite distance seen. Under sampling this is a lower bound
    /// on the diameter.
    pub max_distance: u32,
    /// Mean over reachable ordered pairs, self-pairs excluded.
    pub cpl: f64,
    /// `false` if some traversed source failed to reach some node.
    pub strongly_connected: bool,
    pub reachable_pairs: u64,
    pub method: Method,
}

impl PathStats {
    /// `None` when some pair is unreachable.
    pub fn diameter(&self) -> Option<u32> {
        self.strongly_connected.then_some(self.max_distance)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub n_nodes: usize,
    /// `null` when the graph is not strongly connected.
    pub diameter: Option<u32>,
    pub max_distance: u32,
    pub cpl: f64,
    pub clustering: f64,
    pub strongly_connected: bool,
    pub method: Method,
}

impl MetricsReport {
    pub fn csv_header() -> &'static str {
        "nodes,diameter,cpl,clustering,strongly_connected,method,sample_size"
    }

    pub fn csv_row(&self) -> String {
        let (method, sample) = match self.method {
            Method::Exact => ("exact", String::new()),
            Method::Sampled { sample_size } => ("sampled", sample_size.to_string()),
        };
        let diameter = self.diameter.map(|d| d.to_string()).unwrap_or_else(|| "inf".into());
        format!(
            "{},{},{:.6},{:.6},{},{},{}",
            self.n_nodes, diameter, self.cpl, self.clustering, self.strongly_connected, method, sample
        )
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct Tally {
    dist_sum: u64,
    reached: u64,
    max_dist: u32,
}

impl Tally {
    fn merge(self, o: Tally) -> Tally {
        Tally {
            dist_sum: self.dist_sum + o.dist_sum,
            reached: self.reached + o.reached,
            max_dist: self.max_dist.max(o.max_dist),
        }
    }
}

/// Breadth-first search from up to 64 sources at once, one bit each.
fn bfs_batch(topology: &Topology, sources: &[usize]) -> Tally {
    debug_assert!(sources.len() <= BATCH);
    let n = topology.n_nodes();
    let q = topology.q();
    let edges = topology.in_edges();
    let full = if sources.len() == BATCH {
        u64::MAX
    } else {
        (1u64 << sources.len()) - 1
    };

    let mut visited = vec![0u64; n];
    let mut frontier = vec![0u64; n];
    let mut next = vec![0u64; n];
    for (bit, &s) in sources.iter().enumerate() {
        visited[s] |= 1 << bit;
        frontier[s] |= 1 << bit;
    }

    let mut tally = Tally::default();
    let mut depth = 0u32;
    loop {
        depth += 1;
        let mut found = 0u64;
        for v in 0..n {
            let seen = visited[v];
            if seen == full {
                next[v] = 0;
                continue;
            }
            let mut incoming = 0u64;
            for u in &edges[v * q..(v + 1) * q] {
                incoming |= frontier[u.index()];
            }
            let fresh = incoming & !seen;
            next[v] = fresh;
            if fresh != 0 {
                visited[v] = seen | fresh;
                found += u64::from(fresh.count_ones());
            }
        }
        if found == 0 {
            break;
        }
        tally.dist_sum += u64::from(depth) * found;
        tally.reached += found;
        tally.max_dist = depth;
        std::mem::swap(&mut frontier, &mut next);
    }
    tally
}

fn traverse(topology: &Topology, sources: &[usize], method: Method) -> PathStats {
    let batches: Vec<&[usize]> = sources.chunks(BATCH).collect();
    let tally = par::map_collect(&batches, |b| bfs_batch(topology, b))
        .into_iter()
        .fold(Tally::default(), Tally::merge);
    let n = topology.n_nodes() as u64;
    let expected = sources.len() as u64 * n.saturating_sub(1);
    PathStats {
        max_distance: tally.max_dist,
        cpl: if tally.reached == 0 {
            0.0
        } else {
            tally.dist_sum as f64 / tally.reached as f64
        },
        strongly_connected: tally.reached == expected,
        reachable_pairs: tally.reached,
        method,
    }
}

/// Distances from every node, or from a sample when `method` asks for one.
pub fn shortest_path_stats(topology: &Topology, method: PathMethod) -> PathStats {
    let n = topology.n_nodes();
    match method {
        PathMethod::Exact => {
            let sources: Vec<usize> = (0..n).collect();
            traverse(topology, &sources, Method::Exact)
        }
        PathMethod::Sampled { sample_size, seed } => sampled_cpl(topology, sample_size, &mut crate::rng::seeded(seed)),
        PathMethod::Auto {
            node_budget,
            sample_size,
            seed,
        } => {
            if n <= node_budget {
                shortest_path_stats(topology, PathMethod::Exact)
            } else {
                shortest_path_stats(topology, PathMethod::Sampled { sample_size, seed })
            }
        }
    }
}

/// Exact traversal from `sample_size` distinct sources drawn uniformly.
pub fn sampled_cpl<R: Rng + ?Sized>(topology: &Topology, sample_size: usize, rng: &mut R) -> PathStats {
    let n = topology.n_nodes();
    let size = sample_size.clamp(1, n.max(1));
    let mut sources = index::sample(rng, n, size).into_vec();
    sources.sort_unstable();
    traverse(topology, &sources, Method::Sampled { sample_size: size })
}

/// Mean local clustering of the undirected projection. Nodes with fewer than
/// two neighbors count as zero.
pub fn clustering_coefficient(topology: &Topology) -> f64 {
    let n = topology.n_nodes();
    if n == 0 {
        return 0.0;
    }
    let neighbors = undirected_neighbors(topology);
    let local = par::map_range(n, |i| {
        let own = &neighbors[i];
        let k = own.len();
        if k < 2 {
            return 0.0;
        }
        let mut links = 0usize;
        for &a in own {
            links += neighbors[a as usize]
                .iter()
                .filter(|&&b| b > a && own.binary_search(&b).is_ok())
                .count();
        }
        links as f64 / (k * (k - 1) / 2) as f64
    });
    local.iter().sum::<f64>() / n as f64
}

/// Sorted, deduplicated neighbor sets ignoring direction.
fn undirected_neighbors(topology: &Topology) -> Vec<Vec<u32>> {
    let n = topology.n_nodes();
    let mut adj: Vec<Vec<u32>> = (0..n).map(|_| Vec::with_capacity(2 * topology.q())).collect();
    for (i, list) in topology.in_lists().enumerate() {
        for &j in list {
            let j = j.index();
            if j == i {
                continue;
            }
            adj[i].push(j as u32);
            adj[j].push(i as u32);
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    adj
}

/// Path statistics plus clustering in one report.
pub fn metrics_report(topology: &Topology, method: PathMethod) -> MetricsReport {
    let paths = shortest_path_stats(topology, method);
    MetricsReport {
        n_nodes: topology.n_nodes(),
        diameter: paths.diameter(),
        max_distance: paths.max_distance,
        cpl: paths.cpl,
        clustering: clustering_coefficient(topology),
        strongly_connected: paths.strongly_connected,
        method: paths.method,
    }
}

/// Closed-form diameter and CPL of the `m x n` Moore torus, where the
/// distance between two cells is their wrapped Chebyshev distance.
pub fn lattice_metrics_oracle(m: usize, n: usize) -> Result<(u32, f64), GraphError> {
    if m < 3 || n < 3 {
        return Err(GraphError::InvalidSpec(format!("{m}x{n} torus is smaller than 3x3")));
    }
    let diameter = (m / 2).max(n / 2) as u32;
    let mut total = 0u64;
    for dr in 0..m {
        let wr = dr.min(m - dr);
        for dc in 0..n {
            total += wr.max(dc.min(n - dc)) as u64;
        }
    }
    Ok((diameter, total as f64 / (m * n - 1) as f64))
}
