use serde::{Deserialize, Serialize};

use super::{GraphError, NodeId, Topology, MOORE_DEGREE};

/// Moore offsets in row-major order; this fixes the slot order.
const MOORE_OFFSETS: [(isize, isize); MOORE_DEGREE] =
    [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)];

/// An `rows x cols` square lattice; node `(r, c)` has index `r * cols + c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub rows: usize,
    pub cols: usize,
    pub periodic: bool,
}

impl LatticeSpec {
    pub fn torus(rows: usize, cols: usize) -> Self {
        LatticeSpec {
            rows,
            cols,
            periodic: true,
        }
    }

    pub fn square(side: usize) -> Self {
        Self::torus(side, side)
    }

    pub fn n_nodes(&self) -> usize {
        self.rows * self.cols
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        if !self.periodic {
            return Err(GraphError::InvalidSpec(
                "open boundaries leave edge cells with fewer than 8 neighbors".into(),
            ));
        }
        if self.rows < 3 || self.cols < 3 {
            return Err(GraphError::InvalidSpec(format!(
                "{}x{} torus is smaller than 3x3",
                self.rows, self.cols
            )));
        }
        Ok(())
    }

    /// Lattice coordinates of a node.
    pub fn position(&self, node: NodeId) -> (usize, usize) {
        (node.index() / self.cols, node.index() % self.cols)
    }
}

impl Topology {
    /// Moore-neighborhood torus: every cell reads its 8 neighbors at
    /// Chebyshev distance 1.
    pub fn moore_lattice(spec: &LatticeSpec) -> Result<Topology, GraphError> {
        spec.validate()?;
        let (m, n) = (spec.rows as isize, spec.cols as isize);
        let mut in_edges = Vec::with_capacity(spec.n_nodes() * MOORE_DEGREE);
        for r in 0..m {
            for c in 0..n {
                for (dr, dc) in MOORE_OFFSETS {
                    let rr = (r + dr).rem_euclid(m);
                    let cc = (c + dc).rem_euclid(n);
                    in_edges.push(NodeId::new((rr * n + cc) as usize));
                }
            }
        }
        Ok(Topology::from_flat(MOORE_DEGREE, in_edges))
    }
}
