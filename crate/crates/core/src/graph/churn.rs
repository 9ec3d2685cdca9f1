//! Node insertion and deletion that keep every in- and out-degree at `q`.

use rand::seq::{index, SliceRandom};
use rand::Rng;

use super::{GraphError, NodeId, Topology};

/// Fresh draws tried before falling back to slot-by-slot repair.
pub const CHURN_REDRAWS: usize = 16;

impl Topology {
    /// Removes `v`, handing each of its `q` readers one of its `q` sources.
    ///
    /// Readers are matched to sources by a random permutation. When no
    /// conflict-free permutation turns up within [`CHURN_REDRAWS`] redraws,
    /// a maximum matching is used instead, and each reader left over takes an entry from a uniformly drawn
    /// third node, which in exchange reads the orphaned source.
    ///
    /// Nodes above `v` shift down by one index.
    pub fn delete_node<R: Rng + ?Sized>(&mut self, v: NodeId, rng: &mut R) -> Result<(), GraphError> {
        self.check_node(v)?;
        let (n, q) = (self.n_nodes(), self.q);
        if n <= q + 1 {
            return Err(GraphError::TooSmall { n_nodes: n, q });
        }
        let readers = self.readers_of(v);
        if readers.len() != q {
            return Err(GraphError::Invalid(self.validate()));
        }
        let mut sources = self.in_list(v).to_vec();

        let fits = |t: &Topology, reader: NodeId, src: NodeId| src != reader && !t.in_list(reader).contains(&src);
        let mut matched = false;
        for _ in 0..=CHURN_REDRAWS {
            sources.shuffle(rng);
            if readers.iter().zip(&sources).all(|(&(r, _), &s)| fits(self, r, s)) {
                matched = true;
                break;
            }
        }
        if !matched {
            let ok: Vec<Vec<bool>> = readers
                .iter()
                .map(|&(r, _)| sources.iter().map(|&s| fits(self, r, s)).collect())
                .collect();
            let assign = max_matching(&ok);
            let mut spare: Vec<usize> = (0..q).filter(|k| !assign.contains(&Some(*k))).collect();
            sources = assign
                .iter()
                .map(|a| sources[a.unwrap_or_else(|| spare.pop().expect("one spare per unmatched reader"))])
                .collect();
        }

        let mut orphans = Vec::new();
        for (&(reader, slot), &src) in readers.iter().zip(&sources) {
            if fits(self, reader, src) {
                self.in_list_mut(reader)[slot] = src;
            } else {
                orphans.push((reader, slot, src));
            }
        }
        for (reader, slot, src) in orphans {
            self.place_orphan(v, reader, slot, src, rng)?;
        }

        let start = v.index() * q;
        self.in_edges.drain(start..start + q);
        for e in &mut self.in_edges {
            debug_assert_ne!(*e, v);
            if *e > v {
                *e = NodeId::new(e.index() - 1);
            }
        }
        Ok(())
    }

    /// `reader`'s slot currently holds the departing node `gone`. Finds a
    /// donor `x` whose entry `y` can move to `reader` while `x` takes `src`.
    fn place_orphan<R: Rng + ?Sized>(
        &mut self,
        gone: NodeId,
        reader: NodeId,
        slot: usize,
        src: NodeId,
        rng: &mut R,
    ) -> Result<(), GraphError> {
        let (n, q) = (self.n_nodes(), self.q);
        let budget = 64 * n * q;
        for _ in 0..budget {
            let x = NodeId::new(rng.gen_range(0..n));
            if x == gone || x == reader || x == src {
                continue;
            }
            let sx = rng.gen_range(0..q);
            let y = self.in_list(x)[sx];
            if y == gone || y == reader || self.in_list(reader).contains(&y) {
                continue;
            }
            if self.in_list(x).contains(&src) {
                continue;
            }
            self.in_list_mut(reader)[slot] = y;
            self.in_list_mut(x)[sx] = src;
            return Ok(());
        }
        Err(GraphError::ChurnFailed(reader))
    }

    /// Adds a node `u` with index `n_nodes()`.
    ///
    /// `q` distinct sponsors each give up one uniformly chosen in-entry `w`
    /// to `u` and read from `u` in that slot instead, so `u` ends up reading
    /// the `w`s and being read by the sponsors. Duplicate `w`s are redrawn
    /// whole up to [`CHURN_REDRAWS`] times, then per sponsor.
    pub fn insert_node<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<NodeId, GraphError> {
        let (n, q) = (self.n_nodes(), self.q);
        if n < q {
            return Err(GraphError::TooSmall { n_nodes: n, q });
        }
        let u = NodeId::new(n);

        let mut picks: Vec<(NodeId, usize)> = Vec::with_capacity(q);
        for _ in 0..=CHURN_REDRAWS {
            picks.clear();
            picks.extend(
                index::sample(rng, n, q)
                    .into_iter()
                    .map(|k| (NodeId::new(k), rng.gen_range(0..q))),
            );
            if self.distinct_donations(&picks) {
                break;
            }
        }

        if !self.distinct_donations(&picks) {
            let budget = 64 * n * q;
            for k in 1..q {
                let mut tries = 0;
                while picks[..k]
                    .iter()
                    .any(|&(s, p)| self.in_list(s)[p] == self.in_list(picks[k].0)[picks[k].1])
                {
                    tries += 1;
                    if tries > budget {
                        return Err(GraphError::ChurnFailed(u));
                    }
                    let sponsor = NodeId::new(rng.gen_range(0..n));
                    if picks.iter().enumerate().any(|(idx, &(s, _))| idx != k && s == sponsor) {
                        continue;
                    }
                    picks[k] = (sponsor, rng.gen_range(0..q));
                }
            }
        }

        let donated: Vec<NodeId> = picks.iter().map(|&(s, p)| self.in_list(s)[p]).collect();
        for &(sponsor, slot) in &picks {
            self.in_list_mut(sponsor)[slot] = u;
        }
        self.in_edges.extend(donated);
        Ok(u)
    }

    fn distinct_donations(&self, picks: &[(NodeId, usize)]) -> bool {
        let mut seen: Vec<NodeId> = picks.iter().map(|&(s, p)| self.in_list(s)[p]).collect();
        seen.sort_unstable();
        seen.windows(2).all(|w| w[0] != w[1])
    }
}

/// Maximum bipartite matching (augmenting paths). `ok[r][s]` says reader
/// `r` may take source `s`; returns the source assigned to each reader.
fn max_matching(ok: &[Vec<bool>]) -> Vec<Option<usize>> {
    fn augment(r: usize, ok: &[Vec<bool>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for s in 0..ok[r].len() {
            if ok[r][s] && !seen[s] {
                seen[s] = true;
                if owner[s].is_none_or(|o| augment(o, ok, seen, owner)) {
                    owner[s] = Some(r);
                    return true;
                }
            }
        }
        false
    }
    let width = ok.first().map_or(0, Vec::len);
    let mut owner = vec![None; width];
    for r in 0..ok.len() {
        let mut seen = vec![false; width];
        augment(r, ok, &mut seen, &mut owner);
    }
    let mut assign = vec![None; ok.len()];
    for (s, o) in owner.iter().enumerate() {
        if let Some(r) = *o {
            assign[r] = Some(s);
        }
    }
    assign
}
