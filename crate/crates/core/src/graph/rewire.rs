use rand::Rng;
use serde::Serialize;

use super::{GraphError, NodeId, Topology};

/// Redraws allowed after a rejected exchange before a node gives up for the
/// round.
pub const EXCHANGE_REDRAWS: usize = 8;

/// One attempted neighbor exchange.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RewireEvent {
    pub round: usize,
    pub initiator: NodeId,
    pub partner: NodeId,
    pub initiator_slot: usize,
    pub partner_slot: usize,
    pub accepted: bool,
}

impl Topology {
    /// Exchanges `in(i)[pos_i]` with `in(j)[pos_j]`.
    ///
    /// Returns `Ok(false)` and leaves the topology untouched if the exchange
    /// would put a node into its own list, duplicate an entry, or swap two
    /// equal entries. Degrees are preserved either way: each exchanged source
    /// keeps one out-edge, now pointing at the other reader.
    pub fn swap_in_entries(&mut self, i: NodeId, pos_i: usize, j: NodeId, pos_j: usize) -> Result<bool, GraphError> {
        self.check_node(i)?;
        self.check_node(j)?;
        self.check_slot(pos_i)?;
        self.check_slot(pos_j)?;
        if i == j {
            return Err(GraphError::SameNode(i));
        }
        Ok(self.try_swap(i, pos_i, j, pos_j))
    }

    #[inline]
    fn try_swap(&mut self, i: NodeId, pos_i: usize, j: NodeId, pos_j: usize) -> bool {
        let q = self.q;
        let (ii, jj) = (i.index() * q, j.index() * q);
        let a = self.in_edges[ii + pos_i];
        let b = self.in_edges[jj + pos_j];
        if a == b || b == i || a == j {
            return false;
        }
        if self.in_edges[ii..ii + q].contains(&b) || self.in_edges[jj..jj + q].contains(&a) {
            return false;
        }
        self.in_edges[ii + pos_i] = b;
        self.in_edges[jj + pos_j] = a;
        true
    }

    /// One rewiring pass: every node, in ascending order, draws a partner and
    /// a slot on each side and attempts an exchange, redrawing up to
    /// [`EXCHANGE_REDRAWS`] times on rejection. Returns the number of
    /// accepted exchanges.
    pub fn rewire_round<R: Rng + ?Sized>(&mut self, rng: &mut R) -> usize {
        self.rewire_pass(rng, |_| {})
    }

    /// [`Topology::rewire_round`] that also records every attempt.
    pub fn rewire_round_logged<R: Rng + ?Sized>(
        &mut self,
        rng: &mut R,
        round: usize,
        log: &mut Vec<RewireEvent>,
    ) -> usize {
        self.rewire_pass(rng, |mut ev| {
            ev.round = round;
            log.push(ev)
        })
    }

    fn rewire_pass<R, F>(&mut self, rng: &mut R, mut record: F) -> usize
    where
        R: Rng + ?Sized,
        F: FnMut(RewireEvent),
    {
        let n = self.n_nodes();
        if n < 2 {
            return 0;
        }
        let q = self.q;
        let mut accepted = 0;
        for i in 0..n {
            for _ in 0..=EXCHANGE_REDRAWS {
                let draw = rng.gen_range(0..n - 1);
                let j = if draw >= i { draw + 1 } else { draw };
                let pos_i = rng.gen_range(0..q);
                let pos_j = rng.gen_range(0..q);
                let (initiator, partner) = (NodeId::new(i), NodeId::new(j));
                let ok = self.try_swap(initiator, pos_i, partner, pos_j);
                record(RewireEvent {
                    round: 0,
                    initiator,
                    partner,
                    initiator_slot: pos_i,
                    partner_slot: pos_j,
                    accepted: ok,
                });
                if ok {
                    accepted += 1;
                    break;
                }
            }
        }
        accepted
    }
}
