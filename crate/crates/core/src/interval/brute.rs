//! Exhaustive interval test for small graphs, used as a test oracle.
//!
//! Two independent routes are run and must agree:
//! a search over vertex orders where `u < v < w` and `uw` an edge forces `uv`
//! to be an edge, and chordality by simplicial elimination plus a scan for
//! asteroidal triples.

use std::collections::HashSet;

use super::{Interval, IntervalModel};
use crate::error::{Error, Result};
use crate::graph::UGraph;

pub const DEFAULT_MAX_N: usize = 9;

/// Decide interval-ness exhaustively. Returns the verdict and, when interval,
/// a model built from the found vertex order.
pub fn brute_force_interval(g: &UGraph, max_n: usize) -> Result<(bool, Option<IntervalModel>)> {
    let n = g.n();
    if n > max_n || n > 20 {
        return Err(Error::TooLarge { n, max: max_n.min(20) });
    }
    let order = search_order(g);
    let by_elimination = is_chordal_by_elimination(g) && !has_asteroidal_triple(g);
    if order.is_some() != by_elimination {
        return Err(Error::Invariant(format!(
            "brute-force routes disagree on graph with edges {:?}",
            g.edges().collect::<Vec<_>>()
        )));
    }
    Ok((by_elimination, order.map(|o| model_from_order(g, &o))))
}

fn mask_of(g: &UGraph, v: usize) -> u32 {
    g.neighbors(v).iter().fold(0, |m, &u| m | 1 << u)
}

/// Depth-first search over orders, memoized on (placed, closed) where a
/// placed vertex is closed once a later vertex is not adjacent to it.
fn search_order(g: &UGraph) -> Option<Vec<usize>> {
    let n = g.n();
    let adj: Vec<u32> = (0..n).map(|v| mask_of(g, v)).collect();
    let mut dead = HashSet::new();
    let mut order = Vec::with_capacity(n);
    fn go(
        n: usize,
        adj: &[u32],
        placed: u32,
        closed: u32,
        order: &mut Vec<usize>,
        dead: &mut HashSet<(u32, u32)>,
    ) -> bool {
        if order.len() == n {
            return true;
        }
        if dead.contains(&(placed, closed)) {
            return false;
        }
        for w in 0..n {
            if placed >> w & 1 == 1 || adj[w] & closed != 0 {
                continue;
            }
            let next_closed = closed | (placed & !adj[w]);
            order.push(w);
            if go(n, adj, placed | 1 << w, next_closed, order, dead) {
                return true;
            }
            order.pop();
        }
        dead.insert((placed, closed));
        false
    }
    go(n, &adj, 0, 0, &mut order, &mut dead).then_some(order)
}

fn model_from_order(g: &UGraph, order: &[usize]) -> IntervalModel {
    let n = g.n();
    let mut pos = vec![0usize; n];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    let mut intervals = vec![Interval { left: 0, right: 1 }; n];
    for v in 0..n {
        let reach = g
            .neighbors(v)
            .iter()
            .map(|&u| pos[u])
            .fold(pos[v], usize::max);
        intervals[v] = Interval {
            left: 2 * pos[v] as i64,
            right: 2 * reach as i64 + 1,
        };
    }
    IntervalModel { intervals }
}

fn is_chordal_by_elimination(g: &UGraph) -> bool {
    let n = g.n();
    let adj: Vec<u32> = (0..n).map(|v| mask_of(g, v)).collect();
    let mut alive: u32 = if n == 32 { u32::MAX } else { (1 << n) - 1 };
    while alive != 0 {
        let simplicial = (0..n).filter(|&v| alive >> v & 1 == 1).find(|&v| {
            let nb = adj[v] & alive;
            (0..n)
                .filter(|&u| nb >> u & 1 == 1)
                .all(|u| nb & !(adj[u] | 1 << u) == 0)
        });
        match simplicial {
            Some(v) => alive &= !(1 << v),
            None => return false,
        }
    }
    true
}

fn has_asteroidal_triple(g: &UGraph) -> bool {
    super::find_asteroidal_triple(g).is_some()
}
