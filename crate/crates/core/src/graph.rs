//! Small undirected simple graph with dense local vertex indices.

use std::collections::VecDeque;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct UGraph {
    adj: Vec<Vec<usize>>,
}

impl UGraph {
    pub fn new(n: usize) -> UGraph {
        UGraph {
            adj: vec![Vec::new(); n],
        }
    }

    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> UGraph {
        let mut g = UGraph::new(n);
        for (u, v) in edges {
            g.add_edge(u, v);
        }
        g
    }

    /// All labeled graphs on `n` vertices are enumerated by the bits of `mask`
    /// over the pairs `(i, j)`, `i < j`, in lexicographic order.
    pub fn from_mask(n: usize, mask: u64) -> UGraph {
        let mut g = UGraph::new(n);
        let mut bit = 0;
        for i in 0..n {
            for j in i + 1..n {
                if mask >> bit & 1 == 1 {
                    g.add_edge(i, j);
                }
                bit += 1;
            }
        }
        g
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn m(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    pub fn add_edge(&mut self, u: usize, v: usize) -> bool {
        if u == v {
            return false;
        }
        match self.adj[u].binary_search(&v) {
            Ok(_) => false,
            Err(i) => {
                self.adj[u].insert(i, v);
                let j = self.adj[v].binary_search(&u).unwrap_err();
                self.adj[v].insert(j, u);
                true
            }
        }
    }

    pub fn remove_edge(&mut self, u: usize, v: usize) -> bool {
        match self.adj[u].binary_search(&v) {
            Ok(i) => {
                self.adj[u].remove(i);
                let j = self.adj[v].binary_search(&u).unwrap();
                self.adj[v].remove(j);
                true
            }
            Err(_) => false,
        }
    }

    /// Drop every edge at `v`, leaving it isolated.
    pub fn isolate(&mut self, v: usize) {
        for u in std::mem::take(&mut self.adj[v]) {
            let j = self.adj[u].binary_search(&v).unwrap();
            self.adj[u].remove(j);
        }
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, ns)| ns.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
    }

    /// Induced subgraph on `keep` (in the given order); returns the graph and the
    /// map from new index to old index.
    pub fn induced(&self, keep: &[usize]) -> UGraph {
        let mut pos = vec![usize::MAX; self.n()];
        for (i, &v) in keep.iter().enumerate() {
            pos[v] = i;
        }
        let mut g = UGraph::new(keep.len());
        for (i, &v) in keep.iter().enumerate() {
            let mut ns: Vec<usize> = self.adj[v]
                .iter()
                .filter_map(|&u| (pos[u] != usize::MAX).then_some(pos[u]))
                .collect();
            ns.sort_unstable();
            g.adj[i] = ns;
        }
        g
    }

    /// Induced subgraph on all vertices except `v`; vertex indices above `v` shift down by one.
    pub fn without(&self, v: usize) -> UGraph {
        let keep: Vec<usize> = (0..self.n()).filter(|&u| u != v).collect();
        self.induced(&keep)
    }

    /// Connected components, each sorted, ordered by smallest vertex.
    pub fn components(&self) -> Vec<Vec<usize>> {
        self.components_avoiding(&vec![false; self.n()])
    }

    /// Components of the graph with the `blocked` vertices deleted.
    pub fn components_avoiding(&self, blocked: &[bool]) -> Vec<Vec<usize>> {
        let mut seen = blocked.to_vec();
        let mut out = Vec::new();
        for s in 0..self.n() {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut comp = vec![s];
            let mut i = 0;
            while i < comp.len() {
                let u = comp[i];
                i += 1;
                for &w in &self.adj[u] {
                    if !seen[w] {
                        seen[w] = true;
                        comp.push(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.n() <= 1 || self.components().len() == 1
    }

    /// Shortest path from `s` to `t` using only vertices not in `blocked` (endpoints excepted).
    pub fn shortest_path(&self, s: usize, t: usize, blocked: &[bool]) -> Option<Vec<usize>> {
        let n = self.n();
        let mut prev = vec![usize::MAX; n];
        let mut seen = vec![false; n];
        seen[s] = true;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            if u == t {
                let mut path = vec![t];
                let mut x = t;
                while x != s {
                    x = prev[x];
                    path.push(x);
                }
                path.reverse();
                return Some(path);
            }
            for &w in &self.adj[u] {
                if !seen[w] && (w == t || !blocked[w]) {
                    seen[w] = true;
                    prev[w] = u;
                    q.push_back(w);
                }
            }
        }
        None
    }

    /// Articulation points, sorted.
    pub fn articulation_points(&self) -> Vec<usize> {
        let n = self.n();
        let mut disc = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut is_cut = vec![false; n];
        let mut timer = 0;
        for root in 0..n {
            if disc[root] != usize::MAX {
                continue;
            }
            disc[root] = timer;
            low[root] = timer;
            timer += 1;
            let mut root_children = 0;
            // (vertex, parent, next neighbor index)
            let mut stack = vec![(root, usize::MAX, 0usize)];
            while let Some(top) = stack.last_mut() {
                let (u, parent) = (top.0, top.1);
                if top.2 < self.adj[u].len() {
                    let w = self.adj[u][top.2];
                    top.2 += 1;
                    if disc[w] == usize::MAX {
                        disc[w] = timer;
                        low[w] = timer;
                        timer += 1;
                        if u == root {
                            root_children += 1;
                        }
                        stack.push((w, u, 0));
                    } else if w != parent {
                        low[u] = low[u].min(disc[w]);
                    }
                } else {
                    stack.pop();
                    if parent != usize::MAX {
                        low[parent] = low[parent].min(low[u]);
                        if parent != root && low[u] >= disc[parent] {
                            is_cut[parent] = true;
                        }
                    }
                }
            }
            if root_children > 1 {
                is_cut[root] = true;
            }
        }
        (0..n).filter(|&v| is_cut[v]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edits() {
        let mut g = UGraph::from_edges(4, [(0, 1), (1, 2), (2, 3)]);
        assert_eq!(g.m(), 3);
        assert!(!g.add_edge(1, 0));
        assert!(g.remove_edge(2, 1));
        assert_eq!(g.components(), vec![vec![0, 1], vec![2, 3]]);
        g.isolate(2);
        assert_eq!(g.degree(3), 0);
        let h = UGraph::from_edges(4, [(0, 1), (1, 2), (2, 3)]).without(1);
        assert_eq!(h.edges().collect::<Vec<_>>(), vec![(1, 2)]);
    }

    /// Brute force: v is a cut vertex iff deleting it increases the component count.
    fn brute_cuts(g: &UGraph) -> Vec<usize> {
        let base = g.components().len();
        (0..g.n())
            .filter(|&v| {
                let mut blocked = vec![false; g.n()];
                blocked[v] = true;
                g.components_avoiding(&blocked).len() > base
            })
            .collect()
    }

    #[test]
    fn articulation_points_match_brute_force() {
        for n in 1..=6 {
            let pairs = n * (n - 1) / 2;
            for mask in 0..(1u64 << pairs) {
                let g = UGraph::from_mask(n, mask);
                assert_eq!(g.articulation_points(), brute_cuts(&g), "n={n} mask={mask}");
            }
        }
    }

    #[test]
    fn shortest_path_respects_blocks() {
        let g = UGraph::from_edges(5, [(0, 1), (1, 2), (0, 3), (3, 4), (4, 2)]);
        assert_eq!(g.shortest_path(0, 2, &[false; 5]).unwrap(), vec![0, 1, 2]);
        let mut b = vec![false; 5];
        b[1] = true;
        assert_eq!(g.shortest_path(0, 2, &b).unwrap(), vec![0, 3, 4, 2]);
    }
}
