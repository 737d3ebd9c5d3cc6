//! Fill-reducing column ordering by recursive level-structure dissection.
//!
//! The graph is the symmetrized pattern of the matrix. Each part is split by
//! the middle level of a breadth-first level structure rooted at a
//! pseudo-peripheral node; the level becomes a separator numbered after both
//! halves.

use std::collections::VecDeque;

const LEAF_SIZE: usize = 48;

/// Adjacency of `A + Aᵀ` without self loops, in CSR form.
pub(crate) struct Graph {
    ptr: Vec<usize>,
    adj: Vec<usize>,
}

impl Graph {
    pub(crate) fn from_pattern(n: usize, row_ptr: &[usize], col_idx: &[usize]) -> Graph {
        let mut deg = vec![0usize; n];
        for i in 0..n {
            for &j in &col_idx[row_ptr[i]..row_ptr[i + 1]] {
                if i != j {
                    deg[i] += 1;
                    deg[j] += 1;
                }
            }
        }
        let mut ptr = vec![0usize; n + 1];
        for i in 0..n {
            ptr[i + 1] = ptr[i] + deg[i];
        }
        let mut fill = ptr.clone();
        let mut adj = vec![0usize; ptr[n]];
        for i in 0..n {
            for &j in &col_idx[row_ptr[i]..row_ptr[i + 1]] {
                if i != j {
                    adj[fill[i]] = j;
                    fill[i] += 1;
                    adj[fill[j]] = i;
                    fill[j] += 1;
                }
            }
        }
        // Remove duplicate neighbours (entries present in both A and Aᵀ).
        let mut new_ptr = vec![0usize; n + 1];
        let mut new_adj = Vec::with_capacity(adj.len() / 2 + n);
        for i in 0..n {
            let row = &mut adj[ptr[i]..ptr[i + 1]];
            row.sort_unstable();
            let mut last = usize::MAX;
            for &j in row.iter() {
                if j != last {
                    new_adj.push(j);
                    last = j;
                }
            }
            new_ptr[i + 1] = new_adj.len();
        }
        Graph {
            ptr: new_ptr,
            adj: new_adj,
        }
    }

    fn neighbours(&self, v: usize) -> &[usize] {
        &self.adj[self.ptr[v]..self.ptr[v + 1]]
    }

    fn len(&self) -> usize {
        self.ptr.len() - 1
    }
}

struct Dissector<'g> {
    graph: &'g Graph,
    /// Part label of each node; only nodes carrying the active label are visited.
    label: Vec<usize>,
    level: Vec<usize>,
    next_label: usize,
    order: Vec<usize>,
}

/// Returns a permutation `perm` where `perm[k]` is the node eliminated at step `k`.
pub(crate) fn nested_dissection(graph: &Graph) -> Vec<usize> {
    let n = graph.len();
    let mut d = Dissector {
        graph,
        label: vec![0; n],
        level: vec![usize::MAX; n],
        next_label: 1,
        order: Vec::with_capacity(n),
    };
    d.dissect((0..n).collect(), 0);
    debug_assert_eq!(d.order.len(), n);
    d.order
}

impl Dissector<'_> {
    fn dissect(&mut self, nodes: Vec<usize>, label: usize) {
        if nodes.len() <= LEAF_SIZE {
            self.order.extend_from_slice(&nodes);
            return;
        }
        let start = self.pseudo_peripheral(nodes[0], label);
        let (levels, reached) = self.level_structure(start, label);
        if reached < nodes.len() {
            // Disconnected: split off the component of `start`.
            let comp_label = self.new_label();
            let rest_label = self.new_label();
            let mut comp = Vec::with_capacity(reached);
            let mut rest = Vec::with_capacity(nodes.len() - reached);
            for &v in &nodes {
                if self.level[v] != usize::MAX {
                    self.label[v] = comp_label;
                    comp.push(v);
                } else {
                    self.label[v] = rest_label;
                    rest.push(v);
                }
            }
            self.clear_levels(&nodes);
            self.dissect(comp, comp_label);
            self.dissect(rest, rest_label);
            return;
        }
        if levels.len() < 3 {
            self.clear_levels(&nodes);
            self.order.extend_from_slice(&nodes);
            return;
        }
        // Middle level by node count.
        let half = nodes.len() / 2;
        let mut acc = 0;
        let mut mid = 1;
        for (k, lvl) in levels.iter().enumerate() {
            acc += lvl.len();
            if acc >= half {
                mid = k.clamp(1, levels.len() - 2);
                break;
            }
        }
        let lo_label = self.new_label();
        let hi_label = self.new_label();
        let sep_label = self.new_label();
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        let mut sep = Vec::new();
        for (k, lvl) in levels.iter().enumerate() {
            for &v in lvl {
                if k < mid {
                    self.label[v] = lo_label;
                    lo.push(v);
                } else if k > mid {
                    self.label[v] = hi_label;
                    hi.push(v);
                } else {
                    self.label[v] = sep_label;
                    sep.push(v);
                }
            }
        }
        self.clear_levels(&nodes);
        lo.sort_unstable();
        hi.sort_unstable();
        sep.sort_unstable();
        self.dissect(lo, lo_label);
        self.dissect(hi, hi_label);
        self.order.extend_from_slice(&sep);
    }

    fn new_label(&mut self) -> usize {
        self.next_label += 1;
        self.next_label
    }

    fn clear_levels(&mut self, nodes: &[usize]) {
        for &v in nodes {
            self.level[v] = usize::MAX;
        }
    }

    /// Breadth-first levels restricted to `label`; returns the levels and the node count reached.
    fn level_structure(&mut self, start: usize, label: usize) -> (Vec<Vec<usize>>, usize) {
        let mut levels: Vec<Vec<usize>> = vec![vec![start]];
        self.level[start] = 0;
        let mut reached = 1;
        loop {
            let mut next = Vec::new();
            let depth = levels.len();
            for &v in levels.last().expect("non-empty") {
                for &w in self.graph.neighbours(v) {
                    if self.label[w] == label && self.level[w] == usize::MAX {
                        self.level[w] = depth;
                        next.push(w);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            reached += next.len();
            levels.push(next);
        }
        (levels, reached)
    }

    fn pseudo_peripheral(&mut self, seed: usize, label: usize) -> usize {
        let mut start = seed;
        let mut ecc = 0;
        for _ in 0..6 {
            let mut queue = VecDeque::new();
            let mut visited = Vec::new();
            queue.push_back(start);
            self.level[start] = 0;
            visited.push(start);
            let mut last = start;
            while let Some(v) = queue.pop_front() {
                last = v;
                for &w in self.graph.neighbours(v) {
                    if self.label[w] == label && self.level[w] == usize::MAX {
                        self.level[w] = self.level[v] + 1;
                        queue.push_back(w);
                        visited.push(w);
                    }
                }
            }
            let depth = self.level[last];
            // Among the deepest nodes pick one of minimum degree.
            let candidate = visited
                .iter()
                .copied()
                .filter(|&v| self.level[v] == depth)
                .min_by_key(|&v| (self.graph.neighbours(v).len(), v))
                .unwrap_or(last);
            for &v in &visited {
                self.level[v] = usize::MAX;
            }
            if depth <= ecc {
                break;
            }
            ecc = depth;
            start = candidate;
        }
        start
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_graph(nx: usize, ny: usize) -> Graph {
        let idx = |i: usize, j: usize| i + nx * j;
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                if i + 1 < nx {
                    cols.push(idx(i + 1, j));
                }
                if j + 1 < ny {
                    cols.push(idx(i, j + 1));
                }
                row_ptr.push(cols.len());
            }
        }
        Graph::from_pattern(nx * ny, &row_ptr, &cols)
    }

    #[test]
    fn ordering_is_a_permutation() {
        let g = grid_graph(30, 17);
        let perm = nested_dissection(&g);
        let mut seen = vec![false; 30 * 17];
        for &v in &perm {
            assert!(!seen[v]);
            seen[v] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn disconnected_graph_is_covered() {
        // two disjoint paths
        let n = 200;
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        for i in 0..n {
            if i + 1 < n && i != 99 {
                cols.push(i + 1);
            }
            row_ptr.push(cols.len());
        }
        let g = Graph::from_pattern(n, &row_ptr, &cols);
        let mut perm = nested_dissection(&g);
        perm.sort_unstable();
        assert_eq!(perm, (0..n).collect::<Vec<_>>());
    }
}
