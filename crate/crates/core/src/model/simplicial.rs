use std::collections::VecDeque;

use serde::Serialize;

use crate::error::{Error, Result};

/// Finite simplicial tree rooted at vertex 0.
#[derive(Clone, Debug, Serialize)]
pub struct SimplicialTree {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    #[serde(skip)]
    adj: Vec<Vec<(usize, usize)>>,
    /// Deeper endpoint of each edge.
    #[serde(skip)]
    child: Vec<usize>,
    #[serde(skip)]
    tin: Vec<usize>,
    #[serde(skip)]
    tout: Vec<usize>,
}

impl PartialEq for SimplicialTree {
    fn eq(&self, o: &Self) -> bool {
        self.n == o.n && self.edges == o.edges
    }
}

impl SimplicialTree {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Invariant("tree needs a vertex".into()));
        }
        if edges.len() + 1 != n {
            return Err(Error::Invariant(format!("{n} vertices but {} edges", edges.len())));
        }
        let mut adj = vec![Vec::new(); n];
        for (i, &(u, v)) in edges.iter().enumerate() {
            if u >= n || v >= n || u == v {
                return Err(Error::Invariant(format!("tree edge {i} malformed")));
            }
            adj[u].push((v, i));
            adj[v].push((u, i));
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        let mut child = vec![usize::MAX; edges.len()];
        let mut tin = vec![usize::MAX; n];
        let mut tout = vec![0; n];
        let mut clock = 0;
        // iterative DFS: (vertex, next adjacency slot)
        let mut stack = vec![(0usize, 0usize)];
        tin[0] = 0;
        clock += 1;
        while let Some(&mut (u, ref mut i)) = stack.last_mut() {
            if *i < adj[u].len() {
                let (v, e) = adj[u][*i];
                *i += 1;
                if tin[v] == usize::MAX {
                    tin[v] = clock;
                    clock += 1;
                    child[e] = v;
                    stack.push((v, 0));
                }
            } else {
                tout[u] = clock;
                stack.pop();
            }
        }
        if clock != n {
            return Err(Error::Invariant("tree is disconnected".into()));
        }
        Ok(SimplicialTree {
            n,
            edges,
            adj,
            child,
            tin,
            tout,
        })
    }

    pub fn point() -> Self {
        SimplicialTree::new(1, vec![]).expect("single vertex")
    }

    pub fn path(n: usize) -> Self {
        SimplicialTree::new(n, (1..n).map(|i| (i - 1, i)).collect()).expect("path")
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// (neighbour, edge) pairs, sorted.
    pub fn adj(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn leaves(&self) -> Vec<usize> {
        (0..self.n).filter(|&v| self.degree(v) <= 1).collect()
    }

    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        self.adj[a].iter().find(|x| x.0 == b).map(|x| x.1)
    }

    /// Whether `v` lies on the side of edge `e` away from the root.
    pub fn far_side(&self, e: usize, v: usize) -> bool {
        let c = self.child[e];
        self.tin[c] <= self.tin[v] && self.tin[v] < self.tout[c]
    }

    /// One bit per edge: set iff `v` is on the far side.
    pub fn encode_into(&self, v: usize, out: &mut Vec<bool>) {
        out.extend((0..self.edges.len()).map(|e| self.far_side(e, v)));
    }

    pub fn distances(&self, src: usize) -> Vec<usize> {
        let mut d = vec![usize::MAX; self.n];
        d[src] = 0;
        let mut q = VecDeque::from([src]);
        while let Some(u) = q.pop_front() {
            for &(v, _) in &self.adj[u] {
                if d[v] == usize::MAX {
                    d[v] = d[u] + 1;
                    q.push_back(v);
                }
            }
        }
        d
    }

    pub fn all_distances(&self) -> Vec<Vec<usize>> {
        (0..self.n).map(|s| self.distances(s)).collect()
    }

    pub fn dist(&self, a: usize, b: usize) -> usize {
        (0..self.edges.len()).filter(|&e| self.far_side(e, a) != self.far_side(e, b)).count()
    }

    /// Vertex path from `a` to `b`.
    pub fn path_between(&self, a: usize, b: usize) -> Vec<usize> {
        let mut prev = vec![usize::MAX; self.n];
        prev[a] = a;
        let mut q = VecDeque::from([a]);
        while let Some(u) = q.pop_front() {
            if u == b {
                break;
            }
            for &(v, _) in &self.adj[u] {
                if prev[v] == usize::MAX {
                    prev[v] = u;
                    q.push_back(v);
                }
            }
        }
        let mut out = vec![b];
        let mut cur = b;
        while cur != a {
            cur = prev[cur];
            out.push(cur);
        }
        out.reverse();
        out
    }

    /// Component label of every vertex of T − v; `v` itself gets `usize::MAX`.
    pub fn components_without(&self, v: usize) -> Vec<usize> {
        let mut comp = vec![usize::MAX; self.n];
        for (c, &(s, _)) in self.adj[v].iter().enumerate() {
            comp[s] = c;
            let mut stack = vec![s];
            while let Some(u) = stack.pop() {
                for &(w, _) in &self.adj[u] {
                    if w != v && comp[w] == usize::MAX {
                        comp[w] = c;
                        stack.push(w);
                    }
                }
            }
        }
        comp
    }

    /// Flags of the subtree spanned by `nodes`.
    pub fn hull(&self, nodes: &[usize]) -> Vec<bool> {
        let mut keep = vec![true; self.n];
        let mut target = vec![false; self.n];
        for &v in nodes {
            target[v] = true;
        }
        if nodes.is_empty() {
            return vec![false; self.n];
        }
        let mut deg: Vec<usize> = (0..self.n).map(|v| self.degree(v)).collect();
        let mut stack: Vec<usize> = (0..self.n).filter(|&v| deg[v] <= 1 && !target[v]).collect();
        while let Some(u) = stack.pop() {
            if !keep[u] {
                continue;
            }
            keep[u] = false;
            for &(w, _) in &self.adj[u] {
                if keep[w] {
                    deg[w] -= 1;
                    if deg[w] <= 1 && !target[w] {
                        stack.push(w);
                    }
                }
            }
        }
        keep
    }

    /// Contract the flagged edges; returns the quotient and the vertex map.
    ///
    /// Quotient vertices are numbered by first appearance in vertex order.
    pub fn contract(&self, contract: &[bool]) -> (SimplicialTree, Vec<usize>) {
        let mut q = vec![usize::MAX; self.n];
        let mut next = 0;
        for s in 0..self.n {
            if q[s] != usize::MAX {
                continue;
            }
            q[s] = next;
            let mut stack = vec![s];
            while let Some(u) = stack.pop() {
                for &(w, e) in &self.adj[u] {
                    if contract[e] && q[w] == usize::MAX {
                        q[w] = next;
                        stack.push(w);
                    }
                }
            }
            next += 1;
        }
        let edges = (0..self.edges.len())
            .filter(|&e| !contract[e])
            .map(|e| (q[self.edges[e].0], q[self.edges[e].1]))
            .collect();
        (SimplicialTree::new(next, edges).expect("contraction of a tree is a tree"), q)
    }

    pub fn to_dot(&self, name: &str, labels: &[String]) -> String {
        let mut s = format!("graph {name} {{\n");
        for v in 0..self.n {
            match labels.get(v).filter(|l| !l.is_empty()) {
                Some(l) => s.push_str(&format!("  t{v} [label=\"{v}: {l}\"];\n")),
                None => s.push_str(&format!("  t{v};\n")),
            }
        }
        for &(a, b) in &self.edges {
            s.push_str(&format!("  t{a} -- t{b};\n"));
        }
        s.push_str("}\n");
        s
    }
}
