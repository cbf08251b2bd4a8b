use std::collections::VecDeque;

use itertools::Itertools;

use crate::error::{Error, Result};

/// Literal: variable index plus polarity (true = positive occurrence).
pub type Lit = (usize, bool);

/// 2-SAT instance; unit clauses are encoded as a literal paired with itself.
#[derive(Clone, Debug)]
pub struct TwoSatInstance {
    pub vars: usize,
    pub clauses: Vec<(Lit, Lit)>,
}

impl TwoSatInstance {
    pub fn new(vars: usize) -> TwoSatInstance {
        TwoSatInstance { vars, clauses: Vec::new() }
    }

    pub fn add_clause(&mut self, a: Lit, b: Lit) {
        debug_assert!(a.0 < self.vars && b.0 < self.vars);
        self.clauses.push((a, b));
    }

    pub fn add_unit(&mut self, l: Lit) {
        self.add_clause(l, l);
    }

    pub fn satisfied_by(&self, a: &[bool]) -> bool {
        self.clauses.iter().all(|&((v1, p1), (v2, p2))| a[v1] == p1 || a[v2] == p2)
    }
}

#[derive(Clone, Debug)]
pub struct Digraph {
    pub n: usize,
    pub adj: Vec<Vec<usize>>,
}

impl Digraph {
    pub fn new(n: usize) -> Digraph {
        Digraph { n, adj: vec![Vec::new(); n] }
    }

    pub fn add_edge(&mut self, u: usize, w: usize) {
        debug_assert!(u < self.n && w < self.n);
        self.adj[u].push(w);
    }
}

/// Strongly connected components in topological order: every edge points into
/// the same or a later component. Each component is sorted ascending.
pub fn tarjan_scc(n: usize, adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let mut next = 0usize;
    let mut call: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;
        call.push((root, 0));
        while let Some(frame) = call.last_mut() {
            let v = frame.0;
            if frame.1 < adj[v].len() {
                let w = adj[v][frame.1];
                frame.1 += 1;
                if index[w] == UNSEEN {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(up) = call.last() {
                    let u = up.0;
                    low[u] = low[u].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    comps.push(comp);
                }
            }
        }
    }
    // tarjan emits sinks first
    comps.reverse();
    comps
}

/// Implication-graph 2-SAT. Returns a satisfying assignment or None.
pub fn two_sat_solve(inst: &TwoSatInstance) -> Option<Vec<bool>> {
    let m = inst.vars;
    let node = |(v, pol): Lit| 2 * v + usize::from(!pol);
    let mut adj = vec![Vec::new(); 2 * m];
    for &(a, b) in &inst.clauses {
        // (a or b) becomes the implications !a -> b and !b -> a
        adj[node(a) ^ 1].push(node(b));
        adj[node(b) ^ 1].push(node(a));
    }
    for l in adj.iter_mut() {
        l.sort_unstable();
        l.dedup();
    }
    let comps = tarjan_scc(2 * m, &adj);
    let mut comp_of = vec![0usize; 2 * m];
    for (i, c) in comps.iter().enumerate() {
        for &x in c {
            comp_of[x] = i;
        }
    }
    let mut out = vec![false; m];
    for v in 0..m {
        if comp_of[2 * v] == comp_of[2 * v + 1] {
            return None;
        }
        // a literal is true when its component comes later in topological order
        out[v] = comp_of[2 * v] > comp_of[2 * v + 1];
    }
    Some(out)
}

/// Shrinks a satisfying assignment by flipping true variables to false in
/// ascending index order, keeping each flip that still satisfies the
/// instance, until no flip survives.
pub fn minimal_true_assignment(inst: &TwoSatInstance, seed: &[bool]) -> Result<Vec<bool>> {
    assert_eq!(seed.len(), inst.vars);
    if !inst.satisfied_by(seed) {
        return Err(Error::SeedNotSatisfying);
    }
    let mut cur = seed.to_vec();
    loop {
        let mut changed = false;
        for v in 0..inst.vars {
            if cur[v] {
                cur[v] = false;
                if inst.satisfied_by(&cur) {
                    changed = true;
                } else {
                    cur[v] = true;
                }
            }
        }
        if !changed {
            return Ok(cur);
        }
    }
}

/// Shortest directed cycle through v as a vertex list starting at v (the
/// closing edge back to v is implicit). BFS expands neighbors in ascending
/// order, so ties resolve deterministically. A self-loop yields [v].
pub fn shortest_cycle_through(g: &Digraph, v: usize) -> Option<Vec<usize>> {
    if g.adj[v].contains(&v) {
        return Some(vec![v]);
    }
    let mut parent = vec![usize::MAX; g.n];
    let mut seen = vec![false; g.n];
    let mut queue = VecDeque::new();
    seen[v] = true;
    queue.push_back(v);
    while let Some(u) = queue.pop_front() {
        let mut nb = g.adj[u].clone();
        nb.sort_unstable();
        for w in nb {
            if w == v {
                let mut path = vec![u];
                let mut x = u;
                while x != v {
                    x = parent[x];
                    path.push(x);
                }
                path.reverse();
                return Some(path);
            }
            if !seen[w] {
                seen[w] = true;
                parent[w] = u;
                queue.push_back(w);
            }
        }
    }
    None
}

/// Nonempty subsets of a sorted label slice, ordered by size then
/// lexicographically within each size.
pub fn subsets_size_then_lex(items: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    (1..=items.len()).flat_map(move |k| items.iter().copied().combinations(k))
}
