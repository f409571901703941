//! Brute-force reference implementations shared by the integration tests.
//! Everything here works from definitions and touches only the `Graph`
//! accessors and the `Hole` constructor of the library.

#![allow(dead_code)]

use std::collections::BTreeSet;

use perfect_core::{Graph, Hole, HoleKind, VertexPair};

/// Subsets of `0..n` of size `k`, as sorted vectors.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, k: usize, from: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for v in from..n {
            if n - v < k - cur.len() {
                break;
            }
            cur.push(v);
            rec(n, k, v + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(n, k, 0, &mut Vec::new(), &mut out);
    }
    out
}

/// If `set` induces a single cycle in the graph given by `adj`, returns
/// the cycle order.
fn induced_cycle(set: &[usize], adj: &dyn Fn(usize, usize) -> bool) -> Option<Vec<usize>> {
    for &u in set {
        let deg = set.iter().filter(|&&v| v != u && adj(u, v)).count();
        if deg != 2 {
            return None;
        }
    }
    let mut order = vec![set[0]];
    let mut prev = usize::MAX;
    let mut cur = set[0];
    loop {
        let next = *set.iter().find(|&&v| v != cur && v != prev && adj(cur, v))?;
        if next == set[0] {
            break;
        }
        order.push(next);
        prev = cur;
        cur = next;
        if order.len() > set.len() {
            return None;
        }
    }
    (order.len() == set.len()).then_some(order)
}

/// Every odd hole of `g`, by testing each odd vertex subset of size ≥ 5.
pub fn brute_holes(g: &Graph) -> BTreeSet<Hole> {
    let mut out = BTreeSet::new();
    let adj = |u: usize, v: usize| g.has_edge(u, v);
    for k in (5..=g.n()).step_by(2) {
        for s in subsets(g.n(), k) {
            if let Some(c) = induced_cycle(&s, &adj) {
                out.insert(Hole::new(&c, HoleKind::Hole));
            }
        }
    }
    out
}

/// Every odd antihole of length ≥ 7 of `g`.
pub fn brute_antiholes(g: &Graph) -> BTreeSet<Hole> {
    let mut out = BTreeSet::new();
    let adj = |u: usize, v: usize| !g.has_edge(u, v);
    for k in (7..=g.n()).step_by(2) {
        for s in subsets(g.n(), k) {
            if let Some(c) = induced_cycle(&s, &adj) {
                out.insert(Hole::new(&c, HoleKind::Antihole));
            }
        }
    }
    out
}

/// Perfection by the strong perfect graph characterisation, checked by
/// brute force (antiholes of length five are holes).
pub fn brute_perfect(g: &Graph) -> bool {
    brute_holes(g).is_empty() && brute_antiholes(g).is_empty()
}

/// Labeled cycles of length `i` on `n` vertices, counted by listing every
/// cyclic order of every `i`-subset once.
pub fn brute_cycle_configs(n: usize, i: usize) -> u64 {
    fn perms(rest: &mut Vec<usize>, cur: &mut Vec<usize>, count: &mut u64) {
        if rest.is_empty() {
            // Fix the direction: second vertex smaller than the last.
            if cur[1] < cur[cur.len() - 1] {
                *count += 1;
            }
            return;
        }
        for t in 0..rest.len() {
            let v = rest.remove(t);
            cur.push(v);
            perms(rest, cur, count);
            cur.pop();
            rest.insert(t, v);
        }
    }
    let mut count = 0;
    for s in subsets(n, i) {
        let mut cur = vec![s[0]];
        let mut rest = s[1..].to_vec();
        perms(&mut rest, &mut cur, &mut count);
    }
    count
}

/// Smallest number of flips among `allowed` pairs making `g` perfect, by
/// trying flip sets in order of increasing size. `None` if no subset works.
pub fn brute_min_flips(g: &Graph, allowed: &[VertexPair]) -> Option<usize> {
    for d in 0..=allowed.len() {
        let mut found = false;
        let idx: Vec<Vec<usize>> = subsets(allowed.len(), d);
        for set in idx {
            let mut h = g.clone();
            for &t in &set {
                h.flip(allowed[t]);
            }
            if brute_perfect(&h) {
                found = true;
                break;
            }
        }
        if found {
            return Some(d);
        }
    }
    None
}

pub fn all_pairs(n: usize) -> Vec<VertexPair> {
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| VertexPair::new(i, j)))
        .collect()
}

pub fn non_edges(g: &Graph) -> Vec<VertexPair> {
    all_pairs(g.n()).into_iter().filter(|&vp| !g.has_pair(vp)).collect()
}

pub fn petersen() -> Graph {
    let mut edges = Vec::new();
    for i in 0..5 {
        edges.push((i, (i + 1) % 5));
        edges.push((i, i + 5));
        edges.push((5 + i, 5 + (i + 2) % 5));
    }
    Graph::from_edges(10, edges)
}
