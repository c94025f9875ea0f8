//! Path planning over weighted digraphs with ordered node keys.
//!
//! Ties are broken by the node key order so results do not depend on
//! insertion order.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, VecDeque};

use rustc_hash::FxHashSet;

use crate::scalar::Real;

pub const UNREACHED: u32 = u32::MAX;

/// Graph view consumed by the planners. Out-edges must be listed in
/// increasing key order of their targets.
pub trait PlanGraph<F: Real> {
    type Key: Ord + Copy;

    fn node_count(&self) -> usize;
    fn key(&self, v: u32) -> Self::Key;
    fn out_edges(&self, v: u32) -> impl Iterator<Item = (u32, F)> + '_;
    fn in_neighbors(&self, v: u32) -> impl Iterator<Item = u32> + '_;
}

/// Single-source minimum-weight tree.
#[derive(Clone, Debug)]
pub struct SafestTree<F> {
    pub(crate) source: u32,
    pub(crate) dist: Vec<F>,
    pub(crate) parent: Vec<u32>,
}

impl<F: Real> SafestTree<F> {
    pub fn source(&self) -> u32 {
        self.source
    }

    /// Number of nodes the graph had when the tree was grown.
    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }

    pub fn distance(&self, v: u32) -> Option<F> {
        let d = *self.dist.get(v as usize)?;
        d.is_finite().then_some(d)
    }

    /// Node sequence from the source to `v`. `None` for nodes the tree
    /// does not reach, including nodes added after it was grown.
    pub fn path_to(&self, v: u32) -> Option<Vec<u32>> {
        if v as usize >= self.parent.len() {
            return None;
        }
        if v != self.source && self.parent[v as usize] == UNREACHED {
            return None;
        }
        let mut rev = vec![v];
        let mut u = v;
        while u != self.source {
            u = self.parent[u as usize];
            rev.push(u);
        }
        rev.reverse();
        Some(rev)
    }
}

/// Heap order of a non-negative distance. The bit pattern of a
/// non-negative `f64` sorts like the value.
fn order_bits<F: Real>(d: F) -> u64 {
    d.to_f64().unwrap_or(f64::INFINITY).to_bits()
}

/// Dijkstra from `src`; stops early once `stop` is settled.
pub fn dijkstra<F: Real, G: PlanGraph<F>>(g: &G, src: u32, stop: Option<u32>) -> SafestTree<F> {
    let n = g.node_count();
    let mut dist = vec![F::infinity(); n];
    let mut parent = vec![UNREACHED; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[src as usize] = F::zero();
    heap.push(Reverse((0u64, g.key(src), src)));
    while let Some(Reverse((_, _, node))) = heap.pop() {
        let u = node as usize;
        if done[u] {
            continue;
        }
        done[u] = true;
        if Some(node) == stop {
            break;
        }
        let du = dist[u];
        for (v, w) in g.out_edges(node) {
            let nd = du + w;
            if nd < dist[v as usize] {
                dist[v as usize] = nd;
                parent[v as usize] = node;
                heap.push(Reverse((order_bits(nd), g.key(v), v)));
            }
        }
    }
    SafestTree {
        source: src,
        dist,
        parent,
    }
}

#[derive(Default)]
struct Filter {
    nodes: FxHashSet<u32>,
    edges: FxHashSet<(u32, u32)>,
}

impl Filter {
    fn allows(&self, u: u32, v: u32) -> bool {
        !self.nodes.contains(&v) && !self.edges.contains(&(u, v))
    }
}

fn reverse_bfs<F: Real, G: PlanGraph<F>>(g: &G, goal: u32, filter: &Filter) -> Vec<u32> {
    let mut dist = vec![UNREACHED; g.node_count()];
    dist[goal as usize] = 0;
    let mut queue = VecDeque::from([goal]);
    while let Some(v) = queue.pop_front() {
        for u in g.in_neighbors(v) {
            if dist[u as usize] != UNREACHED || filter.nodes.contains(&u) || filter.edges.contains(&(u, v)) {
                continue;
            }
            dist[u as usize] = dist[v as usize] + 1;
            queue.push_back(u);
        }
    }
    dist
}

/// Hop distance from every node to `goal`.
pub fn hop_distances<F: Real, G: PlanGraph<F>>(g: &G, goal: u32) -> Vec<u32> {
    reverse_bfs(g, goal, &Filter::default())
}

/// Hop distances to `goal`, exact up to the level of `src`. Nodes left
/// unlabeled get the next level, which is still a lower bound. If `src`
/// cannot reach `goal` the search runs to completion.
fn bounded_hop_distances<F: Real, G: PlanGraph<F>>(g: &G, src: u32, goal: u32) -> Vec<u32> {
    let mut dist = vec![UNREACHED; g.node_count()];
    dist[goal as usize] = 0;
    let mut level = vec![goal];
    let mut depth = 0;
    let mut cap = UNREACHED;
    while !level.is_empty() {
        if dist[src as usize] != UNREACHED && cap == UNREACHED {
            cap = depth;
        }
        if depth >= cap {
            for d in dist.iter_mut().filter(|d| **d == UNREACHED) {
                *d = depth + 1;
            }
            break;
        }
        let mut next = Vec::new();
        for &v in &level {
            for u in g.in_neighbors(v) {
                if dist[u as usize] == UNREACHED {
                    dist[u as usize] = depth + 1;
                    next.push(u);
                }
            }
        }
        level = next;
        depth += 1;
    }
    dist
}

/// First path in key order that descends `dist` by one per hop.
fn descend<F: Real, G: PlanGraph<F>>(g: &G, from: u32, dist: &[u32], filter: &Filter) -> Vec<u32> {
    let mut path = vec![from];
    let mut v = from;
    while dist[v as usize] > 0 {
        let want = dist[v as usize] - 1;
        let next = g
            .out_edges(v)
            .map(|(w, _)| w)
            .find(|&w| dist[w as usize] == want && filter.allows(v, w))
            .expect("distance labels are consistent");
        path.push(next);
        v = next;
    }
    path
}

/// Walk of exactly `remaining` hops from `v` to `goal` that is first in key
/// order. `h` is a lower bound on the hops left. Failures are memoized per
/// `(node, remaining)`.
#[allow(clippy::too_many_arguments)]
fn bounded_dfs<F: Real, G: PlanGraph<F>>(
    g: &G,
    v: u32,
    goal: u32,
    remaining: u32,
    h: &[u32],
    filter: &Filter,
    failed: &mut FxHashSet<(u32, u32)>,
    path: &mut Vec<u32>,
) -> bool {
    if v == goal {
        return remaining == 0;
    }
    if remaining == 0 || failed.contains(&(v, remaining)) {
        return false;
    }
    let next: Vec<u32> = g
        .out_edges(v)
        .map(|(w, _)| w)
        .filter(|&w| h[w as usize] < remaining && filter.allows(v, w))
        .collect();
    for w in next {
        path.push(w);
        if bounded_dfs(g, w, goal, remaining - 1, h, filter, failed, path) {
            return true;
        }
        path.pop();
    }
    failed.insert((v, remaining));
    false
}

/// Extra hops over the unfiltered distance tried before a full search.
const MAX_SLACK: u32 = 3;

/// Shortest spur path under `filter`, first in key order among equals.
/// `h` holds unfiltered hop distances to the goal, a lower bound. A walk of
/// minimal length never repeats a node, so deepening the length bound
/// yields a loop-free path.
fn spur_path<F: Real, G: PlanGraph<F>>(g: &G, spur: u32, goal: u32, h: &[u32], filter: &Filter) -> Option<Vec<u32>> {
    let base = h[spur as usize];
    if base == UNREACHED {
        return None;
    }
    let mut failed = FxHashSet::default();
    for slack in 0..=MAX_SLACK {
        let mut path = vec![spur];
        if bounded_dfs(g, spur, goal, base + slack, h, filter, &mut failed, &mut path) {
            return Some(path);
        }
    }
    let dist = reverse_bfs(g, goal, filter);
    (dist[spur as usize] != UNREACHED).then(|| descend(g, spur, &dist, filter))
}

/// Up to `k` loop-free paths from `src` to `goal` ordered by hop count,
/// then by the key sequence. Yen's deviation scheme.
pub fn k_shortest_paths<F: Real, G: PlanGraph<F>>(g: &G, src: u32, goal: u32, k: usize) -> Vec<Vec<u32>> {
    if k == 0 {
        return Vec::new();
    }
    if src == goal {
        return vec![vec![src]];
    }
    let h = bounded_hop_distances(g, src, goal);
    if h[src as usize] == UNREACHED {
        return Vec::new();
    }
    let keys = |p: &[u32]| -> Vec<G::Key> { p.iter().map(|&v| g.key(v)).collect() };

    let mut accepted = vec![descend(g, src, &h, &Filter::default())];
    let mut candidates: BTreeSet<(usize, Vec<G::Key>, Vec<u32>)> = BTreeSet::new();
    let mut seen: FxHashSet<Vec<u32>> = FxHashSet::default();
    seen.insert(accepted[0].clone());

    while accepted.len() < k {
        let prev = accepted.last().expect("non-empty").clone();
        for j in 0..prev.len() - 1 {
            let spur = prev[j];
            let root = &prev[..=j];
            let mut filter = Filter::default();
            for p in &accepted {
                if p.len() > j + 1 && &p[..=j] == root {
                    filter.edges.insert((p[j], p[j + 1]));
                }
            }
            filter.nodes.extend(root[..j].iter().copied());
            if let Some(tail) = spur_path(g, spur, goal, &h, &filter) {
                let mut full = root[..j].to_vec();
                full.extend(tail);
                if seen.insert(full.clone()) {
                    candidates.insert((full.len(), keys(&full), full));
                }
            }
        }
        match candidates.pop_first() {
            Some((_, _, best)) => accepted.push(best),
            None => break,
        }
    }
    accepted
}

/// Adjacency-list digraph with explicit weights and `u32` keys.
#[derive(Clone, Debug, Default)]
pub struct Digraph<F> {
    out: Vec<Vec<(u32, F)>>,
    incoming: Vec<Vec<u32>>,
}

impl<F: Real> Digraph<F> {
    pub fn new(nodes: usize) -> Self {
        Digraph {
            out: vec![Vec::new(); nodes],
            incoming: vec![Vec::new(); nodes],
        }
    }

    /// Adds or replaces `u -> v`.
    pub fn add_edge(&mut self, u: u32, v: u32, weight: F) {
        let list = &mut self.out[u as usize];
        match list.binary_search_by_key(&v, |&(w, _)| w) {
            Ok(pos) => list[pos].1 = weight,
            Err(pos) => {
                list.insert(pos, (v, weight));
                self.incoming[v as usize].push(u);
            }
        }
    }

    pub fn edge_weight(&self, u: u32, v: u32) -> Option<F> {
        let list = &self.out[u as usize];
        list.binary_search_by_key(&v, |&(w, _)| w).ok().map(|p| list[p].1)
    }
}

impl<F: Real> PlanGraph<F> for Digraph<F> {
    type Key = u32;

    fn node_count(&self) -> usize {
        self.out.len()
    }

    fn key(&self, v: u32) -> u32 {
        v
    }

    fn out_edges(&self, v: u32) -> impl Iterator<Item = (u32, F)> + '_ {
        self.out[v as usize].iter().copied()
    }

    fn in_neighbors(&self, v: u32) -> impl Iterator<Item = u32> + '_ {
        self.incoming[v as usize].iter().copied()
    }
}
