//! Random small weighted graphs with brute-force path enumeration.

use hme_core::planner::{dijkstra, k_shortest_paths, Digraph};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub struct Case {
    pub graph: Digraph<f64>,
    pub sr: Vec<Vec<Option<f64>>>,
    pub n: usize,
}

pub fn random_case(rng: &mut ChaCha8Rng) -> Case {
    let n = rng.gen_range(2..=12);
    let density = rng.gen_range(0.15..0.6);
    let mut graph = Digraph::new(n);
    let mut sr = vec![vec![None; n]; n];
    for u in 0..n {
        for v in 0..n {
            if u != v && rng.gen_bool(density) {
                // a few exact ties on purpose
                let p = if rng.gen_bool(0.2) {
                    0.5
                } else {
                    rng.gen_range(0.01..=1.0)
                };
                sr[u][v] = Some(p);
                graph.add_edge(u as u32, v as u32, -f64::ln(p));
            }
        }
    }
    Case { graph, sr, n }
}

pub fn all_simple_paths(case: &Case, src: usize, goal: usize) -> Vec<Vec<u32>> {
    fn walk(case: &Case, v: usize, goal: usize, path: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if v == goal {
            out.push(path.clone());
            return;
        }
        for w in 0..case.n {
            if case.sr[v][w].is_some() && !path.contains(&(w as u32)) {
                path.push(w as u32);
                walk(case, w, goal, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(case, src, goal, &mut vec![src as u32], &mut out);
    out
}

pub fn product(case: &Case, path: &[u32]) -> f64 {
    path.windows(2)
        .map(|w| case.sr[w[0] as usize][w[1] as usize].unwrap())
        .product()
}

/// Checks one query against brute force. `Err` describes the first
/// disagreement.
pub fn check_query(case: &Case, src: usize, goal: usize) -> Result<(), String> {
    let mut paths = all_simple_paths(case, src, goal);
    let tree = dijkstra(&case.graph, src as u32, Some(goal as u32));
    let found = tree.path_to(goal as u32);
    if paths.is_empty() {
        if found.is_some() || !k_shortest_paths(&case.graph, src as u32, goal as u32, 5).is_empty() {
            return Err(format!("path reported for unreachable {src} -> {goal}"));
        }
        return Ok(());
    }
    let best = paths.iter().map(|p| product(case, p)).fold(0.0, f64::max);
    let found = found.ok_or_else(|| format!("no safest path {src} -> {goal}"))?;
    if (product(case, &found) - best).abs() > 1e-9 {
        return Err(format!("safest {src} -> {goal}: {} vs {best}", product(case, &found)));
    }
    paths.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    for k in [1, 3, 5] {
        let got = k_shortest_paths(&case.graph, src as u32, goal as u32, k);
        let want: Vec<Vec<u32>> = paths.iter().take(k).cloned().collect();
        if got != want {
            return Err(format!("k={k} {src} -> {goal}: {got:?} vs {want:?}"));
        }
    }
    let shortest = paths[0].len();
    let minimal = paths.iter().filter(|p| p.len() == shortest).count();
    let got = k_shortest_paths(&case.graph, src as u32, goal as u32, minimal.max(5));
    if got.iter().filter(|p| p.len() == shortest).count() != minimal {
        return Err(format!("missing a shortest path {src} -> {goal}"));
    }
    Ok(())
}
