//! Reachable configuration space and the oracle graph.
//!
//! The breadth-first search runs over grid states modulo
//! * block relabeling (a state is stored as the sorted set of placements),
//! * the dihedral symmetries of the plan and translation,
//! * gap compression: along each plan axis, gaps of three or more cells
//!   between occupied coordinates are clamped to three. Pairs separated by
//!   such a gap are far either way, so the projection is unchanged.
//!
//! Edges are collected as relabeling-canonical transitions and expanded to
//! every labeled image when the graph is materialized.

use std::collections::VecDeque;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{positions_close, rests_on, Axis, Grid, GridBounds, GridPos, CLOSE_MAX_LEVEL_GAP, CLOSE_SQ_DISTANCE};
use crate::semantic::{Predicate, SemanticConfig, Space, MAX_OBJECTS};

pub const ORACLE_FORMAT_VERSION: u32 = 1;

/// Largest gap kept by compression.
const GAP_CLAMP: i32 = 3;
/// Extra cells around the occupied box probed for destinations.
const MARGIN: i32 = GAP_CLAMP;
/// Side of the scratch occupancy frame; compressed plans span at most
/// `1 + 3 * 4 = 13` cells.
const FRAME: usize = 20;
const MAX_LEVELS: usize = 8;

/// Parameters that determine an oracle graph bit-exactly.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildManifest {
    pub format_version: u32,
    pub objects: usize,
    pub bounds: GridBounds,
    pub close_sq_distance: i32,
    pub close_max_level_gap: i32,
    pub bridges: bool,
    pub gap_clamp: i32,
    pub plan_symmetries: u32,
    pub grid_states_explored: u64,
    pub canonical_configs: u64,
    pub canonical_transitions: u64,
    pub nodes: u64,
    pub edges: u64,
}

/// Compact placement used by the search. `kind`: 0 cell, 1 bridge along x,
/// 2 bridge along y.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Place {
    kind: u8,
    x: i8,
    y: i8,
    level: u8,
}

impl Place {
    fn to_pos(self) -> GridPos {
        let (x, y, level) = (self.x as i32, self.y as i32, self.level as i32);
        match self.kind {
            0 => GridPos::cell(x, y, level),
            1 => GridPos::bridge(x, y, level, Axis::X),
            _ => GridPos::bridge(x, y, level, Axis::Y),
        }
    }

    fn from_pos(p: GridPos) -> Self {
        match p {
            GridPos::Cell { x, y, level } => Place {
                kind: 0,
                x: x as i8,
                y: y as i8,
                level: level as u8,
            },
            GridPos::Bridge { x, y, level, axis } => Place {
                kind: if axis == Axis::X { 1 } else { 2 },
                x: x as i8,
                y: y as i8,
                level: level as u8,
            },
        }
    }

    fn x_end(self) -> i8 {
        self.x + (self.kind == 1) as i8
    }

    fn y_end(self) -> i8 {
        self.y + (self.kind == 2) as i8
    }

    /// 12-bit code; requires `0 <= x, y < 13` and `level < 5`.
    fn code(self) -> u64 {
        let kl = match self.kind {
            0 => self.level as u64,
            k => 5 + (self.level as u64 - 1) * 2 + (k as u64 - 1),
        };
        (kl * 13 + self.x as u64) * 13 + self.y as u64
    }

    fn decode(code: u64) -> Self {
        let y = (code % 13) as i8;
        let x = (code / 13 % 13) as i8;
        let kl = code / 169;
        let (kind, level) = if kl < 5 {
            (0, kl as u8)
        } else {
            let r = kl - 5;
            ((r % 2 + 1) as u8, (r / 2 + 1) as u8)
        };
        Place { kind, x, y, level }
    }
}

fn compress_axis(values: &mut [i8], len: usize) -> ([i8; 2 * MAX_OBJECTS], [i8; 2 * MAX_OBJECTS], usize) {
    let vals = &mut values[..len];
    vals.sort_unstable();
    let mut src = [0i8; 2 * MAX_OBJECTS];
    let mut dst = [0i8; 2 * MAX_OBJECTS];
    let mut k = 0;
    for &v in vals.iter() {
        if k > 0 && src[k - 1] == v {
            continue;
        }
        dst[k] = if k == 0 {
            0
        } else {
            dst[k - 1] + (v - src[k - 1]).min(GAP_CLAMP as i8)
        };
        src[k] = v;
        k += 1;
    }
    (src, dst, k)
}

fn remap(v: i8, src: &[i8], dst: &[i8]) -> i8 {
    let k = src.iter().position(|&s| s == v).expect("coordinate collected");
    dst[k]
}

/// Gap-compress placements in place; returns the plan extents (max x, max y).
fn compress(places: &mut [Place]) -> (i8, i8) {
    let mut xs = [0i8; 2 * MAX_OBJECTS];
    let mut ys = [0i8; 2 * MAX_OBJECTS];
    let (mut nx, mut ny) = (0, 0);
    for p in places.iter() {
        xs[nx] = p.x;
        nx += 1;
        if p.kind == 1 {
            xs[nx] = p.x + 1;
            nx += 1;
        }
        ys[ny] = p.y;
        ny += 1;
        if p.kind == 2 {
            ys[ny] = p.y + 1;
            ny += 1;
        }
    }
    let (sx, dx, kx) = compress_axis(&mut xs, nx);
    let (sy, dy, ky) = compress_axis(&mut ys, ny);
    for p in places.iter_mut() {
        p.x = remap(p.x, &sx[..kx], &dx[..kx]);
        p.y = remap(p.y, &sy[..ky], &dy[..ky]);
    }
    (dx[kx - 1], dy[ky - 1])
}

/// Image of a placement under one of the 8 plan symmetries of a box with
/// extents `(ex, ey)`.
fn transform(p: Place, sym: u8, ex: i8, ey: i8) -> Place {
    let (mut x0, mut y0, mut x1, mut y1) = (p.x, p.y, p.x_end(), p.y_end());
    if sym & 1 != 0 {
        (x0, x1) = (ex - x1, ex - x0);
    }
    if sym & 2 != 0 {
        (y0, y1) = (ey - y1, ey - y0);
    }
    let mut kind = p.kind;
    if sym & 4 != 0 {
        (x0, y0) = (y0, x0);
        (x1, y1) = (y1, x1);
        kind = match kind {
            1 => 2,
            2 => 1,
            k => k,
        };
    }
    let _ = (x1, y1);
    Place {
        kind,
        x: x0,
        y: y0,
        level: p.level,
    }
}

/// Canonical key of an unlabeled state; `None` if it does not fit the bounds.
fn canonical_key(places: &[Place], bounds: &GridBounds, symmetries: u8) -> Option<u64> {
    let mut work = [Place {
        kind: 0,
        x: 0,
        y: 0,
        level: 0,
    }; MAX_OBJECTS];
    let n = places.len();
    work[..n].copy_from_slice(places);
    let (ex, ey) = compress(&mut work[..n]);
    let fits = (ex as i32) < bounds.width && (ey as i32) < bounds.depth;
    let fits_swapped = (ey as i32) < bounds.width && (ex as i32) < bounds.depth;
    if !fits && !(symmetries == 8 && fits_swapped) {
        return None;
    }
    let mut best = u64::MAX;
    let mut codes = [0u64; MAX_OBJECTS];
    for sym in 0..symmetries {
        for (slot, p) in codes.iter_mut().zip(&work[..n]) {
            *slot = transform(*p, sym, ex, ey).code();
        }
        codes[..n].sort_unstable();
        let key = codes[..n].iter().fold(0u64, |acc, &c| acc << 12 | c);
        best = best.min(key);
    }
    Some(best)
}

fn decode_key(mut key: u64, n: usize) -> [Place; MAX_OBJECTS] {
    let mut out = [Place {
        kind: 0,
        x: 0,
        y: 0,
        level: 0,
    }; MAX_OBJECTS];
    for i in (0..n).rev() {
        out[i] = Place::decode(key & 0xfff);
        key >>= 12;
    }
    out
}

/// Labeled projection of compact placements.
fn project_places(space: &Space, places: &[Place]) -> SemanticConfig {
    let pos: Vec<GridPos> = places.iter().map(|p| p.to_pos()).collect();
    let mut c = SemanticConfig::EMPTY;
    for i in 0..pos.len() {
        for j in i + 1..pos.len() {
            c = relate(space, c, i, j, &pos[i], &pos[j]);
        }
    }
    c
}

fn relate(space: &Space, mut c: SemanticConfig, i: usize, j: usize, a: &GridPos, b: &GridPos) -> SemanticConfig {
    let (ii, jj) = (i as u8, j as u8);
    if positions_close(a, b) {
        c = space.set(c, Predicate::Close, ii, jj, true);
    }
    if rests_on(a, b) {
        c = space.set(c, Predicate::Above, ii, jj, true);
    }
    if rests_on(b, a) {
        c = space.set(c, Predicate::Above, jj, ii, true);
    }
    c
}

/// Scratch occupancy over a local frame offset by [`MARGIN`].
struct Frame {
    occ: Box<[[[u8; FRAME]; FRAME]; MAX_LEVELS]>,
}

impl Frame {
    fn new() -> Self {
        Frame {
            occ: Box::new([[[0; FRAME]; FRAME]; MAX_LEVELS]),
        }
    }

    fn cells(p: &Place) -> impl Iterator<Item = (usize, usize)> {
        let x0 = (p.x as i32 + MARGIN) as usize;
        let y0 = (p.y as i32 + MARGIN) as usize;
        let second = match p.kind {
            0 => None,
            1 => Some((x0 + 1, y0)),
            _ => Some((x0, y0 + 1)),
        };
        std::iter::once((x0, y0)).chain(second)
    }

    fn put(&mut self, p: &Place, id: u8) {
        for (x, y) in Self::cells(p) {
            self.occ[p.level as usize][x][y] = id;
        }
    }

    fn covered(&self, p: &Place) -> bool {
        let l = p.level as usize + 1;
        l < MAX_LEVELS && Self::cells(p).any(|(x, y)| self.occ[l][x][y] != 0)
    }

    fn top(&self, x: usize, y: usize, levels: usize) -> Option<(usize, u8)> {
        (0..levels).rev().find_map(|l| {
            let id = self.occ[l][x][y];
            (id != 0).then_some((l, id))
        })
    }
}

/// Adjacency over every reachable configuration.
#[derive(Clone, Debug)]
pub struct OracleGraph {
    objects: usize,
    nodes: Vec<SemanticConfig>,
    index: FxHashMap<SemanticConfig, u32>,
    adjacency: Vec<Vec<u32>>,
    manifest: BuildManifest,
}

#[derive(Serialize, Deserialize)]
struct OracleDocument {
    version: u32,
    manifest: BuildManifest,
    nodes: Vec<String>,
    adjacency: Vec<Vec<u32>>,
}

impl OracleGraph {
    /// Explicit graph, e.g. a hand-built oracle for protocol tests. Nodes are
    /// sorted and deduplicated; edges between unknown nodes are rejected.
    pub fn from_edges(
        objects: usize,
        nodes: impl IntoIterator<Item = SemanticConfig>,
        edges: impl IntoIterator<Item = (SemanticConfig, SemanticConfig)>,
    ) -> Result<Self> {
        let mut nodes: Vec<SemanticConfig> = nodes.into_iter().collect();
        nodes.sort();
        nodes.dedup();
        let index: FxHashMap<SemanticConfig, u32> = nodes.iter().enumerate().map(|(i, &c)| (c, i as u32)).collect();
        let mut adjacency = vec![Vec::new(); nodes.len()];
        let mut edge_count = 0u64;
        for (a, b) in edges {
            let (Some(&ia), Some(&ib)) = (index.get(&a), index.get(&b)) else {
                return Err(Error::Config(format!("edge endpoint not among nodes: {a:?} -> {b:?}")));
            };
            if ia != ib {
                adjacency[ia as usize].push(ib);
            }
        }
        for adj in adjacency.iter_mut() {
            adj.sort_unstable();
            adj.dedup();
            edge_count += adj.len() as u64;
        }
        let manifest = BuildManifest {
            format_version: ORACLE_FORMAT_VERSION,
            objects,
            bounds: GridBounds::default(),
            close_sq_distance: CLOSE_SQ_DISTANCE,
            close_max_level_gap: CLOSE_MAX_LEVEL_GAP,
            bridges: true,
            gap_clamp: GAP_CLAMP,
            plan_symmetries: 0,
            grid_states_explored: 0,
            canonical_configs: 0,
            canonical_transitions: 0,
            nodes: nodes.len() as u64,
            edges: edge_count,
        };
        Ok(OracleGraph {
            objects,
            nodes,
            index,
            adjacency,
            manifest,
        })
    }

    pub fn objects(&self) -> usize {
        self.objects
    }

    pub fn manifest(&self) -> &BuildManifest {
        &self.manifest
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum()
    }

    /// Nodes in lexicographic order.
    pub fn nodes(&self) -> &[SemanticConfig] {
        &self.nodes
    }

    pub fn node(&self, index: u32) -> SemanticConfig {
        self.nodes[index as usize]
    }

    pub fn index_of(&self, c: SemanticConfig) -> Option<u32> {
        self.index.get(&c).copied()
    }

    pub fn is_reachable(&self, c: SemanticConfig) -> bool {
        self.index.contains_key(&c)
    }

    pub fn neighbor_indices(&self, index: u32) -> &[u32] {
        &self.adjacency[index as usize]
    }

    /// Out-neighbors of `c` in lexicographic order; empty for unknown `c`.
    pub fn neighbors(&self, c: SemanticConfig) -> impl Iterator<Item = SemanticConfig> + '_ {
        let adj: &[u32] = match self.index_of(c) {
            Some(i) => &self.adjacency[i as usize],
            None => &[],
        };
        adj.iter().map(|&j| self.nodes[j as usize])
    }

    pub fn has_edge(&self, from: SemanticConfig, to: SemanticConfig) -> bool {
        match (self.index_of(from), self.index_of(to)) {
            (Some(a), Some(b)) => self.adjacency[a as usize].binary_search(&b).is_ok(),
            _ => false,
        }
    }

    pub fn edges(&self) -> impl Iterator<Item = (SemanticConfig, SemanticConfig)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(move |(i, adj)| adj.iter().map(move |&j| (self.nodes[i], self.nodes[j as usize])))
    }

    /// Number of nodes reachable from `start` along directed edges.
    pub fn reachable_from(&self, start: SemanticConfig) -> usize {
        let Some(s) = self.index_of(start) else {
            return 0;
        };
        let mut seen = vec![false; self.nodes.len()];
        let mut queue = VecDeque::from([s]);
        seen[s as usize] = true;
        let mut count = 0;
        while let Some(u) = queue.pop_front() {
            count += 1;
            for &v in &self.adjacency[u as usize] {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    queue.push_back(v);
                }
            }
        }
        count
    }

    pub fn write_json<W: Write>(&self, space: &Space, writer: W) -> Result<()> {
        let doc = OracleDocument {
            version: ORACLE_FORMAT_VERSION,
            manifest: self.manifest.clone(),
            nodes: self.nodes.iter().map(|&c| space.format(c)).collect(),
            adjacency: self.adjacency.clone(),
        };
        let mut w = BufWriter::new(writer);
        serde_json::to_writer(&mut w, &doc)?;
        w.flush().map_err(|e| Error::io("<oracle writer>", e))?;
        Ok(())
    }

    pub fn read_json<R: Read>(space: &Space, reader: R) -> Result<Self> {
        let doc: OracleDocument = serde_json::from_reader(BufReader::new(reader))?;
        if doc.version != ORACLE_FORMAT_VERSION {
            return Err(Error::Version {
                found: doc.version,
                expected: ORACLE_FORMAT_VERSION,
            });
        }
        if doc.nodes.len() != doc.adjacency.len() {
            return Err(Error::Config("node and adjacency lists differ in length".into()));
        }
        let nodes = doc.nodes.iter().map(|s| space.parse(s)).collect::<Result<Vec<_>>>()?;
        let index = nodes.iter().enumerate().map(|(i, &c)| (c, i as u32)).collect();
        Ok(OracleGraph {
            objects: doc.manifest.objects,
            nodes,
            index,
            adjacency: doc.adjacency,
            manifest: doc.manifest,
        })
    }

    pub fn save(&self, space: &Space, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_json(space, file)
    }

    pub fn load(space: &Space, path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_json(space, file)
    }
}

/// Result of the reachability search.
pub struct Enumeration {
    pub configs: Vec<SemanticConfig>,
    pub graph: OracleGraph,
}

/// Breadth-first closure of the grid model from the all-far root.
pub fn enumerate_reachable(grid: &Grid<'_>) -> Result<Enumeration> {
    let space = grid.space();
    let bounds = grid.bounds();
    let n = space.objects();
    let levels = bounds.levels as usize;
    if levels > MAX_LEVELS {
        return Err(Error::Config(format!("at most {MAX_LEVELS} levels supported")));
    }
    let root = grid.root_state()?;
    let symmetries: u8 = if bounds.width == bounds.depth { 8 } else { 4 };
    let root_places: Vec<Place> = root.placements.iter().map(|&p| Place::from_pos(p)).collect();
    let root_key = canonical_key(&root_places, &bounds, symmetries)
        .ok_or_else(|| Error::Config("root state does not fit the grid".into()))?;

    let mut seen: FxHashSet<u64> = FxHashSet::default();
    let mut queue: VecDeque<u64> = VecDeque::new();
    seen.insert(root_key);
    queue.push_back(root_key);

    let mut canon_configs: FxHashSet<u32> = FxHashSet::default();
    let mut canon_transitions: FxHashSet<u64> = FxHashSet::default();
    let mut canon_cache: FxHashMap<u32, (SemanticConfig, Vec<u16>)> = FxHashMap::default();
    let mut frame = Frame::new();
    let mut targets: FxHashSet<u32> = FxHashSet::default();
    let mut explored = 0u64;

    while let Some(key) = queue.pop_front() {
        explored += 1;
        let places = decode_key(key, n);
        let places = &places[..n];
        let here = project_places(space, places);
        let (canon, perms) = canon_cache
            .entry(here.bits())
            .or_insert_with(|| space.canonicalizers(here))
            .clone();
        canon_configs.insert(canon.bits());
        targets.clear();

        for (id, p) in places.iter().enumerate() {
            frame.put(p, id as u8 + 1);
        }
        let pos: Vec<GridPos> = places.iter().map(|p| p.to_pos()).collect();

        for mover in 0..n {
            let current = places[mover];
            if frame.covered(&current) {
                continue;
            }
            frame.put(&current, 0);
            // configuration with the mover's relations cleared
            let mut base = here;
            for other in 0..n {
                if other != mover {
                    for kind in [Predicate::Close, Predicate::Above] {
                        base = space.set(base, kind, mover as u8, other as u8, false);
                        if kind == Predicate::Above {
                            base = space.set(base, kind, other as u8, mover as u8, false);
                        }
                    }
                }
            }

            let mut visit = |dest: Place, queue: &mut VecDeque<u64>| {
                if dest == current {
                    return;
                }
                let dpos = dest.to_pos();
                let mut next_c = base;
                for other in 0..n {
                    if other != mover {
                        next_c = relate(space, next_c, mover, other, &dpos, &pos[other]);
                    }
                }
                if next_c != here && targets.insert(next_c.bits()) {
                    let to = perms
                        .iter()
                        .map(|&k| space.apply_indexed(next_c, k as usize))
                        .min()
                        .expect("non-empty");
                    canon_transitions.insert((canon.bits() as u64) << 32 | to.bits() as u64);
                }
                let mut next = [current; MAX_OBJECTS];
                next[..n].copy_from_slice(places);
                next[mover] = dest;
                if let Some(k) = canonical_key(&next[..n], &bounds, symmetries) {
                    if seen.insert(k) {
                        queue.push_back(k);
                    }
                }
            };

            // destinations beyond the others' box plus one clamped gap
            // compress onto the box edge
            let others = places.iter().enumerate().filter(|&(i, _)| i != mover).map(|(_, p)| p);
            let (mut x0, mut y0, mut x1, mut y1) = (i8::MAX, i8::MAX, i8::MIN, i8::MIN);
            for p in others {
                x0 = x0.min(p.x);
                y0 = y0.min(p.y);
                x1 = x1.max(p.x_end());
                y1 = y1.max(p.y_end());
            }
            let fx_range = (x0 as i32).max(0) as usize..=(x1 as i32 + 2 * MARGIN) as usize;
            let fy_range = (y0 as i32).max(0) as usize..=(y1 as i32 + 2 * MARGIN) as usize;
            for fx in fx_range {
                for fy in fy_range.clone() {
                    let (x, y) = (fx as i32 - MARGIN, fy as i32 - MARGIN);
                    match frame.top(fx, fy, levels) {
                        None => visit(
                            Place {
                                kind: 0,
                                x: x as i8,
                                y: y as i8,
                                level: 0,
                            },
                            &mut queue,
                        ),
                        Some((l, id)) => {
                            if l + 1 < levels {
                                visit(
                                    Place {
                                        kind: 0,
                                        x: x as i8,
                                        y: y as i8,
                                        level: l as u8 + 1,
                                    },
                                    &mut queue,
                                );
                                for (kind, nx, ny) in [(1u8, fx + 1, fy), (2u8, fx, fy + 1)] {
                                    if nx >= FRAME || ny >= FRAME {
                                        continue;
                                    }
                                    if let Some((l2, id2)) = frame.top(nx, ny, levels) {
                                        if l2 == l && id2 != id {
                                            visit(
                                                Place {
                                                    kind,
                                                    x: x as i8,
                                                    y: y as i8,
                                                    level: l as u8 + 1,
                                                },
                                                &mut queue,
                                            );
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
            frame.put(&current, mover as u8 + 1);
        }
        for p in places {
            frame.put(p, 0);
        }
    }

    let graph = materialize(space, bounds, symmetries, explored, &canon_configs, &canon_transitions);
    Ok(Enumeration {
        configs: graph.nodes.clone(),
        graph,
    })
}

fn materialize(
    space: &Space,
    bounds: GridBounds,
    symmetries: u8,
    explored: u64,
    canon_configs: &FxHashSet<u32>,
    canon_transitions: &FxHashSet<u64>,
) -> OracleGraph {
    let perms = space.permutation_count();
    let mut node_set: FxHashSet<u32> = FxHashSet::default();
    for &c in canon_configs {
        for k in 0..perms {
            node_set.insert(space.apply_indexed(SemanticConfig::from_bits(c), k).bits());
        }
    }
    let mut nodes: Vec<SemanticConfig> = node_set.into_iter().map(SemanticConfig::from_bits).collect();
    nodes.sort();
    let index: FxHashMap<SemanticConfig, u32> = nodes.iter().enumerate().map(|(i, &c)| (c, i as u32)).collect();
    let mut adjacency: Vec<Vec<u32>> = vec![Vec::new(); nodes.len()];
    let mut sorted_transitions: Vec<u64> = canon_transitions.iter().copied().collect();
    sorted_transitions.sort_unstable();
    for t in sorted_transitions {
        let from = SemanticConfig::from_bits((t >> 32) as u32);
        let to = SemanticConfig::from_bits(t as u32);
        for k in 0..perms {
            let a = index[&space.apply_indexed(from, k)];
            let b = index[&space.apply_indexed(to, k)];
            adjacency[a as usize].push(b);
        }
    }
    let mut edges = 0u64;
    for adj in adjacency.iter_mut() {
        adj.sort_unstable();
        adj.dedup();
        adj.shrink_to_fit();
        edges += adj.len() as u64;
    }
    let manifest = BuildManifest {
        format_version: ORACLE_FORMAT_VERSION,
        objects: space.objects(),
        bounds,
        close_sq_distance: CLOSE_SQ_DISTANCE,
        close_max_level_gap: CLOSE_MAX_LEVEL_GAP,
        bridges: true,
        gap_clamp: GAP_CLAMP,
        plan_symmetries: symmetries as u32,
        grid_states_explored: explored,
        canonical_configs: canon_configs.len() as u64,
        canonical_transitions: canon_transitions.len() as u64,
        nodes: nodes.len() as u64,
        edges,
    };
    OracleGraph {
        objects: space.objects(),
        nodes,
        index,
        adjacency,
        manifest,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn place_codes_roundtrip() {
        for kind in 0..3u8 {
            for level in 0..5u8 {
                if kind != 0 && level == 0 {
                    continue;
                }
                for x in 0..13 {
                    for y in 0..13 {
                        let p = Place { kind, x, y, level };
                        assert_eq!(Place::decode(p.code()), p);
                        assert!(p.code() < 4096);
                    }
                }
            }
        }
    }

    #[test]
    fn compression_preserves_projection() {
        let space = Space::five();
        let places = [
            Place {
                kind: 0,
                x: 0,
                y: 0,
                level: 0,
            },
            Place {
                kind: 0,
                x: 9,
                y: 0,
                level: 0,
            },
            Place {
                kind: 0,
                x: 10,
                y: 1,
                level: 0,
            },
            Place {
                kind: 1,
                x: 9,
                y: 0,
                level: 1,
            },
            Place {
                kind: 0,
                x: 4,
                y: 7,
                level: 0,
            },
        ];
        let mut squeezed = places;
        compress(&mut squeezed);
        assert_eq!(project_places(space, &places), project_places(space, &squeezed));
        assert!(squeezed.iter().all(|p| p.x <= 12 && p.y <= 12));
    }

    #[test]
    fn canonical_key_ignores_labels_and_symmetry() {
        let bounds = GridBounds::default();
        let a = [
            Place {
                kind: 0,
                x: 0,
                y: 0,
                level: 0,
            },
            Place {
                kind: 0,
                x: 1,
                y: 0,
                level: 0,
            },
            Place {
                kind: 1,
                x: 0,
                y: 0,
                level: 1,
            },
        ];
        let b = [
            Place {
                kind: 2,
                x: 5,
                y: 5,
                level: 1,
            },
            Place {
                kind: 0,
                x: 5,
                y: 6,
                level: 0,
            },
            Place {
                kind: 0,
                x: 5,
                y: 5,
                level: 0,
            },
        ];
        assert_eq!(canonical_key(&a, &bounds, 8), canonical_key(&b, &bounds, 8));
    }

    #[test]
    fn two_blocks_reach_four_configs() {
        let space = Space::new(2).unwrap();
        let grid = Grid::new(&space, GridBounds::default());
        let e = enumerate_reachable(&grid).unwrap();
        assert_eq!(e.configs.len(), 4);
        let close = space.set(SemanticConfig::EMPTY, Predicate::Close, 0, 1, true);
        let on01 = space.set(close, Predicate::Above, 0, 1, true);
        let on10 = space.set(close, Predicate::Above, 1, 0, true);
        for c in [SemanticConfig::EMPTY, close, on01, on10] {
            assert!(e.graph.is_reachable(c));
        }
        // stacking straight from far apart is one move
        assert!(e.graph.has_edge(SemanticConfig::EMPTY, on01));
        assert!(e.graph.has_edge(on10, close));
        assert!(!e.graph.has_edge(on01, on10));
    }

    #[test]
    fn root_must_fit() {
        let grid = Grid::new(
            Space::five(),
            GridBounds {
                width: 12,
                depth: 12,
                levels: 5,
            },
        );
        assert!(matches!(enumerate_reachable(&grid), Err(Error::Config(_))));
    }
}
