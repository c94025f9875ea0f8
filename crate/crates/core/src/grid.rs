//! Discrete physical model behind the oracle graph: blocks on a bounded 3D
//! grid, one block per cell, plus *bridges* (a block resting on two
//! horizontally adjacent supports) so that pyramids are expressible.

use serde::{Deserialize, Serialize};

use crate::error::{Error, MoveRejection, Result};
use crate::semantic::{Predicate, SemanticConfig, Space};

/// Squared horizontal distance (in grid units) under which two blocks are
/// `close`, provided their levels differ by at most [`CLOSE_MAX_LEVEL_GAP`].
pub const CLOSE_SQ_DISTANCE: i32 = 4;
pub const CLOSE_MAX_LEVEL_GAP: i32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridBounds {
    pub width: i32,
    pub depth: i32,
    pub levels: i32,
}

impl Default for GridBounds {
    fn default() -> Self {
        GridBounds {
            width: 13,
            depth: 13,
            levels: 5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

/// Placement of one block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GridPos {
    Cell {
        x: i32,
        y: i32,
        level: i32,
    },
    /// Spans `(x, y)` and the next cell along `axis`, resting on both.
    Bridge {
        x: i32,
        y: i32,
        level: i32,
        axis: Axis,
    },
}

impl GridPos {
    pub fn cell(x: i32, y: i32, level: i32) -> Self {
        GridPos::Cell { x, y, level }
    }

    pub fn bridge(x: i32, y: i32, level: i32, axis: Axis) -> Self {
        GridPos::Bridge { x, y, level, axis }
    }

    pub fn level(&self) -> i32 {
        match *self {
            GridPos::Cell { level, .. } | GridPos::Bridge { level, .. } => level,
        }
    }

    /// Plan cells covered by the block.
    pub fn footprint(&self) -> ([(i32, i32); 2], usize) {
        match *self {
            GridPos::Cell { x, y, .. } => ([(x, y), (x, y)], 1),
            GridPos::Bridge {
                x, y, axis: Axis::X, ..
            } => ([(x, y), (x + 1, y)], 2),
            GridPos::Bridge {
                x, y, axis: Axis::Y, ..
            } => ([(x, y), (x, y + 1)], 2),
        }
    }

    fn cells(&self) -> impl Iterator<Item = (i32, i32)> {
        let (cells, n) = self.footprint();
        cells.into_iter().take(n)
    }

    /// Horizontal center in half-units.
    pub fn doubled_center(&self) -> (i32, i32) {
        match *self {
            GridPos::Cell { x, y, .. } => (2 * x, 2 * y),
            GridPos::Bridge {
                x, y, axis: Axis::X, ..
            } => (2 * x + 1, 2 * y),
            GridPos::Bridge {
                x, y, axis: Axis::Y, ..
            } => (2 * x, 2 * y + 1),
        }
    }

    pub fn translated(&self, dx: i32, dy: i32) -> Self {
        match *self {
            GridPos::Cell { x, y, level } => GridPos::Cell {
                x: x + dx,
                y: y + dy,
                level,
            },
            GridPos::Bridge { x, y, level, axis } => GridPos::Bridge {
                x: x + dx,
                y: y + dy,
                level,
                axis,
            },
        }
    }

    fn overlaps_plan(&self, other: &GridPos) -> bool {
        self.cells().any(|c| other.cells().any(|d| c == d))
    }
}

/// `a` and `b` satisfy `close`.
pub fn positions_close(a: &GridPos, b: &GridPos) -> bool {
    let (ax, ay) = a.doubled_center();
    let (bx, by) = b.doubled_center();
    let (dx, dy) = (ax - bx, ay - by);
    dx * dx + dy * dy <= 4 * CLOSE_SQ_DISTANCE && (a.level() - b.level()).abs() <= CLOSE_MAX_LEVEL_GAP
}

/// `a` rests directly on `b`.
pub fn rests_on(a: &GridPos, b: &GridPos) -> bool {
    a.level() == b.level() + 1 && a.overlaps_plan(b)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridState {
    pub placements: Vec<GridPos>,
}

impl GridState {
    pub fn new(placements: Vec<GridPos>) -> Self {
        GridState { placements }
    }

    pub fn translated(&self, dx: i32, dy: i32) -> Self {
        GridState {
            placements: self.placements.iter().map(|p| p.translated(dx, dy)).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MoveAction {
    pub block: u8,
    pub dest: GridPos,
}

/// Physical rules for one block count and one set of bounds.
#[derive(Debug)]
pub struct Grid<'s> {
    space: &'s Space,
    bounds: GridBounds,
}

impl<'s> Grid<'s> {
    pub fn new(space: &'s Space, bounds: GridBounds) -> Self {
        Grid { space, bounds }
    }

    pub fn space(&self) -> &'s Space {
        self.space
    }

    pub fn bounds(&self) -> GridBounds {
        self.bounds
    }

    /// Blocks in distinct columns, three cells apart along `y = 0`.
    pub fn root_state(&self) -> Result<GridState> {
        let n = self.space.objects() as i32;
        let needed = 3 * (n - 1) + 1;
        if self.bounds.width < needed || self.bounds.depth < 1 || self.bounds.levels < 1 {
            return Err(Error::Config(format!(
                "grid {}x{}x{} cannot host {} separated blocks (need width >= {})",
                self.bounds.width, self.bounds.depth, self.bounds.levels, n, needed
            )));
        }
        Ok(GridState::new((0..n).map(|i| GridPos::cell(3 * i, 0, 0)).collect()))
    }

    fn in_bounds(&self, p: &GridPos) -> bool {
        let b = self.bounds;
        p.level() >= 0 && p.level() < b.levels && p.cells().all(|(x, y)| x >= 0 && y >= 0 && x < b.width && y < b.depth)
    }

    /// Block occupying plan cell `(x, y)` at `level`, ignoring `skip`.
    fn occupant(&self, s: &GridState, x: i32, y: i32, level: i32, skip: Option<usize>) -> Option<usize> {
        s.placements
            .iter()
            .enumerate()
            .find_map(|(i, p)| (Some(i) != skip && p.level() == level && p.cells().any(|c| c == (x, y))).then_some(i))
    }

    fn check_destination(
        &self,
        s: &GridState,
        p: &GridPos,
        skip: Option<usize>,
    ) -> std::result::Result<(), MoveRejection> {
        if !self.in_bounds(p) {
            return Err(MoveRejection::OutOfBounds);
        }
        if p.cells()
            .any(|(x, y)| self.occupant(s, x, y, p.level(), skip).is_some())
        {
            return Err(MoveRejection::Occupied);
        }
        let level = p.level();
        match *p {
            GridPos::Cell { x, y, .. } => {
                if level > 0 && self.occupant(s, x, y, level - 1, skip).is_none() {
                    return Err(MoveRejection::Unsupported);
                }
            }
            GridPos::Bridge { .. } => {
                if level == 0 {
                    return Err(MoveRejection::Unsupported);
                }
                let mut cells = p.cells();
                let (a, b) = (cells.next().unwrap(), cells.next().unwrap());
                let sa = self.occupant(s, a.0, a.1, level - 1, skip);
                let sb = self.occupant(s, b.0, b.1, level - 1, skip);
                match (sa, sb) {
                    (Some(i), Some(j)) if i != j => {}
                    _ => return Err(MoveRejection::Unsupported),
                }
            }
        }
        Ok(())
    }

    fn is_covered(&self, s: &GridState, block: usize) -> bool {
        let p = &s.placements[block];
        s.placements
            .iter()
            .enumerate()
            .any(|(i, q)| i != block && rests_on(q, p))
    }

    pub fn validate(&self, s: &GridState) -> Result<()> {
        if s.placements.len() != self.space.objects() {
            return Err(Error::InvalidState(format!(
                "expected {} blocks, found {}",
                self.space.objects(),
                s.placements.len()
            )));
        }
        for (i, p) in s.placements.iter().enumerate() {
            self.check_destination(s, p, Some(i))
                .map_err(|why| Error::InvalidState(format!("block {i} at {p:?}: {why}")))?;
        }
        Ok(())
    }

    /// Semantic configuration of a valid state.
    pub fn project(&self, s: &GridState) -> Result<SemanticConfig> {
        self.validate(s)?;
        Ok(self.project_unchecked(&s.placements))
    }

    pub(crate) fn project_unchecked(&self, placements: &[GridPos]) -> SemanticConfig {
        let mut c = SemanticConfig::EMPTY;
        for i in 0..placements.len() {
            for j in i + 1..placements.len() {
                let (a, b) = (&placements[i], &placements[j]);
                let (ii, jj) = (i as u8, j as u8);
                if positions_close(a, b) {
                    c = self.space.set(c, Predicate::Close, ii, jj, true);
                }
                if rests_on(a, b) {
                    c = self.space.set(c, Predicate::Above, ii, jj, true);
                }
                if rests_on(b, a) {
                    c = self.space.set(c, Predicate::Above, jj, ii, true);
                }
            }
        }
        c
    }

    /// Every legal single-block move, ordered by block then destination.
    pub fn legal_moves(&self, s: &GridState) -> Vec<MoveAction> {
        let mut moves = Vec::new();
        for block in 0..s.placements.len() {
            if self.is_covered(s, block) {
                continue;
            }
            let mut dests = Vec::new();
            for level in 0..self.bounds.levels {
                for x in 0..self.bounds.width {
                    for y in 0..self.bounds.depth {
                        dests.push(GridPos::cell(x, y, level));
                        if level > 0 {
                            dests.push(GridPos::bridge(x, y, level, Axis::X));
                            dests.push(GridPos::bridge(x, y, level, Axis::Y));
                        }
                    }
                }
            }
            let current = s.placements[block];
            dests.retain(|d| *d != current && self.check_destination(s, d, Some(block)).is_ok());
            dests.sort();
            moves.extend(dests.into_iter().map(|dest| MoveAction {
                block: block as u8,
                dest,
            }));
        }
        moves
    }

    pub fn apply_move(&self, s: &GridState, m: MoveAction) -> Result<GridState> {
        let block = m.block as usize;
        let reject = |reason| Error::IllegalMove { block: m.block, reason };
        if block >= s.placements.len() {
            return Err(reject(MoveRejection::UnknownBlock));
        }
        if self.is_covered(s, block) {
            return Err(reject(MoveRejection::Covered));
        }
        if s.placements[block] == m.dest {
            return Err(reject(MoveRejection::NoChange));
        }
        self.check_destination(s, &m.dest, Some(block)).map_err(reject)?;
        let mut next = s.clone();
        next.placements[block] = m.dest;
        Ok(next)
    }
}
