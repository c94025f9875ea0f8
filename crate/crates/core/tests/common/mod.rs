#![allow(dead_code)]

pub mod planner;
pub mod protocol;

use std::sync::{Arc, OnceLock};

use hme_core::grid::{Grid, GridBounds};
use hme_core::oracle::{enumerate_reachable, OracleGraph};
use hme_core::Space;

/// Enumerated oracle for 3 or 4 objects, built once per test binary.
pub fn oracle(objects: usize) -> Arc<OracleGraph> {
    static CACHE: OnceLock<[Arc<OracleGraph>; 2]> = OnceLock::new();
    let graphs = CACHE.get_or_init(|| {
        [3, 4].map(|k| {
            let space = Space::shared(k).unwrap();
            Arc::new(
                enumerate_reachable(&Grid::new(space, GridBounds::default()))
                    .unwrap()
                    .graph,
            )
        })
    });
    graphs[objects - 3].clone()
}
