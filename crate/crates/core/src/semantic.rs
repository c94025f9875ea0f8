//! Semantic configuration space: `close` / `above` predicates over every
//! pair of objects, object relabelings, single-object transition detection
//! and the eleven evaluation classes.
//!
//! Dimension layout for `P = C(N, 2)` pairs ordered lexicographically
//! `(0,1), (0,2), ..., (N-2, N-1)`:
//!
//! | dims        | predicate                          |
//! |-------------|------------------------------------|
//! | `0..P`      | `close(i, j)` for pair `p = (i,j)` |
//! | `P..2P`     | `above(i, j)`: `i` rests on `j`    |
//! | `2P..3P`    | `above(j, i)`: `j` rests on `i`    |

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_OBJECTS: usize = 5;
pub const DEFAULT_OBJECTS: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ObjectId(pub u8);

/// Index of an unordered object pair in lexicographic order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairIndex(pub u8);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Predicate {
    Close,
    Above,
}

/// Bit vector over the `3·C(N,2)` predicate dimensions.
///
/// Ordering is lexicographic on the 0/1 string (dimension 0 first).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct SemanticConfig(u32);

impl SemanticConfig {
    pub const EMPTY: SemanticConfig = SemanticConfig(0);

    pub const fn from_bits(bits: u32) -> Self {
        SemanticConfig(bits)
    }

    pub const fn bits(self) -> u32 {
        self.0
    }

    pub fn get(self, dim: usize) -> bool {
        self.0 >> dim & 1 == 1
    }

    pub fn with(self, dim: usize, value: bool) -> Self {
        if value {
            SemanticConfig(self.0 | 1 << dim)
        } else {
            SemanticConfig(self.0 & !(1 << dim))
        }
    }

    pub fn count_ones(self) -> u32 {
        self.0.count_ones()
    }

    /// Integer whose order matches the configuration order.
    pub(crate) fn lex_key(self) -> u32 {
        self.0.reverse_bits()
    }
}

impl Ord for SemanticConfig {
    fn cmp(&self, other: &Self) -> Ordering {
        self.lex_key().cmp(&other.lex_key())
    }
}

impl PartialOrd for SemanticConfig {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// An object relabeling: object `i` becomes object `map[i]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Permutation {
    map: [u8; MAX_OBJECTS],
    len: u8,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        let mut map = [0u8; MAX_OBJECTS];
        for (i, slot) in map.iter_mut().enumerate() {
            *slot = i as u8;
        }
        Permutation { map, len: n as u8 }
    }

    pub fn new(images: &[u8]) -> Result<Self> {
        if images.is_empty() || images.len() > MAX_OBJECTS {
            return Err(Error::InvalidPermutation(format!(
                "length {} out of range",
                images.len()
            )));
        }
        let mut seen = 0u8;
        let mut map = [0u8; MAX_OBJECTS];
        for (i, &img) in images.iter().enumerate() {
            if img as usize >= images.len() || seen >> img & 1 == 1 {
                return Err(Error::InvalidPermutation(format!("{images:?} is not a bijection")));
            }
            seen |= 1 << img;
            map[i] = img;
        }
        Ok(Permutation {
            map,
            len: images.len() as u8,
        })
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn image(&self, i: u8) -> u8 {
        self.map[i as usize]
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.map[..self.len()]
    }

    pub fn inverse(&self) -> Self {
        let mut map = [0u8; MAX_OBJECTS];
        for i in 0..self.len() {
            map[self.map[i] as usize] = i as u8;
        }
        Permutation { map, len: self.len }
    }

    /// `self ∘ inner`: apply `inner` first, then `self`.
    pub fn compose(&self, inner: &Permutation) -> Self {
        assert_eq!(self.len, inner.len, "composing permutations of different sizes");
        let mut map = [0u8; MAX_OBJECTS];
        for (i, slot) in map.iter_mut().enumerate().take(self.len()) {
            *slot = self.map[inner.map[i] as usize];
        }
        Permutation { map, len: self.len }
    }
}

/// Directed pair of configurations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Transition {
    pub from: SemanticConfig,
    pub to: SemanticConfig,
}

impl Transition {
    pub fn new(from: SemanticConfig, to: SemanticConfig) -> Self {
        Transition { from, to }
    }

    pub fn reversed(self) -> Self {
        Transition {
            from: self.to,
            to: self.from,
        }
    }
}

/// Bit set over object ids.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct ObjectSet(pub u8);

impl ObjectSet {
    pub fn contains(self, id: u8) -> bool {
        self.0 >> id & 1 == 1
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = u8> {
        (0..8u8).filter(move |&i| self.0 >> i & 1 == 1)
    }
}

/// Result of comparing the two ends of a transition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChangeSummary {
    pub changed_dims: Vec<usize>,
    pub common: ObjectSet,
    pub single_object: bool,
}

/// The eleven hand-defined evaluation classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EvalClass {
    C1,
    C2,
    C3,
    S2,
    S3,
    S2S2,
    S2S3,
    P3,
    P3S2,
    S4,
    S5,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Shape {
    Stack(u8),
    Pyramid,
}

impl Shape {
    fn blocks(self) -> usize {
        match self {
            Shape::Stack(k) => k as usize,
            Shape::Pyramid => 3,
        }
    }
}

impl EvalClass {
    pub const ALL: [EvalClass; 11] = [
        EvalClass::C1,
        EvalClass::C2,
        EvalClass::C3,
        EvalClass::S2,
        EvalClass::S3,
        EvalClass::S2S2,
        EvalClass::S2S3,
        EvalClass::P3,
        EvalClass::P3S2,
        EvalClass::S4,
        EvalClass::S5,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EvalClass::C1 => "C1",
            EvalClass::C2 => "C2",
            EvalClass::C3 => "C3",
            EvalClass::S2 => "S2",
            EvalClass::S3 => "S3",
            EvalClass::S2S2 => "S2&S2",
            EvalClass::S2S3 => "S2&S3",
            EvalClass::P3 => "P3",
            EvalClass::P3S2 => "P3&S2",
            EvalClass::S4 => "S4",
            EvalClass::S5 => "S5",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }

    /// Number of closed pairs for `C_i` classes, `None` for constructions.
    fn close_count(self) -> Option<usize> {
        match self {
            EvalClass::C1 => Some(1),
            EvalClass::C2 => Some(2),
            EvalClass::C3 => Some(3),
            _ => None,
        }
    }

    /// Constructions in canonical (sorted) order.
    fn shapes(self) -> &'static [Shape] {
        match self {
            EvalClass::S2 => &[Shape::Stack(2)],
            EvalClass::S3 => &[Shape::Stack(3)],
            EvalClass::S2S2 => &[Shape::Stack(2), Shape::Stack(2)],
            EvalClass::S2S3 => &[Shape::Stack(2), Shape::Stack(3)],
            EvalClass::P3 => &[Shape::Pyramid],
            EvalClass::P3S2 => &[Shape::Stack(2), Shape::Pyramid],
            EvalClass::S4 => &[Shape::Stack(4)],
            EvalClass::S5 => &[Shape::Stack(5)],
            _ => &[],
        }
    }
}

impl fmt::Display for EvalClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Byte-wise lookup tables mapping input bits to permuted output bits.
type PermTable = [[u32; 256]; 4];

/// Configuration space for `N` objects, with all `N!` relabelings
/// precomputed.
pub struct Space {
    n: usize,
    pairs: Vec<(u8, u8)>,
    pair_lookup: [[u8; MAX_OBJECTS]; MAX_OBJECTS],
    dim_objects: Vec<u8>,
    perms: Vec<Permutation>,
    tables: Vec<PermTable>,
}

impl fmt::Debug for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Space")
            .field("objects", &self.n)
            .field("dims", &self.dims())
            .finish()
    }
}

impl Space {
    pub fn new(n: usize) -> Result<Self> {
        if !(2..=MAX_OBJECTS).contains(&n) {
            return Err(Error::ObjectCount(n));
        }
        let mut pairs = Vec::new();
        let mut pair_lookup = [[u8::MAX; MAX_OBJECTS]; MAX_OBJECTS];
        for i in 0..n {
            for j in i + 1..n {
                pair_lookup[i][j] = pairs.len() as u8;
                pair_lookup[j][i] = pairs.len() as u8;
                pairs.push((i as u8, j as u8));
            }
        }
        let p = pairs.len();
        let mut dim_objects = vec![0u8; 3 * p];
        for (k, &(i, j)) in pairs.iter().enumerate() {
            let mask = 1 << i | 1 << j;
            dim_objects[k] = mask;
            dim_objects[p + k] = mask;
            dim_objects[2 * p + k] = mask;
        }
        let mut space = Space {
            n,
            pairs,
            pair_lookup,
            dim_objects,
            perms: all_permutations(n),
            tables: Vec::new(),
        };
        space.tables = space.perms.iter().map(|s| space.build_table(s)).collect();
        Ok(space)
    }

    /// Shared five-object space.
    pub fn five() -> &'static Space {
        static FIVE: OnceLock<Space> = OnceLock::new();
        FIVE.get_or_init(|| Space::new(DEFAULT_OBJECTS).expect("five objects supported"))
    }

    /// Process-wide space for `n` objects.
    pub fn shared(n: usize) -> Result<&'static Space> {
        static SPACES: [OnceLock<Space>; MAX_OBJECTS - 1] =
            [OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new()];
        if n == DEFAULT_OBJECTS {
            return Ok(Self::five());
        }
        if !(2..=MAX_OBJECTS).contains(&n) {
            return Err(Error::ObjectCount(n));
        }
        Ok(SPACES[n - 2].get_or_init(|| Space::new(n).expect("range checked")))
    }

    pub fn objects(&self) -> usize {
        self.n
    }

    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    pub fn dims(&self) -> usize {
        3 * self.pairs.len()
    }

    pub fn pair(&self, index: PairIndex) -> (ObjectId, ObjectId) {
        let (i, j) = self.pairs[index.0 as usize];
        (ObjectId(i), ObjectId(j))
    }

    pub fn pair_index(&self, i: ObjectId, j: ObjectId) -> Result<PairIndex> {
        if i == j || i.0 as usize >= self.n || j.0 as usize >= self.n {
            return Err(Error::InvalidPair(i.0, j.0));
        }
        Ok(PairIndex(self.pair_lookup[i.0 as usize][j.0 as usize]))
    }

    /// Dimension of `kind(i, j)`. For `Above`, `i` is the upper object.
    pub fn predicate_index(&self, kind: Predicate, i: ObjectId, j: ObjectId) -> Result<usize> {
        let p = self.pair_index(i, j)?.0 as usize;
        let pc = self.pair_count();
        Ok(match kind {
            Predicate::Close => p,
            Predicate::Above if i < j => pc + p,
            Predicate::Above => 2 * pc + p,
        })
    }

    /// Inverse of [`Space::predicate_index`].
    pub fn dim_predicate(&self, dim: usize) -> (Predicate, ObjectId, ObjectId) {
        let pc = self.pair_count();
        let (i, j) = self.pairs[dim % pc];
        match dim / pc {
            0 => (Predicate::Close, ObjectId(i), ObjectId(j)),
            1 => (Predicate::Above, ObjectId(i), ObjectId(j)),
            _ => (Predicate::Above, ObjectId(j), ObjectId(i)),
        }
    }

    /// Objects involved in a dimension, as a bit set.
    pub fn dim_objects(&self, dim: usize) -> ObjectSet {
        ObjectSet(self.dim_objects[dim])
    }

    pub fn full_mask(&self) -> u32 {
        if self.dims() == 32 {
            u32::MAX
        } else {
            (1u32 << self.dims()) - 1
        }
    }

    pub fn close(&self, c: SemanticConfig, i: u8, j: u8) -> bool {
        c.get(self.pair_lookup[i as usize][j as usize] as usize)
    }

    /// `i` rests directly on `j`.
    pub fn above(&self, c: SemanticConfig, i: u8, j: u8) -> bool {
        let p = self.pair_lookup[i as usize][j as usize] as usize;
        let pc = self.pair_count();
        if i < j {
            c.get(pc + p)
        } else {
            c.get(2 * pc + p)
        }
    }

    pub fn set(&self, c: SemanticConfig, kind: Predicate, i: u8, j: u8, value: bool) -> SemanticConfig {
        let dim = self
            .predicate_index(kind, ObjectId(i), ObjectId(j))
            .expect("valid pair");
        c.with(dim, value)
    }

    // ---- relabeling ----

    pub fn permutations(&self) -> &[Permutation] {
        &self.perms
    }

    pub fn permutation_count(&self) -> usize {
        self.perms.len()
    }

    fn build_table(&self, sigma: &Permutation) -> PermTable {
        let dim_map: Vec<u32> = (0..self.dims())
            .map(|d| {
                let (kind, i, j) = self.dim_predicate(d);
                let out = self
                    .predicate_index(kind, ObjectId(sigma.image(i.0)), ObjectId(sigma.image(j.0)))
                    .expect("permutation keeps pairs distinct");
                1u32 << out
            })
            .collect();
        let mut table = [[0u32; 256]; 4];
        for (byte, row) in table.iter_mut().enumerate() {
            for (v, slot) in row.iter_mut().enumerate() {
                let mut out = 0;
                for b in 0..8 {
                    let d = byte * 8 + b;
                    if v >> b & 1 == 1 && d < dim_map.len() {
                        out |= dim_map[d];
                    }
                }
                *slot = out;
            }
        }
        table
    }

    /// Relabel by the `index`-th permutation of [`Space::permutations`].
    #[inline]
    pub fn apply_indexed(&self, c: SemanticConfig, index: usize) -> SemanticConfig {
        let t = &self.tables[index];
        let b = c.0;
        SemanticConfig(
            t[0][(b & 0xff) as usize]
                | t[1][(b >> 8 & 0xff) as usize]
                | t[2][(b >> 16 & 0xff) as usize]
                | t[3][(b >> 24) as usize],
        )
    }

    /// Relabel `c` so that object `i` becomes object `σ(i)`.
    pub fn apply_permutation(&self, c: SemanticConfig, sigma: &Permutation) -> Result<SemanticConfig> {
        if sigma.len() != self.n {
            return Err(Error::InvalidPermutation(format!(
                "expected {} objects, got {}",
                self.n,
                sigma.len()
            )));
        }
        let index = self.permutation_index(sigma);
        Ok(self.apply_indexed(c, index))
    }

    pub fn permutation_index(&self, sigma: &Permutation) -> usize {
        // lexicographic rank (Lehmer code)
        let s = sigma.as_slice();
        let mut rank = 0;
        for i in 0..s.len() {
            let smaller = s[i + 1..].iter().filter(|&&v| v < s[i]).count();
            rank = rank * (s.len() - i) + smaller;
        }
        rank
    }

    /// Minimum image over all relabelings.
    pub fn orbit_representative(&self, c: SemanticConfig) -> SemanticConfig {
        (0..self.perms.len())
            .map(|k| self.apply_indexed(c, k))
            .min()
            .expect("at least one permutation")
    }

    /// Canonical image together with every permutation index reaching it.
    pub fn canonicalizers(&self, c: SemanticConfig) -> (SemanticConfig, Vec<u16>) {
        let mut best = SemanticConfig(c.0);
        let mut best_key = u32::MAX;
        let mut which = Vec::new();
        for k in 0..self.perms.len() {
            let img = self.apply_indexed(c, k);
            let key = img.lex_key();
            match key.cmp(&best_key) {
                Ordering::Less => {
                    best_key = key;
                    best = img;
                    which.clear();
                    which.push(k as u16);
                }
                Ordering::Equal => which.push(k as u16),
                Ordering::Greater => {}
            }
        }
        (best, which)
    }

    /// Distinct images of `c`, sorted.
    pub fn orbit(&self, c: SemanticConfig) -> Vec<SemanticConfig> {
        let set: BTreeSet<SemanticConfig> = (0..self.perms.len()).map(|k| self.apply_indexed(c, k)).collect();
        set.into_iter().collect()
    }

    /// Minimum `(σ(from), σ(to))` over all relabelings.
    pub fn canonical_transition(&self, t: Transition) -> Transition {
        let (from, perms) = self.canonicalizers(t.from);
        let to = perms
            .iter()
            .map(|&k| self.apply_indexed(t.to, k as usize))
            .min()
            .expect("non-empty canonicalizer set");
        Transition { from, to }
    }

    // ---- transitions ----

    pub fn changed_objects(&self, t: Transition) -> Result<ChangeSummary> {
        let diff = t.from.0 ^ t.to.0;
        if diff == 0 {
            return Err(Error::EmptyTransition);
        }
        let mut common = (1u8 << self.n) - 1;
        let mut changed_dims = Vec::with_capacity(diff.count_ones() as usize);
        for dim in 0..self.dims() {
            if diff >> dim & 1 == 1 {
                changed_dims.push(dim);
                common &= self.dim_objects[dim];
            }
        }
        Ok(ChangeSummary {
            changed_dims,
            common: ObjectSet(common),
            single_object: common != 0,
        })
    }

    /// Allocation-free variant of the single-object test. `false` for
    /// identical endpoints.
    #[inline]
    pub fn is_single_object(&self, from: SemanticConfig, to: SemanticConfig) -> bool {
        let mut diff = from.0 ^ to.0;
        if diff == 0 {
            return false;
        }
        let mut common = 0xffu8;
        while diff != 0 {
            let dim = diff.trailing_zeros() as usize;
            common &= self.dim_objects[dim];
            diff &= diff - 1;
        }
        common != 0
    }

    // ---- text forms ----

    /// 0/1 string, dimension 0 first.
    pub fn format(&self, c: SemanticConfig) -> String {
        (0..self.dims()).map(|d| if c.get(d) { '1' } else { '0' }).collect()
    }

    /// Accepts the 0/1 string form or the unsigned integer form.
    pub fn parse(&self, input: &str) -> Result<SemanticConfig> {
        let s = input.trim();
        let err = |reason: &str| Error::ParseConfig {
            input: input.to_string(),
            reason: reason.to_string(),
        };
        if s.len() == self.dims() && s.bytes().all(|b| b == b'0' || b == b'1') {
            let bits = s
                .bytes()
                .enumerate()
                .fold(0u32, |acc, (d, b)| acc | ((b - b'0') as u32) << d);
            return Ok(SemanticConfig(bits));
        }
        let bits: u32 = s.parse().map_err(|_| err("neither a 0/1 string nor an integer"))?;
        if bits & !self.full_mask() != 0 {
            return Err(err("bits set beyond the configuration dimension"));
        }
        Ok(SemanticConfig(bits))
    }

    // ---- evaluation classes ----

    /// Stacks are listed bottom first.
    fn stack(&self, mut c: SemanticConfig, blocks: &[u8]) -> SemanticConfig {
        for w in blocks.windows(2) {
            c = self.set(c, Predicate::Above, w[1], w[0], true);
            c = self.set(c, Predicate::Close, w[0], w[1], true);
        }
        c
    }

    fn pyramid(&self, mut c: SemanticConfig, left: u8, right: u8, top: u8) -> SemanticConfig {
        c = self.set(c, Predicate::Close, left, right, true);
        for base in [left, right] {
            c = self.set(c, Predicate::Above, top, base, true);
            c = self.set(c, Predicate::Close, top, base, true);
        }
        c
    }

    /// Exact extensional member set of a class, sorted.
    pub fn enumerate_class(&self, class: EvalClass) -> Vec<SemanticConfig> {
        let mut out = BTreeSet::new();
        if let Some(k) = class.close_count() {
            let pc = self.pair_count();
            for mask in 0u32..1 << pc {
                if mask.count_ones() as usize == k {
                    out.insert(SemanticConfig(mask));
                }
            }
            return out.into_iter().collect();
        }
        let shapes = class.shapes();
        let needed: usize = shapes.iter().map(|s| s.blocks()).sum();
        if needed > self.n {
            return Vec::new();
        }
        for_each_arrangement(self.n, needed, &mut |seq| {
            let mut c = SemanticConfig::EMPTY;
            let mut at = 0;
            for &shape in shapes {
                let part = &seq[at..at + shape.blocks()];
                c = match shape {
                    Shape::Stack(_) => self.stack(c, part),
                    Shape::Pyramid => self.pyramid(c, part[0], part[1], part[2]),
                };
                at += shape.blocks();
            }
            out.insert(c);
        });
        out.into_iter().collect()
    }

    /// Structural classification: decompose the `above` relation into
    /// stacks and pyramids and check that `close` holds exactly on the
    /// pairs those constructions imply.
    pub fn classify(&self, c: SemanticConfig) -> Option<EvalClass> {
        let n = self.n;
        let mut lower = [0u8; MAX_OBJECTS];
        let mut upper = [0u8; MAX_OBJECTS];
        let mut any_above = false;
        for i in 0..n as u8 {
            for j in 0..n as u8 {
                if i != j && self.above(c, i, j) {
                    lower[i as usize] |= 1 << j;
                    upper[j as usize] |= 1 << i;
                    any_above = true;
                }
            }
        }
        let close_pairs: u32 = c.0 & ((1 << self.pair_count()) - 1);
        if !any_above {
            return match close_pairs.count_ones() {
                1 => Some(EvalClass::C1),
                2 => Some(EvalClass::C2),
                3 => Some(EvalClass::C3),
                _ => None,
            };
        }

        let mut expected_close = SemanticConfig::EMPTY;
        let mut shapes: Vec<Shape> = Vec::new();
        let mut visited = 0u8;
        for start in 0..n {
            let involved = lower[start] | upper[start];
            if involved == 0 || visited >> start & 1 == 1 {
                continue;
            }
            // collect the connected component of the above graph
            let mut comp = 1u8 << start;
            loop {
                let mut grown = comp;
                for b in ObjectSet(comp).iter() {
                    grown |= lower[b as usize] | upper[b as usize];
                }
                if grown == comp {
                    break;
                }
                comp = grown;
            }
            visited |= comp;
            let members: Vec<u8> = ObjectSet(comp).iter().collect();
            let shape = self.component_shape(&members, &lower, &upper, &mut expected_close)?;
            shapes.push(shape);
        }
        if expected_close.0 != close_pairs {
            return None;
        }
        shapes.sort();
        EvalClass::ALL
            .into_iter()
            .find(|k| k.close_count().is_none() && k.shapes() == shapes.as_slice())
    }

    fn component_shape(
        &self,
        members: &[u8],
        lower: &[u8; MAX_OBJECTS],
        upper: &[u8; MAX_OBJECTS],
        expected_close: &mut SemanticConfig,
    ) -> Option<Shape> {
        let degree_ok = members
            .iter()
            .all(|&b| lower[b as usize].count_ones() <= 1 && upper[b as usize].count_ones() <= 1);
        if degree_ok {
            // a chain: exactly one bottom, walk upwards
            let bottoms: Vec<u8> = members.iter().copied().filter(|&b| lower[b as usize] == 0).collect();
            if bottoms.len() != 1 {
                return None;
            }
            let mut cur = bottoms[0];
            let mut len = 1;
            while upper[cur as usize] != 0 {
                let next = upper[cur as usize].trailing_zeros() as u8;
                *expected_close = self.set(*expected_close, Predicate::Close, cur, next, true);
                cur = next;
                len += 1;
            }
            return (len == members.len()).then_some(Shape::Stack(len as u8));
        }
        if members.len() != 3 {
            return None;
        }
        let top = *members.iter().find(|&&b| lower[b as usize].count_ones() == 2)?;
        let bases: Vec<u8> = members.iter().copied().filter(|&b| b != top).collect();
        let ok = upper[top as usize] == 0
            && bases
                .iter()
                .all(|&b| lower[b as usize] == 0 && upper[b as usize] == 1 << top);
        if !ok {
            return None;
        }
        *expected_close = self.set(*expected_close, Predicate::Close, bases[0], bases[1], true);
        for &b in &bases {
            *expected_close = self.set(*expected_close, Predicate::Close, top, b, true);
        }
        Some(Shape::Pyramid)
    }
}

/// Calls `f` on every injective sequence of `k` objects out of `n`.
fn for_each_arrangement(n: usize, k: usize, f: &mut dyn FnMut(&[u8])) {
    fn rec(n: usize, k: usize, used: u8, seq: &mut Vec<u8>, f: &mut dyn FnMut(&[u8])) {
        if seq.len() == k {
            f(seq);
            return;
        }
        for i in 0..n as u8 {
            if used >> i & 1 == 0 {
                seq.push(i);
                rec(n, k, used | 1 << i, seq, f);
                seq.pop();
            }
        }
    }
    rec(n, k, 0, &mut Vec::with_capacity(k), f);
}

/// All permutations of `0..n` in lexicographic order.
fn all_permutations(n: usize) -> Vec<Permutation> {
    let mut out = Vec::new();
    for_each_arrangement(n, n, &mut |seq| out.push(Permutation::new(seq).expect("bijection")));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn five() -> &'static Space {
        Space::five()
    }

    /// Bit-by-bit definition of relabeling, independent of the lookup tables.
    fn permute_by_definition(space: &Space, c: SemanticConfig, sigma: &Permutation) -> SemanticConfig {
        let inv = sigma.inverse();
        let mut out = SemanticConfig::EMPTY;
        for dim in 0..space.dims() {
            let (kind, i, j) = space.dim_predicate(dim);
            let src = space
                .predicate_index(kind, ObjectId(inv.image(i.0)), ObjectId(inv.image(j.0)))
                .unwrap();
            out = out.with(dim, c.get(src));
        }
        out
    }

    #[test]
    fn predicate_index_layout() {
        let s = five();
        assert_eq!(s.dims(), 30);
        assert_eq!(
            s.predicate_index(Predicate::Close, ObjectId(0), ObjectId(1)).unwrap(),
            0
        );
        assert_eq!(
            s.predicate_index(Predicate::Close, ObjectId(3), ObjectId(4)).unwrap(),
            9
        );
        assert_eq!(
            s.predicate_index(Predicate::Above, ObjectId(1), ObjectId(0)).unwrap(),
            20
        );
        assert_eq!(
            s.predicate_index(Predicate::Above, ObjectId(0), ObjectId(1)).unwrap(),
            10
        );
        assert_eq!(
            s.predicate_index(Predicate::Close, ObjectId(2), ObjectId(0)).unwrap(),
            s.predicate_index(Predicate::Close, ObjectId(0), ObjectId(2)).unwrap()
        );
    }

    #[test]
    fn predicate_index_rejects_bad_pairs() {
        let s = five();
        assert!(matches!(
            s.predicate_index(Predicate::Close, ObjectId(2), ObjectId(2)),
            Err(Error::InvalidPair(2, 2))
        ));
        assert!(s.predicate_index(Predicate::Above, ObjectId(0), ObjectId(5)).is_err());
    }

    #[test]
    fn predicate_index_is_a_bijection() {
        let s = five();
        let mut seen = BTreeSet::new();
        for i in 0..5u8 {
            for j in 0..5u8 {
                if i == j {
                    continue;
                }
                seen.insert(s.predicate_index(Predicate::Above, ObjectId(i), ObjectId(j)).unwrap());
                seen.insert(s.predicate_index(Predicate::Close, ObjectId(i), ObjectId(j)).unwrap());
            }
        }
        assert_eq!(seen.len(), 30);
        for d in 0..30 {
            let (k, i, j) = s.dim_predicate(d);
            assert_eq!(s.predicate_index(k, i, j).unwrap(), d);
        }
    }

    #[test]
    fn identity_and_swap() {
        let s = five();
        let c = SemanticConfig::from_bits(0x2a5_1c3f);
        assert_eq!(s.apply_permutation(c, &Permutation::identity(5)).unwrap(), c);

        let close02 = s.set(SemanticConfig::EMPTY, Predicate::Close, 0, 2, true);
        let swap = Permutation::new(&[1, 0, 2, 3, 4]).unwrap();
        let expected = s.set(SemanticConfig::EMPTY, Predicate::Close, 1, 2, true);
        assert_eq!(s.apply_permutation(close02, &swap).unwrap(), expected);
    }

    #[test]
    fn tables_match_definition_for_all_permutations() {
        let s = five();
        let samples = [0u32, 1, 0x3fff_ffff, 0x1234_5678 & 0x3fff_ffff, 0x0aa5_5a0f];
        for sigma in s.permutations() {
            for &b in &samples {
                let c = SemanticConfig::from_bits(b);
                assert_eq!(
                    s.apply_permutation(c, sigma).unwrap(),
                    permute_by_definition(s, c, sigma)
                );
            }
        }
    }

    #[test]
    fn group_action_exhaustive_four_objects() {
        // N = 4: 18 dims, 24 permutations; check identity + composition on a sample
        // of configurations against all permutation pairs
        let s = Space::new(4).unwrap();
        let configs: Vec<SemanticConfig> = (0u32..(1 << 18)).step_by(997).map(SemanticConfig::from_bits).collect();
        for c in &configs {
            for sigma in s.permutations() {
                let once = s.apply_permutation(*c, sigma).unwrap();
                for tau in s.permutations() {
                    let twice = s.apply_permutation(once, tau).unwrap();
                    let composed = s.apply_permutation(*c, &tau.compose(sigma)).unwrap();
                    assert_eq!(twice, composed);
                }
            }
        }
    }

    #[test]
    fn permutation_index_roundtrip() {
        let s = five();
        assert_eq!(s.permutation_count(), 120);
        for (k, p) in s.permutations().iter().enumerate() {
            assert_eq!(s.permutation_index(p), k);
        }
    }

    #[test]
    fn changed_objects_examples() {
        let s = five();
        let close = |i, j| s.predicate_index(Predicate::Close, ObjectId(i), ObjectId(j)).unwrap();
        let e = SemanticConfig::EMPTY;

        let t = Transition::new(e, e.with(close(0, 1), true));
        let r = s.changed_objects(t).unwrap();
        assert_eq!(r.common, ObjectSet(0b11));
        assert!(r.single_object);
        assert_eq!(r.changed_dims, vec![0]);

        let t = Transition::new(e, e.with(close(0, 1), true).with(close(0, 2), true));
        let r = s.changed_objects(t).unwrap();
        assert_eq!(r.common, ObjectSet(0b1));
        assert!(r.single_object);

        let t = Transition::new(e, e.with(close(0, 1), true).with(close(2, 3), true));
        let r = s.changed_objects(t).unwrap();
        assert!(r.common.is_empty());
        assert!(!r.single_object);

        assert!(matches!(
            s.changed_objects(Transition::new(e, e)),
            Err(Error::EmptyTransition)
        ));
    }

    #[test]
    fn classify_examples() {
        let s = five();
        assert_eq!(s.classify(SemanticConfig::EMPTY), None);
        let c1 = s.set(SemanticConfig::EMPTY, Predicate::Close, 0, 1, true);
        assert_eq!(s.classify(c1), Some(EvalClass::C1));
        let s2 = s.set(c1, Predicate::Above, 0, 1, true);
        assert_eq!(s.classify(s2), Some(EvalClass::S2));
        // above without close is not a class member
        let bare = s.set(SemanticConfig::EMPTY, Predicate::Above, 0, 1, true);
        assert_eq!(s.classify(bare), None);
        // S2 plus an extra close pair
        assert_eq!(s.classify(s.set(s2, Predicate::Close, 2, 3, true)), None);
        // top and bottom of a 3-stack close: not S3
        let s3 = s.stack(SemanticConfig::EMPTY, &[0, 1, 2]);
        assert_eq!(s.classify(s3), Some(EvalClass::S3));
        assert_eq!(s.classify(s.set(s3, Predicate::Close, 0, 2, true)), None);
    }

    #[test]
    fn class_sizes() {
        let s = five();
        let expected = [10, 45, 120, 20, 60, 60, 120, 30, 60, 120, 120];
        let mut all = BTreeSet::new();
        for (class, n) in EvalClass::ALL.into_iter().zip(expected) {
            let members = s.enumerate_class(class);
            assert_eq!(members.len(), n, "{class}");
            for c in members {
                assert_eq!(s.classify(c), Some(class));
                assert!(all.insert(c), "classes overlap at {}", s.format(c));
            }
        }
        assert_eq!(all.len(), 765);
    }

    #[test]
    fn classify_agrees_with_enumeration_exhaustively_for_three_objects() {
        let s = Space::new(3).unwrap();
        let mut by_enum = std::collections::HashMap::new();
        for class in EvalClass::ALL {
            for c in s.enumerate_class(class) {
                by_enum.insert(c, class);
            }
        }
        for bits in 0u32..1 << 9 {
            let c = SemanticConfig::from_bits(bits);
            assert_eq!(s.classify(c), by_enum.get(&c).copied(), "{}", s.format(c));
        }
    }

    #[test]
    fn orbit_sizes() {
        let s = five();
        let zero = SemanticConfig::EMPTY;
        assert_eq!(s.orbit_representative(zero), zero);
        assert_eq!(s.orbit(zero).len(), 1);
        let s2 = s.enumerate_class(EvalClass::S2)[7];
        assert_eq!(s.orbit(s2).len(), 20);
        let s5 = s.enumerate_class(EvalClass::S5)[0];
        assert_eq!(s.orbit(s5).len(), 120);
        // every class is closed under relabeling and orbit sizes divide 120
        for class in EvalClass::ALL {
            for c in s.enumerate_class(class) {
                let orbit = s.orbit(c);
                assert_eq!(120 % orbit.len(), 0);
                let rep = s.orbit_representative(c);
                assert_eq!(s.orbit_representative(rep), rep);
                assert_eq!(rep, orbit[0]);
                assert_eq!(s.classify(rep), Some(class));
            }
        }
    }

    #[test]
    fn canonical_transition_is_orbit_invariant() {
        let s = five();
        let from = s.enumerate_class(EvalClass::S2)[3];
        let to = s.set(from, Predicate::Close, 3, 4, true);
        let canon = s.canonical_transition(Transition::new(from, to));
        for k in 0..120 {
            let t = Transition::new(s.apply_indexed(from, k), s.apply_indexed(to, k));
            assert_eq!(s.canonical_transition(t), canon);
        }
        assert_eq!(canon.from, s.orbit_representative(from));
    }

    #[test]
    fn text_forms() {
        let s = five();
        let c = s.enumerate_class(EvalClass::P3)[4];
        let text = s.format(c);
        assert_eq!(text.len(), 30);
        assert_eq!(s.parse(&text).unwrap(), c);
        assert_eq!(s.parse(&c.bits().to_string()).unwrap(), c);
        assert!(s.parse("12x").is_err());
        assert!(s.parse(&(1u64 << 31).to_string()).is_err());
        assert_eq!(&s.format(SemanticConfig::from_bits(1))[..2], "10");
    }

    #[test]
    fn lexicographic_order_follows_the_string() {
        let s = five();
        let a = SemanticConfig::from_bits(1); // "1000..."
        let b = SemanticConfig::from_bits(2); // "0100..."
        assert!(a > b);
        assert_eq!(a.cmp(&b), s.format(a).cmp(&s.format(b)));
    }
}
