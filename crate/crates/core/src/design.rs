//! Triple systems, group divisible designs and almost parallel classes,
//! together with the structural validators every construction is checked
//! against.
//!
//! Points are dense indices `0..n`. Any external labelling is handled by the
//! command-line layer.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A point of a design, an index in `0..n`.
pub type Point = u32;

const NO_BLOCK: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BlockError {
    #[error("block members must be distinct, got {0:?}")]
    Repeated([Point; 3]),
}

/// A 3-subset of points, stored in ascending order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "[Point; 3]", into = "[Point; 3]")]
pub struct Block([Point; 3]);

impl Block {
    pub fn new(a: Point, b: Point, c: Point) -> Result<Self, BlockError> {
        let mut m = [a, b, c];
        m.sort_unstable();
        if m[0] == m[1] || m[1] == m[2] {
            return Err(BlockError::Repeated([a, b, c]));
        }
        Ok(Block(m))
    }

    #[inline]
    pub fn members(&self) -> [Point; 3] {
        self.0
    }

    #[inline]
    pub fn contains(&self, p: Point) -> bool {
        self.0.contains(&p)
    }

    /// The three unordered pairs of the block, each with the smaller point first.
    pub fn pairs(&self) -> [(Point, Point); 3] {
        let [a, b, c] = self.0;
        [(a, b), (a, c), (b, c)]
    }

    pub fn max_point(&self) -> Point {
        self.0[2]
    }

    /// Applies a point map and re-canonicalizes. Panics if the map is not
    /// injective on the block.
    pub fn map(&self, f: impl Fn(Point) -> Point) -> Block {
        let [a, b, c] = self.0;
        Block::new(f(a), f(b), f(c)).expect("point map must be injective on a block")
    }

    /// Bitmask of the members; only meaningful when every member is below 64.
    #[inline]
    pub fn mask(&self) -> u64 {
        self.0.iter().fold(0u64, |m, &p| m | 1u64 << p)
    }
}

impl TryFrom<[Point; 3]> for Block {
    type Error = BlockError;
    fn try_from(m: [Point; 3]) -> Result<Self, Self::Error> {
        Block::new(m[0], m[1], m[2])
    }
}

impl From<Block> for [Point; 3] {
    fn from(b: Block) -> Self {
        b.0
    }
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{},{},{}}}", self.0[0], self.0[1], self.0[2])
    }
}

/// An order-`n` point set with a list of blocks. Whether it is a Steiner
/// triple system, a partial one, or neither is decided by the validators.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Design {
    order: usize,
    blocks: Vec<Block>,
}

impl Design {
    pub fn new(order: usize, blocks: Vec<Block>) -> Self {
        Design { order, blocks }
    }

    pub fn empty(order: usize) -> Self {
        Design::new(order, Vec::new())
    }

    /// Builds a design from raw triples, rejecting triples with repeated members.
    pub fn from_triples(order: usize, triples: &[[Point; 3]]) -> Result<Self, BlockError> {
        let blocks = triples
            .iter()
            .map(|&t| Block::try_from(t))
            .collect::<Result<_, _>>()?;
        Ok(Design::new(order, blocks))
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Number of blocks.
    #[inline]
    pub fn size(&self) -> usize {
        self.blocks.len()
    }

    /// Same design with blocks sorted lexicographically.
    pub fn canonical(&self) -> Design {
        let mut blocks = self.blocks.clone();
        blocks.sort_unstable();
        Design::new(self.order, blocks)
    }

    pub fn into_blocks(self) -> Vec<Block> {
        self.blocks
    }

    /// Lookup table from pairs to the block covering them. Assumes the design
    /// is a valid PSTS; with repeated pairs the last block wins.
    pub fn pair_index(&self) -> PairIndex {
        PairIndex::new(self)
    }
}

/// Maps each pair of points to the (unique) block containing it.
#[derive(Debug, Clone)]
pub struct PairIndex {
    n: usize,
    slots: Vec<u32>,
}

impl PairIndex {
    fn new(d: &Design) -> Self {
        let n = d.order();
        let mut slots = vec![NO_BLOCK; n * n];
        for (i, b) in d.blocks().iter().enumerate() {
            if b.max_point() as usize >= n {
                continue;
            }
            for (x, y) in b.pairs() {
                slots[x as usize * n + y as usize] = i as u32;
                slots[y as usize * n + x as usize] = i as u32;
            }
        }
        PairIndex { n, slots }
    }

    /// Index of the block containing `{x, y}`, if any.
    #[inline]
    pub fn block_of(&self, x: Point, y: Point) -> Option<usize> {
        let (x, y) = (x as usize, y as usize);
        if x >= self.n || y >= self.n {
            return None;
        }
        match self.slots[x * self.n + y] {
            NO_BLOCK => None,
            i => Some(i as usize),
        }
    }
}

/// First structural violation found by a validator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    PointOutOfRange { block: Block, order: usize },
    DuplicateBlock { block: Block },
    RepeatedPair { pair: (Point, Point), blocks: (Block, Block) },
    OrderNotAdmissible { order: usize },
    UncoveredPair { pair: (Point, Point) },
    WrongSize { expected: usize, actual: usize },
    GroupTypeMismatch { detail: String },
    NotTransverse { block: Block },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::PointOutOfRange { block, order } => {
                write!(f, "block {block} has a point outside 0..{order}")
            }
            Violation::DuplicateBlock { block } => write!(f, "block {block} occurs twice"),
            Violation::RepeatedPair { pair, blocks } => write!(
                f,
                "pair ({},{}) occurs in blocks {} and {}",
                pair.0, pair.1, blocks.0, blocks.1
            ),
            Violation::OrderNotAdmissible { order } => {
                write!(f, "order {order} is not 1 or 3 mod 6")
            }
            Violation::UncoveredPair { pair } => {
                write!(f, "pair ({},{}) is not covered", pair.0, pair.1)
            }
            Violation::WrongSize { expected, actual } => {
                write!(f, "expected {expected} blocks, found {actual}")
            }
            Violation::GroupTypeMismatch { detail } => write!(f, "groups: {detail}"),
            Violation::NotTransverse { block } => {
                write!(f, "block {block} meets some group twice")
            }
        }
    }
}

/// Outcome of a validator: either OK or the first violation found.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violation: Option<Violation>,
}

impl ValidationReport {
    pub fn ok() -> Self {
        ValidationReport { violation: None }
    }

    pub fn fail(v: Violation) -> Self {
        ValidationReport { violation: Some(v) }
    }

    pub fn is_ok(&self) -> bool {
        self.violation.is_none()
    }

    /// The offending pair, for violations that name one.
    pub fn offending_pair(&self) -> Option<(Point, Point)> {
        match &self.violation {
            Some(Violation::RepeatedPair { pair, .. }) | Some(Violation::UncoveredPair { pair }) => {
                Some(*pair)
            }
            _ => None,
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.violation {
            None => f.write_str("ok"),
            Some(v) => write!(f, "fail ({v})"),
        }
    }
}

/// Pair occupancy of a design: `None` if some pair is repeated.
fn occupancy(d: &Design) -> Result<Vec<u32>, Violation> {
    let n = d.order();
    for b in d.blocks() {
        if b.max_point() as usize >= n {
            return Err(Violation::PointOutOfRange { block: *b, order: n });
        }
    }
    let mut slots = vec![NO_BLOCK; n * n];
    for (i, b) in d.blocks().iter().enumerate() {
        for (x, y) in b.pairs() {
            let s = &mut slots[x as usize * n + y as usize];
            if *s != NO_BLOCK {
                let other = d.blocks()[*s as usize];
                if other == *b {
                    return Err(Violation::DuplicateBlock { block: *b });
                }
                return Err(Violation::RepeatedPair { pair: (x, y), blocks: (other, *b) });
            }
            *s = i as u32;
        }
    }
    Ok(slots)
}

/// Checks that every pair of points lies in at most one block.
pub fn validate_psts(d: &Design) -> ValidationReport {
    match occupancy(d) {
        Ok(_) => ValidationReport::ok(),
        Err(v) => ValidationReport::fail(v),
    }
}

/// Checks that every pair of points lies in exactly one block.
pub fn validate_sts(d: &Design) -> ValidationReport {
    let n = d.order();
    let slots = match occupancy(d) {
        Ok(s) => s,
        Err(v) => return ValidationReport::fail(v),
    };
    if n % 6 != 1 && n % 6 != 3 {
        return ValidationReport::fail(Violation::OrderNotAdmissible { order: n });
    }
    for x in 0..n {
        for y in x + 1..n {
            if slots[x * n + y] == NO_BLOCK {
                return ValidationReport::fail(Violation::UncoveredPair {
                    pair: (x as Point, y as Point),
                });
            }
        }
    }
    let expected = n * (n - 1) / 6;
    if d.size() != expected {
        return ValidationReport::fail(Violation::WrongSize { expected, actual: d.size() });
    }
    ValidationReport::ok()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupTypeError {
    #[error("group sizes and multiplicities must be positive")]
    NonPositive,
    #[error("cannot parse group type {0:?}")]
    Parse(String),
}

/// Multiset of group sizes, e.g. `12^4 18^1`. Parts are kept sorted by size
/// with equal sizes merged.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct GroupType {
    parts: Vec<(usize, usize)>,
}

impl GroupType {
    pub fn new(parts: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, GroupTypeError> {
        let mut merged: BTreeMap<usize, usize> = BTreeMap::new();
        for (g, u) in parts {
            if g == 0 || u == 0 {
                return Err(GroupTypeError::NonPositive);
            }
            *merged.entry(g).or_default() += u;
        }
        Ok(GroupType { parts: merged.into_iter().collect() })
    }

    /// Type `g^u`.
    pub fn uniform(g: usize, u: usize) -> Result<Self, GroupTypeError> {
        GroupType::new([(g, u)])
    }

    pub fn parts(&self) -> &[(usize, usize)] {
        &self.parts
    }

    pub fn num_points(&self) -> usize {
        self.parts.iter().map(|&(g, u)| g * u).sum()
    }

    pub fn num_groups(&self) -> usize {
        self.parts.iter().map(|&(_, u)| u).sum()
    }

    /// Group sizes in layout order.
    pub fn sizes(&self) -> Vec<usize> {
        self.parts
            .iter()
            .flat_map(|&(g, u)| std::iter::repeat_n(g, u))
            .collect()
    }

    /// Number of pairs of points lying in different groups.
    pub fn cross_pairs(&self) -> usize {
        let n = self.num_points();
        let within: usize = self.parts.iter().map(|&(g, u)| u * g * (g.saturating_sub(1)) / 2).sum();
        n * n.saturating_sub(1) / 2 - within
    }

    /// Multiplies every group size by `w`.
    pub fn scaled(&self, w: usize) -> Result<Self, GroupTypeError> {
        GroupType::new(self.parts.iter().map(|&(g, u)| (g * w, u)))
    }

    /// The cache key, e.g. `3:12^4+18^1`.
    pub fn key(&self) -> String {
        format!("3:{self}")
    }

    /// Groups laid out consecutively: the first group is `0..g1`, and so on.
    pub fn consecutive_groups(&self) -> Vec<Vec<Point>> {
        let mut next = 0 as Point;
        self.sizes()
            .into_iter()
            .map(|g| {
                let grp = (next..next + g as Point).collect();
                next += g as Point;
                grp
            })
            .collect()
    }
}

impl fmt::Display for GroupType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (g, u)) in self.parts.iter().enumerate() {
            if i > 0 {
                f.write_str("+")?;
            }
            write!(f, "{g}^{u}")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for GroupType {
    type Err = GroupTypeError;

    /// Accepts `12^4+18^1`, `12^4 18^1`, `12^4,18^1`, and an optional `3:` prefix.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let body = s.trim().strip_prefix("3:").unwrap_or(s.trim());
        let bad = || GroupTypeError::Parse(s.to_string());
        let parts = body
            .split(|c: char| c == '+' || c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|tok| {
                let (g, u) = tok.split_once('^').unwrap_or((tok, "1"));
                Ok((g.parse().map_err(|_| bad())?, u.parse().map_err(|_| bad())?))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if parts.is_empty() {
            return Err(bad());
        }
        GroupType::new(parts)
    }
}

impl TryFrom<String> for GroupType {
    type Error = GroupTypeError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<GroupType> for String {
    fn from(t: GroupType) -> Self {
        t.to_string()
    }
}

/// A 3-GDD: a triangle decomposition of the complete multipartite graph
/// whose parts are `groups`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gdd {
    pub group_type: GroupType,
    pub groups: Vec<Vec<Point>>,
    pub design: Design,
}

impl Gdd {
    /// Group index of every point, or `None` if the groups do not partition
    /// `0..order`.
    pub fn group_of(&self) -> Option<Vec<usize>> {
        let n = self.design.order();
        let mut owner = vec![usize::MAX; n];
        for (gi, grp) in self.groups.iter().enumerate() {
            for &p in grp {
                let slot = owner.get_mut(p as usize)?;
                if *slot != usize::MAX {
                    return None;
                }
                *slot = gi;
            }
        }
        owner.iter().all(|&o| o != usize::MAX).then_some(owner)
    }
}

/// Checks the group partition against the declared type, transversality of
/// every block, and that every cross-group pair is covered exactly once.
pub fn validate_gdd(g: &Gdd) -> ValidationReport {
    let mismatch = |detail: String| ValidationReport::fail(Violation::GroupTypeMismatch { detail });
    let n = g.design.order();
    if g.group_type.num_points() != n {
        return mismatch(format!(
            "type {} has {} points, design has {n}",
            g.group_type,
            g.group_type.num_points()
        ));
    }
    let mut sizes: Vec<usize> = g.groups.iter().map(Vec::len).collect();
    sizes.sort_unstable();
    if sizes != g.group_type.sizes() {
        return mismatch(format!("group sizes {sizes:?} do not match type {}", g.group_type));
    }
    let Some(owner) = g.group_of() else {
        return mismatch("groups do not partition the point set".into());
    };
    let slots = match occupancy(&g.design) {
        Ok(s) => s,
        Err(v) => return ValidationReport::fail(v),
    };
    for b in g.design.blocks() {
        let [x, y, z] = b.members().map(|p| owner[p as usize]);
        if x == y || x == z || y == z {
            return ValidationReport::fail(Violation::NotTransverse { block: *b });
        }
    }
    for x in 0..n {
        for y in x + 1..n {
            if owner[x] != owner[y] && slots[x * n + y] == NO_BLOCK {
                return ValidationReport::fail(Violation::UncoveredPair {
                    pair: (x as Point, y as Point),
                });
            }
        }
    }
    let cross = g.group_type.cross_pairs();
    if !cross.is_multiple_of(3) || g.design.size() != cross / 3 {
        return ValidationReport::fail(Violation::WrongSize {
            expected: cross / 3,
            actual: g.design.size(),
        });
    }
    ValidationReport::ok()
}

/// Pairwise disjoint blocks covering every point but `missed`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlmostParallelClass {
    pub missed: Point,
    pub blocks: Vec<Block>,
}

impl AlmostParallelClass {
    pub fn new(missed: Point, mut blocks: Vec<Block>) -> Self {
        blocks.sort_unstable();
        AlmostParallelClass { missed, blocks }
    }

    pub fn map(&self, f: impl Fn(Point) -> Point + Copy) -> Self {
        AlmostParallelClass::new(f(self.missed), self.blocks.iter().map(|b| b.map(f)).collect())
    }
}

/// True iff every block of `apc` is a block of `d`, the blocks are disjoint,
/// and together they cover exactly the points other than `apc.missed`.
pub fn verify_apc(d: &Design, apc: &AlmostParallelClass) -> bool {
    verify_apc_indexed(d, &d.pair_index(), apc)
}

pub(crate) fn verify_apc_indexed(d: &Design, idx: &PairIndex, apc: &AlmostParallelClass) -> bool {
    let n = d.order();
    if apc.missed as usize >= n {
        return false;
    }
    let mut seen = vec![false; n];
    seen[apc.missed as usize] = true;
    for b in &apc.blocks {
        let [x, y, _] = b.members();
        match idx.block_of(x, y) {
            Some(i) if d.blocks()[i] == *b => {}
            _ => return false,
        }
        for p in b.members() {
            if std::mem::replace(&mut seen[p as usize], true) {
                return false;
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Almost parallel classes keyed by the point they miss.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NonseqCertificate {
    pub entries: BTreeMap<Point, AlmostParallelClass>,
}

impl NonseqCertificate {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, apc: AlmostParallelClass) {
        self.entries.insert(apc.missed, apc);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, p: Point) -> Option<&AlmostParallelClass> {
        self.entries.get(&p)
    }

    pub fn classes(&self) -> impl Iterator<Item = &AlmostParallelClass> {
        self.entries.values()
    }
}

impl FromIterator<AlmostParallelClass> for NonseqCertificate {
    fn from_iter<I: IntoIterator<Item = AlmostParallelClass>>(iter: I) -> Self {
        let mut c = NonseqCertificate::new();
        for apc in iter {
            c.insert(apc);
        }
        c
    }
}

/// Outcome of checking a certificate entry by entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertificateCheck {
    pub entries: usize,
    pub required: usize,
    /// Keys whose class fails `verify_apc` or whose key differs from its missed point.
    pub bad_entries: Vec<Point>,
}

impl CertificateCheck {
    pub fn is_ok(&self) -> bool {
        self.entries >= self.required && self.bad_entries.is_empty()
    }
}

pub fn check_certificate(d: &Design, c: &NonseqCertificate) -> CertificateCheck {
    let idx = d.pair_index();
    let bad_entries = c
        .entries
        .iter()
        .filter(|(&k, apc)| apc.missed != k || !verify_apc_indexed(d, &idx, apc))
        .map(|(&k, _)| k)
        .collect();
    CertificateCheck {
        entries: c.len(),
        required: d.order().saturating_sub(1),
        bad_entries,
    }
}

/// True iff `c` holds verified almost parallel classes missing at least
/// `n - 1` distinct points, which makes `d` nonsequenceable.
pub fn verify_certificate(d: &Design, c: &NonseqCertificate) -> bool {
    check_certificate(d, c).is_ok()
}
