//! Base blocks over `Z_n` and `Z_m1 x Z_m2`: development into full designs,
//! difference bookkeeping, and completion of short base-block lists.
//!
//! Group elements are stored as their point index. For the product group the
//! element `(x, y)` is point `m2 * x + y`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::{AlmostParallelClass, Block, Design, Point};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DifferenceError {
    #[error("invalid group {0}")]
    InvalidGroup(GroupSpec),
    #[error("base block {0:?} has repeated or out-of-range elements")]
    BadBaseBlock([Point; 3]),
    #[error("base block {0} has a short orbit")]
    ShortOrbit(BaseBlock),
    #[error("differences are already repeated: {0:?}")]
    RepeatedDifferences(Vec<Point>),
    #[error("no base blocks cover the residual differences {0:?}")]
    Uncompletable(Vec<Point>),
}

/// Abelian group used for development.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupSpec {
    Cyclic(u32),
    Product(u32, u32),
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupSpec::Cyclic(n) => write!(f, "Z{n}"),
            GroupSpec::Product(a, b) => write!(f, "Z{a}xZ{b}"),
        }
    }
}

impl GroupSpec {
    pub fn check(&self) -> Result<(), DifferenceError> {
        let ok = match *self {
            GroupSpec::Cyclic(n) => n >= 3,
            GroupSpec::Product(a, b) => a >= 2 && b >= 2,
        };
        if ok {
            Ok(())
        } else {
            Err(DifferenceError::InvalidGroup(*self))
        }
    }

    pub fn order(&self) -> u32 {
        match *self {
            GroupSpec::Cyclic(n) => n,
            GroupSpec::Product(a, b) => a * b,
        }
    }

    /// Point index of `(x, y)` in a product group. For cyclic groups `y` is ignored.
    pub fn encode(&self, x: u32, y: u32) -> Point {
        match *self {
            GroupSpec::Cyclic(n) => x % n,
            GroupSpec::Product(a, b) => (x % a) * b + (y % b),
        }
    }

    pub fn decode(&self, p: Point) -> (u32, u32) {
        match *self {
            GroupSpec::Cyclic(_) => (p, 0),
            GroupSpec::Product(_, b) => (p / b, p % b),
        }
    }

    pub fn add(&self, p: Point, q: Point) -> Point {
        match *self {
            GroupSpec::Cyclic(n) => (p + q) % n,
            GroupSpec::Product(a, b) => {
                let ((x1, y1), (x2, y2)) = (self.decode(p), self.decode(q));
                ((x1 + x2) % a) * b + (y1 + y2) % b
            }
        }
    }

    pub fn neg(&self, p: Point) -> Point {
        match *self {
            GroupSpec::Cyclic(n) => (n - p) % n,
            GroupSpec::Product(a, b) => {
                let (x, y) = self.decode(p);
                ((a - x) % a) * b + (b - y) % b
            }
        }
    }

    pub fn sub(&self, p: Point, q: Point) -> Point {
        self.add(p, self.neg(q))
    }

    pub fn elements(&self) -> impl Iterator<Item = Point> {
        0..self.order()
    }
}

/// Three distinct group elements whose orbit is developed into blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BaseBlock(pub Block);

impl fmt::Display for BaseBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl BaseBlock {
    pub fn new(g: GroupSpec, elements: [Point; 3]) -> Result<Self, DifferenceError> {
        if elements.iter().any(|&e| e >= g.order()) {
            return Err(DifferenceError::BadBaseBlock(elements));
        }
        Block::try_from(elements)
            .map(BaseBlock)
            .map_err(|_| DifferenceError::BadBaseBlock(elements))
    }

    /// From product-group coordinates.
    pub fn from_pairs(g: GroupSpec, elements: [(u32, u32); 3]) -> Result<Self, DifferenceError> {
        BaseBlock::new(g, elements.map(|(x, y)| g.encode(x, y)))
    }

    pub fn translate(&self, g: GroupSpec, t: Point) -> Block {
        self.0.map(|p| g.add(p, t))
    }

    /// The six signed differences `a - b` for ordered pairs of distinct members.
    pub fn differences(&self, g: GroupSpec) -> [Point; 6] {
        let [a, b, c] = self.0.members();
        [
            g.sub(a, b),
            g.sub(b, a),
            g.sub(a, c),
            g.sub(c, a),
            g.sub(b, c),
            g.sub(c, b),
        ]
    }

    fn has_full_orbit(&self, g: GroupSpec) -> bool {
        g.elements().skip(1).all(|t| self.translate(g, t) != self.0)
    }
}

/// Convenience for cyclic base blocks given as integer triples.
pub fn parse_cyclic(blocks: &[[Point; 3]]) -> Vec<BaseBlock> {
    blocks
        .iter()
        .map(|&b| BaseBlock(Block::try_from(b).expect("distinct elements")))
        .collect()
}

/// Every translate of every base block. Rejects base blocks whose orbit is
/// shorter than the group.
pub fn develop(base: &[BaseBlock], g: GroupSpec) -> Result<Design, DifferenceError> {
    g.check()?;
    let mut blocks = Vec::with_capacity(base.len() * g.order() as usize);
    for b in base {
        if b.0.max_point() >= g.order() {
            return Err(DifferenceError::BadBaseBlock(b.0.members()));
        }
        if !b.has_full_orbit(g) {
            return Err(DifferenceError::ShortOrbit(*b));
        }
        blocks.extend(g.elements().map(|t| b.translate(g, t)));
    }
    Ok(Design::new(g.order() as usize, blocks))
}

/// Multiplicity of each group element among the signed differences of a base list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DifferenceCount {
    counts: Vec<u32>,
}

impl DifferenceCount {
    /// Multiplicity of `e`.
    pub fn count(&self, e: Point) -> u32 {
        self.counts[e as usize]
    }

    /// All differences as a sorted multiset.
    pub fn multiset(&self) -> Vec<Point> {
        self.counts
            .iter()
            .enumerate()
            .flat_map(|(e, &c)| std::iter::repeat_n(e as Point, c as usize))
            .collect()
    }

    /// Nonzero elements that never occur.
    pub fn missing(&self) -> Vec<Point> {
        (1..self.counts.len() as Point).filter(|&e| self.count(e) == 0).collect()
    }

    /// Elements occurring more than once.
    pub fn repeated(&self) -> Vec<Point> {
        (0..self.counts.len() as Point).filter(|&e| self.count(e) > 1).collect()
    }

    /// Each nonzero element exactly once, zero never.
    pub fn is_exact(&self) -> bool {
        self.counts[0] == 0 && self.counts[1..].iter().all(|&c| c == 1)
    }
}

pub fn difference_coverage(base: &[BaseBlock], g: GroupSpec) -> DifferenceCount {
    let mut counts = vec![0u32; g.order() as usize];
    for b in base {
        for d in b.differences(g) {
            counts[d as usize] += 1;
        }
    }
    DifferenceCount { counts }
}

/// Least representative of `{0, r, s}` among its translates that contain 0.
fn canonical_zero_block(g: GroupSpec, b: Block) -> Block {
    b.members()
        .iter()
        .map(|&m| b.map(|p| g.sub(p, m)))
        .min()
        .expect("three translates")
}

/// Extra base blocks that make the difference list exact. Blocks are
/// reported as the least translate containing 0; the search takes the
/// smallest residual difference first, so the answer is deterministic.
pub fn complete_base_blocks(
    base: &[BaseBlock],
    g: GroupSpec,
) -> Result<Vec<BaseBlock>, DifferenceError> {
    g.check()?;
    let cov = difference_coverage(base, g);
    let repeated = cov.repeated();
    if !repeated.is_empty() {
        return Err(DifferenceError::RepeatedDifferences(repeated));
    }
    let mut residual = vec![false; g.order() as usize];
    for e in cov.missing() {
        residual[e as usize] = true;
    }
    let mut out = Vec::new();
    if fill_residual(g, &mut residual, &mut out) {
        Ok(out.into_iter().map(BaseBlock).collect())
    } else {
        Err(DifferenceError::Uncompletable(cov.missing()))
    }
}

fn fill_residual(g: GroupSpec, residual: &mut [bool], out: &mut Vec<Block>) -> bool {
    let Some(r) = residual.iter().position(|&x| x) else {
        return true;
    };
    let r = r as Point;
    for s in 1..g.order() {
        if s == r {
            continue;
        }
        let Ok(block) = Block::new(0, r, s) else { continue };
        let diffs = BaseBlock(block).differences(g);
        let mut distinct = diffs;
        distinct.sort_unstable();
        if distinct.windows(2).any(|w| w[0] == w[1]) {
            continue;
        }
        if !diffs.iter().all(|&d| residual[d as usize]) {
            continue;
        }
        for &d in &diffs {
            residual[d as usize] = false;
        }
        out.push(canonical_zero_block(g, block));
        if fill_residual(g, residual, out) {
            return true;
        }
        out.pop();
        for &d in &diffs {
            residual[d as usize] = true;
        }
    }
    false
}

/// Shifts every block and the missed point by `t`.
pub fn translate_apc(apc: &AlmostParallelClass, t: Point, g: GroupSpec) -> AlmostParallelClass {
    apc.map(|p| g.add(p, t))
}
