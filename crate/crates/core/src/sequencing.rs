//! Admissible sequences: a sequence of all points is admissible when no
//! proper segment of it can be partitioned into blocks. A design with
//! almost parallel classes missing `n - 1` distinct points has none, and
//! the certificate yields an explicit refutation of any given sequence.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::{AlmostParallelClass, Design, NonseqCertificate, Point};
use crate::exact_cover::{find_apc_with, segment_partitionable, Search, Solver};
use crate::par::{self, Execution};

/// Largest order for which segment checks use a precomputed subset table.
pub const TABLE_MAX_ORDER: usize = 20;

/// Default node budget of [`find_admissible_sequence`].
pub const DEFAULT_SEQUENCE_BUDGET: u64 = 100_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SequenceError {
    #[error("sequence has {got} entries, design has {expected} points")]
    WrongLength { got: usize, expected: usize },
    #[error("point {0} is repeated or out of range")]
    BadPoint(Point),
}

/// A permutation of the points of a design.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointSequence(Vec<Point>);

impl PointSequence {
    pub fn new(order: usize, points: Vec<Point>) -> Result<Self, SequenceError> {
        if points.len() != order {
            return Err(SequenceError::WrongLength { got: points.len(), expected: order });
        }
        let mut seen = vec![false; order];
        for &p in &points {
            match seen.get_mut(p as usize) {
                Some(s) if !*s => *s = true,
                _ => return Err(SequenceError::BadPoint(p)),
            }
        }
        Ok(PointSequence(points))
    }

    /// `0, 1, ..., n - 1`.
    pub fn identity(order: usize) -> Self {
        PointSequence((0..order as Point).collect())
    }

    pub fn points(&self) -> &[Point] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Which segments count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SegmentPolicy {
    /// Every contiguous run of the sequence.
    #[default]
    AllIntervals,
    /// Only runs touching the first or the last position.
    PrefixesAndSuffixes,
}

impl std::str::FromStr for SegmentPolicy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all-intervals" | "all" => Ok(SegmentPolicy::AllIntervals),
            "prefixes-and-suffixes" | "ends" => Ok(SegmentPolicy::PrefixesAndSuffixes),
            other => Err(format!("unknown segment policy {other:?}")),
        }
    }
}

impl std::fmt::Display for SegmentPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SegmentPolicy::AllIntervals => "all-intervals",
            SegmentPolicy::PrefixesAndSuffixes => "prefixes-and-suffixes",
        })
    }
}

/// Answers "can these points be partitioned into blocks?". Small designs get
/// a table over all subsets; larger ones fall back to exact cover.
pub struct SegmentOracle<'a> {
    design: &'a Design,
    table: Option<Vec<u64>>,
}

impl<'a> SegmentOracle<'a> {
    pub fn new(design: &'a Design) -> Self {
        let n = design.order();
        let in_range = design.blocks().iter().all(|b| (b.max_point() as usize) < n);
        let table = (n <= TABLE_MAX_ORDER && in_range).then(|| subset_table(design));
        SegmentOracle { design, table }
    }

    pub fn design(&self) -> &Design {
        self.design
    }

    #[inline]
    fn lookup(table: &[u64], mask: u64) -> bool {
        table[(mask >> 6) as usize] >> (mask & 63) & 1 == 1
    }

    pub fn partitionable(&self, segment: &[Point]) -> bool {
        match &self.table {
            Some(t) => {
                segment.len().is_multiple_of(3)
                    && Self::lookup(t, segment.iter().fold(0u64, |m, &p| m | 1 << p))
            }
            None => segment_partitionable(self.design, segment),
        }
    }
}

/// Bit `S` is set iff the subset with bitmask `S` is a disjoint union of blocks.
fn subset_table(d: &Design) -> Vec<u64> {
    let n = d.order();
    let mut by_min: Vec<Vec<u64>> = vec![Vec::new(); n];
    for b in d.blocks() {
        by_min[b.members()[0] as usize].push(b.mask());
    }
    let size = 1usize << n;
    let mut bits = vec![0u64; size.div_ceil(64)];
    bits[0] = 1;
    for s in 1..size as u64 {
        if s.count_ones() % 3 != 0 {
            continue;
        }
        let low = s.trailing_zeros() as usize;
        let hit = by_min[low]
            .iter()
            .any(|&m| s & m == m && SegmentOracle::lookup(&bits, s & !m));
        if hit {
            bits[(s >> 6) as usize] |= 1 << (s & 63);
        }
    }
    bits
}

/// Whether no proper segment selected by `policy` is partitionable into blocks.
pub fn is_admissible(d: &Design, s: &PointSequence, policy: SegmentPolicy) -> bool {
    is_admissible_with(&SegmentOracle::new(d), s, policy)
}

/// [`is_admissible`] with a prebuilt oracle, for checking many sequences.
pub fn is_admissible_with(oracle: &SegmentOracle<'_>, s: &PointSequence, policy: SegmentPolicy) -> bool {
    let pts = s.points();
    let n = pts.len();
    // Longest first: a certified design fails on a length n-1 segment.
    for len in (1..n).rev().filter(|len| len % 3 == 0) {
        for start in 0..=n - len {
            let end = start + len - 1;
            if policy == SegmentPolicy::PrefixesAndSuffixes && start != 0 && end != n - 1 {
                continue;
            }
            if oracle.partitionable(&pts[start..=end]) {
                return false;
            }
        }
    }
    true
}

/// Result of the exhaustive search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SequenceOutcome {
    Found(PointSequence),
    /// The whole tree was explored without finding an admissible sequence.
    Exhausted,
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceSearch {
    pub outcome: SequenceOutcome,
    pub nodes: u64,
}

/// Depth-first search over prefixes, trying points in ascending order. A
/// prefix is cut as soon as it ends with a segment that every completion
/// keeps as a proper, checked segment and that is partitionable.
pub fn find_admissible_sequence(d: &Design, policy: SegmentPolicy, budget: u64) -> SequenceSearch {
    let n = d.order();
    let oracle = SegmentOracle::new(d);
    if n == 0 {
        return SequenceSearch { outcome: SequenceOutcome::Found(PointSequence(Vec::new())), nodes: 0 };
    }
    let mut prefix: Vec<Point> = Vec::with_capacity(n);
    let mut used = vec![false; n];
    // next candidate to try at each depth
    let mut next: Vec<usize> = vec![0];
    let mut nodes = 0u64;

    while let Some(cand) = next.last_mut() {
        let depth = prefix.len();
        let Some(p) = (*cand..n).find(|&p| !used[p]) else {
            next.pop();
            if let Some(q) = prefix.pop() {
                used[q as usize] = false;
            }
            continue;
        };
        *cand = p + 1;
        nodes += 1;
        if nodes > budget {
            return SequenceSearch { outcome: SequenceOutcome::BudgetExhausted, nodes: budget };
        }
        prefix.push(p as Point);
        if ends_badly(&oracle, &prefix, n, policy) {
            prefix.pop();
            continue;
        }
        if depth + 1 == n {
            return SequenceSearch {
                outcome: SequenceOutcome::Found(PointSequence(prefix)),
                nodes,
            };
        }
        used[p] = true;
        next.push(0);
    }
    SequenceSearch { outcome: SequenceOutcome::Exhausted, nodes }
}

/// Checks the segments ending at the last entry of `prefix` that are proper
/// and policy-relevant in every completion.
fn ends_badly(oracle: &SegmentOracle<'_>, prefix: &[Point], n: usize, policy: SegmentPolicy) -> bool {
    let end = prefix.len() - 1;
    let complete = prefix.len() == n;
    let starts: Box<dyn Iterator<Item = usize>> = match (complete, policy) {
        (true, _) => Box::new(1..=end),
        (false, SegmentPolicy::AllIntervals) => Box::new(0..=end),
        (false, SegmentPolicy::PrefixesAndSuffixes) => Box::new(0..1),
    };
    for start in starts {
        let seg = &prefix[start..=end];
        if seg.len().is_multiple_of(3) && seg.len() < n && oracle.partitionable(seg) {
            return true;
        }
    }
    false
}

/// Theorem-style certification failed: more than one point has no almost
/// parallel class (or the search ran out of budget on some point).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no almost parallel class found for points {missing:?}")]
pub struct CertifyFailure {
    pub missing: Vec<Point>,
    /// Certificate entries that were found.
    pub partial: NonseqCertificate,
}

pub fn theorem1_certify(d: &Design) -> Result<NonseqCertificate, CertifyFailure> {
    theorem1_certify_with(d, Execution::default(), &Solver::new())
}

/// Searches an almost parallel class missing each point, one exact-cover
/// instance per point. Succeeds when at most one point is left without one.
pub fn theorem1_certify_with(
    d: &Design,
    exec: Execution,
    solver: &Solver,
) -> Result<NonseqCertificate, CertifyFailure> {
    let n = d.order();
    let points: Vec<Point> = (0..n as Point).collect();
    let found = par::map(exec, &points, |&x| find_apc_with(solver, d, x));
    let mut cert = NonseqCertificate::new();
    let mut missing = Vec::new();
    for (x, r) in points.into_iter().zip(found) {
        match r {
            Search::Found(apc) => cert.insert(apc),
            Search::NotFound | Search::OutOfBudget => missing.push(x),
        }
    }
    if missing.len() > 1 {
        Err(CertifyFailure { missing, partial: cert })
    } else {
        Ok(cert)
    }
}

/// A proper segment of a sequence together with the class partitioning it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentWitness {
    /// Inclusive 0-based positions in the sequence.
    pub start: usize,
    pub end: usize,
    pub apc: AlmostParallelClass,
}

/// Refutes `s` with the certificate: if some class misses the first point it
/// partitions the suffix `x2..xn`, otherwise a class missing the last point
/// partitions the prefix `x1..x(n-1)`. `None` only if the certificate misses
/// both ends of `s`.
pub fn explain_nonsequenceable(
    c: &NonseqCertificate,
    s: &PointSequence,
) -> Option<SegmentWitness> {
    let pts = s.points();
    let (&first, &last) = (pts.first()?, pts.last()?);
    if let Some(apc) = c.get(first) {
        return Some(SegmentWitness { start: 1, end: pts.len() - 1, apc: apc.clone() });
    }
    c.get(last).map(|apc| SegmentWitness { start: 0, end: pts.len() - 2, apc: apc.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::verify_certificate;

    fn sts7() -> Design {
        Design::from_triples(
            7,
            &[[0, 1, 3], [1, 2, 4], [2, 3, 5], [3, 4, 6], [4, 5, 0], [5, 6, 1], [6, 0, 2]],
        )
        .unwrap()
    }

    #[test]
    fn sts7_abcdefg() {
        let d = sts7();
        for p in [SegmentPolicy::AllIntervals, SegmentPolicy::PrefixesAndSuffixes] {
            assert!(is_admissible(&d, &PointSequence::identity(7), p));
        }
    }

    #[test]
    fn single_block_sequences() {
        let d = Design::from_triples(4, &[[0, 1, 2]]).unwrap();
        assert!(!is_admissible(&d, &PointSequence::identity(4), SegmentPolicy::AllIntervals));
        let s = PointSequence::new(4, vec![0, 1, 3, 2]).unwrap();
        assert!(is_admissible(&d, &s, SegmentPolicy::AllIntervals));
        let d3 = Design::from_triples(3, &[[0, 1, 2]]).unwrap();
        assert!(is_admissible(&d3, &PointSequence::identity(3), SegmentPolicy::AllIntervals));
    }

    #[test]
    fn sequence_validation() {
        assert!(PointSequence::new(3, vec![0, 1]).is_err());
        assert!(PointSequence::new(3, vec![0, 1, 1]).is_err());
        assert!(PointSequence::new(3, vec![0, 1, 3]).is_err());
    }

    #[test]
    fn search_small_cases() {
        let r = find_admissible_sequence(&sts7(), SegmentPolicy::AllIntervals, DEFAULT_SEQUENCE_BUDGET);
        let SequenceOutcome::Found(s) = r.outcome else { panic!("{r:?}") };
        assert!(is_admissible(&sts7(), &s, SegmentPolicy::AllIntervals));

        let r = find_admissible_sequence(&Design::empty(3), SegmentPolicy::AllIntervals, 100);
        assert_eq!(r.outcome, SequenceOutcome::Found(PointSequence::identity(3)));

        let r = find_admissible_sequence(&sts7(), SegmentPolicy::AllIntervals, 1);
        assert_eq!(r.outcome, SequenceOutcome::BudgetExhausted);
    }

    #[test]
    fn isolated_point_goes_inside() {
        // Two disjoint blocks and an isolated point: the point must sit
        // strictly inside so that neither 6-segment is the union of blocks.
        let d = Design::from_triples(7, &[[0, 1, 2], [3, 4, 5]]).unwrap();
        assert!(theorem1_certify(&d).is_err());
        let r = find_admissible_sequence(&d, SegmentPolicy::AllIntervals, DEFAULT_SEQUENCE_BUDGET);
        let SequenceOutcome::Found(s) = r.outcome else { panic!("{r:?}") };
        assert!(is_admissible(&d, &s, SegmentPolicy::AllIntervals));
        let pos = s.points().iter().position(|&p| p == 6).unwrap();
        assert!(pos != 0 && pos != 6);
    }

    #[test]
    fn table_matches_exact_cover() {
        let d = sts7();
        let oracle = SegmentOracle::new(&d);
        assert!(oracle.table.is_some());
        for mask in 0u32..(1 << 7) {
            let seg: Vec<Point> = (0..7).filter(|i| mask >> i & 1 == 1).collect();
            assert_eq!(oracle.partitionable(&seg), segment_partitionable(&d, &seg), "{seg:?}");
        }
    }

    #[test]
    fn sts7_cannot_be_certified() {
        let err = theorem1_certify(&sts7()).unwrap_err();
        assert_eq!(err.missing, (0..7).collect::<Vec<_>>());
    }

    #[test]
    fn explain_uses_ends() {
        let d = crate::difference::develop(
            &crate::difference::parse_cyclic(&[[0, 2, 7], [0, 1, 4]]),
            crate::difference::GroupSpec::Cyclic(13),
        )
        .unwrap();
        let cert = theorem1_certify(&d).unwrap();
        assert!(verify_certificate(&d, &cert));
        let s = PointSequence::identity(13);
        let w = explain_nonsequenceable(&cert, &s).unwrap();
        assert_eq!((w.start, w.end, w.apc.missed), (1, 12, 0));
        assert!(segment_partitionable(&d, &s.points()[w.start..=w.end]));

        let mut rev: Vec<Point> = (0..13).rev().collect();
        let s = PointSequence::new(13, rev.clone()).unwrap();
        let mut partial = cert.clone();
        partial.entries.remove(&12);
        let w = explain_nonsequenceable(&partial, &s).unwrap();
        assert_eq!((w.start, w.end, w.apc.missed), (0, 11, 0));
        rev.swap(0, 5);
        assert!(explain_nonsequenceable(&cert, &PointSequence::new(13, rev).unwrap()).is_some());
    }
}
