//! Exact cover by dancing links (Algorithm X), run iteratively with an
//! explicit stack and an optional node budget.
//!
//! Column choice is minimum remaining candidates, ties going to the lowest
//! element, so a fixed instance always yields the same solutions in the same
//! order.

use thiserror::Error;

use crate::design::{AlmostParallelClass, Block, Design, Point};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstanceError {
    #[error("candidate {id} is empty")]
    EmptyCandidate { id: usize },
    #[error("candidate {id} has element {element} outside 0..{universe}")]
    OutOfRange { id: usize, element: usize, universe: usize },
    #[error("candidate {id} repeats element {element}")]
    RepeatedElement { id: usize, element: usize },
}

/// Universe `0..universe_size` and candidate subsets, each with a caller id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactCoverInstance {
    universe_size: usize,
    candidates: Vec<(usize, Vec<usize>)>,
}

impl ExactCoverInstance {
    pub fn new(
        universe_size: usize,
        candidates: impl IntoIterator<Item = (usize, Vec<usize>)>,
    ) -> Result<Self, InstanceError> {
        let mut out = Vec::new();
        for (id, mut subset) in candidates {
            if subset.is_empty() {
                return Err(InstanceError::EmptyCandidate { id });
            }
            subset.sort_unstable();
            for w in subset.windows(2) {
                if w[0] == w[1] {
                    return Err(InstanceError::RepeatedElement { id, element: w[0] });
                }
            }
            if let Some(&element) = subset.last().filter(|&&e| e >= universe_size) {
                return Err(InstanceError::OutOfRange { id, element, universe: universe_size });
            }
            out.push((id, subset));
        }
        Ok(ExactCoverInstance { universe_size, candidates: out })
    }

    pub fn universe_size(&self) -> usize {
        self.universe_size
    }

    pub fn candidates(&self) -> &[(usize, Vec<usize>)] {
        &self.candidates
    }
}

/// Ids of the chosen candidates, in ascending order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExactCoverSolution {
    pub chosen: Vec<usize>,
}

/// The search expanded more nodes than its budget allowed. Carries whatever
/// solutions were found before stopping.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("node budget of {budget} exhausted after {} solutions", found.len())]
pub struct BudgetExceeded {
    pub budget: u64,
    pub found: Vec<ExactCoverSolution>,
}

/// Tri-state outcome for searches that run under a budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Search<T> {
    Found(T),
    NotFound,
    OutOfBudget,
}

impl<T> Search<T> {
    pub fn found(self) -> Option<T> {
        match self {
            Search::Found(t) => Some(t),
            _ => None,
        }
    }
}

/// Dancing-links matrix. Node 0 is the root, nodes `1..=columns` are column
/// headers, and the rest are option nodes.
struct Links {
    left: Vec<usize>,
    right: Vec<usize>,
    up: Vec<usize>,
    down: Vec<usize>,
    col: Vec<usize>,
    row: Vec<usize>,
    size: Vec<usize>,
}

impl Links {
    fn build(inst: &ExactCoverInstance) -> Self {
        let cols = inst.universe_size;
        let total = 1 + cols + inst.candidates.iter().map(|(_, s)| s.len()).sum::<usize>();
        let mut l = Links {
            left: Vec::with_capacity(total),
            right: Vec::with_capacity(total),
            up: Vec::with_capacity(total),
            down: Vec::with_capacity(total),
            col: Vec::with_capacity(total),
            row: Vec::with_capacity(total),
            size: vec![0; cols + 1],
        };
        for i in 0..=cols {
            l.left.push(if i == 0 { cols } else { i - 1 });
            l.right.push(if i == cols { 0 } else { i + 1 });
            l.up.push(i);
            l.down.push(i);
            l.col.push(i);
            l.row.push(usize::MAX);
        }
        for (r, (_, subset)) in inst.candidates.iter().enumerate() {
            let first = l.left.len();
            let k = subset.len();
            for (j, &e) in subset.iter().enumerate() {
                let node = first + j;
                let c = e + 1;
                l.left.push(if j == 0 { first + k - 1 } else { node - 1 });
                l.right.push(if j + 1 == k { first } else { node + 1 });
                let last = l.up[c];
                l.up.push(last);
                l.down.push(c);
                l.down[last] = node;
                l.up[c] = node;
                l.col.push(c);
                l.row.push(r);
                l.size[c] += 1;
            }
        }
        l
    }

    fn cover(&mut self, c: usize) {
        let (lc, rc) = (self.left[c], self.right[c]);
        self.right[lc] = rc;
        self.left[rc] = lc;
        let mut i = self.down[c];
        while i != c {
            let mut j = self.right[i];
            while j != i {
                let (uj, dj) = (self.up[j], self.down[j]);
                self.down[uj] = dj;
                self.up[dj] = uj;
                self.size[self.col[j]] -= 1;
                j = self.right[j];
            }
            i = self.down[i];
        }
    }

    fn uncover(&mut self, c: usize) {
        let mut i = self.up[c];
        while i != c {
            let mut j = self.left[i];
            while j != i {
                self.size[self.col[j]] += 1;
                let (uj, dj) = (self.up[j], self.down[j]);
                self.down[uj] = j;
                self.up[dj] = j;
                j = self.left[j];
            }
            i = self.up[i];
        }
        let (lc, rc) = (self.left[c], self.right[c]);
        self.right[lc] = c;
        self.left[rc] = c;
    }

    fn cover_row_others(&mut self, r: usize) {
        let mut j = self.right[r];
        while j != r {
            self.cover(self.col[j]);
            j = self.right[j];
        }
    }

    fn uncover_row_others(&mut self, r: usize) {
        let mut j = self.left[r];
        while j != r {
            self.uncover(self.col[j]);
            j = self.left[j];
        }
    }

    /// Column with fewest remaining options; first in header order on ties.
    fn choose(&self) -> usize {
        let mut best = self.right[0];
        let mut c = best;
        while c != 0 {
            if self.size[c] < self.size[best] {
                best = c;
                if self.size[c] == 0 {
                    break;
                }
            }
            c = self.right[c];
        }
        best
    }
}

/// Configurable exact-cover search.
#[derive(Debug, Clone, Copy)]
pub struct Solver {
    budget: Option<u64>,
}

impl Default for Solver {
    fn default() -> Self {
        Solver::new()
    }
}

impl Solver {
    pub fn new() -> Self {
        Solver { budget: None }
    }

    /// Caps the number of option selections (search nodes).
    pub fn with_budget(budget: u64) -> Self {
        Solver { budget: Some(budget) }
    }

    /// Up to `limit` solutions, in search order.
    pub fn solve(
        &self,
        inst: &ExactCoverInstance,
        limit: usize,
    ) -> Result<Vec<ExactCoverSolution>, BudgetExceeded> {
        let mut links = Links::build(inst);
        let mut found = Vec::new();
        if limit == 0 {
            return Ok(found);
        }
        let mut stack: Vec<usize> = Vec::new();
        let mut nodes = 0u64;

        'enter: loop {
            if links.right[0] == 0 {
                let mut chosen: Vec<usize> = stack
                    .iter()
                    .map(|&r| inst.candidates[links.row[r]].0)
                    .collect();
                chosen.sort_unstable();
                found.push(ExactCoverSolution { chosen });
                if found.len() >= limit {
                    return Ok(found);
                }
            } else {
                let c = links.choose();
                if links.size[c] > 0 {
                    links.cover(c);
                    let r = links.down[c];
                    nodes += 1;
                    if self.budget.is_some_and(|b| nodes > b) {
                        return Err(BudgetExceeded { budget: self.budget.unwrap(), found });
                    }
                    stack.push(r);
                    links.cover_row_others(r);
                    continue 'enter;
                }
            }
            // backtrack
            while let Some(r) = stack.pop() {
                links.uncover_row_others(r);
                let c = links.col[r];
                let next = links.down[r];
                if next != c {
                    nodes += 1;
                    if self.budget.is_some_and(|b| nodes > b) {
                        return Err(BudgetExceeded { budget: self.budget.unwrap(), found });
                    }
                    stack.push(next);
                    links.cover_row_others(next);
                    continue 'enter;
                }
                links.uncover(c);
            }
            return Ok(found);
        }
    }

    /// Whether any exact cover exists, stopping at the first one.
    pub fn exists(&self, inst: &ExactCoverInstance) -> Search<()> {
        match self.solve(inst, 1) {
            Ok(s) if s.is_empty() => Search::NotFound,
            Ok(_) => Search::Found(()),
            Err(_) => Search::OutOfBudget,
        }
    }
}

/// Up to `limit` solutions with no node budget.
pub fn solve(inst: &ExactCoverInstance, limit: usize) -> Vec<ExactCoverSolution> {
    Solver::new()
        .solve(inst, limit)
        .expect("unbudgeted search cannot exceed its budget")
}

pub fn exists_cover(inst: &ExactCoverInstance) -> bool {
    matches!(Solver::new().exists(inst), Search::Found(()))
}

/// Exact-cover instance whose solutions are the almost parallel classes of
/// `d` missing `missed`. Candidate ids index `blocks`, the canonical block order.
fn apc_instance(blocks: &[Block], n: usize, missed: Point) -> ExactCoverInstance {
    let slot = |p: Point| if p < missed { p as usize } else { p as usize - 1 };
    let candidates = blocks
        .iter()
        .enumerate()
        .filter(|(_, b)| !b.contains(missed))
        .map(|(i, b)| (i, b.members().iter().map(|&p| slot(p)).collect()));
    ExactCoverInstance::new(n - 1, candidates).expect("blocks of a design are well formed")
}

/// Searches `d` for an almost parallel class missing `missed`, within `solver`'s budget.
pub fn find_apc_with(solver: &Solver, d: &Design, missed: Point) -> Search<AlmostParallelClass> {
    let n = d.order();
    if (missed as usize) >= n || n == 0 || !(n - 1).is_multiple_of(3) {
        return Search::NotFound;
    }
    let canonical = d.canonical();
    let blocks = canonical.blocks();
    if blocks.iter().any(|b| b.max_point() as usize >= n) {
        return Search::NotFound;
    }
    match solver.solve(&apc_instance(blocks, n, missed), 1) {
        Ok(mut sols) => match sols.pop() {
            Some(sol) => Search::Found(AlmostParallelClass::new(
                missed,
                sol.chosen.iter().map(|&i| blocks[i]).collect(),
            )),
            None => Search::NotFound,
        },
        Err(_) => Search::OutOfBudget,
    }
}

/// An almost parallel class of `d` missing `missed`, if one exists.
pub fn find_apc(d: &Design, missed: Point) -> Option<AlmostParallelClass> {
    find_apc_with(&Solver::new(), d, missed).found()
}

/// Whether blocks of `d` lying inside `segment` can partition it.
pub fn segment_partitionable(d: &Design, segment: &[Point]) -> bool {
    if !segment.len().is_multiple_of(3) {
        return false;
    }
    if segment.is_empty() {
        return true;
    }
    let mut slot = vec![usize::MAX; d.order()];
    for (i, &p) in segment.iter().enumerate() {
        match slot.get_mut(p as usize) {
            Some(s) => *s = i,
            None => return false,
        }
    }
    let candidates = d
        .canonical()
        .blocks()
        .iter()
        .enumerate()
        .filter(|(_, b)| {
            b.members()
                .iter()
                .all(|&p| slot.get(p as usize).is_some_and(|&s| s != usize::MAX))
        })
        .map(|(i, b)| (i, b.members().iter().map(|&p| slot[p as usize]).collect()))
        .collect::<Vec<_>>();
    let inst = ExactCoverInstance::new(segment.len(), candidates)
        .expect("segment points are distinct");
    exists_cover(&inst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::verify_apc;

    fn inst(u: usize, c: &[&[usize]]) -> ExactCoverInstance {
        ExactCoverInstance::new(u, c.iter().enumerate().map(|(i, s)| (i, s.to_vec()))).unwrap()
    }

    #[test]
    fn identity_cover() {
        let s = solve(&inst(3, &[&[0, 1, 2]]), 10);
        assert_eq!(s, vec![ExactCoverSolution { chosen: vec![0] }]);
    }

    #[test]
    fn two_covers_of_two_points() {
        let mut s = solve(&inst(2, &[&[0], &[0, 1], &[1]]), 10);
        s.sort();
        assert_eq!(
            s,
            vec![
                ExactCoverSolution { chosen: vec![0, 2] },
                ExactCoverSolution { chosen: vec![1] }
            ]
        );
    }

    #[test]
    fn overlapping_pairs_have_no_cover() {
        assert!(solve(&inst(3, &[&[0, 1], &[1, 2]]), 10).is_empty());
    }

    #[test]
    fn empty_universe_and_uncoverable_point() {
        assert!(exists_cover(&inst(0, &[])));
        assert!(!exists_cover(&inst(1, &[])));
    }

    #[test]
    fn limit_is_respected() {
        let i = inst(2, &[&[0], &[0, 1], &[1]]);
        assert_eq!(solve(&i, 1).len(), 1);
        assert!(solve(&i, 0).is_empty());
    }

    #[test]
    fn bad_instances_are_rejected() {
        assert!(matches!(
            ExactCoverInstance::new(2, [(7, vec![])]),
            Err(InstanceError::EmptyCandidate { id: 7 })
        ));
        assert!(matches!(
            ExactCoverInstance::new(2, [(0, vec![0, 2])]),
            Err(InstanceError::OutOfRange { .. })
        ));
        assert!(matches!(
            ExactCoverInstance::new(2, [(0, vec![1, 1])]),
            Err(InstanceError::RepeatedElement { .. })
        ));
    }

    #[test]
    fn budget_is_reported_separately() {
        // 6 points, all pairs: 15 perfect matchings, many nodes.
        let mut c = Vec::new();
        for a in 0..6 {
            for b in a + 1..6 {
                c.push((c.len(), vec![a, b]));
            }
        }
        let i = ExactCoverInstance::new(6, c).unwrap();
        assert_eq!(solve(&i, 100).len(), 15);
        let err = Solver::with_budget(3).solve(&i, 100).unwrap_err();
        assert_eq!(err.budget, 3);
        assert!(matches!(Solver::with_budget(1).exists(&inst(3, &[&[0], &[1], &[2]])), Search::OutOfBudget));
    }

    fn sts7() -> Design {
        Design::from_triples(
            7,
            &[[0, 1, 3], [1, 2, 4], [2, 3, 5], [3, 4, 6], [4, 5, 0], [5, 6, 1], [6, 0, 2]],
        )
        .unwrap()
    }

    #[test]
    fn apc_in_single_block_design() {
        let d = Design::from_triples(4, &[[0, 1, 2]]).unwrap();
        let apc = find_apc(&d, 3).unwrap();
        assert_eq!(apc.missed, 3);
        assert_eq!(apc.blocks, vec![Block::new(0, 1, 2).unwrap()]);
        assert!(find_apc(&d, 0).is_none());
    }

    #[test]
    fn sts7_has_no_apc() {
        let d = sts7();
        for x in 0..7 {
            assert!(find_apc(&d, x).is_none());
        }
    }

    #[test]
    fn sts13_apc() {
        let d = crate::difference::develop(
            &crate::difference::parse_cyclic(&[[0, 2, 7], [0, 1, 4]]),
            crate::difference::GroupSpec::Cyclic(13),
        )
        .unwrap();
        for x in 0..13 {
            let apc = find_apc(&d, x).unwrap();
            assert!(verify_apc(&d, &apc));
        }
    }

    #[test]
    fn sts7_segments() {
        let d = sts7();
        assert!(segment_partitionable(&d, &[0, 1, 3]));
        assert!(!segment_partitionable(&d, &[0, 1, 2]));
        assert!(!segment_partitionable(&d, &[0, 1, 2, 3]));
        assert!(segment_partitionable(&d, &[]));
    }
}
