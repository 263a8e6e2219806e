//! Brute-force oracles shared by the integration tests. Nothing here calls
//! into the solver or the validators under test.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use itertools::Itertools;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Every set of candidate ids whose subsets partition `0..universe`, by
/// include/exclude enumeration over the candidates in order.
pub fn brute_exact_covers(universe: usize, cands: &[(usize, Vec<usize>)]) -> BTreeSet<Vec<usize>> {
    fn go(i: usize, used: u64, full: u64, masks: &[(usize, u64)], chosen: &mut Vec<usize>, out: &mut BTreeSet<Vec<usize>>) {
        if i == masks.len() {
            if used == full {
                let mut c = chosen.clone();
                c.sort_unstable();
                out.insert(c);
            }
            return;
        }
        go(i + 1, used, full, masks, chosen, out);
        let (id, m) = masks[i];
        if used & m == 0 {
            chosen.push(id);
            go(i + 1, used | m, full, masks, chosen, out);
            chosen.pop();
        }
    }
    let masks: Vec<(usize, u64)> =
        cands.iter().map(|(id, s)| (*id, s.iter().fold(0u64, |m, &e| m | 1 << e))).collect();
    let mut out = BTreeSet::new();
    go(0, 0, (1u64 << universe) - 1, &masks, &mut Vec::new(), &mut out);
    out
}

/// Random instance: universe ≤ 12, at most 18 nonempty candidates.
pub fn random_instance(rng: &mut impl Rng) -> (usize, Vec<(usize, Vec<usize>)>) {
    let universe = rng.gen_range(1..=12);
    let k = rng.gen_range(0..=18);
    let cands = (0..k)
        .map(|id| {
            let size = rng.gen_range(1..=universe.min(4));
            let mut s: Vec<usize> = (0..universe).choose_multiple(rng, size);
            s.shuffle(rng);
            (id, s)
        })
        .collect();
    (universe, cands)
}

/// Number of blocks through every pair `{x < y}` of `0..n`.
pub fn pair_counts(n: usize, blocks: &[[u32; 3]]) -> HashMap<(u32, u32), usize> {
    let mut counts: HashMap<(u32, u32), usize> =
        (0..n as u32).array_combinations().map(|[x, y]| ((x, y), 0)).collect();
    for b in blocks {
        for [x, y] in b.iter().copied().array_combinations() {
            *counts.entry((x.min(y), x.max(y))).or_default() += 1;
        }
    }
    counts
}

pub fn is_sts(n: usize, blocks: &[[u32; 3]]) -> bool {
    let counts = pair_counts(n, blocks);
    counts.len() == n * (n - 1) / 2 && counts.values().all(|&c| c == 1)
}

/// Some subset of `blocks` lying inside `set` partitions it (all subsets tried).
pub fn brute_partitionable(blocks: &[[u32; 3]], set: &BTreeSet<u32>) -> bool {
    if !set.len().is_multiple_of(3) {
        return false;
    }
    let inside: Vec<&[u32; 3]> = blocks.iter().filter(|b| b.iter().all(|p| set.contains(p))).collect();
    let k = set.len() / 3;
    inside.iter().combinations(k).any(|chosen| {
        let covered: BTreeSet<u32> = chosen.iter().flat_map(|b| b.iter().copied()).collect();
        covered.len() == set.len()
    })
}

/// Points missed by no block-subset partitioning the other `n - 1` points.
pub fn brute_points_without_apc(n: usize, blocks: &[[u32; 3]]) -> Vec<u32> {
    (0..n as u32)
        .filter(|&x| !brute_partitionable(blocks, &(0..n as u32).filter(|&p| p != x).collect()))
        .collect()
}

/// Whether `seq` has no partitionable proper segment; `ends_only` restricts
/// to segments touching either end.
pub fn brute_admissible(blocks: &[[u32; 3]], seq: &[u32], ends_only: bool) -> bool {
    let n = seq.len();
    for i in 0..n {
        for j in i..n {
            if (i, j) == (0, n - 1) || (ends_only && i != 0 && j != n - 1) {
                continue;
            }
            if brute_partitionable(blocks, &seq[i..=j].iter().copied().collect()) {
                return false;
            }
        }
    }
    true
}

/// Whether any ordering of `0..n` is admissible, by trying all of them.
pub fn brute_sequenceable(n: usize, blocks: &[[u32; 3]], ends_only: bool) -> bool {
    (0..n as u32).permutations(n).any(|s| brute_admissible(blocks, &s, ends_only))
}

/// Random partial triple system: greedily adds random triples that repeat no pair.
pub fn random_psts(rng: &mut impl Rng, n: usize, max_blocks: usize) -> Vec<[u32; 3]> {
    let mut blocks: Vec<[u32; 3]> = Vec::new();
    let mut used = BTreeSet::new();
    for _ in 0..40 {
        if blocks.len() == max_blocks {
            break;
        }
        let mut t: Vec<u32> = (0..n as u32).choose_multiple(rng, 3);
        t.sort_unstable();
        let pairs = [(t[0], t[1]), (t[0], t[2]), (t[1], t[2])];
        if pairs.iter().all(|p| !used.contains(p)) {
            used.extend(pairs);
            blocks.push([t[0], t[1], t[2]]);
        }
    }
    blocks
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// The order-7 system with points a..g as 0..6.
pub const STS7: [[u32; 3]; 7] = [[0, 1, 3], [1, 2, 4], [2, 3, 5], [3, 4, 6], [0, 4, 5], [1, 5, 6], [0, 2, 6]];
