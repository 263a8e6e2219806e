mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::seq::{IteratorRandom, SliceRandom};
use rand::Rng;
use sts_nonseq::design::verify_apc;
use sts_nonseq::difference::{
    develop, difference_coverage, translate_apc, BaseBlock, GroupSpec,
};
use sts_nonseq::exact_cover::{segment_partitionable, solve, ExactCoverInstance};
use sts_nonseq::gdd::{bose_gdd, bose_product, inflate, td3};
use sts_nonseq::sequencing::SegmentOracle;
use sts_nonseq::*;

use common::*;

fn triples(d: &Design) -> Vec<[u32; 3]> {
    d.blocks().iter().map(|b| b.members()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn solve_matches_subset_enumeration(seed in any::<u64>()) {
        let (universe, cands) = random_instance(&mut rng(seed));
        let inst = ExactCoverInstance::new(universe, cands.clone()).unwrap();
        let got: BTreeSet<Vec<usize>> = solve(&inst, usize::MAX).into_iter().map(|s| s.chosen).collect();
        prop_assert_eq!(got, brute_exact_covers(universe, &cands));
    }

    #[test]
    fn validators_match_pair_counts(seed in any::<u64>(), n in 3usize..16) {
        let mut r = rng(seed);
        let mut blocks = random_psts(&mut r, n, 40);
        if r.gen_bool(0.3) && !blocks.is_empty() {
            // force a repeated pair
            let b = blocks[0];
            let other = (0..n as u32).find(|p| !b.contains(p));
            if let Some(p) = other {
                let mut t = [b[0], b[1], p];
                t.sort_unstable();
                blocks.push(t);
            }
        }
        let d = Design::from_triples(n, &blocks).unwrap();
        let counts = pair_counts(n, &blocks);
        prop_assert_eq!(validate_psts(&d).is_ok(), counts.values().all(|&c| c <= 1));
        prop_assert_eq!(validate_sts(&d).is_ok(), is_sts(n, &blocks));
    }

    #[test]
    fn canonicalization_keeps_verdicts(seed in any::<u64>()) {
        let mut r = rng(seed);
        let c = base_case(*[13usize, 19].choose(&mut r).unwrap()).unwrap();
        let mut blocks = triples(&c.design);
        if r.gen_bool(0.5) {
            blocks.pop();
        }
        blocks.shuffle(&mut r);
        let rotated: Vec<[u32; 3]> = blocks.iter().map(|t| {
            let mut t = *t;
            t.rotate_left(r.gen_range(0..3));
            t
        }).collect();
        let a = Design::from_triples(c.design.order(), &blocks).unwrap();
        let b = Design::from_triples(c.design.order(), &rotated).unwrap();
        prop_assert_eq!(validate_sts(&a), validate_sts(&b));
        prop_assert_eq!(validate_psts(&a), validate_psts(&b));
        prop_assert_eq!(validate_sts(&a.canonical()), validate_sts(&a));
        prop_assert_eq!(verify_certificate(&a, &c.certificate), verify_certificate(&b, &c.certificate));
    }

    #[test]
    fn develop_is_sts_iff_exact_differences(seed in any::<u64>(), n in prop::sample::select(vec![13u32, 19, 31])) {
        let mut r = rng(seed);
        let g = GroupSpec::Cyclic(n);
        let good: Vec<[u32; 3]> = match n {
            13 => vec![[0, 2, 7], [0, 1, 4]],
            19 => vec![[0, 1, 6], [0, 2, 10], [0, 3, 7]],
            _ => vec![[0, 5, 11], [0, 4, 12], [0, 3, 13], [0, 2, 9], [0, 1, 15]],
        };
        let mut base = good.clone();
        if r.gen_bool(0.7) {
            // corrupt one element
            let i = r.gen_range(0..base.len());
            let j = r.gen_range(0..3);
            base[i][j] = r.gen_range(0..n);
        }
        let Ok(base) = base.iter().map(|&b| BaseBlock::new(g, b)).collect::<Result<Vec<_>, _>>() else {
            return Ok(());
        };
        let exact = difference_coverage(&base, g).is_exact();
        let sts = develop(&base, g).map(|d| validate_sts(&d).is_ok()).unwrap_or(false);
        prop_assert_eq!(exact, sts);
    }

    #[test]
    fn inflate_keeps_gdds_valid(u in prop::sample::select(vec![3usize, 5, 7, 9]), w in 1usize..=4) {
        let g = inflate(&bose_gdd(u).unwrap(), w);
        prop_assert!(validate_gdd(&g).is_ok());
        prop_assert_eq!(g.design.size() * 3, g.group_type.cross_pairs());
        let t = inflate(&td3(u), w);
        prop_assert!(validate_gdd(&t).is_ok());
    }

    #[test]
    fn sequencer_matches_factorial_search(seed in any::<u64>(), n in 3usize..=8) {
        let mut r = rng(seed);
        let k = r.gen_range(1..=6);
        let blocks = random_psts(&mut r, n, k);
        let d = Design::from_triples(n, &blocks).unwrap();
        for (policy, ends) in [(SegmentPolicy::AllIntervals, false), (SegmentPolicy::PrefixesAndSuffixes, true)] {
            let got = find_admissible_sequence(&d, policy, u64::MAX);
            let expected = brute_sequenceable(n, &blocks, ends);
            match got.outcome {
                SequenceOutcome::Found(s) => {
                    prop_assert!(expected);
                    prop_assert!(brute_admissible(&blocks, s.points(), ends));
                    prop_assert!(is_admissible(&d, &s, policy));
                }
                SequenceOutcome::Exhausted => prop_assert!(!expected),
                SequenceOutcome::BudgetExhausted => prop_assert!(false, "unbounded search stopped"),
            }
        }
    }

    #[test]
    fn policy_monotonicity(seed in any::<u64>(), n in 4usize..=9) {
        let mut r = rng(seed);
        let blocks = random_psts(&mut r, n, 8);
        let d = Design::from_triples(n, &blocks).unwrap();
        let mut pts: Vec<u32> = (0..n as u32).collect();
        pts.shuffle(&mut r);
        let s = PointSequence::new(n, pts).unwrap();
        if is_admissible(&d, &s, SegmentPolicy::AllIntervals) {
            prop_assert!(is_admissible(&d, &s, SegmentPolicy::PrefixesAndSuffixes));
        }
    }
}

use sts_nonseq::sequencing::SequenceOutcome;

#[test]
fn bose_quasigroup_laws() {
    for u in (3..=99).step_by(2) {
        for x in 0..u {
            assert_eq!(bose_product(u, x, x), x, "idempotent, u = {u}");
            let row: BTreeSet<usize> = (0..u).map(|y| bose_product(u, x, y)).collect();
            assert_eq!(row.len(), u, "latin row, u = {u}");
            for y in 0..u {
                assert_eq!(bose_product(u, x, y), bose_product(u, y, x), "commutative, u = {u}");
            }
        }
    }
}

#[test]
fn translates_are_a_bijection_of_classes() {
    for n in [13usize, 19, 25, 31, 43] {
        let sys = constructions::base_system(n).unwrap();
        let d = base_case(n).unwrap().design;
        let mut missed = BTreeSet::new();
        for t in sys.group.elements() {
            let apc = translate_apc(&sys.apc, t, sys.group);
            assert!(verify_apc(&d, &apc), "n = {n}, t = {t}");
            assert_eq!(apc.missed, t);
            missed.insert(apc.missed);
        }
        assert_eq!(missed.len(), n);
    }
}

#[test]
fn found_classes_always_verify() {
    for n in [13usize, 19, 25, 31, 43] {
        let d = base_case(n).unwrap().design;
        for x in 0..n as u32 {
            let apc = exact_cover::find_apc(&d, x).expect("base systems have a class at every point");
            assert!(verify_apc(&d, &apc));
        }
    }
}

#[test]
fn oracle_table_matches_exact_cover_on_random_segments() {
    let mut r = rng(7);
    let d = base_case(19).unwrap().design;
    let oracle = SegmentOracle::new(&d);
    for _ in 0..2000 {
        let k = r.gen_range(1..=19);
        let seg: Vec<u32> = (0..19).choose_multiple(&mut r, k);
        assert_eq!(oracle.partitionable(&seg), segment_partitionable(&d, &seg), "{seg:?}");
    }
}

/// Certified designs reject random orderings, and the refutation names a
/// proper segment that really is partitioned.
#[test]
fn certificates_refute_random_sequences() {
    let mut r = rng(11);
    for c in [base_case(13).unwrap(), base_case(19).unwrap(), theorem_a(37, &Default::default()).unwrap()] {
        let d = &c.design;
        let n = d.order();
        let oracle = SegmentOracle::new(d);
        for _ in 0..1000 {
            let mut pts: Vec<u32> = (0..n as u32).collect();
            pts.shuffle(&mut r);
            let s = PointSequence::new(n, pts).unwrap();
            for p in [SegmentPolicy::AllIntervals, SegmentPolicy::PrefixesAndSuffixes] {
                assert!(!sequencing::is_admissible_with(&oracle, &s, p));
            }
            let w = explain_nonsequenceable(&c.certificate, &s).expect("certificate covers an end");
            assert!(w.end - w.start + 1 == n - 1, "proper segment");
            let seg = &s.points()[w.start..=w.end];
            assert!(verify_apc(d, &w.apc));
            let covered: BTreeSet<u32> = w.apc.blocks.iter().flat_map(|b| b.members()).collect();
            assert_eq!(covered, seg.iter().copied().collect::<BTreeSet<_>>());
            assert!(segment_partitionable(d, seg));
        }
    }
}

/// Pairs inside a group plus the fill point come from the fill systems, pairs
/// across groups from the GDD.
#[test]
fn fill_construction_is_consistent() {
    for n in [37usize, 43, 49, 61, 67] {
        let c = theorem_a(n, &Default::default()).unwrap();
        let constructions::Provenance::TheoremA { groups, fill_point, .. } = &c.provenance else {
            // base orders have no fill
            continue;
        };
        let mut group_of = vec![usize::MAX; n];
        for (i, g) in groups.iter().enumerate() {
            for &p in g {
                group_of[p as usize] = i;
            }
        }
        assert_eq!(group_of[*fill_point as usize], usize::MAX);
        for b in c.design.blocks() {
            let gs: Vec<usize> = b.members().iter().map(|&p| group_of[p as usize]).filter(|&g| g != usize::MAX).collect();
            let distinct: BTreeSet<usize> = gs.iter().copied().collect();
            // a fill block stays within one group; a GDD block meets three
            assert!(distinct.len() == 1 || (distinct.len() == 3 && gs.len() == 3), "n = {n}, block {b:?}");
        }
        assert!(is_sts(n, &triples(&c.design)));
    }
}
