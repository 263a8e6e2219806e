//! Certified nonsequenceable systems: the five cyclic/product base systems,
//! the recursive fill construction over 3-GDDs for every `n = 1 mod 6`
//! (`n != 7`), and partial systems obtained by deleting blocks of one
//! almost parallel class.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::{
    check_certificate, validate_sts, AlmostParallelClass, Block, Design, Gdd, GroupType,
    NonseqCertificate, Point,
};
use crate::difference::{
    complete_base_blocks, develop, translate_apc, BaseBlock, DifferenceError, GroupSpec,
};
use crate::exact_cover::Solver;
use crate::gdd::{build_gdd, GddCache, GddError, GddRequest, GddStrategy};
use crate::par::Execution;
use crate::sequencing::theorem1_certify_with;

#[derive(Debug, Error)]
pub enum ConstructionError {
    #[error("no base system of order {0}; base orders are 13, 19, 25, 31, 43")]
    NoBaseCase(usize),
    #[error("a nonsequenceable STS(7) does not exist")]
    OrderSeven,
    #[error("order {0} is not 1 mod 6")]
    BadOrder(usize),
    #[error("a = {a} is outside 0..={max}")]
    RemovalOutOfRange { a: usize, max: usize },
    #[error("point {x0} is not a point of the order-{n} system")]
    BadPoint { x0: Point, n: usize },
    #[error(transparent)]
    Difference(#[from] DifferenceError),
    #[error(transparent)]
    Gdd(#[from] GddError),
    #[error("certification failed: no almost parallel class for points {0:?}")]
    CertificationFailed(Vec<Point>),
    #[error("internal check failed: {0}")]
    Unverified(String),
}

/// Parity of `k = (n - 1) / 6` in the fill construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

/// How a certified design was obtained.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    BaseCase {
        n: usize,
    },
    /// Fill construction on a GDD of type `12^u` (even) or `12^u 18^1` (odd).
    TheoremA {
        n: usize,
        u: usize,
        parity: Parity,
        gdd_strategy: GddStrategy,
        /// Groups of the GDD; the last one is the 18-group in the odd case.
        groups: Vec<Vec<Point>>,
        fill_point: Point,
    },
    Corollary {
        n: usize,
        a: usize,
        x0: Point,
        removed: Vec<Block>,
        base: Box<Provenance>,
    },
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::BaseCase { n } => write!(f, "base-case({n})"),
            Provenance::TheoremA { n, u, parity, gdd_strategy, .. } => {
                let ty = match parity {
                    Parity::Even => format!("12^{u}"),
                    Parity::Odd => format!("12^{u}+18^1"),
                };
                write!(f, "theorem-a(n={n},u={u},gdd={ty},via={gdd_strategy})")
            }
            Provenance::Corollary { n, a, x0, base, .. } => {
                write!(f, "corollary(n={n},a={a},x0={x0}) from {base}")
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct CertifiedDesign {
    pub design: Design,
    pub certificate: NonseqCertificate,
    pub provenance: Provenance,
}

/// Base blocks and a listed almost parallel class (missing 0) of one base system.
pub struct BaseSystem {
    pub order: usize,
    pub group: GroupSpec,
    pub base: Vec<BaseBlock>,
    pub apc: AlmostParallelClass,
}

fn blocks_of(triples: &[[Point; 3]]) -> Vec<Block> {
    triples.iter().map(|&t| Block::try_from(t).expect("distinct")).collect()
}

fn cyclic_system(n: u32, base: &[[Point; 3]], apc: &[[Point; 3]]) -> BaseSystem {
    let g = GroupSpec::Cyclic(n);
    BaseSystem {
        order: n as usize,
        group: g,
        base: base.iter().map(|&b| BaseBlock::new(g, b).expect("valid base block")).collect(),
        apc: AlmostParallelClass::new(0, blocks_of(apc)),
    }
}

/// The listed data for orders 13, 19, 25, 31, 43. For 25 only the three
/// listed base blocks are returned; [`base_case`] completes them.
pub fn base_system(n: usize) -> Result<BaseSystem, ConstructionError> {
    Ok(match n {
        13 => cyclic_system(13, &[[0, 2, 7], [0, 1, 4]], &[[7, 8, 11], [3, 5, 10], [2, 4, 9], [1, 6, 12]]),
        19 => cyclic_system(
            19,
            &[[0, 1, 6], [0, 2, 10], [0, 3, 7]],
            &[[1, 3, 11], [2, 15, 16], [4, 17, 18], [5, 8, 12], [6, 9, 13], [7, 10, 14]],
        ),
        25 => {
            let g = GroupSpec::Product(5, 5);
            let pairs = |t: [(u32, u32); 3]| t.map(|(x, y)| g.encode(x, y));
            let base = [
                [(0, 0), (0, 1), (2, 3)],
                [(0, 0), (1, 2), (2, 0)],
                [(0, 0), (1, 0), (3, 1)],
            ];
            let apc = [
                [(0, 1), (0, 2), (2, 4)],
                [(1, 0), (3, 2), (1, 4)],
                [(1, 1), (4, 1), (0, 3)],
                [(2, 0), (2, 3), (3, 4)],
                [(2, 1), (2, 2), (4, 4)],
                [(3, 0), (1, 2), (1, 3)],
                [(3, 1), (4, 2), (3, 3)],
                [(4, 0), (4, 3), (0, 4)],
            ];
            BaseSystem {
                order: 25,
                group: g,
                base: base
                    .iter()
                    .map(|&b| BaseBlock::from_pairs(g, b).expect("valid base block"))
                    .collect(),
                apc: AlmostParallelClass::new(0, blocks_of(&apc.map(pairs))),
            }
        }
        31 => cyclic_system(
            31,
            &[[0, 5, 11], [0, 4, 12], [0, 3, 13], [0, 2, 9], [0, 1, 15]],
            &[
                [11, 15, 23],
                [10, 26, 27],
                [9, 14, 20],
                [8, 13, 19],
                [7, 25, 28],
                [5, 21, 22],
                [4, 24, 29],
                [3, 6, 16],
                [2, 12, 30],
                [1, 17, 18],
            ],
        ),
        43 => cyclic_system(
            43,
            &[[0, 1, 16], [0, 2, 14], [0, 3, 11], [0, 4, 37], [0, 5, 25], [0, 7, 24], [0, 9, 22]],
            &[
                [14, 15, 30],
                [1, 28, 29],
                [2, 20, 25],
                [3, 23, 41],
                [4, 33, 35],
                [5, 34, 36],
                [6, 19, 40],
                [7, 39, 42],
                [8, 26, 31],
                [9, 27, 32],
                [10, 37, 38],
                [11, 17, 21],
                [12, 18, 22],
                [13, 16, 24],
            ],
        ),
        other => return Err(ConstructionError::NoBaseCase(other)),
    })
}

fn ensure(cond: bool, what: impl FnOnce() -> String) -> Result<(), ConstructionError> {
    if cond {
        Ok(())
    } else {
        Err(ConstructionError::Unverified(what()))
    }
}

/// A base system developed over its group (completed for order 25), with a
/// certificate made of all translates of the listed class.
pub fn base_case(n: usize) -> Result<CertifiedDesign, ConstructionError> {
    let sys = base_system(n)?;
    let mut base = sys.base.clone();
    base.extend(complete_base_blocks(&sys.base, sys.group)?);
    let design = develop(&base, sys.group)?;
    let certificate: NonseqCertificate = sys
        .group
        .elements()
        .map(|t| translate_apc(&sys.apc, t, sys.group))
        .collect();
    let out = CertifiedDesign { design, certificate, provenance: Provenance::BaseCase { n } };
    check_full(&out)?;
    Ok(out)
}

fn check_full(c: &CertifiedDesign) -> Result<(), ConstructionError> {
    let n = c.design.order();
    let report = validate_sts(&c.design);
    ensure(report.is_ok(), || format!("STS({n}): {report}"))?;
    let check = check_certificate(&c.design, &c.certificate);
    ensure(check.is_ok() && check.entries == n, || format!("certificate of STS({n}): {check:?}"))
}

/// Knobs for the fill construction.
#[derive(Debug, Clone, Default)]
pub struct BuildOptions {
    pub seed: u64,
    pub cache: Option<GddCache>,
}

/// Copies `sys` onto `group ∪ {fill}`: local point `i < |group|` goes to the
/// `i`-th smallest member of `group`, the last local point to `fill`.
fn relabel(sys: &CertifiedDesign, group: &[Point], fill: Point) -> (Vec<Block>, NonseqCertificate) {
    let mut sorted = group.to_vec();
    sorted.sort_unstable();
    let map = |p: Point| sorted.get(p as usize).copied().unwrap_or(fill);
    let blocks = sys.design.blocks().iter().map(|b| b.map(map)).collect();
    let cert = sys.certificate.classes().map(|apc| apc.map(map)).collect();
    (blocks, cert)
}

/// A nonsequenceable STS(n) for `n = 1 mod 6`, `n != 7`, with a certificate
/// holding a class for every point.
pub fn theorem_a(n: usize, opts: &BuildOptions) -> Result<CertifiedDesign, ConstructionError> {
    if n == 7 {
        return Err(ConstructionError::OrderSeven);
    }
    if n % 6 != 1 {
        return Err(ConstructionError::BadOrder(n));
    }
    let k = (n - 1) / 6;
    let (u, parity) = if k.is_multiple_of(2) { (k / 2, Parity::Even) } else { ((k - 3) / 2, Parity::Odd) };
    match (parity, u) {
        (Parity::Even, 1) => return base_case(13),
        (Parity::Even, 2) => return base_case(25),
        (Parity::Odd, 0) => return base_case(19),
        (Parity::Odd, 1) => return base_case(31),
        (Parity::Odd, 2) => return base_case(43),
        _ => {}
    }
    let group_type = match parity {
        Parity::Even => GroupType::uniform(12, u),
        Parity::Odd => GroupType::new([(12, u), (18, 1)]),
    }
    .expect("positive sizes");
    let built = build_gdd(&GddRequest::new(group_type, opts.seed), opts.cache.as_ref())?;
    let out = fill(n, u, parity, built.gdd, built.strategy)?;
    check_full(&out)?;
    Ok(out)
}

/// Adjoins the point `n - 1` to every group and places a relabeled base
/// system (13 or 19 points) on each group plus that point.
fn fill(
    n: usize,
    u: usize,
    parity: Parity,
    gdd: Gdd,
    strategy: GddStrategy,
) -> Result<CertifiedDesign, ConstructionError> {
    let x = (n - 1) as Point;
    ensure(gdd.design.order() + 1 == n, || format!("GDD on {} points for n = {n}", gdd.design.order()))?;
    let sts13 = base_case(13)?;
    let sts19 = match parity {
        Parity::Odd => Some(base_case(19)?),
        Parity::Even => None,
    };
    let mut groups = gdd.groups.clone();
    // 12-groups first, the 18-group last, each sorted.
    for g in &mut groups {
        g.sort_unstable();
    }
    groups.sort_by_key(|g| (g.len(), g[0]));

    let mut blocks = gdd.design.into_blocks();
    let mut fills = Vec::with_capacity(groups.len());
    for g in &groups {
        let sys = match g.len() {
            12 => &sts13,
            18 => sts19.as_ref().expect("18-group only in the odd case"),
            other => return Err(ConstructionError::Unverified(format!("unexpected group size {other}"))),
        };
        let (fill_blocks, cert) = relabel(sys, g, x);
        blocks.extend(fill_blocks);
        fills.push(cert);
    }
    let design = Design::new(n, blocks);

    // Class missing X: the union of every fill's class missing X.
    let missing_x: Vec<&AlmostParallelClass> =
        fills.iter().map(|c| c.get(x).expect("fill certificates are complete")).collect();
    let mut certificate = NonseqCertificate::new();
    certificate.insert(AlmostParallelClass::new(
        x,
        missing_x.iter().flat_map(|apc| apc.blocks.iter().copied()).collect(),
    ));
    // Class missing y in group i: fill i's class missing y, plus the other
    // fills' classes missing X.
    for (i, g) in groups.iter().enumerate() {
        for &y in g {
            let own = fills[i].get(y).expect("fill certificates are complete");
            let mut b = own.blocks.clone();
            for (j, other) in missing_x.iter().enumerate() {
                if j != i {
                    b.extend(other.blocks.iter().copied());
                }
            }
            certificate.insert(AlmostParallelClass::new(y, b));
        }
    }
    Ok(CertifiedDesign {
        design,
        certificate,
        provenance: Provenance::TheoremA { n, u, parity, gdd_strategy: strategy, groups, fill_point: x },
    })
}

/// A nonsequenceable PSTS(n) of size `n(n-1)/6 - a`: the fill construction
/// minus the first `a` blocks (in sorted order) of the class missing `x0`,
/// recertified by search.
pub fn corollary_psts(
    n: usize,
    a: usize,
    x0: Point,
    opts: &BuildOptions,
) -> Result<CertifiedDesign, ConstructionError> {
    corollary_psts_with(n, a, x0, opts, Execution::default())
}

pub fn corollary_psts_with(
    n: usize,
    a: usize,
    x0: Point,
    opts: &BuildOptions,
    exec: Execution,
) -> Result<CertifiedDesign, ConstructionError> {
    if n == 7 {
        return Err(ConstructionError::OrderSeven);
    }
    if n % 6 != 1 {
        return Err(ConstructionError::BadOrder(n));
    }
    let max = (n - 1) / 3;
    if a > max {
        return Err(ConstructionError::RemovalOutOfRange { a, max });
    }
    if x0 as usize >= n {
        return Err(ConstructionError::BadPoint { x0, n });
    }
    let full = theorem_a(n, opts)?;
    if a == 0 {
        return Ok(CertifiedDesign {
            provenance: Provenance::Corollary {
                n,
                a,
                x0,
                removed: Vec::new(),
                base: Box::new(full.provenance),
            },
            ..full
        });
    }
    let removed: Vec<Block> = full
        .certificate
        .get(x0)
        .ok_or_else(|| ConstructionError::Unverified(format!("no class missing {x0}")))?
        .blocks
        .iter()
        .take(a)
        .copied()
        .collect();
    let design = Design::new(
        n,
        full.design.blocks().iter().filter(|b| !removed.contains(b)).copied().collect(),
    );
    let certificate = theorem1_certify_with(&design, exec, &Solver::new())
        .map_err(|f| ConstructionError::CertificationFailed(f.missing))?;
    let check = check_certificate(&design, &certificate);
    ensure(check.is_ok(), || format!("reduced certificate: {check:?}"))?;
    Ok(CertifiedDesign {
        design,
        certificate,
        provenance: Provenance::Corollary { n, a, x0, removed, base: Box::new(full.provenance) },
    })
}
