//! Constructive 3-GDDs: transversal designs from the cyclic Latin square,
//! Bose's quasigroup construction, inflation by transversal designs, and a
//! randomized hill climber for everything else. Every result is validated
//! before it is returned.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::{validate_gdd, Block, Design, Gdd, GroupType, Point};

/// Environment variable naming the GDD cache directory.
pub const CACHE_DIR_ENV: &str = "NONSEQ_CACHE_DIR";

#[derive(Debug, Error)]
pub enum GddError {
    #[error("Bose construction needs an odd number of groups >= 3, got {0}")]
    EvenBose(usize),
    #[error("type {group_type} fails a necessary condition: {reason}")]
    NotAdmissible { group_type: GroupType, reason: String },
    #[error("hill climbing for {group_type} (seed {seed}) stalled after {moves} moves")]
    BudgetExhausted { group_type: GroupType, seed: u64, moves: u64 },
    #[error("constructed design for {group_type} failed validation: {detail}")]
    Invalid { group_type: GroupType, detail: String },
}

/// Transversal design TD(3, m) from `z = x + y mod m`. Groups are
/// `0..m`, `m..2m`, `2m..3m`.
pub fn td3(m: usize) -> Gdd {
    let mut blocks = Vec::with_capacity(m * m);
    for x in 0..m {
        for y in 0..m {
            let z = (x + y) % m;
            blocks.push(
                Block::new(x as Point, (m + y) as Point, (2 * m + z) as Point)
                    .expect("three distinct groups"),
            );
        }
    }
    let group_type = GroupType::uniform(m, 3).expect("m >= 1");
    Gdd {
        groups: group_type.consecutive_groups(),
        group_type,
        design: Design::new(3 * m, blocks),
    }
}

/// `x o y = (x + y)(u + 1)/2 mod u`, the idempotent commutative quasigroup
/// of odd order `u`.
pub fn bose_product(u: usize, x: usize, y: usize) -> usize {
    (x + y) * (u + 1) / 2 % u
}

/// GDD of type `3^u` on `Z_u x {0,1,2}`; point `(x, i)` is `3x + i` and the
/// groups are the columns `{x} x {0,1,2}`.
pub fn bose_gdd(u: usize) -> Result<Gdd, GddError> {
    if u.is_multiple_of(2) || u < 3 {
        return Err(GddError::EvenBose(u));
    }
    let pt = |x: usize, i: usize| (3 * x + i % 3) as Point;
    let mut blocks = Vec::with_capacity(3 * u * (u - 1) / 2);
    for i in 0..3 {
        for x in 0..u {
            for y in x + 1..u {
                let z = bose_product(u, x, y);
                blocks.push(Block::new(pt(x, i), pt(y, i), pt(z, i + 1)).expect("x o y differs from x, y"));
            }
        }
    }
    let group_type = GroupType::uniform(3, u).expect("u >= 3");
    Ok(Gdd {
        groups: group_type.consecutive_groups(),
        group_type,
        design: Design::new(3 * u, blocks),
    })
}

/// Weights every point by `w`: point `p` becomes `w*p .. w*p + w`, and each
/// block `{a, b, c}` is replaced by the TD(3, w) blocks
/// `{(a, x), (b, y), (c, x + y)}`.
pub fn inflate(g: &Gdd, w: usize) -> Gdd {
    assert!(w >= 1, "weight must be positive");
    let wp = |p: Point, j: usize| p * w as Point + j as Point;
    let mut blocks = Vec::with_capacity(g.design.size() * w * w);
    for b in g.design.blocks() {
        let [a, bb, c] = b.members();
        for x in 0..w {
            for y in 0..w {
                blocks.push(
                    Block::new(wp(a, x), wp(bb, y), wp(c, (x + y) % w)).expect("distinct base points"),
                );
            }
        }
    }
    let groups = g
        .groups
        .iter()
        .map(|grp| {
            let mut v: Vec<Point> = grp.iter().flat_map(|&p| (0..w).map(move |j| wp(p, j))).collect();
            v.sort_unstable();
            v
        })
        .collect();
    Gdd {
        group_type: g.group_type.scaled(w).expect("w >= 1"),
        groups,
        design: Design::new(g.design.order() * w, blocks),
    }
}

/// Checks the usual necessary conditions for a triangle decomposition of the
/// complete multipartite graph of the given type.
pub fn check_admissible(t: &GroupType) -> Result<(), GddError> {
    let fail = |reason: String| Err(GddError::NotAdmissible { group_type: t.clone(), reason });
    let n = t.num_points();
    let cross = t.cross_pairs();
    if cross == 0 {
        return Ok(());
    }
    if t.num_groups() < 3 {
        return fail("fewer than three groups".into());
    }
    for &(g, _) in t.parts() {
        if !(n - g).is_multiple_of(2) {
            return fail(format!("points in groups of size {g} have odd degree {}", n - g));
        }
    }
    if !cross.is_multiple_of(3) {
        return fail(format!("{cross} cross pairs is not a multiple of 3"));
    }
    // A block meets the largest group at most once, covering two of its
    // cross pairs and one pair among the other groups.
    let m = t.parts().last().map(|&(g, _)| g).unwrap_or(0);
    let others = cross - m * (n - m);
    if m * (n - m) > 2 * others {
        return fail(format!("largest group of size {m} is too large"));
    }
    Ok(())
}

/// Type to realize and the seed for randomized strategies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GddRequest {
    pub group_type: GroupType,
    pub seed: u64,
}

impl GddRequest {
    pub fn new(group_type: GroupType, seed: u64) -> Self {
        GddRequest { group_type, seed }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct HillClimbConfig {
    /// Moves allowed without a new best block count before giving up.
    pub max_stale_moves: u64,
}

impl Default for HillClimbConfig {
    fn default() -> Self {
        HillClimbConfig { max_stale_moves: 2_000_000 }
    }
}

const NONE: u32 = u32::MAX;

/// Partial triangle decomposition with O(1) access to uncovered pairs.
struct Climber {
    n: usize,
    group: Vec<usize>,
    /// Block slot covering each ordered pair.
    pair: Vec<u32>,
    blocks: Vec<[Point; 3]>,
    free: Vec<u32>,
    live_blocks: usize,
    /// Uncovered cross neighbours of each point.
    open: Vec<Vec<Point>>,
    open_pos: Vec<u32>,
    /// Points with at least one uncovered cross pair.
    live: Vec<Point>,
    live_pos: Vec<u32>,
}

impl Climber {
    fn new(group: Vec<usize>) -> Self {
        let n = group.len();
        let mut c = Climber {
            n,
            pair: vec![NONE; n * n],
            blocks: Vec::new(),
            free: Vec::new(),
            live_blocks: 0,
            open: vec![Vec::new(); n],
            open_pos: vec![NONE; n * n],
            live: Vec::new(),
            live_pos: vec![NONE; n],
            group,
        };
        for x in 0..n {
            for y in 0..n {
                if c.group[x] != c.group[y] {
                    c.open_pos[x * n + y] = c.open[x].len() as u32;
                    c.open[x].push(y as Point);
                }
            }
            if !c.open[x].is_empty() {
                c.live_pos[x] = c.live.len() as u32;
                c.live.push(x as Point);
            }
        }
        c
    }

    fn close(&mut self, x: usize, y: usize) {
        let n = self.n;
        let i = self.open_pos[x * n + y] as usize;
        let last = self.open[x].pop().expect("pair was open") as usize;
        if last != y {
            self.open[x][i] = last as Point;
            self.open_pos[x * n + last] = i as u32;
        }
        self.open_pos[x * n + y] = NONE;
        if self.open[x].is_empty() {
            let i = self.live_pos[x] as usize;
            let last = self.live.pop().expect("x was live") as usize;
            if last != x {
                self.live[i] = last as Point;
                self.live_pos[last] = i as u32;
            }
            self.live_pos[x] = NONE;
        }
    }

    fn reopen(&mut self, x: usize, y: usize) {
        let n = self.n;
        if self.open[x].is_empty() {
            self.live_pos[x] = self.live.len() as u32;
            self.live.push(x as Point);
        }
        self.open_pos[x * n + y] = self.open[x].len() as u32;
        self.open[x].push(y as Point);
    }

    fn add(&mut self, b: [Point; 3]) {
        let slot = match self.free.pop() {
            Some(s) => {
                self.blocks[s as usize] = b;
                s
            }
            None => {
                self.blocks.push(b);
                (self.blocks.len() - 1) as u32
            }
        };
        let n = self.n;
        for (x, y) in [(b[0], b[1]), (b[0], b[2]), (b[1], b[2])] {
            let (x, y) = (x as usize, y as usize);
            debug_assert_eq!(self.pair[x * n + y], NONE);
            self.pair[x * n + y] = slot;
            self.pair[y * n + x] = slot;
            self.close(x, y);
            self.close(y, x);
        }
        self.live_blocks += 1;
    }

    fn remove_covering(&mut self, x: usize, y: usize) {
        let n = self.n;
        let slot = self.pair[x * n + y];
        if slot == NONE {
            return;
        }
        let b = self.blocks[slot as usize];
        for (p, q) in [(b[0], b[1]), (b[0], b[2]), (b[1], b[2])] {
            let (p, q) = (p as usize, q as usize);
            self.pair[p * n + q] = NONE;
            self.pair[q * n + p] = NONE;
            self.reopen(p, q);
            self.reopen(q, p);
        }
        self.free.push(slot);
        self.live_blocks -= 1;
    }

    fn is_open(&self, x: usize, y: usize) -> bool {
        self.open_pos[x * self.n + y] != NONE
    }

    /// One move around a random uncovered pair `{x, y}`. Prefers a third
    /// point `c` joined to `x` or `y` by an uncovered pair, so at most one
    /// block is displaced. When no such `c` exists, both pairs to a random
    /// `c` are freed.
    fn step(&mut self, rng: &mut ChaCha8Rng, scratch: &mut Vec<(Point, bool)>) {
        let x = self.live[rng.gen_range(0..self.live.len())] as usize;
        let y = self.open[x][rng.gen_range(0..self.open[x].len())] as usize;
        let (gx, gy) = (self.group[x], self.group[y]);
        scratch.clear();
        for &c in &self.open[x] {
            let g = self.group[c as usize];
            if g != gy {
                scratch.push((c, true));
            }
        }
        for &c in &self.open[y] {
            let g = self.group[c as usize];
            if g != gx {
                scratch.push((c, false));
            }
        }
        let c = if scratch.is_empty() {
            loop {
                let c = rng.gen_range(0..self.n);
                if self.group[c] != gx && self.group[c] != gy {
                    self.remove_covering(x, c);
                    self.remove_covering(y, c);
                    break c;
                }
            }
        } else {
            let (c, via_x) = scratch[rng.gen_range(0..scratch.len())];
            let c = c as usize;
            if via_x {
                if !self.is_open(y, c) {
                    self.remove_covering(y, c);
                }
            } else if !self.is_open(x, c) {
                self.remove_covering(x, c);
            }
            c
        };
        let mut b = [x as Point, y as Point, c as Point];
        b.sort_unstable();
        self.add(b);
    }

    fn into_blocks(self) -> Vec<Block> {
        let mut out: Vec<Block> = Vec::with_capacity(self.live_blocks);
        let mut seen = vec![false; self.blocks.len()];
        let n = self.n;
        for x in 0..n {
            for y in x + 1..n {
                let s = self.pair[x * n + y];
                if s != NONE && !std::mem::replace(&mut seen[s as usize], true) {
                    let [a, b, c] = self.blocks[s as usize];
                    out.push(Block::new(a, b, c).expect("distinct"));
                }
            }
        }
        out.sort_unstable();
        out
    }
}

pub fn hill_climb_gdd(req: &GddRequest) -> Result<Gdd, GddError> {
    hill_climb_gdd_with(req, HillClimbConfig::default())
}

/// Hill climbing over partial triangle decompositions of the multipartite
/// graph with groups laid out consecutively. Deterministic for a fixed seed.
pub fn hill_climb_gdd_with(req: &GddRequest, cfg: HillClimbConfig) -> Result<Gdd, GddError> {
    let t = &req.group_type;
    check_admissible(t)?;
    let groups = t.consecutive_groups();
    let mut owner = vec![0usize; t.num_points()];
    for (gi, grp) in groups.iter().enumerate() {
        for &p in grp {
            owner[p as usize] = gi;
        }
    }
    let target = t.cross_pairs() / 3;
    let mut climber = Climber::new(owner);
    let mut rng = ChaCha8Rng::seed_from_u64(req.seed);
    let mut scratch = Vec::new();
    let (mut best, mut stale, mut moves) = (0usize, 0u64, 0u64);
    while climber.live_blocks < target {
        climber.step(&mut rng, &mut scratch);
        moves += 1;
        if climber.live_blocks > best {
            best = climber.live_blocks;
            stale = 0;
        } else {
            stale += 1;
            if stale > cfg.max_stale_moves {
                return Err(GddError::BudgetExhausted {
                    group_type: t.clone(),
                    seed: req.seed,
                    moves,
                });
            }
        }
    }
    let gdd = Gdd {
        group_type: t.clone(),
        groups,
        design: Design::new(t.num_points(), climber.into_blocks()),
    };
    ensure_valid(gdd)
}

fn ensure_valid(g: Gdd) -> Result<Gdd, GddError> {
    let report = validate_gdd(&g);
    match report.violation {
        None => Ok(g),
        Some(v) => Err(GddError::Invalid { group_type: g.group_type, detail: v.to_string() }),
    }
}

/// Which strategy produced a GDD.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GddStrategy {
    Cache,
    Bose { weight: usize },
    HillClimb { seed: u64 },
}

impl std::fmt::Display for GddStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GddStrategy::Cache => f.write_str("cache"),
            GddStrategy::Bose { weight } => write!(f, "bose*{weight}"),
            GddStrategy::HillClimb { seed } => write!(f, "hill-climb(seed={seed})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BuiltGdd {
    pub gdd: Gdd,
    pub strategy: GddStrategy,
}

/// Number of successive seeds `build_gdd` tries before giving up.
pub const HILL_CLIMB_RESTARTS: u64 = 8;

/// Realizes a 3-GDD: verified cache entry, then `inflate(bose_gdd(u), g/3)`
/// for uniform types with odd `u` and `3 | g`, then hill climbing with up to
/// [`HILL_CLIMB_RESTARTS`] successive seeds. The result is stored in the
/// cache when one is given.
pub fn build_gdd(req: &GddRequest, cache: Option<&GddCache>) -> Result<BuiltGdd, GddError> {
    let t = &req.group_type;
    check_admissible(t)?;
    if let Some(gdd) = cache.and_then(|c| c.load(t, req.seed)) {
        return Ok(BuiltGdd { gdd, strategy: GddStrategy::Cache });
    }
    let built = match t.parts() {
        [(g, u)] if u % 2 == 1 && *u >= 3 && g % 3 == 0 => {
            let w = g / 3;
            let gdd = ensure_valid(inflate(&bose_gdd(*u)?, w))?;
            BuiltGdd { gdd, strategy: GddStrategy::Bose { weight: w } }
        }
        _ => {
            let mut last = None;
            let mut found = None;
            for k in 0..HILL_CLIMB_RESTARTS {
                let seed = req.seed.wrapping_add(k);
                match hill_climb_gdd(&GddRequest::new(t.clone(), seed)) {
                    Ok(gdd) => {
                        found = Some(BuiltGdd { gdd, strategy: GddStrategy::HillClimb { seed } });
                        break;
                    }
                    Err(e @ GddError::BudgetExhausted { .. }) => last = Some(e),
                    Err(e) => return Err(e),
                }
            }
            match found {
                Some(b) => b,
                None => return Err(last.expect("at least one attempt")),
            }
        }
    };
    if let Some(c) = cache {
        // A failed cache write only costs a rebuild next time.
        let _ = c.store(&built.gdd, req.seed);
    }
    Ok(built)
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheEntry {
    key: String,
    group_type: GroupType,
    seed: u64,
    groups: Vec<Vec<Point>>,
    blocks: Vec<Block>,
}

/// Directory of JSON files, one per group type. Entries are re-validated on
/// load; writes go through a temporary file and an atomic rename.
#[derive(Debug, Clone)]
pub struct GddCache {
    dir: PathBuf,
}

impl GddCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        GddCache { dir: dir.into() }
    }

    /// Cache rooted at `$NONSEQ_CACHE_DIR`, if set.
    pub fn from_env() -> Option<Self> {
        std::env::var_os(CACHE_DIR_ENV)
            .filter(|v| !v.is_empty())
            .map(GddCache::new)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, t: &GroupType) -> PathBuf {
        self.dir.join(format!("{}.json", t.key().replace(':', "_")))
    }

    /// A cached GDD of type `t` built from `seed`, if present and valid.
    pub fn load(&self, t: &GroupType, seed: u64) -> Option<Gdd> {
        let text = fs::read_to_string(self.path_for(t)).ok()?;
        let entry: CacheEntry = serde_json::from_str(&text).ok()?;
        if entry.key != t.key() || &entry.group_type != t || entry.seed != seed {
            return None;
        }
        let gdd = Gdd {
            group_type: entry.group_type,
            groups: entry.groups,
            design: Design::new(t.num_points(), entry.blocks),
        };
        validate_gdd(&gdd).is_ok().then_some(gdd)
    }

    pub fn store(&self, g: &Gdd, seed: u64) -> io::Result<()> {
        fs::create_dir_all(&self.dir)?;
        let entry = CacheEntry {
            key: g.group_type.key(),
            group_type: g.group_type.clone(),
            seed,
            groups: g.groups.clone(),
            blocks: g.design.canonical().into_blocks(),
        };
        let path = self.path_for(&g.group_type);
        let tmp = path.with_extension(format!("json.{}.tmp", std::process::id()));
        fs::write(&tmp, serde_json::to_vec(&entry)?)?;
        fs::rename(&tmp, &path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cross_pair_oracle(g: &Gdd) -> usize {
        let owner = g.group_of().unwrap();
        let n = owner.len();
        (0..n)
            .flat_map(|x| (x + 1..n).map(move |y| (x, y)))
            .filter(|&(x, y)| owner[x] != owner[y])
            .count()
    }

    #[test]
    fn td3_small() {
        let g = td3(1);
        assert_eq!(g.design.size(), 1);
        assert!(validate_gdd(&g).is_ok());
        let g = td3(2);
        assert_eq!(cross_pair_oracle(&g), 12);
        assert_eq!(g.design.size(), 4);
        assert!(validate_gdd(&g).is_ok());
        let g = td3(12);
        assert_eq!(g.design.size(), 144);
        assert_eq!(cross_pair_oracle(&g) / 3, 144);
        assert!(validate_gdd(&g).is_ok());
    }

    #[test]
    fn bose_small() {
        let g = bose_gdd(3).unwrap();
        assert_eq!(g.design.size(), 9);
        assert!(validate_gdd(&g).is_ok());
        let g = bose_gdd(5).unwrap();
        assert_eq!(g.design.size(), 30);
        assert!(validate_gdd(&g).is_ok());
        assert!(matches!(bose_gdd(4), Err(GddError::EvenBose(4))));
    }

    #[test]
    fn inflation_examples() {
        let one = td3(1);
        let g = inflate(&one, 12);
        assert_eq!(g.design.size(), 144);
        assert_eq!(g.group_type, GroupType::uniform(12, 3).unwrap());
        assert!(validate_gdd(&g).is_ok());

        let g = inflate(&bose_gdd(5).unwrap(), 4);
        assert_eq!(g.design.size(), 480);
        assert_eq!(g.design.size(), 24 * 5 * 4);
        assert!(validate_gdd(&g).is_ok());

        let b = bose_gdd(7).unwrap();
        let same = inflate(&b, 1);
        assert_eq!(same.design.canonical(), b.design.canonical());
        assert_eq!(same.groups, b.groups);
    }

    #[test]
    fn admissibility() {
        let t = |s: &str| s.parse::<GroupType>().unwrap();
        assert!(check_admissible(&t("6^4")).is_ok());
        assert!(check_admissible(&t("12^3+18^1")).is_ok());
        assert!(check_admissible(&t("2^2")).is_err());
        assert!(check_admissible(&t("1^4")).is_err());
        assert!(check_admissible(&t("1^5")).is_err());
        assert!(check_admissible(&t("12^3+18^1")).is_ok());
        assert!(check_admissible(&t("2^3+8^1")).is_err());
    }

    #[test]
    fn hill_climb_examples() {
        let cases = [("6^4", 72), ("12^4", 288), ("12^3 18^1", 360)];
        for (s, blocks) in cases {
            let req = GddRequest::new(s.parse().unwrap(), 1);
            let g = hill_climb_gdd(&req).unwrap();
            assert!(validate_gdd(&g).is_ok(), "{s}");
            assert_eq!(g.design.size(), cross_pair_oracle(&g) / 3);
            assert_eq!(g.design.size(), blocks, "{s}");
        }
    }

    #[test]
    fn hill_climb_is_seed_deterministic() {
        let req = GddRequest::new("6^5".parse().unwrap(), 42);
        let a = hill_climb_gdd(&req).unwrap();
        let b = hill_climb_gdd(&req).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn stale_budget_is_reported() {
        let req = GddRequest::new("12^4".parse().unwrap(), 3);
        let err = hill_climb_gdd_with(&req, HillClimbConfig { max_stale_moves: 0 });
        assert!(matches!(err, Err(GddError::BudgetExhausted { .. })));
    }

    #[test]
    fn build_uses_bose_for_odd_uniform() {
        let b = build_gdd(&GddRequest::new(GroupType::uniform(12, 5).unwrap(), 0), None).unwrap();
        assert_eq!(b.strategy, GddStrategy::Bose { weight: 4 });
        assert_eq!(b.gdd.design.size(), 480);
        assert!(build_gdd(&GddRequest::new("2^2".parse().unwrap(), 0), None).is_err());
    }

    #[test]
    fn cache_round_trip_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let cache = GddCache::new(dir.path());
        let req = GddRequest::new("12^4".parse().unwrap(), 0);
        let first = build_gdd(&req, Some(&cache)).unwrap();
        assert!(matches!(first.strategy, GddStrategy::HillClimb { .. }));
        let second = build_gdd(&req, Some(&cache)).unwrap();
        assert_eq!(second.strategy, GddStrategy::Cache);
        assert_eq!(second.gdd.design.canonical(), first.gdd.design.canonical());
        // other seed misses
        assert!(cache.load(&req.group_type, 1).is_none());

        let path = cache.path_for(&req.group_type);
        let mut entry: serde_json::Value = serde_json::from_slice(&fs::read(&path).unwrap()).unwrap();
        entry["blocks"].as_array_mut().unwrap().pop();
        fs::write(&path, serde_json::to_vec(&entry).unwrap()).unwrap();
        assert!(cache.load(&req.group_type, 0).is_none());
        let rebuilt = build_gdd(&req, Some(&cache)).unwrap();
        assert_ne!(rebuilt.strategy, GddStrategy::Cache);
        assert!(validate_gdd(&rebuilt.gdd).is_ok());
    }
}
