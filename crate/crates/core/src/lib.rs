//! Nonsequenceable Steiner triple systems.
//!
//! A (partial) Steiner triple system is *sequenceable* when its points can be
//! listed so that no proper contiguous segment is a disjoint union of blocks.
//! This crate builds systems of every order `n = 1 mod 6` except 7 that are
//! not, each with a checkable certificate: a set of almost parallel classes
//! missing `n - 1` distinct points. Any sequence then has its first or last
//! point missed by a class, and that class partitions the complementary
//! segment of length `n - 1`.
//!
//! Modules, bottom up:
//!
//! * [`design`]: blocks, designs, GDDs, almost parallel classes, validators.
//! * [`exact_cover`]: dancing-links solver, class search, segment checks.
//! * [`difference`]: development of base blocks over `Z_n` and `Z_m x Z_m`.
//! * [`gdd`]: transversal, Bose, inflated and hill-climbed 3-GDDs.
//! * [`constructions`]: base systems, the fill construction, partial systems.
//! * [`sequencing`]: admissibility, exhaustive sequence search, certification.
//! * [`document`]: the JSON interchange format.
//! * [`cli`]: the `nonseq` command line.

pub mod cli;
pub mod constructions;
pub mod design;
pub mod difference;
pub mod document;
pub mod exact_cover;
pub mod gdd;
pub mod par;
pub mod sequencing;

pub use constructions::{base_case, corollary_psts, theorem_a, BuildOptions, CertifiedDesign};
pub use design::{
    validate_gdd, validate_psts, validate_sts, verify_apc, verify_certificate,
    AlmostParallelClass, Block, Design, Gdd, GroupType, NonseqCertificate, Point,
};
pub use sequencing::{
    explain_nonsequenceable, find_admissible_sequence, is_admissible, theorem1_certify,
    PointSequence, SegmentPolicy,
};
