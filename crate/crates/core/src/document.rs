//! JSON interchange format for designs and their certificates.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "order": 7,
//!   "blocks": [[0, 1, 3], [0, 2, 6], ...],
//!   "labels": ["a", "b", ...],
//!   "certificate": [{"missed": 0, "blocks": [[1, 2, 4], ...]}],
//!   "provenance": "base-case(13)"
//! }
//! ```
//!
//! `labels` and `certificate` are optional. Blocks are written sorted.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constructions::CertifiedDesign;
use crate::design::{AlmostParallelClass, Block, Design, NonseqCertificate, Point};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema version {0} (expected {SCHEMA_VERSION})")]
    Version(u32),
    #[error("malformed document: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateEntry {
    pub missed: Point,
    pub blocks: Vec<[Point; 3]>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignDocument {
    pub schema_version: u32,
    pub order: usize,
    pub blocks: Vec<[Point; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Vec<CertificateEntry>>,
    #[serde(default)]
    pub provenance: String,
}

fn sorted_triples<'a>(blocks: impl IntoIterator<Item = &'a Block>) -> Vec<[Point; 3]> {
    let mut v: Vec<[Point; 3]> = blocks.into_iter().map(|b| b.members()).collect();
    v.sort_unstable();
    v
}

fn entries_of(c: &NonseqCertificate) -> Vec<CertificateEntry> {
    c.classes()
        .map(|apc| CertificateEntry { missed: apc.missed, blocks: sorted_triples(&apc.blocks) })
        .collect()
}

impl DesignDocument {
    pub fn new(design: &Design, provenance: impl Into<String>) -> Self {
        DesignDocument {
            schema_version: SCHEMA_VERSION,
            order: design.order(),
            blocks: sorted_triples(design.blocks()),
            labels: None,
            certificate: None,
            provenance: provenance.into(),
        }
    }

    pub fn from_certified(c: &CertifiedDesign) -> Self {
        let mut doc = DesignDocument::new(&c.design, c.provenance.to_string());
        doc.set_certificate(&c.certificate);
        doc
    }

    pub fn set_certificate(&mut self, c: &NonseqCertificate) {
        self.certificate = Some(entries_of(c));
    }

    /// Parses and checks shape: version, block well-formedness, point
    /// ranges, labels. Design-level properties are left to the validators.
    pub fn from_json(text: &str) -> Result<Self, DocumentError> {
        let doc: DesignDocument = serde_json::from_str(text)?;
        doc.check()?;
        Ok(doc)
    }

    /// Pretty JSON with every triple on one line.
    pub fn to_json(&self) -> String {
        compact_number_arrays(&serde_json::to_string_pretty(self).expect("documents always serialize"))
    }

    fn check(&self) -> Result<(), DocumentError> {
        let bad = |m: String| Err(DocumentError::Malformed(m));
        if self.schema_version != SCHEMA_VERSION {
            return Err(DocumentError::Version(self.schema_version));
        }
        let n = self.order;
        let check_triple = |t: &[Point; 3], ctx: &str| -> Result<(), DocumentError> {
            if t.iter().any(|&p| p as usize >= n) {
                return bad(format!("{ctx} block {t:?} has a point outside 0..{n}"));
            }
            if Block::try_from(*t).is_err() {
                return bad(format!("{ctx} block {t:?} repeats a point"));
            }
            Ok(())
        };
        for t in &self.blocks {
            check_triple(t, "design")?;
        }
        if let Some(labels) = &self.labels {
            if labels.len() != n {
                return bad(format!("{} labels for {n} points", labels.len()));
            }
            if labels.iter().collect::<BTreeSet<_>>().len() != n {
                return bad("labels are not distinct".into());
            }
        }
        if let Some(entries) = &self.certificate {
            let mut keys = BTreeSet::new();
            for e in entries {
                if e.missed as usize >= n || !keys.insert(e.missed) {
                    return bad(format!("certificate entry for point {} is out of range or repeated", e.missed));
                }
                for t in &e.blocks {
                    check_triple(t, &format!("certificate entry {}", e.missed))?;
                }
            }
        }
        Ok(())
    }

    pub fn design(&self) -> Design {
        Design::from_triples(self.order, &self.blocks).expect("checked on load")
    }

    pub fn certificate(&self) -> Option<NonseqCertificate> {
        self.certificate.as_ref().map(|entries| {
            entries
                .iter()
                .map(|e| {
                    let blocks = e
                        .blocks
                        .iter()
                        .map(|&t| Block::try_from(t).expect("checked on load"))
                        .collect();
                    AlmostParallelClass::new(e.missed, blocks)
                })
                .collect()
        })
    }

    /// Display name of a point.
    pub fn label(&self, p: Point) -> String {
        match &self.labels {
            Some(l) => l[p as usize].clone(),
            None => p.to_string(),
        }
    }
}

/// Collapses arrays holding only numbers, `[\n  1,\n  2\n]` -> `[1, 2]`.
fn compact_number_arrays(pretty: &str) -> String {
    let mut out = String::with_capacity(pretty.len());
    let (mut in_string, mut escaped) = (false, false);
    let mut chars = pretty.char_indices();
    while let Some((i, c)) = chars.next() {
        if in_string {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_string = false,
                _ => {}
            }
        } else if c == '"' {
            in_string = true;
        } else if c == '[' {
            let rest = &pretty[i + 1..];
            let close = rest.find(|c: char| !(c.is_ascii_digit() || c == ',' || c.is_whitespace()));
            if let Some(close) = close.filter(|&j| rest.as_bytes()[j] == b']' && !rest[..j].trim().is_empty()) {
                let items: Vec<&str> = rest[..close].split(',').map(str::trim).collect();
                out.push('[');
                out.push_str(&items.join(", "));
                out.push(']');
                chars.nth(close);
                continue;
            }
        }
        out.push(c);
    }
    out
}
