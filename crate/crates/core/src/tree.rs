//! Finite Cayley half-trees and the four-valued boundary field on them.
//!
//! Vertices are indexed breadth-first, so `V_n` is always the prefix
//! `0..|V_n|` of the index range and the children of `x` are
//! `k·x + 1 ..= k·x + k`.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scheme::SchemeMatrix;
use crate::solver::FieldPair;
use crate::special::Kernel;

/// Default vertex cap for [`FiniteTree::new`].
pub const MAX_TREE_VERTICES: u64 = 1_000_000;

/// Complete rooted tree in which every non-leaf vertex has `k` children.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteTree {
    k: u32,
    depth: u32,
    /// `level_start[m]` is the index of the first vertex of `W_m`;
    /// the last entry is the total vertex count.
    level_start: Vec<usize>,
}

impl FiniteTree {
    pub fn new(k: u32, depth: u32) -> Result<Self> {
        Self::with_cap(k, depth, MAX_TREE_VERTICES)
    }

    pub fn with_cap(k: u32, depth: u32, cap: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::Domain("tree order k must be >= 1".into()));
        }
        let total = vertex_count(k, depth);
        if total.is_none_or(|t| t > cap) {
            return Err(Error::Capacity { what: "tree vertices", needed: total.unwrap_or(u64::MAX), cap });
        }
        let mut level_start = Vec::with_capacity(depth as usize + 2);
        let (mut start, mut width) = (0usize, 1usize);
        for _ in 0..=depth {
            level_start.push(start);
            start += width;
            width *= k as usize;
        }
        level_start.push(start);
        Ok(Self { k, depth, level_start })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn len(&self) -> usize {
        *self.level_start.last().unwrap()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `|V_n|`, the number of vertices within distance `n` of the root.
    pub fn volume_len(&self, n: u32) -> usize {
        self.level_start[n.min(self.depth) as usize + 1]
    }

    /// Vertex indices of `W_m`.
    pub fn level(&self, m: u32) -> std::ops::Range<usize> {
        assert!(m <= self.depth, "level {m} beyond depth {}", self.depth);
        self.level_start[m as usize]..self.level_start[m as usize + 1]
    }

    pub fn level_of(&self, x: usize) -> Option<u32> {
        if x >= self.len() {
            return None;
        }
        Some(self.level_start.partition_point(|&s| s <= x) as u32 - 1)
    }

    pub fn parent(&self, x: usize) -> Option<usize> {
        (x > 0 && x < self.len()).then(|| (x - 1) / self.k as usize)
    }

    /// The successor set `S(x)`; empty for leaves.
    pub fn children(&self, x: usize) -> std::ops::Range<usize> {
        let k = self.k as usize;
        if self.level_of(x).is_some_and(|m| m < self.depth) {
            k * x + 1..k * x + k + 1
        } else {
            0..0
        }
    }

    pub fn is_internal(&self, x: usize) -> bool {
        !self.children(x).is_empty()
    }
}

pub fn build_tree(k: u32, n: u32) -> Result<FiniteTree> {
    FiniteTree::new(k, n)
}

fn vertex_count(k: u32, depth: u32) -> Option<u64> {
    let mut total: u64 = 0;
    let mut width: u64 = 1;
    for m in 0..=depth {
        total = total.checked_add(width)?;
        if m < depth {
            width = width.checked_mul(k as u64)?;
        }
    }
    Some(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FieldLabel {
    PlusH,
    MinusH,
    PlusL,
    MinusL,
}

impl std::ops::Neg for FieldLabel {
    type Output = Self;

    fn neg(self) -> Self {
        match self {
            Self::PlusH => Self::MinusH,
            Self::MinusH => Self::PlusH,
            Self::PlusL => Self::MinusL,
            Self::MinusL => Self::PlusL,
        }
    }
}

impl FieldLabel {
    pub const ALL: [FieldLabel; 4] = [Self::PlusH, Self::MinusH, Self::PlusL, Self::MinusL];

    pub fn is_positive(self) -> bool {
        matches!(self, Self::PlusH | Self::PlusL)
    }

    pub fn is_h(self) -> bool {
        matches!(self, Self::PlusH | Self::MinusH)
    }

    pub fn value(self, values: &FieldPair) -> f64 {
        match self {
            Self::PlusH => values.h,
            Self::MinusH => -values.h,
            Self::PlusL => values.l,
            Self::MinusL => -values.l,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::PlusH => "+H",
            Self::MinusH => "-H",
            Self::PlusL => "+L",
            Self::MinusL => "-L",
        }
    }
}

impl fmt::Display for FieldLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FieldLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "+H" | "H" | "+h" | "h" => Ok(Self::PlusH),
            "-H" | "-h" => Ok(Self::MinusH),
            "+L" | "L" | "+l" | "l" => Ok(Self::PlusL),
            "-L" | "-l" => Ok(Self::MinusL),
            other => Err(Error::Domain(format!("unknown field label {other:?}"))),
        }
    }
}

/// Child labels of a vertex carrying `label`, in canonical block order:
/// same-sign H, opposite-sign H, same-sign L, opposite-sign L.
pub fn child_recipe(m: &SchemeMatrix, label: FieldLabel) -> Vec<FieldLabel> {
    use FieldLabel::*;
    let counts = if label.is_h() { m.a_row() } else { m.b_row() };
    let mut out = Vec::with_capacity(m.k() as usize);
    for (count, base) in counts.into_iter().zip([PlusH, MinusH, PlusL, MinusL]) {
        let lab = if label.is_positive() { base } else { -base };
        out.extend(std::iter::repeat_n(lab, count as usize));
    }
    out
}

/// A labelling of every vertex of a finite tree by `±H, ±L`, with numeric
/// values `(h, l)` attached late so one labelling can be re-evaluated
/// against several solutions.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryAssignment<'t> {
    tree: &'t FiniteTree,
    labels: Vec<FieldLabel>,
    values: FieldPair,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityReport {
    pub max_residual: f64,
    pub worst_vertex: usize,
    pub pass: bool,
}

impl<'t> BoundaryAssignment<'t> {
    /// Wrap raw labels. Fails unless there is one label per vertex.
    pub fn from_labels(tree: &'t FiniteTree, labels: Vec<FieldLabel>, values: FieldPair) -> Result<Self> {
        if labels.len() != tree.len() {
            return Err(Error::DepthMismatch(format!(
                "{} labels for a tree of {} vertices",
                labels.len(),
                tree.len()
            )));
        }
        Ok(Self { tree, labels, values })
    }

    pub fn tree(&self) -> &'t FiniteTree {
        self.tree
    }

    pub fn labels(&self) -> &[FieldLabel] {
        &self.labels
    }

    pub fn label(&self, x: usize) -> Result<FieldLabel> {
        self.labels.get(x).copied().ok_or(Error::UnknownVertex(x))
    }

    pub fn values(&self) -> FieldPair {
        self.values
    }

    pub fn with_values(&self, values: FieldPair) -> Self {
        Self { values, ..self.clone() }
    }

    /// Every label negated.
    pub fn negated(&self) -> Self {
        Self { labels: self.labels.iter().map(|&l| -l).collect(), ..self.clone() }
    }

    pub fn numeric_field(&self, x: usize) -> Result<f64> {
        Ok(self.label(x)?.value(&self.values))
    }

    /// Numeric fields of all vertices, indexed like the tree.
    pub fn fields(&self) -> Vec<f64> {
        self.labels.iter().map(|l| l.value(&self.values)).collect()
    }

    /// Checks `h_x = Σ_{y ∈ S(x)} f_θ(h_y)` at every internal vertex.
    pub fn verify_compatibility(&self, theta: f64, tol: f64) -> Result<CompatibilityReport> {
        if self.tree.depth() == 0 {
            return Err(Error::DepthMismatch("compatibility needs a tree of depth >= 1".into()));
        }
        let kernel = Kernel::new(theta)?;
        let fields = self.fields();
        let mut report = CompatibilityReport { max_residual: 0.0, worst_vertex: 0, pass: true };
        for x in 0..self.tree.volume_len(self.tree.depth() - 1) {
            let sum: f64 = self.tree.children(x).map(|y| kernel.f(fields[y])).sum();
            let res = (fields[x] - sum).abs();
            if res > report.max_residual || res.is_nan() {
                report.max_residual = res;
                report.worst_vertex = x;
            }
        }
        report.pass = report.max_residual < tol;
        Ok(report)
    }

    /// Per-level maximum of the compatibility residual, for levels `0..depth`.
    pub fn level_residuals(&self, theta: f64) -> Result<Vec<f64>> {
        let kernel = Kernel::new(theta)?;
        let fields = self.fields();
        Ok((0..self.tree.depth())
            .map(|m| {
                self.tree
                    .level(m)
                    .map(|x| (fields[x] - self.tree.children(x).map(|y| kernel.f(fields[y])).sum::<f64>()).abs())
                    .fold(0.0, f64::max)
            })
            .collect())
    }

    /// Line-oriented export: a header `k=<k> n=<n> h=<h> l=<l>` followed by
    /// one `vertex<TAB>parent<TAB>label` line per vertex; the root's parent
    /// is `-1`.
    pub fn export(&self) -> String {
        let mut out = String::with_capacity(16 * self.labels.len() + 64);
        let _ = writeln!(
            out,
            "k={} n={} h={} l={}",
            self.tree.k(),
            self.tree.depth(),
            self.values.h,
            self.values.l
        );
        for (x, lab) in self.labels.iter().enumerate() {
            let parent = self.tree.parent(x).map_or(-1, |p| p as i64);
            let _ = writeln!(out, "{x}\t{parent}\t{lab}");
        }
        out
    }
}

pub fn assign_fields<'t>(
    tree: &'t FiniteTree,
    m: &SchemeMatrix,
    root_label: FieldLabel,
    values: FieldPair,
) -> Result<BoundaryAssignment<'t>> {
    assign_impl(tree, m, root_label, values, None)
}

/// Like [`assign_fields`], but each vertex's child recipe is shuffled by a
/// ChaCha8 stream seeded with `seed`. The child-label multisets are unchanged.
pub fn assign_fields_permuted<'t>(
    tree: &'t FiniteTree,
    m: &SchemeMatrix,
    root_label: FieldLabel,
    values: FieldPair,
    seed: u64,
) -> Result<BoundaryAssignment<'t>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    assign_impl(tree, m, root_label, values, Some(&mut rng))
}

fn assign_impl<'t>(
    tree: &'t FiniteTree,
    m: &SchemeMatrix,
    root_label: FieldLabel,
    values: FieldPair,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Result<BoundaryAssignment<'t>> {
    if tree.k() != m.k() {
        return Err(Error::OrderMismatch { tree: tree.k(), scheme: m.k() });
    }
    let recipes: [Vec<FieldLabel>; 4] = FieldLabel::ALL.map(|l| child_recipe(m, l));
    let mut labels = Vec::with_capacity(tree.len());
    labels.push(root_label);
    let mut scratch = Vec::with_capacity(m.k() as usize);
    // BFS order: the children of x are appended right after those of x − 1
    for x in 0..tree.volume_len(tree.depth().saturating_sub(1)) {
        if !tree.is_internal(x) {
            break;
        }
        let idx = FieldLabel::ALL.iter().position(|&l| l == labels[x]).unwrap();
        scratch.clear();
        scratch.extend_from_slice(&recipes[idx]);
        if let Some(rng) = rng.as_deref_mut() {
            scratch.shuffle(rng);
        }
        labels.extend_from_slice(&scratch);
    }
    debug_assert_eq!(labels.len(), tree.len());
    BoundaryAssignment::from_labels(tree, labels, values)
}

/// An assignment read back from the export format. Owns its tree.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportedAssignment {
    pub tree: FiniteTree,
    pub labels: Vec<FieldLabel>,
    pub values: FieldPair,
}

impl ImportedAssignment {
    pub fn assignment(&self) -> BoundaryAssignment<'_> {
        BoundaryAssignment { tree: &self.tree, labels: self.labels.clone(), values: self.values }
    }
}

/// Parse the export format. The vertex list must describe the breadth-first
/// complete tree given by the header.
pub fn parse_export(text: &str) -> Result<ImportedAssignment> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty input".into() })?;
    let (mut k, mut n, mut h, mut l) = (None, None, None, None);
    for tok in header.split_whitespace() {
        let (key, val) = tok.split_once('=').ok_or(Error::Parse { line: 1, msg: format!("bad header token {tok:?}") })?;
        let perr = |_| Error::Parse { line: 1, msg: format!("bad value for {key}: {val:?}") };
        match key {
            "k" => k = Some(val.parse::<u32>().map_err(|e| perr(e.to_string()))?),
            "n" => n = Some(val.parse::<u32>().map_err(|e| perr(e.to_string()))?),
            "h" => h = Some(val.parse::<f64>().map_err(|e| perr(e.to_string()))?),
            "l" => l = Some(val.parse::<f64>().map_err(|e| perr(e.to_string()))?),
            _ => return Err(Error::Parse { line: 1, msg: format!("unknown header key {key:?}") }),
        }
    }
    let missing = |what: &str| Error::Parse { line: 1, msg: format!("header lacks {what}") };
    let (k, n) = (k.ok_or_else(|| missing("k"))?, n.ok_or_else(|| missing("n"))?);
    let values = FieldPair::new(h.ok_or_else(|| missing("h"))?, l.ok_or_else(|| missing("l"))?);
    let tree = FiniteTree::new(k, n)?;

    let mut labels = Vec::with_capacity(tree.len());
    for (i, line) in lines {
        let lineno = i + 1;
        let bad = |msg: String| Error::Parse { line: lineno, msg };
        let mut cols = line.split('\t');
        let (Some(v), Some(p), Some(lab), None) = (cols.next(), cols.next(), cols.next(), cols.next()) else {
            return Err(bad(format!("expected 3 tab-separated columns, got {line:?}")));
        };
        let v: usize = v.trim().parse().map_err(|_| bad(format!("bad vertex index {v:?}")))?;
        let p: i64 = p.trim().parse().map_err(|_| bad(format!("bad parent index {p:?}")))?;
        if v != labels.len() {
            return Err(bad(format!("vertex {v} out of breadth-first order")));
        }
        let expected = tree.parent(v).map_or(-1, |q| q as i64);
        if v >= tree.len() || p != expected {
            return Err(bad(format!("vertex {v} has parent {p}, expected {expected}")));
        }
        labels.push(lab.parse().map_err(|e: Error| bad(e.to_string()))?);
    }
    if labels.len() != tree.len() {
        return Err(Error::Parse {
            line: labels.len() + 2,
            msg: format!("{} vertices listed, tree has {}", labels.len(), tree.len()),
        });
    }
    Ok(ImportedAssignment { tree, labels, values })
}
