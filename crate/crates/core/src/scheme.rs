//! Scheme matrices, their reduction to `(a, b, c, d)`, exhaustive enumeration
//! and classification against the classical measure families.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::FieldPair;

/// Tolerance for the `l = 0` and `l = h` side conditions in [`classify`].
pub const FIELD_MATCH_TOL: f64 = 1e-9;

/// The 4×4 count matrix
///
/// ```text
/// a1 a2 a3 a4
/// a2 a1 a4 a3
/// b1 b2 b3 b4
/// b2 b1 b4 b3
/// ```
///
/// Row `a` gives how many children of a `+h` vertex carry `+h, −h, +l, −l`;
/// row `b` does the same for a `+l` vertex. Negative parents use the negated
/// recipe, which is what the two mirrored rows encode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SchemeMatrix {
    k: u32,
    a: [u32; 4],
    b: [u32; 4],
}

impl SchemeMatrix {
    pub fn new(k: u32, a: [u32; 4], b: [u32; 4]) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidScheme("tree order k must be >= 1".into()));
        }
        let (sa, sb) = (a.iter().sum::<u32>(), b.iter().sum::<u32>());
        if sa != k || sb != k {
            return Err(Error::InvalidScheme(format!(
                "row sums must equal k={k}: a-row sums to {sa}, b-row sums to {sb}"
            )));
        }
        Ok(Self { k, a, b })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn a_row(&self) -> [u32; 4] {
        self.a
    }

    pub fn b_row(&self) -> [u32; 4] {
        self.b
    }

    /// Full 4×4 matrix with the mirrored rows.
    pub fn matrix(&self) -> [[u32; 4]; 4] {
        let [a1, a2, a3, a4] = self.a;
        let [b1, b2, b3, b4] = self.b;
        [[a1, a2, a3, a4], [a2, a1, a4, a3], [b1, b2, b3, b4], [b2, b1, b4, b3]]
    }

    pub fn reduce(&self) -> ReducedParams {
        reduce(self)
    }
}

impl fmt::Display for SchemeMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a1, a2, a3, a4] = self.a;
        let [b1, b2, b3, b4] = self.b;
        write!(f, "k={} a=({a1},{a2},{a3},{a4}) b=({b1},{b2},{b3},{b4})", self.k)
    }
}

/// `a = a1−a2, b = a3−a4, c = b1−b2, d = b3−b4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ReducedParams {
    pub a: i32,
    pub b: i32,
    pub c: i32,
    pub d: i32,
}

impl ReducedParams {
    pub const fn new(a: i32, b: i32, c: i32, d: i32) -> Self {
        Self { a, b, c, d }
    }

    pub fn negated(&self) -> Self {
        Self::new(-self.a, -self.b, -self.c, -self.d)
    }

    pub fn is_zero(&self) -> bool {
        self.a == 0 && self.b == 0 && self.c == 0 && self.d == 0
    }

    /// Whether some scheme of order `k` reduces to these parameters:
    /// `|a|+|b| ≤ k`, `|c|+|d| ≤ k` and both row sums share the parity of `k`.
    pub fn is_realizable(&self, k: u32) -> bool {
        let k = k as i64;
        let row_ok = |x: i32, y: i32| {
            let (x, y) = (x as i64, y as i64);
            x.abs() + y.abs() <= k && (x + y - k).rem_euclid(2) == 0
        };
        row_ok(self.a, self.b) && row_ok(self.c, self.d)
    }

    /// `(bc − ad)·θ² + (a + d)·θ`, the derivative at zero of the reduced
    /// scalar map.
    pub fn criterion_value(&self, theta: f64) -> f64 {
        let (a, b, c, d) = (self.a as f64, self.b as f64, self.c as f64, self.d as f64);
        (b * c - a * d) * theta * theta + (a + d) * theta
    }
}

impl fmt::Display for ReducedParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.a, self.b, self.c, self.d)
    }
}

pub fn reduce(m: &SchemeMatrix) -> ReducedParams {
    let d = |x: u32, y: u32| x as i32 - y as i32;
    ReducedParams::new(d(m.a[0], m.a[1]), d(m.a[2], m.a[3]), d(m.b[0], m.b[1]), d(m.b[2], m.b[3]))
}

/// Compositions of `k` into four non-negative parts, lexicographic.
fn compositions(k: u32) -> Vec<[u32; 4]> {
    let mut out = Vec::new();
    for x1 in 0..=k {
        for x2 in 0..=k - x1 {
            for x3 in 0..=k - x1 - x2 {
                out.push([x1, x2, x3, k - x1 - x2 - x3]);
            }
        }
    }
    out
}

/// Number of valid schemes of order `k`, `C(k+3, 3)²`.
pub fn scheme_count(k: u32) -> u64 {
    let k = k as u64;
    let per_row = (k + 1) * (k + 2) * (k + 3) / 6;
    per_row * per_row
}

/// Every valid scheme of order `k` exactly once, in lexicographic order of
/// `(a1, a2, a3, a4, b1, b2, b3, b4)`.
pub fn enumerate_schemes(k: u32) -> impl Iterator<Item = SchemeMatrix> {
    let rows = if k == 0 { Vec::new() } else { compositions(k) };
    let rows_b = rows.clone();
    rows.into_iter()
        .flat_map(move |a| rows_b.clone().into_iter().map(move |b| SchemeMatrix { k, a, b }))
}

/// All parameter tuples satisfying the realizability conditions for `k`.
pub fn realizable_reduced(k: u32) -> BTreeSet<ReducedParams> {
    let k_i = k as i32;
    let mut out = BTreeSet::new();
    for a in -k_i..=k_i {
        for b in -k_i..=k_i {
            for c in -k_i..=k_i {
                for d in -k_i..=k_i {
                    let r = ReducedParams::new(a, b, c, d);
                    if r.is_realizable(k) {
                        out.insert(r);
                    }
                }
            }
        }
    }
    out
}

/// Sufficient condition for non-uniqueness:
/// `|(bc − ad)θ² + (a + d)θ| > 1`, strict.
pub fn nonuniqueness_criterion(r: &ReducedParams, theta: f64) -> bool {
    r.criterion_value(theta).abs() > 1.0
}

/// Known measure families realized by particular scheme patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum MeasureFamily {
    TranslationInvariant,
    /// Extension of a translation-invariant field on a subtree of order `k0`
    /// by zero fields on the extra branches.
    ArtTranslationInvariant { k0: u32 },
    /// Two-valued `±h` fields with interface paths starting at every level.
    InterfaceBG,
    TwoPeriodic,
    WeaklyPeriodicI2 { a_size: u32 },
    WeaklyPeriodicI3 { a_size: u32 },
    NewGeneric,
}

impl MeasureFamily {
    pub fn tag(&self) -> &'static str {
        match self {
            Self::TranslationInvariant => "translation_invariant",
            Self::ArtTranslationInvariant { .. } => "art_translation_invariant",
            Self::InterfaceBG => "interface_bg",
            Self::TwoPeriodic => "two_periodic",
            Self::WeaklyPeriodicI2 { .. } => "weakly_periodic_i2",
            Self::WeaklyPeriodicI3 { .. } => "weakly_periodic_i3",
            Self::NewGeneric => "new_generic",
        }
    }

    /// `k0` for ART, `|A|` for the weakly periodic families.
    pub fn param(&self) -> Option<u32> {
        match *self {
            Self::ArtTranslationInvariant { k0 } => Some(k0),
            Self::WeaklyPeriodicI2 { a_size } | Self::WeaklyPeriodicI3 { a_size } => Some(a_size),
            _ => None,
        }
    }
}

impl fmt::Display for MeasureFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::ArtTranslationInvariant { k0 } => write!(f, "{}(k0={k0})", self.tag()),
            Self::WeaklyPeriodicI2 { a_size } | Self::WeaklyPeriodicI3 { a_size } => {
                write!(f, "{}(|A|={a_size})", self.tag())
            }
            _ => f.write_str(self.tag()),
        }
    }
}

/// Label a scheme by the first matching family pattern, in the priority
/// order translation-invariant, ART, interface, two-periodic, weakly
/// periodic I2, weakly periodic I3. Falls back to [`MeasureFamily::NewGeneric`].
pub fn classify(m: &SchemeMatrix, fields: &FieldPair) -> MeasureFamily {
    let k = m.k;
    let [a1, a2, a3, a4] = m.a;
    let [b1, b2, b3, b4] = m.b;
    let l_zero = fields.l.abs() <= FIELD_MATCH_TOL;
    let l_eq_h = (fields.l - fields.h).abs() <= FIELD_MATCH_TOL;

    if a1 == k {
        return MeasureFamily::TranslationInvariant;
    }
    if a1 >= 1 && a2 == 0 && b1 == 0 && b2 == 0 && l_zero {
        // a3 + a4 = k − a1 is implied by the row sum
        return MeasureFamily::ArtTranslationInvariant { k0: a1 };
    }
    if l_eq_h && m.a == m.b && a2 + a4 == a3 {
        return MeasureFamily::InterfaceBG;
    }
    if a1 == 0 && a2 == k {
        return MeasureFamily::TwoPeriodic;
    }
    let weakly_periodic = |size: u32, tail_a: [u32; 2], tail_b: [u32; 2]| {
        size >= 1
            && size <= k
            && a1 == k - size
            && a2 == 0
            && [a3, a4] == tail_a
            && b1 == k + 1 - size
            && b2 == 0
            && [b3, b4] == tail_b
    };
    if weakly_periodic(a3, [a3, 0], [a3.wrapping_sub(1), 0]) {
        return MeasureFamily::WeaklyPeriodicI2 { a_size: a3 };
    }
    if weakly_periodic(a4, [0, a4], [0, a4.wrapping_sub(1)]) {
        return MeasureFamily::WeaklyPeriodicI3 { a_size: a4 };
    }
    MeasureFamily::NewGeneric
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sm(k: u32, a: [u32; 4], b: [u32; 4]) -> SchemeMatrix {
        SchemeMatrix::new(k, a, b).unwrap()
    }

    #[test]
    fn reduce_examples() {
        assert_eq!(sm(6, [2, 1, 1, 2], [1, 1, 2, 2]).reduce(), ReducedParams::new(1, -1, 0, 0));
        assert_eq!(sm(3, [3, 0, 0, 0], [3, 0, 0, 0]).reduce(), ReducedParams::new(3, 0, 3, 0));
        assert_eq!(sm(2, [0, 2, 0, 0], [0, 0, 1, 1]).reduce(), ReducedParams::new(-2, 0, 0, 0));
    }

    #[test]
    fn invalid_rows_rejected() {
        assert!(matches!(
            SchemeMatrix::new(2, [3, 0, 0, 0], [2, 0, 0, 0]),
            Err(Error::InvalidScheme(_))
        ));
        assert!(SchemeMatrix::new(2, [1, 0, 0, 0], [2, 0, 0, 0]).is_err());
        assert!(SchemeMatrix::new(0, [0; 4], [0; 4]).is_err());
    }

    #[test]
    fn mirrored_matrix_layout() {
        let m = sm(6, [2, 1, 1, 2], [1, 1, 2, 2]);
        assert_eq!(m.matrix()[1], [1, 2, 2, 1]);
        assert_eq!(m.matrix()[3], [1, 1, 2, 2]);
    }

    fn nested_loop_count(k: u32) -> usize {
        let mut n = 0;
        for a1 in 0..=k {
            for a2 in 0..=k {
                for a3 in 0..=k {
                    for a4 in 0..=k {
                        if a1 + a2 + a3 + a4 == k {
                            n += 1;
                        }
                    }
                }
            }
        }
        n * n
    }

    #[test]
    fn enumeration_counts_and_order() {
        for k in 1..=5 {
            let all: Vec<_> = enumerate_schemes(k).collect();
            assert_eq!(all.len(), nested_loop_count(k));
            assert_eq!(all.len() as u64, scheme_count(k));
            assert!(all.windows(2).all(|w| (w[0].a, w[0].b) < (w[1].a, w[1].b)));
        }
        assert_eq!(enumerate_schemes(1).count(), 16);
        assert_eq!(enumerate_schemes(2).count(), 100);
        assert_eq!(enumerate_schemes(3).count(), 400);
        let first = enumerate_schemes(2).next().unwrap();
        assert_eq!((first.a_row(), first.b_row()), ([0, 0, 0, 2], [0, 0, 0, 2]));
        assert_eq!(enumerate_schemes(0).count(), 0);
    }

    #[test]
    fn realizable_set_is_image_of_reduce() {
        for k in 1..=4 {
            let image: BTreeSet<_> = enumerate_schemes(k).map(|m| m.reduce()).collect();
            let direct = realizable_reduced(k);
            assert_eq!(image, direct, "k={k}");
            assert!(direct.contains(&ReducedParams::new(k as i32, 0, k as i32, 0)));
            for r in &image {
                assert!(r.a.abs() + r.b.abs() <= k as i32 && r.c.abs() + r.d.abs() <= k as i32);
                assert_eq!((r.a + r.b - k as i32).rem_euclid(2), 0);
                assert_eq!((r.c + r.d - k as i32).rem_euclid(2), 0);
            }
        }
        assert_eq!(realizable_reduced(2).len(), 81);
        let k1 = realizable_reduced(1);
        assert_eq!(k1.len(), 16);
        assert!(k1.iter().all(|r| r.a.abs() + r.b.abs() == 1));
    }

    #[test]
    fn criterion_examples() {
        let r = ReducedParams::new(0, 2, 2, 0);
        assert!(nonuniqueness_criterion(&r, 0.6));
        assert!(!nonuniqueness_criterion(&r, 0.4));
        assert!(!nonuniqueness_criterion(&ReducedParams::new(0, 0, 0, 0), 0.99));
        // value exactly 1 is not enough
        assert!(!nonuniqueness_criterion(&r, 0.5));
    }

    #[test]
    fn criterion_invariant_under_theta_and_parameter_negation() {
        for r in realizable_reduced(2) {
            for i in 1..20 {
                let t = 0.05 * i as f64;
                assert_eq!(r.criterion_value(t), r.negated().criterion_value(-t));
                assert_eq!(nonuniqueness_criterion(&r, t), nonuniqueness_criterion(&r.negated(), -t));
            }
        }
    }

    #[test]
    fn classify_known_schemes() {
        let zero = FieldPair::new(0.0, 0.0);
        let h_only = FieldPair::new(1.3, 0.0);
        // ART, k=5, a1=2, a3+a4=3, a2=b1=b2=0, l=0
        for (a3, a4) in [(3, 0), (1, 2), (0, 3)] {
            let m = sm(5, [2, 0, a3, a4], [0, 0, 2, 3]);
            assert_eq!(classify(&m, &h_only), MeasureFamily::ArtTranslationInvariant { k0: 2 });
        }
        // alternating ±h
        assert_eq!(classify(&sm(3, [0, 3, 0, 0], [0, 3, 0, 0]), &zero), MeasureFamily::TwoPeriodic);
        // weakly periodic I3
        assert_eq!(
            classify(&sm(4, [3, 0, 0, 1], [4, 0, 0, 0]), &FieldPair::new(1.0, 0.4)),
            MeasureFamily::WeaklyPeriodicI3 { a_size: 1 }
        );
        // interface: a=(3,0,1,1) with b=a and l=h
        let m = sm(5, [3, 0, 1, 1], [3, 0, 1, 1]);
        assert_eq!(classify(&m, &FieldPair::new(0.9, 0.9)), MeasureFamily::InterfaceBG);
        assert_eq!(classify(&m, &FieldPair::new(0.9, 0.2)), MeasureFamily::NewGeneric);
    }

    #[test]
    fn classify_priority_and_fallbacks() {
        // a1 = k matches TI before ART
        let ti = sm(3, [3, 0, 0, 0], [0, 0, 1, 2]);
        assert_eq!(classify(&ti, &FieldPair::new(1.0, 0.0)), MeasureFamily::TranslationInvariant);
        // ART requires l = 0
        let art = sm(3, [1, 0, 1, 1], [0, 0, 3, 0]);
        assert_eq!(classify(&art, &FieldPair::new(1.0, 1e-12)), MeasureFamily::ArtTranslationInvariant { k0: 1 });
        assert_eq!(classify(&art, &FieldPair::new(1.0, 0.5)), MeasureFamily::NewGeneric);
        // weakly periodic I2 with |A| = 2, k = 3
        let wp2 = sm(3, [1, 0, 2, 0], [2, 0, 1, 0]);
        assert_eq!(classify(&wp2, &FieldPair::new(1.0, 0.7)), MeasureFamily::WeaklyPeriodicI2 { a_size: 2 });
        // |A| = k for I3
        let wp3 = sm(2, [0, 0, 0, 2], [1, 0, 0, 1]);
        assert_eq!(classify(&wp3, &FieldPair::new(1.0, 0.7)), MeasureFamily::WeaklyPeriodicI3 { a_size: 2 });
        // mixed k=6 scheme is new
        let mixed = sm(6, [2, 1, 1, 2], [1, 1, 2, 2]);
        assert_eq!(classify(&mixed, &FieldPair::new(0.3, 0.1)), MeasureFamily::NewGeneric);
    }

    #[test]
    fn classify_is_total_over_small_orders() {
        let pairs = [FieldPair::new(0.0, 0.0), FieldPair::new(1.0, 1.0), FieldPair::new(1.0, -0.5)];
        for k in 1..=3 {
            for m in enumerate_schemes(k) {
                for p in &pairs {
                    let fam = classify(&m, p);
                    assert_eq!(fam.param().is_some(), matches!(
                        fam,
                        MeasureFamily::ArtTranslationInvariant { .. }
                            | MeasureFamily::WeaklyPeriodicI2 { .. }
                            | MeasureFamily::WeaklyPeriodicI3 { .. }
                    ));
                }
            }
        }
    }

    #[test]
    fn family_display() {
        assert_eq!(MeasureFamily::ArtTranslationInvariant { k0: 2 }.to_string(), "art_translation_invariant(k0=2)");
        assert_eq!(MeasureFamily::TwoPeriodic.to_string(), "two_periodic");
    }
}
