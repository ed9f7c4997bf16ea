//! Correlation tables, relabeling symmetry and zero-class classification.
//!
//! A behavior is stored as 16 dense reals. The cell of `P(a,b|x,y)` sits at
//! row `2y+b`, column `2x+a` of the 4×4 table, and the flat index is
//! `row * 4 + column`. The JSON form is the same 4×4 table, row-major.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;
use thiserror::Error;

/// Default tolerance below which a cell counts as zero.
pub const ZERO_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorrError {
    #[error("tolerance must be positive and finite, got {0}")]
    BadTolerance(f64),
    #[error("deterministic point index {0} out of range 0..16")]
    IndexOutOfRange(usize),
    #[error("negative mixing weight {0}")]
    NegativeWeight(f64),
    #[error("mixing weights sum to {0}, expected 1")]
    WeightSum(f64),
    #[error("empty mixture")]
    EmptyMixture,
    #[error("cell ({row},{col}) is not a finite probability: {value}")]
    BadEntry { row: usize, col: usize, value: f64 },
    #[error("unknown class label {0:?}")]
    UnknownLabel(String),
}

/// Flat index of `P(a,b|x,y)`.
pub const fn cell(a: usize, b: usize, x: usize, y: usize) -> usize {
    (2 * y + b) * 4 + 2 * x + a
}

/// Inverse of [`cell`]: returns `(a, b, x, y)`.
pub const fn cell_coords(i: usize) -> (usize, usize, usize, usize) {
    let row = i / 4;
    let col = i % 4;
    (col % 2, row % 2, col / 2, row / 2)
}

/// Iterates over all 16 `(a, b, x, y)` tuples in flat-index order.
pub fn all_cells() -> impl Iterator<Item = (usize, usize, usize, usize)> {
    (0..16).map(cell_coords)
}

fn sign(bits: usize) -> f64 {
    if bits.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// The 16 joint conditional probabilities of a behavior.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TableJson", into = "TableJson")]
pub struct Correlation {
    p: [f64; 16],
}

#[derive(Serialize, Deserialize)]
struct TableJson {
    p: [[f64; 4]; 4],
}

impl TryFrom<TableJson> for Correlation {
    type Error = CorrError;

    fn try_from(t: TableJson) -> Result<Self, CorrError> {
        Correlation::from_table(t.p, ZERO_TOL)
    }
}

impl From<Correlation> for TableJson {
    fn from(c: Correlation) -> Self {
        TableJson { p: c.table() }
    }
}

impl Correlation {
    /// Wraps raw cells without any checks; use [`validate`] to inspect them.
    pub const fn from_cells(p: [f64; 16]) -> Self {
        Correlation { p }
    }

    pub fn from_fn(f: impl Fn(usize, usize, usize, usize) -> f64) -> Self {
        let mut p = [0.0; 16];
        for (i, slot) in p.iter_mut().enumerate() {
            let (a, b, x, y) = cell_coords(i);
            *slot = f(a, b, x, y);
        }
        Correlation { p }
    }

    /// Reads a 4×4 table, rejecting NaN and entries below `-tol`.
    pub fn from_table(table: [[f64; 4]; 4], tol: f64) -> Result<Self, CorrError> {
        let mut p = [0.0; 16];
        for (row, cols) in table.iter().enumerate() {
            for (col, &value) in cols.iter().enumerate() {
                if !value.is_finite() || value < -tol {
                    return Err(CorrError::BadEntry { row, col, value });
                }
                p[row * 4 + col] = value;
            }
        }
        Ok(Correlation { p })
    }

    pub fn uniform() -> Self {
        Correlation { p: [0.25; 16] }
    }

    pub fn get(&self, a: usize, b: usize, x: usize, y: usize) -> f64 {
        self.p[cell(a, b, x, y)]
    }

    pub fn cells(&self) -> &[f64; 16] {
        &self.p
    }

    pub fn table(&self) -> [[f64; 4]; 4] {
        let mut t = [[0.0; 4]; 4];
        for (i, v) in self.p.iter().enumerate() {
            t[i / 4][i % 4] = *v;
        }
        t
    }

    /// Largest cell-wise absolute difference.
    pub fn max_abs_diff(&self, other: &Correlation) -> f64 {
        self.p
            .iter()
            .zip(other.p.iter())
            .map(|(u, v)| (u - v).abs())
            .fold(0.0, f64::max)
    }

    pub fn dot(&self, f: &BellFunctional) -> f64 {
        self.p.iter().zip(f.coefficients.iter()).map(|(p, b)| p * b).sum()
    }

    pub fn zero_pattern(&self, tol: f64) -> ZeroPattern {
        ZeroPattern::from_correlation(self, tol)
    }
}

/// A linear functional on behaviors, indexed like [`Correlation`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BellFunctional {
    pub coefficients: [f64; 16],
}

impl BellFunctional {
    pub fn from_fn(f: impl Fn(usize, usize, usize, usize) -> f64) -> Self {
        BellFunctional {
            coefficients: Correlation::from_fn(f).p,
        }
    }

    /// `Σ (−1)^{xy+a+b+1} P(a,b|x,y)`.
    pub fn chsh() -> Self {
        Self::from_fn(|a, b, x, y| sign(x * y + a + b + 1))
    }

    /// Sum of the listed cells.
    pub fn indicator(cells: &[(usize, usize, usize, usize)]) -> Self {
        let mut coefficients = [0.0; 16];
        for &(a, b, x, y) in cells {
            coefficients[cell(a, b, x, y)] += 1.0;
        }
        BellFunctional { coefficients }
    }

    /// The functional `f'` with `f'·relabel(c, r) = f·c` for every `c`.
    pub fn relabeled(&self, r: &Relabeling) -> Self {
        let perm = r.permutation();
        let mut coefficients = [0.0; 16];
        for (new, &old) in perm.iter().enumerate() {
            coefficients[new] = self.coefficients[old];
        }
        BellFunctional { coefficients }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub nonneg: bool,
    pub normalized: bool,
    pub no_signaling: bool,
}

impl ValidityReport {
    pub fn all(&self) -> bool {
        self.nonneg && self.normalized && self.no_signaling
    }
}

fn check_tol(tol: f64) -> Result<(), CorrError> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(CorrError::BadTolerance(tol))
    }
}

/// Reports non-negativity, normalization and the four no-signaling conditions.
pub fn validate(c: &Correlation, tol: f64) -> Result<ValidityReport, CorrError> {
    check_tol(tol)?;
    let nonneg = c.p.iter().all(|&v| v >= -tol);
    let mut normalized = true;
    for x in 0..2 {
        for y in 0..2 {
            let s: f64 = (0..4).map(|k| c.get(k % 2, k / 2, x, y)).sum();
            normalized &= (s - 1.0).abs() <= tol;
        }
    }
    // Alice's marginal must not depend on y, Bob's must not depend on x.
    let mut no_signaling = true;
    for x in 0..2 {
        for a in 0..2 {
            let m0 = c.get(a, 0, x, 0) + c.get(a, 1, x, 0);
            let m1 = c.get(a, 0, x, 1) + c.get(a, 1, x, 1);
            no_signaling &= (m0 - m1).abs() <= tol;
        }
    }
    for y in 0..2 {
        for b in 0..2 {
            let m0 = c.get(0, b, 0, y) + c.get(1, b, 0, y);
            let m1 = c.get(0, b, 1, y) + c.get(1, b, 1, y);
            no_signaling &= (m0 - m1).abs() <= tol;
        }
    }
    Ok(ValidityReport {
        nonneg,
        normalized,
        no_signaling,
    })
}

/// `Σ_{a,b} (−1)^{a+b} P(a,b|x,y)`.
pub fn correlator(c: &Correlation, x: usize, y: usize) -> f64 {
    (0..4).map(|k| sign(k % 2 + k / 2) * c.get(k % 2, k / 2, x, y)).sum()
}

/// Alice's one-party expectation `⟨A_x⟩`, read from the y = 0 block.
pub fn marginal_a(c: &Correlation, x: usize) -> f64 {
    (0..4).map(|k| sign(k % 2) * c.get(k % 2, k / 2, x, 0)).sum()
}

/// Bob's one-party expectation `⟨B_y⟩`, read from the x = 0 block.
pub fn marginal_b(c: &Correlation, y: usize) -> f64 {
    (0..4).map(|k| sign(k / 2) * c.get(k % 2, k / 2, 0, y)).sum()
}

pub fn chsh_value(c: &Correlation) -> f64 {
    c.dot(&BellFunctional::chsh())
}

/// The PR box `½·δ[a⊕b = xy ⊕ αx ⊕ βy ⊕ γ]`.
pub fn pr_box(alpha: bool, beta: bool, gamma: bool) -> Correlation {
    let (al, be, ga) = (alpha as usize, beta as usize, gamma as usize);
    Correlation::from_fn(|a, b, x, y| {
        if (a ^ b) == ((x * y) ^ (al * x) ^ (be * y) ^ ga) {
            0.5
        } else {
            0.0
        }
    })
}

/// Outcome functions `(a(x), b(y))` of deterministic point `j`.
pub fn deterministic_strategy(j: usize) -> Result<([usize; 2], [usize; 2]), CorrError> {
    if j >= 16 {
        return Err(CorrError::IndexOutOfRange(j));
    }
    let (sa, oa, sb, ob) = (j % 2, (j % 4) / 2, (j % 8) / 4, j / 8);
    Ok(([oa, sa ^ oa], [ob, sb ^ ob]))
}

/// Deterministic local point: `a = (j mod 2)·x ⊕ ⌊(j mod 4)/2⌋`, `b = ⌊(j mod 8)/4⌋·y ⊕ ⌊j/8⌋`.
pub fn deterministic_point(j: usize) -> Result<Correlation, CorrError> {
    let (fa, fb) = deterministic_strategy(j)?;
    Ok(Correlation::from_fn(
        |a, b, x, y| {
            if a == fa[x] && b == fb[y] {
                1.0
            } else {
                0.0
            }
        },
    ))
}

/// Convex combination; weights must be non-negative and sum to one within 1e-9.
pub fn mix(terms: &[(f64, Correlation)]) -> Result<Correlation, CorrError> {
    if terms.is_empty() {
        return Err(CorrError::EmptyMixture);
    }
    let mut p = [0.0; 16];
    let mut total = 0.0;
    for (w, c) in terms {
        if *w < 0.0 || !w.is_finite() {
            return Err(CorrError::NegativeWeight(*w));
        }
        total += w;
        for (acc, v) in p.iter_mut().zip(c.p.iter()) {
            *acc += w * v;
        }
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(CorrError::WeightSum(total));
    }
    Ok(Correlation { p })
}

/// An element of the 128-element relabeling group.
///
/// Acting on a table, the new behavior is
/// `P'(a,b|x,y) = P(a⊕a_flip[x'], b⊕b_flip[y'] | x', y')` with `x' = x⊕x_swap`,
/// `y' = y⊕y_swap`, after which `party_swap` exchanges the roles of the two parties.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Relabeling {
    pub a_flip: [bool; 2],
    pub b_flip: [bool; 2],
    pub x_swap: bool,
    pub y_swap: bool,
    pub party_swap: bool,
}

impl Relabeling {
    pub fn identity() -> Self {
        Self::default()
    }

    /// Decodes a group element from a 7-bit code.
    pub fn from_code(code: u8) -> Self {
        let bit = |k: u8| code >> k & 1 == 1;
        Relabeling {
            a_flip: [bit(0), bit(1)],
            b_flip: [bit(2), bit(3)],
            x_swap: bit(4),
            y_swap: bit(5),
            party_swap: bit(6),
        }
    }

    pub fn all() -> impl Iterator<Item = Relabeling> {
        (0u8..128).map(Self::from_code)
    }

    /// `perm[new] = old`: the relabeled table reads cell `old` into cell `new`.
    pub fn permutation(&self) -> [usize; 16] {
        let mut perm = [0; 16];
        for (new, slot) in perm.iter_mut().enumerate() {
            let (mut a, mut b, mut x, mut y) = cell_coords(new);
            if self.party_swap {
                std::mem::swap(&mut a, &mut b);
                std::mem::swap(&mut x, &mut y);
            }
            let xs = x ^ self.x_swap as usize;
            let ys = y ^ self.y_swap as usize;
            let a0 = a ^ self.a_flip[xs] as usize;
            let b0 = b ^ self.b_flip[ys] as usize;
            *slot = cell(a0, b0, xs, ys);
        }
        perm
    }

    /// The element `t` with `apply(apply(c, self), other) = apply(c, t)`.
    pub fn then(&self, other: &Relabeling) -> Relabeling {
        let p1 = self.permutation();
        let p2 = other.permutation();
        let mut target = [0; 16];
        for (new, slot) in target.iter_mut().enumerate() {
            *slot = p1[p2[new]];
        }
        Self::all()
            .find(|r| r.permutation() == target)
            .expect("relabelings form a group")
    }

    pub fn inverse(&self) -> Relabeling {
        Self::all()
            .find(|r| self.then(r) == Relabeling::identity())
            .expect("relabelings form a group")
    }
}

pub fn apply_relabeling(c: &Correlation, r: &Relabeling) -> Correlation {
    let perm = r.permutation();
    let mut p = [0.0; 16];
    for (new, &old) in perm.iter().enumerate() {
        p[new] = c.p[old];
    }
    Correlation { p }
}

/// Set of cells whose probability vanishes, as a 16-bit mask over flat indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct ZeroPattern {
    pub mask: u16,
}

impl ZeroPattern {
    pub fn from_correlation(c: &Correlation, tol: f64) -> Self {
        let mut mask = 0u16;
        for (i, &v) in c.p.iter().enumerate() {
            if v.abs() <= tol {
                mask |= 1 << i;
            }
        }
        ZeroPattern { mask }
    }

    pub fn from_cells(cells: &[(usize, usize, usize, usize)]) -> Self {
        let mut mask = 0u16;
        for &(a, b, x, y) in cells {
            mask |= 1 << cell(a, b, x, y);
        }
        ZeroPattern { mask }
    }

    pub fn cells(&self) -> Vec<(usize, usize, usize, usize)> {
        (0..16).filter(|i| self.mask >> i & 1 == 1).map(cell_coords).collect()
    }

    pub fn len(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    pub fn contains(&self, a: usize, b: usize, x: usize, y: usize) -> bool {
        self.mask >> cell(a, b, x, y) & 1 == 1
    }

    pub fn union(&self, other: &ZeroPattern) -> ZeroPattern {
        ZeroPattern {
            mask: self.mask | other.mask,
        }
    }

    /// Pattern of the relabeled table.
    pub fn relabeled(&self, r: &Relabeling) -> ZeroPattern {
        let perm = r.permutation();
        let mut mask = 0u16;
        for (new, &old) in perm.iter().enumerate() {
            if self.mask >> old & 1 == 1 {
                mask |= 1 << new;
            }
        }
        ZeroPattern { mask }
    }

    /// Lexicographically smallest mask over the relabeling orbit.
    pub fn canonical(&self) -> ZeroPattern {
        Relabeling::all()
            .map(|r| self.relabeled(&r))
            .min()
            .expect("orbit is non-empty")
    }

    /// True when some row `(y,b)` or column `(x,a)` of the table holds two or more zeros.
    pub fn shares_row_or_column(&self) -> bool {
        let mut rows = [0; 4];
        let mut cols = [0; 4];
        for i in (0..16).filter(|i| self.mask >> i & 1 == 1) {
            rows[i / 4] += 1;
            cols[i % 4] += 1;
        }
        rows.iter().chain(cols.iter()).any(|&n| n >= 2)
    }
}

/// Zero-class of a behavior, invariant under relabeling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassLabel {
    #[serde(rename = "none")]
    None,
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2a")]
    TwoA,
    #[serde(rename = "2b")]
    TwoB,
    #[serde(rename = "2c")]
    TwoC,
    #[serde(rename = "3a")]
    ThreeA,
    #[serde(rename = "3b")]
    ThreeB,
    #[serde(rename = "4a")]
    FourA,
    #[serde(rename = "4b")]
    FourB,
    #[serde(rename = "local-by-lemma1")]
    LocalByLemma1,
    #[serde(rename = "unphysical")]
    Unphysical,
}

impl ClassLabel {
    /// The eight zero-classes, from most zeros to fewest.
    pub const CLASSES: [ClassLabel; 8] = [
        ClassLabel::FourA,
        ClassLabel::FourB,
        ClassLabel::ThreeA,
        ClassLabel::ThreeB,
        ClassLabel::TwoA,
        ClassLabel::TwoB,
        ClassLabel::TwoC,
        ClassLabel::One,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ClassLabel::None => "none",
            ClassLabel::One => "1",
            ClassLabel::TwoA => "2a",
            ClassLabel::TwoB => "2b",
            ClassLabel::TwoC => "2c",
            ClassLabel::ThreeA => "3a",
            ClassLabel::ThreeB => "3b",
            ClassLabel::FourA => "4a",
            ClassLabel::FourB => "4b",
            ClassLabel::LocalByLemma1 => "local-by-lemma1",
            ClassLabel::Unphysical => "unphysical",
        }
    }

    /// Representative zero cells `(a,b,x,y)` of each class.
    pub fn representative_cells(&self) -> Option<&'static [(usize, usize, usize, usize)]> {
        let cells: &'static [(usize, usize, usize, usize)] = match self {
            ClassLabel::FourA => &[(0, 0, 0, 0), (1, 1, 1, 0), (0, 0, 1, 1), (1, 1, 0, 1)],
            ClassLabel::FourB => &[(1, 0, 0, 0), (0, 1, 0, 0), (1, 0, 1, 1), (0, 1, 1, 1)],
            ClassLabel::ThreeA => &[(0, 0, 0, 0), (1, 1, 1, 0), (1, 1, 0, 1)],
            ClassLabel::ThreeB => &[(0, 0, 0, 0), (1, 1, 0, 0), (1, 0, 1, 1)],
            ClassLabel::TwoA => &[(0, 0, 0, 0), (1, 1, 0, 0)],
            ClassLabel::TwoB => &[(0, 0, 0, 0), (1, 1, 1, 0)],
            ClassLabel::TwoC => &[(0, 0, 0, 0), (1, 0, 1, 1)],
            ClassLabel::One => &[(0, 0, 0, 0)],
            _ => return None,
        };
        Some(cells)
    }

    pub fn representative_pattern(&self) -> Option<ZeroPattern> {
        self.representative_cells().map(ZeroPattern::from_cells)
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassLabel {
    type Err = CorrError;

    fn from_str(s: &str) -> Result<Self, CorrError> {
        let lower = s.trim().to_ascii_lowercase();
        let label = match lower.as_str() {
            "none" => ClassLabel::None,
            "1" => ClassLabel::One,
            "2a" => ClassLabel::TwoA,
            "2b" => ClassLabel::TwoB,
            "2c" => ClassLabel::TwoC,
            "3a" => ClassLabel::ThreeA,
            "3b" => ClassLabel::ThreeB,
            "4a" => ClassLabel::FourA,
            "4b" => ClassLabel::FourB,
            "local-by-lemma1" | "lemma1" => ClassLabel::LocalByLemma1,
            "unphysical" => ClassLabel::Unphysical,
            _ => return Err(CorrError::UnknownLabel(s.to_string())),
        };
        Ok(label)
    }
}

fn canonical_table() -> &'static [(u16, ClassLabel)] {
    static TABLE: OnceLock<Vec<(u16, ClassLabel)>> = OnceLock::new();
    TABLE.get_or_init(|| {
        ClassLabel::CLASSES
            .iter()
            .map(|l| {
                let p = l.representative_pattern().expect("class has cells");
                (p.canonical().mask, *l)
            })
            .collect()
    })
}

/// Classifies a zero pattern.
///
/// More than 12 zeros cannot be normalized. Two zeros sharing a row or column
/// force locality, and with five or more zeros that always happens. Otherwise
/// the canonical orbit representative is matched against the eight classes.
pub fn classify_pattern(pattern: &ZeroPattern) -> ClassLabel {
    if pattern.len() > 12 {
        return ClassLabel::Unphysical;
    }
    if pattern.is_empty() {
        return ClassLabel::None;
    }
    if pattern.shares_row_or_column() {
        return ClassLabel::LocalByLemma1;
    }
    let canon = pattern.canonical().mask;
    canonical_table()
        .iter()
        .find(|(m, _)| *m == canon)
        .map(|(_, l)| *l)
        .expect("every pattern without shared rows or columns is one of the eight classes")
}

pub fn classify_zero_class(c: &Correlation, tol: f64) -> ClassLabel {
    classify_pattern(&ZeroPattern::from_correlation(c, tol))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_roundtrip() {
        for i in 0..16 {
            let (a, b, x, y) = cell_coords(i);
            assert_eq!(cell(a, b, x, y), i);
        }
    }

    #[test]
    fn pr_box_table_layout() {
        let h = 0.5;
        let expected = [[0.0, h, 0.0, h], [h, 0.0, h, 0.0], [0.0, h, h, 0.0], [h, 0.0, 0.0, h]];
        assert_eq!(pr_box(false, false, true).table(), expected);
        assert_eq!(chsh_value(&pr_box(false, false, true)), 4.0);
        assert_eq!(correlator(&pr_box(false, false, true), 0, 0), -1.0);
    }

    #[test]
    fn pr_box_zero_gamma_is_outcome_flip() {
        let flip = Relabeling {
            a_flip: [true, true],
            ..Default::default()
        };
        let flipped = apply_relabeling(&pr_box(false, false, true), &flip);
        assert_eq!(flipped, pr_box(false, false, false));
    }

    #[test]
    fn all_pr_boxes_are_no_signaling() {
        for code in 0..8 {
            let c = pr_box(code & 1 == 1, code & 2 == 2, code & 4 == 4);
            assert!(validate(&c, 1e-12).unwrap().all());
        }
    }

    #[test]
    fn signaling_table_is_flagged() {
        let c = Correlation::from_fn(|a, b, x, y| {
            if (x, y) == (0, 0) {
                if (a, b) == (0, 0) {
                    1.0
                } else {
                    0.0
                }
            } else {
                0.25
            }
        });
        let r = validate(&c, 1e-9).unwrap();
        assert!(r.nonneg && r.normalized && !r.no_signaling);
    }

    #[test]
    fn validate_rejects_bad_tolerance() {
        assert!(validate(&Correlation::uniform(), 0.0).is_err());
        assert!(validate(&Correlation::uniform(), f64::NAN).is_err());
    }

    #[test]
    fn deterministic_points() {
        let d3 = deterministic_point(3).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                assert_eq!(d3.get(x ^ 1, 0, x, y), 1.0);
            }
        }
        let d0 = deterministic_point(0).unwrap();
        assert!((0..2).all(|x| (0..2).all(|y| d0.get(0, 0, x, y) == 1.0)));
        let mut seen = std::collections::HashSet::new();
        for j in 0..16 {
            let d = deterministic_point(j).unwrap();
            assert!(validate(&d, 1e-12).unwrap().all());
            assert!(seen.insert(d.cells().map(|v| v as u8)));
            assert!(chsh_value(&d).abs() <= 2.0);
        }
        assert_eq!(deterministic_point(16), Err(CorrError::IndexOutOfRange(16)));
    }

    #[test]
    fn mix_reaches_tsirelson() {
        let w = 1.0 / 2f64.sqrt();
        let c = mix(&[(w, pr_box(false, false, true)), (1.0 - w, Correlation::uniform())]).unwrap();
        assert!((chsh_value(&c) - 2.0 * 2f64.sqrt()).abs() < 1e-14);
        let pr = pr_box(false, false, true);
        assert_eq!(mix(&[(1.0, pr)]).unwrap(), pr);
        let avg = mix(&[(0.5, pr), (0.5, pr_box(false, false, false))]).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                assert_eq!(correlator(&avg, x, y), 0.0);
            }
        }
        assert!(matches!(
            mix(&[(-0.1, pr), (1.1, pr)]),
            Err(CorrError::NegativeWeight(_))
        ));
        assert!(matches!(mix(&[(0.5, pr)]), Err(CorrError::WeightSum(_))));
    }

    #[test]
    fn relabeling_group_structure() {
        let perms: std::collections::HashSet<[usize; 16]> = Relabeling::all().map(|r| r.permutation()).collect();
        assert_eq!(perms.len(), 128);
        let r = Relabeling::from_code(77);
        let s = Relabeling::from_code(19);
        let c = Correlation::from_fn(|a, b, x, y| (cell(a, b, x, y) as f64).sin());
        let two_step = apply_relabeling(&apply_relabeling(&c, &r), &s);
        assert_eq!(two_step, apply_relabeling(&c, &r.then(&s)));
        assert_eq!(r.then(&r.inverse()), Relabeling::identity());
    }

    #[test]
    fn functional_relabeling_is_adjoint() {
        let c = Correlation::from_fn(|a, b, x, y| (cell(a, b, x, y) as f64).cos());
        let f = BellFunctional::chsh();
        for r in Relabeling::all() {
            let lhs = apply_relabeling(&c, &r).dot(&f.relabeled(&r));
            assert!((lhs - c.dot(&f)).abs() < 1e-12);
        }
    }

    #[test]
    fn every_spread_pattern_is_a_class() {
        let mut counts = std::collections::HashMap::new();
        for mask in 1u32..(1 << 16) {
            let p = ZeroPattern { mask: mask as u16 };
            if p.len() <= 4 && !p.shares_row_or_column() {
                *counts.entry(classify_pattern(&p)).or_insert(0) += 1;
            }
        }
        assert_eq!(counts.len(), 8);
        assert_eq!(counts[&ClassLabel::One], 16);
    }

    #[test]
    fn five_zeros_always_share_a_line() {
        for mask in 0u32..(1 << 16) {
            let p = ZeroPattern { mask: mask as u16 };
            if p.len() >= 5 {
                assert!(p.shares_row_or_column());
            }
        }
    }

    #[test]
    fn label_strings_roundtrip() {
        for l in ClassLabel::CLASSES {
            assert_eq!(l.as_str().parse::<ClassLabel>().unwrap(), l);
        }
        assert!("5c".parse::<ClassLabel>().is_err());
    }

    #[test]
    fn simple_classifications() {
        assert_eq!(classify_zero_class(&Correlation::uniform(), ZERO_TOL), ClassLabel::None);
        assert_eq!(
            classify_zero_class(&pr_box(false, false, true), ZERO_TOL),
            ClassLabel::LocalByLemma1
        );
        let zeros = Correlation::from_cells([0.0; 16]);
        assert_eq!(classify_zero_class(&zeros, ZERO_TOL), ClassLabel::Unphysical);
    }

    #[test]
    fn json_roundtrip_and_rejection() {
        let pr = pr_box(false, false, true);
        let s = serde_json::to_string(&pr).unwrap();
        assert!(s.starts_with("{\"p\":[[0.0,0.5,0.0,0.5]"));
        let back: Correlation = serde_json::from_str(&s).unwrap();
        assert_eq!(back, pr);
        let bad = r#"{"p":[[-0.5,0.5,0.5,0.5],[0,0,0,0],[0.25,0.25,0.25,0.25],[0.25,0.25,0.25,0.25]]}"#;
        assert!(serde_json::from_str::<Correlation>(bad).is_err());
    }
}
