//! Words in two dichotomic observables and bipartite noncommutative polynomials.

use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Party {
    A,
    B,
}

/// A reduced word over `{O₀, O₁}` with `O₀² = O₁² = 1`.
///
/// Reduced words alternate letters, so the length and the first letter determine the word.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Word {
    len: u8,
    first: u8,
}

impl Word {
    pub const IDENTITY: Word = Word { len: 0, first: 0 };

    pub fn letter(x: usize) -> Word {
        assert!(x < 2, "observable index {x}");
        Word { len: 1, first: x as u8 }
    }

    /// Reduces an arbitrary letter sequence.
    pub fn from_letters(letters: &[usize]) -> Word {
        letters.iter().fold(Word::IDENTITY, |w, &x| w.mul(&Word::letter(x)))
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_identity(&self) -> bool {
        self.len == 0
    }

    pub fn letters(&self) -> Vec<usize> {
        (0..self.len).map(|k| ((self.first + k) % 2) as usize).collect()
    }

    fn last(&self) -> u8 {
        (self.first + self.len + 1) % 2
    }

    /// The reversed word, which is the adjoint for Hermitian letters.
    pub fn adjoint(&self) -> Word {
        if self.len == 0 {
            return *self;
        }
        Word {
            len: self.len,
            first: self.last(),
        }
    }

    /// Reduced product `self · other`.
    pub fn mul(&self, other: &Word) -> Word {
        if self.len == 0 {
            return *other;
        }
        if other.len == 0 {
            return *self;
        }
        if self.last() != other.first {
            return Word {
                len: self.len + other.len,
                first: self.first,
            };
        }
        // Equal letters meet; cancellation runs through the shorter word.
        match self.len.cmp(&other.len) {
            std::cmp::Ordering::Equal => Word::IDENTITY,
            std::cmp::Ordering::Greater => Word {
                len: self.len - other.len,
                first: self.first,
            },
            std::cmp::Ordering::Less => Word {
                len: other.len - self.len,
                first: (other.first + self.len) % 2,
            },
        }
    }

    /// All reduced words of length at most `max_len`, shortest first.
    pub fn up_to(max_len: usize) -> Vec<Word> {
        let mut out = vec![Word::IDENTITY];
        for len in 1..=max_len as u8 {
            out.extend((0..2).map(|first| Word { len, first }));
        }
        out
    }

    /// The two words of exactly this length.
    pub fn of_length(len: usize) -> [Word; 2] {
        [0, 1].map(|first| Word { len: len as u8, first })
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len == 0 {
            return f.write_str("1");
        }
        for x in self.letters() {
            write!(f, "O{x}")?;
        }
        Ok(())
    }
}

/// `W_A ⊗ W_B`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Monomial {
    pub a: Word,
    pub b: Word,
}

impl Monomial {
    pub const IDENTITY: Monomial = Monomial {
        a: Word::IDENTITY,
        b: Word::IDENTITY,
    };

    pub fn new(a: Word, b: Word) -> Self {
        Monomial { a, b }
    }

    pub fn alice(w: Word) -> Self {
        Monomial {
            a: w,
            b: Word::IDENTITY,
        }
    }

    pub fn bob(w: Word) -> Self {
        Monomial {
            a: Word::IDENTITY,
            b: w,
        }
    }

    pub fn adjoint(&self) -> Self {
        Monomial {
            a: self.a.adjoint(),
            b: self.b.adjoint(),
        }
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial {
            a: self.a.mul(&other.a),
            b: self.b.mul(&other.b),
        }
    }

    /// Representative of `{m, m†}`; real moments agree on both.
    pub fn canonical(&self) -> Monomial {
        let adj = self.adjoint();
        if adj < *self {
            adj
        } else {
            *self
        }
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}⊗{}", self.a, self.b)
    }
}

/// Real linear combination of monomials.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Polynomial {
    terms: BTreeMap<Monomial, f64>,
}

impl Polynomial {
    pub fn constant(c: f64) -> Self {
        Polynomial::monomial(Monomial::IDENTITY, c)
    }

    pub fn monomial(m: Monomial, c: f64) -> Self {
        let mut p = Polynomial::default();
        p.add_term(m, c);
        p
    }

    /// `c·O_x` on one party.
    pub fn letter(party: Party, x: usize, c: f64) -> Self {
        let w = Word::letter(x);
        let m = match party {
            Party::A => Monomial::alice(w),
            Party::B => Monomial::bob(w),
        };
        Polynomial::monomial(m, c)
    }

    pub fn add_term(&mut self, m: Monomial, c: f64) {
        if c != 0.0 {
            *self.terms.entry(m).or_insert(0.0) += c;
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &f64)> {
        self.terms.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(&self, c: f64) -> Polynomial {
        Polynomial {
            terms: self.terms.iter().map(|(m, v)| (*m, v * c)).collect(),
        }
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(*m, *c);
        }
        out
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = Polynomial::default();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }

    pub fn adjoint(&self) -> Polynomial {
        let mut out = Polynomial::default();
        for (m, c) in &self.terms {
            out.add_term(m.adjoint(), *c);
        }
        out
    }

    /// Largest word length on either party.
    pub fn degree(&self, party: Party) -> usize {
        self.terms
            .keys()
            .map(|m| match party {
                Party::A => m.a.len(),
                Party::B => m.b.len(),
            })
            .max()
            .unwrap_or(0)
    }

    /// Evaluates with `moment(m)` supplying the expectation of each monomial.
    pub fn evaluate(&self, moment: impl Fn(&Monomial) -> f64) -> f64 {
        self.terms.iter().map(|(m, c)| c * moment(m)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(letters: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for &x in letters {
            if out.last() == Some(&x) {
                out.pop();
            } else {
                out.push(x);
            }
        }
        out
    }

    #[test]
    fn products_match_stack_reduction() {
        let words = Word::up_to(5);
        for u in &words {
            for v in &words {
                let mut cat = u.letters();
                cat.extend(v.letters());
                assert_eq!(u.mul(v).letters(), naive(&cat), "{u} · {v}");
            }
            let mut rev = u.letters();
            rev.reverse();
            assert_eq!(u.adjoint().letters(), rev);
        }
    }

    #[test]
    fn counts_per_level() {
        assert_eq!(Word::up_to(1).len(), 3);
        assert_eq!(Word::up_to(2).len(), 5);
        assert_eq!(Word::up_to(3).len(), 7);
    }

    #[test]
    fn polynomial_algebra() {
        let a0 = Polynomial::letter(Party::A, 0, 1.0);
        let sq = a0.mul(&a0);
        assert_eq!(sq, Polynomial::constant(1.0));
        let p = Polynomial::constant(1.0).add(&a0).scale(0.5);
        // (1 + A₀)/2 is idempotent.
        assert_eq!(p.mul(&p), p);
    }
}
