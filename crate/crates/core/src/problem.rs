//! Problem specifications: alphabets, symbol measures, the embedding
//! relation on characters, and the good symbol sets.
//!
//! A specification either lists a finite alphabet outright or lists a finite
//! prefix of an infinite one together with the exact mass left in the tail
//! (the gap-class alphabet is the one infinite case).  Probabilities are
//! exact rationals throughout.

use crate::error::{contract, Result};
use crate::params::{pow2_neg, rat_int, Rat};
use num::{One, Zero};
use std::collections::BTreeSet;

/// Characters are indices into an alphabet list.
pub type Symbol = u32;
pub type SymbolSeq = Vec<Symbol>;

#[derive(Debug, Clone)]
pub enum Relation {
    /// Explicit pair list on a finite alphabet.
    Pairs(BTreeSet<(Symbol, Symbol)>),
    /// `x` embeds in `y` iff |x - y| <= w (gap classes).
    Window(u32),
}

impl Relation {
    pub fn related(&self, x: Symbol, y: Symbol) -> bool {
        match self {
            Relation::Pairs(set) => set.contains(&(x, y)),
            Relation::Window(w) => x.abs_diff(y) <= *w,
        }
    }
}

#[derive(Debug, Clone)]
pub enum GoodSet {
    Set(BTreeSet<Symbol>),
    /// All symbols with index <= bound (gap classes C_0..C_{M0}).
    UpTo(Symbol),
}

impl GoodSet {
    pub fn contains(&self, s: Symbol) -> bool {
        match self {
            GoodSet::Set(set) => set.contains(&s),
            GoodSet::UpTo(b) => s <= *b,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub alphabet_x: Vec<String>,
    pub alphabet_y: Vec<String>,
    /// Exact masses of the listed symbols; may be short of 1 by `tail_x`.
    pub mu_x: Vec<Rat>,
    pub mu_y: Vec<Rat>,
    /// Unlisted-tail masses (zero for finite alphabets).
    pub tail_x: Rat,
    pub tail_y: Rat,
    pub relation: Relation,
    pub good_x: GoodSet,
    pub good_y: GoodSet,
}

impl ProblemSpec {
    pub fn related(&self, x: Symbol, y: Symbol) -> bool {
        self.relation.related(x, y)
    }

    pub fn is_good_x(&self, s: Symbol) -> bool {
        self.good_x.contains(s)
    }

    pub fn is_good_y(&self, s: Symbol) -> bool {
        self.good_y.contains(s)
    }

    /// Exact mass of the good symbols on the given side (listed part only).
    pub fn good_mass(&self, y_side: bool) -> Rat {
        let (mu, good): (&Vec<Rat>, &GoodSet) = if y_side {
            (&self.mu_y, &self.good_y)
        } else {
            (&self.mu_x, &self.good_x)
        };
        mu.iter()
            .enumerate()
            .filter(|(i, _)| good.contains(*i as Symbol))
            .map(|(_, p)| p.clone())
            .sum()
    }

    /// Structural sanity: masses in [0,1], listed + tail = 1, good pairs related.
    pub fn check(&self) -> Result<()> {
        for (mu, tail, side) in [(&self.mu_x, &self.tail_x, "x"), (&self.mu_y, &self.tail_y, "y")] {
            if mu.iter().any(|p| p < &Rat::zero()) {
                return Err(contract(format!("negative symbol mass on side {side}")));
            }
            let total: Rat = mu.iter().cloned().sum::<Rat>() + tail.clone();
            if total != Rat::one() {
                return Err(contract(format!("symbol masses on side {side} sum to {total}, not 1")));
            }
        }
        // every good x must embed in every good y (needed by all downstream
        // good-segment reasoning)
        for x in 0..self.mu_x.len() as Symbol {
            if !self.is_good_x(x) {
                continue;
            }
            for y in 0..self.mu_y.len() as Symbol {
                if self.is_good_y(y) && !self.related(x, y) {
                    return Err(contract(format!(
                        "good pair ({x}, {y}) is not in the relation"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Binary sequences compared after deleting zeros: alphabet {0, 1} both
/// sides with P(1) = q, relation {0->0, 0->1, 1->0}, good = {0}.
pub fn compatible_spec(q: Rat) -> Result<ProblemSpec> {
    if q < Rat::zero() || q > Rat::one() {
        return Err(contract("q must lie in [0, 1]"));
    }
    let spec = ProblemSpec {
        name: format!("compatible(q={q})"),
        alphabet_x: vec!["0".into(), "1".into()],
        alphabet_y: vec!["0".into(), "1".into()],
        mu_x: vec![Rat::one() - q.clone(), q.clone()],
        mu_y: vec![Rat::one() - q.clone(), q],
        tail_x: Rat::zero(),
        tail_y: Rat::zero(),
        relation: Relation::Pairs([(0, 0), (0, 1), (1, 0)].into_iter().collect()),
        good_x: GoodSet::Set([0].into_iter().collect()),
        good_y: GoodSet::Set([0].into_iter().collect()),
    };
    spec.check()?;
    Ok(spec)
}

/// Symbol order for the word-classification alphabet.
pub const W_ZERO: Symbol = 0;
pub const W_ONE: Symbol = 1;
pub const W_STAR: Symbol = 2;

/// Number of adjacent flips in a word.
pub fn flip_count(word: &[u8]) -> usize {
    word.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Classifies an M0-letter binary word: star when it has at least
/// `2 * R0^+ = 6 R^2` flips, otherwise by its majority bit (ties go to ONE).
pub fn classify_word(word: &[u8], r: u64) -> Symbol {
    let star_flips = (6 * r * r) as usize;
    if flip_count(word) >= star_flips {
        return W_STAR;
    }
    let ones = word.iter().filter(|&&b| b == 1).count();
    if 2 * ones >= word.len() {
        W_ONE
    } else {
        W_ZERO
    }
}

/// The word-comparison specification: X symbols are single bits (uniform),
/// Y symbols are classified M0-letter words; a bit embeds in its own class
/// and in star.
#[allow(clippy::needless_range_loop)] // DP tables indexed on several axes
pub fn lipschitz_spec(m0: u32, r: u64) -> Result<ProblemSpec> {
    if m0 == 0 || m0 > 24 {
        return Err(contract("word length must lie in 1..=24"));
    }
    // Exact class masses: count words by (last bit, flips, ones).
    let mut counts = [Rat::zero(), Rat::zero(), Rat::zero()];
    // dp[last][flips][ones] = number of words so far
    let n = m0 as usize;
    let mut dp = vec![vec![[0u64; 2]; n + 1]; n + 1];
    dp[0][0][0] = 1; // last = 0
    dp[0][1][1] = 1; // last = 1
    for _ in 1..n {
        let mut next = vec![vec![[0u64; 2]; n + 1]; n + 1];
        for flips in 0..n {
            for ones in 0..=n {
                for last in 0..2usize {
                    let c = dp[flips][ones][last];
                    if c == 0 {
                        continue;
                    }
                    for b in 0..2usize {
                        let nf = flips + usize::from(b != last);
                        let no = ones + b;
                        if no <= n {
                            next[nf][no][b] += c;
                        }
                    }
                }
            }
        }
        dp = next;
    }
    let star_flips = (6 * r * r) as usize;
    let denom = rat_int(1) * Rat::new(num::BigInt::one(), num::BigInt::one() << m0);
    for flips in 0..n {
        for ones in 0..=n {
            for last in 0..2usize {
                let c = dp[flips][ones][last];
                if c == 0 {
                    continue;
                }
                let class = if flips >= star_flips {
                    W_STAR
                } else if 2 * ones >= n {
                    W_ONE
                } else {
                    W_ZERO
                };
                counts[class as usize] += rat_int(c as i64) * denom.clone();
            }
        }
    }
    let spec = ProblemSpec {
        name: format!("lipschitz(m0={m0}, r={r})"),
        alphabet_x: vec!["0".into(), "1".into()],
        alphabet_y: vec!["ZERO".into(), "ONE".into(), "STAR".into()],
        mu_x: vec![Rat::new(num::BigInt::one(), 2.into()); 2],
        mu_y: counts.to_vec(),
        tail_x: Rat::zero(),
        tail_y: Rat::zero(),
        relation: Relation::Pairs(
            [(0, W_ZERO), (0, W_STAR), (1, W_ONE), (1, W_STAR)].into_iter().collect(),
        ),
        good_x: GoodSet::Set([0, 1].into_iter().collect()),
        good_y: GoodSet::Set([W_STAR].into_iter().collect()),
    };
    spec.check()?;
    Ok(spec)
}

/// Exact gap-class mass: mu(C_0) = 1/2, mu(C_k) = (1/2)^(2^(k-1)) - (1/2)^(2^k).
pub fn gap_class_mass(k: u32) -> Rat {
    if k == 0 {
        return pow2_neg(1);
    }
    pow2_neg(1 << (k - 1)) - pow2_neg(1 << k)
}

/// Gap-class specification truncated at C_trunc on both sides; the relation
/// is |k - k'| <= m0 and the good classes are C_0..C_{m0}.
pub fn roughiso_spec(m0: u32, trunc: u32) -> Result<ProblemSpec> {
    if trunc < m0 + 1 || trunc > 24 {
        return Err(contract("truncation index must lie in m0+1..=24"));
    }
    let names: Vec<String> = (0..=trunc).map(|k| format!("C{k}")).collect();
    let mu: Vec<Rat> = (0..=trunc).map(gap_class_mass).collect();
    let tail = pow2_neg(1 << trunc);
    let spec = ProblemSpec {
        name: format!("roughiso(m0={m0}, trunc={trunc})"),
        alphabet_x: names.clone(),
        alphabet_y: names,
        mu_x: mu.clone(),
        mu_y: mu,
        tail_x: tail.clone(),
        tail_y: tail,
        relation: Relation::Window(m0),
        good_x: GoodSet::UpTo(m0),
        good_y: GoodSet::UpTo(m0),
    };
    spec.check()?;
    Ok(spec)
}
