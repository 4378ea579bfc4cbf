//! Embedding probabilities and the semi-bad / strong / good block
//! classifiers.  Probabilities are carried as exact rational intervals:
//! truncated enumeration widens the interval by the unenumerated mass,
//! Monte Carlo by an exact-binomial 95% confidence radius.

use crate::error::{contract, resource, Result};
use crate::params::{l_as_usize, rat_int, scales, Rat};
use crate::problem::{ProblemSpec, Symbol};
use num::{BigInt, BigUint, FromPrimitive, One, Zero};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// A block word at level j: indices into the level-(j-1) distribution's
/// support (plain symbols at level 0).
pub type Word = Vec<u32>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProbMethod {
    ExactTruncated,
    MonteCarlo { trials: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbInterval {
    pub lo: Rat,
    pub hi: Rat,
    pub method: ProbMethod,
}

impl ProbInterval {
    pub fn exact(v: Rat) -> Self {
        ProbInterval { lo: v.clone(), hi: v, method: ProbMethod::ExactTruncated }
    }

    pub fn check(&self) -> Result<()> {
        if self.lo < Rat::zero() || self.hi > Rat::one() || self.lo > self.hi {
            return Err(contract(format!(
                "probability interval [{}, {}] leaves [0,1]",
                self.lo, self.hi
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TriState {
    Yes,
    No,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistEntry {
    pub word: Word,
    pub prob: Rat,
    /// overshoot count T of the good-run scan (0 at level 0)
    pub t: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockDistribution {
    pub level: u32,
    pub entries: Vec<DistEntry>,
    /// exact mass left out of `entries`
    pub mass_deficit: Rat,
}

impl BlockDistribution {
    pub fn check(&self) -> Result<()> {
        let mut total = self.mass_deficit.clone();
        for e in &self.entries {
            if e.prob <= Rat::zero() {
                return Err(contract("distribution weight not positive"));
            }
            total += e.prob.clone();
        }
        if total != Rat::one() {
            return Err(contract(format!("distribution mass {total} != 1")));
        }
        Ok(())
    }
}

/// Level-0 law straight from the problem: one entry per listed symbol,
/// deficit equal to the unlisted tail.
pub fn level0_distribution(spec: &ProblemSpec, y_side: bool) -> BlockDistribution {
    let mu = if y_side { &spec.mu_y } else { &spec.mu_x };
    let tail = if y_side { &spec.tail_y } else { &spec.tail_x };
    let entries = mu
        .iter()
        .enumerate()
        .filter(|(_, p)| !p.is_zero())
        .map(|(s, p)| DistEntry { word: vec![s as Symbol], prob: p.clone(), t: 0 })
        .collect();
    BlockDistribution { level: 0, entries, mass_deficit: tail.clone() }
}

#[derive(Debug, Clone, Serialize)]
pub struct EnumCaps {
    /// largest overshoot T enumerated; None derives it from epsilon
    pub t_cap: Option<u64>,
    /// largest number of bad sub-blocks per word
    pub max_bad: usize,
    pub max_entries: usize,
    pub work_cap: u64,
}

impl Default for EnumCaps {
    fn default() -> Self {
        EnumCaps { t_cap: None, max_bad: 2, max_entries: 1 << 20, work_cap: 50_000_000 }
    }
}

/// For a word with bad sub-blocks at `bads` (sorted, 1-indexed, all in
/// (lj3, l]) and scan start floor lj3 + a, the set of geometric draws w
/// consistent with the block ending exactly at l + lj3 is the contiguous
/// range [w_lo, t].  A draw is inconsistent when the scan starting at
/// lj3 + a + w would have found an earlier all-good run of length 2*lj3.
pub(crate) fn w_lower(bads: &[usize], lj3: usize, a: usize, l: usize) -> u64 {
    // success at i (i.e. positions i+1 .. i+2*lj3 all good, indices past the
    // block counting as good) <=> no bad position d with i < d <= i + 2*lj3
    let floor = lj3 + a;
    let mut last_success: Option<usize> = None;
    for i in (floor..l).rev() {
        let hit = bads
            .iter()
            .any(|&d| d > i && d <= i + 2 * lj3);
        if !hit {
            last_success = Some(i);
            break;
        }
    }
    match last_success {
        Some(i) => (i + 1 - floor) as u64,
        None => 0,
    }
}

/// P(W in [a, b]) for W geometric on {0,1,...} with success probability p.
pub(crate) fn geom_range_mass(p: &Rat, a: u64, b: u64) -> Rat {
    let q = Rat::one() - p.clone();
    pow_rat(&q, a) - pow_rat(&q, b + 1)
}

pub(crate) fn pow_rat(x: &Rat, e: u64) -> Rat {
    let e_i32 = i32::try_from(e).expect("exponent fits i32");
    x.pow(e_i32)
}

/// Enumerates the level-(j+1) block law over the level-j support `prev`,
/// stopping once the left-out mass is at most `epsilon`.
pub fn enumerate_block_distribution(
    j1: u32,
    ps: &crate::params::ParameterSet,
    prev: &BlockDistribution,
    prev_good: &[bool],
    epsilon: &Rat,
    caps: &EnumCaps,
) -> Result<BlockDistribution> {
    if j1 == 0 {
        return Err(contract("level 0 comes from the problem spec, not enumeration"));
    }
    if j1 - 1 != prev.level {
        return Err(contract("previous-level distribution has the wrong level"));
    }
    if prev_good.len() != prev.entries.len() {
        return Err(contract("good flags do not match the support"));
    }
    let j = j1 - 1;
    let sc = scales(ps, j)?;
    let l = l_as_usize(&sc)?;
    let lj3 = l.pow(3);
    let a = l.pow(ps.alpha as u32 - 1);
    let p_geom = Rat::new(BigInt::one(), BigInt::from(l).pow(4));
    let g = {
        let mut m = Rat::zero();
        for (e, good) in prev.entries.iter().zip(prev_good) {
            if *good {
                m += e.prob.clone();
            }
        }
        m
    };
    if g.is_zero() {
        return Err(contract("previous level has no good mass"));
    }
    let t_cap = match caps.t_cap {
        Some(t) => t,
        None => {
            // (1-p)^(t+1) <= epsilon/2 suffices when no bad sub-blocks exist
            let q = Rat::one() - p_geom.clone();
            let target = epsilon.clone() / rat_int(2);
            let mut t = 0u64;
            let mut acc = q.clone();
            while acc > target && t < 1 << 22 {
                // exponential stride keeps the bigint work linear
                let step = (t / 2).max(1);
                acc *= pow_rat(&q, step);
                t += step;
            }
            t
        }
    };

    let goods: Vec<u32> = (0..prev.entries.len() as u32).filter(|&i| prev_good[i as usize]).collect();
    let all: Vec<u32> = (0..prev.entries.len() as u32).collect();
    let g_l3 = pow_rat(&g, lj3 as u64);

    let mut entries: Vec<DistEntry> = Vec::new();
    let mut mass = Rat::zero();
    let mut work = 0u64;
    let target = Rat::one() - epsilon.clone();

    'outer: for t in 0..=t_cap {
        let m = a + 2 * lj3 + t as usize;
        let l_stop = m - lj3;
        // positions (1-indexed): 1..lj3 good-conditioned, lj3+1..m free,
        // m-lj3+1..m forced good
        let interior = (lj3 + 1)..=(m - lj3);
        // DFS over the word: prefix choices from `goods` with conditioned
        // weight p/g, interior from `all`, suffix from `goods` with weight p
        struct S<'s> {
            prev: &'s BlockDistribution,
            prev_good: &'s [bool],
            goods: &'s [u32],
            all: &'s [u32],
            lj3: usize,
            a: usize,
            m: usize,
            l_stop: usize,
            t: u64,
            g: Rat,
            g_l3: Rat,
            p_geom: Rat,
            max_bad: usize,
            work_cap: u64,
            max_entries: usize,
        }
        #[allow(clippy::too_many_arguments)]
        fn dfs(
            s: &S,
            pos: usize, // 1-indexed position to fill next
            word: &mut Word,
            bads: &mut Vec<usize>,
            weight: Rat,
            out: &mut Vec<DistEntry>,
            mass: &mut Rat,
            work: &mut u64,
        ) -> Result<()> {
            *work += 1;
            if *work > s.work_cap || out.len() > s.max_entries {
                return Err(resource(format!(
                    "enumeration caps hit with mass deficit {}",
                    Rat::one() - mass.clone()
                )));
            }
            if pos > s.m {
                let w_lo = w_lower(bads, s.lj3, s.a, s.l_stop);
                let prob = weight.clone()
                    * s.g_l3.clone()
                    * geom_range_mass(&s.p_geom, w_lo, s.t);
                *mass += prob.clone();
                out.push(DistEntry { word: word.clone(), prob, t: s.t });
                return Ok(());
            }
            let boundary = pos <= s.lj3 || pos > s.m - s.lj3;
            let options = if boundary { s.goods } else { s.all };
            for &i in options {
                let good = s.prev_good[i as usize];
                if !good && bads.len() >= s.max_bad {
                    continue;
                }
                let mut wpos = s.prev.entries[i as usize].prob.clone();
                if pos <= s.lj3 {
                    wpos /= s.g.clone();
                }
                if !good {
                    bads.push(pos);
                }
                word.push(i);
                dfs(s, pos + 1, word, bads, weight.clone() * wpos, out, mass, work)?;
                word.pop();
                if !good {
                    bads.pop();
                }
            }
            Ok(())
        }
        let st = S {
            prev,
            prev_good,
            goods: &goods,
            all: &all,
            lj3,
            a,
            m,
            l_stop,
            t,
            g: g.clone(),
            g_l3: g_l3.clone(),
            p_geom: p_geom.clone(),
            max_bad: caps.max_bad,
            work_cap: caps.work_cap,
            max_entries: caps.max_entries,
        };
        let _ = interior; // spans documented above; DFS walks positions directly
        let mut word = Word::with_capacity(m);
        let mut badv = Vec::new();
        dfs(&st, 1, &mut word, &mut badv, Rat::one(), &mut entries, &mut mass, &mut work)?;
        if mass >= target {
            break 'outer;
        }
    }
    let deficit = Rat::one() - mass;
    if deficit > *epsilon {
        return Err(resource(format!(
            "enumeration exhausted T <= {t_cap}, bad <= {} with mass deficit {deficit}",
            caps.max_bad
        )));
    }
    Ok(BlockDistribution { level: j1, entries, mass_deficit: deficit })
}

/// S_j(X) against an enumerated law: the deficit is all the interval knows
/// nothing about, so it widens the upper end.
pub fn embedding_prob_exact(
    dist: &BlockDistribution,
    embeds: &dyn Fn(&Word) -> bool,
) -> ProbInterval {
    let mut lo = Rat::zero();
    for e in &dist.entries {
        if embeds(&e.word) {
            lo += e.prob.clone();
        }
    }
    let hi = (&lo + &dist.mass_deficit).min(Rat::one());
    ProbInterval { lo, hi, method: ProbMethod::ExactTruncated }
}

/// Monte-Carlo S_j(X): empirical frequency with an exact-binomial
/// (Clopper-Pearson) 95% interval, rounded outward.
pub fn embedding_prob_mc(
    trials: u64,
    rng: &mut ChaCha8Rng,
    mut sample_embeds: impl FnMut(&mut ChaCha8Rng) -> bool,
) -> Result<ProbInterval> {
    if trials == 0 {
        return Err(contract("at least one trial required"));
    }
    let mut hits = 0u64;
    for _ in 0..trials {
        if sample_embeds(rng) {
            hits += 1;
        }
    }
    let (lo, hi) = binom_ci95(hits, trials);
    let conv = |v: f64| -> Rat {
        Rat::from_f64(v.clamp(0.0, 1.0)).unwrap_or_else(Rat::zero)
    };
    Ok(ProbInterval {
        lo: conv(lo),
        hi: conv(hi).max(conv(lo)),
        method: ProbMethod::MonteCarlo { trials },
    })
}

/// Exact-binomial (Clopper-Pearson) 95% confidence interval for k hits in
/// n trials, widened by a floating-point slop so coverage errs outward.
pub fn binom_ci95(k: u64, n: u64) -> (f64, f64) {
    assert!(k <= n && n > 0);
    let lnfac = ln_factorials(n as usize);
    let ln_choose = |i: u64| lnfac[n as usize] - lnfac[i as usize] - lnfac[(n - i) as usize];
    // upper tail P(X >= k | p), lower tail P(X <= k | p)
    let tail_ge = |p: f64| -> f64 {
        if p <= 0.0 {
            return if k == 0 { 1.0 } else { 0.0 };
        }
        if p >= 1.0 {
            return 1.0;
        }
        (k..=n)
            .map(|i| (ln_choose(i) + i as f64 * p.ln() + (n - i) as f64 * (1.0 - p).ln()).exp())
            .sum()
    };
    let tail_le = |p: f64| -> f64 {
        if p >= 1.0 {
            return if k == n { 1.0 } else { 0.0 };
        }
        if p <= 0.0 {
            return 1.0;
        }
        (0..=k)
            .map(|i| (ln_choose(i) + i as f64 * p.ln() + (n - i) as f64 * (1.0 - p).ln()).exp())
            .sum()
    };
    let alpha2 = 0.025;
    let lo = if k == 0 {
        0.0
    } else {
        // largest p with P(X >= k | p) <= alpha/2; tail_ge increases in p
        bisect(|p| tail_ge(p) - alpha2, 0.0, k as f64 / n as f64)
    };
    let hi = if k == n {
        1.0
    } else {
        // smallest p with P(X <= k | p) <= alpha/2; tail_le decreases in p
        bisect(|p| alpha2 - tail_le(p), k as f64 / n as f64, 1.0)
    };
    ((lo - 1e-9).max(0.0), (hi + 1e-9).min(1.0))
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n + 1];
    for i in 1..=n {
        v[i] = v[i - 1] + (i as f64).ln();
    }
    v
}

/// Root of an increasing sign-change function on [lo, hi].
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if f(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// 1 - 1/(20 k0 R_{j+1}^+): the embedding-probability floor of a semi-bad
/// level-j block.
pub fn semibad_threshold(j: u32, ps: &crate::params::ParameterSet) -> Result<Rat> {
    let r_plus = scales(ps, j + 1)?.r_plus;
    Ok(Rat::one() - Rat::new(BigInt::one(), BigInt::from(20) * BigInt::from(ps.k0) * BigInt::from(r_plus)))
}

/// 1 - 1/(10 k0 R_{j+1}^+): the window-coverage floor of a strong sequence.
pub fn strong_threshold(j: u32, ps: &crate::params::ParameterSet) -> Result<Rat> {
    let r_plus = scales(ps, j + 1)?.r_plus;
    Ok(Rat::one() - Rat::new(BigInt::one(), BigInt::from(10) * BigInt::from(ps.k0) * BigInt::from(r_plus)))
}

/// Semi-bad test for a level-j block with character expansion `chars`.
/// Tri-state: Unknown exactly when the S_j interval straddles the floor.
pub fn is_semibad(
    chars: &[Symbol],
    is_good_block: bool,
    j: u32,
    ps: &crate::params::ParameterSet,
    sval: &ProbInterval,
) -> Result<TriState> {
    sval.check()?;
    let sc = scales(ps, j)?;
    let l = l_as_usize(&sc)?;
    if is_good_block {
        return Ok(TriState::No);
    }
    if chars.len() > 10 * l {
        return Ok(TriState::No);
    }
    if chars
        .iter()
        .any(|&c| !crate::params::leq_pow(&BigUint::from(c), &sc.l, ps.m))
    {
        return Ok(TriState::No);
    }
    let thr = semibad_threshold(j, ps)?;
    if sval.lo >= thr {
        Ok(TriState::Yes)
    } else if sval.hi < thr {
        Ok(TriState::No)
    } else {
        Ok(TriState::Unknown)
    }
}

/// Strong-sequence test: every semi-bad X must embed into at least
/// n(1 - 1/(10 k0 R_{j+1}^+)) of the n window blocks, compared exactly.
pub fn is_strong<X, Y>(
    window: &[Y],
    semibad: &[X],
    embeds: &dyn Fn(&X, &Y) -> bool,
    j: u32,
    ps: &crate::params::ParameterSet,
) -> Result<bool> {
    let thr = strong_threshold(j, ps)?;
    let n = rat_int(window.len() as i64);
    let floor = n * thr;
    for x in semibad {
        let count = window.iter().filter(|y| embeds(x, y)).count();
        if rat_int(count as i64) < floor {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SubStatus {
    Good,
    SemiBad,
    /// bad but not semi-bad
    BadOther,
    Unknown,
}

/// Good test for a level-(j+1) block given its level-j sub-block statuses.
/// `strong_window(start)` judges the window of floor(L_j^{3/2}) sub-blocks
/// beginning at `start`.
pub fn is_good(
    subs: &[SubStatus],
    strong_window: &dyn Fn(usize) -> Result<bool>,
    j: u32,
    ps: &crate::params::ParameterSet,
) -> Result<bool> {
    if subs.contains(&SubStatus::Unknown) {
        return Err(contract("unresolved sub-block status"));
    }
    let sc = scales(ps, j)?;
    let bad = subs.iter().filter(|s| **s != SubStatus::Good).count();
    if bad > ps.k0 as usize {
        return Ok(false);
    }
    if subs.contains(&SubStatus::BadOther) {
        return Ok(false);
    }
    // length bound n <= L^(alpha-1) + L^5 in sub-blocks
    let bound = sc.l.pow(ps.alpha as u32 - 1) + sc.l.pow(5);
    if BigUint::from(subs.len()) > bound {
        return Ok(false);
    }
    let w = {
        use num::ToPrimitive;
        sc.fl32.to_usize().ok_or_else(|| resource("window width does not fit"))?
    };
    if w >= 1 && subs.len() >= w {
        for start in 0..=subs.len() - w {
            if !strong_window(start)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{profile, rat, rng_stream};
    use crate::problem::{compatible_spec, roughiso_spec};
    use rand::Rng;

    #[test]
    fn level0_compatible_matches_mu() {
        let spec = compatible_spec(rat(3, 10)).unwrap();
        let d = level0_distribution(&spec, true);
        d.check().unwrap();
        assert_eq!(d.entries.len(), 2);
        assert_eq!(d.entries[0].prob, rat(7, 10));
        assert_eq!(d.entries[1].prob, rat(3, 10));
    }

    #[test]
    fn exact_s0_compatible() {
        // X = 1 relates only to 0, so S_0(1) = 1 - q
        let spec = compatible_spec(rat(3, 10)).unwrap();
        let d = level0_distribution(&spec, true);
        let s = embedding_prob_exact(&d, &|w| spec.related(1, w[0]));
        assert_eq!(s.lo, rat(7, 10));
        assert_eq!(s.hi, rat(7, 10));
    }

    #[test]
    fn exact_s0_roughiso_closed_form() {
        // gap class k > M0 sees exactly classes k-M0 .. k+M0
        let m0 = 2u32;
        let spec = roughiso_spec(m0, 16).unwrap();
        let d = level0_distribution(&spec, true);
        for k in [m0 + 1, m0 + 2, m0 + 3] {
            let s = embedding_prob_exact(&d, &|w| spec.related(k, w[0]));
            let want = crate::params::pow2_neg(1 << (k - m0 - 1)) - crate::params::pow2_neg(1 << (k + m0));
            assert!(s.lo <= want && want <= s.hi, "k={k}");
            // the truncation tail is tiny, so lo is very close:
            assert!(&want - &s.lo <= d.mass_deficit);
        }
    }

    #[test]
    fn level1_enumeration_all_good() {
        // q = 0: single good symbol, every block all-zero, weight P(W=T)
        let ps = profile("micro").unwrap();
        let spec = compatible_spec(rat(0, 1)).unwrap();
        let d0 = level0_distribution(&spec, true);
        let good: Vec<bool> = d0.entries.iter().map(|e| spec.is_good_y(e.word[0])).collect();
        let eps = crate::params::pow2_neg(10);
        let d1 = enumerate_block_distribution(1, &ps, &d0, &good, &eps, &EnumCaps::default()).unwrap();
        assert!(d1.mass_deficit <= eps);
        d1.check().unwrap();
        // weight of the T = t block is exactly p(1-p)^t, p = L^-4
        let p = rat(1, 256);
        for e in &d1.entries {
            let q = Rat::one() - p.clone();
            assert_eq!(e.prob, p.clone() * pow_rat(&q, e.t));
            assert_eq!(e.word.len(), 16 + 128 + e.t as usize);
        }
    }

    #[test]
    fn level1_enumeration_with_bad_symbols() {
        // tiny scale, small caps: deficit is reported honestly
        let ps = profile("micro2").unwrap(); // L0 = 2: lj3 = 8, a = 4
        let spec = compatible_spec(rat(1, 100)).unwrap();
        let d0 = level0_distribution(&spec, true);
        let good: Vec<bool> = d0.entries.iter().map(|e| spec.is_good_y(e.word[0])).collect();
        let eps = rat(2, 5);
        let caps = EnumCaps { t_cap: Some(40), max_bad: 3, ..Default::default() };
        let d1 = enumerate_block_distribution(1, &ps, &d0, &good, &eps, &caps).unwrap();
        let mass: Rat = d1.entries.iter().map(|e| e.prob.clone()).sum();
        assert_eq!(mass + d1.mass_deficit.clone(), Rat::one());
        // words with a bad symbol appear, all structural invariants hold
        assert!(d1.entries.iter().any(|e| e.word.contains(&1)));
        for e in &d1.entries {
            let m = e.word.len();
            assert!(e.word[..8].iter().all(|&c| c == 0));
            assert!(e.word[m - 8..].iter().all(|&c| c == 0));
        }
    }

    #[test]
    fn mc_interval_brackets_exact() {
        let spec = compatible_spec(rat(3, 10)).unwrap();
        let mut rng = rng_stream(11, 0);
        let s = embedding_prob_mc(10_000, &mut rng, |r| {
            // Y ~ Bernoulli(q); X = 1 embeds iff Y = 0
            !r.gen_bool(0.3)
        })
        .unwrap();
        s.check().unwrap();
        let exact = rat(7, 10);
        assert!(s.lo <= exact && exact <= s.hi);
        let _ = spec;
    }

    #[test]
    fn mc_extremes() {
        let mut rng = rng_stream(12, 0);
        let s = embedding_prob_mc(1000, &mut rng, |_| true).unwrap();
        assert!(s.lo >= rat(99, 100));
        let s = embedding_prob_mc(1000, &mut rng, |_| false).unwrap();
        assert!(s.hi <= rat(1, 100));
    }

    #[test]
    fn semibad_tri_state() {
        let ps = profile("micro").unwrap();
        let thr = semibad_threshold(0, &ps).unwrap();
        let above = ProbInterval::exact(Rat::one());
        let below = ProbInterval::exact(Rat::zero());
        let straddle = ProbInterval {
            lo: thr.clone() - rat(1, 1000),
            hi: thr.clone() + rat(1, 1000),
            method: ProbMethod::ExactTruncated,
        };
        assert_eq!(is_semibad(&[1], false, 0, &ps, &above).unwrap(), TriState::Yes);
        assert_eq!(is_semibad(&[1], false, 0, &ps, &below).unwrap(), TriState::No);
        assert_eq!(is_semibad(&[1], false, 0, &ps, &straddle).unwrap(), TriState::Unknown);
        // good blocks are never semi-bad
        assert_eq!(is_semibad(&[0], true, 0, &ps, &above).unwrap(), TriState::No);
        // length cap: 10 L_0 = 40 characters at micro
        assert_eq!(is_semibad(&[1; 41], false, 0, &ps, &above).unwrap(), TriState::No);
    }

    #[test]
    fn strong_recount() {
        let ps = profile("micro").unwrap();
        // empty semi-bad list: vacuously strong
        let embeds = |x: &u32, y: &u32| x == y;
        assert!(is_strong::<u32, u32>(&[1, 2, 3], &[], &embeds, 0, &ps).unwrap());
        // one semi-bad embedding into every window element
        assert!(is_strong(&[5, 5, 5], &[5], &embeds, 0, &ps).unwrap());
        // missing one of 3 drops below the floor
        assert!(!is_strong(&[5, 5, 6], &[5], &embeds, 0, &ps).unwrap());
        // single-element window: 1 >= 1 - eps
        assert!(is_strong(&[5], &[5], &embeds, 0, &ps).unwrap());
    }

    #[test]
    fn good_conditions() {
        let ps = profile("micro").unwrap();
        let always = |_: usize| Ok(true);
        let n = 144usize; // L^2 + 2 L^3 at micro
        let all_good = vec![SubStatus::Good; n];
        assert!(is_good(&all_good, &always, 0, &ps).unwrap());
        // k0 = 2 at micro: 3 semi-bad sub-blocks is too many
        let mut v = all_good.clone();
        v[20] = SubStatus::SemiBad;
        v[40] = SubStatus::SemiBad;
        assert!(is_good(&v, &always, 0, &ps).unwrap());
        v[60] = SubStatus::SemiBad;
        assert!(!is_good(&v, &always, 0, &ps).unwrap());
        // a bad-but-not-semi-bad sub-block disqualifies
        let mut v = all_good.clone();
        v[20] = SubStatus::BadOther;
        assert!(!is_good(&v, &always, 0, &ps).unwrap());
        // length bound: L^2 + L^5 = 1040 sub-blocks at micro
        assert!(is_good(&vec![SubStatus::Good; 1040], &always, 0, &ps).unwrap());
        assert!(!is_good(&vec![SubStatus::Good; 1041], &always, 0, &ps).unwrap());
        // a failing window disqualifies
        let weak = |start: usize| Ok(start != 3);
        assert!(!is_good(&all_good, &weak, 0, &ps).unwrap());
        // unknown status is a contract error
        let mut v = all_good;
        v[0] = SubStatus::Unknown;
        assert!(is_good(&v, &always, 0, &ps).is_err());
    }
}
