//! Direct deciders for the three applications: Lipschitz bit embedding,
//! rough isometry verification/search, and compatibility of binary
//! sequences after zero deletions.

use crate::error::{contract, resource, Result};
use crate::params::Rat;
use num::Zero;
use serde::Serialize;

// ---------------------------------------------------------------- Lipschitz

/// A strictly increasing map phi with gaps at most `m` and phi(1) <= `first_max`,
/// matching bits: x[i] = y[phi(i)].  Indices are 0-based here; gaps are
/// phi(i) - phi(i-1) <= m and phi(0) <= first_max - 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LipschitzMap {
    pub phi: Vec<usize>,
    pub m: usize,
    pub first_max: usize,
}

pub fn check_lipschitz(x: &[u8], y: &[u8], map: &LipschitzMap) -> bool {
    if map.phi.len() != x.len() {
        return false;
    }
    let mut prev: Option<usize> = None;
    for (i, &p) in map.phi.iter().enumerate() {
        if p >= y.len() || y[p] != x[i] {
            return false;
        }
        match prev {
            None => {
                if p + 1 > map.first_max {
                    return false;
                }
            }
            Some(q) => {
                if p <= q || p - q > map.m {
                    return false;
                }
            }
        }
        prev = Some(p);
    }
    true
}

/// Leftmost valid embedding: each phi(i) is minimal given phi(i-1) among the
/// choices that still admit a complete map, so a map is returned iff one
/// exists.  (A one-pass leftmost choice is not enough: with both a gap upper
/// bound and strict growth, neither extreme position dominates, so we first
/// compute which positions can still finish.)
pub fn lipschitz_embed_greedy(x: &[u8], y: &[u8], m: usize, first_max: usize) -> Option<LipschitzMap> {
    if m == 0 || first_max == 0 {
        return if x.is_empty() {
            Some(LipschitzMap { phi: vec![], m, first_max })
        } else {
            None
        };
    }
    if x.is_empty() {
        return Some(LipschitzMap { phi: vec![], m, first_max });
    }
    let (n, np) = (x.len(), y.len());
    // fin[i][p]: placing x[i] at position p (0-based) can be completed
    let mut fin = vec![false; n * np];
    for i in (0..n).rev() {
        for p in 0..np {
            if y[p] != x[i] {
                continue;
            }
            fin[i * np + p] = if i + 1 == n {
                true
            } else {
                (p + 1..(p + 1 + m).min(np)).any(|q| fin[(i + 1) * np + q])
            };
        }
    }
    let mut phi = Vec::with_capacity(n);
    let first = (0..first_max.min(np)).find(|&p| fin[p])?;
    phi.push(first);
    for i in 1..n {
        let prev = *phi.last().unwrap();
        let p = (prev + 1..(prev + 1 + m).min(np)).find(|&p| fin[i * np + p])?;
        phi.push(p);
    }
    Some(LipschitzMap { phi, m, first_max })
}

const LIP_BRUTE_X: usize = 8;
const LIP_BRUTE_Y: usize = 16;

/// Exhaustive reference: true iff any admissible map exists.
pub fn lipschitz_embed_bruteforce(x: &[u8], y: &[u8], m: usize, first_max: usize) -> Result<bool> {
    if x.len() > LIP_BRUTE_X || y.len() > LIP_BRUTE_Y {
        return Err(resource(format!(
            "brute-force bit embedding is capped at |x| <= {LIP_BRUTE_X}, |y| <= {LIP_BRUTE_Y}"
        )));
    }
    fn go(x: &[u8], y: &[u8], m: usize, lo: usize, hi: usize) -> bool {
        let Some((&bit, rest)) = x.split_first() else { return true };
        for p in lo..hi.min(y.len()) {
            if y[p] == bit && go(rest, y, m, p + 1, p + 1 + m) {
                return true;
            }
        }
        false
    }
    if m == 0 || first_max == 0 {
        return Ok(x.is_empty());
    }
    Ok(go(x, y, m, 0, first_max))
}

// ------------------------------------------------------------- compatibility

/// Index sets deleted from each sequence (0-based).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeletionSets {
    pub from_x: Vec<usize>,
    pub from_y: Vec<usize>,
}

/// Checks the compatibility conditions: only zeros are deleted, and after
/// deletion the surviving prefixes disagree position by position for as long
/// as both survive.
pub fn check_deletion_sets(x: &[u8], y: &[u8], d: &DeletionSets) -> bool {
    if d.from_x.iter().any(|&i| i >= x.len() || x[i] != 0) {
        return false;
    }
    if d.from_y.iter().any(|&i| i >= y.len() || y[i] != 0) {
        return false;
    }
    let dx: std::collections::BTreeSet<_> = d.from_x.iter().copied().collect();
    let dy: std::collections::BTreeSet<_> = d.from_y.iter().copied().collect();
    if dx.len() != d.from_x.len() || dy.len() != d.from_y.len() {
        return false;
    }
    let xs: Vec<u8> = x.iter().enumerate().filter(|(i, _)| !dx.contains(i)).map(|(_, &b)| b).collect();
    let ys: Vec<u8> = y.iter().enumerate().filter(|(i, _)| !dy.contains(i)).map(|(_, &b)| b).collect();
    xs.iter().zip(ys.iter()).all(|(a, b)| a != b)
}

/// Finds deletion sets making two finite binary sequences compatible, or
/// returns `None`.  Finite prefixes count as compatible as soon as one side
/// is exhausted: any disagreement deeper in the (unseen) continuation can be
/// produced by further deletions there.
pub fn compatible_decide(x: &[u8], y: &[u8]) -> Option<DeletionSets> {
    let (n, np) = (x.len(), y.len());
    let w = np + 1;
    // ok[i][j]: from surviving cursors (i, j) the rest can be resolved
    let mut ok = vec![false; (n + 1) * w];
    for i in (0..=n).rev() {
        for j in (0..=np).rev() {
            let v = if i == n || j == np {
                true
            } else {
                (x[i] == 0 && ok[(i + 1) * w + j])
                    || (y[j] == 0 && ok[i * w + j + 1])
                    || (x[i] != y[j] && ok[(i + 1) * w + j + 1])
            };
            ok[i * w + j] = v;
        }
    }
    if !ok[0] {
        return None;
    }
    let (mut i, mut j) = (0, 0);
    let mut d = DeletionSets { from_x: vec![], from_y: vec![] };
    while i < n && j < np {
        if x[i] != y[j] && ok[(i + 1) * w + j + 1] {
            i += 1;
            j += 1;
        } else if x[i] == 0 && ok[(i + 1) * w + j] {
            d.from_x.push(i);
            i += 1;
        } else {
            debug_assert!(y[j] == 0 && ok[i * w + j + 1]);
            d.from_y.push(j);
            j += 1;
        }
    }
    Some(d)
}

const COMPAT_BRUTE_MAX: usize = 10;

/// Exhaustive reference for compatibility.
pub fn compatible_bruteforce(x: &[u8], y: &[u8]) -> Result<bool> {
    if x.len() > COMPAT_BRUTE_MAX || y.len() > COMPAT_BRUTE_MAX {
        return Err(resource(format!(
            "brute-force compatibility is capped at length {COMPAT_BRUTE_MAX}"
        )));
    }
    fn go(x: &[u8], y: &[u8], i: usize, j: usize) -> bool {
        if i == x.len() || j == y.len() {
            return true;
        }
        (x[i] == 0 && go(x, y, i + 1, j))
            || (y[j] == 0 && go(x, y, i, j + 1))
            || (x[i] != y[j] && go(x, y, i + 1, j + 1))
    }
    Ok(go(x, y, 0, 0))
}

// ------------------------------------------------------------- rough isometry

/// A candidate rough isometry between two finite point sets, with exact
/// rational constants: distortion factor `m >= 1`, additive slack `d >= 0`,
/// density radius `c >= 0`.
#[derive(Debug, Clone)]
pub struct RoughIsoMap {
    /// assignment a -> T(a), in the order of the source points
    pub image: Vec<i64>,
    pub m: Rat,
    pub d: Rat,
    pub c: Rat,
}

fn rat_abs(x: Rat) -> Rat {
    if x < Rat::zero() {
        -x
    } else {
        x
    }
}

/// Verifies distortion `(1/m)|a-b| - d <= |T(a)-T(b)| <= m|a-b| + d` for all
/// source pairs, image containment, and `c`-density of the image in the
/// target set.
pub fn rough_iso_verify(a: &[i64], b: &[i64], map: &RoughIsoMap) -> Result<bool> {
    use crate::params::rat_int;
    if map.image.len() != a.len() {
        return Err(contract("image length differs from source size"));
    }
    let bset: std::collections::BTreeSet<i64> = b.iter().copied().collect();
    for t in &map.image {
        if !bset.contains(t) {
            return Err(contract(format!("image point {t} is not in the target set")));
        }
    }
    for i in 0..a.len() {
        for k in (i + 1)..a.len() {
            let dist = rat_int((a[i] - a[k]).abs());
            let idist = rat_int((map.image[i] - map.image[k]).abs());
            if idist > &map.m * &dist + &map.d {
                return Ok(false);
            }
            if idist < dist / map.m.clone() - map.d.clone() {
                return Ok(false);
            }
        }
    }
    for &p in b {
        let near = map
            .image
            .iter()
            .any(|&t| rat_abs(rat_int(p) - rat_int(t)) <= map.c);
        if !near {
            return Ok(false);
        }
    }
    Ok(true)
}

const RISO_BRUTE_MAX: usize = 10;

/// Enumerates assignments (weakly increasing when `monotone`) and returns
/// the first that verifies, in lexicographic order of target indices.
pub fn rough_iso_search(
    a: &[i64],
    b: &[i64],
    m: Rat,
    d: Rat,
    c: Rat,
    monotone: bool,
) -> Result<Option<RoughIsoMap>> {
    if a.len() > RISO_BRUTE_MAX || b.len() > RISO_BRUTE_MAX {
        return Err(resource(format!(
            "rough isometry search is capped at {RISO_BRUTE_MAX} points per side"
        )));
    }
    if a.is_empty() || b.is_empty() {
        return Err(contract("point sets must be non-empty"));
    }
    if !monotone && (b.len() as f64).powi(a.len() as i32) > 2e7 {
        return Err(resource("unrestricted assignment enumeration is too large"));
    }
    let mut idx = vec![0usize; a.len()];
    loop {
        let image: Vec<i64> = idx.iter().map(|&k| b[k]).collect();
        let map = RoughIsoMap { image, m: m.clone(), d: d.clone(), c: c.clone() };
        if rough_iso_verify(a, b, &map)? {
            return Ok(Some(map));
        }
        // next assignment
        let mut pos = a.len();
        loop {
            if pos == 0 {
                return Ok(None);
            }
            pos -= 1;
            if idx[pos] + 1 < b.len() {
                idx[pos] += 1;
                let base = if monotone { idx[pos] } else { 0 };
                for t in idx.iter_mut().skip(pos + 1) {
                    *t = base;
                }
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{rat, rat_int};
    use rand::Rng;

    #[test]
    fn greedy_matches_bruteforce() {
        let mut rng = crate::params::rng_stream(3, 0);
        for _ in 0..500 {
            let n = rng.gen_range(0..=5);
            let np = rng.gen_range(0..=10);
            let m = rng.gen_range(1..=3);
            let x: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
            let y: Vec<u8> = (0..np).map(|_| rng.gen_range(0..2)).collect();
            let g = lipschitz_embed_greedy(&x, &y, m, m);
            let b = lipschitz_embed_bruteforce(&x, &y, m, m).unwrap();
            assert_eq!(g.is_some(), b, "x={x:?} y={y:?} m={m}");
            if let Some(map) = g {
                assert!(check_lipschitz(&x, &y, &map));
            }
        }
    }

    #[test]
    fn greedy_respects_first_max() {
        // y starts with the wrong bit; first_max = 1 forbids position 2
        assert!(lipschitz_embed_greedy(&[1], &[0, 1], 2, 1).is_none());
        assert!(lipschitz_embed_greedy(&[1], &[0, 1], 2, 2).is_some());
    }

    #[test]
    fn compatibility_examples() {
        // identical all-ones sequences are incompatible
        assert!(compatible_decide(&[1, 1], &[1, 1]).is_none());
        // pairing disagreements and skipping a zero resolves this pair
        let d = compatible_decide(&[0, 1, 0], &[1, 0, 0]).unwrap();
        assert!(check_deletion_sets(&[0, 1, 0], &[1, 0, 0], &d));
        // one side exhausted counts as compatible
        assert!(compatible_decide(&[], &[1, 1, 1]).is_some());
    }

    #[test]
    fn compat_matches_bruteforce() {
        let mut rng = crate::params::rng_stream(5, 0);
        for _ in 0..500 {
            let n = rng.gen_range(0..=8);
            let np = rng.gen_range(0..=8);
            let x: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
            let y: Vec<u8> = (0..np).map(|_| rng.gen_range(0..2)).collect();
            let fast = compatible_decide(&x, &y);
            let slow = compatible_bruteforce(&x, &y).unwrap();
            assert_eq!(fast.is_some(), slow, "x={x:?} y={y:?}");
            if let Some(d) = fast {
                assert!(check_deletion_sets(&x, &y, &d));
            }
        }
    }

    #[test]
    fn rough_iso_identity_verifies() {
        let a = vec![0, 3, 7];
        let map = RoughIsoMap { image: vec![0, 3, 7], m: rat_int(1), d: rat_int(0), c: rat_int(0) };
        assert!(rough_iso_verify(&a, &a, &map).unwrap());
    }

    #[test]
    fn rough_iso_search_and_density() {
        let a = vec![0, 10];
        let b = vec![0, 5, 11];
        // m=2, d=1 allows |T(0)-T(10)| in [4, 21]; c=6 needs density
        let found = rough_iso_search(&a, &b, rat_int(2), rat_int(1), rat_int(6), true)
            .unwrap()
            .unwrap();
        assert!(rough_iso_verify(&a, &b, &found).unwrap());
        // c = 1 cannot cover the middle target point with any 2-point image
        // of distortion (1, 0)
        assert!(rough_iso_search(&a, &b, rat_int(1), rat_int(0), rat_int(1), true)
            .unwrap()
            .is_none());
    }

    #[test]
    fn rough_iso_fractional_constants() {
        let a = vec![0, 4];
        let b = vec![0, 6];
        // |T(0)-T(4)| = 6 needs m >= 3/2 when d = 0
        let m32 = RoughIsoMap { image: vec![0, 6], m: rat(3, 2), d: rat_int(0), c: rat_int(0) };
        assert!(rough_iso_verify(&a, &b, &m32).unwrap());
        let m43 = RoughIsoMap { image: vec![0, 6], m: rat(4, 3), d: rat_int(0), c: rat_int(0) };
        assert!(!rough_iso_verify(&a, &b, &m43).unwrap());
    }
}
