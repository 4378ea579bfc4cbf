//! Partition-pair mappings between block segments: marked partition pairs,
//! the induced generalized mappings, the class predicates (admissible, G,
//! H1, H2), the shifted piecewise-linear separation maps, the three mapping
//! family builders, and the compress/expand witness composer.
//!
//! Irrational ratio bounds of the form 2^(-(j+5/4)) are decided exactly by
//! comparing eighth powers, so every predicate here is exact rational
//! arithmetic with no floating point.

use crate::error::{construction, contract, Result};
use crate::params::{l_as_usize, pow2_neg, rat, rat_floor, rat_int, scales, ParameterSet, Rat};
use crate::rembed::EmbedWitness;
use num::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use std::collections::BTreeSet;
use std::ops::Range;

/// Cut points of a partition of a consecutive integer set: the blocks are
/// the integer ranges (cuts[r], cuts[r+1]].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Partition {
    pub cuts: Vec<i64>,
}

impl Partition {
    pub fn new(cuts: Vec<i64>) -> Result<Self> {
        if cuts.len() < 2 {
            return Err(contract("a partition needs at least two cut points"));
        }
        if cuts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(contract("partition cuts must strictly increase"));
        }
        Ok(Partition { cuts })
    }

    /// number of blocks
    pub fn len(&self) -> usize {
        self.cuts.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// the r-th block as (left cut, right cut]
    pub fn block(&self, r: usize) -> (i64, i64) {
        (self.cuts[r], self.cuts[r + 1])
    }

    pub fn span(&self) -> (i64, i64) {
        (self.cuts[0], *self.cuts.last().unwrap())
    }

    /// index of the block containing the point x
    pub fn find(&self, x: i64) -> Option<usize> {
        let (lo, hi) = self.span();
        if x <= lo || x > hi {
            return None;
        }
        // cuts[r] < x <= cuts[r+1]
        Some(self.cuts.partition_point(|&c| c < x) - 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MarkedPartitionPair {
    pub p: Partition,
    pub pp: Partition,
    pub marked: BTreeSet<usize>,
}

impl MarkedPartitionPair {
    pub fn check(&self) -> Result<()> {
        if self.p.len() != self.pp.len() {
            return Err(contract("marked pair partitions differ in length"));
        }
        for &r in &self.marked {
            if r >= self.p.len() {
                return Err(contract("marked index out of range"));
            }
            let (a0, a1) = self.p.block(r);
            let (b0, b1) = self.pp.block(r);
            if a1 - a0 != b1 - b0 {
                return Err(contract(format!(
                    "marked block {r} has unequal lengths {} and {}",
                    a1 - a0,
                    b1 - b0
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum ClassTag {
    Admissible,
    G,
    H1,
    H2,
}

/// Two equal-length partitions with the rank-preserving block bijection
/// left implicit.  `tags` only carries classes whose predicate has passed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GeneralizedMapping {
    pub p: Partition,
    pub pp: Partition,
    pub tags: BTreeSet<ClassTag>,
}

impl GeneralizedMapping {
    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Singleton image: defined when x sits in a singleton block whose
    /// partner block is also a singleton.
    pub fn tau(&self, x: i64) -> Option<i64> {
        let r = self.p.find(x)?;
        let (a0, a1) = self.p.block(r);
        let (b0, b1) = self.pp.block(r);
        (a1 - a0 == 1 && b1 - b0 == 1).then_some(b1)
    }

    pub fn tau_inv(&self, y: i64) -> Option<i64> {
        let r = self.pp.find(y)?;
        let (a0, a1) = self.p.block(r);
        let (b0, b1) = self.pp.block(r);
        (a1 - a0 == 1 && b1 - b0 == 1).then_some(a1)
    }

    /// Structured text: two cut lists, then the tags.
    pub fn to_text(&self) -> String {
        format!(
            "P: {:?}\nP': {:?}\ntags: {:?}\n",
            self.p.cuts, self.pp.cuts, self.tags
        )
    }
}

/// Explodes every marked interval into singletons on both sides; unmarked
/// intervals pass through whole.
pub fn induce_mapping(mpp: &MarkedPartitionPair) -> Result<GeneralizedMapping> {
    mpp.check()?;
    let mut cuts_x = vec![mpp.p.cuts[0]];
    let mut cuts_y = vec![mpp.pp.cuts[0]];
    for r in 0..mpp.p.len() {
        let (a0, a1) = mpp.p.block(r);
        let (b0, b1) = mpp.pp.block(r);
        if mpp.marked.contains(&r) {
            for d in 1..=(a1 - a0) {
                cuts_x.push(a0 + d);
                cuts_y.push(b0 + d);
            }
        } else {
            cuts_x.push(a1);
            cuts_y.push(b1);
        }
    }
    Ok(GeneralizedMapping {
        p: Partition::new(cuts_x)?,
        pp: Partition::new(cuts_y)?,
        tags: BTreeSet::new(),
    })
}

pub fn check_admissible(gm: &GeneralizedMapping) -> bool {
    if gm.p.len() != gm.pp.len() {
        return false;
    }
    (0..gm.len()).all(|r| {
        let (a0, a1) = gm.p.block(r);
        let (b0, b1) = gm.pp.block(r);
        (a1 - a0 == 1) == (b1 - b0 == 1)
    })
}

/// Decides (1 - 2^(-exp8/8))/R < dy/dx < R(1 + 2^(-exp8/8)) exactly by
/// raising the residuals to the eighth power.  The bound is irrational, so
/// equality cannot occur and strict/non-strict variants coincide.
pub fn ratio_within(dx: i64, dy: i64, r: u64, exp8: u32) -> bool {
    if dx <= 0 || dy <= 0 {
        return false;
    }
    let ratio = rat(dy, dx);
    let rr = rat_int(r as i64);
    let bound = pow2_neg(exp8);
    let low = Rat::one() - rr.clone() * ratio.clone();
    if low > Rat::zero() && low.pow(8) >= bound {
        return false;
    }
    let high = ratio / rr - Rat::one();
    if high > Rat::zero() && high.pow(8) >= bound {
        return false;
    }
    true
}

fn within(b: &[i64], lo: i64, hi: i64) -> bool {
    b.iter().any(|&x| x > lo && x <= hi)
}

/// Class G with respect to (B, B'): bad points isolated as singletons on
/// both sides, non-singleton intervals long and ratio-bounded, and images
/// of B avoid B' (and vice versa).
pub fn check_class_g(
    gm: &GeneralizedMapping,
    b: &[i64],
    bp: &[i64],
    j: u32,
    ps: &ParameterSet,
) -> Result<bool> {
    if !check_admissible(gm) {
        return Ok(false);
    }
    let sc = scales(ps, j)?;
    let l = l_as_usize(&sc)? as i64;
    for &x in b {
        match gm.p.find(x) {
            Some(r) => {
                let (a0, a1) = gm.p.block(r);
                if a1 - a0 != 1 {
                    return Ok(false);
                }
            }
            None => return Ok(false),
        }
    }
    for &y in bp {
        match gm.pp.find(y) {
            Some(r) => {
                let (b0, b1) = gm.pp.block(r);
                if b1 - b0 != 1 {
                    return Ok(false);
                }
            }
            None => return Ok(false),
        }
    }
    for r in 0..gm.len() {
        let (a0, a1) = gm.p.block(r);
        let (b0, b1) = gm.pp.block(r);
        if a1 - a0 > 1 {
            if (a1 - a0).min(b1 - b0) <= l {
                return Ok(false);
            }
            if !ratio_within(a1 - a0, b1 - b0, ps.r, 8 * j + 10) {
                return Ok(false);
            }
        }
    }
    for &x in b {
        if let Some(y) = gm.tau(x) {
            if bp.contains(&y) {
                return Ok(false);
            }
        }
    }
    for &y in bp {
        if let Some(x) = gm.tau_inv(y) {
            if b.contains(&x) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Class H1 with respect to B: bad singletons, the same length/ratio bound,
/// and images of B inside the margin (L_j^3, n' - L_j^3).
pub fn check_class_h1(
    gm: &GeneralizedMapping,
    b: &[i64],
    np: i64,
    j: u32,
    ps: &ParameterSet,
) -> Result<bool> {
    if !check_admissible(gm) {
        return Ok(false);
    }
    let sc = scales(ps, j)?;
    let l = l_as_usize(&sc)? as i64;
    let l3 = l.pow(3);
    for r in 0..gm.len() {
        let (a0, a1) = gm.p.block(r);
        let (b0, b1) = gm.pp.block(r);
        if a1 - a0 > 1 {
            if (a1 - a0).min(b1 - b0) <= l {
                return Ok(false);
            }
            if !ratio_within(a1 - a0, b1 - b0, ps.r, 8 * j + 10) {
                return Ok(false);
            }
        }
    }
    for &x in b {
        match gm.tau(x) {
            Some(y) if y > l3 && y < np - l3 => {}
            _ => return Ok(false),
        }
    }
    Ok(true)
}

/// Class H2 with respect to B: bad singletons with images in the margin,
/// and every non-singleton interval exactly R_j long against [R_j^-, R_j^+].
pub fn check_class_h2(
    gm: &GeneralizedMapping,
    b: &[i64],
    np: i64,
    j: u32,
    ps: &ParameterSet,
) -> Result<bool> {
    if !check_admissible(gm) {
        return Ok(false);
    }
    let sc = scales(ps, j)?;
    let l = l_as_usize(&sc)? as i64;
    let l3 = l.pow(3);
    let (rj, rm, rp) = (sc.r_j as i64, sc.r_minus as i64, sc.r_plus as i64);
    for &x in b {
        match gm.tau(x) {
            Some(y) if y > l3 && y < np - l3 => {}
            _ => return Ok(false),
        }
    }
    for r in 0..gm.len() {
        let (a0, a1) = gm.p.block(r);
        let (b0, b1) = gm.pp.block(r);
        if a1 - a0 > 1 {
            if a1 - a0 != rj {
                return Ok(false);
            }
            if b1 - b0 < rm || b1 - b0 > rp {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// The three-piece linear bijection [0,n] -> [0,n'] that is the identity
/// scale on the middle and shifts the interior by s to the right.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiMap {
    pub n: i64,
    pub np: i64,
    pub s: i64,
    pub margin: Rat,
}

pub fn build_psi(n: i64, np: i64, s: i64, margin: Rat) -> Result<PsiMap> {
    if margin <= Rat::zero() {
        return Err(contract("margin must be positive"));
    }
    let two_m = margin.clone() * rat_int(2);
    if rat_int(n) <= two_m || rat_int(np) <= two_m {
        return Err(contract("degenerate margins: n and n' must exceed twice the margin"));
    }
    if s < 0 || rat_int(s) >= margin {
        return Err(contract("shift s must lie in [0, margin)"));
    }
    Ok(PsiMap { n, np, s, margin })
}

pub fn psi_eval(pm: &PsiMap, x: &Rat) -> Rat {
    let m = &pm.margin;
    let s = rat_int(pm.s);
    let n = rat_int(pm.n);
    let np = rat_int(pm.np);
    let two_m = m.clone() * rat_int(2);
    if *x <= *m {
        x.clone() * (m.clone() + s) / m.clone()
    } else if *x <= n.clone() - m.clone() {
        m.clone() + s + (x.clone() - m.clone()) * (np - two_m.clone()) / (n - two_m)
    } else {
        np.clone() - (n - x.clone()) * (m.clone() - s) / m.clone()
    }
}

pub fn psi_inv(pm: &PsiMap, y: &Rat) -> Rat {
    let m = &pm.margin;
    let s = rat_int(pm.s);
    let n = rat_int(pm.n);
    let np = rat_int(pm.np);
    let two_m = m.clone() * rat_int(2);
    if *y <= m.clone() + s.clone() {
        y.clone() * m.clone() / (m.clone() + s)
    } else if *y <= np.clone() - m.clone() + s.clone() {
        m.clone() + (y.clone() - m.clone() - s) * (n - two_m.clone()) / (np - two_m)
    } else {
        n.clone() - (np - y.clone()) * m.clone() / (m.clone() - s)
    }
}

/// Smallest integer shift s for which the map separates every bad pair by
/// at least 2 floor(L_j^{9/4}) in both directions, or None if the scan over
/// [0, min(floor(L_j^{5/2}), margin - 1)] finds no witness.
pub fn find_separating_shift(
    n: i64,
    np: i64,
    b: &[i64],
    bp: &[i64],
    j: u32,
    ps: &ParameterSet,
) -> Result<Option<i64>> {
    let sc = scales(ps, j)?;
    let l = l_as_usize(&sc)? as i64;
    let l3 = l.pow(3);
    let cap = (ps.k0 as i64).saturating_mul(scales(ps, j + 1)?.r_plus as i64);
    if b.len() as i64 > cap || bp.len() as i64 > cap {
        return Err(contract("too many bad indices for the separation scan"));
    }
    for (set, bound, side) in [(b, n, "X"), (bp, np, "Y")] {
        if let (Some(&first), Some(&last)) = (set.first(), set.last()) {
            if first <= l3 || bound - last <= l3 {
                return Err(contract(format!(
                    "bad indices on side {side} violate the L^3 boundary margin"
                )));
            }
        }
    }
    let margin = rat(l3, 2);
    let gap = rat_int(2) * Rat::from(num::BigInt::from(sc.fl94.clone()));
    let s_max = {
        let by_margin = rat_floor(&(margin.clone() - Rat::one()));
        let by_fl52 = num::BigInt::from(sc.fl52.clone());
        by_margin.min(by_fl52).to_i64().unwrap_or(0).max(0)
    };
    for s in 0..=s_max {
        let pm = build_psi(n, np, s, margin.clone())?;
        let ok = b.iter().all(|&i| {
            let img = psi_eval(&pm, &rat_int(i));
            bp.iter().all(|&ip| {
                let d1 = (img.clone() - rat_int(ip)).abs();
                let d2 = (rat_int(i) - psi_inv(&pm, &rat_int(ip))).abs();
                d1 >= gap && d2 >= gap
            })
        });
        if ok {
            return Ok(Some(s));
        }
    }
    Ok(None)
}

/// Case-1 sub-partition of [lo, hi] around the bad cluster set `bads`
/// (sorted, all in (lo, hi]), at granularity c: alternating bad-free and
/// cluster-holding intervals, clusters padded by c on each side.
fn carve_around(lo: i64, hi: i64, bads: &[i64], c: i64) -> Result<Vec<i64>> {
    let mut cuts = vec![lo];
    let first = bads[0] - c;
    if first <= lo {
        return Err(construction(format!(
            "bad cluster within {c} of the interval start: {} - {c} <= {lo}",
            bads[0]
        )));
    }
    cuts.push(first);
    let guard = 4 * bads.len() + 8;
    while *cuts.last().unwrap() != hi {
        if cuts.len() > guard {
            return Err(construction("sub-partition failed to terminate"));
        }
        let h = cuts.len() - 1;
        let (prev_lo, prev_hi) = (cuts[h - 1], cuts[h]);
        let cur = cuts[h];
        let next = if !within(bads, prev_lo, prev_hi) {
            // the next interval swallows the upcoming cluster: smallest cut
            // point at distance > c past every bad of the cluster
            let mut i = cur + c;
            while let Some(&x) = bads.iter().find(|&&x| x >= i - c && x <= i + 3 * c) {
                i = x + c + 1;
            }
            i.min(hi)
        } else {
            // a bad-free run up to c short of the next cluster
            match bads.iter().find(|&&x| x > cur + 2 * c + c) {
                Some(&x) => x - c - 1,
                None => hi,
            }
        };
        if next <= cur || next > hi {
            return Err(construction(format!(
                "sub-partition cut {next} leaves ({cur}, {hi}]: clusters too close together"
            )));
        }
        cuts.push(next);
    }
    Ok(cuts)
}

/// Builds the partner cuts: cluster-holding intervals are copied rigidly,
/// bad-free intervals are scaled by the interval ratio, the final interval
/// absorbs the rounding remainder.
fn partner_cuts(
    cuts: &[i64],
    bads: &[i64],
    first_partner: i64,
    span_from: i64,
    span_to: (i64, i64),
) -> Result<Vec<i64>> {
    let (plo, phi) = span_to;
    let mut out = vec![plo, first_partner];
    if first_partner <= plo {
        return Err(construction("partner sub-partition underflows its interval"));
    }
    for h in 1..cuts.len() - 2 {
        let d = cuts[h + 1] - cuts[h];
        let step = if within(bads, cuts[h], cuts[h + 1]) {
            d
        } else {
            rat_floor(&(rat_int(d) * rat(phi - plo, span_from)))
                .to_i64()
                .ok_or_else(|| construction("partner step overflows"))?
        };
        let next = out.last().unwrap() + step;
        if next >= phi {
            return Err(construction("partner sub-partition overruns its interval"));
        }
        out.push(next);
    }
    out.push(phi);
    Ok(out)
}

struct GBase {
    p: Vec<i64>,
    pp: Vec<i64>,
}

/// The h = 1 marked-pair skeleton of the G construction: separation shift,
/// midpoint cuts between opposite-type clusters, Case-1/Case-2 carving.
fn g_base(
    n: i64,
    np: i64,
    b: &[i64],
    bp: &[i64],
    j: u32,
    ps: &ParameterSet,
) -> Result<GBase> {
    let sc = scales(ps, j)?;
    let l = l_as_usize(&sc)? as i64;
    let l3 = l.pow(3);
    let c = num::BigInt::from(sc.fl178.clone())
        .to_i64()
        .ok_or_else(|| construction("granularity overflows"))?;
    let margin = rat(l3, 2);
    let s0 = find_separating_shift(n, np, b, bp, j, ps)?
        .ok_or_else(|| construction("no separating shift s0 in [0, L^(5/2)]"))?;
    let pm = build_psi(n, np, s0, margin.clone())?;

    // merged cluster points in X coordinates, tagged by side
    let mut merged: Vec<(Rat, bool)> = b.iter().map(|&x| (rat_int(x), true)).collect();
    merged.extend(bp.iter().map(|&y| (psi_inv(&pm, &rat_int(y)), false)));
    merged.sort_by(|a, b| a.0.cmp(&b.0));

    // midpoint cuts between adjacent opposite-type points
    let mut t: Vec<Rat> = vec![Rat::zero()];
    for w in merged.windows(2) {
        if w[0].1 != w[1].1 {
            t.push((w[0].0.clone() + w[1].0.clone()) / rat_int(2));
        }
    }
    t.push(rat_int(n));
    if t.len() > 2 {
        let t1 = &t[1];
        let tq = &t[t.len() - 2];
        let psi_t1 = psi_eval(&pm, t1);
        let psi_tq = psi_eval(&pm, tq);
        if *t1 <= margin
            || psi_t1 <= margin
            || rat_int(n) - tq.clone() <= margin
            || rat_int(np) - psi_tq <= margin
        {
            return Err(construction("midpoint cut violates the L^3/2 end margin"));
        }
    }

    let mut p = vec![0i64];
    let mut pp = vec![0i64];
    for r in 1..t.len() {
        let lo = rat_floor(&t[r - 1]).to_i64().unwrap();
        let hi = rat_floor(&t[r]).to_i64().unwrap();
        let plo = rat_floor(&psi_eval(&pm, &t[r - 1])).to_i64().unwrap();
        let phi = rat_floor(&psi_eval(&pm, &t[r])).to_i64().unwrap();
        let b_here: Vec<i64> = b.iter().copied().filter(|&x| x > lo && x <= hi).collect();
        let bp_here: Vec<i64> = bp.iter().copied().filter(|&y| y > plo && y <= phi).collect();
        if !b_here.is_empty() && !bp_here.is_empty() {
            return Err(construction("a cut interval met bad points on both sides"));
        }
        let (xc, yc) = if !b_here.is_empty() {
            let xc = carve_around(lo, hi, &b_here, c)?;
            let first_y = rat_floor(&psi_eval(&pm, &rat_int(b_here[0]))).to_i64().unwrap() - c;
            let yc = partner_cuts(&xc, &b_here, first_y, hi - lo, (plo, phi))?;
            (xc, yc)
        } else if !bp_here.is_empty() {
            let yc = carve_around(plo, phi, &bp_here, c)?;
            let first_x = rat_floor(&psi_inv(&pm, &rat_int(bp_here[0]))).to_i64().unwrap() - c;
            let xc = partner_cuts(&yc, &bp_here, first_x, phi - plo, (lo, hi))?;
            (yc_to_xc(xc), yc)
        } else {
            (vec![lo, hi], vec![plo, phi])
        };
        p.extend(&xc[1..]);
        pp.extend(&yc[1..]);
    }
    Ok(GBase { p, pp })
}

fn yc_to_xc(v: Vec<i64>) -> Vec<i64> {
    v
}

fn marked_for(p: &Partition, pp: &Partition, b: &[i64], bp: &[i64]) -> Result<BTreeSet<usize>> {
    if p.len() != pp.len() {
        return Err(construction("partition lengths diverged"));
    }
    let mut marked = BTreeSet::new();
    for r in 0..p.len() {
        let (a0, a1) = p.block(r);
        let (b0, b1) = pp.block(r);
        let hit_x = within(b, a0, a1);
        let hit_y = within(bp, b0, b1);
        if hit_x && hit_y {
            return Err(construction(format!("block {r} intersects bad points on both sides")));
        }
        if hit_x || hit_y {
            marked.insert(r);
        }
    }
    Ok(marked)
}

/// Checks the marked-pair sufficient conditions for class G: unmarked
/// blocks longer than L^2 on both sides with the 2^(-(j+3/2)) ratio bound,
/// end blocks unmarked, and equal lengths on marked blocks.
fn validate_marked_pair(
    mpp: &MarkedPartitionPair,
    j: u32,
    ps: &ParameterSet,
) -> Result<()> {
    mpp.check()?;
    let sc = scales(ps, j)?;
    let l = l_as_usize(&sc)? as i64;
    let z = mpp.p.len();
    if mpp.marked.contains(&0) || mpp.marked.contains(&(z - 1)) {
        return Err(construction("an end block is marked"));
    }
    for r in 0..z {
        if mpp.marked.contains(&r) {
            continue;
        }
        let (a0, a1) = mpp.p.block(r);
        let (b0, b1) = mpp.pp.block(r);
        if (a1 - a0).min(b1 - b0) <= l * l {
            return Err(construction(format!(
                "unmarked block {r} has length {} x {} <= L^2 = {}",
                a1 - a0,
                b1 - b0,
                l * l
            )));
        }
        if !ratio_within(a1 - a0, b1 - b0, ps.r, 8 * j + 12) {
            return Err(construction(format!(
                "unmarked block {r} ratio {}/{} leaves the 2^-(j+3/2) band",
                b1 - b0,
                a1 - a0
            )));
        }
    }
    Ok(())
}

/// The class-G mapping family: floor(L_j^2) mappings whose Y cuts shift by
/// h - 1, routing every bad index to a fresh, bad-free partner.
pub fn build_g_family(
    n: i64,
    np: i64,
    b: &[i64],
    bp: &[i64],
    j: u32,
    ps: &ParameterSet,
) -> Result<Vec<GeneralizedMapping>> {
    let sc = scales(ps, j)?;
    let l = l_as_usize(&sc)? as i64;
    let la1 = l.pow(ps.alpha as u32 - 1);
    if n <= la1 || np <= la1 {
        return Err(contract("segment lengths must exceed L^(alpha-1)"));
    }
    if !ratio_within(n, np, ps.r, 8 * j + 14) {
        return Err(contract("n'/n leaves the 2^-(j+7/4) band"));
    }
    if !b.windows(2).all(|w| w[0] < w[1]) || !bp.windows(2).all(|w| w[0] < w[1]) {
        return Err(contract("bad index sets must be sorted strictly increasing"));
    }
    let base = g_base(n, np, b, bp, j, ps)?;
    let family_size = (l * l) as usize;
    let mut out = Vec::with_capacity(family_size);
    for h in 1..=family_size as i64 {
        let p = Partition::new(base.p.clone())?;
        let mut shifted = base.pp.clone();
        for c in shifted[1..].iter_mut().take(base.pp.len() - 2) {
            *c += h - 1;
        }
        let pp = Partition::new(shifted)?;
        let marked = marked_for(&p, &pp, b, bp)?;
        let mpp = MarkedPartitionPair { p, pp, marked };
        validate_marked_pair(&mpp, j, ps)?;
        let mut gm = induce_mapping(&mpp)?;
        if !check_class_g(&gm, b, bp, j, ps)? {
            return Err(construction(format!("family member h = {h} fails the class-G predicate")));
        }
        gm.tags.insert(ClassTag::Admissible);
        gm.tags.insert(ClassTag::G);
        out.push(gm);
    }
    Ok(out)
}

/// The class-H1 family: a class-G family on the margin-trimmed interior,
/// re-attached end segments of length L^3/2 (X) and L^3 (Y).
pub fn build_h1_family(
    n: i64,
    np: i64,
    b: &[i64],
    j: u32,
    ps: &ParameterSet,
) -> Result<Vec<GeneralizedMapping>> {
    let sc = scales(ps, j)?;
    let l = l_as_usize(&sc)? as i64;
    let l3 = l.pow(3);
    if b.len() as u64 > ps.k0 {
        return Err(contract("more than k0 bad indices"));
    }
    let rr = rat_int(ps.r as i64);
    let ratio = rat(np, n);
    if ratio < Rat::one() / rr.clone() || ratio > rr {
        return Err(contract("n'/n leaves [1/R, R]"));
    }
    if let (Some(&first), Some(&last)) = (b.first(), b.last()) {
        if first <= l3 || n - last <= l3 {
            return Err(contract("bad indices violate the L^3 boundary margin"));
        }
    }
    let mx = l3 / 2;
    let my = l3;
    let b_inner: Vec<i64> = b.iter().map(|&x| x - mx).collect();
    let inner = build_g_family(n - 2 * mx, np - 2 * my, &b_inner, &[], j, ps)?;
    let mut out = Vec::with_capacity(inner.len());
    for (h, gi) in inner.into_iter().enumerate() {
        let mut cuts_x = vec![0i64];
        cuts_x.extend(gi.p.cuts.iter().map(|c| c + mx));
        cuts_x.push(n);
        let mut cuts_y = vec![0i64];
        cuts_y.extend(gi.pp.cuts.iter().map(|c| c + my));
        cuts_y.push(np);
        let mut gm = GeneralizedMapping {
            p: Partition::new(cuts_x)?,
            pp: Partition::new(cuts_y)?,
            tags: BTreeSet::new(),
        };
        if !check_class_h1(&gm, b, np, j, ps)? {
            return Err(construction(format!(
                "family member h = {} fails the class-H1 predicate",
                h + 1
            )));
        }
        gm.tags.insert(ClassTag::Admissible);
        gm.tags.insert(ClassTag::H1);
        out.push(gm);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct H2Outcome {
    pub gm: GeneralizedMapping,
    /// Y step of the unmarked R_j blocks (some steps are s + 1)
    pub s: i64,
}

/// The single class-H2 mapping: L^3 end margins, interior cut into R_j
/// blocks, bad blocks rigid, the rest compressed to step s or s + 1.
pub fn build_h2(n: i64, np: i64, b: &[i64], j: u32, ps: &ParameterSet) -> Result<H2Outcome> {
    let sc = scales(ps, j)?;
    let l = l_as_usize(&sc)? as i64;
    let l3 = l.pow(3);
    let rj = sc.r_j as i64;
    let (rm, rp) = (sc.r_minus as i64, sc.r_plus as i64);
    let ratio = rat(np, n);
    if ratio < rat(3, 2) / rat_int(ps.r as i64) || ratio > rat_int(2) * rat_int(ps.r as i64) / rat_int(3) {
        return Err(contract("n'/n leaves [3/(2R), 2R/3]"));
    }
    if rat_int(b.len() as i64) > rat(n - 2 * l3, 10 * rp) {
        return Err(contract("more than (n - 2L^3)/(10 R_j^+) bad indices"));
    }
    if let (Some(&first), Some(&last)) = (b.first(), b.last()) {
        if first <= l3 || n - last <= l3 {
            return Err(contract("bad indices violate the L^3 boundary margin"));
        }
    }
    let interior = n - 2 * l3;
    if interior < rj {
        return Err(contract("interior shorter than R_j"));
    }
    let k = interior / rj;
    let r_rem = interior % rj;
    // X cuts: 0, L^3, L^3 + R_j, ..., L^3 + k R_j, [n - L^3 when r > 0], n
    let mut cuts_x = vec![0, l3];
    for h in 1..=k {
        cuts_x.push(l3 + h * rj);
    }
    if r_rem > 0 {
        cuts_x.push(n - l3);
    }
    cuts_x.push(n);
    let p = Partition::new(cuts_x)?;
    let z = p.len();

    // marked: both margins, the r-tail block, and every block holding a bad
    let mut marked: BTreeSet<usize> = BTreeSet::new();
    marked.insert(0);
    marked.insert(z - 1);
    if r_rem > 0 {
        marked.insert(k as usize + 1);
    }
    let mut rigid_len = 0i64; // total X length of marked interior blocks
    for r in 1..z - 1 {
        let (a0, a1) = p.block(r);
        if within(b, a0, a1) {
            marked.insert(r);
        }
    }
    let unmarked: Vec<usize> = (1..z - 1).filter(|r| !marked.contains(r)).collect();
    for r in 1..z - 1 {
        if marked.contains(&r) {
            let (a0, a1) = p.block(r);
            rigid_len += a1 - a0;
        }
    }
    let d = unmarked.len() as i64;
    if d == 0 {
        return Err(construction("no unmarked interior block to absorb the length change"));
    }
    let budget = np - 2 * l3 - rigid_len;
    let s = budget.div_euclid(d);
    let r_prime = budget - s * d;
    if s < rm || s > rp - 1 {
        return Err(construction(format!(
            "H2 step s = {s} leaves [R_j^-, R_j^+ - 1] = [{rm}, {}]",
            rp - 1
        )));
    }
    let mut cuts_y = vec![0i64];
    let mut t = 0i64; // rank among unmarked blocks
    for r in 0..z {
        let (a0, a1) = p.block(r);
        let step = if marked.contains(&r) {
            a1 - a0
        } else {
            t += 1;
            if t <= r_prime {
                s + 1
            } else {
                s
            }
        };
        cuts_y.push(cuts_y.last().unwrap() + step);
    }
    if *cuts_y.last().unwrap() != np {
        return Err(construction("H2 partner cuts do not close at n'"));
    }
    let pp = Partition::new(cuts_y)?;
    let mpp = MarkedPartitionPair { p, pp, marked };
    let mut gm = induce_mapping(&mpp)?;
    if !check_class_h2(&gm, b, np, j, ps)? {
        return Err(construction("H2 output fails the class-H2 predicate"));
    }
    gm.tags.insert(ClassTag::Admissible);
    gm.tags.insert(ClassTag::H2);
    Ok(H2Outcome { gm, s })
}

/// Cuts a good n-segment against a good n'-segment into k compression
/// blocks of X length R_j with Y length s or s + 1, plus an identity tail
/// of the division remainder.
pub fn compress_embed_schedule(
    n: usize,
    np: usize,
    j: u32,
    ps: &ParameterSet,
) -> Result<Vec<(Range<usize>, Range<usize>)>> {
    let sc = scales(ps, j)?;
    let rj = sc.r_j as usize;
    let (rm, rp) = (sc.r_minus as usize, sc.r_plus as usize);
    if n == rj && (rm..=rp).contains(&np) {
        return Ok(vec![(0..n, 0..np)]);
    }
    let l = l_as_usize(&sc)?;
    if n <= l {
        return Err(contract("segment no longer than L_j"));
    }
    if !ratio_within(n as i64, np as i64, ps.r, 8 * j + 10) {
        return Err(contract("n'/n leaves the 2^-(j+5/4) band"));
    }
    let k = n / rj;
    let r = n % rj;
    if k == 0 {
        return Err(construction("segment shorter than R_j cannot be compressed"));
    }
    if np < r {
        return Err(construction("partner too short for the identity tail"));
    }
    let s = (np - r) / k;
    let rem = (np - r) % k;
    let top = if rem > 0 { s + 1 } else { s };
    if s < rm + 1 || top > rp - 1 {
        return Err(construction(format!(
            "derived step {s}..{top} leaves [R_j^- + 1, R_j^+ - 1] = [{}, {}]",
            rm + 1,
            rp - 1
        )));
    }
    let mut out = Vec::with_capacity(k + 1);
    let mut ty = 0usize;
    for i in 0..k {
        let step = if i < rem { s + 1 } else { s };
        out.push((i * rj..(i + 1) * rj, ty..ty + step));
        ty += step;
    }
    if r > 0 {
        out.push((k * rj..n, np - r..np));
    }
    Ok(out)
}

/// Composes a block-level witness from a class-checked mapping: singleton
/// pairs become paired steps (gated by the pair oracle), segment pairs
/// become jump steps from the compression schedule plus an identity tail.
#[allow(clippy::too_many_arguments)]
pub fn apply_mapping_embed<XB, YB>(
    xs: &[XB],
    ys: &[YB],
    gm: &GeneralizedMapping,
    pair: &dyn Fn(&XB, &YB) -> bool,
    good_x: &dyn Fn(&XB) -> bool,
    good_y: &dyn Fn(&YB) -> bool,
    j: u32,
    ps: &ParameterSet,
) -> Result<Option<EmbedWitness>> {
    if gm.tags.is_empty() {
        return Err(contract("mapping carries no verified class tag"));
    }
    if gm.p.span() != (0, xs.len() as i64) || gm.pp.span() != (0, ys.len() as i64) {
        return Err(contract("mapping does not span the given block sequences"));
    }
    let mut i_seq = vec![0usize];
    let mut ip_seq = vec![0usize];
    let sc = scales(ps, j)?;
    let rj = sc.r_j as usize;
    for r in 0..gm.len() {
        let (a0, a1) = gm.p.block(r);
        let (b0, b1) = gm.pp.block(r);
        let (a0, a1, b0, b1) = (a0 as usize, a1 as usize, b0 as usize, b1 as usize);
        if a1 - a0 == 1 && b1 - b0 == 1 {
            if !pair(&xs[a0], &ys[b0]) {
                return Ok(None);
            }
            i_seq.push(a1);
            ip_seq.push(b1);
            continue;
        }
        if !xs[a0..a1].iter().all(good_x) || !ys[b0..b1].iter().all(good_y) {
            return Err(contract("a segment pair contains a non-good block"));
        }
        for (xr, yr) in compress_embed_schedule(a1 - a0, b1 - b0, j, ps)? {
            if xr.len() == rj {
                // one jump step per compression block
                i_seq.push(a0 + xr.end);
                ip_seq.push(b0 + yr.end);
            } else {
                // identity tail: equal-length paired steps
                for d in 0..xr.len() {
                    if !pair(&xs[a0 + xr.start + d], &ys[b0 + yr.start + d]) {
                        return Ok(None);
                    }
                    i_seq.push(a0 + xr.start + d + 1);
                    ip_seq.push(b0 + yr.start + d + 1);
                }
            }
        }
    }
    Ok(Some(EmbedWitness { i_seq, ip_seq }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::profile;
    use crate::rembed::{rembed_verify, EmbedOracles};

    fn mpp(p: Vec<i64>, pp: Vec<i64>, marked: &[usize]) -> MarkedPartitionPair {
        MarkedPartitionPair {
            p: Partition::new(p).unwrap(),
            pp: Partition::new(pp).unwrap(),
            marked: marked.iter().copied().collect(),
        }
    }

    #[test]
    fn induce_examples() {
        // all marked, equal lengths: identity singleton mapping
        let gm = induce_mapping(&mpp(vec![0, 2, 4], vec![0, 2, 4], &[0, 1])).unwrap();
        assert_eq!(gm.p.cuts, vec![0, 1, 2, 3, 4]);
        assert_eq!(gm.pp.cuts, vec![0, 1, 2, 3, 4]);
        assert!(check_admissible(&gm));
        // nothing marked: intervals pass through whole
        let gm = induce_mapping(&mpp(vec![0, 2, 4], vec![0, 3, 5], &[])).unwrap();
        assert_eq!(gm.p.cuts, vec![0, 2, 4]);
        assert_eq!(gm.pp.cuts, vec![0, 3, 5]);
        // mixed: first interval split, second whole
        let gm = induce_mapping(&mpp(vec![0, 2, 4], vec![0, 2, 4], &[0])).unwrap();
        assert_eq!(gm.p.cuts, vec![0, 1, 2, 4]);
        // violated mark equality is a contract error
        assert!(induce_mapping(&mpp(vec![0, 2, 4], vec![0, 3, 4], &[0])).is_err());
    }

    #[test]
    fn admissible_checks() {
        let gm = GeneralizedMapping {
            p: Partition::new(vec![0, 1, 4]).unwrap(),
            pp: Partition::new(vec![0, 2, 5]).unwrap(),
            tags: BTreeSet::new(),
        };
        // singleton paired with a 2-interval
        assert!(!check_admissible(&gm));
        let gm = GeneralizedMapping {
            p: Partition::new(vec![0, 1, 4]).unwrap(),
            pp: Partition::new(vec![0, 1, 5]).unwrap(),
            tags: BTreeSet::new(),
        };
        assert!(check_admissible(&gm));
        assert_eq!(gm.tau(1), Some(1));
        assert_eq!(gm.tau(3), None);
        assert_eq!(gm.tau_inv(1), Some(1));
    }

    #[test]
    fn psi_round_trip() {
        let pm = build_psi(1000, 1200, 7, rat(64, 1)).unwrap();
        assert_eq!(psi_eval(&pm, &rat_int(0)), rat_int(0));
        assert_eq!(psi_eval(&pm, &rat_int(1000)), rat_int(1200));
        let mut rng = crate::params::rng_stream(5, 0);
        use rand::Rng;
        for _ in 0..100 {
            let x = rat(rng.gen_range(0..=3000), 3);
            let y = psi_eval(&pm, &x);
            assert_eq!(psi_inv(&pm, &y), x);
        }
        // s = 0 fixes the margin point
        let pm0 = build_psi(1000, 1200, 0, rat(64, 1)).unwrap();
        assert_eq!(psi_eval(&pm0, &rat(64, 1)), rat(64, 1));
        // monotone across pieces
        let a = psi_eval(&pm, &rat(63, 1));
        let b = psi_eval(&pm, &rat(65, 1));
        assert!(a < b);
        assert!(build_psi(100, 300, 0, rat(50, 1)).is_err());
    }

    #[test]
    fn separating_shift_cases() {
        let ps = profile("micro2").unwrap(); // j = 1: L = 8, L^3 = 512
        // empty bad sets: s0 = 0
        assert_eq!(find_separating_shift(4096, 4096, &[], &[], 1, &ps).unwrap(), Some(0));
        // a single far-apart pair: some shift works
        let s = find_separating_shift(4096, 4096, &[1000], &[3000], 1, &ps).unwrap();
        assert!(s.is_some());
        // margin violations are contract errors
        assert!(find_separating_shift(4096, 4096, &[100], &[], 1, &ps).is_err());
    }

    #[test]
    fn g_family_no_bads() {
        let ps = profile("micro2").unwrap();
        let fam = build_g_family(4096, 4100, &[], &[], 1, &ps).unwrap();
        assert_eq!(fam.len(), 64); // L^2 at j = 1
        for gm in &fam {
            assert!(check_admissible(gm));
            assert!(check_class_g(gm, &[], &[], 1, &ps).unwrap());
            // no singleton blocks without bad indices
            assert!((0..gm.len()).all(|r| {
                let (a0, a1) = gm.p.block(r);
                a1 - a0 > 1
            }));
        }
    }

    #[test]
    fn g_family_with_bads_and_shift_identity() {
        let ps = profile("micro2").unwrap();
        let b = vec![1500i64];
        let bp = vec![3000i64];
        let fam = build_g_family(4096, 4096, &b, &bp, 1, &ps).unwrap();
        assert_eq!(fam.len(), 64);
        let t1 = fam[0].tau(1500).unwrap();
        let u1 = fam[0].tau_inv(3000).unwrap();
        for (h, gm) in fam.iter().enumerate() {
            assert!(check_class_g(gm, &b, &bp, 1, &ps).unwrap());
            assert_eq!(gm.tau(1500).unwrap(), t1 + h as i64);
            assert_eq!(gm.tau_inv(3000).unwrap(), u1 - h as i64);
        }
    }

    #[test]
    fn h1_family() {
        let ps = profile("micro2-r2").unwrap();
        let b = vec![2000i64];
        let fam = build_h1_family(4096, 4000, &b, 1, &ps).unwrap();
        assert_eq!(fam.len(), 64);
        let t1 = fam[0].tau(2000).unwrap();
        for (h, gm) in fam.iter().enumerate() {
            assert!(check_class_h1(gm, &b, 4000, 1, &ps).unwrap());
            assert_eq!(gm.tau(2000).unwrap(), t1 + h as i64);
            let y = gm.tau(2000).unwrap();
            assert!(y > 512 && y < 4000 - 512);
        }
    }

    #[test]
    fn h2_step_range() {
        let ps = profile("micro2-r2").unwrap(); // j = 1: R_j = 16, [6, 40]
        let out = build_h2(4096, 4500, &[2000], 1, &ps).unwrap();
        assert!(out.s >= 6 && out.s <= 39, "s = {}", out.s);
        assert!(check_class_h2(&out.gm, &[2000], 4500, 1, &ps).unwrap());
        let y = out.gm.tau(2000).unwrap();
        assert!(y > 512 && y < 4500 - 512);
        // no bad indices: every interior X block is exactly R_j
        let out = build_h2(4096, 4096, &[], 1, &ps).unwrap();
        assert!(check_class_h2(&out.gm, &[], 4096, 1, &ps).unwrap());
    }

    #[test]
    fn schedule_examples() {
        let ps = profile("micro2").unwrap(); // j = 1: R_j = 8, R- = 6, R+ = 10
        let sc = scales(&ps, 1).unwrap();
        assert_eq!(sc.r_j, 8);
        // single whole-segment pair
        let s = compress_embed_schedule(8, 7, 1, &ps).unwrap();
        assert_eq!(s, vec![(0..8, 0..7)]);
        // equal lengths: equal steps
        let s = compress_embed_schedule(16, 16, 1, &ps).unwrap();
        assert_eq!(s, vec![(0..8, 0..8), (8..16, 8..16)]);
        // all Y sizes within the derived bounds
        let s = compress_embed_schedule(100, 95, 1, &ps).unwrap();
        let mut xt = 0;
        let mut yt = 0;
        for (xr, yr) in &s {
            assert_eq!(xr.start, xt);
            assert_eq!(yr.start, yt);
            xt = xr.end;
            yt = yr.end;
            if xr.len() == 8 {
                assert!((7..=9).contains(&yr.len()));
            } else {
                assert_eq!(xr.len(), yr.len());
            }
        }
        assert_eq!(xt, 100);
        assert_eq!(yt, 95);
    }

    #[test]
    fn apply_trivial_mapping() {
        // all-good equal segments under a trivial whole-interval mapping
        let ps = profile("micro2").unwrap();
        let n = 64usize;
        let xs: Vec<u32> = vec![0; n];
        let ys: Vec<u32> = vec![0; n];
        let gm = GeneralizedMapping {
            p: Partition::new(vec![0, n as i64]).unwrap(),
            pp: Partition::new(vec![0, n as i64]).unwrap(),
            tags: [ClassTag::Admissible, ClassTag::G].into_iter().collect(),
        };
        let pair = |_: &u32, _: &u32| true;
        let good = |_: &u32| true;
        let w = apply_mapping_embed(&xs, &ys, &gm, &pair, &good, &good, 1, &ps)
            .unwrap()
            .unwrap();
        let sc = scales(&ps, 1).unwrap();
        let o = EmbedOracles {
            pair: &pair,
            good_x: &good,
            good_y: &good,
            r0: sc.r_j as usize,
            r0_minus: sc.r_minus as usize,
            r0_plus: sc.r_plus as usize,
        };
        assert!(rembed_verify(&xs, &ys, &w, &o));
    }

    #[test]
    fn apply_bad_pair_fails() {
        let ps = profile("micro2").unwrap();
        let n = 65usize;
        let mut xs: Vec<u32> = vec![0; n];
        xs[32] = 1;
        let ys: Vec<u32> = vec![0; n];
        // bad X block isolated as a singleton against position 33
        let gm = GeneralizedMapping {
            p: Partition::new(vec![0, 32, 33, n as i64]).unwrap(),
            pp: Partition::new(vec![0, 32, 33, n as i64]).unwrap(),
            tags: [ClassTag::Admissible].into_iter().collect(),
        };
        // the pair oracle rejects (1, 0): no witness
        let pair = |x: &u32, y: &u32| !(*x == 1 && *y == 0);
        let good = |x: &u32| *x == 0;
        let w = apply_mapping_embed(&xs, &ys, &gm, &pair, &good, &good, 1, &ps).unwrap();
        assert!(w.is_none());
    }
}
