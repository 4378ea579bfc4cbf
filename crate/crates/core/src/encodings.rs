//! The application-to-relation reductions: build symbol sequences from raw
//! bit/point data, and decode a step-embedding witness back into the
//! application object (a Lipschitz map, a rough isometry, deletion sets).

use crate::deciders::{DeletionSets, LipschitzMap, RoughIsoMap};
use crate::error::{contract, Result};
use crate::params::{rat_int, Rat};
use crate::problem::{classify_word, Symbol, SymbolSeq};
use crate::rembed::{rembed_verify, EmbedOracles, EmbedWitness};

// ----------------------------------------------------------------- lipschitz

/// X passes through bit-by-bit; Y is split into M0-letter words and each
/// word classified.  Returns the two symbol sequences.
pub fn encode_lipschitz(
    xstar: &[u8],
    ystar: &[u8],
    m0: u32,
    r: u64,
) -> Result<(SymbolSeq, SymbolSeq)> {
    if m0 == 0 {
        return Err(contract("word length must be positive"));
    }
    if !ystar.len().is_multiple_of(m0 as usize) {
        return Err(contract(format!(
            "|Ystar| = {} is not a multiple of the word length {m0}",
            ystar.len()
        )));
    }
    let xs: SymbolSeq = xstar.iter().map(|&b| b as Symbol).collect();
    let ys: SymbolSeq = ystar
        .chunks(m0 as usize)
        .map(|w| classify_word(w, r))
        .collect();
    Ok((xs, ys))
}

/// Decoded map together with the measured segment-boundary offsets (how far
/// into / short of its word segment each jump lands).
#[derive(Debug, Clone)]
pub struct DecodedLipschitz {
    pub map: LipschitzMap,
    pub max_start_offset: usize,
    pub max_end_offset: usize,
}

fn greedy_match(bits: &[u8], hay: &[u8], base: usize) -> Option<Vec<usize>> {
    let mut out = Vec::with_capacity(bits.len());
    let mut cur = 0usize;
    for &b in bits {
        let p = (cur..hay.len()).find(|&p| hay[p] == b)?;
        out.push(base + p);
        cur = p + 1;
    }
    Some(out)
}

/// Rebuilds an explicit position map from a verified witness over the
/// encoded pair: paired steps match a bit inside the word, jumps match the
/// consumed bits greedily against the star words' alternations.
pub fn decode_lipschitz(
    xstar: &[u8],
    ystar: &[u8],
    m0: u32,
    r: u64,
    w: &EmbedWitness,
) -> Result<DecodedLipschitz> {
    let (xs, ys) = encode_lipschitz(xstar, ystar, m0, r)?;
    let spec = crate::problem::lipschitz_spec(m0, r)?;
    let ok = crate::rembed::seq_oracles(&spec, r).with(|o| rembed_verify(&xs, &ys, w, o));
    if !ok {
        return Err(contract("witness fails verification for the encoded pair"));
    }
    let m0u = m0 as usize;
    let mut phi: Vec<usize> = Vec::with_capacity(xstar.len());
    let mut max_start = 0usize;
    let mut max_end = 0usize;
    for step in 1..w.i_seq.len() {
        let (a0, a1) = (w.i_seq[step - 1], w.i_seq[step]);
        let (b0, b1) = (w.ip_seq[step - 1], w.ip_seq[step]);
        let (y_lo, y_hi) = (b0 * m0u, b1 * m0u);
        let positions = greedy_match(&xstar[a0..a1], &ystar[y_lo..y_hi], y_lo)
            .ok_or_else(|| contract("verified step does not admit a bit matching"))?;
        max_start = max_start.max(positions[0] - y_lo);
        max_end = max_end.max(y_hi - 1 - *positions.last().unwrap());
        phi.extend(positions);
    }
    let m_achieved = phi.windows(2).map(|p| p[1] - p[0]).max().unwrap_or(1);
    let first_max = phi.first().map_or(1, |&p| p + 1);
    Ok(DecodedLipschitz {
        map: LipschitzMap { phi, m: m_achieved, first_max },
        max_start_offset: max_start,
        max_end_offset: max_end,
    })
}

// ---------------------------------------------------------------- gap classes

/// One symbol per inter-point block: C_0 for consecutive points, C_j when
/// the zero-gap L satisfies 2^(j-1) <= L < 2^j.
pub fn gap_encode(points: &[i64]) -> Result<SymbolSeq> {
    if points.first() != Some(&0) {
        return Err(contract("point list must start at 0"));
    }
    if points.windows(2).any(|p| p[1] <= p[0]) {
        return Err(contract("point list must be strictly increasing"));
    }
    Ok(points
        .windows(2)
        .map(|p| {
            let gap = (p[1] - p[0] - 1) as u64;
            if gap == 0 {
                0
            } else {
                gap.ilog2() as Symbol + 1
            }
        })
        .collect())
}

/// Leftmost realization: C_0 becomes gap 0, C_j becomes gap 2^(j-1).
/// `gap_encode` inverts it exactly.
pub fn gap_realize(symbols: &[Symbol]) -> Vec<i64> {
    let mut points = vec![0i64];
    for &s in symbols {
        let gap = if s == 0 { 0 } else { 1i64 << (s - 1) };
        points.push(points.last().unwrap() + gap + 1);
    }
    points
}

/// The constants of the decoded rough isometry: M = 2^(M0+2) R0+,
/// D = C = 2^(M0+1) R0+ with R0+ = 3R^2.
pub fn roughiso_constants(m0: u32, r: u64) -> (Rat, Rat, Rat) {
    let r0p = rat_int((3 * r * r) as i64);
    let m = rat_int(1i64 << (m0 + 2)) * r0p.clone();
    let d = rat_int(1i64 << (m0 + 1)) * r0p;
    (m, d.clone(), d)
}

/// Maps every source point inside a witness step to the left endpoint of
/// the step's target segment.  The final point of each list is a sentinel
/// (it starts the block after the encoded symbols) and is not mapped.
pub fn decode_roughiso(
    points_x: &[i64],
    points_y: &[i64],
    m0: u32,
    r: u64,
    w: &EmbedWitness,
) -> Result<RoughIsoMap> {
    let xs = gap_encode(points_x)?;
    let ys = gap_encode(points_y)?;
    let spec = crate::problem::roughiso_spec(
        m0,
        (m0 + 1).max(
            xs.iter().chain(ys.iter()).copied().max().unwrap_or(0) + m0 + 1,
        ).min(24),
    )?;
    let ok = crate::rembed::seq_oracles(&spec, r).with(|o| rembed_verify(&xs, &ys, w, o));
    if !ok {
        return Err(contract("witness fails verification for the gap-encoded pair"));
    }
    let mut image = Vec::with_capacity(xs.len());
    for step in 1..w.i_seq.len() {
        let (a0, a1) = (w.i_seq[step - 1], w.i_seq[step]);
        let target = points_y[w.ip_seq[step - 1]];
        image.extend(std::iter::repeat_n(target, a1 - a0));
    }
    let (m, d, c) = roughiso_constants(m0, r);
    Ok(RoughIsoMap { image, m, d, c })
}

// -------------------------------------------------------------- compatibility

pub fn encode_compatible(bits: &[u8]) -> SymbolSeq {
    bits.iter().map(|&b| b as Symbol).collect()
}

/// Turns a verified witness under the compatibility relation into deletion
/// sets: jump steps delete everything they consume on both sides, and
/// paired double-zero steps delete their pair; surviving paired positions
/// then disagree bit-for-bit.
pub fn decode_compatible(x: &[u8], y: &[u8], w: &EmbedWitness) -> Result<DeletionSets> {
    let pair = |a: &u32, b: &u32| !(*a == 1 && *b == 1);
    let good_x = |a: &u32| *a == 0;
    let good_y = |b: &u32| *b == 0;
    let r0p = 3usize; // R = 1 base constants
    let o = EmbedOracles { pair: &pair, good_x: &good_x, good_y: &good_y, r0: 2, r0_minus: 1, r0_plus: r0p };
    let xs = encode_compatible(x);
    let ys = encode_compatible(y);
    if !rembed_verify(&xs, &ys, w, &o) {
        return Err(contract("witness fails verification under the compatibility relation"));
    }
    let mut d = DeletionSets { from_x: vec![], from_y: vec![] };
    for step in 1..w.i_seq.len() {
        let (a0, a1) = (w.i_seq[step - 1], w.i_seq[step]);
        let (b0, b1) = (w.ip_seq[step - 1], w.ip_seq[step]);
        let jump = a1 - a0 != 1 || b1 - b0 != 1;
        let double_zero = !jump && x[a0] == 0 && y[b0] == 0;
        if jump || double_zero {
            d.from_x.extend(a0..a1);
            d.from_y.extend(b0..b1);
        }
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deciders::{check_deletion_sets, check_lipschitz, rough_iso_verify};
    use crate::params::rat;
    use crate::problem::W_STAR;
    use crate::rembed::{rembed_decide, seq_oracles, DEFAULT_WORK_CAP};
    use rand::Rng;

    #[test]
    fn encode_lipschitz_basic() {
        let star_word = [0, 1, 0, 1, 0, 1, 0, 1];
        let (xs, ys) = encode_lipschitz(&[0, 1], &star_word, 8, 1).unwrap();
        assert_eq!(xs, vec![0, 1]);
        assert_eq!(ys, vec![W_STAR]);
        assert!(encode_lipschitz(&[0], &[0, 1, 0], 2, 1).is_err());
    }

    #[test]
    fn decode_lipschitz_singletons() {
        // one paired step: bit 0 against a star word, leftmost 0 is position 0
        let ystar = [0, 1, 0, 1, 0, 1, 0, 1];
        let w = EmbedWitness { i_seq: vec![0, 1], ip_seq: vec![0, 1] };
        let dec = decode_lipschitz(&[0], &ystar, 8, 1, &w).unwrap();
        assert_eq!(dec.map.phi, vec![0]);
        // bit 1 against a ONE word, leftmost 1
        let ystar = [0, 1, 1, 1];
        let w = EmbedWitness { i_seq: vec![0, 1], ip_seq: vec![0, 1] };
        let dec = decode_lipschitz(&[1], &ystar, 4, 1, &w).unwrap();
        assert_eq!(dec.map.phi, vec![1]);
    }

    #[test]
    fn decode_lipschitz_randomized() {
        let mut rng = crate::params::rng_stream(23, 0);
        let m0 = 8u32;
        let spec = crate::problem::lipschitz_spec(m0, 1).unwrap();
        let so = seq_oracles(&spec, 1);
        let mut decoded = 0;
        while decoded < 200 {
            let n = rng.gen_range(1..=4);
            let np = rng.gen_range(n..=n + 4);
            let xstar: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
            let ystar: Vec<u8> = (0..np * m0 as usize).map(|_| rng.gen_range(0..2)).collect();
            let (xs, ys) = encode_lipschitz(&xstar, &ystar, m0, 1).unwrap();
            let w = so.with(|o| rembed_decide(&xs, &ys, o, DEFAULT_WORK_CAP).unwrap());
            let Some(w) = w else { continue };
            let dec = decode_lipschitz(&xstar, &ystar, m0, 1, &w).unwrap();
            assert!(
                check_lipschitz(&xstar, &ystar, &dec.map),
                "x={xstar:?} y={ystar:?} phi={:?}",
                dec.map.phi
            );
            // jumps never span more than the segment: gap bounded by the
            // width of two word segments at the base constants
            assert!(dec.map.m <= (3 + 2) * m0 as usize);
            decoded += 1;
        }
    }

    #[test]
    fn gap_encode_examples() {
        assert_eq!(gap_encode(&[0, 1]).unwrap(), vec![0]);
        assert_eq!(gap_encode(&[0, 2]).unwrap(), vec![1]);
        assert_eq!(gap_encode(&[0, 3, 4]).unwrap(), vec![2, 0]);
        assert!(gap_encode(&[1, 2]).is_err());
        assert!(gap_encode(&[0, 2, 2]).is_err());
    }

    #[test]
    fn gap_realize_round_trip() {
        let mut rng = crate::params::rng_stream(29, 0);
        for _ in 0..100 {
            let n = rng.gen_range(1..=10);
            let syms: SymbolSeq = (0..n).map(|_| rng.gen_range(0..6)).collect();
            assert_eq!(gap_encode(&gap_realize(&syms)).unwrap(), syms);
        }
    }

    #[test]
    fn roughiso_constants_example() {
        let (m, d, c) = roughiso_constants(2, 1);
        assert_eq!(m, rat(48, 1));
        assert_eq!(d, rat(24, 1));
        assert_eq!(c, rat(24, 1));
    }

    #[test]
    fn decode_roughiso_randomized() {
        let mut rng = crate::params::rng_stream(31, 0);
        let m0 = 2u32;
        let spec = crate::problem::roughiso_spec(m0, 12).unwrap();
        let so = seq_oracles(&spec, 1);
        let mut decoded = 0;
        while decoded < 200 {
            // site-percolation style point prefixes
            let n = rng.gen_range(2..=7);
            let np = rng.gen_range(2..=7);
            let mk = |rng: &mut rand_chacha::ChaCha8Rng, n: usize| {
                let mut pts = vec![0i64];
                for _ in 1..n {
                    let gap = rng.gen_range(0..4);
                    pts.push(pts.last().unwrap() + gap + 1);
                }
                pts
            };
            let px = mk(&mut rng, n);
            let py = mk(&mut rng, np);
            let xs = gap_encode(&px).unwrap();
            let ys = gap_encode(&py).unwrap();
            let w = so.with(|o| rembed_decide(&xs, &ys, o, DEFAULT_WORK_CAP).unwrap());
            let Some(w) = w else { continue };
            let map = decode_roughiso(&px, &py, m0, 1, &w).unwrap();
            let a = &px[..px.len() - 1];
            let b = &py[..py.len() - 1];
            assert!(
                rough_iso_verify(a, b, &map).unwrap(),
                "px={px:?} py={py:?} image={:?}",
                map.image
            );
            decoded += 1;
        }
    }

    #[test]
    fn decode_compatible_examples() {
        // paired disagreements survive whole
        let w = EmbedWitness { i_seq: vec![0, 1, 2], ip_seq: vec![0, 1, 2] };
        let d = decode_compatible(&[0, 1], &[1, 0], &w).unwrap();
        assert!(d.from_x.is_empty() && d.from_y.is_empty());
        // double zeros are deleted
        let d = decode_compatible(&[0, 0], &[0, 0], &w).unwrap();
        assert_eq!(d.from_x, vec![0, 1]);
        assert_eq!(d.from_y, vec![0, 1]);
    }

    #[test]
    fn decode_compatible_randomized() {
        let mut rng = crate::params::rng_stream(37, 0);
        let spec = crate::problem::compatible_spec(rat(3, 10)).unwrap();
        let so = seq_oracles(&spec, 1);
        let mut decoded = 0;
        while decoded < 200 {
            let n = rng.gen_range(0..=10);
            let np = rng.gen_range(0..=10);
            let x: Vec<u8> = (0..n).map(|_| u8::from(rng.gen_bool(0.3))).collect();
            let y: Vec<u8> = (0..np).map(|_| u8::from(rng.gen_bool(0.3))).collect();
            let xs = encode_compatible(&x);
            let ys = encode_compatible(&y);
            let w = so.with(|o| rembed_decide(&xs, &ys, o, DEFAULT_WORK_CAP).unwrap());
            let Some(w) = w else { continue };
            let d = decode_compatible(&x, &y, &w).unwrap();
            assert!(check_deletion_sets(&x, &y, &d), "x={x:?} y={y:?} d={d:?}");
            decoded += 1;
        }
    }
}
