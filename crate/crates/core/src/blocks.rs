//! The recursive multi-scale block construction: a level-(j+1) block takes
//! L_j^3 sub-blocks, then L_j^(alpha-1) more, then a geometric number, then
//! scans for the first run of 2 L_j^3 consecutive good sub-blocks and ends
//! at the run's midpoint.  That leaves L_j^3 good sub-blocks at the end of
//! this block and L_j^3 good ones at the start of the next.

use crate::error::{contract, resource, Result};
use crate::params::{l_as_usize, scales, ParameterSet};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Block {
    pub level: u32,
    /// character span, half-open
    pub start: usize,
    pub end: usize,
    /// sub-block index span into the previous level's block list, half-open;
    /// equal to (start, end) at level 0
    pub sub_start: usize,
    pub sub_end: usize,
    pub w: u64,
    pub t: u64,
    pub first: bool,
}

impl Block {
    pub fn sub_count(&self) -> usize {
        self.sub_end - self.sub_start
    }
}

pub fn block_length(b: &Block) -> usize {
    b.end - b.start
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockHierarchy {
    /// levels[j] lists the level-j blocks; levels[0] is one block per character
    pub levels: Vec<Vec<Block>>,
}

impl BlockHierarchy {
    /// Plain-text serialization: one line per level, entries (start,end,W,T).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (j, level) in self.levels.iter().enumerate() {
            s.push_str(&format!("level {j}:"));
            for b in level {
                s.push_str(&format!(" ({},{},{},{})", b.start, b.end, b.w, b.t));
            }
            s.push('\n');
        }
        s
    }
}

/// Geometric draw with support {0, 1, 2, ...} and success probability p:
/// P(W = k) = p (1-p)^k.
pub fn sample_geometric(rng: &mut ChaCha8Rng, p: f64) -> u64 {
    assert!(p > 0.0 && p <= 1.0);
    if p >= 1.0 {
        return 0;
    }
    let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    (u.ln() / (1.0 - p).ln()).floor() as u64
}

pub const DEFAULT_SCAN_HORIZON: usize = 1_000_000;

/// Structural constants of a level-(j+1) block over level-j sub-blocks.
pub struct LevelShape {
    pub lj3: usize,
    pub lj_a1: usize,
    pub geom_p: f64,
}

pub fn level_shape(ps: &ParameterSet, j: u32) -> Result<LevelShape> {
    let sc = scales(ps, j)?;
    let l = l_as_usize(&sc)? as u128;
    let lj3 = l.pow(3);
    let lj_a1 = l.pow(ps.alpha as u32 - 1);
    if lj3 > usize::MAX as u128 / 4 || lj_a1 > usize::MAX as u128 / 4 {
        return Err(resource(format!("level-{j} block shape does not fit in memory")));
    }
    let lf = l as f64;
    Ok(LevelShape { lj3: lj3 as usize, lj_a1: lj_a1 as usize, geom_p: lf.powi(-4) })
}

pub struct SampledBlock<T> {
    pub subs: Vec<T>,
    pub w: u64,
    pub t: u64,
}

/// Draws one level-(j+1) block.  `source(true)` must yield a sub-block from
/// the good-conditioned law, `source(false)` from the unconditioned law.
pub fn sample_block<T>(
    ps: &ParameterSet,
    j: u32,
    good: &dyn Fn(&T) -> bool,
    source: &mut dyn FnMut(bool) -> T,
    rng: &mut ChaCha8Rng,
    horizon: usize,
) -> Result<SampledBlock<T>> {
    let shape = level_shape(ps, j)?;
    let w = sample_geometric(rng, shape.geom_p);
    let base = shape
        .lj3
        .checked_add(shape.lj_a1)
        .and_then(|b| b.checked_add(w as usize))
        .ok_or_else(|| resource("block base offset overflows"))?;
    let mut subs: Vec<T> = Vec::with_capacity(base + 2 * shape.lj3);
    for _ in 0..shape.lj3 {
        subs.push(source(true));
    }
    // scan for l = min{i >= base : sub-blocks i+1..i+2*lj3 all good}
    let mut run = 0usize; // good run ending at the last drawn sub-block > base
    let mut i = shape.lj3;
    loop {
        if subs.len() >= base + 2 * shape.lj3 && run >= 2 * shape.lj3 {
            // the run of 2*lj3 good sub-blocks ends at subs.len(); its start
            // l = subs.len() - 2*lj3 must be >= base
            let l = subs.len() - 2 * shape.lj3;
            if l >= base {
                let t = (l - shape.lj3 - shape.lj_a1) as u64;
                subs.truncate(l + shape.lj3);
                return Ok(SampledBlock { subs, w, t });
            }
        }
        if i >= horizon {
            return Err(resource(format!(
                "good-run scan exceeded horizon {horizon}; good-block probability too low at these parameters"
            )));
        }
        let s = source(false);
        run = if good(&s) { run + 1 } else { 0 };
        subs.push(s);
        i += 1;
    }
}

/// Partitions `levels[j]` (built so far) into level-(j+1) blocks.  The W
/// draws come from the supplied stream; the leftmost block is exempt from
/// the initial good-run requirement by construction (its first lj3
/// sub-blocks are simply whatever the sequence starts with).
fn partition_level(
    prev: &[Block],
    good: &dyn Fn(usize) -> bool,
    shape: &LevelShape,
    level: u32,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Block>> {
    let mut out = Vec::new();
    let mut pos = 0usize; // index into prev
    let n = prev.len();
    while pos < n {
        let w = sample_geometric(rng, shape.geom_p);
        let base = pos + shape.lj3 + shape.lj_a1 + w as usize;
        // find smallest l >= base with prev[l..l+2*lj3] all good
        let mut l = base;
        let found = loop {
            if l + 2 * shape.lj3 > n {
                break None;
            }
            if (l..l + 2 * shape.lj3).all(good) {
                break Some(l);
            }
            l += 1;
        };
        let Some(l) = found else {
            break; // rest of the sequence cannot complete a block
        };
        let sub_end = l + shape.lj3;
        out.push(Block {
            level,
            start: prev[pos].start,
            end: prev[sub_end - 1].end,
            sub_start: pos,
            sub_end,
            w,
            t: (l - pos - shape.lj3 - shape.lj_a1) as u64,
            first: pos == 0,
        });
        pos = sub_end;
    }
    Ok(out)
}

/// Builds the full hierarchy up to level `j_max`.  `good_oracles[j]` judges
/// a level-j block by its character slice.  W draws are taken from
/// per-level streams derived from `master_seed` so the partition of a fixed
/// character sequence is reproducible.
#[allow(clippy::type_complexity)]
pub fn partition_sequence(
    chars: &[u32],
    ps: &ParameterSet,
    j_max: u32,
    good_oracles: &[&dyn Fn(&[u32]) -> bool],
    master_seed: u64,
) -> Result<BlockHierarchy> {
    if (good_oracles.len() as u32) < j_max {
        return Err(contract(format!(
            "need {j_max} good oracles (levels 0..{})",
            j_max.saturating_sub(1)
        )));
    }
    let level0: Vec<Block> = (0..chars.len())
        .map(|i| Block {
            level: 0,
            start: i,
            end: i + 1,
            sub_start: i,
            sub_end: i + 1,
            w: 0,
            t: 0,
            first: i == 0,
        })
        .collect();
    let mut levels = vec![level0];
    for j in 0..j_max {
        let shape = level_shape(ps, j)?;
        let mut rng = crate::params::rng_stream(master_seed, j as u64);
        let prev = &levels[j as usize];
        let oracle = good_oracles[j as usize];
        let good = |i: usize| {
            let b = &prev[i];
            oracle(&chars[b.start..b.end])
        };
        let next = partition_level(prev, &good, &shape, j + 1, &mut rng)?;
        if next.is_empty() {
            return Err(resource(format!(
                "character sequence too short to complete one level-{} block",
                j + 1
            )));
        }
        levels.push(next);
    }
    Ok(BlockHierarchy { levels })
}
