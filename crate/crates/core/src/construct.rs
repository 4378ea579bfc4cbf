//! Level-by-level catalogs of the good and semi-bad blocks, extension of a
//! good block to the next level, and a deterministic character sequence
//! whose leading block is good at every requested level.
//!
//! Everything here is deterministic: enumeration order is lexicographic by
//! symbol index, probabilities are exact rationals, and catalogs can be
//! persisted in the content-addressed store keyed by a digest of all
//! inputs.

use crate::classify::{
    embedding_prob_exact, enumerate_block_distribution, geom_range_mass, is_good, is_semibad,
    is_strong, level0_distribution, w_lower, EnumCaps, ProbInterval, ProbMethod,
    SubStatus, TriState, Word,
};
use crate::error::{contract, resource, Result};
use crate::params::{l_as_usize, pow2_neg, scales, ParameterSet, Rat};
use crate::problem::{ProblemSpec, Symbol, SymbolSeq};
use crate::rembed::seq_oracles;
use crate::store::{CacheKey, Store};
use num::{BigInt, One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// One cataloged block: its character expansion and its exact probability
/// under the block law at its level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogBlock {
    pub chars: SymbolSeq,
    pub prob: Rat,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelCatalog {
    pub level: u32,
    pub y_side: bool,
    pub good: Vec<CatalogBlock>,
    pub semibad: Vec<CatalogBlock>,
    /// true when enumeration exhausted the finite search space and every
    /// candidate was classified definitively
    pub complete: bool,
    /// partner-length horizon factor c in |partner| <= c * R * |X|
    pub horizon_factor: u64,
}

impl LevelCatalog {
    /// Lists disjoint, probabilities positive.
    pub fn check(&self) -> Result<()> {
        for b in self.good.iter().chain(&self.semibad) {
            if b.prob <= Rat::zero() || b.prob > Rat::one() {
                return Err(contract("catalog probability outside (0, 1]"));
            }
        }
        if self.good.iter().any(|g| self.semibad.iter().any(|s| s.chars == g.chars)) {
            return Err(contract("good and semi-bad lists intersect"));
        }
        Ok(())
    }

    /// Whether the given character expansion is cataloged as good.
    pub fn is_good_chars(&self, chars: &[Symbol]) -> bool {
        self.good.iter().any(|b| b.chars == chars)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CatalogCaps {
    /// mass left unenumerated in block laws used for semi-bad certification
    pub epsilon: Rat,
    pub enum_caps: EnumCaps,
    /// partner-length horizon factor c (the step rules force
    /// |partner| <= 2R |X|, so any c >= 2 is sound)
    pub horizon_factor: u64,
    /// embedding decisions allowed for semi-bad certification at level >= 1;
    /// 0 skips that phase and leaves the catalog incomplete
    pub semibad_budget: u64,
}

impl Default for CatalogCaps {
    fn default() -> Self {
        CatalogCaps {
            epsilon: pow2_neg(10),
            enum_caps: EnumCaps::default(),
            horizon_factor: 3,
            semibad_budget: 0,
        }
    }
}

/// Definitive level-0 status of every listed symbol on one side, with the
/// exact S_0 interval for the non-good ones.
pub(crate) struct Level0Status {
    /// (symbol, status, mu(symbol)); zero-mass symbols are skipped
    pub(crate) rows: Vec<(Symbol, SubStatus, Rat)>,
    pub(crate) unknowns: usize,
}

pub(crate) fn level0_status(ps: &ParameterSet, spec: &ProblemSpec, y_side: bool) -> Result<Level0Status> {
    let dist = level0_distribution(spec, y_side);
    let partner = level0_distribution(spec, !y_side);
    let mut rows = Vec::new();
    let mut unknowns = 0usize;
    for e in &dist.entries {
        let sym = e.word[0];
        let good = if y_side { spec.is_good_y(sym) } else { spec.is_good_x(sym) };
        let status = if good {
            SubStatus::Good
        } else {
            // S_0 against the opposite side's symbol law; the embedding
            // direction is always X into Y
            let sval = embedding_prob_exact(&partner, &|w: &Word| {
                if y_side {
                    spec.related(w[0], sym)
                } else {
                    spec.related(sym, w[0])
                }
            });
            match is_semibad(&[sym], false, 0, ps, &sval)? {
                TriState::Yes => SubStatus::SemiBad,
                TriState::No => SubStatus::BadOther,
                TriState::Unknown => {
                    unknowns += 1;
                    SubStatus::Unknown
                }
            }
        };
        rows.push((sym, status, e.prob.clone()));
    }
    Ok(Level0Status { rows, unknowns })
}

/// Exact probability of a level-1 block word under the (non-leftmost)
/// renewal law; `bads` holds the 1-indexed non-good positions.
fn level1_word_prob(
    chars: &[Symbol],
    bads: &[usize],
    mu: &dyn Fn(Symbol) -> Rat,
    lj3: usize,
    a: usize,
    l: usize,
) -> Rat {
    let p_geom = Rat::new(BigInt::one(), BigInt::from(l).pow(4));
    let t = (chars.len() - a - 2 * lj3) as u64;
    let l_stop = chars.len() - lj3;
    let w_lo = w_lower(bads, lj3, a, l_stop);
    let weight: Rat = chars.iter().map(|&c| mu(c)).product();
    weight * geom_range_mass(&p_geom, w_lo, t)
}

/// The good test for a level-1 word, with window strength judged against
/// the opposite side's level-0 semi-bad symbols.
pub(crate) fn level1_is_good(
    chars: &[Symbol],
    status_of: &dyn Fn(Symbol) -> SubStatus,
    semibad_other: &[Symbol],
    spec: &ProblemSpec,
    y_side: bool,
    ps: &ParameterSet,
) -> Result<bool> {
    let subs: Vec<SubStatus> = chars.iter().map(|&c| status_of(c)).collect();
    let sc = scales(ps, 0)?;
    let w = sc.fl32.to_usize().ok_or_else(|| resource("window width does not fit"))?;
    let strong_window = |start: usize| -> Result<bool> {
        let window = &chars[start..start + w];
        // a semi-bad opposite block must embed into most window blocks;
        // at level 0 single characters embed iff they are related
        let embeds = |sb: &Symbol, item: &Symbol| {
            if y_side {
                spec.related(*sb, *item)
            } else {
                spec.related(*item, *sb)
            }
        };
        is_strong(window, semibad_other, &embeds, 0, ps)
    };
    is_good(&subs, &strong_window, 0, ps)
}

/// Enumerates all good level-1 blocks on one side: first and last L^3
/// sub-blocks good, at most k0 interior semi-bad sub-blocks, and overall
/// length within the good bound.  Returns (blocks, exhausted).
#[allow(clippy::too_many_arguments)]
fn enumerate_level1_good(
    ps: &ParameterSet,
    spec: &ProblemSpec,
    y_side: bool,
    status: &Level0Status,
    semibad_other: &[Symbol],
    caps: &CatalogCaps,
) -> Result<(Vec<CatalogBlock>, bool)> {
    let sc = scales(ps, 0)?;
    let l = l_as_usize(&sc)?;
    let lj3 = l.pow(3);
    let a = l.pow(ps.alpha as u32 - 1);
    // n = a + 2 L^3 + T <= a + L^5
    let t_max = l.pow(5) - 2 * lj3;
    let goods: Vec<Symbol> = status
        .rows
        .iter()
        .filter(|(_, st, _)| *st == SubStatus::Good)
        .map(|(s, _, _)| *s)
        .collect();
    let semis: Vec<Symbol> = status
        .rows
        .iter()
        .filter(|(_, st, _)| *st == SubStatus::SemiBad)
        .map(|(s, _, _)| *s)
        .collect();
    let mu_of: std::collections::BTreeMap<Symbol, Rat> =
        status.rows.iter().map(|(s, _, p)| (*s, p.clone())).collect();
    let status_of: std::collections::BTreeMap<Symbol, SubStatus> =
        status.rows.iter().map(|(s, st, _)| (*s, *st)).collect();

    let mut out = Vec::new();
    let mut work = 0u64;
    let mut exhausted = true;
    'outer: for t in 0..=t_max {
        let m = a + 2 * lj3 + t;
        // DFS over positions 1..=m, lexicographic by symbol index
        let mut word: SymbolSeq = Vec::with_capacity(m);
        let mut bads: Vec<usize> = Vec::new();
        // iterative stack of (position, option index)
        let mut stack: Vec<usize> = vec![0];
        while let Some(opt) = stack.pop() {
            let pos = stack.len() + 1;
            let boundary = pos <= lj3 || pos > m - lj3;
            let options: &[Symbol] = if boundary { &goods } else { &[] };
            let (sym, good_choice) = if boundary {
                if opt >= options.len() {
                    if let Some(s) = word.pop() {
                        if status_of[&s] != SubStatus::Good {
                            bads.pop();
                        }
                    }
                    continue;
                }
                (options[opt], true)
            } else {
                // interior: goods first, then semi-bad fills while under k0
                if opt < goods.len() {
                    (goods[opt], true)
                } else if opt - goods.len() < semis.len() && bads.len() < ps.k0 as usize {
                    (semis[opt - goods.len()], false)
                } else {
                    if let Some(s) = word.pop() {
                        if status_of[&s] != SubStatus::Good {
                            bads.pop();
                        }
                    }
                    continue;
                }
            };
            stack.push(opt + 1);
            word.push(sym);
            if !good_choice {
                bads.push(pos);
            }
            work += 1;
            if work > caps.enum_caps.work_cap || out.len() > caps.enum_caps.max_entries {
                exhausted = false;
                break 'outer;
            }
            if word.len() == m {
                if level1_is_good(&word, &|s| status_of[&s], semibad_other, spec, y_side, ps)? {
                    let prob = level1_word_prob(
                        &word,
                        &bads,
                        &|s| mu_of[&s].clone(),
                        lj3,
                        a,
                        l,
                    );
                    out.push(CatalogBlock { chars: word.clone(), prob });
                }
                let s = word.pop().unwrap();
                if status_of[&s] != SubStatus::Good {
                    bads.pop();
                }
                continue;
            }
            stack.push(0);
        }
    }
    Ok((out, exhausted && status.unknowns == 0))
}

/// Certifies semi-bad level-1 blocks on one side by enumerating both block
/// laws and comparing each non-good block's exact embedding probability
/// with the semi-bad floor.  Returns (blocks, definitive).
fn certify_level1_semibad(
    ps: &ParameterSet,
    spec: &ProblemSpec,
    y_side: bool,
    good: &[CatalogBlock],
    caps: &CatalogCaps,
) -> Result<(Vec<CatalogBlock>, bool)> {
    if caps.horizon_factor < 2 {
        return Err(contract("partner horizon factor must be at least 2"));
    }
    let mut budget = caps.semibad_budget;
    if budget == 0 {
        return Ok((Vec::new(), false));
    }
    let enumerate = |side: bool| -> Result<_> {
        let d0 = level0_distribution(spec, side);
        let flags: Vec<bool> = d0
            .entries
            .iter()
            .map(|e| if side { spec.is_good_y(e.word[0]) } else { spec.is_good_x(e.word[0]) })
            .collect();
        let d1 = enumerate_block_distribution(1, ps, &d0, &flags, &caps.epsilon, &caps.enum_caps)?;
        // expand words (indices into d0's support) to characters
        let expand: Vec<(SymbolSeq, Rat)> = d1
            .entries
            .iter()
            .map(|e| (e.word.iter().map(|&i| d0.entries[i as usize].word[0]).collect(), e.prob.clone()))
            .collect();
        Ok((expand, d1.mass_deficit))
    };
    let (own, _own_deficit) = match enumerate(y_side) {
        Ok(v) => v,
        Err(_) => return Ok((Vec::new(), false)),
    };
    let (partners, partner_deficit) = match enumerate(!y_side) {
        Ok(v) => v,
        Err(_) => return Ok((Vec::new(), false)),
    };
    let sc1 = scales(ps, 1)?;
    let len_cap = 10 * l_as_usize(&sc1)?;
    let oracles = seq_oracles(spec, ps.r);
    let mut out = Vec::new();
    let mut definitive = true;
    for (chars, prob) in &own {
        if chars.len() > len_cap || good.iter().any(|g| &g.chars == chars) {
            continue;
        }
        // partners longer than the horizon cannot absorb/be absorbed: every
        // step consumes at least one item per 2R on the other side
        let horizon = (caps.horizon_factor * ps.r) as usize * chars.len();
        let mut lo = Rat::zero();
        let mut resolved = true;
        for (pchars, pprob) in &partners {
            if pchars.len() > horizon {
                continue;
            }
            if budget == 0 {
                resolved = false;
                break;
            }
            budget -= 1;
            let hit = if y_side {
                oracles.embeds(pchars, chars)?
            } else {
                oracles.embeds(chars, pchars)?
            };
            if hit {
                lo += pprob.clone();
            }
        }
        if !resolved {
            definitive = false;
            break;
        }
        let sval = ProbInterval {
            lo: lo.clone(),
            hi: (lo + partner_deficit.clone()).min(Rat::one()),
            method: ProbMethod::ExactTruncated,
        };
        match is_semibad(chars, false, 1, ps, &sval)? {
            TriState::Yes => out.push(CatalogBlock { chars: chars.clone(), prob: prob.clone() }),
            TriState::No => {}
            TriState::Unknown => definitive = false,
        }
    }
    Ok((out, definitive))
}

/// Definitive classification of one block given by its character expansion.
/// At level 1 `Bad` only means "not good": the semi-bad test needs an
/// embedding-probability budget and lives in the catalog path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BlockClass {
    Good,
    SemiBad,
    Bad,
    Unknown,
}

pub fn classify_block(
    chars: &[Symbol],
    j: u32,
    ps: &ParameterSet,
    spec: &ProblemSpec,
    y_side: bool,
) -> Result<BlockClass> {
    let status = level0_status(ps, spec, y_side)?;
    let status_of = |s: Symbol| -> SubStatus {
        status
            .rows
            .iter()
            .find(|(sym, _, _)| *sym == s)
            .map(|(_, st, _)| *st)
            .unwrap_or(SubStatus::Unknown)
    };
    match j {
        0 => {
            if chars.len() != 1 {
                return Err(contract("a level-0 block is a single character"));
            }
            Ok(match status_of(chars[0]) {
                SubStatus::Good => BlockClass::Good,
                SubStatus::SemiBad => BlockClass::SemiBad,
                SubStatus::BadOther => BlockClass::Bad,
                SubStatus::Unknown => BlockClass::Unknown,
            })
        }
        1 => {
            if chars.iter().any(|&c| status_of(c) == SubStatus::Unknown) {
                return Ok(BlockClass::Unknown);
            }
            let semibad_other: Vec<Symbol> = level0_status(ps, spec, !y_side)?
                .rows
                .iter()
                .filter(|(_, st, _)| *st == SubStatus::SemiBad)
                .map(|(s, _, _)| *s)
                .collect();
            if level1_is_good(chars, &status_of, &semibad_other, spec, y_side, ps)? {
                Ok(BlockClass::Good)
            } else {
                Ok(BlockClass::Bad)
            }
        }
        _ => Err(resource("classification is implemented for levels 0 and 1")),
    }
}

/// Catalogs every good and semi-bad block at the given level on one side.
/// Levels 0 and 1 are supported; deeper catalogs exceed any practical cap.
pub fn list_level_catalog(
    j: u32,
    ps: &ParameterSet,
    spec: &ProblemSpec,
    y_side: bool,
    caps: &CatalogCaps,
) -> Result<LevelCatalog> {
    spec.check()?;
    let tail = if y_side { &spec.tail_y } else { &spec.tail_x };
    match j {
        0 => {
            let status = level0_status(ps, spec, y_side)?;
            let mut good = Vec::new();
            let mut semibad = Vec::new();
            for (sym, st, prob) in &status.rows {
                let b = CatalogBlock { chars: vec![*sym], prob: prob.clone() };
                match st {
                    SubStatus::Good => good.push(b),
                    SubStatus::SemiBad => semibad.push(b),
                    _ => {}
                }
            }
            let cat = LevelCatalog {
                level: 0,
                y_side,
                good,
                semibad,
                // an unlisted tail hides symbols whose status we never judged
                complete: status.unknowns == 0 && tail.is_zero(),
                horizon_factor: caps.horizon_factor,
            };
            cat.check()?;
            Ok(cat)
        }
        1 => {
            let status = level0_status(ps, spec, y_side)?;
            let status_other = level0_status(ps, spec, !y_side)?;
            let semibad_other: Vec<Symbol> = status_other
                .rows
                .iter()
                .filter(|(_, st, _)| *st == SubStatus::SemiBad)
                .map(|(s, _, _)| *s)
                .collect();
            let (good, good_done) =
                enumerate_level1_good(ps, spec, y_side, &status, &semibad_other, caps)?;
            let (semibad, semi_done) = certify_level1_semibad(ps, spec, y_side, &good, caps)?;
            let cat = LevelCatalog {
                level: 1,
                y_side,
                good,
                semibad,
                complete: good_done
                    && semi_done
                    && status_other.unknowns == 0
                    && tail.is_zero()
                    && (if y_side { &spec.tail_x } else { &spec.tail_y }).is_zero(),
                horizon_factor: caps.horizon_factor,
            };
            cat.check()?;
            Ok(cat)
        }
        _ => Err(resource(format!("level-{j} catalogs exceed the enumeration caps"))),
    }
}

/// `list_level_catalog` through the store: the key digests every input
/// that can change the result.
pub fn catalog_cached(
    store: &Store,
    j: u32,
    ps: &ParameterSet,
    spec: &ProblemSpec,
    y_side: bool,
    caps: &CatalogCaps,
) -> Result<LevelCatalog> {
    let key = CacheKey::digest(&[
        ("schema", b"catalog-v1"),
        ("level", &j.to_le_bytes()),
        ("side", &[y_side as u8]),
        ("ps", &serde_json::to_vec(ps)?),
        ("spec", format!("{spec:?}").as_bytes()),
        ("caps", &serde_json::to_vec(caps)?),
    ]);
    if let Some(bytes) = store.get(&key)? {
        let cat: LevelCatalog = serde_json::from_slice(&bytes)
            .map_err(|e| crate::error::integrity(format!("stored catalog unreadable: {e}")))?;
        return Ok(cat);
    }
    let cat = list_level_catalog(j, ps, spec, y_side, caps)?;
    store.put(&key, &serde_json::to_vec(&cat)?)?;
    Ok(cat)
}

/// Extends a good level-0 block to a good level-1 block beginning with it:
/// the remaining positions take the smallest good symbol and the block has
/// the minimal length (overshoot T = 0).
pub fn extend_good_block(
    xgood: &CatalogBlock,
    j: u32,
    ps: &ParameterSet,
    spec: &ProblemSpec,
    y_side: bool,
    _caps: &CatalogCaps,
) -> Result<CatalogBlock> {
    if j != 0 {
        return Err(resource("extension is implemented from level 0 only"));
    }
    let status = level0_status(ps, spec, y_side)?;
    let status_other = level0_status(ps, spec, !y_side)?;
    let first = *xgood.chars.first().ok_or_else(|| contract("empty input block"))?;
    if !status
        .rows
        .iter()
        .any(|(s, st, _)| *s == first && *st == SubStatus::Good)
    {
        return Err(contract("input block is not a good level-0 block"));
    }
    let fill = status
        .rows
        .iter()
        .find(|(_, st, _)| *st == SubStatus::Good)
        .map(|(s, _, _)| *s)
        .ok_or_else(|| resource("no good symbol available as filler"))?;
    let sc = scales(ps, 0)?;
    let l = l_as_usize(&sc)?;
    let lj3 = l.pow(3);
    let a = l.pow(ps.alpha as u32 - 1);
    let mut chars = vec![fill; a + 2 * lj3];
    chars[0] = first;
    let status_of: std::collections::BTreeMap<Symbol, SubStatus> =
        status.rows.iter().map(|(s, st, _)| (*s, *st)).collect();
    let semibad_other: Vec<Symbol> = status_other
        .rows
        .iter()
        .filter(|(_, st, _)| *st == SubStatus::SemiBad)
        .map(|(s, _, _)| *s)
        .collect();
    if !level1_is_good(&chars, &|s| status_of[&s], &semibad_other, spec, y_side, ps)? {
        return Err(resource(
            "all-good extension fails the window-strength condition at this scale",
        ));
    }
    let mu_of: std::collections::BTreeMap<Symbol, Rat> =
        status.rows.iter().map(|(s, _, p)| (*s, p.clone())).collect();
    let prob = level1_word_prob(&chars, &[], &|s| mu_of[&s].clone(), lj3, a, l);
    Ok(CatalogBlock { chars, prob })
}

/// A character sequence whose leading block is good at every level
/// 0..=j_max, built from the smallest good symbol upward.
pub fn deterministic_sequence(
    j_max: u32,
    ps: &ParameterSet,
    spec: &ProblemSpec,
    y_side: bool,
    caps: &CatalogCaps,
) -> Result<SymbolSeq> {
    let cat0 = list_level_catalog(0, ps, spec, y_side, caps)?;
    let first = cat0
        .good
        .first()
        .ok_or_else(|| resource("no good level-0 block exists"))?;
    match j_max {
        0 => Ok(first.chars.clone()),
        1 => Ok(extend_good_block(first, 0, ps, spec, y_side, caps)?.chars),
        _ => Err(resource(format!("level-{j_max} construction exceeds the enumeration caps"))),
    }
}
