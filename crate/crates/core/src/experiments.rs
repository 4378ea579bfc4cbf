//! Seeded Monte Carlo experiments: tail and moment estimates for the block
//! machinery and probability curves for the applications.  Every estimate
//! carries an exact-binomial 95% interval (or a normal interval for means),
//! and every result is a pure function of its descriptor: trials draw from
//! per-trial RNG streams so results do not depend on evaluation order.

use crate::blocks::{sample_block, DEFAULT_SCAN_HORIZON};
use crate::classify::{binom_ci95, SubStatus};
use crate::construct::{level0_status, level1_is_good};
use crate::deciders::{compatible_decide, lipschitz_embed_greedy};
use crate::error::{contract, resource, Result};
use crate::params::{l_as_usize, rng_stream, scales, ParameterSet};
use crate::problem::{ProblemSpec, Symbol};
use crate::rembed::seq_oracles;
use num::ToPrimitive;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Descriptor {
    pub name: String,
    pub params: Vec<(String, String)>,
    pub seed: u64,
    pub trials: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub x: String,
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
    /// reference bound or exact value, where one is defined
    pub reference: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentResult {
    pub descriptor: Descriptor,
    pub rows: Vec<Row>,
}

impl ExperimentResult {
    /// One CSV row per abscissa; reference empty when undefined.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,estimate,lo,hi,reference\n");
        for r in &self.rows {
            let rf = r.reference.map(|v| v.to_string()).unwrap_or_default();
            s.push_str(&format!("{},{},{},{},{}\n", r.x, r.estimate, r.lo, r.hi, rf));
        }
        s
    }

    /// Structured-text sidecar naming every input of the run.
    pub fn descriptor_text(&self) -> String {
        let mut s = format!(
            "experiment: {}\nseed: {}\ntrials: {}\n",
            self.descriptor.name, self.descriptor.seed, self.descriptor.trials
        );
        for (k, v) in &self.descriptor.params {
            s.push_str(&format!("{k}: {v}\n"));
        }
        s
    }
}

fn ci_row(x: String, hits: u64, trials: u64, reference: Option<f64>) -> Row {
    let (lo, hi) = binom_ci95(hits, trials);
    Row { x, estimate: hits as f64 / trials as f64, lo, hi, reference }
}

/// Samples a listed symbol by its mass (rounded to f64); None is the
/// unlisted tail.
fn sample_symbol(spec: &ProblemSpec, y_side: bool, rng: &mut ChaCha8Rng) -> Option<Symbol> {
    let mu = if y_side { &spec.mu_y } else { &spec.mu_x };
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in mu.iter().enumerate() {
        acc += p.to_f64().unwrap_or(0.0);
        if u < acc {
            return Some(i as Symbol);
        }
    }
    None
}

/// Unlisted-tail draws are carried as this sentinel character; it is never
/// good and never related to anything.
pub const TAIL_SENTINEL: Symbol = u32::MAX;

/// Character expansion of one sampled level-j block on one side (j <= 1).
pub fn sample_block_chars(
    j: u32,
    ps: &ParameterSet,
    spec: &ProblemSpec,
    y_side: bool,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Symbol>> {
    let draw = |rng: &mut ChaCha8Rng| sample_symbol(spec, y_side, rng).unwrap_or(TAIL_SENTINEL);
    match j {
        0 => Ok(vec![draw(rng)]),
        1 => {
            let good = |s: &Symbol| {
                *s != TAIL_SENTINEL
                    && if y_side { spec.is_good_y(*s) } else { spec.is_good_x(*s) }
            };
            // fork the trial stream: one branch feeds the geometric draw,
            // the other the symbol draws
            let mut structure = rng_stream(rng.gen(), 0);
            let mut data = rng_stream(rng.gen(), 1);
            // rejection for the good-conditioned prefix law
            let mut source = |conditioned: bool| loop {
                let s = draw(&mut data);
                if !conditioned || good(&s) {
                    return s;
                }
            };
            let b = sample_block(ps, 0, &good, &mut source, &mut structure, DEFAULT_SCAN_HORIZON)?;
            Ok(b.subs)
        }
        _ => Err(resource("block sampling is implemented for levels 0 and 1")),
    }
}

/// Empirical tail of the embedding probability S_j(X): one row per grid
/// point p with the estimate of P(S_j(X) <= p) and the reference bound
/// p^{m_j} L_j^{-beta}.  S is exact at level 0 and nested Monte Carlo with
/// `inner_trials` partner draws at level 1.
pub fn tail_curve(
    j: u32,
    ps: &ParameterSet,
    spec: &ProblemSpec,
    trials: u64,
    p_grid: &[f64],
    inner_trials: u64,
    seed: u64,
) -> Result<ExperimentResult> {
    if trials == 0 || (j > 0 && inner_trials == 0) {
        return Err(contract("trials and inner_trials must be positive"));
    }
    let sc = scales(ps, j)?;
    let mj = ps.m as f64 + 0.5f64.powi(j as i32);
    let lj = l_as_usize(&sc)? as f64;
    let oracles = seq_oracles(spec, ps.r);
    let mut svals = Vec::with_capacity(trials as usize);
    for t in 0..trials {
        let mut rng = rng_stream(seed, t);
        let x = sample_block_chars(j, ps, spec, false, &mut rng)?;
        let s = if j == 0 {
            // exact: S_0(x) = sum of mu_Y over related symbols
            if x[0] == TAIL_SENTINEL {
                0.0
            } else {
                spec.mu_y
                    .iter()
                    .enumerate()
                    .filter(|(y, _)| spec.related(x[0], *y as Symbol))
                    .map(|(_, p)| p.to_f64().unwrap_or(0.0))
                    .sum()
            }
        } else {
            let mut hits = 0u64;
            for _ in 0..inner_trials {
                let y = sample_block_chars(j, ps, spec, true, &mut rng)?;
                if oracles.embeds(&x, &y)? {
                    hits += 1;
                }
            }
            hits as f64 / inner_trials as f64
        };
        svals.push(s);
    }
    let rows = p_grid
        .iter()
        .map(|&p| {
            let hits = svals.iter().filter(|&&s| s <= p).count() as u64;
            ci_row(format!("p={p}"), hits, trials, Some(p.powf(mj) * lj.powi(-(ps.beta as i32))))
        })
        .collect();
    Ok(ExperimentResult {
        descriptor: Descriptor {
            name: "tail_curve".into(),
            params: vec![
                ("level".into(), j.to_string()),
                ("spec".into(), spec.name.clone()),
                ("inner_trials".into(), inner_trials.to_string()),
                ("p_grid".into(), format!("{p_grid:?}")),
            ],
            seed,
            trials,
        },
        rows,
    })
}

/// Exponential length moment of a level-j block: the estimate of
/// E[exp(L_{j-1}^{-6}(|X| - (2 - 2^{-j}) L_j))] against the reference 1,
/// plus the tail rows P(|X| > (2-2^{-j})L_j + x L_{j-1}^6) against e^{-x}
/// for x in {1,2,3}.  L_{-1} reads as L_0^{1/alpha}.
pub fn length_moment(
    j: u32,
    ps: &ParameterSet,
    spec: &ProblemSpec,
    trials: u64,
    seed: u64,
) -> Result<ExperimentResult> {
    if trials == 0 {
        return Err(contract("trials must be positive"));
    }
    let lj = l_as_usize(&scales(ps, j)?)? as f64;
    let l_prev6 = if j == 0 {
        (ps.l0 as f64).powf(6.0 / ps.alpha as f64)
    } else {
        (l_as_usize(&scales(ps, j - 1)?)? as f64).powi(6)
    };
    let target = (2.0 - 0.5f64.powi(j as i32)) * lj;
    let mut lens = Vec::with_capacity(trials as usize);
    for t in 0..trials {
        let mut rng = rng_stream(seed, t);
        lens.push(sample_block_chars(j, ps, spec, false, &mut rng)?.len() as f64);
    }
    let moments: Vec<f64> = lens.iter().map(|&n| ((n - target) / l_prev6).exp()).collect();
    let mean = moments.iter().sum::<f64>() / trials as f64;
    let var = moments.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / trials as f64;
    let half = 1.96 * (var / trials as f64).sqrt();
    let mut rows = vec![Row {
        x: "moment".into(),
        estimate: mean,
        lo: mean - half,
        hi: mean + half,
        reference: Some(1.0),
    }];
    for x in 1..=3u32 {
        let cut = target + x as f64 * l_prev6;
        let hits = lens.iter().filter(|&&n| n > cut).count() as u64;
        rows.push(ci_row(format!("tail_x={x}"), hits, trials, Some((-(x as f64)).exp())));
    }
    Ok(ExperimentResult {
        descriptor: Descriptor {
            name: "length_moment".into(),
            params: vec![
                ("level".into(), j.to_string()),
                ("spec".into(), spec.name.clone()),
            ],
            seed,
            trials,
        },
        rows,
    })
}

/// Empirical fraction of sampled level-j blocks classified good, against
/// the reference 1 - L_j^{-delta}; unresolved classifications are counted
/// in their own row, never folded into either side.
pub fn good_fraction(
    j: u32,
    ps: &ParameterSet,
    spec: &ProblemSpec,
    y_side: bool,
    trials: u64,
    seed: u64,
) -> Result<ExperimentResult> {
    if trials == 0 {
        return Err(contract("trials must be positive"));
    }
    let status = level0_status(ps, spec, y_side)?;
    let status_of = |s: Symbol| -> SubStatus {
        status
            .rows
            .iter()
            .find(|(sym, _, _)| *sym == s)
            .map(|(_, st, _)| *st)
            .unwrap_or(SubStatus::Unknown)
    };
    let semibad_other: Vec<Symbol> = level0_status(ps, spec, !y_side)?
        .rows
        .iter()
        .filter(|(_, st, _)| *st == SubStatus::SemiBad)
        .map(|(s, _, _)| *s)
        .collect();
    let (mut good, mut unknown) = (0u64, 0u64);
    for t in 0..trials {
        let mut rng = rng_stream(seed, t);
        let chars = sample_block_chars(j, ps, spec, y_side, &mut rng)?;
        if chars.iter().any(|&c| status_of(c) == SubStatus::Unknown) {
            unknown += 1;
            continue;
        }
        let is_good = match j {
            0 => status_of(chars[0]) == SubStatus::Good,
            1 => level1_is_good(&chars, &|s| status_of(s), &semibad_other, spec, y_side, ps)?,
            _ => return Err(resource("good classification is implemented for levels 0 and 1")),
        };
        if is_good {
            good += 1;
        }
    }
    let lj = l_as_usize(&scales(ps, j)?)? as f64;
    let rows = vec![
        ci_row("good".into(), good, trials, Some(1.0 - lj.powi(-(ps.delta as i32)))),
        ci_row("unknown".into(), unknown, trials, None),
    ];
    Ok(ExperimentResult {
        descriptor: Descriptor {
            name: "good_fraction".into(),
            params: vec![
                ("level".into(), j.to_string()),
                ("spec".into(), spec.name.clone()),
                ("side".into(), (if y_side { "y" } else { "x" }).to_string()),
            ],
            seed,
            trials,
        },
        rows,
    })
}

/// P(a Bernoulli(1/2) prefix of length n M-embeds into an independent
/// prefix of length M n), one row per (M, n).  All cells of one trial share
/// the same underlying bits, so the estimates are exactly nondecreasing in
/// M at fixed n.
pub fn minimal_m_curve(
    n_grid: &[usize],
    m_grid: &[usize],
    trials: u64,
    seed: u64,
) -> Result<ExperimentResult> {
    if trials == 0 || n_grid.is_empty() || m_grid.is_empty() {
        return Err(contract("trials and both grids must be non-empty"));
    }
    if m_grid.contains(&0) {
        return Err(contract("M must be positive"));
    }
    let n_max = *n_grid.iter().max().unwrap();
    let m_max = *m_grid.iter().max().unwrap();
    let mut hits = vec![0u64; m_grid.len() * n_grid.len()];
    for t in 0..trials {
        let mut rng = rng_stream(seed, t);
        let x: Vec<u8> = (0..n_max).map(|_| u8::from(rng.gen_bool(0.5))).collect();
        let y: Vec<u8> = (0..m_max * n_max).map(|_| u8::from(rng.gen_bool(0.5))).collect();
        for (mi, &m) in m_grid.iter().enumerate() {
            for (ni, &n) in n_grid.iter().enumerate() {
                if lipschitz_embed_greedy(&x[..n], &y[..m * n], m, m).is_some() {
                    hits[mi * n_grid.len() + ni] += 1;
                }
            }
        }
    }
    let mut rows = Vec::new();
    for (mi, &m) in m_grid.iter().enumerate() {
        for (ni, &n) in n_grid.iter().enumerate() {
            // M = n = 1: embeds iff the single bits match, exactly 1/2
            let rf = (m == 1 && n == 1).then_some(0.5);
            rows.push(ci_row(format!("M={m};n={n}"), hits[mi * n_grid.len() + ni], trials, rf));
        }
    }
    Ok(ExperimentResult {
        descriptor: Descriptor {
            name: "minimal_m_curve".into(),
            params: vec![
                ("n_grid".into(), format!("{n_grid:?}")),
                ("m_grid".into(), format!("{m_grid:?}")),
            ],
            seed,
            trials,
        },
        rows,
    })
}

/// P(two independent length-n Bernoulli(q) sequences are compatible), one
/// row per q.  Trials share uniform draws across the grid (bits are
/// thresholded at q), which couples the rows.
pub fn compatibility_q_curve(
    q_grid: &[f64],
    n: usize,
    trials: u64,
    seed: u64,
) -> Result<ExperimentResult> {
    if trials == 0 || n == 0 || q_grid.is_empty() {
        return Err(contract("trials, n and the grid must be non-empty"));
    }
    if q_grid.iter().any(|&q| !(0.0..=1.0).contains(&q)) {
        return Err(contract("q must lie in [0, 1]"));
    }
    let mut hits = vec![0u64; q_grid.len()];
    for t in 0..trials {
        let mut rng = rng_stream(seed, t);
        let ux: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        let uy: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        for (qi, &q) in q_grid.iter().enumerate() {
            let x: Vec<u8> = ux.iter().map(|&u| u8::from(u < q)).collect();
            let y: Vec<u8> = uy.iter().map(|&u| u8::from(u < q)).collect();
            if compatible_decide(&x, &y).is_some() {
                hits[qi] += 1;
            }
        }
    }
    let rows = q_grid
        .iter()
        .enumerate()
        .map(|(qi, &q)| {
            let rf = if q == 0.0 {
                Some(1.0)
            } else if q == 1.0 {
                Some(0.0)
            } else {
                None
            };
            ci_row(format!("q={q}"), hits[qi], trials, rf)
        })
        .collect();
    Ok(ExperimentResult {
        descriptor: Descriptor {
            name: "compatibility_q_curve".into(),
            params: vec![("n".into(), n.to_string()), ("q_grid".into(), format!("{q_grid:?}"))],
            seed,
            trials,
        },
        rows,
    })
}
