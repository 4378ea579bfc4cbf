//! Command-line entry point.  Exit status: 0 = yes/success, 1 = definite
//! no, 2 = error.  Every subcommand takes `--format text|json`; output goes
//! to stdout or `--out`.

use clap::{Args, Parser, Subcommand, ValueEnum};
use seqembed::classify::EnumCaps;
use seqembed::construct::{
    catalog_cached, classify_block, deterministic_sequence, list_level_catalog, BlockClass,
    CatalogCaps,
};
use seqembed::deciders::{compatible_decide, lipschitz_embed_greedy, rough_iso_search};
use seqembed::error::{contract, Error, Result};
use seqembed::experiments::{
    compatibility_q_curve, good_fraction, length_moment, minimal_m_curve, sample_block_chars,
    tail_curve, ExperimentResult,
};
use seqembed::params::{profile, rng_stream, validate_parameters, ParameterSet, Rat};
use seqembed::problem::{compatible_spec, lipschitz_spec, roughiso_spec, ProblemSpec, Symbol};
use seqembed::rembed::{rembed_decide, seq_oracles, DEFAULT_WORK_CAP};
use seqembed::store::Store;
use serde_json::json;

#[derive(Parser)]
#[command(name = "seqembed", version, about = "Deciders, block catalogs and experiments for flexible sequence embeddings")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Side {
    X,
    Y,
}

#[derive(Args)]
struct Common {
    /// output format
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// write output here instead of stdout
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

#[derive(Args)]
struct SpecArgs {
    /// parameter profile: paper, micro, micro2, micro2-r2, micro7
    #[arg(long, default_value = "micro")]
    profile: String,
    /// problem spec: compatible:q=NUM, lipschitz:m0=N, roughiso:m0=N,trunc=N
    #[arg(long)]
    spec: String,
    /// which side's blocks
    #[arg(long, value_enum, default_value = "x")]
    side: Side,
}

#[derive(Args)]
struct CapsArgs {
    /// unenumerated-mass target for block laws (rational, e.g. 1/1024)
    #[arg(long)]
    epsilon: Option<String>,
    /// largest geometric overshoot T enumerated
    #[arg(long)]
    t_cap: Option<u64>,
    /// most bad sub-blocks per enumerated word
    #[arg(long)]
    max_bad: Option<usize>,
    /// embedding decisions allowed for level-1 semi-bad certification
    #[arg(long)]
    semibad_budget: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// M-Lipschitz bit embedding (leftmost map)
    Embed {
        #[command(flatten)]
        common: Common,
        /// bit sequence, inline (e.g. 0101) or a file path
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long, short = 'M')]
        m: usize,
        /// bound on the first image position (default M)
        #[arg(long)]
        first_max: Option<usize>,
    },
    /// compatibility of two bit sequences after zero deletions
    Compatible {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
    },
    /// rough isometry search between integer point sets
    Roughiso {
        #[command(flatten)]
        common: Common,
        /// integer points, comma or space separated
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long, short = 'M')]
        m: String,
        #[arg(long, short = 'D')]
        d: String,
        #[arg(long, short = 'C')]
        c: String,
        /// search weakly increasing assignments only
        #[arg(long)]
        monotone_only: bool,
    },
    /// character-level step embedding under a problem spec
    Rembed {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
    },
    /// sample block character expansions at a level
    Sample {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        level: u32,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = "1")]
        count: u64,
    },
    /// classify one block's character expansion
    Classify {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        level: u32,
        /// block characters, inline or a file path
        #[arg(long)]
        chars: String,
    },
    /// list the good/semi-bad catalog at a level
    Catalog {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        caps: CapsArgs,
        #[arg(long)]
        level: u32,
        /// cache directory (or SEQEMBED_STORE)
        #[arg(long)]
        store: Option<std::path::PathBuf>,
    },
    /// emit the deterministic sequence good at every level up to --level
    Construct {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        caps: CapsArgs,
        #[arg(long)]
        level: u32,
    },
    /// seeded Monte Carlo experiments (CSV output)
    #[command(subcommand)]
    Experiment(ExpCmd),
    /// check a parameter set against the published constraints
    ValidateParams {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        profile: Option<String>,
        /// seven explicit values: alpha delta beta m k0 r l0
        #[arg(long, num_args = 7, value_names = ["ALPHA", "DELTA", "BETA", "M", "K0", "R", "L0"])]
        values: Option<Vec<u64>>,
    },
}

#[derive(Subcommand)]
enum ExpCmd {
    /// empirical tail of the embedding probability S_j
    TailCurve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        level: u32,
        #[arg(long)]
        trials: u64,
        #[arg(long, value_delimiter = ',')]
        p_grid: Vec<f64>,
        #[arg(long, default_value = "100")]
        inner_trials: u64,
        #[arg(long)]
        seed: u64,
    },
    /// exponential length moment of a block
    LengthMoment {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        level: u32,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
    },
    /// fraction of sampled blocks classified good
    GoodFraction {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        level: u32,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
    },
    /// P(n-prefix M-embeds into an Mn-prefix) over an (n, M) grid
    MinimalM {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
        #[arg(long, short = 'M', value_delimiter = ',')]
        m: Vec<usize>,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
    },
    /// P(two Bernoulli(q) prefixes are compatible) over a q grid
    CompatibilityQ {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        q: Vec<f64>,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
    },
}

fn read_inline_or_file(s: &str) -> Result<String> {
    let p = std::path::Path::new(s);
    if p.is_file() {
        Ok(std::fs::read_to_string(p)?)
    } else {
        Ok(s.to_string())
    }
}

/// Bits: unseparated 01 strings or whitespace/comma-separated tokens.
fn parse_bits(s: &str) -> Result<Vec<u8>> {
    let body = read_inline_or_file(s)?;
    let toks: Vec<&str> = body.split([' ', '\t', '\n', ',']).filter(|t| !t.is_empty()).collect();
    let flat: Vec<char> = if toks.len() == 1 { toks[0].chars().collect() } else { Vec::new() };
    let parse_tok = |t: &str| -> Result<u8> {
        match t {
            "0" => Ok(0),
            "1" => Ok(1),
            _ => Err(Error::Parse(format!("bit token `{t}` is not 0 or 1"))),
        }
    };
    if !flat.is_empty() && flat.len() > 1 {
        flat.iter().map(|c| parse_tok(&c.to_string())).collect()
    } else {
        toks.iter().map(|t| parse_tok(t)).collect()
    }
}

/// Symbols: whitespace/comma-separated indices; a lone unseparated 01
/// string is read bitwise.
fn parse_symbols(s: &str) -> Result<Vec<Symbol>> {
    let body = read_inline_or_file(s)?;
    let toks: Vec<&str> = body.split([' ', '\t', '\n', ',']).filter(|t| !t.is_empty()).collect();
    if toks.len() == 1 && toks[0].len() > 1 && toks[0].chars().all(|c| c == '0' || c == '1') {
        return Ok(toks[0].chars().map(|c| (c == '1') as Symbol).collect());
    }
    toks.iter()
        .map(|t| t.parse::<Symbol>().map_err(|_| Error::Parse(format!("symbol `{t}` is not an index"))))
        .collect()
}

fn parse_points(s: &str) -> Result<Vec<i64>> {
    let body = read_inline_or_file(s)?;
    body.split([' ', '\t', '\n', ','])
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<i64>().map_err(|_| Error::Parse(format!("point `{t}` is not an integer"))))
        .collect()
}

/// Rationals as `a/b` or an integer.
fn parse_rat(s: &str) -> Result<Rat> {
    let err = || Error::Parse(format!("`{s}` is not a rational (use a/b or an integer)"));
    if let Some((a, b)) = s.split_once('/') {
        let a: i64 = a.trim().parse().map_err(|_| err())?;
        let b: i64 = b.trim().parse().map_err(|_| err())?;
        if b == 0 {
            return Err(err());
        }
        Ok(Rat::new(a.into(), b.into()))
    } else {
        let a: i64 = s.trim().parse().map_err(|_| err())?;
        Ok(Rat::from_integer(a.into()))
    }
}

/// `compatible:q=1/100`, `lipschitz:m0=8`, `roughiso:m0=2,trunc=8`
fn parse_spec(s: &str, r: u64) -> Result<ProblemSpec> {
    let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
    let mut kv = std::collections::BTreeMap::new();
    for part in rest.split(',').filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("spec field `{part}` is not key=value")))?;
        kv.insert(k.trim().to_string(), v.trim().to_string());
    }
    let get = |k: &str| -> Result<&String> {
        kv.get(k).ok_or_else(|| Error::Parse(format!("spec `{kind}` needs `{k}=`")))
    };
    let int = |v: &str| -> Result<u32> {
        v.parse().map_err(|_| Error::Parse(format!("`{v}` is not an integer")))
    };
    match kind {
        "compatible" => compatible_spec(parse_rat(get("q")?)?),
        "lipschitz" => lipschitz_spec(int(get("m0")?)?, r),
        "roughiso" => roughiso_spec(int(get("m0")?)?, int(get("trunc")?)?),
        _ => Err(Error::Parse(format!(
            "unknown spec `{kind}` (expected compatible, lipschitz or roughiso)"
        ))),
    }
}

fn load_profile(name: &str) -> Result<ParameterSet> {
    profile(name).ok_or_else(|| contract(format!("unknown profile `{name}`")))
}

fn build_caps(args: &CapsArgs) -> Result<CatalogCaps> {
    let mut caps = CatalogCaps::default();
    if let Some(e) = &args.epsilon {
        caps.epsilon = parse_rat(e)?;
    }
    caps.enum_caps = EnumCaps {
        t_cap: args.t_cap.or(caps.enum_caps.t_cap),
        max_bad: args.max_bad.unwrap_or(caps.enum_caps.max_bad),
        ..caps.enum_caps
    };
    if let Some(b) = args.semibad_budget {
        caps.semibad_budget = b;
    }
    Ok(caps)
}

fn emit(common: &Common, text: String) -> Result<()> {
    match &common.out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn emit_experiment(common: &Common, r: &ExperimentResult) -> Result<i32> {
    let text = match common.format {
        Format::Text => r.to_csv(),
        Format::Json => format!("{}\n", serde_json::to_string_pretty(r)?),
    };
    emit(common, text)?;
    // CSV always travels with its descriptor sidecar
    if let (Some(p), Format::Text) = (&common.out, common.format) {
        let mut side = p.as_os_str().to_owned();
        side.push(".desc");
        std::fs::write(side, r.descriptor_text())?;
    }
    Ok(0)
}

fn seq_text(chars: &[Symbol]) -> String {
    chars.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")
}

fn run() -> Result<i32> {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Embed { common, x, y, m, first_max } => {
            let (xb, yb) = (parse_bits(&x)?, parse_bits(&y)?);
            let fm = first_max.unwrap_or(m);
            match lipschitz_embed_greedy(&xb, &yb, m, fm) {
                Some(map) => {
                    let phi1: Vec<usize> = map.phi.iter().map(|p| p + 1).collect();
                    let text = match common.format {
                        Format::Text => format!("phi={phi1:?}\n"),
                        Format::Json => format!("{}\n", json!({"embeds": true, "phi": phi1})),
                    };
                    emit(&common, text)?;
                    Ok(0)
                }
                None => {
                    let text = match common.format {
                        Format::Text => "no embedding\n".to_string(),
                        Format::Json => format!("{}\n", json!({"embeds": false})),
                    };
                    emit(&common, text)?;
                    Ok(1)
                }
            }
        }
        Cmd::Compatible { common, x, y } => {
            let (xb, yb) = (parse_bits(&x)?, parse_bits(&y)?);
            match compatible_decide(&xb, &yb) {
                Some(d) => {
                    let text = match common.format {
                        Format::Text => format!(
                            "compatible: delete x{:?} y{:?}\n",
                            d.from_x, d.from_y
                        ),
                        Format::Json => format!(
                            "{}\n",
                            json!({"compatible": true, "from_x": d.from_x, "from_y": d.from_y})
                        ),
                    };
                    emit(&common, text)?;
                    Ok(0)
                }
                None => {
                    let text = match common.format {
                        Format::Text => "incompatible\n".to_string(),
                        Format::Json => format!("{}\n", json!({"compatible": false})),
                    };
                    emit(&common, text)?;
                    Ok(1)
                }
            }
        }
        Cmd::Roughiso { common, a, b, m, d, c, monotone_only } => {
            let (pa, pb) = (parse_points(&a)?, parse_points(&b)?);
            let map = rough_iso_search(&pa, &pb, parse_rat(&m)?, parse_rat(&d)?, parse_rat(&c)?, monotone_only)?;
            match map {
                Some(t) => {
                    let text = match common.format {
                        Format::Text => format!("rough isometry: image={:?}\n", t.image),
                        Format::Json => format!("{}\n", json!({"found": true, "image": t.image})),
                    };
                    emit(&common, text)?;
                    Ok(0)
                }
                None => {
                    let text = match common.format {
                        Format::Text => "no rough isometry\n".to_string(),
                        Format::Json => format!("{}\n", json!({"found": false})),
                    };
                    emit(&common, text)?;
                    Ok(1)
                }
            }
        }
        Cmd::Rembed { common, spec, x, y } => {
            let ps = load_profile(&spec.profile)?;
            let sp = parse_spec(&spec.spec, ps.r)?;
            let (xs, ys) = (parse_symbols(&x)?, parse_symbols(&y)?);
            let w = seq_oracles(&sp, ps.r).with(|o| rembed_decide(&xs, &ys, o, DEFAULT_WORK_CAP))?;
            match w {
                Some(w) => {
                    let text = match common.format {
                        Format::Text => format!("embeds: i={:?} ip={:?}\n", w.i_seq, w.ip_seq),
                        Format::Json => format!(
                            "{}\n",
                            json!({"embeds": true, "i_seq": w.i_seq, "ip_seq": w.ip_seq})
                        ),
                    };
                    emit(&common, text)?;
                    Ok(0)
                }
                None => {
                    let text = match common.format {
                        Format::Text => "no embedding\n".to_string(),
                        Format::Json => format!("{}\n", json!({"embeds": false})),
                    };
                    emit(&common, text)?;
                    Ok(1)
                }
            }
        }
        Cmd::Sample { common, spec, level, seed, count } => {
            let ps = load_profile(&spec.profile)?;
            let sp = parse_spec(&spec.spec, ps.r)?;
            let y_side = matches!(spec.side, Side::Y);
            let mut lines = Vec::new();
            for t in 0..count {
                let mut rng = rng_stream(seed, t);
                let chars = sample_block_chars(level, &ps, &sp, y_side, &mut rng)?;
                lines.push(chars);
            }
            let text = match common.format {
                Format::Text => lines.iter().map(|c| seq_text(c) + "\n").collect(),
                Format::Json => format!("{}\n", json!({"blocks": lines})),
            };
            emit(&common, text)?;
            Ok(0)
        }
        Cmd::Classify { common, spec, level, chars } => {
            let ps = load_profile(&spec.profile)?;
            let sp = parse_spec(&spec.spec, ps.r)?;
            let y_side = matches!(spec.side, Side::Y);
            let cs = parse_symbols(&chars)?;
            let class = classify_block(&cs, level, &ps, &sp, y_side)?;
            let name = match class {
                BlockClass::Good => "good",
                BlockClass::SemiBad => "semibad",
                BlockClass::Bad => "bad",
                BlockClass::Unknown => "unknown",
            };
            let text = match common.format {
                Format::Text => format!("{name}\n"),
                Format::Json => format!("{}\n", json!({"class": name})),
            };
            emit(&common, text)?;
            Ok(match class {
                BlockClass::Good => 0,
                BlockClass::Unknown => 2,
                _ => 1,
            })
        }
        Cmd::Catalog { common, spec, caps, level, store } => {
            let ps = load_profile(&spec.profile)?;
            let sp = parse_spec(&spec.spec, ps.r)?;
            let y_side = matches!(spec.side, Side::Y);
            let caps = build_caps(&caps)?;
            let root = store.or_else(|| std::env::var_os("SEQEMBED_STORE").map(Into::into));
            let cat = match root {
                Some(root) => catalog_cached(&Store::open(root)?, level, &ps, &sp, y_side, &caps)?,
                None => list_level_catalog(level, &ps, &sp, y_side, &caps)?,
            };
            let text = match common.format {
                Format::Text => {
                    let mut s = format!(
                        "level {} side {} complete {}\n",
                        cat.level,
                        if cat.y_side { "y" } else { "x" },
                        cat.complete
                    );
                    for b in &cat.good {
                        s.push_str(&format!("good p={} : {}\n", b.prob, seq_text(&b.chars)));
                    }
                    for b in &cat.semibad {
                        s.push_str(&format!("semibad p={} : {}\n", b.prob, seq_text(&b.chars)));
                    }
                    s
                }
                Format::Json => format!("{}\n", serde_json::to_string_pretty(&cat)?),
            };
            emit(&common, text)?;
            Ok(0)
        }
        Cmd::Construct { common, spec, caps, level } => {
            let ps = load_profile(&spec.profile)?;
            let sp = parse_spec(&spec.spec, ps.r)?;
            let y_side = matches!(spec.side, Side::Y);
            let caps = build_caps(&caps)?;
            let seq = deterministic_sequence(level, &ps, &sp, y_side, &caps)?;
            let text = match common.format {
                Format::Text => seq_text(&seq) + "\n",
                Format::Json => format!("{}\n", json!({"chars": seq})),
            };
            emit(&common, text)?;
            Ok(0)
        }
        Cmd::Experiment(exp) => match exp {
            ExpCmd::TailCurve { common, spec, level, trials, p_grid, inner_trials, seed } => {
                let ps = load_profile(&spec.profile)?;
                let sp = parse_spec(&spec.spec, ps.r)?;
                let r = tail_curve(level, &ps, &sp, trials, &p_grid, inner_trials, seed)?;
                emit_experiment(&common, &r)
            }
            ExpCmd::LengthMoment { common, spec, level, trials, seed } => {
                let ps = load_profile(&spec.profile)?;
                let sp = parse_spec(&spec.spec, ps.r)?;
                let r = length_moment(level, &ps, &sp, trials, seed)?;
                emit_experiment(&common, &r)
            }
            ExpCmd::GoodFraction { common, spec, level, trials, seed } => {
                let ps = load_profile(&spec.profile)?;
                let sp = parse_spec(&spec.spec, ps.r)?;
                let y_side = matches!(spec.side, Side::Y);
                let r = good_fraction(level, &ps, &sp, y_side, trials, seed)?;
                emit_experiment(&common, &r)
            }
            ExpCmd::MinimalM { common, n, m, trials, seed } => {
                let r = minimal_m_curve(&n, &m, trials, seed)?;
                emit_experiment(&common, &r)
            }
            ExpCmd::CompatibilityQ { common, q, n, trials, seed } => {
                let r = compatibility_q_curve(&q, n, trials, seed)?;
                emit_experiment(&common, &r)
            }
        },
        Cmd::ValidateParams { common, profile: prof, values } => {
            let report = match (prof, values) {
                (Some(name), None) => load_profile(&name)?.validate(),
                (None, Some(v)) if v.len() == 7 => {
                    validate_parameters(v[0], v[1], v[2], v[3], v[4], v[5], v[6])
                }
                _ => {
                    return Err(contract(
                        "pass either --profile NAME or --values with seven numbers",
                    ))
                }
            };
            let text = match common.format {
                Format::Text => {
                    let mut s = String::new();
                    for c in &report.checks {
                        s.push_str(&format!("{} {}\n", if c.pass { "ok  " } else { "FAIL" }, c.name));
                    }
                    s.push_str(&format!("conforming: {}\n", report.conforming));
                    s
                }
                Format::Json => format!("{}\n", serde_json::to_string_pretty(&report)?),
            };
            emit(&common, text)?;
            Ok(if report.conforming { 0 } else { 1 })
        }
    }
}

fn main() {
    match run() {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
}
