//! The two-sequence step-embedding decider, verifier, witness search and a
//! brute-force reference.
//!
//! Both index sequences start at 0 and advance by steps of two kinds:
//! * a paired step advances both sides by 1 and requires the two exposed
//!   items to be related, or
//! * a jump advances one side by exactly `r0` and the other by any amount in
//!   `[r0_minus, r0_plus]`, and requires every item consumed on both sides
//!   to be good.
//!
//! The same machinery is reused at every scale: at character level the items
//! are symbols and `r0 = 2R`, at block level the items are level-j blocks
//! and the step constants are `(R_j, R_j^-, R_j^+)`.

use crate::error::{contract, resource, Result};

/// Oracles and step constants for one decision problem.
pub struct EmbedOracles<'a, X: ?Sized, Y: ?Sized> {
    pub pair: &'a dyn Fn(&X, &Y) -> bool,
    pub good_x: &'a dyn Fn(&X) -> bool,
    pub good_y: &'a dyn Fn(&Y) -> bool,
    pub r0: usize,
    pub r0_minus: usize,
    pub r0_plus: usize,
}

impl<'a, X: ?Sized, Y: ?Sized> EmbedOracles<'a, X, Y> {
    fn check(&self) -> Result<()> {
        if self.r0 == 0 || self.r0_minus == 0 || self.r0_minus > self.r0_plus {
            return Err(contract("need r0 >= 1 and 1 <= r0_minus <= r0_plus"));
        }
        Ok(())
    }
}

/// The two cumulative index sequences of a witness, both starting at 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbedWitness {
    pub i_seq: Vec<usize>,
    pub ip_seq: Vec<usize>,
}

impl EmbedWitness {
    pub fn steps(&self) -> usize {
        self.i_seq.len().saturating_sub(1)
    }
}

pub const DEFAULT_WORK_CAP: usize = 1_000_000_000;

fn good_prefix<T>(items: &[T], good: &dyn Fn(&T) -> bool) -> Vec<usize> {
    let mut acc = Vec::with_capacity(items.len() + 1);
    acc.push(0);
    for it in items {
        acc.push(acc.last().unwrap() + usize::from(good(it)));
    }
    acc
}

fn all_good(prefix: &[usize], lo: usize, hi: usize) -> bool {
    prefix[hi] - prefix[lo] == hi - lo
}

/// Decides embeddability and, when it holds, returns the lexicographically
/// smallest witness under the step order: paired, then X-jump with the
/// smaller opposite width first, then Y-jump likewise.
pub fn rembed_decide<X, Y>(
    xs: &[X],
    ys: &[Y],
    o: &EmbedOracles<X, Y>,
    work_cap: usize,
) -> Result<Option<EmbedWitness>> {
    o.check()?;
    let (n, np) = (xs.len(), ys.len());
    let work = (n + 1)
        .checked_mul(np + 1)
        .and_then(|c| c.checked_mul(2 * (o.r0_plus - o.r0_minus + 1) + 1))
        .ok_or_else(|| resource("work estimate overflows"))?;
    if work > work_cap {
        return Err(resource(format!("decider work {work} exceeds cap {work_cap}")));
    }
    let gx = good_prefix(xs, o.good_x);
    let gy = good_prefix(ys, o.good_y);
    // can[a][b]: some admissible step sequence leads from (a, b) to (n, np)
    let w = np + 1;
    let mut can = vec![false; (n + 1) * w];
    can[n * w + np] = true;
    for a in (0..=n).rev() {
        for b in (0..=np).rev() {
            if a == n && b == np {
                continue;
            }
            let mut ok = false;
            if a < n && b < np && can[(a + 1) * w + b + 1] && (o.pair)(&xs[a], &ys[b]) {
                ok = true;
            }
            if !ok && a + o.r0 <= n && all_good(&gx, a, a + o.r0) {
                for t in o.r0_minus..=o.r0_plus {
                    if b + t <= np && can[(a + o.r0) * w + b + t] && all_good(&gy, b, b + t) {
                        ok = true;
                        break;
                    }
                }
            }
            if !ok && b + o.r0 <= np && all_good(&gy, b, b + o.r0) {
                for t in o.r0_minus..=o.r0_plus {
                    if a + t <= n && can[(a + t) * w + b + o.r0] && all_good(&gx, a, a + t) {
                        ok = true;
                        break;
                    }
                }
            }
            can[a * w + b] = ok;
        }
    }
    if !can[0] {
        return Ok(None);
    }
    // walk forward, smallest step first, through states that can still finish
    let (mut a, mut b) = (0usize, 0usize);
    let mut i_seq = vec![0usize];
    let mut ip_seq = vec![0usize];
    while (a, b) != (n, np) {
        let mut stepped = false;
        if a < n && b < np && can[(a + 1) * w + b + 1] && (o.pair)(&xs[a], &ys[b]) {
            a += 1;
            b += 1;
            stepped = true;
        }
        if !stepped && a + o.r0 <= n && all_good(&gx, a, a + o.r0) {
            for t in o.r0_minus..=o.r0_plus {
                if b + t <= np && can[(a + o.r0) * w + b + t] && all_good(&gy, b, b + t) {
                    a += o.r0;
                    b += t;
                    stepped = true;
                    break;
                }
            }
        }
        if !stepped && b + o.r0 <= np && all_good(&gy, b, b + o.r0) {
            for t in o.r0_minus..=o.r0_plus {
                if a + t <= n && can[(a + t) * w + b + o.r0] && all_good(&gx, a, a + t) {
                    a += t;
                    b += o.r0;
                    stepped = true;
                    break;
                }
            }
        }
        if !stepped {
            unreachable!("forward walk left the co-reachable set");
        }
        i_seq.push(a);
        ip_seq.push(b);
    }
    Ok(Some(EmbedWitness { i_seq, ip_seq }))
}

/// Checks a claimed witness step by step.
pub fn rembed_verify<X, Y>(xs: &[X], ys: &[Y], w: &EmbedWitness, o: &EmbedOracles<X, Y>) -> bool {
    if o.check().is_err() {
        return false;
    }
    let (n, np) = (xs.len(), ys.len());
    if w.i_seq.len() != w.ip_seq.len() || w.i_seq.is_empty() {
        return false;
    }
    if w.i_seq[0] != 0 || w.ip_seq[0] != 0 {
        return false;
    }
    if *w.i_seq.last().unwrap() != n || *w.ip_seq.last().unwrap() != np {
        return false;
    }
    for r in 1..w.i_seq.len() {
        let (a0, a1) = (w.i_seq[r - 1], w.i_seq[r]);
        let (b0, b1) = (w.ip_seq[r - 1], w.ip_seq[r]);
        if a1 <= a0 || b1 <= b0 || a1 > n || b1 > np {
            return false;
        }
        let (da, db) = (a1 - a0, b1 - b0);
        let paired = da == 1 && db == 1 && (o.pair)(&xs[a0], &ys[b0]);
        if paired {
            continue;
        }
        let x_jump = da == o.r0 && (o.r0_minus..=o.r0_plus).contains(&db);
        let y_jump = db == o.r0 && (o.r0_minus..=o.r0_plus).contains(&da);
        if !(x_jump || y_jump) {
            return false;
        }
        if !xs[a0..a1].iter().all(|x| (o.good_x)(x)) {
            return false;
        }
        if !ys[b0..b1].iter().all(|y| (o.good_y)(y)) {
            return false;
        }
    }
    true
}

const BRUTE_MAX: usize = 12;

/// Exhaustive reference decider: enumerates every step sequence.
pub fn rembed_bruteforce<X, Y>(xs: &[X], ys: &[Y], o: &EmbedOracles<X, Y>) -> Result<bool> {
    o.check()?;
    if xs.len() > BRUTE_MAX || ys.len() > BRUTE_MAX {
        return Err(resource(format!("brute-force decider is capped at length {BRUTE_MAX}")));
    }
    let gx = good_prefix(xs, o.good_x);
    let gy = good_prefix(ys, o.good_y);
    fn go<X, Y>(
        a: usize,
        b: usize,
        xs: &[X],
        ys: &[Y],
        gx: &[usize],
        gy: &[usize],
        o: &EmbedOracles<X, Y>,
    ) -> bool {
        let (n, np) = (xs.len(), ys.len());
        if a == n && b == np {
            return true;
        }
        if a < n && b < np && (o.pair)(&xs[a], &ys[b]) && go(a + 1, b + 1, xs, ys, gx, gy, o) {
            return true;
        }
        if a + o.r0 <= n && all_good(gx, a, a + o.r0) {
            for t in o.r0_minus..=o.r0_plus {
                if b + t <= np && all_good(gy, b, b + t) && go(a + o.r0, b + t, xs, ys, gx, gy, o) {
                    return true;
                }
            }
        }
        if b + o.r0 <= np && all_good(gy, b, b + o.r0) {
            for t in o.r0_minus..=o.r0_plus {
                if a + t <= n && all_good(gx, a, a + t) && go(a + t, b + o.r0, xs, ys, gx, gy, o) {
                    return true;
                }
            }
        }
        false
    }
    Ok(go(0, 0, xs, ys, &gx, &gy, o))
}

/// Character-level oracles for a problem specification at the base step
/// constants `(2R, 1, 3R^2)`.
pub fn seq_oracles(spec: &crate::problem::ProblemSpec, r: u64) -> SeqOracles<'_> {
    SeqOracles { spec, r }
}

/// Owned closure bundle for symbol sequences; borrow with `.oracles()`.
pub struct SeqOracles<'a> {
    spec: &'a crate::problem::ProblemSpec,
    r: u64,
}

impl<'a> SeqOracles<'a> {
    pub fn with<T>(&self, f: impl FnOnce(&EmbedOracles<'_, u32, u32>) -> T) -> T {
        let pair = |x: &u32, y: &u32| self.spec.related(*x, *y);
        let good_x = |x: &u32| self.spec.is_good_x(*x);
        let good_y = |y: &u32| self.spec.is_good_y(*y);
        let o = EmbedOracles {
            pair: &pair,
            good_x: &good_x,
            good_y: &good_y,
            r0: (2 * self.r) as usize,
            r0_minus: 1,
            r0_plus: (3 * self.r * self.r) as usize,
        };
        f(&o)
    }

    /// Character-level decision `x embeds in y`.
    pub fn embeds(&self, x: &[u32], y: &[u32]) -> Result<bool> {
        self.with(|o| rembed_decide(x, y, o, DEFAULT_WORK_CAP).map(|w| w.is_some()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::rat;
    use crate::problem::compatible_spec;
    use rand::Rng;

    #[allow(clippy::type_complexity)]
    fn compat_oracles() -> (
        impl Fn(&u32, &u32) -> bool,
        impl Fn(&u32) -> bool,
        impl Fn(&u32) -> bool,
    ) {
        (
            |x: &u32, y: &u32| !(*x == 1 && *y == 1),
            |x: &u32| *x == 0,
            |y: &u32| *y == 0,
        )
    }

    fn oracles<'a>(
        pair: &'a dyn Fn(&u32, &u32) -> bool,
        gx: &'a dyn Fn(&u32) -> bool,
        gy: &'a dyn Fn(&u32) -> bool,
    ) -> EmbedOracles<'a, u32, u32> {
        EmbedOracles { pair, good_x: gx, good_y: gy, r0: 2, r0_minus: 1, r0_plus: 3 }
    }

    #[test]
    fn empty_pair_embeds() {
        let (p, gx, gy) = compat_oracles();
        let o = oracles(&p, &gx, &gy);
        let w = rembed_decide::<u32, u32>(&[], &[], &o, DEFAULT_WORK_CAP).unwrap().unwrap();
        assert_eq!(w.steps(), 0);
        assert!(rembed_verify::<u32, u32>(&[], &[], &w, &o));
    }

    #[test]
    fn paired_only_instance() {
        let (p, gx, gy) = compat_oracles();
        let o = oracles(&p, &gx, &gy);
        let x = vec![1, 0, 1];
        let y = vec![0, 1, 0];
        let w = rembed_decide(&x, &y, &o, DEFAULT_WORK_CAP).unwrap().unwrap();
        assert!(rembed_verify(&x, &y, &w, &o));
        // all-ones against all-ones cannot pair and cannot jump
        assert!(rembed_decide(&[1, 1], &[1, 1], &o, DEFAULT_WORK_CAP).unwrap().is_none());
    }

    #[test]
    fn jump_stretches_good_runs() {
        let (p, gx, gy) = compat_oracles();
        let o = oracles(&p, &gx, &gy);
        // |x| = 2 all good embeds into |y| = 3 all good via one jump
        let w = rembed_decide(&[0, 0], &[0, 0, 0], &o, DEFAULT_WORK_CAP).unwrap().unwrap();
        assert!(rembed_verify(&[0, 0], &[0, 0, 0], &w, &o));
        // bad items on both sides leave no admissible jump
        assert!(rembed_decide(&[0, 1], &[0, 1, 1], &o, DEFAULT_WORK_CAP).unwrap().is_none());
    }

    #[test]
    fn witness_is_lexicographically_least() {
        let (p, gx, gy) = compat_oracles();
        let o = oracles(&p, &gx, &gy);
        // paired steps order before jumps, so the surplus is deferred to the
        // last possible step
        let x = vec![0, 0, 0, 0];
        let y = vec![0, 0, 0, 0, 0];
        let w = rembed_decide(&x, &y, &o, DEFAULT_WORK_CAP).unwrap().unwrap();
        assert_eq!(w.i_seq, vec![0, 1, 2, 3, 4]);
        assert_eq!(w.ip_seq, vec![0, 1, 2, 3, 5]);
    }

    #[test]
    fn verify_rejects_malformed() {
        let (p, gx, gy) = compat_oracles();
        let o = oracles(&p, &gx, &gy);
        let w = EmbedWitness { i_seq: vec![0, 2], ip_seq: vec![0, 2] };
        // jump of width (2,2) over good items is fine ...
        assert!(rembed_verify(&[0, 0], &[0, 0], &w, &o));
        // ... but not over a bad one
        assert!(!rembed_verify(&[0, 1], &[0, 0], &w, &o));
        // wrong endpoint
        assert!(!rembed_verify(&[0, 0, 0], &[0, 0], &w, &o));
    }

    #[test]
    fn decide_matches_bruteforce_randomly() {
        let mut rng = crate::params::rng_stream(11, 0);
        let spec = compatible_spec(rat(2, 5)).unwrap();
        let so = seq_oracles(&spec, 1);
        for _ in 0..300 {
            let n = rng.gen_range(0..=8);
            let np = rng.gen_range(0..=8);
            let x: Vec<u32> = (0..n).map(|_| rng.gen_range(0..2)).collect();
            let y: Vec<u32> = (0..np).map(|_| rng.gen_range(0..2)).collect();
            so.with(|o| {
                let fast = rembed_decide(&x, &y, o, DEFAULT_WORK_CAP).unwrap();
                let slow = rembed_bruteforce(&x, &y, o).unwrap();
                assert_eq!(fast.is_some(), slow, "x={x:?} y={y:?}");
                if let Some(w) = fast {
                    assert!(rembed_verify(&x, &y, &w, o));
                }
            });
        }
    }

    #[test]
    fn work_cap_enforced() {
        let (p, gx, gy) = compat_oracles();
        let o = oracles(&p, &gx, &gy);
        let x = vec![0u32; 100];
        let y = vec![0u32; 100];
        assert!(matches!(
            rembed_decide(&x, &y, &o, 10),
            Err(crate::error::Error::Resource(_))
        ));
    }
}
