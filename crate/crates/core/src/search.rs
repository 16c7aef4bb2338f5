//! Certified exhaustive search over the diagonal window.
//!
//! The search decides, for every integer vector in the window box, whether
//! the residual `|sum_i (x_i - theta_i)^k - tau|` is certifiably below the
//! tolerance, certifiably not below, or undecided at the precision cap. The
//! outcome is `Solutions`, `Empty`, or `Undecided` accordingly, always with
//! the minimum residual and its argmin.
//!
//! Two enumeration engines are provided: lexicographic depth-first search
//! with monotone partial-sum pruning (terms are strictly increasing in each
//! variable since `x_i >= 1 > theta_i`), and an optional meet-in-the-middle
//! route over sorted half sums. Both produce identical outcomes.
//!
//! Parallel runs partition the first variable's range; every job computes
//! the same values the sequential scan would, and results are merged in
//! canonical order, so serialized outcomes are byte-identical across modes.

use num_bigint::BigInt;
use serde::Serialize;
use thiserror::Error;

use crate::ball::{Ball, Rat, TriBool};
use crate::model::{BoundSpec, BoundValue, Instance, Precision, Window};
use crate::witness::WitnessError;
use crate::{run_jobs, Parallelism};

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("window radius is not certified positive")]
    NonPositiveRadius,
    #[error("tolerance eta is not certified positive")]
    NonPositiveEta,
    #[error("tau must be certified positive")]
    NonPositiveTau,
    #[error("window boundary undecided at precision cap ({undecided} integers)")]
    WindowUndecided { undecided: usize },
    #[error("window bounds exceed the supported coordinate range")]
    WindowTooLarge,
    #[error("window holds {estimate} candidates, over the budget of {budget}")]
    BudgetExceeded { estimate: BigInt, budget: u64 },
    #[error(transparent)]
    Ball(#[from] crate::ball::BallError),
    #[error(transparent)]
    Witness(#[from] WitnessError),
}

/// The target value: exact rational, or a rigorous enclosure of a real.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TauValue {
    Exact { value: Rat },
    Enclosure { ball: Ball },
}

impl TauValue {
    pub fn exact(value: Rat) -> Self {
        TauValue::Exact { value }
    }

    fn check_positive(&self) -> Result<(), SearchError> {
        let ok = match self {
            TauValue::Exact { value } => value.is_positive(),
            TauValue::Enclosure { ball } => ball.inf().is_positive(),
        };
        if ok {
            Ok(())
        } else {
            Err(SearchError::NonPositiveTau)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Auto,
    DepthFirst,
    MeetInMiddle,
}

/// Complete description of one window search.
#[derive(Debug, Clone)]
pub struct SearchSpec {
    pub inst: Instance,
    pub tau: TauValue,
    pub eta: BoundSpec,
    pub radius: BoundSpec,
    /// Base for `Pow` bound rules. `None` evaluates them against tau;
    /// phase sweeps substitute the witness index m.
    pub rule_base: Option<Rat>,
    pub prec: Precision,
    pub budget: u64,
    pub algorithm: Algorithm,
    pub parallelism: Parallelism,
    pub prune: bool,
}

impl SearchSpec {
    pub fn new(inst: Instance, tau: TauValue, eta: BoundSpec, radius: BoundSpec) -> Self {
        SearchSpec {
            inst,
            tau,
            eta,
            radius,
            rule_base: None,
            prec: Precision::default(),
            budget: 100_000_000,
            algorithm: Algorithm::Auto,
            parallelism: Parallelism::default(),
            prune: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Solutions,
    Empty,
    Undecided,
}

/// One evaluated candidate vector.
#[derive(Debug, Clone, Serialize)]
pub struct Candidate {
    pub x: Vec<i64>,
    pub residual: Ball,
    pub residual_exact: Option<Rat>,
    pub in_window: Vec<TriBool>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    pub enumerated: u64,
    pub pruned: u64,
    pub refinements: u64,
    pub boundary_undecided: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchOutcome {
    pub status: Status,
    pub solutions: Vec<Candidate>,
    pub undecided: Vec<Candidate>,
    pub min_residual: Option<Ball>,
    pub min_residual_exact: Option<Rat>,
    pub argmin: Option<Vec<i64>>,
    pub window: Window,
    pub stats: SearchStats,
}

/// Exact residual `|sum (x_i - theta_i)^k - tau|` (rational path).
pub fn residual_exact(inst: &Instance, x: &[i64], tau: &Rat) -> Rat {
    let mut sum = Rat::zero();
    for (xi, ti) in x.iter().zip(inst.theta()) {
        let d = &Rat::from_int(*xi) - ti;
        sum = &sum + &d.pow_i(inst.k() as i64);
    }
    (&sum - tau).abs()
}

/// Enclosure of the residual via ball arithmetic. Contains the exact value
/// whenever `tau` is exact.
pub fn residual_enclosure(inst: &Instance, x: &[i64], tau: &TauValue, prec: u32) -> Ball {
    let mut sum = Ball::from_int(0, prec);
    for (xi, ti) in x.iter().zip(inst.theta()) {
        let d = Ball::from_int(*xi, prec).sub(&Ball::from_rat(ti, prec));
        sum = sum.add(&d.pow_u(inst.k()));
    }
    let t = match tau {
        TauValue::Exact { value } => Ball::from_rat(value, prec),
        TauValue::Enclosure { ball } => ball.clone(),
    };
    sum.sub(&t).abs()
}

/// Build the integer window from enclosures of the center and radius,
/// refining until every boundary integer is decided or the cap is reached.
/// At the cap, up to four undecided integers per window are conservatively
/// included and flagged; more than that is reported as an error.
pub fn build_window(
    inst: &Instance,
    tau: &TauValue,
    radius: &BoundSpec,
    rule_base: Option<&Rat>,
    prec: &Precision,
) -> Result<(Window, u64), SearchError> {
    tau.check_positive()?;
    let mut refinements = 0u64;
    let mut fallback: Option<Result<Window, usize>> = None;
    for (level, p) in prec.ladder().enumerate() {
        if level > 0 {
            refinements += 1;
        }
        let center = center_ball(inst, tau, p)?;
        let rad_val = eval_bound(radius, tau, rule_base, p)?;
        match rad_val.positive() {
            TriBool::True => {}
            TriBool::False => return Err(SearchError::NonPositiveRadius),
            TriBool::Unknown => continue,
        }
        let rad_ball = rad_val.as_ball(p);
        match classify_window(inst, &center, &rad_ball) {
            Ok(w) if w.boundary.is_empty() => return Ok((w, refinements)),
            Ok(w) => fallback = Some(Ok(w)),
            Err(WindowIssue::TooLarge) => return Err(SearchError::WindowTooLarge),
            Err(WindowIssue::Undecided(n)) => fallback = Some(Err(n as usize)),
        }
    }
    match fallback {
        Some(Ok(w)) if w.boundary.len() <= 4 => Ok((w, refinements)),
        Some(Ok(w)) => Err(SearchError::WindowUndecided { undecided: w.boundary.len() }),
        Some(Err(n)) => Err(SearchError::WindowUndecided { undecided: n }),
        None => Err(SearchError::NonPositiveRadius),
    }
}

/// Window construction from pre-evaluated enclosures (no refinement
/// available). Used when the caller owns raw balls.
pub fn build_window_from_balls(
    inst: &Instance,
    center: &Ball,
    radius: &Ball,
) -> Result<Window, SearchError> {
    if !radius.inf().is_positive() {
        return Err(SearchError::NonPositiveRadius);
    }
    let w = match classify_window(inst, center, radius) {
        Ok(w) => w,
        Err(WindowIssue::TooLarge) => return Err(SearchError::WindowTooLarge),
        Err(WindowIssue::Undecided(n)) => {
            return Err(SearchError::WindowUndecided { undecided: n as usize })
        }
    };
    if w.boundary.len() > 4 {
        return Err(SearchError::WindowUndecided { undecided: w.boundary.len() });
    }
    Ok(w)
}

fn eval_bound(
    spec: &BoundSpec,
    tau: &TauValue,
    rule_base: Option<&Rat>,
    p: u32,
) -> Result<BoundValue, SearchError> {
    let v = match rule_base {
        Some(b) => spec.eval(b, p)?,
        None => match tau {
            TauValue::Exact { value } => spec.eval(value, p)?,
            TauValue::Enclosure { ball } => spec.eval_ball(ball, p)?,
        },
    };
    Ok(v)
}

fn center_ball(inst: &Instance, tau: &TauValue, p: u32) -> Result<Ball, SearchError> {
    let b = match tau {
        TauValue::Exact { value } => {
            let ratio = value / &inst.s_rat();
            Ball::from_rat(&ratio, p).root(inst.k(), p)?
        }
        TauValue::Enclosure { ball } => {
            ball.mul_rat(&inst.s_rat().recip()).root(inst.k(), p)?
        }
    };
    Ok(b)
}

enum WindowIssue {
    /// Too many boundary-undecided integers at this precision.
    Undecided(u64),
    /// Window bounds do not fit the candidate coordinate type.
    TooLarge,
}

fn classify_window(inst: &Instance, center: &Ball, radius: &Ball) -> Result<Window, WindowIssue> {
    let s = inst.s() as usize;
    let l = center.sub(radius);
    let u = center.add(radius);
    // potential candidates: integers x with x > inf(l) and x < sup(u)
    let lo_enum = (l.inf().floor_bigint() + BigInt::from(1)).max(BigInt::from(1));
    let hi_enum = u.sup().ceil_bigint() - 1;
    if lo_enum > hi_enum {
        return Ok(Window {
            lo: vec![1; s],
            hi: vec![0; s],
            boundary: Vec::new(),
            center: center.clone(),
            radius: radius.clone(),
        });
    }
    let (Ok(lo), Ok(hi)) = (i64::try_from(&lo_enum), i64::try_from(&hi_enum)) else {
        return Err(WindowIssue::TooLarge);
    };
    // undecided near the lower edge: inf(l) < x <= sup(l)
    let lo_edge = match i64::try_from(&l.sup().floor_bigint()) {
        Ok(e) => e.min(hi),
        Err(_) => hi,
    };
    // undecided near the upper edge: inf(u) <= x < sup(u)
    let hi_edge = match i64::try_from(&u.inf().ceil_bigint()) {
        Ok(e) => e.max(lo),
        Err(_) => lo,
    };
    let count_lo = (lo_edge - lo + 1).max(0) as u64;
    let count_hi = (hi - hi_edge + 1).max(0) as u64;
    if count_lo + count_hi > 64 {
        return Err(WindowIssue::Undecided(count_lo + count_hi));
    }
    let mut boundary: Vec<i64> = (lo..=lo_edge).collect();
    for x in hi_edge..=hi {
        if !boundary.contains(&x) {
            boundary.push(x);
        }
    }
    boundary.sort_unstable();
    Ok(Window {
        lo: vec![lo; s],
        hi: vec![hi; s],
        boundary,
        center: center.clone(),
        radius: radius.clone(),
    })
}

/// Tolerance evaluated along the precision ladder; comparisons walk the
/// ladder until decided, counting refinements.
enum EtaEval {
    Exact(Rat),
    Ladder(Vec<(Rat, Rat)>),
}

impl EtaEval {
    fn build(
        eta: &BoundSpec,
        tau: &TauValue,
        rule_base: Option<&Rat>,
        prec: &Precision,
    ) -> Result<Self, SearchError> {
        let first = eval_bound(eta, tau, rule_base, prec.start)?;
        if let BoundValue::Exact(e) = first {
            if !e.is_positive() {
                return Err(SearchError::NonPositiveEta);
            }
            return Ok(EtaEval::Exact(e));
        }
        let mut levels = Vec::new();
        for p in prec.ladder() {
            let b = eval_bound(eta, tau, rule_base, p)?.as_ball(p);
            levels.push((b.inf_rat(), b.sup_rat()));
        }
        // positivity certified at the finest level
        let finest = &levels[levels.len() - 1];
        if !finest.0.is_positive() {
            return Err(SearchError::NonPositiveEta);
        }
        Ok(EtaEval::Ladder(levels))
    }

    /// Certified `r < eta`.
    fn cmp_residual(&self, r: &Rat, refinements: &mut u64) -> TriBool {
        match self {
            EtaEval::Exact(e) => TriBool::from_bool(r < e),
            EtaEval::Ladder(levels) => {
                for (i, (lo, hi)) in levels.iter().enumerate() {
                    if i > 0 {
                        *refinements += 1;
                    }
                    if r < lo {
                        return TriBool::True;
                    }
                    if r >= hi {
                        return TriBool::False;
                    }
                }
                TriBool::Unknown
            }
        }
    }
}

/// Total order key for min-residual tracking. For the exact route this is
/// the exact residual; for the enclosure route it is (mid, rad) of the
/// residual ball. Using a total order on representations makes the merge
/// independent of work partitioning.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
enum ResKey {
    Exact(Rat),
    Ball(crate::ball::Dyadic, crate::ball::Dyadic),
}

struct Best {
    key: ResKey,
    x: Vec<i64>,
    exact: Option<Rat>,
    ball: Ball,
}

impl Best {
    fn consider(slot: &mut Option<Best>, cand: Best) {
        let replace = match slot {
            None => true,
            Some(b) => (&cand.key, &cand.x) < (&b.key, &b.x),
        };
        if replace {
            *slot = Some(cand);
        }
    }
}

#[derive(Default)]
struct Partial {
    solutions: Vec<Candidate>,
    undecided: Vec<Candidate>,
    best: Option<Best>,
    stats: SearchStats,
}

impl Partial {
    fn merge(mut self, other: Partial) -> Partial {
        self.solutions.extend(other.solutions);
        self.undecided.extend(other.undecided);
        if let Some(b) = other.best {
            Best::consider(&mut self.best, b);
        }
        self.stats.enumerated += other.stats.enumerated;
        self.stats.pruned += other.stats.pruned;
        self.stats.refinements += other.stats.refinements;
        self.stats.boundary_undecided += other.stats.boundary_undecided;
        self
    }
}

/// Shared context for the exact-rational engines.
struct ExactCtx<'a> {
    inst: &'a Instance,
    tau: Rat,
    eta: EtaEval,
    window: &'a Window,
    terms: Vec<Vec<Rat>>,
    minsuf: Vec<Rat>,
    maxsuf: Vec<Rat>,
    prune: bool,
    prec: Precision,
}

impl<'a> ExactCtx<'a> {
    fn new(
        inst: &'a Instance,
        tau: Rat,
        eta: EtaEval,
        window: &'a Window,
        prune: bool,
        prec: Precision,
    ) -> Self {
        let s = inst.s() as usize;
        let (lo, hi) = (window.lo[0], window.hi[0]);
        let width = if lo > hi { 0 } else { (hi - lo + 1) as usize };
        let mut terms = Vec::with_capacity(s);
        for i in 0..s {
            let mut row = Vec::with_capacity(width);
            for v in lo..=hi {
                let d = &Rat::from_int(v) - &inst.theta()[i];
                row.push(d.pow_i(inst.k() as i64));
            }
            terms.push(row);
        }
        let mut minsuf = vec![Rat::zero(); s + 1];
        let mut maxsuf = vec![Rat::zero(); s + 1];
        for i in (0..s).rev() {
            if width > 0 {
                minsuf[i] = &minsuf[i + 1] + &terms[i][0];
                maxsuf[i] = &maxsuf[i + 1] + &terms[i][width - 1];
            }
        }
        ExactCtx { inst, tau, eta, window, terms, minsuf, maxsuf, prune, prec }
    }

    fn in_window_flags(&self, x: &[i64]) -> Vec<TriBool> {
        x.iter().map(|v| self.window.membership(*v)).collect()
    }

    fn classify_leaf(&self, x: &[i64], sum: &Rat, out: &mut Partial) {
        out.stats.enumerated += 1;
        let r = (sum - &self.tau).abs();
        Best::consider(
            &mut out.best,
            Best {
                key: ResKey::Exact(r.clone()),
                x: x.to_vec(),
                exact: Some(r.clone()),
                ball: Ball::from_rat(&r, self.prec.start),
            },
        );
        let lt = self.eta.cmp_residual(&r, &mut out.stats.refinements);
        if lt.is_false() {
            return;
        }
        let flags = self.in_window_flags(x);
        let all_in = flags.iter().all(|f| f.is_true());
        let cand = Candidate {
            x: x.to_vec(),
            residual: Ball::from_rat(&r, self.prec.start),
            residual_exact: Some(r),
            in_window: flags,
        };
        if lt.is_true() && all_in {
            out.solutions.push(cand);
        } else {
            // residual undecided, or tolerable residual at a boundary integer
            out.undecided.push(cand);
        }
    }

    /// Depth-first walk below a fixed first coordinate. `depth >= 1` always,
    /// so pruning decisions are identical however the first coordinate's
    /// range is partitioned across workers.
    fn dfs(&self, x: &mut Vec<i64>, depth: usize, sum: Rat, out: &mut Partial) {
        let s = self.inst.s() as usize;
        if depth == s {
            self.classify_leaf(x, &sum, out);
            return;
        }
        let (lo, hi) = (self.window.lo[0], self.window.hi[0]);
        if self.prune && depth >= 1 {
            // every completion has sum in [sum+minsuf, sum+maxsuf]
            let lb = &(&sum + &self.minsuf[depth]) - &self.tau;
            if !lb.is_negative()
                && self
                    .eta
                    .cmp_residual(&lb, &mut out.stats.refinements)
                    .is_false()
            {
                out.stats.pruned += 1;
                let mut v = x.clone();
                v.resize(s, lo);
                Best::consider(
                    &mut out.best,
                    Best {
                        key: ResKey::Exact(lb.clone()),
                        x: v,
                        exact: Some(lb.clone()),
                        ball: Ball::from_rat(&lb, self.prec.start),
                    },
                );
                return;
            }
            let gap = &self.tau - &(&sum + &self.maxsuf[depth]);
            if gap.is_positive()
                && self
                    .eta
                    .cmp_residual(&gap, &mut out.stats.refinements)
                    .is_false()
            {
                out.stats.pruned += 1;
                let mut v = x.clone();
                v.resize(s, hi);
                Best::consider(
                    &mut out.best,
                    Best {
                        key: ResKey::Exact(gap.clone()),
                        x: v,
                        exact: Some(gap.clone()),
                        ball: Ball::from_rat(&gap, self.prec.start),
                    },
                );
                return;
            }
        }
        for v in lo..=hi {
            x.push(v);
            let t = &self.terms[depth][(v - lo) as usize];
            self.dfs(x, depth + 1, &sum + t, out);
            x.pop();
        }
    }

    fn run_dfs(&self, parallel: bool) -> Partial {
        let (lo, hi) = (self.window.lo[0], self.window.hi[0]);
        if lo > hi {
            return Partial::default();
        }
        let firsts: Vec<i64> = (lo..=hi).collect();
        let partials = run_jobs(firsts, parallel, |v| {
            let mut out = Partial::default();
            let mut x = vec![v];
            let t = self.terms[0][(v - lo) as usize].clone();
            self.dfs(&mut x, 1, t, &mut out);
            out
        });
        partials.into_iter().fold(Partial::default(), Partial::merge)
    }

    /// Meet-in-the-middle over sorted half sums. Exact route only, and only
    /// for fully decided windows (callers enforce both).
    fn run_mitm(&self) -> Partial {
        let s = self.inst.s() as usize;
        let h = s / 2;
        let (lo, hi) = (self.window.lo[0], self.window.hi[0]);
        if lo > hi {
            return Partial::default();
        }
        let front = enumerate_half(&self.terms[..h], lo, hi);
        let mut back = enumerate_half(&self.terms[h..], lo, hi);
        back.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        let sums: Vec<&Rat> = back.iter().map(|(r, _)| r).collect();

        let mut out = Partial::default();
        out.stats.enumerated = (front.len() + back.len()) as u64;
        // widest band that could contain solutions or undecided candidates
        let band = match &self.eta {
            EtaEval::Exact(e) => e.clone(),
            EtaEval::Ladder(levels) => levels[0].1.clone(),
        };
        for (sa, va) in &front {
            let target = &self.tau - sa;
            // candidates with |S_b - target| < band
            let lo_t = &target - &band;
            let hi_t = &target + &band;
            let start = sums.partition_point(|r| *r <= &lo_t);
            let end = sums.partition_point(|r| *r < &hi_t);
            for (sb, vb) in &back[start..end] {
                let r = (&(sa + sb) - &self.tau).abs();
                let lt = self.eta.cmp_residual(&r, &mut out.stats.refinements);
                let mut x = va.clone();
                x.extend_from_slice(vb);
                let cand = Candidate {
                    x: x.clone(),
                    residual: Ball::from_rat(&r, self.prec.start),
                    residual_exact: Some(r.clone()),
                    in_window: vec![TriBool::True; s],
                };
                match lt {
                    TriBool::True => out.solutions.push(cand),
                    TriBool::Unknown => out.undecided.push(cand),
                    TriBool::False => {}
                }
            }
            // min residual via the nearest sums on either side of the target
            let at = sums.partition_point(|r| *r < &target);
            for idx in [at.checked_sub(1), Some(at)].into_iter().flatten() {
                if idx >= back.len() {
                    continue;
                }
                // first entry of the run with this sum is its lex-min vector
                let run_start = sums.partition_point(|r| *r < sums[idx]);
                let (sb, vb) = &back[run_start];
                let r = (&(sa + sb) - &self.tau).abs();
                let mut x = va.clone();
                x.extend_from_slice(vb);
                Best::consider(
                    &mut out.best,
                    Best {
                        key: ResKey::Exact(r.clone()),
                        x,
                        exact: Some(r.clone()),
                        ball: Ball::from_rat(&r, self.prec.start),
                    },
                );
            }
        }
        out.solutions.sort_by(|a, b| a.x.cmp(&b.x));
        out.undecided.sort_by(|a, b| a.x.cmp(&b.x));
        out
    }
}

fn enumerate_half(terms: &[Vec<Rat>], lo: i64, hi: i64) -> Vec<(Rat, Vec<i64>)> {
    let mut acc: Vec<(Rat, Vec<i64>)> = vec![(Rat::zero(), Vec::new())];
    for row in terms {
        let mut next = Vec::with_capacity(acc.len() * row.len());
        for (sum, vec) in &acc {
            for v in lo..=hi {
                let mut nv = vec.clone();
                nv.push(v);
                next.push((sum + &row[(v - lo) as usize], nv));
            }
        }
        acc = next;
    }
    acc
}

/// Ball-arithmetic engine for enclosed `tau`. Same enumeration and pruning
/// structure as the exact route, with certified comparisons refined along
/// the precision ladder.
struct BallCtx<'a> {
    inst: &'a Instance,
    tau: Ball,
    eta: EtaEval,
    window: &'a Window,
    prec: Precision,
}

impl<'a> BallCtx<'a> {
    fn classify(&self, x: &[i64], out: &mut Partial) {
        out.stats.enumerated += 1;
        let tv = TauValue::Enclosure { ball: self.tau.clone() };
        let mut chosen = residual_enclosure(self.inst, x, &tv, self.prec.start);
        let mut lt = TriBool::Unknown;
        for (i, p) in self.prec.ladder().enumerate() {
            if i > 0 {
                out.stats.refinements += 1;
                chosen = residual_enclosure(self.inst, x, &tv, p);
            }
            lt = match &self.eta {
                EtaEval::Exact(e) => chosen.lt_rat(e),
                EtaEval::Ladder(levels) => {
                    let (lo, hi) = &levels[i.min(levels.len() - 1)];
                    if &chosen.sup_rat() < lo {
                        TriBool::True
                    } else if &chosen.inf_rat() >= hi {
                        TriBool::False
                    } else {
                        TriBool::Unknown
                    }
                }
            };
            if !lt.is_unknown() {
                break;
            }
        }
        Best::consider(
            &mut out.best,
            Best {
                key: ResKey::Ball(chosen.mid().clone(), chosen.rad().clone()),
                x: x.to_vec(),
                exact: None,
                ball: chosen.clone(),
            },
        );
        if lt.is_false() {
            return;
        }
        let flags: Vec<TriBool> = x.iter().map(|v| self.window.membership(*v)).collect();
        let all_in = flags.iter().all(|f| f.is_true());
        let cand = Candidate { x: x.to_vec(), residual: chosen, residual_exact: None, in_window: flags };
        if lt.is_true() && all_in {
            out.solutions.push(cand);
        } else {
            out.undecided.push(cand);
        }
    }

    fn run(&self, parallel: bool) -> Partial {
        let (lo, hi) = (self.window.lo[0], self.window.hi[0]);
        if lo > hi {
            return Partial::default();
        }
        let s = self.inst.s() as usize;
        let firsts: Vec<i64> = (lo..=hi).collect();
        let partials = run_jobs(firsts, parallel, |first| {
            let mut out = Partial::default();
            let mut x = vec![first];
            self.walk(&mut x, 1, s, &mut out);
            out
        });
        partials.into_iter().fold(Partial::default(), Partial::merge)
    }

    fn walk(&self, x: &mut Vec<i64>, depth: usize, s: usize, out: &mut Partial) {
        if depth == s {
            self.classify(x, out);
            return;
        }
        for v in self.window.lo[0]..=self.window.hi[0] {
            x.push(v);
            self.walk(x, depth + 1, s, out);
            x.pop();
        }
    }
}

/// Run the certified search described by `spec`.
pub fn search(spec: &SearchSpec) -> Result<SearchOutcome, SearchError> {
    let (window, window_refinements) =
        build_window(&spec.inst, &spec.tau, &spec.radius, spec.rule_base.as_ref(), &spec.prec)?;
    search_in_window(spec, window, window_refinements)
}

/// Search with a pre-built window (used by callers that construct windows
/// from raw enclosures).
pub fn search_in_window(
    spec: &SearchSpec,
    window: Window,
    window_refinements: u64,
) -> Result<SearchOutcome, SearchError> {
    let estimate = window.candidate_count(spec.inst.s());
    if estimate > BigInt::from(spec.budget) {
        return Err(SearchError::BudgetExceeded { estimate, budget: spec.budget });
    }
    let eta = EtaEval::build(&spec.eta, &spec.tau, spec.rule_base.as_ref(), &spec.prec)?;
    let parallel = spec.parallelism.is_parallel();

    let mut partial = match &spec.tau {
        TauValue::Exact { value } => {
            let ctx = ExactCtx::new(&spec.inst, value.clone(), eta, &window, spec.prune, spec.prec);
            let use_mitm = match spec.algorithm {
                Algorithm::MeetInMiddle => true,
                Algorithm::DepthFirst => false,
                Algorithm::Auto => {
                    spec.inst.s() >= 4
                        && window.boundary.is_empty()
                        && estimate >= BigInt::from(4096)
                }
            };
            if use_mitm && window.boundary.is_empty() {
                ctx.run_mitm()
            } else {
                ctx.run_dfs(parallel)
            }
        }
        TauValue::Enclosure { ball } => {
            let ctx = BallCtx {
                inst: &spec.inst,
                tau: ball.clone(),
                eta,
                window: &window,
                prec: spec.prec,
            };
            ctx.run(parallel)
        }
    };

    partial.stats.refinements += window_refinements;
    partial.stats.boundary_undecided = window.boundary.len() as u64;

    let status = if !partial.solutions.is_empty() {
        Status::Solutions
    } else if !partial.undecided.is_empty() {
        Status::Undecided
    } else {
        Status::Empty
    };
    let (min_ball, min_exact, argmin) = match partial.best {
        Some(b) => (Some(b.ball), b.exact, Some(b.x)),
        None => (None, None, None),
    };
    Ok(SearchOutcome {
        status,
        solutions: partial.solutions,
        undecided: partial.undecided,
        min_residual: min_ball,
        min_residual_exact: min_exact,
        argmin,
        window,
        stats: partial.stats,
    })
}

/// One row of a witness-sweep profile.
#[derive(Debug, Clone, Serialize)]
pub struct ProfileRow {
    pub m: u64,
    pub tau: Rat,
    pub status: Status,
    pub min_residual_exact: Option<Rat>,
    pub min_residual: Option<Ball>,
    pub argmin: Option<Vec<i64>>,
}

/// Batch driver: run the search at `tau_m` for each m in the range and
/// tabulate the minimum residuals. Rows are in ascending m order.
#[allow(clippy::too_many_arguments)]
pub fn min_residual_profile(
    inst: &Instance,
    m_range: std::ops::RangeInclusive<u64>,
    radius: &BoundSpec,
    eta: &BoundSpec,
    prec: &Precision,
    budget: u64,
    parallelism: Parallelism,
) -> Result<Vec<ProfileRow>, SearchError> {
    let ms: Vec<u64> = m_range.collect();
    let rows = run_jobs(ms, parallelism.is_parallel(), |m| -> Result<ProfileRow, SearchError> {
        let tau = crate::witness::tau_m_value(inst, m)?;
        let spec = SearchSpec {
            inst: inst.clone(),
            tau: TauValue::exact(tau.clone()),
            eta: eta.clone(),
            radius: radius.clone(),
            rule_base: None,
            prec: *prec,
            budget,
            algorithm: Algorithm::Auto,
            parallelism: Parallelism::Sequential,
            prune: true,
        };
        let out = search(&spec)?;
        Ok(ProfileRow {
            m,
            tau,
            status: out.status,
            min_residual_exact: out.min_residual_exact,
            min_residual: out.min_residual,
            argmin: out.argmin,
        })
    });
    rows.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_instance, RawInstance};

    fn inst(s: u32, k: u32, theta: &[&str]) -> Instance {
        validate_instance(&RawInstance {
            s,
            k,
            theta: theta.iter().map(|s| s.to_string()).collect(),
        })
        .unwrap()
    }

    fn spec_220(eta: Rat, radius: Rat) -> SearchSpec {
        SearchSpec::new(
            inst(2, 2, &["3/10", "7/10"]),
            TauValue::exact(Rat::from_int(220)),
            BoundSpec::absolute(eta),
            BoundSpec::absolute(radius),
        )
    }

    #[test]
    fn residual_exact_examples() {
        let i = inst(2, 2, &["3/10", "7/10"]);
        // (10.7)^2 + (10.3)^2 - 220 = 0.58
        assert_eq!(
            residual_exact(&i, &[11, 11], &Rat::from_int(220)),
            Rat::ratio(29, 50)
        );
        let i = inst(2, 2, &["1/2", "1/2"]);
        assert_eq!(
            residual_exact(&i, &[2, 3], &Rat::ratio(17, 2)),
            Rat::zero()
        );
    }

    #[test]
    fn residual_ball_contains_exact() {
        let i = inst(3, 3, &["1/4", "1/2", "3/4"]);
        for x in [[1i64, 2, 3], [5, 5, 5], [2, 7, 4]] {
            let tau = Rat::ratio(411, 4);
            let exact = residual_exact(&i, &x, &tau);
            let ball = residual_enclosure(&i, &x, &TauValue::exact(tau), 128);
            assert!(ball.contains_rat(&exact));
        }
    }

    #[test]
    fn residual_self_consistency_shrinks() {
        // tau = sum of terms exactly: residual ball contains 0, radius drops with prec
        let i = inst(2, 3, &["3/10", "7/10"]);
        let x = [4i64, 9];
        let tau = {
            let mut sum = Rat::zero();
            for (xi, ti) in x.iter().zip(i.theta()) {
                sum = &sum + &(&Rat::from_int(*xi) - ti).pow_i(3);
            }
            sum
        };
        let b64 = residual_enclosure(&i, &x, &TauValue::exact(tau.clone()), 64);
        let b256 = residual_enclosure(&i, &x, &TauValue::exact(tau), 256);
        assert!(b64.contains_rat(&Rat::zero()));
        assert!(b256.contains_rat(&Rat::zero()));
        assert!(b256.sup_rat() <= b64.sup_rat());
    }

    #[test]
    fn window_around_220() {
        let i = inst(2, 2, &["3/10", "7/10"]);
        let (w, _) = build_window(
            &i,
            &TauValue::exact(Rat::from_int(220)),
            &BoundSpec::absolute(Rat::from_int(2)),
            None,
            &Precision::default(),
        )
        .unwrap();
        assert_eq!(w.lo, vec![9, 9]);
        assert_eq!(w.hi, vec![12, 12]);
        assert!(w.boundary.is_empty());
    }

    #[test]
    fn window_tight_singleton() {
        // tau = 200: center exactly 10, radius 1/2 -> {10}
        let i = inst(2, 2, &["3/10", "7/10"]);
        let (w, _) = build_window(
            &i,
            &TauValue::exact(Rat::from_int(200)),
            &BoundSpec::absolute(Rat::ratio(1, 2)),
            None,
            &Precision::default(),
        )
        .unwrap();
        assert_eq!(w.lo, vec![10, 10]);
        assert_eq!(w.hi, vec![10, 10]);
        assert!(w.boundary.is_empty());
    }

    #[test]
    fn window_exact_boundary_excluded() {
        // tau = 200: center exactly 10, radius 2: strict inequality excludes 8 and 12
        let i = inst(2, 2, &["3/10", "7/10"]);
        let (w, _) = build_window(
            &i,
            &TauValue::exact(Rat::from_int(200)),
            &BoundSpec::absolute(Rat::from_int(2)),
            None,
            &Precision::default(),
        )
        .unwrap();
        assert_eq!(w.lo, vec![9, 9]);
        assert_eq!(w.hi, vec![11, 11]);
        assert!(w.boundary.is_empty());
    }

    #[test]
    fn window_huge_uncertainty_is_error() {
        let i = inst(2, 2, &["3/10", "7/10"]);
        let center = Ball::from_int(50, 128);
        let radius = Ball::with_radius(
            crate::ball::Dyadic::from_int(10),
            crate::ball::Dyadic::from_int(9),
            128,
        );
        assert!(matches!(
            build_window_from_balls(&i, &center, &radius),
            Err(SearchError::WindowUndecided { .. })
        ));
    }

    #[test]
    fn window_clips_at_one() {
        let i = inst(2, 2, &["3/10", "7/10"]);
        let (w, _) = build_window(
            &i,
            &TauValue::exact(Rat::from_int(2)), // center = 1, radius 3 reaches below 1
            &BoundSpec::absolute(Rat::from_int(3)),
            None,
            &Precision::default(),
        )
        .unwrap();
        assert_eq!(w.lo[0], 1);
    }

    #[test]
    fn search_empty_at_eta_half() {
        let out = search(&spec_220(Rat::ratio(1, 2), Rat::from_int(2))).unwrap();
        assert_eq!(out.status, Status::Empty);
        assert_eq!(out.min_residual_exact, Some(Rat::ratio(29, 50)));
        assert_eq!(out.argmin, Some(vec![11, 11]));
        assert!(out.solutions.is_empty() && out.undecided.is_empty());
    }

    #[test]
    fn search_solutions_at_eta_point_six() {
        let out = search(&spec_220(Rat::ratio(3, 5), Rat::from_int(2))).unwrap();
        assert_eq!(out.status, Status::Solutions);
        let xs: Vec<&Vec<i64>> = out.solutions.iter().map(|c| &c.x).collect();
        assert_eq!(xs, vec![&vec![11, 11]]);
        assert_eq!(out.solutions[0].residual_exact, Some(Rat::ratio(29, 50)));
    }

    #[test]
    fn search_constructed_exact_solution() {
        let spec = SearchSpec::new(
            inst(2, 2, &["1/2", "1/2"]),
            TauValue::exact(Rat::ratio(17, 2)),
            BoundSpec::absolute(Rat::ratio(1, 10)),
            BoundSpec::absolute(Rat::from_int(3)),
        );
        let out = search(&spec).unwrap();
        assert_eq!(out.status, Status::Solutions);
        let xs: Vec<Vec<i64>> = out.solutions.iter().map(|c| c.x.clone()).collect();
        // lexicographic listing order
        assert_eq!(xs, vec![vec![2, 3], vec![3, 2]]);
        assert_eq!(out.min_residual_exact, Some(Rat::zero()));
        assert_eq!(out.argmin, Some(vec![2, 3]));
    }

    #[test]
    fn k2_residual_identity() {
        // for tau = tau_m and x = m + a with sum(a) = s:
        // residual = sum (a_i - theta_i)^2 exactly, independent of m
        let i = inst(2, 2, &["3/10", "7/10"]);
        for m in [5i64, 17, 100] {
            let tau = crate::witness::tau_m_value(&i, m as u64).unwrap();
            for a in [[0i64, 2], [1, 1], [2, 0], [-1, 3]] {
                let x = [m + a[0], m + a[1]];
                let expect = a
                    .iter()
                    .zip(i.theta())
                    .map(|(ai, ti)| (&Rat::from_int(*ai) - ti).pow_i(2))
                    .fold(Rat::zero(), |acc, v| &acc + &v);
                assert_eq!(residual_exact(&i, &x, &tau), expect);
            }
        }
    }

    #[test]
    fn pruning_preserves_outcome() {
        let mut spec = spec_220(Rat::ratio(1, 2), Rat::from_int(6));
        spec.parallelism = Parallelism::Sequential;
        let with = search(&spec).unwrap();
        spec.prune = false;
        let without = search(&spec).unwrap();
        assert_eq!(with.status, without.status);
        assert_eq!(with.min_residual_exact, without.min_residual_exact);
        assert_eq!(with.argmin, without.argmin);
        assert_eq!(
            with.solutions.iter().map(|c| &c.x).collect::<Vec<_>>(),
            without.solutions.iter().map(|c| &c.x).collect::<Vec<_>>()
        );
        assert!(with.stats.enumerated <= without.stats.enumerated);
        assert_eq!(without.stats.pruned, 0);
    }

    #[test]
    fn serial_and_parallel_outcomes_identical() {
        for eta in [Rat::ratio(1, 2), Rat::ratio(3, 5), Rat::from_int(3)] {
            let mut spec = spec_220(eta, Rat::from_int(8));
            spec.parallelism = Parallelism::Sequential;
            let a = serde_json::to_string(&search(&spec).unwrap()).unwrap();
            spec.parallelism = Parallelism::Parallel;
            let b = serde_json::to_string(&search(&spec).unwrap()).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn mitm_matches_dfs() {
        let i = inst(4, 2, &["1/10", "3/10", "7/10", "9/10"]);
        let tau = crate::witness::tau_m_value(&i, 12).unwrap();
        for eta in [Rat::ratio(1, 2), Rat::from_int(2), Rat::from_int(40)] {
            let mut spec = SearchSpec::new(
                i.clone(),
                TauValue::exact(tau.clone()),
                BoundSpec::absolute(eta),
                BoundSpec::absolute(Rat::from_int(3)),
            );
            spec.algorithm = Algorithm::DepthFirst;
            let dfs = search(&spec).unwrap();
            spec.algorithm = Algorithm::MeetInMiddle;
            let mitm = search(&spec).unwrap();
            assert_eq!(dfs.status, mitm.status);
            assert_eq!(dfs.min_residual_exact, mitm.min_residual_exact);
            assert_eq!(dfs.argmin, mitm.argmin);
            assert_eq!(
                dfs.solutions.iter().map(|c| &c.x).collect::<Vec<_>>(),
                mitm.solutions.iter().map(|c| &c.x).collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn ball_tau_route_agrees_on_clear_instances() {
        // enclosure of 220 with tiny radius: same verdicts as the exact route
        let i = inst(2, 2, &["3/10", "7/10"]);
        let tau_ball = Ball::with_radius(
            crate::ball::Dyadic::from_int(220),
            crate::ball::Dyadic::pow2(-40),
            128,
        );
        let spec = SearchSpec {
            inst: i,
            tau: TauValue::Enclosure { ball: tau_ball },
            eta: BoundSpec::absolute(Rat::ratio(1, 2)),
            radius: BoundSpec::absolute(Rat::from_int(2)),
            rule_base: None,
            prec: Precision::default(),
            budget: 1_000_000,
            algorithm: Algorithm::Auto,
            parallelism: Parallelism::Sequential,
            prune: true,
        };
        let out = search(&spec).unwrap();
        assert_eq!(out.status, Status::Empty);
        assert_eq!(out.argmin, Some(vec![11, 11]));
        assert!(out.min_residual.unwrap().contains_rat(&Rat::ratio(29, 50)));
    }

    #[test]
    fn empty_window_reports_no_min() {
        // radius too small to catch any integer
        let i = inst(2, 2, &["3/10", "7/10"]);
        let spec = SearchSpec::new(
            i,
            TauValue::exact(Rat::from_int(220)),
            BoundSpec::absolute(Rat::ratio(1, 2)),
            BoundSpec::absolute(Rat::ratio(1, 10)),
        );
        let out = search(&spec).unwrap();
        assert_eq!(out.status, Status::Empty);
        assert!(out.min_residual.is_none() && out.argmin.is_none());
        assert!(out.window.is_empty());
    }

    #[test]
    fn budget_refusal() {
        let mut spec = spec_220(Rat::ratio(1, 2), Rat::from_int(50));
        spec.budget = 100;
        assert!(matches!(search(&spec), Err(SearchError::BudgetExceeded { .. })));
    }

    #[test]
    fn profile_rows_constant_min() {
        let i = inst(2, 2, &["3/10", "7/10"]);
        let rows = min_residual_profile(
            &i,
            10..=12,
            &BoundSpec::absolute(Rat::from_int(2)),
            &BoundSpec::absolute(Rat::ratio(1, 2)),
            &Precision::default(),
            1_000_000,
            Parallelism::Sequential,
        )
        .unwrap();
        assert_eq!(rows.len(), 3);
        for (row, m) in rows.iter().zip(10u64..) {
            assert_eq!(row.m, m);
            assert_eq!(row.min_residual_exact, Some(Rat::ratio(29, 50)));
            assert_eq!(row.argmin, Some(vec![m as i64 + 1, m as i64 + 1]));
        }
    }

    #[test]
    fn undecided_at_low_cap_resolves_at_high_cap() {
        // residual 99/200 vs eta = (7/20)*sqrt(2): they differ by ~2.5e-5,
        // which an 8-bit enclosure cannot separate but a 4096-bit one can
        let i = inst(2, 2, &["1/2", "1/2"]);
        let tau = &Rat::ratio(17, 2) - &Rat::ratio(99, 200);
        let mk = |prec: Precision| {
            let mut s = SearchSpec::new(
                i.clone(),
                TauValue::exact(tau.clone()),
                BoundSpec::pow(Rat::ratio(7, 20), 1, 2), // eta = (7/20)*base^(1/2)
                BoundSpec::absolute(Rat::from_int(1)),
            );
            s.rule_base = Some(Rat::from_int(2));
            s.prec = prec;
            s.parallelism = Parallelism::Sequential;
            s
        };
        let coarse = search(&mk(Precision::new(4, 8))).unwrap();
        assert_eq!(coarse.status, Status::Undecided);
        assert!(
            coarse.undecided.iter().any(|c| c.x == vec![2, 3]),
            "the borderline candidate must be listed"
        );
        let fine = search(&mk(Precision::default())).unwrap();
        // 99/200 = 0.495 > 0.35*sqrt(2) = 0.49497...: certified no solution
        assert_eq!(fine.status, Status::Empty);
    }

    #[test]
    fn boundary_flagged_window_degrades_to_undecided_candidates() {
        // exact center 10, radius enclosed as 2 +/- 2^-90: integers 8 and 12
        // sit on an undecidable boundary and are included with flags
        let i = inst(2, 2, &["1/2", "1/2"]);
        let center = Ball::from_int(10, 128);
        let radius = Ball::with_radius(
            crate::ball::Dyadic::from_int(2),
            crate::ball::Dyadic::pow2(-90),
            128,
        );
        let window = build_window_from_balls(&i, &center, &radius).unwrap();
        assert_eq!(window.boundary, vec![8, 12]);
        assert_eq!(window.lo[0], 8);
        assert_eq!(window.hi[0], 12);

        let mut spec = SearchSpec::new(
            i,
            TauValue::exact(Rat::from_int(200)),
            BoundSpec::absolute(Rat::from_int(500)), // everything tolerable
            BoundSpec::absolute(Rat::from_int(2)),   // unused: window injected
        );
        spec.parallelism = Parallelism::Sequential;
        let out = search_in_window(&spec, window, 0).unwrap();
        // certified solutions never use a flagged coordinate
        assert_eq!(out.status, Status::Solutions);
        assert!(out
            .solutions
            .iter()
            .all(|c| !c.x.contains(&8) && !c.x.contains(&12)));
        assert!(out.undecided.iter().any(|c| c.x == vec![8, 8]));
        assert_eq!(out.stats.boundary_undecided, 2);
        // flagged candidates carry Unknown membership in their record
        let cand = out.undecided.iter().find(|c| c.x == vec![8, 8]).unwrap();
        assert_eq!(cand.in_window, vec![TriBool::Unknown, TriBool::Unknown]);
    }

    #[test]
    fn eta_rule_evaluates_exactly_for_k2() {
        // eta = c * tau^0 = c for k = 2
        let i = inst(2, 2, &["3/10", "7/10"]);
        let spec = SearchSpec::new(
            i,
            TauValue::exact(Rat::from_int(220)),
            BoundSpec::eta_rule(Rat::ratio(1, 2), 2),
            BoundSpec::absolute(Rat::from_int(2)),
        );
        let out = search(&spec).unwrap();
        assert_eq!(out.status, Status::Empty);
        assert_eq!(out.min_residual_exact, Some(Rat::ratio(29, 50)));
    }
}
