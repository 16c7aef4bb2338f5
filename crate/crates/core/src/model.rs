//! Problem instances, window/tolerance bounds, and the shift-dependent
//! lower bound used by both contradiction branches of the certificates.

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ball::{Ball, BallError, Rat, TriBool};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("s must be >= 2 (got {0})")]
    SmallS(u32),
    #[error("k must be >= 2 (got {0})")]
    SmallK(u32),
    #[error("theta has {got} entries but s = {s}")]
    ThetaLength { s: u32, got: usize },
    #[error("theta[{0}] not in open interval (0,1)")]
    ThetaRange(usize),
    #[error("theta[{index}]: {source}")]
    ThetaParse {
        index: usize,
        source: crate::ball::RatParseError,
    },
    #[error("target sum {target} infeasible with {s} variables bounded by {bound}")]
    Infeasible { target: i64, s: u32, bound: i64 },
}

/// Working precision schedule: start at `start` bits and double on demand
/// up to `cap`. Past the cap comparisons stay `Unknown`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Precision {
    pub start: u32,
    pub cap: u32,
}

impl Default for Precision {
    fn default() -> Self {
        Precision { start: 128, cap: 4096 }
    }
}

impl Precision {
    pub fn new(start: u32, cap: u32) -> Self {
        Precision { start: start.max(crate::ball::MIN_PREC), cap: cap.max(start) }
    }

    /// Precision ladder: start, 2*start, ..., capped.
    pub fn ladder(&self) -> impl Iterator<Item = u32> + '_ {
        let mut p = Some(self.start);
        std::iter::from_fn(move || {
            let cur = p?;
            p = if cur >= self.cap { None } else { Some((cur * 2).min(self.cap)) };
            Some(cur)
        })
    }
}

/// Raw, unvalidated instance data as read from a config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawInstance {
    pub s: u32,
    pub k: u32,
    pub theta: Vec<String>,
}

/// A validated shifted Waring instance: `s` variables, power `k`, shifts
/// `theta_i` in (0,1) stored exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Instance {
    s: u32,
    k: u32,
    theta: Vec<Rat>,
    theta_display: Vec<String>,
}

impl Instance {
    pub fn new(s: u32, k: u32, theta: Vec<Rat>) -> Result<Self, ModelError> {
        let display = theta.iter().map(|t| t.to_string()).collect();
        Instance::validated(s, k, theta, display)
    }

    fn validated(
        s: u32,
        k: u32,
        theta: Vec<Rat>,
        theta_display: Vec<String>,
    ) -> Result<Self, ModelError> {
        if s < 2 {
            return Err(ModelError::SmallS(s));
        }
        if k < 2 {
            return Err(ModelError::SmallK(k));
        }
        if theta.len() != s as usize {
            return Err(ModelError::ThetaLength { s, got: theta.len() });
        }
        for (i, t) in theta.iter().enumerate() {
            if !t.is_positive() || t >= &Rat::one() {
                return Err(ModelError::ThetaRange(i));
            }
        }
        Ok(Instance { s, k, theta, theta_display })
    }

    pub fn s(&self) -> u32 {
        self.s
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn theta(&self) -> &[Rat] {
        &self.theta
    }

    pub fn theta_display(&self) -> &[String] {
        &self.theta_display
    }

    pub fn theta_sum(&self) -> Rat {
        self.theta.iter().fold(Rat::zero(), |a, t| &a + t)
    }

    pub fn s_rat(&self) -> Rat {
        Rat::from_int(self.s as i64)
    }
}

/// Validate raw config data into an [`Instance`], naming the violated
/// hypothesis on failure. Validating an already-valid instance is a no-op.
pub fn validate_instance(raw: &RawInstance) -> Result<Instance, ModelError> {
    let mut theta = Vec::with_capacity(raw.theta.len());
    for (i, t) in raw.theta.iter().enumerate() {
        theta.push(Rat::parse(t).map_err(|source| ModelError::ThetaParse { index: i, source })?);
    }
    Instance::validated(raw.s, raw.k, theta, raw.theta.clone())
}

/// `L(theta) = sum_i min(theta_i, 1 - theta_i)^2`: the exact minimum of
/// `sum_i (a_i - theta_i)^2` over all integer vectors `a`. Strictly positive
/// for shifts in the open unit interval; this is the quantity the proof's
/// final contradiction bounds from below.
pub fn theta_gap_lower_bound(inst: &Instance) -> Rat {
    inst.theta()
        .iter()
        .map(|t| {
            let one_minus = &Rat::one() - t;
            let m = t.clone().min(one_minus);
            &m * &m
        })
        .fold(Rat::zero(), |a, b| &a + &b)
}

/// Exact minimum of `sum_i (a_i - theta_i)^2` over integer vectors with
/// `sum a_i = target_sum` and `|a_i| <= bound`, together with the
/// lexicographically smallest argmin.
pub fn constrained_theta_min(
    inst: &Instance,
    target_sum: i64,
    bound: i64,
) -> Result<(Rat, Vec<i64>), ModelError> {
    let s = inst.s() as usize;
    if bound < 0 || (bound as i128) * (s as i128) < (target_sum as i128).abs() {
        return Err(ModelError::Infeasible { target: target_sum, s: inst.s(), bound });
    }
    let mut best: Option<(Rat, Vec<i64>)> = None;
    let mut a = vec![0i64; s];
    // enumerate first s-1 coordinates; the last is forced by the sum
    fn rec(
        inst: &Instance,
        bound: i64,
        target: i64,
        idx: usize,
        a: &mut Vec<i64>,
        acc: Rat,
        best: &mut Option<(Rat, Vec<i64>)>,
    ) {
        let s = inst.s() as usize;
        if idx == s - 1 {
            let last = target - a[..idx].iter().sum::<i64>();
            if last.abs() > bound {
                return;
            }
            a[idx] = last;
            let d = &Rat::from_int(last) - &inst.theta()[idx];
            let val = &acc + &(&d * &d);
            let better = match best {
                None => true,
                Some((b, bv)) => &val < b || (&val == b && a[..] < bv[..]),
            };
            if better {
                *best = Some((val, a.clone()));
            }
            return;
        }
        for v in -bound..=bound {
            a[idx] = v;
            let d = &Rat::from_int(v) - &inst.theta()[idx];
            rec(inst, bound, target, idx + 1, a, &acc + &(&d * &d), best);
        }
    }
    rec(inst, bound, target_sum, 0, &mut a, Rat::zero(), &mut best);
    best.ok_or(ModelError::Infeasible { target: target_sum, s: inst.s(), bound })
}

/// Integer window around the diagonal center, identical per variable.
/// Integers whose membership could not be decided at the precision cap are
/// flagged in `boundary` and included conservatively.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Window {
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
    pub boundary: Vec<i64>,
    pub center: Ball,
    pub radius: Ball,
}

impl Window {
    pub fn width(&self) -> u64 {
        if self.lo.is_empty() || self.lo[0] > self.hi[0] {
            0
        } else {
            (self.hi[0] - self.lo[0] + 1) as u64
        }
    }

    pub fn is_empty(&self) -> bool {
        self.width() == 0
    }

    /// Candidate count `width^s` as a big integer (budget checks).
    pub fn candidate_count(&self, s: u32) -> BigInt {
        BigInt::from(self.width()).pow(s)
    }

    pub fn membership(&self, x: i64) -> TriBool {
        if self.is_empty() || x < self.lo[0] || x > self.hi[0] {
            TriBool::False
        } else if self.boundary.contains(&x) {
            TriBool::Unknown
        } else {
            TriBool::True
        }
    }
}

/// How a tolerance or window radius is formed. `Pow` rules re-evaluate at
/// any precision, so certified comparisons can refine on demand.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum BoundSpec {
    /// Fixed exact rational value.
    Absolute { value: Rat },
    /// `coeff * base^(num/den)`, base supplied at evaluation time.
    Pow { coeff: Rat, num: i64, den: u64 },
}

/// Evaluated bound: exact rational when representable, enclosure otherwise.
#[derive(Debug, Clone)]
pub enum BoundValue {
    Exact(Rat),
    Enclosure(Ball),
}

impl BoundSpec {
    pub fn absolute(value: Rat) -> Self {
        BoundSpec::Absolute { value }
    }

    /// Tolerance rule `coeff * tau^(1 - 2/k)`.
    pub fn eta_rule(coeff: Rat, k: u32) -> Self {
        BoundSpec::pow(coeff, k as i64 - 2, k as u64)
    }

    /// Window rule `coeff * tau^(1/(2k))`.
    pub fn radius_rule(coeff: Rat, k: u32) -> Self {
        BoundSpec::pow(coeff, 1, 2 * k as u64)
    }

    /// General power rule with the exponent in lowest terms.
    pub fn pow(coeff: Rat, num: i64, den: u64) -> Self {
        assert!(den >= 1);
        let g = num_integer::gcd(num.unsigned_abs(), den);
        BoundSpec::Pow { coeff, num: num / g as i64, den: den / g }
    }

    /// Evaluate against an exact positive base.
    pub fn eval(&self, base: &Rat, prec: u32) -> Result<BoundValue, BallError> {
        match self {
            BoundSpec::Absolute { value } => Ok(BoundValue::Exact(value.clone())),
            BoundSpec::Pow { coeff, num, den } => {
                let t = base.pow_i(*num);
                if *den == 1 {
                    Ok(BoundValue::Exact(coeff * &t))
                } else {
                    let b = Ball::from_rat(&t, prec).root(*den as u32, prec)?;
                    Ok(BoundValue::Enclosure(b.mul(&Ball::from_rat(coeff, prec))))
                }
            }
        }
    }

    /// Evaluate against an enclosed base.
    pub fn eval_ball(&self, base: &Ball, prec: u32) -> Result<BoundValue, BallError> {
        match self {
            BoundSpec::Absolute { value } => Ok(BoundValue::Exact(value.clone())),
            BoundSpec::Pow { coeff, num, den } => {
                let powed = if *num >= 0 {
                    base.pow_u(*num as u32)
                } else {
                    // negative exponents on enclosed bases are not needed by
                    // any caller; reject loudly rather than divide
                    panic!("negative exponent on enclosed base");
                };
                let rooted = if *den == 1 { powed } else { powed.root(*den as u32, prec)? };
                Ok(BoundValue::Enclosure(rooted.mul(&Ball::from_rat(coeff, prec))))
            }
        }
    }

    /// Human-readable provenance tag for outputs.
    pub fn describe(&self, base_name: &str) -> String {
        match self {
            BoundSpec::Absolute { value } => value.to_string(),
            BoundSpec::Pow { coeff, num, den } => {
                format!("{coeff}*{base_name}^({num}/{den})")
            }
        }
    }
}

impl BoundValue {
    /// Certified `r < bound`.
    pub fn gt_rat(&self, r: &Rat) -> TriBool {
        match self {
            BoundValue::Exact(e) => TriBool::from_bool(r < e),
            BoundValue::Enclosure(b) => b.gt_rat(r),
        }
    }

    /// Certified `bound > 0`.
    pub fn positive(&self) -> TriBool {
        self.gt_rat(&Rat::zero())
    }

    pub fn as_ball(&self, prec: u32) -> Ball {
        match self {
            BoundValue::Exact(e) => Ball::from_rat(e, prec),
            BoundValue::Enclosure(b) => b.clone(),
        }
    }
}

/// Tolerance `eta` in the residual inequality: an absolute rational or a
/// coefficient rule, carried unevaluated so certified comparisons can refine
/// it on demand. Window radii use the same representation.
pub type Tolerance = BoundSpec;
