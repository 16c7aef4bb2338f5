//! Effective certificates for the non-representability of the witness
//! family.
//!
//! A [`Certificate`] instantiates the qualitative statement "for suitably
//! small c, c' and all sufficiently large m, the window search at tau_m is
//! empty" with concrete exact rationals: tolerance coefficient `c`, window
//! coefficient `c_prime`, threshold `m0`, and the full chain `c1..c8` of
//! intermediate constants together with the side conditions under which each
//! link holds. Every link is an inequality between exact rationals, so a
//! certificate can be re-audited at any `m` without floating point.
//!
//! The chain, for `x = m + a` inside the window at `tau_m`:
//!
//! 1. `tau_m <= 2s*m^k` for `m >= k`, so `tau_m^(1/2k) <= c1*sqrt(m)` where
//!    `c1` is a rational with `c1^(2k) >= 2s`.
//! 2. `|a_i| < c'*c1*sqrt(m) + k(1 - T/s)`; once `m` clears the absorption
//!    threshold the additive term folds in: `|a_i| <= c2*sqrt(m)` with
//!    `c2 = 2c'c1`.
//! 3. `|a_i - theta_i| <= c3*sqrt(m)` with `c3 = 2c2` once `c2*sqrt(m) >= 1`.
//! 4. Dividing the binomial expansion of the residual by `k*m^(k-1)` bounds
//!    `|s - sum(a_i)|` by `c4(m) <= headroom < 1`, which forces
//!    `sum(a_i) = s` exactly.
//! 5. With `sum(a_i) = s` the leading term vanishes. For `k = 2` the
//!    residual equals `sum (a_i - theta_i)^2 >= L(theta)`, contradicting
//!    `eta < c = c5` once `c5 < L`. For `k >= 3` the second-order term
//!    dominates: `S2 < c7 + c8*m^(-1/2)*S2`, so `S2 < 2*c7` once
//!    `c8*m^(-1/2) <= 1/2`, contradicting `S2 >= L` once `2*c7 < L`.

use num_bigint::BigInt;
use num_integer::binomial;
use serde::Serialize;
use thiserror::Error;

use crate::ball::Rat;
use crate::model::{theta_gap_lower_bound, BoundSpec, BoundValue, Instance, Precision};
use crate::search::{search, SearchSpec, Status, TauValue};
use crate::witness::tau_m_value;
use crate::{run_jobs, Parallelism};

#[derive(Debug, Error)]
pub enum CertifyError {
    #[error("headroom must lie strictly between 0 and 1 (got {0})")]
    BadHeadroom(Rat),
    #[error("C0 must be positive (got {0})")]
    BadC0(Rat),
    #[error("threshold scan did not converge below m = {0}")]
    ThresholdScan(u64),
    #[error("closing inequalities {failing} unsatisfiable after {halvings} halvings of C0")]
    ClosingFailed { failing: String, halvings: u32 },
    #[error("certificate audit failed at m0: {0}")]
    InvalidCertificate(String),
    #[error(transparent)]
    Search(#[from] crate::search::SearchError),
    #[error(transparent)]
    Witness(#[from] crate::witness::WitnessError),
    #[error(transparent)]
    Ball(#[from] crate::ball::BallError),
}

/// One audited inequality, stored with exact rational sides.
#[derive(Debug, Clone, Serialize)]
pub struct AuditEntry {
    pub name: String,
    pub lhs: Rat,
    pub cmp: &'static str,
    pub rhs: Rat,
    pub holds: bool,
}

impl AuditEntry {
    fn new(name: impl Into<String>, lhs: Rat, cmp: &'static str, rhs: Rat) -> Self {
        let holds = match cmp {
            "<" => lhs < rhs,
            "<=" => lhs <= rhs,
            ">=" => lhs >= rhs,
            "==" => lhs == rhs,
            other => unreachable!("unknown comparison {other}"),
        };
        AuditEntry { name: name.into(), lhs, cmp, rhs, holds }
    }
}

/// Side condition of the form `m >= min_m`, with the derivation recorded.
#[derive(Debug, Clone, Serialize)]
pub struct SideCondition {
    pub name: String,
    pub description: String,
    pub min_m: u64,
}

/// The intermediate constants of the proof chain.
#[derive(Debug, Clone, Serialize)]
pub struct Chain {
    pub c1: Rat,
    pub c2: Rat,
    pub c3: Rat,
    /// Value of the sum-deduction bound at m0 (decreases for larger m).
    pub c4_at_m0: Rat,
    /// k = 2 branch constant (equals c).
    pub c5: Option<Rat>,
    /// k >= 3 branch constants.
    pub c6: Option<Rat>,
    pub c7: Option<Rat>,
    pub c8: Option<Rat>,
    pub side_conditions: Vec<SideCondition>,
}

/// Effective certificate `(c, c_prime, m0)` plus the audited chain.
#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub inst: Instance,
    pub headroom: Rat,
    pub c: Rat,
    pub c_prime: Rat,
    pub m0: u64,
    /// `L(theta)`: exact lower bound for `sum (a_i - theta_i)^2`.
    pub theta_gap: Rat,
    pub chain: Chain,
    /// Every chain inequality evaluated at m = m0.
    pub audit: Vec<AuditEntry>,
}

fn isqrt_u64(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while (r as u128) * (r as u128) > n as u128 {
        r -= 1;
    }
    while ((r + 1) as u128) * ((r + 1) as u128) <= n as u128 {
        r += 1;
    }
    r
}

fn binom_rat(k: u32, j: u32) -> Rat {
    Rat::from_bigint(binomial(BigInt::from(k), BigInt::from(j)))
}

/// Smallest `n/64` with `(n/64)^(2k) >= bound`.
fn grid_upper_root(bound: &Rat, two_k: u32) -> Rat {
    // smallest n with n^(2k) >= bound * 64^(2k)
    let scaled = bound * &Rat::from_bigint(BigInt::from(64).pow(two_k));
    // ceil of the 2k-th root of ceil(scaled)
    let target = scaled.ceil_bigint();
    let mut n = target.nth_root(two_k);
    if n.pow(two_k) < target {
        n += 1;
    }
    Rat::new(n, BigInt::from(64))
}

struct ChainParams {
    big_a: Rat,
    c1: Rat,
    c2: Rat,
    c3: Rat,
    c6: Option<Rat>,
    c7: Option<Rat>,
    c8: Option<Rat>,
}

fn chain_params(inst: &Instance, c: &Rat, c_prime: &Rat) -> ChainParams {
    let k = inst.k();
    let big_t = inst.theta_sum();
    let big_a = &Rat::from_int(k as i64) * &(&Rat::one() - &(&big_t / &inst.s_rat()));
    let c1 = grid_upper_root(&(&Rat::from_int(2) * &inst.s_rat()), 2 * k);
    let c2 = &(&Rat::from_int(2) * c_prime) * &c1;
    let c3 = &Rat::from_int(2) * &c2;
    let (c6, c7, c8) = if k >= 3 {
        let c6 = (3..=k)
            .map(|j| &binom_rat(k, j) * &c3.pow_i(j as i64 - 2))
            .fold(Rat::zero(), |a, b| &a + &b);
        let bk2 = binom_rat(k, 2);
        let c7 = &(c * &c1.pow_i(2 * k as i64 - 4)) / &bk2;
        let c8 = &c6 / &bk2;
        (Some(c6), Some(c7), Some(c8))
    } else {
        (None, None, None)
    };
    ChainParams { big_a, c1, c2, c3, c6, c7, c8 }
}

/// The exact sum-deduction bound `c4(m)`, evaluated with `1/sqrt(m)`
/// replaced by the rigorous rational upper bound `1/isqrt(m)`.
fn c4_bound(inst: &Instance, c: &Rat, p: &ChainParams, m: u64) -> Rat {
    let k = inst.k();
    let s = inst.s_rat();
    let r = isqrt_u64(m).max(1);
    let mut v = &(&(c * &p.c1.pow_i(2 * k as i64 - 4)) / &Rat::from_int(k as i64))
        / &Rat::from_bigint(m.into());
    for j in 2..=k {
        let mut term = &(&binom_rat(k, j) / &Rat::from_int(k as i64)) * &s;
        term = &term * &p.c3.pow_i(j as i64);
        term = &term * &Rat::from_bigint(r.into()).recip().pow_i(j as i64 - 2);
        v = &v + &term;
    }
    v
}

/// Derive an effective certificate for the instance. The tolerance and
/// window coefficients are found by geometric halving from 1; `m0` is the
/// least m satisfying every recorded side condition (all are monotone in m).
pub fn derive_constants(inst: &Instance, headroom: &Rat) -> Result<Certificate, CertifyError> {
    derive_with_start(inst, headroom, Rat::one(), Rat::one())
}

/// Derivation with explicit starting values for the halving search; used by
/// the shrink-monotonicity property tests.
pub fn derive_with_start(
    inst: &Instance,
    headroom: &Rat,
    c_start: Rat,
    c_prime_start: Rat,
) -> Result<Certificate, CertifyError> {
    if !headroom.is_positive() || headroom >= &Rat::one() {
        return Err(CertifyError::BadHeadroom(headroom.clone()));
    }
    if !c_start.is_positive() || !c_prime_start.is_positive() {
        return Err(CertifyError::BadC0(Rat::zero()));
    }
    let k = inst.k();
    let s = inst.s_rat();
    let big_l = theta_gap_lower_bound(inst);
    let half = Rat::ratio(1, 2);

    // branch condition fixes c
    let mut c = c_start;
    loop {
        let p = chain_params(inst, &c, &Rat::one());
        let ok = if k == 2 {
            c < big_l
        } else {
            let c7 = p.c7.as_ref().expect("k >= 3");
            &Rat::from_int(2) * c7 < big_l
        };
        if ok {
            break;
        }
        c = &c * &half;
    }

    // headroom condition fixes c_prime via the m-independent j=2 term
    let mut c_prime = c_prime_start;
    loop {
        let p = chain_params(inst, &c, &c_prime);
        let j2 = &(&(&binom_rat(k, 2) / &Rat::from_int(k as i64)) * &s) * &p.c3.pow_i(2);
        if &j2 < headroom {
            break;
        }
        c_prime = &c_prime * &half;
    }

    let params = chain_params(inst, &c, &c_prime);

    // side-condition thresholds (exact rational ceilings)
    let m_tau = k as u64;
    let m_a = (&params.big_a / &(&c_prime * &params.c1))
        .pow_i(2)
        .ceil_u64()
        .ok_or(CertifyError::ThresholdScan(u64::MAX))?
        .max(1);
    let m_b = params
        .c2
        .pow_i(-2)
        .ceil_u64()
        .ok_or(CertifyError::ThresholdScan(u64::MAX))?
        .max(1);
    let mut side_conditions = vec![
        SideCondition {
            name: "tau-upper".into(),
            description: format!("tau_m <= 2s*m^k, so tau_m^(1/2k) <= c1*sqrt(m), for m >= k = {k}"),
            min_m: m_tau,
        },
        SideCondition {
            name: "a-absorb".into(),
            description: format!(
                "k(1 - T/s) = {} <= c'*c1*sqrt(m), so |a_i| <= c2*sqrt(m) with c2 = 2c'c1",
                params.big_a
            ),
            min_m: m_a,
        },
        SideCondition {
            name: "shift-absorb".into(),
            description: "c2*sqrt(m) >= 1, so |a_i - theta_i| <= c3*sqrt(m) with c3 = 2c2".into(),
            min_m: m_b,
        },
    ];
    if k >= 3 {
        let c8 = params.c8.as_ref().expect("k >= 3");
        let m_c = (&Rat::from_int(4) * &c8.pow_i(2))
            .ceil_u64()
            .ok_or(CertifyError::ThresholdScan(u64::MAX))?
            .max(1);
        side_conditions.push(SideCondition {
            name: "self-improve".into(),
            description: format!("c8*m^(-1/2) <= 1/2 with c8 = {c8}, so S2 < 2*c7"),
            min_m: m_c,
        });
    }

    // m0 = least m past all thresholds with c4(m) <= headroom
    let scan_cap = 10_000_000u64;
    let mut m0 = side_conditions.iter().map(|sc| sc.min_m).max().unwrap_or(1).max(1);
    while &c4_bound(inst, &c, &params, m0) > headroom {
        m0 += 1;
        if m0 > scan_cap {
            return Err(CertifyError::ThresholdScan(scan_cap));
        }
    }
    side_conditions.push(SideCondition {
        name: "sum-deduction".into(),
        description: format!("c4(m) <= headroom = {headroom} forces sum(a_i) = s"),
        min_m: m0,
    });

    let c4_at_m0 = c4_bound(inst, &c, &params, m0);
    let chain = Chain {
        c1: params.c1.clone(),
        c2: params.c2.clone(),
        c3: params.c3.clone(),
        c4_at_m0,
        c5: if k == 2 { Some(c.clone()) } else { None },
        c6: params.c6.clone(),
        c7: params.c7.clone(),
        c8: params.c8.clone(),
        side_conditions,
    };
    let mut cert = Certificate {
        inst: inst.clone(),
        headroom: headroom.clone(),
        c,
        c_prime,
        m0,
        theta_gap: big_l,
        chain,
        audit: Vec::new(),
    };
    cert.audit = check_certificate(&cert, m0);
    if let Some(bad) = cert.audit.iter().find(|e| !e.holds) {
        return Err(CertifyError::InvalidCertificate(bad.name.clone()));
    }
    Ok(cert)
}

/// Re-evaluate every chain inequality at a concrete `m` in exact rational
/// arithmetic. All entries hold whenever `m >= m0`.
pub fn check_certificate(cert: &Certificate, m: u64) -> Vec<AuditEntry> {
    let inst = &cert.inst;
    let k = inst.k();
    let m_rat = Rat::from_bigint(m.into());
    let params = chain_params(inst, &cert.c, &cert.c_prime);
    let mut out = Vec::new();

    out.push(AuditEntry::new("m >= m0", m_rat.clone(), ">=", Rat::from_bigint(cert.m0.into())));
    for sc in &cert.chain.side_conditions {
        out.push(AuditEntry::new(
            format!("side condition {}: m >= {}", sc.name, sc.min_m),
            m_rat.clone(),
            ">=",
            Rat::from_bigint(sc.min_m.into()),
        ));
    }
    out.push(AuditEntry::new(
        "c1^(2k) >= 2s",
        cert.chain.c1.pow_i(2 * k as i64),
        ">=",
        &Rat::from_int(2) * &inst.s_rat(),
    ));
    out.push(AuditEntry::new(
        "c2 == 2*c'*c1",
        cert.chain.c2.clone(),
        "==",
        params.c2.clone(),
    ));
    out.push(AuditEntry::new("c3 == 2*c2", cert.chain.c3.clone(), "==", params.c3.clone()));
    out.push(AuditEntry::new(
        "c4(m) <= headroom",
        c4_bound(inst, &cert.c, &params, m.max(1)),
        "<=",
        cert.headroom.clone(),
    ));
    if k == 2 {
        let c5 = cert.chain.c5.clone().unwrap_or_else(|| cert.c.clone());
        out.push(AuditEntry::new("c5 == c", c5.clone(), "==", cert.c.clone()));
        out.push(AuditEntry::new("branch k=2: c5 < L", c5, "<", cert.theta_gap.clone()));
    } else {
        let c7 = cert.chain.c7.clone().unwrap_or_else(Rat::zero);
        let c8 = cert.chain.c8.clone().unwrap_or_else(Rat::zero);
        out.push(AuditEntry::new(
            "c7 == c*c1^(2k-4)/binom(k,2)",
            c7.clone(),
            "==",
            params.c7.clone().expect("k >= 3"),
        ));
        out.push(AuditEntry::new(
            "c8 == c6/binom(k,2)",
            c8.clone(),
            "==",
            params.c8.clone().expect("k >= 3"),
        ));
        out.push(AuditEntry::new(
            "branch k>=3: 2*c7 < L",
            &Rat::from_int(2) * &c7,
            "<",
            cert.theta_gap.clone(),
        ));
        out.push(AuditEntry::new(
            "branch k>=3: 4*c8^2 <= m (i.e. c8*m^(-1/2) <= 1/2)",
            &Rat::from_int(4) * &c8.pow_i(2),
            "<=",
            m_rat.clone(),
        ));
    }
    out.push(AuditEntry::new(
        "L == theta gap lower bound",
        cert.theta_gap.clone(),
        "==",
        theta_gap_lower_bound(inst),
    ));
    out
}

/// Tolerance for verification: an exact rational certified strictly below
/// `c * tau^(1-2/k)`.
pub fn eta_below_bound(
    inst: &Instance,
    c: &Rat,
    tau: &Rat,
    prec: &Precision,
) -> Result<Rat, CertifyError> {
    let shrink = Rat::new(
        (BigInt::from(1) << 32) - 1,
        BigInt::from(1) << 32,
    );
    let rule = BoundSpec::eta_rule(c.clone(), inst.k());
    for p in prec.ladder() {
        match rule.eval(tau, p)? {
            BoundValue::Exact(v) => return Ok(&v * &shrink),
            BoundValue::Enclosure(b) => {
                let lb = b.inf_rat();
                if lb.is_positive() {
                    return Ok(&lb * &shrink);
                }
            }
        }
    }
    Err(CertifyError::InvalidCertificate("eta bound not certified positive".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Empty,
    Solutions,
    Undecided,
    Skipped,
}

impl From<Status> for Verdict {
    fn from(s: Status) -> Self {
        match s {
            Status::Empty => Verdict::Empty,
            Status::Solutions => Verdict::Solutions,
            Status::Undecided => Verdict::Undecided,
        }
    }
}

/// Result of exercising a certificate against exhaustive search.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub cert: Certificate,
    pub m_lo: u64,
    pub m_hi: u64,
    pub verdicts: Vec<(u64, Verdict)>,
    /// m >= m0 whose verdict is not Empty. Always empty for a sound chain.
    pub anomalies: Vec<u64>,
    /// m skipped for budget reasons (explicit gaps in the report).
    pub gaps: Vec<u64>,
}

/// Run the certified search at every witness in `[m_lo, m_hi]` with the
/// certificate's eta and radius rules, and collect anomalies.
pub fn verify_certificate(
    cert: &Certificate,
    m_lo: u64,
    m_hi: u64,
    prec: &Precision,
    budget: u64,
    parallelism: Parallelism,
) -> Result<VerificationReport, CertifyError> {
    assert!(m_lo >= 1 && m_lo <= m_hi);
    let ms: Vec<u64> = (m_lo..=m_hi).collect();
    let results = run_jobs(ms, parallelism.is_parallel(), |m| -> Result<(u64, Verdict), CertifyError> {
        let tau = tau_m_value(&cert.inst, m)?;
        let eta = eta_below_bound(&cert.inst, &cert.c, &tau, prec)?;
        let spec = SearchSpec {
            inst: cert.inst.clone(),
            tau: TauValue::exact(tau),
            eta: BoundSpec::absolute(eta),
            radius: BoundSpec::radius_rule(cert.c_prime.clone(), cert.inst.k()),
            rule_base: None,
            prec: *prec,
            budget,
            algorithm: crate::search::Algorithm::Auto,
            parallelism: Parallelism::Sequential,
            prune: true,
        };
        match search(&spec) {
            Ok(out) => Ok((m, Verdict::from(out.status))),
            Err(crate::search::SearchError::BudgetExceeded { .. }) => Ok((m, Verdict::Skipped)),
            Err(e) => Err(CertifyError::Search(e)),
        }
    });
    let mut verdicts = Vec::with_capacity(results.len());
    for r in results {
        verdicts.push(r?);
    }
    let anomalies = verdicts
        .iter()
        .filter(|(m, v)| *m >= cert.m0 && !matches!(v, Verdict::Empty | Verdict::Skipped))
        .map(|(m, _)| *m)
        .collect();
    let gaps = verdicts
        .iter()
        .filter(|(_, v)| matches!(v, Verdict::Skipped))
        .map(|(m, _)| *m)
        .collect();
    Ok(VerificationReport { cert: cert.clone(), m_lo, m_hi, verdicts, anomalies, gaps })
}

/// Gap constants: around a certified witness `tau0 = tau_m`, the system
/// with coefficients `(C, C')` has no solution for any tau within
/// `C0 * tau0^(1-2/k)`.
#[derive(Debug, Clone, Serialize)]
pub struct GapConstants {
    pub cert: Certificate,
    pub c0: Rat,
    /// Tolerance coefficient of system (C * tau^(1-2/k)).
    pub c_sys: Rat,
    /// Window coefficient of the system (C' * tau^(1/2k)).
    pub c_prime_sys: Rat,
    /// Center-shift constant: |(tau/s)^(1/k) - (tau0/s)^(1/k)| <= C1*delta*tau0^(1/k - 1).
    pub c1_center: Rat,
    /// Window closing constant, must satisfy C2 <= c'.
    pub c2_window: Rat,
    /// Tolerance closing constant, must satisfy C3 <= c.
    pub c3_tolerance: Rat,
    pub halvings: u32,
    pub audit: Vec<AuditEntry>,
}

/// Derive the gap constants from a certificate, halving `C0` until the
/// closing inequalities hold. `C = c/4` and `C' = c'/4` by fixed rule.
pub fn gap_constants(cert: &Certificate, c0_seed: &Rat) -> Result<GapConstants, CertifyError> {
    if !c0_seed.is_positive() {
        return Err(CertifyError::BadC0(c0_seed.clone()));
    }
    if let Some(bad) = check_certificate(cert, cert.m0).iter().find(|e| !e.holds) {
        return Err(CertifyError::InvalidCertificate(format!(
            "{}: {} {} {}",
            bad.name, bad.lhs, bad.cmp, bad.rhs
        )));
    }
    let k = cert.inst.k();
    let quarter = Rat::ratio(1, 4);
    let c_sys = &cert.c * &quarter;
    let c_prime_sys = &cert.c_prime * &quarter;
    let c1_center = Rat::ratio(2, k as i64);
    // rho: rational with rho^(2k) >= 2, for (tau0 + delta)^(1/2k) <= rho*tau0^(1/2k)
    let rho = grid_upper_root(&Rat::from_int(2), 2 * k);
    let mut c0 = c0_seed.clone();
    let mut halvings = 0u32;
    loop {
        let c2_window = &(&c_prime_sys * &rho) + &(&c1_center * &c0);
        let c3_tolerance = &(&Rat::from_int(2) * &c_sys) + &c0;
        let w_ok = c2_window <= cert.c_prime;
        let t_ok = c3_tolerance <= cert.c;
        if w_ok && t_ok {
            let audit = vec![
                AuditEntry::new("rho^(2k) >= 2", rho.pow_i(2 * k as i64), ">=", Rat::from_int(2)),
                AuditEntry::new(
                    "closing: C2 <= c'",
                    c2_window.clone(),
                    "<=",
                    cert.c_prime.clone(),
                ),
                AuditEntry::new("closing: C3 <= c", c3_tolerance.clone(), "<=", cert.c.clone()),
            ];
            return Ok(GapConstants {
                cert: cert.clone(),
                c0,
                c_sys,
                c_prime_sys,
                c1_center,
                c2_window,
                c3_tolerance,
                halvings,
                audit,
            });
        }
        halvings += 1;
        if halvings > 64 {
            let failing = if !w_ok { "C2 <= c'" } else { "C3 <= c" };
            return Err(CertifyError::ClosingFailed { failing: failing.into(), halvings });
        }
        c0 = &c0 * &Rat::ratio(1, 2);
    }
}
