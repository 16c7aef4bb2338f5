//! The witness family `tau_m = s*m^k + k*m^(k-1)*(s - sum theta_i)` and the
//! diagonal geometry around it.
//!
//! Along this family the constrained approximation problem has no solutions
//! once `m` clears the certificate threshold; everything downstream (verify,
//! gap scans, phase sweeps) samples `tau` from it. The value is kept exact:
//! the `k = 2` acceptance identities need exact residuals.

use serde::Serialize;
use thiserror::Error;

use crate::ball::{Ball, Dyadic, Rat};
use crate::model::{Instance, Precision};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WitnessError {
    #[error("m must be >= 1")]
    ZeroM,
    #[error("tau must be certified positive")]
    NonPositiveTau,
    #[error("nearest integer to the center undecided at precision cap (candidates {lo}, {hi})")]
    UndecidedNearest { lo: i64, hi: i64 },
    #[error(transparent)]
    Ball(#[from] crate::ball::BallError),
}

/// One member of the witness family, with its diagonal center enclosure.
#[derive(Debug, Clone, Serialize)]
pub struct WitnessTau {
    pub m: u64,
    pub tau: Rat,
    pub theta_sum: Rat,
    pub center: Ball,
    /// Nearest integer to the center (ties broken downward).
    pub m_hat: i64,
}

/// Exact `tau_m`.
pub fn tau_m_value(inst: &Instance, m: u64) -> Result<Rat, WitnessError> {
    if m == 0 {
        return Err(WitnessError::ZeroM);
    }
    let mr = Rat::from_bigint(m.into());
    let k = inst.k() as i64;
    let s = inst.s_rat();
    let lead = &s * &mr.pow_i(k);
    let slack = &(&Rat::from_int(k) * &mr.pow_i(k - 1)) * &(&s - &inst.theta_sum());
    Ok(&lead + &slack)
}

/// Construct the witness with its center enclosure at the given precision.
pub fn tau_m(inst: &Instance, m: u64, prec: &Precision) -> Result<WitnessTau, WitnessError> {
    let tau = tau_m_value(inst, m)?;
    let (center, m_hat) = center_m(inst, &tau, prec)?;
    Ok(WitnessTau { m, tau, theta_sum: inst.theta_sum(), center, m_hat })
}

/// Enclosure of the diagonal center `(tau/s)^(1/k)` and the nearest integer
/// to it, ties broken downward. The nearest integer is certified: if the
/// enclosure still straddles a half-integer at the precision cap, an
/// `UndecidedNearest` error carries both candidates.
pub fn center_m(
    inst: &Instance,
    tau: &Rat,
    prec: &Precision,
) -> Result<(Ball, i64), WitnessError> {
    if !tau.is_positive() {
        return Err(WitnessError::NonPositiveTau);
    }
    let ratio = tau / &inst.s_rat();
    let mut last: Option<Ball> = None;
    for p in prec.ladder() {
        let center = Ball::from_rat(&ratio, p).root(inst.k(), p)?;
        // nearest integer with ties down is ceil(x - 1/2); certified when
        // the shifted enclosure lies inside a single unit interval (n-1, n]
        let shifted_lo = center.inf().sub(&Dyadic::new(1.into(), -1));
        let shifted_hi = center.sup().sub(&Dyadic::new(1.into(), -1));
        let n_lo = shifted_lo.ceil_bigint();
        let n_hi = shifted_hi.ceil_bigint();
        if n_lo == n_hi {
            let n = i64::try_from(&n_lo).expect("center within i64 range");
            return Ok((center, n));
        }
        last = Some(center);
    }
    let center = last.expect("precision ladder is nonempty");
    let lo = center.inf().sub(&Dyadic::new(1.into(), -1)).ceil_bigint();
    let hi = center.sup().sub(&Dyadic::new(1.into(), -1)).ceil_bigint();
    Err(WitnessError::UndecidedNearest {
        lo: i64::try_from(&lo).unwrap_or(i64::MIN),
        hi: i64::try_from(&hi).unwrap_or(i64::MAX),
    })
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

    #[test]
    fn tau_examples() {
        let i = inst(2, 2, &["3/10", "7/10"]);
        assert_eq!(tau_m_value(&i, 10).unwrap(), Rat::from_int(220));

        let i = inst(2, 2, &["1/4", "1/4"]);
        assert_eq!(tau_m_value(&i, 10).unwrap(), Rat::from_int(230));

        let i = inst(3, 3, &["1/4", "1/2", "3/4"]);
        assert_eq!(tau_m_value(&i, 5).unwrap(), Rat::ratio(975, 2)); // 487.5
    }

    #[test]
    fn tau_strictly_increasing() {
        let i = inst(3, 3, &["1/4", "1/2", "3/4"]);
        let mut prev = tau_m_value(&i, 1).unwrap();
        for m in 2..60 {
            let cur = tau_m_value(&i, m).unwrap();
            assert!(cur > prev, "tau_{m} not larger");
            prev = cur;
        }
    }

    #[test]
    fn center_of_tau_220() {
        let i = inst(2, 2, &["3/10", "7/10"]);
        let prec = Precision::default();
        let (center, m_hat) = center_m(&i, &Rat::from_int(220), &prec).unwrap();
        assert_eq!(m_hat, 10);
        // center^2 must enclose 110
        assert!(center.pow_u(2).contains_rat(&Rat::from_int(110)));
    }

    #[test]
    fn center_exact_perfect_square() {
        let i = inst(2, 2, &["3/10", "7/10"]);
        let (center, m_hat) = center_m(&i, &Rat::from_int(200), &Precision::default()).unwrap();
        assert_eq!(m_hat, 10);
        assert!(center.is_exact());
        assert_eq!(center.mid(), &Dyadic::from_int(10));
    }

    #[test]
    fn center_tie_breaks_downward() {
        // tau/s = 110.25 = 10.5^2 exactly
        let i = inst(2, 2, &["3/10", "7/10"]);
        let tau = Rat::ratio(441, 2); // 220.5
        let (center, m_hat) = center_m(&i, &tau, &Precision::default()).unwrap();
        assert!(center.is_exact());
        assert_eq!(m_hat, 10);
    }

    #[test]
    fn nonpositive_tau_rejected() {
        let i = inst(2, 2, &["3/10", "7/10"]);
        assert!(matches!(
            center_m(&i, &Rat::zero(), &Precision::default()),
            Err(WitnessError::NonPositiveTau)
        ));
        assert!(center_m(&i, &Rat::from_int(-5), &Precision::default()).is_err());
    }

    /// The center always lies in (m, m + (1 - sum(theta)/s)); the nearest
    /// integer is m or m+1, and exactly m whenever 1 - sum(theta)/s <= 1/2.
    #[test]
    fn center_bracketing_property() {
        let prec = Precision::default();
        for (s, k, theta) in [
            (2u32, 2u32, vec!["3/10", "7/10"]),
            (3, 2, vec!["1/4", "1/2", "3/4"]),
            (2, 3, vec!["3/10", "7/10"]),
            (3, 3, vec!["1/4", "1/2", "3/4"]),
            (2, 2, vec!["1/4", "1/4"]), // delta = 3/4 > 1/2: m_hat may be m+1
        ] {
            let i = inst(s, k, &theta);
            let delta = &Rat::one() - &(&i.theta_sum() / &i.s_rat());
            for m in [1u64, 2, 3, 5, 10, 50, 200] {
                let w = tau_m(&i, m, &prec).unwrap();
                let lower = Rat::from_bigint(m.into());
                let upper = &lower + &delta;
                // certified: enclosure strictly inside (m, m + delta)
                assert!(w.center.inf_rat() > lower, "center <= m at m={m}");
                assert!(w.center.sup_rat() < upper, "center >= m+delta at m={m}");
                assert!(w.m_hat == m as i64 || w.m_hat == m as i64 + 1);
                if delta <= Rat::ratio(1, 2) {
                    assert_eq!(w.m_hat, m as i64);
                }
            }
        }
    }

    #[test]
    fn ball_recomputation_contains_exact_tau() {
        let i = inst(3, 3, &["1/4", "1/2", "3/4"]);
        for m in [1u64, 7, 31] {
            let tau = tau_m_value(&i, m).unwrap();
            // recompute via ball arithmetic: s*m^k + k*m^(k-1)*(s - T)
            let p = 128;
            let mb = Ball::from_int(m as i64, p);
            let sb = Ball::from_rat(&i.s_rat(), p);
            let kb = Ball::from_int(i.k() as i64, p);
            let tb = Ball::from_rat(&i.theta_sum(), p);
            let ball = sb
                .mul(&mb.pow_u(i.k()))
                .add(&kb.mul(&mb.pow_u(i.k() - 1)).mul(&sb.sub(&tb)));
            assert!(ball.contains_rat(&tau));
        }
    }
}
