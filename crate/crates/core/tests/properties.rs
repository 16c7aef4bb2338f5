//! Property tests for the arithmetic and search invariants.

use proptest::prelude::*;

use shifted_waring::model::{validate_instance, BoundSpec, Precision, RawInstance};
use shifted_waring::search::{residual_exact, residual_enclosure, search, SearchSpec, TauValue};
use shifted_waring::witness::tau_m_value;
use shifted_waring::{cmp_lt, Ball, Parallelism, Rat, TriBool};

fn rat_strategy() -> impl Strategy<Value = Rat> {
    (-2000i64..2000, 1i64..60).prop_map(|(n, d)| Rat::ratio(n, d))
}

fn theta_strategy(s: usize) -> impl Strategy<Value = Vec<String>> {
    proptest::collection::vec((1u32..19, 19u32..40), s)
        .prop_map(|ps| ps.into_iter().map(|(p, q)| format!("{p}/{q}")).collect())
}

proptest! {
    /// cmp_lt never contradicts the exact order on exact inputs.
    #[test]
    fn cmp_lt_sound_on_exact_rationals(a in rat_strategy(), b in rat_strategy()) {
        let ba = Ball::from_rat(&a, 128);
        let bb = Ball::from_rat(&b, 128);
        match cmp_lt(&ba, &bb) {
            TriBool::True => prop_assert!(a < b),
            TriBool::False => prop_assert!(a >= b),
            TriBool::Unknown => {
                // only near-coincident enclosures may stay undecided
                prop_assert!(ba.contains_rat(&b) || bb.contains_rat(&a) || a == b);
            }
        }
    }

    /// pow_u agrees with iterated multiplication up to containment.
    #[test]
    fn pow_matches_iterated_mul(a in rat_strategy(), j in 0u32..6) {
        let ball = Ball::from_rat(&a, 128);
        let powed = ball.pow_u(j);
        let mut iter = Ball::from_int(1, 128);
        for _ in 0..j {
            iter = iter.mul(&ball);
        }
        let exact = a.pow_i(j as i64);
        prop_assert!(powed.contains_rat(&exact));
        prop_assert!(iter.contains_rat(&exact));
    }

    /// Root then power returns an enclosure of the radicand.
    #[test]
    fn root_power_round_trip(n in 1i64..100_000, k in 1u32..6) {
        let ball = Ball::from_int(n, 128);
        let root = ball.root(k, 128).unwrap();
        prop_assert!(root.pow_u(k).contains_rat(&Rat::from_int(n)));
    }

    /// Validation is idempotent: a valid instance re-validates to itself.
    #[test]
    fn validate_idempotent(theta in theta_strategy(3), k in 2u32..5) {
        let raw = RawInstance { s: 3, k, theta };
        if let Ok(inst) = validate_instance(&raw) {
            let again = validate_instance(&raw).unwrap();
            prop_assert_eq!(inst, again);
        }
    }

    /// tau_m is strictly increasing in m.
    #[test]
    fn tau_monotone(theta in theta_strategy(2), k in 2u32..5, m in 1u64..200) {
        let inst = validate_instance(&RawInstance { s: 2, k, theta }).unwrap();
        let a = tau_m_value(&inst, m).unwrap();
        let b = tau_m_value(&inst, m + 1).unwrap();
        prop_assert!(b > a);
    }

    /// k = 2 residual identity: for tau = tau_m and x = m + a with
    /// sum(a) = s, the residual is exactly sum (a_i - theta_i)^2.
    #[test]
    fn k2_residual_identity(
        theta in theta_strategy(2),
        m in 5i64..60,
        a0 in -3i64..6,
    ) {
        let inst = validate_instance(&RawInstance { s: 2, k: 2, theta }).unwrap();
        let a1 = 2 - a0; // force sum(a) = s = 2
        let tau = tau_m_value(&inst, m as u64).unwrap();
        let x = [m + a0, m + a1];
        prop_assume!(x[0] >= 1 && x[1] >= 1);
        let expected = [a0, a1]
            .iter()
            .zip(inst.theta())
            .map(|(ai, ti)| (&Rat::from_int(*ai) - ti).pow_i(2))
            .fold(Rat::zero(), |acc, v| &acc + &v);
        prop_assert_eq!(residual_exact(&inst, &x, &tau), expected);
    }

    /// The residual enclosure always contains the exact residual.
    #[test]
    fn residual_enclosure_contains_exact(
        theta in theta_strategy(2),
        x0 in 1i64..50,
        x1 in 1i64..50,
        tau_num in 1i64..5000,
        tau_den in 1i64..7,
    ) {
        let inst = validate_instance(&RawInstance { s: 2, k: 3, theta }).unwrap();
        let tau = Rat::ratio(tau_num, tau_den);
        let exact = residual_exact(&inst, &[x0, x1], &tau);
        let ball = residual_enclosure(&inst, &[x0, x1], &TauValue::exact(tau), 128);
        prop_assert!(ball.contains_rat(&exact));
    }

    /// Raising the precision cap can only move Undecided toward a decision:
    /// Empty and Solutions never flip.
    #[test]
    fn refinement_never_flips_verdicts(
        theta in theta_strategy(2),
        m in 4u64..20,
        eta_num in 1i64..40,
    ) {
        let inst = validate_instance(&RawInstance { s: 2, k: 2, theta }).unwrap();
        let tau = tau_m_value(&inst, m).unwrap();
        let mk = |prec: Precision| {
            let mut s = SearchSpec::new(
                inst.clone(),
                TauValue::exact(tau.clone()),
                BoundSpec::absolute(Rat::ratio(eta_num, 20)),
                BoundSpec::radius_rule(Rat::ratio(1, 2), 2),
            );
            s.prec = prec;
            s.parallelism = Parallelism::Sequential;
            s
        };
        let coarse = search(&mk(Precision::new(32, 64))).unwrap();
        let fine = search(&mk(Precision::new(32, 4096))).unwrap();
        use shifted_waring::search::Status;
        match coarse.status {
            Status::Empty => prop_assert_eq!(fine.status, Status::Empty),
            Status::Solutions => prop_assert_eq!(fine.status, Status::Solutions),
            Status::Undecided => {}
        }
    }
}
