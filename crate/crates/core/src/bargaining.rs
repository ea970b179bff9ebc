//! Nash-bargaining settlement of the sharing reward and the cross-scenario
//! benefit comparison.
//!
//! In the sharing scenarios the CP and the designated sharer pull the reward
//! in opposite directions; their conflicting objectives are linear in the
//! reward and their sum does not depend on it, so both settle on the midpoint.
//! The solved reward makes the raw benefit forms coincide with the
//! equilibrium forms in [`crate::benefits`]. When everyone is premium, no
//! user may take part in the bargaining and the only price that would balance
//! the remaining conflict is a zero premium price, which is rejected.

use num::Signed;

use crate::benefits::{self, BenefitError};
use crate::model::{Cohort, Money, MoneyRate, NormalizedPrices, PriceSchedule, Scenario};
use crate::numeric::{int, ratio, uint, Rat};

/// Bargaining is undefined for the cohort: nobody can share.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BargainError {
    #[error("no bargain: {0}")]
    NoBargain(&'static str),
}

/// The two conflicting objectives and their midpoint, all per byte (the file
/// size factors out of the bargaining).
#[derive(Debug, Clone, PartialEq)]
pub struct BargainState {
    /// CP's objective: what the CP would maximize by squeezing the reward.
    pub cp_objective: Rat,
    /// Sharer's objective: what the sharer would maximize by raising it.
    pub user_objective: Rat,
    /// The settlement value `(cp_objective + user_objective) / 2`.
    pub midpoint: Rat,
}

impl BargainState {
    fn new(cp_objective: Rat, user_objective: Rat) -> Self {
        let midpoint = (&cp_objective + &user_objective) * ratio(1, 2);
        BargainState {
            cp_objective,
            user_objective,
            midpoint,
        }
    }
}

/// Outcome of solving the bargaining problem for one cohort.
#[derive(Debug, Clone, PartialEq)]
pub enum NbsResult {
    /// The reward that puts both objectives exactly on the midpoint.
    Settled {
        reward: MoneyRate,
        state: BargainState,
    },
    /// All-premium audience: the balancing premium price would be zero,
    /// which no CP would set, so no settlement is offered.
    NoEquilibrium,
    /// Nothing is shared (fewer than two users, or exactly one standard
    /// user), so there is no reward to bargain over.
    NoBargain,
}

/// Evaluates the two objectives at the schedule's current reward.
pub fn bargain_state(
    schedule: &PriceSchedule,
    cohort: &Cohort,
) -> Result<BargainState, BargainError> {
    let x = uint(cohort.users());
    let y = uint(cohort.premium());
    let p_b = schedule.premium_price.rat();
    let p_std = schedule.standard_price.rat();
    let p_u = schedule.share_reward.rat();
    match cohort.scenario() {
        Scenario::AllStandard => {
            if cohort.users() < 2 {
                return Err(BargainError::NoBargain(
                    "a single user has nobody to share with",
                ));
            }
            let shares = &x - int(1);
            Ok(BargainState::new(
                p_std * &x - p_u * &shares,
                p_u * &shares - p_std,
            ))
        }
        Scenario::AllPremium => Err(BargainError::NoBargain(
            "premium users do not share, so no user can take part",
        )),
        Scenario::Mixed => {
            if cohort.standard() < 2 {
                return Err(BargainError::NoBargain(
                    "exactly one standard user means zero shares",
                ));
            }
            let shares = &x - &y - int(1);
            Ok(BargainState::new(
                p_b * &y + p_std * (&x - &y) - p_u * &shares,
                p_u * &shares - p_std,
            ))
        }
    }
}

/// Solves for the reward that settles both parties on the midpoint.
///
/// The schedule's own reward is ignored; it is the unknown being solved for.
pub fn nbs_reward(schedule: &PriceSchedule, cohort: &Cohort) -> NbsResult {
    let x = uint(cohort.users());
    let y = uint(cohort.premium());
    let p_b = schedule.premium_price.rat();
    let p_std = schedule.standard_price.rat();
    let reward = match cohort.scenario() {
        Scenario::AllPremium => return NbsResult::NoEquilibrium,
        Scenario::AllStandard => {
            if cohort.users() < 2 {
                return NbsResult::NoBargain;
            }
            // Solve p_u*(x-1) - p_std = p_std*(x-1)/2.
            p_std * (&x + int(1)) / ((&x - int(1)) * int(2))
        }
        Scenario::Mixed => {
            if cohort.standard() < 2 {
                return NbsResult::NoBargain;
            }
            // Solve p_u*(x-y-1) - p_std = (p_b*y + p_std*(x-y-1))/2.
            let shares = &x - &y - int(1);
            (p_b * &y + p_std * (&x - &y + int(1))) / (&shares * int(2))
        }
    };
    let reward = MoneyRate::new(reward).expect("prices are nonnegative, so is the solved reward");
    let state = bargain_state(&schedule.with_share_reward(reward.clone()), cohort)
        .expect("settled cohorts are bargainable");
    debug_assert_eq!(state.cp_objective, state.user_objective);
    NbsResult::Settled { reward, state }
}

/// True iff the schedule's reward already is the settlement: the raw benefit
/// forms then equal the equilibrium forms exactly.
pub fn verify_equilibrium(
    schedule: &PriceSchedule,
    cohort: &Cohort,
) -> Result<bool, BargainError> {
    bargain_state(schedule, cohort)?;
    let cp_eq = benefits::ben_cp_eq(schedule, cohort)
        .expect("bargainable cohorts are non-degenerate");
    let user_eq = benefits::ben_user_eq(schedule, cohort)
        .expect("bargainable cohorts are non-degenerate");
    Ok(benefits::ben_cp_raw(schedule, cohort) == cp_eq
        && benefits::ben_sharer_raw(schedule, cohort) == user_eq)
}

/// Gradient of the mixed-scenario midpoint with respect to the two prices:
/// `(f*y/2, f*(x-y-1)/2)`.
///
/// Both components are strictly positive whenever at least one share occurs,
/// so the midpoint has no interior maximum on the feasible price set: raising
/// either price always helps both parties.
pub fn interior_max_witness(cohort: &Cohort) -> Result<(Rat, Rat), BenefitError> {
    if cohort.scenario() != Scenario::Mixed {
        return Err(BenefitError::DegenerateCohort {
            x: cohort.users(),
            y: cohort.premium(),
            requirement: "a mixed audience (1 <= y <= x-1)",
        });
    }
    let f = uint(cohort.file_size());
    let half = ratio(1, 2);
    let d_premium = &f * uint(cohort.premium()) * &half;
    let d_standard = &f * uint(cohort.standard() - 1) * &half;
    Ok((d_premium, d_standard))
}

/// Which pricing constraints are strong enough to make the all-premium
/// scenario dominate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DominanceThresholds {
    /// `2m > n + 2`: the exact condition for all-premium dominance.
    pub two_m_gt_n_plus_2: bool,
    /// `m > 1.5`: the looser sufficient condition given `n > 1`.
    pub m_gt_1_5: bool,
}

/// Gaps between the all-premium equilibrium CP benefit and the other two.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    /// All-premium minus all-standard.
    pub delta_21: Money,
    /// All-premium minus mixed at the given premium count.
    pub delta_23: Money,
    /// Scenario with the highest equilibrium CP benefit; ties resolve to
    /// all-premium first, then all-standard.
    pub dominant: Scenario,
    pub thresholds: DominanceThresholds,
}

/// Compares the CP's equilibrium benefit across the three scenarios at one
/// audience size, by direct subtraction of the closed forms.
///
/// `np.k` is ignored; the premium count for the mixed scenario is the
/// explicit `premium` argument (0 makes the mixed term collapse onto the
/// all-standard one).
pub fn compare_cp(
    np: &NormalizedPrices,
    users: u64,
    premium: u64,
    delivery_fee: &MoneyRate,
    file_size: u64,
) -> Result<ComparisonReport, BenefitError> {
    if users < 2 || premium >= users {
        return Err(BenefitError::DegenerateCohort {
            x: users,
            y: premium,
            requirement: "x >= 2 and 0 <= y < x",
        });
    }
    let (premium_price, standard_price) = np.denormalize(delivery_fee);
    let schedule = PriceSchedule::new(
        delivery_fee.clone(),
        premium_price,
        standard_price,
        MoneyRate::zero(),
        MoneyRate::zero(),
    );
    let all_premium = benefits::ben_cp_eq(
        &schedule,
        &Cohort::new(users, users, file_size).expect("valid cohort"),
    )
    .expect("all-premium has no equilibrium precondition");
    let all_standard = benefits::ben_cp_eq(
        &schedule,
        &Cohort::new(users, 0, file_size).expect("valid cohort"),
    )
    .expect("x >= 2 checked above");
    let at_premium_count = benefits::ben_cp_eq(
        &schedule,
        &Cohort::new(users, premium, file_size).expect("valid cohort"),
    )
    .expect("y < x checked above");

    let delta_21 = Money::new(all_premium.rat() - all_standard.rat());
    let delta_23 = Money::new(all_premium.rat() - at_premium_count.rat());

    let two = int(2);
    let thresholds = DominanceThresholds {
        two_m_gt_n_plus_2: &np.m * &two > &np.n + &two,
        m_gt_1_5: np.m > ratio(3, 2),
    };
    let dominant = if all_premium.rat() >= all_standard.rat()
        && all_premium.rat() >= at_premium_count.rat()
    {
        Scenario::AllPremium
    } else if all_standard.rat() >= at_premium_count.rat() {
        Scenario::AllStandard
    } else {
        Scenario::Mixed
    };
    Ok(ComparisonReport {
        delta_21,
        delta_23,
        dominant,
        thresholds,
    })
}

/// The printed expansion of the all-premium vs all-standard gap:
/// `f*p_n*((2m - n - 2)*x + n + 2)/2`. Equals direct subtraction.
pub fn delta_21_expansion(np: &NormalizedPrices, users: u64, delivery_fee: &MoneyRate, file_size: u64) -> Money {
    let two = int(2);
    let x = uint(users);
    let inner = (&np.m * &two - &np.n - &two) * &x + &np.n + &two;
    Money::new(uint(file_size) * delivery_fee.rat() * inner * ratio(1, 2))
}

/// The expanded all-premium vs mixed gap:
/// `f*p_n*((2m - n - 2)*x + (n + 2 - m)*y + n + 2)/2`. Equals direct
/// subtraction; note the `y` coefficient is `n + 2 - m`.
pub fn delta_23_expansion(
    np: &NormalizedPrices,
    users: u64,
    premium: u64,
    delivery_fee: &MoneyRate,
    file_size: u64,
) -> Money {
    let two = int(2);
    let x = uint(users);
    let y = uint(premium);
    let inner =
        (&np.m * &two - &np.n - &two) * &x + (&np.n + &two - &np.m) * &y + &np.n + &two;
    Money::new(uint(file_size) * delivery_fee.rat() * inner * ratio(1, 2))
}

/// Searches upward for an audience size where the all-standard scenario
/// overtakes the all-premium one; exists whenever `2m < n + 2`.
pub fn delta_21_sign_flip_witness(
    np: &NormalizedPrices,
    delivery_fee: &MoneyRate,
    max_users: u64,
) -> Option<u64> {
    (2..=max_users).find(|&x| {
        delta_21_expansion(np, x, delivery_fee, 1)
            .rat()
            .is_negative()
    })
}

#[cfg(test)]
mod tests {
    use num::{One, Zero};
    use proptest::prelude::*;

    use super::*;
    use crate::numeric::to_f64;

    fn rate(s: &str) -> MoneyRate {
        MoneyRate::parse(s).unwrap()
    }

    fn schedule(p_n: &str, p_b: &str, p_std: &str, p_u: &str, s: &str) -> PriceSchedule {
        PriceSchedule::new(rate(p_n), rate(p_b), rate(p_std), rate(p_u), rate(s))
    }

    fn cohort(x: u64, y: u64) -> Cohort {
        Cohort::new(x, y, 1).unwrap()
    }

    /// Independent check of the closed-form reward: bisection on the
    /// objective gap, which is strictly decreasing in the reward.
    fn bisect_reward(schedule: &PriceSchedule, cohort: &Cohort) -> f64 {
        let gap = |p_u: f64| -> f64 {
            let x = cohort.users() as f64;
            let y = cohort.premium() as f64;
            let p_b = to_f64(schedule.premium_price.rat());
            let p_std = to_f64(schedule.standard_price.rat());
            let (cp, user) = match cohort.scenario() {
                Scenario::AllStandard => {
                    (p_std * x - p_u * (x - 1.0), p_u * (x - 1.0) - p_std)
                }
                Scenario::Mixed => (
                    p_b * y + p_std * (x - y) - p_u * (x - y - 1.0),
                    p_u * (x - y - 1.0) - p_std,
                ),
                Scenario::AllPremium => unreachable!("not bargainable"),
            };
            cp - user
        };
        let mut lo = 0.0_f64;
        let mut hi = 1.0_f64;
        while gap(hi) > 0.0 {
            hi *= 2.0;
            assert!(hi < 1e12, "no sign change found");
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if gap(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn state_all_standard_at_zero_reward() {
        let s = schedule("1", "4", "2", "0", "0");
        let state = bargain_state(&s, &cohort(10, 0)).unwrap();
        assert_eq!(state.cp_objective, int(20));
        assert_eq!(state.user_objective, int(-2));
        assert_eq!(state.midpoint, int(9));
    }

    #[test]
    fn state_mixed_at_the_settled_reward() {
        let s = schedule("1", "4", "2", "4", "0");
        let state = bargain_state(&s, &cohort(10, 5)).unwrap();
        assert_eq!(state.cp_objective, int(14));
        assert_eq!(state.user_objective, int(14));
        assert_eq!(state.midpoint, int(14));
    }

    #[test]
    fn state_refuses_single_share_free_cohorts() {
        let s = schedule("1", "4", "2", "1", "0");
        assert!(bargain_state(&s, &cohort(2, 1)).is_err());
        assert!(bargain_state(&s, &cohort(1, 0)).is_err());
        assert!(bargain_state(&s, &cohort(10, 10)).is_err());
    }

    #[test]
    fn reward_all_standard() {
        let s = schedule("1", "4", "2", "0", "0");
        match nbs_reward(&s, &cohort(10, 0)) {
            NbsResult::Settled { reward, state } => {
                assert_eq!(reward.rat(), &ratio(11, 9));
                assert_eq!(state.cp_objective, int(9));
                assert_eq!(state.user_objective, int(9));
            }
            other => panic!("expected settlement, got {:?}", other),
        }
    }

    #[test]
    fn reward_mixed() {
        let s = schedule("1", "4", "2", "0", "0");
        match nbs_reward(&s, &cohort(10, 5)) {
            NbsResult::Settled { reward, state } => {
                assert_eq!(reward.rat(), &int(4));
                assert_eq!(state.midpoint, int(14));
            }
            other => panic!("expected settlement, got {:?}", other),
        }
    }

    #[test]
    fn reward_all_premium_has_no_equilibrium() {
        let s = schedule("1", "4", "2", "0", "0");
        assert_eq!(nbs_reward(&s, &cohort(10, 10)), NbsResult::NoEquilibrium);
    }

    #[test]
    fn reward_degenerate_cohorts_have_no_bargain() {
        let s = schedule("1", "4", "2", "0", "0");
        assert_eq!(nbs_reward(&s, &cohort(1, 0)), NbsResult::NoBargain);
        assert_eq!(nbs_reward(&s, &cohort(5, 4)), NbsResult::NoBargain);
    }

    #[test]
    fn closed_form_reward_matches_numeric_root() {
        for (x, y) in [(10, 0), (10, 5), (3, 1), (40, 13), (7, 0)] {
            let s = schedule("1", "4", "2", "0", "0.1");
            let c = cohort(x, y);
            match nbs_reward(&s, &c) {
                NbsResult::Settled { reward, .. } => {
                    let numeric = bisect_reward(&s, &c);
                    let closed = to_f64(reward.rat());
                    assert!(
                        (closed - numeric).abs() <= 1e-9 * closed.abs().max(1.0),
                        "closed {} vs numeric {} at x={} y={}",
                        closed,
                        numeric,
                        x,
                        y
                    );
                }
                other => panic!("expected settlement at x={} y={}, got {:?}", x, y, other),
            }
        }
    }

    #[test]
    fn verify_accepts_settled_rewards() {
        let s = schedule("1", "4", "2", "11/9", "0.1");
        assert!(verify_equilibrium(&s, &cohort(10, 0)).unwrap());
        let s = schedule("1", "4", "2", "4", "0.1");
        assert!(verify_equilibrium(&s, &cohort(10, 5)).unwrap());
    }

    #[test]
    fn verify_rejects_off_equilibrium_rewards() {
        let s = schedule("1", "4", "2", "5", "0.1");
        assert!(!verify_equilibrium(&s, &cohort(10, 5)).unwrap());
    }

    #[test]
    fn witness_gradients() {
        let grad = interior_max_witness(&cohort(10, 5)).unwrap();
        assert_eq!(grad, (ratio(5, 2), int(2)));
        // Boundary: one premium, one standard — flat in the standard price.
        let grad = interior_max_witness(&cohort(2, 1)).unwrap();
        assert_eq!(grad, (ratio(1, 2), Rat::zero()));
        // Linear in the file size.
        let grad = interior_max_witness(&Cohort::new(10, 5, 3).unwrap()).unwrap();
        assert_eq!(grad, (ratio(15, 2), int(6)));
        assert!(interior_max_witness(&cohort(10, 0)).is_err());
        assert!(interior_max_witness(&cohort(10, 10)).is_err());
    }

    #[test]
    fn comparison_at_the_canonical_point() {
        let np = NormalizedPrices::from_m_n_k(int(4), int(2), Rat::zero()).unwrap();
        let report = compare_cp(&np, 10, 5, &rate("1"), 1).unwrap();
        assert_eq!(report.delta_21, Money::new(int(22)));
        assert_eq!(report.delta_23, Money::new(int(22)));
        assert_eq!(report.dominant, Scenario::AllPremium);
        assert!(report.thresholds.two_m_gt_n_plus_2);
        assert!(report.thresholds.m_gt_1_5);
    }

    #[test]
    fn comparison_near_the_threshold() {
        let np = NormalizedPrices::from_m_n_k(ratio(11, 5), int(2), Rat::zero()).unwrap();
        let report = compare_cp(&np, 10, 5, &rate("1"), 1).unwrap();
        assert_eq!(report.delta_21, Money::new(int(4)));
        assert!(report.thresholds.two_m_gt_n_plus_2); // 4.4 > 4
    }

    #[test]
    fn comparison_low_margin_large_audience() {
        // Expected value fixed by the direct subtraction of the benefit
        // forms: ben2 - ben1 = 1.05*100 - (2*99/2 - 1) = 7.
        let np = NormalizedPrices::from_m_n_k(ratio(41, 20), int(2), Rat::zero()).unwrap();
        let p_n = rate("1");
        let (p_b, p_std) = np.denormalize(&p_n);
        let s = PriceSchedule::new(p_n.clone(), p_b, p_std, rate("0"), rate("0"));
        let direct = benefits::ben_cp_eq(&s, &cohort(100, 100)).unwrap().into_rat()
            - benefits::ben_cp_eq(&s, &cohort(100, 0)).unwrap().into_rat();
        assert_eq!(direct, int(7));

        let report = compare_cp(&np, 100, 0, &rate("1"), 1).unwrap();
        assert_eq!(report.delta_21.rat(), &direct);
        assert!(report.thresholds.two_m_gt_n_plus_2); // 4.1 > 4
        assert!(report.delta_21.rat().is_positive());
    }

    #[test]
    fn sign_flip_witness_exists_below_threshold() {
        // 2m = 2.8 < n + 2 = 4: the x coefficient is negative.
        let np = NormalizedPrices::from_m_n_k(ratio(7, 5), ratio(13, 10), Rat::zero()).unwrap();
        let x = delta_21_sign_flip_witness(&np, &rate("1"), 10_000)
            .expect("a sign flip must exist");
        assert!(delta_21_expansion(&np, x, &rate("1"), 1).rat().is_negative());
        assert!(!delta_21_expansion(&np, x - 1, &rate("1"), 1).rat().is_negative());
    }

    prop_compose! {
        /// m > n > 1 with rational tenths, audience up to 40.
        fn normalized_point()(
            n_num in 11i64..40,
            gap in 1i64..30,
            x in 2u64..40,
        ) -> (NormalizedPrices, u64) {
            let n = ratio(n_num, 10);
            let m = &n + ratio(gap, 10);
            (NormalizedPrices::from_m_n_k(m, n, Rat::zero()).unwrap(), x)
        }
    }

    proptest! {
        /// The objective sum is independent of the reward, so the midpoint
        /// is too.
        #[test]
        fn reward_cancels_from_the_objective_sum(
            x in 2u64..40,
            y_frac in 0.0f64..0.9,
            a in 0i64..40,
            b in 1i64..40,
        ) {
            let y = ((x as f64) * y_frac) as u64;
            let c = cohort(x, y.min(x.saturating_sub(2)));
            let s1 = schedule("1", "4", "2", "0", "0").with_share_reward(rate(&a.to_string()));
            let s2 = schedule("1", "4", "2", "0", "0")
                .with_share_reward(MoneyRate::new(ratio(b, 7)).unwrap());
            let st1 = bargain_state(&s1, &c).unwrap();
            let st2 = bargain_state(&s2, &c).unwrap();
            prop_assert_eq!(
                &st1.cp_objective + &st1.user_objective,
                &st2.cp_objective + &st2.user_objective
            );
            prop_assert_eq!(st1.midpoint, st2.midpoint);
        }

        /// The solved reward is an exact fixed point: both objectives land
        /// on the midpoint, and substituting the reward back makes every raw
        /// form equal its equilibrium form.
        #[test]
        fn settled_reward_is_an_exact_fixed_point(
            x in 2u64..40,
            y_frac in 0.0f64..0.9,
            pstd_num in 11i64..50,
            gap in 1i64..40,
        ) {
            let y = (((x as f64) * y_frac) as u64).min(x.saturating_sub(2));
            let c = cohort(x, y);
            let p_std = ratio(pstd_num, 10);
            let p_b = &p_std + ratio(gap, 10);
            let s = PriceSchedule::new(
                rate("1"),
                MoneyRate::new(p_b).unwrap(),
                MoneyRate::new(p_std).unwrap(),
                rate("0"),
                rate("0.1"),
            );
            match nbs_reward(&s, &c) {
                NbsResult::Settled { reward, state } => {
                    prop_assert_eq!(&state.cp_objective, &state.user_objective);
                    prop_assert_eq!(&state.cp_objective, &state.midpoint);
                    let settled = s.with_share_reward(reward);
                    prop_assert!(verify_equilibrium(&settled, &c).unwrap());
                }
                other => prop_assert!(false, "expected settlement, got {:?}", other),
            }
        }

        /// The mixed reward formula at y = 0 collapses onto the all-standard
        /// formula.
        #[test]
        fn mixed_reward_reduces_to_all_standard(x in 3u64..50, pstd_num in 11i64..50) {
            let p_std = ratio(pstd_num, 10);
            // all-standard: p_std*(x+1) / (2*(x-1))
            let standard = &p_std * (uint(x) + int(1)) / ((uint(x) - int(1)) * int(2));
            // mixed formula at y = 0: (p_b*0 + p_std*(x+1)) / (2*(x-1))
            let mixed_at_zero = (&p_std * (uint(x) - int(0) + int(1)))
                / ((uint(x) - int(0) - int(1)) * int(2));
            prop_assert_eq!(standard, mixed_at_zero);
        }

        /// Dominance: with 2m > n + 2 the all-premium benefit beats the
        /// all-standard one and every mixed split, by brute force over y.
        #[test]
        fn all_premium_dominates_above_threshold((np, x) in normalized_point()) {
            prop_assume!(&np.m * int(2) > &np.n + int(2));
            let p_n = rate("1");
            let (p_b, p_std) = np.denormalize(&p_n);
            let s = PriceSchedule::new(p_n.clone(), p_b, p_std, rate("0"), rate("0"));
            let ben2 = benefits::ben_cp_eq(&s, &cohort(x, x)).unwrap();
            let ben1 = benefits::ben_cp_eq(&s, &cohort(x, 0)).unwrap();
            prop_assert!(ben2.rat() >= ben1.rat());
            for y in 1..x {
                let ben3 = benefits::ben_cp_eq(&s, &cohort(x, y)).unwrap();
                prop_assert!(ben2.rat() >= ben3.rat(), "y = {}", y);
            }
        }

        /// Both printed expansions agree exactly with direct subtraction.
        #[test]
        fn expansions_equal_direct_subtraction((np, x) in normalized_point(), y_frac in 0.0f64..1.0) {
            let y = (((x as f64) * y_frac) as u64).min(x - 1);
            let report = compare_cp(&np, x, y, &rate("1"), 1).unwrap();
            prop_assert_eq!(
                report.delta_21,
                delta_21_expansion(&np, x, &rate("1"), 1)
            );
            prop_assert_eq!(
                report.delta_23,
                delta_23_expansion(&np, x, y, &rate("1"), 1)
            );
        }

        /// Below the threshold the all-standard scenario eventually wins:
        /// some audience size flips the sign of the gap. Valid points with
        /// 2m < n + 2 and m > n only exist for n < 2.
        #[test]
        fn below_threshold_the_gap_eventually_flips(
            n_num in 101i64..199,
            t in 1i64..20,
        ) {
            let n = ratio(n_num, 100); // 1 < n < 2
            let headroom = Rat::one() - &n * ratio(1, 2); // (n/2 + 1) - n
            let m = &n + &headroom * ratio(t, 21); // n < m < n/2 + 1
            let np = NormalizedPrices::from_m_n_k(m, n, Rat::zero()).unwrap();
            let witness = delta_21_sign_flip_witness(&np, &rate("1"), 100_000);
            prop_assert!(witness.is_some(), "np = {:?}", np);
        }
    }
}
