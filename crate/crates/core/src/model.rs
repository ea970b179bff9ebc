//! Domain types for one content's economics: the price schedule, the
//! audience cohort, scenario classification and the dimensionless price
//! normalization used by sweeps and comparisons.

use std::fmt;

use num::{One, Signed, Zero};

use crate::numeric::{self, uint, NumberParseError, Rat};

/// A nonnegative per-byte monetary rate in cost units (c.u./B).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct MoneyRate(Rat);

impl MoneyRate {
    /// Wraps a rational rate, rejecting negative values.
    pub fn new(value: Rat) -> Result<Self, ModelError> {
        if value.is_negative() {
            return Err(ModelError::NegativeRate(numeric::format_number(&value)));
        }
        Ok(MoneyRate(value))
    }

    pub fn zero() -> Self {
        MoneyRate(Rat::zero())
    }

    pub fn from_int(value: u64) -> Self {
        MoneyRate(uint(value))
    }

    /// Parses the decimal/fraction external form (`"2.4"`, `"11/9"`).
    pub fn parse(s: &str) -> Result<Self, ModelError> {
        Self::new(numeric::parse_number(s)?)
    }

    pub fn rat(&self) -> &Rat {
        &self.0
    }

    pub fn into_rat(self) -> Rat {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl fmt::Display for MoneyRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&numeric::format_number(&self.0))
    }
}

/// A signed amount of money in cost units (c.u.); negative values are losses.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Money(Rat);

impl Money {
    pub fn new(value: Rat) -> Self {
        Money(value)
    }

    pub fn zero() -> Self {
        Money(Rat::zero())
    }

    pub fn rat(&self) -> &Rat {
        &self.0
    }

    pub fn into_rat(self) -> Rat {
        self.0
    }
}

impl From<Rat> for Money {
    fn from(value: Rat) -> Self {
        Money(value)
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&numeric::format_number(&self.0))
    }
}

/// A broken pricing constraint. Violations are data, not failures: a schedule
/// can carry any number of them and `validate` reports them all.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Violation {
    /// The premium price must strictly exceed the standard price.
    PremiumNotAboveStandard,
    /// The standard price must strictly exceed the delivery fee.
    StandardNotAboveDeliveryFee,
    /// The per-byte delivery fee must be strictly positive.
    DeliveryFeeNotPositive,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            Violation::PremiumNotAboveStandard => {
                "premium price must exceed standard price (p_b > p_std)"
            }
            Violation::StandardNotAboveDeliveryFee => {
                "standard price must exceed the delivery fee (p_std > p_n)"
            }
            Violation::DeliveryFeeNotPositive => "delivery fee must be positive (p_n > 0)",
        };
        f.write_str(msg)
    }
}

/// Errors from constructing or validating domain values.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("price schedule violates constraints: {}", format_violations(.0))]
    InvalidSchedule(Vec<Violation>),
    #[error("money rate must be nonnegative, got {0}")]
    NegativeRate(String),
    #[error("cohort requires x >= 1, 0 <= y <= x, f >= 1 (got x={x}, y={y}, f={f})")]
    InvalidCohort { x: u64, y: u64, f: u64 },
    #[error("normalized prices require m = r*n, m > n > 1 and 0 <= k <= 1")]
    InvalidNormalization,
    #[error(transparent)]
    Number(#[from] NumberParseError),
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// The five per-byte rates governing one content's economics.
///
/// `delivery_fee` is what the network provider charges the CP per byte served
/// from the CP server (`p_n`); `premium_price` (`p_b`) and `standard_price`
/// (`p_std`) are what the two user classes pay the CP; `share_reward` (`p_u`)
/// is what the CP pays the designated sharer per shared byte; `energy_cost`
/// (`s`) is what sharing a byte costs the sharer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PriceSchedule {
    pub delivery_fee: MoneyRate,
    pub premium_price: MoneyRate,
    pub standard_price: MoneyRate,
    pub share_reward: MoneyRate,
    pub energy_cost: MoneyRate,
}

impl PriceSchedule {
    pub fn new(
        delivery_fee: MoneyRate,
        premium_price: MoneyRate,
        standard_price: MoneyRate,
        share_reward: MoneyRate,
        energy_cost: MoneyRate,
    ) -> Self {
        PriceSchedule {
            delivery_fee,
            premium_price,
            standard_price,
            share_reward,
            energy_cost,
        }
    }

    /// Reports every violated constraint; an empty list means valid.
    ///
    /// The result is a set: its contents do not depend on check order.
    pub fn validate(&self) -> Vec<Violation> {
        let mut violations = Vec::new();
        if self.premium_price <= self.standard_price {
            violations.push(Violation::PremiumNotAboveStandard);
        }
        if self.standard_price <= self.delivery_fee {
            violations.push(Violation::StandardNotAboveDeliveryFee);
        }
        if self.delivery_fee.is_zero() {
            violations.push(Violation::DeliveryFeeNotPositive);
        }
        violations
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    pub fn ensure_valid(&self) -> Result<(), ModelError> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(ModelError::InvalidSchedule(violations))
        }
    }

    /// Same schedule with the sharing reward replaced.
    pub fn with_share_reward(&self, reward: MoneyRate) -> Self {
        PriceSchedule {
            share_reward: reward,
            ..self.clone()
        }
    }
}

/// One content's audience: `x` total users, `y` of them premium, file size
/// `f` bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cohort {
    users: u64,
    premium: u64,
    file_size: u64,
}

impl Cohort {
    pub fn new(users: u64, premium: u64, file_size: u64) -> Result<Self, ModelError> {
        if users == 0 || premium > users || file_size == 0 {
            return Err(ModelError::InvalidCohort {
                x: users,
                y: premium,
                f: file_size,
            });
        }
        Ok(Cohort {
            users,
            premium,
            file_size,
        })
    }

    /// Total users `x`.
    pub fn users(&self) -> u64 {
        self.users
    }

    /// Premium users `y`.
    pub fn premium(&self) -> u64 {
        self.premium
    }

    /// Standard users `x - y`.
    pub fn standard(&self) -> u64 {
        self.users - self.premium
    }

    /// File size `f` in bytes.
    pub fn file_size(&self) -> u64 {
        self.file_size
    }

    pub fn scenario(&self) -> Scenario {
        classify_scenario(self)
    }
}

/// Audience composition: everyone standard, everyone premium, or a mix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    AllStandard,
    AllPremium,
    Mixed,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self {
            Scenario::AllStandard => "all_standard",
            Scenario::AllPremium => "all_premium",
            Scenario::Mixed => "mixed",
        };
        f.write_str(tag)
    }
}

/// Exact partition on the premium count: `y = 0`, `y = x`, or in between.
pub fn classify_scenario(cohort: &Cohort) -> Scenario {
    if cohort.premium == 0 {
        Scenario::AllStandard
    } else if cohort.premium == cohort.users {
        Scenario::AllPremium
    } else {
        Scenario::Mixed
    }
}

/// Prices expressed in units of the delivery fee: `p_b = m * p_n`,
/// `p_std = n * p_n`, `r = m / n`, plus the premium fraction `k = y / x`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedPrices {
    pub m: Rat,
    pub n: Rat,
    pub r: Rat,
    pub k: Rat,
}

impl NormalizedPrices {
    /// Builds from the standard multiple `n`, the price ratio `r` and the
    /// premium fraction `k`; `m = r * n`.
    pub fn from_n_r_k(n: Rat, r: Rat, k: Rat) -> Result<Self, ModelError> {
        let m = &r * &n;
        Self::check(m, n, r, k)
    }

    /// Builds from the two price multiples `m > n`; `r = m / n`.
    pub fn from_m_n_k(m: Rat, n: Rat, k: Rat) -> Result<Self, ModelError> {
        if n.is_zero() {
            return Err(ModelError::InvalidNormalization);
        }
        let r = &m / &n;
        Self::check(m, n, r, k)
    }

    fn check(m: Rat, n: Rat, r: Rat, k: Rat) -> Result<Self, ModelError> {
        let one = Rat::one();
        if m <= n || n <= one || k.is_negative() || k > one {
            return Err(ModelError::InvalidNormalization);
        }
        Ok(NormalizedPrices { m, n, r, k })
    }

    /// Recovers the absolute premium and standard prices for a delivery fee.
    pub fn denormalize(&self, delivery_fee: &MoneyRate) -> (MoneyRate, MoneyRate) {
        let premium = MoneyRate(&self.m * delivery_fee.rat());
        let standard = MoneyRate(&self.n * delivery_fee.rat());
        (premium, standard)
    }
}

/// Expresses a valid schedule in delivery-fee units for a cohort.
///
/// Exact inverse of [`NormalizedPrices::denormalize`] on the two prices.
pub fn normalize(schedule: &PriceSchedule, cohort: &Cohort) -> Result<NormalizedPrices, ModelError> {
    schedule.ensure_valid()?;
    let p_n = schedule.delivery_fee.rat();
    let m = schedule.premium_price.rat() / p_n;
    let n = schedule.standard_price.rat() / p_n;
    let r = &m / &n;
    let k = Rat::new(cohort.premium().into(), cohort.users().into());
    Ok(NormalizedPrices { m, n, r, k })
}
