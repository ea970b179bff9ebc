//! Pricing-policy engine and protocol simulator for hybrid peer-assisted
//! content delivery.
//!
//! A content provider (CP) sells one content to `x` users. Premium users pay
//! `p_b` per byte and are always served from the CP server; standard users pay
//! `p_std < p_b`, query their peers first, and may be served by the single
//! designated sharer, who earns a reward `p_u` per shared byte and pays an
//! energy cost `s`. The crate computes the Nash-bargaining settlement of the
//! reward, the closed-form benefits of every party in the three audience
//! scenarios, load-aware price policies, and runs a deterministic
//! message-level simulation whose double-entry ledger independently validates
//! every closed form.
//!
//! Module map:
//! - [`model`] — domain types, constraint validation, price normalization
//! - [`benefits`] — closed-form benefit and load-reduction functions
//! - [`bargaining`] — Nash-bargaining settlement and scenario comparison
//! - [`policy`] — benefit/load weighted pricing extension
//! - [`sim`] — deterministic protocol simulator with a double-entry ledger
//! - [`trace`] — session traces, synthetic workloads, Monte-Carlo curves
//!
//! All monetary math is exact rational arithmetic; nothing in the engine
//! rounds.

pub mod bargaining;
pub mod benefits;
pub mod model;
pub mod numeric;
pub mod policy;
pub mod sim;
pub mod trace;

pub use model::{Cohort, Money, MoneyRate, NormalizedPrices, PriceSchedule, Scenario};
pub use numeric::Rat;
