//! Regime-switching entropic risk for commodity claims.
//!
//! The spot follows a mean-reverting Ornstein-Uhlenbeck process and the state
//! of the economy a finite continuous-time Markov chain. Claims scale the spot
//! by a per-regime loading. [`risk`] evaluates entropic risk in closed form for
//! spot and futures claims and by Monte Carlo for any claim, including swaps.

pub mod chain;
pub mod error;
pub mod instruments;
pub mod ou;
pub mod risk;
pub mod series;
pub mod stream;

pub use chain::{Generator, StatePath, TransitionMatrix};
pub use error::{Error, Result};
pub use instruments::{Claim, FutureClaim, GibsonSchwartzParams, LinearSpotClaim, SwapClaim, YieldSpec};
pub use ou::{Calibration, ConditionalLaw, OUParams};
pub use risk::{MCEstimate, McConfig, RiskQuery, RiskVector};
pub use series::PriceSeries;
pub use stream::Parallelism;
