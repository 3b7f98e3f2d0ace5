//! Credit portfolio loss distributions under infectious defaults with
//! immunization.
//!
//! Every name `i` carries three independent Bernoulli drivers: an
//! idiosyncratic default `X_i` (probability `p_i`), an infectivity flag `V_i`
//! (`v_i`) and an immunization flag `U_i` (`u_i`). A name defaults if it
//! defaults on its own, or if it is not immune and some other name defaulted
//! idiosyncratically while infective.
//!
//! The crate builds the exact loss distribution of that model by recursion
//! ([`loss`]), maps market marginals onto it ([`mapping`]), layers a Gaussian
//! common factor on top ([`factor`]), derives risk statistics
//! ([`analytics`]), prices synthetic CDO tranches ([`pricing`]) and
//! calibrates the model family to tranche quotes ([`calibration`]).
//! [`oracle`] holds the brute-force and Monte Carlo references.

// Negated comparisons double as NaN rejection throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

/// Crate version, recorded in CLI run metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod analytics;
pub mod calibration;
pub mod error;
pub mod factor;
pub mod loss;
pub mod mapping;
pub mod market;
pub mod model;
pub mod normal;
pub mod optimize;
pub mod oracle;
pub mod pricing;

pub use analytics::{
    joint_default_probability_homogeneous, kl_divergence, pairwise_default_correlation,
    risk_summary, CorrelationModel, RiskSummary,
};
pub use calibration::{calibrate, mae, objective, CalibrationOptions, CalibrationResult};
pub use error::{Error, Result};
pub use factor::{
    cond_contagion_distribution, conditional_default_prob, gauss_hermite_rule,
    mixture_distribution, ofg_loss_distribution, QuadratureRule,
};
pub use loss::{
    assemble_loss_distribution, compute_alpha_beta, contagion_loss_distribution, infection_probability,
    marginal_default_probability, no_loss_probability, AlphaBetaTables, ContagionParams,
    LossDistribution, PortfolioSpec,
};
pub use mapping::{assign_mu, map_parameters, MappingConfig, MuScheme};
pub use market::{DefaultCurve, DiscountCurve, MarketData, Quote, QuoteType};
pub use model::{Model, ModelSettings, Variant, VariantFamily};
pub use oracle::{enumerate_losses, simulate_losses, Enumeration, SimulationConfig};
pub use pricing::{LossSurface, Schedule, Tranche};
