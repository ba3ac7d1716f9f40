pub mod curve;
pub mod inversion;
pub mod mgf;
pub mod montecarlo;

pub use curve::{outage_from_samples, outage_lower_bound, wilson_interval, BoundScaling, CurveKind, OutageCurve};
pub use inversion::{invert_cdf, invert_mgf_to_cdf, EulerSettings, Inversion};
pub use mgf::{laplace_of_rician_cdf, Envelope, MgfEvaluator, MgfSettings};
pub use montecarlo::{
    bound_violation_rate, capacity_from_outcomes, monte_carlo_capacity, monte_carlo_outage, pairwise_sum, simulate,
    CapacityEstimate,
    TrialOutcome,
};
