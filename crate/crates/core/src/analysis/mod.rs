//! Adversarial verification of policies and the theoretical trade-off curves.

mod bounds;
mod certify;
mod conversion;
mod instances;
mod sufficient;

pub use bounds::{curve_csv, dominance_violations, lb_consistency_max_search, lb_consistency_one_way, pareto_frontier};
pub use certify::{adversarial_ratio, certify, empirical_kappa, CertificateReport, KappaPoint, WorstCase};
pub use conversion::{check_consistency_integral_constraint, conversion_function};
pub use instances::{constant_instance, p_instance, spike_instance};
pub use sufficient::{
    check_sufficient_condition, design_partition, Partition, PieceVerdict, SufficientCase, SufficientReport,
};
