//! Outcome statistics of N parties performing a joint measurement on
//! singlets arranged as an open line or a closed polygon.
//!
//! Source `s` is a singlet whose first qubit belongs to the party on its left
//! and whose second qubit belongs to the party on its right. Party `i`
//! measures the pair (left qubit, right qubit) =
//! (second qubit of its left source, first qubit of its right source).

mod closed_form;
mod distribution;
mod dyadic;
mod naive;
mod stats;
mod topology;
mod transfer;

pub use closed_form::{
    closed_form_line, closed_form_polygon, conditional_all_equal, conditional_limit, table2,
    Table2Row, MAX_CLOSED_FORM_N,
};
pub use distribution::{
    confirmed_dyadic, DistributionEntry, DistributionReport, JointDistribution, OutcomeTuple,
    MAX_TABLE_PARTIES,
};
pub use dyadic::{dyadic_reconstruct, DyadicProbability, ExactRatio, DYADIC_RESIDUAL_TOL};
pub use naive::{joint_distribution_naive, joint_distribution_naive_oriented, Orientation};
pub use stats::{coincidence_stats, CoincidenceStats, PatternClass};
pub use topology::{NetworkTopology, TopologyKind};
pub use transfer::{event_probability, Event, TransferMatrices, MAX_EVENT_PARTIES};
