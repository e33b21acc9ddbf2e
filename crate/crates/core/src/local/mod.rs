//! Classical N-local models on lines and polygons: exact evaluation, the
//! named triangle models, model search, and a linear-programming locality
//! test for the four-party line read as a two-party Bell scenario.

pub mod anneal;
pub mod bell;
pub mod families;
pub mod model;
pub mod search;
mod simplex;
pub mod target;

pub use anneal::{anneal_search, AnnealOptions, AnnealSchedule};
pub use bell::{
    bell_lp_check, chsh_functional, chsh_value, classical_bound, BellTarget, LocalityCertificate,
    StrategyWeight, Verdict,
};
pub use families::{
    asymmetric_model, q_model, q_model_all_equal_closed_form, q_model_bit_rows,
    q_model_with_biases, BitCombinationRow,
};
pub use model::{
    all_equal_probability, evaluate_model, sample_model, HiddenSource, ResponseTable,
    RingLocalModel, MAX_HIDDEN_CONFIGURATIONS,
};
pub use search::{exhaustive_search, ExhaustiveOptions, SearchResult, TracePoint};
pub use target::{Norm, Objective, Target};
