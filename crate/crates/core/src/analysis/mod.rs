//! Statistical checks of quantized systems: error uniformity and
//! independence, mixing, the preimage kernel, reachability, the martingale
//! of preimage counts, and central limit behaviour of deviations.
//!
//! Every randomized routine draws sample `i` from its own counter-based
//! stream, so results depend only on the seed.

mod clt;
mod errors;
mod kernel;
mod neutral;
mod report;
pub mod rng;
pub mod stats;

pub use clt::{clt_experiment, clt_statistics, max_deviation_experiment, wiener_max_modulus, MaxDeviationOutcome};
pub use errors::{error_independence_test, error_uniformity_test, frequency_preservation, mixing_test, product_law_gap};
pub use kernel::{
    backward_event, hole_frequency_2d, kernel_estimate, martingale_check, mean_preimage_count,
    reachability_frequency, reachability_markov, KernelEstimate, MeanCardinality, KERNEL_SOURCE_LIMIT,
};
pub use neutral::{neutral_build, NeutralSpec};
pub use report::{Comparison, TestReport};
