//! Reference problems and the density building blocks they are made of.

mod densities;
mod direct;
mod indirect;
mod localization;
pub mod quadrature;

pub use densities::{GaussianDensity, UniformDensity};
pub use direct::{custom_gaussian_spec, direct_is_spec, direct_phi, direct_reference, CustomPhi};
pub use indirect::{indirect_is_spec, IndirectSpec};
pub use localization::{
    clamped_range_count, localization_spec, range_model, LocalizationSpec, LogBase, SENSORS,
    TRUE_LOCATION,
};

use rand::SeedableRng;

use crate::sampling::StreamRng;

/// ChaCha stream reserved for synthetic observations, so data and particle
/// draws from the same seed never overlap.
pub(crate) const DATA_STREAM: u64 = 1;

pub(crate) fn data_rng(seed: u64) -> StreamRng {
    let mut rng = StreamRng::seed_from_u64(seed);
    rng.set_stream(DATA_STREAM);
    rng
}
