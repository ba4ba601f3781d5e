//! Structures, datasets and periodic nearest-neighbor search.

mod neighbors;
mod structure;

pub use neighbors::{nearest_neighbors, replicate_for_search, NeighborSet, PeriodicImages};
pub use structure::{Dataset, Structure};

pub(crate) use structure::check_selection;
