//! CART, random forests with margin diagnostics, and gradient boosting.

mod cart;
mod diagnostics;
mod forest;
mod gbdt;
mod goss;

pub use cart::{fit_tree, Node, Tree, TreeParams, TreeTarget};
pub use diagnostics::{forest_diagnostics, ForestDiagnostics};
pub use forest::{ForestConfig, ForestModel};
pub use gbdt::{
    multiclass_logloss, multiclass_residuals, squared_residual, BoostTree, GbdtConfig, GbdtModel, Loss, ObliviousTree,
    Variant,
};
pub use goss::{goss_gain, goss_sample, variance_gain, GossSample};

/// SplitMix64 step: decorrelated child seeds from one master seed.
pub(crate) fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
