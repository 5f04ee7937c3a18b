//! One-vs-rest logistic regression and kernel SVM.

mod kernel;
mod logistic;
mod standardize;
mod svm;

pub use kernel::{kernel_eval, KernelSpec};
pub use logistic::{fit_binary_logistic, logistic_loss_and_grad, BinaryLogistic, LogisticConfig, LogisticModel};
pub use standardize::Standardizer;
pub use svm::{solve_dual, BinarySvm, DualSolution, SvmConfig, SvmModel};
