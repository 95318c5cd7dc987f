//! Estimating error models from data.

mod gauge;
mod gst;
pub mod optim;
mod rb;

pub use gauge::{apply_rotation_gauge, gauge_fix, gauge_fix_with_rotation};
pub use gst::{mle_fit_gst, GstDiagnostics, GstFitResult, GstOptions};
pub use rb::{fit_rb_decay, rb_survival, RbFit};
