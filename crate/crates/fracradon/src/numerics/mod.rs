//! Numerical building blocks shared by the analytic modules.

pub mod fftnd;
pub mod fit;
pub mod lowdisc;
pub mod phase;
pub mod quad;
pub mod special;
pub mod sum;

pub use fftnd::{fft_nd, transform_axes};
pub use fit::{ols, LinearFit};
pub use lowdisc::Kronecker;
pub use phase::{cis_neg, frac_prod, frac_round, mod1_centered, rational_offset};
pub use quad::{gauss_kronrod_adaptive, gauss_legendre, gl_doubling, GlResult};
pub use special::{gamma, sinc};
pub use sum::NeumaierSum;
