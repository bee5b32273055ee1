//! Sharp `L^p → L^p` operator norms for nonnegative, homogeneous,
//! rotation-invariant product kernels.
//!
//! For a product kernel `K(x_1, y_1) ⋯ K(x_m, y_m)` on `R^{n_1} × ⋯ × R^{n_m}`
//! with each factor homogeneous of degree `-n_i`, the operator norm on `L^p`
//! is
//!
//! ```text
//! C = ∏_i ∫_{R^{n_i}} K(e_1, y_i) |y_i|^{-n_i/p} dy_i
//! ```
//!
//! This crate computes `C` by quadrature ([`sharp_constant`]), recomputes it
//! through the multiplicative-group reduction ([`haar`]), and certifies
//! sharpness empirically ([`norm_lab`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod haar;
pub mod kernels;
pub mod norm_lab;
pub mod quadrature;
pub mod report;
pub mod sharp_constant;
pub mod specfun;

pub use error::{Error, Result};
pub use haar::{build_h, h_l1_norm, haar_measure, invert_box, scale_box, HKernel, HaarBox};
pub use kernels::{
    check_homogeneity, eval_factor, parse_expr, FactorKernel, KernelSpec, ProductKernel,
};
pub use norm_lab::{extremal_ratio, power_method_lower_bound, random_upper_bound_check, LogGrid};
pub use quadrature::{integrate_angular, integrate_halfline, Method, Quad, QuadratureSpec};
pub use report::{Check, ConstantReport, FactorEntry};
pub use sharp_constant::{
    discrepancy_report, factor_constant, hilbert_closed_form, mc_constant, product_constant,
    Convention, LebesgueExponent,
};
