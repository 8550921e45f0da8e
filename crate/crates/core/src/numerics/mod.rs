//! Special functions and dense symmetric linear algebra shared by the
//! correlation, copula and generator modules.

mod linalg;
mod special;

pub use linalg::{
    cholesky_psd, max_asymmetry, psd_repair, sym_eigen, EigenDecomposition, DEFAULT_PSD_FLOOR,
};
pub use special::{
    bessel_j0, clamp_probability, erf, erf_inv, erfc, gauss_2f1_symmetric, psi_ratio,
    regularized_lower_gamma, std_normal_cdf, std_normal_pdf, std_normal_quantile, RealGrid,
    CDF_CLAMP,
};

pub(crate) use special::{
    gamma_p_inv, gamma_pq, ln_gamma, std_normal_quantile_unchecked,
};
