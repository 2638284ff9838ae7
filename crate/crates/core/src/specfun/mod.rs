//! Special functions: log-gamma, incomplete gamma, Meijer-G, bivariate Fox-H
//! and the quadrature used by the reference evaluators.

pub mod foxh;
pub mod gamma;
pub mod meijer;
pub mod mellin;
pub mod quad;

pub use foxh::{fox_h_bivariate, fox_h_bivariate_ln, BivariateFoxHSpec};
pub use gamma::{ln_gamma, log_gamma, reg_lower_gamma};
pub use meijer::{ladder, meijer_g, meijer_g_dominant_residue, meijer_g_ln_arg, MeijerGSpec};
pub use mellin::{ContourPolicy, ContourResult, GammaFactor, PoleSide, Position};
