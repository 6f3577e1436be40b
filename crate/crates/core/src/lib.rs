//! Exact symbolic calculus in the differential algebra of partial
//! differential equations.
//!
//! The crate is organised bottom-up:
//!
//! * [`multiindex`]: multi-indices and their binomial coefficients;
//! * [`expr`]: differential functions `f(x, u^α_i)` in canonical form;
//! * [`jetalg`]: total derivatives, the chain rule, `D`-constants and the
//!   horizontal filtration;
//! * [`evofield`]: vertical fields, the connection `∇_μ`, the graded
//!   decomposition into `ε^k_φ` blocks and prolongations;
//! * [`forms`]: the bigraded exterior algebra with `d_V`, `d_H`, `i_X`, `L_X`;
//! * [`varcalc`]: integration by parts, the Euler–Lagrange operator and
//!   conservation-law certificates;
//! * [`specseq`]: spectral sequences of finite filtered complexes over `Q`.

pub mod evofield;
pub mod expr;
pub mod forms;
pub mod jetalg;
pub mod linalg;
pub mod multiindex;
pub mod random;
pub mod specseq;
pub mod varcalc;

pub use expr::{Context, DiffExpr, ExprError, Rational, Var};
pub use multiindex::MultiIndex;
