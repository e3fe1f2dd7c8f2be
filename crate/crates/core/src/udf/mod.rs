//! User-defined functions: the scalar expression language, ⊕/⊗/ext
//! definitions, and sampled law verification.

pub mod expr;
pub mod func;
pub mod lex;
pub mod parse;
pub mod verify;

pub use expr::{eval_scalar_expr, BinOp, BoundExpr, Func, ScalarExpr};
pub use func::{BinaryFn, BoundBinary, BoundExt, Builtin, ExtFn, PlusFn, TableauRow, TimesFn};
pub use parse::parse_expr;
pub use verify::{
    check_monotone, verify_ext, verify_plus, verify_times, LawCheck, VerificationReport,
    VerifyConfig,
};
