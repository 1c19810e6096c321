//! Hard-attention transformers, their normal form, and compilation to
//! constant-depth boolean circuits.

pub mod circuit;
pub mod compiler;
pub mod error;
pub mod guhat;
pub mod harness;
pub mod lang;
pub mod normal_form;
pub mod rational;
pub mod restricted;
pub mod value;
pub mod zoo;

pub use circuit::{Circuit, CircuitBuilder, Ref};
pub use compiler::{
    compile, depth_budget, equality_to_dyck_reduction, CompileOptions, CompileReport,
};
pub use error::{Error, Result};
pub use guhat::{GuhatModel, MaskMode, Pooling, Trace};
pub use lang::{LangKind, LangSpec};
pub use normal_form::{normalize, NormalFormModel, NormalizeOptions, SymbolEncoding};
pub use rational::Rational;
pub use restricted::RestrictedModel;
pub use value::{Alphabet, Token, Value};
