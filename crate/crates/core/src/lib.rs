pub mod arith;
pub mod bounds;
pub mod error;
pub mod fibration;
pub mod lab;
pub mod model;
pub mod poly;
pub mod rate;
pub mod scalar;
pub mod sigma;

pub use error::{Error, ErrorKind, Result};

pub type FloatModel = model::BernoulliModel<f64>;
pub type SingleModel = model::BernoulliModel<f32>;
pub type ExactModel = model::BernoulliModel<num_rational::BigRational>;
pub type FloatPmf = model::Pmf<f64>;
pub type ExactPmf = model::Pmf<num_rational::BigRational>;
