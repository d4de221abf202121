//! Jet-based curvature engine with soliton, identity and ODE checks for the
//! Bach tensor in dimension four.

pub mod catalog;
pub mod corpus;
pub mod curvature;
pub mod documents;
pub mod expr;
pub mod fd;
pub mod identity;
pub mod jet;
pub mod ode;
pub mod oracle;
pub mod product;
pub mod quadrature;
pub mod report;
pub mod sample;
pub mod soliton;
pub mod suite;
pub mod tensor;
pub mod tolerances;
