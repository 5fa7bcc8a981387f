//! Finite adeles over Q, Krasner hyperfields on p-adic quotients, Boolean
//! algebras with finiteness predicates, and a Feferman-Vaught reduction
//! compiler tying them together.

// `add`, `neg` and `not` on value types return non-`Self` or partial results.
#![allow(clippy::should_implement_trait)]

pub mod boolean_engine;
pub mod fv_transform;
pub mod hyperfields;
pub mod local_fields;
pub mod residue_interp;
pub mod restricted_products;
pub mod sweeps;
pub mod value_monoid;
pub mod logic_core;
pub mod par;
pub mod primes;
