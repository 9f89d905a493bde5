use std::fmt::{Debug, Display};
use std::hash::Hash;

use num_integer::Integer;
use num_traits::Unsigned;

/// Scalar for exact monoid arithmetic: any unsigned integer type,
/// fixed-width (`u32`, `u64`, ...) or arbitrary-precision (`BigUint`).
///
/// All coordinate and coefficient arithmetic in this crate is exact;
/// the canonical instantiation is [`crate::Nat`], which never overflows.
pub trait Natural: Integer + Unsigned + Clone + Hash + Debug + Display {}

impl<T> Natural for T where T: Integer + Unsigned + Clone + Hash + Debug + Display {}
