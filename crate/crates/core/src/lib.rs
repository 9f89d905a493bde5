//! Exact computational algebra for countable conical refinement monoids.
//!
//! The crate resolves a refinement monoid `M` by a *dimension monoid*: a
//! tower of simplicial monoids `Δ_0 → Δ_1 → ⋯` with morphisms `α_j: Δ_j → M`
//! whose colimit maps onto `M` and reflects the `∝` preorder
//! (`x ∝ y` iff `x <= n·y` for some natural `n`). On top of the tower it
//! verifies the induced ideal-lattice isomorphism `L(Δ) ≅ L(M)`, computes
//! maximal semilattice quotients `∇(M) = M/≍`, and decides weak
//! divisibility (`x = n_1·x_1 + ⋯ + n_r·x_r` with all `n_j >= n`) with
//! verified certificates.
//!
//! All arithmetic is exact. The core vector/matrix layer is generic over
//! any unsigned integer scalar (see [`natural::Natural`]); the rest of the
//! crate uses the arbitrary-precision aliases below, since tower
//! coefficients grow multiplicatively.

pub mod divisibility;
pub mod io;
pub mod lattice;
pub mod natural;
pub mod oracle;
pub mod resolution;
pub mod simplicial;

pub use natural::Natural;

/// Canonical scalar: arbitrary-precision nonnegative integer.
pub type Nat = num_bigint::BigUint;

/// Element of a simplicial monoid over the canonical scalar.
pub type Element = simplicial::Element<Nat>;

/// Morphism between simplicial monoids over the canonical scalar.
pub type Morphism = simplicial::Morphism<Nat>;

pub use simplicial::{IndexSet, SimplicialMonoid};

/// Convenience: `Nat` from a small constant.
pub fn nat(n: u64) -> Nat {
    Nat::from(n)
}
