//! The abstract target monoid `M`: a countable conical refinement monoid
//! with decidable operations, behind the [`MonoidOracle`] trait.
//!
//! Two families of oracles ship with the crate: finite monoids given by an
//! addition table ([`CayleyMonoid`], [`SemilatticeMonoid`]) and free
//! commutative monoids ([`FreeOracle`], which covers `Z+` as rank 1).
//! Every oracle fixes an element enumeration `x_0, x_1, …`; all witness
//! searches (refinement, Riesz decomposition, complements) pick the first
//! hit in a fixed scan order over that enumeration, so every downstream
//! construction is reproducible byte for byte.

use std::collections::BTreeSet;
use std::fmt;

use num_integer::Integer;
use num_traits::{CheckedSub, One, Zero};
use thiserror::Error;

use crate::simplicial::Element;
use crate::{nat, Nat};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("element {0:?} does not belong to this oracle")]
    ForeignElement(OracleElem),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("internal witness search failed: {0}")]
    WitnessNotFound(String),
    #[error("search budget exceeded: {0}")]
    SearchBudget(String),
}

/// Element handle in an oracle monoid: either an index into a finite
/// carrier or a point of a free commutative monoid.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OracleElem {
    Index(usize),
    Vector(Vec<Nat>),
}

impl OracleElem {
    pub fn from_u64s(coords: &[u64]) -> Self {
        OracleElem::Vector(coords.iter().map(|&c| nat(c)).collect())
    }

    fn index(&self) -> Result<usize, OracleError> {
        match self {
            OracleElem::Index(i) => Ok(*i),
            other => Err(OracleError::ForeignElement(other.clone())),
        }
    }

    fn vector(&self) -> Result<&[Nat], OracleError> {
        match self {
            OracleElem::Vector(v) => Ok(v),
            other => Err(OracleError::ForeignElement(other.clone())),
        }
    }
}

impl fmt::Display for OracleElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleElem::Index(i) => write!(f, "#{i}"),
            OracleElem::Vector(v) => {
                write!(f, "(")?;
                for (k, c) in v.iter().enumerate() {
                    if k > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Outcome of an exact divisibility query `x = d·y`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DivideOutcome {
    /// First `y` in the enumeration with `x = d·y`.
    Quotient(OracleElem),
    /// No such `y` exists; the search was exhaustive.
    ProvenAbsent,
    /// The search budget ran out before a witness or a proof of absence.
    Unknown { budget: usize },
}

/// A countable conical refinement monoid with decidable equality,
/// addition, `∝`-comparison, refinement, and Riesz decomposition.
///
/// Oracles are pure and stateless after construction; concurrent calls
/// are safe and return identical results.
pub trait MonoidOracle: Send + Sync {
    fn describe(&self) -> String;

    /// Carrier size for finite oracles, `None` when infinite.
    fn size(&self) -> Option<usize>;

    fn zero(&self) -> OracleElem;

    fn add(&self, a: &OracleElem, b: &OracleElem) -> Result<OracleElem, OracleError>;

    fn eq_elem(&self, a: &OracleElem, b: &OracleElem) -> Result<bool, OracleError>;

    /// First `k` elements of the fixed enumeration `x_0, x_1, …`
    /// (prefix-stable; truncated at the carrier size when finite).
    fn enumerate(&self, k: usize) -> Vec<OracleElem>;

    /// Least `n >= 0` with `a <= n·b` in the algebraic order, or `None`.
    fn decide_propto(&self, a: &OracleElem, b: &OracleElem) -> Result<Option<Nat>, OracleError>;

    /// Refinement witness for `x1+x2 = y1+y2`: a matrix `z` with
    /// `x_i = z_i1 + z_i2` and `y_i = z_1i + z_2i`. The witness is the
    /// first hit scanning `(z_12, z_21, z_11, z_22)` in enumeration order.
    fn refine(
        &self,
        x1: &OracleElem,
        x2: &OracleElem,
        y1: &OracleElem,
        y2: &OracleElem,
    ) -> Result<[[OracleElem; 2]; 2], OracleError>;

    /// Riesz witnesses `y_0,…,y_n` for `x <= n·y`:
    /// `x = Σ_{j=1}^n j·y_j` and `y = Σ_{j=0}^n y_j`, exactly.
    fn riesz_decompose(
        &self,
        x: &OracleElem,
        y: &OracleElem,
        n: usize,
    ) -> Result<Vec<OracleElem>, OracleError>;

    /// First `w` in the enumeration with `a + w = b`, or `None`.
    /// Decides `a <= b` in the algebraic order, with witness.
    fn le_witness(&self, a: &OracleElem, b: &OracleElem)
        -> Result<Option<OracleElem>, OracleError>;

    /// All `y <= x`, in enumeration order. Finite by conicality for the
    /// shipped oracles; errors when the set is too large to list.
    fn elements_leq(&self, x: &OracleElem) -> Result<Vec<OracleElem>, OracleError>;

    /// Does the submonoid generated by `gens` contain `x`?
    fn generated_submonoid_contains(
        &self,
        gens: &[OracleElem],
        x: &OracleElem,
    ) -> Result<bool, OracleError>;

    /// First `y` in the enumeration with `x = d·y`, a proof of absence,
    /// or a budget report when neither is reachable.
    fn divide_exactly(&self, x: &OracleElem, d: &Nat) -> Result<DivideOutcome, OracleError>;

    /// A finite generating set of the whole oracle, for surjectivity
    /// checks: the carrier for finite oracles, the basis for free ones.
    fn generators(&self) -> Vec<OracleElem>;

    /// `n·a`, by binary doubling over `add`.
    fn scale(&self, n: &Nat, a: &OracleElem) -> Result<OracleElem, OracleError> {
        let mut acc = self.zero();
        let mut base = a.clone();
        let mut k = n.clone();
        let two = nat(2);
        while !k.is_zero() {
            let (q, r) = k.div_rem(&two);
            if !r.is_zero() {
                acc = self.add(&acc, &base)?;
            }
            k = q;
            if !k.is_zero() {
                base = self.add(&base, &base)?;
            }
        }
        Ok(acc)
    }

    /// Sum of a list, empty sum being zero.
    fn sum_elems(&self, elems: &[OracleElem]) -> Result<OracleElem, OracleError> {
        let mut acc = self.zero();
        for e in elems {
            acc = self.add(&acc, e)?;
        }
        Ok(acc)
    }

    /// `a <= b` in the algebraic order.
    fn le(&self, a: &OracleElem, b: &OracleElem) -> Result<bool, OracleError> {
        Ok(self.le_witness(a, b)?.is_some())
    }
}

/// Evaluate a morphism `Δ → M` given by basis images: `Σ_i x_i · images_i`.
pub fn eval_basis_images(
    oracle: &dyn MonoidOracle,
    images: &[OracleElem],
    x: &Element<Nat>,
) -> Result<OracleElem, OracleError> {
    if x.rank() != images.len() {
        return Err(OracleError::Precondition(format!(
            "element rank {} does not match {} basis images",
            x.rank(),
            images.len()
        )));
    }
    let mut acc = oracle.zero();
    for (c, img) in x.coords().iter().zip(images) {
        if c.is_zero() {
            continue;
        }
        acc = oracle.add(&acc, &oracle.scale(c, img)?)?;
    }
    Ok(acc)
}

/// Refinement matrix for two decompositions of the same element:
/// given `Σ rows = Σ cols`, returns `w` with row sums `rows` and column
/// sums `cols`, by chaining 2x2 refinements. Every defining equation is
/// re-verified before returning.
pub fn refine_matrix(
    oracle: &dyn MonoidOracle,
    rows: &[OracleElem],
    cols: &[OracleElem],
) -> Result<Vec<Vec<OracleElem>>, OracleError> {
    let rsum = oracle.sum_elems(rows)?;
    let csum = oracle.sum_elems(cols)?;
    if !oracle.eq_elem(&rsum, &csum)? {
        return Err(OracleError::Precondition(format!(
            "row sum {rsum} differs from column sum {csum}"
        )));
    }
    let w = refine_matrix_inner(oracle, rows, cols)?;
    for (i, row) in w.iter().enumerate() {
        if !oracle.eq_elem(&oracle.sum_elems(row)?, &rows[i])? {
            return Err(OracleError::WitnessNotFound(format!(
                "refinement matrix row {i} does not sum to its target"
            )));
        }
    }
    for (j, col) in cols.iter().enumerate() {
        let got = oracle.sum_elems(&w.iter().map(|r| r[j].clone()).collect::<Vec<_>>())?;
        if !oracle.eq_elem(&got, col)? {
            return Err(OracleError::WitnessNotFound(format!(
                "refinement matrix column {j} does not sum to its target"
            )));
        }
    }
    Ok(w)
}

fn refine_matrix_inner(
    oracle: &dyn MonoidOracle,
    rows: &[OracleElem],
    cols: &[OracleElem],
) -> Result<Vec<Vec<OracleElem>>, OracleError> {
    if rows.is_empty() {
        return Ok(vec![]);
    }
    if rows.len() == 1 {
        return Ok(vec![cols.to_vec()]);
    }
    let tail_sum = oracle.sum_elems(&rows[1..])?;
    let (top, bottom) = refine_two_rows(oracle, &rows[0], &tail_sum, cols)?;
    let mut out = vec![top];
    out.extend(refine_matrix_inner(oracle, &rows[1..], &bottom)?);
    Ok(out)
}

fn refine_two_rows(
    oracle: &dyn MonoidOracle,
    a: &OracleElem,
    b: &OracleElem,
    cols: &[OracleElem],
) -> Result<(Vec<OracleElem>, Vec<OracleElem>), OracleError> {
    match cols.len() {
        0 => Ok((vec![], vec![])),
        1 => Ok((vec![a.clone()], vec![b.clone()])),
        _ => {
            let tail_sum = oracle.sum_elems(&cols[1..])?;
            let z = oracle.refine(a, b, &cols[0], &tail_sum)?;
            let (mut top, mut bottom) = refine_two_rows(oracle, &z[0][1], &z[1][1], &cols[1..])?;
            top.insert(0, z[0][0].clone());
            bottom.insert(0, z[1][0].clone());
            Ok((top, bottom))
        }
    }
}

// ---------------------------------------------------------------------------
// Finite monoids given by an addition table.
// ---------------------------------------------------------------------------

/// A finite commutative monoid presented by its addition table. The
/// constructor checks shape only; `verify_axioms` decides the mathematics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CayleyMonoid {
    names: Vec<String>,
    table: Vec<Vec<usize>>,
    zero: usize,
}

impl CayleyMonoid {
    pub fn new(
        names: Vec<String>,
        table: Vec<Vec<usize>>,
        zero: usize,
    ) -> Result<Self, OracleError> {
        let size = names.len();
        if size == 0 {
            return Err(OracleError::Precondition("empty carrier".into()));
        }
        if zero >= size {
            return Err(OracleError::Precondition(format!(
                "zero index {zero} out of range for size {size}"
            )));
        }
        if table.len() != size || table.iter().any(|row| row.len() != size) {
            return Err(OracleError::Precondition(format!(
                "addition table must be {size}x{size}"
            )));
        }
        if let Some(&bad) = table.iter().flatten().find(|&&e| e >= size) {
            return Err(OracleError::Precondition(format!(
                "table entry {bad} out of range for size {size}"
            )));
        }
        Ok(CayleyMonoid { names, table, zero })
    }

    pub fn size(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn table(&self) -> &[Vec<usize>] {
        &self.table
    }

    pub fn zero_index(&self) -> usize {
        self.zero
    }

    pub fn add_idx(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }

    fn check(&self, e: &OracleElem) -> Result<usize, OracleError> {
        let i = e.index()?;
        if i >= self.size() {
            return Err(OracleError::ForeignElement(e.clone()));
        }
        Ok(i)
    }

    /// `n·a` within the table.
    fn scale_idx(&self, n: &Nat, a: usize) -> usize {
        let mut acc = self.zero;
        let mut base = a;
        let mut k = n.clone();
        let two = nat(2);
        while !k.is_zero() {
            let (q, r) = k.div_rem(&two);
            if !r.is_zero() {
                acc = self.add_idx(acc, base);
            }
            k = q;
            if !k.is_zero() {
                base = self.add_idx(base, base);
            }
        }
        acc
    }
}

impl MonoidOracle for CayleyMonoid {
    fn describe(&self) -> String {
        format!("table monoid on {{{}}}", self.names.join(","))
    }

    fn size(&self) -> Option<usize> {
        Some(self.size())
    }

    fn zero(&self) -> OracleElem {
        OracleElem::Index(self.zero)
    }

    fn add(&self, a: &OracleElem, b: &OracleElem) -> Result<OracleElem, OracleError> {
        Ok(OracleElem::Index(
            self.add_idx(self.check(a)?, self.check(b)?),
        ))
    }

    fn eq_elem(&self, a: &OracleElem, b: &OracleElem) -> Result<bool, OracleError> {
        Ok(self.check(a)? == self.check(b)?)
    }

    fn enumerate(&self, k: usize) -> Vec<OracleElem> {
        (0..k.min(self.size())).map(OracleElem::Index).collect()
    }

    fn decide_propto(&self, a: &OracleElem, b: &OracleElem) -> Result<Option<Nat>, OracleError> {
        let a = self.check(a)?;
        let b = self.check(b)?;
        // Multiples of b take at most `size` distinct values, so n <= size
        // saturates the search.
        let mut multiple = self.zero;
        for n in 0..=self.size() {
            if (0..self.size()).any(|c| self.add_idx(a, c) == multiple) {
                return Ok(Some(nat(n as u64)));
            }
            multiple = self.add_idx(multiple, b);
        }
        Ok(None)
    }

    fn refine(
        &self,
        x1: &OracleElem,
        x2: &OracleElem,
        y1: &OracleElem,
        y2: &OracleElem,
    ) -> Result<[[OracleElem; 2]; 2], OracleError> {
        let (x1, x2) = (self.check(x1)?, self.check(x2)?);
        let (y1, y2) = (self.check(y1)?, self.check(y2)?);
        if self.add_idx(x1, x2) != self.add_idx(y1, y2) {
            return Err(OracleError::Precondition(format!(
                "{}+{} differs from {}+{}",
                self.name(x1),
                self.name(x2),
                self.name(y1),
                self.name(y2)
            )));
        }
        match refine_table(&self.table, x1, x2, y1, y2) {
            Some(z) => Ok(z.map(|row| row.map(OracleElem::Index))),
            None => Err(OracleError::WitnessNotFound(format!(
                "no refinement of {}+{} = {}+{}",
                self.name(x1),
                self.name(x2),
                self.name(y1),
                self.name(y2)
            ))),
        }
    }

    fn riesz_decompose(
        &self,
        x: &OracleElem,
        y: &OracleElem,
        n: usize,
    ) -> Result<Vec<OracleElem>, OracleError> {
        let xi = self.check(x)?;
        let yi = self.check(y)?;
        let ny = self.scale_idx(&nat(n as u64), yi);
        if !(0..self.size()).any(|c| self.add_idx(xi, c) == ny) {
            return Err(OracleError::Precondition(format!(
                "{} is not below {}·{}",
                self.name(xi),
                n,
                self.name(yi)
            )));
        }
        let size = self.size();
        let tuples = (size as f64).powi(n as i32 + 1);
        if tuples > 2e7 {
            return Err(OracleError::SearchBudget(format!(
                "{size}^{} Riesz candidates",
                n + 1
            )));
        }
        // First (y_0,…,y_n) in lexicographic enumeration order satisfying
        // both defining identities.
        let mut parts = vec![0usize; n + 1];
        loop {
            let mut weighted = self.zero;
            let mut total = self.zero;
            for (j, &p) in parts.iter().enumerate() {
                total = self.add_idx(total, p);
                weighted = self.add_idx(weighted, self.scale_idx(&nat(j as u64), p));
            }
            if weighted == xi && total == yi {
                return Ok(parts.into_iter().map(OracleElem::Index).collect());
            }
            // Odometer step.
            let mut pos = n + 1;
            for j in (0..=n).rev() {
                if parts[j] + 1 < size {
                    parts[j] += 1;
                    pos = j;
                    break;
                }
                parts[j] = 0;
            }
            if pos == n + 1 {
                return Err(OracleError::WitnessNotFound(format!(
                    "no Riesz decomposition of {} below {}·{}",
                    self.name(xi),
                    n,
                    self.name(yi)
                )));
            }
        }
    }

    fn le_witness(
        &self,
        a: &OracleElem,
        b: &OracleElem,
    ) -> Result<Option<OracleElem>, OracleError> {
        let a = self.check(a)?;
        let b = self.check(b)?;
        Ok((0..self.size())
            .find(|&c| self.add_idx(a, c) == b)
            .map(OracleElem::Index))
    }

    fn elements_leq(&self, x: &OracleElem) -> Result<Vec<OracleElem>, OracleError> {
        let xi = self.check(x)?;
        Ok((0..self.size())
            .filter(|&y| (0..self.size()).any(|c| self.add_idx(y, c) == xi))
            .map(OracleElem::Index)
            .collect())
    }

    fn generated_submonoid_contains(
        &self,
        gens: &[OracleElem],
        x: &OracleElem,
    ) -> Result<bool, OracleError> {
        let xi = self.check(x)?;
        let mut reached: BTreeSet<usize> = BTreeSet::new();
        reached.insert(self.zero);
        for g in gens {
            reached.insert(self.check(g)?);
        }
        loop {
            let mut grew = false;
            let current: Vec<usize> = reached.iter().copied().collect();
            for &a in &current {
                for &b in &current {
                    if reached.insert(self.add_idx(a, b)) {
                        grew = true;
                    }
                }
            }
            if !grew {
                break;
            }
        }
        Ok(reached.contains(&xi))
    }

    fn divide_exactly(&self, x: &OracleElem, d: &Nat) -> Result<DivideOutcome, OracleError> {
        let xi = self.check(x)?;
        for y in 0..self.size() {
            if self.scale_idx(d, y) == xi {
                return Ok(DivideOutcome::Quotient(OracleElem::Index(y)));
            }
        }
        Ok(DivideOutcome::ProvenAbsent)
    }

    fn generators(&self) -> Vec<OracleElem> {
        (0..self.size()).map(OracleElem::Index).collect()
    }
}

/// Refinement witness inside a raw table: first matrix in the scan order
/// `(z_12, z_21, z_11, z_22)`.
fn refine_table(
    table: &[Vec<usize>],
    x1: usize,
    x2: usize,
    y1: usize,
    y2: usize,
) -> Option<[[usize; 2]; 2]> {
    let size = table.len();
    for z12 in 0..size {
        for z21 in 0..size {
            for z11 in 0..size {
                if table[z11][z12] != x1 || table[z11][z21] != y1 {
                    continue;
                }
                let hit = table[z21]
                    .iter()
                    .zip(&table[z12])
                    .position(|(a, b)| *a == x2 && *b == y2);
                if let Some(z22) = hit {
                    return Some([[z11, z12], [z21, z22]]);
                }
            }
        }
    }
    None
}

/// A finite join-semilattice with zero: a table monoid with `x+x = x`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemilatticeMonoid(CayleyMonoid);

impl SemilatticeMonoid {
    pub fn new(table: CayleyMonoid) -> Result<Self, OracleError> {
        for a in 0..table.size() {
            if table.add_idx(a, a) != a {
                return Err(OracleError::Precondition(format!(
                    "not idempotent: {}+{} = {}",
                    table.name(a),
                    table.name(a),
                    table.name(table.add_idx(a, a))
                )));
            }
        }
        Ok(SemilatticeMonoid(table))
    }

    pub fn as_table(&self) -> &CayleyMonoid {
        &self.0
    }
}

impl MonoidOracle for SemilatticeMonoid {
    fn describe(&self) -> String {
        format!("semilattice on {{{}}}", self.0.names().join(","))
    }

    fn size(&self) -> Option<usize> {
        Some(self.0.size())
    }

    fn zero(&self) -> OracleElem {
        MonoidOracle::zero(&self.0)
    }

    fn add(&self, a: &OracleElem, b: &OracleElem) -> Result<OracleElem, OracleError> {
        self.0.add(a, b)
    }

    fn eq_elem(&self, a: &OracleElem, b: &OracleElem) -> Result<bool, OracleError> {
        self.0.eq_elem(a, b)
    }

    fn enumerate(&self, k: usize) -> Vec<OracleElem> {
        self.0.enumerate(k)
    }

    fn decide_propto(&self, a: &OracleElem, b: &OracleElem) -> Result<Option<Nat>, OracleError> {
        self.0.decide_propto(a, b)
    }

    fn refine(
        &self,
        x1: &OracleElem,
        x2: &OracleElem,
        y1: &OracleElem,
        y2: &OracleElem,
    ) -> Result<[[OracleElem; 2]; 2], OracleError> {
        self.0.refine(x1, x2, y1, y2)
    }

    fn riesz_decompose(
        &self,
        x: &OracleElem,
        y: &OracleElem,
        n: usize,
    ) -> Result<Vec<OracleElem>, OracleError> {
        self.0.riesz_decompose(x, y, n)
    }

    fn le_witness(
        &self,
        a: &OracleElem,
        b: &OracleElem,
    ) -> Result<Option<OracleElem>, OracleError> {
        self.0.le_witness(a, b)
    }

    fn elements_leq(&self, x: &OracleElem) -> Result<Vec<OracleElem>, OracleError> {
        self.0.elements_leq(x)
    }

    fn generated_submonoid_contains(
        &self,
        gens: &[OracleElem],
        x: &OracleElem,
    ) -> Result<bool, OracleError> {
        self.0.generated_submonoid_contains(gens, x)
    }

    fn divide_exactly(&self, x: &OracleElem, d: &Nat) -> Result<DivideOutcome, OracleError> {
        self.0.divide_exactly(x, d)
    }

    fn generators(&self) -> Vec<OracleElem> {
        self.0.generators()
    }
}

// ---------------------------------------------------------------------------
// Free commutative monoids.
// ---------------------------------------------------------------------------

/// `(Z+)^rank` as a monoid oracle; rank 1 is `Z+` itself. Free commutative
/// monoids satisfy the refinement property, with closed-form witnesses.
///
/// The fixed enumeration is graded lexicographic: by total degree, then by
/// coordinate tuple ascending.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FreeOracle {
    rank: usize,
}

impl FreeOracle {
    pub fn new(rank: usize) -> Self {
        FreeOracle { rank }
    }

    pub fn naturals() -> Self {
        FreeOracle { rank: 1 }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    fn check<'e>(&self, e: &'e OracleElem) -> Result<&'e [Nat], OracleError> {
        let v = e.vector()?;
        if v.len() != self.rank {
            return Err(OracleError::ForeignElement(e.clone()));
        }
        Ok(v)
    }

    fn elem(&self, v: Vec<Nat>) -> OracleElem {
        OracleElem::Vector(v)
    }
}

/// All vectors of the given total degree, lexicographically ascending.
fn compositions(degree: u64, parts: usize) -> Vec<Vec<u64>> {
    if parts == 0 {
        return if degree == 0 { vec![vec![]] } else { vec![] };
    }
    if parts == 1 {
        return vec![vec![degree]];
    }
    let mut out = Vec::new();
    for first in 0..=degree {
        for rest in compositions(degree - first, parts - 1) {
            let mut v = Vec::with_capacity(parts);
            v.push(first);
            v.extend(rest);
            out.push(v);
        }
    }
    out
}

impl MonoidOracle for FreeOracle {
    fn describe(&self) -> String {
        if self.rank == 1 {
            "naturals".to_string()
        } else {
            format!("free commutative monoid of rank {}", self.rank)
        }
    }

    fn size(&self) -> Option<usize> {
        if self.rank == 0 {
            Some(1)
        } else {
            None
        }
    }

    fn zero(&self) -> OracleElem {
        self.elem(vec![Nat::zero(); self.rank])
    }

    fn add(&self, a: &OracleElem, b: &OracleElem) -> Result<OracleElem, OracleError> {
        let a = self.check(a)?;
        let b = self.check(b)?;
        Ok(self.elem(a.iter().zip(b).map(|(x, y)| x + y).collect()))
    }

    fn eq_elem(&self, a: &OracleElem, b: &OracleElem) -> Result<bool, OracleError> {
        Ok(self.check(a)? == self.check(b)?)
    }

    fn enumerate(&self, k: usize) -> Vec<OracleElem> {
        let mut out = Vec::with_capacity(k);
        let mut degree = 0u64;
        while out.len() < k {
            let layer = compositions(degree, self.rank);
            if layer.is_empty() {
                break; // rank 0: only the zero element exists
            }
            for v in layer {
                if out.len() == k {
                    break;
                }
                out.push(self.elem(v.into_iter().map(nat).collect()));
            }
            degree += 1;
        }
        out
    }

    fn decide_propto(&self, a: &OracleElem, b: &OracleElem) -> Result<Option<Nat>, OracleError> {
        let a = Element::new(self.check(a)?.to_vec());
        let b = Element::new(self.check(b)?.to_vec());
        Ok(a.propto(&b).expect("equal ranks"))
    }

    fn refine(
        &self,
        x1: &OracleElem,
        x2: &OracleElem,
        y1: &OracleElem,
        y2: &OracleElem,
    ) -> Result<[[OracleElem; 2]; 2], OracleError> {
        let x1 = self.check(x1)?;
        let x2 = self.check(x2)?;
        let y1 = self.check(y1)?;
        let y2 = self.check(y2)?;
        let lhs: Vec<Nat> = x1.iter().zip(x2).map(|(a, b)| a + b).collect();
        let rhs: Vec<Nat> = y1.iter().zip(y2).map(|(a, b)| a + b).collect();
        if lhs != rhs {
            return Err(OracleError::Precondition(
                "refine requires x1+x2 = y1+y2".into(),
            ));
        }
        // Componentwise closed form; coincides with the first witness in
        // the (z_12, z_21, z_11, z_22) scan order.
        let z11: Vec<Nat> = x1.iter().zip(y1).map(|(a, b)| a.min(b).clone()).collect();
        let z12: Vec<Nat> = x1.iter().zip(&z11).map(|(a, m)| a - m).collect();
        let z21: Vec<Nat> = y1.iter().zip(&z11).map(|(a, m)| a - m).collect();
        let z22: Vec<Nat> = x2.iter().zip(&z21).map(|(a, m)| a - m).collect();
        Ok([
            [self.elem(z11), self.elem(z12)],
            [self.elem(z21), self.elem(z22)],
        ])
    }

    fn riesz_decompose(
        &self,
        x: &OracleElem,
        y: &OracleElem,
        n: usize,
    ) -> Result<Vec<OracleElem>, OracleError> {
        let x = self.check(x)?;
        let y = self.check(y)?;
        let nn = nat(n as u64);
        if !x.iter().zip(y).all(|(a, b)| *a <= b * &nn) {
            return Err(OracleError::Precondition(format!(
                "element is not below {n}·y"
            )));
        }
        // Componentwise: with q = x_i div y_i and r = x_i mod y_i, put
        // y_i - r at slot q and r at slot q+1.
        let mut parts = vec![vec![Nat::zero(); self.rank]; n + 1];
        for i in 0..self.rank {
            if y[i].is_zero() {
                continue; // forces x_i = 0 by the precondition
            }
            let (q, r) = x[i].div_rem(&y[i]);
            let q = usize::try_from(&q).expect("quotient bounded by n");
            parts[q][i] = &y[i] - &r;
            if !r.is_zero() {
                parts[q + 1][i] = r;
            }
        }
        Ok(parts.into_iter().map(|v| self.elem(v)).collect())
    }

    fn le_witness(
        &self,
        a: &OracleElem,
        b: &OracleElem,
    ) -> Result<Option<OracleElem>, OracleError> {
        let a = self.check(a)?;
        let b = self.check(b)?;
        let mut diff = Vec::with_capacity(self.rank);
        for (x, y) in a.iter().zip(b) {
            match y.checked_sub(x) {
                Some(d) => diff.push(d),
                None => return Ok(None),
            }
        }
        Ok(Some(self.elem(diff)))
    }

    fn elements_leq(&self, x: &OracleElem) -> Result<Vec<OracleElem>, OracleError> {
        let x = self.check(x)?;
        let mut box_size = 1u64;
        let mut bounds = Vec::with_capacity(self.rank);
        for c in x {
            let b = u64::try_from(c).map_err(|_| {
                OracleError::SearchBudget("coordinate too large to enumerate below".into())
            })?;
            bounds.push(b);
            box_size = box_size.saturating_mul(b + 1);
            if box_size > 1_000_000 {
                return Err(OracleError::SearchBudget(format!(
                    "more than 10^6 elements below {}",
                    OracleElem::Vector(x.to_vec())
                )));
            }
        }
        let mut out: Vec<Vec<u64>> = vec![vec![]];
        for &b in &bounds {
            out = out
                .into_iter()
                .flat_map(|v| {
                    (0..=b).map(move |c| {
                        let mut w = v.clone();
                        w.push(c);
                        w
                    })
                })
                .collect();
        }
        // Enumeration order: degree, then lexicographic.
        out.sort_by_key(|v| (v.iter().sum::<u64>(), v.clone()));
        Ok(out.into_iter().map(|v| OracleElem::from_u64s(&v)).collect())
    }

    fn generated_submonoid_contains(
        &self,
        gens: &[OracleElem],
        x: &OracleElem,
    ) -> Result<bool, OracleError> {
        let target = self.check(x)?.to_vec();
        let mut cols: Vec<Vec<Nat>> = Vec::new();
        for g in gens {
            let v = self.check(g)?;
            if !v.iter().all(|c| c.is_zero()) {
                cols.push(v.to_vec());
            }
        }
        cols.sort();
        cols.dedup();
        let mut budget = 2_000_000u64;
        fn search(cols: &[Vec<Nat>], rem: &[Nat], budget: &mut u64) -> Result<bool, OracleError> {
            if rem.iter().all(|c| c.is_zero()) {
                return Ok(true);
            }
            if cols.is_empty() {
                return Ok(false);
            }
            if *budget == 0 {
                return Err(OracleError::SearchBudget(
                    "submonoid membership search too large".into(),
                ));
            }
            *budget -= 1;
            let col = &cols[0];
            // Coefficient bound: min over the column's support.
            let mut bound: Option<Nat> = None;
            for (c, r) in col.iter().zip(rem) {
                if c.is_zero() {
                    continue;
                }
                let q = r / c;
                bound = Some(match bound {
                    Some(b) => b.min(q),
                    None => q,
                });
            }
            let bound = bound.expect("nonzero column");
            let mut coeff = Nat::zero();
            loop {
                let scaled: Vec<Nat> = col.iter().map(|c| c * &coeff).collect();
                let mut next = Vec::with_capacity(rem.len());
                let mut ok = true;
                for (r, s) in rem.iter().zip(&scaled) {
                    match r.checked_sub(s) {
                        Some(d) => next.push(d),
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                if ok && search(&cols[1..], &next, budget)? {
                    return Ok(true);
                }
                if coeff == bound {
                    return Ok(false);
                }
                coeff += Nat::one();
            }
        }
        search(&cols, &target, &mut budget)
    }

    fn divide_exactly(&self, x: &OracleElem, d: &Nat) -> Result<DivideOutcome, OracleError> {
        let x = self.check(x)?;
        if d.is_zero() {
            return Ok(if x.iter().all(|c| c.is_zero()) {
                DivideOutcome::Quotient(self.zero())
            } else {
                DivideOutcome::ProvenAbsent
            });
        }
        let mut q = Vec::with_capacity(self.rank);
        for c in x {
            let (quot, rem) = c.div_rem(d);
            if !rem.is_zero() {
                return Ok(DivideOutcome::ProvenAbsent);
            }
            q.push(quot);
        }
        Ok(DivideOutcome::Quotient(self.elem(q)))
    }

    fn scale(&self, n: &Nat, a: &OracleElem) -> Result<OracleElem, OracleError> {
        let a = self.check(a)?;
        Ok(self.elem(a.iter().map(|c| c * n).collect()))
    }

    fn generators(&self) -> Vec<OracleElem> {
        (0..self.rank)
            .map(|i| {
                let mut v = vec![Nat::zero(); self.rank];
                v[i] = Nat::one();
                self.elem(v)
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Axiom verification.
// ---------------------------------------------------------------------------

/// One failed monoid axiom, carrying element names for reporting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AxiomViolation {
    Commutativity {
        a: String,
        b: String,
    },
    Associativity {
        a: String,
        b: String,
        c: String,
    },
    Unit {
        a: String,
    },
    Conicality {
        a: String,
        b: String,
    },
    Refinement {
        x1: String,
        x2: String,
        y1: String,
        y2: String,
    },
    Idempotency {
        a: String,
    },
}

impl fmt::Display for AxiomViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxiomViolation::Commutativity { a, b } => {
                write!(f, "commutativity violated: {a}+{b} differs from {b}+{a}")
            }
            AxiomViolation::Associativity { a, b, c } => write!(
                f,
                "associativity violated: ({a}+{b})+{c} differs from {a}+({b}+{c})"
            ),
            AxiomViolation::Unit { a } => write!(f, "unit violated: 0+{a} differs from {a}"),
            AxiomViolation::Conicality { a, b } => {
                write!(f, "conicality violated: {a}+{b}=0")
            }
            AxiomViolation::Refinement { x1, x2, y1, y2 } => write!(
                f,
                "refinement violated: {x1}+{x2} = {y1}+{y2} admits no interpolation matrix"
            ),
            AxiomViolation::Idempotency { a } => {
                write!(f, "idempotency violated: {a}+{a} differs from {a}")
            }
        }
    }
}

/// Result of exhaustively checking the commutative/conical/refinement
/// axioms on a finite table. Violations are data, not errors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxiomReport {
    pub size: usize,
    pub quadruples_checked: usize,
    pub violations: Vec<AxiomViolation>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Exhaustively check commutativity, associativity, the unit law,
/// conicality, and the refinement property on a finite table; optionally
/// idempotency (for semilattices).
pub fn verify_axioms(m: &CayleyMonoid, require_idempotent: bool) -> AxiomReport {
    let size = m.size();
    let name = |i: usize| m.name(i).to_string();
    let mut violations = Vec::new();

    for a in 0..size {
        if m.add_idx(m.zero_index(), a) != a {
            violations.push(AxiomViolation::Unit { a: name(a) });
        }
    }
    for a in 0..size {
        for b in a..size {
            if m.add_idx(a, b) != m.add_idx(b, a) {
                violations.push(AxiomViolation::Commutativity {
                    a: name(a),
                    b: name(b),
                });
            }
            if m.add_idx(a, b) == m.zero_index() && (a != m.zero_index() || b != m.zero_index()) {
                violations.push(AxiomViolation::Conicality {
                    a: name(a),
                    b: name(b),
                });
            }
        }
    }
    for a in 0..size {
        for b in 0..size {
            for c in 0..size {
                if m.add_idx(m.add_idx(a, b), c) != m.add_idx(a, m.add_idx(b, c)) {
                    violations.push(AxiomViolation::Associativity {
                        a: name(a),
                        b: name(b),
                        c: name(c),
                    });
                }
            }
        }
    }
    if require_idempotent {
        for a in 0..size {
            if m.add_idx(a, a) != a {
                violations.push(AxiomViolation::Idempotency { a: name(a) });
            }
        }
    }

    let mut quadruples_checked = 0;
    for x1 in 0..size {
        for x2 in 0..size {
            for y1 in 0..size {
                for y2 in 0..size {
                    if m.add_idx(x1, x2) != m.add_idx(y1, y2) {
                        continue;
                    }
                    quadruples_checked += 1;
                    if refine_table(m.table(), x1, x2, y1, y2).is_none() {
                        violations.push(AxiomViolation::Refinement {
                            x1: name(x1),
                            x2: name(x2),
                            y1: name(y1),
                            y2: name(y2),
                        });
                    }
                }
            }
        }
    }

    AxiomReport {
        size,
        quadruples_checked,
        violations,
    }
}

// ---------------------------------------------------------------------------
// Shipped fixtures.
// ---------------------------------------------------------------------------

/// Concrete monoids used throughout the test suite and shipped as JSON
/// fixture files.
pub mod fixtures {
    use super::*;

    /// `Z+`.
    pub fn naturals() -> FreeOracle {
        FreeOracle::naturals()
    }

    /// `(Z+)^2`.
    pub fn zplus2() -> FreeOracle {
        FreeOracle::new(2)
    }

    /// The two-element semilattice `{0, u}`.
    pub fn semilattice2() -> SemilatticeMonoid {
        let table = CayleyMonoid::new(
            vec!["0".into(), "u".into()],
            vec![vec![0, 1], vec![1, 1]],
            0,
        )
        .expect("valid table");
        SemilatticeMonoid::new(table).expect("idempotent")
    }

    /// The three-element chain semilattice `0 < a < b`.
    pub fn chain3() -> SemilatticeMonoid {
        let table = CayleyMonoid::new(
            vec!["0".into(), "a".into(), "b".into()],
            vec![vec![0, 1, 2], vec![1, 1, 2], vec![2, 2, 2]],
            0,
        )
        .expect("valid table");
        SemilatticeMonoid::new(table).expect("idempotent")
    }

    /// The diamond semilattice `{0, a, b, 1}` with `a ∨ b = 1`.
    pub fn diamond() -> SemilatticeMonoid {
        let table = CayleyMonoid::new(
            vec!["0".into(), "a".into(), "b".into(), "1".into()],
            vec![
                vec![0, 1, 2, 3],
                vec![1, 1, 3, 3],
                vec![2, 3, 2, 3],
                vec![3, 3, 3, 3],
            ],
            0,
        )
        .expect("valid table");
        SemilatticeMonoid::new(table).expect("idempotent")
    }

    /// A non-idempotent conical refinement monoid of size 3: zero plus the
    /// parity group, i.e. `Z+` collapsed to {0, odd, even>0}. Here
    /// `a+a = b`, `a+b = a`, `b+b = b`.
    pub fn parity3() -> CayleyMonoid {
        CayleyMonoid::new(
            vec!["0".into(), "a".into(), "b".into()],
            vec![vec![0, 1, 2], vec![1, 2, 1], vec![2, 1, 2]],
            0,
        )
        .expect("valid table")
    }

    /// `Z/2` presented as a table: fails conicality (`a+a = 0`).
    pub fn z2_table() -> CayleyMonoid {
        CayleyMonoid::new(
            vec!["0".into(), "a".into()],
            vec![vec![0, 1], vec![1, 0]],
            0,
        )
        .expect("valid table")
    }

    /// `Z+` truncated at 2 (`{0, 1, "2 or more"}`): conical but NOT a
    /// refinement monoid, kept as a negative control for the verifier.
    pub fn truncated3() -> CayleyMonoid {
        CayleyMonoid::new(
            vec!["0".into(), "a".into(), "b".into()],
            vec![vec![0, 1, 2], vec![1, 2, 2], vec![2, 2, 2]],
            0,
        )
        .expect("valid table")
    }

    /// All fixtures that pass `verify_axioms`, with stable names; these are
    /// the monoids towers are built over in tests.
    pub fn verified_finite() -> Vec<(&'static str, Box<dyn MonoidOracle>)> {
        vec![
            ("semilattice2", Box::new(semilattice2())),
            ("chain3", Box::new(chain3())),
            ("diamond", Box::new(diamond())),
            ("parity3", Box::new(parity3())),
        ]
    }
}
