//! Weak divisibility: witnessed decompositions `x = n_1·x_1 + ⋯ + n_r·x_r`
//! with all `n_j >= n`, driven by repeated degree-2 splittings `x = 2y+3z`
//! and numerical-semigroup arithmetic on the coefficients.
//!
//! The division algorithm reduces by the gcd, expands `k` rounds of
//! degree-2 witnesses so that every weight `2^{k-l}·3^l` clears the
//! Frobenius bound of the reduced targets, represents each weight over the
//! targets, and reassembles. Certificates re-verify their defining
//! equation exactly before being returned.

use std::collections::HashMap;

use num_integer::Integer;
use num_traits::ToPrimitive;
use thiserror::Error;

use crate::nat;
use crate::oracle::{refine_matrix, DivideOutcome, MonoidOracle, OracleElem, OracleError};

#[derive(Debug, Error)]
pub enum DivisibilityError {
    #[error("oracle failure: {0}")]
    Oracle(#[from] OracleError),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("gcd {gcd} does not divide the element ({})", if *.proven { "proven" } else { "not found within budget" })]
    GcdDoesNotDivide { gcd: u64, proven: bool },
    #[error("not weakly divisible of degree 2 at element {element}")]
    NotWeaklyDivisibleDegree2 { element: OracleElem },
    #[error("{value} is not representable over the generators")]
    NotRepresentable { value: u64 },
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

/// A witnessed weak-divisibility decomposition: `x = Σ_j targets_j · parts_j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DivisibilityCertificate {
    pub x: OracleElem,
    pub targets: Vec<u64>,
    pub parts: Vec<OracleElem>,
}

impl DivisibilityCertificate {
    /// Re-check the defining equation exactly in the oracle.
    pub fn verify(&self, oracle: &dyn MonoidOracle) -> Result<bool, OracleError> {
        if self.targets.len() != self.parts.len() || self.targets.is_empty() {
            return Ok(false);
        }
        let mut acc = oracle.zero();
        for (n, p) in self.targets.iter().zip(&self.parts) {
            acc = oracle.add(&acc, &oracle.scale(&nat(*n), p)?)?;
        }
        oracle.eq_elem(&acc, &self.x)
    }

    /// Smallest coefficient, i.e. the divisibility degree this certificate
    /// witnesses.
    pub fn degree(&self) -> u64 {
        self.targets.iter().copied().min().unwrap_or(0)
    }
}

/// First `(y, z)` under the oracle enumeration with `x = 2y + 3z`, or
/// `None` when no such pair exists.
pub fn degree2_witness(
    oracle: &dyn MonoidOracle,
    x: &OracleElem,
) -> Result<Option<(OracleElem, OracleElem)>, DivisibilityError> {
    let candidates = oracle.elements_leq(x)?;
    if oracle.size().is_some() {
        for y in &candidates {
            let two_y = oracle.scale(&nat(2), y)?;
            for z in &candidates {
                let total = oracle.add(&two_y, &oracle.scale(&nat(3), z)?)?;
                if oracle.eq_elem(&total, x)? {
                    return Ok(Some((y.clone(), z.clone())));
                }
            }
        }
        return Ok(None);
    }
    // Free oracles are cancellative: z is determined by y, so scanning y
    // in enumeration order yields the first pair.
    for y in &candidates {
        let two_y = oracle.scale(&nat(2), y)?;
        let Some(rem) = oracle.le_witness(&two_y, x)? else {
            continue;
        };
        if let DivideOutcome::Quotient(z) = oracle.divide_exactly(&rem, &nat(3))? {
            return Ok(Some((y.clone(), z)));
        }
    }
    Ok(None)
}

/// A sub-semigroup of the naturals given by positive generators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NumericalSemigroup {
    gens: Vec<u64>,
}

impl NumericalSemigroup {
    pub fn new(gens: Vec<u64>) -> Result<Self, DivisibilityError> {
        if gens.is_empty() {
            return Err(DivisibilityError::Precondition(
                "at least one generator required".into(),
            ));
        }
        if gens.contains(&0) {
            return Err(DivisibilityError::Precondition(
                "generators must be positive".into(),
            ));
        }
        Ok(NumericalSemigroup { gens })
    }

    pub fn generators(&self) -> &[u64] {
        &self.gens
    }

    pub fn gcd(&self) -> u64 {
        self.gens.iter().fold(0u64, |a, &b| a.gcd(&b))
    }

    /// Is `m` a nonnegative combination of the generators?
    pub fn contains(&self, m: u64) -> Result<bool, DivisibilityError> {
        let mut memo = HashMap::new();
        self.contains_suffix(0, m, &mut memo)
    }

    fn contains_suffix(
        &self,
        from: usize,
        m: u64,
        memo: &mut HashMap<(usize, u64), bool>,
    ) -> Result<bool, DivisibilityError> {
        if m == 0 {
            return Ok(true);
        }
        if from == self.gens.len() {
            return Ok(false);
        }
        if let Some(&cached) = memo.get(&(from, m)) {
            return Ok(cached);
        }
        if memo.len() > 4_000_000 {
            return Err(DivisibilityError::Budget(
                "numerical-semigroup membership search too large".into(),
            ));
        }
        let g = self.gens[from];
        let mut found = false;
        let mut rem = m;
        loop {
            if self.contains_suffix(from + 1, rem, memo)? {
                found = true;
                break;
            }
            if rem < g {
                break;
            }
            rem -= g;
        }
        memo.insert((from, m), found);
        Ok(found)
    }

    /// Least `m_0` such that every natural `m >= m_0` is representable.
    /// Requires gcd 1; computed by a sieve run until `min(gens)`
    /// consecutive representable values appear.
    pub fn frobenius_bound(&self) -> Result<u64, DivisibilityError> {
        if self.gcd() != 1 {
            return Err(DivisibilityError::Precondition(format!(
                "gcd {} must be 1 for a Frobenius bound",
                self.gcd()
            )));
        }
        let smallest = *self.gens.iter().min().expect("nonempty") as usize;
        if smallest == 1 {
            return Ok(0);
        }
        let mut representable = vec![false; smallest + 1];
        representable[0] = true;
        let mut run = 0usize;
        let mut m = 0usize;
        loop {
            if representable.len() <= m {
                representable.resize(m + 1, false);
            }
            if representable[m] {
                run += 1;
                if run == smallest {
                    return Ok((m + 1 - smallest) as u64);
                }
                for &g in &self.gens {
                    let next = m + g as usize;
                    if representable.len() <= next {
                        representable.resize(next + 1, false);
                    }
                    representable[next] = true;
                }
            } else {
                run = 0;
            }
            m += 1;
            if m > 100_000_000 {
                return Err(DivisibilityError::Budget(
                    "Frobenius sieve exceeded 10^8".into(),
                ));
            }
        }
    }

    /// The lexicographically smallest coefficient vector `(d_1,…,d_r)`
    /// with `Σ d_j·gens_j = m`.
    pub fn represent(&self, m: u64) -> Result<Vec<u64>, DivisibilityError> {
        let mut memo = HashMap::new();
        let mut coeffs = Vec::with_capacity(self.gens.len());
        let mut rem = m;
        for from in 0..self.gens.len() {
            let g = self.gens[from];
            let mut d = 0u64;
            loop {
                let left = rem - d * g;
                if self.contains_suffix(from + 1, left, &mut memo)? {
                    coeffs.push(d);
                    rem = left;
                    break;
                }
                if left < g {
                    return Err(DivisibilityError::NotRepresentable { value: m });
                }
                d += 1;
            }
        }
        if rem != 0 {
            return Err(DivisibilityError::NotRepresentable { value: m });
        }
        Ok(coeffs)
    }
}

/// Convenience wrapper: the Frobenius bound of `gens`.
pub fn frobenius_bound(gens: &[u64]) -> Result<u64, DivisibilityError> {
    NumericalSemigroup::new(gens.to_vec())?.frobenius_bound()
}

/// Convenience wrapper: lexicographically smallest representation of `m`.
pub fn represent(gens: &[u64], m: u64) -> Result<Vec<u64>, DivisibilityError> {
    NumericalSemigroup::new(gens.to_vec())?.represent(m)
}

/// Weak division of `x` by the target coefficients: produces a verified
/// certificate `x = Σ n_j·x_j`, assuming `gcd(targets)` divides `x` and
/// the oracle is weakly divisible of degree 2 wherever the expansion
/// lands. The expansion depth is the least `k` with `2^k` clearing the
/// Frobenius bound of the reduced targets; each round splits the current
/// elements left to right.
pub fn weak_divide(
    oracle: &dyn MonoidOracle,
    x: &OracleElem,
    targets: &[u64],
) -> Result<DivisibilityCertificate, DivisibilityError> {
    let semigroup = NumericalSemigroup::new(targets.to_vec())?;
    let d = semigroup.gcd();
    let y = match oracle.divide_exactly(x, &nat(d))? {
        DivideOutcome::Quotient(y) => y,
        DivideOutcome::ProvenAbsent => {
            return Err(DivisibilityError::GcdDoesNotDivide {
                gcd: d,
                proven: true,
            })
        }
        DivideOutcome::Unknown { .. } => {
            return Err(DivisibilityError::GcdDoesNotDivide {
                gcd: d,
                proven: false,
            })
        }
    };
    let reduced = NumericalSemigroup::new(targets.iter().map(|&n| n / d).collect())?;
    let m0 = reduced.frobenius_bound()?;
    let mut k = 0u32;
    while (1u64 << k) < m0 {
        k += 1;
        if k > 60 {
            return Err(DivisibilityError::Budget(
                "expansion depth above 2^60".into(),
            ));
        }
    }

    // k rounds of x = 2y + 3z; the label counts the 3-branches taken.
    let mut layer: Vec<(usize, OracleElem)> = vec![(0, y.clone())];
    for _ in 0..k {
        let mut next = Vec::with_capacity(layer.len() * 2);
        for (label, e) in layer {
            let (a, b) = degree2_witness(oracle, &e)?
                .ok_or(DivisibilityError::NotWeaklyDivisibleDegree2 { element: e })?;
            next.push((label, a));
            next.push((label + 1, b));
        }
        layer = next;
    }
    let mut grouped = vec![oracle.zero(); k as usize + 1];
    for (label, e) in layer {
        grouped[label] = oracle.add(&grouped[label], &e)?;
    }
    // y = Σ_l 2^(k-l)·3^l · y_l, exactly.
    let mut check = oracle.zero();
    for (l, part) in grouped.iter().enumerate() {
        let weight = weight_for(k, l)?;
        check = oracle.add(&check, &oracle.scale(&nat(weight), part)?)?;
    }
    if !oracle.eq_elem(&check, &y)? {
        return Err(DivisibilityError::Invariant(
            "degree-2 expansion does not reassemble to the dividend".into(),
        ));
    }

    // x_j = Σ_l d_{l,j} · y_l where 2^(k-l)·3^l = Σ_j d_{l,j}·(n_j/d).
    let mut parts = vec![oracle.zero(); targets.len()];
    for (l, part) in grouped.iter().enumerate() {
        let coeffs = reduced.represent(weight_for(k, l)?)?;
        for (j, c) in coeffs.iter().enumerate() {
            if *c == 0 {
                continue;
            }
            parts[j] = oracle.add(&parts[j], &oracle.scale(&nat(*c), part)?)?;
        }
    }
    let certificate = DivisibilityCertificate {
        x: x.clone(),
        targets: targets.to_vec(),
        parts,
    };
    if !certificate.verify(oracle)? {
        return Err(DivisibilityError::Invariant(
            "assembled certificate fails its defining equation".into(),
        ));
    }
    Ok(certificate)
}

fn weight_for(k: u32, l: usize) -> Result<u64, DivisibilityError> {
    let two = 1u64
        .checked_shl(k - l as u32)
        .ok_or_else(|| DivisibilityError::Budget("weight overflow".into()))?;
    3u64.checked_pow(l as u32)
        .and_then(|p| p.checked_mul(two))
        .ok_or_else(|| DivisibilityError::Budget("weight overflow".into()))
}

/// Promote a certificate along `y <= x` with `x ∝ y`: each reduction
/// refines the complement `u` (where `x = y + u`) against `k` copies of
/// the parts, absorbs the first column into `y`, and bumps the touched
/// coefficients by one, so every output coefficient stays `>=` the input
/// degree. Zero parts are pruned between rounds; the part count stays
/// bounded by the nonzero content instead of doubling.
pub fn promote_divisibility(
    oracle: &dyn MonoidOracle,
    x: &OracleElem,
    y: &OracleElem,
    certificate: &DivisibilityCertificate,
    k_bound: usize,
) -> Result<DivisibilityCertificate, DivisibilityError> {
    if !oracle.eq_elem(&certificate.x, y)? {
        return Err(DivisibilityError::Precondition(
            "certificate does not witness the divisibility of y".into(),
        ));
    }
    if !certificate.verify(oracle)? {
        return Err(DivisibilityError::Precondition(
            "input certificate fails its defining equation".into(),
        ));
    }
    let mut u = oracle
        .le_witness(y, x)?
        .ok_or_else(|| DivisibilityError::Precondition("y is not below x".into()))?;
    let mut current_y = y.clone();
    let mut targets = certificate.targets.clone();
    let mut parts = certificate.parts.clone();
    let degree = certificate.degree();

    let mut rounds = 0usize;
    let mut previous_k: Option<usize> = None;
    loop {
        let total = oracle.sum_elems(&parts)?;
        let k_nat = oracle.decide_propto(&u, &total)?.ok_or_else(|| {
            DivisibilityError::Precondition(
                "complement is not ∝-below the sum of the parts (x ∝ y fails)".into(),
            )
        })?;
        let k = k_nat
            .to_usize()
            .ok_or_else(|| DivisibilityError::Budget("∝-witness too large".into()))?;
        if k == 0 {
            break; // u = 0 by conicality: x = current_y
        }
        if k > k_bound {
            return Err(DivisibilityError::Budget(format!(
                "complement needs k = {k} copies, above the bound {k_bound}"
            )));
        }
        if let Some(prev) = previous_k {
            if k >= prev {
                return Err(DivisibilityError::Invariant(
                    "reduction did not shrink the ∝-witness".into(),
                ));
            }
        }
        previous_k = Some(k);
        rounds += 1;
        if rounds > k_bound {
            return Err(DivisibilityError::Budget(format!(
                "more than {k_bound} promotion rounds"
            )));
        }

        // u + w = k·(y_1 + ⋯ + y_r); interpolate against the k·r copies.
        let whole = oracle.scale(&nat(k as u64), &total)?;
        let w = oracle
            .le_witness(&u, &whole)?
            .expect("u is below k·total by the ∝-witness");
        let mut cols = Vec::with_capacity(parts.len() * k);
        for p in &parts {
            for _ in 0..k {
                cols.push(p.clone());
            }
        }
        let matrix = refine_matrix(oracle, &[u.clone(), w], &cols)?;

        let mut new_y = current_y.clone();
        let mut new_targets = Vec::with_capacity(parts.len() * 2);
        let mut new_parts = Vec::with_capacity(parts.len() * 2);
        for (j, part) in parts.iter().enumerate() {
            let y_j1 = matrix[0][j * k].clone();
            let z_j = matrix[1][j * k].clone();
            // Column sums give y_j1 + z_j = part.
            let back = oracle.add(&y_j1, &z_j)?;
            if !oracle.eq_elem(&back, part)? {
                return Err(DivisibilityError::Invariant(
                    "refinement column does not reassemble the part".into(),
                ));
            }
            new_y = oracle.add(&new_y, &y_j1)?;
            new_targets.push(targets[j] + 1);
            new_parts.push(y_j1);
            new_targets.push(targets[j]);
            new_parts.push(z_j);
        }
        let mut new_u = oracle.zero();
        for (j, _) in parts.iter().enumerate() {
            for i in 1..k {
                new_u = oracle.add(&new_u, &matrix[0][j * k + i])?;
            }
        }
        // x = y' + u' must persist.
        let reassembled = oracle.add(&new_y, &new_u)?;
        if !oracle.eq_elem(&reassembled, x)? {
            return Err(DivisibilityError::Invariant(
                "promotion lost the decomposition x = y + u".into(),
            ));
        }

        // Prune zero parts; they carry no content and would double the
        // certificate width every round.
        let zero = oracle.zero();
        let mut pruned_targets = Vec::new();
        let mut pruned_parts = Vec::new();
        for (n, p) in new_targets.into_iter().zip(new_parts) {
            if !oracle.eq_elem(&p, &zero)? {
                pruned_targets.push(n);
                pruned_parts.push(p);
            }
        }
        if pruned_parts.is_empty() {
            pruned_targets.push(targets.iter().copied().max().unwrap_or(degree).max(1));
            pruned_parts.push(zero);
        }
        targets = pruned_targets;
        parts = pruned_parts;
        current_y = new_y;
        u = new_u;

        let interim = DivisibilityCertificate {
            x: current_y.clone(),
            targets: targets.clone(),
            parts: parts.clone(),
        };
        if !interim.verify(oracle)? {
            return Err(DivisibilityError::Invariant(
                "intermediate certificate fails its defining equation".into(),
            ));
        }
    }

    let result = DivisibilityCertificate {
        x: x.clone(),
        targets,
        parts,
    };
    if !result.verify(oracle)? {
        return Err(DivisibilityError::Invariant(
            "promoted certificate fails its defining equation".into(),
        ));
    }
    if result.degree() < degree {
        return Err(DivisibilityError::Invariant(
            "promotion lowered the divisibility degree".into(),
        ));
    }
    Ok(result)
}

/// Brute-force decision of weak divisibility of degree `n` at `x`:
/// the independent oracle for `weak_divide` and `promote_divisibility`.
/// Finite oracles saturate the submonoid generated by all multiples
/// `m·e` with `m >= n`; free oracles search decompositions below `x`.
pub fn is_weakly_divisible_degree(
    oracle: &dyn MonoidOracle,
    x: &OracleElem,
    n: u64,
) -> Result<bool, DivisibilityError> {
    if let Some(size) = oracle.size() {
        let carrier = oracle.enumerate(size);
        let mut gens = Vec::new();
        for e in &carrier {
            // The multiples m·e for m >= n take every value they will ever
            // take within the next `size` steps.
            let mut multiple = oracle.scale(&nat(n), e)?;
            for _ in 0..=size {
                if !gens.contains(&multiple) {
                    gens.push(multiple.clone());
                }
                multiple = oracle.add(&multiple, e)?;
            }
        }
        return Ok(oracle.generated_submonoid_contains(&gens, x)?);
    }

    // Free oracle: memoized search over terms m·z <= remaining, m >= n.
    fn search(
        oracle: &dyn MonoidOracle,
        rem: &OracleElem,
        n: u64,
        memo: &mut HashMap<OracleElem, bool>,
        budget: &mut u64,
    ) -> Result<bool, DivisibilityError> {
        if oracle.eq_elem(rem, &oracle.zero())? {
            return Ok(true);
        }
        if let Some(&cached) = memo.get(rem) {
            return Ok(cached);
        }
        if *budget == 0 {
            return Err(DivisibilityError::Budget(
                "weak-divisibility search too large".into(),
            ));
        }
        *budget -= 1;
        let mut found = false;
        'outer: for z in oracle.elements_leq(rem)? {
            if oracle.eq_elem(&z, &oracle.zero())? {
                continue;
            }
            let mut m = n;
            loop {
                let term = oracle.scale(&nat(m), &z)?;
                let Some(rest) = oracle.le_witness(&term, rem)? else {
                    break;
                };
                if search(oracle, &rest, n, memo, budget)? {
                    found = true;
                    break 'outer;
                }
                m += 1;
            }
        }
        memo.insert(rem.clone(), found);
        Ok(found)
    }
    let mut memo = HashMap::new();
    let mut budget = 1_000_000u64;
    search(oracle, x, n, &mut memo, &mut budget)
}
