//! Resolving a refinement monoid by simplicial monoids.
//!
//! Given a morphism `α: Δ → M` from a simplicial monoid into a refinement
//! monoid, a *resolution step* produces `β: Δ → Δ'` and `α': Δ' → M` with
//! `α'∘β = α` such that chosen `∝`-relations that hold under `α` become
//! visible inside `Δ'` itself. Iterating over all basis-subset pairs and
//! then over stages yields a tower `Δ_0 → Δ_1 → ⋯` whose colimit is a
//! dimension monoid mapping onto `M` and reflecting `∝`.
//!
//! Every constructor re-verifies its postconditions exactly before
//! returning; a failure there indicates a broken oracle, not bad input.

use std::collections::BTreeMap;

use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::oracle::{eval_basis_images, refine_matrix, MonoidOracle, OracleElem, OracleError};
use crate::simplicial::{IndexSet, SimplicialError, SimplicialMonoid};
use crate::{nat, Element, Morphism, Nat};

#[derive(Debug, Error)]
pub enum ResolutionError {
    #[error(transparent)]
    Simplicial(#[from] SimplicialError),
    #[error("oracle failure: {0}")]
    Oracle(#[from] OracleError),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("rank budget exceeded{}: rank {rank} > budget {budget}", stage.map(|s| format!(" while extending stage {s}")).unwrap_or_default())]
    RankBudget {
        rank: usize,
        budget: usize,
        stage: Option<usize>,
    },
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("tower not built deep enough: stage {needed} required but only {built} stages exist")]
    InsufficientDepth { needed: usize, built: usize },
    #[error("stage {stage} out of range: tower has {stages} stages")]
    StageOutOfRange { stage: usize, stages: usize },
}

/// One resolution step: the new simplicial monoid, the connecting
/// morphism, and the new basis images (`α'` columnwise).
#[derive(Debug, Clone)]
pub struct Resolved {
    pub delta: SimplicialMonoid,
    pub beta: Morphism,
    pub alpha: Vec<OracleElem>,
}

impl Resolved {
    fn identity(delta: SimplicialMonoid, alpha: &[OracleElem]) -> Self {
        Resolved {
            delta,
            beta: Morphism::identity(delta.rank()),
            alpha: alpha.to_vec(),
        }
    }
}

fn check_alpha(delta: SimplicialMonoid, alpha: &[OracleElem]) -> Result<(), ResolutionError> {
    if alpha.len() != delta.rank() {
        return Err(ResolutionError::Precondition(format!(
            "{} basis images given for rank {}",
            alpha.len(),
            delta.rank()
        )));
    }
    Ok(())
}

/// `α(e_I)` for `α` given by basis images.
fn alpha_of_subset(
    oracle: &dyn MonoidOracle,
    alpha: &[OracleElem],
    subset: &IndexSet,
) -> Result<OracleElem, OracleError> {
    let picked: Vec<OracleElem> = subset.iter().map(|&i| alpha[i].clone()).collect();
    oracle.sum_elems(&picked)
}

fn verify_commutes(
    oracle: &dyn MonoidOracle,
    alpha_old: &[OracleElem],
    beta: &Morphism,
    alpha_new: &[OracleElem],
    context: &str,
) -> Result<(), ResolutionError> {
    for (i, old) in alpha_old.iter().enumerate() {
        let pushed = eval_basis_images(oracle, alpha_new, beta.column(i))?;
        if !oracle.eq_elem(&pushed, old)? {
            return Err(ResolutionError::Invariant(format!(
                "{context}: α'∘β differs from α at basis index {i}"
            )));
        }
    }
    Ok(())
}

/// Resolve `α(e_pivot) ∝ α(e_rest)` where `{pivot} ∪ rest` is the whole
/// basis. Produces `Δ'` of rank exactly `(n+1)(r-1)` for the least witness
/// `n >= 1`, with `β(e_pivot) = Σ_{i∈rest} Σ_{j=1}^{n} j·e_{ij}`,
/// `β(e_i) = Σ_{j=0}^{n} e_{ij}` (so `β(e_rest) = e_{Δ'}`), and
/// `α'(e_{ij})` the interpolants of a Riesz decomposition refined against
/// the rest images. The new basis is laid out row-major: `(i, j)` for
/// `i ∈ rest` ascending, `j = 0..=n`.
pub fn resolve_basis_split(
    oracle: &dyn MonoidOracle,
    delta: SimplicialMonoid,
    alpha: &[OracleElem],
    pivot: usize,
    rest: &IndexSet,
) -> Result<Resolved, ResolutionError> {
    check_alpha(delta, alpha)?;
    let rank = delta.rank();
    rest.check_rank(rank)?;
    if pivot >= rank {
        return Err(SimplicialError::IndexOutOfRange { index: pivot, rank }.into());
    }
    if rest.contains(pivot) || rest.len() + 1 != rank {
        return Err(ResolutionError::Precondition(format!(
            "pivot {pivot} and rest {rest} must partition the basis of rank {rank}"
        )));
    }

    let a_pivot = &alpha[pivot];
    let a_rest = alpha_of_subset(oracle, alpha, rest)?;
    let least = oracle.decide_propto(a_pivot, &a_rest)?.ok_or_else(|| {
        ResolutionError::Precondition(format!("α(e_{pivot}) is not ∝-below α(e_{rest})"))
    })?;
    // The construction needs n >= 1; the degenerate least witness 0 only
    // happens for α(e_pivot) = 0, where n = 1 works as well.
    let least = if least.is_zero() { Nat::one() } else { least };
    let n = least
        .to_usize()
        .ok_or_else(|| OracleError::SearchBudget(format!("∝-witness {least} too large")))?;

    let parts = oracle.riesz_decompose(a_pivot, &a_rest, n)?;
    let rest_sorted: Vec<usize> = rest.iter().copied().collect();
    let rows: Vec<OracleElem> = rest_sorted.iter().map(|&i| alpha[i].clone()).collect();
    let interpolants = refine_matrix(oracle, &rows, &parts)?;

    let new_rank = (n + 1) * (rank - 1);
    let delta_new = SimplicialMonoid::new(new_rank);
    let mut alpha_new = Vec::with_capacity(new_rank);
    for row in &interpolants {
        alpha_new.extend(row.iter().cloned());
    }

    let mut columns = vec![Element::zero(new_rank); rank];
    let mut pivot_coords = vec![Nat::zero(); new_rank];
    for (row_idx, &i) in rest_sorted.iter().enumerate() {
        let mut coords = vec![Nat::zero(); new_rank];
        for j in 0..=n {
            let pos = row_idx * (n + 1) + j;
            coords[pos] = Nat::one();
            pivot_coords[pos] = nat(j as u64);
        }
        columns[i] = Element::new(coords);
    }
    columns[pivot] = Element::new(pivot_coords);
    let beta = Morphism::new(new_rank, columns)?;

    verify_commutes(oracle, alpha, &beta, &alpha_new, "basis split")?;
    let beta_rest = beta.apply(&delta.basis_sum(rest)?)?;
    if beta_rest != delta_new.top() {
        return Err(ResolutionError::Invariant(
            "basis split: β(e_rest) is not the all-ones element".into(),
        ));
    }
    if !beta.column(pivot).le(&beta_rest.scale(&nat(n as u64)))? {
        return Err(ResolutionError::Invariant(
            "basis split: β(e_pivot) is not below n·β(e_rest)".into(),
        ));
    }

    Ok(Resolved {
        delta: delta_new,
        beta,
        alpha: alpha_new,
    })
}

/// Result of one inductive resolution step on a pair of index sets.
#[derive(Debug, Clone)]
pub struct InductiveStep {
    pub resolved: Resolved,
    /// Indices of the block that replaced `I ∪ {j}`.
    pub new_block: IndexSet,
    /// Where each basis index outside `I ∪ {j}` landed.
    pub relocated: BTreeMap<usize, usize>,
}

/// Split off the submonoid spanned by `I ∪ {j}`, resolve
/// `α(e_j) ∝ α(e_I)` there by a basis split, and reassemble with the
/// untouched block carried along identically. The untouched indices come
/// first (ascending), followed by the new block `K`; the step's whole
/// contract (commutativity, carried basis elements, `β(e_I) = e_K`,
/// `β(e_j) ∝ β(e_I)`, `α'(f_{J∖{j}}) ∝ α'(f_K)`) is re-verified exactly.
pub fn inductive_step(
    oracle: &dyn MonoidOracle,
    delta: SimplicialMonoid,
    alpha: &[OracleElem],
    set_i: &IndexSet,
    set_j: &IndexSet,
    j: usize,
) -> Result<InductiveStep, ResolutionError> {
    check_alpha(delta, alpha)?;
    let rank = delta.rank();
    set_i.check_rank(rank)?;
    set_j.check_rank(rank)?;
    if set_i.is_empty() || set_j.is_empty() || !set_i.is_disjoint(set_j) || !set_j.contains(j) {
        return Err(ResolutionError::Precondition(format!(
            "need nonempty disjoint I={set_i}, J={set_j} with j={j} in J"
        )));
    }
    let a_j_set = alpha_of_subset(oracle, alpha, set_j)?;
    let a_i_set = alpha_of_subset(oracle, alpha, set_i)?;
    if oracle.decide_propto(&a_j_set, &a_i_set)?.is_none() {
        return Err(ResolutionError::Precondition(format!(
            "α(e_{set_j}) is not ∝-below α(e_{set_i})"
        )));
    }

    // carrier2 = I ∪ {j}, carrier1 = everything else.
    let mut pivot_set = IndexSet::empty();
    pivot_set.insert(j);
    let carrier2_set = set_i.union(&pivot_set);
    let carrier2: Vec<usize> = carrier2_set.iter().copied().collect();
    let carrier1: Vec<usize> = (0..rank).filter(|i| !carrier2_set.contains(*i)).collect();

    let alpha2: Vec<OracleElem> = carrier2.iter().map(|&i| alpha[i].clone()).collect();
    let local_pivot = carrier2
        .iter()
        .position(|&i| i == j)
        .expect("j in carrier2");
    let local_rest = IndexSet::from_iter((0..carrier2.len()).filter(|&p| p != local_pivot));
    let split = resolve_basis_split(
        oracle,
        SimplicialMonoid::new(carrier2.len()),
        &alpha2,
        local_pivot,
        &local_rest,
    )?;

    let offset = carrier1.len();
    let (delta_new, inj1, inj2) = SimplicialMonoid::new(offset).direct_sum::<Nat>(&split.delta);
    let new_rank = delta_new.rank();

    let mut alpha_new: Vec<OracleElem> = carrier1.iter().map(|&i| alpha[i].clone()).collect();
    alpha_new.extend(split.alpha.iter().cloned());

    let mut relocated = BTreeMap::new();
    let mut columns = vec![Element::zero(new_rank); rank];
    for (pos, &old) in carrier1.iter().enumerate() {
        relocated.insert(old, pos);
        columns[old] = inj1.column(pos).clone();
    }
    for (local, &old) in carrier2.iter().enumerate() {
        columns[old] = inj2.apply(split.beta.column(local))?;
    }
    let beta = Morphism::new(new_rank, columns)?;
    let new_block = IndexSet::from_iter(offset..new_rank);

    if new_rank < 2 * set_i.len() + set_j.len() - 1 {
        return Err(ResolutionError::Invariant(format!(
            "inductive step: rank {new_rank} below 2|I|+|J|-1"
        )));
    }
    verify_commutes(oracle, alpha, &beta, &alpha_new, "inductive step")?;
    // β(e_k) must be a carried basis element outside K for k in J∖{j}.
    for &k in set_j.iter().filter(|&&k| k != j) {
        let target = relocated.get(&k).copied().ok_or_else(|| {
            ResolutionError::Invariant(format!("inductive step: index {k} was not carried along"))
        })?;
        if beta.column(k) != &Element::basis(new_rank, target)? || new_block.contains(target) {
            return Err(ResolutionError::Invariant(format!(
                "inductive step: β(e_{k}) is not the carried basis element"
            )));
        }
    }
    // β(e_I) = e_K and β(e_j) ∝ β(e_I).
    let beta_i = beta.apply(&delta.basis_sum(set_i)?)?;
    if beta_i != delta_new.basis_sum(&new_block)? {
        return Err(ResolutionError::Invariant(
            "inductive step: β(e_I) is not the indicator of the new block".into(),
        ));
    }
    if beta.column(j).propto(&beta_i)?.is_none() {
        return Err(ResolutionError::Invariant(
            "inductive step: β(e_j) is not ∝-below β(e_I)".into(),
        ));
    }
    // α'(f_{J∖{j}}) ∝ α'(f_K).
    let moved_j = IndexSet::from_iter(set_j.iter().filter(|&&k| k != j).map(|k| relocated[k]));
    if !moved_j.is_empty() {
        let lhs = alpha_of_subset(oracle, &alpha_new, &moved_j)?;
        let rhs = alpha_of_subset(oracle, &alpha_new, &new_block)?;
        if oracle.decide_propto(&lhs, &rhs)?.is_none() {
            return Err(ResolutionError::Invariant(
                "inductive step: α'(f_{J∖{j}}) is not ∝-below α'(f_K)".into(),
            ));
        }
    }

    Ok(InductiveStep {
        resolved: Resolved {
            delta: delta_new,
            beta,
            alpha: alpha_new,
        },
        new_block,
        relocated,
    })
}

/// Resolve `α(e_J) ∝ α(e_I)` for disjoint nonempty index sets by
/// induction on `|J|`: the base case is a single inductive step; the
/// inductive case steps on the first element of `J`, recurses on
/// `(K, J∖{j})`, and composes the connecting morphisms. The conclusion
/// `β(e_J) ∝ β(e_I)` is re-verified inside the final monoid.
pub fn resolve_index_pair(
    oracle: &dyn MonoidOracle,
    delta: SimplicialMonoid,
    alpha: &[OracleElem],
    set_i: &IndexSet,
    set_j: &IndexSet,
) -> Result<Resolved, ResolutionError> {
    let depth = set_j.len();
    let resolved = index_pair_recurse(oracle, delta, alpha, set_i, set_j, depth)?;
    let beta_j = resolved.beta.apply(&delta.basis_sum(set_j)?)?;
    let beta_i = resolved.beta.apply(&delta.basis_sum(set_i)?)?;
    if beta_j.propto(&beta_i)?.is_none() {
        return Err(ResolutionError::Invariant(
            "index pair: β(e_J) is not ∝-below β(e_I)".into(),
        ));
    }
    verify_commutes(oracle, alpha, &resolved.beta, &resolved.alpha, "index pair")?;
    Ok(resolved)
}

fn index_pair_recurse(
    oracle: &dyn MonoidOracle,
    delta: SimplicialMonoid,
    alpha: &[OracleElem],
    set_i: &IndexSet,
    set_j: &IndexSet,
    depth_left: usize,
) -> Result<Resolved, ResolutionError> {
    assert!(depth_left >= set_j.len(), "recursion deeper than |J|");
    let j = set_j.min().expect("J nonempty");
    let step = inductive_step(oracle, delta, alpha, set_i, set_j, j)?;
    if set_j.len() == 1 {
        return Ok(step.resolved);
    }
    let moved_j = IndexSet::from_iter(set_j.iter().filter(|&&k| k != j).map(|k| step.relocated[k]));
    let inner = index_pair_recurse(
        oracle,
        step.resolved.delta,
        &step.resolved.alpha,
        &step.new_block,
        &moved_j,
        depth_left - 1,
    )?;
    let beta = Morphism::compose(&inner.beta, &step.resolved.beta)?;
    Ok(Resolved {
        delta: inner.delta,
        beta,
        alpha: inner.alpha,
    })
}

/// Resolve `α(x) ∝ α(y)` for arbitrary elements, by support reduction:
/// empty `supp(x)` or `supp(x) ⊆ supp(y)` need nothing; `y = 0` kills the
/// support of `x` (its images are zero by conicality); otherwise the pair
/// `(supp(x)∖supp(y), supp(y))` is resolved as an index pair.
pub fn resolve_element_pair(
    oracle: &dyn MonoidOracle,
    delta: SimplicialMonoid,
    alpha: &[OracleElem],
    x: &Element,
    y: &Element,
) -> Result<Resolved, ResolutionError> {
    check_alpha(delta, alpha)?;
    let ax = eval_basis_images(oracle, alpha, x)?;
    let ay = eval_basis_images(oracle, alpha, y)?;
    if oracle.decide_propto(&ax, &ay)?.is_none() {
        return Err(ResolutionError::Precondition(format!(
            "α({x}) is not ∝-below α({y})"
        )));
    }
    let supp_x = x.support();
    let supp_y = y.support();

    let resolved = if supp_x.is_empty() {
        Resolved::identity(delta, alpha)
    } else if supp_y.is_empty() {
        // α(x) ∝ 0 forces α(e_k) = 0 on supp(x); kill those directions.
        let rank = delta.rank();
        let columns = (0..rank)
            .map(|k| {
                if supp_x.contains(k) {
                    Ok(Element::zero(rank))
                } else {
                    Element::basis(rank, k)
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        let beta = Morphism::new(rank, columns)?;
        verify_commutes(oracle, alpha, &beta, alpha, "support kill")?;
        Resolved {
            delta,
            beta,
            alpha: alpha.to_vec(),
        }
    } else {
        let reduced = supp_x.difference(&supp_y);
        if reduced.is_empty() {
            Resolved::identity(delta, alpha)
        } else {
            // Support reduction: α(e_{J∖I}) ∝ α(e_I) must follow.
            let lhs = alpha_of_subset(oracle, alpha, &reduced)?;
            let rhs = alpha_of_subset(oracle, alpha, &supp_y)?;
            if oracle.decide_propto(&lhs, &rhs)?.is_none() {
                return Err(ResolutionError::Invariant(
                    "support reduction failed: α(e_{J∖I}) not ∝-below α(e_I)".into(),
                ));
            }
            resolve_index_pair(oracle, delta, alpha, &supp_y, &reduced)?
        }
    };

    let bx = resolved.beta.apply(x)?;
    let by = resolved.beta.apply(y)?;
    if bx.propto(&by)?.is_none() {
        return Err(ResolutionError::Invariant(
            "element pair: β(x) is not ∝-below β(y)".into(),
        ));
    }
    Ok(resolved)
}

/// Resolve every basis-subset pair visible in `Δ`: for all `(J, I)` with
/// `J∖I ≠ ∅` and `α(e_J) ∝ α(e_I)` in the oracle, the final `β` satisfies
/// `β(e_J) ∝ β(e_I)` — and hence `β(x) ∝ β(y)` for all `x, y` with
/// `α(x) ∝ α(y)`, by support reduction. Pairs are scheduled by subset size
/// then lexicographic order, re-evaluated against the composed morphism,
/// and skipped when already satisfied.
pub fn resolve_all_pairs(
    oracle: &dyn MonoidOracle,
    delta: SimplicialMonoid,
    alpha: &[OracleElem],
    rank_budget: usize,
) -> Result<Resolved, ResolutionError> {
    check_alpha(delta, alpha)?;
    let rank = delta.rank();
    if rank > rank_budget {
        return Err(ResolutionError::RankBudget {
            rank,
            budget: rank_budget,
            stage: None,
        });
    }
    let subsets = IndexSet::all_subsets(rank);
    let mut pairs: Vec<(IndexSet, IndexSet)> = Vec::new();
    for j_set in &subsets {
        if j_set.is_empty() {
            continue;
        }
        let a_j = alpha_of_subset(oracle, alpha, j_set)?;
        for i_set in &subsets {
            if j_set.difference(i_set).is_empty() {
                continue;
            }
            let a_i = alpha_of_subset(oracle, alpha, i_set)?;
            if oracle.decide_propto(&a_j, &a_i)?.is_some() {
                pairs.push((j_set.clone(), i_set.clone()));
            }
        }
    }

    let mut current = Resolved::identity(delta, alpha);
    for (j_set, i_set) in &pairs {
        let bx = current.beta.apply(&delta.basis_sum(j_set)?)?;
        let by = current.beta.apply(&delta.basis_sum(i_set)?)?;
        if bx.propto(&by)?.is_some() {
            continue; // already satisfied by the composed morphism
        }
        let step = resolve_element_pair(oracle, current.delta, &current.alpha, &bx, &by)?;
        current = Resolved {
            delta: step.delta,
            beta: Morphism::compose(&step.beta, &current.beta)?,
            alpha: step.alpha,
        };
        if current.delta.rank() > rank_budget {
            return Err(ResolutionError::RankBudget {
                rank: current.delta.rank(),
                budget: rank_budget,
                stage: None,
            });
        }
    }

    // Re-verify the whole contract on the final morphism.
    verify_commutes(
        oracle,
        alpha,
        &current.beta,
        &current.alpha,
        "stage resolution",
    )?;
    for (j_set, i_set) in &pairs {
        let bx = current.beta.apply(&delta.basis_sum(j_set)?)?;
        let by = current.beta.apply(&delta.basis_sum(i_set)?)?;
        if bx.propto(&by)?.is_none() {
            return Err(ResolutionError::Invariant(format!(
                "stage resolution: pair (J={j_set}, I={i_set}) left unresolved"
            )));
        }
    }
    Ok(current)
}

/// One level of a tower: `Δ_j`, its basis images in `M`, and the
/// connecting morphism to the next stage (absent at the newest stage).
#[derive(Debug, Clone)]
pub struct Stage {
    pub delta: SimplicialMonoid,
    pub alpha: Vec<OracleElem>,
    pub beta: Option<Morphism>,
}

/// The stage-indexed resolution of an oracle: `Δ_0 → Δ_1 → ⋯` with
/// surjections onto a growing chain of submonoids `M_j` that eventually
/// covers the oracle's enumeration. Depth `d` means `d` extensions after
/// stage 0.
pub struct Tower<'a> {
    oracle: &'a dyn MonoidOracle,
    stages: Vec<Stage>,
    rank_budget: usize,
}

/// Answer of a colimit `∝`-query. A positive answer carries the stage
/// where the relation becomes visible and the concrete multiplier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProptoAnswer {
    No,
    Yes { stage: usize, multiplier: Nat },
}

/// An element of the colimit, recorded as a representative at some stage.
/// `(j, x)` and `(j+1, β_j(x))` denote the same element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColimitElement {
    pub stage: usize,
    pub rep: Element,
}

impl<'a> Tower<'a> {
    /// Stage 0: the rank-1 simplicial monoid with `α_0(e_0) = x_0`.
    pub fn start(
        oracle: &'a dyn MonoidOracle,
        rank_budget: usize,
    ) -> Result<Self, ResolutionError> {
        if rank_budget == 0 {
            return Err(ResolutionError::Precondition(
                "rank budget must be >= 1".into(),
            ));
        }
        let x0 = oracle
            .enumerate(1)
            .pop()
            .ok_or_else(|| ResolutionError::Precondition("oracle enumeration is empty".into()))?;
        Ok(Tower {
            oracle,
            stages: vec![Stage {
                delta: SimplicialMonoid::new(1),
                alpha: vec![x0],
                beta: None,
            }],
            rank_budget,
        })
    }

    pub fn oracle(&self) -> &'a dyn MonoidOracle {
        self.oracle
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn rank_budget(&self) -> usize {
        self.rank_budget
    }

    /// Extensions performed so far.
    pub fn depth(&self) -> usize {
        self.stages.len() - 1
    }

    /// Append stage `j+1`: resolve every pair visible in stage `j`, then
    /// adjoin a fresh basis element for the next enumeration element if it
    /// is not already in the image. Exhausted finite enumerations extend
    /// without adjoining.
    pub fn extend(&mut self) -> Result<(), ResolutionError> {
        let stage_idx = self.stages.len() - 1;
        let last = &self.stages[stage_idx];
        let resolved = resolve_all_pairs(self.oracle, last.delta, &last.alpha, self.rank_budget)
            .map_err(|e| match e {
                ResolutionError::RankBudget { rank, budget, .. } => ResolutionError::RankBudget {
                    rank,
                    budget,
                    stage: Some(stage_idx),
                },
                other => other,
            })?;

        let next_index = stage_idx + 1;
        let enumerated = self.oracle.enumerate(next_index + 1);
        let mut delta_next = resolved.delta;
        let mut alpha_next = resolved.alpha;
        let mut beta = resolved.beta;
        if let Some(x_next) = enumerated.get(next_index) {
            if !self
                .oracle
                .generated_submonoid_contains(&alpha_next, x_next)?
            {
                let new_rank = delta_next.rank() + 1;
                if new_rank > self.rank_budget {
                    return Err(ResolutionError::RankBudget {
                        rank: new_rank,
                        budget: self.rank_budget,
                        stage: Some(stage_idx),
                    });
                }
                delta_next = SimplicialMonoid::new(new_rank);
                alpha_next.push(x_next.clone());
                let columns = beta
                    .columns()
                    .iter()
                    .map(|c| {
                        let mut coords = c.coords().to_vec();
                        coords.push(Nat::zero());
                        Element::new(coords)
                    })
                    .collect();
                beta = Morphism::new(new_rank, columns)?;
            }
        }

        verify_commutes(
            self.oracle,
            &self.stages[stage_idx].alpha,
            &beta,
            &alpha_next,
            "tower extension",
        )?;
        self.stages[stage_idx].beta = Some(beta);
        self.stages.push(Stage {
            delta: delta_next,
            alpha: alpha_next,
            beta: None,
        });
        self.verify_enumeration_prefix(self.stages.len() - 1)?;
        Ok(())
    }

    /// `{x_0,…,x_j} ⊆ M_j`: each enumerated prefix element lies in the
    /// submonoid generated by the stage's basis images.
    pub fn verify_enumeration_prefix(&self, stage: usize) -> Result<(), ResolutionError> {
        let st = self.stage(stage)?;
        let prefix = self.oracle.enumerate(stage + 1);
        for (i, x) in prefix.iter().enumerate() {
            if !self.oracle.generated_submonoid_contains(&st.alpha, x)? {
                return Err(ResolutionError::Invariant(format!(
                    "stage {stage} does not contain enumeration element x_{i}"
                )));
            }
        }
        Ok(())
    }

    pub fn stage(&self, stage: usize) -> Result<&Stage, ResolutionError> {
        self.stages
            .get(stage)
            .ok_or(ResolutionError::StageOutOfRange {
                stage,
                stages: self.stages.len(),
            })
    }

    /// Push a representative forward to a later stage along the recorded
    /// connecting morphisms.
    pub fn push_to(&self, c: &ColimitElement, stage: usize) -> Result<Element, ResolutionError> {
        if stage < c.stage {
            return Err(ResolutionError::Precondition(format!(
                "cannot push stage-{} element back to stage {stage}",
                c.stage
            )));
        }
        self.stage(stage)?;
        let mut rep = c.rep.clone();
        for s in c.stage..stage {
            let beta = self.stages[s]
                .beta
                .as_ref()
                .expect("beta exists below the newest stage");
            rep = beta.apply(&rep)?;
        }
        Ok(rep)
    }

    /// `α` on the colimit: evaluate the representative at its stage. This
    /// is independent of the representative since `α_{j+1}∘β_j = α_j`.
    pub fn colimit_alpha(&self, c: &ColimitElement) -> Result<OracleElem, ResolutionError> {
        let st = self.stage(c.stage)?;
        Ok(eval_basis_images(self.oracle, &st.alpha, &c.rep)?)
    }

    /// Decide `a ∝ b` in the colimit. The answer equals the oracle-side
    /// `α(a) ∝ α(b)`; a positive answer is certified by a concrete stage
    /// and multiplier, which the tower guarantees to exist one stage past
    /// the representatives' common stage.
    pub fn colimit_propto(
        &self,
        a: &ColimitElement,
        b: &ColimitElement,
    ) -> Result<ProptoAnswer, ResolutionError> {
        let j = a.stage.max(b.stage);
        self.stage(j)?;
        let aa = self.colimit_alpha(a)?;
        let ab = self.colimit_alpha(b)?;
        if self.oracle.decide_propto(&aa, &ab)?.is_none() {
            return Ok(ProptoAnswer::No);
        }
        if j + 1 >= self.stages.len() {
            return Err(ResolutionError::InsufficientDepth {
                needed: j + 1,
                built: self.stages.len() - 1,
            });
        }
        let mut rep_a = self.push_to(a, j)?;
        let mut rep_b = self.push_to(b, j)?;
        for s in j..self.stages.len() {
            if let Some(n) = rep_a.propto(&rep_b)? {
                return Ok(ProptoAnswer::Yes {
                    stage: s,
                    multiplier: n,
                });
            }
            if s + 1 < self.stages.len() {
                let beta = self.stages[s]
                    .beta
                    .as_ref()
                    .expect("beta below newest stage");
                rep_a = beta.apply(&rep_a)?;
                rep_b = beta.apply(&rep_b)?;
            }
        }
        Err(ResolutionError::Invariant(format!(
            "α reports ∝ but no stage up to {} exhibits a witness",
            self.stages.len() - 1
        )))
    }

    /// The propagation law at stage `j`: every subset pair whose images
    /// are oracle-`∝` becomes `∝` under `β_j`. Exhaustive over all subset
    /// pairs up to rank 12, sampled (singletons, empty and full set) above.
    pub fn verify_propagation(&self, stage: usize) -> Result<usize, ResolutionError> {
        let st = self.stage(stage)?;
        let beta = st.beta.as_ref().ok_or(ResolutionError::InsufficientDepth {
            needed: stage + 1,
            built: self.stages.len() - 1,
        })?;
        let rank = st.delta.rank();
        let subsets = if rank <= 12 {
            IndexSet::all_subsets(rank)
        } else {
            let mut s: Vec<IndexSet> = (0..rank).map(|i| IndexSet::from_iter([i])).collect();
            s.push(IndexSet::empty());
            s.push(IndexSet::full(rank));
            s
        };
        let mut checked = 0;
        for j_set in &subsets {
            let a_j = alpha_of_subset(self.oracle, &st.alpha, j_set)?;
            for i_set in &subsets {
                let a_i = alpha_of_subset(self.oracle, &st.alpha, i_set)?;
                if self.oracle.decide_propto(&a_j, &a_i)?.is_none() {
                    continue;
                }
                checked += 1;
                let bx = beta.apply(&st.delta.basis_sum(j_set)?)?;
                let by = beta.apply(&st.delta.basis_sum(i_set)?)?;
                if bx.propto(&by)?.is_none() {
                    return Err(ResolutionError::Invariant(format!(
                        "propagation fails at stage {stage} for (J={j_set}, I={i_set})"
                    )));
                }
            }
        }
        Ok(checked)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::fixtures::*;

    fn el(coords: &[u64]) -> Element {
        Element::new(coords.iter().map(|&c| nat(c)).collect())
    }

    fn n1(x: u64) -> OracleElem {
        OracleElem::from_u64s(&[x])
    }

    fn idx(i: usize) -> OracleElem {
        OracleElem::Index(i)
    }

    #[test]
    fn basis_split_over_naturals() {
        // r=2, α=(2,1), pivot 0: least witness n=2, Riesz parts (0,0,1),
        // single interpolation row (0,0,1).
        let o = naturals();
        let r = resolve_basis_split(
            &o,
            SimplicialMonoid::new(2),
            &[n1(2), n1(1)],
            0,
            &IndexSet::from_iter([1]),
        )
        .unwrap();
        assert_eq!(r.delta.rank(), 3);
        assert_eq!(r.alpha, vec![n1(0), n1(0), n1(1)]);
        assert_eq!(r.beta.column(0), &el(&[0, 1, 2]));
        assert_eq!(r.beta.column(1), &el(&[1, 1, 1]));
    }

    #[test]
    fn basis_split_degenerate_zero_images() {
        // α=(0,0): least witness 0 lifts to n=1.
        let o = naturals();
        let r = resolve_basis_split(
            &o,
            SimplicialMonoid::new(2),
            &[n1(0), n1(0)],
            0,
            &IndexSet::from_iter([1]),
        )
        .unwrap();
        assert_eq!(r.delta.rank(), 2);
        assert_eq!(r.alpha, vec![n1(0), n1(0)]);
        assert_eq!(r.beta.column(0), &el(&[0, 1]));
        assert_eq!(r.beta.column(1), &el(&[1, 1]));
    }

    #[test]
    fn basis_split_over_semilattice() {
        // {0,u}, α=(u,u), pivot 0: n=1, Riesz (0,u), interpolants (0,u).
        let o = semilattice2();
        let r = resolve_basis_split(
            &o,
            SimplicialMonoid::new(2),
            &[idx(1), idx(1)],
            0,
            &IndexSet::from_iter([1]),
        )
        .unwrap();
        assert_eq!(r.delta.rank(), 2);
        assert_eq!(r.alpha, vec![idx(0), idx(1)]);
        assert_eq!(r.beta.column(0), &el(&[0, 1]));
        assert_eq!(r.beta.column(1), &el(&[1, 1]));
    }

    #[test]
    fn basis_split_rejects_incomparable_images() {
        let o = naturals();
        let err = resolve_basis_split(
            &o,
            SimplicialMonoid::new(2),
            &[n1(1), n1(0)],
            0,
            &IndexSet::from_iter([1]),
        )
        .unwrap_err();
        assert!(matches!(err, ResolutionError::Precondition(_)));
    }

    #[test]
    fn rank_law_on_split_family() {
        // rank(Δ') = (n+1)(r-1) with n the (lifted) least witness.
        let o = naturals();
        for r in 2..=5usize {
            for pivot_val in 0..=6u64 {
                let alpha: Vec<OracleElem> = (0..r)
                    .map(|i| if i == 0 { n1(pivot_val) } else { n1(1) })
                    .collect();
                let rest = IndexSet::from_iter(1..r);
                let resolved =
                    resolve_basis_split(&o, SimplicialMonoid::new(r), &alpha, 0, &rest).unwrap();
                let n = o
                    .decide_propto(&n1(pivot_val), &n1((r - 1) as u64))
                    .unwrap()
                    .unwrap()
                    .max(nat(1));
                let n = usize::try_from(&n).unwrap();
                assert_eq!(resolved.delta.rank(), (n + 1) * (r - 1));
            }
        }
    }

    #[test]
    fn inductive_step_example() {
        // Z+, r=3, α=(1,1,2), I={2}, J={0,1}, j=0: the {0,2} block splits
        // with n=1 (1 <= 1·2), untouched index 1 relocates to 0, K={1,2}.
        let o = naturals();
        let step = inductive_step(
            &o,
            SimplicialMonoid::new(3),
            &[n1(1), n1(1), n1(2)],
            &IndexSet::from_iter([2]),
            &IndexSet::from_iter([0, 1]),
            0,
        )
        .unwrap();
        assert_eq!(step.resolved.delta.rank(), 3);
        assert_eq!(step.new_block, IndexSet::from_iter([1, 2]));
        assert_eq!(step.relocated[&1], 0);
        assert_eq!(step.resolved.beta.column(1), &el(&[1, 0, 0]));
        // rank >= 2|I| + |J| - 1 = 3.
        assert!(step.resolved.delta.rank() >= 3);
    }

    #[test]
    fn inductive_step_zero_images_degenerate() {
        let o = naturals();
        let step = inductive_step(
            &o,
            SimplicialMonoid::new(3),
            &[n1(0), n1(0), n1(0)],
            &IndexSet::from_iter([2]),
            &IndexSet::from_iter([0, 1]),
            0,
        )
        .unwrap();
        assert!(step.resolved.alpha.iter().all(|a| a == &n1(0)));
    }

    #[test]
    fn index_pair_two_level_recursion() {
        let o = naturals();
        let delta = SimplicialMonoid::new(3);
        let alpha = [n1(1), n1(1), n1(2)];
        let set_i = IndexSet::from_iter([2]);
        let set_j = IndexSet::from_iter([0, 1]);
        let r = resolve_index_pair(&o, delta, &alpha, &set_i, &set_j).unwrap();
        let bj = r.beta.apply(&delta.basis_sum(&set_j).unwrap()).unwrap();
        let bi = r.beta.apply(&delta.basis_sum(&set_i).unwrap()).unwrap();
        assert!(bj.propto(&bi).unwrap().is_some());

        let s = semilattice2();
        let alpha = [idx(1), idx(1), idx(1)];
        let r = resolve_index_pair(&s, delta, &alpha, &set_i, &set_j).unwrap();
        let bj = r.beta.apply(&delta.basis_sum(&set_j).unwrap()).unwrap();
        let bi = r.beta.apply(&delta.basis_sum(&set_i).unwrap()).unwrap();
        assert!(bj.propto(&bi).unwrap().is_some());
    }

    #[test]
    fn index_pair_three_level_recursion() {
        // |J| = 3 forces two nested inductive steps with relocation.
        let o = naturals();
        let delta = SimplicialMonoid::new(4);
        let alpha = [n1(1), n1(1), n1(1), n1(3)];
        let set_i = IndexSet::from_iter([3]);
        let set_j = IndexSet::from_iter([0, 1, 2]);
        let r = resolve_index_pair(&o, delta, &alpha, &set_i, &set_j).unwrap();
        let bj = r.beta.apply(&delta.basis_sum(&set_j).unwrap()).unwrap();
        let bi = r.beta.apply(&delta.basis_sum(&set_i).unwrap()).unwrap();
        assert!(bj.propto(&bi).unwrap().is_some());
        // Commutativity survives the composition of all three levels.
        for (i, img) in alpha.iter().enumerate() {
            let pushed = eval_basis_images(&o, &r.alpha, r.beta.column(i)).unwrap();
            assert!(o.eq_elem(&pushed, img).unwrap());
        }
    }

    #[test]
    fn element_pair_overlapping_supports() {
        // supp(x) ∩ supp(y) ≠ ∅ and supp(x) ∖ supp(y) ≠ ∅: the overlap is
        // discarded and only the difference is resolved against supp(y).
        let o = naturals();
        let delta = SimplicialMonoid::new(3);
        let alpha = [n1(1), n1(2), n1(1)];
        let x = el(&[1, 1, 0]);
        let y = el(&[0, 1, 2]);
        // α(x) = 3 <= 2·α(y) = 8.
        let r = resolve_element_pair(&o, delta, &alpha, &x, &y).unwrap();
        let bx = r.beta.apply(&x).unwrap();
        let by = r.beta.apply(&y).unwrap();
        assert!(bx.propto(&by).unwrap().is_some());
    }

    #[test]
    fn element_pair_cases() {
        let o = naturals();
        let delta = SimplicialMonoid::new(2);

        // x = 0: identity.
        let r =
            resolve_element_pair(&o, delta, &[n1(3), n1(4)], &el(&[0, 0]), &el(&[1, 0])).unwrap();
        assert_eq!(r.beta, Morphism::identity(2));

        // y = 0 with α(x) = 0: kill supp(x).
        let r =
            resolve_element_pair(&o, delta, &[n1(0), n1(5)], &el(&[2, 0]), &el(&[0, 0])).unwrap();
        assert_eq!(r.beta.column(0), &el(&[0, 0]));
        assert_eq!(r.beta.column(1), &el(&[0, 1]));
        assert!(r
            .beta
            .apply(&el(&[2, 0]))
            .unwrap()
            .propto(&el(&[0, 0]))
            .unwrap()
            .is_some());

        // Mixed supports resolve through the index pair.
        let r =
            resolve_element_pair(&o, delta, &[n1(1), n1(2)], &el(&[3, 1]), &el(&[0, 1])).unwrap();
        let bx = r.beta.apply(&el(&[3, 1])).unwrap();
        let by = r.beta.apply(&el(&[0, 1])).unwrap();
        assert!(bx.propto(&by).unwrap().is_some());
    }

    #[test]
    fn all_pairs_small_cases() {
        let o = naturals();
        // r=1 stabilizes immediately.
        let r = resolve_all_pairs(&o, SimplicialMonoid::new(1), &[n1(0)], 24).unwrap();
        assert!(r.delta.rank() <= 1);

        // r=2, α=(2,1): both directions must end up resolved.
        let delta = SimplicialMonoid::new(2);
        let r = resolve_all_pairs(&o, delta, &[n1(2), n1(1)], 24).unwrap();
        for (j, i) in [(0usize, 1usize), (1, 0)] {
            let bj = r.beta.apply(&Element::basis(2, j).unwrap()).unwrap();
            let bi = r.beta.apply(&Element::basis(2, i).unwrap()).unwrap();
            assert!(bj.propto(&bi).unwrap().is_some());
        }

        let s = semilattice2();
        let r = resolve_all_pairs(&s, delta, &[idx(1), idx(1)], 24).unwrap();
        for (j, i) in [(0usize, 1usize), (1, 0)] {
            let bj = r.beta.apply(&Element::basis(2, j).unwrap()).unwrap();
            let bi = r.beta.apply(&Element::basis(2, i).unwrap()).unwrap();
            assert!(bj.propto(&bi).unwrap().is_some());
        }
    }

    #[test]
    fn all_pairs_grows_rank_and_is_deterministic() {
        // α = (1,2,3) over Z+ has comparable images in every direction;
        // resolving them all forces genuine splits.
        let o = naturals();
        let delta = SimplicialMonoid::new(3);
        let alpha = [n1(1), n1(2), n1(3)];
        let first = resolve_all_pairs(&o, delta, &alpha, 24).unwrap();
        assert!(first.delta.rank() > 3, "expected genuine rank growth");
        let again = resolve_all_pairs(&o, delta, &alpha, 24).unwrap();
        assert_eq!(first.beta, again.beta);
        assert_eq!(first.alpha, again.alpha);
        for (j, i) in [(0usize, 1usize), (0, 2), (1, 2), (1, 0), (2, 0), (2, 1)] {
            let a_j = &alpha[j];
            let a_i = &alpha[i];
            if o.decide_propto(a_j, a_i).unwrap().is_none() {
                continue;
            }
            let bj = first.beta.apply(&Element::basis(3, j).unwrap()).unwrap();
            let bi = first.beta.apply(&Element::basis(3, i).unwrap()).unwrap();
            assert!(bj.propto(&bi).unwrap().is_some(), "pair ({j},{i})");
        }
    }

    #[test]
    fn tower_over_semilattice2() {
        let o = semilattice2();
        let mut t = Tower::start(&o, 24).unwrap();
        assert_eq!(t.stages()[0].alpha, vec![idx(0)]);
        t.extend().unwrap();
        t.extend().unwrap();
        // {x_0, x_1} ⊆ M_1.
        t.verify_enumeration_prefix(1).unwrap();
        assert!(o
            .generated_submonoid_contains(&t.stages()[1].alpha, &idx(1))
            .unwrap());
        t.verify_propagation(0).unwrap();
        t.verify_propagation(1).unwrap();
    }

    #[test]
    fn tower_over_naturals_adjoins_one() {
        let o = naturals();
        let mut t = Tower::start(&o, 24).unwrap();
        assert_eq!(t.stages()[0].alpha, vec![n1(0)]);
        t.extend().unwrap();
        assert_eq!(t.stages()[1].alpha, vec![n1(0), n1(1)]);
        t.extend().unwrap();
        // x_2 = 2 is already in the image: no rank increase.
        assert_eq!(t.stages()[2].delta.rank(), 2);
        t.extend().unwrap();
        for j in 0..3 {
            t.verify_propagation(j).unwrap();
        }
    }

    #[test]
    fn tower_over_chain3_exercises_real_splits() {
        let o = chain3();
        let mut t = Tower::start(&o, 24).unwrap();
        for _ in 0..4 {
            t.extend().unwrap();
        }
        for j in 0..t.depth() {
            t.verify_propagation(j).unwrap();
        }
        // Full carrier covered.
        let last = t.stages().last().unwrap();
        for i in 0..3 {
            assert!(o
                .generated_submonoid_contains(&last.alpha, &idx(i))
                .unwrap());
        }
    }

    #[test]
    fn colimit_alpha_and_representative_independence() {
        let o = semilattice2();
        let mut t = Tower::start(&o, 24).unwrap();
        t.extend().unwrap();
        t.extend().unwrap();
        let c0 = ColimitElement {
            stage: 0,
            rep: el(&[1]),
        };
        assert_eq!(t.colimit_alpha(&c0).unwrap(), idx(0));
        // α_1(β_0(e_0)) = α_0(e_0).
        let pushed = ColimitElement {
            stage: 1,
            rep: t.push_to(&c0, 1).unwrap(),
        };
        assert_eq!(t.colimit_alpha(&pushed).unwrap(), idx(0));
        // (j, 0) ↦ 0.
        let z = ColimitElement {
            stage: 1,
            rep: Element::zero(t.stages()[1].delta.rank()),
        };
        assert_eq!(t.colimit_alpha(&z).unwrap(), idx(0));
    }

    #[test]
    fn colimit_propto_answers() {
        let o = semilattice2();
        let mut t = Tower::start(&o, 24).unwrap();
        for _ in 0..3 {
            t.extend().unwrap();
        }
        // The basis element of stage 1 with image u.
        let rank1 = t.stages()[1].delta.rank();
        let u_pos = t.stages()[1]
            .alpha
            .iter()
            .position(|a| a == &idx(1))
            .unwrap();
        let a = ColimitElement {
            stage: 1,
            rep: Element::basis(rank1, u_pos).unwrap(),
        };
        let b = ColimitElement {
            stage: 0,
            rep: el(&[1]), // α = 0
        };
        // Reflexivity with multiplier 1.
        assert_eq!(
            t.colimit_propto(&a, &a).unwrap(),
            ProptoAnswer::Yes {
                stage: 1,
                multiplier: nat(1)
            }
        );
        // u is not below 0.
        assert_eq!(t.colimit_propto(&a, &b).unwrap(), ProptoAnswer::No);
        // 0 is below everything.
        assert!(matches!(
            t.colimit_propto(&b, &a).unwrap(),
            ProptoAnswer::Yes { .. }
        ));
    }

    #[test]
    fn colimit_propto_over_naturals() {
        let o = naturals();
        let mut t = Tower::start(&o, 24).unwrap();
        for _ in 0..3 {
            t.extend().unwrap();
        }
        let rank1 = t.stages()[1].delta.rank();
        let one_pos = t.stages()[1]
            .alpha
            .iter()
            .position(|a| a == &n1(1))
            .unwrap();
        let five = Element::basis(rank1, one_pos).unwrap().scale(&nat(5));
        let two = Element::basis(rank1, one_pos).unwrap().scale(&nat(2));
        let a = ColimitElement {
            stage: 1,
            rep: five,
        };
        let b = ColimitElement { stage: 1, rep: two };
        match t.colimit_propto(&a, &b).unwrap() {
            ProptoAnswer::Yes { stage, multiplier } => {
                assert!(stage <= 3);
                assert_eq!(multiplier, nat(3));
            }
            ProptoAnswer::No => panic!("5 ∝ 2 in Z+"),
        }
    }

    #[test]
    fn insufficient_depth_is_distinct_from_false() {
        let o = semilattice2();
        let t = Tower::start(&o, 24).unwrap();
        let c = ColimitElement {
            stage: 0,
            rep: el(&[1]),
        };
        let err = t.colimit_propto(&c, &c).unwrap_err();
        assert!(matches!(err, ResolutionError::InsufficientDepth { .. }));
    }

    #[test]
    fn budget_exceeded_reports_stage() {
        let o = diamond();
        let mut t = Tower::start(&o, 2).unwrap();
        t.extend().unwrap(); // rank 2 fits
        let err = t.extend().unwrap_err(); // adjoining b needs rank 3
        match err {
            ResolutionError::RankBudget {
                rank,
                budget,
                stage,
            } => {
                assert_eq!(budget, 2);
                assert!(rank > 2);
                assert_eq!(stage, Some(1));
            }
            other => panic!("expected budget error, got {other}"),
        }
    }

    #[test]
    fn monotonicity_of_alpha_on_samples() {
        let o = chain3();
        let mut t = Tower::start(&o, 24).unwrap();
        for _ in 0..3 {
            t.extend().unwrap();
        }
        for st in t.stages() {
            let rank = st.delta.rank();
            // x <= y in Δ_j implies α_j(x) <= α_j(y) in M.
            let mut samples = vec![Element::zero(rank)];
            for i in 0..rank {
                samples.push(Element::basis(rank, i).unwrap());
                samples.push(Element::basis(rank, i).unwrap().scale(&nat(2)));
            }
            samples.push(SimplicialMonoid::new(rank).top());
            for x in &samples {
                for y in &samples {
                    if !x.le(y).unwrap() {
                        continue;
                    }
                    let ax = eval_basis_images(&o, &st.alpha, x).unwrap();
                    let ay = eval_basis_images(&o, &st.alpha, y).unwrap();
                    assert!(o.le(&ax, &ay).unwrap());
                }
            }
        }
    }
}
