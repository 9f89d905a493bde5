//! Order-ideals and ideal lattices `L(M)`, the surjectivity +
//! `∝`-reflection criterion under which a morphism induces an isomorphism
//! of ideal lattices, and the maximal semilattice quotient `∇(M) = M/≍`
//! (where `x ≍ y` iff `x ∝ y` and `y ∝ x`).
//!
//! Ideals of a simplicial monoid are exactly the coordinate spans, so its
//! lattice is the powerset lattice of the basis. Finite oracles get their
//! lattices by exhaustive enumeration of sum-closed, downward-closed
//! subsets.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::oracle::{
    eval_basis_images, CayleyMonoid, MonoidOracle, OracleElem, OracleError, SemilatticeMonoid,
};
use crate::resolution::{ColimitElement, ProptoAnswer, ResolutionError, Tower};
use crate::simplicial::{IndexSet, SimplicialError};
use crate::Element;

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("oracle failure: {0}")]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Simplicial(#[from] SimplicialError),
    #[error(transparent)]
    Resolution(#[from] ResolutionError),
    #[error("enumeration budget exceeded: {0}")]
    Budget(String),
    #[error("operation requires a finite oracle, got {0}")]
    NotFinite(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

/// An order-ideal: a submonoid `I` with `x+y ∈ I` iff `x, y ∈ I`. For
/// simplicial monoids these are the coordinate spans of a basis subset;
/// for finite oracles an explicit carrier subset.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum OrderIdeal {
    Span { rank: usize, dirs: IndexSet },
    Carrier { members: BTreeSet<usize> },
}

impl OrderIdeal {
    pub fn contains_index(&self, i: usize) -> bool {
        match self {
            OrderIdeal::Span { .. } => false,
            OrderIdeal::Carrier { members } => members.contains(&i),
        }
    }

    /// Inclusion of ideals of the same monoid.
    pub fn is_subideal(&self, other: &OrderIdeal) -> bool {
        match (self, other) {
            (OrderIdeal::Span { dirs: a, .. }, OrderIdeal::Span { dirs: b, .. }) => a.is_subset(b),
            (OrderIdeal::Carrier { members: a }, OrderIdeal::Carrier { members: b }) => {
                a.is_subset(b)
            }
            _ => false,
        }
    }
}

/// A finite ideal lattice: the ideals in a fixed deterministic order
/// (by size, then lexicographically) together with the cover relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdealLattice {
    pub ideals: Vec<OrderIdeal>,
    /// Cover edges `(i, j)`: ideal `i` is covered by ideal `j`.
    pub hasse: Vec<(usize, usize)>,
}

impl IdealLattice {
    fn from_ideals(mut ideals: Vec<OrderIdeal>) -> Self {
        ideals.sort_by_key(|i| match i {
            OrderIdeal::Span { dirs, .. } => (dirs.len(), format!("{dirs}")),
            OrderIdeal::Carrier { members } => (members.len(), format!("{members:?}")),
        });
        let mut hasse = Vec::new();
        for (a, ia) in ideals.iter().enumerate() {
            for (b, ib) in ideals.iter().enumerate() {
                if a == b || !ia.is_subideal(ib) {
                    continue;
                }
                let covered = ideals
                    .iter()
                    .enumerate()
                    .any(|(c, ic)| c != a && c != b && ia.is_subideal(ic) && ic.is_subideal(ib));
                if !covered {
                    hasse.push((a, b));
                }
            }
        }
        IdealLattice { ideals, hasse }
    }

    pub fn len(&self) -> usize {
        self.ideals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ideals.is_empty()
    }

    pub fn position(&self, ideal: &OrderIdeal) -> Option<usize> {
        self.ideals.iter().position(|i| i == ideal)
    }
}

/// The smallest order-ideal of `(Z+)^rank` containing the given elements:
/// the coordinate span of the union of their supports.
pub fn ideal_generated_simplicial(rank: usize, elems: &[Element]) -> OrderIdeal {
    let mut dirs = IndexSet::empty();
    for e in elems {
        dirs = dirs.union(&e.support());
    }
    OrderIdeal::Span { rank, dirs }
}

/// The smallest order-ideal of a finite oracle containing the given
/// elements, computed by saturation under sums and downward closure.
pub fn ideal_generated_finite(
    oracle: &dyn MonoidOracle,
    elems: &[OracleElem],
) -> Result<OrderIdeal, LatticeError> {
    let size = oracle
        .size()
        .ok_or_else(|| LatticeError::NotFinite(oracle.describe()))?;
    let carrier: Vec<OracleElem> = oracle.enumerate(size);
    let index_of = |e: &OracleElem| -> Result<usize, LatticeError> {
        carrier
            .iter()
            .position(|c| c == e)
            .ok_or_else(|| LatticeError::Precondition(format!("{e} not in carrier")))
    };
    let mut members: BTreeSet<usize> = BTreeSet::new();
    members.insert(index_of(&oracle.zero())?);
    for e in elems {
        members.insert(index_of(e)?);
    }
    loop {
        let mut grew = false;
        let current: Vec<usize> = members.iter().copied().collect();
        for &a in &current {
            for &b in &current {
                let sum = oracle.add(&carrier[a], &carrier[b])?;
                if members.insert(index_of(&sum)?) {
                    grew = true;
                }
            }
        }
        for y in 0..size {
            if members.contains(&y) {
                continue;
            }
            for &a in &current {
                if oracle.le(&carrier[y], &carrier[a])? {
                    members.insert(y);
                    grew = true;
                    break;
                }
            }
        }
        if !grew {
            break;
        }
    }
    Ok(OrderIdeal::Carrier { members })
}

/// All ideals of `(Z+)^rank`: one per basis subset, `2^rank` in total.
pub fn enumerate_ideals_simplicial(rank: usize) -> Result<IdealLattice, LatticeError> {
    if rank > 20 {
        return Err(LatticeError::Budget(format!(
            "2^{rank} ideals exceed the enumeration budget"
        )));
    }
    let ideals = IndexSet::all_subsets(rank)
        .into_iter()
        .map(|dirs| OrderIdeal::Span { rank, dirs })
        .collect();
    Ok(IdealLattice::from_ideals(ideals))
}

/// All ideals of a finite oracle, by exhaustive enumeration of subsets
/// that contain zero, are closed under addition, and are downward closed.
pub fn enumerate_ideals_finite(oracle: &dyn MonoidOracle) -> Result<IdealLattice, LatticeError> {
    let size = oracle
        .size()
        .ok_or_else(|| LatticeError::NotFinite(oracle.describe()))?;
    if size > 20 {
        return Err(LatticeError::Budget(format!(
            "2^{size} candidate subsets exceed the enumeration budget"
        )));
    }
    let carrier: Vec<OracleElem> = oracle.enumerate(size);
    let zero = oracle.zero();
    let zero_idx = carrier
        .iter()
        .position(|c| c == &zero)
        .expect("zero enumerated");
    let mut ideals = Vec::new();
    'subset: for mask in 0u32..(1u32 << size) {
        let members: BTreeSet<usize> = (0..size).filter(|i| mask & (1 << i) != 0).collect();
        if !members.contains(&zero_idx) {
            continue;
        }
        for &a in &members {
            for &b in &members {
                let sum = oracle.add(&carrier[a], &carrier[b])?;
                let sum_idx = carrier.iter().position(|c| c == &sum).expect("closed");
                if !members.contains(&sum_idx) {
                    continue 'subset;
                }
            }
        }
        for y in 0..size {
            if members.contains(&y) {
                continue;
            }
            for &a in &members {
                if oracle.le(&carrier[y], &carrier[a])? {
                    continue 'subset;
                }
            }
        }
        ideals.push(OrderIdeal::Carrier { members });
    }
    Ok(IdealLattice::from_ideals(ideals))
}

/// Outcome of the ideal-lattice isomorphism criterion: surjectivity plus
/// `∝`-reflection on the checkable pair universe, with an optional direct
/// preimage-lattice verification when both lattices are enumerable.
#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub surjective: bool,
    pub pairs_checked: usize,
    pub reflection_failures: Vec<(IndexSet, IndexSet)>,
    pub preimage_check: Option<PreimageCheck>,
    pub holds: bool,
}

/// Direct verification that taking preimages embeds `L(M)` into the
/// source lattice, order-preserving in both directions.
#[derive(Debug, Clone)]
pub struct PreimageCheck {
    pub oracle_ideals: usize,
    /// `(ideal of M, its preimage span)` in lattice order.
    pub preimages: Vec<(OrderIdeal, IndexSet)>,
    pub injective: bool,
    pub order_embedding: bool,
}

impl PreimageCheck {
    pub fn bijective_onto_image(&self) -> bool {
        self.injective && self.order_embedding
    }
}

fn check_surjective(oracle: &dyn MonoidOracle, images: &[OracleElem]) -> Result<bool, OracleError> {
    for g in oracle.generators() {
        if !oracle.generated_submonoid_contains(images, &g)? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn preimage_span(images: &[OracleElem], ideal: &OrderIdeal, carrier: &[OracleElem]) -> IndexSet {
    IndexSet::from_iter(images.iter().enumerate().filter_map(|(i, img)| {
        let idx = carrier
            .iter()
            .position(|c| c == img)
            .expect("image in carrier");
        if ideal.contains_index(idx) {
            Some(i)
        } else {
            None
        }
    }))
}

fn preimage_check(
    oracle: &dyn MonoidOracle,
    images: &[OracleElem],
) -> Result<Option<PreimageCheck>, LatticeError> {
    let Some(size) = oracle.size() else {
        return Ok(None);
    };
    let lattice = enumerate_ideals_finite(oracle)?;
    let carrier = oracle.enumerate(size);
    let preimages: Vec<(OrderIdeal, IndexSet)> = lattice
        .ideals
        .iter()
        .map(|ideal| (ideal.clone(), preimage_span(images, ideal, &carrier)))
        .collect();
    let mut injective = true;
    let mut order_embedding = true;
    for (a, (ia, pa)) in preimages.iter().enumerate() {
        for (b, (ib, pb)) in preimages.iter().enumerate() {
            if a != b && pa == pb {
                injective = false;
            }
            if ia.is_subideal(ib) != pa.is_subset(pb) {
                order_embedding = false;
            }
        }
    }
    Ok(Some(PreimageCheck {
        oracle_ideals: lattice.len(),
        preimages,
        injective,
        order_embedding,
    }))
}

/// The criterion for a plain morphism `(Z+)^rank → M` given by basis
/// images: surjectivity, plus `∝`-reflection on every basis-subset pair
/// (`α(e_J) ∝ α(e_I)` must force `J ⊆ I`, which is `e_J ∝ e_I` in the
/// source). When it holds, preimages of ideals form an isomorphic copy of
/// `L(M)`, verified directly for finite oracles.
pub fn criterion_for_morphism(
    oracle: &dyn MonoidOracle,
    images: &[OracleElem],
) -> Result<CriterionReport, LatticeError> {
    let rank = images.len();
    if rank > 20 {
        return Err(LatticeError::Budget(format!(
            "4^{rank} subset pairs exceed the enumeration budget"
        )));
    }
    let surjective = check_surjective(oracle, images)?;
    let subsets = IndexSet::all_subsets(rank);
    let mut failures = Vec::new();
    let mut pairs_checked = 0;
    for j_set in &subsets {
        let picked: Vec<OracleElem> = j_set.iter().map(|&i| images[i].clone()).collect();
        let a_j = oracle.sum_elems(&picked)?;
        for i_set in &subsets {
            let picked: Vec<OracleElem> = i_set.iter().map(|&i| images[i].clone()).collect();
            let a_i = oracle.sum_elems(&picked)?;
            pairs_checked += 1;
            if oracle.decide_propto(&a_j, &a_i)?.is_some() && !j_set.is_subset(i_set) {
                failures.push((j_set.clone(), i_set.clone()));
            }
        }
    }
    let preimage = if surjective && failures.is_empty() {
        preimage_check(oracle, images)?
    } else {
        None
    };
    let holds = surjective
        && failures.is_empty()
        && preimage.as_ref().is_none_or(|p| p.bijective_onto_image());
    Ok(CriterionReport {
        surjective,
        pairs_checked,
        reflection_failures: failures,
        preimage_check: preimage,
        holds,
    })
}

/// The criterion for a tower's colimit morphism: surjectivity of the last
/// stage plus `∝`-reflection decided through the colimit (each positive
/// oracle comparison must come back with a concrete in-tower witness).
/// The pair universe is every basis-subset pair of the deepest stage that
/// still has a connecting morphism.
pub fn criterion_for_tower(tower: &Tower<'_>) -> Result<CriterionReport, LatticeError> {
    let stages = tower.stages();
    if stages.len() < 2 {
        return Err(LatticeError::Precondition(
            "tower must be extended at least once".into(),
        ));
    }
    let stage = stages.len() - 2;
    let st = &stages[stage];
    let oracle = tower.oracle();
    let rank = st.delta.rank();
    if rank > 20 {
        return Err(LatticeError::Budget(format!(
            "4^{rank} subset pairs exceed the enumeration budget"
        )));
    }
    let surjective = check_surjective(oracle, &stages.last().expect("nonempty").alpha)?;
    let subsets = IndexSet::all_subsets(rank);
    let mut failures = Vec::new();
    let mut pairs_checked = 0;
    for j_set in &subsets {
        let ej = ColimitElement {
            stage,
            rep: st.delta.basis_sum(j_set).expect("subset in range"),
        };
        for i_set in &subsets {
            let ei = ColimitElement {
                stage,
                rep: st.delta.basis_sum(i_set).expect("subset in range"),
            };
            pairs_checked += 1;
            let aj = tower.colimit_alpha(&ej)?;
            let ai = tower.colimit_alpha(&ei)?;
            if oracle.decide_propto(&aj, &ai)?.is_none() {
                continue;
            }
            // Reflection: the tower must exhibit a concrete witness.
            match tower.colimit_propto(&ej, &ei) {
                Ok(ProptoAnswer::Yes { .. }) => {}
                Ok(ProptoAnswer::No) => unreachable!("oracle said ∝ holds"),
                Err(_) => failures.push((j_set.clone(), i_set.clone())),
            }
        }
    }
    let preimage = if surjective && failures.is_empty() {
        preimage_check(oracle, &st.alpha)?
    } else {
        None
    };
    let holds = surjective
        && failures.is_empty()
        && preimage.as_ref().is_none_or(|p| p.bijective_onto_image());
    Ok(CriterionReport {
        surjective,
        pairs_checked,
        reflection_failures: failures,
        preimage_check: preimage,
        holds,
    })
}

/// The maximal semilattice quotient `∇(M) = M/≍` with one representative
/// per class (first in enumeration order) and the induced join table.
#[derive(Debug, Clone)]
pub struct SemilatticeQuotient {
    pub semilattice: SemilatticeMonoid,
    pub class_reps: Vec<OracleElem>,
}

impl SemilatticeQuotient {
    pub fn class_count(&self) -> usize {
        self.class_reps.len()
    }

    /// Class of an arbitrary element, decided by mutual `∝` against the
    /// representatives.
    pub fn class_of(
        &self,
        oracle: &dyn MonoidOracle,
        x: &OracleElem,
    ) -> Result<usize, LatticeError> {
        for (c, rep) in self.class_reps.iter().enumerate() {
            if oracle.decide_propto(x, rep)?.is_some() && oracle.decide_propto(rep, x)?.is_some() {
                return Ok(c);
            }
        }
        Err(LatticeError::Precondition(format!(
            "{x} matches no ≍-class representative"
        )))
    }
}

/// Compute `∇(M)` for a finite oracle (classes over the carrier) or a
/// free oracle (classes are the basis-subset indicators). The result is
/// always an idempotent monoid: `x ∝ x+x ∝ x` holds in any commutative
/// monoid.
pub fn nabla(oracle: &dyn MonoidOracle) -> Result<SemilatticeQuotient, LatticeError> {
    let reps: Vec<OracleElem> = match oracle.size() {
        Some(size) => {
            let carrier = oracle.enumerate(size);
            let mut reps: Vec<OracleElem> = Vec::new();
            for x in &carrier {
                let mut found = false;
                for r in &reps {
                    if oracle.decide_propto(x, r)?.is_some()
                        && oracle.decide_propto(r, x)?.is_some()
                    {
                        found = true;
                        break;
                    }
                }
                if !found {
                    reps.push(x.clone());
                }
            }
            reps
        }
        None => {
            let gens = oracle.generators();
            if gens.len() > 20 {
                return Err(LatticeError::Budget(format!(
                    "2^{} support classes exceed the enumeration budget",
                    gens.len()
                )));
            }
            // Classes of a free monoid are indexed by supports; every
            // element is ≍ the indicator of its support.
            let mut reps = Vec::new();
            for subset in IndexSet::all_subsets(gens.len()) {
                let picked: Vec<OracleElem> = subset.iter().map(|&i| gens[i].clone()).collect();
                reps.push(oracle.sum_elems(&picked)?);
            }
            reps
        }
    };

    // Join table on classes; the class map must be a monoid morphism.
    let mut table = vec![vec![0usize; reps.len()]; reps.len()];
    for (a, ra) in reps.iter().enumerate() {
        for (b, rb) in reps.iter().enumerate() {
            let sum = oracle.add(ra, rb)?;
            let mut class = None;
            for (c, rc) in reps.iter().enumerate() {
                if oracle.decide_propto(&sum, rc)?.is_some()
                    && oracle.decide_propto(rc, &sum)?.is_some()
                {
                    class = Some(c);
                    break;
                }
            }
            table[a][b] = class.ok_or_else(|| {
                LatticeError::Precondition(format!(
                    "class representatives are not closed under addition at {ra}+{rb}"
                ))
            })?;
        }
    }
    let zero = oracle.zero();
    let mut zero_class = 0;
    for (c, rc) in reps.iter().enumerate() {
        if oracle.decide_propto(&zero, rc)?.is_some() && oracle.decide_propto(rc, &zero)?.is_some()
        {
            zero_class = c;
            break;
        }
    }
    let names: Vec<String> = reps.iter().map(|r| format!("[{r}]")).collect();
    let cayley = CayleyMonoid::new(names, table, zero_class)?;
    let semilattice = SemilatticeMonoid::new(cayley)?;
    Ok(SemilatticeQuotient {
        semilattice,
        class_reps: reps,
    })
}

/// Report of the tower-induced map `∇(Δ_j) → ∇(M)`, `[x] ↦ [α_j(x)]`,
/// checked at the first stage whose image generates all of `M`.
#[derive(Debug, Clone)]
pub struct NablaTransferReport {
    pub stage: usize,
    pub oracle_classes: usize,
    pub stage_classes_distinct: usize,
    /// Class index in `∇(M)` for each basis-subset indicator of the stage.
    pub class_map: Vec<(IndexSet, usize)>,
    pub iso: bool,
}

/// Verify that `[x] ↦ [α(x)]` is an isomorphism between the colimit
/// classes of stage indicators and `∇(M)`: surjective onto the oracle
/// classes, injective on colimit classes (certified by in-tower `∝`
/// witnesses in both directions), and join-preserving.
pub fn verify_nabla_transfer(tower: &Tower<'_>) -> Result<NablaTransferReport, LatticeError> {
    let oracle = tower.oracle();
    let size = oracle
        .size()
        .ok_or_else(|| LatticeError::NotFinite(oracle.describe()))?;
    let stages = tower.stages();
    // First stage whose image covers the carrier, leaving at least one
    // stage above it for witnesses.
    let mut stage = None;
    for (j, st) in stages.iter().enumerate().take(stages.len() - 1) {
        let mut covers = true;
        for x in oracle.enumerate(size) {
            if !oracle.generated_submonoid_contains(&st.alpha, &x)? {
                covers = false;
                break;
            }
        }
        if covers {
            stage = Some(j);
            break;
        }
    }
    let stage = stage.ok_or_else(|| {
        LatticeError::Precondition("no fully covering stage below the newest".into())
    })?;
    let st = &stages[stage];
    let rank = st.delta.rank();
    if rank > 20 {
        return Err(LatticeError::Budget(format!("2^{rank} indicators")));
    }

    let quotient = nabla(oracle)?;
    let subsets = IndexSet::all_subsets(rank);
    let mut class_map = Vec::new();
    for subset in &subsets {
        let image = eval_basis_images(oracle, &st.alpha, &st.delta.basis_sum(subset)?)?;
        class_map.push((subset.clone(), quotient.class_of(oracle, &image)?));
    }

    // Surjective: every oracle class is hit.
    let hit: BTreeSet<usize> = class_map.iter().map(|(_, c)| *c).collect();
    let surjective = hit.len() == quotient.class_count();

    // Injective on colimit classes: indicators mapping to the same oracle
    // class must be mutually ∝ inside the tower (witnessed), and
    // indicators mapping to different classes must not be colimit-≍.
    let mut injective = true;
    let mut distinct: Vec<usize> = Vec::new();
    for (a, (sa, ca)) in class_map.iter().enumerate() {
        let ea = ColimitElement {
            stage,
            rep: st.delta.basis_sum(sa)?,
        };
        let mut fresh = true;
        for (sb, cb) in class_map.iter().take(a) {
            let eb = ColimitElement {
                stage,
                rep: st.delta.basis_sum(sb)?,
            };
            let forward = matches!(tower.colimit_propto(&ea, &eb)?, ProptoAnswer::Yes { .. });
            let backward = matches!(tower.colimit_propto(&eb, &ea)?, ProptoAnswer::Yes { .. });
            let same_colimit_class = forward && backward;
            if same_colimit_class != (ca == cb) {
                injective = false;
            }
            if same_colimit_class {
                fresh = false;
            }
        }
        if fresh {
            distinct.push(a);
        }
    }

    // Join-preserving: [e_J] ∨ [e_I] ↦ [α(e_J)] + [α(e_I)].
    let mut join_preserving = true;
    for (sa, ca) in &class_map {
        for (sb, cb) in &class_map {
            let union = sa.union(sb);
            let cu = class_map
                .iter()
                .find(|(s, _)| s == &union)
                .map(|(_, c)| *c)
                .expect("subset universe is closed under union");
            let joined = quotient.semilattice.as_table().add_idx(*ca, *cb);
            if joined != cu {
                join_preserving = false;
            }
        }
    }

    let iso =
        surjective && injective && join_preserving && distinct.len() == quotient.class_count();
    Ok(NablaTransferReport {
        stage,
        oracle_classes: quotient.class_count(),
        stage_classes_distinct: distinct.len(),
        class_map,
        iso,
    })
}

/// `∇(S) ≅ S` check for a semilattice: the quotient map is a bijection
/// compatible with the join tables.
pub fn nabla_fixes_semilattice(s: &SemilatticeMonoid) -> Result<bool, LatticeError> {
    let q = nabla(s)?;
    let size = MonoidOracle::size(s).expect("finite");
    if q.class_count() != size {
        return Ok(false);
    }
    let mut class_of = Vec::with_capacity(size);
    for i in 0..size {
        class_of.push(q.class_of(s, &OracleElem::Index(i))?);
    }
    // Bijective and table-preserving.
    let mut seen = BTreeSet::new();
    for &c in &class_of {
        seen.insert(c);
    }
    if seen.len() != size {
        return Ok(false);
    }
    for a in 0..size {
        for b in 0..size {
            let lhs = class_of[s.as_table().add_idx(a, b)];
            let rhs = q.semilattice.as_table().add_idx(class_of[a], class_of[b]);
            if lhs != rhs {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `∇(∇(M)) ≅ ∇(M)`: the quotient of the quotient is the quotient itself.
pub fn nabla_idempotent(oracle: &dyn MonoidOracle) -> Result<bool, LatticeError> {
    let q = nabla(oracle)?;
    nabla_fixes_semilattice(&q.semilattice)
}
