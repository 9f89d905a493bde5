//! File formats: monoid definition files, tower interchange documents,
//! lattice and quotient reports, and divisibility certificates.
//!
//! All output goes through [`canonical_json`]: object keys are sorted
//! (serde_json's default map is a BTreeMap), arbitrary-precision integers
//! are decimal strings, and a trailing newline is appended — identical
//! inputs serialize to identical bytes on every platform.

use std::collections::BTreeSet;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::divisibility::DivisibilityCertificate;
use crate::lattice::{CriterionReport, IdealLattice, OrderIdeal, SemilatticeQuotient};
use crate::oracle::{
    eval_basis_images, verify_axioms, AxiomReport, CayleyMonoid, FreeOracle, MonoidOracle,
    OracleElem, OracleError,
};
use crate::resolution::Tower;
use crate::simplicial::IndexSet;
use crate::{Element, Morphism, Nat};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("oracle failure: {0}")]
    Oracle(#[from] OracleError),
}

/// Serialize with sorted keys, two-space indentation, decimal-string
/// big integers, and a trailing newline. Byte-stable across runs.
pub fn canonical_json<T: Serialize>(value: &T) -> Result<Vec<u8>, IoError> {
    let v = serde_json::to_value(value)?;
    let mut out = serde_json::to_vec_pretty(&v)?;
    out.push(b'\n');
    Ok(out)
}

// ---------------------------------------------------------------------------
// Monoid definition files.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MonoidKind {
    Simplicial,
    Cayley,
    Semilattice,
    Naturals,
}

impl MonoidKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MonoidKind::Simplicial => "simplicial",
            MonoidKind::Cayley => "cayley",
            MonoidKind::Semilattice => "semilattice",
            MonoidKind::Naturals => "naturals",
        }
    }
}

/// A monoid definition: either a free commutative monoid (`naturals`,
/// `simplicial` with a rank) or a finite monoid given by an addition
/// table (`cayley`, `semilattice`). Unknown fields are rejected.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonoidFile {
    pub kind: MonoidKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub names: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero: Option<usize>,
}

impl MonoidFile {
    pub fn parse(text: &str) -> Result<Self, IoError> {
        let file: MonoidFile = serde_json::from_str(text)?;
        file.validate_shape()?;
        Ok(file)
    }

    /// Field presence and consistency, independent of the axioms.
    pub fn validate_shape(&self) -> Result<(), IoError> {
        let reject = |field: &str| {
            Err(IoError::Schema(format!(
                "field '{field}' does not apply to kind '{}'",
                self.kind.as_str()
            )))
        };
        match self.kind {
            MonoidKind::Naturals => {
                if self.rank.is_some() {
                    return reject("rank");
                }
                if self.names.is_some() {
                    return reject("names");
                }
                if self.table.is_some() {
                    return reject("table");
                }
                if self.zero.is_some() {
                    return reject("zero");
                }
            }
            MonoidKind::Simplicial => {
                if self.rank.is_none() {
                    return Err(IoError::Schema("kind 'simplicial' requires 'rank'".into()));
                }
                if self.names.is_some() {
                    return reject("names");
                }
                if self.table.is_some() {
                    return reject("table");
                }
                if self.zero.is_some() {
                    return reject("zero");
                }
            }
            MonoidKind::Cayley | MonoidKind::Semilattice => {
                if self.rank.is_some() {
                    return reject("rank");
                }
                let table = self
                    .table
                    .as_ref()
                    .ok_or_else(|| IoError::Schema("table kinds require 'table'".into()))?;
                if self.zero.is_none() {
                    return Err(IoError::Schema("table kinds require 'zero'".into()));
                }
                if let Some(names) = &self.names {
                    if names.len() != table.len() {
                        return Err(IoError::Schema(format!(
                            "{} names for a {}x{} table",
                            names.len(),
                            table.len(),
                            table.len()
                        )));
                    }
                    let distinct: BTreeSet<&String> = names.iter().collect();
                    if distinct.len() != names.len() {
                        return Err(IoError::Schema("element names must be distinct".into()));
                    }
                }
            }
        }
        Ok(())
    }

    /// The finite addition table, for table kinds.
    pub fn build_table(&self) -> Result<CayleyMonoid, IoError> {
        self.validate_shape()?;
        let table = self
            .table
            .clone()
            .ok_or_else(|| IoError::Schema("not a table kind".into()))?;
        let names = match &self.names {
            Some(names) => names.clone(),
            None => (0..table.len()).map(|i| format!("e{i}")).collect(),
        };
        Ok(CayleyMonoid::new(
            names,
            table,
            self.zero.expect("validated"),
        )?)
    }

    /// Axiom verification: `None` for free kinds (free commutative
    /// monoids satisfy every axiom by construction).
    pub fn axiom_report(&self) -> Result<Option<AxiomReport>, IoError> {
        match self.kind {
            MonoidKind::Naturals | MonoidKind::Simplicial => Ok(None),
            MonoidKind::Cayley => Ok(Some(verify_axioms(&self.build_table()?, false))),
            MonoidKind::Semilattice => Ok(Some(verify_axioms(&self.build_table()?, true))),
        }
    }

    /// The oracle this file denotes. Does not re-check the axioms;
    /// callers gate on [`MonoidFile::axiom_report`] first.
    pub fn build_oracle(&self) -> Result<Box<dyn MonoidOracle>, IoError> {
        self.validate_shape()?;
        Ok(match self.kind {
            MonoidKind::Naturals => Box::new(FreeOracle::naturals()),
            MonoidKind::Simplicial => Box::new(FreeOracle::new(self.rank.expect("validated"))),
            MonoidKind::Cayley | MonoidKind::Semilattice => Box::new(self.build_table()?),
        })
    }

    /// Content hash (SHA-256 of the canonical serialization), embedded in
    /// tower documents to prevent cross-definition verification.
    pub fn content_hash(&self) -> Result<String, IoError> {
        let bytes = canonical_json(self)?;
        Ok(hex::encode(Sha256::digest(&bytes)))
    }

    /// Parse an element reference from the command line: coordinates
    /// (comma-separated decimals) for free kinds, an element name or
    /// index for table kinds.
    pub fn parse_element(&self, text: &str) -> Result<OracleElem, IoError> {
        match self.kind {
            MonoidKind::Naturals | MonoidKind::Simplicial => {
                let rank = self.rank.unwrap_or(1);
                let coords: Result<Vec<Nat>, _> =
                    text.split(',').map(|c| Nat::from_str(c.trim())).collect();
                let coords = coords
                    .map_err(|e| IoError::Schema(format!("bad coordinate in '{text}': {e}")))?;
                if coords.len() != rank {
                    return Err(IoError::Schema(format!(
                        "{} coordinates given for rank {rank}",
                        coords.len()
                    )));
                }
                Ok(OracleElem::Vector(coords))
            }
            MonoidKind::Cayley | MonoidKind::Semilattice => {
                let table = self.build_table()?;
                if let Some(i) = table.names().iter().position(|n| n == text.trim()) {
                    return Ok(OracleElem::Index(i));
                }
                let i: usize = text.trim().parse().map_err(|_| {
                    IoError::Schema(format!("'{text}' is neither an element name nor an index"))
                })?;
                if i >= table.size() {
                    return Err(IoError::Schema(format!(
                        "index {i} out of range for size {}",
                        table.size()
                    )));
                }
                Ok(OracleElem::Index(i))
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Element and morphism representations.
// ---------------------------------------------------------------------------

/// Wire form of an oracle element: a carrier index or a coordinate vector
/// of decimal strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum ElemRepr {
    Index { idx: usize },
    Vector { vec: Vec<String> },
}

impl ElemRepr {
    pub fn from_elem(e: &OracleElem) -> Self {
        match e {
            OracleElem::Index(i) => ElemRepr::Index { idx: *i },
            OracleElem::Vector(v) => ElemRepr::Vector {
                vec: v.iter().map(|c| c.to_string()).collect(),
            },
        }
    }

    pub fn to_elem(&self) -> Result<OracleElem, IoError> {
        match self {
            ElemRepr::Index { idx } => Ok(OracleElem::Index(*idx)),
            ElemRepr::Vector { vec } => {
                let coords: Result<Vec<Nat>, _> = vec.iter().map(|c| Nat::from_str(c)).collect();
                Ok(OracleElem::Vector(coords.map_err(|e| {
                    IoError::Schema(format!("bad coordinate: {e}"))
                })?))
            }
        }
    }
}

fn morphism_to_columns(m: &Morphism) -> Vec<Vec<String>> {
    m.columns()
        .iter()
        .map(|col| col.coords().iter().map(|c| c.to_string()).collect())
        .collect()
}

fn columns_to_morphism(target_rank: usize, columns: &[Vec<String>]) -> Result<Morphism, IoError> {
    let cols: Result<Vec<Element>, IoError> = columns
        .iter()
        .map(|col| {
            let coords: Result<Vec<Nat>, _> = col.iter().map(|c| Nat::from_str(c)).collect();
            Ok(Element::new(coords.map_err(|e| {
                IoError::Schema(format!("bad matrix entry: {e}"))
            })?))
        })
        .collect();
    Morphism::new(target_rank, cols?).map_err(|e| IoError::Schema(e.to_string()))
}

// ---------------------------------------------------------------------------
// Tower interchange documents.
// ---------------------------------------------------------------------------

pub const TOWER_FORMAT: &str = "refinemon-tower-v1";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageDoc {
    pub rank: usize,
    pub alpha: Vec<ElemRepr>,
    /// Connecting morphism to the next stage; absent at the newest stage.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<BetaDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaDoc {
    /// One column per source basis element; entries are decimal strings
    /// of length equal to the next stage's rank.
    pub columns: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvariantManifest {
    pub commutativity: bool,
    pub enumeration_prefix: bool,
    pub propagation_pairs: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TowerDoc {
    pub format: String,
    pub oracle_hash: String,
    pub oracle_kind: String,
    pub depth: usize,
    pub rank_budget: usize,
    pub stages: Vec<StageDoc>,
    pub invariants: InvariantManifest,
}

/// Problems found when re-checking a tower document. Format problems and
/// mathematical violations are kept apart so callers can map them to
/// distinct exit codes.
#[derive(Debug, Error)]
pub enum TowerVerifyError {
    #[error("format error: {0}")]
    Format(String),
    #[error("verification failed: {0}")]
    Violation(String),
    #[error("oracle failure: {0}")]
    Oracle(#[from] OracleError),
}

impl TowerDoc {
    pub fn from_tower(tower: &Tower<'_>, file: &MonoidFile) -> Result<Self, IoError> {
        let mut propagation_pairs = 0;
        for j in 0..tower.depth() {
            propagation_pairs += tower
                .verify_propagation(j)
                .map_err(|e| IoError::Schema(format!("unverifiable tower: {e}")))?;
        }
        let stages = tower
            .stages()
            .iter()
            .map(|st| StageDoc {
                rank: st.delta.rank(),
                alpha: st.alpha.iter().map(ElemRepr::from_elem).collect(),
                beta: st.beta.as_ref().map(|b| BetaDoc {
                    columns: morphism_to_columns(b),
                }),
            })
            .collect();
        Ok(TowerDoc {
            format: TOWER_FORMAT.to_string(),
            oracle_hash: file.content_hash()?,
            oracle_kind: file.kind.as_str().to_string(),
            depth: tower.depth(),
            rank_budget: tower.rank_budget(),
            stages,
            invariants: InvariantManifest {
                commutativity: true,
                enumeration_prefix: true,
                propagation_pairs,
            },
        })
    }

    pub fn parse(text: &str) -> Result<Self, IoError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Independently re-check the stored tower against its definition
    /// file: shape and hash first (format errors), then exact
    /// commutativity, the enumeration prefix, and the propagation law on
    /// every basis-subset pair of every stage (violations name the stage
    /// and basis index or pair).
    pub fn verify(&self, file: &MonoidFile) -> Result<(), TowerVerifyError> {
        if self.format != TOWER_FORMAT {
            return Err(TowerVerifyError::Format(format!(
                "unknown format '{}'",
                self.format
            )));
        }
        let expected_hash = file
            .content_hash()
            .map_err(|e| TowerVerifyError::Format(e.to_string()))?;
        if self.oracle_hash != expected_hash {
            return Err(TowerVerifyError::Format(format!(
                "oracle hash mismatch: document has {}, definition hashes to {expected_hash}",
                self.oracle_hash
            )));
        }
        if self.stages.is_empty() {
            return Err(TowerVerifyError::Format("no stages".into()));
        }
        if self.depth != self.stages.len() - 1 {
            return Err(TowerVerifyError::Format(format!(
                "depth {} does not match {} stages",
                self.depth,
                self.stages.len()
            )));
        }
        let oracle = file
            .build_oracle()
            .map_err(|e| TowerVerifyError::Format(e.to_string()))?;
        let oracle = oracle.as_ref();

        // Decode stages.
        let mut alphas: Vec<Vec<OracleElem>> = Vec::new();
        let mut betas: Vec<Option<Morphism>> = Vec::new();
        for (j, st) in self.stages.iter().enumerate() {
            if st.alpha.len() != st.rank {
                return Err(TowerVerifyError::Format(format!(
                    "stage {j}: {} basis images for rank {}",
                    st.alpha.len(),
                    st.rank
                )));
            }
            let alpha: Result<Vec<OracleElem>, IoError> =
                st.alpha.iter().map(|e| e.to_elem()).collect();
            alphas.push(alpha.map_err(|e| TowerVerifyError::Format(e.to_string()))?);
            let is_last = j + 1 == self.stages.len();
            match (&st.beta, is_last) {
                (None, false) => {
                    return Err(TowerVerifyError::Format(format!(
                        "stage {j}: missing connecting morphism"
                    )))
                }
                (Some(_), true) => {
                    return Err(TowerVerifyError::Format(format!(
                        "stage {j}: newest stage must not carry a morphism"
                    )))
                }
                (Some(b), false) => {
                    let next_rank = self.stages[j + 1].rank;
                    if b.columns.len() != st.rank {
                        return Err(TowerVerifyError::Format(format!(
                            "stage {j}: {} columns for rank {}",
                            b.columns.len(),
                            st.rank
                        )));
                    }
                    let m = columns_to_morphism(next_rank, &b.columns)
                        .map_err(|e| TowerVerifyError::Format(format!("stage {j}: {e}")))?;
                    betas.push(Some(m));
                }
                (None, true) => betas.push(None),
            }
        }

        // Exact commutativity, basis by basis.
        for j in 0..self.stages.len() - 1 {
            let beta = betas[j].as_ref().expect("checked above");
            for i in 0..self.stages[j].rank {
                let pushed = eval_basis_images(oracle, &alphas[j + 1], beta.column(i))?;
                if !oracle.eq_elem(&pushed, &alphas[j][i])? {
                    return Err(TowerVerifyError::Violation(format!(
                        "stage {j}, basis index {i}: α'∘β differs from α"
                    )));
                }
            }
        }

        // Enumeration prefix: {x_0,…,x_j} ⊆ M_j.
        for (j, alpha) in alphas.iter().enumerate() {
            for (i, x) in oracle.enumerate(j + 1).iter().enumerate() {
                if !oracle.generated_submonoid_contains(alpha, x)? {
                    return Err(TowerVerifyError::Violation(format!(
                        "stage {j}: enumeration element x_{i} not in the stage image"
                    )));
                }
            }
        }

        // Propagation on subset pairs per stage: exhaustive up to rank
        // 12, sampled (singletons, empty and full set) above.
        for j in 0..self.stages.len() - 1 {
            let beta = betas[j].as_ref().expect("checked above");
            let rank = self.stages[j].rank;
            let delta = crate::SimplicialMonoid::new(rank);
            let subsets = if rank <= 12 {
                IndexSet::all_subsets(rank)
            } else {
                let mut s: Vec<IndexSet> = (0..rank).map(|i| IndexSet::from_iter([i])).collect();
                s.push(IndexSet::empty());
                s.push(IndexSet::full(rank));
                s
            };
            for j_set in &subsets {
                let picked: Vec<OracleElem> = j_set.iter().map(|&i| alphas[j][i].clone()).collect();
                let a_j = oracle.sum_elems(&picked)?;
                for i_set in &subsets {
                    let picked: Vec<OracleElem> =
                        i_set.iter().map(|&i| alphas[j][i].clone()).collect();
                    let a_i = oracle.sum_elems(&picked)?;
                    if oracle.decide_propto(&a_j, &a_i)?.is_none() {
                        continue;
                    }
                    let bx = beta
                        .apply(&delta.basis_sum(j_set).expect("subset in range"))
                        .expect("ranks agree");
                    let by = beta
                        .apply(&delta.basis_sum(i_set).expect("subset in range"))
                        .expect("ranks agree");
                    if bx.propto(&by).expect("ranks agree").is_none() {
                        return Err(TowerVerifyError::Violation(format!(
                            "stage {j}: propagation fails for pair (J={j_set}, I={i_set})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Reports.
// ---------------------------------------------------------------------------

/// Wire form of an order-ideal.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(untagged)]
pub enum IdealRepr {
    Span { basis: Vec<usize> },
    Carrier { elements: Vec<usize> },
}

impl IdealRepr {
    pub fn from_ideal(ideal: &OrderIdeal) -> Self {
        match ideal {
            OrderIdeal::Span { dirs, .. } => IdealRepr::Span {
                basis: dirs.iter().copied().collect(),
            },
            OrderIdeal::Carrier { members } => IdealRepr::Carrier {
                elements: members.iter().copied().collect(),
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriterionRepr {
    pub holds: bool,
    pub surjective: bool,
    pub pairs_checked: usize,
    pub reflection_failures: Vec<(Vec<usize>, Vec<usize>)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preimage_bijective: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_ideals: Option<usize>,
}

impl CriterionRepr {
    pub fn from_report(report: &CriterionReport) -> Self {
        CriterionRepr {
            holds: report.holds,
            surjective: report.surjective,
            pairs_checked: report.pairs_checked,
            reflection_failures: report
                .reflection_failures
                .iter()
                .map(|(j, i)| {
                    (
                        j.iter().copied().collect::<Vec<usize>>(),
                        i.iter().copied().collect::<Vec<usize>>(),
                    )
                })
                .collect(),
            preimage_bijective: report
                .preimage_check
                .as_ref()
                .map(|p| p.bijective_onto_image()),
            oracle_ideals: report.preimage_check.as_ref().map(|p| p.oracle_ideals),
        }
    }
}

/// Report of an ideal-lattice enumeration, with Hasse (cover) edges into
/// the sorted ideal list and an optional isomorphism certificate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatticeReport {
    pub oracle: String,
    pub ideal_count: usize,
    pub ideals: Vec<IdealRepr>,
    pub hasse: Vec<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub criterion: Option<CriterionRepr>,
}

impl LatticeReport {
    pub fn new(
        oracle: String,
        lattice: &IdealLattice,
        criterion: Option<&CriterionReport>,
    ) -> Self {
        LatticeReport {
            oracle,
            ideal_count: lattice.len(),
            ideals: lattice.ideals.iter().map(IdealRepr::from_ideal).collect(),
            hasse: lattice.hasse.clone(),
            criterion: criterion.map(CriterionRepr::from_report),
        }
    }
}

/// Report of a maximal semilattice quotient: class representatives in
/// enumeration order and the induced join table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NablaReport {
    pub oracle: String,
    pub class_count: usize,
    pub representatives: Vec<ElemRepr>,
    pub names: Vec<String>,
    pub table: Vec<Vec<usize>>,
    pub zero: usize,
}

impl NablaReport {
    pub fn new(oracle: String, quotient: &SemilatticeQuotient) -> Self {
        let t = quotient.semilattice.as_table();
        NablaReport {
            oracle,
            class_count: quotient.class_count(),
            representatives: quotient
                .class_reps
                .iter()
                .map(ElemRepr::from_elem)
                .collect(),
            names: t.names().to_vec(),
            table: t.table().to_vec(),
            zero: t.zero_index(),
        }
    }
}

/// Wire form of a divisibility certificate; `verified` is always written
/// as true because emission re-checks the defining equation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateDoc {
    pub x: ElemRepr,
    pub targets: Vec<u64>,
    pub parts: Vec<ElemRepr>,
    pub verified: bool,
}

impl CertificateDoc {
    pub fn from_certificate(
        cert: &DivisibilityCertificate,
        oracle: &dyn MonoidOracle,
    ) -> Result<Self, IoError> {
        if !cert.verify(oracle)? {
            return Err(IoError::Schema(
                "refusing to serialize an unverified certificate".into(),
            ));
        }
        Ok(CertificateDoc {
            x: ElemRepr::from_elem(&cert.x),
            targets: cert.targets.clone(),
            parts: cert.parts.iter().map(ElemRepr::from_elem).collect(),
            verified: true,
        })
    }
}
