//! dg algebra morphisms, singular Hochschild cochains with coefficients in the target, and the
//! isomorphism they induce on singular Hochschild cohomology together with the
//! Goresky–Hingston invariance check.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frobenius::Term;
use crate::hochschild::{
    homology_in_degree, Chain, Cochain, CochainKey, ComplexError, Complexes, DegreeHomology, Window,
};
use crate::linalg::{rank, LinalgError, Scalar, SparseMatrix, SparseVec, Subspace};
use crate::products::StarTable;
use crate::signs::{sign, Word};
use crate::tate::{SgHomologyReport, TateElement, TateError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("not an algebra map: {0}")]
    NotAnAlgebraMap(String),
    #[error("morphism description: {0}")]
    Description(String),
    #[error("not invertible in degree {degree}: {}", if *.window_too_small { "the next level is invertible, so the window is too small" } else { "the map is not a quasi-isomorphism" })]
    NotInvertible { degree: i64, window_too_small: bool },
    #[error("precondition: {0}")]
    Precondition(String),
    #[error("{identity} fails at {pair}: {left} vs {right}")]
    IdentityFailure { identity: String, pair: String, left: String, right: String },
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Tate(#[from] TateError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// How an arrow of a zig-zag is traversed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Forward,
    Backward,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MorphismEntry {
    pub from: String,
    pub to: Vec<Term>,
}

/// A morphism as read from a file; `source` and `target` are algebra file paths.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MorphismDescription {
    pub source: String,
    pub target: String,
    pub entries: Vec<MorphismEntry>,
    #[serde(default)]
    pub direction: Direction,
}

/// A validated degree-zero dg algebra map.
#[derive(Clone)]
pub struct DgMorphism {
    pub source: Arc<Complexes>,
    pub target: Arc<Complexes>,
    /// `images[a]` is φ of the source basis element `a` in target coordinates.
    pub images: Vec<SparseVec>,
    pub quasi_iso: bool,
}

impl std::fmt::Debug for DgMorphism {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DgMorphism")
            .field("source", &self.source.alg.name())
            .field("target", &self.target.alg.name())
            .field("images", &self.images)
            .field("quasi_iso", &self.quasi_iso)
            .finish()
    }
}

impl DgMorphism {
    /// Builds a morphism from a description whose basis names refer to the given algebras.
    /// Basis elements without an entry map to zero.
    pub fn from_description(
        source: Arc<Complexes>,
        target: Arc<Complexes>,
        desc: &MorphismDescription,
    ) -> Result<DgMorphism, TransportError> {
        let mut images = vec![SparseVec::new(); source.alg.dim()];
        let mut seen = vec![false; source.alg.dim()];
        for entry in &desc.entries {
            let from = source
                .alg
                .index_of(&entry.from)
                .ok_or_else(|| TransportError::Description(format!("unknown source basis element \"{}\"", entry.from)))?;
            if std::mem::replace(&mut seen[from], true) {
                return Err(TransportError::Description(format!("duplicate entry for \"{}\"", entry.from)));
            }
            for term in &entry.to {
                let to = target
                    .alg
                    .index_of(&term.basis)
                    .ok_or_else(|| TransportError::Description(format!("unknown target basis element \"{}\"", term.basis)))?;
                crate::hochschild::add_term(&mut images[from], to, term.coeff.0.clone());
            }
        }
        Self::from_images(source, target, images)
    }

    /// Validates the algebra-map laws on all basis pairs and decides whether φ is a
    /// quasi-isomorphism.
    pub fn from_images(source: Arc<Complexes>, target: Arc<Complexes>, images: Vec<SparseVec>) -> Result<DgMorphism, TransportError> {
        let (a, b) = (&source.alg, &target.alg);
        if images.len() != a.dim() {
            return Err(TransportError::Description(format!("{} images for {} basis elements", images.len(), a.dim())));
        }
        let name = |i: usize| a.basis_name(i).to_string();
        for (i, image) in images.iter().enumerate() {
            if let Some((t, _)) = image.iter().find(|(t, _)| b.degree(**t) != a.degree(i)) {
                return Err(TransportError::NotAnAlgebraMap(format!(
                    "φ({}) has a component on {} of a different degree",
                    name(i),
                    b.basis_name(*t)
                )));
            }
        }
        if images[a.unit()] != b.basis_vector(b.unit()) {
            return Err(TransportError::NotAnAlgebraMap(format!("φ({}) is not the unit", name(a.unit()))));
        }
        let apply = |v: &SparseVec| -> SparseVec {
            let mut out = SparseVec::new();
            for (i, c) in v {
                crate::linalg::axpy(&mut out, c, &images[*i]);
            }
            out
        };
        for i in 0..a.dim() {
            for j in 0..a.dim() {
                if apply(a.product(i, j)) != b.mul_vec(&images[i], &images[j]) {
                    return Err(TransportError::NotAnAlgebraMap(format!("φ({}·{}) ≠ φ({})·φ({})", name(i), name(j), name(i), name(j))));
                }
            }
            if apply(a.differential(i)) != b.d_vec(&images[i]) {
                return Err(TransportError::NotAnAlgebraMap(format!("φ(d {}) ≠ d φ({})", name(i), name(i))));
            }
        }
        let quasi_iso = Self::induces_iso(&source, &target, &images)?;
        Ok(DgMorphism { source, target, images, quasi_iso })
    }

    /// Compares the homology of `(A, d)` and `(B, d)` through φ in degrees `0..=k`.
    fn induces_iso(source: &Complexes, target: &Complexes, images: &[SparseVec]) -> Result<bool, TransportError> {
        let top = source.k().max(target.k());
        for degree in 0..=top {
            let hs = internal_homology(source, degree)?;
            let ht = internal_homology(target, degree)?;
            if hs.dim() != ht.dim() {
                return Ok(false);
            }
            let columns: Vec<SparseVec> = (0..hs.dim())
                .map(|j| {
                    let mut image = SparseVec::new();
                    for (i, c) in hs.representative(j) {
                        crate::linalg::axpy(&mut image, c, &images[hs.basis[*i]]);
                    }
                    let local: SparseVec = image.iter().map(|(t, c)| (ht.local(*t), c.clone())).collect();
                    dense_to_sparse(&ht.homology.reduce(&local).expect("φ maps cycles to cycles"))
                })
                .collect();
            if rank(&SparseMatrix::from_columns(ht.dim(), &columns)) != hs.dim() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &DgMorphism) -> Result<DgMorphism, TransportError> {
        if !Arc::ptr_eq(&self.target, &next.source) && self.target.alg.name() != next.source.alg.name() {
            return Err(TransportError::Precondition("morphisms are not composable".into()));
        }
        let images = self
            .images
            .iter()
            .map(|v| {
                let mut out = SparseVec::new();
                for (i, c) in v {
                    crate::linalg::axpy(&mut out, c, &next.images[*i]);
                }
                out
            })
            .collect();
        DgMorphism::from_images(self.source.clone(), next.target.clone(), images)
    }

    pub fn identity(algebra: Arc<Complexes>) -> DgMorphism {
        let images = (0..algebra.alg.dim()).map(|i| algebra.alg.basis_vector(i)).collect();
        DgMorphism { source: algebra.clone(), target: algebra, images, quasi_iso: true }
    }

    fn apply_bar(&self, a: u16) -> impl Iterator<Item = (u16, &Scalar)> + '_ {
        let unit = self.target.unit();
        self.images[a as usize].iter().map(|(t, c)| (*t as u16, c)).filter(move |(t, _)| *t != unit)
    }

    /// `Ω^p(φ)` on one word: φ in every slot.
    pub fn apply_word(&self, word: &Word) -> Chain {
        let mut partial: Vec<(Vec<u16>, Scalar)> = vec![(Vec::new(), Scalar::one())];
        for slot in &word.bars {
            let mut next = Vec::new();
            for (bars, c) in &partial {
                for (t, x) in self.apply_bar(*slot) {
                    let mut extended = bars.clone();
                    extended.push(t);
                    next.push((extended, c * x));
                }
            }
            partial = next;
        }
        let mut out = Chain::new();
        for (bars, c) in partial {
            for (t, x) in &self.images[word.tail as usize] {
                crate::hochschild::add_term(&mut out, Word::new(bars.clone(), *t as u16), &c * x);
            }
        }
        out
    }
}

struct InternalHomology {
    basis: Vec<usize>,
    homology: crate::linalg::Homology,
}

impl InternalHomology {
    fn dim(&self) -> usize {
        self.homology.dim()
    }

    fn representative(&self, index: usize) -> &SparseVec {
        self.homology.representative(index)
    }

    fn local(&self, global: usize) -> usize {
        self.basis.iter().position(|b| *b == global).expect("same degree")
    }
}

fn internal_homology(cx: &Complexes, degree: i64) -> Result<InternalHomology, LinalgError> {
    let alg = &cx.alg;
    let at = |n: i64| -> Vec<usize> { (0..alg.dim()).filter(|i| alg.degree(*i) == n).collect() };
    let matrix = |from: &[usize], to: &[usize]| {
        let columns: Vec<SparseVec> = from
            .iter()
            .map(|i| {
                alg.differential(*i)
                    .iter()
                    .map(|(t, c)| (to.iter().position(|b| b == t).expect("d raises degree by one"), c.clone()))
                    .collect()
            })
            .collect();
        SparseMatrix::from_columns(to.len(), &columns)
    };
    let (before, here, after) = (at(degree - 1), at(degree), at(degree + 1));
    let homology = crate::linalg::homology_at(&matrix(&before, &here), &matrix(&here, &after))?;
    Ok(InternalHomology { basis: here, homology })
}

/// Cochains on the source with values in the forms module of the target, the source acting
/// through φ.
pub struct MixedComplex<'a> {
    pub morphism: &'a DgMorphism,
}

impl<'a> MixedComplex<'a> {
    pub fn new(morphism: &'a DgMorphism) -> Self {
        MixedComplex { morphism }
    }

    fn source(&self) -> &Complexes {
        &self.morphism.source
    }

    fn target(&self) -> &Complexes {
        &self.morphism.target
    }

    pub fn basis(&self, level: usize, degree: i64) -> Result<Vec<CochainKey>, ComplexError> {
        let mut out = Vec::new();
        for output_degree in 0..=self.target().max_word_degree(level) {
            let shifted = output_degree - degree;
            if shifted < 0 {
                continue;
            }
            let outputs = self.target().words_at_level(level, output_degree);
            if outputs.is_empty() {
                continue;
            }
            for input in self.source().sequences(shifted)? {
                for output in &outputs {
                    out.push(CochainKey { input: input.clone(), output: output.clone() });
                }
            }
        }
        out.sort();
        Ok(out)
    }

    fn act_left(&self, a: u16, value: &Chain) -> Chain {
        let mut out = Chain::new();
        for (b, x) in &self.morphism.images[a as usize] {
            for (word, c) in value {
                self.target().action_left_into(*b as u16, word, &(c * x), &mut out);
            }
        }
        out
    }

    fn act_right(&self, value: &Chain, a: u16) -> Chain {
        let mut out = Chain::new();
        for (b, x) in &self.morphism.images[a as usize] {
            for (word, c) in value {
                self.target().action_right_into(word, *b as u16, &(c * x), &mut out);
            }
        }
        out
    }

    /// The Hochschild differential, pushing each value to the inputs it affects.
    pub fn differential(&self, f: &Cochain) -> Cochain {
        let (a, b) = (self.source(), self.target());
        let mut out = Cochain::zero(f.level, f.degree + 1);
        let df = f.degree;
        let one = Scalar::one();
        for (input, value) in &f.values {
            let m = input.len();
            let eps = a.prefixes(input);
            out.add_value(input.clone(), &b.tensor_differential(value), &one);
            for i in 0..m {
                let s = sign(df + eps[i]);
                for (pre, c) in &a.differential_preimage[input[i] as usize] {
                    let mut source = input.clone();
                    source[i] = *pre;
                    out.add_value(source, value, &(&s * c));
                }
            }
            for x in a.augmentation() {
                let s = -sign(a.bar_deg(*x) * df);
                let mut source = Vec::with_capacity(m + 1);
                source.push(*x);
                source.extend_from_slice(input);
                out.add_value(source, &self.act_left(*x, value), &s);
            }
            for i in 0..m {
                for (l, r, coeff) in &a.product_preimage[input[i] as usize] {
                    let s = -sign(df + eps[i] + a.bar_deg(*l));
                    let mut source = Vec::with_capacity(m + 1);
                    source.extend_from_slice(&input[..i]);
                    source.push(*l);
                    source.push(*r);
                    source.extend_from_slice(&input[i + 1..]);
                    out.add_value(source, value, &(&s * coeff));
                }
            }
            let s = sign(df + eps[m]);
            for x in a.augmentation() {
                let mut source = input.clone();
                source.push(*x);
                out.add_value(source, &self.act_right(value, *x), &s);
            }
        }
        out
    }

    /// `θ(f)(a_1, ..) = (-1)^{(|a_1|-1)|f|} [φ(a_1)] (x) f(a_2, ..)`.
    pub fn theta(&self, f: &Cochain) -> Cochain {
        let mut out = Cochain::zero(f.level + 1, f.degree);
        for (input, value) in &f.values {
            for x in self.source().augmentation() {
                let s = sign(self.source().bar_deg(*x) * f.degree);
                let mut source = Vec::with_capacity(input.len() + 1);
                source.push(*x);
                source.extend_from_slice(input);
                for (t, y) in self.morphism.apply_bar(*x) {
                    let mut lifted = Chain::new();
                    for (word, c) in value {
                        let mut bars = Vec::with_capacity(word.bars.len() + 1);
                        bars.push(t);
                        bars.extend_from_slice(&word.bars);
                        crate::hochschild::add_term(&mut lifted, Word::new(bars, word.tail), c * y * &s);
                    }
                    out.add_value(source.clone(), &lifted, &one());
                }
            }
        }
        out
    }

    /// Post-composition with `Ω^p(φ)` of a source-valued cochain.
    pub fn push_forward(&self, f: &Cochain) -> Cochain {
        let mut out = Cochain::zero(f.level, f.degree);
        for (input, value) in &f.values {
            let mut image = Chain::new();
            for (word, c) in value {
                crate::hochschild::add_scaled(&mut image, &self.morphism.apply_word(word), c);
            }
            out.add_value(input.clone(), &image, &one());
        }
        out
    }

    /// Precomposition with `φ^{(x) m}` of a target cochain.
    pub fn pull_back(&self, g: &Cochain) -> Cochain {
        let mut preimages: BTreeMap<u16, Vec<(u16, Scalar)>> = BTreeMap::new();
        for a in self.source().augmentation() {
            for (t, c) in self.morphism.apply_bar(*a) {
                preimages.entry(t).or_default().push((*a, c.clone()));
            }
        }
        let mut out = Cochain::zero(g.level, g.degree);
        for (input, value) in &g.values {
            let mut partial: Vec<(Vec<u16>, Scalar)> = vec![(Vec::new(), Scalar::one())];
            for slot in input {
                let mut next = Vec::new();
                for (seq, c) in &partial {
                    for (a, x) in preimages.get(slot).map(Vec::as_slice).unwrap_or(&[]) {
                        let mut extended = seq.clone();
                        extended.push(*a);
                        next.push((extended, c * x));
                    }
                }
                partial = next;
            }
            for (seq, c) in partial {
                out.add_value(seq, value, &c);
            }
        }
        out
    }

    pub fn homology(&self, level: usize, degree: i64) -> Result<DegreeHomology<CochainKey>, TransportError> {
        let basis_at = |n: i64| self.basis(level, n).unwrap_or_default();
        let differential = |key: &CochainKey| {
            let d = self.target().word_degree(&key.output) - self.source().bars_degree(&key.input);
            self.differential(&Cochain::elementary(level, d, key.input.clone(), key.output.clone())).to_flat()
        };
        Ok(homology_in_degree(degree, &basis_at, &differential)?)
    }
}

fn one() -> Scalar {
    Scalar::one()
}

fn dense_to_sparse(values: &[Scalar]) -> SparseVec {
    values.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(i, c)| (i, c.clone())).collect()
}

/// The level at which degree-`degree` classes are compared: one above the highest level ι can
/// need for a chain of degree `degree - k + 1`.
pub fn comparison_level(k: i64, degree: i64) -> usize {
    (degree - k + 3).max(1) as usize
}

/// One degree of the transported isomorphism.
#[derive(Debug, Clone)]
pub struct TransportDegree {
    pub degree: i64,
    pub level: usize,
    /// `HH_sg(A) → H(C(A, Ω B))`, induced by `Ω(φ) ∘ ι`.
    pub source_map: SparseMatrix,
    /// `HH_sg(B) → H(C(A, Ω B))`, induced by precomposition with φ after ι.
    pub target_map: SparseMatrix,
    /// `target_map^{-1} · source_map`.
    pub composite: SparseMatrix,
    /// Whether the composite agrees with the one computed one level higher.
    pub stable: bool,
}

#[derive(Debug, Clone)]
pub struct TransportReport {
    pub window: Window,
    pub degrees: Vec<TransportDegree>,
}

impl TransportReport {
    pub fn at(&self, degree: i64) -> Option<&TransportDegree> {
        self.degrees.iter().find(|d| d.degree == degree)
    }

    /// `next ∘ self`, degree by degree.
    pub fn then(&self, next: &TransportReport) -> Result<TransportReport, TransportError> {
        let mut degrees = Vec::new();
        for piece in &self.degrees {
            let Some(other) = next.at(piece.degree) else { continue };
            degrees.push(TransportDegree {
                degree: piece.degree,
                level: piece.level.max(other.level),
                source_map: piece.source_map.clone(),
                target_map: other.target_map.clone(),
                composite: other.composite.mul(&piece.composite)?,
                stable: piece.stable && other.stable,
            });
        }
        Ok(TransportReport { window: self.window, degrees })
    }

    pub fn inverse(&self) -> Result<TransportReport, TransportError> {
        let mut degrees = Vec::new();
        for piece in &self.degrees {
            let composite = piece
                .composite
                .inverse()
                .map_err(|_| TransportError::NotInvertible { degree: piece.degree, window_too_small: false })?;
            degrees.push(TransportDegree { composite, ..piece.clone() });
        }
        Ok(TransportReport { window: self.window, degrees })
    }
}

fn class_matrix(
    homology: &DegreeHomology<CochainKey>,
    columns: impl Iterator<Item = Cochain>,
) -> Result<SparseMatrix, TransportError> {
    let columns: Vec<SparseVec> = columns
        .map(|c| {
            homology.class_of(&c.to_flat()).map(|v| dense_to_sparse(&v)).ok_or_else(|| TransportError::IdentityFailure {
                identity: "cochain map".into(),
                pair: format!("degree {}", homology.degree),
                left: "image is not a cocycle".into(),
                right: String::new(),
            })
        })
        .collect::<Result<_, _>>()?;
    Ok(SparseMatrix::from_columns(homology.dim(), &columns))
}

impl DgMorphism {
    fn maps_at_level(
        &self,
        source: &SgHomologyReport,
        target: &SgHomologyReport,
        degree: i64,
        level: usize,
    ) -> Result<(SparseMatrix, SparseMatrix), TransportError> {
        let mixed = MixedComplex::new(self);
        let homology = mixed.homology(level, degree)?;
        let lift = |cx: &Complexes, report: &SgHomologyReport, index: usize| -> Cochain {
            let t: TateElement = report.class_element(degree, index);
            cx.iota(&t, level)
        };
        let dim_s = source.at(degree).map_or(0, |d| d.dim());
        let dim_t = target.at(degree).map_or(0, |d| d.dim());
        let m1 = class_matrix(&homology, (0..dim_s).map(|i| mixed.push_forward(&lift(&self.source, source, i))))?;
        let m2 = class_matrix(&homology, (0..dim_t).map(|i| mixed.pull_back(&lift(&self.target, target, i))))?;
        Ok((m1, m2))
    }

    fn composite_at(
        &self,
        source: &SgHomologyReport,
        target: &SgHomologyReport,
        degree: i64,
        level: usize,
    ) -> Result<Option<(SparseMatrix, SparseMatrix, SparseMatrix)>, TransportError> {
        let (m1, m2) = self.maps_at_level(source, target, degree, level)?;
        if m2.rows() != m2.cols() || m1.rows() != m1.cols() {
            return Ok(None);
        }
        let Ok(inverse) = m2.inverse() else { return Ok(None) };
        let composite = inverse.mul(&m1)?;
        if rank(&composite) != composite.cols() {
            return Ok(None);
        }
        Ok(Some((m1, m2, composite)))
    }

    /// The isomorphism `HH_sg(A) → HH_sg(B)` in every degree of the window.
    pub fn transport_iso(
        &self,
        source: &SgHomologyReport,
        target: &SgHomologyReport,
        window: Window,
    ) -> Result<TransportReport, TransportError> {
        if self.source.k() != self.target.k() {
            return Err(TransportError::Precondition(format!(
                "{} has k = {} but {} has k = {}",
                self.source.alg.name(),
                self.source.k(),
                self.target.alg.name(),
                self.target.k()
            )));
        }
        let mut degrees = Vec::new();
        for degree in window.degrees() {
            let mut level = comparison_level(self.source.k(), degree);
            for report in [source, target] {
                for j in 0..report.at(degree).map_or(0, |d| d.dim()) {
                    let cx = if std::ptr::eq(report, source) { &self.source } else { &self.target };
                    level = level.max(cx.iota_min_level(&report.class_element(degree, j)));
                }
            }
            let here = self.composite_at(source, target, degree, level)?;
            let probe = self.composite_at(source, target, degree, level + 1)?;
            match (here, probe) {
                (Some((source_map, target_map, composite)), probe) => {
                    let stable = probe.as_ref().is_some_and(|p| p.2 == composite);
                    degrees.push(TransportDegree { degree, level, source_map, target_map, composite, stable });
                }
                (None, probe) => {
                    return Err(TransportError::NotInvertible { degree, window_too_small: probe.is_some() });
                }
            }
        }
        Ok(TransportReport { window, degrees })
    }
}

/// One arrow of a zig-zag between the first and last algebra.
#[derive(Debug, Clone)]
pub struct ZigZagArrow {
    pub morphism: DgMorphism,
    pub direction: Direction,
}

impl ZigZagArrow {
    /// The algebras the arrow connects, in traversal order.
    pub fn ends(&self) -> (&Arc<Complexes>, &Arc<Complexes>) {
        match self.direction {
            Direction::Forward => (&self.morphism.source, &self.morphism.target),
            Direction::Backward => (&self.morphism.target, &self.morphism.source),
        }
    }
}

/// Outcome of the invariance check.
#[derive(Debug, Clone)]
pub struct InvarianceReport {
    pub transport: TransportReport,
    pub euler_zero: (bool, bool),
    /// Per Tate degree, the matrix of the composite on reduced classes (target reduced basis
    /// coordinates of each source reduced class).
    pub reduced_maps: BTreeMap<i64, SparseMatrix>,
    /// The source table rewritten in the target's reduced basis.
    pub mapped_table: StarTable,
    pub target_table: StarTable,
    pub failures: Vec<TransportError>,
}

impl InvarianceReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Tate-degree embedding of the reduced homology classes into `HH_sg`, per degree.
fn reduced_embedding(
    cx: &Complexes,
    report: &SgHomologyReport,
    table: &StarTable,
) -> Result<BTreeMap<i64, Vec<SparseVec>>, TransportError> {
    let chains = cx.hh_homology(table.window, true)?;
    let shift = cx.k() - 1;
    let mut out: BTreeMap<i64, Vec<SparseVec>> = BTreeMap::new();
    for piece in &chains.degrees {
        let degree = piece.degree + shift;
        if report.at(degree).is_none() {
            continue;
        }
        let columns = out.entry(degree).or_default();
        for index in 0..piece.dim() {
            let t = TateElement::from_chain(degree, piece.representative(index));
            columns.push(dense_to_sparse(&cx.sg_class(report, &t)?));
        }
    }
    Ok(out)
}

fn included_subspace(cx: &Complexes, report: &SgHomologyReport, degree: i64) -> Result<Vec<SparseVec>, TransportError> {
    let Some(co) = report.hh_cochain.at(degree) else { return Ok(Vec::new()) };
    (0..co.dim())
        .map(|j| {
            let t = TateElement::from_cochain(Cochain::from_flat(0, degree, &co.representative(j)));
            Ok(dense_to_sparse(&cx.sg_class(report, &t)?))
        })
        .collect()
}

fn format_vector(v: &[Scalar]) -> String {
    format!("[{}]", v.iter().map(crate::linalg::format_scalar).collect::<Vec<_>>().join(", "))
}

/// Composes the transported isomorphisms along a zig-zag and checks that the composite
/// preserves the Goresky–Hingston algebra on reduced classes.
pub fn gh_invariance_check(
    arrows: &[ZigZagArrow],
    reports: &[SgHomologyReport],
    window: Window,
) -> Result<InvarianceReport, TransportError> {
    if arrows.is_empty() || reports.len() != arrows.len() + 1 {
        return Err(TransportError::Precondition("a zig-zag needs n arrows and n + 1 reports".into()));
    }
    let mut algebras: Vec<Arc<Complexes>> = vec![arrows[0].ends().0.clone()];
    for (i, arrow) in arrows.iter().enumerate() {
        let (from, to) = arrow.ends();
        if from.alg.name() != algebras[i].alg.name() {
            return Err(TransportError::Precondition(format!("arrow {i} does not start at {}", algebras[i].alg.name())));
        }
        if from.k() != to.k() {
            return Err(TransportError::Precondition(format!(
                "{} has k = {} but {} has k = {}",
                from.alg.name(),
                from.k(),
                to.alg.name(),
                to.k()
            )));
        }
        if !arrow.morphism.quasi_iso {
            return Err(TransportError::Precondition(format!("arrow {i} is not a quasi-isomorphism")));
        }
        algebras.push(to.clone());
    }
    let mut composite: Option<TransportReport> = None;
    for (i, arrow) in arrows.iter().enumerate() {
        let step = match arrow.direction {
            Direction::Forward => arrow.morphism.transport_iso(&reports[i], &reports[i + 1], window)?,
            Direction::Backward => arrow.morphism.transport_iso(&reports[i + 1], &reports[i], window)?.inverse()?,
        };
        composite = Some(match composite {
            None => step,
            Some(sofar) => sofar.then(&step)?,
        });
    }
    let transport = composite.expect("at least one arrow");
    let (first, last) = (&algebras[0], &algebras[algebras.len() - 1]);
    let (source_report, target_report) = (&reports[0], &reports[reports.len() - 1]);
    let mut failures = Vec::new();
    let euler_zero = (first.alg.euler_is_zero(), last.alg.euler_is_zero());
    for (a, b) in algebras.iter().zip(algebras.iter().skip(1)) {
        if a.alg.euler_is_zero() != b.alg.euler_is_zero() {
            failures.push(TransportError::IdentityFailure {
                identity: "χ parity".into(),
                pair: format!("{} / {}", a.alg.name(), b.alg.name()),
                left: format!("χ = 0: {}", a.alg.euler_is_zero()),
                right: format!("χ = 0: {}", b.alg.euler_is_zero()),
            });
        }
    }

    let shift = first.k() - 1;
    let chain_window = Window::new((window.min - shift).max(1), window.max - shift);
    let source_table = first.star_table(chain_window)?;
    let target_table = last.star_table(chain_window)?;
    let source_reduced = reduced_embedding(first, source_report, &source_table)?;
    let target_reduced = reduced_embedding(last, target_report, &target_table)?;
    let mut reduced_maps = BTreeMap::new();
    for (degree, columns) in &source_reduced {
        let Some(piece) = transport.at(*degree) else { continue };
        let ambient = piece.composite.rows();
        let target_columns = target_reduced.get(degree).cloned().unwrap_or_default();
        let included = if euler_zero.1 && *degree == last.k() {
            included_subspace(last, target_report, *degree)?
        } else {
            Vec::new()
        };
        let mut spanning = target_columns.clone();
        spanning.extend(included.iter().cloned());
        let span = Subspace::span(ambient, &spanning);
        let mut matrix_columns = Vec::new();
        for (j, column) in columns.iter().enumerate() {
            let image = piece.composite.apply(column);
            let Some(coords) = solve_in_columns(ambient, &spanning, &image) else {
                failures.push(TransportError::IdentityFailure {
                    identity: "reduced subspace preserved".into(),
                    pair: format!("degree {degree}, class {j}"),
                    left: format!("{image:?}"),
                    right: format!("span of {} target classes", span.dim()),
                });
                continue;
            };
            matrix_columns.push(dense_to_sparse(&coords[..target_columns.len()]));
        }
        let restricted = SparseMatrix::from_columns(target_columns.len(), &matrix_columns);
        if rank(&restricted) != target_columns.len() || target_columns.len() != columns.len() {
            failures.push(TransportError::IdentityFailure {
                identity: "reduced subspace onto".into(),
                pair: format!("degree {degree}"),
                left: format!("rank {}", rank(&restricted)),
                right: format!("{} target classes", target_columns.len()),
            });
        }
        reduced_maps.insert(*degree, restricted);
    }

    let class_maps: BTreeMap<i64, SparseMatrix> =
        reduced_maps.iter().map(|(d, m)| (d - shift, m.clone())).collect();
    let mut mapped_table = StarTable { entries: BTreeMap::new(), ..target_table.clone() };
    let inverses: BTreeMap<i64, SparseMatrix> =
        class_maps.iter().filter_map(|(d, m)| m.inverse().ok().map(|inv| (*d, inv))).collect();
    for (((dl, il), (dr, ir)), (target_degree, coords)) in &source_table.entries {
        let (Some(sl), Some(sr), Some(st)) = (class_maps.get(dl), class_maps.get(dr), class_maps.get(target_degree)) else {
            continue;
        };
        let left = st.apply(&dense_to_sparse(coords));
        let mut right = SparseVec::new();
        for (r, x) in sl.column(*il) {
            for (s, y) in sr.column(*ir) {
                if let Some((_, entry)) = target_table.entries.get(&((*dl, r), (*dr, s))) {
                    crate::linalg::axpy(&mut right, &(&x * &y), &dense_to_sparse(entry));
                }
            }
        }
        if left != right {
            let dim = st.rows();
            failures.push(TransportError::IdentityFailure {
                identity: "T(x ⋆ y) = T(x) ⋆ T(y)".into(),
                pair: format!("({dl},{il})·({dr},{ir})"),
                left: format_vector(&to_dense(&left, dim)),
                right: format_vector(&to_dense(&right, dim)),
            });
        }
    }
    for (((dl, il), (dr, ir)), (target_degree, _)) in &target_table.entries {
        let (Some(il_inv), Some(ir_inv), Some(st)) = (inverses.get(dl), inverses.get(dr), class_maps.get(target_degree)) else {
            continue;
        };
        let mut value = SparseVec::new();
        for (r, x) in il_inv.column(*il) {
            for (s, y) in ir_inv.column(*ir) {
                if let Some((_, entry)) = source_table.entries.get(&((*dl, r), (*dr, s))) {
                    crate::linalg::axpy(&mut value, &(&x * &y), &dense_to_sparse(entry));
                }
            }
        }
        let mapped = st.apply(&value);
        mapped_table.entries.insert(((*dl, *il), (*dr, *ir)), (*target_degree, to_dense(&mapped, st.rows())));
    }
    Ok(InvarianceReport { transport, euler_zero, reduced_maps, mapped_table, target_table, failures })
}

fn to_dense(v: &SparseVec, dim: usize) -> Vec<Scalar> {
    let mut out = vec![Scalar::zero(); dim];
    for (i, c) in v {
        out[*i] = c.clone();
    }
    out
}

/// Coordinates of `target` in the given (independent) columns, if it lies in their span.
fn solve_in_columns(ambient: usize, columns: &[SparseVec], target: &SparseVec) -> Option<Vec<Scalar>> {
    let matrix = SparseMatrix::from_columns(ambient, columns);
    if rank(&matrix) != columns.len() {
        return None;
    }
    let mut augmented = columns.to_vec();
    augmented.push(target.clone());
    let kernel = crate::linalg::kernel(&SparseMatrix::from_columns(ambient, &augmented));
    let n = columns.len();
    let vector = kernel.basis().iter().find(|v| v.get(&n).is_some_and(|c| !c.is_zero()))?;
    let scale = -vector[&n].clone();
    Some((0..n).map(|i| vector.get(&i).map_or(Scalar::zero(), |c| c / &scale)).collect())
}
