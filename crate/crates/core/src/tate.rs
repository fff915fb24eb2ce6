//! The Tate–Hochschild complex `D^n = C^n(A, A) ⊕ C_{n-k+1}(A, A)`, its homotopy retract onto
//! forms-valued cochains (ι, Π, H), singular Hochschild cohomology with its long exact sequence,
//! and the cup product on it.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::hochschild::{
    add_scaled, add_term, homology_in_degree, BasisElement, Chain, Cochain, CochainKey, ComplexError, Complexes,
    DegreeHomology, HomologyReport, Window,
};
use crate::linalg::{LinalgError, Scalar, SparseMatrix, SparseVec, Subspace};
use crate::products::StarTable;
use crate::signs::{sign, Word};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TateError {
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("long exact sequence fails at {node}")]
    ExactnessFailure { node: String },
    #[error("product degree {degree} leaves the window [{min}, {max}]")]
    WindowOverflow { degree: i64, min: i64, max: i64 },
    #[error("{identity} fails: {witness}")]
    IdentityFailure { identity: String, witness: String },
}

/// Sign of the γ component in the cone differential, fixed by requiring ι to be a chain map.
pub const CONE_SIGN: i64 = -1;

/// An element of the Tate–Hochschild complex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TateElement {
    pub degree: i64,
    /// The Hochschild cochain part, at level zero.
    pub cochain: Cochain,
    /// The Hochschild chain part, of total degree `degree - k + 1`.
    pub chain: Chain,
}

impl TateElement {
    pub fn zero(degree: i64) -> Self {
        TateElement { degree, cochain: Cochain::zero(0, degree), chain: Chain::new() }
    }

    pub fn from_chain(degree: i64, chain: Chain) -> Self {
        TateElement { degree, cochain: Cochain::zero(0, degree), chain }
    }

    pub fn from_cochain(cochain: Cochain) -> Self {
        TateElement { degree: cochain.degree, cochain, chain: Chain::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.cochain.is_zero() && self.chain.is_empty()
    }

    pub fn to_flat(&self) -> BTreeMap<BasisElement, Scalar> {
        let mut out: BTreeMap<BasisElement, Scalar> =
            self.cochain.to_flat().into_iter().map(|(k, c)| (BasisElement::Cochain(k), c)).collect();
        for (w, c) in &self.chain {
            out.insert(BasisElement::Chain(w.clone()), c.clone());
        }
        out
    }

    pub fn from_flat(degree: i64, flat: &BTreeMap<BasisElement, Scalar>) -> Self {
        let mut out = TateElement::zero(degree);
        for (key, c) in flat {
            match key {
                BasisElement::Cochain(k) => out.cochain.add_word(k.input.clone(), k.output.clone(), c.clone()),
                BasisElement::Chain(w) => add_term(&mut out.chain, w.clone(), c.clone()),
            }
        }
        out
    }

    pub fn add(&mut self, other: &TateElement, coeff: &Scalar) {
        self.cochain.add(&other.cochain, coeff);
        add_scaled(&mut self.chain, &other.chain, coeff);
    }
}

/// A representative of a singular Hochschild cochain: a cochain at some level, identified with
/// all of its θ-raisings.
#[derive(Debug, Clone)]
pub struct StableCochain {
    pub value: Cochain,
}

impl StableCochain {
    pub fn new(value: Cochain) -> Self {
        StableCochain { value }
    }

    pub fn level(&self) -> usize {
        self.value.level
    }

    /// Equality after raising both representatives to the higher level.
    pub fn stably_equal(&self, other: &StableCochain, cx: &Complexes) -> bool {
        if self.value.degree != other.value.degree {
            return false;
        }
        let level = self.level().max(other.level());
        cx.raise(&self.value, level) == cx.raise(&other.value, level)
    }
}

/// Products of `HH_sg` class pairs whose degree stays in the window.
pub type SgCupTable = BTreeMap<((i64, usize), (i64, usize)), (i64, Vec<Scalar>)>;

/// One node of the long exact sequence and whether image equals kernel there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactnessNode {
    pub label: String,
    pub image_dim: usize,
    pub kernel_dim: usize,
    pub exact: bool,
}

/// A chosen complement of the included Hochschild cohomology inside `HH_sg` when `χ = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Splitting {
    pub degree: i64,
    pub included_dim: usize,
    /// Class coordinates (in the `HH_sg` basis) of the complement, chosen by pivots.
    pub complement: Vec<Vec<Scalar>>,
}

/// Singular Hochschild cohomology computed from the Tate–Hochschild complex.
#[derive(Debug, Clone)]
pub struct SgHomologyReport {
    pub window: Window,
    pub degrees: Vec<DegreeHomology<BasisElement>>,
    pub hh_cochain: HomologyReport<CochainKey>,
    pub hh_chain: HomologyReport<Word>,
    pub exactness: Vec<ExactnessNode>,
    pub splittings: Vec<Splitting>,
    pub euler_zero: bool,
}

impl SgHomologyReport {
    pub fn at(&self, degree: i64) -> Option<&DegreeHomology<BasisElement>> {
        self.degrees.iter().find(|d| d.degree == degree)
    }

    pub fn dims(&self) -> Vec<(i64, usize)> {
        self.degrees.iter().map(|d| (d.degree, d.dim())).collect()
    }

    pub fn class_element(&self, degree: i64, index: usize) -> TateElement {
        let piece = self.at(degree).expect("degree in window");
        TateElement::from_flat(degree, &piece.representative(index))
    }

    /// Dimensions predicted by the case split on the Euler characteristic.
    pub fn predicted_dim(&self, k: i64, degree: i64) -> Option<usize> {
        let cochain = |i: i64| self.hh_cochain.at(i).map(|d| d.dim());
        let chain = |i: i64| self.hh_chain.at(i).map(|d| d.dim());
        if self.euler_zero {
            if degree < k - 1 {
                cochain(degree)
            } else if degree == k - 1 {
                Some(cochain(degree)? + chain(0)?)
            } else if degree == k {
                Some(chain(1)? + cochain(k)?)
            } else {
                chain(degree - k + 1)
            }
        } else if degree < k {
            cochain(degree)
        } else {
            chain(degree - k + 1)
        }
    }
}

/// Outcome of the retract identities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetractReport {
    pub basis_checked: usize,
    pub samples_checked: usize,
    pub failures: Vec<String>,
}

impl Complexes {
    /// `γ(a) = Σ (-1)^{|f_i||a|} e_i a f_i`.
    pub fn gamma(&self, a: u16) -> SparseVec {
        let mut out = SparseVec::new();
        for term in self.alg.casimir() {
            let s = sign(self.deg(term.right as u16) * self.deg(a)) * &term.coeff;
            for (ea, x) in self.product(term.left as u16, a) {
                for (t, y) in self.product(*ea as u16, term.right as u16) {
                    add_term(&mut out, *t, &s * x * y);
                }
            }
        }
        out
    }

    /// γ on the bar-free part of a chain, as a cochain of arity zero.
    pub fn gamma_chain(&self, chain: &Chain, degree: i64) -> Cochain {
        let mut out = Cochain::zero(0, degree);
        for (word, c) in chain {
            if !word.bars.is_empty() {
                continue;
            }
            for (t, x) in self.gamma(word.tail) {
                out.add_word(Vec::new(), Word::tail_only(t as u16), c * &x);
            }
        }
        out
    }

    pub fn tate_differential(&self, t: &TateElement) -> TateElement {
        let mut cochain = self.cochain_differential(&t.cochain);
        cochain.add(&self.gamma_chain(&t.chain, t.degree + 1), &Scalar::from_integer(CONE_SIGN.into()));
        let chain = crate::hochschild::scale(&self.chain_boundary(&t.chain), &sign(1 - self.k()));
        TateElement { degree: t.degree + 1, cochain, chain }
    }

    pub fn tate_basis(&self, degree: i64) -> Result<Vec<BasisElement>, ComplexError> {
        self.enumerate_basis(crate::hochschild::BasisKind::Tate, degree)
    }

    pub fn tate_differential_key(&self, degree: i64, key: &BasisElement) -> BTreeMap<BasisElement, Scalar> {
        let single = TateElement::from_flat(degree, &BTreeMap::from([(key.clone(), Scalar::one())]));
        self.tate_differential(&single).to_flat()
    }

    fn key_degree(&self, key: &BasisElement) -> i64 {
        match key {
            BasisElement::Cochain(k) => self.word_degree(&k.output) - self.bars_degree(&k.input),
            BasisElement::Chain(w) => self.word_degree(w) + self.k() - 1,
        }
    }

    // ----- ι, π, h, Π, H -----

    /// The level at which `ι` places a chain with `bars` bar slots.
    pub fn iota_level(bars: usize) -> usize {
        bars + 1
    }

    /// `ι(α)() = Σ (-1)^{|f_i||α|} [e_i] (x) [a_1] ... (x) a_{p+1} f_i` on one word.
    pub fn iota_word(&self, word: &Word, coeff: &Scalar, out: &mut Cochain) {
        let da = self.word_degree(word);
        for term in self.alg.casimir() {
            let (e, f) = (term.left as u16, term.right as u16);
            if self.is_unit(e) {
                continue;
            }
            let s = sign(self.deg(f) * da) * &term.coeff * coeff;
            for (t, x) in self.product(word.tail, f) {
                let mut bars = Vec::with_capacity(word.bars.len() + 1);
                bars.push(e);
                bars.extend_from_slice(&word.bars);
                out.add_word(Vec::new(), Word::new(bars, *t as u16), &s * x);
            }
        }
    }

    /// Raises a cochain to a higher level by repeated θ.
    pub fn raise(&self, f: &Cochain, level: usize) -> Cochain {
        assert!(level >= f.level, "cannot lower a cochain");
        self.theta_power(f, level - f.level)
    }

    /// The lowest level holding every component of `ι(t)`.
    pub fn iota_min_level(&self, t: &TateElement) -> usize {
        t.chain.keys().map(|w| Self::iota_level(w.bars.len())).max().unwrap_or(0)
    }

    /// `ι(t)` raised to `level` (at least `iota_min_level(t)`).
    pub fn iota(&self, t: &TateElement, level: usize) -> Cochain {
        let mut out = self.raise(&t.cochain, level);
        let mut by_level: BTreeMap<usize, Cochain> = BTreeMap::new();
        for (word, c) in &t.chain {
            let lvl = Self::iota_level(word.bars.len());
            let entry = by_level.entry(lvl).or_insert_with(|| Cochain::zero(lvl, t.degree));
            self.iota_word(word, c, entry);
        }
        for part in by_level.values() {
            out.add(&self.raise(part, level), &Scalar::one());
        }
        out.degree = t.degree;
        out
    }

    /// `(ε (x) id)` followed by the left action of `e`, applied to one word.
    fn counit_then_act(&self, e: u16, word: &Word, coeff: &Scalar, out: &mut Chain) {
        let Some((first, rest)) = word.bars.split_first() else { return };
        let eps = self.alg.counit(*first as usize);
        if eps.is_zero() {
            return;
        }
        let stripped = Word::new(rest.to_vec(), word.tail);
        self.action_left_into(e, &stripped, &(coeff * &eps), out);
    }

    /// One step of π: a level `p ≥ 1` cochain goes to level `p - 1`; arity-zero components
    /// leave as a chain.
    pub fn pi_level(&self, f: &Cochain) -> (Cochain, Chain) {
        if f.level == 0 {
            return (f.clone(), Chain::new());
        }
        let k = self.k();
        let mut cochain = Cochain::zero(f.level - 1, f.degree);
        let mut chain = Chain::new();
        for (input, value) in &f.values {
            match input.split_first() {
                None => {
                    let s = sign(k);
                    for (word, c) in value {
                        let Some((first, rest)) = word.bars.split_first() else { continue };
                        let eps = self.alg.counit(*first as usize);
                        if !eps.is_zero() {
                            add_term(&mut chain, Word::new(rest.to_vec(), word.tail), &s * c * &eps);
                        }
                    }
                }
                Some((head, rest)) => {
                    for term in self.alg.casimir() {
                        if term.right as u16 != *head {
                            continue;
                        }
                        let s = sign((self.deg(*head) - 1) * (f.degree + k)) * &term.coeff;
                        let mut acted = Chain::new();
                        for (word, c) in value {
                            self.counit_then_act(term.left as u16, word, c, &mut acted);
                        }
                        cochain.add_value(rest.to_vec(), &acted, &s);
                    }
                }
            }
        }
        (cochain, chain)
    }

    /// `h(f)(rest) = Σ (-1)^{(|f_i|-1)(|f|+k)} [e_i] (x) (ε (x) id)(f([f_i], rest))`.
    pub fn h_level(&self, f: &Cochain) -> Cochain {
        let mut out = Cochain::zero(f.level, f.degree - 1);
        if f.level == 0 {
            return out;
        }
        let k = self.k();
        for (input, value) in &f.values {
            let Some((head, rest)) = input.split_first() else { continue };
            for term in self.alg.casimir() {
                let e = term.left as u16;
                if term.right as u16 != *head || self.is_unit(e) {
                    continue;
                }
                let s = sign((self.deg(*head) - 1) * (f.degree + k)) * &term.coeff;
                for (word, c) in value {
                    let Some((first, tail_bars)) = word.bars.split_first() else { continue };
                    let eps = self.alg.counit(*first as usize);
                    if eps.is_zero() {
                        continue;
                    }
                    let mut bars = Vec::with_capacity(word.bars.len());
                    bars.push(e);
                    bars.extend_from_slice(tail_bars);
                    out.add_word(rest.to_vec(), Word::new(bars, word.tail), &s * c * &eps);
                }
            }
        }
        out
    }

    /// Π: iterate π down to level zero, collecting the chains that leave along the way.
    pub fn big_pi(&self, f: &Cochain) -> TateElement {
        let mut current = f.clone();
        let mut chain = Chain::new();
        while current.level > 0 {
            let (next, leaving) = self.pi_level(&current);
            add_scaled(&mut chain, &leaving, &Scalar::one());
            current = next;
        }
        TateElement { degree: f.degree, cochain: current, chain }
    }

    /// `H = Σ_{i=0}^{min(p,m)-1} θ^i h π^i` on each arity component; same level, degree −1.
    pub fn big_h(&self, f: &Cochain) -> Cochain {
        let mut out = Cochain::zero(f.level, f.degree - 1);
        for m in f.arities() {
            let mut current = f.arity_part(m);
            for i in 0..m.min(f.level) {
                let term = self.theta_power(&self.h_level(&current), i);
                out.add(&term, &Scalar::one());
                current = self.pi_level(&current).0;
            }
        }
        out
    }

    /// Checks Π ι = id on every Tate basis element in the window, ι as a chain map, and
    /// `F − ιΠF = δHF + HδF` on random cochains at levels and arities up to `max_level`.
    pub fn retract_check<R: rand::Rng>(
        &self,
        window: Window,
        samples: usize,
        max_level: usize,
        rng: &mut R,
    ) -> Result<RetractReport, TateError> {
        let mut failures = Vec::new();
        let mut basis_checked = 0;
        for degree in window.degrees() {
            for key in self.tate_basis(degree)? {
                basis_checked += 1;
                let t = TateElement::from_flat(degree, &BTreeMap::from([(key.clone(), Scalar::one())]));
                let level = self.iota_min_level(&t);
                let lifted = self.iota(&t, level);
                if self.big_pi(&lifted) != t {
                    failures.push(format!("Π ι ≠ id at {key:?}"));
                }
                let next = self.tate_differential(&t);
                let top = level.max(self.iota_min_level(&next));
                let lhs = self.iota(&next, top);
                let rhs = self.raise(&self.cochain_differential(&lifted), top);
                if lhs != rhs {
                    failures.push(format!("ι is not a chain map at {key:?}"));
                }
            }
        }
        let mut samples_checked = 0;
        let degrees: Vec<i64> = window.degrees().collect();
        let mut attempts = 0;
        while samples_checked < samples && attempts < 20 * samples && !degrees.is_empty() {
            attempts += 1;
            let level = 1 + attempts % max_level.max(1);
            let degree = degrees[rng.gen_range(0..degrees.len())];
            let f = self.random_cochain_bounded(rng, level, degree, 4, Some(max_level))?;
            if f.is_zero() {
                continue;
            }
            samples_checked += 1;
            if let Some(residual) = self.homotopy_residual(&f) {
                failures.push(format!("id − ιΠ ≠ δH + Hδ at level {level}, degree {degree}: {residual}"));
            }
        }
        Ok(RetractReport { basis_checked, samples_checked, failures })
    }

    /// Residual of `F − ιΠF − δHF − HδF`, or `None` when it vanishes.
    pub fn homotopy_residual(&self, f: &Cochain) -> Option<String> {
        let mut residual = f.clone();
        residual.add(&self.iota(&self.big_pi(f), f.level), &-Scalar::one());
        residual.add(&self.cochain_differential(&self.big_h(f)), &-Scalar::one());
        residual.add(&self.big_h(&self.cochain_differential(f)), &-Scalar::one());
        if residual.is_zero() {
            None
        } else {
            Some(self.format_cochain(&residual))
        }
    }

    // ----- singular Hochschild cohomology -----

    /// Homology of the Tate–Hochschild complex in the window, with the long exact sequence
    /// checked at every node whose neighbours fall in the window.
    pub fn hh_sg(&self, window: Window) -> Result<SgHomologyReport, TateError> {
        if !self.alg.is_simply_connected() && self.bar_cap().is_none() {
            return Err(ComplexError::NotSimplyConnected.into());
        }
        let k = self.k();
        let basis_at = |n: i64| self.tate_basis(n).unwrap_or_default();
        let differential = |key: &BasisElement| self.tate_differential_key(self.key_degree(key), key);
        let mut degrees = Vec::new();
        for n in window.degrees() {
            degrees.push(homology_in_degree(n, &basis_at, &differential)?);
        }
        let cochain_window = Window::new(window.min, window.max + 1);
        let chain_window = Window::new(window.min - k, window.max - k + 2);
        let hh_cochain = self.hh_cohomology(cochain_window)?;
        let hh_chain = self.hh_homology(chain_window, false)?;
        let euler_zero = self.alg.euler_is_zero();
        let mut report =
            SgHomologyReport { window, degrees, hh_cochain, hh_chain, exactness: Vec::new(), splittings: Vec::new(), euler_zero };
        report.exactness = self.exactness_nodes(&report)?;
        if let Some(node) = report.exactness.iter().find(|n| !n.exact) {
            return Err(TateError::ExactnessFailure { node: node.label.clone() });
        }
        if euler_zero {
            for degree in [k - 1, k] {
                if let Some(split) = self.splitting(&report, degree)? {
                    report.splittings.push(split);
                }
            }
        }
        Ok(report)
    }

    /// γ induced on homology: `H(C_{i-k}) → HH^i`.
    fn gamma_matrix(&self, source: &DegreeHomology<Word>, target: &DegreeHomology<CochainKey>) -> SparseMatrix {
        let columns: Vec<SparseVec> = (0..source.dim())
            .map(|j| {
                let rep = source.representative(j);
                let image = self.gamma_chain(&rep, target.degree).scaled(&Scalar::from_integer(CONE_SIGN.into()));
                let coords = target.class_of(&image.to_flat()).expect("γ of a cycle is a cocycle");
                dense_to_sparse(&coords)
            })
            .collect();
        SparseMatrix::from_columns(target.dim(), &columns)
    }

    fn inclusion_matrix(&self, source: &DegreeHomology<CochainKey>, target: &DegreeHomology<BasisElement>) -> SparseMatrix {
        let columns: Vec<SparseVec> = (0..source.dim())
            .map(|j| {
                let rep = source.representative(j);
                let flat: BTreeMap<BasisElement, Scalar> =
                    rep.into_iter().map(|(k, c)| (BasisElement::Cochain(k), c)).collect();
                dense_to_sparse(&target.class_of(&flat).expect("a cocycle is a Tate cycle"))
            })
            .collect();
        SparseMatrix::from_columns(target.dim(), &columns)
    }

    fn projection_matrix(&self, source: &DegreeHomology<BasisElement>, target: &DegreeHomology<Word>) -> SparseMatrix {
        let columns: Vec<SparseVec> = (0..source.dim())
            .map(|j| {
                let rep = source.representative(j);
                let chain: Chain = rep
                    .into_iter()
                    .filter_map(|(key, c)| match key {
                        BasisElement::Chain(w) => Some((w, c)),
                        BasisElement::Cochain(_) => None,
                    })
                    .collect();
                dense_to_sparse(&target.class_of(&chain).expect("the chain part of a Tate cycle is a cycle"))
            })
            .collect();
        SparseMatrix::from_columns(target.dim(), &columns)
    }

    fn exactness_nodes(&self, report: &SgHomologyReport) -> Result<Vec<ExactnessNode>, TateError> {
        let k = self.k();
        let mut nodes = Vec::new();
        for i in report.window.degrees() {
            let (Some(sg), Some(co), Some(ch_in), Some(ch_out)) = (
                report.at(i),
                report.hh_cochain.at(i),
                report.hh_chain.at(i - k),
                report.hh_chain.at(i - k + 1),
            ) else {
                continue;
            };
            let gamma_in = self.gamma_matrix(ch_in, co);
            let inclusion = self.inclusion_matrix(co, sg);
            let projection = self.projection_matrix(sg, ch_out);
            nodes.push(node(format!("HH^{i}"), &gamma_in, &inclusion)?);
            nodes.push(node(format!("HH_sg^{i}"), &inclusion, &projection)?);
            if let Some(co_next) = report.hh_cochain.at(i + 1) {
                let gamma_out = self.gamma_matrix(ch_out, co_next);
                nodes.push(node(format!("HH_{}", i - k + 1), &projection, &gamma_out)?);
            }
        }
        Ok(nodes)
    }

    fn splitting(&self, report: &SgHomologyReport, degree: i64) -> Result<Option<Splitting>, TateError> {
        let (Some(sg), Some(co)) = (report.at(degree), report.hh_cochain.at(degree)) else {
            return Ok(None);
        };
        let inclusion = self.inclusion_matrix(co, sg);
        let included = crate::linalg::image(&inclusion);
        let mut complement = Vec::new();
        let mut span = included.clone();
        for j in 0..sg.dim() {
            let unit: SparseVec = SparseVec::from([(j, Scalar::one())]);
            if !span.contains(&unit) {
                span = span.sum(&Subspace::span(sg.dim(), std::slice::from_ref(&unit)));
                let mut dense = vec![Scalar::zero(); sg.dim()];
                dense[j] = Scalar::one();
                complement.push(dense);
            }
        }
        Ok(Some(Splitting { degree, included_dim: included.dim(), complement }))
    }

    /// Coordinates of a Tate cycle in the `HH_sg` basis of its degree.
    pub fn sg_class(&self, report: &SgHomologyReport, t: &TateElement) -> Result<Vec<Scalar>, TateError> {
        let piece = report.at(t.degree).ok_or(TateError::WindowOverflow {
            degree: t.degree,
            min: report.window.min,
            max: report.window.max,
        })?;
        piece.class_of(&t.to_flat()).ok_or_else(|| TateError::IdentityFailure {
            identity: "Tate cycle".into(),
            witness: format!("degree {}", t.degree),
        })
    }

    /// Cup product of two Tate elements through ι, returned via Π.
    pub fn tate_cup(&self, left: &TateElement, right: &TateElement) -> Result<TateElement, ComplexError> {
        let f = self.iota(left, self.iota_min_level(left));
        let g = self.iota(right, self.iota_min_level(right));
        Ok(self.big_pi(&self.cup(&f, &g)?))
    }

    /// Cup product of two `HH_sg` classes given by coordinates.
    pub fn cup_on_hhsg(
        &self,
        report: &SgHomologyReport,
        left: (i64, &[Scalar]),
        right: (i64, &[Scalar]),
    ) -> Result<(i64, Vec<Scalar>), TateError> {
        let degree = left.0 + right.0;
        if !report.window.contains(degree) {
            return Err(TateError::WindowOverflow { degree, min: report.window.min, max: report.window.max });
        }
        let element = |(d, coords): (i64, &[Scalar])| {
            let mut out = TateElement::zero(d);
            for (j, c) in coords.iter().enumerate() {
                if !c.is_zero() {
                    out.add(&report.class_element(d, j), c);
                }
            }
            out
        };
        let product = self.tate_cup(&element(left), &element(right))?;
        Ok((degree, self.sg_class(report, &product)?))
    }

    /// The cup product on every pair of basis classes of the report.
    pub fn sg_cup_table(&self, report: &SgHomologyReport) -> Result<SgCupTable, TateError> {
        let classes: Vec<(i64, usize)> =
            report.degrees.iter().flat_map(|d| (0..d.dim()).map(move |i| (d.degree, i))).collect();
        let mut table = SgCupTable::new();
        for left in &classes {
            for right in &classes {
                if !report.window.contains(left.0 + right.0) {
                    continue;
                }
                let product = self.tate_cup(&report.class_element(left.0, left.1), &report.class_element(right.0, right.1))?;
                table.insert((*left, *right), (left.0 + right.0, self.sg_class(report, &product)?));
            }
        }
        Ok(table)
    }

    /// Checks `ι(α) ∪ ι(β) = ι(α ⋆ β)` exactly on `samples` nonzero random chain pairs with degrees
    /// in the window.
    pub fn iota_cup_check<R: rand::Rng>(&self, window: Window, samples: usize, rng: &mut R) -> Result<Vec<String>, TateError> {
        let mut failures = Vec::new();
        let mut degrees = Vec::new();
        for d in window.degrees().filter(|d| *d >= 0) {
            if !self.chain_basis(d)?.is_empty() {
                degrees.push(d);
            }
        }
        if degrees.is_empty() {
            return Ok(failures);
        }
        let mut checked = 0;
        while checked < samples {
            let da = degrees[rng.gen_range(0..degrees.len())];
            let db = degrees[rng.gen_range(0..degrees.len())];
            let alpha = self.random_chain(rng, da, 2, false)?;
            let beta = self.random_chain(rng, db, 2, false)?;
            if alpha.is_empty() || beta.is_empty() {
                continue;
            }
            checked += 1;
            let ta = TateElement::from_chain(da + self.k() - 1, alpha.clone());
            let tb = TateElement::from_chain(db + self.k() - 1, beta.clone());
            let product = self.star(&alpha, &beta);
            let tp = TateElement::from_chain(da + db + 2 * (self.k() - 1), product);
            let level = self.iota_min_level(&ta) + self.iota_min_level(&tb);
            let lhs = self.cup(&self.iota(&ta, self.iota_min_level(&ta)), &self.iota(&tb, self.iota_min_level(&tb)))?;
            let rhs = self.iota(&tp, level.max(self.iota_min_level(&tp)));
            if lhs != rhs {
                failures.push(format!("{} and {}", self.format_chain(&alpha), self.format_chain(&beta)));
            }
        }
        Ok(failures)
    }

    /// Checks that the product table on reduced homology agrees with the cup product on the
    /// corresponding `HH_sg` classes.
    pub fn gh_table_matches_cup(&self, table: &StarTable, report: &SgHomologyReport) -> Result<Vec<String>, TateError> {
        let shift = self.k() - 1;
        let chains = self.hh_homology(table.window, true)?;
        let mut failures = Vec::new();
        for (((dl, il), (dr, ir)), (target, coords)) in &table.entries {
            if !report.window.contains(dl + dr + 2 * shift) {
                continue;
            }
            let rep = |d: i64, i: usize| chains.at(d).expect("class degree").representative(i);
            let left = TateElement::from_chain(dl + shift, rep(*dl, *il));
            let right = TateElement::from_chain(dr + shift, rep(*dr, *ir));
            let cup = self.sg_class(report, &self.tate_cup(&left, &right)?)?;
            let piece = chains.at(*target).expect("target degree");
            let mut star_chain = Chain::new();
            for (j, c) in coords.iter().enumerate() {
                if !c.is_zero() {
                    add_scaled(&mut star_chain, &piece.representative(j), c);
                }
            }
            let star_element = TateElement::from_chain(target + shift, star_chain);
            let star = self.sg_class(report, &star_element)?;
            if star != cup {
                failures.push(format!("({dl},{il})·({dr},{ir})"));
            }
        }
        Ok(failures)
    }
}

fn dense_to_sparse(values: &[Scalar]) -> SparseVec {
    values.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(i, c)| (i, c.clone())).collect()
}

fn node(label: String, incoming: &SparseMatrix, outgoing: &SparseMatrix) -> Result<ExactnessNode, TateError> {
    let composite = outgoing.mul(incoming)?;
    let image = crate::linalg::image(incoming);
    let kernel = crate::linalg::kernel(outgoing);
    let exact = composite.is_zero() && image.dim() == kernel.dim() && kernel.contains_subspace(&image);
    Ok(ExactnessNode { label, image_dim: image.dim(), kernel_dim: kernel.dim(), exact })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hochschild::tests::complexes;
    use crate::linalg::scalar;
    use crate::signs::sign;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gamma_examples() {
        let s2 = complexes("S2");
        assert_eq!(s2.gamma(0), SparseVec::from([(1, scalar(2))]));
        assert!(s2.gamma(1).is_empty());
        assert!(complexes("S3").gamma(0).is_empty());
    }

    #[test]
    fn tate_differential_squares_to_zero() {
        for name in ["S2", "S3", "CP2", "S7dg"] {
            let cx = complexes(name);
            for degree in -3..10 {
                for key in cx.tate_basis(degree).unwrap() {
                    let t = TateElement::from_flat(degree, &BTreeMap::from([(key.clone(), scalar(1))]));
                    assert!(cx.tate_differential(&cx.tate_differential(&t)).is_zero(), "{name}: {key:?}");
                }
            }
        }
    }

    #[test]
    fn iota_examples() {
        let s2 = complexes("S2");
        let t = TateElement::from_chain(3, Chain::from([(Word::tail_only(1), scalar(1))]));
        let lifted = s2.iota(&t, 1);
        assert_eq!(lifted.get(&[]).cloned().unwrap(), Chain::from([(Word::new(vec![1], 1), scalar(1))]));
        let s3 = complexes("S3");
        let t = TateElement::from_chain(4, Chain::from([(Word::new(vec![1], 0), scalar(1))]));
        let lifted = s3.iota(&t, 2);
        assert_eq!(lifted.get(&[]).cloned().unwrap(), Chain::from([(Word::new(vec![1, 1], 0), scalar(-1))]));
    }

    #[test]
    fn pi_examples_and_left_inverse_of_theta() {
        let s2 = complexes("S2");
        let f = Cochain::elementary(1, 1, vec![], Word::new(vec![1], 0));
        assert_eq!(s2.pi_level(&f).1, Chain::from([(Word::tail_only(0), scalar(1))]));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for name in ["S2", "S3", "CP2"] {
            let cx = complexes(name);
            for level in 0..3 {
                for degree in -2..3 {
                    let f = cx.random_cochain(&mut rng, level, degree, 4).unwrap();
                    assert_eq!(cx.pi_level(&cx.theta(&f)).0, f, "{name}: π θ = id");
                    assert!(cx.h_level(&cx.theta(&f)).is_zero(), "{name}: h θ = 0");
                    assert_eq!(cx.big_pi(&cx.theta(&f)), cx.big_pi(&f), "{name}: Π ignores θ");
                }
            }
        }
    }

    #[test]
    fn retract_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for name in ["S2", "S3", "CP2"] {
            let cx = complexes(name);
            let report = cx.retract_check(Window::new(-2, 8), 30, 3, &mut rng).unwrap();
            assert!(report.failures.is_empty(), "{name}: {:?}", &report.failures[..report.failures.len().min(3)]);
            assert!(report.samples_checked > 10);
        }
    }

    #[test]
    fn singular_cohomology_case_split() {
        for name in ["S2", "S3", "CP2", "S3xS3"] {
            let cx = complexes(name);
            let report = cx.hh_sg(Window::new(-2, 9)).unwrap();
            for (degree, dim) in report.dims() {
                assert_eq!(Some(dim), report.predicted_dim(cx.k(), degree), "{name} degree {degree}");
            }
            assert!(report.exactness.iter().all(|n| n.exact));
        }
    }

    #[test]
    fn iota_is_multiplicative() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for name in ["S2", "S3", "CP2"] {
            let cx = complexes(name);
            assert!(cx.iota_cup_check(Window::new(0, 6), 25, &mut rng).unwrap().is_empty(), "{name}");
        }
    }

    fn coords(report: &SgHomologyReport, degree: i64, index: usize) -> Vec<Scalar> {
        let mut out = vec![scalar(0); report.at(degree).unwrap().dim()];
        out[index] = scalar(1);
        out
    }

    #[test]
    fn cup_on_singular_classes() {
        for name in ["S2", "S3"] {
            let cx = complexes(name);
            let report = cx.hh_sg(Window::new(-3, 9)).unwrap();
            let unit = TateElement::from_cochain(cx.unit_cochain());
            let unit_class = cx.sg_class(&report, &unit).unwrap();
            let table = cx.sg_cup_table(&report).unwrap();
            assert!(!table.is_empty());
            for (((dl, il), (dr, ir)), (degree, product)) in &table {
                let swapped = &table[&((*dr, *ir), (*dl, *il))];
                let sign_factor = sign(dl * dr);
                let expected: Vec<Scalar> = product.iter().map(|c| c * &sign_factor).collect();
                assert_eq!(swapped.1, expected, "{name}: graded commutativity on ({dl},{il}) ({dr},{ir})");
                assert_eq!(*degree, dl + dr);
            }
            for piece in &report.degrees {
                for index in 0..piece.dim() {
                    let c = coords(&report, piece.degree, index);
                    let (degree, product) = cx.cup_on_hhsg(&report, (0, &unit_class), (piece.degree, &c)).unwrap();
                    assert_eq!((degree, product), (piece.degree, c.clone()), "{name}: unit");
                }
            }
            let overflow = cx.cup_on_hhsg(&report, (9, &coords(&report, 9, 0)), (9, &coords(&report, 9, 0)));
            assert!(matches!(overflow, Err(TateError::WindowOverflow { degree: 18, .. })));
        }
        let s3 = complexes("S3");
        let report = s3.hh_sg(Window::new(0, 9)).unwrap();
        let class = TateElement::from_chain(4, Chain::from([(Word::new(vec![1], 0), scalar(1))]));
        let c = s3.sg_class(&report, &class).unwrap();
        let (degree, product) = s3.cup_on_hhsg(&report, (4, &c), (4, &c)).unwrap();
        let square = TateElement::from_chain(8, Chain::from([(Word::new(vec![1, 1, 1], 0), scalar(1))]));
        let expected = s3.sg_class(&report, &square).unwrap();
        assert_eq!(degree, 8);
        assert!(product == expected || product == expected.iter().map(|x| -x).collect::<Vec<_>>());
        assert!(expected.iter().any(|x| !x.is_zero()));
    }

    #[test]
    fn star_table_agrees_with_singular_cup() {
        for name in ["S2", "S3"] {
            let cx = complexes(name);
            let table = cx.star_table(Window::new(1, 8)).unwrap();
            let report = cx.hh_sg(Window::new(0, 8 + cx.k() - 1)).unwrap();
            assert!(cx.gh_table_matches_cup(&table, &report).unwrap().is_empty(), "{name}");
        }
    }

    #[test]
    fn stable_equality_uses_raising() {
        let cx = complexes("S2");
        let f = Cochain::elementary(0, 0, vec![], Word::tail_only(0));
        let raised = StableCochain::new(cx.theta_power(&f, 2));
        assert!(StableCochain::new(f.clone()).stably_equal(&raised, &cx));
        assert!(!StableCochain::new(f.scaled(&scalar(2))).stably_equal(&raised, &cx));
        assert!(cx.big_h(&f).is_zero());
    }

    #[test]
    fn splitting_is_recorded_when_euler_characteristic_vanishes() {
        let cx = complexes("S3");
        let report = cx.hh_sg(Window::new(0, 6)).unwrap();
        assert!(report.euler_zero);
        let split = report.splittings.iter().find(|s| s.degree == cx.k() - 1).unwrap();
        assert_eq!(split.included_dim + split.complement.len(), report.at(cx.k() - 1).unwrap().dim());
        assert!(complexes("S2").hh_sg(Window::new(0, 6)).unwrap().splittings.is_empty());
    }

    #[test]
    fn flipped_cone_sign_breaks_the_chain_map() {
        let cx = complexes("S2");
        let t = TateElement::from_chain(1, Chain::from([(Word::tail_only(0), scalar(1))]));
        let mut flipped = cx.tate_differential(&t);
        flipped.cochain.add(&cx.gamma_chain(&t.chain, 2), &scalar(-2 * CONE_SIGN));
        let lifted = cx.cochain_differential(&cx.iota(&t, 1));
        assert_eq!(cx.iota(&cx.tate_differential(&t), 1), lifted);
        assert_ne!(cx.iota(&flipped, 1), lifted);
    }
}
