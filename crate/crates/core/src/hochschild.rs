//! Normalized Hochschild chains and cochains with coefficients in the noncommutative forms.
//!
//! A chain is a combination of words `a_1|...|a_m (x) a_{m+1}` (bar slots in the augmentation
//! ideal). A cochain is a function from input bar words to combinations of words with a fixed
//! number of bar slots (its level). Differentials are computed on supports only.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::frobenius::FrobeniusAlgebra;
use crate::linalg::{homology_at, Homology, LinalgError, Scalar, SparseMatrix, SparseVec};
use crate::signs::{bars_order, sign, Word};

/// A chain, or an element of the forms module: a finite combination of words.
pub type Chain = BTreeMap<Word, Scalar>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ComplexError {
    #[error("the algebra is not simply connected; pass a bar-length cap to enumerate")]
    NotSimplyConnected,
    #[error("index {index} outside the allowed range {range}")]
    IndexOutOfRange { index: i64, range: String },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub fn add_term<K: Ord>(target: &mut BTreeMap<K, Scalar>, key: K, coeff: Scalar) {
    if coeff.is_zero() {
        return;
    }
    match target.entry(key) {
        std::collections::btree_map::Entry::Vacant(slot) => {
            slot.insert(coeff);
        }
        std::collections::btree_map::Entry::Occupied(mut slot) => {
            *slot.get_mut() += coeff;
            if slot.get().is_zero() {
                slot.remove();
            }
        }
    }
}

pub fn add_scaled<K: Ord + Clone>(target: &mut BTreeMap<K, Scalar>, other: &BTreeMap<K, Scalar>, coeff: &Scalar) {
    if coeff.is_zero() {
        return;
    }
    for (key, value) in other {
        add_term(target, key.clone(), value * coeff);
    }
}

pub fn scale<K: Ord + Clone>(vector: &BTreeMap<K, Scalar>, coeff: &Scalar) -> BTreeMap<K, Scalar> {
    let mut out = BTreeMap::new();
    add_scaled(&mut out, vector, coeff);
    out
}

/// An inclusive range of total degrees.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub min: i64,
    pub max: i64,
}

impl Window {
    pub fn new(min: i64, max: i64) -> Self {
        Window { min, max }
    }

    pub fn degrees(&self) -> std::ops::RangeInclusive<i64> {
        self.min..=self.max
    }

    pub fn contains(&self, degree: i64) -> bool {
        self.min <= degree && degree <= self.max
    }
}

/// Which sign convention the tensor differential of the forms module uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormsConvention {
    /// Koszul signs from the shifted prefix `|a_1| + ... + |a_{i-1}| - (i - 1)`.
    Koszul,
    /// The prefix `|a_1| + ... + |a_{i-2}| + i - 2` read off the bimodule identification
    /// formula. Kept for comparison; it does not square to zero once `d` is nonzero.
    Literal,
}

/// A homogeneous cochain at a fixed level: input bar words to words with `level` bar slots.
/// Inputs of different lengths may coexist.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cochain {
    pub level: usize,
    pub degree: i64,
    pub values: BTreeMap<Vec<u16>, Chain>,
}

impl Cochain {
    pub fn zero(level: usize, degree: i64) -> Self {
        Cochain { level, degree, values: BTreeMap::new() }
    }

    pub fn elementary(level: usize, degree: i64, input: Vec<u16>, output: Word) -> Self {
        let mut values = BTreeMap::new();
        values.insert(input, Chain::from([(output, Scalar::one())]));
        Cochain { level, degree, values }
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, input: &[u16]) -> Option<&Chain> {
        self.values.get(input)
    }

    pub fn add_value(&mut self, input: Vec<u16>, chain: &Chain, coeff: &Scalar) {
        if coeff.is_zero() || chain.is_empty() {
            return;
        }
        let entry = self.values.entry(input.clone()).or_default();
        add_scaled(entry, chain, coeff);
        if entry.is_empty() {
            self.values.remove(&input);
        }
    }

    pub fn add_word(&mut self, input: Vec<u16>, word: Word, coeff: Scalar) {
        if coeff.is_zero() {
            return;
        }
        let entry = self.values.entry(input.clone()).or_default();
        add_term(entry, word, coeff);
        if entry.is_empty() {
            self.values.remove(&input);
        }
    }

    pub fn add(&mut self, other: &Cochain, coeff: &Scalar) {
        for (input, chain) in &other.values {
            self.add_value(input.clone(), chain, coeff);
        }
    }

    pub fn scaled(&self, coeff: &Scalar) -> Cochain {
        let mut out = Cochain::zero(self.level, self.degree);
        out.add(self, coeff);
        out
    }

    pub fn sub(&self, other: &Cochain) -> Cochain {
        let mut out = self.clone();
        out.add(other, &-Scalar::one());
        out
    }

    /// Restriction to inputs of one length.
    pub fn arity_part(&self, arity: usize) -> Cochain {
        Cochain {
            level: self.level,
            degree: self.degree,
            values: self.values.iter().filter(|(k, _)| k.len() == arity).map(|(k, v)| (k.clone(), v.clone())).collect(),
        }
    }

    pub fn arities(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self.values.keys().map(Vec::len).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Flattened coefficients keyed by (input, output word).
    pub fn to_flat(&self) -> BTreeMap<CochainKey, Scalar> {
        let mut out = BTreeMap::new();
        for (input, chain) in &self.values {
            for (word, coeff) in chain {
                out.insert(CochainKey { input: input.clone(), output: word.clone() }, coeff.clone());
            }
        }
        out
    }

    pub fn from_flat(level: usize, degree: i64, flat: &BTreeMap<CochainKey, Scalar>) -> Cochain {
        let mut out = Cochain::zero(level, degree);
        for (key, coeff) in flat {
            out.add_word(key.input.clone(), key.output.clone(), coeff.clone());
        }
        out
    }
}

/// A basis element of a cochain space: the function sending `input` to `output`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CochainKey {
    pub input: Vec<u16>,
    pub output: Word,
}

impl Ord for CochainKey {
    fn cmp(&self, other: &Self) -> Ordering {
        bars_order(&self.input, &other.input).then_with(|| self.output.cmp(&other.output))
    }
}

impl PartialOrd for CochainKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// An element `a_0 (x) a_1|...|a_p (x) a_{p+1}` of the normalized bar resolution.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BarWord {
    pub head: u16,
    pub bars: Vec<u16>,
    pub tail: u16,
}

impl Ord for BarWord {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bars
            .len()
            .cmp(&other.bars.len())
            .then_with(|| self.head.cmp(&other.head))
            .then_with(|| self.bars.cmp(&other.bars))
            .then_with(|| self.tail.cmp(&other.tail))
    }
}

impl PartialOrd for BarWord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Which complex to enumerate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    Chain,
    ReducedChain,
    Cochain { level: usize },
    Tate,
}

/// A basis element of an enumerated degree.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum BasisElement {
    Chain(Word),
    Cochain(CochainKey),
}

/// Homology of one degree of a complex, with the ordered ambient basis.
#[derive(Debug, Clone)]
pub struct DegreeHomology<B> {
    pub degree: i64,
    pub basis: Vec<B>,
    pub homology: Homology,
}

impl<B: Ord + Clone> DegreeHomology<B> {
    pub fn dim(&self) -> usize {
        self.homology.dim()
    }

    pub fn index(&self) -> BTreeMap<B, usize> {
        self.basis.iter().cloned().enumerate().map(|(i, b)| (b, i)).collect()
    }

    pub fn to_coordinates(&self, element: &BTreeMap<B, Scalar>) -> SparseVec {
        let index = self.index();
        element
            .iter()
            .map(|(b, c)| (*index.get(b).expect("element lies in this degree"), c.clone()))
            .collect()
    }

    pub fn from_coordinates(&self, vector: &SparseVec) -> BTreeMap<B, Scalar> {
        vector.iter().map(|(i, c)| (self.basis[*i].clone(), c.clone())).collect()
    }

    /// Class coordinates of a cycle given as a combination of basis elements.
    pub fn class_of(&self, element: &BTreeMap<B, Scalar>) -> Option<Vec<Scalar>> {
        self.homology.reduce(&self.to_coordinates(element))
    }

    pub fn representative(&self, index: usize) -> BTreeMap<B, Scalar> {
        self.from_coordinates(self.homology.representative(index))
    }
}

/// Per-degree homology over a window.
#[derive(Debug, Clone)]
pub struct HomologyReport<B> {
    pub window: Window,
    pub degrees: Vec<DegreeHomology<B>>,
}

impl<B: Ord + Clone> HomologyReport<B> {
    pub fn dims(&self) -> Vec<(i64, usize)> {
        self.degrees.iter().map(|d| (d.degree, d.dim())).collect()
    }

    pub fn at(&self, degree: i64) -> Option<&DegreeHomology<B>> {
        self.degrees.iter().find(|d| d.degree == degree)
    }
}

/// Matrix of a linear map between two enumerated bases.
pub fn matrix_of<B: Ord + Clone>(
    source: &[B],
    target: &[B],
    map: impl Fn(&B) -> BTreeMap<B, Scalar>,
) -> SparseMatrix {
    let index: BTreeMap<&B, usize> = target.iter().enumerate().map(|(i, b)| (b, i)).collect();
    let columns: Vec<SparseVec> = source
        .iter()
        .map(|b| {
            map(b)
                .into_iter()
                .map(|(key, c)| (*index.get(&key).expect("image lies in the target basis"), c))
                .collect()
        })
        .collect();
    SparseMatrix::from_columns(target.len(), &columns)
}

/// Homology at degree `n` of a complex whose differential raises degree by one.
pub fn homology_in_degree<B: Ord + Clone>(
    degree: i64,
    basis_at: &impl Fn(i64) -> Vec<B>,
    differential: &impl Fn(&B) -> BTreeMap<B, Scalar>,
) -> Result<DegreeHomology<B>, LinalgError> {
    let before = basis_at(degree - 1);
    let here = basis_at(degree);
    let after = basis_at(degree + 1);
    let d_in = matrix_of(&before, &here, differential);
    let d_out = matrix_of(&here, &after, differential);
    let homology = homology_at(&d_in, &d_out)?;
    Ok(DegreeHomology { degree, basis: here, homology })
}

/// Shared tables for computing with one algebra.
pub struct Complexes {
    pub alg: FrobeniusAlgebra,
    pub forms: FormsConvention,
    augmentation: Vec<u16>,
    /// For each basis element t: pairs (b, c, coeff) of non-units with coeff = [b c : t].
    pub(crate) product_preimage: Vec<Vec<(u16, u16, Scalar)>>,
    /// For each basis element t: (b, coeff) with coeff = [d b : t], b a non-unit.
    pub(crate) differential_preimage: Vec<Vec<(u16, Scalar)>>,
    sequences: Mutex<HashMap<(i64, usize), Vec<Vec<u16>>>>,
    bar_cap: Option<usize>,
}

impl Complexes {
    pub fn new(alg: FrobeniusAlgebra) -> Self {
        Self::with_convention(alg, FormsConvention::Koszul)
    }

    pub fn with_convention(alg: FrobeniusAlgebra, forms: FormsConvention) -> Self {
        let augmentation: Vec<u16> = alg.augmentation_basis().into_iter().map(|i| i as u16).collect();
        let mut product_preimage = vec![Vec::new(); alg.dim()];
        for b in &augmentation {
            for c in &augmentation {
                for (t, coeff) in alg.product(*b as usize, *c as usize) {
                    product_preimage[*t].push((*b, *c, coeff.clone()));
                }
            }
        }
        let mut differential_preimage = vec![Vec::new(); alg.dim()];
        for b in &augmentation {
            for (t, coeff) in alg.differential(*b as usize) {
                differential_preimage[*t].push((*b, coeff.clone()));
            }
        }
        Complexes {
            alg,
            forms,
            augmentation,
            product_preimage,
            differential_preimage,
            sequences: Mutex::new(HashMap::new()),
            bar_cap: None,
        }
    }

    /// Caps the bar length used by enumeration; results are then truncations.
    pub fn with_bar_cap(mut self, cap: Option<usize>) -> Self {
        self.bar_cap = cap;
        self
    }

    pub fn bar_cap(&self) -> Option<usize> {
        self.bar_cap
    }

    pub fn k(&self) -> i64 {
        self.alg.k()
    }

    pub fn unit(&self) -> u16 {
        self.alg.unit() as u16
    }

    pub fn augmentation(&self) -> &[u16] {
        &self.augmentation
    }

    pub fn deg(&self, index: u16) -> i64 {
        self.alg.degree(index as usize)
    }

    /// Degree of a bar slot: `|a| - 1`.
    pub fn bar_deg(&self, index: u16) -> i64 {
        self.alg.degree(index as usize) - 1
    }

    pub fn bars_degree(&self, bars: &[u16]) -> i64 {
        bars.iter().map(|b| self.bar_deg(*b)).sum()
    }

    pub fn word_degree(&self, word: &Word) -> i64 {
        self.bars_degree(&word.bars) + self.deg(word.tail)
    }

    /// Prefix parities `eps[i] = sum_{j < i} (|a_j| - 1)`, for `i = 0..=len`.
    pub fn prefixes(&self, bars: &[u16]) -> Vec<i64> {
        let mut out = Vec::with_capacity(bars.len() + 1);
        let mut total = 0;
        out.push(0);
        for b in bars {
            total += self.bar_deg(*b);
            out.push(total);
        }
        out
    }

    pub fn product(&self, left: u16, right: u16) -> &SparseVec {
        self.alg.product(left as usize, right as usize)
    }

    pub fn is_unit(&self, index: u16) -> bool {
        index == self.unit()
    }

    pub fn chain_degree(&self, chain: &Chain) -> Option<i64> {
        chain.keys().next().map(|w| self.word_degree(w))
    }

    pub fn format_word(&self, word: &Word) -> String {
        let mut parts: Vec<String> = word.bars.iter().map(|b| format!("[{}]", self.alg.basis_name(*b as usize))).collect();
        parts.push(self.alg.basis_name(word.tail as usize).to_string());
        parts.join("⊗")
    }

    pub fn format_chain(&self, chain: &Chain) -> String {
        if chain.is_empty() {
            return "0".to_string();
        }
        chain
            .iter()
            .map(|(w, c)| format!("{}·{}", crate::linalg::format_scalar(c), self.format_word(w)))
            .collect::<Vec<_>>()
            .join(" + ")
    }

    pub fn format_bars(&self, bars: &[u16]) -> String {
        if bars.is_empty() {
            return "()".to_string();
        }
        bars.iter().map(|b| format!("[{}]", self.alg.basis_name(*b as usize))).collect::<Vec<_>>().join("")
    }

    pub fn format_cochain(&self, cochain: &Cochain) -> String {
        if cochain.is_zero() {
            return "0".to_string();
        }
        cochain
            .values
            .iter()
            .map(|(input, chain)| format!("{} ↦ {}", self.format_bars(input), self.format_chain(chain)))
            .collect::<Vec<_>>()
            .join("; ")
    }

    // ----- enumeration -----

    fn length_bound(&self, shifted: i64) -> Result<usize, ComplexError> {
        if self.alg.is_simply_connected() {
            let bound = shifted.max(0) as usize;
            Ok(self.bar_cap.map_or(bound, |cap| cap.min(bound)))
        } else {
            self.bar_cap.ok_or(ComplexError::NotSimplyConnected)
        }
    }

    /// All sequences of non-unit basis indices with total bar degree `shifted`, of length at
    /// most `max_len`, in canonical order.
    pub fn sequences_up_to(&self, shifted: i64, max_len: usize) -> Vec<Vec<u16>> {
        if shifted < 0 {
            return Vec::new();
        }
        if let Some(hit) = self.sequences.lock().expect("sequence cache").get(&(shifted, max_len)) {
            return hit.clone();
        }
        let mut out = Vec::new();
        if shifted == 0 {
            out.push(Vec::new());
        }
        if max_len > 0 {
            for a in &self.augmentation {
                let rest = shifted - self.bar_deg(*a);
                if rest < 0 {
                    continue;
                }
                for tail in self.sequences_up_to(rest, max_len - 1) {
                    let mut seq = Vec::with_capacity(tail.len() + 1);
                    seq.push(*a);
                    seq.extend(tail);
                    out.push(seq);
                }
            }
        }
        out.sort_by(|a, b| bars_order(a, b));
        out.dedup();
        self.sequences.lock().expect("sequence cache").insert((shifted, max_len), out.clone());
        out
    }

    pub fn sequences(&self, shifted: i64) -> Result<Vec<Vec<u16>>, ComplexError> {
        Ok(self.sequences_up_to(shifted, self.length_bound(shifted)?))
    }

    /// Sequences of exactly `len` slots with total bar degree `shifted`.
    pub fn sequences_of_length(&self, shifted: i64, len: usize) -> Vec<Vec<u16>> {
        self.sequences_up_to(shifted, len).into_iter().filter(|s| s.len() == len).collect()
    }

    /// Highest degree of a word with `level` bar slots.
    pub fn max_word_degree(&self, level: usize) -> i64 {
        let top_bar = self.augmentation.iter().map(|a| self.bar_deg(*a)).max().unwrap_or(0);
        level as i64 * top_bar + self.k()
    }

    /// Words with exactly `level` bar slots and the given degree.
    pub fn words_at_level(&self, level: usize, degree: i64) -> Vec<Word> {
        let mut out = Vec::new();
        for tail in 0..self.alg.dim() as u16 {
            for bars in self.sequences_of_length(degree - self.deg(tail), level) {
                out.push(Word::new(bars, tail));
            }
        }
        out.sort();
        out
    }

    pub fn chain_basis(&self, degree: i64) -> Result<Vec<Word>, ComplexError> {
        let mut out = Vec::new();
        for tail in 0..self.alg.dim() as u16 {
            for bars in self.sequences(degree - self.deg(tail))? {
                out.push(Word::new(bars, tail));
            }
        }
        out.sort();
        Ok(out)
    }

    pub fn reduced_chain_basis(&self, degree: i64) -> Result<Vec<Word>, ComplexError> {
        let unit_word = Word::tail_only(self.unit());
        Ok(self.chain_basis(degree)?.into_iter().filter(|w| *w != unit_word).collect())
    }

    /// Basis of degree-`degree` cochains with values in words of `level` bar slots.
    pub fn cochain_basis(&self, level: usize, degree: i64) -> Result<Vec<CochainKey>, ComplexError> {
        self.cochain_basis_bounded(level, degree, None)
    }

    /// The cochain basis restricted to inputs of at most `max_arity` slots.
    pub fn cochain_basis_bounded(&self, level: usize, degree: i64, max_arity: Option<usize>) -> Result<Vec<CochainKey>, ComplexError> {
        let mut out = Vec::new();
        for output_degree in 0..=self.max_word_degree(level) {
            let shifted = output_degree - degree;
            if shifted < 0 {
                continue;
            }
            let outputs = self.words_at_level(level, output_degree);
            if outputs.is_empty() {
                continue;
            }
            let inputs = match max_arity {
                Some(cap) if self.alg.is_simply_connected() || self.bar_cap().is_some() => {
                    self.sequences_up_to(shifted, cap.min(self.length_bound(shifted)?))
                }
                _ => self.sequences(shifted)?,
            };
            for input in inputs {
                for output in &outputs {
                    out.push(CochainKey { input: input.clone(), output: output.clone() });
                }
            }
        }
        out.sort();
        Ok(out)
    }

    pub fn enumerate_basis(&self, kind: BasisKind, degree: i64) -> Result<Vec<BasisElement>, ComplexError> {
        Ok(match kind {
            BasisKind::Chain => self.chain_basis(degree)?.into_iter().map(BasisElement::Chain).collect(),
            BasisKind::ReducedChain => self.reduced_chain_basis(degree)?.into_iter().map(BasisElement::Chain).collect(),
            BasisKind::Cochain { level } => {
                self.cochain_basis(level, degree)?.into_iter().map(BasisElement::Cochain).collect()
            }
            BasisKind::Tate => {
                let mut out: Vec<BasisElement> =
                    self.cochain_basis(0, degree)?.into_iter().map(BasisElement::Cochain).collect();
                out.extend(self.chain_basis(degree - self.k() + 1)?.into_iter().map(BasisElement::Chain));
                out
            }
        })
    }

    /// Bar resolution words with the given total degree.
    pub fn bar_resolution_basis(&self, degree: i64) -> Result<Vec<BarWord>, ComplexError> {
        let mut out = Vec::new();
        for head in 0..self.alg.dim() as u16 {
            for tail in 0..self.alg.dim() as u16 {
                for bars in self.sequences(degree - self.deg(head) - self.deg(tail))? {
                    out.push(BarWord { head, bars, tail });
                }
            }
        }
        out.sort();
        Ok(out)
    }

    // ----- chain level -----

    /// Product of two basis elements placed in a bar slot; unit components vanish.
    fn bar_product(&self, left: u16, right: u16) -> impl Iterator<Item = (u16, &Scalar)> + '_ {
        let unit = self.unit();
        self.product(left, right).iter().filter(move |(t, _)| **t as u16 != unit).map(|(t, c)| (*t as u16, c))
    }

    fn tail_product(&self, left: u16, right: u16) -> impl Iterator<Item = (u16, &Scalar)> + '_ {
        self.product(left, right).iter().map(|(t, c)| (*t as u16, c))
    }

    /// Tensor differential on a word (the vertical part of the Hochschild boundary).
    pub fn tensor_differential_word(&self, word: &Word, coeff: &Scalar, out: &mut Chain) {
        let eps = self.prefixes(&word.bars);
        let unit = self.unit();
        for (i, slot) in word.bars.iter().enumerate() {
            let slot_sign = match self.forms {
                FormsConvention::Koszul => -sign(eps[i]),
                FormsConvention::Literal => {
                    let literal: i64 = word.bars[..i.saturating_sub(1)].iter().map(|b| self.deg(*b)).sum::<i64>() + i as i64 - 1;
                    -sign(literal)
                }
            };
            for (t, c) in self.alg.differential(*slot as usize) {
                if *t as u16 == unit {
                    continue;
                }
                let mut bars = word.bars.clone();
                bars[i] = *t as u16;
                add_term(out, Word::new(bars, word.tail), coeff * &slot_sign * c);
            }
        }
        let p = word.bars.len();
        let tail_sign = match self.forms {
            FormsConvention::Koszul => sign(eps[p]),
            FormsConvention::Literal => {
                let literal: i64 = word.bars[..p.saturating_sub(1)].iter().map(|b| self.deg(*b)).sum::<i64>() + p as i64 - 1;
                sign(literal)
            }
        };
        for (t, c) in self.alg.differential(word.tail as usize) {
            add_term(out, Word::new(word.bars.clone(), *t as u16), coeff * &tail_sign * c);
        }
    }

    pub fn tensor_differential(&self, chain: &Chain) -> Chain {
        let mut out = Chain::new();
        for (word, coeff) in chain {
            self.tensor_differential_word(word, coeff, &mut out);
        }
        out
    }

    /// Horizontal part of the Hochschild boundary on one word.
    pub fn horizontal_boundary_word(&self, word: &Word, coeff: &Scalar, out: &mut Chain) {
        let m = word.bars.len();
        if m == 0 {
            return;
        }
        let eps = self.prefixes(&word.bars);
        for i in 1..m {
            let s = sign(eps[i]);
            for (t, c) in self.bar_product(word.bars[i - 1], word.bars[i]) {
                let mut bars = Vec::with_capacity(m - 1);
                bars.extend_from_slice(&word.bars[..i - 1]);
                bars.push(t);
                bars.extend_from_slice(&word.bars[i + 1..]);
                add_term(out, Word::new(bars, word.tail), coeff * &s * c);
            }
        }
        let s = -sign(eps[m - 1]);
        for (t, c) in self.tail_product(word.bars[m - 1], word.tail) {
            add_term(out, Word::new(word.bars[..m - 1].to_vec(), t), coeff * &s * c);
        }
        let first = word.bars[0];
        let exponent = (self.bars_degree(&word.bars[1..]) + self.deg(word.tail)) * self.deg(first);
        let s = sign(exponent);
        for (t, c) in self.tail_product(word.tail, first) {
            add_term(out, Word::new(word.bars[1..].to_vec(), t), coeff * &s * c);
        }
    }

    /// The Hochschild boundary, of degree +1.
    pub fn chain_boundary(&self, chain: &Chain) -> Chain {
        let mut out = Chain::new();
        for (word, coeff) in chain {
            self.tensor_differential_word(word, coeff, &mut out);
            self.horizontal_boundary_word(word, coeff, &mut out);
        }
        out
    }

    pub fn chain_boundary_word(&self, word: &Word) -> Chain {
        self.chain_boundary(&Chain::from([(word.clone(), Scalar::one())]))
    }

    /// Removes the degree-zero unit word, projecting onto the reduced complex.
    pub fn reduced_projection(&self, chain: &Chain) -> Chain {
        let unit_word = Word::tail_only(self.unit());
        chain.iter().filter(|(w, _)| **w != unit_word).map(|(w, c)| (w.clone(), c.clone())).collect()
    }

    /// Left action of a basis element on the forms module.
    pub fn action_left(&self, a: u16, word: &Word) -> Chain {
        let mut out = Chain::new();
        self.action_left_into(a, word, &Scalar::one(), &mut out);
        out
    }

    pub fn action_left_into(&self, a: u16, word: &Word, coeff: &Scalar, out: &mut Chain) {
        let p = word.bars.len();
        if p == 0 {
            for (t, c) in self.tail_product(a, word.tail) {
                add_term(out, Word::tail_only(t), coeff * c);
            }
            return;
        }
        let da = self.deg(a);
        let s = sign(da);
        for (t, c) in self.bar_product(a, word.bars[0]) {
            let mut bars = word.bars.clone();
            bars[0] = t;
            add_term(out, Word::new(bars, word.tail), coeff * &s * c);
        }
        if self.is_unit(a) {
            return;
        }
        let eps = self.prefixes(&word.bars);
        for i in 1..p {
            let s = sign(da + eps[i]);
            for (t, c) in self.bar_product(word.bars[i - 1], word.bars[i]) {
                let mut bars = Vec::with_capacity(p);
                bars.push(a);
                bars.extend_from_slice(&word.bars[..i - 1]);
                bars.push(t);
                bars.extend_from_slice(&word.bars[i + 1..]);
                add_term(out, Word::new(bars, word.tail), coeff * &s * c);
            }
        }
        let s = -sign(da + eps[p - 1]);
        for (t, c) in self.tail_product(word.bars[p - 1], word.tail) {
            let mut bars = Vec::with_capacity(p);
            bars.push(a);
            bars.extend_from_slice(&word.bars[..p - 1]);
            add_term(out, Word::new(bars, t), coeff * &s * c);
        }
    }

    pub fn action_left_chain(&self, a: &SparseVec, chain: &Chain) -> Chain {
        let mut out = Chain::new();
        for (index, x) in a {
            for (word, c) in chain {
                self.action_left_into(*index as u16, word, &(x * c), &mut out);
            }
        }
        out
    }

    /// Right action on the forms module: multiplication of the tail.
    pub fn action_right_into(&self, word: &Word, a: u16, coeff: &Scalar, out: &mut Chain) {
        for (t, c) in self.tail_product(word.tail, a) {
            add_term(out, Word::new(word.bars.clone(), t), coeff * c);
        }
    }

    pub fn action_right_chain(&self, chain: &Chain, a: u16) -> Chain {
        let mut out = Chain::new();
        for (word, c) in chain {
            self.action_right_into(word, a, c, &mut out);
        }
        out
    }

    /// `kappa(u, v) = u_bars (x) (u_tail |> v)`, concatenating forms.
    pub fn kappa_concat(&self, u: &Word, v: &Word) -> Chain {
        let mut out = Chain::new();
        for (word, c) in self.action_left(u.tail, v) {
            let mut bars = u.bars.clone();
            bars.extend_from_slice(&word.bars);
            add_term(&mut out, Word::new(bars, word.tail), c);
        }
        out
    }

    pub fn kappa_chains(&self, u: &Chain, v: &Chain) -> Chain {
        let mut out = Chain::new();
        for (wu, cu) in u {
            for (wv, cv) in v {
                add_scaled(&mut out, &self.kappa_concat(wu, wv), &(cu * cv));
            }
        }
        out
    }

    // ----- cochain level -----

    /// The Hochschild differential on cochains with values in the forms module of the
    /// cochain's level. Computed by pushing each nonzero value to every input it affects.
    pub fn cochain_differential(&self, f: &Cochain) -> Cochain {
        let mut out = Cochain::zero(f.level, f.degree + 1);
        let df = f.degree;
        let one = Scalar::one();
        for (input, value) in &f.values {
            let m = input.len();
            let eps = self.prefixes(input);
            // d_M o f
            let dv = self.tensor_differential(value);
            out.add_value(input.clone(), &dv, &one);
            // f(.. d a_i ..)
            for i in 0..m {
                let s = sign(df + eps[i]);
                for (b, c) in &self.differential_preimage[input[i] as usize] {
                    let mut source = input.clone();
                    source[i] = *b;
                    out.add_value(source, value, &(&s * c));
                }
            }
            // a_1 |> f(a_2 ..)
            for a in &self.augmentation {
                let s = -sign(self.bar_deg(*a) * df);
                let mut acted = Chain::new();
                for (word, c) in value {
                    self.action_left_into(*a, word, c, &mut acted);
                }
                let mut source = Vec::with_capacity(m + 1);
                source.push(*a);
                source.extend_from_slice(input);
                out.add_value(source, &acted, &s);
            }
            // f(.. a_i a_{i+1} ..)
            for i in 0..m {
                for (b, c, coeff) in &self.product_preimage[input[i] as usize] {
                    let s = -sign(df + eps[i] + self.bar_deg(*b));
                    let mut source = Vec::with_capacity(m + 1);
                    source.extend_from_slice(&input[..i]);
                    source.push(*b);
                    source.push(*c);
                    source.extend_from_slice(&input[i + 1..]);
                    out.add_value(source, value, &(&s * coeff));
                }
            }
            // f(a_1 .. a_m) a_{m+1}
            let s = sign(df + eps[m]);
            for a in &self.augmentation {
                let acted = self.action_right_chain(value, *a);
                let mut source = input.clone();
                source.push(*a);
                out.add_value(source, &acted, &s);
            }
        }
        out
    }

    pub fn cochain_differential_key(&self, level: usize, key: &CochainKey) -> BTreeMap<CochainKey, Scalar> {
        let degree = self.word_degree(&key.output) - self.bars_degree(&key.input);
        let f = Cochain::elementary(level, degree, key.input.clone(), key.output.clone());
        self.cochain_differential(&f).to_flat()
    }

    // ----- bar resolution -----

    /// The bar differential `b`, lowering the bar length by one. On words without bar slots it
    /// is the multiplication, with values in `A` written as bar words with empty bars and the
    /// unit as head (the convention `Bar_1 = A`).
    pub fn bar_differential(&self, word: &BarWord) -> BTreeMap<BarWord, Scalar> {
        let mut out = BTreeMap::new();
        let p = word.bars.len();
        let d0 = self.deg(word.head);
        if p == 0 {
            for (t, c) in self.tail_product(word.head, word.tail) {
                add_term(&mut out, BarWord { head: u16::MAX, bars: Vec::new(), tail: t }, c.clone());
            }
            return out;
        }
        let eps = self.prefixes(&word.bars);
        let s = sign(d0);
        for (t, c) in self.tail_product(word.head, word.bars[0]) {
            add_term(&mut out, BarWord { head: t, bars: word.bars[1..].to_vec(), tail: word.tail }, &s * c);
        }
        for i in 1..p {
            let s = sign(d0 + eps[i]);
            for (t, c) in self.bar_product(word.bars[i - 1], word.bars[i]) {
                let mut bars = Vec::with_capacity(p - 1);
                bars.extend_from_slice(&word.bars[..i - 1]);
                bars.push(t);
                bars.extend_from_slice(&word.bars[i + 1..]);
                add_term(&mut out, BarWord { head: word.head, bars, tail: word.tail }, &s * c);
            }
        }
        let s = -sign(d0 + eps[p - 1]);
        for (t, c) in self.tail_product(word.bars[p - 1], word.tail) {
            add_term(&mut out, BarWord { head: word.head, bars: word.bars[..p - 1].to_vec(), tail: t }, &s * c);
        }
        out
    }

    /// The contracting homotopy `a_0 (x) ... (x) a_p -> 1 (x) [a_0] (x) ... (x) a_p`. Elements
    /// of `A` (head `u16::MAX`) go to `1 (x) a`.
    pub fn bar_contraction(&self, word: &BarWord) -> BTreeMap<BarWord, Scalar> {
        let mut out = BTreeMap::new();
        if word.head == u16::MAX {
            add_term(&mut out, BarWord { head: self.unit(), bars: Vec::new(), tail: word.tail }, Scalar::one());
            return out;
        }
        if self.is_unit(word.head) {
            return out;
        }
        let mut bars = Vec::with_capacity(word.bars.len() + 1);
        bars.push(word.head);
        bars.extend_from_slice(&word.bars);
        add_term(&mut out, BarWord { head: self.unit(), bars, tail: word.tail }, Scalar::one());
        out
    }

    fn apply_bar<F: Fn(&BarWord) -> BTreeMap<BarWord, Scalar>>(
        &self,
        element: &BTreeMap<BarWord, Scalar>,
        map: F,
    ) -> BTreeMap<BarWord, Scalar> {
        let mut out = BTreeMap::new();
        for (word, c) in element {
            add_scaled(&mut out, &map(word), c);
        }
        out
    }

    /// Checks `chi b + b chi = id` on every bar word of each window degree, and `b chi = id`
    /// on `A`. Returns the failing words.
    pub fn bar_contraction_check(&self, window: Window) -> Result<Vec<BarWord>, ComplexError> {
        let mut failures = Vec::new();
        for degree in window.degrees() {
            for word in self.bar_resolution_basis(degree)? {
                let single = BTreeMap::from([(word.clone(), Scalar::one())]);
                let mut total = self.apply_bar(&self.apply_bar(&single, |w| self.bar_differential(w)), |w| self.bar_contraction(w));
                let other = self.apply_bar(&self.apply_bar(&single, |w| self.bar_contraction(w)), |w| self.bar_differential(w));
                add_scaled(&mut total, &other, &Scalar::one());
                if total != single {
                    failures.push(word);
                }
            }
            if degree >= 0 {
                for a in 0..self.alg.dim() as u16 {
                    if self.deg(a) != degree {
                        continue;
                    }
                    let single = BTreeMap::from([(BarWord { head: u16::MAX, bars: Vec::new(), tail: a }, Scalar::one())]);
                    let back = self.apply_bar(&self.apply_bar(&single, |w| self.bar_contraction(w)), |w| self.bar_differential(w));
                    if back != single {
                        failures.push(BarWord { head: u16::MAX, bars: Vec::new(), tail: a });
                    }
                }
            }
        }
        Ok(failures)
    }

    // ----- homology -----

    pub fn hh_homology(&self, window: Window, reduced: bool) -> Result<HomologyReport<Word>, ComplexError> {
        let basis_at = |n: i64| {
            if reduced {
                self.reduced_chain_basis(n).unwrap_or_default()
            } else {
                self.chain_basis(n).unwrap_or_default()
            }
        };
        if !self.alg.is_simply_connected() && self.bar_cap.is_none() {
            return Err(ComplexError::NotSimplyConnected);
        }
        let differential = |w: &Word| {
            let mut image = self.chain_boundary_word(w);
            if reduced {
                image = self.reduced_projection(&image);
            }
            image
        };
        let mut degrees = Vec::new();
        for n in window.degrees() {
            degrees.push(homology_in_degree(n, &basis_at, &differential)?);
        }
        Ok(HomologyReport { window, degrees })
    }

    /// Hochschild cohomology `HH^*(A, A)` (level 0), or with forms coefficients at `level`.
    pub fn hh_cohomology_at_level(&self, window: Window, level: usize) -> Result<HomologyReport<CochainKey>, ComplexError> {
        if !self.alg.is_simply_connected() && self.bar_cap.is_none() {
            return Err(ComplexError::NotSimplyConnected);
        }
        let basis_at = |n: i64| self.cochain_basis(level, n).unwrap_or_default();
        let differential = |key: &CochainKey| self.cochain_differential_key(level, key);
        let mut degrees = Vec::new();
        for n in window.degrees() {
            degrees.push(homology_in_degree(n, &basis_at, &differential)?);
        }
        Ok(HomologyReport { window, degrees })
    }

    /// A random combination of `terms` basis cochains with small integer coefficients.
    pub fn random_cochain<R: rand::Rng>(&self, rng: &mut R, level: usize, degree: i64, terms: usize) -> Result<Cochain, ComplexError> {
        self.random_cochain_bounded(rng, level, degree, terms, None)
    }

    pub fn random_cochain_bounded<R: rand::Rng>(
        &self,
        rng: &mut R,
        level: usize,
        degree: i64,
        terms: usize,
        max_arity: Option<usize>,
    ) -> Result<Cochain, ComplexError> {
        let basis = self.cochain_basis_bounded(level, degree, max_arity)?;
        let mut out = Cochain::zero(level, degree);
        if basis.is_empty() {
            return Ok(out);
        }
        for _ in 0..terms {
            let key = &basis[rng.gen_range(0..basis.len())];
            let coeff: i64 = rng.gen_range(1..=3) * if rng.gen_bool(0.5) { 1 } else { -1 };
            out.add_word(key.input.clone(), key.output.clone(), Scalar::from_integer(coeff.into()));
        }
        Ok(out)
    }

    /// A random combination of `terms` chain basis words of the given degree.
    pub fn random_chain<R: rand::Rng>(&self, rng: &mut R, degree: i64, terms: usize, reduced: bool) -> Result<Chain, ComplexError> {
        let basis = if reduced { self.reduced_chain_basis(degree)? } else { self.chain_basis(degree)? };
        let mut out = Chain::new();
        if basis.is_empty() {
            return Ok(out);
        }
        for _ in 0..terms {
            let word = &basis[rng.gen_range(0..basis.len())];
            let coeff: i64 = rng.gen_range(1..=3) * if rng.gen_bool(0.5) { 1 } else { -1 };
            add_term(&mut out, word.clone(), Scalar::from_integer(coeff.into()));
        }
        Ok(out)
    }

    pub fn hh_cohomology(&self, window: Window) -> Result<HomologyReport<CochainKey>, ComplexError> {
        self.hh_cohomology_at_level(window, 0)
    }
}
