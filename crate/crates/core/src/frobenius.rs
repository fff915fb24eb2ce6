//! Finite dg Frobenius algebras given by structure constants.
//!
//! A description lists a graded basis, products, a differential and a pairing. Validation
//! checks every axiom instance on the basis and reports all violations at once. The Casimir
//! element `sum e_i (x) f_i` is obtained from the inverse Gram matrix.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{axpy, format_scalar, scalar, Scalar, SparseMatrix, SparseVec};
use crate::signs::sign;

/// A coefficient as written in description files: an integer or a `p/q` string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coefficient(pub Scalar);

impl Serialize for Coefficient {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&format_scalar(&self.0))
    }
}

impl<'de> Deserialize<'de> for Coefficient {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct Visitor;
        impl<'de> serde::de::Visitor<'de> for Visitor {
            type Value = Coefficient;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an integer or a rational string \"p/q\"")
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<Coefficient, E> {
                Ok(Coefficient(scalar(v)))
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<Coefficient, E> {
                Ok(Coefficient(Scalar::from_integer(v.into())))
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<Coefficient, E> {
                parse_rational(v).map(Coefficient).map_err(E::custom)
            }
        }
        deserializer.deserialize_any(Visitor)
    }
}

/// Parses `p`, `-p` or `p/q` exactly.
pub fn parse_rational(text: &str) -> Result<Scalar, String> {
    let trimmed = text.trim();
    let (num, den) = match trimmed.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (trimmed, "1"),
    };
    let numerator: num_bigint::BigInt = num.parse().map_err(|_| format!("invalid rational \"{text}\""))?;
    let denominator: num_bigint::BigInt = den.parse().map_err(|_| format!("invalid rational \"{text}\""))?;
    if denominator.is_zero() {
        return Err(format!("zero denominator in \"{text}\""));
    }
    Ok(Scalar::new(numerator, denominator))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisEntry {
    pub name: String,
    pub deg: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub basis: String,
    pub coeff: Coefficient,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductEntry {
    pub left: String,
    pub right: String,
    pub to: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DifferentialEntry {
    pub from: String,
    pub to: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairingEntry {
    pub left: String,
    pub right: String,
    pub value: Coefficient,
}

/// The raw description of an algebra, as read from a file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraDescription {
    pub name: String,
    pub degree_k: i64,
    pub basis: Vec<BasisEntry>,
    pub unit: String,
    #[serde(default)]
    pub product: Vec<ProductEntry>,
    #[serde(default)]
    pub differential: Vec<DifferentialEntry>,
    #[serde(default)]
    pub pairing: Vec<PairingEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Axiom {
    /// Basis elements have degrees in `0..=k`, products and differential are homogeneous.
    Grading,
    Associativity,
    Unit,
    DifferentialSquare,
    Leibniz,
    /// (i) the pairing is nonzero only on complementary degrees.
    PairingDegree,
    /// (ii) the Gram matrix is invertible.
    NonDegenerate,
    /// (iii) `<ab, c> = <a, bc>`.
    Invariance,
    /// (iv) `<a, b> = (-1)^{|a||b|} <b, a>`.
    Symmetry,
    /// (v) `<da, b> = -(-1)^{|a|} <a, db>`.
    DifferentialPairing,
}

impl Axiom {
    pub fn id(&self) -> &'static str {
        match self {
            Axiom::Grading => "grading",
            Axiom::Associativity => "associativity",
            Axiom::Unit => "unit",
            Axiom::DifferentialSquare => "d-squared",
            Axiom::Leibniz => "leibniz",
            Axiom::PairingDegree => "(i) pairing-degree",
            Axiom::NonDegenerate => "(ii) non-degenerate",
            Axiom::Invariance => "(iii) invariance",
            Axiom::Symmetry => "(iv) symmetry",
            Axiom::DifferentialPairing => "(v) differential-pairing",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AxiomViolation {
    pub axiom: Axiom,
    pub witness: String,
}

impl fmt::Display for AxiomViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} violated at {}", self.axiom.id(), self.witness)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrobeniusError {
    #[error("unknown basis element \"{0}\"")]
    UnknownBasis(String),
    #[error("duplicate basis element \"{0}\"")]
    DuplicateBasis(String),
    #[error("degree k must be positive, got {0}")]
    BadDegree(i64),
    #[error("the basis is empty")]
    NotFiniteRank,
    #[error("A^0 is not spanned by the unit: {0}")]
    NotConnected(String),
    #[error("{} axiom violation(s): {}", .0.len(), .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    AxiomViolations(Vec<AxiomViolation>),
}

/// One term `coeff * e (x) f` of the Casimir element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CasimirTerm {
    pub left: usize,
    pub right: usize,
    pub coeff: Scalar,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentityFailure {
    pub identity: String,
    pub witness: String,
}

impl fmt::Display for IdentityFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "identity {} fails at {}", self.identity, self.witness)
    }
}

/// A validated dg Frobenius algebra.
#[derive(Debug, Clone)]
pub struct FrobeniusAlgebra {
    name: String,
    k: i64,
    names: Vec<String>,
    degrees: Vec<i64>,
    unit: usize,
    product: Vec<Vec<SparseVec>>,
    differential: Vec<SparseVec>,
    gram: Vec<Vec<Scalar>>,
    casimir: Vec<CasimirTerm>,
    simply_connected: bool,
}

/// Elements of `A (x) A`, keyed by pairs of basis indices.
pub type TensorSquare = BTreeMap<(usize, usize), Scalar>;

fn add_pair(target: &mut TensorSquare, key: (usize, usize), value: Scalar) {
    if value.is_zero() {
        return;
    }
    let entry = target.entry(key).or_insert_with(Scalar::zero);
    *entry += value;
    if entry.is_zero() {
        target.remove(&key);
    }
}

impl FrobeniusAlgebra {
    /// Checks the description and builds the algebra, or returns every violated axiom.
    pub fn validate(desc: &AlgebraDescription) -> Result<FrobeniusAlgebra, FrobeniusError> {
        if desc.degree_k <= 0 {
            return Err(FrobeniusError::BadDegree(desc.degree_k));
        }
        if desc.basis.is_empty() {
            return Err(FrobeniusError::NotFiniteRank);
        }
        let mut index = BTreeMap::new();
        for (i, entry) in desc.basis.iter().enumerate() {
            if index.insert(entry.name.clone(), i).is_some() {
                return Err(FrobeniusError::DuplicateBasis(entry.name.clone()));
            }
        }
        let lookup = |name: &str| index.get(name).copied().ok_or_else(|| FrobeniusError::UnknownBasis(name.to_string()));
        let dim = desc.basis.len();
        let unit = lookup(&desc.unit)?;
        let degrees: Vec<i64> = desc.basis.iter().map(|b| b.deg).collect();
        let names: Vec<String> = desc.basis.iter().map(|b| b.name.clone()).collect();

        let mut product = vec![vec![SparseVec::new(); dim]; dim];
        for i in 0..dim {
            product[unit][i] = SparseVec::from([(i, Scalar::one())]);
            product[i][unit] = SparseVec::from([(i, Scalar::one())]);
        }
        for entry in &desc.product {
            let (left, right) = (lookup(&entry.left)?, lookup(&entry.right)?);
            let mut value = SparseVec::new();
            for term in &entry.to {
                axpy(&mut value, &term.coeff.0, &SparseVec::from([(lookup(&term.basis)?, Scalar::one())]));
            }
            product[left][right] = value;
        }
        let mut differential = vec![SparseVec::new(); dim];
        for entry in &desc.differential {
            let from = lookup(&entry.from)?;
            let mut value = SparseVec::new();
            for term in &entry.to {
                axpy(&mut value, &term.coeff.0, &SparseVec::from([(lookup(&term.basis)?, Scalar::one())]));
            }
            differential[from] = value;
        }
        let mut gram = vec![vec![Scalar::zero(); dim]; dim];
        for entry in &desc.pairing {
            gram[lookup(&entry.left)?][lookup(&entry.right)?] = entry.value.0.clone();
        }

        let degree_zero: Vec<usize> = (0..dim).filter(|i| degrees[*i] == 0).collect();
        if degrees[unit] != 0 || degree_zero.len() != 1 {
            return Err(FrobeniusError::NotConnected(format!(
                "degree-0 basis elements: [{}]",
                degree_zero.iter().map(|i| names[*i].clone()).collect::<Vec<_>>().join(", ")
            )));
        }
        let simply_connected = degrees.iter().all(|d| *d != 1);

        let mut algebra = FrobeniusAlgebra {
            name: desc.name.clone(),
            k: desc.degree_k,
            names,
            degrees,
            unit,
            product,
            differential,
            gram,
            casimir: Vec::new(),
            simply_connected,
        };
        let violations = algebra.axiom_violations();
        if !violations.is_empty() {
            return Err(FrobeniusError::AxiomViolations(violations));
        }
        algebra.casimir = algebra.compute_casimir();
        Ok(algebra)
    }

    fn axiom_violations(&self) -> Vec<AxiomViolation> {
        let mut out = Vec::new();
        let dim = self.dim();
        let k = self.k;
        let name = |i: usize| self.names[i].clone();
        let mut push = |axiom: Axiom, witness: String| out.push(AxiomViolation { axiom, witness });

        for a in 0..dim {
            if self.degrees[a] < 0 || self.degrees[a] > k {
                push(Axiom::Grading, format!("deg({}) = {} outside 0..={k}", name(a), self.degrees[a]));
            }
        }
        for a in 0..dim {
            for b in 0..dim {
                for t in self.product[a][b].keys() {
                    if self.degrees[*t] != self.degrees[a] + self.degrees[b] {
                        push(Axiom::Grading, format!("product {}*{} has a {} term", name(a), name(b), name(*t)));
                    }
                }
            }
            for t in self.differential[a].keys() {
                if self.degrees[*t] != self.degrees[a] + 1 {
                    push(Axiom::Grading, format!("d({}) has a {} term", name(a), name(*t)));
                }
            }
        }
        for a in 0..dim {
            let expected = SparseVec::from([(a, Scalar::one())]);
            if self.product[self.unit][a] != expected || self.product[a][self.unit] != expected {
                push(Axiom::Unit, format!("({}, {})", name(self.unit), name(a)));
            }
        }
        for a in 0..dim {
            for b in 0..dim {
                for c in 0..dim {
                    let left = self.mul_vec(&self.product[a][b], &SparseVec::from([(c, Scalar::one())]));
                    let right = self.mul_vec(&SparseVec::from([(a, Scalar::one())]), &self.product[b][c]);
                    if left != right {
                        push(Axiom::Associativity, format!("({}, {}, {})", name(a), name(b), name(c)));
                    }
                }
            }
        }
        for a in 0..dim {
            if !self.d_vec(&self.differential[a]).is_empty() {
                push(Axiom::DifferentialSquare, format!("({})", name(a)));
            }
            for b in 0..dim {
                let left = self.d_vec(&self.product[a][b]);
                let mut right = self.mul_vec(&self.differential[a], &SparseVec::from([(b, Scalar::one())]));
                let second = self.mul_vec(&SparseVec::from([(a, Scalar::one())]), &self.differential[b]);
                axpy(&mut right, &sign(self.degrees[a]), &second);
                if left != right {
                    push(Axiom::Leibniz, format!("({}, {})", name(a), name(b)));
                }
            }
        }
        for a in 0..dim {
            for b in 0..dim {
                let value = &self.gram[a][b];
                if !value.is_zero() && self.degrees[a] + self.degrees[b] != k {
                    push(Axiom::PairingDegree, format!("<{}, {}> = {}", name(a), name(b), format_scalar(value)));
                }
                if *value != sign(self.degrees[a] * self.degrees[b]) * &self.gram[b][a] {
                    push(Axiom::Symmetry, format!("({}, {})", name(a), name(b)));
                }
                let da_b = self.pair_vec(&self.differential[a], &SparseVec::from([(b, Scalar::one())]));
                let a_db = self.pair_vec(&SparseVec::from([(a, Scalar::one())]), &self.differential[b]);
                if da_b != -sign(self.degrees[a]) * a_db {
                    push(Axiom::DifferentialPairing, format!("({}, {})", name(a), name(b)));
                }
            }
        }
        if crate::linalg::rank(&SparseMatrix::from_dense(&self.gram)) < dim {
            push(Axiom::NonDegenerate, "Gram matrix is singular".to_string());
        }
        for a in 0..dim {
            for b in 0..dim {
                for c in 0..dim {
                    let left = self.pair_vec(&self.product[a][b], &SparseVec::from([(c, Scalar::one())]));
                    let right = self.pair_vec(&SparseVec::from([(a, Scalar::one())]), &self.product[b][c]);
                    if left != right {
                        push(Axiom::Invariance, format!("({}, {}, {})", name(a), name(b), name(c)));
                    }
                }
            }
        }
        out
    }

    fn compute_casimir(&self) -> Vec<CasimirTerm> {
        // The coefficient matrix C with Delta(1) = sum C[s][t] b_s (x) b_t satisfies
        // C G = diag((-1)^{|b_r| k}) by the reproduction identity.
        let inverse = SparseMatrix::from_dense(&self.gram).inverse().expect("non-degenerate pairing");
        let mut terms = Vec::new();
        for s in 0..self.dim() {
            for t in 0..self.dim() {
                let coeff = sign(self.degrees[s] * self.k) * inverse.get(s, t);
                if !coeff.is_zero() {
                    terms.push(CasimirTerm { left: s, right: t, coeff });
                }
            }
        }
        terms
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn k(&self) -> i64 {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn basis_name(&self, index: usize) -> &str {
        &self.names[index]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn degree(&self, index: usize) -> i64 {
        self.degrees[index]
    }

    pub fn degrees(&self) -> &[i64] {
        &self.degrees
    }

    pub fn unit(&self) -> usize {
        self.unit
    }

    pub fn is_simply_connected(&self) -> bool {
        self.simply_connected
    }

    /// Non-unit basis indices, in basis order.
    pub fn augmentation_basis(&self) -> Vec<usize> {
        (0..self.dim()).filter(|i| *i != self.unit).collect()
    }

    pub fn basis_vector(&self, index: usize) -> SparseVec {
        SparseVec::from([(index, Scalar::one())])
    }

    pub fn product(&self, left: usize, right: usize) -> &SparseVec {
        &self.product[left][right]
    }

    pub fn differential(&self, index: usize) -> &SparseVec {
        &self.differential[index]
    }

    pub fn has_differential(&self) -> bool {
        self.differential.iter().any(|d| !d.is_empty())
    }

    pub fn pairing(&self, left: usize, right: usize) -> &Scalar {
        &self.gram[left][right]
    }

    pub fn casimir(&self) -> &[CasimirTerm] {
        &self.casimir
    }

    pub fn mul_vec(&self, left: &SparseVec, right: &SparseVec) -> SparseVec {
        let mut out = SparseVec::new();
        for (a, x) in left {
            for (b, y) in right {
                axpy(&mut out, &(x * y), &self.product[*a][*b]);
            }
        }
        out
    }

    pub fn d_vec(&self, vector: &SparseVec) -> SparseVec {
        let mut out = SparseVec::new();
        for (a, x) in vector {
            axpy(&mut out, x, &self.differential[*a]);
        }
        out
    }

    pub fn pair_vec(&self, left: &SparseVec, right: &SparseVec) -> Scalar {
        let mut total = Scalar::zero();
        for (a, x) in left {
            for (b, y) in right {
                total += x * y * &self.gram[*a][*b];
            }
        }
        total
    }

    /// `epsilon(a) = <a, 1>`.
    pub fn counit(&self, index: usize) -> Scalar {
        self.gram[index][self.unit].clone()
    }

    /// `chi(A) = sum e_i f_i`, an element of `A^k`.
    pub fn euler_char(&self) -> SparseVec {
        let mut out = SparseVec::new();
        for term in &self.casimir {
            axpy(&mut out, &term.coeff, &self.product[term.left][term.right]);
        }
        out
    }

    /// The basis vectors of top degree.
    pub fn top_basis(&self) -> Vec<usize> {
        (0..self.dim()).filter(|i| self.degrees[*i] == self.k).collect()
    }

    pub fn euler_is_zero(&self) -> bool {
        self.euler_char().is_empty()
    }

    pub fn format_vec(&self, vector: &SparseVec) -> String {
        if vector.is_empty() {
            return "0".to_string();
        }
        vector
            .iter()
            .map(|(i, c)| if c.is_one() { self.names[*i].clone() } else { format!("{}*{}", format_scalar(c), self.names[*i]) })
            .collect::<Vec<_>>()
            .join(" + ")
    }

    pub fn format_casimir(&self) -> String {
        self.casimir
            .iter()
            .map(|t| {
                let body = format!("{}⊗{}", self.names[t.left], self.names[t.right]);
                if t.coeff.is_one() {
                    body
                } else {
                    format!("{}*{}", format_scalar(&t.coeff), body)
                }
            })
            .collect::<Vec<_>>()
            .join(" + ")
    }

    /// Checks the five Casimir identities and the two three-factor identities for every basis
    /// element, with the given Casimir terms (normally `self.casimir()`).
    pub fn verify_casimir_identities_with(&self, casimir: &[CasimirTerm]) -> Vec<IdentityFailure> {
        let k = self.k;
        let deg = |i: usize| self.degrees[i];
        let mut failures = Vec::new();
        let mut fail = |identity: &str, witness: String| failures.push(IdentityFailure { identity: identity.to_string(), witness });
        for a in 0..self.dim() {
            let da = deg(a);
            let av = self.basis_vector(a);
            // (1) both reproduction formulas.
            let mut first = SparseVec::new();
            let mut second = SparseVec::new();
            for t in casimir {
                let pair_fa = &self.gram[t.right][a];
                axpy(&mut first, &(sign(da * k) * pair_fa * &t.coeff), &self.basis_vector(t.left));
                let pair_ea = &self.gram[t.left][a];
                axpy(&mut second, &(sign(k - da) * pair_ea * &t.coeff), &self.basis_vector(t.right));
            }
            if first != av || second != av {
                fail("1", self.names[a].clone());
            }
            // (4) sum a e_i (x) f_i = (-1)^{|a|k} sum e_i (x) f_i a.
            let mut left = TensorSquare::new();
            let mut right = TensorSquare::new();
            for t in casimir {
                for (x, c) in &self.product[a][t.left] {
                    add_pair(&mut left, (*x, t.right), c * &t.coeff);
                }
                for (y, c) in &self.product[t.right][a] {
                    add_pair(&mut right, (t.left, *y), sign(da * k) * c * &t.coeff);
                }
            }
            if left != right {
                fail("4", self.names[a].clone());
            }
            // (5) sum (-1)^{|e_i||a|} e_i a (x) f_i = sum (-1)^{|e_i||a|} e_i (x) a f_i.
            let mut left = TensorSquare::new();
            let mut right = TensorSquare::new();
            for t in casimir {
                let s = sign(deg(t.left) * da);
                for (x, c) in &self.product[t.left][a] {
                    add_pair(&mut left, (*x, t.right), &s * c * &t.coeff);
                }
                for (y, c) in &self.product[a][t.right] {
                    add_pair(&mut right, (t.left, *y), &s * c * &t.coeff);
                }
            }
            if left != right {
                fail("5", self.names[a].clone());
            }
            // Three-factor identities with a formal middle symbol x of degree 0..=3.
            for dx in 0..4 {
                let mut left = TensorSquare::new();
                let mut right = TensorSquare::new();
                for t in casimir {
                    let de = deg(t.left);
                    for (x, c) in &self.product[a][t.left] {
                        add_pair(&mut left, (*x, t.right), sign(dx * de) * c * &t.coeff);
                    }
                    for (y, c) in &self.product[t.right][a] {
                        add_pair(&mut right, (t.left, *y), sign(dx * de + da * (dx + k)) * c * &t.coeff);
                    }
                }
                if left != right {
                    fail("three-factor-1", format!("{} with |x| = {dx}", self.names[a]));
                }
                let mut left = TensorSquare::new();
                let mut right = TensorSquare::new();
                for t in casimir {
                    let de = deg(t.left);
                    for (x, c) in &self.product[t.left][a] {
                        add_pair(&mut left, (*x, t.right), sign(de * (da + dx)) * c * &t.coeff);
                    }
                    for (y, c) in &self.product[a][t.right] {
                        add_pair(&mut right, (t.left, *y), sign(de * (da + dx) + da * dx) * c * &t.coeff);
                    }
                }
                if left != right {
                    fail("three-factor-2", format!("{} with |x| = {dx}", self.names[a]));
                }
            }
        }
        // (2) twisted symmetry.
        let mut left = TensorSquare::new();
        let mut right = TensorSquare::new();
        for t in casimir {
            add_pair(&mut left, (t.left, t.right), t.coeff.clone());
            add_pair(&mut right, (t.right, t.left), sign(deg(t.left) * deg(t.right) + k) * &t.coeff);
        }
        if left != right {
            fail("2", "Casimir element".to_string());
        }
        // (3) differential compatibility.
        let mut left = TensorSquare::new();
        let mut right = TensorSquare::new();
        for t in casimir {
            for (x, c) in &self.differential[t.left] {
                add_pair(&mut left, (*x, t.right), c * &t.coeff);
            }
            for (y, c) in &self.differential[t.right] {
                add_pair(&mut right, (t.left, *y), -sign(deg(t.left)) * c * &t.coeff);
            }
        }
        if left != right {
            fail("3", "Casimir element".to_string());
        }
        failures
    }

    pub fn verify_casimir_identities(&self) -> Vec<IdentityFailure> {
        self.verify_casimir_identities_with(&self.casimir)
    }

    /// `T_a = sum (-1)^{|e_i||a|} e_i a (x) f_i`, so that the Calabi-Yau map sends `a` to
    /// `b -> (b (x) 1) T_a`. With `twisted = false` the sign is dropped.
    pub fn calabi_yau_tensor(&self, a: &SparseVec, twisted: bool) -> TensorSquare {
        let mut out = TensorSquare::new();
        for (index, x) in a {
            for t in &self.casimir {
                let s = if twisted { sign(self.degrees[t.left] * self.degrees[*index]) } else { Scalar::one() };
                for (y, c) in &self.product[t.left][*index] {
                    add_pair(&mut out, (*y, t.right), &s * c * x * &t.coeff);
                }
            }
        }
        out
    }

    fn left_outer(&self, x: usize, tensor: &TensorSquare) -> TensorSquare {
        let mut out = TensorSquare::new();
        for ((u, v), c) in tensor {
            for (y, p) in &self.product[x][*u] {
                add_pair(&mut out, (*y, *v), c * p);
            }
        }
        out
    }

    fn right_outer(&self, tensor: &TensorSquare, y: usize) -> TensorSquare {
        let mut out = TensorSquare::new();
        for ((u, v), c) in tensor {
            for (z, p) in &self.product[*v][y] {
                add_pair(&mut out, (*u, *z), c * p);
            }
        }
        out
    }

    fn left_inner(&self, x: usize, tensor: &TensorSquare) -> TensorSquare {
        let mut out = TensorSquare::new();
        for ((u, v), c) in tensor {
            for (z, p) in &self.product[x][*v] {
                add_pair(&mut out, (*u, *z), sign(self.degrees[x] * self.degrees[*u]) * c * p);
            }
        }
        out
    }

    fn right_inner(&self, tensor: &TensorSquare, y: usize) -> TensorSquare {
        let mut out = TensorSquare::new();
        for ((u, v), c) in tensor {
            for (z, p) in &self.product[*u][y] {
                add_pair(&mut out, (*z, *v), sign(self.degrees[y] * self.degrees[*v]) * c * p);
            }
        }
        out
    }

    fn d_tensor(&self, tensor: &TensorSquare) -> TensorSquare {
        let mut out = TensorSquare::new();
        for ((u, v), c) in tensor {
            for (z, p) in &self.differential[*u] {
                add_pair(&mut out, (*z, *v), c * p);
            }
            for (z, p) in &self.differential[*v] {
                add_pair(&mut out, (*u, *z), sign(self.degrees[*u]) * c * p);
            }
        }
        out
    }

    /// Checks that `a -> (b -> (b (x) 1) T_a)` is an injective map of dg bimodules from the
    /// shifted algebra into bimodule maps `A -> A (x) A`, on every basis pair.
    pub fn calabi_yau_check_variant(&self, twisted: bool) -> Vec<IdentityFailure> {
        let k = self.k;
        let mut failures = Vec::new();
        let mut fail = |identity: &str, witness: String| failures.push(IdentityFailure { identity: identity.to_string(), witness });
        let tensors: Vec<TensorSquare> = (0..self.dim()).map(|a| self.calabi_yau_tensor(&self.basis_vector(a), twisted)).collect();
        for a in 0..self.dim() {
            let da = self.degrees[a];
            for b in 0..self.dim() {
                let image_b = self.left_outer(b, &tensors[a]);
                for y in 0..self.dim() {
                    // Phi(a)(b y) = (-1)^{|y|(|a|+k)} Phi(a)(b) y.
                    let mut left = TensorSquare::new();
                    for (by, c) in &self.product[b][y] {
                        for (key, v) in self.left_outer(*by, &tensors[a]) {
                            add_pair(&mut left, key, c * v);
                        }
                    }
                    let right: TensorSquare = self
                        .right_outer(&image_b, y)
                        .into_iter()
                        .map(|(key, v)| (key, sign(self.degrees[y] * (da + k)) * v))
                        .collect();
                    if left != right {
                        fail("outer-linearity", format!("a={}, b={}, y={}", self.names[a], self.names[b], self.names[y]));
                    }
                }
            }
            for x in 0..self.dim() {
                for y in 0..self.dim() {
                    // T_{x a y} = (-1)^{|y|k} x . T_a . y for the inner bimodule structure.
                    let xay = self.mul_vec(&self.product[x][a], &self.basis_vector(y));
                    let left = self.calabi_yau_tensor(&xay, twisted);
                    let right: TensorSquare = self
                        .left_inner(x, &self.right_inner(&tensors[a], y))
                        .into_iter()
                        .map(|(key, v)| (key, sign(self.degrees[y] * k) * v))
                        .collect();
                    if left != right {
                        fail("bimodule", format!("x={}, a={}, y={}", self.names[x], self.names[a], self.names[y]));
                    }
                }
            }
            let left = self.d_tensor(&tensors[a]);
            let right = self.calabi_yau_tensor(&self.differential[a].clone(), twisted);
            if left != right {
                fail("differential", format!("a={}", self.names[a]));
            }
        }
        let pairs: Vec<(usize, usize)> = (0..self.dim()).flat_map(|u| (0..self.dim()).map(move |v| (u, v))).collect();
        let columns: Vec<SparseVec> = tensors
            .iter()
            .map(|t| {
                t.iter()
                    .map(|(key, v)| (pairs.iter().position(|p| p == key).expect("pair index"), v.clone()))
                    .collect()
            })
            .collect();
        if crate::linalg::rank(&SparseMatrix::from_columns(pairs.len(), &columns)) < self.dim() {
            fail("injective", "a -> T_a has a kernel".to_string());
        }
        failures
    }

    pub fn calabi_yau_check(&self) -> Vec<IdentityFailure> {
        self.calabi_yau_check_variant(true)
    }
}
