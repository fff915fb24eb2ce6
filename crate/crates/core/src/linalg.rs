//! Exact sparse linear algebra over the rationals.
//!
//! Elimination is fraction-free: every row is kept as a primitive integer vector, a pivot is
//! the candidate entry of smallest bit-length (ties broken by lowest row, then column), and
//! eliminated rows are divided by their content. Rationals appear only when a reduced
//! echelon form is normalised.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// The ground field.
pub type Scalar = BigRational;

/// A sparse vector indexed by coordinate.
pub type SparseVec = BTreeMap<usize, Scalar>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("composition of the two differentials is not zero (first nonzero at row {row}, column {col})")]
    CompositionNotZero { row: usize, col: usize },
    #[error("matrix is not invertible")]
    Singular,
}

pub fn scalar(n: i64) -> Scalar {
    Scalar::from_integer(BigInt::from(n))
}

pub fn ratio(num: i64, den: i64) -> Scalar {
    Scalar::new(BigInt::from(num), BigInt::from(den))
}

/// Renders a rational as `p/q`, or `p` when the denominator is one.
pub fn format_scalar(value: &Scalar) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// Adds `coeff * other` into `target`, dropping zeros.
pub fn axpy(target: &mut SparseVec, coeff: &Scalar, other: &SparseVec) {
    if coeff.is_zero() {
        return;
    }
    for (index, value) in other {
        let entry = target.entry(*index).or_insert_with(Scalar::zero);
        *entry += coeff * value;
        if entry.is_zero() {
            target.remove(index);
        }
    }
}

/// A sparse matrix stored by rows. It represents a map from a space of dimension `cols`
/// to one of dimension `rows`, acting on column vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<SparseVec>,
}

impl SparseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SparseMatrix { rows, cols, data: vec![SparseVec::new(); rows] }
    }

    pub fn identity(size: usize) -> Self {
        let mut matrix = Self::zeros(size, size);
        for index in 0..size {
            matrix.set(index, index, Scalar::one());
        }
        matrix
    }

    pub fn from_dense(rows: &[Vec<Scalar>]) -> Self {
        let width = rows.first().map_or(0, Vec::len);
        let mut matrix = Self::zeros(rows.len(), width);
        for (row, values) in rows.iter().enumerate() {
            for (col, value) in values.iter().enumerate() {
                matrix.set(row, col, value.clone());
            }
        }
        matrix
    }

    /// Builds a matrix whose columns are the given sparse vectors.
    pub fn from_columns(rows: usize, columns: &[SparseVec]) -> Self {
        let mut matrix = Self::zeros(rows, columns.len());
        for (col, column) in columns.iter().enumerate() {
            for (row, value) in column {
                matrix.set(*row, col, value.clone());
            }
        }
        matrix
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> Scalar {
        self.data[row].get(&col).cloned().unwrap_or_else(Scalar::zero)
    }

    pub fn set(&mut self, row: usize, col: usize, value: Scalar) {
        assert!(row < self.rows && col < self.cols, "entry ({row}, {col}) out of range");
        if value.is_zero() {
            self.data[row].remove(&col);
        } else {
            self.data[row].insert(col, value);
        }
    }

    pub fn add_to(&mut self, row: usize, col: usize, value: &Scalar) {
        let current = self.get(row, col);
        self.set(row, col, current + value);
    }

    pub fn row(&self, row: usize) -> &SparseVec {
        &self.data[row]
    }

    pub fn nnz(&self) -> usize {
        self.data.iter().map(BTreeMap::len).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(BTreeMap::is_empty)
    }

    pub fn column(&self, col: usize) -> SparseVec {
        let mut out = SparseVec::new();
        for (row, values) in self.data.iter().enumerate() {
            if let Some(value) = values.get(&col) {
                out.insert(row, value.clone());
            }
        }
        out
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut out = Self::zeros(self.cols, self.rows);
        for (row, values) in self.data.iter().enumerate() {
            for (col, value) in values {
                out.data[*col].insert(row, value.clone());
            }
        }
        out
    }

    pub fn apply(&self, vector: &SparseVec) -> SparseVec {
        let mut out = SparseVec::new();
        for (row, values) in self.data.iter().enumerate() {
            let mut acc = Scalar::zero();
            for (col, value) in values {
                if let Some(x) = vector.get(col) {
                    acc += value * x;
                }
            }
            if !acc.is_zero() {
                out.insert(row, acc);
            }
        }
        out
    }

    pub fn mul(&self, other: &SparseMatrix) -> Result<SparseMatrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for (row, values) in self.data.iter().enumerate() {
            let mut acc = SparseVec::new();
            for (mid, value) in values {
                axpy(&mut acc, value, &other.data[*mid]);
            }
            out.data[row] = acc;
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> Vec<Vec<Scalar>> {
        (0..self.rows)
            .map(|row| (0..self.cols).map(|col| self.get(row, col)).collect())
            .collect()
    }

    /// Inverse of a square matrix.
    pub fn inverse(&self) -> Result<SparseMatrix, LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::DimensionMismatch(format!(
                "inverse of a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let size = self.rows;
        let augmented: Vec<SparseVec> = (0..size)
            .map(|row| {
                let mut values = self.data[row].clone();
                values.insert(size + row, Scalar::one());
                values
            })
            .collect();
        let rref = Echelon::from_rows(size * 2, &augmented).into_rref();
        if rref.pivots().len() < size || rref.pivots().iter().take(size).enumerate().any(|(i, p)| *p != i) {
            return Err(LinalgError::Singular);
        }
        let mut out = Self::zeros(size, size);
        for (row, values) in rref.basis().iter().enumerate() {
            for (col, value) in values.range(size..) {
                out.set(row, col - size, value.clone());
            }
        }
        Ok(out)
    }
}

impl fmt::Display for SparseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in 0..self.rows {
            let cells: Vec<String> = (0..self.cols).map(|col| format_scalar(&self.get(row, col))).collect();
            writeln!(f, "[{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

type IntRow = BTreeMap<usize, BigInt>;

fn primitive_from_rational(row: &SparseVec) -> IntRow {
    let mut lcm = BigInt::one();
    for value in row.values() {
        lcm = lcm.lcm(value.denom());
    }
    let mut out: IntRow = row
        .iter()
        .map(|(col, value)| (*col, (value * Scalar::from_integer(lcm.clone())).to_integer()))
        .collect();
    make_primitive(&mut out);
    out
}

fn make_primitive(row: &mut IntRow) {
    let mut content = BigInt::zero();
    for value in row.values() {
        content = content.gcd(value);
        if content.is_one() {
            return;
        }
    }
    if content.is_zero() || content.is_one() {
        return;
    }
    for value in row.values_mut() {
        *value /= &content;
    }
}

/// `row <- pivot_value * row - row[col] * pivot_row`, then divided by its content.
fn eliminate(row: &mut IntRow, col: usize, pivot_row: &IntRow) {
    let factor = match row.get(&col) {
        Some(value) => value.clone(),
        None => return,
    };
    let pivot_value = &pivot_row[&col];
    let divisor = pivot_value.gcd(&factor);
    let scale_row = pivot_value / &divisor;
    let scale_pivot = &factor / &divisor;
    if !scale_row.is_one() {
        for value in row.values_mut() {
            *value *= &scale_row;
        }
    }
    for (index, value) in pivot_row {
        let entry = row.entry(*index).or_insert_with(BigInt::zero);
        *entry -= value * &scale_pivot;
        if entry.is_zero() {
            row.remove(index);
        }
    }
    make_primitive(row);
}

/// An echelon basis of a row space: rows with strictly increasing leading columns.
#[derive(Debug, Clone)]
struct Echelon {
    dim: usize,
    rows: Vec<(usize, IntRow)>,
}

impl Echelon {
    /// Column-by-column fraction-free elimination with bit-length pivoting.
    fn from_rows(dim: usize, input: &[SparseVec]) -> Echelon {
        let mut pending: Vec<IntRow> = input
            .iter()
            .filter(|row| !row.is_empty())
            .map(primitive_from_rational)
            .collect();
        let mut rows = Vec::new();
        while !pending.is_empty() {
            let lead = pending.iter().filter_map(|row| row.keys().next().copied()).min();
            let Some(col) = lead else { break };
            let mut best: Option<(u64, usize)> = None;
            for (index, row) in pending.iter().enumerate() {
                if let Some(value) = row.get(&col) {
                    let bits = value.bits();
                    if best.is_none_or(|(b, _)| bits < b) {
                        best = Some((bits, index));
                    }
                }
            }
            let (_, chosen) = best.expect("a row leads at the minimal column");
            let mut pivot_row = pending.remove(chosen);
            if pivot_row[&col].is_negative() {
                for value in pivot_row.values_mut() {
                    *value = -value.clone();
                }
            }
            for row in pending.iter_mut() {
                eliminate(row, col, &pivot_row);
            }
            pending.retain(|row| !row.is_empty());
            rows.push((col, pivot_row));
        }
        Echelon { dim, rows }
    }

    fn into_rref(mut self) -> Subspace {
        for index in (0..self.rows.len()).rev() {
            let (col, pivot_row) = self.rows[index].clone();
            for other in self.rows.iter_mut().take(index) {
                eliminate(&mut other.1, col, &pivot_row);
            }
        }
        let basis = self
            .rows
            .iter()
            .map(|(col, row)| {
                let pivot = Scalar::from_integer(row[col].clone());
                row.iter().map(|(c, v)| (*c, Scalar::from_integer(v.clone()) / &pivot)).collect()
            })
            .collect();
        Subspace { dim: self.dim, pivots: self.rows.iter().map(|(c, _)| *c).collect(), basis }
    }
}

/// A subspace of `Q^dim` held in reduced row echelon form with increasing pivot columns.
/// Two subspaces are equal exactly when their canonical forms coincide.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subspace {
    dim: usize,
    pivots: Vec<usize>,
    basis: Vec<SparseVec>,
}

impl Subspace {
    pub fn zero(dim: usize) -> Subspace {
        Subspace { dim, pivots: Vec::new(), basis: Vec::new() }
    }

    pub fn full(dim: usize) -> Subspace {
        Self::span(dim, &(0..dim).map(|i| SparseVec::from([(i, Scalar::one())])).collect::<Vec<_>>())
    }

    pub fn span(dim: usize, vectors: &[SparseVec]) -> Subspace {
        Echelon::from_rows(dim, vectors).into_rref()
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn basis(&self) -> &[SparseVec] {
        &self.basis
    }

    /// Subtracts multiples of the basis so the result vanishes at every pivot column.
    pub fn reduce(&self, vector: &SparseVec) -> SparseVec {
        let mut out = vector.clone();
        for (pivot, row) in self.pivots.iter().zip(&self.basis) {
            if let Some(value) = out.get(pivot).cloned() {
                axpy(&mut out, &-value, row);
            }
        }
        out
    }

    pub fn contains(&self, vector: &SparseVec) -> bool {
        self.reduce(vector).is_empty()
    }

    pub fn contains_subspace(&self, other: &Subspace) -> bool {
        other.basis.iter().all(|v| self.contains(v))
    }

    pub fn sum(&self, other: &Subspace) -> Subspace {
        let mut all = self.basis.clone();
        all.extend(other.basis.iter().cloned());
        Self::span(self.dim, &all)
    }

    pub fn intersection(&self, other: &Subspace) -> Subspace {
        // Kernel of [U | -W] gives the common vectors as U-combinations.
        let left = self.dim();
        let columns: Vec<SparseVec> = self
            .basis
            .iter()
            .cloned()
            .chain(other.basis.iter().map(|v| v.iter().map(|(i, x)| (*i, -x.clone())).collect()))
            .collect();
        let matrix = SparseMatrix::from_columns(self.dim, &columns);
        let (_, kernel) = rank_kernel(&matrix);
        let mut common = Vec::new();
        for combo in kernel {
            let mut vector = SparseVec::new();
            for (index, coeff) in combo.range(..left) {
                axpy(&mut vector, coeff, &self.basis[*index]);
            }
            common.push(vector);
        }
        Self::span(self.dim, &common)
    }

    /// Coordinates of a vector of this subspace in the canonical basis.
    pub fn coordinates(&self, vector: &SparseVec) -> Option<Vec<Scalar>> {
        let coords: Vec<Scalar> =
            self.pivots.iter().map(|p| vector.get(p).cloned().unwrap_or_else(Scalar::zero)).collect();
        let mut rebuilt = SparseVec::new();
        for (coeff, row) in coords.iter().zip(&self.basis) {
            axpy(&mut rebuilt, coeff, row);
        }
        (rebuilt == *vector).then_some(coords)
    }
}

/// Rank and a kernel basis of `matrix`. Kernel vectors are indexed by column and come from the
/// free columns of the reduced row echelon form, in increasing order.
pub fn rank_kernel(matrix: &SparseMatrix) -> (usize, Vec<SparseVec>) {
    let rref = Echelon::from_rows(matrix.cols, &matrix.data).into_rref();
    let rank = rref.dim();
    let pivot_set: std::collections::BTreeSet<usize> = rref.pivots.iter().copied().collect();
    let mut kernel = Vec::new();
    for free in (0..matrix.cols).filter(|c| !pivot_set.contains(c)) {
        let mut vector = SparseVec::from([(free, Scalar::one())]);
        for (pivot, row) in rref.pivots.iter().zip(&rref.basis) {
            if let Some(value) = row.get(&free) {
                vector.insert(*pivot, -value.clone());
            }
        }
        kernel.push(vector);
    }
    (rank, kernel)
}

pub fn rank(matrix: &SparseMatrix) -> usize {
    Echelon::from_rows(matrix.cols, &matrix.data).into_rref().dim()
}

/// Column space of a matrix, as a subspace of the target.
pub fn image(matrix: &SparseMatrix) -> Subspace {
    Subspace::span(matrix.rows, &matrix.transpose().data)
}

pub fn kernel(matrix: &SparseMatrix) -> Subspace {
    Subspace::span(matrix.cols, &rank_kernel(matrix).1)
}

/// Homology of `C_prev --d_in--> C --d_out--> C_next` at the middle term.
#[derive(Debug, Clone)]
pub struct Homology {
    pub cycles: Subspace,
    pub boundaries: Subspace,
    /// Canonical representatives: cycles reduced modulo boundaries, in reduced echelon form.
    pub representatives: Subspace,
}

impl Homology {
    pub fn dim(&self) -> usize {
        self.representatives.dim()
    }

    /// Coordinates of the class of a cycle in the representative basis.
    pub fn reduce(&self, cycle: &SparseVec) -> Option<Vec<Scalar>> {
        if !self.cycles.contains(cycle) {
            return None;
        }
        let reduced = self.boundaries.reduce(cycle);
        self.representatives.coordinates(&reduced)
    }

    pub fn representative(&self, index: usize) -> &SparseVec {
        &self.representatives.basis()[index]
    }
}

pub fn homology_at(d_in: &SparseMatrix, d_out: &SparseMatrix) -> Result<Homology, LinalgError> {
    if d_in.rows != d_out.cols {
        return Err(LinalgError::DimensionMismatch(format!(
            "incoming map lands in dimension {} but outgoing map starts in dimension {}",
            d_in.rows, d_out.cols
        )));
    }
    let composite = d_out.mul(d_in)?;
    for (row, values) in composite.data.iter().enumerate() {
        if let Some((col, _)) = values.iter().next() {
            return Err(LinalgError::CompositionNotZero { row, col: *col });
        }
    }
    let cycles = kernel(d_out);
    let boundaries = image(d_in);
    let reduced: Vec<SparseVec> = cycles.basis().iter().map(|z| boundaries.reduce(z)).collect();
    let representatives = Subspace::span(d_out.cols, &reduced);
    Ok(Homology { cycles, boundaries, representatives })
}
