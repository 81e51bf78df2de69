use std::fmt::Write as _;

use super::{FieldElem, FiniteField, LabelledPartition, LinalgError};
use crate::structure::{encode_tuple, tuple_count, Elem};

/// How the rows or columns of a matrix are indexed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    /// All `m`-tuples over `0..n` in lexicographic order.
    Tuples { n: usize, m: usize },
    /// Abstract labels `0..len`.
    Labels(usize),
}

impl Axis {
    pub fn len(&self) -> usize {
        match *self {
            Axis::Tuples { n, m } => tuple_count(n, m),
            Axis::Labels(len) => len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Dense row-major matrix over a finite field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GFMatrix {
    field: FiniteField,
    rows: Axis,
    cols: Axis,
    data: Vec<FieldElem>,
}

impl GFMatrix {
    pub fn zeros(field: &FiniteField, rows: Axis, cols: Axis) -> Self {
        GFMatrix {
            field: field.clone(),
            rows,
            cols,
            data: vec![FieldElem::ZERO; rows.len() * cols.len()],
        }
    }

    pub fn zeros_sized(field: &FiniteField, rows: usize, cols: usize) -> Self {
        Self::zeros(field, Axis::Labels(rows), Axis::Labels(cols))
    }

    pub fn identity(field: &FiniteField, axis: Axis) -> Self {
        let mut m = Self::zeros(field, axis, axis);
        for i in 0..axis.len() {
            m.set(i, i, FieldElem::ONE);
        }
        m
    }

    pub fn identity_sized(field: &FiniteField, n: usize) -> Self {
        Self::identity(field, Axis::Labels(n))
    }

    pub fn from_data(
        field: &FiniteField,
        rows: Axis,
        cols: Axis,
        data: Vec<FieldElem>,
    ) -> Result<Self, LinalgError> {
        if data.len() != rows.len() * cols.len() {
            return Err(LinalgError::ShapeMismatch(format!(
                "{} entries for a {}x{} matrix",
                data.len(),
                rows.len(),
                cols.len()
            )));
        }
        if let Some(bad) = data.iter().find(|x| x.0 >= field.order()) {
            return Err(LinalgError::BadElement(bad.0, field.order()));
        }
        Ok(GFMatrix {
            field: field.clone(),
            rows,
            cols,
            data,
        })
    }

    /// Builds a matrix from integer rows, reducing each entry into GF(p).
    pub fn from_ints(field: &FiniteField, rows: &[&[i64]]) -> Self {
        let ncols = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == ncols), "ragged rows");
        let data = rows
            .iter()
            .flat_map(|r| r.iter().map(|&x| field.from_int(x)))
            .collect();
        GFMatrix {
            field: field.clone(),
            rows: Axis::Labels(rows.len()),
            cols: Axis::Labels(ncols),
            data,
        }
    }

    pub(crate) fn from_raw(field: &FiniteField, rows: usize, cols: usize, data: Vec<FieldElem>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        GFMatrix {
            field: field.clone(),
            rows: Axis::Labels(rows),
            cols: Axis::Labels(cols),
            data,
        }
    }

    pub fn with_axes(mut self, rows: Axis, cols: Axis) -> Result<Self, LinalgError> {
        if rows.len() != self.nrows() || cols.len() != self.ncols() {
            return Err(LinalgError::ShapeMismatch("axis lengths differ from the shape".into()));
        }
        self.rows = rows;
        self.cols = cols;
        Ok(self)
    }

    pub fn field(&self) -> &FiniteField {
        &self.field
    }

    pub fn row_axis(&self) -> Axis {
        self.rows
    }

    pub fn col_axis(&self) -> Axis {
        self.cols
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.cols.len()
    }

    pub fn is_square(&self) -> bool {
        self.nrows() == self.ncols()
    }

    pub fn data(&self) -> &[FieldElem] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> FieldElem {
        self.data[r * self.ncols() + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: FieldElem) {
        let nc = self.ncols();
        self.data[r * nc + c] = v;
    }

    pub fn row(&self, r: usize) -> &[FieldElem] {
        let nc = self.ncols();
        &self.data[r * nc..(r + 1) * nc]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn is_identity(&self) -> bool {
        self.is_square()
            && (0..self.nrows()).all(|r| {
                (0..self.ncols()).all(|c| self.get(r, c) == if r == c { FieldElem::ONE } else { FieldElem::ZERO })
            })
    }

    /// Whether every entry is 0 or 1.
    pub fn is_zero_one(&self) -> bool {
        self.data.iter().all(|x| x.0 <= 1)
    }

    fn check_field(&self, other: &GFMatrix) -> Result<(), LinalgError> {
        if self.field != other.field {
            return Err(LinalgError::FieldMismatch(self.field.to_string(), other.field.to_string()));
        }
        Ok(())
    }

    pub fn mul(&self, other: &GFMatrix) -> Result<GFMatrix, LinalgError> {
        self.check_field(other)?;
        if self.ncols() != other.nrows() {
            return Err(LinalgError::ShapeMismatch(format!(
                "{}x{} times {}x{}",
                self.nrows(),
                self.ncols(),
                other.nrows(),
                other.ncols()
            )));
        }
        let (n, k, m) = (self.nrows(), self.ncols(), other.ncols());
        let f = &self.field;
        let mut out = vec![FieldElem::ZERO; n * m];
        for i in 0..n {
            let dst = &mut out[i * m..(i + 1) * m];
            for t in 0..k {
                let a = self.data[i * k + t];
                if a.is_zero() {
                    continue;
                }
                let src = &other.data[t * m..(t + 1) * m];
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d = f.add(*d, f.mul(a, s));
                }
            }
        }
        Ok(GFMatrix {
            field: f.clone(),
            rows: self.rows,
            cols: other.cols,
            data: out,
        })
    }

    fn zip_with(&self, other: &GFMatrix, op: impl Fn(FieldElem, FieldElem) -> FieldElem) -> Result<GFMatrix, LinalgError> {
        self.check_field(other)?;
        if self.nrows() != other.nrows() || self.ncols() != other.ncols() {
            return Err(LinalgError::ShapeMismatch("entrywise operation on different shapes".into()));
        }
        Ok(GFMatrix {
            field: self.field.clone(),
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| op(a, b)).collect(),
        })
    }

    pub fn add(&self, other: &GFMatrix) -> Result<GFMatrix, LinalgError> {
        let f = self.field.clone();
        self.zip_with(other, |a, b| f.add(a, b))
    }

    pub fn sub(&self, other: &GFMatrix) -> Result<GFMatrix, LinalgError> {
        let f = self.field.clone();
        self.zip_with(other, |a, b| f.sub(a, b))
    }

    pub fn scale(&self, c: FieldElem) -> GFMatrix {
        let f = &self.field;
        GFMatrix {
            field: f.clone(),
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&a| f.mul(a, c)).collect(),
        }
    }

    pub fn transpose(&self) -> GFMatrix {
        let (n, m) = (self.nrows(), self.ncols());
        let mut data = vec![FieldElem::ZERO; n * m];
        for r in 0..n {
            for c in 0..m {
                data[c * n + r] = self.data[r * m + c];
            }
        }
        GFMatrix {
            field: self.field.clone(),
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    pub fn rank(&self) -> usize {
        let mut a = self.data.clone();
        eliminate(&self.field, &mut a, self.nrows(), self.ncols(), false, None).len()
    }

    /// Reduced row echelon form together with its pivot columns.
    pub fn rref(&self) -> (GFMatrix, Vec<usize>) {
        let mut out = self.clone();
        let pivots = eliminate(&self.field, &mut out.data, self.nrows(), self.ncols(), true, None);
        (out, pivots)
    }

    pub fn det(&self) -> Result<FieldElem, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::NotSquare(self.nrows(), self.ncols()));
        }
        let mut a = self.data.clone();
        let mut det = FieldElem::ONE;
        let pivots = eliminate(&self.field, &mut a, self.nrows(), self.ncols(), false, Some(&mut det));
        Ok(if pivots.len() == self.nrows() { det } else { FieldElem::ZERO })
    }

    pub fn is_invertible(&self) -> bool {
        self.is_square() && self.rank() == self.nrows()
    }

    pub fn inverse(&self) -> Result<GFMatrix, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::NotSquare(self.nrows(), self.ncols()));
        }
        let n = self.nrows();
        let w = 2 * n;
        let mut aug = vec![FieldElem::ZERO; n * w];
        for r in 0..n {
            aug[r * w..r * w + n].copy_from_slice(self.row(r));
            aug[r * w + n + r] = FieldElem::ONE;
        }
        let pivots = eliminate(&self.field, &mut aug, n, w, true, None);
        if pivots.len() < n || pivots[n - 1] >= n {
            return Err(LinalgError::Singular);
        }
        let data = (0..n)
            .flat_map(|r| aug[r * w + n..(r + 1) * w].iter().copied())
            .collect();
        Ok(GFMatrix {
            field: self.field.clone(),
            rows: self.cols,
            cols: self.rows,
            data,
        })
    }

    /// Basis of `{ x : M x = 0 }`.
    pub fn nullspace(&self) -> Vec<Vec<FieldElem>> {
        let mut a = self.data.clone();
        let pivots = eliminate(&self.field, &mut a, self.nrows(), self.ncols(), true, None);
        basis_from_rref(&self.field, &a, self.ncols(), &pivots)
    }

    /// One row per line, entries separated by spaces.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for r in 0..self.nrows() {
            let parts: Vec<String> = self.row(r).iter().map(|&x| self.field.format(x)).collect();
            writeln!(out, "{}", parts.join(" ")).unwrap();
        }
        out
    }

    /// Parses the output of [`GFMatrix::dump`].
    pub fn parse_dump(field: &FiniteField, text: &str) -> Result<GFMatrix, LinalgError> {
        let rows: Vec<Vec<FieldElem>> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|l| l.split_whitespace().map(|t| field.parse(t)).collect())
            .collect::<Result<_, _>>()?;
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(LinalgError::ShapeMismatch("ragged rows".into()));
        }
        let nrows = rows.len();
        Ok(GFMatrix::from_raw(field, nrows, ncols, rows.into_iter().flatten().collect()))
    }

    /// Re-reads the same entries over another field that contains them
    /// (packed coefficients are shared between GF(p) and GF(p^e)).
    pub(crate) fn reinterpret(&self, field: &FiniteField) -> GFMatrix {
        GFMatrix {
            field: field.clone(),
            rows: self.rows,
            cols: self.cols,
            data: self.data.clone(),
        }
    }
}

/// `dst -= c * src`.
#[inline]
pub(crate) fn axpy(f: &FiniteField, dst: &mut [FieldElem], src: &[FieldElem], c: FieldElem) {
    if c.is_zero() {
        return;
    }
    if f.is_prime_field() {
        let p = f.characteristic() as u64;
        let nc = p - c.0 as u64;
        if p == 2 {
            for (d, &s) in dst.iter_mut().zip(src) {
                d.0 ^= s.0;
            }
        } else {
            for (d, &s) in dst.iter_mut().zip(src) {
                d.0 = ((d.0 as u64 + nc * s.0 as u64) % p) as u32;
            }
        }
    } else {
        for (d, &s) in dst.iter_mut().zip(src) {
            *d = f.sub(*d, f.mul(c, s));
        }
    }
}

#[inline]
fn scale_row(f: &FiniteField, row: &mut [FieldElem], c: FieldElem) {
    if c == FieldElem::ONE {
        return;
    }
    for x in row.iter_mut() {
        *x = f.mul(*x, c);
    }
}

/// Gaussian elimination on a row-major buffer; pivot = first nonzero entry in
/// column order. Returns the pivot columns. With `reduce` the result is in
/// reduced row echelon form. `det`, when given, accumulates the determinant
/// factor of the operations performed (valid for full-rank square input).
pub(crate) fn eliminate(
    f: &FiniteField,
    a: &mut [FieldElem],
    rows: usize,
    cols: usize,
    reduce: bool,
    mut det: Option<&mut FieldElem>,
) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(pr) = (r..rows).find(|&i| !a[i * cols + c].is_zero()) else {
            continue;
        };
        if pr != r {
            for j in 0..cols {
                a.swap(pr * cols + j, r * cols + j);
            }
            if let Some(d) = det.as_deref_mut() {
                *d = f.neg(*d);
            }
        }
        let piv = a[r * cols + c];
        if let Some(d) = det.as_deref_mut() {
            *d = f.mul(*d, piv);
        }
        let inv = f.inv(piv).expect("nonzero pivot");
        scale_row(f, &mut a[r * cols..(r + 1) * cols], inv);
        let (head, tail) = a.split_at_mut(r * cols);
        let (prow, below) = tail.split_at_mut(cols);
        for i in 0..rows - r - 1 {
            let row = &mut below[i * cols..(i + 1) * cols];
            let factor = row[c];
            axpy(f, &mut row[c..], &prow[c..], factor);
        }
        if reduce {
            for i in 0..r {
                let row = &mut head[i * cols..(i + 1) * cols];
                let factor = row[c];
                axpy(f, &mut row[c..], &prow[c..], factor);
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

fn basis_from_rref(f: &FiniteField, a: &[FieldElem], cols: usize, pivots: &[usize]) -> Vec<Vec<FieldElem>> {
    let mut is_pivot = vec![None; cols];
    for (i, &c) in pivots.iter().enumerate() {
        is_pivot[c] = Some(i);
    }
    (0..cols)
        .filter(|&c| is_pivot[c].is_none())
        .map(|free| {
            let mut v = vec![FieldElem::ZERO; cols];
            v[free] = FieldElem::ONE;
            for (i, &pc) in pivots.iter().enumerate() {
                v[pc] = f.neg(a[i * cols + free]);
            }
            v
        })
        .collect()
}

/// Nullspace of the matrix whose rows are streamed in, computed incrementally
/// so that dependent rows are never stored. Stops early once the rank is full.
#[cfg(test)]
pub(crate) fn nullspace_rows<I>(f: &FiniteField, rows: I, cols: usize) -> Vec<Vec<FieldElem>>
where
    I: IntoIterator<Item = Vec<FieldElem>>,
{
    let ech = Echelon::from_rows(f, rows, cols);
    ech.nullspace()
}

/// Incrementally maintained row echelon form.
pub(crate) struct Echelon<'f> {
    f: &'f FiniteField,
    cols: usize,
    /// Pivot rows, normalized so the pivot entry is one.
    rows: Vec<Vec<FieldElem>>,
    pivot_cols: Vec<usize>,
}

impl<'f> Echelon<'f> {
    pub(crate) fn new(f: &'f FiniteField, cols: usize) -> Self {
        Echelon {
            f,
            cols,
            rows: Vec::new(),
            pivot_cols: Vec::new(),
        }
    }

    #[cfg(test)]
    pub(crate) fn from_rows<I>(f: &'f FiniteField, rows: I, cols: usize) -> Self
    where
        I: IntoIterator<Item = Vec<FieldElem>>,
    {
        let mut ech = Echelon::new(f, cols);
        for row in rows {
            ech.insert(row);
            if ech.rank() == cols {
                break;
            }
        }
        ech
    }

    pub(crate) fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Adds a row; returns whether it increased the rank.
    pub(crate) fn insert(&mut self, mut row: Vec<FieldElem>) -> bool {
        debug_assert_eq!(row.len(), self.cols);
        for (prow, &pc) in self.rows.iter().zip(&self.pivot_cols) {
            let c = row[pc];
            if !c.is_zero() {
                axpy(self.f, &mut row[pc..], &prow[pc..], c);
            }
        }
        let Some(pc) = row.iter().position(|x| !x.is_zero()) else {
            return false;
        };
        let inv = self.f.inv(row[pc]).expect("nonzero");
        scale_row(self.f, &mut row, inv);
        self.rows.push(row);
        self.pivot_cols.push(pc);
        true
    }

    pub(crate) fn nullspace(mut self) -> Vec<Vec<FieldElem>> {
        // Sort by pivot column, then back-substitute to reduced form.
        let mut order: Vec<usize> = (0..self.rows.len()).collect();
        order.sort_by_key(|&i| self.pivot_cols[i]);
        let mut rows: Vec<Vec<FieldElem>> = order.iter().map(|&i| std::mem::take(&mut self.rows[i])).collect();
        let pivots: Vec<usize> = order.iter().map(|&i| self.pivot_cols[i]).collect();
        for i in (0..rows.len()).rev() {
            let pc = pivots[i];
            let (head, tail) = rows.split_at_mut(i);
            let prow = &tail[0];
            for row in head.iter_mut() {
                let c = row[pc];
                if !c.is_zero() {
                    axpy(self.f, &mut row[pc..], &prow[pc..], c);
                }
            }
        }
        let flat: Vec<FieldElem> = rows.into_iter().flatten().collect();
        basis_from_rref(self.f, &flat, self.cols, &pivots)
    }
}

fn check_tuples(tuples: &[Vec<Elem>], n: usize, len: usize) -> Result<(), LinalgError> {
    for t in tuples {
        if t.len() != len {
            return Err(LinalgError::TupleLength {
                expected: len,
                found: t.len(),
            });
        }
        if t.iter().any(|&x| x as usize >= n) {
            return Err(LinalgError::ShapeMismatch(format!("tuple {t:?} leaves the universe 0..{n}")));
        }
    }
    Ok(())
}

/// The `n^m x n^m` 0/1 matrix of a set of `2m`-tuples: entry `(a, b)` is one
/// iff the concatenation `ab` is in the set.
pub fn char_matrix(set: &[Vec<Elem>], n: usize, m: usize, field: &FiniteField) -> Result<GFMatrix, LinalgError> {
    check_tuples(set, n, 2 * m)?;
    let axis = Axis::Tuples { n, m };
    let mut out = GFMatrix::zeros(field, axis, axis);
    for t in set {
        out.data[encode_tuple(t, n)] = FieldElem::ONE;
    }
    Ok(out)
}

/// `sum_P gamma(P) * chi_P` for a labelled partition.
pub fn partition_matrix(partition: &LabelledPartition, field: &FiniteField) -> Result<GFMatrix, LinalgError> {
    let labels = partition.labels().ok_or(LinalgError::MissingLabel(0))?;
    if labels.len() < partition.block_count() {
        return Err(LinalgError::MissingLabel(labels.len()));
    }
    if let Some(bad) = labels.iter().find(|x| x.0 >= field.order()) {
        return Err(LinalgError::BadElement(bad.0, field.order()));
    }
    let axis = Axis::Tuples {
        n: partition.universe(),
        m: partition.arity(),
    };
    let data = partition.assignment().iter().map(|&b| labels[b as usize]).collect();
    GFMatrix::from_data(field, axis, axis, data)
}

/// `sum_{i=1}^{p-1} i * chi_{phi_i}` over GF(p).
pub fn fmat(phi: &[Vec<Vec<Elem>>], field: &FiniteField, n: usize, m: usize) -> Result<GFMatrix, LinalgError> {
    if !field.is_prime_field() {
        return Err(LinalgError::NeedsPrimeField(field.to_string()));
    }
    let p = field.characteristic() as usize;
    if phi.len() != p - 1 {
        return Err(LinalgError::WrongListLength {
            expected: p - 1,
            found: phi.len(),
        });
    }
    let axis = Axis::Tuples { n, m };
    let mut out = GFMatrix::zeros(field, axis, axis);
    for (i, set) in phi.iter().enumerate() {
        check_tuples(set, n, 2 * m)?;
        let coeff = field.from_int(i as i64 + 1);
        for t in set {
            let idx = encode_tuple(t, n);
            out.data[idx] = field.add(out.data[idx], coeff);
        }
    }
    Ok(out)
}

/// Whether `rank(fmat(phi)) >= threshold`.
pub fn rank_at_least(
    phi: &[Vec<Vec<Elem>>],
    field: &FiniteField,
    n: usize,
    m: usize,
    threshold: usize,
) -> Result<bool, LinalgError> {
    Ok(fmat(phi, field, n, m)?.rank() >= threshold)
}

/// Embeds a GF(p) matrix into GF(p^e).
pub fn extend_scalars(m: &GFMatrix, e: u32) -> Result<GFMatrix, LinalgError> {
    if !m.field.is_prime_field() {
        return Err(LinalgError::NeedsPrimeField(m.field.to_string()));
    }
    let ext = FiniteField::extension(m.field.characteristic(), e)?;
    Ok(m.reinterpret(&ext))
}
