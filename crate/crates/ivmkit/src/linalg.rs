//! Dense exact linear algebra over any [`Field`]: row reduction, kernels, intersections.
//!
//! Vectors are rows; a matrix `m` with `m.len()` rows acts on column vectors
//! unless a function says otherwise.

use crate::field::Field;

pub type Mat<E> = Vec<Vec<E>>;

pub fn zeros<F: Field>(f: &F, rows: usize, cols: usize) -> Mat<F::E> {
    vec![vec![f.zero(); cols]; rows]
}

pub fn identity<F: Field>(f: &F, n: usize) -> Mat<F::E> {
    let mut m = zeros(f, n, n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = f.one();
    }
    m
}

pub fn transpose<E: Clone>(m: &[Vec<E>], cols: usize) -> Mat<E> {
    (0..cols).map(|j| m.iter().map(|r| r[j].clone()).collect()).collect()
}

pub fn mat_mul<F: Field>(f: &F, a: &[Vec<F::E>], b: &[Vec<F::E>], b_cols: usize) -> Mat<F::E> {
    a.iter()
        .map(|row| {
            let mut out = vec![f.zero(); b_cols];
            for (k, x) in row.iter().enumerate() {
                if f.is_zero(x) {
                    continue;
                }
                for (j, y) in b[k].iter().enumerate() {
                    if !f.is_zero(y) {
                        out[j] = f.add(&out[j], &f.mul(x, y));
                    }
                }
            }
            out
        })
        .collect()
}

pub fn is_zero_vec<F: Field>(f: &F, v: &[F::E]) -> bool {
    v.iter().all(|x| f.is_zero(x))
}

/// `dst += c * src`
pub fn axpy<F: Field>(f: &F, dst: &mut [F::E], c: &F::E, src: &[F::E]) {
    if f.is_zero(c) {
        return;
    }
    for (d, s) in dst.iter_mut().zip(src) {
        if !f.is_zero(s) {
            *d = f.add(d, &f.mul(c, s));
        }
    }
}

fn scale<F: Field>(f: &F, v: &mut [F::E], c: &F::E) {
    for x in v.iter_mut() {
        if !f.is_zero(x) {
            *x = f.mul(x, c);
        }
    }
}

/// Reduced row echelon form; returns the nonzero rows and their pivot columns.
/// Pivot rows are chosen by the field's pivot cost, ties by input order.
pub fn rref<F: Field>(f: &F, mut rows: Mat<F::E>) -> (Mat<F::E>, Vec<usize>) {
    let cols = rows.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let mut best: Option<(usize, usize)> = None;
        for (i, row) in rows.iter().enumerate().skip(r) {
            if !f.is_zero(&row[c]) {
                let cost = f.pivot_cost(&row[c]);
                if best.is_none_or(|(_, bc)| cost < bc) {
                    best = Some((i, cost));
                }
            }
        }
        let Some((p, _)) = best else { continue };
        rows.swap(r, p);
        let inv = f.inv(&rows[r][c]).expect("nonzero pivot");
        scale(f, &mut rows[r], &inv);
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && !f.is_zero(&row[c]) {
                let c0 = f.neg(&row[c]);
                axpy(f, row, &c0, &pivot_row);
            }
        }
        pivots.push(c);
        r += 1;
    }
    rows.truncate(r);
    (rows, pivots)
}

pub fn rank<F: Field>(f: &F, rows: Mat<F::E>) -> usize {
    rref(f, rows).1.len()
}

/// Basis of `{x : m x = 0}` for a matrix with `cols` columns.
pub fn kernel<F: Field>(f: &F, m: Mat<F::E>, cols: usize) -> Mat<F::E> {
    let (red, pivots) = rref(f, m);
    let mut is_pivot = vec![None; cols];
    for (i, &p) in pivots.iter().enumerate() {
        is_pivot[p] = Some(i);
    }
    let mut basis = Vec::new();
    for free in 0..cols {
        if is_pivot[free].is_some() {
            continue;
        }
        let mut v = vec![f.zero(); cols];
        v[free] = f.one();
        for (i, &p) in pivots.iter().enumerate() {
            v[p] = f.neg(&red[i][free]);
        }
        basis.push(v);
    }
    basis
}

/// Basis of `{y : yᵀ m = 0}`, i.e. linear relations among the rows of `m`.
pub fn left_kernel<F: Field>(f: &F, m: &[Vec<F::E>], cols: usize) -> Mat<F::E> {
    let rows = m.len();
    kernel(f, transpose(m, cols), rows)
}

/// Canonical basis (RREF) of the intersection of two row spaces in `F^dim`.
pub fn intersect<F: Field>(f: &F, a: &[Vec<F::E>], b: &[Vec<F::E>], dim: usize) -> Mat<F::E> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let stacked: Mat<F::E> = a.iter().chain(b.iter()).cloned().collect();
    let rel = left_kernel(f, &stacked, dim);
    let out: Mat<F::E> = rel
        .iter()
        .map(|y| {
            let mut v = vec![f.zero(); dim];
            for (i, row) in a.iter().enumerate() {
                axpy(f, &mut v, &y[i], row);
            }
            v
        })
        .collect();
    rref(f, out).0
}

/// Incrementally maintained fully reduced echelon basis.
#[derive(Clone, Debug)]
pub struct Echelon<E> {
    pub dim: usize,
    rows: Vec<Vec<E>>,
    pivots: Vec<usize>,
}

impl<E: Clone + PartialEq + std::fmt::Debug + Send + Sync> Echelon<E> {
    pub fn new(dim: usize) -> Self {
        Echelon { dim, rows: Vec::new(), pivots: Vec::new() }
    }

    pub fn from_rows<F: Field<E = E>>(f: &F, dim: usize, rows: &[Vec<E>]) -> Self {
        let mut e = Echelon::new(dim);
        for r in rows {
            e.insert(f, r.clone());
        }
        e
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Residual of `v` modulo the span; zero iff `v` is in the span.
    pub fn reduce<F: Field<E = E>>(&self, f: &F, mut v: Vec<E>) -> Vec<E> {
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            if !f.is_zero(&v[p]) {
                let c = f.neg(&v[p]);
                axpy(f, &mut v, &c, row);
            }
        }
        v
    }

    pub fn contains<F: Field<E = E>>(&self, f: &F, v: &[E]) -> bool {
        is_zero_vec(f, &self.reduce(f, v.to_vec()))
    }

    /// Adds `v`; returns false when it was already in the span.
    pub fn insert<F: Field<E = E>>(&mut self, f: &F, v: Vec<E>) -> bool {
        let mut v = self.reduce(f, v);
        let Some(p) = v.iter().position(|x| !f.is_zero(x)) else {
            return false;
        };
        let inv = f.inv(&v[p]).expect("nonzero");
        scale(f, &mut v, &inv);
        for row in self.rows.iter_mut() {
            if !f.is_zero(&row[p]) {
                let c = f.neg(&row[p]);
                axpy(f, row, &c, &v);
            }
        }
        let at = self.pivots.partition_point(|&q| q < p);
        self.pivots.insert(at, p);
        self.rows.insert(at, v);
        true
    }

    pub fn rows(&self) -> &[Vec<E>] {
        &self.rows
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn into_rows(self) -> Vec<Vec<E>> {
        self.rows
    }
}
