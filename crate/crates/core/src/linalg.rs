//! Small linear-algebra layer: dense complex eigen-decomposition with a
//! biorthonormal left basis, a row-compressed sparse complex matrix, and
//! Hermitian propagators assembled block by block.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result, C64};

/// Right eigenvectors `v_i` (columns of `right`), left eigenvectors `w_i`
/// (columns of `left`) with `A v_i = λ_i v_i`, `A† w_i = λ_i* w_i` and
/// `w_i† v_j = δ_ij`.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub values: Vec<C64>,
    pub right: DMatrix<C64>,
    pub left: DMatrix<C64>,
}

impl EigenSystem {
    /// `max |⟨w_i, v_j⟩ − δ_ij|`.
    pub fn pairing_residual(&self) -> f64 {
        let g = self.left.adjoint() * &self.right;
        let mut worst = 0.0f64;
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let d = if i == j {
                    g[(i, j)] - C64::new(1.0, 0.0)
                } else {
                    g[(i, j)]
                };
                worst = worst.max(d.norm());
            }
        }
        worst
    }

    /// Largest of `‖A v_i − λ_i v_i‖` and `‖A† w_i − λ_i* w_i‖ / ‖w_i‖`.
    pub fn residual(&self, a: &DMatrix<C64>) -> f64 {
        let av = a * &self.right;
        let ah = a.adjoint();
        let aw = &ah * &self.left;
        let mut worst = 0.0f64;
        for (i, &l) in self.values.iter().enumerate() {
            let rv = (av.column(i) - self.right.column(i) * l).norm();
            let wn = self.left.column(i).norm();
            let rw = (aw.column(i) - self.left.column(i) * l.conj()).norm() / wn;
            worst = worst.max(rv).max(rw);
        }
        worst
    }
}

/// Eigen-decomposition of a general complex matrix through its Schur form.
///
/// Right eigenvectors come from back-substitution on the triangular factor;
/// the left set is the adjoint of the inverse eigenvector matrix, which makes
/// the pairing biorthonormal by construction. A singular eigenvector matrix
/// (defective spectrum) is reported as an error.
pub fn eig_biorthonormal(a: &DMatrix<C64>) -> Result<EigenSystem> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Eigen("matrix is not square".into()));
    }
    let (q, t) = a.clone().schur().unpack();
    let scale = t
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let tiny = scale * f64::EPSILON;
    let mut y = DMatrix::<C64>::zeros(n, n);
    for i in 0..n {
        let li = t[(i, i)];
        y[(i, i)] = C64::new(1.0, 0.0);
        for j in (0..i).rev() {
            let mut s = C64::new(0.0, 0.0);
            for k in j + 1..=i {
                s += t[(j, k)] * y[(k, i)];
            }
            let mut den = t[(j, j)] - li;
            if den.norm() < tiny {
                den = C64::new(tiny, 0.0);
            }
            y[(j, i)] = -s / den;
        }
    }
    let mut right = q * y;
    for mut c in right.column_iter_mut() {
        let nrm = c.norm();
        c /= C64::new(nrm, 0.0);
    }
    let inv = right.clone().try_inverse().ok_or_else(|| {
        Error::Eigen("eigenvector matrix is singular (defective spectrum)".into())
    })?;
    let left = inv.adjoint();
    let values = (0..n).map(|i| t[(i, i)]).collect();
    Ok(EigenSystem {
        values,
        right,
        left,
    })
}

/// Row-compressed sparse complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
}

impl SparseMatrix {
    /// Build from `(row, col, value)` triplets; duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, C64)>,
    ) -> Self {
        let mut rows: Vec<BTreeMap<usize, C64>> = vec![BTreeMap::new(); n_rows];
        for (r, c, v) in triplets {
            assert!(
                r < n_rows && c < n_cols,
                "triplet ({r},{c}) outside {n_rows}×{n_cols}"
            );
            *rows[r].entry(c).or_insert(C64::new(0.0, 0.0)) += v;
        }
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (c, v) in row {
                if v != C64::new(0.0, 0.0) {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, C64::new(1.0, 0.0))))
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.n_rows).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1])
                .map(move |k| (r, self.col_idx[k], self.values[k]))
        })
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[span.clone()].binary_search(&c) {
            Ok(k) => self.values[span.start + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.n_cols);
        (0..self.n_rows)
            .map(|r| {
                (self.row_ptr[r]..self.row_ptr[r + 1])
                    .map(|k| self.values[k] * x[self.col_idx[k]])
                    .sum()
            })
            .collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(
            self.n_cols,
            self.n_rows,
            self.triplets().map(|(r, c, v)| (c, r, v.conj())),
        )
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.n_rows, self.n_cols), (other.n_rows, other.n_cols));
        Self::from_triplets(
            self.n_rows,
            self.n_cols,
            self.triplets().chain(other.triplets()),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n_cols, other.n_rows);
        let mut trip = Vec::new();
        for r in 0..self.n_rows {
            let mut acc: BTreeMap<usize, C64> = BTreeMap::new();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let (mid, a) = (self.col_idx[k], self.values[k]);
                for j in other.row_ptr[mid]..other.row_ptr[mid + 1] {
                    *acc.entry(other.col_idx[j]).or_insert(C64::new(0.0, 0.0)) +=
                        a * other.values[j];
                }
            }
            trip.extend(acc.into_iter().map(|(c, v)| (r, c, v)));
        }
        Self::from_triplets(self.n_rows, other.n_cols, trip)
    }

    /// Largest entry modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.sub(other)
            .values
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.n_rows == self.n_cols && self.max_abs_diff(&self.adjoint()) <= tol
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.n_rows, self.n_cols);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }
}

/// `⟨x, y⟩ = Σ x*·y`.
pub fn inner(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

/// Connected components of the sparsity graph of a square matrix.
pub fn connected_components(m: &SparseMatrix) -> Vec<Vec<usize>> {
    let n = m.n_rows;
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for (r, c, _) in m.triplets() {
        let (a, b) = (find(&mut parent, r), find(&mut parent, c));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }
    groups.into_values().collect()
}

/// `exp(−iHt)·ψ` for a sparse Hermitian `H`, diagonalizing each connected
/// block of `H` separately.
pub fn propagate_hermitian(h: &SparseMatrix, t: f64, psi: &[C64]) -> Result<Vec<C64>> {
    if !h.is_hermitian(1e-12) {
        return Err(Error::Eigen(
            "propagator requires a Hermitian matrix".into(),
        ));
    }
    let mut out = vec![C64::new(0.0, 0.0); psi.len()];
    for comp in connected_components(h) {
        if comp.iter().all(|&i| psi[i] == C64::new(0.0, 0.0)) {
            continue;
        }
        let k = comp.len();
        let mut block = DMatrix::<C64>::zeros(k, k);
        for (a, &i) in comp.iter().enumerate() {
            for (b, &j) in comp.iter().enumerate() {
                block[(a, b)] = h.get(i, j);
            }
        }
        let eig = block.symmetric_eigen();
        let v = DVector::from_iterator(k, comp.iter().map(|&i| psi[i]));
        let coeff = eig.eigenvectors.adjoint() * v;
        let phased = DVector::from_iterator(
            k,
            coeff
                .iter()
                .zip(eig.eigenvalues.iter())
                .map(|(c, &l)| c * C64::from_polar(1.0, -l * t)),
        );
        let res = &eig.eigenvectors * phased;
        for (a, &i) in comp.iter().enumerate() {
            out[i] = res[a];
        }
    }
    Ok(out)
}
