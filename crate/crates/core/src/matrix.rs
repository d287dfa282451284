//! Dense symmetric storage and the few BLAS-like kernels the solver needs.

use nalgebra::DMatrix;

/// Dense `p x p` matrix whose `(k, l)` and `(l, k)` entries are always equal.
///
/// Every constructor and mutator writes both halves, so symmetry holds
/// bit-for-bit rather than up to roundoff.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    inner: DMatrix<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(p: usize) -> Self {
        Self {
            inner: DMatrix::zeros(p, p),
        }
    }

    pub fn identity(p: usize) -> Self {
        Self {
            inner: DMatrix::identity(p, p),
        }
    }

    /// Builds `(A + A^T) / 2`. Panics if `a` is not square.
    pub fn symmetrize(a: DMatrix<f64>) -> Self {
        let mut a = a;
        symmetrize_in_place(&mut a);
        Self { inner: a }
    }

    /// Fills the lower triangle (`l <= k`) from `f(k, l)` and mirrors it.
    pub fn from_lower_fn(p: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut inner = DMatrix::zeros(p, p);
        for k in 0..p {
            for l in 0..=k {
                let v = f(k, l);
                inner[(k, l)] = v;
                inner[(l, k)] = v;
            }
        }
        Self { inner }
    }

    /// Wraps a matrix that is already exactly symmetric.
    ///
    /// Returns `None` if any mirrored pair differs.
    pub fn try_from_exact(a: DMatrix<f64>) -> Option<Self> {
        if a.nrows() != a.ncols() || !is_exactly_symmetric(&a) {
            return None;
        }
        Some(Self { inner: a })
    }

    pub(crate) fn from_exact_unchecked(a: DMatrix<f64>) -> Self {
        debug_assert!(is_exactly_symmetric(&a));
        Self { inner: a }
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.inner[(k, l)]
    }

    pub fn set(&mut self, k: usize, l: usize, value: f64) {
        self.inner[(k, l)] = value;
        self.inner[(l, k)] = value;
    }

    pub fn add_to(&mut self, k: usize, l: usize, delta: f64) {
        let v = self.inner[(k, l)] + delta;
        self.set(k, l, v);
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.inner
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.inner
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.inner.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.norm()
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { inner: &self.inner * c }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            inner: self.inner.map(f),
        }
    }

    /// Lower-triangle (`l <= k`) coordinates of the exact nonzeros, row-major.
    pub fn lower_support(&self) -> Vec<(usize, usize)> {
        let p = self.dim();
        let mut out = Vec::new();
        for k in 0..p {
            for l in 0..=k {
                if self.inner[(k, l)] != 0.0 {
                    out.push((k, l));
                }
            }
        }
        out
    }

    pub fn lower_nonzero_count(&self) -> usize {
        let p = self.dim();
        (0..p)
            .map(|k| (0..=k).filter(|&l| self.inner[(k, l)] != 0.0).count())
            .sum()
    }

    /// Symmetric permutation `P A P^T`: entry `(perm[k], perm[l])` of the
    /// result equals entry `(k, l)` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let p = self.dim();
        assert_eq!(perm.len(), p);
        let mut out = DMatrix::zeros(p, p);
        for k in 0..p {
            for l in 0..p {
                out[(perm[k], perm[l])] = self.inner[(k, l)];
            }
        }
        Self { inner: out }
    }
}

pub(crate) fn is_exactly_symmetric(a: &DMatrix<f64>) -> bool {
    let p = a.nrows();
    (0..p).all(|k| (0..k).all(|l| a[(k, l)] == a[(l, k)]))
}

/// Replaces `a` by `(a + a^T) / 2`. Each mirrored pair receives the same
/// floating-point value.
pub(crate) fn symmetrize_in_place(a: &mut DMatrix<f64>) {
    let p = a.nrows();
    assert_eq!(p, a.ncols(), "symmetrize needs a square matrix");
    for k in 0..p {
        for l in 0..k {
            let v = 0.5 * (a[(k, l)] + a[(l, k)]);
            a[(k, l)] = v;
            a[(l, k)] = v;
        }
    }
}

/// `c <- alpha * op(a) * op(b) + beta * c` on column-major nalgebra storage.
///
/// Transposition is expressed through strides so no copies are made.
pub(crate) fn gemm(
    alpha: f64,
    a: &DMatrix<f64>,
    transpose_a: bool,
    b: &DMatrix<f64>,
    transpose_b: bool,
    beta: f64,
    c: &mut DMatrix<f64>,
) {
    let (m, k) = if transpose_a {
        (a.ncols(), a.nrows())
    } else {
        (a.nrows(), a.ncols())
    };
    let (kb, n) = if transpose_b {
        (b.ncols(), b.nrows())
    } else {
        (b.nrows(), b.ncols())
    };
    assert_eq!(k, kb, "inner dimensions differ");
    assert_eq!((c.nrows(), c.ncols()), (m, n), "output shape mismatch");
    if m == 0 || n == 0 {
        return;
    }
    // Column-major: element (i, j) sits at i + j * nrows.
    let (rsa, csa) = if transpose_a {
        (a.nrows() as isize, 1)
    } else {
        (1, a.nrows() as isize)
    };
    let (rsb, csb) = if transpose_b {
        (b.nrows() as isize, 1)
    } else {
        (1, b.nrows() as isize)
    };
    let rsc = 1;
    let csc = c.nrows() as isize;
    // SAFETY: strides and shapes describe the owned, contiguous buffers
    // checked above; `c` does not alias `a` or `b` (distinct borrows).
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            rsc,
            csc,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetrize_is_exact() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 0.1, 0.3, 0.2, 2.0, 0.7, 0.9, 0.4, 3.0]);
        let s = SymmetricMatrix::symmetrize(a);
        assert!(is_exactly_symmetric(s.as_matrix()));
        assert_eq!(s.get(0, 1), 0.5 * (0.1 + 0.2));
        assert_eq!(s.get(2, 0), s.get(0, 2));
    }

    #[test]
    fn lower_support_counts_diagonal() {
        let s = SymmetricMatrix::identity(3);
        assert_eq!(s.lower_support(), vec![(0, 0), (1, 1), (2, 2)]);
        assert_eq!(s.lower_nonzero_count(), 3);
    }

    #[test]
    fn gemm_matches_nalgebra_products() {
        let a = DMatrix::from_fn(4, 3, |i, j| (i as f64 + 1.0) * 0.5 - j as f64);
        let b = DMatrix::from_fn(4, 5, |i, j| (i * j) as f64 * 0.25 + 1.0);
        let mut c = DMatrix::zeros(3, 5);
        gemm(1.0, &a, true, &b, false, 0.0, &mut c);
        assert!((c - a.transpose() * &b).amax() < 1e-12);

        let mut d = DMatrix::from_element(4, 4, 1.0);
        gemm(2.0, &a, false, &a, true, 1.0, &mut d);
        let expected = DMatrix::from_element(4, 4, 1.0) + 2.0 * &a * a.transpose();
        assert!((d - expected).amax() < 1e-12);
    }

    #[test]
    fn try_from_exact_rejects_asymmetry() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0 + 1e-15, 1.0]);
        assert!(SymmetricMatrix::try_from_exact(a).is_none());
    }
}
