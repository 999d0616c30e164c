//! Small dense complex linear-algebra helpers shared by the metric and
//! optimizer code.
//!
//! Channel *rows* (the `1 × N_t` vectors `h_k`, `h_se,k`) and channel
//! *columns* (`h_ce`, `g_k`) are both stored as [`CVec`]. The two quadratic
//! forms below differ only in which side carries the conjugate.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type CVec = DVector<Complex64>;
pub type CMat = DMatrix<Complex64>;

/// Relative size of the imaginary residue tolerated when a Hermitian
/// quadratic form is projected to the reals.
pub const IMAG_RESIDUE_TOL: f64 = 1e-8;

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `r A r^H` for a row vector `r`.
pub fn row_form(row: &CVec, a: &CMat) -> f64 {
    let n = row.len();
    debug_assert_eq!(a.nrows(), n);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    for j in 0..n {
        let rj = row[j].conj();
        for i in 0..n {
            let term = row[i] * a[(i, j)] * rj;
            scale += term.norm();
            acc += term;
        }
    }
    project_real(acc, scale)
}

/// `c^H A c` for a column vector `c`.
pub fn col_form(col: &CVec, a: &CMat) -> f64 {
    let n = col.len();
    debug_assert_eq!(a.nrows(), n);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    for j in 0..n {
        let cj = col[j];
        for i in 0..n {
            let term = col[i].conj() * a[(i, j)] * cj;
            scale += term.norm();
            acc += term;
        }
    }
    project_real(acc, scale)
}

fn project_real(z: Complex64, scale: f64) -> f64 {
    assert!(
        z.im.abs() <= IMAG_RESIDUE_TOL * scale.max(f64::MIN_POSITIVE),
        "quadratic form of a non-Hermitian argument: imaginary residue {:e} (scale {:e})",
        z.im,
        scale
    );
    z.re
}

/// Real part of the trace.
pub fn trace_re(a: &CMat) -> f64 {
    a.diagonal().iter().map(|z| z.re).sum()
}

/// `x x^H` for a column `x`.
pub fn outer_col(x: &CVec) -> CMat {
    x * x.adjoint()
}

/// `r^H r` for a row `r`; satisfies `Tr(outer_row(r) A) = r A r^H`.
pub fn outer_row(r: &CVec) -> CMat {
    let conj = r.map(|z| z.conj());
    &conj * r.transpose()
}

/// `(A + A^H) / 2`.
pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Eigen-decomposition of the Hermitian part of `a`, eigenvalues ascending.
pub fn hermitian_eig(a: &CMat) -> (Vec<f64>, CMat) {
    let eig = SymmetricEigen::new(hermitian_part(a));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(a.nrows(), a.ncols(), |r, col| {
        eig.eigenvectors[(r, order[col])]
    });
    (values, vectors)
}

pub fn min_eigenvalue(a: &CMat) -> f64 {
    hermitian_eig(a).0.first().copied().unwrap_or(0.0)
}

pub fn max_eigenvalue(a: &CMat) -> f64 {
    hermitian_eig(a).0.last().copied().unwrap_or(0.0)
}

/// Largest eigenpair `(λ_max, e_max)` of a Hermitian matrix.
pub fn dominant_eigenpair(a: &CMat) -> (f64, CVec) {
    let (values, vectors) = hermitian_eig(a);
    let last = values.len() - 1;
    (values[last], vectors.column(last).into_owned())
}

/// Frobenius norm.
pub fn frobenius(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Orthonormal basis for the orthogonal complement of `span(cols)` in
/// `C^n`, via Gram-Schmidt on `[cols | I]`.
pub fn orthogonal_complement(n: usize, cols: &[CVec]) -> Vec<CVec> {
    let mut basis: Vec<CVec> = Vec::new();
    let push = |v: &CVec, basis: &mut Vec<CVec>| -> bool {
        let mut w = v.clone();
        // two passes keep the basis orthogonal to working precision
        for _ in 0..2 {
            for b in basis.iter() {
                let proj = b.dotc(&w);
                w -= b * proj;
            }
        }
        let norm = w.norm();
        if norm > 1e-10 * v.norm().max(1e-300) && norm > 1e-300 {
            basis.push(w / Complex64::new(norm, 0.0));
            true
        } else {
            false
        }
    };
    for col in cols {
        push(col, &mut basis);
    }
    let spanned = basis.len();
    for i in 0..n {
        let mut e = CVec::zeros(n);
        e[i] = Complex64::new(1.0, 0.0);
        push(&e, &mut basis);
        if basis.len() == n {
            break;
        }
    }
    basis.split_off(spanned)
}

/// Projection of `x` onto the orthogonal complement of `span(cols)`.
pub fn project_out(x: &CVec, cols: &[CVec]) -> CVec {
    let complement = orthogonal_complement(x.len(), cols);
    let mut out = CVec::zeros(x.len());
    for b in &complement {
        out += b * b.dotc(x);
    }
    out
}
