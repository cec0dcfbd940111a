//! Dense complex matrix kernel: norms, Hermitian functional calculus,
//! positivity and span arithmetic.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Absolute/relative tolerance pair. A residual `r` passes iff
/// `r <= atol + rtol * scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub atol: f64,
    pub rtol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::DEFAULT
    }
}

impl Tolerance {
    pub const DEFAULT: Tolerance = Tolerance { atol: 1e-9, rtol: 1e-8 };

    pub fn new(atol: f64, rtol: f64) -> Result<Self> {
        if !(atol >= 0.0 && rtol >= 0.0 && atol.is_finite() && rtol.is_finite()) {
            return invalid(format!("tolerances must be finite and non-negative, got atol={atol} rtol={rtol}"));
        }
        Ok(Tolerance { atol, rtol })
    }

    pub fn threshold(&self, scale: f64) -> f64 {
        self.atol + self.rtol * scale
    }

    pub fn accepts(&self, residual: f64, scale: f64) -> bool {
        residual <= self.threshold(scale)
    }

    /// Singular-value / eigenvalue cutoff for a matrix of the given norm.
    pub fn cutoff(&self, scale: f64) -> f64 {
        self.atol * scale.max(1.0)
    }
}

pub fn validate(m: &CMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        invalid("matrix has non-finite entries")
    }
}

pub fn require_square(m: &CMatrix, what: &str) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        invalid(format!("{what}: expected a square matrix, got {}x{}", m.nrows(), m.ncols()))
    }
}

/// Largest singular value, from the Hermitian eigendecomposition of the
/// smaller of `m* m` and `m m*`.
pub fn op_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let g = if m.ncols() <= m.nrows() { m.adjoint() * m } else { m * m.adjoint() };
    let (vals, _) = hermitian_eigen(&g);
    vals.iter().cloned().fold(0.0_f64, f64::max).sqrt()
}

pub fn checked_op_norm(m: &CMatrix) -> Result<f64> {
    validate(m)?;
    Ok(op_norm(m))
}

/// Frobenius inner product, conjugate-linear in the first slot.
pub fn frob_inner(a: &CMatrix, b: &CMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Eigen-decomposition of the Hermitian part of `m`.
pub fn hermitian_eigen(m: &CMatrix) -> (DVector<f64>, CMatrix) {
    let h = hermitian_part(m);
    let scale = 1.0 + h.norm();
    for eps in [f64::EPSILON, 1e-14, 1e-13] {
        if let Some(eig) = h.clone().try_symmetric_eigen(eps, 0) {
            let v = &eig.eigenvectors;
            let d = CMatrix::from_diagonal(&eig.eigenvalues.map(|x| c64(x, 0.0)));
            if (v * d * v.adjoint() - &h).norm() <= 1e-12 * scale {
                return (eig.eigenvalues, eig.eigenvectors);
            }
        }
    }
    let eig = h.symmetric_eigen();
    (eig.eigenvalues, eig.eigenvectors)
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c64(0.5, 0.0)
}

pub fn hermitian_residual(m: &CMatrix) -> f64 {
    op_norm(&(m - m.adjoint()))
}

pub fn is_hermitian(m: &CMatrix, tol: &Tolerance) -> bool {
    m.is_square() && tol.accepts(hermitian_residual(m), op_norm(m))
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let (vals, _) = hermitian_eigen(m);
    vals.iter().cloned().fold(f64::INFINITY, f64::min)
}

pub fn psd_check(m: &CMatrix, tol: &Tolerance) -> Result<bool> {
    require_square(m, "psd_check")?;
    validate(m)?;
    if m.is_empty() {
        return Ok(true);
    }
    let scale = op_norm(m);
    Ok(tol.accepts(hermitian_residual(m), scale) && min_eigenvalue(m) >= -tol.threshold(scale))
}

/// `max(‖P − P*‖, ‖P² − P‖)`.
pub fn projection_residual(p: &CMatrix) -> f64 {
    if !p.is_square() {
        return f64::INFINITY;
    }
    hermitian_residual(p).max(op_norm(&(p * p - p)))
}

pub fn is_projection(p: &CMatrix, tol: &Tolerance) -> bool {
    tol.accepts(projection_residual(p), op_norm(p))
}

fn check_psd_input(m: &CMatrix, tol: &Tolerance, what: &str) -> Result<(DVector<f64>, CMatrix, f64)> {
    require_square(m, what)?;
    validate(m)?;
    let scale = op_norm(m);
    if !tol.accepts(hermitian_residual(m), scale) {
        return invalid(format!("{what}: matrix is not Hermitian"));
    }
    let (vals, vecs) = hermitian_eigen(m);
    let low = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    if !m.is_empty() && low < -tol.threshold(scale) {
        return invalid(format!("{what}: matrix is not positive (eigenvalue {low:.3e})"));
    }
    Ok((vals, vecs, scale))
}

fn spectral_apply(vals: &DVector<f64>, vecs: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let mut scaled = vecs.clone();
    for (j, &v) in vals.iter().enumerate() {
        let s = f(v);
        scaled.column_mut(j).scale_mut(s);
    }
    scaled * vecs.adjoint()
}

/// `m^t` for positive `m` and `t` in (0, 1]; eigenvalues below the cutoff are
/// clamped to zero first.
pub fn frac_power(m: &CMatrix, t: f64, tol: &Tolerance) -> Result<CMatrix> {
    if !(t > 0.0 && t <= 1.0) {
        return invalid(format!("frac_power: exponent {t} outside (0, 1]"));
    }
    let (vals, vecs, scale) = check_psd_input(m, tol, "frac_power")?;
    let cut = tol.cutoff(scale);
    Ok(spectral_apply(&vals, &vecs, |v| if v <= cut { 0.0 } else { v.powf(t) }))
}

/// `m^{-t}` for positive `m` and `t > 0`, Moore–Penrose style: eigenvalues at
/// or below the cutoff are treated as absent.
pub fn pinv_power(m: &CMatrix, t: f64, tol: &Tolerance) -> Result<CMatrix> {
    if !(t > 0.0 && t.is_finite()) {
        return invalid(format!("pinv_power: exponent {t} must be positive"));
    }
    let (vals, vecs, scale) = check_psd_input(m, tol, "pinv_power")?;
    let cut = tol.cutoff(scale);
    Ok(spectral_apply(&vals, &vecs, |v| if v <= cut { 0.0 } else { v.powf(-t) }))
}

/// Column-major vectorization.
pub fn vectorize(m: &CMatrix) -> DVector<C64> {
    DVector::from_column_slice(m.as_slice())
}

/// Matrix whose columns are the vectorized inputs.
pub fn stack(mats: &[CMatrix], rows: usize, cols: usize) -> CMatrix {
    let mut out = CMatrix::zeros(rows * cols, mats.len());
    for (k, m) in mats.iter().enumerate() {
        out.column_mut(k).copy_from_slice(m.as_slice());
    }
    out
}

pub fn unvectorize(v: &[C64], rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_column_slice(rows, cols, v)
}

/// Singular value decomposition `m = U Σ V*` with both factors.
///
/// nalgebra's default convergence threshold occasionally stops on a wrong
/// factorization for complex input, so the result is verified and retried
/// on the adjoint.
pub fn svd(m: &CMatrix) -> (CMatrix, DVector<f64>, CMatrix) {
    let scale = 1.0 + m.norm();
    let attempt = |a: &CMatrix, eps: f64| -> Option<(CMatrix, DVector<f64>, CMatrix)> {
        let d = a.clone().try_svd(true, true, eps, 0)?;
        let (u, vt) = (d.u?, d.v_t?);
        let sig = CMatrix::from_diagonal(&d.singular_values.map(|v| c64(v, 0.0)));
        let err = (&u * sig * &vt - a).norm();
        (err <= 1e-12 * scale).then_some((u, d.singular_values, vt))
    };
    for eps in [1e-14, f64::EPSILON, 1e-13] {
        if let Some(r) = attempt(m, eps) {
            return r;
        }
        if let Some((u, s, vt)) = attempt(&m.adjoint(), eps) {
            return (vt.adjoint(), s, u.adjoint());
        }
    }
    let d = m.clone().svd(true, true);
    (d.u.expect("u requested"), d.singular_values, d.v_t.expect("v_t requested"))
}

/// Orthonormal columns spanning the range of `m` (singular values above the cutoff).
pub fn range_isometry(m: &CMatrix, tol: &Tolerance) -> CMatrix {
    if m.is_empty() {
        return CMatrix::zeros(m.nrows(), 0);
    }
    let (u, sv, _) = svd(m);
    let smax = sv.iter().cloned().fold(0.0_f64, f64::max);
    let cut = tol.cutoff(smax);
    let mut idx: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] > cut).collect();
    idx.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    let mut out = CMatrix::zeros(m.nrows(), idx.len());
    for (j, &i) in idx.iter().enumerate() {
        out.column_mut(j).copy_from(&u.column(i));
    }
    out
}

pub fn rank(m: &CMatrix, tol: &Tolerance) -> usize {
    range_isometry(m, tol).ncols()
}

/// Frobenius-orthonormal basis of the complex span of equally shaped matrices.
pub fn orthonormal_span(mats: &[CMatrix], tol: &Tolerance) -> Result<Vec<CMatrix>> {
    let Some(first) = mats.first() else {
        return Ok(Vec::new());
    };
    let (r, c) = first.shape();
    if let Some(bad) = mats.iter().find(|m| m.shape() != (r, c)) {
        return invalid(format!("orthonormal_span: shape {:?} differs from {:?}", bad.shape(), (r, c)));
    }
    for m in mats {
        validate(m)?;
    }
    let basis = range_isometry(&stack(mats, r, c), tol);
    Ok(basis.column_iter().map(|col| unvectorize(col.as_slice(), r, c)).collect())
}

/// Coordinates of `m` against an orthonormal basis, or `None` when the
/// projection residual exceeds the tolerance.
pub fn in_span(m: &CMatrix, basis: &[CMatrix], tol: &Tolerance) -> Option<Vec<C64>> {
    let coords: Vec<C64> = basis.iter().map(|b| frob_inner(b, m)).collect();
    let mut resid = m.clone();
    for (b, c) in basis.iter().zip(&coords) {
        resid -= b * *c;
    }
    if tol.accepts(resid.norm(), m.norm()) {
        Some(coords)
    } else {
        None
    }
}

/// Orthogonal projection onto the column space of `m`.
pub fn range_projection(m: &CMatrix, tol: &Tolerance) -> CMatrix {
    let u = range_isometry(m, tol);
    &u * u.adjoint()
}

/// Moore–Penrose pseudo-inverse with the shared cutoff.
pub fn pinv(m: &CMatrix, tol: &Tolerance) -> CMatrix {
    let (r, c) = m.shape();
    if m.is_empty() {
        return CMatrix::zeros(c, r);
    }
    let (u, sv, vt) = svd(m);
    let smax = sv.iter().cloned().fold(0.0_f64, f64::max);
    let cut = tol.cutoff(smax);
    let mut out = CMatrix::zeros(c, r);
    for (i, &s) in sv.iter().enumerate() {
        if s > cut {
            out += vt.row(i).adjoint() * u.column(i).adjoint() * c64(1.0 / s, 0.0);
        }
    }
    out
}

/// Orthonormal basis (as columns) of the null space of `m`.
pub fn null_space(m: &CMatrix, tol: &Tolerance) -> CMatrix {
    let n = m.ncols();
    if n == 0 {
        return CMatrix::zeros(0, 0);
    }
    // pad to at least n rows so the SVD returns a full right factor
    let padded = if m.nrows() < n {
        let mut p = CMatrix::zeros(n, n);
        p.view_mut((0, 0), m.shape()).copy_from(m);
        p
    } else {
        m.clone()
    };
    let (_, sv, vt) = svd(&padded);
    let smax = sv.iter().cloned().fold(0.0_f64, f64::max);
    let cut = tol.cutoff(smax);
    let cols: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] <= cut).collect();
    let mut out = CMatrix::zeros(n, cols.len());
    for (j, &i) in cols.iter().enumerate() {
        out.column_mut(j).copy_from(&vt.row(i).adjoint());
    }
    out
}

pub fn block_diag(blocks: &[CMatrix]) -> CMatrix {
    let r: usize = blocks.iter().map(|b| b.nrows()).sum();
    let c: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMatrix::zeros(r, c);
    let (mut i, mut j) = (0, 0);
    for b in blocks {
        out.view_mut((i, j), b.shape()).copy_from(b);
        i += b.nrows();
        j += b.ncols();
    }
    out
}

pub fn hstack(blocks: &[CMatrix], rows: usize) -> CMatrix {
    let c: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMatrix::zeros(rows, c);
    let mut j = 0;
    for b in blocks {
        out.view_mut((0, j), b.shape()).copy_from(b);
        j += b.ncols();
    }
    out
}

pub fn vstack(blocks: &[CMatrix], cols: usize) -> CMatrix {
    let r: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMatrix::zeros(r, cols);
    let mut i = 0;
    for b in blocks {
        out.view_mut((i, 0), b.shape()).copy_from(b);
        i += b.nrows();
    }
    out
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Entries with independent uniform real and imaginary parts in [-1, 1).
pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

pub fn random_coords<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<C64> {
    (0..n).map(|_| c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
}

/// Unitary from the QR factor of a random matrix, phases normalized.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    if n == 0 {
        return CMatrix::zeros(0, 0);
    }
    let qr = random_matrix(rng, n, n).qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        let col = q.column(j) * phase;
        q.column_mut(j).copy_from(&col);
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag(v: &[C64]) -> CMatrix {
        CMatrix::from_diagonal(&DVector::from_column_slice(v))
    }

    #[test]
    fn op_norm_small_cases() {
        assert!((op_norm(&CMatrix::identity(2, 2)) - 1.0).abs() < 1e-14);
        let shift = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
        assert!((op_norm(&shift) - 1.0).abs() < 1e-14);
        assert!((op_norm(&diag(&[c64(3.0, 0.0), c64(0.0, 4.0)])) - 4.0).abs() < 1e-12);
        assert_eq!(op_norm(&CMatrix::zeros(0, 3)), 0.0);
    }

    #[test]
    fn svd_reconstructs_rank_deficient_input() {
        // two proportional columns; the unchecked decomposition is off by 0.1 here
        let a = [
            (0.19520166675589726, -0.08823247000859316),
            (0.0653194429052372, -0.2590576521128493),
            (0.040425997701207014, -0.07809982395685383),
            (0.35355339059327384, 5.048045315092509e-16),
            (2.1510571102112408e-16, -5.898059818321144e-17),
            (0.19488446586291064, 0.08705060699724321),
            (-0.13436362551854827, -0.0007500816844473943),
            (-0.10708187728140234, 0.2234313358945161),
            (-6.938893903907228e-17, -9.020562075079397e-17),
            (0.35355339059327384, -2.0664893407573715e-16),
        ];
        let mut m = CMatrix::zeros(10, 2);
        for (i, &(re, im)) in a.iter().enumerate() {
            m[(i, 0)] = c64(re, im);
            m[(i, 1)] = c64(re, im);
        }
        let (u, s, vt) = svd(&m);
        let sig = CMatrix::from_diagonal(&s.map(|v| c64(v, 0.0)));
        assert!((&u * sig * &vt - &m).norm() < 1e-12);
        assert_eq!(rank(&m, &Tolerance::DEFAULT), 1);
        let basis = range_isometry(&m, &Tolerance::DEFAULT);
        assert!((&basis * basis.adjoint() * &m - &m).norm() < 1e-12);
    }

    #[test]
    fn op_norm_rejects_nan() {
        let mut m = CMatrix::identity(2, 2);
        m[(0, 1)] = c64(f64::NAN, 0.0);
        assert!(checked_op_norm(&m).is_err());
    }

    #[test]
    fn op_norm_matches_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let m = random_matrix(&mut rng, 3, 5);
            let s = m.clone().svd(false, false).singular_values.max();
            assert!((op_norm(&m) - s).abs() < 1e-10 * s.max(1.0));
        }
    }

    #[test]
    fn frac_power_cases() {
        let tol = Tolerance::DEFAULT;
        let i = CMatrix::identity(3, 3);
        assert!((frac_power(&i, 0.25, &tol).unwrap() - &i).norm() < 1e-12);
        let d = diag(&[c64(16.0, 0.0), ZERO]);
        let r = frac_power(&d, 0.25, &tol).unwrap();
        assert!((r - diag(&[c64(2.0, 0.0), ZERO])).norm() < 1e-12);
        assert!(frac_power(&diag(&[ONE, -ONE]), 0.5, &tol).is_err());
        assert!(frac_power(&i, 1.5, &tol).is_err());
    }

    #[test]
    fn sqrt_squares_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let tol = Tolerance::DEFAULT;
        for _ in 0..20 {
            let a = random_matrix(&mut rng, 4, 4);
            let p = a.adjoint() * &a;
            let q = frac_power(&p, 0.5, &tol).unwrap();
            assert!((&q * &q - &p).norm() <= tol.threshold(op_norm(&p)));
        }
    }

    #[test]
    fn pinv_power_drops_kernel() {
        let tol = Tolerance::DEFAULT;
        let d = diag(&[c64(4.0, 0.0), ZERO]);
        let r = pinv_power(&d, 0.5, &tol).unwrap();
        assert!((r - diag(&[c64(0.5, 0.0), ZERO])).norm() < 1e-12);
    }

    #[test]
    fn psd_cases() {
        let tol = Tolerance::DEFAULT;
        assert!(psd_check(&CMatrix::zeros(2, 2), &tol).unwrap());
        assert!(!psd_check(&diag(&[ONE, -ONE]), &tol).unwrap());
        assert!(psd_check(&CMatrix::zeros(2, 3), &tol).is_err());
    }

    #[test]
    fn span_of_dependent_set() {
        let tol = Tolerance::DEFAULT;
        let i = CMatrix::identity(2, 2);
        let span = orthonormal_span(&[i.clone(), &i * c64(2.0, 0.0)], &tol).unwrap();
        assert_eq!(span.len(), 1);
        assert!((span[0].norm() - 1.0).abs() < 1e-12);
        assert!(orthonormal_span(&[], &tol).unwrap().is_empty());
        assert!(orthonormal_span(&[i, CMatrix::zeros(2, 3)], &tol).is_err());
    }

    #[test]
    fn in_span_cases() {
        let tol = Tolerance::DEFAULT;
        let mut e00 = CMatrix::zeros(2, 2);
        e00[(0, 0)] = ONE;
        let mut e11 = CMatrix::zeros(2, 2);
        e11[(1, 1)] = ONE;
        let basis = vec![e00.clone(), e11.clone()];
        let c = in_span(&e00, &basis, &tol).unwrap();
        assert!((c[0] - ONE).norm() < 1e-14 && c[1].norm() < 1e-14);
        let mut off = CMatrix::zeros(2, 2);
        off[(0, 1)] = ONE;
        assert!(in_span(&off, &basis, &tol).is_none());
    }

    #[test]
    fn range_projection_cases() {
        let tol = Tolerance::DEFAULT;
        assert_eq!(range_projection(&CMatrix::zeros(3, 3), &tol), CMatrix::zeros(3, 3));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_matrix(&mut rng, 4, 2);
        let p = range_projection(&m, &tol);
        assert!((&p * &m - &m).norm() < 1e-10);
        assert!(projection_residual(&p) < 1e-12);
        let p2 = range_projection(&p, &tol);
        assert!((p2 - p).norm() < 1e-12);
    }

    #[test]
    fn null_space_of_wide_matrix() {
        let tol = Tolerance::DEFAULT;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = random_matrix(&mut rng, 2, 5);
        let n = null_space(&m, &tol);
        assert_eq!(n.ncols(), 3);
        assert!((&m * &n).norm() < 1e-10);
    }

    #[test]
    fn pinv_solves() {
        let tol = Tolerance::DEFAULT;
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let m = random_matrix(&mut rng, 5, 3);
        let p = pinv(&m, &tol);
        assert!((&p * &m - CMatrix::identity(3, 3)).norm() < 1e-10);
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_unitary(&mut rng, 4);
        assert!((u.adjoint() * &u - CMatrix::identity(4, 4)).norm() < 1e-12);
    }
}
