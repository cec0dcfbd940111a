use super::{CStarCategory, Morphism};
use crate::error::{Error, Result};
use crate::numc::{self, op_norm, Tolerance};

/// `u = v ∘ w` with `w = (u*u)^{1/4}` in `A(x, x)` and `v = u (u*u)^{-1/4}`.
pub fn factorize(cat: &CStarCategory, u: &Morphism, tol: &Tolerance) -> Result<(Morphism, Morphism)> {
    let uu = u.mat.adjoint() * &u.mat;
    let w = numc::frac_power(&uu, 0.25, tol)?;
    let v = &u.mat * numc::pinv_power(&uu, 0.25, tol)?;
    let w = cat.morphism(u.src, u.src, w, tol)?;
    let v = cat.morphism(u.src, u.dst, v, tol)?;
    Ok((v, w))
}

/// Mirrored form `u = s ∘ t` with `s` in `A(y, y)`, from factorizing `u*`.
pub fn factorize_left(cat: &CStarCategory, u: &Morphism, tol: &Tolerance) -> Result<(Morphism, Morphism)> {
    let (v, w) = factorize(cat, &u.adjoint(), tol)?;
    Ok((w.adjoint(), v.adjoint()))
}

/// `a (a*a)^{-1/2}` for invertible `a`.
pub fn polar_unitary(cat: &CStarCategory, a: &Morphism, tol: &Tolerance) -> Result<Morphism> {
    if a.mat.nrows() != a.mat.ncols() {
        return Err(Error::NotInvertible(0.0));
    }
    let aa = a.mat.adjoint() * &a.mat;
    let low = numc::min_eigenvalue(&aa);
    // cutoff shared with pinv_power
    if a.mat.is_empty() || low <= tol.cutoff(op_norm(&aa)) {
        return Err(Error::NotInvertible(low.max(0.0).sqrt()));
    }
    let u = &a.mat * numc::pinv_power(&aa, 0.5, tol)?;
    cat.morphism(a.src, a.dst, u, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::category::{full_matrix_category, ObjectId};
    use crate::numc::{c64, random_unitary, CMatrix};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_factorizes_to_zero() {
        let tol = Tolerance::DEFAULT;
        let cat = full_matrix_category(&[2, 3]);
        let u = cat.zero(ObjectId(0), ObjectId(1));
        let (v, w) = factorize(&cat, &u, &tol).unwrap();
        assert_eq!(v.mat.norm(), 0.0);
        assert_eq!(w.mat.norm(), 0.0);
    }

    #[test]
    fn unitary_factorizes_trivially() {
        let tol = Tolerance::DEFAULT;
        let cat = full_matrix_category(&[3]);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let u = Morphism { src: ObjectId(0), dst: ObjectId(0), mat: random_unitary(&mut rng, 3) };
        let (v, w) = factorize(&cat, &u, &tol).unwrap();
        assert!((w.mat - CMatrix::identity(3, 3)).norm() < 1e-10);
        assert!((v.mat - &u.mat).norm() < 1e-10);
        assert!((polar_unitary(&cat, &u, &tol).unwrap().mat - &u.mat).norm() < 1e-10);
    }

    #[test]
    fn mirrored_factorization_recomposes() {
        let tol = Tolerance::DEFAULT;
        let cat = full_matrix_category(&[2, 3]);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let u = cat.random_morphism(&mut rng, ObjectId(0), ObjectId(1));
        let (s, t) = factorize_left(&cat, &u, &tol).unwrap();
        assert_eq!((s.src, s.dst), (ObjectId(1), ObjectId(1)));
        assert!((&s.mat * &t.mat - &u.mat).norm() < 1e-9);
    }

    #[test]
    fn polar_of_scalar_is_identity() {
        let tol = Tolerance::DEFAULT;
        let cat = full_matrix_category(&[2]);
        let a = cat.identity(ObjectId(0)).scale(c64(2.0, 0.0));
        assert!((polar_unitary(&cat, &a, &tol).unwrap().mat - CMatrix::identity(2, 2)).norm() < 1e-12);
        let sing = cat.zero(ObjectId(0), ObjectId(0));
        assert!(matches!(polar_unitary(&cat, &sing, &tol), Err(Error::NotInvertible(_))));
    }
}
