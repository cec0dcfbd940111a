//! Concrete C*-categories: objects are finite-dimensional Hilbert spaces and
//! hom-spaces are *-closed, composition-closed subspaces of matrices.

mod factor;
mod functor;
mod hull;
mod idempotent;
mod multiplier;

pub use factor::{factorize, factorize_left, polar_unitary};
pub use functor::{verify_functor, CStarFunctor, FunctorReport};
pub use hull::{
    additive_hull, block_of, embed_block, hull_hom, hull_norm_formula, list_dim, list_offsets, matrix_algebra,
    AdditiveHull, BlockPosition, MatrixAlgebra,
};
pub use idempotent::{idempotent_completion, IdempotentCompletion, IdempotentObject};
pub use multiplier::{
    addmult_check, multiplier_category, multiplier_from_arrays, MultiplierArrays, MultiplierCategory,
    MultiplierMorphism,
};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{invalid, Error, Result};
use crate::numc::{self, op_norm, CMatrix, Tolerance, C64};
use crate::report::{Report, Worst};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ObjectId(pub usize);

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Ordered list of objects, repeats allowed: an object of the additive hull.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ObjectList(pub Vec<ObjectId>);

impl ObjectList {
    pub fn singleton(x: ObjectId) -> Self {
        ObjectList(vec![x])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ObjectId> {
        self.0.iter()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Object {
    pub label: String,
    pub dim: usize,
}

/// A subspace of `rows x cols` matrices with a Frobenius-orthonormal basis.
#[derive(Debug, Clone)]
pub struct HomSpace {
    rows: usize,
    cols: usize,
    basis: Vec<CMatrix>,
    // vectorized basis as columns
    stacked: CMatrix,
}

impl HomSpace {
    /// Trusts that `basis` is orthonormal.
    pub fn from_orthonormal(rows: usize, cols: usize, basis: Vec<CMatrix>) -> Self {
        let stacked = numc::stack(&basis, rows, cols);
        HomSpace { rows, cols, basis, stacked }
    }

    pub fn span_of(rows: usize, cols: usize, gens: &[CMatrix], tol: &Tolerance) -> Result<Self> {
        if let Some(g) = gens.iter().find(|g| g.shape() != (rows, cols)) {
            return invalid(format!("generator of shape {:?} in a {rows}x{cols} hom-space", g.shape()));
        }
        Ok(HomSpace::from_orthonormal(rows, cols, numc::orthonormal_span(gens, tol)?))
    }

    pub fn zero(rows: usize, cols: usize) -> Self {
        HomSpace::from_orthonormal(rows, cols, Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn basis(&self) -> &[CMatrix] {
        &self.basis
    }

    pub fn coords(&self, m: &CMatrix) -> DVector<C64> {
        debug_assert_eq!(m.shape(), (self.rows, self.cols));
        self.stacked.adjoint() * numc::vectorize(m)
    }

    /// Coordinates of several matrices at once, as columns.
    pub fn coords_many(&self, mats: &[CMatrix]) -> CMatrix {
        self.stacked.adjoint() * numc::stack(mats, self.rows, self.cols)
    }

    pub fn combine(&self, coords: &[C64]) -> CMatrix {
        debug_assert_eq!(coords.len(), self.dim());
        let v = &self.stacked * DVector::from_column_slice(coords);
        numc::unvectorize(v.as_slice(), self.rows, self.cols)
    }

    pub fn project(&self, m: &CMatrix) -> CMatrix {
        let c = self.coords(m);
        self.combine(c.as_slice())
    }

    /// Frobenius distance from `m` to the subspace.
    pub fn residual(&self, m: &CMatrix) -> f64 {
        (m - self.project(m)).norm()
    }

    pub fn contains(&self, m: &CMatrix, tol: &Tolerance) -> bool {
        m.shape() == (self.rows, self.cols) && tol.accepts(self.residual(m), m.norm())
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> CMatrix {
        if self.dim() == 0 {
            return CMatrix::zeros(self.rows, self.cols);
        }
        self.combine(&numc::random_coords(rng, self.dim()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Morphism {
    pub src: ObjectId,
    pub dst: ObjectId,
    pub mat: CMatrix,
}

impl Morphism {
    pub fn norm(&self) -> f64 {
        op_norm(&self.mat)
    }

    pub fn adjoint(&self) -> Morphism {
        Morphism { src: self.dst, dst: self.src, mat: self.mat.adjoint() }
    }

    pub fn scale(&self, s: C64) -> Morphism {
        Morphism { src: self.src, dst: self.dst, mat: &self.mat * s }
    }
}

#[derive(Debug, Clone)]
pub struct CStarCategory {
    objects: Vec<Object>,
    // indexed by src * n + dst
    homs: Vec<HomSpace>,
}

impl CStarCategory {
    /// Builds a category from raw hom-space generators; pairs not mentioned get
    /// the zero space. Closure is not checked here, see [`verify_category`].
    pub fn new(
        objects: Vec<Object>,
        generators: Vec<((ObjectId, ObjectId), Vec<CMatrix>)>,
        tol: &Tolerance,
    ) -> Result<Self> {
        let n = objects.len();
        Self::check_objects(&objects)?;
        let mut gens: Vec<Vec<CMatrix>> = vec![Vec::new(); n * n];
        for ((s, d), ms) in generators {
            if s.0 >= n || d.0 >= n {
                return invalid(format!("hom-space ({s}, {d}) references a missing object"));
            }
            for m in &ms {
                numc::validate(m)?;
            }
            gens[s.0 * n + d.0].extend(ms);
        }
        let mut homs = Vec::with_capacity(n * n);
        for s in 0..n {
            for d in 0..n {
                homs.push(HomSpace::span_of(objects[d].dim, objects[s].dim, &gens[s * n + d], tol)?);
            }
        }
        Ok(CStarCategory { objects, homs })
    }

    /// Builds from already orthonormal hom-spaces, indexed by `src * n + dst`.
    pub fn from_homs(objects: Vec<Object>, homs: Vec<HomSpace>) -> Result<Self> {
        let n = objects.len();
        Self::check_objects(&objects)?;
        if homs.len() != n * n {
            return invalid(format!("expected {} hom-spaces, got {}", n * n, homs.len()));
        }
        for s in 0..n {
            for d in 0..n {
                let h = &homs[s * n + d];
                if h.shape() != (objects[d].dim, objects[s].dim) {
                    return invalid(format!("hom-space ({s}, {d}) has shape {:?}", h.shape()));
                }
            }
        }
        Ok(CStarCategory { objects, homs })
    }

    fn check_objects(objects: &[Object]) -> Result<()> {
        if let Some(o) = objects.iter().find(|o| o.dim == 0) {
            return invalid(format!("object '{}' has dimension 0", o.label));
        }
        Ok(())
    }

    pub fn num_objects(&self) -> usize {
        self.objects.len()
    }

    pub fn objects(&self) -> &[Object] {
        &self.objects
    }

    pub fn object_ids(&self) -> impl Iterator<Item = ObjectId> {
        (0..self.objects.len()).map(ObjectId)
    }

    pub fn full_list(&self) -> ObjectList {
        ObjectList(self.object_ids().collect())
    }

    pub fn dim(&self, x: ObjectId) -> usize {
        self.objects[x.0].dim
    }

    pub fn label(&self, x: ObjectId) -> &str {
        &self.objects[x.0].label
    }

    pub fn total_dim(&self) -> usize {
        self.objects.iter().map(|o| o.dim).sum()
    }

    pub fn check_id(&self, x: ObjectId) -> Result<()> {
        if x.0 < self.objects.len() {
            Ok(())
        } else {
            invalid(format!("object {x} out of range ({} objects)", self.objects.len()))
        }
    }

    pub fn hom(&self, src: ObjectId, dst: ObjectId) -> &HomSpace {
        &self.homs[src.0 * self.objects.len() + dst.0]
    }

    pub fn hom_dim(&self, src: ObjectId, dst: ObjectId) -> usize {
        self.hom(src, dst).dim()
    }

    /// Total dimension of all hom-spaces.
    pub fn total_hom_dim(&self) -> usize {
        self.homs.iter().map(|h| h.dim()).sum()
    }

    pub fn morphism(&self, src: ObjectId, dst: ObjectId, mat: CMatrix, tol: &Tolerance) -> Result<Morphism> {
        self.check_id(src)?;
        self.check_id(dst)?;
        numc::validate(&mat)?;
        let h = self.hom(src, dst);
        if mat.shape() != h.shape() {
            return invalid(format!("morphism {src}->{dst} has shape {:?}, expected {:?}", mat.shape(), h.shape()));
        }
        let residual = h.residual(&mat);
        if !tol.accepts(residual, mat.norm()) {
            return Err(Error::ClosureViolation { what: format!("hom({src}, {dst})"), residual });
        }
        Ok(Morphism { src, dst, mat })
    }

    pub fn from_coords(&self, src: ObjectId, dst: ObjectId, coords: &[C64]) -> Morphism {
        Morphism { src, dst, mat: self.hom(src, dst).combine(coords) }
    }

    pub fn coords(&self, f: &Morphism) -> DVector<C64> {
        self.hom(f.src, f.dst).coords(&f.mat)
    }

    pub fn identity(&self, x: ObjectId) -> Morphism {
        let d = self.dim(x);
        Morphism { src: x, dst: x, mat: CMatrix::identity(d, d) }
    }

    pub fn zero(&self, src: ObjectId, dst: ObjectId) -> Morphism {
        Morphism { src, dst, mat: CMatrix::zeros(self.dim(dst), self.dim(src)) }
    }

    /// `f ∘ g`.
    pub fn compose(&self, f: &Morphism, g: &Morphism, tol: &Tolerance) -> Result<Morphism> {
        if g.dst != f.src {
            return Err(Error::Composition {
                left_src: f.src.0,
                left_dst: f.dst.0,
                right_src: g.src.0,
                right_dst: g.dst.0,
            });
        }
        self.morphism(g.src, f.dst, &f.mat * &g.mat, tol)
    }

    pub fn involute(&self, f: &Morphism) -> Morphism {
        f.adjoint()
    }

    pub fn random_morphism<R: Rng + ?Sized>(&self, rng: &mut R, src: ObjectId, dst: ObjectId) -> Morphism {
        Morphism { src, dst, mat: self.hom(src, dst).random(rng) }
    }
}

const VERIFY_SEED: u64 = 0x5eed;
const VERIFY_SAMPLES: usize = 6;

/// Residuals for composition closure, involution closure, unit membership,
/// the C*-identity and positivity of `a* a` on sampled elements.
pub fn verify_category(cat: &CStarCategory, tol: &Tolerance) -> Report {
    let ids: Vec<ObjectId> = cat.object_ids().collect();
    let mut comp = Worst::new();
    let mut inv = Worst::new();
    let mut unit = Worst::new();
    let mut cstar = Worst::new();
    let mut pos = Worst::new();

    for &x in &ids {
        for &y in &ids {
            let gs = cat.hom(x, y).basis();
            for &z in &ids {
                let fs = cat.hom(y, z).basis();
                if gs.is_empty() || fs.is_empty() {
                    continue;
                }
                let target = cat.hom(x, z);
                for f in fs {
                    for g in gs {
                        let p = f * g;
                        comp.observe(target.residual(&p), tol.threshold(f.norm() * g.norm()));
                    }
                }
            }
            let back = cat.hom(y, x);
            for g in gs {
                let a = g.adjoint();
                inv.observe(back.residual(&a), tol.threshold(a.norm()));
            }
        }
        let id = cat.identity(x).mat;
        unit.observe(cat.hom(x, x).residual(&id), tol.threshold(id.norm()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(VERIFY_SEED);
    for &x in &ids {
        for &y in &ids {
            if cat.hom_dim(x, y) == 0 {
                continue;
            }
            for _ in 0..VERIFY_SAMPLES {
                let a = cat.random_morphism(&mut rng, x, y).mat;
                let n = op_norm(&a);
                let aa = a.adjoint() * &a;
                let naa = op_norm(&aa);
                cstar.observe((naa - n * n).abs(), tol.threshold(naa.max(n * n)));
                let low = numc::min_eigenvalue(&aa);
                pos.observe((-low).max(0.0), tol.threshold(naa));
            }
        }
    }

    let mut r = Report::new();
    r.push(comp.check("composition_closure"));
    r.push(inv.check("involution_closure"));
    r.push(unit.check("unit_membership"));
    r.push(cstar.check("cstar_identity"));
    r.push(pos.check("positivity"));
    r
}

/// Largest relative deviation of a hom-basis from orthonormality.
pub fn basis_orthonormality(cat: &CStarCategory) -> f64 {
    let mut worst: f64 = 0.0;
    for x in cat.object_ids() {
        for y in cat.object_ids() {
            let h = cat.hom(x, y);
            if h.dim() == 0 {
                continue;
            }
            let g = h.coords_many(h.basis());
            worst = worst.max(numc::op_norm(&(g - CMatrix::identity(h.dim(), h.dim()))));
        }
    }
    worst
}

#[cfg(test)]
pub(crate) use tests::full_matrix_category;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numc::ONE;

    pub(crate) fn full_matrix_category(dims: &[usize]) -> CStarCategory {
        let objects = dims.iter().enumerate().map(|(i, &d)| Object { label: format!("x{i}"), dim: d }).collect();
        let mut gens = Vec::new();
        for (s, &ds) in dims.iter().enumerate() {
            for (d, &dd) in dims.iter().enumerate() {
                let mut ms = Vec::new();
                for i in 0..dd {
                    for j in 0..ds {
                        let mut m = CMatrix::zeros(dd, ds);
                        m[(i, j)] = ONE;
                        ms.push(m);
                    }
                }
                gens.push(((ObjectId(s), ObjectId(d)), ms));
            }
        }
        CStarCategory::new(objects, gens, &Tolerance::DEFAULT).unwrap()
    }

    #[test]
    fn full_matrix_algebra_verifies() {
        let cat = full_matrix_category(&[2]);
        assert_eq!(cat.hom_dim(ObjectId(0), ObjectId(0)), 4);
        let r = verify_category(&cat, &Tolerance::DEFAULT);
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn missing_adjoint_fails_involution() {
        // upper triangular 2x2: closed under products, not under adjoint
        let mut e01 = CMatrix::zeros(2, 2);
        e01[(0, 1)] = ONE;
        let gens = vec![((ObjectId(0), ObjectId(0)), vec![CMatrix::identity(2, 2), e01])];
        let cat = CStarCategory::new(vec![Object { label: "x".into(), dim: 2 }], gens, &Tolerance::DEFAULT).unwrap();
        let r = verify_category(&cat, &Tolerance::DEFAULT);
        assert!(!r.get("involution_closure").unwrap().pass);
        assert!(r.get("composition_closure").unwrap().pass);
    }

    #[test]
    fn zero_dimension_rejected() {
        let err = CStarCategory::new(vec![Object { label: "x".into(), dim: 0 }], vec![], &Tolerance::DEFAULT);
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn compose_and_involute() {
        let tol = Tolerance::DEFAULT;
        let cat = full_matrix_category(&[2, 3]);
        let (x, y) = (ObjectId(0), ObjectId(1));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = cat.random_morphism(&mut rng, x, y);
        let f = cat.random_morphism(&mut rng, y, x);
        let id = cat.identity(y);
        assert_eq!(cat.compose(&id, &g, &tol).unwrap().mat, g.mat);
        let fg = cat.compose(&f, &g, &tol).unwrap();
        assert!((&fg.mat - &f.mat * &g.mat).norm() < 1e-12);
        let lhs = cat.involute(&fg);
        let rhs = cat.compose(&g.adjoint(), &f.adjoint(), &tol).unwrap();
        assert!((lhs.mat - rhs.mat).norm() < 1e-12);
        assert_eq!(cat.involute(&cat.involute(&g)), g);
        assert!(matches!(cat.compose(&g, &g, &tol), Err(Error::Composition { .. })));
        let zero = cat.zero(y, x);
        assert_eq!(cat.compose(&zero, &g, &tol).unwrap().mat.norm(), 0.0);
    }

    #[test]
    fn compose_detects_closure_violation() {
        let tol = Tolerance::DEFAULT;
        let mut e00 = CMatrix::zeros(2, 2);
        e00[(0, 0)] = ONE;
        let mut e01 = CMatrix::zeros(2, 2);
        e01[(0, 1)] = ONE;
        let gens = vec![((ObjectId(0), ObjectId(0)), vec![e00, e01.clone(), e01.adjoint()])];
        let cat = CStarCategory::new(vec![Object { label: "x".into(), dim: 2 }], gens, &tol).unwrap();
        let f = Morphism { src: ObjectId(0), dst: ObjectId(0), mat: e01.clone() };
        let g = f.adjoint();
        // e01 e10 = e00 is present, e10 e01 = e11 is not
        assert!(cat.compose(&f, &g, &tol).is_ok());
        assert!(matches!(cat.compose(&g, &f, &tol), Err(Error::ClosureViolation { .. })));
    }

    #[test]
    fn bases_are_orthonormal() {
        let cat = full_matrix_category(&[1, 2, 2]);
        assert!(basis_orthonormality(&cat) < 1e-12);
    }
}
