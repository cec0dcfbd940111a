//! Hilbert modules over a concrete C*-category in finitely generated
//! projective form: a base list `X` and a projection `P` in the hull
//! endomorphisms of `X`. An element at `y` is a block column `c` with
//! `c_i ∈ A(y, x_i)` and `P c = c`; an operator is a block `T` with `Q T P = T`.

use rand::Rng;
use std::sync::Arc;

use crate::category::{
    hull_hom, list_dim, list_offsets, AdditiveHull, CStarCategory, HomSpace, Morphism, ObjectId, ObjectList,
};
use crate::error::{invalid, Result};
use crate::numc::{self, op_norm, CMatrix, Tolerance};
use crate::report::{Check, Report};

#[derive(Debug, Clone)]
pub struct HilbertModule {
    cat: Arc<CStarCategory>,
    base: ObjectList,
    proj: CMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModuleElement {
    pub at: ObjectId,
    pub col: CMatrix,
}

impl HilbertModule {
    pub fn new(cat: Arc<CStarCategory>, base: ObjectList, proj: CMatrix, tol: &Tolerance) -> Result<Self> {
        for &x in base.iter() {
            cat.check_id(x)?;
        }
        numc::validate(&proj)?;
        let n = list_dim(&cat, &base);
        if proj.shape() != (n, n) {
            return invalid(format!("module projection has shape {:?}, base needs {n}x{n}", proj.shape()));
        }
        let pr = numc::projection_residual(&proj);
        if !tol.accepts(pr, op_norm(&proj)) {
            return invalid(format!("module projection is not a projection (residual {pr:.3e})"));
        }
        let h = hull_hom(&cat, &base, &base);
        let r = h.residual(&proj);
        if !tol.accepts(r, proj.norm()) {
            return invalid(format!("module projection is not a hull endomorphism (residual {r:.3e})"));
        }
        Ok(HilbertModule { cat, base, proj })
    }

    /// Trusted constructor; callers guarantee the invariants.
    pub(crate) fn from_parts(cat: Arc<CStarCategory>, base: ObjectList, proj: CMatrix) -> Self {
        HilbertModule { cat, base, proj }
    }

    pub fn representable(cat: &Arc<CStarCategory>, x: ObjectId) -> Self {
        let d = cat.dim(x);
        HilbertModule { cat: cat.clone(), base: ObjectList::singleton(x), proj: CMatrix::identity(d, d) }
    }

    pub fn free(cat: &Arc<CStarCategory>, base: ObjectList) -> Self {
        let n = list_dim(cat, &base);
        HilbertModule { cat: cat.clone(), base, proj: CMatrix::identity(n, n) }
    }

    pub fn zero(cat: &Arc<CStarCategory>) -> Self {
        HilbertModule { cat: cat.clone(), base: ObjectList(Vec::new()), proj: CMatrix::zeros(0, 0) }
    }

    /// The submodule of the free module on `base` generated by the given
    /// columns; its projection is the range projection of the generators.
    pub fn from_generators(
        cat: &Arc<CStarCategory>,
        base: ObjectList,
        generators: &[ModuleElement],
        tol: &Tolerance,
    ) -> Result<Self> {
        let free = HilbertModule::free(cat, base);
        let n = free.ambient_dim();
        let mut cols = Vec::new();
        for g in generators {
            cat.check_id(g.at)?;
            if g.col.shape() != (n, cat.dim(g.at)) {
                return invalid(format!("generator at {} has shape {:?}", g.at, g.col.shape()));
            }
            let h = hull_hom(cat, &ObjectList::singleton(g.at), &free.base);
            let r = h.residual(&g.col);
            if !tol.accepts(r, g.col.norm()) {
                return invalid(format!("generator at {} is not a hull morphism (residual {r:.3e})", g.at));
            }
            cols.push(g.col.clone());
        }
        let proj = numc::range_projection(&numc::hstack(&cols, n), tol);
        HilbertModule::new(cat.clone(), free.base, proj, tol)
    }

    pub fn cat(&self) -> &Arc<CStarCategory> {
        &self.cat
    }

    pub fn base(&self) -> &ObjectList {
        &self.base
    }

    pub fn proj(&self) -> &CMatrix {
        &self.proj
    }

    pub fn ambient_dim(&self) -> usize {
        self.proj.nrows()
    }

    pub fn offsets(&self) -> Vec<usize> {
        list_offsets(&self.cat, &self.base)
    }

    pub fn same_category(&self, other: &HilbertModule) -> bool {
        Arc::ptr_eq(&self.cat, &other.cat)
    }

    /// Hull columns `[y] -> base`, before projecting.
    pub fn columns(&self, y: ObjectId) -> HomSpace {
        hull_hom(&self.cat, &ObjectList::singleton(y), &self.base)
    }

    /// Frobenius-orthonormal basis of `E(y)`.
    pub fn eval_basis(&self, y: ObjectId) -> Vec<CMatrix> {
        let imgs: Vec<CMatrix> = self.columns(y).basis().iter().map(|b| &self.proj * b).collect();
        numc::orthonormal_span(&imgs, &Tolerance::DEFAULT).unwrap_or_default()
    }

    pub fn eval_dim(&self, y: ObjectId) -> usize {
        self.eval_basis(y).len()
    }

    /// Projects `col` into the module; fails if it moved by more than the tolerance.
    pub fn element(&self, at: ObjectId, col: CMatrix, tol: &Tolerance) -> Result<ModuleElement> {
        self.cat.check_id(at)?;
        numc::validate(&col)?;
        if col.shape() != (self.ambient_dim(), self.cat.dim(at)) {
            return invalid(format!("element at {at} has shape {:?}", col.shape()));
        }
        let hr = self.columns(at).residual(&col);
        let projected = &self.proj * &col;
        let pr = (&projected - &col).norm();
        if !tol.accepts(hr.max(pr), col.norm()) {
            return invalid(format!("column is not an element of the module (residual {:.3e})", hr.max(pr)));
        }
        Ok(ModuleElement { at, col: projected })
    }

    fn check_element(&self, e: &ModuleElement) -> Result<()> {
        if e.col.shape() != (self.ambient_dim(), self.cat.dim(e.at)) {
            return invalid(format!(
                "element of shape {:?} does not belong to a module with ambient dimension {}",
                e.col.shape(),
                self.ambient_dim()
            ));
        }
        Ok(())
    }

    /// `⟨e, f⟩ = Σ e_i* f_i ∈ A(f.at, e.at)`.
    pub fn inner(&self, e: &ModuleElement, f: &ModuleElement) -> Result<Morphism> {
        self.check_element(e)?;
        self.check_element(f)?;
        Ok(Morphism { src: f.at, dst: e.at, mat: e.col.adjoint() * &f.col })
    }

    /// `e · a` for `a: z -> e.at`.
    pub fn act(&self, e: &ModuleElement, a: &Morphism) -> Result<ModuleElement> {
        self.check_element(e)?;
        if a.dst != e.at {
            return invalid(format!("cannot act by {}->{} on an element at {}", a.src, a.dst, e.at));
        }
        Ok(ModuleElement { at: a.src, col: &e.col * &a.mat })
    }

    /// `‖e‖ = ‖⟨e, e⟩‖^{1/2}`.
    pub fn norm(&self, e: &ModuleElement) -> f64 {
        op_norm(&e.col)
    }

    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R, y: ObjectId) -> ModuleElement {
        ModuleElement { at: y, col: &self.proj * self.columns(y).random(rng) }
    }

    pub fn identity(&self) -> ModuleOperator {
        ModuleOperator { dom: self.clone(), cod: self.clone(), block: self.proj.clone() }
    }
}

#[derive(Debug, Clone)]
pub struct ModuleOperator {
    pub dom: HilbertModule,
    pub cod: HilbertModule,
    pub block: CMatrix,
}

impl ModuleOperator {
    pub fn new(dom: HilbertModule, cod: HilbertModule, block: CMatrix, tol: &Tolerance) -> Result<Self> {
        if !dom.same_category(&cod) {
            return invalid("operator between modules over different categories");
        }
        numc::validate(&block)?;
        if block.shape() != (cod.ambient_dim(), dom.ambient_dim()) {
            return invalid(format!("operator block has shape {:?}", block.shape()));
        }
        let h = hull_hom(dom.cat(), dom.base(), cod.base());
        let r = h.residual(&block);
        if !tol.accepts(r, block.norm()) {
            return invalid(format!("operator block is not a hull morphism (residual {r:.3e})"));
        }
        let c = (cod.proj() * &block * dom.proj() - &block).norm();
        if !tol.accepts(c, block.norm()) {
            return invalid(format!("operator block is not compressed by the projections (residual {c:.3e})"));
        }
        Ok(ModuleOperator { dom, cod, block })
    }

    /// `Q T P` for a trusted hull block `T`.
    pub fn compressed(dom: HilbertModule, cod: HilbertModule, block: &CMatrix) -> Self {
        let block = cod.proj() * block * dom.proj();
        ModuleOperator { dom, cod, block }
    }

    pub fn zero(dom: HilbertModule, cod: HilbertModule) -> Self {
        let block = CMatrix::zeros(cod.ambient_dim(), dom.ambient_dim());
        ModuleOperator { dom, cod, block }
    }

    pub fn apply(&self, e: &ModuleElement) -> ModuleElement {
        ModuleElement { at: e.at, col: &self.block * &e.col }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &ModuleOperator) -> Result<ModuleOperator> {
        if other.cod.ambient_dim() != self.dom.ambient_dim() || other.cod.base() != self.dom.base() {
            return invalid("operator composition: codomain and domain differ");
        }
        Ok(ModuleOperator { dom: other.dom.clone(), cod: self.cod.clone(), block: &self.block * &other.block })
    }

    pub fn adjoint(&self) -> ModuleOperator {
        ModuleOperator { dom: self.cod.clone(), cod: self.dom.clone(), block: self.block.adjoint() }
    }

    pub fn norm(&self) -> f64 {
        op_norm(&self.block)
    }

    /// `T*T = id` and `TT* = id` residuals.
    pub fn unitarity(&self, tol: &Tolerance) -> Report {
        let mut r = Report::new();
        r.check("isometry", op_norm(&(self.block.adjoint() * &self.block - self.dom.proj())), tol.threshold(1.0));
        r.check("coisometry", op_norm(&(&self.block * self.block.adjoint() - self.cod.proj())), tol.threshold(1.0));
        r
    }
}

/// `θ^{f,e}: e' ↦ f·⟨e, e'⟩` for `e ∈ E(x)`, `f ∈ F(x)`.
pub fn single_rank(
    f_module: &HilbertModule,
    e_module: &HilbertModule,
    f: &ModuleElement,
    e: &ModuleElement,
) -> Result<ModuleOperator> {
    if f.at != e.at {
        return invalid(format!("single-rank operator needs elements at one object, got {} and {}", f.at, e.at));
    }
    f_module.check_element(f)?;
    e_module.check_element(e)?;
    Ok(ModuleOperator { dom: e_module.clone(), cod: f_module.clone(), block: &f.col * e.col.adjoint() })
}

/// `ε_f: h_x -> F`, `a ↦ f·a`.
pub fn yoneda_epsilon(f_module: &HilbertModule, f: &ModuleElement) -> Result<ModuleOperator> {
    f_module.check_element(f)?;
    Ok(ModuleOperator {
        dom: HilbertModule::representable(f_module.cat(), f.at),
        cod: f_module.clone(),
        block: f.col.clone(),
    })
}

/// `η(T) = T(id_x)` for `T: h_x -> F`.
pub fn yoneda_eta(t: &ModuleOperator) -> Result<ModuleElement> {
    let base = t.dom.base();
    let d = t.dom.ambient_dim();
    if base.len() != 1 || t.dom.proj() != &CMatrix::identity(d, d) {
        return invalid("yoneda_eta needs an operator out of a representable module");
    }
    Ok(ModuleElement { at: base.0[0], col: t.block.clone() })
}

/// Block matrix `[⟨e_i, e_j⟩]` over the list of the elements' objects.
pub fn gram_matrix(module: &HilbertModule, elements: &[ModuleElement]) -> Result<(ObjectList, CMatrix)> {
    for e in elements {
        module.check_element(e)?;
    }
    let cols: Vec<CMatrix> = elements.iter().map(|e| e.col.clone()).collect();
    let c = numc::hstack(&cols, module.ambient_dim());
    Ok((ObjectList(elements.iter().map(|e| e.at).collect()), c.adjoint() * c))
}

/// `⊕ E_i` with inclusions `ι_i`.
pub fn direct_sum(modules: &[HilbertModule]) -> Result<(HilbertModule, Vec<ModuleOperator>)> {
    let Some(first) = modules.first() else {
        return invalid("direct sum of no modules needs a category; use HilbertModule::zero");
    };
    if modules.iter().any(|m| !m.same_category(first)) {
        return invalid("direct sum of modules over different categories");
    }
    let base = ObjectList(modules.iter().flat_map(|m| m.base().iter().copied()).collect());
    let proj = numc::block_diag(&modules.iter().map(|m| m.proj().clone()).collect::<Vec<_>>());
    let sum = HilbertModule::from_parts(first.cat().clone(), base, proj);
    let total = sum.ambient_dim();
    let mut off = 0;
    let mut incl = Vec::new();
    for m in modules {
        let mut block = CMatrix::zeros(total, m.ambient_dim());
        block.view_mut((off, 0), m.proj().shape()).copy_from(m.proj());
        off += m.ambient_dim();
        incl.push(ModuleOperator { dom: m.clone(), cod: sum.clone(), block });
    }
    Ok((sum, incl))
}

/// The same presentation read over the additive hull.
pub fn extend_to_hull(module: &HilbertModule, hull: &AdditiveHull) -> Result<HilbertModule> {
    if !Arc::ptr_eq(module.cat(), &hull.base) {
        return invalid("hull was built from a different category");
    }
    let base = ObjectList(module.base().iter().map(|&x| hull.singleton(x)).collect());
    Ok(HilbertModule::from_parts(hull.cat.clone(), base, module.proj().clone()))
}

/// Element of the hull extension at a list, from elements at its entries.
pub fn hull_element(hull: &AdditiveHull, list: ObjectId, parts: &[ModuleElement]) -> Result<ModuleElement> {
    let entries = hull.list(list);
    if entries.len() != parts.len() || entries.iter().zip(parts).any(|(x, p)| *x != p.at) {
        return invalid("parts do not match the list entries");
    }
    let rows = parts.first().map(|p| p.col.nrows()).unwrap_or(0);
    Ok(ModuleElement { at: list, col: numc::hstack(&parts.iter().map(|p| p.col.clone()).collect::<Vec<_>>(), rows) })
}

/// `φ: ⊕_{x∈X} h_x -> E` with block `P`; `φφ* = id_E`, `φ*φ = P`.
pub fn free_cover(module: &HilbertModule) -> (HilbertModule, ModuleOperator) {
    let free = HilbertModule::free(module.cat(), module.base().clone());
    let phi = ModuleOperator { dom: free.clone(), cod: module.clone(), block: module.proj().clone() };
    (free, phi)
}

#[derive(Debug, Clone)]
pub struct ProjectionSplit {
    pub kernel: HilbertModule,
    pub image: HilbertModule,
    /// `E -> ker ⊕ im`.
    pub unitary: ModuleOperator,
}

pub fn split_projection(p: &ModuleOperator, tol: &Tolerance) -> Result<ProjectionSplit> {
    let e = &p.dom;
    if p.cod.base() != e.base() || p.cod.proj() != e.proj() {
        return invalid("split_projection needs an endomorphism");
    }
    if !numc::is_projection(&p.block, tol) {
        return invalid(format!("operator is not a projection (residual {:.3e})", numc::projection_residual(&p.block)));
    }
    let image = HilbertModule::from_parts(e.cat().clone(), e.base().clone(), p.block.clone());
    let kernel = HilbertModule::from_parts(e.cat().clone(), e.base().clone(), e.proj() - &p.block);
    let (sum, _) = direct_sum(&[kernel.clone(), image.clone()])?;
    let block = numc::vstack(&[e.proj() - &p.block, p.block.clone()], e.ambient_dim());
    Ok(ProjectionSplit { kernel, image, unitary: ModuleOperator { dom: e.clone(), cod: sum, block } })
}

/// Inner-product preservation, surjectivity at every object by rank, and
/// the conclusion that the adjoint inverts the operator.
pub fn unitary_criterion(t: &ModuleOperator, tol: &Tolerance) -> Report {
    let mut r = Report::new();
    r.check("preserves_inner_products", op_norm(&(t.block.adjoint() * &t.block - t.dom.proj())), tol.threshold(1.0));
    let mut gap = 0usize;
    for y in t.dom.cat().object_ids() {
        let imgs: Vec<CMatrix> = t.dom.eval_basis(y).iter().map(|c| &t.block * c).collect();
        let rank = numc::orthonormal_span(&imgs, tol).map(|v| v.len()).unwrap_or(0);
        gap += t.cod.eval_dim(y).abs_diff(rank);
    }
    r.push(Check::new("surjective_by_rank", gap as f64, 0.0));
    r.check("adjoint_is_inverse", op_norm(&(&t.block * t.block.adjoint() - t.cod.proj())), tol.threshold(1.0));
    r
}

/// Smallest eigenvalue of the Hermitian part, clipped at zero from above:
/// how far `m` is from being positive.
pub fn psd_deficit(m: &CMatrix) -> f64 {
    (-numc::min_eigenvalue(m)).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::category::{additive_hull, full_matrix_category};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup() -> Arc<CStarCategory> {
        Arc::new(full_matrix_category(&[2, 1]))
    }

    #[test]
    fn representable_dimension_and_inner() {
        let cat = setup();
        let x = ObjectId(0);
        let h = HilbertModule::representable(&cat, x);
        assert_eq!(h.eval_dim(x), cat.hom_dim(x, x));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = cat.random_morphism(&mut rng, ObjectId(1), x);
        let b = cat.random_morphism(&mut rng, ObjectId(1), x);
        let ea = ModuleElement { at: a.src, col: a.mat.clone() };
        let eb = ModuleElement { at: b.src, col: b.mat.clone() };
        let ip = h.inner(&ea, &eb).unwrap();
        assert!((ip.mat - a.mat.adjoint() * &b.mat).norm() < 1e-12);
    }

    #[test]
    fn inner_rejects_foreign_element() {
        let cat = setup();
        let h0 = HilbertModule::representable(&cat, ObjectId(0));
        let h1 = HilbertModule::representable(&cat, ObjectId(1));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let e = h1.random_element(&mut rng, ObjectId(0));
        let f = h0.random_element(&mut rng, ObjectId(0));
        assert!(h0.inner(&e, &f).is_err());
    }

    #[test]
    fn act_is_functorial() {
        let cat = setup();
        let tol = Tolerance::DEFAULT;
        let m = HilbertModule::free(&cat, ObjectList(vec![ObjectId(0), ObjectId(1)]));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let e = m.random_element(&mut rng, ObjectId(0));
        let id = cat.identity(ObjectId(0));
        assert_eq!(m.act(&e, &id).unwrap(), e);
        let a = cat.random_morphism(&mut rng, ObjectId(1), ObjectId(0));
        let b = cat.random_morphism(&mut rng, ObjectId(0), ObjectId(1));
        let lhs = m.act(&m.act(&e, &a).unwrap(), &b).unwrap();
        let rhs = m.act(&e, &cat.compose(&a, &b, &tol).unwrap()).unwrap();
        assert!((lhs.col - rhs.col).norm() < 1e-12);
        assert!(m.act(&e, &b).is_err());
    }

    #[test]
    fn direct_sum_of_one_is_itself() {
        let cat = setup();
        let h = HilbertModule::representable(&cat, ObjectId(1));
        let (s, incl) = direct_sum(std::slice::from_ref(&h)).unwrap();
        assert_eq!(s.proj(), h.proj());
        assert_eq!(incl[0].block, CMatrix::identity(1, 1));
    }

    #[test]
    fn split_of_identity_and_zero() {
        let cat = setup();
        let tol = Tolerance::DEFAULT;
        let m = HilbertModule::free(&cat, ObjectList(vec![ObjectId(0), ObjectId(1)]));
        let s = split_projection(&m.identity(), &tol).unwrap();
        assert_eq!(s.kernel.eval_dim(ObjectId(0)), 0);
        assert_eq!(s.image.eval_dim(ObjectId(0)), m.eval_dim(ObjectId(0)));
        let z = ModuleOperator::zero(m.clone(), m.clone());
        let s = split_projection(&z, &tol).unwrap();
        assert_eq!(s.image.eval_dim(ObjectId(1)), 0);
        assert!(s.unitary.unitarity(&tol).passed());
        let not = ModuleOperator { dom: m.clone(), cod: m.clone(), block: m.proj() * numc::c64(2.0, 0.0) };
        assert!(split_projection(&not, &tol).is_err());
    }

    #[test]
    fn bad_projection_rejected() {
        let cat = setup();
        let tol = Tolerance::DEFAULT;
        let p = CMatrix::identity(2, 2) * numc::c64(0.5, 0.0);
        assert!(HilbertModule::new(cat.clone(), ObjectList::singleton(ObjectId(0)), p, &tol).is_err());
    }

    #[test]
    fn hull_extension_at_singletons() {
        let cat = setup();
        let hull = additive_hull(&cat, &[]).unwrap();
        let m = HilbertModule::free(&cat, ObjectList(vec![ObjectId(0), ObjectId(1)]));
        let mh = extend_to_hull(&m, &hull).unwrap();
        for x in cat.object_ids() {
            assert_eq!(mh.eval_dim(hull.singleton(x)), m.eval_dim(x));
        }
        let full: usize = cat.object_ids().map(|x| m.eval_dim(x)).sum();
        assert_eq!(mh.eval_dim(hull.full()), full);
    }

    #[test]
    fn free_module_cover_is_identity() {
        let cat = setup();
        let m = HilbertModule::free(&cat, ObjectList(vec![ObjectId(1), ObjectId(0)]));
        let (_, phi) = free_cover(&m);
        assert_eq!(phi.block, CMatrix::identity(3, 3));
    }
}
