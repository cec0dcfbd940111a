use std::sync::Arc;

use super::{Bimodule, BimoduleMap};
use crate::category::{hull_hom, ObjectId, ObjectList};
use crate::error::{invalid, Result};
use crate::modules::{HilbertModule, ModuleElement};
use crate::numc::{self, op_norm, CMatrix, Tolerance, C64};
use crate::report::{Check, Report, Worst};

fn require_composable(m: &HilbertModule, e: &Bimodule) -> Result<()> {
    if !Arc::ptr_eq(m.cat(), e.source()) {
        return invalid("module is not over the source category of the bimodule");
    }
    Ok(())
}

/// `M ⊗ E` as the compression of `⊕_i E(x_i)` by `E_⊕(P)`.
pub fn tensor_module_bimodule(m: &HilbertModule, e: &Bimodule) -> Result<HilbertModule> {
    require_composable(m, e)?;
    let base = ObjectList(m.base().iter().flat_map(|&x| e.module(x).base().iter().copied()).collect());
    let proj = e.apply_hull(m.base(), m.base(), m.proj());
    Ok(HilbertModule::from_parts(e.target().clone(), base, proj))
}

/// `m ⊗ e` with `m ∈ M(y)` and `e ∈ E(y)(z)`, scaled by `coeff`.
#[derive(Debug, Clone)]
pub struct SimpleTensor {
    pub coeff: C64,
    pub m: ModuleElement,
    pub e: ModuleElement,
}

/// Image of `m ⊗ e` in the projection model: `E_⊕(m) e`.
pub fn tensor_simple(m: &HilbertModule, e: &Bimodule, t: &SimpleTensor) -> ModuleElement {
    let col = e.apply_hull(&ObjectList::singleton(t.m.at), m.base(), &t.m.col) * &t.e.col * t.coeff;
    ModuleElement { at: t.e.at, col }
}

/// `⟨Σ s_i, Σ t_j⟩ = Σ conj(c_i) c_j ⟨e_i, E(⟨m_i, m_j⟩) e_j⟩`, computed from
/// the defining formula without forming the tensor module.
pub fn tensor_semi_inner(e: &Bimodule, lhs: &[SimpleTensor], rhs: &[SimpleTensor]) -> Result<CMatrix> {
    let (Some(l0), Some(r0)) = (lhs.first(), rhs.first()) else {
        return invalid("semi-inner product of an empty sum");
    };
    let b = e.target();
    let mut out = CMatrix::zeros(b.dim(l0.e.at), b.dim(r0.e.at));
    for s in lhs {
        for t in rhs {
            if s.e.at != l0.e.at || t.e.at != r0.e.at {
                return invalid("simple tensors in one sum must sit at the same object");
            }
            let a = s.m.col.adjoint() * &t.m.col;
            let ea = e.act_matrix(t.m.at, s.m.at, &a);
            out += s.e.col.adjoint() * ea * &t.e.col * (s.coeff.conj() * t.coeff);
        }
    }
    Ok(out)
}

/// The tensor product presented as a quotient of the algebraic span of the
/// generators `m_i ⊗ q_j`, independent of the projection model.
#[derive(Debug, Clone)]
pub struct QuotientTensor {
    /// `(Z, supp G)`; the generator `g` is represented by `G^{1/2} Δ_g`.
    pub module: HilbertModule,
    pub gram: CMatrix,
    /// `(i, j)`: module generator index, bimodule generator index.
    pub generators: Vec<(usize, usize)>,
    /// Dimension at each target object, from the rank of the trace form on
    /// all simple tensors of basis elements.
    pub dims: Vec<usize>,
}

fn slot_column(proj: &CMatrix, offsets: &[usize], i: usize) -> CMatrix {
    proj.columns(offsets[i], offsets[i + 1] - offsets[i]).into_owned()
}

/// Generators `(x_i, P Δ_i)` of a module.
pub(crate) fn module_generators(m: &HilbertModule) -> Vec<ModuleElement> {
    let off = m.offsets();
    m.base().iter().enumerate().map(|(i, &x)| ModuleElement { at: x, col: slot_column(m.proj(), &off, i) }).collect()
}

pub fn tensor_quotient_oracle(m: &HilbertModule, e: &Bimodule, tol: &Tolerance) -> Result<QuotientTensor> {
    require_composable(m, e)?;
    let b = e.target();
    let a = e.source();
    let mgens = module_generators(m);
    let qgens: Vec<Vec<ModuleElement>> = m.base().iter().map(|&x| module_generators(e.module(x))).collect();
    let mut gens = Vec::new();
    let mut z = Vec::new();
    for (i, qs) in qgens.iter().enumerate() {
        for (j, q) in qs.iter().enumerate() {
            gens.push((i, j));
            z.push(q.at);
        }
    }
    let z = ObjectList(z);
    let zoff = crate::category::list_offsets(b, &z);
    let mut gram = CMatrix::zeros(zoff[z.len()], zoff[z.len()]);
    for (r, &(i, j)) in gens.iter().enumerate() {
        for (c, &(ip, jp)) in gens.iter().enumerate() {
            let inner = mgens[i].col.adjoint() * &mgens[ip].col;
            let ea = e.act_matrix(mgens[ip].at, mgens[i].at, &inner);
            let blk = qgens[i][j].col.adjoint() * ea * &qgens[ip][jp].col;
            gram.view_mut((zoff[r], zoff[c]), blk.shape()).copy_from(&blk);
        }
    }
    let gram = numc::hermitian_part(&gram);
    let proj = numc::range_projection(&gram, tol);
    let module = HilbertModule::from_parts(b.clone(), z, proj);

    let mut dims = Vec::new();
    for w in b.object_ids() {
        // simple tensors of evaluation bases: m_k ∈ M(y), e_l ∈ E(y)(w)
        let mut family: Vec<(ObjectId, CMatrix, CMatrix)> = Vec::new();
        for y in a.object_ids() {
            let ebasis = e.module(y).eval_basis(w);
            for mk in m.eval_basis(y) {
                for el in &ebasis {
                    family.push((y, mk.clone(), el.clone()));
                }
            }
        }
        let n = family.len();
        let mut g = CMatrix::zeros(n, n);
        for (r, (y, mk, el)) in family.iter().enumerate() {
            for (c, (yp, mkp, elp)) in family.iter().enumerate() {
                let ea = e.act_matrix(*yp, *y, &(mk.adjoint() * mkp));
                g[(r, c)] = (el.adjoint() * ea * elp).trace();
            }
        }
        dims.push(numc::rank(&numc::hermitian_part(&g), tol));
    }
    Ok(QuotientTensor { module, gram, generators: gens, dims })
}

/// Cross-checks of the projection model of `M ⊗ E` against the quotient
/// presentation.
pub fn compare_tensor(m: &HilbertModule, e: &Bimodule, tol: &Tolerance) -> Result<Report> {
    let proj_model = tensor_module_bimodule(m, e)?;
    let oracle = tensor_quotient_oracle(m, e, tol)?;
    let mgens = module_generators(m);
    let mut cols = Vec::new();
    for (i, &x) in m.base().iter().enumerate() {
        for q in module_generators(e.module(x)) {
            let t = SimpleTensor { coeff: numc::ONE, m: mgens[i].clone(), e: q };
            cols.push(tensor_simple(m, e, &t).col);
        }
    }
    let w = numc::hstack(&cols, proj_model.ambient_dim());
    let wgram = w.adjoint() * &w;
    let scale = op_norm(&oracle.gram).max(1.0);
    let mut r = Report::new();
    let mut gap = 0usize;
    let mut gap_quot = 0usize;
    for y in e.target().object_ids() {
        gap += proj_model.eval_dim(y).abs_diff(oracle.dims[y.0]);
        gap_quot += oracle.module.eval_dim(y).abs_diff(oracle.dims[y.0]);
    }
    r.push(Check::new("dims_projection_vs_trace_form", gap as f64, 0.0));
    r.push(Check::new("dims_quotient_vs_trace_form", gap_quot as f64, 0.0));
    r.check("gram_agreement", op_norm(&(&wgram - &oracle.gram)), tol.threshold(scale));
    let (s1, _) = numc::hermitian_eigen(&numc::hermitian_part(&wgram));
    let (s2, _) = numc::hermitian_eigen(&oracle.gram);
    let mut s1: Vec<f64> = s1.iter().copied().collect();
    let mut s2: Vec<f64> = s2.iter().copied().collect();
    s1.sort_by(f64::total_cmp);
    s2.sort_by(f64::total_cmp);
    let spec = s1.iter().zip(&s2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    r.check("gram_spectrum_agreement", spec, tol.threshold(scale));
    let h = hull_hom(e.target(), &oracle.module.base().clone(), proj_model.base());
    r.check("generator_images_in_hull", h.residual(&w), tol.threshold(w.norm()));
    Ok(r)
}

/// `E ⊗ F: x ↦ E(x) ⊗ F`, `a ↦ F_⊕(E(a))`.
pub fn tensor_bimodule_bimodule(e: &Bimodule, f: &Bimodule) -> Result<Bimodule> {
    if !Arc::ptr_eq(e.target(), f.source()) {
        return invalid("bimodules are not composable");
    }
    let a = e.source();
    let ob_map: Vec<HilbertModule> = e.modules().iter().map(|m| tensor_module_bimodule(m, f)).collect::<Result<_>>()?;
    let mut mor_map = Vec::new();
    for x in a.object_ids() {
        for y in a.object_ids() {
            let (bx, by) = (e.module(x).base(), e.module(y).base());
            mor_map.push(e.images(x, y).iter().map(|t| f.apply_hull(bx, by, t)).collect());
        }
    }
    Ok(Bimodule::from_parts(a.clone(), f.target().clone(), ob_map, mor_map))
}

/// `T ⊗ id_F` for `T: E -> E'`.
pub fn tensor_map_left(t: &BimoduleMap, f: &Bimodule) -> Result<BimoduleMap> {
    let dom = tensor_bimodule_bimodule(&t.dom, f)?;
    let cod = tensor_bimodule_bimodule(&t.cod, f)?;
    let components = t
        .dom
        .source()
        .object_ids()
        .map(|x| f.apply_hull(t.dom.module(x).base(), t.cod.module(x).base(), &t.components[x.0]))
        .collect();
    Ok(BimoduleMap { dom, cod, components })
}

/// `id_E ⊗ S` for `S: F -> F'`.
pub fn tensor_map_right(e: &Bimodule, s: &BimoduleMap) -> Result<BimoduleMap> {
    let dom = tensor_bimodule_bimodule(e, &s.dom)?;
    let cod = tensor_bimodule_bimodule(e, &s.cod)?;
    let components = e
        .source()
        .object_ids()
        .map(|x| {
            let blocks: Vec<CMatrix> = e.module(x).base().iter().map(|&y| s.components[y.0].clone()).collect();
            cod.module(x).proj() * numc::block_diag(&blocks) * dom.module(x).proj()
        })
        .collect();
    Ok(BimoduleMap { dom, cod, components })
}

fn compression(dom: Bimodule, cod: Bimodule) -> Result<BimoduleMap> {
    let mut components = Vec::new();
    for x in dom.source().object_ids() {
        let (d, c) = (dom.module(x), cod.module(x));
        if d.base() != c.base() {
            return invalid("coherence map between modules with different bases");
        }
        components.push(c.proj() * d.proj());
    }
    Ok(BimoduleMap { dom, cod, components })
}

/// `α: (E ⊗ F) ⊗ G -> E ⊗ (F ⊗ G)`.
pub fn associator(e: &Bimodule, f: &Bimodule, g: &Bimodule) -> Result<BimoduleMap> {
    let dom = tensor_bimodule_bimodule(&tensor_bimodule_bimodule(e, f)?, g)?;
    let cod = tensor_bimodule_bimodule(e, &tensor_bimodule_bimodule(f, g)?)?;
    compression(dom, cod)
}

/// `λ: ι_A ⊗ E -> E`.
pub fn left_unitor(e: &Bimodule) -> Result<BimoduleMap> {
    let dom = tensor_bimodule_bimodule(&super::yoneda_bimodule(e.source()), e)?;
    compression(dom, e.clone())
}

/// `ρ: E ⊗ ι_B -> E`.
pub fn right_unitor(e: &Bimodule) -> Result<BimoduleMap> {
    let dom = tensor_bimodule_bimodule(e, &super::yoneda_bimodule(e.target()))?;
    compression(dom, e.clone())
}

/// `‖(1 ⊗ α)∘α∘(α ⊗ 1) - α∘α‖` over all components.
pub fn pentagon_residual(e: &Bimodule, f: &Bimodule, g: &Bimodule, h: &Bimodule) -> Result<f64> {
    let ef = tensor_bimodule_bimodule(e, f)?;
    let gh = tensor_bimodule_bimodule(g, h)?;
    let fg = tensor_bimodule_bimodule(f, g)?;
    let lhs = tensor_map_right(e, &associator(f, g, h)?)?
        .compose(&associator(e, &fg, h)?)
        .compose(&tensor_map_left(&associator(e, f, g)?, h)?);
    let rhs = associator(e, f, &gh)?.compose(&associator(&ef, g, h)?);
    Ok(lhs.distance(&rhs))
}

/// `‖(1 ⊗ λ)∘α - ρ ⊗ 1‖` on `(E ⊗ ι) ⊗ F`.
pub fn triangle_residual(e: &Bimodule, f: &Bimodule) -> Result<f64> {
    let iota = super::yoneda_bimodule(e.target());
    let lhs = tensor_map_right(e, &left_unitor(f)?)?.compose(&associator(e, &iota, f)?);
    let rhs = tensor_map_left(&right_unitor(e)?, f)?;
    Ok(lhs.distance(&rhs))
}

/// Unitarity of all coherence maps plus the pentagon and triangle residuals.
pub fn coherence_report(bimods: [&Bimodule; 4], tol: &Tolerance) -> Result<Report> {
    let [e, f, g, h] = bimods;
    let mut r = Report::new();
    let mut unitary = Worst::new();
    for map in [associator(e, f, g)?, left_unitor(e)?, right_unitor(e)?] {
        for c in map.unitarity(tol).checks {
            unitary.observe(c.residual, c.threshold);
        }
    }
    r.push(unitary.check("coherence_maps_unitary"));
    r.check("pentagon", pentagon_residual(e, f, g, h)?, tol.threshold(1.0));
    r.check("triangle", triangle_residual(e, f)?, tol.threshold(1.0));
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bimodules::{check_nondegenerate, verify_bimodule, yoneda_bimodule};
    use crate::category::full_matrix_category;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tensor_with_yoneda_is_identity() {
        let tol = Tolerance::DEFAULT;
        let cat = Arc::new(full_matrix_category(&[2, 1]));
        let y = yoneda_bimodule(&cat);
        let mut p = CMatrix::zeros(3, 3);
        p[(0, 0)] = numc::ONE;
        p[(2, 2)] = numc::ONE;
        let m = HilbertModule::new(cat.clone(), ObjectList(vec![ObjectId(0), ObjectId(1)]), p, &tol).unwrap();
        let t = tensor_module_bimodule(&m, &y).unwrap();
        assert_eq!(t.base(), m.base());
        assert!(op_norm(&(t.proj() - m.proj())) < 1e-12);
        let r = compare_tensor(&m, &y, &tol).unwrap();
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn yoneda_coherence() {
        let tol = Tolerance::DEFAULT;
        let cat = Arc::new(full_matrix_category(&[2, 1]));
        let y = yoneda_bimodule(&cat);
        let yy = tensor_bimodule_bimodule(&y, &y).unwrap();
        assert!(verify_bimodule(&yy, &tol).passed());
        assert!(check_nondegenerate(&yy, &tol).nondegenerate());
        let r = coherence_report([&y, &y, &y, &y], &tol).unwrap();
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn balanced_relation_holds() {
        let cat = Arc::new(full_matrix_category(&[2]));
        let y = yoneda_bimodule(&cat);
        let x = ObjectId(0);
        let m = HilbertModule::free(&cat, ObjectList(vec![x, x]));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = cat.random_morphism(&mut rng, x, x);
        let mm = m.random_element(&mut rng, x);
        let ee = y.module(x).random_element(&mut rng, x);
        // m·a ⊗ e - m ⊗ a·e has zero semi-norm
        let s1 = SimpleTensor { coeff: numc::ONE, m: m.act(&mm, &a).unwrap(), e: ee.clone() };
        let s2 = SimpleTensor { coeff: -numc::ONE, m: mm, e: ModuleElement { at: x, col: y.act(&a).block * &ee.col } };
        let v = [s1, s2];
        let n = tensor_semi_inner(&y, &v, &v).unwrap();
        assert!(op_norm(&n) < 1e-10);
    }
}
