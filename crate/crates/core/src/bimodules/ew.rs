use std::sync::Arc;

use super::tensor::{module_generators, tensor_module_bimodule, tensor_quotient_oracle};
use super::{Bimodule, BimoduleMap};
use crate::category::{hull_hom, ObjectList};
use crate::error::{invalid, Result};
use crate::modules::{HilbertModule, ModuleOperator};
use crate::numc::{self, op_norm, CMatrix, Tolerance};
use crate::report::{Check, Report};

/// `Ψ_M: M ⊗ E -> F(M)` for `F = - ⊗ E`, from the generator presentation of
/// `M ⊗ E` to the module `F(M)` built by applying `F` to `M`'s projection.
#[derive(Debug, Clone)]
pub struct EwMap {
    pub quotient: HilbertModule,
    pub target: HilbertModule,
    pub psi: ModuleOperator,
    pub report: Report,
}

/// `E` must be non-degenerate, so that `- ⊗ E` is a unital functor.
pub fn ew_map(m: &HilbertModule, e: &Bimodule, tol: &Tolerance) -> Result<EwMap> {
    let nd = super::check_nondegenerate(e, tol);
    if !nd.nondegenerate() {
        return invalid("ew_map needs a non-degenerate bimodule");
    }
    let oracle = tensor_quotient_oracle(m, e, tol)?;
    let target = tensor_module_bimodule(m, e)?;
    let mgens = module_generators(m);
    let mut cols = Vec::new();
    for (i, &x) in m.base().iter().enumerate() {
        // F(ε_m) on h_x ⊗ E = E(x), compressed by F(id_x)
        let f_eps = target.proj()
            * e.apply_hull(&ObjectList::singleton(x), m.base(), &mgens[i].col)
            * e.act_matrix(x, x, &e.source().identity(x).mat);
        for q in module_generators(e.module(x)) {
            cols.push(&f_eps * &q.col);
        }
    }
    let w = numc::hstack(&cols, target.ambient_dim());
    let psi = &w * numc::pinv_power(&oracle.gram, 0.5, tol)?;
    let scale = op_norm(&oracle.gram).max(1.0);
    let mut report = Report::new();
    report.check("inner_products_match", op_norm(&(w.adjoint() * &w - &oracle.gram)), tol.threshold(scale));
    report.check("isometry", op_norm(&(psi.adjoint() * &psi - oracle.module.proj())), tol.threshold(1.0));
    report.check("coisometry", op_norm(&(&psi * psi.adjoint() - target.proj())), tol.threshold(1.0));
    let mut gap = 0usize;
    for z in e.target().object_ids() {
        let imgs: Vec<CMatrix> = oracle.module.eval_basis(z).iter().map(|v| &psi * v).collect();
        let rank = numc::orthonormal_span(&imgs, tol).map(|v| v.len()).unwrap_or(0);
        gap += target.eval_dim(z).abs_diff(rank);
    }
    report.push(Check::new("surjective_by_rank", gap as f64, 0.0));
    let h = hull_hom(e.target(), oracle.module.base(), target.base());
    report.check("in_hull", h.residual(&psi), tol.threshold(psi.norm()));
    let psi = ModuleOperator { dom: oracle.module.clone(), cod: target.clone(), block: psi };
    Ok(EwMap { quotient: oracle.module, target, psi, report })
}

/// Extension of a transformation `τ: E -> E'` (given on representables) to
/// `τ_M: M ⊗ E -> M ⊗ E'`, by two routes that are compared.
#[derive(Debug, Clone)]
pub struct WhiskerExtension {
    /// Blockwise `Π'_M (⊕ τ_{x_i}) Π_M`.
    pub blockwise: ModuleOperator,
    /// `U V⁺` with `V`, `U` the images of `m_i ⊗ q_j` and `m_i ⊗ τ(q_j)`.
    pub on_generators: ModuleOperator,
    pub report: Report,
}

pub fn whisker_transform(tau: &BimoduleMap, m: &HilbertModule, tol: &Tolerance) -> Result<WhiskerExtension> {
    let (e, ep) = (&tau.dom, &tau.cod);
    if !Arc::ptr_eq(m.cat(), e.source()) {
        return invalid("module is not over the source category of the transformation");
    }
    let nat = tau.naturality(tol);
    if !nat.pass {
        return invalid(format!("transformation is not natural (residual {:.3e})", nat.residual));
    }
    let dom = tensor_module_bimodule(m, e)?;
    let cod = tensor_module_bimodule(m, ep)?;
    let blocks: Vec<CMatrix> = m.base().iter().map(|&x| tau.components[x.0].clone()).collect();
    let blockwise = cod.proj() * numc::block_diag(&blocks) * dom.proj();

    let mgens = module_generators(m);
    let mut v = Vec::new();
    let mut u = Vec::new();
    for (i, &x) in m.base().iter().enumerate() {
        let single = ObjectList::singleton(x);
        let fe = e.apply_hull(&single, m.base(), &mgens[i].col);
        let fep = ep.apply_hull(&single, m.base(), &mgens[i].col);
        for q in module_generators(e.module(x)) {
            v.push(&fe * &q.col);
            u.push(&fep * &tau.components[x.0] * &q.col);
        }
    }
    let vm = numc::hstack(&v, dom.ambient_dim());
    let um = numc::hstack(&u, cod.ambient_dim());
    let on_generators = &um * numc::pinv(&vm, tol);

    let scale = op_norm(&blockwise).max(1.0);
    let mut report = Report::new();
    report.check("routes_agree", op_norm(&(&blockwise - &on_generators)), tol.threshold(scale));
    report.check("generator_images", op_norm(&(&blockwise * &vm - &um)), tol.threshold(scale * op_norm(&vm)));
    report.check("norm_bound", (op_norm(&blockwise) - tau.norm()).max(0.0), tol.threshold(tau.norm()));
    Ok(WhiskerExtension {
        blockwise: ModuleOperator { dom: dom.clone(), cod: cod.clone(), block: blockwise },
        on_generators: ModuleOperator { dom, cod, block: on_generators },
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bimodules::yoneda_bimodule;
    use crate::category::{full_matrix_category, ObjectId};

    #[test]
    fn ew_on_yoneda_is_unitary() {
        let tol = Tolerance::DEFAULT;
        let cat = Arc::new(full_matrix_category(&[2, 1]));
        let y = yoneda_bimodule(&cat);
        let mut p = CMatrix::zeros(3, 3);
        p[(1, 1)] = numc::ONE;
        p[(2, 2)] = numc::ONE;
        let m = HilbertModule::new(cat.clone(), ObjectList(vec![ObjectId(0), ObjectId(1)]), p, &tol).unwrap();
        let r = ew_map(&m, &y, &tol).unwrap();
        assert!(r.report.passed(), "{}", r.report);
    }

    #[test]
    fn identity_transformation_extends_to_identity() {
        let tol = Tolerance::DEFAULT;
        let cat = Arc::new(full_matrix_category(&[2]));
        let y = yoneda_bimodule(&cat);
        let id = BimoduleMap {
            dom: y.clone(),
            cod: y.clone(),
            components: y.modules().iter().map(|m| m.proj().clone()).collect(),
        };
        let m = HilbertModule::free(&cat, ObjectList(vec![ObjectId(0), ObjectId(0)]));
        let w = whisker_transform(&id, &m, &tol).unwrap();
        assert!(w.report.passed(), "{}", w.report);
        assert!(op_norm(&(&w.blockwise.block - w.blockwise.dom.proj())) < 1e-10);
    }
}
