//! Right Hilbert bimodules: *-functors from a category into the Hilbert
//! modules over another, with tensor products, coherence maps and the Morita
//! and Eilenberg–Watts constructions.

mod ew;
mod morita;
mod tensor;

pub use ew::{ew_map, whisker_transform, EwMap, WhiskerExtension};
pub use morita::{
    check_imprimitivity, conjugate_bimodule, mat_equivalence, morita_phi, morita_psi, BiHilbertData, Conjugate,
    ImprimitivityReport, MatEquivalence, MoritaMap,
};
pub use tensor::{
    associator, coherence_report, compare_tensor, left_unitor, pentagon_residual, right_unitor,
    tensor_bimodule_bimodule, tensor_map_left, tensor_map_right, tensor_module_bimodule, tensor_quotient_oracle,
    tensor_semi_inner, tensor_simple, triangle_residual, QuotientTensor, SimpleTensor,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

use crate::category::{hull_hom, list_offsets, CStarCategory, Morphism, ObjectId, ObjectList};
use crate::error::{invalid, Result};
use crate::modules::{direct_sum, HilbertModule, ModuleOperator};
use crate::numc::{self, op_norm, CMatrix, Tolerance, C64};
use crate::report::{Check, Report, Worst};

#[derive(Debug, Clone)]
pub struct Bimodule {
    source: Arc<CStarCategory>,
    target: Arc<CStarCategory>,
    ob_map: Vec<HilbertModule>,
    // indexed by src * n + dst of the source; images of the hom basis
    mor_map: Vec<Vec<CMatrix>>,
}

impl Bimodule {
    pub fn new(
        source: Arc<CStarCategory>,
        target: Arc<CStarCategory>,
        ob_map: Vec<HilbertModule>,
        mor_map: Vec<Vec<CMatrix>>,
        tol: &Tolerance,
    ) -> Result<Self> {
        let n = source.num_objects();
        if ob_map.len() != n {
            return invalid(format!("bimodule has {} modules for {n} objects", ob_map.len()));
        }
        if let Some(m) = ob_map.iter().find(|m| !Arc::ptr_eq(m.cat(), &target)) {
            return invalid(format!("module over base {:?} is not over the target category", m.base()));
        }
        if mor_map.len() != n * n {
            return invalid(format!("bimodule action lists {} hom-spaces, expected {}", mor_map.len(), n * n));
        }
        for x in source.object_ids() {
            for y in source.object_ids() {
                let imgs = &mor_map[x.0 * n + y.0];
                if imgs.len() != source.hom_dim(x, y) {
                    return invalid(format!(
                        "action on hom({x}, {y}) has {} images for a {}-dimensional space",
                        imgs.len(),
                        source.hom_dim(x, y)
                    ));
                }
                for t in imgs {
                    ModuleOperator::new(ob_map[x.0].clone(), ob_map[y.0].clone(), t.clone(), tol)?;
                }
            }
        }
        Ok(Bimodule { source, target, ob_map, mor_map })
    }

    pub(crate) fn from_parts(
        source: Arc<CStarCategory>,
        target: Arc<CStarCategory>,
        ob_map: Vec<HilbertModule>,
        mor_map: Vec<Vec<CMatrix>>,
    ) -> Self {
        Bimodule { source, target, ob_map, mor_map }
    }

    /// Same data with one action image replaced; used to build perturbed
    /// instances for negative tests.
    pub fn with_image(&self, src: ObjectId, dst: ObjectId, k: usize, image: CMatrix) -> Self {
        let mut out = self.clone();
        let n = self.source.num_objects();
        out.mor_map[src.0 * n + dst.0][k] = image;
        out
    }

    pub fn source(&self) -> &Arc<CStarCategory> {
        &self.source
    }

    pub fn target(&self) -> &Arc<CStarCategory> {
        &self.target
    }

    pub fn module(&self, x: ObjectId) -> &HilbertModule {
        &self.ob_map[x.0]
    }

    pub fn modules(&self) -> &[HilbertModule] {
        &self.ob_map
    }

    pub fn images(&self, src: ObjectId, dst: ObjectId) -> &[CMatrix] {
        &self.mor_map[src.0 * self.source.num_objects() + dst.0]
    }

    pub fn act_coords(&self, src: ObjectId, dst: ObjectId, coords: &[C64]) -> CMatrix {
        let mut out = CMatrix::zeros(self.module(dst).ambient_dim(), self.module(src).ambient_dim());
        for (t, c) in self.images(src, dst).iter().zip(coords) {
            out += t * *c;
        }
        out
    }

    pub fn act_matrix(&self, src: ObjectId, dst: ObjectId, m: &CMatrix) -> CMatrix {
        let c = self.source.hom(src, dst).coords(m);
        self.act_coords(src, dst, c.as_slice())
    }

    pub fn act(&self, a: &Morphism) -> ModuleOperator {
        ModuleOperator {
            dom: self.module(a.src).clone(),
            cod: self.module(a.dst).clone(),
            block: self.act_matrix(a.src, a.dst, &a.mat),
        }
    }

    /// `⊕_i E(x_i)` for a list of source objects.
    pub fn hull_module(&self, list: &ObjectList) -> HilbertModule {
        if list.is_empty() {
            return HilbertModule::zero(&self.target);
        }
        let parts: Vec<HilbertModule> = list.iter().map(|&x| self.module(x).clone()).collect();
        direct_sum(&parts).expect("modules share the target category").0
    }

    /// Ambient offsets of `⊕_i E(x_i)`.
    pub fn hull_offsets(&self, list: &ObjectList) -> Vec<usize> {
        let mut out = vec![0];
        let mut acc = 0;
        for &x in list.iter() {
            acc += self.module(x).ambient_dim();
            out.push(acc);
        }
        out
    }

    /// Blockwise action on a hull morphism `src -> dst` of the source.
    pub fn apply_hull(&self, src: &ObjectList, dst: &ObjectList, m: &CMatrix) -> CMatrix {
        let (so, dof) = (list_offsets(&self.source, src), list_offsets(&self.source, dst));
        let (eo, fo) = (self.hull_offsets(src), self.hull_offsets(dst));
        let mut out = CMatrix::zeros(fo[dst.len()], eo[src.len()]);
        for (j, &y) in dst.iter().enumerate() {
            for (i, &x) in src.iter().enumerate() {
                if self.source.hom_dim(x, y) == 0 {
                    continue;
                }
                let blk = m.view((dof[j], so[i]), (self.source.dim(y), self.source.dim(x))).into_owned();
                if blk.norm() == 0.0 {
                    continue;
                }
                let t = self.act_matrix(x, y, &blk);
                out.view_mut((fo[j], eo[i]), t.shape()).copy_from(&t);
            }
        }
        out
    }
}

/// `ι_A`: `x ↦ h_x`, `a ↦ (b ↦ a∘b)`.
pub fn yoneda_bimodule(cat: &Arc<CStarCategory>) -> Bimodule {
    let ob_map = cat.object_ids().map(|x| HilbertModule::representable(cat, x)).collect();
    let mut mor_map = Vec::new();
    for x in cat.object_ids() {
        for y in cat.object_ids() {
            mor_map.push(cat.hom(x, y).basis().to_vec());
        }
    }
    Bimodule::from_parts(cat.clone(), cat.clone(), ob_map, mor_map)
}

const VERIFY_SEED: u64 = 0xb1b1;

/// Functoriality, *-preservation, operator validity and norm decrease.
pub fn verify_bimodule(e: &Bimodule, tol: &Tolerance) -> Report {
    let a = e.source();
    let mut func = Worst::new();
    let mut star = Worst::new();
    let mut valid = Worst::new();
    let mut decrease = Worst::new();
    for x in a.object_ids() {
        for y in a.object_ids() {
            let (mx, my) = (e.module(x), e.module(y));
            let h = hull_hom(e.target(), mx.base(), my.base());
            for (k, g) in a.hom(x, y).basis().iter().enumerate() {
                let eg = &e.images(x, y)[k];
                let scale = op_norm(eg);
                valid.observe(h.residual(eg), tol.threshold(eg.norm()));
                valid.observe(op_norm(&(my.proj() * eg * mx.proj() - eg)), tol.threshold(scale));
                let back = e.act_matrix(y, x, &g.adjoint());
                star.observe(op_norm(&(back - eg.adjoint())), tol.threshold(scale));
                for z in a.object_ids() {
                    for (l, f) in a.hom(y, z).basis().iter().enumerate() {
                        let ef = &e.images(y, z)[l];
                        let lhs = e.act_matrix(x, z, &(f * g));
                        func.observe(op_norm(&(lhs - ef * eg)), tol.threshold(op_norm(ef) * scale));
                    }
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(VERIFY_SEED);
    for x in a.object_ids() {
        for y in a.object_ids() {
            if a.hom_dim(x, y) == 0 {
                continue;
            }
            for _ in 0..4 {
                let m = a.random_morphism(&mut rng, x, y);
                let na = m.norm();
                decrease.observe((e.act(&m).norm() - na).max(0.0), tol.threshold(na));
            }
        }
    }
    let mut r = Report::new();
    r.push(func.check("functoriality"));
    r.push(star.check("star_preservation"));
    r.push(valid.check("operators_valid"));
    r.push(decrease.check("norm_decrease"));
    r
}

#[derive(Debug, Clone)]
pub struct NondegeneracyReport {
    pub unit_criterion: bool,
    pub rank_criterion: bool,
    pub report: Report,
}

impl NondegeneracyReport {
    pub fn nondegenerate(&self) -> bool {
        self.unit_criterion && self.rank_criterion
    }
}

/// Units act as identities, and independently: the images `E(a) e` span
/// every evaluation space.
pub fn check_nondegenerate(e: &Bimodule, tol: &Tolerance) -> NondegeneracyReport {
    let a = e.source();
    let b = e.target();
    let mut unit = Worst::new();
    let mut gap = 0usize;
    for x in a.object_ids() {
        let mx = e.module(x);
        let id = a.identity(x);
        unit.observe(op_norm(&(e.act_matrix(x, x, &id.mat) - mx.proj())), tol.threshold(1.0));
        for z in b.object_ids() {
            let mut imgs = Vec::new();
            for xp in a.object_ids() {
                let basis = e.module(xp).eval_basis(z);
                for t in e.images(xp, x) {
                    for c in &basis {
                        imgs.push(t * c);
                    }
                }
            }
            let rank = numc::orthonormal_span(&imgs, tol).map(|v| v.len()).unwrap_or(0);
            gap += mx.eval_dim(z).abs_diff(rank);
        }
    }
    let unit_check = unit.check("unit_acts_as_identity");
    let rank_check = Check::new("action_spans_evaluations", gap as f64, 0.0);
    let unit_criterion = unit_check.pass;
    let rank_criterion = rank_check.pass;
    let mut report = Report::new();
    report.push(unit_check);
    report.push(rank_check);
    report.push(Check::flag("criteria_agree", unit_criterion == rank_criterion));
    NondegeneracyReport { unit_criterion, rank_criterion, report }
}

/// For each pair `(y, y')` of target objects, the rank of the span of
/// products `⟨e, f⟩` against `dim B(y, y')`.
pub fn check_full(e: &Bimodule, tol: &Tolerance) -> Check {
    let b = e.target();
    let mut gap = 0usize;
    let evals: Vec<Vec<Vec<CMatrix>>> =
        e.modules().iter().map(|m| b.object_ids().map(|y| m.eval_basis(y)).collect()).collect();
    for y in b.object_ids() {
        for yp in b.object_ids() {
            let mut prods = Vec::new();
            for ev in &evals {
                for ei in &ev[yp.0] {
                    for fi in &ev[y.0] {
                        prods.push(ei.adjoint() * fi);
                    }
                }
            }
            let rank = numc::orthonormal_span(&prods, tol).map(|v| v.len()).unwrap_or(0);
            gap += b.hom_dim(y, yp).abs_diff(rank);
        }
    }
    Check::new("full", gap as f64, 0.0)
}

/// A natural family of operators `dom(x) -> cod(x)`.
#[derive(Debug, Clone)]
pub struct BimoduleMap {
    pub dom: Bimodule,
    pub cod: Bimodule,
    pub components: Vec<CMatrix>,
}

impl BimoduleMap {
    pub fn new(dom: Bimodule, cod: Bimodule, components: Vec<CMatrix>, tol: &Tolerance) -> Result<Self> {
        if !Arc::ptr_eq(dom.source(), cod.source()) || !Arc::ptr_eq(dom.target(), cod.target()) {
            return invalid("bimodule map between bimodules over different categories");
        }
        if components.len() != dom.source().num_objects() {
            return invalid("bimodule map needs one component per object");
        }
        for x in dom.source().object_ids() {
            ModuleOperator::new(dom.module(x).clone(), cod.module(x).clone(), components[x.0].clone(), tol)?;
        }
        let map = BimoduleMap { dom, cod, components };
        let c = map.naturality(tol);
        if !c.pass {
            return invalid(format!("components are not natural (residual {:.3e})", c.residual));
        }
        Ok(map)
    }

    pub fn component(&self, x: ObjectId) -> ModuleOperator {
        ModuleOperator {
            dom: self.dom.module(x).clone(),
            cod: self.cod.module(x).clone(),
            block: self.components[x.0].clone(),
        }
    }

    /// `T_y E(a) = E'(a) T_x` on the source hom bases.
    pub fn naturality(&self, tol: &Tolerance) -> Check {
        let a = self.dom.source();
        let mut w = Worst::new();
        for x in a.object_ids() {
            for y in a.object_ids() {
                for (k, _) in a.hom(x, y).basis().iter().enumerate() {
                    let lhs = &self.components[y.0] * &self.dom.images(x, y)[k];
                    let rhs = &self.cod.images(x, y)[k] * &self.components[x.0];
                    let scale = op_norm(&self.components[x.0]).max(op_norm(&self.components[y.0]));
                    w.observe(op_norm(&(lhs - rhs)), tol.threshold(scale));
                }
            }
        }
        w.check("naturality")
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &BimoduleMap) -> BimoduleMap {
        BimoduleMap {
            dom: other.dom.clone(),
            cod: self.cod.clone(),
            components: self.components.iter().zip(&other.components).map(|(a, b)| a * b).collect(),
        }
    }

    pub fn adjoint(&self) -> BimoduleMap {
        BimoduleMap {
            dom: self.cod.clone(),
            cod: self.dom.clone(),
            components: self.components.iter().map(|c| c.adjoint()).collect(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.components.iter().map(op_norm).fold(0.0, f64::max)
    }

    /// Largest component-wise distance to another map with the same ends.
    pub fn distance(&self, other: &BimoduleMap) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| if a.shape() == b.shape() { op_norm(&(a - b)) } else { f64::INFINITY })
            .fold(0.0, f64::max)
    }

    pub fn unitarity(&self, tol: &Tolerance) -> Report {
        let mut iso = Worst::new();
        let mut co = Worst::new();
        for (x, c) in self.components.iter().enumerate() {
            let x = ObjectId(x);
            iso.observe(op_norm(&(c.adjoint() * c - self.dom.module(x).proj())), tol.threshold(1.0));
            co.observe(op_norm(&(c * c.adjoint() - self.cod.module(x).proj())), tol.threshold(1.0));
        }
        let mut r = Report::new();
        r.push(iso.check("isometry"));
        r.push(co.check("coisometry"));
        r
    }
}

/// `x ↦ h_{F(x)}`, `a ↦ F(a)`.
pub fn bimodule_from_functor(f: &crate::category::CStarFunctor, tol: &Tolerance) -> Result<Bimodule> {
    let fr = crate::category::verify_functor(f, tol);
    if !fr.report.passed() {
        let names: Vec<String> = fr.report.failures().map(|c| c.name.clone()).collect();
        return invalid(format!("not a C*-functor: failed {}", names.join(", ")));
    }
    let src = f.source();
    let tgt = f.target();
    let ob_map = src.object_ids().map(|x| HilbertModule::representable(tgt, f.map_object(x))).collect();
    let mut mor_map = Vec::new();
    for x in src.object_ids() {
        for y in src.object_ids() {
            mor_map.push(f.images(x, y).to_vec());
        }
    }
    Ok(Bimodule::from_parts(src.clone(), tgt.clone(), ob_map, mor_map))
}
