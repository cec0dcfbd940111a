use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

use super::tensor::{module_generators, tensor_bimodule_bimodule, tensor_semi_inner, tensor_simple, SimpleTensor};
use super::{check_full, yoneda_bimodule, Bimodule, BimoduleMap};
use crate::category::{hull_hom, matrix_algebra, CStarCategory, MatrixAlgebra, Morphism, ObjectId};
use crate::error::{invalid, Result};
use crate::modules::{HilbertModule, ModuleElement};
use crate::numc::{self, op_norm, CMatrix, Tolerance};
use crate::report::{Check, Report, Worst};

/// A bimodule whose action identifies each `A(x, x')` with the compact
/// operators `E(x) -> E(x')`, together with the solver for the left product.
#[derive(Debug, Clone)]
pub struct BiHilbertData {
    pub bimodule: Bimodule,
    // pseudo-inverse of the stacked action images, per src * n + dst
    solvers: Vec<CMatrix>,
}

impl BiHilbertData {
    /// `_A⟨e, f⟩ ∈ A(x', x)` for `e ∈ E(x)(y)`, `f ∈ E(x')(y)`: the unique
    /// morphism acting as `g ↦ e⟨f, g⟩`.
    pub fn left_inner(&self, x: ObjectId, e: &CMatrix, xp: ObjectId, f: &CMatrix) -> Result<Morphism> {
        let a = self.bimodule.source();
        a.check_id(x)?;
        a.check_id(xp)?;
        let (ex, exp) = (self.bimodule.module(x), self.bimodule.module(xp));
        if e.nrows() != ex.ambient_dim() || f.nrows() != exp.ambient_dim() || e.ncols() != f.ncols() {
            return invalid("left product of elements at different objects or of the wrong size");
        }
        let theta = e * f.adjoint();
        let c = &self.solvers[xp.0 * a.num_objects() + x.0] * numc::vectorize(&theta);
        Ok(a.from_coords(xp, x, c.as_slice()))
    }
}

#[derive(Debug, Clone)]
pub struct ImprimitivityReport {
    pub faithful: bool,
    pub onto_compacts: bool,
    pub full: bool,
    pub report: Report,
    pub data: Option<BiHilbertData>,
}

impl ImprimitivityReport {
    pub fn passed(&self) -> bool {
        self.data.is_some() && self.report.passed()
    }
}

const IMPRIMITIVITY_SEED: u64 = 0x1a1a;

pub fn check_imprimitivity(e: &Bimodule, tol: &Tolerance) -> ImprimitivityReport {
    let a = e.source();
    let b = e.target();
    let n = a.num_objects();
    let mut faithful_gap = 0usize;
    let mut onto_gap = 0usize;
    let mut solvers = Vec::with_capacity(n * n);
    for x in a.object_ids() {
        for xp in a.object_ids() {
            let (ex, exp) = (e.module(x), e.module(xp));
            let (r, c) = (exp.ambient_dim(), ex.ambient_dim());
            let stacked = numc::stack(e.images(x, xp), r, c);
            let rank = numc::rank(&stacked, tol);
            faithful_gap += a.hom_dim(x, xp) - rank.min(a.hom_dim(x, xp));
            let compressed: Vec<CMatrix> =
                hull_hom(b, ex.base(), exp.base()).basis().iter().map(|t| exp.proj() * t * ex.proj()).collect();
            let dk = numc::orthonormal_span(&compressed, tol).map(|v| v.len()).unwrap_or(0);
            onto_gap += dk.abs_diff(rank);
            solvers.push(numc::pinv(&stacked, tol));
        }
    }
    let full_check = check_full(e, tol);
    let mut report = Report::new();
    report.push(Check::new("faithful", faithful_gap as f64, 0.0));
    report.push(Check::new("onto_compacts", onto_gap as f64, 0.0));
    let full = full_check.pass;
    report.push(full_check);
    let faithful = faithful_gap == 0;
    let onto_compacts = onto_gap == 0;
    if !(faithful && onto_compacts && full) {
        return ImprimitivityReport { faithful, onto_compacts, full, report, data: None };
    }
    let data = BiHilbertData { bimodule: e.clone(), solvers };

    let mut solve = Worst::new();
    let mut ident = Worst::new();
    let mut adj = Worst::new();
    let mut pos = Worst::new();
    let mut norms = Worst::new();
    let mut rng = ChaCha8Rng::seed_from_u64(IMPRIMITIVITY_SEED);
    let pick = |rng: &mut ChaCha8Rng, k: usize| ObjectId(rng.random_range(0..k));
    for _ in 0..12 {
        let (x, xp) = (pick(&mut rng, n), pick(&mut rng, n));
        let (y, ypp) = (pick(&mut rng, b.num_objects()), pick(&mut rng, b.num_objects()));
        let ev = e.module(x).random_element(&mut rng, y).col;
        let fv = e.module(xp).random_element(&mut rng, y).col;
        let gv = e.module(xp).random_element(&mut rng, ypp).col;
        let Ok(l) = data.left_inner(x, &ev, xp, &fv) else { continue };
        let theta = &ev * fv.adjoint();
        let scale = op_norm(&theta);
        solve.observe(op_norm(&(e.act(&l).block - &theta)), tol.threshold(scale));
        let lhs = e.act(&l).block * &gv;
        let rhs = &ev * (fv.adjoint() * &gv);
        ident.observe(op_norm(&(lhs - rhs)), tol.threshold(scale * op_norm(&gv)));
        if let Ok(r) = data.left_inner(xp, &fv, x, &ev) {
            adj.observe(op_norm(&(r.mat - l.mat.adjoint())), tol.threshold(scale));
        }
        if let Ok(ll) = data.left_inner(x, &ev, x, &ev) {
            let right = ev.adjoint() * &ev;
            let nl = op_norm(&ll.mat);
            let nr = op_norm(&right);
            pos.observe(crate::modules::psd_deficit(&ll.mat), tol.threshold(nl));
            norms.observe((nl - nr).abs(), tol.threshold(nr));
        }
    }
    report.push(solve.check("left_product_acts_as_rank_one"));
    report.push(ident.check("imprimitivity_identity"));
    report.push(adj.check("left_product_adjoint"));
    report.push(pos.check("left_product_positive"));
    report.push(norms.check("left_right_norms_agree"));
    ImprimitivityReport { faithful, onto_compacts, full, report, data: Some(data) }
}

/// `Ẽ: B -> Hilb A` with `⟨ẽ, f̃⟩_A = _A⟨e, f⟩` and `_B⟨ẽ, f̃⟩ = ⟨e, f⟩_B`.
#[derive(Debug, Clone)]
pub struct Conjugate {
    pub bimodule: Bimodule,
    /// Per target object `y`: the basis `e_k ∈ E(x_k)(y)` used as generators.
    pub generators: Vec<Vec<(ObjectId, CMatrix)>>,
    pub grams: Vec<CMatrix>,
    pub roots: Vec<CMatrix>,
}

impl Conjugate {
    /// `ẽ ∈ Ẽ(y)(x)` for `e ∈ E(x)(y)`.
    pub fn element(&self, x: ObjectId, y: ObjectId, e: &CMatrix) -> ModuleElement {
        let module = self.bimodule.module(y);
        let off = module.offsets();
        let mut col = CMatrix::zeros(module.ambient_dim(), self.bimodule.target().dim(x));
        for (k, (xk, ek)) in self.generators[y.0].iter().enumerate() {
            if *xk == x {
                let c = numc::frob_inner(ek, e).conj();
                col += self.roots[y.0].columns(off[k], off[k + 1] - off[k]) * c;
            }
        }
        ModuleElement { at: x, col }
    }

    /// Generator `ẽ_k` of `Ẽ(y)`, sitting at `x_k`.
    pub fn generator(&self, y: ObjectId, k: usize) -> ModuleElement {
        let off = self.bimodule.module(y).offsets();
        ModuleElement {
            at: self.generators[y.0][k].0,
            col: self.roots[y.0].columns(off[k], off[k + 1] - off[k]).into_owned(),
        }
    }
}

pub fn conjugate_bimodule(data: &BiHilbertData, tol: &Tolerance) -> Result<Conjugate> {
    let e = &data.bimodule;
    let a = e.source();
    let b = e.target();
    let mut generators = Vec::new();
    let mut grams = Vec::new();
    let mut roots = Vec::new();
    let mut modules = Vec::new();
    for y in b.object_ids() {
        let gens: Vec<(ObjectId, CMatrix)> =
            a.object_ids().flat_map(|x| e.module(x).eval_basis(y).into_iter().map(move |c| (x, c))).collect();
        let z = crate::category::ObjectList(gens.iter().map(|g| g.0).collect());
        let off = crate::category::list_offsets(a, &z);
        let mut g = CMatrix::zeros(off[z.len()], off[z.len()]);
        for (k, (xk, ek)) in gens.iter().enumerate() {
            for (l, (xl, el)) in gens.iter().enumerate() {
                let blk = data.left_inner(*xk, ek, *xl, el)?.mat;
                g.view_mut((off[k], off[l]), blk.shape()).copy_from(&blk);
            }
        }
        let g = numc::hermitian_part(&g);
        let root = numc::frac_power(&g, 0.5, tol)?;
        let supp = numc::range_projection(&g, tol);
        modules.push(HilbertModule::new(a.clone(), z, supp, tol)?);
        generators.push(gens);
        grams.push(g);
        roots.push(root);
    }
    let inv_roots: Vec<CMatrix> = grams.iter().map(|g| numc::pinv_power(g, 0.5, tol)).collect::<Result<_>>()?;
    let mut mor_map = Vec::new();
    for y in b.object_ids() {
        for yp in b.object_ids() {
            let (m, mp) = (&modules[y.0], &modules[yp.0]);
            let (off, offp) = (m.offsets(), mp.offsets());
            let mut imgs = Vec::new();
            for bb in b.hom(y, yp).basis() {
                let mut k_bar = CMatrix::zeros(mp.ambient_dim(), m.ambient_dim());
                for (k, (xk, ek)) in generators[y.0].iter().enumerate() {
                    let moved = ek * bb.adjoint();
                    for (l, (xl, el)) in generators[yp.0].iter().enumerate() {
                        if xl != xk {
                            continue;
                        }
                        let c = numc::frob_inner(el, &moved).conj();
                        let d = a.dim(*xk);
                        for t in 0..d {
                            k_bar[(offp[l] + t, off[k] + t)] = c;
                        }
                    }
                }
                imgs.push(&roots[yp.0] * k_bar * &inv_roots[y.0]);
            }
            mor_map.push(imgs);
        }
    }
    let bimodule = Bimodule::new(b.clone(), a.clone(), modules, mor_map, tol)?;
    Ok(Conjugate { bimodule, generators, grams, roots })
}

#[derive(Debug, Clone)]
pub struct MoritaMap {
    pub map: BimoduleMap,
    pub report: Report,
}

struct GeneratorSolve {
    map: CMatrix,
    well_defined: Worst,
    gram: Worst,
}

/// Solves `Φ V = T` where `V` holds the generator images in the projection
/// model, and compares `V*V` with the defining semi-inner products.
fn solve_on_generators(
    module: &HilbertModule,
    bim: &Bimodule,
    tensors: &[SimpleTensor],
    targets: &[CMatrix],
    rows: usize,
    tol: &Tolerance,
) -> Result<GeneratorSolve> {
    let imgs: Vec<CMatrix> = tensors.iter().map(|t| tensor_simple(module, bim, t).col).collect();
    let amb = bim.apply_hull(module.base(), module.base(), module.proj()).nrows();
    let v = numc::hstack(&imgs, amb);
    let t = numc::hstack(targets, rows);
    let map = &t * numc::pinv(&v, tol);
    let mut well_defined = Worst::new();
    well_defined.observe(op_norm(&(&map * &v - &t)), tol.threshold(op_norm(&t)));
    let mut gram = Worst::new();
    let vv = v.adjoint() * &v;
    let mut def = CMatrix::zeros(vv.nrows(), vv.ncols());
    let mut ro = 0;
    for s in tensors {
        let mut co = 0;
        for u in tensors {
            let blk = tensor_semi_inner(bim, std::slice::from_ref(s), std::slice::from_ref(u))?;
            def.view_mut((ro, co), blk.shape()).copy_from(&blk);
            co += blk.ncols();
        }
        ro += s.e.col.ncols();
    }
    gram.observe(op_norm(&(vv - &def)), tol.threshold(op_norm(&def)));
    Ok(GeneratorSolve { map, well_defined, gram })
}

fn finish(dom: Bimodule, cod: Bimodule, solves: Vec<GeneratorSolve>, tol: &Tolerance) -> MoritaMap {
    let mut well = Worst::new();
    let mut gram = Worst::new();
    let mut iso = Worst::new();
    let mut co = Worst::new();
    let mut gap = 0usize;
    let mut components = Vec::new();
    for (x, s) in solves.into_iter().enumerate() {
        let x = ObjectId(x);
        well.merge(s.well_defined);
        gram.merge(s.gram);
        let (d, c) = (dom.module(x), cod.module(x));
        let phi = c.proj() * s.map * d.proj();
        iso.observe(op_norm(&(phi.adjoint() * &phi - d.proj())), tol.threshold(1.0));
        co.observe(op_norm(&(&phi * phi.adjoint() - c.proj())), tol.threshold(1.0));
        for z in dom.target().object_ids() {
            let imgs: Vec<CMatrix> = d.eval_basis(z).iter().map(|v| &phi * v).collect();
            let rank = numc::orthonormal_span(&imgs, tol).map(|v| v.len()).unwrap_or(0);
            gap += c.eval_dim(z).abs_diff(rank);
        }
        components.push(phi);
    }
    let map = BimoduleMap { dom, cod, components };
    let mut report = Report::new();
    report.push(well.check("well_defined_on_generators"));
    report.push(gram.check("gram_agreement"));
    report.push(iso.check("isometry"));
    report.push(co.check("coisometry"));
    report.push(Check::new("surjective_by_rank", gap as f64, 0.0));
    report.push(map.naturality(tol));
    MoritaMap { map, report }
}

/// `Φ: Ẽ ⊗ E -> ι_B`, `ẽ ⊗ f ↦ ⟨e, f⟩_B`.
pub fn morita_phi(data: &BiHilbertData, conj: &Conjugate, tol: &Tolerance) -> Result<MoritaMap> {
    let e = &data.bimodule;
    let ce = &conj.bimodule;
    let b = e.target();
    let dom = tensor_bimodule_bimodule(ce, e)?;
    let cod = yoneda_bimodule(b);
    let mut solves = Vec::new();
    for y in b.object_ids() {
        let mut tensors = Vec::new();
        let mut targets = Vec::new();
        for (k, (xk, ek)) in conj.generators[y.0].iter().enumerate() {
            for q in module_generators(e.module(*xk)) {
                targets.push(ek.adjoint() * &q.col);
                tensors.push(SimpleTensor { coeff: numc::ONE, m: conj.generator(y, k), e: q });
            }
        }
        solves.push(solve_on_generators(ce.module(y), e, &tensors, &targets, b.dim(y), tol)?);
    }
    Ok(finish(dom, cod, solves, tol))
}

/// `Ψ: E ⊗ Ẽ -> ι_A`, `e ⊗ f̃ ↦ _A⟨e, f⟩`.
pub fn morita_psi(data: &BiHilbertData, conj: &Conjugate, tol: &Tolerance) -> Result<MoritaMap> {
    let e = &data.bimodule;
    let ce = &conj.bimodule;
    let a = e.source();
    let dom = tensor_bimodule_bimodule(e, ce)?;
    let cod = yoneda_bimodule(a);
    let mut solves = Vec::new();
    for x in a.object_ids() {
        let mut tensors = Vec::new();
        let mut targets = Vec::new();
        for q in module_generators(e.module(x)) {
            let w = q.at;
            for (k, (xk, ek)) in conj.generators[w.0].iter().enumerate() {
                targets.push(data.left_inner(x, &q.col, *xk, ek)?.mat);
                tensors.push(SimpleTensor { coeff: numc::ONE, m: q.clone(), e: conj.generator(w, k) });
            }
        }
        solves.push(solve_on_generators(e.module(x), ce, &tensors, &targets, a.dim(x), tol)?);
    }
    Ok(finish(dom, cod, solves, tol))
}

/// `Mat(A)` acting on the free module over the full object list.
#[derive(Debug, Clone)]
pub struct MatEquivalence {
    pub algebra: MatrixAlgebra,
    pub bimodule: Bimodule,
    pub imprimitivity: ImprimitivityReport,
}

pub fn mat_equivalence(cat: &Arc<CStarCategory>, tol: &Tolerance) -> Result<MatEquivalence> {
    let algebra = matrix_algebra(cat)?;
    let module = HilbertModule::free(cat, cat.full_list());
    let star = algebra.object();
    let images = algebra.algebra.hom(star, star).basis().to_vec();
    let bimodule = Bimodule::new(algebra.algebra.clone(), cat.clone(), vec![module], vec![images], tol)?;
    let imprimitivity = check_imprimitivity(&bimodule, tol);
    Ok(MatEquivalence { algebra, bimodule, imprimitivity })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bimodules::verify_bimodule;
    use crate::category::full_matrix_category;

    #[test]
    fn yoneda_is_an_imprimitivity_bimodule() {
        let tol = Tolerance::DEFAULT;
        let cat = Arc::new(full_matrix_category(&[2, 1]));
        let y = yoneda_bimodule(&cat);
        let r = check_imprimitivity(&y, &tol);
        assert!(r.passed(), "{}", r.report);
    }

    #[test]
    fn mat_equivalence_and_conjugate() {
        let tol = Tolerance::DEFAULT;
        let cat = Arc::new(full_matrix_category(&[1, 2]));
        let me = mat_equivalence(&cat, &tol).unwrap();
        assert!(me.imprimitivity.passed(), "{}", me.imprimitivity.report);
        let data = me.imprimitivity.data.unwrap();
        let conj = conjugate_bimodule(&data, &tol).unwrap();
        assert!(verify_bimodule(&conj.bimodule, &tol).passed());
        let cr = check_imprimitivity(&conj.bimodule, &tol);
        assert!(cr.passed(), "{}", cr.report);
        let phi = morita_phi(&data, &conj, &tol).unwrap();
        assert!(phi.report.passed(), "{}", phi.report);
        let psi = morita_psi(&data, &conj, &tol).unwrap();
        assert!(psi.report.passed(), "{}", psi.report);
    }

    #[test]
    fn conjugate_products_swap() {
        let tol = Tolerance::DEFAULT;
        let cat = Arc::new(full_matrix_category(&[2]));
        let me = mat_equivalence(&cat, &tol).unwrap();
        let data = me.imprimitivity.data.unwrap();
        let conj = conjugate_bimodule(&data, &tol).unwrap();
        let cdata = check_imprimitivity(&conj.bimodule, &tol).data.unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let star = ObjectId(0);
        let y = ObjectId(0);
        let e = data.bimodule.module(star).random_element(&mut rng, y).col;
        let f = data.bimodule.module(star).random_element(&mut rng, y).col;
        let (et, ft) = (conj.element(star, y, &e), conj.element(star, y, &f));
        // right product of conjugates is the left product
        let right = et.col.adjoint() * &ft.col;
        let left = data.left_inner(star, &e, star, &f).unwrap().mat;
        assert!(op_norm(&(right - left)) < 1e-9);
        // left product of conjugates is the right product
        let lt = cdata.left_inner(y, &et.col, y, &ft.col).unwrap().mat;
        assert!(op_norm(&(lt - e.adjoint() * &f)) < 1e-9);
    }

    #[test]
    fn conjugates_of_random_yoneda_bimodules_are_imprimitive() {
        let tol = Tolerance::DEFAULT;
        let p = crate::generators::BlockParams { objects: 2, sectors: 2, max_sector_dim: 2, max_multiplicity: 1 };
        for seed in 0..12 {
            let b = crate::generators::random_block_category(seed, p);
            let data = check_imprimitivity(&yoneda_bimodule(&b.cat), &tol).data.unwrap();
            let conj = conjugate_bimodule(&data, &tol).unwrap();
            let r = check_imprimitivity(&conj.bimodule, &tol);
            assert!(r.passed(), "seed {seed}: {}", r.report);
        }
    }

    #[test]
    fn double_conjugate_matches_original() {
        let tol = Tolerance::DEFAULT;
        let p = crate::generators::BlockParams { objects: 2, sectors: 2, max_sector_dim: 2, max_multiplicity: 1 };
        for seed in 0..6 {
            let a = crate::generators::random_block_category(seed, p);
            let me = mat_equivalence(&a.cat, &tol).unwrap();
            let e = me.bimodule.clone();
            let conj = conjugate_bimodule(&me.imprimitivity.data.unwrap(), &tol).unwrap();
            let back_data = check_imprimitivity(&conj.bimodule, &tol).data.unwrap();
            let back = conjugate_bimodule(&back_data, &tol).unwrap().bimodule;
            assert!(check_imprimitivity(&back, &tol).passed());
            assert!(Arc::ptr_eq(back.source(), e.source()) && Arc::ptr_eq(back.target(), e.target()));
            for x in e.source().object_ids() {
                for y in e.target().object_ids() {
                    assert_eq!(back.module(x).eval_dim(y), e.module(x).eval_dim(y), "seed {seed}");
                }
            }
        }
    }
}
