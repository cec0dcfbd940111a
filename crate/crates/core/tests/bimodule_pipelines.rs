use std::sync::Arc;

use cstarcat::bimodules::{
    check_imprimitivity, check_nondegenerate, coherence_report, compare_tensor, conjugate_bimodule, ew_map,
    mat_equivalence, morita_phi, morita_psi, tensor_bimodule_bimodule, verify_bimodule, whisker_transform,
    yoneda_bimodule, BimoduleMap,
};
use cstarcat::category::CStarFunctor;
use cstarcat::generators::{
    bimodule_from_functor, groupoid_category, random_bimodule, random_block_category, random_free_module,
    random_module, BimoduleKind, BlockParams, FiniteGroupoid,
};
use cstarcat::numc::op_norm;
use cstarcat::{ObjectId, Tolerance};

const SMALL: BlockParams = BlockParams { objects: 2, sectors: 2, max_sector_dim: 2, max_multiplicity: 1 };
const TINY: BlockParams = BlockParams { objects: 2, sectors: 1, max_sector_dim: 2, max_multiplicity: 1 };

#[test]
fn tensor_projection_model_matches_quotient() {
    let tol = Tolerance::DEFAULT;
    for seed in 0..10 {
        let a = random_block_category(seed, SMALL);
        let b = random_block_category(seed + 100, SMALL);
        let e = random_bimodule(seed, &a, &b.cat, 2, BimoduleKind::Nondegenerate);
        let m = random_module(seed, &a.cat, 3);
        let r = compare_tensor(&m, &e, &tol).unwrap();
        assert!(r.passed(), "seed {seed}: {r}");
    }
}

#[test]
fn degenerate_tensor_still_matches_quotient() {
    let tol = Tolerance::DEFAULT;
    let a = random_block_category(3, SMALL);
    let b = random_block_category(4, SMALL);
    let e = random_bimodule(5, &a, &b.cat, 2, BimoduleKind::Degenerate);
    let m = random_module(6, &a.cat, 2);
    assert!(compare_tensor(&m, &e, &tol).unwrap().passed());
}

#[test]
fn coherence_on_random_chains() {
    let tol = Tolerance::DEFAULT;
    for seed in 0..3 {
        let cats: Vec<_> = (0..5).map(|k| random_block_category(seed * 10 + k, TINY)).collect();
        let bims: Vec<_> = (0..4)
            .map(|k| {
                random_bimodule(
                    seed * 10 + k,
                    &cats[k as usize],
                    &cats[k as usize + 1].cat,
                    1,
                    BimoduleKind::Nondegenerate,
                )
            })
            .collect();
        for b in &bims {
            assert!(verify_bimodule(b, &tol).passed());
        }
        let r = coherence_report([&bims[0], &bims[1], &bims[2], &bims[3]], &tol).unwrap();
        assert!(r.passed(), "seed {seed}: {r}");
        let ef = tensor_bimodule_bimodule(&bims[0], &bims[1]).unwrap();
        assert!(verify_bimodule(&ef, &tol).passed());
    }
}

#[test]
fn morita_pipeline_on_random_categories() {
    let tol = Tolerance::DEFAULT;
    for seed in 0..4 {
        let a = random_block_category(seed, SMALL);
        let me = mat_equivalence(&a.cat, &tol).unwrap();
        assert!(me.imprimitivity.passed(), "seed {seed}: {}", me.imprimitivity.report);
        let data = me.imprimitivity.data.unwrap();
        let conj = conjugate_bimodule(&data, &tol).unwrap();
        assert!(check_imprimitivity(&conj.bimodule, &tol).passed());
        let phi = morita_phi(&data, &conj, &tol).unwrap();
        assert!(phi.report.passed(), "seed {seed}: {}", phi.report);
        let psi = morita_psi(&data, &conj, &tol).unwrap();
        assert!(psi.report.passed(), "seed {seed}: {}", psi.report);
    }
}

#[test]
fn codiscrete_groupoid_is_morita_trivial() {
    let tol = Tolerance::DEFAULT;
    let c = Arc::new(groupoid_category(&FiniteGroupoid::codiscrete(2)).unwrap());
    let me = mat_equivalence(&c, &tol).unwrap();
    assert!(me.imprimitivity.passed());
    // every hom-space is one-dimensional, so each object is a copy of ℂ
    for x in c.object_ids() {
        for y in c.object_ids() {
            assert_eq!(c.hom_dim(x, y), 1);
        }
    }
}

#[test]
fn functor_bimodules() {
    let tol = Tolerance::DEFAULT;
    let a = random_block_category(11, SMALL);
    let id = CStarFunctor::identity(&a.cat);
    let e = bimodule_from_functor(&id, &tol).unwrap();
    let y = yoneda_bimodule(&a.cat);
    for x in a.cat.object_ids() {
        assert_eq!(e.module(x).base(), y.module(x).base());
    }
    assert!(check_imprimitivity(&e, &tol).passed());
}

#[test]
fn non_faithful_bimodule_is_not_imprimitivity() {
    let tol = Tolerance::DEFAULT;
    let a = random_block_category(12, BlockParams { objects: 2, sectors: 2, max_sector_dim: 1, max_multiplicity: 1 });
    let e = random_bimodule(1, &a, &a.cat, 1, BimoduleKind::NonFaithful);
    let r = check_imprimitivity(&e, &tol);
    assert!(!r.faithful);
    assert!(r.data.is_none());
}

#[test]
fn ew_on_random_pairs() {
    let tol = Tolerance::DEFAULT;
    for seed in 0..10 {
        let a = random_block_category(seed, SMALL);
        let b = random_block_category(seed + 50, SMALL);
        let e = random_bimodule(seed, &a, &b.cat, 2, BimoduleKind::Nondegenerate);
        let m = if seed % 2 == 0 { random_module(seed, &a.cat, 3) } else { random_free_module(seed, &a.cat, 3) };
        let r = ew_map(&m, &e, &tol).unwrap();
        assert!(r.report.passed(), "seed {seed}: {}", r.report);
    }
    let a = random_block_category(1, SMALL);
    let d = random_bimodule(1, &a, &a.cat, 2, BimoduleKind::Degenerate);
    assert!(!check_nondegenerate(&d, &tol).nondegenerate());
    assert!(ew_map(&random_module(1, &a.cat, 2), &d, &tol).is_err());
}

#[test]
fn whiskering_routes_agree() {
    let tol = Tolerance::DEFAULT;
    let a = random_block_category(21, SMALL);
    let b = random_block_category(22, SMALL);
    let e = random_bimodule(23, &a, &b.cat, 2, BimoduleKind::Nondegenerate);
    // a central scalar multiple of the identity and a zero map
    for s in [0.0, 0.5] {
        let comps = e.modules().iter().map(|m| m.proj() * cstarcat::numc::c64(s, 0.0)).collect();
        let tau = BimoduleMap::new(e.clone(), e.clone(), comps, &tol).unwrap();
        let m = random_module(24, &a.cat, 3);
        let w = whisker_transform(&tau, &m, &tol).unwrap();
        assert!(w.report.passed(), "{}", w.report);
        let expect = w.blockwise.dom.proj() * cstarcat::numc::c64(s, 0.0);
        assert!(op_norm(&(&w.blockwise.block - expect)) < 1e-9);
    }
    // scaling one component of the Yoneda bimodule of a connected groupoid is not natural
    let g = Arc::new(groupoid_category(&FiniteGroupoid::codiscrete(2)).unwrap());
    let y = yoneda_bimodule(&g);
    let mut comps: Vec<_> = y.modules().iter().map(|m| m.proj().clone()).collect();
    comps[0] = comps[0].clone() * cstarcat::numc::c64(2.0, 0.0);
    assert!(BimoduleMap::new(y.clone(), y.clone(), comps.clone(), &tol).is_err());
    let tau = BimoduleMap { dom: y.clone(), cod: y.clone(), components: comps };
    assert!(whisker_transform(&tau, &random_module(2, &g, 2), &tol).is_err());
    assert!(op_norm(&y.images(ObjectId(0), ObjectId(1))[0]) > 0.5);
}
