use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cstarcat::bimodules::{compare_tensor, tensor_module_bimodule};
use cstarcat::category::{factorize, factorize_left, hull_hom, hull_norm_formula, verify_category, ObjectList};
use cstarcat::generators::{
    groupoid_category, groupoid_matrix, random_bimodule, random_block_category, random_module, BimoduleKind,
    BlockParams, FiniteGroupoid,
};
use cstarcat::modules::{free_cover, gram_matrix, psd_deficit, yoneda_epsilon, yoneda_eta};
use cstarcat::numc::{self, op_norm, random_matrix};
use cstarcat::{ObjectId, Tolerance};

const SMALL: BlockParams = BlockParams { objects: 2, sectors: 2, max_sector_dim: 2, max_multiplicity: 2 };

fn cfg() -> ProptestConfig {
    ProptestConfig { cases: 24, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(cfg())]

    #[test]
    fn cstar_identity_for_matrices(seed in any::<u64>(), r in 1usize..5, c in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_matrix(&mut rng, r, c);
        let n = op_norm(&a);
        prop_assert!((op_norm(&(a.adjoint() * &a)) - n * n).abs() <= 1e-9 * (1.0 + n * n));
        let b = random_matrix(&mut rng, c, r);
        prop_assert!(op_norm(&(&a * &b)) <= n * op_norm(&b) * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn svd_reconstructs_and_ranks(seed in any::<u64>(), r in 1usize..9, c in 1usize..5, k in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = k.min(r).min(c);
        // rank-k product, with one column duplicated to force degeneracy
        let mut a = random_matrix(&mut rng, r, k) * random_matrix(&mut rng, k, c);
        if c > 1 {
            let first = a.column(0).into_owned();
            a.set_column(c - 1, &first);
        }
        let (u, s, vt) = numc::svd(&a);
        let sig = numc::CMatrix::from_diagonal(&s.map(|v| numc::c64(v, 0.0)));
        prop_assert!((&u * sig * &vt - &a).norm() <= 1e-12 * (1.0 + a.norm()));
        prop_assert_eq!(numc::rank(&a, &Tolerance::DEFAULT), numc::rank(&a.adjoint(), &Tolerance::DEFAULT));
        let q = numc::range_isometry(&a, &Tolerance::DEFAULT);
        prop_assert!((&q * q.adjoint() * &a - &a).norm() <= 1e-9 * (1.0 + a.norm()));
    }

    #[test]
    fn pinv_and_powers(seed in any::<u64>(), n in 1usize..5, k in 1usize..5) {
        let tol = Tolerance::DEFAULT;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = random_matrix(&mut rng, n, k.min(n));
        let p = &b * b.adjoint();
        let root = numc::frac_power(&p, 0.5, &tol).unwrap();
        prop_assert!(op_norm(&(&root * &root - &p)) <= 1e-9 * (1.0 + op_norm(&p)));
        let pi = numc::pinv(&p, &tol);
        prop_assert!(op_norm(&(&p * &pi * &p - &p)) <= 1e-8 * (1.0 + op_norm(&p)));
        let s = numc::range_projection(&p, &tol);
        prop_assert!(numc::is_projection(&s, &tol));
        prop_assert_eq!(numc::rank(&p, &tol), k.min(n));
    }

    #[test]
    fn block_categories_verify(seed in any::<u64>()) {
        let b = random_block_category(seed, SMALL);
        let r = verify_category(&b.cat, &Tolerance::DEFAULT);
        prop_assert!(r.passed(), "{}", r);
    }

    #[test]
    fn hull_norm_matches_block_norm(seed in any::<u64>()) {
        let b = random_block_category(seed, SMALL);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src = ObjectList(vec![ObjectId(0), ObjectId(1)]);
        let dst = ObjectList(vec![ObjectId(1), ObjectId(0), ObjectId(1)]);
        let f = hull_hom(&b.cat, &src, &dst).random(&mut rng);
        let exact = op_norm(&f);
        let est = hull_norm_formula(&b.cat, &src, &dst, &f, 4, seed);
        prop_assert!((est - exact).abs() <= 1e-6 * exact.max(1e-300));
    }

    #[test]
    fn factorizations_recompose(seed in any::<u64>()) {
        let tol = Tolerance::DEFAULT;
        let b = random_block_category(seed, SMALL);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = b.cat.random_morphism(&mut rng, ObjectId(0), ObjectId(1));
        let (v, w) = factorize(&b.cat, &u, &tol).unwrap();
        prop_assert!(op_norm(&(&v.mat * &w.mat - &u.mat)) <= 1e-8 * (1.0 + u.norm()));
        let (s, t) = factorize_left(&b.cat, &u, &tol).unwrap();
        prop_assert!(op_norm(&(&s.mat * &t.mat - &u.mat)) <= 1e-8 * (1.0 + u.norm()));
    }

    #[test]
    fn groupoid_involution_is_inverse(k in 1usize..3, order in 1usize..4) {
        let g = FiniteGroupoid::transitive(k, order);
        let c = groupoid_category(&g).unwrap();
        prop_assert!(verify_category(&c, &Tolerance::DEFAULT).passed());
        for f in 0..g.morphisms.len() {
            let m = groupoid_matrix(&g, f);
            prop_assert!(op_norm(&(m.adjoint() - groupoid_matrix(&g, g.inverse[f]))) == 0.0);
        }
    }

    #[test]
    fn module_positivity(seed in any::<u64>()) {
        let b = random_block_category(seed, SMALL);
        let m = random_module(seed, &b.cat, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let els: Vec<_> = (0..4).map(|i| m.random_element(&mut rng, ObjectId(i % 2))).collect();
        let (_, g) = gram_matrix(&m, &els).unwrap();
        prop_assert!(psd_deficit(&g) <= 1e-9 * (1.0 + op_norm(&g)));
        // ⟨e, f⟩*⟨e, f⟩ ≤ ‖⟨e, e⟩‖ ⟨f, f⟩
        let (e, f) = (&els[0], &els[1]);
        let ef = m.inner(e, f).unwrap().mat;
        let ee = op_norm(&m.inner(e, e).unwrap().mat);
        let ff = m.inner(f, f).unwrap().mat;
        let gap = ff * numc::c64(ee, 0.0) - ef.adjoint() * &ef;
        prop_assert!(psd_deficit(&gap) <= 1e-9 * (1.0 + op_norm(&gap)));
    }

    #[test]
    fn free_cover_and_yoneda(seed in any::<u64>()) {
        let b = random_block_category(seed, SMALL);
        let m = random_module(seed, &b.cat, 3);
        let (_, phi) = free_cover(&m);
        prop_assert!(op_norm(&(&phi.block * phi.block.adjoint() - m.proj())) <= 1e-9);
        prop_assert!(op_norm(&(phi.block.adjoint() * &phi.block - m.proj())) <= 1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = m.random_element(&mut rng, ObjectId(1));
        let eps = yoneda_epsilon(&m, &e).unwrap();
        let back = yoneda_eta(&eps).unwrap();
        prop_assert!(op_norm(&(&back.col - &e.col)) <= 1e-9);
        prop_assert!((eps.norm() - m.norm(&e)).abs() <= 1e-8 * (1.0 + m.norm(&e)));
    }

    #[test]
    fn tensor_models_agree(seed in any::<u64>()) {
        let tol = Tolerance::DEFAULT;
        let p = BlockParams { objects: 2, sectors: 2, max_sector_dim: 2, max_multiplicity: 1 };
        let a = random_block_category(seed, p);
        let b = random_block_category(seed.wrapping_add(1), p);
        let e = random_bimodule(seed, &a, &b.cat, 2, BimoduleKind::Nondegenerate);
        let m = random_module(seed, &a.cat, 2);
        let r = compare_tensor(&m, &e, &tol).unwrap();
        prop_assert!(r.passed(), "{}", r);
        let t = tensor_module_bimodule(&m, &e).unwrap();
        prop_assert!(numc::is_projection(t.proj(), &tol));
    }
}
