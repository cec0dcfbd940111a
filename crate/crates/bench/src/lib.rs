//! Seeded workloads shared by the benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cstarcat::bimodules::Bimodule;
use cstarcat::category::{hull_hom, ObjectList};
use cstarcat::generators::{
    random_bimodule, random_block_category, random_module, BimoduleKind, BlockCategory, BlockParams,
};
use cstarcat::numc::CMatrix;
use cstarcat::{HilbertModule, ObjectId};

pub fn params(objects: usize) -> BlockParams {
    BlockParams { objects, sectors: 3, max_sector_dim: 3, max_multiplicity: 2 }
}

pub fn category(seed: u64, objects: usize) -> BlockCategory {
    random_block_category(seed, params(objects))
}

/// A random block morphism between two lists cycling through the objects.
pub fn hull_morphism(b: &BlockCategory, len: usize, seed: u64) -> (ObjectList, ObjectList, CMatrix) {
    let n = b.cat.num_objects();
    let src = ObjectList((0..len).map(|i| ObjectId(i % n)).collect());
    let dst = ObjectList((0..len).map(|i| ObjectId((i + 1) % n)).collect());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = hull_hom(&b.cat, &src, &dst).random(&mut rng);
    (src, dst, f)
}

pub fn tensor_pair(seed: u64) -> (HilbertModule, Bimodule) {
    let p = BlockParams { objects: 2, sectors: 2, max_sector_dim: 2, max_multiplicity: 1 };
    let a = random_block_category(seed, p);
    let b = random_block_category(seed + 1, p);
    let e = random_bimodule(seed, &a, &b.cat, 2, BimoduleKind::Nondegenerate);
    (random_module(seed, &a.cat, 3), e)
}
