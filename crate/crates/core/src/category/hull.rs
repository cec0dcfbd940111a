use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

use super::{CStarCategory, CStarFunctor, HomSpace, Morphism, Object, ObjectId, ObjectList};
use crate::error::{invalid, Result};
use crate::numc::{op_norm, CMatrix, C64};

/// Prefix sums of object dimensions along a list; `len + 1` entries.
pub fn list_offsets(cat: &CStarCategory, list: &ObjectList) -> Vec<usize> {
    let mut out = Vec::with_capacity(list.len() + 1);
    let mut acc = 0;
    out.push(0);
    for &x in list.iter() {
        acc += cat.dim(x);
        out.push(acc);
    }
    out
}

pub fn list_dim(cat: &CStarCategory, list: &ObjectList) -> usize {
    list.iter().map(|&x| cat.dim(x)).sum()
}

pub fn embed_block(rows: usize, cols: usize, row_off: usize, col_off: usize, m: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(rows, cols);
    out.view_mut((row_off, col_off), m.shape()).copy_from(m);
    out
}

pub fn block_of(m: &CMatrix, row_off: usize, col_off: usize, rows: usize, cols: usize) -> CMatrix {
    m.view((row_off, col_off), (rows, cols)).into_owned()
}

/// Block hom-space from `src` to `dst`: block `(j, i)` ranges over
/// `hom(src[i], dst[j])`.
pub fn hull_hom(cat: &CStarCategory, src: &ObjectList, dst: &ObjectList) -> HomSpace {
    let so = list_offsets(cat, src);
    let dof = list_offsets(cat, dst);
    let (rows, cols) = (dof[dst.len()], so[src.len()]);
    let mut basis = Vec::new();
    for (j, &y) in dst.iter().enumerate() {
        for (i, &x) in src.iter().enumerate() {
            for b in cat.hom(x, y).basis() {
                basis.push(embed_block(rows, cols, dof[j], so[i], b));
            }
        }
    }
    HomSpace::from_orthonormal(rows, cols, basis)
}

/// `sqrt ‖Σ b_i* b_i‖` for a block column `b` over `list`.
fn column_norm(cat: &CStarCategory, list: &ObjectList, b: &CMatrix) -> f64 {
    let off = list_offsets(cat, list);
    let mut acc = CMatrix::zeros(b.ncols(), b.ncols());
    for (i, &x) in list.iter().enumerate() {
        let bi = b.rows(off[i], cat.dim(x));
        acc += bi.adjoint() * bi;
    }
    op_norm(&acc).sqrt()
}

/// The supremum norm of a block morphism, evaluated over admissible columns
/// `b: [w] -> src` of norm one: `sup ‖[f][b]‖`. Random probes are followed by an
/// ascent along powers of `f* f` within each admissible column space.
pub fn hull_norm_formula(
    cat: &CStarCategory,
    src: &ObjectList,
    dst: &ObjectList,
    f: &CMatrix,
    probes: usize,
    seed: u64,
) -> f64 {
    let value = |b: &CMatrix| {
        let nb = column_norm(cat, src, b);
        if nb == 0.0 {
            return 0.0;
        }
        column_norm(cat, dst, &(f * b)) / nb
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = f.adjoint() * f;
    let mut best: f64 = 0.0;
    for w in cat.object_ids() {
        let adm = hull_hom(cat, &ObjectList::singleton(w), src);
        if adm.dim() == 0 {
            continue;
        }
        let mut start = adm.random(&mut rng);
        let mut start_val = value(&start);
        for _ in 1..probes.max(1) {
            let b = adm.random(&mut rng);
            let v = value(&b);
            if v > start_val {
                start = b;
                start_val = v;
            }
        }
        best = best.max(start_val);

        // (f*f)^(2^k) B converges to the top spectral subspace of f*f
        let fro = m.norm();
        if fro == 0.0 {
            continue;
        }
        let mut mk = &m / C64::from(fro);
        for _ in 0..40 {
            mk = &mk * &mk;
            let n = mk.norm();
            if n == 0.0 || !n.is_finite() {
                break;
            }
            mk /= C64::from(n);
        }
        let mut b = &mk * &start;
        if b.norm().is_nan() || b.norm() <= 1e-300 {
            b = start.clone();
        }
        for _ in 0..4 {
            let next = &m * &b;
            let n = next.norm();
            if n == 0.0 {
                break;
            }
            b = next / C64::from(n);
            best = best.max(value(&b));
        }
        best = best.max(value(&b));
    }
    best
}

/// A chosen family of object lists realized as a concrete category.
#[derive(Debug, Clone)]
pub struct AdditiveHull {
    pub base: Arc<CStarCategory>,
    pub cat: Arc<CStarCategory>,
    pub lists: Vec<ObjectList>,
    pub embedding: CStarFunctor,
}

impl AdditiveHull {
    /// Singletons come first, so `[x]` has the same index as `x`.
    pub fn singleton(&self, x: ObjectId) -> ObjectId {
        ObjectId(x.0)
    }

    pub fn full(&self) -> ObjectId {
        self.find(&self.base.full_list()).expect("full list is always materialized")
    }

    pub fn find(&self, list: &ObjectList) -> Option<ObjectId> {
        self.lists.iter().position(|l| l == list).map(ObjectId)
    }

    pub fn list(&self, id: ObjectId) -> &ObjectList {
        &self.lists[id.0]
    }
}

/// Materializes all singletons, the full object list and any `extra` lists.
pub fn additive_hull(base: &Arc<CStarCategory>, extra: &[ObjectList]) -> Result<AdditiveHull> {
    let mut lists: Vec<ObjectList> = base.object_ids().map(ObjectList::singleton).collect();
    let mut push = |l: ObjectList| {
        if !lists.contains(&l) {
            lists.push(l);
        }
    };
    push(base.full_list());
    for l in extra {
        if l.is_empty() {
            return invalid("additive hull lists must be non-empty");
        }
        for &x in l.iter() {
            base.check_id(x)?;
        }
        push(l.clone());
    }
    let objects: Vec<Object> = lists
        .iter()
        .map(|l| Object {
            label: format!("[{}]", l.iter().map(|&x| base.label(x).to_string()).collect::<Vec<_>>().join(",")),
            dim: list_dim(base, l),
        })
        .collect();
    let mut homs = Vec::with_capacity(lists.len() * lists.len());
    for s in &lists {
        for d in &lists {
            homs.push(hull_hom(base, s, d));
        }
    }
    let cat = Arc::new(CStarCategory::from_homs(objects, homs)?);
    let n = base.num_objects();
    let mut action = Vec::with_capacity(n * n);
    for x in base.object_ids() {
        for y in base.object_ids() {
            action.push(base.hom(x, y).basis().to_vec());
        }
    }
    let embedding = CStarFunctor::new(base.clone(), cat.clone(), base.object_ids().collect(), action)?;
    Ok(AdditiveHull { base: base.clone(), cat, lists, embedding })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockPosition {
    pub src: ObjectId,
    pub dst: ObjectId,
    pub row_offset: usize,
    pub col_offset: usize,
}

/// The endomorphism algebra of the full object list, as a one-object category.
#[derive(Debug, Clone)]
pub struct MatrixAlgebra {
    pub base: Arc<CStarCategory>,
    pub algebra: Arc<CStarCategory>,
    pub offsets: Vec<usize>,
    pub positions: Vec<BlockPosition>,
}

impl MatrixAlgebra {
    pub fn object(&self) -> ObjectId {
        ObjectId(0)
    }

    pub fn position(&self, src: ObjectId, dst: ObjectId) -> BlockPosition {
        self.positions[src.0 * self.base.num_objects() + dst.0]
    }

    pub fn embed(&self, f: &Morphism) -> CMatrix {
        let p = self.position(f.src, f.dst);
        let n = *self.offsets.last().unwrap();
        embed_block(n, n, p.row_offset, p.col_offset, &f.mat)
    }

    /// The `(src, dst)` block of an algebra element.
    pub fn block(&self, m: &CMatrix, src: ObjectId, dst: ObjectId) -> CMatrix {
        let p = self.position(src, dst);
        block_of(m, p.row_offset, p.col_offset, self.base.dim(dst), self.base.dim(src))
    }
}

pub fn matrix_algebra(base: &Arc<CStarCategory>) -> Result<MatrixAlgebra> {
    let full = base.full_list();
    let offsets = list_offsets(base, &full);
    let hom = hull_hom(base, &full, &full);
    let n = offsets[full.len()];
    let label = format!("Mat({})", base.object_ids().map(|x| base.label(x).to_string()).collect::<Vec<_>>().join(","));
    let algebra = Arc::new(CStarCategory::from_homs(vec![Object { label, dim: n }], vec![hom])?);
    let mut positions = Vec::new();
    for x in base.object_ids() {
        for y in base.object_ids() {
            positions.push(BlockPosition { src: x, dst: y, row_offset: offsets[y.0], col_offset: offsets[x.0] });
        }
    }
    Ok(MatrixAlgebra { base: base.clone(), algebra, offsets, positions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::category::{full_matrix_category, verify_category, verify_functor};
    use crate::numc::{random_matrix, Tolerance};

    #[test]
    fn singleton_hull_is_a_copy() {
        let base = Arc::new(full_matrix_category(&[1, 2]));
        let h = additive_hull(&base, &[]).unwrap();
        for x in base.object_ids() {
            for y in base.object_ids() {
                assert_eq!(h.cat.hom_dim(h.singleton(x), h.singleton(y)), base.hom_dim(x, y));
            }
        }
        let fr = verify_functor(&h.embedding, &Tolerance::DEFAULT);
        assert!(fr.report.passed(), "{}", fr.report);
        assert!(fr.isometric);
    }

    #[test]
    fn repeated_object_amplifies() {
        let base = Arc::new(full_matrix_category(&[2]));
        let x = ObjectId(0);
        let h = additive_hull(&base, &[ObjectList(vec![x, x, x])]).unwrap();
        let l = h.find(&ObjectList(vec![x, x, x])).unwrap();
        assert_eq!(h.cat.hom_dim(l, l), 9 * 4);
        assert!(verify_category(&h.cat, &Tolerance::DEFAULT).passed());
    }

    #[test]
    fn full_list_dimension_is_sum() {
        let base = Arc::new(full_matrix_category(&[1, 2]));
        let h = additive_hull(&base, &[]).unwrap();
        let total: usize = base.total_hom_dim();
        assert_eq!(h.cat.hom_dim(h.full(), h.full()), total);
    }

    #[test]
    fn hull_norm_simple_cases() {
        let base = full_matrix_category(&[2, 1]);
        let l = base.full_list();
        let id = CMatrix::identity(3, 3);
        assert!((hull_norm_formula(&base, &l, &l, &id, 4, 1) - 1.0).abs() < 1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let b = random_matrix(&mut rng, 1, 2);
        let f = embed_block(3, 3, 2, 0, &b);
        let v = hull_norm_formula(&base, &l, &l, &f, 4, 1);
        assert!((v - op_norm(&b)).abs() <= 1e-6 * op_norm(&b));
    }

    #[test]
    fn matrix_algebra_of_full_category() {
        let base = Arc::new(full_matrix_category(&[1, 2]));
        let m = matrix_algebra(&base).unwrap();
        assert_eq!(m.algebra.dim(m.object()), 3);
        assert_eq!(m.algebra.hom_dim(m.object(), m.object()), 9);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = base.random_morphism(&mut rng, ObjectId(0), ObjectId(1));
        let e = m.embed(&f);
        assert_eq!(m.block(&e, ObjectId(0), ObjectId(1)), f.mat);
    }
}
