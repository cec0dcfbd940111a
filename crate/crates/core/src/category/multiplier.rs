use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

use super::factor::{factorize, factorize_left};
use super::hull::{additive_hull, block_of, embed_block, list_offsets};
use super::{CStarCategory, Morphism, ObjectId, ObjectList};
use crate::error::{invalid, Result};
use crate::numc::{self, op_norm, CMatrix, Tolerance, C64};
use crate::report::{Check, Report, Worst};

/// A pair of coordinate maps `L: A(src, src) -> A(src, dst)` and
/// `R: A(dst, dst) -> A(src, dst)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierMorphism {
    pub src: ObjectId,
    pub dst: ObjectId,
    pub left: CMatrix,
    pub right: CMatrix,
}

impl MultiplierMorphism {
    fn stacked(&self) -> DVector<C64> {
        let mut v = Vec::with_capacity(self.left.len() + self.right.len());
        v.extend_from_slice(self.left.as_slice());
        v.extend_from_slice(self.right.as_slice());
        DVector::from_vec(v)
    }

    fn from_stacked(src: ObjectId, dst: ObjectId, v: &[C64], shape: (usize, usize, usize)) -> Self {
        let (n_xy, n_xx, n_yy) = shape;
        let split = n_xy * n_xx;
        MultiplierMorphism {
            src,
            dst,
            left: CMatrix::from_column_slice(n_xy, n_xx, &v[..split]),
            right: CMatrix::from_column_slice(n_xy, n_yy, &v[split..]),
        }
    }

    pub fn zero(cat: &CStarCategory, src: ObjectId, dst: ObjectId) -> Self {
        let n_xy = cat.hom_dim(src, dst);
        MultiplierMorphism {
            src,
            dst,
            left: CMatrix::zeros(n_xy, cat.hom_dim(src, src)),
            right: CMatrix::zeros(n_xy, cat.hom_dim(dst, dst)),
        }
    }

    pub fn add(&self, other: &MultiplierMorphism) -> MultiplierMorphism {
        MultiplierMorphism {
            src: self.src,
            dst: self.dst,
            left: &self.left + &other.left,
            right: &self.right + &other.right,
        }
    }

    pub fn scale(&self, s: C64) -> MultiplierMorphism {
        MultiplierMorphism { src: self.src, dst: self.dst, left: &self.left * s, right: &self.right * s }
    }

    /// Euclidean norm of the coordinate pair; used for residuals only.
    pub fn coord_norm(&self) -> f64 {
        (self.left.norm_squared() + self.right.norm_squared()).sqrt()
    }
}

/// Coordinate matrix of a linear map between hom-spaces.
fn map_matrix(
    cat: &CStarCategory,
    from: (ObjectId, ObjectId),
    to: (ObjectId, ObjectId),
    op: impl Fn(&CMatrix) -> CMatrix,
) -> CMatrix {
    let images: Vec<CMatrix> = cat.hom(from.0, from.1).basis().iter().map(op).collect();
    cat.hom(to.0, to.1).coords_many(&images)
}

fn apply_map(cat: &CStarCategory, to: (ObjectId, ObjectId), t: &CMatrix, coords: &DVector<C64>) -> CMatrix {
    cat.hom(to.0, to.1).combine((t * coords).as_slice())
}

/// The unit plus a few random elements, when they generate `A(x, x)` as an
/// algebra; otherwise the whole basis.
fn algebra_generators(cat: &CStarCategory, x: ObjectId, seed: u64, tol: &Tolerance) -> Vec<CMatrix> {
    let h = cat.hom(x, x);
    let d = cat.dim(x);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (x.0 as u64).wrapping_mul(0x9e37_79b9));
    let gens: Vec<CMatrix> = (0..2).map(|_| h.random(&mut rng)).collect();
    let mut span =
        numc::orthonormal_span(&[vec![CMatrix::identity(d, d)], gens.clone()].concat(), tol).unwrap_or_default();
    loop {
        let mut next = span.clone();
        for s in &span {
            for g in &gens {
                next.push(s * g);
            }
        }
        let grown = numc::orthonormal_span(&next, tol).unwrap_or_default();
        if grown.len() == span.len() || grown.len() >= h.dim() {
            span = grown;
            break;
        }
        span = grown;
    }
    let mut out = vec![CMatrix::identity(d, d)];
    if span.len() == h.dim() {
        out.extend(gens);
    } else {
        out.extend(h.basis().iter().cloned());
    }
    out
}

/// Per-pair spaces of multiplier morphisms, solved as null spaces.
#[derive(Debug, Clone)]
pub struct MultiplierCategory {
    base: Arc<CStarCategory>,
    spaces: Vec<Vec<MultiplierMorphism>>,
}

const GENERATOR_SEED: u64 = 0x6e6e;

pub fn multiplier_category(base: &Arc<CStarCategory>, tol: &Tolerance) -> Result<MultiplierCategory> {
    let cat = base.as_ref();
    let gens: Vec<Vec<CMatrix>> = cat.object_ids().map(|x| algebra_generators(cat, x, GENERATOR_SEED, tol)).collect();
    let mut spaces = Vec::new();
    for x in cat.object_ids() {
        for y in cat.object_ids() {
            spaces.push(solve_pair(cat, x, y, &gens[x.0], &gens[y.0], tol));
        }
    }
    let mc = MultiplierCategory { base: base.clone(), spaces };
    let r = mc.check_definition(tol);
    if !r.passed() {
        return invalid(format!("multiplier solutions failed the defining identities:\n{r}"));
    }
    Ok(mc)
}

fn solve_pair(
    cat: &CStarCategory,
    x: ObjectId,
    y: ObjectId,
    gens_x: &[CMatrix],
    gens_y: &[CMatrix],
    tol: &Tolerance,
) -> Vec<MultiplierMorphism> {
    let (n_xx, n_xy, n_yy) = (cat.hom_dim(x, x), cat.hom_dim(x, y), cat.hom_dim(y, y));
    if n_xy == 0 {
        return Vec::new();
    }
    let nl = n_xy * n_xx;
    let n = nl + n_xy * n_yy;
    let bxx = cat.hom(x, x).basis();
    let byy = cat.hom(y, y).basis();
    let hxx = cat.hom(x, x);
    let hyy = cat.hom(y, y);
    let right_by = |h: &CMatrix| map_matrix(cat, (x, y), (x, y), |e| e * h);
    let left_by = |g: &CMatrix| map_matrix(cat, (x, y), (x, y), |e| g * e);

    let mut rows: Vec<DVector<C64>> = Vec::new();
    let mut emit = |block: CMatrix| {
        for r in block.row_iter() {
            rows.push(r.transpose());
        }
    };

    // L(f h) = L(f) h
    for h in gens_x {
        let rh = right_by(h);
        for (fi, f) in bxx.iter().enumerate() {
            let v = hxx.coords(&(f * h));
            let mut block = CMatrix::zeros(n_xy, n);
            for k in 0..n_xy {
                for m in 0..n_xx {
                    block[(k, k + n_xy * m)] += v[m];
                }
                for j in 0..n_xy {
                    block[(k, j + n_xy * fi)] -= rh[(k, j)];
                }
            }
            emit(block);
        }
    }
    // R(g g') = g R(g')
    for g in gens_y {
        let lh = left_by(g);
        for (gi, gp) in byy.iter().enumerate() {
            let v = hyy.coords(&(g * gp));
            let mut block = CMatrix::zeros(n_xy, n);
            for k in 0..n_xy {
                for m in 0..n_yy {
                    block[(k, nl + k + n_xy * m)] += v[m];
                }
                for j in 0..n_xy {
                    block[(k, nl + j + n_xy * gi)] -= lh[(k, j)];
                }
            }
            emit(block);
        }
    }
    // R(g) f = g L(f)
    for f in gens_x {
        let rf = right_by(f);
        let cf = hxx.coords(f);
        for g in gens_y {
            let lg = left_by(g);
            let cg = hyy.coords(g);
            let mut block = CMatrix::zeros(n_xy, n);
            for k in 0..n_xy {
                for j in 0..n_xy {
                    for m in 0..n_yy {
                        block[(k, nl + j + n_xy * m)] += rf[(k, j)] * cg[m];
                    }
                    for m in 0..n_xx {
                        block[(k, j + n_xy * m)] -= lg[(k, j)] * cf[m];
                    }
                }
            }
            emit(block);
        }
    }

    let mut system = CMatrix::zeros(rows.len(), n);
    for (i, r) in rows.iter().enumerate() {
        system.row_mut(i).copy_from(&r.transpose());
    }
    let null = numc::null_space(&system, tol);
    null.column_iter().map(|c| MultiplierMorphism::from_stacked(x, y, c.as_slice(), (n_xy, n_xx, n_yy))).collect()
}

/// Per-object extensions of a multiplier: `left[w]: A(w, src) -> A(w, dst)` and
/// `right[z]: A(dst, z) -> A(src, z)`, as coordinate matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierArrays {
    pub src: ObjectId,
    pub dst: ObjectId,
    pub left: Vec<CMatrix>,
    pub right: Vec<CMatrix>,
}

impl MultiplierCategory {
    pub fn base(&self) -> &Arc<CStarCategory> {
        &self.base
    }

    pub fn space(&self, x: ObjectId, y: ObjectId) -> &[MultiplierMorphism] {
        &self.spaces[x.0 * self.base.num_objects() + y.0]
    }

    pub fn dim(&self, x: ObjectId, y: ObjectId) -> usize {
        self.space(x, y).len()
    }

    /// Distance of `m` from the solution space, in coordinates.
    pub fn residual(&self, m: &MultiplierMorphism) -> f64 {
        let v = m.stacked();
        let mut r = v.clone();
        for b in self.space(m.src, m.dst) {
            let bv = b.stacked();
            let c = bv.dotc(&v);
            r -= bv * c;
        }
        r.norm()
    }

    pub fn combine(&self, x: ObjectId, y: ObjectId, coords: &[C64]) -> MultiplierMorphism {
        let mut out = MultiplierMorphism::zero(&self.base, x, y);
        for (b, c) in self.space(x, y).iter().zip(coords) {
            out = out.add(&b.scale(*c));
        }
        out
    }

    /// `κ(a) = (f ↦ a∘f, g ↦ g∘a)`.
    pub fn kappa(&self, a: &Morphism) -> MultiplierMorphism {
        let cat = self.base.as_ref();
        let (x, y) = (a.src, a.dst);
        MultiplierMorphism {
            src: x,
            dst: y,
            left: map_matrix(cat, (x, x), (x, y), |f| &a.mat * f),
            right: map_matrix(cat, (y, y), (x, y), |g| g * &a.mat),
        }
    }

    /// `L(id)`; inverse of κ on unital categories.
    pub fn kappa_inverse(&self, m: &MultiplierMorphism) -> Morphism {
        let cat = self.base.as_ref();
        let id = cat.identity(m.src);
        let c = cat.coords(&id);
        Morphism { src: m.src, dst: m.dst, mat: apply_map(cat, (m.src, m.dst), &m.left, &c) }
    }

    pub fn apply_left(&self, m: &MultiplierMorphism, f: &CMatrix) -> CMatrix {
        let c = self.base.hom(m.src, m.src).coords(f);
        apply_map(&self.base, (m.src, m.dst), &m.left, &c)
    }

    pub fn apply_right(&self, m: &MultiplierMorphism, g: &CMatrix) -> CMatrix {
        let c = self.base.hom(m.dst, m.dst).coords(g);
        apply_map(&self.base, (m.src, m.dst), &m.right, &c)
    }

    /// Checks the module-map and compatibility identities on all basis pairs.
    pub fn check_definition(&self, tol: &Tolerance) -> Report {
        let cat = self.base.as_ref();
        let mut left_mod = Worst::new();
        let mut right_mod = Worst::new();
        let mut compat = Worst::new();
        for x in cat.object_ids() {
            for y in cat.object_ids() {
                for m in self.space(x, y) {
                    let scale = m.coord_norm();
                    for f in cat.hom(x, x).basis() {
                        let lf = self.apply_left(m, f);
                        for h in cat.hom(x, x).basis() {
                            let r = self.apply_left(m, &(f * h)) - &lf * h;
                            left_mod.observe(r.norm(), tol.threshold(scale));
                        }
                        for g in cat.hom(y, y).basis() {
                            let r = self.apply_right(m, g) * f - g * &lf;
                            compat.observe(r.norm(), tol.threshold(scale));
                        }
                    }
                    for g in cat.hom(y, y).basis() {
                        for gp in cat.hom(y, y).basis() {
                            let r = self.apply_right(m, &(g * gp)) - g * self.apply_right(m, gp);
                            right_mod.observe(r.norm(), tol.threshold(scale));
                        }
                    }
                }
            }
        }
        let mut r = Report::new();
        r.push(left_mod.check("left_module_map"));
        r.push(right_mod.check("right_module_map"));
        r.push(compat.check("compatibility"));
        r
    }

    /// Extends `(L, R)` to all objects via factorizations `f = s∘t`, `g = v∘w`.
    pub fn arrays(&self, m: &MultiplierMorphism, tol: &Tolerance) -> Result<MultiplierArrays> {
        let cat = self.base.as_ref();
        let (x, y) = (m.src, m.dst);
        let mut left = Vec::new();
        let mut right = Vec::new();
        for w in cat.object_ids() {
            let mut imgs = Vec::new();
            for f in cat.hom(w, x).basis() {
                let (s, t) = factorize_left(cat, &Morphism { src: w, dst: x, mat: f.clone() }, tol)?;
                imgs.push(self.apply_left(m, &s.mat) * &t.mat);
            }
            left.push(cat.hom(w, y).coords_many(&imgs));
        }
        for z in cat.object_ids() {
            let mut imgs = Vec::new();
            for g in cat.hom(y, z).basis() {
                let (v, w) = factorize(cat, &Morphism { src: y, dst: z, mat: g.clone() }, tol)?;
                imgs.push(&v.mat * self.apply_right(m, &w.mat));
            }
            right.push(cat.hom(x, z).coords_many(&imgs));
        }
        Ok(MultiplierArrays { src: x, dst: y, left, right })
    }

    /// `m1 ∘ m2` for `m2: w -> x`, `m1: x -> y`.
    pub fn compose(
        &self,
        m1: &MultiplierMorphism,
        m2: &MultiplierMorphism,
        tol: &Tolerance,
    ) -> Result<MultiplierMorphism> {
        if m2.dst != m1.src {
            return invalid(format!("cannot compose multipliers {}->{} after {}->{}", m1.src, m1.dst, m2.src, m2.dst));
        }
        let a1 = self.arrays(m1, tol)?;
        let a2 = self.arrays(m2, tol)?;
        Ok(MultiplierMorphism {
            src: m2.src,
            dst: m1.dst,
            left: &a1.left[m2.src.0] * &m2.left,
            right: &a2.right[m1.dst.0] * &m1.right,
        })
    }

    /// `L*(g) = R(g*)*`, `R*(f) = L(f*)*`.
    pub fn involute(&self, m: &MultiplierMorphism) -> MultiplierMorphism {
        let cat = self.base.as_ref();
        let (x, y) = (m.src, m.dst);
        let left_imgs: Vec<CMatrix> =
            cat.hom(y, y).basis().iter().map(|g| self.apply_right(m, &g.adjoint()).adjoint()).collect();
        let right_imgs: Vec<CMatrix> =
            cat.hom(x, x).basis().iter().map(|f| self.apply_left(m, &f.adjoint()).adjoint()).collect();
        MultiplierMorphism {
            src: y,
            dst: x,
            left: cat.hom(y, x).coords_many(&left_imgs),
            right: cat.hom(y, x).coords_many(&right_imgs),
        }
    }

    /// Lower estimate of `sup ‖T f‖` over `‖f‖ <= 1` for a coordinate map
    /// `T: A(from) -> A(to)`; exact whenever the sup is attained at the unit.
    pub fn map_norm(
        &self,
        from: (ObjectId, ObjectId),
        to: (ObjectId, ObjectId),
        t: &CMatrix,
        probes: usize,
        seed: u64,
    ) -> f64 {
        let cat = self.base.as_ref();
        let h = cat.hom(from.0, from.1);
        if h.dim() == 0 {
            return 0.0;
        }
        let eval = |f: &CMatrix| {
            let n = op_norm(f);
            if n == 0.0 {
                return 0.0;
            }
            op_norm(&apply_map(cat, to, t, &h.coords(f))) / n
        };
        let mut best: f64 = 0.0;
        if from.0 == from.1 {
            best = eval(&cat.identity(from.0).mat);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..probes {
            best = best.max(eval(&h.random(&mut rng)));
        }
        best
    }
}

/// Restricts compatible arrays to `(L_src, R_dst)` after checking the three
/// compatibility identities on all basis elements.
pub fn multiplier_from_arrays(
    cat: &CStarCategory,
    arrays: &MultiplierArrays,
    tol: &Tolerance,
) -> Result<MultiplierMorphism> {
    let (x, y) = (arrays.src, arrays.dst);
    let n = cat.num_objects();
    if arrays.left.len() != n || arrays.right.len() != n {
        return invalid("arrays must have one map per object");
    }
    for w in cat.object_ids() {
        if arrays.left[w.0].shape() != (cat.hom_dim(w, y), cat.hom_dim(w, x))
            || arrays.right[w.0].shape() != (cat.hom_dim(x, w), cat.hom_dim(y, w))
        {
            return invalid(format!("array entries at {w} have the wrong shape"));
        }
    }
    let lw = |w: ObjectId, f: &CMatrix| apply_map(cat, (w, y), &arrays.left[w.0], &cat.hom(w, x).coords(f));
    let rz = |z: ObjectId, g: &CMatrix| apply_map(cat, (x, z), &arrays.right[z.0], &cat.hom(y, z).coords(g));
    let scale = arrays.left.iter().chain(arrays.right.iter()).map(op_norm).fold(0.0, f64::max);
    let mut worst = Worst::new();
    for w in cat.object_ids() {
        for f in cat.hom(w, x).basis() {
            let l = lw(w, f);
            for wp in cat.object_ids() {
                for h in cat.hom(wp, w).basis() {
                    worst.observe((&l * h - lw(wp, &(f * h))).norm(), tol.threshold(scale));
                }
            }
            for z in cat.object_ids() {
                for g in cat.hom(y, z).basis() {
                    worst.observe((rz(z, g) * f - g * &l).norm(), tol.threshold(scale));
                }
            }
        }
    }
    for z in cat.object_ids() {
        for g in cat.hom(y, z).basis() {
            let r = rz(z, g);
            for zp in cat.object_ids() {
                for h in cat.hom(z, zp).basis() {
                    worst.observe((h * &r - rz(zp, &(h * g))).norm(), tol.threshold(scale));
                }
            }
        }
    }
    let c = worst.check("array_compatibility");
    if !c.pass {
        return invalid(format!("incompatible multiplier arrays: residual {:.3e}", c.residual));
    }
    Ok(MultiplierMorphism { src: x, dst: y, left: arrays.left[x.0].clone(), right: arrays.right[y.0].clone() })
}

/// Compares multipliers of the additive hull with block matrices of
/// multipliers: dimensions per pair of lists, and composition and involution
/// transported along `[m_ji] ↦ κ([L_ji(id)])`.
pub fn addmult_check(base: &Arc<CStarCategory>, samples: usize, seed: u64, tol: &Tolerance) -> Result<Report> {
    let hull = additive_hull(base, &[])?;
    let ma = multiplier_category(base, tol)?;
    let mh = multiplier_category(&hull.cat, tol)?;
    let hids: Vec<ObjectId> = hull.cat.object_ids().collect();

    let mut dim_gap = 0usize;
    for &xs in &hids {
        for &ys in &hids {
            let expect: usize = hull
                .list(xs)
                .iter()
                .flat_map(|&x| hull.list(ys).iter().map(move |&y| (x, y)))
                .map(|(x, y)| ma.dim(x, y))
                .sum();
            dim_gap += expect.abs_diff(mh.dim(xs, ys));
        }
    }

    type Blocks = Vec<Vec<MultiplierMorphism>>; // [row j][col i]
    let random_blocks = |rng: &mut ChaCha8Rng, src: &ObjectList, dst: &ObjectList| -> Blocks {
        dst.iter()
            .map(|&y| src.iter().map(|&x| ma.combine(x, y, &numc::random_coords(rng, ma.dim(x, y)))).collect())
            .collect()
    };
    let assemble = |blocks: &Blocks, src: ObjectId, dst: ObjectId| -> MultiplierMorphism {
        let (sl, dl) = (hull.list(src), hull.list(dst));
        let (so, dof) = (list_offsets(base, sl), list_offsets(base, dl));
        let mut mat = CMatrix::zeros(dof[dl.len()], so[sl.len()]);
        for (j, row) in blocks.iter().enumerate() {
            for (i, m) in row.iter().enumerate() {
                let a = ma.kappa_inverse(m).mat;
                mat += embed_block(mat.nrows(), mat.ncols(), dof[j], so[i], &a);
            }
        }
        mh.kappa(&Morphism { src, dst, mat })
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut comp = Worst::new();
    let mut inv = Worst::new();
    let mut member = Worst::new();
    let mut roundtrip = Worst::new();
    for _ in 0..samples {
        let pick = |rng: &mut ChaCha8Rng| hids[rng.random_range(0..hids.len())];
        let (xs, ys, zs) = (pick(&mut rng), pick(&mut rng), pick(&mut rng));
        let m = random_blocks(&mut rng, hull.list(xs), hull.list(ys));
        let mp = random_blocks(&mut rng, hull.list(ys), hull.list(zs));

        // blockwise composite (m' ∘ m)_{ki} = Σ_j m'_kj ∘ m_ji
        let mut prod: Blocks = Vec::new();
        for row in &mp {
            let mut out_row = Vec::new();
            for (i, &x) in hull.list(xs).iter().enumerate() {
                let z = row[0].dst;
                let mut acc = MultiplierMorphism::zero(base, x, z);
                for (j, mkj) in row.iter().enumerate() {
                    acc = acc.add(&ma.compose(mkj, &m[j][i], tol)?);
                }
                out_row.push(acc);
            }
            prod.push(out_row);
        }
        let lhs = assemble(&prod, xs, zs);
        let phi_m = assemble(&m, xs, ys);
        let phi_mp = assemble(&mp, ys, zs);
        let rhs = mh.compose(&phi_mp, &phi_m, tol)?;
        let scale = phi_m.coord_norm() * phi_mp.coord_norm();
        comp.observe(lhs.add(&rhs.scale(C64::from(-1.0))).coord_norm(), tol.threshold(scale.max(lhs.coord_norm())));

        let star: Blocks =
            (0..hull.list(xs).len()).map(|i| m.iter().map(|row| ma.involute(&row[i])).collect()).collect();
        let lhs = assemble(&star, ys, xs);
        let rhs = mh.involute(&phi_m);
        inv.observe(lhs.add(&rhs.scale(C64::from(-1.0))).coord_norm(), tol.threshold(phi_m.coord_norm()));

        member.observe(mh.residual(&phi_m), tol.threshold(phi_m.coord_norm()));

        // blocks read back from L(id) of the assembled multiplier
        let back = mh.kappa_inverse(&phi_m).mat;
        let (so, dof) = (list_offsets(base, hull.list(xs)), list_offsets(base, hull.list(ys)));
        for (j, row) in m.iter().enumerate() {
            for (i, mji) in row.iter().enumerate() {
                let blk = block_of(&back, dof[j], so[i], base.dim(mji.dst), base.dim(mji.src));
                let again = ma.kappa(&Morphism { src: mji.src, dst: mji.dst, mat: blk });
                roundtrip.observe(again.add(&mji.scale(C64::from(-1.0))).coord_norm(), tol.threshold(mji.coord_norm()));
            }
        }
    }

    let mut r = Report::new();
    r.push(Check::new("dimension_mismatch", dim_gap as f64, 0.0));
    r.push(comp.check("composition_transport"));
    r.push(inv.check("involution_transport"));
    r.push(member.check("image_is_multiplier"));
    r.push(roundtrip.check("block_roundtrip"));
    Ok(r)
}
