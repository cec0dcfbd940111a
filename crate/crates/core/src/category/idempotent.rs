use std::sync::Arc;

use super::hull::hull_hom;
use super::{CStarCategory, CStarFunctor, HomSpace, Object, ObjectId, ObjectList};
use crate::error::{invalid, Result};
use crate::numc::{self, op_norm, CMatrix, Tolerance};
use crate::report::Report;

/// An object `(x, p)`, realized on the range of `p` through the isometry `iso`.
#[derive(Debug, Clone)]
pub struct IdempotentObject {
    pub base: ObjectId,
    pub proj: CMatrix,
    pub iso: CMatrix,
}

#[derive(Debug, Clone)]
pub struct IdempotentCompletion {
    pub base: Arc<CStarCategory>,
    pub cat: Arc<CStarCategory>,
    pub objects: Vec<IdempotentObject>,
    /// `x -> (x, id)`.
    pub embedding: CStarFunctor,
}

impl IdempotentCompletion {
    pub fn find(&self, x: ObjectId, p: &CMatrix, tol: &Tolerance) -> Option<ObjectId> {
        self.objects
            .iter()
            .position(|o| o.base == x && o.proj.shape() == p.shape() && tol.accepts(op_norm(&(&o.proj - p)), 1.0))
            .map(ObjectId)
    }

    /// The object `(x, 1 - p)` for `k = (x, p)`, if `p` is not the identity.
    pub fn complement(&self, k: ObjectId, tol: &Tolerance) -> Option<ObjectId> {
        let o = &self.objects[k.0];
        let d = self.base.dim(o.base);
        let q = CMatrix::identity(d, d) - &o.proj;
        if numc::rank(&q, tol) == 0 {
            return None;
        }
        self.find(o.base, &q, tol)
    }

    /// The unitary `(x, id) -> [(x, p), (x, 1 - p)]` splitting `p`, with checks
    /// that it is unitary, lies in the hull, and conjugates `p` to `diag(1, 0)`.
    pub fn splitting(&self, k: ObjectId, tol: &Tolerance) -> Result<(ObjectList, CMatrix, Report)> {
        let o = &self.objects[k.0];
        let x = o.base;
        let whole = ObjectId(x.0);
        let mut list = vec![k];
        let mut rows = vec![o.iso.adjoint()];
        if let Some(c) = self.complement(k, tol) {
            list.push(c);
            rows.push(self.objects[c.0].iso.adjoint());
        }
        let d = self.base.dim(x);
        let u = numc::vstack(&rows, d);
        let list = ObjectList(list);
        let mut report = Report::new();
        if u.nrows() != d {
            return invalid(format!("ranks of p and 1 - p do not add up to {d}"));
        }
        let hom = hull_hom(&self.cat, &ObjectList::singleton(whole), &list);
        report.check("splitting_in_hull", hom.residual(&u), tol.threshold(u.norm()));
        let id = CMatrix::identity(d, d);
        report.check("splitting_isometry", op_norm(&(u.adjoint() * &u - &id)), tol.threshold(1.0));
        report.check("splitting_coisometry", op_norm(&(&u * u.adjoint() - &id)), tol.threshold(1.0));
        let r = o.iso.ncols();
        let mut target = CMatrix::zeros(d, d);
        target.view_mut((0, 0), (r, r)).fill_with_identity();
        report.check("splitting_block_form", op_norm(&(&u * &o.proj * u.adjoint() - target)), tol.threshold(1.0));
        report.check("retraction", op_norm(&(&o.iso * o.iso.adjoint() - &o.proj)), tol.threshold(1.0));
        Ok((list, u, report))
    }
}

/// Adds `(x, p)` for every supplied projection together with `(x, 1 - p)`;
/// `(x, id)` is always present and takes index `x`.
pub fn idempotent_completion(
    base: &Arc<CStarCategory>,
    projections: &[(ObjectId, CMatrix)],
    tol: &Tolerance,
) -> Result<IdempotentCompletion> {
    for x in base.object_ids() {
        let d = base.dim(x);
        let id = CMatrix::identity(d, d);
        if !base.hom(x, x).contains(&id, tol) {
            return invalid(format!("object {} has no unit in its endomorphism space", base.label(x)));
        }
    }
    let mut objects: Vec<IdempotentObject> = base
        .object_ids()
        .map(|x| {
            let d = base.dim(x);
            IdempotentObject { base: x, proj: CMatrix::identity(d, d), iso: CMatrix::identity(d, d) }
        })
        .collect();
    let same = |objects: &[IdempotentObject], x: ObjectId, p: &CMatrix| {
        objects.iter().any(|o| o.base == x && tol.accepts(op_norm(&(&o.proj - p)), 1.0))
    };
    for (x, p) in projections {
        base.check_id(*x)?;
        numc::validate(p)?;
        let d = base.dim(*x);
        if p.shape() != (d, d) {
            return invalid(format!("projection on {} has shape {:?}", base.label(*x), p.shape()));
        }
        if !base.hom(*x, *x).contains(p, tol) {
            return invalid(format!("projection is not an endomorphism of {}", base.label(*x)));
        }
        if !numc::is_projection(p, tol) {
            return invalid(format!(
                "supplied matrix on {} is not a projection (residual {:.3e})",
                base.label(*x),
                numc::projection_residual(p)
            ));
        }
        let q = CMatrix::identity(d, d) - p;
        for r in [p.clone(), q] {
            let iso = numc::range_isometry(&r, tol);
            if iso.ncols() == 0 || same(&objects, *x, &r) {
                continue;
            }
            // re-derive the projection from the isometry so it is exact
            let proj = &iso * iso.adjoint();
            objects.push(IdempotentObject { base: *x, proj, iso });
        }
    }

    let labels: Vec<Object> = objects
        .iter()
        .enumerate()
        .map(|(k, o)| Object {
            label: if k < base.num_objects() {
                base.label(o.base).to_string()
            } else {
                format!("({},p{k})", base.label(o.base))
            },
            dim: o.iso.ncols(),
        })
        .collect();
    let mut homs = Vec::new();
    for s in &objects {
        for d in &objects {
            let gens: Vec<CMatrix> =
                base.hom(s.base, d.base).basis().iter().map(|b| d.iso.adjoint() * b * &s.iso).collect();
            homs.push(HomSpace::span_of(d.iso.ncols(), s.iso.ncols(), &gens, tol)?);
        }
    }
    let cat = Arc::new(CStarCategory::from_homs(labels, homs)?);
    let embedding = CStarFunctor::from_fn(base.clone(), cat.clone(), base.object_ids().collect(), |_, _, b| b.clone())?;
    Ok(IdempotentCompletion { base: base.clone(), cat, objects, embedding })
}
