use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

use super::{CStarCategory, Morphism, ObjectId};
use crate::error::{invalid, Result};
use crate::numc::{self, op_norm, CMatrix, Tolerance, C64};
use crate::report::{Check, Report, Worst};

/// A linear *-functor between concrete categories, given by the images of
/// each source hom-basis.
#[derive(Debug, Clone)]
pub struct CStarFunctor {
    source: Arc<CStarCategory>,
    target: Arc<CStarCategory>,
    object_map: Vec<ObjectId>,
    // indexed by src * n + dst of the source category
    action: Vec<Vec<CMatrix>>,
}

impl CStarFunctor {
    pub fn new(
        source: Arc<CStarCategory>,
        target: Arc<CStarCategory>,
        object_map: Vec<ObjectId>,
        action: Vec<Vec<CMatrix>>,
    ) -> Result<Self> {
        let n = source.num_objects();
        if object_map.len() != n {
            return invalid(format!("object map has {} entries for {n} objects", object_map.len()));
        }
        for &y in &object_map {
            target.check_id(y)?;
        }
        if action.len() != n * n {
            return invalid(format!("functor action lists {} hom-spaces, expected {}", action.len(), n * n));
        }
        for x in source.object_ids() {
            for y in source.object_ids() {
                let imgs = &action[x.0 * n + y.0];
                if imgs.len() != source.hom_dim(x, y) {
                    return invalid(format!(
                        "functor action on hom({x}, {y}) has {} images for a {}-dimensional space",
                        imgs.len(),
                        source.hom_dim(x, y)
                    ));
                }
                let shape = (target.dim(object_map[y.0]), target.dim(object_map[x.0]));
                for m in imgs {
                    numc::validate(m)?;
                    if m.shape() != shape {
                        return invalid(format!(
                            "functor image on hom({x}, {y}) has shape {:?}, expected {shape:?}",
                            m.shape()
                        ));
                    }
                }
            }
        }
        Ok(CStarFunctor { source, target, object_map, action })
    }

    pub fn identity(cat: &Arc<CStarCategory>) -> Self {
        let mut action = Vec::new();
        for x in cat.object_ids() {
            for y in cat.object_ids() {
                action.push(cat.hom(x, y).basis().to_vec());
            }
        }
        CStarFunctor { source: cat.clone(), target: cat.clone(), object_map: cat.object_ids().collect(), action }
    }

    /// Builds the action by applying `f` to every source basis element.
    pub fn from_fn(
        source: Arc<CStarCategory>,
        target: Arc<CStarCategory>,
        object_map: Vec<ObjectId>,
        f: impl Fn(ObjectId, ObjectId, &CMatrix) -> CMatrix,
    ) -> Result<Self> {
        let mut action = Vec::new();
        for x in source.object_ids() {
            for y in source.object_ids() {
                action.push(source.hom(x, y).basis().iter().map(|b| f(x, y, b)).collect());
            }
        }
        CStarFunctor::new(source, target, object_map, action)
    }

    pub fn source(&self) -> &Arc<CStarCategory> {
        &self.source
    }

    pub fn target(&self) -> &Arc<CStarCategory> {
        &self.target
    }

    pub fn map_object(&self, x: ObjectId) -> ObjectId {
        self.object_map[x.0]
    }

    pub fn object_map(&self) -> &[ObjectId] {
        &self.object_map
    }

    pub fn images(&self, src: ObjectId, dst: ObjectId) -> &[CMatrix] {
        &self.action[src.0 * self.source.num_objects() + dst.0]
    }

    pub fn apply_coords(&self, src: ObjectId, dst: ObjectId, coords: &[C64]) -> CMatrix {
        let shape = (self.target.dim(self.map_object(dst)), self.target.dim(self.map_object(src)));
        let mut out = CMatrix::zeros(shape.0, shape.1);
        for (img, c) in self.images(src, dst).iter().zip(coords) {
            out += img * *c;
        }
        out
    }

    pub fn apply_matrix(&self, src: ObjectId, dst: ObjectId, m: &CMatrix) -> CMatrix {
        let c = self.source.hom(src, dst).coords(m);
        self.apply_coords(src, dst, c.as_slice())
    }

    pub fn apply(&self, f: &Morphism) -> Morphism {
        Morphism {
            src: self.map_object(f.src),
            dst: self.map_object(f.dst),
            mat: self.apply_matrix(f.src, f.dst, &f.mat),
        }
    }

    pub fn is_injective_on(&self, src: ObjectId, dst: ObjectId, tol: &Tolerance) -> bool {
        let imgs = self.images(src, dst);
        if imgs.is_empty() {
            return true;
        }
        let (r, c) = imgs[0].shape();
        numc::rank(&numc::stack(imgs, r, c), tol) == imgs.len()
    }
}

#[derive(Debug, Clone)]
pub struct FunctorReport {
    pub report: Report,
    /// Hom-spaces on which the functor is not injective.
    pub non_injective: Vec<(ObjectId, ObjectId)>,
    /// Injective everywhere and isometric on the samples.
    pub isometric: bool,
}

const SAMPLES: usize = 6;

pub fn verify_functor(functor: &CStarFunctor, tol: &Tolerance) -> FunctorReport {
    let src = functor.source();
    let tgt = functor.target();
    let ids: Vec<ObjectId> = src.object_ids().collect();
    let mut in_target = Worst::new();
    let mut mult = Worst::new();
    let mut star = Worst::new();
    let mut decrease = Worst::new();
    let mut iso = Worst::new();
    let mut non_injective = Vec::new();

    for &x in &ids {
        for &y in &ids {
            let th = tgt.hom(functor.map_object(x), functor.map_object(y));
            for img in functor.images(x, y) {
                in_target.observe(th.residual(img), tol.threshold(img.norm()));
            }
            for (k, g) in src.hom(x, y).basis().iter().enumerate() {
                let fg = &functor.images(x, y)[k];
                let lhs = functor.apply_matrix(y, x, &g.adjoint());
                star.observe(op_norm(&(lhs - fg.adjoint())), tol.threshold(op_norm(fg)));
                for &z in &ids {
                    for (l, f) in src.hom(y, z).basis().iter().enumerate() {
                        let ff = &functor.images(y, z)[l];
                        let lhs = functor.apply_matrix(x, z, &(f * g));
                        let rhs = ff * fg;
                        mult.observe(op_norm(&(lhs - &rhs)), tol.threshold(op_norm(ff) * op_norm(fg)));
                    }
                }
            }
            if !functor.is_injective_on(x, y, tol) {
                non_injective.push((x, y));
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0xf00);
    for &x in &ids {
        let endo_injective = functor.is_injective_on(x, x, tol);
        for &y in &ids {
            if src.hom_dim(x, y) == 0 {
                continue;
            }
            for _ in 0..SAMPLES {
                let a = src.random_morphism(&mut rng, x, y);
                let na = a.norm();
                let nf = functor.apply(&a).norm();
                decrease.observe((nf - na).max(0.0), tol.threshold(na));
                if endo_injective {
                    iso.observe((nf - na).abs(), tol.threshold(na));
                }
            }
        }
    }

    let mut report = Report::new();
    report.push(in_target.check("images_in_target"));
    report.push(mult.check("multiplicativity"));
    report.push(star.check("star_preservation"));
    report.push(decrease.check("norm_decrease"));
    let iso_check = iso.check("isometry_on_injective");
    let isometric = iso_check.pass && non_injective.is_empty();
    report.push(iso_check);
    report.push(Check::new("non_injective_hom_spaces", non_injective.len() as f64, f64::INFINITY));
    FunctorReport { report, non_injective, isometric }
}
