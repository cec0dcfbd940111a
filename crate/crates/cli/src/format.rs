//! The `.cstar.json` file format: a versioned envelope around a
//! kind-specific payload, with complex scalars written as `[re, im]`.

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use std::sync::Arc;

use cstarcat::bimodules::Bimodule;
use cstarcat::category::{HomSpace, Object};
use cstarcat::generators::FiniteGroupoid;
use cstarcat::numc::{self, CMatrix, C64};
use cstarcat::{CStarCategory, HilbertModule, ObjectId, ObjectList, Tolerance};

use crate::error::CliError;

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Category,
    Module,
    Bimodule,
    Groupoid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub kind: Kind,
    pub version: String,
    pub payload: serde_json::Value,
}

/// Row-major complex matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixData {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectData {
    pub label: String,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomData {
    pub src: usize,
    pub dst: usize,
    pub basis: Vec<MatrixData>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CategoryData {
    pub objects: Vec<ObjectData>,
    /// Non-zero hom-spaces only.
    pub homs: Vec<HomData>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresentationData {
    pub base: Vec<usize>,
    pub proj: MatrixData,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModuleData {
    pub category: CategoryData,
    pub base: Vec<usize>,
    pub proj: MatrixData,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionData {
    pub src: usize,
    pub dst: usize,
    pub images: Vec<MatrixData>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BimoduleData {
    pub source: CategoryData,
    pub target: CategoryData,
    pub modules: Vec<PresentationData>,
    /// Images of the source hom bases, for non-zero hom-spaces.
    pub action: Vec<ActionData>,
}

pub fn parse_spec(text: &str) -> Result<SpecFile, CliError> {
    let spec: SpecFile = serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    if spec.version != FORMAT_VERSION {
        return Err(CliError::Parse(format!("unsupported format version {:?}", spec.version)));
    }
    Ok(spec)
}

pub fn payload<T: DeserializeOwned>(spec: &SpecFile, kind: Kind) -> Result<T, CliError> {
    if spec.kind != kind {
        return Err(CliError::Parse(format!("expected a {kind:?} file, found {:?}", spec.kind)));
    }
    serde_json::from_value(spec.payload.clone()).map_err(|e| CliError::Parse(e.to_string()))
}

pub fn envelope<T: Serialize>(kind: Kind, payload: &T) -> SpecFile {
    SpecFile {
        kind,
        version: FORMAT_VERSION.to_string(),
        payload: serde_json::to_value(payload).expect("payload types serialize"),
    }
}

/// Pretty-printed JSON with a trailing newline; shortest round-trip floats.
pub fn canonical(spec: &SpecFile) -> String {
    let mut s = serde_json::to_string_pretty(spec).expect("spec files serialize");
    s.push('\n');
    s
}

pub fn matrix_to_data(m: &CMatrix) -> MatrixData {
    let mut data = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            data.push([z.re, z.im]);
        }
    }
    MatrixData { rows: m.nrows(), cols: m.ncols(), data }
}

pub fn matrix_from_data(d: &MatrixData) -> Result<CMatrix, CliError> {
    if d.data.len() != d.rows * d.cols {
        return Err(CliError::Parse(format!("matrix declares {}x{} but has {} entries", d.rows, d.cols, d.data.len())));
    }
    Ok(CMatrix::from_fn(d.rows, d.cols, |i, j| {
        let [re, im] = d.data[i * d.cols + j];
        C64::new(re, im)
    }))
}

pub fn category_to_data(cat: &CStarCategory) -> CategoryData {
    let objects = cat.objects().iter().map(|o| ObjectData { label: o.label.clone(), dim: o.dim }).collect();
    let mut homs = Vec::new();
    for x in cat.object_ids() {
        for y in cat.object_ids() {
            let h = cat.hom(x, y);
            if h.dim() > 0 {
                homs.push(HomData { src: x.0, dst: y.0, basis: h.basis().iter().map(matrix_to_data).collect() });
            }
        }
    }
    CategoryData { objects, homs }
}

fn orthonormal(basis: &[CMatrix], tol: &Tolerance) -> bool {
    basis.iter().enumerate().all(|(i, a)| {
        basis.iter().enumerate().all(|(j, b)| {
            let expect = if i == j { 1.0 } else { 0.0 };
            (numc::frob_inner(a, b) - C64::new(expect, 0.0)).norm() <= tol.threshold(1.0)
        })
    })
}

/// Orthonormal bases are kept verbatim (so canonical files round-trip);
/// anything else is treated as a spanning set and orthonormalized.
pub fn category_from_data(d: &CategoryData, tol: &Tolerance) -> Result<CStarCategory, CliError> {
    let n = d.objects.len();
    let objects: Vec<Object> = d.objects.iter().map(|o| Object { label: o.label.clone(), dim: o.dim }).collect();
    let mut homs: Vec<Option<HomSpace>> = vec![None; n * n];
    for h in &d.homs {
        if h.src >= n || h.dst >= n {
            return Err(CliError::Parse(format!("hom-space ({}, {}) references a missing object", h.src, h.dst)));
        }
        let slot = &mut homs[h.src * n + h.dst];
        if slot.is_some() {
            return Err(CliError::Parse(format!("hom-space ({}, {}) listed twice", h.src, h.dst)));
        }
        let (rows, cols) = (objects[h.dst].dim, objects[h.src].dim);
        let basis: Vec<CMatrix> = h.basis.iter().map(matrix_from_data).collect::<Result<_, _>>()?;
        if let Some(b) = basis.iter().find(|b| b.shape() != (rows, cols)) {
            return Err(CliError::Parse(format!(
                "basis element of hom({}, {}) has shape {:?}, expected {:?}",
                h.src,
                h.dst,
                b.shape(),
                (rows, cols)
            )));
        }
        *slot = Some(if orthonormal(&basis, tol) {
            HomSpace::from_orthonormal(rows, cols, basis)
        } else {
            HomSpace::span_of(rows, cols, &basis, tol)?
        });
    }
    let homs = homs
        .into_iter()
        .enumerate()
        .map(|(k, h)| h.unwrap_or_else(|| HomSpace::zero(objects[k % n].dim, objects[k / n].dim)))
        .collect();
    Ok(CStarCategory::from_homs(objects, homs)?)
}

fn object_list(cat: &CStarCategory, base: &[usize]) -> Result<ObjectList, CliError> {
    if let Some(&x) = base.iter().find(|&&x| x >= cat.num_objects()) {
        return Err(CliError::Parse(format!("base list references missing object {x}")));
    }
    Ok(ObjectList(base.iter().map(|&x| ObjectId(x)).collect()))
}

/// Raw presentation, before validation.
pub struct RawModule {
    pub cat: Arc<CStarCategory>,
    pub base: ObjectList,
    pub proj: CMatrix,
}

pub fn raw_module(d: &ModuleData, tol: &Tolerance) -> Result<RawModule, CliError> {
    let cat = Arc::new(category_from_data(&d.category, tol)?);
    presentation(&cat, &PresentationData { base: d.base.clone(), proj: d.proj.clone() })
}

fn presentation(cat: &Arc<CStarCategory>, d: &PresentationData) -> Result<RawModule, CliError> {
    let base = object_list(cat, &d.base)?;
    let proj = matrix_from_data(&d.proj)?;
    Ok(RawModule { cat: cat.clone(), base, proj })
}

pub fn module_from_raw(raw: RawModule, tol: &Tolerance) -> Result<HilbertModule, CliError> {
    Ok(HilbertModule::new(raw.cat, raw.base, raw.proj, tol)?)
}

pub fn module_to_data(m: &HilbertModule) -> ModuleData {
    ModuleData {
        category: category_to_data(m.cat()),
        base: m.base().iter().map(|x| x.0).collect(),
        proj: matrix_to_data(m.proj()),
    }
}

/// Loads a module, rebuilt over an existing category when the embedded
/// category data matches it exactly.
pub fn module_over(d: &ModuleData, cat: &Arc<CStarCategory>, tol: &Tolerance) -> Result<HilbertModule, CliError> {
    if d.category != category_to_data(cat) {
        return Err(CliError::Parse("module is over a different category".into()));
    }
    let raw = presentation(cat, &PresentationData { base: d.base.clone(), proj: d.proj.clone() })?;
    module_from_raw(raw, tol)
}

pub fn bimodule_to_data(e: &Bimodule) -> BimoduleData {
    let a = e.source();
    let modules = e
        .modules()
        .iter()
        .map(|m| PresentationData { base: m.base().iter().map(|x| x.0).collect(), proj: matrix_to_data(m.proj()) })
        .collect();
    let mut action = Vec::new();
    for x in a.object_ids() {
        for y in a.object_ids() {
            if a.hom_dim(x, y) > 0 {
                action.push(ActionData {
                    src: x.0,
                    dst: y.0,
                    images: e.images(x, y).iter().map(matrix_to_data).collect(),
                });
            }
        }
    }
    BimoduleData { source: category_to_data(a), target: category_to_data(e.target()), modules, action }
}

pub fn bimodule_from_data(d: &BimoduleData, tol: &Tolerance) -> Result<Bimodule, CliError> {
    let a = Arc::new(category_from_data(&d.source, tol)?);
    let b = if d.target == d.source { a.clone() } else { Arc::new(category_from_data(&d.target, tol)?) };
    bimodule_between(d, &a, &b, tol)
}

/// Loads a bimodule over given categories, which must match the embedded data.
pub fn bimodule_between(
    d: &BimoduleData,
    a: &Arc<CStarCategory>,
    b: &Arc<CStarCategory>,
    tol: &Tolerance,
) -> Result<Bimodule, CliError> {
    if d.source != category_to_data(a) || d.target != category_to_data(b) {
        return Err(CliError::Parse("bimodule categories do not match".into()));
    }
    let n = a.num_objects();
    if d.modules.len() != n {
        return Err(CliError::Parse(format!("bimodule lists {} modules for {n} objects", d.modules.len())));
    }
    let modules: Vec<HilbertModule> =
        d.modules.iter().map(|p| module_from_raw(presentation(b, p)?, tol)).collect::<Result<_, _>>()?;
    let mut mor_map: Vec<Option<Vec<CMatrix>>> = vec![None; n * n];
    for act in &d.action {
        if act.src >= n || act.dst >= n {
            return Err(CliError::Parse(format!("action on ({}, {}) references a missing object", act.src, act.dst)));
        }
        let imgs = act.images.iter().map(matrix_from_data).collect::<Result<_, _>>()?;
        if mor_map[act.src * n + act.dst].replace(imgs).is_some() {
            return Err(CliError::Parse(format!("action on ({}, {}) listed twice", act.src, act.dst)));
        }
    }
    let mor_map = mor_map.into_iter().map(Option::unwrap_or_default).collect();
    Ok(Bimodule::new(a.clone(), b.clone(), modules, mor_map, tol)?)
}

pub fn groupoid_from_spec(spec: &SpecFile) -> Result<FiniteGroupoid, CliError> {
    let g: FiniteGroupoid = payload(spec, Kind::Groupoid)?;
    g.validate()?;
    Ok(g)
}
