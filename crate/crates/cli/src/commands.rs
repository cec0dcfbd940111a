use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use cstarcat::bimodules::{
    check_imprimitivity, check_nondegenerate, compare_tensor, conjugate_bimodule, ew_map, mat_equivalence, morita_phi,
    morita_psi, tensor_bimodule_bimodule, tensor_module_bimodule, verify_bimodule, yoneda_bimodule, Bimodule,
};
use cstarcat::category::{
    additive_hull, hull_hom, idempotent_completion, matrix_algebra, multiplier_category, verify_functor,
};
use cstarcat::generators::{
    groupoid_category, random_bimodule, random_block_category, random_module, random_spectral_projection, BimoduleKind,
    BlockParams, FiniteGroupoid,
};
use cstarcat::modules::{gram_matrix, psd_deficit};
use cstarcat::numc::{self, op_norm};
use cstarcat::{verify_category, CStarCategory, Check, HilbertModule, Report, Tolerance};

use crate::error::CliError;
use crate::format::{self, BimoduleData, CategoryData, Kind, ModuleData, SpecFile};
use crate::report::{CliReport, InputDigest};

/// A loaded input file.
pub struct Input {
    pub path: String,
    pub digest: InputDigest,
    pub spec: SpecFile,
}

pub fn read_input(path: &Path) -> Result<Input, CliError> {
    let p = path.display().to_string();
    let bytes = std::fs::read(path).map_err(|source| CliError::Io { path: p.clone(), source })?;
    let text = String::from_utf8(bytes.clone()).map_err(|e| CliError::Parse(e.to_string()))?;
    let spec = format::parse_spec(&text)?;
    Ok(Input { digest: InputDigest::of(&p, &bytes), path: p, spec })
}

/// Result of a command: the report and, for constructing commands, the file
/// produced.
pub struct Outcome {
    pub report: CliReport,
    pub output: Option<SpecFile>,
}

fn outcome(command: &str, inputs: &[&Input], report: Report, start: Instant, output: Option<SpecFile>) -> Outcome {
    let digests = inputs.iter().map(|i| i.digest.clone()).collect();
    Outcome { report: CliReport::new(command, digests, report, start.elapsed().as_secs_f64()), output }
}

/// Categories can be given directly or as a groupoid.
pub fn load_category(spec: &SpecFile, tol: &Tolerance) -> Result<CStarCategory, CliError> {
    match spec.kind {
        Kind::Groupoid => Ok(groupoid_category(&format::groupoid_from_spec(spec)?)?),
        _ => format::category_from_data(&format::payload::<CategoryData>(spec, Kind::Category)?, tol),
    }
}

pub fn load_bimodule(spec: &SpecFile, tol: &Tolerance) -> Result<Bimodule, CliError> {
    format::bimodule_from_data(&format::payload::<BimoduleData>(spec, Kind::Bimodule)?, tol)
}

fn module_checks(raw: &format::RawModule, tol: &Tolerance) -> Result<Report, CliError> {
    let amb = cstarcat::category::list_dim(&raw.cat, &raw.base);
    if raw.proj.shape() != (amb, amb) {
        return Err(CliError::Parse(format!("projection has shape {:?}, expected {amb}x{amb}", raw.proj.shape())));
    }
    let mut r = Report::new();
    r.check("projection", numc::projection_residual(&raw.proj), tol.threshold(1.0));
    let h = hull_hom(&raw.cat, &raw.base, &raw.base);
    r.check("hull_membership", h.residual(&raw.proj), tol.threshold(raw.proj.norm()));
    Ok(r)
}

fn gram_positivity(m: &HilbertModule, seed: u64, tol: &Tolerance) -> Check {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<_> = m.cat().object_ids().collect();
    if ids.is_empty() {
        return Check::new("gram_positivity", 0.0, 0.0);
    }
    let els: Vec<_> = (0..4).map(|i| m.random_element(&mut rng, ids[i % ids.len()])).collect();
    let (_, g) = gram_matrix(m, &els).expect("elements of the module");
    Check::new("gram_positivity", psd_deficit(&g), tol.threshold(op_norm(&g)))
}

pub fn cmd_verify(path: &Path, tol: &Tolerance) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let input = read_input(path)?;
    let report = match input.spec.kind {
        Kind::Category | Kind::Groupoid => verify_category(&load_category(&input.spec, tol)?, tol),
        Kind::Module => {
            let d: ModuleData = format::payload(&input.spec, Kind::Module)?;
            let raw = format::raw_module(&d, tol)?;
            let mut r = verify_category(&raw.cat, tol).prefixed("category");
            let mc = module_checks(&raw, tol)?;
            let ok = mc.passed();
            r.extend(mc);
            if ok {
                let m = format::module_from_raw(raw, tol)?;
                r.push(gram_positivity(&m, 0, tol));
            }
            r
        }
        Kind::Bimodule => {
            let e = load_bimodule(&input.spec, tol)?;
            let mut r = verify_category(e.source(), tol).prefixed("source");
            r.extend(verify_category(e.target(), tol).prefixed("target"));
            r.extend(verify_bimodule(&e, tol));
            r
        }
    };
    Ok(outcome("verify", &[&input], report, start, None))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstructVerb {
    Hull,
    Matalg,
    Idem,
    Multiplier,
    Conjugate,
}

pub fn cmd_construct(verb: ConstructVerb, path: &Path, seed: u64, tol: &Tolerance) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let input = read_input(path)?;
    let cat_spec = |cat: &CStarCategory| format::envelope(Kind::Category, &format::category_to_data(cat));
    let (report, output) = match verb {
        ConstructVerb::Conjugate => {
            let e = load_bimodule(&input.spec, tol)?;
            let imp = check_imprimitivity(&e, tol);
            let mut r = imp.report.clone();
            match imp.data {
                Some(data) => {
                    let conj = conjugate_bimodule(&data, tol)?;
                    r.extend(verify_bimodule(&conj.bimodule, tol).prefixed("conjugate"));
                    let spec = format::envelope(Kind::Bimodule, &format::bimodule_to_data(&conj.bimodule));
                    (r, Some(spec))
                }
                None => (r, None),
            }
        }
        _ => {
            let base = Arc::new(load_category(&input.spec, tol)?);
            match verb {
                ConstructVerb::Hull => {
                    let h = additive_hull(&base, &[])?;
                    let mut r = verify_category(&h.cat, tol);
                    r.extend(verify_functor(&h.embedding, tol).report.prefixed("embedding"));
                    (r, Some(cat_spec(&h.cat)))
                }
                ConstructVerb::Matalg => {
                    let m = matrix_algebra(&base)?;
                    (verify_category(&m.algebra, tol), Some(cat_spec(&m.algebra)))
                }
                ConstructVerb::Idem => {
                    let projections: Vec<_> = base
                        .object_ids()
                        .filter_map(|x| random_spectral_projection(seed ^ x.0 as u64, &base, x).map(|p| (x, p)))
                        .collect();
                    let c = idempotent_completion(&base, &projections, tol)?;
                    let mut r = verify_category(&c.cat, tol);
                    for k in (base.num_objects()..c.objects.len()).map(cstarcat::ObjectId) {
                        let (_, _, split) = c.splitting(k, tol)?;
                        r.extend(split.prefixed(&format!("object{}", k.0)));
                    }
                    (r, Some(cat_spec(&c.cat)))
                }
                ConstructVerb::Multiplier => {
                    let m = multiplier_category(&base, tol)?;
                    let mut r = m.check_definition(tol);
                    let mut gap = 0usize;
                    let mut homs = Vec::new();
                    for x in base.object_ids() {
                        for y in base.object_ids() {
                            gap += m.dim(x, y).abs_diff(base.hom_dim(x, y));
                            let gens: Vec<_> = m.space(x, y).iter().map(|mm| m.kappa_inverse(mm).mat).collect();
                            homs.push(((x, y), gens));
                        }
                    }
                    r.push(Check::new("dimension_matches_base", gap as f64, 0.0));
                    let realized = CStarCategory::new(base.objects().to_vec(), homs, tol)?;
                    r.extend(verify_category(&realized, tol).prefixed("realized"));
                    (r, Some(cat_spec(&realized)))
                }
                ConstructVerb::Conjugate => unreachable!("handled above"),
            }
        }
    };
    let name = format!("construct {verb:?}").to_lowercase();
    Ok(outcome(&name, &[&input], report, start, output))
}

pub fn cmd_tensor(left: &Path, right: &Path, oracle: bool, tol: &Tolerance) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let li = read_input(left)?;
    let ri = read_input(right)?;
    let fdata: BimoduleData = format::payload(&ri.spec, Kind::Bimodule)?;
    let mut report = Report::new();
    let output = match li.spec.kind {
        Kind::Module => {
            let d: ModuleData = format::payload(&li.spec, Kind::Module)?;
            let f = format::bimodule_from_data(&fdata, tol)?;
            let m = format::module_over(&d, f.source(), tol)?;
            let t = tensor_module_bimodule(&m, &f)?;
            report.check("projection", numc::projection_residual(t.proj()), tol.threshold(1.0));
            if oracle {
                report.extend(compare_tensor(&m, &f, tol)?.prefixed("oracle"));
            }
            format::envelope(Kind::Module, &format::module_to_data(&t))
        }
        Kind::Bimodule => {
            let e = load_bimodule(&li.spec, tol)?;
            let c = if fdata.target == fdata.source {
                e.target().clone()
            } else {
                Arc::new(format::category_from_data(&fdata.target, tol)?)
            };
            let f = format::bimodule_between(&fdata, e.target(), &c, tol)?;
            let t = tensor_bimodule_bimodule(&e, &f)?;
            report.extend(verify_bimodule(&t, tol));
            if oracle {
                for x in e.source().object_ids() {
                    report.extend(compare_tensor(e.module(x), &f, tol)?.prefixed(&format!("oracle.object{}", x.0)));
                }
            }
            format::envelope(Kind::Bimodule, &format::bimodule_to_data(&t))
        }
        other => return Err(CliError::Parse(format!("cannot tensor a {other:?} file"))),
    };
    Ok(outcome("tensor", &[&li, &ri], report, start, Some(output)))
}

pub fn cmd_morita(path: &Path, tol: &Tolerance) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let input = read_input(path)?;
    let e = load_bimodule(&input.spec, tol)?;
    let imp = check_imprimitivity(&e, tol);
    let mut report = imp.report.clone().prefixed("imprimitivity");
    if let Some(data) = imp.data {
        let conj = conjugate_bimodule(&data, tol)?;
        report.extend(check_imprimitivity(&conj.bimodule, tol).report.prefixed("conjugate"));
        report.extend(morita_phi(&data, &conj, tol)?.report.prefixed("phi"));
        report.extend(morita_psi(&data, &conj, tol)?.report.prefixed("psi"));
    }
    Ok(outcome("morita", &[&input], report, start, None))
}

pub fn cmd_ew(path: &Path, seed: u64, count: usize, tol: &Tolerance) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let input = read_input(path)?;
    let e = load_bimodule(&input.spec, tol)?;
    let nd = check_nondegenerate(&e, tol);
    let mut report = nd.report.clone().prefixed("nondegenerate");
    if nd.nondegenerate() {
        for i in 0..count {
            let s = seed.wrapping_add(i as u64);
            let m = random_module(s, e.source(), 3);
            report.extend(ew_map(&m, &e, tol)?.report.prefixed(&format!("seed{s}")));
        }
    }
    Ok(outcome("ew", &[&input], report, start, None))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenKind {
    Category,
    Groupoid,
    Module,
    Bimodule,
    /// A category acting on itself by composition.
    Yoneda,
    /// The equivalence between a category and its matrix algebra.
    Matequiv,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenParams {
    pub block: BlockParams,
    pub max_len: usize,
    pub groupoid_objects: usize,
    pub order: usize,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            block: BlockParams { objects: 2, sectors: 2, max_sector_dim: 2, max_multiplicity: 1 },
            max_len: 2,
            groupoid_objects: 2,
            order: 2,
        }
    }
}

/// The generated file alone; deterministic in `(kind, seed, params)`.
pub fn generate(kind: GenKind, seed: u64, params: &GenParams) -> SpecFile {
    match kind {
        GenKind::Category => {
            let b = random_block_category(seed, params.block);
            format::envelope(Kind::Category, &format::category_to_data(&b.cat))
        }
        GenKind::Groupoid => {
            let g = FiniteGroupoid::transitive(params.groupoid_objects, params.order);
            format::envelope(Kind::Groupoid, &g)
        }
        GenKind::Module => {
            let b = random_block_category(seed, params.block);
            let m = random_module(seed, &b.cat, params.max_len);
            format::envelope(Kind::Module, &format::module_to_data(&m))
        }
        GenKind::Bimodule => {
            let a = random_block_category(seed, params.block);
            let b = random_block_category(seed.wrapping_add(1), params.block);
            let e = random_bimodule(seed, &a, &b.cat, params.max_len, BimoduleKind::Nondegenerate);
            format::envelope(Kind::Bimodule, &format::bimodule_to_data(&e))
        }
        GenKind::Yoneda => {
            let b = random_block_category(seed, params.block);
            format::envelope(Kind::Bimodule, &format::bimodule_to_data(&yoneda_bimodule(&b.cat)))
        }
        GenKind::Matequiv => {
            let b = random_block_category(seed, params.block);
            let m = mat_equivalence(&b.cat, &Tolerance::DEFAULT).expect("block categories have a matrix algebra");
            format::envelope(Kind::Bimodule, &format::bimodule_to_data(&m.bimodule))
        }
    }
}

pub fn cmd_gen(kind: GenKind, seed: u64, params: &GenParams, tol: &Tolerance) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let spec = generate(kind, seed, params);
    let report = match kind {
        GenKind::Category | GenKind::Groupoid => verify_category(&load_category(&spec, tol)?, tol),
        GenKind::Module => {
            let d: ModuleData = format::payload(&spec, Kind::Module)?;
            module_checks(&format::raw_module(&d, tol)?, tol)?
        }
        GenKind::Bimodule | GenKind::Yoneda | GenKind::Matequiv => verify_bimodule(&load_bimodule(&spec, tol)?, tol),
    };
    Ok(outcome("gen", &[], report, start, Some(spec)))
}

pub fn write_output(spec: &SpecFile, out: &Path) -> Result<(), CliError> {
    std::fs::write(out, format::canonical(spec))
        .map_err(|source| CliError::Io { path: out.display().to_string(), source })
}

/// Load a file into the library types and serialize it again.
pub fn reserialize(spec: &SpecFile, tol: &Tolerance) -> Result<SpecFile, CliError> {
    Ok(match spec.kind {
        Kind::Category => format::envelope(Kind::Category, &format::category_to_data(&load_category(spec, tol)?)),
        Kind::Groupoid => format::envelope(Kind::Groupoid, &format::groupoid_from_spec(spec)?),
        Kind::Module => {
            let d: ModuleData = format::payload(spec, Kind::Module)?;
            let m = format::module_from_raw(format::raw_module(&d, tol)?, tol)?;
            format::envelope(Kind::Module, &format::module_to_data(&m))
        }
        Kind::Bimodule => format::envelope(Kind::Bimodule, &format::bimodule_to_data(&load_bimodule(spec, tol)?)),
    })
}
