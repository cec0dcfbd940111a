//! Seeded generators of valid test data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

pub use crate::bimodules::bimodule_from_functor;
use crate::bimodules::Bimodule;
use crate::category::{hull_hom, CStarCategory, HomSpace, Object, ObjectId, ObjectList};
use crate::error::{invalid, Result};
use crate::modules::{direct_sum, HilbertModule};
use crate::numc::{self, c64, CMatrix, Tolerance, ONE};

/// Finite groupoid given by explicit tables. Morphism `k` goes
/// `morphisms[k].0 -> morphisms[k].1`; `compose[f][g] = f∘g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteGroupoid {
    pub objects: Vec<String>,
    pub morphisms: Vec<(usize, usize)>,
    pub compose: Vec<Vec<Option<usize>>>,
    pub inverse: Vec<usize>,
    pub identity: Vec<usize>,
}

impl FiniteGroupoid {
    pub fn new(
        objects: Vec<String>,
        morphisms: Vec<(usize, usize)>,
        compose: Vec<Vec<Option<usize>>>,
        inverse: Vec<usize>,
        identity: Vec<usize>,
    ) -> Result<Self> {
        let g = FiniteGroupoid { objects, morphisms, compose, inverse, identity };
        g.validate()?;
        Ok(g)
    }

    /// Groupoid axioms, checked exactly on the tables.
    pub fn validate(&self) -> Result<()> {
        let (n, m) = (self.objects.len(), self.morphisms.len());
        if n == 0 {
            return invalid("groupoid has no objects");
        }
        if self.morphisms.iter().any(|&(s, d)| s >= n || d >= n) {
            return invalid("morphism references a missing object");
        }
        if self.compose.len() != m || self.compose.iter().any(|r| r.len() != m) {
            return invalid(format!("composition table must be {m}x{m}"));
        }
        if self.inverse.len() != m || self.identity.len() != n {
            return invalid("inverse or identity table has the wrong length");
        }
        if self.inverse.iter().chain(&self.identity).any(|&k| k >= m) {
            return invalid("table entry references a missing morphism");
        }
        for f in 0..m {
            for g in 0..m {
                let composable = self.src(f) == self.dst(g);
                match self.compose[f][g] {
                    Some(h) if !composable || h >= m => {
                        return invalid(format!("composite of {f} and {g} is malformed"));
                    }
                    Some(h) if self.morphisms[h] != (self.src(g), self.dst(f)) => {
                        return invalid(format!("composite of {f} and {g} has the wrong endpoints"));
                    }
                    None if composable => return invalid(format!("composite of {f} and {g} is missing")),
                    _ => {}
                }
            }
        }
        for (x, &i) in self.identity.iter().enumerate() {
            if self.morphisms[i] != (x, x) {
                return invalid(format!("identity of object {x} is not an endomorphism of it"));
            }
        }
        for f in 0..m {
            let (s, d) = self.morphisms[f];
            if self.compose[self.identity[d]][f] != Some(f) || self.compose[f][self.identity[s]] != Some(f) {
                return invalid(format!("identities do not act trivially on {f}"));
            }
            let v = self.inverse[f];
            if self.compose[f][v] != Some(self.identity[d]) || self.compose[v][f] != Some(self.identity[s]) {
                return invalid(format!("inverse of {f} is wrong"));
            }
        }
        for f in 0..m {
            for g in 0..m {
                let Some(fg) = self.compose[f][g] else { continue };
                for h in 0..m {
                    let (Some(l), Some(gh)) = (self.compose[fg].get(h).copied().flatten(), self.compose[g][h]) else {
                        continue;
                    };
                    if self.compose[f][gh] != Some(l) {
                        return invalid(format!("composition is not associative on ({f}, {g}, {h})"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn src(&self, f: usize) -> usize {
        self.morphisms[f].0
    }

    pub fn dst(&self, f: usize) -> usize {
        self.morphisms[f].1
    }

    /// Objects `0..k`, with `G(i, j) = Z/order` for all `i, j`.
    pub fn transitive(k: usize, order: usize) -> Self {
        let (k, order) = (k.max(1), order.max(1));
        let idx = |i: usize, j: usize, g: usize| (i * k + j) * order + g;
        let mut morphisms = Vec::new();
        for i in 0..k {
            for j in 0..k {
                for _ in 0..order {
                    morphisms.push((i, j));
                }
            }
        }
        let m = morphisms.len();
        let mut compose = vec![vec![None; m]; m];
        let mut inverse = vec![0; m];
        for i in 0..k {
            for j in 0..k {
                for g in 0..order {
                    inverse[idx(i, j, g)] = idx(j, i, (order - g) % order);
                    for l in 0..k {
                        for h in 0..order {
                            // (j -> l, h) ∘ (i -> j, g)
                            compose[idx(j, l, h)][idx(i, j, g)] = Some(idx(i, l, (g + h) % order));
                        }
                    }
                }
            }
        }
        let identity = (0..k).map(|i| idx(i, i, 0)).collect();
        let objects = (0..k).map(|i| format!("g{i}")).collect();
        FiniteGroupoid { objects, morphisms, compose, inverse, identity }
    }

    pub fn cyclic_group(order: usize) -> Self {
        Self::transitive(1, order)
    }

    pub fn codiscrete(k: usize) -> Self {
        Self::transitive(k, 1)
    }

    pub fn disjoint_union(parts: &[FiniteGroupoid]) -> Self {
        let mut out = FiniteGroupoid {
            objects: Vec::new(),
            morphisms: Vec::new(),
            compose: Vec::new(),
            inverse: Vec::new(),
            identity: Vec::new(),
        };
        let total: usize = parts.iter().map(|p| p.morphisms.len()).sum();
        let (mut ob_off, mut mo_off) = (0, 0);
        for p in parts {
            out.objects.extend(p.objects.iter().map(|l| format!("{l}.{ob_off}")));
            out.morphisms.extend(p.morphisms.iter().map(|&(s, d)| (s + ob_off, d + ob_off)));
            for row in &p.compose {
                let mut r = vec![None; total];
                for (g, c) in row.iter().enumerate() {
                    r[g + mo_off] = c.map(|h| h + mo_off);
                }
                out.compose.push(r);
            }
            out.inverse.extend(p.inverse.iter().map(|v| v + mo_off));
            out.identity.extend(p.identity.iter().map(|v| v + mo_off));
            ob_off += p.objects.len();
            mo_off += p.morphisms.len();
        }
        out
    }

    /// Morphisms into `x`, in table order; they index the basis of the
    /// regular realization at `x`.
    pub fn into(&self, x: usize) -> Vec<usize> {
        (0..self.morphisms.len()).filter(|&f| self.dst(f) == x).collect()
    }
}

/// Left-composition operator of `g: x -> y`, from `⊕_w ℂ[G(w, x)]` to
/// `⊕_w ℂ[G(w, y)]`.
pub fn groupoid_matrix(g: &FiniteGroupoid, f: usize) -> CMatrix {
    let (x, y) = g.morphisms[f];
    let (dom, cod) = (g.into(x), g.into(y));
    let mut m = CMatrix::zeros(cod.len(), dom.len());
    for (j, &h) in dom.iter().enumerate() {
        let fh = g.compose[f][h].expect("validated groupoid");
        let i = cod.iter().position(|&k| k == fh).expect("composite ends at y");
        m[(i, j)] = ONE;
    }
    m
}

pub fn groupoid_category(g: &FiniteGroupoid) -> Result<CStarCategory> {
    g.validate()?;
    let objects = (0..g.objects.len()).map(|x| Object { label: g.objects[x].clone(), dim: g.into(x).len() }).collect();
    let mut gens: Vec<((ObjectId, ObjectId), Vec<CMatrix>)> = Vec::new();
    for (f, &(x, y)) in g.morphisms.iter().enumerate() {
        gens.push(((ObjectId(x), ObjectId(y)), vec![groupoid_matrix(g, f)]));
    }
    CStarCategory::new(objects, gens, &Tolerance::DEFAULT)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockParams {
    pub objects: usize,
    pub sectors: usize,
    pub max_sector_dim: usize,
    pub max_multiplicity: usize,
}

impl Default for BlockParams {
    fn default() -> Self {
        BlockParams { objects: 3, sectors: 2, max_sector_dim: 2, max_multiplicity: 2 }
    }
}

/// Object `x` is `U_x (⊕_σ ℂ^{m_x(σ)} ⊗ ℂ^{d_σ})`.
#[derive(Debug, Clone)]
pub struct BlockStructure {
    pub sector_dims: Vec<usize>,
    pub multiplicities: Vec<Vec<usize>>,
    pub unitaries: Vec<CMatrix>,
}

impl BlockStructure {
    pub fn dim(&self, x: ObjectId) -> usize {
        self.multiplicities[x.0].iter().zip(&self.sector_dims).map(|(m, d)| m * d).sum()
    }

    /// Start of sector `σ` in the unrotated coordinates of `x`.
    pub fn sector_offset(&self, x: ObjectId, sigma: usize) -> usize {
        (0..sigma).map(|t| self.multiplicities[x.0][t] * self.sector_dims[t]).sum()
    }

    /// The matrices `a_σ` with `U_y* a U_x = ⊕_σ a_σ ⊗ I_{d_σ}`.
    pub fn sector_blocks(&self, x: ObjectId, y: ObjectId, a: &CMatrix) -> Vec<CMatrix> {
        let c = self.unitaries[y.0].adjoint() * a * &self.unitaries[x.0];
        let mut out = Vec::new();
        for (sigma, &d) in self.sector_dims.iter().enumerate() {
            let (mx, my) = (self.multiplicities[x.0][sigma], self.multiplicities[y.0][sigma]);
            let (ox, oy) = (self.sector_offset(x, sigma), self.sector_offset(y, sigma));
            let mut blk = CMatrix::zeros(my, mx);
            for i in 0..my {
                for j in 0..mx {
                    blk[(i, j)] = c.view((oy + i * d, ox + j * d), (d, d)).trace() / c64(d as f64, 0.0);
                }
            }
            out.push(blk);
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct BlockCategory {
    pub cat: Arc<CStarCategory>,
    pub structure: BlockStructure,
}

pub fn random_block_category(seed: u64, params: BlockParams) -> BlockCategory {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = params.objects.max(1);
    let s = params.sectors.max(1);
    let sector_dims: Vec<usize> = (0..s).map(|_| rng.random_range(1..=params.max_sector_dim.max(1))).collect();
    let mut multiplicities = Vec::with_capacity(n);
    for _ in 0..n {
        let mut m: Vec<usize> = (0..s).map(|_| rng.random_range(0..=params.max_multiplicity)).collect();
        if m.iter().all(|&k| k == 0) {
            m[rng.random_range(0..s)] = 1;
        }
        multiplicities.push(m);
    }
    let mut structure = BlockStructure { sector_dims, multiplicities, unitaries: Vec::new() };
    structure.unitaries = (0..n).map(|x| numc::random_unitary(&mut rng, structure.dim(ObjectId(x)))).collect();
    let objects: Vec<Object> =
        (0..n).map(|x| Object { label: format!("b{x}"), dim: structure.dim(ObjectId(x)) }).collect();
    let mut homs = Vec::with_capacity(n * n);
    for x in 0..n {
        for y in 0..n {
            let (dx, dy) = (objects[x].dim, objects[y].dim);
            let mut basis = Vec::new();
            for (sigma, &d) in structure.sector_dims.iter().enumerate() {
                let (mx, my) = (structure.multiplicities[x][sigma], structure.multiplicities[y][sigma]);
                let (ox, oy) =
                    (structure.sector_offset(ObjectId(x), sigma), structure.sector_offset(ObjectId(y), sigma));
                let scale = c64(1.0 / (d as f64).sqrt(), 0.0);
                for i in 0..my {
                    for j in 0..mx {
                        let mut e = CMatrix::zeros(dy, dx);
                        for t in 0..d {
                            e[(oy + i * d + t, ox + j * d + t)] = scale;
                        }
                        basis.push(&structure.unitaries[y] * e * structure.unitaries[x].adjoint());
                    }
                }
            }
            homs.push(HomSpace::from_orthonormal(dy, dx, basis));
        }
    }
    let cat = CStarCategory::from_homs(objects, homs).expect("block hom-spaces are consistent");
    BlockCategory { cat: Arc::new(cat), structure }
}

/// Spectral projection onto the positive part of a random Hermitian hull
/// endomorphism; falls back to the identity if that projection is zero.
pub fn random_module(seed: u64, cat: &Arc<CStarCategory>, max_len: usize) -> HilbertModule {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_module_with(&mut rng, cat, max_len, false)
}

/// `⊕_i h_{x_i}` for a random list.
pub fn random_free_module(seed: u64, cat: &Arc<CStarCategory>, max_len: usize) -> HilbertModule {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_module_with(&mut rng, cat, max_len, true)
}

fn random_module_with<R: Rng>(rng: &mut R, cat: &Arc<CStarCategory>, max_len: usize, free: bool) -> HilbertModule {
    let len = rng.random_range(1..=max_len.max(1));
    let base = ObjectList((0..len).map(|_| ObjectId(rng.random_range(0..cat.num_objects()))).collect());
    if free {
        return HilbertModule::free(cat, base);
    }
    let p =
        positive_projection(rng, cat, &base).unwrap_or_else(|| HilbertModule::free(cat, base.clone()).proj().clone());
    HilbertModule::new(cat.clone(), base, p, &Tolerance::DEFAULT).expect("spectral projection of a hull element")
}

fn positive_projection<R: Rng>(rng: &mut R, cat: &CStarCategory, base: &ObjectList) -> Option<CMatrix> {
    let h = hull_hom(cat, base, base).random(rng);
    let s = numc::hermitian_part(&h);
    let (vals, vecs) = numc::hermitian_eigen(&s);
    let cut = Tolerance::DEFAULT.cutoff(numc::op_norm(&s));
    let cols: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > cut).collect();
    if cols.is_empty() {
        return None;
    }
    let mut v = CMatrix::zeros(s.nrows(), cols.len());
    for (j, &i) in cols.iter().enumerate() {
        v.column_mut(j).copy_from(&vecs.column(i));
    }
    Some(numc::hermitian_part(&(&v * v.adjoint())))
}

/// Spectral projection onto the positive part of a random Hermitian
/// endomorphism of `x`, or `None` if that part is zero.
pub fn random_spectral_projection(seed: u64, cat: &CStarCategory, x: ObjectId) -> Option<CMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    positive_projection(&mut rng, cat, &ObjectList::singleton(x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BimoduleKind {
    /// Units act as identities.
    Nondegenerate,
    /// An extra summand on which the action is zero.
    Degenerate,
    /// The first sector acts by zero.
    NonFaithful,
}

/// A random `A -> Hilb B` for a block category `A`: each sector `σ` of `A`
/// acts on a random `B`-module `W_σ`, and `E(x) = ⊕_σ W_σ^{m_x(σ)}`.
pub fn random_bimodule(
    seed: u64,
    source: &BlockCategory,
    target: &Arc<CStarCategory>,
    max_len: usize,
    kind: BimoduleKind,
) -> Bimodule {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let st = &source.structure;
    let a = &source.cat;
    let sectors: Vec<HilbertModule> = (0..st.sector_dims.len())
        .map(|sigma| {
            if kind == BimoduleKind::NonFaithful && sigma == 0 {
                HilbertModule::zero(target)
            } else {
                random_module_with(&mut rng, target, max_len, false)
            }
        })
        .collect();
    let extra = HilbertModule::representable(target, ObjectId(rng.random_range(0..target.num_objects())));
    let mut ob_map = Vec::new();
    for x in a.object_ids() {
        let mut parts = Vec::new();
        for (sigma, w) in sectors.iter().enumerate() {
            for _ in 0..st.multiplicities[x.0][sigma] {
                parts.push(w.clone());
            }
        }
        if kind == BimoduleKind::Degenerate {
            parts.push(extra.clone());
        }
        let m =
            if parts.is_empty() { HilbertModule::zero(target) } else { direct_sum(&parts).expect("same category").0 };
        ob_map.push(m);
    }
    let mut mor_map = Vec::new();
    for x in a.object_ids() {
        for y in a.object_ids() {
            let (ax, ay) = (ob_map[x.0].ambient_dim(), ob_map[y.0].ambient_dim());
            let imgs = a
                .hom(x, y)
                .basis()
                .iter()
                .map(|b| {
                    let blocks: Vec<CMatrix> = st
                        .sector_blocks(x, y, b)
                        .iter()
                        .zip(&sectors)
                        .map(|(blk, w)| numc::kron(blk, w.proj()))
                        .collect();
                    let mut out = CMatrix::zeros(ay, ax);
                    let (mut r, mut c) = (0, 0);
                    for blk in blocks {
                        out.view_mut((r, c), blk.shape()).copy_from(&blk);
                        r += blk.nrows();
                        c += blk.ncols();
                    }
                    out
                })
                .collect();
            mor_map.push(imgs);
        }
    }
    Bimodule::from_parts(a.clone(), target.clone(), ob_map, mor_map)
}
