//! Ideal-valued measures and quasi-measures on finite models: evaluation,
//! pushforward, exhaustive axiom checking, chain stabilization and the
//! intersection certificates built on top of them.

use std::collections::{HashMap, HashSet};
use std::fmt::Debug;
use std::hash::Hash;
use std::sync::{Arc, RwLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cubical_space::{AxisInterval, CellComplex, CellSet, Polyinterval, Region, SphereModel, TorusGrid};
use crate::error::{Error, Result};
use crate::field::{rat, Fp, GroundField};
use crate::graded_algebra::{exterior_order, Elem, GradedAlgebra};
use crate::ideals::GradedIdeal;
use crate::novikov::Lam;

/// A measure on the subsets of a finite model. Compact sets are represented
/// directly; an open set `U` is represented by its closed complement `X ∖ U`.
pub trait Measure: Sync {
    type S: Clone + Eq + Hash + Send + Sync + Debug;

    fn algebra(&self) -> &Arc<GradedAlgebra>;
    fn label(&self) -> String;
    /// True when only quasi-multiplicativity (on commuting pairs) is claimed.
    fn quasi(&self) -> bool;
    fn universe(&self) -> Self::S;
    fn empty(&self) -> Self::S;
    fn union(&self, a: &Self::S, b: &Self::S) -> Self::S;
    fn inter(&self, a: &Self::S, b: &Self::S) -> Self::S;
    fn subset(&self, a: &Self::S, b: &Self::S) -> bool;
    fn compact_value(&self, k: &Self::S) -> Result<GradedIdeal>;
    /// Value on the open set `X ∖ c`.
    fn open_value(&self, c: &Self::S) -> Result<GradedIdeal>;
    /// Commutation of two closed sets, or of the open sets they bound.
    fn commute(&self, _a: &Self::S, _b: &Self::S) -> bool {
        true
    }
    /// Model-level displaceability flag for a compact set.
    fn displaceable(&self, _k: &Self::S) -> bool {
        false
    }
    fn symmetries(&self) -> usize {
        0
    }
    fn act(&self, _g: usize, s: &Self::S) -> Self::S {
        s.clone()
    }
    fn describe(&self, s: &Self::S) -> String;
}

/// Measures whose sets are subcomplexes of a cell complex.
pub trait CellMeasure: Measure<S = CellSet> {
    fn complex(&self) -> &CellComplex;
}

fn cs_union(a: &CellSet, b: &CellSet) -> CellSet {
    a.iter().zip(b).map(|(x, y)| *x || *y).collect()
}

fn cs_inter(a: &CellSet, b: &CellSet) -> CellSet {
    a.iter().zip(b).map(|(x, y)| *x && *y).collect()
}

fn cs_subset(a: &CellSet, b: &CellSet) -> bool {
    a.iter().zip(b).all(|(x, y)| !*x || *y)
}

fn cs_describe(s: &CellSet) -> String {
    let cells: Vec<usize> = (0..s.len()).filter(|&c| s[c]).collect();
    let shown: Vec<String> = cells.iter().take(12).map(|c| c.to_string()).collect();
    let more = if cells.len() > 12 { format!(", … ({} cells)", cells.len()) } else { String::new() };
    format!("{{{}{}}}", shown.join(","), more)
}

fn require_subcomplex(cx: &CellComplex, s: &CellSet) -> Result<()> {
    if s.len() != cx.len() {
        return Err(Error::Schema(format!("cell set of length {} on a complex with {} cells", s.len(), cx.len())));
    }
    if !cx.is_subcomplex(s) {
        return Err(Error::Schema("set is not a closed subcomplex".into()));
    }
    Ok(())
}

/// Cell index after translating one step along `axis`.
pub fn translate_cell(grid: &TorusGrid, c: usize, axis: usize) -> usize {
    let (mut x, d) = grid.cell(c);
    x[axis] = (x[axis] + 1) % grid.m[axis];
    grid.cell_index(&x, d)
}

fn translate_set(grid: &TorusGrid, s: &CellSet, axis: usize) -> CellSet {
    let mut out = vec![false; s.len()];
    for c in (0..s.len()).filter(|&c| s[c]) {
        out[translate_cell(grid, c, axis)] = true;
    }
    out
}

/// `μ(U) = 0` for `U ≠ X`, `μ(X) = A` on a connected complex.
pub struct TrivialMeasure {
    pub complex: CellComplex,
    pub alg: Arc<GradedAlgebra>,
}

impl TrivialMeasure {
    pub fn new(complex: CellComplex, alg: Arc<GradedAlgebra>) -> Result<Self> {
        if complex.betti(&Fp(2), &complex.full()).first() != Some(&1) {
            return Err(Error::Schema("the trivial measure needs a connected space".into()));
        }
        Ok(TrivialMeasure { complex, alg })
    }
}

impl Measure for TrivialMeasure {
    type S = CellSet;

    fn algebra(&self) -> &Arc<GradedAlgebra> {
        &self.alg
    }
    fn label(&self) -> String {
        "trivial".into()
    }
    fn quasi(&self) -> bool {
        false
    }
    fn universe(&self) -> CellSet {
        self.complex.full()
    }
    fn empty(&self) -> CellSet {
        self.complex.empty()
    }
    fn union(&self, a: &CellSet, b: &CellSet) -> CellSet {
        cs_union(a, b)
    }
    fn inter(&self, a: &CellSet, b: &CellSet) -> CellSet {
        cs_inter(a, b)
    }
    fn subset(&self, a: &CellSet, b: &CellSet) -> bool {
        cs_subset(a, b)
    }
    fn compact_value(&self, k: &CellSet) -> Result<GradedIdeal> {
        require_subcomplex(&self.complex, k)?;
        Ok(if k.iter().all(|&b| b) { GradedIdeal::whole(&self.alg) } else { GradedIdeal::zero(&self.alg) })
    }
    fn open_value(&self, c: &CellSet) -> Result<GradedIdeal> {
        require_subcomplex(&self.complex, c)?;
        Ok(if c.iter().all(|&b| !b) { GradedIdeal::whole(&self.alg) } else { GradedIdeal::zero(&self.alg) })
    }
    fn describe(&self, s: &CellSet) -> String {
        cs_describe(s)
    }
}

impl CellMeasure for TrivialMeasure {
    fn complex(&self) -> &CellComplex {
        &self.complex
    }
}

/// The cohomology IVM `U ↦ ker(H*(X) → H*(X∖U))` on a torus grid.
pub struct CohomologyMeasure {
    pub grid: TorusGrid,
    pub alg: Arc<GradedAlgebra>,
}

impl CohomologyMeasure {
    pub fn new(grid: TorusGrid, field: GroundField) -> Self {
        let alg = Arc::new(GradedAlgebra::torus(field, grid.n));
        CohomologyMeasure { grid, alg }
    }
}

impl Measure for CohomologyMeasure {
    type S = CellSet;

    fn algebra(&self) -> &Arc<GradedAlgebra> {
        &self.alg
    }
    fn label(&self) -> String {
        format!("cohomology of T^{} grid {:?}", self.grid.n, self.grid.m)
    }
    fn quasi(&self) -> bool {
        false
    }
    fn universe(&self) -> CellSet {
        self.grid.complex.full()
    }
    fn empty(&self) -> CellSet {
        self.grid.complex.empty()
    }
    fn union(&self, a: &CellSet, b: &CellSet) -> CellSet {
        cs_union(a, b)
    }
    fn inter(&self, a: &CellSet, b: &CellSet) -> CellSet {
        cs_inter(a, b)
    }
    fn subset(&self, a: &CellSet, b: &CellSet) -> bool {
        cs_subset(a, b)
    }
    fn compact_value(&self, k: &CellSet) -> Result<GradedIdeal> {
        require_subcomplex(&self.grid.complex, k)?;
        self.grid.coh_ivm_value(&self.alg, &Region::Compact(k.clone()))
    }
    fn open_value(&self, c: &CellSet) -> Result<GradedIdeal> {
        require_subcomplex(&self.grid.complex, c)?;
        self.grid.coh_ivm_value(&self.alg, &Region::OpenComplementOf(c.clone()))
    }
    fn symmetries(&self) -> usize {
        self.grid.n
    }
    fn act(&self, g: usize, s: &CellSet) -> CellSet {
        translate_set(&self.grid, s, g)
    }
    fn describe(&self, s: &CellSet) -> String {
        cs_describe(s)
    }
}

impl CellMeasure for CohomologyMeasure {
    fn complex(&self) -> &CellComplex {
        &self.grid.complex
    }
}

/// Pushforward `f_*μ(V) = μ(f⁻¹V)` along a cellular map given cell by cell.
pub struct Pushforward<'a, M: CellMeasure> {
    pub base: &'a M,
    pub target: CellComplex,
    pub map: Vec<usize>,
    /// Preimages under the map commute pairwise (axis projections).
    pub involutive: bool,
}

impl<'a, M: CellMeasure> Pushforward<'a, M> {
    pub fn new(base: &'a M, target: CellComplex, map: Vec<usize>, involutive: bool) -> Result<Self> {
        let src = base.complex();
        if map.len() != src.len() {
            return Err(Error::Schema(format!("map has {} entries for {} cells", map.len(), src.len())));
        }
        for c in 0..src.len() {
            let y = map[c];
            if y >= target.len() || target.dim(y) > src.dim(c) {
                return Err(Error::Schema(format!("cell {c} is not mapped cellularly")));
            }
            let mut one = target.empty();
            one[y] = true;
            let cl = target.closure(&one);
            if src.faces(c).iter().any(|&(f, _)| !cl[map[f]]) {
                return Err(Error::Schema(format!("cell {c}: a face leaves the closure of its image")));
            }
        }
        Ok(Pushforward { base, target, map, involutive })
    }

    pub fn preimage(&self, v: &CellSet) -> CellSet {
        self.map.iter().map(|&y| v[y]).collect()
    }
}

impl<M: CellMeasure> Measure for Pushforward<'_, M> {
    type S = CellSet;

    fn algebra(&self) -> &Arc<GradedAlgebra> {
        self.base.algebra()
    }
    fn label(&self) -> String {
        format!("pushforward of {}", self.base.label())
    }
    fn quasi(&self) -> bool {
        self.base.quasi() && !self.involutive
    }
    fn universe(&self) -> CellSet {
        self.target.full()
    }
    fn empty(&self) -> CellSet {
        self.target.empty()
    }
    fn union(&self, a: &CellSet, b: &CellSet) -> CellSet {
        cs_union(a, b)
    }
    fn inter(&self, a: &CellSet, b: &CellSet) -> CellSet {
        cs_inter(a, b)
    }
    fn subset(&self, a: &CellSet, b: &CellSet) -> bool {
        cs_subset(a, b)
    }
    fn compact_value(&self, k: &CellSet) -> Result<GradedIdeal> {
        require_subcomplex(&self.target, k)?;
        self.base.compact_value(&self.preimage(k))
    }
    fn open_value(&self, c: &CellSet) -> Result<GradedIdeal> {
        require_subcomplex(&self.target, c)?;
        self.base.open_value(&self.preimage(c))
    }
    fn commute(&self, a: &CellSet, b: &CellSet) -> bool {
        self.involutive || self.base.commute(&self.preimage(a), &self.preimage(b))
    }
    fn describe(&self, s: &CellSet) -> String {
        cs_describe(s)
    }
}

impl<M: CellMeasure> CellMeasure for Pushforward<'_, M> {
    fn complex(&self) -> &CellComplex {
        &self.target
    }
}

/// Projection of a torus grid onto the coordinate subtorus spanned by `axes`.
pub fn axis_projection(grid: &TorusGrid, axes: &[usize]) -> Result<(TorusGrid, Vec<usize>)> {
    if axes.is_empty() || axes.iter().any(|&a| a >= grid.n) {
        return Err(Error::Schema(format!("bad projection axes {axes:?}")));
    }
    let target = TorusGrid::new(axes.iter().map(|&a| grid.m[a]).collect())?;
    let map = (0..grid.complex.len())
        .map(|c| {
            let (x, d) = grid.cell(c);
            let y: Vec<usize> = axes.iter().map(|&a| x[a]).collect();
            let e = axes.iter().enumerate().fold(0u32, |acc, (k, &a)| acc | ((d >> a & 1) << k));
            target.cell_index(&y, e)
        })
        .collect();
    Ok((target, map))
}

// ---------------------------------------------------------------------------
// Sphere quasi-measure

/// Pieces of a complement certified displaceable, with the geometric reason.
#[derive(Clone, Debug, Serialize)]
pub struct DisplaceablePieces {
    pub pieces: Vec<String>,
    pub justification: String,
}

/// The quantum cohomology IVQM of the sphere on a face model, with sets as
/// cell bitmasks. Values are `0` or `A = QH*(S²)`.
pub struct SphereQuasi {
    pub model: SphereModel,
    pub alg: Arc<GradedAlgebra>,
    adj: Vec<u64>,
    down: Vec<u64>,
    verts: Vec<u64>,
    weight: Vec<u64>,
    total: u64,
    all: u64,
    face_bits: u64,
    perms: Vec<Vec<usize>>,
}

fn bits(mut m: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        (m != 0).then(|| {
            let c = m.trailing_zeros() as usize;
            m &= m - 1;
            c
        })
    })
}

impl SphereQuasi {
    pub fn new(model: SphereModel, field: GroundField) -> Result<Self> {
        let cx = &model.complex;
        let n = cx.len();
        if n > 64 {
            return Err(Error::Budget(format!("sphere model with {n} cells exceeds 64")));
        }
        let mut adj = vec![0u64; n];
        let mut down = vec![0u64; n];
        for c in 0..n {
            for &(f, _) in cx.faces(c) {
                down[c] |= 1 << f;
                adj[c] |= 1 << f;
                adj[f] |= 1 << c;
            }
        }
        let mut verts = vec![0u64; n];
        for c in 0..n {
            let mut one = cx.empty();
            one[c] = true;
            let cl = cx.closure(&one);
            verts[c] = (0..model.nv).filter(|&v| cl[v]).fold(0, |acc, v| acc | 1 << v);
        }
        let lcm = model.areas.iter().fold(num_bigint::BigInt::from(1), |acc, a| num_integer::Integer::lcm(&acc, a.denom()));
        let mut weight = vec![0u64; n];
        for (i, a) in model.areas.iter().enumerate() {
            let w = a.numer() * (&lcm / a.denom());
            weight[model.face_cell(i)] = u64::try_from(w).map_err(|_| Error::Budget("face weights overflow".into()))?;
        }
        let total = weight.iter().sum();
        let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        let face_bits = (0..model.face_count()).fold(0, |acc, i| acc | 1 << model.face_cell(i));
        let alg = Arc::new(GradedAlgebra::qh_sphere(field));
        Ok(SphereQuasi { model, alg, adj, down, verts, weight, total, all, face_bits, perms: Vec::new() })
    }

    /// The standard 12-face model with its rotation by two sectors.
    pub fn standard(field: GroundField) -> Result<Self> {
        let mut s = SphereQuasi::new(SphereModel::standard(), field)?;
        let mut vp: Vec<usize> = (0..10).collect();
        for k in 0..4 {
            vp[1 + k] = 1 + (k + 2) % 4;
            vp[5 + k] = 5 + (k + 2) % 4;
        }
        s.add_symmetry(&vp)?;
        Ok(s)
    }

    /// Registers an area-preserving vertex permutation as a model symmetry.
    pub fn add_symmetry(&mut self, vp: &[usize]) -> Result<()> {
        let nv = self.model.nv;
        if vp.len() != nv {
            return Err(Error::Schema("vertex permutation has the wrong length".into()));
        }
        let by_verts: HashMap<u64, usize> = (0..self.verts.len()).map(|c| (self.verts[c], c)).collect();
        if by_verts.len() != self.verts.len() {
            return Err(Error::Unsupported("cells are not determined by their vertices".into()));
        }
        let mut perm = Vec::with_capacity(self.verts.len());
        for c in 0..self.verts.len() {
            let image = bits(self.verts[c]).fold(0u64, |acc, v| acc | 1 << vp[v]);
            let Some(&d) = by_verts.get(&image) else {
                return Err(Error::Schema(format!("vertex permutation does not map cell {c} to a cell")));
            };
            if self.weight[d] != self.weight[c] {
                return Err(Error::Schema(format!("vertex permutation changes the area of cell {c}")));
            }
            perm.push(d);
        }
        self.perms.push(perm);
        Ok(())
    }

    pub fn all(&self) -> u64 {
        self.all
    }

    pub fn closure(&self, mut m: u64) -> u64 {
        loop {
            let next = bits(m).fold(m, |acc, c| acc | self.down[c]);
            if next == m {
                return m;
            }
            m = next;
        }
    }

    pub fn is_closed(&self, m: u64) -> bool {
        self.closure(m) == m
    }

    /// Connected components of a set of cells under the face relation.
    pub fn components(&self, mask: u64) -> Vec<u64> {
        let mut out = Vec::new();
        let mut rest = mask;
        while rest != 0 {
            let mut comp = rest & rest.wrapping_neg();
            loop {
                let grow = bits(comp).fold(comp, |acc, c| acc | (self.adj[c] & mask));
                if grow == comp {
                    break;
                }
                comp = grow;
            }
            out.push(comp);
            rest &= !comp;
        }
        out
    }

    /// Area in units of `1/total_weight`.
    pub fn weight(&self, m: u64) -> u64 {
        bits(m & self.face_bits).map(|c| self.weight[c]).sum()
    }

    pub fn total_weight(&self) -> u64 {
        self.total
    }

    /// Closed region spanned by a bitmask of face indices.
    pub fn faces(&self, face_mask: u64) -> u64 {
        let cells = (0..self.model.face_count()).filter(|i| face_mask >> i & 1 == 1).fold(0u64, |acc, i| acc | 1 << self.model.face_cell(i));
        self.closure(cells)
    }

    pub fn named(&self, names: &[&str]) -> Result<u64> {
        let mut mask = 0u64;
        for n in names {
            let i = self.model.face_index(n).ok_or_else(|| Error::Schema(format!("unknown face {n:?}")))?;
            mask |= 1 << i;
        }
        Ok(self.faces(mask))
    }

    /// Closed edge path through the given vertex ids.
    pub fn path(&self, vs: &[usize]) -> Result<u64> {
        let mut mask = 0u64;
        for w in vs.windows(2) {
            let (a, b) = (w[0].min(w[1]), w[0].max(w[1]));
            let e = self
                .model
                .edges
                .iter()
                .position(|&(x, y)| (x.min(y), x.max(y)) == (a, b))
                .ok_or_else(|| Error::Schema(format!("no edge between vertices {a} and {b}")))?;
            mask |= 1 << self.model.edge_cell(e);
        }
        Ok(self.closure(mask))
    }

    /// The great circle `N a0 b0 S b2 a2 N` of the standard model.
    pub fn equator(&self) -> Result<u64> {
        self.path(&[0, 1, 5, 9, 7, 3, 0])
    }

    pub fn boundary(&self, k: u64) -> u64 {
        k & self.closure(self.all & !k)
    }

    fn big(&self, w: u64) -> bool {
        2 * w > self.total
    }

    /// `A` unless every component lies in a disk of area `< 1/2`.
    pub fn compact_rule(&self, k: u64) -> bool {
        self.components(k).into_iter().any(|q| self.components(self.all & !q).into_iter().all(|c| !self.big(self.weight(c))))
    }

    /// `A` iff some component of `X ∖ c` has every complementary piece of area `< 1/2`.
    pub fn open_rule(&self, c: u64) -> bool {
        let u = self.all & !c;
        self.components(u)
            .into_iter()
            .any(|uj| self.components(self.all & !uj).into_iter().all(|p| 2 * self.weight(p) < self.total))
    }

    /// Closed region of the faces in `face_mask` is a closed disk.
    pub fn is_disk(&self, face_mask: u64) -> bool {
        let fcells = self.faces(face_mask) & self.face_bits;
        if fcells == 0 {
            return false;
        }
        let k = self.closure(fcells);
        if self.components(k).len() != 1 {
            return false;
        }
        let cx = &self.model.complex;
        let chi: i64 = bits(k).map(|c| if cx.dim(c).is_multiple_of(2) { 1 } else { -1 }).sum();
        if chi != 1 {
            return false;
        }
        bits(k).filter(|&v| cx.dim(v) == 0).all(|v| {
            let around: Vec<usize> = bits(fcells).filter(|&f| self.verts[f] >> v & 1 == 1).collect();
            let shared = |f: usize, g: usize| bits(self.down[f] & self.down[g]).any(|e| self.down[e] >> v & 1 == 1);
            let mut seen = vec![false; around.len()];
            let mut stack = vec![0];
            seen[0] = true;
            while let Some(i) = stack.pop() {
                for j in 0..around.len() {
                    if !seen[j] && shared(around[i], around[j]) {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
            seen.iter().all(|&s| s)
        })
    }

    /// Certifies `X ∖ l` as a disjoint union of open disks of area at most 1/2.
    pub fn displaceable_pieces(&self, l: u64) -> Option<DisplaceablePieces> {
        let pieces = self.components(self.all & !l);
        let ok = pieces.iter().all(|&p| 2 * self.weight(p) <= self.total && self.components(self.all & !p).len() == 1);
        ok.then(|| DisplaceablePieces {
            pieces: pieces.iter().map(|&p| self.describe(&p)).collect(),
            justification: "each piece is an open disk of area at most 1/2, which a rotation moves onto its complement".into(),
        })
    }
}

impl Measure for SphereQuasi {
    type S = u64;

    fn algebra(&self) -> &Arc<GradedAlgebra> {
        &self.alg
    }
    fn label(&self) -> String {
        format!("sphere quasi-measure on {} faces", self.model.face_count())
    }
    fn quasi(&self) -> bool {
        true
    }
    fn universe(&self) -> u64 {
        self.all
    }
    fn empty(&self) -> u64 {
        0
    }
    fn union(&self, a: &u64, b: &u64) -> u64 {
        a | b
    }
    fn inter(&self, a: &u64, b: &u64) -> u64 {
        a & b
    }
    fn subset(&self, a: &u64, b: &u64) -> bool {
        a & !b == 0
    }
    fn compact_value(&self, k: &u64) -> Result<GradedIdeal> {
        if !self.is_closed(*k) || k & !self.all != 0 {
            return Err(Error::Schema("set is not a closed subcomplex".into()));
        }
        Ok(if self.compact_rule(*k) { GradedIdeal::whole(&self.alg) } else { GradedIdeal::zero(&self.alg) })
    }
    fn open_value(&self, c: &u64) -> Result<GradedIdeal> {
        if !self.is_closed(*c) || c & !self.all != 0 {
            return Err(Error::Schema("set is not a closed subcomplex".into()));
        }
        Ok(if self.open_rule(*c) { GradedIdeal::whole(&self.alg) } else { GradedIdeal::zero(&self.alg) })
    }
    fn commute(&self, a: &u64, b: &u64) -> bool {
        self.boundary(*a) & self.boundary(*b) == 0
    }
    /// A compact set whose complement has a component of area `> 1/2` lies in
    /// disks of total area `< 1/2`, which a rotation moves off themselves.
    fn displaceable(&self, k: &u64) -> bool {
        self.components(self.all & !k).into_iter().any(|c| self.big(self.weight(c)))
    }
    fn symmetries(&self) -> usize {
        self.perms.len()
    }
    fn act(&self, g: usize, s: &u64) -> u64 {
        bits(*s).fold(0, |acc, c| acc | 1 << self.perms[g][c])
    }
    fn describe(&self, s: &u64) -> String {
        let names: Vec<&str> =
            (0..self.model.face_count()).filter(|&i| s >> self.model.face_cell(i) & 1 == 1).map(|i| self.model.names[i].as_str()).collect();
        let low = bits(s & !self.face_bits).count();
        format!("faces [{}] + {} lower cells", names.join(" "), low)
    }
}

// ---------------------------------------------------------------------------
// Torus quasi-measure

fn exterior_positions(n: usize) -> HashMap<u32, usize> {
    exterior_order(n).into_iter().enumerate().map(|(i, s)| (s, i)).collect()
}

/// Moves an ideal of `H*(T^n)` into `QH*(T^{2n})` along `e_i ↦ dp_i` (`shift = 0`)
/// or `e_i ↦ dq_i` (`shift = n`) and takes the ideal it generates.
pub fn embed_base_ideal(ideal: &GradedIdeal, n: usize, shift: usize, target: &Arc<GradedAlgebra>) -> Result<GradedIdeal> {
    let src = exterior_order(n);
    let pos = exterior_positions(2 * n);
    let gens: Vec<Elem> = ideal
        .basis()
        .iter()
        .map(|v| {
            let mut out = target.zero();
            for (i, c) in v.iter().enumerate() {
                if !c.is_zero() {
                    out[pos[&(src[i] << shift)]] = c.clone();
                }
            }
            out
        })
        .collect();
    GradedIdeal::from_generators(target, &gens)
}

fn check_qh_torus(alg: &GradedAlgebra, n: usize) -> Result<()> {
    let reference = GradedAlgebra::qh_torus(alg.field, n);
    if alg.labels != reference.labels {
        return Err(Error::Schema(format!("value algebra is not QH*(T^{})", 2 * n)));
    }
    Ok(())
}

/// Closed form of the torus value on `S × T^n ⊂ T^{2n}`: the ideal generated by
/// `∧_{i proper} dp_i`; `0` for empty `S`.
pub fn torus_ivqm_value(alg: &Arc<GradedAlgebra>, s: &Polyinterval, m: &[usize]) -> Result<GradedIdeal> {
    let n = s.axes.len();
    check_qh_torus(alg, n)?;
    s.validate_on(m)?;
    if s.is_empty() {
        return Ok(GradedIdeal::zero(alg));
    }
    let mask = s.proper_axes().iter().fold(0u32, |acc, &i| acc | 1 << i);
    let idx = exterior_positions(2 * n)[&mask];
    GradedIdeal::from_generators(alg, &[alg.basis(idx)])
}

/// The same value computed from the cubical restriction kernel on the base grid.
pub fn torus_ivqm_oracle(base: &TorusGrid, alg: &Arc<GradedAlgebra>, s: &Polyinterval) -> Result<GradedIdeal> {
    check_qh_torus(alg, base.n)?;
    let base_alg = Arc::new(GradedAlgebra::torus(alg.field, base.n));
    let kernel = base.coh_ivm_value(&base_alg, &s.region(base)?)?;
    embed_base_ideal(&kernel, base.n, 0, alg)
}

/// Every polyinterval on the grid (closed and open products; one empty set).
pub fn all_polyintervals(m: &[usize]) -> Vec<Polyinterval> {
    let mut out = vec![Polyinterval::new(vec![AxisInterval::Empty; m.len()])];
    for lists in [m.iter().map(|&k| AxisInterval::all_closed(k)).collect::<Vec<_>>(), m.iter().map(|&k| AxisInterval::all_open(k)).collect()] {
        let mut acc: Vec<Vec<AxisInterval>> = vec![Vec::new()];
        for list in &lists {
            let nonempty: Vec<&AxisInterval> = list.iter().filter(|a| **a != AxisInterval::Empty).collect();
            acc = acc.into_iter().flat_map(|p| nonempty.iter().map(move |a| [p.clone(), vec![(*a).clone()]].concat())).collect();
        }
        out.extend(acc.into_iter().map(Polyinterval::new));
    }
    out.dedup();
    let mut seen = HashSet::new();
    out.retain(|p| seen.insert(p.clone()));
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct GateReport {
    pub checked: usize,
    pub mismatches: Vec<Polyinterval>,
}

impl GateReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Compares the closed form with the cubical oracle on every given polyinterval.
pub fn closed_form_gate(base: &TorusGrid, alg: &Arc<GradedAlgebra>, polys: &[Polyinterval]) -> Result<GateReport> {
    let results: Vec<Result<Option<Polyinterval>>> = polys
        .par_iter()
        .map(|s| {
            let a = torus_ivqm_value(alg, s, &base.m)?;
            let b = torus_ivqm_oracle(base, alg, s)?;
            Ok((a != b).then(|| s.clone()))
        })
        .collect();
    let mut mismatches = Vec::new();
    for r in results {
        if let Some(s) = r? {
            mismatches.push(s);
        }
    }
    Ok(GateReport { checked: polys.len(), mismatches })
}

/// The quantum cohomology IVQM of `T^{2n}` on a cubic grid with axes
/// `p_1..p_n, q_1..q_n`. Evaluates preimages of either projection by the
/// cubical kernel, and flagged displaceable boxes by vanishing; anything else
/// is unsupported.
pub struct TorusQuasi {
    pub n: usize,
    pub m: usize,
    pub grid: TorusGrid,
    pub base: TorusGrid,
    pub alg: Arc<GradedAlgebra>,
    base_alg: Arc<GradedAlgebra>,
    proj: [Vec<usize>; 2],
}

impl TorusQuasi {
    pub fn new(field: GroundField, n: usize, m: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Schema("torus quasi-measure needs n ≥ 1".into()));
        }
        let grid = TorusGrid::cubic(2 * n, m)?;
        let (base, p) = axis_projection(&grid, &(0..n).collect::<Vec<_>>())?;
        let (_, q) = axis_projection(&grid, &(n..2 * n).collect::<Vec<_>>())?;
        let alg = Arc::new(GradedAlgebra::qh_torus(field, n));
        let base_alg = Arc::new(GradedAlgebra::torus(field, n));
        Ok(TorusQuasi { n, m, grid, base, alg, base_alg, proj: [p, q] })
    }

    /// `π⁻¹(z)` for the `p`-projection (`side = 0`) or the `q`-projection (`side = 1`).
    pub fn preimage(&self, side: usize, z: &CellSet) -> CellSet {
        self.proj[side].iter().map(|&b| z[b]).collect()
    }

    /// `S × T^n` for closed `S`, or the closed complement of `S × T^n` for open `S`.
    pub fn polyinterval_set(&self, side: usize, s: &Polyinterval) -> Result<CellSet> {
        let z = match s.region(&self.base)? {
            Region::Compact(k) => k,
            Region::OpenComplementOf(c) => c,
        };
        Ok(self.preimage(side, &z))
    }

    fn projection_of(&self, side: usize, k: &CellSet) -> Option<CellSet> {
        let mut z = self.base.complex.empty();
        for c in (0..k.len()).filter(|&c| k[c]) {
            z[self.proj[side][c]] = true;
        }
        (0..k.len()).all(|c| k[c] == z[self.proj[side][c]]).then_some(z)
    }

    /// Longest run of free edges (with free interior vertices) in the projection to `axis`.
    fn free_run(&self, k: &CellSet, axis: usize) -> usize {
        let m = self.m;
        let (mut vo, mut eo) = (vec![false; m], vec![false; m]);
        for c in (0..k.len()).filter(|&c| k[c]) {
            let (x, d) = self.grid.cell(c);
            vo[x[axis]] = true;
            if d >> axis & 1 == 1 {
                eo[x[axis]] = true;
                vo[(x[axis] + 1) % m] = true;
            }
        }
        let mut best = 0;
        for s in (0..m).filter(|&s| !eo[s]) {
            let mut len = 1;
            while len < m && !vo[(s + len) % m] && !eo[(s + len) % m] {
                len += 1;
            }
            best = best.max(len);
        }
        best
    }

    /// Flag: for some pair `(p_i, q_i)` both projections are proper arcs and one
    /// of them is short enough that a translation along it, cut off near the
    /// swept rectangle, is a Hamiltonian isotopy moving the set off itself.
    pub fn box_displaceable(&self, k: &CellSet) -> bool {
        if k.iter().all(|&b| !b) {
            return false;
        }
        (0..self.n).any(|i| {
            let (rp, rq) = (self.free_run(k, i), self.free_run(k, i + self.n));
            let short = |r: usize| 2 * (self.m - r + 1) <= self.m;
            rp >= 1 && rq >= 1 && (short(rp) || short(rq))
        })
    }

    fn not_in(&self, c: &CellSet) -> CellSet {
        self.grid.complex.closure(&c.iter().map(|b| !b).collect())
    }
}

impl Measure for TorusQuasi {
    type S = CellSet;

    fn algebra(&self) -> &Arc<GradedAlgebra> {
        &self.alg
    }
    fn label(&self) -> String {
        format!("torus quasi-measure on T^{} grid {}", 2 * self.n, self.m)
    }
    fn quasi(&self) -> bool {
        true
    }
    fn universe(&self) -> CellSet {
        self.grid.complex.full()
    }
    fn empty(&self) -> CellSet {
        self.grid.complex.empty()
    }
    fn union(&self, a: &CellSet, b: &CellSet) -> CellSet {
        cs_union(a, b)
    }
    fn inter(&self, a: &CellSet, b: &CellSet) -> CellSet {
        cs_inter(a, b)
    }
    fn subset(&self, a: &CellSet, b: &CellSet) -> bool {
        cs_subset(a, b)
    }
    fn compact_value(&self, k: &CellSet) -> Result<GradedIdeal> {
        require_subcomplex(&self.grid.complex, k)?;
        if k.iter().all(|&b| !b) {
            return Ok(GradedIdeal::zero(&self.alg));
        }
        if k.iter().all(|&b| b) {
            return Ok(GradedIdeal::whole(&self.alg));
        }
        for side in 0..2 {
            if let Some(z) = self.projection_of(side, k) {
                let ker = self.base.coh_ivm_value(&self.base_alg, &Region::Compact(z))?;
                return embed_base_ideal(&ker, self.n, side * self.n, &self.alg);
            }
        }
        if self.box_displaceable(k) {
            return Ok(GradedIdeal::zero(&self.alg));
        }
        if self.box_displaceable(&self.not_in(k)) {
            return Ok(GradedIdeal::whole(&self.alg));
        }
        Err(Error::Unsupported("compact set is neither a projection preimage nor a flagged box".into()))
    }
    fn open_value(&self, c: &CellSet) -> Result<GradedIdeal> {
        require_subcomplex(&self.grid.complex, c)?;
        if c.iter().all(|&b| b) {
            return Ok(GradedIdeal::zero(&self.alg));
        }
        if c.iter().all(|&b| !b) {
            return Ok(GradedIdeal::whole(&self.alg));
        }
        for side in 0..2 {
            if let Some(z) = self.projection_of(side, c) {
                let ker = self.base.coh_ivm_value(&self.base_alg, &Region::OpenComplementOf(z))?;
                return embed_base_ideal(&ker, self.n, side * self.n, &self.alg);
            }
        }
        if self.box_displaceable(&self.not_in(c)) {
            return Ok(GradedIdeal::zero(&self.alg));
        }
        if self.box_displaceable(c) {
            return Ok(GradedIdeal::whole(&self.alg));
        }
        Err(Error::Unsupported("open set is neither a projection preimage nor a flagged box".into()))
    }
    fn commute(&self, a: &CellSet, b: &CellSet) -> bool {
        let bd = |k: &CellSet| cs_inter(k, &self.not_in(k));
        if !bd(a).iter().zip(bd(b)).any(|(x, y)| *x && y) {
            return true;
        }
        (0..2).any(|side| self.projection_of(side, a).is_some() && self.projection_of(side, b).is_some())
    }
    fn displaceable(&self, k: &CellSet) -> bool {
        self.box_displaceable(k)
    }
    fn symmetries(&self) -> usize {
        2 * self.n
    }
    fn act(&self, g: usize, s: &CellSet) -> CellSet {
        translate_set(&self.grid, s, g)
    }
    fn describe(&self, s: &CellSet) -> String {
        cs_describe(s)
    }
}

impl CellMeasure for TorusQuasi {
    fn complex(&self) -> &CellComplex {
        &self.grid.complex
    }
}

// ---------------------------------------------------------------------------
// Axiom checking

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Lattice elements are compact sets.
    Compact,
    /// Lattice elements are closed complements of open sets.
    Open,
}

#[derive(Clone, Debug, Serialize)]
pub struct AxiomResult {
    pub axiom: String,
    pub checked: u64,
    pub failures: u64,
    pub skipped: u64,
    pub witnesses: Vec<String>,
    pub note: Option<String>,
}

impl AxiomResult {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AxiomReport {
    pub measure: String,
    pub claimed: String,
    pub mode: Mode,
    pub lattice_size: usize,
    pub distinct_values: usize,
    pub results: Vec<AxiomResult>,
    pub errors: Vec<String>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(AxiomResult::passed)
    }

    pub fn get(&self, axiom: &str) -> Option<&AxiomResult> {
        self.results.iter().find(|r| r.axiom == axiom)
    }
}

const NORM: usize = 0;
const MONO: usize = 1;
const CONT: usize = 2;
const ADD: usize = 3;
const MULT: usize = 4;
const INTER: usize = 5;
const INV: usize = 6;
const VAN: usize = 7;
const MAX_WITNESSES: usize = 5;
const NONE: usize = usize::MAX;

#[derive(Clone, Default)]
struct Tally {
    checked: u64,
    failures: u64,
    skipped: u64,
    witnesses: Vec<(usize, usize)>,
}

impl Tally {
    fn record(&mut self, ok: Option<bool>, w: (usize, usize)) {
        match ok {
            None => self.skipped += 1,
            Some(true) => self.checked += 1,
            Some(false) => {
                self.checked += 1;
                self.failures += 1;
                self.witnesses.push(w);
                if self.witnesses.len() > 4 * MAX_WITNESSES {
                    self.trim();
                }
            }
        }
    }

    fn trim(&mut self) {
        self.witnesses.sort_unstable();
        self.witnesses.dedup();
        self.witnesses.truncate(MAX_WITNESSES);
    }

    fn merge(mut self, o: Tally) -> Tally {
        self.checked += o.checked;
        self.failures += o.failures;
        self.skipped += o.skipped;
        self.witnesses.extend(o.witnesses);
        self.trim();
        self
    }
}

type Tallies = [Tally; 8];

fn merge_tallies(a: Tallies, b: Tallies) -> Tallies {
    let mut out: Tallies = Default::default();
    for (i, (x, y)) in a.into_iter().zip(b).enumerate() {
        out[i] = x.merge(y);
    }
    out
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Op {
    Sum,
    Product,
    Meet,
}

/// Interned ideals with memoized lattice operations, shared across workers.
struct Memo {
    ideals: RwLock<Vec<GradedIdeal>>,
    index: RwLock<HashMap<GradedIdeal, usize>>,
    ops: RwLock<HashMap<(Op, usize, usize), usize>>,
    le: RwLock<HashMap<(usize, usize), bool>>,
}

#[derive(Default)]
struct Local {
    ops: HashMap<(Op, usize, usize), usize>,
    le: HashMap<(usize, usize), bool>,
}

impl Memo {
    fn new() -> Self {
        Memo { ideals: RwLock::new(Vec::new()), index: RwLock::new(HashMap::new()), ops: RwLock::new(HashMap::new()), le: RwLock::new(HashMap::new()) }
    }

    fn intern(&self, i: GradedIdeal) -> usize {
        if let Some(&id) = self.index.read().unwrap().get(&i) {
            return id;
        }
        let mut index = self.index.write().unwrap();
        if let Some(&id) = index.get(&i) {
            return id;
        }
        let mut ideals = self.ideals.write().unwrap();
        ideals.push(i.clone());
        index.insert(i, ideals.len() - 1);
        ideals.len() - 1
    }

    fn get(&self, id: usize) -> GradedIdeal {
        self.ideals.read().unwrap()[id].clone()
    }

    fn op(&self, local: &mut Local, op: Op, a: usize, b: usize) -> usize {
        let key = if op == Op::Product { (op, a, b) } else { (op, a.min(b), a.max(b)) };
        if let Some(&r) = local.ops.get(&key) {
            return r;
        }
        let cached = self.ops.read().unwrap().get(&key).copied();
        let r = cached.unwrap_or_else(|| {
            let (x, y) = (self.get(a), self.get(b));
            let v = match op {
                Op::Sum => x.sum(&y),
                Op::Product => x.product(&y),
                Op::Meet => x.intersect(&y),
            }
            .expect("values share one algebra");
            let id = self.intern(v);
            self.ops.write().unwrap().insert(key, id);
            id
        });
        local.ops.insert(key, r);
        r
    }

    fn le(&self, local: &mut Local, a: usize, b: usize) -> bool {
        if a == b {
            return true;
        }
        if let Some(&r) = local.le.get(&(a, b)) {
            return r;
        }
        let cached = self.le.read().unwrap().get(&(a, b)).copied();
        let r = cached.unwrap_or_else(|| {
            let r = self.get(b).contains_ideal(&self.get(a));
            self.le.write().unwrap().insert((a, b), r);
            r
        });
        local.le.insert((a, b), r);
        r
    }
}

struct PairInfo<S> {
    le_ab: bool,
    le_ba: bool,
    disjoint: bool,
    cover: bool,
    mult: bool,
    meet: S,
    join: S,
}

fn pair_info<M: Measure>(mu: &M, mode: Mode, a: &M::S, b: &M::S) -> PairInfo<M::S> {
    let (i, u) = (mu.inter(a, b), mu.union(a, b));
    let mult = !mu.quasi() || mu.commute(a, b);
    match mode {
        Mode::Compact => PairInfo {
            le_ab: mu.subset(a, b),
            le_ba: mu.subset(b, a),
            disjoint: i == mu.empty(),
            cover: u == mu.universe(),
            mult,
            meet: i,
            join: u,
        },
        Mode::Open => PairInfo {
            le_ab: mu.subset(b, a),
            le_ba: mu.subset(a, b),
            disjoint: u == mu.universe(),
            cover: i == mu.empty(),
            mult,
            meet: u,
            join: i,
        },
    }
}

fn evaluate<M: Measure>(mu: &M, mode: Mode, s: &M::S) -> Result<GradedIdeal> {
    match mode {
        Mode::Compact => mu.compact_value(s),
        Mode::Open => mu.open_value(s),
    }
}

/// Exhaustive check of the measure axioms on a finite lattice of sets.
/// Multiplicativity is checked on all pairs for a measure and on commuting
/// pairs for a quasi-measure; intersection on covering pairs; continuity on the
/// given chains (each listed from the largest set representative down).
pub fn check_axioms<M: Measure>(mu: &M, lattice: &[M::S], chains: &[Vec<M::S>], mode: Mode) -> AxiomReport {
    let mut seen = HashSet::new();
    let lattice: Vec<M::S> = lattice.iter().filter(|s| seen.insert((*s).clone())).cloned().collect();
    let n = lattice.len();

    // Phase 1: every set whose value is needed.
    let mut needed: HashSet<M::S> = (0..n)
        .into_par_iter()
        .fold(HashSet::new, |mut acc, i| {
            for j in i..n {
                let info = pair_info(mu, mode, &lattice[i], &lattice[j]);
                if info.mult || info.cover {
                    acc.insert(info.meet);
                }
                if info.disjoint {
                    acc.insert(info.join);
                }
            }
            acc
        })
        .reduce(HashSet::new, |mut a, b| {
            a.extend(b);
            a
        });
    needed.extend(lattice.iter().cloned());
    needed.insert(mu.universe());
    needed.insert(mu.empty());
    for g in 0..mu.symmetries() {
        needed.extend(lattice.iter().map(|s| mu.act(g, s)));
    }
    needed.extend(chains.iter().flatten().cloned());

    let evaluated: Vec<(M::S, Result<GradedIdeal>)> = needed.into_par_iter().map(|s| {
        let v = evaluate(mu, mode, &s);
        (s, v)
    }).collect();
    let memo = Memo::new();
    let zero = memo.intern(GradedIdeal::zero(mu.algebra()));
    let whole = memo.intern(GradedIdeal::whole(mu.algebra()));
    let mut errors = Vec::new();
    let mut values: HashMap<M::S, Option<usize>> = HashMap::new();
    for (s, v) in evaluated {
        let id = match v {
            Ok(ideal) => Some(memo.intern(ideal)),
            Err(Error::Unsupported(_)) => None,
            Err(e) => {
                errors.push(e.to_string());
                None
            }
        };
        values.insert(s, id);
    }
    errors.sort();
    errors.dedup();
    errors.truncate(MAX_WITNESSES);
    let distinct = memo.ideals.read().unwrap().len();
    let val = |s: &M::S| values.get(s).copied().flatten();

    // Phase 2: pairwise axioms.
    let mut t: Tallies = (0..n)
        .into_par_iter()
        .map_init(Local::default, |local, i| {
            let mut t: Tallies = Default::default();
            let a = &lattice[i];
            for j in i..n {
                let b = &lattice[j];
                let info = pair_info(mu, mode, a, b);
                let (va, vb) = (val(a), val(b));
                let both = va.zip(vb);
                if info.le_ab {
                    t[MONO].record(both.map(|(x, y)| memo.le(local, x, y)), (i, j));
                }
                if info.le_ba && i != j {
                    t[MONO].record(both.map(|(x, y)| memo.le(local, y, x)), (j, i));
                }
                if info.disjoint {
                    let vj = val(&info.join);
                    t[ADD].record(both.zip(vj).map(|((x, y), z)| memo.op(local, Op::Sum, x, y) == z), (i, j));
                }
                if info.mult {
                    let vm = val(&info.meet);
                    t[MULT].record(
                        both.zip(vm).map(|((x, y), z)| {
                            let p = memo.op(local, Op::Product, x, y);
                            memo.le(local, p, z)
                        }),
                        (i, j),
                    );
                }
                if info.cover {
                    let vm = val(&info.meet);
                    t[INTER].record(both.zip(vm).map(|((x, y), z)| memo.op(local, Op::Meet, x, y) == z), (i, j));
                }
            }
            t
        })
        .reduce(Default::default, merge_tallies);

    // Per-set axioms.
    let (bottom, top) = match mode {
        Mode::Compact => (mu.empty(), mu.universe()),
        Mode::Open => (mu.universe(), mu.empty()),
    };
    t[NORM].record(val(&bottom).map(|v| v == zero), (NONE, NONE));
    t[NORM].record(val(&top).map(|v| v == whole), (NONE, NONE));
    for g in 0..mu.symmetries() {
        for (i, s) in lattice.iter().enumerate() {
            t[INV].record(val(s).zip(val(&mu.act(g, s))).map(|(x, y)| x == y), (i, g));
        }
    }
    if mu.quasi() {
        let flags: Vec<(usize, Option<bool>)> = lattice
            .par_iter()
            .enumerate()
            .filter(|(_, s)| mu.displaceable(s))
            .map(|(i, s)| {
                let ok = match (mu.compact_value(s), mu.open_value(s)) {
                    (Ok(k), Ok(u)) => Some(k.is_zero() && u.is_whole()),
                    _ => None,
                };
                (i, ok)
            })
            .collect();
        for (i, ok) in flags {
            t[VAN].record(ok, (i, NONE));
        }
    }
    let mut local = Local::default();
    for (ci, chain) in chains.iter().enumerate() {
        let ordered = chain.windows(2).all(|w| mu.subset(&w[1], &w[0]));
        let vals: Option<Vec<usize>> = chain.iter().map(&val).collect();
        let ok = match (ordered, vals) {
            (false, _) => Some(false),
            (true, None) => None,
            (true, Some(v)) if v.is_empty() => Some(true),
            (true, Some(v)) => Some(match mode {
                Mode::Compact => {
                    let mut acc = v[0];
                    for &x in &v[1..] {
                        acc = memo.op(&mut local, Op::Meet, acc, x);
                    }
                    acc == *v.last().unwrap()
                }
                Mode::Open => {
                    let ideals: Vec<GradedIdeal> = v.iter().map(|&x| memo.get(x)).collect();
                    stabilize_chain(&ideals).map(|s| memo.intern(s.value) == *v.last().unwrap()).unwrap_or(false)
                }
            }),
        };
        t[CONT].record(ok, (ci, NONE));
    }

    let names = [
        "normalization",
        "monotonicity",
        "continuity",
        "additivity",
        if mu.quasi() { "quasi-multiplicativity" } else { "multiplicativity" },
        "intersection",
        "invariance",
        "vanishing",
    ];
    let describe = |k: usize, (i, j): (usize, usize)| -> String {
        let d = |x: usize| if x < n { mu.describe(&lattice[x]) } else { "-".into() };
        match k {
            NORM => "empty or whole set".into(),
            INV => format!("{} under symmetry {j}", d(i)),
            VAN => d(i),
            CONT => format!("chain {i}"),
            _ => format!("{} / {}", d(i), d(j)),
        }
    };
    let results = names
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let mut tk = std::mem::take(&mut t[k]);
            tk.trim();
            let note = match k {
                INV => Some("checked on model symmetry group".to_string()),
                VAN if !mu.quasi() => Some("not claimed".to_string()),
                MULT if mu.quasi() => Some("commuting pairs only".to_string()),
                INTER if mode == Mode::Compact => Some("pairs with K ∪ K' = X".to_string()),
                _ => None,
            };
            AxiomResult {
                axiom: name.to_string(),
                checked: tk.checked,
                failures: tk.failures,
                skipped: tk.skipped,
                witnesses: tk.witnesses.iter().map(|&w| describe(k, w)).collect(),
                note,
            }
        })
        .collect();
    AxiomReport {
        measure: mu.label(),
        claimed: if mu.quasi() { "IVQM".into() } else { "IVM".into() },
        mode,
        lattice_size: n,
        distinct_values: distinct,
        results,
        errors,
    }
}

/// All unions and intersections of the generators, up to `limit` sets.
pub fn lattice_closure<M: Measure>(mu: &M, gens: &[M::S], limit: usize) -> Result<Vec<M::S>> {
    let mut seen: HashSet<M::S> = HashSet::new();
    let mut out = Vec::new();
    for s in gens.iter().cloned().chain([mu.empty(), mu.universe()]) {
        if seen.insert(s.clone()) {
            out.push(s);
        }
    }
    let mut start = 0;
    while start < out.len() {
        let end = out.len();
        for i in 0..end {
            for j in start.max(i)..end {
                for s in [mu.union(&out[i], &out[j]), mu.inter(&out[i], &out[j])] {
                    if seen.insert(s.clone()) {
                        out.push(s);
                        if out.len() > limit {
                            return Err(Error::Budget(format!("lattice exceeds {limit} sets")));
                        }
                    }
                }
            }
        }
        start = end;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Chains and certificates

#[derive(Clone, Debug)]
pub struct Stabilized {
    pub value: GradedIdeal,
    /// First index from which the chain is constant.
    pub stable_from: usize,
}

/// Limit of an increasing chain of ideals.
pub fn stabilize_chain(values: &[GradedIdeal]) -> Result<Stabilized> {
    let Some(last) = values.last() else {
        return Err(Error::Schema("empty chain".into()));
    };
    for (k, w) in values.windows(2).enumerate() {
        if !w[1].contains_ideal(&w[0]) {
            return Err(Error::Invariant(format!("chain of values is not increasing at step {k}")));
        }
    }
    let stable_from = (0..values.len()).rev().take_while(|&k| values[k] == *last).last().unwrap_or(0);
    Ok(Stabilized { value: last.clone(), stable_from })
}

#[derive(Clone, Debug)]
pub struct HeavyReport {
    pub heavy_k: bool,
    pub heavy_k2: bool,
    pub rigid_pair: bool,
    pub product: GradedIdeal,
}

/// `K` is heavy when `τ(K) ≠ 0`; a pair is rigid when `τ(K)*τ(K') ≠ 0`.
pub fn sh_heavy_and_criterion(tau_k: &GradedIdeal, tau_k2: &GradedIdeal) -> Result<HeavyReport> {
    let product = tau_k.product(tau_k2)?;
    Ok(HeavyReport { heavy_k: !tau_k.is_zero(), heavy_k2: !tau_k2.is_zero(), rigid_pair: !product.is_zero(), product })
}

#[derive(Clone, Debug)]
pub struct CoverReport {
    pub factors: Vec<GradedIdeal>,
    pub product: GradedIdeal,
    pub obstructed: bool,
}

/// For an open cover `U_i = X ∖ c_i`, the product `∏ τ(c_i)`; nonzero means the
/// cover admits no pairwise commuting realization.
pub fn cover_obstruction<M: Measure>(mu: &M, complements: &[M::S]) -> Result<CoverReport> {
    let mut common = mu.universe();
    for c in complements {
        common = mu.inter(&common, c);
    }
    if complements.is_empty() || common != mu.empty() {
        return Err(Error::Schema("the open sets do not cover the space".into()));
    }
    let factors: Vec<GradedIdeal> = complements.iter().map(|c| mu.compact_value(c)).collect::<Result<_>>()?;
    let mut product = GradedIdeal::whole(mu.algebra());
    for f in &factors {
        product = product.product(f)?;
    }
    let obstructed = !product.is_zero();
    Ok(CoverReport { factors, product, obstructed })
}

/// Certified lower bound `τ(K) ⊗ A_N ⊂ τ(K × L)` inside `A_M ⊗ A_N`, valid when
/// `N ∖ L` splits into displaceable pieces.
pub fn product_ivqm_lower_bound(
    tau_k: &GradedIdeal,
    n_alg: &GradedAlgebra,
    product_alg: &Arc<GradedAlgebra>,
    pieces: Option<&DisplaceablePieces>,
) -> Result<GradedIdeal> {
    if pieces.is_none() {
        return Err(Error::Schema("no displaceable decomposition of the complement was supplied".into()));
    }
    let m_alg = tau_k.algebra();
    let nb = n_alg.dim();
    if product_alg.dim() != m_alg.dim() * nb
        || (0..m_alg.dim()).any(|i| product_alg.labels[i * nb + n_alg.unit] != format!("{}⊗{}", m_alg.labels[i], n_alg.labels[n_alg.unit]))
    {
        return Err(Error::Schema("target is not the tensor product of the two value algebras".into()));
    }
    let gens: Vec<Elem> = tau_k
        .basis()
        .iter()
        .map(|x| {
            let mut out = product_alg.zero();
            for (i, c) in x.iter().enumerate() {
                out[i * nb + n_alg.unit] = c.clone();
            }
            out
        })
        .collect();
    GradedIdeal::from_generators(product_alg, &gens)
}

// ---------------------------------------------------------------------------
// Worked examples

/// `ω^n` for `ω = Σ dp_i dq_i` in `QH*(T^{2n})`.
pub fn omega_power(alg: &GradedAlgebra, n: usize) -> Result<Elem> {
    let mut omega = alg.zero();
    for i in 1..=n {
        let (p, q) = (format!("dp{i}"), format!("dq{i}"));
        let (Some(a), Some(b)) = (alg.index_of(&p), alg.index_of(&q)) else {
            return Err(Error::Schema(format!("algebra lacks {p} or {q}")));
        };
        let pq = alg.mul(&alg.basis(a), &alg.basis(b));
        omega = omega.iter().zip(&pq).map(|(x, y)| x.add(y)).collect();
    }
    let mut acc = alg.one();
    for _ in 0..n {
        acc = alg.mul(&acc, &omega);
    }
    Ok(acc)
}

#[derive(Clone, Debug)]
pub struct MeridianReport {
    pub heavy: HeavyReport,
    /// The product equals the span of `ω^n`.
    pub spanned_by_omega_power: bool,
    /// Same product computed from the lower bounds after stabilizing by `S²`.
    pub stabilized_product_nonzero: bool,
}

/// The meridian tori `{pt} × T^n` and `T^n × {pt}` in `T^{2n}`, and their
/// stabilizations by the equator of `S²`.
pub fn meridian_example(field: GroundField, n: usize, m: usize) -> Result<MeridianReport> {
    let tq = TorusQuasi::new(field, n, m)?;
    let point = Polyinterval::new(vec![AxisInterval::Point { at: 0 }; n]);
    let l = tq.polyinterval_set(0, &point)?;
    let l2 = tq.polyinterval_set(1, &point)?;
    let heavy = sh_heavy_and_criterion(&tq.compact_value(&l)?, &tq.compact_value(&l2)?)?;
    let w = omega_power(&tq.alg, n)?;
    let spanned_by_omega_power = heavy.product == GradedIdeal::from_generators(&tq.alg, std::slice::from_ref(&w))? && !heavy.product.is_zero();

    let sphere = SphereQuasi::standard(field)?;
    let pieces = sphere.displaceable_pieces(sphere.equator()?);
    let product_alg = Arc::new(tq.alg.tensor(&sphere.alg)?);
    let b1 = product_ivqm_lower_bound(&tq.compact_value(&l)?, &sphere.alg, &product_alg, pieces.as_ref())?;
    let b2 = product_ivqm_lower_bound(&tq.compact_value(&l2)?, &sphere.alg, &product_alg, pieces.as_ref())?;
    let stabilized_product_nonzero = !b1.product(&b2)?.is_zero();
    Ok(MeridianReport { heavy, spanned_by_omega_power, stabilized_product_nonzero })
}

/// The open cover of `T²` by the annuli `P = {0 < p < b}`, `Q = {0 < q < b}` and
/// an open square `R` slightly bigger than the complement of `P ∪ Q`.
pub fn three_set_cover(field: GroundField, m: usize) -> Result<(TorusQuasi, CoverReport)> {
    if m < 8 || !m.is_multiple_of(2) {
        return Err(Error::Schema("three-set cover needs an even grid of size ≥ 8".into()));
    }
    let tq = TorusQuasi::new(field, 1, m)?;
    let b = m / 2 + 3;
    let annulus = Polyinterval::new(vec![AxisInterval::OpenArc { start: 0, len: b }]);
    let c_p = tq.polyinterval_set(0, &annulus)?;
    let c_q = tq.polyinterval_set(1, &annulus)?;
    let side = AxisInterval::OpenArc { start: b - 1, len: m - b + 2 };
    let r = tq.grid.cells_where(|x, d| (0..2).all(|i| side.contains(x[i], d >> i & 1 == 1, m)));
    let c_r: CellSet = r.iter().map(|x| !x).collect();
    let report = cover_obstruction(&tq, &[c_p, c_q, c_r])?;
    Ok((tq, report))
}

#[derive(Clone, Debug)]
pub struct CubeWitness {
    pub ideal: GradedIdeal,
    pub cube: GradedIdeal,
    pub witness: Elem,
    pub witness_in_cube: bool,
}

/// `I = ⟨α⊗h, β⊗h, γ⊗h⟩` in `QH*(T⁶) ⊗ QH*(S²)` with `α = dq1dq2`, `β = dp1dp3`,
/// `γ = dp2dq3`; the cube contains `top ⊗ T·h`.
pub fn torus_sphere_cube(field: GroundField) -> Result<CubeWitness> {
    let t6 = GradedAlgebra::qh_torus(field, 3);
    let s2 = GradedAlgebra::qh_sphere(field);
    let alg = Arc::new(t6.tensor(&s2)?);
    let nb = s2.dim();
    let h = s2.index_of("h").expect("h");
    let elem = |label: &str| -> Result<Elem> {
        let i = t6.index_of(label).ok_or_else(|| Error::Schema(format!("no class {label}")))?;
        Ok(alg.basis(i * nb + h))
    };
    let gens = [elem("dq1dq2")?, elem("dp1dp3")?, elem("dp2dq3")?];
    let ideal = GradedIdeal::from_generators(&alg, &gens)?;
    let cube = ideal.power(3);
    let mut witness = alg.zero();
    let top = t6.top.expect("top class");
    witness[top * nb + h] = Lam::t_pow(field, rat(1, 1));
    let witness_in_cube = cube.contains(&witness);
    Ok(CubeWitness { ideal, cube, witness, witness_in_cube })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const F2: GroundField = GroundField::F2;

    fn sphere() -> SphereQuasi {
        SphereQuasi::standard(F2).unwrap()
    }

    fn face_unions(s: &SphereQuasi) -> Vec<u64> {
        (0..1u64 << s.model.face_count()).map(|f| s.faces(f)).collect()
    }

    #[test]
    fn sphere_disk_examples() {
        let s = sphere();
        let small = s.named(&["n0", "n1", "n2", "n3", "m0"]).unwrap();
        assert!(s.is_disk(0b1_1111));
        assert_eq!(s.weight(small) * 5, s.total_weight() * 2);
        assert!(s.compact_value(&small).unwrap().is_zero());
        let large = s.named(&["n0", "n1", "n2", "n3", "m3", "m0", "m1"]).unwrap();
        assert_eq!(s.weight(large) * 5, s.total_weight() * 3);
        assert!(s.compact_value(&large).unwrap().is_whole());
        let band = s.named(&["m0", "m1", "m2", "m3"]).unwrap();
        assert!(s.compact_value(&band).unwrap().is_whole());
        assert!(!s.is_disk(0b1111_0000));
    }

    #[test]
    fn equator_is_heavy_and_splits_into_half_disks() {
        let s = sphere();
        let eq = s.equator().unwrap();
        assert!(s.compact_value(&eq).unwrap().is_whole());
        assert!(!s.displaceable(&eq));
        let pieces = s.displaceable_pieces(eq).unwrap();
        assert_eq!(pieces.pieces.len(), 2);
        for c in s.components(s.all() & !eq) {
            assert_eq!(2 * s.weight(c), s.total_weight());
        }
        let cap = s.named(&["n0", "n1", "n2", "n3"]).unwrap();
        assert!(s.displaceable_pieces(cap).is_none());
    }

    #[test]
    fn sphere_disks_follow_the_area_rule() {
        let s = sphere();
        let mut disks = 0;
        for f in 1..1u64 << 12 {
            if s.is_disk(f) {
                disks += 1;
                let k = s.faces(f);
                let small = 2 * s.weight(k) < s.total_weight();
                assert_eq!(s.compact_value(&k).unwrap().is_zero(), small, "{}", s.describe(&k));
            }
        }
        assert!(disks > 100);
    }

    #[test]
    fn sphere_passes_quasi_axioms_on_face_unions() {
        let s = sphere();
        let mut lattice = face_unions(&s);
        lattice.push(s.equator().unwrap());
        let cap = s.named(&["n0", "n1", "n2", "n3"]).unwrap();
        let chains = vec![vec![s.all(), s.named(&["n0", "n1", "n2", "n3", "m0", "m1"]).unwrap(), cap, s.named(&["n0"]).unwrap()]];
        for mode in [Mode::Compact, Mode::Open] {
            let r = check_axioms(&s, &lattice, &chains, mode);
            assert!(r.passed(), "{mode:?}: {r:#?}");
            assert!(r.get("quasi-multiplicativity").unwrap().checked > 1000);
            assert!(r.get("vanishing").unwrap().checked > 100);
            assert!(r.get("invariance").unwrap().checked > 0);
        }
    }

    #[test]
    fn sphere_is_not_multiplicative() {
        // Two large disks with crossing boundaries whose intersection is small.
        let s = sphere();
        let a = s.named(&["n0", "n1", "n2", "n3", "m0", "m1", "m2"]).unwrap();
        let b = s.named(&["s0", "s1", "s2", "s3", "m0", "m1", "m2"]).unwrap();
        assert!(s.compact_value(&a).unwrap().is_whole() && s.compact_value(&b).unwrap().is_whole());
        assert!(!s.commute(&a, &b));
        assert!(s.compact_value(&(a & b)).unwrap().is_zero());
    }

    #[test]
    fn rotation_must_preserve_areas() {
        let mut s = sphere();
        let mut vp: Vec<usize> = (0..10).collect();
        for k in 0..4 {
            vp[1 + k] = 1 + (k + 1) % 4;
            vp[5 + k] = 5 + (k + 1) % 4;
        }
        assert!(s.add_symmetry(&vp).is_err());
    }

    #[test]
    fn trivial_measure_passes_ivm_axioms() {
        let grid = TorusGrid::cubic(2, 3).unwrap();
        let mu = TrivialMeasure::new(grid.complex.clone(), Arc::new(GradedAlgebra::torus(F2, 2))).unwrap();
        let gens: Vec<CellSet> = [AxisInterval::Point { at: 0 }, AxisInterval::Arc { start: 0, len: 1 }, AxisInterval::Full]
            .iter()
            .flat_map(|a| [Polyinterval::new(vec![a.clone(), AxisInterval::Full]), Polyinterval::new(vec![AxisInterval::Full, a.clone()])])
            .map(|p| p.cells(&grid))
            .collect();
        let lattice = lattice_closure(&mu, &gens, 200).unwrap();
        for mode in [Mode::Compact, Mode::Open] {
            let r = check_axioms(&mu, &lattice, &[], mode);
            assert!(r.passed(), "{r:#?}");
        }
    }

    #[test]
    fn cohomology_measure_passes_ivm_axioms() {
        let mu = CohomologyMeasure::new(TorusGrid::cubic(2, 4).unwrap(), F2);
        let gens: Vec<CellSet> = [
            Polyinterval::new(vec![AxisInterval::Arc { start: 0, len: 1 }, AxisInterval::Full]),
            Polyinterval::new(vec![AxisInterval::Arc { start: 2, len: 1 }, AxisInterval::Full]),
            Polyinterval::new(vec![AxisInterval::Full, AxisInterval::Point { at: 1 }]),
            Polyinterval::new(vec![AxisInterval::Arc { start: 1, len: 2 }, AxisInterval::Arc { start: 1, len: 2 }]),
        ]
        .iter()
        .map(|p| p.cells(&mu.grid))
        .collect();
        let lattice = lattice_closure(&mu, &gens, 400).unwrap();
        for mode in [Mode::Compact, Mode::Open] {
            let r = check_axioms(&mu, &lattice, &[], mode);
            assert!(r.passed(), "{r:#?}");
            assert_eq!(r.get("multiplicativity").unwrap().skipped, 0);
        }
    }

    #[test]
    fn failing_measure_is_reported() {
        // The trivial measure is not additive on disjoint pieces of a disconnected complement.
        struct Bad(TrivialMeasure);
        impl Measure for Bad {
            type S = CellSet;
            fn algebra(&self) -> &Arc<GradedAlgebra> {
                self.0.algebra()
            }
            fn label(&self) -> String {
                "bad".into()
            }
            fn quasi(&self) -> bool {
                false
            }
            fn universe(&self) -> CellSet {
                self.0.universe()
            }
            fn empty(&self) -> CellSet {
                self.0.empty()
            }
            fn union(&self, a: &CellSet, b: &CellSet) -> CellSet {
                self.0.union(a, b)
            }
            fn inter(&self, a: &CellSet, b: &CellSet) -> CellSet {
                self.0.inter(a, b)
            }
            fn subset(&self, a: &CellSet, b: &CellSet) -> bool {
                self.0.subset(a, b)
            }
            fn compact_value(&self, k: &CellSet) -> Result<GradedIdeal> {
                // Whole on every nonempty set, so disjoint sets violate multiplicativity.
                Ok(if k.iter().any(|&b| b) { GradedIdeal::whole(self.algebra()) } else { GradedIdeal::zero(self.algebra()) })
            }
            fn open_value(&self, c: &CellSet) -> Result<GradedIdeal> {
                self.0.open_value(c)
            }
            fn describe(&self, s: &CellSet) -> String {
                cs_describe(s)
            }
        }
        let grid = TorusGrid::cubic(1, 4).unwrap();
        let bad = Bad(TrivialMeasure::new(grid.complex.clone(), Arc::new(GradedAlgebra::torus(F2, 1))).unwrap());
        let p = |at| Polyinterval::new(vec![AxisInterval::Point { at }]).cells(&grid);
        let lattice = lattice_closure(&bad, &[p(0), p(2)], 50).unwrap();
        let r = check_axioms(&bad, &lattice, &[], Mode::Compact);
        assert!(!r.passed());
        assert!(r.get("multiplicativity").unwrap().failures > 0);
        assert!(!r.get("multiplicativity").unwrap().witnesses.is_empty());
    }

    #[test]
    fn closed_form_examples() {
        let alg = Arc::new(GradedAlgebra::qh_torus(F2, 2));
        let pt = Polyinterval::new(vec![AxisInterval::Point { at: 0 }; 2]);
        let v = torus_ivqm_value(&alg, &pt, &[4, 4]).unwrap();
        assert_eq!(v.dim(), 4);
        assert!(v.contains(&alg.basis(alg.index_of("dp1dp2").unwrap())));
        let empty = Polyinterval::new(vec![AxisInterval::Empty, AxisInterval::Full]);
        assert!(torus_ivqm_value(&alg, &empty, &[4, 4]).unwrap().is_zero());
        let strip = Polyinterval::new(vec![AxisInterval::Arc { start: 0, len: 2 }, AxisInterval::Full]);
        let v = torus_ivqm_value(&alg, &strip, &[4, 4]).unwrap();
        assert_eq!(v, GradedIdeal::from_generators(&alg, &[alg.basis(alg.index_of("dp1").unwrap())]).unwrap());
        let full = Polyinterval::new(vec![AxisInterval::Full; 2]);
        assert!(torus_ivqm_value(&alg, &full, &[4, 4]).unwrap().is_whole());
        let mixed = Polyinterval::new(vec![AxisInterval::Point { at: 0 }, AxisInterval::OpenArc { start: 0, len: 2 }]);
        assert!(matches!(torus_ivqm_value(&alg, &mixed, &[4, 4]), Err(Error::Schema(_))));
        assert!(torus_ivqm_value(&alg, &pt, &[4]).is_err());
    }

    #[test]
    fn closed_form_matches_oracle_on_small_grids() {
        for (n, m) in [(1, 5), (2, 4)] {
            let base = TorusGrid::cubic(n, m).unwrap();
            let alg = Arc::new(GradedAlgebra::qh_torus(F2, n));
            let polys = all_polyintervals(&base.m);
            let r = closed_form_gate(&base, &alg, &polys).unwrap();
            assert!(r.passed(), "{:?}", r.mismatches);
            assert!(r.checked > 10);
        }
    }

    #[test]
    fn closed_form_matches_oracle_over_q() {
        let base = TorusGrid::cubic(2, 3).unwrap();
        let alg = Arc::new(GradedAlgebra::qh_torus(GroundField::Q, 2));
        let polys = all_polyintervals(&base.m);
        assert!(closed_form_gate(&base, &alg, &polys).unwrap().passed());
    }

    #[test]
    fn torus_quasi_values() {
        let tq = TorusQuasi::new(F2, 1, 8).unwrap();
        let arc = Polyinterval::new(vec![AxisInterval::Arc { start: 0, len: 3 }]);
        let k = tq.polyinterval_set(0, &arc).unwrap();
        let dp = GradedIdeal::from_generators(&tq.alg, &[tq.alg.basis(1)]).unwrap();
        assert_eq!(tq.compact_value(&k).unwrap(), dp);
        assert!(!tq.displaceable(&k));
        let kq = tq.polyinterval_set(1, &arc).unwrap();
        assert_eq!(tq.compact_value(&kq).unwrap(), GradedIdeal::from_generators(&tq.alg, &[tq.alg.basis(2)]).unwrap());
        assert!(tq.commute(&k, &k.iter().map(|_| false).collect()));
        // A small square is displaceable; its complement has value A.
        let side = AxisInterval::Arc { start: 0, len: 2 };
        let sq = tq.grid.cells_where(|x, d| (0..2).all(|i| side.contains(x[i], d >> i & 1 == 1, 8)));
        assert!(tq.displaceable(&sq));
        assert!(tq.compact_value(&sq).unwrap().is_zero());
        assert!(tq.open_value(&sq).unwrap().is_whole());
        // A square of side 4 is too wide for a translation.
        let side = AxisInterval::Arc { start: 0, len: 4 };
        let big = tq.grid.cells_where(|x, d| (0..2).all(|i| side.contains(x[i], d >> i & 1 == 1, 8)));
        assert!(!tq.displaceable(&big));
        assert!(matches!(tq.compact_value(&big), Err(Error::Unsupported(_))));
    }

    #[test]
    fn torus_quasi_axioms_on_preimages_and_boxes() {
        let tq = TorusQuasi::new(F2, 1, 6).unwrap();
        let mut gens = Vec::new();
        for a in [AxisInterval::Point { at: 0 }, AxisInterval::Arc { start: 0, len: 2 }, AxisInterval::Arc { start: 3, len: 2 }] {
            let p = Polyinterval::new(vec![a]);
            gens.push(tq.polyinterval_set(0, &p).unwrap());
            gens.push(tq.polyinterval_set(1, &p).unwrap());
        }
        let side = AxisInterval::Arc { start: 1, len: 1 };
        gens.push(tq.grid.cells_where(|x, d| (0..2).all(|i| side.contains(x[i], d >> i & 1 == 1, 6))));
        let lattice = lattice_closure(&tq, &gens, 2000).unwrap();
        for mode in [Mode::Compact, Mode::Open] {
            let r = check_axioms(&tq, &lattice, &[], mode);
            assert!(r.passed(), "{mode:?} {r:#?}");
            assert!(r.get("additivity").unwrap().checked > 0);
            assert!(r.get("vanishing").unwrap().checked > 0);
        }
    }

    #[test]
    fn disjoint_polyintervals_are_additive() {
        let tq = TorusQuasi::new(F2, 1, 8).unwrap();
        let a = tq.polyinterval_set(0, &Polyinterval::new(vec![AxisInterval::Arc { start: 0, len: 2 }])).unwrap();
        let b = tq.polyinterval_set(0, &Polyinterval::new(vec![AxisInterval::Arc { start: 4, len: 2 }])).unwrap();
        let u = cs_union(&a, &b);
        let sum = tq.compact_value(&a).unwrap().sum(&tq.compact_value(&b).unwrap()).unwrap();
        assert_eq!(tq.compact_value(&u).unwrap(), sum);
    }

    #[test]
    fn pushforward_identity_and_projection() {
        let mu = CohomologyMeasure::new(TorusGrid::cubic(2, 4).unwrap(), F2);
        let id = Pushforward::new(&mu, mu.grid.complex.clone(), (0..mu.grid.complex.len()).collect(), false).unwrap();
        let k = Polyinterval::new(vec![AxisInterval::Arc { start: 0, len: 1 }, AxisInterval::Full]).cells(&mu.grid);
        assert_eq!(id.compact_value(&k).unwrap(), mu.compact_value(&k).unwrap());

        let (circle, map) = axis_projection(&mu.grid, &[0]).unwrap();
        let push = Pushforward::new(&mu, circle.complex.clone(), map, true).unwrap();
        let arc = Polyinterval::new(vec![AxisInterval::Arc { start: 0, len: 2 }]).cells(&circle);
        let v = push.compact_value(&arc).unwrap();
        assert_eq!(v, GradedIdeal::from_generators(&mu.alg, &[mu.alg.basis(1)]).unwrap());
        let open_c = Polyinterval::new(vec![AxisInterval::Arc { start: 1, len: 2 }]).cells(&circle);
        assert_eq!(push.open_value(&open_c).unwrap(), v);
    }

    #[test]
    fn pushforward_rejects_non_cellular_maps() {
        let mu = CohomologyMeasure::new(TorusGrid::cubic(1, 4).unwrap(), F2);
        let cx = mu.grid.complex.clone();
        let mut map: Vec<usize> = (0..cx.len()).collect();
        let edge = cx.cells(1)[0];
        map[edge] = cx.cells(0)[2];
        map[cx.cells(0)[0]] = cx.cells(1)[1];
        assert!(Pushforward::new(&mu, cx.clone(), map, false).is_err());
        let mut map: Vec<usize> = (0..cx.len()).collect();
        map[cx.cells(1)[0]] = cx.cells(1)[2];
        assert!(Pushforward::new(&mu, cx, map, false).is_err());
    }

    #[test]
    fn projected_torus_quasi_is_a_measure() {
        let tq = TorusQuasi::new(F2, 1, 5).unwrap();
        let (circle, map) = axis_projection(&tq.grid, &[0]).unwrap();
        let push = Pushforward::new(&tq, circle.complex.clone(), map, true).unwrap();
        assert!(!push.quasi());
        let mut subs = Vec::new();
        for mask in 0u32..1 << circle.complex.len() {
            let s: CellSet = (0..circle.complex.len()).map(|c| mask >> c & 1 == 1).collect();
            if circle.complex.is_subcomplex(&s) {
                subs.push(s);
            }
        }
        for mode in [Mode::Compact, Mode::Open] {
            let r = check_axioms(&push, &subs, &[], mode);
            assert!(r.passed(), "{r:#?}");
            assert_eq!(r.get("multiplicativity").unwrap().skipped, 0);
        }
    }

    #[test]
    fn chain_stabilization() {
        let alg = Arc::new(GradedAlgebra::torus(F2, 2));
        let z = GradedIdeal::zero(&alg);
        let w = GradedIdeal::whole(&alg);
        assert_eq!(stabilize_chain(&[w.clone(), w.clone()]).unwrap().stable_from, 0);
        assert!(stabilize_chain(&[w.clone(), z.clone()]).is_err());
        assert!(stabilize_chain(&[]).is_err());

        // Closed annuli exhausting the open annulus 2 < p < 9 on a 12-grid.
        let mu = CohomologyMeasure::new(TorusGrid::cubic(2, 12).unwrap(), F2);
        let annulus = |s, l| Polyinterval::new(vec![AxisInterval::Arc { start: s, len: l }, AxisInterval::Full]).cells(&mu.grid);
        let mut vals: Vec<GradedIdeal> = [(5, 1), (4, 3), (3, 5)].iter().map(|&(s, l)| mu.compact_value(&annulus(s, l)).unwrap()).collect();
        let open = Polyinterval::new(vec![AxisInterval::OpenArc { start: 2, len: 7 }, AxisInterval::Full]);
        let Region::OpenComplementOf(c) = open.region(&mu.grid).unwrap() else { unreachable!() };
        vals.push(mu.open_value(&c).unwrap());
        let s = stabilize_chain(&vals).unwrap();
        assert_eq!(s.value, GradedIdeal::from_generators(&mu.alg, &[mu.alg.basis(1)]).unwrap());
        assert_eq!(s.stable_from, 0);

        let exhaust = vec![z.clone(), GradedIdeal::from_generators(&alg, &[alg.basis(3)]).unwrap(), w.clone()];
        assert!(stabilize_chain(&exhaust).unwrap().value.is_whole());
    }

    #[test]
    fn meridian_pair_is_rigid() {
        for n in [1, 2] {
            let r = meridian_example(GroundField::Q, n, 3).unwrap();
            assert!(r.heavy.heavy_k && r.heavy.heavy_k2 && r.heavy.rigid_pair);
            assert!(r.spanned_by_omega_power);
            assert!(r.stabilized_product_nonzero);
        }
    }

    #[test]
    fn heavy_criterion_with_light_set() {
        let alg = Arc::new(GradedAlgebra::qh_sphere(F2));
        let r = sh_heavy_and_criterion(&GradedIdeal::zero(&alg), &GradedIdeal::whole(&alg)).unwrap();
        assert!(!r.heavy_k && r.heavy_k2 && !r.rigid_pair);
    }

    #[test]
    fn three_sets_cannot_commute() {
        let (tq, r) = three_set_cover(F2, 16).unwrap();
        assert!(r.obstructed);
        let dp = GradedIdeal::from_generators(&tq.alg, &[tq.alg.basis(1)]).unwrap();
        let dq = GradedIdeal::from_generators(&tq.alg, &[tq.alg.basis(2)]).unwrap();
        assert_eq!(r.factors, vec![dp, dq, GradedIdeal::whole(&tq.alg)]);
        assert!(r.product.contains(&tq.alg.top_elem().unwrap()));
    }

    #[test]
    fn cover_by_whole_space_is_not_obstructed() {
        let s = sphere();
        let r = cover_obstruction(&s, &[0]).unwrap();
        assert!(!r.obstructed);
        assert!(cover_obstruction(&s, &[s.equator().unwrap()]).is_err());
        // Two large open disks covering the sphere have light complements, so no
        // obstruction: sublevel sets of a height function realize such covers.
        let c1 = s.named(&["m2", "s0", "s1", "s2", "s3"]).unwrap();
        let c2 = s.named(&["n0"]).unwrap();
        assert_eq!(s.weight(s.all() & !c1) * 5, s.total_weight() * 3);
        let r = cover_obstruction(&s, &[c1, c2]).unwrap();
        assert!(!r.obstructed && r.factors.iter().all(GradedIdeal::is_zero));
    }

    #[test]
    fn lower_bound_needs_a_flag() {
        let s = sphere();
        let t2 = Arc::new(GradedAlgebra::qh_torus(F2, 1));
        let prod = Arc::new(t2.tensor(&s.alg).unwrap());
        let tau = GradedIdeal::from_generators(&t2, &[t2.basis(1)]).unwrap();
        assert!(product_ivqm_lower_bound(&tau, &s.alg, &prod, None).is_err());
        let pieces = s.displaceable_pieces(s.equator().unwrap());
        let b = product_ivqm_lower_bound(&tau, &s.alg, &prod, pieces.as_ref()).unwrap();
        assert_eq!(b.dim(), tau.dim() * 2);
        let zero = product_ivqm_lower_bound(&GradedIdeal::zero(&t2), &s.alg, &prod, pieces.as_ref()).unwrap();
        assert!(zero.is_zero());
        let wrong = Arc::new(s.alg.tensor(&t2).unwrap());
        assert!(product_ivqm_lower_bound(&tau, &s.alg, &wrong, pieces.as_ref()).is_err());
    }

    #[test]
    fn cube_of_stabilized_ideal_survives() {
        let w = torus_sphere_cube(F2).unwrap();
        assert!(!w.cube.is_zero());
        assert!(w.witness_in_cube);
        // `h` is a unit (`h² = T`), so the cube is `top ⊗ QH*(S²)`.
        assert_eq!(w.cube.dim(), 2);
    }

    #[test]
    fn polyinterval_enumeration_counts() {
        // Per axis on m = 4: 4 points, 12 closed arcs, 16 open arcs, the full circle.
        let ps = all_polyintervals(&[4]);
        // The full circle is both closed and open and is listed once.
        assert_eq!(ps.len(), 1 + (4 + 12 + 1) + 16);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn sphere_values_are_monotone(a in 0u64..4096, b in 0u64..4096) {
            let s = sphere();
            let (ka, kb) = (s.faces(a), s.faces(a | b));
            let (va, vb) = (s.compact_value(&ka).unwrap(), s.compact_value(&kb).unwrap());
            prop_assert!(vb.contains_ideal(&va));
            let (ua, ub) = (s.open_value(&kb).unwrap(), s.open_value(&ka).unwrap());
            prop_assert!(ub.contains_ideal(&ua));
        }

        #[test]
        fn commutation_is_symmetric_and_disjoint_sets_commute(a in 0u64..4096, b in 0u64..4096) {
            let s = sphere();
            let (ka, kb) = (s.faces(a), s.faces(b));
            prop_assert_eq!(s.commute(&ka, &kb), s.commute(&kb, &ka));
            if ka & kb == 0 {
                prop_assert!(s.commute(&ka, &kb));
            }
        }

        #[test]
        fn flagged_sets_vanish(a in 0u64..4096) {
            let s = sphere();
            let k = s.faces(a);
            if s.displaceable(&k) {
                prop_assert!(s.compact_value(&k).unwrap().is_zero());
                prop_assert!(s.open_value(&k).unwrap().is_whole());
            }
        }

        #[test]
        fn torus_values_are_translation_invariant(start in 0usize..6, len in 1usize..5, axis in 0usize..2) {
            let tq = TorusQuasi::new(F2, 1, 6).unwrap();
            let k = tq.polyinterval_set(0, &Polyinterval::new(vec![AxisInterval::Arc { start, len }])).unwrap();
            prop_assert_eq!(tq.compact_value(&tq.act(axis, &k)).unwrap(), tq.compact_value(&k).unwrap());
        }
    }
}
