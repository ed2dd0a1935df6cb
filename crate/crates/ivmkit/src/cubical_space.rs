//! Finite cell complexes (torus grids, polygonal surfaces, triangulated simplices),
//! their cellular cohomology over a field, restriction kernels and the cohomology IVM
//! `U ↦ ker(H*(X) → H*(X∖U))`.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{rat, Field, Fp, GroundField};
use crate::graded_algebra::{exterior_order, GradedAlgebra};
use crate::ideals::GradedIdeal;
use crate::linalg::{self, Echelon};
use crate::novikov::{Lam, Poly};

/// Membership flags indexed by cell.
pub type CellSet = Vec<bool>;

/// A regular cell complex given by signed boundary incidences.
#[derive(Clone, Debug)]
pub struct CellComplex {
    dims: Vec<usize>,
    faces: Vec<Vec<(usize, i64)>>,
    cofaces: Vec<Vec<(usize, i64)>>,
    by_dim: Vec<Vec<usize>>,
    pos: Vec<usize>,
}

impl CellComplex {
    /// Validates face dimensions and `∂∘∂ = 0`.
    pub fn new(dims: Vec<usize>, faces: Vec<Vec<(usize, i64)>>) -> Result<Self> {
        if dims.len() != faces.len() {
            return Err(Error::Schema("dims and faces differ in length".into()));
        }
        let n = dims.len();
        let top = dims.iter().copied().max().unwrap_or(0);
        let mut by_dim = vec![Vec::new(); top + 1];
        let mut pos = vec![0; n];
        let mut cofaces = vec![Vec::new(); n];
        for c in 0..n {
            pos[c] = by_dim[dims[c]].len();
            by_dim[dims[c]].push(c);
            for &(f, s) in &faces[c] {
                if f >= n || dims[f] + 1 != dims[c] {
                    return Err(Error::Schema(format!("cell {c} has an invalid face {f}")));
                }
                cofaces[f].push((c, s));
            }
        }
        for c in 0..n {
            let mut acc: BTreeMap<usize, i64> = BTreeMap::new();
            for &(f, s) in &faces[c] {
                for &(g, t) in &faces[f] {
                    *acc.entry(g).or_default() += s * t;
                }
            }
            if acc.values().any(|&v| v != 0) {
                return Err(Error::Invariant(format!("boundary of boundary of cell {c} is nonzero")));
            }
        }
        Ok(CellComplex { dims, faces, cofaces, by_dim, pos })
    }

    /// 2-complex from vertex cycles; edges are oriented from the lower vertex id.
    /// Cells: vertices, then edges (in order of first appearance), then polygons.
    pub fn polygonal(nv: usize, polygons: &[Vec<usize>]) -> Result<(Self, Vec<(usize, usize)>)> {
        let mut edges: Vec<(usize, usize)> = Vec::new();
        let mut edge_id: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut poly_faces = Vec::new();
        for poly in polygons {
            if poly.len() < 3 || poly.iter().any(|&v| v >= nv) {
                return Err(Error::Schema("polygon needs at least three valid vertices".into()));
            }
            let mut bd = Vec::new();
            for k in 0..poly.len() {
                let (a, b) = (poly[k], poly[(k + 1) % poly.len()]);
                let key = (a.min(b), a.max(b));
                let id = *edge_id.entry(key).or_insert_with(|| {
                    edges.push(key);
                    edges.len() - 1
                });
                bd.push((id, if a < b { 1 } else { -1 }));
            }
            poly_faces.push(bd);
        }
        let mut dims = vec![0; nv];
        let mut faces: Vec<Vec<(usize, i64)>> = vec![Vec::new(); nv];
        for &(a, b) in &edges {
            dims.push(1);
            faces.push(vec![(b, 1), (a, -1)]);
        }
        for bd in poly_faces {
            dims.push(2);
            faces.push(bd.into_iter().map(|(e, s)| (nv + e, s)).collect());
        }
        Ok((CellComplex::new(dims, faces)?, edges))
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn dim(&self, c: usize) -> usize {
        self.dims[c]
    }

    pub fn max_dim(&self) -> usize {
        self.by_dim.len() - 1
    }

    /// Cells of dimension `k`, in index order.
    pub fn cells(&self, k: usize) -> &[usize] {
        self.by_dim.get(k).map_or(&[], |v| v.as_slice())
    }

    /// Position of a cell among the cells of its dimension.
    pub fn position(&self, c: usize) -> usize {
        self.pos[c]
    }

    pub fn faces(&self, c: usize) -> &[(usize, i64)] {
        &self.faces[c]
    }

    pub fn cofaces(&self, c: usize) -> &[(usize, i64)] {
        &self.cofaces[c]
    }

    pub fn euler(&self) -> i64 {
        self.by_dim.iter().enumerate().map(|(k, c)| if k % 2 == 0 { c.len() as i64 } else { -(c.len() as i64) }).sum()
    }

    pub fn full(&self) -> CellSet {
        vec![true; self.len()]
    }

    pub fn empty(&self) -> CellSet {
        vec![false; self.len()]
    }

    /// Smallest subcomplex containing `set`.
    pub fn closure(&self, set: &CellSet) -> CellSet {
        let mut out = set.clone();
        for k in (1..self.by_dim.len()).rev() {
            for &c in &self.by_dim[k] {
                if out[c] {
                    for &(f, _) in &self.faces[c] {
                        out[f] = true;
                    }
                }
            }
        }
        out
    }

    pub fn is_subcomplex(&self, set: &CellSet) -> bool {
        (0..self.len()).all(|c| !set[c] || self.faces[c].iter().all(|&(f, _)| set[f]))
    }

    /// Closed star: closure of all cells having a face in `set`.
    pub fn star(&self, set: &CellSet) -> CellSet {
        let mut up = set.clone();
        for k in 1..self.by_dim.len() {
            for &c in &self.by_dim[k] {
                if !up[c] && self.faces[c].iter().any(|&(f, _)| up[f]) {
                    up[c] = true;
                }
            }
        }
        self.closure(&up)
    }

    /// Local indices of the `k`-cells of `z`.
    fn local(&self, z: &CellSet, k: usize) -> (Vec<usize>, Vec<usize>) {
        let cells: Vec<usize> = self.cells(k).iter().copied().filter(|&c| z[c]).collect();
        let mut map = vec![usize::MAX; self.len()];
        for (i, &c) in cells.iter().enumerate() {
            map[c] = i;
        }
        (cells, map)
    }

    /// Coboundary rows of the `k`-cells of `z`, over the `(k+1)`-cells of `z`.
    fn coboundary_rows<F: Field>(&self, f: &F, z: &CellSet, k: usize) -> (Vec<Vec<F::E>>, usize) {
        let (cells, _) = self.local(z, k);
        let (up, map) = self.local(z, k + 1);
        let rows = cells
            .iter()
            .map(|&c| {
                let mut row = vec![f.zero(); up.len()];
                for &(t, s) in &self.cofaces[c] {
                    if z[t] {
                        row[map[t]] = f.add(&row[map[t]], &f.from_i64(s));
                    }
                }
                row
            })
            .collect();
        (rows, up.len())
    }

    /// Betti numbers of the subcomplex `z` over `f`.
    pub fn betti<F: Field>(&self, f: &F, z: &CellSet) -> Vec<usize> {
        let top = self.max_dim();
        let ranks: Vec<usize> = (0..=top)
            .map(|k| {
                let (rows, _) = self.coboundary_rows(f, z, k);
                if rows.is_empty() { 0 } else { linalg::rank(f, rows) }
            })
            .collect();
        (0..=top)
            .map(|k| {
                let nk = self.cells(k).iter().filter(|&&c| z[c]).count();
                nk - ranks[k] - if k > 0 { ranks[k - 1] } else { 0 }
            })
            .collect()
    }

    /// A basis of `H*(X)` by cocycle representatives.
    pub fn cohomology_basis<F: Field>(&self, f: &F) -> CohomologyBasis<F::E> {
        let z = self.full();
        let mut reps = Vec::new();
        let mut labels = Vec::new();
        for k in 0..=self.max_dim() {
            let (rows, width) = self.coboundary_rows(f, &z, k);
            let cocycles = linalg::left_kernel(f, &rows, width);
            let mut ech = Echelon::new(self.cells(k).len());
            if k > 0 {
                for r in self.coboundary_rows(f, &z, k - 1).0 {
                    ech.insert(f, r);
                }
            }
            let mut rk = Vec::new();
            for c in cocycles {
                if ech.insert(f, c.clone()) {
                    rk.push(c);
                }
            }
            labels.push((0..rk.len()).map(|i| format!("h{k}.{i}")).collect());
            reps.push(rk);
        }
        CohomologyBasis { labels, reps }
    }

    /// Per degree, the coefficient vectors (over `basis`) of classes restricting to
    /// zero on the subcomplex `z`.
    pub fn restriction_kernel<F: Field>(&self, f: &F, basis: &CohomologyBasis<F::E>, z: &CellSet) -> Vec<Vec<Vec<F::E>>> {
        basis
            .reps
            .iter()
            .enumerate()
            .map(|(k, reps)| {
                if reps.is_empty() {
                    return Vec::new();
                }
                let (cells, map) = self.local(z, k);
                if cells.is_empty() {
                    return linalg::identity(f, reps.len());
                }
                let mut ech = Echelon::new(cells.len());
                if k > 0 {
                    for &s in self.cells(k - 1) {
                        if !z[s] {
                            continue;
                        }
                        let mut row = vec![f.zero(); cells.len()];
                        for &(t, c) in &self.cofaces[s] {
                            if z[t] {
                                row[map[t]] = f.add(&row[map[t]], &f.from_i64(c));
                            }
                        }
                        ech.insert(f, row);
                    }
                }
                let reduced: Vec<Vec<F::E>> = reps
                    .iter()
                    .map(|rep| ech.reduce(f, cells.iter().map(|&c| rep[self.pos[c]].clone()).collect()))
                    .collect();
                linalg::left_kernel(f, &reduced, cells.len())
            })
            .collect()
    }

    /// Per-degree rank of `H*(X) → H*(z)`.
    pub fn restriction_rank<F: Field>(&self, f: &F, basis: &CohomologyBasis<F::E>, z: &CellSet) -> Vec<usize> {
        self.restriction_kernel(f, basis, z)
            .iter()
            .zip(&basis.reps)
            .map(|(k, r)| r.len() - k.len())
            .collect()
    }
}

/// Cocycle representatives per degree; `reps[k][i]` is indexed by cell position.
#[derive(Clone, Debug)]
pub struct CohomologyBasis<E> {
    pub labels: Vec<Vec<String>>,
    pub reps: Vec<Vec<Vec<E>>>,
}

impl<E> CohomologyBasis<E> {
    pub fn dims(&self) -> Vec<usize> {
        self.reps.iter().map(|r| r.len()).collect()
    }
}

/// Field elements that embed into Λ as constants.
pub trait LiftToLam: Field {
    fn lift(&self, gf: GroundField, e: &Self::E) -> Lam;
}

impl LiftToLam for Fp {
    fn lift(&self, gf: GroundField, e: &u64) -> Lam {
        Lam::from_i64(gf, *e as i64)
    }
}

impl LiftToLam for GroundField {
    fn lift(&self, gf: GroundField, e: &BigRational) -> Lam {
        Lam::from_poly(Poly::constant(gf, e.clone()))
    }
}

/// The n-torus as a product of cycle graphs with `m[i]` edges on axis `i`.
/// Cell `(x, D)` is the cube with lower corner `x` spanning the axes in bitmask `D`.
#[derive(Clone, Debug)]
pub struct TorusGrid {
    pub n: usize,
    pub m: Vec<usize>,
    vol: usize,
    pub complex: CellComplex,
}

/// Largest number of cells a torus grid may have.
pub const TORUS_CELL_BUDGET: usize = 400_000;

impl TorusGrid {
    pub fn new(m: Vec<usize>) -> Result<Self> {
        let n = m.len();
        if n == 0 || n > 8 {
            return Err(Error::Schema(format!("torus dimension {n} out of range")));
        }
        if m.iter().any(|&k| k < 3) {
            return Err(Error::Schema("each axis needs at least 3 subdivisions".into()));
        }
        let vol: usize = m.iter().product();
        if vol.saturating_mul(1 << n) > TORUS_CELL_BUDGET {
            return Err(Error::Budget(format!("torus grid with {} cells", vol << n)));
        }
        let mut g = TorusGrid { n, m, vol, complex: CellComplex { dims: vec![], faces: vec![], cofaces: vec![], by_dim: vec![], pos: vec![] } };
        let total = vol << n;
        let mut dims = Vec::with_capacity(total);
        let mut faces = Vec::with_capacity(total);
        for idx in 0..total {
            let (x, d) = g.cell(idx);
            dims.push(d.count_ones() as usize);
            let mut bd = Vec::new();
            for (j, i) in (0..n).filter(|i| d >> i & 1 == 1).enumerate() {
                let sign = if j % 2 == 0 { 1 } else { -1 };
                let rest = d & !(1 << i);
                let mut front = x.clone();
                front[i] = (front[i] + 1) % g.m[i];
                bd.push((g.cell_index(&front, rest), sign));
                bd.push((g.cell_index(&x, rest), -sign));
            }
            faces.push(bd);
        }
        g.complex = CellComplex::new(dims, faces)?;
        Ok(g)
    }

    pub fn cubic(n: usize, m: usize) -> Result<Self> {
        TorusGrid::new(vec![m; n])
    }

    pub fn cell_index(&self, x: &[usize], dirs: u32) -> usize {
        let mut lin = 0;
        for i in (0..self.n).rev() {
            lin = lin * self.m[i] + x[i] % self.m[i];
        }
        dirs as usize * self.vol + lin
    }

    pub fn cell(&self, idx: usize) -> (Vec<usize>, u32) {
        let (d, mut lin) = ((idx / self.vol) as u32, idx % self.vol);
        let x = self
            .m
            .iter()
            .map(|&k| {
                let v = lin % k;
                lin /= k;
                v
            })
            .collect();
        (x, d)
    }

    /// The dual cell in the half-shifted grid, indexed as a cell of the same grid.
    pub fn dual(&self, idx: usize) -> usize {
        let (mut x, d) = self.cell(idx);
        for i in 0..self.n {
            if d >> i & 1 == 0 {
                x[i] = (x[i] + self.m[i] - 1) % self.m[i];
            }
        }
        self.cell_index(&x, !d & ((1u32 << self.n) - 1))
    }

    /// Subcomplex of the dual grid onto which `X ∖ K` deformation retracts.
    pub fn complement_dual(&self, k: &CellSet) -> CellSet {
        let mut out = self.complex.empty();
        for c in 0..self.complex.len() {
            if !k[c] {
                out[self.dual(c)] = true;
            }
        }
        out
    }

    pub fn cells_where(&self, pred: impl Fn(&[usize], u32) -> bool) -> CellSet {
        (0..self.complex.len())
            .map(|c| {
                let (x, d) = self.cell(c);
                pred(&x, d)
            })
            .collect()
    }

    /// Product cocycles `e_I`, dual to the coordinate subtori, in exterior basis order.
    pub fn product_basis<F: Field>(&self, f: &F) -> CohomologyBasis<F::E> {
        let mut reps: Vec<Vec<Vec<F::E>>> = vec![Vec::new(); self.n + 1];
        let mut labels: Vec<Vec<String>> = vec![Vec::new(); self.n + 1];
        for mask in exterior_order(self.n) {
            let k = mask.count_ones() as usize;
            let mut v = vec![f.zero(); self.complex.cells(k).len()];
            for c in self.complex.cells(k) {
                let (x, d) = self.cell(*c);
                if d == mask && (0..self.n).all(|i| mask >> i & 1 == 0 || x[i] == 0) {
                    v[self.complex.position(*c)] = f.one();
                }
            }
            reps[k].push(v);
            labels[k].push(if mask == 0 {
                "1".into()
            } else {
                (0..self.n).filter(|i| mask >> i & 1 == 1).map(|i| format!("e{}", i + 1)).collect()
            });
        }
        CohomologyBasis { labels, reps }
    }

    /// Subcomplex homotopy equivalent to `X ∖ region`.
    pub fn complement_model(&self, region: &Region) -> CellSet {
        match region {
            Region::Compact(k) => self.complement_dual(k),
            Region::OpenComplementOf(c) => c.clone(),
        }
    }

    /// `ker(H*(T^n) → H*(z))` as a graded ideal of `alg = torus(n)`.
    pub fn kernel_ideal(&self, alg: &Arc<GradedAlgebra>, z: &CellSet) -> Result<GradedIdeal> {
        if alg.dim() != 1 << self.n || alg.components().keys().copied().max() != Some(self.n as i64) {
            return Err(Error::Schema(format!("value algebra is not H*(T^{})", self.n)));
        }
        match alg.field {
            GroundField::Q => self.kernel_ideal_over(&GroundField::Q, alg, z),
            gf => self.kernel_ideal_over(&Fp(gf.characteristic()), alg, z),
        }
    }

    fn kernel_ideal_over<F: LiftToLam>(&self, f: &F, alg: &Arc<GradedAlgebra>, z: &CellSet) -> Result<GradedIdeal> {
        let basis = self.product_basis(f);
        let ker = self.complex.restriction_kernel(f, &basis, z);
        let comps = ker
            .into_iter()
            .enumerate()
            .map(|(k, rows)| (k as i64, rows.iter().map(|r| r.iter().map(|e| f.lift(alg.field, e)).collect()).collect()))
            .collect();
        GradedIdeal::from_component_rows(alg, comps)
    }

    /// The cohomology IVM `ker(H*(X) → H*(X∖region))`; compacts take the
    /// stabilized value over shrinking neighborhoods.
    pub fn coh_ivm_value(&self, alg: &Arc<GradedAlgebra>, region: &Region) -> Result<GradedIdeal> {
        self.kernel_ideal(alg, &self.complement_model(region))
    }
}

/// A compact subcomplex or an open set given as the complement of a closed subcomplex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Region {
    Compact(CellSet),
    OpenComplementOf(CellSet),
}

/// One factor of a polyinterval on a circle with `m` edges; endpoints are vertex ids.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AxisInterval {
    Empty,
    Point { at: usize },
    /// Closed arc of `len` edges starting at vertex `start`.
    Arc { start: usize, len: usize },
    /// Open arc between vertices `start` and `start + len`.
    OpenArc { start: usize, len: usize },
    Full,
}

impl AxisInterval {
    fn check(&self, m: usize) -> Result<()> {
        let ok = match *self {
            AxisInterval::Point { at } => at < m,
            AxisInterval::Arc { start, len } => start < m && (1..m).contains(&len),
            AxisInterval::OpenArc { start, len } => start < m && (1..=m).contains(&len),
            AxisInterval::Empty | AxisInterval::Full => true,
        };
        if ok { Ok(()) } else { Err(Error::Schema(format!("malformed interval {self:?} on a circle with {m} edges"))) }
    }

    /// Whether the open cell (a vertex, or the edge `[v, v+1]` when `edge`) lies in the interval.
    pub fn contains(&self, v: usize, edge: bool, m: usize) -> bool {
        match *self {
            AxisInterval::Empty => false,
            AxisInterval::Full => true,
            AxisInterval::Point { at } => !edge && v == at,
            AxisInterval::Arc { start, len } => {
                let off = (v + m - start) % m;
                if edge { off < len } else { off <= len }
            }
            AxisInterval::OpenArc { start, len } => {
                let off = (v + m - start) % m;
                if edge { off < len } else { off >= 1 && off < len }
            }
        }
    }

    pub fn is_proper(&self) -> bool {
        !matches!(self, AxisInterval::Empty | AxisInterval::Full)
    }

    pub fn refine(&self, factor: usize) -> AxisInterval {
        match *self {
            AxisInterval::Point { at } => AxisInterval::Point { at: at * factor },
            AxisInterval::Arc { start, len } => AxisInterval::Arc { start: start * factor, len: len * factor },
            AxisInterval::OpenArc { start, len } => AxisInterval::OpenArc { start: start * factor, len: len * factor },
            ref other => other.clone(),
        }
    }

    /// Every closed interval (empty, points, arcs, full) on a circle with `m` edges.
    pub fn all_closed(m: usize) -> Vec<AxisInterval> {
        let mut v = vec![AxisInterval::Empty];
        v.extend((0..m).map(|at| AxisInterval::Point { at }));
        for start in 0..m {
            v.extend((1..m).map(|len| AxisInterval::Arc { start, len }));
        }
        v.push(AxisInterval::Full);
        v
    }

    /// Every open interval (empty, open arcs, full) on a circle with `m` edges.
    pub fn all_open(m: usize) -> Vec<AxisInterval> {
        let mut v = vec![AxisInterval::Empty];
        for start in 0..m {
            v.extend((1..=m).map(|len| AxisInterval::OpenArc { start, len }));
        }
        v.push(AxisInterval::Full);
        v
    }
}

/// A product of circle intervals, all closed or all open.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Polyinterval {
    pub axes: Vec<AxisInterval>,
}

impl Polyinterval {
    pub fn new(axes: Vec<AxisInterval>) -> Self {
        Polyinterval { axes }
    }

    pub fn is_empty(&self) -> bool {
        self.axes.contains(&AxisInterval::Empty)
    }

    pub fn is_closed(&self) -> bool {
        !self.axes.iter().any(|a| matches!(a, AxisInterval::OpenArc { .. }))
    }

    pub fn is_open(&self) -> bool {
        !self.axes.iter().any(|a| matches!(a, AxisInterval::Point { .. } | AxisInterval::Arc { .. }))
    }

    /// Axes along which the factor is proper and nonempty.
    pub fn proper_axes(&self) -> Vec<usize> {
        (0..self.axes.len()).filter(|&i| self.axes[i].is_proper()).collect()
    }

    pub fn validate(&self, grid: &TorusGrid) -> Result<()> {
        self.validate_on(&grid.m)
    }

    /// Validation against per-axis subdivision counts.
    pub fn validate_on(&self, m: &[usize]) -> Result<()> {
        if self.axes.len() != m.len() {
            return Err(Error::Schema(format!("polyinterval has {} axes, grid has {}", self.axes.len(), m.len())));
        }
        for (a, &m) in self.axes.iter().zip(m) {
            a.check(m)?;
        }
        if !self.is_closed() && !self.is_open() && !self.is_empty() {
            return Err(Error::Schema("polyinterval mixes open and closed factors".into()));
        }
        Ok(())
    }

    /// Cells whose relative interior lies in the polyinterval.
    pub fn cells(&self, grid: &TorusGrid) -> CellSet {
        grid.cells_where(|x, d| (0..grid.n).all(|i| self.axes[i].contains(x[i], d >> i & 1 == 1, grid.m[i])))
    }

    pub fn region(&self, grid: &TorusGrid) -> Result<Region> {
        self.validate(grid)?;
        let inside = self.cells(grid);
        if self.is_closed() {
            Ok(Region::Compact(inside))
        } else {
            Ok(Region::OpenComplementOf(inside.iter().map(|b| !b).collect()))
        }
    }

    pub fn refine(&self, factor: usize) -> Polyinterval {
        Polyinterval { axes: self.axes.iter().map(|a| a.refine(factor)).collect() }
    }
}

/// The sphere cut into 3 latitude bands and 4 sectors: north caps `n_k`,
/// middle quadrilaterals `m_k`, south caps `s_k`, with rational areas summing to 1.
#[derive(Clone, Debug)]
pub struct SphereModel {
    pub complex: CellComplex,
    pub nv: usize,
    pub edges: Vec<(usize, usize)>,
    pub polygons: Vec<Vec<usize>>,
    pub names: Vec<String>,
    pub areas: Vec<BigRational>,
}

impl SphereModel {
    pub fn new(nv: usize, polygons: Vec<Vec<usize>>, names: Vec<String>, areas: Vec<BigRational>) -> Result<Self> {
        if polygons.len() != areas.len() || names.len() != areas.len() {
            return Err(Error::Schema("one name and area per face".into()));
        }
        let total: BigRational = areas.iter().cloned().sum();
        if total != rat(1, 1) || areas.iter().any(|a| *a <= rat(0, 1)) {
            return Err(Error::Schema("face areas must be positive and sum to 1".into()));
        }
        let (complex, edges) = CellComplex::polygonal(nv, &polygons)?;
        if complex.euler() != 2 || complex.betti(&Fp(2), &complex.full()) != vec![1, 0, 1] {
            return Err(Error::Invariant("face model is not a sphere".into()));
        }
        Ok(SphereModel { complex, nv, edges, polygons, names, areas })
    }

    /// Vertices `N = 0`, `a_k = 1 + k`, `b_k = 5 + k`, `S = 9`; areas in 40ths.
    pub fn standard() -> Self {
        let (a, b) = (|k: usize| 1 + k % 4, |k: usize| 5 + k % 4);
        let mut polys = Vec::new();
        let mut names = Vec::new();
        let mut areas = Vec::new();
        for (k, w) in [3, 2, 3, 2].into_iter().enumerate() {
            polys.push(vec![0, a(k), a(k + 1)]);
            names.push(format!("n{k}"));
            areas.push(rat(w, 40));
        }
        for (k, w) in [6, 4, 6, 4].into_iter().enumerate() {
            polys.push(vec![a(k), a(k + 1), b(k + 1), b(k)]);
            names.push(format!("m{k}"));
            areas.push(rat(w, 40));
        }
        for (k, w) in [2, 3, 2, 3].into_iter().enumerate() {
            polys.push(vec![9, b(k), b(k + 1)]);
            names.push(format!("s{k}"));
            areas.push(rat(w, 40));
        }
        SphereModel::new(10, polys, names, areas).expect("standard sphere model")
    }

    pub fn face_count(&self) -> usize {
        self.polygons.len()
    }

    pub fn face_cell(&self, i: usize) -> usize {
        self.nv + self.edges.len() + i
    }

    pub fn edge_cell(&self, e: usize) -> usize {
        self.nv + e
    }

    pub fn face_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Closed subcomplex spanned by a face bitmask.
    pub fn closed_region(&self, faces: u64) -> CellSet {
        let mut set = self.complex.empty();
        for i in 0..self.face_count() {
            if faces >> i & 1 == 1 {
                set[self.face_cell(i)] = true;
            }
        }
        self.complex.closure(&set)
    }

    pub fn area(&self, faces: u64) -> BigRational {
        (0..self.face_count()).filter(|i| faces >> i & 1 == 1).map(|i| self.areas[i].clone()).sum()
    }
}

/// The 2-simplex cut into `k²` triangles along a barycentric grid. Vertex `(i, j)`
/// has barycentric coordinates `(k−i−j, i, j)/k`.
#[derive(Clone, Debug)]
pub struct SimplexGrid {
    pub k: usize,
    pub complex: CellComplex,
    pub vertices: Vec<(usize, usize)>,
}

impl SimplexGrid {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Schema("simplex grid needs k ≥ 1".into()));
        }
        let mut vertices = Vec::new();
        let mut id = BTreeMap::new();
        for i in 0..=k {
            for j in 0..=k - i {
                id.insert((i, j), vertices.len());
                vertices.push((i, j));
            }
        }
        let mut tris = Vec::new();
        for i in 0..k {
            for j in 0..k - i {
                tris.push(vec![id[&(i, j)], id[&(i + 1, j)], id[&(i, j + 1)]]);
                if i + j + 2 <= k {
                    tris.push(vec![id[&(i + 1, j)], id[&(i + 1, j + 1)], id[&(i, j + 1)]]);
                }
            }
        }
        let (complex, _) = CellComplex::polygonal(vertices.len(), &tris)?;
        Ok(SimplexGrid { k, complex, vertices })
    }

    pub fn barycentric(&self, v: usize) -> [usize; 3] {
        let (i, j) = self.vertices[v];
        [self.k - i - j, i, j]
    }

    /// Whether a cell has a vertex on the side opposite to corner `s`.
    pub fn meets_side(&self, cell: &CellSet, s: usize) -> bool {
        (0..self.vertices.len()).any(|v| cell[v] && self.barycentric(v)[s] == 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn binom(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    fn t(n: usize) -> Arc<GradedAlgebra> {
        Arc::new(GradedAlgebra::torus(GroundField::F2, n))
    }

    fn span(alg: &Arc<GradedAlgebra>, labels: &[&str]) -> GradedIdeal {
        let gens: Vec<_> = labels.iter().map(|l| alg.basis(alg.index_of(l).unwrap())).collect();
        let mut comps: BTreeMap<i64, Vec<Vec<Lam>>> = BTreeMap::new();
        for (l, g) in labels.iter().zip(gens) {
            let d = alg.degrees[alg.index_of(l).unwrap()];
            comps.entry(d).or_default().push(alg.component(d).iter().map(|&i| g[i].clone()).collect());
        }
        GradedIdeal::from_component_rows(alg, comps).unwrap()
    }

    #[test]
    fn torus_cell_counts() {
        let c1 = TorusGrid::cubic(1, 4).unwrap();
        assert_eq!((c1.complex.cells(0).len(), c1.complex.cells(1).len()), (4, 4));
        let c2 = TorusGrid::cubic(2, 8).unwrap();
        let counts: Vec<usize> = (0..=2).map(|k| c2.complex.cells(k).len()).collect();
        assert_eq!(counts, vec![64, 128, 64]);
        for (n, m) in [(1, 3), (2, 5), (3, 3), (4, 3)] {
            assert_eq!(TorusGrid::cubic(n, m).unwrap().complex.euler(), 0);
        }
        assert!(TorusGrid::cubic(2, 2).is_err());
    }

    #[test]
    fn torus_betti_numbers_are_binomial() {
        for n in 1..=3 {
            for m in [3, 4] {
                let g = TorusGrid::cubic(n, m).unwrap();
                let b = g.complex.betti(&Fp(2), &g.complex.full());
                assert_eq!(b, (0..=n).map(|k| binom(n, k)).collect::<Vec<_>>());
                let basis = g.complex.cohomology_basis(&Fp(2));
                assert_eq!(basis.dims(), b);
            }
        }
    }

    #[test]
    fn point_has_one_class() {
        let p = CellComplex::new(vec![0], vec![vec![]]).unwrap();
        assert_eq!(p.betti(&Fp(2), &p.full()), vec![1]);
    }

    #[test]
    fn product_cocycles_form_a_basis() {
        for f in [Fp(2), Fp(3)] {
            let g = TorusGrid::cubic(3, 3).unwrap();
            let basis = g.product_basis(&f);
            // restriction to X itself must be injective
            let ker = g.complex.restriction_kernel(&f, &basis, &g.complex.full());
            assert!(ker.iter().all(|k| k.is_empty()));
            assert_eq!(basis.labels[2], vec!["e1e2", "e1e3", "e2e3"]);
        }
    }

    #[test]
    fn bad_complexes_are_rejected() {
        // a 2-cell whose boundary is a single edge traversed once
        let dims = vec![0, 0, 1, 2];
        let faces = vec![vec![], vec![], vec![(1, 1), (0, -1)], vec![(2, 1)]];
        assert!(matches!(CellComplex::new(dims, faces), Err(Error::Invariant(_))));
    }

    #[test]
    fn restriction_examples() {
        let g = TorusGrid::cubic(2, 4).unwrap();
        let f = Fp(2);
        let basis = g.product_basis(&f);
        let total = |z: &CellSet| g.complex.restriction_rank(&f, &basis, z).iter().sum::<usize>();
        assert_eq!(total(&g.complex.full()), 4);
        let meridian = g.cells_where(|x, d| x[0] == 0 && d & 1 == 0);
        assert_eq!(total(&meridian), 2);
        let square = g.complex.closure(&g.cells_where(|x, d| x == [1, 1] && d == 3));
        assert_eq!(total(&square), 1);
    }

    #[test]
    fn complement_of_a_point_is_a_wedge_of_circles() {
        let g = TorusGrid::cubic(2, 5).unwrap();
        let pt = g.cells_where(|x, d| x == [2, 2] && d == 0);
        let z = g.complement_dual(&pt);
        assert!(g.complex.is_subcomplex(&z));
        assert_eq!(g.complex.betti(&Fp(2), &z), vec![1, 2, 0]);
    }

    #[test]
    fn coh_ivm_examples() {
        let g = TorusGrid::cubic(2, 6).unwrap();
        let a = t(2);
        let empty = Region::Compact(g.complex.empty());
        assert!(g.coh_ivm_value(&a, &empty).unwrap().is_zero());
        let whole = Region::OpenComplementOf(g.complex.empty());
        assert!(g.coh_ivm_value(&a, &whole).unwrap().is_whole());
        // open annulus {p ∈ (1, 3)}
        let ann = Polyinterval::new(vec![AxisInterval::OpenArc { start: 1, len: 2 }, AxisInterval::Full]);
        assert_eq!(g.coh_ivm_value(&a, &ann.region(&g).unwrap()).unwrap(), span(&a, &["e1", "e1e2"]));
        // small open disk and its complement
        let disk = Polyinterval::new(vec![AxisInterval::OpenArc { start: 1, len: 2 }; 2]);
        assert_eq!(g.coh_ivm_value(&a, &disk.region(&g).unwrap()).unwrap(), span(&a, &["e1e2"]));
        let closed_sq = Polyinterval::new(vec![AxisInterval::Arc { start: 1, len: 2 }; 2]);
        let outside = Region::OpenComplementOf(closed_sq.cells(&g));
        assert_eq!(g.coh_ivm_value(&a, &outside).unwrap(), span(&a, &["e1", "e2", "e1e2"]));
    }

    #[test]
    fn circle_interval_kernel() {
        let g = TorusGrid::cubic(1, 6).unwrap();
        let a = t(1);
        let arc = Polyinterval::new(vec![AxisInterval::OpenArc { start: 0, len: 2 }]);
        assert_eq!(g.coh_ivm_value(&a, &arc.region(&g).unwrap()).unwrap(), span(&a, &["e1"]));
    }

    #[test]
    fn rational_and_odd_coefficients_agree() {
        let g = TorusGrid::cubic(2, 4).unwrap();
        for gf in [GroundField::Q, GroundField::Fp(3)] {
            let a = Arc::new(GradedAlgebra::torus(gf, 2));
            let s = Polyinterval::new(vec![AxisInterval::Point { at: 0 }, AxisInterval::Full]);
            let v = g.coh_ivm_value(&a, &s.region(&g).unwrap()).unwrap();
            assert_eq!(v.dim(), 2);
            assert!(v.contains(&a.basis(a.index_of("e1").unwrap())));
        }
    }

    #[test]
    fn sphere_and_simplex_models() {
        let s = SphereModel::standard();
        assert_eq!((s.nv, s.edges.len(), s.face_count()), (10, 20, 12));
        assert_eq!(s.area((1 << 12) - 1), rat(1, 1));
        let d = SimplexGrid::new(4).unwrap();
        assert_eq!(d.complex.cells(2).len(), 16);
        assert_eq!(d.complex.euler(), 1);
        assert_eq!(d.complex.betti(&Fp(2), &d.complex.full()), vec![1, 0, 0]);
        let bad = SphereModel::new(10, s.polygons.clone(), s.names.clone(), vec![rat(1, 12); 11].into_iter().chain([rat(1, 2)]).collect());
        assert!(bad.is_err());
    }

    #[test]
    fn malformed_polyintervals_are_rejected() {
        let g = TorusGrid::cubic(2, 4).unwrap();
        let mixed = Polyinterval::new(vec![AxisInterval::Point { at: 0 }, AxisInterval::OpenArc { start: 0, len: 2 }]);
        assert!(mixed.region(&g).is_err());
        let long = Polyinterval::new(vec![AxisInterval::Arc { start: 0, len: 4 }, AxisInterval::Full]);
        assert!(long.region(&g).is_err());
    }

    fn arb_axis(m: usize, closed: bool) -> impl Strategy<Value = AxisInterval> {
        let all = if closed { AxisInterval::all_closed(m) } else { AxisInterval::all_open(m) };
        prop::sample::select(all)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn refinement_preserves_values(
            (x, y) in any::<bool>().prop_flat_map(|c| (arb_axis(3, c), arb_axis(3, c)))
        ) {
            let coarse = TorusGrid::cubic(2, 3).unwrap();
            let fine = TorusGrid::cubic(2, 6).unwrap();
            let a = t(2);
            let s = Polyinterval::new(vec![x, y]);
            let v0 = coarse.coh_ivm_value(&a, &s.region(&coarse).unwrap()).unwrap();
            let v1 = fine.coh_ivm_value(&a, &s.refine(2).region(&fine).unwrap()).unwrap();
            prop_assert_eq!(v0, v1);
        }

        #[test]
        fn kernels_are_ideals_and_monotone(
            x0 in arb_axis(4, true), x1 in arb_axis(4, true),
            y0 in arb_axis(4, true), y1 in arb_axis(4, true),
        ) {
            let g = TorusGrid::cubic(2, 4).unwrap();
            let a = t(2);
            let s = Polyinterval::new(vec![x0, x1]);
            let r = Polyinterval::new(vec![y0, y1]);
            let (ks, kr) = (s.cells(&g), r.cells(&g));
            let union: CellSet = ks.iter().zip(&kr).map(|(p, q)| *p || *q).collect();
            let vs = g.coh_ivm_value(&a, &Region::Compact(ks)).unwrap();
            let vu = g.coh_ivm_value(&a, &Region::Compact(union)).unwrap();
            prop_assert!(vs.is_closed());
            prop_assert!(vu.contains_ideal(&vs));
        }

        #[test]
        fn dual_complement_is_a_subcomplex(cells in prop::collection::vec(0usize..64, 0..6)) {
            let g = TorusGrid::cubic(2, 4).unwrap();
            let mut set = g.complex.empty();
            for c in cells {
                set[c] = true;
            }
            let k = g.complex.closure(&set);
            let z = g.complement_dual(&k);
            prop_assert!(g.complex.is_subcomplex(&z));
            // Alexander duality count: χ(X ∖ K) = χ(X) − χ(K) = −χ(K)
            let chi = |s: &CellSet| (0..s.len()).filter(|&c| s[c]).map(|c| if g.complex.dim(c).is_multiple_of(2) { 1i64 } else { -1 }).sum::<i64>();
            prop_assert_eq!(chi(&z), -chi(&k));
        }
    }
}
