//! Centerpoints of ideal-valued measures on finite targets, cover refinement in
//! dimensions one and two, the rank bound for pushforwards along cellwise maps,
//! and seeded big-fiber harnesses.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cubical_space::{CellComplex, CellSet, SimplexGrid, TorusGrid};
use crate::error::{Error, Result};
use crate::field::Fp;
use crate::ideals::GradedIdeal;
use crate::ivm_engine::Measure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetKind {
    /// `n` vertices in a row.
    Path { n: usize },
    /// `n ≥ 3` vertices around a circle.
    Cycle { n: usize },
    /// `w × h` unit squares; vertex `(x, y)` has id `y·(w+1) + x`.
    Grid { w: usize, h: usize },
}

/// A finite cell model of the target together with its covering dimension.
#[derive(Clone, Debug)]
pub struct FiniteTarget {
    pub kind: TargetKind,
    pub complex: CellComplex,
    pub d: usize,
    verts: Vec<Vec<usize>>,
}

impl FiniteTarget {
    pub fn new(kind: TargetKind) -> Result<Self> {
        let (complex, d) = match kind {
            TargetKind::Path { n } => {
                if n == 0 {
                    return Err(Error::Schema("a path needs at least one vertex".into()));
                }
                (graph(n, (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect())?, usize::from(n > 1))
            }
            TargetKind::Cycle { n } => {
                if n < 3 {
                    return Err(Error::Schema("a cycle needs at least three vertices".into()));
                }
                (graph(n, (0..n).map(|i| (i, (i + 1) % n)).collect())?, 1)
            }
            TargetKind::Grid { w, h } => {
                if w == 0 || h == 0 {
                    return Err(Error::Schema("a grid needs at least one square".into()));
                }
                let id = |x: usize, y: usize| y * (w + 1) + x;
                let squares: Vec<Vec<usize>> = (0..h)
                    .flat_map(|y| (0..w).map(move |x| vec![id(x, y), id(x + 1, y), id(x + 1, y + 1), id(x, y + 1)]))
                    .collect();
                (CellComplex::polygonal((w + 1) * (h + 1), &squares)?.0, 2)
            }
        };
        let verts = vertex_sets(&complex);
        Ok(FiniteTarget { kind, complex, d, verts })
    }

    pub fn path(n: usize) -> Result<Self> {
        Self::new(TargetKind::Path { n })
    }

    pub fn cycle(n: usize) -> Result<Self> {
        Self::new(TargetKind::Cycle { n })
    }

    pub fn grid(w: usize, h: usize) -> Result<Self> {
        Self::new(TargetKind::Grid { w, h })
    }

    pub fn vertex_count(&self) -> usize {
        self.complex.cells(0).len()
    }

    /// Vertex positions spanning cell `c`.
    pub fn vertices_of(&self, c: usize) -> &[usize] {
        &self.verts[c]
    }

    /// Open star of a cell: every cell having it as a face.
    pub fn open_star(&self, c: usize) -> CellSet {
        let mut one = self.complex.empty();
        one[c] = true;
        up_set(&self.complex, &one)
    }

    /// The largest subcomplex missing a point of the open cell `c`.
    pub fn avoiding(&self, c: usize) -> CellSet {
        self.open_star(c).iter().map(|&b| !b).collect()
    }

    /// Lowest-dimensional cell whose vertices contain `vs` (vertex positions).
    pub fn span(&self, vs: &[usize]) -> Option<usize> {
        (0..self.complex.len())
            .filter(|&c| vs.iter().all(|v| self.verts[c].binary_search(v).is_ok()))
            .min_by_key(|&c| (self.complex.dim(c), c))
    }
}

fn graph(n: usize, edges: Vec<(usize, usize)>) -> Result<CellComplex> {
    let mut dims = vec![0; n];
    let mut faces = vec![Vec::new(); n];
    for (a, b) in edges {
        dims.push(1);
        faces.push(vec![(b, 1), (a, -1)]);
    }
    CellComplex::new(dims, faces)
}

/// Sorted vertex positions of every cell.
pub fn vertex_sets(cx: &CellComplex) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); cx.len()];
    for (i, &v) in cx.cells(0).iter().enumerate() {
        out[v] = vec![i];
    }
    for k in 1..=cx.max_dim() {
        for &c in cx.cells(k) {
            let mut vs: Vec<usize> = cx.faces(c).iter().flat_map(|&(f, _)| out[f].clone()).collect();
            vs.sort_unstable();
            vs.dedup();
            out[c] = vs;
        }
    }
    out
}

/// Cells having some face (or themselves) in `set`.
pub fn up_set(cx: &CellComplex, set: &CellSet) -> CellSet {
    let mut up = set.clone();
    for k in 1..=cx.max_dim() {
        for &c in cx.cells(k) {
            if !up[c] && cx.faces(c).iter().any(|&(f, _)| up[f]) {
                up[c] = true;
            }
        }
    }
    up
}

/// Extends a vertex assignment (indexed by vertex position) to cells: each cell goes
/// to the lowest cell of the target spanned by the images of its vertices.
pub fn cellwise_map(source: &CellComplex, target: &FiniteTarget, values: &[usize]) -> Result<Vec<usize>> {
    let nv = source.cells(0).len();
    if values.len() != nv {
        return Err(Error::Schema(format!("{} vertex values for {nv} vertices", values.len())));
    }
    if let Some(&v) = values.iter().find(|&&v| v >= target.vertex_count()) {
        return Err(Error::Schema(format!("target vertex {v} out of range")));
    }
    let verts = vertex_sets(source);
    (0..source.len())
        .map(|c| {
            let mut img: Vec<usize> = verts[c].iter().map(|&v| values[v]).collect();
            img.sort_unstable();
            img.dedup();
            let y = target
                .span(&img)
                .ok_or_else(|| Error::Schema(format!("cell {c}: vertex images {img:?} span no target cell")))?;
            if target.complex.dim(y) > source.dim(c) {
                return Err(Error::Schema(format!("cell {c} would map onto a higher-dimensional cell")));
            }
            Ok(y)
        })
        .collect()
}

/// Closed fiber over a point of the open target cell `y`: the closure of the cells
/// whose image has `y` as a face.
pub fn fiber(source: &CellComplex, target: &FiniteTarget, map: &[usize], y: usize) -> CellSet {
    let star = target.open_star(y);
    source.closure(&map.iter().map(|&t| star[t]).collect())
}

// ---------------------------------------------------------------------------
// Centerpoint intersection

#[derive(Clone, Debug, Serialize)]
pub struct CenterpointReport {
    /// Target cells lying in every qualifying compact.
    pub points: Vec<usize>,
    /// `I^{d+1} ≠ 0`, so the intersection is guaranteed nonempty.
    pub protected: bool,
    pub tag: Option<String>,
    pub lattice_size: usize,
    /// Lattice members `Z` with `I ⊆ ν(Z)`.
    pub qualifying: usize,
    /// Lattice members whose value the model could not compute.
    pub skipped: usize,
    /// Whether `I ⊄ ν(Y ∖ {y₀})` holds at every returned point; `None` if undecided.
    pub noetherian: Option<bool>,
}

/// Every subcomplex of `cx`, or a budget error beyond `limit`.
pub fn all_subcomplexes(cx: &CellComplex, limit: usize) -> Result<Vec<CellSet>> {
    let order: Vec<usize> = (0..=cx.max_dim()).flat_map(|k| cx.cells(k).to_vec()).collect();
    let mut out = Vec::new();
    let mut cur = cx.empty();
    fn go(cx: &CellComplex, order: &[usize], i: usize, cur: &mut CellSet, out: &mut Vec<CellSet>, limit: usize) -> Result<()> {
        if i == order.len() {
            if out.len() >= limit {
                return Err(Error::Budget(format!("more than {limit} subcomplexes")));
            }
            out.push(cur.clone());
            return Ok(());
        }
        let c = order[i];
        go(cx, order, i + 1, cur, out, limit)?;
        if cx.faces(c).iter().all(|&(f, _)| cur[f]) {
            cur[c] = true;
            go(cx, order, i + 1, cur, out, limit)?;
            cur[c] = false;
        }
        Ok(())
    }
    go(cx, &order, 0, &mut cur, &mut out, limit)?;
    Ok(out)
}

/// Intersection of all lattice compacts `Z` with `I ⊆ ν(Z)`. Under `I^{d+1} ≠ 0`
/// an empty result is a model inconsistency; otherwise the output is tagged.
pub fn find_centerpoints<M: Measure<S = CellSet>>(
    nu: &M,
    target: &FiniteTarget,
    lattice: &[CellSet],
    ideal: &GradedIdeal,
) -> Result<CenterpointReport> {
    if !Arc::ptr_eq(ideal.algebra(), nu.algebra()) && ideal.algebra().labels != nu.algebra().labels {
        return Err(Error::Schema("ideal and measure live in different algebras".into()));
    }
    let n = target.complex.len();
    if let Some(z) = lattice.iter().find(|z| z.len() != n || !target.complex.is_subcomplex(z)) {
        return Err(Error::Schema(format!("lattice member {} is not a subcomplex of the target", fmt_cells(z))));
    }
    let protected = !ideal.power(target.d + 1).is_zero();
    let verdicts: Vec<Result<Option<bool>>> = lattice
        .par_iter()
        .map(|z| match nu.compact_value(z) {
            Ok(v) => Ok(Some(v.contains_ideal(ideal))),
            Err(Error::Unsupported(_)) => Ok(None),
            Err(e) => Err(e),
        })
        .collect();
    let mut inter = vec![true; n];
    let (mut qualifying, mut skipped) = (0, 0);
    for (z, v) in lattice.iter().zip(verdicts) {
        match v? {
            Some(true) => {
                qualifying += 1;
                for (a, &b) in inter.iter_mut().zip(z) {
                    *a &= b;
                }
            }
            Some(false) => {}
            None => skipped += 1,
        }
    }
    let points: Vec<usize> = (0..n).filter(|&c| inter[c]).collect();
    if points.is_empty() && protected {
        return Err(Error::Invariant(format!(
            "empty centerpoint set although I^{} ≠ 0 ({qualifying} qualifying compacts)",
            target.d + 1
        )));
    }
    let noetherian = points
        .par_iter()
        .map(|&y| match nu.compact_value(&target.avoiding(y)) {
            Ok(v) => Ok(Some(!v.contains_ideal(ideal))),
            Err(Error::Unsupported(_)) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .try_fold(true, |acc, v| v.map(|b| acc && b));
    Ok(CenterpointReport {
        points,
        protected,
        tag: (!protected).then(|| "unprotected".to_string()),
        lattice_size: lattice.len(),
        qualifying,
        skipped,
        noetherian,
    })
}

fn fmt_cells(z: &CellSet) -> String {
    format!("{:?}", (0..z.len()).filter(|&c| z[c]).collect::<Vec<_>>())
}

// ---------------------------------------------------------------------------
// Cover refinement

/// A refinement piece: the union of the open dual stars of `cells` in the
/// barycentric subdivision of the target.
#[derive(Clone, Debug, Serialize)]
pub struct Piece {
    pub color: usize,
    pub cells: Vec<usize>,
    /// Index of a cover element containing the piece.
    pub within: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Refinement {
    pub d: usize,
    /// Cells of the barycentric subdivision: strictly increasing chains of target cells.
    pub flags: Vec<Vec<usize>>,
    pub pieces: Vec<Piece>,
}

impl Refinement {
    pub fn colors(&self) -> usize {
        self.pieces.iter().map(|p| p.color + 1).max().unwrap_or(0)
    }

    /// Subdivision cells lying in piece `i`.
    pub fn piece_flags(&self, i: usize) -> Vec<usize> {
        let cells = &self.pieces[i].cells;
        (0..self.flags.len()).filter(|&f| self.flags[f].iter().any(|c| cells.contains(c))).collect()
    }

    /// Pieces cover the subdivision, same-colored pieces are disjoint, each piece
    /// lies in its cover element and at most `d + 1` colors occur.
    pub fn verify(&self, cover: &[CellSet]) -> Result<()> {
        if self.colors() > self.d + 1 {
            return Err(Error::Assertion(format!("{} colors for dimension {}", self.colors(), self.d)));
        }
        let mut owner: Vec<Vec<Option<usize>>> = vec![vec![None; self.d + 1]; self.flags.len()];
        for (i, p) in self.pieces.iter().enumerate() {
            for f in self.piece_flags(i) {
                // A flag's carrier is its top cell.
                let top = *self.flags[f].last().unwrap();
                if !cover[p.within][top] {
                    return Err(Error::Assertion(format!("piece {i} leaves cover element {}", p.within)));
                }
                if let Some(j) = owner[f][p.color].replace(i) {
                    return Err(Error::Assertion(format!("pieces {j} and {i} share color {} and meet", p.color)));
                }
            }
        }
        if let Some(f) = owner.iter().position(|o| o.iter().all(Option::is_none)) {
            return Err(Error::Assertion(format!("subdivision cell {:?} is uncovered", self.flags[f])));
        }
        Ok(())
    }
}

/// Refines an open cover (sets closed under passing to cofaces) into at most
/// `d + 1` colors of pairwise disjoint pieces. Graphs get alternating interval
/// bricks; grids get dual bricks colored by the dimension of their center cell.
pub fn refine_cover(target: &FiniteTarget, cover: &[CellSet]) -> Result<Refinement> {
    let cx = &target.complex;
    let n = cx.len();
    for (i, u) in cover.iter().enumerate() {
        if u.len() != n {
            return Err(Error::Schema(format!("cover element {i} has the wrong length")));
        }
        if up_set(cx, u) != *u {
            return Err(Error::Schema(format!("cover element {i} is not open")));
        }
    }
    if let Some(c) = (0..n).find(|&c| !cover.iter().any(|u| u[c])) {
        return Err(Error::Schema(format!("not a cover: cell {c} is missed")));
    }
    let stars: Vec<CellSet> = (0..n).map(|c| target.open_star(c)).collect();
    let inside = |cells: &[usize]| {
        cover.iter().position(|u| cells.iter().all(|&c| (0..n).all(|t| !stars[c][t] || u[t])))
    };
    let pieces = match target.kind {
        TargetKind::Path { .. } | TargetKind::Cycle { .. } if target.d == 1 => {
            let cyclic = matches!(target.kind, TargetKind::Cycle { .. });
            let seq = graph_order(target);
            let mut runs: Vec<Vec<usize>> = Vec::new();
            for &c in &seq {
                match runs.last_mut() {
                    Some(run) if inside(&[run.as_slice(), &[c]].concat()).is_some() => run.push(c),
                    _ => runs.push(vec![c]),
                }
            }
            if cyclic && runs.len() > 1 && runs.len() % 2 == 1 {
                let i = runs.iter().position(|r| r.len() > 1).expect("a cycle has an even number of cells");
                let tail = runs[i].split_off(1);
                runs.insert(i + 1, tail);
            }
            runs.into_iter()
                .enumerate()
                .map(|(k, cells)| Piece { color: k % 2, within: inside(&cells).unwrap(), cells })
                .collect()
        }
        _ => (0..n)
            .map(|c| Piece { color: cx.dim(c), cells: vec![c], within: inside(&[c]).unwrap() })
            .collect(),
    };
    Ok(Refinement { d: target.d, flags: flags(cx), pieces })
}

/// Cells of a path or cycle in walking order `v₀, e₀, v₁, e₁, …`.
fn graph_order(target: &FiniteTarget) -> Vec<usize> {
    let cx = &target.complex;
    let nv = target.vertex_count();
    let mut seq = Vec::new();
    for i in 0..nv {
        seq.push(cx.cells(0)[i]);
        if let Some(&e) = cx.cells(1).iter().find(|&&e| target.verts[e] == [i, i + 1] || target.verts[e] == [0, i] && i + 1 == nv && nv > 2) {
            seq.push(e);
        }
    }
    seq
}

/// Strictly increasing chains in the face poset.
fn flags(cx: &CellComplex) -> Vec<Vec<usize>> {
    let mut ending: Vec<Vec<Vec<usize>>> = vec![Vec::new(); cx.len()];
    for k in 0..=cx.max_dim() {
        for &c in cx.cells(k) {
            let mut one = cx.empty();
            one[c] = true;
            let below = cx.closure(&one);
            let mut chains = vec![vec![c]];
            for t in (0..cx.len()).filter(|&t| below[t] && t != c) {
                chains.extend(ending[t].iter().map(|ch| [ch.as_slice(), &[c]].concat()));
            }
            ending[c] = chains;
        }
    }
    ending.into_iter().flatten().collect()
}

// ---------------------------------------------------------------------------
// Rank bound for pushforwards

#[derive(Clone, Debug, Serialize)]
pub struct GromovReport {
    pub y0: usize,
    pub codim: usize,
    pub bound: usize,
    /// `dim A / ν(Y ∖ {y})` per target cell, `None` where the model is silent.
    pub codims: Vec<Option<usize>>,
}

/// The target cell maximizing `dim A / ν(Y ∖ {y})`, where `Y ∖ {y}` is realized
/// by the largest subcomplex avoiding the open cell. Fails if the maximum is
/// below `bound`.
pub fn gromov_centerpoint<M: Measure<S = CellSet>>(nu: &M, target: &FiniteTarget, bound: usize) -> Result<GromovReport> {
    let dim = nu.algebra().dim();
    let codims = (0..target.complex.len())
        .into_par_iter()
        .map(|y| match nu.compact_value(&target.avoiding(y)) {
            Ok(v) => Ok(Some(dim - v.dim())),
            Err(Error::Unsupported(_)) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;
    let (y0, codim) = codims
        .iter()
        .enumerate()
        .filter_map(|(y, c)| c.map(|c| (y, c)))
        .max_by_key(|&(y, c)| (c, std::cmp::Reverse(y)))
        .ok_or_else(|| Error::Unsupported("no target point has a computable value".into()))?;
    if codim < bound {
        return Err(Error::Assertion(format!("best codimension {codim} at cell {y0} is below the bound {bound}")));
    }
    Ok(GromovReport { y0, codim, bound, codims })
}

// ---------------------------------------------------------------------------
// Big fibers of maps from a triangulated simplex

#[derive(Clone, Debug, Serialize)]
pub struct BigFiber {
    pub y0: usize,
    /// One vertex cell of the fiber on each face.
    pub witnesses: Vec<usize>,
}

/// Searches target cells for a closed fiber meeting every `pd`-dimensional face
/// of the triangle. Only `n = 2 = p(d+1)` with `p = d = 1` is modeled.
pub fn simplex_big_fiber_check(grid: &SimplexGrid, target: &FiniteTarget, map: &[usize], p: usize) -> Result<BigFiber> {
    if p != 1 || target.d != 1 {
        return Err(Error::Unsupported(format!("simplex search needs p = 1 and a graph target, got p = {p}, d = {}", target.d)));
    }
    if map.len() != grid.complex.len() {
        return Err(Error::Schema("map length differs from the simplex grid".into()));
    }
    let mut order: Vec<usize> = (0..target.complex.len()).collect();
    order.sort_by_key(|&y| std::cmp::Reverse(map.iter().filter(|&&t| t == y).count()));
    for y in order {
        let fib = fiber(&grid.complex, target, map, y);
        let witnesses: Option<Vec<usize>> = (0..3)
            .map(|s| (0..grid.vertices.len()).find(|&v| fib[grid.complex.cells(0)[v]] && grid.barycentric(v)[s] == 0))
            .map(|o| o.map(|v| grid.complex.cells(0)[v]))
            .collect();
        if let Some(witnesses) = witnesses {
            return Ok(BigFiber { y0: y, witnesses });
        }
    }
    Err(Error::Indeterminate(format!(
        "no fiber meets all three edges at resolution {}; retry with k = {}",
        grid.k,
        2 * grid.k
    )))
}

// ---------------------------------------------------------------------------
// Seeded harnesses

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct HarnessConfig {
    pub seed: u64,
    pub count: usize,
    /// Grid side of the source.
    pub resolution: usize,
    /// Vertices of the target path.
    pub levels: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct CaseOutcome {
    pub seed: u64,
    pub y0: Option<usize>,
    /// Restriction rank (torus) or number of faces met (simplex) at `y0`.
    pub value: usize,
    pub witnesses: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct HarnessReport {
    pub name: String,
    pub config: HarnessConfig,
    pub required: usize,
    pub cases: Vec<CaseOutcome>,
    pub failures: usize,
}

/// Pairs of vertex positions sharing a cell.
fn vertex_neighbors(cx: &CellComplex) -> Vec<Vec<usize>> {
    let verts = vertex_sets(cx);
    let mut nb: Vec<Vec<usize>> = vec![Vec::new(); cx.cells(0).len()];
    for c in cx.cells(cx.max_dim()) {
        for &a in &verts[*c] {
            nb[a].extend(verts[*c].iter().copied().filter(|&b| b != a));
        }
    }
    for l in &mut nb {
        l.sort_unstable();
        l.dedup();
    }
    nb
}

/// Random walk on vertex values in `0..levels` keeping values on every cell within one step.
pub fn perturb_lipschitz(nb: &[Vec<usize>], mut h: Vec<usize>, levels: usize, steps: usize, rng: &mut impl Rng) -> Vec<usize> {
    for _ in 0..steps {
        let v = rng.gen_range(0..h.len());
        let up = rng.gen_bool(0.5);
        let new = match (up, h[v]) {
            (true, x) if x + 1 < levels => x + 1,
            (false, x) if x > 0 => x - 1,
            _ => continue,
        };
        if nb[v].iter().all(|&u| new.abs_diff(h[u]) <= 1) {
            h[v] = new;
        }
    }
    h
}

/// Random perturbation of a folded projection `T² → path`.
pub fn random_torus_map(grid: &TorusGrid, target: &FiniteTarget, nb: &[Vec<usize>], seed: u64) -> Result<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = grid.m[0];
    let levels = target.vertex_count();
    let off = rng.gen_range(0..m);
    let lift = rng.gen_range(0..levels.saturating_sub(m / 2).max(1));
    let constant = rng.gen_bool(0.05);
    let base: Vec<usize> = grid
        .complex
        .cells(0)
        .iter()
        .map(|&v| {
            let x = (grid.cell(v).0[0] + m - off) % m;
            if constant { lift } else { (x.min(m - x) + lift).min(levels - 1) }
        })
        .collect();
    let steps = 6 * base.len();
    let h = perturb_lipschitz(nb, base, levels, steps, &mut rng);
    cellwise_map(&grid.complex, target, &h)
}

/// Random perturbation of a barycentric coordinate `Δ² → path`.
pub fn random_simplex_map(grid: &SimplexGrid, target: &FiniteTarget, nb: &[Vec<usize>], seed: u64) -> Result<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let levels = target.vertex_count();
    let s = rng.gen_range(0..3);
    let base: Vec<usize> = (0..grid.vertices.len()).map(|v| grid.barycentric(v)[s].min(levels - 1)).collect();
    let steps = 6 * base.len();
    let h = perturb_lipschitz(nb, base, levels, steps, &mut rng);
    cellwise_map(&grid.complex, target, &h)
}

/// Random cellwise maps `T²(r×r) → path`: each must have a target point whose
/// closed fiber receives `H*(T²)` with rank at least 2 over F₂.
pub fn gromov_torus_harness(cfg: HarnessConfig) -> Result<HarnessReport> {
    let grid = TorusGrid::cubic(2, cfg.resolution)?;
    let target = FiniteTarget::path(cfg.levels)?;
    let basis = grid.product_basis(&Fp(2));
    let nb = vertex_neighbors(&grid.complex);
    let required = 2;
    let cases = (0..cfg.count as u64)
        .into_par_iter()
        .map(|i| {
            let seed = cfg.seed.wrapping_add(i);
            let map = random_torus_map(&grid, &target, &nb, seed)?;
            let mut order: Vec<usize> = (0..target.complex.len()).collect();
            order.sort_by_key(|&y| std::cmp::Reverse(map.iter().filter(|&&t| t == y).count()));
            let mut best = CaseOutcome { seed, y0: None, value: 0, witnesses: Vec::new() };
            for y in order {
                let fib = fiber(&grid.complex, &target, &map, y);
                let rank: usize = grid.complex.restriction_rank(&Fp(2), &basis, &fib).iter().sum();
                if rank > best.value || best.y0.is_none() {
                    best = CaseOutcome { seed, y0: Some(y), value: rank, witnesses: Vec::new() };
                }
                if rank >= required {
                    break;
                }
            }
            Ok(best)
        })
        .collect::<Result<Vec<_>>>()?;
    let failures = cases.iter().filter(|c| c.value < required).count();
    Ok(HarnessReport { name: "gromov-torus".into(), config: cfg, required, cases, failures })
}

/// Random cellwise maps `Δ²(k) → path`: each must have a closed fiber meeting all three edges.
pub fn simplex_harness(cfg: HarnessConfig) -> Result<HarnessReport> {
    let grid = SimplexGrid::new(cfg.resolution)?;
    let target = FiniteTarget::path(cfg.levels)?;
    let nb = vertex_neighbors(&grid.complex);
    let cases = (0..cfg.count as u64)
        .into_par_iter()
        .map(|i| {
            let seed = cfg.seed.wrapping_add(i);
            let map = random_simplex_map(&grid, &target, &nb, seed)?;
            Ok(match simplex_big_fiber_check(&grid, &target, &map, 1) {
                Ok(b) => CaseOutcome { seed, y0: Some(b.y0), value: 3, witnesses: b.witnesses },
                Err(Error::Indeterminate(_)) => CaseOutcome { seed, y0: None, value: 0, witnesses: Vec::new() },
                Err(e) => return Err(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let failures = cases.iter().filter(|c| c.value < 3).count();
    Ok(HarnessReport { name: "simplex-centerpoint".into(), config: cfg, required: 3, cases, failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GroundField;
    use crate::graded_algebra::GradedAlgebra;
    use crate::ivm_engine::{CohomologyMeasure, Pushforward, TorusQuasi, TrivialMeasure};
    use proptest::prelude::*;

    const F2: GroundField = GroundField::F2;

    /// Intersection recomputed directly from the definition.
    fn naive_points<M: Measure<S = CellSet>>(nu: &M, lattice: &[CellSet], ideal: &GradedIdeal) -> Vec<usize> {
        let n = lattice[0].len();
        let mut out = Vec::new();
        for c in 0..n {
            let mut keep = true;
            for z in lattice {
                if !z[c] {
                    if let Ok(v) = nu.compact_value(z) {
                        if v.contains_ideal(ideal) {
                            keep = false;
                        }
                    }
                }
            }
            if keep {
                out.push(c);
            }
        }
        out
    }

    fn tent(grid: &TorusGrid, axis: usize, levels: usize) -> Vec<usize> {
        let m = grid.m[axis];
        grid.complex.cells(0).iter().map(|&v| (grid.cell(v).0[axis]).min(m - grid.cell(v).0[axis]).min(levels - 1)).collect()
    }

    #[test]
    fn target_models() {
        let p = FiniteTarget::path(4).unwrap();
        assert_eq!((p.complex.len(), p.d), (7, 1));
        let c = FiniteTarget::cycle(5).unwrap();
        assert_eq!((c.complex.len(), c.complex.euler()), (10, 0));
        let g = FiniteTarget::grid(2, 3).unwrap();
        assert_eq!((g.complex.euler(), g.d, g.complex.cells(2).len()), (1, 2, 6));
        assert!(FiniteTarget::cycle(2).is_err());
        assert_eq!(g.span(&[0, 4]), Some(g.complex.cells(2)[0]));
        assert_eq!(p.span(&[0, 2]), None);
    }

    #[test]
    fn subcomplex_count_of_short_path() {
        // Subcomplexes of a path on 3 vertices: 8 vertex sets, plus edges where allowed.
        let p = FiniteTarget::path(3).unwrap();
        assert_eq!(all_subcomplexes(&p.complex, 1000).unwrap().len(), 8 + 2 + 2 + 1);
        assert!(matches!(all_subcomplexes(&p.complex, 5), Err(Error::Budget(_))));
    }

    #[test]
    fn trivial_measure_centerpoints_are_everything() {
        let y = FiniteTarget::path(5).unwrap();
        let alg = Arc::new(GradedAlgebra::torus(F2, 1));
        let nu = TrivialMeasure::new(y.complex.clone(), alg.clone()).unwrap();
        let lattice = all_subcomplexes(&y.complex, 100_000).unwrap();
        let r = find_centerpoints(&nu, &y, &lattice, &GradedIdeal::whole(&alg)).unwrap();
        assert_eq!(r.points, (0..y.complex.len()).collect::<Vec<_>>());
        assert_eq!(r.qualifying, 1);
        assert!(r.protected && r.tag.is_none());
        assert_eq!(r.noetherian, Some(true));
        assert_eq!(r.points, naive_points(&nu, &lattice, &GradedIdeal::whole(&alg)));
    }

    #[test]
    fn circle_projection_centerpoints_are_the_circle() {
        let mu = CohomologyMeasure::new(TorusGrid::cubic(2, 4).unwrap(), F2);
        let y = FiniteTarget::cycle(4).unwrap();
        let values: Vec<usize> = mu.grid.complex.cells(0).iter().map(|&v| mu.grid.cell(v).0[0]).collect();
        let map = cellwise_map(&mu.grid.complex, &y, &values).unwrap();
        let nu = Pushforward::new(&mu, y.complex.clone(), map, false).unwrap();
        let lattice = all_subcomplexes(&y.complex, 100_000).unwrap();
        let whole = GradedIdeal::whole(&mu.alg);
        let r = find_centerpoints(&nu, &y, &lattice, &whole).unwrap();
        assert_eq!(r.points.len(), y.complex.len());
        assert_eq!(r.qualifying, 1);
        assert_eq!(r.points, naive_points(&nu, &lattice, &whole));
        assert_eq!(r.noetherian, Some(true));
    }

    #[test]
    fn top_class_on_a_segment_is_unprotected() {
        let tq = TorusQuasi::new(F2, 1, 8).unwrap();
        let y = FiniteTarget::path(5).unwrap();
        let values = tent(&tq.grid, 0, 5);
        let map = cellwise_map(&tq.grid.complex, &y, &values).unwrap();
        let nu = Pushforward::new(&tq, y.complex.clone(), map, true).unwrap();
        let top = GradedIdeal::from_generators(&tq.alg, &[tq.alg.top_elem().unwrap()]).unwrap();
        let lattice = all_subcomplexes(&y.complex, 100_000).unwrap();
        let r = find_centerpoints(&nu, &y, &lattice, &top).unwrap();
        assert!(!r.protected);
        assert_eq!(r.tag.as_deref(), Some("unprotected"));
        // The top class lies in the value of every nonempty compact, and two
        // disjoint points already qualify.
        assert!(r.points.is_empty());
        assert_eq!(r.qualifying, lattice.len() - 1);
        assert_eq!(r.points, naive_points(&nu, &lattice, &top));
        // The whole algebra is protected and centered on the middle of the segment.
        let whole = GradedIdeal::whole(&tq.alg);
        let r = find_centerpoints(&nu, &y, &lattice, &whole).unwrap();
        assert!(r.protected && !r.points.is_empty());
        assert_eq!(r.points, naive_points(&nu, &lattice, &whole));
        assert_eq!(r.noetherian, Some(true));
    }

    #[test]
    fn lattice_must_hold_subcomplexes() {
        let y = FiniteTarget::path(3).unwrap();
        let alg = Arc::new(GradedAlgebra::torus(F2, 1));
        let nu = TrivialMeasure::new(y.complex.clone(), alg.clone()).unwrap();
        let mut edge_only = y.complex.empty();
        edge_only[y.complex.cells(1)[0]] = true;
        let e = find_centerpoints(&nu, &y, &[edge_only], &GradedIdeal::whole(&alg));
        assert!(matches!(e, Err(Error::Schema(_))));
    }

    fn stars(y: &FiniteTarget, cells: &[usize]) -> CellSet {
        let mut s = y.complex.empty();
        for &c in cells {
            s[c] = true;
        }
        up_set(&y.complex, &s)
    }

    #[test]
    fn segment_halves_refine_into_two_colors() {
        let y = FiniteTarget::path(7).unwrap();
        let v = |i: usize| y.complex.cells(0)[i];
        let cover = vec![stars(&y, &(0..4).map(v).collect::<Vec<_>>()), stars(&y, &(3..7).map(v).collect::<Vec<_>>())];
        let r = refine_cover(&y, &cover).unwrap();
        r.verify(&cover).unwrap();
        assert_eq!(r.colors(), 2);
        assert!(r.pieces.len() <= 3);
    }

    #[test]
    fn cycle_arcs_refine_into_at_most_six_pieces() {
        let y = FiniteTarget::cycle(9).unwrap();
        let v = |i: usize| y.complex.cells(0)[i % 9];
        let arc = |a: usize| stars(&y, &(a..a + 4).map(v).collect::<Vec<_>>());
        let cover = vec![arc(0), arc(3), arc(6)];
        let r = refine_cover(&y, &cover).unwrap();
        r.verify(&cover).unwrap();
        assert!(r.colors() <= 2 && r.pieces.len() <= 6, "{} pieces", r.pieces.len());
        assert_eq!(r.pieces.len() % 2, 0);
    }

    #[test]
    fn odd_cycle_with_finest_cover() {
        let y = FiniteTarget::cycle(5).unwrap();
        let cover: Vec<CellSet> = (0..5).map(|i| y.open_star(y.complex.cells(0)[i])).collect();
        let r = refine_cover(&y, &cover).unwrap();
        r.verify(&cover).unwrap();
    }

    #[test]
    fn grid_quadrants_refine_into_three_colors() {
        let y = FiniteTarget::grid(6, 6).unwrap();
        let quad = |x0: usize, y0: usize| {
            let cells: Vec<usize> = (0..y.vertex_count())
                .filter(|&i| {
                    let (x, yy) = (i % 7, i / 7);
                    (x0..x0 + 4).contains(&x) && (y0..y0 + 4).contains(&yy)
                })
                .map(|i| y.complex.cells(0)[i])
                .collect();
            stars(&y, &cells)
        };
        let cover = vec![quad(0, 0), quad(3, 0), quad(0, 3), quad(3, 3)];
        let r = refine_cover(&y, &cover).unwrap();
        r.verify(&cover).unwrap();
        assert_eq!(r.colors(), 3);
    }

    #[test]
    fn refinement_rejects_bad_covers() {
        let y = FiniteTarget::path(4).unwrap();
        let v0 = y.complex.cells(0)[0];
        let half = stars(&y, &[v0]);
        assert!(matches!(refine_cover(&y, std::slice::from_ref(&half)), Err(Error::Schema(_))));
        let mut not_open = y.complex.full();
        not_open[y.complex.cells(1)[0]] = false;
        assert!(matches!(refine_cover(&y, &[not_open]), Err(Error::Schema(_))));
    }

    #[test]
    fn non_adjacent_values_are_not_cellwise() {
        let grid = TorusGrid::cubic(1, 4).unwrap();
        let y = FiniteTarget::path(4).unwrap();
        assert!(cellwise_map(&grid.complex, &y, &[0, 1, 2, 3]).is_err());
        assert!(cellwise_map(&grid.complex, &y, &[0, 1, 2, 1]).is_ok());
    }

    #[test]
    fn constant_map_attains_the_full_codimension() {
        let mu = CohomologyMeasure::new(TorusGrid::cubic(2, 4).unwrap(), F2);
        let y = FiniteTarget::path(3).unwrap();
        let map = cellwise_map(&mu.grid.complex, &y, &[1; 16]).unwrap();
        let nu = Pushforward::new(&mu, y.complex.clone(), map, false).unwrap();
        let r = gromov_centerpoint(&nu, &y, 2).unwrap();
        assert_eq!(r.codim, 4);
        assert_eq!(r.y0, y.complex.cells(0)[1]);
        assert!(matches!(gromov_centerpoint(&nu, &y, 5), Err(Error::Assertion(_))));
    }

    #[test]
    fn folded_projection_has_a_rank_two_point() {
        let mu = CohomologyMeasure::new(TorusGrid::cubic(2, 16).unwrap(), F2);
        let y = FiniteTarget::path(10).unwrap();
        let map = cellwise_map(&mu.grid.complex, &y, &tent(&mu.grid, 0, 10)).unwrap();
        let nu = Pushforward::new(&mu, y.complex.clone(), map.clone(), false).unwrap();
        let r = gromov_centerpoint(&nu, &y, 2).unwrap();
        assert!(r.codim >= 2);
        // The closed fiber over the winner receives at least as much cohomology.
        let basis = mu.grid.product_basis(&Fp(2));
        let fib = fiber(&mu.grid.complex, &y, &map, r.y0);
        let rank: usize = mu.grid.complex.restriction_rank(&Fp(2), &basis, &fib).iter().sum();
        assert!(rank >= r.codim);
    }

    #[test]
    fn barycentric_coordinate_level_set_meets_all_edges() {
        let grid = SimplexGrid::new(6).unwrap();
        let y = FiniteTarget::path(7).unwrap();
        let values: Vec<usize> = (0..grid.vertices.len()).map(|v| grid.barycentric(v)[1]).collect();
        let map = cellwise_map(&grid.complex, &y, &values).unwrap();
        let b = simplex_big_fiber_check(&grid, &y, &map, 1).unwrap();
        assert_eq!(b.witnesses.len(), 3);
        // Only fibers at or next to the level x₁ = 0 touch the side opposite corner 1.
        assert!(b.y0 == y.complex.cells(0)[0] || Some(b.y0) == y.span(&[0, 1]));
        let constant = cellwise_map(&grid.complex, &y, &vec![3; grid.vertices.len()]).unwrap();
        assert!(simplex_big_fiber_check(&grid, &y, &constant, 1).is_ok());
        assert!(matches!(simplex_big_fiber_check(&grid, &y, &map, 2), Err(Error::Unsupported(_))));
    }

    #[test]
    fn small_harnesses_pass() {
        let cfg = HarnessConfig { seed: 7, count: 4, resolution: 8, levels: 6 };
        let r = gromov_torus_harness(cfg).unwrap();
        assert_eq!((r.cases.len(), r.failures), (4, 0));
        let r = simplex_harness(HarnessConfig { resolution: 6, count: 10, ..cfg }).unwrap();
        assert_eq!((r.cases.len(), r.failures), (10, 0));
        assert!(r.cases.iter().all(|c| c.witnesses.len() == 3));
    }

    #[test]
    fn harness_is_deterministic() {
        let cfg = HarnessConfig { seed: 3, count: 3, resolution: 6, levels: 5 };
        let a = simplex_harness(cfg).unwrap();
        let b = simplex_harness(cfg).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    fn arb_target() -> impl Strategy<Value = FiniteTarget> {
        prop_oneof![
            (1usize..9).prop_map(|n| FiniteTarget::path(n).unwrap()),
            (3usize..9).prop_map(|n| FiniteTarget::cycle(n).unwrap()),
            (1usize..4, 1usize..4).prop_map(|(w, h)| FiniteTarget::grid(w, h).unwrap()),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn refinements_verify(y in arb_target(), picks in prop::collection::vec(prop::collection::vec(any::<bool>(), 40), 1..5)) {
            let n = y.complex.len();
            let mut cover: Vec<CellSet> = picks.iter().map(|p| up_set(&y.complex, &(0..n).map(|c| p[c % 40]).collect())).collect();
            for c in 0..n {
                if !cover.iter().any(|u| u[c]) {
                    let k = c % cover.len();
                    let s = y.open_star(c);
                    for t in 0..n { cover[k][t] |= s[t]; }
                }
            }
            let r = refine_cover(&y, &cover).unwrap();
            prop_assert!(r.verify(&cover).is_ok());
        }

        #[test]
        fn lipschitz_perturbations_stay_cellwise(seed in any::<u64>()) {
            let grid = SimplexGrid::new(5).unwrap();
            let y = FiniteTarget::path(6).unwrap();
            let nb = vertex_neighbors(&grid.complex);
            prop_assert!(random_simplex_map(&grid, &y, &nb, seed).is_ok());
        }

        #[test]
        fn centerpoints_match_definition(mask in prop::collection::vec(any::<bool>(), 9)) {
            // A cohomology pushforward onto a 5-cycle with a random lattice.
            let mu = CohomologyMeasure::new(TorusGrid::cubic(2, 5).unwrap(), F2);
            let y = FiniteTarget::cycle(5).unwrap();
            let values: Vec<usize> = mu.grid.complex.cells(0).iter().map(|&v| mu.grid.cell(v).0[0]).collect();
            let map = cellwise_map(&mu.grid.complex, &y, &values).unwrap();
            let nu = Pushforward::new(&mu, y.complex.clone(), map, false).unwrap();
            let all = all_subcomplexes(&y.complex, 10_000).unwrap();
            let mut lattice: Vec<CellSet> = all.iter().enumerate().filter(|(i, _)| mask[i % 9]).map(|(_, z)| z.clone()).collect();
            lattice.push(y.complex.full());
            let e1 = GradedIdeal::from_generators(&mu.alg, &[mu.alg.basis(mu.alg.index_of("e1").unwrap())]).unwrap();
            let r = find_centerpoints(&nu, &y, &lattice, &e1);
            if let Ok(r) = r {
                prop_assert_eq!(r.points, naive_points(&nu, &lattice, &e1));
            }
        }
    }
}
