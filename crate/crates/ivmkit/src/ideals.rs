//! Graded ideals of a [`GradedAlgebra`], their lattice operations, kernels of graded
//! maps, the filtration `A^{/r}` and d-ranks.

use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, Fp};
use crate::graded_algebra::{AlgebraMorphism, Elem, GradedAlgebra};
use crate::linalg::{self, Echelon};
use crate::novikov::{Lam, Nov};

/// A graded ideal stored as a reduced row echelon basis per degree, in the
/// coordinates of that degree's component (basis order).
#[derive(Clone)]
pub struct GradedIdeal {
    alg: Arc<GradedAlgebra>,
    comps: BTreeMap<i64, Vec<Vec<Lam>>>,
}

impl PartialEq for GradedIdeal {
    fn eq(&self, o: &Self) -> bool {
        self.comps == o.comps && (Arc::ptr_eq(&self.alg, &o.alg) || *self.alg == *o.alg)
    }
}

impl Eq for GradedIdeal {}

impl Hash for GradedIdeal {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.comps.hash(state);
    }
}

impl fmt::Debug for GradedIdeal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GradedIdeal{{")?;
        let basis: Vec<String> = self.basis().iter().map(|v| self.alg.fmt_elem(v)).collect();
        write!(f, "{}}}", basis.join(", "))
    }
}

impl GradedIdeal {
    pub fn zero(alg: &Arc<GradedAlgebra>) -> Self {
        GradedIdeal { alg: alg.clone(), comps: BTreeMap::new() }
    }

    pub fn whole(alg: &Arc<GradedAlgebra>) -> Self {
        let nov = alg.nov();
        let comps = alg
            .components()
            .iter()
            .map(|(d, idx)| (*d, linalg::identity(&nov, idx.len())))
            .collect();
        GradedIdeal { alg: alg.clone(), comps }
    }

    pub fn algebra(&self) -> &Arc<GradedAlgebra> {
        &self.alg
    }

    fn same_parent(&self, o: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.alg, &o.alg) || *self.alg == *o.alg {
            Ok(())
        } else {
            Err(Error::Schema("ideals live in different algebras".into()))
        }
    }

    /// Splits a full-coordinate vector into per-degree component vectors.
    fn split(alg: &GradedAlgebra, x: &[Lam]) -> BTreeMap<i64, Vec<Lam>> {
        alg.components()
            .iter()
            .filter_map(|(d, idx)| {
                let v: Vec<Lam> = idx.iter().map(|&i| x[i].clone()).collect();
                (!v.iter().all(|c| c.is_zero())).then_some((*d, v))
            })
            .collect()
    }

    fn embed(alg: &GradedAlgebra, d: i64, v: &[Lam]) -> Elem {
        let mut out = alg.zero();
        for (k, &i) in alg.component(d).iter().enumerate() {
            out[i] = v[k].clone();
        }
        out
    }

    /// Canonicalizes per-degree rows; the result is not checked for closure.
    fn from_comps_unchecked(alg: &Arc<GradedAlgebra>, comps: BTreeMap<i64, Vec<Vec<Lam>>>) -> Self {
        let nov = alg.nov();
        let comps = comps
            .into_iter()
            .filter_map(|(d, rows)| {
                let rows = if rows.is_empty() { rows } else { linalg::rref(&nov, rows).0 };
                (!rows.is_empty()).then_some((d, rows))
            })
            .collect();
        GradedIdeal { alg: alg.clone(), comps }
    }

    /// Builds from per-degree spanning rows and verifies closure under multiplication.
    pub fn from_component_rows(alg: &Arc<GradedAlgebra>, comps: BTreeMap<i64, Vec<Vec<Lam>>>) -> Result<Self> {
        for (d, rows) in &comps {
            let n = alg.component(*d).len();
            if rows.iter().any(|r| r.len() != n) {
                return Err(Error::Schema(format!("rows of degree {d} have the wrong length")));
            }
        }
        let ideal = GradedIdeal::from_comps_unchecked(alg, comps);
        if !ideal.is_closed() {
            return Err(Error::Invariant("subspace is not closed under multiplication".into()));
        }
        Ok(ideal)
    }

    /// Smallest graded ideal containing homogeneous `gens`.
    pub fn from_generators(alg: &Arc<GradedAlgebra>, gens: &[Elem]) -> Result<Self> {
        let nov = alg.nov();
        let mut ech: BTreeMap<i64, Echelon<Lam>> = BTreeMap::new();
        let mut work: Vec<Elem> = Vec::new();
        for g in gens {
            if g.len() != alg.dim() {
                return Err(Error::Schema("generator has the wrong length".into()));
            }
            if alg.degree_of(g)?.is_some() {
                work.push(g.clone());
            }
        }
        let mut queue = Vec::new();
        for g in work {
            if GradedIdeal::insert(alg, &nov, &mut ech, &g) {
                queue.push(g);
            }
        }
        let gens_idx = alg.generators().to_vec();
        while let Some(v) = queue.pop() {
            for &g in &gens_idx {
                let w = alg.mul(&v, &alg.basis(g));
                if GradedIdeal::insert(alg, &nov, &mut ech, &w) {
                    queue.push(w);
                }
            }
        }
        let comps = ech.into_iter().map(|(d, e)| (d, e.into_rows())).collect();
        Ok(GradedIdeal::from_comps_unchecked(alg, comps))
    }

    fn insert(alg: &GradedAlgebra, nov: &Nov, ech: &mut BTreeMap<i64, Echelon<Lam>>, x: &[Lam]) -> bool {
        let mut grew = false;
        for (d, v) in GradedIdeal::split(alg, x) {
            let n = alg.component(d).len();
            grew |= ech.entry(d).or_insert_with(|| Echelon::new(n)).insert(nov, v);
        }
        grew
    }

    pub fn dim(&self) -> usize {
        self.comps.values().map(|r| r.len()).sum()
    }

    pub fn codim(&self) -> usize {
        self.alg.dim() - self.dim()
    }

    pub fn is_zero(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn is_whole(&self) -> bool {
        self.dim() == self.alg.dim()
    }

    /// Per-degree canonical rows.
    pub fn components(&self) -> &BTreeMap<i64, Vec<Vec<Lam>>> {
        &self.comps
    }

    /// Basis in full coordinates, ordered by degree.
    pub fn basis(&self) -> Vec<Elem> {
        self.comps
            .iter()
            .flat_map(|(d, rows)| rows.iter().map(move |r| GradedIdeal::embed(&self.alg, *d, r)))
            .collect()
    }

    pub fn contains(&self, x: &[Lam]) -> bool {
        let nov = self.alg.nov();
        GradedIdeal::split(&self.alg, x).into_iter().all(|(d, v)| match self.comps.get(&d) {
            None => false,
            Some(rows) => Echelon::from_rows(&nov, v.len(), rows).contains(&nov, &v),
        })
    }

    pub fn contains_ideal(&self, o: &GradedIdeal) -> bool {
        o.basis().iter().all(|v| self.contains(v))
    }

    /// Closure under multiplication by every basis element.
    pub fn is_closed(&self) -> bool {
        let basis = self.basis();
        (0..self.alg.dim()).all(|i| {
            let e = self.alg.basis(i);
            basis.iter().all(|v| self.contains(&self.alg.mul(v, &e)))
        })
    }

    pub fn sum(&self, o: &GradedIdeal) -> Result<GradedIdeal> {
        self.same_parent(o)?;
        let mut comps = self.comps.clone();
        for (d, rows) in &o.comps {
            comps.entry(*d).or_default().extend(rows.iter().cloned());
        }
        Ok(GradedIdeal::from_comps_unchecked(&self.alg, comps))
    }

    pub fn intersect(&self, o: &GradedIdeal) -> Result<GradedIdeal> {
        self.same_parent(o)?;
        let nov = self.alg.nov();
        let mut comps = BTreeMap::new();
        for (d, a) in &self.comps {
            if let Some(b) = o.comps.get(d) {
                comps.insert(*d, linalg::intersect(&nov, a, b, self.alg.component(*d).len()));
            }
        }
        Ok(GradedIdeal::from_comps_unchecked(&self.alg, comps))
    }

    /// `I * J`: span of products of basis elements.
    pub fn product(&self, o: &GradedIdeal) -> Result<GradedIdeal> {
        self.same_parent(o)?;
        let nov = self.alg.nov();
        let mut ech: BTreeMap<i64, Echelon<Lam>> = BTreeMap::new();
        let (a, b) = (self.basis(), o.basis());
        for x in &a {
            for y in &b {
                GradedIdeal::insert(&self.alg, &nov, &mut ech, &self.alg.mul(x, y));
            }
        }
        let comps = ech.into_iter().map(|(d, e)| (d, e.into_rows())).collect();
        Ok(GradedIdeal::from_comps_unchecked(&self.alg, comps))
    }

    /// `I^{*d}`, with `I^{*0} = A`.
    pub fn power(&self, d: usize) -> GradedIdeal {
        let mut acc = GradedIdeal::whole(&self.alg);
        for _ in 0..d {
            acc = acc.product(self).expect("same parent");
        }
        acc
    }

    /// Kernel of a morphism; closure is verified.
    pub fn kernel_of_morphism(m: &AlgebraMorphism) -> Result<GradedIdeal> {
        let alg = &m.source;
        let nov = alg.nov();
        let mut comps = BTreeMap::new();
        for (d, idx) in alg.components() {
            let images: Vec<Vec<Lam>> = idx.iter().map(|&j| m.image(&alg.basis(j))).collect();
            comps.insert(*d, linalg::left_kernel(&nov, &images, m.target.dim()));
        }
        GradedIdeal::from_component_rows(alg, comps)
    }

    /// Kernel of a degree-preserving linear map given per degree as the images
    /// of the component basis (one row per basis element, any target width).
    pub fn kernel_of_linear(alg: &Arc<GradedAlgebra>, blocks: &BTreeMap<i64, Vec<Vec<Lam>>>) -> Result<GradedIdeal> {
        let nov = alg.nov();
        let mut comps = BTreeMap::new();
        for (d, idx) in alg.components() {
            let rows = match blocks.get(d) {
                Some(r) => r,
                None => {
                    comps.insert(*d, linalg::identity(&nov, idx.len()));
                    continue;
                }
            };
            if rows.len() != idx.len() {
                return Err(Error::Schema(format!("block of degree {d} has the wrong height")));
            }
            let width = rows.first().map_or(0, |r| r.len());
            comps.insert(*d, linalg::left_kernel(&nov, rows, width));
        }
        GradedIdeal::from_component_rows(alg, comps)
    }

    pub fn to_doc(&self) -> IdealDoc {
        IdealDoc {
            components: self
                .comps
                .iter()
                .map(|(d, rows)| ComponentDoc {
                    degree: *d,
                    rows: rows.iter().map(|r| r.iter().map(|c| c.to_string()).collect()).collect(),
                })
                .collect(),
        }
    }

    pub fn from_doc(alg: &Arc<GradedAlgebra>, doc: &IdealDoc) -> Result<GradedIdeal> {
        let mut comps = BTreeMap::new();
        for c in &doc.components {
            let mut rows = Vec::new();
            for r in &c.rows {
                rows.push(r.iter().map(|s| Lam::parse(alg.field, s)).collect::<Result<Vec<_>>>()?);
            }
            comps.insert(alg.reduce(c.degree), rows);
        }
        GradedIdeal::from_component_rows(alg, comps)
    }
}

/// Serialized ideal: per-degree matrices of scalar strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdealDoc {
    pub components: Vec<ComponentDoc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentDoc {
    pub degree: i64,
    pub rows: Vec<Vec<String>>,
}

/// Outcome of a budgeted enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnumStatus {
    Exact,
    /// Budget ran out; the reported ideal is a superset of the true value.
    Unknown,
}

#[derive(Clone, Debug)]
pub struct SlashReport {
    pub ideal: GradedIdeal,
    pub status: EnumStatus,
    /// Candidate component subspaces examined.
    pub budget_used: u64,
    /// Graded ideals of codimension `< r` found.
    pub ideals_found: u64,
}

/// Structure constants over the prime field, for algebras with constant coefficients.
struct FiniteModel {
    p: u64,
    comps: Vec<Vec<usize>>,
    /// For each generator and component: the matrix of left multiplication
    /// `A_d → A_{d+|g|}` as `(target component, rows = source basis)`.
    mult: Vec<Vec<Option<(usize, Vec<Vec<u64>>)>>>,
}

impl FiniteModel {
    fn new(alg: &GradedAlgebra) -> Result<FiniteModel> {
        let p = alg.field.characteristic();
        if p == 0 {
            return Err(Error::Unsupported("ideal enumeration needs a finite ground field".into()));
        }
        let comps: Vec<Vec<usize>> = alg.components().values().cloned().collect();
        let degs: Vec<i64> = alg.components().keys().copied().collect();
        let mut pos = vec![0; alg.dim()];
        for idx in &comps {
            for (k, &i) in idx.iter().enumerate() {
                pos[i] = k;
            }
        }
        let mut mult = Vec::new();
        for &g in alg.generators() {
            let mut per = Vec::new();
            for (c, idx) in comps.iter().enumerate() {
                let target_deg = alg.reduce(degs[c] + alg.degrees[g]);
                let Some(tc) = degs.iter().position(|&d| d == target_deg) else {
                    per.push(None);
                    continue;
                };
                let mut rows = Vec::new();
                for &i in idx {
                    let mut row = vec![0u64; comps[tc].len()];
                    for (k, coef) in alg.basis_product_sparse(g, i) {
                        let c0 = coef.as_constant().ok_or_else(|| {
                            Error::Unsupported("ideal enumeration needs constant structure constants".into())
                        })?;
                        row[pos[*k]] = alg.field.to_word(&c0);
                    }
                    rows.push(row);
                }
                per.push(Some((tc, rows)));
            }
            mult.push(per);
        }
        Ok(FiniteModel { p, comps, mult })
    }
}

/// Iterates all `c × n` reduced row echelon matrices over `F_p`.
fn rref_matrices(p: u64, c: usize, n: usize, mut visit: impl FnMut(&[Vec<u64>]) -> bool) -> bool {
    if c > n {
        return true;
    }
    let mut pivots: Vec<usize> = (0..c).collect();
    loop {
        let free: Vec<(usize, usize)> = (0..c)
            .flat_map(|r| {
                let piv = pivots.clone();
                ((pivots[r] + 1)..n).filter(move |j| !piv.contains(j)).map(move |j| (r, j))
            })
            .collect();
        let mut digits = vec![0u64; free.len()];
        loop {
            let mut m = vec![vec![0u64; n]; c];
            for (r, &pc) in pivots.iter().enumerate() {
                m[r][pc] = 1;
            }
            for (k, &(r, j)) in free.iter().enumerate() {
                m[r][j] = digits[k];
            }
            if !visit(&m) {
                return false;
            }
            let mut k = 0;
            while k < digits.len() {
                digits[k] += 1;
                if digits[k] < p {
                    break;
                }
                digits[k] = 0;
                k += 1;
            }
            if k == digits.len() {
                break;
            }
        }
        // next combination of pivot columns
        let mut i = c;
        loop {
            if i == 0 {
                return true;
            }
            i -= 1;
            if pivots[i] < n - c + i {
                pivots[i] += 1;
                for k in i + 1..c {
                    pivots[k] = pivots[k - 1] + 1;
                }
                break;
            }
        }
    }
}

/// A graded ideal found by enumeration: per component, an annihilator (rows of
/// functionals) and a kernel basis.
#[derive(Clone, Debug)]
pub struct FoundIdeal {
    pub annihilators: Vec<Vec<Vec<u64>>>,
    pub kernels: Vec<Vec<Vec<u64>>>,
}

impl FoundIdeal {
    pub fn codim(&self) -> usize {
        self.annihilators.iter().map(|a| a.len()).sum()
    }

    pub fn to_ideal(&self, alg: &Arc<GradedAlgebra>) -> GradedIdeal {
        let comps = alg
            .components()
            .keys()
            .zip(&self.kernels)
            .map(|(d, k)| (*d, k.iter().map(|r| r.iter().map(|&x| Lam::from_i64(alg.field, x as i64)).collect()).collect()))
            .collect();
        GradedIdeal::from_comps_unchecked(alg, comps)
    }
}

/// Enumerates every graded ideal of codimension `<= max_codim` by choosing, per
/// degree, an annihilator in reduced row echelon form and checking closure as
/// soon as both ends of a multiplication constraint are fixed.
///
/// Returns `Ok(false)` when the budget ran out or the visitor stopped early.
pub fn enumerate_graded_ideals(
    alg: &GradedAlgebra,
    max_codim: usize,
    budget: u64,
    used: &mut u64,
    visit: &mut dyn FnMut(&FoundIdeal) -> bool,
) -> Result<bool> {
    let model = FiniteModel::new(alg)?;
    let nc = model.comps.len();
    let mut state = FoundIdeal { annihilators: vec![Vec::new(); nc], kernels: vec![Vec::new(); nc] };
    fn ok_pair(model: &FiniteModel, f: &Fp, src: usize, dst: usize, st: &FoundIdeal) -> bool {
        // every generator maps I_src into I_dst: ann_dst · (L_g k) = 0 for k in ker_src
        for per in &model.mult {
            let Some((tc, rows)) = &per[src] else { continue };
            if *tc != dst {
                continue;
            }
            for k in &st.kernels[src] {
                let mut img = vec![0u64; model.comps[dst].len()];
                for (i, &x) in k.iter().enumerate() {
                    if x != 0 {
                        linalg::axpy(f, &mut img, &x, &rows[i]);
                    }
                }
                for a in &st.annihilators[dst] {
                    let dot = a.iter().zip(&img).fold(0u64, |s, (u, v)| f.add(&s, &f.mul(u, v)));
                    if dot != 0 {
                        return false;
                    }
                }
            }
        }
        true
    }
    fn rec(
        model: &FiniteModel,
        f: &Fp,
        c: usize,
        left: usize,
        budget: u64,
        used: &mut u64,
        st: &mut FoundIdeal,
        visit: &mut dyn FnMut(&FoundIdeal) -> bool,
    ) -> bool {
        if c == model.comps.len() {
            return visit(st);
        }
        let n = model.comps[c].len();
        for codim in 0..=left.min(n) {
            let cont = rref_matrices(model.p, codim, n, |m| {
                *used += 1;
                if *used > budget {
                    return false;
                }
                st.annihilators[c] = m.to_vec();
                st.kernels[c] = if codim == 0 {
                    linalg::identity(f, n)
                } else {
                    linalg::kernel(f, m.to_vec(), n)
                };
                let consistent = (0..=c).all(|o| ok_pair(model, f, o, c, st) && ok_pair(model, f, c, o, st));
                if !consistent {
                    return true;
                }
                rec(model, f, c + 1, left - codim, budget, used, st, visit)
            });
            if !cont {
                return false;
            }
        }
        st.annihilators[c].clear();
        st.kernels[c].clear();
        true
    }
    let f = Fp(model.p);
    Ok(rec(&model, &f, 0, max_codim, budget, used, &mut state, visit))
}

/// `A^{/r}`: intersection of all graded ideals of codimension `< r`.
pub fn a_slash_r(alg: &Arc<GradedAlgebra>, r: usize, budget: u64) -> Result<SlashReport> {
    if r == 0 {
        return Err(Error::Schema("r must be at least 1".into()));
    }
    let model_p = alg.field.characteristic();
    if r == 1 {
        return Ok(SlashReport { ideal: GradedIdeal::whole(alg), status: EnumStatus::Exact, budget_used: 0, ideals_found: 1 });
    }
    let f = Fp(model_p.max(2));
    let mut ann: Vec<Echelon<u64>> = alg.components().values().map(|idx| Echelon::new(idx.len())).collect();
    let mut used = 0u64;
    let mut found = 0u64;
    let complete = enumerate_graded_ideals(alg, r - 1, budget, &mut used, &mut |fi| {
        found += 1;
        for (c, rows) in fi.annihilators.iter().enumerate() {
            for row in rows {
                ann[c].insert(&f, row.clone());
            }
        }
        true
    })?;
    let comps = alg
        .components()
        .iter()
        .zip(&ann)
        .map(|((d, idx), e)| {
            let rows = if e.rank() == 0 {
                linalg::identity(&f, idx.len())
            } else {
                linalg::kernel(&f, e.rows().to_vec(), idx.len())
            };
            let lam = rows.iter().map(|r| r.iter().map(|&x| Lam::from_i64(alg.field, x as i64)).collect()).collect();
            (*d, lam)
        })
        .collect();
    let ideal = GradedIdeal::from_comps_unchecked(alg, comps);
    let status = if complete { EnumStatus::Exact } else { EnumStatus::Unknown };
    Ok(SlashReport { ideal, status, budget_used: used, ideals_found: found })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RankMode {
    Exact,
    LowerBound,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankReport {
    pub d: usize,
    pub value: usize,
    /// `Exact` only when every needed `A^{/r}` was enumerated in full.
    pub mode: RankMode,
    pub budget_used: u64,
    pub note: String,
}

/// `rk_d A = max{r : (A^{/r})^{*d} ≠ 0}`.
///
/// Exact mode stops at the first `r` with vanishing power. Running out of budget
/// downgrades to a lower bound, combined with `certified` (e.g. from
/// [`kunneth_rank_witness`]).
pub fn d_rank(alg: &Arc<GradedAlgebra>, d: usize, mode: RankMode, budget: u64, certified: Option<usize>) -> Result<RankReport> {
    if d == 0 {
        return Err(Error::Schema("d must be positive".into()));
    }
    let floor = certified.unwrap_or(1).max(1);
    if mode == RankMode::LowerBound && certified.is_some() {
        return Ok(RankReport { d, value: floor, mode, budget_used: 0, note: "certified witness bound".into() });
    }
    let mut used = 0u64;
    let mut best = 1usize;
    for r in 2..=alg.dim() + 1 {
        let remaining = budget.saturating_sub(used);
        let rep = a_slash_r(alg, r, remaining)?;
        used += rep.budget_used;
        if rep.status == EnumStatus::Unknown {
            return Ok(RankReport {
                d,
                value: best.max(floor),
                mode: RankMode::LowerBound,
                budget_used: used,
                note: format!("budget exhausted while enumerating codim < {r}"),
            });
        }
        if rep.ideal.power(d).is_zero() {
            return Ok(RankReport { d, value: r - 1, mode: RankMode::Exact, budget_used: used, note: "full enumeration".into() });
        }
        best = r;
    }
    Ok(RankReport { d, value: best, mode: RankMode::Exact, budget_used: used, note: "full enumeration".into() })
}

/// Whether the pairing into the top coefficient is perfect in every degree,
/// which forces every nonzero graded ideal to contain the top class.
pub fn has_perfect_top_pairing(alg: &GradedAlgebra) -> bool {
    let Some(top) = alg.top else { return false };
    if alg.component(alg.degrees[top]).len() != 1 {
        return false;
    }
    let nov = alg.nov();
    alg.components().iter().all(|(d, idx)| {
        let dual = alg.component(alg.reduce(alg.degrees[top] - d));
        let rows: Vec<Vec<Lam>> = idx
            .iter()
            .map(|&i| dual.iter().map(|&j| alg.basis_product(i, j)[top].clone()).collect())
            .collect();
        linalg::left_kernel(&nov, &rows, dual.len()).is_empty()
    })
}

/// Exhaustive check that every nonzero graded ideal contains the top class.
pub fn every_ideal_contains_top(alg: &Arc<GradedAlgebra>, budget: u64) -> Result<bool> {
    let top = alg.top_elem().ok_or_else(|| Error::Schema("algebra has no top class".into()))?;
    let mut used = 0;
    let mut ok = true;
    let complete = enumerate_graded_ideals(alg, alg.dim(), budget, &mut used, &mut |fi| {
        if fi.codim() < alg.dim() && !fi.to_ideal(alg).contains(&top) {
            ok = false;
            return false;
        }
        true
    })?;
    if ok && !complete {
        return Err(Error::Budget("ideal enumeration exceeded its budget".into()));
    }
    Ok(ok)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WitnessMode {
    /// Rely on perfect top pairings of the factors.
    Certificate,
    /// Additionally enumerate `A^{/m}` of the product and test membership.
    SpotCheck,
}

#[derive(Clone, Debug)]
pub struct KunnethWitness {
    pub algebra: Arc<GradedAlgebra>,
    /// `1⊗…⊗[X_i]⊗…⊗1`
    pub witnesses: Vec<Elem>,
    pub product: Elem,
    /// Certified `rk_d ≥ m` with `d` the number of factors.
    pub d: usize,
    pub m: usize,
}

/// Künneth witnesses for `rk_d(⊗ A_i) ≥ m`, `d` = number of factors.
pub fn kunneth_rank_witness(factors: &[GradedAlgebra], m: usize, mode: WitnessMode, budget: u64) -> Result<KunnethWitness> {
    if factors.is_empty() {
        return Err(Error::Schema("need at least one factor".into()));
    }
    for (i, f) in factors.iter().enumerate() {
        if f.dim() < m {
            return Err(Error::Invariant(format!("factor {i} has dimension {} < {m}", f.dim())));
        }
        if !has_perfect_top_pairing(f) {
            return Err(Error::Invariant(format!("factor {i} fails the top-class pairing check")));
        }
        if f.field.is_finite() && f.dim() <= 8 {
            let arc = Arc::new(f.clone());
            if !every_ideal_contains_top(&arc, budget)? {
                return Err(Error::Invariant(format!("factor {i} has a nonzero graded ideal without the top class")));
            }
        }
    }
    let mut alg = factors[0].clone();
    for f in &factors[1..] {
        alg = alg.tensor(f)?;
    }
    let alg = Arc::new(alg);
    let dims: Vec<usize> = factors.iter().map(|f| f.dim()).collect();
    let units: Vec<usize> = factors.iter().map(|f| f.unit).collect();
    let witnesses: Vec<Elem> = factors
        .iter()
        .enumerate()
        .map(|(k, f)| alg.basis(GradedAlgebra::factor_index(&dims, &units, k, f.top.expect("checked"))))
        .collect();
    let mut product = alg.one();
    for w in &witnesses {
        product = alg.mul(&product, w);
    }
    let top = alg.top_elem().expect("tensor of top classes");
    let nov = alg.nov();
    let rank1 = linalg::rank(&nov, vec![product.clone(), top]);
    if product.iter().all(|c| c.is_zero()) || rank1 != 1 {
        return Err(Error::Assertion("product of witnesses is not a nonzero multiple of the top class".into()));
    }
    if mode == WitnessMode::SpotCheck {
        let rep = a_slash_r(&alg, m, budget)?;
        if rep.status == EnumStatus::Exact && !witnesses.iter().all(|w| rep.ideal.contains(w)) {
            return Err(Error::Assertion("a witness is missing from A^{/m}".into()));
        }
    }
    Ok(KunnethWitness { algebra: alg, witnesses, product, d: factors.len(), m })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{int, GroundField};
    use proptest::prelude::*;

    const F2: GroundField = GroundField::F2;

    fn t2() -> Arc<GradedAlgebra> {
        Arc::new(GradedAlgebra::torus(F2, 2))
    }

    fn span(alg: &Arc<GradedAlgebra>, labels: &[&str]) -> GradedIdeal {
        let gens: Vec<Elem> = labels.iter().map(|l| alg.basis(alg.index_of(l).unwrap())).collect();
        let nov = alg.nov();
        let mut comps: BTreeMap<i64, Vec<Vec<Lam>>> = BTreeMap::new();
        for g in gens {
            for (d, v) in GradedIdeal::split(alg, &g) {
                comps.entry(d).or_default().push(v);
            }
        }
        let _ = nov;
        GradedIdeal::from_comps_unchecked(alg, comps)
    }

    #[test]
    fn generation_examples() {
        let a = t2();
        assert!(GradedIdeal::from_generators(&a, &[a.zero()]).unwrap().is_zero());
        let i = GradedIdeal::from_generators(&a, &[a.basis(1)]).unwrap();
        assert_eq!(i, span(&a, &["e1", "e1e2"]));
        let s = Arc::new(GradedAlgebra::qh_sphere(F2));
        assert!(GradedIdeal::from_generators(&s, &[s.basis(1)]).unwrap().is_whole());
    }

    #[test]
    fn non_homogeneous_generator_is_rejected() {
        let a = t2();
        let mut x = a.basis(0);
        x[1] = Lam::one(F2);
        assert!(GradedIdeal::from_generators(&a, &[x]).is_err());
    }

    #[test]
    fn lattice_examples() {
        let a = t2();
        let ia = GradedIdeal::from_generators(&a, &[a.basis(1)]).unwrap();
        let ib = GradedIdeal::from_generators(&a, &[a.basis(2)]).unwrap();
        assert_eq!(ia.product(&ib).unwrap(), span(&a, &["e1e2"]));
        assert_eq!(ia.intersect(&ib).unwrap(), span(&a, &["e1e2"]));
        assert_eq!(ia.sum(&GradedIdeal::zero(&a)).unwrap(), ia);
        assert_eq!(ia.intersect(&GradedIdeal::whole(&a)).unwrap(), ia);
    }

    #[test]
    fn kernel_examples() {
        let a = t2();
        let id = AlgebraMorphism::new(a.clone(), a.clone(), linalg::identity(&a.nov(), 4)).unwrap();
        assert!(GradedIdeal::kernel_of_morphism(&id).unwrap().is_zero());
        let aug = AlgebraMorphism::augmentation(a.clone()).unwrap();
        assert_eq!(GradedIdeal::kernel_of_morphism(&aug).unwrap(), span(&a, &["e1", "e2", "e1e2"]));
    }

    #[test]
    fn non_ideal_kernel_is_reported() {
        let a = t2();
        // kill only e1: not closed since e1 ↦ 0 but e1·e2 survives... the kernel span{e1} is not an ideal
        let mut blocks = BTreeMap::new();
        let nov = a.nov();
        blocks.insert(1, vec![vec![nov.zero()], vec![nov.one()]]);
        blocks.insert(0, vec![vec![nov.one()]]);
        blocks.insert(2, vec![vec![nov.one()]]);
        assert!(matches!(GradedIdeal::kernel_of_linear(&a, &blocks), Err(Error::Invariant(_))));
    }

    #[test]
    fn slash_filtration_examples() {
        let a = t2();
        assert!(a_slash_r(&a, 1, 1000).unwrap().ideal.is_whole());
        let r5 = a_slash_r(&a, 5, 100_000).unwrap();
        assert_eq!(r5.status, EnumStatus::Exact);
        assert!(r5.ideal.is_zero());
        assert_eq!(a_slash_r(&a, 2, 1000).unwrap().ideal, span(&a, &["e1", "e2", "e1e2"]));
        assert_eq!(a_slash_r(&a, 3, 1000).unwrap().ideal, span(&a, &["e1e2"]));
    }

    #[test]
    fn rank_of_two_torus() {
        let a = t2();
        let rep = d_rank(&a, 2, RankMode::Exact, 1_000_000, None).unwrap();
        assert_eq!((rep.value, rep.mode), (2, RankMode::Exact));
        let tiny = d_rank(&a, 2, RankMode::Exact, 3, None).unwrap();
        assert_eq!(tiny.mode, RankMode::LowerBound);
        assert!(tiny.value >= 1);
    }

    #[test]
    fn witness_examples() {
        let s1 = GradedAlgebra::torus(F2, 1);
        let w = kunneth_rank_witness(&[s1.clone(), s1.clone()], 2, WitnessMode::SpotCheck, 100_000).unwrap();
        let alg = &w.algebra;
        assert_eq!(alg.fmt_elem(&w.witnesses[0]), "e1⊗1");
        assert_eq!(alg.fmt_elem(&w.witnesses[1]), "1⊗e1");
        assert_eq!(alg.fmt_elem(&w.product), "e1⊗e1");
        let one = kunneth_rank_witness(&[s1], 1, WitnessMode::Certificate, 1000).unwrap();
        assert_eq!(one.d, 1);
        let t2 = GradedAlgebra::torus(F2, 2);
        let w4 = kunneth_rank_witness(&[t2.clone(), t2], 4, WitnessMode::Certificate, 100_000).unwrap();
        assert_eq!(Some(w4.product.clone()), w4.algebra.top_elem());
    }

    #[test]
    fn cpn_is_a_pd_model_but_not_a_witness_for_large_m() {
        let c = GradedAlgebra::cpn(F2, 2);
        assert!(has_perfect_top_pairing(&c));
        assert!(kunneth_rank_witness(&[c], 4, WitnessMode::Certificate, 1000).is_err());
    }

    #[test]
    fn torus_ideals_contain_the_top_class() {
        for n in 1..=3 {
            let a = Arc::new(GradedAlgebra::torus(F2, n));
            assert!(every_ideal_contains_top(&a, 10_000_000).unwrap(), "n = {n}");
        }
    }

    #[test]
    fn slash_filtration_is_decreasing() {
        let a = Arc::new(GradedAlgebra::torus(F2, 3));
        let mut prev = GradedIdeal::whole(&a);
        for r in 1..=9 {
            let cur = a_slash_r(&a, r, 10_000_000).unwrap();
            assert_eq!(cur.status, EnumStatus::Exact);
            assert!(prev.contains_ideal(&cur.ideal), "r = {r}");
            assert!(cur.ideal.is_closed());
            prev = cur.ideal;
        }
        assert!(prev.is_zero());
    }

    #[test]
    fn four_torus_square_survives_codim_three() {
        let a = Arc::new(GradedAlgebra::torus(F2, 4));
        let rep = a_slash_r(&a, 4, 50_000_000).unwrap();
        assert_eq!(rep.status, EnumStatus::Exact);
        assert!(!rep.ideal.power(2).is_zero());
    }

    #[test]
    fn doc_round_trip() {
        let a = Arc::new(GradedAlgebra::qh_sphere(GroundField::Q));
        let i = GradedIdeal::from_generators(&a, &[a.basis(0)]).unwrap();
        assert_eq!(GradedIdeal::from_doc(&a, &i.to_doc()).unwrap(), i);
        let _ = int(0);
    }

    #[test]
    fn enumeration_counts_subspaces() {
        // every subspace of the degree-1 part of H*(T^1) x trivial: ideals of Λ[e]/e² are 0, ⟨e⟩, A
        let a = Arc::new(GradedAlgebra::torus(F2, 1));
        let mut count = 0;
        let mut used = 0;
        enumerate_graded_ideals(&a, 2, 1000, &mut used, &mut |_| {
            count += 1;
            true
        })
        .unwrap();
        assert_eq!(count, 3);
    }

    fn arb_ideal(alg: Arc<GradedAlgebra>) -> impl Strategy<Value = GradedIdeal> {
        let n = alg.dim();
        prop::collection::vec(0..n, 0..3).prop_map(move |idx| {
            let gens: Vec<Elem> = idx.iter().map(|&i| alg.basis(i)).collect();
            GradedIdeal::from_generators(&alg, &gens).unwrap()
        })
    }

    proptest! {
        #[test]
        fn lattice_laws(
            (i, j, k) in {
                let a = Arc::new(GradedAlgebra::torus(F2, 3));
                (arb_ideal(a.clone()), arb_ideal(a.clone()), arb_ideal(a))
            }
        ) {
            prop_assert_eq!(i.sum(&i).unwrap(), i.clone());
            prop_assert_eq!(i.intersect(&i).unwrap(), i.clone());
            prop_assert_eq!(i.sum(&j).unwrap(), j.sum(&i).unwrap());
            prop_assert_eq!(i.intersect(&j).unwrap(), j.intersect(&i).unwrap());
            prop_assert_eq!(i.sum(&j).unwrap().sum(&k).unwrap(), i.sum(&j.sum(&k).unwrap()).unwrap());
            prop_assert_eq!(
                i.intersect(&j).unwrap().intersect(&k).unwrap(),
                i.intersect(&j.intersect(&k).unwrap()).unwrap()
            );
            let p = i.product(&j).unwrap();
            prop_assert_eq!(p.clone(), j.product(&i).unwrap());
            prop_assert!(i.intersect(&j).unwrap().contains_ideal(&p));
            for out in [i.sum(&j).unwrap(), i.intersect(&j).unwrap(), p] {
                prop_assert!(out.is_closed());
            }
        }

        #[test]
        fn products_in_cpn_are_closed(
            (i, j) in {
                let a = Arc::new(GradedAlgebra::cpn(GroundField::Q, 3));
                (arb_ideal(a.clone()), arb_ideal(a))
            }
        ) {
            prop_assert!(i.product(&j).unwrap().is_closed());
        }
    }
}
