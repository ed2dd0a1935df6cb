//! Cubes of based complexes over the Novikov field: the cube relation, restriction,
//! shifts, sums, tensor products, cones and cocones, coniform inverses,
//! composition, folding, pullbacks, rays and telescopes, homology over `Λ` and
//! `Λ≥0`, relative complexes of maps, and the classical/weighted comparison.
//!
//! Vertex `v` of an `n`-cube is a bitmask whose bit `j` is coordinate `j + 1`.
//! A face is the pair `(ini, ter)` with `ini ⊆ ter`; its free coordinates are
//! `ter ∖ ini`. Matrices act on column vectors: rows index target generators.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cubical_space::{CellComplex, CellSet};
use crate::error::{Error, Result};
use crate::field::{rat, GroundField};
use crate::linalg;
use crate::novikov::{Lam, Nov, Poly};

pub type Mat = Vec<Vec<Lam>>;

fn zero_mat(gf: GroundField, rows: usize, cols: usize) -> Mat {
    vec![vec![Lam::zero(gf); cols]; rows]
}

fn ident(gf: GroundField, n: usize) -> Mat {
    let mut m = zero_mat(gf, n, n);
    for (i, r) in m.iter_mut().enumerate() {
        r[i] = Lam::one(gf);
    }
    m
}

fn is_zero_mat(m: &Mat) -> bool {
    m.iter().all(|r| r.iter().all(Lam::is_zero))
}

fn mul(gf: GroundField, a: &Mat, b: &Mat, cols: usize) -> Mat {
    if a.is_empty() {
        return Vec::new();
    }
    linalg::mat_mul(&Nov(gf), a, b, cols)
}

fn add_into(dst: &mut Mat, src: &Mat, sign: i64) {
    for (dr, sr) in dst.iter_mut().zip(src) {
        for (d, s) in dr.iter_mut().zip(sr) {
            if !s.is_zero() {
                *d = if sign > 0 { d.add(s) } else { d.sub(s) };
            }
        }
    }
}

fn scaled(m: &Mat, sign: i64) -> Mat {
    if sign > 0 {
        m.clone()
    } else {
        m.iter().map(|r| r.iter().map(Lam::neg).collect()).collect()
    }
}

fn put_block(dst: &mut Mat, src: &Mat, r0: usize, c0: usize, sign: i64) {
    for (i, row) in src.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            if !x.is_zero() {
                dst[r0 + i][c0 + j] = if sign > 0 { x.clone() } else { x.neg() };
            }
        }
    }
}

fn block(m: &Mat, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Mat {
    m[rows].iter().map(|r| r[cols.clone()].to_vec()).collect()
}

fn pm(odd: bool) -> i64 {
    if odd {
        -1
    } else {
        1
    }
}

fn popcount(x: usize) -> usize {
    x.count_ones() as usize
}

/// Sign of the shuffle listing `s1` then `s2` (both subsets of an ordered set):
/// `(−1)` to the number of pairs `a ∈ s1`, `b ∈ s2` with `a > b`.
pub fn shuffle_sign(s1: &[usize], s2: &[usize]) -> Result<i64> {
    if s1.iter().any(|a| s2.contains(a)) {
        return Err(Error::Schema("shuffle parts must be disjoint".into()));
    }
    let inv = s1.iter().map(|a| s2.iter().filter(|b| a > b).count()).sum::<usize>();
    Ok(pm(inv % 2 == 1))
}

/// Sign for the face pair `(F′, F″)` given by free-coordinate masks.
fn face_sign(m1: usize, m2: usize) -> i64 {
    let mut inv = 0;
    let mut seen_right = 0;
    // Count pairs (a ∈ m1, b ∈ m2) with a > b by scanning bits upward.
    let mut bit = 0;
    while (m1 | m2) >> bit != 0 {
        if m2 >> bit & 1 == 1 {
            seen_right += 1;
        }
        if m1 >> bit & 1 == 1 {
            inv += seen_right;
        }
        bit += 1;
    }
    pm(inv % 2 == 1)
}

/// Spreads the low bits of `u` onto the set bits of `mask`, in order.
fn spread(u: usize, mask: usize) -> usize {
    let mut out = 0;
    let mut k = 0;
    for bit in 0..usize::BITS as usize {
        if mask >> bit & 1 == 1 {
            if u >> k & 1 == 1 {
                out |= 1 << bit;
            }
            k += 1;
        }
    }
    out
}

/// Inserts bit `b` at position `pos`.
fn insert_bit(v: usize, pos: usize, b: usize) -> usize {
    let low = v & ((1 << pos) - 1);
    let high = v >> pos;
    low | (b << pos) | (high << (pos + 1))
}

/// All faces `(a, b)` with `a ⊆ b` of the `n`-cube.
pub fn faces(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for b in 0..1usize << n {
        let mut a = b;
        loop {
            out.push((a, b));
            if a == 0 {
                break;
            }
            a = (a - 1) & b;
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Cubes

/// An `n`-cube of based graded modules over `Λ` with face maps of degree `1 − |F|`.
#[derive(Clone, Debug)]
pub struct Cube {
    pub gf: GroundField,
    pub n: usize,
    /// 0 for a `Z` grading, otherwise an even modulus.
    pub modulus: i64,
    /// Generator degrees at each vertex.
    pub degrees: Vec<Vec<i64>>,
    /// Face maps; absent entries are zero.
    pub maps: BTreeMap<(usize, usize), Mat>,
}

impl PartialEq for Cube {
    fn eq(&self, o: &Self) -> bool {
        if self.gf != o.gf || self.n != o.n || self.modulus != o.modulus || self.degrees != o.degrees {
            return false;
        }
        let keys: std::collections::BTreeSet<_> = self.maps.keys().chain(o.maps.keys()).collect();
        keys.into_iter().all(|&(a, b)| self.map(a, b) == o.map(a, b))
    }
}

impl Cube {
    /// Builds and validates a cube.
    pub fn new(gf: GroundField, n: usize, modulus: i64, degrees: Vec<Vec<i64>>, maps: BTreeMap<(usize, usize), Mat>) -> Result<Cube> {
        let c = Cube::raw(gf, n, modulus, degrees, maps)?;
        c.validate()?;
        Ok(c)
    }

    /// Shape, degree and valuation checks without the cube relation.
    pub fn raw(gf: GroundField, n: usize, modulus: i64, degrees: Vec<Vec<i64>>, maps: BTreeMap<(usize, usize), Mat>) -> Result<Cube> {
        if modulus < 0 || modulus % 2 == 1 {
            return Err(Error::Schema(format!("grading modulus {modulus} must be 0 or even")));
        }
        if degrees.len() != 1 << n {
            return Err(Error::Schema(format!("{} vertices for a {n}-cube", degrees.len())));
        }
        let degrees: Vec<Vec<i64>> = degrees.into_iter().map(|d| d.into_iter().map(|x| reduce(x, modulus)).collect()).collect();
        let mut kept = BTreeMap::new();
        for ((a, b), m) in maps {
            if a & !b != 0 || b >= 1 << n {
                return Err(Error::Schema(format!("({a:b}, {b:b}) is not a face")));
            }
            let (rows, cols) = (degrees[b].len(), degrees[a].len());
            if m.len() != rows || m.iter().any(|r| r.len() != cols) {
                return Err(Error::Schema(format!("face ({a:b}, {b:b}) needs a {rows}×{cols} matrix")));
            }
            let shift = 1 - popcount(b ^ a) as i64;
            for (i, row) in m.iter().enumerate() {
                for (j, x) in row.iter().enumerate() {
                    if x.is_zero() {
                        continue;
                    }
                    if x.gf() != gf {
                        return Err(Error::Schema("entry over the wrong ground field".into()));
                    }
                    if reduce(degrees[a][j] + shift, modulus) != degrees[b][i] {
                        return Err(Error::Schema(format!("face ({a:b}, {b:b}) entry ({i}, {j}) has the wrong degree")));
                    }
                    if x.valuation().is_some_and(|v| v.is_negative()) {
                        return Err(Error::Schema(format!("face ({a:b}, {b:b}) entry ({i}, {j}) has negative valuation")));
                    }
                }
            }
            if !is_zero_mat(&m) {
                kept.insert((a, b), m);
            }
        }
        Ok(Cube { gf, n, modulus, degrees, maps: kept })
    }

    pub fn dim_at(&self, v: usize) -> usize {
        self.degrees[v].len()
    }

    /// The face map, with zero for absent entries.
    pub fn map(&self, a: usize, b: usize) -> Mat {
        self.maps.get(&(a, b)).cloned().unwrap_or_else(|| zero_mat(self.gf, self.dim_at(b), self.dim_at(a)))
    }

    /// `Σ_{F = F′·F″} (−1)^{|F′|} sgn(F′, F″) f_{F″} f_{F′}` for the face `(a, b)`.
    pub fn residual(&self, a: usize, b: usize) -> Mat {
        let mut out = zero_mat(self.gf, self.dim_at(b), self.dim_at(a));
        let free = b ^ a;
        let mut s = free;
        loop {
            let w = a | s;
            if let (Some(f1), Some(f2)) = (self.maps.get(&(a, w)), self.maps.get(&(w, b))) {
                let sign = pm(popcount(s) % 2 == 1) * face_sign(s, free ^ s);
                add_into(&mut out, &mul(self.gf, f2, f1, self.dim_at(a)), sign);
            }
            if s == 0 {
                break;
            }
            s = (s - 1) & free;
        }
        out
    }

    /// Checks the cube relation on every face.
    pub fn validate(&self) -> Result<()> {
        let bad = faces(self.n).into_par_iter().find_first(|&(a, b)| !is_zero_mat(&self.residual(a, b)));
        match bad {
            None => Ok(()),
            Some((a, b)) => Err(Error::Invariant(format!(
                "cube relation fails on face ({a:0w$b} → {b:0w$b}); residual {}",
                fmt_mat(&self.residual(a, b)),
                w = self.n.max(1)
            ))),
        }
    }

    /// A chain complex as a 0-cube.
    pub fn complex(gf: GroundField, modulus: i64, degrees: Vec<i64>, d: Mat) -> Result<Cube> {
        Cube::new(gf, 0, modulus, vec![degrees], BTreeMap::from([((0, 0), d)]))
    }

    /// `k` copies of the ground ring in degree 0 with zero differential.
    pub fn ground(gf: GroundField, modulus: i64, k: usize) -> Cube {
        Cube { gf, n: 0, modulus, degrees: vec![vec![0; k]], maps: BTreeMap::new() }
    }

    /// A 1-cube between free modules in degree 0.
    pub fn ground_map(gf: GroundField, modulus: i64, m: Mat, src: usize) -> Result<Cube> {
        let tgt = m.len();
        Cube::new(gf, 1, modulus, vec![vec![0; src], vec![0; tgt]], BTreeMap::from([((0, 1), m)]))
    }

    pub fn id_r(gf: GroundField, modulus: i64) -> Cube {
        Cube::ground_map(gf, modulus, ident(gf, 1), 1).expect("identity is a map")
    }

    pub fn diagonal_r(gf: GroundField, modulus: i64) -> Cube {
        Cube::ground_map(gf, modulus, vec![vec![Lam::one(gf)], vec![Lam::one(gf)]], 1).expect("diagonal is a map")
    }

    pub fn sum_r(gf: GroundField, modulus: i64) -> Cube {
        Cube::ground_map(gf, modulus, vec![vec![Lam::one(gf), Lam::one(gf)]], 2).expect("sum is a map")
    }

    /// The differential at a vertex.
    pub fn differential(&self, v: usize) -> Mat {
        self.map(v, v)
    }

    /// Subcube on the face `(a, b)`, coordinates renumbered in order.
    pub fn restrict(&self, a: usize, b: usize) -> Result<Cube> {
        if a & !b != 0 || b >= 1 << self.n {
            return Err(Error::Schema(format!("({a:b}, {b:b}) is not a face")));
        }
        let free = b ^ a;
        let k = popcount(free);
        let degrees = (0..1usize << k).map(|u| self.degrees[a | spread(u, free)].clone()).collect();
        let mut maps = BTreeMap::new();
        for (u1, u2) in faces(k) {
            if let Some(m) = self.maps.get(&(a | spread(u1, free), a | spread(u2, free))) {
                maps.insert((u1, u2), m.clone());
            }
        }
        Ok(Cube { gf: self.gf, n: k, modulus: self.modulus, degrees, maps })
    }

    /// Face `x_i = side` (1-based `i`).
    pub fn side(&self, i: usize, side: usize) -> Result<Cube> {
        if i == 0 || i > self.n {
            return Err(Error::Schema(format!("no direction {i} in a {}-cube", self.n)));
        }
        let full = (1 << self.n) - 1;
        let bit = 1 << (i - 1);
        if side == 0 {
            self.restrict(0, full & !bit)
        } else {
            self.restrict(bit, full)
        }
    }

    /// `C[k]`: degrees lowered by `k`, every map multiplied by `(−1)^k`.
    pub fn shift(&self, k: i64) -> Cube {
        let sign = pm(k.rem_euclid(2) == 1);
        Cube {
            gf: self.gf,
            n: self.n,
            modulus: self.modulus,
            degrees: self.degrees.iter().map(|d| d.iter().map(|x| reduce(x - k, self.modulus)).collect()).collect(),
            maps: self.maps.iter().map(|(k, m)| (*k, scaled(m, sign))).collect(),
        }
    }

    /// Negates every map crossing direction `i` (1-based).
    pub fn negate_direction(&self, i: usize) -> Cube {
        let bit = 1 << (i - 1);
        let mut out = self.clone();
        for ((a, b), m) in out.maps.iter_mut() {
            if (b ^ a) & bit != 0 {
                *m = scaled(m, -1);
            }
        }
        out
    }

    pub fn direct_sum(&self, o: &Cube) -> Result<Cube> {
        self.compatible(o)?;
        if self.n != o.n {
            return Err(Error::Schema("direct sum needs cubes of equal dimension".into()));
        }
        let degrees: Vec<Vec<i64>> = self.degrees.iter().zip(&o.degrees).map(|(x, y)| [x.as_slice(), y].concat()).collect();
        let mut maps = BTreeMap::new();
        for (a, b) in faces(self.n) {
            let (x, y) = (self.maps.get(&(a, b)), o.maps.get(&(a, b)));
            if x.is_none() && y.is_none() {
                continue;
            }
            let mut m = zero_mat(self.gf, degrees[b].len(), degrees[a].len());
            if let Some(x) = x {
                put_block(&mut m, x, 0, 0, 1);
            }
            if let Some(y) = y {
                put_block(&mut m, y, self.dim_at(b), self.dim_at(a), 1);
            }
            maps.insert((a, b), m);
        }
        Ok(Cube { gf: self.gf, n: self.n, modulus: self.modulus, degrees, maps })
    }

    fn compatible(&self, o: &Cube) -> Result<()> {
        if self.gf != o.gf || self.modulus != o.modulus {
            return Err(Error::Schema("cubes over different rings or gradings".into()));
        }
        Ok(())
    }

    /// Graded tensor product: `(A ⊗ B)^{v w} = A^v ⊗ B^w`, generator `(i, j)` at index `i·dim B^w + j`.
    pub fn tensor(&self, o: &Cube) -> Result<Cube> {
        self.compatible(o)?;
        let (k, l) = (self.n, o.n);
        let gf = self.gf;
        let vert = |v: usize, w: usize| v | (w << k);
        let mut degrees = vec![Vec::new(); 1 << (k + l)];
        for v in 0..1usize << k {
            for w in 0..1usize << l {
                degrees[vert(v, w)] =
                    self.degrees[v].iter().flat_map(|x| o.degrees[w].iter().map(move |y| reduce(x + y, self.modulus))).collect();
            }
        }
        let mut maps = BTreeMap::new();
        // f ⊗ id on faces F′ × {w}
        for (&(a, b), f) in &self.maps {
            for w in 0..1usize << l {
                let dw = o.dim_at(w);
                let key = (vert(a, w), vert(b, w));
                let m = maps.entry(key).or_insert_with(|| zero_mat(gf, degrees[key.1].len(), degrees[key.0].len()));
                for (i, row) in f.iter().enumerate() {
                    for (j, x) in row.iter().enumerate() {
                        if !x.is_zero() {
                            for t in 0..dw {
                                m[i * dw + t][j * dw + t] = m[i * dw + t][j * dw + t].add(x);
                            }
                        }
                    }
                }
            }
        }
        // id ⊗ g on faces {v} × F″, with the Koszul sign (−1)^{|g|·|x|}
        for (&(a, b), g) in &o.maps {
            let gdeg = 1 - popcount(b ^ a) as i64;
            for v in 0..1usize << k {
                let (da, db) = (o.dim_at(a), o.dim_at(b));
                let key = (vert(v, a), vert(v, b));
                let m = maps.entry(key).or_insert_with(|| zero_mat(gf, degrees[key.1].len(), degrees[key.0].len()));
                for (s, &xdeg) in self.degrees[v].iter().enumerate() {
                    let sign = pm((gdeg * xdeg).rem_euclid(2) == 1);
                    for (i, row) in g.iter().enumerate() {
                        for (j, y) in row.iter().enumerate() {
                            if !y.is_zero() {
                                let e = &mut m[s * db + i][s * da + j];
                                *e = if sign > 0 { e.add(y) } else { e.sub(y) };
                            }
                        }
                    }
                }
            }
        }
        Cube::raw(gf, k + l, self.modulus, degrees, maps)
    }

    /// Relabels coordinates: old coordinate `j` (0-based) becomes `perm[j]`.
    /// Each face map picks up the sign of the induced reordering of its free coordinates.
    pub fn permute(&self, perm: &[usize]) -> Result<Cube> {
        let n = self.n;
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::Schema(format!("{perm:?} is not a permutation of {n} coordinates")));
        }
        let relabel = |v: usize| (0..n).filter(|&j| v >> j & 1 == 1).fold(0, |acc, j| acc | 1 << perm[j]);
        let mut degrees = vec![Vec::new(); 1 << n];
        for v in 0..1usize << n {
            degrees[relabel(v)] = self.degrees[v].clone();
        }
        let maps = self
            .maps
            .iter()
            .map(|(&(a, b), m)| {
                let images: Vec<usize> = (0..n).filter(|&j| (b ^ a) >> j & 1 == 1).map(|j| perm[j]).collect();
                let inv = (0..images.len()).flat_map(|x| (x + 1..images.len()).map(move |y| (x, y))).filter(|&(x, y)| images[x] > images[y]).count();
                ((relabel(a), relabel(b)), scaled(m, pm(inv % 2 == 1)))
            })
            .collect();
        Ok(Cube { gf: self.gf, n, modulus: self.modulus, degrees, maps })
    }

    /// `A ⊗_σ B` for the shuffle `σ` sending `A`'s coordinates to `positions` (0-based, increasing).
    pub fn tensor_shuffled(&self, o: &Cube, positions: &[usize]) -> Result<Cube> {
        let total = self.n + o.n;
        if positions.len() != self.n || positions.windows(2).any(|w| w[0] >= w[1]) || positions.iter().any(|&p| p >= total) {
            return Err(Error::Schema("shuffle positions must be increasing and in range".into()));
        }
        let rest: Vec<usize> = (0..total).filter(|p| !positions.contains(p)).collect();
        let perm: Vec<usize> = positions.iter().chain(&rest).copied().collect();
        self.tensor(o)?.permute(&perm)
    }

    /// Cone in direction `i` (1-based): `C^{ι₀v}[1] ⊕ C^{ι₁v}` with the triangular face maps.
    pub fn cone(&self, i: usize) -> Result<Cube> {
        let n = self.n;
        if i == 0 || i > n {
            return Err(Error::Schema(format!("no direction {i} in a {n}-cube")));
        }
        let pos = i - 1;
        let gf = self.gf;
        let io = |v: usize, b: usize| insert_bit(v, pos, b);
        let degrees: Vec<Vec<i64>> = (0..1usize << (n - 1))
            .map(|v| {
                let shifted = self.degrees[io(v, 0)].iter().map(|x| reduce(x - 1, self.modulus));
                shifted.chain(self.degrees[io(v, 1)].iter().copied()).collect()
            })
            .collect();
        let mut maps = BTreeMap::new();
        for (a, b) in faces(n - 1) {
            let f0 = self.maps.get(&(io(a, 0), io(b, 0)));
            let f = self.maps.get(&(io(a, 0), io(b, 1)));
            let f1 = self.maps.get(&(io(a, 1), io(b, 1)));
            if f0.is_none() && f.is_none() && f1.is_none() {
                continue;
            }
            let (r0, c0) = (self.dim_at(io(b, 0)), self.dim_at(io(a, 0)));
            let mut m = zero_mat(gf, degrees[b].len(), degrees[a].len());
            let free = b ^ a;
            if let Some(f0) = f0 {
                put_block(&mut m, f0, 0, 0, -pm(popcount(free) % 2 == 1));
            }
            if let Some(f) = f {
                // Position of direction i among the free coordinates of F.
                let sharp = popcount(free & ((1 << pos) - 1)) + 1;
                put_block(&mut m, f, r0, 0, -pm(sharp % 2 == 1));
            }
            if let Some(f1) = f1 {
                put_block(&mut m, f1, r0, c0, 1);
            }
            maps.insert((a, b), m);
        }
        Cube::raw(gf, n - 1, self.modulus, degrees, maps)
    }

    /// `co_i C = (cone_i C)[−1]`.
    pub fn cocone(&self, i: usize) -> Result<Cube> {
        Ok(self.cone(i)?.shift(-1))
    }

    /// `cone^{∘k} = cone₁ ∘ ⋯ ∘ cone₁`.
    pub fn cone_iter(&self, k: usize) -> Result<Cube> {
        if k > self.n {
            return Err(Error::Schema(format!("cannot cone {k} times in a {}-cube", self.n)));
        }
        let mut c = self.clone();
        for _ in 0..k {
            c = c.cone(1)?;
        }
        Ok(c)
    }

    /// Block sizes of `cone^{∘k}` at each vertex, indexed by the collapsed coordinates.
    pub fn coniform_blocks(&self, k: usize) -> Vec<Vec<usize>> {
        (0..1usize << (self.n - k)).map(|w| (0..1usize << k).map(|t| self.dim_at(t | w << k)).collect()).collect()
    }

    /// `cone^{∘k}` together with its coniform decomposition.
    pub fn to_coniform(&self, k: usize) -> Result<Coniform> {
        Ok(Coniform { k, cube: self.cone_iter(k)?, blocks: self.coniform_blocks(k) })
    }

    /// Whether every map across the last direction vanishes between distinct vertices.
    pub fn is_straight(&self) -> bool {
        let top = 1 << (self.n - 1);
        self.maps.keys().all(|&(a, b)| (b ^ a) & top == 0 || a | top == b)
    }

    /// The complex `cone^{∘n} C` of a cube.
    pub fn total(&self) -> Result<Cube> {
        self.cone_iter(self.n)
    }
}

fn reduce(x: i64, modulus: i64) -> i64 {
    if modulus == 0 {
        x
    } else {
        x.rem_euclid(modulus)
    }
}

pub fn fmt_mat(m: &Mat) -> String {
    let rows: Vec<String> =
        m.iter().map(|r| format!("[{}]", r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", "))).collect();
    format!("[{}]", rows.join(", "))
}

// ---------------------------------------------------------------------------
// Coniform data

/// A `k`-coniform cube: every vertex splits into `2^k` blocks indexed by subsets of
/// the collapsed coordinates, and maps only go from block `t` to blocks `t′ ⊇ t`.
#[derive(Clone, Debug, PartialEq)]
pub struct Coniform {
    pub k: usize,
    pub cube: Cube,
    /// Block sizes per vertex, in block order.
    pub blocks: Vec<Vec<usize>>,
}

impl Coniform {
    fn offsets(&self, w: usize) -> Vec<usize> {
        let mut out = vec![0];
        for s in &self.blocks[w] {
            out.push(out.last().unwrap() + s);
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let nb = 1usize << self.k;
        if self.blocks.len() != 1 << self.cube.n {
            return Err(Error::Schema("one block list per vertex is required".into()));
        }
        for (w, b) in self.blocks.iter().enumerate() {
            if b.len() != nb || b.iter().sum::<usize>() != self.cube.dim_at(w) {
                return Err(Error::Schema(format!("blocks at vertex {w} do not partition its generators")));
            }
        }
        for (&(a, b), m) in &self.cube.maps {
            let (oa, ob) = (self.offsets(a), self.offsets(b));
            for t in 0..nb {
                for t2 in 0..nb {
                    if t & !t2 != 0 && !is_zero_mat(&block(m, ob[t2]..ob[t2 + 1], oa[t]..oa[t + 1])) {
                        return Err(Error::Invariant(format!(
                            "coniformity fails on face ({a:b}, {b:b}): block {t:b} → {t2:b} is nonzero"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// `(cone^{∘k})^{−1}`: the `(n+k)`-cube whose iterated cone is this data.
    pub fn inverse(&self) -> Result<Cube> {
        self.validate()?;
        let k = self.k;
        let m = self.cube.n;
        let n = k + m;
        let gf = self.cube.gf;
        let mut degrees = vec![Vec::new(); 1 << n];
        for w in 0..1usize << m {
            let off = self.offsets(w);
            for t in 0..1usize << k {
                let zeros = (k - popcount(t)) as i64;
                degrees[t | w << k] =
                    self.cube.degrees[w][off[t]..off[t + 1]].iter().map(|x| reduce(x + zeros, self.cube.modulus)).collect();
            }
        }
        let mut maps = BTreeMap::new();
        for (&(ah, bh), mat) in &self.cube.maps {
            let (oa, ob) = (self.offsets(ah), self.offsets(bh));
            for bl in 0..1usize << k {
                let mut al = bl;
                loop {
                    let sub = block(mat, ob[bl]..ob[bl + 1], oa[al]..oa[al + 1]);
                    if !is_zero_mat(&sub) {
                        let (a, b) = (al | ah << k, bl | bh << k);
                        maps.insert((a, b), scaled(&sub, cone_sign(k, a, b)));
                    }
                    if al == 0 {
                        break;
                    }
                    al = (al - 1) & bl;
                }
            }
        }
        Cube::new(gf, n, self.cube.modulus, degrees, maps)
    }
}

/// Sign acquired by the block of face `(a, b)` under `cone^{∘k}`: each collapsed
/// coordinate `j` with `a_j = b_j = 0` contributes `−(−1)^{#free coordinates after j}`.
fn cone_sign(k: usize, a: usize, b: usize) -> i64 {
    let free = b ^ a;
    (0..k)
        .filter(|&j| (a | b) >> j & 1 == 0)
        .map(|j| -pm(popcount(free >> (j + 1)) % 2 == 1))
        .product()
}

// ---------------------------------------------------------------------------
// Maps of cubes

/// The straight map `A → B` with vertex components `fv[v]: A^v → B^v`.
pub fn straight_map(a: &Cube, b: &Cube, fv: &[Mat]) -> Result<Cube> {
    a.compatible(b)?;
    if a.n != b.n || fv.len() != 1 << a.n {
        return Err(Error::Schema("straight map needs cubes of equal dimension and one map per vertex".into()));
    }
    let top = 1 << a.n;
    let mut degrees = a.degrees.clone();
    degrees.extend(b.degrees.iter().cloned());
    let mut maps = BTreeMap::new();
    for (&(x, y), m) in &a.maps {
        maps.insert((x, y), m.clone());
    }
    for (&(x, y), m) in &b.maps {
        maps.insert((x | top, y | top), m.clone());
    }
    for (v, m) in fv.iter().enumerate() {
        maps.insert((v, v | top), m.clone());
    }
    Cube::new(a.gf, a.n + 1, a.modulus, degrees, maps)
}

/// The straight maps `B[−1] → co F → A` of the cocone sequence of a map `F: A → B`
/// (last direction). The projection carries the sign `(−1)^{|v|}` at vertex `v`.
pub fn cocone_sequence(f: &Cube) -> Result<(Cube, Cube)> {
    if f.n == 0 {
        return Err(Error::Schema("a map of cubes has at least one direction".into()));
    }
    let n = f.n;
    let co = f.cocone(n)?;
    let (a, b) = (f.side(n, 0)?, f.side(n, 1)?);
    let gf = f.gf;
    let verts = 1usize << (n - 1);
    let iota: Vec<Mat> = (0..verts)
        .map(|v| {
            let (na, nb) = (a.dim_at(v), b.dim_at(v));
            let mut m = zero_mat(gf, na + nb, nb);
            put_block(&mut m, &ident(gf, nb), na, 0, 1);
            m
        })
        .collect();
    let pi: Vec<Mat> = (0..verts)
        .map(|v| {
            let (na, nb) = (a.dim_at(v), b.dim_at(v));
            let mut m = zero_mat(gf, na, na + nb);
            put_block(&mut m, &ident(gf, na), 0, 0, pm(popcount(v) % 2 == 1));
            m
        })
        .collect();
    Ok((straight_map(&b.shift(-1), &co, &iota)?, straight_map(&co, &a, &pi)?))
}

/// Vertexwise exactness of `0 → B[−1] → co F → A → 0` plus the rank balance of
/// the long exact sequence of the totals.
pub fn cocone_sequence_exact(f: &Cube) -> Result<bool> {
    let (iota, pi) = cocone_sequence(f)?;
    let n = f.n;
    let top = 1usize << (n - 1);
    let gf = f.gf;
    for v in 0..top {
        let (i, p) = (iota.map(v, v | top), pi.map(v, v | top));
        let (nb, na) = (iota.dim_at(v), pi.dim_at(v | top));
        if rank_of(gf, i.clone()) != nb || rank_of(gf, p.clone()) != na || !is_zero_mat(&mul(gf, &p, &i, nb)) {
            return Ok(false);
        }
        if iota.dim_at(v | top) != na + nb {
            return Ok(false);
        }
    }
    let (_, rep) = relative_pair_complex(&f.cone_iter(n - 1)?)?;
    Ok(rep.exact)
}

pub fn identity_map(c: &Cube) -> Result<Cube> {
    c.tensor(&Cube::id_r(c.gf, c.modulus))
}

/// `C → C ⊗ (R ⊕ R)`, the diagonal.
pub fn diagonal_map(c: &Cube) -> Result<Cube> {
    c.tensor(&Cube::diagonal_r(c.gf, c.modulus))
}

/// `C ⊗ (R ⊕ R) → C`, the sum.
pub fn sum_map(c: &Cube) -> Result<Cube> {
    c.tensor(&Cube::sum_r(c.gf, c.modulus))
}

/// Reorders the generators of `C ⊗ (R ⊕ R)` into those of `C ⊕ C` at every vertex.
pub fn tensor_pair_to_sum(c: &Cube) -> Result<Cube> {
    let t = c.tensor(&Cube::ground(c.gf, c.modulus, 2))?;
    let perm = |v: usize| -> Vec<usize> {
        let d = c.dim_at(v);
        // C ⊕ C index j·d + i holds the tensor generator i·2 + j.
        (0..2 * d).map(|p| (p % d) * 2 + p / d).collect()
    };
    let degrees = (0..1usize << c.n).map(|v| perm(v).iter().map(|&s| t.degrees[v][s]).collect()).collect();
    let maps = t
        .maps
        .iter()
        .map(|(&(a, b), m)| {
            let (pa, pb) = (perm(a), perm(b));
            ((a, b), pb.iter().map(|&r| pa.iter().map(|&s| m[r][s].clone()).collect()).collect())
        })
        .collect();
    Cube::raw(c.gf, c.n, c.modulus, degrees, maps)
}

/// `G ∘ F` for maps `A → B → C` of `n`-cubes (last direction), through `cone^{∘n}`.
pub fn compose(f: &Cube, g: &Cube) -> Result<Cube> {
    f.compatible(g)?;
    if f.n != g.n || f.n == 0 {
        return Err(Error::Schema("composition needs two maps of cubes of equal dimension".into()));
    }
    let n = f.n - 1;
    if f.side(f.n, 1)? != g.side(g.n, 0)? {
        return Err(Error::Schema("face mismatch: the target of F is not the source of G".into()));
    }
    let (cf, cg) = (f.cone_iter(n)?, g.cone_iter(n)?);
    let gf = f.gf;
    let edge = mul(gf, &cg.map(0, 1), &cf.map(0, 1), cf.dim_at(0));
    let composite = Cube::raw(
        gf,
        1,
        f.modulus,
        vec![cf.degrees[0].clone(), cg.degrees[1].clone()],
        BTreeMap::from([((0, 0), cf.map(0, 0)), ((1, 1), cg.map(1, 1)), ((0, 1), edge)]),
    )?;
    let blocks = vec![f.coniform_blocks(n)[0].clone(), g.coniform_blocks(n)[1].clone()];
    Coniform { k: n, cube: composite, blocks }.inverse()
}

// ---------------------------------------------------------------------------
// Folding and pullbacks

/// Folds an `(n+2)`-cube (square of `n`-cubes `A, B, C, D` in the last two
/// directions) into `A —(F, −G)→ B ⊕ C —(I + K)→ D` over `0`.
pub fn fold(x: &Cube) -> Result<Cube> {
    if x.n < 2 {
        return Err(Error::Schema("folding needs at least two directions".into()));
    }
    let n = x.n - 2;
    let (h, vb) = (1usize << n, 1usize << (n + 1));
    let gf = x.gf;
    let mut degrees = vec![Vec::new(); 1 << x.n];
    for v in 0..1usize << n {
        degrees[v] = x.degrees[v].clone();
        degrees[v | h] = [x.degrees[v | h].as_slice(), &x.degrees[v | vb]].concat();
        degrees[v | h | vb] = x.degrees[v | h | vb].clone();
    }
    let dim = |v: usize| x.dim_at(v);
    let mut maps = BTreeMap::new();
    for (a, b) in faces(n) {
        maps.insert((a, b), x.map(a, b));
        let mut bc = zero_mat(gf, dim(b | h) + dim(b | vb), dim(a | h) + dim(a | vb));
        put_block(&mut bc, &x.map(a | h, b | h), 0, 0, 1);
        put_block(&mut bc, &x.map(a | vb, b | vb), dim(b | h), dim(a | h), 1);
        maps.insert((a | h, b | h), bc);
        maps.insert((a | h | vb, b | h | vb), x.map(a | h | vb, b | h | vb));
        let mut fg = zero_mat(gf, dim(b | h) + dim(b | vb), dim(a));
        put_block(&mut fg, &x.map(a, b | h), 0, 0, 1);
        put_block(&mut fg, &x.map(a, b | vb), dim(b | h), 0, -1);
        maps.insert((a, b | h), fg);
        let mut ik = zero_mat(gf, dim(b | h | vb), dim(a | h) + dim(a | vb));
        put_block(&mut ik, &x.map(a | h, b | h | vb), 0, 0, 1);
        put_block(&mut ik, &x.map(a | vb, b | h | vb), 0, dim(a | h), 1);
        maps.insert((a | h, b | h | vb), ik);
        maps.insert((a, b | h | vb), x.map(a, b | h | vb));
    }
    let out = Cube::raw(gf, x.n, x.modulus, degrees, maps)?;
    out.validate()?;
    Ok(out)
}

/// Folds, then takes the cocone in the last direction: `co(A → 0) —L→ Q`.
pub fn fold_cocone(x: &Cube) -> Result<Cube> {
    let l = fold(x)?.cocone(x.n)?;
    l.validate()?;
    Ok(l)
}

/// The map `B ⊕ C —(I + K)→ D` of `n`-cubes from two maps with common target.
pub fn sum_into(i_map: &Cube, k_map: &Cube) -> Result<Cube> {
    i_map.compatible(k_map)?;
    if i_map.n != k_map.n || i_map.n == 0 {
        return Err(Error::Schema("shape mismatch: V-diagram maps need equal dimension".into()));
    }
    let n = i_map.n - 1;
    let d = i_map.side(i_map.n, 1)?;
    if d != k_map.side(k_map.n, 1)? {
        return Err(Error::Schema("shape mismatch: the two maps have different targets".into()));
    }
    let (b, c) = (i_map.side(i_map.n, 0)?, k_map.side(k_map.n, 0)?);
    let bc = b.direct_sum(&c)?;
    let top = 1 << n;
    let mut degrees = bc.degrees.clone();
    degrees.extend(d.degrees.iter().cloned());
    let mut maps = BTreeMap::new();
    for (&(x, y), m) in &bc.maps {
        maps.insert((x, y), m.clone());
    }
    for (&(x, y), m) in &d.maps {
        maps.insert((x | top, y | top), m.clone());
    }
    for (x, y) in faces(n) {
        let mut m = zero_mat(i_map.gf, d.dim_at(y), bc.dim_at(x));
        put_block(&mut m, &i_map.map(x, y | top), 0, 0, 1);
        put_block(&mut m, &k_map.map(x, y | top), 0, b.dim_at(x), 1);
        maps.insert((x, y | top), m);
    }
    Cube::new(i_map.gf, n + 1, i_map.modulus, degrees, maps)
}

/// Pullback of a V-diagram: `Q = co_{n+1}(B ⊕ C —(I + K)→ D)`.
pub fn pullback(i_map: &Cube, k_map: &Cube) -> Result<Cube> {
    let s = sum_into(i_map, k_map)?;
    s.cocone(s.n)
}

// ---------------------------------------------------------------------------
// Rays and telescopes

#[derive(Clone, Debug, PartialEq)]
pub enum Tail {
    Stabilized,
    Contracting { c: BigRational },
    Unknown,
}

/// A finite prefix `A₁ → A₂ → ⋯ → A_N` of a ray of `n`-cubes.
#[derive(Clone, Debug)]
pub struct Ray {
    pub cubes: Vec<Cube>,
    /// `maps[i]: cubes[i] → cubes[i + 1]`, as `(n+1)`-cubes.
    pub maps: Vec<Cube>,
    pub tail: Tail,
}

impl Ray {
    pub fn new(cubes: Vec<Cube>, maps: Vec<Cube>, tail: Tail) -> Result<Ray> {
        let r = Ray { cubes, maps, tail };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cubes.is_empty() || self.maps.len() + 1 != self.cubes.len() {
            return Err(Error::Schema("a ray prefix needs N cubes and N − 1 maps".into()));
        }
        let n = self.cubes[0].n;
        for (i, m) in self.maps.iter().enumerate() {
            if m.n != n + 1 || m.side(n + 1, 0)? != self.cubes[i] || m.side(n + 1, 1)? != self.cubes[i + 1] {
                return Err(Error::Schema(format!("map {i} does not join cubes {i} and {}", i + 1)));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.cubes[0].n
    }

    /// `R|_F` on the face `(a, b)` of `[0,1]^n`.
    pub fn restrict(&self, a: usize, b: usize) -> Result<Ray> {
        let top = 1 << self.n();
        Ray::new(
            self.cubes.iter().map(|c| c.restrict(a, b)).collect::<Result<_>>()?,
            self.maps.iter().map(|m| m.restrict(a, b | top)).collect::<Result<_>>()?,
            self.tail.clone(),
        )
    }

    /// `id + ⊕ Fᵢ : ⊕_{i<N} Aᵢ → ⊕_{i≤N} Aᵢ`.
    pub fn structure_map(&self) -> Result<Cube> {
        let n = self.n();
        let nn = self.cubes.len();
        let gf = self.cubes[0].gf;
        let sum = |k: usize| -> Result<Cube> {
            let mut c = Cube { gf, n, modulus: self.cubes[0].modulus, degrees: vec![Vec::new(); 1 << n], maps: BTreeMap::new() };
            for a in &self.cubes[..k] {
                c = c.direct_sum(a)?;
            }
            Ok(c)
        };
        let (src, tgt) = (sum(nn - 1)?, sum(nn)?);
        let top = 1 << n;
        let mut degrees = src.degrees.clone();
        degrees.extend(tgt.degrees.iter().cloned());
        let mut maps = BTreeMap::new();
        for (&(x, y), m) in &src.maps {
            maps.insert((x, y), m.clone());
        }
        for (&(x, y), m) in &tgt.maps {
            maps.insert((x | top, y | top), m.clone());
        }
        for (x, y) in faces(n) {
            let mut m = zero_mat(gf, tgt.dim_at(y), src.dim_at(x));
            let (mut r0, mut c0) = (0, 0);
            for i in 0..nn - 1 {
                let ci = &self.cubes[i];
                if x == y {
                    put_block(&mut m, &ident(gf, ci.dim_at(x)), r0, c0, 1);
                }
                put_block(&mut m, &self.maps[i].map(x, y | top), r0 + ci.dim_at(y), c0, 1);
                r0 += ci.dim_at(y);
                c0 += ci.dim_at(x);
            }
            if !is_zero_mat(&m) {
                maps.insert((x, y | top), m);
            }
        }
        Cube::new(gf, n + 1, self.cubes[0].modulus, degrees, maps)
    }

    /// `tel R = cone_{n+1}(id + ⊕ Fᵢ)` on the stored prefix.
    pub fn telescope(&self) -> Result<Cube> {
        self.structure_map()?.cone(self.n() + 1)
    }

    /// Queries about the infinite ray need a known tail.
    pub fn require_tail(&self) -> Result<&Tail> {
        match self.tail {
            Tail::Unknown => Err(Error::Indeterminate("prefix too short: the tail behavior is unknown".into())),
            ref t => Ok(t),
        }
    }
}

// ---------------------------------------------------------------------------
// Homology

fn columns_of_degree(c: &Cube, k: i64) -> Vec<usize> {
    (0..c.dim_at(0)).filter(|&i| c.degrees[0][i] == reduce(k, c.modulus)).collect()
}

fn rank_of(gf: GroundField, m: Mat) -> usize {
    linalg::rank(&Nov(gf), m)
}

fn degree_range(c: &Cube) -> Vec<i64> {
    let mut ds: Vec<i64> = c.degrees[0].clone();
    ds.sort_unstable();
    ds.dedup();
    ds
}

/// Betti numbers over `Λ` of a 0-cube, per occurring degree.
pub fn homology_dims(c: &Cube) -> Result<BTreeMap<i64, usize>> {
    if c.n != 0 {
        return Err(Error::Schema("homology is taken of complexes; apply total() first".into()));
    }
    let d = c.differential(0);
    let gf = c.gf;
    let rank_from = |k: i64| {
        let cols = columns_of_degree(c, k);
        rank_of(gf, d.iter().map(|r| cols.iter().map(|&j| r[j].clone()).collect()).collect())
    };
    let mut out = BTreeMap::new();
    for k in degree_range(c) {
        let gens = columns_of_degree(c, k).len();
        let h = gens - rank_from(k) - rank_from(k - 1);
        out.insert(k, h);
    }
    Ok(out)
}

pub fn is_acyclic(c: &Cube) -> Result<bool> {
    Ok(homology_dims(c)?.values().all(|&h| h == 0))
}

/// Elementary-divisor exponents of the differential over `Λ≥0`, by valuation
/// pivoting. Entries of valuation `≥ precision` count as zero.
pub fn torsion_exponents(c: &Cube, precision: Option<&BigRational>) -> Result<Vec<BigRational>> {
    if c.n != 0 {
        return Err(Error::Schema("torsion exponents are taken of complexes".into()));
    }
    let mut m = c.differential(0);
    let dead = |x: &Lam| x.is_zero() || precision.is_some_and(|p| x.valuation().is_none_or(|v| &v >= p));
    let mut out = Vec::new();
    let (mut rows, mut cols): (Vec<usize>, Vec<usize>) = ((0..m.len()).collect(), (0..c.dim_at(0)).collect());
    loop {
        let mut best: Option<(usize, usize, BigRational)> = None;
        for &i in &rows {
            for &j in &cols {
                if !dead(&m[i][j]) {
                    let v = m[i][j].valuation().expect("nonzero");
                    if best.as_ref().is_none_or(|(_, _, b)| &v < b) {
                        best = Some((i, j, v));
                    }
                }
            }
        }
        let Some((pi, pj, v)) = best else { break };
        let inv = m[pi][pj].inv().expect("nonzero pivot");
        for &i in &rows {
            if i != pi && !m[i][pj].is_zero() {
                let f = m[i][pj].mul(&inv);
                for &j in &cols {
                    let t = f.mul(&m[pi][j]);
                    m[i][j] = m[i][j].sub(&t);
                }
            }
        }
        rows.retain(|&i| i != pi);
        cols.retain(|&j| j != pj);
        out.push(v);
    }
    out.sort();
    Ok(out)
}

/// Rank of the map induced on degree-`k` homology by a chain map `f: A → B` (0-cubes).
pub fn induced_rank(a: &Cube, b: &Cube, f: &Mat, k: i64) -> usize {
    let gf = a.gf;
    let nv = Nov(gf);
    let ka = columns_of_degree(a, k);
    let da = a.differential(0);
    let restricted: Mat = da.iter().map(|r| ka.iter().map(|&j| r[j].clone()).collect()).collect();
    let cycles = linalg::kernel(&nv, restricted, ka.len());
    let kb = columns_of_degree(b, k);
    let db = b.differential(0);
    // Boundaries in degree k of B, as vectors over the degree-k generators.
    let src = columns_of_degree(b, k - 1);
    let bounds: Mat = src.iter().map(|&j| kb.iter().map(|&i| db[i][j].clone()).collect()).collect();
    let images: Mat = cycles
        .iter()
        .map(|z| kb.iter().map(|&i| ka.iter().enumerate().fold(Lam::zero(gf), |acc, (t, &j)| acc.add(&f[i][j].mul(&z[t])))).collect())
        .collect();
    let base = rank_of(gf, bounds.clone());
    let both: Mat = bounds.into_iter().chain(images).collect();
    rank_of(gf, both) - base
}

/// Rank bookkeeping of `0 → B[−1] → co Φ → A → 0` per degree.
#[derive(Clone, Debug, Serialize)]
pub struct LesReport {
    pub degrees: Vec<i64>,
    pub source: Vec<usize>,
    pub target: Vec<usize>,
    pub cocone: Vec<usize>,
    pub induced: Vec<usize>,
    /// `dim H^k(co Φ) = dim coker Φ_*^{k−1} + dim ker Φ_*^k` in every degree.
    pub exact: bool,
}

/// `co Φ` for a chain map `Φ` (a 1-cube) with the long exact sequence checked by ranks.
pub fn relative_pair_complex(phi: &Cube) -> Result<(Cube, LesReport)> {
    if phi.n != 1 {
        return Err(Error::Schema("the relative complex needs a 1-cube".into()));
    }
    phi.validate()?;
    let co = phi.cocone(1)?;
    let (a, b) = (phi.side(1, 0)?, phi.side(1, 1)?);
    let f = phi.map(0, 1);
    let (ha, hb, hc) = (homology_dims(&a)?, homology_dims(&b)?, homology_dims(&co)?);
    let mut degrees: Vec<i64> = ha.keys().chain(hb.keys()).chain(hc.keys()).copied().collect();
    for d in hb.keys() {
        degrees.push(reduce(d + 1, phi.modulus));
    }
    degrees.sort_unstable();
    degrees.dedup();
    let get = |m: &BTreeMap<i64, usize>, k: i64| m.get(&reduce(k, phi.modulus)).copied().unwrap_or(0);
    let rank = |k: i64| induced_rank(&a, &b, &f, reduce(k, phi.modulus));
    let mut rep = LesReport { degrees: degrees.clone(), source: vec![], target: vec![], cocone: vec![], induced: vec![], exact: true };
    for &k in &degrees {
        let (rk, rk1) = (rank(k), rank(k - 1));
        let expected = (get(&hb, k - 1) - rk1) + (get(&ha, k) - rk);
        rep.source.push(get(&ha, k));
        rep.target.push(get(&hb, k));
        rep.cocone.push(get(&hc, k));
        rep.induced.push(rk);
        rep.exact &= expected == get(&hc, k);
    }
    Ok((co, rep))
}

// ---------------------------------------------------------------------------
// Cochains of cell complexes

/// Cellular cochains of a subcomplex `z` as a 0-cube (cells of `z` in index order).
pub fn cochain_complex(gf: GroundField, cx: &CellComplex, z: &CellSet) -> Result<Cube> {
    let cells: Vec<usize> = (0..cx.len()).filter(|&c| z[c]).collect();
    let mut pos = vec![usize::MAX; cx.len()];
    for (i, &c) in cells.iter().enumerate() {
        pos[c] = i;
    }
    let mut d = zero_mat(gf, cells.len(), cells.len());
    for (j, &c) in cells.iter().enumerate() {
        for &(t, s) in cx.cofaces(c) {
            if z[t] {
                d[pos[t]][j] = d[pos[t]][j].add(&Lam::from_i64(gf, s));
            }
        }
    }
    Cube::complex(gf, 0, cells.iter().map(|&c| cx.dim(c) as i64).collect(), d)
}

/// Restriction of cochains from `z` to a subcomplex `w ⊆ z`, as a 1-cube.
pub fn restriction_cube(gf: GroundField, cx: &CellComplex, z: &CellSet, w: &CellSet) -> Result<Cube> {
    if (0..cx.len()).any(|c| w[c] && !z[c]) {
        return Err(Error::Schema("restriction target is not contained in the source".into()));
    }
    let (cz, cw) = (cochain_complex(gf, cx, z)?, cochain_complex(gf, cx, w)?);
    let zc: Vec<usize> = (0..cx.len()).filter(|&c| z[c]).collect();
    let wc: Vec<usize> = (0..cx.len()).filter(|&c| w[c]).collect();
    let m: Mat = wc.iter().map(|c| zc.iter().map(|d| if c == d { Lam::one(gf) } else { Lam::zero(gf) }).collect()).collect();
    Cube::new(
        gf,
        1,
        0,
        vec![cz.degrees[0].clone(), cw.degrees[0].clone()],
        BTreeMap::from([((0, 0), cz.differential(0)), ((1, 1), cw.differential(0)), ((0, 1), m)]),
    )
}

/// The strictly commuting square of restrictions `X → U, X → V, U → U∩V, V → U∩V`
/// as a 2-cube (direction 1: towards `U`, direction 2: towards `V`).
pub fn cover_square(gf: GroundField, cx: &CellComplex, u: &CellSet, v: &CellSet) -> Result<Cube> {
    let full = cx.full();
    let uv: CellSet = u.iter().zip(v).map(|(a, b)| *a && *b).collect();
    let sets = [&full, u, v, &uv];
    let cochains: Vec<Cube> = sets.iter().map(|s| cochain_complex(gf, cx, s)).collect::<Result<_>>()?;
    let restr = |from: usize, to: usize| restriction_cube(gf, cx, sets[from], sets[to]).map(|c| c.map(0, 1));
    let mut maps = BTreeMap::new();
    for (i, c) in cochains.iter().enumerate() {
        maps.insert((i, i), c.differential(0));
    }
    maps.insert((0, 1), restr(0, 1)?);
    maps.insert((0, 2), restr(0, 2)?);
    maps.insert((1, 3), restr(1, 3)?);
    maps.insert((2, 3), restr(2, 3)?);
    Cube::new(gf, 2, 0, cochains.iter().map(|c| c.degrees[0].clone()).collect(), maps)
}

/// Mayer–Vietoris check for a two-set cover: the cone of `L: co(X → 0) → Q`
/// is acyclic, and `H*(Q)` assembled from the pullback sequence.
#[derive(Clone, Debug, Serialize)]
pub struct MayerVietorisReport {
    pub cone_acyclic: bool,
    pub les: LesReport,
    /// `dim H^k(Q)` for `k = 0, 1, 2, …`.
    pub pullback_dims: Vec<usize>,
}

pub fn mayer_vietoris(gf: GroundField, cx: &CellComplex, u: &CellSet, v: &CellSet) -> Result<MayerVietorisReport> {
    if (0..cx.len()).any(|c| !u[c] && !v[c]) {
        return Err(Error::Schema("the two sets do not cover the complex".into()));
    }
    let sq = cover_square(gf, cx, u, v)?;
    let l = fold_cocone(&sq)?;
    let cone_acyclic = is_acyclic(&l.cone(1)?)?;
    // B ⊕ C → D from the folded square's right edge.
    let phi = sum_into(&sq.restrict(1, 3)?, &sq.restrict(2, 3)?)?;
    let (q, les) = relative_pair_complex(&phi)?;
    let hq = homology_dims(&q)?;
    let top = cx.max_dim() as i64;
    Ok(MayerVietorisReport { cone_acyclic, les, pullback_dims: (0..=top).map(|k| hq.get(&k).copied().unwrap_or(0)).collect() })
}

// ---------------------------------------------------------------------------
// Classical and weighted complexes

/// A based complex with an action value per generator and a differential over
/// the ground field that never decreases action.
#[derive(Clone, Debug)]
pub struct FilteredComplex {
    pub gf: GroundField,
    pub degrees: Vec<i64>,
    pub actions: Vec<BigRational>,
    pub classical: Mat,
}

#[derive(Clone, Debug, Serialize)]
pub struct IsoReport {
    pub intertwines: bool,
    pub roundtrip: bool,
    pub classical_dims: BTreeMap<i64, usize>,
    pub weighted_dims: BTreeMap<i64, usize>,
}

impl FilteredComplex {
    /// Weighted differential: the entry `x → y` becomes `c·T^{𝒜(y) − 𝒜(x)}`.
    pub fn weighted(&self) -> Result<Mat> {
        let n = self.degrees.len();
        let mut out = zero_mat(self.gf, n, n);
        for (i, row) in self.classical.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                if x.is_zero() {
                    continue;
                }
                let e = &self.actions[i] - &self.actions[j];
                if e.is_negative() {
                    return Err(Error::Invariant(format!("generator {j} → {i} decreases action by {}", -e)));
                }
                out[i][j] = x.mul(&Lam::t_pow(self.gf, e));
            }
        }
        Ok(out)
    }

    /// `Φ = diag(T^{−𝒜(x)})` and its inverse.
    pub fn conjugation(&self) -> (Mat, Mat) {
        let n = self.degrees.len();
        let (mut c, mut ci) = (zero_mat(self.gf, n, n), zero_mat(self.gf, n, n));
        for i in 0..n {
            c[i][i] = Lam::t_pow(self.gf, -self.actions[i].clone());
            ci[i][i] = Lam::t_pow(self.gf, self.actions[i].clone());
        }
        (c, ci)
    }

    /// Checks `Φ ∘ d_w = d_cl ∘ Φ`, `Φ⁻¹Φ = 1` and equal homology over `Λ`.
    pub fn compare(&self) -> Result<IsoReport> {
        let n = self.degrees.len();
        let dw = self.weighted()?;
        let (c, ci) = self.conjugation();
        let gf = self.gf;
        let intertwines = mul(gf, &c, &dw, n) == mul(gf, &self.classical, &c, n);
        let roundtrip = mul(gf, &ci, &c, n) == ident(gf, n);
        let cl = Cube::complex(gf, 0, self.degrees.clone(), self.classical.clone())?;
        let w = Cube::complex(gf, 0, self.degrees.clone(), dw)?;
        Ok(IsoReport { intertwines, roundtrip, classical_dims: homology_dims(&cl)?, weighted_dims: homology_dims(&w)? })
    }
}

/// A random filtered complex: action-respecting pairs conjugated by random
/// action-filtered, degree-preserving unipotent changes of basis.
pub fn random_filtered_complex(gf: GroundField, gens: usize, seed: u64) -> FilteredComplex {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let degrees: Vec<i64> = (0..gens).map(|_| rng.gen_range(0..3)).collect();
    let actions: Vec<BigRational> = (0..gens).map(|_| rat(rng.gen_range(0..8), rng.gen_range(1..3))).collect();
    let unit = |rng: &mut ChaCha8Rng| Lam::from_i64(gf, if gf == GroundField::F2 { 1 } else { [1, -1, 2][rng.gen_range(0..3)] });
    let mut d = zero_mat(gf, gens, gens);
    let mut used = vec![false; gens];
    for x in 0..gens {
        for y in 0..gens {
            if !used[x] && !used[y] && x != y && degrees[y] == degrees[x] + 1 && actions[y] >= actions[x] && rng.gen_bool(0.6) {
                d[y][x] = unit(&mut rng);
                used[x] = true;
                used[y] = true;
            }
        }
    }
    for _ in 0..2 * gens {
        let (i, j) = (rng.gen_range(0..gens), rng.gen_range(0..gens));
        if i != j && degrees[i] == degrees[j] && actions[i] >= actions[j] {
            conjugate_elementary(&mut d, i, j, &unit(&mut rng));
        }
    }
    FilteredComplex { gf, degrees, actions, classical: d }
}

/// `d ← E d E⁻¹` for `E = 1 + c·e_{ij}`.
fn conjugate_elementary(d: &mut Mat, i: usize, j: usize, c: &Lam) {
    let rowj = d[j].clone();
    for (x, y) in d[i].iter_mut().zip(&rowj) {
        if !y.is_zero() {
            *x = x.add(&c.mul(y));
        }
    }
    for row in d.iter_mut() {
        if !row[i].is_zero() {
            let t = c.mul(&row[i]);
            row[j] = row[j].sub(&t);
        }
    }
}

// ---------------------------------------------------------------------------
// Random cubes

/// Coefficient regime for random data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Coefficients {
    /// Constants over F₂.
    F2,
    /// Finite `T`-polynomials with nonnegative exponents over Q.
    TPoly,
}

fn random_coeff(rng: &mut ChaCha8Rng, mode: Coefficients) -> Lam {
    match mode {
        Coefficients::F2 => Lam::one(GroundField::F2),
        Coefficients::TPoly => {
            let gf = GroundField::Q;
            let terms = (0..rng.gen_range(1..3))
                .map(|_| (rat(rng.gen_range(0..4), 2), rat([1, -1, 2, -3][rng.gen_range(0..4)], 1)))
                .collect();
            Lam::from_poly(Poly::from_terms(gf, terms))
        }
    }
}

/// A random `k`-coniform complex with `d² = 0`: `pairs` cancelling pairs
/// `x → y` with block `t_x ⊆ t_y`, one unpaired generator, then mixed by random
/// block-filtered, degree-preserving unipotent changes of basis.
pub fn random_coniform(k: usize, pairs: usize, mode: Coefficients, seed: u64) -> Coniform {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gf = match mode {
        Coefficients::F2 => GroundField::F2,
        Coefficients::TPoly => GroundField::Q,
    };
    let nb = 1usize << k;
    // (block, degree, partner)
    let mut raw: Vec<(usize, i64, Option<usize>)> = Vec::new();
    for _ in 0..pairs {
        let ty = rng.gen_range(0..nb);
        let tx = ty & rng.gen_range(0..nb);
        let deg = if rng.gen_bool(0.25) { -1 } else { 0 };
        raw.push((tx, deg, Some(raw.len() + 1)));
        raw.push((ty, deg + 1, None));
    }
    raw.push((rng.gen_range(0..nb), rng.gen_range(-1..2), None));
    // Generators are ordered by block.
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by_key(|&i| raw[i].0);
    let mut pos = vec![0; raw.len()];
    for (p, &i) in order.iter().enumerate() {
        pos[i] = p;
    }
    let tag: Vec<usize> = order.iter().map(|&i| raw[i].0).collect();
    let degrees: Vec<i64> = order.iter().map(|&i| raw[i].1).collect();
    let g = tag.len();
    let mut d = zero_mat(gf, g, g);
    for (i, &(_, _, partner)) in raw.iter().enumerate() {
        if let Some(j) = partner {
            d[pos[j]][pos[i]] = random_coeff(&mut rng, mode);
        }
    }
    for _ in 0..8 * g {
        let (i, j) = (rng.gen_range(0..g), rng.gen_range(0..g));
        if i != j && degrees[i] == degrees[j] && tag[j] & !tag[i] == 0 {
            conjugate_elementary(&mut d, i, j, &random_coeff(&mut rng, mode));
        }
    }
    let sizes = (0..nb).map(|t| tag.iter().filter(|&&x| x == t).count()).collect();
    let cube = Cube::raw(gf, 0, 0, vec![degrees], BTreeMap::from([((0, 0), d)])).expect("well-formed");
    Coniform { k, cube, blocks: vec![sizes] }
}

/// A random validated `n`-cube: the coniform inverse of a random coniform complex.
pub fn random_cube(n: usize, mode: Coefficients, seed: u64) -> Result<Cube> {
    random_coniform(n, (n + 2).min(5), mode, seed).inverse()
}

/// Multiplies every map across the last direction by `T^c`.
pub fn weight_last_direction(c: &Cube, w: &BigRational) -> Cube {
    let top = 1 << (c.n - 1);
    let t = Lam::t_pow(c.gf, w.clone());
    let mut out = c.clone();
    for ((a, b), m) in out.maps.iter_mut() {
        if (b ^ a) & top != 0 {
            *m = m.iter().map(|r| r.iter().map(|x| x.mul(&t)).collect()).collect();
        }
    }
    out
}

/// A ray prefix starting with a random map, followed by `T^c`-weighted identities.
pub fn random_ray(n: usize, len: usize, c: &BigRational, mode: Coefficients, seed: u64) -> Result<Ray> {
    let first = random_cube(n + 1, mode, seed)?;
    let (a, b) = (first.side(n + 1, 0)?, first.side(n + 1, 1)?);
    let mut cubes = vec![a, b.clone()];
    let mut maps = vec![first];
    let step = weight_last_direction(&identity_map(&b)?, c);
    while cubes.len() < len {
        cubes.push(b.clone());
        maps.push(step.clone());
    }
    let tail = if c.is_zero() { Tail::Stabilized } else { Tail::Contracting { c: c.clone() } };
    Ray::new(cubes, maps, tail)
}

// ---------------------------------------------------------------------------
// Documents

/// Structured-text cube schema; matrix entries are Novikov field elements in text form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CubeDoc {
    #[serde(default = "default_field")]
    pub field: String,
    #[serde(default)]
    pub modulus: i64,
    pub n: usize,
    /// Generator degrees per vertex bitmask.
    pub degrees: Vec<Vec<i64>>,
    #[serde(default)]
    pub maps: Vec<FaceMapDoc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaceMapDoc {
    pub from: usize,
    pub to: usize,
    pub matrix: Vec<Vec<String>>,
}

fn default_field() -> String {
    "F2".into()
}

impl CubeDoc {
    /// Parses and validates.
    pub fn build(&self) -> Result<Cube> {
        let c = self.build_unchecked()?;
        c.validate()?;
        Ok(c)
    }

    /// Parses with shape checks only.
    pub fn build_unchecked(&self) -> Result<Cube> {
        let gf = GroundField::parse(&self.field)?;
        let mut maps = BTreeMap::new();
        for f in &self.maps {
            let m: Mat = f.matrix.iter().map(|r| r.iter().map(|x| Lam::parse(gf, x)).collect::<Result<_>>()).collect::<Result<_>>()?;
            if maps.insert((f.from, f.to), m).is_some() {
                return Err(Error::Schema(format!("face ({}, {}) listed twice", f.from, f.to)));
            }
        }
        Cube::raw(gf, self.n, self.modulus, self.degrees.clone(), maps)
    }
}

impl Cube {
    pub fn to_doc(&self) -> CubeDoc {
        CubeDoc {
            field: self.gf.to_string(),
            modulus: self.modulus,
            n: self.n,
            degrees: self.degrees.clone(),
            maps: self
                .maps
                .iter()
                .map(|(&(from, to), m)| FaceMapDoc { from, to, matrix: m.iter().map(|r| r.iter().map(|x| x.to_string()).collect()).collect() })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailDoc {
    Stabilized,
    Contracting { c: String },
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RayDoc {
    pub cubes: Vec<CubeDoc>,
    pub maps: Vec<CubeDoc>,
    pub tail: TailDoc,
}

impl RayDoc {
    pub fn build(&self) -> Result<Ray> {
        let tail = match &self.tail {
            TailDoc::Stabilized => Tail::Stabilized,
            TailDoc::Unknown => Tail::Unknown,
            TailDoc::Contracting { c } => {
                let c = crate::field::parse_rational(c)?;
                if !c.is_positive() {
                    return Err(Error::Schema("a contracting tail needs c > 0".into()));
                }
                Tail::Contracting { c }
            }
        };
        Ray::new(
            self.cubes.iter().map(CubeDoc::build).collect::<Result<_>>()?,
            self.maps.iter().map(CubeDoc::build).collect::<Result<_>>()?,
            tail,
        )
    }
}

impl Ray {
    pub fn to_doc(&self) -> RayDoc {
        RayDoc {
            cubes: self.cubes.iter().map(Cube::to_doc).collect(),
            maps: self.maps.iter().map(Cube::to_doc).collect(),
            tail: match &self.tail {
                Tail::Stabilized => TailDoc::Stabilized,
                Tail::Unknown => TailDoc::Unknown,
                Tail::Contracting { c } => TailDoc::Contracting { c: c.to_string() },
            },
        }
    }
}
