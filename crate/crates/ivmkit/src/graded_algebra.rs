//! Finite-dimensional graded skew-commutative unital algebras over the Novikov field,
//! given by structure constants on a basis of homogeneous elements.

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, GroundField};
use crate::linalg::Echelon;
use crate::novikov::{Lam, Nov};

/// Dense coordinates of an algebra element.
pub type Elem = Vec<Lam>;

/// Sparse product of two basis elements: `(k, c)` pairs.
type Product = Vec<(usize, Lam)>;

#[derive(Debug)]
pub struct GradedAlgebra {
    pub field: GroundField,
    /// 0 for Z-graded, otherwise an even modulus.
    pub modulus: i64,
    pub labels: Vec<String>,
    pub degrees: Vec<i64>,
    pub unit: usize,
    /// Designated top class of a Poincaré-duality model.
    pub top: Option<usize>,
    table: Vec<Vec<Product>>,
    components: BTreeMap<i64, Vec<usize>>,
    generators: OnceLock<Vec<usize>>,
}

impl Clone for GradedAlgebra {
    fn clone(&self) -> Self {
        GradedAlgebra {
            field: self.field,
            modulus: self.modulus,
            labels: self.labels.clone(),
            degrees: self.degrees.clone(),
            unit: self.unit,
            top: self.top,
            table: self.table.clone(),
            components: self.components.clone(),
            generators: OnceLock::new(),
        }
    }
}

impl PartialEq for GradedAlgebra {
    fn eq(&self, o: &Self) -> bool {
        self.field == o.field
            && self.modulus == o.modulus
            && self.labels == o.labels
            && self.degrees == o.degrees
            && self.unit == o.unit
            && self.table == o.table
    }
}

fn reduce_degree(d: i64, modulus: i64) -> i64 {
    if modulus == 0 {
        d
    } else {
        d.rem_euclid(modulus)
    }
}

fn koszul(a: i64, b: i64) -> i64 {
    if a.rem_euclid(2) == 1 && b.rem_euclid(2) == 1 {
        -1
    } else {
        1
    }
}

/// Bitmask subsets of `{0..n}` in exterior basis order: by size, then lexicographically.
pub fn exterior_order(n: usize) -> Vec<u32> {
    let mut subsets: Vec<u32> = (0..1u32 << n).collect();
    subsets.sort_by_key(|&s| {
        let idx: Vec<u32> = (0..n as u32).filter(|b| s >> b & 1 == 1).collect();
        (s.count_ones(), idx)
    });
    subsets
}

impl GradedAlgebra {
    /// Validated constructor. Products are `(i, j, k, c)` meaning `e_i e_j ∋ c e_k`.
    ///
    /// Products with the unit may be omitted, and a pair `(i, j)` given without
    /// `(j, i)` is completed by skew-commutativity.
    pub fn build(
        field: GroundField,
        modulus: i64,
        labels: Vec<String>,
        degrees: Vec<i64>,
        unit: usize,
        top: Option<usize>,
        products: Vec<(usize, usize, usize, Lam)>,
    ) -> Result<GradedAlgebra> {
        let n = labels.len();
        if degrees.len() != n {
            return Err(Error::Schema("labels and degrees differ in length".into()));
        }
        if modulus < 0 || modulus % 2 != 0 {
            return Err(Error::Schema(format!("modulus {modulus} must be 0 or even")));
        }
        if unit >= n || top.is_some_and(|t| t >= n) {
            return Err(Error::Schema("unit or top index out of range".into()));
        }
        let nov = Nov(field);
        let degrees: Vec<i64> = degrees.into_iter().map(|d| reduce_degree(d, modulus)).collect();
        let mut given = vec![vec![false; n]; n];
        let mut table: Vec<Vec<Product>> = vec![vec![Vec::new(); n]; n];
        for (i, j, k, c) in products {
            if i >= n || j >= n || k >= n {
                return Err(Error::Schema(format!("product ({i},{j},{k}) out of range")));
            }
            if c.gf() != field {
                return Err(Error::Schema("coefficient over the wrong ground field".into()));
            }
            given[i][j] = true;
            add_term(&nov, &mut table[i][j], k, &c);
        }
        for i in 0..n {
            for j in 0..n {
                if given[i][j] && !given[j][i] {
                    let s = koszul(degrees[i], degrees[j]);
                    let prod: Product =
                        table[i][j].iter().map(|(k, c)| (*k, c.mul(&nov.from_i64(s)))).collect();
                    table[j][i] = prod;
                    given[j][i] = true;
                }
            }
        }
        for i in 0..n {
            if !given[unit][i] {
                table[unit][i] = vec![(i, nov.one())];
            }
            if !given[i][unit] {
                table[i][unit] = vec![(i, nov.one())];
            }
        }
        let alg = GradedAlgebra::from_table(field, modulus, labels, degrees, unit, top, table);
        alg.validate()?;
        Ok(alg)
    }

    fn from_table(
        field: GroundField,
        modulus: i64,
        labels: Vec<String>,
        degrees: Vec<i64>,
        unit: usize,
        top: Option<usize>,
        table: Vec<Vec<Product>>,
    ) -> GradedAlgebra {
        let mut components: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
        for (i, d) in degrees.iter().enumerate() {
            components.entry(*d).or_default().push(i);
        }
        GradedAlgebra {
            field,
            modulus,
            labels,
            degrees,
            unit,
            top,
            table,
            components,
            generators: OnceLock::new(),
        }
    }

    /// Checks degree additivity, unit laws, skew-commutativity and associativity
    /// on the basis, naming the first offending pair or triple.
    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        let nov = self.nov();
        for i in 0..n {
            for j in 0..n {
                let d = self.reduce(self.degrees[i] + self.degrees[j]);
                for (k, _) in &self.table[i][j] {
                    if self.degrees[*k] != d {
                        return Err(Error::Invariant(format!(
                            "degree additivity fails for ({}, {}) -> {}",
                            self.labels[i], self.labels[j], self.labels[*k]
                        )));
                    }
                }
                let s = nov.from_i64(koszul(self.degrees[i], self.degrees[j]));
                let flipped: Elem = self.basis_product(j, i).iter().map(|c| c.mul(&s)).collect();
                if self.basis_product(i, j) != flipped {
                    return Err(Error::Invariant(format!(
                        "skew-commutativity fails for ({}, {})",
                        self.labels[i], self.labels[j]
                    )));
                }
            }
            if self.basis_product(self.unit, i) != self.basis(i) || self.basis_product(i, self.unit) != self.basis(i) {
                return Err(Error::Invariant(format!("unit law fails for {}", self.labels[i])));
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if self.table[i][j].is_empty() && self.table[j][k].is_empty() {
                        continue;
                    }
                    let left = self.mul(&self.basis_product(i, j), &self.basis(k));
                    let right = self.mul(&self.basis(i), &self.basis_product(j, k));
                    if left != right {
                        return Err(Error::Invariant(format!(
                            "associativity fails for ({}, {}, {})",
                            self.labels[i], self.labels[j], self.labels[k]
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn nov(&self) -> Nov {
        Nov(self.field)
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn reduce(&self, d: i64) -> i64 {
        reduce_degree(d, self.modulus)
    }

    /// Degree → basis indices, in basis order.
    pub fn components(&self) -> &BTreeMap<i64, Vec<usize>> {
        &self.components
    }

    pub fn component(&self, d: i64) -> &[usize] {
        self.components.get(&self.reduce(d)).map_or(&[], |v| v.as_slice())
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn zero(&self) -> Elem {
        vec![Lam::zero(self.field); self.dim()]
    }

    pub fn basis(&self, i: usize) -> Elem {
        let mut v = self.zero();
        v[i] = Lam::one(self.field);
        v
    }

    pub fn one(&self) -> Elem {
        self.basis(self.unit)
    }

    pub fn top_elem(&self) -> Option<Elem> {
        self.top.map(|t| self.basis(t))
    }

    pub fn basis_product_sparse(&self, i: usize, j: usize) -> &[(usize, Lam)] {
        &self.table[i][j]
    }

    pub fn basis_product(&self, i: usize, j: usize) -> Elem {
        let mut v = self.zero();
        for (k, c) in &self.table[i][j] {
            v[*k] = c.clone();
        }
        v
    }

    pub fn mul(&self, x: &[Lam], y: &[Lam]) -> Elem {
        let mut out = self.zero();
        for (i, a) in x.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in y.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                let ab = a.mul(b);
                for (k, c) in &self.table[i][j] {
                    out[*k] = out[*k].add(&ab.mul(c));
                }
            }
        }
        out
    }

    /// Degree of a nonzero homogeneous element; `Ok(None)` for zero.
    pub fn degree_of(&self, x: &[Lam]) -> Result<Option<i64>> {
        let mut deg = None;
        for (i, c) in x.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            match deg {
                None => deg = Some(self.degrees[i]),
                Some(d) if d != self.degrees[i] => {
                    return Err(Error::Schema("element is not homogeneous".into()));
                }
                _ => {}
            }
        }
        Ok(deg)
    }

    /// A minimal set of basis elements generating the algebra, chosen greedily in degree order.
    pub fn generators(&self) -> &[usize] {
        self.generators.get_or_init(|| {
            let nov = self.nov();
            let n = self.dim();
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by_key(|&i| (self.degrees[i], i));
            let mut gens: Vec<usize> = Vec::new();
            let mut span = Echelon::from_rows(&nov, n, &[self.one()]);
            for &i in &order {
                if span.contains(&nov, &self.basis(i)) {
                    continue;
                }
                gens.push(i);
                // close the span under multiplication by the generators
                let mut frontier: Vec<Elem> = span.rows().to_vec();
                while let Some(v) = frontier.pop() {
                    for &g in &gens {
                        let w = self.mul(&v, &self.basis(g));
                        if span.insert(&nov, w.clone()) {
                            frontier.push(w);
                        }
                    }
                }
            }
            gens
        })
    }

    pub fn fmt_elem(&self, x: &[Lam]) -> String {
        let parts: Vec<String> = x
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| match c.as_constant() {
                Some(k) if k == num_rational::BigRational::from_integer(1.into()) => self.labels[i].clone(),
                _ => format!("({c})*{}", self.labels[i]),
            })
            .collect();
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ")
        }
    }

    /// `B^[i] = ⊕_{j ≡ i} A^j`; modulus 0 is the identity.
    pub fn regrade_mod(&self, modulus: i64) -> Result<GradedAlgebra> {
        if modulus == 0 {
            return Ok(self.clone());
        }
        if modulus < 0 || modulus % 2 != 0 {
            return Err(Error::Schema(format!("regrading modulus {modulus} must be even and positive")));
        }
        if self.modulus != 0 {
            return Err(Error::Schema("only Z-graded algebras can be regraded".into()));
        }
        let degrees = self.degrees.iter().map(|d| d.rem_euclid(modulus)).collect();
        Ok(GradedAlgebra::from_table(
            self.field,
            modulus,
            self.labels.clone(),
            degrees,
            self.unit,
            self.top,
            self.table.clone(),
        ))
    }

    /// Graded tensor product, `(a⊗b)(a'⊗b') = (−1)^{|b||a'|} aa'⊗bb'`, basis index `i·dim B + j`.
    pub fn tensor(&self, b: &GradedAlgebra) -> Result<GradedAlgebra> {
        if self.field != b.field {
            return Err(Error::Schema("tensor factors over different ground fields".into()));
        }
        let modulus = match (self.modulus, b.modulus) {
            (x, y) if x == y => x,
            (0, y) => y,
            (x, 0) => x,
            (x, y) => return Err(Error::Schema(format!("incompatible moduli {x} and {y}"))),
        };
        let (na, nb) = (self.dim(), b.dim());
        let idx = |i: usize, j: usize| i * nb + j;
        let mut labels = Vec::with_capacity(na * nb);
        let mut degrees = Vec::with_capacity(na * nb);
        for i in 0..na {
            for j in 0..nb {
                labels.push(format!("{}⊗{}", self.labels[i], b.labels[j]));
                degrees.push(reduce_degree(self.degrees[i] + b.degrees[j], modulus));
            }
        }
        let nov = self.nov();
        let mut table: Vec<Vec<Product>> = vec![vec![Vec::new(); na * nb]; na * nb];
        for i in 0..na {
            for j in 0..nb {
                for i2 in 0..na {
                    let pa = &self.table[i][i2];
                    if pa.is_empty() {
                        continue;
                    }
                    let sign = nov.from_i64(koszul(b.degrees[j], self.degrees[i2]));
                    for j2 in 0..nb {
                        let pb = &b.table[j][j2];
                        let cell = &mut table[idx(i, j)][idx(i2, j2)];
                        for (k, ca) in pa {
                            for (l, cb) in pb {
                                add_term(&nov, cell, idx(*k, *l), &ca.mul(cb).mul(&sign));
                            }
                        }
                    }
                }
            }
        }
        let top = match (self.top, b.top) {
            (Some(s), Some(t)) => Some(idx(s, t)),
            _ => None,
        };
        Ok(GradedAlgebra::from_table(self.field, modulus, labels, degrees, idx(self.unit, b.unit), top, table))
    }

    /// Inclusion of the `f`-th factor of an iterated tensor product of algebras with the given dims.
    pub fn factor_index(dims: &[usize], units: &[usize], f: usize, i: usize) -> usize {
        let mut idx = 0;
        for (k, d) in dims.iter().enumerate() {
            idx = idx * d + if k == f { i } else { units[k] };
        }
        idx
    }

    /// Exterior algebra on `n` degree-1 generators named by `names`.
    pub fn exterior(field: GroundField, names: &[String]) -> GradedAlgebra {
        let n = names.len();
        let subsets = exterior_order(n);
        let pos: BTreeMap<u32, usize> = subsets.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let label = |s: u32| -> String {
            if s == 0 {
                "1".into()
            } else {
                (0..n).filter(|b| s >> b & 1 == 1).map(|b| names[b].as_str()).collect::<Vec<_>>().join("")
            }
        };
        let nov = Nov(field);
        let labels = subsets.iter().map(|&s| label(s)).collect();
        let degrees = subsets.iter().map(|s| s.count_ones() as i64).collect();
        let mut table: Vec<Vec<Product>> = vec![vec![Vec::new(); 1 << n]; 1 << n];
        for (a, &s) in subsets.iter().enumerate() {
            for (b, &t) in subsets.iter().enumerate() {
                if s & t != 0 {
                    continue;
                }
                let mut inversions = 0;
                for i in 0..n {
                    if s >> i & 1 == 1 {
                        inversions += (t & ((1u32 << i) - 1)).count_ones();
                    }
                }
                let sign = if inversions % 2 == 0 { 1 } else { -1 };
                table[a][b] = vec![(pos[&(s | t)], nov.from_i64(sign))];
            }
        }
        let top = Some(pos[&((1u32 << n) - 1)]);
        GradedAlgebra::from_table(field, 0, labels, degrees, 0, top, table)
    }

    /// `H*(T^n)`, generators `e1..en`.
    pub fn torus(field: GroundField, n: usize) -> GradedAlgebra {
        let names: Vec<String> = (1..=n).map(|i| format!("e{i}")).collect();
        GradedAlgebra::exterior(field, &names)
    }

    /// `QH*(T^{2n}) = H*(T^{2n};Λ)` with generators `dp1..dpn, dq1..dqn`.
    pub fn qh_torus(field: GroundField, n: usize) -> GradedAlgebra {
        let names: Vec<String> =
            (1..=n).map(|i| format!("dp{i}")).chain((1..=n).map(|i| format!("dq{i}"))).collect();
        GradedAlgebra::exterior(field, &names)
    }

    /// `H*(CP^n) = F[h]/(h^{n+1})`, `|h| = 2`.
    pub fn cpn(field: GroundField, n: usize) -> GradedAlgebra {
        let nov = Nov(field);
        let labels = (0..=n)
            .map(|a| match a {
                0 => "1".to_string(),
                1 => "h".to_string(),
                _ => format!("h^{a}"),
            })
            .collect();
        let degrees = (0..=n as i64).map(|a| 2 * a).collect();
        let mut table: Vec<Vec<Product>> = vec![vec![Vec::new(); n + 1]; n + 1];
        for a in 0..=n {
            for b in 0..=n - a {
                table[a][b] = vec![(a + b, nov.one())];
            }
        }
        GradedAlgebra::from_table(field, 0, labels, degrees, 0, Some(n), table)
    }

    /// `QH*(S²) = Λ⟨1, h⟩`, graded mod 4, `h² = T·1`.
    pub fn qh_sphere(field: GroundField) -> GradedAlgebra {
        let nov = Nov(field);
        let t = Lam::t_pow(field, num_rational::BigRational::from_integer(1.into()));
        let table = vec![vec![vec![(0, nov.one())], vec![(1, nov.one())]], vec![vec![(1, nov.one())], vec![(0, t)]]];
        GradedAlgebra::from_table(field, 4, vec!["1".into(), "h".into()], vec![0, 2], 0, Some(1), table)
    }

    /// A point: the ground field in degree 0.
    pub fn point(field: GroundField) -> GradedAlgebra {
        let nov = Nov(field);
        GradedAlgebra::from_table(field, 0, vec!["1".into()], vec![0], 0, Some(0), vec![vec![vec![(0, nov.one())]]])
    }

    /// Parses `torus:2`, `cpn:3`, `qh_sphere`, `qh_torus:6`, `point`, and `*`-separated products.
    pub fn standard(field: GroundField, spec: &str) -> Result<GradedAlgebra> {
        let mut acc: Option<GradedAlgebra> = None;
        for part in spec.split('*') {
            let part = part.trim();
            let (name, arg) = match part.split_once(':') {
                Some((n, a)) => {
                    let v: usize = a.trim().parse().map_err(|_| Error::Schema(format!("bad parameter in {part:?}")))?;
                    (n.trim(), Some(v))
                }
                None => (part, None),
            };
            let alg = match (name, arg) {
                ("torus", Some(n)) if n <= 10 => GradedAlgebra::torus(field, n),
                ("cpn", Some(n)) => GradedAlgebra::cpn(field, n),
                ("qh_torus", Some(m)) if m % 2 == 0 && m <= 10 => GradedAlgebra::qh_torus(field, m / 2),
                ("qh_sphere", None) => GradedAlgebra::qh_sphere(field),
                ("point", None) => GradedAlgebra::point(field),
                _ => return Err(Error::Schema(format!("unknown or invalid model {part:?}"))),
            };
            acc = Some(match acc {
                None => alg,
                Some(a) => a.tensor(&alg)?,
            });
        }
        acc.ok_or_else(|| Error::Schema("empty model name".into()))
    }

    pub fn to_doc(&self) -> AlgebraDoc {
        let mut products = Vec::new();
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                for (k, c) in &self.table[i][j] {
                    products.push(ProductDoc { i, j, k: *k, coeff: c.to_string() });
                }
            }
        }
        AlgebraDoc {
            field: self.field.to_string(),
            modulus: self.modulus,
            basis: self
                .labels
                .iter()
                .zip(&self.degrees)
                .map(|(l, d)| BasisDoc { label: l.clone(), degree: *d })
                .collect(),
            unit: self.unit,
            top: self.top,
            products,
        }
    }
}

fn add_term(nov: &Nov, cell: &mut Product, k: usize, c: &Lam) {
    if c.is_zero() {
        return;
    }
    match cell.iter().position(|(kk, _)| *kk == k) {
        Some(p) => {
            let s = nov.add(&cell[p].1, c);
            if s.is_zero() {
                cell.remove(p);
            } else {
                cell[p].1 = s;
            }
        }
        None => {
            cell.push((k, c.clone()));
            cell.sort_by_key(|(kk, _)| *kk);
        }
    }
}

/// Structured-text algebra schema.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgebraDoc {
    #[serde(default = "default_field")]
    pub field: String,
    #[serde(default)]
    pub modulus: i64,
    pub basis: Vec<BasisDoc>,
    #[serde(default)]
    pub unit: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top: Option<usize>,
    #[serde(default)]
    pub products: Vec<ProductDoc>,
}

fn default_field() -> String {
    "F2".into()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisDoc {
    pub label: String,
    pub degree: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductDoc {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    #[serde(default = "default_coeff")]
    pub coeff: String,
}

fn default_coeff() -> String {
    "1".into()
}

impl AlgebraDoc {
    pub fn build(&self) -> Result<GradedAlgebra> {
        let field = GroundField::parse(&self.field)?;
        let mut products = Vec::with_capacity(self.products.len());
        for p in &self.products {
            products.push((p.i, p.j, p.k, Lam::parse(field, &p.coeff)?));
        }
        GradedAlgebra::build(
            field,
            self.modulus,
            self.basis.iter().map(|b| b.label.clone()).collect(),
            self.basis.iter().map(|b| b.degree).collect(),
            self.unit,
            self.top,
            products,
        )
    }
}

/// Degree-0 linear map between algebras; column `j` is the image of `e_j`.
#[derive(Clone, Debug)]
pub struct AlgebraMorphism {
    pub source: Arc<GradedAlgebra>,
    pub target: Arc<GradedAlgebra>,
    /// `matrix[i][j]`: coefficient of target `e_i` in the image of source `e_j`.
    pub matrix: Vec<Vec<Lam>>,
}

impl AlgebraMorphism {
    pub fn new(source: Arc<GradedAlgebra>, target: Arc<GradedAlgebra>, matrix: Vec<Vec<Lam>>) -> Result<Self> {
        if matrix.len() != target.dim() || matrix.iter().any(|r| r.len() != source.dim()) {
            return Err(Error::Schema("morphism matrix has the wrong shape".into()));
        }
        let m = AlgebraMorphism { source, target, matrix };
        for j in 0..m.source.dim() {
            if let Some(d) = m.target.degree_of(&m.image(&m.source.basis(j)))? {
                if d != m.target.reduce(m.source.degrees[j]) {
                    return Err(Error::Invariant(format!("morphism shifts the degree of {}", m.source.labels[j])));
                }
            }
        }
        Ok(m)
    }

    pub fn image(&self, x: &[Lam]) -> Elem {
        let mut out = self.target.zero();
        for (j, c) in x.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for (i, row) in self.matrix.iter().enumerate() {
                if !row[j].is_zero() {
                    out[i] = out[i].add(&c.mul(&row[j]));
                }
            }
        }
        out
    }

    /// Unital and multiplicative on basis pairs.
    pub fn is_multiplicative(&self) -> bool {
        if self.image(&self.source.one()) != self.target.one() {
            return false;
        }
        let n = self.source.dim();
        (0..n).all(|i| {
            (0..n).all(|j| {
                let lhs = self.image(&self.source.basis_product(i, j));
                let rhs = self.target.mul(&self.image(&self.source.basis(i)), &self.image(&self.source.basis(j)));
                lhs == rhs
            })
        })
    }

    /// Evaluation at the unit: `A → ground field`, killing positive degrees.
    pub fn augmentation(source: Arc<GradedAlgebra>) -> Result<Self> {
        let target = Arc::new(GradedAlgebra::point(source.field));
        let row = (0..source.dim())
            .map(|j| if j == source.unit { Lam::one(source.field) } else { Lam::zero(source.field) })
            .collect();
        AlgebraMorphism::new(source, target, vec![row])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::int;
    use proptest::prelude::*;

    const F2: GroundField = GroundField::F2;
    const Q: GroundField = GroundField::Q;

    fn dims(a: &GradedAlgebra) -> Vec<usize> {
        a.components().values().map(|v| v.len()).collect()
    }

    #[test]
    fn exterior_on_one_generator() {
        let a = GradedAlgebra::build(
            F2,
            0,
            vec!["1".into(), "a".into()],
            vec![0, 1],
            0,
            Some(1),
            vec![],
        )
        .unwrap();
        assert_eq!(a.dim(), 2);
        assert!(a.basis_product(1, 1).iter().all(|c| c.is_zero()));
    }

    #[test]
    fn qh_sphere_from_schema() {
        let doc: AlgebraDoc = serde_json::from_str(
            r#"{"field":"F2","modulus":4,"basis":[{"label":"1","degree":0},{"label":"h","degree":2}],
                "unit":0,"products":[{"i":1,"j":1,"k":0,"coeff":"T"}]}"#,
        )
        .unwrap();
        let a = doc.build().unwrap();
        assert_eq!(a, GradedAlgebra::qh_sphere(F2));
        let h = a.basis(1);
        let h3 = a.mul(&a.mul(&h, &h), &h);
        let th: Elem = h.iter().map(|c| c.mul(&Lam::t_pow(F2, int(1)))).collect();
        assert_eq!(h3, th);
    }

    #[test]
    fn torus_two_matches_hand_table() {
        let doc: AlgebraDoc = serde_json::from_str(
            r#"{"basis":[{"label":"1","degree":0},{"label":"a","degree":1},{"label":"b","degree":1},{"label":"ab","degree":2}],
                "products":[{"i":1,"j":2,"k":3}]}"#,
        )
        .unwrap();
        let a = doc.build().unwrap();
        let t = GradedAlgebra::torus(F2, 2);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(a.basis_product(i, j), t.basis_product(i, j));
            }
        }
    }

    #[test]
    fn build_rejects_bad_tables() {
        let mk = |products| {
            GradedAlgebra::build(Q, 0, vec!["1".into(), "a".into(), "b".into()], vec![0, 1, 2], 0, None, products)
        };
        // degree: a·a must land in degree 2, not 1
        let e = mk(vec![(1, 1, 1, Lam::one(Q))]).unwrap_err();
        assert!(e.to_string().contains("degree additivity"), "{e}");
        // odd square must vanish over Q
        let e = mk(vec![(1, 1, 2, Lam::one(Q))]).unwrap_err();
        assert!(e.to_string().contains("skew"), "{e}");
        // both orders given with the wrong sign
        let e = mk(vec![(1, 2, 1, Lam::one(Q)), (2, 1, 1, Lam::from_i64(Q, -1))]);
        assert!(e.is_err());
    }

    #[test]
    fn associativity_violation_names_triple() {
        let r = GradedAlgebra::build(
            Q,
            0,
            vec!["1".into(), "x".into(), "y".into()],
            vec![0, 0, 0],
            0,
            None,
            vec![(1, 1, 2, Lam::one(Q)), (1, 2, 1, Lam::one(Q)), (2, 2, 0, Lam::one(Q))],
        );
        // (x·x)·y = y·y = 1 while x·(x·y) = x·x = y
        let e = r.unwrap_err();
        assert!(e.to_string().contains("associativity"), "{e}");
    }

    #[test]
    fn standard_model_dims() {
        let c = GradedAlgebra::cpn(F2, 2);
        assert_eq!(c.degrees, vec![0, 2, 4]);
        let h = c.basis(1);
        assert!(c.mul(&c.mul(&h, &h), &h).iter().all(|x| x.is_zero()));
        assert_eq!(dims(&GradedAlgebra::torus(F2, 3)), vec![1, 3, 3, 1]);
        assert_eq!(dims(&GradedAlgebra::torus(F2, 3).regrade_mod(2).unwrap()), vec![4, 4]);
        assert_eq!(GradedAlgebra::torus(F2, 3).regrade_mod(0).unwrap(), GradedAlgebra::torus(F2, 3));
        assert!(GradedAlgebra::torus(F2, 3).regrade_mod(3).is_err());
        let s = GradedAlgebra::cpn(F2, 1).regrade_mod(4).unwrap();
        assert_eq!(s.degrees, vec![0, 2]);
    }

    #[test]
    fn every_standard_model_validates() {
        for gf in [F2, Q, GroundField::Fp(3)] {
            for name in ["torus:3", "cpn:3", "qh_sphere", "qh_torus:4", "torus:1*torus:2", "torus:2*qh_sphere", "point"] {
                GradedAlgebra::standard(gf, name).unwrap().validate().unwrap();
            }
        }
    }

    #[test]
    fn tensor_of_circles_is_torus() {
        let s = GradedAlgebra::torus(Q, 1);
        let t = s.tensor(&s).unwrap();
        let t2 = GradedAlgebra::torus(Q, 2);
        // basis order of the product: 1⊗1, 1⊗e1, e1⊗1, e1⊗e1 ↔ 1, e2, e1, e1e2
        let perm = [0usize, 2, 1, 3];
        for i in 0..4 {
            for j in 0..4 {
                let lhs = t.basis_product(i, j);
                let rhs = t2.basis_product(perm[i], perm[j]);
                let mapped: Elem = (0..4).map(|k| rhs[perm[k]].clone()).collect();
                assert_eq!(lhs, mapped, "{i} {j}");
            }
        }
        assert_eq!(s.tensor(&GradedAlgebra::point(Q)).unwrap().basis_product(1, 1), s.basis_product(1, 1));
    }

    #[test]
    fn torus_cross_sphere_product() {
        let a = GradedAlgebra::standard(F2, "qh_torus:6*qh_sphere").unwrap();
        let t6 = GradedAlgebra::qh_torus(F2, 3);
        let idx = |l: &str| t6.index_of(l).unwrap();
        let ah = idx("dq1dq2") * 2 + 1;
        let bh = idx("dp1dp3") * 2 + 1;
        let ab = a.mul(&a.basis(ah), &a.basis(bh));
        let expected_k = idx("dp1dp3dq1dq2") * 2;
        let mut expected = a.zero();
        expected[expected_k] = Lam::t_pow(F2, int(1));
        assert_eq!(ab, expected);
    }

    #[test]
    fn incompatible_moduli() {
        let s = GradedAlgebra::qh_sphere(F2);
        let t = GradedAlgebra::torus(F2, 2).regrade_mod(2).unwrap();
        assert!(s.tensor(&t).is_err());
    }

    #[test]
    fn generators_of_standard_models() {
        assert_eq!(GradedAlgebra::torus(F2, 3).generators().len(), 3);
        assert_eq!(GradedAlgebra::cpn(F2, 4).generators(), &[1]);
        assert_eq!(GradedAlgebra::qh_sphere(F2).generators(), &[1]);
    }

    #[test]
    fn augmentation_is_multiplicative() {
        let a = Arc::new(GradedAlgebra::torus(F2, 2));
        let m = AlgebraMorphism::augmentation(a).unwrap();
        assert!(m.is_multiplicative());
    }

    #[test]
    fn doc_round_trip() {
        let a = GradedAlgebra::qh_sphere(Q);
        let back = a.to_doc().build().unwrap();
        assert_eq!(a, back);
    }

    /// Signed swap `a⊗b ↦ (−1)^{|a||b|} b⊗a`.
    fn swap_is_iso(a: &GradedAlgebra, b: &GradedAlgebra) -> bool {
        let ab = a.tensor(b).unwrap();
        let ba = b.tensor(a).unwrap();
        let (na, nb) = (a.dim(), b.dim());
        let nov = a.nov();
        let image = |x: &Elem| -> Elem {
            let mut out = ba.zero();
            for i in 0..na {
                for j in 0..nb {
                    let c = &x[i * nb + j];
                    if !c.is_zero() {
                        out[j * na + i] = c.mul(&nov.from_i64(koszul(a.degrees[i], b.degrees[j])));
                    }
                }
            }
            out
        };
        (0..na * nb).all(|x| {
            (0..na * nb).all(|y| {
                image(&ab.basis_product(x, y)) == ba.mul(&image(&ab.basis(x)), &image(&ab.basis(y)))
            })
        })
    }

    #[test]
    fn tensor_commutes_up_to_signed_swap() {
        for gf in [F2, Q] {
            let t1 = GradedAlgebra::torus(gf, 1);
            let t2 = GradedAlgebra::torus(gf, 2);
            let c2 = GradedAlgebra::cpn(gf, 2);
            assert!(swap_is_iso(&t1, &t2));
            assert!(swap_is_iso(&t2, &c2));
            assert!(swap_is_iso(&GradedAlgebra::qh_sphere(gf), &t1));
        }
    }

    proptest! {
        #[test]
        fn products_of_random_models_validate(i in 0usize..4, j in 0usize..4, q in any::<bool>()) {
            let gf = if q { Q } else { F2 };
            let names = ["torus:1", "torus:2", "cpn:2", "qh_sphere"];
            let a = GradedAlgebra::standard(gf, &format!("{}*{}", names[i], names[j])).unwrap();
            prop_assert!(a.validate().is_ok());
        }
    }
}
