//! Input documents read by the command line and their resolution into library objects.

use std::path::Path;
use std::sync::Arc;

use ivmkit::cubical_space::{AxisInterval, CellSet, Polyinterval, Region, TorusGrid};
use ivmkit::field::GroundField;
use ivmkit::graded_algebra::{AlgebraDoc, GradedAlgebra};
use ivmkit::ideals::{ComponentDoc, GradedIdeal, IdealDoc};
use ivmkit::ivm_engine::{all_polyintervals, CohomologyMeasure, SphereQuasi, TorusQuasi};
use ivmkit::{Error, Result};
use serde::de::DeserializeOwned;
use serde::Deserialize;

pub fn read_doc<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Schema(format!("cannot read {}: {e}", path.display())))?;
    parse_doc(&text, &path.display().to_string())
}

pub fn parse_doc<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Schema(format!("{origin}: {e}")))
}

fn default_field() -> String {
    "F2".into()
}

pub fn field(s: &str) -> Result<GroundField> {
    GroundField::parse(s)
}

/// Either a full algebra document or a standard name such as `torus:2*qh_sphere`.
pub fn load_algebra(doc: Option<&Path>, standard: Option<&str>, field_name: &str) -> Result<Arc<GradedAlgebra>> {
    match (doc, standard) {
        (Some(p), None) => Ok(Arc::new(read_doc::<AlgebraDoc>(p)?.build()?)),
        (None, Some(s)) => Ok(Arc::new(GradedAlgebra::standard(field(field_name)?, s)?)),
        _ => Err(Error::Schema("give exactly one of --doc and --standard".into())),
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureDoc {
    /// Quantum cohomology quasi-measure on the standard 12-face sphere.
    Sphere {
        #[serde(default = "default_field")]
        field: String,
    },
    /// Cohomology measure of the cubic `n`-torus grid with `m` edges per axis.
    Cohomology {
        #[serde(default = "default_field")]
        field: String,
        n: usize,
        m: usize,
    },
    /// Quantum cohomology quasi-measure of `T^{2n}`.
    TorusQuasi {
        #[serde(default = "default_field")]
        field: String,
        n: usize,
        m: usize,
    },
}

pub enum Model {
    Sphere(SphereQuasi),
    Cohomology(CohomologyMeasure),
    Torus(TorusQuasi),
}

impl MeasureDoc {
    pub fn build(&self) -> Result<Model> {
        Ok(match self {
            MeasureDoc::Sphere { field: f } => Model::Sphere(SphereQuasi::standard(field(f)?)?),
            MeasureDoc::Cohomology { field: f, n, m } => Model::Cohomology(CohomologyMeasure::new(TorusGrid::cubic(*n, *m)?, field(f)?)),
            MeasureDoc::TorusQuasi { field: f, n, m } => Model::Torus(TorusQuasi::new(field(f)?, *n, *m)?),
        })
    }
}

/// A set in a model. Every variant resolves to a closed set plus a flag telling
/// whether the value is wanted on that set or on its open complement.
#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionDoc {
    /// Closed union of named sphere faces.
    Faces { names: Vec<String> },
    /// The sphere equator.
    Equator,
    /// A polyinterval; on `T^{2n}`, `side` picks the `p` (0) or `q` (1) projection.
    Polyinterval {
        axes: Vec<AxisInterval>,
        #[serde(default)]
        side: usize,
    },
    /// Closure of the listed cells; `open` evaluates the complement instead.
    Cells {
        cells: Vec<usize>,
        #[serde(default)]
        open: bool,
    },
}

#[derive(Clone, Debug, Deserialize)]
pub struct LatticeDoc {
    pub generators: Vec<RegionDoc>,
    #[serde(default)]
    pub chains: Vec<Vec<RegionDoc>>,
}

fn closure_of(cx: &ivmkit::cubical_space::CellComplex, cells: &[usize]) -> Result<CellSet> {
    let mut s = cx.empty();
    for &c in cells {
        if c >= cx.len() {
            return Err(Error::Schema(format!("cell {c} out of range ({} cells)", cx.len())));
        }
        s[c] = true;
    }
    Ok(cx.closure(&s))
}

fn wrong_model(r: &RegionDoc, model: &str) -> Error {
    Error::Schema(format!("region {r:?} does not apply to the {model} model"))
}

pub fn sphere_region(s: &SphereQuasi, r: &RegionDoc) -> Result<(u64, bool)> {
    match r {
        RegionDoc::Faces { names } => Ok((s.named(&names.iter().map(String::as_str).collect::<Vec<_>>())?, false)),
        RegionDoc::Equator => Ok((s.equator()?, false)),
        RegionDoc::Cells { cells, open } => {
            let n = s.model.complex.len();
            let mut m = 0u64;
            for &c in cells {
                if c >= n {
                    return Err(Error::Schema(format!("cell {c} out of range ({n} cells)")));
                }
                m |= 1 << c;
            }
            Ok((s.closure(m), *open))
        }
        RegionDoc::Polyinterval { .. } => Err(wrong_model(r, "sphere")),
    }
}

pub fn grid_region(grid: &TorusGrid, r: &RegionDoc) -> Result<(CellSet, bool)> {
    match r {
        RegionDoc::Polyinterval { axes, side: 0 } => Ok(match Polyinterval::new(axes.clone()).region(grid)? {
            Region::Compact(k) => (k, false),
            Region::OpenComplementOf(c) => (c, true),
        }),
        RegionDoc::Cells { cells, open } => Ok((closure_of(&grid.complex, cells)?, *open)),
        _ => Err(wrong_model(r, "torus grid")),
    }
}

pub fn torus_region(tq: &TorusQuasi, r: &RegionDoc) -> Result<(CellSet, bool)> {
    match r {
        RegionDoc::Polyinterval { axes, side } => {
            if *side > 1 {
                return Err(Error::Schema(format!("side must be 0 or 1, got {side}")));
            }
            let p = Polyinterval::new(axes.clone());
            Ok((tq.polyinterval_set(*side, &p)?, !p.is_closed()))
        }
        RegionDoc::Cells { cells, open } => Ok((closure_of(&tq.grid.complex, cells)?, *open)),
        _ => Err(wrong_model(r, "symplectic torus")),
    }
}

/// Nonempty closed polyintervals of a grid.
pub fn closed_polyintervals(m: &[usize]) -> Vec<Polyinterval> {
    all_polyintervals(m).into_iter().filter(|p| p.is_closed() && !p.is_empty()).collect()
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IdealSpec {
    Whole,
    /// Generated by the top class.
    Top,
    /// An explicit ideal document.
    Components { components: Vec<ComponentDoc> },
}

impl IdealSpec {
    pub fn build(&self, alg: &Arc<GradedAlgebra>) -> Result<GradedIdeal> {
        match self {
            IdealSpec::Whole => Ok(GradedIdeal::whole(alg)),
            IdealSpec::Top => {
                let top = alg.top_elem().ok_or_else(|| Error::Schema("algebra has no top class".into()))?;
                GradedIdeal::from_generators(alg, &[top])
            }
            IdealSpec::Components { components } => GradedIdeal::from_doc(alg, &IdealDoc { components: components.clone() }),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapDoc {
    /// Explicit target vertex per source vertex, in source vertex order.
    Values { values: Vec<usize> },
    /// `x ↦ min(x, m − x)` along one axis, clipped to the last target vertex.
    Fold { axis: usize },
}

#[derive(Clone, Debug, Deserialize)]
pub struct SolveDoc {
    pub source: SourceDoc,
    pub target: ivmkit::centerpoint::TargetKind,
    pub map: MapDoc,
    pub ideal: IdealSpec,
    /// Also run the pushforward rank bound with this threshold.
    #[serde(default)]
    pub bound: Option<usize>,
    #[serde(default = "default_limit")]
    pub limit: usize,
}

fn default_limit() -> usize {
    200_000
}

#[derive(Clone, Debug, Deserialize)]
pub struct SourceDoc {
    #[serde(default = "default_field")]
    pub field: String,
    pub n: usize,
    pub m: usize,
}
