//! Subcommand implementations.

use ivmkit::centerpoint::{
    all_subcomplexes, cellwise_map, find_centerpoints, gromov_centerpoint, gromov_torus_harness, simplex_harness, FiniteTarget,
    HarnessConfig, HarnessReport, TargetKind,
};
use ivmkit::cubes::{homology_dims, is_acyclic, torsion_exponents, CubeDoc, RayDoc};
use ivmkit::cubical_space::{CellSet, TorusGrid};
use ivmkit::field::parse_rational;
use ivmkit::graded_algebra::GradedAlgebra;
use ivmkit::ideals::{a_slash_r, d_rank, GradedIdeal, IdealDoc, RankMode};
use ivmkit::ivm_engine::{axis_projection, check_axioms, lattice_closure, AxiomReport, CohomologyMeasure, Measure, Mode, Pushforward};
use ivmkit::{Error, Result};
use serde::Serialize;
use serde_json::{json, Value};

use crate::docs::{self, LatticeDoc, MeasureDoc, Model, RegionDoc, SolveDoc};
use crate::{AlgebraCmd, CenterpointCmd, Command, CubesCmd, HarnessKind, IvmCmd, ModeArg, Report};

pub fn to_json<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable value")
}

pub fn run(cmd: Command) -> Result<Report> {
    match cmd {
        Command::Algebra(c) => algebra(c),
        Command::Ivm(c) => ivm(c),
        Command::Centerpoint(c) => centerpoint(c),
        Command::Cubes(c) => cubes(c),
        Command::Demo(a) => crate::demos::run(a),
    }
}

// ---------------------------------------------------------------------------
// algebra

fn algebra(cmd: AlgebraCmd) -> Result<Report> {
    match cmd {
        AlgebraCmd::Build(src) => {
            let a = docs::load_algebra(src.doc.as_deref(), src.standard.as_deref(), &src.field)?;
            let mut table = vec![format!("algebra over {} of dimension {}", a.field, a.dim())];
            for (d, idx) in a.components() {
                let labels: Vec<&str> = idx.iter().map(|&i| a.labels[i].as_str()).collect();
                table.push(format!("  degree {d}: {}", labels.join(", ")));
            }
            if let Some(t) = a.top {
                table.push(format!("  top class: {}", a.labels[t]));
            }
            Ok(Report::ok(to_json(&a.to_doc()), table))
        }
        AlgebraCmd::Rank { src, d, budget, certified } => {
            let a = docs::load_algebra(src.doc.as_deref(), src.standard.as_deref(), &src.field)?;
            let r = d_rank(&a, d, RankMode::Exact, budget, certified)?;
            let table = vec![format!("rk_{} = {} ({:?}, {} candidates)", r.d, r.value, r.mode, r.budget_used), format!("  {}", r.note)];
            Ok(Report::ok(to_json(&r), table))
        }
        AlgebraCmd::SlashR { src, r, budget } => {
            let a = docs::load_algebra(src.doc.as_deref(), src.standard.as_deref(), &src.field)?;
            let rep = a_slash_r(&a, r, budget)?;
            let json = json!({
                "r": r,
                "status": rep.status,
                "budget_used": rep.budget_used,
                "ideals_found": rep.ideals_found,
                "dim": rep.ideal.dim(),
                "codim": rep.ideal.codim(),
                "ideal": rep.ideal.to_doc(),
            });
            let mut table = vec![
                format!("A^/{r}: dim {} codim {} ({:?})", rep.ideal.dim(), rep.ideal.codim(), rep.status),
                format!("  {} ideals of codim < {r} among {} candidates", rep.ideals_found, rep.budget_used),
            ];
            table.extend(ideal_lines(&a, &rep.ideal));
            Ok(Report::ok(json, table))
        }
    }
}

fn ideal_lines(alg: &GradedAlgebra, ideal: &GradedIdeal) -> Vec<String> {
    let basis = ideal.basis();
    if basis.is_empty() {
        return vec!["  basis: (zero ideal)".into()];
    }
    basis.iter().map(|x| format!("  basis: {}", alg.fmt_elem(x))).collect()
}

// ---------------------------------------------------------------------------
// ivm

#[derive(Serialize)]
struct EvalOut {
    measure: String,
    region: String,
    open: bool,
    dim: usize,
    codim: usize,
    zero: bool,
    whole: bool,
    #[serde(flatten)]
    value: IdealDoc,
}

fn eval_on<M: Measure>(mu: &M, (s, open): (M::S, bool)) -> Result<Report> {
    let v = if open { mu.open_value(&s)? } else { mu.compact_value(&s)? };
    let region = if open { format!("complement of {}", mu.describe(&s)) } else { mu.describe(&s) };
    let mut table = vec![
        format!("measure: {}", mu.label()),
        format!("region: {region}"),
        format!("value: dim {} codim {}{}", v.dim(), v.codim(), if v.is_zero() { " (zero ideal)" } else if v.is_whole() { " (whole algebra)" } else { "" }),
    ];
    table.extend(ideal_lines(mu.algebra(), &v));
    let out = EvalOut {
        measure: mu.label(),
        region,
        open,
        dim: v.dim(),
        codim: v.codim(),
        zero: v.is_zero(),
        whole: v.is_whole(),
        value: v.to_doc(),
    };
    Ok(Report::ok(to_json(&out), table))
}

fn modes(m: ModeArg) -> Vec<Mode> {
    match m {
        ModeArg::Compact => vec![Mode::Compact],
        ModeArg::Open => vec![Mode::Open],
        ModeArg::Both => vec![Mode::Compact, Mode::Open],
    }
}

fn axioms_on<M: Measure>(mu: &M, lattice: &[M::S], chains: &[Vec<M::S>], mode: ModeArg) -> Report {
    let reports: Vec<AxiomReport> = modes(mode).into_iter().map(|m| check_axioms(mu, lattice, chains, m)).collect();
    let mut table = vec![format!("measure: {} ({} sets)", mu.label(), lattice.len())];
    for r in &reports {
        table.push(format!("mode {:?}: {} distinct values, {}", r.mode, r.distinct_values, if r.passed() { "all pass" } else { "FAILURES" }));
        for a in &r.results {
            let note = a.note.as_deref().map(|n| format!(" ({n})")).unwrap_or_default();
            table.push(format!("  {:<28} checked {:>8}  failed {:>4}  skipped {:>6}{note}", a.axiom, a.checked, a.failures, a.skipped));
            for w in a.witnesses.iter().take(3) {
                table.push(format!("    witness: {w}"));
            }
        }
        for e in &r.errors {
            table.push(format!("  error: {e}"));
        }
    }
    let failed: Vec<String> = reports.iter().filter(|r| !r.passed()).map(|r| format!("{:?}", r.mode)).collect();
    Report::ok(to_json(&reports), table).check(failed.is_empty(), format!("axioms fail in mode {}", failed.join(", ")))
}

/// Lattice members and monotone chains.
type Lattice<S> = (Vec<S>, Vec<Vec<S>>);

/// Resolves a lattice document, closing the generators under union and intersection.
fn lattice_from<M: Measure>(
    mu: &M,
    doc: &LatticeDoc,
    resolve: impl Fn(&RegionDoc) -> Result<(M::S, bool)>,
    limit: usize,
) -> Result<Lattice<M::S>> {
    let gens: Vec<M::S> = doc.generators.iter().map(|r| resolve(r).map(|x| x.0)).collect::<Result<_>>()?;
    let chains = doc.chains.iter().map(|c| c.iter().map(|r| resolve(r).map(|x| x.0)).collect()).collect::<Result<_>>()?;
    Ok((lattice_closure(mu, &gens, limit)?, chains))
}

fn grid_default_lattice<M: Measure<S = CellSet>>(mu: &M, grid: &TorusGrid, limit: usize) -> Result<Vec<CellSet>> {
    let gens: Vec<CellSet> = docs::closed_polyintervals(&grid.m).iter().map(|p| p.cells(grid)).collect();
    lattice_closure(mu, &gens, limit)
}

fn ivm(cmd: IvmCmd) -> Result<Report> {
    match cmd {
        IvmCmd::Eval { measure, region } => {
            let model = docs::read_doc::<MeasureDoc>(&measure)?.build()?;
            let r: RegionDoc = docs::read_doc(&region)?;
            match &model {
                Model::Sphere(s) => eval_on(s, docs::sphere_region(s, &r)?),
                Model::Cohomology(c) => eval_on(c, docs::grid_region(&c.grid, &r)?),
                Model::Torus(t) => eval_on(t, docs::torus_region(t, &r)?),
            }
        }
        IvmCmd::CheckAxioms { measure, lattice, mode, limit } => {
            let model = docs::read_doc::<MeasureDoc>(&measure)?.build()?;
            let doc: Option<LatticeDoc> = lattice.as_deref().map(docs::read_doc).transpose()?;
            match &model {
                Model::Sphere(s) => {
                    let (lat, chains) = match &doc {
                        Some(d) => lattice_from(s, d, |r| docs::sphere_region(s, r), limit)?,
                        None => sphere_default_lattice(s)?,
                    };
                    Ok(axioms_on(s, &lat, &chains, mode))
                }
                Model::Cohomology(c) => {
                    let (lat, chains) = match &doc {
                        Some(d) => lattice_from(c, d, |r| docs::grid_region(&c.grid, r), limit)?,
                        None => (grid_default_lattice(c, &c.grid, limit)?, Vec::new()),
                    };
                    Ok(axioms_on(c, &lat, &chains, mode))
                }
                Model::Torus(t) => {
                    let (lat, chains) = match &doc {
                        Some(d) => lattice_from(t, d, |r| docs::torus_region(t, r), limit)?,
                        None => {
                            let mut gens = Vec::new();
                            for p in docs::closed_polyintervals(&t.base.m) {
                                for side in 0..2 {
                                    gens.push(t.polyinterval_set(side, &p)?);
                                }
                            }
                            (lattice_closure(t, &gens, limit)?, Vec::new())
                        }
                    };
                    Ok(axioms_on(t, &lat, &chains, mode))
                }
            }
        }
        IvmCmd::Pushforward { measure, axes, region, check_axioms, limit } => {
            let coh = match docs::read_doc::<MeasureDoc>(&measure)?.build()? {
                Model::Cohomology(c) => c,
                _ => return Err(Error::Schema("pushforward needs a cohomology measure".into())),
            };
            let (tgrid, map) = axis_projection(&coh.grid, &axes)?;
            let pf = Pushforward::new(&coh, tgrid.complex.clone(), map, true)?;
            let r: RegionDoc = docs::read_doc(&region)?;
            let mut rep = eval_on(&pf, docs::grid_region(&tgrid, &r)?)?;
            if check_axioms {
                let lat = grid_default_lattice(&pf, &tgrid, limit)?;
                let ax = axioms_on(&pf, &lat, &[], ModeArg::Both);
                rep.json["axioms"] = ax.json;
                rep.table.extend(ax.table);
                rep = rep.check(ax.failure.is_none(), ax.failure.unwrap_or_default());
            }
            Ok(rep)
        }
    }
}

pub fn sphere_default_lattice(s: &ivmkit::ivm_engine::SphereQuasi) -> Result<Lattice<u64>> {
    let mut lattice: Vec<u64> = (0..1u64 << s.model.face_count()).map(|f| s.faces(f)).collect();
    lattice.push(s.equator()?);
    let chains = vec![vec![s.all(), s.named(&["n0", "n1", "n2", "n3", "m0", "m1"])?, s.named(&["n0", "n1", "n2", "n3"])?, s.named(&["n0"])?]];
    Ok((lattice, chains))
}

// ---------------------------------------------------------------------------
// centerpoint

fn centerpoint(cmd: CenterpointCmd) -> Result<Report> {
    match cmd {
        CenterpointCmd::Solve { input } => solve(&docs::read_doc(&input)?),
        CenterpointCmd::Harness { kind, seed, count, resolution, levels } => {
            let base = match kind {
                HarnessKind::GromovTorus => HarnessConfig { seed: 1000, count: 100, resolution: 16, levels: 10 },
                HarnessKind::Simplex => HarnessConfig { seed: 2000, count: 50, resolution: 12, levels: 10 },
            };
            let cfg = HarnessConfig {
                seed: seed.unwrap_or(base.seed),
                count: count.unwrap_or(base.count),
                resolution: resolution.unwrap_or(base.resolution),
                levels: levels.unwrap_or(base.levels),
            };
            let rep = match kind {
                HarnessKind::GromovTorus => gromov_torus_harness(cfg)?,
                HarnessKind::Simplex => simplex_harness(cfg)?,
            };
            Ok(harness_report(&rep))
        }
    }
}

pub fn harness_report(rep: &HarnessReport) -> Report {
    let c = &rep.config;
    let mut table = vec![
        format!("{}: seed {} count {} resolution {} levels {}", rep.name, c.seed, c.count, c.resolution, c.levels),
        format!("required value per case: {}", rep.required),
    ];
    for case in &rep.cases {
        let y0 = case.y0.map_or("-".to_string(), |y| y.to_string());
        let w = if case.witnesses.is_empty() { String::new() } else { format!("  witnesses {:?}", case.witnesses) };
        table.push(format!("  seed {:>6}  y0 {:>4}  value {}{w}", case.seed, y0, case.value));
    }
    table.push(format!("failures: {}", rep.failures));
    Report::ok(to_json(rep), table).check(rep.failures == 0, format!("{} of {} cases fail", rep.failures, rep.cases.len()))
}

fn solve(doc: &SolveDoc) -> Result<Report> {
    let grid = TorusGrid::cubic(doc.source.n, doc.source.m)?;
    let coh = CohomologyMeasure::new(grid, docs::field(&doc.source.field)?);
    let target = FiniteTarget::new(doc.target)?;
    let values: Vec<usize> = match &doc.map {
        docs::MapDoc::Values { values } => values.clone(),
        docs::MapDoc::Fold { axis } => {
            if *axis >= coh.grid.n {
                return Err(Error::Schema(format!("axis {axis} out of range")));
            }
            if matches!(doc.target, TargetKind::Grid { .. }) {
                return Err(Error::Schema("a fold map needs a path or cycle target".into()));
            }
            let m = coh.grid.m[*axis];
            let top = target.vertex_count() - 1;
            coh.grid.complex.cells(0).iter().map(|&v| {
                let x = coh.grid.cell(v).0[*axis];
                x.min(m - x).min(top)
            }).collect()
        }
    };
    let map = cellwise_map(&coh.grid.complex, &target, &values)?;
    let pf = Pushforward::new(&coh, target.complex.clone(), map, false)?;
    let ideal = doc.ideal.build(&coh.alg)?;
    let lattice = all_subcomplexes(&target.complex, doc.limit)?;
    let rep = find_centerpoints(&pf, &target, &lattice, &ideal)?;
    let mut table = vec![
        format!("target {:?} (covering dimension {}), {} subcomplexes", doc.target, target.d, rep.lattice_size),
        format!("ideal dim {}, I^{} nonzero: {}", ideal.dim(), target.d + 1, rep.protected),
        format!("centerpoint cells: {:?}", rep.points),
        format!("qualifying compacts: {}, skipped: {}", rep.qualifying, rep.skipped),
    ];
    if let Some(t) = &rep.tag {
        table.push(format!("note: {t}"));
    }
    let mut json = json!({ "centerpoints": rep });
    if let Some(bound) = doc.bound {
        let g = gromov_centerpoint(&pf, &target, bound)?;
        table.push(format!("rank bound: cell {} has codimension {} ≥ {bound}", g.y0, g.codim));
        json["rank_bound"] = to_json(&g);
    }
    Ok(Report::ok(json, table))
}

// ---------------------------------------------------------------------------
// cubes

fn cube_summary(c: &ivmkit::cubes::Cube) -> Vec<String> {
    let dims: Vec<usize> = (0..1usize << c.n).map(|v| c.dim_at(v)).collect();
    vec![format!("{}-cube over {} with vertex ranks {:?} and {} nonzero face maps", c.n, c.gf, dims, c.maps.len())]
}

fn cubes(cmd: CubesCmd) -> Result<Report> {
    match cmd {
        CubesCmd::Validate { cube } => {
            let c = docs::read_doc::<CubeDoc>(&cube)?.build_unchecked()?;
            c.validate()?;
            let mut table = cube_summary(&c);
            table.push("cube relation holds on every face".into());
            Ok(Report::ok(json!({ "valid": true, "n": c.n, "ranks": (0..1usize << c.n).map(|v| c.dim_at(v)).collect::<Vec<_>>() }), table))
        }
        CubesCmd::Cone { cube, direction, cocone } => {
            let c = docs::read_doc::<CubeDoc>(&cube)?.build()?;
            let out = if cocone { c.cocone(direction)? } else { c.cone(direction)? };
            out.validate()?;
            Ok(Report::ok(to_json(&out.to_doc()), cube_summary(&out)))
        }
        CubesCmd::Telescope { ray } => {
            let r = docs::read_doc::<RayDoc>(&ray)?.build()?;
            let t = r.telescope()?;
            Ok(Report::ok(to_json(&t.to_doc()), cube_summary(&t)))
        }
        CubesCmd::Homology { cube, precision } => {
            let c = docs::read_doc::<CubeDoc>(&cube)?.build()?;
            let total = c.total()?;
            let p = precision.as_deref().map(parse_rational).transpose()?;
            let dims = homology_dims(&total)?;
            let torsion: Vec<String> = torsion_exponents(&total, p.as_ref())?.iter().map(|e| e.to_string()).collect();
            let acyclic = is_acyclic(&total)?;
            let mut table = cube_summary(&c);
            for (d, h) in &dims {
                table.push(format!("  H^{d} = Λ^{h}"));
            }
            table.push(format!("acyclic over Λ: {acyclic}"));
            table.push(format!("torsion exponents over Λ≥0: {}", if torsion.is_empty() { "none".to_string() } else { torsion.join(", ") }));
            Ok(Report::ok(json!({ "dims": dims, "acyclic": acyclic, "torsion_exponents": torsion }), table))
        }
    }
}
