//! Report assembly for `check`, `classify` and `catalog list`.

use serde::Serialize;
use skewtorsion::catalog::{self, CatalogEntry, Expected, OracleCheck, Params};
use skewtorsion::classify::{
    classify_first_bianchi, classify_nabla_einstein, classify_pair_symmetry, classify_soliton, classify_zz_flat,
    side_conditions, EinsteinReport, FirstBianchiReport, Implication, PairSymmetryReport, SideConditions,
    SolitonReport, ZzReport,
};
use skewtorsion::geometry::{Geometry, Mode, SampleSet};
use skewtorsion::identities::{evaluate_identity, EvalOptions, IdentityId, NamedValue, ResidualReport, Sample};
use skewtorsion::scalar::format_rational;
use skewtorsion::{with_samples, Error, Result, Scalar};

use crate::RunArgs;

/// The run configuration, echoed into every report.
#[derive(Serialize)]
pub struct ConfigEcho {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub catalog: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    pub mode: String,
    pub tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    pub seed: u64,
    pub lambda: String,
    pub t: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub identities: Option<Vec<String>>,
}

struct Target {
    name: String,
    geometry: Geometry,
    entry: Option<CatalogEntry>,
}

fn targets(args: &RunArgs) -> Result<Vec<Target>> {
    let params = Params { lambda: args.lambda.clone(), t: args.t.clone() };
    let mut out = Vec::new();
    if let Some(name) = &args.source.catalog {
        let names = if name == "all" { catalog::names() } else { vec![name.clone()] };
        for n in names {
            let e = catalog::load_entry(&n, &params)?;
            out.push(Target { name: n, geometry: e.geometry.clone(), entry: Some(e) });
        }
    } else if let Some(path) = &args.source.input {
        let src = std::fs::read_to_string(path)?;
        let geometry = Geometry::from_json_str(&src)?;
        out.push(Target { name: path.display().to_string(), geometry, entry: None });
    }
    if !(args.tol.is_finite() && args.tol > 0.0) {
        return Err(Error::Domain(format!("--tol must be positive, got {}", args.tol)));
    }
    for t in &mut out {
        if let Geometry::Chart(c) = &t.geometry {
            let mut c = c.clone();
            if let Some(h) = args.h {
                c = c.with_h(h)?;
            }
            if let Some(k) = args.grid_points {
                c = c.with_grid(c.seeded_grid(k, args.seed))?;
            }
            t.geometry = Geometry::Chart(c);
        }
    }
    Ok(out)
}

fn echo(args: &RunArgs, ids: Option<&[IdentityId]>, with_ids: bool) -> ConfigEcho {
    ConfigEcho {
        catalog: args.source.catalog.clone(),
        input: args.source.input.as_ref().map(|p| p.display().to_string()),
        mode: format!("{:?}", args.mode).to_lowercase(),
        tol: args.tol,
        h: args.h,
        grid_points: args.grid_points,
        seed: args.seed,
        lambda: format_rational(&args.lambda),
        t: format_rational(&args.t),
        identities: with_ids.then(|| match ids {
            None => vec!["all".to_string()],
            Some(list) => list.iter().map(|i| i.name().to_string()).collect(),
        }),
    }
}

#[derive(Serialize)]
pub struct PointQuantities {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    pub values: Vec<NamedValue>,
}

fn named<S: Scalar>(name: &str, x: &S) -> NamedValue {
    NamedValue { name: name.to_string(), value: x.to_f64(), exact: S::EXACT.then(|| x.to_string()) }
}

fn quantities<S: Scalar>(samples: &[Sample<S>]) -> Vec<PointQuantities> {
    samples
        .iter()
        .map(|s| {
            let fd = &s.data;
            PointQuantities {
                point: s.point.clone(),
                values: vec![
                    named("Scal", fd.curvature.scal()),
                    named("Scal^g", &fd.scal_g),
                    named("|T|^2", &fd.pack.norm_t2),
                    named("max|R|", &fd.curvature.r().max_abs().0),
                    named("max|dT|", &fd.pack.dt.tensor().max_abs().0),
                    named("max|deltaT|", &fd.pack.delta_t.tensor().max_abs().0),
                ],
            }
        })
        .collect()
}

#[derive(Serialize)]
pub struct Skipped {
    pub id: String,
    pub reason: String,
}

#[derive(Serialize)]
pub struct GeometryCheck {
    pub name: String,
    pub backend: String,
    pub dim: usize,
    pub mode: Mode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    pub samples: usize,
    pub quantities: Vec<PointQuantities>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub oracles: Vec<OracleCheck>,
    pub identities: Vec<ResidualReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<Skipped>,
    pub universal_pass: bool,
    pub oracles_pass: bool,
}

#[derive(Serialize)]
pub struct CheckReport {
    pub command: &'static str,
    pub config: ConfigEcho,
    pub geometries: Vec<GeometryCheck>,
    pub passed: bool,
}

fn sample(t: &Target, requested: Option<Mode>) -> Result<(Mode, SampleSet)> {
    let mode = requested.unwrap_or_else(|| t.geometry.default_mode());
    let set = t.geometry.sample(mode, t.geometry.has_potential())?;
    Ok((mode, set))
}

fn chart_h(g: &Geometry) -> Option<f64> {
    match g {
        Geometry::Chart(c) => Some(c.h()),
        Geometry::Lie(_) => None,
    }
}

pub fn check(args: &RunArgs, ids: Option<&[IdentityId]>) -> Result<CheckReport> {
    let opts = EvalOptions { tol: args.tol, ..EvalOptions::default() };
    let mut geometries = Vec::new();
    for t in targets(args)? {
        let (mode, set) = sample(&t, args.mode.resolve())?;
        let mut identities = Vec::new();
        let mut skipped = Vec::new();
        for &id in ids.unwrap_or(&IdentityId::ALL) {
            if id.needs_potential() && !t.geometry.has_potential() {
                if ids.is_some() {
                    return Err(Error::Capability(format!(
                        "{} needs a potential f, which {} does not define",
                        id.name(),
                        t.name
                    )));
                }
                skipped.push(Skipped { id: id.name().into(), reason: "no potential f".into() });
                continue;
            }
            match with_samples!(&set, s => evaluate_identity(id, s, &opts)) {
                Ok(r) => identities.push(r),
                Err(Error::Capability(why)) if ids.is_none() => {
                    skipped.push(Skipped { id: id.name().into(), reason: why })
                }
                Err(e) => return Err(e),
            }
        }
        let oracles = t.entry.as_ref().map(|e| e.check_oracles(&set)).unwrap_or_default();
        geometries.push(GeometryCheck {
            name: t.name.clone(),
            backend: t.geometry.backend().into(),
            dim: t.geometry.dim(),
            mode,
            h: chart_h(&t.geometry),
            samples: set.len(),
            quantities: with_samples!(&set, s => quantities(s)),
            universal_pass: identities.iter().filter(|r| r.universal).all(|r| r.verdict),
            oracles_pass: oracles.iter().all(|o| o.pass),
            oracles,
            identities,
            skipped,
        });
    }
    let passed = geometries.iter().all(|g| g.universal_pass && g.oracles_pass);
    Ok(CheckReport { command: "check", config: echo(args, ids, true), geometries, passed })
}

/// A classifier outcome, or the reason it could not be produced.
#[derive(Serialize)]
#[serde(untagged)]
pub enum Outcome<T> {
    Report(Box<T>),
    NotApplicable { not_applicable: String },
    Violation { invariant_violation: String },
}

impl<T> Outcome<T> {
    fn report(&self) -> Option<&T> {
        match self {
            Outcome::Report(r) => Some(r),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Serialize)]
pub struct Verdicts {
    pub first_bianchi: bool,
    pub pair_symmetry: Option<bool>,
    pub zz_flat: Option<bool>,
    pub nabla_einstein: Option<bool>,
    pub soliton: Option<bool>,
}

impl Verdicts {
    fn matches(&self, e: &Expected) -> bool {
        let ok = |got: Option<bool>, want: bool| got.is_none_or(|g| g == want);
        self.first_bianchi == e.first_bianchi
            && ok(self.pair_symmetry, e.pair_symmetry)
            && ok(self.zz_flat, e.zz_flat)
            && ok(self.nabla_einstein, e.nabla_einstein)
            && ok(self.soliton, e.soliton)
    }
}

#[derive(Serialize)]
pub struct GeometryClassify {
    pub name: String,
    pub backend: String,
    pub dim: usize,
    pub mode: Mode,
    pub samples: usize,
    pub verdicts: Verdicts,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<Expected>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matches_expected: Option<bool>,
    /// Einstein constant `C` and the spread checks behind it, if computed.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub constants: Vec<NamedValue>,
    pub violations: Vec<String>,
    pub first_bianchi: FirstBianchiReport,
    pub pair_symmetry: Outcome<PairSymmetryReport>,
    pub zz_flat: Outcome<ZzReport>,
    pub nabla_einstein: Outcome<EinsteinReport>,
    pub soliton: Outcome<SolitonReport>,
    pub side_conditions: SideConditions,
}

#[derive(Serialize)]
pub struct ClassifyReport {
    pub command: &'static str,
    pub config: ConfigEcho,
    pub geometries: Vec<GeometryClassify>,
    pub passed: bool,
}

fn outcome<T>(r: Result<T>, violations: &mut Vec<String>) -> Result<Outcome<T>> {
    match r {
        Ok(v) => Ok(Outcome::Report(Box::new(v))),
        Err(Error::Domain(why)) | Err(Error::Capability(why)) => Ok(Outcome::NotApplicable { not_applicable: why }),
        Err(Error::InvariantViolation(why)) => {
            violations.push(why.clone());
            Ok(Outcome::Violation { invariant_violation: why })
        }
        Err(e) => Err(e),
    }
}

fn violated<'a>(imps: impl IntoIterator<Item = &'a Implication>, out: &mut Vec<String>) {
    out.extend(imps.into_iter().filter(|i| i.violated).map(|i| i.name.clone()));
}

fn classify_one<S: Scalar>(t: &Target, mode: Mode, s: &[Sample<S>], opts: &EvalOptions) -> Result<GeometryClassify> {
    let mut violations = Vec::new();
    let fb = classify_first_bianchi(s, opts)?;
    violated(&fb.implications, &mut violations);
    let pair = outcome(classify_pair_symmetry(s, opts), &mut violations)?;
    let zz = outcome(classify_zz_flat(s, opts), &mut violations)?;
    let ein = outcome(classify_nabla_einstein(s, opts), &mut violations)?;
    let compact_model = matches!(t.geometry, Geometry::Lie(_));
    let sol = outcome(classify_soliton(s, opts, compact_model), &mut violations)?;
    let side = side_conditions(s, opts)?;
    if let Some(p) = pair.report() {
        violated(&p.implications, &mut violations);
    }
    if let Some(e) = ein.report() {
        violated(&e.implications, &mut violations);
    }
    if let Some(r) = sol.report() {
        violated(&r.implications, &mut violations);
    }
    violated([&side.parallel, &side.rb2_biii[0], &side.rb2_biii[1], &side.pair_ricci_flat], &mut violations);

    let verdicts = Verdicts {
        first_bianchi: fb.holds,
        pair_symmetry: pair.report().map(|p| p.pair_symmetric),
        zz_flat: zz.report().map(|z| z.holds),
        nabla_einstein: ein.report().map(|e| e.einstein),
        soliton: sol.report().map(|r| r.soliton),
    };
    let mut constants = Vec::new();
    if let Some(e) = ein.report() {
        for r in [&e.ein9, &e.ein8].into_iter().flatten() {
            constants.extend(r.values.iter().cloned());
        }
    }
    let expected = t.entry.as_ref().map(|e| e.expected);
    Ok(GeometryClassify {
        name: t.name.clone(),
        backend: t.geometry.backend().into(),
        dim: t.geometry.dim(),
        mode,
        samples: s.len(),
        matches_expected: expected.as_ref().map(|e| verdicts.matches(e)),
        verdicts,
        expected,
        constants,
        violations,
        first_bianchi: fb,
        pair_symmetry: pair,
        zz_flat: zz,
        nabla_einstein: ein,
        soliton: sol,
        side_conditions: side,
    })
}

pub fn classify(args: &RunArgs) -> Result<ClassifyReport> {
    let opts = EvalOptions { tol: args.tol, ..EvalOptions::default() };
    let mut geometries = Vec::new();
    for t in targets(args)? {
        let (mode, set) = sample(&t, args.mode.resolve())?;
        geometries.push(with_samples!(&set, s => classify_one(&t, mode, s, &opts))?);
    }
    let passed = geometries.iter().all(|g| g.violations.is_empty());
    Ok(ClassifyReport { command: "classify", config: echo(args, None, false), geometries, passed })
}

#[derive(Serialize)]
pub struct CatalogRow {
    pub name: String,
    pub backend: String,
    pub dim: usize,
    pub description: String,
    pub expected: Expected,
}

pub fn catalog_rows(params: &Params) -> Result<Vec<CatalogRow>> {
    catalog::names()
        .iter()
        .map(|n| {
            let e = catalog::build_entry(n, params)?;
            Ok(CatalogRow {
                name: e.name.clone(),
                backend: e.geometry.backend().into(),
                dim: e.geometry.dim(),
                description: e.description.clone(),
                expected: e.expected,
            })
        })
        .collect()
}
