//! Built-in geometries with closed-form reference values and the
//! classifier verdicts they are expected to produce.
//!
//! Flat tori are modelled pointwise by ℝⁿ with an invariant frame; every
//! quantity here is local, so the lattice quotient plays no role.

use serde::Serialize;

use crate::chart::{ChartGeometry, TorsionTerm, DEFAULT_H};
use crate::curvature::FrameData;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{Geometry, Mode, SampleSet};
use crate::identities::Sample;
use crate::lie::{LieGeometry, StructureConstants};
use crate::scalar::{format_rational, rat, Rational, Scalar};
use crate::tensor::AltForm;

/// Catalog parameters, rational so that exact runs stay exact.
#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    pub lambda: Rational,
    pub t: Rational,
}

impl Default for Params {
    fn default() -> Self {
        Params { lambda: rat(1, 1), t: rat(1, 1) }
    }
}

/// A frame quantity at one sample (0-based indices).
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Scal,
    ScalG,
    NormT2,
    Ric(usize, usize),
    RicG(usize, usize),
    T2(usize, usize),
    Gamma(usize, usize, usize),
    DeltaT(usize, usize),
    Dt(usize, usize, usize, usize),
    MaxAbsGamma,
    MaxAbsCurvature,
    MaxAbsSigma,
    MaxAbsDt,
    MaxAbsTheta,
    MaxAbsBigTheta,
    /// `Scal + n/(6(n−2))‖T‖²`.
    EinsteinC,
}

impl Quantity {
    pub fn eval<S: Scalar>(&self, fd: &FrameData<S>) -> S {
        let p = &fd.pack;
        let n = fd.dim();
        match *self {
            Quantity::Scal => fd.curvature.scal().clone(),
            Quantity::ScalG => fd.scal_g.clone(),
            Quantity::NormT2 => p.norm_t2.clone(),
            Quantity::Ric(i, j) => fd.curvature.ric().at2(i, j).clone(),
            Quantity::RicG(i, j) => fd.ric_g.at2(i, j).clone(),
            Quantity::T2(i, j) => p.t2.at2(i, j).clone(),
            Quantity::Gamma(i, j, k) => fd.connection.gamma().at3(i, j, k).clone(),
            Quantity::DeltaT(i, j) => p.delta_t.tensor().at2(i, j).clone(),
            Quantity::Dt(i, j, k, l) => p.dt.tensor().at4(i, j, k, l).clone(),
            Quantity::MaxAbsGamma => fd.connection.gamma().max_abs().0,
            Quantity::MaxAbsCurvature => fd.curvature.r().max_abs().0,
            Quantity::MaxAbsSigma => p.sigma.tensor().max_abs().0,
            Quantity::MaxAbsDt => p.dt.tensor().max_abs().0,
            Quantity::MaxAbsTheta => p.theta.max_abs().0,
            Quantity::MaxAbsBigTheta => p.big_theta.max_abs().0,
            Quantity::EinsteinC => {
                fd.curvature.scal().clone() + S::from_ratio(n as i64, 6 * (n as i64 - 2)) * p.norm_t2.clone()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleValue {
    Exact(#[serde(serialize_with = "ser_rational")] Rational),
    Approx { value: f64, tol: f64 },
}

fn ser_rational<Ser: serde::Serializer>(r: &Rational, s: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
    s.serialize_str(&format_rational(r))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Oracle {
    pub name: String,
    pub quantity: Quantity,
    pub sample: usize,
    pub value: OracleValue,
}

/// Classifier verdicts the entry should produce with default parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Expected {
    pub first_bianchi: bool,
    pub pair_symmetry: bool,
    pub zz_flat: bool,
    pub nabla_einstein: bool,
    pub soliton: bool,
}

#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub name: String,
    pub description: String,
    pub geometry: Geometry,
    pub oracles: Vec<Oracle>,
    pub expected: Expected,
}

const BASE: [&str; 9] = [
    "flat_torus_3",
    "flat_torus_6",
    "su2_cs",
    "su2_family",
    "heis3_r3",
    "chart_phi",
    "chart_conformal",
    "chart_soliton_flat",
    "chart_cigar",
];

/// Entries whose torsion is already zero get no `_zero_t` twin.
const HAS_TORSION: [&str; 7] =
    ["flat_torus_3", "flat_torus_6", "su2_cs", "su2_family", "heis3_r3", "chart_phi", "chart_conformal"];

pub fn names() -> Vec<String> {
    let mut out: Vec<String> = BASE.iter().map(|s| s.to_string()).collect();
    out.extend(HAS_TORSION.iter().map(|s| format!("{s}_zero_t")));
    out
}

fn oracle(name: &str, quantity: Quantity, value: Rational) -> Oracle {
    Oracle { name: name.to_string(), quantity, sample: 0, value: OracleValue::Exact(value) }
}

fn approx(name: &str, quantity: Quantity, sample: usize, value: f64, tol: f64) -> Oracle {
    Oracle { name: name.to_string(), quantity, sample, value: OracleValue::Approx { value, tol } }
}

fn lie(c: StructureConstants, t: AltForm<Rational>) -> Result<Geometry> {
    Ok(Geometry::Lie(LieGeometry::new(c, t, rat(0, 1))?))
}

fn ex(s: &str, n: usize) -> Expr {
    Expr::parse(s, n).expect("catalog expression parses")
}

fn chart(
    n: usize,
    bounds: Vec<(f64, f64)>,
    grid: Vec<Vec<f64>>,
    g: &[&[&str]],
    t: Vec<([usize; 3], &str)>,
    f: &str,
) -> Result<Geometry> {
    let g = g.iter().map(|row| row.iter().map(|s| ex(s, n)).collect()).collect();
    let t = t.into_iter().map(|(idx, s)| TorsionTerm { idx, expr: ex(s, n) }).collect();
    Ok(Geometry::Chart(ChartGeometry::new(n, bounds, DEFAULT_H, grid, g, t, Some(ex(f, n)))?))
}

fn flat_metric(n: usize) -> Vec<Vec<&'static str>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { "1" } else { "0" }).collect()).collect()
}

fn as_rows<'a>(m: &'a [Vec<&'a str>]) -> Vec<&'a [&'a str]> {
    m.iter().map(|r| r.as_slice()).collect()
}

const PHI: &str = "1 + 0.3*sin(x1) + 0.2*x4^2";
const CONFORMAL_U: &str = "0.2*x1 + 0.1*sin(x2) + 0.05*x3^2";

fn phi_grid() -> Vec<Vec<f64>> {
    vec![vec![0.1, 0.2, -0.3, 0.4], vec![-0.5, 0.3, 0.2, -0.6], vec![0.7, -0.4, 0.1, 0.25]]
}

fn cube_grid3() -> Vec<Vec<f64>> {
    vec![vec![0.1, 0.2, -0.3], vec![-0.4, 0.5, 0.2], vec![0.6, -0.3, 0.45]]
}

fn cigar_grid() -> Vec<Vec<f64>> {
    vec![vec![0.6, 0.0, 0.0], vec![1.0, 0.3, -0.2], vec![1.5, 0.2, 0.1], vec![2.2, -0.5, 0.4]]
}

/// Builds one entry without running its self-test.
pub fn build_entry(name: &str, params: &Params) -> Result<CatalogEntry> {
    let (base, zero_t) = match name.strip_suffix("_zero_t") {
        Some(b) if HAS_TORSION.contains(&b) => (b, true),
        _ if BASE.contains(&name) => (name, false),
        _ => return Err(Error::Domain(format!("unknown catalog entry '{name}'; known: {}", names().join(", ")))),
    };
    let lam = params.lambda.clone();
    let l2 = lam.clone() * lam.clone();
    let zero = || rat(0, 1);
    let r = |p: i64, q: i64| rat(p, q);
    let scale_t = |t: AltForm<Rational>| if zero_t { AltForm::zero(t.dim(), 3) } else { t };
    let lam_t = if zero_t { zero() } else { lam.clone() };
    let lt2 = lam_t.clone() * lam_t.clone();

    let (description, geometry, oracles, expected) = match base {
        "flat_torus_3" => {
            let geo = lie(StructureConstants::abelian(3), scale_t(AltForm::basis(3, &[0, 1, 2], lam.clone())))?;
            let mut o = vec![
                oracle("Ric_11", Quantity::Ric(0, 0), -lt2.clone() / r(2, 1)),
                oracle("Ric_12", Quantity::Ric(0, 1), zero()),
                oracle("Scal", Quantity::Scal, -lt2.clone() * r(3, 2)),
                oracle("T²_11", Quantity::T2(0, 0), lt2.clone() * r(2, 1)),
                oracle("T²_13", Quantity::T2(0, 2), zero()),
                oracle("‖T‖²", Quantity::NormT2, lt2.clone() * r(6, 1)),
                oracle("Scal^g", Quantity::ScalG, zero()),
                oracle("Γ_123", Quantity::Gamma(0, 1, 2), lam_t.clone() / r(2, 1)),
            ];
            for (nm, q) in [
                ("σ", Quantity::MaxAbsSigma),
                ("θ", Quantity::MaxAbsTheta),
                ("Θ", Quantity::MaxAbsBigTheta),
                ("dT", Quantity::MaxAbsDt),
            ] {
                o.push(oracle(nm, q, zero()));
            }
            let flat = lt2 == zero();
            (
                "abelian 3-dimensional group, T = λe¹²³",
                geo,
                o,
                Expected {
                    first_bianchi: true,
                    pair_symmetry: true,
                    zz_flat: flat,
                    nabla_einstein: true,
                    soliton: flat,
                },
            )
        }
        "flat_torus_6" => {
            let mut t = AltForm::basis(6, &[0, 1, 2], lam.clone());
            t.add_basis(&[3, 4, 5], lam.clone());
            let geo = lie(StructureConstants::abelian(6), scale_t(t))?;
            let o = vec![
                oracle("Ric_44", Quantity::Ric(3, 3), -lt2.clone() / r(2, 1)),
                oracle("Scal", Quantity::Scal, -lt2.clone() * r(3, 1)),
                oracle("‖T‖²", Quantity::NormT2, lt2.clone() * r(12, 1)),
                oracle("σ", Quantity::MaxAbsSigma, zero()),
                oracle("Scal^g", Quantity::ScalG, zero()),
            ];
            let flat = lt2 == zero();
            (
                "abelian 6-dimensional group, T = λ(e¹²³ + e⁴⁵⁶)",
                geo,
                o,
                Expected {
                    first_bianchi: true,
                    pair_symmetry: true,
                    zz_flat: flat,
                    nabla_einstein: true,
                    soliton: flat,
                },
            )
        }
        "su2_cs" | "su2_family" => {
            let tt = if base == "su2_cs" { r(1, 1) } else { params.t.clone() };
            let tt = if zero_t { zero() } else { tt };
            let t_form = AltForm::basis(3, &[0, 1, 2], -(tt.clone() * lam.clone()));
            let geo = lie(StructureConstants::su2(&lam), t_form)?;
            // Γ = κε with κ = (1 − t)λ/2, so R = −(1 − t²)(λ²/4)(δ_ikδ_jl − δ_ilδ_jk)
            let one_m = r(1, 1) - tt.clone() * tt.clone();
            let mut o = vec![
                oracle("Ric_11", Quantity::Ric(0, 0), one_m.clone() * l2.clone() / r(2, 1)),
                oracle("Scal", Quantity::Scal, one_m.clone() * l2.clone() * r(3, 2)),
                oracle("Ric^g_11", Quantity::RicG(0, 0), l2.clone() / r(2, 1)),
                oracle("Ric^g_12", Quantity::RicG(0, 1), zero()),
                oracle("Scal^g", Quantity::ScalG, l2.clone() * r(3, 2)),
                oracle("‖T‖²", Quantity::NormT2, tt.clone() * tt.clone() * l2.clone() * r(6, 1)),
                oracle("Γ_123", Quantity::Gamma(0, 1, 2), (r(1, 1) - tt.clone()) * lam.clone() / r(2, 1)),
                oracle(
                    "C",
                    Quantity::EinsteinC,
                    one_m.clone() * l2.clone() * r(3, 2) + tt.clone() * tt.clone() * l2.clone() * r(3, 1),
                ),
            ];
            if tt == r(1, 1) {
                o.push(oracle("Γ", Quantity::MaxAbsGamma, zero()));
                o.push(oracle("R", Quantity::MaxAbsCurvature, zero()));
            }
            let flat = one_m == zero() || l2 == zero();
            let desc = if base == "su2_cs" {
                "SU(2) with bracket λε and Cartan–Schouten torsion T = −λe¹²³"
            } else {
                "SU(2) with bracket λε and torsion T = −tλe¹²³"
            };
            (
                desc,
                geo,
                o,
                Expected {
                    first_bianchi: true,
                    pair_symmetry: true,
                    zz_flat: flat,
                    nabla_einstein: true,
                    soliton: flat,
                },
            )
        }
        "heis3_r3" => {
            let c = StructureConstants::heisenberg().direct_sum(&StructureConstants::abelian(3));
            let geo = lie(c, scale_t(AltForm::basis(6, &[2, 3, 4], lam.clone())))?;
            // de³ = −e¹²: d(λe³⁴⁵) = −λe¹²⁴⁵
            let o = vec![
                oracle("dT_1245", Quantity::Dt(0, 1, 3, 4), -lam_t.clone()),
                oracle("dT_1234", Quantity::Dt(0, 1, 2, 3), zero()),
                oracle("‖T‖²", Quantity::NormT2, lt2.clone() * r(6, 1)),
                oracle("Scal^g", Quantity::ScalG, r(-1, 2)),
                oracle("Ric^g_33", Quantity::RicG(2, 2), r(1, 2)),
            ];
            let torsion_free = lt2 == zero();
            let exp = Expected {
                first_bianchi: torsion_free,
                pair_symmetry: torsion_free,
                zz_flat: false,
                nabla_einstein: false,
                soliton: false,
            };
            ("Heisenberg group times ℝ³, T = λe³⁴⁵", geo, o, exp)
        }
        "chart_phi" => {
            let n = 4;
            let flat = flat_metric(n);
            let t = if zero_t { vec![] } else { vec![([0, 1, 2], PHI)] };
            let geo = chart(n, vec![(-1.0, 1.0); n], phi_grid(), &as_rows(&flat), t, "0")?;
            let mut o = Vec::new();
            if !zero_t {
                for (k, p) in phi_grid().iter().enumerate() {
                    let phi = 1.0 + 0.3 * p[0].sin() + 0.2 * p[3] * p[3];
                    o.push(approx("δT_23 = −∂₁φ", Quantity::DeltaT(1, 2), k, -0.3 * p[0].cos(), 1e-8));
                    o.push(approx("dT_4123 = ∂₄φ", Quantity::Dt(3, 0, 1, 2), k, 0.4 * p[3], 1e-8));
                    o.push(approx("‖T‖² = 6φ²", Quantity::NormT2, k, 6.0 * phi * phi, 1e-10));
                }
            } else {
                o.push(approx("R", Quantity::MaxAbsCurvature, 0, 0.0, 1e-12));
            }
            let exp = if zero_t {
                Expected {
                    first_bianchi: true,
                    pair_symmetry: true,
                    zz_flat: true,
                    nabla_einstein: true,
                    soliton: true,
                }
            } else {
                Expected {
                    first_bianchi: false,
                    pair_symmetry: false,
                    zz_flat: false,
                    nabla_einstein: false,
                    soliton: false,
                }
            };
            ("flat ℝ⁴ with T = φ(x)e¹²³, φ = 1 + 0.3 sin x₁ + 0.2 x₄²", geo, o, exp)
        }
        "chart_conformal" => {
            let n = 3;
            let e2u = format!("exp(2*({CONFORMAL_U}))");
            let g: Vec<Vec<&str>> =
                (0..n).map(|i| (0..n).map(|j| if i == j { e2u.as_str() } else { "0" }).collect()).collect();
            let t_src = format!("exp(3*({CONFORMAL_U}))*(0.5 + 0.3*x3 + 0.2*x1*x2)");
            let t = if zero_t { vec![] } else { vec![([0, 1, 2], t_src.as_str())] };
            let geo = chart(n, vec![(-1.0, 1.0); n], cube_grid3(), &as_rows(&g), t, "0")?;
            let mut o = Vec::new();
            for (k, p) in cube_grid3().iter().enumerate() {
                let u = 0.2 * p[0] + 0.1 * p[1].sin() + 0.05 * p[2] * p[2];
                let lap = -0.1 * p[1].sin() + 0.1;
                let grad2 = 0.04 + 0.01 * p[1].cos().powi(2) + 0.01 * p[2] * p[2];
                // conformal scalar curvature in dimension 3
                o.push(approx("Scal^g", Quantity::ScalG, k, -(-2.0 * u).exp() * (4.0 * lap + 2.0 * grad2), 1e-8));
                if !zero_t {
                    let psi = 0.5 + 0.3 * p[2] + 0.2 * p[0] * p[1];
                    o.push(approx("‖T‖² = 6ψ²", Quantity::NormT2, k, 6.0 * psi * psi, 1e-10));
                }
            }
            let exp = if zero_t {
                Expected {
                    first_bianchi: true,
                    pair_symmetry: true,
                    zz_flat: false,
                    nabla_einstein: false,
                    soliton: false,
                }
            } else {
                Expected {
                    first_bianchi: false,
                    pair_symmetry: false,
                    zz_flat: false,
                    nabla_einstein: false,
                    soliton: false,
                }
            };
            ("conformally flat ℝ³, g = e^{2u}δ, with frame torsion ψ(x)e¹²³", geo, o, exp)
        }
        "chart_soliton_flat" => {
            let n = 3;
            let flat = flat_metric(n);
            let geo = chart(n, vec![(-1.0, 1.0); n], cube_grid3(), &as_rows(&flat), vec![], "0.5*x1 - 0.25*x3")?;
            let o = vec![
                approx("R", Quantity::MaxAbsCurvature, 0, 0.0, 1e-12),
                approx("Scal^g", Quantity::ScalG, 1, 0.0, 1e-12),
            ];
            (
                "flat ℝ³, T = 0, linear potential f = x₁/2 − x₃/4",
                geo,
                o,
                Expected {
                    first_bianchi: true,
                    pair_symmetry: true,
                    zz_flat: true,
                    nabla_einstein: true,
                    soliton: true,
                },
            )
        }
        "chart_cigar" => {
            let n = 3;
            let g: [&[&str]; 3] = [&["1/(4*(1 - exp(-x1)))", "0", "0"], &["0", "1 - exp(-x1)", "0"], &["0", "0", "1"]];
            let geo = chart(n, vec![(0.3, 3.0), (-1.0, 1.0), (-1.0, 1.0)], cigar_grid(), &g, vec![], "-x1")?;
            // u = log(1 + r²) on the cigar: Scal^g = 4/(1 + r²) = 4e^{−u}
            let o = cigar_grid()
                .iter()
                .enumerate()
                .map(|(k, p)| approx("Scal^g = 4e^{−x₁}", Quantity::ScalG, k, 4.0 * (-p[0]).exp(), 1e-8))
                .collect();
            (
                "steady cigar soliton times ℝ, in coordinates u = log(1 + r²), f = −u",
                geo,
                o,
                Expected {
                    first_bianchi: true,
                    pair_symmetry: true,
                    zz_flat: false,
                    nabla_einstein: false,
                    soliton: true,
                },
            )
        }
        _ => unreachable!("base names are matched above"),
    };
    let description = if zero_t { format!("{description}, with T replaced by 0") } else { description.to_string() };
    Ok(CatalogEntry { name: name.to_string(), description, geometry, oracles, expected })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleCheck {
    pub name: String,
    pub expected: String,
    pub computed: String,
    pub pass: bool,
}

impl CatalogEntry {
    /// Compares every oracle against the engine. Float comparisons of exact
    /// values use a relative tolerance of 1e-12.
    pub fn check_oracles(&self, samples: &SampleSet) -> Vec<OracleCheck> {
        crate::with_samples!(samples, s => self.oracles.iter().map(|o| check_one(o, s)).collect())
    }

    /// Runs the oracle self-test in `mode`; the first mismatch is an error.
    pub fn self_test(&self, mode: Mode) -> Result<()> {
        let samples = self.geometry.sample(mode, false)?;
        for c in self.check_oracles(&samples) {
            if !c.pass {
                return Err(Error::Catalog {
                    entry: self.name.clone(),
                    detail: format!("{}: expected {}, engine gives {}", c.name, c.expected, c.computed),
                });
            }
        }
        Ok(())
    }
}

fn check_one<S: Scalar>(o: &Oracle, samples: &[Sample<S>]) -> OracleCheck {
    let Some(sample) = samples.get(o.sample) else {
        return OracleCheck {
            name: o.name.clone(),
            expected: "-".into(),
            computed: "missing sample".into(),
            pass: false,
        };
    };
    let got = o.quantity.eval(&sample.data);
    let (expected, pass) = match &o.value {
        OracleValue::Exact(v) => {
            let pass = if S::EXACT {
                got == S::from_rational(v)
            } else {
                let e = Scalar::to_f64(v);
                (got.to_f64() - e).abs() <= 1e-12 * e.abs().max(1.0)
            };
            (format_rational(v), pass)
        }
        OracleValue::Approx { value, tol } => (format!("{value:e} ± {tol:e}"), (got.to_f64() - value).abs() <= *tol),
    };
    let computed = if S::EXACT { got.to_string() } else { format!("{:e}", got.to_f64()) };
    OracleCheck { name: o.name.clone(), expected, computed, pass }
}

/// One entry by name, self-tested in its default mode.
pub fn load_entry(name: &str, params: &Params) -> Result<CatalogEntry> {
    let e = build_entry(name, params)?;
    e.self_test(e.geometry.default_mode())?;
    Ok(e)
}

/// Every entry, each self-tested in its default mode.
pub fn load_catalog(params: &Params) -> Result<Vec<CatalogEntry>> {
    names().iter().map(|n| load_entry(n, params)).collect()
}
