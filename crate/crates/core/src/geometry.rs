//! Backend-independent geometry handle, the JSON geometry format, and
//! sampling of frame data over a grid.
//!
//! Indices in JSON are 1-based and each antisymmetry orbit may be listed
//! once. Rational values are strings, either decimal or `p/q`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chart::{ChartGeometry, TorsionTerm, DEFAULT_H};
use crate::curvature::lie_frame_data;
use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::identities::Sample;
use crate::lie::{LieGeometry, StructureConstants};
use crate::scalar::{format_rational, parse_rational, Rational};
use crate::tensor::{AltForm, Tensor};

/// Scalar system for a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Float,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Mode::Exact),
            "float" => Ok(Mode::Float),
            _ => Err(Error::Parse(format!("mode must be 'exact' or 'float', got '{s}'"))),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Geometry {
    Lie(LieGeometry),
    Chart(ChartGeometry),
}

/// Frame data over a grid, in the scalar type the backend computes in.
#[derive(Clone, Debug)]
pub enum SampleSet {
    Exact(Vec<Sample<Rational>>),
    Float(Vec<Sample<f64>>),
    /// Chart data, kept in double-double until residuals are reduced.
    Extended(Vec<Sample<Dd>>),
}

/// Runs `$body` with `$s` bound to the samples of whichever scalar type.
#[macro_export]
macro_rules! with_samples {
    ($set:expr, $s:ident => $body:expr) => {
        match $set {
            $crate::geometry::SampleSet::Exact($s) => $body,
            $crate::geometry::SampleSet::Float($s) => $body,
            $crate::geometry::SampleSet::Extended($s) => $body,
        }
    };
}

impl SampleSet {
    pub fn len(&self) -> usize {
        with_samples!(self, s => s.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn mode(&self) -> Mode {
        match self {
            SampleSet::Exact(_) => Mode::Exact,
            _ => Mode::Float,
        }
    }
}

impl Geometry {
    pub fn dim(&self) -> usize {
        match self {
            Geometry::Lie(g) => g.dim(),
            Geometry::Chart(g) => g.dim(),
        }
    }

    pub fn backend(&self) -> &'static str {
        match self {
            Geometry::Lie(_) => "lie",
            Geometry::Chart(_) => "chart",
        }
    }

    /// Lie geometries always carry a (constant) potential.
    pub fn has_potential(&self) -> bool {
        match self {
            Geometry::Lie(_) => true,
            Geometry::Chart(g) => g.potential().is_some(),
        }
    }

    /// Mode used when none is requested: exact where possible.
    pub fn default_mode(&self) -> Mode {
        match self {
            Geometry::Lie(_) => Mode::Exact,
            Geometry::Chart(_) => Mode::Float,
        }
    }

    /// Frame data at every grid point (a single point on a Lie group).
    /// Potential derivatives are computed only when asked for.
    pub fn sample(&self, mode: Mode, with_potential: bool) -> Result<SampleSet> {
        match (self, mode) {
            (Geometry::Lie(g), Mode::Exact) => {
                Ok(SampleSet::Exact(vec![Sample { point: None, data: lie_frame_data(g) }]))
            }
            (Geometry::Lie(g), Mode::Float) => {
                Ok(SampleSet::Float(vec![Sample { point: None, data: lie_frame_data(g) }]))
            }
            (Geometry::Chart(_), Mode::Exact) => Err(Error::Capability(
                "exact mode needs a Lie geometry; chart derivatives are finite differences (use --mode float)".into(),
            )),
            (Geometry::Chart(g), Mode::Float) => {
                let want = with_potential && g.potential().is_some();
                let samples = g
                    .grid()
                    .par_iter()
                    .map(|p| {
                        let pf = g.point_frame(p, want)?;
                        let mut data = pf.data;
                        if g.potential().is_none() {
                            data.potential = None;
                        }
                        Ok(Sample { point: Some(pf.point), data })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(SampleSet::Extended(samples))
            }
        }
    }

    pub fn to_json(&self) -> GeometryJson {
        match self {
            Geometry::Lie(g) => lie_to_json(g),
            Geometry::Chart(g) => chart_to_json(g),
        }
    }

    pub fn from_json_str(src: &str) -> Result<Self> {
        let json: GeometryJson = serde_json::from_str(src).map_err(|e| Error::Parse(format!("geometry JSON: {e}")))?;
        json.build()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValueEntry {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub v: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExprEntry {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub expr: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LieJson {
    pub dim: usize,
    pub c: Vec<ValueEntry>,
    #[serde(rename = "T", default)]
    pub t: Vec<ValueEntry>,
    #[serde(default = "zero_string")]
    pub f: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartJson {
    pub dim: usize,
    #[serde(rename = "box")]
    pub bounds: Vec<[f64; 2]>,
    #[serde(default = "default_h")]
    pub h: f64,
    pub grid: Vec<Vec<f64>>,
    pub g: Vec<Vec<String>>,
    #[serde(rename = "T", default)]
    pub t: Vec<ExprEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
}

/// On-disk geometry description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "lowercase")]
pub enum GeometryJson {
    Lie(LieJson),
    Chart(ChartJson),
}

fn zero_string() -> String {
    "0".into()
}

fn default_h() -> f64 {
    DEFAULT_H
}

fn zero_based(dim: usize, what: &str, idx: [usize; 3]) -> Result<[usize; 3]> {
    if idx.iter().any(|&a| a == 0 || a > dim) {
        return Err(Error::InvalidGeometry(format!(
            "{what} index ({},{},{}) out of range 1..={dim}",
            idx[0], idx[1], idx[2]
        )));
    }
    Ok([idx[0] - 1, idx[1] - 1, idx[2] - 1])
}

fn value(what: &str, s: &str) -> Result<Rational> {
    parse_rational(s).map_err(|e| Error::Parse(format!("{what}: {e}")))
}

fn expr(what: &str, s: &str, dim: usize) -> Result<Expr> {
    Expr::parse(s, dim).map_err(|e| Error::Parse(format!("{what}: {e}")))
}

impl GeometryJson {
    pub fn build(&self) -> Result<Geometry> {
        match self {
            GeometryJson::Lie(j) => j.build().map(Geometry::Lie),
            GeometryJson::Chart(j) => j.build().map(Geometry::Chart),
        }
    }

    pub fn to_string_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("geometry JSON serializes")
    }
}

impl LieJson {
    fn build(&self) -> Result<LieGeometry> {
        let n = self.dim;
        crate::tensor::Dim::new(n)?;
        let mut c: Tensor<Rational> = Tensor::zeros(n, 3);
        let mut seen = std::collections::HashSet::new();
        for e in &self.c {
            let [i, j, k] = zero_based(n, "c", [e.i, e.j, e.k])?;
            if i == j {
                return Err(Error::InvalidGeometry(format!("c({},{},{}) must have i ≠ j", e.i, e.j, e.k)));
            }
            if !seen.insert((i.min(j), i.max(j), k)) {
                return Err(Error::InvalidGeometry(format!(
                    "c({},{},{}) repeats an entry already given up to antisymmetry",
                    e.i, e.j, e.k
                )));
            }
            let v = value(&format!("c({},{},{})", e.i, e.j, e.k), &e.v)?;
            c.set(&[i, j, k], v.clone());
            c.set(&[j, i, k], -v);
        }
        let c = StructureConstants::new(c)?;
        let t = torsion_from_entries(n, &self.t)?;
        let f = value("f", &self.f)?;
        LieGeometry::new(c, t, f)
    }
}

fn torsion_from_entries(n: usize, entries: &[ValueEntry]) -> Result<AltForm<Rational>> {
    let mut t = AltForm::zero(n, 3);
    let mut seen = std::collections::HashSet::new();
    for e in entries {
        let idx = zero_based(n, "T", [e.i, e.j, e.k])?;
        check_orbit(&mut seen, idx, [e.i, e.j, e.k])?;
        t.add_basis(&idx, value(&format!("T({},{},{})", e.i, e.j, e.k), &e.v)?);
    }
    Ok(t)
}

fn check_orbit(seen: &mut std::collections::HashSet<[usize; 3]>, idx: [usize; 3], shown: [usize; 3]) -> Result<()> {
    if idx[0] == idx[1] || idx[1] == idx[2] || idx[0] == idx[2] {
        return Err(Error::InvalidGeometry(format!(
            "T({},{},{}) needs three distinct indices",
            shown[0], shown[1], shown[2]
        )));
    }
    let mut key = idx;
    key.sort_unstable();
    if !seen.insert(key) {
        return Err(Error::InvalidGeometry(format!(
            "T({},{},{}) repeats an entry already given up to antisymmetry",
            shown[0], shown[1], shown[2]
        )));
    }
    Ok(())
}

impl ChartJson {
    fn build(&self) -> Result<ChartGeometry> {
        let n = self.dim;
        crate::tensor::Dim::new(n)?;
        let mut g = Vec::with_capacity(self.g.len());
        for (a, row) in self.g.iter().enumerate() {
            let mut out = Vec::with_capacity(row.len());
            for (b, s) in row.iter().enumerate() {
                out.push(expr(&format!("g[{}][{}]", a + 1, b + 1), s, n)?);
            }
            g.push(out);
        }
        let mut t = Vec::with_capacity(self.t.len());
        let mut seen = std::collections::HashSet::new();
        for e in &self.t {
            let idx = zero_based(n, "T", [e.i, e.j, e.k])?;
            check_orbit(&mut seen, idx, [e.i, e.j, e.k])?;
            t.push(TorsionTerm { idx, expr: expr(&format!("T({},{},{})", e.i, e.j, e.k), &e.expr, n)? });
        }
        let f = match &self.f {
            Some(s) => Some(expr("f", s, n)?),
            None => None,
        };
        let bounds = self.bounds.iter().map(|b| (b[0], b[1])).collect();
        ChartGeometry::new(n, bounds, self.h, self.grid.clone(), g, t, f)
    }
}

fn lie_to_json(g: &LieGeometry) -> GeometryJson {
    let n = g.dim();
    let c = g.structure().tensor();
    let mut cs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in 0..n {
                let v = c.at3(i, j, k);
                if !num_traits::Zero::is_zero(v) {
                    cs.push(ValueEntry { i: i + 1, j: j + 1, k: k + 1, v: format_rational(v) });
                }
            }
        }
    }
    let t = g.torsion().tensor();
    let mut ts = Vec::new();
    for idx in crate::chart::torsion_representatives(n) {
        let v = t.get(&idx);
        if !num_traits::Zero::is_zero(v) {
            ts.push(ValueEntry { i: idx[0] + 1, j: idx[1] + 1, k: idx[2] + 1, v: format_rational(v) });
        }
    }
    GeometryJson::Lie(LieJson { dim: n, c: cs, t: ts, f: format_rational(g.potential()) })
}

fn chart_to_json(g: &ChartGeometry) -> GeometryJson {
    GeometryJson::Chart(ChartJson {
        dim: g.dim(),
        bounds: g.bounds().iter().map(|&(a, b)| [a, b]).collect(),
        h: g.h(),
        grid: g.grid().to_vec(),
        g: g.metric().iter().map(|row| row.iter().map(|e| e.source().to_string()).collect()).collect(),
        t: g.torsion()
            .iter()
            .map(|t| ExprEntry { i: t.idx[0] + 1, j: t.idx[1] + 1, k: t.idx[2] + 1, expr: t.expr.source().to_string() })
            .collect(),
        f: g.potential().map(|e| e.source().to_string()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEIS: &str = r#"{"backend":"lie","dim":3,
        "c":[{"i":1,"j":2,"k":3,"v":"1"}],
        "T":[{"i":1,"j":2,"k":3,"v":"1/2"}],"f":"0"}"#;

    #[test]
    fn lie_json_round_trip() {
        let geo = Geometry::from_json_str(HEIS).unwrap();
        let Geometry::Lie(l) = &geo else { panic!("expected lie") };
        assert_eq!(l.structure().tensor().at3(1, 0, 2), &crate::scalar::rat(-1, 1));
        assert_eq!(l.torsion().tensor().at3(2, 1, 0), &crate::scalar::rat(-1, 2));
        let again = geo.to_json().build().unwrap();
        assert_eq!(again.to_json(), geo.to_json());
    }

    #[test]
    fn repeated_orbit_is_rejected() {
        let src = r#"{"backend":"lie","dim":3,"c":[{"i":1,"j":2,"k":3,"v":"1"},{"i":2,"j":1,"k":3,"v":"-1"}],"T":[]}"#;
        assert!(matches!(Geometry::from_json_str(src), Err(Error::InvalidGeometry(_))));
        let src = r#"{"backend":"lie","dim":3,"c":[],"T":[{"i":1,"j":2,"k":3,"v":"1"},{"i":3,"j":1,"k":2,"v":"1"}]}"#;
        assert!(matches!(Geometry::from_json_str(src), Err(Error::InvalidGeometry(_))));
    }

    #[test]
    fn parse_errors_carry_location() {
        let err = Geometry::from_json_str("{\"backend\":\"lie\",\n \"dim\": }").unwrap_err();
        let Error::Parse(msg) = err else { panic!("expected parse error") };
        assert!(msg.contains("line 2"), "{msg}");
        let bad = r#"{"backend":"chart","dim":2,"box":[[-1,1],[-1,1]],"grid":[[0,0]],"g":[["1","0"],["0","1 +"]]}"#;
        let Err(Error::Parse(msg)) = Geometry::from_json_str(bad) else { panic!("expected parse error") };
        assert!(msg.contains("g[2][2]"), "{msg}");
    }

    #[test]
    fn unknown_fields_and_indices_are_rejected() {
        let src = r#"{"backend":"lie","dim":3,"c":[],"t":[]}"#;
        assert!(Geometry::from_json_str(src).is_err());
        let src = r#"{"backend":"lie","dim":3,"c":[{"i":0,"j":2,"k":3,"v":"1"}]}"#;
        assert!(Geometry::from_json_str(src).is_err());
    }

    #[test]
    fn chart_round_trip_and_exact_mode_rejected() {
        let src = r#"{"backend":"chart","dim":2,"box":[[-1,1],[-1,1]],"h":0.001,"grid":[[0.1,0.2]],
            "g":[["exp(2*x1)","0"],["0","exp(2*x1)"]],"f":"x2"}"#;
        let geo = Geometry::from_json_str(src).unwrap();
        assert_eq!(geo.to_json().build().unwrap().to_json(), geo.to_json());
        assert!(matches!(geo.sample(Mode::Exact, false), Err(Error::Capability(_))));
        let s = geo.sample(Mode::Float, true).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.mode(), Mode::Float);
    }
}
