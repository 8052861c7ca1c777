//! Plain-text rendering of reports.

use std::fmt::Write;

use skewtorsion::fuzz::FuzzReport;
use skewtorsion::identities::ResidualReport;

use crate::report::{CatalogRow, CheckReport, ClassifyReport};

fn residual(r: &ResidualReport) -> String {
    r.exact_residual.clone().unwrap_or_else(|| format!("{:.3e}", r.residual))
}

fn verdict(r: &ResidualReport) -> &'static str {
    match (r.verdict, r.universal) {
        (true, _) => "true",
        (false, true) => "FAIL",
        (false, false) => "false",
    }
}

fn opt(b: Option<bool>) -> &'static str {
    match b {
        Some(true) => "true",
        Some(false) => "false",
        None => "n/a",
    }
}

pub fn check(rep: &CheckReport) -> String {
    let mut out = String::new();
    for g in &rep.geometries {
        let h = g.h.map(|h| format!(", h = {h:e}")).unwrap_or_default();
        let _ = writeln!(
            out,
            "{} ({}, n = {}, {}, {} sample(s){h})",
            g.name,
            g.backend,
            g.dim,
            format!("{:?}", g.mode).to_lowercase(),
            g.samples
        );
        for r in &g.identities {
            let m = if r.marginal { " (marginal)" } else { "" };
            let at = if r.residual > 0.0 { r.witness_component.as_str() } else { "" };
            let _ = writeln!(out, "  {:<16} {:<6} {:<14} {at}{m}", r.id, verdict(r), residual(r));
        }
        for s in &g.skipped {
            let _ = writeln!(out, "  {:<16} skipped: {}", s.id, s.reason);
        }
        for o in g.oracles.iter().filter(|o| !o.pass) {
            let _ = writeln!(out, "  oracle {} expected {} got {}", o.name, o.expected, o.computed);
        }
    }
    let _ = writeln!(out, "{}", if rep.passed { "PASS" } else { "FAIL" });
    out
}

pub fn classify(rep: &ClassifyReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<24} {:>5} {:>5} {:>5} {:>8} {:>7}  notes",
        "geometry", "RB", "PAIR", "ZZ", "EINSTEIN", "SOLITON"
    );
    for g in &rep.geometries {
        let v = &g.verdicts;
        let mut notes = Vec::new();
        if g.matches_expected == Some(false) {
            notes.push("differs from catalog expectation".to_string());
        }
        for c in &g.constants {
            notes.push(format!("{} = {}", c.name, c.exact.clone().unwrap_or_else(|| format!("{:.6}", c.value))));
        }
        notes.extend(g.violations.iter().map(|v| format!("VIOLATED {v}")));
        let _ = writeln!(
            out,
            "{:<24} {:>5} {:>5} {:>5} {:>8} {:>7}  {}",
            g.name,
            v.first_bianchi,
            opt(v.pair_symmetry),
            opt(v.zz_flat),
            opt(v.nabla_einstein),
            opt(v.soliton),
            notes.join("; ")
        );
    }
    let _ = writeln!(out, "{}", if rep.passed { "PASS" } else { "FAIL" });
    out
}

pub fn fuzz(rep: &FuzzReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "seed {} count {} dims {:?}", rep.seed, rep.count, rep.dims);
    for t in &rep.identities {
        let _ = writeln!(out, "  {:<16} {:>5} instances, max residual {}", t.id, t.evaluated, t.max_residual);
    }
    let _ = writeln!(
        out,
        "  pair symmetry true/false {}/{}, ZZ true {}, RB true {}",
        rep.pair_symmetry_true, rep.pair_symmetry_false, rep.zz_true, rep.rb_true
    );
    for f in &rep.failures {
        let _ = writeln!(
            out,
            "  counterexample #{} ({:?}): {} residual {} at {}",
            f.index, f.family, f.check, f.residual, f.witness
        );
    }
    let _ = writeln!(out, "{}", if rep.passed { "PASS" } else { "FAIL" });
    out
}

pub fn catalog(rows: &[CatalogRow]) -> String {
    let mut out = String::new();
    for r in rows {
        let e = &r.expected;
        let _ = writeln!(
            out,
            "{:<24} {:<5} n = {}  RB {} PAIR {} ZZ {} EINSTEIN {} SOLITON {}\n    {}",
            r.name,
            r.backend,
            r.dim,
            e.first_bianchi,
            e.pair_symmetry,
            e.zz_flat,
            e.nabla_einstein,
            e.soliton,
            r.description
        );
    }
    out
}
