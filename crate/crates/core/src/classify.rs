//! Classifiers for structural conditions on the torsion connection, with
//! the implications between them enforced as hard checks.
//!
//! A classifier verdict of `false` is an answer, not an error. A broken
//! implication (antecedent passes, consequent fails) is recorded as a
//! violation; disagreement in the pair-symmetry triple and a non-flat
//! zz-geometry are returned as [`Error::InvariantViolation`].

use serde::Serialize;

use crate::curvature::FrameData;
use crate::error::{Error, Result};
use crate::identities::{
    evaluate_check, evaluate_identity, member, CheckKind, CheckSpec, EvalOptions, IdentityId, Member, ResidualReport,
    Sample,
};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// "If `antecedent` then `consequent`", as observed on one geometry.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Implication {
    pub name: String,
    pub antecedent: bool,
    pub consequent: bool,
    pub violated: bool,
}

impl Implication {
    fn new(name: &str, antecedent: bool, consequent: bool) -> Self {
        Implication { name: name.to_string(), antecedent, consequent, violated: antecedent && !consequent }
    }
}

fn check<S: Scalar>(
    name: &str,
    anchor: &str,
    kind: CheckKind,
    samples: &[Sample<S>],
    opts: &EvalOptions,
    f: impl Fn(&FrameData<S>) -> Vec<Member<S>>,
) -> Result<ResidualReport> {
    let spec = CheckSpec { name, anchor, kind, universal: false };
    evaluate_check(&spec, samples, opts, |fd| Ok(f(fd)))
}

fn scalar_member<S: Scalar>(label: &'static str, v: S, n: usize) -> Vec<Member<S>> {
    vec![member(label, Tensor::scalar(v, n))]
}

/// Spread of `‖T‖²` over the grid.
pub fn norm_t2_constancy<S: Scalar>(samples: &[Sample<S>], opts: &EvalOptions) -> Result<ResidualReport> {
    check("NORM_T2_CONST", "‖T‖² = const", CheckKind::Spread, samples, opts, |fd| {
        scalar_member("‖T‖²", fd.pack.norm_t2.clone(), fd.dim())
    })
}

pub fn curvature_vanishes<S: Scalar>(samples: &[Sample<S>], opts: &EvalOptions) -> Result<ResidualReport> {
    check("FLAT", "R = 0", CheckKind::Pointwise, samples, opts, |fd| vec![member("R", fd.curvature.r().clone())])
}

pub fn harmonic_torsion<S: Scalar>(samples: &[Sample<S>], opts: &EvalOptions) -> Result<ResidualReport> {
    check("HARMONIC", "dT = 0, δT = 0", CheckKind::Pointwise, samples, opts, |fd| {
        vec![member("dT", fd.pack.dt.tensor().clone()), member("δT", fd.pack.delta_t.tensor().clone())]
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FirstBianchiReport {
    pub holds: bool,
    pub rb: ResidualReport,
    pub bsk: ResidualReport,
    pub norm_t2: ResidualReport,
    pub rb2: ResidualReport,
    pub implications: Vec<Implication>,
}

/// Riemannian first Bianchi identity for the torsion connection, and what
/// it forces: `dT = −2∇T = (2/3)σ`, `∇^{1/3}T = 0`, constant `‖T‖²`, and the
/// contracted second Bianchi identity.
pub fn classify_first_bianchi<S: Scalar>(samples: &[Sample<S>], opts: &EvalOptions) -> Result<FirstBianchiReport> {
    let rb = evaluate_identity(IdentityId::Rb, samples, opts)?;
    let bsk = evaluate_identity(IdentityId::Bsk, samples, opts)?;
    let norm_t2 = norm_t2_constancy(samples, opts)?;
    let rb2 = evaluate_identity(IdentityId::Rb2, samples, opts)?;
    let holds = rb.verdict;
    let implications = vec![
        Implication::new("RB ⇒ BSK", holds, bsk.verdict),
        Implication::new("RB ⇒ ‖T‖² constant", holds, norm_t2.verdict),
        Implication::new("RB ⇒ RB2", holds, rb2.verdict),
    ];
    Ok(FirstBianchiReport { holds, rb, bsk, norm_t2, rb2, implications })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairSymmetryReport {
    /// `∇T` is a 4-form.
    pub nabla_t_four_form: bool,
    pub pair_symmetric: bool,
    /// `dT = 4∇^gT`.
    pub dt_is_four_nabla_g_t: bool,
    /// Disagreement only among near-threshold residuals.
    pub marginal_disagreement: bool,
    pub reports: Vec<ResidualReport>,
    pub implications: Vec<Implication>,
}

impl PairSymmetryReport {
    pub fn triple(&self) -> (bool, bool, bool) {
        (self.nabla_t_four_form, self.pair_symmetric, self.dt_is_four_nabla_g_t)
    }
}

/// The three equivalent conditions for `R ∈ S²Λ²`. They must agree.
pub fn classify_pair_symmetry<S: Scalar>(samples: &[Sample<S>], opts: &EvalOptions) -> Result<PairSymmetryReport> {
    let a = evaluate_identity(IdentityId::FourfA, samples, opts)?;
    let b = evaluate_identity(IdentityId::PairSym, samples, opts)?;
    let c = evaluate_identity(IdentityId::FourfC, samples, opts)?;
    let dt = check("DT_ZERO", "dT = 0", CheckKind::Pointwise, samples, opts, |fd| {
        vec![member("dT", fd.pack.dt.tensor().clone())]
    })?;
    let ngt = check("NABLA_G_T_ZERO", "∇^gT = 0", CheckKind::Pointwise, samples, opts, |fd| {
        vec![member("∇^gT", fd.pack.nabla_g_t.clone())]
    })?;
    let (va, vb, vc) = (a.verdict, b.verdict, c.verdict);
    let agree = va == vb && vb == vc;
    let marginal = !agree && [&a, &b, &c].iter().any(|r| r.marginal);
    if !agree && !marginal {
        return Err(Error::InvariantViolation(format!(
            "pair-symmetry conditions disagree: ∇T 4-form {va} (residual {:e}), R pair-symmetric {vb} ({:e}), dT = 4∇^gT {vc} ({:e})",
            a.residual, b.residual, c.residual
        )));
    }
    let implications = vec![Implication::new("PAIR_SYM ∧ dT = 0 ⇒ ∇^gT = 0", vb && dt.verdict, ngt.verdict)];
    Ok(PairSymmetryReport {
        nabla_t_four_form: va,
        pair_symmetric: vb,
        dt_is_four_nabla_g_t: vc,
        marginal_disagreement: marginal,
        reports: vec![a, b, c, dt, ngt],
        implications,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZzReport {
    pub holds: bool,
    pub flat: bool,
    pub zz: ResidualReport,
    pub curvature: ResidualReport,
    pub zz1: ResidualReport,
}

/// `R(X,Y,Z,V) = R(Z,Y,X,V)` forces `R = 0`.
pub fn classify_zz_flat<S: Scalar>(samples: &[Sample<S>], opts: &EvalOptions) -> Result<ZzReport> {
    let zz = evaluate_identity(IdentityId::Zz, samples, opts)?;
    let curvature = curvature_vanishes(samples, opts)?;
    let zz1 = evaluate_identity(IdentityId::Zz1, samples, opts)?;
    if zz.verdict && !curvature.verdict {
        return Err(Error::InvariantViolation(format!(
            "zz condition holds (residual {:e}) but curvature is nonzero (max {:e} at {})",
            zz.residual, curvature.residual, curvature.witness_component
        )));
    }
    Ok(ZzReport { holds: zz.verdict, flat: curvature.verdict, zz, curvature, zz1 })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EinsteinReport {
    pub einstein: bool,
    /// `Scal/n` at each sample.
    pub lambda: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_exact: Option<String>,
    pub ein2: ResidualReport,
    pub ein6: ResidualReport,
    pub t11: ResidualReport,
    /// Constancy of `C = Scal + n/(6(n−2))‖T‖²`, when ∇-Einstein with `3θ + Θ = 0`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ein9: Option<ResidualReport>,
    /// Constancy of `B = Scal + n/(2(n−2))‖T‖²`, when ∇-Einstein and pair-symmetric.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ein8: Option<ResidualReport>,
    /// In dimension 6, `C = Scal^g`; set when C was checked there.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scal_g_constant: Option<bool>,
    pub implications: Vec<Implication>,
}

/// ∇-Einstein condition `Ric^S = (Scal/n)g` and the constants it forces.
pub fn classify_nabla_einstein<S: Scalar>(samples: &[Sample<S>], opts: &EvalOptions) -> Result<EinsteinReport> {
    let n = samples.first().map(|s| s.data.dim()).unwrap_or(0);
    if n <= 2 {
        return Err(Error::Domain(format!(
            "∇-Einstein classification needs n ≥ 3 (the constants divide by n − 2), got n = {n}"
        )));
    }
    let ein2 = evaluate_identity(IdentityId::Ein2, samples, opts)?;
    let ein6 = evaluate_identity(IdentityId::Ein6, samples, opts)?;
    let t11 = evaluate_identity(IdentityId::T11, samples, opts)?;
    let einstein = ein2.verdict;
    let lam = |s: &Sample<S>| s.data.curvature.scal().clone() / S::from_i64(n as i64);
    let lambda = samples.iter().map(|s| lam(s).to_f64()).collect();
    let lambda_exact = samples.first().filter(|_| S::EXACT).map(|s| lam(s).to_string());
    let mut implications = vec![Implication::new("∇-Einstein ⇒ EIN6", einstein, ein6.verdict)];
    let (mut ein9, mut ein8, mut scal_g_constant) = (None, None, None);
    if einstein && t11.verdict {
        let r = evaluate_identity(IdentityId::Ein9, samples, opts)?;
        implications.push(Implication::new("∇-Einstein ∧ 3θ + Θ = 0 ⇒ C constant", true, r.verdict));
        if n == 6 {
            scal_g_constant = Some(r.verdict);
        }
        ein9 = Some(r);
    }
    if einstein {
        let pair = evaluate_identity(IdentityId::PairSym, samples, opts)?;
        if pair.verdict {
            let r = evaluate_identity(IdentityId::Ein8, samples, opts)?;
            implications.push(Implication::new("∇-Einstein ∧ PAIR_SYM ⇒ B constant", true, r.verdict));
            ein8 = Some(r);
        }
    }
    Ok(EinsteinReport { einstein, lambda, lambda_exact, ein2, ein6, t11, ein9, ein8, scal_g_constant, implications })
}

/// The four conditions on a generalized gradient soliton that are
/// equivalent on compact manifolds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MainRTable {
    pub norm_t2_constant: bool,
    pub f_constant: bool,
    pub ric_zero: bool,
    pub scal_g_constant: bool,
    pub agree: bool,
    /// Agreement is asserted only where compactness is modelled (Lie groups).
    pub assertion_applicable: bool,
    pub reports: Vec<ResidualReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolitonReport {
    pub soliton: bool,
    pub gein1: ResidualReport,
    pub gein2: ResidualReport,
    pub consequences: Vec<ResidualReport>,
    pub main_r: MainRTable,
    pub harmonic: bool,
    pub harmonic_report: ResidualReport,
    pub implications: Vec<Implication>,
}

/// Generalized gradient Ricci soliton with `k = 0`:
/// `Ric^g = ¼T² − ∇^g∇^g f`, `δT = −df⌟T`, `dT = 0`.
///
/// `compact_model` marks backends on which the four-condition equivalence
/// is asserted.
pub fn classify_soliton<S: Scalar>(
    samples: &[Sample<S>],
    opts: &EvalOptions,
    compact_model: bool,
) -> Result<SolitonReport> {
    if samples.iter().any(|s| s.data.potential.is_none()) {
        return Err(Error::Capability("soliton classification needs a potential f".into()));
    }
    let gein1 = evaluate_identity(IdentityId::Gein1, samples, opts)?;
    let gein2 = evaluate_identity(IdentityId::Gein2, samples, opts)?;
    let soliton = gein1.verdict;
    let mut consequences = Vec::new();
    let mut implications = Vec::new();
    for id in [IdentityId::Gein3, IdentityId::Gein7a, IdentityId::Gein7b, IdentityId::Gein8Eq, IdentityId::Ffinn] {
        let r = evaluate_identity(id, samples, opts)?;
        implications.push(Implication::new(&format!("soliton ⇒ {}", id.name()), soliton, r.verdict));
        consequences.push(r);
    }

    let norm_t2 = norm_t2_constancy(samples, opts)?;
    let f_const = check("F_CONST", "f = const", CheckKind::Spread, samples, opts, |fd| {
        let f = fd.potential.as_ref().map(|p| p.f.clone()).unwrap_or_else(S::zero);
        scalar_member("f", f, fd.dim())
    })?;
    let ric = check("RIC_ZERO", "Ric = 0", CheckKind::Pointwise, samples, opts, |fd| {
        vec![member("Ric", fd.curvature.ric().clone())]
    })?;
    let scal_g = check("SCAL_G_CONST", "Scal^g = const", CheckKind::Spread, samples, opts, |fd| {
        scalar_member("Scal^g", fd.scal_g.clone(), fd.dim())
    })?;
    let conds = [norm_t2.verdict, f_const.verdict, ric.verdict, scal_g.verdict];
    let agree = conds.iter().all(|&c| c == conds[0]);
    let harmonic_report = harmonic_torsion(samples, opts)?;
    let harmonic = harmonic_report.verdict;
    if compact_model {
        implications.push(Implication::new("soliton ⇒ four conditions agree", soliton, agree));
        implications.push(Implication::new(
            "soliton ∧ any condition ⇒ dT = δT = 0",
            soliton && conds.iter().any(|&c| c),
            harmonic,
        ));
    }
    let main_r = MainRTable {
        norm_t2_constant: conds[0],
        f_constant: conds[1],
        ric_zero: conds[2],
        scal_g_constant: conds[3],
        agree,
        assertion_applicable: compact_model,
        reports: vec![norm_t2, f_const, ric, scal_g],
    };
    Ok(SolitonReport { soliton, gein1, gein2, consequences, main_r, harmonic, harmonic_report, implications })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SideConditions {
    /// `∇T = 0 ⇒ θ = Θ = 0`.
    pub parallel: Implication,
    /// `RB2 ⇔ BIII`, as two implications.
    pub rb2_biii: [Implication; 2],
    /// `PAIR_SYM ∧ Ric = 0 ⇒ ‖T‖²` constant.
    pub pair_ricci_flat: Implication,
}

/// Implications that do not belong to a single classifier.
pub fn side_conditions<S: Scalar>(samples: &[Sample<S>], opts: &EvalOptions) -> Result<SideConditions> {
    let parallel = check("NABLA_T_ZERO", "∇T = 0", CheckKind::Pointwise, samples, opts, |fd| {
        vec![member("∇T", fd.pack.nabla_t.clone())]
    })?;
    let thetas = check("THETA_ZERO", "θ = Θ = 0", CheckKind::Pointwise, samples, opts, |fd| {
        vec![member("θ", fd.pack.theta.clone()), member("Θ", fd.pack.big_theta.clone())]
    })?;
    let rb2 = evaluate_identity(IdentityId::Rb2, samples, opts)?;
    let biii = evaluate_identity(IdentityId::Biii, samples, opts)?;
    let pair = evaluate_identity(IdentityId::PairSym, samples, opts)?;
    let ric = check("RIC_ZERO", "Ric = 0", CheckKind::Pointwise, samples, opts, |fd| {
        vec![member("Ric", fd.curvature.ric().clone())]
    })?;
    let norm = norm_t2_constancy(samples, opts)?;
    Ok(SideConditions {
        parallel: Implication::new("∇T = 0 ⇒ θ = Θ = 0", parallel.verdict, thetas.verdict),
        rb2_biii: [
            Implication::new("RB2 ⇒ BIII", rb2.verdict, biii.verdict),
            Implication::new("BIII ⇒ RB2", biii.verdict, rb2.verdict),
        ],
        pair_ricci_flat: Implication::new(
            "PAIR_SYM ∧ Ric = 0 ⇒ ‖T‖² constant",
            pair.verdict && ric.verdict,
            norm.verdict,
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::lie_frame_data;
    use crate::lie::{LieGeometry, StructureConstants};
    use crate::scalar::{rat, Rational};
    use crate::tensor::AltForm;

    fn su2_cs() -> Vec<Sample<Rational>> {
        let geo =
            LieGeometry::new(StructureConstants::su2(&rat(1, 1)), AltForm::basis(3, &[0, 1, 2], rat(-1, 1)), rat(0, 1))
                .unwrap();
        vec![Sample { point: None, data: lie_frame_data(&geo) }]
    }

    fn flat_torus() -> Vec<Sample<Rational>> {
        let geo = LieGeometry::new(StructureConstants::abelian(3), AltForm::basis(3, &[0, 1, 2], rat(1, 1)), rat(0, 1))
            .unwrap();
        vec![Sample { point: None, data: lie_frame_data(&geo) }]
    }

    #[test]
    fn cartan_schouten_classifies_true_everywhere() {
        let s = su2_cs();
        let o = EvalOptions::default();
        assert!(classify_first_bianchi(&s, &o).unwrap().holds);
        assert_eq!(classify_pair_symmetry(&s, &o).unwrap().triple(), (true, true, true));
        let zz = classify_zz_flat(&s, &o).unwrap();
        assert!(zz.holds && zz.flat);
        let e = classify_nabla_einstein(&s, &o).unwrap();
        assert!(e.einstein);
        assert_eq!(e.ein9.unwrap().values[0].exact.as_deref(), Some("3"));
        let sol = classify_soliton(&s, &o, true).unwrap();
        assert!(sol.soliton && sol.main_r.agree && sol.main_r.ric_zero && sol.harmonic);
    }

    #[test]
    fn flat_torus_fails_zz_and_soliton() {
        let s = flat_torus();
        let o = EvalOptions::default();
        let zz = classify_zz_flat(&s, &o).unwrap();
        assert!(!zz.holds);
        let sol = classify_soliton(&s, &o, true).unwrap();
        assert!(!sol.soliton);
        assert!(sol.implications.iter().all(|i| !i.violated));
        let e = classify_nabla_einstein(&s, &o).unwrap();
        assert!(e.einstein);
        assert_eq!(e.lambda_exact.as_deref(), Some("-1/2"));
        assert!(e.ein8.unwrap().verdict);
    }
}
