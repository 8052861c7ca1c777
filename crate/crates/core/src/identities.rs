//! Registry of identities as residual functionals on [`FrameData`].
//!
//! Every identity is written as `LHS − RHS` and assembled from the stored
//! derived quantities only. A residual is the largest absolute component
//! over all free indices and sample points.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::curvature::{nabla_t_family, FrameData, PotentialData};
use crate::error::{Error, Result};
use crate::scalar::{rat, Scalar};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IdentityId {
    Dh,
    Rics1,
    Rics2,
    Rics3,
    FirstBianchiT,
    Gen,
    Bi1v,
    Rb,
    PairSym,
    FourfA,
    FourfB,
    FourfC,
    Sigt,
    Ein10,
    E12,
    Ein5,
    E13,
    E1,
    TwoBi,
    Rb2,
    Biii,
    Bsk,
    Zz,
    Zz1,
    Ein2,
    Ein6,
    T11,
    Ein9,
    Ein8,
    Gein1,
    Gein2,
    Gein3,
    Gein7a,
    Gein7b,
    Gein8Eq,
    Ffinn,
}

/// How per-point values are reduced to a verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// Components must vanish at every point.
    Pointwise,
    /// A scalar must be constant across the grid (max − min).
    Spread,
    /// A scalar must be non-negative, with slack `10·tol`.
    LowerBound,
}

impl IdentityId {
    pub const ALL: [IdentityId; 36] = [
        IdentityId::Dh,
        IdentityId::Rics1,
        IdentityId::Rics2,
        IdentityId::Rics3,
        IdentityId::FirstBianchiT,
        IdentityId::Gen,
        IdentityId::Bi1v,
        IdentityId::Rb,
        IdentityId::PairSym,
        IdentityId::FourfA,
        IdentityId::FourfB,
        IdentityId::FourfC,
        IdentityId::Sigt,
        IdentityId::Ein10,
        IdentityId::E12,
        IdentityId::Ein5,
        IdentityId::E13,
        IdentityId::E1,
        IdentityId::TwoBi,
        IdentityId::Rb2,
        IdentityId::Biii,
        IdentityId::Bsk,
        IdentityId::Zz,
        IdentityId::Zz1,
        IdentityId::Ein2,
        IdentityId::Ein6,
        IdentityId::T11,
        IdentityId::Ein9,
        IdentityId::Ein8,
        IdentityId::Gein1,
        IdentityId::Gein2,
        IdentityId::Gein3,
        IdentityId::Gein7a,
        IdentityId::Gein7b,
        IdentityId::Gein8Eq,
        IdentityId::Ffinn,
    ];

    pub fn name(self) -> &'static str {
        use IdentityId::*;
        match self {
            Dh => "DH",
            Rics1 => "RICS1",
            Rics2 => "RICS2",
            Rics3 => "RICS3",
            FirstBianchiT => "FIRST_BIANCHI_T",
            Gen => "GEN",
            Bi1v => "BI1V",
            Rb => "RB",
            PairSym => "PAIR_SYM",
            FourfA => "FOURF_A",
            FourfB => "FOURF_B",
            FourfC => "FOURF_C",
            Sigt => "SIGT",
            Ein10 => "EIN10",
            E12 => "E12",
            Ein5 => "EIN5",
            E13 => "E13",
            E1 => "E1",
            TwoBi => "TWO_BI",
            Rb2 => "RB2",
            Biii => "BIII",
            Bsk => "BSK",
            Zz => "ZZ",
            Zz1 => "ZZ1",
            Ein2 => "EIN2",
            Ein6 => "EIN6",
            T11 => "T11",
            Ein9 => "EIN9",
            Ein8 => "EIN8",
            Gein1 => "GEIN1",
            Gein2 => "GEIN2",
            Gein3 => "GEIN3",
            Gein7a => "GEIN7A",
            Gein7b => "GEIN7B",
            Gein8Eq => "GEIN8_EQ",
            Ffinn => "FFINN",
        }
    }

    /// The identity as a formula, in frame indices with summation over repeats.
    pub fn anchor(self) -> &'static str {
        use IdentityId::*;
        match self {
            Dh => "dT_xyzv = ∇_xT_yzv + ∇_yT_zxv + ∇_zT_xyv − ∇_vT_xyz + 2σ_xyzv",
            Rics1 => "Ric^g_ij = Ric_ij + ½δT_ij + ¼T²_ij",
            Rics2 => "Scal^g = Scal + ¼‖T‖²",
            Rics3 => "Ric_ij − Ric_ji = −δT_ij",
            FirstBianchiT => "R_xyzv + R_yzxv + R_zxyv = dT_xyzv − σ_xyzv + ∇_vT_xyz",
            Gen => "R_xyzv + R_yzxv + R_zxyv − R_vxyz − R_vyzx − R_vzxy = (3/2)dT_xyzv − σ_xyzv",
            Bi1v => "R_vxyz + R_vyzx + R_vzxy = −½dT_xyzv + ∇_vT_xyz",
            Rb => "R_xyzv + R_yzxv + R_zxyv = 0",
            PairSym => "R_xyzv = R_zvxy",
            FourfA => "∇_xT_yzv = −∇_yT_xzv (∇T is a 4-form)",
            FourfB => "R_xyzv = R_zvxy",
            FourfC => "dT_xyzv = 4∇^g_xT_yzv",
            Sigt => "T_abc σ_abcj = 0",
            Ein10 => "2∇_iδT_ij = δT_ia T_iaj",
            E12 => "Θ_j = −dT_abcj T_abc = −3∇^g_aT_bcj T_abc + ½∇_j‖T‖² = −3∇_aT_bcj T_abc + ½∇_j‖T‖²",
            Ein5 => "θ_j = −∇_sT²_sj − ⅓Θ_j + ⅙∇_j‖T‖²",
            E13 => "3θ_j + Θ_j = ½∇_j‖T‖² − 3∇^g_sT²_sj = ½∇_j‖T‖² − 3∇_sT²_sj",
            E1 => "∇_jScal − 2∇_iRic_ji + ⅙∇_j‖T‖² + θ_j + ⅙Θ_j = 0",
            TwoBi => "∇_jScal − 2∇_iRic_ji + ¼∇_j‖T‖² + θ_j − ½∇_aT_bcj T_abc = 0",
            Rb2 => "∇_jScal = 2∇_iRic_ji",
            Biii => "6θ_j + Θ_j + ∇_j‖T‖² = 0; 4θ_j + ∇_j‖T‖² − 2∇_aT_bcj T_abc = 0",
            Bsk => "dT_xyzv = −2∇_xT_yzv = (2/3)σ_xyzv; ∇^{1/3}T = 0",
            Zz => "R_xyzv = R_zyxv",
            Zz1 => "3dT = 2σ",
            Ein2 => "Ric_ij + ½δT_ij = (Scal/n)δ_ij",
            Ein6 => "((n−2)/n)∇_jScal − ½∇^g_sT²_sj + ¼∇_j‖T‖² = 0",
            T11 => "3θ + Θ = 0",
            Ein9 => "Scal + n/(6(n−2))‖T‖² = const",
            Ein8 => "Scal + n/(2(n−2))‖T‖² = const",
            Gein1 => "Ric^g_ij = ¼T²_ij − ∇^g_i∇^g_jf; δT_ij = −∇_sf T_sij; dT = 0",
            Gein2 => "∇_i∇_jf − ∇_j∇_if = −∇_sf T_sij",
            Gein3 => "Ric_ij = −∇_i∇_jf; Scal = Δf",
            Gein7a => "∇_j(Δf + ‖df‖²) = ⅙∇_j‖T‖²; ∇_jΔf = 2Ric_js∇_sf + ⅙∇_j‖T‖²",
            Gein7b => "∇_jΔf + 2∇_i∇_i∇_jf + ⅙∇_j‖T‖² = 0; ∇_jΔf − 2∇_iRic_ij + ⅙∇_j‖T‖² = 0",
            Gein8Eq => "Δ(Δf − ⅙‖T‖²) + ∇_s(Δf + ⅙‖T‖²)∇_sf = 2‖Ric‖²",
            Ffinn => "Δ(Scal^g − (5/12)‖T‖²) + ∇_s(Scal^g − (1/12)‖T‖²)∇_sf ≥ 0",
        }
    }

    /// Holds for every metric connection with skew-symmetric torsion.
    pub fn universal(self) -> bool {
        use IdentityId::*;
        matches!(
            self,
            Dh | Rics1
                | Rics2
                | Rics3
                | FirstBianchiT
                | Gen
                | Bi1v
                | Sigt
                | Ein10
                | E12
                | Ein5
                | E13
                | E1
                | TwoBi
                | Gein2
        )
    }

    pub fn needs_potential(self) -> bool {
        use IdentityId::*;
        matches!(self, Gein1 | Gein2 | Gein3 | Gein7a | Gein7b | Gein8Eq | Ffinn)
    }

    pub fn kind(self) -> CheckKind {
        match self {
            IdentityId::Ein9 | IdentityId::Ein8 => CheckKind::Spread,
            IdentityId::Ffinn => CheckKind::LowerBound,
            _ => CheckKind::Pointwise,
        }
    }
}

impl fmt::Display for IdentityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IdentityId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_uppercase().replace('-', "_");
        IdentityId::ALL
            .iter()
            .copied()
            .find(|id| id.name() == key)
            .ok_or_else(|| Error::Parse(format!("unknown identity '{s}'")))
    }
}

/// Deliberate defects for checking that the test suite can fail.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Mutation {
    #[default]
    None,
    /// Flips the sign of the σ^T term in GEN.
    GenSigmaSign,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalOptions {
    /// Pass threshold in float mode; exact mode requires zero.
    pub tol: f64,
    pub mutation: Mutation,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { tol: 1e-6, mutation: Mutation::None }
    }
}

/// One named piece of an identity evaluated at a point.
#[derive(Clone, Debug)]
pub struct Member<S> {
    pub label: &'static str,
    pub value: Tensor<S>,
}

pub fn member<S>(label: &'static str, value: Tensor<S>) -> Member<S> {
    Member { label, value }
}

fn sum<S: Scalar>(n: usize, f: impl Fn(usize) -> S) -> S {
    (0..n).fold(S::zero(), |acc, s| acc + f(s))
}

fn c<S: Scalar>(p: i64, q: i64) -> S {
    S::from_ratio(p, q)
}

fn t1<S: Scalar>(n: usize, f: impl Fn(usize) -> S) -> Tensor<S> {
    Tensor::from_fn(n, 1, |x| f(x[0]))
}

fn t2<S: Scalar>(n: usize, f: impl Fn(usize, usize) -> S) -> Tensor<S> {
    Tensor::from_fn(n, 2, |x| f(x[0], x[1]))
}

fn t4<S: Scalar>(n: usize, f: impl Fn(usize, usize, usize, usize) -> S) -> Tensor<S> {
    Tensor::from_fn(n, 4, |x| f(x[0], x[1], x[2], x[3]))
}

fn lin1<S: Scalar>(terms: &[(S, &Tensor<S>)]) -> Tensor<S> {
    let n = terms[0].1.dim();
    let rank = terms[0].1.rank();
    Tensor::from_fn(n, rank, |x| terms.iter().fold(S::zero(), |acc, (k, t)| acc + k.clone() * t.get(x).clone()))
}

fn delta<S: Scalar>(i: usize, j: usize) -> S {
    if i == j {
        S::one()
    } else {
        S::zero()
    }
}

/// `q_j = X_abcj T_abc` for a derivative `X_abcj = ∇_aT_bcj`.
pub fn torsion_flux<S: Scalar>(nabla: &Tensor<S>, t: &Tensor<S>) -> Tensor<S> {
    let n = t.dim();
    t1(n, |j| {
        let mut acc = S::zero();
        for a in 0..n {
            for b in 0..n {
                for cc in 0..n {
                    acc = acc + nabla.at4(a, b, cc, j).clone() * t.at3(a, b, cc).clone();
                }
            }
        }
        acc
    })
}

fn potential<S>(fd: &FrameData<S>, id: IdentityId) -> Result<&PotentialData<S>> {
    fd.potential.as_ref().ok_or_else(|| Error::Capability(format!("{id} needs a potential f; the geometry has none")))
}

/// Evaluates every member of `id` at one point.
pub fn members<S: Scalar>(id: IdentityId, fd: &FrameData<S>, opts: &EvalOptions) -> Result<Vec<Member<S>>> {
    use IdentityId::*;
    let n = fd.dim();
    let p = &fd.pack;
    let t = p.t.tensor();
    let dt = p.dt.tensor();
    let dlt = p.delta_t.tensor();
    let nt = &p.nabla_t;
    let ngt = &p.nabla_g_t;
    let sg = p.sigma.tensor();
    let r = fd.curvature.r();
    let ric = fd.curvature.ric();
    let scal = fd.curvature.scal().clone();
    let cyc = |x: usize, y: usize, z: usize, v: usize| {
        r.at4(x, y, z, v).clone() + r.at4(y, z, x, v).clone() + r.at4(z, x, y, v).clone()
    };
    let cyc_v = |x: usize, y: usize, z: usize, v: usize| {
        r.at4(v, x, y, z).clone() + r.at4(v, y, z, x).clone() + r.at4(v, z, x, y).clone()
    };
    let q = || torsion_flux(nt, t);
    let q_g = || torsion_flux(ngt, t);
    let scalar = |v: S| Tensor::scalar(v, n);
    let need_n3 = || {
        if n < 3 {
            Err(Error::Capability(format!("{id} needs n ≥ 3 (factor n − 2)")))
        } else {
            Ok(())
        }
    };

    let out = match id {
        Dh => vec![member(
            "dT",
            t4(n, |x, y, z, v| {
                dt.at4(x, y, z, v).clone()
                    - (nt.at4(x, y, z, v).clone() + nt.at4(y, z, x, v).clone() + nt.at4(z, x, y, v).clone()
                        - nt.at4(v, x, y, z).clone()
                        + c::<S>(2, 1) * sg.at4(x, y, z, v).clone())
            }),
        )],
        Rics1 => vec![member(
            "Ric^g",
            t2(n, |i, j| {
                fd.ric_g.at2(i, j).clone()
                    - ric.at2(i, j).clone()
                    - c::<S>(1, 2) * dlt.at2(i, j).clone()
                    - c::<S>(1, 4) * p.t2.at2(i, j).clone()
            }),
        )],
        Rics2 => vec![member("Scal^g", scalar(fd.scal_g.clone() - scal.clone() - c::<S>(1, 4) * p.norm_t2.clone()))],
        Rics3 => vec![member(
            "Ric antisymmetric part",
            t2(n, |i, j| ric.at2(i, j).clone() - ric.at2(j, i).clone() + dlt.at2(i, j).clone()),
        )],
        FirstBianchiT => vec![member(
            "cyclic sum",
            t4(n, |x, y, z, v| {
                cyc(x, y, z, v) - (dt.at4(x, y, z, v).clone() - sg.at4(x, y, z, v).clone() + nt.at4(v, x, y, z).clone())
            }),
        )],
        Gen => {
            let sign: S = if opts.mutation == Mutation::GenSigmaSign { c(-1, 1) } else { c(1, 1) };
            vec![member(
                "six-term sum",
                t4(n, |x, y, z, v| {
                    cyc(x, y, z, v) - cyc_v(x, y, z, v) - c::<S>(3, 2) * dt.at4(x, y, z, v).clone()
                        + sign.clone() * sg.at4(x, y, z, v).clone()
                }),
            )]
        }
        Bi1v => vec![member(
            "v-cyclic sum",
            t4(n, |x, y, z, v| {
                cyc_v(x, y, z, v) + c::<S>(1, 2) * dt.at4(x, y, z, v).clone() - nt.at4(v, x, y, z).clone()
            }),
        )],
        Rb => vec![member("cyclic sum", t4(n, cyc))],
        PairSym | FourfB => {
            vec![member("R_xyzv − R_zvxy", t4(n, |x, y, z, v| r.at4(x, y, z, v).clone() - r.at4(z, v, x, y).clone()))]
        }
        FourfA => vec![member(
            "∇_xT_yzv + ∇_yT_xzv",
            t4(n, |x, y, z, v| nt.at4(x, y, z, v).clone() + nt.at4(y, x, z, v).clone()),
        )],
        FourfC => vec![member(
            "dT − 4∇^gT",
            t4(n, |x, y, z, v| dt.at4(x, y, z, v).clone() - c::<S>(4, 1) * ngt.at4(x, y, z, v).clone()),
        )],
        Sigt => vec![member(
            "T⌟σ",
            t1(n, |j| {
                let mut acc = S::zero();
                for a in 0..n {
                    for b in 0..n {
                        for cc in 0..n {
                            acc = acc + t.at3(a, b, cc).clone() * sg.at4(a, b, cc, j).clone();
                        }
                    }
                }
                acc
            }),
        )],
        Ein10 => vec![member(
            "2 div δT − δT⌟T",
            t1(n, |j| {
                let contr = sum(n, |i| sum(n, |a| dlt.at2(i, a).clone() * t.at3(i, a, j).clone()));
                c::<S>(2, 1) * fd.div_delta_t.at1(j).clone() - contr
            }),
        )],
        E12 => {
            let big = &p.big_theta;
            let dtt = t1(n, |j| {
                let mut acc = S::zero();
                for a in 0..n {
                    for b in 0..n {
                        for cc in 0..n {
                            acc = acc + dt.at4(a, b, cc, j).clone() * t.at3(a, b, cc).clone();
                        }
                    }
                }
                acc
            });
            let half: S = c(1, 2);
            let m3: S = c(-3, 1);
            let one: S = c(1, 1);
            let qg = q_g();
            let qq = q();
            vec![
                member("Θ + dT_abcj T_abc", big + &dtt),
                member(
                    "Θ + 3∇^g_aT_bcj T_abc − ½d‖T‖²",
                    lin1(&[(one.clone(), big), (-m3.clone(), &qg), (-half.clone(), &fd.d_norm_t2)]),
                ),
                member("Θ + 3∇_aT_bcj T_abc − ½d‖T‖²", lin1(&[(one, big), (-m3, &qq), (-half, &fd.d_norm_t2)])),
            ]
        }
        Ein5 => vec![member(
            "θ + div T² + ⅓Θ − ⅙d‖T‖²",
            lin1(&[(c(1, 1), &p.theta), (c(1, 1), &fd.div_t2), (c(1, 3), &p.big_theta), (c(-1, 6), &fd.d_norm_t2)]),
        )],
        E13 => vec![
            member(
                "3θ + Θ − ½d‖T‖² + 3 div^g T²",
                lin1(&[
                    (c(3, 1), &p.theta),
                    (c(1, 1), &p.big_theta),
                    (c(-1, 2), &fd.d_norm_t2),
                    (c(3, 1), &fd.div_t2_lc),
                ]),
            ),
            member(
                "3θ + Θ − ½d‖T‖² + 3 div T²",
                lin1(&[(c(3, 1), &p.theta), (c(1, 1), &p.big_theta), (c(-1, 2), &fd.d_norm_t2), (c(3, 1), &fd.div_t2)]),
            ),
        ],
        E1 => vec![member(
            "contracted Bianchi",
            lin1(&[
                (c(1, 1), &fd.d_scal),
                (c(-2, 1), &fd.div_ric),
                (c(1, 6), &fd.d_norm_t2),
                (c(1, 1), &p.theta),
                (c(1, 6), &p.big_theta),
            ]),
        )],
        TwoBi => {
            let qq = q();
            vec![member(
                "contracted Bianchi, flux form",
                lin1(&[
                    (c(1, 1), &fd.d_scal),
                    (c(-2, 1), &fd.div_ric),
                    (c(1, 4), &fd.d_norm_t2),
                    (c(1, 1), &p.theta),
                    (c(-1, 2), &qq),
                ]),
            )]
        }
        Rb2 => vec![member("dScal − 2 div Ric", lin1(&[(c(1, 1), &fd.d_scal), (c(-2, 1), &fd.div_ric)]))],
        Biii => {
            let qq = q();
            vec![
                member(
                    "6θ + Θ + d‖T‖²",
                    lin1(&[(c(6, 1), &p.theta), (c(1, 1), &p.big_theta), (c(1, 1), &fd.d_norm_t2)]),
                ),
                member("4θ + d‖T‖² − 2q", lin1(&[(c(4, 1), &p.theta), (c(1, 1), &fd.d_norm_t2), (c(-2, 1), &qq)])),
            ]
        }
        Bsk => vec![
            member(
                "dT + 2∇T",
                t4(n, |x, y, z, v| dt.at4(x, y, z, v).clone() + c::<S>(2, 1) * nt.at4(x, y, z, v).clone()),
            ),
            member(
                "dT − ⅔σ",
                t4(n, |x, y, z, v| dt.at4(x, y, z, v).clone() - c::<S>(2, 3) * sg.at4(x, y, z, v).clone()),
            ),
            member("∇^{1/3}T", nabla_t_family(ngt, t, &S::from_rational(&rat(1, 3)))),
        ],
        Zz => {
            vec![member("R_xyzv − R_zyxv", t4(n, |x, y, z, v| r.at4(x, y, z, v).clone() - r.at4(z, y, x, v).clone()))]
        }
        Zz1 => vec![member(
            "3dT − 2σ",
            t4(n, |x, y, z, v| c::<S>(3, 1) * dt.at4(x, y, z, v).clone() - c::<S>(2, 1) * sg.at4(x, y, z, v).clone()),
        )],
        Ein2 => {
            let lam = scal.clone() / S::from_i64(n as i64);
            vec![member(
                "Ric + ½δT − (Scal/n)g",
                t2(n, |i, j| {
                    ric.at2(i, j).clone() + c::<S>(1, 2) * dlt.at2(i, j).clone() - lam.clone() * delta::<S>(i, j)
                }),
            )]
        }
        Ein6 => vec![member(
            "((n−2)/n)dScal − ½div^g T² + ¼d‖T‖²",
            lin1(&[(c(n as i64 - 2, n as i64), &fd.d_scal), (c(-1, 2), &fd.div_t2_lc), (c(1, 4), &fd.d_norm_t2)]),
        )],
        T11 => vec![member("3θ + Θ", lin1(&[(c(3, 1), &p.theta), (c(1, 1), &p.big_theta)]))],
        Ein9 => {
            need_n3()?;
            let k: S = c(n as i64, 6 * (n as i64 - 2));
            vec![member("C", scalar(scal + k * p.norm_t2.clone()))]
        }
        Ein8 => {
            need_n3()?;
            let k: S = c(n as i64, 2 * (n as i64 - 2));
            vec![member("B", scalar(scal + k * p.norm_t2.clone()))]
        }
        Gein1 => {
            let pd = potential(fd, id)?;
            vec![
                member(
                    "Ric^g − ¼T² + Hess^g f",
                    t2(n, |i, j| {
                        fd.ric_g.at2(i, j).clone() - c::<S>(1, 4) * p.t2.at2(i, j).clone()
                            + pd.hess_lc.at2(i, j).clone()
                    }),
                ),
                member(
                    "δT + df⌟T",
                    t2(n, |i, j| dlt.at2(i, j).clone() + sum(n, |s| pd.df.at1(s).clone() * t.at3(s, i, j).clone())),
                ),
                member("dT", dt.clone()),
            ]
        }
        Gein2 => {
            let pd = potential(fd, id)?;
            vec![member(
                "Hess antisymmetric part + df⌟T",
                t2(n, |i, j| {
                    pd.hess.at2(i, j).clone() - pd.hess.at2(j, i).clone()
                        + sum(n, |s| pd.df.at1(s).clone() * t.at3(s, i, j).clone())
                }),
            )]
        }
        Gein3 => {
            let pd = potential(fd, id)?;
            vec![member("Ric + Hess f", ric + &pd.hess), member("Scal − Δf", scalar(scal - pd.lap.clone()))]
        }
        Gein7a => {
            let pd = potential(fd, id)?;
            let ric_df = t1(n, |j| sum(n, |s| ric.at2(j, s).clone() * pd.df.at1(s).clone()));
            vec![
                member(
                    "−dΔf − d‖df‖² + ⅙d‖T‖²",
                    lin1(&[(c(-1, 1), &pd.d_lap), (c(-1, 1), &pd.d_norm_df2), (c(1, 6), &fd.d_norm_t2)]),
                ),
                member(
                    "−dΔf + 2Ric(·,df) + ⅙d‖T‖²",
                    lin1(&[(c(-1, 1), &pd.d_lap), (c(2, 1), &ric_df), (c(1, 6), &fd.d_norm_t2)]),
                ),
            ]
        }
        Gein7b => {
            let pd = potential(fd, id)?;
            vec![
                member(
                    "dΔf + 2∇_i∇_i∇f + ⅙d‖T‖²",
                    lin1(&[(c(1, 1), &pd.d_lap), (c(2, 1), &pd.nabla3_iij), (c(1, 6), &fd.d_norm_t2)]),
                ),
                member(
                    "dΔf − 2∇_iRic_ij + ⅙d‖T‖²",
                    lin1(&[(c(1, 1), &pd.d_lap), (c(-2, 1), &fd.div_ric_first), (c(1, 6), &fd.d_norm_t2)]),
                ),
            ]
        }
        Gein8Eq => {
            let pd = potential(fd, id)?;
            let dot = |a: &Tensor<S>, b: &Tensor<S>| sum(n, |s| a.at1(s).clone() * b.at1(s).clone());
            let ric2 = ric.data().iter().fold(S::zero(), |acc, x| acc + x.clone() * x.clone());
            let ric_hess =
                ric.data().iter().zip(pd.hess.data()).fold(S::zero(), |acc, (a, b)| acc + a.clone() * b.clone());
            let two: S = c(2, 1);
            let base = pd.lap_lap_minus.clone() + two.clone() * dot(&fd.div_ric_first, &pd.df);
            vec![
                member("Δ(Δf − ⅙‖T‖²) + 2 div Ric·df + 2⟨Ric, Hess f⟩", scalar(base.clone() + two.clone() * ric_hess)),
                member("Δ(Δf − ⅙‖T‖²) + 2 div Ric·df − 2‖Ric‖²", scalar(base - two.clone() * ric2.clone())),
                member(
                    "Δ(Δf − ⅙‖T‖²) + d(Δf + ⅙‖T‖²)·df − 2‖Ric‖²",
                    scalar(pd.lap_lap_minus.clone() + dot(&pd.d_lap_plus, &pd.df) - two * ric2),
                ),
            ]
        }
        Ffinn => {
            let pd = potential(fd, id)?;
            let dot = sum(n, |s| pd.d_scal_g_minus.at1(s).clone() * pd.df.at1(s).clone());
            vec![member("Δ(Scal^g − 5‖T‖²/12) + d(Scal^g − ‖T‖²/12)·df", scalar(pd.lap_scal_g_minus.clone() + dot))]
        }
    };
    Ok(out)
}

/// Data for one sample point.
#[derive(Clone, Debug)]
pub struct Sample<S> {
    /// Chart coordinates, or `None` on a homogeneous geometry.
    pub point: Option<Vec<f64>>,
    pub data: FrameData<S>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MemberResidual {
    pub label: String,
    pub residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NamedValue {
    pub name: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
}

/// Outcome of evaluating one identity over a sample grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualReport {
    pub id: String,
    pub anchor: String,
    pub kind: CheckKind,
    pub universal: bool,
    /// Max over points and free indices (spread for constancy checks,
    /// deficit below zero for lower bounds).
    pub residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_residual: Option<String>,
    pub tolerance: f64,
    pub verdict: bool,
    pub marginal: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_point: Option<Vec<f64>>,
    pub witness_sample: usize,
    /// Member label and 1-based component index of the worst entry.
    pub witness_component: String,
    pub per_point: Vec<f64>,
    pub members: Vec<MemberResidual>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<NamedValue>,
}

fn exact_string<S: Scalar>(x: &S) -> Option<String> {
    S::EXACT.then(|| x.to_string())
}

fn max_s<S: Scalar>(a: S, b: &S) -> S {
    if *b > a {
        b.clone()
    } else {
        a
    }
}

fn component_label(label: &str, idx: &[usize]) -> String {
    if idx.is_empty() {
        label.to_string()
    } else {
        let one: Vec<String> = idx.iter().map(|i| (i + 1).to_string()).collect();
        format!("{label}[{}]", one.join(","))
    }
}

/// Evaluates `id` on every sample and reduces to a report.
pub fn evaluate_identity<S: Scalar>(
    id: IdentityId,
    samples: &[Sample<S>],
    opts: &EvalOptions,
) -> Result<ResidualReport> {
    let spec = CheckSpec { name: id.name(), anchor: id.anchor(), kind: id.kind(), universal: id.universal() };
    evaluate_check(&spec, samples, opts, |fd| members(id, fd, opts))
}

/// Name and reduction rule of a check that is not in the registry.
#[derive(Clone, Copy, Debug)]
pub struct CheckSpec<'a> {
    pub name: &'a str,
    pub anchor: &'a str,
    pub kind: CheckKind,
    pub universal: bool,
}

/// Reduces per-point members produced by `eval` to a report. Spread and
/// lower-bound checks read the single component of the first member.
pub fn evaluate_check<S: Scalar>(
    spec: &CheckSpec<'_>,
    samples: &[Sample<S>],
    opts: &EvalOptions,
    eval: impl Fn(&FrameData<S>) -> Result<Vec<Member<S>>>,
) -> Result<ResidualReport> {
    let kind = spec.kind;
    let mut per_point = Vec::with_capacity(samples.len());
    let mut worst = S::zero();
    let mut witness = (0usize, String::new());
    let mut member_max: Vec<(&'static str, S)> = Vec::new();
    let mut scalars: Vec<S> = Vec::new();

    for (k, s) in samples.iter().enumerate() {
        let ms = eval(&s.data)?;
        if member_max.is_empty() {
            member_max = ms.iter().map(|m| (m.label, S::zero())).collect();
        }
        match kind {
            CheckKind::Pointwise => {
                let mut here = S::zero();
                for (slot, m) in ms.iter().enumerate() {
                    let (v, idx) = m.value.max_abs();
                    member_max[slot].1 = max_s(member_max[slot].1.clone(), &v);
                    if v > worst || witness.1.is_empty() {
                        if v > worst {
                            worst = v.clone();
                        }
                        witness = (k, component_label(m.label, &idx));
                    }
                    here = max_s(here, &v);
                }
                per_point.push(here.to_f64());
            }
            CheckKind::Spread | CheckKind::LowerBound => {
                let v = ms[0].value.data()[0].clone();
                per_point.push(v.to_f64());
                scalars.push(v);
            }
        }
    }

    let mut values = Vec::new();
    let residual: S = match kind {
        CheckKind::Pointwise => worst,
        CheckKind::Spread => {
            let label = member_max.first().map(|m| m.0).unwrap_or("value");
            if scalars.is_empty() {
                S::zero()
            } else {
                let (mut lo, mut hi, mut lo_k, mut hi_k) = (scalars[0].clone(), scalars[0].clone(), 0, 0);
                for (k, v) in scalars.iter().enumerate() {
                    if *v < lo {
                        lo = v.clone();
                        lo_k = k;
                    }
                    if *v > hi {
                        hi = v.clone();
                        hi_k = k;
                    }
                }
                witness = (if hi_k == 0 { lo_k } else { hi_k }, label.to_string());
                values.push(NamedValue { name: format!("{label}_min"), value: lo.to_f64(), exact: exact_string(&lo) });
                values.push(NamedValue { name: format!("{label}_max"), value: hi.to_f64(), exact: exact_string(&hi) });
                hi - lo
            }
        }
        CheckKind::LowerBound => {
            let label = member_max.first().map(|m| m.0).unwrap_or("value");
            let mut deficit = S::zero();
            let mut min_v: Option<S> = None;
            for (k, v) in scalars.iter().enumerate() {
                if min_v.as_ref().is_none_or(|m| v < m) {
                    min_v = Some(v.clone());
                    witness = (k, label.to_string());
                }
                deficit = max_s(deficit, &(-v.clone()));
            }
            if let Some(m) = min_v {
                values.push(NamedValue { name: "min".into(), value: m.to_f64(), exact: exact_string(&m) });
            }
            deficit
        }
    };

    let r = residual.to_f64();
    let tol = if S::EXACT { 0.0 } else { opts.tol };
    let (verdict, marginal) = if S::EXACT {
        (residual.is_zero(), false)
    } else {
        let limit = if kind == CheckKind::LowerBound { 10.0 * tol } else { tol };
        (r <= limit, r > tol / 10.0 && r <= 10.0 * tol)
    };
    let members = match kind {
        CheckKind::Pointwise => member_max
            .iter()
            .map(|(l, v)| MemberResidual { label: l.to_string(), residual: v.to_f64(), exact: exact_string(v) })
            .collect(),
        _ => Vec::new(),
    };
    Ok(ResidualReport {
        id: spec.name.to_string(),
        anchor: spec.anchor.to_string(),
        kind,
        universal: spec.universal,
        residual: r,
        exact_residual: exact_string(&residual),
        tolerance: tol,
        verdict,
        marginal,
        witness_point: samples.get(witness.0).and_then(|s| s.point.clone()),
        witness_sample: witness.0,
        witness_component: witness.1,
        per_point,
        members,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::lie_frame_data;
    use crate::lie::{LieGeometry, StructureConstants};
    use crate::scalar::Rational;
    use crate::tensor::AltForm;

    fn sample(geo: &LieGeometry) -> Vec<Sample<Rational>> {
        vec![Sample { point: None, data: lie_frame_data(geo) }]
    }

    fn flat_torus() -> LieGeometry {
        LieGeometry::new(StructureConstants::abelian(3), AltForm::basis(3, &[0, 1, 2], rat(1, 1)), rat(0, 1)).unwrap()
    }

    #[test]
    fn names_round_trip() {
        for id in IdentityId::ALL {
            assert_eq!(id.name().parse::<IdentityId>().unwrap(), id);
        }
        assert_eq!("two-bi".parse::<IdentityId>().unwrap(), IdentityId::TwoBi);
        assert!("nope".parse::<IdentityId>().is_err());
    }

    #[test]
    fn flat_torus_rics2_is_exact_zero() {
        let rep = evaluate_identity(IdentityId::Rics2, &sample(&flat_torus()), &EvalOptions::default()).unwrap();
        assert!(rep.verdict);
        assert_eq!(rep.exact_residual.as_deref(), Some("0"));
    }

    #[test]
    fn flat_torus_zz_witness() {
        let rep = evaluate_identity(IdentityId::Zz, &sample(&flat_torus()), &EvalOptions::default()).unwrap();
        assert!(!rep.verdict);
        assert_eq!(rep.exact_residual.as_deref(), Some("1/4"));
    }

    #[test]
    fn soliton_gein1_on_flat_torus_reports_half() {
        let rep = evaluate_identity(IdentityId::Gein1, &sample(&flat_torus()), &EvalOptions::default()).unwrap();
        assert!(!rep.verdict);
        assert_eq!(rep.exact_residual.as_deref(), Some("1/2"));
    }

    #[test]
    fn spread_is_zero_on_a_single_point() {
        let rep = evaluate_identity(IdentityId::Ein9, &sample(&flat_torus()), &EvalOptions::default()).unwrap();
        assert!(rep.verdict);
        assert_eq!(rep.values[0].exact.as_deref(), Some("3/2"));
    }
}
