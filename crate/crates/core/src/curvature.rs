//! Connections, curvature and the torsion-derived quantities at a point, all
//! in an orthonormal frame.
//!
//! Conventions:
//! - `Γ_{ijk} = g(∇_{e_i} e_j, e_k)`, so metricity is `Γ_{ijk} = −Γ_{ikj}`;
//! - `R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_{[X,Y]}Z`, `R_{ijkl} = g(R(e_i,e_j)e_k, e_l)`;
//! - `Ric_{jk} = Σ_i R_{ijki}` and `Scal = Σ_j Ric_{jj}`;
//! - `‖T‖² = T_{abc}T_{abc}` (unnormalized), `T²_{ij} = T_{iab}T_{jab}`;
//! - `(δT)_{jk} = −∇^g_a T_{ajk}`.
//!
//! The torsion connection is `∇ = ∇^g + ½T`; the family `∇^t = ∇^g + (t/2)T`
//! interpolates between the two.

use crate::error::Result;
use crate::lie::{lc_connection, lie_covariant_derivative, lie_dt, LieGeometry};
use crate::scalar::{Rational, Scalar};
use crate::tensor::{is_negligible, AltForm, Rank4, Symmetry, Tensor};

/// Frame components of a metric connection together with the frame bracket
/// `c_{ijk} = g([e_i, e_j], e_k)` at the same point.
#[derive(Clone, Debug, PartialEq)]
pub struct ConnectionCoeffs<S> {
    gamma: Tensor<S>,
    bracket: Tensor<S>,
    t: Rational,
}

impl<S: Scalar> ConnectionCoeffs<S> {
    pub fn new(gamma: Tensor<S>, bracket: Tensor<S>, t: Rational) -> Self {
        ConnectionCoeffs { gamma, bracket, t }
    }

    pub fn dim(&self) -> usize {
        self.gamma.dim()
    }

    pub fn gamma(&self) -> &Tensor<S> {
        &self.gamma
    }

    pub fn bracket(&self) -> &Tensor<S> {
        &self.bracket
    }

    /// Torsion-family parameter: 0 for Levi-Civita, 1 for the torsion connection.
    pub fn t(&self) -> &Rational {
        &self.t
    }

    /// `Γ_{ijk} + Γ_{ikj}`; zero for a metric connection.
    pub fn metricity_defect(&self) -> Tensor<S> {
        let g = &self.gamma;
        Tensor::from_fn(self.dim(), 3, |i| g.at3(i[0], i[1], i[2]).clone() + g.at3(i[0], i[2], i[1]).clone())
    }

    /// Torsion `Γ_{ijk} − Γ_{jik} − c_{ijk}`.
    pub fn torsion(&self) -> Tensor<S> {
        let (g, c) = (&self.gamma, &self.bracket);
        Tensor::from_fn(self.dim(), 3, |i| {
            g.at3(i[0], i[1], i[2]).clone() - g.at3(i[1], i[0], i[2]).clone() - c.at3(i[0], i[1], i[2]).clone()
        })
    }

    /// Torsion minus `t·T`; zero when this is `∇^t` for the 3-form `T`.
    pub fn torsion_defect(&self, t_form: &Tensor<S>) -> Tensor<S> {
        let tt = S::from_rational(&self.t);
        &self.torsion() - &t_form.scale(&tt)
    }

    /// Curvature from frame coefficients with constant components:
    /// `R_{ijkl} = Γ_{jks}Γ_{isl} − Γ_{iks}Γ_{jsl} − c_{ijs}Γ_{skl}`.
    pub fn curvature_constant_frame(&self) -> CurvatureTensor<S> {
        let n = self.dim();
        let (g, c) = (&self.gamma, &self.bracket);
        let r = Tensor::from_fn(n, 4, |x| {
            let (i, j, k, l) = (x[0], x[1], x[2], x[3]);
            let mut acc = S::zero();
            for s in 0..n {
                acc = acc + g.at3(j, k, s).clone() * g.at3(i, s, l).clone()
                    - g.at3(i, k, s).clone() * g.at3(j, s, l).clone()
                    - c.at3(i, j, s).clone() * g.at3(s, k, l).clone();
            }
            acc
        });
        CurvatureTensor::from_components(r)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureTensor<S> {
    r: Rank4<S>,
    ric: Tensor<S>,
    scal: S,
}

impl<S: Scalar> CurvatureTensor<S> {
    /// Traces `Ric_{jk} = Σ_i R_{ijki}`. The curvature symmetry class is
    /// recorded, not re-verified; see [`CurvatureTensor::symmetry_defect`].
    pub fn from_components(r: Tensor<S>) -> Self {
        let n = r.dim();
        let ric = Tensor::from_fn(n, 2, |x| {
            let mut acc = S::zero();
            for i in 0..n {
                acc = acc + r.at4(i, x[0], x[1], i).clone();
            }
            acc
        });
        let mut scal = S::zero();
        for j in 0..n {
            scal = scal + ric.at2(j, j).clone();
        }
        CurvatureTensor { r: Rank4::new(r, Symmetry::None, 0.0).expect("rank 4"), ric, scal }
    }

    pub fn r(&self) -> &Tensor<S> {
        self.r.tensor()
    }

    pub fn ric(&self) -> &Tensor<S> {
        &self.ric
    }

    pub fn scal(&self) -> &S {
        &self.scal
    }

    /// Largest violation of `R_{ijkl} = −R_{jikl} = −R_{ijlk}`.
    pub fn symmetry_defect(&self) -> S {
        let r = self.r();
        let n = r.dim();
        let mut worst = S::zero();
        for x in crate::tensor::index_tuples(n, 4) {
            let (i, j, k, l) = (x[0], x[1], x[2], x[3]);
            for v in [
                r.at4(i, j, k, l).clone() + r.at4(j, i, k, l).clone(),
                r.at4(i, j, k, l).clone() + r.at4(i, j, l, k).clone(),
            ] {
                let a = v.abs();
                if a > worst {
                    worst = a;
                }
            }
        }
        worst
    }

    pub fn as_rank4(&self, tol: f64) -> Result<Rank4<S>> {
        Rank4::new(self.r().clone(), Symmetry::Curvature, tol)
    }
}

/// `σ^T_{abcd} = T_{abs}T_{scd} + T_{bcs}T_{sad} + T_{cas}T_{sbd}`.
pub fn sigma_components<S: Scalar>(t: &Tensor<S>) -> Tensor<S> {
    let n = t.dim();
    Tensor::from_fn(n, 4, |x| {
        let (a, b, c, d) = (x[0], x[1], x[2], x[3]);
        let mut acc = S::zero();
        for s in 0..n {
            acc = acc
                + t.at3(a, b, s).clone() * t.at3(s, c, d).clone()
                + t.at3(b, c, s).clone() * t.at3(s, a, d).clone()
                + t.at3(c, a, s).clone() * t.at3(s, b, d).clone();
        }
        acc
    })
}

/// `σ^T = ½ Σ_j (e_j ⌟ T) ∧ (e_j ⌟ T)` assembled with wedge and interior
/// products; agrees with [`sigma_components`].
pub fn sigma_wedge<S: Scalar>(t: &AltForm<S>) -> Result<AltForm<S>> {
    let n = t.dim();
    let mut acc = AltForm::zero(n, 4);
    for j in 0..n {
        let e = Tensor::from_fn(n, 1, |i| if i[0] == j { S::one() } else { S::zero() });
        let a = t.interior(&e)?;
        acc = acc.add(&a.wedge(&a));
    }
    Ok(acc.scale(&S::from_ratio(1, 2)))
}

pub fn t_squared<S: Scalar>(t: &Tensor<S>) -> Tensor<S> {
    let n = t.dim();
    Tensor::from_fn(n, 2, |x| {
        let mut acc = S::zero();
        for a in 0..n {
            for b in 0..n {
                acc = acc + t.at3(x[0], a, b).clone() * t.at3(x[1], a, b).clone();
            }
        }
        acc
    })
}

pub fn norm_squared<S: Scalar>(t: &Tensor<S>) -> S {
    t.data().iter().fold(S::zero(), |acc, x| acc + x.clone() * x.clone())
}

/// `θ_j = δT_{ab} T_{jab}`.
pub fn theta<S: Scalar>(delta_t: &Tensor<S>, t: &Tensor<S>) -> Tensor<S> {
    let n = t.dim();
    Tensor::from_fn(n, 1, |x| {
        let mut acc = S::zero();
        for a in 0..n {
            for b in 0..n {
                acc = acc + delta_t.at2(a, b).clone() * t.at3(x[0], a, b).clone();
            }
        }
        acc
    })
}

/// `Θ_j = T_{abc} dT_{jabc}`.
pub fn big_theta<S: Scalar>(t: &Tensor<S>, dt: &Tensor<S>) -> Tensor<S> {
    let n = t.dim();
    Tensor::from_fn(n, 1, |x| {
        let mut acc = S::zero();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    acc = acc + t.at3(a, b, c).clone() * dt.at4(x[0], a, b, c).clone();
                }
            }
        }
        acc
    })
}

/// `(δT)_{jk} = −Σ_a (∇^g_a T)_{ajk}` from a frame covariant derivative.
pub fn codifferential_from_nabla<S: Scalar>(nabla_g_t: &Tensor<S>) -> Tensor<S> {
    let n = nabla_g_t.dim();
    Tensor::from_fn(n, 2, |x| {
        let mut acc = S::zero();
        for a in 0..n {
            acc = acc - nabla_g_t.at4(a, a, x[0], x[1]).clone();
        }
        acc
    })
}

/// `∇^t_i T_{jkl} = ∇^g_i T_{jkl} − (t/2)(T_{ijs}T_{skl} + T_{iks}T_{jsl} + T_{ils}T_{jks})`,
/// valid in any frame since `∇^t − ∇^g = (t/2)T`.
pub fn nabla_t_family<S: Scalar>(nabla_g_t: &Tensor<S>, t: &Tensor<S>, param: &S) -> Tensor<S> {
    let n = t.dim();
    let half_t = param.clone() * S::from_ratio(1, 2);
    Tensor::from_fn(n, 4, |x| {
        let (i, j, k, l) = (x[0], x[1], x[2], x[3]);
        let mut corr = S::zero();
        for s in 0..n {
            corr = corr
                + t.at3(i, j, s).clone() * t.at3(s, k, l).clone()
                + t.at3(i, k, s).clone() * t.at3(j, s, l).clone()
                + t.at3(i, l, s).clone() * t.at3(j, k, s).clone();
        }
        nabla_g_t.at4(i, j, k, l).clone() - half_t.clone() * corr
    })
}

/// Contraction `Σ_i X_{i j i}` of a rank-3 tensor (divergence on the
/// derivative slot against the last slot).
pub fn div_last<S: Scalar>(x: &Tensor<S>) -> Tensor<S> {
    let n = x.dim();
    Tensor::from_fn(n, 1, |j| {
        let mut acc = S::zero();
        for i in 0..n {
            acc = acc + x.at3(i, j[0], i).clone();
        }
        acc
    })
}

/// Contraction `Σ_i X_{i i j}` of a rank-3 tensor.
pub fn div_first<S: Scalar>(x: &Tensor<S>) -> Tensor<S> {
    let n = x.dim();
    Tensor::from_fn(n, 1, |j| {
        let mut acc = S::zero();
        for i in 0..n {
            acc = acc + x.at3(i, i, j[0]).clone();
        }
        acc
    })
}

/// Torsion 3-form and every quantity derived from it at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivedTorsionPack<S> {
    pub t: AltForm<S>,
    pub dt: AltForm<S>,
    pub delta_t: AltForm<S>,
    /// `∇_i T_{jkl}` for the torsion connection.
    pub nabla_t: Tensor<S>,
    pub nabla_g_t: Tensor<S>,
    pub sigma: AltForm<S>,
    pub t2: Tensor<S>,
    pub norm_t2: S,
    pub theta: Tensor<S>,
    pub big_theta: Tensor<S>,
}

impl<S: Scalar> DerivedTorsionPack<S> {
    pub fn assemble(t: Tensor<S>, dt: Tensor<S>, nabla_t: Tensor<S>, nabla_g_t: Tensor<S>) -> Self {
        let delta_t = codifferential_from_nabla(&nabla_g_t);
        let sigma = sigma_components(&t);
        let t2 = t_squared(&t);
        let norm_t2 = norm_squared(&t);
        let th = theta(&delta_t, &t);
        let big = big_theta(&t, &dt);
        DerivedTorsionPack {
            t: AltForm::from_tensor_unchecked(t),
            dt: AltForm::from_tensor_unchecked(dt),
            delta_t: AltForm::from_tensor_unchecked(delta_t),
            nabla_t,
            nabla_g_t,
            sigma: AltForm::from_tensor_unchecked(sigma),
            t2,
            norm_t2,
            theta: th,
            big_theta: big,
        }
    }

    /// Recomputes θ and Θ from the stored pieces; returns the larger defect.
    pub fn consistency_defect(&self) -> S {
        let th = theta(self.delta_t.tensor(), self.t.tensor());
        let big = big_theta(self.t.tensor(), self.dt.tensor());
        let a = (&th - &self.theta).max_abs().0;
        let b = (&big - &self.big_theta).max_abs().0;
        if a > b {
            a
        } else {
            b
        }
    }

    pub fn nabla_t_rank4(&self, tol: f64) -> Result<Rank4<S>> {
        Rank4::new(self.nabla_t.clone(), Symmetry::AltLast3, tol)
    }

    pub fn is_parallel(&self, tol: f64) -> bool {
        self.nabla_t.data().iter().all(|x| is_negligible(x, tol))
    }
}

/// Derivatives of the potential `f` and of scalar fields built from it.
/// `Δ = −tr ∇∇` throughout.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialData<S> {
    pub f: S,
    pub df: Tensor<S>,
    /// `∇_i∇_j f` for the torsion connection.
    pub hess: Tensor<S>,
    /// `∇^g_i∇^g_j f`.
    pub hess_lc: Tensor<S>,
    pub lap: S,
    /// `∇_j Δf`.
    pub d_lap: Tensor<S>,
    /// `Σ_i ∇_i∇_i∇_j f`.
    pub nabla3_iij: Tensor<S>,
    /// `Σ_i ∇_i∇_j∇_i f`.
    pub nabla3_iji: Tensor<S>,
    /// `∇_j ‖df‖²`.
    pub d_norm_df2: Tensor<S>,
    /// `Δ(Δf − ‖T‖²/6)`.
    pub lap_lap_minus: S,
    /// `∇_j (Δf + ‖T‖²/6)`.
    pub d_lap_plus: Tensor<S>,
    /// `Δ(Scal^g − 5‖T‖²/12)`.
    pub lap_scal_g_minus: S,
    /// `∇_j (Scal^g − ‖T‖²/12)`.
    pub d_scal_g_minus: Tensor<S>,
    /// `∇_j Scal^g`.
    pub d_scal_g: Tensor<S>,
}

impl<S: Scalar> PotentialData<S> {
    /// Data for a constant potential: every derivative vanishes.
    pub fn constant(f: S, n: usize) -> Self {
        let z1 = Tensor::zeros(n, 1);
        let z2 = Tensor::zeros(n, 2);
        PotentialData {
            f,
            df: z1.clone(),
            hess: z2.clone(),
            hess_lc: z2,
            lap: S::zero(),
            d_lap: z1.clone(),
            nabla3_iij: z1.clone(),
            nabla3_iji: z1.clone(),
            d_norm_df2: z1.clone(),
            lap_lap_minus: S::zero(),
            d_lap_plus: z1.clone(),
            lap_scal_g_minus: S::zero(),
            d_scal_g_minus: z1.clone(),
            d_scal_g: z1,
        }
    }
}

/// Everything the identity registry needs at one point, in an orthonormal frame.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameData<S> {
    pub connection: ConnectionCoeffs<S>,
    pub lc: ConnectionCoeffs<S>,
    pub curvature: CurvatureTensor<S>,
    pub ric_g: Tensor<S>,
    pub scal_g: S,
    pub pack: DerivedTorsionPack<S>,
    /// `∇_j Scal`.
    pub d_scal: Tensor<S>,
    /// `Σ_i (∇_i Ric)_{ji}`.
    pub div_ric: Tensor<S>,
    /// `Σ_i (∇_i Ric)_{ij}`.
    pub div_ric_first: Tensor<S>,
    /// `∇_j ‖T‖²`.
    pub d_norm_t2: Tensor<S>,
    /// `Σ_s ∇^g_s T²_{sj}`.
    pub div_t2_lc: Tensor<S>,
    /// `Σ_s ∇_s T²_{sj}`.
    pub div_t2: Tensor<S>,
    /// `Σ_i ∇_i δT_{ij}`.
    pub div_delta_t: Tensor<S>,
    pub potential: Option<PotentialData<S>>,
}

impl<S: Scalar> FrameData<S> {
    pub fn dim(&self) -> usize {
        self.connection.dim()
    }

    pub fn convert<U: Scalar>(&self, f: impl Fn(&S) -> U + Copy) -> FrameData<U> {
        let conn = |c: &ConnectionCoeffs<S>| ConnectionCoeffs {
            gamma: c.gamma.convert(f),
            bracket: c.bracket.convert(f),
            t: c.t.clone(),
        };
        let alt = |a: &AltForm<S>| AltForm::from_tensor_unchecked(a.tensor().convert(f));
        let p = &self.pack;
        FrameData {
            connection: conn(&self.connection),
            lc: conn(&self.lc),
            curvature: CurvatureTensor::from_components(self.curvature.r().convert(f)),
            ric_g: self.ric_g.convert(f),
            scal_g: f(&self.scal_g),
            pack: DerivedTorsionPack {
                t: alt(&p.t),
                dt: alt(&p.dt),
                delta_t: alt(&p.delta_t),
                nabla_t: p.nabla_t.convert(f),
                nabla_g_t: p.nabla_g_t.convert(f),
                sigma: alt(&p.sigma),
                t2: p.t2.convert(f),
                norm_t2: f(&p.norm_t2),
                theta: p.theta.convert(f),
                big_theta: p.big_theta.convert(f),
            },
            d_scal: self.d_scal.convert(f),
            div_ric: self.div_ric.convert(f),
            div_ric_first: self.div_ric_first.convert(f),
            d_norm_t2: self.d_norm_t2.convert(f),
            div_t2_lc: self.div_t2_lc.convert(f),
            div_t2: self.div_t2.convert(f),
            div_delta_t: self.div_delta_t.convert(f),
            potential: self.potential.as_ref().map(|q| PotentialData {
                f: f(&q.f),
                df: q.df.convert(f),
                hess: q.hess.convert(f),
                hess_lc: q.hess_lc.convert(f),
                lap: f(&q.lap),
                d_lap: q.d_lap.convert(f),
                nabla3_iij: q.nabla3_iij.convert(f),
                nabla3_iji: q.nabla3_iji.convert(f),
                d_norm_df2: q.d_norm_df2.convert(f),
                lap_lap_minus: f(&q.lap_lap_minus),
                d_lap_plus: q.d_lap_plus.convert(f),
                lap_scal_g_minus: f(&q.lap_scal_g_minus),
                d_scal_g_minus: q.d_scal_g_minus.convert(f),
                d_scal_g: q.d_scal_g.convert(f),
            }),
        }
    }
}

/// `∇^t` on a Lie geometry: `Γ^t = Γ^g + (t/2)T`.
pub fn torsion_connection<S: Scalar>(geo: &LieGeometry, t: &Rational) -> ConnectionCoeffs<S> {
    let lc = lc_connection::<S>(geo);
    let half_t = S::from_rational(t) * S::from_ratio(1, 2);
    let gamma = lc.gamma() + &geo.torsion_components::<S>().scale(&half_t);
    ConnectionCoeffs::new(gamma, lc.bracket, t.clone())
}

/// `(Ric^g, Scal^g)` straight from the Levi-Civita curvature.
pub fn riemannian_data<S: Scalar>(geo: &LieGeometry) -> (Tensor<S>, S) {
    let c = lc_connection::<S>(geo).curvature_constant_frame();
    (c.ric, c.scal)
}

/// Assembles [`FrameData`] on a Lie geometry. All scalar fields are
/// constant, so their differentials vanish; covariant derivatives of
/// invariant tensors are algebraic.
pub fn lie_frame_data<S: Scalar>(geo: &LieGeometry) -> FrameData<S> {
    let n = geo.dim();
    let t = geo.torsion_components::<S>();
    let lc = lc_connection::<S>(geo);
    let conn = torsion_connection::<S>(geo, &crate::scalar::rat(1, 1));
    let curvature = conn.curvature_constant_frame();
    let (ric_g, scal_g) = riemannian_data::<S>(geo);
    let nabla_t = lie_covariant_derivative(conn.gamma(), &t);
    let nabla_g_t = lie_covariant_derivative(lc.gamma(), &t);
    let dt = lie_dt::<S>(geo).into_tensor();
    let pack = DerivedTorsionPack::assemble(t, dt, nabla_t, nabla_g_t);

    let nabla_ric = lie_covariant_derivative(conn.gamma(), curvature.ric());
    let div_ric = div_last(&nabla_ric);
    let div_ric_first = div_first(&nabla_ric);
    let div_t2_lc = div_first(&lie_covariant_derivative(lc.gamma(), &pack.t2));
    let div_t2 = div_first(&lie_covariant_derivative(conn.gamma(), &pack.t2));
    let div_delta_t = div_first(&lie_covariant_derivative(conn.gamma(), pack.delta_t.tensor()));
    let zero1 = Tensor::zeros(n, 1);
    FrameData {
        connection: conn,
        lc,
        curvature,
        ric_g,
        scal_g,
        d_scal: zero1.clone(),
        div_ric,
        div_ric_first,
        d_norm_t2: zero1,
        div_t2_lc,
        div_t2,
        div_delta_t,
        potential: Some(PotentialData::constant(S::from_rational(geo.potential()), n)),
        pack,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::StructureConstants;
    use crate::scalar::rat;
    use crate::tensor::{index_tuples, permutation_sign};

    fn r(p: i64) -> Rational {
        rat(p, 1)
    }

    fn delta(a: usize, b: usize) -> Rational {
        if a == b {
            r(1)
        } else {
            r(0)
        }
    }

    fn flat_torus(lambda: Rational) -> LieGeometry {
        LieGeometry::new(StructureConstants::abelian(3), AltForm::basis(3, &[0, 1, 2], lambda), r(0)).unwrap()
    }

    fn su2_cs(lambda: Rational) -> LieGeometry {
        LieGeometry::new(StructureConstants::su2(&lambda), AltForm::basis(3, &[0, 1, 2], -lambda), r(0)).unwrap()
    }

    #[test]
    fn t_zero_reproduces_levi_civita() {
        let geo = flat_torus(r(2));
        let c0 = torsion_connection::<Rational>(&geo, &r(0));
        assert_eq!(c0, lc_connection::<Rational>(&geo));
    }

    #[test]
    fn flat_torus_connection_is_half_torsion() {
        let lambda = rat(5, 3);
        let geo = flat_torus(lambda.clone());
        let c = torsion_connection::<Rational>(&geo, &r(1));
        for idx in index_tuples(3, 3) {
            let eps = r(permutation_sign(&idx) as i64);
            assert_eq!(c.gamma().get(&idx), &(lambda.clone() * eps / r(2)));
        }
        assert!(c.metricity_defect().is_zero(0.0));
        assert!(c.torsion_defect(&geo.torsion_components()).is_zero(0.0));
    }

    #[test]
    fn flat_torus_curvature_matches_commutator_oracle() {
        let lambda = rat(3, 2);
        let geo = flat_torus(lambda.clone());
        let conn = torsion_connection::<Rational>(&geo, &r(1));
        let curv = conn.curvature_constant_frame();
        let l2 = lambda.clone() * lambda.clone();
        // brute-force: R(e_i,e_j)e_k = ∇_i(∇_j e_k) − ∇_j(∇_i e_k) with Γ constant
        let g = conn.gamma();
        for x in index_tuples(3, 4) {
            let (i, j, k, l) = (x[0], x[1], x[2], x[3]);
            let mut oracle = r(0);
            for s in 0..3 {
                oracle += g.at3(j, k, s) * g.at3(i, s, l) - g.at3(i, k, s) * g.at3(j, s, l);
            }
            let closed = l2.clone() / r(4) * (delta(j, l) * delta(k, i) - delta(i, l) * delta(k, j));
            assert_eq!(curv.r().get(&x), &oracle);
            assert_eq!(curv.r().get(&x), &closed);
        }
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(curv.ric().at2(a, b), &(-l2.clone() / r(2) * delta(a, b)));
            }
        }
        assert_eq!(curv.scal(), &(-l2 * rat(3, 2)));
        assert!(curv.as_rank4(0.0).is_ok());
    }

    #[test]
    fn cartan_schouten_is_flat() {
        let geo = su2_cs(r(1));
        let conn = torsion_connection::<Rational>(&geo, &r(1));
        assert!(conn.gamma().is_zero(0.0));
        assert!(conn.curvature_constant_frame().r().is_zero(0.0));
    }

    #[test]
    fn su2_riemannian_ricci() {
        let lambda = rat(2, 3);
        let geo = su2_cs(lambda.clone());
        let (ric_g, _) = riemannian_data::<Rational>(&geo);
        let c = geo.structure().tensor();
        for a in 0..3 {
            for b in 0..3 {
                // bi-invariant oracle: Ric^g_{jk} = ¼ c_{jab} c_{kab}
                let mut o = r(0);
                for p in 0..3 {
                    for q in 0..3 {
                        o += c.at3(a, p, q) * c.at3(b, p, q);
                    }
                }
                assert_eq!(ric_g.at2(a, b), &(o / r(4)));
                assert_eq!(ric_g.at2(a, b), &(lambda.clone() * lambda.clone() / r(2) * delta(a, b)));
            }
        }
    }

    #[test]
    fn flat_torus_pack() {
        let lambda = r(1);
        let fd = lie_frame_data::<Rational>(&flat_torus(lambda));
        let p = &fd.pack;
        assert_eq!(p.t2, Tensor::identity(3).scale(&r(2)));
        assert_eq!(p.norm_t2, r(6));
        assert!(p.theta.is_zero(0.0) && p.big_theta.is_zero(0.0));
        assert!(p.sigma.tensor().is_zero(0.0));
        assert!(p.dt.tensor().is_zero(0.0));
        assert_eq!(fd.scal_g, r(0));
        assert!(fd.ric_g.is_zero(0.0));
        assert_eq!(p.consistency_defect(), r(0));
        assert!(p.nabla_t_rank4(0.0).is_ok());
    }

    #[test]
    fn sigma_wedge_matches_components() {
        let mut t = AltForm::zero(5, 3);
        t.add_basis(&[0, 1, 2], r(2));
        t.add_basis(&[0, 3, 4], rat(-1, 3));
        t.add_basis(&[1, 2, 4], r(5));
        t.add_basis(&[1, 3, 4], rat(7, 2));
        let comp = sigma_components(t.tensor());
        let wedge = sigma_wedge(&t).unwrap();
        assert_eq!(&comp, wedge.tensor());
        assert!(comp.is_antisymmetric(0.0));
    }

    #[test]
    fn nabla_one_third_vanishes_on_cartan_schouten() {
        let geo = su2_cs(r(3));
        let fd = lie_frame_data::<Rational>(&geo);
        let n13 = nabla_t_family(&fd.pack.nabla_g_t, fd.pack.t.tensor(), &rat(1, 3));
        assert!(n13.is_zero(0.0));
        let direct =
            lie_covariant_derivative(torsion_connection::<Rational>(&geo, &rat(1, 3)).gamma(), fd.pack.t.tensor());
        assert_eq!(direct, n13);
    }

    #[test]
    fn exact_and_float_agree() {
        let mut t = AltForm::zero(6, 3);
        t.add_basis(&[0, 1, 3], r(1));
        t.add_basis(&[2, 4, 5], rat(-3, 7));
        let geo =
            LieGeometry::new(StructureConstants::heisenberg().direct_sum(&StructureConstants::abelian(3)), t, r(0))
                .unwrap();
        let ex = lie_frame_data::<Rational>(&geo);
        let fl = lie_frame_data::<f64>(&geo);
        let conv = ex.convert(Scalar::to_f64);
        for (a, b) in conv.curvature.r().data().iter().zip(fl.curvature.r().data()) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
        assert!((conv.scal_g - fl.scal_g).abs() < 1e-12);
    }
}
