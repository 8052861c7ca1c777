//! Left-invariant geometry on a Lie group, described by structure constants
//! `c_{ijk} = g([e_i, e_j], e_k)` in an orthonormal left-invariant frame.
//!
//! Every derivative of an invariant tensor is algebraic here, so all
//! quantities are exact in rational mode.

use rand::Rng;

use crate::curvature::ConnectionCoeffs;
use crate::error::{Error, Result};
use crate::scalar::{rat, Rational, Scalar};
use crate::tensor::{index_tuples, permutation_sign, AltForm, Dim, Tensor};

#[derive(Clone, Debug, PartialEq)]
pub struct StructureConstants {
    c: Tensor<Rational>,
}

impl StructureConstants {
    /// Validates antisymmetry in the first two slots and the Jacobi identity.
    pub fn new(c: Tensor<Rational>) -> Result<Self> {
        if c.rank() != 3 {
            return Err(Error::InvalidGeometry("structure constants must have three indices".into()));
        }
        let n = c.dim();
        for idx in index_tuples(n, 3) {
            let (i, j, k) = (idx[0], idx[1], idx[2]);
            if c.at3(i, j, k) != &-c.at3(j, i, k).clone() {
                return Err(Error::InvalidGeometry(format!(
                    "c_{{{}{}{}}} is not antisymmetric in its first two indices",
                    i + 1,
                    j + 1,
                    k + 1
                )));
            }
        }
        for idx in index_tuples(n, 4) {
            let (i, j, k, l) = (idx[0], idx[1], idx[2], idx[3]);
            let mut acc = Rational::zero();
            for s in 0..n {
                acc = acc
                    + c.at3(i, j, s).clone() * c.at3(s, k, l).clone()
                    + c.at3(j, k, s).clone() * c.at3(s, i, l).clone()
                    + c.at3(k, i, s).clone() * c.at3(s, j, l).clone();
            }
            if !acc.is_zero() {
                return Err(Error::InvalidGeometry(format!(
                    "Jacobi identity fails at (i,j,k,l) = ({},{},{},{})",
                    i + 1,
                    j + 1,
                    k + 1,
                    l + 1
                )));
            }
        }
        Ok(StructureConstants { c })
    }

    pub fn abelian(n: usize) -> Self {
        StructureConstants { c: Tensor::zeros(n, 3) }
    }

    /// `su(2)` with `c_{ijk} = λ ε_{ijk}`.
    pub fn su2(lambda: &Rational) -> Self {
        let c = Tensor::from_fn(3, 3, |i| lambda.clone() * Rational::from_i64(permutation_sign(i) as i64));
        StructureConstants { c }
    }

    /// Heisenberg algebra: `[e_1, e_2] = e_3`.
    pub fn heisenberg() -> Self {
        let mut c = Tensor::zeros(3, 3);
        c.set(&[0, 1, 2], rat(1, 1));
        c.set(&[1, 0, 2], rat(-1, 1));
        StructureConstants { c }
    }

    /// Strictly upper-triangular `m×m` matrices with basis `E_{ab}`, `a < b`,
    /// declared orthonormal; dimension `m(m-1)/2`.
    pub fn strictly_upper(m: usize) -> Self {
        let basis: Vec<(usize, usize)> = (0..m).flat_map(|a| (a + 1..m).map(move |b| (a, b))).collect();
        let n = basis.len();
        let pos = |a: usize, b: usize| basis.iter().position(|&e| e == (a, b));
        let mut c: Tensor<Rational> = Tensor::zeros(n, 3);
        for (i, &(a, b)) in basis.iter().enumerate() {
            for (j, &(cc, d)) in basis.iter().enumerate() {
                // [E_ab, E_cd] = δ_bc E_ad − δ_da E_cb
                if b == cc {
                    if let Some(k) = pos(a, d) {
                        let v = c.at3(i, j, k).clone() + rat(1, 1);
                        c.set(&[i, j, k], v);
                    }
                }
                if d == a {
                    if let Some(k) = pos(cc, b) {
                        let v = c.at3(i, j, k).clone() - rat(1, 1);
                        c.set(&[i, j, k], v);
                    }
                }
            }
        }
        StructureConstants { c }
    }

    pub fn direct_sum(&self, other: &Self) -> Self {
        let n1 = self.dim();
        let n = n1 + other.dim();
        let c = Tensor::from_fn(n, 3, |i| {
            if i.iter().all(|&k| k < n1) {
                self.c.at3(i[0], i[1], i[2]).clone()
            } else if i.iter().all(|&k| k >= n1) {
                other.c.at3(i[0] - n1, i[1] - n1, i[2] - n1).clone()
            } else {
                Rational::zero()
            }
        });
        StructureConstants { c }
    }

    /// Declares `s_a e_a` orthonormal instead of `e_a` (a new left-invariant
    /// metric): `c'_{abc} = s_a s_b / s_c · c_{abc}`.
    pub fn rescale(&self, s: &[Rational]) -> Self {
        let c = Tensor::from_fn(self.dim(), 3, |i| {
            self.c.at3(i[0], i[1], i[2]).clone() * s[i[0]].clone() * s[i[1]].clone() / s[i[2]].clone()
        });
        StructureConstants { c }
    }

    /// Orthonormal change of frame `e'_i = Q_{ia} e_a`.
    pub fn rotate(&self, q: &Tensor<Rational>) -> Self {
        StructureConstants { c: transform3(&self.c, q) }
    }

    pub fn dim(&self) -> usize {
        self.c.dim()
    }

    pub fn tensor(&self) -> &Tensor<Rational> {
        &self.c
    }

    pub fn is_abelian(&self) -> bool {
        self.c.is_zero(0.0)
    }
}

/// `T'_{ijk} = Q_{ia} Q_{jb} Q_{kc} T_{abc}`.
pub fn transform3(t: &Tensor<Rational>, q: &Tensor<Rational>) -> Tensor<Rational> {
    let n = t.dim();
    // three successive single-slot transforms keep this O(n^4)
    let mut cur = t.clone();
    for slot in 0..3 {
        let prev = cur.clone();
        cur = Tensor::from_fn(n, 3, |i| {
            let mut acc = Rational::zero();
            for a in 0..n {
                let mut src = [i[0], i[1], i[2]];
                src[slot] = a;
                let v = prev.at3(src[0], src[1], src[2]);
                if !v.is_zero() {
                    acc += q.at2(i[slot], a).clone() * v.clone();
                }
            }
            acc
        });
    }
    cur
}

/// Rational orthogonal matrix built from random Givens rotations with
/// rational cosine/sine pairs `((1−u²)/(1+u²), 2u/(1+u²))`, followed by a
/// random signed permutation.
pub fn random_orthogonal<R: Rng>(n: usize, rotations: usize, rng: &mut R) -> Tensor<Rational> {
    let mut q: Tensor<Rational> = Tensor::identity(n);
    for _ in 0..rotations {
        let a = rng.gen_range(0..n);
        let mut b = rng.gen_range(0..n);
        if a == b {
            b = (b + 1) % n;
        }
        let u = rat(rng.gen_range(1..4), rng.gen_range(1..4));
        let one = rat(1, 1);
        let den = one.clone() + u.clone() * u.clone();
        let cos = (one - u.clone() * u.clone()) / den.clone();
        let sin = rat(2, 1) * u / den;
        let prev = q.clone();
        for col in 0..n {
            let ra = prev.at2(a, col).clone();
            let rb = prev.at2(b, col).clone();
            q.set(&[a, col], cos.clone() * ra.clone() - sin.clone() * rb.clone());
            q.set(&[b, col], sin.clone() * ra + cos.clone() * rb);
        }
    }
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.gen_range(0..=i));
    }
    let signs: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
    Tensor::from_fn(n, 2, |i| {
        let v = q.at2(perm[i[0]], i[1]).clone();
        if signs[i[0]] {
            -v
        } else {
            v
        }
    })
}

/// Left-invariant metric (identity in the frame), torsion 3-form with
/// constant components, and a constant potential.
#[derive(Clone, Debug, PartialEq)]
pub struct LieGeometry {
    dim: Dim,
    c: StructureConstants,
    t: AltForm<Rational>,
    f: Rational,
}

impl LieGeometry {
    pub fn new(c: StructureConstants, t: AltForm<Rational>, f: Rational) -> Result<Self> {
        let dim = Dim::new(c.dim())?;
        if t.dim() != c.dim() || t.degree() != 3 {
            return Err(Error::InvalidGeometry(format!("torsion must be a 3-form in dimension {}", c.dim())));
        }
        Ok(LieGeometry { dim, c, t, f })
    }

    pub fn dim(&self) -> usize {
        self.dim.get()
    }

    pub fn structure(&self) -> &StructureConstants {
        &self.c
    }

    pub fn torsion(&self) -> &AltForm<Rational> {
        &self.t
    }

    pub fn potential(&self) -> &Rational {
        &self.f
    }

    pub fn with_torsion(&self, t: AltForm<Rational>) -> Result<Self> {
        Self::new(self.c.clone(), t, self.f.clone())
    }

    pub fn bracket<S: Scalar>(&self) -> Tensor<S> {
        self.c.tensor().convert(S::from_rational)
    }

    pub fn torsion_components<S: Scalar>(&self) -> Tensor<S> {
        self.t.tensor().convert(S::from_rational)
    }
}

/// Levi-Civita connection from the Koszul formula in an orthonormal
/// invariant frame: `Γ_{ijk} = ½(c_{ijk} − c_{jki} + c_{kij})`.
pub fn lc_connection<S: Scalar>(geo: &LieGeometry) -> ConnectionCoeffs<S> {
    let c = geo.bracket::<S>();
    let half = S::from_ratio(1, 2);
    let gamma = Tensor::from_fn(geo.dim(), 3, |i| {
        let (a, b, k) = (i[0], i[1], i[2]);
        (c.at3(a, b, k).clone() - c.at3(b, k, a).clone() + c.at3(k, a, b).clone()) * half.clone()
    });
    ConnectionCoeffs::new(gamma, c, rat(0, 1))
}

/// Exterior derivative of an invariant `p`-form:
/// `dα(X_0..X_p) = Σ_{a<b} (−1)^{a+b} α([X_a, X_b], X_0, …, X̂_a, …, X̂_b, …)`.
pub fn lie_exterior_derivative<S: Scalar>(c: &Tensor<S>, form: &Tensor<S>) -> Tensor<S> {
    let n = c.dim();
    let p = form.rank();
    Tensor::from_fn(n, p + 1, |x| {
        let mut acc = S::zero();
        for a in 0..=p {
            for b in a + 1..=p {
                let rest: Vec<usize> = (0..=p).filter(|&k| k != a && k != b).map(|k| x[k]).collect();
                let mut idx = Vec::with_capacity(p);
                idx.push(0);
                idx.extend_from_slice(&rest);
                let mut sum = S::zero();
                for s in 0..n {
                    let cs = c.at3(x[a], x[b], s);
                    if cs.is_zero() {
                        continue;
                    }
                    idx[0] = s;
                    sum = sum + cs.clone() * form.get(&idx).clone();
                }
                acc = if (a + b) % 2 == 0 { acc + sum } else { acc - sum };
            }
        }
        acc
    })
}

/// Chevalley–Eilenberg `dT` of an invariant 3-form.
pub fn lie_dt<S: Scalar>(geo: &LieGeometry) -> AltForm<S> {
    let c = geo.bracket::<S>();
    let t = geo.torsion_components::<S>();
    AltForm::from_tensor_unchecked(lie_exterior_derivative(&c, &t))
}

/// `(∇_i S)_{jk…} = −Γ_{ij s} S_{s k…} − Γ_{ik s} S_{j s…} − …` for a tensor
/// with constant frame components.
pub fn lie_covariant_derivative<S: Scalar>(gamma: &Tensor<S>, s: &Tensor<S>) -> Tensor<S> {
    let n = s.dim();
    let r = s.rank();
    Tensor::from_fn(n, r + 1, |idx| {
        let i = idx[0];
        let rest = &idx[1..];
        let mut acc = S::zero();
        let mut src = rest.to_vec();
        for slot in 0..r {
            let orig = rest[slot];
            for m in 0..n {
                let g = gamma.at3(i, orig, m);
                if g.is_zero() {
                    continue;
                }
                src[slot] = m;
                acc = acc - g.clone() * s.get(&src).clone();
            }
            src[slot] = orig;
        }
        acc
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn r(p: i64) -> Rational {
        rat(p, 1)
    }

    /// Koszul formula evaluated term by term:
    /// 2g(∇_X Y, Z) = g([X,Y],Z) − g([Y,Z],X) + g([Z,X],Y).
    fn koszul_oracle(c: &Tensor<Rational>, i: usize, j: usize, k: usize) -> Rational {
        (c.at3(i, j, k).clone() - c.at3(j, k, i).clone() + c.at3(k, i, j).clone()) / r(2)
    }

    #[test]
    fn abelian_levi_civita_vanishes() {
        let geo = LieGeometry::new(StructureConstants::abelian(4), AltForm::zero(4, 3), r(0)).unwrap();
        assert!(lc_connection::<Rational>(&geo).gamma().is_zero(0.0));
    }

    #[test]
    fn su2_levi_civita_is_half_bracket() {
        let lambda = rat(3, 2);
        let geo = LieGeometry::new(StructureConstants::su2(&lambda), AltForm::zero(3, 3), r(0)).unwrap();
        let g = lc_connection::<Rational>(&geo);
        for idx in index_tuples(3, 3) {
            let eps = r(permutation_sign(&idx) as i64);
            assert_eq!(g.gamma().get(&idx), &(lambda.clone() * eps / r(2)));
        }
    }

    #[test]
    fn heisenberg_levi_civita() {
        let geo = LieGeometry::new(StructureConstants::heisenberg(), AltForm::zero(3, 3), r(0)).unwrap();
        let g = lc_connection::<Rational>(&geo);
        let c = geo.structure().tensor();
        for idx in index_tuples(3, 3) {
            assert_eq!(g.gamma().get(&idx), &koszul_oracle(c, idx[0], idx[1], idx[2]));
        }
        assert_eq!(g.gamma().at3(0, 1, 2), &rat(1, 2));
        // ∇_{e2}e3 = ½e1 and ∇_{e3}e1 = −½e2
        assert_eq!(g.gamma().at3(1, 2, 0), &rat(1, 2));
        assert_eq!(g.gamma().at3(2, 0, 1), &rat(-1, 2));
        assert_eq!(g.gamma().at3(0, 2, 1), &rat(-1, 2));
        assert!(g.metricity_defect().is_zero(0.0));
        assert!(g.torsion_defect(&Tensor::zeros(3, 3)).is_zero(0.0));
    }

    #[test]
    fn jacobi_violation_rejected() {
        // [e1,e2]=e1, [e2,e3]=e2: the Jacobiator on (e1,e2,e3) is e1
        let mut c2 = Tensor::zeros(3, 3);
        for (i, j, k) in [(0, 1, 0), (1, 2, 1)] {
            c2.set(&[i, j, k], r(1));
            c2.set(&[j, i, k], r(-1));
        }
        assert!(StructureConstants::new(c2).is_err());
        let mut bad = Tensor::zeros(3, 3);
        bad.set(&[0, 1, 2], r(1));
        assert!(StructureConstants::new(bad).is_err());
    }

    #[test]
    fn generated_algebras_satisfy_jacobi() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for m in [3, 4] {
            let base = StructureConstants::strictly_upper(m);
            let q = random_orthogonal(base.dim(), 4, &mut rng);
            let s: Vec<Rational> = (0..base.dim()).map(|k| rat(k as i64 + 1, 2)).collect();
            let rot = base.rescale(&s).rotate(&q);
            assert!(StructureConstants::new(rot.tensor().clone()).is_ok());
        }
        let sum = StructureConstants::su2(&r(2)).direct_sum(&StructureConstants::heisenberg());
        assert!(StructureConstants::new(sum.tensor().clone()).is_ok());
    }

    #[test]
    fn random_orthogonal_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let q = random_orthogonal(5, 6, &mut rng);
        let qqt = q.contract(&q, &[(1, 1)]).unwrap();
        assert_eq!(qqt, Tensor::identity(5));
    }

    #[test]
    fn dt_vanishes_in_dim_three_and_on_abelian() {
        let t = AltForm::basis(3, &[0, 1, 2], rat(7, 3));
        let geo = LieGeometry::new(StructureConstants::su2(&r(1)), t, r(0)).unwrap();
        assert!(lie_dt::<Rational>(&geo).tensor().is_zero(0.0));
        let mut t5 = AltForm::basis(5, &[0, 1, 2], r(1));
        t5.add_basis(&[1, 3, 4], rat(-2, 5));
        let geo = LieGeometry::new(StructureConstants::abelian(5), t5, r(0)).unwrap();
        assert!(lie_dt::<Rational>(&geo).tensor().is_zero(0.0));
    }

    #[test]
    fn heisenberg_plus_r3_dt_pair_expansion() {
        // T = e^{124} on h3 ⊕ R^3; the only nonzero bracket is [e1,e2] = e3.
        let c = StructureConstants::heisenberg().direct_sum(&StructureConstants::abelian(3));
        let t = AltForm::basis(6, &[0, 1, 3], r(1));
        let geo = LieGeometry::new(c, t.clone(), r(0)).unwrap();
        let dt = lie_dt::<Rational>(&geo);
        // brute-force oracle: sum over the 6 pairs with explicit brackets
        let br = geo.structure().tensor();
        for x in index_tuples(6, 4) {
            let mut acc = r(0);
            for a in 0..4 {
                for b in a + 1..4 {
                    let rest: Vec<usize> = (0..4).filter(|&k| k != a && k != b).map(|k| x[k]).collect();
                    for s in 0..6 {
                        let v = br.at3(x[a], x[b], s).clone() * t.tensor().at3(s, rest[0], rest[1]).clone();
                        acc = if (a + b) % 2 == 0 { acc + v } else { acc - v };
                    }
                }
            }
            assert_eq!(dt.tensor().get(&x), &acc);
        }
        // [e1,e2] = e3 and T has no e3 leg, so dT = 0 here; T = e^{345}
        // picks up dT(e1,e2,e4,e5) = −T([e1,e2],e4,e5) = −1.
        assert!(dt.tensor().is_zero(0.0));
        let geo2 = geo.with_torsion(AltForm::basis(6, &[2, 3, 4], r(1))).unwrap();
        let dt2 = lie_dt::<Rational>(&geo2);
        assert_eq!(dt2.tensor().at4(0, 1, 3, 4), &r(-1));
        assert!(dt2.tensor().is_antisymmetric(0.0));
    }

    #[test]
    fn d_squared_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let base = StructureConstants::strictly_upper(4);
        let q = random_orthogonal(6, 3, &mut rng);
        let c = base.rotate(&q);
        let mut t = AltForm::zero(6, 3);
        t.add_basis(&[0, 1, 2], r(1));
        t.add_basis(&[1, 3, 5], rat(2, 3));
        t.add_basis(&[2, 4, 5], r(-1));
        let ct = c.tensor().clone();
        let dt = lie_exterior_derivative(&ct, t.tensor());
        let ddt = lie_exterior_derivative(&ct, &dt);
        assert!(ddt.is_zero(0.0));
    }

    #[test]
    fn covariant_derivative_trivial_cases() {
        let t = AltForm::basis(3, &[0, 1, 2], r(1));
        let z = Tensor::<Rational>::zeros(3, 3);
        assert!(lie_covariant_derivative(&z, t.tensor()).is_zero(0.0));
        // Cartan–Schouten on su(2): Γ = Γ^g + ½T with T = −λε gives Γ = 0
        let lambda = r(2);
        let geo =
            LieGeometry::new(StructureConstants::su2(&lambda), AltForm::basis(3, &[0, 1, 2], -lambda.clone()), r(0))
                .unwrap();
        let lc = lc_connection::<Rational>(&geo);
        let gamma = lc.gamma() + &geo.torsion_components::<Rational>().scale(&rat(1, 2));
        assert!(gamma.is_zero(0.0));
        assert!(lie_covariant_derivative(&gamma, t.tensor()).is_zero(0.0));
    }
}
