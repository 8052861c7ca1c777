//! Dense multilinear algebra over a [`Scalar`]: general tensors with index
//! contraction, alternating forms with wedge and interior products, and
//! rank-4 tensors tagged with a symmetry class.
//!
//! Components are stored row-major; slot 0 varies slowest.

use std::ops::{Add, Neg, Sub};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MIN_DIM: usize = 2;
pub const MAX_DIM: usize = 8;

/// Dimension of the underlying space, `2 ≤ n ≤ 8`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Dim(usize);

impl Dim {
    pub fn new(n: usize) -> Result<Self> {
        if (MIN_DIM..=MAX_DIM).contains(&n) {
            Ok(Dim(n))
        } else {
            Err(Error::Structural(format!("dimension {n} outside supported range {MIN_DIM}..={MAX_DIM}")))
        }
    }

    pub fn get(self) -> usize {
        self.0
    }
}

/// `|x| ≤ tol` in float mode, `x == 0` in exact mode.
pub fn is_negligible<S: Scalar>(x: &S, tol: f64) -> bool {
    if S::EXACT {
        x.is_zero()
    } else {
        x.to_f64().abs() <= tol
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<S> {
    dim: usize,
    rank: usize,
    data: Vec<S>,
}

/// Iterates every index tuple of the given rank in row-major order.
pub fn index_tuples(dim: usize, rank: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = dim.pow(rank as u32);
    (0..total).map(move |mut flat| {
        let mut idx = vec![0; rank];
        for slot in (0..rank).rev() {
            idx[slot] = flat % dim;
            flat /= dim;
        }
        idx
    })
}

impl<S: Scalar> Tensor<S> {
    pub fn zeros(dim: usize, rank: usize) -> Self {
        Tensor { dim, rank, data: vec![S::zero(); dim.pow(rank as u32)] }
    }

    pub fn scalar(value: S, dim: usize) -> Self {
        Tensor { dim, rank: 0, data: vec![value] }
    }

    pub fn from_fn(dim: usize, rank: usize, f: impl Fn(&[usize]) -> S) -> Self {
        Tensor { dim, rank, data: index_tuples(dim, rank).map(|i| f(&i)).collect() }
    }

    pub fn from_vec(dim: usize, rank: usize, data: Vec<S>) -> Result<Self> {
        if data.len() != dim.pow(rank as u32) {
            return Err(Error::Structural(format!(
                "{} components do not fit rank {rank} in dimension {dim}",
                data.len()
            )));
        }
        Ok(Tensor { dim, rank, data })
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, 2, |i| if i[0] == i[1] { S::one() } else { S::zero() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn into_data(self) -> Vec<S> {
        self.data
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank);
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn get(&self, idx: &[usize]) -> &S {
        &self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: S) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    #[inline]
    pub fn at1(&self, i: usize) -> &S {
        &self.data[i]
    }

    #[inline]
    pub fn at2(&self, i: usize, j: usize) -> &S {
        &self.data[i * self.dim + j]
    }

    #[inline]
    pub fn at3(&self, i: usize, j: usize, k: usize) -> &S {
        let n = self.dim;
        &self.data[(i * n + j) * n + k]
    }

    #[inline]
    pub fn at4(&self, i: usize, j: usize, k: usize, l: usize) -> &S {
        let n = self.dim;
        &self.data[((i * n + j) * n + k) * n + l]
    }

    pub fn map(&self, f: impl Fn(&S) -> S) -> Self {
        Tensor { dim: self.dim, rank: self.rank, data: self.data.iter().map(f).collect() }
    }

    pub fn scale(&self, c: &S) -> Self {
        self.map(|x| x.clone() * c.clone())
    }

    fn zip(&self, other: &Self, f: impl Fn(&S, &S) -> S) -> Self {
        assert_eq!((self.dim, self.rank), (other.dim, other.rank), "shape mismatch");
        Tensor {
            dim: self.dim,
            rank: self.rank,
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(a, b)).collect(),
        }
    }

    /// Largest absolute component and the index tuple where it occurs.
    pub fn max_abs(&self) -> (S, Vec<usize>) {
        let mut best = S::zero();
        let mut at = 0;
        for (k, x) in self.data.iter().enumerate() {
            let a = x.abs();
            if a > best {
                best = a;
                at = k;
            }
        }
        let idx = index_tuples(self.dim, self.rank).nth(at).unwrap_or_default();
        (best, idx)
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.data.iter().all(|x| is_negligible(x, tol))
    }

    /// Reorders slots: `result(i_0, …, i_{p-1}) = self(i_{perm[0]}, …, i_{perm[p-1]})`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.rank || !is_permutation(perm) {
            return Err(Error::Structural(format!("{perm:?} is not a permutation of {} slots", self.rank)));
        }
        Ok(Self::from_fn(self.dim, self.rank, |idx| {
            let s: Vec<usize> = perm.iter().map(|&p| idx[p]).collect();
            self.get(&s).clone()
        }))
    }

    /// Einstein-summed contraction of `self` with `other` over the given
    /// `(slot in self, slot in other)` pairs. Free slots of `self` come first
    /// in the result, then free slots of `other`.
    pub fn contract(&self, other: &Self, pairs: &[(usize, usize)]) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::Structural("contraction across dimensions".into()));
        }
        let mut used_a = vec![false; self.rank];
        let mut used_b = vec![false; other.rank];
        for &(a, b) in pairs {
            if a >= self.rank || b >= other.rank || used_a[a] || used_b[b] {
                return Err(Error::Structural(format!(
                    "invalid index pairing {pairs:?} for ranks {} and {}",
                    self.rank, other.rank
                )));
            }
            used_a[a] = true;
            used_b[b] = true;
        }
        let free_a: Vec<usize> = (0..self.rank).filter(|&s| !used_a[s]).collect();
        let free_b: Vec<usize> = (0..other.rank).filter(|&s| !used_b[s]).collect();
        let out_rank = free_a.len() + free_b.len();
        let summed: Vec<Vec<usize>> = index_tuples(self.dim, pairs.len()).collect();
        let mut ia = vec![0; self.rank];
        let mut ib = vec![0; other.rank];
        let data = index_tuples(self.dim, out_rank)
            .map(|out| {
                for (k, &s) in free_a.iter().enumerate() {
                    ia[s] = out[k];
                }
                for (k, &s) in free_b.iter().enumerate() {
                    ib[s] = out[free_a.len() + k];
                }
                let mut acc = S::zero();
                for sum in &summed {
                    for (p, &(a, b)) in pairs.iter().enumerate() {
                        ia[a] = sum[p];
                        ib[b] = sum[p];
                    }
                    acc = acc + self.get(&ia).clone() * other.get(&ib).clone();
                }
                acc
            })
            .collect();
        Ok(Tensor { dim: self.dim, rank: out_rank, data })
    }

    /// Contraction of two slots of a single tensor.
    pub fn trace(&self, a: usize, b: usize) -> Result<Self> {
        if a == b || a >= self.rank || b >= self.rank {
            return Err(Error::Structural(format!("invalid trace slots ({a}, {b}) for rank {}", self.rank)));
        }
        let free: Vec<usize> = (0..self.rank).filter(|&s| s != a && s != b).collect();
        Ok(Self::from_fn(self.dim, free.len(), |out| {
            let mut full = vec![0; self.rank];
            for (k, &s) in free.iter().enumerate() {
                full[s] = out[k];
            }
            let mut acc = S::zero();
            for i in 0..self.dim {
                full[a] = i;
                full[b] = i;
                acc = acc + self.get(&full).clone();
            }
            acc
        }))
    }

    /// Full antisymmetrization over all slots, normalized by `1/p!` so that
    /// it is a projection.
    pub fn alternate(&self) -> AltForm<S> {
        let perms = permutations(self.rank);
        let norm = S::from_i64(perms.len() as i64);
        let t = Self::from_fn(self.dim, self.rank, |idx| {
            let mut acc = S::zero();
            let mut s = vec![0; idx.len()];
            for (perm, sign) in &perms {
                for (k, &p) in perm.iter().enumerate() {
                    s[k] = idx[p];
                }
                let v = self.get(&s).clone();
                acc = if *sign > 0 { acc + v } else { acc - v };
            }
            acc / norm.clone()
        });
        AltForm { degree: self.rank, tensor: t }
    }

    /// Every transposition of two slots flips the sign.
    pub fn is_antisymmetric(&self, tol: f64) -> bool {
        for a in 0..self.rank {
            for b in a + 1..self.rank {
                for idx in index_tuples(self.dim, self.rank) {
                    let mut sw = idx.clone();
                    sw.swap(a, b);
                    let s = self.get(&idx).clone() + self.get(&sw).clone();
                    if !is_negligible(&s, tol) {
                        return false;
                    }
                }
            }
        }
        true
    }

    pub fn symmetric_part(&self) -> Result<Self> {
        let t = self.permute(&[1, 0])?;
        let half = S::from_ratio(1, 2);
        Ok(self.zip(&t, |a, b| (a.clone() + b.clone()) * half.clone()))
    }

    pub fn antisymmetric_part(&self) -> Result<Self> {
        let t = self.permute(&[1, 0])?;
        let half = S::from_ratio(1, 2);
        Ok(self.zip(&t, |a, b| (a.clone() - b.clone()) * half.clone()))
    }

    pub fn convert<U: Scalar>(&self, f: impl Fn(&S) -> U) -> Tensor<U> {
        Tensor { dim: self.dim, rank: self.rank, data: self.data.iter().map(f).collect() }
    }
}

impl<S: Scalar> Add for &Tensor<S> {
    type Output = Tensor<S>;
    fn add(self, rhs: &Tensor<S>) -> Tensor<S> {
        self.zip(rhs, |a, b| a.clone() + b.clone())
    }
}

impl<S: Scalar> Sub for &Tensor<S> {
    type Output = Tensor<S>;
    fn sub(self, rhs: &Tensor<S>) -> Tensor<S> {
        self.zip(rhs, |a, b| a.clone() - b.clone())
    }
}

impl<S: Scalar> Neg for &Tensor<S> {
    type Output = Tensor<S>;
    fn neg(self) -> Tensor<S> {
        self.map(|a| -a.clone())
    }
}

fn is_permutation(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    for &x in p {
        if x >= p.len() || seen[x] {
            return false;
        }
        seen[x] = true;
    }
    true
}

/// All permutations of `0..p` with their signs.
pub fn permutations(p: usize) -> Vec<(Vec<usize>, i32)> {
    fn rec(prefix: &mut Vec<usize>, left: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for k in 0..left.len() {
            let x = left.remove(k);
            prefix.push(x);
            rec(prefix, left, out);
            prefix.pop();
            left.insert(k, x);
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut (0..p).collect(), &mut out);
    out.into_iter()
        .map(|perm| {
            let s = permutation_sign(&perm);
            (perm, s)
        })
        .collect()
}

/// Sign of a sequence of distinct indices, 0 if any repeat.
pub fn permutation_sign(idx: &[usize]) -> i32 {
    let mut sign = 1;
    for a in 0..idx.len() {
        for b in a + 1..idx.len() {
            match idx[a].cmp(&idx[b]) {
                std::cmp::Ordering::Equal => return 0,
                std::cmp::Ordering::Greater => sign = -sign,
                std::cmp::Ordering::Less => {}
            }
        }
    }
    sign
}

/// Totally antisymmetric tensor of degree `p`.
#[derive(Clone, Debug, PartialEq)]
pub struct AltForm<S> {
    degree: usize,
    tensor: Tensor<S>,
}

impl<S: Scalar> AltForm<S> {
    pub fn zero(dim: usize, degree: usize) -> Self {
        AltForm { degree, tensor: Tensor::zeros(dim, degree) }
    }

    /// Wraps a tensor after checking antisymmetry under every transposition.
    pub fn from_tensor(tensor: Tensor<S>, tol: f64) -> Result<Self> {
        if !tensor.is_antisymmetric(tol) {
            return Err(Error::Structural("tensor is not alternating in all slots".into()));
        }
        Ok(AltForm { degree: tensor.rank(), tensor })
    }

    pub(crate) fn from_tensor_unchecked(tensor: Tensor<S>) -> Self {
        AltForm { degree: tensor.rank(), tensor }
    }

    /// `coeff · e^{i_1} ∧ … ∧ e^{i_p}` (0-based indices).
    pub fn basis(dim: usize, idx: &[usize], coeff: S) -> Self {
        let mut f = Self::zero(dim, idx.len());
        f.add_basis(idx, coeff);
        f
    }

    /// Adds `coeff · e^{idx}` and fills every permuted component with its sign.
    pub fn add_basis(&mut self, idx: &[usize], coeff: S) {
        assert_eq!(idx.len(), self.degree);
        if permutation_sign(idx) == 0 {
            return;
        }
        for (perm, sign) in permutations(self.degree) {
            let p: Vec<usize> = perm.iter().map(|&k| idx[k]).collect();
            let o = self.tensor.offset(&p);
            let cur = self.tensor.data[o].clone();
            self.tensor.data[o] = if sign > 0 { cur + coeff.clone() } else { cur - coeff.clone() };
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.tensor.dim()
    }

    pub fn tensor(&self) -> &Tensor<S> {
        &self.tensor
    }

    pub fn into_tensor(self) -> Tensor<S> {
        self.tensor
    }

    /// `(α ∧ β) = (p+q)!/(p! q!) · Alt(α ⊗ β)`, so `(e^1 ∧ e^2)(e_1, e_2) = 1`.
    pub fn wedge(&self, other: &Self) -> Self {
        let (p, q) = (self.degree, other.degree);
        let n = self.dim();
        let prod =
            Tensor::from_fn(n, p + q, |idx| self.tensor.get(&idx[..p]).clone() * other.tensor.get(&idx[p..]).clone());
        let c = S::from_i64(binomial(p + q, p));
        let alt = prod.alternate();
        AltForm { degree: p + q, tensor: alt.tensor.scale(&c) }
    }

    /// `(v ⌟ α)_{i…} = v_s α_{s i…}`.
    pub fn interior(&self, v: &Tensor<S>) -> Result<Self> {
        if v.rank() != 1 || self.degree == 0 {
            return Err(Error::Structural("interior product needs a vector and a form of positive degree".into()));
        }
        let t = v.contract(&self.tensor, &[(0, 0)])?;
        Ok(AltForm { degree: self.degree - 1, tensor: t })
    }

    pub fn add(&self, other: &Self) -> Self {
        AltForm { degree: self.degree, tensor: &self.tensor + &other.tensor }
    }

    pub fn scale(&self, c: &S) -> Self {
        AltForm { degree: self.degree, tensor: self.tensor.scale(c) }
    }
}

fn binomial(n: usize, k: usize) -> i64 {
    let mut r: i64 = 1;
    for i in 0..k {
        r = r * (n - i) as i64 / (i + 1) as i64;
    }
    r
}

/// Declared symmetry class of a rank-4 tensor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symmetry {
    None,
    /// Antisymmetric in slots (0,1) and in slots (2,3).
    Curvature,
    /// Alternating in the last three slots.
    AltLast3,
    /// Alternating in all four slots.
    Alt4,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rank4<S> {
    tensor: Tensor<S>,
    symmetry: Symmetry,
}

impl<S: Scalar> Rank4<S> {
    pub fn new(tensor: Tensor<S>, symmetry: Symmetry, tol: f64) -> Result<Self> {
        if tensor.rank() != 4 {
            return Err(Error::Structural(format!("rank-4 tensor expected, got rank {}", tensor.rank())));
        }
        let r = Rank4 { tensor, symmetry };
        if !r.symmetry_holds(tol) {
            return Err(Error::Structural(format!("declared symmetry {symmetry:?} does not hold")));
        }
        Ok(r)
    }

    pub fn tensor(&self) -> &Tensor<S> {
        &self.tensor
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn symmetry_holds(&self, tol: f64) -> bool {
        let t = &self.tensor;
        let n = t.dim();
        let swaps: &[(usize, usize)] = match self.symmetry {
            Symmetry::None => &[],
            Symmetry::Curvature => &[(0, 1), (2, 3)],
            Symmetry::AltLast3 => &[(1, 2), (2, 3), (1, 3)],
            Symmetry::Alt4 => &[(0, 1), (1, 2), (2, 3), (0, 2), (0, 3), (1, 3)],
        };
        for &(a, b) in swaps {
            for idx in index_tuples(n, 4) {
                let mut sw = idx.clone();
                sw.swap(a, b);
                let s = t.get(&idx).clone() + t.get(&sw).clone();
                if !is_negligible(&s, tol) {
                    return false;
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, Rational};

    fn r(p: i64) -> Rational {
        rat(p, 1)
    }

    #[test]
    fn dim_range() {
        assert!(Dim::new(1).is_err());
        assert!(Dim::new(9).is_err());
        assert_eq!(Dim::new(4).unwrap().get(), 4);
    }

    #[test]
    fn trace_of_t_squared_on_volume_form() {
        // T = λ e^{123}, T²_{jk} = T_{jab} T_{kab}
        let lambda = rat(3, 2);
        let t = AltForm::basis(3, &[0, 1, 2], lambda.clone());
        let t2 = t.tensor().contract(t.tensor(), &[(1, 1), (2, 2)]).unwrap();
        // brute-force oracle
        for j in 0..3 {
            for k in 0..3 {
                let mut acc = r(0);
                for a in 0..3 {
                    for b in 0..3 {
                        acc += t.tensor().at3(j, a, b) * t.tensor().at3(k, a, b);
                    }
                }
                assert_eq!(t2.at2(j, k), &acc);
            }
        }
        let tr = t2.trace(0, 1).unwrap();
        assert_eq!(tr.data()[0], lambda.clone() * lambda * r(6));
    }

    #[test]
    fn empty_pairing_is_outer_product_and_scalar_identity() {
        let a = Tensor::from_fn(3, 2, |i| r((i[0] * 3 + i[1]) as i64));
        let one = Tensor::scalar(r(1), 3);
        let c = one.contract(&a, &[]).unwrap();
        assert_eq!(c, a);
    }

    #[test]
    fn zero_operand_annihilates() {
        let dt = Tensor::<Rational>::zeros(4, 2);
        let t = AltForm::basis(4, &[0, 1, 2], r(1));
        let theta = dt.contract(t.tensor(), &[(0, 1), (1, 2)]).unwrap();
        assert!(theta.is_zero(0.0));
        assert_eq!(theta.rank(), 1);
    }

    #[test]
    fn contract_rejects_bad_pairings() {
        let a = Tensor::<f64>::zeros(3, 2);
        assert!(a.contract(&a, &[(2, 0)]).is_err());
        assert!(a.contract(&a, &[(0, 0), (0, 1)]).is_err());
        let b = Tensor::<f64>::zeros(4, 2);
        assert!(a.contract(&b, &[(0, 0)]).is_err());
    }

    #[test]
    fn alternation_kills_symmetric_and_is_idempotent() {
        let sym = Tensor::from_fn(4, 4, |i| r((i[0] + i[1]) as i64 * (i[2] * 2 + i[3]) as i64));
        assert!(sym.alternate().tensor().is_zero(0.0));
        let any = Tensor::from_fn(4, 4, |i| r((i[0] * 7 + i[1] * i[2] + 3 * i[3]) as i64 % 5));
        let once = any.alternate();
        let twice = once.tensor().alternate();
        assert_eq!(once, twice);
        assert!(once.tensor().is_antisymmetric(0.0));
    }

    #[test]
    fn wedge_normalization_and_interior() {
        let e1 = AltForm::basis(3, &[0], r(1));
        let e2 = AltForm::basis(3, &[1], r(1));
        let e12 = e1.wedge(&e2);
        assert_eq!(e12.tensor().at2(0, 1), &r(1));
        assert_eq!(e12.tensor().at2(1, 0), &r(-1));
        let e3 = AltForm::basis(3, &[2], r(1));
        let vol = e12.wedge(&e3);
        assert_eq!(vol, AltForm::basis(3, &[0, 1, 2], r(1)));
        let v = Tensor::from_fn(3, 1, |i| if i[0] == 0 { r(1) } else { r(0) });
        assert_eq!(vol.interior(&v).unwrap(), AltForm::basis(3, &[1, 2], r(1)));
    }

    #[test]
    fn four_form_vanishes_in_three_dimensions() {
        let a = Tensor::from_fn(3, 4, |i| r((i[0] * 5 + i[1] * 3 + i[2] * 2 + i[3]) as i64));
        assert!(a.alternate().tensor().is_zero(0.0));
    }

    #[test]
    fn symmetric_parts_sum_back() {
        let a = Tensor::from_fn(3, 2, |i| rat((i[0] * 4 + i[1] * i[1]) as i64, 3));
        let s = a.symmetric_part().unwrap();
        let k = a.antisymmetric_part().unwrap();
        assert_eq!(&s + &k, a);
    }

    #[test]
    fn rank4_symmetry_classes() {
        let form = AltForm::basis(4, &[0, 1, 2, 3], r(2));
        assert!(Rank4::new(form.tensor().clone(), Symmetry::Alt4, 0.0).is_ok());
        let bad = Tensor::from_fn(4, 4, |i| r(i[0] as i64));
        assert!(Rank4::new(bad, Symmetry::Curvature, 0.0).is_err());
    }

    #[test]
    fn permute_moves_slots() {
        let a = Tensor::from_fn(3, 3, |i| r((i[0] * 9 + i[1] * 3 + i[2]) as i64));
        let p = a.permute(&[2, 0, 1]).unwrap();
        assert_eq!(p.at3(0, 1, 2), a.at3(2, 0, 1));
        assert!(a.permute(&[0, 0, 1]).is_err());
    }
}
