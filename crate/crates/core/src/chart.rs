//! Coordinate-chart geometries with component functions from the expression
//! vocabulary. Derivatives are fourth-order central differences; every
//! derived field is differentiated by re-applying the stencil to the field
//! itself, level by level.
//!
//! Everything is computed in coordinate components, evaluated in
//! double-double, and converted to an orthonormal frame (from the Cholesky
//! factor of `g`) only at the evaluation point.

use std::collections::HashMap;
use std::rc::Rc;

use crate::curvature::{ConnectionCoeffs, CurvatureTensor, DerivedTorsionPack, FrameData, PotentialData};
use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::scalar::{rat, Real, Scalar};
use crate::tensor::{index_tuples, AltForm, Dim, Tensor};

type T = Tensor<Dd>;

pub const DEFAULT_H: f64 = 1e-3;

/// Weights of the 5-point first-derivative stencil at offsets −2, −1, 1, 2.
const D1: [(i32, f64); 4] = [(-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0)];

/// Central difference of order 1 or 2 along `dir`, 4th-order accurate.
pub fn fd_derivative<R: Real>(f: impl Fn(&[R]) -> R, point: &[R], dir: usize, order: u8, h: R) -> Result<R> {
    let at = |k: i32| {
        let mut x = point.to_vec();
        x[dir] = x[dir] + R::from_f64(k as f64) * h;
        f(&x)
    };
    match order {
        1 => {
            let s = (at(-2) - at(2)) + R::from_f64(8.0) * (at(1) - at(-1));
            Ok(s / (R::from_f64(12.0) * h))
        }
        2 => {
            let s = -(at(2) + at(-2)) + R::from_f64(16.0) * (at(1) + at(-1)) - R::from_f64(30.0) * at(0);
            Ok(s / (R::from_f64(12.0) * h * h))
        }
        _ => Err(Error::Domain(format!("finite-difference order {order} is not 1 or 2"))),
    }
}

/// One stored torsion component: `T_{ijk}` (0-based, distinct indices) and
/// every permutation implied by antisymmetry.
#[derive(Clone, Debug, PartialEq)]
pub struct TorsionTerm {
    pub idx: [usize; 3],
    pub expr: Expr,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChartGeometry {
    dim: Dim,
    bounds: Vec<(f64, f64)>,
    h: f64,
    grid: Vec<Vec<f64>>,
    g: Vec<Vec<Expr>>,
    t: Vec<TorsionTerm>,
    f: Option<Expr>,
}

impl ChartGeometry {
    pub fn new(
        dim: usize,
        bounds: Vec<(f64, f64)>,
        h: f64,
        grid: Vec<Vec<f64>>,
        g: Vec<Vec<Expr>>,
        t: Vec<TorsionTerm>,
        f: Option<Expr>,
    ) -> Result<Self> {
        let d = Dim::new(dim)?;
        let bad = |m: String| Err(Error::InvalidGeometry(m));
        if bounds.len() != dim || bounds.iter().any(|&(lo, hi)| lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less)) {
            return bad(format!("box must have {dim} intervals with lo < hi"));
        }
        if !(h > 0.0 && h.is_finite()) {
            return bad(format!("step h = {h} must be positive"));
        }
        if g.len() != dim || g.iter().any(|row| row.len() != dim) {
            return bad(format!("metric must be a {dim}x{dim} array of expressions"));
        }
        for (i, row) in g.iter().enumerate() {
            for (j, gij) in row.iter().enumerate().take(i) {
                if gij.source() != g[j][i].source() {
                    return bad(format!("metric entries ({},{}) and ({},{}) differ", i + 1, j + 1, j + 1, i + 1));
                }
            }
        }
        let mut seen = std::collections::HashSet::new();
        for term in &t {
            let [a, b, c] = term.idx;
            if a >= dim || b >= dim || c >= dim || a == b || b == c || a == c {
                return bad(format!("torsion index ({},{},{}) is not a valid 3-form slot", a + 1, b + 1, c + 1));
            }
            let mut key = term.idx;
            key.sort_unstable();
            if !seen.insert(key) {
                return bad(format!(
                    "torsion component ({},{},{}) given more than once",
                    key[0] + 1,
                    key[1] + 1,
                    key[2] + 1
                ));
            }
        }
        let geo = ChartGeometry { dim: d, bounds, h, grid, g, t, f };
        for p in &geo.grid {
            geo.check_point(p)?;
        }
        Ok(geo)
    }

    pub fn dim(&self) -> usize {
        self.dim.get()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn grid(&self) -> &[Vec<f64>] {
        &self.grid
    }

    pub fn metric(&self) -> &[Vec<Expr>] {
        &self.g
    }

    pub fn torsion(&self) -> &[TorsionTerm] {
        &self.t
    }

    pub fn potential(&self) -> Option<&Expr> {
        self.f.as_ref()
    }

    pub fn with_h(&self, h: f64) -> Result<Self> {
        Self::new(self.dim(), self.bounds.clone(), h, self.grid.clone(), self.g.clone(), self.t.clone(), self.f.clone())
    }

    pub fn with_grid(&self, grid: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(self.dim(), self.bounds.clone(), self.h, grid, self.g.clone(), self.t.clone(), self.f.clone())
    }

    pub fn with_torsion(&self, t: Vec<TorsionTerm>) -> Result<Self> {
        Self::new(self.dim(), self.bounds.clone(), self.h, self.grid.clone(), self.g.clone(), t, self.f.clone())
    }

    /// `count` uniform points from `seed`, kept a tenth of each side away
    /// from the boundary.
    pub fn seeded_grid(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                self.bounds
                    .iter()
                    .map(|&(lo, hi)| {
                        let pad = 0.1 * (hi - lo);
                        rng.gen_range(lo + pad..=hi - pad)
                    })
                    .collect()
            })
            .collect()
    }

    /// Sample points must sit at least `4h` inside the box.
    pub fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim() {
            return Err(Error::InvalidGeometry(format!(
                "grid point has {} coordinates, expected {}",
                p.len(),
                self.dim()
            )));
        }
        let margin = 4.0 * self.h;
        for (k, (&x, &(lo, hi))) in p.iter().zip(&self.bounds).enumerate() {
            if x - lo < margin || hi - x < margin {
                return Err(Error::Domain(format!(
                    "coordinate x{} = {x} is closer than 4h = {margin} to the boundary [{lo}, {hi}]",
                    k + 1
                )));
            }
        }
        Ok(())
    }

    pub fn metric_at<R: Real>(&self, x: &[R]) -> Tensor<R> {
        Tensor::from_fn(self.dim(), 2, |i| self.g[i[0]][i[1]].eval(x))
    }

    pub fn torsion_at<R: Real>(&self, x: &[R]) -> Tensor<R> {
        let mut t = Tensor::zeros(self.dim(), 3);
        for term in &self.t {
            let v = term.expr.eval(x);
            for (perm, s) in crate::tensor::permutations(3) {
                let idx = [term.idx[perm[0]], term.idx[perm[1]], term.idx[perm[2]]];
                t.set(&idx, if s > 0 { v } else { -v });
            }
        }
        t
    }

    pub fn potential_at<R: Real>(&self, x: &[R]) -> R {
        self.f.as_ref().map(|e| e.eval(x)).unwrap_or_else(R::zero)
    }

    /// Orthonormal-frame data at one point.
    pub fn point_frame(&self, point: &[f64], with_potential: bool) -> Result<PointFrame> {
        self.check_point(point)?;
        let mut ev = Evaluator::new(self, point);
        ev.frame(with_potential)
    }
}

/// Lower-triangular Cholesky factor `g = L Lᵀ`.
pub fn cholesky<R: Real>(g: &Tensor<R>) -> Result<Tensor<R>> {
    let n = g.dim();
    let mut l = Tensor::zeros(n, 2);
    for j in 0..n {
        let mut d = *g.at2(j, j);
        for k in 0..j {
            d = d - *l.at2(j, k) * *l.at2(j, k);
        }
        // also rejects NaN
        if d.to_f64().partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::Numeric("metric is not positive definite".into()));
        }
        let ljj = d.sqrt();
        l.set(&[j, j], ljj);
        for i in j + 1..n {
            let mut s = *g.at2(i, j);
            for k in 0..j {
                s = s - *l.at2(i, k) * *l.at2(j, k);
            }
            l.set(&[i, j], s / ljj);
        }
    }
    Ok(l)
}

/// `E = L^{-T}`, so the columns `e_a = E^i_a ∂_i` are orthonormal.
pub fn orthonormal_frame<R: Real>(g: &Tensor<R>) -> Result<Tensor<R>> {
    let l = cholesky(g)?;
    let n = g.dim();
    // forward substitution for L^{-1}, then transpose
    let mut linv: Tensor<R> = Tensor::zeros(n, 2);
    for col in 0..n {
        for i in 0..n {
            let mut s = if i == col { R::one() } else { R::zero() };
            for k in 0..i {
                s = s - *l.at2(i, k) * *linv.at2(k, col);
            }
            linv.set(&[i, col], s / *l.at2(i, i));
        }
    }
    Ok(Tensor::from_fn(n, 2, |x| *linv.at2(x[1], x[0])))
}

fn inverse_from_frame(e: &T) -> T {
    // g^{-1} = E Eᵀ
    let n = e.dim();
    Tensor::from_fn(n, 2, |x| {
        let mut acc = Dd::ZERO;
        for a in 0..n {
            acc = acc + *e.at2(x[0], a) * *e.at2(x[1], a);
        }
        acc
    })
}

/// `X_{a b …} = E^i_a E^j_b … X_{i j …}`.
pub fn to_frame<R: Real>(x: &Tensor<R>, e: &Tensor<R>) -> Tensor<R> {
    let n = x.dim();
    let r = x.rank();
    let mut cur = x.clone();
    for slot in 0..r {
        let prev = cur;
        cur = Tensor::from_fn(n, r, |idx| {
            let mut src = idx.to_vec();
            let mut acc = R::zero();
            for i in 0..n {
                src[slot] = i;
                acc = acc + *e.at2(i, idx[slot]) * *prev.get(&src);
            }
            acc
        });
    }
    cur
}

/// `∇_i S_{j…} = ∂_i S_{j…} − Σ_slots Γ^m_{i j_slot} S_{…m…}` with
/// `gamma(i, j, m) = Γ^m_{ij}` and `partial(i, …) = ∂_i S_{…}`.
fn cov_deriv(partial: &T, gamma: &T, s: &T) -> T {
    let n = s.dim();
    let r = s.rank();
    Tensor::from_fn(n, r + 1, |idx| {
        let i = idx[0];
        let rest = &idx[1..];
        let mut acc = *partial.get(idx);
        let mut src = rest.to_vec();
        for slot in 0..r {
            let orig = rest[slot];
            for m in 0..n {
                src[slot] = m;
                acc = acc - *gamma.at3(i, orig, m) * *s.get(&src);
            }
            src[slot] = orig;
        }
        acc
    })
}

/// Contracts slots `p < q` of `x` with `g^{-1}`.
fn metric_trace(x: &T, ginv: &T, p: usize, q: usize) -> T {
    let n = x.dim();
    let r = x.rank();
    Tensor::from_fn(n, r - 2, |free| {
        let mut full = vec![0; r];
        let mut it = free.iter();
        for (k, slot) in full.iter_mut().enumerate() {
            if k != p && k != q {
                *slot = *it.next().unwrap();
            }
        }
        let mut acc = Dd::ZERO;
        for a in 0..n {
            for b in 0..n {
                full[p] = a;
                full[q] = b;
                acc = acc + *ginv.at2(a, b) * *x.get(&full);
            }
        }
        acc
    })
}

fn scalar_of(t: &T) -> Dd {
    t.data()[0]
}

fn sc(v: Dd, n: usize) -> T {
    Tensor::scalar(v, n)
}

/// `Γ^l_{ij}` of the Levi-Civita connection, stored as `(i, j, l)`.
fn christoffel(dg: &T, ginv: &T) -> T {
    let n = dg.dim();
    let half = Dd::from_f64(0.5);
    Tensor::from_fn(n, 3, |x| {
        let (i, j, l) = (x[0], x[1], x[2]);
        let mut acc = Dd::ZERO;
        for m in 0..n {
            acc = acc + *ginv.at2(l, m) * (*dg.at3(i, j, m) + *dg.at3(j, i, m) - *dg.at3(m, i, j));
        }
        acc * half
    })
}

/// Lowered curvature `R_{ijkl} = R^m_{ijk} g_{ml}` from Christoffels and their partials.
fn curvature_coord(gamma: &T, dgamma: &T, g: &T) -> T {
    let n = gamma.dim();
    let up = Tensor::from_fn(n, 4, |x| {
        let (i, j, k, l) = (x[0], x[1], x[2], x[3]);
        let mut acc = *dgamma.at4(i, j, k, l) - *dgamma.at4(j, i, k, l);
        for m in 0..n {
            acc = acc + *gamma.at3(j, k, m) * *gamma.at3(i, m, l) - *gamma.at3(i, k, m) * *gamma.at3(j, m, l);
        }
        acc
    });
    Tensor::from_fn(n, 4, |x| {
        let mut acc = Dd::ZERO;
        for m in 0..n {
            acc = acc + *up.at4(x[0], x[1], x[2], m) * *g.at2(m, x[3]);
        }
        acc
    })
}

/// Ricci `Ric_{jk} = g^{il} R_{ijkl}` and its trace.
fn ricci_coord(r: &T, ginv: &T) -> (T, Dd) {
    let ric = metric_trace(r, ginv, 0, 3);
    let scal = scalar_of(&metric_trace(&ric, ginv, 0, 1));
    (ric, scal)
}

trait Level {
    fn fields(&self) -> Vec<&T>;
}

struct L0 {
    g: T,
    ginv: T,
    e: T,
    t: T,
    f: T,
    norm_t2: T,
    t2: T,
}

impl Level for L0 {
    fn fields(&self) -> Vec<&T> {
        vec![&self.g, &self.e, &self.t, &self.f, &self.norm_t2, &self.t2]
    }
}

struct L1 {
    gamma: T,
    gamma_lc: T,
    de: T,
    nabla_t: T,
    nabla_g_t: T,
    dt: T,
    delta_t: T,
    df: T,
    norm_df2: T,
    d_norm_t2: T,
    div_t2: T,
    div_t2_lc: T,
}

impl Level for L1 {
    fn fields(&self) -> Vec<&T> {
        vec![&self.gamma, &self.gamma_lc, &self.delta_t, &self.df, &self.norm_df2]
    }
}

struct L2 {
    r: T,
    ric: T,
    scal: T,
    ric_g: T,
    scal_g: T,
    div_delta_t: T,
    hess: T,
    hess_lc: T,
    lap: T,
    d_norm_df2: T,
    phi_minus: T,
    phi_plus: T,
    psi_minus: T,
    psi_twelfth: T,
}

impl Level for L2 {
    fn fields(&self) -> Vec<&T> {
        vec![
            &self.ric,
            &self.scal,
            &self.scal_g,
            &self.hess,
            &self.lap,
            &self.phi_minus,
            &self.phi_plus,
            &self.psi_minus,
            &self.psi_twelfth,
        ]
    }
}

struct L3 {
    d_scal: T,
    div_ric: T,
    div_ric_first: T,
    nabla3_iij: T,
    nabla3_iji: T,
    d_lap: T,
    d_lap_plus: T,
    d_scal_g: T,
    d_scal_g_minus: T,
    d_phi_minus: T,
    d_psi_minus: T,
}

impl Level for L3 {
    fn fields(&self) -> Vec<&T> {
        vec![&self.d_phi_minus, &self.d_psi_minus]
    }
}

type Off = Vec<i32>;

struct Evaluator<'a> {
    geo: &'a ChartGeometry,
    n: usize,
    base: Vec<Dd>,
    h: Dd,
    l0: HashMap<Off, Rc<L0>>,
    l1: HashMap<Off, Rc<L1>>,
    l2: HashMap<Off, Rc<L2>>,
    l3: HashMap<Off, Rc<L3>>,
}

/// Orthonormal frame at a point and all frame quantities there.
#[derive(Clone, Debug)]
pub struct PointFrame {
    pub point: Vec<f64>,
    /// `E^i_a`: coordinate components of the frame vectors (columns).
    pub e: Tensor<f64>,
    pub data: FrameData<Dd>,
    /// `‖T‖²` contracted with the coordinate metric, for the isometry check.
    pub norm_t2_coord: Dd,
    /// `E^T g E − I`, largest entry.
    pub frame_defect: f64,
}

impl<'a> Evaluator<'a> {
    fn new(geo: &'a ChartGeometry, point: &[f64]) -> Self {
        Evaluator {
            geo,
            n: geo.dim(),
            base: point.iter().map(|&x| Dd::from_f64(x)).collect(),
            h: Dd::from_f64(geo.h),
            l0: HashMap::new(),
            l1: HashMap::new(),
            l2: HashMap::new(),
            l3: HashMap::new(),
        }
    }

    fn shifted(o: &Off, axis: usize, step: i32) -> Off {
        let mut p = o.clone();
        p[axis] += step;
        p
    }

    /// `∂_i` of every field of a level, as tensors with the derivative index first.
    fn partials<L: Level>(&mut self, o: &Off, get: fn(&mut Self, &Off) -> Result<Rc<L>>) -> Result<Vec<T>> {
        let n = self.n;
        let mut out: Vec<Vec<Vec<Dd>>> = Vec::new();
        let denom = Dd::from_f64(12.0) * self.h;
        for axis in 0..n {
            let mut acc: Vec<Vec<Dd>> = Vec::new();
            for &(step, w) in &D1 {
                let lv = get(self, &Self::shifted(o, axis, step))?;
                let fs = lv.fields();
                if acc.is_empty() {
                    acc = fs.iter().map(|t| vec![Dd::ZERO; t.data().len()]).collect();
                }
                for (a, t) in acc.iter_mut().zip(fs) {
                    for (x, v) in a.iter_mut().zip(t.data()) {
                        *x = *x + v.mul_f64(w);
                    }
                }
            }
            for a in acc.iter_mut() {
                for x in a.iter_mut() {
                    *x = *x / denom;
                }
            }
            out.push(acc);
        }
        let nf = out[0].len();
        let mut res = Vec::with_capacity(nf);
        for k in 0..nf {
            let len = out[0][k].len();
            let rank = (0..=4).find(|&r| n.pow(r as u32) == len).unwrap_or(0);
            let mut data = Vec::with_capacity(len * n);
            for axis_vals in &out {
                data.extend_from_slice(&axis_vals[k]);
            }
            res.push(Tensor::from_vec(n, rank + 1, data)?);
        }
        Ok(res)
    }

    fn point(&self, o: &Off) -> Vec<Dd> {
        self.base.iter().zip(o).map(|(&x, &k)| x + Dd::from_f64(k as f64) * self.h).collect()
    }

    fn l0(&mut self, o: &Off) -> Result<Rc<L0>> {
        if let Some(v) = self.l0.get(o) {
            return Ok(v.clone());
        }
        let n = self.n;
        let x = self.point(o);
        let g = self.geo.metric_at(&x);
        let e = orthonormal_frame(&g)?;
        let ginv = inverse_from_frame(&e);
        let t = self.geo.torsion_at(&x);
        let f = sc(self.geo.potential_at(&x), n);
        // T^{abc} with all indices raised, then T²_{ij} = T_{iab} T_j^{ab}
        let t_up2 = Tensor::from_fn(n, 3, |x| {
            let mut acc = Dd::ZERO;
            for b in 0..n {
                for c in 0..n {
                    acc = acc + *ginv.at2(x[1], b) * *ginv.at2(x[2], c) * *t.at3(x[0], b, c);
                }
            }
            acc
        });
        let t2 = Tensor::from_fn(n, 2, |x| {
            let mut acc = Dd::ZERO;
            for a in 0..n {
                for b in 0..n {
                    acc = acc + *t.at3(x[0], a, b) * *t_up2.at3(x[1], a, b);
                }
            }
            acc
        });
        let norm_t2 = metric_trace(&t2, &ginv, 0, 1);
        let lv = Rc::new(L0 { g, ginv, e, t, f, norm_t2, t2 });
        self.l0.insert(o.clone(), lv.clone());
        Ok(lv)
    }

    fn l1(&mut self, o: &Off) -> Result<Rc<L1>> {
        if let Some(v) = self.l1.get(o) {
            return Ok(v.clone());
        }
        let n = self.n;
        let here = self.l0(o)?;
        let d = self.partials(o, Self::l0)?;
        let (dg, de, dt_part, df, d_norm_t2, dt2) = (&d[0], &d[1], &d[2], &d[3], &d[4], &d[5]);
        let gamma_lc = christoffel(dg, &here.ginv);
        // ∇ = ∇^g + ½T: Γ^l_{ij} += ½ g^{lm} T_{ijm}
        let half = Dd::from_f64(0.5);
        let gamma = Tensor::from_fn(n, 3, |x| {
            let mut acc = Dd::ZERO;
            for m in 0..n {
                acc = acc + *here.ginv.at2(x[2], m) * *here.t.at3(x[0], x[1], m);
            }
            *gamma_lc.get(x) + acc * half
        });
        let nabla_t = cov_deriv(dt_part, &gamma, &here.t);
        let nabla_g_t = cov_deriv(dt_part, &gamma_lc, &here.t);
        let dt = Tensor::from_fn(n, 4, |x| {
            let (i, j, k, l) = (x[0], x[1], x[2], x[3]);
            *dt_part.at4(i, j, k, l) - *dt_part.at4(j, i, k, l) + *dt_part.at4(k, i, j, l) - *dt_part.at4(l, i, j, k)
        });
        let delta_t = metric_trace(&nabla_g_t, &here.ginv, 0, 1).scale(&Dd::from_f64(-1.0));
        let dfv = Tensor::from_vec(n, 1, df.data().to_vec())?;
        let norm_df2 = sc(
            scalar_of(&metric_trace(&Tensor::from_fn(n, 2, |x| *dfv.at1(x[0]) * *dfv.at1(x[1])), &here.ginv, 0, 1)),
            n,
        );
        let div_t2 = metric_trace(&cov_deriv(dt2, &gamma, &here.t2), &here.ginv, 0, 1);
        let div_t2_lc = metric_trace(&cov_deriv(dt2, &gamma_lc, &here.t2), &here.ginv, 0, 1);
        let lv = Rc::new(L1 {
            gamma,
            gamma_lc,
            de: de.clone(),
            nabla_t,
            nabla_g_t,
            dt,
            delta_t,
            df: dfv,
            norm_df2,
            d_norm_t2: d_norm_t2.clone(),
            div_t2,
            div_t2_lc,
        });
        self.l1.insert(o.clone(), lv.clone());
        Ok(lv)
    }

    fn l2(&mut self, o: &Off) -> Result<Rc<L2>> {
        if let Some(v) = self.l2.get(o) {
            return Ok(v.clone());
        }
        let n = self.n;
        let z = self.l0(o)?;
        let one = self.l1(o)?;
        let d = self.partials(o, Self::l1)?;
        let (dgamma, dgamma_lc, d_delta_t, d_df, d_norm_df2) = (&d[0], &d[1], &d[2], &d[3], &d[4]);
        let r = curvature_coord(&one.gamma, dgamma, &z.g);
        let (ric, scal) = ricci_coord(&r, &z.ginv);
        let rg = curvature_coord(&one.gamma_lc, dgamma_lc, &z.g);
        let (ric_g, scal_g) = ricci_coord(&rg, &z.ginv);
        let div_delta_t = metric_trace(&cov_deriv(d_delta_t, &one.gamma, &one.delta_t), &z.ginv, 0, 1);
        let hess = cov_deriv(d_df, &one.gamma, &one.df);
        let hess_lc = cov_deriv(d_df, &one.gamma_lc, &one.df);
        let lap = -scalar_of(&metric_trace(&hess_lc, &z.ginv, 0, 1));
        let nt = scalar_of(&z.norm_t2);
        let sixth = Dd::ONE / Dd::from_f64(6.0);
        let twelfth = Dd::ONE / Dd::from_f64(12.0);
        let lv = Rc::new(L2 {
            r,
            ric,
            scal: sc(scal, n),
            ric_g,
            scal_g: sc(scal_g, n),
            div_delta_t,
            hess,
            hess_lc,
            lap: sc(lap, n),
            d_norm_df2: d_norm_df2.clone(),
            phi_minus: sc(lap - nt * sixth, n),
            phi_plus: sc(lap + nt * sixth, n),
            psi_minus: sc(scal_g - Dd::from_f64(5.0) * nt * twelfth, n),
            psi_twelfth: sc(scal_g - nt * twelfth, n),
        });
        self.l2.insert(o.clone(), lv.clone());
        Ok(lv)
    }

    fn l3(&mut self, o: &Off) -> Result<Rc<L3>> {
        if let Some(v) = self.l3.get(o) {
            return Ok(v.clone());
        }
        let z = self.l0(o)?;
        let one = self.l1(o)?;
        let two = self.l2(o)?;
        let d = self.partials(o, Self::l2)?;
        let nabla_ric = cov_deriv(&d[0], &one.gamma, &two.ric);
        let nabla_hess = cov_deriv(&d[3], &one.gamma, &two.hess);
        let lv = Rc::new(L3 {
            d_scal: d[1].clone(),
            div_ric: metric_trace(&nabla_ric, &z.ginv, 0, 2),
            div_ric_first: metric_trace(&nabla_ric, &z.ginv, 0, 1),
            nabla3_iij: metric_trace(&nabla_hess, &z.ginv, 0, 1),
            nabla3_iji: metric_trace(&nabla_hess, &z.ginv, 0, 2),
            d_lap: d[4].clone(),
            d_lap_plus: d[6].clone(),
            d_scal_g: d[2].clone(),
            d_scal_g_minus: d[8].clone(),
            d_phi_minus: d[5].clone(),
            d_psi_minus: d[7].clone(),
        });
        self.l3.insert(o.clone(), lv.clone());
        Ok(lv)
    }

    /// `Δφ = −g^{ij}(∂_i∂_jφ − Γ^m_{ij}∂_mφ)` for the two scalars carried at level 3.
    fn laplacians(&mut self, o: &Off) -> Result<(Dd, Dd)> {
        let z = self.l0(o)?;
        let one = self.l1(o)?;
        let three = self.l3(o)?;
        let d = self.partials(o, Self::l3)?;
        let lap = |dd: &T, dphi: &T| {
            let hess = cov_deriv(dd, &one.gamma_lc, dphi);
            -scalar_of(&metric_trace(&hess, &z.ginv, 0, 1))
        };
        Ok((lap(&d[0], &three.d_phi_minus), lap(&d[1], &three.d_psi_minus)))
    }

    fn frame(&mut self, with_potential: bool) -> Result<PointFrame> {
        let n = self.n;
        let o: Off = vec![0; n];
        let z = self.l0(&o)?;
        let one = self.l1(&o)?;
        let two = self.l2(&o)?;
        let three = self.l3(&o)?;
        let e = &z.e;
        let fr = |x: &T| to_frame(x, e);

        // Γ_frame_{abc} = E^i_a E^k_c g_{km}(∂_i E^m_b + E^j_b Γ^m_{ij})
        let frame_conn = |gamma: &T| {
            Tensor::from_fn(n, 3, |x| {
                let (a, b, c) = (x[0], x[1], x[2]);
                let mut acc = Dd::ZERO;
                for i in 0..n {
                    for m in 0..n {
                        let mut v = *one.de.at3(i, m, b);
                        for j in 0..n {
                            v = v + *e.at2(j, b) * *gamma.at3(i, j, m);
                        }
                        let mut w = Dd::ZERO;
                        for k in 0..n {
                            w = w + *e.at2(k, c) * *z.g.at2(k, m);
                        }
                        acc = acc + *e.at2(i, a) * w * v;
                    }
                }
                acc
            })
        };
        let bracket = Tensor::from_fn(n, 3, |x| {
            let (a, b, c) = (x[0], x[1], x[2]);
            let mut acc = Dd::ZERO;
            for m in 0..n {
                let mut v = Dd::ZERO;
                for i in 0..n {
                    v = v + *e.at2(i, a) * *one.de.at3(i, m, b) - *e.at2(i, b) * *one.de.at3(i, m, a);
                }
                let mut w = Dd::ZERO;
                for k in 0..n {
                    w = w + *z.g.at2(m, k) * *e.at2(k, c);
                }
                acc = acc + v * w;
            }
            acc
        });
        let connection = ConnectionCoeffs::new(frame_conn(&one.gamma), bracket.clone(), rat(1, 1));
        let lc = ConnectionCoeffs::new(frame_conn(&one.gamma_lc), bracket, rat(0, 1));

        let pack = DerivedTorsionPack::assemble(fr(&z.t), fr(&one.dt), fr(&one.nabla_t), fr(&one.nabla_g_t));
        let potential = if with_potential {
            let (lap_phi, lap_psi) = self.laplacians(&o)?;
            Some(PotentialData {
                f: scalar_of(&z.f),
                df: fr(&one.df),
                hess: fr(&two.hess),
                hess_lc: fr(&two.hess_lc),
                lap: scalar_of(&two.lap),
                d_lap: fr(&three.d_lap),
                nabla3_iij: fr(&three.nabla3_iij),
                nabla3_iji: fr(&three.nabla3_iji),
                d_norm_df2: fr(&two.d_norm_df2),
                lap_lap_minus: lap_phi,
                d_lap_plus: fr(&three.d_lap_plus),
                lap_scal_g_minus: lap_psi,
                d_scal_g_minus: fr(&three.d_scal_g_minus),
                d_scal_g: fr(&three.d_scal_g),
            })
        } else {
            None
        };
        let data = FrameData {
            connection,
            lc,
            curvature: CurvatureTensor::from_components(fr(&two.r)),
            ric_g: fr(&two.ric_g),
            scal_g: scalar_of(&two.scal_g),
            pack,
            d_scal: fr(&three.d_scal),
            div_ric: fr(&three.div_ric),
            div_ric_first: fr(&three.div_ric_first),
            d_norm_t2: fr(&one.d_norm_t2),
            div_t2_lc: fr(&one.div_t2_lc),
            div_t2: fr(&one.div_t2),
            div_delta_t: fr(&two.div_delta_t),
            potential,
        };
        let ege = to_frame(&z.g, e);
        let frame_defect = (&ege - &Tensor::identity(n)).max_abs().0.to_f64();
        Ok(PointFrame {
            point: self.base.iter().map(|x| x.to_f64()).collect(),
            e: e.convert(|x| x.to_f64()),
            data,
            norm_t2_coord: scalar_of(&z.norm_t2),
            frame_defect,
        })
    }
}

/// Levi-Civita connection in the orthonormal frame at `point`.
pub fn chart_lc_connection(geo: &ChartGeometry, point: &[f64]) -> Result<ConnectionCoeffs<f64>> {
    let pf = geo.point_frame(point, false)?;
    let c = &pf.data.lc;
    Ok(ConnectionCoeffs::new(c.gamma().convert(|x| x.to_f64()), c.bracket().convert(|x| x.to_f64()), rat(0, 1)))
}

pub fn chart_dt(geo: &ChartGeometry, point: &[f64]) -> Result<AltForm<f64>> {
    let pf = geo.point_frame(point, false)?;
    Ok(AltForm::from_tensor_unchecked(pf.data.pack.dt.tensor().convert(|x| x.to_f64())))
}

pub fn chart_delta_t(geo: &ChartGeometry, point: &[f64]) -> Result<AltForm<f64>> {
    let pf = geo.point_frame(point, false)?;
    Ok(AltForm::from_tensor_unchecked(pf.data.pack.delta_t.tensor().convert(|x| x.to_f64())))
}

pub fn chart_nabla_t(geo: &ChartGeometry, point: &[f64]) -> Result<Tensor<f64>> {
    let pf = geo.point_frame(point, false)?;
    Ok(pf.data.pack.nabla_t.convert(|x| x.to_f64()))
}

/// Coordinate-index form of every torsion component, for callers that need
/// to iterate over orbit representatives.
pub fn torsion_representatives(dim: usize) -> impl Iterator<Item = Vec<usize>> {
    index_tuples(dim, 3).filter(|i| i[0] < i[1] && i[1] < i[2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::permutation_sign;

    fn flat(n: usize, t: Vec<TorsionTerm>, f: Option<&str>, grid: Vec<Vec<f64>>) -> ChartGeometry {
        let g =
            (0..n).map(|i| (0..n).map(|j| Expr::parse(if i == j { "1" } else { "0" }, n).unwrap()).collect()).collect();
        ChartGeometry::new(n, vec![(-1.0, 1.0); n], DEFAULT_H, grid, g, t, f.map(|s| Expr::parse(s, n).unwrap()))
            .unwrap()
    }

    fn term(idx: [usize; 3], src: &str, n: usize) -> TorsionTerm {
        TorsionTerm { idx, expr: Expr::parse(src, n).unwrap() }
    }

    #[test]
    fn stencils_on_known_functions() {
        let h = 1e-3;
        let c = fd_derivative(|_: &[f64]| 3.0, &[0.2], 0, 1, h).unwrap();
        assert_eq!(c, 0.0);
        let sq = fd_derivative(|x: &[f64]| x[0] * x[0], &[2.0], 0, 1, h).unwrap();
        assert!((sq - 4.0).abs() < 1e-10);
        let s = fd_derivative(|x: &[f64]| x[0].sin(), &[0.0], 0, 1, h).unwrap();
        // Taylor remainder h⁴/30 · max|f⁽⁵⁾|
        assert!((s - 1.0).abs() <= h.powi(4) / 30.0 + 1e-13);
        let s2 = fd_derivative(|x: &[Dd]| x[0].sin(), &[Dd::from_f64(0.5)], 0, 2, Dd::from_f64(h)).unwrap();
        assert!((s2.to_f64() + 0.5f64.sin()).abs() < 1e-12);
        assert!(fd_derivative(|x: &[f64]| x[0], &[0.0], 0, 3, h).is_err());
    }

    #[test]
    fn boundary_proximity_rejected() {
        let g = flat(3, vec![], None, vec![vec![0.0; 3]]);
        assert!(matches!(g.check_point(&[0.999, 0.0, 0.0]), Err(Error::Domain(_))));
        assert!(g.with_grid(vec![vec![-0.9999, 0.0, 0.0]]).is_err());
    }

    #[test]
    fn cholesky_frame_is_orthonormal() {
        let g = Tensor::from_vec(3, 2, vec![4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]).unwrap();
        let e = orthonormal_frame(&g).unwrap();
        let id = to_frame(&g, &e);
        assert!((&id - &Tensor::identity(3)).max_abs().0 < 1e-14);
        let bad = Tensor::from_vec(2, 2, vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        assert!(matches!(orthonormal_frame(&bad), Err(Error::Numeric(_))));
    }

    #[test]
    fn flat_constant_torsion_is_parallel() {
        let geo = flat(3, vec![term([0, 1, 2], "2", 3)], None, vec![vec![0.1, 0.2, 0.3]]);
        let pf = geo.point_frame(&geo.grid()[0], false).unwrap();
        let p = &pf.data.pack;
        assert!(p.dt.tensor().max_abs().0.to_f64() < 1e-20);
        assert!(p.delta_t.tensor().max_abs().0.to_f64() < 1e-20);
        assert!(p.nabla_g_t.max_abs().0.to_f64() < 1e-20);
        assert!(pf.data.lc.gamma().max_abs().0.to_f64() < 1e-20);
        assert_eq!(pf.frame_defect, 0.0);
    }

    #[test]
    fn conformal_christoffel_closed_form() {
        // g = e^{2u} δ with u = ε x1: Γ^1_{11} = ε
        let eps = 0.3;
        let n = 3;
        let g = (0..n)
            .map(|i| (0..n).map(|j| Expr::parse(if i == j { "exp(0.6*x1)" } else { "0" }, n).unwrap()).collect())
            .collect();
        let geo =
            ChartGeometry::new(n, vec![(-1.0, 1.0); n], DEFAULT_H, vec![vec![0.1, 0.0, 0.2]], g, vec![], None).unwrap();
        let mut ev = Evaluator::new(&geo, &geo.grid()[0]);
        let one = ev.l1(&vec![0; n]).unwrap();
        assert!((one.gamma_lc.at3(0, 0, 0).to_f64() - eps).abs() < 1e-9);
        // Γ^1_{22} = −ε, Γ^2_{12} = ε
        assert!((one.gamma_lc.at3(1, 1, 0).to_f64() + eps).abs() < 1e-9);
        assert!((one.gamma_lc.at3(0, 1, 1).to_f64() - eps).abs() < 1e-9);
        let c = chart_lc_connection(&geo, &geo.grid()[0]).unwrap();
        assert!(c.metricity_defect().max_abs().0 < 1e-12);
        assert!(c.torsion_defect(&Tensor::zeros(n, 3)).max_abs().0 < 1e-9);
    }

    #[test]
    fn phi_e123_hand_expanded() {
        // flat R⁴, T = φ e¹²³ with φ = sin(x1) + x4² + x2 x3
        let n = 4;
        let geo = flat(n, vec![term([0, 1, 2], "sin(x1) + x4^2 + x2*x3", n)], None, vec![vec![0.3, -0.2, 0.1, 0.4]]);
        let x = &geo.grid()[0];
        let d1 = x[0].cos();
        let d4 = 2.0 * x[3];
        let d2 = x[2];
        let d3 = x[1];
        let dt = chart_dt(&geo, x).unwrap();
        assert!((dt.tensor().at4(3, 0, 1, 2) - d4).abs() < 1e-8);
        let delta = chart_delta_t(&geo, x).unwrap();
        // δT_{jk} = −∂_a T_{ajk}: δT_23 = −∂1φ, δT_13 = ∂2φ, δT_12 = −∂3φ
        assert!((delta.tensor().at2(1, 2) + d1).abs() < 1e-8);
        assert!((delta.tensor().at2(0, 2) - d2).abs() < 1e-8);
        assert!((delta.tensor().at2(0, 1) + d3).abs() < 1e-8);
        let pf = geo.point_frame(x, false).unwrap();
        // θ_1 = 2 δT_23 T_123 and θ_2 = 2 δT_13 T_213
        let phi = x[0].sin() + x[3] * x[3] + x[1] * x[2];
        let th = pf.data.pack.theta.convert(|v| v.to_f64());
        assert!((th.at1(0) - (-2.0 * d1 * phi)).abs() < 1e-8);
        assert!((th.at1(1) - (-2.0 * d2 * phi)).abs() < 1e-8);
        // ∇^g = ∂ on a flat chart
        let nt = chart_nabla_t(&geo, x).unwrap();
        let _ = nt;
        assert!((pf.norm_t2_coord.to_f64() - pf.data.pack.norm_t2.to_f64()).abs() < 1e-10);
        assert!((pf.data.pack.norm_t2.to_f64() - 6.0 * phi * phi).abs() < 1e-12);
    }

    /// Flat Hodge star: `(∗α)_{J} = (1/p!) α_{I} ε_{I J}`.
    fn star(alpha: &Tensor<f64>) -> Tensor<f64> {
        let n = alpha.dim();
        let p = alpha.rank();
        let fact: f64 = (1..=p).map(|k| k as f64).product();
        Tensor::from_fn(n, n - p, |j| {
            let mut acc = 0.0;
            for i in index_tuples(n, p) {
                let mut all = i.clone();
                all.extend_from_slice(j);
                acc += alpha.get(&i) * permutation_sign(&all) as f64;
            }
            acc / fact
        })
    }

    #[test]
    fn hodge_codifferential_cross_check() {
        // δ = (−1)^{np+n+1} ∗d∗ with n = 4, p = 3, so δT = −∗d∗T
        let n = 4;
        let geo = flat(
            n,
            vec![term([0, 1, 2], "x1*x2 + exp(x3)", n), term([0, 1, 3], "sin(x2)*x4", n)],
            None,
            vec![vec![0.2, 0.3, -0.1, 0.05]],
        );
        let x = geo.grid()[0].clone();
        let star_t = |y: &[f64]| star(&geo.torsion_at(y));
        // (dβ)_{i0 i1} = ∂_{i0} β_{i1} − ∂_{i1} β_{i0} for the 1-form β = ∗T
        let d_star = Tensor::from_fn(n, 2, |ij| {
            let comp = |a: usize, b: usize| fd_derivative(|y: &[f64]| *star_t(y).at1(b), &x, a, 1, 1e-3).unwrap();
            comp(ij[0], ij[1]) - comp(ij[1], ij[0])
        });
        let oracle = star(&d_star).scale(&-1.0);
        let delta = chart_delta_t(&geo, &x).unwrap();
        for j in 0..n {
            for k in 0..n {
                assert!((delta.tensor().at2(j, k) - oracle.at2(j, k)).abs() < 1e-8, "{j}{k}");
            }
        }
        assert!(oracle.max_abs().0 > 0.1);
    }

    #[test]
    fn torsion_expansion_signs() {
        let geo = flat(3, vec![term([1, 0, 2], "5", 3)], None, vec![]);
        let t: Tensor<f64> = geo.torsion_at(&[0.0, 0.0, 0.0]);
        assert_eq!(*t.at3(1, 0, 2), 5.0);
        assert_eq!(*t.at3(0, 1, 2), -5.0);
        assert_eq!(*t.at3(2, 1, 0), 5.0);
        assert!(t.is_antisymmetric(0.0));
    }

    #[test]
    fn duplicate_or_bad_torsion_rejected() {
        let base = flat(3, vec![], None, vec![]);
        assert!(base.with_torsion(vec![term([0, 1, 2], "1", 3), term([2, 1, 0], "1", 3)]).is_err());
        assert!(base.with_torsion(vec![term([0, 0, 2], "1", 3)]).is_err());
        assert!(base.with_torsion(vec![term([0, 1, 5], "1", 3)]).is_err());
    }
}
