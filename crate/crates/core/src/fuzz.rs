//! Seeded random search for counterexamples to the universal identities,
//! in exact arithmetic on random left-invariant geometries.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::classify::{classify_first_bianchi, classify_pair_symmetry, classify_zz_flat, side_conditions};
use crate::curvature::lie_frame_data;
use crate::error::{Error, Result};
use crate::geometry::{Geometry, GeometryJson};
use crate::identities::{evaluate_identity, EvalOptions, IdentityId, Mutation, Sample};
use crate::lie::{random_orthogonal, LieGeometry, StructureConstants};
use crate::scalar::{rat, Rational};
use crate::tensor::AltForm;

/// Identities that must vanish identically on every instance.
pub const FUZZ_IDENTITIES: [IdentityId; 15] = [
    IdentityId::Sigt,
    IdentityId::E13,
    IdentityId::E12,
    IdentityId::Ein5,
    IdentityId::Gen,
    IdentityId::Dh,
    IdentityId::Rics1,
    IdentityId::Rics2,
    IdentityId::Rics3,
    IdentityId::FirstBianchiT,
    IdentityId::Bi1v,
    IdentityId::Ein10,
    IdentityId::E1,
    IdentityId::TwoBi,
    IdentityId::Gein2,
];

#[derive(Clone, Debug)]
pub struct FuzzConfig {
    pub seed: u64,
    pub count: usize,
    pub dims: Vec<usize>,
    pub mutation: Mutation,
}

/// Algebra underlying a random instance, before rotation and rescaling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Abelian,
    /// `n_3 ⊕ ℝ^{n−3}` (Heisenberg plus a flat factor).
    Upper3,
    /// Strictly upper-triangular 4×4 matrices, plus a flat factor.
    Upper4,
    Su2,
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub index: usize,
    pub family: Family,
    pub geometry: LieGeometry,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Counterexample {
    pub index: usize,
    pub family: Family,
    pub check: String,
    pub residual: String,
    pub witness: String,
    pub geometry: GeometryJson,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityTally {
    pub id: String,
    pub evaluated: usize,
    /// Largest exact residual seen.
    pub max_residual: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FuzzReport {
    pub seed: u64,
    pub count: usize,
    pub dims: Vec<usize>,
    pub instances_by_family: Vec<(Family, usize)>,
    pub identities: Vec<IdentityTally>,
    /// Instances whose pair-symmetry triple was all true / all false.
    pub pair_symmetry_true: usize,
    pub pair_symmetry_false: usize,
    pub zz_true: usize,
    pub rb_true: usize,
    pub failures: Vec<Counterexample>,
    pub passed: bool,
}

fn random_torsion(n: usize, rng: &mut ChaCha8Rng) -> AltForm<Rational> {
    let mut t = AltForm::zero(n, 3);
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                if rng.gen_bool(0.5) {
                    t.add_basis(&[a, b, c], rat(rng.gen_range(-3..=3), rng.gen_range(1..=3)));
                }
            }
        }
    }
    t
}

fn pad(c: StructureConstants, n: usize) -> StructureConstants {
    if c.dim() < n {
        c.direct_sum(&StructureConstants::abelian(n - c.dim()))
    } else {
        c
    }
}

/// Generates the instances for `cfg` deterministically from the seed.
pub fn instances(cfg: &FuzzConfig) -> Result<Vec<Instance>> {
    if cfg.dims.is_empty() && cfg.count > 0 {
        return Err(Error::Domain("fuzz needs at least one dimension".into()));
    }
    if let Some(&n) = cfg.dims.iter().find(|&&n| !(3..=7).contains(&n)) {
        return Err(Error::Domain(format!("fuzz dimensions must lie in 3..=7, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let scales = [rat(1, 1), rat(2, 1), rat(1, 2), rat(3, 2)];
    let mut out = Vec::with_capacity(cfg.count);
    for index in 0..cfg.count {
        let n = cfg.dims[index % cfg.dims.len()];
        let mut families = vec![Family::Abelian, Family::Upper3, Family::Su2];
        if n >= 6 {
            families.push(Family::Upper4);
        }
        let family = families[rng.gen_range(0..families.len())];
        let base = match family {
            Family::Abelian => StructureConstants::abelian(n),
            Family::Upper3 => pad(StructureConstants::strictly_upper(3), n),
            Family::Upper4 => pad(StructureConstants::strictly_upper(4), n),
            Family::Su2 => pad(StructureConstants::su2(&rat(rng.gen_range(1..=2), 1)), n),
        };
        let s: Vec<Rational> = (0..n).map(|_| scales[rng.gen_range(0..scales.len())].clone()).collect();
        let q = random_orthogonal(n, 3, &mut rng);
        let c = base.rescale(&s).rotate(&q);
        let t = random_torsion(n, &mut rng);
        out.push(Instance { index, family, geometry: LieGeometry::new(c, t, rat(0, 1))? });
    }
    Ok(out)
}

struct Outcome {
    residuals: Vec<Rational>,
    pair: Option<bool>,
    zz: bool,
    rb: bool,
    failures: Vec<Counterexample>,
}

fn run_instance(inst: &Instance, opts: &EvalOptions) -> Result<Outcome> {
    let samples = vec![Sample { point: None, data: lie_frame_data::<Rational>(&inst.geometry) }];
    let json = || Geometry::Lie(inst.geometry.clone()).to_json();
    let fail = |check: &str, residual: String, witness: String| Counterexample {
        index: inst.index,
        family: inst.family,
        check: check.to_string(),
        residual,
        witness,
        geometry: json(),
    };
    let mut failures = Vec::new();
    let mut residuals = Vec::with_capacity(FUZZ_IDENTITIES.len());
    for id in FUZZ_IDENTITIES {
        let r = evaluate_identity(id, &samples, opts)?;
        let exact: Rational =
            r.exact_residual.as_deref().map(|s| s.parse().expect("exact residual parses")).unwrap_or_else(|| rat(0, 1));
        if !r.verdict {
            failures.push(fail(id.name(), r.exact_residual.clone().unwrap_or_default(), r.witness_component.clone()));
        }
        residuals.push(exact);
    }
    let pair = match classify_pair_symmetry(&samples, opts) {
        Ok(p) => {
            for i in p.implications.iter().filter(|i| i.violated) {
                failures.push(fail(&i.name, String::new(), String::new()));
            }
            Some(p.pair_symmetric)
        }
        Err(e) => {
            failures.push(fail("PAIR_SYM triple", String::new(), e.to_string()));
            None
        }
    };
    let zz = match classify_zz_flat(&samples, opts) {
        Ok(z) => z.holds,
        Err(e) => {
            failures.push(fail("ZZ ⇒ flat", String::new(), e.to_string()));
            false
        }
    };
    let fb = classify_first_bianchi(&samples, opts)?;
    let side = side_conditions(&samples, opts)?;
    let implications =
        fb.implications.iter().chain([&side.parallel, &side.rb2_biii[0], &side.rb2_biii[1], &side.pair_ricci_flat]);
    for i in implications.filter(|i| i.violated) {
        failures.push(fail(&i.name, String::new(), String::new()));
    }
    Ok(Outcome { residuals, pair, zz, rb: fb.holds, failures })
}

/// Runs the exact-mode fuzz campaign.
pub fn fuzz_algebraic(cfg: &FuzzConfig) -> Result<FuzzReport> {
    let insts = instances(cfg)?;
    let opts = EvalOptions { tol: 0.0, mutation: cfg.mutation };
    let outcomes = insts.par_iter().map(|i| run_instance(i, &opts)).collect::<Result<Vec<_>>>()?;

    let mut max: Vec<Rational> = vec![rat(0, 1); FUZZ_IDENTITIES.len()];
    let mut report = FuzzReport {
        seed: cfg.seed,
        count: cfg.count,
        dims: cfg.dims.clone(),
        instances_by_family: Vec::new(),
        identities: Vec::new(),
        pair_symmetry_true: 0,
        pair_symmetry_false: 0,
        zz_true: 0,
        rb_true: 0,
        failures: Vec::new(),
        passed: true,
    };
    for fam in [Family::Abelian, Family::Upper3, Family::Upper4, Family::Su2] {
        let k = insts.iter().filter(|i| i.family == fam).count();
        if k > 0 {
            report.instances_by_family.push((fam, k));
        }
    }
    for o in outcomes {
        for (m, r) in max.iter_mut().zip(&o.residuals) {
            if r > m {
                *m = r.clone();
            }
        }
        match o.pair {
            Some(true) => report.pair_symmetry_true += 1,
            Some(false) => report.pair_symmetry_false += 1,
            None => {}
        }
        report.zz_true += o.zz as usize;
        report.rb_true += o.rb as usize;
        report.failures.extend(o.failures);
    }
    report.identities = FUZZ_IDENTITIES
        .iter()
        .zip(&max)
        .map(|(id, m)| IdentityTally {
            id: id.name().to_string(),
            evaluated: insts.len(),
            max_residual: crate::scalar::format_rational(m),
        })
        .collect();
    report.passed = report.failures.is_empty();
    Ok(report)
}
