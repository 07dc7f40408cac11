//! Named, tolerance-checked identities for Π, Φ, Ψ and the derivation action.
//!
//! Every check reports `max_abs` of a difference tensor against an effective
//! tolerance `tol · (1 + ∏ input norms)`. Identities of the form `A = B` with
//! both sides nonzero also carry a non-vacuousness flag: `max_abs(A)` must
//! exceed ten times the effective tolerance.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;

use crate::curvature::{hol_sect, product_curvature, CurvatureTensor, QchBasis, QchCoefficients};
use crate::derivation::curv_dot;
use crate::error::Result;
use crate::space::{seeded_rng, HermitianSpace};
use crate::tensor::{Tensor, Valence};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub n: usize,
    pub seed: u64,
    pub max_defect: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Wall time of the verifier that produced this check.
    pub elapsed: Duration,
    /// `Some(false)` when the compared side is too small for the check to mean anything.
    pub nonvacuous: Option<bool>,
}

impl CheckResult {
    pub fn new(name: impl Into<String>, n: usize, seed: u64, max_defect: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            n,
            seed,
            max_defect,
            tolerance,
            pass: max_defect <= tolerance,
            elapsed: Duration::ZERO,
            nonvacuous: None,
        }
    }

    fn guarded(mut self, lhs_norm: f64) -> Self {
        self.nonvacuous = Some(lhs_norm > 10.0 * self.tolerance);
        self
    }

    /// Passed, and not flagged as vacuous.
    pub fn ok(&self) -> bool {
        self.pass && self.nonvacuous != Some(false)
    }
}

fn stamp(mut checks: Vec<CheckResult>, start: Instant) -> Vec<CheckResult> {
    let elapsed = start.elapsed();
    for c in &mut checks {
        c.elapsed = elapsed;
    }
    checks
}

fn seed_of(space: &HermitianSpace) -> u64 {
    space.seed().unwrap_or(0)
}

/// All nine products `X.Y` for `X, Y ∈ {Π, Φ, Ψ}`, indexed `[x][y]`.
struct Products {
    table: [[Tensor; 3]; 3],
    norms: [f64; 3],
}

impl Products {
    fn new(basis: &QchBasis) -> Result<Self> {
        let ops = [&basis.pi, &basis.phi, &basis.psi];
        let pairs: Vec<(usize, usize)> = (0..3).flat_map(|x| (0..3).map(move |y| (x, y))).collect();
        let mut flat = pairs
            .par_iter()
            .map(|&(x, y)| curv_dot(ops[x], ops[y].tensor()))
            .collect::<Result<Vec<Tensor>>>()?
            .into_iter();
        let mut next = || flat.next().expect("nine products");
        let table = [
            [next(), next(), next()],
            [next(), next(), next()],
            [next(), next(), next()],
        ];
        Ok(Self {
            table,
            norms: [basis.pi.max_abs(), basis.phi.max_abs(), basis.psi.max_abs()],
        })
    }

    fn get(&self, x: usize, y: usize) -> &Tensor {
        &self.table[x][y]
    }

    /// `1 + max over the listed (x, y) of |X| |Y|`.
    fn scale(&self, pairs: &[(usize, usize)]) -> f64 {
        1.0 + pairs
            .iter()
            .map(|&(x, y)| self.norms[x] * self.norms[y])
            .fold(0.0, f64::max)
    }
}

const PI: usize = 0;
const PHI: usize = 1;
const PSI: usize = 2;

fn zero_relation(name: &str, n: usize, seed: u64, p: &Products, x: usize, y: usize, tol: f64) -> CheckResult {
    CheckResult::new(name, n, seed, p.get(x, y).max_abs(), tol * p.scale(&[(x, y)]))
}

fn combination(terms: &[(f64, &Tensor)]) -> Tensor {
    Tensor::linear_combination(terms).expect("products share a shape")
}

/// The seven relations `Π.Π = Φ.Π = Ψ.Π = Ψ.Φ = Ψ.Ψ = 0`, `Π.Φ = 2Φ.Φ`,
/// `Π.Ψ = 2Φ.Ψ` on an explicit basis triple.
pub fn table_checks(basis: &QchBasis, tol: f64) -> Result<Vec<CheckResult>> {
    let start = Instant::now();
    let space = basis.space();
    let (n, seed) = (space.n(), seed_of(space));
    let p = Products::new(basis)?;
    let mut out = vec![
        zero_relation("table.pi_pi_zero", n, seed, &p, PI, PI, tol),
        zero_relation("table.phi_pi_zero", n, seed, &p, PHI, PI, tol),
        zero_relation("table.psi_pi_zero", n, seed, &p, PSI, PI, tol),
        zero_relation("table.psi_phi_zero", n, seed, &p, PSI, PHI, tol),
        zero_relation("table.psi_psi_zero", n, seed, &p, PSI, PSI, tol),
    ];
    for (name, target) in [("table.pi_phi_eq_2phi_phi", PHI), ("table.pi_psi_eq_2phi_psi", PSI)] {
        let lhs = p.get(PI, target);
        let rhs = p.get(PHI, target).scale(2.0);
        let eff = tol * p.scale(&[(PI, target), (PHI, target)]);
        out.push(CheckResult::new(name, n, seed, lhs.max_abs_diff(&rhs)?, eff).guarded(lhs.max_abs()));
    }
    Ok(stamp(out, start))
}

pub fn verify_multiplication_table(space: &Arc<HermitianSpace>, tol: f64) -> Result<Vec<CheckResult>> {
    table_checks(&QchBasis::new(space), tol)
}

/// `2Φ.Φ = Φ.Π + Π.Φ`, `Ψ.Ψ = 0`, `Ψ.Π + Π.Ψ = 2(Φ.Ψ + Ψ.Φ)`.
pub fn eq32_checks(basis: &QchBasis, tol: f64) -> Result<Vec<CheckResult>> {
    let start = Instant::now();
    let space = basis.space();
    let (n, seed) = (space.n(), seed_of(space));
    let p = Products::new(basis)?;

    let lhs = p.get(PHI, PHI).scale(2.0);
    let rhs = combination(&[(1.0, p.get(PHI, PI)), (1.0, p.get(PI, PHI))]);
    let first = CheckResult::new(
        "eq32.two_phi_phi_eq_phi_pi_plus_pi_phi",
        n,
        seed,
        lhs.max_abs_diff(&rhs)?,
        tol * p.scale(&[(PHI, PHI), (PHI, PI), (PI, PHI)]),
    )
    .guarded(lhs.max_abs());

    let psi_psi = zero_relation("eq32.psi_psi_zero", n, seed, &p, PSI, PSI, tol);

    let lhs = combination(&[(1.0, p.get(PSI, PI)), (1.0, p.get(PI, PSI))]);
    let rhs = combination(&[(2.0, p.get(PHI, PSI)), (2.0, p.get(PSI, PHI))]);
    let third = CheckResult::new(
        "eq32.psi_pi_plus_pi_psi_eq_2_phi_psi_plus_psi_phi",
        n,
        seed,
        lhs.max_abs_diff(&rhs)?,
        tol * p.scale(&[(PSI, PI), (PI, PSI), (PHI, PSI), (PSI, PHI)]),
    )
    .guarded(lhs.max_abs());

    Ok(stamp(vec![first, psi_psi, third], start))
}

pub fn verify_eq32(space: &Arc<HermitianSpace>, tol: f64) -> Result<Vec<CheckResult>> {
    eq32_checks(&QchBasis::new(space), tol)
}

/// Draws `trials` coefficient triples uniformly from `[-range, range]³` and
/// reports the worst relative defect
/// `max_abs(R.R − (a + b/2) Π.R) / (1 + max_abs(R.R))`.
pub fn theorem1_check(
    basis: &QchBasis,
    trials: usize,
    coeff_range: f64,
    tol: f64,
    seed: u64,
) -> Result<CheckResult> {
    let start = Instant::now();
    let space = basis.space();
    let mut rng = seeded_rng(seed);
    let draws: Vec<QchCoefficients> = (0..trials)
        .map(|_| {
            let mut draw = || rng.random_range(-coeff_range..=coeff_range);
            QchCoefficients::new(draw(), draw(), draw())
        })
        .collect();
    let mut worst = 0.0f64;
    let mut largest_rr = 0.0f64;
    for coeffs in draws {
        let r = basis.combine(coeffs);
        let rr = curv_dot(&r, r.tensor())?;
        let pir = curv_dot(&basis.pi, r.tensor())?;
        let defect = rr.max_abs_diff(&pir.scale(coeffs.pseudosymmetry_factor()))?;
        let norm = rr.max_abs();
        worst = worst.max(defect / (1.0 + norm));
        largest_rr = largest_rr.max(norm);
    }
    let mut check = CheckResult::new("theorem1.pseudosymmetry", space.n(), seed, worst, tol).guarded(largest_rr);
    check.elapsed = start.elapsed();
    Ok(check)
}

pub fn verify_theorem1(
    space: &Arc<HermitianSpace>,
    trials: usize,
    coeff_range: f64,
    tol: f64,
    seed: u64,
) -> Result<CheckResult> {
    theorem1_check(&QchBasis::new(space), trials, coeff_range, tol, seed)
}

/// The model products `M(k) × Σ(l)`: blockwise curvature against
/// `kΠ − 2kΦ + (l+k)Ψ`, the coefficient fit, semisymmetry of the two special
/// families, and the holomorphic sectional curvature quartic.
pub fn product_checks(basis: &QchBasis, k: f64, l: f64, tol: f64, seed: u64) -> Result<Vec<CheckResult>> {
    let start = Instant::now();
    let space = basis.space();
    let n = space.n();
    let expected = QchCoefficients::new(k, -2.0 * k, l + k);
    let product = product_curvature(k, l, space);
    let combined = basis.combine(expected);
    let scale = 1.0 + product.max_abs();
    let mut out = vec![CheckResult::new(
        "product.equals_combination",
        n,
        seed,
        product.tensor().max_abs_diff(combined.tensor())?,
        tol * scale,
    )];

    let (fit, residual) = basis.fit(&product)?;
    let coeff_err = (fit.a - expected.a)
        .abs()
        .max((fit.b - expected.b).abs())
        .max((fit.c - expected.c).abs());
    out.push(CheckResult::new(
        "product.fit_coefficients",
        n,
        seed,
        coeff_err.max(residual),
        tol * (1.0 + k.abs() + l.abs()),
    ));

    let d = if (k + l).abs() > 1e-12 { k + l } else { 1.0 };
    for (name, kk, ll) in [
        ("product.semisymmetric_l_eq_minus_k", k, -k),
        ("product.semisymmetric_k1_l_eq_d_minus_1", 1.0, d - 1.0),
    ] {
        let r = product_curvature(kk, ll, space);
        let rr = curv_dot(&r, r.tensor())?;
        let norm = r.max_abs();
        out.push(CheckResult::new(name, n, seed, rr.max_abs(), tol * (1.0 + norm * norm)));
    }

    let mut rng = seeded_rng(seed ^ 0x5eed_0001);
    let mut worst = 0.0f64;
    for _ in 0..32 {
        let x = space.random_unit_vector(&mut rng);
        let (_, t) = space.project_d(&x)?;
        let t2 = t * t;
        let quartic = k - 2.0 * k * t2 + (l + k) * t2 * t2;
        worst = worst.max((hol_sect(&product, &x)? - quartic).abs());
    }
    out.push(CheckResult::new("product.hol_sect_quartic", n, seed, worst, tol * scale));
    Ok(stamp(out, start))
}

pub fn verify_product_route(space: &Arc<HermitianSpace>, k: f64, l: f64, tol: f64) -> Result<Vec<CheckResult>> {
    product_checks(&QchBasis::new(space), k, l, tol, seed_of(space))
}

/// Direct algebraic route: annihilation of `g`, `J`, `Ω` by Π and Φ, the
/// literal expansions of `−4Π(U,V).ω` and `−8Φ(U,V).ω`, `Π.ω = 2Φ.ω`,
/// `Π.h = 2Φ.h`, `(Π − 2Φ).Φ = 0`, and the operator form of Ψ.
pub fn algebraic_checks(basis: &QchBasis, tol: f64) -> Result<Vec<CheckResult>> {
    let start = Instant::now();
    let space = basis.space();
    let (n, seed) = (space.n(), seed_of(space));
    let st = space.structure_tensors();
    let d = space.dim();
    let scale = 1.0 + basis.pi.max_abs().max(basis.phi.max_abs());
    let mut out = Vec::new();

    for (op_name, op) in [("pi", &basis.pi), ("phi", &basis.phi)] {
        for (t_name, t) in [("g", space.g()), ("j", space.j()), ("kahler_form", &st.kahler_form)] {
            let defect = curv_dot(op, t)?.max_abs();
            out.push(CheckResult::new(
                format!("algebraic.{op_name}_annihilates_{t_name}"),
                n,
                seed,
                defect,
                tol * scale,
            ));
        }
    }

    let expansions = OmegaExpansions::new(space);
    let pi_omega = curv_dot(&basis.pi, &st.omega_d)?;
    let phi_omega = curv_dot(&basis.phi, &st.omega_d)?;

    // −4 Π(U,V).ω(X,Y) = printed eight terms + omitted −2g(JU,V)(ω(JX,Y)+ω(X,JY))
    let lhs = pi_omega.scale(-4.0);
    let printed_plus_group = expansions.printed.add(&expansions.pi_group)?;
    out.push(
        CheckResult::new(
            "algebraic.pi_omega_expansion",
            n,
            seed,
            lhs.max_abs_diff(&printed_plus_group)?,
            tol * scale,
        )
        .guarded(lhs.max_abs()),
    );
    out.push(CheckResult::new(
        "algebraic.pi_omega_omitted_group_vanishes",
        n,
        seed,
        expansions.pi_group.max_abs(),
        tol * scale,
    ));
    out.push(CheckResult::new(
        "algebraic.pi_omega_printed_form",
        n,
        seed,
        lhs.max_abs_diff(&expansions.printed)?,
        tol * scale,
    ));

    // −8 Φ(U,V).ω(X,Y): sixteen-term expansion, then the reduced eight terms
    let lhs = phi_omega.scale(-8.0);
    let full = Tensor::linear_combination(&[
        (1.0, &expansions.printed),
        (1.0, &expansions.phi_extra),
        (1.0, &expansions.phi_group),
    ])?;
    out.push(
        CheckResult::new("algebraic.phi_omega_expansion", n, seed, lhs.max_abs_diff(&full)?, tol * scale)
            .guarded(lhs.max_abs()),
    );
    out.push(CheckResult::new(
        "algebraic.phi_omega_extra_terms_cancel",
        n,
        seed,
        expansions.phi_extra.max_abs().max(expansions.phi_group.max_abs()),
        tol * scale,
    ));
    out.push(CheckResult::new(
        "algebraic.phi_omega_reduced_form",
        n,
        seed,
        lhs.max_abs_diff(&expansions.printed)?,
        tol * scale,
    ));

    for (name, form) in [("omega", &st.omega_d), ("h", &st.h)] {
        let lhs = curv_dot(&basis.pi, form)?;
        let rhs = curv_dot(&basis.phi, form)?.scale(2.0);
        out.push(
            CheckResult::new(
                format!("algebraic.pi_{name}_eq_2phi_{name}"),
                n,
                seed,
                lhs.max_abs_diff(&rhs)?,
                tol * scale,
            )
            .guarded(lhs.max_abs()),
        );
    }

    let pi_minus_2phi = basis.pi.axpy(-2.0, &basis.phi)?;
    out.push(CheckResult::new(
        "algebraic.pi_minus_2phi_annihilates_phi",
        n,
        seed,
        curv_dot(&pi_minus_2phi, basis.phi.tensor())?.max_abs(),
        tol * scale * scale,
    ));

    // Ψ(X,Y)Z = −ω(X,Y) J p_D Z
    let raised = basis.psi.tensor().raise_first(space.g())?;
    let jp = space.j().to_matrix()? * space.p_d().to_matrix()?;
    let w = st.omega_d.entries();
    let operator = Tensor::from_fn(d, Valence::mixed(3), |i| -w[i[1] * d + i[2]] * jp[(i[0], i[3])]);
    out.push(CheckResult::new(
        "algebraic.psi_operator_form",
        n,
        seed,
        raised.max_abs_diff(&operator)?,
        tol * scale,
    ));

    for (name, target) in [("pi", &basis.pi), ("phi", &basis.phi), ("psi", &basis.psi)] {
        out.push(CheckResult::new(
            format!("algebraic.psi_annihilates_{name}"),
            n,
            seed,
            curv_dot(&basis.psi, target.tensor())?.max_abs(),
            tol * scale,
        ));
    }
    Ok(stamp(out, start))
}

pub fn verify_algebraic_route(space: &Arc<HermitianSpace>, tol: f64) -> Result<Vec<CheckResult>> {
    algebraic_checks(&QchBasis::new(space), tol)
}

/// Literal expansions of the derivatives of ω, as `(0,4)` tensors in slot
/// order `(X, Y, U, V)`, built straight from `g`, `J`, `h`, `ω`.
struct OmegaExpansions {
    /// The eight terms shared by both expansions.
    printed: Tensor,
    /// `−2g(JU,V)(ω(JX,Y) + ω(X,JY))`.
    pi_group: Tensor,
    /// The h-terms and ω-quadratic terms of the Φ expansion.
    phi_extra: Tensor,
    /// `−2g(JU,V)(ω(πJX,Y) + ω(X,πJY)) − 2ω(U,V)(ω(JX,Y) + ω(X,JY))`.
    phi_group: Tensor,
}

impl OmegaExpansions {
    fn new(space: &HermitianSpace) -> Self {
        let d = space.dim();
        let st = space.structure_tensors();
        let g = space.g().entries().to_vec();
        let j = space.j().entries().to_vec();
        let h = st.h.entries().to_vec();
        let w = st.omega_d.entries().to_vec();
        let p = space.p_d().entries().to_vec();
        let at = |m: &[f64], a: usize, b: usize| m[a * d + b];
        // B(J e_a, e_b) and B(e_a, J e_b)
        let first_j = |m: &[f64], a: usize, b: usize| (0..d).map(|c| j[c * d + a] * m[c * d + b]).sum::<f64>();
        let second_j = |m: &[f64], a: usize, b: usize| (0..d).map(|c| m[a * d + c] * j[c * d + b]).sum::<f64>();
        // ω(π J e_a, e_b) and ω(e_a, π J e_b)
        let pj: Vec<f64> = (0..d * d)
            .map(|f| (0..d).map(|c| p[(f / d) * d + c] * j[c * d + f % d]).sum())
            .collect();
        let first_pj = |a: usize, b: usize| (0..d).map(|c| pj[c * d + a] * w[c * d + b]).sum::<f64>();
        let second_pj = |a: usize, b: usize| (0..d).map(|c| w[a * d + c] * pj[c * d + b]).sum::<f64>();

        let printed = Tensor::from_fn(d, Valence::covariant(4), |i| {
            let (x, y, u, v) = (i[0], i[1], i[2], i[3]);
            at(&w, u, y) * at(&g, v, x) + at(&g, v, y) * at(&w, x, u)
                - at(&g, u, x) * at(&w, v, y)
                - at(&g, u, y) * at(&w, x, v)
                + first_j(&g, v, x) * first_j(&w, u, y)
                + first_j(&g, v, y) * second_j(&w, x, u)
                - first_j(&g, u, x) * first_j(&w, v, y)
                - first_j(&g, u, y) * second_j(&w, x, v)
        });
        let pi_group = Tensor::from_fn(d, Valence::covariant(4), |i| {
            let (x, y, u, v) = (i[0], i[1], i[2], i[3]);
            -2.0 * first_j(&g, u, v) * (first_j(&w, x, y) + second_j(&w, x, y))
        });
        let phi_extra = Tensor::from_fn(d, Valence::covariant(4), |i| {
            let (x, y, u, v) = (i[0], i[1], i[2], i[3]);
            at(&h, v, x) * at(&w, u, y) + at(&h, v, y) * at(&w, x, u)
                - at(&h, u, x) * at(&w, v, y)
                - at(&h, u, y) * at(&w, x, v)
                + at(&w, v, x) * first_j(&w, u, y)
                + at(&w, v, y) * second_j(&w, x, u)
                - at(&w, u, x) * first_j(&w, v, y)
                - at(&w, u, y) * second_j(&w, x, v)
        });
        let phi_group = Tensor::from_fn(d, Valence::covariant(4), |i| {
            let (x, y, u, v) = (i[0], i[1], i[2], i[3]);
            -2.0 * first_j(&g, u, v) * (first_pj(x, y) + second_pj(x, y))
                - 2.0 * at(&w, u, v) * (first_j(&w, x, y) + second_j(&w, x, y))
        });
        Self {
            printed,
            pi_group,
            phi_extra,
            phi_group,
        }
    }
}

/// Parameters of a full verification sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub n_list: Vec<usize>,
    pub seeds: Vec<u64>,
    pub tol: f64,
    pub trials: usize,
    pub coeff_range: f64,
    /// Adds `ε ·` uniform noise in `[-1, 1]` to Φ before any check runs.
    pub perturbation: Option<f64>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            n_list: vec![2, 3, 4],
            seeds: vec![0, 1, 2],
            tol: 1e-10,
            trials: 100,
            coeff_range: 5.0,
            perturbation: None,
        }
    }
}

/// Coefficients `(k, l)` used by the product route for a given seed.
pub fn product_parameters(seed: u64, coeff_range: f64) -> (f64, f64) {
    let mut rng = seeded_rng(seed ^ 0x5eed_0002);
    let k = rng.random_range(-coeff_range..=coeff_range);
    let l = rng.random_range(-coeff_range..=coeff_range);
    (k, l)
}

/// Basis triple on the seeded adapted space, with the optional Φ perturbation.
pub fn suite_basis(n: usize, seed: u64, perturbation: Option<f64>) -> Result<QchBasis> {
    let space = Arc::new(HermitianSpace::canonical(n)?.random_adapted_change(seed));
    let mut basis = QchBasis::new(&space);
    if let Some(eps) = perturbation {
        let mut rng = seeded_rng(seed ^ 0x5eed_0003);
        let noise = Tensor::from_fn(space.dim(), Valence::covariant(4), |_| rng.random_range(-1.0..=1.0));
        basis.phi = CurvatureTensor::new(Arc::clone(&space), basis.phi.tensor().axpy(eps, &noise)?)?;
    }
    Ok(basis)
}

fn run_one(cfg: &SuiteConfig, n: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let basis = suite_basis(n, seed, cfg.perturbation)?;
    let mut out = table_checks(&basis, cfg.tol)?;
    out.extend(eq32_checks(&basis, cfg.tol)?);
    out.extend(algebraic_checks(&basis, cfg.tol)?);
    // the pseudosymmetry defect is a relative quantity one order looser than the table
    out.push(theorem1_check(&basis, cfg.trials, cfg.coeff_range, cfg.tol * 10.0, seed)?);
    let (k, l) = product_parameters(seed, cfg.coeff_range);
    out.extend(product_checks(&basis, k, l, cfg.tol, seed)?);
    Ok(out)
}

/// Runs every verifier over `n_list × seeds`. Results come back in input
/// order regardless of which worker finished first.
pub fn run_suite_with(cfg: &SuiteConfig) -> Result<Vec<CheckResult>> {
    let jobs: Vec<(usize, u64)> = cfg
        .n_list
        .iter()
        .flat_map(|&n| cfg.seeds.iter().map(move |&s| (n, s)))
        .collect();
    let groups = jobs
        .par_iter()
        .map(|&(n, seed)| run_one(cfg, n, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(groups.into_iter().flatten().collect())
}

pub fn run_suite(n_list: &[usize], seeds: &[u64], tol: f64) -> Result<Vec<CheckResult>> {
    run_suite_with(&SuiteConfig {
        n_list: n_list.to_vec(),
        seeds: seeds.to_vec(),
        tol,
        ..SuiteConfig::default()
    })
}
