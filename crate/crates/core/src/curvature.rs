//! The Kähler-type tensors Π, Φ, Ψ, their linear span, and the curvature of
//! the model products `M(k) × Σ(l)`.

use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};

use crate::error::{QchError, Result};
use crate::space::HermitianSpace;
use crate::tensor::{Tensor, Valence};

/// A `(0,4)` tensor tied to the space it lives on. Kähler-type symmetries are
/// expected but not enforced; see [`check_kahler_symmetries`].
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureTensor {
    tensor: Tensor,
    space: Arc<HermitianSpace>,
}

impl CurvatureTensor {
    pub fn new(space: Arc<HermitianSpace>, tensor: Tensor) -> Result<Self> {
        if tensor.valence() != Valence::covariant(4) {
            return Err(QchError::ShapeMismatch(format!(
                "curvature tensor must be (0,4), got {}",
                tensor.valence()
            )));
        }
        if tensor.dim() != space.dim() {
            return Err(QchError::DimensionMismatch {
                expected: space.dim(),
                got: tensor.dim(),
            });
        }
        Ok(Self { tensor, space })
    }

    pub fn zero(space: Arc<HermitianSpace>) -> Self {
        let tensor = Tensor::zeros(space.dim(), Valence::covariant(4));
        Self { tensor, space }
    }

    pub fn tensor(&self) -> &Tensor {
        &self.tensor
    }

    pub fn space(&self) -> &Arc<HermitianSpace> {
        &self.space
    }

    pub fn max_abs(&self) -> f64 {
        self.tensor.max_abs()
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            tensor: self.tensor.scale(c),
            space: Arc::clone(&self.space),
        }
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: f64, other: &CurvatureTensor) -> Result<Self> {
        Ok(Self {
            tensor: self.tensor.axpy(c, &other.tensor)?,
            space: Arc::clone(&self.space),
        })
    }

    pub fn sub(&self, other: &CurvatureTensor) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    pub fn get(&self, idx: [usize; 4]) -> f64 {
        self.tensor.get(&idx)
    }
}

/// Coefficients of `R = aΠ + bΦ + cΨ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QchCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl QchCoefficients {
    pub const fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    /// Holomorphic sectional curvature `a + b t² + c t⁴` at `|X_D| = t`.
    pub fn phi(&self, t: f64) -> f64 {
        let t2 = t * t;
        self.a + self.b * t2 + self.c * t2 * t2
    }

    /// The pseudosymmetry factor `a + b/2`.
    pub fn pseudosymmetry_factor(&self) -> f64 {
        self.a + 0.5 * self.b
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite()
    }
}

/// `¼(B_yz B_xu − B_xz B_yu + W_yz W_xu − W_xz W_yu − 2 W_xy W_zu)` for a
/// J-invariant symmetric form `B` and `W = B(J·,·)`.
fn holomorphic_pattern(form: &Tensor, twisted: &Tensor) -> Tensor {
    let d = form.dim();
    let b = form.entries();
    let w = twisted.entries();
    Tensor::from_fn(d, Valence::covariant(4), |i| {
        let (x, y, z, u) = (i[0], i[1], i[2], i[3]);
        0.25 * (b[y * d + z] * b[x * d + u] - b[x * d + z] * b[y * d + u]
            + w[y * d + z] * w[x * d + u]
            - w[x * d + z] * w[y * d + u]
            - 2.0 * w[x * d + y] * w[z * d + u])
    })
}

fn twisted(form: &Tensor, space: &HermitianSpace) -> Tensor {
    let d = space.dim();
    let j = space.j().entries();
    let b = form.entries();
    Tensor::from_fn(d, Valence::covariant(2), |i| {
        (0..d).map(|a| j[a * d + i[0]] * b[a * d + i[1]]).sum()
    })
}

/// Π, the tensor of constant holomorphic sectional curvature 1.
pub fn build_pi(space: &Arc<HermitianSpace>) -> CurvatureTensor {
    let kahler = space.structure_tensors().kahler_form;
    CurvatureTensor {
        tensor: holomorphic_pattern(space.g(), &kahler),
        space: Arc::clone(space),
    }
}

/// Φ, the mixed term with `Φ(X,JX,JX,X) = |X_D|²` for unit `X`.
pub fn build_phi(space: &Arc<HermitianSpace>) -> CurvatureTensor {
    let st = space.structure_tensors();
    let d = space.dim();
    let g = space.g().entries();
    let big = st.kahler_form.entries();
    let h = st.h.entries();
    let w = st.omega_d.entries();
    let tensor = Tensor::from_fn(d, Valence::covariant(4), |i| {
        let (x, y, z, u) = (i[0], i[1], i[2], i[3]);
        let at = |m: &[f64], p: usize, q: usize| m[p * d + q];
        0.125
            * (at(g, y, z) * at(h, x, u) - at(g, x, z) * at(h, y, u)
                + at(g, x, u) * at(h, y, z)
                - at(g, y, u) * at(h, x, z)
                + at(big, y, z) * at(w, x, u)
                - at(big, x, z) * at(w, y, u)
                + at(big, x, u) * at(w, y, z)
                - at(big, y, u) * at(w, x, z)
                - 2.0 * at(big, x, y) * at(w, z, u)
                - 2.0 * at(big, z, u) * at(w, x, y))
    });
    CurvatureTensor {
        tensor,
        space: Arc::clone(space),
    }
}

/// Ψ = −ω ⊗ ω.
pub fn build_psi(space: &Arc<HermitianSpace>) -> CurvatureTensor {
    let w = space.structure_tensors().omega_d;
    let tensor = w
        .tensor_product(&w)
        .expect("ω is (0,2) on the space")
        .scale(-1.0);
    CurvatureTensor {
        tensor,
        space: Arc::clone(space),
    }
}

/// Hermitian analogue of the Kulkarni–Nomizu product of `g` with a
/// J-invariant symmetric form `S`:
///
/// `g_yz S_xu − g_xz S_yu + g_xu S_yz − g_yu S_xz + Ω_yz Σ_xu − Ω_xz Σ_yu
///  + Ω_xu Σ_yz − Ω_yu Σ_xz − 2Ω_xy Σ_zu − 2Ω_zu Σ_xy`, with `Σ = S(J·,·)`.
///
/// The result is of Kähler type; `S = g` gives `8Π` and `S = h` gives `8Φ`.
pub fn hermitian_kulkarni_nomizu(
    space: &Arc<HermitianSpace>,
    form: &Tensor,
) -> Result<CurvatureTensor> {
    if form.valence() != Valence::covariant(2) || form.dim() != space.dim() {
        return Err(QchError::ShapeMismatch(
            "form must be a (0,2) tensor on the space".into(),
        ));
    }
    let d = space.dim();
    let g = space.g().entries();
    let big = space.structure_tensors().kahler_form;
    let big = big.entries();
    let sigma = twisted(form, space);
    let (s, sg) = (form.entries(), sigma.entries());
    let tensor = Tensor::from_fn(d, Valence::covariant(4), |i| {
        let (x, y, z, u) = (i[0], i[1], i[2], i[3]);
        let at = |m: &[f64], p: usize, q: usize| m[p * d + q];
        at(g, y, z) * at(s, x, u) - at(g, x, z) * at(s, y, u) + at(g, x, u) * at(s, y, z)
            - at(g, y, u) * at(s, x, z)
            + at(big, y, z) * at(sg, x, u)
            - at(big, x, z) * at(sg, y, u)
            + at(big, x, u) * at(sg, y, z)
            - at(big, y, u) * at(sg, x, z)
            - 2.0 * at(big, x, y) * at(sg, z, u)
            - 2.0 * at(big, z, u) * at(sg, x, y)
    });
    CurvatureTensor::new(Arc::clone(space), tensor)
}

/// Π, Φ, Ψ built once for repeated combination and fitting.
#[derive(Debug, Clone)]
pub struct QchBasis {
    pub pi: CurvatureTensor,
    pub phi: CurvatureTensor,
    pub psi: CurvatureTensor,
}

impl QchBasis {
    pub fn new(space: &Arc<HermitianSpace>) -> Self {
        Self {
            pi: build_pi(space),
            phi: build_phi(space),
            psi: build_psi(space),
        }
    }

    pub fn space(&self) -> &Arc<HermitianSpace> {
        self.pi.space()
    }

    pub fn combine(&self, coeffs: QchCoefficients) -> CurvatureTensor {
        let tensor = Tensor::linear_combination(&[
            (coeffs.a, &self.pi.tensor),
            (coeffs.b, &self.phi.tensor),
            (coeffs.c, &self.psi.tensor),
        ])
        .expect("basis tensors share a shape");
        CurvatureTensor {
            tensor,
            space: Arc::clone(self.space()),
        }
    }

    /// Least-squares projection of `r` onto `span{Π, Φ, Ψ}` through the 3×3
    /// Gram system. Returns the coefficients and `max_abs(r − combine(fit))`.
    pub fn fit(&self, r: &CurvatureTensor) -> Result<(QchCoefficients, f64)> {
        let basis = [&self.pi.tensor, &self.phi.tensor, &self.psi.tensor];
        let mut gram = Matrix3::zeros();
        let mut rhs = Vector3::zeros();
        for (i, bi) in basis.iter().enumerate() {
            for (j, bj) in basis.iter().enumerate() {
                gram[(i, j)] = bi.frobenius_inner(bj)?;
            }
            rhs[i] = bi.frobenius_inner(&r.tensor)?;
        }
        let eig = gram.symmetric_eigen().eigenvalues;
        let (lo, hi) = eig
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), l| (lo.min(l.abs()), hi.max(l.abs())));
        let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if cond.is_nan() || cond >= 1e10 {
            return Err(QchError::IllConditioned(cond));
        }
        let sol = gram
            .cholesky()
            .ok_or(QchError::IllConditioned(cond))?
            .solve(&rhs);
        let coeffs = QchCoefficients::new(sol[0], sol[1], sol[2]);
        let residual = r.tensor.max_abs_diff(&self.combine(coeffs).tensor)?;
        Ok((coeffs, residual))
    }
}

/// `aΠ + bΦ + cΨ` on the given space.
pub fn combine(coeffs: QchCoefficients, space: &Arc<HermitianSpace>) -> CurvatureTensor {
    QchBasis::new(space).combine(coeffs)
}

pub fn fit_coefficients(r: &CurvatureTensor) -> Result<(QchCoefficients, f64)> {
    QchBasis::new(r.space()).fit(r)
}

/// Curvature of `M(k) × Σ(l)` at a point: `k` times the constant holomorphic
/// pattern built from `g` restricted to `E`, plus `l` times the same pattern
/// built from `h` on `D`.
pub fn product_curvature(k: f64, l: f64, space: &Arc<HermitianSpace>) -> CurvatureTensor {
    let g_e = space.g_e();
    let st = space.structure_tensors();
    let e_part = holomorphic_pattern(&g_e, &twisted(&g_e, space));
    let d_part = holomorphic_pattern(&st.h, &st.omega_d);
    let tensor = Tensor::linear_combination(&[(k, &e_part), (l, &d_part)])
        .expect("blocks share a shape");
    CurvatureTensor {
        tensor,
        space: Arc::clone(space),
    }
}

/// Maximum defect of each Kähler-type symmetry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryReport {
    /// max of `T(X,Y,Z,W)+T(Y,X,Z,W)` and `T(X,Y,Z,W)+T(X,Y,W,Z)`.
    pub antisymmetry: f64,
    pub pair_symmetry: f64,
    pub bianchi: f64,
    pub j_invariance: f64,
    pub threshold: f64,
}

impl SymmetryReport {
    pub fn max_defect(&self) -> f64 {
        self.antisymmetry
            .max(self.pair_symmetry)
            .max(self.bianchi)
            .max(self.j_invariance)
    }

    pub fn pass(&self) -> bool {
        self.max_defect() <= self.threshold
    }
}

/// Checks the four Kähler-type symmetries; passes iff every defect is at most
/// `tol · (1 + max_abs(R))`.
pub fn check_kahler_symmetries(r: &CurvatureTensor, tol: f64) -> SymmetryReport {
    let t = &r.tensor;
    let d = t.dim();
    let e = t.entries();
    let at = |x: usize, y: usize, z: usize, w: usize| e[((x * d + y) * d + z) * d + w];
    let j = r.space.j().entries();
    let mut report = SymmetryReport {
        antisymmetry: 0.0,
        pair_symmetry: 0.0,
        bianchi: 0.0,
        j_invariance: 0.0,
        threshold: tol * (1.0 + t.max_abs()),
    };
    // T(JX,JY,Z,W) with the first two slots rotated by J
    let rotated = {
        let mut m = vec![0.0; d * d];
        for a in 0..d {
            for x in 0..d {
                m[x * d + a] = j[a * d + x];
            }
        }
        let once = crate::tensor::apply_to_slot(e, d, 4, 0, &m);
        crate::tensor::apply_to_slot(&once, d, 4, 1, &m)
    };
    for x in 0..d {
        for y in 0..d {
            for z in 0..d {
                for w in 0..d {
                    let v = at(x, y, z, w);
                    report.antisymmetry = report
                        .antisymmetry
                        .max((v + at(y, x, z, w)).abs())
                        .max((v + at(x, y, w, z)).abs());
                    report.pair_symmetry = report.pair_symmetry.max((v - at(z, w, x, y)).abs());
                    report.bianchi = report
                        .bianchi
                        .max((v + at(y, z, x, w) + at(z, x, y, w)).abs());
                    let flat = ((x * d + y) * d + z) * d + w;
                    report.j_invariance = report.j_invariance.max((rotated[flat] - v).abs());
                }
            }
        }
    }
    report
}

/// `R(X, JX, JX, X)` for a g-unit vector `X`.
pub fn hol_sect(r: &CurvatureTensor, x: &[f64]) -> Result<f64> {
    let space = &r.space;
    let norm_sq = space.norm_sq(x)?;
    if norm_sq.abs() < f64::EPSILON {
        return Err(QchError::ZeroVector);
    }
    if (norm_sq - 1.0).abs() > 1e-12 {
        return Err(QchError::NotUnit(norm_sq));
    }
    let jx = space.apply_j(x)?;
    Ok(r.tensor
        .eval(&[x, &jx, &jx, x])?
        .scalar()
        .expect("(0,4) evaluates to a scalar"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::seeded_rng;
    use rand::Rng;

    fn space(n: usize, seed: u64) -> Arc<HermitianSpace> {
        Arc::new(HermitianSpace::canonical(n).unwrap().random_adapted_change(seed))
    }

    #[test]
    fn basis_tensors_are_kahler_type() {
        for n in [2, 3] {
            let s = space(n, 1);
            let b = QchBasis::new(&s);
            for t in [&b.pi, &b.phi, &b.psi] {
                let rep = check_kahler_symmetries(t, 1e-12);
                assert!(rep.pass(), "{rep:?}");
            }
        }
    }

    #[test]
    fn pi_entry_by_five_term_expansion() {
        // Π(e0,e2,e0,e2) at n=2: only g(Y,Z)g(X,U) - g(X,Z)g(Y,U) survives,
        // with g(e2,e0)=0, g(e0,e0)g(e2,e2)=1, so ¼(0 - 1 + 0 - 0 - 0) = -1/4.
        let s = Arc::new(HermitianSpace::canonical(2).unwrap());
        let pi = build_pi(&s);
        assert_eq!(pi.get([0, 2, 0, 2]), -0.25);
        assert_eq!(pi.get([0, 2, 2, 0]), 0.25);
        assert_eq!(pi.get([0, 1, 1, 0]), 1.0);
    }

    #[test]
    fn pi_vanishes_on_repeated_first_pair() {
        let s = space(2, 4);
        let pi = build_pi(&s);
        let mut rng = seeded_rng(0);
        let x = s.random_unit_vector(&mut rng);
        let z = s.random_unit_vector(&mut rng);
        let w = s.random_unit_vector(&mut rng);
        let v = pi.tensor().eval(&[&x, &x, &z, &w]).unwrap().scalar().unwrap();
        assert!(v.abs() < 1e-14);
    }

    #[test]
    fn phi_vanishes_on_e() {
        let s = Arc::new(HermitianSpace::canonical(3).unwrap());
        let phi = build_phi(&s);
        for x in 2..6 {
            for y in 2..6 {
                for z in 2..6 {
                    for w in 2..6 {
                        assert_eq!(phi.get([x, y, z, w]), 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn psi_is_minus_omega_squared_and_kills_e() {
        let s = space(3, 2);
        let psi = build_psi(&s);
        let w = s.structure_tensors().omega_d;
        let d = s.dim();
        for x in 0..d {
            for y in 0..d {
                for z in 0..d {
                    for u in 0..d {
                        let expect = -w.get(&[x, y]) * w.get(&[z, u]);
                        assert!((psi.get([x, y, z, u]) - expect).abs() < 1e-15);
                    }
                }
            }
        }
        let canon = Arc::new(HermitianSpace::canonical(2).unwrap());
        let psi = build_psi(&canon);
        let y = [0.0, 0.0, 0.6, 0.8];
        let z = [0.0, 0.0, -0.8, 0.6];
        assert_eq!(psi.tensor().eval(&[&y, &z, &y, &z]).unwrap().scalar().unwrap(), 0.0);
        let x = [0.3, -0.1, 0.5, 0.2];
        assert_eq!(psi.tensor().eval(&[&x, &y, &z, &x]).unwrap().scalar().unwrap(), 0.0);
    }

    #[test]
    fn kulkarni_nomizu_reproduces_pi_and_phi() {
        let s = space(3, 8);
        let b = QchBasis::new(&s);
        let kg = hermitian_kulkarni_nomizu(&s, s.g()).unwrap();
        let kh = hermitian_kulkarni_nomizu(&s, &s.structure_tensors().h).unwrap();
        assert!(kg.tensor().max_abs_diff(&b.pi.scale(8.0).tensor).unwrap() < 1e-13);
        assert!(kh.tensor().max_abs_diff(&b.phi.scale(8.0).tensor).unwrap() < 1e-13);
    }

    #[test]
    fn combine_edge_cases() {
        let s = space(2, 3);
        let b = QchBasis::new(&s);
        assert_eq!(b.combine(QchCoefficients::new(1.0, 0.0, 0.0)).tensor(), b.pi.tensor());
        assert_eq!(b.combine(QchCoefficients::new(0.0, 0.0, 0.0)).max_abs(), 0.0);
    }

    #[test]
    fn hol_sect_examples() {
        let s = Arc::new(HermitianSpace::canonical(3).unwrap());
        let b = QchBasis::new(&s);
        let r = b.combine(QchCoefficients::new(2.0, -3.0, 1.0));
        let in_d = [0.6, 0.8, 0.0, 0.0, 0.0, 0.0];
        assert!(hol_sect(&r, &in_d).unwrap().abs() < 1e-14);
        let r = b.combine(QchCoefficients::new(1.25, 7.0, -2.0));
        let in_e = [0.0, 0.0, 0.0, 0.6, 0.0, 0.8];
        assert!((hol_sect(&r, &in_e).unwrap() - 1.25).abs() < 1e-14);
    }

    #[test]
    fn hol_sect_rejects_bad_vectors() {
        let s = Arc::new(HermitianSpace::canonical(2).unwrap());
        let pi = build_pi(&s);
        assert_eq!(hol_sect(&pi, &[0.0; 4]), Err(QchError::ZeroVector));
        assert!(matches!(
            hol_sect(&pi, &[2.0, 0.0, 0.0, 0.0]),
            Err(QchError::NotUnit(_))
        ));
    }

    #[test]
    fn symmetry_defect_scales_with_perturbation() {
        let s = space(2, 6);
        let pi = build_pi(&s);
        let d = s.dim();
        // perturbation that breaks only the last-pair antisymmetry
        let bump = Tensor::from_fn(d, Valence::covariant(4), |i| {
            if i == [0, 1, 2, 2] {
                1.0
            } else {
                0.0
            }
        });
        for eps in [1e-3, 1e-6] {
            let r = CurvatureTensor::new(Arc::clone(&s), pi.tensor().axpy(eps, &bump).unwrap())
                .unwrap();
            let rep = check_kahler_symmetries(&r, 1e-12);
            assert!(!rep.pass());
            assert!((rep.antisymmetry - 2.0 * eps).abs() < 1e-12);
        }
    }

    #[test]
    fn random_tensor_fails_symmetries() {
        let s = space(2, 0);
        let mut rng = seeded_rng(42);
        let t = Tensor::from_fn(4, Valence::covariant(4), |_| rng.random_range(-1.0..1.0));
        let r = CurvatureTensor::new(s, t).unwrap();
        assert!(!check_kahler_symmetries(&r, 1e-12).pass());
    }

    #[test]
    fn fit_recovers_basis_and_product() {
        let s = space(3, 10);
        let b = QchBasis::new(&s);
        let (c, res) = b.fit(&b.pi).unwrap();
        assert!((c.a - 1.0).abs() < 1e-12 && c.b.abs() < 1e-12 && c.c.abs() < 1e-12);
        assert!(res < 1e-12);
        let (c, res) = b.fit(&product_curvature(1.0, -1.0, &s)).unwrap();
        assert!((c.a - 1.0).abs() < 1e-12 && (c.b + 2.0).abs() < 1e-12 && c.c.abs() < 1e-12);
        assert!(res < 1e-12);
    }

    #[test]
    fn product_curvature_flat_case() {
        let s = space(2, 1);
        assert_eq!(product_curvature(0.0, 0.0, &s).max_abs(), 0.0);
    }

    #[test]
    fn curvature_tensor_shape_checks() {
        let s = space(2, 1);
        assert!(CurvatureTensor::new(Arc::clone(&s), Tensor::zeros(4, Valence::covariant(3))).is_err());
        assert!(CurvatureTensor::new(s, Tensor::zeros(6, Valence::covariant(4))).is_err());
    }
}
