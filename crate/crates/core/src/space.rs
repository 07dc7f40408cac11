//! The Hermitian vector space `(V, g, J)` with a distinguished J-invariant
//! plane `D` and its orthogonal complement `E`.
//!
//! The canonical adapted basis has `g = I`, `J e_{2i} = e_{2i+1}`,
//! `J e_{2i+1} = -e_{2i}` (0-based) and `D = span(e_0, e_1)`. A space may be
//! expressed in any working basis; `basis_map` holds the working basis
//! vectors as columns in canonical coordinates, and every structure tensor is
//! stored in working-basis components.
//!
//! Random adapted changes of basis are drawn from a ChaCha8 stream seeded with
//! `ChaCha8Rng::seed_from_u64(seed)`; complex Gaussian entries take the real
//! part first, then the imaginary part, column-major.

use nalgebra::{Complex, DMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{QchError, Result};
use crate::tensor::{Tensor, Valence};

pub type Rng = ChaCha8Rng;

/// Deterministic generator used for every seeded draw in the crate.
pub fn seeded_rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HermitianSpace {
    n: usize,
    seed: Option<u64>,
    basis_map: DMatrix<f64>,
    basis_inverse: DMatrix<f64>,
    g: Tensor,
    j: Tensor,
    p_d: Tensor,
}

/// The bilinear forms `h`, `ω` and `Ω` in working-basis components.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureTensors {
    pub h: Tensor,
    pub omega_d: Tensor,
    pub kahler_form: Tensor,
}

impl HermitianSpace {
    /// Canonical model of complex dimension `n` (real dimension `2n`).
    pub fn canonical(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(QchError::ComplexDimensionTooSmall(n));
        }
        Self::with_basis(n, DMatrix::identity(2 * n, 2 * n), None)
    }

    /// The model of complex dimension `n` expressed in an arbitrary
    /// (invertible) working basis.
    pub fn from_basis_map(n: usize, basis_map: DMatrix<f64>) -> Result<Self> {
        if n < 2 {
            return Err(QchError::ComplexDimensionTooSmall(n));
        }
        if basis_map.shape() != (2 * n, 2 * n) {
            return Err(QchError::DimensionMismatch {
                expected: 2 * n,
                got: basis_map.nrows(),
            });
        }
        Self::with_basis(n, basis_map, None)
    }

    fn with_basis(n: usize, basis_map: DMatrix<f64>, seed: Option<u64>) -> Result<Self> {
        let d = 2 * n;
        let basis_inverse = basis_map
            .clone()
            .try_inverse()
            .ok_or(QchError::SingularMetric)?;
        let g0 = DMatrix::<f64>::identity(d, d);
        let j0 = canonical_complex_structure(d);
        let p0 = DMatrix::<f64>::from_fn(d, d, |i, k| if i == k && i < 2 { 1.0 } else { 0.0 });
        let g = basis_map.transpose() * g0 * &basis_map;
        let j = &basis_inverse * j0 * &basis_map;
        let p_d = &basis_inverse * p0 * &basis_map;
        Ok(Self {
            n,
            seed,
            g: Tensor::from_matrix(&g, Valence::covariant(2))?,
            j: Tensor::from_matrix(&j, Valence::mixed(1))?,
            p_d: Tensor::from_matrix(&p_d, Valence::mixed(1))?,
            basis_map,
            basis_inverse,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    /// Seed of the most recent random adapted change, if any.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn basis_map(&self) -> &DMatrix<f64> {
        &self.basis_map
    }

    pub fn basis_inverse(&self) -> &DMatrix<f64> {
        &self.basis_inverse
    }

    pub fn g(&self) -> &Tensor {
        &self.g
    }

    pub fn j(&self) -> &Tensor {
        &self.j
    }

    pub fn p_d(&self) -> &Tensor {
        &self.p_d
    }

    pub fn p_e(&self) -> Tensor {
        Tensor::identity(self.dim())
            .sub(&self.p_d)
            .expect("projectors share a shape")
    }

    /// Composes the basis with a random g-orthogonal, J-commuting map that
    /// preserves `D`: a phase on `D` and a Haar unitary of size `n-1` on `E`.
    pub fn random_adapted_change(&self, seed: u64) -> Self {
        let mut rng = seeded_rng(seed);
        let u = random_block_unitary(self.n, &mut rng);
        Self::with_basis(self.n, &self.basis_map * u, Some(seed))
            .expect("unitary change of an invertible basis is invertible")
    }

    /// Matrix of the most recent change relative to a parent space, i.e. the
    /// `U` with `self.basis_map = parent.basis_map * U`.
    pub fn change_from(&self, parent: &HermitianSpace) -> (DMatrix<f64>, DMatrix<f64>) {
        let u = &parent.basis_inverse * &self.basis_map;
        let u_inv = &self.basis_inverse * &parent.basis_map;
        (u, u_inv)
    }

    pub fn structure_tensors(&self) -> StructureTensors {
        let d = self.dim();
        let g = self.g.entries();
        let j = self.j.entries();
        let p = self.p_d.entries();
        // h(X,Y) = g(pX, pY)
        let h = Tensor::from_fn(d, Valence::covariant(2), |i| {
            let (x, y) = (i[0], i[1]);
            let mut s = 0.0;
            for a in 0..d {
                for b in 0..d {
                    s += g[a * d + b] * p[a * d + x] * p[b * d + y];
                }
            }
            s
        });
        let omega_d = twist(&h, j, d);
        let kahler_form = twist(&self.g, j, d);
        StructureTensors {
            h,
            omega_d,
            kahler_form,
        }
    }

    /// Restriction of `g` to `E`, i.e. `g(p_E X, p_E Y)`.
    pub fn g_e(&self) -> Tensor {
        let d = self.dim();
        let g = self.g.entries();
        let pe = self.p_e();
        let p = pe.entries();
        Tensor::from_fn(d, Valence::covariant(2), |i| {
            let mut s = 0.0;
            for a in 0..d {
                for b in 0..d {
                    s += g[a * d + b] * p[a * d + i[0]] * p[b * d + i[1]];
                }
            }
            s
        })
    }

    /// `(X_D, |X_D|)`.
    pub fn project_d(&self, x: &[f64]) -> Result<(Vec<f64>, f64)> {
        let xd = self.apply(&self.p_d, x)?;
        let t = self.norm_sq(&xd)?.max(0.0).sqrt();
        Ok((xd, t))
    }

    /// `J X`.
    pub fn apply_j(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.apply(&self.j, x)
    }

    fn apply(&self, endo: &Tensor, x: &[f64]) -> Result<Vec<f64>> {
        Ok(endo.eval(&[x])?.vector().expect("(1,1) tensor").to_vec())
    }

    pub fn inner(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        Ok(self.g.eval(&[x, y])?.scalar().expect("(0,2) tensor"))
    }

    pub fn norm_sq(&self, x: &[f64]) -> Result<f64> {
        self.inner(x, x)
    }

    /// A g-unit vector drawn uniformly from the sphere.
    pub fn random_unit_vector(&self, rng: &mut Rng) -> Vec<f64> {
        let d = self.dim();
        loop {
            let canon: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
            let norm = canon.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-8 {
                let v = nalgebra::DVector::from_iterator(d, canon.iter().map(|x| x / norm));
                return (&self.basis_inverse * v).iter().copied().collect();
            }
        }
    }

    /// Converts canonical coordinates to working-basis coordinates.
    pub fn from_canonical(&self, x: &[f64]) -> Vec<f64> {
        let v = nalgebra::DVector::from_column_slice(x);
        (&self.basis_inverse * v).iter().copied().collect()
    }
}

/// `B(JX, Y)` for a bilinear form `B`.
fn twist(form: &Tensor, j: &[f64], d: usize) -> Tensor {
    let b = form.entries();
    Tensor::from_fn(d, Valence::covariant(2), |i| {
        (0..d).map(|a| j[a * d + i[0]] * b[a * d + i[1]]).sum()
    })
}

fn canonical_complex_structure(d: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(d, d);
    for i in (0..d).step_by(2) {
        j[(i + 1, i)] = 1.0;
        j[(i, i + 1)] = -1.0;
    }
    j
}

/// Haar-distributed `m × m` unitary via QR of a complex Gaussian matrix with
/// the diagonal phases of `R` divided out.
fn haar_unitary(m: usize, rng: &mut Rng) -> DMatrix<Complex<f64>> {
    let z = DMatrix::<Complex<f64>>::from_fn(m, m, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex::new(re, im)
    });
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..m {
        let rc = r[(c, c)];
        let phase = if rc.norm() > 0.0 {
            rc / rc.norm()
        } else {
            Complex::new(1.0, 0.0)
        };
        for row in 0..m {
            q[(row, c)] *= phase;
        }
    }
    q
}

/// Real `2n × 2n` realization of `diag(u_D, U_E)`. A complex entry `a + ib`
/// becomes the block `[[a, -b], [b, a]]`, which commutes with `J`.
fn random_block_unitary(n: usize, rng: &mut Rng) -> DMatrix<f64> {
    let d_phase = haar_unitary(1, rng)[(0, 0)];
    let e_block = haar_unitary(n - 1, rng);
    let complex = DMatrix::<Complex<f64>>::from_fn(n, n, |i, k| match (i, k) {
        (0, 0) => d_phase,
        (0, _) | (_, 0) => Complex::new(0.0, 0.0),
        _ => e_block[(i - 1, k - 1)],
    });
    DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let z = complex[(r / 2, c / 2)];
        match (r % 2, c % 2) {
            (0, 0) | (1, 1) => z.re,
            (0, 1) => -z.im,
            _ => z.im,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_invariants(s: &HermitianSpace) {
        let d = s.dim();
        let j = s.j().to_matrix().unwrap();
        let g = s.g().to_matrix().unwrap();
        let p = s.p_d().to_matrix().unwrap();
        let id = DMatrix::<f64>::identity(d, d);
        assert!((&j * &j + &id).abs().max() < 1e-12, "J^2 != -I");
        assert!((j.transpose() * &g * &j - &g).abs().max() < 1e-12, "g not J-invariant");
        assert!((&g - g.transpose()).abs().max() < 1e-12);
        assert!(nalgebra::Cholesky::new(g.clone()).is_some());
        assert!((&p * &p - &p).abs().max() < 1e-12, "p_D not idempotent");
        assert!((&j * &p - &p * &j).abs().max() < 1e-12, "D not J-invariant");
        assert!((p.trace() - 2.0).abs() < 1e-12);
        // g-self-adjoint projector is g-orthogonal
        assert!((&g * &p - p.transpose() * &g).abs().max() < 1e-12);
    }

    #[test]
    fn canonical_space_shapes() {
        let s = HermitianSpace::canonical(2).unwrap();
        assert_eq!(s.dim(), 4);
        assert_eq!(s.p_d().to_matrix().unwrap().trace(), 2.0);
        assert_invariants(&s);
        assert_invariants(&HermitianSpace::canonical(3).unwrap());
    }

    #[test]
    fn complex_dimension_one_is_rejected() {
        assert_eq!(
            HermitianSpace::canonical(1),
            Err(QchError::ComplexDimensionTooSmall(1))
        );
    }

    #[test]
    fn random_change_is_deterministic_and_adapted() {
        let s = HermitianSpace::canonical(3).unwrap();
        let a = s.random_adapted_change(11);
        let b = s.random_adapted_change(11);
        assert_eq!(a, b);
        assert_ne!(a.basis_map(), s.random_adapted_change(12).basis_map());
        assert_invariants(&a);
        let u = a.basis_map();
        let d = s.dim();
        assert!((u.transpose() * u - DMatrix::<f64>::identity(d, d)).abs().max() < 1e-12);
    }

    #[test]
    fn general_basis_keeps_invariants() {
        let n = 2;
        let b = DMatrix::from_fn(4, 4, |i, k| if i == k { 2.0 } else { 0.1 * (i + 2 * k) as f64 });
        let s = HermitianSpace::from_basis_map(n, b).unwrap();
        assert_invariants(&s);
    }

    #[test]
    fn omega_sign_in_canonical_basis() {
        // ω(e0, e1) = h(J e0, e1) = h(e1, e1) = 1
        let s = HermitianSpace::canonical(2).unwrap();
        let st = s.structure_tensors();
        assert_eq!(st.omega_d.get(&[0, 1]), 1.0);
        assert_eq!(st.omega_d.get(&[1, 0]), -1.0);
        assert_eq!(st.kahler_form.get(&[0, 1]), 1.0);
    }

    #[test]
    fn structure_forms_vanish_and_are_invariant() {
        let s = HermitianSpace::canonical(3).unwrap().random_adapted_change(5);
        let st = s.structure_tensors();
        let d = s.dim();
        let pe = s.p_e();
        let jm = s.j().to_matrix().unwrap();
        for form in [&st.h, &st.omega_d, &st.kahler_form] {
            let m = form.to_matrix().unwrap();
            assert!((jm.transpose() * &m * &jm - &m).abs().max() < 1e-12);
        }
        // h and ω kill E
        for c in 0..d {
            let mut e = vec![0.0; d];
            e[c] = 1.0;
            let xe = pe.eval(&[&e]).unwrap().vector().unwrap().to_vec();
            for k in 0..d {
                let mut y = vec![0.0; d];
                y[k] = 1.0;
                assert!(st.h.eval(&[&xe, &y]).unwrap().scalar().unwrap().abs() < 1e-12);
                assert!(st.omega_d.eval(&[&xe, &y]).unwrap().scalar().unwrap().abs() < 1e-12);
            }
        }
        let h = st.h.to_matrix().unwrap();
        let w = st.omega_d.to_matrix().unwrap();
        assert!((&w + w.transpose()).abs().max() < 1e-12);
        assert!((&h - h.transpose()).abs().max() < 1e-12);
        let eig = h.symmetric_eigen().eigenvalues;
        assert_eq!(eig.iter().filter(|l| **l > 1e-9).count(), 2);
        assert!(eig.iter().all(|l| *l > -1e-12));
    }

    #[test]
    fn kahler_form_is_j_invariant_on_random_vectors() {
        let s = HermitianSpace::canonical(4).unwrap();
        let st = s.structure_tensors();
        let mut rng = seeded_rng(3);
        for _ in 0..10 {
            let x = s.random_unit_vector(&mut rng);
            let y = s.random_unit_vector(&mut rng);
            let (jx, jy) = (s.apply_j(&x).unwrap(), s.apply_j(&y).unwrap());
            let lhs = st.kahler_form.eval(&[&jx, &jy]).unwrap().scalar().unwrap();
            let rhs = st.kahler_form.eval(&[&x, &y]).unwrap().scalar().unwrap();
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn projector_complement() {
        let s = HermitianSpace::canonical(2).unwrap().random_adapted_change(9);
        let pd = s.p_d().to_matrix().unwrap();
        let pe = s.p_e().to_matrix().unwrap();
        assert!((&pd + &pe - DMatrix::<f64>::identity(4, 4)).abs().max() < 1e-12);
        assert!((&pd * &pe).abs().max() < 1e-12);
    }

    #[test]
    fn project_d_examples() {
        let s = HermitianSpace::canonical(2).unwrap();
        assert_eq!(s.project_d(&[1.0, 0.0, 0.0, 0.0]).unwrap().1, 1.0);
        assert_eq!(s.project_d(&[0.0, 0.0, 0.3, -2.0]).unwrap().1, 0.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let (xd, t) = s.project_d(&[h, 0.0, h, 0.0]).unwrap();
        assert!((t - h).abs() < 1e-15);
        assert_eq!(xd, vec![h, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn random_unit_vectors_are_unit_in_any_basis() {
        let b = DMatrix::from_fn(6, 6, |i, k| if i == k { 1.5 } else { 0.2 * ((i + k) % 3) as f64 });
        let s = HermitianSpace::from_basis_map(3, b).unwrap();
        let mut rng = seeded_rng(1);
        for _ in 0..20 {
            let x = s.random_unit_vector(&mut rng);
            assert!((s.norm_sq(&x).unwrap() - 1.0).abs() < 1e-12);
        }
    }
}
