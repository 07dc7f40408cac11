//! Curvature operators acting as derivations of the tensor algebra.
//!
//! For an endomorphism `A` and a `(0,k)` tensor `T`,
//! `(A·T)(X1..Xk) = −Σ_i T(X1, .., A Xi, .., Xk)`; a `(1,k)` tensor gets the
//! extra leading term `A(T(X1..Xk))`. A curvature tensor acts through the
//! endomorphisms `R(U,V)` defined by `g(R(U,V)X, W) = R(U,V,X,W)`, and
//! `(R.T)(X1..Xk, U, V) = (R(U,V)·T)(X1..Xk)`: the two new slots come last.

use rayon::prelude::*;

use crate::curvature::{build_pi, check_kahler_symmetries, CurvatureTensor};
use crate::error::{QchError, Result};
use crate::tensor::{apply_to_slot, Tensor, Valence};

/// Symmetry defects above this (relative) level trigger a warning in [`curv_dot`].
const KAHLER_WARN_TOL: f64 = 1e-10;

/// Derivation action of a single `(1,1)` endomorphism on `t`.
pub fn endo_derive(endo: &Tensor, t: &Tensor) -> Result<Tensor> {
    if endo.valence() != Valence::mixed(1) {
        return Err(QchError::ShapeMismatch(format!(
            "derivation needs a (1,1) endomorphism, got {}",
            endo.valence()
        )));
    }
    if endo.dim() != t.dim() {
        return Err(QchError::DimensionMismatch {
            expected: endo.dim(),
            got: t.dim(),
        });
    }
    let d = t.dim();
    let data = derive_entries(endo.entries(), t.entries(), d, t.valence());
    Tensor::from_entries(d, t.valence(), data)
}

fn derive_entries(a: &[f64], t: &[f64], d: usize, valence: Valence) -> Vec<f64> {
    let rank = valence.rank();
    // covariant slot: new_x = -Σ_a A[a][x] old_a, i.e. m[x][a] = -A[a][x]
    let co: Vec<f64> = (0..d * d).map(|f| -a[(f % d) * d + f / d]).collect();
    let mut out = vec![0.0; t.len()];
    for slot in 0..rank {
        let m: &[f64] = if slot < valence.upper { a } else { &co };
        let term = apply_to_slot(t, d, rank, slot, m);
        for (o, v) in out.iter_mut().zip(term) {
            *o += v;
        }
    }
    out
}

/// The endomorphism `R(U,V)` as a `(1,1)` tensor.
pub fn curvature_endomorphism(r: &CurvatureTensor, u: &[f64], v: &[f64]) -> Result<Tensor> {
    let raised = r.tensor().raise_first(r.space().g())?;
    let d = raised.dim();
    if u.len() != d || v.len() != d {
        return Err(QchError::DimensionMismatch {
            expected: d,
            got: u.len().min(v.len()),
        });
    }
    let e = raised.entries();
    Ok(Tensor::from_fn(d, Valence::mixed(1), |i| {
        let (a, x) = (i[0], i[1]);
        let mut s = 0.0;
        for p in 0..d {
            for q in 0..d {
                s += e[((a * d + p) * d + q) * d + x] * u[p] * v[q];
            }
        }
        s
    }))
}

/// `R.T`, with the `(U,V)` slots appended after the slots of `t`.
pub fn curv_dot(r: &CurvatureTensor, t: &Tensor) -> Result<Tensor> {
    let d = r.space().dim();
    if t.dim() != d {
        return Err(QchError::DimensionMismatch {
            expected: d,
            got: t.dim(),
        });
    }
    let symmetry = check_kahler_symmetries(r, KAHLER_WARN_TOL);
    if !symmetry.pass() {
        log::warn!(
            "curvature operand is not of Kähler type (max defect {:e}); result is best effort",
            symmetry.max_defect()
        );
    }
    let raised = r.tensor().raise_first(r.space().g())?;
    let re = raised.entries();
    let d3 = d * d * d;

    let blocks: Vec<Vec<f64>> = (0..d * d)
        .into_par_iter()
        .map(|uv| {
            let (u, v) = (uv / d, uv % d);
            // A[a][x] = R1[a][u][v][x]
            let endo: Vec<f64> = (0..d * d)
                .map(|f| re[(f / d) * d3 + (u * d + v) * d + f % d])
                .collect();
            derive_entries(&endo, t.entries(), d, t.valence())
        })
        .collect();

    let len = t.entries().len();
    let mut out = vec![0.0; len * d * d];
    for (uv, block) in blocks.iter().enumerate() {
        for (idx, value) in block.iter().enumerate() {
            out[idx * d * d + uv] = *value;
        }
    }
    Tensor::from_entries(
        d,
        Valence {
            upper: t.valence().upper,
            lower: t.valence().lower + 2,
        },
        out,
    )
}

/// `max_abs(R.R − f Π.R)` with Π built on the space of `r`.
pub fn pseudosymmetry_defect(r: &CurvatureTensor, f: f64) -> Result<f64> {
    let pi = build_pi(r.space());
    let rr = curv_dot(r, r.tensor())?;
    let pir = curv_dot(&pi, r.tensor())?;
    rr.max_abs_diff(&pir.scale(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::{build_phi, build_psi, QchBasis, QchCoefficients};
    use crate::space::{seeded_rng, HermitianSpace};
    use rand::Rng;
    use std::sync::Arc;

    fn space(n: usize, seed: u64) -> Arc<HermitianSpace> {
        Arc::new(HermitianSpace::canonical(n).unwrap().random_adapted_change(seed))
    }

    fn random_tensor(d: usize, valence: Valence, seed: u64) -> Tensor {
        let mut rng = seeded_rng(seed);
        Tensor::from_fn(d, valence, |_| rng.random_range(-1.0..1.0))
    }

    /// Slot-by-slot oracle: evaluates `(A·T)` on basis tuples via `eval`.
    fn derive_oracle(a: &Tensor, t: &Tensor) -> Tensor {
        let d = t.dim();
        let basis = |i: usize| {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            e
        };
        let apply = |x: &[f64]| a.eval(&[x]).unwrap().vector().unwrap().to_vec();
        let lower = t.valence().lower;
        Tensor::from_fn(d, t.valence(), |idx| {
            let (out, ins) = idx.split_at(t.valence().upper);
            let args: Vec<Vec<f64>> = ins.iter().map(|&i| basis(i)).collect();
            let val = |args: &[Vec<f64>]| {
                let refs: Vec<&[f64]> = args.iter().map(Vec::as_slice).collect();
                match t.eval(&refs).unwrap() {
                    crate::tensor::Evaluated::Scalar(s) => vec![s],
                    crate::tensor::Evaluated::Vector(v) => v,
                }
            };
            let mut total = 0.0;
            for s in 0..lower {
                let mut moved = args.clone();
                moved[s] = apply(&args[s]);
                let v = val(&moved);
                total -= if out.is_empty() { v[0] } else { v[out[0]] };
            }
            if let Some(&o) = out.first() {
                total += apply(&val(&args))[o];
            }
            total
        })
    }

    #[test]
    fn endo_derive_matches_slotwise_oracle() {
        let a = random_tensor(3, Valence::mixed(1), 1);
        for valence in [Valence::covariant(2), Valence::covariant(3), Valence::mixed(2)] {
            let t = random_tensor(3, valence, 2);
            let fast = endo_derive(&a, &t).unwrap();
            let slow = derive_oracle(&a, &t);
            assert!(fast.max_abs_diff(&slow).unwrap() < 1e-13, "{valence}");
        }
    }

    #[test]
    fn skew_endomorphism_annihilates_metric() {
        let s = space(2, 3);
        let m = random_tensor(4, Valence::mixed(1), 7).to_matrix().unwrap();
        let skew = Tensor::from_matrix(&(&m - m.transpose()), Valence::mixed(1)).unwrap();
        assert!(endo_derive(&skew, s.g()).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn j_derives_itself_to_zero() {
        let s = space(3, 4);
        assert!(endo_derive(s.j(), s.j()).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn endo_derive_shape_errors() {
        let a = Tensor::zeros(3, Valence::covariant(2));
        let t = Tensor::zeros(3, Valence::covariant(2));
        assert!(endo_derive(&a, &t).is_err());
        let a = Tensor::zeros(2, Valence::mixed(1));
        assert!(endo_derive(&a, &t).is_err());
    }

    #[test]
    fn leibniz_rule_on_tensor_products() {
        let a = random_tensor(4, Valence::mixed(1), 11);
        let s = random_tensor(4, Valence::covariant(2), 12);
        let t = random_tensor(4, Valence::covariant(1), 13);
        let lhs = endo_derive(&a, &s.tensor_product(&t).unwrap()).unwrap();
        let rhs = endo_derive(&a, &s)
            .unwrap()
            .tensor_product(&t)
            .unwrap()
            .add(&s.tensor_product(&endo_derive(&a, &t).unwrap()).unwrap())
            .unwrap();
        assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-11);
    }

    #[test]
    fn curv_dot_matches_endomorphism_route() {
        let s = space(2, 5);
        let r = QchBasis::new(&s).combine(QchCoefficients::new(0.7, -1.3, 2.1));
        let target = build_phi(&s);
        let full = curv_dot(&r, target.tensor()).unwrap();
        let mut rng = seeded_rng(9);
        let u = s.random_unit_vector(&mut rng);
        let v = s.random_unit_vector(&mut rng);
        let endo = curvature_endomorphism(&r, &u, &v).unwrap();
        let direct = endo_derive(&endo, target.tensor()).unwrap();
        let d = s.dim();
        // contract the trailing (U,V) slots of the full result against u, v
        let contracted = Tensor::from_fn(d, Valence::covariant(4), |i| {
            let mut acc = 0.0;
            for p in 0..d {
                for q in 0..d {
                    acc += full.get(&[i[0], i[1], i[2], i[3], p, q]) * u[p] * v[q];
                }
            }
            acc
        });
        assert!(contracted.max_abs_diff(&direct).unwrap() < 1e-12);
    }

    #[test]
    fn pi_and_phi_annihilate_structure() {
        let s = space(3, 6);
        let st = s.structure_tensors();
        for r in [build_pi(&s), build_phi(&s)] {
            assert!(curv_dot(&r, s.g()).unwrap().max_abs() < 1e-13);
            assert!(curv_dot(&r, s.j()).unwrap().max_abs() < 1e-13);
            assert!(curv_dot(&r, &st.kahler_form).unwrap().max_abs() < 1e-13);
        }
        let psi = build_psi(&s);
        assert!(curv_dot(&psi, psi.tensor()).unwrap().max_abs() < 1e-13);
    }

    #[test]
    fn derivation_results_are_antisymmetric_in_last_pair() {
        let s = space(2, 8);
        let r = QchBasis::new(&s).combine(QchCoefficients::new(1.0, 2.0, -0.5));
        let out = curv_dot(&r, r.tensor()).unwrap();
        let d = s.dim();
        let e = out.entries();
        let mut worst = 0.0f64;
        for head in 0..d.pow(4) {
            for u in 0..d {
                for v in 0..d {
                    let a = e[head * d * d + u * d + v];
                    let b = e[head * d * d + v * d + u];
                    worst = worst.max((a + b).abs());
                }
            }
        }
        assert!(worst < 1e-12);
    }

    #[test]
    fn pseudosymmetry_defect_examples() {
        let s = space(2, 2);
        let b = QchBasis::new(&s);
        assert!(pseudosymmetry_defect(&b.pi, 3.7).unwrap() < 1e-13);
        let r = b.combine(QchCoefficients::new(1.0, -2.0, 0.4));
        assert!(pseudosymmetry_defect(&r, 0.0).unwrap() < 1e-12);
        let c = QchCoefficients::new(-1.5, 3.0, 2.5);
        let r = b.combine(c);
        assert!(pseudosymmetry_defect(&r, c.pseudosymmetry_factor()).unwrap() < 1e-11);
    }

    #[test]
    fn curv_dot_is_deterministic() {
        let s = space(3, 1);
        let r = QchBasis::new(&s).combine(QchCoefficients::new(0.3, 0.9, -1.1));
        let a = curv_dot(&r, r.tensor()).unwrap();
        let b = curv_dot(&r, r.tensor()).unwrap();
        assert_eq!(a.entries(), b.entries());
    }
}
