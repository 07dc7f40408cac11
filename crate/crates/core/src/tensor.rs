//! Dense multi-index tensors over a small real vector space.
//!
//! A tensor of valence `(r, k)` with `r ∈ {0, 1}` stores `dim^(r + k)` entries
//! in row-major order. For `r = 1` the contravariant (output) slot is the
//! leading index, so `T[a][i1]..[ik]` is the `a`-th component of
//! `T(e_i1, .., e_ik)`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{QchError, Result};

/// Number of contravariant and covariant slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Valence {
    pub upper: usize,
    pub lower: usize,
}

impl Valence {
    pub const fn covariant(lower: usize) -> Self {
        Self { upper: 0, lower }
    }

    pub const fn mixed(lower: usize) -> Self {
        Self { upper: 1, lower }
    }

    pub const fn rank(&self) -> usize {
        self.upper + self.lower
    }
}

impl fmt::Display for Valence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.upper, self.lower)
    }
}

/// Result of evaluating a tensor on a full list of arguments.
#[derive(Debug, Clone, PartialEq)]
pub enum Evaluated {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl Evaluated {
    pub fn scalar(&self) -> Option<f64> {
        match self {
            Evaluated::Scalar(s) => Some(*s),
            Evaluated::Vector(_) => None,
        }
    }

    pub fn vector(&self) -> Option<&[f64]> {
        match self {
            Evaluated::Scalar(_) => None,
            Evaluated::Vector(v) => Some(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    dim: usize,
    valence: Valence,
    entries: Vec<f64>,
}

impl Tensor {
    pub fn zeros(dim: usize, valence: Valence) -> Self {
        assert!(dim > 0, "tensor dimension must be positive");
        assert!(valence.upper <= 1, "at most one contravariant slot");
        Self {
            dim,
            valence,
            entries: vec![0.0; dim.pow(valence.rank() as u32)],
        }
    }

    pub fn from_entries(dim: usize, valence: Valence, entries: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(QchError::ShapeMismatch("dimension must be positive".into()));
        }
        if valence.upper > 1 {
            return Err(QchError::ShapeMismatch(format!(
                "valence {valence} has more than one contravariant slot"
            )));
        }
        let expected = dim.pow(valence.rank() as u32);
        if entries.len() != expected {
            return Err(QchError::EntryCount {
                expected,
                got: entries.len(),
            });
        }
        if let Some(i) = entries.iter().position(|x| !x.is_finite()) {
            return Err(QchError::NonFinite(i));
        }
        Ok(Self {
            dim,
            valence,
            entries,
        })
    }

    /// Builds a tensor by evaluating `f` on every index tuple in row-major order.
    pub fn from_fn(dim: usize, valence: Valence, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut t = Self::zeros(dim, valence);
        let rank = valence.rank();
        let mut idx = vec![0usize; rank];
        for slot in t.entries.iter_mut() {
            *slot = f(&idx);
            // odometer increment, last index fastest
            for pos in (0..rank).rev() {
                idx[pos] += 1;
                if idx[pos] < dim {
                    break;
                }
                idx[pos] = 0;
            }
        }
        t
    }

    /// The identity endomorphism as a `(1,1)` tensor.
    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, Valence::mixed(1), |i| if i[0] == i[1] { 1.0 } else { 0.0 })
    }

    /// Wraps a square matrix as a rank-2 tensor. For a `(1,1)` valence the
    /// matrix acts on column vectors; for `(0,2)` entry `(i,j)` is `B(e_i, e_j)`.
    pub fn from_matrix(m: &DMatrix<f64>, valence: Valence) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(QchError::ShapeMismatch("matrix is not square".into()));
        }
        if valence.rank() != 2 {
            return Err(QchError::ShapeMismatch(format!(
                "matrix cannot represent valence {valence}"
            )));
        }
        let d = m.nrows();
        Self::from_entries(
            d,
            valence,
            (0..d * d).map(|f| m[(f / d, f % d)]).collect(),
        )
    }

    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.rank() != 2 {
            return Err(QchError::ShapeMismatch(format!(
                "valence {} is not a matrix",
                self.valence
            )));
        }
        let d = self.dim;
        Ok(DMatrix::from_fn(d, d, |i, j| self.entries[i * d + j]))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn valence(&self) -> Valence {
        self.valence
    }

    pub fn rank(&self) -> usize {
        self.valence.rank()
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<f64> {
        self.entries
    }

    fn flat_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank());
        idx.iter().fold(0, |acc, &i| {
            debug_assert!(i < self.dim);
            acc * self.dim + i
        })
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.entries[self.flat_index(idx)]
    }

    fn same_shape(&self, other: &Tensor) -> Result<()> {
        if self.dim != other.dim || self.valence != other.valence {
            return Err(QchError::ShapeMismatch(format!(
                "dim {} valence {} vs dim {} valence {}",
                self.dim, self.valence, other.dim, other.valence
            )));
        }
        Ok(())
    }

    /// Full multilinear contraction against one vector per covariant slot.
    pub fn eval(&self, args: &[&[f64]]) -> Result<Evaluated> {
        if args.len() != self.valence.lower {
            return Err(QchError::ArgumentCount {
                expected: self.valence.lower,
                got: args.len(),
            });
        }
        for a in args {
            if a.len() != self.dim {
                return Err(QchError::DimensionMismatch {
                    expected: self.dim,
                    got: a.len(),
                });
            }
        }
        let d = self.dim;
        let mut current = self.entries.clone();
        for arg in args.iter().rev() {
            current = current
                .chunks_exact(d)
                .map(|row| row.iter().zip(arg.iter()).map(|(t, x)| t * x).sum())
                .collect();
        }
        Ok(if self.valence.upper == 1 {
            Evaluated::Vector(current)
        } else {
            Evaluated::Scalar(current[0])
        })
    }

    pub fn frobenius_inner(&self, other: &Tensor) -> Result<f64> {
        self.same_shape(other)?;
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a * b)
            .sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn scale(&self, c: f64) -> Tensor {
        Tensor {
            dim: self.dim,
            valence: self.valence,
            entries: self.entries.iter().map(|x| c * x).collect(),
        }
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: f64, other: &Tensor) -> Result<Tensor> {
        self.same_shape(other)?;
        Ok(Tensor {
            dim: self.dim,
            valence: self.valence,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + c * b)
                .collect(),
        })
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.axpy(-1.0, other)
    }

    /// `max_abs(self - other)`.
    pub fn max_abs_diff(&self, other: &Tensor) -> Result<f64> {
        self.same_shape(other)?;
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn linear_combination(terms: &[(f64, &Tensor)]) -> Result<Tensor> {
        let (first_c, first) = terms
            .first()
            .ok_or_else(|| QchError::ShapeMismatch("empty linear combination".into()))?;
        terms[1..]
            .iter()
            .try_fold(first.scale(*first_c), |acc, (c, t)| acc.axpy(*c, t))
    }

    /// Tensor product. The left factor may carry the contravariant slot, which
    /// stays leading; the right factor must be covariant.
    pub fn tensor_product(&self, other: &Tensor) -> Result<Tensor> {
        if self.dim != other.dim {
            return Err(QchError::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        if other.valence.upper != 0 {
            return Err(QchError::ShapeMismatch(
                "right factor of a tensor product must be covariant".into(),
            ));
        }
        let mut entries = Vec::with_capacity(self.entries.len() * other.entries.len());
        for a in &self.entries {
            entries.extend(other.entries.iter().map(|b| a * b));
        }
        Ok(Tensor {
            dim: self.dim,
            valence: Valence {
                upper: self.valence.upper,
                lower: self.valence.lower + other.valence.lower,
            },
            entries,
        })
    }

    /// Raises the last covariant slot of a `(0,k)` tensor with `g⁻¹`, giving
    /// the `(1,k-1)` tensor `S` with `T(X1..Xk) = g(S(X1..X_{k-1}), Xk)`.
    pub fn raise_first(&self, g: &Tensor) -> Result<Tensor> {
        if self.valence.upper != 0 || self.valence.lower == 0 {
            return Err(QchError::ShapeMismatch(format!(
                "cannot raise a slot of valence {}",
                self.valence
            )));
        }
        let g_inv = metric_inverse(g, self.dim)?;
        let d = self.dim;
        let k = self.valence.lower;
        let rest = d.pow((k - 1) as u32);
        let mut entries = vec![0.0; self.entries.len()];
        for a in 0..d {
            for r in 0..rest {
                let row = &self.entries[r * d..(r + 1) * d];
                entries[a * rest + r] = row.iter().enumerate().map(|(w, t)| t * g_inv[(w, a)]).sum();
            }
        }
        Ok(Tensor {
            dim: d,
            valence: Valence::mixed(k - 1),
            entries,
        })
    }

    /// Inverse of [`Tensor::raise_first`]: pairs the output slot with `g` and
    /// appends it as the last covariant slot.
    pub fn lower_output(&self, g: &Tensor) -> Result<Tensor> {
        if self.valence.upper != 1 {
            return Err(QchError::ShapeMismatch(format!(
                "valence {} has no output slot",
                self.valence
            )));
        }
        check_metric_shape(g, self.dim)?;
        let d = self.dim;
        let rest = d.pow(self.valence.lower as u32);
        let mut entries = vec![0.0; self.entries.len()];
        for r in 0..rest {
            for w in 0..d {
                entries[r * d + w] = (0..d)
                    .map(|a| self.entries[a * rest + r] * g.entries[a * d + w])
                    .sum();
            }
        }
        Ok(Tensor {
            dim: d,
            valence: Valence::covariant(self.valence.lower + 1),
            entries,
        })
    }

    /// Re-expresses the tensor in a new basis whose vectors are the columns of
    /// `basis` (in old coordinates); `inverse` must be `basis⁻¹`.
    pub fn change_basis(&self, basis: &DMatrix<f64>, inverse: &DMatrix<f64>) -> Result<Tensor> {
        let d = self.dim;
        if basis.shape() != (d, d) || inverse.shape() != (d, d) {
            return Err(QchError::ShapeMismatch("basis matrix has wrong size".into()));
        }
        let co: Vec<f64> = (0..d * d).map(|f| basis[(f % d, f / d)]).collect();
        let contra: Vec<f64> = (0..d * d).map(|f| inverse[(f / d, f % d)]).collect();
        let rank = self.rank();
        let mut entries = self.entries.clone();
        for slot in 0..rank {
            let m = if slot < self.valence.upper { &contra } else { &co };
            entries = apply_to_slot(&entries, d, rank, slot, m);
        }
        Ok(Tensor {
            dim: d,
            valence: self.valence,
            entries,
        })
    }

    /// Serializes as a three-line text record (`dim=`, `valence=`, `entries=`).
    pub fn to_record(&self) -> String {
        let values: Vec<String> = self.entries.iter().map(|x| format!("{x:.16e}")).collect();
        format!(
            "dim={}\nvalence={},{}\nentries={}\n",
            self.dim,
            self.valence.upper,
            self.valence.lower,
            values.join(" ")
        )
    }
}

impl fmt::Display for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_record())
    }
}

impl FromStr for Tensor {
    type Err = QchError;

    fn from_str(s: &str) -> Result<Self> {
        let mut dim = None;
        let mut valence = None;
        let mut entries = None;
        for line in s.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| QchError::Parse(format!("missing '=' in {line:?}")))?;
            match key.trim() {
                "dim" => {
                    dim = Some(
                        value
                            .trim()
                            .parse::<usize>()
                            .map_err(|e| QchError::Parse(format!("dim: {e}")))?,
                    )
                }
                "valence" => {
                    let (u, l) = value
                        .split_once(',')
                        .ok_or_else(|| QchError::Parse("valence must be 'upper,lower'".into()))?;
                    let parse = |x: &str| {
                        x.trim()
                            .parse::<usize>()
                            .map_err(|e| QchError::Parse(format!("valence: {e}")))
                    };
                    valence = Some(Valence {
                        upper: parse(u)?,
                        lower: parse(l)?,
                    });
                }
                "entries" => {
                    entries = Some(
                        value
                            .split_whitespace()
                            .map(|x| {
                                x.parse::<f64>()
                                    .map_err(|e| QchError::Parse(format!("entry {x:?}: {e}")))
                            })
                            .collect::<Result<Vec<f64>>>()?,
                    )
                }
                // extra fields (e.g. a name) are carried by callers
                _ => {}
            }
        }
        Tensor::from_entries(
            dim.ok_or_else(|| QchError::Parse("missing dim".into()))?,
            valence.ok_or_else(|| QchError::Parse("missing valence".into()))?,
            entries.ok_or_else(|| QchError::Parse("missing entries".into()))?,
        )
    }
}

/// `new[.., j, ..] = Σ_i m[j*d + i] * old[.., i, ..]` on the given slot.
pub(crate) fn apply_to_slot(entries: &[f64], d: usize, rank: usize, slot: usize, m: &[f64]) -> Vec<f64> {
    let stride = d.pow((rank - 1 - slot) as u32);
    let block = stride * d;
    let mut out = vec![0.0; entries.len()];
    for (chunk_out, chunk_in) in out.chunks_exact_mut(block).zip(entries.chunks_exact(block)) {
        for j in 0..d {
            for i in 0..d {
                let c = m[j * d + i];
                if c == 0.0 {
                    continue;
                }
                let src = &chunk_in[i * stride..(i + 1) * stride];
                let dst = &mut chunk_out[j * stride..(j + 1) * stride];
                for (o, s) in dst.iter_mut().zip(src) {
                    *o += c * s;
                }
            }
        }
    }
    out
}

fn check_metric_shape(g: &Tensor, dim: usize) -> Result<()> {
    if g.valence != Valence::covariant(2) {
        return Err(QchError::ShapeMismatch(format!(
            "metric must have valence (0,2), got {}",
            g.valence
        )));
    }
    if g.dim != dim {
        return Err(QchError::DimensionMismatch {
            expected: dim,
            got: g.dim,
        });
    }
    Ok(())
}

/// Inverse of a symmetric positive-definite `(0,2)` metric.
pub(crate) fn metric_inverse(g: &Tensor, dim: usize) -> Result<DMatrix<f64>> {
    check_metric_shape(g, dim)?;
    let m = g.to_matrix()?;
    let scale = g.max_abs();
    if (&m - m.transpose()).abs().max() > 1e-12 * (1.0 + scale) {
        return Err(QchError::SingularMetric);
    }
    let chol = nalgebra::Cholesky::new(m).ok_or(QchError::SingularMetric)?;
    Ok(chol.inverse())
}
