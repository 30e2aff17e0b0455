//! Integer lattices given by symmetric Gram matrices.
//!
//! Sign convention: `E8` is stored positive definite. The negative definite
//! copy that appears inside the K3 and Mukai lattices is `twist(E8, -1)`.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::ZMatrix;

#[derive(Clone, PartialEq, Eq)]
pub struct IntegerLattice {
    gram: ZMatrix,
    label: Option<String>,
}

/// A sublattice together with its basis in ambient coordinates (columns).
#[derive(Clone, Debug)]
pub struct Sublattice {
    pub basis: ZMatrix,
    pub lattice: IntegerLattice,
}

impl Sublattice {
    pub fn is_degenerate(&self) -> bool {
        self.lattice.is_degenerate()
    }
}

impl IntegerLattice {
    /// A nondegenerate lattice. Rejects non-square, non-symmetric and
    /// singular Gram matrices.
    pub fn new(gram: ZMatrix) -> Result<Self> {
        let l = Self::new_allow_degenerate(gram)?;
        l.ensure_nondegenerate()?;
        Ok(l)
    }

    /// Accepts singular Gram matrices. Algebraic operations on the result
    /// still fail with [`Error::DegenerateGram`].
    pub fn new_allow_degenerate(gram: ZMatrix) -> Result<Self> {
        if !gram.is_square() {
            return Err(Error::NotSquare {
                rows: gram.rows(),
                cols: gram.cols(),
            });
        }
        if !gram.is_symmetric() {
            return Err(Error::NotSymmetric);
        }
        Ok(IntegerLattice { gram, label: None })
    }

    pub fn from_rows<R: AsRef<[i64]>>(rows: &[R]) -> Result<Self> {
        Self::new(ZMatrix::from_rows(rows))
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn gram(&self) -> &ZMatrix {
        &self.gram
    }

    pub fn rank(&self) -> usize {
        self.gram.rows()
    }

    pub fn det(&self) -> BigInt {
        self.gram.det()
    }

    pub fn is_degenerate(&self) -> bool {
        self.det().is_zero()
    }

    pub fn ensure_nondegenerate(&self) -> Result<()> {
        if self.is_degenerate() {
            Err(Error::DegenerateGram)
        } else {
            Ok(())
        }
    }

    pub fn is_even(&self) -> bool {
        (0..self.rank()).all(|i| self.gram[(i, i)].is_even())
    }

    pub fn is_unimodular(&self) -> bool {
        self.det().abs().is_one()
    }

    pub fn inner(&self, x: &[BigInt], y: &[BigInt]) -> BigInt {
        let gy = self.gram.mul_vec(y);
        x.iter().zip(&gy).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self, x: &[BigInt]) -> BigInt {
        self.inner(x, x)
    }

    /// `(positive, negative, zero)` counts of the diagonalized form.
    pub fn signature_full(&self) -> (usize, usize, usize) {
        signature_of(&self.gram)
    }

    /// `(positive, negative)`; meaningful for nondegenerate lattices.
    pub fn signature(&self) -> (usize, usize) {
        let (p, n, _) = self.signature_full();
        (p, n)
    }

    pub fn is_positive_definite(&self) -> bool {
        self.signature_full() == (self.rank(), 0, 0)
    }

    pub fn is_negative_definite(&self) -> bool {
        self.signature_full() == (0, self.rank(), 0)
    }

    pub fn is_definite(&self) -> bool {
        self.rank() > 0 && (self.is_positive_definite() || self.is_negative_definite())
    }

    /// Block-diagonal orthogonal sum.
    pub fn direct_sum(&self, other: &IntegerLattice) -> IntegerLattice {
        let label = match (&self.label, &other.label) {
            (Some(a), Some(b)) => Some(format!("{a} + {b}")),
            _ => None,
        };
        IntegerLattice {
            gram: ZMatrix::block_diag(&[&self.gram, &other.gram]),
            label,
        }
    }

    pub fn direct_sum_all(parts: &[IntegerLattice]) -> IntegerLattice {
        let blocks: Vec<&ZMatrix> = parts.iter().map(|p| &p.gram).collect();
        let label = parts
            .iter()
            .map(|p| p.label.clone())
            .collect::<Option<Vec<_>>>()
            .map(|ls| ls.join(" + "));
        IntegerLattice {
            gram: ZMatrix::block_diag(&blocks),
            label,
        }
    }

    /// `L(k)`: every Gram entry multiplied by `k`.
    pub fn twist(&self, k: i64) -> Result<IntegerLattice> {
        if k == 0 {
            return Err(Error::ZeroTwist);
        }
        Ok(IntegerLattice {
            gram: self.gram.scale(&BigInt::from(k)),
            label: self.label.as_ref().map(|l| format!("{l}({k})")),
        })
    }

    /// Lattice with the negated form, `L(-1)`.
    pub fn negated(&self) -> IntegerLattice {
        self.twist(-1).expect("nonzero twist")
    }

    /// The sublattice spanned by the columns of `basis`, with induced form.
    pub fn sublattice(&self, basis: ZMatrix) -> Result<Sublattice> {
        if basis.rows() != self.rank() {
            return Err(Error::DimensionMismatch {
                expected: self.rank(),
                got: basis.rows(),
            });
        }
        let gram = &(&basis.transpose() * &self.gram) * &basis;
        Ok(Sublattice {
            lattice: IntegerLattice::new_allow_degenerate(gram)?,
            basis,
        })
    }

    /// `{x : <x, s> = 0 for all s in span}` on a saturated integer basis.
    ///
    /// The result may be degenerate (e.g. the complement of an isotropic
    /// vector in `U`); check [`Sublattice::is_degenerate`] before using it.
    pub fn orthogonal_complement(&self, span: &[Vec<BigInt>]) -> Result<Sublattice> {
        self.ensure_nondegenerate()?;
        for s in span {
            if s.len() != self.rank() {
                return Err(Error::DimensionMismatch {
                    expected: self.rank(),
                    got: s.len(),
                });
            }
        }
        if span.is_empty() {
            return self.sublattice(ZMatrix::identity(self.rank()));
        }
        let s = ZMatrix::from_columns(span);
        let constraints = &s.transpose() * &self.gram;
        let kernel = constraints.integer_kernel();
        self.sublattice(kernel)
    }

    /// `(1 / |det|)`-scaled adjugate: the Gram matrix inverse over `Q`.
    pub fn gram_inverse(&self) -> Result<Vec<Vec<BigRational>>> {
        self.gram.rational_inverse().ok_or(Error::DegenerateGram)
    }

    pub fn standard(name: &str) -> Result<IntegerLattice> {
        StandardLattice::parse(name).map(StandardLattice::build)
    }
}

/// Wire format: `{"label": ..., "gram": [[...]]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub gram: Vec<Vec<i64>>,
}

impl TryFrom<LatticeJson> for IntegerLattice {
    type Error = Error;

    fn try_from(j: LatticeJson) -> Result<Self> {
        let l = IntegerLattice::new(ZMatrix::try_from_rows(&j.gram)?)?;
        Ok(match j.label {
            Some(label) => l.with_label(label),
            None => l,
        })
    }
}

impl From<&IntegerLattice> for LatticeJson {
    fn from(l: &IntegerLattice) -> Self {
        LatticeJson {
            label: l.label.clone(),
            gram: l.gram.to_i64_rows().expect("entries fit in i64"),
        }
    }
}

impl fmt::Debug for IntegerLattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.label {
            Some(l) => write!(f, "{l} {}", self.gram),
            None => write!(f, "{}", self.gram),
        }
    }
}

/// Symmetric Gaussian elimination over `Q`, counting signs of the pivots.
fn signature_of(gram: &ZMatrix) -> (usize, usize, usize) {
    let n = gram.rows();
    let mut a: Vec<Vec<BigRational>> = (0..n)
        .map(|i| {
            gram.row(i)
                .iter()
                .cloned()
                .map(BigRational::from_integer)
                .collect()
        })
        .collect();
    let (mut pos, mut neg) = (0, 0);
    let mut active: Vec<usize> = (0..n).collect();
    while !active.is_empty() {
        let pivot = active.iter().copied().find(|&i| !a[i][i].is_zero());
        let p = match pivot {
            Some(p) => p,
            None => {
                // All diagonal entries vanish: x_i += x_j creates 2 a_ij there.
                let pair = active.iter().copied().find_map(|i| {
                    active
                        .iter()
                        .copied()
                        .find(|&j| j != i && !a[i][j].is_zero())
                        .map(|j| (i, j))
                });
                let Some((i, j)) = pair else { break };
                for k in 0..n {
                    let v = a[j][k].clone();
                    a[i][k] += v;
                }
                for k in 0..n {
                    let v = a[k][j].clone();
                    a[k][i] += v;
                }
                i
            }
        };
        let d = a[p][p].clone();
        if d.is_positive() {
            pos += 1;
        } else {
            neg += 1;
        }
        active.retain(|&i| i != p);
        for &i in &active {
            if a[i][p].is_zero() {
                continue;
            }
            let f = &a[i][p] / &d;
            for &k in &active {
                let v = &f * &a[p][k];
                a[i][k] -= v;
            }
        }
        for &i in &active {
            a[i][p] = BigRational::zero();
            a[p][i] = BigRational::zero();
        }
    }
    (pos, neg, n - pos - neg)
}

/// The named lattices the rest of the crate builds on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StandardLattice {
    /// Hyperbolic plane `[[0,1],[1,0]]`.
    U,
    /// Positive definite `E8` (Cartan matrix).
    E8,
    /// `E8(-1)`, negative definite.
    E8Minus,
    /// `U^3 + E8(-1)^2`, signature (3, 19).
    K3,
    /// `U^4 + E8(-1)^2`, signature (4, 20).
    Mukai,
}

impl StandardLattice {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "U" => Ok(Self::U),
            "E8" => Ok(Self::E8),
            "E8minus" | "E8(-1)" => Ok(Self::E8Minus),
            "K3" => Ok(Self::K3),
            "Mukai" => Ok(Self::Mukai),
            other => Err(Error::UnknownLattice(other.to_string())),
        }
    }

    pub fn build(self) -> IntegerLattice {
        match self {
            Self::U => hyperbolic_plane(),
            Self::E8 => e8(),
            Self::E8Minus => e8().negated().with_label("E8(-1)"),
            Self::K3 => {
                let u = hyperbolic_plane();
                let e = e8().negated().with_label("E8(-1)");
                IntegerLattice::direct_sum_all(&[u.clone(), u.clone(), u, e.clone(), e])
                    .with_label("K3")
            }
            Self::Mukai => {
                let u = hyperbolic_plane();
                let e = e8().negated().with_label("E8(-1)");
                IntegerLattice::direct_sum_all(&[u.clone(), u.clone(), u.clone(), u, e.clone(), e])
                    .with_label("Mukai")
            }
        }
    }
}

pub fn hyperbolic_plane() -> IntegerLattice {
    IntegerLattice::from_rows(&[[0, 1], [1, 0]])
        .expect("U is nondegenerate")
        .with_label("U")
}

/// Positive definite `E8`: Cartan matrix of the `T(2,3,5)` diagram, a chain
/// of seven nodes with the eighth attached to the fifth.
pub fn e8() -> IntegerLattice {
    let mut g = [[0i64; 8]; 8];
    for (i, row) in g.iter_mut().enumerate() {
        row[i] = 2;
    }
    for i in 0..6 {
        g[i][i + 1] = -1;
        g[i + 1][i] = -1;
    }
    g[4][7] = -1;
    g[7][4] = -1;
    IntegerLattice::from_rows(&g)
        .expect("E8 is nondegenerate")
        .with_label("E8")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn standard_lattices() {
        let u = IntegerLattice::standard("U").unwrap();
        assert_eq!(u.det(), BigInt::from(-1));
        assert_eq!(u.signature(), (1, 1));
        let e8 = IntegerLattice::standard("E8").unwrap();
        assert_eq!(e8.det(), BigInt::one());
        assert!(e8.is_positive_definite() && e8.is_even());
        let e8m = IntegerLattice::standard("E8minus").unwrap();
        assert_eq!(e8m.signature(), (0, 8));
        let k3 = IntegerLattice::standard("K3").unwrap();
        assert_eq!((k3.rank(), k3.det(), k3.signature()), (22, BigInt::from(-1), (3, 19)));
        let mukai = IntegerLattice::standard("Mukai").unwrap();
        assert_eq!((mukai.rank(), mukai.det(), mukai.signature()), (24, BigInt::one(), (4, 20)));
        assert!(matches!(IntegerLattice::standard("Leech"), Err(Error::UnknownLattice(_))));
    }

    #[test]
    fn sums_and_twists() {
        let u = hyperbolic_plane();
        let uu = u.direct_sum(&u);
        assert_eq!((uu.rank(), uu.det()), (4, BigInt::one()));
        let u2 = u.twist(2).unwrap();
        assert_eq!(u2.gram(), &ZMatrix::from_rows(&[[0, 2], [2, 0]]));
        assert_eq!(u2.det(), BigInt::from(-4));
        let enriques = u2.direct_sum(&e8().twist(2).unwrap());
        assert_eq!((enriques.rank(), enriques.det()), (10, BigInt::from(-1024)));
        assert_eq!(u.twist(0), Err(Error::ZeroTwist));
    }

    #[test]
    fn rejects_bad_grams() {
        assert_eq!(
            IntegerLattice::from_rows(&[[1, 2], [3, 4]]).unwrap_err(),
            Error::NotSymmetric
        );
        assert_eq!(
            IntegerLattice::from_rows(&[[1, 1], [1, 1]]).unwrap_err(),
            Error::DegenerateGram
        );
        assert!(IntegerLattice::new_allow_degenerate(ZMatrix::from_rows(&[[0]])).is_ok());
    }

    #[test]
    fn complement_in_u() {
        let u = hyperbolic_plane();
        let c = u.orthogonal_complement(&[big(&[1, 1])]).unwrap();
        assert_eq!(c.lattice.gram(), &ZMatrix::from_rows(&[[-2]]));
        let col = c.basis.column(0);
        assert!(col == big(&[1, -1]) || col == big(&[-1, 1]));

        let iso = u.orthogonal_complement(&[big(&[1, 0])]).unwrap();
        assert!(iso.is_degenerate());
        assert_eq!(iso.lattice.gram(), &ZMatrix::from_rows(&[[0]]));
    }

    #[test]
    fn complement_determinant_identity() {
        // |det L| * [L : S + K]^2 = |det S| * |det K|
        let pic = IntegerLattice::from_rows(&[[2, 5], [5, 2]]).unwrap();
        let ambient = pic.direct_sum(&hyperbolic_plane());
        let f1 = big(&[1, 0, 0, 0]);
        let k = ambient.orthogonal_complement(&[f1.clone()]).unwrap();
        assert_eq!(k.lattice.rank(), 3);
        let s = ambient.sublattice(ZMatrix::from_columns(&[f1])).unwrap();
        let joint = s.basis.hstack(&k.basis);
        let index = joint.det().abs();
        assert_eq!(
            ambient.det().abs() * &index * &index,
            s.lattice.det().abs() * k.lattice.det().abs()
        );
        assert_eq!(k.lattice.det(), BigInt::from(42));
    }

    #[test]
    fn signature_handles_zero_diagonal() {
        let l = IntegerLattice::from_rows(&[[0, 1, 0], [1, 0, 0], [0, 0, -2]]).unwrap();
        assert_eq!(l.signature(), (1, 2));
    }
}
