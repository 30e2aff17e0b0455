//! Even binary lattices `[[2a, b], [b, 2c]]`, i.e. classical forms
//! `a x^2 + b x y + c y^2` of discriminant `b^2 - 4ac = -det`.
//!
//! Enumeration is indexed by the Gram determinant `det = 4ac - b^2`; the
//! classical discriminant is `-det`. A positive definite form is reduced when
//! `|b| <= a <= c`, with `b >= 0` whenever `|b| = a` or `a = c`. Reduced
//! forms are in bijection with proper equivalence classes, so `(a, b, c)` and
//! `(a, -b, c)` are listed separately; they are isometric as lattices.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Roots;
use num_rational::BigRational;
use num_traits::Signed;
use serde::Serialize;

use crate::discriminant::{DiscriminantForm, DEFAULT_ORDER_LIMIT};
use crate::error::{Error, Result};
use crate::isometry::{
    is_isometric_definite, stable_equivalence_check, GenusVerdict, IsometryVerdict,
    DEFAULT_SEARCH_BUDGET,
};
use crate::lattice::IntegerLattice;
use crate::matrix::ZMatrix;
use crate::rational::format_rational;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct BinaryEvenLattice {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Definiteness {
    Positive,
    Negative,
    Indefinite,
    Degenerate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn factor(self) -> i64 {
        match self {
            Sign::Positive => 1,
            Sign::Negative => -1,
        }
    }
}

impl BinaryEvenLattice {
    pub const fn new(a: i64, b: i64, c: i64) -> Self {
        BinaryEvenLattice { a, b, c }
    }

    pub fn from_gram(g: [[i64; 2]; 2]) -> Result<Self> {
        if g[0][1] != g[1][0] {
            return Err(Error::NotSymmetric);
        }
        if g[0][0] % 2 != 0 || g[1][1] % 2 != 0 {
            return Err(Error::Invalid("binary lattice must be even".into()));
        }
        Ok(Self::new(g[0][0] / 2, g[0][1], g[1][1] / 2))
    }

    pub fn from_lattice(l: &IntegerLattice) -> Result<Self> {
        if l.rank() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: l.rank() });
        }
        let g = l.gram().to_i64_rows().ok_or_else(|| Error::Invalid("entries too large".into()))?;
        Self::from_gram([[g[0][0], g[0][1]], [g[1][0], g[1][1]]])
    }

    pub fn gram(&self) -> [[i64; 2]; 2] {
        [[2 * self.a, self.b], [self.b, 2 * self.c]]
    }

    pub fn to_lattice(&self) -> IntegerLattice {
        IntegerLattice::new_allow_degenerate(ZMatrix::from_rows(&self.gram())).expect("symmetric")
    }

    pub fn det(&self) -> i64 {
        4 * self.a * self.c - self.b * self.b
    }

    pub fn negated(&self) -> Self {
        Self::new(-self.a, -self.b, -self.c)
    }

    pub fn definiteness(&self) -> Definiteness {
        let d = self.det();
        match d {
            0 => Definiteness::Degenerate,
            d if d < 0 => Definiteness::Indefinite,
            _ if self.a > 0 => Definiteness::Positive,
            _ => Definiteness::Negative,
        }
    }

    /// Reduction test for a positive definite form.
    pub fn is_reduced(&self) -> bool {
        let (a, b, c) = (self.a, self.b, self.c);
        self.definiteness() == Definiteness::Positive
            && b.abs() <= a
            && a <= c
            && (b >= 0 || (b.abs() != a && a != c))
    }

    /// Value of the lattice norm at `(x, y)`.
    pub fn eval(&self, x: i64, y: i64) -> i64 {
        2 * self.a * x * x + 2 * self.b * x * y + 2 * self.c * y * y
    }
}

impl fmt::Debug for BinaryEvenLattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let g = self.gram();
        write!(f, "[[{}, {}], [{}, {}]]", g[0][0], g[0][1], g[1][0], g[1][1])
    }
}

impl fmt::Display for BinaryEvenLattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Output of [`gauss_reduce`]: `W^T (s G) W = reduced` with `s = -1` iff
/// `negated`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Reduction {
    pub reduced: BinaryEvenLattice,
    pub basis_change: [[i64; 2]; 2],
    pub negated: bool,
}

impl Reduction {
    pub fn verify(&self, input: &BinaryEvenLattice) -> bool {
        let g = if self.negated { input.negated() } else { *input };
        let w = ZMatrix::from_rows(&self.basis_change);
        let gram = ZMatrix::from_rows(&g.gram());
        let out = &(&w.transpose() * &gram) * &w;
        w.det().abs() == BigInt::from(1)
            && out == ZMatrix::from_rows(&self.reduced.gram())
            && self.reduced.is_reduced()
    }
}

fn mat_mul(x: [[i64; 2]; 2], y: [[i64; 2]; 2]) -> [[i64; 2]; 2] {
    let mut out = [[0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
        }
    }
    out
}

/// Gauss reduction of a definite form, with the unimodular change of basis.
pub fn gauss_reduce(l: &BinaryEvenLattice) -> Result<Reduction> {
    let (mut f, negated) = match l.definiteness() {
        Definiteness::Positive => (*l, false),
        Definiteness::Negative => (l.negated(), true),
        Definiteness::Indefinite => {
            return Err(Error::Precondition("indefinite binary form".into()))
        }
        Definiteness::Degenerate => return Err(Error::DegenerateGram),
    };
    let mut w = [[1, 0], [0, 1]];
    loop {
        // y -> y + k x brings b into (-a, a]
        let k = (f.a - f.b).div_euclid(2 * f.a);
        if k != 0 {
            f = BinaryEvenLattice::new(f.a, f.b + 2 * f.a * k, f.a * k * k + f.b * k + f.c);
            w = mat_mul(w, [[1, k], [0, 1]]);
        }
        if f.a > f.c || (f.a == f.c && f.b < 0) {
            f = BinaryEvenLattice::new(f.c, -f.b, f.a);
            w = mat_mul(w, [[0, -1], [1, 0]]);
            continue;
        }
        break;
    }
    Ok(Reduction {
        reduced: f,
        basis_change: w,
        negated,
    })
}

/// All reduced even binary lattices of determinant `det`, ordered by
/// `(a, |b|, b < 0)`, negated when `sign` is negative.
pub fn enumerate_even(det: u64, sign: Sign) -> Vec<BinaryEvenLattice> {
    let det = det as i64;
    let mut out = Vec::new();
    if det <= 0 {
        return out;
    }
    let a_max = (det / 3).sqrt();
    for a in 1..=a_max {
        for b in -a..=a {
            let num = det + b * b;
            if num % (4 * a) != 0 {
                continue;
            }
            let f = BinaryEvenLattice::new(a, b, num / (4 * a));
            if f.is_reduced() {
                out.push(f);
            }
        }
    }
    out.sort_by_key(|f| (f.a, f.b.abs(), f.b < 0));
    if sign == Sign::Negative {
        out.iter_mut().for_each(|f| *f = f.negated());
    }
    out
}

/// Smallest-first order: 0, 1, -1, 2, -2, ...
fn symmetric_range(bound: i64) -> impl Iterator<Item = i64> {
    std::iter::once(0).chain((1..=bound).flat_map(|k| [k, -k]))
}

/// Searches for a nonzero `(x, y)` with `eval(x, y) = n` inside the exact ellipse
/// bound `|y| <= sqrt(2 a n / det)`, `|x| <= sqrt(2 c n / det)`.
pub fn represents(l: &BinaryEvenLattice, n: i64) -> Result<Option<(i64, i64)>> {
    let (f, n) = match l.definiteness() {
        Definiteness::Positive => (*l, n),
        Definiteness::Negative => (l.negated(), -n),
        Definiteness::Indefinite => {
            return Err(Error::Precondition("indefinite form: unbounded search".into()))
        }
        Definiteness::Degenerate => return Err(Error::DegenerateGram),
    };
    if n <= 0 {
        return Ok(None);
    }
    let det = f.det();
    let y_bound = (2 * f.a * n / det).sqrt();
    let x_bound = (2 * f.c * n / det).sqrt();
    for y in symmetric_range(y_bound) {
        for x in symmetric_range(x_bound) {
            if f.eval(x, y) == n {
                return Ok(Some((x, y)));
            }
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CensusEntry {
    pub order: u64,
    pub value: String,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Genus {
    pub id: usize,
    pub members: Vec<BinaryEvenLattice>,
    /// `(element order, q mod 2, multiplicity)` over the discriminant group.
    pub fingerprint: Vec<CensusEntry>,
}

fn fingerprint(l: &BinaryEvenLattice) -> Result<Vec<CensusEntry>> {
    let d = DiscriminantForm::of(&l.to_lattice())?;
    Ok(d.value_census(DEFAULT_ORDER_LIMIT)?
        .into_iter()
        .map(|((order, value), count): ((u64, BigRational), usize)| CensusEntry {
            order,
            value: format_rational(&value),
            count,
        })
        .collect())
}

/// Partition of the reduced forms of determinant `det` into genera.
pub fn genus_partition(det: u64, sign: Sign) -> Result<Vec<Genus>> {
    let mut genera: Vec<Genus> = Vec::new();
    for f in enumerate_even(det, sign) {
        let lf = f.to_lattice();
        let mut placed = false;
        for g in genera.iter_mut() {
            let rep = g.members[0].to_lattice();
            if stable_equivalence_check(&rep, &lf)?.is_same() {
                g.members.push(f);
                placed = true;
                break;
            }
        }
        if !placed {
            genera.push(Genus {
                id: genera.len(),
                members: vec![f],
                fingerprint: fingerprint(&f)?,
            });
        }
    }
    Ok(genera)
}

/// Groups forms into lattice isometry classes (improper equivalence).
pub fn isometry_classes(forms: &[BinaryEvenLattice]) -> Result<Vec<Vec<BinaryEvenLattice>>> {
    let mut classes: Vec<Vec<BinaryEvenLattice>> = Vec::new();
    for &f in forms {
        let lf = f.to_lattice();
        let mut placed = false;
        for class in classes.iter_mut() {
            let verdict = is_isometric_definite(&class[0].to_lattice(), &lf, DEFAULT_SEARCH_BUDGET)?;
            match verdict {
                IsometryVerdict::Isometric(_) => {
                    class.push(f);
                    placed = true;
                    break;
                }
                IsometryVerdict::NotIsometric => {}
                IsometryVerdict::BudgetExceeded { nodes } => {
                    return Err(Error::Inconsistent(format!(
                        "rank-2 isometry search exceeded {nodes} nodes"
                    )))
                }
            }
        }
        if !placed {
            classes.push(vec![f]);
        }
    }
    Ok(classes)
}

/// `(proper, improper)` class numbers for determinant `det`.
pub fn class_numbers(det: u64) -> Result<(usize, usize)> {
    let forms = enumerate_even(det, Sign::Positive);
    Ok((forms.len(), isometry_classes(&forms)?.len()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FormRow {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub det: i64,
    pub reduced: bool,
    pub represents_2: bool,
    pub genus_id: usize,
}

/// One row per reduced form; `represents_2` means `sign * 2` is represented.
pub fn form_table(det: u64, sign: Sign) -> Result<Vec<FormRow>> {
    let mut rows = Vec::new();
    for g in genus_partition(det, sign)? {
        for f in &g.members {
            rows.push(FormRow {
                a: f.a,
                b: f.b,
                c: f.c,
                det: f.det(),
                reduced: sign == Sign::Negative && f.negated().is_reduced() || f.is_reduced(),
                represents_2: represents(f, 2 * sign.factor())?.is_some(),
                genus_id: g.id,
            });
        }
    }
    rows.sort_by_key(|r| (r.a.abs(), r.b.abs(), r.b * sign.factor() < 0));
    Ok(rows)
}

/// Two negative definite forms in one genus, not isometric, neither
/// representing `-2`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MazurPair {
    pub det: u64,
    pub a: BinaryEvenLattice,
    pub b: BinaryEvenLattice,
}

/// Scans determinants for [`MazurPair`]s. Each isometry class contributes
/// its first reduced representative; every emitted pair is re-verified.
pub fn mazur_search(dets: impl IntoIterator<Item = u64>) -> Result<Vec<MazurPair>> {
    let mut out = Vec::new();
    for det in dets {
        for genus in genus_partition(det, Sign::Negative)? {
            let reps: Vec<BinaryEvenLattice> = isometry_classes(&genus.members)?
                .into_iter()
                .map(|c| c[0])
                .filter(|f| matches!(represents(f, -2), Ok(None)))
                .collect();
            for i in 0..reps.len() {
                for j in i + 1..reps.len() {
                    let pair = MazurPair { det, a: reps[i], b: reps[j] };
                    if verify_mazur_pair(&pair)? {
                        out.push(pair);
                    }
                }
            }
        }
    }
    Ok(out)
}

pub fn verify_mazur_pair(p: &MazurPair) -> Result<bool> {
    let (la, lb) = (p.a.to_lattice(), p.b.to_lattice());
    let no_roots = represents(&p.a, -2)?.is_none() && represents(&p.b, -2)?.is_none();
    let distinct = is_isometric_definite(&la, &lb, DEFAULT_SEARCH_BUDGET)? == IsometryVerdict::NotIsometric;
    let same_genus = matches!(stable_equivalence_check(&la, &lb)?, GenusVerdict::SameGenus(_));
    Ok(no_roots && distinct && same_genus && p.a.definiteness() == Definiteness::Negative)
}
