//! Cyclic actions on the Mukai lattice `U^4 + E8(-1)^2`: validation, the
//! factorization `N = n m`, trace sequences, necessary conditions for
//! equivariant derived equivalence, and discriminant-group actions.
//!
//! The generator multiplies the holomorphic 2-form by `zeta_N^s`. That datum
//! depends on the Hodge structure, so `s` is declared, not derived.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::discriminant::{DiscriminantForm, FormComparison, DEFAULT_ORDER_LIMIT};
use crate::error::{Error, Result};
use crate::lattice::{hyperbolic_plane, e8, IntegerLattice, StandardLattice, Sublattice};
use crate::lefschetz::{divisors, fixed_points_guaranteed, nikulin_fixed_points, orbit_counts};
use crate::matrix::ZMatrix;

pub const MUKAI_RANK: usize = 24;

/// Action restricted to a declared Picard sublattice.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PicAction {
    pub gram: ZMatrix,
    pub matrix: ZMatrix,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct K3Action {
    pub order: u64,
    pub s: i64,
    pub mukai_matrix: ZMatrix,
    pub pic: Option<PicAction>,
}

/// Wire format of a [`K3Action`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionJson {
    #[serde(rename = "N")]
    pub n: u64,
    pub s: i64,
    pub mukai_matrix: Vec<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pic: Option<PicJson>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicJson {
    pub gram: Vec<Vec<i64>>,
    pub matrix: Vec<Vec<i64>>,
}

impl TryFrom<ActionJson> for K3Action {
    type Error = Error;

    fn try_from(j: ActionJson) -> Result<Self> {
        let pic = match j.pic {
            Some(p) => Some(PicAction {
                gram: ZMatrix::try_from_rows(&p.gram)?,
                matrix: ZMatrix::try_from_rows(&p.matrix)?,
            }),
            None => None,
        };
        Ok(K3Action {
            order: j.n,
            s: j.s,
            mukai_matrix: ZMatrix::try_from_rows(&j.mukai_matrix)?,
            pic,
        })
    }
}

impl From<&K3Action> for ActionJson {
    fn from(a: &K3Action) -> Self {
        let rows = |m: &ZMatrix| m.to_i64_rows().expect("entries fit in i64");
        ActionJson {
            n: a.order,
            s: a.s,
            mukai_matrix: rows(&a.mukai_matrix),
            pic: a.pic.as_ref().map(|p| PicJson {
                gram: rows(&p.gram),
                matrix: rows(&p.matrix),
            }),
        }
    }
}

/// Wire format for an action known only through its traces:
/// `{"N": 8, "s": 4, "traces": {"1": 0, "2": 4, "4": 8}}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeclaredTraces {
    #[serde(rename = "N")]
    pub n: u64,
    pub s: i64,
    pub traces: BTreeMap<u64, i64>,
}

impl DeclaredTraces {
    pub fn invariants(&self) -> Result<ActionInvariants> {
        ActionInvariants::from_traces(self.n, self.s, TraceSequence::new(self.n, self.traces.clone())?)
    }
}

pub fn mukai_lattice() -> IntegerLattice {
    StandardLattice::Mukai.build()
}

/// Exact multiplicative order of a square matrix, if it is at most `bound`.
pub fn matrix_order(m: &ZMatrix, bound: u64) -> Option<u64> {
    let mut p = m.clone();
    for k in 1..=bound {
        if p.is_identity() {
            return Some(k);
        }
        p = &p * m;
    }
    None
}

fn has_exact_order(m: &ZMatrix, n: u64) -> bool {
    if n == 0 || !m.pow(n).is_identity() {
        return false;
    }
    crate::discriminant::factorize(n)
        .into_iter()
        .all(|(p, _)| !m.pow(n / p).is_identity())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Validation {
    pub violations: Vec<String>,
}

impl Validation {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

fn preserves(gram: &ZMatrix, m: &ZMatrix) -> bool {
    &(&m.transpose() * gram) * m == *gram
}

pub fn validate_action(a: &K3Action) -> Validation {
    let mut v = Vec::new();
    let m = &a.mukai_matrix;
    if a.order == 0 {
        v.push("order N must be positive".to_string());
    }
    if a.s < 0 || (a.order > 0 && a.s >= a.order as i64) {
        v.push(format!("exponent s = {} outside 0..N", a.s));
    }
    if m.rows() != MUKAI_RANK || m.cols() != MUKAI_RANK {
        v.push(format!("mukai_matrix is {}x{}, expected 24x24", m.rows(), m.cols()));
    } else {
        if !preserves(mukai_lattice().gram(), m) {
            v.push("mukai_matrix does not preserve the Mukai pairing".into());
        }
        if a.order > 0 && !has_exact_order(m, a.order) {
            let actual = matrix_order(m, 1 << 12)
                .map_or_else(|| "infinite or large".to_string(), |o| o.to_string());
            v.push(format!("order is {actual}, not {}", a.order));
        }
    }
    if let Some(p) = &a.pic {
        if !p.gram.is_square() || !p.gram.is_symmetric() {
            v.push("pic gram is not a symmetric square matrix".into());
        } else if p.matrix.rows() != p.gram.rows() || p.matrix.cols() != p.gram.rows() {
            v.push("pic matrix size differs from pic gram".into());
        } else {
            if !preserves(&p.gram, &p.matrix) {
                v.push("pic matrix does not preserve the pic pairing".into());
            }
            if a.order > 0 && !p.matrix.pow(a.order).is_identity() {
                v.push("pic matrix order does not divide N".into());
            }
        }
    }
    Validation { violations: v }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActionKind {
    Trivial,
    Symplectic,
    PurelyNonsymplectic,
    Mixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factorization {
    pub n: u64,
    pub m: u64,
    pub kind: ActionKind,
}

/// `m = N / gcd(N, s)` is the order of the 2-form eigenvalue; `n = N / m`
/// is the order of the symplectic kernel.
pub fn factorization(order: u64, s: i64) -> Result<Factorization> {
    if order == 0 {
        return Err(Error::Invalid("order N must be positive".into()));
    }
    let g = (s.rem_euclid(order as i64) as u64).gcd(&order);
    let m = order / g;
    let n = order / m;
    let kind = match (n, m) {
        (1, 1) => ActionKind::Trivial,
        (_, 1) => ActionKind::Symplectic,
        (1, _) => ActionKind::PurelyNonsymplectic,
        _ => ActionKind::Mixed,
    };
    Ok(Factorization { n, m, kind })
}

/// Factorization of `sigma^r`: `m' = m / gcd(m, r)`.
pub fn power_factorization(order: u64, s: i64, r: u64) -> Result<Factorization> {
    let g = order.gcd(&r);
    let sub_order = order / g;
    factorization(sub_order, (s * (r / g) as i64).rem_euclid(sub_order as i64))
}

/// `chi(sigma^r)` for every `r | N`; `r = N` gives 24.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceSequence {
    pub order: u64,
    pub values: BTreeMap<u64, i64>,
}

impl TraceSequence {
    pub fn new(order: u64, values: BTreeMap<u64, i64>) -> Result<Self> {
        if order == 0 {
            return Err(Error::Invalid("order N must be positive".into()));
        }
        let mut values = values;
        values.entry(order).or_insert(MUKAI_RANK as i64);
        for &r in values.keys() {
            if r == 0 || order % r != 0 {
                return Err(Error::Invalid(format!("{r} does not divide {order}")));
            }
        }
        if let Some(missing) = divisors(order).into_iter().find(|r| !values.contains_key(r)) {
            return Err(Error::Invalid(format!("trace of sigma^{missing} missing")));
        }
        Ok(TraceSequence { order, values })
    }

    /// `chi(sigma^k)` for any integer `k`, via `gcd(k, N)`.
    pub fn chi(&self, k: u64) -> i64 {
        let g = if k % self.order == 0 { self.order } else { k.gcd(&self.order) };
        self.values[&g]
    }

    /// Multiplicity of each rational irreducible `Q(zeta_d)`, `d | N`:
    /// `(1 / (N phi(d))) sum_k chi(sigma^k) c_d(k)` with Ramanujan sums `c_d`.
    pub fn rational_multiplicities(&self) -> BTreeMap<u64, BigRational> {
        let n = self.order;
        divisors(n)
            .into_iter()
            .map(|d| {
                let phi = crate::cyclotomic::euler_phi(d) as i64;
                let sum: i64 = (0..n).map(|k| self.chi(k) * ramanujan_sum(d, k)).sum();
                (d, BigRational::new(BigInt::from(sum), BigInt::from(n as i64 * phi)))
            })
            .collect()
    }
}

/// `c_d(k)`: sum of `xi^k` over the primitive `d`-th roots of unity.
pub fn ramanujan_sum(d: u64, k: u64) -> i64 {
    let g = d.gcd(&k);
    divisors(g)
        .into_iter()
        .map(|e| crate::lefschetz::mobius(d / e) * e as i64)
        .sum()
}

pub fn trace_sequence(a: &K3Action) -> Result<TraceSequence> {
    let mut values = BTreeMap::new();
    for r in divisors(a.order) {
        let t = a.mukai_matrix.pow(r).trace();
        values.insert(r, t.to_i64().ok_or_else(|| Error::Invalid("trace too large".into()))?);
    }
    TraceSequence::new(a.order, values)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GateCheck {
    pub rule: String,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GateReport {
    pub checks: Vec<GateCheck>,
    pub passed: bool,
}

/// Necessary conditions on a trace sequence of an action with 2-form
/// order `m`: bounded traces, point counts for powers with a nontrivial
/// symplectic part, the symplectic table on symplectic powers, orbit
/// counting when every proper power has isolated fixed points, and
/// integrality of the rational character.
pub fn trace_gate(traces: &TraceSequence, m: u64) -> Result<GateReport> {
    let order = traces.order;
    if m == 0 || order % m != 0 {
        return Err(Error::Invalid(format!("m = {m} does not divide N = {order}")));
    }
    let mut checks = Vec::new();
    let mut push = |rule: String, ok: bool| checks.push(GateCheck { rule, ok });
    let mut all_isolated = true;
    for r in divisors(order) {
        let chi = traces.values[&r];
        push(format!("|chi(sigma^{r})| <= 24"), chi.abs() <= 24);
        if r == order {
            push(format!("chi(sigma^{order}) = 24"), chi == MUKAI_RANK as i64);
            continue;
        }
        let sub_order = order / r;
        let m_r = m / m.gcd(&r);
        let n_r = sub_order / m_r;
        if n_r >= 2 {
            push(format!("chi(sigma^{r}) = {chi} is a point count"), chi >= 0);
        } else {
            all_isolated = false;
        }
        if m_r == 1 {
            let want = nikulin_fixed_points(sub_order);
            push(
                match want {
                    Some(c) => format!("symplectic sigma^{r} of order {sub_order} has {c} fixed points"),
                    None => format!("symplectic sigma^{r}: no symplectic automorphism of order {sub_order}"),
                },
                want == Some(chi as u64),
            );
        }
    }
    if all_isolated {
        let orbits = orbit_counts(order, &traces.values);
        for (r, e) in orbits {
            push(
                format!("{e} points with orbit size {r}: nonnegative multiple of {r}"),
                e >= 0 && e % r as i64 == 0,
            );
        }
    }
    for (d, a) in traces.rational_multiplicities() {
        push(
            format!("multiplicity {a} of Q(zeta_{d}) is a nonnegative integer"),
            a.is_integer() && !a.is_negative(),
        );
    }
    let passed = checks.iter().all(|c| c.ok);
    Ok(GateReport { checks, passed })
}

/// Invariants that equivariantly derived equivalent actions must share.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ActionInvariants {
    pub order: u64,
    pub factorization: Factorization,
    pub traces: TraceSequence,
    /// Characteristic polynomial of the Mukai action, constant term first;
    /// absent when only traces were declared.
    pub charpoly: Option<Vec<String>>,
    pub fixed_points_guaranteed: bool,
    /// Fixed-point counts of the powers whose fixed locus is finite.
    pub point_counts: BTreeMap<u64, i64>,
}

impl ActionInvariants {
    pub fn from_traces(order: u64, s: i64, traces: TraceSequence) -> Result<Self> {
        let f = factorization(order, s)?;
        let guaranteed = fixed_points_guaranteed(f.n, f.m)?.guaranteed
            || traces.values[&1] > 0;
        let mut point_counts = BTreeMap::new();
        for r in divisors(order).into_iter().filter(|&r| r < order) {
            if power_factorization(order, s, r)?.n >= 2 {
                point_counts.insert(r, traces.values[&r]);
            }
        }
        Ok(ActionInvariants {
            order,
            factorization: f,
            traces,
            charpoly: None,
            fixed_points_guaranteed: guaranteed,
            point_counts,
        })
    }

    pub fn from_action(a: &K3Action) -> Result<Self> {
        let mut inv = Self::from_traces(a.order, a.s, trace_sequence(a)?)?;
        inv.charpoly = Some(
            a.mukai_matrix
                .characteristic_polynomial()
                .iter()
                .map(|c| c.to_string())
                .collect(),
        );
        Ok(inv)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InvariantCheck {
    pub invariant: String,
    pub left: String,
    pub right: String,
    pub matches: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PartnerReport {
    pub checks: Vec<InvariantCheck>,
    /// All necessary invariants agree. Sufficiency is not claimed.
    pub compatible: bool,
}

impl PartnerReport {
    pub fn first_mismatch(&self) -> Option<&InvariantCheck> {
        self.checks.iter().find(|c| !c.matches)
    }
}

/// Compares the derived invariants of two actions of the same group.
pub fn derived_partner_check(a: &ActionInvariants, b: &ActionInvariants) -> PartnerReport {
    let mut checks = Vec::new();
    let mut check = |name: &str, l: String, r: String| {
        let matches = l == r;
        checks.push(InvariantCheck { invariant: name.to_string(), left: l, right: r, matches });
    };
    check("order", a.order.to_string(), b.order.to_string());
    if a.order != b.order {
        return PartnerReport { checks, compatible: false };
    }
    check(
        "factorization",
        format!("({}, {})", a.factorization.n, a.factorization.m),
        format!("({}, {})", b.factorization.n, b.factorization.m),
    );
    for (r, x) in &a.traces.values {
        let y = b.traces.values[r];
        let name = if *r == 1 { "chi(sigma)".to_string() } else { format!("chi(sigma^{r})") };
        check(&name, x.to_string(), y.to_string());
    }
    if let (Some(p), Some(q)) = (&a.charpoly, &b.charpoly) {
        check("characteristic polynomial", p.join(" "), q.join(" "));
    }
    check(
        "fixed points guaranteed",
        a.fixed_points_guaranteed.to_string(),
        b.fixed_points_guaranteed.to_string(),
    );
    check(
        "point counts",
        format!("{:?}", a.point_counts),
        format!("{:?}", b.point_counts),
    );
    let compatible = checks.iter().all(|c| c.matches);
    PartnerReport { checks, compatible }
}

/// Orders of purely nonsymplectic automorphisms.
pub const PURE_ORDERS: &[u64] = &[
    2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20, 21, 22, 24, 25, 26, 27,
    28, 30, 32, 33, 34, 36, 40, 44, 48, 50, 54, 66,
];

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Admissibility {
    pub n: u64,
    pub m: u64,
    pub admissible: bool,
    pub violations: Vec<String>,
    pub notes: Vec<String>,
}

pub fn order_admissibility(n: u64, m: u64) -> Admissibility {
    let mut violations = Vec::new();
    let mut notes = Vec::new();
    if n == 0 || m == 0 {
        violations.push("n and m must be positive".to_string());
    } else {
        if n > 8 {
            violations.push(format!("symplectic order n = {n} exceeds 8"));
        }
        if n == 1 && m > 1 && !PURE_ORDERS.contains(&m) {
            violations.push(format!("{m} is not the order of a purely nonsymplectic automorphism"));
        }
        if m == 2 && n == 8 {
            violations.push("m = 2 forces n != 8".to_string());
        }
        if m == 2 && n == 7 {
            notes.push("fixed points guaranteed via C7 subgroup (3 points)".to_string());
        }
        if n >= 2 && m >= 2 {
            notes.push("mixed order: m is not checked against the purely nonsymplectic list".into());
        }
    }
    Admissibility { n, m, admissible: violations.is_empty(), violations, notes }
}

/// `U(2) + E8(-1)(2)`, signature `(1, 9)`.
pub fn enriques_reference() -> IntegerLattice {
    let u2 = hyperbolic_plane().twist(2).expect("nonzero");
    let e = e8().twist(-2).expect("nonzero");
    u2.direct_sum(&e).with_label("U(2) + E8(-2)")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EnriquesVerdict {
    pub checks: Vec<GateCheck>,
    pub matches: bool,
}

/// Invariant-level comparison with the invariant lattice of an Enriques
/// involution.
pub fn enriques_signature(l: &IntegerLattice) -> Result<EnriquesVerdict> {
    l.ensure_nondegenerate()?;
    let reference = enriques_reference();
    let mut checks = Vec::new();
    let mut push = |rule: &str, ok: bool| checks.push(GateCheck { rule: rule.to_string(), ok });
    push("rank 10", l.rank() == 10);
    push("signature (1, 9)", l.signature() == (1, 9));
    push("|det| = 1024", l.det().abs() == BigInt::from(1024));
    push("even", l.is_even());
    let disc_ok = l.rank() == 10
        && l.is_even()
        && l.det() == reference.det()
        && DiscriminantForm::of(l)?
            .isomorphism_to(&DiscriminantForm::of(&reference)?, FormComparison::Isometry, DEFAULT_ORDER_LIMIT)?
            .is_some();
    push("discriminant form of U(2) + E8(-2)", disc_ok);
    let matches = checks.iter().all(|c| c.ok);
    Ok(EnriquesVerdict { checks, matches })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiscriminantActionClass {
    PlusOne,
    MinusOne,
    /// `+1 = -1` on a group of exponent at most 2.
    PlusMinusOne,
    Other,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DiscriminantAction {
    /// Image of each generator of `d(L)`, in generator coordinates.
    pub images: Vec<Vec<u64>>,
    pub orders: Vec<u64>,
    pub class: DiscriminantActionClass,
}

/// Action induced on `d(L)` by an isometry `W` (columns are images of the
/// basis vectors).
pub fn discriminant_action(l: &IntegerLattice, w: &ZMatrix) -> Result<DiscriminantAction> {
    l.ensure_nondegenerate()?;
    if w.rows() != l.rank() || w.cols() != l.rank() || !preserves(l.gram(), w) {
        return Err(Error::NotAnIsometry);
    }
    let d = DiscriminantForm::of(l)?;
    let images: Vec<Vec<u64>> = d
        .generators()
        .iter()
        .map(|g| d.reduce_glue_vector(&w.mul_rational_vec(g)))
        .collect::<Result<_>>()?;
    let orders = d.orders().to_vec();
    let k = orders.len();
    let scaled = |c: u64| -> Vec<Vec<u64>> {
        (0..k)
            .map(|i| (0..k).map(|j| if i == j { (c * (orders[i] - 1) + (1 - c)) % orders[i] } else { 0 }).collect())
            .collect()
    };
    let plus = images == scaled(0);
    let minus = images == scaled(1);
    let class = match (plus, minus) {
        (true, true) => DiscriminantActionClass::PlusMinusOne,
        (true, false) => DiscriminantActionClass::PlusOne,
        (false, true) => DiscriminantActionClass::MinusOne,
        _ => DiscriminantActionClass::Other,
    };
    Ok(DiscriminantAction { images, orders, class })
}

/// The saturated `(+1)` or `(-1)`-eigenlattice of `M` inside `(Z^n, gram)`.
pub fn eigenlattice(gram: &IntegerLattice, m: &ZMatrix, sign: i64) -> Result<Sublattice> {
    if m.rows() != gram.rank() || m.cols() != gram.rank() {
        return Err(Error::DimensionMismatch { expected: gram.rank(), got: m.rows() });
    }
    let shifted = m.sub(&ZMatrix::identity(m.rows()).scale(&BigInt::from(sign)));
    gram.sublattice(shifted.integer_kernel())
}

/// Shorthand for an isometry check used by callers holding raw matrices.
pub fn is_isometry_of(gram: &ZMatrix, w: &ZMatrix) -> bool {
    w.rows() == gram.rows() && w.cols() == gram.rows() && preserves(gram, w)
}

/// Sum of the characters over all powers, which is `N` times the
/// multiplicity of the trivial representation.
pub fn trivial_character_sum(traces: &TraceSequence) -> i64 {
    (0..traces.order).map(|k| traces.chi(k)).sum()
}

/// Zero-padded 24x24 block-diagonal action: `blocks` on the leading
/// summands of `U^4 + E8(-1)^2`, identity elsewhere.
pub fn mukai_block_action(blocks: &[&ZMatrix]) -> ZMatrix {
    let used: usize = blocks.iter().map(|b| b.rows()).sum();
    let rest = ZMatrix::identity(MUKAI_RANK.saturating_sub(used));
    let mut all: Vec<&ZMatrix> = blocks.to_vec();
    all.push(&rest);
    ZMatrix::block_diag(&all)
}
