//! Isometry testing.
//!
//! Definite lattices: images of the basis vectors are drawn from the finite
//! sets of lattice vectors of the required norms (Fincke–Pohst enumeration
//! with exact rational bounds) and assembled by backtracking on the Gram
//! constraints. Every search is bounded by a node budget.
//!
//! Even lattices: the genus is decided by signature plus the discriminant
//! quadratic form. For rank-2 definite `A`, `B` the stable isometry
//! `A + U = B + U` can also be exhibited explicitly by splitting a hyperbolic
//! plane off `A + U` and matching its complement with `B`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::discriminant::{DiscriminantForm, FormComparison, FormIsomorphism, DEFAULT_ORDER_LIMIT};
use crate::error::{Error, Result};
use crate::lattice::{hyperbolic_plane, IntegerLattice};
use crate::matrix::ZMatrix;

pub const DEFAULT_SEARCH_BUDGET: u64 = 10_000_000;

/// Environment variable read by front ends for the default node budget.
pub const BUDGET_ENV_VAR: &str = "K3EQ_SEARCH_BUDGET";

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IsometryVerdict {
    /// `W` with `W^T G1 W = G2`.
    Isometric(ZMatrix),
    NotIsometric,
    BudgetExceeded { nodes: u64 },
}

impl IsometryVerdict {
    pub fn is_isometric(&self) -> bool {
        matches!(self, IsometryVerdict::Isometric(_))
    }
}

#[derive(Debug)]
struct Budget {
    limit: u64,
    used: u64,
}

#[derive(Debug)]
struct Exhausted;

impl Budget {
    fn new(limit: u64) -> Self {
        Budget { limit, used: 0 }
    }

    fn tick(&mut self) -> std::result::Result<(), Exhausted> {
        self.used += 1;
        if self.used > self.limit {
            Err(Exhausted)
        } else {
            Ok(())
        }
    }
}

/// Whether `w^T g1 w == g2`.
pub fn verify_isometry(g1: &ZMatrix, g2: &ZMatrix, w: &ZMatrix) -> bool {
    w.rows() == g1.rows()
        && w.cols() == g2.rows()
        && &(&w.transpose() * g1) * w == *g2
}

/// Exact isometry test for definite lattices of equal sign.
pub fn is_isometric_definite(
    l1: &IntegerLattice,
    l2: &IntegerLattice,
    budget: u64,
) -> Result<IsometryVerdict> {
    l1.ensure_nondegenerate()?;
    l2.ensure_nondegenerate()?;
    if !l1.is_definite() || !l2.is_definite() {
        return Err(Error::IndefiniteInput);
    }
    if l1.rank() != l2.rank()
        || l1.det() != l2.det()
        || l1.is_positive_definite() != l2.is_positive_definite()
    {
        return Ok(IsometryVerdict::NotIsometric);
    }
    let (g1, g2) = if l1.is_positive_definite() {
        (l1.gram().clone(), l2.gram().clone())
    } else {
        (l1.gram().neg(), l2.gram().neg())
    };
    let mut budget = Budget::new(budget);
    match search_definite(&g1, &g2, &mut budget) {
        Ok(Some(w)) => {
            debug_assert!(verify_isometry(&g1, &g2, &w));
            Ok(IsometryVerdict::Isometric(w))
        }
        Ok(None) => Ok(IsometryVerdict::NotIsometric),
        Err(Exhausted) => Ok(IsometryVerdict::BudgetExceeded { nodes: budget.used }),
    }
}

fn search_definite(
    g1: &ZMatrix,
    g2: &ZMatrix,
    budget: &mut Budget,
) -> std::result::Result<Option<ZMatrix>, Exhausted> {
    let n = g1.rows();
    let mut pools: Vec<(BigInt, Vec<Vec<BigInt>>)> = Vec::new();
    let mut pool_of = Vec::with_capacity(n);
    for j in 0..n {
        let norm = g2[(j, j)].clone();
        let idx = match pools.iter().position(|(k, _)| *k == norm) {
            Some(idx) => idx,
            None => {
                let vs = vectors_of_norm_budgeted(g1, &norm, budget)?;
                pools.push((norm, vs));
                pools.len() - 1
            }
        };
        pool_of.push(idx);
    }

    let mut images: Vec<Vec<BigInt>> = Vec::with_capacity(n);
    let mut g1_images: Vec<Vec<BigInt>> = Vec::with_capacity(n);
    if assign(0, g1, g2, &pools, &pool_of, &mut images, &mut g1_images, budget)? {
        Ok(Some(ZMatrix::from_columns(&images)))
    } else {
        Ok(None)
    }
}

#[allow(clippy::too_many_arguments)]
fn assign(
    j: usize,
    g1: &ZMatrix,
    g2: &ZMatrix,
    pools: &[(BigInt, Vec<Vec<BigInt>>)],
    pool_of: &[usize],
    images: &mut Vec<Vec<BigInt>>,
    g1_images: &mut Vec<Vec<BigInt>>,
    budget: &mut Budget,
) -> std::result::Result<bool, Exhausted> {
    if j == g2.rows() {
        return Ok(true);
    }
    for x in &pools[pool_of[j]].1 {
        budget.tick()?;
        let fits = g1_images.iter().enumerate().all(|(i, gy)| {
            let ip: BigInt = x.iter().zip(gy).map(|(a, b)| a * b).sum();
            ip == g2[(i, j)]
        });
        if !fits {
            continue;
        }
        images.push(x.clone());
        g1_images.push(g1.mul_vec(x));
        if assign(j + 1, g1, g2, pools, pool_of, images, g1_images, budget)? {
            return Ok(true);
        }
        images.pop();
        g1_images.pop();
    }
    Ok(false)
}

/// All `x` with `x^T G x = target` for positive definite `G`.
pub fn vectors_of_norm(gram: &ZMatrix, target: &BigInt) -> Vec<Vec<BigInt>> {
    let mut budget = Budget::new(u64::MAX);
    vectors_of_norm_budgeted(gram, target, &mut budget).expect("unbounded budget")
}

fn vectors_of_norm_budgeted(
    gram: &ZMatrix,
    target: &BigInt,
    budget: &mut Budget,
) -> std::result::Result<Vec<Vec<BigInt>>, Exhausted> {
    let n = gram.rows();
    let mut out = Vec::new();
    if target.is_negative() {
        return Ok(out);
    }
    // Q(x) = sum_i q_ii (x_i + sum_{j>i} q_ij x_j)^2
    let mut q: Vec<Vec<BigRational>> = (0..n)
        .map(|i| gram.row(i).iter().cloned().map(BigRational::from_integer).collect())
        .collect();
    for i in 0..n {
        for j in i + 1..n {
            q[j][i] = q[i][j].clone();
            q[i][j] = &q[i][j] / &q[i][i];
        }
        for k in i + 1..n {
            for l in k..n {
                let v = &q[k][i] * &q[i][l];
                q[k][l] -= v;
            }
        }
    }
    let mut x = vec![BigInt::zero(); n];
    let target_q = BigRational::from_integer(target.clone());
    fincke_pohst(n, &q, &mut x, target_q, gram, target, &mut out, budget)?;
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn fincke_pohst(
    level: usize,
    q: &[Vec<BigRational>],
    x: &mut Vec<BigInt>,
    remaining: BigRational,
    gram: &ZMatrix,
    target: &BigInt,
    out: &mut Vec<Vec<BigInt>>,
    budget: &mut Budget,
) -> std::result::Result<(), Exhausted> {
    if level == 0 {
        budget.tick()?;
        let gx = gram.mul_vec(x);
        let norm: BigInt = x.iter().zip(&gx).map(|(a, b)| a * b).sum();
        if norm == *target {
            out.push(x.clone());
        }
        return Ok(());
    }
    let i = level - 1;
    let n = x.len();
    let center: BigRational = -(i + 1..n).fold(BigRational::zero(), |acc, j| {
        acc + &q[i][j] * BigRational::from_integer(x[j].clone())
    });
    let t = &remaining / &q[i][i];
    let radius = t.floor().to_integer().sqrt() + BigInt::one();
    let lo = center.floor().to_integer() - &radius;
    let hi = center.ceil().to_integer() + &radius;
    let mut xi = lo;
    while xi <= hi {
        let d = BigRational::from_integer(xi.clone()) - &center;
        let used = &q[i][i] * &d * &d;
        if used <= remaining {
            x[i] = xi.clone();
            fincke_pohst(level - 1, q, x, &remaining - used, gram, target, out, budget)?;
        }
        xi += 1;
    }
    x[i] = BigInt::zero();
    Ok(())
}

/// Evidence that two even lattices share a genus: equal signatures and an
/// isometry of discriminant quadratic forms.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GenusCertificate {
    pub signature: (usize, usize),
    pub form_isomorphism: FormIsomorphism,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum GenusVerdict {
    SameGenus(GenusCertificate),
    DifferentGenus(String),
}

impl GenusVerdict {
    pub fn is_same(&self) -> bool {
        matches!(self, GenusVerdict::SameGenus(_))
    }
}

/// Genus comparison for even nondegenerate lattices.
pub fn same_genus(a: &IntegerLattice, b: &IntegerLattice, order_limit: u128) -> Result<GenusVerdict> {
    a.ensure_nondegenerate()?;
    b.ensure_nondegenerate()?;
    if !a.is_even() || !b.is_even() {
        return Err(Error::Precondition("genus comparison needs even lattices".into()));
    }
    if a.rank() != b.rank() {
        return Ok(GenusVerdict::DifferentGenus("ranks differ".into()));
    }
    if a.signature() != b.signature() {
        return Ok(GenusVerdict::DifferentGenus("signatures differ".into()));
    }
    if a.det() != b.det() {
        return Ok(GenusVerdict::DifferentGenus("determinants differ".into()));
    }
    let da = DiscriminantForm::of(a)?;
    let db = DiscriminantForm::of(b)?;
    match da.isomorphism_to(&db, FormComparison::Isometry, order_limit)? {
        Some(iso) => Ok(GenusVerdict::SameGenus(GenusCertificate {
            signature: a.signature(),
            form_isomorphism: iso,
        })),
        None => Ok(GenusVerdict::DifferentGenus("discriminant forms differ".into())),
    }
}

/// Re-checks a genus certificate from scratch.
pub fn verify_genus_certificate(a: &IntegerLattice, b: &IntegerLattice, cert: &GenusCertificate) -> bool {
    let (Ok(da), Ok(db)) = (DiscriminantForm::of(a), DiscriminantForm::of(b)) else {
        return false;
    };
    a.signature() == cert.signature
        && b.signature() == cert.signature
        && cert.form_isomorphism.mode == FormComparison::Isometry
        && da.verify_isomorphism(&db, &cert.form_isomorphism)
}

/// `A + U = B + U` for rank-2 even definite `A`, `B` of the same sign and
/// determinant, decided through the genus.
pub fn stable_equivalence_check(a: &IntegerLattice, b: &IntegerLattice) -> Result<GenusVerdict> {
    for l in [a, b] {
        l.ensure_nondegenerate()?;
        if l.rank() != 2 || !l.is_even() || !l.is_definite() {
            return Err(Error::Precondition(
                "stable equivalence expects rank-2 even definite lattices".into(),
            ));
        }
    }
    if a.is_positive_definite() != b.is_positive_definite() {
        return Err(Error::Precondition("lattices have opposite signs".into()));
    }
    if a.det() != b.det() {
        return Err(Error::Precondition("determinants differ".into()));
    }
    same_genus(a, b, DEFAULT_ORDER_LIMIT)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StableIsometryVerdict {
    /// `W` with `W^T G(A + U) W = G(B + U)`.
    Found(ZMatrix),
    BudgetExceeded { nodes: u64 },
}

/// Searches for an explicit isometry `B + U -> A + U` by locating a
/// hyperbolic plane `H = <e, f>` in `A + U` whose complement is isometric to
/// `B`. Isotropic `e` are scanned in growing coordinate boxes.
pub fn find_stable_isometry(
    a: &IntegerLattice,
    b: &IntegerLattice,
    budget: u64,
) -> Result<StableIsometryVerdict> {
    for l in [a, b] {
        l.ensure_nondegenerate()?;
        if !l.is_definite() || !l.is_even() {
            return Err(Error::Precondition("expects even definite lattices".into()));
        }
    }
    if a.rank() != b.rank() || a.det() != b.det() {
        return Err(Error::Precondition("rank or determinant differ".into()));
    }
    let ambient = a.direct_sum(&hyperbolic_plane());
    let target = b.direct_sum(&hyperbolic_plane());
    let g = ambient.gram();
    let n = ambient.rank();
    let mut used: u64 = 0;

    for radius in 1i64.. {
        for e in box_shell(n, radius) {
            used += 1;
            if used > budget {
                return Ok(StableIsometryVerdict::BudgetExceeded { nodes: used });
            }
            let e: Vec<BigInt> = e.into_iter().map(BigInt::from).collect();
            if !ambient.norm(&e).is_zero() {
                continue;
            }
            let pairing = ZMatrix::from_columns(&[g.mul_vec(&e)]).transpose();
            let Some(f0) = pairing.solve_integer(&[BigInt::one()]) else {
                continue;
            };
            let half = ambient.norm(&f0) / BigInt::from(2);
            let f: Vec<BigInt> = f0.iter().zip(&e).map(|(x, y)| x - &half * y).collect();
            let complement = ambient.orthogonal_complement(&[e.clone(), f.clone()])?;
            if complement.is_degenerate() || !complement.lattice.is_definite() {
                continue;
            }
            let remaining = budget.saturating_sub(used);
            match is_isometric_definite(&complement.lattice, b, remaining)? {
                IsometryVerdict::Isometric(wk) => {
                    let kb = &complement.basis * &wk;
                    let w = kb.hstack(&ZMatrix::from_columns(&[e, f]));
                    if verify_isometry(g, target.gram(), &w) {
                        return Ok(StableIsometryVerdict::Found(w));
                    }
                }
                IsometryVerdict::NotIsometric => {}
                IsometryVerdict::BudgetExceeded { nodes } => {
                    return Ok(StableIsometryVerdict::BudgetExceeded { nodes: used + nodes });
                }
            }
        }
    }
    unreachable!("radius loop is unbounded")
}

/// Integer vectors of sup-norm exactly `r`, in lexicographic order.
fn box_shell(n: usize, r: i64) -> impl Iterator<Item = Vec<i64>> {
    let side = (2 * r + 1) as u64;
    let total = side.pow(n as u32);
    (0..total).filter_map(move |mut idx| {
        let mut v = vec![0i64; n];
        for slot in v.iter_mut().rev() {
            *slot = (idx % side) as i64 - r;
            idx /= side;
        }
        (v.iter().map(|x| x.abs()).max() == Some(r)).then_some(v)
    })
}

/// `gcd` of the entries is one.
pub fn is_primitive(v: &[BigInt]) -> bool {
    v.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x)).is_one()
}

/// Reads the default node budget from [`BUDGET_ENV_VAR`], falling back to
/// [`DEFAULT_SEARCH_BUDGET`].
pub fn default_budget() -> u64 {
    std::env::var(BUDGET_ENV_VAR)
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_SEARCH_BUDGET)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::e8;

    fn lat(rows: &[[i64; 2]]) -> IntegerLattice {
        IntegerLattice::from_rows(rows).unwrap()
    }

    #[test]
    fn short_vectors_of_e8() {
        let roots = vectors_of_norm(e8().gram(), &BigInt::from(2));
        assert_eq!(roots.len(), 240);
        let norm4 = vectors_of_norm(e8().gram(), &BigInt::from(4));
        assert_eq!(norm4.len(), 2160);
    }

    #[test]
    fn self_isometry_is_found() {
        let l = lat(&[[4, 1], [1, 12]]);
        match is_isometric_definite(&l, &l, DEFAULT_SEARCH_BUDGET).unwrap() {
            IsometryVerdict::Isometric(w) => assert!(verify_isometry(l.gram(), l.gram(), &w)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn distinct_reduced_forms() {
        let a = lat(&[[4, 1], [1, 12]]).negated();
        let b = lat(&[[6, 1], [1, 8]]).negated();
        assert_eq!(
            is_isometric_definite(&a, &b, DEFAULT_SEARCH_BUDGET).unwrap(),
            IsometryVerdict::NotIsometric
        );
    }

    #[test]
    fn sign_flip_is_isometric() {
        let a = lat(&[[2, 1], [1, 24]]);
        let b = lat(&[[2, -1], [-1, 24]]);
        let v = is_isometric_definite(&a, &b, DEFAULT_SEARCH_BUDGET).unwrap();
        let IsometryVerdict::Isometric(w) = v else { panic!() };
        assert!(verify_isometry(a.gram(), b.gram(), &w));
        assert_eq!(w.det().abs(), BigInt::one());
    }

    #[test]
    fn indefinite_is_rejected() {
        let u = hyperbolic_plane();
        assert_eq!(
            is_isometric_definite(&u, &u, 10).unwrap_err(),
            Error::IndefiniteInput
        );
    }

    #[test]
    fn budget_is_reported() {
        let l = e8();
        let v = is_isometric_definite(&l, &l, 50).unwrap();
        assert!(matches!(v, IsometryVerdict::BudgetExceeded { .. }));
    }

    #[test]
    fn stable_equivalence_examples() {
        let a = lat(&[[4, 1], [1, 12]]).negated();
        let b = lat(&[[6, 1], [1, 8]]).negated();
        assert!(stable_equivalence_check(&a, &a).unwrap().is_same());
        let v = stable_equivalence_check(&a, &b).unwrap();
        let GenusVerdict::SameGenus(cert) = &v else { panic!("{v:?}") };
        assert!(verify_genus_certificate(&a, &b, cert));
        assert!(stable_equivalence_check(&a, &lat(&[[2, 1], [1, 2]])).is_err());
    }

    #[test]
    fn explicit_stable_isometry() {
        let a = lat(&[[4, 1], [1, 12]]).negated();
        let b = lat(&[[6, 1], [1, 8]]).negated();
        let StableIsometryVerdict::Found(w) = find_stable_isometry(&a, &b, DEFAULT_SEARCH_BUDGET).unwrap()
        else {
            panic!("budget exhausted")
        };
        let lhs = a.direct_sum(&hyperbolic_plane());
        let rhs = b.direct_sum(&hyperbolic_plane());
        assert!(verify_isometry(lhs.gram(), rhs.gram(), &w));
        assert_eq!(w.det().abs(), BigInt::one());
    }

    #[test]
    fn shells() {
        assert_eq!(box_shell(2, 1).count(), 8);
        assert_eq!(box_shell(3, 2).count(), 125 - 27);
    }
}
