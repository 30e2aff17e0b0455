//! Topological and holomorphic Lefschetz formulas for cyclic actions on K3
//! surfaces, and an exact solver for isolated fixed-point configurations.
//!
//! An action of order `N` multiplies the holomorphic 2-form by `zeta_N^s`.
//! The holomorphic formula reads
//!
//! ```text
//! 1 + zeta^-s = sum_p 1/((1 - zeta^i)(1 - zeta^j)) + sum_C (1 - g)(1 + zeta^s)/(1 - zeta^s)^2
//! ```
//!
//! with point weights satisfying `i + j = s (mod N)`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::cyclotomic::CyclotomicNumber;
use crate::error::{Error, Result};

fn one_minus_zeta(k: i64, n: u64) -> Result<CyclotomicNumber> {
    Ok(&CyclotomicNumber::one(n)? - &CyclotomicNumber::zeta_pow(n, k)?)
}

fn is_pole(k: i64, n: u64) -> bool {
    k.rem_euclid(n as i64) == 0
}

/// `1 / ((1 - zeta^i)(1 - zeta^j))`.
pub fn point_contribution(i: i64, j: i64, n: u64) -> Result<CyclotomicNumber> {
    for w in [i, j] {
        if is_pole(w, n) {
            return Err(Error::Pole { weight: w, order: n as u32 });
        }
    }
    (&one_minus_zeta(i, n)? * &one_minus_zeta(j, n)?).inv()
}

/// Fixed-curve term for a general surface:
/// `(1 - g)/(1 - zeta^-r) - zeta^-r C^2/(1 - zeta^-r)^2`.
pub fn curve_contribution(g: i64, r: i64, c2: i64, n: u64) -> Result<CyclotomicNumber> {
    if is_pole(r, n) {
        return Err(Error::Pole { weight: r, order: n as u32 });
    }
    let d = one_minus_zeta(-r, n)?;
    let first = CyclotomicNumber::from_int(n, 1 - g)?.div(&d)?;
    let zr = CyclotomicNumber::zeta_pow(n, -r)?.scale(&BigRational::from_integer(c2.into()));
    let second = zr.div(&(&d * &d))?;
    Ok(&first - &second)
}

/// The K3 curve term `(1 - g)(1 + zeta^s)/(1 - zeta^s)^2`.
pub fn k3_curve_contribution(g: i64, s: i64, n: u64) -> Result<CyclotomicNumber> {
    if is_pole(s, n) {
        return Err(Error::Pole { weight: s, order: n as u32 });
    }
    let num = &CyclotomicNumber::one(n)? + &CyclotomicNumber::zeta_pow(n, s)?;
    let d = one_minus_zeta(s, n)?;
    Ok(num.scale(&BigRational::from_integer((1 - g).into())).div(&(&d * &d))?)
}

/// `1 + zeta^-s`.
pub fn holomorphic_lhs(s: i64, n: u64) -> Result<CyclotomicNumber> {
    Ok(&CyclotomicNumber::one(n)? + &CyclotomicNumber::zeta_pow(n, -s)?)
}

/// Does the general curve term with normal weight `r` and `C^2 = 2g - 2`
/// agree with the K3 term? It does for `r = -s`, the normal weight forced
/// by `T_C (+) N_C = T_X` and `det T_X = zeta^s` on a curve of fixed points.
pub fn specialization_matches(g: i64, r: i64, s: i64, n: u64) -> Result<bool> {
    Ok(curve_contribution(g, r, 2 * g - 2, n)? == k3_curve_contribution(g, s, n)?)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedCurve {
    pub g: i64,
    pub r: i64,
    pub c2: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedPointConfig {
    #[serde(rename = "N")]
    pub n: u64,
    pub s: i64,
    /// `(i, j, multiplicity)`, unordered in `(i, j)`.
    #[serde(default)]
    pub points: Vec<(i64, i64, u64)>,
    #[serde(default)]
    pub curves: Vec<FixedCurve>,
}

impl FixedPointConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Invalid("N must be positive".into()));
        }
        let n = self.n as i64;
        for &(i, j, _) in &self.points {
            if !(1..n).contains(&i) || !(1..n).contains(&j) {
                return Err(Error::Invalid(format!("weight ({i}, {j}) outside 1..N-1")));
            }
            if (i + j - self.s).rem_euclid(n) != 0 {
                return Err(Error::Invalid(format!(
                    "weight ({i}, {j}) violates i + j = s (mod {n})"
                )));
            }
        }
        for c in &self.curves {
            if c.g < 0 {
                return Err(Error::Invalid("negative genus".into()));
            }
        }
        Ok(())
    }

    /// Merged, sorted points with `i <= j`, zero multiplicities dropped.
    pub fn canonical(&self) -> Self {
        let mut merged: BTreeMap<(i64, i64), u64> = BTreeMap::new();
        for &(i, j, k) in &self.points {
            if k > 0 {
                *merged.entry((i.min(j), i.max(j))).or_default() += k;
            }
        }
        FixedPointConfig {
            n: self.n,
            s: self.s,
            points: merged.into_iter().map(|((i, j), k)| (i, j, k)).collect(),
            curves: self.curves.clone(),
        }
    }

    pub fn point_count(&self) -> u64 {
        self.points.iter().map(|p| p.2).sum()
    }

    /// Right-hand side of the holomorphic formula.
    pub fn contribution(&self) -> Result<CyclotomicNumber> {
        let mut acc = CyclotomicNumber::zero(self.n)?;
        for &(i, j, k) in &self.points {
            let a = point_contribution(i, j, self.n)?;
            acc = &acc + &a.scale(&BigRational::from_integer(k.into()));
        }
        for c in &self.curves {
            acc = &acc + &k3_curve_contribution(c.g, self.s, self.n)?;
        }
        Ok(acc)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Balance {
    Balanced,
    /// `lhs - rhs`.
    Unbalanced { residual: CyclotomicNumber },
}

impl Balance {
    pub fn is_balanced(&self) -> bool {
        matches!(self, Balance::Balanced)
    }
}

/// Exact test of the holomorphic formula. Curves use the K3 term, which is
/// undefined in the symplectic case `s = 0 (mod N)`.
pub fn verify_config(cfg: &FixedPointConfig) -> Result<Balance> {
    cfg.validate()?;
    if !cfg.curves.is_empty() && is_pole(cfg.s, cfg.n) {
        return Err(Error::Precondition("symplectic actions have no fixed curves".into()));
    }
    let residual = &holomorphic_lhs(cfg.s, cfg.n)? - &cfg.contribution()?;
    Ok(if residual.is_zero() {
        Balance::Balanced
    } else {
        Balance::Unbalanced { residual }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchOptions {
    pub max_points: u64,
    /// Restrict to weights with `gcd(i, j, N) = 1`, i.e. points where no
    /// nontrivial power of the action is the identity to first order.
    pub faithful: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { max_points: 24, faithful: false }
    }
}

/// Unordered weight pairs `i <= j` with `i + j = s (mod N)`.
pub fn weight_pairs(n: u64, s: i64, faithful: bool) -> Vec<(i64, i64)> {
    let n = n as i64;
    let mut out = Vec::new();
    for i in 1..n {
        let j = (s - i).rem_euclid(n);
        if j == 0 || j < i {
            continue;
        }
        if faithful && i.gcd(&j).gcd(&n) != 1 {
            continue;
        }
        out.push((i, j));
    }
    out
}

/// All point-only configurations with at most `max_points` points that
/// balance the holomorphic formula, smallest total first.
pub fn search_point_configs(n: u64, s: i64, opts: SearchOptions) -> Result<Vec<FixedPointConfig>> {
    if n == 0 {
        return Err(Error::Invalid("N must be positive".into()));
    }
    let pairs = weight_pairs(n, s, opts.faithful);
    let contributions: Vec<CyclotomicNumber> = pairs
        .iter()
        .map(|&(i, j)| point_contribution(i, j, n))
        .collect::<Result<_>>()?;
    let lhs = holomorphic_lhs(s, n)?;
    let system = LinearSystem::new(&contributions, &lhs);
    let Some(system) = system else { return Ok(vec![]) };

    // Positive traces bound every multiplicity by tr(lhs) / tr(a).
    let traces: Vec<BigRational> = contributions.iter().map(|c| c.trace()).collect();
    let target_trace = lhs.trace();
    let bounds: Vec<u64> = traces
        .iter()
        .map(|t| {
            if t.is_positive() && traces.iter().all(|t| t.is_positive()) {
                (&target_trace / t).floor().to_integer().to_u64().unwrap_or(0).min(opts.max_points)
            } else {
                opts.max_points
            }
        })
        .collect();

    let mut found = Vec::new();
    let mut assignment = vec![0u64; pairs.len()];
    system.enumerate(0, opts.max_points, &bounds, &mut assignment, &mut found);

    let mut configs: Vec<FixedPointConfig> = found
        .into_iter()
        .map(|x| FixedPointConfig {
            n,
            s,
            points: pairs
                .iter()
                .zip(&x)
                .filter(|(_, &k)| k > 0)
                .map(|(&(i, j), &k)| (i, j, k))
                .collect(),
            curves: vec![],
        })
        .collect();
    configs.sort_by(|a, b| {
        (a.point_count(), &a.points).cmp(&(b.point_count(), &b.points))
    });
    Ok(configs)
}

/// `sum_w x_w v_w = target` in reduced row echelon form over `Q`.
struct LinearSystem {
    /// `(pivot column, coefficients on free columns, rhs)` per pivot row.
    rows: Vec<(usize, Vec<BigRational>, BigRational)>,
    free: Vec<usize>,
}

impl LinearSystem {
    fn new(vectors: &[CyclotomicNumber], target: &CyclotomicNumber) -> Option<Self> {
        let k = vectors.len();
        let dim = target.coeffs().len();
        let mut a: Vec<Vec<BigRational>> = (0..dim)
            .map(|r| {
                let mut row: Vec<BigRational> = vectors.iter().map(|v| v.coeffs()[r].clone()).collect();
                row.push(target.coeffs()[r].clone());
                row
            })
            .collect();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..k {
            let Some(p) = (row..dim).find(|&r| !a[r][col].is_zero()) else { continue };
            a.swap(row, p);
            let inv = a[row][col].recip();
            a[row].iter_mut().for_each(|x| *x *= &inv);
            for r in 0..dim {
                if r != row && !a[r][col].is_zero() {
                    let f = a[r][col].clone();
                    for c in 0..=k {
                        let v = &f * &a[row][c];
                        a[r][c] -= v;
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        if a[row..].iter().any(|r| !r[k].is_zero()) {
            return None;
        }
        let free: Vec<usize> = (0..k).filter(|c| !pivots.contains(c)).collect();
        let rows = pivots
            .iter()
            .enumerate()
            .map(|(r, &p)| (p, free.iter().map(|&f| a[r][f].clone()).collect(), a[r][k].clone()))
            .collect();
        Some(LinearSystem { rows, free })
    }

    fn enumerate(
        &self,
        depth: usize,
        remaining: u64,
        bounds: &[u64],
        x: &mut Vec<u64>,
        out: &mut Vec<Vec<u64>>,
    ) {
        if depth == self.free.len() {
            let mut total = 0u64;
            for (p, coeffs, rhs) in &self.rows {
                let mut v = rhs.clone();
                for (c, &f) in coeffs.iter().zip(&self.free) {
                    v -= c * BigRational::from_integer(BigInt::from(x[f]));
                }
                if !v.is_integer() || v.is_negative() {
                    return;
                }
                let Some(v) = v.to_integer().to_u64() else { return };
                if v > bounds[*p] {
                    return;
                }
                x[*p] = v;
                total += v;
            }
            if total <= remaining {
                out.push(x.clone());
            }
            return;
        }
        let f = self.free[depth];
        for v in 0..=remaining.min(bounds[f]) {
            x[f] = v;
            self.enumerate(depth + 1, remaining - v, bounds, x, out);
        }
        x[f] = 0;
    }
}

/// `chi(X^sigma) = chi(sigma)`.
pub fn topological_chi(trace: i64) -> i64 {
    trace
}

/// For `n >= 2` the fixed locus is a finite set of points, so the trace is
/// the point count and must be nonnegative.
pub fn chi_equals_count(trace: i64, n: u64, _m: u64) -> Result<u64> {
    if n < 2 {
        return Err(Error::Precondition("needs a nontrivial symplectic part (n >= 2)".into()));
    }
    u64::try_from(topological_chi(trace)).map_err(|_| {
        Error::Inconsistent(format!("trace {trace} would be a negative fixed-point count"))
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Guarantee {
    pub guaranteed: bool,
    /// `1 + zeta_N^-n` with `N = n m`; the 2-form eigenvalue is `zeta_N^n`.
    pub lhs: CyclotomicNumber,
}

/// Fixed points exist whenever the left-hand side of the holomorphic
/// formula is nonzero; decided exactly.
pub fn fixed_points_guaranteed(n: u64, m: u64) -> Result<Guarantee> {
    if n == 0 || m == 0 {
        return Err(Error::Invalid("n and m must be positive".into()));
    }
    let lhs = holomorphic_lhs(n as i64, n * m)?;
    Ok(Guarantee { guaranteed: !lhs.is_zero(), lhs })
}

/// Fixed-point counts of symplectic automorphisms of order `n`.
pub fn nikulin_fixed_points(n: u64) -> Option<u64> {
    match n {
        1 => Some(24),
        2 => Some(8),
        3 => Some(6),
        4 | 5 => Some(4),
        6 | 8 => Some(2),
        7 => Some(3),
        _ => None,
    }
}

/// `(stabilizer order, number of points)` for points with a proper
/// nontrivial stabilizer, as listed for composite orders.
pub fn nikulin_stabilizers(n: u64) -> Vec<(u64, u64)> {
    match n {
        4 => vec![(2, 4)],
        6 => vec![(3, 4), (2, 6)],
        8 => vec![(4, 2), (2, 4)],
        _ => vec![],
    }
}

pub fn mobius(n: u64) -> i64 {
    let mut n = n;
    let mut sign = 1;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return 0;
            }
            sign = -sign;
        }
        p += 1;
    }
    if n > 1 {
        sign = -sign;
    }
    sign
}

pub fn divisors(n: u64) -> Vec<u64> {
    (1..=n).filter(|d| n % d == 0).collect()
}

/// Given `c_r = #Fix(sigma^r)` for each `r | N`, returns `e_r`, the number
/// of points whose orbit has exactly `r` elements, by Mobius inversion.
pub fn orbit_counts(order: u64, fixed: &BTreeMap<u64, i64>) -> BTreeMap<u64, i64> {
    divisors(order)
        .into_iter()
        .map(|r| {
            let e = divisors(r)
                .into_iter()
                .map(|d| mobius(r / d) * fixed.get(&d).copied().unwrap_or(0))
                .sum();
            (r, e)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PowerRow {
    /// Power `sigma^r`.
    pub r: u64,
    /// Order of `sigma^r`.
    pub power_order: u64,
    pub fixed_points: i64,
    /// Points with stabilizer exactly `<sigma^r>`.
    pub exact_orbit_points: i64,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PowerConsistency {
    pub order: u64,
    pub rows: Vec<PowerRow>,
    pub consistent: bool,
}

/// Checks the symplectic table across all powers of an order-`n` action:
/// `#Fix(sigma^r)` is the table entry for order `n / r`, orbit counts are
/// nonnegative multiples of the orbit size, and the stabilizer counts agree.
pub fn nikulin_power_consistency(n: u64) -> Result<PowerConsistency> {
    let fixed: BTreeMap<u64, i64> = divisors(n)
        .into_iter()
        .map(|r| {
            nikulin_fixed_points(n / r)
                .map(|c| (r, c as i64))
                .ok_or_else(|| Error::Invalid(format!("no symplectic automorphism of order {}", n / r)))
        })
        .collect::<Result<_>>()?;
    let orbits = orbit_counts(n, &fixed);
    let stabilizers = nikulin_stabilizers(n);
    let rows: Vec<PowerRow> = divisors(n)
        .into_iter()
        .map(|r| {
            let e = orbits[&r];
            let stab = n / r;
            let listed_ok = if r == 1 || r == n {
                true
            } else {
                let listed = stabilizers.iter().find(|(o, _)| *o == stab).map_or(0, |x| x.1 as i64);
                listed == e
            };
            PowerRow {
                r,
                power_order: n / r,
                fixed_points: fixed[&r],
                exact_orbit_points: e,
                ok: e >= 0 && e % r as i64 == 0 && listed_ok,
            }
        })
        .collect();
    let consistent = rows.iter().all(|r| r.ok);
    Ok(PowerConsistency { order: n, rows, consistent })
}

/// `1 + zeta_N^-n` over all factorizations with `N <= max_order`:
/// `(n, m, vanishes)`.
pub fn lhs_vanishing_table(max_order: u64) -> Result<Vec<(u64, u64, bool)>> {
    let mut out = Vec::new();
    for big_n in 1..=max_order {
        for n in divisors(big_n) {
            out.push((n, big_n / n, holomorphic_lhs(n as i64, big_n)?.is_zero()));
        }
    }
    Ok(out)
}

/// The residual when it lies in `Q`; zero for a balanced config.
pub fn residual_is_rational(b: &Balance) -> Option<BigRational> {
    match b {
        Balance::Balanced => Some(BigRational::zero()),
        Balance::Unbalanced { residual } => residual.as_rational(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn cyc_int(n: u64, x: i64) -> CyclotomicNumber {
        CyclotomicNumber::from_int(n, x).unwrap()
    }

    #[test]
    fn contributions() {
        assert_eq!(point_contribution(1, 1, 2).unwrap().as_rational(), Some(rat(1, 4)));
        assert_eq!(point_contribution(1, 2, 3).unwrap().as_rational(), Some(rat(1, 3)));
        assert!(matches!(point_contribution(0, 1, 3), Err(Error::Pole { .. })));
        assert!(curve_contribution(1, 3, 0, 7).unwrap().is_zero());
        assert!(curve_contribution(0, 1, -2, 2).unwrap().is_zero());
        assert_eq!(curve_contribution(0, 1, 0, 2).unwrap().as_rational(), Some(rat(1, 2)));
        assert!(k3_curve_contribution(1, 2, 5).unwrap().is_zero());
        assert!(k3_curve_contribution(0, 1, 2).unwrap().is_zero());
        assert!(k3_curve_contribution(0, 0, 3).is_err());
    }

    #[test]
    fn lhs_values() {
        assert_eq!(holomorphic_lhs(0, 5).unwrap(), cyc_int(5, 2));
        assert!(holomorphic_lhs(1, 2).unwrap().is_zero());
        assert!(holomorphic_lhs(3, 6).unwrap().is_zero());
        assert!(!holomorphic_lhs(2, 6).unwrap().is_zero());
    }

    #[test]
    fn specialization() {
        for n in [3u64, 4, 5, 7, 12] {
            for s in 1..n as i64 {
                for g in 0..4 {
                    assert!(specialization_matches(g, -s, s, n).unwrap());
                }
            }
        }
        // r = s fails away from the m = 2 case
        assert!(!specialization_matches(0, 1, 1, 3).unwrap());
    }

    #[test]
    fn verify_examples() {
        let cfg = |k| FixedPointConfig { n: 2, s: 0, points: vec![(1, 1, k)], curves: vec![] };
        assert!(verify_config(&cfg(8)).unwrap().is_balanced());
        let b = verify_config(&cfg(7)).unwrap();
        assert_eq!(residual_is_rational(&b), Some(rat(1, 4)));
        let six = FixedPointConfig { n: 3, s: 0, points: vec![(1, 2, 6)], curves: vec![] };
        assert!(verify_config(&six).unwrap().is_balanced());
        let bad = FixedPointConfig { n: 3, s: 0, points: vec![(1, 1, 1)], curves: vec![] };
        assert!(verify_config(&bad).is_err());
    }

    #[test]
    fn nonsymplectic_order_three() {
        // s = 1: n isolated points of weight (2, 2) and curves of genus g_k
        // satisfy n = 3 + sum (1 - g_k)
        let cfg = FixedPointConfig {
            n: 3,
            s: 1,
            points: vec![(2, 2, 4)],
            curves: vec![FixedCurve { g: 0, r: 2, c2: -2 }],
        };
        assert!(verify_config(&cfg).unwrap().is_balanced());
    }

    #[test]
    fn symplectic_search() {
        let opts = SearchOptions::default();
        for (n, count) in [(2, 8), (3, 6), (5, 4), (7, 3)] {
            let sols = search_point_configs(n, 0, opts).unwrap();
            assert_eq!(sols.len(), 1, "N = {n}");
            assert_eq!(sols[0].point_count(), count);
            assert!(verify_config(&sols[0]).unwrap().is_balanced());
        }
        let five = &search_point_configs(5, 0, opts).unwrap()[0];
        assert_eq!(five.points, vec![(1, 4, 2), (2, 3, 2)]);
        let faithful = SearchOptions { faithful: true, ..opts };
        for (n, count) in [(4, 4), (6, 2), (8, 2)] {
            let sols = search_point_configs(n, 0, faithful).unwrap();
            assert_eq!(sols[0].point_count(), count, "N = {n}");
        }
    }

    #[test]
    fn counts_and_guarantees() {
        assert_eq!(chi_equals_count(8, 2, 1).unwrap(), 8);
        assert_eq!(chi_equals_count(0, 2, 2).unwrap(), 0);
        assert!(matches!(chi_equals_count(-3, 3, 1), Err(Error::Inconsistent(_))));
        assert!(fixed_points_guaranteed(1, 3).unwrap().guaranteed);
        assert!(!fixed_points_guaranteed(1, 2).unwrap().guaranteed);
        let g = fixed_points_guaranteed(4, 1).unwrap();
        assert!(g.guaranteed && g.lhs.as_rational() == Some(int(2)));
    }

    #[test]
    fn power_consistency() {
        for n in 2..=8 {
            let report = nikulin_power_consistency(n).unwrap();
            assert!(report.consistent, "order {n}: {report:?}");
        }
        let eight = nikulin_power_consistency(8).unwrap();
        let e: Vec<i64> = eight.rows.iter().map(|r| r.exact_orbit_points).collect();
        assert_eq!(e, vec![2, 2, 4, 16]);
        assert_eq!(mobius(12), 0);
        assert_eq!(mobius(30), -1);
    }
}
