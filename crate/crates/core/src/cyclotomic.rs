//! Exact arithmetic in `Q(zeta_N)`: dense rational coordinates in the power
//! basis `1, zeta, ..., zeta^(phi(N)-1)` modulo the cyclotomic polynomial.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::format_rational;

/// `Phi_n` with integer coefficients, constant term first.
pub fn cyclotomic_polynomial(n: u64) -> Vec<BigInt> {
    assert!(n > 0, "cyclotomic polynomial of order 0");
    // x^n - 1 divided by Phi_d for every proper divisor d
    let mut p = vec![BigInt::zero(); n as usize + 1];
    p[0] = BigInt::from(-1);
    p[n as usize] = BigInt::one();
    for d in (1..n).filter(|d| n % d == 0) {
        p = exact_div_monic(&p, &cyclotomic_polynomial(d));
    }
    p
}

fn exact_div_monic(num: &[BigInt], den: &[BigInt]) -> Vec<BigInt> {
    let mut r = num.to_vec();
    let dd = den.len() - 1;
    let mut q = vec![BigInt::zero(); r.len() - dd];
    for k in (0..q.len()).rev() {
        let c = r[k + dd].clone();
        if c.is_zero() {
            continue;
        }
        for (i, di) in den.iter().enumerate() {
            r[k + i] -= &c * di;
        }
        q[k] = c;
    }
    debug_assert!(r.iter().all(Zero::is_zero));
    q
}

pub fn euler_phi(n: u64) -> u64 {
    (1..=n).filter(|k| k.gcd(&n) == 1).count() as u64
}

#[derive(Debug)]
pub struct CyclotomicField {
    n: u64,
    modulus: Vec<BigInt>,
}

impl CyclotomicField {
    pub fn get(n: u64) -> Result<Arc<CyclotomicField>> {
        if n == 0 {
            return Err(Error::Invalid("conductor must be positive".into()));
        }
        static CACHE: OnceLock<Mutex<HashMap<u64, Arc<CyclotomicField>>>> = OnceLock::new();
        let mut cache = CACHE.get_or_init(Default::default).lock().expect("cache poisoned");
        Ok(cache
            .entry(n)
            .or_insert_with(|| {
                Arc::new(CyclotomicField {
                    n,
                    modulus: cyclotomic_polynomial(n),
                })
            })
            .clone())
    }

    pub fn conductor(&self) -> u64 {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.modulus.len() - 1
    }

    pub fn modulus(&self) -> &[BigInt] {
        &self.modulus
    }

    /// Remainder modulo the monic `Phi_N`, padded to `degree()` entries.
    fn reduce(&self, mut p: Vec<BigInt>) -> Vec<BigInt> {
        let deg = self.degree();
        for k in (deg..p.len()).rev() {
            let c = std::mem::take(&mut p[k]);
            if c.is_zero() {
                continue;
            }
            for (i, m) in self.modulus[..deg].iter().enumerate() {
                if !m.is_zero() {
                    p[k - deg + i] -= &c * m;
                }
            }
        }
        p.resize(deg, BigInt::zero());
        p
    }
}

#[derive(Clone)]
pub struct CyclotomicNumber {
    field: Arc<CyclotomicField>,
    coeffs: Vec<BigRational>,
}

impl PartialEq for CyclotomicNumber {
    fn eq(&self, other: &Self) -> bool {
        self.field.n == other.field.n && self.coeffs == other.coeffs
    }
}

impl Eq for CyclotomicNumber {}

impl CyclotomicNumber {
    /// Reduces an arbitrary-length polynomial in `zeta` modulo `Phi_N`.
    pub fn from_poly(field: &Arc<CyclotomicField>, poly: Vec<BigRational>) -> Self {
        let (ints, den) = integral(&poly);
        Self::from_integral(field, ints, &den)
    }

    /// `poly / den` reduced modulo `Phi_N`. Reduction stays in `Z[x]` since
    /// `Phi_N` is monic, so only the final division touches rationals.
    fn from_integral(field: &Arc<CyclotomicField>, poly: Vec<BigInt>, den: &BigInt) -> Self {
        let p = field.reduce(poly);
        CyclotomicNumber {
            field: field.clone(),
            coeffs: p.into_iter().map(|c| BigRational::new(c, den.clone())).collect(),
        }
    }

    pub fn from_coeffs(n: u64, coeffs: Vec<BigRational>) -> Result<Self> {
        let field = CyclotomicField::get(n)?;
        Ok(Self::from_poly(&field, coeffs))
    }

    pub fn from_rational(n: u64, x: BigRational) -> Result<Self> {
        Self::from_coeffs(n, vec![x])
    }

    pub fn from_int(n: u64, x: i64) -> Result<Self> {
        Self::from_rational(n, BigRational::from_integer(BigInt::from(x)))
    }

    pub fn zero(n: u64) -> Result<Self> {
        Self::from_coeffs(n, vec![])
    }

    pub fn one(n: u64) -> Result<Self> {
        Self::from_int(n, 1)
    }

    /// `zeta_N^k`; negative exponents allowed.
    pub fn zeta_pow(n: u64, k: i64) -> Result<Self> {
        let field = CyclotomicField::get(n)?;
        let e = k.rem_euclid(n as i64) as usize;
        let mut p = vec![BigRational::zero(); e + 1];
        p[e] = BigRational::one();
        Ok(Self::from_poly(&field, p))
    }

    pub fn conductor(&self) -> u64 {
        self.field.n
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// `Some(q)` when the number lies in `Q`.
    pub fn as_rational(&self) -> Option<BigRational> {
        self.coeffs[1..]
            .iter()
            .all(Zero::is_zero)
            .then(|| self.coeffs[0].clone())
    }

    fn same_field(&self, other: &Self) {
        assert_eq!(
            self.field.n, other.field.n,
            "mixing cyclotomic fields of different conductors"
        );
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        CyclotomicNumber {
            field: self.field.clone(),
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
    }

    pub fn pow(&self, mut e: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Self::from_poly(&self.field, vec![BigRational::one()]);
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse `prod_{a != 1} sigma_a(x) / N(x)`, where the
    /// norm `N(x)` is the rational product of all conjugates.
    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let field = &self.field;
        let n = field.n as i64;
        let (x, _) = integral(&self.coeffs);
        let mut others = vec![BigInt::one()];
        for a in (2..n).filter(|a| a.gcd(&n) == 1) {
            let conj = field.reduce(substitute(&x, a, n));
            others = field.reduce(int_mul(&others, &conj));
        }
        let norm = field.reduce(int_mul(&x, &others));
        debug_assert!(norm[1..].iter().all(Zero::is_zero));
        let norm = norm[0].clone();
        if norm.is_zero() {
            return Err(Error::DivisionByZero);
        }
        // 1/x = (others / norm) * (x / self), and x / self is the denominator
        let (_, den) = integral(&self.coeffs);
        let scaled: Vec<BigInt> = others.into_iter().map(|c| c * &den).collect();
        Ok(Self::from_integral(field, scaled, &norm))
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        self.same_field(other);
        Ok(self * &other.inv()?)
    }

    /// Galois automorphism `zeta -> zeta^a`, `gcd(a, N) = 1`.
    pub fn galois(&self, a: i64) -> Result<Self> {
        let n = self.field.n as i64;
        if a.gcd(&n) != 1 {
            return Err(Error::Invalid(format!("{a} is not a unit mod {n}")));
        }
        Ok(self.substitute_power(a))
    }

    fn substitute_power(&self, a: i64) -> Self {
        let (x, den) = integral(&self.coeffs);
        Self::from_integral(&self.field, substitute(&x, a, self.field.n as i64), &den)
    }

    /// Complex conjugation, `zeta -> zeta^-1`.
    pub fn conj(&self) -> Self {
        self.substitute_power(-1)
    }

    /// Field trace to `Q`: the sum of all Galois conjugates.
    pub fn trace(&self) -> BigRational {
        let n = self.field.n as i64;
        let mut acc = Self::from_poly(&self.field, vec![]);
        for a in (1..=n).filter(|a| a.gcd(&n) == 1) {
            acc = &acc + &self.substitute_power(a);
        }
        acc.as_rational().expect("Galois trace is rational")
    }

    /// Image in `Q(zeta_{N k})` under `zeta_N -> zeta_{N k}^k`.
    pub fn lift(&self, k: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::Invalid("lift factor must be positive".into()));
        }
        let big = CyclotomicField::get(self.field.n * k)?;
        let mut p = vec![BigRational::zero(); (self.coeffs.len().max(1) - 1) * k as usize + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            p[i * k as usize] = c.clone();
        }
        Ok(Self::from_poly(&big, p))
    }

    /// Inverse of [`lift`](Self::lift): the preimage in `Q(zeta_m)` for
    /// `m | N`, or an error when the number does not lie in that subfield.
    pub fn restrict(&self, m: u64) -> Result<Self> {
        let n = self.field.n;
        if m == 0 || n % m != 0 {
            return Err(Error::Invalid(format!("{m} does not divide {n}")));
        }
        let small = CyclotomicField::get(m)?;
        let k = n / m;
        // Solve linear system: lifted basis images span a subspace of Q^phi(N)
        let rows: Vec<Vec<BigRational>> = (0..small.degree())
            .map(|i| Self::zeta_pow(n, (i as u64 * k) as i64).map(|z| z.coeffs))
            .collect::<Result<_>>()?;
        let x = solve_in_span(&rows, &self.coeffs)
            .ok_or_else(|| Error::Invalid(format!("not in the subfield of conductor {m}")))?;
        Ok(Self::from_poly(&small, x))
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.coeffs.iter().map(format_rational).collect()
    }
}

/// Solves `sum_i x_i rows[i] = target` by Gaussian elimination.
fn solve_in_span(rows: &[Vec<BigRational>], target: &[BigRational]) -> Option<Vec<BigRational>> {
    let k = rows.len();
    let dim = target.len();
    // augmented matrix: dim equations, k unknowns
    let mut a: Vec<Vec<BigRational>> = (0..dim)
        .map(|r| {
            let mut row: Vec<BigRational> = rows.iter().map(|v| v[r].clone()).collect();
            row.push(target[r].clone());
            row
        })
        .collect();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..k {
        let Some(p) = (row..dim).find(|&r| !a[r][col].is_zero()) else { continue };
        a.swap(row, p);
        let inv = a[row][col].recip();
        for x in a[row].iter_mut() {
            *x *= &inv;
        }
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
    let mut x = vec![BigRational::zero(); k];
    for (r, &c) in pivots.iter().enumerate() {
        x[c] = a[r][k].clone();
    }
    Some(x)
}

/// Integer numerators over a common denominator.
fn integral(v: &[BigRational]) -> (Vec<BigInt>, BigInt) {
    let den = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints = v.iter().map(|x| x.numer() * (&den / x.denom())).collect();
    (ints, den)
}

fn int_mul(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `sum c_i zeta^(a i)` as a polynomial of degree below `n`.
fn substitute(x: &[BigInt], a: i64, n: i64) -> Vec<BigInt> {
    let mut acc = vec![BigInt::zero(); n as usize];
    for (i, c) in x.iter().enumerate() {
        acc[(a * i as i64).rem_euclid(n) as usize] += c;
    }
    acc
}

impl Add for &CyclotomicNumber {
    type Output = CyclotomicNumber;
    fn add(self, rhs: &CyclotomicNumber) -> CyclotomicNumber {
        self.same_field(rhs);
        CyclotomicNumber {
            field: self.field.clone(),
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CyclotomicNumber {
    type Output = CyclotomicNumber;
    fn sub(self, rhs: &CyclotomicNumber) -> CyclotomicNumber {
        self.same_field(rhs);
        CyclotomicNumber {
            field: self.field.clone(),
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &CyclotomicNumber {
    type Output = CyclotomicNumber;
    fn mul(self, rhs: &CyclotomicNumber) -> CyclotomicNumber {
        self.same_field(rhs);
        let (a, da) = integral(&self.coeffs);
        let (b, db) = integral(&rhs.coeffs);
        CyclotomicNumber::from_integral(&self.field, int_mul(&a, &b), &(da * db))
    }
}

impl Neg for &CyclotomicNumber {
    type Output = CyclotomicNumber;
    fn neg(self) -> CyclotomicNumber {
        CyclotomicNumber {
            field: self.field.clone(),
            coeffs: self.coeffs.iter().map(|a| -a).collect(),
        }
    }
}

impl fmt::Debug for CyclotomicNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for CyclotomicNumber {
    /// Power-basis expansion, e.g. `1/2 - 3/4*z^2` with `z = zeta_N`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let mag = c.abs();
            let sign = if c.is_negative() { "-" } else { "+" };
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let unit = mag.is_one() && i > 0;
            if !unit {
                write!(f, "{mag}")?;
            }
            match i {
                0 => {}
                _ if unit => write!(f, "z{}", if i == 1 { String::new() } else { format!("^{i}") })?,
                1 => write!(f, "*z")?,
                _ => write!(f, "*z^{i}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn z(n: u64, k: i64) -> CyclotomicNumber {
        CyclotomicNumber::zeta_pow(n, k).unwrap()
    }

    fn c(n: u64, x: i64) -> CyclotomicNumber {
        CyclotomicNumber::from_int(n, x).unwrap()
    }

    #[test]
    fn polynomials() {
        let ints = |v: &[i64]| v.iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>();
        assert_eq!(cyclotomic_polynomial(1), ints(&[-1, 1]));
        assert_eq!(cyclotomic_polynomial(6), ints(&[1, -1, 1]));
        assert_eq!(cyclotomic_polynomial(12), ints(&[1, 0, -1, 0, 1]));
        assert_eq!(cyclotomic_polynomial(66).len() - 1, 20);
        assert_eq!(euler_phi(66), 20);
    }

    #[test]
    fn basic_values() {
        assert_eq!(z(2, 1), c(2, -1));
        assert_eq!(&(&c(3, 1) - &z(3, 1)) * &(&c(3, 1) - &z(3, 2)), c(3, 3));
        assert!((&c(2, 1) + &z(2, -1)).is_zero());
        assert_eq!(z(7, 7), c(7, 1));
        assert_eq!(z(5, -1), z(5, 4));
    }

    #[test]
    fn inverse_in_q_zeta5() {
        let x = &(&c(5, 2) - &z(5, 1)) - &z(5, 4);
        let inv = x.inv().unwrap();
        assert_eq!(&inv * &x, c(5, 1));
        // (5 + sqrt5)/10 with sqrt5 = 1 + 2(z + z^4)
        let sqrt5 = &c(5, 1) + &(&z(5, 1) + &z(5, 4)).scale(&int(2));
        let want = (&c(5, 5) + &sqrt5).scale(&rat(1, 10));
        assert_eq!(inv, want);
        assert_eq!(c(5, 0).inv(), Err(Error::DivisionByZero));
    }

    #[test]
    fn galois_and_embeddings() {
        let x = &z(12, 1) + &z(12, 5).scale(&rat(2, 3));
        assert_eq!(x.galois(5).unwrap().galois(5).unwrap(), x);
        assert!(x.galois(2).is_err());
        assert_eq!(x.lift(3).unwrap().restrict(12).unwrap(), x);
        assert!(z(12, 1).restrict(4).is_err());
        assert_eq!(z(12, 3).restrict(4).unwrap(), z(4, 1));
        assert_eq!(z(5, 1).trace(), int(-1));
        assert_eq!(format!("{}", &z(5, 1).scale(&rat(-1, 2)) + &c(5, 3)), "3 - 1/2*z");
    }
}
