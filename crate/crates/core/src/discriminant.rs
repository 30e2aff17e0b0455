//! Discriminant groups `d(L) = L*/L` with their finite bilinear and quadratic
//! forms.
//!
//! Glue vectors are rational vectors in the lattice basis. A vector `v` lies
//! in the dual lattice iff `G v` is integral; its class is trivial iff `v` is
//! integral. The Smith form `U G V = D` identifies `d(L)` with
//! `Z^n / D Z^n` via `v -> U G v`, and the columns of `V D^{-1}` give glue
//! vectors for the invariant factors. Default generators split each
//! invariant factor into prime-power cyclic pieces, listed by increasing
//! prime and then exponent.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::IntegerLattice;
use crate::matrix::ZMatrix;
use crate::rational::{common_denominator, format_rational, is_integral, reduce_mod1, reduce_mod2};

/// Default cap on the group order for brute-force comparisons.
pub const DEFAULT_ORDER_LIMIT: u128 = 1 << 16;

#[derive(Clone, Debug)]
pub struct DiscriminantForm {
    gram: ZMatrix,
    even: bool,
    invariant_factors: Vec<u64>,
    /// Rows of the Smith `U` belonging to the nontrivial invariant factors.
    coord_rows: ZMatrix,
    generators: Vec<Vec<BigRational>>,
    orders: Vec<u64>,
    /// `P`, `Q` from the Smith form of `[C | D]`, used to rewrite canonical
    /// coordinates in the generator basis.
    solve_p: ZMatrix,
    solve_q: ZMatrix,
    bilinear: Vec<Vec<BigRational>>,
    quadratic: Option<Vec<BigRational>>,
}

/// How two forms are compared: `q2(phi x) = q1(x)` or `q2(phi x) = -q1(x)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormComparison {
    Isometry,
    AntiIsometry,
}

/// Images of the source generators, as coefficient vectors in the target's
/// generator basis.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormIsomorphism {
    pub mode: FormComparison,
    pub images: Vec<Vec<u64>>,
}

/// JSON report: invariant factors, generators as exact `p/q` strings and the
/// quadratic values modulo 2 (bilinear `b(g,g)` modulo 1 for odd lattices).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscriminantReport {
    pub invariant_factors: Vec<u64>,
    pub generators: Vec<Vec<String>>,
    pub orders: Vec<u64>,
    pub q_values: Vec<String>,
}

impl DiscriminantForm {
    /// `d(L)` with the default primary-decomposition generators.
    pub fn of(lattice: &IntegerLattice) -> Result<Self> {
        lattice.ensure_nondegenerate()?;
        let gram = lattice.gram().clone();
        let n = gram.rows();
        let smith = gram.smith_normal_form();
        let diag = smith.diagonal();

        let mut nontrivial = Vec::new();
        for (j, d) in diag.iter().enumerate() {
            if !d.is_one() {
                let d = d.to_u64().ok_or_else(|| {
                    Error::Invalid("invariant factor does not fit in 64 bits".into())
                })?;
                nontrivial.push((j, d));
            }
        }

        let mut primary = Vec::new();
        for &(j, d) in &nontrivial {
            let col = smith.v.column(j);
            for (p, e) in factorize(d) {
                let q = p.pow(e);
                let g: Vec<BigRational> = col
                    .iter()
                    .map(|x| centered_mod1(&BigRational::new(x.clone(), BigInt::from(q))))
                    .collect();
                primary.push(((p, e), g));
            }
        }
        primary.sort_by_key(|((p, e), _)| (*p, *e));
        let generators = primary.into_iter().map(|(_, g)| g).collect();

        let mut coord_rows = ZMatrix::zeros(nontrivial.len(), n);
        for (r, &(j, _)) in nontrivial.iter().enumerate() {
            for c in 0..n {
                coord_rows[(r, c)] = smith.u[(j, c)].clone();
            }
        }
        let invariant_factors = nontrivial.iter().map(|&(_, d)| d).collect();
        Self::assemble(gram, lattice.is_even(), invariant_factors, coord_rows, generators)
    }

    /// `d(L)` presented on caller-chosen glue vectors, which must form a
    /// basis: their classes generate and their orders multiply to `|d(L)|`.
    pub fn with_generators(lattice: &IntegerLattice, generators: Vec<Vec<BigRational>>) -> Result<Self> {
        let base = Self::of(lattice)?;
        Self::assemble(
            base.gram,
            base.even,
            base.invariant_factors,
            base.coord_rows,
            generators,
        )
    }

    fn assemble(
        gram: ZMatrix,
        even: bool,
        invariant_factors: Vec<u64>,
        coord_rows: ZMatrix,
        generators: Vec<Vec<BigRational>>,
    ) -> Result<Self> {
        let n = gram.rows();
        let m = invariant_factors.len();
        let group_order: u128 = invariant_factors.iter().map(|&d| d as u128).product();

        let mut orders = Vec::with_capacity(generators.len());
        let mut canon = ZMatrix::zeros(m, generators.len());
        for (i, g) in generators.iter().enumerate() {
            if g.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: g.len() });
            }
            let c = canonical_coordinates(&gram, &coord_rows, &invariant_factors, g)?;
            for (r, x) in c.into_iter().enumerate() {
                canon[(r, i)] = x;
            }
            let o = common_denominator(g)
                .to_u64()
                .ok_or_else(|| Error::InvalidGenerators("generator order too large".into()))?;
            if o == 1 {
                return Err(Error::InvalidGenerators(format!("generator {i} is trivial")));
            }
            orders.push(o);
        }
        let product: u128 = orders.iter().map(|&o| o as u128).product();
        if product != group_order {
            return Err(Error::InvalidGenerators(format!(
                "orders multiply to {product}, group has order {group_order}"
            )));
        }

        let relations = ZMatrix::diagonal(
            &invariant_factors.iter().map(|&d| BigInt::from(d)).collect::<Vec<_>>(),
        );
        let presentation = canon.hstack(&relations);
        let smith = presentation.smith_normal_form();
        if smith.rank() != m || !smith.diagonal().iter().all(One::is_one) {
            return Err(Error::InvalidGenerators("classes do not generate d(L)".into()));
        }

        let k = generators.len();
        let mut bilinear = vec![vec![BigRational::zero(); k]; k];
        for i in 0..k {
            let gi = gram.mul_rational_vec(&generators[i]);
            for j in 0..k {
                bilinear[i][j] = reduce_mod1(&crate::rational::dot(&generators[j], &gi));
            }
        }
        let quadratic = even.then(|| {
            generators
                .iter()
                .map(|g| reduce_mod2(&crate::rational::dot(g, &gram.mul_rational_vec(g))))
                .collect()
        });

        Ok(DiscriminantForm {
            gram,
            even,
            invariant_factors,
            coord_rows,
            generators,
            orders,
            solve_p: smith.u,
            solve_q: smith.v,
            bilinear,
            quadratic,
        })
    }

    /// The same group with the form negated, i.e. `d(L(-1))` on the same
    /// glue vectors.
    pub fn negated(&self) -> Self {
        let lattice = IntegerLattice::new(self.gram.neg()).expect("nondegenerate");
        Self::with_generators(&lattice, self.generators.clone()).expect("same generators")
    }

    pub fn is_even(&self) -> bool {
        self.even
    }

    pub fn invariant_factors(&self) -> &[u64] {
        &self.invariant_factors
    }

    pub fn generators(&self) -> &[Vec<BigRational>] {
        &self.generators
    }

    pub fn orders(&self) -> &[u64] {
        &self.orders
    }

    pub fn bilinear_values(&self) -> &[Vec<BigRational>] {
        &self.bilinear
    }

    pub fn quadratic_values(&self) -> Option<&[BigRational]> {
        self.quadratic.as_deref()
    }

    /// `q(g_i)` mod 2 for even lattices, otherwise `b(g_i, g_i)` mod 1.
    pub fn diagonal_values(&self) -> Vec<BigRational> {
        match &self.quadratic {
            Some(q) => q.clone(),
            None => (0..self.generators.len()).map(|i| self.bilinear[i][i].clone()).collect(),
        }
    }

    pub fn order(&self) -> u128 {
        self.invariant_factors.iter().map(|&d| d as u128).product()
    }

    pub fn exponent(&self) -> u64 {
        self.invariant_factors.last().copied().unwrap_or(1)
    }

    pub fn is_trivial(&self) -> bool {
        self.invariant_factors.is_empty()
    }

    /// Coefficients `c` (each in `[0, order_i)`) with `v = sum c_i g_i` in `d(L)`.
    pub fn reduce_glue_vector(&self, v: &[BigRational]) -> Result<Vec<u64>> {
        if v.len() != self.gram.rows() {
            return Err(Error::DimensionMismatch { expected: self.gram.rows(), got: v.len() });
        }
        let c = canonical_coordinates(&self.gram, &self.coord_rows, &self.invariant_factors, v)?;
        let mut z = self.solve_p.mul_vec(&c);
        z.resize(self.solve_q.rows(), BigInt::zero());
        let y = self.solve_q.mul_vec(&z);
        Ok(self
            .orders
            .iter()
            .zip(&y)
            .map(|(&o, x)| x.mod_floor(&BigInt::from(o)).to_u64().expect("reduced"))
            .collect())
    }

    /// The glue vector `sum c_i g_i`.
    pub fn vector_of(&self, coeffs: &[u64]) -> Vec<BigRational> {
        let n = self.gram.rows();
        let mut v = vec![BigRational::zero(); n];
        for (g, &c) in self.generators.iter().zip(coeffs) {
            let c = BigRational::from_integer(BigInt::from(c));
            for (x, y) in v.iter_mut().zip(g) {
                *x += &c * y;
            }
        }
        v
    }

    /// Whether two coefficient vectors name the same class.
    pub fn same_class(&self, a: &[i64], b: &[i64]) -> bool {
        self.orders
            .iter()
            .zip(a.iter().zip(b))
            .all(|(&o, (x, y))| (x - y).rem_euclid(o as i64) == 0)
    }

    fn table(&self) -> ValueTable {
        ValueTable::new(self)
    }

    /// Census of `(element order, value)` over the whole group; a complete
    /// invariant only in combination with the bilinear structure, but cheap
    /// and sufficient to separate most genera.
    pub fn value_census(&self, limit: u128) -> Result<BTreeMap<(u64, BigRational), usize>> {
        self.check_limit(limit)?;
        let t = self.table();
        let mut census = BTreeMap::new();
        for x in t.elements() {
            let key = (t.element_order(&x), t.value_rational(t.value(&x)));
            *census.entry(key).or_insert(0) += 1;
        }
        Ok(census)
    }

    fn check_limit(&self, limit: u128) -> Result<()> {
        if self.order() > limit {
            Err(Error::OrderLimitExceeded { order: self.order(), limit })
        } else {
            Ok(())
        }
    }

    /// Finds a group isomorphism `phi: self -> other` preserving the form
    /// (or negating it, for [`FormComparison::AntiIsometry`]). The quadratic
    /// form is matched when both sides are even; otherwise only the bilinear
    /// form.
    pub fn isomorphism_to(
        &self,
        other: &DiscriminantForm,
        mode: FormComparison,
        limit: u128,
    ) -> Result<Option<FormIsomorphism>> {
        if self.order() != other.order() {
            return Ok(None);
        }
        self.check_limit(limit)?;
        if self.invariant_factors != other.invariant_factors {
            return Ok(None);
        }
        let quadratic = self.even && other.even;
        let src = ValueTable::with_kind(self, quadratic);
        let dst = ValueTable::with_kind(other, quadratic);
        let sign: i128 = match mode {
            FormComparison::Isometry => 1,
            FormComparison::AntiIsometry => -1,
        };

        let dst_elements: Vec<Vec<u64>> = dst.elements().collect();
        let dst_info: Vec<(u64, i128)> = dst_elements
            .iter()
            .map(|x| (dst.element_order(x), dst.value(x)))
            .collect();

        let mut src_census: BTreeMap<(u64, i128), usize> = BTreeMap::new();
        for x in src.elements() {
            let v = src.normalize_value(sign * src.value(&x));
            *src_census.entry((src.element_order(&x), v)).or_insert(0) += 1;
        }
        let mut dst_census: BTreeMap<(u64, i128), usize> = BTreeMap::new();
        for &info in &dst_info {
            *dst_census.entry(info).or_insert(0) += 1;
        }
        if src_census != dst_census {
            return Ok(None);
        }

        let k = self.generators.len();
        let candidates: Vec<Vec<usize>> = (0..k)
            .map(|i| {
                let unit = unit_vector(k, i);
                let want = (self.orders[i], src.normalize_value(sign * src.value(&unit)));
                (0..dst_elements.len()).filter(|&e| dst_info[e] == want).collect()
            })
            .collect();
        let src_bilinear: Vec<Vec<i128>> = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| src.normalize_bilinear(sign * src.bilinear_scaled[i][j]))
                    .collect()
            })
            .collect();

        let mut chosen: Vec<usize> = Vec::with_capacity(k);
        let found = backtrack(&candidates, &src_bilinear, &dst, &dst_elements, &mut chosen);
        Ok(found.then(|| FormIsomorphism {
            mode,
            images: chosen.iter().map(|&e| dst_elements[e].clone()).collect(),
        }))
    }

    /// Checks a claimed isomorphism exactly, including bijectivity.
    pub fn verify_isomorphism(&self, other: &DiscriminantForm, iso: &FormIsomorphism) -> bool {
        let k = self.generators.len();
        if iso.images.len() != k || self.order() != other.order() {
            return false;
        }
        let quadratic = self.even && other.even;
        let src = ValueTable::with_kind(self, quadratic);
        let dst = ValueTable::with_kind(other, quadratic);
        let sign: i128 = match iso.mode {
            FormComparison::Isometry => 1,
            FormComparison::AntiIsometry => -1,
        };
        if iso.images.iter().any(|h| h.len() != other.generators.len()) {
            return false;
        }
        let mut seen = std::collections::HashSet::new();
        for x in src.elements() {
            let image = dst.combine(&iso.images, &x);
            if dst.normalize_value(sign * src.value(&x)) != dst.value(&image) {
                return false;
            }
            if !seen.insert(image) {
                return false;
            }
        }
        for i in 0..k {
            for j in 0..k {
                let lhs = dst.bilinear(&iso.images[i], &iso.images[j]);
                if lhs != dst.normalize_bilinear(sign * src.bilinear_scaled[i][j]) {
                    return false;
                }
            }
        }
        true
    }

    /// Image of the class with coefficients `x` under a self-map given by
    /// generator images.
    pub fn apply(&self, iso: &FormIsomorphism, x: &[u64]) -> Vec<u64> {
        let mut out = vec![0u128; self.orders.len()];
        for (img, &c) in iso.images.iter().zip(x) {
            for (o, (slot, &v)) in self.orders.iter().zip(out.iter_mut().zip(img)) {
                *slot = (*slot + c as u128 * v as u128) % *o as u128;
            }
        }
        out.into_iter().map(|v| v as u64).collect()
    }

    /// Every automorphism of the group preserving the form, by exhaustive
    /// choice of generator images.
    pub fn automorphisms(&self, limit: u128) -> Result<Vec<FormIsomorphism>> {
        self.check_limit(limit)?;
        let k = self.orders.len();
        let combos = self.order().checked_pow(k as u32).unwrap_or(u128::MAX);
        if combos > limit {
            return Err(Error::OrderLimitExceeded { order: combos, limit });
        }
        let elements: Vec<Vec<u64>> = self.table().elements().collect();
        let mut out = Vec::new();
        let mut idx = vec![0usize; k];
        loop {
            let iso = FormIsomorphism {
                mode: FormComparison::Isometry,
                images: idx.iter().map(|&i| elements[i].clone()).collect(),
            };
            if self.verify_isomorphism(self, &iso) {
                out.push(iso);
            }
            let mut pos = 0;
            loop {
                if pos == k {
                    return Ok(out);
                }
                idx[pos] += 1;
                if idx[pos] < elements.len() {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
        }
    }

    pub fn report(&self) -> DiscriminantReport {
        DiscriminantReport {
            invariant_factors: self.invariant_factors.clone(),
            generators: self
                .generators
                .iter()
                .map(|g| g.iter().map(format_rational).collect())
                .collect(),
            orders: self.orders.clone(),
            q_values: self.diagonal_values().iter().map(format_rational).collect(),
        }
    }
}

fn unit_vector(k: usize, i: usize) -> Vec<u64> {
    let mut v = vec![0; k];
    v[i] = 1;
    v
}

fn backtrack(
    candidates: &[Vec<usize>],
    src_bilinear: &[Vec<i128>],
    dst: &ValueTable,
    dst_elements: &[Vec<u64>],
    chosen: &mut Vec<usize>,
) -> bool {
    let i = chosen.len();
    if i == candidates.len() {
        return true;
    }
    for &e in &candidates[i] {
        let h = &dst_elements[e];
        let consistent = chosen
            .iter()
            .enumerate()
            .all(|(j, &c)| dst.bilinear(h, &dst_elements[c]) == src_bilinear[i][j]);
        if !consistent {
            continue;
        }
        chosen.push(e);
        if backtrack(candidates, src_bilinear, dst, dst_elements, chosen) {
            return true;
        }
        chosen.pop();
    }
    false
}

/// Integer-scaled form values: with `e` the exponent, bilinear values are
/// stored as `e * b mod e` and quadratic values as `e * q mod 2e`.
struct ValueTable {
    orders: Vec<u64>,
    scale: i128,
    quadratic: bool,
    bilinear_scaled: Vec<Vec<i128>>,
    diag_scaled: Vec<i128>,
}

impl ValueTable {
    fn new(f: &DiscriminantForm) -> Self {
        Self::with_kind(f, f.even)
    }

    fn with_kind(f: &DiscriminantForm, quadratic: bool) -> Self {
        let e = f.exponent() as i128;
        let scale = |x: &BigRational| -> i128 {
            let y = x * BigRational::from_integer(BigInt::from(e));
            assert!(y.is_integer(), "value denominator divides the exponent");
            y.to_integer().to_i128().expect("small")
        };
        let bilinear_scaled: Vec<Vec<i128>> =
            f.bilinear.iter().map(|r| r.iter().map(&scale).collect()).collect();
        let diag_scaled = match (&f.quadratic, quadratic) {
            (Some(q), true) => q.iter().map(&scale).collect(),
            _ => (0..f.generators.len()).map(|i| bilinear_scaled[i][i]).collect(),
        };
        ValueTable {
            orders: f.orders.clone(),
            scale: e,
            quadratic,
            bilinear_scaled,
            diag_scaled,
        }
    }

    fn modulus(&self) -> i128 {
        if self.quadratic {
            2 * self.scale
        } else {
            self.scale
        }
    }

    fn normalize_value(&self, v: i128) -> i128 {
        v.rem_euclid(self.modulus())
    }

    fn normalize_bilinear(&self, v: i128) -> i128 {
        v.rem_euclid(self.scale)
    }

    fn value_rational(&self, v: i128) -> BigRational {
        BigRational::new(BigInt::from(v), BigInt::from(self.scale))
    }

    fn elements(&self) -> impl Iterator<Item = Vec<u64>> + '_ {
        let total: u128 = self.orders.iter().map(|&o| o as u128).product();
        (0..total).map(move |mut idx| {
            self.orders
                .iter()
                .map(|&o| {
                    let c = (idx % o as u128) as u64;
                    idx /= o as u128;
                    c
                })
                .collect()
        })
    }

    fn element_order(&self, x: &[u64]) -> u64 {
        self.orders
            .iter()
            .zip(x)
            .fold(1u64, |acc, (&o, &c)| acc.lcm(&(o / o.gcd(&c))))
    }

    fn value(&self, x: &[u64]) -> i128 {
        let k = x.len();
        let mut acc: i128 = 0;
        for i in 0..k {
            let xi = x[i] as i128;
            acc += xi * xi * self.diag_scaled[i];
            for j in i + 1..k {
                acc += 2 * xi * (x[j] as i128) * self.bilinear_scaled[i][j];
            }
            acc = acc.rem_euclid(self.modulus());
        }
        acc
    }

    fn bilinear(&self, x: &[u64], y: &[u64]) -> i128 {
        let mut acc: i128 = 0;
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0 {
                continue;
            }
            for (j, &yj) in y.iter().enumerate() {
                acc += (xi as i128) * (yj as i128) * self.bilinear_scaled[i][j];
            }
            acc = acc.rem_euclid(self.scale);
        }
        acc
    }

    /// `sum x_i images_i`, reduced by the target orders.
    fn combine(&self, images: &[Vec<u64>], x: &[u64]) -> Vec<u64> {
        let mut out = vec![0u128; self.orders.len()];
        for (img, &c) in images.iter().zip(x) {
            for (o, &h) in out.iter_mut().zip(img) {
                *o += c as u128 * h as u128;
            }
        }
        out.iter()
            .zip(&self.orders)
            .map(|(&v, &o)| (v % o as u128) as u64)
            .collect()
    }
}

fn canonical_coordinates(
    gram: &ZMatrix,
    coord_rows: &ZMatrix,
    invariant_factors: &[u64],
    v: &[BigRational],
) -> Result<Vec<BigInt>> {
    let w = gram.mul_rational_vec(v);
    if !is_integral(&w) {
        return Err(Error::NotGlueVector);
    }
    let w: Vec<BigInt> = w.into_iter().map(|x| x.to_integer()).collect();
    Ok(coord_rows
        .mul_vec(&w)
        .into_iter()
        .zip(invariant_factors)
        .map(|(c, &d)| c.mod_floor(&BigInt::from(d)))
        .collect())
}

/// Representative of `x mod 1` in `(-1/2, 1/2]`.
fn centered_mod1(x: &BigRational) -> BigRational {
    let r = reduce_mod1(x);
    if r > BigRational::new(BigInt::one(), BigInt::from(2)) {
        r - BigRational::one()
    } else {
        r
    }
}

/// Prime factorization by trial division, primes ascending.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}
