//! Worked values, each checked against an independent computation or the
//! published numbers.

use std::collections::{BTreeMap, BTreeSet};

use k3eq_core::action::{
    derived_partner_check, enriques_reference, enriques_signature, factorization,
    discriminant_action, mukai_block_action, mukai_lattice, order_admissibility, trace_gate,
    validate_action, ActionInvariants, DiscriminantActionClass, K3Action, TraceSequence,
};
use k3eq_core::cyclotomic::CyclotomicNumber;
use k3eq_core::discriminant::{DiscriminantForm, FormComparison, DEFAULT_ORDER_LIMIT};
use k3eq_core::forms::{
    enumerate_even, gauss_reduce, genus_partition, mazur_search, represents, BinaryEvenLattice,
    Sign,
};
use k3eq_core::isometry::{
    find_stable_isometry, is_isometric_definite, same_genus, verify_genus_certificate,
    verify_isometry, GenusVerdict, IsometryVerdict, StableIsometryVerdict,
};
use k3eq_core::lattice::{e8, hyperbolic_plane};
use k3eq_core::lefschetz::{
    chi_equals_count, curve_contribution, fixed_points_guaranteed, holomorphic_lhs,
    k3_curve_contribution, point_contribution, search_point_configs, verify_config,
    FixedPointConfig, SearchOptions,
};
use k3eq_core::{IntegerLattice, ZMatrix};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

fn q(p: i64, d: i64) -> BigRational {
    BigRational::new(p.into(), d.into())
}

fn ints(v: &[i64]) -> Vec<BigInt> {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

fn lat(rows: &[[i64; 2]]) -> IntegerLattice {
    IntegerLattice::from_rows(rows).unwrap()
}

fn form(a: i64, b: i64, c: i64) -> BinaryEvenLattice {
    BinaryEvenLattice::from_gram([[a, b], [b, c]]).unwrap()
}

/// `(element order, q mod 2)` multiset of `d(L)` for a binary Gram matrix,
/// listing `L*/L` as `adj(G) y / det` for `y` modulo `det`.
fn brute_value_multiset(g: [[i64; 2]; 2]) -> BTreeMap<(i64, BigRational), usize> {
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    let n = det.abs();
    let adj = [[g[1][1], -g[0][1]], [-g[1][0], g[0][0]]];
    let mut seen = BTreeMap::new();
    for y0 in 0..n {
        for y1 in 0..n {
            let u = [
                (adj[0][0] * y0 + adj[0][1] * y1).rem_euclid(n),
                (adj[1][0] * y0 + adj[1][1] * y1).rem_euclid(n),
            ];
            seen.entry(u).or_insert_with(|| {
                let num = y0 * (adj[0][0] * y0 + adj[0][1] * y1) + y1 * (adj[1][0] * y0 + adj[1][1] * y1);
                let mut val = q(num, det);
                let two = BigRational::from_integer(2.into());
                val = val.clone() - (val / &two).floor() * &two;
                let order = n / u[0].gcd(&u[1]).gcd(&n);
                (order, val)
            });
        }
    }
    let mut out = BTreeMap::new();
    for v in seen.into_values() {
        *out.entry(v).or_insert(0) += 1;
    }
    out
}

#[test]
fn smith_forms() {
    let d = ZMatrix::from_rows(&[[4, 0], [0, 6]]).smith_normal_form().diagonal();
    assert_eq!(d, ints(&[2, 12]));
    let d = ZMatrix::from_rows(&[[2, 5], [5, 2]]).smith_normal_form().diagonal();
    assert_eq!(d, ints(&[1, 21]));
}

#[test]
fn discriminant_of_the_rank_two_picard_lattice() {
    let l = lat(&[[2, 5], [5, 2]]);
    let d = DiscriminantForm::of(&l).unwrap();
    assert_eq!(d.order(), 21);
    assert_eq!(d.invariant_factors(), &[21]);
    // (f1 - f2)/3 and (f1 + f2)/7 are dual vectors of orders 3 and 7.
    let g = l.gram();
    for (v, ord) in [(vec![q(1, 3), q(-1, 3)], 3u64), (vec![q(1, 7), q(1, 7)], 7)] {
        let gv = g.mul_rational_vec(&v);
        assert!(gv.iter().all(|x| x.is_integer()));
        let c = d.reduce_glue_vector(&v).unwrap();
        let order = c.iter().zip(d.orders()).fold(1u64, |acc, (&x, &o)| acc.lcm(&(o / x.gcd(&o))));
        assert_eq!(order, ord);
    }
}

#[test]
fn two_times_e8_has_elementary_discriminant() {
    let d = DiscriminantForm::of(&e8().twist(2).unwrap()).unwrap();
    assert_eq!(d.invariant_factors(), &[2; 8]);
}

/// Coordinates of `v` in `Z/3 x Z/7` with respect to `d1`, `d2`, by trying
/// every pair.
fn glue_oracle(v: &[BigRational], d1: &[BigRational], d2: &[BigRational]) -> (i64, i64) {
    let mut hits = Vec::new();
    for x in 0..3 {
        for y in 0..7 {
            let r: Vec<BigRational> = (0..2)
                .map(|i| &v[i] - &d1[i] * BigRational::from_integer(x.into()) - &d2[i] * BigRational::from_integer(y.into()))
                .collect();
            if r.iter().all(|c| c.is_integer()) {
                hits.push((x, y));
            }
        }
    }
    assert_eq!(hits.len(), 1);
    hits[0]
}

#[test]
fn glue_expressions_of_the_eigenvectors() {
    let l = lat(&[[2, 5], [5, 2]]);
    let v1 = vec![q(-5, 21), q(2, 21)];
    let v2 = vec![q(2, 21), q(-5, 21)];
    // d1 = (f2 - f1)/3 gives the published coefficients (-1, 3) and (1, -4).
    let d1 = vec![q(-1, 3), q(1, 3)];
    let d2 = vec![q(1, 7), q(1, 7)];
    assert_eq!(glue_oracle(&v1, &d1, &d2), ((-1i64).rem_euclid(3), 3));
    assert_eq!(glue_oracle(&v2, &d1, &d2), (1, (-4i64).rem_euclid(7)));
    let d = DiscriminantForm::with_generators(&l, vec![d1.clone(), d2.clone()]).unwrap();
    assert_eq!(d.reduce_glue_vector(&v1).unwrap(), vec![2, 3]);
    assert_eq!(d.reduce_glue_vector(&v2).unwrap(), vec![1, 3]);
    // With d1 = (f1 - f2)/3 the first coordinate flips sign.
    let d1_literal = vec![q(1, 3), q(-1, 3)];
    assert_eq!(glue_oracle(&v1, &d1_literal, &d2), (1, 3));
    assert_eq!(glue_oracle(&v2, &d1_literal, &d2), (2, 3));
}

#[test]
fn determinants_of_standard_lattices() {
    let u = hyperbolic_plane();
    assert_eq!(u.det(), BigInt::from(-1));
    let k3 = IntegerLattice::standard("K3").unwrap();
    assert_eq!((k3.rank(), k3.det()), (22, BigInt::from(-1)));
    assert_eq!(k3.signature(), (3, 19));
    let mukai = mukai_lattice();
    assert_eq!((mukai.rank(), mukai.det()), (24, BigInt::from(1)));
    assert_eq!(mukai.signature(), (4, 20));
    // Block product: det U(2) = -4, det E8(-2) = 2^8.
    let r = enriques_reference();
    assert_eq!(r.rank(), 10);
    assert_eq!(r.det(), BigInt::from(-4 * 256));
    assert_eq!(r.signature(), (1, 9));
}

#[test]
fn complement_satisfies_the_index_identity() {
    let amb = lat(&[[2, 5], [5, 2]]).direct_sum(&hyperbolic_plane());
    let f1 = ints(&[1, 0, 0, 0]);
    let c = amb.orthogonal_complement(&[f1.clone()]).unwrap();
    assert_eq!(c.lattice.rank(), 3);
    // Index of span + complement in the ambient lattice.
    let mut cols = vec![f1.clone()];
    cols.extend((0..3).map(|j| c.basis.column(j)));
    let index = ZMatrix::from_columns(&cols).det().abs();
    let lhs = amb.det().abs() * &index * &index;
    let rhs = amb.norm(&f1).abs() * c.lattice.det().abs();
    assert_eq!(lhs, rhs);
    for j in 0..3 {
        assert!(amb.inner(&f1, &c.basis.column(j)).is_zero());
    }
}

#[test]
fn mazur_lattices_are_distinct_but_stably_equivalent() {
    let a = form(-4, -1, -12).to_lattice();
    let b = form(-6, -1, -8).to_lattice();
    assert_eq!(is_isometric_definite(&a, &b, 1_000_000).unwrap(), IsometryVerdict::NotIsometric);
    // Oracle: A has vectors of norm -4, B does not.
    let has_norm = |f: BinaryEvenLattice, n: i64| {
        (-10i64..=10).any(|x| (-10i64..=10).any(|y| f.eval(x, y) == n))
    };
    assert!(has_norm(form(-4, -1, -12), -4));
    assert!(!has_norm(form(-6, -1, -8), -4));

    assert_eq!(
        brute_value_multiset([[-4, -1], [-1, -12]]),
        brute_value_multiset([[-6, -1], [-1, -8]])
    );
    let GenusVerdict::SameGenus(cert) = same_genus(&a, &b, DEFAULT_ORDER_LIMIT).unwrap() else {
        panic!("A and B should share a genus");
    };
    assert!(verify_genus_certificate(&a, &b, &cert));

    let StableIsometryVerdict::Found(w) = find_stable_isometry(&a, &b, 10_000_000).unwrap() else {
        panic!("budget exhausted");
    };
    let u = hyperbolic_plane();
    assert!(verify_isometry(a.direct_sum(&u).gram(), b.direct_sum(&u).gram(), &w)
        || verify_isometry(b.direct_sum(&u).gram(), a.direct_sum(&u).gram(), &w));
    assert!(w.det().abs() == BigInt::from(1));
}

#[test]
fn principal_form_genus_agrees_with_value_multisets() {
    let p = form(-2, -1, -24).to_lattice();
    let a = form(-4, -1, -12).to_lattice();
    let oracle = brute_value_multiset([[-2, -1], [-1, -24]]) == brute_value_multiset([[-4, -1], [-1, -12]]);
    assert_eq!(same_genus(&p, &a, DEFAULT_ORDER_LIMIT).unwrap().is_same(), oracle);
    // 47 is prime, so there is a single genus of determinant 47.
    assert!(oracle);
}

#[test]
fn discriminant_form_of_a_negated_lattice_differs() {
    let l = lat(&[[2, 5], [5, 2]]);
    let d = DiscriminantForm::of(&l).unwrap();
    let dn = DiscriminantForm::of(&l.negated()).unwrap();
    let oracle_equal = brute_value_multiset([[2, 5], [5, 2]]) == brute_value_multiset([[-2, -5], [-5, -2]]);
    assert!(!oracle_equal);
    assert!(d.isomorphism_to(&dn, FormComparison::Isometry, DEFAULT_ORDER_LIMIT).unwrap().is_none());
    assert!(d.isomorphism_to(&dn, FormComparison::AntiIsometry, DEFAULT_ORDER_LIMIT).unwrap().is_some());
}

fn apply(g: [[i64; 2]; 2], w: [[i64; 2]; 2]) -> [[i64; 2]; 2] {
    let mut r = [[0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    r[i][j] += w[k][i] * g[k][l] * w[l][j];
                }
            }
        }
    }
    r
}

#[test]
fn reduction_matches_brute_force_over_sl2() {
    assert_eq!(gauss_reduce(&form(2, 1, 24)).unwrap().reduced, form(2, 1, 24));
    let g = [[4, 9], [9, 22]];
    let red = gauss_reduce(&BinaryEvenLattice::from_gram(g).unwrap()).unwrap();
    let mut reduced = BTreeSet::new();
    for p in -30i64..=30 {
        for r in -30i64..=30 {
            for qq in -30i64..=30 {
                // s from p s - q r = 1 when solvable
                if p == 0 {
                    continue;
                }
                let num = 1 + qq * r;
                if num % p != 0 {
                    continue;
                }
                let s = num / p;
                if s.abs() > 30 {
                    continue;
                }
                let h = apply(g, [[p, qq], [r, s]]);
                let f = BinaryEvenLattice::from_gram(h).unwrap();
                if f.is_reduced() {
                    reduced.insert((f.a, f.b, f.c));
                }
            }
        }
    }
    assert_eq!(reduced.into_iter().collect::<Vec<_>>(), vec![(red.reduced.a, red.reduced.b, red.reduced.c)]);
    assert_eq!(red.reduced, form(2, 1, 4));
}

#[test]
fn enumeration_of_small_and_published_determinants() {
    let got: Vec<_> = enumerate_even(47, Sign::Positive);
    let want = [form(2, 1, 24), form(4, 1, 12), form(4, -1, 12), form(6, 1, 8), form(6, -1, 8)];
    assert_eq!(got.len(), 5);
    for f in want {
        assert!(got.contains(&f), "{f:?}");
    }
    assert_eq!(enumerate_even(3, Sign::Positive), vec![form(2, 1, 2)]);
    assert_eq!(enumerate_even(4, Sign::Positive), vec![form(2, 0, 2)]);
}

#[test]
fn representation_of_roots() {
    assert_eq!(represents(&form(2, 1, 24), 2).unwrap(), Some((1, 0)));
    assert_eq!(represents(&form(4, 1, 12), 2).unwrap(), None);
    assert_eq!(represents(&form(-6, -1, -8), -2).unwrap(), None);
    let reps: Vec<_> = enumerate_even(47, Sign::Positive)
        .into_iter()
        .filter(|f| represents(f, 2).unwrap().is_some())
        .collect();
    assert_eq!(reps, vec![form(2, 1, 24)]);
}

#[test]
fn genus_partition_of_determinant_47() {
    let genera = genus_partition(47, Sign::Negative).unwrap();
    let a = form(-4, -1, -12);
    let b = form(-6, -1, -8);
    let home = genera.iter().find(|g| g.members.contains(&a)).unwrap();
    for f in [a, b, form(-4, 1, -12), form(-6, 1, -8)] {
        assert!(home.members.contains(&f));
    }
    // Oracle partition by value multisets.
    let mut oracle: BTreeMap<_, BTreeSet<(i64, i64, i64)>> = BTreeMap::new();
    for f in enumerate_even(47, Sign::Negative) {
        oracle.entry(brute_value_multiset(f.gram())).or_default().insert((f.a, f.b, f.c));
    }
    let got: BTreeSet<BTreeSet<(i64, i64, i64)>> = genera
        .iter()
        .map(|g| g.members.iter().map(|f| (f.a, f.b, f.c)).collect())
        .collect();
    assert_eq!(got, oracle.into_values().collect());
}

/// Unordered pairs of isometry classes (keyed by the classical `(a, |b|, c)`
/// of `a x^2 + b x y + c y^2`) in one genus
/// with no vector of norm -2.
fn mazur_oracle(det: u64) -> BTreeSet<((i64, i64, i64), (i64, i64, i64))> {
    let classes: BTreeSet<(i64, i64, i64)> =
        enumerate_even(det, Sign::Negative).iter().map(|f| (f.a, f.b.abs(), f.c)).collect();
    let rootless: Vec<_> = classes
        .into_iter()
        .filter(|&(a, b, c)| {
            let f = BinaryEvenLattice::new(a, b, c);
            !(-12i64..=12).any(|x| (-12i64..=12).any(|y| f.eval(x, y) == -2))
        })
        .collect();
    let mut out = BTreeSet::new();
    for (i, &x) in rootless.iter().enumerate() {
        for &y in &rootless[i + 1..] {
            let same = brute_value_multiset(BinaryEvenLattice::new(x.0, x.1, x.2).gram())
                == brute_value_multiset(BinaryEvenLattice::new(y.0, y.1, y.2).gram());
            if same {
                out.insert((x.min(y), x.max(y)));
            }
        }
    }
    out
}

fn as_pairs(det_range: std::ops::RangeInclusive<u64>) -> BTreeSet<((i64, i64, i64), (i64, i64, i64))> {
    mazur_search(det_range)
        .unwrap()
        .into_iter()
        .map(|p| {
            let x = (p.a.a, p.a.b.abs(), p.a.c);
            let y = (p.b.a, p.b.b.abs(), p.b.c);
            (x.min(y), x.max(y))
        })
        .collect()
}

#[test]
fn mazur_search_matches_oracle() {
    let got = as_pairs(47..=47);
    // A = -[[4,1],[1,12]] is (-2, -1, -6), B = -[[6,1],[1,8]] is (-3, -1, -4).
    assert!(got.contains(&((-3, 1, -4), (-2, 1, -6))));
    assert_eq!(got, mazur_oracle(47));
    // Regression fixture: nothing below 31.
    let small = as_pairs(1..=30);
    let oracle: BTreeSet<_> = (1..=30).flat_map(mazur_oracle).collect();
    assert_eq!(small, oracle);
    assert!(small.is_empty());
}

#[test]
fn cyclotomic_products_and_point_terms() {
    let z = CyclotomicNumber::zeta_pow(3, 1).unwrap();
    let one = CyclotomicNumber::one(3).unwrap();
    let prod = &(&one - &z) * &(&one - &z.pow(2));
    assert_eq!(prod.as_rational(), Some(q(3, 1)));
    assert_eq!(point_contribution(1, 2, 3).unwrap().as_rational(), Some(q(1, 3)));

    // (5 + sqrt 5)/10 with sqrt 5 = z + z^4 - z^2 - z^3, reduced: (2 - z^2 - z^3)/5.
    let a = point_contribution(1, 4, 5).unwrap();
    let want = CyclotomicNumber::from_coeffs(5, vec![q(2, 5), q(0, 1), q(-1, 5), q(-1, 5)]).unwrap();
    assert_eq!(a, want);
    let float: f64 = a
        .coeffs()
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let c: f64 = c.numer().to_string().parse::<f64>().unwrap() / c.denom().to_string().parse::<f64>().unwrap();
            c * (2.0 * std::f64::consts::PI * k as f64 / 5.0).cos()
        })
        .sum();
    assert!((float - (5.0 + 5f64.sqrt()) / 10.0).abs() < 1e-12);
}

#[test]
fn curve_terms() {
    assert!(curve_contribution(0, 1, -2, 2).unwrap().is_zero());
    assert!(k3_curve_contribution(0, 1, 2).unwrap().is_zero());
    // (1 + z)/(1 - z)^2 = (-z^2)/(-3 z) = z/3 in Q(zeta_3).
    let t = k3_curve_contribution(0, 1, 3).unwrap();
    assert_eq!(t, CyclotomicNumber::zeta_pow(3, 1).unwrap().scale(&q(1, 3)));
}

#[test]
fn holomorphic_left_side() {
    assert!(holomorphic_lhs(3, 6).unwrap().is_zero());
    assert!(!holomorphic_lhs(2, 6).unwrap().is_zero());
}

#[test]
fn published_point_configurations() {
    for (n, pts) in [(2u64, vec![(1, 1, 8)]), (3, vec![(1, 2, 6)])] {
        let cfg = FixedPointConfig { n, s: 0, points: pts, curves: vec![] };
        assert!(verify_config(&cfg).unwrap().is_balanced());
    }
    let opts = SearchOptions { max_points: 20, faithful: false };
    let two = search_point_configs(2, 0, opts).unwrap();
    assert_eq!(two.len(), 1);
    assert_eq!(two[0].canonical().points, vec![(1, 1, 8)]);
    let five = search_point_configs(5, 0, opts).unwrap();
    assert_eq!(five.len(), 1);
    assert_eq!(five[0].canonical().points, vec![(1, 4, 2), (2, 3, 2)]);
    let seven = search_point_configs(7, 0, opts).unwrap();
    assert_eq!(seven.len(), 1);
    assert_eq!(seven[0].point_count(), 3);
}

#[test]
fn counts_and_guarantees() {
    assert_eq!(chi_equals_count(8, 2, 1).unwrap(), 8);
    assert_eq!(chi_equals_count(0, 2, 2).unwrap(), 0);
    assert!(fixed_points_guaranteed(1, 3).unwrap().guaranteed);
    assert!(!fixed_points_guaranteed(1, 2).unwrap().guaranteed);
}

#[test]
fn block_actions() {
    let minus = ZMatrix::identity(2).neg();
    let a = K3Action { order: 2, s: 1, mukai_matrix: mukai_block_action(&[&minus]), pic: None };
    // -1 on a hyperbolic plane preserves the pairing.
    assert!(validate_action(&a).is_valid());
    // +1 on U^4, -1 on E8(-1)^2.
    let m = ZMatrix::block_diag(&[&ZMatrix::identity(8), &ZMatrix::identity(16).neg()]);
    assert_eq!(m.trace(), BigInt::from(8 - 16));
    assert!(chi_equals_count(-8, 2, 1).is_err());
    let f = factorization(6, 3).unwrap();
    assert_eq!((f.n, f.m), (3, 2));
}

fn seq(t: i64) -> TraceSequence {
    TraceSequence::new(8, BTreeMap::from([(1, t), (2, 4), (4, 8)])).unwrap()
}

#[test]
fn order_eight_trace_rows() {
    for t in [0, 2, 4] {
        assert!(trace_gate(&seq(t), 2).unwrap().passed, "t = {t}");
    }
    let inv = |t| ActionInvariants::from_traces(8, 4, seq(t)).unwrap();
    let r = derived_partner_check(&inv(0), &inv(2));
    assert!(!r.compatible);
    assert_eq!(r.first_mismatch().unwrap().invariant, "chi(sigma)");
    // Equal traces, different 2-form order.
    let tr = TraceSequence::new(4, BTreeMap::from([(1, 4), (2, 8)])).unwrap();
    let x = ActionInvariants::from_traces(4, 2, tr.clone()).unwrap();
    let y = ActionInvariants::from_traces(4, 0, tr).unwrap();
    assert_eq!(derived_partner_check(&x, &y).first_mismatch().unwrap().invariant, "factorization");
}

#[test]
fn admissibility() {
    assert!(!order_admissibility(1, 23).admissible);
    assert!(!order_admissibility(9, 1).admissible);
    assert!(!order_admissibility(8, 2).admissible);
    assert!(order_admissibility(1, 66).admissible);
}

#[test]
fn enriques_comparison() {
    assert!(enriques_signature(&enriques_reference()).unwrap().matches);
    let u = hyperbolic_plane();
    let wrong1 = u.direct_sum(&e8().twist(2).unwrap());
    assert!(!enriques_signature(&wrong1).unwrap().matches);
    let wrong2 = u.twist(2).unwrap().direct_sum(&e8());
    assert_eq!(wrong2.det(), BigInt::from(-4));
    assert!(!enriques_signature(&wrong2).unwrap().matches);
}

#[test]
fn involution_on_the_discriminant_group() {
    let l = lat(&[[2, 5], [5, 2]]);
    // Fixes f1, negates 2 f2 - 5 f1: f2 -> 5 f1 - f2.
    let w = ZMatrix::from_rows(&[[1, 5], [0, -1]]);
    assert!(verify_isometry(l.gram(), l.gram(), &w));
    // Oracle: the unit u with w x = u x on a generator x = G^-1 e1 of Z/21.
    let x = [q(-2, 21), q(5, 21)];
    let wx = [&x[0] + &x[1] * q(5, 1), -&x[1]];
    let units: Vec<i64> = (1..21)
        .filter(|u| (0..2).all(|i| (&wx[i] - &x[i] * q(*u, 1)).is_integer()))
        .collect();
    assert_eq!(units, vec![20]);
    let act = discriminant_action(&l, &w).unwrap();
    assert_eq!(act.class, DiscriminantActionClass::MinusOne);
}

#[test]
fn negative_traces_are_not_point_counts() {
    let r = BigInt::from(-8);
    assert!(r.is_negative());
    assert!(chi_equals_count(-8, 4, 1).is_err());
}
