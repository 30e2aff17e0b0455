//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails. Runs without the libtest harness so the lines always
//! reach the test log.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use k3eq_core::action::{order_admissibility, PURE_ORDERS};
use k3eq_core::cyclotomic::{cyclotomic_polynomial, euler_phi, CyclotomicNumber};
use k3eq_core::discriminant::DiscriminantForm;
use k3eq_core::forms::{enumerate_even, represents, BinaryEvenLattice, Sign};
use k3eq_core::lattice::hyperbolic_plane;
use k3eq_core::lefschetz::{
    holomorphic_lhs, lhs_vanishing_table, nikulin_power_consistency, search_point_configs,
    verify_config, SearchOptions,
};
use k3eq_core::{IntegerLattice, ZMatrix};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use serde_json::Value;

type Verdict = Result<String, String>;

fn data(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "data", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn k3eq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_k3eq")).args(args).output().expect("k3eq runs")
}

fn json(args: &[&str]) -> Result<(i32, Value), String> {
    let mut full = vec!["--format", "json"];
    full.extend_from_slice(args);
    let o = k3eq(&full);
    let code = o.status.code().unwrap_or(-1);
    let text = String::from_utf8_lossy(&o.stdout);
    let v = serde_json::from_str(&text).map_err(|e| format!("{args:?}: bad JSON ({e})"))?;
    Ok((code, v))
}

fn ensure(ok: bool, what: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn within(t: Instant, limit: Duration) -> Result<Duration, String> {
    let e = t.elapsed();
    ensure(e < limit, format!("took {e:.2?}, limit {limit:?}"))?;
    Ok(e)
}

fn gram_of(v: &Value) -> Vec<Vec<i64>> {
    serde_json::from_value(v["gram"].clone()).unwrap_or_default()
}

fn compatible() -> Verdict {
    let t = Instant::now();
    let (code, v) = json(&["reproduce", "compatible"])?;
    let e = within(t, Duration::from_secs(1))?;
    ensure(code == 0, format!("exit {code}"))?;
    ensure(v["group_order"] == 21 && v["invariant_factors"] == serde_json::json!([21]), "d(Pic) is not Z/21")?;
    let glue: Vec<Value> = v["eigenvectors"].as_array().ok_or("no eigenvectors")?.iter().map(|x| x["glue"].clone()).collect();
    ensure(glue == vec![serde_json::json!([-1, 3]), serde_json::json!([1, -4])], format!("glue {glue:?}"))?;
    let verdict = v["verdict"].as_str().unwrap_or("");
    ensure(verdict.starts_with("incompatible"), format!("verdict {verdict:?}"))?;
    ensure(v["passed"] == true, "report checks failed")?;
    Ok(format!("Z/21, glue (-1,3) and (1,-4), verdict incompatible [{e:.2?}]"))
}

fn mazur() -> Verdict {
    let t = Instant::now();
    let (code, rows) = json(&["forms", "enumerate", "--det", "47"])?;
    ensure(code == 0, format!("exit {code}"))?;
    let rows = rows.as_array().ok_or("rows")?.clone();
    let grams: BTreeSet<Vec<Vec<i64>>> = rows.iter().map(gram_of).collect();
    let want: BTreeSet<Vec<Vec<i64>>> = [
        [[2, 1], [1, 24]],
        [[4, 1], [1, 12]],
        [[4, -1], [-1, 12]],
        [[6, 1], [1, 8]],
        [[6, -1], [-1, 8]],
    ]
    .iter()
    .map(|g| g.iter().map(|r| r.to_vec()).collect())
    .collect();
    ensure(rows.len() == 5 && grams == want, format!("forms {grams:?}"))?;
    let roots: Vec<Vec<Vec<i64>>> = rows.iter().filter(|r| r["represents_2"] == true).map(gram_of).collect();
    ensure(roots == vec![vec![vec![2, 1], vec![1, 24]]], format!("representing 2: {roots:?}"))?;

    let (a, b) = (data("mazur_a.json"), data("mazur_b.json"));
    let (_, iso) = json(&["lattice", "isometry", &a, &b])?;
    ensure(iso["verdict"] == "not-isometric", format!("A vs B: {}", iso["verdict"]))?;
    let (_, genera) = json(&["forms", "genus", "--det", "47", "--sign", "negative"])?;
    let same = genera.as_array().ok_or("genera")?.iter().any(|g| {
        let members: Vec<Vec<Vec<i64>>> = serde_json::from_value(g["members"].clone()).unwrap_or_default();
        members.contains(&vec![vec![-4, -1], vec![-1, -12]]) && members.contains(&vec![vec![-6, -1], vec![-1, -8]])
    });
    ensure(same, "A and B not in one genus")?;
    for (x, y, z) in [(-4, -1, -12), (-6, -1, -8)] {
        let f = BinaryEvenLattice::from_gram([[x, y], [y, z]]).map_err(|e| e.to_string())?;
        let brute = (-20i64..=20).any(|p| (-20i64..=20).any(|q| f.eval(p, q) == -2));
        ensure(!brute && represents(&f, -2).map_err(|e| e.to_string())?.is_none(), format!("{f:?} represents -2"))?;
    }
    let e = within(t, Duration::from_secs(1))?;
    Ok(format!("5 forms, only [[2,1],[1,24]] represents 2, A and B distinct in one genus, no roots [{e:.2?}]"))
}

fn niktable() -> Verdict {
    let t = Instant::now();
    let mut found = Vec::new();
    for (n, want) in [(2u64, 8u64), (3, 6), (5, 4), (7, 3)] {
        let o = k3eq(&["--format", "json", "lefschetz", "search", "--N", &n.to_string(), "--s", "0", "--max-points", "24"]);
        ensure(o.status.code() == Some(0), format!("search N={n} failed"))?;
        let sols: Vec<Value> = String::from_utf8_lossy(&o.stdout)
            .lines()
            .map(serde_json::from_str)
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let totals: Vec<u64> = sols
            .iter()
            .map(|s| s["points"].as_array().map_or(0, |p| p.iter().map(|x| x[2].as_u64().unwrap_or(0)).sum()))
            .collect();
        ensure(totals == vec![want], format!("N={n}: totals {totals:?}, want [{want}]"))?;
        found.push(format!("{n}:{want}"));
    }
    for n in [4u64, 6, 8] {
        let pc = nikulin_power_consistency(n).map_err(|e| e.to_string())?;
        ensure(pc.consistent, format!("power consistency fails for {n}"))?;
        for (r, want) in [(2u64, n / 2), (4, n / 4)] {
            if n % r != 0 || want < 2 {
                continue;
            }
            let row = pc.rows.iter().find(|row| row.r == r).ok_or("missing power row")?;
            let table = BTreeMap::from([(2u64, 8i64), (3, 6), (4, 4)]);
            ensure(row.fixed_points == table[&want], format!("sigma^{r} of order {want}: {}", row.fixed_points))?;
        }
    }
    let e = within(t, Duration::from_secs(10))?;
    Ok(format!("unique totals {} and power-consistent 4, 6, 8 [{e:.2?}]", found.join(" ")))
}

fn lhs_vanishing() -> Verdict {
    let t = Instant::now();
    let table = lhs_vanishing_table(66).map_err(|e| e.to_string())?;
    let mut count = 0;
    for n_total in 1..=66u64 {
        for m in (1..=n_total).filter(|m| n_total % m == 0) {
            let n = n_total / m;
            let zero = holomorphic_lhs(n as i64, n_total).map_err(|e| e.to_string())?.is_zero();
            ensure(zero == (m == 2), format!("(n, m) = ({n}, {m}): zero = {zero}"))?;
            ensure(table.contains(&(n, m, zero)), format!("table misses ({n}, {m})"))?;
            count += 1;
        }
    }
    ensure(table.len() == count, "table size")?;
    let e = within(t, Duration::from_secs(1))?;
    Ok(format!("{count} factorizations, zero exactly when m = 2 [{e:.2?}]"))
}

fn orders_gate() -> Verdict {
    // The published list: 2..=28 without 23, then the sporadic orders.
    let listed: Vec<u64> = (2..=28u64)
        .filter(|&m| m != 23)
        .chain([30, 32, 33, 34, 36, 40, 44, 48, 50, 54, 66])
        .collect();
    ensure(PURE_ORDERS == listed.as_slice(), "pure order table differs from the published list")?;
    for m in [23u64, 29, 31] {
        ensure(!order_admissibility(1, m).admissible, format!("m = {m} accepted"))?;
    }
    for &m in &listed {
        ensure(order_admissibility(1, m).admissible, format!("m = {m} rejected"))?;
    }
    for (n, m) in [(9u64, 1u64), (8, 2)] {
        let o = k3eq(&["action", "admissible", "--n", &n.to_string(), "--m", &m.to_string()]);
        ensure(o.status.code() == Some(1), format!("({n}, {m}) not rejected"))?;
    }
    Ok(format!("{} listed orders accepted; 23, 29, 31, n = 9 and (8, 2) rejected", listed.len()))
}

fn trace_rows() -> Verdict {
    let files = ["traces_8_1_t0.json", "traces_8_1_t2.json", "traces_8_1_t4.json"];
    for f in files {
        let (code, v) = json(&["action", "trace", &data(f)])?;
        ensure(code == 0 && v["gate"]["passed"] == true, format!("{f} rejected by the gate"))?;
    }
    for i in 0..3 {
        for j in i + 1..3 {
            let (code, v) = json(&["action", "compare", &data(files[i]), &data(files[j])])?;
            let first = v["checks"]
                .as_array()
                .and_then(|c| c.iter().find(|x| x["matches"] == false))
                .map(|x| x["invariant"].clone());
            ensure(
                code == 1 && first == Some(Value::from("chi(sigma)")),
                format!("{} vs {}: first mismatch {first:?}", files[i], files[j]),
            )?;
        }
    }
    Ok("(0,4,8), (2,4,8), (4,4,8) pass; each pair first differs at chi(sigma)".into())
}

fn runner() -> TestRunner {
    TestRunner::new(Config { cases: 1000, failure_persistence: None, ..Config::default() })
}

fn suite<S: Strategy>(
    name: &str,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<String, String> {
    runner().run(&strategy, test).map_err(|e| format!("{name}: {e}"))?;
    Ok(name.to_string())
}

fn q(p: i64, d: i64) -> BigRational {
    BigRational::new(p.into(), d.into())
}

fn properties() -> Verdict {
    let mut passed = Vec::new();

    passed.push(suite(
        "snf",
        (1usize..=4, 1usize..=4).prop_flat_map(|(r, c)| prop::collection::vec(prop::collection::vec(-12i64..=12, c), r)),
        |rows| {
            let m = ZMatrix::from_rows(&rows);
            let s = m.smith_normal_form();
            prop_assert_eq!(&(&s.u * &m) * &s.v, s.d.clone());
            prop_assert_eq!(s.u.det().magnitude().clone(), 1u32.into());
            prop_assert_eq!(s.v.det().magnitude().clone(), 1u32.into());
            let d = s.diagonal();
            for w in d.windows(2) {
                let divides = if w[0] == BigInt::from(0) { w[1] == BigInt::from(0) } else { w[1].is_multiple_of(&w[0]) };
                prop_assert!(divides);
            }
            Ok(())
        },
    )?);

    passed.push(suite("|d(L)| = |det|", (-9i64..=9, -9i64..=9, -9i64..=9), |(a, b, c)| {
        let det = a * c - b * b;
        if det == 0 {
            return Ok(());
        }
        let l = IntegerLattice::from_rows(&[[a, b], [b, c]]).unwrap();
        let d = DiscriminantForm::of(&l).unwrap();
        let n = det.abs();
        let mut classes = BTreeSet::new();
        for x in 0..n {
            for y in 0..n {
                classes.insert(((c * x - b * y).rem_euclid(n), (a * y - b * x).rem_euclid(n)));
            }
        }
        prop_assert_eq!(d.order(), classes.len() as u128);
        prop_assert_eq!(l.det(), BigInt::from(det));
        prop_assert_eq!(d.order(), det.unsigned_abs() as u128);
        Ok(())
    })?);

    for n in 1..=66u64 {
        let mut acc = CyclotomicNumber::zero(n).unwrap();
        for (e, c) in cyclotomic_polynomial(n).iter().enumerate() {
            acc = &acc + &CyclotomicNumber::zeta_pow(n, e as i64).unwrap().scale(&BigRational::from_integer(c.clone()));
        }
        ensure(acc.is_zero(), format!("Phi_{n}(zeta) != 0"))?;
    }
    passed.push(suite(
        "cyclotomic field",
        (1u64..=66).prop_flat_map(|n| {
            let v = move || prop::collection::vec((-6i64..=6, 1i64..=4), 0..=euler_phi(n) as usize + 2);
            (Just(n), v(), v(), v())
        }),
        |(n, x, y, z)| {
            let mk = |v: &[(i64, i64)]| CyclotomicNumber::from_coeffs(n, v.iter().map(|&(p, d)| q(p, d)).collect()).unwrap();
            let (x, y, z) = (mk(&x), mk(&y), mk(&z));
            prop_assert_eq!(&x * &y, &y * &x);
            prop_assert_eq!(&(&x * &y) * &z, &x * &(&y * &z));
            prop_assert_eq!(&x * &(&y + &z), &(&x * &y) + &(&x * &z));
            prop_assert!((&x + &(-&x)).is_zero());
            if !x.is_zero() {
                prop_assert_eq!(&x * &x.inv().unwrap(), CyclotomicNumber::one(n).unwrap());
            }
            Ok(())
        },
    )?);

    let dets = (3u64..=200).prop_filter("even det", |d| d % 4 == 0 || d % 4 == 3);
    passed.push(suite("enumerate/represents", (dets, any::<prop::sample::Index>(), -5i64..=200), |(det, pick, n)| {
        let forms = enumerate_even(det, Sign::Positive);
        let det = det as i64;
        let mut oracle = BTreeSet::new();
        for a in 1..=det {
            for b in -a..=a {
                if (det + b * b) % (4 * a) == 0 {
                    let c = (det + b * b) / (4 * a);
                    if c >= a && !((b.abs() == a || a == c) && b < 0) {
                        oracle.insert((a, b, c));
                    }
                }
            }
        }
        let got: BTreeSet<_> = forms.iter().map(|f| (f.a, f.b, f.c)).collect();
        prop_assert_eq!(got, oracle);
        let f = forms[pick.index(forms.len())];
        let brute = (-40i64..=40).any(|x| (-40i64..=40).any(|y| (x, y) != (0, 0) && f.eval(x, y) == n));
        prop_assert_eq!(represents(&f, n).unwrap().is_some(), brute);
        Ok(())
    })?);

    passed.push(suite(
        "solver re-verify",
        (2u64..=12).prop_flat_map(|n| (Just(n), 0..n as i64, 0u64..=8, any::<bool>())),
        |(n, s, max_points, faithful)| {
            for cfg in search_point_configs(n, s, SearchOptions { max_points, faithful }).unwrap() {
                prop_assert!(verify_config(&cfg).unwrap().is_balanced());
                prop_assert!(cfg.point_count() <= max_points);
            }
            Ok(())
        },
    )?);

    Ok(format!("{} suites x 1000 cases, zero failures ({})", passed.len(), passed.join(", ")))
}

/// `(element order, q mod 2)` multiset of `d(L)` for a binary Gram matrix,
/// with `x = G^-1 y` running over `y` in `Z^2 / det`.
fn value_multiset(g: [[i64; 2]; 2]) -> BTreeMap<(i64, BigRational), usize> {
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    let n = det.abs();
    let adj = [[g[1][1], -g[0][1]], [-g[1][0], g[0][0]]];
    let two = BigRational::from_integer(2.into());
    let mut seen = BTreeMap::new();
    for y0 in 0..n {
        for y1 in 0..n {
            let u = [adj[0][0] * y0 + adj[0][1] * y1, adj[1][0] * y0 + adj[1][1] * y1];
            let class = [u[0].rem_euclid(n), u[1].rem_euclid(n)];
            seen.entry(class).or_insert_with(|| {
                let v = q(y0 * u[0] + y1 * u[1], det);
                let v = v.clone() - (v / &two).floor() * &two;
                (n / class[0].gcd(&class[1]).gcd(&n), v)
            });
        }
    }
    let mut out = BTreeMap::new();
    for v in seen.into_values() {
        *out.entry(v).or_insert(0) += 1;
    }
    out
}

fn stable_equivalence() -> Verdict {
    let a = IntegerLattice::from_rows(&[[-4, -1], [-1, -12]]).map_err(|e| e.to_string())?;
    let b = IntegerLattice::from_rows(&[[-6, -1], [-1, -8]]).map_err(|e| e.to_string())?;
    let oracle_same = value_multiset([[-4, -1], [-1, -12]]) == value_multiset([[-6, -1], [-1, -8]]);
    ensure(oracle_same, "value multisets differ")?;
    let (code, v) = json(&["lattice", "stable", &data("mazur_a.json"), &data("mazur_b.json")])?;
    ensure(code == 0, format!("exit {code}"))?;
    match v["certificate"].as_str() {
        Some("isometry") => {
            let w: Vec<Vec<i64>> = serde_json::from_value(v["witness"].clone()).map_err(|e| e.to_string())?;
            let w = ZMatrix::from_rows(&w);
            let u = hyperbolic_plane();
            let (ga, gb) = (a.direct_sum(&u).gram().clone(), b.direct_sum(&u).gram().clone());
            let maps = &(&w.transpose() * &ga) * &w == gb;
            ensure(maps, "witness is not an isometry B + U -> A + U")?;
            ensure(w.det().magnitude() == &1u32.into(), "witness is not unimodular")?;
            Ok("explicit isometry B + U -> A + U verified; value multisets agree".into())
        }
        Some("genus") => {
            ensure(v["verifies"] == true, "genus certificate does not verify")?;
            Ok("genus certificate verified; value multisets agree".into())
        }
        other => Err(format!("unexpected certificate {other:?}")),
    }
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 8] = [
        ("compatible example", compatible),
        ("Mazur example", mazur),
        ("symplectic fixed-point table", niktable),
        ("vanishing of 1 + zeta^-n", lhs_vanishing),
        ("orders gate", orders_gate),
        ("order-8 trace rows", trace_rows),
        ("property suites", properties),
        ("stable equivalence", stable_equivalence),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failures += 1;
                println!("criterion {} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
