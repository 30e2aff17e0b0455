use std::fmt::Write as _;

use k3eq_core::action::{
    derived_partner_check, enriques_signature, factorization, order_admissibility, trace_gate,
    trace_sequence, validate_action, ActionInvariants, ActionJson, DeclaredTraces, K3Action,
    TraceSequence,
};
use k3eq_core::cyclotomic::CyclotomicNumber;
use k3eq_core::discriminant::{DiscriminantForm, DEFAULT_ORDER_LIMIT};
use k3eq_core::forms::{
    form_table, gauss_reduce, genus_partition, mazur_search, BinaryEvenLattice, Sign,
};
use k3eq_core::isometry::{
    find_stable_isometry, is_isometric_definite, same_genus, verify_genus_certificate,
    GenusVerdict, IsometryVerdict, StableIsometryVerdict,
};
use k3eq_core::lattice::{LatticeJson, StandardLattice};
use k3eq_core::lefschetz::{
    fixed_points_guaranteed, holomorphic_lhs, search_point_configs, verify_config, Balance,
    FixedPointConfig, SearchOptions,
};
use k3eq_core::rational::format_rational;
use k3eq_core::reproduce::{compatible_report, mazur_report, nikulin_report, Check};
use k3eq_core::{IntegerLattice, ZMatrix};
use serde_json::{json, Value};

use crate::input::{load, parse_range, parse_vectors, read_source, parse_json};
use crate::{
    ActionCmd, Cli, Command, Failure, FormsCmd, Format, LatticeCmd, LefschetzCmd, Outcome,
    ReproduceCmd, SignOpt,
};

type Res = Result<Outcome, Failure>;

pub fn run(cli: &Cli) -> Res {
    match &cli.command {
        Command::Lattice(c) => lattice(cli, c),
        Command::Forms(c) => forms(cli, c),
        Command::Lefschetz(c) => lefschetz(cli, c),
        Command::Action(c) => action(cli, c),
        Command::Reproduce(c) => reproduce(cli, *c),
    }
}

fn emit(fmt: Format, code: u8, value: Value, table: impl FnOnce() -> String) -> Res {
    let text = match fmt {
        Format::Json => serde_json::to_string_pretty(&value).expect("serializable"),
        Format::Table => table(),
    };
    Ok(Outcome { code, text })
}

fn rows(m: &ZMatrix) -> Value {
    match m.to_i64_rows() {
        Some(r) => json!(r),
        None => json!((0..m.rows())
            .map(|i| m.row(i).iter().map(|x| x.to_string()).collect::<Vec<_>>())
            .collect::<Vec<_>>()),
    }
}

fn matrix_text(m: &ZMatrix) -> String {
    format!("{m}")
}

fn cyc(x: &CyclotomicNumber) -> Value {
    json!({ "N": x.conductor(), "coeffs": x.to_strings() })
}

fn load_lattice(arg: &str) -> Result<IntegerLattice, Failure> {
    if let Ok(std) = StandardLattice::parse(arg) {
        return Ok(std.build());
    }
    let j: LatticeJson = load(arg)?;
    Ok(IntegerLattice::try_from(j)?)
}

fn sign(s: SignOpt) -> Sign {
    match s {
        SignOpt::Positive => Sign::Positive,
        SignOpt::Negative => Sign::Negative,
    }
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn lattice(cli: &Cli, cmd: &LatticeCmd) -> Res {
    match cmd {
        LatticeCmd::Disc { input } => {
            let l = load_lattice(input)?;
            let d = DiscriminantForm::of(&l)?;
            let report = d.report();
            let value = json!({
                "label": l.label(),
                "rank": l.rank(),
                "det": l.det().to_string(),
                "signature": l.signature(),
                "even": l.is_even(),
                "discriminant": report,
            });
            emit(cli.format, 0, value, || {
                let mut t = String::new();
                let _ = writeln!(t, "lattice      {}", l.label().unwrap_or("-"));
                let _ = writeln!(t, "rank         {}", l.rank());
                let _ = writeln!(t, "det          {}", l.det());
                let _ = writeln!(t, "signature    {:?}", l.signature());
                let _ = writeln!(t, "even         {}", yes(l.is_even()));
                let _ = writeln!(t, "group        {:?} (order {})", report.invariant_factors, d.order());
                let _ = writeln!(t, "generator\torder\tq");
                for ((g, o), q) in report.generators.iter().zip(&report.orders).zip(&report.q_values) {
                    let _ = writeln!(t, "({})\t{o}\t{q}", g.join(", "));
                }
                t
            })
        }
        LatticeCmd::Complement { input, span } => {
            let l = load_lattice(input)?;
            let vecs = parse_vectors(span)?;
            let span: Vec<Vec<num_bigint::BigInt>> = vecs
                .iter()
                .map(|v| v.iter().map(|&x| x.into()).collect())
                .collect();
            let c = l.orthogonal_complement(&span)?;
            let basis = c.basis.transpose();
            let value = json!({
                "basis": rows(&basis),
                "gram": rows(c.lattice.gram()),
                "rank": c.lattice.rank(),
                "det": c.lattice.det().to_string(),
                "degenerate": c.is_degenerate(),
            });
            emit(cli.format, 0, value, || {
                format!(
                    "basis (rows)\n{}\ngram\n{}\nrank {}  det {}  degenerate {}\n",
                    matrix_text(&basis),
                    matrix_text(c.lattice.gram()),
                    c.lattice.rank(),
                    c.lattice.det(),
                    yes(c.is_degenerate())
                )
            })
        }
        LatticeCmd::Isometry { first, second } => {
            let a = load_lattice(first)?;
            let b = load_lattice(second)?;
            match is_isometric_definite(&a, &b, cli.budget)? {
                IsometryVerdict::Isometric(w) => emit(
                    cli.format,
                    0,
                    json!({ "verdict": "isometric", "witness": rows(&w) }),
                    || format!("isometric\nwitness W (W^T G1 W = G2)\n{}\n", matrix_text(&w)),
                ),
                IsometryVerdict::NotIsometric => emit(
                    cli.format,
                    1,
                    json!({ "verdict": "not-isometric" }),
                    || "not isometric\n".into(),
                ),
                IsometryVerdict::BudgetExceeded { nodes } => emit(
                    cli.format,
                    3,
                    json!({ "verdict": "budget-exceeded", "nodes": nodes }),
                    || format!("budget exhausted after {nodes} nodes\n"),
                ),
            }
        }
        LatticeCmd::Stable { first, second } => {
            let a = load_lattice(first)?;
            let b = load_lattice(second)?;
            let genus = same_genus(&a, &b, DEFAULT_ORDER_LIMIT)?;
            let cert = match genus {
                GenusVerdict::SameGenus(cert) => cert,
                GenusVerdict::DifferentGenus(why) => {
                    return emit(
                        cli.format,
                        1,
                        json!({ "verdict": "different-genus", "reason": why }),
                        || format!("not stably equivalent: {why}\n"),
                    )
                }
            };
            match find_stable_isometry(&a, &b, cli.budget)? {
                StableIsometryVerdict::Found(w) => emit(
                    cli.format,
                    0,
                    json!({ "verdict": "stably-isometric", "certificate": "isometry", "witness": rows(&w) }),
                    || format!("explicit isometry B + U -> A + U (columns)\n{}\n", matrix_text(&w)),
                ),
                StableIsometryVerdict::BudgetExceeded { nodes } => {
                    let ok = verify_genus_certificate(&a, &b, &cert);
                    emit(
                        cli.format,
                        if ok { 0 } else { 1 },
                        json!({ "verdict": "stably-isometric", "certificate": "genus", "nodes": nodes, "genus": cert }),
                        || format!("budget exhausted after {nodes} nodes; genus certificate verifies: {}\n", yes(ok)),
                    )
                }
            }
        }
    }
}

fn gram_string(f: &BinaryEvenLattice) -> String {
    format!("{f}")
}

fn forms(cli: &Cli, cmd: &FormsCmd) -> Res {
    match cmd {
        FormsCmd::Enumerate { det, sign: s } => {
            let table = form_table(*det, sign(s.sign))?;
            let value = json!(table
                .iter()
                .map(|r| {
                    let f = BinaryEvenLattice::new(r.a, r.b, r.c);
                    json!({
                        "gram": f.gram(), "a": r.a, "b": r.b, "c": r.c, "det": r.det,
                        "reduced": r.reduced, "represents_2": r.represents_2, "genus_id": r.genus_id,
                    })
                })
                .collect::<Vec<_>>());
            emit(cli.format, 0, value, || {
                let mut t = String::from("gram\ta\tb\tc\tdet\treduced\trepresents_2\tgenus_id\n");
                for r in &table {
                    let f = BinaryEvenLattice::new(r.a, r.b, r.c);
                    let _ = writeln!(
                        t,
                        "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                        gram_string(&f), r.a, r.b, r.c, r.det, r.reduced, r.represents_2, r.genus_id
                    );
                }
                t
            })
        }
        FormsCmd::Reduce { gram } => {
            let text = read_source(gram)?;
            let v: Value = parse_json(gram, &text)?;
            let g: Vec<Vec<i64>> = if v.is_object() {
                parse_json::<LatticeJson>(gram, &text)?.gram
            } else {
                parse_json(gram, &text)?
            };
            if g.len() != 2 || g.iter().any(|r| r.len() != 2) {
                return Err(Failure::invalid("expected a 2x2 Gram matrix"));
            }
            let f = BinaryEvenLattice::from_gram([[g[0][0], g[0][1]], [g[1][0], g[1][1]]])?;
            let r = gauss_reduce(&f)?;
            let ok = r.verify(&f);
            let value = json!({
                "input": f.gram(),
                "reduced": r.reduced.gram(),
                "basis_change": r.basis_change,
                "negated": r.negated,
                "verified": ok,
            });
            emit(cli.format, if ok { 0 } else { 1 }, value, || {
                format!(
                    "input     {}\nreduced   {}\nW         {:?}\nnegated   {}\nverified  {}\n",
                    f,
                    r.reduced,
                    r.basis_change,
                    yes(r.negated),
                    yes(ok)
                )
            })
        }
        FormsCmd::Genus { det, sign: s } => {
            let genera = genus_partition(*det, sign(s.sign))?;
            let value = json!(genera
                .iter()
                .map(|g| json!({
                    "genus_id": g.id,
                    "members": g.members.iter().map(|f| f.gram()).collect::<Vec<_>>(),
                    "fingerprint": g.fingerprint,
                }))
                .collect::<Vec<_>>());
            emit(cli.format, 0, value, || {
                let mut t = String::new();
                for g in &genera {
                    let members: Vec<String> = g.members.iter().map(gram_string).collect();
                    let _ = writeln!(t, "genus {}: {}", g.id, members.join("  "));
                    let census: Vec<String> = g
                        .fingerprint
                        .iter()
                        .map(|e| format!("{}x(order {}, q {})", e.count, e.order, e.value))
                        .collect();
                    let _ = writeln!(t, "  census: {}", census.join(", "));
                }
                t
            })
        }
        FormsCmd::Mazur { det_range } => {
            let (a, b) = parse_range(det_range)?;
            let pairs = mazur_search(a..=b)?;
            let value = json!(pairs
                .iter()
                .map(|p| json!({ "det": p.det, "a": p.a.gram(), "b": p.b.gram() }))
                .collect::<Vec<_>>());
            emit(cli.format, 0, value, || {
                let mut t = String::from("det\tA\tB\n");
                for p in &pairs {
                    let _ = writeln!(t, "{}\t{}\t{}", p.det, p.a, p.b);
                }
                let _ = writeln!(t, "{} pair(s)", pairs.len());
                t
            })
        }
    }
}

fn config_line(c: &FixedPointConfig) -> String {
    serde_json::to_string(c).expect("serializable")
}

fn lefschetz(cli: &Cli, cmd: &LefschetzCmd) -> Res {
    match cmd {
        LefschetzCmd::Verify { config } => {
            let cfg: FixedPointConfig = load(config)?;
            let balance = verify_config(&cfg)?;
            let lhs = holomorphic_lhs(cfg.s, cfg.n)?;
            let (balanced, residual) = match &balance {
                Balance::Balanced => (true, None),
                Balance::Unbalanced { residual } => (false, Some(residual.clone())),
            };
            let value = json!({
                "balanced": balanced,
                "lhs": cyc(&lhs),
                "residual": residual.as_ref().map(cyc),
                "point_count": cfg.point_count(),
            });
            emit(cli.format, if balanced { 0 } else { 1 }, value, || {
                let mut t = format!("N = {}, s = {}, {} point(s), {} curve(s)\n", cfg.n, cfg.s, cfg.point_count(), cfg.curves.len());
                let _ = writeln!(t, "lhs       {lhs}   (z = zeta_{})", cfg.n);
                match &residual {
                    None => t.push_str("balanced\n"),
                    Some(r) => {
                        let _ = writeln!(t, "residual  {r}\nunbalanced");
                    }
                }
                t
            })
        }
        LefschetzCmd::Search { order, s, max_points, faithful } => {
            let opts = SearchOptions { max_points: *max_points, faithful: *faithful };
            let configs = search_point_configs(*order, *s, opts)?;
            let lines: String = configs.iter().map(|c| config_line(c) + "\n").collect();
            let text = match cli.format {
                Format::Json => lines,
                Format::Table => {
                    let mut t = lines;
                    let _ = writeln!(t, "# N = {order}, s = {s}, max_points = {max_points}, faithful = {faithful}");
                    let _ = writeln!(t, "# total\tpoints");
                    for c in &configs {
                        let pts: Vec<String> = c.points.iter().map(|(i, j, k)| format!("{k}x({i},{j})")).collect();
                        let _ = writeln!(t, "# {}\t{}", c.point_count(), pts.join(" + "));
                    }
                    let _ = writeln!(t, "# {} configuration(s)", configs.len());
                    t
                }
            };
            Ok(Outcome { code: 0, text })
        }
        LefschetzCmd::Guarantee { n, m } => {
            let g = fixed_points_guaranteed(*n, *m)?;
            let value = json!({
                "n": n, "m": m, "N": n * m, "s": n,
                "lhs": cyc(&g.lhs), "lhs_zero": g.lhs.is_zero(), "guaranteed": g.guaranteed,
            });
            emit(cli.format, 0, value, || {
                format!(
                    "N = {} = {n} * {m}, 2-form eigenvalue zeta_N^{n}\n1 + zeta^-{n} = {}\nfixed points guaranteed: {}\n",
                    n * m,
                    g.lhs,
                    yes(g.guaranteed)
                )
            })
        }
    }
}

enum ActionInput {
    Matrix(K3Action),
    Traces(DeclaredTraces),
}

fn load_action(arg: &str) -> Result<ActionInput, Failure> {
    let text = read_source(arg)?;
    let v: Value = parse_json(arg, &text)?;
    if v.get("mukai_matrix").is_some() {
        let j: ActionJson = parse_json(arg, &text)?;
        Ok(ActionInput::Matrix(K3Action::try_from(j)?))
    } else {
        Ok(ActionInput::Traces(parse_json(arg, &text)?))
    }
}

fn order_and_s(a: &ActionInput) -> (u64, i64) {
    match a {
        ActionInput::Matrix(a) => (a.order, a.s),
        ActionInput::Traces(t) => (t.n, t.s),
    }
}

/// Invariants of an input, or the list of violations of an invalid action.
fn invariants(a: &ActionInput) -> Result<Result<ActionInvariants, Vec<String>>, Failure> {
    match a {
        ActionInput::Matrix(act) => {
            let v = validate_action(act);
            if !v.is_valid() {
                return Ok(Err(v.violations));
            }
            Ok(Ok(ActionInvariants::from_action(act)?))
        }
        ActionInput::Traces(t) => Ok(Ok(t.invariants()?)),
    }
}

fn invalid_action(fmt: Format, violations: Vec<String>) -> Res {
    emit(fmt, 1, json!({ "valid": false, "violations": violations }), || {
        let mut t = String::from("invalid action\n");
        for v in &violations {
            let _ = writeln!(t, "  - {v}");
        }
        t
    })
}

fn action(cli: &Cli, cmd: &ActionCmd) -> Res {
    match cmd {
        ActionCmd::Validate { input } => {
            let j: ActionJson = load(input)?;
            let a = K3Action::try_from(j)?;
            let v = validate_action(&a);
            if !v.is_valid() {
                return invalid_action(cli.format, v.violations);
            }
            emit(cli.format, 0, json!({ "valid": true, "violations": [] }), || "valid\n".into())
        }
        ActionCmd::Factor { input } => {
            let (order, s) = order_and_s(&load_action(input)?);
            let f = factorization(order, s)?;
            emit(cli.format, 0, json!({ "N": order, "s": s, "factorization": f }), || {
                format!("N = {order}, s = {s}: n = {}, m = {} ({:?})\n", f.n, f.m, f.kind)
            })
        }
        ActionCmd::Trace { input } => {
            let a = load_action(input)?;
            let (order, s) = order_and_s(&a);
            let traces: TraceSequence = match &a {
                ActionInput::Matrix(act) => {
                    let v = validate_action(act);
                    if !v.is_valid() {
                        return invalid_action(cli.format, v.violations);
                    }
                    trace_sequence(act)?
                }
                ActionInput::Traces(t) => TraceSequence::new(t.n, t.traces.clone())?,
            };
            let f = factorization(order, s)?;
            let gate = trace_gate(&traces, f.m)?;
            let mult: Vec<(u64, String)> = traces
                .rational_multiplicities()
                .iter()
                .map(|(d, a)| (*d, format_rational(a)))
                .collect();
            let value = json!({
                "N": order, "s": s, "factorization": f,
                "traces": traces.values, "rational_multiplicities": mult, "gate": gate,
            });
            emit(cli.format, if gate.passed { 0 } else { 1 }, value, || {
                let mut t = format!("N = {order}, s = {s}, (n, m) = ({}, {})\n", f.n, f.m);
                t.push_str("r\tchi(sigma^r)\n");
                for (r, x) in &traces.values {
                    let _ = writeln!(t, "{r}\t{x}");
                }
                for c in &gate.checks {
                    let _ = writeln!(t, "[{}] {}", if c.ok { "ok" } else { "FAIL" }, c.rule);
                }
                let _ = writeln!(t, "gate {}", if gate.passed { "passed" } else { "failed" });
                t
            })
        }
        ActionCmd::Compare { first, second } => {
            let a = match invariants(&load_action(first)?)? {
                Ok(i) => i,
                Err(v) => return invalid_action(cli.format, v),
            };
            let b = match invariants(&load_action(second)?)? {
                Ok(i) => i,
                Err(v) => return invalid_action(cli.format, v),
            };
            let report = derived_partner_check(&a, &b);
            emit(cli.format, if report.compatible { 0 } else { 1 }, json!(report), || {
                let mut t = String::from("invariant\tfirst\tsecond\tmatch\n");
                for c in &report.checks {
                    let _ = writeln!(t, "{}\t{}\t{}\t{}", c.invariant, c.left, c.right, yes(c.matches));
                }
                t.push_str(if report.compatible {
                    "compatible with equivariant derived equivalence (necessary conditions only)\n"
                } else {
                    "incompatible\n"
                });
                t
            })
        }
        ActionCmd::Admissible { n, m } => {
            let a = order_admissibility(*n, *m);
            emit(cli.format, if a.admissible { 0 } else { 1 }, json!(a), || {
                let mut t = format!(
                    "(n, m) = ({n}, {m}): {}\n",
                    if a.admissible { "admissible" } else { "inadmissible" }
                );
                for v in &a.violations {
                    let _ = writeln!(t, "  violated: {v}");
                }
                for v in &a.notes {
                    let _ = writeln!(t, "  note: {v}");
                }
                t
            })
        }
        ActionCmd::Enriques { input } => {
            let l = load_lattice(input)?;
            let v = enriques_signature(&l)?;
            emit(cli.format, if v.matches { 0 } else { 1 }, json!(v), || {
                let mut t = String::new();
                for c in &v.checks {
                    let _ = writeln!(t, "[{}] {}", if c.ok { "ok" } else { "FAIL" }, c.rule);
                }
                t.push_str(if v.matches { "match\n" } else { "no match\n" });
                t
            })
        }
    }
}

fn checks_text(checks: &[Check]) -> String {
    checks
        .iter()
        .map(|c| format!("[{}] {}\n", if c.ok { "pass" } else { "FAIL" }, c.name))
        .collect()
}

fn reproduce(cli: &Cli, cmd: ReproduceCmd) -> Res {
    match cmd {
        ReproduceCmd::Compatible => {
            let r = compatible_report()?;
            emit(cli.format, if r.passed { 0 } else { 1 }, json!(r), || {
                let mut t = format!(
                    "Pic = [[2,5],[5,2]], d(Pic) = Z/{} (invariant factors {:?})\n",
                    r.group_order, r.invariant_factors
                );
                let _ = writeln!(
                    t,
                    "generators d1 = ({}), d2 = ({})  [units {:?} on (f1-f2)/3, (f1+f2)/7]",
                    r.generators[0].join(", "),
                    r.generators[1].join(", "),
                    r.units
                );
                for e in &r.eigenvectors {
                    let (c1, c2) = (e.glue[0], e.glue[1]);
                    let op = if c2 < 0 { '-' } else { '+' };
                    let _ = writeln!(
                        t,
                        "{}: square {}, ({})/21 = {c1}*d1 {op} {}*d2",
                        e.label, e.norm, e.label, c2.abs()
                    );
                }
                let _ = writeln!(t, "multipliers on Z/21 matching the eigenvectors: {:?}", r.conjugating_multipliers);
                let _ = writeln!(t, "T: rank {}, det {}", r.transcendental_rank, r.transcendental_det);
                t.push_str(&checks_text(&r.checks));
                let _ = writeln!(t, "{}", r.verdict);
                t
            })
        }
        ReproduceCmd::Mazur => {
            let r = mazur_report(cli.budget)?;
            emit(cli.format, if r.passed { 0 } else { 1 }, json!(r), || {
                let mut t = String::from("det 47 forms:\n");
                for f in &r.forms {
                    let _ = writeln!(t, "  {f}");
                }
                let _ = writeln!(t, "A = {}, B = {}", r.a, r.b);
                t.push_str(&checks_text(&r.checks));
                let _ = writeln!(t, "{}", if r.passed { "reproduced" } else { "NOT reproduced" });
                t
            })
        }
        ReproduceCmd::Niktable => {
            let r = nikulin_report(24)?;
            emit(cli.format, if r.passed { 0 } else { 1 }, json!(r), || {
                let mut t = String::from("n\texpected\tsolutions\tfaithful_min\tpowers\tok\n");
                for row in &r.rows {
                    let _ = writeln!(
                        t,
                        "{}\t{}\t{}\t{}\t{}\t{}",
                        row.order,
                        row.expected,
                        row.solutions,
                        row.faithful_minimum.map_or("-".into(), |x| x.to_string()),
                        yes(row.power_consistent),
                        yes(row.ok)
                    );
                }
                let _ = writeln!(t, "{}", if r.passed { "reproduced" } else { "NOT reproduced" });
                t
            })
        }
    }
}
