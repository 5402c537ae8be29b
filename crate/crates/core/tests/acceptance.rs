//! One PASS/FAIL line per acceptance criterion. Judgement uses the pipeline
//! derived from gluing data; results on the fixture's printed chart algebra
//! are reported alongside. Set `QAIDEAL_ACCEPTANCE_STRICT=1` to exit nonzero
//! on any FAIL.

mod common;

use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use qaideal::aideal::{
    classical_eliminate, classical_from_printed, classical_normalise, classical_to_string, eliminate, parse_terms,
    prove_membership, verify_membership, AIdealResult, ElimOptions, EliminationProblem, MLPoly,
};
use qaideal::compare::{diff_fixture, printed_generators, FixtureDiff};
use qaideal::elim::ElimOrder;
use qaideal::invariants::{invariant_sublattice, InvariantChart};
use qaideal::lattice::{smith_normal_form, IMat};
use qaideal::qcoeff::QCoeff;
use qaideal::qtorus::TorusElement;
use qaideal::triangulation::{ChartPresentation, Gen};
use serde_json::Value;
use std::time::{Duration, Instant};

/// Time limits.
const TREFOIL_LIMIT: Duration = Duration::from_secs(60);
const FIG8_LIMIT: Duration = Duration::from_secs(600);
const CHART_LIMIT: Duration = Duration::from_secs(300);
/// Degree bound for the trefoil and figure-eight elimination runs.
const MAX_DEGREE: i64 = 10;
const COMMUTATION_PAIRS: u32 = 10_000;
const QUOTIENT_PAIRS: u32 = 1_000;
const SNF_CASES: u32 = 500;

struct Outcome {
    ok: bool,
    notes: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome { ok: true, notes: vec![] }
    }

    /// A judged sub-check.
    fn check(&mut self, what: &str, ok: bool, detail: impl AsRef<str>) {
        self.ok &= ok;
        self.notes.push(format!("[{}] {what}: {}", if ok { "ok" } else { "fail" }, detail.as_ref()));
    }

    /// Reported but not judged.
    fn note(&mut self, what: &str, detail: impl AsRef<str>) {
        self.notes.push(format!("[info] {what}: {}", detail.as_ref()));
    }
}

fn derived(chart: &ChartPresentation, name: &str) -> EliminationProblem {
    EliminationProblem::derived(name, &InvariantChart::build(chart).unwrap()).unwrap()
}

fn printed(name: &str) -> EliminationProblem {
    EliminationProblem::printed(name, &common::fixture(name)["expected"]).unwrap()
}

fn run(p: &EliminationProblem, max_degree: i64) -> (AIdealResult, Duration) {
    let t0 = Instant::now();
    let res = eliminate(p, &ElimOptions { max_degree, ..Default::default() }, &mut |_| {}).unwrap();
    (res, t0.elapsed())
}

fn expected_poly(p: &EliminationProblem, v: &Value) -> MLPoly {
    MLPoly::from_printed(p.oml(), &parse_terms(v).unwrap()).unwrap()
}

fn matches(res: &AIdealResult, want: &MLPoly) -> bool {
    res.generators.len() == 1 && res.generators[0].same_up_to_units(want)
}

fn shown(res: &AIdealResult) -> String {
    res.generators.iter().map(|g| g.to_string()).collect::<Vec<_>>().join("; ")
}

/// Pairings of the printed generators in the chart, compared literally.
fn literal_commutation(chart: &ChartPresentation, expected: &Value) -> (bool, String) {
    let generators = match printed_generators(chart, expected) {
        Ok(g) => g,
        Err(e) => return (false, e.to_string()),
    };
    let (basis, lattice) = invariant_sublattice(chart);
    let inv = InvariantChart { chart: chart.clone(), basis, lattice, generators };
    let mut out = Vec::new();
    let mut ok = true;
    for c in expected["commutation"].as_array().unwrap() {
        let (a, b, e) = (c[0].as_str().unwrap(), c[1].as_str().unwrap(), c[2].as_i64().unwrap());
        let w = inv.omega(inv.get(a).unwrap(), inv.get(b).unwrap());
        ok &= w == e;
        out.push(format!("{a}{b}: printed {e} pairing {w}"));
    }
    (ok, out.join(", "))
}

fn diff_item(d: &FixtureDiff, item: &str) -> (bool, String) {
    d.get(item).map(|c| (c.ok, c.detail.clone())).unwrap_or((false, "not compared".into()))
}

fn criterion_1() -> Outcome {
    let mut o = Outcome::new();
    let v = common::fixture("trefoil");
    let chart = common::chart("trefoil");
    let (ok, detail) = literal_commutation(&chart, &v["expected"]);
    o.check("chart relations", ok, detail);
    let d = diff_fixture(&common::source("trefoil"), None).unwrap();
    o.note("relations with pairing scaled by -1/2", diff_item(&d, "commutation").1);
    let (ok, detail) = diff_item(&d, "bulk coefficients");
    o.check("bulk generators", ok, format!("support {:?}, coefficients {detail}", diff_item(&d, "bulk support").0));
    let p = derived(&chart, "trefoil");
    let (res, t) = run(&p, MAX_DEGREE);
    let want = expected_poly(&p, &v["expected"]["a_ideal"][0]);
    o.check("elimination", matches(&res, &want), format!("{} (degree {}, {:?})", shown(&res), res.degree_bound_used, t));
    o.check("time", t <= TREFOIL_LIMIT, format!("{t:?}"));
    let pr = printed("trefoil");
    let (res, t) = run(&pr, MAX_DEGREE);
    let want = expected_poly(&pr, &v["expected"]["a_ideal"][0]);
    o.note("printed chart algebra", format!("matches {} in {t:?}: {}", matches(&res, &want), shown(&res)));
    o
}

fn criterion_2() -> Outcome {
    let mut o = Outcome::new();
    let v = common::fixture("trefoil");
    let product = |p: &EliminationProblem| {
        let f = v["expected"]["a_hat_factors"].as_array().unwrap();
        expected_poly(p, &f[0]).mul(&expected_poly(p, &f[1]))
    };
    let p = derived(&common::chart("trefoil"), "trefoil");
    let (res, _) = run(&p, MAX_DEGREE);
    let prod = product(&p);
    let ok = res.generators.len() == 1 && res.generators[0].normalise() == prod.normalise();
    o.check("product equals computed generator", ok, format!("product {}, computed {}", prod.normalise(), shown(&res)));
    let pr = printed("trefoil");
    let (res, _) = run(&pr, MAX_DEGREE);
    let prod = product(&pr);
    let exact = res.generators.len() == 1 && res.generators[0].normalise() == prod.normalise();
    let literal = prod == expected_poly(&pr, &v["expected"]["a_ideal"][0]);
    o.note("printed chart algebra", format!("normalised equal {exact}, product equals printed generator {literal}"));
    o
}

fn fig8_membership(o: &mut Outcome, p: &EliminationProblem, judged: bool) -> Duration {
    let v = common::fixture("fig8_2tet");
    let t0 = Instant::now();
    for (i, g) in v["expected"]["a_ideal_contains"].as_array().unwrap().iter().enumerate() {
        let g = expected_poly(p, g);
        let label = format!("g{} ({})", i + 1, p.label);
        let detail = match prove_membership(p, &g, MAX_DEGREE, ElimOrder::YFirst) {
            Ok(Some(c)) => {
                let ok = verify_membership(p, &g, &c).unwrap_or(false);
                (ok, format!("certificate denominator {}, verified {ok}", c.denominator))
            }
            Ok(None) => (false, format!("not in the degree {MAX_DEGREE} elimination space")),
            Err(e) => (false, e.to_string()),
        };
        if judged {
            o.check(&label, detail.0, detail.1);
        } else {
            o.note(&label, detail.1);
        }
    }
    t0.elapsed()
}

fn criterion_3() -> Outcome {
    let mut o = Outcome::new();
    let chart = common::chart("fig8_2tet");
    let threads = chart.atlas.basis.iter().filter(|g| matches!(g, Gen::Thread(..))).count();
    o.check("threads", threads == 24, format!("{threads}"));
    let c = chart.gluing.checks(&chart.omega_prime);
    o.check("gluing lattice", c.unimodular && c.in_kernel, format!("unimodular {} central {}", c.unimodular, c.in_kernel));
    let t = fig8_membership(&mut o, &derived(&chart, "fig8_2tet"), true);
    o.check("time", t <= FIG8_LIMIT, format!("{t:?}"));
    let t = fig8_membership(&mut o, &printed("fig8_2tet"), false);
    o.note("printed chart algebra time", format!("{t:?}"));
    o
}

fn criterion_4() -> Outcome {
    let mut o = Outcome::new();
    let v = common::fixture("trefoil");
    let ideal = classical_eliminate(&derived(&common::chart("trefoil"), "trefoil")).unwrap();
    let want = classical_normalise(&classical_from_printed(&parse_terms(&v["expected"]["classical"][0]).unwrap()).unwrap());
    let got: Vec<String> = ideal.generators.iter().map(classical_to_string).collect();
    o.check("3_1", ideal.generators == vec![want], format!("{got:?}"));
    let v = common::fixture("fig8_2tet");
    let ideal = classical_eliminate(&derived(&common::chart("fig8_2tet"), "fig8_2tet")).unwrap();
    for g in v["expected"]["classical_contains"].as_array().unwrap() {
        let g = classical_from_printed(&parse_terms(g).unwrap()).unwrap();
        o.check("4_1", ideal.contains(&g), format!("{} in {ideal:?}", classical_to_string(&g)));
    }
    o
}

fn criterion_5() -> Outcome {
    let mut o = Outcome::new();
    let v = common::fixture("unknot");
    let p = EliminationProblem::from_chart("unknot", &v["chart"]).unwrap();
    let (res, _) = run(&p, 4);
    let want = expected_poly(&p, &v["expected"]["a_ideal"][0]);
    let ok = res.generators.len() == 1 && res.generators[0].normalise() == want.normalise();
    o.check("unknot", ok, shown(&res));
    o
}

fn criterion_6() -> Outcome {
    let mut o = Outcome::new();
    for name in common::GLUED {
        let t0 = Instant::now();
        let d = match diff_fixture(&common::source(name), None) {
            Ok(d) => d,
            Err(e) => {
                o.check(name, false, e.to_string());
                continue;
            }
        };
        let t = t0.elapsed();
        let judge = |o: &mut Outcome, what: &str, ok: bool, detail: String| {
            if d.advisory {
                o.note(&format!("{name} {what} (advisory)"), format!("{ok}: {detail}"));
            } else {
                o.check(&format!("{name} {what}"), ok, detail);
            }
        };
        for item in ["rank", "weight-zero", "commutation"] {
            let (ok, detail) = diff_item(&d, item);
            judge(&mut o, item, ok, detail);
        }
        let (ok, detail) = diff_item(&d, "bulk coefficients");
        judge(&mut o, "bulk relations", ok, format!("support {}, coefficients {detail}", diff_item(&d, "bulk support").1));
        if let Some(c) = d.first_divergence() {
            o.note(&format!("{name} first divergence"), &c.item);
        }
        if common::fixture(name)["num_tetrahedra"] == 8 {
            o.check(&format!("{name} time"), t <= CHART_LIMIT, format!("{t:?}"));
        }
    }
    o
}

fn runner(cases: u32) -> TestRunner {
    let config = Config { cases, failure_persistence: None, rng_algorithm: RngAlgorithm::ChaCha, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn criterion_7() -> Outcome {
    use proptest::prelude::*;
    let mut o = Outcome::new();
    for name in common::GLUED {
        let chart = common::chart(name);
        let t = chart.torus().clone();
        let n = t.rank();
        let mono = |v: Vec<i64>| TorusElement::monomial(&t, v, QCoeff::one());
        let r = runner(COMMUTATION_PAIRS).run(
            &(prop::collection::vec(-2i64..=2, n), prop::collection::vec(-2i64..=2, n)),
            |(u, v)| {
                let k = t.omega(&u, &v);
                let a = mono(u.clone()).mul(&mono(v.clone())).unwrap();
                let b = mono(v).mul(&mono(u)).unwrap().scale(&QCoeff::q_half(2 * k));
                prop_assert_eq!(a, b);
                Ok(())
            },
        );
        o.check(&format!("{name} q-commutation, {COMMUTATION_PAIRS} pairs"), r.is_ok(), format!("{r:?}"));
        let src = chart.lambda_prime.clone();
        let m = src.rank();
        let q = &chart.quotient;
        let r = runner(QUOTIENT_PAIRS).run(
            &(prop::collection::vec((-1i64..=1, -2i64..=2), m), prop::collection::vec((-1i64..=1, -2i64..=2), m), -3i64..=3),
            |(u, v, k)| {
                let a = TorusElement::monomial(&src, u.iter().map(|x| x.0).collect(), QCoeff::q_half(k));
                let mut b = TorusElement::monomial(&src, v.iter().map(|x| x.1).collect(), QCoeff::one());
                b.add_term(u.iter().map(|x| x.1).collect(), &QCoeff::from_int(2));
                let lhs = q.reduce(&a.mul(&b).unwrap()).unwrap();
                let rhs = q.reduce(&a).unwrap().mul(&q.reduce(&b).unwrap()).unwrap();
                prop_assert_eq!(lhs, rhs);
                Ok(())
            },
        );
        o.check(&format!("{name} quotient multiplicativity, {QUOTIENT_PAIRS} pairs"), r.is_ok(), format!("{r:?}"));
    }
    let r = runner(SNF_CASES).run(&(1usize..7, 1usize..7, prop::collection::vec(-9i64..=9, 36)), |(rows, cols, seed)| {
        let m: Vec<Vec<i64>> = (0..rows).map(|i| seed[i * 6..i * 6 + cols].to_vec()).collect();
        let m = IMat::from_rows(&m, cols);
        prop_assert!(smith_normal_form(&m).verify(&m));
        Ok(())
    });
    o.check("Smith normal form postcondition", r.is_ok(), format!("{r:?}"));
    for (name, degree) in [("trefoil", 4), ("fig8_2tet", 7)] {
        let p = derived(&common::chart(name), name);
        let (res, _) = run(&p, degree);
        let classical = classical_eliminate(&p).unwrap();
        let ok = !res.generators.is_empty() && res.generators.iter().all(|g| classical.contains(&g.classical()));
        o.check(&format!("{name} classical and quantum agree"), ok, format!("{} generators vs {classical:?}", res.generators.len()));
    }
    let d = diff_fixture(&common::source("knot_8_9"), None).unwrap();
    let (ok, detail) = diff_item(&d, "bulk coefficients");
    o.check("8_9 bulk relations B1-B8", ok && diff_item(&d, "bulk support").0, format!("support {}, coefficients {detail}", diff_item(&d, "bulk support").1));
    o
}

fn main() {
    // `cargo test` passes harness flags; a name filter skips the report
    if std::env::args().skip(1).any(|a| !a.starts_with('-')) {
        return;
    }
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("1 trefoil end to end", criterion_1),
        ("2 trefoil factorisation", criterion_2),
        ("3 figure-eight membership", criterion_3),
        ("4 classical limit", criterion_4),
        ("5 unknot chart", criterion_5),
        ("6 fixture comparison", criterion_6),
        ("7 property suites", criterion_7),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let t0 = Instant::now();
        let o = f();
        println!("{} criterion {name} ({:.1?})", if o.ok { "PASS" } else { "FAIL" }, t0.elapsed());
        for n in &o.notes {
            println!("    {n}");
        }
        failed += usize::from(!o.ok);
    }
    println!("{} of 7 criteria pass", 7 - failed);
    if failed > 0 && std::env::var("QAIDEAL_ACCEPTANCE_STRICT").as_deref() == Ok("1") {
        std::process::exit(1);
    }
}
