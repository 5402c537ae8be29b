mod common;

use num_bigint::BigInt;
use num_integer::Integer;
use proptest::prelude::*;
use qaideal::aideal::{classical_eliminate, eliminate, ElimOptions, EliminationProblem, MLPoly};
use qaideal::elim::ElimOrder;
use qaideal::invariants::InvariantChart;
use qaideal::lattice::{smith_normal_form, IMat};
use qaideal::qcoeff::QCoeff;
use qaideal::qtorus::{QuantumTorus, TorusElement};
use std::sync::Arc;

fn mono_vec(rank: usize) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-2i64..=2, rank)
}

fn mono(t: &Arc<QuantumTorus>, v: Vec<i64>) -> TorusElement {
    TorusElement::monomial(t, v, QCoeff::one())
}

/// `X^u X^v = q^{ω(u,v)} X^v X^u`.
fn commutes_up_to_q(t: &Arc<QuantumTorus>, u: Vec<i64>, v: Vec<i64>) -> bool {
    let k = t.omega(&u, &v);
    let a = mono(t, u.clone()).mul(&mono(t, v.clone())).unwrap();
    let b = mono(t, v).mul(&mono(t, u)).unwrap();
    a == b.scale(&QCoeff::q_half(2 * k))
}

macro_rules! commutation_suite {
    ($name:ident, $fixture:literal) => {
        proptest! {
            #![proptest_config(ProptestConfig::with_cases(10_000))]
            #[test]
            fn $name((u, v) in (mono_vec(common::chart($fixture).lambda_prime.rank()), mono_vec(common::chart($fixture).lambda_prime.rank()))) {
                let c = common::chart($fixture);
                prop_assert!(commutes_up_to_q(&c.lambda_prime, u.clone(), v.clone()));
                let (su, sv) = (c.splitting().project(&u), c.splitting().project(&v));
                prop_assert!(commutes_up_to_q(c.torus(), su, sv));
            }
        }
    };
}

commutation_suite!(q_commutation_trefoil, "trefoil");
commutation_suite!(q_commutation_fig8_2tet, "fig8_2tet");
commutation_suite!(q_commutation_fig8_3tet, "fig8_3tet");
commutation_suite!(q_commutation_5_1, "knot_5_1");
commutation_suite!(q_commutation_5_2, "knot_5_2");
commutation_suite!(q_commutation_8_9, "knot_8_9");

fn small_element(rank: usize) -> impl Strategy<Value = Vec<(Vec<i64>, i64, i64)>> {
    prop::collection::vec((mono_vec(rank), -3i64..=3, -2i64..=2), 1..4)
}

fn element(t: &Arc<QuantumTorus>, terms: Vec<(Vec<i64>, i64, i64)>) -> TorusElement {
    let mut e = TorusElement::zero(t);
    for (v, k, c) in terms {
        e.add_term(v, &QCoeff::monomial(k, c));
    }
    e
}

macro_rules! quotient_suite {
    ($name:ident, $fixture:literal) => {
        proptest! {
            #![proptest_config(ProptestConfig::with_cases(1_000))]
            #[test]
            fn $name(a in small_element(common::chart($fixture).lambda_prime.rank()), b in small_element(common::chart($fixture).lambda_prime.rank())) {
                let c = common::chart($fixture);
                let (a, b) = (element(&c.lambda_prime, a), element(&c.lambda_prime, b));
                let q = &c.quotient;
                let lhs = q.reduce(&a.mul(&b).unwrap()).unwrap();
                let rhs = q.reduce(&a).unwrap().mul(&q.reduce(&b).unwrap()).unwrap();
                prop_assert_eq!(lhs, rhs);
            }
        }
    };
}

quotient_suite!(quotient_multiplicative_trefoil, "trefoil");
quotient_suite!(quotient_multiplicative_fig8_3tet, "fig8_3tet");
quotient_suite!(quotient_multiplicative_8_9, "knot_8_9");

proptest! {
    #[test]
    fn smith_form_postcondition(rows in 1usize..7, cols in 1usize..7, seed in prop::collection::vec(-9i64..=9, 36)) {
        let m: Vec<Vec<i64>> = (0..rows).map(|i| seed[i * 6..i * 6 + cols].to_vec()).collect();
        let m = IMat::from_rows(&m, cols);
        prop_assert!(smith_normal_form(&m).verify(&m));
    }

    #[test]
    fn modular_evaluation_at_minus_one(terms in prop::collection::vec((-20i64..20, -50i64..50), 0..8)) {
        let c = QCoeff::from_terms(terms.into_iter().map(|(k, c)| (k, c.into())));
        let p = (1u64 << 61) - 1;
        let want = c.eval_classical().mod_floor(&BigInt::from(p));
        prop_assert_eq!(BigInt::from(c.eval_mod(p - 1, p)), want);
    }
}

/// Every quantum generator, specialised at `q^(1/2) = -1`, lies in the
/// classical elimination ideal.
fn quantum_specialises_into_classical(p: &EliminationProblem, degree: i64) {
    let res = eliminate(p, &ElimOptions { max_degree: degree, ..Default::default() }, &mut |_| {}).unwrap();
    assert!(!res.generators.is_empty());
    let classical = classical_eliminate(p).unwrap();
    for g in &res.generators {
        assert!(classical.contains(&g.classical()), "{g} not in {classical:?}");
    }
}

fn derived(name: &str) -> EliminationProblem {
    EliminationProblem::derived(name, &InvariantChart::build(&common::chart(name)).unwrap()).unwrap()
}

#[test]
fn classical_agrees_with_quantum_trefoil() {
    quantum_specialises_into_classical(&derived("trefoil"), 4);
    let printed = EliminationProblem::printed("trefoil", &common::fixture("trefoil")["expected"]).unwrap();
    quantum_specialises_into_classical(&printed, 4);
}

#[test]
fn classical_agrees_with_quantum_fig8() {
    quantum_specialises_into_classical(&derived("fig8_2tet"), 7);
    let printed = EliminationProblem::printed("fig8", &common::fixture("fig8_2tet")["expected"]).unwrap();
    quantum_specialises_into_classical(&printed, 7);
}

#[test]
fn order_choice_does_not_change_the_trefoil_ideal() {
    let p = EliminationProblem::printed("trefoil", &common::fixture("trefoil")["expected"]).unwrap();
    let run = |order| {
        let opts = ElimOptions { max_degree: 4, order, ..Default::default() };
        eliminate(&p, &opts, &mut |_| {}).unwrap().generators
    };
    let (a, b): (Vec<MLPoly>, Vec<MLPoly>) = (run(ElimOrder::YFirst), run(ElimOrder::RFirst));
    assert_eq!(a.len(), b.len());
    assert!(a.iter().zip(&b).all(|(x, y)| x.same_up_to_units(y)));
}
