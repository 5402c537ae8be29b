//! Checks of computed chart data against the `expected` block of a fixture.
//! Polynomial comparisons are modulo unit monomials.

use crate::aideal::{bulk_relations, rewrite, EliminationProblem};
use crate::error::{Error, Result};
use crate::invariants::{
    invariant_sublattice, puncture_monodromies, verify_generation, Family, GeneratorBasis, InvariantChart, NamedGen,
};
use crate::lattice::IVec;
use crate::qcoeff::QCoeff;
use crate::triangulation::{build_chart, parse_gluing, ChartPresentation, Peripheral};
use serde::Serialize;
use serde_json::Value;
use std::collections::{BTreeMap, BTreeSet};

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub item: String,
    pub ok: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct FixtureDiff {
    pub advisory: bool,
    pub checks: Vec<Check>,
}

impl FixtureDiff {
    pub fn ok(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }

    /// The first failing check, in report order.
    pub fn first_divergence(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.ok)
    }

    pub fn get(&self, item: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.item == item)
    }

    fn push(&mut self, item: impl Into<String>, ok: bool, detail: impl Into<String>) {
        self.checks.push(Check { item: item.into(), ok, detail: detail.into() });
    }
}

/// Meridian, longitude, punctures and the printed thread and skeletal
/// generators, without checking invariance.
pub fn printed_generators(chart: &ChartPresentation, expected: &Value) -> Result<Vec<NamedGen>> {
    let g = &chart.atlas.gluing;
    let (Some(m), Some(l)) = (&g.meridian, &g.longitude) else {
        return Err(Error::MalformedInput("meridian and longitude are required".into()));
    };
    let mut out = vec![
        NamedGen::from_peripheral(chart, "M", Family::Meridian, m)?,
        NamedGen::from_peripheral(chart, "L", Family::Longitude, l)?,
    ];
    for (name, terms) in puncture_monodromies(&chart.atlas) {
        let mut e = NamedGen::weyl(chart, &name, Family::Puncture, &chart.atlas.vec(&terms))?;
        e.value = Some(3);
        out.push(e);
    }
    for (key, fam) in [("thread_monodromies", Family::Thread), ("skeletal_variables", Family::Skeletal)] {
        let block = expected.get(key).and_then(|v| v.as_object()).ok_or_else(|| Error::MalformedInput(format!("missing {key}")))?;
        for (name, v) in block {
            let p: Peripheral = serde_json::from_value(v.clone()).map_err(|e| Error::MalformedInput(e.to_string()))?;
            let mut g = NamedGen::from_peripheral(chart, name, fam, &p)?;
            if fam == Family::Thread {
                g.value = Some(p.q_half + g.degree());
            }
            out.push(g);
        }
    }
    Ok(out)
}

fn printed_chart(chart: &ChartPresentation, expected: &Value) -> Result<InvariantChart> {
    let generators = printed_generators(chart, expected)?;
    let (basis, lattice) = invariant_sublattice(chart);
    Ok(InvariantChart { chart: chart.clone(), basis, lattice, generators })
}

fn factor_set(g: &NamedGen) -> BTreeSet<(String, i64)> {
    g.factors.iter().map(|(x, e)| (x.name(), *e)).collect()
}

fn shifted_support(p: &BTreeMap<IVec, QCoeff>) -> BTreeSet<IVec> {
    let Some(lo) = p.keys().next().cloned() else { return BTreeSet::new() };
    p.keys().map(|k| k.iter().zip(&lo).map(|(a, b)| a - b).collect()).collect()
}

/// Coefficients of the monomials multiplied in coordinate order, divided by
/// the constant term when there is one.
fn ordered_coefficients(p: &BTreeMap<IVec, QCoeff>, omega: &[Vec<i64>]) -> BTreeMap<IVec, QCoeff> {
    let q = |v: &IVec| -> i64 {
        let mut s = 0;
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                s += v[i] * v[j] * omega[i][j];
            }
        }
        s
    };
    let ord: BTreeMap<IVec, QCoeff> = p.iter().map(|(v, c)| (v.clone(), c.shift(-q(v)))).collect();
    let zero = vec![0; p.keys().next().map_or(0, |k| k.len())];
    match ord.get(&zero).cloned() {
        Some(c0) if c0.as_unit().is_some() => ord.into_iter().map(|(v, c)| (v, c.unit_divide(&c0).unwrap())).collect(),
        _ => ord,
    }
}

/// Compares derived chart data with the fixture's expected data, or with
/// `expected` when given.
pub fn diff_fixture(source: &str, expected: Option<&Value>) -> Result<FixtureDiff> {
    let raw: Value = serde_json::from_str(source).map_err(|e| Error::MalformedInput(e.to_string()))?;
    let mut d = FixtureDiff { advisory: raw.get("advisory").and_then(|v| v.as_bool()).unwrap_or(false), checks: vec![] };
    match diff_into(&mut d, source, expected.or(raw.get("expected"))) {
        Err(e) if d.advisory => d.push("derivation", false, e.to_string()),
        r => r?,
    }
    Ok(d)
}

fn diff_into(d: &mut FixtureDiff, source: &str, expected: Option<&Value>) -> Result<()> {
    let chart = build_chart(&parse_gluing(source)?)?;
    let t = chart.atlas.t;
    d.push("rank", chart.rank() == 18 * t, format!("rank {} for {} tetrahedra", chart.rank(), t));
    let gc = chart.gluing.checks(&chart.omega_prime);
    d.push("gluing", gc.unimodular && gc.in_kernel, format!("unimodular {} central {}", gc.unimodular, gc.in_kernel));
    let inv = InvariantChart::build(&chart)?;
    d.push("generation", verify_generation(&inv), format!("{} generators span the invariant lattice", inv.generators.len()));
    let bad: Vec<&str> =
        inv.generators.iter().filter(|x| !chart.torus().weight(&x.class).iter().all(|&w| w == 0)).map(|x| x.name.as_str()).collect();
    d.push("weight-zero", bad.is_empty(), format!("nonzero weight: {bad:?}"));
    let Some(expected) = expected else { return Ok(()) };
    let printed = match printed_chart(&chart, expected) {
        Ok(p) => p,
        Err(e) => {
            d.push("printed generators", false, e.to_string());
            return Ok(());
        }
    };
    let cycles: Vec<BTreeSet<(String, i64)>> = inv.of_family(Family::Thread).map(factor_set).collect();
    for r in printed.of_family(Family::Thread) {
        let hit = cycles.iter().position(|c| *c == factor_set(r));
        d.push(format!("thread {}", r.name), hit.is_some(), match hit {
            Some(i) => format!("cycle {}", i + 1),
            None => "matches no thread cycle".into(),
        });
    }
    for y in printed.generators.iter().filter(|x| matches!(x.family, Family::Thread | Family::Skeletal)) {
        let ok = chart.torus().weight(&y.class).iter().all(|&w| w == 0);
        d.push(format!("weight {}", y.name), ok, if ok { "weight zero" } else { "nonzero weight" });
    }
    // commutation: the chart pairing is -2c for a printed g h = q^c h g
    if let Some(list) = expected.get("commutation").and_then(|v| v.as_array()) {
        let (mut good, mut bad) = (0, Vec::new());
        for c in list {
            let (a, b, e) = (c[0].as_str().unwrap_or(""), c[1].as_str().unwrap_or(""), c[2].as_i64().unwrap_or(0));
            match (printed.get(a), printed.get(b)) {
                (Some(x), Some(y)) if printed.omega(x, y) == -2 * e => good += 1,
                (Some(x), Some(y)) => bad.push(format!("{a} {b}: printed {e}, pairing {}", printed.omega(x, y))),
                _ => bad.push(format!("{a} {b}: unknown generator")),
            }
        }
        d.push("commutation", bad.is_empty(), format!("{good} agree under pairing = -2c; {bad:?}"));
    }
    if let Some(list) = expected.get("bulk").and_then(|v| v.as_array()) {
        match compare_bulk(&printed, expected, list.len()) {
            Ok((support, coeffs)) => {
                d.push("bulk support", support.iter().all(|x| *x), format!("{support:?}"));
                d.push("bulk coefficients", coeffs.iter().all(|x| *x), format!("{coeffs:?}"));
            }
            Err(e) => d.push("bulk support", false, e.to_string()),
        }
    }
    Ok(())
}

/// For each printed relation: whether some derived relation has the same
/// support, and whether it also has the same coefficients.
fn compare_bulk(printed: &InvariantChart, expected: &Value, n: usize) -> Result<(Vec<bool>, Vec<bool>)> {
    let reference = EliminationProblem::printed("reference", expected)?;
    let gb = GeneratorBasis::new(printed)?;
    let names = gb.names(printed);
    let omega = gb.omega(printed);
    let map: Vec<usize> = names.iter().map(|x| reference.index(x)).collect::<Result<_>>()?;
    let nr = reference.rank();
    // derived ω in reference coordinates
    let mut dom = vec![vec![0; nr]; nr];
    for (a, &i) in map.iter().enumerate() {
        for (b, &j) in map.iter().enumerate() {
            dom[i][j] = omega[a][b];
        }
    }
    let mut derived = Vec::new();
    for b in bulk_relations(&printed.chart)? {
        let e = rewrite(printed, &gb, &b.scaled)?;
        let mut out = BTreeMap::new();
        for (v, c) in e {
            let mut w = vec![0; nr];
            for (a, &i) in map.iter().enumerate() {
                w[i] = v[a];
            }
            out.insert(w, c);
        }
        derived.push(out);
    }
    let (mut support, mut coeffs) = (Vec::new(), Vec::new());
    for b in reference.bulk.iter().take(n) {
        let s = shifted_support(&b.terms);
        let hits: Vec<&BTreeMap<IVec, QCoeff>> = derived.iter().filter(|x| shifted_support(x) == s).collect();
        support.push(!hits.is_empty());
        let want = ordered_coefficients(&b.terms, reference.omega());
        coeffs.push(hits.iter().any(|h| ordered_coefficients(h, &dom) == want));
    }
    Ok((support, coeffs))
}
