//! The joint elimination problem on the invariant chart: bulk relations,
//! degree-bounded elimination, exact generators with membership
//! certificates, and the classical limit.

use crate::elim::{
    build_rows, window, Columns, ElimOrder, Echelon, Field, ModPoly, ModProblem, RowSystem,
};
use crate::error::{Error, Result};
use crate::groebner::{groebner, reduce, BlockOrder, Poly};
use crate::invariants::{Family, GeneratorBasis, InvariantChart};
use crate::lattice::{add_scaled, IVec, SkewLattice};
use crate::qcoeff::QCoeff;
use crate::qtorus::{ordering_exponent, QuantumTorus, TorusElement};
use crate::triangulation::{ChartPresentation, Gen};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

/// Evaluation point for the modular passes.
pub const EVAL_POINT: u64 = 0x1234_5678_9abc;

/// A printed term `coeff · q^{q_half/2} · Π g^e`, factors multiplied in key order.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PrintedTerm {
    pub q_half: i64,
    #[serde(default = "one_i64")]
    pub coeff: i64,
    pub mono: Map<String, Value>,
}

fn one_i64() -> i64 {
    1
}

pub fn parse_terms(v: &Value) -> Result<Vec<PrintedTerm>> {
    serde_json::from_value(v.clone()).map_err(|e| Error::MalformedInput(format!("bad term list: {e}")))
}

fn pair(omega: &[Vec<i64>], a: &[i64], b: &[i64]) -> i64 {
    let mut t = 0;
    for (i, &x) in a.iter().enumerate() {
        if x != 0 {
            for (j, &y) in b.iter().enumerate() {
                if y != 0 {
                    t += x * y * omega[i][j];
                }
            }
        }
    }
    t
}

// ---------------------------------------------------------------------------
// Polynomials in M and L

type Exp2 = (i64, i64);

/// A Laurent polynomial in `M, L`, stored in the Weyl basis for `ω(M, L) = oml`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MLPoly {
    pub oml: i64,
    pub weyl: BTreeMap<Exp2, QCoeff>,
}

impl MLPoly {
    pub fn zero(oml: i64) -> Self {
        Self { oml, weyl: BTreeMap::new() }
    }

    fn om(&self, a: Exp2, b: Exp2) -> i64 {
        (a.0 * b.1 - a.1 * b.0) * self.oml
    }

    pub fn is_zero(&self) -> bool {
        self.weyl.is_empty()
    }

    pub fn add_term(&mut self, k: Exp2, c: &QCoeff) {
        if c.is_zero() {
            return;
        }
        let e = self.weyl.entry(k).or_insert_with(QCoeff::zero);
        *e += c;
        if e.is_zero() {
            self.weyl.remove(&k);
        }
    }

    /// From coefficients of the ordered monomials `M^a L^b`.
    pub fn from_ordered(oml: i64, terms: impl IntoIterator<Item = (Exp2, QCoeff)>) -> Self {
        let mut out = Self::zero(oml);
        for ((a, b), c) in terms {
            out.add_term((a, b), &c.shift(a * b * oml));
        }
        out
    }

    /// Coefficients of the ordered monomials `M^a L^b`.
    pub fn ordered(&self) -> BTreeMap<Exp2, QCoeff> {
        self.weyl.iter().map(|(&(a, b), c)| ((a, b), c.shift(-a * b * self.oml))).collect()
    }

    pub fn from_printed(oml: i64, terms: &[PrintedTerm]) -> Result<Self> {
        let mut out = Self::zero(oml);
        for t in terms {
            let mut acc = (0, 0);
            let mut s = t.q_half;
            for (k, x) in &t.mono {
                let x = x.as_i64().ok_or_else(|| Error::MalformedInput(format!("exponent of {k}")))?;
                let e = match k.as_str() {
                    "M" => (x, 0),
                    "L" => (0, x),
                    _ => return Err(Error::MalformedInput(format!("unexpected variable {k} in an M, L polynomial"))),
                };
                s += out.om(acc, e);
                acc = (acc.0 + e.0, acc.1 + e.1);
            }
            out.add_term(acc, &QCoeff::monomial(s, t.coeff));
        }
        Ok(out)
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut out = Self::zero(self.oml);
        for (&v, c) in &self.weyl {
            for (&w, d) in &o.weyl {
                out.add_term((v.0 + w.0, v.1 + w.1), &(c * d).shift(self.om(v, w)));
            }
        }
        out
    }

    /// `c · X^w · self`.
    pub fn lmul_monomial(&self, w: Exp2, c: &QCoeff) -> Self {
        let mut out = Self::zero(self.oml);
        for (&v, d) in &self.weyl {
            out.add_term((v.0 + w.0, v.1 + w.1), &(c * d).shift(self.om(w, v)));
        }
        out
    }

    /// Canonical representative up to left multiplication by unit monomials
    /// and scalars. Returns `(n, w, u, c)` with `c · n = u · X^w · self`.
    pub fn normalise_with(&self) -> (Self, Exp2, QCoeff, QCoeff) {
        if self.weyl.is_empty() {
            return (self.clone(), (0, 0), QCoeff::one(), QCoeff::one());
        }
        let w = (-self.weyl.keys().map(|k| k.0).min().unwrap(), -self.weyl.keys().map(|k| k.1).min().unwrap());
        let moved = self.lmul_monomial(w, &QCoeff::one());
        let content = moved.weyl.values().fold(QCoeff::zero(), |a, c| a.gcd(c));
        let mut out = Self::zero(self.oml);
        for (&k, c) in &moved.weyl {
            out.weyl.insert(k, c.div_exact(&content).expect("gcd divides"));
        }
        let c0 = out.weyl.values().next().unwrap();
        let lo = c0.min_exp().unwrap();
        let sign = if c0.coeff(lo).is_negative() { -1 } else { 1 };
        let u = QCoeff::monomial(-lo, sign);
        for c in out.weyl.values_mut() {
            *c = &*c * &u;
        }
        (out, w, u, content)
    }

    pub fn normalise(&self) -> Self {
        self.normalise_with().0
    }

    pub fn same_up_to_units(&self, o: &Self) -> bool {
        self.normalise() == o.normalise()
    }

    pub fn eval_mod(&self, f: &Field) -> BTreeMap<Exp2, u64> {
        self.weyl.iter().map(|(&k, c)| (k, c.eval_mod(f.s, f.p))).filter(|x| x.1 != 0).collect()
    }

    /// Image at `q^{1/2} = -1` with ordered monomials becoming commutative ones.
    pub fn classical(&self) -> ClassicalML {
        let mut out = ClassicalML::new();
        for (k, c) in self.ordered() {
            let x = c.eval_classical();
            if !x.is_zero() {
                out.insert(k, x);
            }
        }
        out
    }

    /// Fixture term format on ordered monomials, largest monomial first.
    pub fn to_json(&self) -> Value {
        let mut out = Vec::new();
        for ((a, b), c) in self.ordered().into_iter().rev() {
            for (k, x) in c.terms().collect::<Vec<_>>().into_iter().rev() {
                out.push(json!({"q_half": k, "coeff": bigint_json(x), "mono": {"M": a, "L": b}}));
            }
        }
        Value::Array(out)
    }
}

fn bigint_json(x: &BigInt) -> Value {
    match x.to_i64() {
        Some(v) => json!(v),
        None => json!(x.to_string()),
    }
}

fn ml_mono(a: i64, b: i64) -> String {
    let p = |x: &str, e: i64| match e {
        0 => String::new(),
        1 => x.to_string(),
        _ => format!("{x}^{e}"),
    };
    [p("M", a), p("L", b)].into_iter().filter(|s| !s.is_empty()).collect::<Vec<_>>().join(" ")
}

impl fmt::Display for MLPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.weyl.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for ((a, b), c) in self.ordered().into_iter().rev() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let mono = ml_mono(a, b);
            match (c.len(), mono.is_empty()) {
                (_, true) => write!(f, "({c})")?,
                (1, false) if c.as_unit() == Some((0, 1)) => write!(f, "{mono}")?,
                _ => write!(f, "({c}) {mono}")?,
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Exact Weyl polynomials on the generator torus

type EPoly = BTreeMap<IVec, QCoeff>;

fn e_add(p: &mut EPoly, k: IVec, c: &QCoeff) {
    if c.is_zero() {
        return;
    }
    let e = p.entry(k.clone()).or_insert_with(QCoeff::zero);
    *e += c;
    if e.is_zero() {
        p.remove(&k);
    }
}

fn e_left_shift(omega: &[Vec<i64>], w: &[i64], g: &EPoly) -> EPoly {
    let mut out = EPoly::new();
    for (v, c) in g {
        let m: IVec = w.iter().zip(v).map(|(a, b)| a + b).collect();
        out.insert(m, c.shift(pair(omega, w, v)));
    }
    out
}

fn coeff_pow(c: &QCoeff, e: i64) -> QCoeff {
    let (k, s) = c.as_unit().expect("thread values are units");
    QCoeff::monomial(k * e, if s < 0 && e.rem_euclid(2) == 1 { -1 } else { 1 })
}

// ---------------------------------------------------------------------------
// The elimination problem

/// Generators, pairing, bulk relations and thread values of one chart.
#[derive(Clone, Debug)]
pub struct EliminationProblem {
    pub label: String,
    pub names: Vec<String>,
    pub torus: Arc<QuantumTorus>,
    /// Bulk relations in the Weyl basis of `torus`.
    pub bulk: Vec<TorusElement>,
    /// Thread coordinates and the unit values they specialise to.
    pub threads: Vec<(usize, QCoeff)>,
    pub skeletal: Vec<usize>,
    pub m: usize,
    pub l: usize,
}

impl EliminationProblem {
    pub fn new(
        label: &str,
        names: Vec<String>,
        omega: Vec<Vec<i64>>,
        bulk: Vec<EPoly>,
        threads: Vec<(usize, QCoeff)>,
        skeletal: Vec<usize>,
    ) -> Result<Self> {
        let n = names.len();
        if omega.len() != n || omega.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: omega.len() });
        }
        let ix = |s: &str| names.iter().position(|x| x == s).ok_or_else(|| Error::MalformedInput(format!("missing generator {s}")));
        let (m, l) = (ix("M")?, ix("L")?);
        let lat = SkewLattice::new(omega, names.clone());
        if !lat.is_skew() {
            return Err(Error::MalformedInput("pairing is not skew".into()));
        }
        for (i, c) in &threads {
            if c.as_unit().is_none() {
                return Err(Error::NotAUnit(c.to_string()));
            }
            for j in threads.iter().map(|t| t.0).chain([m, l]) {
                if lat.omega[*i][j] != 0 {
                    return Err(Error::NotCentral);
                }
            }
        }
        let torus = QuantumTorus::plain(lat);
        let mut els = Vec::new();
        for b in bulk {
            let mut e = TorusElement::zero(&torus);
            for (v, c) in b {
                if v.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: v.len() });
                }
                e.add_term(v, &c);
            }
            els.push(e);
        }
        Ok(Self { label: label.to_string(), names, torus, bulk: els, threads, skeletal, m, l })
    }

    pub fn rank(&self) -> usize {
        self.names.len()
    }

    pub fn omega(&self) -> &Vec<Vec<i64>> {
        &self.torus.lattice.omega
    }

    pub fn oml(&self) -> i64 {
        self.omega()[self.m][self.l]
    }

    pub fn index(&self, name: &str) -> Result<usize> {
        self.names.iter().position(|x| x == name).ok_or_else(|| Error::MalformedInput(format!("unknown generator {name}")))
    }

    /// Weyl form of an ordered printed term.
    pub fn term(&self, t: &PrintedTerm) -> Result<(IVec, QCoeff)> {
        let n = self.rank();
        let mut acc = vec![0; n];
        let mut s = t.q_half;
        for (k, x) in &t.mono {
            let i = self.index(k)?;
            let x = x.as_i64().ok_or_else(|| Error::MalformedInput(format!("exponent of {k}")))?;
            let mut e = vec![0; n];
            e[i] = x;
            s += pair(self.omega(), &acc, &e);
            acc[i] += x;
        }
        Ok((acc, QCoeff::monomial(s, t.coeff)))
    }

    pub fn element(&self, terms: &[PrintedTerm]) -> Result<TorusElement> {
        let mut e = TorusElement::zero(&self.torus);
        for t in terms {
            let (v, c) = self.term(t)?;
            e.add_term(v, &c);
        }
        Ok(e)
    }

    /// The printed chart algebra of a fixture's `expected` block.
    ///
    /// Thread monodromies specialise to `q^{(q_half + |r|)/2}`.
    pub fn printed(label: &str, expected: &Value) -> Result<Self> {
        let bad = |s: &str| Error::MalformedInput(format!("expected block: {s}"));
        let obj = |k: &str| expected.get(k).and_then(|v| v.as_object()).ok_or_else(|| bad(k));
        let mut names = vec!["M".to_string(), "L".to_string()];
        let mut threads = Vec::new();
        for (k, r) in obj("thread_monodromies")? {
            let q = r.get("q_half").and_then(|x| x.as_i64()).unwrap_or(0);
            let deg: i64 = r
                .get("exponents")
                .and_then(|x| x.as_object())
                .map(|m| m.values().filter_map(|x| x.as_i64()).map(|x| x.abs()).sum())
                .unwrap_or(0);
            threads.push((names.len(), QCoeff::q_half(q + deg)));
            names.push(k.clone());
        }
        let mut skeletal = Vec::new();
        for k in obj("skeletal_variables")?.keys() {
            skeletal.push(names.len());
            names.push(k.clone());
        }
        let n = names.len();
        let mut omega = vec![vec![0; n]; n];
        let ix = |s: &str| names.iter().position(|x| x == s).ok_or_else(|| bad(&format!("unknown generator {s}")));
        for c in expected.get("commutation").and_then(|v| v.as_array()).ok_or_else(|| bad("commutation"))? {
            let (g, h, w) = (
                c[0].as_str().ok_or_else(|| bad("commutation"))?,
                c[1].as_str().ok_or_else(|| bad("commutation"))?,
                c[2].as_i64().ok_or_else(|| bad("commutation"))?,
            );
            let (a, b) = (ix(g)?, ix(h)?);
            omega[a][b] = w;
            omega[b][a] = -w;
        }
        let shell = Self::new(label, names.clone(), omega.clone(), vec![], threads.clone(), skeletal.clone())?;
        let mut bulk = Vec::new();
        for b in expected.get("bulk").and_then(|v| v.as_array()).ok_or_else(|| bad("bulk"))? {
            bulk.push(shell.element(&parse_terms(b)?)?.terms);
        }
        Self::new(label, names, omega, bulk, threads, skeletal)
    }

    /// A chart given directly by variables, pairing and relations.
    pub fn from_chart(label: &str, chart: &Value) -> Result<Self> {
        let bad = |s: &str| Error::MalformedInput(format!("chart block: {s}"));
        let names: Vec<String> = serde_json::from_value(chart.get("variables").cloned().ok_or_else(|| bad("variables"))?)
            .map_err(|e| bad(&e.to_string()))?;
        let omega: Vec<Vec<i64>> =
            serde_json::from_value(chart.get("omega").cloned().ok_or_else(|| bad("omega"))?).map_err(|e| bad(&e.to_string()))?;
        let elim: Vec<String> = chart
            .get("eliminate")
            .map(|v| serde_json::from_value(v.clone()).map_err(|e| bad(&e.to_string())))
            .transpose()?
            .unwrap_or_default();
        let skeletal =
            elim.iter().map(|s| names.iter().position(|x| x == s).ok_or_else(|| bad(s))).collect::<Result<Vec<_>>>()?;
        let shell = Self::new(label, names.clone(), omega.clone(), vec![], vec![], skeletal.clone())?;
        let mut bulk = Vec::new();
        for r in chart.get("relations").and_then(|v| v.as_array()).ok_or_else(|| bad("relations"))? {
            bulk.push(shell.element(&parse_terms(r)?)?.terms);
        }
        Self::new(label, names, omega, bulk, vec![], skeletal)
    }

    /// The problem derived from gluing data: bulk relations rewritten in an
    /// independent set of invariant generators.
    pub fn derived(label: &str, inv: &InvariantChart) -> Result<Self> {
        let gb = GeneratorBasis::new(inv)?;
        let names = gb.names(inv);
        let omega = gb.omega(inv);
        let mut threads = Vec::new();
        let mut skeletal = Vec::new();
        for (a, &i) in gb.chosen.iter().enumerate() {
            let g = &inv.generators[i];
            match g.family {
                Family::Thread => threads.push((a, QCoeff::q_half(g.value.unwrap_or(0)))),
                Family::Skeletal => skeletal.push(a),
                _ => {}
            }
        }
        let mut bulk = Vec::new();
        for b in bulk_relations(&inv.chart)? {
            bulk.push(rewrite(inv, &gb, &b.scaled)?);
        }
        Self::new(label, names, omega, bulk, threads, skeletal)
    }

    pub fn max_degree(&self) -> i64 {
        self.bulk.iter().flat_map(|b| b.terms.keys()).map(|v| v.iter().map(|x| x.abs()).sum::<i64>()).max().unwrap_or(0)
    }

    pub fn has_skeletal(&self, v: &[i64]) -> bool {
        self.skeletal.iter().any(|&i| v[i] != 0)
    }

    fn is_ml(&self, v: &[i64]) -> bool {
        v.iter().enumerate().all(|(i, &x)| x == 0 || i == self.m || i == self.l)
    }

    pub fn ml_vec(&self, k: Exp2) -> IVec {
        let mut v = vec![0; self.rank()];
        v[self.m] = k.0;
        v[self.l] = k.1;
        v
    }

    pub fn ml_element(&self, g: &MLPoly) -> TorusElement {
        let mut e = TorusElement::zero(&self.torus);
        for (&k, c) in &g.weyl {
            e.add_term(self.ml_vec(k), c);
        }
        e
    }

    fn ml_mod(&self, f: &Field, g: &MLPoly) -> ModPoly {
        g.eval_mod(f).into_iter().map(|(k, c)| (self.ml_vec(k), c)).collect()
    }

    pub fn mod_problem(&self, f: &Field, degree: i64) -> ModProblem {
        ModProblem {
            omega: self.omega().clone(),
            gens: self.bulk.iter().map(|b| crate::elim::eval_element(f, b)).collect(),
            skeletal: self.skeletal.clone(),
            threads: self.threads.iter().map(|(i, c)| (*i, c.eval_mod(f.s, f.p))).collect(),
            window: window(&vec![1; self.rank()], degree),
        }
    }

    /// Moves thread factors left and replaces them by their values.
    fn specialise(&self, g: &EPoly) -> EPoly {
        let mut out = EPoly::new();
        for (v, c) in g {
            let mut vr = vec![0; v.len()];
            let mut rest = v.clone();
            let mut val = c.clone();
            for (i, x) in &self.threads {
                vr[*i] = v[*i];
                rest[*i] = 0;
                val = &val * &coeff_pow(x, v[*i]);
            }
            let k = -pair(self.omega(), &vr, &rest);
            e_add(&mut out, rest, &val.shift(k));
        }
        out
    }

    fn transform(&self, order: ElimOrder, g: &EPoly) -> EPoly {
        match order {
            ElimOrder::RFirst => self.specialise(g),
            ElimOrder::YFirst => {
                let (mut ys, free): (EPoly, EPoly) = g.iter().map(|(m, c)| (m.clone(), c.clone())).partition(|(m, _)| self.has_skeletal(m));
                for (k, c) in self.specialise(&free) {
                    e_add(&mut ys, k, &c);
                }
                ys
            }
        }
    }

    /// Splits `d` into `Σ_t (c_t^{-1} r_t - 1) · n_t` plus its specialisation.
    fn thread_decomposition(&self, d: &TorusElement) -> Result<(Vec<TorusElement>, TorusElement)> {
        let t = &self.torus;
        let n = self.rank();
        let mut parts: Vec<TorusElement> = self.threads.iter().map(|_| TorusElement::zero(t)).collect();
        let mut rem = TorusElement::zero(t);
        let unit = |i: usize, e: i64| {
            let mut v = vec![0; n];
            v[i] = e;
            v
        };
        for (v, c) in &d.terms {
            let mut vr = vec![0; n];
            let mut rest = v.clone();
            for (i, _) in &self.threads {
                vr[*i] = v[*i];
                rest[*i] = 0;
            }
            let base = c.shift(-pair(self.omega(), &vr, &rest));
            let tail = TorusElement::monomial(t, rest.clone(), QCoeff::one());
            // X^{vr} - Π c^e = Σ_t (Π_{t'<t} c^e) (r_t^e - c_t^e) Π_{t'>t} r^e
            let mut left = QCoeff::one();
            for (a, (i, ct)) in self.threads.iter().enumerate() {
                let e = vr[*i];
                if e != 0 {
                    // r^e - c^e = (r - c) P, and r - c = c (c^{-1} r - 1)
                    let mut p = TorusElement::zero(t);
                    if e > 0 {
                        for k in 0..e {
                            p.add_term(unit(*i, k), &coeff_pow(ct, e - 1 - k));
                        }
                    } else {
                        let m = -e;
                        for k in 0..m {
                            p.add_term(unit(*i, k - m), &-(&coeff_pow(ct, m - 1 - k) * &coeff_pow(ct, -m)));
                        }
                    }
                    let mut right = vec![0; n];
                    for (j, _) in &self.threads[a + 1..] {
                        right[*j] = vr[*j];
                    }
                    let r = TorusElement::monomial(t, right, QCoeff::one());
                    let piece = p.mul(&r)?.mul(&tail)?.scale(&(&(&base * &left) * ct));
                    parts[a] = parts[a].add(&piece)?;
                }
                left = &left * &coeff_pow(ct, e);
            }
            rem.add_term(rest, &(&base * &left));
        }
        Ok((parts, rem))
    }

    fn thread_factor(&self, a: usize) -> Result<TorusElement> {
        let (i, c) = &self.threads[a];
        let mut v = vec![0; self.rank()];
        v[*i] = 1;
        let r = TorusElement::monomial(&self.torus, v, QCoeff::one().unit_divide(c)?);
        r.sub(&TorusElement::one(&self.torus))
    }
}

// ---------------------------------------------------------------------------
// Bulk relations from gluing data

/// The relation of one tetrahedron on `Λ′`, and its normalisation with the
/// `A13 A02` term scaled to a constant.
#[derive(Clone, Debug)]
pub struct BulkRelation {
    pub tet: usize,
    pub raw: TorusElement,
    pub scaled: TorusElement,
}

fn ordered_product(chart: &ChartPresentation, fs: &[IVec], q_half: i64) -> TorusElement {
    let s = ordering_exponent(&chart.omega_prime, fs);
    let mut v = vec![0; chart.atlas.rank()];
    for f in fs {
        add_scaled(&mut v, f, 1);
    }
    TorusElement::monomial(&chart.lambda_prime, v, QCoeff::q_half(q_half + s))
}

pub fn bulk_relations(chart: &ChartPresentation) -> Result<Vec<BulkRelation>> {
    let at = &chart.atlas;
    let mut out = Vec::new();
    for k in 0..at.t {
        let a = |p: usize, e: usize, x: i64| at.vec(&[(Gen::Short(k, p, e), x)]);
        let big = |p: usize, e: usize| at.vec(&[(Gen::Long(k, p.min(e), p.max(e)), 1)]);
        let f1 = [big(0, 3), a(3, 2, 1), a(0, 1, 1), big(1, 2), a(2, 3, 1), a(1, 0, 1)];
        let f2 = [big(0, 1), a(0, 3, -1), a(1, 2, -1), big(2, 3), a(2, 1, -1), a(3, 0, -1)];
        let f3 = [big(1, 3), big(0, 2)];
        let raw = ordered_product(chart, &f1, 5).add(&ordered_product(chart, &f2, 3))?.add(&ordered_product(chart, &f3, 3))?;
        let t3 = ordered_product(chart, &f3, 0);
        let (v, c) = t3.terms.iter().next().unwrap();
        let inv = TorusElement::monomial(&chart.lambda_prime, v.iter().map(|x| -x).collect(), QCoeff::one().unit_divide(c)?);
        out.push(BulkRelation { tet: k, scaled: raw.mul(&inv)?, raw });
    }
    Ok(out)
}

pub fn rewrite(inv: &InvariantChart, gb: &GeneratorBasis, e: &TorusElement) -> Result<EPoly> {
    let red = inv.chart.quotient.reduce(e)?;
    let mut out = EPoly::new();
    for (class, c) in &red.terms {
        let (n, k) = gb.express(inv, class)?;
        e_add(&mut out, n, &c.shift(k));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Elimination

#[derive(Clone, Debug)]
pub struct ElimOptions {
    pub min_degree: Option<i64>,
    pub max_degree: i64,
    pub order: ElimOrder,
    /// Recover exact generators and certificates at the final degree.
    pub exact: bool,
    /// Upper bound on window rows before giving up.
    pub max_rows: usize,
}

impl Default for ElimOptions {
    fn default() -> Self {
        Self { min_degree: None, max_degree: 10, order: ElimOrder::YFirst, exact: true, max_rows: 4_000_000 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DegreeReport {
    pub degree: i64,
    pub rows: usize,
    pub columns: usize,
    /// Dimension of the elimination subspace in the `M, L` subring.
    pub reduced_dim: usize,
    pub generators: usize,
    pub stable: bool,
}

/// `denominator · g = Σ_j bulk_j · b_j + Σ_t (c_t^{-1} r_t - 1) · threads_t`.
#[derive(Clone, Debug)]
pub struct Certificate {
    pub denominator: QCoeff,
    pub bulk: Vec<TorusElement>,
    pub threads: Vec<TorusElement>,
}

#[derive(Clone, Debug)]
pub struct AIdealResult {
    pub generators: Vec<MLPoly>,
    pub certificates: Vec<Certificate>,
    pub degree_bound_used: i64,
    pub stability_flag: bool,
    pub history: Vec<DegreeReport>,
}

type P2 = BTreeMap<Exp2, u64>;

fn p2_shift(f: &Field, oml: i64, w: Exp2, g: &P2) -> P2 {
    g.iter().map(|(&v, &c)| ((v.0 + w.0, v.1 + w.1), f.mul(c, f.s_pow((w.0 * v.1 - w.1 * v.0) * oml)))).collect()
}

fn p2_normalise(f: &Field, oml: i64, g: &P2) -> P2 {
    if g.is_empty() {
        return P2::new();
    }
    let w = (-g.keys().map(|k| k.0).min().unwrap(), -g.keys().map(|k| k.1).min().unwrap());
    let h = p2_shift(f, oml, w, g);
    let iv = f.inv(*h.values().next().unwrap());
    h.into_iter().map(|(k, c)| (k, f.mul(c, iv))).collect()
}

fn extent(g: &P2) -> (i64, i64, usize) {
    let (amin, amax) = (g.keys().map(|k| k.0).min().unwrap(), g.keys().map(|k| k.0).max().unwrap());
    let (bmin, bmax) = (g.keys().map(|k| k.1).min().unwrap(), g.keys().map(|k| k.1).max().unwrap());
    (bmax - bmin, amax - amin, g.len())
}

/// Reduced row echelon form of `polys` with columns sorted by `key`.
fn rref<K: Ord>(f: &Field, polys: &[P2], key: impl Fn(&Exp2) -> K) -> Vec<P2> {
    let mut monos: Vec<Exp2> = polys.iter().flat_map(|p| p.keys().copied()).collect::<BTreeSet<_>>().into_iter().collect();
    monos.sort_by_key(|m| key(m));
    let cols = Columns::build(monos.iter().map(|m| vec![m.0, m.1]).collect(), |v| {
        let i = monos.iter().position(|m| *m == (v[0], v[1])).unwrap();
        i
    });
    let mut ech = Echelon::default();
    for p in polys {
        let m: ModPoly = p.iter().map(|(k, &c)| (vec![k.0, k.1], c)).collect();
        ech.insert(f, cols.row(&m));
    }
    let rows: Vec<_> = ech.rows.clone();
    let full = Echelon { pivots: ech.pivots.clone(), rows: rows.clone() };
    rows.iter()
        .map(|r| {
            // reduce the tail against the other pivots
            let lead = vec![r[0]];
            let mut tail = full.reduce(f, &r[1..].to_vec());
            let mut out = lead;
            out.append(&mut tail);
            out.sort_unstable();
            cols.poly(&out).into_iter().map(|(v, c)| ((v[0], v[1]), c)).collect()
        })
        .collect()
}

/// Greedy small generating set: candidates of small extent are added until
/// their translates span `v`. Each generator is returned normalised and as
/// found in `v`.
pub fn minimal_generators(f: &Field, oml: i64, v: &[P2]) -> Vec<(P2, P2)> {
    if v.is_empty() {
        return vec![];
    }
    let (mut amin, mut amax, mut bmin, mut bmax) = (i64::MAX, i64::MIN, i64::MAX, i64::MIN);
    for p in v {
        for k in p.keys() {
            amin = amin.min(k.0);
            amax = amax.max(k.0);
            bmin = bmin.min(k.1);
            bmax = bmax.max(k.1);
        }
    }
    let mut cands = rref(f, v, |m| (m.1, m.0));
    cands.extend(rref(f, v, |m| (-m.1, -m.0)));
    cands.sort_by_key(|c| (extent(c), c.iter().map(|(k, x)| (*k, *x)).collect::<Vec<_>>()));
    let mut monos = Vec::new();
    for a in amin..=amax {
        for b in bmin..=bmax {
            monos.push(vec![a, b]);
        }
    }
    let cols = Columns::build(monos, |m| m.clone());
    let to_row = |p: &P2| cols.row(&p.iter().map(|(k, &c)| (vec![k.0, k.1], c)).collect());
    let vrows: Vec<_> = v.iter().map(to_row).collect();
    let mut span = Echelon::default();
    let mut gens: Vec<(P2, P2)> = Vec::new();
    for c in cands {
        if vrows.iter().all(|r| span.reduce(f, r).is_empty()) {
            break;
        }
        if span.reduce(f, &to_row(&c)).is_empty() {
            continue;
        }
        let (e0, e1) = (extent(&c).1, extent(&c).0);
        let (ca, cb) = (c.keys().map(|k| k.0).min().unwrap(), c.keys().map(|k| k.1).min().unwrap());
        for a in amin..=amax - e0 {
            for b in bmin..=bmax - e1 {
                span.insert(f, to_row(&p2_shift(f, oml, (a - ca, b - cb), &c)));
            }
        }
        gens.push((p2_normalise(f, oml, &c), c));
    }
    gens.sort_by_key(|c| (extent(&c.0), c.0.iter().map(|(k, x)| (*k, *x)).collect::<Vec<_>>()));
    gens
}

/// Runs the degree loop; `progress` sees each degree as it completes.
pub fn eliminate(
    p: &EliminationProblem,
    opts: &ElimOptions,
    progress: &mut dyn FnMut(&DegreeReport),
) -> Result<AIdealResult> {
    let f = Field::new(EVAL_POINT);
    let oml = p.oml();
    let start = opts.min_degree.unwrap_or(1).max(0);
    let mut history = Vec::new();
    let mut prev: Option<Vec<P2>> = None;
    let mut last: Option<(i64, Vec<(P2, P2)>, RowSystem)> = None;
    let mut stable = false;
    for d in start..=opts.max_degree {
        let mp = p.mod_problem(&f, d);
        let rows = mp.window.len() * mp.gens.len();
        if rows > opts.max_rows {
            if last.is_none() {
                return Err(Error::BudgetExhausted(d as usize));
            }
            break;
        }
        let sys = build_rows(&f, &mp, opts.order);
        let ech = sys.echelon(&f, None);
        let v: Vec<P2> = sys
            .free_rows(&ech)
            .into_iter()
            .filter(|r| r.keys().all(|m| p.is_ml(m)))
            .map(|r| r.into_iter().map(|(m, c)| ((m[p.m], m[p.l]), c)).collect())
            .collect();
        let gens = minimal_generators(&f, oml, &v);
        let normal: Vec<P2> = gens.iter().map(|g| g.0.clone()).collect();
        stable = !gens.is_empty() && prev.as_ref() == Some(&normal);
        let rep = DegreeReport { degree: d, rows: sys.rows.len(), columns: sys.cols.monos.len(), reduced_dim: v.len(), generators: gens.len(), stable };
        progress(&rep);
        history.push(rep);
        prev = Some(normal);
        last = Some((d, gens, sys));
        if stable {
            break;
        }
    }
    let Some((degree, gens, sys)) = last else {
        return Ok(AIdealResult { generators: vec![], certificates: vec![], degree_bound_used: opts.max_degree, stability_flag: false, history });
    };
    let mut generators = Vec::new();
    let mut certificates = Vec::new();
    if opts.exact {
        let mp = p.mod_problem(&f, degree);
        for g in &gens {
            let (exact, cert) = recover(p, &f, &mp, &sys, opts.order, &g.1)?;
            generators.push(exact);
            certificates.push(cert);
        }
    }
    Ok(AIdealResult { generators, certificates, degree_bound_used: degree, stability_flag: stable, history })
}

// ---------------------------------------------------------------------------
// Exact recovery

type SRow = BTreeMap<usize, QCoeff>;

fn row_axpy(a: &SRow, c: &QCoeff, b: &SRow) -> SRow {
    // a - c*b
    let mut out = a.clone();
    for (k, v) in b {
        let e = out.entry(*k).or_insert_with(QCoeff::zero);
        *e = &*e - &(c * v);
        if e.is_zero() {
            out.remove(k);
        }
    }
    out
}

fn row_content(r: &mut SRow) {
    if r.len() < 2 {
        return;
    }
    let g = r.values().fold(QCoeff::zero(), |a, c| a.gcd(c));
    if g.as_unit().is_some() {
        return;
    }
    for v in r.values_mut() {
        *v = v.div_exact(&g).expect("gcd divides");
    }
}

/// Fraction-free elimination of columns `0..upto`; only rows below
/// `pivotable` may serve as pivots. Returns which rows became pivots.
fn exact_eliminate(rows: &mut [SRow], pivotable: usize, upto: usize) -> Vec<bool> {
    let mut used = vec![false; rows.len()];
    for c in 0..upto {
        let best = (0..pivotable)
            .filter(|&i| !used[i] && rows[i].contains_key(&c))
            .min_by_key(|&i| {
                let e = &rows[i][&c];
                (e.as_unit().is_none(), e.len(), rows[i].len(), i)
            });
        let Some(k) = best else { continue };
        used[k] = true;
        let pk = rows[k].clone();
        let piv = pk[&c].clone();
        let unit = piv.as_unit().is_some();
        for i in 0..rows.len() {
            if used[i] {
                continue;
            }
            let Some(a) = rows[i].get(&c).cloned() else { continue };
            if unit {
                let q = a.unit_divide(&piv).unwrap();
                rows[i] = row_axpy(&rows[i], &q, &pk);
            } else {
                let g = piv.gcd(&a);
                let (pp, aa) = (piv.div_exact(&g).unwrap(), a.div_exact(&g).unwrap());
                let scaled: SRow = rows[i].iter().map(|(k, v)| (*k, v * &pp)).collect();
                let mut r = row_axpy(&scaled, &aa, &pk);
                row_content(&mut r);
                rows[i] = r;
            }
        }
    }
    used
}

fn graded_rows(sys: &RowSystem, mp: &ModProblem) -> Vec<usize> {
    let mut ix: Vec<usize> = (0..sys.rows.len()).collect();
    ix.sort_by_key(|&i| {
        let (wi, gi) = sys.origin[i];
        (mp.window[wi].iter().map(|x| x.abs()).sum::<i64>(), wi, gi)
    });
    ix
}

/// A small subset of rows whose span still contains `g`.
fn select_support(f: &Field, sys: &RowSystem, order: &[usize], g: &ModPoly) -> Option<Vec<usize>> {
    let test = |ix: &[usize]| sys.contains(f, Some(ix), g);
    let len = order.len();
    let mut n = 8.min(len);
    while n < len && !test(&order[..n]) {
        n *= 2;
    }
    n = n.min(len);
    if !test(&order[..n]) {
        return None;
    }
    let (mut lo, mut hi) = (n / 2, n);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if test(&order[..mid]) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut keep = order[..hi].to_vec();
    let mut chunk = keep.len() / 2;
    while chunk >= 1 {
        let mut i = 0;
        while i < keep.len() {
            let trial: Vec<usize> = keep[..i].iter().chain(keep[(i + chunk).min(keep.len())..].iter()).copied().collect();
            if !trial.is_empty() && trial.len() < keep.len() && test(&trial) {
                keep = trial;
            } else {
                i += chunk;
            }
        }
        chunk /= 2;
    }
    Some(keep)
}

struct ExactRows {
    cols: Vec<IVec>,
    rows: Vec<SRow>,
}

/// Exact transformed rows for `subset`, with columns in elimination order:
/// monomials outside the `M, L` subring, then `M, L` monomials outside
/// `late`, then `late`.
fn exact_rows(
    p: &EliminationProblem,
    mp: &ModProblem,
    sys: &RowSystem,
    order: ElimOrder,
    subset: &[usize],
    late: &BTreeSet<IVec>,
) -> ExactRows {
    let polys: Vec<EPoly> = subset
        .iter()
        .map(|&i| {
            let (wi, gi) = sys.origin[i];
            p.transform(order, &e_left_shift(p.omega(), &mp.window[wi], &p.bulk[gi].terms))
        })
        .collect();
    let mut cols: Vec<IVec> = polys.iter().flat_map(|e| e.keys().cloned()).chain(late.iter().cloned()).collect::<BTreeSet<_>>().into_iter().collect();
    cols.sort_by_key(|m| {
        let class = if !p.is_ml(m) {
            0
        } else if !late.contains(m) {
            1
        } else {
            2
        };
        (class, m.clone())
    });
    let index: BTreeMap<IVec, usize> = cols.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
    let nc = cols.len();
    let rows = polys
        .into_iter()
        .enumerate()
        .map(|(k, e)| {
            let mut r: SRow = e.into_iter().map(|(m, c)| (index[&m], c)).collect();
            r.insert(nc + k, QCoeff::one());
            r
        })
        .collect();
    ExactRows { cols, rows }
}

fn multipliers(p: &EliminationProblem, mp: &ModProblem, sys: &RowSystem, subset: &[usize], coeffs: &[QCoeff]) -> Vec<TorusElement> {
    let mut out: Vec<TorusElement> = p.bulk.iter().map(|_| TorusElement::zero(&p.torus)).collect();
    for (k, &i) in subset.iter().enumerate() {
        let (wi, gi) = sys.origin[i];
        out[gi].add_term(mp.window[wi].clone(), &coeffs[k]);
    }
    out
}

/// Completes a certificate for `target` from its denominator and bulk multipliers.
pub fn build_certificate(p: &EliminationProblem, target: &MLPoly, denominator: QCoeff, bulk: Vec<TorusElement>) -> Result<Certificate> {
    // strip a common factor
    let mut g = denominator.clone();
    for m in &bulk {
        for c in m.terms.values() {
            g = g.gcd(c);
        }
    }
    let (denominator, bulk) = if g.is_zero() || g.as_unit().is_some() {
        (denominator, bulk)
    } else {
        let div = |c: &QCoeff| c.div_exact(&g).expect("gcd divides");
        let b = bulk
            .iter()
            .map(|m| {
                let mut e = TorusElement::zero(&p.torus);
                for (v, c) in &m.terms {
                    e.add_term(v.clone(), &div(c));
                }
                e
            })
            .collect();
        (div(&denominator), b)
    };
    let mut d = TorusElement::zero(&p.torus);
    for (m, b) in bulk.iter().zip(&p.bulk) {
        d = d.add(&m.mul(b)?)?;
    }
    d = d.sub(&p.ml_element(target).scale(&denominator))?;
    let (parts, rem) = p.thread_decomposition(&d)?;
    if !rem.is_zero() {
        return Err(Error::CertificateFailed("residual does not lie in the thread ideal".into()));
    }
    let threads = parts.into_iter().map(|x| x.scale(&-QCoeff::one())).collect();
    let cert = Certificate { denominator, bulk, threads };
    if !verify_membership(p, target, &cert)? {
        return Err(Error::CertificateFailed("identity does not hold".into()));
    }
    Ok(cert)
}

/// Checks the certificate identity exactly.
pub fn verify_membership(p: &EliminationProblem, target: &MLPoly, c: &Certificate) -> Result<bool> {
    if c.denominator.is_zero() || c.bulk.len() != p.bulk.len() || c.threads.len() != p.threads.len() {
        return Ok(false);
    }
    let mut rhs = TorusElement::zero(&p.torus);
    for (m, b) in c.bulk.iter().zip(&p.bulk) {
        rhs = rhs.add(&m.mul(b)?)?;
    }
    for (a, n) in c.threads.iter().enumerate() {
        rhs = rhs.add(&p.thread_factor(a)?.mul(n)?)?;
    }
    Ok(rhs == p.ml_element(target).scale(&c.denominator))
}

fn mod_proportional(f: &Field, oml: i64, a: &P2, b: &P2) -> bool {
    p2_normalise(f, oml, a) == p2_normalise(f, oml, b)
}

fn recover(
    p: &EliminationProblem,
    f: &Field,
    mp: &ModProblem,
    sys: &RowSystem,
    order: ElimOrder,
    g: &P2,
) -> Result<(MLPoly, Certificate)> {
    let oml = p.oml();
    let gm: ModPoly = g.iter().map(|(&k, &c)| (p.ml_vec(k), c)).collect();
    let graded = graded_rows(sys, mp);
    let subset = select_support(f, sys, &graded, &gm).ok_or_else(|| Error::CertificateFailed("generator not in row span".into()))?;
    let late: BTreeSet<IVec> = gm.keys().cloned().collect();
    let mut ex = exact_rows(p, mp, sys, order, &subset, &late);
    let nc = ex.cols.len();
    let upto = nc - late.len();
    let n = ex.rows.len();
    let used = exact_eliminate(&mut ex.rows, n, upto);
    for (i, r) in ex.rows.iter().enumerate() {
        if used[i] || r.keys().next().map_or(true, |&k| k >= nc) {
            continue;
        }
        let mut h = MLPoly::zero(oml);
        for (&k, c) in r.range(..nc) {
            let m = &ex.cols[k];
            h.add_term((m[p.m], m[p.l]), c);
        }
        if !mod_proportional(f, oml, &h.eval_mod(f), g) {
            continue;
        }
        // content · n = u · X^w · h  and  h = Σ y_k T_k
        let (norm, w, u, content) = h.normalise_with();
        let y: Vec<QCoeff> = (0..n).map(|k| r.get(&(nc + k)).cloned().unwrap_or_else(QCoeff::zero)).collect();
        let shift = TorusElement::monomial(&p.torus, p.ml_vec(w), u);
        let bulk = multipliers(p, mp, sys, &subset, &y).iter().map(|m| shift.mul(m)).collect::<Result<Vec<_>>>()?;
        let cert = build_certificate(p, &norm, content, bulk)?;
        return Ok((norm, cert));
    }
    Err(Error::CertificateFailed("no exact row matches the modular generator".into()))
}

/// Exact membership proof for `target` within the degree window, or `None`
/// if the modular test already rules it out.
pub fn prove_membership(p: &EliminationProblem, target: &MLPoly, degree: i64, order: ElimOrder) -> Result<Option<Certificate>> {
    let f = Field::new(EVAL_POINT);
    let mp = p.mod_problem(&f, degree);
    let sys = build_rows(&f, &mp, order);
    let gm = p.ml_mod(&f, target);
    if !sys.contains(&f, None, &gm) {
        return Ok(None);
    }
    let graded = graded_rows(&sys, &mp);
    let subset = select_support(&f, &sys, &graded, &gm).ok_or_else(|| Error::CertificateFailed("support selection".into()))?;
    let mut ex = exact_rows(p, &mp, &sys, order, &subset, &BTreeSet::new());
    let nc = ex.cols.len();
    let n = ex.rows.len();
    let index: BTreeMap<&IVec, usize> = ex.cols.iter().enumerate().map(|(i, m)| (m, i)).collect();
    let mut trow = SRow::new();
    for (&k, c) in &target.weyl {
        let v = p.ml_vec(k);
        let col = *index.get(&v).ok_or_else(|| Error::CertificateFailed("target monomial outside the rows".into()))?;
        trow.insert(col, c.clone());
    }
    trow.insert(nc + n, QCoeff::one());
    ex.rows.push(trow);
    exact_eliminate(&mut ex.rows, n, nc);
    let t = ex.rows.pop().unwrap();
    if t.keys().next().map_or(false, |&k| k < nc) {
        return Err(Error::CertificateFailed("target did not reduce to zero".into()));
    }
    // d·g + Σ y_k T_k = 0
    let d = t.get(&(nc + n)).cloned().unwrap_or_else(QCoeff::zero);
    let y: Vec<QCoeff> = (0..n).map(|k| t.get(&(nc + k)).map(|c| -c).unwrap_or_else(QCoeff::zero)).collect();
    let bulk = multipliers(p, &mp, &sys, &subset, &y);
    build_certificate(p, target, d, bulk).map(Some)
}

/// Modular membership of `target` in the degree-bounded elimination space.
pub fn contains_mod(p: &EliminationProblem, target: &MLPoly, degree: i64, order: ElimOrder) -> bool {
    let f = Field::new(EVAL_POINT);
    let mp = p.mod_problem(&f, degree);
    let sys = build_rows(&f, &mp, order);
    sys.contains(&f, None, &p.ml_mod(&f, target))
}

pub fn element_json(p: &EliminationProblem, e: &TorusElement) -> Value {
    Value::Array(
        e.terms
            .iter()
            .map(|(v, c)| {
                let mono: Map<String, Value> =
                    v.iter().enumerate().filter(|x| *x.1 != 0).map(|(i, x)| (p.names[i].clone(), json!(x))).collect();
                json!({"coeff": c, "mono": mono})
            })
            .collect(),
    )
}

pub fn certificate_json(p: &EliminationProblem, c: &Certificate) -> Value {
    json!({
        "denominator": c.denominator,
        "bulk": c.bulk.iter().map(|m| element_json(p, m)).collect::<Vec<_>>(),
        "threads": c.threads.iter().map(|m| element_json(p, m)).collect::<Vec<_>>(),
    })
}

// ---------------------------------------------------------------------------
// Classical limit

/// Commutative Laurent polynomial in `M, L`.
pub type ClassicalML = BTreeMap<Exp2, BigInt>;

pub fn classical_from_printed(terms: &[PrintedTerm]) -> Result<ClassicalML> {
    let mut out = ClassicalML::new();
    for t in terms {
        let mut e = (0, 0);
        for (k, x) in &t.mono {
            let x = x.as_i64().ok_or_else(|| Error::MalformedInput(format!("exponent of {k}")))?;
            match k.as_str() {
                "M" => e.0 += x,
                "L" => e.1 += x,
                _ => return Err(Error::MalformedInput(format!("unexpected variable {k}"))),
            }
        }
        let sign = if t.q_half.rem_euclid(2) == 0 { 1 } else { -1 };
        *out.entry(e).or_default() += BigInt::from(t.coeff * sign);
    }
    out.retain(|_, c| !c.is_zero());
    Ok(out)
}

/// Shifts the exponents to start at zero and fixes the sign of its coefficient.
pub fn classical_normalise(g: &ClassicalML) -> ClassicalML {
    let Some(c0) = g.values().next() else { return g.clone() };
    let w = (g.keys().map(|k| k.0).min().unwrap(), g.keys().map(|k| k.1).min().unwrap());
    let content = g.values().fold(BigInt::zero(), |a, c| num_integer::Integer::gcd(&a, c));
    let s = if c0.is_negative() { -content } else { content };
    g.iter().map(|(&(a, b), c)| ((a - w.0, b - w.1), c / &s)).collect()
}

pub fn classical_to_string(g: &ClassicalML) -> String {
    let mut parts = Vec::new();
    for (&(a, b), c) in g.iter().rev() {
        let mono = ml_mono(a, b);
        parts.push(if mono.is_empty() { c.to_string() } else if c.is_one() { mono } else { format!("{c} {mono}") });
    }
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join(" + ")
    }
}

pub fn classical_json(g: &ClassicalML) -> Value {
    Value::Array(
        g.iter().rev().map(|(&(a, b), c)| json!({"q_half": 0, "coeff": bigint_json(c), "mono": {"M": a, "L": b}})).collect(),
    )
}

/// Elimination ideal at `q^{1/2} = -1`, saturated by the generators.
pub struct ClassicalIdeal {
    pub generators: Vec<ClassicalML>,
    basis: Vec<Poly>,
    order: BlockOrder,
    /// Number of eliminated variables (saturation variable and skeletal ones).
    elim: usize,
}

impl fmt::Debug for ClassicalIdeal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.generators.iter().map(classical_to_string)).finish()
    }
}

fn polynomialise(terms: &BTreeMap<IVec, BigInt>, nvars: usize, offset: usize, ord: BlockOrder) -> Poly {
    let n = terms.keys().next().map_or(0, |k| k.len());
    let mins: Vec<i64> = (0..n).map(|i| terms.keys().map(|k| k[i]).min().unwrap_or(0)).collect();
    let m = terms
        .iter()
        .map(|(k, c)| {
            let mut e = vec![0u32; nvars];
            for i in 0..n {
                e[offset + i] = (k[i] - mins[i]) as u32;
            }
            (e, BigRational::from_integer(c.clone()))
        })
        .collect();
    Poly::from_map(m, ord)
}

fn saturation(nvars: usize, ord: BlockOrder) -> Poly {
    let mut m = BTreeMap::new();
    m.insert(vec![1u32; nvars], BigRational::one());
    m.insert(vec![0u32; nvars], -BigRational::one());
    Poly::from_map(m, ord)
}

impl ClassicalIdeal {
    pub fn contains(&self, g: &ClassicalML) -> bool {
        if g.is_empty() {
            return true;
        }
        let nvars = self.elim + 2;
        let t: BTreeMap<IVec, BigInt> = g.iter().map(|(&(a, b), c)| (vec![a, b], c.clone())).collect();
        let p = polynomialise(&t, nvars, nvars - 2, self.order);
        reduce(&p, &self.basis, self.order).is_zero()
    }
}

fn ml_ideal(gens: &[ClassicalML]) -> (Vec<Poly>, BlockOrder) {
    let ord = BlockOrder { elim: 1 };
    let mut input: Vec<Poly> = gens
        .iter()
        .map(|g| polynomialise(&g.iter().map(|(&(a, b), c)| (vec![a, b], c.clone())).collect(), 3, 1, ord))
        .collect();
    input.push(saturation(3, ord));
    (groebner(&input, ord), ord)
}

pub fn classical_eliminate(p: &EliminationProblem) -> Result<ClassicalIdeal> {
    let n = p.rank();
    let keep: Vec<usize> = p.skeletal.iter().copied().chain([p.m, p.l]).collect();
    let nvars = keep.len() + 1;
    let ord = BlockOrder { elim: p.skeletal.len() + 1 };
    let omega = p.omega();
    let mut input = Vec::new();
    for b in &p.bulk {
        let mut terms: BTreeMap<IVec, BigInt> = BTreeMap::new();
        for (v, c) in &b.terms {
            let mut q = 0;
            for i in 0..n {
                for j in i + 1..n {
                    q += v[i] * v[j] * omega[i][j];
                }
            }
            let mut x = c.eval_classical();
            if q.rem_euclid(2) == 1 {
                x = -x;
            }
            for (i, ct) in &p.threads {
                x *= coeff_pow(ct, v[*i]).eval_classical();
            }
            for (i, &e) in v.iter().enumerate() {
                if e != 0 && !keep.contains(&i) && !p.threads.iter().any(|t| t.0 == i) {
                    return Err(Error::MalformedInput(format!("generator {} is neither kept nor eliminated", p.names[i])));
                }
            }
            let k: IVec = keep.iter().map(|&i| v[i]).collect();
            *terms.entry(k).or_default() += x;
        }
        terms.retain(|_, c| !c.is_zero());
        if !terms.is_empty() {
            input.push(polynomialise(&terms, nvars, 1, ord));
        }
    }
    input.push(saturation(nvars, ord));
    let basis = groebner(&input, ord);
    let elim = ord.elim;
    let mut free: Vec<ClassicalML> = basis
        .iter()
        .filter(|g| g.terms.iter().all(|t| t.0[..elim].iter().all(|&x| x == 0)))
        .map(|g| classical_normalise(&g.primitive().into_iter().map(|(e, c)| ((e[elim] as i64, e[elim + 1] as i64), c)).collect()))
        .collect();
    free.sort_by_key(|g| (g.len(), g.keys().last().copied()));
    free.dedup();
    let mut i = 0;
    while i < free.len() && free.len() > 1 {
        let others: Vec<ClassicalML> = free.iter().enumerate().filter(|x| x.0 != i).map(|x| x.1.clone()).collect();
        let (gb, o) = ml_ideal(&others);
        let g = polynomialise(&free[i].iter().map(|(&(a, b), c)| (vec![a, b], c.clone())).collect(), 3, 1, o);
        if reduce(&g, &gb, o).is_zero() {
            free.remove(i);
        } else {
            i += 1;
        }
    }
    Ok(ClassicalIdeal { generators: free, basis, order: ord, elim })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture(name: &str) -> Value {
        let s = std::fs::read_to_string(format!("{}/../../fixtures/{name}.json", env!("CARGO_MANIFEST_DIR"))).unwrap();
        serde_json::from_str(&s).unwrap()
    }

    #[test]
    fn ordered_and_weyl_agree() {
        // L M = q M L with ω(M, L) = -1
        let m = MLPoly::from_ordered(-1, [((1, 0), QCoeff::one())]);
        let l = MLPoly::from_ordered(-1, [((0, 1), QCoeff::one())]);
        let lm = l.mul(&m);
        let ml = m.mul(&l);
        assert_eq!(lm, ml.lmul_monomial((0, 0), &QCoeff::q_half(2)));
        assert_eq!(ml.ordered()[&(1, 1)], QCoeff::one());
    }

    #[test]
    fn normalisation_is_canonical() {
        let g = MLPoly::from_ordered(-1, [((0, 0), QCoeff::q_half(3)), ((2, 1), QCoeff::from_int(-2))]);
        let h = g.lmul_monomial((3, -1), &QCoeff::monomial(5, -7));
        assert!(g.same_up_to_units(&h));
        let n = g.normalise();
        assert_eq!(n.weyl[&(0, 0)], QCoeff::one());
    }

    #[test]
    fn unknot_chart() {
        let v = fixture("unknot");
        let p = EliminationProblem::from_chart("unknot", &v["chart"]).unwrap();
        let res = eliminate(&p, &ElimOptions { max_degree: 4, ..Default::default() }, &mut |_| {}).unwrap();
        assert!(res.stability_flag);
        assert_eq!(res.generators.len(), 1);
        let want = MLPoly::from_printed(p.oml(), &parse_terms(&v["expected"]["a_ideal"][0]).unwrap()).unwrap();
        assert!(res.generators[0].same_up_to_units(&want));
        assert!(verify_membership(&p, &res.generators[0], &res.certificates[0]).unwrap());
        let cl = classical_eliminate(&p).unwrap();
        assert_eq!(cl.generators.len(), 1);
        assert_eq!(cl.generators[0], classical_normalise(&classical_from_printed(&parse_terms(&v["expected"]["classical"][0]).unwrap()).unwrap()));
    }
}
