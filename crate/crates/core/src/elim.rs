//! Sparse linear algebra over `Z/p` for degree-bounded elimination.
//!
//! Elements of a quantum torus are evaluated at `q^(1/2) = s mod p`; the row
//! space of all window multiples is brought to echelon form under a block
//! order, and the block-free rows are read off.

use crate::lattice::IVec;
use crate::qcoeff::{mul_mod, pow_mod, pow_mod_signed};
use crate::qtorus::TorusElement;
use rayon::prelude::*;
use std::collections::{BTreeMap, HashMap};

/// A 61-bit Mersenne prime.
pub const PRIME: u64 = (1 << 61) - 1;

#[derive(Clone, Copy, Debug)]
pub struct Field {
    pub p: u64,
    /// Value of `q^(1/2)`.
    pub s: u64,
}

impl Field {
    pub fn new(s: u64) -> Self {
        Self { p: PRIME, s: s % PRIME }
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        mul_mod(a, b, self.p)
    }

    pub fn add(&self, a: u64, b: u64) -> u64 {
        let c = a + b;
        if c >= self.p {
            c - self.p
        } else {
            c
        }
    }

    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    pub fn inv(&self, a: u64) -> u64 {
        pow_mod(a, self.p - 2, self.p)
    }

    pub fn s_pow(&self, k: i64) -> u64 {
        pow_mod_signed(self.s, k, self.p)
    }

    pub fn from_i64(&self, c: i64) -> u64 {
        let m = c.rem_euclid(self.p as i64);
        m as u64
    }
}

/// A Laurent polynomial in several commuting-or-not variables, evaluated mod p.
pub type ModPoly = BTreeMap<IVec, u64>;

pub fn eval_element(f: &Field, e: &TorusElement) -> ModPoly {
    let mut out = ModPoly::new();
    for (v, c) in &e.terms {
        let x = c.eval_mod(f.s, f.p);
        if x != 0 {
            out.insert(v.clone(), x);
        }
    }
    out
}

/// Sparse row: `(column, value)` sorted by column, values nonzero.
pub type Row = Vec<(u32, u64)>;

/// Incremental echelon form; pivot rows are normalised to a leading 1.
#[derive(Default)]
pub struct Echelon {
    pub pivots: HashMap<u32, usize>,
    pub rows: Vec<Row>,
}

fn axpy(f: &Field, a: &Row, c: u64, b: &Row) -> Row {
    // a - c*b
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
            out.push(a[i]);
            i += 1;
        } else if i == a.len() || b[j].0 < a[i].0 {
            out.push((b[j].0, f.neg(f.mul(c, b[j].1))));
            j += 1;
        } else {
            let v = f.sub(a[i].1, f.mul(c, b[j].1));
            if v != 0 {
                out.push((a[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

impl Echelon {
    /// Reduces the leading terms of `r` and stores it; returns its pivot
    /// column, or `None` if it reduced to zero.
    pub fn insert(&mut self, f: &Field, mut r: Row) -> Option<u32> {
        loop {
            let (c, v) = *r.first()?;
            match self.pivots.get(&c) {
                Some(&k) => {
                    r = axpy(f, &r, v, &self.rows[k]);
                }
                None => {
                    let iv = f.inv(v);
                    for e in r.iter_mut() {
                        e.1 = f.mul(e.1, iv);
                    }
                    self.pivots.insert(c, self.rows.len());
                    self.rows.push(r);
                    return Some(c);
                }
            }
        }
    }

    /// Full reduction of `r` against all pivots.
    pub fn reduce(&self, f: &Field, r: &Row) -> Row {
        let mut r = r.clone();
        let mut idx = 0;
        while idx < r.len() {
            let (c, v) = r[idx];
            if let Some(&k) = self.pivots.get(&c) {
                let prefix = r[..idx].to_vec();
                let tail: Row = r[idx..].to_vec();
                let red = axpy(f, &tail, v, &self.rows[k]);
                r = prefix;
                r.extend(red);
            } else {
                idx += 1;
            }
        }
        r
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }
}

/// Column indexing of monomials under a caller-supplied order key.
pub struct Columns {
    pub monos: Vec<IVec>,
    pub index: HashMap<IVec, u32>,
}

impl Columns {
    pub fn build<K: Ord + Send, F: Fn(&IVec) -> K + Sync>(mut monos: Vec<IVec>, key: F) -> Self {
        monos.sort();
        monos.dedup();
        let mut keyed: Vec<(K, IVec)> = monos.into_par_iter().map(|m| (key(&m), m)).collect();
        keyed.sort();
        let monos: Vec<IVec> = keyed.into_iter().map(|x| x.1).collect();
        let index = monos.iter().enumerate().map(|(i, m)| (m.clone(), i as u32)).collect();
        Self { monos, index }
    }

    pub fn row(&self, p: &ModPoly) -> Row {
        let mut r: Row = p.iter().map(|(m, &v)| (self.index[m], v)).collect();
        r.sort_unstable();
        r
    }

    pub fn poly(&self, r: &Row) -> ModPoly {
        r.iter().map(|&(c, v)| (self.monos[c as usize].clone(), v)).collect()
    }
}

/// `X^w · g` for a Weyl-form polynomial `g`, with pairing `omega`.
pub fn left_shift(f: &Field, omega: &[Vec<i64>], w: &[i64], g: &ModPoly) -> ModPoly {
    let mut out = ModPoly::new();
    let ow: Vec<i64> = (0..w.len()).map(|j| (0..w.len()).map(|i| w[i] * omega[i][j]).sum()).collect();
    for (v, &c) in g {
        let k: i64 = ow.iter().zip(v).map(|(a, b)| a * b).sum();
        let m: IVec = w.iter().zip(v).map(|(a, b)| a + b).collect();
        out.insert(m, f.mul(c, f.s_pow(k)));
    }
    out
}

/// Product of two Weyl-form polynomials.
pub fn mod_mul(f: &Field, omega: &[Vec<i64>], a: &ModPoly, b: &ModPoly) -> ModPoly {
    let mut out = ModPoly::new();
    for (w, &c) in a {
        for (m, v) in left_shift(f, omega, w, b) {
            let e = out.entry(m).or_insert(0);
            *e = f.add(*e, f.mul(c, v));
        }
    }
    out.retain(|_, v| *v != 0);
    out
}

/// All integer vectors of dimension `n` with `Σ |w_i| · weight_i ≤ d`.
pub fn window(weights: &[i64], d: i64) -> Vec<IVec> {
    let mut out = Vec::new();
    let mut cur = vec![0; weights.len()];
    fn rec(i: usize, left: i64, weights: &[i64], cur: &mut IVec, out: &mut Vec<IVec>) {
        if i == weights.len() {
            out.push(cur.clone());
            return;
        }
        if weights[i] == 0 {
            cur[i] = 0;
            rec(i + 1, left, weights, cur, out);
            return;
        }
        let m = left / weights[i];
        for a in -m..=m {
            cur[i] = a;
            rec(i + 1, left - a.abs() * weights[i], weights, cur, out);
        }
        cur[i] = 0;
    }
    rec(0, d, weights, &mut cur, &mut out);
    out
}

/// Order in which skeletal and thread variables leave.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ElimOrder {
    /// Eliminate skeletal variables from the left ideal, then specialise threads.
    YFirst,
    /// Specialise threads through the right ideal first, then eliminate.
    RFirst,
}

/// A degree-bounded elimination problem evaluated mod p.
pub struct ModProblem {
    /// Pairing on generator coordinates: `X^a X^b = s^{ω(a,b)} X^{a+b}`.
    pub omega: Vec<Vec<i64>>,
    pub gens: Vec<ModPoly>,
    pub skeletal: Vec<usize>,
    /// Thread coordinates with their specialised values.
    pub threads: Vec<(usize, u64)>,
    pub window: Vec<IVec>,
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

/// Moves thread factors to the left and replaces them by their values.
pub fn specialise_threads(f: &Field, p: &ModProblem, g: &ModPoly) -> ModPoly {
    let mut out = ModPoly::new();
    for (v, &c) in g {
        let mut vr = vec![0; v.len()];
        let mut rest = v.clone();
        let mut val = c;
        for &(i, x) in &p.threads {
            vr[i] = v[i];
            rest[i] = 0;
            val = f.mul(val, mod_pow_signed(f, x, v[i]));
        }
        val = f.mul(val, f.s_pow(-pair(&p.omega, &vr, &rest)));
        let e = out.entry(rest).or_insert(0);
        *e = f.add(*e, val);
    }
    out.retain(|_, v| *v != 0);
    out
}

fn mod_pow_signed(f: &Field, x: u64, k: i64) -> u64 {
    if k >= 0 {
        pow_mod(x, k as u64, f.p)
    } else {
        pow_mod(f.inv(x), (-k) as u64, f.p)
    }
}

/// Applies the order's thread substitution to one row.
///
/// `RFirst` substitutes everywhere; `YFirst` substitutes only in the part free
/// of skeletal variables, which is all that survives elimination.
pub fn transform(f: &Field, p: &ModProblem, order: ElimOrder, r: &ModPoly) -> ModPoly {
    match order {
        ElimOrder::RFirst => specialise_threads(f, p, r),
        ElimOrder::YFirst => {
            let (mut ys, free): (ModPoly, ModPoly) = r.iter().map(|(m, v)| (m.clone(), *v)).partition(|(m, _)| p.has_skeletal(m));
            ys.extend(specialise_threads(f, p, &free));
            ys
        }
    }
}

impl ModProblem {
    pub fn has_skeletal(&self, m: &[i64]) -> bool {
        self.skeletal.iter().any(|&i| m[i] != 0)
    }
}

/// Transformed window rows `X^w · g`, with skeletal columns ordered first.
pub struct RowSystem {
    pub cols: Columns,
    pub rows: Vec<Row>,
    /// `(window index, generator index)` of each row.
    pub origin: Vec<(usize, usize)>,
    /// First column free of skeletal variables.
    pub free_from: u32,
}

pub fn build_rows(f: &Field, p: &ModProblem, order: ElimOrder) -> RowSystem {
    let raw: Vec<((usize, usize), ModPoly)> = p
        .window
        .par_iter()
        .enumerate()
        .flat_map_iter(|(wi, w)| p.gens.iter().enumerate().map(move |(gi, g)| ((wi, gi), w, g)))
        .map(|(o, w, g)| (o, transform(f, p, order, &left_shift(f, &p.omega, w, g))))
        .filter(|r| !r.1.is_empty())
        .collect();
    let key = |m: &IVec| (!p.has_skeletal(m), m.clone());
    let cols = Columns::build(raw.iter().flat_map(|r| r.1.keys().cloned()).collect(), key);
    let free_from = cols.monos.iter().position(|m| !p.has_skeletal(m)).unwrap_or(cols.monos.len()) as u32;
    let rows = raw.par_iter().map(|r| cols.row(&r.1)).collect();
    let origin = raw.into_iter().map(|r| r.0).collect();
    RowSystem { cols, rows, origin, free_from }
}

impl RowSystem {
    /// Echelon form of the rows with the given indices (all rows if `None`).
    pub fn echelon(&self, f: &Field, subset: Option<&[usize]>) -> Echelon {
        let mut rows: Vec<&Row> = match subset {
            Some(ix) => ix.iter().map(|&i| &self.rows[i]).collect(),
            None => self.rows.iter().collect(),
        };
        rows.sort_by(|a, b| a[0].0.cmp(&b[0].0).then(a.len().cmp(&b.len())).then(a.cmp(b)));
        let mut ech = Echelon::default();
        for r in rows {
            ech.insert(f, r.clone());
        }
        ech
    }

    /// Echelon rows free of skeletal variables.
    pub fn free_rows(&self, ech: &Echelon) -> Vec<ModPoly> {
        let mut keys: Vec<u32> = ech.pivots.keys().copied().filter(|&c| c >= self.free_from).collect();
        keys.sort();
        keys.into_iter().map(|c| self.cols.poly(&ech.rows[ech.pivots[&c]])).collect()
    }

    /// Whether `g` lies in the span of the given rows.
    pub fn contains(&self, f: &Field, subset: Option<&[usize]>, g: &ModPoly) -> bool {
        let mut row: Row = Vec::with_capacity(g.len());
        for (m, &v) in g {
            match self.cols.index.get(m) {
                Some(&c) => row.push((c, v)),
                None => return false,
            }
        }
        row.sort_unstable();
        self.echelon(f, subset).reduce(f, &row).is_empty()
    }
}

/// Echelon basis of the window span intersected with the target subring.
pub fn eliminate_mod(f: &Field, p: &ModProblem, order: ElimOrder) -> Vec<ModPoly> {
    let sys = build_rows(f, p, order);
    let ech = sys.echelon(f, None);
    sys.free_rows(&ech)
}

/// Echelon form of a list of polynomials under the plain monomial order.
pub fn span(f: &Field, polys: &[ModPoly]) -> (Columns, Echelon) {
    let cols = Columns::build(polys.iter().flat_map(|r| r.keys().cloned()).collect(), |m| m.clone());
    let mut ech = Echelon::default();
    for p in polys {
        ech.insert(f, cols.row(p));
    }
    (cols, ech)
}

/// Whether `g` lies in the span of `polys`.
pub fn in_span(f: &Field, polys: &[ModPoly], g: &ModPoly) -> bool {
    let mut all = polys.to_vec();
    all.push(g.clone());
    let (cols, ech) = span(f, &all);
    let (_, e0) = span(f, polys);
    let _ = cols;
    ech.rank() == e0.rank()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn echelon_rank() {
        let f = Field::new(12345);
        let mut e = Echelon::default();
        assert_eq!(e.insert(&f, vec![(0, 1), (2, 3)]), Some(0));
        assert_eq!(e.insert(&f, vec![(0, 2), (2, 6)]), None);
        assert_eq!(e.insert(&f, vec![(0, 2), (1, 1)]), Some(1));
        assert_eq!(e.rank(), 2);
        let r = e.reduce(&f, &vec![(0, 1), (1, 1), (2, 1)]);
        assert!(r.iter().all(|x| x.0 == 2));
    }

    #[test]
    fn window_counts() {
        assert_eq!(window(&[1, 1], 1).len(), 5);
        assert_eq!(window(&[1, 0, 1], 2).len(), 13);
        let w = window(&[2, 1], 3);
        assert!(w.iter().all(|v| 2 * v[0].abs() + v[1].abs() <= 3));
    }

    #[test]
    fn shift_is_twisted() {
        let f = Field::new(7);
        let omega = vec![vec![0, 1], vec![-1, 0]];
        let mut g = ModPoly::new();
        g.insert(vec![0, 1], 1);
        let h = left_shift(&f, &omega, &[1, 0], &g);
        assert_eq!(h[&vec![1, 1]], f.s_pow(1));
    }
}
