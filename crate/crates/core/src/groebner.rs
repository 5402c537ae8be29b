//! Commutative Gröbner bases over `Q` with a two-block elimination order.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::cmp::Ordering;
use std::collections::BTreeMap;

pub type Exps = Vec<u32>;

/// Block order: graded reverse lex on the first `elim` variables, ties
/// broken by graded reverse lex on the rest.
#[derive(Clone, Copy, Debug)]
pub struct BlockOrder {
    pub elim: usize,
}

fn grevlex(a: &[u32], b: &[u32]) -> Ordering {
    let da: u32 = a.iter().sum();
    let db: u32 = b.iter().sum();
    da.cmp(&db).then_with(|| {
        for (x, y) in a.iter().zip(b).rev() {
            if x != y {
                return y.cmp(x);
            }
        }
        Ordering::Equal
    })
}

impl BlockOrder {
    pub fn cmp(&self, a: &[u32], b: &[u32]) -> Ordering {
        grevlex(&a[..self.elim], &b[..self.elim]).then_with(|| grevlex(&a[self.elim..], &b[self.elim..]))
    }
}

/// A polynomial as terms sorted by decreasing monomial.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    pub terms: Vec<(Exps, BigRational)>,
}

impl Poly {
    pub fn from_map(m: BTreeMap<Exps, BigRational>, ord: BlockOrder) -> Self {
        let mut terms: Vec<(Exps, BigRational)> = m.into_iter().filter(|t| !t.1.is_zero()).collect();
        terms.sort_by(|a, b| ord.cmp(&b.0, &a.0));
        Poly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn lead(&self) -> &(Exps, BigRational) {
        &self.terms[0]
    }

    fn monic(mut self) -> Self {
        if let Some(c) = self.terms.first().map(|t| t.1.clone()) {
            for t in &mut self.terms {
                t.1 = &t.1 / &c;
            }
        }
        self
    }

    /// `self - c · x^m · g`.
    fn sub_mul(&self, c: &BigRational, m: &[u32], g: &Poly, ord: BlockOrder) -> Poly {
        let mut acc: BTreeMap<Exps, BigRational> = self.terms.iter().cloned().collect();
        for (e, d) in &g.terms {
            let k: Exps = e.iter().zip(m).map(|(a, b)| a + b).collect();
            let v = acc.entry(k).or_insert_with(BigRational::zero);
            *v -= c * d;
        }
        Poly::from_map(acc, ord)
    }

    /// Integer coefficients with content 1 and positive leading coefficient.
    pub fn primitive(&self) -> Vec<(Exps, BigInt)> {
        let den = self.terms.iter().fold(BigInt::one(), |a, t| a.lcm(t.1.denom()));
        let ints: Vec<(Exps, BigInt)> =
            self.terms.iter().map(|(e, c)| (e.clone(), (c * BigRational::from_integer(den.clone())).to_integer())).collect();
        let mut g = ints.iter().fold(BigInt::zero(), |a, t| a.gcd(&t.1));
        if ints.first().map(|t| t.1.is_negative()).unwrap_or(false) {
            g = -g;
        }
        ints.into_iter().map(|(e, c)| (e, c / &g)).collect()
    }
}

fn divides(a: &[u32], b: &[u32]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

fn lcm(a: &[u32], b: &[u32]) -> Exps {
    a.iter().zip(b).map(|(x, y)| *x.max(y)).collect()
}

/// Full reduction of `f` by `basis`.
pub fn reduce(f: &Poly, basis: &[Poly], ord: BlockOrder) -> Poly {
    let mut f = f.clone();
    let mut done: Vec<(Exps, BigRational)> = Vec::new();
    while !f.is_zero() {
        let (m, c) = f.lead().clone();
        match basis.iter().find(|g| divides(&g.lead().0, &m)) {
            Some(g) => {
                let q: Exps = m.iter().zip(&g.lead().0).map(|(a, b)| a - b).collect();
                let k = &c / &g.lead().1;
                f = f.sub_mul(&k, &q, g, ord);
            }
            None => {
                done.push((m, c));
                f.terms.remove(0);
            }
        }
    }
    Poly { terms: done }
}

fn spoly(f: &Poly, g: &Poly, ord: BlockOrder) -> Poly {
    let l = lcm(&f.lead().0, &g.lead().0);
    let mf: Exps = l.iter().zip(&f.lead().0).map(|(a, b)| a - b).collect();
    let mg: Exps = l.iter().zip(&g.lead().0).map(|(a, b)| a - b).collect();
    let zero = Poly { terms: vec![] };
    let a = zero.sub_mul(&(-BigRational::one() / &f.lead().1), &mf, f, ord);
    a.sub_mul(&(BigRational::one() / &g.lead().1), &mg, g, ord)
}

/// Reduced Gröbner basis by Buchberger's algorithm with the coprime and
/// chain criteria.
pub fn groebner(input: &[Poly], ord: BlockOrder) -> Vec<Poly> {
    let mut basis: Vec<Poly> = Vec::new();
    for f in input {
        let r = reduce(f, &basis, ord);
        if !r.is_zero() {
            basis.push(r.monic());
        }
    }
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for j in 0..basis.len() {
        for i in 0..j {
            pairs.push((i, j));
        }
    }
    while !pairs.is_empty() {
        let deg = |p: &(usize, usize)| lcm(&basis[p.0].lead().0, &basis[p.1].lead().0).iter().sum::<u32>();
        let (idx, _) = pairs.iter().enumerate().min_by_key(|(_, p)| (deg(p), p.1, p.0)).unwrap();
        let (i, j) = pairs.remove(idx);
        let (li, lj) = (&basis[i].lead().0, &basis[j].lead().0);
        if li.iter().zip(lj).all(|(a, b)| *a == 0 || *b == 0) {
            continue;
        }
        let l = lcm(li, lj);
        let chain = (0..basis.len()).any(|k| {
            k != i
                && k != j
                && divides(&basis[k].lead().0, &l)
                && !pairs.contains(&(i.min(k), i.max(k)))
                && !pairs.contains(&(j.min(k), j.max(k)))
        });
        if chain {
            continue;
        }
        let r = reduce(&spoly(&basis[i], &basis[j], ord), &basis, ord);
        if !r.is_zero() {
            let n = basis.len();
            basis.push(r.monic());
            for k in 0..n {
                pairs.push((k, n));
            }
        }
    }
    // minimal and reduced
    let mut keep: Vec<Poly> = Vec::new();
    for (i, g) in basis.iter().enumerate() {
        let redundant = basis.iter().enumerate().any(|(j, h)| {
            j != i && divides(&h.lead().0, &g.lead().0) && (h.lead().0 != g.lead().0 || j < i)
        });
        if !redundant {
            keep.push(g.clone());
        }
    }
    let mut out = Vec::new();
    for i in 0..keep.len() {
        let others: Vec<Poly> = keep.iter().enumerate().filter(|(j, _)| *j != i).map(|x| x.1.clone()).collect();
        out.push(reduce(&keep[i], &others, ord).monic());
    }
    out.sort_by(|a, b| ord.cmp(&a.lead().0, &b.lead().0));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(terms: &[(&[u32], i64)], ord: BlockOrder) -> Poly {
        Poly::from_map(terms.iter().map(|(e, c)| (e.to_vec(), BigRational::from_integer((*c).into()))).collect(), ord)
    }

    #[test]
    fn eliminates_a_variable() {
        // y - x^2, y - 1 in Q[y; x]  ->  x^2 - 1
        let ord = BlockOrder { elim: 1 };
        let gb = groebner(&[p(&[(&[1, 0], 1), (&[0, 2], -1)], ord), p(&[(&[1, 0], 1), (&[0, 0], -1)], ord)], ord);
        let free: Vec<&Poly> = gb.iter().filter(|g| g.terms.iter().all(|t| t.0[0] == 0)).collect();
        assert_eq!(free.len(), 1);
        assert_eq!(*free[0], p(&[(&[0, 2], 1), (&[0, 0], -1)], ord));
    }

    #[test]
    fn reduces_members_to_zero() {
        let ord = BlockOrder { elim: 0 };
        let f = p(&[(&[2, 0], 1), (&[0, 1], -1)], ord);
        let g = p(&[(&[1, 1], 1), (&[0, 0], -1)], ord);
        let gb = groebner(&[f.clone(), g.clone()], ord);
        let zero = Poly { terms: vec![] };
        let comb = zero.sub_mul(&BigRational::from_integer((-3).into()), &[1, 2], &f, ord).sub_mul(&BigRational::one(), &[4, 0], &g, ord);
        assert!(reduce(&comb, &gb, ord).is_zero());
        assert!(!reduce(&p(&[(&[1, 0], 1)], ord), &gb, ord).is_zero());
    }
}
