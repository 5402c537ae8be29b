//! Quantum tori: `X^v X^w = q^{ω(v,w)/2} X^{v+w}`.

use crate::error::{Error, Result};
use crate::lattice::{add_scaled, dot, split_quotient, IVec, SkewLattice, Splitting, Sublattice};
use crate::qcoeff::QCoeff;
use num_bigint::BigInt;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;


#[derive(Debug)]
pub struct QuantumTorus {
    pub lattice: SkewLattice,
    /// One row per lattice generator, one column per gate.
    pub weights: Vec<IVec>,
    pub gates: usize,
}

impl QuantumTorus {
    pub fn new(lattice: SkewLattice, weights: Vec<IVec>, gates: usize) -> Result<Arc<Self>> {
        if weights.len() != lattice.rank {
            return Err(Error::DimensionMismatch { expected: lattice.rank, got: weights.len() });
        }
        for w in &weights {
            if w.len() != gates {
                return Err(Error::DimensionMismatch { expected: gates, got: w.len() });
            }
        }
        Ok(Arc::new(Self { lattice, weights, gates }))
    }

    /// A torus with no gate grading.
    pub fn plain(lattice: SkewLattice) -> Arc<Self> {
        let r = lattice.rank;
        Self::new(lattice, vec![vec![]; r], 0).unwrap()
    }

    pub fn rank(&self) -> usize {
        self.lattice.rank
    }

    pub fn weight(&self, v: &[i64]) -> IVec {
        let mut out = vec![0; self.gates];
        for (i, &a) in v.iter().enumerate() {
            if a != 0 {
                add_scaled(&mut out, &self.weights[i], a);
            }
        }
        out
    }

    pub fn omega(&self, v: &[i64], w: &[i64]) -> i64 {
        self.lattice.pair(v, w)
    }
}

/// Product of monomials `c1 X^v` and `c2 X^w`.
pub fn mono_mul(t: &QuantumTorus, (c1, v): (&QCoeff, &[i64]), (c2, w): (&QCoeff, &[i64])) -> Result<(QCoeff, IVec)> {
    if v.len() != t.rank() || w.len() != t.rank() {
        return Err(Error::TorusMismatch);
    }
    let k = t.omega(v, w);
    let mut s = v.to_vec();
    add_scaled(&mut s, w, 1);
    Ok(((c1 * c2).shift(k), s))
}

#[derive(Clone)]
pub struct TorusElement {
    pub owner: Arc<QuantumTorus>,
    pub terms: BTreeMap<IVec, QCoeff>,
}

impl fmt::Debug for TorusElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.terms.iter()).finish()
    }
}

impl PartialEq for TorusElement {
    fn eq(&self, o: &Self) -> bool {
        Arc::ptr_eq(&self.owner, &o.owner) && self.terms == o.terms
    }
}

impl TorusElement {
    pub fn zero(owner: &Arc<QuantumTorus>) -> Self {
        Self { owner: owner.clone(), terms: BTreeMap::new() }
    }

    pub fn scalar(owner: &Arc<QuantumTorus>, c: QCoeff) -> Self {
        Self::monomial(owner, vec![0; owner.rank()], c)
    }

    pub fn one(owner: &Arc<QuantumTorus>) -> Self {
        Self::scalar(owner, QCoeff::one())
    }

    pub fn monomial(owner: &Arc<QuantumTorus>, v: IVec, c: QCoeff) -> Self {
        let mut e = Self::zero(owner);
        e.add_term(v, &c);
        e
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, v: IVec, c: &QCoeff) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&v) {
            Some(e) => {
                *e += c;
                if e.is_zero() {
                    self.terms.remove(&v);
                }
            }
            None => {
                self.terms.insert(v, c.clone());
            }
        }
    }

    fn same(&self, o: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.owner, &o.owner) {
            Ok(())
        } else {
            Err(Error::TorusMismatch)
        }
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        self.same(o)?;
        let mut out = self.clone();
        for (v, c) in &o.terms {
            out.add_term(v.clone(), c);
        }
        Ok(out)
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.same(o)?;
        let mut out = self.clone();
        for (v, c) in &o.terms {
            out.add_term(v.clone(), &-c);
        }
        Ok(out)
    }

    pub fn scale(&self, c: &QCoeff) -> Self {
        let mut out = Self::zero(&self.owner);
        for (v, d) in &self.terms {
            out.add_term(v.clone(), &(d * c));
        }
        out
    }

    pub fn mul(&self, o: &Self) -> Result<Self> {
        self.same(o)?;
        let t = &self.owner;
        let mut out = Self::zero(t);
        for (v, c) in &self.terms {
            for (w, d) in &o.terms {
                let (cc, s) = mono_mul(t, (c, v), (d, w))?;
                out.add_term(s, &cc);
            }
        }
        Ok(out)
    }

    /// `X^v · self · X^{-v}`.
    pub fn conjugate(&self, v: &[i64]) -> Self {
        let mut out = Self::zero(&self.owner);
        for (w, c) in &self.terms {
            out.add_term(w.clone(), &c.shift(2 * self.owner.omega(v, w)));
        }
        out
    }

    pub fn is_weight_zero(&self) -> bool {
        self.terms.keys().all(|v| self.owner.weight(v).iter().all(|&x| x == 0))
    }
}

/// Reduction `W_Λ → W_{Λ/Γ}` by a central character.
#[derive(Clone, Debug)]
pub struct CharacterQuotient {
    pub source: Arc<QuantumTorus>,
    pub target: Arc<QuantumTorus>,
    pub splitting: Splitting,
    /// Value of `X^{γ_i}` for each generator of `Γ`.
    pub chi: Vec<QCoeff>,
}

impl CharacterQuotient {
    pub fn chi_of(&self, g: &[i64]) -> QCoeff {
        let mut c = QCoeff::one();
        for (gi, ch) in g.iter().zip(&self.chi) {
            if *gi == 0 {
                continue;
            }
            let (k, s) = ch.as_unit().expect("character values are units");
            let sign = if s < 0 && gi.rem_euclid(2) == 1 { -1 } else { 1 };
            c = &c * &QCoeff::monomial(k * gi, sign);
        }
        c
    }

    pub fn reduce_vec(&self, u: &[i64]) -> (QCoeff, IVec) {
        let (g, w) = self.splitting.decompose(u);
        (self.chi_of(&g), w)
    }

    pub fn reduce(&self, e: &TorusElement) -> Result<TorusElement> {
        if !Arc::ptr_eq(&e.owner, &self.source) {
            return Err(Error::TorusMismatch);
        }
        let mut out = TorusElement::zero(&self.target);
        for (u, c) in &e.terms {
            let (x, w) = self.reduce_vec(u);
            out.add_term(w, &(c * &x));
        }
        Ok(out)
    }
}

/// Quotient by a central unimodular sublattice with unit character values.
pub fn central_character_quotient(t: &Arc<QuantumTorus>, g: &Sublattice, chi: Vec<QCoeff>) -> Result<CharacterQuotient> {
    if chi.len() != g.generators.len() {
        return Err(Error::DimensionMismatch { expected: g.generators.len(), got: chi.len() });
    }
    for c in &chi {
        if c.as_unit().is_none() {
            return Err(Error::NotAUnit(c.to_string()));
        }
    }
    if !g.checks(&t.lattice).in_kernel {
        return Err(Error::NotCentral);
    }
    let (sp, ql) = split_quotient(&t.lattice, g)?;
    let r = sp.quotient_rank();
    let weights: Vec<IVec> = (0..r)
        .map(|a| {
            let mut e = vec![0; r];
            e[a] = 1;
            t.weight(&sp.section(&e))
        })
        .collect();
    let target = QuantumTorus::new(ql, weights, t.gates)?;
    Ok(CharacterQuotient { source: t.clone(), target, splitting: sp, chi })
}

/// Rewrites each monomial as `χ(γ) q^{-ω(γ,w)/2} X^w`, discarding a right-ideal
/// element of `⟨X^γ - χ(γ)⟩`.
pub fn right_reduce(t: &Arc<QuantumTorus>, gmon: &Sublattice, chi: &[QCoeff], e: &TorusElement) -> Result<TorusElement> {
    if !Arc::ptr_eq(&e.owner, t) {
        return Err(Error::TorusMismatch);
    }
    if !gmon.is_isotropic(&t.lattice) {
        return Err(Error::NotIsotropic);
    }
    let (sp, _) = split_quotient(&t.lattice, gmon)?;
    let cq = CharacterQuotient { source: t.clone(), target: t.clone(), splitting: sp, chi: chi.to_vec() };
    let mut out = TorusElement::zero(t);
    for (u, c) in &e.terms {
        let (gc, wq) = cq.splitting.decompose(u);
        let w = cq.splitting.section(&wq);
        let mut gam = u.clone();
        add_scaled(&mut gam, &w, -1);
        let k = -t.omega(&gam, &w);
        out.add_term(w, &(c * &cq.chi_of(&gc)).shift(k));
    }
    Ok(out)
}

/// Commutative Laurent polynomial with integer coefficients.
pub type ClassicalPoly = BTreeMap<IVec, BigInt>;

pub fn specialize_classical(e: &TorusElement) -> ClassicalPoly {
    let mut out = ClassicalPoly::new();
    for (v, c) in &e.terms {
        let x = c.eval_classical();
        let ent = out.entry(v.clone()).or_default();
        *ent += x;
    }
    out.retain(|_, c| *c != BigInt::from(0));
    out
}

pub fn classical_mul(a: &ClassicalPoly, b: &ClassicalPoly) -> ClassicalPoly {
    let mut out = ClassicalPoly::new();
    for (v, c) in a {
        for (w, d) in b {
            let mut s = v.clone();
            add_scaled(&mut s, w, 1);
            *out.entry(s).or_default() += c * d;
        }
    }
    out.retain(|_, c| *c != BigInt::from(0));
    out
}

/// Sum of the pairings of consecutive factors, `Σ_{i<j} ω(v_i, v_j)`, so that
/// `X^{v_1} ⋯ X^{v_n} = q^{S/2} X^{Σ v_i}`.
pub fn ordering_exponent(l: &SkewLattice, factors: &[IVec]) -> i64 {
    let mut acc = vec![0; l.rank];
    let mut s = 0;
    for f in factors {
        s += dot(&l.omega_times(&acc), f);
        add_scaled(&mut acc, f, 1);
    }
    s
}
