//! Gluing data, the edge/thread atlas, Ω′ and the gluing sublattice.

use crate::error::{Error, Result};
use crate::lattice::{IVec, SkewLattice, Splitting, Sublattice};
use crate::qcoeff::QCoeff;
use crate::qtorus::{central_character_quotient, CharacterQuotient, QuantumTorus};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

pub type Gate = (usize, usize, usize);

/// Short edges of one tetrahedron, grouped by puncture.
pub const SHORT_ORDER: [(usize, usize); 12] = [
    (0, 1), (0, 2), (0, 3), (1, 0), (1, 3), (1, 2), (2, 0), (2, 1), (2, 3), (3, 0), (3, 2), (3, 1),
];
pub const LONG_ORDER: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

const OMEGA_SH: [[i64; 3]; 3] = [[0, 1, -1], [-1, 0, 1], [1, -1, 0]];
const OMEGA_SH_LG: [[i64; 6]; 12] = [
    [0, 1, 1, 0, 0, 0],
    [1, 0, 1, 0, 0, 0],
    [1, 1, 0, 0, 0, 0],
    [0, 0, 0, 1, 1, 0],
    [1, 0, 0, 1, 0, 0],
    [1, 0, 0, 0, 1, 0],
    [0, 0, 0, 1, 0, 1],
    [0, 1, 0, 0, 0, 1],
    [0, 1, 0, 1, 0, 0],
    [0, 0, 0, 0, 1, 1],
    [0, 0, 1, 0, 1, 0],
    [0, 0, 1, 0, 0, 1],
];

/// Ω_tet on the 12 short and 6 long edges of one tetrahedron.
pub fn omega_tet() -> Vec<Vec<i64>> {
    let mut o = vec![vec![0; 18]; 18];
    for b in 0..4 {
        for i in 0..3 {
            for j in 0..3 {
                o[3 * b + i][3 * b + j] = OMEGA_SH[i][j];
            }
        }
    }
    for i in 0..12 {
        for j in 0..6 {
            o[i][12 + j] = OMEGA_SH_LG[i][j];
            o[12 + j][i] = -OMEGA_SH_LG[i][j];
        }
    }
    o
}

/// A product of named Λ′ generators with a `q`-prefactor, read left to right.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Peripheral {
    pub q_half: i64,
    pub exponents: serde_json::Map<String, serde_json::Value>,
}

impl Peripheral {
    pub fn factors(&self) -> Result<Vec<(String, i64)>> {
        self.exponents
            .iter()
            .map(|(k, v)| {
                v.as_i64()
                    .map(|e| (k.clone(), e))
                    .ok_or_else(|| Error::MalformedInput(format!("exponent of {k} is not an integer")))
            })
            .collect()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GluingData {
    pub num_tetrahedra: usize,
    pub neighbors: Vec<[usize; 4]>,
    pub gluings: Vec<[[usize; 4]; 4]>,
    #[serde(default)]
    pub meridian: Option<Peripheral>,
    #[serde(default)]
    pub longitude: Option<Peripheral>,
}

impl GluingData {
    pub fn validate(&self) -> Result<()> {
        let t = self.num_tetrahedra;
        if self.neighbors.len() != t || self.gluings.len() != t {
            return Err(Error::MalformedInput(format!("expected {t} neighbor and gluing rows")));
        }
        if t == 0 {
            return Err(Error::MalformedInput("no tetrahedra".into()));
        }
        for k in 0..t {
            for j in 0..4 {
                if self.neighbors[k][j] >= t {
                    return Err(Error::MalformedInput(format!("neighbor {} out of range", self.neighbors[k][j])));
                }
                let p = self.gluings[k][j];
                let set: BTreeSet<usize> = p.iter().copied().collect();
                if set.len() != 4 || p.iter().any(|&x| x > 3) {
                    return Err(Error::PermutationInvalid { tet: k, face: j });
                }
            }
        }
        for k in 0..t {
            for j in 0..4 {
                let k2 = self.neighbors[k][j];
                let p = self.gluings[k][j];
                let j2 = p[j];
                if self.neighbors[k2][j2] != k {
                    return Err(Error::NonInvolutiveGluing { tet: k, face: j });
                }
                let back = self.gluings[k2][j2];
                if (0..4).any(|v| back[p[v]] != v) {
                    return Err(Error::NonInvolutiveGluing { tet: k, face: j });
                }
            }
        }
        Ok(())
    }
}

pub fn parse_gluing(source: &str) -> Result<GluingData> {
    let g: GluingData = serde_json::from_str(source).map_err(|e| Error::MalformedInput(e.to_string()))?;
    g.validate()?;
    Ok(g)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Gen {
    /// Short edge `a_{tpe}`.
    Short(usize, usize, usize),
    /// Long edge `A_{t p1 p2}`, `p1 < p2`.
    Long(usize, usize, usize),
    /// Thread from gate `g0` to gate `g1`.
    Thread(Gate, Gate),
}

fn gate_str(g: Gate) -> String {
    format!("{}{}{}", g.0, g.1, g.2)
}

impl Gen {
    pub fn name(&self) -> String {
        match *self {
            Gen::Short(t, p, e) => format!("a_{t}{p}{e}"),
            Gen::Long(t, a, b) => format!("A_{t}{a}{b}"),
            Gen::Thread(g0, g1) => format!("x_{}_{}", gate_str(g0), gate_str(g1)),
        }
    }

    pub fn parse(s: &str) -> Result<Gen> {
        let bad = || Error::MalformedInput(format!("bad generator name {s:?}"));
        let digits = |d: &str| -> Result<Gate> {
            let v: Vec<usize> = d.chars().map(|c| c.to_digit(10).map(|x| x as usize)).collect::<Option<_>>().ok_or_else(bad)?;
            if v.len() != 3 {
                return Err(bad());
            }
            Ok((v[0], v[1], v[2]))
        };
        if let Some(r) = s.strip_prefix("a_") {
            let (t, p, e) = digits(r)?;
            Ok(Gen::Short(t, p, e))
        } else if let Some(r) = s.strip_prefix("A_") {
            let (t, a, b) = digits(r)?;
            Ok(Gen::Long(t, a.min(b), a.max(b)))
        } else if let Some(r) = s.strip_prefix("x_") {
            let (a, b) = r.split_once('_').ok_or_else(bad)?;
            Ok(Gen::Thread(digits(a)?, digits(b)?))
        } else {
            Err(bad())
        }
    }
}

fn odd(p: [usize; 4]) -> bool {
    let mut inv = 0;
    for i in 0..4 {
        for j in i + 1..4 {
            if p[i] > p[j] {
                inv += 1;
            }
        }
    }
    inv % 2 == 1
}

#[derive(Clone, Debug)]
pub struct EdgeAtlas {
    pub t: usize,
    pub gluing: GluingData,
    pub gates: Vec<Gate>,
    pub gate_index: BTreeMap<Gate, usize>,
    /// `(+ gate, - gate)` of each short edge.
    pub short_ends: BTreeMap<Gate, (Gate, Gate)>,
    /// Threads as `(from, to, short edge whose - end starts it)`.
    pub threads: Vec<(Gate, Gate, Gate)>,
    pub thread_out: BTreeMap<Gate, Gen>,
    pub thread_in: BTreeMap<Gate, Gen>,
    pub short_plus_at: BTreeMap<Gate, Gen>,
    pub short_minus_at: BTreeMap<Gate, Gen>,
    /// Basis of Λ′ in coordinate order.
    pub basis: Vec<Gen>,
    pub index: BTreeMap<Gen, usize>,
}

impl EdgeAtlas {
    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn glue(&self, g: Gate, face: usize) -> Gate {
        let (k, p, e) = g;
        let s = self.gluing.gluings[k][face];
        (self.gluing.neighbors[k][face], s[p], s[e])
    }

    /// The short edge identified with `a_{kpe}` across face `e`.
    pub fn partner(&self, x: Gate) -> Gate {
        self.glue(x, x.2)
    }

    pub fn long_at(&self, g: Gate) -> Gen {
        Gen::Long(g.0, g.1.min(g.2), g.1.max(g.2))
    }

    pub fn vec(&self, terms: &[(Gen, i64)]) -> IVec {
        let mut v = vec![0; self.rank()];
        for (g, c) in terms {
            v[self.index[g]] += c;
        }
        v
    }

    /// Like [`EdgeAtlas::vec`] but rejects generators not in this atlas.
    pub fn try_vec(&self, terms: &[(Gen, i64)]) -> Result<IVec> {
        let mut v = vec![0; self.rank()];
        for (g, c) in terms {
            let i = self.index.get(g).ok_or_else(|| Error::MalformedInput(format!("unknown generator {}", g.name())))?;
            v[*i] += c;
        }
        Ok(v)
    }

    pub fn unit(&self, g: Gen) -> IVec {
        self.vec(&[(g, 1)])
    }

    pub fn lookup(&self, name: &str) -> Result<usize> {
        let g = Gen::parse(name)?;
        self.index.get(&g).copied().ok_or_else(|| Error::MalformedInput(format!("unknown generator {name}")))
    }

    /// Weight vector over all gates.
    pub fn weights_of(&self, g: Gen) -> IVec {
        let mut w = vec![0; self.gates.len()];
        match g {
            Gen::Short(k, p, e) => {
                let (gp, gm) = self.short_ends[&(k, p, e)];
                w[self.gate_index[&gp]] += 1;
                w[self.gate_index[&gm]] -= 1;
            }
            Gen::Long(k, a, b) => {
                w[self.gate_index[&(k, a, b)]] += 1;
                w[self.gate_index[&(k, b, a)]] += 1;
            }
            Gen::Thread(g0, g1) => {
                w[self.gate_index[&g0]] += 1;
                w[self.gate_index[&g1]] -= 1;
            }
        }
        w
    }

    pub fn weight_matrix(&self) -> Vec<IVec> {
        self.basis.iter().map(|&g| self.weights_of(g)).collect()
    }

    pub fn weight(&self, v: &[i64]) -> IVec {
        let mut w = vec![0; self.gates.len()];
        for (i, &c) in v.iter().enumerate() {
            if c != 0 {
                for (a, b) in w.iter_mut().zip(self.weights_of(self.basis[i])) {
                    *a += c * b;
                }
            }
        }
        w
    }

    pub fn short_count(&self) -> usize {
        12 * self.t
    }

    /// Counts of (long, thread in, thread out, short head, short tail) at each gate.
    pub fn incidence(&self) -> Vec<[usize; 5]> {
        let mut out = vec![[0usize; 5]; self.gates.len()];
        for &(k, a, b) in self.gates.iter().filter(|g| g.1 < g.2) {
            out[self.gate_index[&(k, a, b)]][0] += 1;
            out[self.gate_index[&(k, b, a)]][0] += 1;
        }
        for &(g0, g1, _) in &self.threads {
            out[self.gate_index[&g1]][1] += 1;
            out[self.gate_index[&g0]][2] += 1;
        }
        for (gp, gm) in self.short_ends.values() {
            out[self.gate_index[gp]][3] += 1;
            out[self.gate_index[gm]][4] += 1;
        }
        out
    }
}

pub fn build_atlas(g: &GluingData) -> Result<EdgeAtlas> {
    g.validate()?;
    let t = g.num_tetrahedra;
    let mut gates = Vec::new();
    for k in 0..t {
        for p in 0..4 {
            for e in 0..4 {
                if p != e {
                    gates.push((k, p, e));
                }
            }
        }
    }
    let gate_index: BTreeMap<Gate, usize> = gates.iter().enumerate().map(|(i, &g)| (g, i)).collect();
    let mut basis = Vec::new();
    let mut short_ends = BTreeMap::new();
    for k in 0..t {
        for &(p, e) in &SHORT_ORDER {
            basis.push(Gen::Short(k, p, e));
            let rest: Vec<usize> = (0..4).filter(|&v| v != p && v != e).collect();
            let (mut x, mut y) = (rest[0], rest[1]);
            if odd([p, e, x, y]) {
                std::mem::swap(&mut x, &mut y);
            }
            short_ends.insert((k, p, e), ((k, p, x), (k, p, y)));
        }
        for &(a, b) in &LONG_ORDER {
            basis.push(Gen::Long(k, a, b));
        }
    }
    let mut atlas = EdgeAtlas {
        t,
        gluing: g.clone(),
        gates,
        gate_index,
        short_ends,
        threads: Vec::new(),
        thread_out: BTreeMap::new(),
        thread_in: BTreeMap::new(),
        short_plus_at: BTreeMap::new(),
        short_minus_at: BTreeMap::new(),
        basis,
        index: BTreeMap::new(),
    };
    let mut threads = Vec::new();
    for (&x, &(_, gm)) in &atlas.short_ends {
        let target = atlas.glue(gm, x.2);
        let xb = atlas.partner(x);
        if atlas.short_ends[&xb].0 != target {
            return Err(Error::InconsistentThreads(format!(
                "thread from {} does not end at the head of a_{}",
                gate_str(gm),
                gate_str(xb)
            )));
        }
        threads.push((gm, target, x));
    }
    threads.sort();
    for &(g0, g1, _) in &threads {
        let th = Gen::Thread(g0, g1);
        if atlas.thread_out.insert(g0, th).is_some() || atlas.thread_in.insert(g1, th).is_some() {
            return Err(Error::InconsistentThreads(format!("two threads share gate {}", gate_str(g0))));
        }
        atlas.basis.push(th);
    }
    for (&(k, p, e), &(gp, gm)) in &atlas.short_ends {
        atlas.short_plus_at.insert(gp, Gen::Short(k, p, e));
        atlas.short_minus_at.insert(gm, Gen::Short(k, p, e));
    }
    atlas.threads = threads;
    atlas.index = atlas.basis.iter().enumerate().map(|(i, &g)| (g, i)).collect();
    if atlas.incidence().iter().any(|c| *c != [1; 5]) {
        return Err(Error::InconsistentThreads("gate incidence is not uniform".into()));
    }
    Ok(atlas)
}

/// Adds `v` to Ω′(x, y) and `-v` to Ω′(y, x).
fn bump(o: &mut [Vec<i64>], i: usize, j: usize, v: i64) {
    o[i][j] += v;
    o[j][i] -= v;
}

pub fn assemble_omega_prime(atlas: &EdgeAtlas) -> SkewLattice {
    let n = atlas.rank();
    let mut o = vec![vec![0; n]; n];
    let tet = omega_tet();
    for k in 0..atlas.t {
        for i in 0..18 {
            for j in 0..18 {
                o[18 * k + i][18 * k + j] = tet[i][j];
            }
        }
    }
    let ix = |g: &Gen| atlas.index[g];
    for &g in &atlas.gates {
        let tout = ix(&atlas.thread_out[&g]);
        let tin = ix(&atlas.thread_in[&g]);
        let sm = ix(&atlas.short_minus_at[&g]);
        let sp = ix(&atlas.short_plus_at[&g]);
        let lg = ix(&atlas.long_at(g));
        bump(&mut o, tout, sm, -1);
        bump(&mut o, tout, sp, -1);
        bump(&mut o, tin, sm, 1);
        bump(&mut o, tin, sp, 1);
        if tout != tin {
            bump(&mut o, tout, tin, 1);
        }
        bump(&mut o, tout, lg, -1);
        bump(&mut o, tin, lg, -1);
    }
    SkewLattice::new(o, atlas.basis.iter().map(|g| g.name()).collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct GluingGenerator {
    pub terms: Vec<(Gen, i64)>,
    /// Character value as a power of `q^(1/2)`.
    pub chi_half: i64,
}

pub fn build_gluing_sublattice(atlas: &EdgeAtlas, omega: &SkewLattice) -> Result<(Sublattice, Vec<GluingGenerator>)> {
    let mut gens = Vec::new();
    let mut seen = BTreeSet::new();
    for &(_, _, x) in &atlas.threads {
        let xb = atlas.partner(x);
        let key = (x.min(xb), x.max(xb));
        if !seen.insert(key) {
            continue;
        }
        let thx = atlas.thread_out[&atlas.short_ends[&x].1];
        let thxb = atlas.thread_out[&atlas.short_ends[&xb].1];
        gens.push(GluingGenerator {
            terms: vec![(Gen::Short(x.0, x.1, x.2), 1), (thx, 1), (Gen::Short(xb.0, xb.1, xb.2), 1), (thxb, 1)],
            chi_half: -4,
        });
    }
    let mut seen_faces = BTreeSet::new();
    for k in 0..atlas.t {
        for i in 0..4 {
            let k2 = atlas.gluing.neighbors[k][i];
            let s = atlas.gluing.gluings[k][i];
            if seen_faces.contains(&(k2, s[i])) {
                continue;
            }
            seen_faces.insert((k, i));
            let verts: Vec<usize> = (0..4).filter(|&v| v != i).collect();
            for a in 0..3 {
                for b in a + 1..3 {
                    let (p1, p2) = (verts[a], verts[b]);
                    let e = Gen::Long(k, p1, p2);
                    let f = Gen::Long(k2, s[p1].min(s[p2]), s[p1].max(s[p2]));
                    let ends = [(k, p1, p2), (k, p2, p1)];
                    let mut th_e = None;
                    let mut th_f = None;
                    for &(g0, g1, x) in &atlas.threads {
                        let other = (atlas.gluing.neighbors[x.0][x.2], atlas.gluing.gluings[x.0][x.2][x.2]);
                        let leaves = (x.0, x.2) == (k, i) && ends.contains(&g0);
                        let arrives = other == (k, i) && ends.contains(&g1);
                        if leaves || arrives {
                            if ends.contains(&g1) {
                                th_e = Some(Gen::Thread(g0, g1));
                            } else {
                                th_f = Some(Gen::Thread(g0, g1));
                            }
                        }
                    }
                    let (Some(te), Some(tf)) = (th_e, th_f) else {
                        return Err(Error::GluingChecksFailed(format!("no thread pair for {} ~ {}", e.name(), f.name())));
                    };
                    gens.push(GluingGenerator { terms: vec![(e, 1), (te, 1), (f, -1), (tf, -1)], chi_half: 0 });
                }
            }
        }
    }
    let vecs: Vec<IVec> = gens.iter().map(|g| atlas.vec(&g.terms)).collect();
    for (g, v) in gens.iter().zip(&vecs) {
        if atlas.weight(v).iter().any(|&x| x != 0) {
            return Err(Error::GluingChecksFailed(format!("{} has nonzero weight", render_terms(&g.terms))));
        }
    }
    let sub = Sublattice::new(atlas.rank(), vecs)?;
    let c = sub.checks(omega);
    if !c.unimodular || !c.in_kernel {
        return Err(Error::GluingChecksFailed(format!("unimodular={} in_kernel={}", c.unimodular, c.in_kernel)));
    }
    Ok((sub, gens))
}

pub fn render_terms(terms: &[(Gen, i64)]) -> String {
    let mut s = String::new();
    for (i, (g, c)) in terms.iter().enumerate() {
        let sign = if *c < 0 { " - " } else if i > 0 { " + " } else { "" };
        s.push_str(sign);
        if c.abs() != 1 {
            s.push_str(&format!("{}", c.abs()));
        }
        s.push_str(&g.name());
    }
    s
}

/// The cluster chart `W_△` on `Λ′/Γ_gluing`.
#[derive(Clone, Debug)]
pub struct ChartPresentation {
    pub atlas: EdgeAtlas,
    pub omega_prime: SkewLattice,
    pub lambda_prime: Arc<QuantumTorus>,
    pub gluing: Sublattice,
    pub gluing_gens: Vec<GluingGenerator>,
    pub quotient: CharacterQuotient,
    pub names: BTreeMap<String, IVec>,
}

impl ChartPresentation {
    pub fn torus(&self) -> &Arc<QuantumTorus> {
        &self.quotient.target
    }

    pub fn rank(&self) -> usize {
        self.quotient.target.rank()
    }

    pub fn splitting(&self) -> &Splitting {
        &self.quotient.splitting
    }
}

pub fn build_chart(g: &GluingData) -> Result<ChartPresentation> {
    let atlas = build_atlas(g)?;
    let omega = assemble_omega_prime(&atlas);
    let (gluing, gluing_gens) = build_gluing_sublattice(&atlas, &omega)?;
    let lp = QuantumTorus::new(omega.clone(), atlas.weight_matrix(), atlas.gates.len())?;
    let chi: Vec<QCoeff> = gluing_gens.iter().map(|g| QCoeff::q_half(g.chi_half)).collect();
    let quotient = central_character_quotient(&lp, &gluing, chi)?;
    let names = atlas
        .basis
        .iter()
        .map(|g| (g.name(), quotient.splitting.project(&atlas.unit(*g))))
        .collect();
    Ok(ChartPresentation { atlas, omega_prime: omega, lambda_prime: lp, gluing, gluing_gens, quotient, names })
}
