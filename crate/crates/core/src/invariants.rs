//! The gate-invariant subtorus of a chart and its named generators:
//! meridian, longitude, puncture monodromies, thread monodromies and
//! skeletal variables.

use crate::error::{Error, Result};
use crate::lattice::{add_scaled, kernel, smith_normal_form, solve_with, IMat, IVec, SkewLattice, Snf};
use crate::qtorus::ordering_exponent;
use crate::triangulation::{ChartPresentation, EdgeAtlas, Gate, Gen, Peripheral};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Meridian,
    Longitude,
    Puncture,
    Thread,
    Skeletal,
}

/// A generator `q^{q_half/2} X^{f_1} ⋯ X^{f_n}` of the invariant chart.
#[derive(Clone, Debug, Serialize)]
pub struct NamedGen {
    pub name: String,
    pub family: Family,
    /// Factors in product order.
    pub factors: Vec<(Gen, i64)>,
    pub q_half: i64,
    /// Sum of the factors in Λ′.
    #[serde(skip)]
    pub lift: IVec,
    /// Image in the chart lattice `Λ′/Γ`.
    #[serde(skip)]
    pub class: IVec,
    /// The generator equals `q^{shift/2} X^{class}` in the Weyl basis of the chart.
    pub shift: i64,
    /// Specialised value `q^{value/2}` for puncture and thread monodromies.
    pub value: Option<i64>,
}

impl NamedGen {
    pub fn from_factors(
        chart: &ChartPresentation,
        name: &str,
        family: Family,
        factors: Vec<(Gen, i64)>,
        q_half: i64,
    ) -> Result<Self> {
        let at = &chart.atlas;
        let fs: Vec<IVec> = factors.iter().map(|&(g, e)| at.try_vec(&[(g, e)])).collect::<Result<_>>()?;
        let s = ordering_exponent(&chart.omega_prime, &fs);
        let mut lift = vec![0; at.rank()];
        for f in &fs {
            add_scaled(&mut lift, f, 1);
        }
        let (chi, class) = chart.quotient.reduce_vec(&lift);
        let (k, sign) = chi.as_unit().ok_or_else(|| Error::NotAUnit(chi.to_string()))?;
        if sign < 0 {
            return Err(Error::NotAUnit(chi.to_string()));
        }
        Ok(Self { name: name.to_string(), family, factors, q_half, lift, class, shift: q_half + s + k, value: None })
    }

    /// The Weyl-normalised monomial on a Λ′ vector, factors in basis order.
    pub fn weyl(chart: &ChartPresentation, name: &str, family: Family, lift: &[i64]) -> Result<Self> {
        let factors: Vec<(Gen, i64)> = lift
            .iter()
            .enumerate()
            .filter(|x| *x.1 != 0)
            .map(|(i, &e)| (chart.atlas.basis[i], e))
            .collect();
        let g = Self::from_factors(chart, name, family, factors.clone(), 0)?;
        Self::from_factors(chart, name, family, factors, -g.shift)
    }

    pub fn from_peripheral(chart: &ChartPresentation, name: &str, family: Family, p: &Peripheral) -> Result<Self> {
        let factors = p.factors()?.into_iter().map(|(g, e)| Ok((Gen::parse(&g)?, e))).collect::<Result<Vec<_>>>()?;
        Self::from_factors(chart, name, family, factors, p.q_half)
    }

    pub fn degree(&self) -> i64 {
        self.factors.iter().map(|f| f.1.abs()).sum()
    }
}

/// Basis of the weight-zero sublattice of the chart, with the restricted pairing.
pub fn invariant_sublattice(chart: &ChartPresentation) -> (Vec<IVec>, SkewLattice) {
    let t = chart.torus();
    let w = IMat::from_rows(&t.weights, t.gates).transpose();
    let basis = kernel(&w);
    let omega = basis.iter().map(|a| basis.iter().map(|b| t.omega(a, b)).collect()).collect();
    let names = (0..basis.len()).map(|i| format!("b{i}")).collect();
    (basis, SkewLattice::new(omega, names))
}

/// `ε_{kp} = Σ_{e≠p} a_{kpe}`, one per tetrahedron vertex.
pub fn puncture_monodromies(atlas: &EdgeAtlas) -> Vec<(String, Vec<(Gen, i64)>)> {
    let mut out = Vec::new();
    for k in 0..atlas.t {
        for p in 0..4 {
            let terms = (0..4).filter(|&e| e != p).map(|e| (Gen::Short(k, p, e), 1)).collect();
            out.push((format!("e_{k}{p}"), terms));
        }
    }
    out
}

/// Cycles of the thread permutation on gates, listed so that each cycle is
/// followed by the one through the opposite ends of its long edges.
pub fn thread_cycles(atlas: &EdgeAtlas) -> Result<Vec<Vec<Gen>>> {
    let mut owner: BTreeMap<Gate, usize> = BTreeMap::new();
    let mut cycles: Vec<Vec<Gen>> = Vec::new();
    for &g0 in &atlas.gates {
        if owner.contains_key(&g0) {
            continue;
        }
        let mut c = Vec::new();
        let mut x = g0;
        loop {
            if owner.insert(x, cycles.len()).is_some() {
                return Err(Error::CycleWalkFailed(format!("gate {x:?} revisited")));
            }
            let th = *atlas
                .thread_out
                .get(&x)
                .ok_or_else(|| Error::CycleWalkFailed(format!("no thread leaves {x:?}")))?;
            c.push(th);
            let Gen::Thread(_, next) = th else { unreachable!() };
            x = next;
            if x == g0 {
                break;
            }
            if c.len() > atlas.gates.len() {
                return Err(Error::CycleWalkFailed("walk does not close".into()));
            }
        }
        cycles.push(c);
    }
    let partner = |c: &[Gen]| -> Result<usize> {
        let ps: BTreeSet<usize> = c
            .iter()
            .map(|th| {
                let Gen::Thread((k, p, e), _) = *th else { unreachable!() };
                owner[&(k, e, p)]
            })
            .collect();
        if ps.len() != 1 {
            return Err(Error::CycleWalkFailed("opposite gates lie on several cycles".into()));
        }
        Ok(*ps.iter().next().unwrap())
    };
    let mut order = Vec::new();
    let mut placed = vec![false; cycles.len()];
    for i in 0..cycles.len() {
        if placed[i] {
            continue;
        }
        let j = partner(&cycles[i])?;
        if partner(&cycles[j])? != i {
            return Err(Error::CycleWalkFailed("cycle pairing is not an involution".into()));
        }
        placed[i] = true;
        order.push(i);
        if j != i {
            placed[j] = true;
            order.push(j);
        }
    }
    Ok(order.into_iter().map(|i| cycles[i].clone()).collect())
}

/// One Weyl-normalised monomial per thread cycle, valued at `q^{|r|/2}`.
pub fn thread_monodromies(chart: &ChartPresentation) -> Result<Vec<NamedGen>> {
    let mut out = Vec::new();
    for (i, c) in thread_cycles(&chart.atlas)?.into_iter().enumerate() {
        let terms: Vec<(Gen, i64)> = c.iter().map(|&g| (g, 1)).collect();
        let probe = NamedGen::from_factors(chart, "", Family::Thread, terms.clone(), 0)?;
        let mut g = NamedGen::from_factors(chart, &format!("r_{}", i + 1), Family::Thread, terms, -probe.shift)?;
        g.value = Some(c.len() as i64);
        out.push(g);
    }
    Ok(out)
}

/// Classes of long edges under the gluing, each sorted, listed by least member.
pub fn long_edge_classes(chart: &ChartPresentation) -> Vec<Vec<Gen>> {
    let longs: Vec<Gen> = chart.atlas.basis.iter().copied().filter(|g| matches!(g, Gen::Long(..))).collect();
    let mut parent: BTreeMap<Gen, Gen> = longs.iter().map(|&g| (g, g)).collect();
    fn find(p: &mut BTreeMap<Gen, Gen>, x: Gen) -> Gen {
        let y = p[&x];
        if y == x {
            return x;
        }
        let r = find(p, y);
        p.insert(x, r);
        r
    }
    for gg in &chart.gluing_gens {
        if let [(a @ Gen::Long(..), _), _, (b @ Gen::Long(..), _), _] = gg.terms[..] {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent.insert(ra.max(rb), ra.min(rb));
            }
        }
    }
    let mut classes: BTreeMap<Gen, Vec<Gen>> = BTreeMap::new();
    for &g in &longs {
        let r = find(&mut parent, g);
        classes.entry(r).or_default().push(g);
    }
    classes.into_values().collect()
}

/// `Y_j`: weight-zero lifts of `A_ref − A_{c_j}` over the long-edge classes,
/// corrected by threads and short edges.
pub fn skeletal_variables(chart: &ChartPresentation) -> Result<Vec<NamedGen>> {
    let at = &chart.atlas;
    let classes = long_edge_classes(chart);
    if at.t < 2 || classes.len() < 2 {
        return Ok(Vec::new());
    }
    let correctors: Vec<IVec> = at
        .basis
        .iter()
        .filter(|g| !matches!(g, Gen::Long(..)))
        .map(|&g| at.unit(g))
        .collect();
    let a_ref = at.unit(classes[0][0]);
    let mut out = Vec::new();
    for (j, c) in classes[1..].iter().enumerate() {
        let mut target = a_ref.clone();
        add_scaled(&mut target, &at.unit(c[0]), -1);
        let x = crate::lattice::weight_zero_lift(&target, &correctors, |v| at.weight(v))?;
        for (xi, corr) in x.iter().zip(&correctors) {
            add_scaled(&mut target, corr, *xi);
        }
        out.push(NamedGen::weyl(chart, &format!("Y_{}", j + 1), Family::Skeletal, &target)?);
    }
    Ok(out)
}

/// The invariant subtorus with a chosen generating set.
#[derive(Clone, Debug)]
pub struct InvariantChart {
    pub chart: ChartPresentation,
    /// Basis of Λ_inv in chart coordinates.
    pub basis: Vec<IVec>,
    pub lattice: SkewLattice,
    pub generators: Vec<NamedGen>,
}

impl InvariantChart {
    /// Meridian and longitude from the input, then derived monodromies and skeletal variables.
    pub fn build(chart: &ChartPresentation) -> Result<Self> {
        let g = &chart.atlas.gluing;
        let (Some(m), Some(l)) = (&g.meridian, &g.longitude) else {
            return Err(Error::MalformedInput("meridian and longitude are required".into()));
        };
        let mut gens = vec![
            NamedGen::from_peripheral(chart, "M", Family::Meridian, m)?,
            NamedGen::from_peripheral(chart, "L", Family::Longitude, l)?,
        ];
        for (name, terms) in puncture_monodromies(&chart.atlas) {
            let mut e = NamedGen::weyl(chart, &name, Family::Puncture, &chart.atlas.vec(&terms))?;
            e.value = Some(3);
            gens.push(e);
        }
        gens.extend(thread_monodromies(chart)?);
        gens.extend(skeletal_variables(chart)?);
        Self::with_generators(chart, gens)
    }

    pub fn with_generators(chart: &ChartPresentation, generators: Vec<NamedGen>) -> Result<Self> {
        for g in &generators {
            if chart.atlas.weight(&g.lift).iter().any(|&x| x != 0) {
                return Err(Error::NotInvariant(format!("{} has nonzero weight", g.name)));
            }
        }
        let (basis, lattice) = invariant_sublattice(chart);
        Ok(Self { chart: chart.clone(), basis, lattice, generators })
    }

    pub fn get(&self, name: &str) -> Option<&NamedGen> {
        self.generators.iter().find(|g| g.name == name)
    }

    pub fn of_family(&self, f: Family) -> impl Iterator<Item = &NamedGen> {
        self.generators.iter().filter(move |g| g.family == f)
    }

    pub fn omega(&self, a: &NamedGen, b: &NamedGen) -> i64 {
        self.chart.torus().omega(&a.class, &b.class)
    }
}

/// Whether the generator classes span Λ_inv over the integers.
pub fn verify_generation(inv: &InvariantChart) -> bool {
    let n = inv.chart.rank();
    let rows: Vec<IVec> = inv.generators.iter().map(|g| g.class.clone()).collect();
    if rows.is_empty() {
        return inv.basis.is_empty();
    }
    let snf = smith_normal_form(&IMat::from_rows(&rows, n));
    snf.rank() == inv.basis.len() && snf.diagonal().iter().all(|d| d.abs() <= 1)
}

/// Pairings `ω(g, h)` among named generators: `g h = q^{ω(g,h)} h g`.
#[derive(Clone, Debug, Serialize)]
pub struct CommutationTable {
    pub names: Vec<String>,
    pub omega: Vec<Vec<i64>>,
}

pub fn commutation_table(inv: &InvariantChart) -> CommutationTable {
    let gs = &inv.generators;
    CommutationTable {
        names: gs.iter().map(|g| g.name.clone()).collect(),
        omega: gs.iter().map(|a| gs.iter().map(|b| inv.omega(a, b)).collect()).collect(),
    }
}

impl CommutationTable {
    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Nonzero pairs `(g, h, e)` with `i < j`, where `g h = q^{e·scale} h g`
    /// and `e = ω(g,h)/scale`; pairs whose pairing is not divisible are kept
    /// unscaled.
    pub fn relations(&self, scale: i64) -> Vec<(String, String, i64)> {
        let mut out = Vec::new();
        for i in 0..self.names.len() {
            for j in i + 1..self.names.len() {
                let w = self.omega[i][j];
                if w != 0 {
                    let e = if w % scale == 0 { w / scale } else { w };
                    out.push((self.names[i].clone(), self.names[j].clone(), e));
                }
            }
        }
        out
    }

    pub fn render(&self, scale: i64) -> Vec<String> {
        self.relations(scale)
            .into_iter()
            .map(|(g, h, e)| match e {
                1 => format!("{g} {h} = q {h} {g}"),
                _ => format!("{g} {h} = q^{{{e}}} {h} {g}"),
            })
            .collect()
    }
}

/// Coordinates for rewriting chart monomials in a chosen set of independent
/// generators, with puncture monodromies specialised.
#[derive(Clone, Debug)]
pub struct GeneratorBasis {
    /// Indices into `InvariantChart::generators`, excluding punctures.
    pub chosen: Vec<usize>,
    pub punctures: Vec<usize>,
    cols: usize,
    snf: Snf,
}

impl GeneratorBasis {
    /// Greedy choice in generator order of a set independent modulo the puncture span.
    pub fn new(inv: &InvariantChart) -> Result<Self> {
        let n = inv.chart.rank();
        let punctures: Vec<usize> = (0..inv.generators.len())
            .filter(|&i| inv.generators[i].family == Family::Puncture)
            .collect();
        let mut rows: Vec<IVec> = punctures.iter().map(|&i| inv.generators[i].class.clone()).collect();
        let rank_of = |rows: &[IVec]| if rows.is_empty() { 0 } else { smith_normal_form(&IMat::from_rows(rows, n)).rank() };
        let mut r = rank_of(&rows);
        let mut chosen = Vec::new();
        for (i, g) in inv.generators.iter().enumerate() {
            if g.family == Family::Puncture {
                continue;
            }
            rows.push(g.class.clone());
            let r2 = rank_of(&rows);
            if r2 > r {
                chosen.push(i);
                r = r2;
            } else {
                rows.pop();
            }
        }
        let cols: Vec<IVec> = chosen.iter().chain(&punctures).map(|&i| inv.generators[i].class.clone()).collect();
        let m = IMat::from_rows(&cols, n).transpose();
        Ok(Self { chosen, punctures, cols: cols.len(), snf: smith_normal_form(&m) })
    }

    /// Writes `X^{class}` as `q^{k/2}` times the Weyl monomial with exponents
    /// `n` in the chosen generators; returns `(n, k)`.
    pub fn express(&self, inv: &InvariantChart, class: &[i64]) -> Result<(IVec, i64)> {
        let twice: IVec = class.iter().map(|x| 2 * x).collect();
        let x = solve_with(&self.snf, self.cols, &twice)
            .map_err(|_| Error::NotInvariant(format!("{class:?} is not in the generated lattice")))?;
        let nc = self.chosen.len();
        let mut n = vec![0; nc];
        let mut k2 = 0;
        for (a, &i) in self.chosen.iter().enumerate() {
            if x[a] % 2 != 0 {
                return Err(Error::NotInvariant(format!("{class:?} needs half a generator")));
            }
            n[a] = x[a] / 2;
            k2 -= 2 * n[a] * inv.generators[i].shift;
        }
        for (b, &i) in self.punctures.iter().enumerate() {
            let g = &inv.generators[i];
            k2 += x[nc + b] * (g.value.unwrap_or(0) - g.shift);
        }
        if k2 % 2 != 0 {
            return Err(Error::NotInvariant(format!("puncture value of {class:?} is not integral")));
        }
        Ok((n, k2 / 2))
    }

    /// Pairing of the chosen generators.
    pub fn omega(&self, inv: &InvariantChart) -> Vec<Vec<i64>> {
        let g = |i: usize| &inv.generators[i];
        self.chosen.iter().map(|&a| self.chosen.iter().map(|&b| inv.omega(g(a), g(b))).collect()).collect()
    }

    pub fn names(&self, inv: &InvariantChart) -> Vec<String> {
        self.chosen.iter().map(|&i| inv.generators[i].name.clone()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::triangulation::{build_chart, parse_gluing};

    fn chart(name: &str) -> ChartPresentation {
        let s = std::fs::read_to_string(format!("{}/../../fixtures/{name}.json", env!("CARGO_MANIFEST_DIR"))).unwrap();
        build_chart(&parse_gluing(&s).unwrap()).unwrap()
    }

    #[test]
    fn trefoil_invariants() {
        let ch = chart("trefoil");
        let inv = InvariantChart::build(&ch).unwrap();
        assert_eq!(inv.of_family(Family::Puncture).count(), 8);
        assert_eq!(inv.of_family(Family::Skeletal).count(), 1);
        let degs: Vec<i64> = inv.of_family(Family::Thread).map(|r| r.degree()).collect();
        assert_eq!(degs, vec![2, 2, 10, 10]);
        for g in &inv.generators {
            assert!(inv.chart.torus().weight(&g.class).iter().all(|&x| x == 0), "{}", g.name);
        }
    }

    #[test]
    fn punctures_are_central() {
        let ch = chart("fig8_2tet");
        let inv = InvariantChart::build(&ch).unwrap();
        assert_eq!(inv.of_family(Family::Puncture).count(), 8);
        for e in inv.of_family(Family::Puncture) {
            for b in &inv.basis {
                assert_eq!(ch.torus().omega(&e.class, b), 0);
            }
        }
    }

    #[test]
    fn threads_commute_with_peripherals() {
        let ch = chart("fig8_3tet");
        let inv = InvariantChart::build(&ch).unwrap();
        let m = inv.get("M").unwrap();
        let l = inv.get("L").unwrap();
        let rs: Vec<&NamedGen> = inv.of_family(Family::Thread).collect();
        for r in &rs {
            assert_eq!(inv.omega(r, m), 0);
            assert_eq!(inv.omega(r, l), 0);
            for s in &rs {
                assert_eq!(inv.omega(r, s), 0);
            }
        }
        assert_eq!(inv.of_family(Family::Skeletal).count(), 2);
    }

    #[test]
    fn generation_fails_without_longitude() {
        let ch = chart("fig8_2tet");
        let mut inv = InvariantChart::build(&ch).unwrap();
        inv.generators.retain(|g| g.name != "L");
        assert!(!verify_generation(&inv));
    }
}
