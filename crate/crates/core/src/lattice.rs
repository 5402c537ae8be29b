//! Integer lattices, skew pairings and Smith normal form.

use crate::error::{Error, Result};
use serde::Serialize;

pub type IVec = Vec<i64>;

/// Dense integer matrix, row major.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<i128>,
}

impl IMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1;
        }
        m
    }

    pub fn from_rows(rows: &[IVec], cols: usize) -> Self {
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols);
            for (j, &x) in r.iter().enumerate() {
                m[(i, j)] = x as i128;
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul(&self, o: &IMat) -> IMat {
        assert_eq!(self.cols, o.rows);
        let mut out = IMat::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0 {
                    continue;
                }
                for j in 0..o.cols {
                    let b = o[(k, j)];
                    if b != 0 {
                        out[(i, j)] = chk_add(out[(i, j)], chk_mul(a, b));
                    }
                }
            }
        }
        out
    }

    pub fn row(&self, i: usize) -> IVec {
        (0..self.cols).map(|j| to_i64(self[(i, j)])).collect()
    }

    pub fn col(&self, j: usize) -> IVec {
        (0..self.rows).map(|i| to_i64(self[(i, j)])).collect()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for i in 0..self.rows {
                self.data.swap(i * self.cols + a, i * self.cols + b);
            }
        }
    }

    /// row[dst] += c * row[src]
    fn add_row(&mut self, dst: usize, src: usize, c: i128) {
        if c == 0 {
            return;
        }
        for j in 0..self.cols {
            let s = self[(src, j)];
            if s != 0 {
                self[(dst, j)] = chk_add(self[(dst, j)], chk_mul(c, s));
            }
        }
    }

    fn add_col(&mut self, dst: usize, src: usize, c: i128) {
        if c == 0 {
            return;
        }
        for i in 0..self.rows {
            let s = self[(i, src)];
            if s != 0 {
                self[(i, dst)] = chk_add(self[(i, dst)], chk_mul(c, s));
            }
        }
    }

    fn neg_row(&mut self, i: usize) {
        for j in 0..self.cols {
            self[(i, j)] = -self[(i, j)];
        }
    }
}

impl std::ops::Index<(usize, usize)> for IMat {
    type Output = i128;
    fn index(&self, (i, j): (usize, usize)) -> &i128 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut i128 {
        &mut self.data[i * self.cols + j]
    }
}

fn chk_add(a: i128, b: i128) -> i128 {
    a.checked_add(b).expect("integer overflow in lattice arithmetic")
}

fn chk_mul(a: i128, b: i128) -> i128 {
    a.checked_mul(b).expect("integer overflow in lattice arithmetic")
}

fn to_i64(x: i128) -> i64 {
    i64::try_from(x).expect("lattice entry exceeds i64")
}

pub fn dot(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn add_scaled(a: &mut [i64], b: &[i64], c: i64) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += c * y;
    }
}

/// `u * m * v = d` with `u`, `v` unimodular and `d` diagonal,
/// each diagonal entry dividing the next.
#[derive(Clone, Debug)]
pub struct Snf {
    pub u: IMat,
    pub d: IMat,
    pub v: IMat,
    /// Inverse of `v`, tracked alongside it.
    pub v_inv: IMat,
}

impl Snf {
    pub fn diagonal(&self) -> Vec<i128> {
        (0..self.d.rows.min(self.d.cols)).map(|i| self.d[(i, i)]).collect()
    }

    pub fn rank(&self) -> usize {
        self.diagonal().iter().filter(|&&x| x != 0).count()
    }

    pub fn verify(&self, m: &IMat) -> bool {
        if self.u.mul(m).mul(&self.v) != self.d {
            return false;
        }
        if self.v.mul(&self.v_inv) != IMat::identity(self.v.rows) {
            return false;
        }
        let diag = self.diagonal();
        for i in 0..self.d.rows {
            for j in 0..self.d.cols {
                if i != j && self.d[(i, j)] != 0 {
                    return false;
                }
            }
        }
        for w in diag.windows(2) {
            if w[0] == 0 && w[1] != 0 {
                return false;
            }
            if w[0] != 0 && w[1] % w[0] != 0 {
                return false;
            }
        }
        diag.iter().all(|&x| x >= 0)
    }
}

pub fn smith_normal_form(m: &IMat) -> Snf {
    let (r, c) = (m.rows, m.cols);
    let mut d = m.clone();
    let mut u = IMat::identity(r);
    let mut v = IMat::identity(c);
    let mut vi = IMat::identity(c);
    let col_op = |d: &mut IMat, v: &mut IMat, vi: &mut IMat, dst: usize, src: usize, k: i128| {
        d.add_col(dst, src, k);
        v.add_col(dst, src, k);
        vi.add_row(src, dst, -k);
    };
    let col_swap = |d: &mut IMat, v: &mut IMat, vi: &mut IMat, a: usize, b: usize| {
        d.swap_cols(a, b);
        v.swap_cols(a, b);
        vi.swap_rows(a, b);
    };
    let n = r.min(c);
    let mut t = 0;
    while t < n {
        // smallest nonzero magnitude in the trailing block
        let mut best: Option<(i128, usize, usize)> = None;
        for i in t..r {
            for j in t..c {
                let x = d[(i, j)].abs();
                if x != 0 && best.map_or(true, |(b, _, _)| x < b) {
                    best = Some((x, i, j));
                }
            }
        }
        let Some((_, pi, pj)) = best else { break };
        d.swap_rows(t, pi);
        u.swap_rows(t, pi);
        col_swap(&mut d, &mut v, &mut vi, t, pj);
        loop {
            let p = d[(t, t)];
            let mut dirty = false;
            for i in t + 1..r {
                let x = d[(i, t)];
                if x != 0 {
                    let k = x.div_euclid(p);
                    d.add_row(i, t, -k);
                    u.add_row(i, t, -k);
                    if d[(i, t)] != 0 {
                        dirty = true;
                    }
                }
            }
            for j in t + 1..c {
                let x = d[(t, j)];
                if x != 0 {
                    let k = x.div_euclid(p);
                    col_op(&mut d, &mut v, &mut vi, j, t, -k);
                    if d[(t, j)] != 0 {
                        dirty = true;
                    }
                }
            }
            if dirty {
                // move the smallest remainder in row/col t into the pivot
                let mut best = (d[(t, t)].abs(), t, t);
                for i in t + 1..r {
                    let x = d[(i, t)].abs();
                    if x != 0 && x < best.0 {
                        best = (x, i, t);
                    }
                }
                for j in t + 1..c {
                    let x = d[(t, j)].abs();
                    if x != 0 && x < best.0 {
                        best = (x, t, j);
                    }
                }
                if best.1 != t {
                    d.swap_rows(t, best.1);
                    u.swap_rows(t, best.1);
                }
                if best.2 != t {
                    col_swap(&mut d, &mut v, &mut vi, t, best.2);
                }
                continue;
            }
            // divisibility of the trailing block
            let mut bad = None;
            'outer: for i in t + 1..r {
                for j in t + 1..c {
                    if d[(i, j)] % p != 0 {
                        bad = Some(i);
                        break 'outer;
                    }
                }
            }
            match bad {
                Some(i) => {
                    d.add_row(t, i, 1);
                    u.add_row(t, i, 1);
                }
                None => break,
            }
        }
        if d[(t, t)] < 0 {
            d.neg_row(t);
            u.neg_row(t);
        }
        t += 1;
    }
    let s = Snf { u, d, v, v_inv: vi };
    debug_assert!(s.verify(m), "SNF postcondition");
    s
}

/// Integer basis of `{x : m x = 0}`.
pub fn kernel(m: &IMat) -> Vec<IVec> {
    let s = smith_normal_form(m);
    let rk = s.rank();
    (rk..m.cols).map(|j| s.v.col(j)).collect()
}

/// Integer solution of `m x = b`.
pub fn solve(m: &IMat, b: &[i64]) -> Result<IVec> {
    if b.len() != m.rows {
        return Err(Error::DimensionMismatch { expected: m.rows, got: b.len() });
    }
    let s = smith_normal_form(m);
    solve_with(&s, m.cols, b)
}

pub fn solve_with(s: &Snf, cols: usize, b: &[i64]) -> Result<IVec> {
    let rows = s.u.rows;
    let ub: Vec<i128> = (0..rows)
        .map(|i| (0..rows).map(|k| s.u[(i, k)] * b[k] as i128).sum())
        .collect();
    let diag = s.diagonal();
    let mut y = vec![0i128; cols];
    for i in 0..rows {
        let di = if i < diag.len() { diag[i] } else { 0 };
        if di == 0 {
            if ub[i] != 0 {
                return Err(Error::NoSolution);
            }
        } else {
            if ub[i] % di != 0 {
                return Err(Error::NoSolution);
            }
            y[i] = ub[i] / di;
        }
    }
    Ok((0..cols)
        .map(|j| to_i64((0..cols).map(|k| s.v[(j, k)] * y[k]).sum()))
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct SkewLattice {
    pub rank: usize,
    pub omega: Vec<Vec<i64>>,
    pub basis_names: Vec<String>,
}

impl SkewLattice {
    pub fn new(omega: Vec<Vec<i64>>, basis_names: Vec<String>) -> Self {
        let rank = omega.len();
        debug_assert!(omega.iter().all(|r| r.len() == rank));
        Self { rank, omega, basis_names }
    }

    pub fn is_skew(&self) -> bool {
        (0..self.rank).all(|i| (0..self.rank).all(|j| self.omega[i][j] == -self.omega[j][i]))
    }

    pub fn pairing(&self, v: &[i64], w: &[i64]) -> Result<i64> {
        for x in [v, w] {
            if x.len() != self.rank {
                return Err(Error::DimensionMismatch { expected: self.rank, got: x.len() });
            }
        }
        Ok(self.pair(v, w))
    }

    /// Unchecked pairing.
    pub fn pair(&self, v: &[i64], w: &[i64]) -> i64 {
        let mut s = 0;
        for (i, &a) in v.iter().enumerate() {
            if a != 0 {
                s += a * dot(&self.omega[i], w);
            }
        }
        s
    }

    pub fn omega_times(&self, v: &[i64]) -> IVec {
        (0..self.rank).map(|i| dot(&self.omega[i], v)).collect()
    }

    pub fn unit(&self, i: usize) -> IVec {
        let mut v = vec![0; self.rank];
        v[i] = 1;
        v
    }
}

#[derive(Clone, Debug)]
pub struct Sublattice {
    pub ambient_rank: usize,
    pub generators: Vec<IVec>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SublatticeChecks {
    pub unimodular: bool,
    pub in_kernel: bool,
}

impl Sublattice {
    pub fn new(ambient_rank: usize, generators: Vec<IVec>) -> Result<Self> {
        for g in &generators {
            if g.len() != ambient_rank {
                return Err(Error::DimensionMismatch { expected: ambient_rank, got: g.len() });
            }
        }
        Ok(Self { ambient_rank, generators })
    }

    pub fn matrix(&self) -> IMat {
        IMat::from_rows(&self.generators, self.ambient_rank)
    }

    pub fn is_independent(&self) -> bool {
        smith_normal_form(&self.matrix()).rank() == self.generators.len()
    }

    /// Torsion-free quotient and independent generators.
    pub fn is_unimodular(&self) -> bool {
        let s = smith_normal_form(&self.matrix());
        s.rank() == self.generators.len() && s.diagonal().iter().all(|&x| x == 1)
    }

    pub fn checks(&self, l: &SkewLattice) -> SublatticeChecks {
        SublatticeChecks {
            unimodular: self.is_unimodular(),
            in_kernel: self.generators.iter().all(|g| l.omega_times(g).iter().all(|&x| x == 0)),
        }
    }

    pub fn is_isotropic(&self, l: &SkewLattice) -> bool {
        self.generators
            .iter()
            .all(|a| self.generators.iter().all(|b| l.pair(a, b) == 0))
    }
}

pub fn sublattice_checks(g: &Sublattice, l: &SkewLattice) -> SublatticeChecks {
    g.checks(l)
}

/// Decomposition `Z^n = G ⊕ S` for a unimodular sublattice `G`.
#[derive(Clone, Debug)]
pub struct Splitting {
    pub n: usize,
    pub k: usize,
    /// Basis rows: first `k` span `G`, the rest span the section.
    basis: IMat,
    /// Coordinates in `basis` are `v * coord`.
    coord: IMat,
    /// Maps first-`k` basis coordinates to coordinates on the original generators.
    to_gens: IMat,
}

impl Splitting {
    /// Coordinates of `v` as `(G-generator coefficients, quotient coordinates)`.
    pub fn decompose(&self, v: &[i64]) -> (IVec, IVec) {
        let c: Vec<i128> = (0..self.n)
            .map(|j| (0..self.n).map(|i| v[i] as i128 * self.coord[(i, j)]).sum())
            .collect();
        let g: IVec = (0..self.k)
            .map(|j| to_i64((0..self.k).map(|i| c[i] * self.to_gens[(i, j)]).sum()))
            .collect();
        (g, c[self.k..].iter().map(|&x| to_i64(x)).collect())
    }

    pub fn project(&self, v: &[i64]) -> IVec {
        self.decompose(v).1
    }

    pub fn section(&self, w: &[i64]) -> IVec {
        let mut out = vec![0i128; self.n];
        for (a, &x) in w.iter().enumerate() {
            if x != 0 {
                for j in 0..self.n {
                    out[j] += x as i128 * self.basis[(self.k + a, j)];
                }
            }
        }
        out.into_iter().map(to_i64).collect()
    }

    pub fn quotient_rank(&self) -> usize {
        self.n - self.k
    }
}

pub fn split_quotient(l: &SkewLattice, g: &Sublattice) -> Result<(Splitting, SkewLattice)> {
    let n = l.rank;
    let k = g.generators.len();
    let sp = if k == 0 {
        Splitting { n, k, basis: IMat::identity(n), coord: IMat::identity(n), to_gens: IMat::zeros(0, 0) }
    } else {
        let m = g.matrix();
        let s = smith_normal_form(&m);
        if s.rank() != k || s.diagonal().iter().any(|&x| x != 1) {
            return Err(Error::NotUnimodular);
        }
        // u m v = [I 0]  =>  rows of v^{-1} form a basis; the first k equal u m.
        let mut to_gens = IMat::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                to_gens[(i, j)] = s.u[(i, j)];
            }
        }
        Splitting { n, k, basis: s.v_inv.clone(), coord: s.v.clone(), to_gens }
    };
    let r = n - k;
    let sec: Vec<IVec> = (0..r)
        .map(|a| {
            let mut e = vec![0; r];
            e[a] = 1;
            sp.section(&e)
        })
        .collect();
    let omega: Vec<Vec<i64>> = (0..r).map(|a| (0..r).map(|b| l.pair(&sec[a], &sec[b])).collect()).collect();
    let names = (0..r).map(|a| format!("b{a}")).collect();
    Ok((sp, SkewLattice::new(omega, names)))
}

/// Integer combination `c` of `correctors` with `weights(target + Σ c_i corr_i) = 0`.
///
/// `weights` maps a vector to its weight vector. Among solutions, a small
/// sum of absolute coefficients is preferred by a deterministic descent over
/// the kernel basis.
pub fn weight_zero_lift<F>(target: &[i64], correctors: &[IVec], weights: F) -> Result<IVec>
where
    F: Fn(&[i64]) -> IVec,
{
    let wt = weights(target);
    if wt.iter().all(|&x| x == 0) {
        return Ok(vec![0; correctors.len()]);
    }
    let cols: Vec<IVec> = correctors.iter().map(|c| weights(c)).collect();
    let m = wt.len();
    let mut a = IMat::zeros(m, correctors.len());
    for (j, c) in cols.iter().enumerate() {
        for i in 0..m {
            a[(i, j)] = c[i] as i128;
        }
    }
    let rhs: IVec = wt.iter().map(|x| -x).collect();
    let s = smith_normal_form(&a);
    let mut x = solve_with(&s, correctors.len(), &rhs)?;
    let ker: Vec<IVec> = (s.rank()..correctors.len()).map(|j| s.v.col(j)).collect();
    l1_descent(&mut x, &ker);
    Ok(x)
}

/// Greedy L1 reduction of `x` by adding multiples of kernel vectors.
pub fn l1_descent(x: &mut IVec, ker: &[IVec]) {
    let norm = |v: &[i64]| v.iter().map(|a| a.abs()).sum::<i64>();
    loop {
        let mut improved = false;
        for k in ker {
            for sgn in [1i64, -1] {
                loop {
                    let mut y = x.clone();
                    add_scaled(&mut y, k, sgn);
                    if norm(&y) < norm(x) {
                        *x = y;
                        improved = true;
                    } else {
                        break;
                    }
                }
            }
        }
        if !improved {
            break;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn osh() -> SkewLattice {
        SkewLattice::new(vec![vec![0, 1, -1], vec![-1, 0, 1], vec![1, -1, 0]], vec!["e1".into(), "e2".into(), "e3".into()])
    }

    #[test]
    fn pairing_basics() {
        let l = osh();
        assert_eq!(l.pairing(&[1, 0, 0], &[0, 1, 0]).unwrap(), 1);
        assert_eq!(l.pairing(&[0, 1, 0], &[1, 0, 0]).unwrap(), -1);
        assert_eq!(l.pairing(&[2, -1, 3], &[2, -1, 3]).unwrap(), 0);
        assert!(matches!(l.pairing(&[1, 0], &[0, 1, 0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn snf_examples() {
        let s = smith_normal_form(&IMat::identity(3));
        assert_eq!(s.diagonal(), vec![1, 1, 1]);
        let s = smith_normal_form(&IMat::from_rows(&[vec![2, 0], vec![0, 4]], 2));
        assert_eq!(s.diagonal(), vec![2, 4]);
        let m = IMat::from_rows(&[vec![2, 1], vec![0, 3]], 2);
        let s = smith_normal_form(&m);
        assert_eq!(s.diagonal(), vec![1, 6]);
        assert!(s.verify(&m));
    }

    #[test]
    fn sublattice_examples() {
        let z = SkewLattice::new(vec![vec![0]], vec!["x".into()]);
        let g = Sublattice::new(1, vec![vec![2]]).unwrap();
        assert!(!g.checks(&z).unimodular);
        let g = Sublattice::new(3, vec![vec![1, 0, 0]]).unwrap();
        let c = g.checks(&osh());
        assert!(c.unimodular && !c.in_kernel);
    }

    #[test]
    fn split_examples() {
        let l = SkewLattice::new(vec![vec![0, 0], vec![0, 0]], vec!["x".into(), "y".into()]);
        let (sp, q) = split_quotient(&l, &Sublattice::new(2, vec![]).unwrap()).unwrap();
        assert_eq!(sp.project(&[3, -4]), vec![3, -4]);
        assert_eq!(q.rank, 2);
        let (sp, q) = split_quotient(&l, &Sublattice::new(2, vec![vec![1, 1]]).unwrap()).unwrap();
        assert_eq!(q.rank, 1);
        let (g, w) = sp.decompose(&[5, 5]);
        assert_eq!(g, vec![5]);
        assert_eq!(w, vec![0]);
        assert!(matches!(
            split_quotient(&l, &Sublattice::new(2, vec![vec![2, 0]]).unwrap()),
            Err(Error::NotUnimodular)
        ));
    }

    #[test]
    fn lifts() {
        let w = |v: &[i64]| vec![v[0] - v[1]];
        assert_eq!(weight_zero_lift(&[1, 1], &[vec![1, 0]], w).unwrap(), vec![0]);
        let c = weight_zero_lift(&[1, 0], &[vec![0, 1], vec![1, 1]], w).unwrap();
        assert_eq!(c, vec![1, 0]);
        let zero = |_: &[i64]| vec![0i64];
        let w2 = |v: &[i64]| vec![v[0]];
        let _ = zero;
        assert_eq!(weight_zero_lift(&[1, 0], &[vec![0, 1]], w2), Err(Error::NoSolution));
    }

    proptest! {
        #[test]
        fn snf_postcondition(rows in 1usize..6, cols in 1usize..6, seed in prop::collection::vec(-4i64..5, 36)) {
            let r: Vec<IVec> = (0..rows).map(|i| (0..cols).map(|j| seed[i * 6 + j]).collect()).collect();
            let m = IMat::from_rows(&r, cols);
            let s = smith_normal_form(&m);
            prop_assert!(s.verify(&m));
        }

        #[test]
        fn split_recompose(v in prop::collection::vec(-9i64..10, 4)) {
            let l = SkewLattice::new(vec![vec![0; 4]; 4], (0..4).map(|i| format!("x{i}")).collect());
            let g = Sublattice::new(4, vec![vec![1, 2, 0, 1], vec![0, 1, 1, 3]]).unwrap();
            let (sp, _) = split_quotient(&l, &g).unwrap();
            let (gc, w) = sp.decompose(&v);
            let mut back = sp.section(&w);
            for (c, gen) in gc.iter().zip(&g.generators) {
                add_scaled(&mut back, gen, *c);
            }
            prop_assert_eq!(back, v);
        }
    }
}
