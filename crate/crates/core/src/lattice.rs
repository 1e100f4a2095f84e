//! Even lattices, dual lattices, discriminant groups, and the quadratic and
//! bilinear forms they carry mod 1.
//!
//! A lattice is identified with Z^g via its Gram matrix M. The dual lattice
//! is M^{-1} Z^g and the discriminant group L'/L is enumerated through the
//! Smith normal form of M. Coset representatives are canonicalized into
//! [0,1)^g so that equality and hashing are componentwise.

use crate::error::{Error, Result};
use crate::numth;
use rug::{Integer, Rational};

/// Size caps: Shintani sums cost c^g, so desk scale means small lattices.
pub const MAX_RANK: usize = 7;
pub const MAX_ABS_DET: i64 = 10_000;

/// An even lattice with nondegenerate Gram matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvenLattice {
    gram: Vec<Vec<i64>>,
    rank: usize,
    det: i64,
    sig: (u32, u32),
}

/// A coset of L'/L as a canonical rational coordinate vector in [0,1)^g.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DiscElement {
    coords: Vec<Rational>,
}

impl DiscElement {
    fn reduce(mut coords: Vec<Rational>) -> DiscElement {
        for c in coords.iter_mut() {
            let f = c.clone().floor();
            *c -= f;
        }
        DiscElement { coords }
    }

    pub fn coords(&self) -> &[Rational] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| *c == 0)
    }
}

/// The discriminant group L'/L with its cyclic decomposition and a full,
/// canonically ordered enumeration of coset representatives.
#[derive(Clone, Debug)]
pub struct DiscGroup {
    lattice: EvenLattice,
    elementary_divisors: Vec<i64>,
    generators: Vec<DiscElement>,
    elements: Vec<DiscElement>,
}

impl EvenLattice {
    pub fn new(gram: Vec<Vec<i64>>) -> Result<EvenLattice> {
        let g = gram.len();
        if g == 0 {
            return Err(Error::InvalidLattice("empty Gram matrix".into()));
        }
        if g > MAX_RANK {
            return Err(Error::InvalidLattice(format!(
                "rank {g} exceeds cap {MAX_RANK}"
            )));
        }
        for row in &gram {
            if row.len() != g {
                return Err(Error::InvalidLattice("Gram matrix is not square".into()));
            }
        }
        for i in 0..g {
            if gram[i][i] % 2 != 0 {
                return Err(Error::InvalidLattice(format!(
                    "diagonal entry M[{i}][{i}] = {} is odd",
                    gram[i][i]
                )));
            }
            for j in 0..g {
                if gram[i][j] != gram[j][i] {
                    return Err(Error::InvalidLattice("Gram matrix is not symmetric".into()));
                }
            }
        }
        let det_big = det_integer(&gram);
        if det_big == 0 {
            return Err(Error::InvalidLattice("Gram matrix is singular".into()));
        }
        let det = det_big
            .to_i64()
            .filter(|d| d.abs() <= MAX_ABS_DET)
            .ok_or_else(|| {
                Error::InvalidLattice(format!(
                    "determinant {det_big} exceeds cap {MAX_ABS_DET}"
                ))
            })?;
        let sig = signature(&gram);
        debug_assert_eq!(sig.0 + sig.1, g as u32);
        // sign(det) = (-1)^(b-)
        debug_assert_eq!(det.signum(), if sig.1 % 2 == 0 { 1 } else { -1 });
        Ok(EvenLattice {
            gram,
            rank: g,
            det,
            sig,
        })
    }

    pub fn gram(&self) -> &[Vec<i64>] {
        &self.gram
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Determinant of the Gram matrix (signed).
    pub fn det(&self) -> i64 {
        self.det
    }

    /// N with |det| = 2N. The determinant is even whenever the rank is odd.
    pub fn n_half(&self) -> Result<i64> {
        if self.det % 2 != 0 {
            return Err(Error::Domain(format!(
                "determinant {} is odd; N = |det|/2 undefined",
                self.det
            )));
        }
        Ok(self.det.abs() / 2)
    }

    pub fn signature(&self) -> (u32, u32) {
        self.sig
    }

    /// b^- - b^+ as a signed integer.
    pub fn sig_diff(&self) -> i64 {
        self.sig.1 as i64 - self.sig.0 as i64
    }

    /// <x, y> = x^T M y for rational vectors.
    pub fn bilinear_raw(&self, x: &[Rational], y: &[Rational]) -> Rational {
        let mut acc = Rational::new();
        for i in 0..self.rank {
            for j in 0..self.rank {
                if self.gram[i][j] != 0 {
                    acc += Rational::from(&x[i] * &y[j]) * Rational::from(self.gram[i][j]);
                }
            }
        }
        acc
    }

    /// q(x) = 1/2 <x, x>.
    pub fn q_raw(&self, x: &[Rational]) -> Rational {
        self.bilinear_raw(x, x) / Rational::from(2)
    }

    /// Integer vector a = Mx for x in the dual lattice.
    pub fn dual_tag(&self, x: &DiscElement) -> Result<Vec<i64>> {
        let mut a = Vec::with_capacity(self.rank);
        for i in 0..self.rank {
            let mut acc = Rational::new();
            for j in 0..self.rank {
                acc += Rational::from(&x.coords[j]) * Rational::from(self.gram[i][j]);
            }
            if !acc.is_integer() {
                return Err(Error::Domain(format!(
                    "vector is not in the dual lattice (component {i} of Mx = {acc})"
                )));
            }
            a.push(acc.numer().to_i64().ok_or_else(|| {
                Error::Internal("dual tag overflows i64".into())
            })?);
        }
        Ok(a)
    }

    pub fn discriminant_group(&self) -> DiscGroup {
        let g = self.rank;
        let (d, u_inv) = smith_with_uinv(&self.gram);
        let m_inv = invert_rational(&self.gram);
        // generator i: M^{-1} U^{-1} e_i with order d_i
        let mut generators = Vec::new();
        let mut elementary_divisors = Vec::new();
        for i in 0..g {
            let di = d[i].to_i64().expect("elementary divisor fits i64");
            if di.abs() > 1 {
                let col: Vec<Rational> = (0..g)
                    .map(|r| {
                        let mut acc = Rational::new();
                        for s in 0..g {
                            acc += Rational::from(&m_inv[r][s]) * Rational::from(&u_inv[s][i]);
                        }
                        acc
                    })
                    .collect();
                elementary_divisors.push(di.abs());
                generators.push(DiscElement::reduce(col));
            }
        }
        // full enumeration: all combinations of generator multiples
        let mut elements = vec![DiscElement {
            coords: vec![Rational::new(); g],
        }];
        for (gen, &order) in generators.iter().zip(&elementary_divisors) {
            let mut next = Vec::with_capacity(elements.len() * order as usize);
            for e in &elements {
                for k in 0..order {
                    let coords: Vec<Rational> = e
                        .coords
                        .iter()
                        .zip(&gen.coords)
                        .map(|(a, b)| Rational::from(a) + Rational::from(b) * Rational::from(k))
                        .collect();
                    next.push(DiscElement::reduce(coords));
                }
            }
            elements = next;
        }
        elements.sort();
        debug_assert_eq!(elements.len(), self.det.unsigned_abs() as usize);
        DiscGroup {
            lattice: self.clone(),
            elementary_divisors,
            generators,
            elements,
        }
    }
}

impl DiscGroup {
    pub fn lattice(&self) -> &EvenLattice {
        &self.lattice
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elementary_divisors(&self) -> &[i64] {
        &self.elementary_divisors
    }

    pub fn generators(&self) -> &[DiscElement] {
        &self.generators
    }

    /// All coset representatives in canonical (sorted) order.
    pub fn elements(&self) -> &[DiscElement] {
        &self.elements
    }

    /// Position of a canonical element in [`Self::elements`].
    pub fn index_of(&self, e: &DiscElement) -> Result<usize> {
        self.elements
            .binary_search(e)
            .map_err(|_| Error::Domain("element is not in the discriminant group".into()))
    }

    pub fn zero(&self) -> DiscElement {
        DiscElement {
            coords: vec![Rational::new(); self.lattice.rank()],
        }
    }

    /// Canonical element from arbitrary dual-lattice coordinates.
    pub fn element(&self, coords: Vec<Rational>) -> Result<DiscElement> {
        let e = DiscElement::reduce(coords);
        self.lattice.dual_tag(&e)?;
        Ok(e)
    }

    /// Element a/den * e_idx style constructor for rank-1 groups: j/|det|.
    pub fn cyclic_element(&self, j: i64) -> Result<DiscElement> {
        if self.lattice.rank() != 1 {
            return Err(Error::Domain("cyclic_element requires rank 1".into()));
        }
        let d = self.lattice.det();
        self.element(vec![Rational::from((j, d))])
    }

    pub fn add(&self, a: &DiscElement, b: &DiscElement) -> DiscElement {
        DiscElement::reduce(
            a.coords
                .iter()
                .zip(&b.coords)
                .map(|(x, y)| Rational::from(x) + Rational::from(y))
                .collect(),
        )
    }

    pub fn neg(&self, a: &DiscElement) -> DiscElement {
        DiscElement::reduce(a.coords.iter().map(|x| -Rational::from(x)).collect())
    }

    pub fn scale(&self, a: &DiscElement, t: i64) -> DiscElement {
        DiscElement::reduce(
            a.coords
                .iter()
                .map(|x| Rational::from(x) * Rational::from(t))
                .collect(),
        )
    }

    /// q(alpha) mod 1, in [0, 1).
    pub fn q(&self, a: &DiscElement) -> Rational {
        let v = self.lattice.q_raw(&a.coords);
        let f = v.clone().floor();
        v - f
    }

    /// <alpha, beta> mod 1, in [0, 1).
    pub fn bilinear(&self, a: &DiscElement, b: &DiscElement) -> Rational {
        let v = self.lattice.bilinear_raw(&a.coords, &b.coords);
        let f = v.clone().floor();
        v - f
    }

    /// True iff m/(2 det) - q(alpha) is an integer.
    pub fn check_index(&self, a: &DiscElement, m: i64) -> bool {
        let two_delta = 2 * self.lattice.det();
        let v = Rational::from((m, two_delta)) - self.lattice.q_raw(&a.coords);
        v.is_integer()
    }

    /// det * (<gamma,alpha> beta - <gamma,beta> alpha), asserted to lie in L.
    pub fn sylvester_combination(
        &self,
        alpha: &DiscElement,
        beta: &DiscElement,
        gamma: &DiscElement,
    ) -> Result<Vec<i64>> {
        let lat = &self.lattice;
        let ga = lat.bilinear_raw(&gamma.coords, &alpha.coords);
        let gb = lat.bilinear_raw(&gamma.coords, &beta.coords);
        let mut out = Vec::with_capacity(lat.rank());
        for i in 0..lat.rank() {
            let v = (Rational::from(&ga) * Rational::from(&beta.coords[i])
                - Rational::from(&gb) * Rational::from(&alpha.coords[i]))
                * Rational::from(lat.det());
            if !v.is_integer() {
                return Err(Error::Internal(format!(
                    "Sylvester combination has non-integer component {v}"
                )));
            }
            out.push(v.numer().to_i64().ok_or_else(|| {
                Error::Internal("Sylvester combination overflows i64".into())
            })?);
        }
        Ok(out)
    }

    /// The predicate l^2 = mn (mod 2N), strengthened to mod 4N when g = 1.
    /// Preconditions: l/det - <alpha,beta>, m/(2 det) - q(alpha), and
    /// n/(2 det) - q(beta) must all be integers.
    pub fn check_ell_congruence(
        &self,
        alpha: &DiscElement,
        beta: &DiscElement,
        ell: i64,
        m: i64,
        n: i64,
    ) -> Result<bool> {
        let lat = &self.lattice;
        let det = lat.det();
        let lt = Rational::from((ell, det)) - lat.bilinear_raw(&alpha.coords, &beta.coords);
        if !lt.is_integer() {
            return Err(Error::Domain(format!(
                "l/det - <alpha,beta> = {lt} is not an integer"
            )));
        }
        if !self.check_index(alpha, m) || !self.check_index(beta, n) {
            return Err(Error::Domain(
                "m or n incompatible with alpha or beta".into(),
            ));
        }
        let n_half = lat.n_half()?;
        let modulus = if lat.rank() == 1 { 4 * n_half } else { 2 * n_half };
        let ell2 = Integer::from(ell) * Integer::from(ell);
        let mn = Integer::from(m) * Integer::from(n);
        Ok((ell2 - mn).is_divisible(&Integer::from(modulus)))
    }

    /// Solve v * alpha' = alpha for alpha' when (v, det) = 1.
    pub fn divide_by(&self, alpha: &DiscElement, v: i64) -> Result<DiscElement> {
        let d = self.lattice.det().abs();
        let w = numth::inv_mod(v, d)?;
        Ok(self.scale(alpha, w))
    }
}

/// Exact determinant by fraction-free Gaussian elimination (Bareiss).
fn det_integer(m: &[Vec<i64>]) -> Integer {
    let n = m.len();
    let mut a: Vec<Vec<Integer>> = m
        .iter()
        .map(|row| row.iter().map(|&x| Integer::from(x)).collect())
        .collect();
    let mut sign = 1i32;
    let mut prev = Integer::from(1);
    for k in 0..n {
        if a[k][k] == 0 {
            let piv = (k + 1..n).find(|&i| a[i][k] != 0);
            match piv {
                Some(i) => {
                    a.swap(k, i);
                    sign = -sign;
                }
                None => return Integer::new(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = Integer::from(&a[i][j] * &a[k][k]) - Integer::from(&a[i][k] * &a[k][j]);
                a[i][j] = num / &prev;
            }
        }
        prev = a[k][k].clone();
        for i in k + 1..n {
            a[i][k] = Integer::new();
        }
    }
    let mut det = a[n - 1][n - 1].clone();
    if sign < 0 {
        det = -det;
    }
    det
}

/// Exact inverse over Q by Gauss-Jordan.
fn invert_rational(m: &[Vec<i64>]) -> Vec<Vec<Rational>> {
    let n = m.len();
    let mut a: Vec<Vec<Rational>> = m
        .iter()
        .map(|row| row.iter().map(|&x| Rational::from(x)).collect())
        .collect();
    let mut inv: Vec<Vec<Rational>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| Rational::from(if i == j { 1 } else { 0 }))
                .collect()
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .find(|&r| a[r][col] != 0)
            .expect("matrix is invertible");
        a.swap(col, piv);
        inv.swap(col, piv);
        let p = a[col][col].clone();
        for j in 0..n {
            a[col][j] /= &p;
            inv[col][j] /= &p;
        }
        for r in 0..n {
            if r != col && a[r][col] != 0 {
                let f = a[r][col].clone();
                for j in 0..n {
                    let av = Rational::from(&a[col][j]) * Rational::from(&f);
                    a[r][j] -= av;
                    let iv = Rational::from(&inv[col][j]) * Rational::from(&f);
                    inv[r][j] -= iv;
                }
            }
        }
    }
    inv
}

/// Smith normal form D = U M V; returns (diagonal of D, U^{-1}).
/// Only U^{-1} is tracked: it carries coset representatives back to Z^g.
fn smith_with_uinv(m: &[Vec<i64>]) -> (Vec<Integer>, Vec<Vec<Integer>>) {
    let n = m.len();
    let mut a: Vec<Vec<Integer>> = m
        .iter()
        .map(|row| row.iter().map(|&x| Integer::from(x)).collect())
        .collect();
    let mut u_inv: Vec<Vec<Integer>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| Integer::from(if i == j { 1 } else { 0 }))
                .collect()
        })
        .collect();

    // row op on A: row_i -= q * row_j  <=>  u_inv col_j += q * col_i
    // row swap i<->j on A             <=>  u_inv col swap i<->j
    for t in 0..n {
        loop {
            // find nonzero pivot in the remaining block, smallest |value|
            let mut best: Option<(usize, usize)> = None;
            for i in t..n {
                for j in t..n {
                    if a[i][j] != 0 {
                        let better = match best {
                            None => true,
                            Some((bi, bj)) => {
                                a[i][j].clone().abs() < a[bi][bj].clone().abs()
                            }
                        };
                        if better {
                            best = Some((i, j));
                        }
                    }
                }
            }
            let (pi, pj) = match best {
                Some(p) => p,
                None => return (diag(&a), u_inv),
            };
            if pi != t {
                a.swap(pi, t);
                for row in u_inv.iter_mut() {
                    row.swap(pi, t);
                }
            }
            if pj != t {
                for row in a.iter_mut() {
                    row.swap(pj, t);
                }
            }
            // clear column t below and above
            let mut clean = true;
            for i in 0..n {
                if i != t && a[i][t] != 0 {
                    let q = Integer::from(&a[i][t]).div_rem_floor(a[t][t].clone()).0;
                    if q != 0 {
                        for j in 0..n {
                            let s = Integer::from(&a[t][j]) * &q;
                            a[i][j] -= s;
                            let s = Integer::from(&u_inv[j][i]) * &q;
                            u_inv[j][t] += s;
                        }
                    }
                    if a[i][t] != 0 {
                        clean = false;
                    }
                }
            }
            if !clean {
                continue;
            }
            // clear row t
            for j in 0..n {
                if j != t && a[t][j] != 0 {
                    let q = Integer::from(&a[t][j]).div_rem_floor(a[t][t].clone()).0;
                    if q != 0 {
                        for i in 0..n {
                            let s = Integer::from(&a[i][t]) * &q;
                            a[i][j] -= s;
                        }
                    }
                    if a[t][j] != 0 {
                        clean = false;
                    }
                }
            }
            if clean {
                break;
            }
        }
    }
    // enforce divisibility chain d_t | d_{t+1}
    for t in 0..n.saturating_sub(1) {
        for s in t + 1..n {
            let dt = a[t][t].clone();
            let ds = a[s][s].clone();
            if dt == 0 || ds.clone() % dt.clone() == 0 {
                continue;
            }
            // standard 2x2 SNF repair: gcd to position t, lcm to position s
            let g = dt.clone().gcd(&ds);
            let l: Integer = Integer::from(&dt * &ds) / &g;
            // adjust u_inv: the repair mixes rows t and s of U, i.e. columns
            // of U^{-1}. Solve x dt + y ds = g.
            let (gg, x, _y) = dt.clone().extended_gcd(ds.clone(), Integer::new());
            debug_assert_eq!(gg, g);
            // A <- E A F with E row ops: row_t += row_s; then clear.
            // Track only the effect on u_inv via the same elementary steps.
            // Step 1: row_t += x * row_s  (col_s of u_inv -= ... inverse op)
            // Using explicit elementary ops keeps u_inv consistent.
            // E = [[1, x],[0,1]] then [[1,0],[-ds/g * ?, 1]] ... we instead
            // recompute with combined op: rows (t,s) of U change by
            // T = [[x, 1 - x*dt/g],[-ds/g, dt/g]]  -- standard repair matrix.
            // Its inverse acts on the columns (t,s) of U^{-1}.
            let dtg: Integer = dt.clone() / &g;
            let dsg: Integer = ds.clone() / &g;
            let t11 = x.clone();
            let t12 = Integer::from(1) - Integer::from(&x * &dtg);
            let t21 = -dsg.clone();
            let t22 = dtg.clone();
            // T^{-1} = [[t22, -t12],[-t21, t11]] since det T = 1
            for row in u_inv.iter_mut() {
                let ct = row[t].clone();
                let cs = row[s].clone();
                row[t] = Integer::from(&ct * &t22) - Integer::from(&cs * &t21);
                row[s] = -Integer::from(&ct * &t12) + Integer::from(&cs * &t11);
            }
            a[t][t] = g;
            a[s][s] = l;
        }
    }
    (diag(&a), u_inv)
}

fn diag(a: &[Vec<Integer>]) -> Vec<Integer> {
    (0..a.len()).map(|i| a[i][i].clone()).collect()
}

/// Signature by exact rational congruence diagonalization
/// (Sylvester's law of inertia).
fn signature(m: &[Vec<i64>]) -> (u32, u32) {
    let n = m.len();
    let mut a: Vec<Vec<Rational>> = m
        .iter()
        .map(|row| row.iter().map(|&x| Rational::from(x)).collect())
        .collect();
    let mut plus = 0u32;
    let mut minus = 0u32;
    for t in 0..n {
        if a[t][t] == 0 {
            // pivot on the largest |diagonal| among the rest
            let best = (t + 1..n)
                .filter(|&i| a[i][i] != 0)
                .max_by_key(|&i| a[i][i].clone().abs());
            if let Some(i) = best {
                a.swap(t, i);
                for row in a.iter_mut() {
                    row.swap(t, i);
                }
            } else {
                // all remaining diagonal entries are zero: rank-2 split
                let off = (t + 1..n).find(|&j| a[t][j] != 0);
                match off {
                    Some(j) => {
                        // row/col t += row/col j turns the diagonal nonzero
                        for k in 0..n {
                            let v = a[j][k].clone();
                            a[t][k] += v;
                        }
                        for row in a.iter_mut() {
                            let v = row[j].clone();
                            row[t] += v;
                        }
                    }
                    None => continue, // zero row: contributes nothing
                }
            }
        }
        let p = a[t][t].clone();
        if p > 0 {
            plus += 1;
        } else {
            minus += 1;
        }
        for i in t + 1..n {
            if a[i][t] != 0 {
                let f = Rational::from(&a[i][t]) / Rational::from(&p);
                for k in 0..n {
                    let v = Rational::from(&a[t][k]) * Rational::from(&f);
                    a[i][k] -= v;
                }
                for row in a.iter_mut() {
                    let v = Rational::from(&row[t]) * Rational::from(&f);
                    row[i] -= v;
                }
            }
        }
    }
    (plus, minus)
}
