//! The sparse exponential-sum identity: genus characters chi_m, local
//! factors xi built from congruence solution counts, both sides of the
//! divisor-sum identity, the Mobius-inverted fast Kloosterman evaluator,
//! and the classical plus-space (theta) and eta identities.
//!
//! Everything on the right-hand side is an exact integer or rational
//! weight attached to a residue class l mod 2Nc; only the final phase sum
//! is floating point.

use crate::error::{Error, Result};
use crate::kloosterman::{
    kloosterman_multiplier, kloosterman_plus, KloostermanEvaluator, MultiplierSystem,
};
use crate::lattice::{DiscElement, DiscGroup};
use crate::numeric::{AlgValue, Ctx};
use crate::numth::{
    divisors, factor, gcd, is_fundamental_discriminant, kronecker, mobius, valuation,
};
use crate::weilrep::sigma_weight;
use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use std::collections::HashMap;
use std::sync::Mutex;

/// Cap on brute-force congruence enumerations: p^{j(g+1)} terms.
/// Cap on brute-force congruence enumeration size.
pub const COUNT_BUDGET: i128 = 100_000_000;

// ---------------------------------------------------------------------------
// Genus character chi_m
// ---------------------------------------------------------------------------

/// chi_m(aN, b, c) by its definition: (m|r) for any r coprime to m
/// represented by a N_1 x^2 + b x y + c N_2 y^2 over some splitting
/// N = N_1 N_2 with N_1 > 0; zero when (a, b, c, m) > 1.
///
/// The search expands a square box until a representation with (r, m) = 1
/// is found; exhaustion is a hard error, never a silent zero.
pub fn chi_m_definition(m: i64, a: i64, b: i64, c: i64, n_cap: i64) -> Result<i64> {
    if !is_fundamental_discriminant(m) {
        return Err(Error::Domain(format!("m = {m} is not a fundamental discriminant")));
    }
    if n_cap < 1 {
        return Err(Error::Domain(format!("N = {n_cap} must be positive")));
    }
    if gcd(gcd(a, b), gcd(c, m)).abs() != 1 {
        return Ok(0);
    }
    if m == 1 {
        return Ok(1);
    }
    let mut splittings = Vec::new();
    for n1 in divisors(n_cap)? {
        splittings.push((n1, n_cap / n1));
    }
    let bound = 4 * m.abs() * n_cap * a.abs().max(1) + 16;
    for radius in 0..=bound {
        for &(n1, n2) in &splittings {
            // shell of the box: max(|x|, |y|) = radius
            let mut candidates: Vec<(i64, i64)> = Vec::new();
            for t in -radius..=radius {
                candidates.push((radius, t));
                candidates.push((-radius, t));
                candidates.push((t, radius));
                candidates.push((t, -radius));
            }
            for (x, y) in candidates {
                let r = (a as i128 * n1 as i128 * x as i128 * x as i128
                    + b as i128 * x as i128 * y as i128
                    + c as i128 * n2 as i128 * y as i128 * y as i128) as i64;
                if gcd(r, m).abs() == 1 {
                    return Ok(kronecker(m, r));
                }
            }
        }
    }
    Err(Error::SearchExhausted(format!(
        "no representation coprime to {m} in box {bound} for form ({a}*N1, {b}, {c}*N2), N = {n_cap}"
    )))
}

/// chi_m(Nc, l, (l^2 - mn)/(4Nc)) in closed form:
/// product over p^lambda || c of (m | p^lambda) at primes not dividing m,
/// and (m/p* | p^{lambda+nu}) (p* | (l^2 - mn)/p^{lambda+nu}) at primes
/// dividing m, with p^nu || 2 Delta.
pub fn chi_m_product(m: i64, ell: i64, mn: i64, c: i64, two_delta: i64) -> Result<i64> {
    if !is_fundamental_discriminant(m) {
        return Err(Error::Domain(format!("m = {m} is not a fundamental discriminant")));
    }
    let ell2_mn = ell as i128 * ell as i128 - mn as i128;
    let mut result = 1i64;
    for &(p, lambda) in &factor(c)?.factors {
        let lambda = lambda as i64;
        if m % p != 0 {
            let p_pow = checked_pow(p, lambda)?;
            result *= kronecker(m, p_pow);
        } else {
            let nu = valuation(two_delta, p) as i64;
            let p_star = p_star(p, m);
            let p_pow = checked_pow(p, lambda + nu)?;
            if ell2_mn % p_pow as i128 != 0 {
                return Err(Error::Internal(format!(
                    "l^2 - mn = {ell2_mn} not divisible by {p}^{}",
                    lambda + nu
                )));
            }
            let t = (ell2_mn / p_pow as i128) as i64;
            result *= kronecker(m / p_star, p_pow) * kronecker(p_star, t);
        }
        if result == 0 {
            return Ok(0);
        }
    }
    Ok(result)
}

/// p* = (-1|p) p for odd p; (-1|m') 2^mu for p = 2 with m = 2^mu m'.
fn p_star(p: i64, m: i64) -> i64 {
    if p % 2 == 1 {
        kronecker(-1, p) * p
    } else {
        let mu = valuation(m, 2);
        let m_odd = m >> mu;
        kronecker(-1, m_odd) * (1i64 << mu)
    }
}

fn checked_pow(p: i64, e: i64) -> Result<i64> {
    (p as i128)
        .checked_pow(e as u32)
        .filter(|&x| x <= i64::MAX as i128)
        .map(|x| x as i64)
        .ok_or_else(|| Error::Budget(format!("{p}^{e} overflows")))
}

// ---------------------------------------------------------------------------
// Local congruence data
// ---------------------------------------------------------------------------

/// Integer data of one local-factor instance: the tilde coefficients of
/// the quadratic congruence
///   m~ x^2 - <alpha,y> x - q(y) + <beta,y> - l~ x + n~ = 0,
/// together with the lattice Gram matrix.
#[derive(Clone, Debug)]
pub struct LocalInput {
    pub rank: usize,
    pub det: i64,
    pub n_half: i64,
    pub ell: i64,
    pub m: i64,
    pub n: i64,
    pub m_tilde: i64,
    pub n_tilde: i64,
    pub ell_tilde: i64,
    /// M alpha and M beta: integer vectors pairing dual elements with L.
    pub a_vec: Vec<i64>,
    pub b_vec: Vec<i64>,
    pub gram: Vec<Vec<i64>>,
}

impl LocalInput {
    pub fn new(
        group: &DiscGroup,
        alpha: &DiscElement,
        beta: &DiscElement,
        ell: i64,
        m: i64,
        n: i64,
    ) -> Result<LocalInput> {
        let lat = group.lattice();
        let det = lat.det();
        let to_int = |r: Rational, what: &str| -> Result<i64> {
            if !r.is_integer() {
                return Err(Error::Domain(format!("{what} = {r} is not an integer")));
            }
            r.numer()
                .to_i64()
                .ok_or_else(|| Error::Internal(format!("{what} overflows i64")))
        };
        let m_tilde = to_int(
            Rational::from((m, 2 * det)) - lat.q_raw(alpha.coords()),
            "m/(2 det) - q(alpha)",
        )?;
        let n_tilde = to_int(
            Rational::from((n, 2 * det)) - lat.q_raw(beta.coords()),
            "n/(2 det) - q(beta)",
        )?;
        let ell_tilde = to_int(
            Rational::from((ell, det)) - lat.bilinear_raw(alpha.coords(), beta.coords()),
            "l/det - <alpha,beta>",
        )?;
        Ok(LocalInput {
            rank: lat.rank(),
            det,
            n_half: lat.n_half()?,
            ell,
            m,
            n,
            m_tilde,
            n_tilde,
            ell_tilde,
            a_vec: lat.dual_tag(alpha)?,
            b_vec: lat.dual_tag(beta)?,
            gram: lat.gram().to_vec(),
        })
    }

    /// f(v, r) = m~ v^2 - <alpha,r> v - q(r) + <beta,r> - l~ v.
    fn f(&self, v: i64, r: &[i64]) -> i128 {
        let g = self.rank;
        let mut ar: i128 = 0;
        let mut br: i128 = 0;
        for i in 0..g {
            ar += self.a_vec[i] as i128 * r[i] as i128;
            br += self.b_vec[i] as i128 * r[i] as i128;
        }
        let mut q2: i128 = 0;
        for i in 0..g {
            for j in 0..g {
                q2 += self.gram[i][j] as i128 * r[i] as i128 * r[j] as i128;
            }
        }
        self.m_tilde as i128 * v as i128 * v as i128 - ar * v as i128 - q2 / 2 + br
            - self.ell_tilde as i128 * v as i128
    }
}

fn budget_pow(p: i64, e: u32, vars: u32) -> Result<i64> {
    let total = (p as i128)
        .checked_pow(e * vars)
        .unwrap_or(i128::MAX);
    if total > COUNT_BUDGET {
        return Err(Error::Budget(format!(
            "{p}^{} enumeration points exceeds cap {COUNT_BUDGET}",
            e * vars
        )));
    }
    checked_pow(p, e as i64)
}

/// N(p^j): solutions (v, r) in Z/p^j x L/p^j L of f(v, r) + n~ = 0.
pub fn count_solutions(input: &LocalInput, p: i64, j: u32) -> Result<i64> {
    if j == 0 {
        return Ok(1);
    }
    let g = input.rank as u32;
    let pj = budget_pow(p, j, g + 1)?;
    let mut count = 0i64;
    let mut r = vec![0i64; input.rank];
    loop {
        for v in 0..pj {
            let val = input.f(v, &r) + input.n_tilde as i128;
            if val.rem_euclid(pj as i128) == 0 {
                count += 1;
            }
        }
        let mut k = 0;
        loop {
            if k == input.rank {
                return Ok(count);
            }
            r[k] += 1;
            if r[k] < pj {
                break;
            }
            r[k] = 0;
            k += 1;
        }
    }
}

/// M_j(p^k): pairs (v, r) mod p^lambda satisfying
///   f(v,r) + n~ = 0 (mod p^k),
///   2 m~ v - <alpha,r> - l~ = 0 (mod p^j),
///   <alpha v + r - beta, y> = 0 (mod p^j) for all y in L.
pub fn count_mj(input: &LocalInput, p: i64, lambda: u32, j: u32, k: u32) -> Result<i64> {
    if !(j <= k && k <= lambda) {
        return Err(Error::Domain(format!("need j <= k <= lambda, got {j} <= {k} <= {lambda}")));
    }
    let g = input.rank as u32;
    let pl = budget_pow(p, lambda, g + 1)?;
    let pk = checked_pow(p, k as i64)?;
    let pj = checked_pow(p, j as i64)?;
    let mut count = 0i64;
    let mut r = vec![0i64; input.rank];
    loop {
        // M r, needed by the third congruence
        let mr: Vec<i128> = (0..input.rank)
            .map(|i| {
                (0..input.rank)
                    .map(|t| input.gram[i][t] as i128 * r[t] as i128)
                    .sum()
            })
            .collect();
        'v: for v in 0..pl {
            let val = input.f(v, &r) + input.n_tilde as i128;
            if val.rem_euclid(pk as i128) != 0 {
                continue;
            }
            let mut ar: i128 = 0;
            for i in 0..input.rank {
                ar += input.a_vec[i] as i128 * r[i] as i128;
            }
            let lin = 2 * input.m_tilde as i128 * v as i128 - ar - input.ell_tilde as i128;
            if lin.rem_euclid(pj as i128) != 0 {
                continue;
            }
            for i in 0..input.rank {
                let comp = input.a_vec[i] as i128 * v as i128 + mr[i] - input.b_vec[i] as i128;
                if comp.rem_euclid(pj as i128) != 0 {
                    continue 'v;
                }
            }
            count += 1;
        }
        let mut t = 0;
        loop {
            if t == input.rank {
                return Ok(count);
            }
            r[t] += 1;
            if r[t] < pl {
                break;
            }
            r[t] = 0;
            t += 1;
        }
    }
}

// ---------------------------------------------------------------------------
// The local factor xi
// ---------------------------------------------------------------------------

/// m_L = (-4)^{(g-1)/2} m.
pub fn m_lattice(m: i64, g: usize) -> i64 {
    let e = (g as u32 - 1) / 2;
    m * (-4i64).pow(e)
}

/// xi_{alpha,beta}(l, m, n, p^lambda), an exact rational.
pub fn xi_local(input: &LocalInput, p: i64, lambda: u32) -> Result<Rational> {
    if lambda == 0 {
        return Ok(Rational::from(1));
    }
    let g = input.rank;
    let ell2_mn = input.ell as i128 * input.ell as i128 - input.m as i128 * input.n as i128;
    let good = p % 2 == 1 && !(input.m % p == 0 && input.det % p == 0);
    if good {
        let nu = valuation(2 * input.det, p) as i64;
        let m_l = m_lattice(input.m, g);
        if input.m % p != 0 {
            let p_pow = checked_pow(p, lambda as i64 + nu)?;
            if ell2_mn.rem_euclid(p_pow as i128) == 0 {
                Ok(Rational::from(kronecker(m_l, checked_pow(p, lambda as i64)?)))
            } else {
                Ok(Rational::new())
            }
        } else {
            // p | m with (m, det, p) = 1 forces p coprime to 2 det
            if nu != 0 {
                return Err(Error::Internal(format!(
                    "p = {p} divides both m and 2 det; expected nu = 0, got {nu}"
                )));
            }
            let p_pow = checked_pow(p, lambda as i64)?;
            if ell2_mn.rem_euclid(p_pow as i128) == 0 {
                let ps = p_star(p, input.m);
                let t = (ell2_mn / p_pow as i128) as i64;
                Ok(Rational::from(kronecker(m_l / ps, p_pow) * kronecker(ps, t)))
            } else {
                Ok(Rational::new())
            }
        }
    } else {
        // p = 2, or odd p dividing (m, det): the solution-count branch
        let cong_pow = checked_pow(p, 2 * (lambda as i64 / 2))?;
        let modulus = 2 * input.n_half as i128 * cong_pow as i128;
        if lambda == 1 {
            // floor(lambda/2) = 0: the condition is l^2 = mn (mod 2N),
            // which always holds for admissible inputs
            if ell2_mn.rem_euclid(modulus) != 0 {
                return Err(Error::Internal(format!(
                    "l^2 - mn = {ell2_mn} not divisible by 2N = {modulus}"
                )));
            }
        }
        if ell2_mn.rem_euclid(modulus) != 0 {
            return Ok(Rational::new());
        }
        let n_hi = count_solutions(input, p, lambda)?;
        let n_lo = count_solutions(input, p, lambda - 1)?;
        let diff = Integer::from(n_hi) - Integer::from(p).pow(g as u32) * Integer::from(n_lo);
        let denom = Integer::from(p).pow(lambda * (g as u32 + 1) / 2);
        Ok(Rational::from((diff, denom)))
    }
}

/// xi extended multiplicatively over the prime powers of c.
pub fn xi(input: &LocalInput, c: i64) -> Result<Rational> {
    let mut acc = Rational::from(1);
    for &(p, lambda) in &factor(c)?.factors {
        acc *= xi_local(input, p, lambda)?;
        if acc == 0 {
            return Ok(acc);
        }
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// The identity engine
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChiMode {
    Definition,
    Product,
}

/// Result of one identity evaluation.
#[derive(Clone, Debug)]
pub struct IdentityCheck {
    pub lhs: AlgValue,
    pub rhs: AlgValue,
    pub residual: Float,
}

/// Evaluates both sides of the exponential-sum identity for one lattice,
/// caching Kloosterman sums (which repeat heavily across the v-grid) and
/// the representation coefficients beneath them.
pub struct IdentityEngine {
    ev: KloostermanEvaluator,
    k: Rational,
    sigma: i64,
    chi_mode: ChiMode,
    s_cache: Mutex<HashMap<(usize, usize, i64, i64, i64), AlgValue>>,
}

impl IdentityEngine {
    /// Engine with the natural weight (sigma = 0).
    pub fn new(group: DiscGroup, ctx: Ctx) -> Self {
        let k = crate::weilrep::natural_weight(group.lattice().signature());
        Self::with_weight(group, ctx, k).expect("natural weight is consistent")
    }

    pub fn with_weight(group: DiscGroup, ctx: Ctx, k: Rational) -> Result<Self> {
        let sigma = sigma_weight(group.lattice().signature(), &k)?;
        Ok(IdentityEngine {
            ev: KloostermanEvaluator::new(group, ctx),
            k,
            sigma,
            chi_mode: ChiMode::Product,
            s_cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn with_chi_mode(mut self, mode: ChiMode) -> Self {
        self.chi_mode = mode;
        self
    }

    pub fn group(&self) -> &DiscGroup {
        self.ev.group()
    }

    pub fn ctx(&self) -> &Ctx {
        self.ev.ctx()
    }

    pub fn evaluator(&self) -> &KloostermanEvaluator {
        &self.ev
    }

    pub fn weight(&self) -> &Rational {
        &self.k
    }

    pub fn sigma(&self) -> i64 {
        self.sigma
    }

    fn check_hypotheses(
        &self,
        alpha: &DiscElement,
        beta: &DiscElement,
        m: i64,
        n: i64,
        c: i64,
    ) -> Result<()> {
        let g = self.group().lattice().rank();
        if g % 2 == 0 {
            return Err(Error::Domain("identity requires odd rank".into()));
        }
        if c < 1 {
            return Err(Error::Domain(format!("c = {c} must be positive")));
        }
        let m_fund = if ((g as i64 - 1) / 2) % 2 == 0 { m } else { -m };
        if !is_fundamental_discriminant(m_fund) {
            return Err(Error::Domain(format!(
                "(-1)^((g-1)/2) m = {m_fund} is not a fundamental discriminant"
            )));
        }
        if !self.group().check_index(alpha, m) {
            return Err(Error::Domain(format!("m = {m} incompatible with alpha")));
        }
        if !self.group().check_index(beta, n) {
            return Err(Error::Domain(format!("n = {n} incompatible with beta")));
        }
        Ok(())
    }

    /// Canonical lift of det * <alpha, beta> mod 2N: the starting point of
    /// the l-residue enumeration.
    fn ell_base(&self, alpha: &DiscElement, beta: &DiscElement) -> Result<i64> {
        let lat = self.group().lattice();
        let r = lat.bilinear_raw(alpha.coords(), beta.coords()) * Rational::from(lat.det());
        if !r.is_integer() {
            return Err(Error::Internal("det <alpha,beta> is not an integer".into()));
        }
        let two_n = 2 * lat.n_half()?;
        Ok(r.numer()
            .to_i64()
            .ok_or_else(|| Error::Internal("l base overflows".into()))?
            .rem_euclid(two_n))
    }

    /// The exact weights w(l) of the sparse side: for each of the c
    /// admissible residues l mod 2Nc, the value chi_m (rank 1) or xi
    /// (higher rank). These are the Fourier coefficients of R_v up to the
    /// global normalization.
    pub fn ell_weights(
        &self,
        alpha: &DiscElement,
        beta: &DiscElement,
        m: i64,
        n: i64,
        c: i64,
    ) -> Result<Vec<(i64, Rational)>> {
        self.check_hypotheses(alpha, beta, m, n, c)?;
        let lat = self.group().lattice();
        let g = lat.rank();
        let n_half = lat.n_half()?;
        let two_n = 2 * n_half;
        let ell0 = self.ell_base(alpha, beta)?;
        let mut out = Vec::with_capacity(c as usize);
        for t in 0..c {
            let ell = ell0 + two_n * t;
            let w = if g == 1 {
                let ell2_mn = ell as i128 * ell as i128 - m as i128 * n as i128;
                let four_nc = 4 * n_half as i128 * c as i128;
                if ell2_mn.rem_euclid(four_nc) != 0 {
                    Rational::new()
                } else {
                    let v = match self.chi_mode {
                        ChiMode::Product => {
                            chi_m_product(m, ell, m * n, c, 2 * lat.det())?
                        }
                        ChiMode::Definition => {
                            let c3 = (ell2_mn / four_nc) as i64;
                            chi_m_definition(m, c, ell, c3, n_half)?
                        }
                    };
                    Rational::from(v)
                }
            } else {
                let input = LocalInput::new(self.group(), alpha, beta, ell, m, n)?;
                xi(&input, c)?
            };
            out.push((ell, w));
        }
        Ok(out)
    }

    /// R_v(c) with the prefactor i^{-sigma}/sqrt(2N) folded in, computed
    /// from precomputed weights.
    pub fn rhs_from_weights(&self, weights: &[(i64, Rational)], c: i64, v: i64) -> Result<AlgValue> {
        let ctx = self.ctx();
        let lat = self.group().lattice();
        let dc = Integer::from(lat.det()) * Integer::from(c);
        let mut acc = ctx.zero();
        for (ell, w) in weights {
            if *w == 0 {
                continue;
            }
            let arg = Rational::from((
                Integer::from(*ell) * Integer::from(v),
                dc.clone(),
            ));
            acc = acc + &ctx.e_frac(&arg).scale_rational(w);
        }
        let front = ctx.i_power(-self.sigma);
        let root = ctx.sqrt_pos_i64(2 * lat.n_half()?)?;
        Ok((acc * front).div_float(root.re()))
    }

    pub fn rhs_rv(
        &self,
        alpha: &DiscElement,
        beta: &DiscElement,
        m: i64,
        n: i64,
        c: i64,
        v: i64,
    ) -> Result<AlgValue> {
        let weights = self.ell_weights(alpha, beta, m, n, c)?;
        self.rhs_from_weights(&weights, c, v)
    }

    /// Cached S_{alpha,beta}(m, n, c); the sum depends on (m, n) only
    /// modulo |2 det c|.
    fn s_cached(
        &self,
        alpha: &DiscElement,
        beta: &DiscElement,
        m: i64,
        n: i64,
        c: i64,
    ) -> Result<AlgValue> {
        let modulus = (2 * self.group().lattice().det() * c).abs();
        let key = (
            self.group().index_of(alpha)?,
            self.group().index_of(beta)?,
            m.rem_euclid(modulus),
            n.rem_euclid(modulus),
            c,
        );
        if let Some(v) = self.s_cache.lock().unwrap().get(&key) {
            return Ok(v.clone());
        }
        let v = self.ev.sum(alpha, beta, m, n, c, &self.k)?;
        let mut cache = self.s_cache.lock().unwrap();
        if cache.len() >= 300_000 {
            cache.clear();
        }
        cache.insert(key, v.clone());
        Ok(v)
    }

    /// S_{alpha,beta}(m, n, c) at the engine's weight, memoized.
    pub fn kloosterman(
        &self,
        alpha: &DiscElement,
        beta: &DiscElement,
        m: i64,
        n: i64,
        c: i64,
    ) -> Result<AlgValue> {
        self.s_cached(alpha, beta, m, n, c)
    }

    /// L_v(c) = sum over u | (v, c) of (m_L | u) sqrt(u/c)
    /// S_{alpha v/u, beta}(m (v/u)^2, n, c/u).
    pub fn lhs_lv(
        &self,
        alpha: &DiscElement,
        beta: &DiscElement,
        m: i64,
        n: i64,
        c: i64,
        v: i64,
    ) -> Result<AlgValue> {
        self.check_hypotheses(alpha, beta, m, n, c)?;
        let ctx = self.ctx();
        let g = self.group().lattice().rank();
        let m_l = m_lattice(m, g);
        let mut acc = ctx.zero();
        for u in divisors(gcd(v, c).max(c.min(1)))? {
            if v % u != 0 || c % u != 0 {
                continue;
            }
            let sym = kronecker(m_l, u);
            if sym == 0 {
                continue;
            }
            let vu = v / u;
            let scaled_alpha = self.group().scale(alpha, vu);
            let m_idx = m
                .checked_mul(vu)
                .and_then(|x| x.checked_mul(vu))
                .ok_or_else(|| Error::Budget("m v^2/u^2 overflows".into()))?;
            let s = self.s_cached(&scaled_alpha, beta, m_idx, n, c / u)?;
            let root = ctx.sqrt_pos(&Rational::from((u, c)))?;
            acc = acc + &s.scale_float(root.re()).scale_i64(sym);
        }
        Ok(acc)
    }

    /// Residual |L_v(c) - R_v(c)| with both sides returned.
    pub fn verify_identity(
        &self,
        alpha: &DiscElement,
        beta: &DiscElement,
        m: i64,
        n: i64,
        c: i64,
        v: i64,
    ) -> Result<IdentityCheck> {
        let lhs = self.lhs_lv(alpha, beta, m, n, c, v)?;
        let rhs = self.rhs_rv(alpha, beta, m, n, c, v)?;
        let residual = (lhs.clone() - &rhs).abs();
        Ok(IdentityCheck { lhs, rhs, residual })
    }

    /// S_{alpha v, beta}(m v^2, n, c) via Mobius inversion:
    /// i^{-sigma} sqrt(c) / sqrt(2N) sum over u | (v, c) of mu(u) (m_L | u)
    /// times the l-sum for modulus c/u, with phases e_{det c}(l v).
    /// No representation coefficients are computed.
    pub fn fast_kloosterman(
        &self,
        alpha: &DiscElement,
        beta: &DiscElement,
        m: i64,
        n: i64,
        v: i64,
        c: i64,
    ) -> Result<AlgValue> {
        self.check_hypotheses(alpha, beta, m, n, c)?;
        let ctx = self.ctx();
        let lat = self.group().lattice();
        let g = lat.rank();
        let m_l = m_lattice(m, g);
        let dc = Integer::from(lat.det()) * Integer::from(c);
        let mut acc = ctx.zero();
        for u in divisors(gcd(v, c).max(c.min(1)))? {
            if v % u != 0 || c % u != 0 {
                continue;
            }
            let mu = mobius(u)?;
            if mu == 0 {
                continue;
            }
            let sym = mu * kronecker(m_l, u);
            if sym == 0 {
                continue;
            }
            let weights = self.ell_weights(alpha, beta, m, n, c / u)?;
            let mut inner = ctx.zero();
            for (ell, w) in &weights {
                if *w == 0 {
                    continue;
                }
                let arg = Rational::from((Integer::from(*ell) * Integer::from(v), dc.clone()));
                inner = inner + &ctx.e_frac(&arg).scale_rational(w);
            }
            acc = acc + &inner.scale_i64(sym);
        }
        let front = ctx.i_power(-self.sigma);
        let scale = ctx.sqrt_pos(&Rational::from((c, 2 * lat.n_half()?)))?;
        Ok(acc * front * scale)
    }
}

// ---------------------------------------------------------------------------
// Kohnen and eta identities
// ---------------------------------------------------------------------------

/// Kohnen's identity: for m, n = 0, 1 (mod 4), m fundamental,
///   sum over u | (v,c) of (m|u) sqrt(u/c) S^+(m v^2/u^2, n, 4c/u)
///   = 4 sum over l mod 2c with l^2 = mn (mod 4c) of
///       chi_m(c, l, (l^2 - mn)/(4c)) e_{2c}(l v).
pub fn verify_kohnen(m: i64, n: i64, c: i64, v: i64, ctx: &Ctx) -> Result<IdentityCheck> {
    if m.rem_euclid(4) > 1 || n.rem_euclid(4) > 1 {
        return Err(Error::Domain(format!("m = {m}, n = {n} must be 0 or 1 mod 4")));
    }
    if !is_fundamental_discriminant(m) {
        return Err(Error::Domain(format!("m = {m} is not a fundamental discriminant")));
    }
    if c < 1 {
        return Err(Error::Domain(format!("c = {c} must be positive")));
    }
    let mut lhs = ctx.zero();
    for u in divisors(gcd(v, c).max(c.min(1)))? {
        if v % u != 0 || c % u != 0 {
            continue;
        }
        let sym = kronecker(m, u);
        if sym == 0 {
            continue;
        }
        let vu = v / u;
        let s = kloosterman_plus(m * vu * vu, n, 4 * c / u, ctx)?;
        let root = ctx.sqrt_pos(&Rational::from((u, c)))?;
        lhs = lhs + &s.scale_float(root.re()).scale_i64(sym);
    }
    let mut rhs = ctx.zero();
    for ell in 0..2 * c {
        let ell2_mn = ell as i128 * ell as i128 - m as i128 * n as i128;
        if ell2_mn.rem_euclid(4 * c as i128) != 0 {
            continue;
        }
        let c3 = (ell2_mn / (4 * c as i128)) as i64;
        let chi = chi_m_definition(m, c, ell, c3, 1)?;
        if chi == 0 {
            continue;
        }
        let arg = Rational::from((ell * v, 2 * c));
        rhs = rhs + &ctx.e_frac(&arg).scale_i64(chi);
    }
    rhs = rhs.scale_i64(4);
    let residual = (lhs.clone() - &rhs).abs();
    Ok(IdentityCheck { lhs, rhs, residual })
}

/// The eta identity: for m, n = 1 (mod 24), m fundamental, (v, 6) = 1,
///   2 sqrt(-3i) sum over u | (v,c) of (12 | v/u)(m | u) sqrt(u/c)
///     S(m v^2/(24 u^2), n/24, c/u, nu_eta)
///   = sum over l mod 12c with l^2 = mn (mod 24c) of
///       (12 | l) chi_m(6c, l, (l^2 - mn)/(24c)) e_{12c}(l v).
pub fn verify_andersen(m: i64, n: i64, c: i64, v: i64, ctx: &Ctx) -> Result<IdentityCheck> {
    if m.rem_euclid(24) != 1 || n.rem_euclid(24) != 1 {
        return Err(Error::Domain(format!("m = {m}, n = {n} must be 1 mod 24")));
    }
    if !is_fundamental_discriminant(m) {
        return Err(Error::Domain(format!("m = {m} is not a fundamental discriminant")));
    }
    if gcd(v, 6) != 1 {
        return Err(Error::Domain(format!("v = {v} must be coprime to 6")));
    }
    if c < 1 {
        return Err(Error::Domain(format!("c = {c} must be positive")));
    }
    let mut lhs = ctx.zero();
    for u in divisors(gcd(v, c).max(c.min(1)))? {
        if v % u != 0 || c % u != 0 {
            continue;
        }
        let vu = v / u;
        let sym = kronecker(12, vu) * kronecker(m, u);
        if sym == 0 {
            continue;
        }
        let s = kloosterman_multiplier(
            &Rational::from((m * vu * vu, 24)),
            &Rational::from((n, 24)),
            c / u,
            MultiplierSystem::Eta,
            ctx,
        )?;
        let root = ctx.sqrt_pos(&Rational::from((u, c)))?;
        lhs = lhs + &s.scale_float(root.re()).scale_i64(sym);
    }
    // 2 sqrt(-3i) = 2 sqrt(3) e(-1/8)
    let front = ctx
        .sqrt_pos_i64(3)?
        .scale_i64(2)
        * ctx.e_frac(&Rational::from((-1, 8)));
    lhs = lhs * front;
    let mut rhs = ctx.zero();
    for ell in 0..12 * c {
        let ell2_mn = ell as i128 * ell as i128 - m as i128 * n as i128;
        if ell2_mn.rem_euclid(24 * c as i128) != 0 {
            continue;
        }
        let sym = kronecker(12, ell);
        if sym == 0 {
            continue;
        }
        let c3 = (ell2_mn / (24 * c as i128)) as i64;
        let chi = chi_m_definition(m, c, ell, c3, 6)?;
        if chi == 0 {
            continue;
        }
        let arg = Rational::from((ell * v, 12 * c));
        rhs = rhs + &ctx.e_frac(&arg).scale_i64(sym * chi);
    }
    let residual = (lhs.clone() - &rhs).abs();
    Ok(IdentityCheck { lhs, rhs, residual })
}
