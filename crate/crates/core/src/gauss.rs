//! Quadratic Gauss sums: plain, scaled, power-of-two, multivariate
//! (attached to a Gram matrix), and character-twisted variants.
//!
//! Every evaluator supports two modes: `Direct` sums the defining
//! exponential sum term by term, `ClosedForm` evaluates the classical
//! formula. Tests pin the two against each other; downstream code uses the
//! closed forms.

use crate::error::{Error, Result};
use crate::lattice::EvenLattice;
use crate::numeric::{AlgValue, Ctx};
use crate::numth::{eps, inv_mod, kronecker};
use rug::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Direct,
    ClosedForm,
}

/// Cap on the number of terms any direct evaluation may sum.
const DIRECT_BUDGET: i128 = 100_000_000;

fn check_budget(terms: i128, what: &str) -> Result<()> {
    if terms > DIRECT_BUDGET {
        return Err(Error::Budget(format!(
            "{what}: {terms} terms exceeds cap {DIRECT_BUDGET}"
        )));
    }
    Ok(())
}

/// G(c) = sum_{x mod c} e_c(x^2) for odd c > 0. Equals eps_c sqrt(c).
pub fn gauss_plain(c: i64, mode: Mode, ctx: &Ctx) -> Result<AlgValue> {
    gauss_scaled(1, c, mode, ctx)
}

/// sum_{x mod c} e_c(a x^2) for odd c > 0 and (a, c) = 1.
/// Equals (a|c) eps_c sqrt(c).
pub fn gauss_scaled(a: i64, c: i64, mode: Mode, ctx: &Ctx) -> Result<AlgValue> {
    if c <= 0 || c % 2 == 0 {
        return Err(Error::Domain(format!("modulus c = {c} must be odd and positive")));
    }
    if crate::numth::gcd(a, c) != 1 {
        return Err(Error::Domain(format!("a = {a} must be coprime to c = {c}")));
    }
    match mode {
        Mode::Direct => {
            check_budget(c as i128, "gauss_scaled")?;
            let mut acc = ctx.zero();
            for x in 0..c {
                let e = (a as i128 * x as i128 * x as i128).rem_euclid(c as i128) as i64;
                acc = acc + &ctx.e_frac(&Rational::from((e, c)));
            }
            Ok(acc)
        }
        Mode::ClosedForm => {
            let sym = kronecker(a, c);
            let v = eps(c, ctx)? * ctx.sqrt_pos_i64(c)?;
            Ok(v.scale_i64(sym))
        }
    }
}

/// sum_{x mod 2^lambda} e_{2^lambda}(a x^2 + b x) for odd a, lambda >= 1.
///
/// Closed form: 2 when lambda = 1 and b is odd;
/// e_{2^lambda}(-abar (b/2)^2) (1+i) eps_a^{-1} (2|a)^lambda 2^{lambda/2}
/// when lambda >= 2 and b is even; 0 otherwise.
pub fn gauss_pow2(a: i64, b: i64, lambda: u32, mode: Mode, ctx: &Ctx) -> Result<AlgValue> {
    if a % 2 == 0 {
        return Err(Error::Domain(format!("a = {a} must be odd")));
    }
    if lambda == 0 || lambda > 40 {
        return Err(Error::Domain(format!("lambda = {lambda} out of range 1..=40")));
    }
    let modulus: i64 = 1 << lambda;
    match mode {
        Mode::Direct => {
            check_budget(modulus as i128, "gauss_pow2")?;
            let mut acc = ctx.zero();
            for x in 0..modulus {
                let e = (a as i128 * x as i128 * x as i128 + b as i128 * x as i128)
                    .rem_euclid(modulus as i128) as i64;
                acc = acc + &ctx.e_frac(&Rational::from((e, modulus)));
            }
            Ok(acc)
        }
        Mode::ClosedForm => {
            if lambda == 1 {
                return Ok(if b.rem_euclid(2) == 1 {
                    ctx.from_i64(2)
                } else {
                    ctx.zero()
                });
            }
            if b.rem_euclid(2) == 1 {
                return Ok(ctx.zero());
            }
            let half_b = b / 2;
            let abar = inv_mod(a, modulus)?;
            let phase_num =
                (-(abar as i128) * half_b as i128 * half_b as i128).rem_euclid(modulus as i128);
            let phase = ctx.e_frac(&Rational::from((phase_num as i64, modulus)));
            let one_plus_i = ctx.one() + &ctx.i_power(1);
            let eps_a_inv = eps(a, ctx)?.conj();
            let sym = kronecker(2, a).pow(lambda);
            let mag = ctx.sqrt_pos_i64(modulus)?;
            Ok((phase * one_plus_i * eps_a_inv * mag).scale_i64(sym))
        }
    }
}

/// sum over x in (Z/c)^g of e_c(q(x)) for odd c coprime to det M.
/// Equals ((2bar^g det)|c) G(c)^g where 2bar inverts 2 mod c.
pub fn gauss_quadratic_form(
    lat: &EvenLattice,
    c: i64,
    mode: Mode,
    ctx: &Ctx,
) -> Result<AlgValue> {
    if c <= 0 || c % 2 == 0 {
        return Err(Error::Domain(format!("modulus c = {c} must be odd and positive")));
    }
    if crate::numth::gcd(lat.det(), c) != 1 {
        return Err(Error::Domain(format!(
            "c = {c} must be coprime to det = {}",
            lat.det()
        )));
    }
    let g = lat.rank();
    match mode {
        Mode::Direct => {
            let terms = (c as i128).checked_pow(g as u32).unwrap_or(i128::MAX);
            check_budget(terms, "gauss_quadratic_form")?;
            let gram = lat.gram();
            let mut acc = ctx.zero();
            let mut x = vec![0i64; g];
            loop {
                // q(x) = 1/2 x^T M x, an integer since the lattice is even
                let mut q2: i128 = 0;
                for i in 0..g {
                    for j in 0..g {
                        q2 += gram[i][j] as i128 * x[i] as i128 * x[j] as i128;
                    }
                }
                let e = (q2 / 2).rem_euclid(c as i128) as i64;
                acc = acc + &ctx.e_frac(&Rational::from((e, c)));
                // odometer
                let mut k = 0;
                loop {
                    if k == g {
                        return Ok(acc);
                    }
                    x[k] += 1;
                    if x[k] < c {
                        break;
                    }
                    x[k] = 0;
                    k += 1;
                }
            }
        }
        Mode::ClosedForm => {
            let two_bar = inv_mod(2, c)?;
            let mut top: i64 = lat.det().rem_euclid(c);
            for _ in 0..g {
                top = ((top as i128 * two_bar as i128).rem_euclid(c as i128)) as i64;
            }
            let sym = kronecker(top, c);
            let gc = gauss_plain(c, Mode::ClosedForm, ctx)?;
            let mut pow = ctx.one();
            for _ in 0..g {
                pow = pow * &gc;
            }
            Ok(pow.scale_i64(sym))
        }
    }
}

/// sum over units d mod p^lambda of (d|p) e_{p^lambda}(d n), p an odd prime.
///
/// Vanishes unless p^{lambda-1} | n; otherwise equals
/// eps_p p^{lambda - 1/2} ((n / p^{lambda-1}) | p).
pub fn gauss_twisted_odd(p: i64, lambda: u32, n: i64, mode: Mode, ctx: &Ctx) -> Result<AlgValue> {
    if p < 3 || p % 2 == 0 || !is_prime(p) {
        return Err(Error::Domain(format!("p = {p} must be an odd prime")));
    }
    if lambda == 0 {
        return Err(Error::Domain("lambda must be >= 1".into()));
    }
    let modulus = (p as i128).checked_pow(lambda).filter(|&m| m <= i64::MAX as i128);
    let modulus = modulus.ok_or_else(|| Error::Domain("p^lambda overflows".into()))? as i64;
    match mode {
        Mode::Direct => {
            check_budget(modulus as i128, "gauss_twisted_odd")?;
            let mut acc = ctx.zero();
            for d in 0..modulus {
                if d % p == 0 {
                    continue;
                }
                let sym = kronecker(d, p);
                let e = (d as i128 * n as i128).rem_euclid(modulus as i128) as i64;
                acc = acc + &ctx.e_frac(&Rational::from((e, modulus))).scale_i64(sym);
            }
            Ok(acc)
        }
        Mode::ClosedForm => {
            let pl1 = modulus / p; // p^{lambda-1}
            if n.rem_euclid(pl1) != 0 {
                return Ok(ctx.zero());
            }
            let sym = kronecker(n / pl1, p);
            if sym == 0 {
                return Ok(ctx.zero());
            }
            // p^{lambda - 1/2} = p^{lambda-1} sqrt(p)
            let mag = ctx.sqrt_pos_i64(p)?.scale_i64(pl1);
            Ok((eps(p, ctx)? * mag).scale_i64(sym))
        }
    }
}

/// sum over odd d mod 2^lambda of (-1|d) e_{2^lambda}(d n), lambda >= 2.
///
/// Vanishes unless 2^{lambda-2} | n; otherwise equals
/// 2^{lambda-1} i (-4 | n / 2^{lambda-2}).
pub fn gauss_twisted_pow2(lambda: u32, n: i64, mode: Mode, ctx: &Ctx) -> Result<AlgValue> {
    if !(2..=40).contains(&lambda) {
        return Err(Error::Domain(format!("lambda = {lambda} out of range 2..=40")));
    }
    let modulus: i64 = 1 << lambda;
    match mode {
        Mode::Direct => {
            check_budget(modulus as i128, "gauss_twisted_pow2")?;
            let mut acc = ctx.zero();
            for d in (1..modulus).step_by(2) {
                let sym = kronecker(-1, d);
                let e = (d as i128 * n as i128).rem_euclid(modulus as i128) as i64;
                acc = acc + &ctx.e_frac(&Rational::from((e, modulus))).scale_i64(sym);
            }
            Ok(acc)
        }
        Mode::ClosedForm => {
            let q = modulus / 4; // 2^{lambda-2}
            if n.rem_euclid(q) != 0 {
                return Ok(ctx.zero());
            }
            let sym = kronecker(-4, n / q);
            Ok(ctx.i_power(1).scale_i64(sym * (modulus / 2)))
        }
    }
}

fn is_prime(n: i64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}
