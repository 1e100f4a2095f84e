//! Exact integer utilities: Kronecker symbols, epsilon factors, fundamental
//! discriminants, divisor machinery, and quadratic-congruence solution
//! counts. Everything here is deterministic desk-scale arithmetic on i64.

use crate::error::{Error, Result};
use crate::numeric::{AlgValue, Ctx};

/// Prime factorization of a positive integer, primes strictly increasing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factorization {
    pub value: i64,
    pub factors: Vec<(i64, u32)>,
}

/// m = m0 * v^2 with (-1)^((g-1)/2) * m0 a fundamental discriminant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FundamentalDecomposition {
    pub m: i64,
    pub m0: i64,
    pub v: i64,
    /// (g-1)/2 mod 2
    pub sign_exponent: u32,
}

pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Deterministic trial division up to sqrt(n).
pub fn factor(n: i64) -> Result<Factorization> {
    if n < 1 {
        return Err(Error::Domain(format!("factor requires n >= 1, got {n}")));
    }
    let mut factors = Vec::new();
    let mut rem = n;
    let mut p: i64 = 2;
    while p.checked_mul(p).map_or(false, |pp| pp <= rem) {
        if rem % p == 0 {
            let mut e = 0;
            while rem % p == 0 {
                rem /= p;
                e += 1;
            }
            factors.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if rem > 1 {
        factors.push((rem, 1));
    }
    Ok(Factorization { value: n, factors })
}

/// Divisors of n in increasing order.
pub fn divisors(n: i64) -> Result<Vec<i64>> {
    let f = factor(n)?;
    let mut divs = vec![1i64];
    for &(p, e) in &f.factors {
        let mut next = Vec::with_capacity(divs.len() * (e as usize + 1));
        for &d in &divs {
            let mut pk = 1i64;
            for _ in 0..=e {
                next.push(d * pk);
                pk = pk.saturating_mul(p);
            }
        }
        divs = next;
    }
    divs.sort_unstable();
    Ok(divs)
}

pub fn mobius(n: i64) -> Result<i64> {
    let f = factor(n)?;
    if f.factors.iter().any(|&(_, e)| e > 1) {
        return Ok(0);
    }
    Ok(if f.factors.len() % 2 == 0 { 1 } else { -1 })
}

/// Number of distinct prime divisors.
pub fn omega(n: i64) -> Result<u32> {
    Ok(factor(n)?.factors.len() as u32)
}

/// Number of divisors.
pub fn tau(n: i64) -> Result<i64> {
    Ok(factor(n)?
        .factors
        .iter()
        .map(|&(_, e)| e as i64 + 1)
        .product())
}

pub fn is_squarefree(n: i64) -> Result<bool> {
    if n == 0 {
        return Ok(false);
    }
    Ok(factor(n.abs())?.factors.iter().all(|&(_, e)| e == 1))
}

/// Inverse of a modulo n, as the least nonnegative residue.
pub fn inv_mod(a: i64, n: i64) -> Result<i64> {
    if n < 1 {
        return Err(Error::Domain(format!("inv_mod requires n >= 1, got {n}")));
    }
    if n == 1 {
        return Ok(0);
    }
    let (mut r0, mut r1) = (n, a.rem_euclid(n));
    let (mut t0, mut t1) = (0i64, 1i64);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 != 1 {
        return Err(Error::Domain(format!("inv_mod({a}, {n}): gcd = {r0} > 1")));
    }
    Ok(t0.rem_euclid(n))
}

/// Full Kronecker symbol (a/n), including the n <= 0 and even-n conventions.
pub fn kronecker(a: i64, n: i64) -> i64 {
    assert!(!(a == 0 && n == 0), "kronecker(0, 0) is undefined");
    if n == 0 {
        return if a == 1 || a == -1 { 1 } else { 0 };
    }
    let mut result = 1i64;
    let mut n = n;
    if n < 0 {
        n = -n;
        if a < 0 {
            result = -result;
        }
    }
    // factor out twos of n
    while n % 2 == 0 {
        n /= 2;
        match a.rem_euclid(8) {
            1 | 7 => {}
            3 | 5 => result = -result,
            _ => return 0, // a even
        }
    }
    // now n odd positive: Jacobi symbol via reciprocity
    let mut a = a.rem_euclid(n);
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if n % 8 == 3 || n % 8 == 5 {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

/// Exponent s in eps_d = i^s: 0 if d = 1 (mod 4), 1 if d = 3 (mod 4).
pub fn eps_exponent(d: i64) -> Result<u32> {
    if d % 2 == 0 {
        return Err(Error::Domain(format!("eps requires odd d, got {d}")));
    }
    Ok(if d.rem_euclid(4) == 1 { 0 } else { 1 })
}

/// eps_d = 1 if d = 1 (mod 4), i if d = 3 (mod 4).
pub fn eps(d: i64, ctx: &Ctx) -> Result<AlgValue> {
    Ok(ctx.i_power(eps_exponent(d)? as i64))
}

/// True iff D is a fundamental discriminant (including D = 1).
pub fn is_fundamental_discriminant(d: i64) -> bool {
    if d == 0 {
        return false;
    }
    let r4 = d.rem_euclid(4);
    if r4 == 1 {
        return is_squarefree(d).unwrap_or(false);
    }
    if r4 == 0 {
        let q = d / 4;
        let qr = q.rem_euclid(4);
        return (qr == 2 || qr == 3) && is_squarefree(q).unwrap_or(false);
    }
    false
}

/// Unique (m0, v) with m = m0 v^2, v > 0, and (-1)^((g-1)/2) m0 fundamental.
pub fn fundamental_decomposition(m: i64, g: i64) -> Result<FundamentalDecomposition> {
    if g < 1 || g % 2 == 0 {
        return Err(Error::Domain(format!("rank g must be odd positive, got {g}")));
    }
    let sign_exponent = (((g - 1) / 2) % 2) as u32;
    let sign = if sign_exponent == 0 { 1 } else { -1 };
    if (sign * m).rem_euclid(4) > 1 {
        return Err(Error::Domain(format!(
            "(-1)^((g-1)/2) m = {} is not 0,1 mod 4",
            sign * m
        )));
    }
    if m == 0 {
        return Err(Error::Domain("m = 0 has no fundamental decomposition".into()));
    }
    let mut v = 1i64;
    while v * v <= m.abs() {
        if m % (v * v) == 0 {
            let m0 = m / (v * v);
            if is_fundamental_discriminant(sign * m0) {
                return Ok(FundamentalDecomposition {
                    m,
                    m0,
                    v,
                    sign_exponent,
                });
            }
        }
        v += 1;
    }
    Err(Error::Domain(format!(
        "no fundamental decomposition of m = {m} with g = {g}"
    )))
}

/// R(y, c): number of x mod c with x^2 = y (mod c).
pub fn count_sqrt(y: i64, c: i64) -> Result<i64> {
    if c < 1 {
        return Err(Error::Domain(format!("count_sqrt requires c >= 1, got {c}")));
    }
    let y = y.rem_euclid(c);
    let mut count = 0;
    for x in 0..c {
        if (x * x - y).rem_euclid(c) == 0 {
            count += 1;
        }
    }
    Ok(count)
}

/// p-adic valuation of n (n != 0).
pub fn valuation(n: i64, p: i64) -> u32 {
    assert!(n != 0 && p >= 2);
    let mut n = n.abs();
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}
