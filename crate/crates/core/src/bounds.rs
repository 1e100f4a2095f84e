//! Empirical verification of the square-root cancellation bound
//! |S_{alpha,beta}(m,n,c)| <= C(L) 2^{omega(c)} tau((v,c)) (m_0 n, c)^{1/2} c^{1/2}
//! and the supporting R(y,c) estimates, where m = m_0 v^2 with m_0 times
//! the appropriate sign fundamental and (v, det) = 1.
//!
//! The constant C(L) cannot be falsified pointwise; reports carry the
//! ratio |S| / rhs so sweeps can record per-lattice maxima and guard
//! against regressions.

use crate::error::{Error, Result};
use crate::kloosterman::KloostermanEvaluator;
use crate::lattice::DiscElement;
use crate::numeric::{AlgValue, Ctx};
use crate::numth::{count_sqrt, factor, gcd, inv_mod, omega, tau, valuation, FundamentalDecomposition};
use rug::{Float, Rational};

/// Both sides of the bound at one parameter point.
#[derive(Clone, Debug)]
pub struct BoundReport {
    pub m: i64,
    pub m0: i64,
    pub v: i64,
    pub n: i64,
    pub c: i64,
    pub abs_s: Float,
    pub rhs: Float,
    pub ratio: f64,
}

/// Evaluate |S_{alpha,beta}(m,n,c)| against the bound's right-hand side.
///
/// `decomposition` must be the decomposition of m for the lattice's rank;
/// the hypotheses (v, det) = 1 and alpha = v alpha' are checked here,
/// with alpha' recovered by division in the discriminant group.
pub fn weil_bound_report(
    ev: &KloostermanEvaluator,
    alpha: &DiscElement,
    beta: &DiscElement,
    decomposition: &FundamentalDecomposition,
    n: i64,
    c: i64,
    k: &Rational,
) -> Result<BoundReport> {
    let group = ev.group();
    let det = group.lattice().det();
    let m = decomposition.m;
    let v = decomposition.v;
    if gcd(v, det) != 1 {
        return Err(Error::Domain(format!("(v, det) = ({v}, {det}) must be coprime")));
    }
    // alpha' with v alpha' = alpha; existence is guaranteed by (v, det) = 1
    let alpha_prime = group.divide_by(alpha, v)?;
    if group.scale(&alpha_prime, v) != *alpha {
        return Err(Error::Internal("division in the discriminant group failed".into()));
    }
    let s = ev.sum(alpha, beta, m, n, c, k)?;
    let abs_s = s.abs();
    let prec = ev.ctx().prec();
    let pow2 = Float::with_val(prec, 1u32) << omega(c)?;
    let tau_vc = Float::with_val(prec, tau(gcd(v, c))?);
    let gcd_part = Float::with_val(prec, gcd(decomposition.m0.saturating_mul(n), c)).sqrt();
    let root_c = Float::with_val(prec, c).sqrt();
    let rhs = pow2 * tau_vc * gcd_part * root_c;
    let ratio = (abs_s.clone() / rhs.clone()).to_f64();
    if !ratio.is_finite() {
        return Err(Error::Internal("non-finite bound ratio".into()));
    }
    Ok(BoundReport {
        m,
        m0: decomposition.m0,
        v,
        n,
        c,
        abs_s,
        rhs,
        ratio,
    })
}

/// Largest observed ratio over a corpus of reports.
pub fn estimate_constant(reports: &[BoundReport]) -> Result<f64> {
    if reports.is_empty() {
        return Err(Error::Domain("empty bound corpus".into()));
    }
    Ok(reports
        .iter()
        .map(|r| r.ratio)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Empirical exponent A with C(L) <= |2 det|^{A g}, from per-lattice
/// maxima given as (|2 det|, g, max ratio).
pub fn empirical_exponent(maxima: &[(i64, usize, f64)]) -> Result<f64> {
    if maxima.is_empty() {
        return Err(Error::Domain("empty corpus".into()));
    }
    let mut a = f64::NEG_INFINITY;
    for &(two_delta, g, ratio) in maxima {
        if two_delta.abs() < 2 || ratio <= 0.0 {
            continue;
        }
        a = a.max(ratio.ln() / (g as f64 * (two_delta.abs() as f64).ln()));
    }
    if a.is_finite() {
        Ok(a)
    } else {
        Err(Error::Domain("no usable corpus point".into()))
    }
}

/// Classical Kloosterman sum S(m, n, c) = sum_{d (c)^x} e((m d^-1 + n d)/c).
pub fn classical_kloosterman(m: i64, n: i64, c: i64, ctx: &Ctx) -> Result<AlgValue> {
    if c < 1 {
        return Err(Error::Domain(format!("modulus c = {c} must be positive")));
    }
    let mut acc = ctx.zero();
    for d in 0..c {
        if gcd(d, c) != 1 {
            continue;
        }
        let a = inv_mod(d, c)?;
        let arg = Rational::from((m * a + n * d, c));
        acc = acc + &ctx.e_frac(&arg);
    }
    Ok(acc)
}

/// Check R(y, c) <= 2^{omega(c)+1} (y, c)^{1/2}, doubled for even c,
/// by comparing squares in exact integers.
pub fn check_sqrt_count_bound(y: i64, c: i64) -> Result<bool> {
    let r = count_sqrt(y, c)?;
    let mut rhs2: i128 = 4i128.pow(omega(c)? + 1) * gcd(y, c) as i128;
    if c % 2 == 0 {
        rhs2 *= 4;
    }
    Ok((r as i128 * r as i128) <= rhs2)
}

/// Check R(y, p^lambda) <= 2 p^{min(mu, lambda)/2} for odd p, p^mu || y.
pub fn check_sqrt_count_prime_power(y: i64, p: i64, lambda: u32) -> Result<bool> {
    if p < 3 || p % 2 == 0 || factor(p)?.factors != vec![(p, 1)] {
        return Err(Error::Domain(format!("p = {p} must be an odd prime")));
    }
    let pl = (p as i128).pow(lambda);
    if pl > 10_000_000 {
        return Err(Error::Budget(format!("p^lambda = {pl} too large")));
    }
    let pl = pl as i64;
    let mu = if y == 0 { lambda } else { valuation(y, p).min(lambda) };
    let r = count_sqrt(y, pl)?;
    Ok((r as i128 * r as i128) <= 4 * (p as i128).pow(mu))
}
