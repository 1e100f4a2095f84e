//! Kloosterman sums: the generalized sums attached to the Weil
//! representation of an even lattice, and the classical scalar sums for
//! the theta and eta multiplier systems (including the plus-space
//! combination).
//!
//! The lattice sum is
//!   S_{alpha,beta}(m,n,c) = e^{-pi i k/2} sum over d in (Z/c)^x of
//!       conj(rho_{alpha beta}(gamma~)) e((m a + n d) / (2 det c)),
//! where gamma = (a b; c d) is any integral matrix with bottom row (c d)
//! and gamma~ its principal-branch lift. Independence of the choice of a
//! follows from the T-shift property of rho together with the index
//! conditions m/(2 det) - q(alpha), n/(2 det) - q(beta) in Z.

use crate::error::{Error, Result};
use crate::lattice::{DiscElement, DiscGroup};
use crate::numeric::{AlgValue, Ctx};
use crate::numth::{eps, gcd, inv_mod, kronecker};
use crate::weilrep::{rho_shintani_entry, MetaplecticElement};
use rug::{Integer, Rational};
use std::collections::HashMap;
use std::sync::Mutex;

/// Dedekind sum s(d, c) = sum_{j=1}^{c-1} ((j/c)) ((dj/c)), exact.
pub fn dedekind_sum(d: i64, c: i64) -> Result<Rational> {
    if c < 1 {
        return Err(Error::Domain(format!("dedekind_sum requires c >= 1, got {c}")));
    }
    if gcd(d, c) != 1 {
        return Err(Error::Domain(format!("dedekind_sum requires (d, c) = 1, got ({d}, {c})")));
    }
    let saw = |x: Rational| -> Rational {
        if x.is_integer() {
            Rational::new()
        } else {
            let f = x.clone().floor();
            x - f - Rational::from((1, 2))
        }
    };
    let mut s = Rational::new();
    for j in 1..c {
        s += saw(Rational::from((j, c))) * saw(Rational::from(((d * j) % c, c)));
    }
    Ok(s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MultiplierSystem {
    /// Weight 1/2 on Gamma_0(4): nu(gamma) = (c|d) eps_d^{-1}.
    Theta,
    /// Weight 1/2 on SL_2(Z):
    /// nu(gamma) = e((a+d)/(24c) - s(d,c)/2 - 1/8) for c > 0.
    Eta,
}

impl MultiplierSystem {
    /// The fractional part of the index shift: nu(T) = e(shift).
    pub fn index_shift(&self) -> Rational {
        match self {
            MultiplierSystem::Theta => Rational::new(),
            MultiplierSystem::Eta => Rational::from((1, 24)),
        }
    }
}

/// nu(gamma) for gamma = (a b; c d) with c > 0.
pub fn multiplier_value(
    system: MultiplierSystem,
    a: i64,
    b: i64,
    c: i64,
    d: i64,
    ctx: &Ctx,
) -> Result<AlgValue> {
    if a as i128 * d as i128 - b as i128 * c as i128 != 1 {
        return Err(Error::Domain("matrix determinant must be 1".into()));
    }
    if c < 1 {
        return Err(Error::Domain(format!("multiplier_value requires c >= 1, got {c}")));
    }
    match system {
        MultiplierSystem::Theta => {
            if c % 4 != 0 {
                return Err(Error::Domain(format!(
                    "theta multiplier lives on Gamma_0(4); c = {c}"
                )));
            }
            Ok(eps(d, ctx)?.conj().scale_i64(kronecker(c, d)))
        }
        MultiplierSystem::Eta => {
            let arg = Rational::from((a + d, 24 * c)) - dedekind_sum(d, c)? / Rational::from(2)
                - Rational::from((1, 8));
            Ok(ctx.e_frac(&arg))
        }
    }
}

/// S(mu, nu_idx, c, nu) = sum over d in (Z/c)^x of conj(nu(gamma))
/// e((mu a + nu_idx d)/c). The indices must satisfy the consistency
/// condition mu = nu_idx = index_shift (mod 1).
pub fn kloosterman_multiplier(
    mu: &Rational,
    nu_idx: &Rational,
    c: i64,
    system: MultiplierSystem,
    ctx: &Ctx,
) -> Result<AlgValue> {
    if c < 1 {
        return Err(Error::Domain(format!("modulus c = {c} must be positive")));
    }
    let shift = system.index_shift();
    for (name, x) in [("m", mu), ("n", nu_idx)] {
        if !(Rational::from(x) - &shift).is_integer() {
            return Err(Error::Domain(format!(
                "index {name} = {x} violates the multiplier consistency condition"
            )));
        }
    }
    let mut acc = ctx.zero();
    for d in 0..c {
        if gcd(d, c) != 1 {
            continue;
        }
        let a = inv_mod(d, c)?;
        let b = (a as i128 * d as i128 - 1) / c as i128;
        let b = i64::try_from(b).map_err(|_| Error::Domain("entry overflow".into()))?;
        let nu = multiplier_value(system, a, b, c, d, ctx)?;
        let arg = (Rational::from(mu) * Rational::from(a)
            + Rational::from(nu_idx) * Rational::from(d))
            / Rational::from(c);
        acc = acc + &(nu.conj() * ctx.e_frac(&arg));
    }
    Ok(acc)
}

/// Plus-space sum S^+(m, n, 4c, nu_theta) =
/// (1 - i) S(m, n, 4c, nu_theta) * (2 if c odd, 1 if c even).
pub fn kloosterman_plus(m: i64, n: i64, four_c: i64, ctx: &Ctx) -> Result<AlgValue> {
    if four_c < 4 || four_c % 4 != 0 {
        return Err(Error::Domain(format!(
            "plus-space modulus must be a positive multiple of 4, got {four_c}"
        )));
    }
    let c = four_c / 4;
    let s = kloosterman_multiplier(
        &Rational::from(m),
        &Rational::from(n),
        four_c,
        MultiplierSystem::Theta,
        ctx,
    )?;
    let one_minus_i = ctx.one() - ctx.i_power(1);
    let factor = if c % 2 == 1 { 2 } else { 1 };
    Ok((s * one_minus_i).scale_i64(factor))
}

/// Evaluator for the lattice Kloosterman sums, caching the representation
/// coefficients rho_{alpha beta}(gamma~_{c,d}), which do not depend on the
/// indices m, n.
pub struct KloostermanEvaluator {
    group: DiscGroup,
    ctx: Ctx,
    cache: Mutex<HashMap<(i64, i64, usize, usize), AlgValue>>,
}

impl KloostermanEvaluator {
    pub fn new(group: DiscGroup, ctx: Ctx) -> Self {
        KloostermanEvaluator {
            group,
            ctx,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn group(&self) -> &DiscGroup {
        &self.group
    }

    pub fn ctx(&self) -> &Ctx {
        &self.ctx
    }

    /// rho_{alpha beta} at the principal lift of the canonical matrix with
    /// bottom row (c, d): a = d^{-1} mod c in [0, c), b = (ad - 1)/c.
    pub fn rho_entry(&self, c: i64, d: i64, alpha: &DiscElement, beta: &DiscElement) -> Result<AlgValue> {
        let ai = self.group.index_of(alpha)?;
        let bi = self.group.index_of(beta)?;
        let key = (c, d, ai, bi);
        if let Some(v) = self.cache.lock().unwrap().get(&key) {
            return Ok(v.clone());
        }
        let a = inv_mod(d, c)?;
        let b = (a as i128 * d as i128 - 1) / c as i128;
        let b = i64::try_from(b).map_err(|_| Error::Domain("entry overflow".into()))?;
        let elem = MetaplecticElement::new(a, b, c, d, 1)?;
        let v = rho_shintani_entry(&self.group, &elem, alpha, beta, &self.ctx)?;
        self.cache.lock().unwrap().insert(key, v.clone());
        Ok(v)
    }

    /// The sum without the e^{-pi i k/2} prefactor.
    pub fn bare_sum(
        &self,
        alpha: &DiscElement,
        beta: &DiscElement,
        m: i64,
        n: i64,
        c: i64,
    ) -> Result<AlgValue> {
        if c < 1 {
            return Err(Error::Domain(format!("modulus c = {c} must be positive")));
        }
        if !self.group.check_index(alpha, m) {
            return Err(Error::Domain(format!(
                "index m = {m} is incompatible with alpha (m/(2 det) - q(alpha) must be an integer)"
            )));
        }
        if !self.group.check_index(beta, n) {
            return Err(Error::Domain(format!(
                "index n = {n} is incompatible with beta"
            )));
        }
        let two_delta_c = Rational::from(Integer::from(2 * self.group.lattice().det()) * Integer::from(c));
        let mut acc = self.ctx.zero();
        for d in 0..c {
            if gcd(d, c) != 1 {
                continue;
            }
            let a = inv_mod(d, c)?;
            let rho = self.rho_entry(c, d, alpha, beta)?;
            let num = Integer::from(m) * Integer::from(a) + Integer::from(n) * Integer::from(d);
            let arg = Rational::from(num) / Rational::from(&two_delta_c);
            acc = acc + &(rho.conj() * self.ctx.e_frac(&arg));
        }
        Ok(acc)
    }

    /// S_{alpha,beta}(m, n, c) for a weight k with k + (bminus - bplus)/2
    /// an integer.
    pub fn sum(
        &self,
        alpha: &DiscElement,
        beta: &DiscElement,
        m: i64,
        n: i64,
        c: i64,
        k: &Rational,
    ) -> Result<AlgValue> {
        let sig = self.group.lattice().signature();
        crate::weilrep::sigma_weight(sig, k)?;
        let front = self.ctx.i_half_power(&(-Rational::from(k)))?;
        Ok(front * self.bare_sum(alpha, beta, m, n, c)?)
    }

    /// The natural weight for this lattice, (bplus - bminus)/2.
    pub fn natural_weight(&self) -> Rational {
        crate::weilrep::natural_weight(self.group.lattice().signature())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::EvenLattice;
    use crate::numeric::Tolerance;
    use rug::Float;

    fn tight(ctx: &Ctx) -> Tolerance {
        let eps = Float::with_val(ctx.prec(), Float::i_exp(1, -80));
        Tolerance { rel_eps: eps.clone(), abs_eps: eps }
    }

    #[test]
    fn dedekind_values() {
        assert_eq!(dedekind_sum(1, 3).unwrap(), Rational::from((1, 18)));
        // s(1, c) = (c-1)(c-2)/(12c)
        for c in 1..=20i64 {
            assert_eq!(
                dedekind_sum(1, c).unwrap(),
                Rational::from(((c - 1) * (c - 2), 12 * c))
            );
        }
        // reciprocity: s(d,c) + s(c,d) = -1/4 + (d/c + c/d + 1/(cd))/12
        for c in 1..=12i64 {
            for d in 1..=12i64 {
                if gcd(c, d) != 1 {
                    continue;
                }
                let lhs = dedekind_sum(d, c).unwrap() + dedekind_sum(c, d).unwrap();
                let rhs = Rational::from((-1, 4))
                    + (Rational::from((d, c)) + Rational::from((c, d)) + Rational::from((1, c * d)))
                        / Rational::from(12);
                assert_eq!(lhs, rhs, "c={c} d={d}");
            }
        }
    }

    /// Truncated q-expansions of theta and eta evaluated high in the upper
    /// half plane, used as analytic oracles for the multiplier systems.
    fn theta_at(z_re: &Rational, z_im: &Rational, ctx: &Ctx) -> AlgValue {
        // theta(z) = sum e(n^2 z)
        let mut acc = ctx.zero();
        for n in -150i64..=150 {
            acc = acc + &e_z(&Rational::from(n * n), z_re, z_im, ctx);
        }
        acc
    }

    fn eta_at(z_re: &Rational, z_im: &Rational, ctx: &Ctx) -> AlgValue {
        // eta(z) = e(z/24) prod (1 - e(nz))
        let mut acc = e_z(&Rational::from((1, 24)), z_re, z_im, ctx);
        for n in 1..=600i64 {
            acc = acc * (ctx.one() - e_z(&Rational::from(n), z_re, z_im, ctx));
        }
        acc
    }

    /// e(w z) for rational w and z = z_re + i z_im.
    fn e_z(w: &Rational, z_re: &Rational, z_im: &Rational, ctx: &Ctx) -> AlgValue {
        let phase = ctx.e_frac(&Rational::from(w * z_re));
        let decay_arg = Float::with_val(ctx.prec(), Rational::from(w * z_im))
            * Float::with_val(ctx.prec(), rug::float::Constant::Pi)
            * -2i32;
        phase.scale_float(&decay_arg.exp())
    }

    fn mobius_z(a: i64, b: i64, c: i64, d: i64, z_re: &Rational, z_im: &Rational) -> (Rational, Rational) {
        // (az + b) / (cz + d) exactly over Q(i)
        let (nr, ni) = (
            Rational::from(a) * z_re + Rational::from(b),
            Rational::from(a) * z_im,
        );
        let (dr, di) = (
            Rational::from(c) * z_re + Rational::from(d),
            Rational::from(c) * z_im,
        );
        let den = Rational::from(&dr * &dr) + Rational::from(&di * &di);
        (
            (Rational::from(&nr * &dr) + Rational::from(&ni * &di)) / Rational::from(&den),
            (Rational::from(&ni * &dr) - Rational::from(&nr * &di)) / den,
        )
    }

    fn multiplier_oracle(
        f: impl Fn(&Rational, &Rational, &Ctx) -> AlgValue,
        a: i64,
        b: i64,
        c: i64,
        d: i64,
        ctx: &Ctx,
    ) -> AlgValue {
        // z = -d/c + i keeps both z and gamma z = a/c + i/c^2 high enough
        // for the truncated series to converge to working precision.
        let z_re = Rational::from((-d, c));
        let z_im = Rational::from(1);
        let (gr, gi) = mobius_z(a, b, c, d, &z_re, &z_im);
        let num = f(&gr, &gi, ctx);
        // (cz + d)^{1/2}, principal branch
        let czd = ctx.from_rational(&(Rational::from(c) * &z_re + Rational::from(d)))
            + ctx.i_power(1).scale_rational(&(Rational::from(c) * &z_im));
        let root = czd.sqrt_principal();
        num.div(&(f(&z_re, &z_im, ctx) * root))
    }

    #[test]
    fn theta_multiplier_matches_transformation() {
        let ctx = Ctx::new(192);
        let eps_t = Float::with_val(ctx.prec(), 1e-30);
        let tol = Tolerance { rel_eps: eps_t.clone(), abs_eps: eps_t };
        for (a, b, c, d) in [(1, 0, 4, 1), (1, 1, 4, 5), (3, 1, 8, 3), (5, 1, 24, 5), (-1, 0, 4, -1)] {
            if c < 1 {
                continue;
            }
            let got = multiplier_value(MultiplierSystem::Theta, a, b, c, d, &ctx).unwrap();
            let want = multiplier_oracle(theta_at, a, b, c, d, &ctx);
            assert!(got.approx_eq(&want, &tol), "gamma = ({a} {b}; {c} {d})");
        }
    }

    #[test]
    fn eta_multiplier_matches_transformation() {
        let ctx = Ctx::new(192);
        let eps_t = Float::with_val(ctx.prec(), 1e-30);
        let tol = Tolerance { rel_eps: eps_t.clone(), abs_eps: eps_t };
        for (a, b, c, d) in [(0, -1, 1, 0), (1, 0, 1, 1), (2, 1, 3, 2), (3, 1, 5, 2), (1, 0, 6, 1)] {
            let got = multiplier_value(MultiplierSystem::Eta, a, b, c, d, &ctx).unwrap();
            let want = multiplier_oracle(eta_at, a, b, c, d, &ctx);
            assert!(got.approx_eq(&want, &tol), "gamma = ({a} {b}; {c} {d})");
        }
    }

    #[test]
    fn eta_sum_from_lattice_sums() {
        // S(m/24, n/24, c, nu_eta) as a character combination of the
        // lattice sums for <x,y> = 12xy, up to the weight prefactor:
        // the bare lattice sums reproduce the scalar sum exactly.
        let ctx = Ctx::default();
        let tol = tight(&ctx);
        let lat = EvenLattice::new(vec![vec![12]]).unwrap();
        let group = lat.discriminant_group();
        let ev = KloostermanEvaluator::new(group, ctx.clone());
        for (m, n) in [(1i64, 1i64), (1, 25), (25, 49), (49, 1)] {
            for c in 1..=10i64 {
                let scalar = kloosterman_multiplier(
                    &Rational::from((m, 24)),
                    &Rational::from((n, 24)),
                    c,
                    MultiplierSystem::Eta,
                    &ctx,
                )
                .unwrap();
                for h in [1i64, 5, 7, 11] {
                    let alpha = ev.group().cyclic_element(h).unwrap();
                    let mut acc = ctx.zero();
                    for j in 0..12i64 {
                        let chi = kronecker(12, j);
                        if chi == 0 {
                            continue;
                        }
                        let beta = ev.group().cyclic_element(j).unwrap();
                        acc = acc + &ev.bare_sum(&alpha, &beta, m, n, c).unwrap().scale_i64(chi);
                    }
                    acc = acc.scale_i64(kronecker(12, h));
                    assert!(
                        acc.approx_eq(&scalar, &tol),
                        "m={m} n={n} c={c} h={h}"
                    );
                }
            }
        }
    }

    #[test]
    fn weil_sum_is_well_defined() {
        // conjugation symmetry: S_{alpha,beta}(m,n,c) should be unchanged
        // when both alpha, beta are negated (rho commutes with the
        // involution alpha -> -alpha).
        let ctx = Ctx::default();
        let tol = tight(&ctx);
        let lat = EvenLattice::new(vec![vec![6]]).unwrap();
        let group = lat.discriminant_group();
        let ev = KloostermanEvaluator::new(group, ctx.clone());
        let k = ev.natural_weight();
        for h in 0..6i64 {
            for j in 0..6i64 {
                let alpha = ev.group().cyclic_element(h).unwrap();
                let beta = ev.group().cyclic_element(j).unwrap();
                // smallest valid indices: m/(2 det) = q(alpha) mod 1
                let m = (ev.group().q(&alpha) * Rational::from(2 * lat.det()))
                    .numer()
                    .to_i64()
                    .unwrap();
                let n = (ev.group().q(&beta) * Rational::from(2 * lat.det()))
                    .numer()
                    .to_i64()
                    .unwrap();
                for c in 1..=8i64 {
                    let s1 = ev.sum(&alpha, &beta, m, n, c, &k).unwrap();
                    let na = ev.group().neg(&alpha);
                    let nb = ev.group().neg(&beta);
                    let s2 = ev.sum(&na, &nb, m, n, c, &k).unwrap();
                    assert!(s1.approx_eq(&s2, &tol), "h={h} j={j} c={c}");
                }
            }
        }
    }

    #[test]
    fn index_preconditions_enforced() {
        let ctx = Ctx::default();
        let lat = EvenLattice::new(vec![vec![2]]).unwrap();
        let group = lat.discriminant_group();
        let half = group.cyclic_element(1).unwrap();
        let zero = group.zero();
        let ev = KloostermanEvaluator::new(group, ctx.clone());
        // alpha = 1/2: valid m = 1 mod 4; m = 2 invalid
        assert!(ev.bare_sum(&half, &zero, 2, 0, 3).is_err());
        assert!(ev.bare_sum(&half, &zero, 1, 0, 3).is_ok());
        assert!(ev.bare_sum(&half, &zero, 1, 0, 0).is_err());
        // wrong weight parity
        assert!(ev
            .sum(&half, &zero, 1, 0, 3, &Rational::from(1))
            .is_err());
    }

    #[test]
    fn plus_space_domain() {
        let ctx = Ctx::default();
        assert!(kloosterman_plus(1, 1, 6, &ctx).is_err());
        assert!(kloosterman_plus(1, 1, 4, &ctx).is_ok());
        // consistency condition for the scalar sums
        assert!(kloosterman_multiplier(
            &Rational::from((1, 2)),
            &Rational::from(1),
            4,
            MultiplierSystem::Theta,
            &ctx
        )
        .is_err());
    }
}
