//! The metaplectic double cover of SL_2(Z) and the Weil representation
//! attached to an even lattice.
//!
//! Elements of the cover are pairs (gamma, phi) with phi^2(tau) =
//! c tau + d; we store the branch as a sign relative to the principal
//! square root. Products resolve the branch numerically at tau = i, where
//! |c i + d| >= 1 keeps the two branches well separated.
//!
//! The representation is evaluated two independent ways: by multiplying
//! out the images of the generators S and T along a word, and in closed
//! form by the finite exponential sum over L/cL. Agreement of the two is
//! one of the main internal cross-checks of the crate.

use crate::error::{Error, Result};
use crate::lattice::{DiscElement, DiscGroup};
use crate::numeric::{AlgValue, Ctx};
use rug::ops::Pow;
use rug::Rational;

/// Precision used for branch bookkeeping. The compared quantities are
/// always +1 vs -1, so anything beyond a few bits is headroom.
const BRANCH_PREC: u32 = 128;

/// An element of the metaplectic double cover: an integral matrix
/// (a b; c d) of determinant 1 together with a choice of square root of
/// c tau + d, recorded as `sign` times the principal branch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MetaplecticElement {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
    pub sign: i8,
}

/// One letter of a word in the generators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    /// T^n = (1 n; 0 1) with phi = 1.
    T(i64),
    /// S = (0 -1; 1 0) with phi(tau) = principal sqrt(tau).
    S,
}

impl MetaplecticElement {
    pub fn new(a: i64, b: i64, c: i64, d: i64, sign: i8) -> Result<Self> {
        let det = a as i128 * d as i128 - b as i128 * c as i128;
        if det != 1 {
            return Err(Error::Domain(format!(
                "matrix ({a} {b}; {c} {d}) has determinant {det}, expected 1"
            )));
        }
        if sign != 1 && sign != -1 {
            return Err(Error::Domain("branch sign must be +1 or -1".into()));
        }
        Ok(MetaplecticElement { a, b, c, d, sign })
    }

    pub fn identity() -> Self {
        MetaplecticElement { a: 1, b: 0, c: 0, d: 1, sign: 1 }
    }

    pub fn gen_t() -> Self {
        MetaplecticElement { a: 1, b: 1, c: 0, d: 1, sign: 1 }
    }

    pub fn t_power(n: i64) -> Self {
        MetaplecticElement { a: 1, b: n, c: 0, d: 1, sign: 1 }
    }

    pub fn gen_s() -> Self {
        MetaplecticElement { a: 0, b: -1, c: 1, d: 0, sign: 1 }
    }

    pub fn step(s: Step) -> Self {
        match s {
            Step::T(n) => Self::t_power(n),
            Step::S => Self::gen_s(),
        }
    }

    /// phi(i) for this element.
    pub fn phi_at_i(&self, ctx: &Ctx) -> AlgValue {
        let z = AlgValue::from_parts(ctx, self.d, self.c); // c*i + d
        let r = z.sqrt_principal();
        if self.sign == 1 {
            r
        } else {
            -r
        }
    }

    /// Group law (g1 g2, phi1(g2 tau) phi2(tau)); the resulting branch is
    /// resolved by evaluating both sides at tau = i.
    pub fn multiply(&self, rhs: &MetaplecticElement) -> Result<MetaplecticElement> {
        let mul = |x: i64, y: i64| x as i128 * y as i128;
        let a = mul(self.a, rhs.a) + mul(self.b, rhs.c);
        let b = mul(self.a, rhs.b) + mul(self.b, rhs.d);
        let c = mul(self.c, rhs.a) + mul(self.d, rhs.c);
        let d = mul(self.c, rhs.b) + mul(self.d, rhs.d);
        let to64 = |x: i128| -> Result<i64> {
            i64::try_from(x).map_err(|_| Error::Domain("matrix product overflows i64".into()))
        };
        let (a, b, c, d) = (to64(a)?, to64(b)?, to64(c)?, to64(d)?);

        let ctx = Ctx::new(BRANCH_PREC);
        // g2 i = (a2 i + b2) / (c2 i + d2)
        let num = AlgValue::from_parts(&ctx, rhs.b, rhs.a);
        let den = AlgValue::from_parts(&ctx, rhs.d, rhs.c);
        let g2i = num.div(&den);
        // phi1(g2 i) = sign1 * sqrt(c1 (g2 i) + d1)
        let arg1 = g2i.scale_i64(self.c) + &ctx.from_i64(self.d);
        let mut w = arg1.sqrt_principal() * rhs.phi_at_i(&ctx);
        if self.sign == -1 {
            w = -w;
        }
        let principal = AlgValue::from_parts(&ctx, d, c).sqrt_principal();
        let ratio = w.div(&principal);
        debug_assert!(ratio.im().clone().abs() < 1e-10);
        let sign = if *ratio.re() > 0 { 1 } else { -1 };
        MetaplecticElement::new(a, b, c, d, sign)
    }

    pub fn inverse(&self) -> Result<MetaplecticElement> {
        // (d -b; -c a) with the branch fixed so that g g^{-1} = identity
        let cand = MetaplecticElement::new(self.d, -self.b, -self.c, self.a, 1)?;
        let prod = self.multiply(&cand)?;
        let sign = if prod.sign == 1 { 1 } else { -1 };
        MetaplecticElement::new(self.d, -self.b, -self.c, self.a, sign)
    }

    /// A word s1 s2 ... sk in T-powers and S whose matrix product equals
    /// this matrix exactly. The branch is not encoded in the word; compare
    /// the word's product against `self` to recover it.
    pub fn decompose(&self) -> Vec<Step> {
        let mut steps = Vec::new();
        decompose_matrix(self.a, self.b, self.c, self.d, &mut steps);
        steps
    }
}

fn decompose_matrix(a: i64, b: i64, c: i64, d: i64, out: &mut Vec<Step>) {
    if c == 0 {
        // determinant 1 forces a = d = +-1
        if a == 1 {
            if b != 0 {
                out.push(Step::T(b));
            }
        } else {
            // -T^{-b}: S^2 = -I, then T^{-b}
            out.push(Step::S);
            out.push(Step::S);
            if b != 0 {
                out.push(Step::T(-b));
            }
        }
        return;
    }
    // choose n with |a - n c| <= |c| / 2; then gamma = T^n S gamma''
    // where gamma'' = S^{-1} T^{-n} gamma has lower-left -(a - n c).
    let n = div_round(a, c);
    let a2 = a - n * c;
    let b2 = b - n * d;
    if n != 0 {
        out.push(Step::T(n));
    }
    out.push(Step::S);
    // S^{-1} (a2 b2; c d) = (c d; -a2 -b2)
    decompose_matrix(c, d, -a2, -b2, out);
}

/// Nearest integer to a/c (ties toward even quotient magnitude are fine;
/// any rounding with |a - n c| <= |c|/2 works).
fn div_round(a: i64, c: i64) -> i64 {
    let q = (a as f64) / (c as f64);
    let n = q.round() as i64;
    // guard against f64 rounding at the boundary
    for cand in [n - 1, n, n + 1] {
        if 2 * (a - cand * c).abs() <= c.abs() {
            return cand;
        }
    }
    n
}

impl AlgValue {
    fn from_parts(ctx: &Ctx, re: i64, im: i64) -> AlgValue {
        ctx.from_i64(re) + &(ctx.i_power(1).scale_i64(im))
    }
}

/// A matrix of the Weil representation in the basis of discriminant-group
/// cosets, in the canonical element order of the group.
/// `entries[i][j]` is the coefficient of element i in the image of
/// element j.
#[derive(Clone, Debug)]
pub struct RhoMatrix {
    pub entries: Vec<Vec<AlgValue>>,
}

impl RhoMatrix {
    fn identity(n: usize, ctx: &Ctx) -> Self {
        RhoMatrix {
            entries: (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| if i == j { ctx.one() } else { ctx.zero() })
                        .collect()
                })
                .collect(),
        }
    }

    fn mul(&self, rhs: &RhoMatrix, ctx: &Ctx) -> RhoMatrix {
        let n = self.entries.len();
        let entries = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let mut acc = ctx.zero();
                        for k in 0..n {
                            acc = acc + &(&self.entries[i][k] * &rhs.entries[k][j]);
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        RhoMatrix { entries }
    }

    fn scale(&mut self, s: &AlgValue) {
        for row in self.entries.iter_mut() {
            for e in row.iter_mut() {
                *e = e.clone() * s;
            }
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> &AlgValue {
        &self.entries[i][j]
    }
}

/// Image of T: the diagonal matrix e(q(alpha)).
pub fn rho_t(group: &DiscGroup, ctx: &Ctx) -> RhoMatrix {
    let n = group.order();
    let mut m = RhoMatrix::identity(n, ctx);
    for (i, alpha) in group.elements().iter().enumerate() {
        m.entries[i][i] = ctx.e_frac(&group.q(alpha));
    }
    m
}

/// Image of S: i^{(bminus - bplus)/2} / sqrt(|det|) times e(-<alpha, beta>).
pub fn rho_s(group: &DiscGroup, ctx: &Ctx) -> RhoMatrix {
    let sig = group.lattice().signature();
    let front = ctx.e_frac(&Rational::from((sig.1 as i64 - sig.0 as i64, 8)));
    let root = ctx
        .sqrt_pos_i64(group.lattice().det().abs())
        .expect("|det| > 0");
    let front = front.div_float(root.re());
    let entries = group
        .elements()
        .iter()
        .map(|alpha| {
            group
                .elements()
                .iter()
                .map(|beta| {
                    let phase = -group.bilinear(alpha, beta);
                    ctx.e_frac(&phase) * &front
                })
                .collect()
        })
        .collect();
    RhoMatrix { entries }
}

/// rho(gamma~) by decomposing the element into a word in S and T and
/// multiplying out the generator images. Works for every element of the
/// cover, including c <= 0 and both branches.
pub fn rho_generators(group: &DiscGroup, elem: &MetaplecticElement, ctx: &Ctx) -> Result<RhoMatrix> {
    let steps = elem.decompose();
    let n = group.order();
    let s_mat = rho_s(group, ctx);
    let mut prod = RhoMatrix::identity(n, ctx);
    let mut word = MetaplecticElement::identity();
    for step in &steps {
        match *step {
            Step::T(k) => {
                // right-multiplying by the diagonal rho(T)^k scales columns
                for (j, beta) in group.elements().iter().enumerate() {
                    let phase = ctx.e_frac(&(group.q(beta) * Rational::from(k)));
                    for i in 0..n {
                        prod.entries[i][j] = prod.entries[i][j].clone() * &phase;
                    }
                }
            }
            Step::S => {
                prod = prod.mul(&s_mat, ctx);
            }
        }
        word = word.multiply(&MetaplecticElement::step(*step))?;
    }
    if (word.a, word.b, word.c, word.d) != (elem.a, elem.b, elem.c, elem.d) {
        return Err(Error::Internal("generator word does not reproduce the matrix".into()));
    }
    if word.sign != elem.sign {
        // off by the central element (I, -1), which acts by the scalar
        // e((bminus - bplus)/2) = (-1)^rank
        let sig = group.lattice().signature();
        let z2 = ctx.e_frac(&Rational::from((sig.1 as i64 - sig.0 as i64, 2)));
        prod.scale(&z2);
    }
    Ok(prod)
}

/// Single coefficient rho_{alpha beta}(gamma~) in closed form, for c > 0:
/// i^{(bminus-bplus)/2} c^{-g/2} |det|^{-1/2}
///   sum_{r in L/cL} e_c(a q(alpha + r) - <beta, alpha + r> + d q(beta)).
pub fn rho_shintani_entry(
    group: &DiscGroup,
    elem: &MetaplecticElement,
    alpha: &DiscElement,
    beta: &DiscElement,
    ctx: &Ctx,
) -> Result<AlgValue> {
    if elem.c <= 0 {
        return Err(Error::Domain(format!(
            "closed-form coefficient requires c > 0, got c = {}",
            elem.c
        )));
    }
    let lat = group.lattice();
    let g = lat.rank();
    let c = elem.c;
    let terms = (c as i128).checked_pow(g as u32).unwrap_or(i128::MAX);
    if terms > 100_000_000 {
        return Err(Error::Budget(format!(
            "coset sum has {terms} terms, cap 100000000"
        )));
    }
    let d_q_beta = lat.q_raw(beta.coords()) * Rational::from(elem.d);
    let mut acc = ctx.zero();
    let mut r = vec![0i64; g];
    loop {
        let shifted: Vec<Rational> = alpha
            .coords()
            .iter()
            .zip(&r)
            .map(|(x, &k)| Rational::from(x) + Rational::from(k))
            .collect();
        let mut arg = lat.q_raw(&shifted) * Rational::from(elem.a);
        arg -= lat.bilinear_raw(beta.coords(), &shifted);
        arg += Rational::from(&d_q_beta);
        arg /= Rational::from(c);
        acc = acc + &ctx.e_frac(&arg);
        let mut k = 0;
        loop {
            if k == g {
                let sig = lat.signature();
                let mut front = ctx.e_frac(&Rational::from((sig.1 as i64 - sig.0 as i64, 8)));
                if elem.sign == -1 {
                    front = front
                        * ctx.e_frac(&Rational::from((sig.1 as i64 - sig.0 as i64, 2)));
                }
                // c^{g/2} |det|^{1/2} = sqrt(c^g |det|)
                let scale = ctx.sqrt_pos(&Rational::from(
                    rug::Integer::from(c).pow(g as u32) * rug::Integer::from(lat.det().abs()),
                ))?;
                return Ok((acc * front).div_float(scale.re()));
            }
            r[k] += 1;
            if r[k] < c {
                break;
            }
            r[k] = 0;
            k += 1;
        }
    }
}

/// Full matrix of closed-form coefficients; requires c > 0.
pub fn rho_shintani(group: &DiscGroup, elem: &MetaplecticElement, ctx: &Ctx) -> Result<RhoMatrix> {
    let n = group.order();
    let mut entries = Vec::with_capacity(n);
    for alpha in group.elements() {
        let mut row = Vec::with_capacity(n);
        for beta in group.elements() {
            row.push(rho_shintani_entry(group, elem, alpha, beta, ctx)?);
        }
        entries.push(row);
    }
    Ok(RhoMatrix { entries })
}

/// The integer sigma = k + (bminus - bplus)/2, defined exactly when twice
/// the weight has the same parity as the signature difference.
pub fn sigma_weight(sig: (u32, u32), k: &Rational) -> Result<i64> {
    let s = Rational::from(k) + Rational::from((sig.1 as i64 - sig.0 as i64, 2));
    if !s.is_integer() {
        return Err(Error::Domain(format!(
            "weight {k} is incompatible with signature ({}, {})",
            sig.0, sig.1
        )));
    }
    s.numer()
        .to_i64()
        .ok_or_else(|| Error::Internal("sigma overflows i64".into()))
}

/// The natural weight (bplus - bminus)/2, for which sigma = 0.
pub fn natural_weight(sig: (u32, u32)) -> Rational {
    Rational::from((sig.0 as i64 - sig.1 as i64, 2))
}
