//! Exact-rational formal series.
//!
//! Coefficients live in Q[g2, g3] (sparse bivariate polynomials with
//! arbitrary-precision rational coefficients), so the Weierstrass ℘
//! expansion and the differential identity can be checked symbolically;
//! numeric curves simply use constant polynomials.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::ring::{RingContext, RingElement};
use crate::{Error, Result};

/// Sentinel truncation order for exactly known series (polynomials).
pub const EXACT: i64 = i64::MAX;

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// A sparse polynomial in the curve parameters g2, g3 over Q.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamPoly {
    // (i, j) -> coefficient of g2^i g3^j; zero coefficients are not stored
    terms: BTreeMap<(u32, u32), BigRational>,
}

impl ParamPoly {
    pub fn zero() -> Self {
        ParamPoly { terms: BTreeMap::new() }
    }

    pub fn constant(c: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert((0, 0), c);
        }
        ParamPoly { terms }
    }

    pub fn from_int(n: i64) -> Self {
        Self::constant(BigRational::from_integer(BigInt::from(n)))
    }

    /// The indeterminate g2.
    pub fn g2() -> Self {
        let mut terms = BTreeMap::new();
        terms.insert((1, 0), BigRational::one());
        ParamPoly { terms }
    }

    /// The indeterminate g3.
    pub fn g3() -> Self {
        let mut terms = BTreeMap::new();
        terms.insert((0, 1), BigRational::one());
        ParamPoly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Some(c) iff the polynomial is the constant c.
    pub fn as_constant(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => self.terms.get(&(0, 0)).cloned(),
            _ => None,
        }
    }

    /// Multiplicative inverse, defined only for nonzero constants.
    pub fn inverse(&self) -> Option<ParamPoly> {
        let c = self.as_constant()?;
        if c.is_zero() {
            None
        } else {
            Some(ParamPoly::constant(c.recip()))
        }
    }

    pub fn scale(&self, c: &BigRational) -> ParamPoly {
        if c.is_zero() {
            return ParamPoly::zero();
        }
        ParamPoly {
            terms: self.terms.iter().map(|(k, v)| (*k, v * c)).collect(),
        }
    }

    pub fn eval(&self, g2: &BigRational, g3: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for (&(i, j), c) in &self.terms {
            let mut t = c.clone();
            for _ in 0..i {
                t *= g2;
            }
            for _ in 0..j {
                t *= g3;
            }
            acc += t;
        }
        acc
    }
}

impl std::ops::Add for &ParamPoly {
    type Output = ParamPoly;
    fn add(self, rhs: &ParamPoly) -> ParamPoly {
        let mut terms = self.terms.clone();
        for (k, v) in &rhs.terms {
            let e = terms.entry(*k).or_insert_with(BigRational::zero);
            *e += v;
            if e.is_zero() {
                terms.remove(k);
            }
        }
        ParamPoly { terms }
    }
}

impl std::ops::Sub for &ParamPoly {
    type Output = ParamPoly;
    fn sub(self, rhs: &ParamPoly) -> ParamPoly {
        self + &(-rhs)
    }
}

impl std::ops::Neg for &ParamPoly {
    type Output = ParamPoly;
    fn neg(self) -> ParamPoly {
        ParamPoly {
            terms: self.terms.iter().map(|(k, v)| (*k, -v)).collect(),
        }
    }
}

impl std::ops::Mul for &ParamPoly {
    type Output = ParamPoly;
    fn mul(self, rhs: &ParamPoly) -> ParamPoly {
        let mut terms: BTreeMap<(u32, u32), BigRational> = BTreeMap::new();
        for (&(i1, j1), c1) in &self.terms {
            for (&(i2, j2), c2) in &rhs.terms {
                let key = (i1 + i2, j1 + j2);
                let e = terms.entry(key).or_insert_with(BigRational::zero);
                *e += c1 * c2;
                if e.is_zero() {
                    terms.remove(&key);
                }
            }
        }
        ParamPoly { terms }
    }
}

fn fmt_rational(c: &BigRational) -> String {
    if c.denom().is_one() {
        format!("{}", c.numer())
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

impl fmt::Display for ParamPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let mut first = true;
        for (&(i, j), c) in &self.terms {
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            write!(f, "{}", fmt_rational(c))?;
            if i > 0 {
                write!(f, "*g2{}", if i > 1 { format!("^{i}") } else { String::new() })?;
            }
            if j > 0 {
                write!(f, "*g3{}", if j > 1 { format!("^{j}") } else { String::new() })?;
            }
        }
        Ok(())
    }
}

/// Parameters g2, g3 of a short Weierstrass curve, symbolic or numeric.
#[derive(Debug, Clone)]
pub struct WeierstrassParams {
    pub g2: ParamPoly,
    pub g3: ParamPoly,
}

impl WeierstrassParams {
    pub fn symbolic() -> Self {
        WeierstrassParams { g2: ParamPoly::g2(), g3: ParamPoly::g3() }
    }

    pub fn numeric(g2: BigRational, g3: BigRational) -> Self {
        WeierstrassParams {
            g2: ParamPoly::constant(g2),
            g3: ParamPoly::constant(g3),
        }
    }

    /// Numeric parameters from ring residues, via their least integer lifts.
    pub fn from_ring(g2: &RingElement, g3: &RingElement) -> Self {
        Self::numeric(
            BigRational::from_integer(g2.lift()),
            BigRational::from_integer(g3.lift()),
        )
    }
}

/// A formal Laurent series with exact coefficients and explicit truncation.
///
/// Coefficients are known on the window `[min_exp, trunc)`; exponents below
/// `min_exp` are exactly zero, exponents at or above `trunc` are unknown.
/// `trunc == EXACT` marks an exactly known polynomial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalSeries {
    min_exp: i64,
    coeffs: Vec<ParamPoly>,
    trunc: i64,
}

impl RationalSeries {
    /// Series with the given coefficients starting at `min_exp`, known up to
    /// (excluding) `trunc`. Stored coefficients beyond the list are zero.
    pub fn new(min_exp: i64, coeffs: Vec<ParamPoly>, trunc: i64) -> Self {
        assert!(trunc >= min_exp + coeffs.len() as i64, "truncation below stored window");
        RationalSeries { min_exp, coeffs, trunc }
    }

    pub fn zero() -> Self {
        RationalSeries { min_exp: 0, coeffs: Vec::new(), trunc: EXACT }
    }

    /// The exact monomial c * z^e.
    pub fn monomial(e: i64, c: ParamPoly) -> Self {
        RationalSeries { min_exp: e, coeffs: vec![c], trunc: EXACT }
    }

    pub fn identity() -> Self {
        Self::monomial(1, ParamPoly::from_int(1))
    }

    pub fn min_exp(&self) -> i64 {
        self.min_exp
    }

    /// First unknown exponent.
    pub fn trunc(&self) -> i64 {
        self.trunc
    }

    /// Coefficient at exponent `e`; panics if `e` is beyond the truncation.
    pub fn coeff(&self, e: i64) -> ParamPoly {
        self.try_coeff(e).expect("coefficient beyond truncation order")
    }

    pub fn try_coeff(&self, e: i64) -> Option<ParamPoly> {
        if e >= self.trunc {
            return None;
        }
        if e < self.min_exp || e >= self.min_exp + self.coeffs.len() as i64 {
            return Some(ParamPoly::zero());
        }
        Some(self.coeffs[(e - self.min_exp) as usize].clone())
    }

    /// Exponent of the first nonzero known coefficient, if any.
    pub fn order(&self) -> Option<i64> {
        self.coeffs
            .iter()
            .position(|c| !c.is_zero())
            .map(|i| self.min_exp + i as i64)
    }

    fn effective_order(&self) -> i64 {
        self.order().unwrap_or(self.trunc)
    }

    /// All stored coefficients are zero (the series is 0 + O(z^trunc)).
    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn truncate_to(&self, t: i64) -> RationalSeries {
        if t >= self.trunc {
            return self.clone();
        }
        let keep = ((t - self.min_exp).max(0) as usize).min(self.coeffs.len());
        RationalSeries::new(self.min_exp, self.coeffs[..keep].to_vec(), t)
    }

    fn trimmed(mut self) -> RationalSeries {
        while self.coeffs.last().map_or(false, |c| c.is_zero()) {
            self.coeffs.pop();
        }
        while self.coeffs.first().map_or(false, |c| c.is_zero()) {
            self.coeffs.remove(0);
            self.min_exp += 1;
        }
        self
    }

    pub fn scale(&self, c: &BigRational) -> RationalSeries {
        RationalSeries {
            min_exp: self.min_exp,
            coeffs: self.coeffs.iter().map(|x| x.scale(c)).collect(),
            trunc: self.trunc,
        }
    }

    pub fn scale_poly(&self, c: &ParamPoly) -> RationalSeries {
        RationalSeries {
            min_exp: self.min_exp,
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
            trunc: self.trunc,
        }
    }

    /// Multiplies by z^j.
    pub fn shift(&self, j: i64) -> RationalSeries {
        RationalSeries {
            min_exp: self.min_exp + j,
            coeffs: self.coeffs.clone(),
            trunc: if self.trunc == EXACT { EXACT } else { self.trunc + j },
        }
    }

    /// Term-by-term formal derivative.
    pub fn derivative(&self) -> RationalSeries {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c.scale(&BigRational::from_integer(BigInt::from(self.min_exp + i as i64))))
            .collect();
        RationalSeries {
            min_exp: self.min_exp - 1,
            coeffs,
            trunc: if self.trunc == EXACT { EXACT } else { self.trunc - 1 },
        }
        .trimmed()
    }

    /// Multiplicative inverse; requires a finite truncation and an
    /// invertible (nonzero constant) leading coefficient.
    pub fn invert(&self) -> Option<RationalSeries> {
        let s = self.clone().trimmed();
        let o = s.order()?;
        let lead_inv = s.coeff(o).inverse()?;
        assert!(s.trunc != EXACT, "inverse of an exact polynomial needs a truncation");
        let out_trunc = s.trunc - 2 * o;
        let n_out = (out_trunc - (-o)) as usize;
        let mut out: Vec<ParamPoly> = Vec::with_capacity(n_out);
        for n in 0..n_out {
            // exponent of this output coefficient is -o + n
            let mut acc = if n == 0 { ParamPoly::from_int(1) } else { ParamPoly::zero() };
            for (m, b) in out.iter().enumerate() {
                // b at exponent -o + m pairs with s at exponent o + (n - m)
                let a = s.coeff(o + (n - m) as i64);
                acc = &acc - &(&a * b);
            }
            out.push(&lead_inv * &acc);
        }
        Some(RationalSeries::new(-o, out, out_trunc))
    }

    pub fn pow(&self, n: u32) -> RationalSeries {
        let mut acc = Self::monomial(0, ParamPoly::from_int(1));
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// Composition self(inner); requires min_exp >= 0 and ord(inner) >= 1.
    pub fn compose(&self, inner: &RationalSeries) -> RationalSeries {
        assert!(self.min_exp >= 0, "composition needs a power series on the outside");
        let o_in = inner.effective_order();
        assert!(o_in >= 1, "composition needs an inner series of order >= 1");
        let t_out = if self.trunc == EXACT { EXACT } else { self.trunc };
        let t_res = if t_out == EXACT && inner.trunc == EXACT {
            EXACT
        } else {
            let from_outer = if t_out == EXACT { EXACT } else { t_out.saturating_mul(o_in) };
            let from_inner = inner.trunc;
            from_outer.min(from_inner)
        };
        let top = if self.trunc == EXACT {
            self.min_exp + self.coeffs.len() as i64
        } else {
            self.trunc
        };
        let mut acc = RationalSeries::zero();
        for e in (0..top).rev() {
            acc = &acc * inner;
            let c = if e < self.min_exp { ParamPoly::zero() } else { self.coeff(e) };
            acc = &acc + &RationalSeries::monomial(0, c);
        }
        acc.truncate_to(t_res)
    }
}

impl std::ops::Add for &RationalSeries {
    type Output = RationalSeries;
    fn add(self, rhs: &RationalSeries) -> RationalSeries {
        let trunc = self.trunc.min(rhs.trunc);
        let min_exp = self.min_exp.min(rhs.min_exp);
        let hi = trunc.min((self.min_exp + self.coeffs.len() as i64).max(rhs.min_exp + rhs.coeffs.len() as i64));
        let mut coeffs = Vec::new();
        let mut e = min_exp;
        while e < hi {
            let a = self.try_coeff(e).unwrap_or_else(ParamPoly::zero);
            let b = rhs.try_coeff(e).unwrap_or_else(ParamPoly::zero);
            coeffs.push(&a + &b);
            e += 1;
        }
        RationalSeries::new(min_exp, coeffs, trunc).trimmed()
    }
}

impl std::ops::Sub for &RationalSeries {
    type Output = RationalSeries;
    fn sub(self, rhs: &RationalSeries) -> RationalSeries {
        self + &(-rhs)
    }
}

impl std::ops::Neg for &RationalSeries {
    type Output = RationalSeries;
    fn neg(self) -> RationalSeries {
        RationalSeries {
            min_exp: self.min_exp,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
            trunc: self.trunc,
        }
    }
}

impl std::ops::Mul for &RationalSeries {
    type Output = RationalSeries;
    fn mul(self, rhs: &RationalSeries) -> RationalSeries {
        let o1 = self.effective_order();
        let o2 = rhs.effective_order();
        let trunc = if self.trunc == EXACT && rhs.trunc == EXACT {
            EXACT
        } else {
            let t1 = if self.trunc == EXACT { EXACT } else { self.trunc.saturating_add(o2) };
            let t2 = if rhs.trunc == EXACT { EXACT } else { rhs.trunc.saturating_add(o1) };
            t1.min(t2)
        };
        let min_exp = self.min_exp + rhs.min_exp;
        let hi = if trunc == EXACT {
            self.min_exp + self.coeffs.len() as i64 + rhs.min_exp + rhs.coeffs.len() as i64 - 1
        } else {
            trunc
        };
        let mut coeffs = Vec::new();
        for e in min_exp..hi.max(min_exp) {
            let mut acc = ParamPoly::zero();
            for (i, a) in self.coeffs.iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                let e1 = self.min_exp + i as i64;
                let e2 = e - e1;
                if e2 < rhs.min_exp || e2 >= rhs.min_exp + rhs.coeffs.len() as i64 {
                    continue;
                }
                let b = &rhs.coeffs[(e2 - rhs.min_exp) as usize];
                acc = &acc + &(a * b);
            }
            coeffs.push(acc);
        }
        RationalSeries::new(min_exp, coeffs, trunc).trimmed()
    }
}

impl std::ops::Div for &RationalSeries {
    type Output = RationalSeries;
    fn div(self, rhs: &RationalSeries) -> RationalSeries {
        self * &rhs.invert().expect("division by a series without invertible leading coefficient")
    }
}

impl fmt::Display for RationalSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            let e = self.min_exp + i as i64;
            if c.as_constant().is_some() {
                write!(f, "{}", c)?;
            } else {
                write!(f, "({})", c)?;
            }
            if e != 0 {
                write!(f, "*z^{}", e)?;
            }
        }
        if first {
            f.write_str("0")?;
        }
        if self.trunc != EXACT {
            write!(f, " + O(z^{})", self.trunc)?;
        }
        Ok(())
    }
}

/// Machine format of a numeric series: ordered (exponent, numerator,
/// denominator) triples of the nonzero known coefficients.
pub fn series_triples(s: &RationalSeries) -> Vec<(i64, BigInt, BigInt)> {
    let mut out = Vec::new();
    for (i, c) in s.coeffs.iter().enumerate() {
        if let Some(v) = c.as_constant() {
            if !v.is_zero() {
                out.push((s.min_exp + i as i64, v.numer().clone(), v.denom().clone()));
            }
        }
    }
    out
}

/// Coefficients c_2 .. c_M of the ℘ Laurent expansion:
/// c_2 = g2/20, c_3 = g3/28, and for m >= 4
/// c_m = 3/((2m+1)(m-3)) * sum_{i=2}^{m-2} c_i c_{m-i}.
pub fn wp_coefficients(params: &WeierstrassParams, m_max: u32) -> Vec<ParamPoly> {
    assert!(m_max >= 2);
    let mut cs: Vec<ParamPoly> = Vec::with_capacity(m_max as usize - 1);
    cs.push(params.g2.scale(&rat(1, 20)));
    if m_max >= 3 {
        cs.push(params.g3.scale(&rat(1, 28)));
    }
    for m in 4..=m_max as i64 {
        let mut acc = ParamPoly::zero();
        for i in 2..=(m - 2) {
            let j = m - i;
            acc = &acc + &(&cs[(i - 2) as usize] * &cs[(j - 2) as usize]);
        }
        cs.push(acc.scale(&rat(3, (2 * m + 1) * (m - 3))));
    }
    cs
}

/// ℘(z) = z^-2 + sum_{m=2..M} c_m z^{2m-2}, known through exponent 2M-1.
pub fn wp_series(params: &WeierstrassParams, m_max: u32) -> RationalSeries {
    let cs = wp_coefficients(params, m_max);
    let trunc = 2 * m_max as i64;
    let mut coeffs = vec![ParamPoly::zero(); (trunc - 1 - (-2)) as usize];
    coeffs[0] = ParamPoly::from_int(1);
    for (i, c) in cs.into_iter().enumerate() {
        let e = 2 * (i as i64 + 2) - 2;
        coeffs[(e + 2) as usize] = c;
    }
    RationalSeries::new(-2, coeffs, trunc)
}

/// ℘'(z) = -2 z^-3 + sum_{m=2..M} (2m-2) c_m z^{2m-3}, known through 2M-2.
pub fn wp_prime_series(params: &WeierstrassParams, m_max: u32) -> RationalSeries {
    let cs = wp_coefficients(params, m_max);
    let trunc = 2 * m_max as i64 - 1;
    let mut coeffs = vec![ParamPoly::zero(); (trunc - 1 - (-3)) as usize];
    coeffs[0] = ParamPoly::from_int(-2);
    for (i, c) in cs.into_iter().enumerate() {
        let m = i as i64 + 2;
        let e = 2 * m - 3;
        coeffs[(e + 3) as usize] = c.scale(&BigRational::from_integer(BigInt::from(2 * m - 2)));
    }
    RationalSeries::new(-3, coeffs, trunc)
}

/// The defect (℘'/2)^2 - ℘^3 + (g2/4)℘ + (g3/4) of the differential
/// identity, for arbitrary caller-supplied expansions of ℘ and ℘'.
pub fn differential_defect(
    wp: &RationalSeries,
    wp_prime: &RationalSeries,
    params: &WeierstrassParams,
) -> RationalSeries {
    let half_prime = wp_prime.scale(&rat(1, 2));
    let lhs = &half_prime * &half_prime;
    let wp3 = wp.pow(3);
    let t1 = wp.scale_poly(&params.g2.scale(&rat(1, 4)));
    let t2 = RationalSeries::monomial(0, params.g3.scale(&rat(1, 4)));
    &(&(&lhs - &wp3) + &t1) + &t2
}

/// Checks (℘'/2)^2 = ℘^3 - (g2/4)℘ - (g3/4) up to the joint truncation.
pub fn verify_differential_identity(params: &WeierstrassParams, m_max: u32) -> bool {
    assert!(m_max >= 4);
    let wp = wp_series(params, m_max);
    let wpp = wp_prime_series(params, m_max);
    differential_defect(&wp, &wpp, params).is_zero()
}

/// The expansion w(z) = -2 ℘(z)/℘'(z) = z + (g2/10) z^5 + ... as a power
/// series in z (lowest exponent 1, leading coefficient 1).
pub fn inverse_parameter_series(params: &WeierstrassParams, m_max: u32) -> RationalSeries {
    let wp = wp_series(params, m_max);
    let wpp = wp_prime_series(params, m_max);
    let w = &wp.scale(&rat(-2, 1)) / &wpp;
    debug_assert_eq!(w.order(), Some(1));
    debug_assert_eq!(w.coeff(1), ParamPoly::from_int(1));
    w
}

/// Compositional inverse: r with r(s(z)) = z up to the truncation order.
///
/// Requires lowest exponent 1 and an invertible leading coefficient.
pub fn revert_series(s: &RationalSeries) -> Result<RationalSeries> {
    let s = s.clone().trimmed();
    if s.order() != Some(1) || s.min_exp < 0 {
        return Err(Error::NotReversible);
    }
    for e in s.min_exp..1 {
        if !s.coeff(e).is_zero() {
            return Err(Error::NotReversible);
        }
    }
    let lead = s.coeff(1);
    let lead_inv = lead.inverse().ok_or(Error::NotReversible)?;
    if s.trunc == EXACT {
        // the reversion of a genuine polynomial is an infinite series; only
        // the identity-like monomial reverts exactly
        if s.coeffs.len() == 1 {
            return Ok(RationalSeries::monomial(1, lead_inv));
        }
        return Err(Error::NotReversible);
    }
    let t = s.trunc;
    let mut r: Vec<ParamPoly> = vec![lead_inv.clone()];
    // powers of s, extended lazily: spow[m] = s^{m+1}
    let mut spows: Vec<RationalSeries> = vec![s.clone()];
    for n in 2..t {
        while (spows.len() as i64) < n {
            let next = &spows[spows.len() - 1].clone() * &s;
            spows.push(next);
        }
        let mut acc = ParamPoly::zero();
        for (m, rm) in r.iter().enumerate() {
            acc = &acc + &(rm * &spows[m].coeff(n));
        }
        // leading coefficient of s^n is lead^n
        let lead_n_inv = lead_inv.clone();
        let mut inv_pow = ParamPoly::from_int(1);
        for _ in 0..n {
            inv_pow = &inv_pow * &lead_n_inv;
        }
        r.push(&(-&acc) * &inv_pow);
    }
    Ok(RationalSeries::new(1, r, t))
}

/// Minimal truncation index M with 2M - 2 > k: evaluating the reduced
/// series at any z of valuation >= 1 then loses nothing mod p^k.
pub fn truncation_order(ctx: &RingContext) -> u32 {
    ctx.precision() / 2 + 2
}

/// Reduces every known coefficient of a numeric series into Z/p^k.
///
/// The returned vector is indexed by exponent starting at `min_exp()`.
/// Fails with `BadPrime` if any retained denominator is divisible by p.
pub fn reduce_series(s: &RationalSeries, ctx: &Arc<RingContext>) -> Result<Vec<RingElement>> {
    assert!(s.trunc() != EXACT, "reduce a truncated series");
    let mut out = Vec::new();
    for e in s.min_exp()..s.trunc() {
        let c = s
            .coeff(e)
            .as_constant()
            .expect("reduce_series needs a numeric series");
        out.push(ctx.from_rational(c.numer(), c.denom())?);
    }
    Ok(out)
}

fn padic_valuation(n: &BigInt, p: u64) -> u32 {
    assert!(!n.is_zero());
    let p = BigInt::from(p);
    let mut v = 0;
    let mut r = n.abs();
    while (&r % &p).is_zero() {
        r /= &p;
        v += 1;
    }
    v
}

/// z^e-cleared series tables for the exponential and logarithm over Z/p^k.
///
/// Coefficients are kept as exact rationals; a coefficient with p-adic
/// denominator valuation s in a term of exponent e is admissible when
/// s <= e - 1 (s = 0 for e = 0), in which case evaluation at any z of
/// valuation >= 1 is exact mod p^k and independent of the residue lift.
#[derive(Debug, Clone)]
pub struct ClearedTables {
    /// z^2 ℘(z) = 1 + sum c_m z^{2m}
    pub wp_z2: Vec<(u32, BigRational)>,
    /// z^3 ℘'(z) = -2 + sum (2m-2) c_m z^{2m}
    pub wp_prime_z3: Vec<(u32, BigRational)>,
    /// reversion table: z = sum r_j w^j for w = -2℘/℘'
    pub reversion: Vec<(u32, BigRational)>,
}

impl ClearedTables {
    /// Builds the tables for the curve with the given g2, g3 residues,
    /// truncated at `truncation_order` of their ring.
    pub fn build(g2: &RingElement, g3: &RingElement) -> Result<ClearedTables> {
        let ctx = g2.context();
        let p = ctx.prime();
        let m_max = truncation_order(ctx);
        let params = WeierstrassParams::from_ring(g2, g3);
        let cs = wp_coefficients(&params, m_max);

        let mut wp_z2 = vec![(0u32, BigRational::one())];
        let mut wp_prime_z3 = vec![(0u32, -BigRational::from_integer(BigInt::from(2)))];
        for (i, c) in cs.iter().enumerate() {
            let m = i as u32 + 2;
            let c = c.as_constant().expect("numeric parameters");
            if c.is_zero() {
                continue;
            }
            wp_z2.push((2 * m, c.clone()));
            wp_prime_z3.push((2 * m, &c * BigRational::from_integer(BigInt::from(2 * m - 2))));
        }

        let w = inverse_parameter_series(&params, m_max);
        let r = revert_series(&w).expect("w has lowest exponent 1 and unit leading coefficient");
        let mut reversion = Vec::new();
        for (e, num, den) in series_triples(&r) {
            reversion.push((e as u32, BigRational::new(num, den)));
        }

        let tables = ClearedTables { wp_z2, wp_prime_z3, reversion };
        for terms in [&tables.wp_z2, &tables.wp_prime_z3, &tables.reversion] {
            for (e, c) in terms {
                let s = padic_valuation(c.denom(), p);
                let bound = if *e == 0 { 0 } else { *e - 1 };
                if s > bound {
                    return Err(Error::BadPrime);
                }
            }
        }
        Ok(tables)
    }

    /// Evaluates a cleared table at z (valuation >= 1), exactly mod p^k.
    pub fn eval(terms: &[(u32, BigRational)], z: &RingElement) -> Result<RingElement> {
        let ctx = z.context();
        debug_assert!(!z.is_unit(), "series evaluation needs v(z) >= 1");
        let zl = z.lift();
        let mut acc = BigRational::zero();
        for (e, c) in terms {
            let term = c * BigRational::from_integer(zl.pow(*e));
            if !term.denom().is_one() && (term.denom() % BigInt::from(ctx.prime())).is_zero() {
                return Err(Error::BadPrime);
            }
            acc += term;
        }
        ctx.from_rational(acc.numer(), acc.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sym() -> WeierstrassParams {
        WeierstrassParams::symbolic()
    }

    #[test]
    fn wp_coefficient_examples() {
        let cs = wp_coefficients(&sym(), 5);
        // c_2 = g2/20
        assert_eq!(cs[0], ParamPoly::g2().scale(&rat(1, 20)));
        // c_3 = g3/28 (base case required by the recursion's k-3 divisor)
        assert_eq!(cs[1], ParamPoly::g3().scale(&rat(1, 28)));
        // c_4 = g2^2/1200
        let g2sq = &ParamPoly::g2() * &ParamPoly::g2();
        assert_eq!(cs[2], g2sq.scale(&rat(1, 1200)));
        // c_5 = 3 g2 g3 / 6160
        let g2g3 = &ParamPoly::g2() * &ParamPoly::g3();
        assert_eq!(cs[3], g2g3.scale(&rat(3, 6160)));
    }

    #[test]
    fn wp_series_lowest_terms() {
        let wp = wp_series(&sym(), 4);
        assert_eq!(wp.min_exp(), -2);
        assert_eq!(wp.coeff(-2), ParamPoly::from_int(1));
        let wpp = wp_prime_series(&sym(), 4);
        assert_eq!(wpp.min_exp(), -3);
        assert_eq!(wpp.coeff(-3), ParamPoly::from_int(-2));
    }

    #[test]
    fn wp_prime_is_the_derivative() {
        let wp = wp_series(&sym(), 6);
        let wpp = wp_prime_series(&sym(), 6);
        let d = wp.derivative();
        let defect = &d - &wpp;
        assert!(defect.is_zero(), "derivative mismatch: {defect}");
    }

    #[test]
    fn differential_identity_symbolic() {
        for m in 4..=8 {
            assert!(verify_differential_identity(&sym(), m), "fails at M = {m}");
        }
    }

    #[test]
    fn differential_identity_numeric() {
        let params = WeierstrassParams::numeric(rat(4, 1), rat(0, 1));
        assert!(verify_differential_identity(&params, 10));
    }

    #[test]
    fn differential_identity_pins_c3() {
        // placing g3/28 at index 4 (c_3 = g3/30, say) must break the identity
        // in the z^0 coefficient
        let m_max = 6;
        let params = sym();
        let mut wp = wp_series(&params, m_max);
        let mut wpp = wp_prime_series(&params, m_max);
        let bad_c3 = ParamPoly::g3().scale(&rat(1, 30));
        wp = &wp + &RationalSeries::monomial(4, &bad_c3 - &ParamPoly::g3().scale(&rat(1, 28)));
        wpp = &wpp + &RationalSeries::monomial(3, (&bad_c3 - &ParamPoly::g3().scale(&rat(1, 28))).scale(&rat(4, 1)));
        let defect = differential_defect(&wp, &wpp, &params);
        assert!(!defect.is_zero());
        assert!(!defect.coeff(0).is_zero(), "defect should appear at z^0");
    }

    #[test]
    fn inverse_parameter_series_coefficients() {
        let w = inverse_parameter_series(&sym(), 7);
        assert_eq!(w.coeff(1), ParamPoly::from_int(1));
        assert!(w.coeff(3).is_zero());
        assert_eq!(w.coeff(5), ParamPoly::g2().scale(&rat(1, 10)));
        assert_eq!(w.coeff(7), ParamPoly::g3().scale(&rat(3, 28)));
        let g2sq = &ParamPoly::g2() * &ParamPoly::g2();
        assert_eq!(w.coeff(9), g2sq.scale(&rat(1, 120)));
        let g2g3 = &ParamPoly::g2() * &ParamPoly::g3();
        assert_eq!(w.coeff(11), g2g3.scale(&rat(23, 1540)));
    }

    #[test]
    fn revert_examples() {
        let w = inverse_parameter_series(&sym(), 6);
        let r = revert_series(&w).unwrap();
        assert_eq!(r.coeff(5), ParamPoly::g2().scale(&rat(-1, 10)));
        // identity series reverts to itself
        let id = RationalSeries::identity();
        assert_eq!(revert_series(&id).unwrap(), id);
        // defining property r(s(z)) = z
        let composed = r.compose(&w);
        let defect = &composed - &RationalSeries::identity();
        assert!(defect.is_zero(), "r(s(z)) != z: {composed}");
    }

    #[test]
    fn revert_rejects_bad_leading_terms() {
        let s = RationalSeries::new(0, vec![ParamPoly::from_int(1)], 5);
        assert_eq!(revert_series(&s).unwrap_err(), Error::NotReversible);
        let s = RationalSeries::new(2, vec![ParamPoly::from_int(1)], 5);
        assert_eq!(revert_series(&s).unwrap_err(), Error::NotReversible);
        // leading coefficient g2 is not invertible in Q[g2, g3]
        let s = RationalSeries::new(1, vec![ParamPoly::g2()], 5);
        assert_eq!(revert_series(&s).unwrap_err(), Error::NotReversible);
    }

    #[test]
    fn truncation_order_examples() {
        let c = RingContext::new(5, 3).unwrap();
        assert_eq!(truncation_order(&c), 3);
        let c = RingContext::new(5, 8).unwrap();
        assert_eq!(truncation_order(&c), 6);
        let c = RingContext::new(7, 2).unwrap();
        assert_eq!(truncation_order(&c), 3);
    }

    #[test]
    fn reduce_series_badprime_example() {
        // c_2 = g2/20 with p = 5 and g2 a unit: 5 | 20 stays after
        // cancellation, the documented limitation
        let ctx = RingContext::new(5, 2).unwrap();
        let params = WeierstrassParams::numeric(rat(1, 1), rat(0, 1));
        let wp = wp_series(&params, 3);
        assert_eq!(reduce_series(&wp, &ctx).unwrap_err(), Error::BadPrime);
        // while p = 7 reduces fine at M = 2 (only c_2 = g2/20 retained)
        let ctx7 = RingContext::new(7, 2).unwrap();
        let wp7 = wp_series(&params, 2);
        let coeffs = reduce_series(&wp7, &ctx7).unwrap();
        assert_eq!(coeffs.len(), (wp7.trunc() - wp7.min_exp()) as usize);
    }

    #[test]
    fn reduced_wp_evaluation_is_stable_under_extra_terms() {
        // evaluating the reduced cleared series at v(z) >= 1 must not depend
        // on M once M >= truncation_order(ctx); g3 is chosen divisible by p
        // so every retained coefficient reduces
        for (p, k, g3) in [(7u64, 3u32, 7i64), (11, 4, 11), (13, 2, 13)] {
            let ctx = RingContext::new(p, k).unwrap();
            let params = WeierstrassParams::numeric(rat(8, 1), rat(g3, 1));
            let m0 = truncation_order(&ctx);
            for extra in 1..=2 {
                for h in 1..p.min(6) {
                    let z = ctx.from_u64(p * h);
                    let evals: Vec<_> = [m0, m0 + extra]
                        .iter()
                        .map(|&m| {
                            let wp = wp_series(&params, m);
                            // z^2 ℘(z), cleared, exponents from 0 up
                            let cleared = wp.shift(2);
                            let coeffs = reduce_series(&cleared, &ctx).unwrap();
                            let mut acc = ctx.zero();
                            for (i, c) in coeffs.iter().enumerate() {
                                acc = &acc + &(c * &z.pow(i as u64));
                            }
                            acc
                        })
                        .collect();
                    assert_eq!(evals[0], evals[1], "unstable at p={p} k={k} h={h}");
                }
            }
        }
    }

    #[test]
    fn cleared_tables_badprime_boundaries() {
        // p = 7, k = 2: c_3 = g3/28 has a 7 in the denominator but sits in a
        // z^6 term of z^2℘, well within the valuation slack
        let ctx = RingContext::new(7, 2).unwrap();
        let g2 = ctx.from_u64(3);
        let g3 = ctx.from_u64(5);
        assert!(ClearedTables::build(&g2, &g3).is_ok());
        // p = 5 likewise passes through the slack rule
        let ctx5 = RingContext::new(5, 2).unwrap();
        assert!(ClearedTables::build(&ctx5.from_u64(3), &ctx5.from_u64(2)).is_ok());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn revert_is_an_involution(c2 in -6i64..6, c3 in -6i64..6, c4 in -6i64..6) {
            // s = z + c2 z^2 + c3 z^3 + c4 z^4 + O(z^5)
            let coeffs = vec![
                ParamPoly::from_int(1),
                ParamPoly::from_int(c2),
                ParamPoly::from_int(c3),
                ParamPoly::from_int(c4),
            ];
            let s = RationalSeries::new(1, coeffs, 5);
            let r = revert_series(&s).unwrap();
            let rr = revert_series(&r).unwrap();
            prop_assert_eq!(&rr, &s);
            let composed = r.compose(&s);
            let defect = &composed - &RationalSeries::identity();
            prop_assert!(defect.is_zero());
        }

        #[test]
        fn series_product_respects_known_coefficients(a0 in -5i64..5, a1 in -5i64..5,
                                                      b0 in -5i64..5, b1 in -5i64..5) {
            let s = RationalSeries::new(-1, vec![ParamPoly::from_int(a0), ParamPoly::from_int(a1)], 4);
            let t = RationalSeries::new(0, vec![ParamPoly::from_int(b0), ParamPoly::from_int(b1)], 4);
            let prod = &s * &t;
            // lowest coefficient must be the product of the lowest ones
            prop_assert_eq!(prod.coeff(-1), &ParamPoly::from_int(a0) * &ParamPoly::from_int(b0));
        }
    }
}
