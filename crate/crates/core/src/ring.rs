//! Exact arithmetic in the truncated p-adic ring Z/p^k.
//!
//! A [`RingContext`] fixes an odd prime p >= 5 and a precision k >= 1;
//! elements are residues reduced into [0, p^k). The prime is kept >= 5 so
//! that 2 and 3, and the leading denominators of the ℘-series, are always
//! units.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::{Error, Result};

/// Quadratic class of an element, decided on its reduction mod p.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadraticClass {
    /// Nonzero square mod p.
    Residue,
    /// Nonzero nonsquare mod p.
    NonResidue,
    /// Divisible by p.
    Zero,
}

/// The ring Z/p^k for an odd prime p >= 5 and precision k >= 1.
#[derive(Debug)]
pub struct RingContext {
    p: u64,
    k: u32,
    modulus: BigUint,
}

impl PartialEq for RingContext {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.k == other.k
    }
}
impl Eq for RingContext {}

impl RingContext {
    /// Builds the ring Z/p^k. Fails with `BadContext` unless p is a prime
    /// >= 5 and k >= 1.
    pub fn new(p: u64, k: u32) -> Result<Arc<RingContext>> {
        if p < 5 || k == 0 || !is_prime_u64(p) {
            return Err(Error::BadContext);
        }
        let modulus = BigUint::from(p).pow(k);
        Ok(Arc::new(RingContext { p, k, modulus }))
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn precision(&self) -> u32 {
        self.k
    }

    pub fn modulus(&self) -> &BigUint {
        &self.modulus
    }

    /// The residue field Z/p of this ring.
    pub fn residue_field(&self) -> Arc<RingContext> {
        RingContext::new(self.p, 1).expect("valid context stays valid at k = 1")
    }

    pub fn zero(self: &Arc<Self>) -> RingElement {
        self.from_biguint(BigUint::zero())
    }

    pub fn one(self: &Arc<Self>) -> RingElement {
        self.from_biguint(BigUint::one())
    }

    pub fn from_biguint(self: &Arc<Self>, v: BigUint) -> RingElement {
        RingElement {
            residue: v % &self.modulus,
            ctx: Arc::clone(self),
        }
    }

    pub fn from_u64(self: &Arc<Self>, v: u64) -> RingElement {
        self.from_biguint(BigUint::from(v))
    }

    pub fn from_i64(self: &Arc<Self>, v: i64) -> RingElement {
        self.from_bigint(&BigInt::from(v))
    }

    pub fn from_bigint(self: &Arc<Self>, v: &BigInt) -> RingElement {
        let m = BigInt::from(self.modulus.clone());
        let r = v.mod_floor(&m);
        self.from_biguint(r.to_biguint().expect("mod_floor yields nonnegative"))
    }

    /// numerator / denominator in Z/p^k after exact cancellation.
    ///
    /// Fails with `BadPrime` if p still divides the denominator once the
    /// fraction is in lowest terms.
    pub fn from_rational(self: &Arc<Self>, numerator: &BigInt, denominator: &BigInt) -> Result<RingElement> {
        assert!(!denominator.is_zero(), "zero denominator");
        let g = numerator.gcd(denominator);
        let mut n = numerator / &g;
        let mut d = denominator / &g;
        if d.is_negative() {
            n = -n;
            d = -d;
        }
        let p = BigInt::from(self.p);
        if (&d % &p).is_zero() {
            return Err(Error::BadPrime);
        }
        let den = self.from_bigint(&d);
        Ok(&self.from_bigint(&n) * &den.invert().expect("denominator coprime to p"))
    }
}

impl fmt::Display for RingContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^{}", self.p, self.k)
    }
}

impl FromStr for RingContext {
    type Err = Error;

    /// Parses the "p^k" context serialization, e.g. "5^3".
    fn from_str(s: &str) -> Result<Self> {
        let (p, k) = s.split_once('^').ok_or(Error::ParseError)?;
        let p: u64 = p.trim().parse().map_err(|_| Error::ParseError)?;
        let k: u32 = k.trim().parse().map_err(|_| Error::ParseError)?;
        let ctx = RingContext::new(p, k)?;
        Ok(Arc::try_unwrap(ctx).unwrap_or_else(|a| RingContext {
            p: a.p,
            k: a.k,
            modulus: a.modulus.clone(),
        }))
    }
}

/// Binary ring operation selector, used by the checked entry point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RingOp {
    Add,
    Sub,
    Mul,
}

impl FromStr for RingOp {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "add" => Ok(RingOp::Add),
            "sub" => Ok(RingOp::Sub),
            "mul" => Ok(RingOp::Mul),
            _ => Err(Error::ParseError),
        }
    }
}

/// A residue in Z/p^k, always stored reduced into [0, p^k).
#[derive(Debug, Clone)]
pub struct RingElement {
    residue: BigUint,
    ctx: Arc<RingContext>,
}

impl PartialEq for RingElement {
    fn eq(&self, other: &Self) -> bool {
        self.ctx == other.ctx && self.residue == other.residue
    }
}
impl Eq for RingElement {}

impl RingElement {
    pub fn context(&self) -> &Arc<RingContext> {
        &self.ctx
    }

    pub fn residue(&self) -> &BigUint {
        &self.residue
    }

    /// The residue as a signed least-nonnegative integer lift.
    pub fn lift(&self) -> BigInt {
        BigInt::from(self.residue.clone())
    }

    pub fn is_zero(&self) -> bool {
        self.residue.is_zero()
    }

    pub fn is_unit(&self) -> bool {
        !(&self.residue % self.ctx.p).is_zero()
    }

    /// Exact residue arithmetic mod p^k with a context check.
    pub fn checked_op(&self, other: &RingElement, op: RingOp) -> Result<RingElement> {
        if self.ctx != other.ctx {
            return Err(Error::ContextMismatch);
        }
        let m = &self.ctx.modulus;
        let r = match op {
            RingOp::Add => (&self.residue + &other.residue) % m,
            RingOp::Sub => (m + &self.residue - &other.residue) % m,
            RingOp::Mul => (&self.residue * &other.residue) % m,
        };
        Ok(RingElement {
            residue: r,
            ctx: Arc::clone(&self.ctx),
        })
    }

    pub fn neg(&self) -> RingElement {
        let m = &self.ctx.modulus;
        let r = if self.residue.is_zero() {
            BigUint::zero()
        } else {
            m - &self.residue
        };
        RingElement {
            residue: r,
            ctx: Arc::clone(&self.ctx),
        }
    }

    /// Multiplicative inverse of a unit; `NonUnit` if p divides the element.
    pub fn invert(&self) -> Result<RingElement> {
        if !self.is_unit() {
            return Err(Error::NonUnit);
        }
        let m = BigInt::from(self.ctx.modulus.clone());
        let ext = BigInt::from(self.residue.clone()).extended_gcd(&m);
        debug_assert!(ext.gcd.is_one());
        Ok(self.ctx.from_bigint(&ext.x))
    }

    /// Largest v <= k with p^v dividing the residue; v(0) = k by convention.
    pub fn valuation(&self) -> u32 {
        if self.residue.is_zero() {
            return self.ctx.k;
        }
        let p = BigUint::from(self.ctx.p);
        let mut v = 0;
        let mut r = self.residue.clone();
        while (&r % &p).is_zero() {
            r /= &p;
            v += 1;
        }
        v
    }

    /// Quadratic class of the reduction mod p (Euler's criterion).
    pub fn quadratic_class(&self) -> QuadraticClass {
        let p = self.ctx.p;
        let r = (&self.residue % p).to_u64().expect("residue mod p fits u64");
        if r == 0 {
            return QuadraticClass::Zero;
        }
        let e = BigUint::from(r).modpow(&BigUint::from((p - 1) / 2), &BigUint::from(p));
        if e.is_one() {
            QuadraticClass::Residue
        } else {
            QuadraticClass::NonResidue
        }
    }

    /// True iff the reduction mod p is a nonzero quadratic residue.
    pub fn is_square_mod_p(&self) -> bool {
        self.quadratic_class() == QuadraticClass::Residue
    }

    /// Square root in Z/p^k by Hensel/Newton lifting of the base root.
    ///
    /// The canonical choice is the lift whose reduction mod p is the smaller
    /// of the two base roots in [0, p). Elements divisible by p are
    /// rejected with `ZeroResidue` (valuation-aware roots are out of scope);
    /// nonresidues with `NotASquare`.
    pub fn sqrt_hensel(&self) -> Result<RingElement> {
        let p = self.ctx.p;
        match self.quadratic_class() {
            QuadraticClass::Zero => return Err(Error::ZeroResidue),
            QuadraticClass::NonResidue => return Err(Error::NotASquare),
            QuadraticClass::Residue => {}
        }
        let r0 = (&self.residue % p).to_u64().expect("fits u64");
        let base = tonelli_shanks(r0, p).expect("residue class checked");
        let base = base.min(p - base);
        // Newton iteration x <- (x + a/x) / 2 at full precision; quadratic
        // convergence reaches p^k in ceil(log2 k) steps.
        let mut x = self.ctx.from_u64(base);
        let inv2 = self.ctx.from_u64(2).invert().expect("2 is a unit");
        loop {
            let next = &(&x + &(self * &x.invert().expect("root stays a unit"))) * &inv2;
            if next == x {
                break;
            }
            let done = (&next * &next) == *self;
            x = next;
            if done {
                break;
            }
        }
        debug_assert!(&(&x * &x) == self);
        Ok(x)
    }

    pub fn pow(&self, mut e: u64) -> RingElement {
        let mut base = self.clone();
        let mut acc = self.ctx.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    /// Reduces this element into the lower-precision ring Z/p^k2, k2 <= k.
    pub fn reduce_to(&self, k2: u32) -> RingElement {
        assert!(k2 >= 1 && k2 <= self.ctx.k, "precision must not increase");
        let ctx = RingContext::new(self.ctx.p, k2).expect("valid context");
        ctx.from_biguint(self.residue.clone())
    }

    /// Reinterprets the least residue lift in a higher-precision ring.
    pub fn least_lift_in(&self, ctx: &Arc<RingContext>) -> RingElement {
        assert_eq!(ctx.p, self.ctx.p, "same prime required");
        assert!(ctx.k >= self.ctx.k, "precision must not decrease");
        ctx.from_biguint(self.residue.clone())
    }
}

macro_rules! ring_binop {
    ($trait:ident, $method:ident, $op:expr) => {
        impl std::ops::$trait for &RingElement {
            type Output = RingElement;
            fn $method(self, rhs: &RingElement) -> RingElement {
                self.checked_op(rhs, $op).expect("ring context mismatch")
            }
        }
    };
}
ring_binop!(Add, add, RingOp::Add);
ring_binop!(Sub, sub, RingOp::Sub);
ring_binop!(Mul, mul, RingOp::Mul);

impl std::ops::Neg for &RingElement {
    type Output = RingElement;
    fn neg(self) -> RingElement {
        RingElement::neg(self)
    }
}

impl fmt::Display for RingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.residue)
    }
}

/// Deterministic Miller-Rabin for u64 inputs.
fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for q in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == q {
            return true;
        }
        if n % q == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod_u64(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..s - 1 {
            x = mul_mod_u64(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn mul_mod_u64(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod_u64(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod_u64(acc, a, m);
        }
        a = mul_mod_u64(a, a, m);
        e >>= 1;
    }
    acc
}

/// Square root mod an odd prime (Tonelli-Shanks); None for nonresidues.
fn tonelli_shanks(n: u64, p: u64) -> Option<u64> {
    let n = n % p;
    if n == 0 {
        return Some(0);
    }
    if pow_mod_u64(n, (p - 1) / 2, p) != 1 {
        return None;
    }
    if p % 4 == 3 {
        return Some(pow_mod_u64(n, (p + 1) / 4, p));
    }
    let mut q = p - 1;
    let mut s = 0;
    while q % 2 == 0 {
        q /= 2;
        s += 1;
    }
    let mut z = 2;
    while pow_mod_u64(z, (p - 1) / 2, p) == 1 {
        z += 1;
    }
    let mut m = s;
    let mut c = pow_mod_u64(z, q, p);
    let mut t = pow_mod_u64(n, q, p);
    let mut r = pow_mod_u64(n, (q + 1) / 2, p);
    while t != 1 {
        let mut i = 0;
        let mut t2 = t;
        while t2 != 1 {
            t2 = mul_mod_u64(t2, t2, p);
            i += 1;
        }
        let b = pow_mod_u64(c, 1 << (m - i - 1), p);
        m = i;
        c = mul_mod_u64(b, b, p);
        t = mul_mod_u64(t, c, p);
        r = mul_mod_u64(r, b, p);
    }
    Some(r)
}
