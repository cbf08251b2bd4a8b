use std::cmp::Ordering;
use std::fmt::Debug;
use std::hash::Hash;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Serializable description of a coefficient field.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FieldSpec {
    Prime { modulus: String },
    Rational,
}

impl FieldSpec {
    pub fn prime(p: u64) -> FieldSpec {
        FieldSpec::Prime { modulus: p.to_string() }
    }
}

/// Exact field arithmetic plus the canonical element order used by every
/// deterministic scan in the crate.
pub trait Field: Clone + Eq + Debug + Send + Sync + 'static {
    type Elem: Clone + PartialEq + Eq + Hash + Debug + Send + Sync + 'static;

    fn spec(&self) -> FieldSpec;
    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn is_zero(&self, a: &Self::Elem) -> bool;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    /// None exactly when `a` is zero.
    fn inv(&self, a: &Self::Elem) -> Option<Self::Elem>;
    fn from_i64(&self, x: i64) -> Self::Elem;

    /// k-th element in canonical order; None once the field is exhausted.
    fn element_at(&self, k: u64) -> Option<Self::Elem>;
    /// Number of elements, None for infinite fields.
    fn order(&self) -> Option<u128>;
    /// Canonical square root (smaller residue, or the nonnegative rational).
    fn sqrt(&self, a: &Self::Elem) -> Option<Self::Elem>;
    /// Total order used to sort root sets and scan outputs.
    fn cmp_elems(&self, a: &Self::Elem, b: &Self::Elem) -> Ordering;

    fn format_elem(&self, a: &Self::Elem) -> String;
    fn parse_elem(&self, s: &str) -> Result<Self::Elem>;
    /// Uniform sample for prime fields; uniform integer in [-10^6, 10^6]
    /// for the rationals.
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Elem;

    fn div(&self, a: &Self::Elem, b: &Self::Elem) -> Option<Self::Elem> {
        self.inv(b).map(|bi| self.mul(a, &bi))
    }

    fn pow(&self, a: &Self::Elem, mut e: u64) -> Self::Elem {
        let mut base = a.clone();
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    /// Hook letting a field supply a fraction-free determinant; the matrix
    /// code falls back to Gaussian elimination when this returns None.
    fn det_hook(&self, _n: usize, _entries: &[Self::Elem]) -> Option<Self::Elem> {
        None
    }
}

/// F_p for an odd prime p < 2^63, elements as canonical residues.
#[derive(Clone, Debug)]
pub struct PrimeField {
    p: u64,
    pinv: f64,
}

impl PartialEq for PrimeField {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p
    }
}
impl Eq for PrimeField {}

impl PrimeField {
    pub fn new(p: u64) -> Result<PrimeField> {
        if p == 2 {
            return Err(Error::BadInput("characteristic two is not supported".into()));
        }
        if p >= 1 << 63 {
            return Err(Error::BadInput(format!("modulus {p} does not fit the supported range")));
        }
        if !is_prime_u64(p) {
            return Err(Error::BadInput(format!("modulus {p} is not prime")));
        }
        Ok(PrimeField { p, pinv: 1.0 / p as f64 })
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    #[inline(always)]
    fn mul_mod(&self, a: u64, b: u64) -> u64 {
        if self.p < (1 << 32) {
            (a * b) % self.p
        } else if self.p < (1 << 50) {
            // float-assisted Barrett step: the quotient estimate is off by at
            // most one for p below 2^50, fixed up with wrapping arithmetic
            let q = (a as f64 * b as f64 * self.pinv) as u64;
            let r = a.wrapping_mul(b).wrapping_sub(q.wrapping_mul(self.p));
            let mut r = if (r as i64) < 0 { r.wrapping_add(self.p) } else { r };
            while r >= self.p {
                r -= self.p;
            }
            r
        } else {
            ((a as u128 * b as u128) % self.p as u128) as u64
        }
    }

    fn inv_mod(&self, a: u64) -> Option<u64> {
        if a == 0 {
            return None;
        }
        // extended euclid on (a, p)
        let (mut r0, mut r1) = (a as i128, self.p as i128);
        let (mut s0, mut s1) = (1i128, 0i128);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (s0, s1) = (s1, s0 - q * s1);
        }
        debug_assert_eq!(r0, 1);
        let p = self.p as i128;
        let s = ((s0 % p) + p) % p;
        Some(s as u64)
    }
}

impl Field for PrimeField {
    type Elem = u64;

    fn spec(&self) -> FieldSpec {
        FieldSpec::prime(self.p)
    }
    fn zero(&self) -> u64 {
        0
    }
    fn one(&self) -> u64 {
        1
    }
    fn is_zero(&self, a: &u64) -> bool {
        *a == 0
    }
    fn add(&self, a: &u64, b: &u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }
    fn sub(&self, a: &u64, b: &u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }
    fn neg(&self, a: &u64) -> u64 {
        if *a == 0 {
            0
        } else {
            self.p - a
        }
    }
    fn mul(&self, a: &u64, b: &u64) -> u64 {
        self.mul_mod(*a, *b)
    }
    fn inv(&self, a: &u64) -> Option<u64> {
        self.inv_mod(*a)
    }
    fn from_i64(&self, x: i64) -> u64 {
        let m = x.rem_euclid(self.p as i64);
        m as u64
    }
    fn element_at(&self, k: u64) -> Option<u64> {
        if k < self.p {
            Some(k)
        } else {
            None
        }
    }
    fn order(&self) -> Option<u128> {
        Some(self.p as u128)
    }
    fn sqrt(&self, a: &u64) -> Option<u64> {
        tonelli_shanks(self, *a)
    }
    fn cmp_elems(&self, a: &u64, b: &u64) -> Ordering {
        a.cmp(b)
    }
    fn format_elem(&self, a: &u64) -> String {
        a.to_string()
    }
    fn parse_elem(&self, s: &str) -> Result<u64> {
        let neg = s.starts_with('-');
        let body = if neg { &s[1..] } else { s };
        let v = BigUint::from_str(body)
            .map_err(|_| Error::BadInput(format!("cannot parse field element {s:?}")))?;
        let r = (v % BigUint::from(self.p)).to_u64().unwrap();
        Ok(if neg { self.neg(&r) } else { r })
    }
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        rng.gen_range(0..self.p)
    }
}

/// The rationals with arbitrary-precision entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalField;

impl Field for RationalField {
    type Elem = BigRational;

    fn spec(&self) -> FieldSpec {
        FieldSpec::Rational
    }
    fn zero(&self) -> BigRational {
        BigRational::zero()
    }
    fn one(&self) -> BigRational {
        BigRational::one()
    }
    fn is_zero(&self, a: &BigRational) -> bool {
        a.is_zero()
    }
    fn add(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a + b
    }
    fn sub(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a - b
    }
    fn neg(&self, a: &BigRational) -> BigRational {
        -a
    }
    fn mul(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a * b
    }
    fn inv(&self, a: &BigRational) -> Option<BigRational> {
        if a.is_zero() {
            None
        } else {
            Some(a.recip())
        }
    }
    fn from_i64(&self, x: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(x))
    }
    fn element_at(&self, k: u64) -> Option<BigRational> {
        Some(BigRational::from_integer(BigInt::from(k)))
    }
    fn order(&self) -> Option<u128> {
        None
    }
    fn sqrt(&self, a: &BigRational) -> Option<BigRational> {
        if a.is_negative() {
            return None;
        }
        let num = a.numer().magnitude();
        let den = a.denom().magnitude();
        let rn = num.sqrt();
        let rd = den.sqrt();
        if &(&rn * &rn) == num && &(&rd * &rd) == den {
            Some(BigRational::new(BigInt::from(rn), BigInt::from(rd)))
        } else {
            None
        }
    }
    fn cmp_elems(&self, a: &BigRational, b: &BigRational) -> Ordering {
        a.cmp(b)
    }
    fn format_elem(&self, a: &BigRational) -> String {
        if a.denom().is_one() {
            a.numer().to_string()
        } else {
            format!("{}/{}", a.numer(), a.denom())
        }
    }
    fn parse_elem(&self, s: &str) -> Result<BigRational> {
        let bad = || Error::BadInput(format!("cannot parse rational {s:?}"));
        match s.split_once('/') {
            Some((n, d)) => {
                let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
                let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
                if d.is_zero() {
                    return Err(bad());
                }
                Ok(BigRational::new(n, d))
            }
            None => Ok(BigRational::from_integer(BigInt::from_str(s.trim()).map_err(|_| bad())?)),
        }
    }
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> BigRational {
        let v: i64 = rng.gen_range(-1_000_000..=1_000_000);
        self.from_i64(v)
    }

    fn det_hook(&self, n: usize, entries: &[BigRational]) -> Option<BigRational> {
        Some(bareiss_det(n, entries))
    }
}

/// Smallest prime exceeding max(n^6, 10 n^5, 2n + 2); the default working
/// modulus for instances of size n.
pub fn choose_prime(n: usize) -> u64 {
    let n = n as u128;
    let bound = (n.pow(6)).max(10 * n.pow(5)).max(2 * n + 2);
    assert!(bound < (1 << 62), "instance size too large for a u64 modulus");
    let mut c = bound as u64 + 1;
    if c <= 2 {
        c = 3;
    }
    if c % 2 == 0 {
        c += 1;
    }
    while !is_prime_u64(c) {
        c += 2;
    }
    c
}

/// Deterministic Miller-Rabin, valid for all u64.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    let mul = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let powm = |mut a: u64, mut e: u64| {
        let mut r = 1u64;
        a %= n;
        while e > 0 {
            if e & 1 == 1 {
                r = mul(r, a);
            }
            a = mul(a, a);
            e >>= 1;
        }
        r
    };
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powm(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..s - 1 {
            x = mul(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Canonical square root modulo p, returning the smaller of the two residues.
fn tonelli_shanks(f: &PrimeField, a: u64) -> Option<u64> {
    let p = f.modulus();
    if a == 0 {
        return Some(0);
    }
    if f.pow(&a, (p - 1) / 2) != 1 {
        return None;
    }
    let r = if p % 4 == 3 {
        f.pow(&a, (p + 1) / 4)
    } else {
        // general case: write p - 1 = q * 2^s with q odd
        let mut q = p - 1;
        let mut s = 0u32;
        while q % 2 == 0 {
            q /= 2;
            s += 1;
        }
        let mut z = 2u64;
        while f.pow(&z, (p - 1) / 2) != p - 1 {
            z += 1;
        }
        let mut m = s;
        let mut c = f.pow(&z, q);
        let mut t = f.pow(&a, q);
        let mut r = f.pow(&a, (q + 1) / 2);
        while t != 1 {
            let mut i = 0u32;
            let mut t2 = t;
            while t2 != 1 {
                t2 = f.mul(&t2, &t2);
                i += 1;
                if i == m {
                    return None;
                }
            }
            let b = f.pow(&c, 1u64 << (m - i - 1));
            m = i;
            c = f.mul(&b, &b);
            t = f.mul(&t, &c);
            r = f.mul(&r, &b);
        }
        r
    };
    Some(r.min(p - r))
}

/// Roots of a z^2 - b z + c = 0 in canonical order. An identically zero
/// equation is rejected; a = b = 0 with c != 0 has no roots.
pub fn solve_quadratic<F: Field>(f: &F, a: &F::Elem, b: &F::Elem, c: &F::Elem) -> Result<Vec<F::Elem>> {
    if f.is_zero(a) {
        if f.is_zero(b) {
            if f.is_zero(c) {
                return Err(Error::DegenerateEquation);
            }
            return Ok(vec![]);
        }
        return Ok(vec![f.div(c, b).unwrap()]);
    }
    let four = f.from_i64(4);
    let disc = f.sub(&f.mul(b, b), &f.mul(&four, &f.mul(a, c)));
    let Some(s) = f.sqrt(&disc) else {
        return Ok(vec![]);
    };
    let inv2a = f.inv(&f.mul(&f.from_i64(2), a)).unwrap();
    let mut roots = vec![f.mul(&f.sub(b, &s), &inv2a)];
    if !f.is_zero(&s) {
        roots.push(f.mul(&f.add(b, &s), &inv2a));
    }
    roots.sort_by(|x, y| f.cmp_elems(x, y));
    Ok(roots)
}

/// Inverts a batch of nonzero elements with a single field inversion.
pub fn batch_invert<F: Field>(f: &F, vals: &[F::Elem]) -> Vec<F::Elem> {
    let n = vals.len();
    if n == 0 {
        return vec![];
    }
    let mut prefix = Vec::with_capacity(n);
    let mut acc = f.one();
    for v in vals {
        prefix.push(acc.clone());
        acc = f.mul(&acc, v);
    }
    let mut inv = f.inv(&acc).expect("batch_invert requires nonzero inputs");
    let mut out = vec![f.zero(); n];
    for i in (0..n).rev() {
        out[i] = f.mul(&inv, &prefix[i]);
        inv = f.mul(&inv, &vals[i]);
    }
    out
}

/// Fraction-free determinant of a rational matrix: each row is scaled to
/// integers, Bareiss runs over BigInt, and the scaling is divided back out.
fn bareiss_det(n: usize, entries: &[BigRational]) -> BigRational {
    if n == 0 {
        return BigRational::one();
    }
    let mut m: Vec<Vec<BigInt>> = Vec::with_capacity(n);
    let mut scale = BigInt::one();
    for r in 0..n {
        let mut lcm = BigInt::one();
        for c in 0..n {
            lcm = lcm.lcm(entries[r * n + c].denom());
        }
        let row: Vec<BigInt> = (0..n)
            .map(|c| {
                let e = &entries[r * n + c];
                e.numer() * (&lcm / e.denom())
            })
            .collect();
        scale *= &lcm;
        m.push(row);
    }
    let mut sign = 1i64;
    let mut prev = BigInt::one();
    for k in 0..n {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&r| !m[r][k].is_zero()) {
                Some(r) => {
                    m.swap(k, r);
                    sign = -sign;
                }
                None => return BigRational::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&m[i][j] * &m[k][k] - &m[i][k] * &m[k][j]) / &prev;
                m[i][j] = v;
            }
            m[i][k] = BigInt::zero();
        }
        prev = m[k][k].clone();
    }
    BigRational::new(m[n - 1][n - 1].clone() * BigInt::from(sign), scale)
}
