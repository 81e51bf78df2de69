//! Prime fields GF(p) and extensions GF(p^e).
//!
//! An element is stored as its coefficient vector over GF(p) packed into one
//! integer, `c0 + c1*p + ... + c_{e-1}*p^{e-1}`. For `e = 1` this is just the
//! residue, so prime-field code never pays for the extension machinery.

use std::fmt;

use super::LinalgError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct FieldElem(pub(crate) u32);

impl FieldElem {
    pub const ZERO: FieldElem = FieldElem(0);
    pub const ONE: FieldElem = FieldElem(1);

    /// The packed representation, in `0..q`.
    pub fn raw(self) -> u32 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FiniteField {
    p: u32,
    e: u32,
    order: u32,
    /// Monic modulus, coefficients low-to-high (length e+1).
    modulus: Vec<u32>,
}

pub fn is_prime(p: u32) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u32;
    while (d as u64) * (d as u64) <= p as u64 {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

impl FiniteField {
    pub fn prime(p: u32) -> Result<Self, LinalgError> {
        if !is_prime(p) {
            return Err(LinalgError::NotPrime(p));
        }
        Ok(FiniteField {
            p,
            e: 1,
            order: p,
            modulus: vec![0, 1],
        })
    }

    /// GF(p^e) built from [`find_irreducible`].
    pub fn extension(p: u32, e: u32) -> Result<Self, LinalgError> {
        if e <= 1 {
            return Self::prime(p);
        }
        if !is_prime(p) {
            return Err(LinalgError::NotPrime(p));
        }
        let modulus = find_irreducible(p, e)?;
        Self::with_modulus(p, modulus)
    }

    /// GF(p^e) for an explicit monic modulus (coefficients low-to-high).
    pub fn with_modulus(p: u32, modulus: Vec<u32>) -> Result<Self, LinalgError> {
        if !is_prime(p) {
            return Err(LinalgError::NotPrime(p));
        }
        let e = modulus.len().saturating_sub(1) as u32;
        if e == 0 || modulus.last() != Some(&1) || modulus.iter().any(|&c| c >= p) {
            return Err(LinalgError::BadModulus("modulus must be monic with reduced coefficients".into()));
        }
        if e == 1 {
            return Self::prime(p);
        }
        let order = (p as u64)
            .checked_pow(e)
            .filter(|&q| q <= u32::MAX as u64)
            .ok_or_else(|| LinalgError::BadModulus(format!("field GF({p}^{e}) too large")))?
            as u32;
        if !is_irreducible(p, &modulus) {
            return Err(LinalgError::BadModulus("modulus is reducible".into()));
        }
        Ok(FiniteField { p, e, order, modulus })
    }

    pub fn characteristic(&self) -> u32 {
        self.p
    }

    pub fn degree(&self) -> u32 {
        self.e
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    pub fn is_prime_field(&self) -> bool {
        self.e == 1
    }

    pub fn zero(&self) -> FieldElem {
        FieldElem::ZERO
    }

    pub fn one(&self) -> FieldElem {
        FieldElem::ONE
    }

    /// Image of an integer under `Z -> GF(p) ⊆ GF(p^e)`.
    pub fn from_int(&self, x: i64) -> FieldElem {
        FieldElem(x.rem_euclid(self.p as i64) as u32)
    }

    pub fn elem(&self, raw: u32) -> Result<FieldElem, LinalgError> {
        if raw < self.order {
            Ok(FieldElem(raw))
        } else {
            Err(LinalgError::BadElement(raw, self.order))
        }
    }

    pub fn elements(&self) -> impl Iterator<Item = FieldElem> {
        (0..self.order).map(FieldElem)
    }

    pub fn coeffs(&self, a: FieldElem) -> Vec<u32> {
        let mut v = a.0;
        (0..self.e)
            .map(|_| {
                let c = v % self.p;
                v /= self.p;
                c
            })
            .collect()
    }

    pub fn from_coeffs(&self, coeffs: &[u32]) -> FieldElem {
        let mut packed = 0u64;
        for i in (0..self.e as usize).rev() {
            let c = coeffs.get(i).copied().unwrap_or(0) % self.p;
            packed = packed * self.p as u64 + c as u64;
        }
        FieldElem(packed as u32)
    }

    #[inline]
    pub fn add(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        if self.e == 1 {
            let s = a.0 as u64 + b.0 as u64;
            let p = self.p as u64;
            FieldElem(if s >= p { s - p } else { s } as u32)
        } else {
            self.digitwise(a, b, |x, y| (x + y) % self.p)
        }
    }

    #[inline]
    pub fn neg(&self, a: FieldElem) -> FieldElem {
        if self.e == 1 {
            FieldElem(if a.0 == 0 { 0 } else { self.p - a.0 })
        } else {
            self.digitwise(a, FieldElem::ZERO, |x, _| (self.p - x) % self.p)
        }
    }

    #[inline]
    pub fn sub(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        if self.e == 1 {
            FieldElem(((a.0 as u64 * b.0 as u64) % self.p as u64) as u32)
        } else {
            self.ext_mul(a, b)
        }
    }

    pub fn pow(&self, a: FieldElem, mut exp: u64) -> FieldElem {
        let mut base = a;
        let mut acc = FieldElem::ONE;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    pub fn inv(&self, a: FieldElem) -> Option<FieldElem> {
        if a.is_zero() {
            None
        } else {
            Some(self.pow(a, self.order as u64 - 2))
        }
    }

    fn digitwise(&self, a: FieldElem, b: FieldElem, op: impl Fn(u32, u32) -> u32) -> FieldElem {
        let (mut x, mut y) = (a.0, b.0);
        let mut out = 0u64;
        let mut scale = 1u64;
        for _ in 0..self.e {
            out += op(x % self.p, y % self.p) as u64 * scale;
            x /= self.p;
            y /= self.p;
            scale *= self.p as u64;
        }
        FieldElem(out as u32)
    }

    fn ext_mul(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        let e = self.e as usize;
        let p = self.p as u64;
        let mut x = [0u64; 32];
        let mut y = [0u64; 32];
        let (mut va, mut vb) = (a.0, b.0);
        for i in 0..e {
            x[i] = (va % self.p) as u64;
            y[i] = (vb % self.p) as u64;
            va /= self.p;
            vb /= self.p;
        }
        let mut prod = [0u64; 64];
        for i in 0..e {
            if x[i] == 0 {
                continue;
            }
            for j in 0..e {
                prod[i + j] = (prod[i + j] + x[i] * y[j]) % p;
            }
        }
        for d in (e..2 * e - 1).rev() {
            let c = prod[d];
            if c == 0 {
                continue;
            }
            prod[d] = 0;
            for (i, &m) in self.modulus[..e].iter().enumerate() {
                // x^e = -(m_0 + ... + m_{e-1} x^{e-1})
                let t = prod[d - e + i] + (p - (m as u64)) * c;
                prod[d - e + i] = t % p;
            }
        }
        let mut out = 0u64;
        for i in (0..e).rev() {
            out = out * p + prod[i];
        }
        FieldElem(out as u32)
    }

    /// `c0+c1*t+...` with zero terms omitted; `0` for zero.
    pub fn format(&self, a: FieldElem) -> String {
        if self.e == 1 {
            return a.0.to_string();
        }
        let terms: Vec<String> = self
            .coeffs(a)
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(i, &c)| match i {
                0 => c.to_string(),
                1 => format!("{c}*t"),
                _ => format!("{c}*t^{i}"),
            })
            .collect();
        if terms.is_empty() {
            "0".into()
        } else {
            terms.join("+")
        }
    }

    /// Inverse of [`FiniteField::format`].
    pub fn parse(&self, s: &str) -> Result<FieldElem, LinalgError> {
        let bad = || LinalgError::BadElementText(s.to_string());
        if self.e == 1 {
            let v: i64 = s.trim().parse().map_err(|_| bad())?;
            return Ok(self.from_int(v));
        }
        let mut coeffs = vec![0u32; self.e as usize];
        for term in s.trim().split('+') {
            let term = term.trim();
            let (c, deg) = match term.split_once('*') {
                None => (term, 0usize),
                Some((c, t)) => {
                    let deg = match t {
                        "t" => 1,
                        _ => t.strip_prefix("t^").ok_or_else(bad)?.parse().map_err(|_| bad())?,
                    };
                    (c, deg)
                }
            };
            let c: u64 = c.parse().map_err(|_| bad())?;
            if deg >= coeffs.len() {
                return Err(bad());
            }
            coeffs[deg] = ((coeffs[deg] as u64 + c) % self.p as u64) as u32;
        }
        Ok(self.from_coeffs(&coeffs))
    }
}

impl fmt::Display for FiniteField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.e == 1 {
            write!(f, "GF({})", self.p)
        } else {
            write!(f, "GF({}^{})", self.p, self.e)
        }
    }
}

/// Remainder of `a` modulo monic `m` over GF(p); both low-to-high.
fn poly_rem(p: u32, a: &[u32], m: &[u32]) -> Vec<u32> {
    let p64 = p as u64;
    let mut r: Vec<u64> = a.iter().map(|&c| c as u64).collect();
    let dm = m.len() - 1;
    while r.len() > dm {
        let lead = r.pop().unwrap();
        if lead != 0 {
            let shift = r.len() - dm;
            for i in 0..dm {
                r[shift + i] = (r[shift + i] + (p64 - m[i] as u64) * lead) % p64;
            }
        }
    }
    while r.last() == Some(&0) {
        r.pop();
    }
    r.into_iter().map(|c| c as u32).collect()
}

/// Monic polynomial of the given degree whose remaining coefficients are the
/// base-p digits of `index` (c0 least significant).
fn monic_from_index(p: u32, degree: usize, mut index: u64) -> Vec<u32> {
    let mut coeffs = Vec::with_capacity(degree + 1);
    for _ in 0..degree {
        coeffs.push((index % p as u64) as u32);
        index /= p as u64;
    }
    coeffs.push(1);
    coeffs
}

/// Trial division against every monic polynomial of degree `1..=deg/2`.
pub fn is_irreducible(p: u32, poly: &[u32]) -> bool {
    let deg = poly.len() - 1;
    for d in 1..=deg / 2 {
        let count = (p as u64).pow(d as u32);
        for idx in 0..count {
            let divisor = monic_from_index(p, d, idx);
            if poly_rem(p, poly, &divisor).is_empty() {
                return false;
            }
        }
    }
    true
}

/// The smallest monic irreducible polynomial of degree `e` over GF(p), with
/// candidates compared from the highest-degree coefficient down.
pub fn find_irreducible(p: u32, e: u32) -> Result<Vec<u32>, LinalgError> {
    if !is_prime(p) {
        return Err(LinalgError::NotPrime(p));
    }
    if e <= 1 {
        return Ok(vec![0, 1]);
    }
    let count = (p as u64)
        .checked_pow(e)
        .ok_or_else(|| LinalgError::BadModulus(format!("degree {e} too large")))?;
    // The most significant digit is the x^{e-1} coefficient, so increasing
    // index order is exactly high-degree-first lexicographic order.
    (0..count)
        .map(|idx| monic_from_index(p, e as usize, idx))
        .find(|poly| is_irreducible(p, poly))
        .ok_or_else(|| LinalgError::BadModulus("no irreducible polynomial".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn irreducible_examples() {
        assert_eq!(find_irreducible(2, 2).unwrap(), vec![1, 1, 1]);
        assert_eq!(find_irreducible(2, 3).unwrap(), vec![1, 1, 0, 1]);
        assert_eq!(find_irreducible(3, 2).unwrap(), vec![1, 0, 1]);
    }

    #[test]
    fn brute_irreducible_cubics_gf2() {
        // A cubic is reducible iff it has a root; check the chosen one by roots.
        let poly = find_irreducible(2, 3).unwrap();
        for x in 0..2u32 {
            let v: u32 = poly.iter().enumerate().map(|(i, &c)| c * x.pow(i as u32)).sum();
            assert_eq!(v % 2, 1);
        }
        // and every smaller candidate has a root
        for idx in 0..3u64 {
            let cand = monic_from_index(2, 3, idx);
            let has_root = (0..2u32).any(|x| {
                cand.iter().enumerate().map(|(i, &c)| c * x.pow(i as u32)).sum::<u32>() % 2 == 0
            });
            assert!(has_root, "{cand:?}");
        }
    }

    #[test]
    fn rejects_non_primes_and_reducible_moduli() {
        assert!(FiniteField::prime(4).is_err());
        assert!(FiniteField::with_modulus(2, vec![1, 0, 1]).is_err());
        assert!(FiniteField::with_modulus(2, vec![1, 1, 1]).is_ok());
    }

    fn check_field_axioms(f: &FiniteField) {
        let elems: Vec<_> = f.elements().collect();
        for &a in &elems {
            assert_eq!(f.add(a, f.neg(a)), f.zero());
            if !a.is_zero() {
                assert_eq!(f.mul(a, f.inv(a).unwrap()), f.one(), "{a:?} in {f}");
            }
            for &b in &elems {
                assert_eq!(f.mul(a, b), f.mul(b, a));
                for &c in elems.iter().take(5) {
                    assert_eq!(
                        f.mul(a, f.add(b, c)),
                        f.add(f.mul(a, b), f.mul(a, c))
                    );
                }
            }
        }
    }

    #[test]
    fn field_axioms_small_fields() {
        for (p, e) in [(2, 1), (3, 1), (5, 1), (2, 2), (2, 3), (3, 2), (2, 4)] {
            check_field_axioms(&FiniteField::extension(p, e).unwrap());
        }
    }

    #[test]
    fn gf4_multiplication_table() {
        let f = FiniteField::extension(2, 2).unwrap();
        // t * t = t + 1 under x^2 + x + 1
        let t = f.from_coeffs(&[0, 1]);
        assert_eq!(f.mul(t, t), f.from_coeffs(&[1, 1]));
        assert_eq!(f.format(f.mul(t, t)), "1+1*t");
        assert_eq!(f.parse("1+1*t").unwrap(), f.mul(t, t));
    }
}
