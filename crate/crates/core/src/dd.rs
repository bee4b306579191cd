//! Double-double arithmetic: an unevaluated sum `hi + lo` of two `f64`s with
//! `|lo| <= ulp(hi)/2`, giving roughly 106 bits of significand.
//!
//! Only the operations required by the reference GSM kernel are provided.
//! `exp` reduces against a table of `2^(j/1024)` and finishes with a short
//! Taylor series; `ln` and `ln_1p` take one Newton step from the `f64`
//! value. Relative accuracy is around 1e-30, far beyond what is needed to
//! grade double-precision results.

use std::cmp::Ordering;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::OnceLock;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DoubleDouble {
    hi: f64,
    lo: f64,
}

const LN2: DoubleDouble = DoubleDouble {
    hi: std::f64::consts::LN_2,
    lo: 2.319_046_813_846_299_6e-17,
};


#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DoubleDouble {
    pub const ZERO: Self = Self { hi: 0.0, lo: 0.0 };
    pub const ONE: Self = Self { hi: 1.0, lo: 0.0 };

    pub fn new(hi: f64, lo: f64) -> Self {
        let (hi, lo) = quick_two_sum(hi, lo);
        Self::guard(hi, lo)
    }

    #[inline]
    pub fn hi(self) -> f64 {
        self.hi
    }

    #[inline]
    pub fn lo(self) -> f64 {
        self.lo
    }

    #[inline]
    fn guard(hi: f64, lo: f64) -> Self {
        if hi.is_finite() {
            Self { hi, lo }
        } else {
            Self { hi, lo: 0.0 }
        }
    }

    pub fn is_finite(self) -> bool {
        self.hi.is_finite()
    }

    /// Exact multiplication by `2^e` (barring underflow).
    pub fn ldexp(self, e: i32) -> Self {
        let mut out = self;
        let mut e = e;
        while e != 0 {
            let step = e.clamp(-1000, 1000);
            let f = f64::from_bits(((step + 1023) as u64) << 52);
            out = Self::guard(out.hi * f, out.lo * f);
            e -= step;
        }
        out
    }

    /// Addition without the low-word two-sum. Accurate when the operands do
    /// not nearly cancel, as in the series evaluations below.
    #[inline]
    fn add_fast(self, b: Self) -> Self {
        let (s, e) = two_sum(self.hi, b.hi);
        let (hi, lo) = quick_two_sum(s, e + self.lo + b.lo);
        Self::guard(hi, lo)
    }

    pub fn mul_f64(self, b: f64) -> Self {
        let (p1, p2) = two_prod(self.hi, b);
        let p2 = p2 + self.lo * b;
        let (hi, lo) = quick_two_sum(p1, p2);
        Self::guard(hi, lo)
    }

    pub fn div_f64(self, b: f64) -> Self {
        let q1 = self.hi / b;
        let (p1, p2) = two_prod(q1, b);
        let (s, e) = two_sum(self.hi, -p1);
        let e = e - p2 + self.lo;
        let q2 = (s + e) / b;
        let (hi, lo) = quick_two_sum(q1, q2);
        Self::guard(hi, lo)
    }

    /// `exp(r) - 1` by argument halving and squaring. Slow but accurate for
    /// `|r| < 1`; only used to build the lookup table.
    fn expm1_halving(r: Self) -> Self {
        let r = r.ldexp(-HALVINGS);
        let mut s = taylor_expm1(r, 10);
        // expm1(2x) = expm1(x) * (expm1(x) + 2)
        for _ in 0..HALVINGS {
            s = s * (s + Self::from(2.0));
        }
        s
    }

    pub fn exp(self) -> Self {
        if self.hi.is_nan() {
            return Self::from(f64::NAN);
        }
        if self.hi > 709.78 {
            return Self::from(f64::INFINITY);
        }
        if self.hi < -745.2 {
            return Self::ZERO;
        }
        if self.hi == 0.0 {
            return Self::ONE;
        }
        // x = n·ln2/N + r with |r| ≤ ln2/(2N), N = TABLE_SIZE
        let n = (self.hi * (TABLE_SIZE as f64) / LN2.hi).round();
        let r = self - LN2.mul_f64(n).ldexp(-TABLE_BITS);
        let n = n as i64;
        let j = n.rem_euclid(TABLE_SIZE as i64) as usize;
        let m = n.div_euclid(TABLE_SIZE as i64) as i32;
        let t = exp_table()[j];
        t.add_fast(t * reduced_expm1(r)).ldexp(m)
    }

    pub fn exp_m1(self) -> Self {
        let a = self.hi.abs();
        if a < 3.3e-4 {
            reduced_expm1(self)
        } else if a < 0.34 {
            // expm1(n·ln2/N + r) = E_n + (1 + E_n)·expm1(r)
            let n = (self.hi * (TABLE_SIZE as f64) / LN2.hi).round();
            let r = self - LN2.mul_f64(n).ldexp(-TABLE_BITS);
            let e = expm1_table()[(n as i64 + HALF_SPAN) as usize];
            let em = reduced_expm1(r);
            e + em.add_fast(e * em)
        } else {
            self.exp() - Self::ONE
        }
    }

    pub fn ln(self) -> Self {
        if self.hi.is_nan() || self.hi < 0.0 {
            return Self::from(f64::NAN);
        }
        if self.hi == 0.0 {
            return Self::from(f64::NEG_INFINITY);
        }
        if self.hi == f64::INFINITY {
            return self;
        }
        let x = Self::from(self.hi.ln());
        // One Newton step on exp(x) = a doubles the number of correct bits.
        x + self * (-x).exp() - Self::ONE
    }

    pub fn ln_1p(self) -> Self {
        if self.hi.is_nan() || self.hi < -1.0 {
            return Self::from(f64::NAN);
        }
        if self.hi == -1.0 && self.lo <= 0.0 {
            return Self::from(f64::NEG_INFINITY);
        }
        if self.hi < -0.5 || self.hi > 1e300 {
            return (self + Self::ONE).ln();
        }
        // Newton on expm1(y) = x. The correction is ~1e-16 relative, so its
        // divisor 1 + expm1(y) is only needed to double precision.
        let y = Self::from(self.hi.ln_1p());
        let e = y.exp_m1();
        y - (e - self).mul_f64(1.0 / (e + Self::ONE).hi)
    }
}

const TABLE_BITS: i32 = 10;
const TABLE_SIZE: usize = 1 << TABLE_BITS;
const HALVINGS: i32 = 10;

/// `expm1(r)` for `|r| ≤ ln2/2048`. Terms from `r^5` on are below 1e-16
/// relative to the result, so they are summed in plain `f64`.
#[inline]
fn reduced_expm1(r: DoubleDouble) -> DoubleDouble {
    const C: [f64; 4] = [1.0 / 120.0, 1.0 / 720.0, 1.0 / 5040.0, 1.0 / 40320.0];
    let x = r.hi;
    let tail = C[0] + x * (C[1] + x * (C[2] + x * C[3]));
    let inv = inv_factorials();
    let mut s = inv[4].add_fast(r.mul_f64(tail));
    for n in (1..4).rev() {
        s = inv[n].add_fast(r * s);
    }
    r * s
}

/// `Σ_{n=1}^{terms} r^n / n!` by Horner's rule.
fn taylor_expm1(r: DoubleDouble, terms: usize) -> DoubleDouble {
    let inv = inv_factorials();
    let mut s = inv[terms];
    for n in (1..terms).rev() {
        s = inv[n].add_fast(r * s);
    }
    r * s
}

fn inv_factorials() -> &'static [DoubleDouble] {
    static CELL: OnceLock<Vec<DoubleDouble>> = OnceLock::new();
    CELL.get_or_init(|| {
        let mut out = vec![DoubleDouble::ONE; 16];
        for n in 1..out.len() {
            out[n] = out[n - 1].div_f64(n as f64);
        }
        out
    })
}

const HALF_SPAN: i64 = (TABLE_SIZE / 2) as i64;

/// `expm1(n·ln2/TABLE_SIZE)` for `n = -TABLE_SIZE/2..=TABLE_SIZE/2`.
fn expm1_table() -> &'static [DoubleDouble] {
    static CELL: OnceLock<Vec<DoubleDouble>> = OnceLock::new();
    CELL.get_or_init(|| {
        (-HALF_SPAN..=HALF_SPAN)
            .map(|n| DoubleDouble::expm1_halving(LN2.mul_f64(n as f64).ldexp(-TABLE_BITS)))
            .collect()
    })
}

/// `2^(j/TABLE_SIZE)` for `j = 0..TABLE_SIZE`.
fn exp_table() -> &'static [DoubleDouble] {
    static CELL: OnceLock<Vec<DoubleDouble>> = OnceLock::new();
    CELL.get_or_init(|| {
        (0..TABLE_SIZE)
            .map(|j| {
                let r = LN2.mul_f64(j as f64).ldexp(-TABLE_BITS);
                DoubleDouble::expm1_halving(r) + DoubleDouble::ONE
            })
            .collect()
    })
}

impl From<f64> for DoubleDouble {
    fn from(v: f64) -> Self {
        Self { hi: v, lo: 0.0 }
    }
}

impl PartialOrd for DoubleDouble {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi)? {
            Ordering::Equal => self.lo.partial_cmp(&other.lo),
            ord => Some(ord),
        }
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    #[inline]
    fn add(self, b: Self) -> Self {
        let (s1, s2) = two_sum(self.hi, b.hi);
        if !s1.is_finite() {
            return Self { hi: s1, lo: 0.0 };
        }
        let (t1, t2) = two_sum(self.lo, b.lo);
        let s2 = s2 + t1;
        let (s1, s2) = quick_two_sum(s1, s2);
        let s2 = s2 + t2;
        let (hi, lo) = quick_two_sum(s1, s2);
        Self { hi, lo }
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    #[inline]
    fn sub(self, b: Self) -> Self {
        self + (-b)
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self { hi: -self.hi, lo: -self.lo }
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    #[inline]
    fn mul(self, b: Self) -> Self {
        let (p1, p2) = two_prod(self.hi, b.hi);
        let p2 = p2 + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p1, p2);
        Self::guard(hi, lo)
    }
}

impl Div for DoubleDouble {
    type Output = Self;
    fn div(self, b: Self) -> Self {
        let q1 = self.hi / b.hi;
        if !q1.is_finite() {
            return Self { hi: q1, lo: 0.0 };
        }
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (q1, q2) = quick_two_sum(q1, q2);
        Self { hi: q1, lo: q2 } + Self::from(q3)
    }
}

impl AddAssign for DoubleDouble {
    fn add_assign(&mut self, b: Self) {
        *self = *self + b;
    }
}

impl SubAssign for DoubleDouble {
    fn sub_assign(&mut self, b: Self) {
        *self = *self - b;
    }
}

impl MulAssign for DoubleDouble {
    fn mul_assign(&mut self, b: Self) {
        *self = *self * b;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dd(v: f64) -> DoubleDouble {
        DoubleDouble::from(v)
    }

    fn close(a: DoubleDouble, b: DoubleDouble, rel: f64) -> bool {
        let diff = (a - b).hi.abs();
        diff <= rel * b.hi.abs().max(1e-300)
    }

    #[test]
    fn one_third_times_three_is_one() {
        let third = dd(1.0) / dd(3.0);
        let back = third * dd(3.0);
        assert!((back - dd(1.0)).hi.abs() < 1e-31);
    }

    #[test]
    fn exp_ln_roundtrip() {
        for &v in &[1e-20, 1e-5, 0.3, 1.0, 2.5, 17.0, 300.0, -40.0, -700.0] {
            let x = dd(v) / dd(3.0);
            let y = x.exp().ln();
            // ln near 1 is only absolutely accurate
            let tol = 1e-30 * x.hi.abs().max(1.0);
            assert!((y - x).hi.abs() <= tol, "v={v} diff={:e}", (y - x).hi);
        }
    }

    #[test]
    fn exp_of_one_matches_e() {
        // e = 2.718281828459045 + 1.4456468917292502e-16
        let e = dd(1.0).exp();
        assert_eq!(e.hi, std::f64::consts::E);
        assert!((e.lo - 1.445_646_891_729_250_2e-16).abs() < 1e-31);
    }

    #[test]
    fn expm1_and_ln1p_are_inverse_near_zero() {
        for &v in &[1e-30, -1e-18, 3e-9, -0.2, 0.29, 0.1, -0.999, 5.0] {
            let x = dd(v) / dd(7.0);
            let y = x.exp_m1().ln_1p();
            assert!(close(y, x, 1e-28), "v={v}");
        }
    }

    #[test]
    fn expm1_tiny_argument_keeps_relative_precision() {
        let x = dd(1e-25);
        let y = x.exp_m1();
        let expect = x + dd(5e-51);
        assert!(close(y, expect, 1e-30));
    }

    #[test]
    fn ln1p_close_to_minus_one() {
        let x = dd(-1.0) + dd(1e-12);
        let y = x.ln_1p();
        assert!((y.hi - (1e-12f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn ordering_uses_low_word() {
        let a = DoubleDouble::new(1.0, 1e-20);
        let b = DoubleDouble::new(1.0, -1e-20);
        assert!(a > b);
        assert!(dd(f64::INFINITY) > a);
    }
}
