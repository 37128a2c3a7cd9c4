//! Minimal real-scalar abstraction so the Weyl and Verlinde sums can run either in
//! `f64` or in multi-precision floating point.

use std::cell::RefCell;

use astro_float::{BigFloat, Consts, Radix, RoundingMode};

use crate::lie::Q;

pub trait Real: Clone + Send + Sync {
    fn zero() -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn sqrt(&self) -> Self;
    /// `(cos 2 pi r, sin 2 pi r)` for an exact rational `r`.
    fn cis_turns(r: Q) -> (Self, Self);
    fn to_f64(&self) -> f64;

    fn neg(&self) -> Self {
        Self::zero().sub(self)
    }
}

impl Real for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn cis_turns(r: Q) -> (Self, Self) {
        let t = reduce_turns(r);
        let x = std::f64::consts::TAU * (*t.numer() as f64 / *t.denom() as f64);
        (x.cos(), x.sin())
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

/// Reduces a rational number of turns into `[-1/2, 1/2)` so trig arguments stay small.
fn reduce_turns(r: Q) -> Q {
    let shifted = r + Q::new(1, 2);
    let fl = shifted.floor();
    shifted - fl - Q::new(1, 2)
}

/// Working precision of the multi-precision mode in bits (about 57 decimal digits).
pub const HIGH_PRECISION_BITS: usize = 192;
const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("constant cache"));
}

/// Multi-precision real number.
#[derive(Clone, Debug)]
pub struct Hp(pub BigFloat);

impl Real for Hp {
    fn zero() -> Self {
        Hp(BigFloat::from_i64(0, HIGH_PRECISION_BITS))
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        let p = HIGH_PRECISION_BITS;
        Hp(BigFloat::from_i64(num, p).div(&BigFloat::from_i64(den, p), p, RM))
    }
    fn add(&self, o: &Self) -> Self {
        Hp(self.0.add(&o.0, HIGH_PRECISION_BITS, RM))
    }
    fn sub(&self, o: &Self) -> Self {
        Hp(self.0.sub(&o.0, HIGH_PRECISION_BITS, RM))
    }
    fn mul(&self, o: &Self) -> Self {
        Hp(self.0.mul(&o.0, HIGH_PRECISION_BITS, RM))
    }
    fn div(&self, o: &Self) -> Self {
        Hp(self.0.div(&o.0, HIGH_PRECISION_BITS, RM))
    }
    fn sqrt(&self) -> Self {
        Hp(self.0.sqrt(HIGH_PRECISION_BITS, RM))
    }
    fn cis_turns(r: Q) -> (Self, Self) {
        let p = HIGH_PRECISION_BITS;
        let t = reduce_turns(r);
        CONSTS.with(|cc| {
            let mut cc = cc.borrow_mut();
            let two_pi = cc.pi(p, RM).mul(&BigFloat::from_i64(2, p), p, RM);
            let x = two_pi
                .mul(&BigFloat::from_i64(*t.numer(), p), p, RM)
                .div(&BigFloat::from_i64(*t.denom(), p), p, RM);
            (Hp(x.cos(p, RM, &mut cc)), Hp(x.sin(p, RM, &mut cc)))
        })
    }
    fn to_f64(&self) -> f64 {
        if self.0.is_zero() {
            return 0.0;
        }
        CONSTS.with(|cc| {
            let s = self
                .0
                .format(Radix::Dec, RM, &mut cc.borrow_mut())
                .expect("decimal formatting");
            s.parse::<f64>().unwrap_or(f64::NAN)
        })
    }
}

/// Complex number over a [`Real`] scalar.
#[derive(Clone, Debug)]
pub struct Cx<T> {
    pub re: T,
    pub im: T,
}

impl<T: Real> Cx<T> {
    pub fn zero() -> Self {
        Cx { re: T::zero(), im: T::zero() }
    }
    pub fn add(&self, o: &Self) -> Self {
        Cx { re: self.re.add(&o.re), im: self.im.add(&o.im) }
    }
    pub fn sub(&self, o: &Self) -> Self {
        Cx { re: self.re.sub(&o.re), im: self.im.sub(&o.im) }
    }
    pub fn mul(&self, o: &Self) -> Self {
        Cx {
            re: self.re.mul(&o.re).sub(&self.im.mul(&o.im)),
            im: self.re.mul(&o.im).add(&self.im.mul(&o.re)),
        }
    }
    pub fn conj(&self) -> Self {
        Cx { re: self.re.clone(), im: self.im.neg() }
    }
    pub fn norm_sqr(&self) -> T {
        self.re.mul(&self.re).add(&self.im.mul(&self.im))
    }
    pub fn scale(&self, s: &T) -> Self {
        Cx { re: self.re.mul(s), im: self.im.mul(s) }
    }
    pub fn div(&self, o: &Self) -> Self {
        let n = o.norm_sqr();
        let p = self.mul(&o.conj());
        Cx { re: p.re.div(&n), im: p.im.div(&n) }
    }
    pub fn abs(&self) -> T {
        self.norm_sqr().sqrt()
    }
    pub fn to_c64(&self) -> num_complex::Complex64 {
        num_complex::Complex64::new(self.re.to_f64(), self.im.to_f64())
    }
}
