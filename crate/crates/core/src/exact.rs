//! Exact arithmetic in the real quadratic field ℚ(√3).
//!
//! Every lattice used here (square, triangular, hexagonal and their line
//! arrangements) has vertex coordinates of the form `p + q·√3` with rational
//! `p` and `q`, and the field is closed under rotations by multiples of
//! π/6. Equality and ordering are decided exactly: no epsilons.

use std::cmp::Ordering;
use std::fmt;
use std::hash::Hash;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num::bigint::BigInt;
use num::rational::{BigRational, Ratio};
use num::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// A rational number, kept in machine integers while it fits.
///
/// Canonical: a value whose reduced numerator and denominator fit in `i64`
/// is always `Small`, so derived equality and hashing are exact.
#[derive(Clone, PartialEq, Eq, Hash)]
enum Q {
    Small(Ratio<i64>),
    Big(BigRational),
}

impl Q {
    fn zero() -> Q {
        Q::Small(Ratio::zero())
    }

    fn int(n: i64) -> Q {
        Q::Small(Ratio::from_integer(n))
    }

    fn big(&self) -> BigRational {
        match self {
            Q::Small(r) => BigRational::new((*r.numer()).into(), (*r.denom()).into()),
            Q::Big(r) => r.clone(),
        }
    }

    fn from_big(r: BigRational) -> Q {
        match (r.numer().to_i64(), r.denom().to_i64()) {
            // i64::MIN has no negation; keep it out of the fast path.
            (Some(n), Some(d)) if n != i64::MIN && d != i64::MIN => Q::Small(Ratio::new_raw(n, d)),
            _ => Q::Big(r),
        }
    }

    fn is_zero(&self) -> bool {
        match self {
            Q::Small(r) => r.is_zero(),
            Q::Big(r) => r.is_zero(),
        }
    }

    fn signum(&self) -> i32 {
        match self {
            Q::Small(r) => r.numer().signum() as i32,
            Q::Big(r) => {
                if r.is_zero() {
                    0
                } else if r.is_positive() {
                    1
                } else {
                    -1
                }
            }
        }
    }

    fn to_f64(&self) -> f64 {
        match self {
            Q::Small(r) => *r.numer() as f64 / *r.denom() as f64,
            Q::Big(r) => match (r.numer().to_f64(), r.denom().to_f64()) {
                (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
                _ => r.to_f64().unwrap_or(f64::NAN),
            },
        }
    }

    fn numer_i64(&self) -> Option<[i64; 2]> {
        match self {
            Q::Small(r) => Some([*r.numer(), *r.denom()]),
            Q::Big(_) => None,
        }
    }

    fn op(
        &self,
        rhs: &Q,
        small: impl Fn(&Ratio<i64>, &Ratio<i64>) -> Option<Ratio<i64>>,
        big: impl Fn(&BigRational, &BigRational) -> BigRational,
    ) -> Q {
        if let (Q::Small(a), Q::Small(b)) = (self, rhs) {
            if let Some(r) = small(a, b) {
                if *r.numer() != i64::MIN && *r.denom() != i64::MIN {
                    return Q::Small(r);
                }
            }
        }
        Q::from_big(big(&self.big(), &rhs.big()))
    }

    fn add(&self, rhs: &Q) -> Q {
        self.op(rhs, |a, b| a.checked_add(b), |a, b| a + b)
    }

    fn sub(&self, rhs: &Q) -> Q {
        self.op(rhs, |a, b| a.checked_sub(b), |a, b| a - b)
    }

    fn mul(&self, rhs: &Q) -> Q {
        self.op(rhs, |a, b| a.checked_mul(b), |a, b| a * b)
    }

    fn div(&self, rhs: &Q) -> Q {
        self.op(rhs, |a, b| a.checked_div(b), |a, b| a / b)
    }

    fn neg(&self) -> Q {
        match self {
            Q::Small(r) => Q::Small(-r),
            Q::Big(r) => Q::from_big(-r),
        }
    }

    fn cmp(&self, rhs: &Q) -> Ordering {
        self.sub(rhs).signum().cmp(&0)
    }
}

impl fmt::Display for Q {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Q::Small(r) => write!(f, "{r}"),
            Q::Big(r) => write!(f, "{r}"),
        }
    }
}

/// An element `rat + surd·√3` of ℚ(√3).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QSqrt3 {
    rat: Q,
    surd: Q,
}

impl Default for QSqrt3 {
    fn default() -> Self {
        Self { rat: Q::zero(), surd: Q::zero() }
    }
}

impl QSqrt3 {
    pub fn new(rat: BigRational, surd: BigRational) -> Self {
        Self { rat: Q::from_big(rat), surd: Q::from_big(surd) }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::int(1)
    }

    pub fn int(n: i64) -> Self {
        Self::from_rational(BigRational::from_integer(BigInt::from(n)))
    }

    /// The rational number `num/den`.
    pub fn ratio(num: i64, den: i64) -> Self {
        Self::from_rational(BigRational::new(num.into(), den.into()))
    }

    pub fn from_rational(r: BigRational) -> Self {
        Self { rat: Q::from_big(r), surd: Q::zero() }
    }

    /// `√3`.
    pub fn sqrt3() -> Self {
        Self { rat: Q::zero(), surd: Q::int(1) }
    }

    /// `(a/b) + (c/d)·√3` from four machine integers.
    pub fn from_parts(a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        if b == 0 || d == 0 {
            return Err(Error::InvalidParameter("zero denominator in exact coordinate".into()));
        }
        Ok(Self::new(BigRational::new(a.into(), b.into()), BigRational::new(c.into(), d.into())))
    }

    /// The exact value of a finite `f64` (a dyadic rational).
    pub fn from_f64(x: f64) -> Result<Self> {
        BigRational::from_float(x)
            .map(Self::from_rational)
            .ok_or_else(|| Error::InvalidParameter(format!("{x} is not a finite number")))
    }

    pub fn rational_part(&self) -> BigRational {
        self.rat.big()
    }

    pub fn surd_part(&self) -> BigRational {
        self.surd.big()
    }

    pub fn is_rational(&self) -> bool {
        self.surd.is_zero()
    }

    pub fn is_zero(&self) -> bool {
        self.rat.is_zero() && self.surd.is_zero()
    }

    /// `[p_num, p_den, q_num, q_den]` when all four fit in an `i64`.
    pub fn to_parts(&self) -> Option<[i64; 4]> {
        let [a, b] = self.rat.numer_i64()?;
        let [c, d] = self.surd.numer_i64()?;
        Some([a, b, c, d])
    }

    /// Exact sign, -1, 0 or +1.
    pub fn signum(&self) -> i32 {
        let sa = self.rat.signum();
        let sb = self.surd.signum();
        if sb == 0 {
            return sa;
        }
        if sa == 0 || sa == sb {
            return sb;
        }
        // Opposite signs: compare a² with 3b². They are never equal because
        // √3 is irrational.
        let a2 = self.rat.mul(&self.rat);
        let b2 = self.surd.mul(&self.surd).mul(&Q::int(3));
        if a2.cmp(&b2) == Ordering::Greater {
            sa
        } else {
            sb
        }
    }

    pub fn is_negative(&self) -> bool {
        self.signum() < 0
    }

    pub fn is_positive(&self) -> bool {
        self.signum() > 0
    }

    pub fn abs(&self) -> Self {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    /// The Galois conjugate `rat − surd·√3`.
    pub fn conjugate(&self) -> Self {
        Self { rat: self.rat.clone(), surd: self.surd.neg() }
    }

    /// `1/x`; `None` for zero.
    pub fn recip(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        // (a + b√3)(a − b√3) = a² − 3b², a non-zero rational.
        let norm = self.rat.mul(&self.rat).sub(&self.surd.mul(&self.surd).mul(&Q::int(3)));
        Some(Self { rat: self.rat.div(&norm), surd: self.surd.neg().div(&norm) })
    }

    pub fn to_f64(&self) -> f64 {
        self.rat.to_f64() + self.surd.to_f64() * SQRT3
    }

    /// Largest integer `≤ self`.
    pub fn floor(&self) -> BigInt {
        let guess = self.to_f64().floor();
        let mut k = BigInt::from(guess as i64);
        // The float estimate is within one unit for every magnitude we use;
        // walk to the exact answer.
        while Self::from_rational(BigRational::from_integer(k.clone())) > *self {
            k -= 1;
        }
        while Self::from_rational(BigRational::from_integer(&k + 1)) <= *self {
            k += 1;
        }
        k
    }

    pub fn square(&self) -> Self {
        self * self
    }
}

impl PartialOrd for QSqrt3 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QSqrt3 {
    fn cmp(&self, other: &Self) -> Ordering {
        (self - other).signum().cmp(&0)
    }
}

impl fmt::Debug for QSqrt3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for QSqrt3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.surd.is_zero() {
            write!(f, "{}", self.rat)
        } else if self.rat.is_zero() {
            write!(f, "{}√3", self.surd)
        } else if self.surd.signum() > 0 {
            write!(f, "{}+{}√3", self.rat, self.surd)
        } else {
            write!(f, "{}{}√3", self.rat, self.surd)
        }
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait<QSqrt3> for QSqrt3 {
            type Output = QSqrt3;
            fn $method(self, rhs: QSqrt3) -> QSqrt3 {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&QSqrt3> for QSqrt3 {
            type Output = QSqrt3;
            fn $method(self, rhs: &QSqrt3) -> QSqrt3 {
                (&self).$method(rhs)
            }
        }
        impl $trait<QSqrt3> for &QSqrt3 {
            type Output = QSqrt3;
            fn $method(self, rhs: QSqrt3) -> QSqrt3 {
                self.$method(&rhs)
            }
        }
    };
}

impl Add<&QSqrt3> for &QSqrt3 {
    type Output = QSqrt3;
    fn add(self, rhs: &QSqrt3) -> QSqrt3 {
        QSqrt3 { rat: self.rat.add(&rhs.rat), surd: self.surd.add(&rhs.surd) }
    }
}

impl Sub<&QSqrt3> for &QSqrt3 {
    type Output = QSqrt3;
    fn sub(self, rhs: &QSqrt3) -> QSqrt3 {
        QSqrt3 { rat: self.rat.sub(&rhs.rat), surd: self.surd.sub(&rhs.surd) }
    }
}

impl Mul<&QSqrt3> for &QSqrt3 {
    type Output = QSqrt3;
    fn mul(self, rhs: &QSqrt3) -> QSqrt3 {
        let cross = self.surd.mul(&rhs.surd).mul(&Q::int(3));
        QSqrt3 {
            rat: self.rat.mul(&rhs.rat).add(&cross),
            surd: self.rat.mul(&rhs.surd).add(&self.surd.mul(&rhs.rat)),
        }
    }
}

impl Div<&QSqrt3> for &QSqrt3 {
    type Output = QSqrt3;
    /// Panics on division by zero, like the integer types.
    fn div(self, rhs: &QSqrt3) -> QSqrt3 {
        self * &rhs.recip().expect("division by zero in ℚ(√3)")
    }
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl Neg for &QSqrt3 {
    type Output = QSqrt3;
    fn neg(self) -> QSqrt3 {
        QSqrt3 { rat: self.rat.neg(), surd: self.surd.neg() }
    }
}

impl Neg for QSqrt3 {
    type Output = QSqrt3;
    fn neg(self) -> QSqrt3 {
        -&self
    }
}

/// Serialized as `[p_num, p_den, q_num, q_den]`, the graph-file layout.
impl serde::Serialize for QSqrt3 {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let parts = self
            .to_parts()
            .ok_or_else(|| serde::ser::Error::custom(format!("{self} does not fit in 64-bit parts")))?;
        parts.serialize(serializer)
    }
}

impl<'de> serde::Deserialize<'de> for QSqrt3 {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let [a, b, c, d] = <[i64; 4]>::deserialize(deserializer)?;
        QSqrt3::from_parts(a, b, c, d).map_err(serde::de::Error::custom)
    }
}

impl From<i64> for QSqrt3 {
    fn from(n: i64) -> Self {
        Self::int(n)
    }
}

/// A point (or vector) of the plane with coordinates in ℚ(√3).
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Point {
    pub x: QSqrt3,
    pub y: QSqrt3,
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl Point {
    pub fn new(x: QSqrt3, y: QSqrt3) -> Self {
        Self { x, y }
    }

    pub fn origin() -> Self {
        Self::default()
    }

    pub fn int(x: i64, y: i64) -> Self {
        Self { x: QSqrt3::int(x), y: QSqrt3::int(y) }
    }

    pub fn dot(&self, other: &Point) -> QSqrt3 {
        &self.x * &other.x + &self.y * &other.y
    }

    /// z-component of the cross product `self × other`.
    pub fn cross(&self, other: &Point) -> QSqrt3 {
        &self.x * &other.y - &self.y * &other.x
    }

    pub fn norm2(&self) -> QSqrt3 {
        self.dot(self)
    }

    pub fn dist2(&self, other: &Point) -> QSqrt3 {
        (self - other).norm2()
    }

    pub fn scale(&self, s: &QSqrt3) -> Point {
        Point { x: &self.x * s, y: &self.y * s }
    }

    /// Rotation by `steps · 2π/order` about `center`.
    pub fn rotate(&self, rotation: &Rotation, center: &Point) -> Point {
        let d = self - center;
        let x = &rotation.cos * &d.x - &rotation.sin * &d.y;
        let y = &rotation.sin * &d.x + &rotation.cos * &d.y;
        Point { x: &x + &center.x, y: &y + &center.y }
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (self.x.to_f64(), self.y.to_f64())
    }

    /// Orientation of the triple `(a, b, c)`: +1 counter-clockwise, −1
    /// clockwise, 0 collinear.
    pub fn orient(a: &Point, b: &Point, c: &Point) -> i32 {
        (b - a).cross(&(c - a)).signum()
    }

    /// Lexicographic `(x, y)` order, the order used for canonical sorting.
    pub fn lex_cmp(&self, other: &Point) -> Ordering {
        self.x.cmp(&other.x).then_with(|| self.y.cmp(&other.y))
    }
}

/// Serialized as `[x, y]` with each coordinate in the four-integer layout.
impl serde::Serialize for Point {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        [&self.x, &self.y].serialize(serializer)
    }
}

impl<'de> serde::Deserialize<'de> for Point {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let [x, y] = <[QSqrt3; 2]>::deserialize(deserializer)?;
        Ok(Point { x, y })
    }
}

impl Add<&Point> for &Point {
    type Output = Point;
    fn add(self, rhs: &Point) -> Point {
        Point { x: &self.x + &rhs.x, y: &self.y + &rhs.y }
    }
}

impl Sub<&Point> for &Point {
    type Output = Point;
    fn sub(self, rhs: &Point) -> Point {
        Point { x: &self.x - &rhs.x, y: &self.y - &rhs.y }
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        &self + &rhs
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        &self - &rhs
    }
}

impl Neg for &Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point { x: -&self.x, y: -&self.y }
    }
}

/// An exact plane rotation by `2π/order` (or a power of it).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rotation {
    pub order: u32,
    pub cos: QSqrt3,
    pub sin: QSqrt3,
}

impl Rotation {
    /// Rotation by `2π/order`.
    ///
    /// Only orders whose cosine and sine lie in ℚ(√3) are representable:
    /// 1, 2, 3, 4, 6 and 12. Every other order in `1..=12` is rejected as
    /// excluded: a translation-invariant locally finite point set admits
    /// only orders 2, 3, 4 and 6.
    pub fn of_order(order: u32) -> Result<Self> {
        let half = || QSqrt3::ratio(1, 2);
        let half_sqrt3 = || QSqrt3::new(BigRational::zero(), BigRational::new(1.into(), 2.into()));
        let (cos, sin) = match order {
            1 => (QSqrt3::one(), QSqrt3::zero()),
            2 => (QSqrt3::int(-1), QSqrt3::zero()),
            3 => (-half(), half_sqrt3()),
            4 => (QSqrt3::zero(), QSqrt3::one()),
            6 => (half(), half_sqrt3()),
            12 => (half_sqrt3(), half()),
            _ => return Err(Error::RotationExcluded { order }),
        };
        Ok(Self { order, cos, sin })
    }

    /// Rotation by `steps · 2π/order`.
    pub fn power(&self, steps: u32) -> Rotation {
        let mut acc = Rotation { order: self.order, cos: QSqrt3::one(), sin: QSqrt3::zero() };
        for _ in 0..(steps % self.order.max(1)) {
            acc = acc.compose(self);
        }
        acc
    }

    fn compose(&self, other: &Rotation) -> Rotation {
        Rotation {
            order: self.order,
            cos: &self.cos * &other.cos - &self.sin * &other.sin,
            sin: &self.sin * &other.cos + &self.cos * &other.sin,
        }
    }

    /// Rotation by `k · π/6`, used for line directions.
    pub fn by_twelfths(k: u32) -> Rotation {
        Rotation::of_order(12).expect("order 12 is representable").power(k % 12)
    }
}
