//! Points, affine functions, hyperplanes, classical strips, boxes and the
//! deterministic sample stream.
//!
//! Everything is `f64` and the ambient dimension is a runtime value capped at
//! [`MAX_DIM`]. Points are fixed-capacity and `Copy`, so the hot solver loops
//! never touch the heap.

use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::math;

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 8;

/// A point (or vector) in dimension `1..=MAX_DIM`.
#[derive(Clone, Copy)]
pub struct Point {
    len: u8,
    xs: [f64; MAX_DIM],
}

impl Point {
    /// Origin of the given dimension. Panics if `dim` is 0 or above [`MAX_DIM`].
    pub fn zeros(dim: usize) -> Self {
        assert!(
            dim >= 1 && dim <= MAX_DIM,
            "dimension must be in 1..={MAX_DIM}, got {dim}"
        );
        Point {
            len: dim as u8,
            xs: [0.0; MAX_DIM],
        }
    }

    /// Builds a point from a slice. Panics if the length is 0 or above [`MAX_DIM`].
    pub fn from_slice(v: &[f64]) -> Self {
        let mut p = Point::zeros(v.len());
        p.xs[..v.len()].copy_from_slice(v);
        p
    }

    /// Convenience constructor for 2D points.
    pub fn xy(x: f64, y: f64) -> Self {
        Point::from_slice(&[x, y])
    }

    pub fn dim(&self) -> usize {
        self.len as usize
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.xs[..self.len as usize]
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.xs[..self.len as usize]
    }

    pub fn dot(&self, other: &Point) -> f64 {
        debug_assert_eq!(self.len, other.len);
        let mut s = 0.0;
        for i in 0..self.dim() {
            s += self.xs[i] * other.xs[i];
        }
        s
    }

    pub fn norm2(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        math::sqrt(self.norm2())
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (*self - *other).norm()
    }

    /// `self + t * other`.
    pub fn axpy(&self, t: f64, other: &Point) -> Point {
        debug_assert_eq!(self.len, other.len);
        let mut r = *self;
        for i in 0..r.dim() {
            r.xs[i] += t * other.xs[i];
        }
        r
    }

    /// Unit vector in the same direction, or an error for (near-)zero input.
    pub fn normalized(&self) -> Result<Point> {
        let n = self.norm();
        if n < 1e-300 {
            return Err(Error::Degenerate("cannot normalize a zero vector".into()));
        }
        Ok(*self * (1.0 / n))
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|x| x.is_finite())
    }
}

impl Index<usize> for Point {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.as_slice()[i]
    }
}

impl IndexMut<usize> for Point {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.as_mut_slice()[i]
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        self.axpy(1.0, &rhs)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        self.axpy(-1.0, &rhs)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, t: f64) -> Point {
        let mut r = self;
        for i in 0..r.dim() {
            r.xs[i] *= t;
        }
        r
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        self * -1.0
    }
}

impl PartialEq for Point {
    fn eq(&self, other: &Point) -> bool {
        self.as_slice() == other.as_slice()
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.as_slice()).finish()
    }
}

/// The affine function `x -> <gradient, x> + offset`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineFunc {
    pub gradient: Point,
    pub offset: f64,
}

impl AffineFunc {
    pub fn new(gradient: Point, offset: f64) -> Self {
        AffineFunc { gradient, offset }
    }

    /// Evaluates `<gradient, x> + offset`.
    pub fn eval(&self, x: &Point) -> f64 {
        self.gradient.dot(x) + self.offset
    }
}

/// A hyperplane `{x : <normal, x> = offset}` with unit normal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hyperplane {
    normal: Point,
    offset: f64,
}

impl Hyperplane {
    /// Normalizes `normal` and rescales `offset` accordingly.
    /// Errors on a (near-)zero normal.
    pub fn new(normal: Point, offset: f64) -> Result<Self> {
        let n = normal.norm();
        if n < 1e-300 {
            return Err(Error::Degenerate("hyperplane normal is zero".into()));
        }
        Ok(Hyperplane {
            normal: normal * (1.0 / n),
            offset: offset / n,
        })
    }

    pub fn normal(&self) -> &Point {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Signed distance `<normal, x> - offset`.
    pub fn signed_dist(&self, x: &Point) -> f64 {
        self.normal.dot(x) - self.offset
    }

    /// Flips the sign so the first nonzero normal coordinate is positive.
    /// Parallel hyperplanes then compare equal coordinate-wise.
    pub fn canonical(&self) -> Hyperplane {
        for &c in self.normal.as_slice() {
            if c != 0.0 {
                if c < 0.0 {
                    return Hyperplane {
                        normal: -self.normal,
                        offset: -self.offset,
                    };
                }
                break;
            }
        }
        *self
    }
}

/// The classical strip `{x : |<normal, x> - center| <= width / 2}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassicalStrip {
    normal: Point,
    center: f64,
    width: f64,
}

impl ClassicalStrip {
    /// `normal` is normalized; `width` must be positive and finite.
    pub fn new(normal: Point, center: f64, width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite() && center.is_finite()) {
            return Err(Error::Precondition(
                "strip width must be positive and finite".into(),
            ));
        }
        let n = normal.norm();
        if n < 1e-300 {
            return Err(Error::Degenerate("strip normal is zero".into()));
        }
        Ok(ClassicalStrip {
            normal: normal * (1.0 / n),
            center: center / n,
            width,
        })
    }

    /// Strip of the given width around a hyperplane.
    pub fn around(plane: &Hyperplane, width: f64) -> Result<Self> {
        ClassicalStrip::new(*plane.normal(), plane.offset(), width)
    }

    pub fn normal(&self) -> &Point {
        &self.normal
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn dim(&self) -> usize {
        self.normal.dim()
    }

    /// Closed membership test, evaluated exactly as written.
    pub fn membership(&self, x: &Point) -> bool {
        math::abs(self.normal.dot(x) - self.center) <= self.width / 2.0
    }
}

/// Membership test for a classical strip.
pub fn strip_membership(strip: &ClassicalStrip, x: &Point) -> bool {
    strip.membership(x)
}

/// Evaluates an affine function.
pub fn eval_affine(f: &AffineFunc, x: &Point) -> f64 {
    f.eval(x)
}

/// An axis-aligned box `[low_1, high_1] x ... x [low_d, high_d]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundingBox {
    low: Point,
    high: Point,
}

impl BoundingBox {
    pub fn new(low: Point, high: Point) -> Result<Self> {
        if low.dim() != high.dim() {
            return Err(Error::DimensionMismatch {
                expected: low.dim(),
                got: high.dim(),
            });
        }
        for i in 0..low.dim() {
            if !(low[i] <= high[i]) {
                return Err(Error::Precondition(
                    "bounding box must have low <= high in every coordinate".into(),
                ));
            }
        }
        Ok(BoundingBox { low, high })
    }

    /// Smallest box containing all points. Errors on an empty slice.
    pub fn hull(points: &[Point]) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::Precondition("bounding box of no points".into()))?;
        let mut low = *first;
        let mut high = *first;
        for p in &points[1..] {
            for i in 0..low.dim() {
                if p[i] < low[i] {
                    low[i] = p[i];
                }
                if p[i] > high[i] {
                    high[i] = p[i];
                }
            }
        }
        BoundingBox::new(low, high)
    }

    pub fn low(&self) -> &Point {
        &self.low
    }

    pub fn high(&self) -> &Point {
        &self.high
    }

    pub fn dim(&self) -> usize {
        self.low.dim()
    }

    pub fn center(&self) -> Point {
        (self.low + self.high) * 0.5
    }

    pub fn contains(&self, x: &Point) -> bool {
        (0..self.dim()).all(|i| self.low[i] <= x[i] && x[i] <= self.high[i])
    }

    /// Half the diagonal length: radius of the enclosing ball around `center()`.
    pub fn circumradius(&self) -> f64 {
        (self.high - self.low).norm() / 2.0
    }

    /// Box grown by `pad` on every side.
    pub fn inflate(&self, pad: f64) -> BoundingBox {
        let mut low = self.low;
        let mut high = self.high;
        for i in 0..self.dim() {
            low[i] -= pad;
            high[i] += pad;
        }
        BoundingBox { low, high }
    }

    /// The `2^d` corner points.
    pub fn corners(&self) -> Vec<Point> {
        let d = self.dim();
        let mut out = Vec::with_capacity(1 << d);
        for mask in 0u32..(1 << d) {
            let mut p = self.low;
            for i in 0..d {
                if mask & (1 << i) != 0 {
                    p[i] = self.high[i];
                }
            }
            out.push(p);
        }
        out
    }
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic counter-based sample stream.
///
/// Sample `i` (1-based) of the stream with seed `s` is defined as
/// `splitmix64_mix(s + i * 0x9E3779B97F4A7C15)` with wrapping arithmetic,
/// where `splitmix64_mix` is the SplitMix64 finalizer. The stream state is
/// just `(seed, counter)`, so identical seeds and counters yield identical
/// samples on every platform and in any evaluation order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleStream {
    seed: u64,
    counter: u64,
}

impl SampleStream {
    pub fn new(seed: u64) -> Self {
        SampleStream { seed, counter: 0 }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix(self.seed.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        (self.next_u64() >> 11) as f64 * SCALE
    }

    /// Uniform in `[lo, hi)`.
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + self.next_f64() * (hi - lo)
    }

    /// Uniform integer in `0..n` (n > 0) by 128-bit multiply, bias < 2^-64.
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Child stream whose seed is `next_u64() ^ 0x517CC1B727220A95`;
    /// consumes one sample of the parent.
    pub fn split(&mut self) -> SampleStream {
        SampleStream::new(self.next_u64() ^ 0x517C_C1B7_2722_0A95)
    }

    /// Uniform direction on the unit sphere by rejection from the cube.
    pub fn unit_vector(&mut self, dim: usize) -> Point {
        loop {
            let mut p = Point::zeros(dim);
            for i in 0..dim {
                p[i] = self.range(-1.0, 1.0);
            }
            let n2 = p.norm2();
            if n2 > 1e-6 && n2 <= 1.0 {
                return p * (1.0 / math::sqrt(n2));
            }
        }
    }
}

/// Uniform sample in a box, one stream draw per coordinate.
pub fn sample_box(bb: &BoundingBox, stream: &mut SampleStream) -> Point {
    let mut p = Point::zeros(bb.dim());
    for i in 0..bb.dim() {
        p[i] = stream.range(bb.low()[i], bb.high()[i]);
    }
    p
}

/// `n` uniform samples in a box.
pub fn sample_box_n(bb: &BoundingBox, n: usize, stream: &mut SampleStream) -> Vec<Point> {
    (0..n).map(|_| sample_box(bb, stream)).collect()
}
