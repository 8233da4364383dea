//! Trinion and quaternion scalar arithmetic.
//!
//! Trinions form a commutative ring on the basis `{1, ī, j̄}` with
//! `ī² = j̄`, `ī·j̄ = j̄·ī = −1` and `j̄² = −ī`. The ring contains zero
//! divisors, so inversion goes through the 3x3 multiplication matrix with a
//! `δI` fallback when that matrix is singular.
//!
//! Quaternions are the usual non-commutative division algebra on
//! `{1, ı, ȷ, κ}` with `ıȷ = κ`, `ȷκ = ı`, `κı = ȷ`.

use num_complex::Complex64;

use crate::linalg;

/// Threshold below which the trinion multiplication matrix is treated as
/// singular and replaced by `δI`.
pub const TRINION_SINGULAR_DET: f64 = 1e-12;

/// Default regularization constant for algebraic fallbacks.
pub const DEFAULT_DELTA: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Trinion {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Trinion {
    pub const fn new(a: f64, b: f64, c: f64) -> Self {
        Trinion { a, b, c }
    }

    pub const ZERO: Trinion = Trinion::new(0.0, 0.0, 0.0);
    pub const ONE: Trinion = Trinion::new(1.0, 0.0, 0.0);
    /// The basis element ī.
    pub const I: Trinion = Trinion::new(0.0, 1.0, 0.0);
    /// The basis element j̄.
    pub const J: Trinion = Trinion::new(0.0, 0.0, 1.0);

    pub fn from_real(a: f64) -> Self {
        Trinion::new(a, 0.0, 0.0)
    }

    /// Conjugate `v* = v_a − v_b·j̄ − v_c·ī`. Note the swapped imaginary
    /// axes; this is what makes `Re(v·v*) = |v|²` work out.
    pub fn conj(self) -> Self {
        Trinion::new(self.a, -self.c, -self.b)
    }

    pub fn re(self) -> f64 {
        self.a
    }

    pub fn abs_sq(self) -> f64 {
        self.a * self.a + self.b * self.b + self.c * self.c
    }

    pub fn abs(self) -> f64 {
        self.abs_sq().sqrt()
    }

    pub fn scale(self, s: f64) -> Self {
        Trinion::new(self.a * s, self.b * s, self.c * s)
    }

    /// The 3x3 real matrix `M(v)` with `v·w = M(v)·[w_a w_b w_c]ᵀ`.
    pub fn mul_matrix(self) -> [[f64; 3]; 3] {
        [
            [self.a, -self.c, -self.b],
            [self.b, self.a, -self.c],
            [self.c, self.b, self.a],
        ]
    }
}

impl std::ops::Add for Trinion {
    type Output = Trinion;
    fn add(self, rhs: Trinion) -> Trinion {
        Trinion::new(self.a + rhs.a, self.b + rhs.b, self.c + rhs.c)
    }
}

impl std::ops::Sub for Trinion {
    type Output = Trinion;
    fn sub(self, rhs: Trinion) -> Trinion {
        Trinion::new(self.a - rhs.a, self.b - rhs.b, self.c - rhs.c)
    }
}

impl std::ops::Neg for Trinion {
    type Output = Trinion;
    fn neg(self) -> Trinion {
        Trinion::new(-self.a, -self.b, -self.c)
    }
}

impl std::ops::Mul for Trinion {
    type Output = Trinion;
    fn mul(self, rhs: Trinion) -> Trinion {
        trinion_mul(self, rhs)
    }
}

/// Product under `ī² = j̄`, `ī·j̄ = j̄·ī = −1`, `j̄² = −ī`; commutative.
pub fn trinion_mul(v: Trinion, w: Trinion) -> Trinion {
    Trinion::new(
        v.a * w.a - v.b * w.c - v.c * w.b,
        v.b * w.a + v.a * w.b - v.c * w.c,
        v.c * w.a + v.b * w.b + v.a * w.c,
    )
}

/// Multiplicative inverse obtained by solving `M(v)·w = e₁`.
///
/// When `|det M(v)|` falls below [`TRINION_SINGULAR_DET`], the matrix is
/// replaced by `δI`, so the result is `[1/δ, 0, 0]` instead of an error.
pub fn trinion_inverse(v: Trinion, delta: f64) -> Trinion {
    debug_assert!(delta > 0.0);
    let m = v.mul_matrix();
    if linalg::det3(&m).abs() <= TRINION_SINGULAR_DET {
        return Trinion::new(1.0 / delta, 0.0, 0.0);
    }
    let rows: Vec<Vec<f64>> = m.iter().map(|r| r.to_vec()).collect();
    match linalg::solve(&rows, &[1.0, 0.0, 0.0]) {
        Some(w) => Trinion::new(w[0], w[1], w[2]),
        None => Trinion::new(1.0 / delta, 0.0, 0.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Quaternion {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

/// Involution axis for [`quaternion_involution`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    I,
    J,
    K,
}

impl Quaternion {
    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Quaternion { a, b, c, d }
    }

    pub const ZERO: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 0.0);
    pub const ONE: Quaternion = Quaternion::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Quaternion = Quaternion::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Quaternion = Quaternion::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 1.0);

    pub fn from_real(a: f64) -> Self {
        Quaternion::new(a, 0.0, 0.0, 0.0)
    }

    pub fn conj(self) -> Self {
        Quaternion::new(self.a, -self.b, -self.c, -self.d)
    }

    pub fn re(self) -> f64 {
        self.a
    }

    pub fn abs_sq(self) -> f64 {
        self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d
    }

    pub fn abs(self) -> f64 {
        self.abs_sq().sqrt()
    }

    pub fn scale(self, s: f64) -> Self {
        Quaternion::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    /// `q⁻¹ = q*/|q|²`; `None` for zero.
    pub fn inverse(self) -> Option<Quaternion> {
        let n = self.abs_sq();
        if n == 0.0 {
            None
        } else {
            Some(self.conj().scale(1.0 / n))
        }
    }

    /// The 4x4 real matrix of left multiplication by `self`.
    pub fn left_mul_matrix(self) -> [[f64; 4]; 4] {
        let Quaternion { a, b, c, d } = self;
        [
            [a, -b, -c, -d],
            [b, a, -d, c],
            [c, d, a, -b],
            [d, -c, b, a],
        ]
    }
}

impl std::ops::Add for Quaternion {
    type Output = Quaternion;
    fn add(self, rhs: Quaternion) -> Quaternion {
        Quaternion::new(self.a + rhs.a, self.b + rhs.b, self.c + rhs.c, self.d + rhs.d)
    }
}

impl std::ops::Sub for Quaternion {
    type Output = Quaternion;
    fn sub(self, rhs: Quaternion) -> Quaternion {
        Quaternion::new(self.a - rhs.a, self.b - rhs.b, self.c - rhs.c, self.d - rhs.d)
    }
}

impl std::ops::Neg for Quaternion {
    type Output = Quaternion;
    fn neg(self) -> Quaternion {
        Quaternion::new(-self.a, -self.b, -self.c, -self.d)
    }
}

impl std::ops::Mul for Quaternion {
    type Output = Quaternion;
    fn mul(self, rhs: Quaternion) -> Quaternion {
        quaternion_mul(self, rhs)
    }
}

/// Hamilton product; associative, not commutative.
pub fn quaternion_mul(p: Quaternion, q: Quaternion) -> Quaternion {
    Quaternion::new(
        p.a * q.a - p.b * q.b - p.c * q.c - p.d * q.d,
        p.a * q.b + p.b * q.a + p.c * q.d - p.d * q.c,
        p.a * q.c - p.b * q.d + p.c * q.a + p.d * q.b,
        p.a * q.d + p.b * q.c - p.c * q.b + p.d * q.a,
    )
}

/// `qⁱ = −ıqı`, `qʲ = −ȷqȷ`, `qᵏ = −κqκ` as component sign flips.
pub fn quaternion_involution(q: Quaternion, axis: Axis) -> Quaternion {
    match axis {
        Axis::I => Quaternion::new(q.a, q.b, -q.c, -q.d),
        Axis::J => Quaternion::new(q.a, -q.b, q.c, -q.d),
        Axis::K => Quaternion::new(q.a, -q.b, -q.c, q.d),
    }
}

/// Cayley–Dickson form `q = z₁ + ı·z₂` with `z₁ = q_a + q_c·ȷ` and
/// `z₂ = q_b + q_d·ȷ`.
pub fn cayley_dickson_split(q: Quaternion) -> (Complex64, Complex64) {
    (Complex64::new(q.a, q.c), Complex64::new(q.b, q.d))
}

/// Inverse of [`cayley_dickson_split`]; exact recombination.
pub fn cayley_dickson_join(z1: Complex64, z2: Complex64) -> Quaternion {
    Quaternion::new(z1.re, z2.re, z1.im, z2.im)
}
