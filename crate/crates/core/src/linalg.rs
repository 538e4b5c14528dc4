//! Fixed-size vectors and matrices used by the planar geometry and the 4x4 information matrix.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use crate::scalar::{lit, Scalar};

/// A planar vector. `x` is the east component, `y` the north component.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2<T = f64> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Vec2<T> {
    pub const fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    /// Unit vector pointing along `heading`, measured from north toward east.
    pub fn from_heading(heading: T) -> Self {
        Self::new(heading.sin(), heading.cos())
    }

    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.y * other.y
    }

    pub fn norm_squared(self) -> T {
        self.dot(self)
    }

    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    /// Heading of the vector measured from north toward east, in `(-pi, pi]`.
    pub fn heading(self) -> T {
        let h = self.x.atan2(self.y);
        if h == -T::PI() {
            T::PI()
        } else {
            h
        }
    }

    /// Counter-clockwise rotation by a quarter turn.
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    /// Counter-clockwise rotation by `angle` radians in the east/north plane.
    pub fn rotated(self, angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        (n > T::zero() && n.is_finite()).then(|| self * n.recip())
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn outer(self, other: Self) -> Mat2<T> {
        Mat2::new(
            self.x * other.x,
            self.x * other.y,
            self.y * other.x,
            self.y * other.y,
        )
    }
}

impl<T: Scalar> Add for Vec2<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl<T: Scalar> AddAssign for Vec2<T> {
    fn add_assign(&mut self, rhs: Self) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl<T: Scalar> Sub for Vec2<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl<T: Scalar> Mul<T> for Vec2<T> {
    type Output = Self;
    fn mul(self, rhs: T) -> Self {
        Self::new(self.x * rhs, self.y * rhs)
    }
}

impl<T: Scalar> Neg for Vec2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

/// Row-major 2x2 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat2<T = f64> {
    pub m: [[T; 2]; 2],
}

/// Eigen-decomposition of a symmetric 2x2 matrix, eigenvalues in decreasing order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymEigen2<T = f64> {
    pub values: [T; 2],
    pub vectors: [Vec2<T>; 2],
}

impl<T: Scalar> Mat2<T> {
    pub const fn new(a: T, b: T, c: T, d: T) -> Self {
        Self {
            m: [[a, b], [c, d]],
        }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero(), T::zero())
    }

    pub fn identity() -> Self {
        Self::new(T::one(), T::zero(), T::zero(), T::one())
    }

    pub fn diag(a: T, d: T) -> Self {
        Self::new(a, T::zero(), T::zero(), d)
    }

    pub fn trace(&self) -> T {
        self.m[0][0] + self.m[1][1]
    }

    pub fn det(&self) -> T {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1])
    }

    pub fn scale(&self, k: T) -> Self {
        Self::new(
            self.m[0][0] * k,
            self.m[0][1] * k,
            self.m[1][0] * k,
            self.m[1][1] * k,
        )
    }

    pub fn mul_vec(&self, v: Vec2<T>) -> Vec2<T> {
        Vec2::new(
            self.m[0][0] * v.x + self.m[0][1] * v.y,
            self.m[1][0] * v.x + self.m[1][1] * v.y,
        )
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        let mut out = Self::zero();
        for i in 0..2 {
            for j in 0..2 {
                out.m[i][j] = self.m[i][0] * rhs.m[0][j] + self.m[i][1] * rhs.m[1][j];
            }
        }
        out
    }

    /// Inverse, or `None` when the determinant is zero or not finite.
    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        if det == T::zero() || !det.is_finite() {
            return None;
        }
        let inv = det.recip();
        Some(Self::new(
            self.m[1][1] * inv,
            -self.m[0][1] * inv,
            -self.m[1][0] * inv,
            self.m[0][0] * inv,
        ))
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> T {
        self.m
            .iter()
            .flatten()
            .fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    /// Closed-form eigen-decomposition of the symmetric part of the matrix.
    ///
    /// Eigenvectors have unit norm; their sign is whatever the formula yields.
    pub fn sym_eigen(&self) -> SymEigen2<T> {
        let a = self.m[0][0];
        let d = self.m[1][1];
        let b = (self.m[0][1] + self.m[1][0]) * lit(0.5);
        let half_tr = (a + d) * lit(0.5);
        let half_gap = (a - d) * lit(0.5);
        let disc = half_gap.hypot(b);
        let hi = half_tr + disc;
        let lo = half_tr - disc;
        let v_hi = if b == T::zero() {
            if a >= d {
                Vec2::new(T::one(), T::zero())
            } else {
                Vec2::new(T::zero(), T::one())
            }
        } else {
            // Of the two null-space forms pick the better conditioned one.
            let c1 = Vec2::new(b, hi - a);
            let c2 = Vec2::new(hi - d, b);
            let c = if c1.norm_squared() >= c2.norm_squared() {
                c1
            } else {
                c2
            };
            c.normalized().unwrap_or(Vec2::new(T::one(), T::zero()))
        };
        let v_lo = Vec2::new(-v_hi.y, v_hi.x);
        SymEigen2 {
            values: [hi, lo],
            vectors: [v_hi, v_lo],
        }
    }
}

impl<T: Scalar> Add for Mat2<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(
            self.m[0][0] + rhs.m[0][0],
            self.m[0][1] + rhs.m[0][1],
            self.m[1][0] + rhs.m[1][0],
            self.m[1][1] + rhs.m[1][1],
        )
    }
}

impl<T: Scalar> Sub for Mat2<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(
            self.m[0][0] - rhs.m[0][0],
            self.m[0][1] - rhs.m[0][1],
            self.m[1][0] - rhs.m[1][0],
            self.m[1][1] - rhs.m[1][1],
        )
    }
}

/// Eigenvalues of a symmetric 4x4 matrix by cyclic Jacobi rotations, in decreasing order.
pub fn sym_eigenvalues4<T: Scalar>(m: &[[T; 4]; 4]) -> [T; 4] {
    let mut a = *m;
    for i in 0..4 {
        for j in (i + 1)..4 {
            let avg = (a[i][j] + a[j][i]) * lit(0.5);
            a[i][j] = avg;
            a[j][i] = avg;
        }
    }
    for _sweep in 0..64 {
        let off: T = (0..4)
            .flat_map(|i| ((i + 1)..4).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let diag: T = (0..4).map(|i| a[i][i] * a[i][i]).sum();
        if off <= T::epsilon() * T::epsilon() * diag || off == T::zero() {
            break;
        }
        for p in 0..4 {
            for q in (p + 1)..4 {
                if a[p][q] == T::zero() {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (a[p][q] + a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = (t * t + T::one()).sqrt().recip();
                let s = t * c;
                for k in 0..4 {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..4 {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut values = [a[0][0], a[1][1], a[2][2], a[3][3]];
    values.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    values
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn heading_convention() {
        assert_eq!(Vec2::new(0.0, 1.0).heading(), 0.0);
        assert_relative_eq!(Vec2::new(1.0, 0.0).heading(), std::f64::consts::FRAC_PI_2);
        assert_eq!(Vec2::new(0.0, -1.0).heading(), std::f64::consts::PI);
        let v = Vec2::from_heading(0.3_f64);
        assert_relative_eq!(v.heading(), 0.3, epsilon = 1e-15);
    }

    #[test]
    fn sym_eigen_diagonal() {
        let e = Mat2::diag(4.0_f64, 1.0).sym_eigen();
        assert_eq!(e.values, [4.0, 1.0]);
        assert_eq!(e.vectors[0].x.abs(), 1.0);
        assert_eq!(e.vectors[0].y, 0.0);
        let e = Mat2::diag(1.0, 4.0).sym_eigen();
        assert_eq!(e.vectors[0], Vec2::new(0.0, 1.0));
    }

    #[test]
    fn sym_eigen_general() {
        let m = Mat2::new(2.0, 0.7, 0.7, -1.5);
        let e = m.sym_eigen();
        for (val, vec) in e.values.iter().zip(e.vectors.iter()) {
            let mv = m.mul_vec(*vec);
            assert_relative_eq!(mv.x, val * vec.x, epsilon = 1e-14);
            assert_relative_eq!(mv.y, val * vec.y, epsilon = 1e-14);
            assert_relative_eq!(vec.norm(), 1.0, epsilon = 1e-15);
        }
        assert!(e.values[0] >= e.values[1]);
    }

    #[test]
    fn inverse_roundtrip() {
        let m = Mat2::new(3.0, 1.0, 2.0, 5.0);
        let p = m.matmul(&m.inverse().unwrap());
        assert_relative_eq!(p.m[0][0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(p.m[0][1], 0.0, epsilon = 1e-15);
        assert!(Mat2::new(1.0, 2.0, 2.0, 4.0).inverse().is_none());
    }

    #[test]
    fn jacobi_matches_known_spectrum() {
        // Block-diagonal with known eigenvalues {5, 3, 2, 0}.
        let m = [
            [4.0_f64, 1.0, 0.0, 0.0],
            [1.0, 4.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 1.0],
            [0.0, 0.0, 1.0, 1.0],
        ];
        let ev = sym_eigenvalues4(&m);
        let expected = [5.0, 3.0, 2.0, 0.0];
        for (a, b) in ev.iter().zip(expected) {
            assert!((a - b).abs() < 1e-13, "{ev:?}");
        }
    }
}
