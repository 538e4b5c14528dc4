//! Bearing-only Fisher information for the target endpoints `[p_T(t_1), p_T(t_n)]`.
//!
//! The information of a batch is `alpha_theta * sum_i g_i g_i^T` where `g_i` is the
//! gradient of the bearing at sample `i` with respect to the four endpoint coordinates.
//! Because the gradient has the form `[(1 - a_i) y_i, a_i y_i]`, every such matrix has
//! symmetric 2x2 blocks with `J[1,2] == J[2,1]`, leaving 9 independent entries.

use crate::error::{Error, Result};
use crate::linalg::{sym_eigenvalues4, Mat2, Vec2};
use crate::motion::{
    free_from_constrained, ConstrainedPlatformState, PlatformStateFree, TargetState, TimeGrid,
};
use crate::scalar::{lit, to_f64, tolerance, Scalar};

/// Relative symmetry tolerance for a 4x4 information matrix.
pub const SYMMETRY_RTOL: f64 = 1e-12;
/// Relative tolerance for the minor-diagonal repetition `J_23 == J_14`.
pub const MINOR_DIAGONAL_RTOL: f64 = 1e-9;
/// Smallest eigenvalue allowed, as a fraction of the trace, before a matrix is
/// rejected as not positive semidefinite.
pub const PSD_TRACE_FRACTION: f64 = 1e-10;

/// 0-based (row, column) of each slot of a [`FimVec9`].
pub const INDEPENDENT_ENTRIES: [(usize, usize); 9] = [
    (0, 0),
    (1, 1),
    (2, 2),
    (3, 3),
    (0, 1),
    (0, 2),
    (0, 3),
    (1, 3),
    (2, 3),
];

const WEIGHTS: [f64; 9] = [1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 4.0, 2.0, 2.0];

/// A symmetric positive semidefinite 4x4 information matrix (units m^-2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fim<T = f64> {
    m: [[T; 4]; 4],
}

/// The four 2x2 blocks of a [`Fim`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FimBlocks<T = f64> {
    pub j11: Mat2<T>,
    pub j12: Mat2<T>,
    pub j21: Mat2<T>,
    pub j22: Mat2<T>,
}

/// The 9 independent entries `{J11, J22, J33, J44, J12, J13, J14, J24, J34}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FimVec9<T = f64>(pub [T; 9]);

/// Diagonal weights turning a 9-entry squared distance into the full Frobenius norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightVec<T = f64>(pub [T; 9]);

impl<T: Scalar> Fim<T> {
    /// Validates symmetry and positive semidefiniteness.
    pub fn from_rows(m: [[T; 4]; 4]) -> Result<Self> {
        if m.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("FIM"));
        }
        let scale = m.iter().flatten().fold(T::zero(), |a, v| a.max(v.abs()));
        let tol = tolerance::<T>(SYMMETRY_RTOL) * scale;
        for i in 0..4 {
            for j in (i + 1)..4 {
                if (m[i][j] - m[j][i]).abs() > tol {
                    return Err(Error::InvalidFim(format!(
                        "entry ({},{}) differs from ({},{})",
                        i + 1,
                        j + 1,
                        j + 1,
                        i + 1
                    )));
                }
            }
        }
        let fim = Self { m };
        let trace = fim.trace();
        let min_eig = fim.eigenvalues()[3];
        if min_eig < -lit::<T>(PSD_TRACE_FRACTION) * trace.abs() {
            return Err(Error::InvalidFim(format!(
                "not positive semidefinite (smallest eigenvalue {})",
                to_f64(min_eig)
            )));
        }
        Ok(fim)
    }

    /// Builds from an unchecked symmetric matrix produced by assembly.
    fn from_assembled(m: [[T; 4]; 4]) -> Self {
        Self { m }
    }

    pub fn rows(&self) -> &[[T; 4]; 4] {
        &self.m
    }

    /// Entry at 0-based `(row, col)`.
    pub fn get(&self, row: usize, col: usize) -> T {
        self.m[row][col]
    }

    /// Row-major flattening of all 16 entries.
    pub fn to_row_major(&self) -> [T; 16] {
        let mut out = [T::zero(); 16];
        for (i, row) in self.m.iter().enumerate() {
            out[4 * i..4 * i + 4].copy_from_slice(row);
        }
        out
    }

    pub fn from_row_major(values: &[T; 16]) -> Result<Self> {
        let mut m = [[T::zero(); 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row.copy_from_slice(&values[4 * i..4 * i + 4]);
        }
        Self::from_rows(m)
    }

    pub fn trace(&self) -> T {
        (0..4).map(|i| self.m[i][i]).sum()
    }

    pub fn scale(&self, k: T) -> Self {
        let mut m = self.m;
        m.iter_mut().flatten().for_each(|v| *v *= k);
        Self { m }
    }

    pub fn frobenius_norm(&self) -> T {
        self.m.iter().flatten().map(|v| *v * *v).sum::<T>().sqrt()
    }

    /// Frobenius norm of `self - other`, summed over all 16 entries.
    pub fn frobenius_distance(&self, other: &Self) -> T {
        self.m
            .iter()
            .flatten()
            .zip(other.m.iter().flatten())
            .map(|(a, b)| (*a - *b) * (*a - *b))
            .sum::<T>()
            .sqrt()
    }

    /// Eigenvalues in decreasing order.
    pub fn eigenvalues(&self) -> [T; 4] {
        sym_eigenvalues4(&self.m)
    }

    /// Spectral condition number `lambda_max / lambda_min`; infinite when the
    /// smallest eigenvalue is not positive.
    pub fn condition_estimate(&self) -> T {
        let ev = self.eigenvalues();
        if ev[3] <= T::zero() {
            T::infinity()
        } else {
            ev[0] / ev[3]
        }
    }
}

impl<T: Scalar> FimVec9<T> {
    pub fn as_array(&self) -> &[T; 9] {
        &self.0
    }

    pub fn scale(&self, k: T) -> Self {
        Self(self.0.map(|v| v * k))
    }

    /// `a^T W b`.
    pub fn weighted_dot(&self, other: &Self) -> T {
        self.0
            .iter()
            .zip(other.0.iter())
            .zip(WEIGHTS.iter())
            .map(|((a, b), w)| lit::<T>(*w) * *a * *b)
            .sum()
    }

    /// `a^T W a`, equal to the squared Frobenius norm of the unpacked matrix.
    pub fn weighted_norm_squared(&self) -> T {
        self.weighted_dot(self)
    }
}

impl<T: Scalar> WeightVec<T> {
    pub fn as_array(&self) -> &[T; 9] {
        &self.0
    }

    pub fn sum(&self) -> T {
        self.0.iter().copied().sum()
    }
}

/// Gradient of the bearing at sample `i` with respect to `[p_T(t_1), p_T(t_n)]` (rad/m).
pub fn bearing_gradient<T: Scalar>(
    target: &TargetState<T>,
    platform: &PlatformStateFree<T>,
    grid: &TimeGrid<T>,
    i: usize,
) -> Result<[T; 4]> {
    grid.alpha(i)?;
    sample_gradient(target, platform, grid, i - 1)
}

/// The gradient in component form: with `d = p_T - p_P`, `cos(theta) = d_north / r`
/// and `sin(theta) = d_east / r`.
fn sample_gradient<T: Scalar>(
    target: &TargetState<T>,
    platform: &PlatformStateFree<T>,
    grid: &TimeGrid<T>,
    zero_based: usize,
) -> Result<[T; 4]> {
    let d =
        target.position_unchecked(grid, zero_based) - platform.position_unchecked(grid, zero_based);
    let r2 = d.norm_squared();
    if r2 == T::zero() {
        return Err(Error::CoincidentPositions {
            index: zero_based + 1,
        });
    }
    if !r2.is_finite() {
        return Err(Error::NonFinite("sample geometry"));
    }
    let a = grid.alpha_unchecked(zero_based);
    let b = T::one() - a;
    let y = Vec2::new(d.y / r2, -d.x / r2);
    Ok([b * y.x, b * y.y, a * y.x, a * y.y])
}

/// The rank-one projector onto the cross-range direction of bearing `theta`.
pub fn bearing_dyad<T: Scalar>(theta: T) -> Mat2<T> {
    let (s, c) = theta.sin_cos();
    let half_sin2 = (theta + theta).sin() * lit(0.5);
    Mat2::new(c * c, -half_sin2, -half_sin2, s * s)
}

/// `alpha_theta * sum_i g_i g_i^T` over every sample of the grid.
pub fn assemble_fim<T: Scalar>(
    target: &TargetState<T>,
    platform: &PlatformStateFree<T>,
    grid: &TimeGrid<T>,
    alpha_theta: T,
) -> Result<Fim<T>> {
    if !(alpha_theta > T::zero()) {
        return Err(Error::NonPositiveAlpha(to_f64(alpha_theta)));
    }
    let unit = assemble_range(target, platform, grid, 0..grid.len())?;
    Ok(Fim::from_assembled(unit).scale(alpha_theta))
}

/// Unit information (`alpha_theta = 1`) restricted to 0-based sample indices in `samples`.
pub(crate) fn assemble_range<T: Scalar>(
    target: &TargetState<T>,
    platform: &PlatformStateFree<T>,
    grid: &TimeGrid<T>,
    samples: std::ops::Range<usize>,
) -> Result<[[T; 4]; 4]> {
    let mut m = [[T::zero(); 4]; 4];
    for i in samples {
        let g = sample_gradient(target, platform, grid, i)?;
        for r in 0..4 {
            for c in r..4 {
                m[r][c] += g[r] * g[c];
            }
        }
    }
    // The products g_2 g_3 and g_1 g_4 agree analytically; keep one so J12 == J21 bit for bit.
    m[1][2] = m[0][3];
    for r in 0..4 {
        for c in 0..r {
            m[r][c] = m[c][r];
        }
    }
    Ok(m)
}

/// Unit information `J_u` packed straight into its 9 independent entries.
pub fn unit_fim_vec9<T: Scalar>(
    target: &TargetState<T>,
    platform: &PlatformStateFree<T>,
    grid: &TimeGrid<T>,
) -> Result<FimVec9<T>> {
    let m = assemble_range(target, platform, grid, 0..grid.len())?;
    Ok(FimVec9(INDEPENDENT_ENTRIES.map(|(r, c)| m[r][c])))
}

/// Noise-free observed FIM computed at the platform from its true state.
pub fn synthesize_observed<T: Scalar>(
    target_hat: &TargetState<T>,
    platform_true: &ConstrainedPlatformState<T>,
    grid: &TimeGrid<T>,
    alpha_theta_true: T,
) -> Result<Fim<T>> {
    let free = free_from_constrained(platform_true)?;
    assemble_fim(target_hat, &free, grid, alpha_theta_true)
}

pub fn blocks<T: Scalar>(f: &Fim<T>) -> FimBlocks<T> {
    let b =
        |r: usize, c: usize| Mat2::new(f.m[r][c], f.m[r][c + 1], f.m[r + 1][c], f.m[r + 1][c + 1]);
    FimBlocks {
        j11: b(0, 0),
        j12: b(0, 2),
        j21: b(2, 0),
        j22: b(2, 2),
    }
}

/// Packs the independent entries, rejecting matrices where `J_23 != J_14`.
pub fn pack9<T: Scalar>(f: &Fim<T>) -> Result<FimVec9<T>> {
    let j14 = f.m[0][3];
    let j23 = f.m[1][2];
    let scale = f.m.iter().flatten().fold(T::zero(), |a, v| a.max(v.abs()));
    if (j14 - j23).abs() > tolerance::<T>(MINOR_DIAGONAL_RTOL) * scale {
        return Err(Error::InvalidFim(format!(
            "J23 = {} differs from J14 = {}",
            to_f64(j23),
            to_f64(j14)
        )));
    }
    Ok(FimVec9(INDEPENDENT_ENTRIES.map(|(r, c)| f.m[r][c])))
}

/// Rebuilds all 16 entries from the 9 independent ones.
pub fn unpack9<T: Scalar>(v: &FimVec9<T>) -> Fim<T> {
    let mut m = [[T::zero(); 4]; 4];
    for (&(r, c), &val) in INDEPENDENT_ENTRIES.iter().zip(v.0.iter()) {
        m[r][c] = val;
        m[c][r] = val;
    }
    m[1][2] = v.0[6];
    m[2][1] = v.0[6];
    Fim::from_assembled(m)
}

pub fn weight_vec<T: Scalar>() -> WeightVec<T> {
    WeightVec(WEIGHTS.map(lit))
}
