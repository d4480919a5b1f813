//! Jones calculus for fully polarized light.
//!
//! Operators act on column vectors `(E_x, E_y)` in a fixed lab basis. Reverse
//! traversal through a reciprocal element uses the transpose of its forward
//! matrix in that same basis.

mod align;

pub use align::optimize_pc;

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Tolerance for the normalization check on input states.
pub const NORM_TOL: f64 = 1e-12;

#[inline]
fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Polarization amplitude of a pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesState(Vector2<Complex64>);

impl JonesState {
    pub fn new(e_x: Complex64, e_y: Complex64) -> Self {
        JonesState(Vector2::new(e_x, e_y))
    }

    pub fn horizontal() -> Self {
        Self::new(c(1.0, 0.0), c(0.0, 0.0))
    }

    pub fn vertical() -> Self {
        Self::new(c(0.0, 0.0), c(1.0, 0.0))
    }

    /// Linear polarization at `azimuth` radians from the x axis.
    pub fn linear(azimuth: f64) -> Self {
        Self::new(c(azimuth.cos(), 0.0), c(azimuth.sin(), 0.0))
    }

    /// Haar-random pure polarization state.
    pub fn random(rng: &mut RngStream) -> Self {
        let g: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(rng));
        let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        Self::new(c(g[0] / n, g[1] / n), c(g[2] / n, g[3] / n))
    }

    pub fn e_x(&self) -> Complex64 {
        self.0[0]
    }

    pub fn e_y(&self) -> Complex64 {
        self.0[1]
    }

    pub fn vector(&self) -> &Vector2<Complex64> {
        &self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0[0].norm_sqr() + self.0[1].norm_sqr()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORM_TOL
    }

    pub fn normalized(&self) -> Self {
        JonesState(self.0 / c(self.norm_sqr().sqrt(), 0.0))
    }

    /// Inner product `⟨self, other⟩ = self† other`.
    pub fn inner(&self, other: &JonesState) -> Complex64 {
        self.0[0].conj() * other.0[0] + self.0[1].conj() * other.0[1]
    }

    /// Stokes parameters `(S0, S1, S2, S3)`.
    pub fn stokes(&self) -> [f64; 4] {
        let (ex, ey) = (self.0[0], self.0[1]);
        let cross = ex.conj() * ey;
        [
            ex.norm_sqr() + ey.norm_sqr(),
            ex.norm_sqr() - ey.norm_sqr(),
            2.0 * cross.re,
            2.0 * cross.im,
        ]
    }

    pub(crate) fn ensure_normalized(&self) -> Result<()> {
        if self.is_normalized() {
            Ok(())
        } else {
            Err(Error::NotNormalized(self.norm_sqr()))
        }
    }
}

/// 2×2 complex Jones matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesOperator(Matrix2<Complex64>);

impl JonesOperator {
    pub fn from_matrix(m: Matrix2<Complex64>) -> Self {
        JonesOperator(m)
    }

    pub fn from_rows(rows: [[Complex64; 2]; 2]) -> Self {
        JonesOperator(Matrix2::new(rows[0][0], rows[0][1], rows[1][0], rows[1][1]))
    }

    pub fn identity() -> Self {
        JonesOperator(Matrix2::identity())
    }

    pub fn scalar(z: Complex64) -> Self {
        JonesOperator(Matrix2::identity() * z)
    }

    /// Global phase `e^{iθ}`.
    pub fn phase(theta: f64) -> Self {
        Self::scalar(Complex64::from_polar(1.0, theta))
    }

    /// Real rotation of the field by `theta` (maps x̂ onto `(cos θ, sin θ)`).
    pub fn rotation(theta: f64) -> Self {
        let (s, co) = theta.sin_cos();
        Self::from_rows([[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]])
    }

    /// Linear retarder with fast axis at `axis` and retardance `retardance`.
    pub fn retarder(axis: f64, retardance: f64) -> Self {
        let d = Self::from_rows([
            [Complex64::from_polar(1.0, -retardance / 2.0), c(0.0, 0.0)],
            [c(0.0, 0.0), Complex64::from_polar(1.0, retardance / 2.0)],
        ]);
        Self::rotation(axis).mul(&d).mul(&Self::rotation(-axis))
    }

    pub fn quarter_wave(axis: f64) -> Self {
        Self::retarder(axis, FRAC_PI_2)
    }

    pub fn half_wave(axis: f64) -> Self {
        Self::retarder(axis, PI)
    }

    /// Diattenuator with amplitude transmittances `t_max` along `axis` and
    /// `t_min` across it.
    pub fn diattenuator(t_max: f64, t_min: f64, axis: f64) -> Self {
        let d = Self::from_rows([[c(t_max, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(t_min, 0.0)]]);
        Self::rotation(axis).mul(&d).mul(&Self::rotation(-axis))
    }

    /// Haar-random unitary (random SU(2) element times a random global phase).
    pub fn random_unitary(rng: &mut RngStream) -> Self {
        let g: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(rng));
        let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        let a = c(g[0] / n, g[1] / n);
        let b = c(g[2] / n, g[3] / n);
        let su2 = Self::from_rows([[a, -b.conj()], [b, a.conj()]]);
        Self::phase(TAU * rng.uniform()).mul(&su2)
    }

    /// Random symmetric unitary, `V Vᵀ` for Haar-random `V`.
    pub fn random_symmetric_unitary(rng: &mut RngStream) -> Self {
        let v = Self::random_unitary(rng);
        v.mul(&v.transpose())
    }

    pub fn matrix(&self) -> &Matrix2<Complex64> {
        &self.0
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row, col)]
    }

    /// Matrix product `self · rhs` (`rhs` acts first).
    pub fn mul(&self, rhs: &JonesOperator) -> JonesOperator {
        JonesOperator(self.0 * rhs.0)
    }

    pub fn scale(&self, k: f64) -> JonesOperator {
        JonesOperator(self.0 * c(k, 0.0))
    }

    pub fn transpose(&self) -> JonesOperator {
        JonesOperator(self.0.transpose())
    }

    pub fn adjoint(&self) -> JonesOperator {
        JonesOperator(self.0.adjoint())
    }

    pub fn conjugate(&self) -> JonesOperator {
        JonesOperator(self.0.conjugate())
    }

    pub fn apply(&self, state: &JonesState) -> JonesState {
        JonesState(self.0 * state.0)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &JonesOperator) -> f64 {
        (self.0 - other.0).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        JonesOperator(self.0.adjoint() * self.0).max_abs_diff(&Self::identity()) <= tol
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (self.0[(0, 1)] - self.0[(1, 0)]).norm() <= tol
    }

    /// Singular values, largest first.
    pub fn singular_values(&self) -> [f64; 2] {
        let sv = self.0.singular_values();
        let (a, b) = (sv[0], sv[1]);
        if a >= b {
            [a, b]
        } else {
            [b, a]
        }
    }

    /// True when both singular values lie in [0, 1] (passive, possibly lossy).
    pub fn is_passive(&self, tol: f64) -> bool {
        self.singular_values()[0] <= 1.0 + tol
    }
}

/// Settings of a quarter–half–quarter waveplate polarization controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcSetting {
    angles: [f64; 3],
}

impl PcSetting {
    pub fn new(theta1: f64, theta2: f64, theta3: f64) -> Self {
        PcSetting {
            angles: [reduce_angle(theta1), reduce_angle(theta2), reduce_angle(theta3)],
        }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn angles(&self) -> [f64; 3] {
        self.angles
    }

    pub(crate) fn with_angle(&self, axis: usize, value: f64) -> Self {
        let mut a = self.angles;
        a[axis] = value;
        Self::from_array(a)
    }
}

/// Reduce an angle to [0, 2π).
pub fn reduce_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Product of the operators in traversal order; `ops[0]` acts first.
pub fn compose(ops: &[JonesOperator]) -> Result<JonesOperator> {
    let (first, rest) = ops.split_first().ok_or(Error::EmptyComposition)?;
    Ok(rest.iter().fold(*first, |acc, op| op.mul(&acc)))
}

/// Operator for traversing a reciprocal element in the opposite direction.
pub fn backward(op: &JonesOperator) -> JonesOperator {
    op.transpose()
}

/// Magnitude of the normalized interference cross term between the two
/// counter-propagating copies of `input`.
pub fn visibility(input: &JonesState, u_cw: &JonesOperator, u_ccw: &JonesOperator) -> Result<f64> {
    input.ensure_normalized()?;
    let cw = u_cw.apply(input);
    let ccw = u_ccw.apply(input);
    Ok(ccw.inner(&cw).norm())
}

/// Jones matrix of the controller: `QWP(θ1) · HWP(θ2) · QWP(θ3)`.
pub fn pc_matrix(setting: &PcSetting) -> JonesOperator {
    let [t1, t2, t3] = setting.angles;
    JonesOperator::quarter_wave(t1)
        .mul(&JonesOperator::half_wave(t2))
        .mul(&JonesOperator::quarter_wave(t3))
}
