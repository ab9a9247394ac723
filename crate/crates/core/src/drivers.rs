//! Noise streams and one-step integrators.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::smallmat::{so3_exp, Matrix, Vector};
use crate::spaces::{Curvature, SpacePoint};

/// Reproducible Gaussian stream keyed by `(seed, stream)`.
///
/// ChaCha keeps separate streams independent and produces the same sequence
/// on every platform, so one stream per path gives reproducible parallel runs.
#[derive(Clone, Debug)]
pub struct NoiseStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn gaussian(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    pub fn gaussian_vector(&mut self, len: usize) -> Vector {
        Vector::from_fn(len, |_| self.gaussian())
    }

    /// Draws the primary and auxiliary vectors for one step, in that order.
    pub fn step_noise(&mut self, primary: usize, auxiliary: usize) -> StepNoise {
        let primary = self.gaussian_vector(primary);
        let auxiliary = self.gaussian_vector(auxiliary);
        StepNoise { primary, auxiliary }
    }
}

/// Unscaled standard normal vectors for one step; multiplied by `√h` where
/// they are used.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepNoise {
    pub primary: Vector,
    pub auxiliary: Vector,
}

impl StepNoise {
    pub fn zeros(primary: usize, auxiliary: usize) -> Self {
        Self {
            primary: Vector::zeros(primary),
            auxiliary: Vector::zeros(auxiliary),
        }
    }
}

fn check_h(h: f64) -> Result<()> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InputDomain(format!("step size must be positive, got {h}")));
    }
    Ok(())
}

/// Projected Euler step for `dX = (I - X X') dB - (d/2) X dt` on `S^d`
/// (the drift is `-X dt` on `S^2`), followed by renormalisation.
pub fn stroock_step(x: &SpacePoint, noise: &Vector, h: f64) -> Result<SpacePoint> {
    check_h(h)?;
    let space = x.space();
    if space.curvature() != Curvature::Positive || noise.len() != space.ambient_dim() {
        return Err(Error::InputDomain(format!(
            "stroock_step needs a sphere point and {}-dimensional noise",
            space.ambient_dim()
        )));
    }
    let p = x.coords();
    let db = noise.scale(h.sqrt());
    let tangential = db.axpy(-p.dot(&db), p);
    let drift = 0.5 * space.dim() as f64 * h;
    let next = p.scale(1.0 - drift) + tangential;
    SpacePoint::projected(space, &next)
}

/// Geodesic random walk step `x -> exp_x(√h Σ noise_i frame_i)`.
pub fn geodesic_walk_step(
    x: &SpacePoint,
    noise: &Vector,
    h: f64,
    frame: &[Vector],
) -> Result<SpacePoint> {
    check_h(h)?;
    let space = x.space();
    if frame.len() != space.dim() || noise.len() < frame.len() {
        return Err(Error::InputDomain(format!(
            "geodesic walk on {space} needs {} frame vectors and as many noise entries",
            space.dim()
        )));
    }
    let mut w = Vector::zeros(space.ambient_dim());
    for (n, e) in noise.iter().zip(frame) {
        w = w.axpy(*n, e);
    }
    let w = w.scale(h.sqrt());
    if space.curvature() == Curvature::Positive {
        let length = space.norm(&w);
        if length >= std::f64::consts::FRAC_PI_2 {
            return Err(Error::StepTooLarge { length });
        }
    }
    space.exp_tangent(x, &w)
}

/// `J dB + K dC`, provided `J J' + K K' = I`.
pub fn kendall_compose(j: &Matrix, k: &Matrix, db: &Vector, dc: &Vector) -> Result<Vector> {
    let n = j.rows();
    if j.cols() != db.len() || k.cols() != dc.len() || k.rows() != n {
        return Err(Error::InputDomain("driver shapes do not match".into()));
    }
    let residual = (&j.matmul(&j.transpose()) + &k.matmul(&k.transpose()))
        .max_abs_diff(&Matrix::identity(n));
    if residual > 1e-10 {
        return Err(Error::CouplingConstraint { residual });
    }
    Ok(j.mul_vec(db) + k.mul_vec(dc))
}

/// `Z -> exp(√h [noise]_x) Z`, re-orthonormalised.
pub fn so3_flow_step(z: &Matrix, noise: &Vector, h: f64) -> Result<Matrix> {
    check_h(h)?;
    if z.rows() != 3 || z.cols() != 3 || noise.len() != 3 {
        return Err(Error::InputDomain("so3_flow_step works on 3x3 matrices".into()));
    }
    let residual = z.orthogonality_residual();
    if residual > 1e-10 || z.determinant() <= 0.0 {
        return Err(Error::InputDomain(format!(
            "Z is not a rotation (orthogonality residual {residual:e})"
        )));
    }
    so3_exp(&noise.scale(h.sqrt())).matmul(z).orthonormalize_columns()
}
