//! Closed-form distance laws `t -> ρ(t)` and their defining ODEs.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::couplings::{rotation_drift, StrategyKind};
use crate::error::{Error, Result};
use crate::spaces::{Curvature, SpaceSpec};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum LawKind {
    /// `2 arcsin(e^{-(d-1)t/2} sin(ρ0/2))`
    SphereSynchronous,
    /// `2 arccos(e^{-(d-1)t/2} cos(ρ0/2))`
    SpherePerverse,
    /// `sqrt(ρ0² + 4(d-1)t)`
    FlatPerverse,
    /// `2 arcsinh(e^{(d-1)t/2} sinh(ρ0/2))`
    HyperbolicSynchronous,
    /// `2 arccosh(e^{(d-1)t/2} cosh(ρ0/2))`
    HyperbolicPerverse,
    /// `ρ0 e^{-kt/2}`
    Exponential { k: f64 },
    Constant,
    /// Chord `‖X - Y‖ = ‖x - y‖ e^{-t/2}` on `S²`.
    ExtrinsicContract,
    /// Chord `‖X - Y‖ = sqrt(4 - ‖x + y‖² e^{-t})` on `S²`.
    ExtrinsicExpand,
    /// No closed form: the distance ODE of the rotation coupling with a
    /// fixed angle, integrated numerically.
    FixedAngle { alpha: f64 },
}

/// Which function of the pair the law describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Observable {
    Intrinsic,
    /// Chordal distance `2 sin(ρ/2)` in the ambient space of the sphere.
    Chordal,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceLaw {
    pub kind: LawKind,
    pub space: SpaceSpec,
    pub rho0: f64,
}

impl DistanceLaw {
    pub fn new(kind: LawKind, space: SpaceSpec, rho0: f64) -> Result<Self> {
        let r = space.curvature();
        let s2 = r == Curvature::Positive && space.dim() == 2;
        let ok = match kind {
            LawKind::SphereSynchronous | LawKind::SpherePerverse => r == Curvature::Positive,
            LawKind::FlatPerverse => r == Curvature::Zero,
            LawKind::HyperbolicSynchronous | LawKind::HyperbolicPerverse => {
                r == Curvature::Negative
            }
            LawKind::ExtrinsicContract | LawKind::ExtrinsicExpand => s2,
            LawKind::Exponential { k } => k.is_finite(),
            LawKind::Constant => true,
            LawKind::FixedAngle { alpha } => alpha.is_finite(),
        };
        if !ok {
            return Err(Error::InputDomain(format!("law {kind:?} does not apply to {space}")));
        }
        if !(rho0.is_finite() && rho0 > 0.0 && rho0 < space.diameter()) {
            return Err(Error::InputDomain(format!("ρ0 = {rho0} is not admissible")));
        }
        Ok(Self { kind, space, rho0 })
    }

    /// The law a strategy is expected to follow, when it has one.
    pub fn for_strategy(
        kind: StrategyKind,
        space: SpaceSpec,
        rho0: f64,
        k: f64,
        alpha: Option<f64>,
    ) -> Result<Self> {
        let law = match (kind, alpha) {
            (StrategyKind::Translation, _)
            | (StrategyKind::FixedS2, _)
            | (StrategyKind::So3Flow, _) => LawKind::Constant,
            (StrategyKind::ExtrinsicContractS2, _) => LawKind::ExtrinsicContract,
            (StrategyKind::ExtrinsicExpandS2, _) => LawKind::ExtrinsicExpand,
            (StrategyKind::Rotation, Some(a)) => Self::fixed_angle_kind(space, a),
            (StrategyKind::Rotation, None) => LawKind::Exponential { k },
            (other, _) => {
                return Err(Error::StrategyMismatch {
                    strategy: other.id().into(),
                    space: space.to_string(),
                    reason: "no deterministic distance law".into(),
                })
            }
        };
        Self::new(law, space, rho0)
    }

    fn fixed_angle_kind(space: SpaceSpec, alpha: f64) -> LawKind {
        let sync = alpha.cos() == 1.0;
        let perverse = alpha.cos() == -1.0;
        match (space.curvature(), sync, perverse) {
            (Curvature::Positive, true, _) => LawKind::SphereSynchronous,
            (Curvature::Positive, _, true) => LawKind::SpherePerverse,
            (Curvature::Zero, true, _) => LawKind::Constant,
            (Curvature::Zero, _, true) => LawKind::FlatPerverse,
            (Curvature::Negative, true, _) => LawKind::HyperbolicSynchronous,
            (Curvature::Negative, _, true) => LawKind::HyperbolicPerverse,
            _ => LawKind::FixedAngle { alpha },
        }
    }

    pub fn id(&self) -> String {
        match self.kind {
            LawKind::SphereSynchronous => "sphere-synchronous".into(),
            LawKind::SpherePerverse => "sphere-perverse".into(),
            LawKind::FlatPerverse => "flat-perverse".into(),
            LawKind::HyperbolicSynchronous => "hyperbolic-synchronous".into(),
            LawKind::HyperbolicPerverse => "hyperbolic-perverse".into(),
            LawKind::Exponential { k } => format!("exponential(k={k})"),
            LawKind::Constant => "constant".into(),
            LawKind::ExtrinsicContract => "extrinsic-contract".into(),
            LawKind::ExtrinsicExpand => "extrinsic-expand".into(),
            LawKind::FixedAngle { alpha } => format!("fixed-angle(alpha={alpha})"),
        }
    }

    fn d1(&self) -> f64 {
        (self.space.dim() - 1) as f64
    }

    pub fn observable(&self) -> Observable {
        match self.kind {
            LawKind::ExtrinsicContract | LawKind::ExtrinsicExpand => Observable::Chordal,
            _ => Observable::Intrinsic,
        }
    }

    /// Maps a simulated intrinsic distance to the law's observable.
    pub fn observe(&self, rho: f64) -> f64 {
        match self.observable() {
            Observable::Intrinsic => rho,
            Observable::Chordal => 2.0 * (0.5 * rho).sin(),
        }
    }

    /// Intrinsic distance at time `t`.
    pub fn eval(&self, t: f64) -> f64 {
        let (d1, r0) = (self.d1(), self.rho0);
        match self.kind {
            LawKind::SphereSynchronous | LawKind::ExtrinsicContract => {
                2.0 * ((-d1 * t / 2.0).exp() * (r0 / 2.0).sin()).asin()
            }
            LawKind::SpherePerverse | LawKind::ExtrinsicExpand => {
                2.0 * ((-d1 * t / 2.0).exp() * (r0 / 2.0).cos()).acos()
            }
            LawKind::FlatPerverse => (r0 * r0 + 4.0 * d1 * t).sqrt(),
            LawKind::HyperbolicSynchronous => {
                2.0 * ((d1 * t / 2.0).exp() * (r0 / 2.0).sinh()).asinh()
            }
            LawKind::HyperbolicPerverse => {
                2.0 * ((d1 * t / 2.0).exp() * (r0 / 2.0).cosh()).acosh()
            }
            LawKind::Exponential { k } => r0 * (-k * t / 2.0).exp(),
            LawKind::Constant => r0,
            LawKind::FixedAngle { .. } => self.integrate(t, 2000),
        }
    }

    /// Value of the observable at time `t`; for the extrinsic laws this is
    /// the chordal formula itself.
    pub fn eval_observable(&self, t: f64) -> f64 {
        let c0 = 2.0 * (self.rho0 / 2.0).sin();
        match self.kind {
            LawKind::ExtrinsicContract => c0 * (-t / 2.0).exp(),
            LawKind::ExtrinsicExpand => {
                let sum_sq = 4.0 - c0 * c0;
                (4.0 - sum_sq * (-t).exp()).max(0.0).sqrt()
            }
            _ => self.eval(t),
        }
    }

    /// Right-hand side of the defining ODE `dρ/dt = f(ρ)`.
    pub fn drift(&self, rho: f64) -> f64 {
        let d1 = self.d1();
        match self.kind {
            LawKind::SphereSynchronous | LawKind::ExtrinsicContract => -d1 * (rho / 2.0).tan(),
            LawKind::SpherePerverse | LawKind::ExtrinsicExpand => d1 / (rho / 2.0).tan(),
            LawKind::FlatPerverse => 2.0 * d1 / rho,
            LawKind::HyperbolicSynchronous => d1 * (rho / 2.0).tanh(),
            LawKind::HyperbolicPerverse => d1 / (rho / 2.0).tanh(),
            LawKind::Exponential { k } => -k * rho / 2.0,
            LawKind::Constant => 0.0,
            LawKind::FixedAngle { alpha } => rotation_drift(&self.space, rho, alpha),
        }
    }

    /// Classical RK4 on the defining ODE.
    pub fn integrate(&self, t: f64, steps: usize) -> f64 {
        let h = t / steps as f64;
        let mut rho = self.rho0;
        for _ in 0..steps {
            let k1 = self.drift(rho);
            let k2 = self.drift(rho + 0.5 * h * k1);
            let k3 = self.drift(rho + 0.5 * h * k2);
            let k4 = self.drift(rho + h * k3);
            rho += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if self.space.curvature() == Curvature::Positive {
                rho = rho.clamp(0.0, PI);
            }
        }
        rho
    }
}

impl fmt::Display for DistanceLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} on {} from ρ0 = {}", self.id(), self.space, self.rho0)
    }
}
