//! Self-tuning wheel-speed control.
//!
//! Each wheel runs a recursive least-squares estimate of a low-order ARX model
//! of torque → wheel speed, and periodically re-solves a pole-placement design
//! for an integrating PID. A cross-coupling term couples the two wheels.

mod pid;
mod pole_placement;
mod rls;

pub use pid::{cross_coupling_correction, wheel_speed_step, LoopState};
pub use pole_placement::{closed_loop_polynomial, pole_placement_pid, ArxModel, DesignError, DesiredPoles, PidGains};
pub use rls::{rls_update, RlsError, RlsState};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WheelControllerConfig<T> {
    /// ARX order, 1 or 2.
    pub model_order: usize,
    pub lambda: T,
    /// Initial covariance `P₀ = p0·I`.
    pub p0: T,
    pub covariance_trace_cap: T,
    /// Redesign the gains every this many control ticks.
    pub redesign_interval: usize,
    pub poles: DesiredPoles<T>,
    pub torque_limit: T,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControllerError {
    #[error("model order must be 1 or 2, got {0}")]
    ModelOrder(usize),
    #[error("redesign interval must be at least 1")]
    RedesignInterval,
    #[error("torque limit must be positive")]
    TorqueLimit,
    #[error("covariance trace cap must be positive")]
    TraceCap,
    #[error(transparent)]
    Rls(#[from] RlsError),
    #[error("initial design failed: {0}")]
    Design(#[from] DesignError),
}

#[derive(Debug, Clone, PartialEq)]
enum Estimator<T> {
    First(RlsState<T, 2>),
    Second(RlsState<T, 4>),
}

/// Adaptive speed loop for one wheel.
#[derive(Debug, Clone, PartialEq)]
pub struct WheelController<T> {
    config: WheelControllerConfig<T>,
    estimator: Estimator<T>,
    nominal: ArxModel<T>,
    model: ArxModel<T>,
    gains: PidGains<T>,
    loop_state: LoopState<T>,
    /// y₁, y₂, u₁, u₂
    history: [T; 4],
    samples: usize,
    pending_measurement: T,
    ticks: usize,
    redesigns: usize,
    design_failures: usize,
}

impl<T: Real> WheelController<T> {
    /// Starts from `nominal`, which seeds the estimate and the first design.
    pub fn new(config: WheelControllerConfig<T>, nominal: ArxModel<T>) -> Result<Self, ControllerError> {
        if config.redesign_interval == 0 {
            return Err(ControllerError::RedesignInterval);
        }
        if !(config.torque_limit > T::zero()) {
            return Err(ControllerError::TorqueLimit);
        }
        if !(config.covariance_trace_cap > T::zero()) {
            return Err(ControllerError::TraceCap);
        }
        let (estimator, nominal) = match config.model_order {
            1 => {
                let m = ArxModel::first_order(nominal.a1, nominal.b0, nominal.ts);
                (Estimator::First(RlsState::new([m.a1, m.b0], config.p0, config.lambda)?), m)
            }
            2 => (
                Estimator::Second(RlsState::new(
                    [nominal.a1, nominal.a2, nominal.b0, nominal.b1],
                    config.p0,
                    config.lambda,
                )?),
                nominal,
            ),
            n => return Err(ControllerError::ModelOrder(n)),
        };
        let gains = pole_placement_pid(&nominal, &config.poles)?;
        Ok(Self {
            config,
            estimator,
            nominal,
            model: nominal,
            gains,
            loop_state: LoopState::default(),
            history: [T::zero(); 4],
            samples: 0,
            pending_measurement: T::zero(),
            ticks: 0,
            redesigns: 0,
            design_failures: 0,
        })
    }

    pub fn gains(&self) -> &PidGains<T> {
        &self.gains
    }

    pub fn model(&self) -> &ArxModel<T> {
        &self.model
    }

    pub fn redesigns(&self) -> usize {
        self.redesigns
    }

    pub fn design_failures(&self) -> usize {
        self.design_failures
    }

    pub fn torque_limit(&self) -> T {
        self.config.torque_limit
    }

    /// Computes the loop torque for this tick. With `adapt` false the
    /// estimate and gains are frozen.
    ///
    /// Call [`commit`](Self::commit) with the torque actually applied afterwards.
    pub fn control(&mut self, reference: T, measured: T, adapt: bool) -> T {
        if adapt && self.samples >= self.config.model_order {
            self.estimate(measured);
        }
        self.ticks += 1;
        if adapt && self.ticks.is_multiple_of(self.config.redesign_interval) {
            self.redesign();
        }
        self.pending_measurement = measured;
        let (torque, next) = wheel_speed_step(reference, measured, &self.gains, &self.loop_state, self.config.torque_limit);
        self.loop_state = next;
        torque
    }

    pub fn commit(&mut self, applied: T) {
        let [y1, _, u1, _] = self.history;
        self.history = [self.pending_measurement, y1, applied, u1];
        self.samples += 1;
    }

    fn estimate(&mut self, measured: T) {
        let [y1, y2, u1, u2] = self.history;
        let cap = self.config.covariance_trace_cap;
        let ts = self.model.ts;
        match &mut self.estimator {
            Estimator::First(rls) => {
                if rls.update(&[-y1, u1], measured).is_ok() {
                    rls.limit_trace(cap);
                    self.model = ArxModel::first_order(rls.theta[0], rls.theta[1], ts);
                }
            }
            Estimator::Second(rls) => {
                if rls.update(&[-y1, -y2, u1, u2], measured).is_ok() {
                    rls.limit_trace(cap);
                    let t = rls.theta;
                    self.model = ArxModel {
                        a1: t[0],
                        a2: t[1],
                        b0: t[2],
                        b1: t[3],
                        ts,
                    };
                }
            }
        }
    }

    fn redesign(&mut self) {
        // an estimate whose input gain has flipped sign is not trusted
        let gain = self.model.b0 + self.model.b1;
        let nominal_gain = self.nominal.b0 + self.nominal.b1;
        if !(gain * nominal_gain > T::zero()) {
            self.design_failures += 1;
            return;
        }
        match pole_placement_pid(&self.model, &self.config.poles) {
            Ok(g) => {
                self.gains = g;
                self.redesigns += 1;
            }
            Err(_) => self.design_failures += 1,
        }
    }
}
