use crate::Real;

use super::PidGains;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LoopState<T> {
    pub integral: T,
    pub prev_measured: T,
    /// Last saturated output.
    pub prev_output: T,
    pub primed: bool,
}

/// One tick of the wheel-speed loop: P on error, I with back-calculation,
/// D on measurement, then the output filter and the torque clamp.
pub fn wheel_speed_step<T: Real>(
    ref_omega: T,
    meas_omega: T,
    gains: &PidGains<T>,
    state: &LoopState<T>,
    torque_limit: T,
) -> (T, LoopState<T>) {
    let err = ref_omega - meas_omega;
    let prev_meas = if state.primed { state.prev_measured } else { meas_omega };
    let integral = state.integral + gains.ki * err;
    let w = gains.kp * err + integral - gains.kd * (meas_omega - prev_meas);
    let unsat = w - gains.filter * state.prev_output;
    let out = unsat.max(-torque_limit).min(torque_limit);
    let next = LoopState {
        integral: integral + (out - unsat),
        prev_measured: meas_omega,
        prev_output: out,
        primed: true,
    };
    (out, next)
}

/// Antisymmetric torque correction that opposes differential speed error.
pub fn cross_coupling_correction<T: Real>(err_r: T, err_l: T, k_c: T) -> (T, T) {
    let d = k_c * (err_r - err_l);
    (-d, d)
}
