use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg;
use crate::Real;

/// `y_k = −a1·y_{k−1} − a2·y_{k−2} + b0·u_{k−1} + b1·u_{k−2}`, sampled every `ts` seconds.
///
/// With `a2 = b1 = 0` exactly the model is treated as first order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArxModel<T> {
    pub a1: T,
    pub a2: T,
    pub b0: T,
    pub b1: T,
    pub ts: T,
}

impl<T: Real> ArxModel<T> {
    pub fn first_order(a1: T, b0: T, ts: T) -> Self {
        Self {
            a1,
            a2: T::zero(),
            b0,
            b1: T::zero(),
            ts,
        }
    }

    pub fn order(&self) -> usize {
        if self.a2 == T::zero() && self.b1 == T::zero() {
            1
        } else {
            2
        }
    }

    pub fn is_finite(&self) -> bool {
        self.a1.is_finite() && self.a2.is_finite() && self.b0.is_finite() && self.b1.is_finite()
    }

    /// One-step prediction.
    pub fn predict(&self, y1: T, y2: T, u1: T, u2: T) -> T {
        -self.a1 * y1 - self.a2 * y2 + self.b0 * u1 + self.b1 * u2
    }
}

/// Desired closed-loop poles in the z-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesiredPoles<T> {
    Single(T),
    Real(T, T),
    Conjugate { re: T, im: T },
}

impl<T: Real> DesiredPoles<T> {
    /// Discrete image `exp(−ω·T_s)` of a continuous double pole at `−ω` rad/s.
    pub fn double_from_continuous(omega: T, ts: T) -> Self {
        let z = (-omega * ts).exp();
        DesiredPoles::Real(z, z)
    }

    /// Monic polynomial in `q⁻¹`, leading coefficient first.
    pub fn polynomial(&self) -> Vec<T> {
        match *self {
            DesiredPoles::Single(p) => vec![T::one(), -p],
            DesiredPoles::Real(p1, p2) => vec![T::one(), -(p1 + p2), p1 * p2],
            DesiredPoles::Conjugate { re, im } => vec![T::one(), -(re + re), re * re + im * im],
        }
    }

    pub fn inside_unit_circle(&self) -> bool {
        let ok = |m: T| m.is_finite() && m < T::one();
        match *self {
            DesiredPoles::Single(p) => ok(p.abs()),
            DesiredPoles::Real(p1, p2) => ok(p1.abs()) && ok(p2.abs()),
            DesiredPoles::Conjugate { re, im } => ok(re.hypot(im)),
        }
    }
}

/// Discrete PID with a first-order output filter: `u_k = w_k − filter·u_{k−1}`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PidGains<T> {
    pub kp: T,
    pub ki: T,
    pub kd: T,
    #[serde(default)]
    pub filter: T,
}

impl<T: Real> PidGains<T> {
    pub fn is_finite(&self) -> bool {
        self.kp.is_finite() && self.ki.is_finite() && self.kd.is_finite() && self.filter.is_finite()
    }

    /// Feedback polynomial `R(q⁻¹) = r0 + r1·q⁻¹ + r2·q⁻²` acting on the measurement.
    pub fn feedback_polynomial(&self) -> [T; 3] {
        let two = T::lit(2.0);
        [self.kp + self.ki + self.kd, -self.kp - two * self.kd, self.kd]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DesignError {
    #[error("plant estimate is not controllable (b0 = b1 = 0)")]
    Uncontrollable,
    #[error("desired poles must lie strictly inside the unit circle")]
    InvalidPoles,
    #[error("requested closed-loop order exceeds what the plant order can place")]
    TooManyPoles,
    #[error("singular Diophantine system")]
    Singular,
    #[error("design produced non-finite gains")]
    NonFinite,
    #[error("design produced an unstable output filter")]
    UnstableFilter,
    #[error("closed loop misses the desired polynomial")]
    Inaccurate,
}

pub(crate) fn poly_mul<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += *x * *y;
        }
    }
    out
}

fn padded<T: Real>(p: &[T], len: usize) -> Vec<T> {
    let mut v = p.to_vec();
    v.resize(len.max(p.len()), T::zero());
    v
}

/// `A·(1 − q⁻¹)·S + q⁻¹·B·R` for the model under the given gains, as 5 coefficients.
pub fn closed_loop_polynomial<T: Real>(model: &ArxModel<T>, gains: &PidGains<T>) -> Vec<T> {
    let a_delta = poly_mul(&[T::one(), model.a1, model.a2], &[T::one(), -T::one()]);
    let lhs = poly_mul(&a_delta, &[T::one(), gains.filter]);
    let rhs = poly_mul(&[T::zero(), model.b0, model.b1], &gains.feedback_polynomial());
    let n = lhs.len().max(rhs.len());
    let (lhs, rhs) = (padded(&lhs, n), padded(&rhs, n));
    lhs.iter().zip(&rhs).map(|(x, y)| *x + *y).take(5).collect()
}

/// Places the closed-loop poles of the model with an integrating PID.
///
/// Extra closed-loop poles required by the controller order sit at the origin.
pub fn pole_placement_pid<T: Real>(model: &ArxModel<T>, poles: &DesiredPoles<T>) -> Result<PidGains<T>, DesignError> {
    if !model.is_finite() {
        return Err(DesignError::NonFinite);
    }
    if model.b0 == T::zero() && model.b1 == T::zero() {
        return Err(DesignError::Uncontrollable);
    }
    if !poles.inside_unit_circle() {
        return Err(DesignError::InvalidPoles);
    }
    let order = model.order();
    let a_delta = poly_mul(&[T::one(), model.a1, model.a2][..order + 1], &[T::one(), -T::one()]);
    let b_shift = [T::zero(), model.b0, model.b1];
    let b_shift = &b_shift[..order + 1];
    // deg S = deg(q⁻¹B) − 1, deg R = deg(AΔ) − 1
    let ns = order - 1;
    let nr = order + 1;
    let n = order + 1 + ns;
    let target = poles.polynomial();
    if target.len() > n + 1 {
        return Err(DesignError::TooManyPoles);
    }
    let target = padded(&target, n + 1);

    let base = padded(&a_delta, n + 1);
    let mut columns: Vec<Vec<T>> = Vec::with_capacity(n);
    for j in 1..=ns {
        let mut c = vec![T::zero(); n + 1];
        for (k, v) in a_delta.iter().enumerate() {
            c[k + j] += *v;
        }
        columns.push(c);
    }
    for j in 0..nr {
        let mut c = vec![T::zero(); n + 1];
        for (k, v) in b_shift.iter().enumerate() {
            c[k + j] += *v;
        }
        columns.push(c);
    }
    let mut a: Vec<Vec<T>> = (1..=n).map(|row| columns.iter().map(|c| c[row]).collect()).collect();
    let mut b: Vec<T> = (1..=n).map(|row| target[row] - base[row]).collect();
    let x = linalg::solve(&mut a, &mut b, T::lit(1e-12)).ok_or(DesignError::Singular)?;

    let filter = if ns == 1 { x[0] } else { T::zero() };
    let r = &x[ns..];
    let (r0, r1, r2) = (r[0], r[1], if nr > 2 { r[2] } else { T::zero() });
    let gains = PidGains {
        kp: -r1 - T::lit(2.0) * r2,
        ki: r0 + r1 + r2,
        kd: r2,
        filter,
    };
    if !gains.is_finite() {
        return Err(DesignError::NonFinite);
    }
    if !(filter.abs() < T::one()) {
        return Err(DesignError::UnstableFilter);
    }
    let achieved = closed_loop_polynomial(model, &gains);
    let want = padded(&target, 5);
    let tol = T::lit(1e-9).max(T::epsilon() * T::lit(1e3));
    if achieved.iter().zip(&want).any(|(x, y)| (*x - *y).abs() > tol) {
        return Err(DesignError::Inaccurate);
    }
    Ok(gains)
}
