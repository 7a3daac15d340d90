use thiserror::Error;

use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum RlsError {
    #[error("forgetting factor must lie in (0, 1]")]
    InvalidLambda,
    #[error("initial covariance scale must be positive")]
    InvalidCovariance,
    #[error("non-finite regressor or measurement")]
    NonFinite,
}

/// Exponentially weighted recursive least squares over `N` parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RlsState<T, const N: usize> {
    pub theta: [T; N],
    pub p: [[T; N]; N],
    pub lambda: T,
}

impl<T: Real, const N: usize> RlsState<T, N> {
    /// `P₀ = p0·I`.
    pub fn new(theta0: [T; N], p0: T, lambda: T) -> Result<Self, RlsError> {
        if !(lambda > T::zero() && lambda <= T::one()) {
            return Err(RlsError::InvalidLambda);
        }
        if !(p0 > T::zero() && p0.is_finite()) {
            return Err(RlsError::InvalidCovariance);
        }
        let mut p = [[T::zero(); N]; N];
        for (i, row) in p.iter_mut().enumerate() {
            row[i] = p0;
        }
        Ok(Self { theta: theta0, p, lambda })
    }

    pub fn predict(&self, phi: &[T; N]) -> T {
        dot(phi, &self.theta)
    }

    pub fn trace(&self) -> T {
        (0..N).fold(T::zero(), |acc, i| acc + self.p[i][i])
    }

    /// One measurement update; returns the a-priori prediction error.
    pub fn update(&mut self, phi: &[T; N], measured: T) -> Result<T, RlsError> {
        if !measured.is_finite() || phi.iter().any(|v| !v.is_finite()) {
            return Err(RlsError::NonFinite);
        }
        let err = measured - self.predict(phi);
        let p_phi: [T; N] = core::array::from_fn(|i| dot(&self.p[i], phi));
        let denom = self.lambda + dot(phi, &p_phi);
        let gain: [T; N] = core::array::from_fn(|i| p_phi[i] / denom);
        for i in 0..N {
            self.theta[i] += gain[i] * err;
        }
        // P is symmetric, so φᵀP = (Pφ)ᵀ
        let mut next = [[T::zero(); N]; N];
        for i in 0..N {
            for j in 0..N {
                next[i][j] = (self.p[i][j] - gain[i] * p_phi[j]) / self.lambda;
            }
        }
        let half = T::lit(0.5);
        for i in 0..N {
            for j in i..N {
                let s = half * (next[i][j] + next[j][i]);
                self.p[i][j] = s;
                self.p[j][i] = s;
            }
        }
        Ok(err)
    }

    /// Rescales P so its trace does not exceed `cap` (guards against wind-up under forgetting).
    pub fn limit_trace(&mut self, cap: T) {
        let tr = self.trace();
        if tr > cap {
            let k = cap / tr;
            for row in self.p.iter_mut() {
                for v in row.iter_mut() {
                    *v *= k;
                }
            }
        }
    }
}

pub fn rls_update<T: Real, const N: usize>(
    state: &RlsState<T, N>,
    regressor: &[T; N],
    measured: T,
) -> Result<RlsState<T, N>, RlsError> {
    let mut next = state.clone();
    next.update(regressor, measured)?;
    Ok(next)
}

fn dot<T: Real, const N: usize>(a: &[T; N], b: &[T; N]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + *x * *y)
}
