//! Piecewise-constant friction coefficient over the workspace.

use serde::{Deserialize, Serialize};

use crate::Real;

/// Axis-aligned world-frame rectangle with its own friction coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrictionPatch<T> {
    pub min: [T; 2],
    pub max: [T; 2],
    pub mu: T,
}

impl<T: Real> FrictionPatch<T> {
    pub fn contains(&self, point: [T; 2]) -> bool {
        point[0] >= self.min[0] && point[0] <= self.max[0] && point[1] >= self.min[1] && point[1] <= self.max[1]
    }
}

/// Friction lookup; later patches override earlier ones where they overlap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceMap<T> {
    pub default_mu: T,
    #[serde(default)]
    pub patches: Vec<FrictionPatch<T>>,
}

impl<T: Real> SurfaceMap<T> {
    pub fn uniform(mu: T) -> Self {
        Self {
            default_mu: mu,
            patches: Vec::new(),
        }
    }

    pub fn with_patch(mut self, min: [T; 2], max: [T; 2], mu: T) -> Self {
        self.patches.push(FrictionPatch { min, max, mu });
        self
    }

    pub fn is_valid(&self) -> bool {
        let ok = |mu: T| mu >= T::zero() && mu.is_finite();
        ok(self.default_mu)
            && self
                .patches
                .iter()
                .all(|p| ok(p.mu) && p.min[0] <= p.max[0] && p.min[1] <= p.max[1])
    }

    pub fn friction_at(&self, point: [T; 2]) -> T {
        self.patches
            .iter()
            .rev()
            .find(|p| p.contains(point))
            .map_or(self.default_mu, |p| p.mu)
    }
}

pub fn friction_at<T: Real>(surface: &SurfaceMap<T>, point: [T; 2]) -> T {
    surface.friction_at(point)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_rules() {
        let map = SurfaceMap::uniform(0.8)
            .with_patch([0.0, 0.0], [2.0, 2.0], 0.2)
            .with_patch([1.0, 1.0], [3.0, 3.0], 0.5);
        assert_eq!(map.friction_at([0.5, 0.5]), 0.2);
        assert_eq!(map.friction_at([5.0, 0.5]), 0.8);
        assert_eq!(map.friction_at([1.5, 1.5]), 0.5);

        let reversed = SurfaceMap::uniform(0.8)
            .with_patch([0.0, 0.0], [2.0, 2.0], 0.8)
            .with_patch([0.0, 0.0], [2.0, 2.0], 0.2);
        assert_eq!(reversed.friction_at([1.0, 1.0]), 0.2);
    }

    #[test]
    fn negative_mu_invalid() {
        assert!(!SurfaceMap::uniform(-0.1).is_valid());
        assert!(!SurfaceMap::uniform(0.5).with_patch([0.0, 0.0], [1.0, 1.0], -1.0).is_valid());
        assert!(SurfaceMap::uniform(0.0).is_valid());
    }
}
