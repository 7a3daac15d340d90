//! Mass properties of a robot body built from uniform-density cuboid particles.
//!
//! Each particle is an axis-aligned box given by its lower corner (`origin`)
//! and its extents (`dims`) in the body frame. Particle tensors are the
//! analytic cuboid tensors about the particle centre; the aggregate tensor is
//! composed with the parallel-axis theorem about the aggregate centre of mass.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Real;

pub type Vec3<T> = [T; 3];
pub type Mat3<T> = [[T; 3]; 3];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BodyError {
    #[error("particle {index}: dimensions must be positive and finite, got {dims:?}")]
    InvalidParticle { index: usize, dims: [f64; 3] },
    #[error("particle {index}: density must be non-negative and finite, got {density}")]
    InvalidDensity { index: usize, density: f64 },
    #[error("body has zero total mass")]
    DegenerateBody,
    #[error("body has no particles")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Particle<T> {
    /// Lower corner of the box in the body frame, metres.
    pub origin: Vec3<T>,
    /// Box extents along the body axes, metres.
    pub dims: Vec3<T>,
    /// kg/m³
    pub density: T,
}

impl<T: Real> Particle<T> {
    pub fn new(origin: Vec3<T>, dims: Vec3<T>, density: T) -> Self {
        Self { origin, dims, density }
    }

    fn validate(&self, index: usize) -> Result<(), BodyError> {
        if self.dims.iter().any(|d| !(*d > T::zero()) || !d.is_finite()) {
            return Err(BodyError::InvalidParticle {
                index,
                dims: self.dims.map(Real::as_f64),
            });
        }
        if !(self.density >= T::zero()) || !self.density.is_finite() {
            return Err(BodyError::InvalidDensity {
                index,
                density: self.density.as_f64(),
            });
        }
        Ok(())
    }

    pub fn centre(&self) -> Vec3<T> {
        let half = T::lit(0.5);
        [
            self.origin[0] + half * self.dims[0],
            self.origin[1] + half * self.dims[1],
            self.origin[2] + half * self.dims[2],
        ]
    }

    /// Upper corner of the box.
    pub fn extent(&self) -> Vec3<T> {
        [
            self.origin[0] + self.dims[0],
            self.origin[1] + self.dims[1],
            self.origin[2] + self.dims[2],
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidBodySpec<T> {
    pub particles: Vec<Particle<T>>,
}

impl<T: Real> RigidBodySpec<T> {
    pub fn new(particles: Vec<Particle<T>>) -> Self {
        Self { particles }
    }
}

/// Mass, centre of mass and inertia tensor about the centre of mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassProperties<T> {
    pub mass: T,
    pub cg: Vec3<T>,
    /// kg·m², body-frame axes, about `cg`.
    pub inertia_cg: Mat3<T>,
}

impl<T: Real> MassProperties<T> {
    /// Inertia about the vertical body axis, the `I_z` of the planar yaw equation.
    pub fn yaw_inertia(&self) -> T {
        self.inertia_cg[2][2]
    }
}

pub fn yaw_inertia<T: Real>(mp: &MassProperties<T>) -> T {
    mp.yaw_inertia()
}

pub fn particle_mass_properties<T: Real>(p: &Particle<T>) -> Result<MassProperties<T>, BodyError> {
    p.validate(0)?;
    Ok(particle_unchecked(p))
}

fn particle_unchecked<T: Real>(p: &Particle<T>) -> MassProperties<T> {
    let [dx, dy, dz] = p.dims;
    let mass = p.density * dx * dy * dz;
    let k = mass / T::lit(12.0);
    let mut inertia_cg = [[T::zero(); 3]; 3];
    inertia_cg[0][0] = k * (dy * dy + dz * dz);
    inertia_cg[1][1] = k * (dx * dx + dz * dz);
    inertia_cg[2][2] = k * (dx * dx + dy * dy);
    MassProperties {
        mass,
        cg: p.centre(),
        inertia_cg,
    }
}

/// Aggregates all particles into one set of mass properties.
pub fn aggregate<T: Real>(spec: &RigidBodySpec<T>) -> Result<MassProperties<T>, BodyError> {
    if spec.particles.is_empty() {
        return Err(BodyError::Empty);
    }
    for (i, p) in spec.particles.iter().enumerate() {
        p.validate(i)?;
    }
    let parts: Vec<MassProperties<T>> = spec.particles.iter().map(particle_unchecked).collect();
    if parts.len() == 1 && parts[0].mass > T::zero() {
        return Ok(parts[0]);
    }

    let mass = parts.iter().fold(T::zero(), |acc, p| acc + p.mass);
    if !(mass > T::zero()) {
        return Err(BodyError::DegenerateBody);
    }
    let mut cg = [T::zero(); 3];
    for p in &parts {
        for k in 0..3 {
            cg[k] += p.mass * p.cg[k];
        }
    }
    for c in &mut cg {
        *c /= mass;
    }

    let mut inertia = [[T::zero(); 3]; 3];
    for p in &parts {
        let d = [p.cg[0] - cg[0], p.cg[1] - cg[1], p.cg[2] - cg[2]];
        let d2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
        for i in 0..3 {
            for j in 0..3 {
                let delta = if i == j { d2 } else { T::zero() };
                inertia[i][j] += p.inertia_cg[i][j] + p.mass * (delta - d[i] * d[j]);
            }
        }
    }
    // symmetric by construction up to rounding in the off-diagonal sums
    for i in 0..3 {
        for j in i + 1..3 {
            let s = T::lit(0.5) * (inertia[i][j] + inertia[j][i]);
            inertia[i][j] = s;
            inertia[j][i] = s;
        }
    }
    Ok(MassProperties {
        mass,
        cg,
        inertia_cg: inertia,
    })
}

/// Axis-aligned hull of every particle box.
pub fn bounding_box<T: Real>(spec: &RigidBodySpec<T>) -> Result<(Vec3<T>, Vec3<T>), BodyError> {
    let first = spec.particles.first().ok_or(BodyError::Empty)?;
    let mut lo = first.origin;
    let mut hi = first.extent();
    for p in &spec.particles[1..] {
        let e = p.extent();
        for k in 0..3 {
            lo[k] = lo[k].min(p.origin[k]);
            hi[k] = hi[k].max(e[k]);
        }
    }
    Ok((lo, hi))
}

/// Splits a particle into `k³` equal sub-particles of the same density.
pub fn subdivide<T: Real>(p: &Particle<T>, k: usize) -> Vec<Particle<T>> {
    let kk = T::from_usize(k).expect("subdivision count fits scalar");
    let step = [p.dims[0] / kk, p.dims[1] / kk, p.dims[2] / kk];
    let mut out = Vec::with_capacity(k * k * k);
    for i in 0..k {
        for j in 0..k {
            for l in 0..k {
                let idx = [i, j, l].map(|n| T::from_usize(n).unwrap());
                out.push(Particle {
                    origin: [
                        p.origin[0] + idx[0] * step[0],
                        p.origin[1] + idx[1] * step[1],
                        p.origin[2] + idx[2] * step[2],
                    ],
                    dims: step,
                    density: p.density,
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_cube(origin: [f64; 3]) -> Particle<f64> {
        Particle::new(origin, [1.0, 1.0, 1.0], 1.0)
    }

    #[test]
    fn unit_cube_properties() {
        let mp = particle_mass_properties(&unit_cube([0.0; 3])).unwrap();
        assert_eq!(mp.mass, 1.0);
        assert_eq!(mp.cg, [0.5, 0.5, 0.5]);
        for k in 0..3 {
            assert!((mp.inertia_cg[k][k] - 1.0 / 6.0).abs() < 1e-15);
        }
        assert!((yaw_inertia(&mp) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn zero_density_particle_is_massless() {
        let mp = particle_mass_properties(&Particle::new([1.0, 2.0, 3.0], [0.3, 0.2, 0.1], 0.0)).unwrap();
        assert_eq!(mp.mass, 0.0);
        assert!(mp.inertia_cg.iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn two_by_one_by_one_cuboid() {
        let mp = particle_mass_properties(&Particle::<f64>::new([0.0; 3], [2.0, 1.0, 1.0], 1.0)).unwrap();
        assert_eq!(mp.mass, 2.0);
        assert!((mp.inertia_cg[2][2] - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn non_positive_dims_rejected() {
        let err = particle_mass_properties(&Particle::new([0.0; 3], [1.0, 0.0, 1.0], 1.0)).unwrap_err();
        assert!(matches!(err, BodyError::InvalidParticle { .. }));
        let err = particle_mass_properties(&Particle::new([0.0; 3], [1.0, -1.0, 1.0], 1.0)).unwrap_err();
        assert!(matches!(err, BodyError::InvalidParticle { .. }));
    }

    #[test]
    fn two_cubes_equal_single_cuboid() {
        let spec = RigidBodySpec::new(vec![unit_cube([0.0; 3]), unit_cube([1.0, 0.0, 0.0])]);
        let mp = aggregate(&spec).unwrap();
        let single = particle_mass_properties(&Particle::<f64>::new([0.0; 3], [2.0, 1.0, 1.0], 1.0)).unwrap();
        assert_eq!(mp.mass, 2.0);
        assert_eq!(mp.cg, [1.0, 0.5, 0.5]);
        for i in 0..3 {
            for j in 0..3 {
                assert!((mp.inertia_cg[i][j] - single.inertia_cg[i][j]).abs() < 1e-14);
            }
        }
        assert!((mp.yaw_inertia() - 5.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn single_particle_aggregate_is_identity() {
        let p = Particle::new([0.3, -0.2, 0.1], [0.5, 0.7, 0.11], 930.0);
        let spec = RigidBodySpec::new(vec![p]);
        assert_eq!(aggregate(&spec).unwrap(), particle_mass_properties(&p).unwrap());
    }

    #[test]
    fn octant_split_leaves_aggregate_unchanged() {
        let p = Particle::new([0.1, 0.2, -0.3], [0.4, 0.6, 0.2], 1200.0);
        let whole = aggregate(&RigidBodySpec::new(vec![p])).unwrap();
        let split = aggregate(&RigidBodySpec::new(subdivide(&p, 2))).unwrap();
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
        assert!(rel(split.mass, whole.mass) < 1e-12);
        for k in 0..3 {
            assert!(rel(split.cg[k], whole.cg[k]) < 1e-12);
            assert!(rel(split.inertia_cg[k][k], whole.inertia_cg[k][k]) < 1e-12);
        }
    }

    #[test]
    fn all_zero_density_is_degenerate() {
        let spec = RigidBodySpec::new(vec![Particle::new([0.0; 3], [1.0; 3], 0.0); 2]);
        assert_eq!(aggregate(&spec).unwrap_err(), BodyError::DegenerateBody);
        assert_eq!(aggregate(&RigidBodySpec::<f64>::new(vec![])).unwrap_err(), BodyError::Empty);
    }

    #[test]
    fn bounding_boxes() {
        let one = RigidBodySpec::new(vec![unit_cube([0.0; 3])]);
        assert_eq!(bounding_box(&one).unwrap(), ([0.0; 3], [1.0; 3]));
        let two = RigidBodySpec::new(vec![unit_cube([0.0; 3]), unit_cube([1.0, 0.0, 0.0])]);
        assert_eq!(bounding_box(&two).unwrap(), ([0.0; 3], [2.0, 1.0, 1.0]));
        let moved = RigidBodySpec::new(vec![unit_cube([1.0, 2.0, 3.0])]);
        assert_eq!(bounding_box(&moved).unwrap(), ([1.0, 2.0, 3.0], [2.0, 3.0, 4.0]));
        assert_eq!(bounding_box(&RigidBodySpec::<f64>::new(vec![])).unwrap_err(), BodyError::Empty);
    }

    #[test]
    fn works_in_single_precision() {
        let mp = particle_mass_properties(&Particle::new([0.0_f32; 3], [2.0, 1.0, 1.0], 1.0)).unwrap();
        assert!((mp.yaw_inertia() - 5.0 / 6.0).abs() < 1e-6);
    }
}
