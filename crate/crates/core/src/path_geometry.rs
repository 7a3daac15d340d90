//! Paths made of straight lines joined by circular arcs.
//!
//! A path is a start pose plus a list of sections, each starting where the
//! previous one ended, so the path is tangent-continuous by construction.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::Pose;
use crate::scalar::{sinc, wrap_angle};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PathSection<T> {
    Line { length: T },
    /// `turn_angle` is signed: positive turns left.
    Arc { radius: T, turn_angle: T },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PathError {
    #[error("path has no sections")]
    Empty,
    #[error("section {index}: {reason}")]
    InvalidSection { index: usize, reason: &'static str },
    #[error("arc length {s} outside [0, {total}]")]
    OutOfRange { s: f64, total: f64 },
}

impl<T: Real> PathSection<T> {
    fn validate(&self, index: usize) -> Result<(), PathError> {
        let bad = |reason| Err(PathError::InvalidSection { index, reason });
        match *self {
            PathSection::Line { length } => {
                if !(length > T::zero()) || !length.is_finite() {
                    return bad("line length must be positive");
                }
            }
            PathSection::Arc { radius, turn_angle } => {
                if !(radius > T::zero()) || !radius.is_finite() {
                    return bad("arc radius must be positive");
                }
                let two_pi = T::PI() + T::PI();
                if turn_angle == T::zero() || !(turn_angle.abs() <= two_pi) {
                    return bad("arc turn angle must be non-zero with magnitude at most 2π");
                }
            }
        }
        Ok(())
    }

    pub fn length(&self) -> T {
        section_length(self)
    }

    /// Signed curvature: 0 on lines, ±1/radius on arcs.
    pub fn curvature(&self) -> T {
        match *self {
            PathSection::Line { .. } => T::zero(),
            PathSection::Arc { radius, turn_angle } => turn_angle.signum() / radius,
        }
    }

    /// The first `length` metres of this section as a section of its own.
    pub fn truncated(&self, length: T) -> PathSection<T> {
        match *self {
            PathSection::Line { .. } => PathSection::Line { length },
            PathSection::Arc { radius, turn_angle } => PathSection::Arc {
                radius,
                turn_angle: turn_angle.signum() * length / radius,
            },
        }
    }
}

pub fn section_length<T: Real>(s: &PathSection<T>) -> T {
    match *s {
        PathSection::Line { length } => length,
        PathSection::Arc { radius, turn_angle } => radius * turn_angle.abs(),
    }
}

/// Advances a pose by `ds` along a constant-curvature curve.
fn advance<T: Real>(pose: &Pose<T>, curvature: T, ds: T) -> Pose<T> {
    let half = T::lit(0.5) * curvature * ds;
    let chord = ds * sinc(half);
    let mid = pose.theta + half;
    Pose::new(
        pose.x + chord * mid.cos(),
        pose.y + chord * mid.sin(),
        pose.theta + curvature * ds,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPath<T>", bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct PathSpec<T> {
    start_pose: Pose<T>,
    sections: Vec<PathSection<T>>,
    /// Arc length at the start of each section, plus the total at the end.
    #[serde(skip)]
    offsets: Vec<T>,
    /// Pose at the start of each section.
    #[serde(skip)]
    joints: Vec<Pose<T>>,
}

#[derive(Deserialize)]
struct RawPath<T> {
    start_pose: Pose<T>,
    sections: Vec<PathSection<T>>,
}

impl<T: Real> TryFrom<RawPath<T>> for PathSpec<T> {
    type Error = PathError;
    fn try_from(raw: RawPath<T>) -> Result<Self, PathError> {
        PathSpec::new(raw.start_pose, raw.sections)
    }
}

impl<T: Real> PathSpec<T> {
    pub fn new(start: Pose<T>, sections: Vec<PathSection<T>>) -> Result<Self, PathError> {
        if sections.is_empty() {
            return Err(PathError::Empty);
        }
        for (i, s) in sections.iter().enumerate() {
            s.validate(i)?;
        }
        let mut offsets = Vec::with_capacity(sections.len() + 1);
        let mut joints = Vec::with_capacity(sections.len());
        let mut acc = T::zero();
        let mut pose = start;
        for s in &sections {
            offsets.push(acc);
            joints.push(pose);
            let len = s.length();
            pose = advance(&pose, s.curvature(), len);
            acc += len;
        }
        offsets.push(acc);
        Ok(Self {
            start_pose: start,
            sections,
            offsets,
            joints,
        })
    }

    pub fn start(&self) -> Pose<T> {
        self.start_pose
    }

    pub fn sections(&self) -> &[PathSection<T>] {
        &self.sections
    }

    pub fn total_length(&self) -> T {
        *self.offsets.last().expect("offsets never empty")
    }

    /// Arc length at which section `index` starts.
    pub fn section_start(&self, index: usize) -> T {
        self.offsets[index]
    }

    /// Index of the section containing `s`; joints belong to the following section.
    pub fn section_index(&self, s: T) -> usize {
        let n = self.sections.len();
        match self.offsets[1..n].iter().position(|&o| s < o) {
            Some(i) => i,
            None => n - 1,
        }
    }

    fn check_range(&self, s: T) -> Result<(), PathError> {
        let total = self.total_length();
        if !(s >= T::zero() && s <= total) {
            return Err(PathError::OutOfRange {
                s: s.as_f64(),
                total: total.as_f64(),
            });
        }
        Ok(())
    }

    pub fn pose_at_arclength(&self, s: T) -> Result<Pose<T>, PathError> {
        self.check_range(s)?;
        let i = self.section_index(s);
        let local = s - self.offsets[i];
        Ok(advance(&self.joints[i], self.sections[i].curvature(), local))
    }

    pub fn curvature_at(&self, s: T) -> Result<T, PathError> {
        self.check_range(s)?;
        Ok(self.sections[self.section_index(s)].curvature())
    }

    pub fn end_pose(&self) -> Pose<T> {
        let n = self.sections.len();
        let last = &self.sections[n - 1];
        advance(&self.joints[n - 1], last.curvature(), last.length())
    }

    /// The part of the path from arc length `s` to the end.
    pub fn remainder(&self, s: T) -> Result<(PathSpec<T>, usize), PathError> {
        self.check_range(s)?;
        let i = self.section_index(s);
        let start = self.pose_at_arclength(s)?;
        let left = self.offsets[i + 1] - s;
        let mut sections = Vec::with_capacity(self.sections.len() - i);
        let tiny = T::lit(1e-9);
        if left > tiny {
            sections.push(self.sections[i].truncated(left));
        }
        sections.extend_from_slice(&self.sections[i + 1..]);
        if sections.is_empty() {
            sections.push(self.sections[i].truncated(left.max(tiny)));
        }
        let first_original = self.sections.len() - sections.len();
        Ok((PathSpec::new(start, sections)?, first_original))
    }

    /// Arc length of the path point closest to `(x, y)`.
    pub fn nearest_arclength(&self, x: T, y: T) -> T {
        let mut best = (T::infinity(), T::zero());
        for (i, section) in self.sections.iter().enumerate() {
            let j = &self.joints[i];
            let len = section.length();
            let local = match *section {
                PathSection::Line { .. } => {
                    let along = (x - j.x) * j.theta.cos() + (y - j.y) * j.theta.sin();
                    along.max(T::zero()).min(len)
                }
                PathSection::Arc { radius, turn_angle } => {
                    let sign = turn_angle.signum();
                    // centre lies to the left for a left turn
                    let cx = j.x - sign * radius * j.theta.sin();
                    let cy = j.y + sign * radius * j.theta.cos();
                    let start_angle = (j.y - cy).atan2(j.x - cx);
                    let point_angle = (y - cy).atan2(x - cx);
                    let swept = wrap_angle(sign * (point_angle - start_angle));
                    let two_pi = T::PI() + T::PI();
                    let swept = if swept < T::zero() && turn_angle.abs() > T::PI() {
                        swept + two_pi
                    } else {
                        swept
                    };
                    (swept * radius).max(T::zero()).min(len)
                }
            };
            let p = advance(j, section.curvature(), local);
            let d = (p.x - x).hypot(p.y - y);
            if d < best.0 {
                best = (d, self.offsets[i] + local);
            }
        }
        best.1
    }
}

pub fn total_length<T: Real>(path: &PathSpec<T>) -> T {
    path.total_length()
}

pub fn pose_at_arclength<T: Real>(path: &PathSpec<T>, s: T) -> Result<Pose<T>, PathError> {
    path.pose_at_arclength(s)
}
