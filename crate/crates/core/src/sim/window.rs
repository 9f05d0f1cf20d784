use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::SystemParams;

/// Position in the plane, metres, relative to the reference user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowShape {
    /// Axis-aligned square of the given side.
    Square { side: f64 },
    Disc { radius: f64 },
}

/// Finite observation window centred on the reference user. Interference from
/// outside it is ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimWindow {
    shape: WindowShape,
}

/// Default guard distance beyond `R_MBS`, metres.
pub const DEFAULT_GUARD: f64 = 250.0;

impl SimWindow {
    pub fn square(side: f64) -> Result<Self> {
        if !(side > 0.0 && side.is_finite()) {
            return Err(Error::param("window_side", format!("must be positive, got {side}")));
        }
        Ok(Self {
            shape: WindowShape::Square { side },
        })
    }

    pub fn disc(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::param("window_radius", format!("must be positive, got {radius}")));
        }
        Ok(Self {
            shape: WindowShape::Disc { radius },
        })
    }

    /// Square of side `max(1000, 2 (R_MBS + guard))`.
    pub fn default_for(params: &SystemParams, guard: f64) -> Self {
        let side = 1000f64.max(2.0 * (params.r_mbs() + guard));
        Self {
            shape: WindowShape::Square { side },
        }
    }

    pub fn shape(&self) -> WindowShape {
        self.shape
    }

    pub fn area(&self) -> f64 {
        match self.shape {
            WindowShape::Square { side } => side * side,
            WindowShape::Disc { radius } => PI * radius * radius,
        }
    }

    /// Largest radius of a disc about the origin that fits inside.
    pub fn inradius(&self) -> f64 {
        match self.shape {
            WindowShape::Square { side } => side / 2.0,
            WindowShape::Disc { radius } => radius,
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        match self.shape {
            WindowShape::Square { side } => p.x.abs() <= side / 2.0 && p.y.abs() <= side / 2.0,
            WindowShape::Disc { radius } => p.x * p.x + p.y * p.y <= radius * radius,
        }
    }

    /// Same shape with every length doubled.
    pub fn doubled(&self) -> Self {
        let shape = match self.shape {
            WindowShape::Square { side } => WindowShape::Square { side: 2.0 * side },
            WindowShape::Disc { radius } => WindowShape::Disc { radius: 2.0 * radius },
        };
        Self { shape }
    }

    /// The window must hold the whole MBS service disc plus `guard`.
    pub fn check_covers(&self, params: &SystemParams, guard: f64) -> Result<()> {
        let need = params.r_mbs() + guard;
        if guard < 0.0 || self.inradius() < need {
            return Err(Error::param(
                "window_side",
                format!(
                    "window must contain a disc of radius r_mbs + guard = {need} m around the user"
                ),
            ));
        }
        Ok(())
    }

    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match self.shape {
            WindowShape::Square { side } => {
                let h = side / 2.0;
                Point::new(rng.random_range(-h..=h), rng.random_range(-h..=h))
            }
            WindowShape::Disc { radius } => {
                let r = radius * rng.random::<f64>().sqrt();
                let theta = 2.0 * PI * rng.random::<f64>();
                Point::new(r * theta.cos(), r * theta.sin())
            }
        }
    }
}

/// Homogeneous Poisson point process of `intensity` points per m² on `window`.
pub fn sample_ppp<R: Rng + ?Sized>(intensity: f64, window: &SimWindow, rng: &mut R) -> Vec<Point> {
    let mean = intensity * window.area();
    if !(mean > 0.0) {
        return Vec::new();
    }
    let count: f64 = Poisson::new(mean)
        .expect("positive finite Poisson mean")
        .sample(rng);
    (0..count as usize).map(|_| window.sample_point(rng)).collect()
}

/// Keep each point independently with probability `keep`.
pub fn thin<R: Rng + ?Sized>(points: &[Point], keep: f64, rng: &mut R) -> Vec<Point> {
    points
        .iter()
        .copied()
        .filter(|_| rng.random::<f64>() < keep)
        .collect()
}
