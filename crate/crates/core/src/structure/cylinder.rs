//! Rigid-cylinder lattice over a cylindrical domain ω x (0, 1): disks of
//! radius ε/4 centered on the ε-lattice, keeping exactly the cylinders whose
//! closure lies inside the domain, plus the η-tile grid used by piecewise
//! rigid two-phase fields.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned open rectangle, the cross-section ω of the domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn unit() -> Self {
        Rect { x0: 0.0, y0: 0.0, x1: 1.0, y1: 1.0 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn is_empty(&self) -> bool {
        self.x1 <= self.x0 || self.y1 <= self.y0
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CylinderLattice {
    pub omega: Rect,
    pub epsilon: f64,
    /// Disk radius, always ε/4.
    pub radius: f64,
    /// Lattice indices of the retained cylinders.
    pub indices: Vec<(i64, i64)>,
    /// Disk centers (ε i + ε/2 componentwise), parallel to `indices`.
    pub centers: Vec<(f64, f64)>,
}

impl CylinderLattice {
    pub fn count(&self) -> usize {
        self.centers.len()
    }

    /// Lateral surface area per cylinder (height 1).
    pub fn lateral_area(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.radius
    }
}

/// Enumerate the cylinders εD_i x (0,1) fully contained in ω x (0,1).
pub fn build_cylinder_lattice(omega: Rect, epsilon: f64) -> Result<CylinderLattice> {
    if omega.is_empty() {
        return Err(Error::InvalidParameter("domain rectangle is empty".into()));
    }
    if epsilon <= 0.0 {
        return Err(Error::InvalidParameter("epsilon must be positive".into()));
    }
    let radius = epsilon / 4.0;
    let mut indices = Vec::new();
    let mut centers = Vec::new();
    let i_lo = ((omega.x0 / epsilon).floor() as i64) - 1;
    let i_hi = ((omega.x1 / epsilon).ceil() as i64) + 1;
    let j_lo = ((omega.y0 / epsilon).floor() as i64) - 1;
    let j_hi = ((omega.y1 / epsilon).ceil() as i64) + 1;
    for j in j_lo..=j_hi {
        let cy = epsilon * (j as f64 + 0.5);
        if !(cy - radius > omega.y0 && cy + radius < omega.y1) {
            continue;
        }
        for i in i_lo..=i_hi {
            let cx = epsilon * (i as f64 + 0.5);
            if cx - radius > omega.x0 && cx + radius < omega.x1 {
                indices.push((i, j));
                centers.push((cx, cy));
            }
        }
    }
    Ok(CylinderLattice { omega, epsilon, radius, indices, centers })
}

/// Square η-tiles covering ω; tile sides must divide the rectangle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TileGrid {
    pub omega: Rect,
    pub eta: f64,
    pub nx: usize,
    pub ny: usize,
}

impl TileGrid {
    pub fn new(omega: Rect, eta: f64) -> Result<Self> {
        if eta <= 0.0 {
            return Err(Error::InvalidParameter("tile size eta must be positive".into()));
        }
        let nx = (omega.width() / eta).round();
        let ny = (omega.height() / eta).round();
        if nx < 1.0
            || ny < 1.0
            || (nx * eta - omega.width()).abs() > 1e-9 * omega.width()
            || (ny * eta - omega.height()).abs() > 1e-9 * omega.height()
        {
            return Err(Error::IncompatibleTiling(format!(
                "eta = {eta} does not tile a {} x {} rectangle",
                omega.width(),
                omega.height()
            )));
        }
        Ok(TileGrid { omega, eta, nx: nx as usize, ny: ny as usize })
    }

    pub fn tile_count(&self) -> usize {
        self.nx * self.ny
    }

    /// Lower-left corner of a tile.
    pub fn tile_origin(&self, t: usize) -> (f64, f64) {
        let tx = t % self.nx;
        let ty = t / self.nx;
        (
            self.omega.x0 + tx as f64 * self.eta,
            self.omega.y0 + ty as f64 * self.eta,
        )
    }

    /// Tile containing the point (x, y).
    pub fn tile_of(&self, x: f64, y: f64) -> usize {
        let tx = (((x - self.omega.x0) / self.eta).floor() as i64).clamp(0, self.nx as i64 - 1);
        let ty = (((y - self.omega.y0) / self.eta).floor() as i64).clamp(0, self.ny as i64 - 1);
        (tx + ty * self.nx as i64) as usize
    }

    /// The integer ratio h = η/ε; errors unless η is an exact multiple.
    pub fn cylinders_per_side(&self, epsilon: f64) -> Result<usize> {
        let h = (self.eta / epsilon).round();
        if h < 1.0 || (h * epsilon - self.eta).abs() > 1e-9 * self.eta {
            return Err(Error::IncompatibleTiling(format!(
                "eta = {} is not an integer multiple of epsilon = {epsilon}",
                self.eta
            )));
        }
        Ok(h as usize)
    }
}
