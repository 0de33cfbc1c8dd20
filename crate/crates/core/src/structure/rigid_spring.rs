//! Rigid-spring lattice: k^n unit cubes, each carrying one rigid-motion
//! unknown, coupled by spring energies on the shared faces. The interface
//! measure weighs each unit face by 1/n so that a unit cell carries total
//! measure one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::structure::gauss_unit;
use crate::tensor::{SkewMatrix, SymMatrix, Vector};

/// One interior interface between two blocks, counted once with the normal
/// pointing in the +axis direction (from `block_i` into `block_j`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Face {
    pub block_i: usize,
    pub block_j: usize,
    /// Normal direction index; the face normal is `e_axis`.
    pub axis: usize,
    pub centroid: Vector,
    /// Measure weight density on the face (1/n).
    pub weight: f64,
    /// True if this face pairs across the periodic wraparound, in which case
    /// the neighbour is the translate of `block_j` by `k e_axis`.
    pub wrapped: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RigidSpringCell {
    pub n: usize,
    pub k: usize,
    /// Block centroids, lexicographic in the block multi-index.
    pub centroids: Vec<Vector>,
    pub faces: Vec<Face>,
}

impl RigidSpringCell {
    pub fn block_count(&self) -> usize {
        self.centroids.len()
    }

    /// Rigid-motion parameters per block: n(n-1)/2 rotation + n translation.
    pub fn dofs_per_block(&self) -> usize {
        SkewMatrix::param_count(self.n) + self.n
    }

    pub fn dof_count(&self) -> usize {
        self.block_count() * self.dofs_per_block()
    }

    /// Quadrature points and weights covering one face; weights sum to the
    /// unit face area.
    pub fn face_quadrature(&self, face: &Face, order: usize) -> Vec<(Vector, f64)> {
        let rule = gauss_unit(order);
        let transverse: Vec<usize> = (0..self.n).filter(|&d| d != face.axis).collect();
        let mut pts = Vec::new();
        match transverse.len() {
            1 => {
                for &(t, w) in &rule {
                    let mut c = [0.0; 3];
                    for d in 0..self.n {
                        c[d] = face.centroid.get(d);
                    }
                    c[transverse[0]] += t - 0.5;
                    pts.push((Vector::new(self.n, &c[..self.n]).unwrap(), w));
                }
            }
            _ => {
                for &(s, ws) in &rule {
                    for &(t, wt) in &rule {
                        let mut c = [0.0; 3];
                        for d in 0..self.n {
                            c[d] = face.centroid.get(d);
                        }
                        c[transverse[0]] += s - 0.5;
                        c[transverse[1]] += t - 0.5;
                        pts.push((Vector::new(self.n, &c[..self.n]).unwrap(), ws * wt));
                    }
                }
            }
        }
        pts
    }
}

/// Build the k-periodic rigid-spring cell in dimension n. Each periodic
/// interface is counted exactly once, oriented in the +axis direction.
pub fn build_rigid_spring_cell(n: usize, k: usize) -> Result<RigidSpringCell> {
    if n != 2 && n != 3 {
        return Err(Error::UnsupportedDimension(n));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("period count k must be at least 1".into()));
    }
    let block_count = k.pow(n as u32);
    let index_of = |idx: &[usize]| -> usize {
        let mut acc = 0;
        for d in (0..n).rev() {
            acc = acc * k + idx[d];
        }
        acc
    };
    let mut centroids = vec![Vector::zero(n); block_count];
    let mut faces = Vec::with_capacity(n * block_count);
    let mut idx = vec![0usize; n];
    loop {
        let bi = index_of(&idx);
        let mut c = [0.0; 3];
        for d in 0..n {
            c[d] = idx[d] as f64 + 0.5;
        }
        centroids[bi] = Vector::new(n, &c[..n]).unwrap();
        for axis in 0..n {
            let wrapped = idx[axis] + 1 == k;
            let mut jdx = idx.clone();
            jdx[axis] = (idx[axis] + 1) % k;
            let mut fc = c;
            fc[axis] = idx[axis] as f64 + 1.0;
            faces.push(Face {
                block_i: bi,
                block_j: index_of(&jdx),
                axis,
                centroid: Vector::new(n, &fc[..n]).unwrap(),
                weight: 1.0 / n as f64,
                wrapped,
            });
        }
        // advance multi-index
        let mut d = 0;
        loop {
            if d == n {
                let cell = RigidSpringCell { n, k, centroids, faces };
                debug_assert_eq!(cell.faces.len(), n * block_count);
                return Ok(cell);
            }
            idx[d] += 1;
            if idx[d] < k {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// The piecewise-constant competitor `u = A z_i` per block (zero rotation):
/// every interface jump equals `A e_axis`, so its energy is the c |A|^p
/// upper bound for the cell minimum.
pub fn competitor_field(cell: &RigidSpringCell, a: &SymMatrix) -> Vec<f64> {
    let dpb = cell.dofs_per_block();
    let rot = SkewMatrix::param_count(cell.n);
    let mut dofs = vec![0.0; cell.dof_count()];
    for (b, z) in cell.centroids.iter().enumerate() {
        let v = a.apply(z);
        for d in 0..cell.n {
            dofs[b * dpb + rot + d] = v.get(d);
        }
    }
    dofs
}
