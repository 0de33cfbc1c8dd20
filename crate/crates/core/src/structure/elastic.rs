//! Elastic-spring FEM cell (n = 2): k x k unit cubes, each meshed with m x m
//! bilinear quadrilaterals on its own node patch, so that traces across cube
//! boundaries are independent and the trace jump carries the spring energy.
//! Jump integrals use nodal trapezoid quadrature along each face.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Vector;

/// One paired interface node: the trace on side a (node of the lower cube)
/// against the trace on side b (node of the neighbouring cube).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InterfacePair {
    pub node_a: usize,
    pub node_b: usize,
    /// Face normal direction `e_axis`, pointing from cube a into cube b.
    pub axis: usize,
    pub wrapped: bool,
    /// Trapezoid quadrature weight (length measure along the face).
    pub length_weight: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ElasticSpringCell {
    pub k: usize,
    pub m: usize,
    /// Measure weight density on the volume part (1/(n+1) by default).
    pub volume_weight: f64,
    /// Measure weight density on the interfaces (1/(n+1) by default, 0 for a
    /// purely volumetric cell, which then ties the traces together).
    pub surface_weight: f64,
    pub nodes: Vec<Vector>,
    /// Q1 connectivity, counterclockwise (corner order 00, 10, 11, 01).
    pub elements: Vec<[usize; 4]>,
    pub interfaces: Vec<InterfacePair>,
}

impl ElasticSpringCell {
    pub const N: usize = 2;

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn dof_count(&self) -> usize {
        2 * self.nodes.len()
    }

    /// Element side length.
    pub fn h(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn with_weights(mut self, volume_weight: f64, surface_weight: f64) -> Result<Self> {
        if volume_weight <= 0.0 || surface_weight < 0.0 {
            return Err(Error::InvalidParameter(
                "elastic cell needs volume weight > 0 and surface weight >= 0".into(),
            ));
        }
        self.volume_weight = volume_weight;
        self.surface_weight = surface_weight;
        Ok(self)
    }

    /// Total measure of one unit cell: volume part + n faces of surface part.
    pub fn unit_cell_measure(&self) -> f64 {
        self.volume_weight + Self::N as f64 * self.surface_weight
    }
}

fn node_id(k: usize, m: usize, cube: (usize, usize), i: usize, j: usize) -> usize {
    let cube_idx = cube.0 + k * cube.1;
    cube_idx * (m + 1) * (m + 1) + j * (m + 1) + i
}

/// Build the k-periodic elastic-spring cell with m x m elements per cube and
/// the standard measure weights 1/(n+1) on volume and surface.
pub fn build_elastic_spring_cell(k: usize, m: usize) -> Result<ElasticSpringCell> {
    if k == 0 || m == 0 {
        return Err(Error::InvalidParameter("elastic cell needs k >= 1 and m >= 1".into()));
    }
    // nodes in cube-major order matching node_id
    let mut nodes = Vec::with_capacity(k * k * (m + 1) * (m + 1));
    for cube_idx in 0..k * k {
        let cx = cube_idx % k;
        let cy = cube_idx / k;
        for j in 0..=m {
            for i in 0..=m {
                nodes.push(Vector::from_xy(
                    cx as f64 + i as f64 / m as f64,
                    cy as f64 + j as f64 / m as f64,
                ));
            }
        }
    }
    let mut elements = Vec::with_capacity(k * k * m * m);
    for cube_idx in 0..k * k {
        let cube = (cube_idx % k, cube_idx / k);
        for j in 0..m {
            for i in 0..m {
                elements.push([
                    node_id(k, m, cube, i, j),
                    node_id(k, m, cube, i + 1, j),
                    node_id(k, m, cube, i + 1, j + 1),
                    node_id(k, m, cube, i, j + 1),
                ]);
            }
        }
    }
    let trap = |idx: usize| -> f64 {
        let h = 1.0 / m as f64;
        if idx == 0 || idx == m {
            0.5 * h
        } else {
            h
        }
    };
    let mut interfaces = Vec::new();
    for cube_idx in 0..k * k {
        let (cx, cy) = (cube_idx % k, cube_idx / k);
        // +x face
        let nx = ((cx + 1) % k, cy);
        for j in 0..=m {
            interfaces.push(InterfacePair {
                node_a: node_id(k, m, (cx, cy), m, j),
                node_b: node_id(k, m, nx, 0, j),
                axis: 0,
                wrapped: cx + 1 == k,
                length_weight: trap(j),
            });
        }
        // +y face
        let ny = (cx, (cy + 1) % k);
        for i in 0..=m {
            interfaces.push(InterfacePair {
                node_a: node_id(k, m, (cx, cy), i, m),
                node_b: node_id(k, m, ny, i, 0),
                axis: 1,
                wrapped: cy + 1 == k,
                length_weight: trap(i),
            });
        }
    }
    Ok(ElasticSpringCell {
        k,
        m,
        volume_weight: 1.0 / 3.0,
        surface_weight: 1.0 / 3.0,
        nodes,
        elements,
        interfaces,
    })
}
