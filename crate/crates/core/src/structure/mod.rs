//! Discrete unit-cell geometry and measure weights for the three periodic
//! structures: the rigid-spring lattice, the elastic-spring FEM cell and the
//! rigid-cylinder lattice.

mod cylinder;
mod elastic;
mod rigid_spring;

pub use cylinder::{build_cylinder_lattice, CylinderLattice, Rect, TileGrid};
pub use elastic::{build_elastic_spring_cell, ElasticSpringCell, InterfacePair};
pub use rigid_spring::{build_rigid_spring_cell, competitor_field, Face, RigidSpringCell};

/// Gauss-Legendre nodes and weights on [0, 1], orders 1..=4.
pub(crate) fn gauss_unit(order: usize) -> Vec<(f64, f64)> {
    match order {
        1 => vec![(0.5, 1.0)],
        2 => {
            let d = 0.5 / 3f64.sqrt();
            vec![(0.5 - d, 0.5), (0.5 + d, 0.5)]
        }
        3 => {
            let d = 0.5 * (3.0f64 / 5.0).sqrt();
            vec![
                (0.5 - d, 5.0 / 18.0),
                (0.5, 8.0 / 18.0),
                (0.5 + d, 5.0 / 18.0),
            ]
        }
        _ => {
            let a = 0.5 * ((3.0 - 2.0 * (6.0f64 / 5.0).sqrt()) / 7.0).sqrt();
            let b = 0.5 * ((3.0 + 2.0 * (6.0f64 / 5.0).sqrt()) / 7.0).sqrt();
            let wa = (18.0 + 30f64.sqrt()) / 72.0;
            let wb = (18.0 - 30f64.sqrt()) / 72.0;
            vec![(0.5 - b, wb), (0.5 - a, wa), (0.5 + a, wa), (0.5 + b, wb)]
        }
    }
}
