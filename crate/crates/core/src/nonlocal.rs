//! Non-local limit laboratory for the rigid-cylinder lattice: finite-ε
//! lateral-surface energies of piecewise rigid two-phase fields, the closed
//! form of their limit, convergence studies along an ε-ladder, and the
//! weighted projection onto rigid motions.
//!
//! Geometry: disks of radius ε/4 on the ε-lattice inside the cross-section
//! ω, extruded to height one. Phase one is a single rigid motion on the
//! matrix; phase two is one rigid motion per η-tile, constant across the
//! cylinders of that tile.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::structure::{build_cylinder_lattice, TileGrid};
use crate::tensor::{rigid_eval, sym_product_norm_sq, RigidMotion, Vector};

/// Coupling constants of the limit energy
/// `c1 ∫ |(u1 - u2)_planar|² + c2 ∫ |(u1 - u2)_3|²`
/// for radius-1/4 disks, together with the normalized constants obtained by
/// dividing out the disk area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonlocalConstants {
    pub c1: f64,
    pub c2: f64,
    /// Cross-section area of one unscaled disk, π/16.
    pub disk_area: f64,
    pub c1_tilde: f64,
    pub c2_tilde: f64,
}

impl NonlocalConstants {
    pub fn limit() -> Self {
        let disk_area = PI / 16.0;
        let c1 = 3.0 * PI / 8.0;
        let c2 = PI / 4.0;
        NonlocalConstants {
            c1,
            c2,
            disk_area,
            c1_tilde: c1 / (disk_area * disk_area),
            c2_tilde: c2 / (disk_area * disk_area),
        }
    }

    /// Anisotropic weight used by the rigid projection: the planar
    /// components carry c1-tilde, the axial one c2-tilde.
    pub fn lambda(&self) -> [f64; 3] {
        [self.c1_tilde, self.c1_tilde, self.c2_tilde]
    }
}

/// Integral of |w(x) ⊙ ν(x)|² over the lateral surface of the cylinder
/// of the given radius over `(cx, cy)`, height one, for a rigid field
/// `w(x) = α ∧ x + β`. Periodic trapezoid rule in the angle, Gauss in the
/// axial variable (the integrand is quadratic there, so this is exact).
pub fn lateral_surface_energy(
    center: (f64, f64),
    radius: f64,
    w: &RigidMotion,
    theta_nodes: usize,
) -> Result<f64> {
    if w.dim() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, got: w.dim() });
    }
    if !(radius > 0.0) || theta_nodes < 4 {
        return Err(Error::DegenerateQuadrature);
    }
    let z_rule = crate::structure::gauss_unit(3);
    let mut total = 0.0;
    for it in 0..theta_nodes {
        let theta = 2.0 * PI * it as f64 / theta_nodes as f64;
        let nu = Vector::from_xyz(theta.cos(), theta.sin(), 0.0);
        for &(z, wz) in &z_rule {
            let x = Vector::from_xyz(
                center.0 + radius * theta.cos(),
                center.1 + radius * theta.sin(),
                z,
            );
            let val = sym_product_norm_sq(&rigid_eval(w, &x), &nu);
            // dH² = r dθ dz
            total += wz * (2.0 * PI * radius / theta_nodes as f64) * val;
        }
    }
    Ok(total)
}

/// Piecewise rigid two-phase field: one motion on the matrix, one motion per
/// η-tile on the cylinder phase.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwoPhaseField {
    pub u1: RigidMotion,
    pub grid: TileGrid,
    pub tiles: Vec<RigidMotion>,
}

impl TwoPhaseField {
    pub fn new(u1: RigidMotion, grid: TileGrid, tiles: Vec<RigidMotion>) -> Result<Self> {
        if u1.dim() != 3 || tiles.iter().any(|t| t.dim() != 3) {
            return Err(Error::UnsupportedDimension(2));
        }
        if tiles.len() != grid.tile_count() {
            return Err(Error::InvalidParameter(format!(
                "expected {} tile motions, got {}",
                grid.tile_count(),
                tiles.len()
            )));
        }
        Ok(TwoPhaseField { u1, grid, tiles })
    }

    /// Relative motion u2 - u1 on the given tile.
    pub fn relative(&self, tile: usize) -> RigidMotion {
        self.tiles[tile].sub(&self.u1)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpsilonEnergyReport {
    pub epsilon: f64,
    pub gamma: f64,
    pub cylinder_count: usize,
    pub energy: f64,
}

/// The scaled lateral-surface energy
/// `ε^{γ-1} Σ_i ∫ |(u2 - u1) ⊙ ν|² dH²`
/// over the cylinders fully contained in the domain. Summation follows the
/// lattice enumeration order, so reruns are bitwise identical.
pub fn f_eps_energy(
    field: &TwoPhaseField,
    epsilon: f64,
    gamma: f64,
    theta_nodes: usize,
) -> Result<EpsilonEnergyReport> {
    field.grid.cylinders_per_side(epsilon)?;
    let lattice = build_cylinder_lattice(field.grid.omega, epsilon)?;
    let mut sum = 0.0;
    for &(cx, cy) in &lattice.centers {
        let tile = field.grid.tile_of(cx, cy);
        let w = field.relative(tile);
        sum += lateral_surface_energy((cx, cy), lattice.radius, &w, theta_nodes)?;
    }
    Ok(EpsilonEnergyReport {
        epsilon,
        gamma,
        cylinder_count: lattice.count(),
        energy: epsilon.powf(gamma - 1.0) * sum,
    })
}

/// Closed form of the γ = 2 limit: per tile,
/// `∫_{T x (0,1)} c1 |w_planar|² + c2 |w_3|² dx` with `w = u2 - u1`.
/// The integrand is quadratic, so tensor two-point Gauss is exact.
pub fn gamma_limit_closed(field: &TwoPhaseField) -> f64 {
    let constants = NonlocalConstants::limit();
    let rule = crate::structure::gauss_unit(2);
    let eta = field.grid.eta;
    let mut total = 0.0;
    for t in 0..field.grid.tile_count() {
        let w = field.relative(t);
        let (ox, oy) = field.grid.tile_origin(t);
        for &(gx, wx) in &rule {
            for &(gy, wy) in &rule {
                for &(gz, wz) in &rule {
                    let x = Vector::from_xyz(ox + eta * gx, oy + eta * gy, gz);
                    let v = rigid_eval(&w, &x);
                    let planar = v.get(0) * v.get(0) + v.get(1) * v.get(1);
                    let axial = v.get(2) * v.get(2);
                    total += wx * wy * wz
                        * eta
                        * eta
                        * (constants.c1 * planar + constants.c2 * axial);
                }
            }
        }
    }
    total
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyRow {
    pub epsilon: f64,
    pub cylinder_count: usize,
    pub energy: f64,
    pub limit: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub gamma: f64,
    pub limit: f64,
    pub rows: Vec<StudyRow>,
    /// Least-squares slope of log energy against log ε.
    pub energy_slope: Option<f64>,
    /// Least-squares slope of log relative error against log ε; absent when
    /// the errors sit at round-off.
    pub error_slope: Option<f64>,
}

fn ls_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Evaluate the ε-energy along a ladder against the closed-form limit.
pub fn convergence_study(
    field: &TwoPhaseField,
    gamma: f64,
    epsilons: &[f64],
    theta_nodes: usize,
) -> Result<ConvergenceStudy> {
    if epsilons.is_empty() {
        return Err(Error::InvalidParameter("need at least one epsilon".into()));
    }
    let limit = gamma_limit_closed(field);
    let mut rows = Vec::new();
    for &eps in epsilons {
        let rep = f_eps_energy(field, eps, gamma, theta_nodes)?;
        let rel_error = if limit.abs() > 0.0 {
            (rep.energy - limit).abs() / limit.abs()
        } else {
            rep.energy.abs()
        };
        rows.push(StudyRow {
            epsilon: eps,
            cylinder_count: rep.cylinder_count,
            energy: rep.energy,
            limit,
            rel_error,
        });
    }
    let energy_pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.energy > 0.0)
        .map(|r| (r.epsilon.ln(), r.energy.ln()))
        .collect();
    let error_pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.rel_error > 1e-13)
        .map(|r| (r.epsilon.ln(), r.rel_error.ln()))
        .collect();
    Ok(ConvergenceStudy {
        gamma,
        limit,
        rows,
        energy_slope: ls_slope(&energy_pts),
        error_slope: ls_slope(&error_pts),
    })
}

fn cholesky_solve_6(a: &mut [[f64; 6]; 6], b: &mut [f64; 6]) -> Result<[f64; 6]> {
    // scale-aware pivot floor
    let scale: f64 = (0..6).map(|i| a[i][i].abs()).fold(0.0, f64::max).max(1.0);
    for i in 0..6 {
        for j in 0..i {
            let mut s = a[i][j];
            for k in 0..j {
                s -= a[i][k] * a[j][k];
            }
            a[i][j] = s / a[j][j];
        }
        let mut d = a[i][i];
        for k in 0..i {
            d -= a[i][k] * a[i][k];
        }
        if d <= 1e-12 * scale {
            return Err(Error::DegenerateQuadrature);
        }
        a[i][i] = d.sqrt();
    }
    for i in 0..6 {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i][k] * b[k];
        }
        b[i] = s / a[i][i];
    }
    let mut x = [0.0; 6];
    for i in (0..6).rev() {
        let mut s = b[i];
        for k in i + 1..6 {
            s -= a[k][i] * x[k];
        }
        x[i] = s / a[i][i];
    }
    Ok(x)
}

/// Jacobian rows of `α ∧ x + β` with respect to the six parameters
/// (α1, α2, α3, β1, β2, β3).
fn rigid_jacobian(x: &Vector) -> [[f64; 6]; 3] {
    let (x1, x2, x3) = (x.get(0), x.get(1), x.get(2));
    [
        [0.0, x3, -x2, 1.0, 0.0, 0.0],
        [-x3, 0.0, x1, 0.0, 1.0, 0.0],
        [x2, -x1, 0.0, 0.0, 0.0, 1.0],
    ]
}

/// Weighted squared distance of the sampled field to a rigid motion under
/// the anisotropic weight Λ = diag(c1~, c1~, c2~).
pub fn rigid_projection_objective(
    points: &[Vector],
    values: &[Vector],
    weights: &[f64],
    motion: &RigidMotion,
) -> f64 {
    let lambda = NonlocalConstants::limit().lambda();
    let mut total = 0.0;
    for ((x, v), &w) in points.iter().zip(values).zip(weights) {
        let r = rigid_eval(motion, x).sub(v);
        for c in 0..3 {
            total += w * lambda[c] * r.get(c) * r.get(c);
        }
    }
    total
}

/// Best-approximating rigid motion of a weighted point sample in the
/// Λ-weighted least-squares sense; errors out when the sample does not
/// determine all six parameters.
pub fn project_onto_rigid(
    points: &[Vector],
    values: &[Vector],
    weights: &[f64],
) -> Result<RigidMotion> {
    if points.len() != values.len() || points.len() != weights.len() {
        return Err(Error::InvalidParameter(
            "points, values and weights must have equal length".into(),
        ));
    }
    if points.iter().chain(values).any(|v| v.dim() != 3) {
        return Err(Error::UnsupportedDimension(2));
    }
    let lambda = NonlocalConstants::limit().lambda();
    let mut a = [[0.0; 6]; 6];
    let mut b = [0.0; 6];
    for ((x, v), &w) in points.iter().zip(values).zip(weights) {
        let m = rigid_jacobian(x);
        for r in 0..3 {
            let lw = w * lambda[r];
            for i in 0..6 {
                for j in 0..6 {
                    a[i][j] += lw * m[r][i] * m[r][j];
                }
                b[i] += lw * m[r][i] * v.get(r);
            }
        }
    }
    let q = cholesky_solve_6(&mut a, &mut b)?;
    let alpha = Vector::from_xyz(q[0], q[1], q[2]);
    let beta = Vector::from_xyz(q[3], q[4], q[5]);
    Ok(RigidMotion::from_axial(&alpha, &beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::Rect;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn motion(alpha: [f64; 3], beta: [f64; 3]) -> RigidMotion {
        RigidMotion::from_axial(
            &Vector::from_xyz(alpha[0], alpha[1], alpha[2]),
            &Vector::from_xyz(beta[0], beta[1], beta[2]),
        )
    }

    #[test]
    fn lateral_surface_closed_forms() {
        // axial translation: π r; planar translation: (3/2) π r;
        // axial rotation about the cylinder axis: π r³
        for r in [0.25, 0.1, 0.7] {
            let e3 = lateral_surface_energy((0.0, 0.0), r, &motion([0.0; 3], [0.0, 0.0, 1.0]), 64)
                .unwrap();
            assert!((e3 - PI * r).abs() < 1e-12, "r {r}: {e3}");
            let e1 = lateral_surface_energy((0.0, 0.0), r, &motion([0.0; 3], [1.0, 0.0, 0.0]), 64)
                .unwrap();
            assert!((e1 - 1.5 * PI * r).abs() < 1e-12, "r {r}: {e1}");
            let rot =
                lateral_surface_energy((0.0, 0.0), r, &motion([0.0, 0.0, 1.0], [0.0; 3]), 64)
                    .unwrap();
            assert!((rot - PI * r * r * r).abs() < 1e-12, "r {r}: {rot}");
        }
    }

    #[test]
    fn limit_constants_are_consistent() {
        let c = NonlocalConstants::limit();
        assert!((c.disk_area - PI / 16.0).abs() < 1e-15);
        assert!((c.c1 - 6.0 * c.disk_area).abs() < 1e-15);
        assert!((c.c2 - 4.0 * c.disk_area).abs() < 1e-15);
        assert!((c.c1_tilde * c.disk_area * c.disk_area - c.c1).abs() < 1e-15);
    }

    fn constant_field(beta: [f64; 3]) -> TwoPhaseField {
        let grid = TileGrid::new(Rect::unit(), 1.0).unwrap();
        TwoPhaseField::new(RigidMotion::zero(3), grid, vec![motion([0.0; 3], beta)]).unwrap()
    }

    #[test]
    fn constant_fields_hit_limit_exactly_on_dyadic_ladder() {
        // unit square, ε = 2^-m: the lattice has exactly 1/ε² cylinders and
        // the per-cylinder integral is the closed form, so the γ = 2 energy
        // equals the limit for every ε
        for beta in [[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]] {
            let field = constant_field(beta);
            let limit = gamma_limit_closed(&field);
            for m in 2..=6 {
                let eps = 0.5f64.powi(m);
                let rep = f_eps_energy(&field, eps, 2.0, 64).unwrap();
                assert_eq!(rep.cylinder_count, (1 << m) * (1 << m));
                assert!(
                    (rep.energy - limit).abs() < 1e-12 * limit,
                    "m {m}: {} vs {limit}",
                    rep.energy
                );
            }
        }
        let f1 = constant_field([1.0, 0.0, 0.0]);
        assert!((gamma_limit_closed(&f1) - 3.0 * PI / 8.0).abs() < 1e-13);
        let f3 = constant_field([0.0, 0.0, 1.0]);
        assert!((gamma_limit_closed(&f3) - PI / 4.0).abs() < 1e-13);
    }

    #[test]
    fn rotational_field_converges_with_first_order_error() {
        let grid = TileGrid::new(Rect::unit(), 0.5).unwrap();
        let tiles = vec![
            motion([0.2, -0.1, 0.4], [0.3, 0.0, -0.2]),
            motion([0.0, 0.0, 1.0], [0.0, 0.5, 0.1]),
            motion([-0.3, 0.2, 0.0], [1.0, -1.0, 0.4]),
            motion([0.1, 0.1, 0.1], [0.0, 0.0, 0.0]),
        ];
        let field = TwoPhaseField::new(motion([0.05, 0.0, -0.1], [0.1, 0.2, 0.0]), grid, tiles)
            .unwrap();
        let eps: Vec<f64> = (2..=6).map(|m| 0.5f64.powi(m)).collect();
        let study = convergence_study(&field, 2.0, &eps, 64).unwrap();
        for pair in study.rows.windows(2) {
            assert!(pair[1].rel_error < pair[0].rel_error + 1e-12);
        }
        assert!(study.rows.last().unwrap().rel_error < 0.02);
        let slope = study.error_slope.unwrap();
        assert!(slope > 0.8, "error slope {slope}");
    }

    #[test]
    fn gamma_three_energy_scales_linearly() {
        let field = constant_field([0.0, 1.0, 0.5]);
        let eps: Vec<f64> = (2..=6).map(|m| 0.5f64.powi(m)).collect();
        let study = convergence_study(&field, 3.0, &eps, 64).unwrap();
        let slope = study.energy_slope.unwrap();
        assert!((slope - 1.0).abs() < 1e-10, "slope {slope}");
    }

    #[test]
    fn translation_of_both_phases_is_invisible() {
        let grid = TileGrid::new(Rect::unit(), 0.5).unwrap();
        let tiles: Vec<RigidMotion> = (0..4)
            .map(|i| motion([0.1 * i as f64, 0.0, 0.2], [0.0, 1.0 - i as f64, 0.3]))
            .collect();
        let base = TwoPhaseField::new(RigidMotion::zero(3), grid.clone(), tiles.clone()).unwrap();
        let shift = motion([0.4, -0.2, 0.7], [1.0, 2.0, -0.5]);
        let shifted = TwoPhaseField::new(
            RigidMotion::zero(3).add(&shift),
            grid,
            tiles.iter().map(|t| t.add(&shift)).collect(),
        )
        .unwrap();
        let e0 = f_eps_energy(&base, 0.125, 2.0, 64).unwrap().energy;
        let e1 = f_eps_energy(&shifted, 0.125, 2.0, 64).unwrap().energy;
        assert!((e0 - e1).abs() < 1e-12 * (1.0 + e0));
        assert!(
            (gamma_limit_closed(&base) - gamma_limit_closed(&shifted)).abs() < 1e-12
        );
    }

    #[test]
    fn incompatible_epsilon_is_rejected() {
        let field = constant_field([1.0, 0.0, 0.0]);
        assert!(f_eps_energy(&field, 0.3, 2.0, 64).is_err());
    }

    fn sample_grid() -> (Vec<Vector>, Vec<f64>) {
        let mut pts = Vec::new();
        let mut w = Vec::new();
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..3 {
                    pts.push(Vector::from_xyz(
                        i as f64 * 0.3,
                        j as f64 * 0.25 - 0.4,
                        k as f64 * 0.5,
                    ));
                    w.push(1.0 + 0.1 * (i + j) as f64);
                }
            }
        }
        (pts, w)
    }

    #[test]
    fn projection_recovers_rigid_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let (pts, w) = sample_grid();
        for _ in 0..10 {
            let m = motion(
                [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
                [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
            );
            let vals: Vec<Vector> = pts.iter().map(|x| rigid_eval(&m, x)).collect();
            let rec = project_onto_rigid(&pts, &vals, &w).unwrap();
            let diff = rec.sub(&m);
            assert!(diff.rotation.axial().norm() < 1e-10);
            assert!(diff.translation.norm() < 1e-10);
            assert!(rigid_projection_objective(&pts, &vals, &w, &rec) < 1e-18);
        }
    }

    #[test]
    fn projection_is_a_local_grid_minimum_for_nonrigid_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let (pts, w) = sample_grid();
        for _ in 0..5 {
            let vals: Vec<Vector> = pts
                .iter()
                .map(|x| {
                    Vector::from_xyz(
                        x.get(0) * x.get(0) + rng.gen_range(-0.2..0.2),
                        x.get(1).sin(),
                        x.get(2) * x.get(0),
                    )
                })
                .collect();
            let best = project_onto_rigid(&pts, &vals, &w).unwrap();
            let f0 = rigid_projection_objective(&pts, &vals, &w, &best);
            // brute-force neighbourhood grid in all six parameters
            let a0 = best.rotation.axial();
            let t0 = best.translation.clone();
            for d in 0..6 {
                for s in [-1.0f64, 1.0] {
                    let mut a = [a0.get(0), a0.get(1), a0.get(2)];
                    let mut t = [t0.get(0), t0.get(1), t0.get(2)];
                    if d < 3 {
                        a[d] += s * 1e-3;
                    } else {
                        t[d - 3] += s * 1e-3;
                    }
                    let m = motion(a, t);
                    let f = rigid_projection_objective(&pts, &vals, &w, &m);
                    assert!(f >= f0 - 1e-12, "perturbed objective below optimum");
                }
            }
        }
    }

    #[test]
    fn degenerate_sample_is_rejected() {
        let pts = vec![Vector::from_xyz(0.0, 0.0, 0.0)];
        let vals = vec![Vector::from_xyz(1.0, 0.0, 0.0)];
        assert!(matches!(
            project_onto_rigid(&pts, &vals, &[1.0]),
            Err(Error::DegenerateQuadrature)
        ));
    }
}
