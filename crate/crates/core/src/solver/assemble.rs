//! Energy and gradient assembly for the cell problems.
//!
//! The decision variables are the per-block rigid motions (rigid-spring
//! lattice) or the nodal displacements (elastic cell) of the field `u`
//! itself; the boundary datum enters only through the affine increment
//! `A k e_m` across wrapped faces, which encodes the constraint that
//! `u - A x` is k-periodic. The assembled value is the cell average, i.e.
//! the k-cell integral divided by k^n.

use crate::integrand::{Integrand, Region};
use crate::structure::{ElasticSpringCell, RigidSpringCell};
use crate::tensor::{sym_product, SkewMatrix, SymMatrix, Vector};

/// A general (not necessarily symmetric) square matrix; gauge shifts add a
/// skew part to the symmetric boundary datum.
#[derive(Debug, Clone, Copy)]
pub struct Datum {
    n: usize,
    m: [[f64; 3]; 3],
}

impl Datum {
    pub fn from_sym(a: &SymMatrix) -> Self {
        let n = a.dim();
        let mut m = [[0.0; 3]; 3];
        for i in 0..n {
            for j in 0..n {
                m[i][j] = a.get(i, j);
            }
        }
        Datum { n, m }
    }

    pub fn add_skew(&self, s: &SkewMatrix) -> Self {
        let mut m = self.m;
        for i in 0..self.n {
            for j in 0..self.n {
                m[i][j] += s.get(i, j);
            }
        }
        Datum { n: self.n, m }
    }

    pub fn apply(&self, v: &Vector) -> Vector {
        let mut out = [0.0; 3];
        for i in 0..self.n {
            for j in 0..self.n {
                out[i] += self.m[i][j] * v.get(j);
            }
        }
        Vector::new(self.n, &out[..self.n]).unwrap()
    }
}

/// Action of the s-th skew generator: in 2D `S x = (-x2, x1)`, in 3D
/// `S_s x = e_s ∧ x`.
fn skew_generator_apply(n: usize, s: usize, x: &Vector) -> Vector {
    if n == 2 {
        Vector::from_xy(-x.get(1), x.get(0))
    } else {
        Vector::basis(3, s).cross(x)
    }
}

fn block_motion(n: usize, rot_params: usize, dofs: &[f64], block: usize) -> (SkewMatrix, Vector) {
    let dpb = rot_params + n;
    let o = block * dpb;
    let rot = SkewMatrix::from_params(n, &dofs[o..o + rot_params]);
    let mut t = [0.0; 3];
    t[..n].copy_from_slice(&dofs[o + rot_params..o + dpb]);
    (rot, Vector::new(n, &t[..n]).unwrap())
}

/// Assemble the rigid-spring cell energy and its gradient.
pub fn assemble_rigid(
    cell: &RigidSpringCell,
    f: &Integrand,
    datum: &Datum,
    u: &[f64],
    huber: Option<f64>,
) -> (f64, Vec<f64>) {
    let n = cell.n;
    let rot_params = SkewMatrix::param_count(n);
    let dpb = rot_params + n;
    assert_eq!(u.len(), cell.dof_count(), "dof vector length mismatch");
    let quad_order = if f.is_quadratic() { 2 } else { 4 };
    let inv_cells = 1.0 / (cell.k as f64).powi(n as i32);
    let mut energy = 0.0;
    let mut grad = vec![0.0; u.len()];
    for face in &cell.faces {
        let (rot_i, c_i) = block_motion(n, rot_params, u, face.block_i);
        let (rot_j, c_j) = block_motion(n, rot_params, u, face.block_j);
        let nu = Vector::basis(n, face.axis);
        let offset = if face.wrapped {
            nu.scale(cell.k as f64)
        } else {
            Vector::zero(n)
        };
        let affine = datum.apply(&offset);
        // density scale: dEu/dμ carries 1/weight on the interface
        let s = 1.0 / face.weight;
        for (x, qw) in cell.face_quadrature(face, quad_order) {
            let xj = x.sub(&offset);
            let jump = rot_j
                .apply(&xj)
                .add(&c_j)
                .add(&affine)
                .sub(&rot_i.apply(&x))
                .sub(&c_i);
            let xi = sym_product(&jump, &nu).unwrap().scale(s);
            let (val, g) = f.eval_grad(Region::Interface, &xi, huber);
            let c = qw * face.weight * inv_cells;
            energy += c * val;
            // d(energy)/d(jump) = c * s * G ν
            let gj = g.apply(&nu).scale(c * s);
            let oi = face.block_i * dpb;
            let oj = face.block_j * dpb;
            for d in 0..n {
                grad[oj + rot_params + d] += gj.get(d);
                grad[oi + rot_params + d] -= gj.get(d);
            }
            for r in 0..rot_params {
                grad[oj + r] += gj.dot(&skew_generator_apply(n, r, &xj));
                grad[oi + r] -= gj.dot(&skew_generator_apply(n, r, &x));
            }
        }
    }
    (energy, grad)
}

/// Q1 shape function values and reference gradients at (ξ, η) ∈ [0,1]².
fn q1_grads(xi: f64, eta: f64) -> [[f64; 2]; 4] {
    [
        [-(1.0 - eta), -(1.0 - xi)],
        [1.0 - eta, -xi],
        [eta, xi],
        [-eta, 1.0 - xi],
    ]
}

/// Assemble the elastic-spring cell energy and its gradient: Q1 volume term
/// plus nodal-trapezoid interface jump term. A zero surface weight skips the
/// interface term entirely (the traces are tied by the solver instead).
pub fn assemble_elastic(
    cell: &ElasticSpringCell,
    f: &Integrand,
    datum: &Datum,
    u: &[f64],
    huber: Option<f64>,
) -> (f64, Vec<f64>) {
    assert_eq!(u.len(), cell.dof_count(), "dof vector length mismatch");
    let h = cell.h();
    let inv_cells = 1.0 / (cell.k as f64 * cell.k as f64);
    let mut energy = 0.0;
    let mut grad = vec![0.0; u.len()];

    // volume term, 2x2 Gauss
    let rule = crate::structure::gauss_unit(2);
    let w_v = cell.volume_weight;
    let s_v = 1.0 / w_v;
    for elem in &cell.elements {
        for &(gx, wx) in &rule {
            for &(gy, wy) in &rule {
                let dn = q1_grads(gx, gy);
                // strain E = sym Σ_a u_a ⊗ ∇N_a, ∇N = dN/dξ / h
                let mut e = SymMatrix::zero(2);
                for (a, &node) in elem.iter().enumerate() {
                    let ux = u[2 * node];
                    let uy = u[2 * node + 1];
                    let nx = dn[a][0] / h;
                    let ny = dn[a][1] / h;
                    e.set_sym(0, 0, e.get(0, 0) + ux * nx);
                    e.set_sym(1, 1, e.get(1, 1) + uy * ny);
                    e.set_sym(0, 1, e.get(0, 1) + 0.5 * (ux * ny + uy * nx));
                }
                let xi = e.scale(s_v);
                let (val, g) = f.eval_grad(Region::Volume, &xi, huber);
                let c = wx * wy * h * h * w_v * inv_cells;
                energy += c * val;
                for (a, &node) in elem.iter().enumerate() {
                    let gn = g.apply(&Vector::from_xy(dn[a][0] / h, dn[a][1] / h));
                    grad[2 * node] += c * s_v * gn.get(0);
                    grad[2 * node + 1] += c * s_v * gn.get(1);
                }
            }
        }
    }

    // interface jump term
    let w_s = cell.surface_weight;
    if w_s > 0.0 {
        let s_s = 1.0 / w_s;
        for pair in &cell.interfaces {
            let nu = Vector::basis(2, pair.axis);
            let offset = if pair.wrapped {
                nu.scale(cell.k as f64)
            } else {
                Vector::zero(2)
            };
            let affine = datum.apply(&offset);
            let ua = Vector::from_xy(u[2 * pair.node_a], u[2 * pair.node_a + 1]);
            let ub = Vector::from_xy(u[2 * pair.node_b], u[2 * pair.node_b + 1]);
            let jump = ub.add(&affine).sub(&ua);
            let xi = sym_product(&jump, &nu).unwrap().scale(s_s);
            let (val, g) = f.eval_grad(Region::Interface, &xi, huber);
            let c = pair.length_weight * w_s * inv_cells;
            energy += c * val;
            let gj = g.apply(&nu).scale(c * s_s);
            grad[2 * pair.node_b] += gj.get(0);
            grad[2 * pair.node_b + 1] += gj.get(1);
            grad[2 * pair.node_a] -= gj.get(0);
            grad[2 * pair.node_a + 1] -= gj.get(1);
        }
    }

    (energy, grad)
}

/// Nodal interpolation of the affine field u = A x; the natural competitor
/// for the elastic cell (exactly representable in the Q1 space).
pub fn affine_field(cell: &ElasticSpringCell, a: &SymMatrix) -> Vec<f64> {
    let mut dofs = vec![0.0; cell.dof_count()];
    for (i, x) in cell.nodes.iter().enumerate() {
        let v = a.apply(x);
        dofs[2 * i] = v.get(0);
        dofs[2 * i + 1] = v.get(1);
    }
    dofs
}

/// Union-find over interface node pairs with affine potentials, used when
/// the surface weight vanishes and trace jumps must be zero: every node's
/// displacement equals its class root's plus a fixed offset `A·(wrap)`.
pub struct TieTable {
    pub root_of: Vec<usize>,
    /// Offset of each node relative to its root: u_node = u_root + pot.
    pub pot: Vec<[f64; 2]>,
    /// Root node ids in increasing order; the reduced unknowns.
    pub roots: Vec<usize>,
    /// Map node id -> reduced slot for roots (usize::MAX otherwise).
    pub slot: Vec<usize>,
}

impl TieTable {
    pub fn reduced_len(&self) -> usize {
        2 * self.roots.len()
    }

    pub fn expand(&self, reduced: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; 2 * self.root_of.len()];
        for node in 0..self.root_of.len() {
            let r = self.slot[self.root_of[node]];
            full[2 * node] = reduced[2 * r] + self.pot[node][0];
            full[2 * node + 1] = reduced[2 * r + 1] + self.pot[node][1];
        }
        full
    }

    pub fn reduce_grad(&self, full_grad: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.reduced_len()];
        for node in 0..self.root_of.len() {
            let r = self.slot[self.root_of[node]];
            g[2 * r] += full_grad[2 * node];
            g[2 * r + 1] += full_grad[2 * node + 1];
        }
        g
    }
}

pub fn build_ties(cell: &ElasticSpringCell, datum: &Datum) -> TieTable {
    let nn = cell.node_count();
    let mut parent: Vec<usize> = (0..nn).collect();
    let mut pot: Vec<[f64; 2]> = vec![[0.0; 2]; nn];

    // find with path compression, accumulating potentials
    fn find(parent: &mut Vec<usize>, pot: &mut Vec<[f64; 2]>, x: usize) -> usize {
        if parent[x] == x {
            return x;
        }
        let p = parent[x];
        let r = find(parent, pot, p);
        pot[x][0] += pot[p][0];
        pot[x][1] += pot[p][1];
        parent[x] = r;
        r
    }

    for pair in &cell.interfaces {
        let nu = Vector::basis(2, pair.axis);
        let offset = if pair.wrapped {
            nu.scale(cell.k as f64)
        } else {
            Vector::zero(2)
        };
        let affine = datum.apply(&offset);
        // constraint: u_a = u_b + affine
        let ra = find(&mut parent, &mut pot, pair.node_a);
        let rb = find(&mut parent, &mut pot, pair.node_b);
        if ra == rb {
            continue;
        }
        // u_a = u_root_a + pot[a]; set root_a under root_b:
        // u_root_a = u_b + affine - pot[a] = u_root_b + pot[b] + affine - pot[a]
        parent[ra] = rb;
        pot[ra][0] = pot[pair.node_b][0] + affine.get(0) - pot[pair.node_a][0];
        pot[ra][1] = pot[pair.node_b][1] + affine.get(1) - pot[pair.node_a][1];
    }
    let mut root_of = vec![0usize; nn];
    let mut final_pot = vec![[0.0; 2]; nn];
    for x in 0..nn {
        root_of[x] = find(&mut parent, &mut pot, x);
        final_pot[x] = pot[x];
    }
    let mut roots: Vec<usize> = root_of.iter().copied().collect();
    roots.sort_unstable();
    roots.dedup();
    let mut slot = vec![usize::MAX; nn];
    for (s, &r) in roots.iter().enumerate() {
        slot[r] = s;
    }
    TieTable { root_of, pot: final_pot, roots, slot }
}
