//! Small dense tensor calculus for dimensions 2 and 3: symmetric and skew
//! matrices, rigid motions and the symmetric product `a ⊙ b`.
//!
//! Everything is stored in fixed 3x3 / length-3 arrays with an explicit
//! dimension field; unused entries stay zero. All values are immutable and
//! all operations are pure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A vector in dimension 2 or 3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vector {
    n: usize,
    a: [f64; 3],
}

impl Vector {
    pub fn new(n: usize, components: &[f64]) -> Result<Self> {
        check_dim(n)?;
        if components.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: components.len(),
            });
        }
        let mut a = [0.0; 3];
        a[..n].copy_from_slice(components);
        Ok(Vector { n, a })
    }

    pub fn zero(n: usize) -> Self {
        Vector { n, a: [0.0; 3] }
    }

    /// Standard basis vector `e_i` (zero-based index).
    pub fn basis(n: usize, i: usize) -> Self {
        assert!(i < n);
        let mut a = [0.0; 3];
        a[i] = 1.0;
        Vector { n, a }
    }

    pub fn from_xyz(x: f64, y: f64, z: f64) -> Self {
        Vector { n: 3, a: [x, y, z] }
    }

    pub fn from_xy(x: f64, y: f64) -> Self {
        Vector { n: 2, a: [x, y, 0.0] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize) -> f64 {
        self.a[i]
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        self.a[0] * other.a[0] + self.a[1] * other.a[1] + self.a[2] * other.a[2]
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn add(&self, other: &Vector) -> Vector {
        let mut a = [0.0; 3];
        for i in 0..3 {
            a[i] = self.a[i] + other.a[i];
        }
        Vector { n: self.n, a }
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        let mut a = [0.0; 3];
        for i in 0..3 {
            a[i] = self.a[i] - other.a[i];
        }
        Vector { n: self.n, a }
    }

    pub fn scale(&self, t: f64) -> Vector {
        let mut a = [0.0; 3];
        for i in 0..3 {
            a[i] = t * self.a[i];
        }
        Vector { n: self.n, a }
    }

    /// Cross product; both vectors must be 3-dimensional.
    pub fn cross(&self, other: &Vector) -> Vector {
        debug_assert_eq!(self.n, 3);
        Vector {
            n: 3,
            a: [
                self.a[1] * other.a[2] - self.a[2] * other.a[1],
                self.a[2] * other.a[0] - self.a[0] * other.a[2],
                self.a[0] * other.a[1] - self.a[1] * other.a[0],
            ],
        }
    }
}

/// A symmetric n x n matrix (n = 2 or 3); `entries[i][j] == entries[j][i]`
/// holds exactly by construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    n: usize,
    m: [[f64; 3]; 3],
}

impl SymMatrix {
    /// Build from a full row-major matrix, symmetrizing small asymmetries is
    /// *not* done here: the input must already be symmetric.
    pub fn new(n: usize, rows: &[Vec<f64>]) -> Result<Self> {
        check_dim(n)?;
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: rows.len(),
            });
        }
        let mut m = [[0.0; 3]; 3];
        for i in 0..n {
            for j in 0..n {
                m[i][j] = rows[i][j];
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if m[i][j] != m[j][i] {
                    return Err(Error::NotSymmetric);
                }
            }
        }
        Ok(SymMatrix { n, m })
    }

    pub fn zero(n: usize) -> Self {
        SymMatrix { n, m: [[0.0; 3]; 3] }
    }

    pub fn diag(n: usize, d: &[f64]) -> Self {
        let mut m = [[0.0; 3]; 3];
        for i in 0..n {
            m[i][i] = d[i];
        }
        SymMatrix { n, m }
    }

    /// 2D symmetric matrix [[a, b], [b, d]].
    pub fn from_2d(a: f64, b: f64, d: f64) -> Self {
        SymMatrix {
            n: 2,
            m: [[a, b, 0.0], [b, d, 0.0], [0.0, 0.0, 0.0]],
        }
    }

    /// Symmetric part of an arbitrary square matrix.
    pub fn sym_part(n: usize, m: &[[f64; 3]; 3]) -> Self {
        let mut s = [[0.0; 3]; 3];
        for i in 0..n {
            for j in 0..n {
                s[i][j] = 0.5 * (m[i][j] + m[j][i]);
            }
        }
        SymMatrix { n, m: s }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[i][j]
    }

    pub(crate) fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.m[i][j] = v;
        self.m[j][i] = v;
    }

    pub fn frobenius_sq(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                s += self.m[i][j] * self.m[i][j];
            }
        }
        s
    }

    pub fn frobenius(&self) -> f64 {
        self.frobenius_sq().sqrt()
    }

    /// Frobenius inner product `<self, other>`.
    pub fn inner(&self, other: &SymMatrix) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                s += self.m[i][j] * other.m[i][j];
            }
        }
        s
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = self.m[i][j] + other.m[i][j];
            }
        }
        SymMatrix { n: self.n, m }
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = self.m[i][j] - other.m[i][j];
            }
        }
        SymMatrix { n: self.n, m }
    }

    pub fn scale(&self, t: f64) -> SymMatrix {
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = t * self.m[i][j];
            }
        }
        SymMatrix { n: self.n, m }
    }

    /// Matrix-vector product `A v`.
    pub fn apply(&self, v: &Vector) -> Vector {
        let mut a = [0.0; 3];
        for i in 0..self.n {
            for j in 0..self.n {
                a[i] += self.m[i][j] * v.a[j];
            }
        }
        Vector { n: self.n, a }
    }
}

/// A skew-symmetric n x n matrix; the diagonal is identically zero and
/// `entries[i][j] == -entries[j][i]` exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkewMatrix {
    n: usize,
    m: [[f64; 3]; 3],
}

impl SkewMatrix {
    pub fn zero(n: usize) -> Self {
        SkewMatrix { n, m: [[0.0; 3]; 3] }
    }

    /// 2D rotation generator [[0, -r], [r, 0]].
    pub fn from_2d(r: f64) -> Self {
        SkewMatrix {
            n: 2,
            m: [[0.0, -r, 0.0], [r, 0.0, 0.0], [0.0, 0.0, 0.0]],
        }
    }

    /// 3D skew matrix with axial vector `a`, so that `R x = a ∧ x`.
    pub fn from_axial(a: &Vector) -> Self {
        debug_assert_eq!(a.dim(), 3);
        let (a1, a2, a3) = (a.a[0], a.a[1], a.a[2]);
        SkewMatrix {
            n: 3,
            m: [[0.0, -a3, a2], [a3, 0.0, -a1], [-a2, a1, 0.0]],
        }
    }

    /// Independent parameters: `[r]` in 2D, the axial vector in 3D.
    pub fn from_params(n: usize, p: &[f64]) -> Self {
        match n {
            2 => SkewMatrix::from_2d(p[0]),
            _ => SkewMatrix::from_axial(&Vector::from_xyz(p[0], p[1], p[2])),
        }
    }

    /// Axial vector of a 3D skew matrix; inverse of [`SkewMatrix::from_axial`].
    pub fn axial(&self) -> Vector {
        debug_assert_eq!(self.n, 3);
        Vector::from_xyz(self.m[2][1], self.m[0][2], self.m[1][0])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[i][j]
    }

    /// Number of independent parameters, n(n-1)/2.
    pub fn param_count(n: usize) -> usize {
        n * (n - 1) / 2
    }

    pub fn apply(&self, v: &Vector) -> Vector {
        let mut a = [0.0; 3];
        for i in 0..self.n {
            for j in 0..self.n {
                a[i] += self.m[i][j] * v.a[j];
            }
        }
        Vector { n: self.n, a }
    }

    pub fn add(&self, other: &SkewMatrix) -> SkewMatrix {
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = self.m[i][j] + other.m[i][j];
            }
        }
        SkewMatrix { n: self.n, m }
    }

    pub fn sub(&self, other: &SkewMatrix) -> SkewMatrix {
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = self.m[i][j] - other.m[i][j];
            }
        }
        SkewMatrix { n: self.n, m }
    }
}

/// A rigid displacement `x ↦ R x + c` with `R` skew. Its symmetric gradient
/// vanishes identically, which is what makes it the gauge freedom of every
/// cell problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidMotion {
    pub rotation: SkewMatrix,
    pub translation: Vector,
}

impl RigidMotion {
    pub fn new(rotation: SkewMatrix, translation: Vector) -> Result<Self> {
        if rotation.dim() != translation.dim() {
            return Err(Error::DimensionMismatch {
                expected: rotation.dim(),
                got: translation.dim(),
            });
        }
        Ok(RigidMotion { rotation, translation })
    }

    pub fn zero(n: usize) -> Self {
        RigidMotion {
            rotation: SkewMatrix::zero(n),
            translation: Vector::zero(n),
        }
    }

    /// 3D rigid motion in axial form `x ↦ a ∧ x + b`.
    pub fn from_axial(a: &Vector, b: &Vector) -> Self {
        RigidMotion {
            rotation: SkewMatrix::from_axial(a),
            translation: *b,
        }
    }

    pub fn dim(&self) -> usize {
        self.translation.dim()
    }

    pub fn sub(&self, other: &RigidMotion) -> RigidMotion {
        RigidMotion {
            rotation: self.rotation.sub(&other.rotation),
            translation: self.translation.sub(&other.translation),
        }
    }

    pub fn add(&self, other: &RigidMotion) -> RigidMotion {
        RigidMotion {
            rotation: self.rotation.add(&other.rotation),
            translation: self.translation.add(&other.translation),
        }
    }
}

/// Evaluate a rigid motion at a point: `R x + c`.
pub fn rigid_eval(m: &RigidMotion, x: &Vector) -> Vector {
    m.rotation.apply(x).add(&m.translation)
}

/// Symmetric product `a ⊙ b = (a ⊗ b + b ⊗ a) / 2`.
pub fn sym_product(a: &Vector, b: &Vector) -> Result<SymMatrix> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let n = a.dim();
    let mut m = [[0.0; 3]; 3];
    for i in 0..n {
        for j in 0..n {
            m[i][j] = 0.5 * (a.a[i] * b.a[j] + b.a[i] * a.a[j]);
        }
    }
    Ok(SymMatrix { n, m })
}

/// Closed form for `|a ⊙ b|²_F = (|a|²|b|² + (a·b)²) / 2`.
pub fn sym_product_norm_sq(a: &Vector, b: &Vector) -> f64 {
    0.5 * (a.norm_sq() * b.norm_sq() + a.dot(b) * a.dot(b))
}

fn check_dim(n: usize) -> Result<()> {
    if n == 2 || n == 3 {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(n))
    }
}
