//! The energy density `f(x, A)` with its growth constants.
//!
//! Spatial dependence is restricted to region tags (volume vs interface):
//! the density is a fixed convex function of the strain argument, scaled by
//! a nonnegative weight per region. Two forms are supported, a pure power
//! `w |A|^p` and a quadratic form `(C A, A)` with `C` positive semidefinite
//! on the space of symmetric matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::SymMatrix;

/// Region tag carrying the x-dependence of the density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Volume,
    Interface,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionWeights {
    pub volume: f64,
    pub interface: f64,
}

impl Default for RegionWeights {
    fn default() -> Self {
        RegionWeights { volume: 1.0, interface: 1.0 }
    }
}

/// Functional form of the density, acting on symmetric matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Form {
    PurePower { weight: f64 },
    /// Coefficient matrix in the orthonormal coordinates of [`sym_coords`];
    /// dimension 3 (n = 2) or 6 (n = 3). Implies p = 2.
    Quadratic { c: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Integrand {
    p: f64,
    form: Form,
    #[serde(default)]
    region_weights: RegionWeights,
    alpha: f64,
    beta: f64,
}

/// Orthonormal coordinates of a symmetric matrix: diagonal entries followed
/// by the off-diagonal entries scaled by sqrt(2), so that the Euclidean norm
/// of the coordinates equals the Frobenius norm.
pub fn sym_coords(a: &SymMatrix) -> Vec<f64> {
    let n = a.dim();
    let mut x = Vec::with_capacity(sym_dim(n));
    for i in 0..n {
        x.push(a.get(i, i));
    }
    let s = std::f64::consts::SQRT_2;
    for i in 0..n {
        for j in (i + 1)..n {
            x.push(s * a.get(i, j));
        }
    }
    x
}

/// Inverse of [`sym_coords`].
pub fn sym_from_coords(n: usize, x: &[f64]) -> SymMatrix {
    let mut a = SymMatrix::zero(n);
    for i in 0..n {
        a.set_sym(i, i, x[i]);
    }
    let s = std::f64::consts::SQRT_2;
    let mut k = n;
    for i in 0..n {
        for j in (i + 1)..n {
            a.set_sym(i, j, x[k] / s);
            k += 1;
        }
    }
    a
}

pub fn sym_dim(n: usize) -> usize {
    n * (n + 1) / 2
}

impl Integrand {
    /// Pure power density `w |A|^p`; `alpha` and `beta` are taken as `w`.
    pub fn pure_power(p: f64, weight: f64) -> Result<Self> {
        if p < 1.0 {
            return Err(Error::InvalidParameter(format!("exponent p = {p} < 1")));
        }
        if weight <= 0.0 {
            return Err(Error::InvalidParameter("pure-power weight must be positive".into()));
        }
        Ok(Integrand {
            p,
            form: Form::PurePower { weight },
            region_weights: RegionWeights::default(),
            alpha: weight,
            beta: weight,
        })
    }

    /// Quadratic form density with stated growth constants. The coefficient
    /// matrix must be symmetric and positive semidefinite (convexity); a
    /// semidefinite matrix is accepted so that growth-check failures can be
    /// exercised, a negative eigenvalue is not.
    pub fn quadratic(c: Vec<Vec<f64>>, alpha: f64, beta: f64) -> Result<Self> {
        let d = c.len();
        if !(d == sym_dim(2) || d == sym_dim(3)) || c.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidParameter(format!(
                "quadratic coefficient matrix must be 3x3 or 6x6, got {d} rows"
            )));
        }
        for i in 0..d {
            for j in (i + 1)..d {
                if (c[i][j] - c[j][i]).abs() > 1e-12 {
                    return Err(Error::NotSymmetric);
                }
            }
        }
        let (lo, _) = jacobi_eig_range(&c);
        if lo < -1e-10 {
            return Err(Error::NonConvexIntegrand(format!(
                "coefficient matrix has negative eigenvalue {lo:.3e}"
            )));
        }
        Integrand::validate_growth(alpha, beta)?;
        Ok(Integrand {
            p: 2.0,
            form: Form::Quadratic { c },
            region_weights: RegionWeights::default(),
            alpha,
            beta,
        })
    }

    fn validate_growth(alpha: f64, beta: f64) -> Result<()> {
        if alpha <= 0.0 || beta < alpha {
            return Err(Error::InvalidParameter(format!(
                "growth constants need 0 < alpha <= beta, got alpha = {alpha}, beta = {beta}"
            )));
        }
        Ok(())
    }

    pub fn with_region_weights(mut self, weights: RegionWeights) -> Result<Self> {
        if weights.volume < 0.0 || weights.interface < 0.0 {
            return Err(Error::InvalidParameter("region weights must be nonnegative".into()));
        }
        self.region_weights = weights;
        Ok(self)
    }

    pub fn exponent(&self) -> f64 {
        self.p
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn form(&self) -> &Form {
        &self.form
    }

    pub fn region_weight(&self, region: Region) -> f64 {
        match region {
            Region::Volume => self.region_weights.volume,
            Region::Interface => self.region_weights.interface,
        }
    }

    /// Whether the cell energy built from this density is quadratic in the
    /// displacement unknowns (conjugate-gradient solver path).
    pub fn is_quadratic(&self) -> bool {
        match self.form {
            Form::PurePower { .. } => self.p == 2.0,
            Form::Quadratic { .. } => true,
        }
    }

    fn base_eval(&self, a: &SymMatrix) -> f64 {
        match &self.form {
            Form::PurePower { weight } => weight * a.frobenius_sq().powf(self.p / 2.0),
            Form::Quadratic { c } => {
                let x = sym_coords(a);
                let mut s = 0.0;
                for i in 0..x.len() {
                    for j in 0..x.len() {
                        s += c[i][j] * x[i] * x[j];
                    }
                }
                s
            }
        }
    }

    /// Energy density at strain `A` in the given region.
    pub fn evaluate(&self, region: Region, a: &SymMatrix) -> f64 {
        self.region_weight(region) * self.base_eval(a)
    }

    /// Density and its gradient with respect to `A`. For p = 1 the norm is
    /// Huber-smoothed with parameter `huber_delta` so that descent solvers
    /// see a C¹ objective; pass `None` for the exact nonsmooth value.
    pub fn eval_grad(
        &self,
        region: Region,
        a: &SymMatrix,
        huber_delta: Option<f64>,
    ) -> (f64, SymMatrix) {
        let w = self.region_weight(region);
        match &self.form {
            Form::PurePower { weight } => {
                let norm = a.frobenius();
                if self.p == 1.0 {
                    if let Some(delta) = huber_delta {
                        let (h, hp) = huber(norm, delta);
                        let g = if norm > 0.0 {
                            a.scale(w * weight * hp / norm)
                        } else {
                            SymMatrix::zero(a.dim())
                        };
                        return (w * weight * h, g);
                    }
                }
                let value = w * weight * norm.powf(self.p);
                let g = if norm > 0.0 {
                    a.scale(w * weight * self.p * norm.powf(self.p - 2.0))
                } else {
                    SymMatrix::zero(a.dim())
                };
                (value, g)
            }
            Form::Quadratic { c } => {
                let x = sym_coords(a);
                let d = x.len();
                let mut value = 0.0;
                let mut gx = vec![0.0; d];
                for i in 0..d {
                    for j in 0..d {
                        value += c[i][j] * x[i] * x[j];
                        gx[i] += 2.0 * c[i][j] * x[j];
                    }
                }
                (w * value, sym_from_coords(a.dim(), &gx).scale(w))
            }
        }
    }
}

fn huber(s: f64, delta: f64) -> (f64, f64) {
    if s <= delta {
        (s * s / (2.0 * delta) + delta / 2.0, s / delta)
    } else {
        (s, 1.0)
    }
}

/// Outcome of a recession-function estimate along a growth ladder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Recession {
    Finite(f64),
    Divergent,
}

/// Estimate the recession function `lim_t f(t ξ)/t` on an increasing ladder
/// of scales. Superlinear growth (successive ratio above 1 + 1e-3) is
/// flagged as divergence.
pub fn recession_estimate(
    f: &Integrand,
    region: Region,
    xi: &SymMatrix,
    t_ladder: &[f64],
) -> Result<Recession> {
    if t_ladder.len() < 2 {
        return Err(Error::InvalidParameter("recession ladder needs at least 2 scales".into()));
    }
    if t_ladder.windows(2).any(|w| w[1] <= w[0]) || t_ladder[0] <= 0.0 {
        return Err(Error::InvalidParameter("recession ladder must be positive increasing".into()));
    }
    let values: Vec<f64> = t_ladder
        .iter()
        .map(|&t| f.evaluate(region, &xi.scale(t)) / t)
        .collect();
    for w in values.windows(2) {
        if w[0] > 0.0 && w[1] / w[0] > 1.0 + 1e-3 {
            return Ok(Recession::Divergent);
        }
    }
    Ok(Recession::Finite(*values.last().unwrap()))
}

/// Default geometric ladder t = 1e2, 1e3, ..., 1e6.
pub fn default_ladder() -> Vec<f64> {
    (2..=6).map(|k| 10f64.powi(k)).collect()
}

/// Worst-case growth ratios over a random strain sample.
#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    /// Minimum of f(x, A) / |A|^p; must be >= alpha.
    pub min_lower_ratio: f64,
    /// Maximum of f(x, A) / (1 + |A|^p); must be <= beta.
    pub max_upper_ratio: f64,
    pub samples: usize,
    pub pass: bool,
}

/// Sample the growth condition `alpha |A|^p <= f(x, A) <= beta (1 + |A|^p)`
/// on random symmetric matrices across several magnitude scales.
pub fn growth_check(f: &Integrand, n: usize, samples: usize, seed: u64) -> Result<GrowthReport> {
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    if samples < 1 {
        return Err(Error::InvalidParameter("growth check needs at least one sample".into()));
    }
    let regions: Vec<Region> = [Region::Volume, Region::Interface]
        .into_iter()
        .filter(|&r| f.region_weight(r) > 0.0)
        .collect();
    if regions.is_empty() {
        return Err(Error::InvalidParameter("all region weights are zero".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_lower = f64::INFINITY;
    let mut max_upper = 0.0f64;
    for _ in 0..samples {
        let d = sym_dim(n);
        let scale = 10f64.powf(rng.gen_range(-2.0..2.0));
        let x: Vec<f64> = (0..d).map(|_| scale * rng.gen_range(-1.0..1.0)).collect();
        let a = sym_from_coords(n, &x);
        let norm_p = a.frobenius().powf(f.exponent());
        if norm_p == 0.0 {
            continue;
        }
        for &region in &regions {
            let v = f.evaluate(region, &a);
            min_lower = min_lower.min(v / norm_p);
            max_upper = max_upper.max(v / (1.0 + norm_p));
        }
    }
    let pass = min_lower >= f.alpha() - 1e-12 && max_upper <= f.beta() + 1e-12;
    Ok(GrowthReport {
        min_lower_ratio: min_lower,
        max_upper_ratio: max_upper,
        samples,
        pass,
    })
}

/// Eigenvalue range of a small dense symmetric matrix by cyclic Jacobi.
fn jacobi_eig_range(c: &[Vec<f64>]) -> (f64, f64) {
    let d = c.len();
    let mut a: Vec<Vec<f64>> = c.to_vec();
    for _sweep in 0..50 {
        let mut off = 0.0;
        for i in 0..d {
            for j in (i + 1)..d {
                off += a[i][j] * a[i][j];
            }
        }
        if off < 1e-28 {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let cth = 1.0 / (t * t + 1.0).sqrt();
                let sth = t * cth;
                for k in 0..d {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = cth * akp - sth * akq;
                    a[k][q] = sth * akp + cth * akq;
                }
                for k in 0..d {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = cth * apk - sth * aqk;
                    a[q][k] = sth * apk + cth * aqk;
                }
            }
        }
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..d {
        lo = lo.min(a[i][i]);
        hi = hi.max(a[i][i]);
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{sym_product, Vector};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn rand_sym(n: usize, rng: &mut impl Rng) -> SymMatrix {
        let x: Vec<f64> = (0..sym_dim(n)).map(|_| rng.gen_range(-2.0..2.0)).collect();
        sym_from_coords(n, &x)
    }

    #[test]
    fn pure_power_examples() {
        let f2 = Integrand::pure_power(2.0, 1.0).unwrap();
        assert_eq!(f2.evaluate(Region::Volume, &SymMatrix::zero(2)), 0.0);
        assert_eq!(f2.evaluate(Region::Volume, &SymMatrix::diag(2, &[1.0, 0.0])), 1.0);

        let f1 = Integrand::pure_power(1.0, 1.0).unwrap();
        let e1 = Vector::basis(2, 0);
        let e2 = Vector::basis(2, 1);
        let a = sym_product(&e1, &e2).unwrap();
        let expected = 1.0 / 2f64.sqrt(); // |e1 ⊙ e2|_F = sqrt(2 * 1/4)
        assert!((f1.evaluate(Region::Volume, &a) - expected).abs() < 1e-15);
    }

    #[test]
    fn coords_round_trip_preserves_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let n = if rng.gen_bool(0.5) { 2 } else { 3 };
            let a = rand_sym(n, &mut rng);
            let x = sym_coords(&a);
            let norm: f64 = x.iter().map(|v| v * v).sum::<f64>();
            assert!((norm - a.frobenius_sq()).abs() < 1e-12);
            let b = sym_from_coords(n, &x);
            assert!(a.sub(&b).frobenius() < 1e-14);
        }
    }

    #[test]
    fn growth_check_pure_power_is_tight() {
        let f = Integrand::pure_power(2.0, 1.0).unwrap();
        let r = growth_check(&f, 2, 500, 1).unwrap();
        assert!(r.pass);
        assert!((r.min_lower_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn growth_check_eigenvalue_bracketing() {
        // Diagonal coefficient matrix with eigenvalues {0.5, 1.0, 2.0}:
        // alpha = 0.5 and beta = 2 must pass, tighter constants must fail.
        let c = vec![
            vec![0.5, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 2.0],
        ];
        let f = Integrand::quadratic(c.clone(), 0.5, 2.0).unwrap();
        let r = growth_check(&f, 2, 2000, 9).unwrap();
        assert!(r.pass, "ratios {:?}", (r.min_lower_ratio, r.max_upper_ratio));
        assert!(r.min_lower_ratio >= 0.5 - 1e-12);
        assert!(r.max_upper_ratio <= 2.0 + 1e-12);

        let tight = Integrand::quadratic(c, 0.8, 2.0).unwrap();
        let r = growth_check(&tight, 2, 2000, 9).unwrap();
        assert!(!r.pass);
    }

    #[test]
    fn growth_check_zero_eigenvalue_fails_lower_bound() {
        let c = vec![
            vec![0.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        let f = Integrand::quadratic(c, 0.5, 1.0).unwrap();
        let r = growth_check(&f, 2, 500, 4).unwrap();
        assert!(!r.pass);
    }

    #[test]
    fn quadratic_rejects_negative_eigenvalue() {
        let c = vec![
            vec![-0.1, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        assert!(Integrand::quadratic(c, 0.5, 1.0).is_err());
    }

    #[test]
    fn recession_examples() {
        let ladder = default_ladder();
        let f2 = Integrand::pure_power(2.0, 1.0).unwrap();
        assert_eq!(
            recession_estimate(&f2, Region::Volume, &SymMatrix::zero(2), &ladder).unwrap(),
            Recession::Finite(0.0)
        );
        let xi = SymMatrix::diag(2, &[1.0, -0.5]);
        assert_eq!(
            recession_estimate(&f2, Region::Volume, &xi, &ladder).unwrap(),
            Recession::Divergent
        );

        // positively 1-homogeneous density equals its own recession
        let f1 = Integrand::pure_power(1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let xi = rand_sym(3, &mut rng);
            match recession_estimate(&f1, Region::Volume, &xi, &ladder).unwrap() {
                Recession::Finite(v) => {
                    assert!((v - f1.evaluate(Region::Volume, &xi)).abs() < 1e-9)
                }
                Recession::Divergent => panic!("1-homogeneous density flagged divergent"),
            }
        }
    }

    #[test]
    fn midpoint_convexity() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let c = vec![
            vec![1.5, 0.2, 0.0],
            vec![0.2, 1.0, -0.1],
            vec![0.0, -0.1, 0.7],
        ];
        let densities = vec![
            Integrand::pure_power(2.0, 1.0).unwrap(),
            Integrand::pure_power(1.0, 1.0).unwrap(),
            Integrand::pure_power(1.5, 0.7).unwrap(),
            Integrand::quadratic(c, 0.1, 3.0).unwrap(),
        ];
        for f in &densities {
            for _ in 0..1000 {
                let a = rand_sym(2, &mut rng);
                let b = rand_sym(2, &mut rng);
                let mid = a.add(&b).scale(0.5);
                let lhs = f.evaluate(Region::Volume, &mid);
                let rhs = 0.5 * f.evaluate(Region::Volume, &a) + 0.5 * f.evaluate(Region::Volume, &b);
                assert!(lhs <= rhs + 1e-12);
            }
        }
    }

    #[test]
    fn pure_power_homogeneity() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for &p in &[1.0, 1.5, 2.0, 3.0] {
            let f = Integrand::pure_power(p, 1.3).unwrap();
            for _ in 0..200 {
                let a = rand_sym(3, &mut rng);
                let t: f64 = rng.gen_range(0.1..10.0);
                let lhs = f.evaluate(Region::Volume, &a.scale(t));
                let rhs = t.powf(p) * f.evaluate(Region::Volume, &a);
                assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let c = vec![
            vec![1.5, 0.2, 0.0],
            vec![0.2, 1.0, -0.1],
            vec![0.0, -0.1, 0.7],
        ];
        let densities = vec![
            Integrand::pure_power(2.0, 1.0).unwrap(),
            Integrand::pure_power(3.0, 0.5).unwrap(),
            Integrand::quadratic(c, 0.1, 3.0).unwrap(),
        ];
        for f in &densities {
            for _ in 0..20 {
                let a = rand_sym(2, &mut rng);
                let (_, g) = f.eval_grad(Region::Volume, &a, None);
                let d = sym_dim(2);
                let x0 = sym_coords(&a);
                let gx = sym_coords(&g);
                let h = 1e-6;
                for i in 0..d {
                    let mut xp = x0.clone();
                    let mut xm = x0.clone();
                    xp[i] += h;
                    xm[i] -= h;
                    let fd = (f.evaluate(Region::Volume, &sym_from_coords(2, &xp))
                        - f.evaluate(Region::Volume, &sym_from_coords(2, &xm)))
                        / (2.0 * h);
                    assert!((fd - gx[i]).abs() < 1e-5 * (1.0 + gx[i].abs()));
                }
            }
        }
    }
}
