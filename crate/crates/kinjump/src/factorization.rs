//! Canonical solution of the homogeneous Riemann-Hilbert problem on (0, alpha).
//!
//! With theta(mu) = arg lambda+(mu) anchored at 0 and winding exactly 2 pi,
//!
//!   X(z) = z^{-2} exp V(z),
//!   V(z) = (1/pi) int_0^alpha (theta(mu) - 2 pi) / (mu - z) dmu,
//!
//! satisfies X+/X- = lambda+/lambda- on the cut and stays bounded and
//! non-vanishing at both z = 0 and z = alpha (the -2 pi shift cancels the
//! z^{-2} growth at the origin; the density vanishes at alpha). The large-z
//! coefficients V_n of V and the reciprocal-expansion coefficients V_n* of
//! exp(-V) feed the Laurent matching downstream.
//!
//! The upper limit of the V_n integrals is alpha: theta lives on (0, alpha)
//! and the density (theta - 2 pi) vanishes there, so the printed infinite
//! upper limit can only be a slip; the large-z fit oracle confirms the
//! alpha-limited moments reproduce V(z).

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::dispersion::{cut_point, MatrixVariant, ThetaTable};
use crate::error::{Error, Result};
use crate::model::GasModel;
use crate::quadrature::CutGrid;

/// Everything the half-range integrals need at one quadrature node of
/// (0, alpha), sampled once at construction.
#[derive(Debug, Clone, Copy)]
pub struct CutNode {
    pub eta: f64,
    pub weight: f64,
    /// Continuous argument of lambda+ (branch fixed by the theta table).
    pub theta: f64,
    /// Principal-value boundary value of V.
    pub v_pv: f64,
    /// exp(-v_pv), cached for the jump-density weight.
    pub exp_neg_v: f64,
    pub rho: f64,
    pub c: f64,
    pub lam_pv: f64,
    pub lam_plus_abs: f64,
    pub minors: [f64; 3],
    /// q_tilde(eta, eta).
    pub q_diag: f64,
}

/// The factorization data for one slope value: theta table, per-node caches
/// on the half-range grid, and the asymptotic moments.
#[derive(Debug, Clone)]
pub struct Factorization {
    a: f64,
    alpha: f64,
    theta: ThetaTable,
    grid: CutGrid,
    nodes: Vec<CutNode>,
    v1: f64,
    v2: f64,
    v3: f64,
    v1s: f64,
    v2s: f64,
    v3s: f64,
}

impl Factorization {
    /// Sample the cut once and freeze moments.
    ///
    /// `full_grid` is the symmetric rule the t-moments integrate over;
    /// `half_grid` is the rule on (0, alpha) carrying all factorization
    /// integrals.
    pub fn new(
        model: &GasModel,
        full_grid: &CutGrid,
        half_grid: CutGrid,
        theta: ThetaTable,
        variant: MatrixVariant,
    ) -> Result<Self> {
        let a = model.a();
        let alpha = model.alpha();
        let density = |tau: f64| (theta.theta_at(tau) - 2.0 * PI) / PI;
        let mut nodes = Vec::with_capacity(half_grid.nodes().len());
        for (&eta, &weight) in half_grid.nodes().iter().zip(half_grid.weights()) {
            let d = cut_point(model, full_grid, eta, variant)?;
            let raw = d.lam_plus.arg();
            let guess = theta.theta_at(eta);
            let theta_exact = raw + 2.0 * PI * ((guess - raw) / (2.0 * PI)).round();
            let v_pv = half_grid.principal_value(density, eta)?;
            if d.lam_plus.norm() < 1e-12 {
                return Err(Error::SingularWeight {
                    eta,
                    magnitude: d.lam_plus.norm(),
                });
            }
            nodes.push(CutNode {
                eta,
                weight,
                theta: theta_exact,
                v_pv,
                exp_neg_v: (-v_pv).exp(),
                rho: d.rho,
                c: d.c,
                lam_pv: d.lam_pv,
                lam_plus_abs: d.lam_plus.norm(),
                minors: d.minors,
                q_diag: d.q_diag,
            });
        }
        // V_n = -(1/pi) int_0^alpha tau^{n-1} (theta - 2 pi) dtau, n = 1, 2, 3.
        let mut v = [0.0; 3];
        for node in &nodes {
            let density = node.theta - 2.0 * PI;
            let mut p = 1.0;
            for vn in v.iter_mut() {
                *vn -= node.weight * p * density / PI;
                p *= node.eta;
            }
        }
        let (v1s, v2s, v3s) = v_star(v[0], v[1], v[2]);
        Ok(Self {
            a,
            alpha,
            theta,
            grid: half_grid,
            nodes,
            v1: v[0],
            v2: v[1],
            v3: v[2],
            v1s,
            v2s,
            v3s,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn theta_table(&self) -> &ThetaTable {
        &self.theta
    }

    pub fn half_grid(&self) -> &CutGrid {
        &self.grid
    }

    pub fn cut_nodes(&self) -> &[CutNode] {
        &self.nodes
    }

    /// Large-z moments (V1, V2, V3) of V(z).
    pub fn v_moments(&self) -> (f64, f64, f64) {
        (self.v1, self.v2, self.v3)
    }

    /// Reciprocal-expansion coefficients (V1*, V2*, V3*) of exp(-V).
    pub fn v_star_moments(&self) -> (f64, f64, f64) {
        (self.v1s, self.v2s, self.v3s)
    }

    /// Density of the V integral, (theta(tau) - 2 pi)/pi, off the table.
    pub fn v_density(&self, tau: f64) -> f64 {
        (self.theta.theta_at(tau) - 2.0 * PI) / PI
    }

    /// V(z) for z off [0, alpha].
    pub fn v_of_z(&self, z: Complex64) -> Result<Complex64> {
        self.grid.cauchy_integral(|tau| self.v_density(tau), z)
    }

    /// Principal-value boundary value V(mu), mu in (0, alpha).
    pub fn v_pv(&self, mu: f64) -> Result<f64> {
        self.grid.principal_value(|tau| self.v_density(tau), mu)
    }

    /// One-sided boundary values V(mu +- i0) = V(mu) +- i (theta(mu) - 2 pi).
    pub fn v_boundary(&self, mu: f64, above: bool) -> Result<Complex64> {
        let pv = self.v_pv(mu)?;
        let im = self.theta.theta_at(mu) - 2.0 * PI;
        Ok(Complex64::new(pv, if above { im } else { -im }))
    }

    /// Canonical solution X(z) = z^{-2} exp V(z).
    pub fn x_of_z(&self, z: Complex64) -> Result<Complex64> {
        if z.norm() == 0.0 {
            return Err(Error::Domain("X(z) is not defined at z = 0".into()));
        }
        Ok(self.v_of_z(z)?.exp() / (z * z))
    }

    /// Boundary values X(mu +- i0) on (0, alpha).
    pub fn x_boundary(&self, mu: f64, above: bool) -> Result<Complex64> {
        Ok(self.v_boundary(mu, above)?.exp() / (mu * mu))
    }

    /// The jump of the reciprocal, 1/X+ - 1/X-, in closed form:
    /// -2 i mu^2 exp(-V(mu)) sin(theta - 2 pi).
    ///
    /// sin is evaluated at theta - 2 pi to keep relative accuracy where
    /// theta approaches the full winding.
    pub fn x_reciprocal_jump(&self, mu: f64) -> Result<Complex64> {
        let v = self.v_pv(mu)?;
        let shifted = self.theta.theta_at(mu) - 2.0 * PI;
        Ok(Complex64::new(0.0, -2.0 * mu * mu * (-v).exp() * shifted.sin()))
    }

    /// Same jump evaluated the pedestrian way, as the difference of the
    /// reciprocal boundary values; the second code path for the tests.
    pub fn x_reciprocal_jump_direct(&self, mu: f64) -> Result<Complex64> {
        let xp = self.x_boundary(mu, true)?;
        let xm = self.x_boundary(mu, false)?;
        Ok(1.0 / xp - 1.0 / xm)
    }
}

/// Reciprocal-expansion coefficients from the direct moments:
/// V1* = -V1, V2* = -V2 + V1^2/2, V3* = -V3 + V1 V2 - V1^3/6.
pub fn v_star(v1: f64, v2: f64, v3: f64) -> (f64, f64, f64) {
    (
        -v1,
        -v2 + 0.5 * v1 * v1,
        -v3 + v1 * v2 - v1 * v1 * v1 / 6.0,
    )
}

/// V_n moments of an arbitrary density (theta - 2 pi)/..; used by tests that
/// need a synthetic theta.
pub fn v_moments_of_density(grid: &CutGrid, mut theta: impl FnMut(f64) -> f64) -> (f64, f64, f64) {
    let mut v = [0.0; 3];
    for (&tau, &w) in grid.nodes().iter().zip(grid.weights()) {
        let density = theta(tau) - 2.0 * PI;
        let mut p = 1.0;
        for vn in v.iter_mut() {
            *vn -= w * p * density / PI;
            p *= tau;
        }
    }
    (v[0], v[1], v[2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::{lambda_boundary, theta_table, Side};
    use crate::quadrature::build_grid;
    use approx::assert_abs_diff_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn setup(a: f64) -> (GasModel, CutGrid, Factorization) {
        let m = GasModel::new(a).unwrap();
        let full = build_grid(m.alpha(), 48, 12).unwrap();
        let half = CutGrid::half_range(m.alpha(), 24, 12).unwrap();
        let table = theta_table(&m, &full, 600, MatrixVariant::Derived).unwrap();
        let f = Factorization::new(&m, &full, half, table, MatrixVariant::Derived).unwrap();
        (m, full, f)
    }

    #[test]
    fn v_decays_at_infinity() {
        let (_, _, f) = setup(1.0);
        let v = f.v_of_z(Complex64::new(-1e6, 0.0)).unwrap();
        assert!(v.norm() < 1e-5);
        // Leading coefficient: z V(z) -> V1.
        let (v1, _, _) = f.v_moments();
        assert_abs_diff_eq!((v * (-1e6)).re, v1, epsilon = 1e-4 * (1.0 + v1.abs()));
    }

    #[test]
    fn v_schwarz_symmetry() {
        let (_, _, f) = setup(1.0);
        let z = Complex64::new(0.4, 0.7);
        let v = f.v_of_z(z).unwrap();
        let vc = f.v_of_z(z.conj()).unwrap();
        assert!((vc - v.conj()).norm() < 1e-14);
    }

    #[test]
    fn v_boundary_jump_matches_contour_shift() {
        let (_, _, f) = setup(1.0);
        let mu = 0.5;
        let delta = 1e-7;
        let up = f.v_of_z(Complex64::new(mu, delta)).unwrap();
        let dn = f.v_of_z(Complex64::new(mu, -delta)).unwrap();
        let jump = up - dn;
        let expected = Complex64::new(0.0, 2.0 * (f.theta_table().theta_at(mu) - 2.0 * PI));
        assert!(
            (jump - expected).norm() < 1e-5,
            "jump {jump} vs {expected}"
        );
        // And the half-sum approaches the PV value.
        let pv = f.v_pv(mu).unwrap();
        assert_abs_diff_eq!((0.5 * (up + dn)).re, pv, epsilon = 1e-5);
    }

    #[test]
    fn x_has_unit_z_squared_limit() {
        let (_, _, f) = setup(1.0);
        for z in [Complex64::new(-1e4, 0.0), Complex64::new(3e3, 4e3)] {
            let x = f.x_of_z(z).unwrap();
            let scaled = x * z * z;
            assert!((scaled - 1.0).norm() < 1e-3, "z^2 X = {scaled} at z = {z}");
        }
    }

    #[test]
    fn factorization_solves_the_homogeneous_problem() {
        let (m, full, f) = setup(1.0);
        for mu in [0.1, 0.3, 0.62, 0.9] {
            let xr = f.x_boundary(mu, true).unwrap() / f.x_boundary(mu, false).unwrap();
            let lr = lambda_boundary(&m, &full, mu, Side::Above, MatrixVariant::Derived).unwrap()
                / lambda_boundary(&m, &full, mu, Side::Below, MatrixVariant::Derived).unwrap();
            assert!(
                (xr - lr).norm() < 1e-6,
                "X+/X- = {xr}, lambda+/lambda- = {lr} at mu = {mu}"
            );
            // Two-path: the ratio is exp(2 i theta) exactly.
            let phase = Complex64::new(0.0, 2.0 * f.theta_table().theta_at(mu)).exp();
            assert!((xr - phase).norm() < 1e-9);
        }
    }

    #[test]
    fn x_bounded_nonzero_at_both_endpoints() {
        let (_, _, f) = setup(1.0);
        let alpha = f.alpha();
        // Approach alpha from the right along the real axis.
        let mut prev: Option<f64> = None;
        for k in 1..=12 {
            let delta = 0.1 * 0.5f64.powi(k - 1);
            if delta < 1e-4 {
                break;
            }
            let x = f
                .x_of_z(Complex64::new(alpha + delta, 0.0))
                .unwrap()
                .norm();
            assert!(x.is_finite() && x > 0.0);
            if let Some(p) = prev {
                assert!(x / p < 2.0 && p / x < 2.0, "blow-up trend near alpha");
            }
            prev = Some(x);
        }
        // Approach 0 from the left (off the cut [0, alpha]).
        let near = f.x_of_z(Complex64::new(-1e-3, 0.0)).unwrap().norm();
        let nearer = f.x_of_z(Complex64::new(-1e-5, 0.0)).unwrap().norm();
        assert!(near.is_finite() && nearer.is_finite());
        assert!(nearer / near < 10.0 && near / nearer < 10.0);
    }

    #[test]
    fn v_moments_match_large_z_fits() {
        let (_, _, f) = setup(1.0);
        let (v1, v2, v3) = f.v_moments();
        // Fit z V(z) = V1 + V2/z + V3/z^2 + V4/z^3 at four real points.
        let zs = [-100.0, -300.0, -1000.0, -3000.0];
        let mut mat = [[0.0f64; 4]; 4];
        let mut rhs = [0.0f64; 4];
        for (i, &z) in zs.iter().enumerate() {
            let u = 1.0 / z;
            mat[i] = [1.0, u, u * u, u * u * u];
            rhs[i] = (f.v_of_z(Complex64::new(z, 0.0)).unwrap() * z).re;
        }
        let fit = solve4(mat, rhs);
        assert!(
            (fit[0] - v1).abs() < 1e-5 * (1.0 + v1.abs()),
            "V1 fit {} vs {}",
            fit[0],
            v1
        );
        assert!(
            (fit[1] - v2).abs() < 1e-5 * (1.0 + v2.abs()),
            "V2 fit {} vs {}",
            fit[1],
            v2
        );
        assert!(
            (fit[2] - v3).abs() < 1e-4 * (1.0 + v3.abs()),
            "V3 fit {} vs {}",
            fit[2],
            v3
        );
    }

    fn solve4(mut m: [[f64; 4]; 4], mut b: [f64; 4]) -> [f64; 4] {
        for col in 0..4 {
            let piv = (col..4).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
            m.swap(col, piv);
            b.swap(col, piv);
            for row in col + 1..4 {
                let f = m[row][col] / m[col][col];
                for k in col..4 {
                    m[row][k] -= f * m[col][k];
                }
                b[row] -= f * b[col];
            }
        }
        let mut x = [0.0; 4];
        for row in (0..4).rev() {
            let mut s = b[row];
            for k in row + 1..4 {
                s -= m[row][k] * x[k];
            }
            x[row] = s / m[row][row];
        }
        x
    }

    #[test]
    fn star_coefficients_closed_cases() {
        assert_eq!(v_star(0.0, 0.0, 0.0), (0.0, 0.0, 0.0));
        let (s1, s2, s3) = v_star(1.0, 0.0, 0.0);
        assert_abs_diff_eq!(s1, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s2, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s3, -1.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn star_coefficients_invert_the_exponential_series() {
        // (1 + V1*/z + V2*/z^2 + V3*/z^3) * exp(V1/z + V2/z^2 + V3/z^3)
        // = 1 + O(z^{-4}) as formal series.
        let mut rng = StdRng::seed_from_u64(99);
        for _ in 0..50 {
            let v1 = rng.gen_range(-2.0..2.0);
            let v2 = rng.gen_range(-2.0..2.0);
            let v3 = rng.gen_range(-2.0..2.0);
            let (s1, s2, s3) = v_star(v1, v2, v3);
            // exp series coefficients up to z^{-3}.
            let e1 = v1;
            let e2 = v2 + 0.5 * v1 * v1;
            let e3 = v3 + v1 * v2 + v1 * v1 * v1 / 6.0;
            // Product coefficients 1..3 must vanish.
            let p1 = e1 + s1;
            let p2 = e2 + s1 * e1 + s2;
            let p3 = e3 + s1 * e2 + s2 * e1 + s3;
            assert_abs_diff_eq!(p1, 0.0, epsilon = 1e-13);
            assert_abs_diff_eq!(p2, 0.0, epsilon = 1e-13);
            assert_abs_diff_eq!(p3, 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn zero_density_gives_zero_moments() {
        let grid = CutGrid::half_range(1.0, 16, 8).unwrap();
        let (v1, v2, v3) = v_moments_of_density(&grid, |_| 2.0 * PI);
        assert_eq!((v1, v2, v3), (0.0, 0.0, 0.0));
    }

    #[test]
    fn reciprocal_jump_two_paths() {
        let (_, _, f) = setup(1.0);
        for mu in [0.2, 0.5, 0.8] {
            let closed = f.x_reciprocal_jump(mu).unwrap();
            let direct = f.x_reciprocal_jump_direct(mu).unwrap();
            assert!(
                (closed - direct).norm() <= 1e-8 * (1.0 + closed.norm()),
                "closed {closed} vs direct {direct} at mu = {mu}"
            );
            // (1/X+ - 1/X-)/(2 pi i) is real.
            assert_eq!(closed.re, 0.0);
        }
    }

    #[test]
    fn reciprocal_jump_vanishes_at_sine_zeros() {
        // theta crosses pi somewhere inside; bisect for it on the table.
        let (_, _, f) = setup(1.0);
        let (etas, thetas) = {
            let (e, t) = f.theta_table().samples();
            (e.to_vec(), t.to_vec())
        };
        let mut crossing = None;
        for i in 0..thetas.len() - 1 {
            if (thetas[i] - PI) * (thetas[i + 1] - PI) < 0.0 {
                let mut lo = etas[i];
                let mut hi = etas[i + 1];
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if (f.theta_table().theta_at(mid) - PI)
                        * (f.theta_table().theta_at(lo) - PI)
                        <= 0.0
                    {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                crossing = Some(0.5 * (lo + hi));
                break;
            }
        }
        let mu0 = crossing.expect("theta must cross pi on its way to 2 pi");
        let at_crossing = f.x_reciprocal_jump(mu0).unwrap().norm();
        let nearby = f.x_reciprocal_jump(mu0 + 0.05).unwrap().norm();
        assert!(
            at_crossing < 1e-8 * nearby.max(1e-300),
            "jump {at_crossing:e} does not vanish at sin theta = 0 (nearby {nearby:e})"
        );
    }
}
