//! Spectral machinery of the characteristic equation.
//!
//! The separation ansatz h = exp(-x/eta) Phi(eta, mu) reduces the kinetic
//! equation to a 3x3 linear system for the moments of Phi. This module
//! builds the Cauchy-type moments t_n, the dispersion matrix, its
//! determinant lambda(z) (two independent evaluation paths), the boundary
//! values lambda+/- on the cut with their jump identity, the reduced kernel
//! q_tilde with its Cramer minors, the continuous-spectrum eigenfunctions,
//! and the continuous argument theta(mu) = arg lambda+(mu) anchored at 0.
//!
//! The printed source for the matrix elements carries two internal
//! inconsistencies (the (1,1) bracket and the (2,2) moment index). The
//! default [`MatrixVariant::Derived`] restores the row structure implied by
//! the moment system itself; [`MatrixVariant::Printed`] keeps the published
//! elements. The jump identity
//!
//!   lambda+ - lambda- = 2 pi i eta rho(eta) q_tilde(eta, eta)
//!
//! holds exactly for the derived variant (the matrix jump is rank one) and
//! fails for the printed one, which is how the variant question is settled
//! machine-checkably; see the acceptance suite.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::GasModel;
use crate::quadrature::CutGrid;
use crate::spline::CubicSpline;

/// Which set of dispersion-matrix elements to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatrixVariant {
    /// Row structure implied by the moment system (default).
    #[default]
    Derived,
    /// Elements exactly as published, kept for the adjudication tests.
    Printed,
}

/// Side of the cut for boundary values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Above,
    Below,
}

/// Where a dispersion sample was taken.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplePoint {
    /// Off the cut.
    Complex(Complex64),
    /// On the cut, principal-value sense.
    PrincipalValue(f64),
    /// On the cut, one-sided boundary value.
    Boundary(f64, Side),
}

/// Moments, matrix, determinant and Cramer minors at one point.
#[derive(Debug, Clone)]
pub struct DispersionSample {
    pub point: SamplePoint,
    pub t: [Complex64; 5],
    pub lam: [[Complex64; 3]; 3],
    /// Determinant via the explicit six-term expansion.
    pub lam_det: Complex64,
    /// Cramer minors (Lambda_0, Lambda_1, Lambda_2).
    pub minors: [Complex64; 3],
}

/// Closed-form limits m_n = int C^n rho dmu (t_n(z) -> -m_n as |z| -> inf).
pub fn moment_limits(model: &GasModel) -> [f64; 5] {
    let a = model.a();
    let sp = crate::model::SQRT_PI;
    [sp + a, 0.0, 0.5 * sp + a, 0.0, 0.75 * sp + 2.0 * a]
}

/// The five Cauchy moments t_n(z) = z int C^n(mu) rho(mu)/(mu - z) dmu for
/// z off the cut (or real beyond it, where the integral has no pole).
pub fn t_moments_complex(model: &GasModel, grid: &CutGrid, z: Complex64) -> Result<[Complex64; 5]> {
    if z.im == 0.0 && z.re > grid.lo() && z.re < grid.hi() {
        return Err(Error::Domain(format!(
            "t-moments at z = {} on the cut need PV or boundary semantics",
            z.re
        )));
    }
    let mut acc = [Complex64::new(0.0, 0.0); 5];
    for (&mu, &w) in grid.nodes().iter().zip(grid.weights()) {
        let rho = model.weight_rho(mu);
        let c = model.c_unchecked(mu);
        let base = Complex64::new(w, 0.0) / (Complex64::new(mu, 0.0) - z);
        let mut p = rho;
        for t in acc.iter_mut() {
            *t += base * p;
            p *= c;
        }
    }
    for t in acc.iter_mut() {
        *t *= z;
    }
    Ok(acc)
}

/// Principal-value t-moments at eta strictly inside the cut.
///
/// All five moments share one pass over the grid; this is the hot kernel
/// behind the theta table, so the subtraction rule is inlined here rather
/// than routed through [`CutGrid::principal_value`] five times.
pub fn t_moments_pv(model: &GasModel, grid: &CutGrid, eta: f64) -> Result<[f64; 5]> {
    let (lo, hi) = (grid.lo(), grid.hi());
    if !(eta > lo && eta < hi) {
        return Err(Error::Domain(format!(
            "PV t-moments need eta strictly inside ({lo}, {hi}), got {eta}"
        )));
    }
    let span = hi - lo;
    let guard = 1e-7 * span;
    let f_at = |mu: f64| -> [f64; 5] {
        let rho = model.weight_rho(mu);
        let c = model.c_unchecked(mu);
        let mut out = [0.0; 5];
        let mut p = rho;
        for o in out.iter_mut() {
            *o = p;
            p *= c;
        }
        out
    };
    let f_pole = f_at(eta);
    let h = (1e-6 * span).min(0.5 * (eta - lo).min(hi - eta));
    let f_up = f_at(eta + h);
    let f_dn = f_at(eta - h);
    let mut deriv = [0.0; 5];
    for n in 0..5 {
        deriv[n] = (f_up[n] - f_dn[n]) / (2.0 * h);
    }
    let mut acc = [0.0; 5];
    for (&mu, &w) in grid.nodes().iter().zip(grid.weights()) {
        let d = mu - eta;
        let f = f_at(mu);
        if d.abs() < guard {
            for n in 0..5 {
                acc[n] += w * deriv[n];
            }
        } else {
            for n in 0..5 {
                acc[n] += w * (f[n] - f_pole[n]) / d;
            }
        }
    }
    let log_term = ((hi - eta) / (eta - lo)).ln();
    let mut out = [0.0; 5];
    for n in 0..5 {
        out[n] = eta * (acc[n] + f_pole[n] * log_term);
    }
    Ok(out)
}

/// One-sided boundary values t_n(eta +- i0) = t_n(eta) +- i pi eta C^n rho.
pub fn t_moments_boundary(
    model: &GasModel,
    grid: &CutGrid,
    eta: f64,
    side: Side,
) -> Result<[Complex64; 5]> {
    let pv = t_moments_pv(model, grid, eta)?;
    let sign = match side {
        Side::Above => 1.0,
        Side::Below => -1.0,
    };
    let rho = model.weight_rho(eta);
    let c = model.c_unchecked(eta);
    let mut out = [Complex64::new(0.0, 0.0); 5];
    let mut p = rho;
    for n in 0..5 {
        out[n] = Complex64::new(pv[n], sign * PI * eta * p);
        p *= c;
    }
    Ok(out)
}

/// Assemble the 3x3 dispersion matrix from the five moments.
pub fn lambda_matrix(
    model: &GasModel,
    t: &[Complex64; 5],
    variant: MatrixVariant,
) -> [[Complex64; 3]; 3] {
    let (r0, r1, r2, beta) = model.kernel_coeffs();
    let one = Complex64::new(1.0, 0.0);
    let col0 = |lo: Complex64, hi: Complex64, bracket: f64| lo * bracket - hi * (beta * r2);
    let bracket11 = match variant {
        MatrixVariant::Derived => r0 + beta * beta * r2,
        MatrixVariant::Printed => r2 + beta * beta * r2,
    };
    let l22 = match variant {
        MatrixVariant::Derived => one + t[2] * r1,
        MatrixVariant::Printed => one + t[3] * r1,
    };
    [
        [
            one + col0(t[0], t[2], bracket11),
            t[1] * r1,
            (t[2] - t[0] * beta) * r2,
        ],
        [
            // Rows below the first keep the bracket r0 + beta^2 r2 in both
            // variants; only the published (1,1) entry deviates.
            col0(t[1], t[3], r0 + beta * beta * r2),
            l22,
            (t[3] - t[1] * beta) * r2,
        ],
        [
            col0(t[2], t[4], r0 + beta * beta * r2),
            t[3] * r1,
            one + (t[4] - t[2] * beta) * r2,
        ],
    ]
}

/// Generic cofactor-expansion determinant.
pub fn det3(m: &[[Complex64; 3]; 3]) -> Complex64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// The published six-term expansion of the determinant, which spells the
/// (1,2) and (3,2) entries as r1 t1 and r1 t3. Algebraically identical to
/// [`det3`]; kept as the second evaluation path.
pub fn lambda_det_six_term(
    model: &GasModel,
    t: &[Complex64; 5],
    m: &[[Complex64; 3]; 3],
) -> Complex64 {
    let r1 = model.r1();
    let r1t1 = t[1] * r1;
    let r1t3 = t[3] * r1;
    m[0][0] * m[1][1] * m[2][2] + r1t3 * m[0][2] * m[1][0] + r1t1 * m[2][0] * m[1][2]
        - m[0][2] * m[1][1] * m[2][0]
        - r1t3 * m[0][0] * m[1][2]
        - r1t1 * m[1][0] * m[2][2]
}

/// Cramer minors: Lambda_alpha is the determinant of the dispersion matrix
/// with column alpha replaced by (1, C, C^2)^T, expanded along that column.
pub fn cramer_minors(m: &[[Complex64; 3]; 3], c: Complex64) -> [Complex64; 3] {
    let c2 = c * c;
    let minor = |r0: usize, r1: usize, c0: usize, c1: usize| {
        m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]
    };
    [
        minor(1, 2, 1, 2) - c * minor(0, 2, 1, 2) + c2 * minor(0, 1, 1, 2),
        -(minor(1, 2, 0, 2) - c * minor(0, 2, 0, 2) + c2 * minor(0, 1, 0, 2)),
        minor(1, 2, 0, 1) - c * minor(0, 2, 0, 1) + c2 * minor(0, 1, 0, 1),
    ]
}

/// Solve the 3x3 system m x = rhs by Gaussian elimination with partial
/// pivoting; the independent path behind the Cramer cross-check.
pub fn solve3(m: &[[Complex64; 3]; 3], rhs: &[Complex64; 3]) -> Result<[Complex64; 3]> {
    let mut a = *m;
    let mut b = *rhs;
    for col in 0..3 {
        let mut piv = col;
        for row in col + 1..3 {
            if a[row][col].norm() > a[piv][col].norm() {
                piv = row;
            }
        }
        if a[piv][col].norm() < 1e-300 {
            return Err(Error::Domain("singular 3x3 system".into()));
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                let sub = f * a[col][k];
                a[row][k] -= sub;
            }
            let sub = f * b[col];
            b[row] -= sub;
        }
    }
    let mut x = [Complex64::new(0.0, 0.0); 3];
    for row in (0..3).rev() {
        let mut s = b[row];
        for k in row + 1..3 {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    Ok(x)
}

impl DispersionSample {
    /// Sample everything at one point.
    pub fn at(
        model: &GasModel,
        grid: &CutGrid,
        point: SamplePoint,
        variant: MatrixVariant,
    ) -> Result<Self> {
        let (t, c) = match point {
            SamplePoint::Complex(z) => (
                t_moments_complex(model, grid, z)?,
                z / (Complex64::new(1.0, 0.0) - z * model.a()),
            ),
            SamplePoint::PrincipalValue(eta) => {
                let pv = t_moments_pv(model, grid, eta)?;
                let mut t = [Complex64::new(0.0, 0.0); 5];
                for (o, v) in t.iter_mut().zip(pv) {
                    *o = Complex64::new(v, 0.0);
                }
                (t, Complex64::new(model.c_of_mu(eta)?, 0.0))
            }
            SamplePoint::Boundary(eta, side) => (
                t_moments_boundary(model, grid, eta, side)?,
                Complex64::new(model.c_of_mu(eta)?, 0.0),
            ),
        };
        let lam = lambda_matrix(model, &t, variant);
        let lam_det = lambda_det_six_term(model, &t, &lam);
        let minors = cramer_minors(&lam, c);
        Ok(Self {
            point,
            t,
            lam,
            lam_det,
            minors,
        })
    }

    /// Minors as reals; valid for PV samples where everything stays real.
    pub fn real_minors(&self) -> [f64; 3] {
        [self.minors[0].re, self.minors[1].re, self.minors[2].re]
    }
}

/// Dispersion function lambda(z) = det Lambda(z) off the cut.
pub fn lambda_det(
    model: &GasModel,
    grid: &CutGrid,
    z: Complex64,
    variant: MatrixVariant,
) -> Result<Complex64> {
    let s = DispersionSample::at(model, grid, SamplePoint::Complex(z), variant)?;
    Ok(s.lam_det)
}

fn check_interior(model: &GasModel, eta: f64) -> Result<()> {
    let alpha = model.alpha();
    let guard = 1e-9 * alpha;
    if !(eta >= guard && eta <= alpha - guard) {
        return Err(Error::Domain(format!(
            "eta = {eta} within the endpoint guard band of (0, {alpha})"
        )));
    }
    Ok(())
}

/// One-sided boundary value of the dispersion function on (0, alpha).
pub fn lambda_boundary(
    model: &GasModel,
    grid: &CutGrid,
    eta: f64,
    side: Side,
    variant: MatrixVariant,
) -> Result<Complex64> {
    check_interior(model, eta)?;
    let s = DispersionSample::at(model, grid, SamplePoint::Boundary(eta, side), variant)?;
    Ok(s.lam_det)
}

/// Reduced kernel q_tilde(eta, mu) built from the Cramer minors at eta
/// (principal-value sense on the cut) and evaluated at velocity C(mu).
pub fn q_tilde(
    model: &GasModel,
    grid: &CutGrid,
    eta: f64,
    mu: f64,
    variant: MatrixVariant,
) -> Result<f64> {
    let s = DispersionSample::at(model, grid, SamplePoint::PrincipalValue(eta), variant)?;
    let c_mu = model.c_of_mu(mu)?;
    Ok(q_tilde_from_minors(model, &s.real_minors(), c_mu))
}

/// q_tilde from precomputed minors:
/// r0 L0 + r1 C(mu) L1 + r2 (C^2(mu) - beta)(L2 - beta L0).
pub fn q_tilde_from_minors(model: &GasModel, minors: &[f64; 3], c_mu: f64) -> f64 {
    let (r0, r1, r2, beta) = model.kernel_coeffs();
    r0 * minors[0]
        + r1 * c_mu * minors[1]
        + r2 * (c_mu * c_mu - beta) * (minors[2] - beta * minors[0])
}

/// Continuous-spectrum eigenfunction at (eta, mu): the principal-value
/// density together with the delta-function weight (identically 1 with the
/// normalization g = 1).
pub fn eigenfunction(
    model: &GasModel,
    grid: &CutGrid,
    eta: f64,
    mu: f64,
    variant: MatrixVariant,
) -> Result<(f64, f64)> {
    check_interior(model, eta)?;
    let s = DispersionSample::at(model, grid, SamplePoint::PrincipalValue(eta), variant)?;
    let lam = s.lam_det.re;
    let q = q_tilde_from_minors(model, &s.real_minors(), model.c_of_mu(mu)?);
    if eta == mu {
        return Ok((f64::NAN, 1.0));
    }
    Ok((eta * q * model.weight_rho(eta) / (lam * (eta - mu)), 1.0))
}

/// Everything the factorization needs at one cut point, cached.
#[derive(Debug, Clone, Copy)]
pub struct CutPointData {
    pub eta: f64,
    pub rho: f64,
    pub c: f64,
    /// Principal-value t-moments.
    pub t_pv: [f64; 5],
    /// det of the PV matrix (real on the cut).
    pub lam_pv: f64,
    /// Boundary value from above.
    pub lam_plus: Complex64,
    /// Cramer minors at the PV point.
    pub minors: [f64; 3],
    /// q_tilde(eta, eta).
    pub q_diag: f64,
}

/// Sample the cut at one eta: PV matrix, minors, boundary value.
pub fn cut_point(
    model: &GasModel,
    grid: &CutGrid,
    eta: f64,
    variant: MatrixVariant,
) -> Result<CutPointData> {
    let t_pv = t_moments_pv(model, grid, eta)?;
    let rho = model.weight_rho(eta);
    let c = model.c_unchecked(eta);
    let mut t_c = [Complex64::new(0.0, 0.0); 5];
    let mut p = rho;
    for n in 0..5 {
        t_c[n] = Complex64::new(t_pv[n], PI * eta * p);
        p *= c;
    }
    let lam_plus_m = lambda_matrix(model, &t_c, variant);
    let lam_plus = lambda_det_six_term(model, &t_c, &lam_plus_m);
    let mut t_r = [Complex64::new(0.0, 0.0); 5];
    for n in 0..5 {
        t_r[n] = Complex64::new(t_pv[n], 0.0);
    }
    let pv_m = lambda_matrix(model, &t_r, variant);
    let lam_pv = lambda_det_six_term(model, &t_r, &pv_m).re;
    let minors_c = cramer_minors(&pv_m, Complex64::new(c, 0.0));
    let minors = [minors_c[0].re, minors_c[1].re, minors_c[2].re];
    let q_diag = q_tilde_from_minors(model, &minors, c);
    Ok(CutPointData {
        eta,
        rho,
        c,
        t_pv,
        lam_pv,
        lam_plus,
        minors,
        q_diag,
    })
}

/// Dense monotone table of the continuous argument theta(eta) =
/// arg lambda+(eta) on (0, alpha), anchored theta(0+) = 0.
#[derive(Debug, Clone)]
pub struct ThetaTable {
    a: f64,
    alpha: f64,
    etas: Vec<f64>,
    thetas: Vec<f64>,
    spline: CubicSpline,
    winding: f64,
    min_abs_lambda_plus: f64,
}

/// Tolerance on the total winding theta(alpha-) - 2 pi.
pub const WINDING_TOL: f64 = 1e-3;

impl ThetaTable {
    /// Build the table by adaptive sampling.
    ///
    /// The unwrap walks left to right; intervals are bisected until adjacent
    /// phase steps fall below pi/2 and the cubic interpolant reproduces
    /// fresh midpoint evaluations to `fidelity`. The total winding is then
    /// asserted to be 2 pi, which the index-2 factorization downstream
    /// relies on; a mismatch aborts with diagnostics rather than producing
    /// a silently wrong canonical solution.
    pub fn build(
        model: &GasModel,
        grid: &CutGrid,
        n_samples: usize,
        variant: MatrixVariant,
        fidelity: f64,
    ) -> Result<Self> {
        let alpha = model.alpha();
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParameter(
                "theta table needs a finite cut (a > 0)".into(),
            ));
        }
        let n = n_samples.max(64);
        let mut etas: Vec<f64> = Vec::with_capacity(n + 32);
        // Uniform backbone plus geometric clustering at both endpoints.
        for j in 1..=n {
            etas.push(alpha * j as f64 / (n as f64 + 1.0));
        }
        for k in 2..=7 {
            etas.push(alpha * 10f64.powi(-k));
        }
        for k in 2..=8 {
            etas.push(alpha * (1.0 - 10f64.powi(-k)));
        }
        etas.push(alpha * (1.0 - 1e-9));
        etas.sort_by(|a, b| a.partial_cmp(b).unwrap());
        etas.dedup();

        let sample_arg = |eta: f64| -> Result<f64> {
            Ok(cut_point(model, grid, eta, variant)?.lam_plus.arg())
        };
        let mut args: Vec<f64> = etas.iter().map(|&eta| sample_arg(eta)).collect::<Result<_>>()?;

        let max_points = 60_000;
        for _round in 0..60 {
            let thetas = unwrap_phases(&args);
            let mut inserts: Vec<(usize, f64)> = Vec::new();
            for i in 0..etas.len() - 1 {
                let step = (thetas[i + 1] - thetas[i]).abs();
                if step > 0.5 * PI && etas[i + 1] - etas[i] > 1e-10 * alpha {
                    inserts.push((i, 0.5 * (etas[i] + etas[i + 1])));
                }
            }
            if inserts.is_empty() {
                // Fidelity pass: compare fresh midpoints against the spline.
                let spline = CubicSpline::new(etas.clone(), thetas.clone());
                for i in 0..etas.len() - 1 {
                    if etas[i + 1] - etas[i] < 1e-8 * alpha {
                        continue;
                    }
                    let mid = 0.5 * (etas[i] + etas[i + 1]);
                    let raw = sample_arg(mid)?;
                    let err = principal_branch(raw - spline.eval(mid)).abs();
                    if err > fidelity {
                        inserts.push((i, mid));
                    }
                }
            }
            if inserts.is_empty() {
                break;
            }
            if etas.len() + inserts.len() > max_points {
                let (i, at) = inserts[0];
                return Err(Error::PhaseUnwrap {
                    eta: at,
                    what: format!(
                        "refinement exceeded {max_points} samples (first bad interval [{}, {}])",
                        etas[i],
                        etas[i + 1]
                    ),
                });
            }
            for (k, (i, mid)) in inserts.iter().enumerate() {
                let arg = sample_arg(*mid)?;
                etas.insert(i + 1 + k, *mid);
                args.insert(i + 1 + k, arg);
            }
        }

        let thetas = unwrap_phases(&args);
        // The first sample sits at eta ~ 1e-7 alpha where theta is linear in
        // eta; it must already be essentially zero for the anchor to hold.
        if thetas[0].abs() > 0.05 {
            return Err(Error::PhaseUnwrap {
                eta: etas[0],
                what: format!("theta({}) = {} not anchored at 0", etas[0], thetas[0]),
            });
        }
        let winding = *thetas.last().unwrap();
        let deviation = (winding - 2.0 * PI).abs();
        if deviation > WINDING_TOL {
            return Err(Error::WindingMismatch {
                a: model.a(),
                winding,
                deviation,
            });
        }
        let mut min_abs = f64::INFINITY;
        let mut min_eta = f64::NAN;
        for &eta in &etas {
            let m = cut_point(model, grid, eta, variant)?.lam_plus.norm();
            if m < min_abs {
                min_abs = m;
                min_eta = eta;
            }
        }
        if min_abs < 1e-12 {
            return Err(Error::SingularWeight {
                eta: min_eta,
                magnitude: min_abs,
            });
        }
        let spline = CubicSpline::new(etas.clone(), thetas.clone());
        Ok(Self {
            a: model.a(),
            alpha,
            etas,
            thetas,
            spline,
            winding,
            min_abs_lambda_plus: min_abs,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Continuous argument at any eta in (0, alpha).
    pub fn theta_at(&self, eta: f64) -> f64 {
        if eta <= self.etas[0] {
            // Linear ramp from the anchored zero.
            return self.thetas[0] * eta / self.etas[0];
        }
        if eta >= *self.etas.last().unwrap() {
            return self.winding;
        }
        self.spline.eval(eta)
    }

    /// Derivative of the tabulated argument.
    pub fn theta_deriv_at(&self, eta: f64) -> f64 {
        if eta <= self.etas[0] {
            return self.thetas[0] / self.etas[0];
        }
        if eta >= *self.etas.last().unwrap() {
            return 0.0;
        }
        self.spline.eval_deriv(eta)
    }

    pub fn samples(&self) -> (&[f64], &[f64]) {
        (&self.etas, &self.thetas)
    }

    /// theta(alpha-): the total winding.
    pub fn winding(&self) -> f64 {
        self.winding
    }

    pub fn min_abs_lambda_plus(&self) -> f64 {
        self.min_abs_lambda_plus
    }
}

/// Spec-level constructor for the theta table.
pub fn theta_table(
    model: &GasModel,
    grid: &CutGrid,
    n_samples: usize,
    variant: MatrixVariant,
) -> Result<ThetaTable> {
    ThetaTable::build(model, grid, n_samples, variant, 1e-7)
}

/// Reduce an angle to (-pi, pi].
fn principal_branch(x: f64) -> f64 {
    let mut y = x % (2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    } else if y <= -PI {
        y += 2.0 * PI;
    }
    y
}

/// Unwrap raw principal arguments into a continuous sequence starting near 0.
fn unwrap_phases(args: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(args.len());
    let mut prev = args[0];
    out.push(prev);
    for &a in &args[1..] {
        let next = prev + principal_branch(a - prev);
        out.push(next);
        prev = next;
    }
    out
}
