//! Direct discrete-ordinates solution of the half-space problem.
//!
//! Independent ground truth for the analytic pipeline: the kinetic equation
//! is discretized on the same graded symmetric velocity grid used for
//! quadrature (so the discrete projection conserves the collision
//! invariants exactly) and integrated in space by an exponential upwind
//! scheme that is exact for sources linear in x within a cell.
//!
//! The unknown far-field jumps enter through the decomposition
//! h = h_as(eps_hat) + h_tilde: h_as solves the equation exactly for any
//! trial jumps, so h_tilde obeys the same equation with incoming data
//! -h_as(0, mu) at the wall and zero incoming data at the truncation plane.
//! Because everything is linear, the map from (eps_n_hat, eps_t_hat) to the
//! far-field content of h_tilde is affine; it is measured once from unit
//! responses and inverted, which is the fixed point the usual secant
//! iteration on the 2-vector would walk to. The inner transport problem is
//! solved in the 3-moment source space by full GMRES on the
//! source-iteration operator.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{AsymptoticState, GasModel, SQRT_PI};
use crate::quadrature::CutGrid;

/// Knobs of the direct solver.
#[derive(Debug, Clone, Copy)]
pub struct OracleConfig {
    /// Spatial cells on [0, x_max], graded toward the wall.
    pub nx: usize,
    /// Requested ordinate count (rounded to whole panels of 8).
    pub n_mu: usize,
    /// Domain length in mean free paths.
    pub x_max: f64,
    /// Tolerance on the far-field matching residual.
    pub tol: f64,
    /// Cap on outer matching iterations.
    pub max_outer: usize,
    /// Relative residual target of the inner GMRES solve.
    pub gmres_tol: f64,
    /// Cap on GMRES iterations.
    pub gmres_max: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            nx: 600,
            n_mu: 96,
            x_max: 30.0,
            tol: 1e-8,
            max_outer: 200,
            gmres_tol: 1e-12,
            gmres_max: 500,
        }
    }
}

impl OracleConfig {
    /// Domain long enough for the slowest continuum mode exp(-x/alpha) to be
    /// negligible on the fit window; used by callers that let the solver
    /// pick the domain.
    pub fn with_auto_domain(mut self, alpha: f64) -> Self {
        let needed = 15.0 * alpha;
        if needed > self.x_max {
            let stretch = needed / self.x_max;
            self.x_max = needed;
            // Keep the far-field cell size roughly fixed.
            self.nx = ((self.nx as f64) * stretch).ceil() as usize;
        }
        self
    }
}

/// Moment fits of the far field.
#[derive(Debug, Clone, Copy)]
pub struct FitDiagnostics {
    pub n_intercept: f64,
    pub n_slope: f64,
    pub t_intercept: f64,
    pub t_slope: f64,
    /// Normalized quadratic content of the fits; large values mean the
    /// domain is too short for a clean linear far field.
    pub curvature: f64,
    pub window: (f64, f64),
}

/// Extracted jumps from a converged field.
#[derive(Debug, Clone, Copy)]
pub struct JumpExtraction {
    pub eps_n: f64,
    pub eps_t: f64,
    pub fit: FitDiagnostics,
}

/// Direct solution of the boundary value problem on a slab.
#[derive(Debug, Clone)]
pub struct FieldSolution {
    pub a: f64,
    pub u: f64,
    pub g_t: f64,
    /// Spatial grid points, 0 = wall.
    pub x: Vec<f64>,
    /// Ordinates and their quadrature weights.
    pub mu: Vec<f64>,
    pub mu_weights: Vec<f64>,
    /// h(x_i, mu_j), row-major in i.
    pub h: Vec<f64>,
    pub eps_n: f64,
    pub eps_t: f64,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    /// Final far-field matching residual.
    pub matching_residual: f64,
    /// Relative fixed-point residual of the final transport solve.
    pub sweep_residual: f64,
    pub fit: FitDiagnostics,
}

impl FieldSolution {
    pub fn value(&self, ix: usize, imu: usize) -> f64 {
        self.h[ix * self.mu.len() + imu]
    }
}

/// The frozen discretization: ordinates, spatial cells, sweep coefficients,
/// and the discrete projection.
struct Discretization {
    a: f64,
    beta: f64,
    x: Vec<f64>,
    mu: Vec<f64>,
    w: Vec<f64>,
    rho: Vec<f64>,
    c: Vec<f64>,
    /// Moment weight rho (1 - a|mu|) w per ordinate (velocity-space measure
    /// of the density/temperature functionals).
    w_mom: Vec<f64>,
    /// Per (cell, ordinate): exp factor and the two source coefficients.
    exp_fac: Vec<f64>,
    src_up: Vec<f64>,
    src_dn: Vec<f64>,
    /// Cholesky-style factor of the 3x3 discrete Gram matrix.
    gram: [[f64; 3]; 3],
}

fn basis(c: f64, beta: f64, k: usize) -> f64 {
    match k {
        0 => 1.0,
        1 => c,
        _ => c * c - beta,
    }
}

impl Discretization {
    fn new(model: &GasModel, cfg: &OracleConfig) -> Result<Self> {
        // Short domains are allowed through here; the far-field fit flags
        // them as domain-too-short when the transient leaks into the window.
        if !(cfg.x_max > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "x_max must be positive, got {}",
                cfg.x_max
            )));
        }
        if cfg.nx < 16 {
            return Err(Error::InvalidParameter(format!("nx too small: {}", cfg.nx)));
        }
        // 12-node panels keep the discrete projection within ~1e-11 of the
        // continuum kernel, which the manufactured-solution invariant needs.
        let panels = (cfg.n_mu.div_ceil(12).max(2) + 1) & !1usize;
        let grid = CutGrid::symmetric(model.alpha(), panels.max(4), 12)?;
        let mu = grid.nodes().to_vec();
        let w = grid.weights().to_vec();
        let n_mu = mu.len();
        let a = model.a();
        let beta = model.beta();
        let rho: Vec<f64> = mu.iter().map(|&m| model.weight_rho(m)).collect();
        let c: Vec<f64> = mu.iter().map(|&m| model.c_unchecked(m)).collect();
        let w_mom: Vec<f64> = (0..n_mu)
            .map(|j| w[j] * rho[j] * (1.0 - a * mu[j].abs()))
            .collect();

        // Wall-graded spatial grid.
        let nx = cfg.nx;
        let x: Vec<f64> = (0..=nx)
            .map(|i| cfg.x_max * (i as f64 / nx as f64).powi(2))
            .collect();

        // Sweep coefficients per cell and ordinate.
        let mut exp_fac = vec![0.0; nx * n_mu];
        let mut src_up = vec![0.0; nx * n_mu];
        let mut src_dn = vec![0.0; nx * n_mu];
        for i in 0..nx {
            let dx = x[i + 1] - x[i];
            for j in 0..n_mu {
                let delta = dx / mu[j].abs();
                let idx = i * n_mu + j;
                if delta < 1e-4 {
                    // Series forms of F/delta - E and 1 - F/delta.
                    exp_fac[idx] = (-delta).exp();
                    src_up[idx] = delta * (0.5 - delta * (1.0 / 3.0 - delta / 8.0));
                    src_dn[idx] = delta * (0.5 - delta * (1.0 / 6.0 - delta / 24.0));
                } else {
                    let e = (-delta).exp();
                    let f_over = (1.0 - e) / delta;
                    exp_fac[idx] = e;
                    src_up[idx] = f_over - e;
                    src_dn[idx] = 1.0 - f_over;
                }
            }
        }

        // Discrete Gram matrix of {1, C, C^2 - beta} in the rho-weighted
        // discrete inner product.
        let mut gram = [[0.0; 3]; 3];
        for j in 0..n_mu {
            let ww = w[j] * rho[j];
            for p in 0..3 {
                for q in 0..3 {
                    gram[p][q] += ww * basis(c[j], beta, p) * basis(c[j], beta, q);
                }
            }
        }
        Ok(Self {
            a,
            beta,
            x,
            mu,
            w,
            rho,
            c,
            w_mom,
            exp_fac,
            src_up,
            src_dn,
            gram,
        })
    }

    fn n_mu(&self) -> usize {
        self.mu.len()
    }

    fn n_pts(&self) -> usize {
        self.x.len()
    }

    /// Projection coefficients (3 per x point) of a field slice.
    fn project_field(&self, h: &[f64], coeffs: &mut [f64]) {
        let n_mu = self.n_mu();
        for (i, ci) in coeffs.chunks_exact_mut(3).enumerate() {
            let row = &h[i * n_mu..(i + 1) * n_mu];
            let mut m = [0.0f64; 3];
            for j in 0..n_mu {
                let ww = self.w[j] * self.rho[j] * row[j];
                m[0] += ww;
                m[1] += ww * self.c[j];
                m[2] += ww * (self.c[j] * self.c[j] - self.beta);
            }
            let sol = solve3x3(&self.gram, &m);
            ci.copy_from_slice(&sol);
        }
    }

    /// Transport sweep: given source coefficients and wall data, integrate
    /// along every ordinate. Ordinates are independent; rayon maps them.
    fn sweep(&self, coeffs: &[f64], bc_wall: &[f64], h: &mut [f64]) {
        let n_mu = self.n_mu();
        let n_pts = self.n_pts();
        let nx = n_pts - 1;
        // Source values per (i, j) are formed on the fly from coeffs.
        let columns: Vec<Vec<f64>> = (0..n_mu)
            .into_par_iter()
            .map(|j| {
                let mut col = vec![0.0; n_pts];
                let cb = [1.0, self.c[j], self.c[j] * self.c[j] - self.beta];
                let src = |i: usize| {
                    let c = &coeffs[3 * i..3 * i + 3];
                    c[0] * cb[0] + c[1] * cb[1] + c[2] * cb[2]
                };
                if self.mu[j] > 0.0 {
                    col[0] = bc_wall[j];
                    for i in 0..nx {
                        let idx = i * n_mu + j;
                        col[i + 1] = col[i] * self.exp_fac[idx]
                            + src(i) * self.src_up[idx]
                            + src(i + 1) * self.src_dn[idx];
                    }
                } else {
                    col[nx] = 0.0;
                    for i in (0..nx).rev() {
                        let idx = i * n_mu + j;
                        col[i] = col[i + 1] * self.exp_fac[idx]
                            + src(i + 1) * self.src_up[idx]
                            + src(i) * self.src_dn[idx];
                    }
                }
                col
            })
            .collect();
        // Deterministic assembly in ordinate order.
        for (j, col) in columns.iter().enumerate() {
            for i in 0..n_pts {
                h[i * n_mu + j] = col[i];
            }
        }
    }

    /// Density and temperature moments of a field.
    fn moments(&self, h: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n_mu = self.n_mu();
        let mut n_mom = Vec::with_capacity(self.n_pts());
        let mut t_mom = Vec::with_capacity(self.n_pts());
        for row in h.chunks_exact(n_mu) {
            let mut n_acc = 0.0;
            let mut t_acc = 0.0;
            for j in 0..n_mu {
                n_acc += self.w_mom[j] * row[j];
                t_acc += self.w_mom[j] * (self.c[j] * self.c[j] - 0.5) * row[j];
            }
            n_mom.push(n_acc / SQRT_PI);
            t_mom.push(2.0 * t_acc / SQRT_PI);
        }
        (n_mom, t_mom)
    }
}

fn solve3x3(m: &[[f64; 3]; 3], b: &[f64; 3]) -> [f64; 3] {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let inv_det = 1.0 / det;
    let cof = |r: usize, c: usize| {
        let (r1, r2) = match r {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let (c1, c2) = match c {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let sign = if (r + c) % 2 == 0 { 1.0 } else { -1.0 };
        sign * (m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1])
    };
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = (cof(0, i) * b[0] + cof(1, i) * b[1] + cof(2, i) * b[2]) * inv_det;
    }
    out
}

/// Full GMRES for (I - A)s = b in moment space.
fn gmres_source(
    disc: &Discretization,
    bc_wall: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize)> {
    let n_pts = disc.n_pts();
    let dim = 3 * n_pts;
    let mut scratch_h = vec![0.0; n_pts * disc.n_mu()];
    let zero_bc = vec![0.0; disc.n_mu()];

    // b = P(sweep with boundary data, zero source).
    let zero_coeffs = vec![0.0; dim];
    disc.sweep(&zero_coeffs, bc_wall, &mut scratch_h);
    let mut b = vec![0.0; dim];
    disc.project_field(&scratch_h, &mut b);

    let apply = |s: &[f64], scratch_h: &mut Vec<f64>| -> Vec<f64> {
        disc.sweep(s, &zero_bc, scratch_h);
        let mut out = vec![0.0; dim];
        disc.project_field(scratch_h, &mut out);
        for k in 0..dim {
            out[k] = s[k] - out[k];
        }
        out
    };

    let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if b_norm == 0.0 {
        return Ok((vec![0.0; dim], 0));
    }
    // Arnoldi with modified Gram-Schmidt and Givens rotations.
    let m = max_iter.min(dim);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    basis.push(b.iter().map(|v| v / b_norm).collect());
    let mut hess = vec![vec![0.0f64; 0]; 0];
    let mut cs: Vec<f64> = Vec::with_capacity(m);
    let mut sn: Vec<f64> = Vec::with_capacity(m);
    let mut g = vec![b_norm];
    let mut history = Vec::new();
    let mut iterations = 0;
    for k in 0..m {
        iterations = k + 1;
        let mut v = apply(&basis[k], &mut scratch_h);
        let mut col = vec![0.0; k + 2];
        for (i, q) in basis.iter().enumerate() {
            let dot: f64 = v.iter().zip(q).map(|(x, y)| x * y).sum();
            col[i] = dot;
            for (x, y) in v.iter_mut().zip(q) {
                *x -= dot * y;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        col[k + 1] = norm;
        // Apply accumulated rotations.
        for i in 0..k {
            let t = cs[i] * col[i] + sn[i] * col[i + 1];
            col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
            col[i] = t;
        }
        let r = (col[k] * col[k] + col[k + 1] * col[k + 1]).sqrt();
        let (c_k, s_k) = if r == 0.0 { (1.0, 0.0) } else { (col[k] / r, col[k + 1] / r) };
        cs.push(c_k);
        sn.push(s_k);
        col[k] = r;
        col[k + 1] = 0.0;
        g.push(-s_k * g[k]);
        g[k] *= c_k;
        hess.push(col);
        let residual = g[k + 1].abs() / b_norm;
        history.push(residual);
        if residual < tol {
            break;
        }
        if norm == 0.0 {
            break;
        }
        basis.push(v.iter().map(|x| x / norm).collect());
    }
    let k = iterations;
    if history.last().copied().unwrap_or(1.0) > tol.max(1e-10) * 10.0 && k == m {
        return Err(Error::OracleNonConvergence {
            iterations: k,
            history: history.iter().rev().take(8).rev().copied().collect(),
        });
    }
    // Back-substitute the triangular system.
    let mut y = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = g[i];
        for j in i + 1..k {
            s -= hess[j][i] * y[j];
        }
        y[i] = s / hess[i][i];
    }
    let mut s = vec![0.0; dim];
    for (i, yi) in y.iter().enumerate() {
        for (x, q) in s.iter_mut().zip(&basis[i]) {
            *x += yi * q;
        }
    }
    Ok((s, k))
}

/// Solve one inner transport problem (fixed wall data), returning the field
/// and the iteration count.
fn inner_solve(
    disc: &Discretization,
    bc_wall: &[f64],
    cfg: &OracleConfig,
) -> Result<(Vec<f64>, usize)> {
    let (coeffs, iters) = gmres_source(disc, bc_wall, cfg.gmres_tol, cfg.gmres_max)?;
    let mut h = vec![0.0; disc.n_pts() * disc.n_mu()];
    disc.sweep(&coeffs, bc_wall, &mut h);
    Ok((h, iters))
}

/// Least-squares linear fit over the index window; returns (intercept at
/// x = 0, slope, max quadratic deviation measure).
fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    // Quadratic content via the second polynomial orthogonal to {1, x} on
    // these (generally non-uniform) abscissas.
    let mut m3 = 0.0;
    for x in xs {
        m3 += (x - mx) * (x - mx) * (x - mx);
    }
    let mut sq = 0.0;
    let mut sqq = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let d = x - mx;
        let p2 = d * d - (m3 / sxx) * d - sxx / n;
        sq += p2 * (y - my);
        sqq += p2 * p2;
    }
    let quad = if sqq > 0.0 { sq / sqq } else { 0.0 };
    let span = xs.last().unwrap() - xs.first().unwrap();
    (intercept, slope, (quad * span * span / 4.0).abs())
}

/// Far-field window indices: x in [2 x_max / 3, x_max].
fn window_indices(x: &[f64]) -> std::ops::Range<usize> {
    let x_max = *x.last().unwrap();
    let lo = x.partition_point(|&v| v < 2.0 * x_max / 3.0);
    lo..x.len()
}

/// Fit the density/temperature moments of a field over the far window.
fn far_fit(disc: &Discretization, h: &[f64]) -> FitDiagnostics {
    let (n_mom, t_mom) = disc.moments(h);
    let win = window_indices(&disc.x);
    let xs = &disc.x[win.clone()];
    let (ni, ns, ncurv) = linear_fit(xs, &n_mom[win.clone()]);
    let (ti, ts, tcurv) = linear_fit(xs, &t_mom[win.clone()]);
    FitDiagnostics {
        n_intercept: ni,
        n_slope: ns,
        t_intercept: ti,
        t_slope: ts,
        curvature: ncurv.max(tcurv),
        window: (xs[0], *xs.last().unwrap()),
    }
}

/// Content of h_tilde's far field: the fitted lines evaluated at the window
/// midpoint (the residual content is constant in x once converged).
fn far_content(fit: &FitDiagnostics) -> (f64, f64) {
    let mid = 0.5 * (fit.window.0 + fit.window.1);
    (
        fit.n_intercept + fit.n_slope * mid,
        fit.t_intercept + fit.t_slope * mid,
    )
}

/// Direct numerical solution of the half-space problem.
///
/// Returns the full field h = h_as + h_tilde on the slab together with the
/// matched jumps.
pub fn solve_direct(model: &GasModel, u: f64, g_t: f64, cfg: &OracleConfig) -> Result<FieldSolution> {
    if !(model.a() > 0.0) {
        return Err(Error::InvalidParameter(
            "direct solver needs a > 0 (finite cut)".into(),
        ));
    }
    let disc = Discretization::new(model, cfg)?;
    let n_mu = disc.n_mu();
    let n_pts = disc.n_pts();
    let omega = model.omega();

    let mut field = FieldSolution {
        a: model.a(),
        u,
        g_t,
        x: disc.x.clone(),
        mu: disc.mu.clone(),
        mu_weights: disc.w.clone(),
        h: vec![0.0; n_pts * n_mu],
        eps_n: 0.0,
        eps_t: 0.0,
        outer_iterations: 0,
        inner_iterations: 0,
        matching_residual: 0.0,
        sweep_residual: 0.0,
        fit: FitDiagnostics {
            n_intercept: 0.0,
            n_slope: 0.0,
            t_intercept: 0.0,
            t_slope: 0.0,
            curvature: 0.0,
            window: (0.0, 0.0),
        },
    };
    if u == 0.0 && g_t == 0.0 {
        field.outer_iterations = 1;
        return Ok(field);
    }

    // Wall data components: h_tilde(0, mu) = -h_as(0, mu) for mu > 0,
    // split into the two unknown-jump responses and the forcing part.
    let bc_component = |f: &dyn Fn(usize) -> f64| -> Vec<f64> {
        (0..n_mu)
            .map(|j| if disc.mu[j] > 0.0 { f(j) } else { 0.0 })
            .collect()
    };
    let bc_n = bc_component(&|_| -1.0);
    let bc_t = bc_component(&|j| -(disc.c[j] * disc.c[j] - 0.5));
    let bc_f = bc_component(&|j| {
        let c = disc.c[j];
        -((2.0 * u + g_t * omega) * c + (c * c - 1.5) * (-g_t * disc.mu[j]))
    });

    let (h_n, it_n) = inner_solve(&disc, &bc_n, cfg)?;
    let (h_t, it_t) = inner_solve(&disc, &bc_t, cfg)?;
    let (h_f, it_f) = inner_solve(&disc, &bc_f, cfg)?;
    let f_n = far_content(&far_fit(&disc, &h_n));
    let f_t = far_content(&far_fit(&disc, &h_t));
    let f_f = far_content(&far_fit(&disc, &h_f));

    // Solve F_f + M eps_hat = 0 for the trial jumps.
    let det = f_n.0 * f_t.1 - f_t.0 * f_n.1;
    if det.abs() < 1e-12 {
        return Err(Error::OracleNonConvergence {
            iterations: 1,
            history: vec![det.abs()],
        });
    }
    let eps_n_hat = -(f_f.0 * f_t.1 - f_t.0 * f_f.1) / det;
    let eps_t_hat = -(f_n.0 * f_f.1 - f_f.0 * f_n.1) / det;

    // Compose h_tilde and measure the residual far content.
    let mut h_tilde = vec![0.0; n_pts * n_mu];
    for k in 0..h_tilde.len() {
        h_tilde[k] = eps_n_hat * h_n[k] + eps_t_hat * h_t[k] + h_f[k];
    }
    let residual_content = far_content(&far_fit(&disc, &h_tilde));
    let matching_residual = residual_content.0.abs().max(residual_content.1.abs());
    let forcing_scale = (2.0 * u).abs().max(g_t.abs()).max(1e-300);
    if matching_residual > cfg.tol.max(1e-6) * forcing_scale * 1e3 {
        return Err(Error::OracleNonConvergence {
            iterations: 2,
            history: vec![matching_residual],
        });
    }

    // Assemble the full field h = h_as(eps_hat) + h_tilde.
    let state = AsymptoticState::new(eps_n_hat, eps_t_hat, u, g_t);
    for i in 0..n_pts {
        for j in 0..n_mu {
            let h_as = model
                .h_asymptotic(disc.x[i], disc.mu[j], &state)
                .expect("ordinates are interior");
            field.h[i * n_mu + j] = h_as + h_tilde[i * n_mu + j];
        }
    }

    // Fixed-point residual of the final combined field: apply one projection
    // + sweep with the true wall data h(0, mu > 0) = 0 and the asymptotic
    // outflow at the truncation plane.
    let mut coeffs = vec![0.0; 3 * n_pts];
    disc.project_field(&field.h, &mut coeffs);
    let mut resweep = vec![0.0; n_pts * n_mu];
    {
        // Wall: zero inflow; far plane: h_as supplies the incoming data.
        let bc0 = vec![0.0; n_mu];
        disc.sweep(&coeffs, &bc0, &mut resweep);
        for j in 0..n_mu {
            if disc.mu[j] < 0.0 {
                let h_far = model
                    .h_asymptotic(*disc.x.last().unwrap(), disc.mu[j], &state)
                    .unwrap();
                // Re-sweep the incoming column with the asymptotic value.
                let mut inc = h_far;
                resweep[(n_pts - 1) * n_mu + j] = inc;
                for i in (0..n_pts - 1).rev() {
                    let idx = i * n_mu + j;
                    let cb = [1.0, disc.c[j], disc.c[j] * disc.c[j] - disc.beta];
                    let s_hi = coeffs[3 * (i + 1)] * cb[0]
                        + coeffs[3 * (i + 1) + 1] * cb[1]
                        + coeffs[3 * (i + 1) + 2] * cb[2];
                    let s_lo =
                        coeffs[3 * i] * cb[0] + coeffs[3 * i + 1] * cb[1] + coeffs[3 * i + 2] * cb[2];
                    inc = inc * disc.exp_fac[idx]
                        + s_hi * disc.src_up[idx]
                        + s_lo * disc.src_dn[idx];
                    resweep[idx] = inc;
                }
            }
        }
    }
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for k in 0..field.h.len() {
        num += (resweep[k] - field.h[k]) * (resweep[k] - field.h[k]);
        den += field.h[k] * field.h[k];
    }
    field.sweep_residual = (num / den.max(1e-300)).sqrt();

    field.eps_n = eps_n_hat;
    field.eps_t = eps_t_hat;
    field.outer_iterations = 2;
    field.inner_iterations = it_n.max(it_t).max(it_f);
    field.matching_residual = matching_residual;
    field.fit = far_fit(&disc, &field.h);
    Ok(field)
}

/// Threshold on the normalized quadratic content of the far-field fits.
pub const CURVATURE_THRESHOLD: f64 = 0.01;

/// Extract the jumps from a converged field by linear far-field fits.
///
/// Density fits to eps_n - g_T x, temperature to eps_T + g_T x; intercepts
/// extrapolated to the wall give the jumps. Visible curvature means the
/// domain was too short.
pub fn extract_jumps(field: &FieldSolution) -> Result<JumpExtraction> {
    let model = GasModel::new(field.a)?;
    let n_mu = field.mu.len();
    let a = field.a;
    let mut n_mom = Vec::with_capacity(field.x.len());
    let mut t_mom = Vec::with_capacity(field.x.len());
    for row in field.h.chunks_exact(n_mu) {
        let mut n_acc = 0.0;
        let mut t_acc = 0.0;
        for j in 0..n_mu {
            let c = model.c_unchecked(field.mu[j]);
            let wm = field.mu_weights[j]
                * model.weight_rho(field.mu[j])
                * (1.0 - a * field.mu[j].abs());
            n_acc += wm * row[j];
            t_acc += wm * (c * c - 0.5) * row[j];
        }
        n_mom.push(n_acc / SQRT_PI);
        t_mom.push(2.0 * t_acc / SQRT_PI);
    }
    let win = window_indices(&field.x);
    let xs = &field.x[win.clone()];
    let (n_i, n_s, n_curv) = linear_fit(xs, &n_mom[win.clone()]);
    let (t_i, t_s, t_curv) = linear_fit(xs, &t_mom[win.clone()]);
    let scale = n_i
        .abs()
        .max(t_i.abs())
        .max(field.g_t.abs())
        .max((2.0 * field.u).abs())
        .max(1e-300);
    let curvature = n_curv.max(t_curv) / scale;
    if curvature > CURVATURE_THRESHOLD {
        return Err(Error::DomainTooShort {
            curvature,
            threshold: CURVATURE_THRESHOLD,
        });
    }
    Ok(JumpExtraction {
        eps_n: n_i,
        eps_t: t_i,
        fit: FitDiagnostics {
            n_intercept: n_i,
            n_slope: n_s,
            t_intercept: t_i,
            t_slope: t_s,
            curvature,
            window: (xs[0], *xs.last().unwrap()),
        },
    })
}

/// One projection + sweep applied to an arbitrary field with the given wall
/// data: the fixed-point map whose solution the inner solver finds. Exposed
/// for the manufactured-solution and conservation tests.
pub fn fixed_point_map(
    model: &GasModel,
    cfg: &OracleConfig,
    bc_wall_all: impl Fn(f64) -> f64,
    bc_far: impl Fn(f64) -> f64,
    h_in: impl Fn(f64, f64) -> f64,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
    let disc = Discretization::new(model, cfg)?;
    let n_mu = disc.n_mu();
    let n_pts = disc.n_pts();
    let mut h = vec![0.0; n_pts * n_mu];
    for i in 0..n_pts {
        for j in 0..n_mu {
            h[i * n_mu + j] = h_in(disc.x[i], disc.mu[j]);
        }
    }
    let mut coeffs = vec![0.0; 3 * n_pts];
    disc.project_field(&h, &mut coeffs);
    // Conservation diagnostics: invariant moments of (Ph - h) per x.
    let mut cons: Vec<f64> = Vec::with_capacity(n_pts);
    for i in 0..n_pts {
        let row = &h[i * n_mu..(i + 1) * n_mu];
        let mut worst = 0.0f64;
        for p in 0..3 {
            let mut acc = 0.0;
            for j in 0..n_mu {
                let proj = coeffs[3 * i] * basis(disc.c[j], disc.beta, 0)
                    + coeffs[3 * i + 1] * basis(disc.c[j], disc.beta, 1)
                    + coeffs[3 * i + 2] * basis(disc.c[j], disc.beta, 2);
                acc += disc.w[j] * disc.rho[j] * basis(disc.c[j], disc.beta, p) * (proj - row[j]);
            }
            worst = worst.max(acc.abs());
        }
        cons.push(worst);
    }
    // Sweep with the provided boundary data on both planes.
    let bc_wall: Vec<f64> = disc.mu.iter().map(|&m| bc_wall_all(m)).collect();
    let mut out = vec![0.0; n_pts * n_mu];
    disc.sweep(&coeffs, &bc_wall, &mut out);
    // Overwrite incoming columns at the far plane where requested.
    for j in 0..n_mu {
        if disc.mu[j] < 0.0 {
            let mut inc = bc_far(disc.mu[j]);
            out[(n_pts - 1) * n_mu + j] = inc;
            let cb = [1.0, disc.c[j], disc.c[j] * disc.c[j] - disc.beta];
            for i in (0..n_pts - 1).rev() {
                let idx = i * n_mu + j;
                let s_hi = coeffs[3 * (i + 1)] * cb[0]
                    + coeffs[3 * (i + 1) + 1] * cb[1]
                    + coeffs[3 * (i + 1) + 2] * cb[2];
                let s_lo =
                    coeffs[3 * i] * cb[0] + coeffs[3 * i + 1] * cb[1] + coeffs[3 * i + 2] * cb[2];
                inc = inc * disc.exp_fac[idx] + s_hi * disc.src_up[idx] + s_lo * disc.src_dn[idx];
                out[idx] = inc;
            }
        }
    }
    let xs = disc.x.clone();
    let mus = disc.mu.clone();
    Ok((out, h, cons, {
        let mut flat = xs;
        flat.extend_from_slice(&mus);
        flat
    }))
}
