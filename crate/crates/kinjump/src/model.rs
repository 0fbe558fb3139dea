//! Dimensionless model primitives.
//!
//! Houses the dimensional-to-dimensionless scaling, the slope rescaling, the
//! velocity map C(mu) onto the cut (-alpha, alpha), the weight rho(mu), the
//! degenerate collision kernel q and its projection, the number parameter
//! omega(a), the far-field asymptotic distribution, and the transport
//! residual used to certify exact partial solutions.
//!
//! Every public entry point takes the rescaled slope `a` (the physical slope
//! times sqrt(pi)); [`rescale_slope`] is the single conversion point.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::quadrature::CutGrid;

pub const SQRT_PI: f64 = 1.7724538509055159;

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380649e-23;

/// Convert the physical frequency slope to the internal rescaled one.
///
/// All downstream modules take the rescaled value.
pub fn rescale_slope(a_physical: f64) -> Result<f64> {
    if !(a_physical >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "frequency slope must be nonnegative, got {a_physical}"
        )));
    }
    Ok(SQRT_PI * a_physical)
}

/// SI-facing scaling data for one gas/surface pair.
#[derive(Debug, Clone, Copy)]
pub struct PhysicalScaling {
    /// Surface temperature, K.
    pub surface_temperature: f64,
    /// Saturated vapor number density at the surface, 1/m.
    pub saturated_density: f64,
    /// Molecule mass, kg.
    pub molecule_mass: f64,
    /// Base collision frequency, 1/s.
    pub base_frequency: f64,
    /// Heat velocity v_T = sqrt(2 k_B T_s / m), m/s.
    pub thermal_velocity: f64,
    /// Mean free path l = v_T / nu_0, m.
    pub mean_free_path: f64,
}

impl PhysicalScaling {
    pub fn new(
        surface_temperature: f64,
        saturated_density: f64,
        molecule_mass: f64,
        base_frequency: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("surface_temperature", surface_temperature),
            ("saturated_density", saturated_density),
            ("molecule_mass", molecule_mass),
            ("base_frequency", base_frequency),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        let beta_s = molecule_mass / (2.0 * BOLTZMANN * surface_temperature);
        let thermal_velocity = 1.0 / beta_s.sqrt();
        Ok(Self {
            surface_temperature,
            saturated_density,
            molecule_mass,
            base_frequency,
            thermal_velocity,
            mean_free_path: thermal_velocity / base_frequency,
        })
    }

    /// Coordinate in mean free paths.
    pub fn to_dimensionless_length(&self, x_meters: f64) -> f64 {
        x_meters / self.mean_free_path
    }

    pub fn from_dimensionless_length(&self, x: f64) -> f64 {
        x * self.mean_free_path
    }

    /// Velocity in units of the heat velocity.
    pub fn to_dimensionless_velocity(&self, v_meters_per_second: f64) -> f64 {
        v_meters_per_second / self.thermal_velocity
    }

    pub fn from_dimensionless_velocity(&self, c: f64) -> f64 {
        c * self.thermal_velocity
    }

    /// Dimensionless log-temperature gradient from a dimensional one (1/m).
    pub fn to_dimensionless_gradient(&self, g_per_meter: f64) -> f64 {
        g_per_meter * self.mean_free_path
    }
}

/// The dimensionless problem for one value of the rescaled slope.
#[derive(Debug)]
pub struct GasModel {
    a: f64,
    alpha: f64,
    r0: f64,
    r1: f64,
    r2: f64,
    beta: f64,
    omega: OnceLock<f64>,
}

impl Clone for GasModel {
    fn clone(&self) -> Self {
        let omega = OnceLock::new();
        if let Some(&w) = self.omega.get() {
            let _ = omega.set(w);
        }
        Self { omega, ..*self }
    }
}

impl GasModel {
    /// Build the model from the rescaled slope.
    ///
    /// `a = 0` is accepted: the cut becomes infinite and only the
    /// C-variable forms remain usable, which is all this module needs.
    pub fn new(a: f64) -> Result<Self> {
        if !(a >= 0.0 && a.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "rescaled slope must be nonnegative and finite, got {a}"
            )));
        }
        let alpha = if a == 0.0 { f64::INFINITY } else { 1.0 / a };
        Ok(Self {
            a,
            alpha,
            r0: 1.0 / (a + SQRT_PI),
            r1: 2.0 / (2.0 * a + SQRT_PI),
            r2: 4.0 * (a + SQRT_PI) / (4.0 * a * a + 7.0 * SQRT_PI * a + 2.0 * std::f64::consts::PI),
            beta: (2.0 * a + SQRT_PI) / (2.0 * (a + SQRT_PI)),
            omega: OnceLock::new(),
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// Half-length of the cut, 1/a (infinite for a = 0).
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn r1(&self) -> f64 {
        self.r1
    }

    pub fn r2(&self) -> f64 {
        self.r2
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// The kernel coefficients (r0, r1, r2, beta) as a tuple.
    pub fn kernel_coeffs(&self) -> (f64, f64, f64, f64) {
        (self.r0, self.r1, self.r2, self.beta)
    }

    fn check_on_cut(&self, mu: f64) -> Result<()> {
        if mu.abs() < self.alpha && mu.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "mu = {mu} outside the open cut (-{0}, {0})",
                self.alpha
            )))
        }
    }

    /// Velocity map C(mu) = mu / (1 - a|mu|), odd and strictly increasing on
    /// the open cut.
    pub fn c_of_mu(&self, mu: f64) -> Result<f64> {
        self.check_on_cut(mu)?;
        Ok(mu / (1.0 - self.a * mu.abs()))
    }

    /// Inverse of the velocity map: mu = C / (1 + a|C|). Total on the reals.
    pub fn mu_of_c(&self, c: f64) -> f64 {
        c / (1.0 + self.a * c.abs())
    }

    /// Unchecked velocity map for hot loops that already know mu is interior.
    #[inline]
    pub(crate) fn c_unchecked(&self, mu: f64) -> f64 {
        mu / (1.0 - self.a * mu.abs())
    }

    /// Cut weight rho(mu) = exp(-C^2(mu)) / (1 - a|mu|)^3.
    ///
    /// Defined as 0 at and beyond |mu| = alpha by continuity; the Gaussian
    /// factor kills every power of C there.
    pub fn weight_rho(&self, mu: f64) -> f64 {
        let d = 1.0 - self.a * mu.abs();
        if d <= 0.0 {
            return 0.0;
        }
        let c = mu / d;
        (-c * c).exp() / (d * d * d)
    }

    /// Velocity-variable weight rho(C) = (1 + a|C|) exp(-C^2); the image of
    /// `weight_rho` under the change of variables (renamed to avoid the
    /// symbol clash between the two weights).
    pub fn weight_c(&self, c: f64) -> f64 {
        (1.0 + self.a * c.abs()) * (-c * c).exp()
    }

    /// Degenerate collision kernel
    /// q(mu, mu') = r0 + r1 C C' + r2 (C^2 - beta)(C'^2 - beta).
    pub fn kernel_q(&self, mu: f64, mu_prime: f64) -> Result<f64> {
        let c = self.c_of_mu(mu)?;
        let cp = self.c_of_mu(mu_prime)?;
        // Grouping keeps the symmetry q(mu, mu') = q(mu', mu) bit-exact.
        Ok(self.r0 + self.r1 * (c * cp) + self.r2 * ((c * c - self.beta) * (cp * cp - self.beta)))
    }

    /// Project a function on the cut onto span{1, C, C^2 - beta} with weight
    /// rho: the collision projection K h.
    pub fn project(&self, grid: &CutGrid, mut h: impl FnMut(f64) -> f64) -> Result<ProjectionCoeffs> {
        let mut m0 = 0.0;
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for (&mu, &w) in grid.nodes().iter().zip(grid.weights()) {
            let v = h(mu);
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    what: "projection integrand".into(),
                    node: mu,
                });
            }
            let rho = self.weight_rho(mu);
            let c = self.c_unchecked(mu);
            let base = w * rho * v;
            m0 += base;
            m1 += base * c;
            m2 += base * (c * c - self.beta);
        }
        Ok(ProjectionCoeffs {
            c0: self.r0 * m0,
            c1: self.r1 * m1,
            c2: self.r2 * m2,
        })
    }

    /// The number parameter omega(a), cached after the first evaluation.
    ///
    /// Computed in the C variable, which also covers a = 0 where the cut is
    /// infinite.
    pub fn omega(&self) -> f64 {
        *self.omega.get_or_init(|| {
            omega_c_form(self.a).expect("omega quadrature on a fixed internal rule cannot fail")
        })
    }

    /// Far-field asymptotic distribution h_as(x, mu) for the given state.
    pub fn h_asymptotic(&self, x: f64, mu: f64, state: &AsymptoticState) -> Result<f64> {
        if x < 0.0 {
            return Err(Error::Domain(format!("x must be nonnegative, got {x}")));
        }
        let c = self.c_of_mu(mu)?;
        let omega = self.omega();
        Ok(state.eps_n
            + state.eps_t
            + (2.0 * state.u + state.g_t * omega) * c
            + (c * c - 1.5) * (state.eps_t + state.g_t * (x - mu)))
    }

    /// Residual of the kinetic equation, mu dh/dx + h - K h, at one point.
    ///
    /// The x-derivative is taken by second-order differencing, so `h` must be
    /// smooth in x near the probe. Roundoff in the difference quotient limits
    /// the attainable residual to about 1e-11 * |h| * |mu|; use
    /// [`GasModel::transport_residual_with_derivative`] when the derivative
    /// is known in closed form and the full quadrature accuracy is wanted.
    pub fn transport_residual(
        &self,
        grid: &CutGrid,
        h: impl Fn(f64, f64) -> f64,
        x: f64,
        mu: f64,
    ) -> Result<f64> {
        self.check_on_cut(mu)?;
        let step = 6e-6 * (1.0 + x.abs());
        let dh_dx = if x >= step {
            (h(x + step, mu) - h(x - step, mu)) / (2.0 * step)
        } else {
            (-3.0 * h(x, mu) + 4.0 * h(x + step, mu) - h(x + 2.0 * step, mu)) / (2.0 * step)
        };
        let proj = self.project(grid, |m| h(x, m))?;
        Ok(mu * dh_dx + h(x, mu) - proj.eval(self, mu))
    }

    /// Transport residual with a caller-supplied x-derivative.
    pub fn transport_residual_with_derivative(
        &self,
        grid: &CutGrid,
        h: impl Fn(f64, f64) -> f64,
        dh_dx: impl Fn(f64, f64) -> f64,
        x: f64,
        mu: f64,
    ) -> Result<f64> {
        self.check_on_cut(mu)?;
        let proj = self.project(grid, |m| h(x, m))?;
        Ok(mu * dh_dx(x, mu) + h(x, mu) - proj.eval(self, mu))
    }

    /// x-derivative of [`GasModel::partial_solution`].
    pub fn partial_solution_dx(&self, index: usize, _x: f64, mu: f64) -> f64 {
        let c = self.c_unchecked(mu);
        match index {
            0 | 1 | 2 => 0.0,
            3 => c * c - 1.5,
            _ => panic!("partial solution index must be 0..=3"),
        }
    }

    /// The four exact partial solutions of the kinetic equation, by index.
    ///
    /// 0: 1, 1: C(mu), 2: C^2(mu) - 1/2, 3: (x - mu)(C^2(mu) - 3/2).
    pub fn partial_solution(&self, index: usize, x: f64, mu: f64) -> f64 {
        let c = self.c_unchecked(mu);
        match index {
            0 => 1.0,
            1 => c,
            2 => c * c - 0.5,
            3 => (x - mu) * (c * c - 1.5),
            _ => panic!("partial solution index must be 0..=3"),
        }
    }
}

/// omega(a) in the velocity variable:
/// (2/sqrt(pi)) int e^{-C^2} C^2 (C^2 - 3/2) / (1 + a|C|) dC over the reals.
pub fn omega_c_form(a: f64) -> Result<f64> {
    if !(a >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "slope must be nonnegative, got {a}"
        )));
    }
    // e^{-144} is far below the double floor, so [0, 12] is the whole line.
    let grid = CutGrid::graded(0.0, 12.0, 24, 12, 2, 0)?;
    let f = |c: f64| (-c * c).exp() * c * c * (c * c - 1.5) / (1.0 + a * c);
    let (value, err) = grid.integrate_with_error(f);
    let value = 4.0 / SQRT_PI * value;
    let err = 4.0 / SQRT_PI * err;
    if err > 1e-10 {
        return Err(Error::Quadrature {
            what: format!("omega({a}) C-form"),
            achieved: err,
        });
    }
    Ok(value)
}

/// omega(a) in the mu variable, for a > 0:
/// (2/sqrt(pi)) int e^{-C^2(mu)} C^2(mu) [C^2(mu) - 3/2] dmu / (1 - a|mu|).
pub fn omega_mu_form(model: &GasModel, grid: &CutGrid) -> Result<f64> {
    if model.a() == 0.0 {
        return Err(Error::Domain(
            "mu-form of omega needs a finite cut; use the C-form at a = 0".into(),
        ));
    }
    let f = |mu: f64| {
        let d = 1.0 - model.a() * mu.abs();
        if d <= 0.0 {
            return 0.0;
        }
        let c = mu / d;
        (-c * c).exp() * c * c * (c * c - 1.5) / d
    };
    let v = grid.try_integrate(f)?;
    Ok(2.0 / SQRT_PI * v)
}

/// Result of the collision projection: coefficients on {1, C, C^2 - beta}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionCoeffs {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl ProjectionCoeffs {
    /// Evaluate the projected function at a cut point.
    pub fn eval(&self, model: &GasModel, mu: f64) -> f64 {
        let c = model.c_unchecked(mu);
        self.c0 + self.c1 * c + self.c2 * (c * c - model.beta())
    }
}

/// Free parameters of the far-field asymptotic distribution.
///
/// `u` and `g_t` are the given forcings (evaporation velocity in units of
/// the heat velocity, log-temperature gradient in units of 1/l); `eps_n` and
/// `eps_t` are the concentration and temperature jumps. The linearized model
/// assumes |u| << 1 and |g_t| << 1 but does not enforce it.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AsymptoticState {
    pub eps_n: f64,
    pub eps_t: f64,
    pub u: f64,
    pub g_t: f64,
}

impl AsymptoticState {
    pub fn new(eps_n: f64, eps_t: f64, u: f64, g_t: f64) -> Self {
        Self { eps_n, eps_t, u, g_t }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::build_grid;
    use approx::assert_abs_diff_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn default_grid(model: &GasModel) -> CutGrid {
        build_grid(model.alpha(), 48, 12).unwrap()
    }

    #[test]
    fn rescale_slope_fixed_points() {
        assert_eq!(rescale_slope(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(rescale_slope(1.0).unwrap(), SQRT_PI, epsilon = 1e-15);
        assert_abs_diff_eq!(rescale_slope(1.0 / SQRT_PI).unwrap(), 1.0, epsilon = 1e-15);
        assert!(rescale_slope(-0.1).is_err());
    }

    #[test]
    fn kernel_coeffs_at_zero_slope() {
        let m = GasModel::new(0.0).unwrap();
        assert_abs_diff_eq!(m.r0(), 1.0 / SQRT_PI, epsilon = 1e-15);
        assert_abs_diff_eq!(m.r1(), 2.0 / SQRT_PI, epsilon = 1e-15);
        assert_abs_diff_eq!(m.r2(), 2.0 / SQRT_PI, epsilon = 1e-15);
        assert_abs_diff_eq!(m.beta(), 0.5, epsilon = 1e-15);
        assert!(m.alpha().is_infinite());
    }

    #[test]
    fn kernel_coeffs_at_unit_slope() {
        // Frozen from a 30-digit evaluation of the closed forms.
        let m = GasModel::new(1.0).unwrap();
        assert_abs_diff_eq!(m.r0(), 0.360691305888964839, epsilon = 1e-15);
        assert_abs_diff_eq!(m.r1(), 0.530158904268618850, epsilon = 1e-15);
        assert_abs_diff_eq!(m.r2(), 0.488745630185569364, epsilon = 1e-15);
        assert_abs_diff_eq!(m.beta(), 0.680345652944482420, epsilon = 1e-15);
    }

    #[test]
    fn beta_is_monotone_from_half_toward_one() {
        let mut prev = 0.5;
        for k in 1..=100 {
            let a = 0.2 * k as f64;
            let b = GasModel::new(a).unwrap().beta();
            assert!(b > prev && b < 1.0, "beta not monotone at a = {a}");
            prev = b;
        }
        // Large-slope limit.
        assert!(GasModel::new(1e8).unwrap().beta() > 1.0 - 1e-7);
    }

    #[test]
    fn beta_orthogonality_in_velocity_variable() {
        // int rho_C(C) (C^2 - beta) dC = 0 defines beta.
        for a in [0.0, 0.3, 1.0, 2.5] {
            let m = GasModel::new(a).unwrap();
            let g = CutGrid::graded(0.0, 12.0, 24, 12, 2, 0).unwrap();
            let v = 2.0 * g.integrate(|c| m.weight_c(c) * (c * c - m.beta()));
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn velocity_map_round_trip() {
        let m = GasModel::new(0.5).unwrap();
        assert_eq!(m.c_of_mu(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(m.c_of_mu(1.0).unwrap(), 2.0, epsilon = 1e-15);

        let m = GasModel::new(1.0).unwrap();
        let mu = m.mu_of_c(3.0);
        assert_abs_diff_eq!(mu, 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(m.c_of_mu(mu).unwrap(), 3.0, epsilon = 1e-14);

        // Odd and strictly increasing.
        let mut prev = f64::NEG_INFINITY;
        for k in -40..=40 {
            let mu = 0.024 * k as f64;
            let c = m.c_of_mu(mu).unwrap();
            assert_abs_diff_eq!(c, -m.c_of_mu(-mu).unwrap(), epsilon = 1e-15);
            assert!(c > prev);
            prev = c;
        }
        assert!(m.c_of_mu(1.0).is_err());
        assert!(m.c_of_mu(-1.2).is_err());
    }

    #[test]
    fn weight_rho_values_and_endpoint_decay() {
        let m = GasModel::new(1.0).unwrap();
        assert_abs_diff_eq!(m.weight_rho(0.0), 1.0, epsilon = 1e-15);
        // C(0.5) = 1, (1 - 0.5)^{-3} = 8.
        assert_abs_diff_eq!(m.weight_rho(0.5), 2.943035529371539, epsilon = 1e-14);
        assert_eq!(m.weight_rho(1.0), 0.0);
        // rho * C^n still dies at the endpoint.
        let mu = 1.0 - 1e-3;
        let c = m.c_of_mu(mu).unwrap();
        assert!(m.weight_rho(mu) * c.powi(8) < 1e-200);
        // Even.
        assert_eq!(m.weight_rho(0.3), m.weight_rho(-0.3));
    }

    #[test]
    fn kernel_symmetry_and_values() {
        let m = GasModel::new(1.0).unwrap();
        let q00 = m.kernel_q(0.0, 0.0).unwrap();
        assert_abs_diff_eq!(q00, m.r0() + m.r2() * m.beta() * m.beta(), epsilon = 1e-15);
        assert_eq!(
            m.kernel_q(0.3, -0.7).unwrap(),
            m.kernel_q(-0.7, 0.3).unwrap()
        );
        // Frozen from a 30-digit evaluation: r0 + r1 + r2 (1 - beta)^2 at a = 1.
        assert_abs_diff_eq!(
            m.kernel_q(0.5, 0.5).unwrap(),
            0.940789701807585394,
            epsilon = 1e-14
        );
    }

    #[test]
    fn projection_fixes_invariants() {
        let m = GasModel::new(1.0).unwrap();
        let g = default_grid(&m);
        let p = m.project(&g, |_| 1.0).unwrap();
        assert_abs_diff_eq!(p.c0, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.c1, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.c2, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn projection_of_odd_cube() {
        // K C^3 = <C, C^3>/<C, C> * C with <C, C^3> = 3 sqrt(pi)/4 + 2a.
        let a = 1.0;
        let m = GasModel::new(a).unwrap();
        let g = default_grid(&m);
        let p = m
            .project(&g, |mu| m.c_of_mu(mu).unwrap().powi(3))
            .unwrap();
        let expected_c1 = m.r1() * (0.75 * SQRT_PI + 2.0 * a);
        assert_abs_diff_eq!(p.c0, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.c1, expected_c1, epsilon = 1e-10);
        assert_abs_diff_eq!(p.c2, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn projection_annihilates_streaming_term() {
        // K [mu (C^2 - 3/2)] = 0: the odd moment reduces to the Gaussian
        // identity int e^{-C^2} C^2 (C^2 - 3/2) dC = 0, independent of a.
        for a in [0.1, 1.0, 2.0] {
            let m = GasModel::new(a).unwrap();
            let g = default_grid(&m);
            let p = m
                .project(&g, |mu| {
                    let c = m.c_of_mu(mu).unwrap();
                    mu * (c * c - 1.5)
                })
                .unwrap();
            assert_abs_diff_eq!(p.c0, 0.0, epsilon = 1e-11);
            assert_abs_diff_eq!(p.c1, 0.0, epsilon = 1e-11);
            assert_abs_diff_eq!(p.c2, 0.0, epsilon = 1e-11);
        }
    }

    #[test]
    fn projection_idempotent_and_conservative_on_random_polynomials() {
        let mut rng = StdRng::seed_from_u64(0x5eed);
        let m = GasModel::new(0.7).unwrap();
        let g = default_grid(&m);
        for _ in 0..20 {
            let coeffs: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let h = |mu: f64| {
                let c = m.c_unchecked(mu);
                coeffs.iter().rev().fold(0.0, |acc, &ck| acc * c + ck)
            };
            let p = m.project(&g, h).unwrap();
            let pp = m.project(&g, |mu| p.eval(&m, mu)).unwrap();
            // Idempotence.
            assert_abs_diff_eq!(p.c0, pp.c0, epsilon = 1e-9);
            assert_abs_diff_eq!(p.c1, pp.c1, epsilon = 1e-9);
            assert_abs_diff_eq!(p.c2, pp.c2, epsilon = 1e-9);
            // Conservation: <psi, Kh - h> = 0 for psi in {1, C, C^2 - beta}.
            for k in 0..3 {
                let psi = |mu: f64| {
                    let c = m.c_unchecked(mu);
                    match k {
                        0 => 1.0,
                        1 => c,
                        _ => c * c - m.beta(),
                    }
                };
                let moment = g.integrate(|mu| {
                    m.weight_rho(mu) * psi(mu) * (p.eval(&m, mu) - h(mu))
                });
                assert_abs_diff_eq!(moment, 0.0, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn variable_change_consistency() {
        // int rho(mu) f(C(mu)) dmu = int e^{-C^2}(1 + a|C|) f(C) dC
        // for f in {1, C^2, C^4}: sqrt(pi) + a, sqrt(pi)/2 + a, 3 sqrt(pi)/4 + 2a.
        for a in [0.2, 1.0, 3.0] {
            let m = GasModel::new(a).unwrap();
            let g = default_grid(&m);
            let moments = [
                (0, SQRT_PI + a),
                (2, 0.5 * SQRT_PI + a),
                (4, 0.75 * SQRT_PI + 2.0 * a),
            ];
            for (n, expected) in moments {
                let v = g.integrate(|mu| m.weight_rho(mu) * m.c_unchecked(mu).powi(n));
                assert_abs_diff_eq!(v, expected, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn omega_vanishes_at_zero_slope() {
        let m = GasModel::new(0.0).unwrap();
        assert_abs_diff_eq!(m.omega(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn omega_two_integral_forms_agree() {
        for a in [0.1, 0.5, 1.0, 2.0, 5.0] {
            let m = GasModel::new(a).unwrap();
            let g = default_grid(&m);
            let mu_form = omega_mu_form(&m, &g).unwrap();
            assert_abs_diff_eq!(mu_form, m.omega(), epsilon = 1e-10);
        }
    }

    #[test]
    fn omega_matches_frozen_reference() {
        // 30-digit adaptive quadrature of the C-form.
        let cases = [
            (0.1, -0.044191575381682472),
            (1.0, -0.118630623245433010),
            (5.0, -0.069048568524227664),
        ];
        for (a, expected) in cases {
            let m = GasModel::new(a).unwrap();
            assert_abs_diff_eq!(m.omega(), expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn asymptotic_state_examples() {
        let m = GasModel::new(1.0).unwrap();
        let zero = AsymptoticState::default();
        assert_eq!(m.h_asymptotic(0.3, 0.2, &zero).unwrap(), 0.0);

        let n_only = AsymptoticState::new(1.0, 0.0, 0.0, 0.0);
        assert_eq!(m.h_asymptotic(2.0, -0.4, &n_only).unwrap(), 1.0);

        // eps_T only: 1 + (C^2 - 3/2), independent of x.
        let t_only = AsymptoticState::new(0.0, 1.0, 0.0, 0.0);
        for mu in [-0.6, 0.1, 0.8] {
            let c = m.c_of_mu(mu).unwrap();
            let expected = 1.0 + c * c - 1.5;
            for x in [0.0, 1.7, 20.0] {
                assert_abs_diff_eq!(
                    m.h_asymptotic(x, mu, &t_only).unwrap(),
                    expected,
                    epsilon = 1e-15
                );
            }
        }
        assert!(m.h_asymptotic(-1.0, 0.1, &zero).is_err());
    }

    #[test]
    fn partial_solutions_satisfy_transport_equation() {
        let mut rng = StdRng::seed_from_u64(0xfeed);
        for a in [0.1, 1.0, 2.0] {
            let m = GasModel::new(a).unwrap();
            let g = default_grid(&m);
            for _ in 0..12 {
                let x = rng.gen_range(0.0..3.0);
                let mu = rng.gen_range(-0.95..0.95) * m.alpha();
                for idx in 0..4 {
                    let r = m
                        .transport_residual_with_derivative(
                            &g,
                            |x, mu| m.partial_solution(idx, x, mu),
                            |x, mu| m.partial_solution_dx(idx, x, mu),
                            x,
                            mu,
                        )
                        .unwrap();
                    assert!(
                        r.abs() < 1e-9,
                        "partial solution {idx} residual {r:e} at a={a}, x={x}, mu={mu}"
                    );
                }
            }
        }
    }

    #[test]
    fn numeric_derivative_residual_at_moderate_velocity() {
        // The black-box residual with a differenced derivative still reaches
        // 1e-10 where h is O(1).
        let m = GasModel::new(1.0).unwrap();
        let g = default_grid(&m);
        let r = m
            .transport_residual(&g, |x, mu| m.partial_solution(3, x, mu), 0.7, 0.2)
            .unwrap();
        assert!(r.abs() < 1e-10, "residual {r:e}");
    }

    #[test]
    fn asymptotic_distribution_satisfies_transport_equation() {
        let m = GasModel::new(1.0).unwrap();
        let g = default_grid(&m);
        let state = AsymptoticState::new(0.3, -0.2, 0.5, 1.0);
        let h = |x: f64, mu: f64| m.h_asymptotic(x, mu, &state).unwrap();
        for (x, mu) in [(0.7, 0.2), (0.0, -0.5), (3.0, 0.9)] {
            let r = m.transport_residual(&g, h, x, mu).unwrap();
            assert!(r.abs() < 1e-9, "residual {r:e} at ({x}, {mu})");
        }
    }

    #[test]
    fn cube_is_not_a_solution() {
        // Negative control for the residual machinery.
        let m = GasModel::new(1.0).unwrap();
        let g = default_grid(&m);
        let r = m
            .transport_residual(&g, |_, mu| m.c_unchecked(mu).powi(3), 0.7, 0.2)
            .unwrap();
        assert!(r.abs() > 1e-3, "expected nonzero residual, got {r:e}");
    }

    #[test]
    fn physical_scaling_round_trips() {
        // Argon-like numbers.
        let s = PhysicalScaling::new(300.0, 1e25, 6.63e-26, 5e9).unwrap();
        assert!(s.thermal_velocity > 0.0 && s.mean_free_path > 0.0);
        assert_abs_diff_eq!(
            s.mean_free_path * s.base_frequency,
            s.thermal_velocity,
            epsilon = 1e-9 * s.thermal_velocity
        );
        let x = 1.23e-5;
        assert_abs_diff_eq!(
            s.from_dimensionless_length(s.to_dimensionless_length(x)),
            x,
            epsilon = 1e-20
        );
        assert!(PhysicalScaling::new(-1.0, 1.0, 1.0, 1.0).is_err());
    }
}
