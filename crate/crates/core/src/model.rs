//! Saint-Venant-Exner physics in conserved variables `u = (h, hv, b)`.
//!
//! ```text
//! h_t  + (hv)_x                                          = 0
//! hv_t + (h v^2)_x + g h (h+b)_x + g h_b/r (r h + b)_x   = -tau/rho_f
//! b_t  + (q_b)_x                                         = 0
//! ```
//!
//! with the active sediment height `h_b = q_b / v`. The system is split into
//! the conservative flux `f = (hv, h v^2, q_b)` and the nonconservative
//! product `B(u) u_x` whose only nonzero row is the momentum row.

use crate::cubic::{monic_cubic_roots, CubicRoots};
use crate::linalg::{self, Mat3, Vec3};
use crate::math;
use crate::{Error, Result};

/// Velocities below this magnitude give `h_b = 0` in the generic
/// `q_b / v` evaluation.
pub const VELOCITY_EPS: f64 = 1e-12;

/// Relative eigenvalue separation required by [`SveParams::roe_eigen`].
pub const EIGEN_GAP_TOL: f64 = 1e-10;

/// Conserved variables at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct State {
    pub h: f64,
    pub hv: f64,
    pub b: f64,
}

impl State {
    pub const fn new(h: f64, hv: f64, b: f64) -> Self {
        Self { h, hv, b }
    }

    pub fn from_velocity(h: f64, v: f64, b: f64) -> Self {
        Self { h, hv: h * v, b }
    }

    #[inline]
    pub fn velocity(&self) -> f64 {
        self.hv / self.h
    }

    #[inline]
    pub fn to_array(self) -> Vec3 {
        [self.h, self.hv, self.b]
    }

    #[inline]
    pub fn from_array(a: Vec3) -> Self {
        Self {
            h: a[0],
            hv: a[1],
            b: a[2],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.h.is_finite() && self.hv.is_finite() && self.b.is_finite()
    }
}

/// Entropy variables `w = dS/du`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EntropyVars {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
}

impl EntropyVars {
    #[inline]
    pub fn to_array(self) -> Vec3 {
        [self.w1, self.w2, self.w3]
    }

    #[inline]
    pub fn from_array(a: Vec3) -> Self {
        Self {
            w1: a[0],
            w2: a[1],
            w3: a[2],
        }
    }
}

/// Sediment discharge closure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Discharge {
    /// `q_b = theta A_g v^3`.
    Grass { a_g: f64 },
    /// Meyer-Peter & Mueller threshold law driven by the Manning shear stress.
    Mpm { d_s: f64, theta_c: f64 },
}

/// Model constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SveParams {
    pub g: f64,
    /// Density ratio `rho_f / rho_s`.
    pub r: f64,
    pub porosity: f64,
    pub manning_n: f64,
    pub discharge: Discharge,
    pub rho_f: f64,
    /// Positivity floor for the water height.
    pub h_min: f64,
}

impl Default for SveParams {
    fn default() -> Self {
        Self {
            g: 9.81,
            r: 0.3,
            porosity: 0.4,
            manning_n: 0.0,
            discharge: Discharge::Grass { a_g: 0.01 },
            rho_f: 1.0,
            h_min: 1e-10,
        }
    }
}

/// Eigen-decomposition of the Roe matrix, eigenvalues ascending.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoeEigen {
    pub lambdas: Vec3,
    /// Columns are the right eigenvectors.
    pub right: Mat3,
    /// Rows are the left eigenvectors, `left = right^{-1}`.
    pub left: Mat3,
}

impl RoeEigen {
    /// `R f(Lambda) R^{-1}`.
    pub fn reconstruct(&self, f: impl Fn(f64) -> f64) -> Mat3 {
        let mut m = linalg::ZERO;
        let fl = [f(self.lambdas[0]), f(self.lambdas[1]), f(self.lambdas[2])];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = (0..3)
                    .map(|k| self.right[i][k] * fl[k] * self.left[k][j])
                    .sum();
            }
        }
        m
    }
}

/// Per-point quantities reused by the fluctuation kernels.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NodeData {
    pub h: f64,
    pub hv: f64,
    pub b: f64,
    pub v: f64,
    /// Active sediment height.
    pub hb: f64,
    /// Sediment discharge.
    pub qb: f64,
}

impl SveParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.g > 0.0 && self.g.is_finite()) {
            return Err(Error::Parameter("gravity must be positive"));
        }
        if !(self.r > 0.0 && self.r.is_finite()) || self.r == 1.0 {
            return Err(Error::Parameter("density ratio r must be positive and r != 1"));
        }
        if !(0.0..1.0).contains(&self.porosity) {
            return Err(Error::Parameter("porosity must lie in [0, 1)"));
        }
        if !(self.manning_n >= 0.0) {
            return Err(Error::Parameter("Manning coefficient must be nonnegative"));
        }
        if !(self.rho_f > 0.0) {
            return Err(Error::Parameter("fluid density must be positive"));
        }
        if !(self.h_min > 0.0) {
            return Err(Error::Parameter("positivity floor must be positive"));
        }
        match self.discharge {
            Discharge::Grass { a_g } => {
                if !(0.0..=1.0).contains(&a_g) {
                    return Err(Error::Parameter("Grass coefficient must lie in [0, 1]"));
                }
            }
            Discharge::Mpm { d_s, theta_c } => {
                if !(d_s > 0.0 && theta_c > 0.0) {
                    return Err(Error::Parameter("MPM needs d_s > 0 and theta_c > 0"));
                }
                if self.r >= 1.0 {
                    return Err(Error::Parameter("MPM needs r < 1 (sediment denser than fluid)"));
                }
            }
        }
        Ok(())
    }

    /// `1 / (1 - porosity)`.
    #[inline]
    pub fn porosity_factor(&self) -> f64 {
        1.0 / (1.0 - self.porosity)
    }

    #[inline]
    pub fn rho_s(&self) -> f64 {
        self.rho_f / self.r
    }

    #[inline]
    pub fn check_state(&self, u: &State) -> Result<()> {
        if u.h >= self.h_min {
            Ok(())
        } else {
            Err(Error::Positivity {
                h: u.h,
                h_min: self.h_min,
            })
        }
    }

    pub fn node_data(&self, u: &State) -> NodeData {
        let v = u.velocity();
        let (qb, hb) = self.discharge_and_active_height(u.h, v);
        NodeData {
            h: u.h,
            hv: u.hv,
            b: u.b,
            v,
            hb,
            qb,
        }
    }

    #[inline]
    fn discharge_and_active_height(&self, h: f64, v: f64) -> (f64, f64) {
        match self.discharge {
            Discharge::Grass { a_g } => {
                let c = self.porosity_factor() * a_g * v * v;
                (c * v, c)
            }
            Discharge::Mpm { .. } => {
                let qb = self.mpm_discharge(h, v);
                let hb = if v.abs() < VELOCITY_EPS { 0.0 } else { qb / v };
                (qb, hb)
            }
        }
    }

    /// `tau = rho_f g n^2 v|v| / h^{1/3}` without the positivity check.
    #[inline]
    fn tau(&self, h: f64, v: f64) -> f64 {
        let n = self.manning_n;
        self.rho_f * self.g * n * n * v * v.abs() / math::cbrt(h)
    }

    fn mpm_discharge(&self, h: f64, v: f64) -> f64 {
        let Discharge::Mpm { d_s, theta_c } = self.discharge else {
            unreachable!()
        };
        let tau = self.tau(h, v);
        let kappa = (self.rho_s() - self.rho_f) * self.g * d_s;
        let excess = tau.abs() / kappa - theta_c;
        if excess <= 0.0 {
            return 0.0;
        }
        let scale = math::sqrt(self.g * (1.0 / self.r - 1.0) * d_s * d_s * d_s);
        self.porosity_factor() * tau.signum() * 8.0 * excess * math::sqrt(excess) * scale
    }

    pub fn sediment_discharge(&self, u: &State) -> Result<f64> {
        if matches!(self.discharge, Discharge::Mpm { .. }) && self.r >= 1.0 {
            return Err(Error::Parameter("MPM needs r < 1 (sediment denser than fluid)"));
        }
        Ok(self.discharge_and_active_height(u.h, u.velocity()).0)
    }

    /// `h_b = q_b / v`; the Grass closed form `theta A_g v^2` avoids the
    /// division.
    pub fn active_sediment_height(&self, u: &State) -> f64 {
        self.discharge_and_active_height(u.h, u.velocity()).1
    }

    pub fn shear_stress(&self, u: &State) -> Result<f64> {
        self.check_state(u)?;
        Ok(self.tau(u.h, u.velocity()))
    }

    /// Right-hand side contribution `(0, -tau/rho_f, 0)`.
    pub fn friction_source(&self, u: &State) -> Vec3 {
        if self.manning_n == 0.0 {
            return [0.0; 3];
        }
        [0.0, -self.tau(u.h, u.velocity()) / self.rho_f, 0.0]
    }

    /// `(dq_b/dh, dq_b/d(hv))`.
    pub fn discharge_derivatives(&self, u: &State) -> (f64, f64) {
        let h = u.h;
        let v = u.velocity();
        match self.discharge {
            Discharge::Grass { a_g } => {
                let c = 3.0 * self.porosity_factor() * a_g * v * v / h;
                (-c * v, c)
            }
            Discharge::Mpm { d_s, theta_c } => {
                let tau = self.tau(h, v);
                let kappa = (self.rho_s() - self.rho_f) * self.g * d_s;
                let excess = tau.abs() / kappa - theta_c;
                if excess <= 0.0 {
                    return (0.0, 0.0);
                }
                let scale = math::sqrt(self.g * (1.0 / self.r - 1.0) * d_s * d_s * d_s);
                let dq_dtau =
                    self.porosity_factor() * 12.0 * math::sqrt(excess) * scale / kappa;
                let n = self.manning_n;
                let dtau_dh = -7.0 / 3.0 * tau / h;
                let dtau_dhv = 2.0 * self.rho_f * self.g * n * n * v.abs() / (h * math::cbrt(h));
                (dq_dtau * dtau_dh, dq_dtau * dtau_dhv)
            }
        }
    }

    /// `f(u) = (hv, h v^2, q_b)`.
    pub fn conservative_flux(&self, u: &State) -> Result<Vec3> {
        self.check_state(u)?;
        let d = self.node_data(u);
        Ok([d.hv, d.hv * d.v, d.qb])
    }

    /// `B(u)`: only the momentum row is nonzero.
    pub fn noncons_matrix(&self, u: &State) -> Mat3 {
        let hb = self.active_sediment_height(u);
        let g = self.g;
        [
            [0.0; 3],
            [g * (u.h + hb), 0.0, g * (u.h + hb / self.r)],
            [0.0; 3],
        ]
    }

    /// `A(u) = f_u + B(u)`.
    pub fn generalized_jacobian(&self, u: &State) -> Mat3 {
        let v = u.velocity();
        let hb = self.active_sediment_height(u);
        let (dq_dh, dq_dhv) = self.discharge_derivatives(u);
        let g = self.g;
        [
            [0.0, 1.0, 0.0],
            [g * (u.h + hb) - v * v, 2.0 * v, g * (u.h + hb / self.r)],
            [dq_dh, dq_dhv, 0.0],
        ]
    }

    /// `S = r h v^2 / 2 + g (r h^2 + b^2) / 2 + r g h b`.
    pub fn entropy(&self, u: &State) -> f64 {
        let r = self.r;
        let v = u.velocity();
        0.5 * r * u.h * v * v + 0.5 * self.g * (r * u.h * u.h + u.b * u.b) + r * self.g * u.h * u.b
    }

    /// `q = r hv (v^2/2 + g(h+b)) + g q_b (r h + b)`.
    pub fn entropy_flux(&self, u: &State) -> f64 {
        let d = self.node_data(u);
        let r = self.r;
        let g = self.g;
        r * d.hv * (0.5 * d.v * d.v + g * (d.h + d.b)) + g * d.qb * (r * d.h + d.b)
    }

    pub fn entropy_vars(&self, u: &State) -> EntropyVars {
        let v = u.velocity();
        let r = self.r;
        let g = self.g;
        EntropyVars {
            w1: r * (g * (u.h + u.b) - 0.5 * v * v),
            w2: r * v,
            w3: g * (r * u.h + u.b),
        }
    }

    /// Inverse of [`entropy_vars`](Self::entropy_vars):
    /// `v = w2/r`, `h + b = (w1/r + v^2/2)/g`, `r h + b = w3/g`.
    pub fn state_from_entropy_vars(&self, w: &EntropyVars) -> Result<State> {
        if self.r == 1.0 {
            return Err(Error::Parameter("entropy variables are not invertible for r = 1"));
        }
        let r = self.r;
        let v = w.w2 / r;
        let total = (w.w1 / r + 0.5 * v * v) / self.g;
        let weighted = w.w3 / self.g;
        let h = (weighted - total) / (r - 1.0);
        if !(h > self.h_min) {
            return Err(Error::Inversion { h });
        }
        Ok(State {
            h,
            hv: h * v,
            b: total - h,
        })
    }

    /// `H = du/dw`, the analytic Jacobian of
    /// [`state_from_entropy_vars`](Self::state_from_entropy_vars).
    pub fn entropy_hessian_inverse(&self, w: &EntropyVars) -> Result<Mat3> {
        let u = self.state_from_entropy_vars(w)?;
        Ok(self.hessian_inverse_at(&u))
    }

    /// `du/dw` at a known state.
    pub(crate) fn hessian_inverse_at(&self, u: &State) -> Mat3 {
        let r = self.r;
        let g = self.g;
        let v = u.velocity();
        let rg = r * g;
        let dv = [0.0, 1.0 / r, 0.0];
        let dtotal = [1.0 / rg, v / rg, 0.0];
        let dweighted = [0.0, 0.0, 1.0 / g];
        let inv = 1.0 / (r - 1.0);
        let dh = [
            (dweighted[0] - dtotal[0]) * inv,
            (dweighted[1] - dtotal[1]) * inv,
            (dweighted[2] - dtotal[2]) * inv,
        ];
        let db = linalg::sub(&dtotal, &dh);
        let dhv = [
            v * dh[0] + u.h * dv[0],
            v * dh[1] + u.h * dv[1],
            v * dh[2] + u.h * dv[2],
        ];
        [dh, dhv, db]
    }

    /// Approximate Roe average: arithmetic `h` and `b`, square-root weighted
    /// velocity.
    pub fn roe_average(&self, ul: &State, ur: &State) -> Result<State> {
        self.check_state(ul)?;
        self.check_state(ur)?;
        Ok(self.roe_average_unchecked(ul, ur))
    }

    #[inline]
    pub(crate) fn roe_average_unchecked(&self, ul: &State, ur: &State) -> State {
        let sl = math::sqrt(ul.h);
        let sr = math::sqrt(ur.h);
        let h = 0.5 * (ul.h + ur.h);
        let v = (sl * ul.velocity() + sr * ur.velocity()) / (sl + sr);
        State {
            h,
            hv: h * v,
            b: 0.5 * (ul.b + ur.b),
        }
    }

    fn jacobian_roots(&self, u: &State) -> CubicRoots {
        let a = self.generalized_jacobian(u);
        // det(lambda I - A) for A = [[0,1,0],[a21,a22,a23],[a31,a32,0]]
        let a2 = -a[1][1];
        let a1 = -(a[1][0] + a[1][2] * a[2][1]);
        let a0 = -a[1][2] * a[2][0];
        monic_cubic_roots(a2, a1, a0)
    }

    /// Largest eigenvalue modulus of `A(u)`.
    pub fn spectral_radius(&self, u: &State) -> f64 {
        self.jacobian_roots(u).spectral_radius()
    }

    /// Eigensystem of `A(u_tilde)`: eigenvalues from Cardano's formula,
    /// eigenvectors in closed form.
    pub fn roe_eigen(&self, ut: &State) -> Result<RoeEigen> {
        self.check_state(ut)?;
        let lambdas = match self.jacobian_roots(ut) {
            CubicRoots::Real(l) => l,
            CubicRoots::Complex { .. } => return Err(Error::NotHyperbolic),
        };
        let scale = lambdas.iter().fold(1.0f64, |m, l| m.max(l.abs()));
        let gap = (lambdas[1] - lambdas[0]).min(lambdas[2] - lambdas[1]);
        if gap < EIGEN_GAP_TOL * scale {
            return Err(Error::Degenerate { gap });
        }
        let v = ut.velocity();
        let hb = self.active_sediment_height(ut);
        let c1 = self.g * (ut.h + hb);
        let c2 = self.g * (ut.h + hb / self.r);
        let mut right = linalg::ZERO;
        let mut left = linalg::ZERO;
        for i in 0..3 {
            let li = lambdas[i];
            right[0][i] = 1.0;
            right[1][i] = li;
            right[2][i] = ((v - li) * (v - li) - c1) / c2;

            let lj = lambdas[(i + 1) % 3];
            let lk = lambdas[(i + 2) % 3];
            let den = (li - lj) * (li - lk);
            left[i] = [(c1 - v * v + lj * lk) / den, (2.0 * v - lj - lk) / den, c2 / den];
        }
        Ok(RoeEigen {
            lambdas,
            right,
            left,
        })
    }

    /// `max |lambda|` over `A(u_L)`, `A(u_R)` and `A(u_tilde)`.
    pub fn max_wave_speed(&self, ul: &State, ur: &State) -> f64 {
        let ut = self.roe_average_unchecked(ul, ur);
        self.spectral_radius(ul)
            .max(self.spectral_radius(ur))
            .max(self.spectral_radius(&ut))
    }

    /// `|A H - (A H)^T|_max` with `H = du/dw`: zero iff the entropy Hessian
    /// symmetrizes the generalized Jacobian.
    pub fn symmetrization_defect(&self, u: &State) -> Result<f64> {
        self.check_state(u)?;
        let ah = linalg::mat_mul(&self.generalized_jacobian(u), &self.hessian_inverse_at(u));
        Ok(linalg::asymmetry(&ah))
    }
}
