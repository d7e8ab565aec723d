//! Fluctuations `(D-, D+)` for the nonconservative DGSEM.
//!
//! Two entropy-conservative (EC) constructions are provided:
//!
//! - [`ec_fluctuation_quadrature`] integrates `A H` along the straight line
//!   between the entropy variables of the two states, with a Gauss rule;
//! - [`ec_fluctuation_closed_form`] is the algebraic pair built from the
//!   auxiliary variables `(h, h_b, b)`, `f* = ({hv}, {hv}{v}, {q_b})` and
//!   `B-/+ = B(u_L/R)/2`.
//!
//! Entropy-stable (ES) fluctuations add `-/+ Q [u]` with a viscosity matrix
//! `Q`. [`blend_viscosity`] mixes just enough LLF viscosity into an
//! arbitrary `Q` (here: Roe) to make the interface entropy production
//! nonpositive.
//!
//! Sign conventions: `[x] = x_R - x_L`, `{x} = (x_L + x_R)/2`. The entropy
//! *production* of a viscosity matrix is `-[w]^T Q [u]`; LLF always has
//! nonpositive production.

use crate::linalg::{self, Mat3, Vec3};
use crate::model::{NodeData, State, SveParams};
use crate::sbp::GaussRule;
use crate::{Error, Result};

/// Left/right contributions of one state pair.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FluctuationPair {
    pub d_minus: Vec3,
    pub d_plus: Vec3,
}

/// Entropy-conservative fluctuation constructor.
#[derive(Debug, Clone, PartialEq)]
pub enum EcFluctuation {
    ClosedForm,
    Quadrature(GaussRule),
}

impl EcFluctuation {
    /// Path-integral constructor with an `n`-point Gauss rule.
    pub fn quadrature(n_points: usize) -> Result<Self> {
        Ok(Self::Quadrature(GaussRule::new(n_points)?))
    }

    pub fn evaluate(&self, p: &SveParams, ul: &State, ur: &State) -> Result<FluctuationPair> {
        match self {
            Self::ClosedForm => ec_fluctuation_closed_form(p, ul, ur),
            Self::Quadrature(rule) => ec_fluctuation_quadrature(p, ul, ur, rule),
        }
    }

    /// Which state-space path the fluctuation integrates along.
    pub fn path(&self) -> EcPath {
        match self {
            Self::ClosedForm => EcPath::AuxiliaryVariables,
            Self::Quadrature(_) => EcPath::EntropyVariables,
        }
    }
}

/// Linear state-space paths used by the two EC constructors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EcPath {
    /// `Phi(s) = w_L + s [w]`.
    EntropyVariables,
    /// `Phi(s) = v_L + s [v]` with `v = (h, h_b, b)`.
    AuxiliaryVariables,
}

/// Closed-form EC pair. Inputs must satisfy the positivity floor.
pub fn ec_fluctuation_closed_form(p: &SveParams, ul: &State, ur: &State) -> Result<FluctuationPair> {
    p.check_state(ul)?;
    p.check_state(ur)?;
    let l = p.node_data(ul);
    let r = p.node_data(ur);
    Ok(FluctuationPair {
        d_minus: closed_form_minus(p, &l, &r),
        d_plus: closed_form_plus(p, &l, &r),
    })
}

/// `D-(u_L, u_R) = B(u_L)[v]/2 + f* - f(u_L)`.
#[inline]
pub(crate) fn closed_form_minus(p: &SveParams, l: &NodeData, r: &NodeData) -> Vec3 {
    let avg_hv = 0.5 * (l.hv + r.hv);
    let avg_v = 0.5 * (l.v + r.v);
    let avg_qb = 0.5 * (l.qb + r.qb);
    let half_g = 0.5 * p.g;
    [
        avg_hv - l.hv,
        half_g * (l.h + l.hb) * (r.h - l.h)
            + half_g * (l.h + l.hb / p.r) * (r.b - l.b)
            + (avg_hv * avg_v - l.hv * l.v),
        avg_qb - l.qb,
    ]
}

/// `D+(u_L, u_R) = B(u_R)[v]/2 + f(u_R) - f*`.
#[inline]
pub(crate) fn closed_form_plus(p: &SveParams, l: &NodeData, r: &NodeData) -> Vec3 {
    let avg_hv = 0.5 * (l.hv + r.hv);
    let avg_v = 0.5 * (l.v + r.v);
    let avg_qb = 0.5 * (l.qb + r.qb);
    let half_g = 0.5 * p.g;
    [
        r.hv - avg_hv,
        half_g * (r.h + r.hb) * (r.h - l.h)
            + half_g * (r.h + r.hb / p.r) * (r.b - l.b)
            + (r.hv * r.v - avg_hv * avg_v),
        r.qb - avg_qb,
    ]
}

/// Point on the straight entropy-variable path for Gauss node `q`.
///
/// Nodes in the right half of the rule are measured from `w_R`, the middle
/// node is the plain average, so that swapping the states visits bitwise
/// identical points.
#[inline]
fn path_point(rule: &GaussRule, q: usize, wl: &Vec3, wr: &Vec3, jump: &Vec3) -> Vec3 {
    let n = rule.n_points();
    let s = rule.nodes();
    if 2 * q + 1 == n {
        [0.5 * (wl[0] + wr[0]), 0.5 * (wl[1] + wr[1]), 0.5 * (wl[2] + wr[2])]
    } else if 2 * q + 1 < n {
        [wl[0] + s[q] * jump[0], wl[1] + s[q] * jump[1], wl[2] + s[q] * jump[2]]
    } else {
        let t = s[n - 1 - q];
        [wr[0] - t * jump[0], wr[1] - t * jump[1], wr[2] - t * jump[2]]
    }
}

/// Path-integral EC pair:
/// `D- = int (1-s) A H(Phi(s)) ds [w]`, `D+ = int s A H(Phi(s)) ds [w]`.
pub fn ec_fluctuation_quadrature(
    p: &SveParams,
    ul: &State,
    ur: &State,
    rule: &GaussRule,
) -> Result<FluctuationPair> {
    p.check_state(ul)?;
    p.check_state(ur)?;
    let wl = p.entropy_vars(ul).to_array();
    let wr = p.entropy_vars(ur).to_array();
    let jump = linalg::sub(&wr, &wl);
    let n = rule.n_points();
    let s = rule.nodes();
    let mut d_minus = [0.0; 3];
    let mut d_plus = [0.0; 3];
    for q in 0..n {
        let w = crate::EntropyVars::from_array(path_point(rule, q, &wl, &wr, &jump));
        let u = p
            .state_from_entropy_vars(&w)
            .map_err(|e| match e {
                Error::Inversion { h } => Error::Path { s: s[q], h },
                other => other,
            })?;
        // A H [w] = A du/ds along the path
        let du = linalg::mat_vec(&p.hessian_inverse_at(&u), &jump);
        let y = linalg::mat_vec(&p.generalized_jacobian(&u), &du);
        let wq = rule.weights()[q];
        let (right, left) = (s[q], s[n - 1 - q]);
        for c in 0..3 {
            d_minus[c] += wq * left * y[c];
            d_plus[c] += wq * right * y[c];
        }
    }
    Ok(FluctuationPair { d_minus, d_plus })
}

/// `w_L^T D- + w_R^T D+ - (q_R - q_L)`; zero for an EC pair.
pub fn ec_residual(p: &SveParams, ul: &State, ur: &State, pair: &FluctuationPair) -> f64 {
    let wl = p.entropy_vars(ul).to_array();
    let wr = p.entropy_vars(ur).to_array();
    linalg::dot(&wl, &pair.d_minus) + linalg::dot(&wr, &pair.d_plus)
        - (p.entropy_flux(ur) - p.entropy_flux(ul))
}

/// `q_R - q_L - w_L^T D- - w_R^T D+`: the entropy produced by an interface
/// in the semidiscrete entropy balance. Equals `-[w]^T Q [u]` for an ES pair.
pub fn interface_entropy_production(
    p: &SveParams,
    ul: &State,
    ur: &State,
    pair: &FluctuationPair,
) -> f64 {
    -ec_residual(p, ul, ur, pair)
}

/// `D- + D+ - int_0^1 A(Phi) dPhi/ds ds` along the path belonging to the
/// constructor, evaluated with `rule` (at least five points).
pub fn path_conservation_residual(
    p: &SveParams,
    ul: &State,
    ur: &State,
    pair: &FluctuationPair,
    path: EcPath,
    rule: &GaussRule,
) -> Result<Vec3> {
    if rule.n_points() < 5 {
        return Err(Error::Config("path residual needs a rule with at least 5 points".into()));
    }
    let mut integral = [0.0; 3];
    match path {
        EcPath::EntropyVariables => {
            let wl = p.entropy_vars(ul).to_array();
            let wr = p.entropy_vars(ur).to_array();
            let jump = linalg::sub(&wr, &wl);
            let r = p.r;
            for (&s, &wq) in rule.nodes().iter().zip(rule.weights()) {
                let w = [wl[0] + s * jump[0], wl[1] + s * jump[1], wl[2] + s * jump[2]];
                let u = p.state_from_entropy_vars(&crate::EntropyVars::from_array(w))?;
                // differentiate the inversion formulas along the path
                let v = w[1] / r;
                let dv = jump[1] / r;
                let dtotal = (jump[0] / r + v * dv) / p.g;
                let dweighted = jump[2] / p.g;
                let dh = (dweighted - dtotal) / (r - 1.0);
                let du = [dh, dh * v + u.h * dv, dtotal - dh];
                let y = linalg::mat_vec(&p.generalized_jacobian(&u), &du);
                for c in 0..3 {
                    integral[c] += wq * y[c];
                }
            }
        }
        EcPath::AuxiliaryVariables => {
            let l = p.node_data(ul);
            let rr = p.node_data(ur);
            let fl = [l.hv, l.hv * l.v, l.qb];
            let fr = [rr.hv, rr.hv * rr.v, rr.qb];
            let (jh, jb) = (rr.h - l.h, rr.b - l.b);
            let mut row = 0.0;
            for (&s, &wq) in rule.nodes().iter().zip(rule.weights()) {
                let h = l.h + s * jh;
                let hb = l.hb + s * (rr.hb - l.hb);
                row += wq * (p.g * (h + hb) * jh + p.g * (h + hb / p.r) * jb);
            }
            integral = [fr[0] - fl[0], fr[1] - fl[1] + row, fr[2] - fl[2]];
        }
    }
    Ok([
        pair.d_minus[0] + pair.d_plus[0] - integral[0],
        pair.d_minus[1] + pair.d_plus[1] - integral[1],
        pair.d_minus[2] + pair.d_plus[2] - integral[2],
    ])
}

/// Numerical viscosity matrix `Q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViscosityMatrix {
    pub q: Mat3,
}

impl ViscosityMatrix {
    pub const ZERO: Self = Self { q: linalg::ZERO };

    pub fn scalar(c: f64) -> Self {
        Self {
            q: linalg::mat_scale(c, &linalg::IDENTITY),
        }
    }

    #[inline]
    pub fn apply(&self, x: &Vec3) -> Vec3 {
        linalg::mat_vec(&self.q, x)
    }

    /// `[w]^T Q [u]`, nonnegative for an entropy-dissipative matrix.
    pub fn dissipation(&self, p: &SveParams, ul: &State, ur: &State) -> f64 {
        let jw = linalg::sub(&p.entropy_vars(ur).to_array(), &p.entropy_vars(ul).to_array());
        let ju = linalg::sub(&ur.to_array(), &ul.to_array());
        linalg::dot(&jw, &self.apply(&ju))
    }
}

/// `Q = |lambda|_max / 2 I`.
pub fn llf_viscosity(p: &SveParams, ul: &State, ur: &State) -> ViscosityMatrix {
    ViscosityMatrix::scalar(0.5 * p.max_wave_speed(ul, ur))
}

/// `Q = R |Lambda| R^{-1} / 2` at the approximate Roe average.
pub fn roe_viscosity(p: &SveParams, ul: &State, ur: &State) -> Result<ViscosityMatrix> {
    let ut = p.roe_average(ul, ur)?;
    let eig = p.roe_eigen(&ut)?;
    Ok(ViscosityMatrix {
        q: eig.reconstruct(|l| 0.5 * l.abs()),
    })
}

/// How the blending factor is computed when the base viscosity produces
/// entropy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BlendRule {
    /// `alpha = clamp(dS / |dS_llf - dS|, 0, 1)`: the smallest convex weight
    /// satisfying the entropy inequality.
    #[default]
    Clamp,
    /// `alpha = max(dS / |dS_llf - dS|, 1)`, literally as printed in the
    /// original description of the method (always at least pure LLF).
    PaperMax,
}

/// One blending decision.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BlendReport {
    /// Entropy production `-[w]^T Q [u]` of the base viscosity.
    pub delta_s: f64,
    /// Entropy production of the LLF viscosity.
    pub delta_s_llf: f64,
    pub alpha: f64,
}

impl BlendReport {
    pub fn scale(&self) -> f64 {
        1f64.max(self.delta_s.abs()).max(self.delta_s_llf.abs())
    }

    /// `alpha dS_llf + (1 - alpha) dS`.
    pub fn blended_production(&self) -> f64 {
        self.alpha * self.delta_s_llf + (1.0 - self.alpha) * self.delta_s
    }
}

/// Blending factor from the two entropy productions.
pub fn blend_factor(delta_s: f64, delta_s_llf: f64, rule: BlendRule) -> Result<f64> {
    if !(delta_s > 0.0) {
        return Ok(0.0);
    }
    let scale = 1f64.max(delta_s.abs()).max(delta_s_llf.abs());
    if delta_s_llf > 1e-12 * scale {
        return Err(Error::BlendContract {
            delta_s,
            delta_s_llf,
        });
    }
    let denom = (delta_s_llf - delta_s).abs();
    let ratio = if denom > 0.0 { delta_s / denom } else { 1.0 };
    Ok(match rule {
        BlendRule::Clamp => ratio.clamp(0.0, 1.0),
        BlendRule::PaperMax => ratio.max(1.0),
    })
}

/// `Q_ES = alpha Q_llf + (1 - alpha) Q` with alpha chosen from the entropy
/// productions of this state pair.
pub fn blend_viscosity(
    p: &SveParams,
    ul: &State,
    ur: &State,
    q: &ViscosityMatrix,
    q_llf: &ViscosityMatrix,
    rule: BlendRule,
) -> Result<(ViscosityMatrix, BlendReport)> {
    let delta_s = -q.dissipation(p, ul, ur);
    let delta_s_llf = -q_llf.dissipation(p, ul, ur);
    let alpha = blend_factor(delta_s, delta_s_llf, rule)?;
    let q_es = if alpha == 0.0 {
        *q
    } else {
        ViscosityMatrix {
            q: linalg::mat_add(
                &linalg::mat_scale(alpha, &q_llf.q),
                &linalg::mat_scale(1.0 - alpha, &q.q),
            ),
        }
    };
    Ok((
        q_es,
        BlendReport {
            delta_s,
            delta_s_llf,
            alpha,
        },
    ))
}

/// `D-/+_ES = D-/+_EC -/+ Q [u]`.
pub fn es_fluctuation(
    ul: &State,
    ur: &State,
    ec: &FluctuationPair,
    q_es: &ViscosityMatrix,
) -> FluctuationPair {
    let ju = linalg::sub(&ur.to_array(), &ul.to_array());
    let diss = q_es.apply(&ju);
    FluctuationPair {
        d_minus: linalg::sub(&ec.d_minus, &diss),
        d_plus: linalg::add(&ec.d_plus, &diss),
    }
}
