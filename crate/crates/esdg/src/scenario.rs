//! The three experiment setups: manufactured solution, migrating dune in a
//! periodic channel, and a lake at rest over a discontinuous sediment layer.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use esdg_core::linalg::{self, Vec3};
use esdg_core::{DGField, Semidiscretization, SourceTerm, State, SveParams};

use crate::error::AppError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Manufactured,
    Channel,
    WellBalanced,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Manufactured => "manufactured",
            Self::Channel => "channel",
            Self::WellBalanced => "well_balanced",
        }
    }

    pub fn build(self, p: SveParams) -> Scenario {
        match self {
            Self::Manufactured => manufactured_scenario(p),
            Self::Channel => channel_scenario(p),
            Self::WellBalanced => well_balanced_scenario(p),
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = AppError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "manufactured" => Ok(Self::Manufactured),
            "channel" => Ok(Self::Channel),
            "well_balanced" => Ok(Self::WellBalanced),
            _ => Err(AppError::config(
                "scheme.scenario",
                format!("unknown scenario `{s}` (manufactured, channel, well_balanced)"),
            )),
        }
    }
}

type InitialFn = dyn Fn(f64) -> State + Send + Sync;
type ExactFn = dyn Fn(f64, f64) -> State + Send + Sync;

#[derive(Clone)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub domain: (f64, f64),
    pub params: SveParams,
    pub source: SourceTerm,
    /// The initial data jumps at element interfaces; endpoint nodes take the
    /// one-sided limit from inside their element.
    pub piecewise: bool,
    initial: Arc<InitialFn>,
    exact: Option<Arc<ExactFn>>,
}

impl fmt::Debug for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Scenario")
            .field("kind", &self.kind)
            .field("domain", &self.domain)
            .field("params", &self.params)
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

impl Scenario {
    pub fn initial_state(&self, x: f64) -> State {
        (self.initial)(x)
    }

    pub fn exact_state(&self, x: f64, t: f64) -> Option<State> {
        self.exact.as_ref().map(|e| e(x, t))
    }

    pub fn has_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn domain_length(&self) -> f64 {
        self.domain.1 - self.domain.0
    }

    /// Nodal initial field for `semi`.
    pub fn initial_field(&self, semi: &Semidiscretization) -> esdg_core::Result<DGField> {
        if !self.piecewise {
            return semi.interpolate_ic(|x| self.initial_state(x));
        }
        let mesh = semi.mesh();
        let nodes = semi.basis().nodes();
        let last = nodes.len() - 1;
        let mut field = semi.zero_field();
        for k in 0..mesh.n_elements() {
            for (i, &xi) in nodes.iter().enumerate() {
                let xi = match i {
                    _ if last == 0 => xi,
                    0 => xi + 1e-12,
                    i if i == last => xi - 1e-12,
                    _ => xi,
                };
                field.set(k, i, self.initial_state(mesh.map(k, xi)));
            }
        }
        semi.check_field(&field)?;
        Ok(field)
    }
}

const MMS_K: f64 = 2.0 * SQRT_2 * PI;
const MMS_OMEGA: f64 = 2.0 * PI;
const MMS_VELOCITY: f64 = 0.5;

/// Exact fields of the manufactured solution and their derivatives.
struct MmsPoint {
    u: State,
    u_t: Vec3,
    u_x: Vec3,
}

fn mms_point(x: f64, t: f64) -> MmsPoint {
    let (skx, ckx) = (MMS_K * x).sin_cos();
    let (swt, cwt) = (MMS_OMEGA * t).sin_cos();
    let total = 4.0 + ckx * cwt;
    let b = 1.0 + skx;
    let h = total - b;
    let total_x = -MMS_K * skx * cwt;
    let total_t = -MMS_OMEGA * ckx * swt;
    let b_x = MMS_K * ckx;
    let h_x = total_x - b_x;
    let v = MMS_VELOCITY;
    MmsPoint {
        u: State::from_velocity(h, v, b),
        u_t: [total_t, v * total_t, 0.0],
        u_x: [h_x, v * h_x, b_x],
    }
}

/// Exact manufactured state.
pub fn manufactured_exact(x: f64, t: f64) -> State {
    mms_point(x, t).u
}

/// `s = u_t + A(u) u_x - friction(u)` for the exact manufactured fields.
pub fn manufactured_source(p: &SveParams, x: f64, t: f64) -> Vec3 {
    let m = mms_point(x, t);
    let flux_part = linalg::mat_vec(&p.generalized_jacobian(&m.u), &m.u_x);
    let friction = p.friction_source(&m.u);
    [
        m.u_t[0] + flux_part[0] - friction[0],
        m.u_t[1] + flux_part[1] - friction[1],
        m.u_t[2] + flux_part[2] - friction[2],
    ]
}

/// `u_t + f(u)_x + B(u) u_x - friction - s` of the exact fields with all
/// derivatives taken by central differences. Small for a correct source.
pub fn manufactured_residual(p: &SveParams, x: f64, t: f64) -> Vec3 {
    let e = 1e-5;
    let u = manufactured_exact(x, t);
    let (ul, ur) = (manufactured_exact(x - e, t), manufactured_exact(x + e, t));
    let (ub, uf) = (manufactured_exact(x, t - e), manufactured_exact(x, t + e));
    let flux = |s: &State| p.conservative_flux(s).expect("exact state is positive");
    let fx = linalg::scale(0.5 / e, &linalg::sub(&flux(&ur), &flux(&ul)));
    let ux = linalg::scale(0.5 / e, &linalg::sub(&ur.to_array(), &ul.to_array()));
    let ut = linalg::scale(0.5 / e, &linalg::sub(&uf.to_array(), &ub.to_array()));
    let bux = linalg::mat_vec(&p.noncons_matrix(&u), &ux);
    let friction = p.friction_source(&u);
    let s = manufactured_source(p, x, t);
    [0, 1, 2].map(|c| ut[c] + fx[c] + bux[c] - friction[c] - s[c])
}

pub fn manufactured_scenario(p: SveParams) -> Scenario {
    Scenario {
        kind: ScenarioKind::Manufactured,
        domain: (0.0, SQRT_2),
        params: p,
        source: SourceTerm::Custom(Arc::new(|x, t, _u, p| manufactured_source(p, x, t))),
        piecewise: false,
        initial: Arc::new(|x| manufactured_exact(x, 0.0)),
        exact: Some(Arc::new(manufactured_exact)),
    }
}

/// Bed elevation of the initial dune.
pub fn channel_bed(x: f64) -> f64 {
    if (300.0..=500.0).contains(&x) {
        let s = (PI * (x - 300.0) / 200.0).sin();
        s * s
    } else {
        0.0
    }
}

pub fn channel_scenario(p: SveParams) -> Scenario {
    let source = if p.manning_n > 0.0 {
        SourceTerm::Friction
    } else {
        SourceTerm::None
    };
    Scenario {
        kind: ScenarioKind::Channel,
        domain: (0.0, 1000.0),
        params: p,
        source,
        piecewise: false,
        initial: Arc::new(|x| {
            let b = channel_bed(x);
            State::new(10.0 - b, 10.0, b)
        }),
        exact: None,
    }
}

pub fn well_balanced_scenario(p: SveParams) -> Scenario {
    let lake = |x: f64| {
        let b = if x.abs() < 0.5 { 0.4 } else { 0.0 };
        State::new(0.5 - b, 0.0, b)
    };
    Scenario {
        kind: ScenarioKind::WellBalanced,
        domain: (-2.0, 2.0),
        params: p,
        source: SourceTerm::None,
        piecewise: true,
        initial: Arc::new(lake),
        exact: Some(Arc::new(move |x, _t| lake(x))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn manufactured_exact_at_origin() {
        let u = manufactured_exact(0.0, 0.0);
        assert!((u.h - 4.0).abs() < 1e-15);
        assert!((u.velocity() - 0.5).abs() < 1e-15);
        assert!((u.b - 1.0).abs() < 1e-15);
    }

    #[test]
    fn manufactured_source_passes_residual_oracle() {
        let p = SveParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let x = rng.gen_range(0.0..SQRT_2);
            let t = rng.gen_range(0.0..1.0);
            let r = manufactured_residual(&p, x, t);
            assert!(r.iter().all(|c| c.abs() <= 1e-6), "{x} {t} {r:?}");
        }
    }

    #[test]
    fn manufactured_source_with_friction_passes_oracle() {
        let p = SveParams {
            manning_n: 0.02,
            ..SveParams::default()
        };
        for (x, t) in [(0.1, 0.2), (0.9, 0.7), (1.3, 0.05)] {
            let r = manufactured_residual(&p, x, t);
            assert!(r.iter().all(|c| c.abs() <= 1e-6), "{r:?}");
        }
    }

    #[test]
    fn bed_equation_source_vanishes() {
        // b is steady and v constant, so q_b is constant
        let p = SveParams::default();
        for x in [0.0, 0.3, 1.0] {
            assert!(manufactured_source(&p, x, 0.4)[2].abs() < 1e-13);
        }
    }

    #[test]
    fn water_source_is_continuity_residual() {
        let p = SveParams::default();
        let (x, t) = (0.37, 0.21);
        let e = 1e-6;
        let h = |x: f64, t: f64| manufactured_exact(x, t).h;
        let h_t = (h(x, t + e) - h(x, t - e)) / (2.0 * e);
        let hv_x = 0.5 * (h(x + e, t) - h(x - e, t)) / (2.0 * e);
        assert!((manufactured_source(&p, x, t)[0] - (h_t + hv_x)).abs() < 1e-6);
    }

    #[test]
    fn channel_examples() {
        let s = channel_scenario(SveParams::default());
        let u = s.initial_state(400.0);
        assert!((u.b - 1.0).abs() < 1e-15 && (u.h - 9.0).abs() < 1e-15);
        assert!((u.velocity() - 10.0 / 9.0).abs() < 1e-15);
        let u = s.initial_state(0.0);
        assert_eq!((u.h, u.velocity(), u.b), (10.0, 1.0, 0.0));
        assert!(channel_bed(300.0).abs() < 1e-30 && channel_bed(500.0) < 1e-30);
        assert!(!s.has_exact());
    }

    #[test]
    fn well_balanced_examples() {
        let s = well_balanced_scenario(SveParams::default());
        assert!((s.initial_state(0.0).h - 0.1).abs() < 1e-15);
        assert_eq!(s.initial_state(1.0).h, 0.5);
        for x in [-1.9, -0.4, 0.0, 0.7] {
            let u = s.initial_state(x);
            assert_eq!(u.hv, 0.0);
            assert!((u.h + u.b - 0.5).abs() < 1e-15);
        }
    }
}
