//! Mesh, nodal solution field and the flux-differencing semidiscretization
//!
//! ```text
//! dU_i/dt = -2/(w_i dx) [ w_i sum_m 2 D_im D-(U_i, U_m)
//!                         + delta_i0 D+(U_N^{k-1}, U_0^k)
//!                         + delta_iN D-(U_N^k, U_0^{k+1}) ] + s(x_i, t)
//! ```
//!
//! on a periodic mesh. Every interface fluctuation pair is evaluated once and
//! scattered to both neighbours.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::fluctuations::{
    self, closed_form_minus, BlendReport, BlendRule, EcFluctuation, FluctuationPair,
};
use crate::linalg::{self, Vec3};
use crate::model::{NodeData, State, SveParams};
use crate::sbp::LobattoBasis;
use crate::{Error, Result};

/// Periodic 1D mesh given by its element boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    boundaries: Vec<f64>,
}

impl Mesh1D {
    pub fn uniform(x_min: f64, x_max: f64, n_elements: usize) -> Result<Self> {
        if !(x_min < x_max) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::Config(alloc::format!("invalid domain [{x_min}, {x_max}]")));
        }
        if n_elements == 0 {
            return Err(Error::Config("mesh needs at least one element".into()));
        }
        let dx = (x_max - x_min) / n_elements as f64;
        let mut boundaries: Vec<f64> = (0..=n_elements).map(|k| x_min + k as f64 * dx).collect();
        boundaries[n_elements] = x_max;
        Ok(Self { boundaries })
    }

    pub fn n_elements(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    #[inline]
    pub fn element_size(&self, k: usize) -> f64 {
        self.boundaries[k + 1] - self.boundaries[k]
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.boundaries[0], *self.boundaries.last().unwrap())
    }

    pub fn domain_length(&self) -> f64 {
        let (a, b) = self.domain();
        b - a
    }

    /// Physical position of reference coordinate `xi` in element `k`.
    #[inline]
    pub fn map(&self, k: usize, xi: f64) -> f64 {
        self.boundaries[k] + 0.5 * (xi + 1.0) * self.element_size(k)
    }
}

/// Nodal values, element-major: `values[k * n_nodes + i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DGField {
    n_elements: usize,
    n_nodes: usize,
    values: Vec<State>,
}

impl DGField {
    pub fn constant(n_elements: usize, n_nodes: usize, u: State) -> Self {
        Self {
            n_elements,
            n_nodes,
            values: vec![u; n_elements * n_nodes],
        }
    }

    pub fn zeros(n_elements: usize, n_nodes: usize) -> Self {
        Self::constant(n_elements, n_nodes, State::default())
    }

    pub fn from_values(n_elements: usize, n_nodes: usize, values: Vec<State>) -> Result<Self> {
        if values.len() != n_elements * n_nodes {
            return Err(Error::Config(alloc::format!(
                "expected {} nodal values, got {}",
                n_elements * n_nodes,
                values.len()
            )));
        }
        Ok(Self {
            n_elements,
            n_nodes,
            values,
        })
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize) -> State {
        self.values[k * self.n_nodes + i]
    }

    #[inline]
    pub fn set(&mut self, k: usize, i: usize, u: State) {
        self.values[k * self.n_nodes + i] = u;
    }

    pub fn element(&self, k: usize) -> &[State] {
        &self.values[k * self.n_nodes..(k + 1) * self.n_nodes]
    }

    pub fn values(&self) -> &[State] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [State] {
        &mut self.values
    }

    /// `self += a * x`.
    pub fn axpy(&mut self, a: f64, x: &DGField) {
        for (u, d) in self.values.iter_mut().zip(&x.values) {
            u.h += a * d.h;
            u.hv += a * d.hv;
            u.b += a * d.b;
        }
    }

    /// `self = a * self + b * x`.
    pub fn lincomb(&mut self, a: f64, b: f64, x: &DGField) {
        for (u, d) in self.values.iter_mut().zip(&x.values) {
            u.h = a * u.h + b * d.h;
            u.hv = a * u.hv + b * d.hv;
            u.b = a * u.b + b * d.b;
        }
    }

    pub fn max_abs(&self) -> Vec3 {
        self.values.iter().fold([0.0; 3], |m, u| {
            [m[0].max(u.h.abs()), m[1].max(u.hv.abs()), m[2].max(u.b.abs())]
        })
    }
}

/// Point source `s(x, t, u)` added to the right-hand side.
pub type SourceFn = dyn Fn(f64, f64, &State, &SveParams) -> Vec3 + Send + Sync;

#[derive(Clone, Default)]
pub enum SourceTerm {
    #[default]
    None,
    /// Manning bed friction `(0, -tau/rho_f, 0)`.
    Friction,
    Custom(Arc<SourceFn>),
}

impl fmt::Debug for SourceTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::None => f.write_str("None"),
            Self::Friction => f.write_str("Friction"),
            Self::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Interface coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SurfaceFluctuation {
    /// Entropy-conservative pair, no dissipation.
    Ec,
    /// EC pair plus local Lax-Friedrichs viscosity.
    EsLlf,
    /// EC pair plus Roe viscosity blended with LLF where Roe would produce
    /// entropy. Falls back to pure LLF where the Roe eigensystem degenerates.
    #[default]
    EsRoeBlend,
}

/// Per-call bookkeeping of the interface dissipation.
#[derive(Debug, Clone, Default)]
pub struct RhsDiagnostics {
    /// Largest blending factor applied.
    pub alpha_max: f64,
    /// Interfaces where the Roe eigensystem was unusable.
    pub roe_fallbacks: usize,
    /// When `Some`, every blending decision is appended as
    /// `(interface index, report)`; interface `k` sits at the right end of
    /// element `k`.
    pub blend_log: Option<Vec<(usize, BlendReport)>>,
}

impl RhsDiagnostics {
    pub fn with_log() -> Self {
        Self {
            blend_log: Some(Vec::new()),
            ..Self::default()
        }
    }

    pub fn reset(&mut self) {
        self.alpha_max = 0.0;
        self.roe_fallbacks = 0;
        if let Some(log) = self.blend_log.as_mut() {
            log.clear();
        }
    }
}

#[derive(Debug, Clone)]
pub struct Semidiscretization {
    basis: LobattoBasis,
    mesh: Mesh1D,
    params: SveParams,
    volume: EcFluctuation,
    surface_ec: EcFluctuation,
    surface: SurfaceFluctuation,
    blend_rule: BlendRule,
    source: SourceTerm,
}

impl Semidiscretization {
    /// Closed-form EC fluctuations in the volume and at interfaces,
    /// ES-Roe-blend interface dissipation, no source.
    pub fn new(basis: LobattoBasis, mesh: Mesh1D, params: SveParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            basis,
            mesh,
            params,
            volume: EcFluctuation::ClosedForm,
            surface_ec: EcFluctuation::ClosedForm,
            surface: SurfaceFluctuation::default(),
            blend_rule: BlendRule::default(),
            source: SourceTerm::None,
        })
    }

    /// Uses `ec` both in the volume and at interfaces.
    pub fn with_fluctuation(mut self, ec: EcFluctuation) -> Self {
        self.surface_ec = ec.clone();
        self.volume = ec;
        self
    }

    pub fn with_surface_ec(mut self, ec: EcFluctuation) -> Self {
        self.surface_ec = ec;
        self
    }

    pub fn with_surface(mut self, surface: SurfaceFluctuation) -> Self {
        self.surface = surface;
        self
    }

    pub fn with_blend_rule(mut self, rule: BlendRule) -> Self {
        self.blend_rule = rule;
        self
    }

    pub fn with_source(mut self, source: SourceTerm) -> Self {
        self.source = source;
        self
    }

    pub fn basis(&self) -> &LobattoBasis {
        &self.basis
    }

    pub fn mesh(&self) -> &Mesh1D {
        &self.mesh
    }

    pub fn params(&self) -> &SveParams {
        &self.params
    }

    pub fn volume_fluctuation(&self) -> &EcFluctuation {
        &self.volume
    }

    pub fn surface(&self) -> SurfaceFluctuation {
        self.surface
    }

    pub fn n_nodes(&self) -> usize {
        self.basis.n_nodes()
    }

    pub fn zero_field(&self) -> DGField {
        DGField::zeros(self.mesh.n_elements(), self.n_nodes())
    }

    /// Physical coordinate of node `i` in element `k`.
    #[inline]
    pub fn node_x(&self, k: usize, i: usize) -> f64 {
        self.mesh.map(k, self.basis.nodes()[i])
    }

    /// All node coordinates in field order.
    pub fn node_coordinates(&self) -> Vec<f64> {
        (0..self.mesh.n_elements())
            .flat_map(|k| (0..self.n_nodes()).map(move |i| (k, i)))
            .map(|(k, i)| self.node_x(k, i))
            .collect()
    }

    /// Nodal interpolation of `f`.
    pub fn interpolate_ic(&self, f: impl Fn(f64) -> State) -> Result<DGField> {
        let mut field = self.zero_field();
        for k in 0..self.mesh.n_elements() {
            for i in 0..self.n_nodes() {
                let u = f(self.node_x(k, i));
                self.check_node(k, i, &u)?;
                field.set(k, i, u);
            }
        }
        Ok(field)
    }

    #[inline]
    fn check_node(&self, k: usize, i: usize, u: &State) -> Result<()> {
        if !u.is_finite() {
            return Err(Error::NonFinite {
                element: k,
                node: i,
            });
        }
        if !(u.h >= self.params.h_min) {
            return Err(Error::PositivityAt {
                element: k,
                node: i,
                state: *u,
            });
        }
        Ok(())
    }

    pub fn check_field(&self, field: &DGField) -> Result<()> {
        if field.n_elements() != self.mesh.n_elements() || field.n_nodes() != self.n_nodes() {
            return Err(Error::Config("field does not match the discretization".into()));
        }
        for k in 0..field.n_elements() {
            for (i, u) in field.element(k).iter().enumerate() {
                self.check_node(k, i, u)?;
            }
        }
        Ok(())
    }

    pub fn rhs(&self, field: &DGField, t: f64) -> Result<DGField> {
        let mut out = self.zero_field();
        self.rhs_into(field, t, &mut out, &mut RhsDiagnostics::default())?;
        Ok(out)
    }

    /// Evaluates the semidiscrete right-hand side into `out`.
    pub fn rhs_into(
        &self,
        field: &DGField,
        t: f64,
        out: &mut DGField,
        diag: &mut RhsDiagnostics,
    ) -> Result<()> {
        self.check_field(field)?;
        if out.n_elements() != field.n_elements() || out.n_nodes() != field.n_nodes() {
            *out = self.zero_field();
        }
        diag.reset();
        let nodes: Vec<NodeData> = field
            .values()
            .iter()
            .map(|u| self.params.node_data(u))
            .collect();

        self.volume_terms(field, &nodes, out)?;
        self.surface_terms(field, &nodes, out, diag)?;
        self.add_source(field, t, out);
        Ok(())
    }

    #[cfg(not(feature = "parallel"))]
    fn volume_terms(&self, field: &DGField, nodes: &[NodeData], out: &mut DGField) -> Result<()> {
        let n = self.n_nodes();
        out.values_mut()
            .chunks_mut(n)
            .enumerate()
            .try_for_each(|(k, du)| self.element_volume(k, field, nodes, du))
    }

    #[cfg(feature = "parallel")]
    fn volume_terms(&self, field: &DGField, nodes: &[NodeData], out: &mut DGField) -> Result<()> {
        use rayon::prelude::*;
        let n = self.n_nodes();
        // small problems do not amortize the fork/join
        if field.n_elements() * n * n < 2048 {
            return out
                .values_mut()
                .chunks_mut(n)
                .enumerate()
                .try_for_each(|(k, du)| self.element_volume(k, field, nodes, du));
        }
        out.values_mut()
            .par_chunks_mut(n)
            .with_min_len(8)
            .enumerate()
            .try_for_each(|(k, du)| self.element_volume(k, field, nodes, du))
    }

    /// `du_i = -(2/dx) sum_m 2 D_im D-(U_i, U_m)` for one element.
    fn element_volume(
        &self,
        k: usize,
        field: &DGField,
        nodes: &[NodeData],
        du: &mut [State],
    ) -> Result<()> {
        let n = self.n_nodes();
        let factor = -2.0 / self.mesh.element_size(k);
        let local = &nodes[k * n..(k + 1) * n];
        match &self.volume {
            EcFluctuation::ClosedForm => {
                for i in 0..n {
                    let row = self.basis.deriv_row(i);
                    let mut acc = [0.0; 3];
                    for m in 0..n {
                        if m == i {
                            continue;
                        }
                        let d = closed_form_minus(&self.params, &local[i], &local[m]);
                        let c = 2.0 * row[m];
                        acc[0] += c * d[0];
                        acc[1] += c * d[1];
                        acc[2] += c * d[2];
                    }
                    du[i] = State::from_array(linalg::scale(factor, &acc));
                }
            }
            EcFluctuation::Quadrature(rule) => {
                let states = field.element(k);
                let mut acc = vec![[0.0; 3]; n];
                // D-(U_m, U_i) = -D+(U_i, U_m): one pair serves both nodes
                for i in 0..n {
                    for m in i + 1..n {
                        let pair = fluctuations::ec_fluctuation_quadrature(
                            &self.params,
                            &states[i],
                            &states[m],
                            rule,
                        )?;
                        let c_im = 2.0 * self.basis.deriv(i, m);
                        let c_mi = 2.0 * self.basis.deriv(m, i);
                        for c in 0..3 {
                            acc[i][c] += c_im * pair.d_minus[c];
                            acc[m][c] -= c_mi * pair.d_plus[c];
                        }
                    }
                }
                for (d, a) in du.iter_mut().zip(&acc) {
                    *d = State::from_array(linalg::scale(factor, a));
                }
            }
        }
        Ok(())
    }

    /// Fluctuation pair at one interface.
    pub fn interface_fluctuation(
        &self,
        ul: &State,
        ur: &State,
    ) -> Result<(FluctuationPair, Option<BlendReport>, bool)> {
        let ec = match &self.surface_ec {
            EcFluctuation::ClosedForm => {
                let l = self.params.node_data(ul);
                let r = self.params.node_data(ur);
                FluctuationPair {
                    d_minus: closed_form_minus(&self.params, &l, &r),
                    d_plus: fluctuations::closed_form_plus(&self.params, &l, &r),
                }
            }
            ec @ EcFluctuation::Quadrature(_) => ec.evaluate(&self.params, ul, ur)?,
        };
        match self.surface {
            SurfaceFluctuation::Ec => Ok((ec, None, false)),
            SurfaceFluctuation::EsLlf => {
                let q = fluctuations::llf_viscosity(&self.params, ul, ur);
                Ok((fluctuations::es_fluctuation(ul, ur, &ec, &q), None, false))
            }
            SurfaceFluctuation::EsRoeBlend => {
                let q_llf = fluctuations::llf_viscosity(&self.params, ul, ur);
                let (q_es, report, fallback) =
                    match fluctuations::roe_viscosity(&self.params, ul, ur) {
                        Ok(q_roe) => {
                            let (q_es, rep) = fluctuations::blend_viscosity(
                                &self.params,
                                ul,
                                ur,
                                &q_roe,
                                &q_llf,
                                self.blend_rule,
                            )?;
                            (q_es, rep, false)
                        }
                        Err(Error::Degenerate { .. } | Error::NotHyperbolic) => {
                            let d = -q_llf.dissipation(&self.params, ul, ur);
                            let rep = BlendReport {
                                delta_s: d,
                                delta_s_llf: d,
                                alpha: 1.0,
                            };
                            (q_llf, rep, true)
                        }
                        Err(e) => return Err(e),
                    };
                Ok((
                    fluctuations::es_fluctuation(ul, ur, &ec, &q_es),
                    Some(report),
                    fallback,
                ))
            }
        }
    }

    fn surface_terms(
        &self,
        field: &DGField,
        _nodes: &[NodeData],
        out: &mut DGField,
        diag: &mut RhsDiagnostics,
    ) -> Result<()> {
        let n_el = self.mesh.n_elements();
        let last = self.basis.degree();
        let w = self.basis.weights();
        for k in 0..n_el {
            let kr = (k + 1) % n_el;
            let ul = field.get(k, last);
            let ur = field.get(kr, 0);
            let (pair, report, fallback) = self.interface_fluctuation(&ul, &ur)?;
            if let Some(rep) = report {
                diag.alpha_max = diag.alpha_max.max(rep.alpha);
                if let Some(log) = diag.blend_log.as_mut() {
                    log.push((k, rep));
                }
            }
            if fallback {
                diag.roe_fallbacks += 1;
            }
            let fl = -2.0 / (w[last] * self.mesh.element_size(k));
            let fr = -2.0 / (w[0] * self.mesh.element_size(kr));
            let mut left = out.get(k, last).to_array();
            for c in 0..3 {
                left[c] += fl * pair.d_minus[c];
            }
            out.set(k, last, State::from_array(left));
            let mut right = out.get(kr, 0).to_array();
            for c in 0..3 {
                right[c] += fr * pair.d_plus[c];
            }
            out.set(kr, 0, State::from_array(right));
        }
        Ok(())
    }

    fn add_source(&self, field: &DGField, t: f64, out: &mut DGField) {
        let n = self.n_nodes();
        match &self.source {
            SourceTerm::None => {}
            SourceTerm::Friction => {
                for (u, d) in field.values().iter().zip(out.values_mut()) {
                    let s = self.params.friction_source(u);
                    *d = State::from_array(linalg::add(&d.to_array(), &s));
                }
            }
            SourceTerm::Custom(f) => {
                for (idx, (u, d)) in field.values().iter().zip(out.values_mut()).enumerate() {
                    let x = self.node_x(idx / n, idx % n);
                    let s = f(x, t, u, &self.params);
                    *d = State::from_array(linalg::add(&d.to_array(), &s));
                }
            }
        }
    }

    /// Collocation quadrature `sum_k sum_i w_i dx_k/2 g(k, i)`.
    fn quadrature(&self, mut g: impl FnMut(usize, usize) -> f64) -> f64 {
        let w = self.basis.weights();
        let mut total = 0.0;
        for k in 0..self.mesh.n_elements() {
            let half = 0.5 * self.mesh.element_size(k);
            let mut el = 0.0;
            for (i, wi) in w.iter().enumerate() {
                el += wi * g(k, i);
            }
            total += half * el;
        }
        total
    }

    /// `sum w_i dx/2 S(U_i)`.
    pub fn total_entropy(&self, field: &DGField) -> Result<f64> {
        self.check_field(field)?;
        Ok(self.quadrature(|k, i| self.params.entropy(&field.get(k, i))))
    }

    /// `sum w_i dx/2 w(U_i)^T dU_i/dt`.
    pub fn entropy_rate(&self, field: &DGField, rhs: &DGField) -> f64 {
        self.quadrature(|k, i| {
            let w = self.params.entropy_vars(&field.get(k, i)).to_array();
            linalg::dot(&w, &rhs.get(k, i).to_array())
        })
    }

    /// Integral of each conserved variable.
    pub fn conserved_totals(&self, field: &DGField) -> Vec3 {
        [
            self.quadrature(|k, i| field.get(k, i).h),
            self.quadrature(|k, i| field.get(k, i).hv),
            self.quadrature(|k, i| field.get(k, i).b),
        ]
    }

    /// `cfl * min_k dx_k / ((2N+1) lambda_max,k)`.
    pub fn cfl_timestep(&self, field: &DGField, cfl: f64) -> f64 {
        let n = self.n_nodes();
        let order_factor = (2 * self.basis.degree() + 1) as f64;
        let mut dt = f64::INFINITY;
        for k in 0..self.mesh.n_elements() {
            let speed = field
                .element(k)
                .iter()
                .fold(0.0f64, |m, u| m.max(self.params.spectral_radius(u)));
            debug_assert_eq!(field.element(k).len(), n);
            if speed > 0.0 {
                dt = dt.min(self.mesh.element_size(k) / (order_factor * speed));
            }
        }
        cfl * dt
    }
}
