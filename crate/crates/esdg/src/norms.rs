//! Discrete L2 norms and experimental orders of convergence.

use std::fmt::Write as _;

use esdg_core::{DGField, Semidiscretization, State};
use serde::{Deserialize, Serialize};

/// Per-variable `sqrt(sum_k sum_i w_i dx_k/2 (U_i - exact(x_i, t))^2)`.
pub fn l2_error(
    semi: &Semidiscretization,
    field: &DGField,
    exact: impl Fn(f64, f64) -> State,
    t: f64,
) -> [f64; 3] {
    let w = semi.basis().weights();
    let mut acc = [0.0; 3];
    for k in 0..semi.mesh().n_elements() {
        let half = 0.5 * semi.mesh().element_size(k);
        for (i, wi) in w.iter().enumerate() {
            let d = field.get(k, i).to_array();
            let e = exact(semi.node_x(k, i), t).to_array();
            for c in 0..3 {
                acc[c] += wi * half * (d[c] - e[c]) * (d[c] - e[c]);
            }
        }
    }
    acc.map(f64::sqrt)
}

/// Value of the piecewise polynomial `field` at `x`.
pub fn evaluate_at(semi: &Semidiscretization, field: &DGField, x: f64) -> State {
    let mesh = semi.mesh();
    let (a, _) = mesh.domain();
    let k_max = mesh.n_elements() - 1;
    let guess = ((x - a) / mesh.domain_length() * mesh.n_elements() as f64).floor();
    let mut k = (guess.max(0.0) as usize).min(k_max);
    let bounds = mesh.boundaries();
    while k > 0 && x < bounds[k] {
        k -= 1;
    }
    while k < k_max && x > bounds[k + 1] {
        k += 1;
    }
    let xi = 2.0 * (x - bounds[k]) / mesh.element_size(k) - 1.0;
    let el = field.element(k);
    let comp = |f: fn(&State) -> f64| {
        let vals: Vec<f64> = el.iter().map(f).collect();
        semi.basis().interpolate(&vals, xi)
    };
    State::new(comp(|u| u.h), comp(|u| u.hv), comp(|u| u.b))
}

/// L2 distance between a coarse solution and a finer one, measured with the
/// quadrature of the fine discretization.
pub fn l2_difference(
    coarse_semi: &Semidiscretization,
    coarse: &DGField,
    fine_semi: &Semidiscretization,
    fine: &DGField,
) -> [f64; 3] {
    l2_error(fine_semi, fine, |x, _| evaluate_at(coarse_semi, coarse, x), 0.0)
}

/// `log2(e_coarse / e_fine)` per variable.
pub fn eoc(coarse: &[f64; 3], fine: &[f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|c| (coarse[c] / fine[c]).log2())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EocReport {
    pub degree: usize,
    pub dt: f64,
    pub t_end: f64,
    pub resolutions: Vec<usize>,
    /// `[h, hv, b]` errors per resolution.
    pub l2_errors: Vec<[f64; 3]>,
    /// Orders between consecutive rows; one entry fewer than `resolutions`.
    pub eoc: Vec<[f64; 3]>,
}

impl EocReport {
    pub fn new(degree: usize, dt: f64, t_end: f64) -> Self {
        Self {
            degree,
            dt,
            t_end,
            ..Self::default()
        }
    }

    pub fn push(&mut self, elements: usize, errors: [f64; 3]) {
        if let Some(prev) = self.l2_errors.last() {
            self.eoc.push(eoc(prev, &errors));
        }
        self.resolutions.push(elements);
        self.l2_errors.push(errors);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Fixed-width text table in the layout of a convergence table.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:>6} {:>12} {:>7} {:>12} {:>7} {:>12} {:>7}",
            "K", "L2(h)", "EOC", "L2(hv)", "EOC", "L2(b)", "EOC"
        );
        for (row, (k, e)) in self.resolutions.iter().zip(&self.l2_errors).enumerate() {
            let rate = |c: usize| match row {
                0 => format!("{:>7}", "-"),
                _ => format!("{:>7.2}", self.eoc[row - 1][c]),
            };
            let _ = writeln!(
                s,
                "{k:>6} {:>12.3e} {} {:>12.3e} {} {:>12.3e} {}",
                e[0],
                rate(0),
                e[1],
                rate(1),
                e[2],
                rate(2)
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use esdg_core::{LobattoBasis, Mesh1D, SveParams};

    fn semi(n: usize, k: usize) -> Semidiscretization {
        Semidiscretization::new(
            LobattoBasis::new(n).unwrap(),
            Mesh1D::uniform(0.0, 2.0, k).unwrap(),
            SveParams::default(),
        )
        .unwrap()
    }

    #[test]
    fn interpolated_polynomial_has_no_error() {
        let s = semi(3, 4);
        let exact = |x: f64, _t: f64| State::new(1.0 + x * x * x, x, 0.5 * x * x);
        let f = s.interpolate_ic(|x| exact(x, 0.0)).unwrap();
        assert!(l2_error(&s, &f, exact, 0.0).iter().all(|&e| e <= 1e-13));
    }

    #[test]
    fn constant_offset_error_is_offset_times_root_length() {
        let s = semi(2, 3);
        let f = s.interpolate_ic(|_| State::new(1.0, 0.0, 0.0)).unwrap();
        let e = l2_error(&s, &f, |_, _| State::new(1.5, 0.0, 0.0), 0.0);
        assert!((e[0] - 0.5 * 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn error_ignores_element_order() {
        let s = semi(2, 4);
        let f = s.interpolate_ic(|x| State::new(2.0 + x.sin(), 0.1, 0.0)).unwrap();
        let exact = |x: f64, _| State::new(2.0 + x.cos(), 0.0, 0.0);
        let e = l2_error(&s, &f, exact, 0.0);
        // same sum computed element by element in reverse
        let w = s.basis().weights();
        let mut acc = 0.0;
        for k in (0..4).rev() {
            for (i, wi) in w.iter().enumerate() {
                let d = f.get(k, i).h - exact(s.node_x(k, i), 0.0).h;
                acc += wi * 0.25 * d * d;
            }
        }
        assert!((e[0] - acc.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn evaluation_reproduces_nodes_and_interpolant() {
        let s = semi(4, 5);
        let f = s.interpolate_ic(|x| State::new(1.0 + x * x, x, 0.0)).unwrap();
        for k in 0..5 {
            for i in 0..5 {
                let x = s.node_x(k, i);
                assert!((evaluate_at(&s, &f, x).h - f.get(k, i).h).abs() < 1e-13);
            }
        }
        assert!((evaluate_at(&s, &f, 0.77).h - (1.0 + 0.77 * 0.77)).abs() < 1e-13);
    }

    #[test]
    fn eoc_report_rows() {
        let mut r = EocReport::new(3, 1e-3, 1.0);
        r.push(8, [1.6e-3, 1.0, 2.0]);
        assert!(r.eoc.is_empty());
        r.push(16, [1e-4, 0.125, 0.5]);
        assert_eq!(r.eoc, vec![[4.0, 3.0, 2.0]]);
        let back: EocReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert!(r.to_table().lines().count() == 3);
    }
}
