//! Model quantities checked against finite differences of other model
//! quantities.

use esdg_core::linalg::{self, Mat3, Vec3};
use esdg_core::{Discharge, EntropyVars, State, SveParams};
use proptest::prelude::*;

fn params() -> SveParams {
    SveParams::default()
}

fn mpm_params() -> SveParams {
    SveParams {
        discharge: Discharge::Mpm {
            d_s: 1e-3,
            theta_c: 0.047,
        },
        ..SveParams::default()
    }
}

fn state() -> impl Strategy<Value = State> {
    (0.1f64..10.0, -3.0f64..3.0, -2.0f64..2.0).prop_map(|(h, v, b)| State::from_velocity(h, v, b))
}

fn fd_jacobian(f: impl Fn(&Vec3) -> Vec3, u: &Vec3) -> Mat3 {
    let mut j = linalg::ZERO;
    for c in 0..3 {
        let step = 1e-6 * u[c].abs().max(1.0);
        let (mut up, mut dn) = (*u, *u);
        up[c] += step;
        dn[c] -= step;
        let (fp, fm) = (f(&up), f(&dn));
        for r in 0..3 {
            j[r][c] = (fp[r] - fm[r]) / (2.0 * step);
        }
    }
    j
}

fn rel_err(a: &Mat3, b: &Mat3) -> f64 {
    let scale = linalg::max_abs(b).max(1.0);
    let mut m = 0.0f64;
    for r in 0..3 {
        for c in 0..3 {
            m = m.max((a[r][c] - b[r][c]).abs());
        }
    }
    m / scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn flux_jacobian_plus_nonconservative_matrix(u in state()) {
        let p = params();
        let fu = fd_jacobian(|x| p.conservative_flux(&State::from_array(*x)).unwrap(), &u.to_array());
        let a = linalg::mat_add(&fu, &p.noncons_matrix(&u));
        prop_assert!(rel_err(&p.generalized_jacobian(&u), &a) < 1e-6);
    }

    #[test]
    fn mpm_jacobian_matches_finite_differences(h in 0.1f64..10.0, v in 0.3f64..3.0, b in -2.0f64..2.0) {
        let p = mpm_params();
        let u = State::from_velocity(h, v, b);
        let fu = fd_jacobian(|x| p.conservative_flux(&State::from_array(*x)).unwrap(), &u.to_array());
        let a = linalg::mat_add(&fu, &p.noncons_matrix(&u));
        prop_assert!(rel_err(&p.generalized_jacobian(&u), &a) < 1e-5);
    }

    #[test]
    fn entropy_variables_are_the_entropy_gradient(u in state()) {
        let p = params();
        let x = u.to_array();
        let w = p.entropy_vars(&u).to_array();
        for c in 0..3 {
            let step = 1e-6 * x[c].abs().max(1.0);
            let (mut up, mut dn) = (x, x);
            up[c] += step;
            dn[c] -= step;
            let d = (p.entropy(&State::from_array(up)) - p.entropy(&State::from_array(dn))) / (2.0 * step);
            prop_assert!((d - w[c]).abs() <= 1e-6 * w[c].abs().max(1.0), "c={} {} vs {}", c, d, w[c]);
        }
    }

    #[test]
    fn entropy_flux_is_compatible(u in state()) {
        // q_u = w^T A
        let p = params();
        let x = u.to_array();
        let w = p.entropy_vars(&u).to_array();
        let a = p.generalized_jacobian(&u);
        let wa = linalg::mat_vec(&linalg::transpose(&a), &w);
        for c in 0..3 {
            let step = 1e-6 * x[c].abs().max(1.0);
            let (mut up, mut dn) = (x, x);
            up[c] += step;
            dn[c] -= step;
            let d = (p.entropy_flux(&State::from_array(up)) - p.entropy_flux(&State::from_array(dn))) / (2.0 * step);
            prop_assert!((d - wa[c]).abs() <= 1e-5 * wa[c].abs().max(1.0), "c={} {} vs {}", c, d, wa[c]);
        }
    }

    #[test]
    fn entropy_variables_round_trip(u in state()) {
        let p = params();
        let back = p.state_from_entropy_vars(&p.entropy_vars(&u)).unwrap();
        let scale = u.to_array().iter().fold(1.0f64, |m, x| m.max(x.abs()));
        for (a, b) in back.to_array().iter().zip(u.to_array()) {
            prop_assert!((a - b).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn hessian_inverse_matches_inverse_map(u in state()) {
        let p = params();
        let w = p.entropy_vars(&u).to_array();
        let fd = fd_jacobian(|x| p.state_from_entropy_vars(&EntropyVars::from_array(*x)).unwrap().to_array(), &w);
        let h = p.entropy_hessian_inverse(&EntropyVars::from_array(w)).unwrap();
        prop_assert!(rel_err(&h, &fd) < 1e-6);
        // symmetric positive definite
        prop_assert!(linalg::asymmetry(&h) <= 1e-12 * linalg::max_abs(&h));
        prop_assert!(h[0][0] > 0.0 && linalg::det(&h) > 0.0);
    }

    #[test]
    fn roe_eigensystem_diagonalizes(u in state()) {
        let p = params();
        let Ok(e) = p.roe_eigen(&u) else { return Ok(()); };
        let a = p.generalized_jacobian(&u);
        let scale = linalg::max_abs(&a).max(1.0);
        for i in 0..3 {
            let r = [e.right[0][i], e.right[1][i], e.right[2][i]];
            let ar = linalg::mat_vec(&a, &r);
            for c in 0..3 {
                prop_assert!((ar[c] - e.lambdas[i] * r[c]).abs() <= 1e-8 * scale * linalg::max_abs_vec(&r));
            }
        }
        let back = e.reconstruct(|l| l);
        prop_assert!(rel_err(&back, &a) < 1e-9);
        let id = linalg::mat_mul(&e.left, &e.right);
        prop_assert!(rel_err(&id, &linalg::IDENTITY) < 1e-9);
    }

    #[test]
    fn spectral_radius_bounds_eigenvalues(u in state()) {
        let p = params();
        if let Ok(e) = p.roe_eigen(&u) {
            let rho = p.spectral_radius(&u);
            prop_assert!(e.lambdas.iter().all(|l| l.abs() <= rho * (1.0 + 1e-12)));
        }
    }

    #[test]
    fn lake_at_rest_states_are_symmetrized(h in 0.1f64..10.0, b in -2.0f64..2.0) {
        let p = params();
        prop_assert!(p.symmetrization_defect(&State::new(h, 0.0, b)).unwrap() <= 1e-10);
    }

    #[test]
    fn left_symmetrizer_iff_right_product_symmetric(
        m in prop::array::uniform9(-1.0f64..1.0),
        s in prop::array::uniform9(-1.0f64..1.0),
        skew in prop::array::uniform3(0.1f64..1.0),
    ) {
        // H = M M^T + I is SPD; A = H S
        let mm = [[m[0], m[1], m[2]], [m[3], m[4], m[5]], [m[6], m[7], m[8]]];
        let h = linalg::mat_add(&linalg::mat_mul(&mm, &linalg::transpose(&mm)), &linalg::IDENTITY);
        let mut sym = [[s[0], s[1], s[2]], [s[3], s[4], s[5]], [s[6], s[7], s[8]]];
        sym = linalg::mat_scale(0.5, &linalg::mat_add(&sym, &linalg::transpose(&sym)));
        let a = linalg::mat_mul(&h, &sym);
        let hinv = linalg::inverse(&h).unwrap();
        prop_assert!(linalg::asymmetry(&linalg::mat_mul(&hinv, &a)) <= 1e-12 * linalg::max_abs(&a).max(1.0));
        prop_assert!(linalg::asymmetry(&linalg::mat_mul(&a, &h)) <= 1e-12 * linalg::max_abs(&a).max(1.0) * linalg::max_abs(&h));
        // a skew perturbation of S breaks both at once
        let mut bad = sym;
        bad[0][1] += skew[0];
        bad[1][0] -= skew[0];
        let a_bad = linalg::mat_mul(&h, &bad);
        prop_assert!(linalg::asymmetry(&linalg::mat_mul(&hinv, &a_bad)) > 1e-3);
        prop_assert!(linalg::asymmetry(&linalg::mat_mul(&a_bad, &h)) > 1e-3);
    }
}

#[test]
fn roe_average_of_equal_states_is_the_state() {
    let p = params();
    let u = State::from_velocity(2.0, 0.7, 0.3);
    let a = p.roe_average(&u, &u).unwrap();
    assert!((a.h - u.h).abs() < 1e-15 && (a.hv - u.hv).abs() < 1e-14 && (a.b - u.b).abs() < 1e-15);
}
