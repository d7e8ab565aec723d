//! Operator and fluctuation self-tests behind the `check` subcommand.

use esdg_core::fluctuations::{self, ec_residual};
use esdg_core::linalg;
use esdg_core::{
    EcFluctuation, GaussRule, LobattoBasis, State, SurfaceFluctuation, SveParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::scenario::ScenarioKind;
use crate::study;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn result(name: &'static str, value: f64, limit: f64) -> CheckResult {
    CheckResult {
        name,
        passed: value <= limit,
        detail: format!("{value:.3e} <= {limit:.0e}"),
    }
}

fn random_state(rng: &mut ChaCha8Rng) -> State {
    State::from_velocity(
        rng.gen_range(0.1..10.0),
        rng.gen_range(-3.0..3.0),
        rng.gen_range(-2.0..2.0),
    )
}

fn sbp_defect() -> CheckResult {
    let worst = (1..=8)
        .map(|n| LobattoBasis::new(n).map_or(f64::INFINITY, |b| b.sbp_defect()))
        .fold(0.0, f64::max);
    result("SBP property, N = 1..8", worst, 1e-14)
}

fn derivative_exactness() -> CheckResult {
    let mut worst = 0.0f64;
    for n in 1..=8 {
        let b = LobattoBasis::new(n).expect("degree in range");
        for p in 0..=n {
            let vals: Vec<f64> = b.nodes().iter().map(|x| x.powi(p as i32)).collect();
            let d = b.differentiate(&vals);
            for (x, dx) in b.nodes().iter().zip(d) {
                let exact = if p == 0 { 0.0 } else { p as f64 * x.powi(p as i32 - 1) };
                worst = worst.max((dx - exact).abs());
            }
        }
    }
    result("derivative exact on polynomials", worst, 1e-12)
}

fn gauss_exactness() -> CheckResult {
    let mut worst = 0.0f64;
    for n in 1..=5 {
        let rule = GaussRule::new(n).expect("rule in range");
        for m in 0..2 * n {
            let approx = rule.integrate(|s| s.powi(m as i32));
            worst = worst.max((approx - 1.0 / (m as f64 + 1.0)).abs());
        }
    }
    result("Gauss rules exact to degree 2n-1", worst, 1e-14)
}

fn ec_residuals(rng: &mut ChaCha8Rng) -> Vec<CheckResult> {
    let p = SveParams::default();
    let quad = EcFluctuation::quadrature(3).expect("rule in range");
    let (mut closed, mut quadrature, mut skew, mut consistency) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..2000 {
        let ul = random_state(rng);
        let ur = random_state(rng);
        let scale = 1f64.max(p.entropy_flux(&ul).abs()).max(p.entropy_flux(&ur).abs());
        let cf = fluctuations::ec_fluctuation_closed_form(&p, &ul, &ur).expect("valid states");
        closed = closed.max(ec_residual(&p, &ul, &ur, &cf).abs() / scale);
        let back = fluctuations::ec_fluctuation_closed_form(&p, &ur, &ul).expect("valid states");
        let d = linalg::add(&cf.d_minus, &back.d_plus);
        skew = skew.max(linalg::max_abs_vec(&d) / linalg::max_abs_vec(&cf.d_minus).max(1.0));
        let same = cf_same(&p, &ul);
        consistency = consistency.max(same);
        if let Ok(q) = quad.evaluate(&p, &ul, &ur) {
            quadrature = quadrature.max(ec_residual(&p, &ul, &ur, &q).abs() / scale);
        }
    }
    vec![
        result("closed-form EC residual (relative)", closed, 1e-12),
        result("3-point quadrature EC residual (relative)", quadrature, 1e-10),
        result("skew pairing", skew, 1e-12),
        result("consistency D(u, u) = 0", consistency, 1e-13),
    ]
}

fn cf_same(p: &SveParams, u: &State) -> f64 {
    let cf = fluctuations::ec_fluctuation_closed_form(p, u, u).expect("valid state");
    linalg::max_abs_vec(&cf.d_minus).max(linalg::max_abs_vec(&cf.d_plus))
}

fn dissipation(rng: &mut ChaCha8Rng) -> Vec<CheckResult> {
    let p = SveParams::default();
    let (mut llf, mut blended) = (0.0f64, f64::NEG_INFINITY);
    for _ in 0..2000 {
        let ul = random_state(rng);
        let ur = random_state(rng);
        let q_llf = fluctuations::llf_viscosity(&p, &ul, &ur);
        llf = llf.max(-q_llf.dissipation(&p, &ul, &ur));
        if let Ok(q_roe) = fluctuations::roe_viscosity(&p, &ul, &ur) {
            match fluctuations::blend_viscosity(&p, &ul, &ur, &q_roe, &q_llf, Default::default()) {
                Ok((_, rep)) => blended = blended.max(rep.blended_production() / rep.scale()),
                Err(_) => blended = f64::INFINITY,
            }
        }
    }
    vec![
        result("LLF entropy production", llf.max(0.0), 0.0),
        result("blended Roe entropy production (relative)", blended.max(0.0), 1e-12),
    ]
}

fn lake_at_rest() -> CheckResult {
    let mut cfg = RunConfig::defaults(ScenarioKind::WellBalanced);
    cfg.surface = SurfaceFluctuation::EsRoeBlend;
    let scenario = cfg.scenario();
    let worst = [0usize, 1, 2, 4]
        .iter()
        .map(|&n| {
            cfg.degree = n;
            let semi = cfg.semidiscretization(&scenario, 16).expect("valid settings");
            let f = scenario.initial_field(&semi).expect("valid initial data");
            semi.rhs(&f, 0.0).map_or(f64::INFINITY, |r| linalg::max_abs_vec(&r.max_abs()))
        })
        .fold(0.0, f64::max);
    result("lake at rest has zero rhs (Roe blend)", worst, 1e-12)
}

fn channel_entropy_conservation() -> CheckResult {
    let mut cfg = RunConfig::defaults(ScenarioKind::Channel);
    cfg.surface = SurfaceFluctuation::Ec;
    cfg.elements = 32;
    let scenario = cfg.scenario();
    let semi = cfg.semidiscretization(&scenario, cfg.elements).expect("valid settings");
    let f = scenario.initial_field(&semi).expect("valid initial data");
    let rel = semi
        .rhs(&f, 0.0)
        .and_then(|r| Ok(semi.entropy_rate(&f, &r).abs() / semi.total_entropy(&f)?.abs()))
        .unwrap_or(f64::INFINITY);
    result("EC scheme entropy rate (relative)", rel, 1e-11)
}

fn manufactured_source() -> CheckResult {
    result(
        "manufactured source residual",
        study::manufactured_residual_check(&SveParams::default()),
        1e-6,
    )
}

pub fn run_checks() -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut out = vec![sbp_defect(), derivative_exactness(), gauss_exactness()];
    out.extend(ec_residuals(&mut rng));
    out.extend(dissipation(&mut rng));
    out.push(lake_at_rest());
    out.push(channel_entropy_conservation());
    out.push(manufactured_source());
    out
}

pub fn format_checks(results: &[CheckResult]) -> String {
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(0);
    results
        .iter()
        .map(|r| {
            format!(
                "{:<width$}  {}  {}\n",
                r.name,
                if r.passed { "PASS" } else { "FAIL" },
                r.detail
            )
        })
        .collect()
}
