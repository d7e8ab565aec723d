//! INI-style run configuration.
//!
//! ```text
//! [mesh]
//! elements = 128
//! degree = 4
//! [scheme]
//! scenario = channel
//! surface = es_roe_blend
//! [time]
//! cfl = 0.5
//! t_end = 30000
//! ```
//!
//! Every key is optional except `scheme.scenario`; missing keys take the
//! scenario's defaults. Unknown sections and keys are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use esdg_core::timeint::RecordInterval;
use esdg_core::{
    BlendRule, Discharge, EcFluctuation, LobattoBasis, Mesh1D, Semidiscretization, Stepping,
    SurfaceFluctuation, SveParams, TimeIntegrationConfig, TimeMethod,
};

use crate::error::{AppError, AppResult};
use crate::scenario::{Scenario, ScenarioKind};

const KEYS: &[(&str, &[&str])] = &[
    ("mesh", &["elements", "degree"]),
    (
        "model",
        &[
            "g",
            "density_ratio",
            "porosity",
            "manning_n",
            "discharge",
            "a_g",
            "grain_diameter",
            "critical_shields",
            "rho_f",
            "h_min",
        ],
    ),
    (
        "scheme",
        &["scenario", "volume", "quadrature_points", "surface", "blend_rule"],
    ),
    (
        "time",
        &["method", "dt", "cfl", "t_end", "record_every", "record_interval"],
    ),
    ("output", &["directory", "snapshot_interval", "log_blending"]),
    (
        "study",
        &["resolutions", "fluctuations", "warmup_calls", "timing_calls"],
    ),
];

/// `section.key -> value`, in file order of first appearance.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str, path: &Path) -> AppResult<Self> {
        let mut entries = BTreeMap::new();
        let mut section: Option<String> = None;
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let syntax = |message: String| AppError::Syntax {
                path: path.to_path_buf(),
                line: line_no,
                message,
            };
            let line = match line.find(['#', ';']) {
                Some(pos) => &line[..pos],
                None => line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| syntax(format!("unterminated section header `{line}`")))?
                    .trim();
                if !KEYS.iter().any(|(s, _)| *s == name) {
                    return Err(syntax(format!("unknown section [{name}]")));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| syntax(format!("expected `key = value`, got `{line}`")))?;
            let section = section
                .as_deref()
                .ok_or_else(|| syntax("key outside of any section".into()))?;
            let full = format!("{section}.{}", key.trim());
            check_key(&full).map_err(|e| syntax(e.to_string()))?;
            if entries.insert(full.clone(), value.trim().to_string()).is_some() {
                return Err(syntax(format!("duplicate key `{full}`")));
            }
        }
        Ok(Self { entries })
    }

    /// Applies `section.key=value`.
    pub fn set_override(&mut self, assignment: &str) -> AppResult<()> {
        let (key, value) = assignment.split_once('=').ok_or_else(|| {
            AppError::config(assignment, "override must have the form section.key=value")
        })?;
        let key = key.trim();
        check_key(key)?;
        self.entries.insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn parse_value<T: FromStr>(&self, key: &str) -> AppResult<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| AppError::config(key, format!("cannot parse `{v}`")))
            })
            .transpose()
    }
}

fn check_key(full: &str) -> AppResult<()> {
    let (section, key) = full
        .split_once('.')
        .ok_or_else(|| AppError::config(full, "keys are written as section.key"))?;
    match KEYS.iter().find(|(s, _)| *s == section) {
        None => Err(AppError::config(full, format!("unknown section `{section}`"))),
        Some((_, keys)) if !keys.contains(&key) => Err(AppError::config(
            full,
            format!("unknown key (expected one of: {})", keys.join(", ")),
        )),
        Some(_) => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub directory: PathBuf,
    /// Simulated time between snapshots; `None` writes only the initial and
    /// final fields.
    pub snapshot_interval: Option<f64>,
    /// Write every interface blending decision to `blending.csv`.
    pub log_blending: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub resolutions: Vec<usize>,
    pub fluctuations: Vec<EcFluctuation>,
    pub warmup_calls: usize,
    pub timing_calls: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioKind,
    pub elements: usize,
    pub degree: usize,
    pub params: SveParams,
    pub volume: EcFluctuation,
    pub surface: SurfaceFluctuation,
    pub blend_rule: BlendRule,
    pub time: TimeIntegrationConfig,
    pub output: OutputConfig,
    pub study: StudyConfig,
}

/// Name used for a fluctuation in configs and reports.
pub fn fluctuation_label(ec: &EcFluctuation) -> String {
    match ec {
        EcFluctuation::ClosedForm => "closed_form".into(),
        EcFluctuation::Quadrature(rule) => format!("quadrature{}", rule.n_points()),
    }
}

pub fn parse_fluctuation(key: &str, s: &str) -> AppResult<EcFluctuation> {
    if s == "closed_form" {
        return Ok(EcFluctuation::ClosedForm);
    }
    let n = s
        .strip_prefix("quadrature")
        .and_then(|n| n.parse::<usize>().ok())
        .ok_or_else(|| {
            AppError::config(key, format!("`{s}` is not closed_form or quadratureN"))
        })?;
    EcFluctuation::quadrature(n).map_err(|e| AppError::config(key, e.to_string()))
}

fn parse_surface(s: &str) -> AppResult<SurfaceFluctuation> {
    match s {
        "ec" => Ok(SurfaceFluctuation::Ec),
        "es_llf" => Ok(SurfaceFluctuation::EsLlf),
        "es_roe_blend" => Ok(SurfaceFluctuation::EsRoeBlend),
        _ => Err(AppError::config(
            "scheme.surface",
            format!("`{s}` is not one of ec, es_llf, es_roe_blend"),
        )),
    }
}

pub fn surface_label(s: SurfaceFluctuation) -> &'static str {
    match s {
        SurfaceFluctuation::Ec => "ec",
        SurfaceFluctuation::EsLlf => "es_llf",
        SurfaceFluctuation::EsRoeBlend => "es_roe_blend",
    }
}

impl RunConfig {
    /// Settings of the corresponding experiment.
    pub fn defaults(scenario: ScenarioKind) -> Self {
        let (elements, degree, surface, stepping, t_end) = match scenario {
            ScenarioKind::Manufactured => {
                (8, 3, SurfaceFluctuation::EsLlf, Stepping::Fixed(1e-3), 1.0)
            }
            ScenarioKind::Channel => {
                (128, 4, SurfaceFluctuation::EsRoeBlend, Stepping::Cfl(0.5), 30_000.0)
            }
            ScenarioKind::WellBalanced => {
                (16, 2, SurfaceFluctuation::EsRoeBlend, Stepping::Fixed(2e-2), 10.0)
            }
        };
        let record = match scenario {
            ScenarioKind::Channel => RecordInterval::Steps(1),
            _ => RecordInterval::Steps(10),
        };
        Self {
            scenario,
            elements,
            degree,
            params: SveParams::default(),
            volume: EcFluctuation::ClosedForm,
            surface,
            blend_rule: BlendRule::Clamp,
            time: TimeIntegrationConfig::new(TimeMethod::Ssprk33, stepping, t_end)
                .with_record_interval(record),
            output: OutputConfig {
                directory: PathBuf::from("output"),
                snapshot_interval: None,
                log_blending: false,
            },
            study: StudyConfig {
                resolutions: vec![8, 16, 32],
                fluctuations: vec![
                    EcFluctuation::quadrature(1).expect("valid rule"),
                    EcFluctuation::quadrature(2).expect("valid rule"),
                    EcFluctuation::quadrature(3).expect("valid rule"),
                    EcFluctuation::ClosedForm,
                ],
                warmup_calls: 10,
                timing_calls: 100,
            },
        }
    }

    pub fn from_file(path: &Path, overrides: &[String]) -> AppResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        Self::from_text(&text, path, overrides)
    }

    pub fn from_text(text: &str, path: &Path, overrides: &[String]) -> AppResult<Self> {
        let mut raw = RawConfig::parse(text, path)?;
        for o in overrides {
            raw.set_override(o)?;
        }
        Self::from_raw(&raw)
    }

    pub fn from_raw(raw: &RawConfig) -> AppResult<Self> {
        let scenario: ScenarioKind = raw
            .get("scheme.scenario")
            .ok_or_else(|| AppError::config("scheme.scenario", "missing (manufactured, channel, well_balanced)"))?
            .parse()?;
        let mut c = Self::defaults(scenario);

        if let Some(k) = raw.parse_value::<usize>("mesh.elements")? {
            c.elements = k;
        }
        if let Some(n) = raw.parse_value::<usize>("mesh.degree")? {
            c.degree = n;
        }
        if c.elements == 0 {
            return Err(AppError::config("mesh.elements", "must be at least 1"));
        }
        LobattoBasis::new(c.degree).map_err(|e| AppError::config("mesh.degree", e.to_string()))?;

        c.params = model_params(raw)?;

        if let Some(v) = raw.get("scheme.volume") {
            c.volume = match v {
                "closed_form" => EcFluctuation::ClosedForm,
                "quadrature" => {
                    let n = raw.parse_value::<usize>("scheme.quadrature_points")?.unwrap_or(3);
                    EcFluctuation::quadrature(n)
                        .map_err(|e| AppError::config("scheme.quadrature_points", e.to_string()))?
                }
                other => parse_fluctuation("scheme.volume", other)?,
            };
        } else if raw.get("scheme.quadrature_points").is_some() {
            return Err(AppError::config(
                "scheme.quadrature_points",
                "only meaningful with scheme.volume = quadrature",
            ));
        }
        if let Some(s) = raw.get("scheme.surface") {
            c.surface = parse_surface(s)?;
        }
        if let Some(b) = raw.get("scheme.blend_rule") {
            c.blend_rule = match b {
                "clamp" => BlendRule::Clamp,
                "paper_max" => BlendRule::PaperMax,
                _ => return Err(AppError::config("scheme.blend_rule", format!("`{b}` is not clamp or paper_max"))),
            };
        }

        time_settings(raw, &mut c.time)?;
        c.time
            .validate(0.0)
            .map_err(|e| AppError::config("time", e.to_string()))?;

        if let Some(d) = raw.get("output.directory") {
            c.output.directory = PathBuf::from(d);
        }
        if let Some(dt) = raw.parse_value::<f64>("output.snapshot_interval")? {
            if !(dt > 0.0) {
                return Err(AppError::config("output.snapshot_interval", "must be positive"));
            }
            c.output.snapshot_interval = Some(dt);
        }
        if let Some(b) = raw.parse_value::<bool>("output.log_blending")? {
            c.output.log_blending = b;
        }

        if let Some(list) = raw.get("study.resolutions") {
            c.study.resolutions = list
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<usize>()
                        .ok()
                        .filter(|&k| k > 0)
                        .ok_or_else(|| AppError::config("study.resolutions", format!("bad element count `{}`", s.trim())))
                })
                .collect::<AppResult<_>>()?;
        }
        if let Some(list) = raw.get("study.fluctuations") {
            c.study.fluctuations = list
                .split(',')
                .map(|s| parse_fluctuation("study.fluctuations", s.trim()))
                .collect::<AppResult<_>>()?;
        }
        if let Some(n) = raw.parse_value::<usize>("study.warmup_calls")? {
            c.study.warmup_calls = n;
        }
        if let Some(n) = raw.parse_value::<usize>("study.timing_calls")? {
            if n == 0 {
                return Err(AppError::config("study.timing_calls", "must be at least 1"));
            }
            c.study.timing_calls = n;
        }
        Ok(c)
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario.build(self.params)
    }

    /// Discretization of `scenario` with `elements` elements and the scheme
    /// settings of this config.
    pub fn semidiscretization(
        &self,
        scenario: &Scenario,
        elements: usize,
    ) -> esdg_core::Result<Semidiscretization> {
        let (a, b) = scenario.domain;
        Ok(Semidiscretization::new(
            LobattoBasis::new(self.degree)?,
            Mesh1D::uniform(a, b, elements)?,
            scenario.params,
        )?
        .with_fluctuation(self.volume.clone())
        .with_surface(self.surface)
        .with_blend_rule(self.blend_rule)
        .with_source(scenario.source.clone()))
    }
}

fn model_params(raw: &RawConfig) -> AppResult<SveParams> {
    let mut p = SveParams::default();
    let set = |key: &str, slot: &mut f64| -> AppResult<()> {
        if let Some(v) = raw.parse_value::<f64>(key)? {
            *slot = v;
        }
        Ok(())
    };
    set("model.g", &mut p.g)?;
    set("model.density_ratio", &mut p.r)?;
    set("model.porosity", &mut p.porosity)?;
    set("model.manning_n", &mut p.manning_n)?;
    set("model.rho_f", &mut p.rho_f)?;
    set("model.h_min", &mut p.h_min)?;
    let discharge = raw.get("model.discharge").unwrap_or("grass");
    p.discharge = match discharge {
        "grass" => {
            for k in ["model.grain_diameter", "model.critical_shields"] {
                if raw.get(k).is_some() {
                    return Err(AppError::config(k, "only used with model.discharge = mpm"));
                }
            }
            Discharge::Grass {
                a_g: raw.parse_value("model.a_g")?.unwrap_or(0.01),
            }
        }
        "mpm" => {
            if raw.get("model.a_g").is_some() {
                return Err(AppError::config("model.a_g", "only used with model.discharge = grass"));
            }
            let d_s = raw
                .parse_value("model.grain_diameter")?
                .ok_or_else(|| AppError::config("model.grain_diameter", "required for mpm"))?;
            Discharge::Mpm {
                d_s,
                theta_c: raw.parse_value("model.critical_shields")?.unwrap_or(0.047),
            }
        }
        other => {
            return Err(AppError::config(
                "model.discharge",
                format!("`{other}` is not grass or mpm"),
            ))
        }
    };
    p.validate()
        .map_err(|e| AppError::config("model", e.to_string()))?;
    Ok(p)
}

fn time_settings(raw: &RawConfig, time: &mut TimeIntegrationConfig) -> AppResult<()> {
    if let Some(m) = raw.get("time.method") {
        time.method = match m {
            "ssprk33" => TimeMethod::Ssprk33,
            "rk4" => TimeMethod::Rk4,
            _ => return Err(AppError::config("time.method", format!("`{m}` is not ssprk33 or rk4"))),
        };
    }
    match (raw.parse_value::<f64>("time.dt")?, raw.parse_value::<f64>("time.cfl")?) {
        (Some(_), Some(_)) => {
            return Err(AppError::config("time.cfl", "give either time.dt or time.cfl, not both"))
        }
        (Some(dt), None) => time.stepping = Stepping::Fixed(dt),
        (None, Some(c)) => time.stepping = Stepping::Cfl(c),
        (None, None) => {}
    }
    if let Some(t) = raw.parse_value::<f64>("time.t_end")? {
        time.t_end = t;
    }
    match (
        raw.parse_value::<usize>("time.record_every")?,
        raw.parse_value::<f64>("time.record_interval")?,
    ) {
        (Some(_), Some(_)) => {
            return Err(AppError::config(
                "time.record_interval",
                "give either time.record_every or time.record_interval, not both",
            ))
        }
        (Some(n), None) => time.record_interval = RecordInterval::Steps(n),
        (None, Some(dt)) => time.record_interval = RecordInterval::Time(dt),
        (None, None) => {}
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> AppResult<RunConfig> {
        RunConfig::from_text(text, Path::new("test.ini"), &[])
    }

    #[test]
    fn scenario_defaults_apply() {
        let c = parse("[scheme]\nscenario = channel\n").unwrap();
        assert_eq!((c.elements, c.degree), (128, 4));
        assert_eq!(c.surface, SurfaceFluctuation::EsRoeBlend);
        assert_eq!(c.time.stepping, Stepping::Cfl(0.5));
        assert_eq!(c.time.t_end, 30_000.0);
    }

    #[test]
    fn full_file_parses() {
        let c = parse(
            "# convergence run\n[mesh]\nelements = 16 ; inline comment\ndegree = 3\n\
             [model]\ng = 9.81\ndensity_ratio = 0.3\nmanning_n = 0.01\n\
             [scheme]\nscenario = manufactured\nvolume = quadrature\nquadrature_points = 3\nsurface = es_llf\n\
             [time]\nmethod = rk4\ndt = 0.001\nt_end = 0.5\nrecord_interval = 0.1\n\
             [output]\ndirectory = out\nsnapshot_interval = 0.25\nlog_blending = true\n\
             [study]\nresolutions = 8, 16\nfluctuations = quadrature1, closed_form\n",
        )
        .unwrap();
        assert_eq!(c.elements, 16);
        assert_eq!(c.params.manning_n, 0.01);
        assert_eq!(c.volume, EcFluctuation::quadrature(3).unwrap());
        assert_eq!(c.time.method, TimeMethod::Rk4);
        assert_eq!(c.time.record_interval, RecordInterval::Time(0.1));
        assert_eq!(c.output.snapshot_interval, Some(0.25));
        assert!(c.output.log_blending);
        assert_eq!(c.study.resolutions, vec![8, 16]);
        assert_eq!(c.study.fluctuations.len(), 2);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = parse("[scheme]\nscenario = channel\n[mesh]\nelemnts = 3\n").unwrap_err();
        assert!(err.to_string().contains("elemnts"), "{err}");
        assert_eq!(err.exit_code(), 1);
        let err = parse("[scheme]\nscenario = channel\n[grid]\n").unwrap_err();
        assert!(err.to_string().contains("grid"));
    }

    #[test]
    fn invalid_values_name_their_key() {
        for (text, key) in [
            ("[scheme]\nscenario = channel\n[mesh]\ndegree = 40\n", "mesh.degree"),
            ("[scheme]\nscenario = channel\n[time]\ndt = 0.1\ncfl = 0.5\n", "time.cfl"),
            ("[scheme]\nscenario = channel\nsurface = roe\n", "scheme.surface"),
            ("[scheme]\nscenario = channel\n[model]\nporosity = x\n", "model.porosity"),
            ("[scheme]\nscenario = lake\n", "scheme.scenario"),
            ("[mesh]\nelements = 3\n", "scheme.scenario"),
        ] {
            let err = parse(text).unwrap_err();
            assert!(err.to_string().contains(key), "{key}: {err}");
        }
    }

    #[test]
    fn overrides_replace_values() {
        let c = RunConfig::from_text(
            "[scheme]\nscenario = well_balanced\n",
            Path::new("x"),
            &["mesh.degree=0".into(), "scheme.surface = es_llf".into()],
        )
        .unwrap();
        assert_eq!(c.degree, 0);
        assert_eq!(c.surface, SurfaceFluctuation::EsLlf);
        assert!(RunConfig::from_text("[scheme]\nscenario = channel\n", Path::new("x"), &["mesh.foo=1".into()]).is_err());
    }

    #[test]
    fn mpm_settings() {
        let c = parse("[scheme]\nscenario = channel\n[model]\ndischarge = mpm\ngrain_diameter = 0.001\nmanning_n = 0.02\n").unwrap();
        assert_eq!(c.params.discharge, Discharge::Mpm { d_s: 0.001, theta_c: 0.047 });
        assert!(parse("[scheme]\nscenario = channel\n[model]\ndischarge = mpm\n").is_err());
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        match parse("[scheme]\nscenario channel\n") {
            Err(AppError::Syntax { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }
}
