//! Line-oriented `key = value` experiment configuration.
//!
//! The format is deliberately small: one assignment per line, `#`
//! comments, optional `[section]` headers for grouping (the headers are
//! cosmetic). Resolution lists are written inline, e.g. `N_list = 16 32
//! 64` (commas also work), which is why this is not TOML. Every
//! diagnostic carries the offending line number.
//!
//! ```text
//! [case]
//! case    = taylor_green_2d
//! stencil = d2q9
//! N_list  = 16 32 64 128
//! nu      = 0.02
//!
//! [run]
//! study      = convergence
//! output_dir = out
//! ```

use crate::error::{Error, Result};
use crate::lattice::{d2q9, d3q19, Stencil};
use crate::manufactured::{shear_wave, taylor_green_2d, uniform, AnalyticFlow, InitMode};
use crate::solver::RunOptions;
use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseKind {
    TaylorGreen2d,
    ShearWave3d,
    Uniform,
}

impl CaseKind {
    pub fn name(&self) -> &'static str {
        match self {
            CaseKind::TaylorGreen2d => "taylor_green_2d",
            CaseKind::ShearWave3d => "shear_wave_3d",
            CaseKind::Uniform => "uniform",
        }
    }
}

impl fmt::Display for CaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StencilKind {
    D2q9,
    D3q19,
}

impl StencilKind {
    pub fn name(&self) -> &'static str {
        match self {
            StencilKind::D2q9 => "d2q9",
            StencilKind::D3q19 => "d3q19",
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            StencilKind::D2q9 => 2,
            StencilKind::D3q19 => 3,
        }
    }

    pub fn build(&self) -> Stencil {
        match self {
            StencilKind::D2q9 => d2q9(),
            StencilKind::D3q19 => d3q19(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    Convergence,
    Limsup,
    Stress,
    SingleRun,
}

impl StudyKind {
    pub fn name(&self) -> &'static str {
        match self {
            StudyKind::Convergence => "convergence",
            StudyKind::Limsup => "limsup",
            StudyKind::Stress => "stress",
            StudyKind::SingleRun => "single_run",
        }
    }
}

/// Pass/fail thresholds applied by the experiment driver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    /// Velocity-error order must reach at least this (finest pair).
    pub eoc_min: f64,
    /// ... and stay below this.
    pub eoc_max: f64,
    /// Minimum sign-agreement fraction in stress studies.
    pub sign_min: f64,
    /// Relative growth allowed between successive limsup estimates.
    pub limsup_slack: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            eoc_min: 1.7,
            eoc_max: 2.3,
            sign_min: 0.95,
            limsup_slack: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub case: CaseKind,
    pub stencil: StencilKind,
    pub n_list: Vec<usize>,
    pub nu: f64,
    /// Characteristic speed of the flow.
    pub u: f64,
    /// Box edge length.
    pub l: f64,
    /// Horizon for runs; snapshot time for stress studies.
    pub t_end: f64,
    pub init: InitMode,
    pub study: StudyKind,
    pub output_dir: PathBuf,
    /// Claimed consistency order probed by limsup studies.
    pub limsup_order: u32,
    pub worker_count: usize,
    /// Abort multiplier for the runtime blow-up guard.
    pub blowup_factor: f64,
    pub thresholds: Thresholds,
}

impl ExperimentConfig {
    /// Builds the analytic flow this configuration describes.
    pub fn flow(&self) -> Result<AnalyticFlow> {
        match self.case {
            CaseKind::TaylorGreen2d => taylor_green_2d(self.u, self.l, self.nu),
            CaseKind::ShearWave3d => shear_wave(self.u, self.l, self.nu, 3),
            CaseKind::Uniform => uniform(1.0, [self.u, 0.0, 0.0], self.stencil.dimension()),
        }
    }
}

struct RawEntries {
    entries: HashMap<String, (String, usize)>,
}

const KNOWN_KEYS: [&str; 17] = [
    "case",
    "stencil",
    "N_list",
    "nu",
    "U",
    "L",
    "t_end",
    "init",
    "study",
    "output_dir",
    "limsup_order",
    "worker_count",
    "eoc_min",
    "eoc_max",
    "sign_min",
    "limsup_slack",
    "blowup_factor",
];

fn scan(text: &str) -> Result<RawEntries> {
    let mut entries = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            if !rest.ends_with(']') || rest.len() < 2 {
                return Err(Error::config(lineno, format!("malformed section header {line:?}")));
            }
            continue;
        }
        let Some(eq) = line.find('=') else {
            return Err(Error::config(
                lineno,
                format!("expected `key = value`, found {line:?}"),
            ));
        };
        let key = line[..eq].trim().to_string();
        let value = line[eq + 1..].trim().to_string();
        if key.is_empty() {
            return Err(Error::config(lineno, "missing key before `=`"));
        }
        if value.is_empty() {
            return Err(Error::config(lineno, format!("key {key:?} has no value")));
        }
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(Error::config(lineno, format!("unknown key {key:?}")));
        }
        if let Some((_, first)) = entries.insert(key.clone(), (value, lineno)) {
            return Err(Error::config(
                lineno,
                format!("key {key:?} already set on line {first}"),
            ));
        }
    }
    Ok(RawEntries { entries })
}

impl RawEntries {
    fn take(&mut self, key: &str) -> Option<(String, usize)> {
        self.entries.remove(key)
    }

    fn required(&mut self, key: &str) -> Result<(String, usize)> {
        self.take(key)
            .ok_or_else(|| Error::config(0, format!("missing required key {key:?}")))
    }
}

fn parse_f64(key: &str, value: &str, line: usize) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|e| Error::config(line, format!("{key} = {value:?}: {e}")))
}

fn parse_positive(key: &str, value: &str, line: usize) -> Result<f64> {
    let v = parse_f64(key, value, line)?;
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::config(line, format!("{key} must be positive, got {value}")));
    }
    Ok(v)
}

/// Parses and validates an experiment configuration.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut raw = scan(text)?;

    let (case_str, case_line) = raw.required("case")?;
    let case = match case_str.as_str() {
        "taylor_green_2d" => CaseKind::TaylorGreen2d,
        "shear_wave_3d" => CaseKind::ShearWave3d,
        "uniform" => CaseKind::Uniform,
        other => {
            return Err(Error::config(
                case_line,
                format!("unknown case {other:?} (expected taylor_green_2d, shear_wave_3d or uniform)"),
            ))
        }
    };

    let (stencil_str, stencil_line) = raw.required("stencil")?;
    let stencil = match stencil_str.as_str() {
        "d2q9" => StencilKind::D2q9,
        "d3q19" => StencilKind::D3q19,
        other => {
            return Err(Error::config(
                stencil_line,
                format!("unknown stencil {other:?} (expected d2q9 or d3q19)"),
            ))
        }
    };
    let case_dim = match case {
        CaseKind::TaylorGreen2d => Some(2),
        CaseKind::ShearWave3d => Some(3),
        CaseKind::Uniform => None,
    };
    if let Some(d) = case_dim {
        if d != stencil.dimension() {
            return Err(Error::config(
                stencil_line,
                format!(
                    "case {} is {d}-dimensional but stencil {} is {}-dimensional",
                    case.name(),
                    stencil_str,
                    stencil.dimension()
                ),
            ));
        }
    }

    let (nlist_str, nlist_line) = raw.required("N_list")?;
    let mut n_list = Vec::new();
    for tok in nlist_str.split([' ', '\t', ',']).filter(|t| !t.is_empty()) {
        let n: usize = tok
            .parse()
            .map_err(|e| Error::config(nlist_line, format!("N_list entry {tok:?}: {e}")))?;
        if n < 4 {
            return Err(Error::config(
                nlist_line,
                format!("resolutions must be at least 4, got {n}"),
            ));
        }
        n_list.push(n);
    }
    if n_list.is_empty() {
        return Err(Error::config(nlist_line, "N_list is empty"));
    }
    if !n_list.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::config(
            nlist_line,
            format!("N_list must be strictly increasing, got {n_list:?}"),
        ));
    }

    let (nu_str, nu_line) = raw.required("nu")?;
    let nu = parse_positive("nu", &nu_str, nu_line)?;

    let (study_str, study_line) = raw.required("study")?;
    let study = match study_str.as_str() {
        "convergence" => StudyKind::Convergence,
        "limsup" => StudyKind::Limsup,
        "stress" => StudyKind::Stress,
        "single_run" => StudyKind::SingleRun,
        other => {
            return Err(Error::config(
                study_line,
                format!("unknown study {other:?} (expected convergence, limsup, stress or single_run)"),
            ))
        }
    };
    if study == StudyKind::Limsup && n_list.len() < 3 {
        return Err(Error::config(
            nlist_line,
            format!("limsup studies need at least three resolutions, got {}", n_list.len()),
        ));
    }

    let (outdir_str, _) = raw.required("output_dir")?;
    let output_dir = PathBuf::from(outdir_str);

    let l = match raw.take("L") {
        Some((v, line)) => parse_positive("L", &v, line)?,
        None => 1.0,
    };

    // default speed: lattice Mach number 0.05 at the coarsest grid
    // (u * h = 0.05 with h = L / N_min); a quiescent uniform state
    // otherwise
    let u = match raw.take("U") {
        Some((v, line)) => {
            let u = parse_f64("U", &v, line)?;
            let want_positive = case != CaseKind::Uniform;
            if want_positive && !(u > 0.0) {
                return Err(Error::config(line, format!("U must be positive, got {u}")));
            }
            if !(u >= 0.0) || !u.is_finite() {
                return Err(Error::config(line, format!("U must be nonnegative, got {u}")));
            }
            u
        }
        None => match case {
            CaseKind::Uniform => 0.0,
            _ => 0.05 * n_list[0] as f64 / l,
        },
    };

    let t_end = match raw.take("t_end") {
        Some((v, line)) => {
            let t = parse_f64("t_end", &v, line)?;
            if !(t >= 0.0) || !t.is_finite() {
                return Err(Error::config(line, format!("t_end must be nonnegative, got {t}")));
            }
            t
        }
        None => {
            // a fifth of the slowest vortex decay time
            0.2 * l * l / (4.0 * std::f64::consts::PI.powi(2) * nu)
        }
    };

    let init = match raw.take("init") {
        Some((v, line)) => match v.as_str() {
            "equilibrium" => InitMode::Equilibrium,
            "chapman_enskog" => InitMode::ChapmanEnskog,
            other => {
                return Err(Error::config(
                    line,
                    format!("unknown init {other:?} (expected equilibrium or chapman_enskog)"),
                ))
            }
        },
        None => InitMode::Equilibrium,
    };

    let limsup_order = match raw.take("limsup_order") {
        Some((v, line)) => {
            let k: u32 = v
                .parse()
                .map_err(|e| Error::config(line, format!("limsup_order = {v:?}: {e}")))?;
            if k == 0 || k > 8 {
                return Err(Error::config(line, format!("limsup_order must be in 1..=8, got {k}")));
            }
            k
        }
        None => 2,
    };

    let worker_count = match raw.take("worker_count") {
        Some((v, line)) => {
            let w: usize = v
                .parse()
                .map_err(|e| Error::config(line, format!("worker_count = {v:?}: {e}")))?;
            if w == 0 || w > 1024 {
                return Err(Error::config(line, format!("worker_count must be in 1..=1024, got {w}")));
            }
            w
        }
        None => 1,
    };

    let mut thresholds = Thresholds::default();
    if let Some((v, line)) = raw.take("eoc_min") {
        thresholds.eoc_min = parse_positive("eoc_min", &v, line)?;
    }
    if let Some((v, line)) = raw.take("eoc_max") {
        thresholds.eoc_max = parse_positive("eoc_max", &v, line)?;
    }
    if thresholds.eoc_min >= thresholds.eoc_max {
        return Err(Error::config(
            0,
            format!(
                "eoc_min {} must stay below eoc_max {}",
                thresholds.eoc_min, thresholds.eoc_max
            ),
        ));
    }
    if let Some((v, line)) = raw.take("sign_min") {
        let s = parse_positive("sign_min", &v, line)?;
        if s > 1.0 {
            return Err(Error::config(line, format!("sign_min is a fraction, got {s}")));
        }
        thresholds.sign_min = s;
    }
    if let Some((v, line)) = raw.take("limsup_slack") {
        let s = parse_f64("limsup_slack", &v, line)?;
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::config(line, format!("limsup_slack must be nonnegative, got {s}")));
        }
        thresholds.limsup_slack = s;
    }
    let mut blowup_factor = RunOptions::default().blowup_factor;
    if let Some((v, line)) = raw.take("blowup_factor") {
        let b = parse_positive("blowup_factor", &v, line)?;
        if b < 10.0 {
            return Err(Error::config(line, format!("blowup_factor below 10 ({b}) would abort healthy runs")));
        }
        blowup_factor = b;
    }

    Ok(ExperimentConfig {
        case,
        stencil,
        n_list,
        nu,
        u,
        l,
        t_end,
        init,
        study,
        output_dir,
        limsup_order,
        worker_count,
        blowup_factor,
        thresholds,
    })
}
