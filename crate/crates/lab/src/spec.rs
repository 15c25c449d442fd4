//! Experiment specification files (TOML or JSON).

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use gkdv_core::dynamics::SolverConfig;
use gkdv_core::Grid1D;

use crate::error::SpecError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n_points: usize,
    pub length: f64,
}

/// Shape of a synthesized bubble at unit scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BubbleShape {
    /// `x e^{-x²/4}`.
    OddGaussian,
    /// `(x² - 1) e^{-x²/2}`.
    MexicanHat,
}

impl BubbleShape {
    pub fn value(self, x: f64) -> f64 {
        match self {
            BubbleShape::OddGaussian => x * (-x * x / 4.0).exp(),
            BubbleShape::MexicanHat => (x * x - 1.0) * (-x * x / 2.0).exp(),
        }
    }
}

fn default_shape() -> BubbleShape {
    BubbleShape::OddGaussian
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BubbleSpec {
    pub h: f64,
    #[serde(default)]
    pub x0: f64,
    #[serde(default)]
    pub t0: f64,
    #[serde(default = "default_shape")]
    pub shape: BubbleShape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialData {
    GroundStateMultiple {
        amplitude: f64,
        #[serde(default)]
        center: f64,
    },
    Soliton {
        c: f64,
        #[serde(default)]
        center: f64,
    },
    /// `(amplitude + noise·η(x)) e^{-((x-center)/width)²}` with `η` a seeded
    /// sum of random-phase cosines.
    Gaussian {
        width: f64,
        amplitude: f64,
        #[serde(default)]
        center: f64,
        #[serde(default)]
        noise: f64,
    },
    Snapshot {
        path: PathBuf,
    },
    Synthesis {
        profiles: Vec<BubbleSpec>,
        #[serde(default)]
        t: f64,
    },
}

/// Optional overrides of [`SolverConfig`]; names match its fields.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub dt_init: Option<f64>,
    pub dt_floor: Option<f64>,
    pub t_end: Option<f64>,
    pub dealias_pad: Option<f64>,
    pub cfl_safety: Option<f64>,
    pub norm_growth_cap: Option<f64>,
    pub error_tol: Option<f64>,
    pub report_interval: Option<f64>,
    pub snapshot_interval: Option<f64>,
    pub report_window: Option<f64>,
    pub boundary_mass_tol: Option<f64>,
    pub adaptive: Option<bool>,
}

impl SolverSpec {
    pub fn build(&self, k: u32) -> SolverConfig {
        let mut c = SolverConfig::new(k);
        macro_rules! set {
            ($($f:ident),*) => {$(
                if let Some(v) = self.$f { c.$f = v; }
            )*};
        }
        set!(dt_init, dt_floor, t_end, dealias_pad, cfl_safety, norm_growth_cap, error_tol, report_interval, boundary_mass_tol, adaptive);
        if self.snapshot_interval.is_some() {
            c.snapshot_interval = self.snapshot_interval;
        }
        if self.report_window.is_some() {
            c.report_window = self.report_window;
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub directory: PathBuf,
    /// Also run on the doubled grid with half the `dt_floor`.
    #[serde(default)]
    pub refine: bool,
}

/// One sweep entry; unset fields keep the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepEntry {
    pub label: Option<String>,
    pub amplitude: Option<f64>,
    pub c: Option<f64>,
    pub n_points: Option<usize>,
    pub length: Option<f64>,
    pub dt_floor: Option<f64>,
    pub t_end: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub k: u32,
    #[serde(default)]
    pub seed: u64,
    pub initial_data: InitialData,
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub solver: SolverSpec,
    pub outputs: OutputSpec,
    #[serde(default)]
    pub sweep: Vec<SweepEntry>,
}

impl ExperimentSpec {
    /// Parse by extension: `.json` as JSON, anything else as TOML.
    pub fn from_file(path: &Path) -> Result<Self, SpecError> {
        let text = std::fs::read_to_string(path).map_err(|e| SpecError::io(path, e))?;
        let spec = Self::parse(&text, path)?;
        let mut spec = spec;
        spec.validate().map_err(|(key, msg)| SpecError::at_key(path, &text, &key, msg))?;
        if let Some(base) = path.parent() {
            spec.resolve_paths(base);
        }
        Ok(spec)
    }

    /// Make relative paths relative to `base` (the spec file's directory).
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.outputs.directory);
        if let InitialData::Snapshot { path } = &mut self.initial_data {
            fix(path);
        }
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, SpecError> {
        if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(text).map_err(|e| SpecError::Parse {
                file: path.to_path_buf(),
                line: e.line(),
                message: e.to_string(),
            })
        } else {
            toml::from_str(text).map_err(|e| {
                let line = e
                    .span()
                    .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
                    .unwrap_or(0);
                SpecError::Parse {
                    file: path.to_path_buf(),
                    line,
                    message: e.message().to_string(),
                }
            })
        }
    }

    /// Semantic checks; the error names the offending key.
    pub fn validate(&self) -> Result<(), (String, String)> {
        if self.k < 4 {
            return Err(("k".into(), format!("k must be ≥ 4, got {}", self.k)));
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(("name".into(), format!("name {:?} is not a plain label", self.name)));
        }
        if self.grid.is_none() && !matches!(self.initial_data, InitialData::Snapshot { .. }) {
            return Err(("grid".into(), "a [grid] table is required".into()));
        }
        let mut labels = BTreeSet::new();
        for plan in self.plans() {
            plan.grid().map_err(|e| ("n_points".to_string(), e.to_string()))?;
            plan.solver
                .validate()
                .map_err(|e| (solver_key(&e.to_string()), e.to_string()))?;
            if plan.label.is_empty() || plan.label.contains(['/', '\\']) {
                return Err(("label".into(), format!("label {:?} is not a plain name", plan.label)));
            }
            if !labels.insert(plan.label.clone()) {
                return Err(("label".into(), format!("sweep label {:?} is used twice", plan.label)));
            }
        }
        Ok(())
    }

    /// One plan per sweep entry, or a single plan without a sweep.
    pub fn plans(&self) -> Vec<RunPlan> {
        let base = RunPlan {
            label: self.name.clone(),
            k: self.k,
            seed: self.seed,
            initial_data: self.initial_data.clone(),
            grid: self.grid.clone(),
            solver: self.solver.build(self.k),
            directory: self.outputs.directory.clone(),
            refine: self.outputs.refine,
        };
        if self.sweep.is_empty() {
            return vec![base];
        }
        self.sweep
            .iter()
            .enumerate()
            .map(|(i, entry)| {
                let mut p = base.clone();
                p.label = entry.label.clone().unwrap_or_else(|| format!("run-{i:02}"));
                p.directory = self.outputs.directory.join(&p.label);
                match (&mut p.initial_data, entry.amplitude, entry.c) {
                    (InitialData::GroundStateMultiple { amplitude, .. }, Some(a), _)
                    | (InitialData::Gaussian { amplitude, .. }, Some(a), _) => *amplitude = a,
                    (InitialData::Soliton { c, .. }, _, Some(v)) => *c = v,
                    _ => {}
                }
                if let Some(g) = p.grid.as_mut() {
                    g.n_points = entry.n_points.unwrap_or(g.n_points);
                    g.length = entry.length.unwrap_or(g.length);
                }
                p.solver.dt_floor = entry.dt_floor.unwrap_or(p.solver.dt_floor);
                p.solver.t_end = entry.t_end.unwrap_or(p.solver.t_end);
                p
            })
            .collect()
    }
}

/// One run of an experiment, with sweep overrides applied.
#[derive(Debug, Clone, PartialEq)]
pub struct RunPlan {
    pub label: String,
    pub k: u32,
    pub seed: u64,
    pub initial_data: InitialData,
    pub grid: Option<GridSpec>,
    pub solver: SolverConfig,
    pub directory: PathBuf,
    pub refine: bool,
}

impl RunPlan {
    pub fn grid(&self) -> gkdv_core::Result<Option<Grid1D>> {
        self.grid
            .as_ref()
            .map(|g| Grid1D::new(g.n_points, g.length))
            .transpose()
    }
}

/// Best guess at which solver key a validation message is about.
fn solver_key(message: &str) -> String {
    const KEYS: [&str; 8] = [
        "dt_init",
        "dt_floor",
        "t_end",
        "dealias_pad",
        "cfl_safety",
        "norm_growth_cap",
        "report_interval",
        "error_tol",
    ];
    KEYS.iter()
        .filter_map(|k| message.find(k).map(|at| (at, *k)))
        .min()
        .map(|(_, k)| k.to_string())
        .unwrap_or_else(|| "solver".into())
}
