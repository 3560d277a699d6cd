//! Experiment configuration: JSON in, JSON out.
//!
//! Parsing happens in two passes. A structural pass walks the raw JSON value
//! and collects every violation (unknown key, wrong type, out-of-range
//! number) together with its path. Only a structurally clean document is then
//! deserialized and checked for cross-field constraints that need the built
//! objects, such as the CFL limit or retained wavevectors.

use std::f64::consts::PI;
use std::fmt;

use meanflow_core::forcing::PhaseMode;
use meanflow_core::{Complex64, ForceFamily, ForcingSpec, GridSpec, SolverConfig, SpectralField};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain: DomainConfig,
    pub physics: PhysicsConfig,
    pub time: TimeConfig,
    #[serde(default)]
    pub initial: FieldConfig,
    pub forcing: ForcingConfig,
    #[serde(default)]
    pub averaging: AveragingConfig,
    #[serde(default)]
    pub ensemble: EnsembleConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub dimension: usize,
    pub resolution: usize,
    #[serde(default = "default_period")]
    pub period: f64,
    #[serde(default = "default_dealias")]
    pub dealias_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    pub viscosity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_stride")]
    pub sample_stride: usize,
}

/// A divergence-free field description, used for the initial condition and
/// for the spatial parts of the forcing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldConfig {
    #[default]
    Zero,
    /// Explicit complex amplitudes; each is Leray-projected.
    Modes { modes: Vec<ModeConfig> },
    /// `amplitude · sin(wavenumber · 2π y / L) e_x`.
    Shear { wavenumber: i64, amplitude: f64 },
    /// Random phases on the shell `|k| ≤ max_shell` scaled to `energy = ‖u‖²`.
    Random {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        max_shell: f64,
        energy: f64,
    },
    /// 2D Taylor–Green cell `(sin x cos y, −cos x sin y) · amplitude`.
    TaylorGreen { amplitude: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    pub k: Vec<i64>,
    /// One `[re, im]` pair per velocity component.
    pub amplitude: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForcingConfig {
    Steady {
        field: FieldConfig,
    },
    ConvergentToSteady {
        limit: FieldConfig,
        transient: FieldConfig,
        rate: f64,
    },
    TimePeriodic {
        base: FieldConfig,
        modulation: FieldConfig,
        angular_frequency: f64,
    },
    Bursts {
        pulse: FieldConfig,
        pulse_width: f64,
        period: f64,
    },
    RandomPhases {
        modes: Vec<ModeConfig>,
        correlation_time: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AveragingConfig {
    /// Increasing averaging horizons; empty means `[t_end]`.
    #[serde(default)]
    pub horizons: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "default_members")]
    pub n: usize,
    #[serde(default = "default_family_amplitude")]
    pub amplitude: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<Vec<i64>>>,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self { enabled: false, n: default_members(), amplitude: default_family_amplitude(), schedule: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
    Checkpoint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: String,
    #[serde(default = "default_formats")]
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: default_directory(), formats: default_formats() }
    }
}

fn default_period() -> f64 {
    2.0 * PI
}

fn default_dealias() -> f64 {
    meanflow_core::spectral::DEFAULT_DEALIAS_FRACTION
}

fn default_stride() -> usize {
    10
}

fn default_members() -> usize {
    8
}

fn default_family_amplitude() -> f64 {
    0.1
}

fn default_directory() -> String {
    "output".into()
}

fn default_formats() -> Vec<OutputFormat> {
    vec![OutputFormat::Csv, OutputFormat::Json, OutputFormat::Checkpoint]
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct ConfigErrors(pub Vec<Violation>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} configuration error(s)", self.0.len())?;
        for v in &self.0 {
            write!(f, "\n  {v}")?;
        }
        Ok(())
    }
}

impl ConfigErrors {
    pub fn paths(&self) -> Vec<&str> {
        self.0.iter().map(|v| v.path.as_str()).collect()
    }
}

/// Parses and validates a configuration, filling documented defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigErrors> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| ConfigErrors(vec![Violation { path: String::new(), message: format!("invalid JSON: {e}") }]))?;
    let mut checker = Checker::default();
    checker.config(&value);
    if !checker.violations.is_empty() {
        return Err(ConfigErrors(checker.violations));
    }
    let mut config: ExperimentConfig = serde_json::from_value(value)
        .map_err(|e| ConfigErrors(vec![Violation { path: String::new(), message: e.to_string() }]))?;
    if config.averaging.horizons.is_empty() && config.time.t_end > 0.0 {
        config.averaging.horizons = vec![config.time.t_end];
    }
    let violations = semantic_violations(&config);
    if violations.is_empty() {
        Ok(config)
    } else {
        Err(ConfigErrors(violations))
    }
}

impl ExperimentConfig {
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Single-line form stored in checkpoints and reports.
    pub fn echo(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn grid(&self) -> meanflow_core::Result<GridSpec> {
        let d = &self.domain;
        GridSpec::with_dealias(d.dimension, d.resolution, d.period, d.dealias_fraction)
    }

    /// Builds every runtime object the configuration describes.
    pub fn build(&self) -> Result<Experiment, ConfigErrors> {
        let grid = self.grid().map_err(|e| single("domain", e))?;
        let initial = self.initial.build(&grid, self.seed, "initial")?;
        let forcing = self.forcing.build(&grid, self.seed)?;
        let solver = SolverConfig {
            grid,
            viscosity: self.physics.viscosity,
            dt: self.time.dt,
            t_end: self.time.t_end,
            forcing,
            initial,
            sample_stride: self.time.sample_stride,
        };
        solver.validate().map_err(|e| single("time.dt", e))?;
        let family = if self.ensemble.enabled {
            Some(self.family(&solver.forcing)?)
        } else {
            None
        };
        Ok(Experiment { solver, horizons: self.averaging.horizons.clone(), family })
    }

    fn family(&self, forcing: &ForcingSpec) -> Result<ForceFamily, ConfigErrors> {
        let ForcingSpec::Steady { base } = forcing else {
            return Err(single_message("forcing.kind", "an ensemble needs a steady mean force"));
        };
        let mut family =
            ForceFamily::new(base.clone(), self.ensemble.amplitude, self.seed).map_err(|e| single("ensemble", e))?;
        if let Some(schedule) = &self.ensemble.schedule {
            family = family.with_schedule(schedule.clone());
        }
        for k in 1..=self.ensemble.n {
            family.member(k).map_err(|e| single(&format!("ensemble.schedule[{}]", k - 1), e))?;
        }
        Ok(family)
    }
}

/// Runtime objects built from an [`ExperimentConfig`].
#[derive(Clone, Debug)]
pub struct Experiment {
    pub solver: SolverConfig,
    pub horizons: Vec<f64>,
    pub family: Option<ForceFamily>,
}

fn single(path: &str, e: impl fmt::Display) -> ConfigErrors {
    single_message(path, &e.to_string())
}

fn single_message(path: &str, message: &str) -> ConfigErrors {
    ConfigErrors(vec![Violation { path: path.into(), message: message.into() }])
}

fn field_seed(seed: u64, path: &str) -> u64 {
    // Distinct default seeds per field role, stable across releases.
    path.bytes().fold(seed ^ 0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

fn complex_amplitude(a: &[[f64; 2]]) -> Vec<Complex64> {
    a.iter().map(|[re, im]| Complex64::new(*re, *im)).collect()
}

impl FieldConfig {
    pub fn build(&self, grid: &GridSpec, seed: u64, path: &str) -> Result<SpectralField, ConfigErrors> {
        let field = match self {
            FieldConfig::Zero => Ok(SpectralField::zeros(grid)),
            FieldConfig::Modes { modes } => {
                let modes: Vec<_> = modes.iter().map(|m| (m.k.clone(), complex_amplitude(&m.amplitude))).collect();
                SpectralField::from_modes(grid, &modes)
            }
            FieldConfig::Shear { wavenumber, amplitude } => {
                let mut k = vec![0; grid.dimension()];
                k[1] = *wavenumber;
                let mut amp = vec![Complex64::new(0.0, 0.0); grid.dimension()];
                amp[0] = Complex64::new(0.0, -amplitude / 2.0);
                SpectralField::from_modes(grid, &[(k, amp)])
            }
            FieldConfig::Random { seed: own, max_shell, energy } => {
                SpectralField::random(grid, own.unwrap_or_else(|| field_seed(seed, path)), *max_shell, *energy)
            }
            FieldConfig::TaylorGreen { amplitude } => {
                let q = Complex64::new(0.0, -0.25 * amplitude);
                SpectralField::from_modes(grid, &[(vec![1, 1], vec![q, -q]), (vec![1, -1], vec![q, q])])
            }
        };
        field.map_err(|e| single(path, e))
    }
}

impl ForcingConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            ForcingConfig::Steady { .. } => "steady",
            ForcingConfig::ConvergentToSteady { .. } => "convergent_to_steady",
            ForcingConfig::TimePeriodic { .. } => "time_periodic",
            ForcingConfig::Bursts { .. } => "bursts",
            ForcingConfig::RandomPhases { .. } => "random_phases",
        }
    }

    pub fn build(&self, grid: &GridSpec, seed: u64) -> Result<ForcingSpec, ConfigErrors> {
        let spec = match self {
            ForcingConfig::Steady { field } => Ok(ForcingSpec::steady(field.build(grid, seed, "forcing.field")?)),
            ForcingConfig::ConvergentToSteady { limit, transient, rate } => ForcingSpec::convergent(
                limit.build(grid, seed, "forcing.limit")?,
                transient.build(grid, seed, "forcing.transient")?,
                *rate,
            ),
            ForcingConfig::TimePeriodic { base, modulation, angular_frequency } => ForcingSpec::periodic(
                base.build(grid, seed, "forcing.base")?,
                modulation.build(grid, seed, "forcing.modulation")?,
                *angular_frequency,
            ),
            ForcingConfig::Bursts { pulse, pulse_width, period } => {
                ForcingSpec::bursts(pulse.build(grid, seed, "forcing.pulse")?, *pulse_width, *period)
            }
            ForcingConfig::RandomPhases { modes, correlation_time, seed: own } => {
                let modes = modes
                    .iter()
                    .map(|m| PhaseMode { wavevector: m.k.clone(), amplitude: complex_amplitude(&m.amplitude) })
                    .collect();
                ForcingSpec::random_phases(
                    grid,
                    modes,
                    *correlation_time,
                    own.unwrap_or_else(|| field_seed(seed, "forcing")),
                )
            }
        };
        spec.map_err(|e| single("forcing", e))
    }
}

/// Cross-field checks on a structurally valid configuration.
fn semantic_violations(config: &ExperimentConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |path: &str, message: String| out.push(Violation { path: path.into(), message });
    let dt = config.time.dt;
    let t_end = config.time.t_end;
    if !is_multiple(t_end, dt) {
        push("time.t_end", format!("{t_end} is not a whole number of steps of {dt}"));
    }
    let mut previous = 0.0;
    for (i, &h) in config.averaging.horizons.iter().enumerate() {
        let path = format!("averaging.horizons[{i}]");
        if h > t_end * (1.0 + 1e-12) {
            push(&path, format!("{h} exceeds t_end = {t_end}"));
        }
        if h <= previous {
            push(&path, "horizons must be strictly increasing".into());
        }
        if !is_multiple(h, dt) {
            push(&path, format!("{h} is not a whole number of steps of {dt}"));
        }
        previous = h;
    }
    if let Err(ConfigErrors(v)) = config.build() {
        out.extend(v);
    }
    out
}

fn is_multiple(t: f64, dt: f64) -> bool {
    let steps = (t / dt).round();
    (steps * dt - t).abs() <= 1e-9 * t.abs().max(dt)
}

/// Structural validator over the raw JSON value.
#[derive(Default)]
struct Checker {
    violations: Vec<Violation>,
}

enum Num {
    Positive,
    NonNegative,
    Finite,
    /// `(lo, hi]`
    HalfOpen(f64, f64),
    AtLeast(f64),
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

impl Checker {
    fn fail(&mut self, path: &str, message: impl Into<String>) {
        self.violations.push(Violation { path: path.into(), message: message.into() });
    }

    /// Checks that `value` is an object whose keys are all known and whose
    /// required keys are present.
    fn object<'a>(
        &mut self,
        path: &str,
        value: &'a Value,
        required: &[&str],
        optional: &[&str],
    ) -> Option<&'a Map<String, Value>> {
        let Some(map) = value.as_object() else {
            self.fail(path, "expected an object");
            return None;
        };
        for key in map.keys() {
            if !required.contains(&key.as_str()) && !optional.contains(&key.as_str()) {
                self.fail(&join(path, key), "unknown key");
            }
        }
        for key in required {
            if !map.contains_key(*key) {
                self.fail(&join(path, key), "missing required key");
            }
        }
        Some(map)
    }

    fn number(&mut self, path: &str, value: Option<&Value>, rule: Num) -> Option<f64> {
        let value = value?;
        let Some(x) = value.as_f64() else {
            self.fail(path, "expected a number");
            return None;
        };
        let (ok, what) = match rule {
            Num::Positive => (x.is_finite() && x > 0.0, "must be positive".to_string()),
            Num::NonNegative => (x.is_finite() && x >= 0.0, "must be non-negative".to_string()),
            Num::Finite => (x.is_finite(), "must be finite".to_string()),
            Num::HalfOpen(lo, hi) => (x > lo && x <= hi, format!("must lie in ({lo}, {hi}]")),
            Num::AtLeast(lo) => (x.is_finite() && x >= lo, format!("must be at least {lo}")),
        };
        if !ok {
            self.fail(path, format!("{what}, got {x}"));
            return None;
        }
        Some(x)
    }

    fn integer(&mut self, path: &str, value: Option<&Value>, min: i64) -> Option<i64> {
        let value = value?;
        let Some(x) = value.as_i64() else {
            self.fail(path, "expected an integer");
            return None;
        };
        if x < min {
            self.fail(path, format!("must be at least {min}, got {x}"));
            return None;
        }
        Some(x)
    }

    fn unsigned(&mut self, path: &str, value: Option<&Value>) {
        if let Some(v) = value {
            if v.as_u64().is_none() {
                self.fail(path, "expected a non-negative integer");
            }
        }
    }

    fn array<'a>(&mut self, path: &str, value: Option<&'a Value>) -> Option<&'a Vec<Value>> {
        let value = value?;
        let array = value.as_array();
        if array.is_none() {
            self.fail(path, "expected an array");
        }
        array
    }

    fn config(&mut self, value: &Value) {
        let Some(map) = self.object(
            "",
            value,
            &["domain", "physics", "time", "forcing"],
            &["initial", "averaging", "ensemble", "output", "seed"],
        ) else {
            return;
        };
        let dimension = map.get("domain").and_then(|d| self.domain(d));
        if let Some(p) = map.get("physics") {
            if let Some(m) = self.object("physics", p, &["viscosity"], &[]) {
                self.number("physics.viscosity", m.get("viscosity"), Num::Positive);
            }
        }
        if let Some(t) = map.get("time") {
            if let Some(m) = self.object("time", t, &["dt", "t_end"], &["sample_stride"]) {
                self.number("time.dt", m.get("dt"), Num::Positive);
                self.number("time.t_end", m.get("t_end"), Num::NonNegative);
                self.integer("time.sample_stride", m.get("sample_stride"), 1);
            }
        }
        if let Some(f) = map.get("initial") {
            self.field("initial", f, dimension);
        }
        if let Some(f) = map.get("forcing") {
            self.forcing(f, dimension);
        }
        if let Some(a) = map.get("averaging") {
            if let Some(m) = self.object("averaging", a, &[], &["horizons"]) {
                if let Some(hs) = self.array("averaging.horizons", m.get("horizons")) {
                    for (i, h) in hs.iter().enumerate() {
                        self.number(&format!("averaging.horizons[{i}]"), Some(h), Num::Positive);
                    }
                }
            }
        }
        if let Some(e) = map.get("ensemble") {
            self.ensemble(e, dimension);
        }
        if let Some(o) = map.get("output") {
            self.output(o);
        }
        self.unsigned("seed", map.get("seed"));
    }

    fn domain(&mut self, value: &Value) -> Option<usize> {
        let m = self.object("domain", value, &["dimension", "resolution"], &["period", "dealias_fraction"])?;
        let dimension = self.integer("domain.dimension", m.get("dimension"), 2);
        let dimension = match dimension {
            Some(d @ 2..=3) => Some(d as usize),
            Some(d) => {
                self.fail("domain.dimension", format!("must be 2 or 3, got {d}"));
                None
            }
            None => None,
        };
        if let Some(n) = self.integer("domain.resolution", m.get("resolution"), 8) {
            if !(n as u64).is_power_of_two() {
                self.fail("domain.resolution", format!("must be a power of two, got {n}"));
            }
        }
        self.number("domain.period", m.get("period"), Num::Positive);
        self.number("domain.dealias_fraction", m.get("dealias_fraction"), Num::HalfOpen(0.0, 1.0));
        dimension
    }

    fn wavevector(&mut self, path: &str, value: Option<&Value>, dimension: Option<usize>) {
        let Some(k) = self.array(path, value) else { return };
        if let Some(d) = dimension {
            if k.len() != d {
                self.fail(path, format!("expected {d} components, got {}", k.len()));
            }
        }
        for (i, c) in k.iter().enumerate() {
            if c.as_i64().is_none() {
                self.fail(&format!("{path}[{i}]"), "expected an integer");
            }
        }
    }

    fn modes(&mut self, path: &str, value: Option<&Value>, dimension: Option<usize>) {
        let Some(modes) = self.array(path, value) else { return };
        if modes.is_empty() {
            self.fail(path, "at least one mode is required");
        }
        for (i, mode) in modes.iter().enumerate() {
            let p = format!("{path}[{i}]");
            let Some(m) = self.object(&p, mode, &["k", "amplitude"], &[]) else { continue };
            self.wavevector(&join(&p, "k"), m.get("k"), dimension);
            let ap = join(&p, "amplitude");
            let Some(amp) = self.array(&ap, m.get("amplitude")) else { continue };
            if let Some(d) = dimension {
                if amp.len() != d {
                    self.fail(&ap, format!("expected {d} components, got {}", amp.len()));
                }
            }
            for (c, z) in amp.iter().enumerate() {
                let zp = format!("{ap}[{c}]");
                match z.as_array() {
                    Some(pair) if pair.len() == 2 => {
                        self.number(&format!("{zp}[0]"), Some(&pair[0]), Num::Finite);
                        self.number(&format!("{zp}[1]"), Some(&pair[1]), Num::Finite);
                    }
                    _ => self.fail(&zp, "expected a [re, im] pair"),
                }
            }
        }
    }

    fn kind<'a>(&mut self, path: &str, value: &'a Value, kinds: &[&str]) -> Option<&'a str> {
        let kp = join(path, "kind");
        let Some(kind) = value.get("kind") else {
            if value.is_object() {
                self.fail(&kp, "missing required key");
            } else {
                self.fail(path, "expected an object");
            }
            return None;
        };
        match kind.as_str() {
            Some(k) if kinds.contains(&k) => Some(k),
            _ => {
                self.fail(&kp, format!("expected one of {}", kinds.join(", ")));
                None
            }
        }
    }

    fn field(&mut self, path: &str, value: &Value, dimension: Option<usize>) {
        let kinds = ["zero", "modes", "shear", "random", "taylor_green"];
        let Some(kind) = self.kind(path, value, &kinds) else { return };
        match kind {
            "zero" => {
                self.object(path, value, &["kind"], &[]);
            }
            "modes" => {
                if let Some(m) = self.object(path, value, &["kind", "modes"], &[]) {
                    self.modes(&join(path, "modes"), m.get("modes"), dimension);
                }
            }
            "shear" => {
                if let Some(m) = self.object(path, value, &["kind", "wavenumber", "amplitude"], &[]) {
                    self.integer(&join(path, "wavenumber"), m.get("wavenumber"), 1);
                    self.number(&join(path, "amplitude"), m.get("amplitude"), Num::Finite);
                }
            }
            "random" => {
                if let Some(m) = self.object(path, value, &["kind", "max_shell", "energy"], &["seed"]) {
                    self.unsigned(&join(path, "seed"), m.get("seed"));
                    self.number(&join(path, "max_shell"), m.get("max_shell"), Num::AtLeast(1.0));
                    self.number(&join(path, "energy"), m.get("energy"), Num::NonNegative);
                }
            }
            "taylor_green" => {
                if let Some(m) = self.object(path, value, &["kind", "amplitude"], &[]) {
                    self.number(&join(path, "amplitude"), m.get("amplitude"), Num::Finite);
                }
                if dimension == Some(3) {
                    self.fail(path, "the Taylor-Green cell is two-dimensional");
                }
            }
            _ => unreachable!(),
        }
    }

    fn forcing(&mut self, value: &Value, dimension: Option<usize>) {
        let kinds = ["steady", "convergent_to_steady", "time_periodic", "bursts", "random_phases"];
        let Some(kind) = self.kind("forcing", value, &kinds) else { return };
        let (required, optional): (&[&str], &[&str]) = match kind {
            "steady" => (&["kind", "field"], &[]),
            "convergent_to_steady" => (&["kind", "limit", "transient", "rate"], &[]),
            "time_periodic" => (&["kind", "base", "modulation", "angular_frequency"], &[]),
            "bursts" => (&["kind", "pulse", "pulse_width", "period"], &[]),
            _ => (&["kind", "modes", "correlation_time"], &["seed"]),
        };
        let Some(m) = self.object("forcing", value, required, optional) else { return };
        for key in ["field", "limit", "transient", "base", "modulation", "pulse"] {
            if let Some(f) = m.get(key) {
                if required.contains(&key) {
                    self.field(&join("forcing", key), f, dimension);
                }
            }
        }
        self.number("forcing.rate", m.get("rate"), Num::Positive);
        self.number("forcing.angular_frequency", m.get("angular_frequency"), Num::Positive);
        self.number("forcing.pulse_width", m.get("pulse_width"), Num::HalfOpen(0.0, 1.0));
        self.number("forcing.period", m.get("period"), Num::AtLeast(1.0));
        self.number("forcing.correlation_time", m.get("correlation_time"), Num::Positive);
        if kind == "random_phases" {
            self.modes("forcing.modes", m.get("modes"), dimension);
            self.unsigned("forcing.seed", m.get("seed"));
        }
    }

    fn ensemble(&mut self, value: &Value, dimension: Option<usize>) {
        let Some(m) = self.object("ensemble", value, &[], &["enabled", "n", "amplitude", "schedule"]) else {
            return;
        };
        if let Some(e) = m.get("enabled") {
            if !e.is_boolean() {
                self.fail("ensemble.enabled", "expected a boolean");
            }
        }
        self.integer("ensemble.n", m.get("n"), 1);
        self.number("ensemble.amplitude", m.get("amplitude"), Num::NonNegative);
        if let Some(schedule) = self.array("ensemble.schedule", m.get("schedule")) {
            for (i, q) in schedule.iter().enumerate() {
                self.wavevector(&format!("ensemble.schedule[{i}]"), Some(q), dimension);
            }
            if let Some(n) = m.get("n").and_then(Value::as_u64) {
                if (schedule.len() as u64) < n {
                    self.fail("ensemble.schedule", format!("needs at least n = {n} wavevectors"));
                }
            }
        }
    }

    fn output(&mut self, value: &Value) {
        let Some(m) = self.object("output", value, &[], &["directory", "formats"]) else { return };
        if let Some(d) = m.get("directory") {
            match d.as_str() {
                Some("") => self.fail("output.directory", "must not be empty"),
                Some(_) => {}
                None => self.fail("output.directory", "expected a string"),
            }
        }
        if let Some(formats) = self.array("output.formats", m.get("formats")) {
            for (i, f) in formats.iter().enumerate() {
                if !matches!(f.as_str(), Some("csv" | "json" | "checkpoint")) {
                    self.fail(&format!("output.formats[{i}]"), "expected one of csv, json, checkpoint");
                }
            }
        }
    }
}
