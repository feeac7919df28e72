//! Run configuration: strict JSON schema, defaults and consistency checks.
//!
//! Every physical quantity carries its unit in the key name. Energies are
//! given in units of the resonator frequency ω_r, grid axes in units of the
//! drive frequency ω.

use lzs_core::bath::{BathModel, BathSpec};
use lzs_core::hilbert::{product_index, Spin, SystemParams};
use lzs_core::linalg::{CVector, C64};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use std::fmt;

pub const DEFAULT_DELTA: f64 = 0.0038;
pub const DEFAULT_OMEGA: f64 = 0.0375;
pub const DEFAULT_G: f64 = 0.0019;
pub const DEFAULT_N_MAX: usize = 3;
pub const DEFAULT_KAPPA: f64 = 0.001;
pub const DEFAULT_OMEGA_D: f64 = 12.5;
pub const DEFAULT_TEMPERATURE: f64 = 0.0175;
pub const DEFAULT_STEPS: usize = 201;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub errors: Vec<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration ({} problem(s)):", self.errors.len())?;
        for e in &self.errors {
            writeln!(f, "  - {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Model {
    Rabi,
    /// Two-level block `{|↑,n⟩, |↓,n+1⟩}` of the driven Jaynes-Cummings model.
    Djc { n: usize },
    QubitStructured,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observable {
    UnitaryAvg,
    DissipativeAtTime { t_over_tau: f64 },
    DissipativeSteady,
}

impl Observable {
    pub fn is_dissipative(self) -> bool {
        !matches!(self, Observable::UnitaryAvg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    /// `spin` and photon number; the photon number is ignored for the bare
    /// qubit.
    Basis { spin: Spin, n: usize },
    Amplitudes(Vec<C64>),
}

/// Energies in units of ω_r.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Physical {
    pub delta: f64,
    pub omega: f64,
    pub g: f64,
    pub n_max: usize,
}

/// Axes in units of ω, inclusive endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub a_min: f64,
    pub a_max: f64,
    pub a_steps: usize,
    pub eps0_min: f64,
    pub eps0_max: f64,
    pub eps0_steps: usize,
}

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect()
}

impl Grid {
    pub fn a_axis(&self) -> Vec<f64> {
        axis(self.a_min, self.a_max, self.a_steps)
    }

    pub fn eps0_axis(&self) -> Vec<f64> {
        axis(self.eps0_min, self.eps0_max, self.eps0_steps)
    }

    pub fn len(&self) -> usize {
        self.a_steps * self.eps0_steps
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Numerics {
    pub n_t: usize,
    pub k_max: usize,
    pub ode_tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub model: Model,
    pub params: Physical,
    /// Temperature and rates in units of ω_r.
    pub bath: Option<BathSpec>,
    pub grid: Grid,
    pub observable: Observable,
    pub initial_state: InitialState,
    pub numerics: Numerics,
    pub workers: usize,
}

impl SweepConfig {
    /// Hilbert-space dimension of the selected model.
    pub fn dim(&self) -> usize {
        match self.model {
            Model::Rabi => 2 * (self.params.n_max + 1),
            Model::Djc { .. } | Model::QubitStructured => 2,
        }
    }

    /// System parameters at one grid point (energies in units of ω_r).
    pub fn system_params(&self, a_over_omega: f64, eps0_over_omega: f64) -> SystemParams {
        let w = self.params.omega;
        SystemParams {
            delta: self.params.delta,
            eps0: eps0_over_omega * w,
            amp: a_over_omega * w,
            omega: w,
            omega_r: 1.0,
            g: self.params.g,
            n_max: self.params.n_max,
        }
    }

    pub fn initial_vector(&self) -> CVector {
        let d = self.dim();
        match &self.initial_state {
            InitialState::Amplitudes(a) => CVector::from_column_slice(a),
            InitialState::Basis { spin, n } => {
                let k = match self.model {
                    Model::Rabi => product_index(*spin, *n, self.params.n_max),
                    Model::QubitStructured => spin.index(),
                    // block ordering (|↑,n⟩, |↓,n+1⟩)
                    Model::Djc { .. } => match spin {
                        Spin::Up => 0,
                        Spin::Down => 1,
                    },
                };
                let mut v = CVector::zeros(d);
                v[k] = C64::new(1.0, 0.0);
                v
            }
        }
    }

    /// Canonical JSON form; feeding it back through [`validate_config`]
    /// reproduces `self`.
    pub fn to_json(&self) -> Value {
        let model = match self.model {
            Model::Rabi => json!("rabi"),
            Model::QubitStructured => json!("qubit_structured"),
            Model::Djc { n } => json!({ "kind": "djc", "n": n }),
        };
        let observable = match self.observable {
            Observable::UnitaryAvg => json!("unitary_avg"),
            Observable::DissipativeSteady => json!("dissipative_steady"),
            Observable::DissipativeAtTime { t_over_tau } => {
                json!({ "kind": "dissipative_at_time", "t_over_tau": t_over_tau })
            }
        };
        let initial = match &self.initial_state {
            InitialState::Basis { spin, n } => json!(basis_label(*spin, *n, self.model)),
            InitialState::Amplitudes(a) => Value::Array(a.iter().map(|c| json!([c.re, c.im])).collect()),
        };
        let mut root = json!({
            "model": model,
            "params": {
                "delta_over_omega_r": self.params.delta,
                "omega_over_omega_r": self.params.omega,
                "g_over_omega_r": self.params.g,
                "n_max": self.params.n_max,
            },
            "grid": {
                "a_min_over_omega": self.grid.a_min,
                "a_max_over_omega": self.grid.a_max,
                "a_steps": self.grid.a_steps,
                "eps0_min_over_omega": self.grid.eps0_min,
                "eps0_max_over_omega": self.grid.eps0_max,
                "eps0_steps": self.grid.eps0_steps,
            },
            "observable": observable,
            "initial_state": initial,
            "numerics": {
                "n_t": self.numerics.n_t,
                "k_max": self.numerics.k_max,
                "ode_tol": self.numerics.ode_tol,
            },
            "workers": self.workers,
        });
        if let Some(b) = &self.bath {
            let bath = match b.model {
                BathModel::Ohmic { kappa, omega_d } => json!({
                    "kind": "ohmic",
                    "kappa": kappa,
                    "omega_d_over_omega_r": omega_d,
                    "temperature_over_omega_r": b.temperature,
                }),
                BathModel::Structured { kappa, .. } => json!({
                    "kind": "structured",
                    "kappa": kappa,
                    "temperature_over_omega_r": b.temperature,
                }),
            };
            root["bath"] = bath;
        }
        root
    }

    /// SHA-256 of the canonical JSON without `workers`.
    pub fn hash(&self) -> String {
        let mut v = self.to_json();
        v.as_object_mut().expect("object").remove("workers");
        let digest = Sha256::digest(v.to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn basis_label(spin: Spin, n: usize, model: Model) -> String {
    let s = match spin {
        Spin::Up => "up",
        Spin::Down => "down",
    };
    match model {
        Model::QubitStructured => s.to_string(),
        _ => format!("{s},{n}"),
    }
}

struct Reader {
    errors: Vec<String>,
    defaults: Vec<String>,
}

impl Reader {
    fn object<'a>(&mut self, v: &'a Value, path: &str, allowed: &[&str]) -> Option<&'a Map<String, Value>> {
        let Some(obj) = v.as_object() else {
            self.errors.push(format!("{path}: expected an object"));
            return None;
        };
        for k in obj.keys() {
            if !allowed.contains(&k.as_str()) {
                self.errors.push(format!("{path}: unknown key \"{k}\""));
            }
        }
        Some(obj)
    }

    fn f64(&mut self, obj: Option<&Map<String, Value>>, path: &str, key: &str, default: Option<f64>) -> f64 {
        match obj.and_then(|o| o.get(key)) {
            Some(v) => match v.as_f64() {
                Some(x) if x.is_finite() => x,
                _ => {
                    self.errors.push(format!("{path}.{key}: expected a finite number, got {v}"));
                    f64::NAN
                }
            },
            None => match default {
                Some(d) => {
                    self.defaults.push(format!("{path}.{key} = {d}"));
                    d
                }
                None => {
                    self.errors.push(format!("{path}.{key}: required"));
                    f64::NAN
                }
            },
        }
    }

    fn usize(&mut self, obj: Option<&Map<String, Value>>, path: &str, key: &str, default: Option<usize>) -> usize {
        match obj.and_then(|o| o.get(key)) {
            Some(v) => match v.as_i64() {
                Some(x) if x >= 0 => x as usize,
                Some(x) => {
                    self.errors.push(format!("{path}.{key}: must be non-negative, got {x}"));
                    0
                }
                None => {
                    self.errors.push(format!("{path}.{key}: expected an integer, got {v}"));
                    0
                }
            },
            None => match default {
                Some(d) => {
                    self.defaults.push(format!("{path}.{key} = {d}"));
                    d
                }
                None => {
                    self.errors.push(format!("{path}.{key}: required"));
                    0
                }
            },
        }
    }
}

fn parse_model(r: &mut Reader, v: Option<&Value>) -> Option<Model> {
    let Some(v) = v else {
        r.defaults.push("model = rabi".into());
        return Some(Model::Rabi);
    };
    if let Some(s) = v.as_str() {
        return match s {
            "rabi" => Some(Model::Rabi),
            "qubit_structured" => Some(Model::QubitStructured),
            "djc" => {
                r.errors.push("model: djc needs a photon number, use {\"kind\": \"djc\", \"n\": N}".into());
                None
            }
            other => {
                r.errors.push(format!("model: unknown model \"{other}\""));
                None
            }
        };
    }
    let obj = r.object(v, "model", &["kind", "n"])?;
    match obj.get("kind").and_then(Value::as_str) {
        Some("djc") => {
            let n = r.usize(Some(obj), "model", "n", None);
            Some(Model::Djc { n })
        }
        Some("rabi") if !obj.contains_key("n") => Some(Model::Rabi),
        Some("qubit_structured") if !obj.contains_key("n") => Some(Model::QubitStructured),
        Some(k) => {
            r.errors.push(format!("model: unknown model or stray photon number for \"{k}\""));
            None
        }
        None => {
            r.errors.push("model.kind: required".into());
            None
        }
    }
}

fn parse_observable(r: &mut Reader, v: Option<&Value>) -> Option<Observable> {
    let Some(v) = v else {
        r.defaults.push("observable = unitary_avg".into());
        return Some(Observable::UnitaryAvg);
    };
    if let Some(s) = v.as_str() {
        return match s {
            "unitary_avg" => Some(Observable::UnitaryAvg),
            "dissipative_steady" => Some(Observable::DissipativeSteady),
            "dissipative_at_time" => {
                r.errors.push("observable: dissipative_at_time needs t_over_tau".into());
                None
            }
            other => {
                r.errors.push(format!("observable: unknown observable \"{other}\""));
                None
            }
        };
    }
    let obj = r.object(v, "observable", &["kind", "t_over_tau"])?;
    match obj.get("kind").and_then(Value::as_str) {
        Some("dissipative_at_time") => {
            let t = r.f64(Some(obj), "observable", "t_over_tau", None);
            if t < 0.0 {
                r.errors.push(format!("observable.t_over_tau: must be >= 0, got {t}"));
            }
            Some(Observable::DissipativeAtTime { t_over_tau: t })
        }
        Some("unitary_avg") if !obj.contains_key("t_over_tau") => Some(Observable::UnitaryAvg),
        Some("dissipative_steady") if !obj.contains_key("t_over_tau") => Some(Observable::DissipativeSteady),
        Some(k) => {
            r.errors.push(format!("observable: unknown observable or stray t_over_tau for \"{k}\""));
            None
        }
        None => {
            r.errors.push("observable.kind: required".into());
            None
        }
    }
}

fn parse_spin(s: &str) -> Option<Spin> {
    match s.trim() {
        "up" => Some(Spin::Up),
        "down" => Some(Spin::Down),
        _ => None,
    }
}

fn parse_initial(r: &mut Reader, v: Option<&Value>, model: Model, n_max: usize) -> Option<InitialState> {
    let default = match model {
        Model::Rabi | Model::QubitStructured => InitialState::Basis { spin: Spin::Down, n: 0 },
        Model::Djc { n } => InitialState::Basis { spin: Spin::Down, n: n + 1 },
    };
    let Some(v) = v else {
        if let InitialState::Basis { spin, n } = &default {
            r.defaults.push(format!("initial_state = \"{}\"", basis_label(*spin, *n, model)));
        }
        return Some(default);
    };
    if let Some(s) = v.as_str() {
        let mut parts = s.splitn(2, ',');
        let spin = parts.next().and_then(parse_spin);
        let n = match parts.next() {
            Some(t) => t.trim().parse::<usize>().ok(),
            None => Some(0),
        };
        let (Some(spin), Some(n)) = (spin, n) else {
            r.errors.push(format!("initial_state: cannot parse label \"{s}\" (expected \"down,0\", \"up,2\", ...)"));
            return None;
        };
        let ok = match model {
            Model::Rabi => n <= n_max,
            Model::QubitStructured => n == 0,
            Model::Djc { n: block } => (spin == Spin::Up && n == block) || (spin == Spin::Down && n == block + 1),
        };
        if !ok {
            r.errors.push(format!("initial_state: \"{s}\" is not a basis state of the selected model"));
            return None;
        }
        return Some(InitialState::Basis { spin, n });
    }
    let Some(items) = v.as_array() else {
        r.errors.push("initial_state: expected a basis label or a list of [re, im] amplitudes".into());
        return None;
    };
    let mut amps = Vec::with_capacity(items.len());
    for (i, it) in items.iter().enumerate() {
        let pair = it.as_array().filter(|p| p.len() == 2).and_then(|p| Some((p[0].as_f64()?, p[1].as_f64()?)));
        match pair {
            Some((re, im)) => amps.push(C64::new(re, im)),
            None => {
                r.errors.push(format!("initial_state[{i}]: expected [re, im]"));
                return None;
            }
        }
    }
    Some(InitialState::Amplitudes(amps))
}

/// Parses and checks a raw configuration. Missing optional keys are filled
/// with defaults, each of which is logged at info level.
pub fn validate_config(raw: &Value) -> Result<SweepConfig, ConfigError> {
    let mut r = Reader { errors: Vec::new(), defaults: Vec::new() };
    let root = r.object(raw, "config", &["model", "params", "bath", "grid", "observable", "initial_state", "numerics", "workers"]);
    let Some(root) = root else {
        return Err(ConfigError { errors: r.errors });
    };

    let model = parse_model(&mut r, root.get("model"));

    let empty = Value::Object(Map::new());
    let params_v = root.get("params").unwrap_or(&empty);
    let po = r.object(params_v, "params", &["delta_over_omega_r", "omega_over_omega_r", "g_over_omega_r", "n_max"]);
    let params = Physical {
        delta: r.f64(po, "params", "delta_over_omega_r", Some(DEFAULT_DELTA)),
        omega: r.f64(po, "params", "omega_over_omega_r", Some(DEFAULT_OMEGA)),
        g: r.f64(po, "params", "g_over_omega_r", Some(DEFAULT_G)),
        n_max: r.usize(po, "params", "n_max", Some(DEFAULT_N_MAX)),
    };
    if params.delta < 0.0 {
        r.errors.push(format!("params.delta_over_omega_r: must be >= 0, got {}", params.delta));
    }
    if !(params.omega > 0.0) && params.omega.is_finite() {
        r.errors.push(format!("params.omega_over_omega_r: must be > 0, got {}", params.omega));
    }
    if params.g < 0.0 {
        r.errors.push(format!("params.g_over_omega_r: must be >= 0, got {}", params.g));
    }
    if params.n_max > 40 {
        r.errors.push(format!("params.n_max: {} is beyond the dense-matrix range (max 40)", params.n_max));
    }

    let observable = parse_observable(&mut r, root.get("observable"));

    let bath = root.get("bath").and_then(|bv| {
        let bo = r.object(bv, "bath", &["kind", "kappa", "omega_d_over_omega_r", "temperature_over_omega_r"])?;
        let kind = bo.get("kind").and_then(Value::as_str).unwrap_or("ohmic");
        if !bo.contains_key("kind") {
            r.defaults.push("bath.kind = ohmic".into());
        }
        let kappa = r.f64(Some(bo), "bath", "kappa", Some(DEFAULT_KAPPA));
        let temperature = r.f64(Some(bo), "bath", "temperature_over_omega_r", Some(DEFAULT_TEMPERATURE));
        let spec = match kind {
            "ohmic" => {
                let omega_d = r.f64(Some(bo), "bath", "omega_d_over_omega_r", Some(DEFAULT_OMEGA_D));
                BathSpec::ohmic(kappa, omega_d, temperature)
            }
            "structured" => {
                if bo.contains_key("omega_d_over_omega_r") {
                    r.errors.push("bath.omega_d_over_omega_r: has no meaning for a structured bath".into());
                }
                BathSpec::structured(kappa, params.g, 1.0, temperature)
            }
            other => {
                r.errors.push(format!("bath.kind: unknown bath \"{other}\""));
                return None;
            }
        };
        if let Err(e) = spec.validate() {
            if kappa.is_finite() && temperature.is_finite() {
                r.errors.push(format!("bath: {e}"));
            }
        }
        Some(spec)
    });

    let go = match root.get("grid") {
        Some(gv) => r.object(
            gv,
            "grid",
            &["a_min_over_omega", "a_max_over_omega", "a_steps", "eps0_min_over_omega", "eps0_max_over_omega", "eps0_steps"],
        ),
        None => None,
    };
    let grid = Grid {
        a_min: r.f64(go, "grid", "a_min_over_omega", Some(0.0)),
        a_max: r.f64(go, "grid", "a_max_over_omega", Some(50.0)),
        a_steps: r.usize(go, "grid", "a_steps", Some(DEFAULT_STEPS)),
        eps0_min: r.f64(go, "grid", "eps0_min_over_omega", Some(-30.0)),
        eps0_max: r.f64(go, "grid", "eps0_max_over_omega", Some(10.0 / 3.0)),
        eps0_steps: r.usize(go, "grid", "eps0_steps", Some(DEFAULT_STEPS)),
    };
    for (name, steps) in [("a_steps", grid.a_steps), ("eps0_steps", grid.eps0_steps)] {
        if steps < 1 && !r.errors.iter().any(|e| e.starts_with(&format!("grid.{name}:"))) {
            r.errors.push(format!("grid.{name}: must be >= 1"));
        }
    }
    if grid.a_min > grid.a_max {
        r.errors.push(format!("grid: a_min_over_omega {} exceeds a_max_over_omega {}", grid.a_min, grid.a_max));
    }
    if grid.eps0_min > grid.eps0_max {
        r.errors.push(format!("grid: eps0_min_over_omega {} exceeds eps0_max_over_omega {}", grid.eps0_min, grid.eps0_max));
    }
    if grid.a_min < 0.0 {
        r.errors.push(format!("grid.a_min_over_omega: drive amplitude must be >= 0, got {}", grid.a_min));
    }
    for (name, steps, lo, hi) in [
        ("a", grid.a_steps, grid.a_min, grid.a_max),
        ("eps0", grid.eps0_steps, grid.eps0_min, grid.eps0_max),
    ] {
        if steps == 1 && lo != hi {
            r.errors.push(format!("grid.{name}_steps = 1 needs {name}_min == {name}_max"));
        }
    }

    let dissipative = observable.map(Observable::is_dissipative).unwrap_or(false);
    let no = match root.get("numerics") {
        Some(nv) => r.object(nv, "numerics", &["n_t", "k_max", "ode_tol"]),
        None => None,
    };
    let (dn_t, dk) = if dissipative { (256, 127) } else { (128, 0) };
    let numerics = Numerics {
        n_t: r.usize(no, "numerics", "n_t", Some(dn_t)),
        k_max: r.usize(no, "numerics", "k_max", Some(dk)),
        ode_tol: r.f64(no, "numerics", "ode_tol", Some(1e-9)),
    };
    if numerics.n_t < 4 || numerics.n_t % 2 != 0 {
        r.errors.push(format!("numerics.n_t: must be even and >= 4, got {}", numerics.n_t));
    }
    if dissipative && numerics.k_max + 1 > numerics.n_t / 2 {
        r.errors.push(format!("numerics.k_max: {} exceeds n_t/2 - 1 = {}", numerics.k_max, (numerics.n_t / 2).saturating_sub(1)));
    }
    if !(numerics.ode_tol > 0.0 && numerics.ode_tol <= 1e-4) && numerics.ode_tol.is_finite() {
        r.errors.push(format!("numerics.ode_tol: must lie in (0, 1e-4], got {}", numerics.ode_tol));
    }

    let workers = r.usize(Some(root), "config", "workers", Some(1));
    if workers < 1 && !r.errors.iter().any(|e| e.starts_with("config.workers")) {
        r.errors.push("workers: must be >= 1".into());
    }

    if let (Some(m), Some(o)) = (model, observable) {
        match (o.is_dissipative(), &bath) {
            (false, Some(_)) => r.errors.push(
                "bath is set but observable is unitary_avg; the closed-system average ignores the bath, remove it or pick a dissipative observable".into(),
            ),
            (true, None) if root.get("bath").is_none() => {
                r.errors.push("dissipative observable requires a bath section".into())
            }
            _ => {}
        }
        if o.is_dissipative() {
            match (m, bath.map(|b| b.model)) {
                (Model::Djc { .. }, _) => {
                    r.errors.push("model djc is a closed two-level block; dissipative observables need rabi or qubit_structured".into())
                }
                (Model::Rabi, Some(BathModel::Structured { .. })) => r.errors.push(
                    "model rabi keeps the resonator explicit and needs an ohmic bath; the structured bath belongs to qubit_structured".into(),
                ),
                (Model::QubitStructured, Some(BathModel::Ohmic { .. })) => {
                    r.errors.push("model qubit_structured needs bath.kind = structured".into())
                }
                _ => {}
            }
        }
    }

    let initial_state = model.and_then(|m| parse_initial(&mut r, root.get("initial_state"), m, params.n_max));

    if !r.errors.is_empty() {
        return Err(ConfigError { errors: r.errors });
    }
    let (model, observable, initial_state) = (model.unwrap(), observable.unwrap(), initial_state.unwrap());
    let cfg = SweepConfig { model, params, bath, grid, observable, initial_state, numerics, workers };
    if let InitialState::Amplitudes(a) = &cfg.initial_state {
        let mut errs = Vec::new();
        if a.len() != cfg.dim() {
            errs.push(format!("initial_state: {} amplitudes for a {}-dimensional model", a.len(), cfg.dim()));
        } else {
            let norm: f64 = a.iter().map(|c| c.norm_sqr()).sum();
            if (norm - 1.0).abs() > 1e-9 {
                errs.push(format!("initial_state: amplitudes not normalized (norm² = {norm})"));
            }
        }
        if !errs.is_empty() {
            return Err(ConfigError { errors: errs });
        }
    }
    for d in &r.defaults {
        log::info!("default: {d}");
    }
    Ok(cfg)
}

pub fn parse_config_str(text: &str) -> Result<SweepConfig, ConfigError> {
    let v: Value = serde_json::from_str(text).map_err(|e| ConfigError { errors: vec![format!("JSON syntax: {e}")] })?;
    validate_config(&v)
}
