//! Scenario files: partition, couplings, model, time stepping, initial data
//! and output location, read from TOML.
//!
//! ```toml
//! seed = 7
//! expect = "decay"            # optional: "decay" | "no_decay"
//!
//! [partition]
//! sizes = [2, 2]
//!
//! [coupling]
//! a = [[2, -1, 0, 0], [-1, 2, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]
//! d = "d.csv"                 # inline rows or a CSV path relative to this file
//!
//! [model]
//! kind = "wave_boundary"      # | wave_distributed | beam_distributed | matrices
//! elements = 64
//!
//! [sim]
//! dt = 1e-3
//! horizon = 40.0
//! stride = 10
//!
//! [initial]
//! kind = "random"             # | groups | perturbed
//! ```

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::algebra::{CouplingMatrix, GroupPartition, Role};
use crate::csvio::load_matrix;
use crate::diagnostics::{full_energy, Verdict};
use crate::error::{Error, Result};
use crate::integrator::{SimConfig, State};
use crate::models::{assemble, CoupledSystem, DampingProfile, DiscreteModel, ModelKind, ModelSpec};

pub const DEFAULT_ELEMENTS: usize = 64;
pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_HORIZON: f64 = 40.0;
pub const DEFAULT_DAMPING_WIDTH: f64 = 0.4;
pub const DEFAULT_DAMPING_FLOOR: f64 = 0.5;
/// Mesh eigenmodes excited by random initial data.
pub const RANDOM_MODES: usize = 10;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    seed: Option<u64>,
    expect: Option<String>,
    partition: Option<PartitionSection>,
    coupling: CouplingSection,
    model: ModelSection,
    #[serde(default)]
    sim: SimSection,
    #[serde(default)]
    initial: InitialSection,
    #[serde(default)]
    output: OutputSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartitionSection {
    sizes: Vec<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum MatrixSource {
    Inline(Vec<Vec<f64>>),
    Csv(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CouplingSection {
    a: MatrixSource,
    d: MatrixSource,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSection {
    kind: String,
    elements: Option<usize>,
    damping_left: Option<f64>,
    damping_right: Option<f64>,
    damping_floor: Option<f64>,
    damping_constant: Option<f64>,
    mass: Option<MatrixSource>,
    stiffness: Option<MatrixSource>,
    damping: Option<MatrixSource>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimSection {
    #[serde(default = "default_dt")]
    dt: f64,
    #[serde(default = "default_horizon")]
    horizon: f64,
    #[serde(default = "default_stride")]
    stride: usize,
    fit_window: Option<[f64; 2]>,
}

fn default_dt() -> f64 {
    DEFAULT_DT
}
fn default_horizon() -> f64 {
    DEFAULT_HORIZON
}
fn default_stride() -> usize {
    1
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT,
            horizon: DEFAULT_HORIZON,
            stride: 1,
            fit_window: None,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum InitialSection {
    #[default]
    Random,
    Groups {
        fields: Vec<String>,
        velocities: Option<Vec<String>>,
    },
    Perturbed {
        fields: Vec<String>,
        epsilon: f64,
    },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    dir: Option<String>,
}

/// Closed-form scalar field on the unit interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Field {
    /// `sin(kπx)`.
    Sine(u32),
    /// `16 x²(1 - x)²`.
    Bump,
    Zero,
}

impl Field {
    pub fn parse(s: &str) -> Result<Self> {
        let words: Vec<&str> = s.split_whitespace().collect();
        match words.as_slice() {
            ["zero"] => Ok(Field::Zero),
            ["bump"] => Ok(Field::Bump),
            ["sine", k] => k
                .parse::<u32>()
                .ok()
                .filter(|k| *k > 0)
                .map(Field::Sine)
                .ok_or_else(|| Error::Scenario(format!("bad sine index in {s:?}"))),
            _ => Err(Error::Scenario(format!(
                "unknown field {s:?}; expected \"sine k\", \"bump\" or \"zero\""
            ))),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        use std::f64::consts::PI;
        match *self {
            Field::Sine(k) => (k as f64 * PI * x).sin(),
            Field::Bump => 16.0 * x * x * (1.0 - x) * (1.0 - x),
            Field::Zero => 0.0,
        }
    }

    pub fn slope(&self, x: f64) -> f64 {
        use std::f64::consts::PI;
        match *self {
            Field::Sine(k) => k as f64 * PI * (k as f64 * PI * x).cos(),
            Field::Bump => 32.0 * x * (1.0 - x) * (1.0 - 2.0 * x),
            Field::Zero => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    /// Uniform random coefficients on the lowest mesh eigenmodes of every
    /// component, scaled to unit full energy.
    Random,
    /// One closed-form field per group, copied to every component of the group.
    Groups {
        fields: Vec<Field>,
        velocities: Vec<Field>,
    },
    /// Group fields plus `epsilon` times unit-energy random data.
    Perturbed { fields: Vec<Field>, epsilon: f64 },
}

#[derive(Debug, Clone)]
pub enum ModelSource {
    Mesh(ModelSpec),
    Matrices(Box<DiscreteModel>),
}

impl ModelSource {
    pub fn build(&self) -> Result<DiscreteModel> {
        match self {
            ModelSource::Mesh(spec) => assemble(spec),
            ModelSource::Matrices(m) => Ok((**m).clone()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub partition: Option<GroupPartition>,
    pub a: CouplingMatrix,
    pub d: CouplingMatrix,
    pub model: ModelSource,
    pub sim: SimConfig,
    pub fit_window: Option<(f64, f64)>,
    pub initial: InitialData,
    pub out_dir: PathBuf,
    pub expect: Option<Verdict>,
}

fn resolve_matrix(src: &MatrixSource, base: &Path) -> Result<DMatrix<f64>> {
    match src {
        MatrixSource::Inline(rows) => {
            let n = rows.len();
            let m = rows.first().map_or(0, |r| r.len());
            if rows.iter().any(|r| r.len() != m) {
                return Err(Error::Scenario(
                    "inline matrix rows have unequal length".into(),
                ));
            }
            Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
        }
        MatrixSource::Csv(path) => load_matrix(&base.join(path)),
    }
}

fn parse_fields(names: &[String]) -> Result<Vec<Field>> {
    names.iter().map(|s| Field::parse(s)).collect()
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Scenario(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scenario".into());
        Self::from_toml(&text, base, &name)
    }

    /// Parses a scenario; relative CSV paths resolve against `base`.
    pub fn from_toml(text: &str, base: &Path, name: &str) -> Result<Self> {
        let file: ScenarioFile =
            toml::from_str(text).map_err(|e| Error::Scenario(format!("{name}: {e}")))?;

        let partition = file
            .partition
            .map(|p| GroupPartition::new(p.sizes))
            .transpose()?;
        let a = CouplingMatrix::new(resolve_matrix(&file.coupling.a, base)?, Role::Stiffness)?;
        let d = CouplingMatrix::new(resolve_matrix(&file.coupling.d, base)?, Role::Damping)?;
        if a.order() != d.order() {
            return Err(Error::Scenario(format!(
                "A has order {} but D has order {}",
                a.order(),
                d.order()
            )));
        }
        if let Some(p) = &partition {
            if p.components() != a.order() {
                return Err(Error::Scenario(format!(
                    "partition covers {} components but the couplings have order {}",
                    p.components(),
                    a.order()
                )));
            }
        }

        let m = &file.model;
        let model = if m.kind == "matrices" {
            let get = |src: &Option<MatrixSource>, what: &str| {
                src.as_ref()
                    .ok_or_else(|| {
                        Error::Scenario(format!("model kind \"matrices\" needs `{what}`"))
                    })
                    .and_then(|s| resolve_matrix(s, base))
            };
            ModelSource::Matrices(Box::new(DiscreteModel::from_matrices(
                get(&m.mass, "mass")?,
                get(&m.stiffness, "stiffness")?,
                get(&m.damping, "damping")?,
            )?))
        } else {
            let kind = ModelKind::parse(&m.kind)
                .ok_or_else(|| Error::Scenario(format!("unknown model kind {:?}", m.kind)))?;
            let damping = match m.damping_constant {
                Some(c) => DampingProfile::Constant(c),
                None => DampingProfile::Plateau {
                    left: m.damping_left.unwrap_or(DEFAULT_DAMPING_WIDTH),
                    right: m.damping_right.unwrap_or(DEFAULT_DAMPING_WIDTH),
                    floor: m.damping_floor.unwrap_or(DEFAULT_DAMPING_FLOOR),
                },
            };
            let spec = ModelSpec {
                kind,
                elements: m.elements.unwrap_or(DEFAULT_ELEMENTS),
                damping,
            };
            spec.validate()?;
            ModelSource::Mesh(spec)
        };

        let sim = SimConfig::new(file.sim.dt, file.sim.horizon, file.sim.stride)?;
        let p = partition.as_ref().map(|p| p.groups());
        let check_len = |fields: &[Field]| match p {
            Some(p) if fields.len() == p => Ok(()),
            Some(p) => Err(Error::Scenario(format!(
                "{} initial fields for {p} groups",
                fields.len()
            ))),
            None => Err(Error::Scenario(
                "group initial data needs a partition".into(),
            )),
        };
        let initial = match file.initial {
            InitialSection::Random => InitialData::Random,
            InitialSection::Groups { fields, velocities } => {
                let fields = parse_fields(&fields)?;
                check_len(&fields)?;
                let velocities = match velocities {
                    Some(v) => parse_fields(&v)?,
                    None => vec![Field::Zero; fields.len()],
                };
                check_len(&velocities)?;
                InitialData::Groups { fields, velocities }
            }
            InitialSection::Perturbed { fields, epsilon } => {
                let fields = parse_fields(&fields)?;
                check_len(&fields)?;
                if !epsilon.is_finite() {
                    return Err(Error::Scenario("epsilon must be finite".into()));
                }
                InitialData::Perturbed { fields, epsilon }
            }
        };
        let expect = match file.expect.as_deref() {
            None => None,
            Some("decay") => Some(Verdict::DecayObserved),
            Some("no_decay") => Some(Verdict::NoUniformDecay),
            Some(other) => {
                return Err(Error::Scenario(format!(
                    "expect must be \"decay\" or \"no_decay\", got {other:?}"
                )))
            }
        };

        Ok(Self {
            name: name.to_string(),
            seed: file.seed.unwrap_or(0),
            partition,
            a,
            d,
            model,
            sim,
            fit_window: file.sim.fit_window.map(|[a, b]| (a, b)),
            initial,
            out_dir: PathBuf::from(file.output.dir.unwrap_or_else(|| "out".into())),
            expect,
        })
    }

    pub fn require_partition(&self) -> Result<&GroupPartition> {
        self.partition
            .as_ref()
            .ok_or_else(|| Error::Scenario("this command needs a [partition] section".into()))
    }

    /// Fit window, defaulting to `(T/4, T)`.
    pub fn window(&self) -> (f64, f64) {
        self.fit_window
            .unwrap_or((self.sim.horizon / 4.0, self.sim.horizon))
    }
}

/// Random coefficients on the lowest mesh eigenmodes for every component and
/// both displacement and velocity, scaled to unit full energy.
pub fn random_state(system: &CoupledSystem, seed: u64) -> Result<State> {
    let model = system.model();
    let n = system.components();
    let (_, modes) = model.eigenmodes();
    let k = RANDOM_MODES.min(model.dof());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = DVector::zeros(system.unknowns());
    let mut v = DVector::zeros(system.unknowns());
    for target in [&mut u, &mut v] {
        for c in 0..n {
            let mut field = DVector::zeros(model.dof());
            for j in 0..k {
                let coef: f64 = rng.random_range(-1.0..1.0);
                field += modes.column(j) * coef;
            }
            for (node, x) in field.iter().enumerate() {
                target[node * n + c] = *x;
            }
        }
    }
    let state = State::new(u, v);
    let e = full_energy(system, &state);
    if !(e > 0.0) {
        return Err(Error::Scenario(
            "random initial data has zero energy".into(),
        ));
    }
    Ok(state.scaled(1.0 / e.sqrt()))
}

/// Every component of group `r` gets `fields[r]`.
pub fn group_state(
    system: &CoupledSystem,
    partition: &GroupPartition,
    fields: &[Field],
    velocities: &[Field],
) -> Result<State> {
    let model = system.model();
    let n = system.components();
    let mut u = DVector::zeros(system.unknowns());
    let mut v = DVector::zeros(system.unknowns());
    for r in 0..partition.groups() {
        let fu = model.interpolate(|x| fields[r].value(x), |x| fields[r].slope(x))?;
        let fv = model.interpolate(|x| velocities[r].value(x), |x| velocities[r].slope(x))?;
        for c in partition.group(r) {
            for node in 0..model.dof() {
                u[node * n + c] = fu[node];
                v[node * n + c] = fv[node];
            }
        }
    }
    Ok(State::new(u, v))
}

pub fn initial_state(scenario: &Scenario, system: &CoupledSystem) -> Result<State> {
    match &scenario.initial {
        InitialData::Random => random_state(system, scenario.seed),
        InitialData::Groups { fields, velocities } => {
            group_state(system, scenario.require_partition()?, fields, velocities)
        }
        InitialData::Perturbed { fields, epsilon } => {
            let part = scenario.require_partition()?;
            let base = group_state(system, part, fields, &vec![Field::Zero; fields.len()])?;
            let noise = random_state(system, scenario.seed)?;
            Ok(State::new(
                base.u + noise.u * *epsilon,
                base.v + noise.v * *epsilon,
            ))
        }
    }
}
