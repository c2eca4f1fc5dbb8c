//! Scenario files: what to compute and with which numerical parameters.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use tau_core::grassmann::{FlowFamily, FlowGroupElement, FlowTimes, GrassmannPoint, TauMethod, TauParams};
use tau_core::loops::presets;
use tau_core::rhfactor::RhOptions;
use tau_core::{kacmoody, BlockLoop, CircleGrid, Complex64, LoopLiteral};

use crate::report::Failure;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub point: PointSpec,
    #[serde(default)]
    pub flows: Option<FlowSpec>,
    #[serde(default)]
    pub lattice: Option<LatticeSpec>,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub outputs: Outputs,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum PointSpec {
    Identity { n: usize },
    /// `Id (1 + c/(z - depth))`.
    OnePole {
        n: usize,
        c: f64,
        #[serde(default)]
        depth: f64,
    },
    ExpOf { exponent: LoopLiteral },
    PrincipalLambda { n: usize },
    Literal { coeffs: LoopLiteral },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSpec {
    pub family: String,
    pub n: usize,
    /// Largest flow index (largest degree for `homogeneous_A`).
    #[serde(default = "default_max_index")]
    pub max_index: u32,
    #[serde(default)]
    pub times: BTreeMap<String, f64>,
}

fn default_max_index() -> u32 {
    3
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub axes: Vec<AxisSpec>,
}

/// `steps` equally spaced values from `start` to `stop` for time `index`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub index: u32,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl AxisSpec {
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        let d = (self.stop - self.start) / (self.steps - 1) as f64;
        (0..self.steps).map(|i| self.start + d * i as f64).collect()
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "P")]
    pub p: usize,
    #[serde(rename = "M_H")]
    pub m_h: Option<usize>,
    #[serde(rename = "N_schedule")]
    pub n_schedule: Vec<usize>,
    pub tolerances: Tolerances,
    /// Finite-difference step in the times.
    pub h: f64,
    pub method: String,
    /// Flow indices to differentiate along; all generators when absent.
    pub derivatives: Option<Vec<u32>>,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            m: 256,
            p: 32,
            m_h: None,
            n_schedule: vec![16, 32, 64, 128],
            tolerances: Tolerances::default(),
            h: 1e-4,
            method: "fredholm".into(),
            derivatives: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub tail: f64,
    pub residual: f64,
    /// Threshold for identity checks under `--verify`.
    pub check: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { tail: 1e-14, residual: 1e-9, check: 1e-6 }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub csv: Option<String>,
    pub report: Option<String>,
}

fn schema(msg: impl Into<String>) -> Failure {
    Failure::Schema(msg.into())
}

/// Maps construction errors: bad input is a schema problem, anything else
/// numerical.
fn building(e: tau_core::Error) -> Failure {
    use tau_core::Error as E;
    match e {
        E::InvalidInput(_) | E::DimensionMismatch { .. } | E::NotAnExponent(_) | E::NonCommuting(_) | E::NotScalar(_) | E::NonzeroWinding(_) => {
            Failure::Schema(e.to_string())
        }
        other => Failure::numerical("scenario", other),
    }
}

impl Scenario {
    pub fn load(path: &Path) -> Result<(Self, Vec<u8>), Failure> {
        let bytes = std::fs::read(path).map_err(|e| schema(format!("cannot read {}: {e}", path.display())))?;
        let sc: Scenario = serde_json::from_slice(&bytes).map_err(|e| schema(format!("{}: {e}", path.display())))?;
        sc.validate()?;
        Ok((sc, bytes))
    }

    fn validate(&self) -> Result<(), Failure> {
        let nm = &self.numerics;
        if nm.m < 16 {
            return Err(schema(format!("numerics.M must be at least 16, got {}", nm.m)));
        }
        if nm.p == 0 {
            return Err(schema("numerics.P must be positive"));
        }
        if nm.n_schedule.is_empty() || nm.n_schedule.windows(2).any(|w| w[0] >= w[1]) {
            return Err(schema("numerics.N_schedule must be a non-empty increasing list"));
        }
        if !(nm.h > 0.0) {
            return Err(schema("numerics.h must be positive"));
        }
        let t = &nm.tolerances;
        if !(t.tail > 0.0 && t.residual > 0.0 && t.check > 0.0) {
            return Err(schema("tolerances must be positive"));
        }
        self.tau_method()?;
        if let Some(f) = &self.flows {
            f.family.parse::<FlowFamily>().map_err(building)?;
            for k in f.times.keys() {
                k.parse::<u32>().map_err(|_| schema(format!("flow time key `{k}` is not an index")))?;
            }
        }
        if let Some(lat) = &self.lattice {
            if self.flows.is_none() {
                return Err(schema("a lattice needs flows"));
            }
            if lat.axes.iter().any(|a| a.steps == 0) {
                return Err(schema("lattice axes need at least one step"));
            }
        }
        Ok(())
    }

    pub fn tau_method(&self) -> Result<TauMethod, Failure> {
        match self.numerics.method.as_str() {
            "fredholm" => Ok(TauMethod::Fredholm),
            "extrapolation" => Ok(TauMethod::Extrapolation),
            other => Err(schema(format!("unknown tau method `{other}`"))),
        }
    }

    pub fn grid(&self) -> CircleGrid {
        CircleGrid::new(self.numerics.m).expect("validated")
    }

    pub fn tau_params(&self) -> TauParams {
        TauParams {
            method: self.tau_method().expect("validated"),
            tail_tol: self.numerics.tolerances.tail,
            hankel_size: self.numerics.m_h,
            schedule: self.numerics.n_schedule.clone(),
        }
    }

    pub fn rh_options(&self) -> RhOptions {
        RhOptions {
            depth: self.numerics.p,
            residual_tol: self.numerics.tolerances.residual,
            ..RhOptions::default()
        }
    }

    /// The loop described by `point`, without normalization checks.
    pub fn point_loop(&self, grid: &CircleGrid) -> Result<BlockLoop, Failure> {
        let tail = self.numerics.tolerances.tail;
        match &self.point {
            PointSpec::Identity { n } => Ok(presets::identity(*n)),
            PointSpec::OnePole { n, c, depth } => {
                presets::one_pole(*n, Complex64::new(*c, 0.0), Complex64::new(*depth, 0.0), tail.min(1e-16)).map_err(building)
            }
            PointSpec::ExpOf { exponent } => {
                let x = exponent.to_loop().map_err(building)?;
                presets::exp_of(&x, grid, tail).map_err(|e| Failure::numerical("exp_of", e))
            }
            PointSpec::PrincipalLambda { n } => kacmoody::principal_lambda(*n).map_err(building),
            PointSpec::Literal { coeffs } => coeffs.to_loop().map_err(building),
        }
    }

    pub fn point(&self, grid: &CircleGrid) -> Result<GrassmannPoint, Failure> {
        GrassmannPoint::new(self.point_loop(grid)?, self.name.clone()).map_err(building)
    }

    pub fn base_times(&self) -> FlowTimes {
        self.flows
            .iter()
            .flat_map(|f| f.times.iter())
            .map(|(k, v)| (k.parse().expect("validated"), Complex64::new(*v, 0.0)))
            .collect()
    }

    pub fn flow(&self, grid: &CircleGrid) -> Result<Option<FlowGroupElement>, Failure> {
        let Some(spec) = &self.flows else {
            return Ok(None);
        };
        let family: FlowFamily = spec.family.parse().map_err(building)?;
        let flow = match family {
            FlowFamily::Kp => FlowGroupElement::kp(spec.n, spec.max_index, grid.clone()),
            FlowFamily::PrincipalA => FlowGroupElement::principal_a(spec.n, spec.max_index, grid.clone()),
            FlowFamily::HomogeneousA => FlowGroupElement::homogeneous_a(spec.n, spec.max_index, grid.clone()),
            FlowFamily::Custom => unreachable!("not parseable"),
        }
        .map_err(building)?;
        Ok(Some(flow.with_times(self.base_times()).map_err(building)?))
    }

    pub fn flow_required(&self, grid: &CircleGrid) -> Result<FlowGroupElement, Failure> {
        self.flow(grid)?.ok_or_else(|| schema("this command needs `flows`"))
    }

    /// Lattice points in lattice order (first axis slowest); a single point
    /// with the base times when no lattice is given.
    pub fn lattice_points(&self) -> Vec<FlowTimes> {
        let base = self.base_times();
        let Some(lat) = &self.lattice else {
            return vec![base];
        };
        let mut out = vec![base];
        for axis in &lat.axes {
            let vals = axis.values();
            out = out
                .into_iter()
                .flat_map(|t| {
                    vals.iter().map(move |v| {
                        let mut t = t.clone();
                        t.insert(axis.index, Complex64::new(*v, 0.0));
                        t
                    })
                })
                .collect();
        }
        out
    }

    /// Time indices shown as columns: every index set anywhere.
    pub fn time_columns(&self) -> Vec<u32> {
        let mut idx: Vec<u32> = self.base_times().keys().copied().collect();
        if let Some(lat) = &self.lattice {
            idx.extend(lat.axes.iter().map(|a| a.index));
        }
        idx.sort_unstable();
        idx.dedup();
        idx
    }

    pub fn derivative_indices(&self, flow: &FlowGroupElement) -> Vec<u32> {
        match &self.numerics.derivatives {
            Some(d) => d.clone(),
            None => flow.generators().iter().map(|(i, _)| *i).collect(),
        }
    }
}
