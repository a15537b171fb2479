use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::clifford::make_gammas;
use crate::error::{Error, Result};
use crate::lattice::{LatticeBasis, DEFAULT_POINT_BUDGET};
use crate::operators::{
    build_laplacian_power, build_multiplication, build_multiplier_with, build_tensor_sum,
    commutator, compose, quantized_derivative, Laplacian, OperatorMatrix,
};
use crate::spectra::WindowPolicy;
use crate::symbols::{SphereFunction, TorusFunction};

pub const SCHEMA_VERSION: u32 = 1;

fn default_stability() -> Option<f64> {
    Some(1.5)
}

fn default_budget() -> usize {
    DEFAULT_POINT_BUDGET
}

/// One `f ⊗ g` term of a symbol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorTerm {
    pub f: TorusFunction,
    pub g: SphereFunction,
}

/// Radial extent and resolution of the polar grid in the rearrangement experiment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarGrid {
    pub r_min: f64,
    pub r_max: f64,
    pub radial: usize,
}

impl Default for PolarGrid {
    fn default() -> Self {
        Self {
            r_min: 0.05,
            r_max: 20.0,
            radial: 1500,
        }
    }
}

/// The experiment catalogue. Every tolerance an experiment is judged by lives here.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id")]
pub enum Experiment {
    /// Clifford relations of the gamma matrices.
    #[serde(rename = "clifford")]
    Clifford { dims: Vec<usize>, tol: f64 },
    /// Closed-form constants against sphere quadrature.
    E1 {
        dims: Vec<usize>,
        tol: f64,
        ratio_tol: f64,
    },
    /// Rearrangement of `g(x/|x|)|x|^{-1}` on a polar grid against its exact law.
    E2 {
        d: usize,
        g: SphereFunction,
        t_range: [f64; 2],
        tol: f64,
        #[serde(default)]
        grid: PolarGrid,
    },
    /// Diagonal multiplier `g(D/|D|)|D|^{-1}`.
    E3 {
        d: usize,
        g: SphereFunction,
        radius: f64,
        tol: f64,
        #[serde(default)]
        slope_tol: Option<f64>,
        #[serde(default = "default_stability")]
        stability: Option<f64>,
        #[serde(default = "default_budget")]
        point_budget: usize,
    },
    /// `M_χ g(D/|D|)|D|^{-1}` for the indicator of a box `I`.
    E4 {
        intervals: Vec<[f64; 2]>,
        g: SphereFunction,
        radius: f64,
        tol: f64,
        ratio_tol: f64,
        /// Fourier band limit of `χ`; twice the radius when absent.
        #[serde(default)]
        band_limit: Option<usize>,
        #[serde(default = "default_stability")]
        stability: Option<f64>,
    },
    /// `Σ M_{f_n} g_n(D/|D|) |D|^{-1}`.
    E5 {
        terms: Vec<TensorTerm>,
        radius: f64,
        tol: f64,
        /// Judge by the little-ideal diagnostic instead of a reference value.
        #[serde(default)]
        expect_little: bool,
        #[serde(default = "default_little")]
        little_threshold: f64,
        #[serde(default = "default_stability")]
        stability: Option<f64>,
    },
    /// Decay of `[M_f |D|^{-1}, g(D/|D|)]` against the product `M_f g(D/|D|) |D|^{-1}`.
    E6 {
        f: TorusFunction,
        g: SphereFunction,
        radii: [f64; 2],
        ratio: f64,
        product_range: [f64; 2],
    },
    /// Quantized derivative `đf`.
    E7 {
        f: TorusFunction,
        radius: f64,
        tol: f64,
        hermitian_tol: f64,
        cross_check_tol: f64,
        #[serde(default = "default_stability")]
        stability: Option<f64>,
    },
    /// Synthetic sequence calculus.
    E8 { len: usize, tol: f64 },
}

fn default_little() -> f64 {
    0.5
}

impl Experiment {
    pub fn id(&self) -> &'static str {
        match self {
            Self::Clifford { .. } => "clifford",
            Self::E1 { .. } => "E1",
            Self::E2 { .. } => "E2",
            Self::E3 { .. } => "E3",
            Self::E4 { .. } => "E4",
            Self::E5 { .. } => "E5",
            Self::E6 { .. } => "E6",
            Self::E7 { .. } => "E7",
            Self::E8 { .. } => "E8",
        }
    }

    /// Dimension shared by all ingredients, if the experiment has one.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Self::Clifford { .. } | Self::E1 { .. } | Self::E8 { .. } => None,
            Self::E2 { d, .. } | Self::E3 { d, .. } => Some(*d),
            Self::E4 { intervals, .. } => Some(intervals.len()),
            Self::E5 { terms, .. } => terms.first().map(|t| t.f.dim()),
            Self::E6 { f, .. } | Self::E7 { f, .. } => Some(f.dim()),
        }
    }
}

/// A single experiment run with its overrides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Report name; defaults to the id.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(flatten)]
    pub experiment: Experiment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<WindowPolicy>,
    #[serde(default)]
    pub laplacian: Laplacian,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_runtime_s: Option<f64>,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            name: None,
            experiment,
            window: None,
            laplacian: Laplacian::default(),
            max_runtime_s: None,
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn with_max_runtime(mut self, seconds: f64) -> Self {
        self.max_runtime_s = Some(seconds);
        self
    }

    pub fn id(&self) -> &'static str {
        self.experiment.id()
    }

    pub fn name(&self) -> &str {
        self.name.as_deref().unwrap_or(self.experiment.id())
    }

    pub fn window_policy(&self) -> WindowPolicy {
        self.window.unwrap_or_default()
    }

    /// Checks that every ingredient lives in the same dimension.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(format!("{}: {msg}", self.name())));
        let need_d = |d: usize| -> Result<()> {
            if d < 2 {
                return Err(Error::Config(format!("{}: dimension {d} < 2", self.name())));
            }
            Ok(())
        };
        match &self.experiment {
            Experiment::Clifford { dims, .. } | Experiment::E1 { dims, .. } => {
                if dims.is_empty() || dims.iter().any(|&d| d < 2) {
                    return bad(format!("dimensions {dims:?} must be nonempty and >= 2"));
                }
            }
            Experiment::E2 {
                d,
                g,
                t_range,
                grid,
                ..
            } => {
                need_d(*d)?;
                if g.dim() != *d {
                    return bad(format!("g lives on S^{} but d = {d}", g.dim() - 1));
                }
                if !(0.0 < t_range[0] && t_range[0] < t_range[1])
                    || !(0.0 < grid.r_min && grid.r_min < grid.r_max)
                {
                    return bad("t_range and radial range must be increasing and positive".into());
                }
            }
            Experiment::E3 { d, g, .. } => {
                need_d(*d)?;
                if g.dim() != *d {
                    return bad(format!("g lives on S^{} but d = {d}", g.dim() - 1));
                }
            }
            Experiment::E4 { intervals, g, .. } => {
                need_d(intervals.len())?;
                if g.dim() != intervals.len() {
                    return bad("the sphere function and the box disagree on d".into());
                }
            }
            Experiment::E5 { terms, .. } => {
                let Some(d) = self.experiment.dim() else {
                    return bad("no terms".into());
                };
                need_d(d)?;
                if terms.iter().any(|t| t.f.dim() != d || t.g.dim() != d) {
                    return bad("terms of different dimensions".into());
                }
            }
            Experiment::E6 { f, g, radii, .. } => {
                need_d(f.dim())?;
                if g.dim() != f.dim() {
                    return bad("f and g disagree on d".into());
                }
                if !(radii[0] < radii[1]) {
                    return bad("radii must be increasing".into());
                }
            }
            Experiment::E7 { f, .. } => {
                need_d(f.dim())?;
                if !f.is_real() {
                    return bad("f must be real".into());
                }
            }
            Experiment::E8 { len, .. } => {
                if *len < 500 {
                    return bad("synthetic sequences need len >= 500".into());
                }
            }
        }
        Ok(())
    }
}

/// A versioned list of experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub schema_version: u32,
    pub experiments: Vec<ExperimentConfig>,
}

impl SuiteConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let suite: Self = serde_json::from_str(text)?;
        if suite.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema version {} (this build reads {SCHEMA_VERSION})",
                suite.schema_version
            )));
        }
        let mut names = std::collections::HashSet::new();
        for e in &suite.experiments {
            e.validate()?;
            if !names.insert(e.name()) {
                return Err(Error::Config(format!(
                    "duplicate experiment name '{}'",
                    e.name()
                )));
            }
        }
        Ok(suite)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// The suite behind the acceptance criteria, with their tolerances and time limits.
pub fn acceptance_suite() -> SuiteConfig {
    use Experiment::*;
    let one = |d| SphereFunction::constant(d, 1.0);
    let s1sq = |d| SphereFunction::coordinate_power(d, 0, 2);
    let e2 = |name: &str, d, g| {
        ExperimentConfig::new(E2 {
            d,
            g,
            t_range: [1.0, 100.0],
            tol: 0.01,
            grid: PolarGrid::default(),
        })
        .named(name)
        .with_max_runtime(10.0)
    };
    let one_plus_cos = TorusFunction::constant(2, 1.0)
        .add(&TorusFunction::cosine(2, 0, 1.0))
        .expect("same dimension");
    let experiments = vec![
        ExperimentConfig::new(Clifford {
            dims: (2..=6).collect(),
            tol: 1e-12,
        })
        .with_max_runtime(1.0),
        ExperimentConfig::new(E1 {
            dims: (2..=5).collect(),
            tol: 1e-6,
            ratio_tol: 1e-14,
        })
        .with_max_runtime(1.0),
        e2("E2-d2-one", 2, one(2)),
        e2("E2-d2-s1sq", 2, s1sq(2)),
        e2("E2-d3-one", 3, one(3)),
        e2("E2-d3-s1sq", 3, s1sq(3)),
        ExperimentConfig::new(E3 {
            d: 2,
            g: one(2),
            radius: 120.0,
            tol: 0.03,
            slope_tol: Some(0.05),
            stability: Some(1.5),
            point_budget: DEFAULT_POINT_BUDGET,
        })
        .named("E3-d2")
        .with_max_runtime(30.0),
        ExperimentConfig::new(E3 {
            d: 3,
            g: one(3),
            radius: 40.0,
            tol: 0.05,
            slope_tol: None,
            stability: Some(1.5),
            point_budget: 1_500_000,
        })
        .named("E3-d3")
        .with_max_runtime(30.0),
        ExperimentConfig::new(E4 {
            intervals: vec![[0.0, PI], [0.0, 2.0 * PI]],
            g: one(2),
            radius: 24.0,
            tol: 0.07,
            ratio_tol: 0.05,
            band_limit: None,
            stability: Some(1.5),
        })
        .named("E4-half-torus")
        .with_max_runtime(900.0),
        ExperimentConfig::new(E5 {
            terms: vec![TensorTerm {
                f: one_plus_cos.clone(),
                g: one(2),
            }],
            radius: 24.0,
            tol: 0.07,
            expect_little: false,
            little_threshold: 0.5,
            stability: Some(1.5),
        })
        .named("E5-one-plus-cos")
        .with_max_runtime(900.0),
        ExperimentConfig::new(E5 {
            terms: vec![
                TensorTerm {
                    f: one_plus_cos.clone(),
                    g: one(2),
                },
                TensorTerm {
                    f: one_plus_cos.scale(-1.0),
                    g: one(2),
                },
            ],
            radius: 24.0,
            tol: 0.07,
            expect_little: true,
            little_threshold: 0.5,
            stability: None,
        })
        .named("E5-cancellation")
        .with_max_runtime(900.0),
        ExperimentConfig::new(E6 {
            f: TorusFunction::cosine(2, 0, 2.0),
            g: SphereFunction::coordinate_power(2, 0, 1),
            radii: [16.0, 24.0],
            ratio: 0.5,
            product_range: [0.8, 1.2],
        })
        .with_max_runtime(1800.0),
        ExperimentConfig::new(E7 {
            f: TorusFunction::cosine(2, 0, 2.0),
            radius: 24.0,
            tol: 0.10,
            hermitian_tol: 1e-12,
            cross_check_tol: 1e-6,
            stability: Some(1.5),
        })
        .with_max_runtime(1200.0),
        ExperimentConfig::new(E8 {
            len: 4000,
            tol: 0.02,
        })
        .with_max_runtime(5.0),
    ];
    SuiteConfig {
        schema_version: SCHEMA_VERSION,
        experiments,
    }
}

/// An operator to assemble for an ad-hoc spectrum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorSpec {
    Multiplier {
        g: SphereFunction,
        alpha: f64,
    },
    TensorSum {
        terms: Vec<TensorTerm>,
        alpha: f64,
    },
    Commutator {
        f: TorusFunction,
        g: SphereFunction,
        alpha: f64,
    },
    QuantizedDerivative {
        f: TorusFunction,
    },
}

impl OperatorSpec {
    pub fn dim(&self) -> usize {
        match self {
            Self::Multiplier { g, .. } => g.dim(),
            Self::TensorSum { terms, .. } => terms.first().map_or(0, |t| t.f.dim()),
            Self::Commutator { f, .. } | Self::QuantizedDerivative { f } => f.dim(),
        }
    }

    /// Named operators for the command line: `inverse-laplacian`, `half-torus`,
    /// `tensor-sum`, `commutator`, `dbar`, each in dimension `d`.
    pub fn preset(name: &str, d: usize) -> Result<Self> {
        let one = SphereFunction::constant(d, 1.0);
        Ok(match name {
            "inverse-laplacian" => Self::Multiplier { g: one, alpha: -1.0 },
            "half-torus" => {
                let mut intervals = vec![(0.0, 2.0 * PI); d];
                intervals[0] = (0.0, PI);
                let (chi, _) = crate::symbols::box_indicator(&intervals, 48)?;
                Self::TensorSum {
                    terms: vec![TensorTerm { f: chi, g: one }],
                    alpha: -1.0,
                }
            }
            "tensor-sum" => Self::TensorSum {
                terms: vec![TensorTerm {
                    f: TorusFunction::constant(d, 1.0).add(&TorusFunction::cosine(d, 0, 1.0))?,
                    g: one,
                }],
                alpha: -1.0,
            },
            "commutator" => Self::Commutator {
                f: TorusFunction::cosine(d, 0, 2.0),
                g: SphereFunction::coordinate_power(d, 0, 1),
                alpha: -1.0,
            },
            "dbar" => Self::QuantizedDerivative {
                f: TorusFunction::cosine(d, 0, 2.0),
            },
            other => {
                return Err(Error::Config(format!(
                    "unknown operator '{other}' (inverse-laplacian, half-torus, tensor-sum, commutator, dbar)"
                )))
            }
        })
    }

    pub fn build(&self, basis: &Arc<LatticeBasis>, laplacian: Laplacian) -> Result<OperatorMatrix> {
        match self {
            Self::Multiplier { g, alpha } => build_multiplier_with(basis, g, *alpha, laplacian),
            Self::TensorSum { terms, alpha } => {
                let pairs: Vec<_> = terms.iter().map(|t| (t.f.clone(), t.g.clone())).collect();
                build_tensor_sum(basis, &pairs, *alpha, laplacian)
            }
            Self::Commutator { f, g, alpha } => {
                let a = compose(
                    &build_multiplication(basis, f)?,
                    &build_laplacian_power(basis, *alpha, laplacian),
                )?;
                commutator(&a, &build_multiplier_with(basis, g, 0.0, laplacian)?)
            }
            Self::QuantizedDerivative { f } => {
                quantized_derivative(basis, &make_gammas(f.dim())?, f)
            }
        }
    }
}
