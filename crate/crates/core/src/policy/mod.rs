//! Guidance policies: parameterized maps from traffic observations to
//! guidance-graph edge weights.
//!
//! | arch                  | observation                         | used by        |
//! |-----------------------|-------------------------------------|----------------|
//! | `Cnn`                 | past edge usage + current goals     | on+PIBT, [p-on]+GPIBT |
//! | `WindowedQuadratic`   | 5x5 window of guide-path usage      | on+GPIBT       |
//! | `ReducedQuadratic`    | guide-path usage around the head    | on+GPIBT (48 params) |
//! | `HmFixed`             | guide-path usage around the head    | hm+GPIBT       |
//! | `StaticWeights`       | none                                | off variants   |

pub(crate) mod cnn;
pub(crate) mod quadratic;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use cnn::{cnn_forward, cnn_param_count, normalize_channel, TrafficObservation};
pub use quadratic::{
    hm_reproducing_theta, hm_sum_ovc, reduced_forward, windowed_observation, wq_costs, wq_forward,
    wq_param_count, Window, REDUCED_PARAMS,
};

use crate::error::{Error, Result};
use crate::guidance::{GuidanceGraph, WeightTensor, WEIGHT_FLOOR};

/// Default CNN hidden widths; with biased convolutions and an affine batch
/// norm after every layer this gives 3,119 parameters.
pub const DEFAULT_CNN_HIDDEN: [usize; 2] = [32, 32];
pub const DEFAULT_WINDOW: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Arch {
    Cnn { hidden: [usize; 2] },
    WindowedQuadratic { window: usize },
    HmFixed,
    ReducedQuadratic,
    /// One parameter per valid edge of a `channels x height x width`
    /// guidance graph.
    StaticWeights { channels: usize, height: usize, width: usize, edges: usize },
}

impl Arch {
    pub fn cnn() -> Self {
        Arch::Cnn { hidden: DEFAULT_CNN_HIDDEN }
    }

    pub fn windowed_quadratic() -> Self {
        Arch::WindowedQuadratic { window: DEFAULT_WINDOW }
    }

    pub fn static_weights_for(graph: &GuidanceGraph) -> Self {
        let [channels, height, width] = graph.shape();
        Arch::StaticWeights { channels, height, width, edges: graph.valid_edge_count() }
    }

    pub fn num_params(&self) -> usize {
        match *self {
            Arch::Cnn { hidden } => cnn_param_count(hidden),
            Arch::WindowedQuadratic { window } => wq_param_count(window),
            Arch::HmFixed => 0,
            Arch::ReducedQuadratic => REDUCED_PARAMS,
            Arch::StaticWeights { edges, .. } => edges,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Arch::Cnn { .. } => "cnn",
            Arch::WindowedQuadratic { .. } => "windowed-quadratic",
            Arch::HmFixed => "hm-fixed",
            Arch::ReducedQuadratic => "reduced-quadratic",
            Arch::StaticWeights { .. } => "static-weights",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuidancePolicy {
    pub arch: Arch,
    pub theta: Vec<f64>,
}

impl GuidancePolicy {
    pub fn new(arch: Arch, theta: Vec<f64>) -> Result<Self> {
        let expected = arch.num_params();
        if theta.len() != expected {
            return Err(Error::ParamCount { expected, got: theta.len() });
        }
        if let Arch::WindowedQuadratic { window } = arch {
            if window % 2 == 0 {
                return Err(Error::EvenWindow(window));
            }
        }
        Ok(GuidancePolicy { arch, theta })
    }

    pub fn zeros(arch: Arch) -> Self {
        let n = arch.num_params();
        GuidancePolicy { arch, theta: vec![0.0; n] }
    }

    pub fn hm() -> Self {
        GuidancePolicy::zeros(Arch::HmFixed)
    }

    pub fn num_params(&self) -> usize {
        self.theta.len()
    }

    pub(crate) fn expect_arch(&self, expected: &str) -> Result<()> {
        if self.arch.name() == expected {
            Ok(())
        } else {
            Err(Error::WrongArch { expected: expected.into(), got: self.arch.name().into() })
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: GuidancePolicy = serde_json::from_str(text)?;
        GuidancePolicy::new(raw.arch, raw.theta)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        GuidancePolicy::from_json(&text)
    }
}

/// Numerically stable `ln(1 + e^x)`.
pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

/// Maps the `k`-th parameter to the `k`-th valid edge (tensor order) of
/// `template`, through `softplus(theta) + WEIGHT_FLOOR`.
pub fn static_forward(policy: &GuidancePolicy, template: &GuidanceGraph) -> Result<WeightTensor> {
    policy.expect_arch("static-weights")?;
    let expected = Arch::static_weights_for(template);
    if policy.arch != expected {
        return Err(Error::WrongArch { expected: format!("{expected:?}"), got: format!("{:?}", policy.arch) });
    }
    let mut tensor = template.tensor();
    let mut theta = policy.theta.iter();
    for (slot, &ok) in tensor.data.iter_mut().zip(template.validity_mask()) {
        if ok {
            let x = *theta.next().expect("parameter count checked");
            *slot = softplus(x) + WEIGHT_FLOOR;
        }
    }
    Ok(tensor)
}
