//! The set of named experiments.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Experiment {
    BallCurvature,
    RepIsometry,
    LuScan,
    ChainAnnulus,
    HermitianFit,
    CoincidenceScan,
    RigidityGap,
    InvarianceSuite,
    CurvatureThreshold,
}

/// One row of `metriclab list`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Entry {
    pub name: &'static str,
    pub anchor: &'static str,
    pub summary: &'static str,
}

pub const ALL: [Experiment; 9] = [
    Experiment::BallCurvature,
    Experiment::RepIsometry,
    Experiment::LuScan,
    Experiment::ChainAnnulus,
    Experiment::HermitianFit,
    Experiment::CoincidenceScan,
    Experiment::RigidityGap,
    Experiment::InvarianceSuite,
    Experiment::CurvatureThreshold,
];

impl Experiment {
    pub fn entry(self) -> Entry {
        let (name, anchor, summary) = match self {
            Experiment::BallCurvature => (
                "ball-curvature",
                "strictly less than −2/(n+1)",
                "Bergman holomorphic sectional curvature over a point grid and direction fan",
            ),
            Experiment::RepIsometry => (
                "rep-isometry",
                "is a holomorphic isometry",
                "representative coordinates against the reference ball metric",
            ),
            Experiment::LuScan => (
                "lu-scan",
                "The Lu constant L(Ω)",
                "max of C/B over points and directions",
            ),
            Experiment::ChainAnnulus => (
                "chain-annulus",
                "B/2 ≥ λ² ≥ c_β²",
                "Bergman, Poincaré, logarithmic and analytic capacity chain on a planar domain",
            ),
            Experiment::HermitianFit => (
                "hermitian-fit",
                "is a Kähler metric",
                "least-squares Hermitian fit of C² and Kähler residual of the Bergman field",
            ),
            Experiment::CoincidenceScan => (
                "coincidence-scan",
                "non-empty open set E_Ω(z)",
                "directions where the Carathéodory/Kobayashi bracket closes near the boundary",
            ),
            Experiment::RigidityGap => (
                "rigidity-gap",
                "B(z₀) = 2 c²_B(z₀)",
                "Bergman metric against twice the squared analytic capacity",
            ),
            Experiment::InvarianceSuite => (
                "invariance-suite",
                "cross-module property tests",
                "dilation, unitary and homogeneity checks across the metric evaluators",
            ),
            Experiment::CurvatureThreshold => (
                "curvature-threshold",
                "bounded above by −2(L(Ω))²",
                "minimum curvature on the boundary strip against the estimated Lu constant",
            ),
        };
        Entry { name, anchor, summary }
    }

    pub fn name(self) -> &'static str {
        self.entry().name
    }
}

pub fn list_experiments() -> Vec<Entry> {
    ALL.iter().map(|e| e.entry()).collect()
}

/// Plain-text table, one line per experiment.
pub fn list_table() -> String {
    let entries = list_experiments();
    let width = entries.iter().map(|e| e.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for e in entries {
        out.push_str(&format!("{:<width$}  \"{}\"  {}\n", e.name, e.anchor, e.summary));
    }
    out
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("unknown experiment {0:?}")]
pub struct UnknownExperiment(pub String);

impl FromStr for Experiment {
    type Err = UnknownExperiment;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ALL.iter()
            .copied()
            .find(|e| e.name() == s)
            .ok_or_else(|| UnknownExperiment(s.to_string()))
    }
}

impl Serialize for Experiment {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Experiment {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
