//! Run configuration documents and instance loading with schema paths on errors.

use serde::{Deserialize, Serialize};

use hullcube::hhs::{g1, g2, g3, Constants, HHSInstance, InstanceDoc};
use hullcube::model::ModelParams;
use hullcube::space::MetricGraph;
use hullcube::treenet::TreeParams;

use crate::suites::{random_tree, SUITES};

pub const CONFIG_FORMAT: &str = "hullcube/config/v1";

/// Input that cannot be used as given. The CLI maps it to exit status 2.
#[derive(Debug, thiserror::Error)]
#[error("{source_name}: {message}")]
pub struct InputError {
    pub source_name: String,
    /// Location inside the document, e.g. `domains[0].graph.edges`; `.` for the root.
    pub path: String,
    pub message: String,
}

impl InputError {
    fn new(source_name: &str, path: impl Into<String>, message: impl Into<String>) -> Self {
        let path = path.into();
        let message = message.into();
        InputError {
            source_name: source_name.to_string(),
            message: format!("at `{path}`: {message}"),
            path,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSpec {
    /// Single-domain instance on a seeded random tree.
    Tree { vertices: usize },
    Path { vertices: usize },
    /// Product of two seeded random trees with orthogonal factor domains.
    Product { factors: [usize; 2] },
    /// Random parent tree with path children attached at the given parent vertices.
    TreeOfTrees { parent: usize, children: Vec<(usize, usize)> },
}

impl GeneratorSpec {
    pub fn build(&self, seed: u64, constants: Constants) -> hullcube::Result<HHSInstance> {
        match self {
            GeneratorSpec::Tree { vertices } => g1(random_tree(*vertices, seed), constants),
            GeneratorSpec::Path { vertices } => g1(MetricGraph::path(*vertices), constants),
            GeneratorSpec::Product { factors } => g2(
                random_tree(factors[0], seed),
                random_tree(factors[1], seed.wrapping_add(1)),
                constants,
            ),
            GeneratorSpec::TreeOfTrees { parent, children } => g3(
                random_tree(*parent, seed),
                children.iter().map(|&(at, len)| (at, MetricGraph::path(len))).collect(),
                constants,
            ),
        }
    }

    fn check(&self) -> Result<(), String> {
        let ok = match self {
            GeneratorSpec::Tree { vertices } | GeneratorSpec::Path { vertices } => *vertices >= 2,
            GeneratorSpec::Product { factors } => factors.iter().all(|&n| n >= 2),
            GeneratorSpec::TreeOfTrees { parent, children } => {
                *parent >= 2 && children.iter().all(|&(at, len)| at < *parent && len >= 2)
            }
        };
        if ok {
            Ok(())
        } else {
            Err("every graph needs at least 2 vertices and attachment points must exist".into())
        }
    }
}

/// Pipeline parameters; absent fields take the library defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    pub eps: Option<f64>,
    pub eps2: Option<f64>,
    pub big_e: Option<f64>,
    pub r1: Option<usize>,
    pub r2: Option<usize>,
    pub k: Option<f64>,
    pub theta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Host name from the sweep generators: G1, G2 (product) or G3.
    pub generator: String,
    /// Inclusive separation range.
    pub separations: [u64; 2],
    pub repeats: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            generator: "G2".into(),
            separations: [1, 100],
            repeats: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub format: String,
    #[serde(default)]
    pub generator: Option<GeneratorSpec>,
    #[serde(default)]
    pub constants: Option<Constants>,
    #[serde(default)]
    pub params: ParamsSpec,
    /// Base set F and its superset F′ for `build`, `verify --instance` and `export-dot`.
    #[serde(default)]
    pub f: Option<Vec<usize>>,
    #[serde(default)]
    pub f2: Option<Vec<usize>>,
    /// Bound on the coarse faces of the diagram.
    #[serde(default = "default_face_bound")]
    pub face_bound: u64,
    #[serde(default)]
    pub suite: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

/// 2(2·r1 + r2) at the default parameters.
pub fn default_face_bound() -> u64 {
    48
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            format: CONFIG_FORMAT.into(),
            generator: None,
            constants: None,
            params: ParamsSpec::default(),
            f: None,
            f2: None,
            face_bound: default_face_bound(),
            suite: None,
            seed: None,
            sweep: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str, source_name: &str) -> Result<Self, InputError> {
        let cfg: RunConfig = parse_with_path(text, source_name)?;
        cfg.validate(source_name)?;
        Ok(cfg)
    }

    /// Parameter gates run here, before any instance is touched.
    pub fn validate(&self, source_name: &str) -> Result<(), InputError> {
        let err = |path: &str, msg: String| InputError::new(source_name, path, msg);
        if self.format != CONFIG_FORMAT {
            return Err(err("format", format!("expected {CONFIG_FORMAT}, got {}", self.format)));
        }
        if let Some(g) = &self.generator {
            g.check().map_err(|m| err("generator", m))?;
        }
        self.model_params().validate().map_err(|e| err("params", e.to_string()))?;
        if let (Some(f), Some(f2)) = (&self.f, &self.f2) {
            if let Some(x) = f.iter().find(|x| !f2.contains(x)) {
                return Err(err("f2", format!("must contain every point of f, missing {x}")));
            }
        }
        if self.f.as_ref().is_some_and(|f| f.is_empty()) {
            return Err(err("f", "must be nonempty".into()));
        }
        if let Some(s) = &self.suite {
            if s != "all" && !SUITES.iter().any(|(n, _)| n == s) {
                return Err(err("suite", format!("unknown suite {s:?}")));
            }
        }
        if let Some(s) = &self.sweep {
            if !["G1", "G2", "G3"].contains(&s.generator.as_str()) {
                return Err(err("sweep.generator", format!("unknown generator {:?}", s.generator)));
            }
            if s.separations[0] == 0 || s.separations[0] > s.separations[1] {
                return Err(err("sweep.separations", "need 1 ≤ from ≤ to".into()));
            }
            if s.repeats == 0 {
                return Err(err("sweep.repeats", "must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn model_params(&self) -> ModelParams {
        let p = &self.params;
        let base = ModelParams::new();
        let tree = TreeParams {
            eps: p.eps.unwrap_or(base.tree.eps),
            eps2: p.eps2.unwrap_or(base.tree.eps2),
            big_e: p.big_e.unwrap_or(base.tree.big_e),
        };
        let mut m = ModelParams::with_tree(tree);
        if let Some(r1) = p.r1 {
            m.r1 = r1;
        }
        if let Some(r2) = p.r2 {
            m.r2 = r2;
        }
        m.k = p.k;
        m.theta = p.theta;
        m
    }
}

fn parse_with_path<T: serde::de::DeserializeOwned>(text: &str, source_name: &str) -> Result<T, InputError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        InputError::new(source_name, path, e.into_inner().to_string())
    })
}

/// Parses and validates an instance document; structural errors name the offending path.
pub fn load_instance(text: &str, source_name: &str) -> Result<HHSInstance, InputError> {
    let doc: InstanceDoc = parse_with_path(text, source_name)?;
    HHSInstance::from_doc(&doc).map_err(|e| InputError::new(source_name, ".", e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let cfg = RunConfig::from_json(r#"{"format": "hullcube/config/v1"}"#, "cfg").unwrap();
        assert_eq!(cfg.face_bound, 48);
        assert_eq!(cfg.model_params(), ModelParams::new());
    }

    #[test]
    fn bad_field_reports_its_path() {
        let e = RunConfig::from_json(r#"{"format": "hullcube/config/v1", "params": {"r1": "x"}}"#, "cfg").unwrap_err();
        assert_eq!(e.path, "params.r1");
        let e = RunConfig::from_json(r#"{"format": "hullcube/config/v1", "sweep": {"generator": "G9", "separations": [1, 2], "repeats": 1}}"#, "cfg").unwrap_err();
        assert_eq!(e.path, "sweep.generator");
    }

    #[test]
    fn parameter_gate_is_checked_before_running() {
        let e = RunConfig::from_json(r#"{"format": "hullcube/config/v1", "params": {"eps": 0.25, "eps2": 0.1}}"#, "cfg").unwrap_err();
        assert_eq!(e.path, "params");
        let e = RunConfig::from_json(r#"{"format": "hullcube/config/v1", "f": [1, 2], "f2": [1]}"#, "cfg").unwrap_err();
        assert_eq!(e.path, "f2");
    }

    #[test]
    fn instance_errors_name_the_path() {
        let inst = g1(MetricGraph::path(5), Constants::default()).unwrap();
        let good = inst.to_json();
        assert!(load_instance(&good, "inst").is_ok());
        let bad = good.replacen("\"vertices\": 5", "\"vertices\": \"five\"", 1);
        let e = load_instance(&bad, "inst").unwrap_err();
        assert!(e.path.ends_with("vertices"), "{}", e.path);
    }
}
