//! Run configuration shared by the pipeline and the command line.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraElement, TermRecord, DEFAULT_SUPPORT_CAP};
use crate::analysis::{ThetaOptions, DEFAULT_SUM_SHELLS, DEFAULT_THETA_GRID};
use crate::error::{Error, Result};
use crate::groups::{Caps, Family, GroupModel};
use crate::inversion::{
    InversionOptions, ProductVariant, DEFAULT_K_CUT, DEFAULT_K_MAX, DEFAULT_NEUMANN_TERMS, DEFAULT_TOL,
    DEFAULT_TRUNC,
};
use crate::weights::{Weight, WeightSpec, DEFAULT_MARGIN};

/// Schema version written into every report.
pub const SCHEMA_VERSION: &str = "1";

/// Numerical settings. Every field has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numeric {
    pub trunc: f64,
    pub tol: f64,
    pub n_max: usize,
    pub k_max: u32,
    pub k_cut: u32,
    pub support_cap: usize,
    /// Random elements for the inequality checks.
    pub trials: usize,
    pub support_radius: u32,
    pub theta_grid: usize,
    pub sum_shells: u32,
    pub growth_n_max: u64,
    pub axiom_radius: u32,
    pub axiom_samples: usize,
    pub margin: f64,
    pub variant: ProductVariant,
}

impl Default for Numeric {
    fn default() -> Self {
        Self {
            trunc: DEFAULT_TRUNC,
            tol: DEFAULT_TOL,
            n_max: DEFAULT_NEUMANN_TERMS,
            k_max: DEFAULT_K_MAX,
            k_cut: DEFAULT_K_CUT,
            support_cap: DEFAULT_SUPPORT_CAP,
            trials: 200,
            support_radius: 4,
            theta_grid: DEFAULT_THETA_GRID,
            sum_shells: DEFAULT_SUM_SHELLS,
            growth_n_max: 1 << 16,
            axiom_radius: 6,
            axiom_samples: 500,
            margin: DEFAULT_MARGIN,
            variant: ProductVariant::Stated,
        }
    }
}

impl Numeric {
    pub fn inversion(&self) -> InversionOptions {
        InversionOptions {
            tol: self.tol,
            n_max: self.n_max,
            trunc: self.trunc,
            k_max: self.k_max,
            k_cut: self.k_cut,
            cap: self.support_cap,
            variant: self.variant,
        }
    }

    pub fn theta(&self) -> ThetaOptions {
        ThetaOptions {
            grid: self.theta_grid,
            shells: self.sum_shells,
            margin: self.margin,
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = [
            ("tol", self.tol),
            ("margin", self.margin),
            ("n_max", self.n_max as f64),
            ("k_max", self.k_max as f64),
            ("k_cut", self.k_cut as f64),
            ("support_cap", self.support_cap as f64),
            ("theta_grid", self.theta_grid as f64),
            ("sum_shells", self.sum_shells as f64),
            ("growth_n_max", self.growth_n_max as f64),
            ("axiom_samples", self.axiom_samples as f64),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("numeric.{name} must be positive, got {v}")));
            }
        }
        if !(self.trunc >= 0.0 && self.trunc.is_finite()) {
            return Err(Error::Config(format!("numeric.trunc must be nonnegative, got {}", self.trunc)));
        }
        Ok(())
    }
}

/// A test element: inline terms or a JSON-lines file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<Vec<TermRecord>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

impl ElementSpec {
    pub fn inline(name: impl Into<String>, terms: Vec<TermRecord>) -> Self {
        Self {
            name: name.into(),
            terms: Some(terms),
            file: None,
        }
    }

    pub fn load(&self, model: &Arc<GroupModel>) -> Result<AlgebraElement> {
        match (&self.terms, &self.file) {
            (Some(terms), None) => {
                let mut v = Vec::with_capacity(terms.len());
                for t in terms {
                    v.push(t.clone().into_term(model)?);
                }
                AlgebraElement::new(model.clone(), v)
            }
            (None, Some(path)) => AlgebraElement::from_json_lines(model.clone(), &std::fs::read_to_string(path)?),
            _ => Err(Error::Config(format!(
                "element `{}` needs exactly one of `terms` and `file`",
                self.name
            ))),
        }
    }
}

/// One entry of a bound comparison sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepEntry {
    pub weight: WeightSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

/// Where to write machine-readable output.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    pub json: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

/// A complete run description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_version")]
    pub version: String,
    /// Free-form name shown in reports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub group: Family,
    #[serde(default)]
    pub caps: Caps,
    pub weight: WeightSpec,
    /// Weight whose certificate supplies the inversion bounds, when it
    /// differs from `weight`. It must dominate `weight` pointwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound_weight: Option<WeightSpec>,
    #[serde(default = "default_p")]
    pub p: f64,
    /// Summability exponents; chosen from the weight family when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default)]
    pub elements: Vec<ElementSpec>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub numeric: Numeric,
    /// Weights compared by `bound-compare`; the main weight when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Vec<SweepEntry>>,
    #[serde(default)]
    pub output: OutputPaths,
}

fn default_version() -> String {
    SCHEMA_VERSION.into()
}

fn default_p() -> f64 {
    1.0
}

impl RunConfig {
    /// A configuration with defaults for everything but the group and weight.
    pub fn new(group: Family, weight: WeightSpec) -> Self {
        Self {
            version: default_version(),
            label: None,
            group,
            caps: Caps::default(),
            weight,
            bound_weight: None,
            p: 1.0,
            s: None,
            r: None,
            elements: Vec::new(),
            seed: 0,
            numeric: Numeric::default(),
            sweep: None,
            output: OutputPaths::default(),
        }
    }

    /// Parses and validates; relative element files are resolved against
    /// `base`.
    pub fn from_json(text: &str, base: Option<&Path>) -> Result<Self> {
        let mut cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(base) = base {
            for el in &mut cfg.elements {
                if let Some(f) = &el.file {
                    if f.is_relative() {
                        el.file = Some(base.join(f));
                    }
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text, path.parent())
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported config version `{}` (expected `{SCHEMA_VERSION}`)",
                self.version
            )));
        }
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(Error::Config(format!("p must be at least 1, got {}", self.p)));
        }
        if self.caps.radius == 0 || self.caps.elements == 0 {
            return Err(Error::Config("caps must be positive".into()));
        }
        self.numeric.validate()?;
        for el in &self.elements {
            match (&el.terms, &el.file) {
                (Some(_), None) => {}
                (None, Some(f)) if f.is_file() => {}
                (None, Some(f)) => {
                    return Err(Error::Config(format!(
                        "element `{}`: file {} does not exist",
                        el.name,
                        f.display()
                    )))
                }
                _ => {
                    return Err(Error::Config(format!(
                        "element `{}` needs exactly one of `terms` and `file`",
                        el.name
                    )))
                }
            }
        }
        for entry in self.sweep.iter().flatten() {
            if let Some(p) = entry.p {
                if !(p >= 1.0) {
                    return Err(Error::Config(format!("sweep p must be at least 1, got {p}")));
                }
            }
        }
        Ok(())
    }

    pub fn model(&self) -> Result<Arc<GroupModel>> {
        Ok(Arc::new(build_model(self.group)?.with_caps(self.caps)))
    }

    pub fn weight_on(&self, model: &Arc<GroupModel>) -> Result<Weight> {
        Weight::new(self.weight.clone(), model.clone())
    }

    /// Weight whose certificate bounds the inverses: `bound_weight` when
    /// set, `(1+|x|)` for the trivial weight, otherwise the weight itself.
    pub fn bound_weight_on(&self, model: &Arc<GroupModel>) -> Result<Weight> {
        match (&self.bound_weight, &self.weight) {
            (Some(spec), _) => Weight::new(spec.clone(), model.clone()),
            (None, WeightSpec::Trivial) => Weight::new(WeightSpec::Polynomial { beta: 1.0 }, model.clone()),
            (None, _) => self.weight_on(model),
        }
    }

    pub fn load_elements(&self, model: &Arc<GroupModel>) -> Result<Vec<(String, AlgebraElement)>> {
        self.elements
            .iter()
            .map(|el| Ok((el.name.clone(), el.load(model)?)))
            .collect()
    }
}

/// The standard model of a family.
pub fn build_model(family: Family) -> Result<GroupModel> {
    match family {
        Family::Lattice { dim } => GroupModel::lattice(dim),
        Family::Heisenberg => Ok(GroupModel::heisenberg()),
        Family::LocallyFinite => Ok(GroupModel::locally_finite()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses() {
        let cfg = RunConfig::from_json(
            r#"{"group": {"family": "lattice", "dim": 2}, "weight": {"family": "polynomial", "beta": 2.0}}"#,
            None,
        )
        .unwrap();
        assert_eq!(cfg.p, 1.0);
        assert_eq!(cfg.numeric, Numeric::default());
        let back = RunConfig::from_json(&serde_json::to_string(&cfg).unwrap(), None).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        for text in [
            "{",
            r#"{"group": {"family": "lattice", "dim": 2}}"#,
            r#"{"group": {"family": "lattice", "dim": 1}, "weight": {"family": "trivial"}, "p": 0.5}"#,
            r#"{"group": {"family": "lattice", "dim": 1}, "weight": {"family": "trivial"}, "numeric": {"tol": 0}}"#,
            r#"{"group": {"family": "lattice", "dim": 1}, "weight": {"family": "trivial"}, "elements": [{"name": "a", "file": "/nonexistent.jsonl"}]}"#,
            r#"{"group": {"family": "lattice", "dim": 1}, "weight": {"family": "trivial"}, "bogus": 1}"#,
        ] {
            assert!(matches!(RunConfig::from_json(text, None), Err(Error::Config(_))), "{text}");
        }
    }
}
