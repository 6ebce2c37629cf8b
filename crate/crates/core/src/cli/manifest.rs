//! JSON cohort manifest.
//!
//! ```json
//! {
//!   "label_map": "3,1,2",
//!   "config": { "min_lesion_voxels": 50 },
//!   "cases": [
//!     {
//!       "id": "case-000",
//!       "gt": "case-000/seg.nii.gz",
//!       "predictions": { "teamA": "teamA/case-000.nii.gz" },
//!       "intensity": { "t1c": "case-000/t1c.nii.gz" }
//!     }
//!   ]
//! }
//! ```
//!
//! Relative paths resolve against the manifest's directory.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ConfigFile;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestCase {
    pub id: String,
    pub gt: PathBuf,
    #[serde(default)]
    pub predictions: BTreeMap<String, PathBuf>,
    /// Skull-stripped channels by name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub intensity: BTreeMap<String, PathBuf>,
    /// Free-form notes, e.g. how synthetic predictions were made.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<serde_json::Value>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CohortManifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_map: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<ConfigFile>,
    pub cases: Vec<ManifestCase>,
}

impl CohortManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        let mut manifest: CohortManifest = serde_json::from_str(&text)?;
        manifest.validate()?;
        let base = path.parent().unwrap_or(Path::new("."));
        manifest.resolve(base);
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for case in &self.cases {
            if case.id.is_empty() {
                return Err(Error::Manifest("empty case id".into()));
            }
            if !seen.insert(case.id.as_str()) {
                return Err(Error::Manifest(format!("duplicate case id `{}`", case.id)));
            }
        }
        Ok(())
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for case in &mut self.cases {
            fix(&mut case.gt);
            case.predictions.values_mut().for_each(fix);
            case.intensity.values_mut().for_each(fix);
        }
    }

    pub fn teams(&self) -> BTreeSet<String> {
        self.cases
            .iter()
            .flat_map(|c| c.predictions.keys().cloned())
            .collect()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::file(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_resolves() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        std::fs::write(
            &path,
            r#"{"label_map":"4,1,2","cases":[{"id":"a","gt":"a/gt.nii","predictions":{"t":"/abs/p.nii"},"intensity":{"t1c":"a/t1c.nii"}}]}"#,
        )
        .unwrap();
        let m = CohortManifest::load(&path).unwrap();
        assert_eq!(m.label_map.as_deref(), Some("4,1,2"));
        assert_eq!(m.cases[0].gt, dir.path().join("a/gt.nii"));
        assert_eq!(m.cases[0].predictions["t"], PathBuf::from("/abs/p.nii"));
        assert_eq!(m.cases[0].intensity["t1c"], dir.path().join("a/t1c.nii"));
        assert_eq!(m.teams().into_iter().collect::<Vec<_>>(), vec!["t".to_string()]);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let m = CohortManifest {
            cases: vec![
                ManifestCase {
                    id: "x".into(),
                    gt: "g".into(),
                    predictions: BTreeMap::new(),
                    intensity: BTreeMap::new(),
                    provenance: None,
                };
                2
            ],
            ..CohortManifest::default()
        };
        assert!(matches!(m.validate(), Err(Error::Manifest(_))));
    }
}
