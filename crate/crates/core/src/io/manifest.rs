//! Dataset manifests: one JSON document listing image and mask files.
//!
//! ```json
//! {
//!   "records": [
//!     {"id": "s1", "path": "s1.vaug", "kind": "image", "subject": "s1",
//!      "laterality": "whole", "group": "T1W-sag-FS"},
//!     {"id": "s1-gt", "path": "s1_gt.vaug", "kind": "mask", "subject": "s1",
//!      "laterality": "whole", "group": "T1W-sag-FS"}
//!   ]
//! }
//! ```
//!
//! Relative paths resolve against the manifest's directory. Augmented
//! manifests add `variant`, `derived_from` and `provenance` to records and an
//! `online` block describing augmentation applied at load time.

use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::OnlineAugmentation;
use crate::volume::AxisOrder;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordKind {
    Image,
    Mask,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Laterality {
    Left,
    Right,
    Whole,
}

impl Laterality {
    pub fn as_str(self) -> &'static str {
        match self {
            Laterality::Left => "left",
            Laterality::Right => "right",
            Laterality::Whole => "whole",
        }
    }
}

/// How an image record was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Original,
    Style,
    Remap,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Original => "original",
            Variant::Style => "style",
            Variant::Remap => "remap",
        }
    }

    pub fn is_augmented(self) -> bool {
        self != Variant::Original
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub id: String,
    pub path: String,
    pub kind: RecordKind,
    pub subject: String,
    pub laterality: Laterality,
    pub group: String,
    /// Axis semantics of the stored array; axial when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis_order: Option<AxisOrder>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<Variant>,
    /// Id of the original image an augmented record was generated from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derived_from: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<serde_json::Value>,
}

impl Record {
    pub fn new(
        id: impl Into<String>,
        path: impl Into<String>,
        kind: RecordKind,
        subject: impl Into<String>,
        laterality: Laterality,
        group: impl Into<String>,
    ) -> Self {
        Record {
            id: id.into(),
            path: path.into(),
            kind,
            subject: subject.into(),
            laterality,
            group: group.into(),
            axis_order: None,
            variant: None,
            derived_from: None,
            provenance: None,
        }
    }

    /// Original (non-augmented) images are the ones masks pair with.
    pub fn is_primary_image(&self) -> bool {
        self.kind == RecordKind::Image && matches!(self.variant, None | Some(Variant::Original))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub records: Vec<Record>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub online: Option<OnlineAugmentation>,
}

impl Manifest {
    pub fn new(records: Vec<Record>) -> Self {
        Manifest { records, online: None }
    }

    /// Enforces unique ids, mask pairing and `derived_from` references.
    pub fn validate(&self) -> Result<()> {
        let mut ids = HashSet::new();
        for r in &self.records {
            if !ids.insert(r.id.as_str()) {
                return Err(Error::Manifest(format!("duplicate id {:?}", r.id)));
            }
        }
        let mut primaries: HashMap<(&str, Laterality), usize> = HashMap::new();
        for r in self.records.iter().filter(|r| r.is_primary_image()) {
            *primaries.entry((r.subject.as_str(), r.laterality)).or_default() += 1;
        }
        for r in &self.records {
            match r.kind {
                RecordKind::Mask => {
                    let n = primaries
                        .get(&(r.subject.as_str(), r.laterality))
                        .copied()
                        .unwrap_or(0);
                    if n != 1 {
                        return Err(Error::Manifest(format!(
                            "mask {:?} matches {n} images for subject {:?} ({}), expected exactly one",
                            r.id,
                            r.subject,
                            r.laterality.as_str()
                        )));
                    }
                }
                RecordKind::Image => {
                    if let Some(src) = &r.derived_from {
                        let ok = self
                            .records
                            .iter()
                            .any(|o| &o.id == src && o.is_primary_image());
                        if !ok {
                            return Err(Error::Manifest(format!(
                                "record {:?} derives from unknown image {src:?}",
                                r.id
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&Record> {
        self.records.iter().find(|r| r.id == id)
    }

    pub fn images(&self) -> impl Iterator<Item = &Record> {
        self.records.iter().filter(|r| r.kind == RecordKind::Image)
    }

    /// The mask paired with an original image record, if any.
    pub fn mask_for(&self, image: &Record) -> Option<&Record> {
        self.records.iter().find(|r| {
            r.kind == RecordKind::Mask && r.subject == image.subject && r.laterality == image.laterality
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Manifest = serde_json::from_str(text).map_err(|e| Error::Manifest(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Reads and validates a manifest document.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Manifest::from_json(&text)
}

pub fn save_manifest(path: impl AsRef<Path>, m: &Manifest) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, m.to_json()? + "\n").map_err(|e| Error::io(path, e))
}

/// Directory that relative record paths resolve against.
pub fn manifest_dir(path: &Path) -> PathBuf {
    path.parent()
        .map(Path::to_path_buf)
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or_else(|| PathBuf::from("."))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img(id: &str, subject: &str) -> Record {
        Record::new(id, format!("{id}.vaug"), RecordKind::Image, subject, Laterality::Whole, "T1W-sag-FS")
    }

    fn mask(id: &str, subject: &str) -> Record {
        Record::new(id, format!("{id}.vaug"), RecordKind::Mask, subject, Laterality::Whole, "T1W-sag-FS")
    }

    #[test]
    fn pairs_validate() {
        let m = Manifest::new(vec![img("a", "s1"), img("b", "s2"), mask("am", "s1"), mask("bm", "s2")]);
        m.validate().unwrap();
        let back = Manifest::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back.records.len(), 4);
        assert_eq!(back, m);
    }

    #[test]
    fn dangling_mask_and_duplicates_fail() {
        let m = Manifest::new(vec![img("a", "s1"), mask("am", "s9")]);
        assert!(matches!(m.validate(), Err(Error::Manifest(_))));
        let m = Manifest::new(vec![img("a", "s1"), img("a", "s2")]);
        assert!(m.validate().is_err());
        let m = Manifest::new(vec![img("a", "s1"), img("b", "s1"), mask("am", "s1")]);
        assert!(m.validate().is_err());
    }

    #[test]
    fn empty_is_valid() {
        let m = Manifest::from_json(r#"{"records": []}"#).unwrap();
        assert!(m.records.is_empty());
    }

    #[test]
    fn missing_field_fails() {
        let text = r#"{"records": [{"id": "a", "path": "a.vaug", "kind": "image", "subject": "s"}]}"#;
        assert!(matches!(Manifest::from_json(text), Err(Error::Manifest(_))));
    }

    #[test]
    fn augmented_records_pair_with_original_only() {
        let mut orig = img("a", "s1");
        orig.variant = Some(Variant::Original);
        let mut aug = img("a-remap-0", "s1");
        aug.variant = Some(Variant::Remap);
        aug.derived_from = Some("a".into());
        let m = Manifest::new(vec![orig, aug.clone(), mask("am", "s1")]);
        m.validate().unwrap();
        aug.derived_from = Some("zzz".into());
        assert!(Manifest::new(vec![aug]).validate().is_err());
    }
}
