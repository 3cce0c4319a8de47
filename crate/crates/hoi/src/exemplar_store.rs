//! Exemplar sets on disk: one mesh with a `.parts` sidecar per exemplar and
//! a `manifest.json` with the category, k, seed and descriptor checksums.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use hoi_core::exemplars::{shape_descriptor, Exemplar, ExemplarSet, ShapeDescriptor};
use hoi_core::geometry::{canonicalize_mesh, CanonicalScaling, DEFAULT_TARGET_VERTICES};

use crate::error::Result;
use crate::mesh_io::{read_part_mesh, write_part_mesh};
use crate::schema::{read_json, schema_error, write_json};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub category: String,
    pub k: usize,
    pub seed: u64,
    pub exemplars: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    /// Mesh path relative to the set directory.
    pub mesh: String,
    /// Index of the mesh in the clustered collection.
    pub source: usize,
    /// SHA-256 of the descriptor values as little-endian f64 bytes.
    #[serde(default)]
    pub descriptor_sha256: Option<String>,
}

pub fn descriptor_checksum(d: &ShapeDescriptor) -> String {
    let mut h = Sha256::new();
    for v in &d.values {
        h.update(v.to_le_bytes());
    }
    format!("{:x}", h.finalize())
}

/// Descriptor of a stored (isotropically canonical) exemplar.
pub fn stored_descriptor(e: &hoi_core::geometry::PartLabeledMesh) -> Result<ShapeDescriptor> {
    let aniso = canonicalize_mesh(e, DEFAULT_TARGET_VERTICES, CanonicalScaling::Anisotropic)?;
    Ok(shape_descriptor(&aniso)?)
}

pub fn write_exemplar_set(dir: &Path, set: &ExemplarSet) -> Result<()> {
    let mut entries = Vec::with_capacity(set.exemplars.len());
    for (i, e) in set.exemplars.iter().enumerate() {
        let name = format!("exemplar_{i:02}.obj");
        write_part_mesh(&dir.join(&name), &e.mesh)?;
        let checksum = if e.descriptor.values.is_empty() { None } else { Some(descriptor_checksum(&e.descriptor)) };
        entries.push(ManifestEntry { mesh: name, source: e.source, descriptor_sha256: checksum });
    }
    let manifest = Manifest { category: set.category.clone(), k: set.k, seed: set.seed, exemplars: entries };
    write_json(&dir.join(MANIFEST), &manifest)
}

/// Loads a set. With `verify`, descriptors are recomputed and compared
/// with the manifest checksums; otherwise descriptors are left empty.
pub fn read_exemplar_set(dir: &Path, verify: bool) -> Result<ExemplarSet> {
    let manifest_path = dir.join(MANIFEST);
    let manifest: Manifest = read_json(&manifest_path)?;
    if manifest.exemplars.is_empty() {
        return Err(schema_error(&manifest_path, "exemplars", "exemplar set is empty"));
    }
    let mut exemplars = Vec::with_capacity(manifest.exemplars.len());
    for (i, entry) in manifest.exemplars.iter().enumerate() {
        let mesh = read_part_mesh(&dir.join(&entry.mesh))?;
        let descriptor = if verify {
            let d = stored_descriptor(&mesh)?;
            if let Some(want) = &entry.descriptor_sha256 {
                if *want != descriptor_checksum(&d) {
                    return Err(schema_error(
                        &manifest_path,
                        &format!("exemplars[{i}].descriptor_sha256"),
                        "does not match the mesh",
                    ));
                }
            }
            d
        } else {
            ShapeDescriptor { values: Vec::new() }
        };
        exemplars.push(Exemplar { source: entry.source, mesh, descriptor });
    }
    Ok(ExemplarSet { category: manifest.category, k: manifest.k, seed: manifest.seed, exemplars })
}
