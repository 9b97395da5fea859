use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PipelineConfig;
use crate::cache::CacheKey;
use crate::mesh::{geodesic_diameter, load_obj, simplify, validate, volume};
use crate::sgws::{compute_signature, design_filter_bank, SignatureMatrix};
use crate::spectral::{build_laplacian, solve_eigs, EigenSystem};
use crate::{Error, Result};

/// Global scalars of one processed mesh, measured after simplification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshScalars {
    pub input_vertex_count: usize,
    pub vertex_count: usize,
    pub geodesic_diameter: f64,
    pub volume: f64,
    pub watertight: bool,
    pub reached_target: bool,
    pub eig_count: usize,
    pub lambda_max: f64,
}

/// Everything the encoder needs from one mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshDescriptor {
    pub id: String,
    pub content_hash: String,
    pub signature: SignatureMatrix,
    pub scalars: MeshScalars,
    pub cache_hit: bool,
}

impl MeshDescriptor {
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if !self.scalars.watertight {
            w.push("mesh is not watertight; volume is approximate".to_string());
        }
        if !self.scalars.reached_target {
            w.push(format!(
                "simplification stopped at {} vertices",
                self.scalars.vertex_count
            ));
        }
        w
    }
}

/// Where per-mesh eigensystems, signatures and scalars are kept between runs.
/// Files are named by a hash of the mesh bytes and every parameter that
/// affects them, so a hit is always exact.
#[derive(Debug, Clone, Default)]
pub struct DescriptorCache {
    dir: Option<PathBuf>,
}

impl DescriptorCache {
    pub fn disabled() -> Self {
        Self { dir: None }
    }

    pub fn at(dir: impl Into<PathBuf>) -> Self {
        Self { dir: Some(dir.into()) }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn path(&self, key: &CacheKey, ext: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{}.{ext}", hex::encode(key))))
    }

    fn read<T>(&self, key: &CacheKey, ext: &str, read: impl FnOnce(&mut BufReader<fs::File>) -> Result<T>) -> Option<T> {
        let path = self.path(key, ext)?;
        let file = fs::File::open(path).ok()?;
        read(&mut BufReader::new(file)).ok()
    }

    /// Writes through a temporary file so concurrent readers never see a
    /// partial entry.
    fn write(&self, key: &CacheKey, ext: &str, bytes: &[u8]) -> Result<()> {
        let Some(path) = self.path(key, ext) else {
            return Ok(());
        };
        let dir = path.parent().expect("cache file has a directory");
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let tmp = path.with_extension(format!("{ext}.tmp{}", std::process::id()));
        fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))
    }
}

fn hash(parts: &[&[u8]]) -> CacheKey {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    h.finalize().into()
}

fn spectrum_key(content: &CacheKey, config: &PipelineConfig) -> CacheKey {
    hash(&[
        b"spectrum",
        env!("CARGO_PKG_VERSION").as_bytes(),
        content,
        &(config.target_vertices as u64).to_le_bytes(),
        &(config.eig_count as u64).to_le_bytes(),
    ])
}

fn signature_key(spectrum: &CacheKey, config: &PipelineConfig) -> CacheKey {
    hash(&[b"signature", spectrum, &(config.resolution as u64).to_le_bytes()])
}

/// Simplifies, measures and computes the wavelet signature of OBJ bytes.
pub fn describe_mesh(id: &str, obj_bytes: &[u8], config: &PipelineConfig, cache: &DescriptorCache) -> Result<MeshDescriptor> {
    let content = hash(&[obj_bytes]);
    let spectrum = spectrum_key(&content, config);
    let sig_key = signature_key(&spectrum, config);
    let scalars = cache.read(&spectrum, "json", |r| Ok(serde_json::from_reader::<_, MeshScalars>(r)?));
    let descriptor = |signature, scalars, cache_hit| MeshDescriptor {
        id: id.to_string(),
        content_hash: hex::encode(content),
        signature,
        scalars,
        cache_hit,
    };

    if let Some(scalars) = &scalars {
        if let Some(sig) = cache.read(&sig_key, "swsig", |r| SignatureMatrix::read_cache(r, Some(&sig_key))) {
            return Ok(descriptor(sig, scalars.clone(), true));
        }
        if let Some(eigs) = cache.read(&spectrum, "sweig", |r| EigenSystem::read_cache(r, Some(&spectrum))) {
            let sig = signature_from(&eigs, config)?;
            store_signature(cache, &sig_key, &sig)?;
            return Ok(descriptor(sig, scalars.clone(), true));
        }
    }

    let mesh = load_obj(obj_bytes)?;
    let report = validate(&mesh);
    if !report.is_usable() {
        return Err(Error::Structural(format!(
            "{id}: unusable mesh ({} components, {} degenerate faces, {} faces)",
            report.component_count, report.degenerate_face_count, report.face_count
        )));
    }
    let (mesh, reached_target) = if mesh.vertex_count() > config.target_vertices {
        let out = simplify(&mesh, config.target_vertices)?;
        (out.mesh, out.reached_target)
    } else {
        (mesh, true)
    };
    let vol = volume(&mesh);
    let diameter = geodesic_diameter(&mesh)?;
    let lap = build_laplacian(&mesh)?;
    let count = config.eig_count.min(mesh.vertex_count() - 1);
    let eigs = solve_eigs(&lap, count)?;
    let sig = signature_from(&eigs, config)?;
    let scalars = MeshScalars {
        input_vertex_count: report.vertex_count,
        vertex_count: mesh.vertex_count(),
        geodesic_diameter: diameter.length,
        volume: vol.value,
        watertight: vol.watertight,
        reached_target,
        eig_count: count,
        lambda_max: eigs.lambda_max(),
    };

    if cache.dir().is_some() {
        let mut buf = Vec::new();
        eigs.write_cache(&mut buf, &spectrum).map_err(|e| Error::io("eigen cache", e))?;
        cache.write(&spectrum, "sweig", &buf)?;
        store_signature(cache, &sig_key, &sig)?;
        cache.write(&spectrum, "json", serde_json::to_string_pretty(&scalars)?.as_bytes())?;
    }
    Ok(descriptor(sig, scalars, false))
}

fn signature_from(eigs: &EigenSystem, config: &PipelineConfig) -> Result<SignatureMatrix> {
    let bank = design_filter_bank(eigs.lambda_max(), config.resolution)?;
    compute_signature(eigs, &bank)
}

fn store_signature(cache: &DescriptorCache, key: &CacheKey, sig: &SignatureMatrix) -> Result<()> {
    if cache.dir().is_none() {
        return Ok(());
    }
    let mut buf = Vec::new();
    sig.write_cache(&mut buf, key).map_err(|e| Error::io("signature cache", e))?;
    cache.write(key, "swsig", &buf)
}

/// [`describe_mesh`] on a file.
pub fn describe_mesh_file(id: &str, path: &Path, config: &PipelineConfig, cache: &DescriptorCache) -> Result<MeshDescriptor> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    describe_mesh(id, &bytes, config, cache)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::save_obj;
    use crate::shapes;

    fn small_config() -> PipelineConfig {
        PipelineConfig {
            target_vertices: 120,
            eig_count: 40,
            ..PipelineConfig::default()
        }
    }

    fn obj_bytes() -> Vec<u8> {
        let mut buf = Vec::new();
        save_obj(&shapes::bumpy_ellipsoid([3.0, 1.5, 1.0], &[], 2), &mut buf).unwrap();
        buf
    }

    #[test]
    fn cache_is_transparent() {
        let dir = tempfile::tempdir().unwrap();
        let cache = DescriptorCache::at(dir.path());
        let config = small_config();
        let bytes = obj_bytes();
        let plain = describe_mesh("a", &bytes, &config, &DescriptorCache::disabled()).unwrap();
        let first = describe_mesh("a", &bytes, &config, &cache).unwrap();
        let second = describe_mesh("a", &bytes, &config, &cache).unwrap();
        assert!(!first.cache_hit && second.cache_hit);
        assert_eq!(plain.signature, second.signature);
        assert_eq!(plain.scalars, second.scalars);
        assert_eq!(plain.scalars.vertex_count, 120);

        // A new resolution reuses the cached spectrum.
        let finer = PipelineConfig { resolution: 3, dictionary_k: 40, ..config };
        let third = describe_mesh("a", &bytes, &finer, &cache).unwrap();
        assert!(third.cache_hit);
        assert_eq!(third.signature.dim(), 9);
        assert_eq!(third.signature, describe_mesh("a", &bytes, &finer, &DescriptorCache::disabled()).unwrap().signature);
    }

    #[test]
    fn corrupt_cache_entry_is_recomputed() {
        let dir = tempfile::tempdir().unwrap();
        let cache = DescriptorCache::at(dir.path());
        let config = small_config();
        let bytes = obj_bytes();
        let first = describe_mesh("a", &bytes, &config, &cache).unwrap();
        for entry in fs::read_dir(dir.path()).unwrap() {
            let path = entry.unwrap().path();
            if path.extension().is_some_and(|e| e == "swsig" || e == "sweig") {
                fs::write(&path, b"garbage").unwrap();
            }
        }
        let again = describe_mesh("a", &bytes, &config, &cache).unwrap();
        assert!(!again.cache_hit);
        assert_eq!(again.signature, first.signature);
    }

    #[test]
    fn disconnected_mesh_is_rejected() {
        let two = crate::TriangleMesh::disjoint_union(&[shapes::tetrahedron(), shapes::tetrahedron().map_vertices(|p| p + nalgebra::Vector3::new(5.0, 0.0, 0.0))]);
        let mut buf = Vec::new();
        save_obj(&two, &mut buf).unwrap();
        let err = describe_mesh("two", &buf, &small_config(), &DescriptorCache::disabled()).unwrap_err();
        assert!(matches!(err, Error::Structural(_)));
    }
}
