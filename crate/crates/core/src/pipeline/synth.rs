//! Synthetic carcass-like dataset with targets that are known functions of
//! the generating shape, used to check the pipeline end to end.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::manifest::{DatasetManifest, ManifestRow};
use crate::mesh::{save_obj_file, volume, Point, TriangleMesh};
use crate::shapes::{bumpy_ellipsoid, Bump};
use crate::{Error, Result};

/// Name of the target that depends on volume and body length.
pub const PRIMARY_TARGET: &str = "primal_kg";
/// Name of the target that depends on volume and cross-section.
pub const SECONDARY_TARGET: &str = "trim_kg";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthOptions {
    pub n: usize,
    pub seed: u64,
    /// Relative standard deviation of the multiplicative target noise.
    pub noise: f64,
    /// Icosphere subdivision level; 5 gives 10242 vertices, 4 gives 2562.
    pub level: u32,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            n: 40,
            seed: 7,
            noise: 0.0,
            level: 5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthSample {
    pub id: String,
    /// Semi-axes in cm, longest first.
    pub axes: [f64; 3],
    pub bumps: Vec<Bump>,
    pub mesh: TriangleMesh,
    /// Enclosed volume of the generated mesh in cm³.
    pub volume: f64,
    pub carcass_weight: f64,
    pub targets: BTreeMap<String, f64>,
}

/// Noise-free target values for a shape.
pub fn true_targets(axes: [f64; 3], volume: f64) -> BTreeMap<String, f64> {
    BTreeMap::from([
        (PRIMARY_TARGET.to_string(), 1.5e-4 * volume + 0.05 * axes[0]),
        (SECONDARY_TARGET.to_string(), 4.0e-5 * volume + 0.02 * (axes[1] + axes[2])),
    ])
}

/// Draws `n` bumpy ellipsoids. Carcass weight is volume times a random
/// density; targets follow [`true_targets`] with relative Gaussian noise.
pub fn generate(opts: &SynthOptions) -> Result<Vec<SynthSample>> {
    if opts.n < 4 {
        return Err(Error::Argument(format!("synth needs n >= 4, got {}", opts.n)));
    }
    if !(opts.noise >= 0.0 && opts.noise.is_finite()) {
        return Err(Error::Argument(format!("noise must be a nonnegative number, got {}", opts.noise)));
    }
    if !(1..=7).contains(&opts.level) {
        return Err(Error::Argument(format!("level must be between 1 and 7, got {}", opts.level)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let mut samples = Vec::with_capacity(opts.n);
    for i in 0..opts.n {
        let axes = [
            rng.random_range(55.0..95.0),
            rng.random_range(14.0..26.0),
            rng.random_range(9.0..15.0),
        ];
        let bumps: Vec<Bump> = (0..rng.random_range(2..=4))
            .map(|_| {
                let d = Point::new(unit.sample(&mut rng), unit.sample(&mut rng), unit.sample(&mut rng));
                Bump {
                    direction: d.normalize(),
                    amplitude: rng.random_range(0.05..0.2),
                    width: rng.random_range(0.3..0.7),
                }
            })
            .collect();
        let density = rng.random_range(1.02e-3..1.08e-3);
        let mesh = bumpy_ellipsoid(axes, &bumps, opts.level);
        let v = volume(&mesh).value;
        let mut targets = true_targets(axes, v);
        for value in targets.values_mut() {
            *value *= 1.0 + opts.noise * unit.sample(&mut rng);
        }
        samples.push(SynthSample {
            id: format!("meshes/synth_{i:03}.obj"),
            axes,
            bumps,
            mesh,
            volume: v,
            carcass_weight: density * v,
            targets,
        });
    }
    Ok(samples)
}

/// Writes the meshes under `dir/meshes` and `dir/manifest.csv`; returns the
/// manifest path.
pub fn write_dataset(samples: &[SynthSample], dir: &Path) -> Result<PathBuf> {
    let mesh_dir = dir.join("meshes");
    fs::create_dir_all(&mesh_dir).map_err(|e| Error::io(&mesh_dir, e))?;
    for s in samples {
        save_obj_file(&s.mesh, dir.join(&s.id))?;
    }
    let rows = samples
        .iter()
        .map(|s| ManifestRow {
            mesh_path: s.id.clone(),
            carcass_weight: s.carcass_weight,
            targets: s.targets.clone(),
        })
        .collect();
    let names = vec![PRIMARY_TARGET.to_string(), SECONDARY_TARGET.to_string()];
    let manifest = DatasetManifest::new(dir, names, rows)?;
    let path = dir.join("manifest.csv");
    let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    manifest.write(std::io::BufWriter::new(file))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(n: usize, noise: f64) -> SynthOptions {
        SynthOptions { n, seed: 3, noise, level: 2 }
    }

    #[test]
    fn rejects_tiny_datasets() {
        assert!(matches!(generate(&opts(3, 0.0)), Err(Error::Argument(_))));
        assert!(generate(&opts(4, -0.1)).is_err());
    }

    #[test]
    fn noise_free_targets_are_exact() {
        for s in generate(&opts(6, 0.0)).unwrap() {
            assert_eq!(s.targets, true_targets(s.axes, s.volume));
            let density = s.carcass_weight / s.volume;
            assert!((1.02e-3..1.08e-3).contains(&density));
            assert!(crate::mesh::validate(&s.mesh).is_usable());
        }
    }

    #[test]
    fn noise_changes_targets_only() {
        let clean = generate(&opts(6, 0.0)).unwrap();
        let noisy = generate(&opts(6, 0.05)).unwrap();
        for (a, b) in clean.iter().zip(&noisy) {
            assert_eq!(a.axes, b.axes);
            assert_eq!(a.mesh, b.mesh);
            assert_ne!(a.targets, b.targets);
        }
    }

    #[test]
    fn written_dataset_loads_back() {
        let dir = tempfile::tempdir().unwrap();
        let samples = generate(&opts(5, 0.05)).unwrap();
        let path = write_dataset(&samples, dir.path()).unwrap();
        let manifest = DatasetManifest::load(&path).unwrap();
        assert_eq!(manifest.rows().len(), 5);
        for (row, s) in manifest.rows().iter().zip(&samples) {
            assert_eq!(row.carcass_weight, s.carcass_weight);
            assert_eq!(row.targets, s.targets);
        }
    }
}
