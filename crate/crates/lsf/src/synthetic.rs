//! Synthetic Gaussian-cluster descriptor dataset generator for end-to-end
//! testing. Each class gets a centroid in descriptor space; each video's
//! rows are that centroid plus a small per-video offset and per-row noise.
//! Centroids are rescaled so the minimum pairwise distance is exactly
//! `separation` times the within-class sigma.

use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::descriptor::{
    save_descriptors, DatasetManifest, DescriptorMatrix, ManifestEntry, Split,
    DEFAULT_BLOCK_WIDTHS,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SyntheticConfig {
    pub classes: usize,
    pub train_videos: usize,
    pub test_videos: usize,
    pub min_trajectories: usize,
    pub max_trajectories: usize,
    pub block_widths: [usize; 4],
    /// Minimum inter-centroid distance as a multiple of the within-class sigma.
    pub separation: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            classes: 6,
            train_videos: 600,
            test_videos: 300,
            min_trajectories: 50,
            max_trajectories: 500,
            block_widths: DEFAULT_BLOCK_WIDTHS,
            separation: 10.0,
            noise_sigma: 0.1,
            seed: 0,
        }
    }
}

pub struct SyntheticDataset {
    pub train_manifest: PathBuf,
    pub test_manifest: PathBuf,
}

fn class_centroids(config: &SyntheticConfig, rng: &mut ChaCha8Rng) -> Vec<Array1<f64>> {
    let d_in: usize = config.block_widths.iter().sum();
    let mut centroids: Vec<Array1<f64>> = (0..config.classes)
        .map(|_| Array1::from_shape_fn(d_in, |_| StandardNormal.sample(rng)))
        .collect();
    let mut min_dist = f64::INFINITY;
    for i in 0..centroids.len() {
        for j in (i + 1)..centroids.len() {
            let d = (&centroids[i] - &centroids[j]).mapv(|v| v * v).sum().sqrt();
            min_dist = min_dist.min(d);
        }
    }
    let target = config.separation * config.noise_sigma;
    let scale = target / min_dist;
    for c in &mut centroids {
        c.mapv_inplace(|v| v * scale);
    }
    centroids
}

/// Generate descriptor files plus train/test manifests under `out_dir`.
/// The foreground flag marks the upper half of the class ids.
pub fn generate(out_dir: &Path, config: &SyntheticConfig) -> Result<SyntheticDataset> {
    if config.classes < 2 {
        return Err(Error::InvalidArgument("need at least 2 classes".into()));
    }
    if config.min_trajectories == 0 || config.min_trajectories > config.max_trajectories {
        return Err(Error::InvalidArgument(
            "trajectory range must satisfy 1 <= min <= max".into(),
        ));
    }
    let desc_dir = out_dir.join("descriptors");
    std::fs::create_dir_all(&desc_dir).map_err(|e| Error::io(&desc_dir, e))?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let centroids = class_centroids(config, &mut rng);
    let d_in: usize = config.block_widths.iter().sum();

    let class_names: Vec<String> = (0..config.classes).map(|c| format!("class_{c}")).collect();

    let mut make_split = |split: Split, count: usize, prefix: &str| -> Result<PathBuf> {
        let mut entries = Vec::with_capacity(count);
        for v in 0..count {
            let class = v % config.classes;
            let n_rows = rng.gen_range(config.min_trajectories..=config.max_trajectories);
            // per-video offset keeps videos of one class from being identical
            let offset: Array1<f64> = Array1::from_shape_fn(d_in, |_| {
                let s: f64 = StandardNormal.sample(&mut rng);
                s * config.noise_sigma * 0.5
            });
            let mut rows = Array2::<f64>::zeros((n_rows, d_in));
            for mut row in rows.rows_mut() {
                for (k, slot) in row.iter_mut().enumerate() {
                    let noise: f64 = StandardNormal.sample(&mut rng);
                    *slot = centroids[class][k] + offset[k] + noise * config.noise_sigma;
                }
            }
            let video_id = format!("{prefix}_{v:04}");
            let file = desc_dir.join(format!("{video_id}.lsfd"));
            let matrix = DescriptorMatrix::new(video_id.clone(), rows, config.block_widths)?;
            save_descriptors(&file, &matrix)?;
            entries.push(ManifestEntry {
                video_id,
                path: file,
                background_label: Some(class),
                foreground: Some(class >= config.classes / 2),
            });
        }
        let manifest = DatasetManifest {
            entries,
            class_names: class_names.clone(),
            split,
        };
        let path = out_dir.join(format!("{prefix}.manifest"));
        manifest.save(&path)?;
        Ok(path)
    };

    let train_manifest = make_split(Split::Train, config.train_videos, "train")?;
    let test_manifest = make_split(Split::Test, config.test_videos, "test")?;
    Ok(SyntheticDataset {
        train_manifest,
        test_manifest,
    })
}
