//! Ingestion of precomputed trajectory-aligned descriptors and dataset
//! manifests, plus labeled row sampling for fusion training.
//!
//! Descriptor file (canonical binary form, all little-endian):
//! magic "LSFD", version u16, N_p u64, D_in u32, four block widths u32,
//! then N_p * D_in f32 values row-major. A plain CSV form (one row per
//! line) is accepted as well; files are dispatched on the magic bytes.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::io_util;

pub const DESCRIPTOR_MAGIC: &[u8; 4] = b"LSFD";
pub const DESCRIPTOR_VERSION: u16 = 1;

/// Default dense-trajectory block widths (trajectory, HOG, HOF, MBH).
pub const DEFAULT_BLOCK_WIDTHS: [usize; 4] = [30, 96, 108, 192];

/// Per-video set of trajectory-aligned descriptor rows.
#[derive(Debug, Clone)]
pub struct DescriptorMatrix {
    pub video_id: String,
    /// Shape N_p x D_in, N_p >= 1.
    pub rows: Array2<f64>,
    pub block_widths: [usize; 4],
}

impl DescriptorMatrix {
    pub fn new(video_id: String, rows: Array2<f64>, block_widths: [usize; 4]) -> Result<Self> {
        let d_in: usize = block_widths.iter().sum();
        if block_widths.iter().any(|&w| w == 0) {
            return Err(Error::InvalidArgument(
                "block widths must all be positive".into(),
            ));
        }
        if rows.nrows() == 0 {
            return Err(Error::Shape("descriptor matrix needs at least one row".into()));
        }
        if rows.ncols() != d_in {
            return Err(Error::Shape(format!(
                "row width {} does not match block width sum {}",
                rows.ncols(),
                d_in
            )));
        }
        for (i, row) in rows.rows().into_iter().enumerate() {
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("descriptor row {i}")));
            }
        }
        Ok(DescriptorMatrix {
            video_id,
            rows,
            block_widths,
        })
    }

    pub fn num_points(&self) -> usize {
        self.rows.nrows()
    }

    pub fn width(&self) -> usize {
        self.rows.ncols()
    }

    /// Per-block L2-norm advisories; rows whose block norm strays from 1 by
    /// more than 0.1 are reported but never rescaled.
    pub fn norm_warnings(&self) -> Vec<String> {
        let mut warnings = Vec::new();
        let mut offset = 0usize;
        for (b, &w) in self.block_widths.iter().enumerate() {
            let mut worst: f64 = 0.0;
            let mut worst_row = 0usize;
            for (i, row) in self.rows.rows().into_iter().enumerate() {
                let norm = row
                    .slice(ndarray::s![offset..offset + w])
                    .iter()
                    .map(|v| v * v)
                    .sum::<f64>()
                    .sqrt();
                let dev = (norm - 1.0).abs();
                if dev > worst {
                    worst = dev;
                    worst_row = i;
                }
            }
            if worst > 0.1 {
                warnings.push(format!(
                    "{}: block {b} L2 norm deviates from 1 by {worst:.3} (row {worst_row})",
                    self.video_id
                ));
            }
            offset += w;
        }
        warnings
    }
}

/// A sample of labeled rows drawn across the training manifest.
#[derive(Debug, Clone)]
pub struct LabeledDescriptorBatch {
    /// Shape S x D_in.
    pub rows: Array2<f64>,
    pub labels: Vec<usize>,
}

impl LabeledDescriptorBatch {
    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }

    /// Split into contiguous mini-batches of at most `batch_size` rows.
    pub fn batches(&self, batch_size: usize) -> Vec<(Array2<f64>, Vec<usize>)> {
        assert!(batch_size >= 1);
        let mut out = Vec::new();
        let mut start = 0;
        while start < self.len() {
            let end = (start + batch_size).min(self.len());
            out.push((
                self.rows.slice(ndarray::s![start..end, ..]).to_owned(),
                self.labels[start..end].to_vec(),
            ));
            start = end;
        }
        out
    }
}

fn parse_block_widths(raw: [u32; 4], path: &Path) -> Result<[usize; 4]> {
    if raw.iter().any(|&w| w == 0) {
        return Err(Error::format(path, "block widths must be positive"));
    }
    Ok([raw[0] as usize, raw[1] as usize, raw[2] as usize, raw[3] as usize])
}

fn video_id_from_path(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.to_string_lossy().into_owned())
}

/// Load a descriptor file (binary or CSV, dispatched on magic bytes) and
/// validate it against the expected block widths.
pub fn load_descriptors(path: &Path, expected_block_widths: [usize; 4]) -> Result<DescriptorMatrix> {
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut magic = [0u8; 4];
    let n = file.read(&mut magic).map_err(|e| Error::io(path, e))?;
    if n == 4 && &magic == DESCRIPTOR_MAGIC {
        load_descriptors_binary(path, expected_block_widths)
    } else {
        load_descriptors_csv(path, expected_block_widths)
    }
}

fn load_descriptors_binary(path: &Path, expected: [usize; 4]) -> Result<DescriptorMatrix> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    io_util::check_magic(&mut r, DESCRIPTOR_MAGIC, path)?;
    let version = io_util::read_u16(&mut r, path)?;
    if version != DESCRIPTOR_VERSION {
        return Err(Error::format(path, format!("unsupported version {version}")));
    }
    let n_points = io_util::read_u64(&mut r, path)? as usize;
    let d_in = io_util::read_u32(&mut r, path)? as usize;
    let mut raw_widths = [0u32; 4];
    for w in &mut raw_widths {
        *w = io_util::read_u32(&mut r, path)?;
    }
    let widths = parse_block_widths(raw_widths, path)?;
    let width_sum: usize = widths.iter().sum();
    if width_sum != d_in {
        return Err(Error::format(
            path,
            format!("block widths sum to {width_sum} but header says D_in={d_in}"),
        ));
    }
    if widths != expected {
        return Err(Error::format(
            path,
            format!("block widths {widths:?} do not match expected {expected:?}"),
        ));
    }
    if n_points == 0 {
        return Err(Error::format(path, "descriptor file holds zero rows"));
    }
    let mut data = vec![0.0f32; n_points * d_in];
    r.read_f32_into::<LittleEndian>(&mut data)
        .map_err(|e| Error::io(path, e))?;
    for (i, chunk) in data.chunks(d_in).enumerate() {
        if chunk.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "{}: descriptor row {i}",
                path.display()
            )));
        }
    }
    let rows = Array2::from_shape_vec((n_points, d_in), data.iter().map(|&v| v as f64).collect())
        .expect("shape checked above");
    DescriptorMatrix::new(video_id_from_path(path), rows, widths)
}

fn load_descriptors_csv(path: &Path, expected: [usize; 4]) -> Result<DescriptorMatrix> {
    let d_in: usize = expected.iter().sum();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut values: Vec<f64> = Vec::new();
    let mut n_rows = 0usize;
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut width = 0usize;
        for field in line.split(',') {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::format(path, format!("row {i}: unparseable value {field:?}")))?;
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("{}: row {i}", path.display())));
            }
            values.push(v);
            width += 1;
        }
        if width != d_in {
            return Err(Error::format(
                path,
                format!("row {i} has width {width}, expected {d_in}"),
            ));
        }
        n_rows += 1;
    }
    if n_rows == 0 {
        return Err(Error::format(path, "descriptor file holds zero rows"));
    }
    let rows = Array2::from_shape_vec((n_rows, d_in), values).expect("width checked per row");
    DescriptorMatrix::new(video_id_from_path(path), rows, expected)
}

/// Write a descriptor matrix in the canonical binary form.
pub fn save_descriptors(path: &Path, matrix: &DescriptorMatrix) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(DESCRIPTOR_MAGIC).map_err(|e| Error::io(path, e))?;
    w.write_u16::<LittleEndian>(DESCRIPTOR_VERSION)
        .map_err(|e| Error::io(path, e))?;
    w.write_u64::<LittleEndian>(matrix.num_points() as u64)
        .map_err(|e| Error::io(path, e))?;
    w.write_u32::<LittleEndian>(matrix.width() as u32)
        .map_err(|e| Error::io(path, e))?;
    for &bw in &matrix.block_widths {
        w.write_u32::<LittleEndian>(bw as u32)
            .map_err(|e| Error::io(path, e))?;
    }
    for &v in matrix.rows.iter() {
        w.write_f32::<LittleEndian>(v as f32)
            .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Read just the row count from a binary descriptor header (CSV files are
/// line-counted) without materializing the payload.
fn count_rows(path: &Path) -> Result<usize> {
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut magic = [0u8; 4];
    let n = file.read(&mut magic).map_err(|e| Error::io(path, e))?;
    if n == 4 && &magic == DESCRIPTOR_MAGIC {
        let mut r = BufReader::new(file);
        let _version = io_util::read_u16(&mut r, path)?;
        Ok(io_util::read_u64(&mut r, path)? as usize)
    } else {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let reader = BufReader::new(file);
        let mut count = 0usize;
        for line in reader.lines() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if !line.trim().is_empty() {
                count += 1;
            }
        }
        Ok(count)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn parse(s: &str, path: &Path) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(Error::format(path, format!("unknown split {other:?}"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ManifestEntry {
    pub video_id: String,
    /// Resolved (manifest-relative) descriptor file path.
    pub path: PathBuf,
    pub background_label: Option<usize>,
    pub foreground: Option<bool>,
}

/// Association of video ids with descriptor files and labels.
///
/// Line-oriented text format:
/// ```text
/// classes: tree_waving,camera_shake,rain
/// split: train
/// vid_000,descriptors/vid_000.lsfd,2,-
/// ```
/// The third field is the background class id or `-`; the fourth is the
/// foreground flag (`0`/`1`) or `-`.
#[derive(Debug, Clone)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    pub class_names: Vec<String>,
    pub split: Split,
}

impl DatasetManifest {
    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let reader = BufReader::new(file);
        let mut class_names: Option<Vec<String>> = None;
        let mut split: Option<Split> = None;
        let mut entries: Vec<ManifestEntry> = Vec::new();
        let mut seen_ids = std::collections::HashSet::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("classes:") {
                class_names = Some(
                    rest.split(',')
                        .map(|s| s.trim().to_string())
                        .filter(|s| !s.is_empty())
                        .collect(),
                );
                continue;
            }
            if let Some(rest) = line.strip_prefix("split:") {
                split = Some(Split::parse(rest.trim(), path)?);
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(|s| s.trim()).collect();
            if fields.len() != 4 {
                return Err(Error::format(
                    path,
                    format!("line {}: expected 4 fields, got {}", lineno + 1, fields.len()),
                ));
            }
            let video_id = fields[0].to_string();
            if !seen_ids.insert(video_id.clone()) {
                return Err(Error::format(
                    path,
                    format!("duplicate video id {video_id:?}"),
                ));
            }
            let background_label = match fields[2] {
                "-" => None,
                s => Some(s.parse::<usize>().map_err(|_| {
                    Error::format(path, format!("line {}: bad label {s:?}", lineno + 1))
                })?),
            };
            let foreground = match fields[3] {
                "-" => None,
                "0" => Some(false),
                "1" => Some(true),
                s => {
                    return Err(Error::format(
                        path,
                        format!("line {}: bad foreground flag {s:?}", lineno + 1),
                    ))
                }
            };
            entries.push(ManifestEntry {
                video_id,
                path: base.join(fields[1]),
                background_label,
                foreground,
            });
        }
        let class_names = class_names
            .ok_or_else(|| Error::format(path, "missing `classes:` header line"))?;
        let split = split.ok_or_else(|| Error::format(path, "missing `split:` header line"))?;
        let manifest = DatasetManifest {
            entries,
            class_names,
            split,
        };
        manifest.validate(path)?;
        Ok(manifest)
    }

    fn validate(&self, path: &Path) -> Result<()> {
        for entry in &self.entries {
            if let Some(label) = entry.background_label {
                if label >= self.class_names.len() {
                    return Err(Error::format(
                        path,
                        format!(
                            "{}: label {} out of range (C={})",
                            entry.video_id,
                            label,
                            self.class_names.len()
                        ),
                    ));
                }
            }
            if !entry.path.exists() {
                return Err(Error::format(
                    path,
                    format!("{}: missing descriptor file {}", entry.video_id, entry.path.display()),
                ));
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        (|| -> std::io::Result<()> {
            writeln!(w, "classes: {}", self.class_names.join(","))?;
            writeln!(w, "split: {}", self.split.as_str())?;
            for entry in &self.entries {
                let rel = entry.path.strip_prefix(base).unwrap_or(&entry.path);
                let label = entry
                    .background_label
                    .map(|l| l.to_string())
                    .unwrap_or_else(|| "-".into());
                let fg = entry
                    .foreground
                    .map(|f| if f { "1" } else { "0" }.to_string())
                    .unwrap_or_else(|| "-".into());
                writeln!(w, "{},{},{},{}", entry.video_id, rel.display(), label, fg)?;
            }
            w.flush()
        })()
        .map_err(|e| Error::io(path, e))
    }
}

/// Draw `sample_size` labeled rows from the union of all videos' rows.
///
/// Without replacement when the population suffices, with replacement
/// otherwise; each row carries its video's background label. Deterministic
/// for a fixed (manifest, sample_size, seed).
pub fn sample_labeled_rows(
    manifest: &DatasetManifest,
    block_widths: [usize; 4],
    sample_size: usize,
    seed: u64,
) -> Result<LabeledDescriptorBatch> {
    if manifest.entries.is_empty() {
        return Err(Error::InvalidArgument("manifest has no entries".into()));
    }
    if sample_size == 0 {
        return Err(Error::InvalidArgument("sample_size must be positive".into()));
    }
    let mut counts = Vec::with_capacity(manifest.entries.len());
    for entry in &manifest.entries {
        if entry.background_label.is_none() {
            return Err(Error::InvalidArgument(format!(
                "video {} has no background label",
                entry.video_id
            )));
        }
        counts.push(count_rows(&entry.path)?);
    }
    let population: usize = counts.iter().sum();
    if population == 0 {
        return Err(Error::InvalidArgument("no descriptor rows available".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<usize> = if population >= sample_size {
        rand::seq::index::sample(&mut rng, population, sample_size).into_vec()
    } else {
        (0..sample_size)
            .map(|_| rng.gen_range(0..population))
            .collect()
    };
    chosen.sort_unstable();

    let d_in: usize = block_widths.iter().sum();
    let mut rows = Array2::<f64>::zeros((sample_size, d_in));
    let mut labels = vec![0usize; sample_size];
    let mut order: Vec<usize> = (0..sample_size).collect();
    order.shuffle(&mut rng);

    let mut cursor = 0usize; // index into `chosen`
    let mut offset = 0usize; // global row id of the current video's first row
    for (entry, &count) in manifest.entries.iter().zip(&counts) {
        let end = offset + count;
        let first = cursor;
        while cursor < chosen.len() && chosen[cursor] < end {
            cursor += 1;
        }
        if cursor > first {
            let matrix = load_descriptors(&entry.path, block_widths)?;
            let label = entry.background_label.expect("checked above");
            for (k, &global) in chosen[first..cursor].iter().enumerate() {
                let slot = order[first + k];
                rows.row_mut(slot).assign(&matrix.rows.row(global - offset));
                labels[slot] = label;
            }
        }
        offset = end;
    }

    Ok(LabeledDescriptorBatch { rows, labels })
}

/// Total descriptor rows available across a manifest (header reads only).
pub fn manifest_row_count(manifest: &DatasetManifest) -> Result<usize> {
    let mut total = 0usize;
    for entry in &manifest.entries {
        total += count_rows(&entry.path)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use tempfile::tempdir;

    fn widths_small() -> [usize; 4] {
        [1, 1, 1, 1]
    }

    #[test]
    fn minimal_binary_roundtrip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("v.lsfd");
        let widths = DEFAULT_BLOCK_WIDTHS;
        let rows = Array2::from_shape_fn((1, 426), |(_, j)| (j as f64) / 426.0);
        let m = DescriptorMatrix::new("v".into(), rows, widths).unwrap();
        save_descriptors(&path, &m).unwrap();
        let loaded = load_descriptors(&path, widths).unwrap();
        assert_eq!(loaded.num_points(), 1);
        assert_eq!(loaded.width(), 426);
    }

    #[test]
    fn csv_width_mismatch_names_row() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("v.csv");
        std::fs::write(&path, "1,2,3,4\n1,2,3,4\n1,2,3,4\n1,2,3\n").unwrap();
        let err = load_descriptors(&path, widths_small()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 3"), "got: {msg}");
    }

    #[test]
    fn save_load_bit_exact_payload() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("v.lsfd");
        let path2 = dir.path().join("v2.lsfd");
        let widths = [2, 3, 4, 5];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rows = Array2::from_shape_fn((500, 14), |_| {
            // stored as f32; start from f32-representable values
            rng.gen_range(-1.0f32..1.0) as f64
        });
        let m = DescriptorMatrix::new("v".into(), rows, widths).unwrap();
        save_descriptors(&path, &m).unwrap();
        let loaded = load_descriptors(&path, widths).unwrap();
        save_descriptors(&path2, &loaded).unwrap();
        let a = std::fs::read(&path).unwrap();
        let b = std::fs::read(&path2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn nan_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("v.csv");
        std::fs::write(&path, "1,2,NaN,4\n").unwrap();
        let err = load_descriptors(&path, widths_small()).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
    }

    fn write_manifest(dir: &Path, videos: &[(&str, usize, Array2<f64>)]) -> PathBuf {
        let manifest_path = dir.join("train.manifest");
        let mut lines = vec![
            "classes: a,b,c,d,e,f".to_string(),
            "split: train".to_string(),
        ];
        for (id, label, rows) in videos {
            let file = dir.join(format!("{id}.lsfd"));
            let m = DescriptorMatrix::new((*id).into(), rows.clone(), widths_small()).unwrap();
            save_descriptors(&file, &m).unwrap();
            lines.push(format!("{id},{id}.lsfd,{label},-"));
        }
        std::fs::write(&manifest_path, lines.join("\n")).unwrap();
        manifest_path
    }

    #[test]
    fn single_row_population_samples_with_replacement() {
        let dir = tempdir().unwrap();
        let rows = array![[1.0, 2.0, 3.0, 4.0]];
        let path = write_manifest(dir.path(), &[("v0", 2, rows)]);
        let manifest = DatasetManifest::load(&path).unwrap();
        let batch = sample_labeled_rows(&manifest, widths_small(), 3, 9).unwrap();
        assert_eq!(batch.len(), 3);
        assert_eq!(batch.labels, vec![2, 2, 2]);
        for row in batch.rows.rows() {
            assert_eq!(row.to_vec(), vec![1.0, 2.0, 3.0, 4.0]);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let dir = tempdir().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let videos: Vec<(String, usize, Array2<f64>)> = (0..4)
            .map(|i| {
                let rows = Array2::from_shape_fn((5 + i, 4), |_| rng.gen_range(-1.0..1.0));
                (format!("v{i}"), i % 3, rows)
            })
            .collect();
        let refs: Vec<(&str, usize, Array2<f64>)> = videos
            .iter()
            .map(|(id, l, r)| (id.as_str(), *l, r.clone()))
            .collect();
        let path = write_manifest(dir.path(), &refs);
        let manifest = DatasetManifest::load(&path).unwrap();
        let a = sample_labeled_rows(&manifest, widths_small(), 10, 42).unwrap();
        let b = sample_labeled_rows(&manifest, widths_small(), 10, 42).unwrap();
        assert_eq!(a.rows, b.rows);
        assert_eq!(a.labels, b.labels);
    }

    #[test]
    fn sampling_is_uniform_across_classes() {
        // 6 classes, one 100-row video each; counts should stay within 3 sigma
        // of the multinomial expectation.
        let dir = tempdir().unwrap();
        let videos: Vec<(String, usize, Array2<f64>)> = (0..6)
            .map(|c| {
                let rows = Array2::from_elem((100, 4), c as f64);
                (format!("v{c}"), c, rows)
            })
            .collect();
        let refs: Vec<(&str, usize, Array2<f64>)> = videos
            .iter()
            .map(|(id, l, r)| (id.as_str(), *l, r.clone()))
            .collect();
        let path = write_manifest(dir.path(), &refs);
        let manifest = DatasetManifest::load(&path).unwrap();
        let batch = sample_labeled_rows(&manifest, widths_small(), 6000, 7).unwrap();
        let mut counts = [0usize; 6];
        for &l in &batch.labels {
            counts[l] += 1;
        }
        let n = 6000.0f64;
        let p = 1.0 / 6.0f64;
        let sigma = (n * p * (1.0 - p)).sqrt();
        for &c in &counts {
            assert!(
                (c as f64 - n * p).abs() <= 3.0 * sigma,
                "class count {c} outside 3 sigma of {}",
                n * p
            );
        }
    }

    #[test]
    fn unlabeled_entry_rejected() {
        let dir = tempdir().unwrap();
        let rows = array![[1.0, 2.0, 3.0, 4.0]];
        let m = DescriptorMatrix::new("v0".into(), rows, widths_small()).unwrap();
        save_descriptors(&dir.path().join("v0.lsfd"), &m).unwrap();
        let manifest_path = dir.path().join("m.manifest");
        std::fs::write(
            &manifest_path,
            "classes: a,b\nsplit: train\nv0,v0.lsfd,-,-\n",
        )
        .unwrap();
        let manifest = DatasetManifest::load(&manifest_path).unwrap();
        let err = sample_labeled_rows(&manifest, widths_small(), 1, 0).unwrap_err();
        assert!(err.to_string().contains("no background label"));
    }

    #[test]
    fn manifest_rejects_out_of_range_label_and_duplicate_id() {
        let dir = tempdir().unwrap();
        let rows = array![[1.0, 2.0, 3.0, 4.0]];
        let m = DescriptorMatrix::new("v0".into(), rows, widths_small()).unwrap();
        save_descriptors(&dir.path().join("v0.lsfd"), &m).unwrap();
        let p = dir.path().join("m.manifest");
        std::fs::write(&p, "classes: a,b\nsplit: train\nv0,v0.lsfd,5,-\n").unwrap();
        assert!(DatasetManifest::load(&p).is_err());
        std::fs::write(
            &p,
            "classes: a,b\nsplit: train\nv0,v0.lsfd,1,-\nv0,v0.lsfd,0,-\n",
        )
        .unwrap();
        assert!(DatasetManifest::load(&p).is_err());
    }
}
