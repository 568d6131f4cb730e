//! Per-class scalar-projection hashing, K-nearest-neighbour retrieval in
//! the projected space, and soft-voting classification.
//!
//! Each class keeps its own family of N real-valued hash functions
//! h_j(x) = a_j . x (Gaussian a_j) and stores the projections of that
//! class's training vectors. A query is projected under every class's
//! family; each bucket is scanned linearly and contributes up to K
//! candidates to one inverse-distance-weighted vote.
//!
//! Index file: magic "LSFI", version u16, C u32, N u32, D_sel u32, then
//! per class: seed u64, member count u64, projection matrix (f64, row per
//! member), member video ids (length-prefixed utf-8). Little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use byteorder::{LittleEndian, WriteBytesExt};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::io_util;

pub const INDEX_MAGIC: &[u8; 4] = b"LSFI";
pub const INDEX_VERSION: u16 = 1;

/// Midpoints of the sweep ranges used as single-shot defaults.
pub const DEFAULT_NUM_HASHES: usize = 30;
pub const DEFAULT_K: usize = 64;

/// Guard added to distances before inverse weighting.
pub const VOTE_EPSILON: f64 = 1e-8;

/// N scalar-projection hash functions; row j of `projections` is a_j.
#[derive(Debug, Clone)]
pub struct HashFamily {
    pub seed: u64,
    /// N x D_sel.
    pub projections: Array2<f64>,
}

impl HashFamily {
    pub fn num_hashes(&self) -> usize {
        self.projections.nrows()
    }

    /// g(x) = [a_1.x, ..., a_N.x].
    pub fn project(&self, x: &ArrayView1<f64>) -> Result<Array1<f64>> {
        if x.len() != self.projections.ncols() {
            return Err(Error::Shape(format!(
                "vector width {} does not match family width {}",
                x.len(),
                self.projections.ncols()
            )));
        }
        Ok(self.projections.dot(x))
    }
}

/// Draw N i.i.d. standard-normal projection directions; deterministic per seed.
pub fn make_family(num_hashes: usize, d_sel: usize, seed: u64) -> Result<HashFamily> {
    if num_hashes == 0 || d_sel == 0 {
        return Err(Error::InvalidArgument(
            "hash family needs N >= 1 and D_sel >= 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let projections =
        Array2::from_shape_fn((num_hashes, d_sel), |_| StandardNormal.sample(&mut rng));
    Ok(HashFamily { seed, projections })
}

#[derive(Debug, Clone)]
struct ClassBucket {
    family: HashFamily,
    /// members x N projected training vectors.
    projections: Array2<f64>,
    video_ids: Vec<String>,
}

/// Immutable per-class projection index over the selected training features.
#[derive(Debug, Clone)]
pub struct ProjectionIndex {
    num_hashes: usize,
    d_sel: usize,
    buckets: Vec<ClassBucket>,
}

/// One retrieved neighbour.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor {
    pub video_id: String,
    pub label: usize,
    pub distance: f64,
}

/// Soft-vote outcome: nonnegative confidences summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Vote {
    pub confidences: Vec<f64>,
    pub predicted: usize,
}

/// Build one bucket per class; class c's family uses seed + c and indexes
/// only the vectors labeled c.
pub fn build_index(
    features: &ArrayView2<f64>,
    labels: &[usize],
    video_ids: &[String],
    num_hashes: usize,
    seed: u64,
) -> Result<ProjectionIndex> {
    let m = features.nrows();
    if labels.len() != m || video_ids.len() != m {
        return Err(Error::Shape(format!(
            "{} rows, {} labels, {} ids",
            m,
            labels.len(),
            video_ids.len()
        )));
    }
    if m == 0 {
        return Err(Error::InvalidArgument("cannot index zero vectors".into()));
    }
    let classes = labels.iter().max().unwrap() + 1;
    let d_sel = features.ncols();
    let mut buckets = Vec::with_capacity(classes);
    for c in 0..classes {
        let member_rows: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == c)
            .map(|(i, _)| i)
            .collect();
        if member_rows.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "class {c} has no training vectors; merge or drop it before indexing"
            )));
        }
        let family = make_family(num_hashes, d_sel, seed.wrapping_add(c as u64))?;
        let mut projections = Array2::<f64>::zeros((member_rows.len(), num_hashes));
        let mut ids = Vec::with_capacity(member_rows.len());
        for (slot, &row) in member_rows.iter().enumerate() {
            let projected = family.project(&features.row(row))?;
            projections.row_mut(slot).assign(&projected);
            ids.push(video_ids[row].clone());
        }
        buckets.push(ClassBucket {
            family,
            projections,
            video_ids: ids,
        });
    }
    Ok(ProjectionIndex {
        num_hashes,
        d_sel,
        buckets,
    })
}

impl ProjectionIndex {
    pub fn num_classes(&self) -> usize {
        self.buckets.len()
    }

    pub fn num_hashes(&self) -> usize {
        self.num_hashes
    }

    pub fn selected_width(&self) -> usize {
        self.d_sel
    }

    pub fn bucket_size(&self, class: usize) -> usize {
        self.buckets[class].video_ids.len()
    }

    /// Project the query under every class's family and linearly scan each
    /// bucket for its K nearest members under Euclidean distance in R^N.
    /// Up to C*K candidates, ordered by class then (distance, video_id).
    pub fn query_knn(&self, query: &ArrayView1<f64>, k: usize) -> Result<Vec<Neighbor>> {
        if k == 0 {
            return Err(Error::InvalidArgument("K must be >= 1".into()));
        }
        let mut out = Vec::new();
        for (class, bucket) in self.buckets.iter().enumerate() {
            let projected = bucket.family.project(query)?;
            let mut candidates: Vec<Neighbor> = bucket
                .projections
                .rows()
                .into_iter()
                .zip(&bucket.video_ids)
                .map(|(stored, id)| {
                    let distance = stored
                        .iter()
                        .zip(projected.iter())
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt();
                    Neighbor {
                        video_id: id.clone(),
                        label: class,
                        distance,
                    }
                })
                .collect();
            candidates.sort_by(|a, b| {
                a.distance
                    .partial_cmp(&b.distance)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then_with(|| a.video_id.cmp(&b.video_id))
            });
            candidates.truncate(k);
            out.extend(candidates);
        }
        Ok(out)
    }

    pub fn classify(&self, query: &ArrayView1<f64>, k: usize) -> Result<Vote> {
        let candidates = self.query_knn(query, k)?;
        soft_vote(&candidates, self.num_classes())
    }
}

/// Inverse-distance soft vote: w = 1/(d + eps), confidences normalized to
/// sum 1, argmax prediction with ties to the lower class id.
pub fn soft_vote(candidates: &[Neighbor], classes: usize) -> Result<Vote> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no candidates to vote on".into()));
    }
    let mut weights = vec![0.0f64; classes];
    let mut total = 0.0;
    for cand in candidates {
        if cand.label >= classes {
            return Err(Error::InvalidArgument(format!(
                "candidate label {} out of range (C={classes})",
                cand.label
            )));
        }
        let w = 1.0 / (cand.distance + VOTE_EPSILON);
        weights[cand.label] += w;
        total += w;
    }
    let confidences: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let predicted = confidences
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| {
            a.partial_cmp(b)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(ib.cmp(ia))
        })
        .map(|(i, _)| i)
        .expect("classes >= 1");
    Ok(Vote {
        confidences,
        predicted,
    })
}

pub fn save_index(path: &Path, index: &ProjectionIndex) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(INDEX_MAGIC).map_err(|e| Error::io(path, e))?;
    w.write_u16::<LittleEndian>(INDEX_VERSION)
        .map_err(|e| Error::io(path, e))?;
    w.write_u32::<LittleEndian>(index.buckets.len() as u32)
        .map_err(|e| Error::io(path, e))?;
    w.write_u32::<LittleEndian>(index.num_hashes as u32)
        .map_err(|e| Error::io(path, e))?;
    w.write_u32::<LittleEndian>(index.d_sel as u32)
        .map_err(|e| Error::io(path, e))?;
    for bucket in &index.buckets {
        w.write_u64::<LittleEndian>(bucket.family.seed)
            .map_err(|e| Error::io(path, e))?;
        w.write_u64::<LittleEndian>(bucket.video_ids.len() as u64)
            .map_err(|e| Error::io(path, e))?;
        io_util::write_f64_slice(&mut w, bucket.projections.as_slice().unwrap(), path)?;
        for id in &bucket.video_ids {
            io_util::write_string(&mut w, id, path)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_index(path: &Path) -> Result<ProjectionIndex> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    io_util::check_magic(&mut r, INDEX_MAGIC, path)?;
    let version = io_util::read_u16(&mut r, path)?;
    if version != INDEX_VERSION {
        return Err(Error::format(path, format!("unsupported version {version}")));
    }
    let classes = io_util::read_u32(&mut r, path)? as usize;
    let num_hashes = io_util::read_u32(&mut r, path)? as usize;
    let d_sel = io_util::read_u32(&mut r, path)? as usize;
    let mut buckets = Vec::with_capacity(classes);
    for _ in 0..classes {
        let seed = io_util::read_u64(&mut r, path)?;
        let members = io_util::read_u64(&mut r, path)? as usize;
        let data = io_util::read_f64_vec(&mut r, members * num_hashes, path)?;
        let projections =
            Array2::from_shape_vec((members, num_hashes), data).expect("length matches");
        let mut video_ids = Vec::with_capacity(members);
        for _ in 0..members {
            video_ids.push(io_util::read_string(&mut r, path)?);
        }
        let family = make_family(num_hashes, d_sel, seed)?;
        buckets.push(ClassBucket {
            family,
            projections,
            video_ids,
        });
    }
    Ok(ProjectionIndex {
        num_hashes,
        d_sel,
        buckets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::Rng;

    fn random_features(rng: &mut ChaCha8Rng, m: usize, d: usize) -> Array2<f64> {
        Array2::from_shape_fn((m, d), |_| rng.gen_range(-1.0..1.0))
    }

    fn ids(m: usize) -> Vec<String> {
        (0..m).map(|i| format!("v{i:03}")).collect()
    }

    #[test]
    fn family_is_deterministic_and_linear_at_zero() {
        let a = make_family(5, 8, 12).unwrap();
        let b = make_family(5, 8, 12).unwrap();
        assert_eq!(a.projections, b.projections);
        let zero = Array1::zeros(8);
        let projected = a.project(&zero.view()).unwrap();
        assert!(projected.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn family_shape() {
        let f = make_family(50, 64, 0).unwrap();
        assert_eq!(f.projections.dim(), (50, 64));
    }

    #[test]
    fn bucket_sizes_match_class_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let features = random_features(&mut rng, 30, 6);
        let labels: Vec<usize> = (0..30).map(|i| i % 6).collect();
        let index = build_index(&features.view(), &labels, &ids(30), 10, 5).unwrap();
        for c in 0..6 {
            assert_eq!(index.bucket_size(c), 5);
        }
    }

    #[test]
    fn one_per_class_builds_singleton_buckets() {
        let features = array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let labels = vec![0, 1, 2];
        let index = build_index(&features.view(), &labels, &ids(3), 4, 0).unwrap();
        assert_eq!(index.num_classes(), 3);
        for c in 0..3 {
            assert_eq!(index.bucket_size(c), 1);
        }
    }

    #[test]
    fn empty_class_is_rejected() {
        let features = array![[1.0, 0.0], [0.0, 1.0]];
        let labels = vec![0, 2];
        let err = build_index(&features.view(), &labels, &ids(2), 4, 0).unwrap_err();
        assert!(err.to_string().contains("class 1"));
    }

    #[test]
    fn exact_match_has_zero_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let features = random_features(&mut rng, 12, 5);
        let labels: Vec<usize> = (0..12).map(|i| i % 3).collect();
        let index = build_index(&features.view(), &labels, &ids(12), 8, 3).unwrap();
        let query = features.row(7);
        let neighbors = index.query_knn(&query, 2).unwrap();
        let hit = neighbors
            .iter()
            .find(|n| n.video_id == "v007")
            .expect("stored vector retrieved");
        assert!(hit.distance < 1e-9);
        assert_eq!(hit.label, 7 % 3);
    }

    #[test]
    fn k_clips_to_bucket_size() {
        let features = array![[1.0, 0.0], [0.0, 1.0]];
        let labels = vec![0, 1];
        let index = build_index(&features.view(), &labels, &ids(2), 4, 0).unwrap();
        let neighbors = index.query_knn(&features.row(0), 5).unwrap();
        assert_eq!(neighbors.len(), 2); // one per singleton bucket
    }

    #[test]
    fn per_bucket_results_match_exhaustive_sort() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = 40;
        let features = random_features(&mut rng, m, 7);
        let labels: Vec<usize> = (0..m).map(|i| i % 4).collect();
        let index = build_index(&features.view(), &labels, &ids(m), 12, 77).unwrap();
        let query = Array1::from_shape_fn(7, |_| rng.gen_range(-1.0..1.0));
        let k = 3;
        let got = index.query_knn(&query.view(), k).unwrap();
        for c in 0..4 {
            let family = make_family(12, 7, 77u64.wrapping_add(c as u64)).unwrap();
            let gq = family.project(&query.view()).unwrap();
            let mut all: Vec<(f64, String)> = (0..m)
                .filter(|&i| labels[i] == c)
                .map(|i| {
                    let gx = family.project(&features.row(i)).unwrap();
                    let d = (&gx - &gq).mapv(|v| v * v).sum().sqrt();
                    (d, format!("v{i:03}"))
                })
                .collect();
            all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let expected: Vec<&(f64, String)> = all.iter().take(k).collect();
            let bucket: Vec<&Neighbor> = got.iter().filter(|n| n.label == c).collect();
            assert_eq!(bucket.len(), expected.len());
            for (n, (d, id)) in bucket.iter().zip(expected) {
                assert_eq!(&n.video_id, id);
                assert!((n.distance - d).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn unanimous_vote_is_one_hot() {
        let candidates = vec![
            Neighbor { video_id: "a".into(), label: 3, distance: 0.5 },
            Neighbor { video_id: "b".into(), label: 3, distance: 1.5 },
        ];
        let vote = soft_vote(&candidates, 5).unwrap();
        assert_eq!(vote.predicted, 3);
        assert!((vote.confidences[3] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn equal_distances_tie_to_lower_class() {
        let candidates = vec![
            Neighbor { video_id: "a".into(), label: 0, distance: 2.0 },
            Neighbor { video_id: "b".into(), label: 1, distance: 2.0 },
        ];
        let vote = soft_vote(&candidates, 2).unwrap();
        assert!((vote.confidences[0] - 0.5).abs() < 1e-12);
        assert!((vote.confidences[1] - 0.5).abs() < 1e-12);
        assert_eq!(vote.predicted, 0);
    }

    #[test]
    fn weight_formula_hand_check() {
        let candidates = vec![
            Neighbor { video_id: "a".into(), label: 0, distance: 1.0 },
            Neighbor { video_id: "b".into(), label: 1, distance: 3.0 },
        ];
        let vote = soft_vote(&candidates, 2).unwrap();
        let w0 = 1.0 / (1.0 + VOTE_EPSILON);
        let w1 = 1.0 / (3.0 + VOTE_EPSILON);
        assert!((vote.confidences[0] - w0 / (w0 + w1)).abs() < 1e-12);
        assert!((vote.confidences[1] - w1 / (w0 + w1)).abs() < 1e-12);
        assert_eq!(vote.predicted, 0);
    }

    #[test]
    fn confidences_sum_to_one_and_classify_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = 20;
        let features = random_features(&mut rng, m, 6);
        let labels: Vec<usize> = (0..m).map(|i| i % 5).collect();
        let index = build_index(&features.view(), &labels, &ids(m), 10, 11).unwrap();
        let query = Array1::from_shape_fn(6, |_| rng.gen_range(-1.0..1.0));
        let a = index.classify(&query.view(), 3).unwrap();
        let b = index.classify(&query.view(), 3).unwrap();
        assert_eq!(a, b);
        let sum: f64 = a.confidences.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
        assert!(a.confidences.iter().all(|&c| c >= 0.0));
    }

    #[test]
    fn index_file_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let m = 15;
        let features = random_features(&mut rng, m, 4);
        let labels: Vec<usize> = (0..m).map(|i| i % 3).collect();
        let index = build_index(&features.view(), &labels, &ids(m), 7, 101).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("index.lsfi");
        save_index(&path, &index).unwrap();
        let loaded = load_index(&path).unwrap();
        let query = Array1::from_shape_fn(4, |_| rng.gen_range(-1.0..1.0));
        assert_eq!(
            index.query_knn(&query.view(), 4).unwrap(),
            loaded.query_knn(&query.view(), 4).unwrap()
        );
    }
}
