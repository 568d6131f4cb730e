//! Per-video feature pipeline: average pooling of trajectory codes,
//! Fisher-score ranking across training videos, and top-q% component
//! selection.
//!
//! Selector file: magic "LSFS", version u16, D_code u32, q f64, score
//! vector (f64), selected count u32, selected indexes (u32), all
//! little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use byteorder::{LittleEndian, WriteBytesExt};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::io_util;

pub const SELECTOR_MAGIC: &[u8; 4] = b"LSFS";
pub const SELECTOR_VERSION: u16 = 1;

pub const DEFAULT_SELECT_PERCENT: f64 = 50.0;

/// Guard added to the Fisher denominator so components that are constant
/// within every class stay finite while perfectly separating components
/// still rank at the top.
pub const FISHER_EPSILON: f64 = 1e-12;

/// One pooled per-video feature vector.
#[derive(Debug, Clone)]
pub struct PooledFeature {
    pub video_id: String,
    pub values: Array1<f64>,
}

/// Per-class first and second moments behind the Fisher scores.
/// Standard deviations use the population convention (divide by n_c).
#[derive(Debug, Clone)]
pub struct FisherStats {
    /// C x D class means.
    pub class_means: Array2<f64>,
    /// C x D class standard deviations (population).
    pub class_stds: Array2<f64>,
    pub global_mean: Array1<f64>,
    pub class_sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSelector {
    pub fisher_scores: Array1<f64>,
    /// Sorted (ascending) retained component indexes, length ceil(q*D/100).
    pub selected: Vec<usize>,
    pub q: f64,
}

/// Component-wise mean over all trajectory codes of one video.
pub fn average_pool(codes: &ArrayView2<f64>) -> Result<Array1<f64>> {
    if codes.nrows() == 0 {
        return Err(Error::Shape("cannot pool an empty code matrix".into()));
    }
    Ok(codes.mean_axis(Axis(0)).expect("nonempty"))
}

/// Fisher score per component:
/// f_i = sum_c n_c (mu_c_i - mu_i)^2 / (sum_c n_c sigma_c_i^2 + eps).
pub fn fisher_scores(
    features: &ArrayView2<f64>,
    labels: &[usize],
) -> Result<(FisherStats, Array1<f64>)> {
    let m = features.nrows();
    let d = features.ncols();
    if m < 2 {
        return Err(Error::InvalidArgument(
            "fisher scores need at least 2 samples".into(),
        ));
    }
    if labels.len() != m {
        return Err(Error::Shape(format!("{} labels for {} rows", labels.len(), m)));
    }
    let c = labels.iter().max().map(|&l| l + 1).unwrap_or(0);
    let mut sizes = vec![0usize; c];
    for &l in labels {
        sizes[l] += 1;
    }
    if sizes.iter().any(|&n| n == 0) {
        return Err(Error::InvalidArgument(
            "every class id below the maximum must be present".into(),
        ));
    }

    let mut class_sums = Array2::<f64>::zeros((c, d));
    for (row, &l) in features.rows().into_iter().zip(labels) {
        let mut target = class_sums.row_mut(l);
        target += &row;
    }
    let mut class_means = class_sums;
    for (mut row, &n) in class_means.rows_mut().into_iter().zip(&sizes) {
        row.mapv_inplace(|v| v / n as f64);
    }

    let mut class_sq = Array2::<f64>::zeros((c, d));
    for (row, &l) in features.rows().into_iter().zip(labels) {
        let mean = class_means.row(l).to_owned();
        let diff = &row - &mean;
        let mut target = class_sq.row_mut(l);
        target += &diff.mapv(|v| v * v);
    }
    let mut class_stds = class_sq;
    for (mut row, &n) in class_stds.rows_mut().into_iter().zip(&sizes) {
        row.mapv_inplace(|v| (v / n as f64).sqrt());
    }

    let global_mean = features.mean_axis(Axis(0)).expect("m >= 2");

    let mut scores = Array1::<f64>::zeros(d);
    for i in 0..d {
        let mut numerator = 0.0;
        let mut denominator = 0.0;
        for cl in 0..c {
            let n = sizes[cl] as f64;
            let dm = class_means[[cl, i]] - global_mean[i];
            numerator += n * dm * dm;
            let s = class_stds[[cl, i]];
            denominator += n * s * s;
        }
        scores[i] = numerator / (denominator + FISHER_EPSILON);
    }

    if c == 1 {
        eprintln!("warning: all labels identical; Fisher scores are all zero");
    }

    Ok((
        FisherStats {
            class_means,
            class_stds,
            global_mean,
            class_sizes: sizes,
        },
        scores,
    ))
}

/// Retain the ceil(q*D/100) highest-scoring components; ties break toward
/// the lower component index.
pub fn fit_selector(scores: &ArrayView1<f64>, q: f64) -> Result<FeatureSelector> {
    if !(q > 0.0 && q <= 100.0) {
        return Err(Error::InvalidArgument(format!("q must be in (0, 100], got {q}")));
    }
    let d = scores.len();
    let keep = ((q * d as f64) / 100.0).ceil() as usize;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut selected: Vec<usize> = order.into_iter().take(keep).collect();
    selected.sort_unstable();
    Ok(FeatureSelector {
        fisher_scores: scores.to_owned(),
        selected,
        q,
    })
}

/// Gather the retained components of one pooled feature.
pub fn apply_selection(selector: &FeatureSelector, feature: &ArrayView1<f64>) -> Result<Array1<f64>> {
    if feature.len() != selector.fisher_scores.len() {
        return Err(Error::Shape(format!(
            "feature width {} does not match selector width {}",
            feature.len(),
            selector.fisher_scores.len()
        )));
    }
    Ok(selector.selected.iter().map(|&i| feature[i]).collect())
}

/// Apply the selection row-wise to an M x D feature matrix.
pub fn apply_selection_matrix(
    selector: &FeatureSelector,
    features: &ArrayView2<f64>,
) -> Result<Array2<f64>> {
    if features.ncols() != selector.fisher_scores.len() {
        return Err(Error::Shape(format!(
            "feature width {} does not match selector width {}",
            features.ncols(),
            selector.fisher_scores.len()
        )));
    }
    let mut out = Array2::<f64>::zeros((features.nrows(), selector.selected.len()));
    for (mut row_out, row_in) in out.rows_mut().into_iter().zip(features.rows()) {
        for (slot, &i) in row_out.iter_mut().zip(&selector.selected) {
            *slot = row_in[i];
        }
    }
    Ok(out)
}

pub fn save_selector(path: &Path, selector: &FeatureSelector) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(SELECTOR_MAGIC).map_err(|e| Error::io(path, e))?;
    w.write_u16::<LittleEndian>(SELECTOR_VERSION)
        .map_err(|e| Error::io(path, e))?;
    w.write_u32::<LittleEndian>(selector.fisher_scores.len() as u32)
        .map_err(|e| Error::io(path, e))?;
    w.write_f64::<LittleEndian>(selector.q)
        .map_err(|e| Error::io(path, e))?;
    io_util::write_f64_slice(&mut w, selector.fisher_scores.as_slice().unwrap(), path)?;
    w.write_u32::<LittleEndian>(selector.selected.len() as u32)
        .map_err(|e| Error::io(path, e))?;
    for &i in &selector.selected {
        w.write_u32::<LittleEndian>(i as u32)
            .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_selector(path: &Path) -> Result<FeatureSelector> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    io_util::check_magic(&mut r, SELECTOR_MAGIC, path)?;
    let version = io_util::read_u16(&mut r, path)?;
    if version != SELECTOR_VERSION {
        return Err(Error::format(path, format!("unsupported version {version}")));
    }
    let d = io_util::read_u32(&mut r, path)? as usize;
    let q = {
        let v = io_util::read_f64_vec(&mut r, 1, path)?;
        v[0]
    };
    let scores = Array1::from_vec(io_util::read_f64_vec(&mut r, d, path)?);
    let count = io_util::read_u32(&mut r, path)? as usize;
    let mut selected = Vec::with_capacity(count);
    for _ in 0..count {
        let i = io_util::read_u32(&mut r, path)? as usize;
        if i >= d {
            return Err(Error::format(path, format!("selected index {i} out of range")));
        }
        selected.push(i);
    }
    Ok(FeatureSelector {
        fisher_scores: scores,
        selected,
        q,
    })
}

/// CSV export of (component, score, selected flag) for inspection.
pub fn export_selector_csv(path: &Path, selector: &FeatureSelector) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    (|| -> std::io::Result<()> {
        writeln!(w, "component,score,selected")?;
        for (i, &score) in selector.fisher_scores.iter().enumerate() {
            let flag = if selector.selected.contains(&i) { 1 } else { 0 };
            writeln!(w, "{i},{score},{flag}")?;
        }
        w.flush()
    })()
    .map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pool_single_row_is_identity() {
        let codes = array![[1.0, -2.0, 3.5]];
        let pooled = average_pool(&codes.view()).unwrap();
        assert_eq!(pooled, array![1.0, -2.0, 3.5]);
    }

    #[test]
    fn pool_symmetric_rows() {
        let codes = array![[0.0, 2.0], [2.0, 0.0]];
        let pooled = average_pool(&codes.view()).unwrap();
        assert_eq!(pooled, array![1.0, 1.0]);
    }

    #[test]
    fn pool_matches_compensated_summation() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let codes = Array2::from_shape_fn((500, 16), |_| rng.gen_range(-100.0..100.0));
        let pooled = average_pool(&codes.view()).unwrap();
        for j in 0..16 {
            // Kahan summation oracle
            let mut sum = 0.0f64;
            let mut comp = 0.0f64;
            for i in 0..500 {
                let y = codes[[i, j]] - comp;
                let t = sum + y;
                comp = (t - sum) - y;
                sum = t;
            }
            let expected = sum / 500.0;
            assert!((pooled[j] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_component_scores_zero() {
        let features = array![[1.0, 0.0], [1.0, 1.0], [1.0, 2.0], [1.0, 3.0]];
        let labels = vec![0, 0, 1, 1];
        let (_, scores) = fisher_scores(&features.view(), &labels).unwrap();
        assert_eq!(scores[0], 0.0);
    }

    #[test]
    fn perfectly_separating_component_hits_guard() {
        let features = array![[0.0], [0.0], [1.0], [1.0]];
        let labels = vec![0, 0, 1, 1];
        let (_, scores) = fisher_scores(&features.view(), &labels).unwrap();
        // numerator 2*(0.5)^2*2 = 1, denominator = eps
        assert!((scores[0] - 1.0 / FISHER_EPSILON).abs() / (1.0 / FISHER_EPSILON) < 1e-9);
    }

    /// Independent two-pass evaluation of the score formula.
    pub fn fisher_brute_force(features: &ArrayView2<f64>, labels: &[usize]) -> Vec<f64> {
        let d = features.ncols();
        let c = labels.iter().max().unwrap() + 1;
        let mut out = Vec::with_capacity(d);
        for i in 0..d {
            let column: Vec<f64> = features.column(i).to_vec();
            let global: f64 = column.iter().sum::<f64>() / column.len() as f64;
            let mut num = 0.0;
            let mut den = 0.0;
            for cl in 0..c {
                let members: Vec<f64> = column
                    .iter()
                    .zip(labels)
                    .filter(|(_, &l)| l == cl)
                    .map(|(&v, _)| v)
                    .collect();
                let n = members.len() as f64;
                let mean = members.iter().sum::<f64>() / n;
                let var = members.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                num += n * (mean - global).powi(2);
                den += n * var;
            }
            out.push(num / (den + FISHER_EPSILON));
        }
        out
    }

    #[test]
    fn scores_match_brute_force_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let m = 60;
        let d = 12;
        let features = Array2::from_shape_fn((m, d), |_| rng.gen_range(-2.0..2.0));
        let labels: Vec<usize> = (0..m).map(|i| i % 6).collect();
        let (stats, scores) = fisher_scores(&features.view(), &labels).unwrap();
        assert_eq!(stats.class_sizes.iter().sum::<usize>(), m);
        let oracle = fisher_brute_force(&features.view(), &labels);
        for (a, b) in scores.iter().zip(&oracle) {
            assert!((a - b).abs() / b.abs().max(1e-300) < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn selector_counts_and_tie_rule() {
        let scores = array![3.0, 1.0, 2.0, 2.0];
        let sel = fit_selector(&scores.view(), 50.0).unwrap();
        assert_eq!(sel.selected, vec![0, 2]);

        let scores128 = Array1::from_vec((0..128).map(|i| i as f64).collect());
        let sel = fit_selector(&scores128.view(), 50.0).unwrap();
        assert_eq!(sel.selected.len(), 64);

        let sel = fit_selector(&scores.view(), 100.0).unwrap();
        assert_eq!(sel.selected, vec![0, 1, 2, 3]);
    }

    #[test]
    fn selection_gathers_in_index_order() {
        let selector = FeatureSelector {
            fisher_scores: Array1::zeros(4),
            selected: vec![0, 2],
            q: 50.0,
        };
        let out = apply_selection(&selector, &array![5.0, 6.0, 7.0, 8.0].view()).unwrap();
        assert_eq!(out, array![5.0, 7.0]);
    }

    #[test]
    fn selection_matches_index_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(91);
        let scores = Array1::from_shape_fn(32, |_| rng.gen_range(0.0..1.0));
        let selector = fit_selector(&scores.view(), 37.0).unwrap();
        let feature = Array1::from_shape_fn(32, |_| rng.gen_range(-5.0..5.0));
        let out = apply_selection(&selector, &feature.view()).unwrap();
        for (k, &i) in selector.selected.iter().enumerate() {
            assert_eq!(out[k], feature[i]);
        }
    }

    #[test]
    fn selector_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sel.lsfs");
        let scores = array![0.5, 0.25, 0.75, 0.1];
        let selector = fit_selector(&scores.view(), 50.0).unwrap();
        save_selector(&path, &selector).unwrap();
        let loaded = load_selector(&path).unwrap();
        assert_eq!(selector, loaded);
    }

    proptest! {
        #[test]
        fn selected_count_is_ceiling(d in 1usize..200, q in 1u32..=100) {
            let scores = Array1::from_shape_fn(d, |i| (i as f64 * 0.37).sin());
            let sel = fit_selector(&scores.view(), q as f64).unwrap();
            let expected = ((q as f64 * d as f64) / 100.0).ceil() as usize;
            prop_assert_eq!(sel.selected.len(), expected);
        }

        #[test]
        fn scores_invariant_under_permutation_and_scaling(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = 24;
            let features = Array2::from_shape_fn((m, 5), |_| rng.gen_range(-1.0..1.0));
            let labels: Vec<usize> = (0..m).map(|i| i % 3).collect();
            let (_, base) = fisher_scores(&features.view(), &labels).unwrap();

            // permute sample order
            let mut order: Vec<usize> = (0..m).collect();
            use rand::seq::SliceRandom;
            order.shuffle(&mut rng);
            let permuted = Array2::from_shape_fn((m, 5), |(i, j)| features[[order[i], j]]);
            let plabels: Vec<usize> = order.iter().map(|&i| labels[i]).collect();
            let (_, perm) = fisher_scores(&permuted.view(), &plabels).unwrap();
            for (a, b) in base.iter().zip(perm.iter()) {
                prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
            }

            // scale one component by k != 0; its score is unchanged
            let k = 3.5;
            let mut scaled = features.clone();
            scaled.column_mut(2).mapv_inplace(|v| v * k);
            let (_, s) = fisher_scores(&scaled.view(), &labels).unwrap();
            prop_assert!((s[2] - base[2]).abs() <= 1e-9 * base[2].abs().max(1.0));
        }
    }
}
