//! Dataset loading (libsvm and CSV), train/test splitting, feature
//! standardization, and synthetic logistic-regression data.
//!
//! Features are densified on load and stored row-major; labels live in
//! `{-1, +1}`. Raw-file SHA-256 checksums and any label remapping are
//! recorded in [`DatasetMeta`] so runs can pin their data provenance.

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Result, SteinError};
use crate::rng::{streams, RngStream};
use crate::targets::sigmoid;

/// Provenance and preprocessing record attached to a [`Dataset`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DatasetMeta {
    /// Path the data was loaded from, if any.
    pub source: Option<String>,
    /// Hex SHA-256 of the raw file bytes, if loaded from disk.
    pub sha256: Option<String>,
    /// Description of the label remapping applied on load, if any.
    pub label_mapping: Option<String>,
    /// Whether features have been standardized.
    pub standardized: bool,
    /// True generating weights for synthetic data.
    pub true_weights: Option<Vec<f64>>,
    /// Seed used to generate synthetic data.
    pub seed: Option<u64>,
}

/// A dense binary-classification dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<f64>,
    n: usize,
    d: usize,
    pub feature_names: Option<Vec<String>>,
    pub meta: DatasetMeta,
}

impl Dataset {
    /// `features` is `n x d` row-major with `n = labels.len()`.
    pub fn new(features: Vec<f64>, labels: Vec<f64>, d: usize) -> Result<Self> {
        let n = labels.len();
        if n == 0 || d == 0 {
            return Err(SteinError::invalid(
                "dataset: need at least one row and one feature",
            ));
        }
        if features.len() != n * d {
            return Err(SteinError::invalid(format!(
                "dataset: feature buffer holds {} values, expected {n} x {d}",
                features.len()
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(SteinError::invalid("dataset: non-finite feature value"));
        }
        for (i, &y) in labels.iter().enumerate() {
            if y != 1.0 && y != -1.0 {
                return Err(SteinError::invalid(format!(
                    "dataset: label {i} must be -1 or +1, got {y}"
                )));
            }
        }
        Ok(Dataset {
            features,
            labels,
            n,
            d,
            feature_names: None,
            meta: DatasetMeta::default(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.features[k * self.d..(k + 1) * self.d]
    }

    fn subset(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.d);
        let mut labels = Vec::with_capacity(indices.len());
        for &k in indices {
            features.extend_from_slice(self.row(k));
            labels.push(self.labels[k]);
        }
        Dataset {
            features,
            labels,
            n: indices.len(),
            d: self.d,
            feature_names: self.feature_names.clone(),
            meta: self.meta.clone(),
        }
    }
}

/// Hex SHA-256 of a file's bytes.
pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(sha256_hex(&bytes))
}

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Decide how raw labels map onto `{-1, +1}`. Accepts label sets that are
/// subsets of `{-1, +1}` (identity), `{0, 1}` (0 -> -1), or `{1, 2}`
/// (1 -> -1, 2 -> +1), checked in that order.
fn resolve_label_mapping(raw: &[f64]) -> Result<(Vec<f64>, Option<String>)> {
    let ok = |v: f64, set: [f64; 2]| v == set[0] || v == set[1];
    if raw.iter().all(|&v| ok(v, [-1.0, 1.0])) {
        return Ok((raw.to_vec(), None));
    }
    if raw.iter().all(|&v| ok(v, [0.0, 1.0])) {
        let mapped = raw.iter().map(|&v| if v == 0.0 { -1.0 } else { 1.0 }).collect();
        return Ok((mapped, Some("{0,1} -> {-1,+1}".into())));
    }
    if raw.iter().all(|&v| ok(v, [1.0, 2.0])) {
        let mapped = raw.iter().map(|&v| if v == 1.0 { -1.0 } else { 1.0 }).collect();
        return Ok((mapped, Some("{1,2} -> {-1,+1}".into())));
    }
    let mut observed: Vec<f64> = raw.to_vec();
    observed.sort_by(f64::total_cmp);
    observed.dedup();
    Err(SteinError::invalid(format!(
        "unrecognized label set {observed:?}; expected labels in {{-1,+1}}, {{0,1}} or {{1,2}}"
    )))
}

/// Load a libsvm-format file: one `label index:value ...` line per
/// observation, indices 1-based. The feature dimension is the largest index
/// seen; missing entries densify to zero.
pub fn load_libsvm(path: &Path) -> Result<Dataset> {
    let bytes = std::fs::read(path)?;
    let text = String::from_utf8(bytes.clone()).map_err(|e| SteinError::Parse {
        line: 0,
        message: format!("file is not utf-8: {e}"),
    })?;

    let mut raw_labels = Vec::new();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut d = 0usize;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label_tok = tokens.next().unwrap();
        let label: f64 = label_tok.parse().map_err(|_| SteinError::Parse {
            line: line_no,
            message: format!("bad label '{label_tok}'"),
        })?;
        let mut entries = Vec::new();
        for tok in tokens {
            let (idx_str, val_str) = tok.split_once(':').ok_or_else(|| SteinError::Parse {
                line: line_no,
                message: format!("expected index:value, got '{tok}'"),
            })?;
            let index: usize = idx_str.parse().map_err(|_| SteinError::Parse {
                line: line_no,
                message: format!("bad feature index '{idx_str}'"),
            })?;
            if index == 0 {
                return Err(SteinError::Parse {
                    line: line_no,
                    message: "feature indices are 1-based; got 0".into(),
                });
            }
            let value: f64 = val_str.parse().map_err(|_| SteinError::Parse {
                line: line_no,
                message: format!("bad feature value '{val_str}'"),
            })?;
            if !value.is_finite() {
                return Err(SteinError::Parse {
                    line: line_no,
                    message: format!("non-finite feature value '{val_str}'"),
                });
            }
            if entries.iter().any(|&(i, _)| i == index) {
                return Err(SteinError::Parse {
                    line: line_no,
                    message: format!("duplicate feature index {index}"),
                });
            }
            d = d.max(index);
            entries.push((index, value));
        }
        raw_labels.push(label);
        rows.push(entries);
    }
    if rows.is_empty() {
        return Err(SteinError::invalid(format!(
            "libsvm file {} contains no data rows",
            path.display()
        )));
    }
    if d == 0 {
        return Err(SteinError::invalid(format!(
            "libsvm file {} has no feature entries",
            path.display()
        )));
    }
    let (labels, mapping) = resolve_label_mapping(&raw_labels)?;
    let mut features = vec![0.0; rows.len() * d];
    for (r, entries) in rows.iter().enumerate() {
        for &(index, value) in entries {
            features[r * d + (index - 1)] = value;
        }
    }
    let mut ds = Dataset::new(features, labels, d)?;
    ds.meta.source = Some(path.display().to_string());
    ds.meta.sha256 = Some(sha256_hex(&bytes));
    ds.meta.label_mapping = mapping;
    Ok(ds)
}

/// Write a dataset in libsvm format. Zero entries are omitted (they densify
/// back to zero); values carry 17 significant digits so a load round-trips
/// every `f64` exactly.
pub fn write_libsvm(dataset: &Dataset, path: &Path) -> Result<()> {
    use std::io::Write;
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    for k in 0..dataset.n() {
        write!(w, "{:+}", dataset.labels()[k] as i64)?;
        for (c, &v) in dataset.row(k).iter().enumerate() {
            if v != 0.0 {
                write!(w, " {}:{:.16e}", c + 1, v)?;
            }
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Load a CSV with a header row; the column named `label` holds the labels
/// (same accepted label sets as libsvm) and every other column is a feature,
/// kept in header order and recorded in `feature_names`.
pub fn load_csv(path: &Path) -> Result<Dataset> {
    let bytes = std::fs::read(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(bytes.as_slice());
    let headers = reader
        .headers()
        .map_err(|e| SteinError::Parse {
            line: 1,
            message: format!("bad header row: {e}"),
        })?
        .clone();
    let label_col = headers
        .iter()
        .position(|h| h == "label")
        .ok_or_else(|| SteinError::Parse {
            line: 1,
            message: "no column named 'label'".into(),
        })?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_col)
        .map(|(_, h)| h.to_string())
        .collect();
    let d = feature_names.len();
    if d == 0 {
        return Err(SteinError::invalid(format!(
            "csv file {} has a label column but no feature columns",
            path.display()
        )));
    }

    let mut features = Vec::new();
    let mut raw_labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| SteinError::Parse {
            line: e
                .position()
                .map(|p| p.line() as usize)
                .unwrap_or(0),
            message: format!("bad csv record: {e}"),
        })?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(0);
        if record.len() != headers.len() {
            return Err(SteinError::Parse {
                line,
                message: format!(
                    "expected {} fields, got {}",
                    headers.len(),
                    record.len()
                ),
            });
        }
        for (i, field) in record.iter().enumerate() {
            let value: f64 = field.trim().parse().map_err(|_| SteinError::Parse {
                line,
                message: format!("bad numeric field '{field}' in column '{}'", &headers[i]),
            })?;
            if i == label_col {
                raw_labels.push(value);
            } else {
                if !value.is_finite() {
                    return Err(SteinError::Parse {
                        line,
                        message: format!("non-finite feature '{field}'"),
                    });
                }
                features.push(value);
            }
        }
    }
    if raw_labels.is_empty() {
        return Err(SteinError::invalid(format!(
            "csv file {} contains no data rows",
            path.display()
        )));
    }
    let (labels, mapping) = resolve_label_mapping(&raw_labels)?;
    let mut ds = Dataset::new(features, labels, d)?;
    ds.feature_names = Some(feature_names);
    ds.meta.source = Some(path.display().to_string());
    ds.meta.sha256 = Some(sha256_hex(&bytes));
    ds.meta.label_mapping = mapping;
    Ok(ds)
}

/// Seeded uniform shuffle, then split: the first `N - floor(N * fraction)`
/// shuffled rows train, the rest test. Both splits must be nonempty.
pub fn train_test_split(
    dataset: &Dataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(SteinError::invalid(format!(
            "split: test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let n = dataset.n();
    let n_test = (n as f64 * test_fraction).floor() as usize;
    let n_train = n - n_test;
    if n_test == 0 || n_train == 0 {
        return Err(SteinError::invalid(format!(
            "split: fraction {test_fraction} of {n} rows gives an empty split \
             (train {n_train}, test {n_test})"
        )));
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = RngStream::new(seed, streams::SPLIT);
    use rand::seq::SliceRandom;
    indices.shuffle(&mut rng);
    Ok((
        dataset.subset(&indices[..n_train]),
        dataset.subset(&indices[n_train..]),
    ))
}

/// Per-feature affine transform `x -> (x - mean) / scale` fitted on a
/// training split.
#[derive(Clone, Debug, PartialEq)]
pub struct StandardizeParams {
    pub means: Vec<f64>,
    /// Population standard deviations; 1.0 recorded for zero-variance
    /// features (shift only).
    pub scales: Vec<f64>,
}

impl StandardizeParams {
    pub fn transform_row(&self, row: &mut [f64]) {
        for (c, v) in row.iter_mut().enumerate() {
            *v = (*v - self.means[c]) / self.scales[c];
        }
    }

    pub fn inverse_row(&self, row: &mut [f64]) {
        for (c, v) in row.iter_mut().enumerate() {
            *v = *v * self.scales[c] + self.means[c];
        }
    }
}

/// Standardize features to mean 0 / standard deviation 1, with moments
/// computed on the training split only and applied to both splits.
pub fn standardize(train: &Dataset, test: &Dataset) -> Result<(Dataset, Dataset, StandardizeParams)> {
    if train.d() != test.d() {
        return Err(SteinError::invalid(format!(
            "standardize: train has {} features, test has {}",
            train.d(),
            test.d()
        )));
    }
    let (n, d) = (train.n(), train.d());
    let mut means = vec![0.0; d];
    for row in train.features().chunks_exact(d) {
        for c in 0..d {
            means[c] += row[c];
        }
    }
    for m in means.iter_mut() {
        *m /= n as f64;
    }
    let mut scales = vec![0.0; d];
    for row in train.features().chunks_exact(d) {
        for c in 0..d {
            let z = row[c] - means[c];
            scales[c] += z * z;
        }
    }
    for s in scales.iter_mut() {
        *s = (*s / n as f64).sqrt();
        if !(*s > 0.0) {
            *s = 1.0;
        }
    }
    let params = StandardizeParams { means, scales };
    let apply = |ds: &Dataset| -> Result<Dataset> {
        let mut features = ds.features().to_vec();
        for row in features.chunks_exact_mut(d) {
            params.transform_row(row);
        }
        let mut out = Dataset::new(features, ds.labels().to_vec(), d)?;
        out.feature_names = ds.feature_names.clone();
        out.meta = ds.meta.clone();
        out.meta.standardized = true;
        Ok(out)
    };
    Ok((apply(train)?, apply(test)?, params))
}

/// Synthetic logistic-regression data: features are standard normal, labels
/// follow `P(y = +1 | x) = sigmoid(w* . x)`, then flip with probability
/// `noise`. The generating weights and seed are recorded in the metadata.
pub fn synth_logistic(
    n: usize,
    w_star: &[f64],
    noise: f64,
    seed: u64,
) -> Result<Dataset> {
    if n < 10 {
        return Err(SteinError::invalid(format!(
            "synthetic data: need at least 10 rows, got {n}"
        )));
    }
    let d = w_star.len();
    if d == 0 {
        return Err(SteinError::invalid("synthetic data: empty weight vector"));
    }
    if w_star.iter().any(|w| !w.is_finite()) {
        return Err(SteinError::invalid("synthetic data: non-finite weights"));
    }
    if !(0.0..0.5).contains(&noise) {
        return Err(SteinError::invalid(format!(
            "synthetic data: label noise must lie in [0, 0.5), got {noise}"
        )));
    }
    let mut rng = RngStream::new(seed, streams::SYNTH);
    let mut features = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let mut logit = 0.0;
        for &w in w_star {
            let x = rng.standard_normal();
            features.push(x);
            logit += w * x;
        }
        let mut y = if rng.uniform() < sigmoid(logit) { 1.0 } else { -1.0 };
        if noise > 0.0 && rng.uniform() < noise {
            y = -y;
        }
        labels.push(y);
    }
    let mut ds = Dataset::new(features, labels, d)?;
    ds.meta.true_weights = Some(w_star.to_vec());
    ds.meta.seed = Some(seed);
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::io::Write;

    fn temp_file(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn libsvm_basic_line() {
        let f = temp_file("+1 1:0.5 3:2.0\n-1 2:1.25\n");
        let ds = load_libsvm(f.path()).unwrap();
        assert_eq!(ds.n(), 2);
        assert_eq!(ds.d(), 3);
        assert_eq!(ds.row(0), &[0.5, 0.0, 2.0]);
        assert_eq!(ds.row(1), &[0.0, 1.25, 0.0]);
        assert_eq!(ds.labels(), &[1.0, -1.0]);
        assert!(ds.meta.label_mapping.is_none());
        assert!(ds.meta.sha256.is_some());
    }

    #[test]
    fn libsvm_label_mappings() {
        let f = temp_file("2 1:1.0\n1 1:2.0\n");
        let ds = load_libsvm(f.path()).unwrap();
        assert_eq!(ds.labels(), &[1.0, -1.0]);
        assert_eq!(ds.meta.label_mapping.as_deref(), Some("{1,2} -> {-1,+1}"));

        let f = temp_file("0 1:1.0\n1 1:2.0\n");
        let ds = load_libsvm(f.path()).unwrap();
        assert_eq!(ds.labels(), &[-1.0, 1.0]);
        assert_eq!(ds.meta.label_mapping.as_deref(), Some("{0,1} -> {-1,+1}"));
    }

    #[test]
    fn libsvm_parse_errors_carry_line_numbers() {
        let f = temp_file("+1 1:abc\n");
        match load_libsvm(f.path()) {
            Err(SteinError::Parse { line, message }) => {
                assert_eq!(line, 1);
                assert!(message.contains("abc"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        let f = temp_file("+1 1:0.5\n-1 0:1.0\n");
        match load_libsvm(f.path()) {
            Err(SteinError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        let f = temp_file("+1 1:0.5 1:0.7\n");
        assert!(matches!(
            load_libsvm(f.path()),
            Err(SteinError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn libsvm_rejects_unknown_label_sets() {
        let f = temp_file("3 1:1.0\n1 1:2.0\n");
        let err = load_libsvm(f.path()).unwrap_err();
        assert!(err.to_string().contains("3"), "{err}");
    }

    #[test]
    fn libsvm_round_trip_is_exact() {
        let values = vec![
            0.1,
            -1.0 / 3.0,
            1e-17,
            12345.678_901_234_5,
            0.0,
            -2.5e-300,
            std::f64::consts::PI,
            -7.0,
        ];
        let ds = Dataset::new(values.clone(), vec![1.0, -1.0, 1.0, -1.0], 2).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        write_libsvm(&ds, f.path()).unwrap();
        let back = load_libsvm(f.path()).unwrap();
        assert_eq!(back.n(), ds.n());
        assert_eq!(back.d(), ds.d());
        assert_eq!(back.features(), ds.features());
        assert_eq!(back.labels(), ds.labels());
    }

    #[test]
    fn csv_loading() {
        let f = temp_file("f1,label,f2\n0.5,1,2.0\n-0.25,-1,0.125\n");
        let ds = load_csv(f.path()).unwrap();
        assert_eq!(ds.n(), 2);
        assert_eq!(ds.d(), 2);
        assert_eq!(ds.row(0), &[0.5, 2.0]);
        assert_eq!(ds.row(1), &[-0.25, 0.125]);
        assert_eq!(ds.labels(), &[1.0, -1.0]);
        assert_eq!(
            ds.feature_names.as_deref(),
            Some(&["f1".to_string(), "f2".to_string()][..])
        );
    }

    #[test]
    fn csv_errors() {
        let f = temp_file("f1,f2\n0.5,1.0\n");
        assert!(matches!(
            load_csv(f.path()),
            Err(SteinError::Parse { line: 1, .. })
        ));
        let f = temp_file("f1,label\nabc,1\n");
        match load_csv(f.path()) {
            Err(SteinError::Parse { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("abc"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    fn toy_dataset(n: usize) -> Dataset {
        let features: Vec<f64> = (0..n * 2).map(|i| i as f64).collect();
        let labels: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        Dataset::new(features, labels, 2).unwrap()
    }

    #[test]
    fn split_sizes_and_determinism() {
        let ds = toy_dataset(10);
        let (train, test) = train_test_split(&ds, 0.2, 3).unwrap();
        assert_eq!(train.n(), 8);
        assert_eq!(test.n(), 2);
        let (train2, test2) = train_test_split(&ds, 0.2, 3).unwrap();
        assert_eq!(train, train2);
        assert_eq!(test, test2);
        let (train3, _) = train_test_split(&ds, 0.2, 4).unwrap();
        assert_ne!(train, train3);
    }

    #[test]
    fn split_is_a_partition() {
        let ds = toy_dataset(25);
        let (train, test) = train_test_split(&ds, 0.33, 11).unwrap();
        assert_eq!(train.n() + test.n(), 25);
        // First feature values identify the original rows uniquely.
        let mut seen: Vec<f64> = train
            .features()
            .chunks_exact(2)
            .chain(test.features().chunks_exact(2))
            .map(|r| r[0])
            .collect();
        seen.sort_by(f64::total_cmp);
        let expected: Vec<f64> = (0..25).map(|i| (2 * i) as f64).collect();
        assert_eq!(seen, expected);
    }

    #[test]
    fn split_rejects_degenerate_fractions() {
        let ds = toy_dataset(10);
        assert!(train_test_split(&ds, 0.0, 0).is_err());
        assert!(train_test_split(&ds, 1.0, 0).is_err());
        assert!(train_test_split(&ds, 0.05, 0).is_err()); // empty test split
    }

    #[test]
    fn standardize_hand_example() {
        // Train column {0, 2}: mean 1, population sd 1 -> {-1, +1}.
        let train = Dataset::new(vec![0.0, 5.0, 2.0, 5.0], vec![1.0, -1.0], 2).unwrap();
        let test = Dataset::new(vec![4.0, 7.0], vec![1.0], 2).unwrap();
        let (train_s, test_s, params) = standardize(&train, &test).unwrap();
        assert_eq!(train_s.row(0)[0], -1.0);
        assert_eq!(train_s.row(1)[0], 1.0);
        // Constant second feature: shift only, scale 1 recorded.
        assert_eq!(params.scales[1], 1.0);
        assert_eq!(train_s.row(0)[1], 0.0);
        assert_eq!(train_s.row(1)[1], 0.0);
        // Test rows use the train transform.
        assert_eq!(test_s.row(0)[0], 3.0);
        assert_eq!(test_s.row(0)[1], 2.0);
        assert!(train_s.meta.standardized);
        assert!(test_s.meta.standardized);
    }

    #[test]
    fn standardize_round_trips() {
        let train = Dataset::new(
            vec![0.3, -2.0, 1.7, 4.0, -0.9, 0.5, 2.2, -1.1],
            vec![1.0, -1.0, 1.0, -1.0],
            2,
        )
        .unwrap();
        let (train_s, _, params) = standardize(&train, &train).unwrap();
        for (k, row) in train_s.features().chunks_exact(2).enumerate() {
            let mut r = row.to_vec();
            params.inverse_row(&mut r);
            for c in 0..2 {
                assert_relative_eq!(r[c], train.row(k)[c], max_relative = 1e-12, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn synthetic_data_is_balanced_when_weights_vanish() {
        let ds = synth_logistic(10_000, &[0.0, 0.0], 0.0, 1).unwrap();
        let mean_label = ds.labels().iter().sum::<f64>() / ds.n() as f64;
        // Marginal P(+1) = 1/2; 5/sqrt(N) on the mean label scale is 0.1.
        assert!(mean_label.abs() < 0.05, "mean label {mean_label}");
        assert_eq!(ds.meta.true_weights.as_deref(), Some(&[0.0, 0.0][..]));
        assert_eq!(ds.meta.seed, Some(1));
    }

    #[test]
    fn synthetic_data_is_deterministic() {
        let a = synth_logistic(50, &[1.0, -2.0], 0.1, 9).unwrap();
        let b = synth_logistic(50, &[1.0, -2.0], 0.1, 9).unwrap();
        assert_eq!(a, b);
        let c = synth_logistic(50, &[1.0, -2.0], 0.1, 10).unwrap();
        assert_ne!(a, c);
        assert!(synth_logistic(5, &[1.0], 0.0, 0).is_err());
        assert!(synth_logistic(50, &[1.0], 0.6, 0).is_err());
    }

    #[test]
    fn strong_weights_separate_the_classes() {
        let ds = synth_logistic(2_000, &[10.0, 0.0], 0.0, 2).unwrap();
        // With ||w*|| = 10 the label should almost always match the sign of
        // the first feature.
        let mut agree = 0usize;
        for k in 0..ds.n() {
            let predicted = if ds.row(k)[0] > 0.0 { 1.0 } else { -1.0 };
            if predicted == ds.labels()[k] {
                agree += 1;
            }
        }
        let rate = agree as f64 / ds.n() as f64;
        assert!(rate > 0.93, "sign agreement {rate}");
    }

    #[test]
    fn sha256_known_value() {
        let f = temp_file("abc");
        assert_eq!(
            sha256_file(f.path()).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::new(vec![], vec![], 1).is_err());
        assert!(Dataset::new(vec![1.0], vec![2.0], 1).is_err());
        assert!(Dataset::new(vec![f64::NAN], vec![1.0], 1).is_err());
        assert!(Dataset::new(vec![1.0, 2.0], vec![1.0], 1).is_err());
    }
}
