//! Datasets: MNIST from IDX files and synthetic Gaussian blobs.

pub mod idx;

use std::path::Path;

use crate::{Error, Matrix, Result, Rng};

pub use idx::MnistFiles;

/// Inputs in `[0, 1]` with integer class labels.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    inputs: Matrix,
    labels: Vec<usize>,
    class_count: usize,
}

impl LabeledDataset {
    pub fn new(inputs: Matrix, labels: Vec<usize>, class_count: usize) -> Result<Self> {
        if inputs.rows() != labels.len() {
            return Err(Error::shape(
                "dataset",
                format!("{} inputs, {} labels", inputs.rows(), labels.len()),
            ));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_count) {
            return Err(Error::config(format!("label {bad} out of range for {class_count} classes")));
        }
        if inputs.as_slice().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::config("dataset inputs must lie in [0, 1]"));
        }
        Ok(LabeledDataset {
            inputs,
            labels,
            class_count,
        })
    }

    pub fn inputs(&self) -> &Matrix {
        &self.inputs
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.inputs.cols()
    }

    pub fn subset(&self, idx: &[usize]) -> LabeledDataset {
        LabeledDataset {
            inputs: self.inputs.select_rows(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            class_count: self.class_count,
        }
    }

    /// Rows whose label is in `classes`, in dataset order.
    pub fn indices_of(&self, classes: &[usize]) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| classes.contains(&self.labels[i]))
            .collect()
    }

    /// Concatenation of two datasets over the same classes.
    pub fn concat(&self, other: &LabeledDataset) -> Result<LabeledDataset> {
        if self.class_count != other.class_count {
            return Err(Error::config("cannot concatenate datasets with different class counts"));
        }
        let inputs = self.inputs.vstack(&other.inputs)?;
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        Ok(LabeledDataset {
            inputs,
            labels,
            class_count: self.class_count,
        })
    }
}

pub const MNIST_CLASSES: usize = 10;

/// Loads an MNIST image/label IDX pair, scaling pixels by `1/255`.
pub fn load_mnist_idx(images_path: &Path, labels_path: &Path) -> Result<LabeledDataset> {
    let images = idx::read_images(images_path)?;
    let labels = idx::read_labels(labels_path)?;
    if images.count != labels.len() {
        return Err(Error::Format {
            path: labels_path.to_path_buf(),
            offset: 4,
            detail: format!("{} labels for {} images", labels.len(), images.count),
        });
    }
    if let Some(pos) = labels.iter().position(|&l| l as usize >= MNIST_CLASSES) {
        return Err(Error::Format {
            path: labels_path.to_path_buf(),
            offset: 8 + pos as u64,
            detail: format!("label {} is not a digit", labels[pos]),
        });
    }
    let data = images.pixels.iter().map(|&p| f64::from(p) / 255.0).collect();
    let inputs = Matrix::from_vec(images.count, images.rows * images.cols, data)?;
    let labels = labels.into_iter().map(usize::from).collect();
    LabeledDataset::new(inputs, labels, MNIST_CLASSES)
}

/// Train and test splits from the four standard files in `dir`.
pub fn load_mnist_dir(dir: &Path) -> Result<(LabeledDataset, LabeledDataset)> {
    let f = MnistFiles::in_dir(dir);
    Ok((
        load_mnist_idx(&f.train_images, &f.train_labels)?,
        load_mnist_idx(&f.test_images, &f.test_labels)?,
    ))
}

/// Isotropic Gaussian clusters in the unit cube.
#[derive(Clone, Debug, PartialEq)]
pub struct BlobSpec {
    pub classes: usize,
    pub dims: usize,
    /// `classes` rows of `dims` coordinates.
    pub means: Vec<Vec<f64>>,
    pub std: f64,
    pub n_per_class: usize,
    pub seed: u64,
}

impl BlobSpec {
    /// Class means drawn uniformly from `[0.1, 0.9]^dims` with the given seed.
    pub fn separated(classes: usize, dims: usize, std: f64, n_per_class: usize, seed: u64) -> Self {
        let mut rng = Rng::derive(seed, 0x6d65616e);
        let means = (0..classes)
            .map(|_| (0..dims).map(|_| rng.uniform(0.1, 0.9)).collect())
            .collect();
        BlobSpec {
            classes,
            dims,
            means,
            std,
            n_per_class,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes == 0 || self.dims == 0 {
            return Err(Error::config("blobs need at least one class and one dimension"));
        }
        if !(self.std > 0.0) {
            return Err(Error::config(format!("blob std must be > 0, got {}", self.std)));
        }
        if self.means.len() != self.classes || self.means.iter().any(|m| m.len() != self.dims) {
            return Err(Error::config("blob means must be classes x dims"));
        }
        Ok(())
    }
}

/// Samples `n_per_class` points per class, clips them to `[0, 1]`, and splits
/// each class 80/20 into train and test (`n - n/5` train rows per class).
pub fn gen_blobs(spec: &BlobSpec) -> Result<(LabeledDataset, LabeledDataset)> {
    spec.validate()?;
    let mut rng = Rng::derive(spec.seed, 0x626c6f62);
    let n_test = spec.n_per_class / 5;
    let n_train = spec.n_per_class - n_test;
    let (mut tr_x, mut tr_y) = (Vec::new(), Vec::new());
    let (mut te_x, mut te_y) = (Vec::new(), Vec::new());
    for (c, mean) in spec.means.iter().enumerate() {
        for i in 0..spec.n_per_class {
            let (xs, ys) = if i < n_train {
                (&mut tr_x, &mut tr_y)
            } else {
                (&mut te_x, &mut te_y)
            };
            xs.extend(mean.iter().map(|&m| rng.gauss(m, spec.std).clamp(0.0, 1.0)));
            ys.push(c);
        }
    }
    let train = LabeledDataset::new(
        Matrix::from_vec(tr_y.len(), spec.dims, tr_x)?,
        tr_y,
        spec.classes,
    )?;
    let test = LabeledDataset::new(
        Matrix::from_vec(te_y.len(), spec.dims, te_x)?,
        te_y,
        spec.classes,
    )?;
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::idx::*;
    use super::*;

    fn fixture() -> (IdxImages, Vec<u8>) {
        let images = IdxImages {
            count: 2,
            rows: 2,
            cols: 3,
            pixels: vec![0, 1, 2, 128, 254, 255, 10, 20, 30, 40, 50, 60],
        };
        (images, vec![7, 3])
    }

    #[test]
    fn idx_fixture_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let (images, labels) = fixture();
        let ip = dir.path().join("img");
        let lp = dir.path().join("lbl");
        write_images(&ip, &images).unwrap();
        write_labels(&lp, &labels).unwrap();
        assert_eq!(read_images(&ip).unwrap(), images);
        assert_eq!(read_labels(&lp).unwrap(), labels);

        let ds = load_mnist_idx(&ip, &lp).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.dim(), 6);
        assert_eq!(ds.labels(), &[7, 3]);
        assert_eq!(ds.inputs().get(0, 5), 1.0);
        assert_eq!(ds.inputs().get(0, 3), 128.0 / 255.0);
        let bytes: Vec<u8> = ds.inputs().as_slice().iter().map(|v| (v * 255.0).round() as u8).collect();
        assert_eq!(bytes, images.pixels);
    }

    #[test]
    fn header_bytes_are_big_endian() {
        let (images, labels) = fixture();
        let enc = encode_images(&images);
        assert_eq!(&enc[..8], &[0, 0, 8, 3, 0, 0, 0, 2]);
        assert_eq!(&encode_labels(&labels)[..4], &[0, 0, 8, 1]);
    }

    #[test]
    fn truncated_and_corrupt_files() {
        let p = Path::new("mem");
        let (images, labels) = fixture();
        let enc = encode_images(&images);
        let err = parse_images(p, &enc[..enc.len() - 1]).unwrap_err();
        assert!(matches!(err, Error::Format { offset, .. } if offset == enc.len() as u64 - 1));
        assert!(matches!(parse_images(p, &enc[..6]), Err(Error::Format { offset: 4, .. })));

        let mut bad = enc.clone();
        bad[3] = 0x01;
        assert!(matches!(parse_images(p, &bad), Err(Error::Format { offset: 0, .. })));
        assert!(parse_labels(p, &enc).is_err());

        let mut long = encode_labels(&labels);
        long.push(0);
        assert!(parse_labels(p, &long).is_err());
    }

    #[test]
    fn count_mismatch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let (images, _) = fixture();
        let ip = dir.path().join("img");
        let lp = dir.path().join("lbl");
        write_images(&ip, &images).unwrap();
        write_labels(&lp, &[1, 2, 3]).unwrap();
        assert!(matches!(load_mnist_idx(&ip, &lp), Err(Error::Format { .. })));
        write_labels(&lp, &[1, 12]).unwrap();
        assert!(load_mnist_idx(&ip, &lp).is_err());
        assert!(matches!(
            load_mnist_idx(&dir.path().join("missing"), &lp),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn blob_split_arithmetic() {
        let spec = BlobSpec::separated(4, 3, 0.1, 5, 0);
        let (train, test) = gen_blobs(&spec).unwrap();
        assert_eq!(train.len(), 16);
        assert_eq!(test.len(), 4);
        for c in 0..4 {
            assert_eq!(train.labels().iter().filter(|&&l| l == c).count(), 4);
            assert_eq!(test.labels().iter().filter(|&&l| l == c).count(), 1);
        }
        assert!(train.inputs().as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn blobs_are_deterministic() {
        let spec = BlobSpec::separated(3, 5, 0.05, 20, 42);
        assert_eq!(gen_blobs(&spec).unwrap(), gen_blobs(&spec).unwrap());
        let other = BlobSpec::separated(3, 5, 0.05, 20, 43);
        assert_ne!(gen_blobs(&spec).unwrap(), gen_blobs(&other).unwrap());
    }

    #[test]
    fn blob_spec_validation() {
        let mut spec = BlobSpec::separated(2, 2, 0.1, 5, 0);
        spec.std = 0.0;
        assert!(gen_blobs(&spec).is_err());
        let mut spec = BlobSpec::separated(2, 2, 0.1, 5, 0);
        spec.means.pop();
        assert!(gen_blobs(&spec).is_err());
    }

    #[test]
    fn dataset_invariants() {
        let x = Matrix::zeros(2, 2);
        assert!(LabeledDataset::new(x.clone(), vec![0, 3], 3).is_err());
        assert!(LabeledDataset::new(x.clone(), vec![0], 3).is_err());
        assert!(LabeledDataset::new(x.map(|_| 1.5), vec![0, 1], 3).is_err());
        let ds = LabeledDataset::new(x, vec![2, 0], 3).unwrap();
        assert_eq!(ds.indices_of(&[0]), vec![1]);
    }
}
