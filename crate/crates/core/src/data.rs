//! In-memory labelled image sets.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Split {
    Train,
    Val,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            _ => Err(Error::InvalidArgument("split must be train or val")),
        }
    }
}

/// Images stored as `h × w × c` f32 samples, plus class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    shape: [usize; 3],
    images: Vec<f32>,
    labels: Vec<u8>,
    n_classes: usize,
}

impl Dataset {
    pub fn new(shape: [usize; 3], images: Vec<f32>, labels: Vec<u8>, n_classes: usize) -> Result<Self> {
        let per = shape.iter().product::<usize>();
        if per == 0 || n_classes == 0 {
            return Err(Error::InvalidShape(shape.to_vec()));
        }
        if images.len() != per * labels.len() {
            return Err(Error::LengthMismatch {
                shape: vec![labels.len(), shape[0], shape[1], shape[2]],
                len: images.len(),
            });
        }
        if let Some(&label) = labels.iter().find(|&&l| usize::from(l) >= n_classes) {
            return Err(Error::LabelOutOfRange {
                label: label.into(),
                classes: n_classes,
            });
        }
        if images.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("image data"));
        }
        Ok(Self {
            shape,
            images,
            labels,
            n_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn sample_len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn images(&self) -> &[f32] {
        &self.images
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn image(&self, i: usize) -> &[f32] {
        let per = self.sample_len();
        &self.images[i * per..(i + 1) * per]
    }

    /// The first `n` samples (all of them if `n >= len`).
    pub fn subset(&self, n: usize) -> Self {
        let n = n.min(self.len());
        Self {
            shape: self.shape,
            images: self.images[..n * self.sample_len()].to_vec(),
            labels: self.labels[..n].to_vec(),
            n_classes: self.n_classes,
        }
    }

    /// Gathers `indices` into an `n × h × w × c` tensor and a label list.
    pub fn batch<T: Scalar>(&self, indices: &[usize]) -> Result<(Tensor<T>, Vec<usize>)> {
        let per = self.sample_len();
        let mut data = Vec::with_capacity(indices.len() * per);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.len() {
                return Err(Error::InvalidArgument("sample index out of range"));
            }
            data.extend(self.image(i).iter().map(|&v| T::of_f64(f64::from(v))));
            labels.push(usize::from(self.labels[i]));
        }
        let [h, w, c] = self.shape;
        Ok((Tensor::from_vec(&[indices.len(), h, w, c], data)?, labels))
    }
}

/// Parameters for [`synthetic_blobs_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlobsConfig {
    pub n: usize,
    pub classes: usize,
    pub dim: usize,
    /// Distance between neighbouring class centres, in units of the cluster σ.
    pub separation: f64,
    pub seed: u64,
}

const BLOB_SIGMA: f64 = 1.0;

/// Unit-variance Gaussian clusters with 10σ separation, stored as
/// `1 × 1 × dim` samples. Class `k` is centred on a multiple of `±e_{k/2}`.
pub fn synthetic_blobs(n: usize, classes: usize, dim: usize, seed: u64) -> Result<Dataset> {
    synthetic_blobs_with(BlobsConfig {
        n,
        classes,
        dim,
        separation: 10.0,
        seed,
    })
}

pub fn synthetic_blobs_with(cfg: BlobsConfig) -> Result<Dataset> {
    let BlobsConfig {
        n,
        classes,
        dim,
        separation,
        seed,
    } = cfg;
    if n == 0 || classes < 2 || dim == 0 {
        return Err(Error::InvalidArgument("blobs need n >= 1, classes >= 2 and dim >= 1"));
    }
    if classes > 2 * dim || classes > 256 {
        return Err(Error::InvalidArgument("at most 2 * dim classes (and 256)"));
    }
    if !(separation.is_finite() && separation >= 0.0) {
        return Err(Error::InvalidArgument("separation must be finite and non-negative"));
    }
    let offset = separation * BLOB_SIGMA / core::f64::consts::SQRT_2;
    let mut rng = rng::stream(seed, rng::STREAM_DATA);
    let mut images = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = i % classes;
        let (axis, sign) = (label / 2, if label % 2 == 0 { 1.0 } else { -1.0 });
        for d in 0..dim {
            let centre = if d == axis { sign * offset } else { 0.0 };
            let noise: f64 = rng.sample(StandardNormal);
            images.push((centre + BLOB_SIGMA * noise) as f32);
        }
        labels.push(label as u8);
    }
    Dataset::new([1, 1, dim], images, labels, classes)
}
