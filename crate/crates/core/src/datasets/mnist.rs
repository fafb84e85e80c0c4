//! IDX container reader for the MNIST digits.

use std::fs;
use std::path::Path;

use super::{Dataset, InputUnit, Split};
use crate::error::{Error, Result};

const IMAGE_MAGIC: u32 = 2051;
const LABEL_MAGIC: u32 = 2049;

pub const MNIST_TRAIN: (&str, &str) = ("train-images-idx3-ubyte", "train-labels-idx1-ubyte");
pub const MNIST_TEST: (&str, &str) = ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte");

struct Cursor<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, reason: impl Into<String>) -> Error {
        Error::Format {
            path: self.path.to_path_buf(),
            offset: self.pos as u64,
            reason: reason.into(),
        }
    }

    fn u32(&mut self) -> Result<u32> {
        let end = self.pos + 4;
        let chunk = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| self.err("truncated header"))?;
        let v = u32::from_be_bytes(chunk.try_into().unwrap());
        self.pos = end;
        Ok(v)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        let bytes = self.bytes;
        let chunk = bytes.get(self.pos..end).ok_or_else(|| {
            self.err(format!(
                "truncated payload: need {n} bytes, {} available",
                bytes.len() - self.pos
            ))
        })?;
        self.pos = end;
        Ok(chunk)
    }
}

fn read_images(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let bytes = fs::read(path)?;
    let mut cur = Cursor { path, bytes: &bytes, pos: 0 };
    let magic = cur.u32()?;
    if magic != IMAGE_MAGIC {
        cur.pos = 0;
        return Err(cur.err(format!("bad image magic {magic}, expected {IMAGE_MAGIC}")));
    }
    let n = cur.u32()? as usize;
    let rows = cur.u32()? as usize;
    let cols = cur.u32()? as usize;
    let pixels = cur.take(n * rows * cols)?;
    Ok((n, rows * cols, pixels.iter().map(|&p| p as f64 / 255.0).collect()))
}

fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let bytes = fs::read(path)?;
    let mut cur = Cursor { path, bytes: &bytes, pos: 0 };
    let magic = cur.u32()?;
    if magic != LABEL_MAGIC {
        cur.pos = 0;
        return Err(cur.err(format!("bad label magic {magic}, expected {LABEL_MAGIC}")));
    }
    let n = cur.u32()? as usize;
    let start = cur.pos;
    let labels = cur.take(n)?;
    if let Some(i) = labels.iter().position(|&l| l > 9) {
        cur.pos = start + i;
        return Err(cur.err(format!("label {} is not a digit", labels[i])));
    }
    Ok(labels.iter().map(|&l| l as usize).collect())
}

/// Reads an IDX image/label file pair; pixels are scaled to `[0, 1]`.
pub fn load_mnist_idx(images_path: &Path, labels_path: &Path, split: Split) -> Result<Dataset> {
    let (n, dim, inputs) = read_images(images_path)?;
    let labels = read_labels(labels_path)?;
    if labels.len() != n {
        return Err(Error::Shape(format!(
            "{n} images but {} labels in {}",
            labels.len(),
            labels_path.display()
        )));
    }
    Dataset::new(
        dim,
        inputs,
        labels,
        10,
        split,
        InputUnit::Intensity,
        format!("mnist:{}", images_path.display()),
    )
}

/// Loads the standard train and test files from `dir`.
pub fn load_mnist(dir: &Path) -> Result<(Dataset, Dataset)> {
    let train = load_mnist_idx(&dir.join(MNIST_TRAIN.0), &dir.join(MNIST_TRAIN.1), Split::Train)?;
    let test = load_mnist_idx(&dir.join(MNIST_TEST.0), &dir.join(MNIST_TEST.1), Split::Test)?;
    Ok((train, test))
}
