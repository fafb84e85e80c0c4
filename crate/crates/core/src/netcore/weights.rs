use serde::{Deserialize, Serialize};

use super::topology::Topology;
use crate::error::{Error, Result};

/// Largest synapse magnitude representable with three magnitude bits.
pub const MAX_MAGNITUDE: u8 = 7;

/// Programmable state of a single synapse: a sign bit selecting the negative
/// mirror branch plus three binary-weighted magnitude bits `(w2 w1 w0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct WeightCode {
    pub negative: bool,
    bits: u8,
}

impl WeightCode {
    pub const ZERO: WeightCode = WeightCode {
        negative: false,
        bits: 0,
    };

    pub fn new(negative: bool, bits: u8) -> Result<Self> {
        if bits > MAX_MAGNITUDE {
            return Err(Error::Range {
                value: bits as i64,
                min: 0,
                max: MAX_MAGNITUDE as i64,
            });
        }
        Ok(Self { negative, bits })
    }

    pub fn bits(&self) -> u8 {
        self.bits
    }

    /// Individual switch states `(w2, w1, w0)`.
    pub fn switches(&self) -> (bool, bool, bool) {
        (self.bits & 4 != 0, self.bits & 2 != 0, self.bits & 1 != 0)
    }

    /// Integer weight in `[-7, 7]`: `±(4·w2 + 2·w1 + w0)`.
    pub fn decode(&self) -> i8 {
        let (w2, w1, w0) = self.switches();
        let magnitude = 4 * w2 as i8 + 2 * w1 as i8 + w0 as i8;
        if self.negative {
            -magnitude
        } else {
            magnitude
        }
    }

    /// Inverse of [`decode`](Self::decode); zero is encoded with a positive sign.
    pub fn encode(value: i64) -> Result<Self> {
        let max = MAX_MAGNITUDE as i64;
        if !(-max..=max).contains(&value) {
            return Err(Error::Range {
                value,
                min: -max,
                max,
            });
        }
        Ok(Self {
            negative: value < 0,
            bits: value.unsigned_abs() as u8,
        })
    }

    /// Effective real weight `decode / 7` in `[-1, 1]`.
    pub fn effective(&self) -> f64 {
        self.decode() as f64 / MAX_MAGNITUDE as f64
    }

    /// All 16 codes, including both signed zeros.
    pub fn all() -> impl Iterator<Item = WeightCode> {
        (0..16u8).map(|c| WeightCode {
            negative: c & 8 != 0,
            bits: c & 7,
        })
    }
}

/// Dense row-major matrix with `rows = post`, `cols = pre`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

/// Real-valued weights for every layer pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveWeights {
    pub layers: Vec<Matrix>,
}

impl EffectiveWeights {
    pub fn zeros(topology: &Topology) -> Self {
        let layers = (0..topology.n_weight_layers())
            .map(|k| {
                let (post, pre) = topology.weight_shape(k);
                Matrix::zeros(post, pre)
            })
            .collect();
        Self { layers }
    }

    pub fn check_shape(&self, topology: &Topology) -> Result<()> {
        if self.layers.len() != topology.n_weight_layers() {
            return Err(Error::Shape(format!(
                "{} weight layers for topology {topology}",
                self.layers.len()
            )));
        }
        for (k, m) in self.layers.iter().enumerate() {
            let (post, pre) = topology.weight_shape(k);
            if m.rows != post || m.cols != pre || m.data.len() != post * pre {
                return Err(Error::Shape(format!(
                    "weight layer {k} is {}x{}, expected {post}x{pre}",
                    m.rows, m.cols
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.layers.iter().map(|m| m.data.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|m| m.data.iter())
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers.iter_mut().flat_map(|m| m.data.iter_mut())
    }
}

/// Per layer-pair dense matrices of synapse codes, shape `(post, pre)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "WeightMatrixRepr", into = "WeightMatrixRepr")]
pub struct WeightMatrix {
    layers: Vec<CodeLayer>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct CodeLayer {
    rows: usize,
    cols: usize,
    codes: Vec<WeightCode>,
}

/// File representation: codes split into parallel sign and magnitude arrays.
#[derive(Serialize, Deserialize)]
struct WeightMatrixRepr {
    layers: Vec<CodeLayerRepr>,
}

#[derive(Serialize, Deserialize)]
struct CodeLayerRepr {
    rows: usize,
    cols: usize,
    sign: Vec<u8>,
    bits: Vec<u8>,
}

impl TryFrom<WeightMatrixRepr> for WeightMatrix {
    type Error = Error;
    fn try_from(repr: WeightMatrixRepr) -> Result<Self> {
        let layers = repr
            .layers
            .into_iter()
            .map(|l| {
                if l.sign.len() != l.rows * l.cols || l.bits.len() != l.rows * l.cols {
                    return Err(Error::Shape(format!(
                        "code layer {}x{} has {} signs and {} magnitudes",
                        l.rows,
                        l.cols,
                        l.sign.len(),
                        l.bits.len()
                    )));
                }
                let codes = l
                    .sign
                    .iter()
                    .zip(&l.bits)
                    .map(|(&s, &b)| WeightCode::new(s != 0, b))
                    .collect::<Result<Vec<_>>>()?;
                Ok(CodeLayer {
                    rows: l.rows,
                    cols: l.cols,
                    codes,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { layers })
    }
}

impl From<WeightMatrix> for WeightMatrixRepr {
    fn from(w: WeightMatrix) -> Self {
        WeightMatrixRepr {
            layers: w
                .layers
                .into_iter()
                .map(|l| CodeLayerRepr {
                    rows: l.rows,
                    cols: l.cols,
                    sign: l.codes.iter().map(|c| c.negative as u8).collect(),
                    bits: l.codes.iter().map(|c| c.bits()).collect(),
                })
                .collect(),
        }
    }
}

impl WeightMatrix {
    /// All synapses switched off.
    pub fn zeros(topology: &Topology) -> Self {
        let layers = (0..topology.n_weight_layers())
            .map(|k| {
                let (rows, cols) = topology.weight_shape(k);
                CodeLayer {
                    rows,
                    cols,
                    codes: vec![WeightCode::ZERO; rows * cols],
                }
            })
            .collect();
        Self { layers }
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn shape(&self, k: usize) -> (usize, usize) {
        (self.layers[k].rows, self.layers[k].cols)
    }

    pub fn get(&self, k: usize, post: usize, pre: usize) -> WeightCode {
        let l = &self.layers[k];
        l.codes[post * l.cols + pre]
    }

    pub fn set(&mut self, k: usize, post: usize, pre: usize, code: WeightCode) {
        let l = &mut self.layers[k];
        l.codes[post * l.cols + pre] = code;
    }

    pub fn layer_codes(&self, k: usize) -> &[WeightCode] {
        &self.layers[k].codes
    }

    pub fn codes(&self) -> impl Iterator<Item = &WeightCode> {
        self.layers.iter().flat_map(|l| l.codes.iter())
    }

    pub fn check_shape(&self, topology: &Topology) -> Result<()> {
        if self.layers.len() != topology.n_weight_layers() {
            return Err(Error::Shape(format!(
                "{} code layers for topology {topology}",
                self.layers.len()
            )));
        }
        for (k, l) in self.layers.iter().enumerate() {
            if (l.rows, l.cols) != topology.weight_shape(k) {
                let (post, pre) = topology.weight_shape(k);
                return Err(Error::Shape(format!(
                    "code layer {k} is {}x{}, expected {post}x{pre}",
                    l.rows, l.cols
                )));
            }
        }
        Ok(())
    }

    /// Real weights `decode / 7` for each synapse.
    pub fn effective(&self) -> EffectiveWeights {
        EffectiveWeights {
            layers: self
                .layers
                .iter()
                .map(|l| Matrix {
                    rows: l.rows,
                    cols: l.cols,
                    data: l.codes.iter().map(WeightCode::effective).collect(),
                })
                .collect(),
        }
    }

    /// Number of synapses programmed with a strictly negative value.
    pub fn negative_count(&self) -> usize {
        self.codes().filter(|c| c.decode() < 0).count()
    }
}
