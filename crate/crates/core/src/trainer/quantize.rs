use log::warn;

use crate::netcore::{EffectiveWeights, Matrix, WeightCode, WeightMatrix, MAX_MAGNITUDE};

/// Nearest 3-bit level to a shadow weight; ties round away from zero.
/// Values outside `[-1, 1]` are clamped and reported through the flag.
pub fn quantize(shadow: f64) -> (WeightCode, bool) {
    let clamped = !(-1.0..=1.0).contains(&shadow);
    let level = (shadow.clamp(-1.0, 1.0) * MAX_MAGNITUDE as f64).round() as i64;
    let code = WeightCode::encode(level).expect("clamped level is in range");
    (code, clamped)
}

/// Quantizes every shadow weight into a code matrix.
pub fn quantize_weights(shadow: &EffectiveWeights) -> WeightMatrix {
    let sizes: Vec<usize> = shadow
        .layers
        .first()
        .map(|m| m.cols)
        .into_iter()
        .chain(shadow.layers.iter().map(|m| m.rows))
        .collect();
    let topology = crate::netcore::Topology::new(sizes).expect("weights imply a valid topology");
    let mut codes = WeightMatrix::zeros(&topology);
    let mut clamped = 0usize;
    for (k, m) in shadow.layers.iter().enumerate() {
        for i in 0..m.rows {
            for j in 0..m.cols {
                let (code, c) = quantize(m.get(i, j));
                clamped += c as usize;
                codes.set(k, i, j, code);
            }
        }
    }
    if clamped > 0 {
        warn!("{clamped} shadow weights outside [-1, 1] were clamped before quantization");
    }
    codes
}

/// Dequantized copy `decode(quantize(w)) / 7` without building codes.
pub(crate) fn quantized_effective(shadow: &EffectiveWeights) -> EffectiveWeights {
    let scale = MAX_MAGNITUDE as f64;
    EffectiveWeights {
        layers: shadow
            .layers
            .iter()
            .map(|m| Matrix {
                rows: m.rows,
                cols: m.cols,
                data: m
                    .data
                    .iter()
                    .map(|w| (w.clamp(-1.0, 1.0) * scale).round() / scale)
                    .collect(),
            })
            .collect(),
    }
}
