use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::geometry::{GeometryTable, SOMA_TRANSISTORS};
use crate::error::{Error, Result};
use crate::netcore::{self, Activations, EffectiveWeights, Topology, TransferProfile, WeightMatrix};
use crate::provenance::content_hash;

pub const DEVICE_SCHEMA: u32 = 1;

/// Unit-bit synapse transistors of the positive and negative branches.
const SYNAPSE_POSITIVE: &str = "M14";
const SYNAPSE_NEGATIVE: &str = "M11";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaRule {
    /// `σ = A_VT / sqrt(W / L)`
    WidthOverLength,
    /// `σ = A_VT / sqrt(W · L)`
    Pelgrom,
}

/// Threshold-mismatch model and subthreshold constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MismatchParams {
    /// mV·µm
    pub a_vt: f64,
    pub n_slope: f64,
    /// mV
    pub thermal_voltage: f64,
    pub sigma_rule: SigmaRule,
}

impl Default for MismatchParams {
    fn default() -> Self {
        Self {
            a_vt: 3.3,
            n_slope: 1.5,
            thermal_voltage: 25.85,
            sigma_rule: SigmaRule::WidthOverLength,
        }
    }
}

impl MismatchParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.a_vt >= 0.0 && self.a_vt.is_finite()) {
            return Err(Error::Parameter(format!("A_VT = {} must be non-negative", self.a_vt)));
        }
        if !(self.n_slope > 0.0 && self.thermal_voltage > 0.0) {
            return Err(Error::Parameter(
                "slope factor and thermal voltage must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Standard deviation of the threshold shift, in mV.
    pub fn sigma_mv(&self, w_um: f64, l_um: f64) -> f64 {
        match self.sigma_rule {
            SigmaRule::WidthOverLength => self.a_vt / (w_um / l_um).sqrt(),
            SigmaRule::Pelgrom => self.a_vt / (w_um * l_um).sqrt(),
        }
    }

    /// `n · U_T` in mV.
    pub fn n_ut(&self) -> f64 {
        self.n_slope * self.thermal_voltage
    }

    /// Current gain of a mirror whose input and output transistors have
    /// threshold shifts `dvt_in` and `dvt_out` (mV).
    pub fn mirror_gain(&self, dvt_in: f64, dvt_out: f64) -> f64 {
        ((dvt_in - dvt_out) / self.n_ut()).exp()
    }
}

/// Per-synapse threshold shifts (mV) of the unit-bit transistor of each branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynapseShifts {
    pub positive: Vec<Vec<f64>>,
    pub negative: Vec<Vec<f64>>,
}

/// A simulated fabricated chip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirtualDevice {
    pub schema: u32,
    pub topology: Topology,
    pub seed: u64,
    pub params: MismatchParams,
    pub geometry: GeometryTable,
    /// Lumped parasitic capacitance per synapse, fF.
    pub capacitance_ff: f64,
    #[serde(default)]
    pub synapse_mismatch: bool,
    /// `[layer][neuron][M0..M4]` threshold shifts in mV.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_vt: Option<Vec<Vec<[f64; 5]>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synapse_delta_vt: Option<Vec<SynapseShifts>>,
    /// Codes currently held in the synapse latches.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub programmed: Option<WeightMatrix>,
}

/// Steady-state operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct DcSolution {
    /// Net current into each soma (applied current for the input layer).
    pub soma_inputs: Vec<Vec<f64>>,
    /// Output current of each soma per unit weight.
    pub outputs: Activations,
}

impl VirtualDevice {
    /// Draws a threshold shift `ΔVT ~ N(0, σ)` for every soma transistor of
    /// every neuron. Synapse transistors are ideal unless enabled with
    /// [`with_synapse_mismatch`](Self::with_synapse_mismatch).
    pub fn fabricate(
        topology: &Topology,
        seed: u64,
        params: &MismatchParams,
        geometry: &GeometryTable,
    ) -> Result<Self> {
        params.validate()?;
        geometry.validate()?;
        let mut dev = Self {
            schema: DEVICE_SCHEMA,
            topology: topology.clone(),
            seed,
            params: params.clone(),
            geometry: geometry.clone(),
            capacitance_ff: 11.0,
            synapse_mismatch: false,
            delta_vt: None,
            synapse_delta_vt: None,
            programmed: None,
        };
        dev.delta_vt = Some(dev.draw_soma_shifts()?);
        Ok(dev)
    }

    /// Enables per-synapse gain jitter drawn from an independent stream.
    pub fn with_synapse_mismatch(mut self) -> Result<Self> {
        self.synapse_mismatch = true;
        self.synapse_delta_vt = Some(self.draw_synapse_shifts()?);
        Ok(self)
    }

    pub fn with_capacitance(mut self, capacitance_ff: f64) -> Result<Self> {
        if !(capacitance_ff > 0.0 && capacitance_ff.is_finite()) {
            return Err(Error::Parameter(format!("capacitance {capacitance_ff} fF must be positive")));
        }
        self.capacitance_ff = capacitance_ff;
        Ok(self)
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    fn draw_soma_shifts(&self) -> Result<Vec<Vec<[f64; 5]>>> {
        let mut sigmas = [0.0; 5];
        for (s, name) in sigmas.iter_mut().zip(SOMA_TRANSISTORS) {
            let g = self.geometry.get(name)?;
            *s = self.params.sigma_mv(g.w_um, g.l_um);
        }
        let mut rng = self.rng(0);
        Ok(self
            .topology
            .layer_sizes()
            .iter()
            .map(|&n| {
                (0..n)
                    .map(|_| {
                        let mut d = [0.0; 5];
                        for (v, s) in d.iter_mut().zip(&sigmas) {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            *v = s * z;
                        }
                        d
                    })
                    .collect()
            })
            .collect())
    }

    fn draw_synapse_shifts(&self) -> Result<Vec<SynapseShifts>> {
        let gp = self.geometry.get(SYNAPSE_POSITIVE)?;
        let gn = self.geometry.get(SYNAPSE_NEGATIVE)?;
        let (sp, sn) = (
            self.params.sigma_mv(gp.w_um, gp.l_um),
            self.params.sigma_mv(gn.w_um, gn.l_um),
        );
        let mut rng = self.rng(1);
        let mut draw = |s: f64, n: usize| -> Vec<f64> {
            (0..n)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    s * z
                })
                .collect()
        };
        Ok((0..self.topology.n_weight_layers())
            .map(|k| {
                let (post, pre) = self.topology.weight_shape(k);
                SynapseShifts {
                    positive: (0..post).map(|_| draw(sp, pre)).collect(),
                    negative: (0..post).map(|_| draw(sn, pre)).collect(),
                }
            })
            .collect())
    }

    /// Regenerates any shift table missing after deserialization.
    pub fn materialize(&mut self) -> Result<()> {
        if self.delta_vt.is_none() {
            self.delta_vt = Some(self.draw_soma_shifts()?);
        }
        if self.synapse_mismatch && self.synapse_delta_vt.is_none() {
            self.synapse_delta_vt = Some(self.draw_synapse_shifts()?);
        }
        Ok(())
    }

    pub fn delta_vt(&self) -> &[Vec<[f64; 5]>] {
        self.delta_vt.as_deref().expect("device shifts are materialized")
    }

    /// Overrides one transistor's threshold shift.
    pub fn set_delta_vt(&mut self, layer: usize, neuron: usize, transistor: usize, mv: f64) {
        self.delta_vt.as_mut().expect("device shifts are materialized")[layer][neuron][transistor] = mv;
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.geometry.validate()?;
        if !(self.capacitance_ff > 0.0) {
            return Err(Error::Parameter("capacitance must be positive".into()));
        }
        let table = self.delta_vt();
        if table.len() != self.topology.n_layers()
            || table.iter().zip(self.topology.layer_sizes()).any(|(l, &n)| l.len() != n)
        {
            return Err(Error::Shape("threshold table does not match topology".into()));
        }
        if table.iter().flatten().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite threshold shift".into()));
        }
        if let Some(w) = &self.programmed {
            w.check_shape(&self.topology)?;
        }
        Ok(())
    }

    /// Hash of the fabrication identity; programmed codes are excluded.
    pub fn hash(&self) -> Result<String> {
        let mut identity = self.clone();
        identity.programmed = None;
        content_hash(&identity)
    }

    /// Per-neuron gains implied by the threshold shifts.
    ///
    /// The positive branch copies the rectified input through M0→M1 and
    /// M2→synapse pFET; the negative branch additionally passes M2→M3 and
    /// M4→synapse nFET, so `g⁻ = exp((ΔM4 − ΔM3) / nU_T)`. Slopes are raw
    /// physical gains, not normalized.
    pub fn effective_profile(&self) -> TransferProfile {
        let p = &self.params;
        let slopes = self
            .delta_vt()
            .iter()
            .map(|layer| {
                layer
                    .iter()
                    .map(|d| p.mirror_gain(d[0], d[1]) * p.mirror_gain(d[2], 0.0))
                    .collect()
            })
            .collect();
        let neg_gains = self
            .delta_vt()
            .iter()
            .map(|layer| layer.iter().map(|d| p.mirror_gain(d[4], d[3])).collect())
            .collect();
        TransferProfile { slopes, neg_gains }
    }

    /// Effective synapse weights for `codes`, including synapse jitter when
    /// enabled.
    pub fn synapse_weights(&self, codes: &WeightMatrix) -> Result<EffectiveWeights> {
        codes.check_shape(&self.topology)?;
        let mut w = codes.effective();
        if let (true, Some(shifts)) = (self.synapse_mismatch, &self.synapse_delta_vt) {
            for (m, s) in w.layers.iter_mut().zip(shifts) {
                for i in 0..m.rows {
                    for j in 0..m.cols {
                        let v = m.get(i, j);
                        let shift = if v < 0.0 { s.negative[i][j] } else { s.positive[i][j] };
                        m.set(i, j, v * self.params.mirror_gain(0.0, shift));
                    }
                }
            }
        }
        Ok(w)
    }

    /// Steady-state currents with `codes` programmed and `input` (nA) applied.
    pub fn dc_solution(&self, codes: &WeightMatrix, input: &[f64]) -> Result<DcSolution> {
        let profile = self.effective_profile();
        let weights = self.synapse_weights(codes)?;
        let net = netcore::Network::new(&self.topology, &profile, &weights)?;
        let outputs = net.forward(input)?;
        let mut soma_inputs = vec![input.to_vec()];
        for (k, m) in weights.layers.iter().enumerate() {
            let prev = &outputs[k];
            let gains = &profile.neg_gains[k];
            soma_inputs.push(
                (0..m.rows)
                    .map(|i| {
                        m.row(i)
                            .iter()
                            .zip(prev)
                            .zip(gains)
                            .map(|((w, x), g)| if *w < 0.0 { g * w * x } else { w * x })
                            .sum()
                    })
                    .collect(),
            );
        }
        Ok(DcSolution {
            soma_inputs,
            outputs,
        })
    }

    /// Steady-state per-layer output currents.
    pub fn dc_response(&self, codes: &WeightMatrix, input: &[f64]) -> Result<Activations> {
        let profile = self.effective_profile();
        let weights = self.synapse_weights(codes)?;
        netcore::forward(&self.topology, &profile, &weights, input)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut dev: VirtualDevice = serde_json::from_slice(&fs::read(path)?)?;
        if dev.schema != DEVICE_SCHEMA {
            return Err(Error::Format {
                path: path.to_path_buf(),
                offset: 0,
                reason: format!("unsupported device schema {}", dev.schema),
            });
        }
        dev.materialize()?;
        dev.validate()?;
        Ok(dev)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn topo() -> Topology {
        "4-7-3".parse().unwrap()
    }

    #[test]
    fn sigma_rules() {
        let p = MismatchParams::default();
        assert!((p.sigma_mv(2.7, 0.45) - 3.3 / 6f64.sqrt()).abs() < 1e-12);
        assert!((p.sigma_mv(2.7, 0.45) - 1.347).abs() < 1e-3);
        let q = MismatchParams {
            sigma_rule: SigmaRule::Pelgrom,
            ..p
        };
        assert!((q.sigma_mv(2.7, 0.45) - 3.3 / (2.7f64 * 0.45).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn mirror_gain_doubles_at_nut_ln2() {
        let p = MismatchParams::default();
        let d = p.n_ut() * 2f64.ln();
        assert!((d - 26.876).abs() < 1e-3);
        assert!((p.mirror_gain(d, 0.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_avt_is_homogeneous() {
        let p = MismatchParams {
            a_vt: 0.0,
            ..Default::default()
        };
        let d = VirtualDevice::fabricate(&topo(), 9, &p, &GeometryTable::default()).unwrap();
        assert!(d.delta_vt().iter().flatten().flatten().all(|v| *v == 0.0));
        let prof = d.effective_profile();
        assert!(prof.slopes.iter().flatten().all(|a| *a == 1.0));
        assert!(prof.neg_gains.iter().flatten().all(|g| *g == 1.0));
    }

    #[test]
    fn same_seed_same_device() {
        let g = GeometryTable::default();
        let p = MismatchParams::default();
        let a = VirtualDevice::fabricate(&topo(), 3, &p, &g).unwrap();
        let b = VirtualDevice::fabricate(&topo(), 3, &p, &g).unwrap();
        let c = VirtualDevice::fabricate(&topo(), 4, &p, &g).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        assert_ne!(a.delta_vt(), c.delta_vt());
    }

    #[test]
    fn m3_m4_shift_sets_negative_gain() {
        let p = MismatchParams {
            a_vt: 0.0,
            ..Default::default()
        };
        let mut d = VirtualDevice::fabricate(&topo(), 0, &p, &GeometryTable::default()).unwrap();
        let shift = p.n_ut() * 1.2f64.ln();
        d.set_delta_vt(1, 2, 4, shift);
        let prof = d.effective_profile();
        assert!((prof.neg_gains[1][2] - 1.2).abs() < 1e-12);
        assert_eq!(prof.slopes[1][2], 1.0);
    }

    #[test]
    fn hash_ignores_programming() {
        let mut d = VirtualDevice::fabricate(&topo(), 1, &Default::default(), &Default::default()).unwrap();
        let h = d.hash().unwrap();
        d.programmed = Some(WeightMatrix::zeros(&topo()));
        assert_eq!(d.hash().unwrap(), h);
    }

    #[test]
    fn file_roundtrip_and_regeneration() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dev.json");
        let d = VirtualDevice::fabricate(&topo(), 17, &Default::default(), &Default::default())
            .unwrap()
            .with_synapse_mismatch()
            .unwrap();
        d.save(&path).unwrap();
        assert_eq!(VirtualDevice::load(&path).unwrap(), d);

        let mut bare = d.clone();
        bare.delta_vt = None;
        bare.synapse_delta_vt = None;
        bare.save(&path).unwrap();
        assert_eq!(VirtualDevice::load(&path).unwrap(), d);
    }

    #[test]
    fn synapse_jitter_changes_weights_only_when_enabled() {
        let t = topo();
        let mut codes = WeightMatrix::zeros(&t);
        codes.set(0, 0, 0, crate::netcore::WeightCode::encode(7).unwrap());
        let d = VirtualDevice::fabricate(&t, 2, &Default::default(), &Default::default()).unwrap();
        assert_eq!(d.synapse_weights(&codes).unwrap(), codes.effective());
        let j = d.with_synapse_mismatch().unwrap();
        let w = j.synapse_weights(&codes).unwrap();
        assert_ne!(w.layers[0].get(0, 0), 1.0);
        assert_eq!(w.layers[0].get(0, 1), 0.0);
    }
}
