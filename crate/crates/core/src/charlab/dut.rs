use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::netcore::{Topology, WeightMatrix};
use crate::vdevice::VirtualDevice;

/// Currents read back after applying an input, nA.
#[derive(Debug, Clone, PartialEq)]
pub struct Readout {
    /// Current flowing into every soma, input layer first.
    pub soma_inputs: Vec<Vec<f64>>,
    /// Output-layer currents.
    pub outputs: Vec<f64>,
}

/// Anything that can be programmed with codes and driven with currents: a
/// simulated device, or a driver for real hardware.
pub trait DeviceUnderTest {
    fn topology(&self) -> &Topology;
    fn program(&mut self, codes: &WeightMatrix) -> Result<()>;
    fn apply_input(&mut self, input: &[f64]) -> Result<Readout>;
}

impl DeviceUnderTest for VirtualDevice {
    fn topology(&self) -> &Topology {
        &self.topology
    }

    fn program(&mut self, codes: &WeightMatrix) -> Result<()> {
        codes.check_shape(&self.topology)?;
        self.programmed = Some(codes.clone());
        Ok(())
    }

    fn apply_input(&mut self, input: &[f64]) -> Result<Readout> {
        let codes = self
            .programmed
            .as_ref()
            .ok_or_else(|| Error::Parameter("device has not been programmed".into()))?;
        let dc = self.dc_solution(codes, input)?;
        let outputs = dc.outputs.last().cloned().unwrap_or_default();
        let soma_inputs = dc
            .soma_inputs
            .into_iter()
            .map(|l| l.into_iter().map(|v| v.max(0.0)).collect())
            .collect();
        Ok(Readout {
            soma_inputs,
            outputs,
        })
    }
}

/// Wraps a device and perturbs every reading by independent multiplicative
/// Gaussian noise, like a bench ammeter.
pub struct NoisyDut<D> {
    inner: D,
    noise: Normal<f64>,
    rng: ChaCha8Rng,
}

impl<D: DeviceUnderTest> NoisyDut<D> {
    pub fn new(inner: D, relative_sigma: f64, seed: u64) -> Result<Self> {
        let noise = Normal::new(0.0, relative_sigma)
            .map_err(|e| Error::Parameter(format!("noise sigma {relative_sigma}: {e}")))?;
        Ok(Self {
            inner,
            noise,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn into_inner(self) -> D {
        self.inner
    }
}

impl<D: DeviceUnderTest> DeviceUnderTest for NoisyDut<D> {
    fn topology(&self) -> &Topology {
        self.inner.topology()
    }

    fn program(&mut self, codes: &WeightMatrix) -> Result<()> {
        self.inner.program(codes)
    }

    fn apply_input(&mut self, input: &[f64]) -> Result<Readout> {
        let mut r = self.inner.apply_input(input)?;
        let (noise, rng) = (&self.noise, &mut self.rng);
        let mut jitter = |v: &mut f64| *v = (*v * (1.0 + noise.sample(rng))).max(0.0);
        // The applied input is known exactly; only measured currents are noisy.
        r.soma_inputs.iter_mut().skip(1).flatten().for_each(&mut jitter);
        r.outputs.iter_mut().for_each(&mut jitter);
        Ok(r)
    }
}
