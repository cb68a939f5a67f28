use crate::error::{Error, Result};

/// All CRF parameters in one flat buffer.
///
/// Layout: state weights (feature-major, `F × L`), then transitions
/// (`from × to`, `L × L`), then the `L` sequence-start weights, then the `L`
/// sequence-end weights. The optimizer works on [`Weights::values`] directly.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    num_features: usize,
    num_labels: usize,
    values: Vec<f64>,
}

impl Weights {
    pub fn zeros(num_features: usize, num_labels: usize) -> Self {
        let len = Self::param_count(num_features, num_labels);
        Weights {
            num_features,
            num_labels,
            values: vec![0.0; len],
        }
    }

    pub fn param_count(num_features: usize, num_labels: usize) -> usize {
        num_features * num_labels + num_labels * num_labels + 2 * num_labels
    }

    pub fn from_values(num_features: usize, num_labels: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != Self::param_count(num_features, num_labels) {
            return Err(Error::InvalidArgument(format!(
                "expected {} parameters for F={num_features}, L={num_labels}, got {}",
                Self::param_count(num_features, num_labels),
                values.len()
            )));
        }
        Ok(Weights {
            num_features,
            num_labels,
            values,
        })
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    fn trans_start(&self) -> usize {
        self.num_features * self.num_labels
    }

    fn bos_start(&self) -> usize {
        self.trans_start() + self.num_labels * self.num_labels
    }

    fn eos_start(&self) -> usize {
        self.bos_start() + self.num_labels
    }

    pub fn state(&self) -> &[f64] {
        &self.values[..self.trans_start()]
    }

    pub fn state_mut(&mut self) -> &mut [f64] {
        let end = self.trans_start();
        &mut self.values[..end]
    }

    /// State weights of one feature, indexed by label.
    pub fn state_row(&self, feature: u32) -> &[f64] {
        let start = feature as usize * self.num_labels;
        &self.values[start..start + self.num_labels]
    }

    pub fn trans(&self) -> &[f64] {
        &self.values[self.trans_start()..self.bos_start()]
    }

    pub fn trans_mut(&mut self) -> &mut [f64] {
        let (a, b) = (self.trans_start(), self.bos_start());
        &mut self.values[a..b]
    }

    #[inline]
    pub fn transition(&self, from: usize, to: usize) -> f64 {
        self.values[self.trans_start() + from * self.num_labels + to]
    }

    pub fn bos(&self) -> &[f64] {
        &self.values[self.bos_start()..self.eos_start()]
    }

    pub fn bos_mut(&mut self) -> &mut [f64] {
        let (a, b) = (self.bos_start(), self.eos_start());
        &mut self.values[a..b]
    }

    pub fn eos(&self) -> &[f64] {
        &self.values[self.eos_start()..]
    }

    pub fn eos_mut(&mut self) -> &mut [f64] {
        let a = self.eos_start();
        &mut self.values[a..]
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}
