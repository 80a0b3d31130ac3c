use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One convolution: square kernel, no padding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
}

/// Shape of a `(channels, height, width)` activation volume.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Volume {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl Volume {
    pub fn len(&self) -> usize {
        self.channels * self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spatial(&self) -> usize {
        self.height * self.width
    }
}

/// Three rectified convolutions, a rectified linear layer (F_c), an actor
/// head of `n_actions` logits and a 1-wide value head.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkArch {
    pub input: Volume,
    pub conv_layers: Vec<ConvSpec>,
    pub fc_width: usize,
    pub n_actions: usize,
}

impl Default for NetworkArch {
    fn default() -> Self {
        NetworkArch {
            input: Volume { channels: 4, height: 84, width: 84 },
            conv_layers: vec![
                ConvSpec { out_channels: 32, kernel: 8, stride: 4 },
                ConvSpec { out_channels: 64, kernel: 4, stride: 2 },
                ConvSpec { out_channels: 64, kernel: 3, stride: 1 },
            ],
            fc_width: 512,
            n_actions: 3,
        }
    }
}

/// Name and shape of every parameter tensor, in storage order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
}

impl TensorSpec {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl NetworkArch {
    pub const CONV_LAYERS: usize = 3;

    pub fn validate(&self) -> Result<()> {
        if self.conv_layers.len() != Self::CONV_LAYERS {
            return Err(Error::Config(format!(
                "expected {} convolution layers, got {}",
                Self::CONV_LAYERS,
                self.conv_layers.len()
            )));
        }
        if self.input.is_empty() || self.fc_width == 0 || self.n_actions == 0 {
            return Err(Error::Config("input, fc_width and n_actions must be non-empty".into()));
        }
        let mut v = self.input;
        for (i, c) in self.conv_layers.iter().enumerate() {
            if c.out_channels == 0 || c.kernel == 0 || c.stride == 0 {
                return Err(Error::Config(format!("conv{} has a zero dimension", i + 1)));
            }
            if c.kernel > v.height || c.kernel > v.width {
                return Err(Error::Config(format!(
                    "conv{} kernel {} exceeds its {}x{} input",
                    i + 1,
                    c.kernel,
                    v.height,
                    v.width
                )));
            }
            v = conv_output(v, c);
        }
        Ok(())
    }

    /// Output volume of every convolution, in order.
    pub fn conv_volumes(&self) -> Vec<Volume> {
        let mut v = self.input;
        self.conv_layers
            .iter()
            .map(|c| {
                v = conv_output(v, c);
                v
            })
            .collect()
    }

    /// Input volume of convolution `i`.
    pub fn conv_input(&self, i: usize) -> Volume {
        if i == 0 {
            self.input
        } else {
            self.conv_volumes()[i - 1]
        }
    }

    /// Width of the flattened last convolution output.
    pub fn flat_dim(&self) -> usize {
        self.conv_volumes().last().map_or(self.input.len(), Volume::len)
    }

    pub fn tensor_specs(&self) -> Vec<TensorSpec> {
        let mut specs = Vec::new();
        let mut in_ch = self.input.channels;
        for (i, c) in self.conv_layers.iter().enumerate() {
            specs.push(TensorSpec {
                name: format!("conv{}.weight", i + 1),
                shape: vec![c.out_channels, in_ch, c.kernel, c.kernel],
            });
            specs.push(TensorSpec { name: format!("conv{}.bias", i + 1), shape: vec![c.out_channels] });
            in_ch = c.out_channels;
        }
        let flat = self.flat_dim();
        specs.push(TensorSpec { name: "fc.weight".into(), shape: vec![self.fc_width, flat] });
        specs.push(TensorSpec { name: "fc.bias".into(), shape: vec![self.fc_width] });
        specs.push(TensorSpec { name: "actor.weight".into(), shape: vec![self.n_actions, self.fc_width] });
        specs.push(TensorSpec { name: "actor.bias".into(), shape: vec![self.n_actions] });
        specs.push(TensorSpec { name: "critic.weight".into(), shape: vec![1, self.fc_width] });
        specs.push(TensorSpec { name: "critic.bias".into(), shape: vec![1] });
        specs
    }

    pub fn param_count(&self) -> usize {
        self.tensor_specs().iter().map(TensorSpec::len).sum()
    }
}

/// `floor((n - k) / s) + 1` per spatial axis.
pub fn conv_output(input: Volume, c: &ConvSpec) -> Volume {
    Volume {
        channels: c.out_channels,
        height: (input.height - c.kernel) / c.stride + 1,
        width: (input.width - c.kernel) / c.stride + 1,
    }
}
