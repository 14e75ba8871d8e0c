use serde::{Deserialize, Serialize};

use crate::envs::Image;
use crate::error::{Error, Result};

/// One valid (unpadded) convolution followed by tanh and max pooling.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvLayerSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pool_window: usize,
    pub pool_stride: usize,
}

impl ConvLayerSpec {
    pub fn param_count(&self) -> usize {
        self.in_channels * self.out_channels * self.kernel * self.kernel
    }

    fn output_hw(&self, h: usize, w: usize) -> Option<(usize, usize)> {
        let conv = |n: usize| (n >= self.kernel).then(|| (n - self.kernel) / self.stride + 1);
        let pool = |n: usize| (n >= self.pool_window).then(|| (n - self.pool_window) / self.pool_stride + 1);
        Some((pool(conv(h)?)?, pool(conv(w)?)?))
    }
}

/// Static convolutional frontend. Its parameters are part of the genome but
/// are never touched by the plasticity rule.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvFrontendSpec {
    pub input_channels: usize,
    pub input_height: usize,
    pub input_width: usize,
    pub layers: Vec<ConvLayerSpec>,
}

impl ConvFrontendSpec {
    /// 3x84x84 input; 3->6 3x3 conv, 2x2/2 pool, 6->8 5x5 conv, 4x4/4 pool.
    /// 162 + 1,200 = 1,362 parameters, flattening to 8x9x9 = 648 features.
    pub fn full_vision() -> Self {
        ConvFrontendSpec {
            input_channels: 3,
            input_height: 84,
            input_width: 84,
            layers: vec![
                ConvLayerSpec { in_channels: 3, out_channels: 6, kernel: 3, stride: 1, pool_window: 2, pool_stride: 2 },
                ConvLayerSpec { in_channels: 6, out_channels: 8, kernel: 5, stride: 1, pool_window: 4, pool_stride: 4 },
            ],
        }
    }

    /// 1x16x16 input; 1->4 3x3 conv, 2x2/2 pool, 4->6 3x3 conv, 2x2/2 pool.
    /// Flattens to 6x2x2 = 24 features.
    pub fn desk() -> Self {
        ConvFrontendSpec {
            input_channels: 1,
            input_height: 16,
            input_width: 16,
            layers: vec![
                ConvLayerSpec { in_channels: 1, out_channels: 4, kernel: 3, stride: 1, pool_window: 2, pool_stride: 2 },
                ConvLayerSpec { in_channels: 4, out_channels: 6, kernel: 3, stride: 1, pool_window: 2, pool_stride: 2 },
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Topology("conv frontend has no layers".into()));
        }
        let mut channels = self.input_channels;
        let (mut h, mut w) = (self.input_height, self.input_width);
        for (k, l) in self.layers.iter().enumerate() {
            if l.in_channels != channels {
                return Err(Error::Topology(format!(
                    "conv layer {k} expects {} channels but receives {channels}",
                    l.in_channels
                )));
            }
            if [l.out_channels, l.kernel, l.stride, l.pool_window, l.pool_stride].contains(&0) {
                return Err(Error::Topology(format!("conv layer {k} has a zero size")));
            }
            (h, w) = l
                .output_hw(h, w)
                .ok_or_else(|| Error::Topology(format!("conv layer {k} shrinks the feature map to nothing")))?;
            channels = l.out_channels;
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(ConvLayerSpec::param_count).sum()
    }

    pub fn output_shape(&self) -> (usize, usize, usize) {
        let (mut h, mut w) = (self.input_height, self.input_width);
        let mut c = self.input_channels;
        for l in &self.layers {
            (h, w) = l.output_hw(h, w).unwrap_or((0, 0));
            c = l.out_channels;
        }
        (c, h, w)
    }

    pub fn output_dim(&self) -> usize {
        let (c, h, w) = self.output_shape();
        c * h * w
    }

    /// Runs the frontend, writing flattened `channel, row, col` features to
    /// `out`. Kernels are laid out `[out][in][ky][kx]`, layer after layer.
    pub fn apply(&self, params: &[f64], image: &Image, out: &mut Vec<f64>) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::shape("conv parameters", self.param_count(), params.len()));
        }
        let expected = (self.input_channels, self.input_height, self.input_width);
        let got = (image.channels, image.height, image.width);
        if expected != got {
            return Err(Error::shape("image", format!("{expected:?}"), format!("{got:?}")));
        }
        let mut map = image.data.clone();
        let (mut h, mut w) = (image.height, image.width);
        let mut offset = 0;
        for l in &self.layers {
            let kernels = &params[offset..offset + l.param_count()];
            offset += l.param_count();
            let (conv, ch, cw) = convolve(l, kernels, &map, h, w);
            let (pooled, ph, pw) = max_pool(l, &conv, ch, cw);
            map = pooled;
            h = ph;
            w = pw;
        }
        out.clear();
        out.extend_from_slice(&map);
        Ok(())
    }
}

fn convolve(l: &ConvLayerSpec, kernels: &[f64], input: &[f64], h: usize, w: usize) -> (Vec<f64>, usize, usize) {
    let oh = (h - l.kernel) / l.stride + 1;
    let ow = (w - l.kernel) / l.stride + 1;
    let k = l.kernel;
    let mut out = vec![0.0; l.out_channels * oh * ow];
    for o in 0..l.out_channels {
        for y in 0..oh {
            for x in 0..ow {
                let mut acc = 0.0;
                for c in 0..l.in_channels {
                    let kbase = ((o * l.in_channels) + c) * k * k;
                    let ibase = c * h * w;
                    for ky in 0..k {
                        let row = ibase + (y * l.stride + ky) * w + x * l.stride;
                        let krow = kbase + ky * k;
                        for kx in 0..k {
                            acc += kernels[krow + kx] * input[row + kx];
                        }
                    }
                }
                out[(o * oh + y) * ow + x] = acc.tanh();
            }
        }
    }
    (out, oh, ow)
}

fn max_pool(l: &ConvLayerSpec, input: &[f64], h: usize, w: usize) -> (Vec<f64>, usize, usize) {
    let ph = (h - l.pool_window) / l.pool_stride + 1;
    let pw = (w - l.pool_window) / l.pool_stride + 1;
    let mut out = vec![f64::NEG_INFINITY; l.out_channels * ph * pw];
    for c in 0..l.out_channels {
        for y in 0..ph {
            for x in 0..pw {
                let slot = &mut out[(c * ph + y) * pw + x];
                for dy in 0..l.pool_window {
                    for dx in 0..l.pool_window {
                        let v = input[(c * h + y * l.pool_stride + dy) * w + x * l.pool_stride + dx];
                        *slot = slot.max(v);
                    }
                }
            }
        }
    }
    (out, ph, pw)
}
