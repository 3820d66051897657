use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Architecture hyperparameters of the backflow-Jastrow wavefunction.
///
/// `depth == 0` is the bare two-body Jastrow.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnsatzShape {
    pub depth: usize,
    pub channels: usize,
    pub kernel_radius: usize,
    #[serde(default)]
    pub mean_field_prior: bool,
}

impl AnsatzShape {
    pub fn bare_jastrow() -> Self {
        Self {
            depth: 0,
            channels: 0,
            kernel_radius: 0,
            mean_field_prior: false,
        }
    }

    pub fn backflow(depth: usize, channels: usize, kernel_radius: usize) -> Self {
        Self {
            depth,
            channels,
            kernel_radius,
            mean_field_prior: false,
        }
    }

    pub fn has_backflow(&self) -> bool {
        self.depth > 0
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "backflow depth must be even, got {}",
                self.depth
            )));
        }
        if self.depth > 0 && self.channels == 0 {
            return Err(Error::InvalidArgument("backflow needs at least one channel".into()));
        }
        Ok(())
    }

    /// Odd layers from 3 on carry a residual connection and a layer norm.
    pub fn is_residual_layer(layer: usize) -> bool {
        layer >= 3 && layer % 2 == 1
    }

    pub fn n_norms(&self) -> usize {
        if self.depth >= 2 {
            self.depth / 2 - 1
        } else {
            0
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvLayout {
    pub kernel: Range<usize>,
    pub bias: Range<usize>,
    pub in_channels: usize,
    pub out_channels: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormLayout {
    pub gain: Range<usize>,
    pub offset: Range<usize>,
}

/// Positions of every parameter group inside the flat parameter vector:
/// `[jastrow | conv 1 kernel | conv 1 bias | ... | norm gains/offsets | mixing]`.
///
/// Kernels are stored `[filter site][out channel][in channel]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamLayout {
    pub jastrow: Range<usize>,
    pub convs: Vec<ConvLayout>,
    pub norms: Vec<NormLayout>,
    pub mixing: Range<usize>,
    pub filter_sites: usize,
    pub total: usize,
}

impl ParamLayout {
    pub fn new(shape: &AnsatzShape, n_classes: usize, filter_sites: usize) -> Self {
        let mut cursor = 0;
        let mut take = |len: usize| {
            let r = cursor..cursor + len;
            cursor += len;
            r
        };
        let jastrow = take(n_classes);
        let mut convs = Vec::with_capacity(shape.depth);
        for layer in 1..=shape.depth {
            let in_channels = if layer == 1 { 1 } else { shape.channels };
            let out_channels = shape.channels;
            let kernel = take(filter_sites * out_channels * in_channels);
            let bias = take(out_channels);
            convs.push(ConvLayout {
                kernel,
                bias,
                in_channels,
                out_channels,
            });
        }
        let norms = (0..shape.n_norms())
            .map(|_| NormLayout {
                gain: take(shape.channels),
                offset: take(shape.channels),
            })
            .collect();
        let mixing = take(if shape.has_backflow() { shape.channels } else { 0 });
        Self {
            jastrow,
            convs,
            norms,
            mixing,
            filter_sites,
            total: cursor,
        }
    }

    /// Mask selecting the Jastrow weights only.
    pub fn jastrow_mask(&self) -> Vec<bool> {
        (0..self.total).map(|k| self.jastrow.contains(&k)).collect()
    }

    /// Mask selecting every parameter except the Jastrow weights.
    pub fn backflow_mask(&self) -> Vec<bool> {
        (0..self.total).map(|k| !self.jastrow.contains(&k)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_contiguous() {
        let shape = AnsatzShape::backflow(4, 3, 1);
        let l = ParamLayout::new(&shape, 3, 9);
        assert_eq!(l.jastrow, 0..3);
        assert_eq!(l.convs[0].kernel, 3..3 + 27);
        assert_eq!(l.convs[0].bias.len(), 3);
        assert_eq!(l.convs[1].kernel.len(), 81);
        assert_eq!(l.norms.len(), 1);
        assert_eq!(l.mixing.end, l.total);
        let expected = 3 + (27 + 3) + 3 * (81 + 3) + 6 + 3;
        assert_eq!(l.total, expected);
    }

    #[test]
    fn depth_must_be_even() {
        assert!(AnsatzShape::backflow(3, 2, 1).validate().is_err());
        assert!(AnsatzShape::backflow(2, 0, 1).validate().is_err());
        assert!(AnsatzShape::bare_jastrow().validate().is_ok());
    }
}
