//! Three-layer convolutional policy over full-map traffic observations.
//!
//! Layers are conv3x3 -> conv1x1 -> conv1x1, all stride 1 with zero padding,
//! each followed by an affine batch norm (fixed unit statistics). ReLU
//! follows the first two; the last layer is linear and its output is lifted
//! to `max(out, 0) + WEIGHT_FLOOR`.
//!
//! Parameter layout, per layer: kernel `[out][in][kh][kw]`, bias `[out]`,
//! batch-norm scale `[out]`, batch-norm shift `[out]`.

use crate::error::{Error, Result};
use crate::guidance::{WeightTensor, WEIGHT_FLOOR};

use super::GuidancePolicy;

const IN_CHANNELS: usize = 6;
const OUT_CHANNELS: usize = 5;

/// Past edge usage per outgoing direction (Right, Up, Left, Down, self)
/// and the number of current goals per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficObservation {
    pub height: usize,
    pub width: usize,
    /// `(5, height, width)`
    pub edge_usage: Vec<f64>,
    /// `(height, width)`
    pub task_map: Vec<f64>,
}

impl TrafficObservation {
    pub fn zeros(height: usize, width: usize) -> Self {
        TrafficObservation {
            height,
            width,
            edge_usage: vec![0.0; 5 * height * width],
            task_map: vec![0.0; height * width],
        }
    }

    /// Channel-stacked `(6, h, w)` input, each channel min-max normalized.
    pub fn normalized(&self) -> Vec<f64> {
        let plane = self.height * self.width;
        let mut out = Vec::with_capacity(IN_CHANNELS * plane);
        out.extend_from_slice(&self.edge_usage);
        out.extend_from_slice(&self.task_map);
        for ch in out.chunks_mut(plane) {
            normalize_channel(ch);
        }
        out
    }
}

/// Min-max scaling into `[0, 1]`; a constant channel becomes all zeros.
pub fn normalize_channel(values: &mut [f64]) {
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let span = hi - lo;
    if !(span > 0.0) || !span.is_finite() {
        values.fill(0.0);
        return;
    }
    for x in values {
        *x = (*x - lo) / span;
    }
}

pub fn cnn_param_count([c1, c2]: [usize; 2]) -> usize {
    let layer = |cin: usize, cout: usize, k: usize| cout * cin * k * k + 3 * cout;
    layer(IN_CHANNELS, c1, 3) + layer(c1, c2, 1) + layer(c2, OUT_CHANNELS, 1)
}

struct Layer<'a> {
    kernel: &'a [f64],
    bias: &'a [f64],
    scale: &'a [f64],
    shift: &'a [f64],
}

fn split_layer(theta: &[f64], cin: usize, cout: usize, k: usize) -> (Layer<'_>, &[f64]) {
    let (kernel, rest) = theta.split_at(cout * cin * k * k);
    let (bias, rest) = rest.split_at(cout);
    let (scale, rest) = rest.split_at(cout);
    let (shift, rest) = rest.split_at(cout);
    (Layer { kernel, bias, scale, shift }, rest)
}

fn conv3x3(input: &[f64], cin: usize, h: usize, w: usize, layer: &Layer<'_>, cout: usize) -> Vec<f64> {
    let plane = h * w;
    let mut out = vec![0.0; cout * plane];
    for o in 0..cout {
        let dst = &mut out[o * plane..(o + 1) * plane];
        dst.fill(layer.bias[o]);
        for i in 0..cin {
            let src = &input[i * plane..(i + 1) * plane];
            for ky in 0..3 {
                for kx in 0..3 {
                    let wgt = layer.kernel[((o * cin + i) * 3 + ky) * 3 + kx];
                    if wgt == 0.0 {
                        continue;
                    }
                    let (dy, dx) = (ky as isize - 1, kx as isize - 1);
                    let r0 = (-dy).max(0) as usize;
                    let r1 = (h as isize - dy.max(0)) as usize;
                    let c0 = (-dx).max(0) as usize;
                    let c1 = (w as isize - dx.max(0)) as usize;
                    for r in r0..r1 {
                        let sr = (r as isize + dy) as usize;
                        let d = &mut dst[r * w + c0..r * w + c1];
                        let s = &src[sr * w + (c0 as isize + dx) as usize..sr * w + (c1 as isize + dx) as usize];
                        for (a, b) in d.iter_mut().zip(s) {
                            *a += wgt * b;
                        }
                    }
                }
            }
        }
    }
    out
}

fn conv1x1(input: &[f64], cin: usize, plane: usize, layer: &Layer<'_>, cout: usize) -> Vec<f64> {
    let mut out = vec![0.0; cout * plane];
    for o in 0..cout {
        let dst = &mut out[o * plane..(o + 1) * plane];
        dst.fill(layer.bias[o]);
        for i in 0..cin {
            let wgt = layer.kernel[o * cin + i];
            if wgt == 0.0 {
                continue;
            }
            for (a, b) in dst.iter_mut().zip(&input[i * plane..(i + 1) * plane]) {
                *a += wgt * b;
            }
        }
    }
    out
}

fn batch_norm(values: &mut [f64], plane: usize, layer: &Layer<'_>, relu: bool) {
    for (o, ch) in values.chunks_mut(plane).enumerate() {
        let (g, b) = (layer.scale[o], layer.shift[o]);
        for x in ch {
            let y = g * *x + b;
            *x = if relu { y.max(0.0) } else { y };
        }
    }
}

/// Raw (pre-floor) network output of shape `(5, h, w)`.
pub(crate) fn cnn_raw(policy: &GuidancePolicy, obs: &TrafficObservation) -> Result<Vec<f64>> {
    policy.expect_arch("cnn")?;
    let super::Arch::Cnn { hidden: [c1, c2] } = policy.arch else { unreachable!() };
    let (h, w) = (obs.height, obs.width);
    let plane = h * w;
    if obs.edge_usage.len() != 5 * plane || obs.task_map.len() != plane {
        return Err(Error::ShapeMismatch {
            expected: vec![IN_CHANNELS, h, w],
            got: vec![obs.edge_usage.len() / plane.max(1) + obs.task_map.len() / plane.max(1), h, w],
        });
    }
    let input = obs.normalized();
    let (l1, rest) = split_layer(&policy.theta, IN_CHANNELS, c1, 3);
    let (l2, rest) = split_layer(rest, c1, c2, 1);
    let (l3, _) = split_layer(rest, c2, OUT_CHANNELS, 1);

    let mut x = conv3x3(&input, IN_CHANNELS, h, w, &l1, c1);
    batch_norm(&mut x, plane, &l1, true);
    let mut x = conv1x1(&x, c1, plane, &l2, c2);
    batch_norm(&mut x, plane, &l2, true);
    let mut x = conv1x1(&x, c2, plane, &l3, OUT_CHANNELS);
    batch_norm(&mut x, plane, &l3, false);
    Ok(x)
}

/// Edge weights `(5, h, w)`, each `max(out, 0) + WEIGHT_FLOOR`.
pub fn cnn_forward(policy: &GuidancePolicy, obs: &TrafficObservation) -> Result<WeightTensor> {
    let raw = cnn_raw(policy, obs)?;
    Ok(WeightTensor {
        channels: OUT_CHANNELS,
        height: obs.height,
        width: obs.width,
        data: raw.into_iter().map(|x| x.max(0.0) + WEIGHT_FLOOR).collect(),
    })
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::policy::{Arch, GuidancePolicy};

    fn random_policy(hidden: [usize; 2], seed: u64) -> GuidancePolicy {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let arch = Arch::Cnn { hidden };
        let n = arch.num_params();
        GuidancePolicy::new(arch, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn counts() {
        assert_eq!(cnn_param_count([32, 32]), 3119);
        assert_eq!(cnn_param_count([40, 16]), 3063);
    }

    #[test]
    fn zero_theta_gives_floor() {
        let p = GuidancePolicy::zeros(Arch::cnn());
        let mut obs = TrafficObservation::zeros(4, 5);
        obs.edge_usage[3] = 7.0;
        obs.task_map[2] = 1.0;
        let out = cnn_forward(&p, &obs).unwrap();
        assert!(out.data.iter().all(|&x| x == WEIGHT_FLOOR));
    }

    #[test]
    fn normalization() {
        let mut v = vec![2.0, 4.0, 3.0];
        normalize_channel(&mut v);
        assert_eq!(v, vec![0.0, 1.0, 0.5]);
        let mut c = vec![5.0; 4];
        normalize_channel(&mut c);
        assert_eq!(c, vec![0.0; 4]);
    }

    #[test]
    fn translation_equivariance_in_interior() {
        let (h, w) = (9, 12);
        let p = random_policy([8, 6], 4);
        let mut a = TrafficObservation::zeros(h, w);
        let mut b = TrafficObservation::zeros(h, w);
        // compact support around (4, 4), shifted one column right in b
        let bump = [(4usize, 4usize, 3.0), (4, 5, 1.0), (3, 4, 2.0), (5, 3, 4.0)];
        for &(r, c, val) in &bump {
            for ch in 0..5 {
                a.edge_usage[(ch * h + r) * w + c] = val * (ch + 1) as f64;
                b.edge_usage[(ch * h + r) * w + c + 1] = val * (ch + 1) as f64;
            }
            a.task_map[r * w + c] = val;
            b.task_map[r * w + c + 1] = val;
        }
        let ya = cnn_raw(&p, &a).unwrap();
        let yb = cnn_raw(&p, &b).unwrap();
        for ch in 0..5 {
            for r in 1..h - 1 {
                for c in 1..w - 2 {
                    let va = ya[(ch * h + r) * w + c];
                    let vb = yb[(ch * h + r) * w + c + 1];
                    assert!((va - vb).abs() < 1e-12, "ch {ch} ({r},{c}): {va} vs {vb}");
                }
            }
        }
    }

    #[test]
    fn deterministic_and_shape_checked() {
        let p = random_policy([32, 32], 1);
        let mut obs = TrafficObservation::zeros(6, 7);
        for (i, x) in obs.edge_usage.iter_mut().enumerate() {
            *x = (i % 5) as f64;
        }
        assert_eq!(cnn_forward(&p, &obs).unwrap(), cnn_forward(&p, &obs).unwrap());
        obs.task_map.pop();
        assert!(cnn_forward(&p, &obs).is_err());
        assert!(cnn_forward(&GuidancePolicy::hm(), &TrafficObservation::zeros(2, 2)).is_err());
    }
}
