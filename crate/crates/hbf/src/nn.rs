//! Dense feed-forward networks with reverse-mode gradients, Adam and soft
//! target updates. Real-valued, double precision throughout; this is the
//! substrate for the actor and critic networks.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use std::io::{self, Read, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("stale forward cache (network was updated after the forward pass)")]
    StaleCache,
    #[error("checkpoint i/o: {0}")]
    Io(#[from] io::Error),
    #[error("checkpoint format: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Rectifier,
    Linear,
}

#[derive(Debug, Clone, Copy)]
pub struct LayerSpec {
    pub input_width: usize,
    pub output_width: usize,
    pub activation: Activation,
}

#[derive(Debug, Clone)]
struct Layer {
    weights: DMatrix<f64>,
    bias: DVector<f64>,
    activation: Activation,
}

/// Per-layer weight matrices and bias vectors.
#[derive(Debug, Clone)]
pub struct NetworkParams {
    layers: Vec<Layer>,
    /// Bumped on every parameter mutation; forward caches pin it.
    revision: u64,
}

/// Gradient (or moment) container shape-matched to a network.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub weights: Vec<DMatrix<f64>>,
    pub biases: Vec<DVector<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &NetworkParams) -> Self {
        Self {
            weights: net.layers.iter().map(|l| DMatrix::zeros(l.weights.nrows(), l.weights.ncols())).collect(),
            biases: net.layers.iter().map(|l| DVector::zeros(l.bias.len())).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            *a += b;
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            *a += b;
        }
    }

    pub fn scale_assign(&mut self, factor: f64) {
        for a in self.weights.iter_mut() {
            *a *= factor;
        }
        for a in self.biases.iter_mut() {
            *a *= factor;
        }
    }
}

/// Cache produced by [`NetworkParams::forward`]; consumed by backward.
pub struct ForwardCache {
    input: DVector<f64>,
    pre_activations: Vec<DVector<f64>>,
    post_activations: Vec<DVector<f64>>,
    revision: u64,
}

fn act(a: Activation, z: &DVector<f64>) -> DVector<f64> {
    match a {
        Activation::Linear => z.clone(),
        Activation::Rectifier => z.map(|x| x.max(0.0)),
    }
}

fn act_grad(a: Activation, z: &DVector<f64>) -> DVector<f64> {
    match a {
        Activation::Linear => DVector::from_element(z.len(), 1.0),
        Activation::Rectifier => z.map(|x| if x > 0.0 { 1.0 } else { 0.0 }),
    }
}

impl NetworkParams {
    /// Builds a network from layer specs with uniform
    /// +-sqrt(6/(fan_in+fan_out)) weight init and zero biases.
    pub fn new<R: Rng + ?Sized>(specs: &[LayerSpec], rng: &mut R) -> Result<Self, NnError> {
        for pair in specs.windows(2) {
            if pair[0].output_width != pair[1].input_width {
                return Err(NnError::ShapeMismatch(format!(
                    "layer output {} feeds layer input {}",
                    pair[0].output_width, pair[1].input_width
                )));
            }
        }
        let layers = specs
            .iter()
            .map(|s| {
                let bound = (6.0 / (s.input_width + s.output_width) as f64).sqrt();
                Layer {
                    weights: DMatrix::from_fn(s.output_width, s.input_width, |_, _| {
                        rng.gen_range(-bound..bound)
                    }),
                    bias: DVector::zeros(s.output_width),
                    activation: s.activation,
                }
            })
            .collect();
        Ok(Self { layers, revision: 0 })
    }

    /// Rectifier hidden layers, linear output.
    pub fn mlp<R: Rng + ?Sized>(widths: &[usize], rng: &mut R) -> Result<Self, NnError> {
        if widths.len() < 2 {
            return Err(NnError::ShapeMismatch("need at least input and output widths".into()));
        }
        let specs: Vec<LayerSpec> = widths
            .windows(2)
            .enumerate()
            .map(|(i, pair)| LayerSpec {
                input_width: pair[0],
                output_width: pair[1],
                activation: if i + 2 == widths.len() {
                    Activation::Linear
                } else {
                    Activation::Rectifier
                },
            })
            .collect();
        Self::new(&specs, rng)
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].weights.ncols()
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().unwrap().weights.nrows()
    }

    pub fn forward(&self, input: &DVector<f64>) -> Result<(DVector<f64>, ForwardCache), NnError> {
        if input.len() != self.input_width() {
            return Err(NnError::ShapeMismatch(format!(
                "input width {} vs network {}",
                input.len(),
                self.input_width()
            )));
        }
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post = Vec::with_capacity(self.layers.len());
        let mut x = input.clone();
        for layer in &self.layers {
            let z = &layer.weights * &x + &layer.bias;
            x = act(layer.activation, &z);
            pre.push(z);
            post.push(x.clone());
        }
        Ok((
            x,
            ForwardCache {
                input: input.clone(),
                pre_activations: pre,
                post_activations: post,
                revision: self.revision,
            },
        ))
    }

    /// Forward pass without a cache.
    pub fn output(&self, input: &DVector<f64>) -> Result<DVector<f64>, NnError> {
        Ok(self.forward(input)?.0)
    }

    /// Exact reverse-mode gradients of the scalar objective whose gradient
    /// w.r.t. the network output is `output_gradient`. Also returns the
    /// gradient w.r.t. the input vector.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        output_gradient: &DVector<f64>,
    ) -> Result<(Gradients, DVector<f64>), NnError> {
        if cache.revision != self.revision {
            return Err(NnError::StaleCache);
        }
        if output_gradient.len() != self.output_width() {
            return Err(NnError::ShapeMismatch(format!(
                "output gradient width {} vs network {}",
                output_gradient.len(),
                self.output_width()
            )));
        }
        let n = self.layers.len();
        let mut grads = Gradients::zeros_like(self);
        let mut delta = output_gradient
            .component_mul(&act_grad(self.layers[n - 1].activation, &cache.pre_activations[n - 1]));
        for l in (0..n).rev() {
            let layer_input = if l == 0 {
                &cache.input
            } else {
                &cache.post_activations[l - 1]
            };
            grads.weights[l] = &delta * layer_input.transpose();
            grads.biases[l] = delta.clone();
            let upstream = self.layers[l].weights.transpose() * &delta;
            if l > 0 {
                delta = upstream
                    .component_mul(&act_grad(self.layers[l - 1].activation, &cache.pre_activations[l - 1]));
            } else {
                return Ok((grads, upstream));
            }
        }
        unreachable!("loop returns at l == 0");
    }

    fn check_shapes(&self, other: &Gradients) -> Result<(), NnError> {
        let ok = self.layers.len() == other.weights.len()
            && self.layers.iter().zip(&other.weights).all(|(l, w)| l.weights.shape() == w.shape())
            && self.layers.iter().zip(&other.biases).all(|(l, b)| l.bias.len() == b.len());
        if ok {
            Ok(())
        } else {
            Err(NnError::ShapeMismatch("gradient shapes do not match network".into()))
        }
    }
}

/// Adam optimizer state: first/second moments, step counter, hyperparameters.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub first_moment: Gradients,
    pub second_moment: Gradients,
    pub step_count: u64,
    pub step_size: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(net: &NetworkParams, step_size: f64) -> Self {
        Self {
            first_moment: Gradients::zeros_like(net),
            second_moment: Gradients::zeros_like(net),
            step_count: 0,
            step_size,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// One Adam step with bias correction; descends along `grads`.
pub fn adam_step(
    net: &mut NetworkParams,
    grads: &Gradients,
    state: &mut AdamState,
) -> Result<(), NnError> {
    net.check_shapes(grads)?;
    state.step_count += 1;
    let t = state.step_count as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);
    let (b1, b2, eps, lr) = (state.beta1, state.beta2, state.epsilon, state.step_size);
    let update =
        |param: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *param -= lr * m_hat / (v_hat.sqrt() + eps);
        };
    for (l, layer) in net.layers.iter_mut().enumerate() {
        for (i, p) in layer.weights.iter_mut().enumerate() {
            update(
                p,
                grads.weights[l][i],
                &mut state.first_moment.weights[l][i],
                &mut state.second_moment.weights[l][i],
            );
        }
        for (i, p) in layer.bias.iter_mut().enumerate() {
            update(
                p,
                grads.biases[l][i],
                &mut state.first_moment.biases[l][i],
                &mut state.second_moment.biases[l][i],
            );
        }
    }
    net.revision += 1;
    Ok(())
}

/// theta' = tau * theta + (1 - tau) * theta', elementwise.
pub fn soft_update(target: &mut NetworkParams, source: &NetworkParams, tau: f64) -> Result<(), NnError> {
    if target.layers.len() != source.layers.len() {
        return Err(NnError::ShapeMismatch("layer count".into()));
    }
    for (t, s) in target.layers.iter_mut().zip(&source.layers) {
        if t.weights.shape() != s.weights.shape() {
            return Err(NnError::ShapeMismatch("weight matrix shape".into()));
        }
        t.weights = &s.weights * tau + &t.weights * (1.0 - tau);
        t.bias = &s.bias * tau + &t.bias * (1.0 - tau);
    }
    target.revision += 1;
    Ok(())
}

const CKPT_MAGIC: &[u8; 4] = b"HBNN";
const CKPT_VERSION: u32 = 1;

impl NetworkParams {
    /// Versioned flat binary checkpoint: shapes header then row-major doubles.
    pub fn write_checkpoint<W: Write>(&self, w: &mut W) -> Result<(), NnError> {
        w.write_all(CKPT_MAGIC)?;
        w.write_all(&CKPT_VERSION.to_le_bytes())?;
        w.write_all(&(self.layers.len() as u32).to_le_bytes())?;
        for l in &self.layers {
            w.write_all(&(l.weights.ncols() as u32).to_le_bytes())?;
            w.write_all(&(l.weights.nrows() as u32).to_le_bytes())?;
            w.write_all(&[match l.activation {
                Activation::Rectifier => 0u8,
                Activation::Linear => 1u8,
            }])?;
        }
        for l in &self.layers {
            for i in 0..l.weights.nrows() {
                for j in 0..l.weights.ncols() {
                    w.write_all(&l.weights[(i, j)].to_le_bytes())?;
                }
            }
            for b in l.bias.iter() {
                w.write_all(&b.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_checkpoint<R: Read>(r: &mut R) -> Result<Self, NnError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != CKPT_MAGIC {
            return Err(NnError::Format("bad magic".into()));
        }
        let mut u32buf = [0u8; 4];
        r.read_exact(&mut u32buf)?;
        let version = u32::from_le_bytes(u32buf);
        if version != CKPT_VERSION {
            return Err(NnError::Format(format!("unsupported version {version}")));
        }
        r.read_exact(&mut u32buf)?;
        let n_layers = u32::from_le_bytes(u32buf) as usize;
        if n_layers == 0 || n_layers > 1024 {
            return Err(NnError::Format("implausible layer count".into()));
        }
        let mut specs = Vec::with_capacity(n_layers);
        for _ in 0..n_layers {
            r.read_exact(&mut u32buf)?;
            let input = u32::from_le_bytes(u32buf) as usize;
            r.read_exact(&mut u32buf)?;
            let output = u32::from_le_bytes(u32buf) as usize;
            let mut a = [0u8; 1];
            r.read_exact(&mut a)?;
            let activation = match a[0] {
                0 => Activation::Rectifier,
                1 => Activation::Linear,
                x => return Err(NnError::Format(format!("unknown activation tag {x}"))),
            };
            specs.push(LayerSpec {
                input_width: input,
                output_width: output,
                activation,
            });
        }
        let mut f64buf = [0u8; 8];
        let mut layers = Vec::with_capacity(n_layers);
        for s in &specs {
            let mut weights = DMatrix::zeros(s.output_width, s.input_width);
            for i in 0..s.output_width {
                for j in 0..s.input_width {
                    r.read_exact(&mut f64buf)?;
                    weights[(i, j)] = f64::from_le_bytes(f64buf);
                }
            }
            let mut bias = DVector::zeros(s.output_width);
            for i in 0..s.output_width {
                r.read_exact(&mut f64buf)?;
                bias[i] = f64::from_le_bytes(f64buf);
            }
            layers.push(Layer {
                weights,
                bias,
                activation: s.activation,
            });
        }
        Ok(Self { layers, revision: 0 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn zero_network_outputs_zero() {
        let mut net = NetworkParams::mlp(&[3, 4, 2], &mut rng(0)).unwrap();
        for l in net.layers.iter_mut() {
            l.weights.fill(0.0);
            l.bias.fill(0.0);
        }
        let out = net.output(&DVector::from_vec(vec![1.0, -2.0, 3.0])).unwrap();
        assert!(out.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn identity_linear_layer() {
        let mut net = NetworkParams::new(
            &[LayerSpec {
                input_width: 3,
                output_width: 3,
                activation: Activation::Linear,
            }],
            &mut rng(1),
        )
        .unwrap();
        net.layers[0].weights = DMatrix::identity(3, 3);
        net.layers[0].bias.fill(0.0);
        let x = DVector::from_vec(vec![0.5, -1.5, 2.0]);
        let out = net.output(&x).unwrap();
        assert_eq!(out, x);
    }

    #[test]
    fn forward_matches_straight_line_evaluation() {
        let net = NetworkParams::mlp(&[4, 5, 3], &mut rng(2)).unwrap();
        let x = DVector::from_fn(4, |i, _| 0.3 * i as f64 - 0.5);
        let (out, _) = net.forward(&x).unwrap();
        // independent duplicate evaluation
        let l0 = &net.layers[0];
        let z0 = &l0.weights * &x + &l0.bias;
        let a0 = z0.map(|v| v.max(0.0));
        let l1 = &net.layers[1];
        let z1 = &l1.weights * &a0 + &l1.bias;
        assert!((out - z1).norm() < 1e-15);
    }

    #[test]
    fn forward_deterministic() {
        let net = NetworkParams::mlp(&[4, 8, 2], &mut rng(3)).unwrap();
        let x = DVector::from_fn(4, |i, _| i as f64);
        let a = net.output(&x).unwrap();
        let b = net.output(&x).unwrap();
        assert_eq!(a, b);
    }

    fn finite_difference_check(widths: &[usize], seed: u64) -> f64 {
        let mut net = NetworkParams::mlp(widths, &mut rng(seed)).unwrap();
        let mut r = rng(seed ^ 0xabcd);
        let x = DVector::from_fn(widths[0], |_, _| r.gen_range(-1.0..1.0));
        // scalar objective: weighted sum of outputs
        let w_out = DVector::from_fn(*widths.last().unwrap(), |_, _| r.gen_range(-1.0..1.0));
        let (out, cache) = net.forward(&x).unwrap();
        let _ = out;
        let (grads, input_grad) = net.backward(&cache, &w_out).unwrap();
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        let eval = |net: &NetworkParams, x: &DVector<f64>| -> f64 {
            net.output(x).unwrap().dot(&w_out)
        };
        // sample a subset of parameters per layer
        for l in 0..net.layers.len() {
            let n = net.layers[l].weights.len();
            for idx in (0..n).step_by((n / 20).max(1)) {
                let orig = net.layers[l].weights[idx];
                net.layers[l].weights[idx] = orig + h;
                let fp = eval(&net, &x);
                net.layers[l].weights[idx] = orig - h;
                let fm = eval(&net, &x);
                net.layers[l].weights[idx] = orig;
                let num = (fp - fm) / (2.0 * h);
                let ana = grads.weights[l][idx];
                let denom = num.abs().max(ana.abs()).max(1e-4);
                worst = worst.max((num - ana).abs() / denom);
            }
        }
        // input gradient
        let mut xv = x.clone();
        for i in 0..xv.len() {
            let orig = xv[i];
            xv[i] = orig + h;
            let fp = eval(&net, &xv);
            xv[i] = orig - h;
            let fm = eval(&net, &xv);
            xv[i] = orig;
            let num = (fp - fm) / (2.0 * h);
            let ana = input_grad[i];
            let denom = num.abs().max(ana.abs()).max(1e-4);
            worst = worst.max((num - ana).abs() / denom);
        }
        worst
    }

    #[test]
    fn gradients_match_finite_differences() {
        for (i, widths) in [&[4, 8, 6, 4][..], &[10, 16, 1][..], &[3, 3][..]].iter().enumerate() {
            let err = finite_difference_check(widths, 100 + i as u64);
            assert!(err < 1e-6, "widths {widths:?}: max rel err {err}");
        }
    }

    #[test]
    fn zero_output_gradient_gives_zero_grads() {
        let net = NetworkParams::mlp(&[4, 6, 3], &mut rng(4)).unwrap();
        let x = DVector::from_element(4, 0.7);
        let (_, cache) = net.forward(&x).unwrap();
        let (grads, input_grad) = net.backward(&cache, &DVector::zeros(3)).unwrap();
        assert!(input_grad.norm() == 0.0);
        for g in &grads.weights {
            assert!(g.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn linear_layer_gradient_hand_derived() {
        // f = ||W x||^2 / with output gradient 2 W x: dW = 2 (W x) x^T
        let mut net = NetworkParams::new(
            &[LayerSpec {
                input_width: 2,
                output_width: 2,
                activation: Activation::Linear,
            }],
            &mut rng(5),
        )
        .unwrap();
        net.layers[0].bias.fill(0.0);
        let x = DVector::from_vec(vec![1.0, 2.0]);
        let (out, cache) = net.forward(&x).unwrap();
        let og = out.scale(2.0);
        let (grads, _) = net.backward(&cache, &og).unwrap();
        let expected = out.scale(2.0) * x.transpose();
        assert!((&grads.weights[0] - expected).norm() < 1e-14);
    }

    #[test]
    fn stale_cache_rejected() {
        let mut net = NetworkParams::mlp(&[2, 3, 1], &mut rng(6)).unwrap();
        let x = DVector::from_element(2, 1.0);
        let (_, cache) = net.forward(&x).unwrap();
        let grads = Gradients::zeros_like(&net);
        let mut adam = AdamState::new(&net, 0.001);
        adam_step(&mut net, &grads, &mut adam).unwrap();
        assert!(matches!(
            net.backward(&cache, &DVector::zeros(1)),
            Err(NnError::StaleCache)
        ));
    }

    #[test]
    fn adam_first_step_is_lr() {
        let mut net = NetworkParams::mlp(&[2, 2], &mut rng(7)).unwrap();
        let before = net.layers[0].weights.clone();
        let mut grads = Gradients::zeros_like(&net);
        for g in grads.weights.iter_mut() {
            g.fill(1.0);
        }
        for g in grads.biases.iter_mut() {
            g.fill(1.0);
        }
        let mut adam = AdamState::new(&net, 0.001);
        adam_step(&mut net, &grads, &mut adam).unwrap();
        let delta = &net.layers[0].weights - &before;
        for d in delta.iter() {
            assert!((d + 0.001).abs() < 1e-10, "first step {d}");
        }
    }

    #[test]
    fn adam_zero_gradient_no_change() {
        let mut net = NetworkParams::mlp(&[2, 2], &mut rng(8)).unwrap();
        let before = net.layers[0].weights.clone();
        let grads = Gradients::zeros_like(&net);
        let mut adam = AdamState::new(&net, 0.001);
        for _ in 0..5 {
            adam_step(&mut net, &grads, &mut adam).unwrap();
        }
        assert_eq!(net.layers[0].weights, before);
    }

    #[test]
    fn adam_descends_quadratic_bowl() {
        // single linear 1x1 layer, objective (w x - 1)^2 at x = 1
        let mut net = NetworkParams::new(
            &[LayerSpec {
                input_width: 1,
                output_width: 1,
                activation: Activation::Linear,
            }],
            &mut rng(9),
        )
        .unwrap();
        net.layers[0].weights[(0, 0)] = 3.0;
        net.layers[0].bias[0] = 0.0;
        let x = DVector::from_element(1, 1.0);
        let mut adam = AdamState::new(&net, 0.01);
        let initial = (3.0f64 - 1.0).powi(2);
        let mut prev = f64::INFINITY;
        for _ in 0..100 {
            let (out, cache) = net.forward(&x).unwrap();
            let loss = (out[0] - 1.0).powi(2);
            assert!(loss <= prev + 1e-12, "loss {loss} rose from {prev}");
            prev = loss;
            let og = DVector::from_element(1, 2.0 * (out[0] - 1.0));
            let (grads, _) = net.backward(&cache, &og).unwrap();
            adam_step(&mut net, &grads, &mut adam).unwrap();
        }
        assert!(prev < initial / 2.0);
    }

    #[test]
    fn soft_update_formula() {
        let src = NetworkParams::mlp(&[2, 3, 1], &mut rng(10)).unwrap();
        let mut tgt = src.clone();
        for l in tgt.layers.iter_mut() {
            l.weights.fill(0.0);
            l.bias.fill(0.0);
        }
        // tau = 1: copy
        let mut full = tgt.clone();
        soft_update(&mut full, &src, 1.0).unwrap();
        assert_eq!(full.layers[0].weights, src.layers[0].weights);
        // tau = 0.001 from zero target: 0.001 * source
        soft_update(&mut tgt, &src, 0.001).unwrap();
        let d = (&tgt.layers[0].weights - &src.layers[0].weights * 0.001).norm();
        assert!(d < 1e-15);
    }

    #[test]
    fn repeated_soft_update_converges_geometrically() {
        let src = NetworkParams::mlp(&[2, 2], &mut rng(11)).unwrap();
        let mut tgt = src.clone();
        for l in tgt.layers.iter_mut() {
            l.weights.fill(0.0);
            l.bias.fill(0.0);
        }
        let tau = 0.1;
        let mut prev_gap = src.layers[0].weights.norm();
        for _ in 0..20 {
            soft_update(&mut tgt, &src, tau).unwrap();
            let gap = (&src.layers[0].weights - &tgt.layers[0].weights).norm();
            assert!((gap - prev_gap * (1.0 - tau)).abs() < 1e-12);
            prev_gap = gap;
        }
    }

    #[test]
    fn checkpoint_round_trip_bit_exact() {
        let net = NetworkParams::mlp(&[5, 7, 3], &mut rng(12)).unwrap();
        let mut buf = Vec::new();
        net.write_checkpoint(&mut buf).unwrap();
        let back = NetworkParams::read_checkpoint(&mut buf.as_slice()).unwrap();
        for (a, b) in net.layers.iter().zip(&back.layers) {
            assert_eq!(a.weights, b.weights);
            assert_eq!(a.bias, b.bias);
            assert_eq!(a.activation, b.activation);
        }
    }

    #[test]
    fn mismatched_input_rejected() {
        let net = NetworkParams::mlp(&[3, 2], &mut rng(13)).unwrap();
        assert!(matches!(
            net.output(&DVector::zeros(4)),
            Err(NnError::ShapeMismatch(_))
        ));
    }
}
