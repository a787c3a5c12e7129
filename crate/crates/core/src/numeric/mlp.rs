//! The filter network `f`: a chain of affine layers with per-layer activation.
//!
//! Evaluation is batched: one row per relation. Single-vector evaluation is a
//! one-row batch, so both paths produce bit-identical results. Gradients for
//! weights are accumulated over rows in ascending row order.

use rand::Rng;
use rand_distr::{Distribution, Uniform};

use super::matrix::Matrix;
use super::{Activation, ParameterCount};
use crate::{Error, Real, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AffineLayer<T> {
    /// out × in
    pub weight: Matrix<T>,
    pub bias: Vec<T>,
    pub activation: Activation,
}

impl<T: Real> AffineLayer<T> {
    pub fn new(weight: Matrix<T>, bias: Vec<T>, activation: Activation) -> Result<Self> {
        if bias.len() != weight.rows() {
            return Err(Error::shape(format!(
                "bias length {} != weight rows {}",
                bias.len(),
                weight.rows()
            )));
        }
        activation.validate()?;
        Ok(AffineLayer { weight, bias, activation })
    }

    /// Uniform on ±sqrt(6 / fan_in), zero bias.
    pub fn random<R: Rng + ?Sized>(
        input: usize,
        output: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        if input == 0 || output == 0 {
            return Err(Error::InvalidArgument(format!("affine layer {input}->{output} has a zero width")));
        }
        let limit = (6.0 / input as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit).expect("finite bounds");
        let data = (0..input * output).map(|_| T::of(dist.sample(rng))).collect();
        Self::new(Matrix::from_vec(output, input, data)?, vec![T::zero(); output], activation)
    }

    pub fn zeros(input: usize, output: usize, activation: Activation) -> Self {
        AffineLayer { weight: Matrix::zeros(output, input), bias: vec![T::zero(); output], activation }
    }

    pub fn input_width(&self) -> usize {
        self.weight.cols()
    }

    pub fn output_width(&self) -> usize {
        self.weight.rows()
    }
}

/// Cached per-layer inputs and pre-activations of one batched forward pass.
#[derive(Debug, Clone)]
pub struct BatchTrace<T> {
    inputs: Vec<Matrix<T>>,
    pre: Vec<Matrix<T>>,
}

impl<T: Real> BatchTrace<T> {
    pub fn rows(&self) -> usize {
        self.inputs.first().map_or(0, Matrix::rows)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads<T> {
    pub weight: Matrix<T>,
    pub bias: Vec<T>,
}

/// Gradients with the same layout as a [`FilterNetwork`]'s parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGrads<T> {
    pub layers: Vec<LayerGrads<T>>,
}

impl<T: Real> NetworkGrads<T> {
    pub fn zeros_like(net: &FilterNetwork<T>) -> Self {
        NetworkGrads {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGrads {
                    weight: Matrix::zeros(l.weight.rows(), l.weight.cols()),
                    bias: vec![T::zero(); l.bias.len()],
                })
                .collect(),
        }
    }

    /// Appends in parameter order: per layer, weights row-major then bias.
    pub fn flatten_into(&self, out: &mut Vec<T>) {
        for l in &self.layers {
            out.extend_from_slice(l.weight.as_slice());
            out.extend_from_slice(&l.bias);
        }
    }

    pub fn flatten(&self) -> Vec<T> {
        let mut v = Vec::new();
        self.flatten_into(&mut v);
        v
    }

    pub fn is_zero(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.as_slice().iter().chain(&l.bias).all(|x| *x == T::zero()))
    }
}

#[derive(Debug, Clone)]
pub struct FilterNetwork<T> {
    layers: Vec<AffineLayer<T>>,
    cache: Option<BatchTrace<T>>,
}

impl<T: Real> PartialEq for FilterNetwork<T> {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers
    }
}

impl<T: Real> FilterNetwork<T> {
    pub fn from_layers(layers: Vec<AffineLayer<T>>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidArgument("filter network needs at least one layer".into()));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].output_width() != pair[1].input_width() {
                return Err(Error::shape(format!(
                    "layer {i} outputs {} but layer {} expects {}",
                    pair[0].output_width(),
                    i + 1,
                    pair[1].input_width()
                )));
            }
        }
        Ok(FilterNetwork { layers, cache: None })
    }

    /// Randomly initialised chain `widths[0] → … → widths[n]`: `hidden`
    /// activation between layers, `output` on the last one.
    pub fn random<R: Rng + ?Sized>(
        widths: &[usize],
        hidden: Activation,
        output: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        Self::build(widths, hidden, output, |i, o, a| AffineLayer::random(i, o, a, rng))
    }

    pub fn zeros(widths: &[usize], hidden: Activation, output: Activation) -> Result<Self> {
        Self::build(widths, hidden, output, |i, o, a| Ok(AffineLayer::zeros(i, o, a)))
    }

    fn build(
        widths: &[usize],
        hidden: Activation,
        output: Activation,
        mut make: impl FnMut(usize, usize, Activation) -> Result<AffineLayer<T>>,
    ) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::InvalidArgument(format!("need at least two widths, got {widths:?}")));
        }
        if widths.contains(&0) {
            return Err(Error::InvalidArgument(format!("zero width in {widths:?}")));
        }
        let last = widths.len() - 2;
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| make(w[0], w[1], if i == last { output } else { hidden }))
            .collect::<Result<Vec<_>>>()?;
        Self::from_layers(layers)
    }

    pub fn layers(&self) -> &[AffineLayer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [AffineLayer<T>] {
        self.cache = None;
        &mut self.layers
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].input_width()
    }

    pub fn output_width(&self) -> usize {
        self.layers[self.layers.len() - 1].output_width()
    }

    /// Widths `[in, hidden…, out]`.
    pub fn widths(&self) -> Vec<usize> {
        std::iter::once(self.input_width()).chain(self.layers.iter().map(|l| l.output_width())).collect()
    }

    /// Evaluates every row of `input` and returns the outputs plus the trace
    /// needed by [`FilterNetwork::backward_batch`].
    pub fn forward_batch(&self, input: &Matrix<T>) -> Result<(Matrix<T>, BatchTrace<T>)> {
        if input.cols() != self.input_width() {
            return Err(Error::shape(format!(
                "filter expects {} inputs, got {}",
                self.input_width(),
                input.cols()
            )));
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut x = input.clone();
        for layer in &self.layers {
            let mut z = x.matmul_transposed(&layer.weight)?;
            for r in 0..z.rows() {
                for (v, &b) in z.row_mut(r).iter_mut().zip(&layer.bias) {
                    *v += b;
                }
            }
            let a = z.map(|v| layer.activation.apply(v));
            inputs.push(x);
            pre.push(z);
            x = a;
        }
        Ok((x, BatchTrace { inputs, pre }))
    }

    /// Outputs only; no trace kept.
    pub fn eval_batch(&self, input: &Matrix<T>) -> Result<Matrix<T>> {
        self.forward_batch(input).map(|(out, _)| out)
    }

    /// Reverse pass over a batch. Parameter gradients are added into `grads`;
    /// the gradient with respect to every input row is returned.
    pub fn backward_batch(
        &self,
        trace: &BatchTrace<T>,
        upstream: &Matrix<T>,
        grads: &mut NetworkGrads<T>,
    ) -> Result<Matrix<T>> {
        let rows = trace.rows();
        if upstream.rows() != rows || upstream.cols() != self.output_width() {
            return Err(Error::shape(format!(
                "upstream gradient {}x{} vs forward batch {}x{}",
                upstream.rows(),
                upstream.cols(),
                rows,
                self.output_width()
            )));
        }
        if grads.layers.len() != self.layers.len() {
            return Err(Error::shape("gradient buffer does not match network".to_string()));
        }
        let mut delta = upstream.clone();
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let z = &trace.pre[l];
            let x = &trace.inputs[l];
            let out_w = layer.output_width();
            let in_w = layer.input_width();
            for r in 0..rows {
                for (d, &zv) in delta.row_mut(r).iter_mut().zip(z.row(r)) {
                    *d *= layer.activation.derivative(zv);
                }
            }
            let g = &mut grads.layers[l];
            for r in 0..rows {
                let dr = delta.row(r);
                let xr = x.row(r);
                for o in 0..out_w {
                    let d = dr[o];
                    g.bias[o] += d;
                    for (gw, &xv) in g.weight.row_mut(o).iter_mut().zip(xr) {
                        *gw += d * xv;
                    }
                }
            }
            let mut next = Matrix::zeros(rows, in_w);
            for r in 0..rows {
                let dr = delta.row(r);
                let dst = next.row_mut(r);
                for (o, &d) in dr.iter().enumerate() {
                    for (nx, &w) in dst.iter_mut().zip(layer.weight.row(o)) {
                        *nx += d * w;
                    }
                }
            }
            delta = next;
        }
        Ok(delta)
    }

    /// Single-input forward; caches the trace for [`FilterNetwork::backward`].
    pub fn forward(&mut self, input: &[T]) -> Result<Vec<T>> {
        let (out, trace) = self.forward_batch(&Matrix::row_vector(input))?;
        self.cache = Some(trace);
        Ok(out.into_vec())
    }

    /// Single-input forward without touching the cache.
    pub fn eval(&self, input: &[T]) -> Result<Vec<T>> {
        Ok(self.eval_batch(&Matrix::row_vector(input))?.into_vec())
    }

    /// Gradients of `upstream · f(x)` for the input cached by the last
    /// [`FilterNetwork::forward`].
    pub fn backward(&self, upstream: &[T]) -> Result<(NetworkGrads<T>, Vec<T>)> {
        let trace = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::State("backward called before forward".into()))?;
        let mut grads = NetworkGrads::zeros_like(self);
        let input_grad = self.backward_batch(trace, &Matrix::row_vector(upstream), &mut grads)?;
        Ok((grads, input_grad.into_vec()))
    }

    /// Appends the parameters in the order used by [`NetworkGrads::flatten_into`].
    pub fn flatten_into(&self, out: &mut Vec<T>) {
        for l in &self.layers {
            out.extend_from_slice(l.weight.as_slice());
            out.extend_from_slice(&l.bias);
        }
    }

    /// Overwrites parameters from `values`, returning how many were consumed.
    pub fn load_flat(&mut self, values: &[T]) -> Result<usize> {
        let need = self.parameter_count();
        if values.len() < need {
            return Err(Error::shape(format!("need {need} parameters, got {}", values.len())));
        }
        let mut at = 0;
        for l in self.layers_mut() {
            let w = l.weight.as_mut_slice();
            w.copy_from_slice(&values[at..at + w.len()]);
            at += w.len();
            let b = l.bias.as_mut_slice();
            b.copy_from_slice(&values[at..at + b.len()]);
            at += b.len();
        }
        Ok(at)
    }

    /// Mutable parameter slices in flattening order.
    pub fn param_slices_mut(&mut self) -> Vec<&mut [T]> {
        self.cache = None;
        let mut out = Vec::with_capacity(self.layers.len() * 2);
        for l in &mut self.layers {
            out.push(l.weight.as_mut_slice());
            out.push(l.bias.as_mut_slice());
        }
        out
    }

    pub fn cast<U: Real>(&self) -> FilterNetwork<U> {
        FilterNetwork {
            layers: self
                .layers
                .iter()
                .map(|l| AffineLayer {
                    weight: l.weight.map_into(|x| U::of(x.as_f64())),
                    bias: l.bias.iter().map(|x| U::of(x.as_f64())).collect(),
                    activation: l.activation,
                })
                .collect(),
            cache: None,
        }
    }
}

impl<T: Real> ParameterCount for FilterNetwork<T> {
    fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.rows() * l.weight.cols() + l.bias.len()).sum()
    }
}

impl<T: Real> Matrix<T> {
    pub(crate) fn map_into<U: Real>(&self, f: impl Fn(T) -> U) -> Matrix<U> {
        Matrix::from_vec(self.rows(), self.cols(), self.as_slice().iter().map(|&x| f(x)).collect())
            .expect("same shape")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    const SLOPE: f64 = 0.01;

    fn leaky() -> Activation {
        Activation::leaky(SLOPE)
    }

    /// Straight-line re-evaluation of the affine + leaky chain.
    fn oracle_forward(net: &FilterNetwork<f64>, input: &[f64]) -> Vec<f64> {
        let mut x = input.to_vec();
        for layer in net.layers() {
            let mut y = Vec::new();
            for o in 0..layer.weight.rows() {
                let mut z = layer.bias[o];
                for i in 0..layer.weight.cols() {
                    z += layer.weight.get(o, i) * x[i];
                }
                y.push(match layer.activation {
                    Activation::LeakyRelu { slope } => if z >= 0.0 { z } else { slope * z },
                    Activation::Identity => z,
                });
            }
            x = y;
        }
        x
    }

    fn random_input(rng: &mut crate::rng::Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn zero_network_gives_zero() {
        let mut net = FilterNetwork::<f64>::zeros(&[3, 5, 2], leaky(), Activation::Identity).unwrap();
        assert_eq!(net.forward(&[1.0, -2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
        let (grads, input_grad) = net.backward(&[0.0, 0.0]).unwrap();
        assert!(grads.is_zero());
        assert_eq!(input_grad, vec![0.0; 3]);
    }

    #[test]
    fn identity_layer() {
        let layer = AffineLayer::new(Matrix::<f64>::identity(2), vec![0.0; 2], Activation::Identity).unwrap();
        let mut net = FilterNetwork::from_layers(vec![layer]).unwrap();
        assert_eq!(net.forward(&[3.0, 4.0]).unwrap(), vec![3.0, 4.0]);
    }

    #[test]
    fn single_identity_layer_input_grad_is_adjoint() {
        let w = Matrix::from_vec(2, 3, vec![1.0, -2.0, 0.5, 3.0, 0.25, -1.0]).unwrap();
        let layer = AffineLayer::new(w.clone(), vec![0.1, -0.2], Activation::Identity).unwrap();
        let mut net = FilterNetwork::from_layers(vec![layer]).unwrap();
        net.forward(&[0.3, 0.7, -0.9]).unwrap();
        let up = [1.5, -0.5];
        let (_, gx) = net.backward(&up).unwrap();
        assert_eq!(gx, w.transpose_matvec(&up).unwrap());
    }

    #[test]
    fn forward_matches_oracle() {
        let mut rng = seeded(3);
        for _ in 0..20 {
            let mut net = FilterNetwork::<f64>::random(&[3, 5, 2], leaky(), Activation::Identity, &mut rng).unwrap();
            for l in net.layers_mut() {
                for b in &mut l.bias {
                    *b = rng.random_range(-0.5..0.5);
                }
            }
            let x = random_input(&mut rng, 3);
            let got = net.forward(&x).unwrap();
            let want = oracle_forward(&net, &x);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() <= 1e-12 * w.abs().max(1.0), "{g} vs {w}");
            }
        }
    }

    #[test]
    fn width_mismatch_and_state_errors() {
        let mut net = FilterNetwork::<f64>::zeros(&[3, 2], leaky(), Activation::Identity).unwrap();
        assert!(matches!(net.backward(&[1.0, 1.0]), Err(Error::State(_))));
        assert!(matches!(net.forward(&[1.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn parameter_counts() {
        let net = FilterNetwork::<f32>::zeros(&[3, 8, 4], leaky(), Activation::Identity).unwrap();
        assert_eq!(net.parameter_count(), 3 * 8 + 8 + 8 * 4 + 4);
        assert_eq!(net.parameter_count(), 68);
        let mut flat = Vec::new();
        net.flatten_into(&mut flat);
        assert_eq!(flat.len(), 68);
    }

    #[test]
    fn init_bounds() {
        let mut rng = seeded(1);
        let net = FilterNetwork::<f64>::random(&[6, 4], leaky(), Activation::Identity, &mut rng).unwrap();
        let limit = (6.0_f64 / 6.0).sqrt();
        let l = &net.layers()[0];
        assert!(l.weight.as_slice().iter().all(|w| w.abs() <= limit));
        assert!(l.bias.iter().all(|&b| b == 0.0));
    }

    /// Loss `L = Σ c_k f_k(x)` for fixed random `c`, differentiated by
    /// central differences with h = 1e-5.
    #[test]
    fn backward_matches_finite_differences() {
        let h = 1e-5;
        let mut rng = seeded(11);
        let mut checked = 0;
        for _ in 0..100 {
            let mut net = FilterNetwork::<f64>::random(&[4, 6, 5, 3], leaky(), Activation::Identity, &mut rng).unwrap();
            for l in net.layers_mut() {
                for b in &mut l.bias {
                    *b = rng.random_range(-0.5..0.5);
                }
            }
            let x = random_input(&mut rng, 4);
            let c = random_input(&mut rng, 3);
            net.forward(&x).unwrap();
            let (grads, gx) = net.backward(&c).unwrap();
            let analytic = grads.flatten();
            let loss = |n: &FilterNetwork<f64>, x: &[f64]| -> f64 {
                oracle_forward(n, x).iter().zip(&c).map(|(a, b)| a * b).sum()
            };
            let mut base = Vec::new();
            net.flatten_into(&mut base);
            for p in 0..base.len() {
                let mut plus = net.clone();
                let mut v = base.clone();
                v[p] += h;
                plus.load_flat(&v).unwrap();
                let mut minus = net.clone();
                v[p] -= 2.0 * h;
                minus.load_flat(&v).unwrap();
                let numeric = (loss(&plus, &x) - loss(&minus, &x)) / (2.0 * h);
                assert_close(analytic[p], numeric, 1e-6);
                checked += 1;
            }
            for i in 0..x.len() {
                let mut xp = x.clone();
                xp[i] += h;
                let mut xm = x.clone();
                xm[i] -= h;
                let numeric = (loss(&net, &xp) - loss(&net, &xm)) / (2.0 * h);
                assert_close(gx[i], numeric, 1e-6);
            }
        }
        assert!(checked > 1000);
    }

    fn assert_close(a: f64, n: f64, rel: f64) {
        let err = (a - n).abs();
        let scale = a.abs().max(n.abs());
        assert!(err <= 1e-9 || err <= rel * scale, "analytic {a} vs numeric {n}");
    }

    #[test]
    fn batch_rows_match_single_evaluation_exactly() {
        let mut rng = seeded(5);
        let net = FilterNetwork::<f32>::random(&[4, 7, 3], leaky(), Activation::Identity, &mut rng).unwrap();
        let rows: Vec<f32> = (0..40).map(|_| rng.random_range(-1.0..1.0)).collect();
        let batch = Matrix::from_vec(10, 4, rows).unwrap();
        let out = net.eval_batch(&batch).unwrap();
        for r in 0..10 {
            assert_eq!(net.eval(batch.row(r)).unwrap(), out.row(r));
        }
    }
}
