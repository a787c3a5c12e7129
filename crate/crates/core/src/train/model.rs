use rand::Rng;

use super::ModelConfig;
use crate::layer::{GenConvLayer, GlobalHead, PointCloud};
use crate::numeric::{FilterNetwork, Matrix, NetworkGrads, ParameterCount};
use crate::rng::{stream, STREAM_INIT};
use crate::{Error, Real, Result};

/// A stack of strided generalized convolutions followed by the global head.
#[derive(Debug, Clone)]
pub struct Model<T> {
    config: ModelConfig,
    layers: Vec<GenConvLayer<T>>,
    head: GlobalHead<T>,
}

impl<T: Real> PartialEq for Model<T> {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config && self.layers == other.layers && self.head == other.head
    }
}

/// Builds a freshly initialised model; weights come from the config seed's
/// `init` stream.
pub fn build_model<T: Real>(config: &ModelConfig) -> Result<Model<T>> {
    Model::build(config)
}

impl<T: Real> Model<T> {
    pub fn build(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = stream(config.seed, STREAM_INIT);
        let hidden = config.hidden_activation();
        let output = config.filter_output_activation();
        let mut layers = Vec::with_capacity(config.layers.len());
        for (i, spec) in config.layers.iter().enumerate() {
            let filter = FilterNetwork::random(&config.filter_widths(i), hidden, output, &mut rng)
                .map_err(|e| Error::config(Some(i), e.to_string()))?;
            let layer = GenConvLayer::new(filter, config.spatial_dims, spec.k, spec.stride_fraction, hidden)
                .map_err(|e| Error::config(Some(i), e.to_string()))?;
            layers.push(layer);
        }
        let head_filter = FilterNetwork::random(
            &config.filter_widths(config.layers.len()),
            hidden,
            crate::numeric::Activation::Identity,
            &mut rng,
        )
        .map_err(|e| Error::config(Some(config.layers.len()), e.to_string()))?;
        let head = GlobalHead::new(head_filter, config.spatial_dims)?;
        let model = Model { config: config.clone(), layers, head };
        log::info!("built model with {} parameters", model.parameter_count());
        Ok(model)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn layers(&self) -> &[GenConvLayer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [GenConvLayer<T>] {
        &mut self.layers
    }

    pub fn head(&self) -> &GlobalHead<T> {
        &self.head
    }

    pub fn head_mut(&mut self) -> &mut GlobalHead<T> {
        &mut self.head
    }

    pub fn num_classes(&self) -> usize {
        self.head.classes()
    }

    /// Filter network of layer `i`; `i == layers().len()` is the head.
    pub fn filter(&self, i: usize) -> Option<&FilterNetwork<T>> {
        if i < self.layers.len() {
            Some(self.layers[i].filter())
        } else if i == self.layers.len() {
            Some(self.head.filter())
        } else {
            None
        }
    }

    /// Changes the epoch budget, e.g. to extend a resumed run.
    pub fn set_epochs(&mut self, epochs: usize) {
        self.config.epochs = epochs;
    }

    /// Overrides K of every strided layer.
    pub fn set_k(&mut self, k: usize) {
        for (layer, spec) in self.layers.iter_mut().zip(&mut self.config.layers) {
            layer.set_k(k);
            spec.k = k;
        }
    }

    fn check_input(&self, cloud: &PointCloud<T>) -> Result<()> {
        if cloud.spatial_dims() != self.config.spatial_dims || cloud.feature_dims() != self.config.input_features {
            return Err(Error::shape(format!(
                "model expects {}-D clouds with {} features, got {}-D with {}",
                self.config.spatial_dims,
                self.config.input_features,
                cloud.spatial_dims(),
                cloud.feature_dims()
            )));
        }
        Ok(())
    }

    /// Training forward pass; every layer caches its trace. Stride sampling
    /// draws from `rng` layer by layer.
    pub fn forward<R: Rng + ?Sized>(&mut self, cloud: &PointCloud<T>, rng: &mut R) -> Result<Vec<T>> {
        self.check_input(cloud)?;
        let mut x = cloud.clone();
        for layer in &mut self.layers {
            x = layer.forward(&x, rng)?;
        }
        self.head.forward(&x)
    }

    /// Logits without caching; consumes randomness exactly like [`Model::forward`].
    pub fn predict<R: Rng + ?Sized>(&self, cloud: &PointCloud<T>, rng: &mut R) -> Result<Vec<T>> {
        Ok(self.forward_clouds(cloud, rng)?.1)
    }

    /// The output cloud of every strided layer, then the logits.
    pub fn forward_clouds<R: Rng + ?Sized>(&self, cloud: &PointCloud<T>, rng: &mut R) -> Result<(Vec<PointCloud<T>>, Vec<T>)> {
        self.check_input(cloud)?;
        let mut clouds = Vec::with_capacity(self.layers.len());
        let mut x = cloud.clone();
        for layer in &self.layers {
            x = layer.infer(&x, rng)?;
            clouds.push(x.clone());
        }
        let logits = self.head.infer(&x)?;
        Ok((clouds, logits))
    }

    /// Reverse pass from the logit gradient of the last [`Model::forward`].
    /// Returns gradients flattened in parameter order.
    pub fn backward(&self, logit_grad: &[T]) -> Result<Vec<T>> {
        let (head_grads, mut upstream) = self.head.backward(logit_grad)?;
        let mut per_layer: Vec<NetworkGrads<T>> = Vec::with_capacity(self.layers.len());
        for layer in self.layers.iter().rev() {
            let (g, down) = layer.backward(&upstream)?;
            per_layer.push(g);
            upstream = down;
        }
        let mut flat = Vec::with_capacity(self.parameter_count());
        for g in per_layer.iter().rev() {
            g.flatten_into(&mut flat);
        }
        head_grads.flatten_into(&mut flat);
        Ok(flat)
    }

    /// Gradient with respect to the input cloud of the last forward
    /// (coordinate columns are zero); used by tests.
    pub fn input_gradient(&self, logit_grad: &[T]) -> Result<Matrix<T>> {
        let (_, mut upstream) = self.head.backward(logit_grad)?;
        for layer in self.layers.iter().rev() {
            upstream = layer.backward(&upstream)?.1;
        }
        Ok(upstream)
    }

    pub fn flatten_params(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for l in &self.layers {
            l.filter().flatten_into(&mut out);
        }
        self.head.filter().flatten_into(&mut out);
        out
    }

    pub fn load_params(&mut self, values: &[T]) -> Result<()> {
        if values.len() != self.parameter_count() {
            return Err(Error::shape(format!("{} parameters supplied for a model of {}", values.len(), self.parameter_count())));
        }
        let mut at = 0;
        for l in &mut self.layers {
            at += l.filter_mut().load_flat(&values[at..])?;
        }
        self.head.filter_mut().load_flat(&values[at..])?;
        Ok(())
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [T]> {
        let mut out = Vec::new();
        for l in &mut self.layers {
            out.extend(l.filter_mut().param_slices_mut());
        }
        out.extend(self.head.filter_mut().param_slices_mut());
        out
    }

    pub fn cast<U: Real>(&self) -> Model<U> {
        Model { config: self.config.clone(), layers: self.layers.iter().map(|l| l.cast()).collect(), head: self.head.cast() }
    }
}

impl<T: Real> ParameterCount for Model<T> {
    fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.parameter_count()).sum::<usize>() + self.head.parameter_count()
    }
}
