use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Probabilities are clamped to `[BCE_EPS, 1 - BCE_EPS]` before taking logs.
pub const BCE_EPS: f64 = 1e-7;
/// Hard labels are positive only strictly above this probability.
pub const DECISION_THRESHOLD: f64 = 0.5;

pub const DEFAULT_LAYER_SIZES: [usize; 4] = [12_000, 256, 64, 1];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HiddenActivation {
    Relu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputActivation {
    Sigmoid,
}

/// Dense feed-forward network. Weight matrix `l` has shape `(sizes[l+1], sizes[l])`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    sizes: Vec<usize>,
    weights: Vec<Array2<T>>,
    biases: Vec<Array1<T>>,
    hidden: HiddenActivation,
    output: OutputActivation,
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 {
        return Err(Error::Config(format!("a network needs at least 2 layers, got {}", sizes.len())));
    }
    if let Some(i) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::Config(format!("layer {i} has size 0")));
    }
    Ok(())
}

impl<T: Scalar> Mlp<T> {
    /// Glorot-uniform weights from a seeded ChaCha8 stream, zero biases.
    pub fn new(sizes: &[usize], seed: u64) -> Result<Self> {
        check_sizes(sizes)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                Array2::from_shape_simple_fn((fan_out, fan_in), || T::lit(rng.gen_range(-limit..=limit)))
            })
            .collect();
        Ok(Self::assemble(sizes, weights))
    }

    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        check_sizes(sizes)?;
        let weights = sizes.windows(2).map(|w| Array2::zeros((w[1], w[0]))).collect();
        Ok(Self::assemble(sizes, weights))
    }

    fn assemble(sizes: &[usize], weights: Vec<Array2<T>>) -> Self {
        Self {
            sizes: sizes.to_vec(),
            weights,
            biases: sizes[1..].iter().map(|&n| Array1::zeros(n)).collect(),
            hidden: HiddenActivation::Relu,
            output: OutputActivation::Sigmoid,
        }
    }

    pub fn from_parts(weights: Vec<Array2<T>>, biases: Vec<Array1<T>>) -> Result<Self> {
        if weights.is_empty() || weights.len() != biases.len() {
            return Err(Error::Config(format!(
                "{} weight matrices and {} bias vectors",
                weights.len(),
                biases.len()
            )));
        }
        let mut sizes = vec![weights[0].ncols()];
        for (l, (w, b)) in weights.iter().zip(&biases).enumerate() {
            if w.ncols() != sizes[l] || b.len() != w.nrows() {
                return Err(Error::Shape(format!(
                    "layer {l}: weights {:?}, bias {}, previous width {}",
                    w.dim(),
                    b.len(),
                    sizes[l]
                )));
            }
            sizes.push(w.nrows());
        }
        check_sizes(&sizes)?;
        let finite = weights.iter().all(|w| w.iter().all(|v| v.is_finite()))
            && biases.iter().all(|b| b.iter().all(|v| v.is_finite()));
        if !finite {
            return Err(Error::Config("non-finite parameter".into()));
        }
        Ok(Self { sizes, weights, biases, hidden: HiddenActivation::Relu, output: OutputActivation::Sigmoid })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_len(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_len(&self) -> usize {
        *self.sizes.last().expect("at least two layers")
    }

    pub fn weights(&self) -> &[Array2<T>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Array1<T>] {
        &self.biases
    }

    pub fn hidden_activation(&self) -> HiddenActivation {
        self.hidden
    }

    pub fn output_activation(&self) -> OutputActivation {
        self.output
    }

    pub fn num_params(&self) -> usize {
        self.weights.iter().map(Array2::len).sum::<usize>() + self.biases.iter().map(Array1::len).sum::<usize>()
    }

    /// Mutable access for tests and finite-difference checks.
    pub fn params_mut(&mut self) -> (&mut [Array2<T>], &mut [Array1<T>]) {
        (&mut self.weights, &mut self.biases)
    }

    /// Batch forward pass; rows of `x` are examples.
    pub fn forward(&self, x: ArrayView2<T>) -> Result<ForwardCache<T>> {
        if x.ncols() != self.input_len() {
            return Err(Error::Shape(format!("input width {}, model expects {}", x.ncols(), self.input_len())));
        }
        let last = self.weights.len() - 1;
        let mut activations = Vec::with_capacity(self.weights.len() + 1);
        activations.push(x.to_owned());
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = activations[l].dot(&w.t());
            z += b;
            if l == last {
                z.mapv_inplace(sigmoid);
            } else {
                z.mapv_inplace(|v| v.max(T::zero()));
            }
            activations.push(z);
        }
        Ok(ForwardCache { activations })
    }

    /// Output probabilities for one example.
    pub fn forward_one(&self, x: ArrayView1<T>) -> Result<Array1<T>> {
        let batch = x.insert_axis(Axis(0));
        let cache = self.forward(batch)?;
        Ok(cache.output().row(0).to_owned())
    }

    pub fn predict(&self, x: ArrayView1<T>) -> Result<Prediction<T>> {
        let probabilities = self.forward_one(x)?;
        let labels = probabilities.iter().map(|&p| is_positive(p)).collect();
        Ok(Prediction { probabilities, labels })
    }

    /// Gradients of the mean BCE over every (example, output) entry.
    pub fn backward(&self, cache: &ForwardCache<T>, labels: ArrayView2<T>) -> Result<Gradients<T>> {
        let layers = self.weights.len();
        let acts = &cache.activations;
        let stale = acts.len() != layers + 1
            || acts.iter().zip(&self.sizes).any(|(a, &s)| a.ncols() != s)
            || acts.iter().any(|a| a.nrows() != acts[0].nrows());
        if stale {
            return Err(Error::Shape("forward cache does not belong to this model".into()));
        }
        let out = cache.output();
        if labels.dim() != out.dim() {
            return Err(Error::Shape(format!("labels {:?}, outputs {:?}", labels.dim(), out.dim())));
        }
        if out.is_empty() {
            return Err(Error::EmptyInput);
        }

        // Sigmoid + BCE collapses to p - y at the output pre-activation.
        let scale = T::lit(out.len() as f64);
        let mut delta = (&out - &labels).mapv(|v| v / scale);
        let mut weights = Vec::with_capacity(layers);
        let mut biases = Vec::with_capacity(layers);
        for l in (0..layers).rev() {
            weights.push(delta.t().dot(&acts[l]));
            biases.push(delta.sum_axis(Axis(0)));
            if l > 0 {
                let mut upstream = delta.dot(&self.weights[l]);
                upstream.zip_mut_with(&acts[l], |d, &a| {
                    if a <= T::zero() {
                        *d = T::zero();
                    }
                });
                delta = upstream;
            }
        }
        weights.reverse();
        biases.reverse();
        Ok(Gradients { weights, biases })
    }

    /// Plain gradient-descent step.
    pub fn apply(&mut self, grads: &Gradients<T>, lr: T) {
        for (w, g) in self.weights.iter_mut().zip(&grads.weights) {
            w.scaled_add(-lr, g);
        }
        for (b, g) in self.biases.iter_mut().zip(&grads.biases) {
            b.scaled_add(-lr, g);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|v| v.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }
}

/// Layer activations from a forward pass; entry 0 is the input batch.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    activations: Vec<Array2<T>>,
}

impl<T: Scalar> ForwardCache<T> {
    pub fn output(&self) -> ArrayView2<'_, T> {
        self.activations.last().expect("non-empty cache").view()
    }

    pub fn activations(&self) -> &[Array2<T>] {
        &self.activations
    }

    pub fn batch_len(&self) -> usize {
        self.activations[0].nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub weights: Vec<Array2<T>>,
    pub biases: Vec<Array1<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn norm(&self) -> T {
        let sq = |v: &T| *v * *v;
        let w: T = self.weights.iter().flat_map(|w| w.iter().map(sq)).sum();
        let b: T = self.biases.iter().flat_map(|b| b.iter().map(sq)).sum();
        (w + b).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction<T> {
    pub probabilities: Array1<T>,
    pub labels: Vec<bool>,
}

impl<T: Scalar> Prediction<T> {
    /// Probability of the first output: "PH present" in the single-output model.
    pub fn probability(&self) -> T {
        self.probabilities[0]
    }

    pub fn label(&self) -> bool {
        self.labels[0]
    }
}

pub fn is_positive<T: Scalar>(p: T) -> bool {
    p > T::lit(DECISION_THRESHOLD)
}

pub fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// Mean binary cross-entropy with probabilities clamped to `[ε, 1 − ε]`.
pub fn bce_loss<T: Scalar>(probabilities: ArrayView2<T>, labels: ArrayView2<T>) -> Result<T> {
    if probabilities.dim() != labels.dim() {
        return Err(Error::Shape(format!(
            "probabilities {:?}, labels {:?}",
            probabilities.dim(),
            labels.dim()
        )));
    }
    if probabilities.is_empty() {
        return Err(Error::EmptyInput);
    }
    let eps = T::lit(BCE_EPS);
    let total: T = probabilities
        .iter()
        .zip(labels.iter())
        .map(|(&p, &y)| {
            let p = p.max(eps).min(T::one() - eps);
            -(y * p.ln() + (T::one() - y) * (T::one() - p).ln())
        })
        .sum();
    Ok(total / T::lit(probabilities.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{arr1, arr2, array};

    #[test]
    fn two_by_one_shape() {
        let m = Mlp::<f64>::new(&[2, 1], 3).unwrap();
        assert_eq!(m.weights()[0].dim(), (1, 2));
        assert_eq!(m.biases()[0], arr1(&[0.0]));
    }

    #[test]
    fn parameter_count() {
        assert_eq!(Mlp::<f64>::new(&[4, 3, 1], 0).unwrap().num_params(), 3 * 4 + 3 + 3 + 1);
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let a = Mlp::<f64>::new(&[30, 20, 1], 9).unwrap();
        assert_eq!(a, Mlp::new(&[30, 20, 1], 9).unwrap());
        assert_ne!(a, Mlp::new(&[30, 20, 1], 10).unwrap());
        let limit = (6.0_f64 / 50.0).sqrt();
        assert!(a.weights()[0].iter().all(|w| w.abs() <= limit));
    }

    #[test]
    fn too_few_layers() {
        assert!(matches!(Mlp::<f64>::new(&[], 0), Err(Error::Config(_))));
        assert!(matches!(Mlp::<f64>::new(&[5], 0), Err(Error::Config(_))));
        assert!(matches!(Mlp::<f64>::new(&[5, 0, 1], 0), Err(Error::Config(_))));
    }

    #[test]
    fn zero_model_gives_half() {
        let m = Mlp::<f64>::zeros(&[3, 4, 1]).unwrap();
        let p = m.predict(arr1(&[1.0, -2.0, 5.0]).view()).unwrap();
        assert_eq!(p.probability(), 0.5);
        assert!(!p.label());
    }

    #[test]
    fn hand_computed_single_layer() {
        let m = Mlp::from_parts(vec![arr2(&[[2.0, -1.0]])], vec![arr1(&[0.5])]).unwrap();
        let p = m.forward_one(arr1(&[1.0, 1.0]).view()).unwrap()[0];
        assert_abs_diff_eq!(p, 1.0 / (1.0 + (-1.5_f64).exp()), epsilon = 1e-15);
        assert_abs_diff_eq!(p, 0.817574, epsilon = 1e-6);
    }

    #[test]
    fn dead_relu_input_is_ignored() {
        // Hidden unit 1 has a negative pre-activation for any non-negative input along x1.
        let m = Mlp::from_parts(
            vec![arr2(&[[1.0, 0.0], [0.0, -1.0]]), arr2(&[[0.7, 3.0]])],
            vec![arr1(&[0.0, -0.1]), arr1(&[0.0])],
        )
        .unwrap();
        let a = m.forward_one(arr1(&[0.4, 1.0]).view()).unwrap();
        let b = m.forward_one(arr1(&[0.4, 50.0]).view()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn width_mismatch() {
        let m = Mlp::<f64>::new(&[3, 1], 0).unwrap();
        assert!(matches!(m.forward_one(arr1(&[1.0]).view()), Err(Error::Shape(_))));
    }

    #[test]
    fn bce_values() {
        let y = array![[1.0]];
        assert_abs_diff_eq!(bce_loss(array![[0.5]].view(), y.view()).unwrap(), 2f64.ln(), epsilon = 1e-12);
        assert!(bce_loss(array![[1.0]].view(), y.view()).unwrap() <= 1e-6);
        assert!(bce_loss(array![[0.0]].view(), y.view()).unwrap().is_finite());
        let p = array![[0.2, 0.9], [0.6, 0.35]];
        let l = array![[0.0, 1.0], [1.0, 0.0]];
        let flipped = bce_loss(p.mapv(|v| 1.0 - v).view(), l.mapv(|v| 1.0 - v).view()).unwrap();
        assert_abs_diff_eq!(bce_loss(p.view(), l.view()).unwrap(), flipped, epsilon = 1e-12);
    }

    #[test]
    fn threshold_is_strict() {
        assert!(is_positive(0.7));
        assert!(!is_positive(0.5));
    }

    #[test]
    fn stale_cache_rejected() {
        let a = Mlp::<f64>::new(&[3, 2, 1], 0).unwrap();
        let b = Mlp::<f64>::new(&[3, 4, 1], 0).unwrap();
        let cache = a.forward(array![[1.0, 2.0, 3.0]].view()).unwrap();
        assert!(matches!(b.backward(&cache, array![[1.0]].view()), Err(Error::Shape(_))));
        assert!(matches!(a.backward(&cache, array![[1.0], [0.0]].view()), Err(Error::Shape(_))));
    }

    #[test]
    fn f32_forward() {
        let m = Mlp::<f32>::new(&[4, 3, 1], 1).unwrap();
        let p = m.forward_one(arr1(&[0.1f32, 0.2, 0.3, 0.4]).view()).unwrap()[0];
        assert!(p > 0.0 && p < 1.0);
    }
}
