//! Variational-autoencoder view generator, the single-step baseline the
//! diffusion augmenter is compared against.

use rand::Rng;

use crate::error::TensorError;
use crate::optim::{ParamSet, TrackedParams};
use crate::rng::NoiseSource;
use crate::tape::Tape;
use crate::tensor::Tensor;

/// Encoder MLP to (mean, log-variance), reparameterized sample, decoder MLP
/// back to the embedding space. Output shape always equals input shape.
#[derive(Clone, Debug)]
pub struct VaeAugmenter {
    pub params: ParamSet,
    pub dim: usize,
    pub latent: usize,
}

impl VaeAugmenter {
    pub fn init<R: Rng>(rng: &mut R, dim: usize, latent: usize) -> Self {
        let mut params = ParamSet::new();
        let dense = |rng: &mut R, rows: usize, cols: usize| {
            Tensor::randn(rng, vec![rows, cols], 1.0 / (rows as f64).sqrt())
        };
        let hidden = dim.max(2 * latent);
        params.add("enc.w1", dense(rng, dim, hidden));
        params.add("enc.b1", Tensor::zeros(vec![hidden]));
        params.add("enc.w2", dense(rng, hidden, 2 * latent));
        params.add("enc.b2", Tensor::zeros(vec![2 * latent]));
        params.add("dec.w1", dense(rng, latent, hidden));
        params.add("dec.b1", Tensor::zeros(vec![hidden]));
        params.add("dec.w2", dense(rng, hidden, dim));
        params.add("dec.b2", Tensor::zeros(vec![dim]));
        VaeAugmenter {
            params,
            dim,
            latent,
        }
    }

    fn linear(
        &self,
        tape: &mut Tape,
        view: &TrackedParams,
        x: &Tensor,
        w: &str,
        b: &str,
    ) -> Result<Tensor, TensorError> {
        let prod = tape.matmul(x, view.get(&self.params, w))?;
        tape.add_row_vec(&prod, view.get(&self.params, b))
    }

    /// (mean, log-variance) of the latent posterior.
    pub fn encode(
        &self,
        tape: &mut Tape,
        view: &TrackedParams,
        x: &Tensor,
    ) -> Result<(Tensor, Tensor), TensorError> {
        let h = self.linear(tape, view, x, "enc.w1", "enc.b1")?;
        let h = tape.silu(&h);
        let stats = self.linear(tape, view, &h, "enc.w2", "enc.b2")?;
        let mean = tape.slice_cols(&stats, 0, self.latent)?;
        let log_var = tape.slice_cols(&stats, self.latent, self.latent)?;
        Ok((mean, log_var))
    }

    pub fn decode(
        &self,
        tape: &mut Tape,
        view: &TrackedParams,
        z: &Tensor,
    ) -> Result<Tensor, TensorError> {
        let h = self.linear(tape, view, z, "dec.w1", "dec.b1")?;
        let h = tape.silu(&h);
        self.linear(tape, view, &h, "dec.w2", "dec.b2")
    }

    /// z = mean + sigma ⊙ eps with caller-controlled noise.
    pub fn reparameterize(
        &self,
        tape: &mut Tape,
        mean: &Tensor,
        log_var: &Tensor,
        noise: &mut NoiseSource,
    ) -> Result<Tensor, TensorError> {
        let (rows, cols) = mean.dims2()?;
        let eps = noise.standard_normal(rows, cols);
        let half = tape.scale(log_var, 0.5);
        let sigma = tape.exp(&half);
        let scaled = tape.mul(&sigma, &eps)?;
        tape.add(mean, &scaled)
    }

    /// One augmented view: encode, sample, decode.
    pub fn augment(
        &self,
        tape: &mut Tape,
        view: &TrackedParams,
        x: &Tensor,
        noise: &mut NoiseSource,
    ) -> Result<Tensor, TensorError> {
        let (mean, log_var) = self.encode(tape, view, x)?;
        let z = self.reparameterize(tape, &mean, &log_var, noise)?;
        self.decode(tape, view, &z)
    }

    /// Reconstruction (mean squared row error) plus unit-weight KL to the
    /// standard normal prior, averaged over the batch.
    pub fn loss(
        &self,
        tape: &mut Tape,
        view: &TrackedParams,
        x: &Tensor,
        noise: &mut NoiseSource,
    ) -> Result<Tensor, TensorError> {
        let (rows, _) = x.dims2()?;
        let x = x.detach();
        let (mean, log_var) = self.encode(tape, view, &x)?;
        let z = self.reparameterize(tape, &mean, &log_var, noise)?;
        let recon = self.decode(tape, view, &z)?;
        let diff = tape.sub(&x, &recon)?;
        let sq = tape.mul(&diff, &diff)?;
        let recon_total = tape.sum_all(&sq);
        let kl_total = kl_to_standard_normal(tape, &mean, &log_var)?;
        let combined = tape.add(&recon_total, &kl_total)?;
        Ok(tape.scale(&combined, 1.0 / rows as f64))
    }
}

/// KL(N(mean, exp(log_var)) || N(0, 1)) summed over all entries:
/// 0.5 · Σ (mean² + exp(log_var) − 1 − log_var).
pub fn kl_to_standard_normal(
    tape: &mut Tape,
    mean: &Tensor,
    log_var: &Tensor,
) -> Result<Tensor, TensorError> {
    let mean_sq = tape.mul(mean, mean)?;
    let var = tape.exp(log_var);
    let sum = tape.add(&mean_sq, &var)?;
    let m1 = tape.add_scalar(&sum, -1.0);
    let inner = tape.sub(&m1, log_var)?;
    let total = tape.sum_all(&inner);
    Ok(tape.scale(&total, 0.5))
}
