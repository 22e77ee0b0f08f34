//! The two-process optimization: denoiser training on detached embeddings
//! alternates per epoch with joint recommendation + contrastive training.
//!
//! Within one epoch the flow is (1) recompute aggregated embeddings, (2)
//! fit each entity's augmenter on them, (3) run joint steps over sampled
//! interaction batches: BPR on mixed hard negatives plus the weighted
//! contrastive term, with augmenter parameters frozen so view gradients
//! reach the embedding table only. Evaluation runs every `eval_every`
//! epochs with early stopping on stagnant Recall@20; the returned model
//! carries the best-evaluated embeddings.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::config::{Ablation, TrainConfig};
use crate::contrastive::{total_cl_loss, EntityKind, ViewPair};
use crate::data::{
    build_norm_adjacency, sample_bpr_batch, BprTriple, InteractionDataset, NormalizedAdjacency,
};
use crate::diffusion::{
    diffusion_loss, reverse_sample, DenoiserNet, FrozenDenoiser, NoiseSchedule,
};
use crate::encoder;
use crate::error::{TensorError, TrainError};
use crate::metrics::{evaluate_model, RankingResult};
use crate::optim::Adam;
use crate::rng::{substream, NoiseSource};
use crate::tape::Tape;
use crate::tensor::Tensor;
use crate::vae::VaeAugmenter;

pub const EVAL_CUTOFFS: [usize; 2] = [10, 20];
const EARLY_STOP_METRIC: &str = "recall@20";

/// Trainable state: the embedding table plus one augmenter per entity type.
#[derive(Clone, Debug)]
pub struct Model {
    pub config: TrainConfig,
    pub num_users: usize,
    pub num_items: usize,
    pub embeddings: crate::optim::ParamSet,
    pub schedule: NoiseSchedule,
    pub user_diffusion: DenoiserNet,
    pub item_diffusion: DenoiserNet,
    pub user_vae: Option<VaeAugmenter>,
    pub item_vae: Option<VaeAugmenter>,
}

impl Model {
    pub fn init(config: &TrainConfig, ds: &InteractionDataset) -> Result<Self, TrainError> {
        let mut init_rng = substream(config.seed, "init-embeddings", 0);
        let mut embeddings = crate::optim::ParamSet::new();
        embeddings.add(
            "embeddings",
            encoder::init_embeddings(&mut init_rng, ds.num_nodes(), config.embed_dim),
        );
        let schedule = NoiseSchedule::build(
            config.beta_schedule,
            config.diff_steps,
            config.beta_min,
            config.beta_max,
        )?;
        let user_diffusion = DenoiserNet::init(
            &mut substream(config.seed, "init-user-denoiser", 0),
            config.embed_dim,
            config.heads,
            config.row_independent,
        )?;
        let item_diffusion = DenoiserNet::init(
            &mut substream(config.seed, "init-item-denoiser", 0),
            config.embed_dim,
            config.heads,
            config.row_independent,
        )?;
        let (user_vae, item_vae) = if config.ablation == Ablation::Vae {
            let latent = config.effective_vae_latent();
            (
                Some(VaeAugmenter::init(
                    &mut substream(config.seed, "init-user-vae", 0),
                    config.embed_dim,
                    latent,
                )),
                Some(VaeAugmenter::init(
                    &mut substream(config.seed, "init-item-vae", 0),
                    config.embed_dim,
                    latent,
                )),
            )
        } else {
            (None, None)
        };
        Ok(Model {
            config: config.clone(),
            num_users: ds.num_users,
            num_items: ds.num_items,
            embeddings,
            schedule,
            user_diffusion,
            item_diffusion,
            user_vae,
            item_vae,
        })
    }

    pub fn embedding_table(&self) -> &Tensor {
        self.embeddings.get("embeddings").expect("table present")
    }

    /// Aggregated user and item embeddings, computed without recording.
    pub fn aggregated_embeddings(
        &self,
        adj: &NormalizedAdjacency,
    ) -> Result<(Tensor, Tensor), TensorError> {
        let mut tape = Tape::new();
        let stack = encoder::layer_stack(&mut tape, adj, self.embedding_table(), self.config.layers)?;
        let agg = encoder::aggregate_layers(&mut tape, &stack, self.config.include_layer_zero)?;
        let user_ids: Vec<usize> = (0..self.num_users).collect();
        let item_ids: Vec<usize> = (0..self.num_items).map(|i| self.num_users + i).collect();
        let users = tape.gather_rows(&agg, &user_ids)?;
        let items = tape.gather_rows(&agg, &item_ids)?;
        Ok((users, items))
    }

    pub fn evaluate(
        &self,
        adj: &NormalizedAdjacency,
        ds: &InteractionDataset,
    ) -> Result<RankingResult, TensorError> {
        let (users, items) = self.aggregated_embeddings(adj)?;
        Ok(evaluate_model(&users, &items, ds, &EVAL_CUTOFFS))
    }
}

/// Pairwise ranking loss: mean over rows of softplus(neg − pos score).
pub fn bpr_loss(
    tape: &mut Tape,
    user: &Tensor,
    pos: &Tensor,
    neg: &Tensor,
) -> Result<Tensor, TensorError> {
    let pos_score = tape.row_dot(user, pos)?;
    let neg_score = tape.row_dot(user, neg)?;
    let margin = tape.sub(&neg_score, &pos_score)?;
    let per_row = tape.softplus(&margin);
    Ok(tape.mean_all(&per_row))
}

/// One pass of denoiser training over shuffled rows of `embeddings`
/// (treated as constants). Returns the mean reconstruction loss.
pub fn train_diffusion_epoch(
    net: &mut DenoiserNet,
    opt: &mut Adam,
    embeddings: &Tensor,
    schedule: &NoiseSchedule,
    batch_size: usize,
    rng: &mut ChaCha12Rng,
    epoch: usize,
) -> Result<f64, TrainError> {
    let (rows, _) = embeddings.dims2()?;
    let mut order: Vec<usize> = (0..rows).collect();
    order.shuffle(rng);
    let mut total = 0.0;
    let mut batches = 0usize;
    for chunk in order.chunks(batch_size.max(1)) {
        let mut tape = Tape::new();
        let batch = tape.gather_rows(embeddings, chunk)?.detach();
        let view = net.params.track(&mut tape);
        let loss = diffusion_loss(&mut tape, net, &view, &batch, schedule, rng)?;
        let value = loss.item();
        if !value.is_finite() {
            return Err(TrainError::NonFiniteLoss {
                loss_name: "diffusion",
                epoch,
            });
        }
        let grads = tape.backward(&loss)?;
        opt.step(&mut net.params, &view, &grads)?;
        total += value;
        batches += 1;
    }
    Ok(total / batches.max(1) as f64)
}

/// One pass of VAE training over shuffled rows (constants), mirroring
/// [`train_diffusion_epoch`].
pub fn train_vae_epoch(
    vae: &mut VaeAugmenter,
    opt: &mut Adam,
    embeddings: &Tensor,
    batch_size: usize,
    rng: &mut ChaCha12Rng,
    epoch: usize,
) -> Result<f64, TrainError> {
    let (rows, _) = embeddings.dims2()?;
    let mut order: Vec<usize> = (0..rows).collect();
    order.shuffle(rng);
    let mut total = 0.0;
    let mut batches = 0usize;
    for chunk in order.chunks(batch_size.max(1)) {
        let mut tape = Tape::new();
        let batch = tape.gather_rows(embeddings, chunk)?.detach();
        let view = vae.params.track(&mut tape);
        let loss = vae.loss(&mut tape, &view, &batch, &mut NoiseSource::Seeded(rng))?;
        let value = loss.item();
        if !value.is_finite() {
            return Err(TrainError::NonFiniteLoss {
                loss_name: "vae",
                epoch,
            });
        }
        let grads = tape.backward(&loss)?;
        opt.step(&mut vae.params, &view, &grads)?;
        total += value;
        batches += 1;
    }
    Ok(total / batches.max(1) as f64)
}

/// Loss scalars reported by one joint step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StepLosses {
    pub rec: f64,
    pub cl: f64,
    pub joint: f64,
}

/// First-seen deduplication, preserving order.
fn dedup_preserving_order(ids: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for id in ids {
        if seen.insert(id) {
            out.push(id);
        }
    }
    out
}

/// SimGCL-style perturbation: eps · sign(e) ⊙ (row-normalized uniform
/// noise), added as a constant so gradients pass through `e` unchanged.
fn uniform_noise_view(
    tape: &mut Tape,
    e: &Tensor,
    eps: f64,
    rng: &mut ChaCha12Rng,
) -> Result<Tensor, TensorError> {
    let (rows, cols) = e.dims2()?;
    let mut delta = vec![0.0; rows * cols];
    for r in 0..rows {
        let u: Vec<f64> = (0..cols).map(|_| rng.gen::<f64>()).collect();
        let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        for c in 0..cols {
            let sign = if e.get2(r, c) >= 0.0 { 1.0 } else { -1.0 };
            delta[r * cols + c] = eps * sign * u[c] / norm;
        }
    }
    let delta = Tensor::matrix(rows, cols, delta)?;
    tape.add(e, &delta)
}

/// Seed streams consumed by one joint step: negative mixing draws and
/// view-generation noise.
pub struct JointRngs<'a> {
    pub mix: &'a mut ChaCha12Rng,
    pub views: &'a mut ChaCha12Rng,
}

/// One optimization step of the joint objective on a sampled batch.
/// Augmenter parameters stay frozen; only the embedding table is stepped.
#[allow(clippy::too_many_arguments)]
pub fn joint_step(
    model: &mut Model,
    opt: &mut Adam,
    adj: &NormalizedAdjacency,
    batch: &[BprTriple],
    rngs: &mut JointRngs,
    epoch: usize,
) -> Result<StepLosses, TrainError> {
    let cfg = model.config.clone();
    let num_users = model.num_users;
    let mut tape = Tape::new();
    let tracked = model.embeddings.track(&mut tape);
    let table = &tracked.tensors()[0];

    let stack = encoder::layer_stack(&mut tape, adj, table, cfg.layers)?;
    let agg = encoder::aggregate_layers(&mut tape, &stack, cfg.include_layer_zero)?;

    let users: Vec<usize> = batch.iter().map(|t| t.user).collect();
    let pos_nodes: Vec<usize> = batch.iter().map(|t| num_users + t.pos_item).collect();
    let user_agg = tape.gather_rows(&agg, &users)?;
    let pos_agg = tape.gather_rows(&agg, &pos_nodes)?;

    // negative construction
    let agg_range = encoder::aggregation_range(cfg.layers, cfg.include_layer_zero);
    let (neg_agg, neg_node_ids) = if cfg.ablation == Ablation::NoNeg {
        // plain uniform negative: the first candidate, unmixed
        let neg_nodes: Vec<usize> = batch
            .iter()
            .map(|t| num_users + t.candidates[0])
            .collect();
        (tape.gather_rows(&agg, &neg_nodes)?, neg_nodes)
    } else {
        let layer_weight = 1.0 / agg_range.len() as f64;
        let pos_stack: Vec<Tensor> = agg_range
            .clone()
            .map(|l| tape.gather_rows(&stack[l], &pos_nodes))
            .collect::<Result<_, _>>()?;
        let num_candidates = batch[0].candidates.len();
        let mut mixed_aggs = Vec::with_capacity(num_candidates);
        let mut candidate_nodes = Vec::with_capacity(num_candidates);
        for m in 0..num_candidates {
            let cand_nodes: Vec<usize> = batch
                .iter()
                .map(|t| num_users + t.candidates[m])
                .collect();
            let cand_stack: Vec<Tensor> = agg_range
                .clone()
                .map(|l| tape.gather_rows(&stack[l], &cand_nodes))
                .collect::<Result<_, _>>()?;
            let mixed = encoder::positive_mix(&mut tape, &pos_stack, &cand_stack, rngs.mix)?;
            let mut acc: Option<Tensor> = None;
            for layer in &mixed {
                acc = Some(match acc {
                    Some(a) => tape.add(&a, layer)?,
                    None => layer.clone(),
                });
            }
            mixed_aggs.push(tape.scale(&acc.expect("non-empty range"), layer_weight));
            candidate_nodes.push(cand_nodes);
        }
        let (selected, chosen) =
            encoder::select_hard_negative(&mut tape, &user_agg, &mixed_aggs)?;
        let chosen_nodes: Vec<usize> = chosen
            .iter()
            .enumerate()
            .map(|(row, &m)| candidate_nodes[m][row])
            .collect();
        (selected, chosen_nodes)
    };

    let rec = bpr_loss(&mut tape, &user_agg, &pos_agg, &neg_agg)?;

    // L2 penalty on the layer-0 embeddings that produced this batch
    let rec = if cfg.weight_decay > 0.0 {
        let mut reg_ids = users.clone();
        reg_ids.extend_from_slice(&pos_nodes);
        reg_ids.extend_from_slice(&neg_node_ids);
        let base_rows = tape.gather_rows(table, &reg_ids)?;
        let sq = tape.mul(&base_rows, &base_rows)?;
        let total = tape.sum_all(&sq);
        let reg = tape.scale(&total, cfg.weight_decay / batch.len() as f64);
        tape.add(&rec, &reg)?
    } else {
        rec
    };

    // contrastive term
    let use_cl = cfg.lambda != 0.0 && cfg.ablation != Ablation::NoDiff;
    let (loss, cl_value) = if use_cl {
        let unique_users = dedup_preserving_order(users.iter().copied());
        let unique_item_nodes = dedup_preserving_order(pos_nodes.iter().copied());
        let e0_users = tape.gather_rows(&agg, &unique_users)?;
        let e0_items = tape.gather_rows(&agg, &unique_item_nodes)?;

        let make_views = |tape: &mut Tape,
                          model: &Model,
                          e0: &Tensor,
                          entity: EntityKind,
                          rng: &mut ChaCha12Rng|
         -> Result<(Tensor, Tensor), TrainError> {
            match cfg.ablation {
                Ablation::UniformNoise => Ok((
                    uniform_noise_view(tape, e0, cfg.noise_eps, rng)?,
                    uniform_noise_view(tape, e0, cfg.noise_eps, rng)?,
                )),
                Ablation::Vae => {
                    let vae = match entity {
                        EntityKind::User => model.user_vae.as_ref(),
                        EntityKind::Item => model.item_vae.as_ref(),
                    }
                    .expect("vae arm initializes augmenters");
                    let view = vae.params.frozen();
                    let a = vae.augment(tape, &view, e0, &mut NoiseSource::Seeded(rng))?;
                    let b = vae.augment(tape, &view, e0, &mut NoiseSource::Seeded(rng))?;
                    Ok((a, b))
                }
                _ => {
                    let net = match entity {
                        EntityKind::User => &model.user_diffusion,
                        EntityKind::Item => &model.item_diffusion,
                    };
                    let frozen = FrozenDenoiser::new(net);
                    let t_start = cfg.effective_t_start();
                    let a = reverse_sample(
                        tape,
                        &frozen,
                        e0,
                        &model.schedule,
                        t_start,
                        &mut NoiseSource::Seeded(rng),
                    )?;
                    let b = reverse_sample(
                        tape,
                        &frozen,
                        e0,
                        &model.schedule,
                        t_start,
                        &mut NoiseSource::Seeded(rng),
                    )?;
                    Ok((a, b))
                }
            }
        };

        let (ua, ub) = make_views(&mut tape, model, &e0_users, EntityKind::User, rngs.views)?;
        let (ia, ib) = make_views(&mut tape, model, &e0_items, EntityKind::Item, rngs.views)?;
        let user_pair = ViewPair::new(ua, ub, EntityKind::User, cfg.tau).with_raw_dot(cfg.raw_dot);
        let item_pair = ViewPair::new(ia, ib, EntityKind::Item, cfg.tau).with_raw_dot(cfg.raw_dot);
        let cl = total_cl_loss(&mut tape, &user_pair, &item_pair)?;
        let weighted = tape.scale(&cl, cfg.lambda);
        (tape.add(&rec, &weighted)?, cl.item())
    } else {
        (rec.clone(), 0.0)
    };

    let joint_value = loss.item();
    if !joint_value.is_finite() {
        return Err(TrainError::NonFiniteLoss {
            loss_name: "joint",
            epoch,
        });
    }
    let grads = tape.backward(&loss)?;
    opt.step(&mut model.embeddings, &tracked, &grads)?;
    Ok(StepLosses {
        rec: rec.item(),
        cl: cl_value,
        joint: joint_value,
    })
}

/// Per-epoch record of the training losses plus metrics on eval epochs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub rec_loss: f64,
    pub cl_loss: f64,
    pub diff_loss: f64,
    pub joint_loss: f64,
    pub wall_time_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<BTreeMap<String, f64>>,
}

/// Full training trace: one record per completed epoch, final metrics, and
/// the exact configuration that produced them.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainReport {
    pub arm: String,
    pub config: TrainConfig,
    pub epochs: Vec<EpochRecord>,
    pub final_metrics: BTreeMap<String, f64>,
}

impl TrainReport {
    /// JSON-lines rendering: one line per epoch, then a summary line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.epochs {
            out.push_str(&serde_json::to_string(e).expect("epoch record serializes"));
            out.push('\n');
        }
        let summary = serde_json::json!({
            "final": true,
            "arm": self.arm,
            "metrics": self.final_metrics,
            "config": self.config,
        });
        out.push_str(&summary.to_string());
        out.push('\n');
        out
    }
}

/// Trains a model from scratch on the dataset. Deterministic given the
/// config (seed included); returns the best-evaluated model and the trace.
pub fn train(
    config: &TrainConfig,
    ds: &InteractionDataset,
) -> Result<(Model, TrainReport), TrainError> {
    let adj = build_norm_adjacency(ds)?;
    let mut model = Model::init(config, ds)?;
    let mut embed_opt = Adam::new(config.lr);
    let mut user_diff_opt = Adam::new(config.diff_lr);
    let mut item_diff_opt = Adam::new(config.diff_lr);
    let mut user_vae_opt = Adam::new(config.diff_lr);
    let mut item_vae_opt = Adam::new(config.diff_lr);

    let trains_diffusion = matches!(config.ablation, Ablation::Full | Ablation::NoNeg)
        && config.lambda != 0.0;
    let trains_vae = config.ablation == Ablation::Vae && config.lambda != 0.0;

    // optional pretraining of the augmenters on the initial embeddings
    for pre in 0..config.diff_pretrain_epochs {
        let (users, items) = model.aggregated_embeddings(&adj)?;
        if trains_diffusion {
            train_diffusion_epoch(
                &mut model.user_diffusion,
                &mut user_diff_opt,
                &users,
                &model.schedule.clone(),
                config.diff_batch_size,
                &mut substream(config.seed, "pretrain-user", pre as u64),
                0,
            )?;
            train_diffusion_epoch(
                &mut model.item_diffusion,
                &mut item_diff_opt,
                &items,
                &model.schedule.clone(),
                config.diff_batch_size,
                &mut substream(config.seed, "pretrain-item", pre as u64),
                0,
            )?;
        }
        if trains_vae {
            let (mut u_vae, mut i_vae) = (model.user_vae.take(), model.item_vae.take());
            if let Some(v) = u_vae.as_mut() {
                train_vae_epoch(
                    v,
                    &mut user_vae_opt,
                    &users,
                    config.diff_batch_size,
                    &mut substream(config.seed, "pretrain-user-vae", pre as u64),
                    0,
                )?;
            }
            if let Some(v) = i_vae.as_mut() {
                train_vae_epoch(
                    v,
                    &mut item_vae_opt,
                    &items,
                    config.diff_batch_size,
                    &mut substream(config.seed, "pretrain-item-vae", pre as u64),
                    0,
                )?;
            }
            model.user_vae = u_vae;
            model.item_vae = i_vae;
        }
    }

    let steps_per_epoch = ds.train_edges.len().div_ceil(config.batch_size).max(1);
    let mut report = TrainReport {
        arm: config.ablation.name().to_string(),
        config: config.clone(),
        epochs: Vec::new(),
        final_metrics: BTreeMap::new(),
    };

    let mut best_metric = f64::NEG_INFINITY;
    let mut best_snapshot: Option<crate::optim::ParamSet> = None;
    let mut evals_since_best = 0usize;

    for epoch in 1..=config.epochs {
        let started = Instant::now();

        // (1)+(2) refresh embeddings and fit the augmenters on them
        let mut diff_loss = 0.0;
        if trains_diffusion || trains_vae {
            let (users, items) = model.aggregated_embeddings(&adj)?;
            if trains_diffusion {
                let schedule = model.schedule.clone();
                let lu = train_diffusion_epoch(
                    &mut model.user_diffusion,
                    &mut user_diff_opt,
                    &users,
                    &schedule,
                    config.diff_batch_size,
                    &mut substream(config.seed, "diff-user", epoch as u64),
                    epoch,
                )?;
                let li = train_diffusion_epoch(
                    &mut model.item_diffusion,
                    &mut item_diff_opt,
                    &items,
                    &schedule,
                    config.diff_batch_size,
                    &mut substream(config.seed, "diff-item", epoch as u64),
                    epoch,
                )?;
                diff_loss = (lu + li) / 2.0;
            }
            if trains_vae {
                let (mut u_vae, mut i_vae) = (model.user_vae.take(), model.item_vae.take());
                let mut total = 0.0;
                if let Some(v) = u_vae.as_mut() {
                    total += train_vae_epoch(
                        v,
                        &mut user_vae_opt,
                        &users,
                        config.diff_batch_size,
                        &mut substream(config.seed, "vae-user", epoch as u64),
                        epoch,
                    )?;
                }
                if let Some(v) = i_vae.as_mut() {
                    total += train_vae_epoch(
                        v,
                        &mut item_vae_opt,
                        &items,
                        config.diff_batch_size,
                        &mut substream(config.seed, "vae-item", epoch as u64),
                        epoch,
                    )?;
                }
                model.user_vae = u_vae;
                model.item_vae = i_vae;
                diff_loss = total / 2.0;
            }
        }

        // (3) joint recommendation + contrastive pass
        let mut bpr_rng = substream(config.seed, "bpr", epoch as u64);
        let mut mix_rng = substream(config.seed, "mix", epoch as u64);
        let mut view_rng = substream(config.seed, "views", epoch as u64);
        let (mut rec_sum, mut cl_sum, mut joint_sum) = (0.0, 0.0, 0.0);
        for _ in 0..steps_per_epoch {
            let batch = sample_bpr_batch(
                ds,
                config.batch_size.min(ds.train_edges.len()).max(1),
                config.neg_candidates.max(1),
                &mut bpr_rng,
            )?;
            let mut rngs = JointRngs {
                mix: &mut mix_rng,
                views: &mut view_rng,
            };
            let losses = joint_step(&mut model, &mut embed_opt, &adj, &batch, &mut rngs, epoch)?;
            rec_sum += losses.rec;
            cl_sum += losses.cl;
            joint_sum += losses.joint;
        }

        let mut record = EpochRecord {
            epoch,
            rec_loss: rec_sum / steps_per_epoch as f64,
            cl_loss: cl_sum / steps_per_epoch as f64,
            diff_loss,
            joint_loss: joint_sum / steps_per_epoch as f64,
            wall_time_s: started.elapsed().as_secs_f64(),
            metrics: None,
        };

        // periodic evaluation with early stopping
        let mut stop = false;
        if config.eval_every > 0 && epoch % config.eval_every == 0 {
            let result = model.evaluate(&adj, ds)?;
            record.metrics = Some(result.metrics.clone());
            let current = result.metrics.get(EARLY_STOP_METRIC).copied().unwrap_or(0.0);
            if current > best_metric {
                best_metric = current;
                best_snapshot = Some(model.embeddings.clone());
                evals_since_best = 0;
            } else {
                evals_since_best += 1;
                if evals_since_best >= config.patience {
                    stop = true;
                }
            }
        }
        report.epochs.push(record);
        if stop {
            break;
        }
    }

    if let Some(best) = best_snapshot {
        model.embeddings = best;
    }
    let final_result = model.evaluate(&adj, ds)?;
    report.final_metrics = final_result.metrics;
    Ok((model, report))
}

/// Builds the dataset named by the config: a file when `data` is set,
/// otherwise the synthetic block generator.
pub fn dataset_from_config(config: &TrainConfig) -> Result<InteractionDataset, crate::DgclError> {
    let raw = match &config.data_path {
        Some(path) => crate::data::load_interactions(path)?,
        None => crate::data::synthetic_blocks(
            config.synth_users,
            config.synth_items,
            config.synth_blocks,
            config.synth_prob,
            &mut substream(config.seed, "synthetic", 0),
        ),
    };
    Ok(crate::data::split_train_test(
        &raw,
        config.split_ratio,
        &mut substream(config.seed, "split", 0),
    )?)
}
