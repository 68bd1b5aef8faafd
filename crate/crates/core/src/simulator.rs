//! Round orchestration: participant sampling, local SGD on client shards,
//! optional attacks, aggregation under one of the three rules, stopping
//! rules, and per-round metric collection.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::aggregation::{
    aggregate_modified, byzantine_manipulate, degree_of_divergence, drag_manipulate,
    fedavg_aggregate, DragConfig, ModifiedUpdate, ReferenceState,
};
use crate::attacks::{apply_attack, select_attackers, AttackConfig};
use crate::data::{
    draw_batch, gen_gaussian_mixture, partition_label_skew, sample_root, Dataset, Partition,
    RootDataset,
};
use crate::error::{Error, Result};
use crate::models::{accuracy, grad, init_params, loss, Example, ModelSpec};
use crate::seeding::{self, stream};
use crate::vecmath::ParamVector;

/// Which rule merges the client updates each round.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Aggregator {
    Fedavg,
    Drag,
    DragByzantine,
}

/// Where the train and test datasets come from.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum DataSpec {
    /// Synthetic well-separated Gaussian blobs, one per class. The test set
    /// uses the same mixture with a disjoint seed.
    GaussianMixture {
        classes: usize,
        per_class: usize,
        dim: usize,
        separation: f64,
        test_per_class: usize,
    },
    /// Externally loaded data; the embedding application reads the files and
    /// calls [`Experiment::with_datasets`].
    Csv { train: String, test: String },
}

#[cfg(feature = "serde")]
fn default_local_steps() -> usize {
    5
}

#[cfg(feature = "serde")]
fn default_eta() -> f64 {
    0.1
}

/// Everything that parameterizes a run. A run's full record list is a pure
/// function of this value.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExperimentConfig {
    /// Total number of clients (M).
    pub clients: usize,
    /// Participants sampled per round (S).
    pub participants: usize,
    /// Local SGD steps per round (U).
    #[cfg_attr(feature = "serde", serde(default = "default_local_steps"))]
    pub local_steps: usize,
    /// Mini-batch size (B).
    pub batch_size: usize,
    /// Stepsize.
    #[cfg_attr(feature = "serde", serde(default = "default_eta"))]
    pub eta: f64,
    /// Hard cap on the number of rounds.
    pub max_rounds: usize,
    /// Stop once test accuracy reaches this value, if set.
    #[cfg_attr(feature = "serde", serde(default))]
    pub target_accuracy: Option<f64>,
    pub aggregator: Aggregator,
    #[cfg_attr(feature = "serde", serde(default))]
    pub drag: DragConfig,
    #[cfg_attr(feature = "serde", serde(default))]
    pub attack: Option<AttackConfig>,
    /// Size of the server's trusted root sample (required by
    /// [`Aggregator::DragByzantine`]).
    #[cfg_attr(feature = "serde", serde(default))]
    pub n_root: Option<usize>,
    /// Label-skew heterogeneity: probability that an example lands on its
    /// home client. `1/clients` is homogeneous, `1` is maximal skew.
    pub q: f64,
    pub model: ModelSpec,
    pub data: DataSpec,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.clients == 0 {
            return Err(Error::config("clients", "need at least 1 client"));
        }
        if self.participants == 0 || self.participants > self.clients {
            return Err(Error::config(
                "participants",
                "must lie in [1, clients]",
            ));
        }
        if self.local_steps == 0 {
            return Err(Error::config("local_steps", "must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size", "must be at least 1"));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::config("eta", "must be positive and finite"));
        }
        let lo = 1.0 / self.clients as f64;
        if !(lo..=1.0).contains(&self.q) {
            return Err(Error::config(
                "q",
                alloc::format!("must lie in [1/clients, 1] = [{lo}, 1]"),
            ));
        }
        if let Some(target) = self.target_accuracy {
            if !(0.0..=1.0).contains(&target) {
                return Err(Error::config("target_accuracy", "must lie in [0, 1]"));
            }
        }
        self.drag.validate()?;
        if let Some(attack) = &self.attack {
            attack.validate()?;
            if attack.num_attackers > self.participants {
                return Err(Error::config(
                    "attack.num_attackers",
                    "must not exceed participants",
                ));
            }
        }
        if self.aggregator == Aggregator::DragByzantine && self.n_root.is_none() {
            return Err(Error::config(
                "n_root",
                "drag_byzantine requires a root dataset size",
            ));
        }
        if let Some(n_root) = self.n_root {
            if n_root == 0 {
                return Err(Error::config("n_root", "must be at least 1"));
            }
        }
        self.model.validate()?;
        if let DataSpec::GaussianMixture {
            classes,
            per_class,
            dim,
            separation,
            test_per_class,
        } = &self.data
        {
            if *classes < 2 {
                return Err(Error::config("data.classes", "need at least 2 classes"));
            }
            if *per_class == 0 || *test_per_class == 0 {
                return Err(Error::config("data.per_class", "must be at least 1"));
            }
            if *dim == 0 {
                return Err(Error::config("data.dim", "must be at least 1"));
            }
            if !separation.is_finite() || *separation <= 0.0 {
                return Err(Error::config("data.separation", "must be positive"));
            }
            if self.model.input_dim() != *dim {
                return Err(Error::config(
                    "model.input_dim",
                    "must equal data.dim",
                ));
            }
            if self.model.num_classes() != *classes {
                return Err(Error::config(
                    "model.num_classes",
                    "must equal data.classes",
                ));
            }
        }
        Ok(())
    }
}

/// One client's contribution to a round.
#[derive(Clone, Debug, PartialEq)]
pub struct ClientUpdate {
    pub client_id: usize,
    /// Model delta after the local steps (post-attack if `attacked`).
    pub g: ParamVector,
    pub attacked: bool,
}

/// Metrics for one completed round, evaluated at the post-update model.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RoundRecord {
    pub round: usize,
    /// Mean cross-entropy over the full training set.
    pub train_loss: f64,
    /// Accuracy on the held-out test set.
    pub test_accuracy: f64,
    /// Squared norm of the full-training-set gradient.
    pub grad_norm_sq: f64,
    /// Divergence statistics over the round's participants; `None` when the
    /// round performed no divergence scoring (fedavg, or drag with c = 0).
    pub mean_lambda: Option<f64>,
    pub max_lambda: Option<f64>,
    pub participants: Vec<usize>,
    pub attackers: Vec<usize>,
    /// Scalars the attackers multiplied into their updates, in attacker order.
    pub attack_scalars: Vec<f64>,
    /// True when the reference direction was numerically zero and the round
    /// fell back to plain averaging behavior.
    pub degenerate_reference: bool,
}

/// Execution knobs that do not affect results.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ExecOptions {
    /// Run client updates on a rayon pool (needs the `parallel` feature;
    /// silently sequential otherwise). Records are identical either way.
    pub parallel: bool,
    /// Re-derive the reference direction from its closed form every round
    /// and fail the run if the recursion disagrees.
    pub verify_reference: bool,
}

/// Samples `participants` distinct client ids uniformly without replacement,
/// returned in ascending order.
pub fn sample_participants<R: Rng>(
    clients: usize,
    participants: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if participants == 0 || participants > clients {
        return Err(Error::config("participants", "must lie in [1, clients]"));
    }
    let mut ids: Vec<usize> = rand::seq::index::sample(rng, clients, participants).into_vec();
    ids.sort_unstable();
    Ok(ids)
}

/// Runs `local_steps` mini-batch SGD steps from `theta` on `shard` and
/// returns the model delta `theta_final - theta`.
pub fn local_sgd<R: Rng>(
    spec: &ModelSpec,
    theta: &ParamVector,
    shard: &[&Example],
    local_steps: usize,
    batch_size: usize,
    eta: f64,
    rng: &mut R,
) -> Result<ParamVector> {
    if shard.is_empty() {
        return Err(Error::Empty("shard"));
    }
    if local_steps == 0 {
        return Err(Error::config("local_steps", "must be at least 1"));
    }
    let mut current = theta.clone();
    for _ in 0..local_steps {
        let batch = draw_batch(shard, batch_size, rng)?;
        let g = grad(spec, &current, &batch)?;
        current = current.axpy(-eta, &g)?;
    }
    current.axpy(-1.0, theta)
}

/// The robust reference direction: the delta obtained by running the same
/// local SGD procedure on the server's root dataset.
pub fn compute_root_reference<R: Rng>(
    spec: &ModelSpec,
    theta: &ParamVector,
    root: &RootDataset,
    local_steps: usize,
    batch_size: usize,
    eta: f64,
    rng: &mut R,
) -> Result<ParamVector> {
    if root.is_empty() {
        return Err(Error::Empty("root dataset"));
    }
    let shard: Vec<&Example> = root.examples().iter().collect();
    local_sgd(spec, theta, &shard, local_steps, batch_size, eta, rng)
}

/// A running experiment: datasets, partition, current model, and the
/// server's aggregation state.
pub struct Experiment {
    config: ExperimentConfig,
    options: ExecOptions,
    train: Dataset,
    test: Dataset,
    partition: Partition,
    root: Option<RootDataset>,
    pinned_attackers: Option<BTreeSet<usize>>,
    theta: ParamVector,
    reference: Option<ReferenceState>,
    last_delta: Option<ParamVector>,
    round: usize,
}

impl Experiment {
    /// Builds the experiment, generating synthetic datasets from the config.
    /// CSV-backed configs must go through [`Experiment::with_datasets`].
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let (train, test) = match &config.data {
            DataSpec::GaussianMixture {
                classes,
                per_class,
                dim,
                separation,
                test_per_class,
            } => {
                let train = gen_gaussian_mixture(
                    *classes,
                    *per_class,
                    *dim,
                    *separation,
                    seeding::derive(config.seed, &[stream::TRAIN_DATA]),
                )?;
                let test = gen_gaussian_mixture(
                    *classes,
                    *test_per_class,
                    *dim,
                    *separation,
                    seeding::derive(config.seed, &[stream::TEST_DATA]),
                )?;
                (train, test)
            }
            DataSpec::Csv { .. } => {
                return Err(Error::config(
                    "data",
                    "csv datasets must be loaded by the caller; use with_datasets",
                ))
            }
        };
        Self::assemble(config, train, test)
    }

    /// Builds the experiment around externally provided datasets.
    pub fn with_datasets(config: ExperimentConfig, train: Dataset, test: Dataset) -> Result<Self> {
        config.validate()?;
        Self::assemble(config, train, test)
    }

    fn assemble(config: ExperimentConfig, train: Dataset, test: Dataset) -> Result<Self> {
        for (name, ds) in [("train", &train), ("test", &test)] {
            if ds.feature_dim() != config.model.input_dim() {
                return Err(Error::config(
                    "model.input_dim",
                    alloc::format!("must equal the {name} dataset feature dimension"),
                ));
            }
            if ds.num_classes() != config.model.num_classes() {
                return Err(Error::config(
                    "model.num_classes",
                    alloc::format!("must equal the {name} dataset class count"),
                ));
            }
        }
        let partition = partition_label_skew(
            &train,
            config.clients,
            config.q,
            seeding::derive(config.seed, &[stream::PARTITION]),
        )?;
        let root = match config.n_root {
            Some(n) => Some(sample_root(
                &train,
                n,
                seeding::derive(config.seed, &[stream::ROOT_SAMPLE]),
            )?),
            None => None,
        };
        let pinned_attackers = match &config.attack {
            Some(attack) if attack.fixed_identities && attack.num_attackers > 0 => {
                let everyone: Vec<usize> = (0..config.clients).collect();
                Some(select_attackers(
                    &everyone,
                    attack.num_attackers,
                    &mut seeding::rng(attack.seed, &[stream::ATTACK_SELECT]),
                )?)
            }
            _ => None,
        };
        let theta = init_params(&config.model, config.seed);
        Ok(Experiment {
            config,
            options: ExecOptions::default(),
            train,
            test,
            partition,
            root,
            pinned_attackers,
            theta,
            reference: None,
            last_delta: None,
            round: 0,
        })
    }

    pub fn with_options(mut self, options: ExecOptions) -> Self {
        self.options = options;
        self
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn theta(&self) -> &ParamVector {
        &self.theta
    }

    /// The server's current reference direction (drag mode, after round 0).
    pub fn reference_direction(&self) -> Option<&ParamVector> {
        self.reference.as_ref().map(|state| state.direction())
    }

    pub fn round(&self) -> usize {
        self.round
    }

    fn attackers_for_round(&self, participants: &[usize], t: usize) -> Result<BTreeSet<usize>> {
        let attack = match &self.config.attack {
            Some(attack) if attack.num_attackers > 0 => attack,
            _ => return Ok(BTreeSet::new()),
        };
        if let Some(pinned) = &self.pinned_attackers {
            Ok(participants
                .iter()
                .copied()
                .filter(|id| pinned.contains(id))
                .collect())
        } else {
            select_attackers(
                participants,
                attack.num_attackers,
                &mut seeding::rng(attack.seed, &[stream::ATTACK_SELECT, t as u64]),
            )
        }
    }

    fn client_update(
        &self,
        client_id: usize,
        t: usize,
        attackers: &BTreeSet<usize>,
    ) -> Result<(ClientUpdate, Option<f64>)> {
        let shard: Vec<&Example> = self.partition.shards()[client_id]
            .iter()
            .map(|&i| &self.train.examples()[i])
            .collect();
        let mut rng = seeding::rng(
            self.config.seed,
            &[stream::CLIENT_SGD, t as u64, client_id as u64],
        );
        let mut g = local_sgd(
            &self.config.model,
            &self.theta,
            &shard,
            self.config.local_steps,
            self.config.batch_size,
            self.config.eta,
            &mut rng,
        )?;
        let attacked = attackers.contains(&client_id);
        let mut scalar = None;
        if attacked {
            let attack = self.config.attack.as_ref().expect("attacked implies config");
            let mut attack_rng = seeding::rng(
                attack.seed,
                &[stream::ATTACK_SCALAR, t as u64, client_id as u64],
            );
            let (hit, p) = apply_attack(&g, attack, &mut attack_rng);
            g = hit;
            scalar = Some(p);
        }
        Ok((
            ClientUpdate {
                client_id,
                g,
                attacked,
            },
            scalar,
        ))
    }

    fn compute_updates(
        &self,
        participants: &[usize],
        t: usize,
        attackers: &BTreeSet<usize>,
    ) -> Result<Vec<(ClientUpdate, Option<f64>)>> {
        #[cfg(feature = "parallel")]
        if self.options.parallel {
            use rayon::prelude::*;
            return participants
                .par_iter()
                .map(|&id| self.client_update(id, t, attackers))
                .collect();
        }
        participants
            .iter()
            .map(|&id| self.client_update(id, t, attackers))
            .collect()
    }

    /// Executes one training round and returns its record.
    pub fn step(&mut self) -> Result<RoundRecord> {
        let t = self.round;
        let mut participant_rng =
            seeding::rng(self.config.seed, &[stream::PARTICIPANTS, t as u64]);
        let participants = sample_participants(
            self.config.clients,
            self.config.participants,
            &mut participant_rng,
        )?;
        let attackers = self.attackers_for_round(&participants, t)?;
        let results = self.compute_updates(&participants, t, &attackers)?;
        let updates: Vec<ClientUpdate> = results.iter().map(|(u, _)| u.clone()).collect();
        let attack_scalars: Vec<f64> = results.iter().filter_map(|(_, p)| *p).collect();
        let raw: Vec<ParamVector> = updates.iter().map(|u| u.g.clone()).collect();

        let c = self.config.drag.c;
        let alpha = self.config.drag.alpha;
        let mut lambda_stats: Option<(f64, f64)> = None;
        let mut degenerate_reference = false;

        let theta_next = match self.config.aggregator {
            Aggregator::Fedavg => fedavg_aggregate(&raw, &self.theta)?,
            Aggregator::Drag => {
                if self.reference.is_none() {
                    let state = if self.options.verify_reference {
                        ReferenceState::init_traced(&raw)?
                    } else {
                        ReferenceState::init(&raw)?
                    };
                    self.reference = Some(state);
                } else {
                    let state = self.reference.as_mut().expect("checked above");
                    let delta_prev = self
                        .last_delta
                        .as_ref()
                        .expect("delta recorded each round");
                    state.update(delta_prev, alpha)?;
                    if self.options.verify_reference {
                        let err = state
                            .closed_form_error(alpha)
                            .expect("traced state after round 0");
                        if err > 1e-9 {
                            return Err(Error::Verification(
                                "reference recursion diverged from closed form",
                            ));
                        }
                    }
                }
                let state = self.reference.as_mut().expect("initialized above");
                let delta = if c == 0.0 {
                    // Scoring is a no-op at c = 0, so the round collapses to
                    // plain averaging and records no divergence statistics.
                    ParamVector::mean(raw.iter())?
                } else {
                    let reference = state.direction().clone();
                    if reference.is_degenerate() {
                        degenerate_reference = true;
                    }
                    let mut modified = Vec::with_capacity(updates.len());
                    for update in &updates {
                        let score = degree_of_divergence(&update.g, &reference, c)?;
                        modified.push(drag_manipulate(&update.g, &reference, score)?);
                    }
                    lambda_stats = summarize_lambdas(&modified);
                    aggregate_modified(&modified)?
                };
                state.record_delta(&delta);
                self.last_delta = Some(delta.clone());
                self.theta.axpy(1.0, &delta)?
            }
            Aggregator::DragByzantine => {
                let root = self.root.as_ref().expect("validated n_root");
                let mut root_rng =
                    seeding::rng(self.config.seed, &[stream::ROOT_SGD, t as u64]);
                let reference = compute_root_reference(
                    &self.config.model,
                    &self.theta,
                    root,
                    self.config.local_steps,
                    self.config.batch_size,
                    self.config.eta,
                    &mut root_rng,
                )?;
                if reference.is_degenerate() {
                    degenerate_reference = true;
                }
                let mut modified = Vec::with_capacity(updates.len());
                for update in &updates {
                    let score = degree_of_divergence(&update.g, &reference, c)?;
                    modified.push(byzantine_manipulate(&update.g, &reference, score)?);
                }
                lambda_stats = summarize_lambdas(&modified);
                let delta = aggregate_modified(&modified)?;
                self.theta.axpy(1.0, &delta)?
            }
        };
        self.theta = theta_next;
        self.round += 1;

        let (train_loss, test_accuracy, grad_norm_sq) = self.evaluate()?;
        Ok(RoundRecord {
            round: t,
            train_loss,
            test_accuracy,
            grad_norm_sq,
            mean_lambda: lambda_stats.map(|(mean, _)| mean),
            max_lambda: lambda_stats.map(|(_, max)| max),
            participants,
            attackers: attackers.into_iter().collect(),
            attack_scalars,
            degenerate_reference,
        })
    }

    fn evaluate(&self) -> Result<(f64, f64, f64)> {
        let train_refs: Vec<&Example> = self.train.examples().iter().collect();
        let train_loss = loss(&self.config.model, &self.theta, &train_refs)?;
        let g = grad(&self.config.model, &self.theta, &train_refs)?;
        let grad_norm_sq = g.inner(&g)?;
        let test_accuracy = accuracy(&self.config.model, &self.theta, self.test.examples())?;
        Ok((train_loss, test_accuracy, grad_norm_sq))
    }

    /// Runs rounds until the round cap or the target accuracy is reached.
    pub fn run(&mut self) -> Result<Vec<RoundRecord>> {
        let mut records = Vec::new();
        while self.round < self.config.max_rounds {
            let record = self.step()?;
            let reached = self
                .config
                .target_accuracy
                .is_some_and(|target| record.test_accuracy >= target);
            records.push(record);
            if reached {
                break;
            }
        }
        Ok(records)
    }
}

fn summarize_lambdas(modified: &[ModifiedUpdate]) -> Option<(f64, f64)> {
    if modified.is_empty() {
        return None;
    }
    let mut sum = 0.0;
    let mut max = f64::NEG_INFINITY;
    for update in modified {
        sum += update.score.lambda;
        max = max.max(update.score.lambda);
    }
    Some((sum / modified.len() as f64, max))
}

/// Convenience wrapper: build and run to completion with default options.
pub fn run_experiment(config: ExperimentConfig) -> Result<Vec<RoundRecord>> {
    Experiment::new(config)?.run()
}

/// As [`run_experiment`] with explicit execution options.
pub fn run_experiment_with(
    config: ExperimentConfig,
    options: ExecOptions,
) -> Result<Vec<RoundRecord>> {
    Experiment::new(config)?.with_options(options).run()
}
