//! Synthetic datasets, heterogeneous label-skew partitioning across clients,
//! root-dataset extraction, and batch sampling.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::math;
use crate::models::Example;
use crate::seeding;

/// A labeled dataset with `num_classes` classes.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    examples: Vec<Example>,
    num_classes: usize,
}

impl Dataset {
    /// Validates that the dataset is nonempty, labels are in range, and all
    /// feature vectors share one finite-valued dimension.
    pub fn new(examples: Vec<Example>, num_classes: usize) -> Result<Self> {
        if examples.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        let dim = examples[0].features.len();
        if dim == 0 {
            return Err(Error::Empty("feature vector"));
        }
        for example in &examples {
            if example.features.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: example.features.len(),
                });
            }
            if example.features.iter().any(|f| !f.is_finite()) {
                return Err(Error::NonFinite);
            }
            if example.label >= num_classes {
                return Err(Error::config("label", "label out of class range"));
            }
        }
        Ok(Dataset {
            examples,
            num_classes,
        })
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn feature_dim(&self) -> usize {
        self.examples[0].features.len()
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

/// Disjoint client shards: `shards[m]` holds example indices into a dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    shards: Vec<Vec<usize>>,
}

impl Partition {
    pub fn shards(&self) -> &[Vec<usize>] {
        &self.shards
    }

    pub fn num_clients(&self) -> usize {
        self.shards.len()
    }
}

/// A small trusted sample held by the server.
#[derive(Clone, Debug, PartialEq)]
pub struct RootDataset {
    examples: Vec<Example>,
}

impl RootDataset {
    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

/// Class center for the synthetic mixture. Centers are pairwise at least
/// `separation` apart: evenly spaced on a circle in the first two
/// coordinates whose adjacent-center chord is exactly `separation` (the
/// remaining coordinates carry noise only), or evenly spaced on the line
/// when `dim == 1`.
fn class_center(class: usize, num_classes: usize, dim: usize, separation: f64) -> Vec<f64> {
    let mut center = alloc::vec![0.0; dim];
    if dim >= 2 {
        let angle = 2.0 * core::f64::consts::PI * class as f64 / num_classes as f64;
        let radius = separation / (2.0 * math::sin(core::f64::consts::PI / num_classes as f64));
        center[0] = radius * math::cos(angle);
        center[1] = radius * math::sin(angle);
    } else {
        center[0] = class as f64 * separation;
    }
    center
}

/// Synthetic mixture: `per_class` unit-variance isotropic Gaussian draws
/// around each of `num_classes` well-separated centers. Deterministic per
/// seed; examples are ordered class by class.
pub fn gen_gaussian_mixture(
    num_classes: usize,
    per_class: usize,
    dim: usize,
    separation: f64,
    seed: u64,
) -> Result<Dataset> {
    if num_classes < 2 {
        return Err(Error::config("data.classes", "need at least 2 classes"));
    }
    if per_class == 0 {
        return Err(Error::config("data.per_class", "must be at least 1"));
    }
    if dim == 0 {
        return Err(Error::config("data.dim", "must be at least 1"));
    }
    if !separation.is_finite() || separation <= 0.0 {
        return Err(Error::config("data.separation", "must be positive"));
    }
    let mut rng = seeding::rng(seed, &[seeding::stream::TRAIN_DATA]);
    let mut examples = Vec::with_capacity(num_classes * per_class);
    for class in 0..num_classes {
        let center = class_center(class, num_classes, dim, separation);
        for _ in 0..per_class {
            let features = center
                .iter()
                .map(|c| c + rng.sample::<f64, _>(StandardNormal))
                .collect();
            examples.push(Example::new(features, class));
        }
    }
    Dataset::new(examples, num_classes)
}

/// Label-skew partition: an example with label `l` goes to client
/// `l mod num_clients` with probability `q` and to each other client with
/// probability `(1-q)/(num_clients-1)`. Deterministic per seed.
///
/// Shards that end up empty are repaired by moving one example over from a
/// donor shard, preferring an example whose home client is the empty shard.
pub fn partition_label_skew(
    dataset: &Dataset,
    num_clients: usize,
    q: f64,
    seed: u64,
) -> Result<Partition> {
    if num_clients == 0 {
        return Err(Error::config("clients", "need at least 1 client"));
    }
    let lo = 1.0 / num_clients as f64;
    if !(lo..=1.0).contains(&q) {
        return Err(Error::config(
            "q",
            alloc::format!("must lie in [1/clients, 1] = [{lo}, 1]"),
        ));
    }
    if dataset.len() < num_clients {
        return Err(Error::config(
            "clients",
            "more clients than dataset examples",
        ));
    }
    let mut rng = seeding::rng(seed, &[seeding::stream::PARTITION]);
    let mut shards: Vec<Vec<usize>> = alloc::vec![Vec::new(); num_clients];
    for (i, example) in dataset.examples().iter().enumerate() {
        let home = example.label % num_clients;
        let u: f64 = rng.random();
        let client = if u < q || num_clients == 1 {
            home
        } else {
            // Uniform over the other clients.
            let j = rng.random_range(0..num_clients - 1);
            if j >= home {
                j + 1
            } else {
                j
            }
        };
        shards[client].push(i);
    }
    repair_empty_shards(dataset, &mut shards);
    Ok(Partition { shards })
}

/// Move one example into each empty shard, taken from the first donor shard
/// (of size >= 2) holding an example whose home client is the empty shard;
/// if no such example exists anywhere, from the largest shard.
fn repair_empty_shards(dataset: &Dataset, shards: &mut [Vec<usize>]) {
    let num_clients = shards.len();
    for m in 0..num_clients {
        if !shards[m].is_empty() {
            continue;
        }
        let mut donation: Option<(usize, usize)> = None;
        'search: for (d, shard) in shards.iter().enumerate() {
            if d == m || shard.len() < 2 {
                continue;
            }
            for (pos, &idx) in shard.iter().enumerate() {
                if dataset.examples()[idx].label % num_clients == m {
                    donation = Some((d, pos));
                    break 'search;
                }
            }
        }
        if donation.is_none() {
            let largest = (0..num_clients)
                .filter(|&d| d != m)
                .max_by_key(|&d| shards[d].len())
                .expect("at least two shards exist");
            if shards[largest].len() >= 2 {
                donation = Some((largest, shards[largest].len() - 1));
            }
        }
        if let Some((donor, pos)) = donation {
            let idx = shards[donor].remove(pos);
            shards[m].push(idx);
        }
    }
}

/// `n_root` examples sampled uniformly without replacement. Deterministic
/// per seed.
pub fn sample_root(dataset: &Dataset, n_root: usize, seed: u64) -> Result<RootDataset> {
    if n_root == 0 || n_root > dataset.len() {
        return Err(Error::config(
            "n_root",
            alloc::format!("must lie in [1, {}]", dataset.len()),
        ));
    }
    let mut rng = seeding::rng(seed, &[seeding::stream::ROOT_SAMPLE]);
    let indices = rand::seq::index::sample(&mut rng, dataset.len(), n_root);
    let examples = indices
        .into_iter()
        .map(|i| dataset.examples()[i].clone())
        .collect();
    Ok(RootDataset { examples })
}

/// `batch_size` examples drawn i.i.d. uniformly with replacement, advancing
/// `rng` deterministically.
pub fn draw_batch<'a, R: Rng>(
    shard: &[&'a Example],
    batch_size: usize,
    rng: &mut R,
) -> Result<Vec<&'a Example>> {
    if shard.is_empty() {
        return Err(Error::Empty("shard"));
    }
    if batch_size == 0 {
        return Err(Error::config("batch_size", "must be at least 1"));
    }
    Ok((0..batch_size)
        .map(|_| shard[rng.random_range(0..shard.len())])
        .collect())
}
