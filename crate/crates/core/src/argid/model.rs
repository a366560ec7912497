use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{FeatureVector, TemplateConfig};
use super::ArgIdError;
use crate::deptree::Span;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub lambda: f64,
    pub rho: f64,
    pub epsilon: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            lambda: 1e-6,
            rho: 0.95,
            epsilon: 1e-6,
        }
    }
}

/// Sparse linear scorer with AdaDelta state.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Model {
    pub weights: HashMap<u64, f64>,
    grad_accum: HashMap<u64, f64>,
    update_accum: HashMap<u64, f64>,
    pub hyper: Hyperparams,
    pub templates: TemplateConfig,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    template_config: TemplateConfig,
    hyperparams: Hyperparams,
    weights: BTreeMap<u64, f64>,
    grad_accum: BTreeMap<u64, f64>,
    update_accum: BTreeMap<u64, f64>,
}

impl Model {
    pub fn new(hyper: Hyperparams, templates: TemplateConfig) -> Result<Model, ArgIdError> {
        if hyper.lambda.is_nan() || hyper.lambda < 0.0 {
            return Err(ArgIdError::InvalidHyperparams(format!(
                "lambda {} < 0",
                hyper.lambda
            )));
        }
        if !(0.0..1.0).contains(&hyper.rho) || hyper.epsilon.is_nan() || hyper.epsilon <= 0.0 {
            return Err(ArgIdError::InvalidHyperparams(format!(
                "rho {} must lie in [0, 1) and epsilon {} be positive",
                hyper.rho, hyper.epsilon
            )));
        }
        Ok(Model {
            hyper,
            templates,
            ..Default::default()
        })
    }

    pub fn weight(&self, id: u64) -> f64 {
        self.weights.get(&id).copied().unwrap_or(0.0)
    }

    /// `w . phi`; missing weights read as zero.
    pub fn score(&self, fv: &FeatureVector) -> f64 {
        fv.iter().map(|(id, v)| self.weight(id) * v).sum()
    }

    pub fn squared_norm(&self) -> f64 {
        self.weights.values().map(|w| w * w).sum()
    }

    /// One AdaDelta step on `grad` plus the L2 term on the same coordinates.
    pub fn apply_gradient(&mut self, grad: &[(u64, f64)]) {
        let Hyperparams {
            lambda,
            rho,
            epsilon,
        } = self.hyper;
        for &(id, g) in grad {
            let w = self.weights.entry(id).or_insert(0.0);
            let g = g + lambda * *w;
            let eg = self.grad_accum.entry(id).or_insert(0.0);
            *eg = rho * *eg + (1.0 - rho) * g * g;
            let ed = self.update_accum.entry(id).or_insert(0.0);
            let delta = -((*ed + epsilon).sqrt() / (*eg + epsilon).sqrt()) * g;
            *ed = rho * *ed + (1.0 - rho) * delta * delta;
            *w += delta;
        }
    }

    /// An update with zero data loss on the given coordinates.
    pub fn regularize(&mut self, ids: &[u64]) {
        let zero: Vec<(u64, f64)> = ids.iter().map(|&id| (id, 0.0)).collect();
        self.apply_gradient(&zero);
    }

    pub fn to_json(&self) -> String {
        let sorted = |m: &HashMap<u64, f64>| m.iter().map(|(k, v)| (*k, *v)).collect();
        let file = ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            template_config: self.templates.clone(),
            hyperparams: self.hyper,
            weights: sorted(&self.weights),
            grad_accum: sorted(&self.grad_accum),
            update_accum: sorted(&self.update_accum),
        };
        serde_json::to_string(&file).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Model, ArgIdError> {
        let file: ModelFile =
            serde_json::from_str(s).map_err(|e| ArgIdError::ModelFormat(e.to_string()))?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(ArgIdError::ModelFormat(format!(
                "unsupported format version {}",
                file.format_version
            )));
        }
        Ok(Model {
            weights: file.weights.into_iter().collect(),
            grad_accum: file.grad_accum.into_iter().collect(),
            update_accum: file.update_accum.into_iter().collect(),
            hyper: file.hyperparams,
            templates: file.template_config,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), ArgIdError> {
        fs::write(path, self.to_json()).map_err(|e| ArgIdError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Model, ArgIdError> {
        let s = fs::read_to_string(path).map_err(|e| ArgIdError::io(path, e))?;
        Model::from_json(&s)
    }
}

/// One (annotation set, role) pair with its options already featurized.
/// Option 0 is the null span.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainInstance {
    pub options: Vec<Option<Span>>,
    pub features: Vec<FeatureVector>,
    pub gold: usize,
}

/// Squared structured hinge loss and its gradient.
///
/// The margin violator maximizes score plus unit cost over all options,
/// the null span included; ties go to the gold option, then the lowest
/// index.
pub fn instance_loss(m: &Model, inst: &TrainInstance) -> (f64, FeatureVector) {
    let gold_score = m.score(&inst.features[inst.gold]);
    let mut best = (inst.gold, gold_score);
    for (j, fv) in inst.features.iter().enumerate() {
        if j == inst.gold {
            continue;
        }
        let s = m.score(fv) + 1.0;
        if s > best.1 {
            best = (j, s);
        }
    }
    let (h, augmented) = best;
    if h == inst.gold {
        return (0.0, FeatureVector::default());
    }
    let inner = augmented - gold_score;
    let grad = inst.features[h].combine(2.0 * inner, &inst.features[inst.gold], -2.0 * inner);
    (inner * inner, grad)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub avg_loss: f64,
    /// Average loss plus `lambda / 2 * |w|^2`.
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    pub epochs: usize,
    pub seed: u64,
}

pub fn evaluate(m: &Model, instances: &[TrainInstance]) -> (f64, f64) {
    if instances.is_empty() {
        return (0.0, m.hyper.lambda / 2.0 * m.squared_norm());
    }
    let total: f64 = instances.iter().map(|i| instance_loss(m, i).0).sum();
    let avg = total / instances.len() as f64;
    (avg, avg + m.hyper.lambda / 2.0 * m.squared_norm())
}

/// Online training. Instances are visited in a fresh seeded permutation
/// each epoch; stats are reported before training (epoch 0) and after
/// every epoch.
pub fn train(
    m: &mut Model,
    instances: &[TrainInstance],
    opts: TrainOptions,
) -> Result<Vec<EpochStats>, ArgIdError> {
    if opts.epochs == 0 {
        return Err(ArgIdError::InvalidHyperparams(
            "epochs must be at least 1".into(),
        ));
    }
    let mut history = Vec::with_capacity(opts.epochs + 1);
    if instances.is_empty() {
        return Ok(history);
    }
    let stats = |m: &Model, epoch| {
        let (avg_loss, objective) = evaluate(m, instances);
        EpochStats {
            epoch,
            avg_loss,
            objective,
        }
    };
    history.push(stats(m, 0));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut order: Vec<usize> = (0..instances.len()).collect();
    for epoch in 1..=opts.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let inst = &instances[i];
            let (_, grad) = instance_loss(m, inst);
            let mut touched: Vec<(u64, f64)> = grad.iter().collect();
            if touched.is_empty() {
                // loss is flat here; still decay the gold option's weights
                touched = inst.features[inst.gold].ids().map(|id| (id, 0.0)).collect();
            }
            m.apply_gradient(&touched);
        }
        let s = stats(m, epoch);
        log::info!(
            "epoch {epoch}: avg loss {:.6e}, objective {:.6e}",
            s.avg_loss,
            s.objective
        );
        history.push(s);
    }
    Ok(history)
}
