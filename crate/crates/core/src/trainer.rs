//! AdaGrad training of the weighted least-squares objective
//! `Σ f · (w_i·w̃_j + b_i + b̃_j − ln x)²`.
//!
//! The loss carries no ½ factor, so gradients include an explicit 2. With the
//! reference GloVe optimizer in mind, a learning rate here of 0.05 takes
//! first steps the size of its 0.1.
//!
//! Multi-threaded training is Hogwild-style: each worker takes a contiguous
//! slice of the epoch's shuffled records and updates the shared parameters
//! without locks. Parameters live in `AtomicU64` cells accessed with relaxed
//! loads and stores, which compile to plain moves, so races lose updates but
//! never tear a value. With one thread the result is fully deterministic.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::thread;

use rand::distr::{Distribution, Open01};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cooccur::{shuffle_records, CoocRecord};
use crate::error::{Error, Result};
use crate::weighting::WeightingScheme;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 50,
            epochs: 15,
            learning_rate: 0.05,
            seed: 1,
            threads: 1,
        }
    }
}

/// Main and context vectors with their biases and AdaGrad accumulators.
/// Row `i` of each matrix belongs to vocabulary index `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingModel {
    vocab_size: usize,
    dim: usize,
    main: Vec<f64>,
    context: Vec<f64>,
    main_bias: Vec<f64>,
    context_bias: Vec<f64>,
    main_sq: Vec<f64>,
    context_sq: Vec<f64>,
    main_bias_sq: Vec<f64>,
    context_bias_sq: Vec<f64>,
}

impl EmbeddingModel {
    /// Parameters uniform in `(-0.5/d, 0.5/d)`, accumulators at 1.
    pub fn init(vocab_size: usize, dim: usize, seed: u64) -> Self {
        assert!(vocab_size >= 1 && dim >= 1, "model needs V >= 1 and d >= 1");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / dim as f64;
        let mut draw = |len: usize| -> Vec<f64> {
            (0..len)
                .map(|_| {
                    let u: f64 = Open01.sample(&mut rng);
                    (u - 0.5) * scale
                })
                .collect()
        };
        let main = draw(vocab_size * dim);
        let context = draw(vocab_size * dim);
        let main_bias = draw(vocab_size);
        let context_bias = draw(vocab_size);
        EmbeddingModel {
            vocab_size,
            dim,
            main,
            context,
            main_bias,
            context_bias,
            main_sq: vec![1.0; vocab_size * dim],
            context_sq: vec![1.0; vocab_size * dim],
            main_bias_sq: vec![1.0; vocab_size],
            context_bias_sq: vec![1.0; vocab_size],
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn row(&self, i: usize) -> std::ops::Range<usize> {
        i * self.dim..(i + 1) * self.dim
    }

    pub fn main_vector(&self, i: usize) -> &[f64] {
        &self.main[self.row(i)]
    }

    pub fn context_vector(&self, i: usize) -> &[f64] {
        &self.context[self.row(i)]
    }

    pub fn main_vector_mut(&mut self, i: usize) -> &mut [f64] {
        let r = self.row(i);
        &mut self.main[r]
    }

    pub fn context_vector_mut(&mut self, i: usize) -> &mut [f64] {
        let r = self.row(i);
        &mut self.context[r]
    }

    pub fn main_bias(&self, i: usize) -> f64 {
        self.main_bias[i]
    }

    pub fn context_bias(&self, i: usize) -> f64 {
        self.context_bias[i]
    }

    pub fn set_main_bias(&mut self, i: usize, value: f64) {
        self.main_bias[i] = value;
    }

    pub fn set_context_bias(&mut self, i: usize, value: f64) {
        self.context_bias[i] = value;
    }

    pub fn main_accumulator(&self, i: usize) -> &[f64] {
        &self.main_sq[self.row(i)]
    }

    pub fn context_accumulator(&self, i: usize) -> &[f64] {
        &self.context_sq[self.row(i)]
    }

    pub fn bias_accumulators(&self, i: usize) -> (f64, f64) {
        (self.main_bias_sq[i], self.context_bias_sq[i])
    }

    /// Every trainable parameter, in a fixed order.
    pub fn parameters(&self) -> impl Iterator<Item = f64> + '_ {
        self.main
            .iter()
            .chain(&self.context)
            .chain(&self.main_bias)
            .chain(&self.context_bias)
            .copied()
    }

    fn accumulators(&self) -> impl Iterator<Item = f64> + '_ {
        self.main_sq
            .iter()
            .chain(&self.context_sq)
            .chain(&self.main_bias_sq)
            .chain(&self.context_bias_sq)
            .copied()
    }

    pub fn is_finite(&self) -> bool {
        self.parameters()
            .chain(self.accumulators())
            .all(f64::is_finite)
    }

    fn check_record(&self, record: &CoocRecord) -> Result<()> {
        let top = record.i.max(record.j) as usize;
        if top >= self.vocab_size {
            return Err(Error::SizeMismatch {
                expected: self.vocab_size,
                found: top + 1,
            });
        }
        Ok(())
    }
}

/// Gradient of one record's loss with respect to the four touched groups.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub main: Vec<f64>,
    pub context: Vec<f64>,
    pub main_bias: f64,
    pub context_bias: f64,
}

fn residual(main: &[f64], context: &[f64], main_bias: f64, context_bias: f64, x: f64) -> f64 {
    let dot: f64 = main.iter().zip(context).map(|(a, b)| a * b).sum();
    dot + main_bias + context_bias - x.ln()
}

/// Weighted squared residual of `record` and its gradients.
pub fn loss_and_gradients(
    model: &EmbeddingModel,
    record: &CoocRecord,
    weight: f64,
) -> Result<(f64, Gradients)> {
    model.check_record(record)?;
    let (i, j) = (record.i as usize, record.j as usize);
    let wi = model.main_vector(i);
    let wj = model.context_vector(j);
    let diff = residual(wi, wj, model.main_bias[i], model.context_bias[j], record.x);
    let loss = weight * diff * diff;
    let g = 2.0 * weight * diff;
    let grads = Gradients {
        main: wj.iter().map(|c| g * c).collect(),
        context: wi.iter().map(|m| g * m).collect(),
        main_bias: g,
        context_bias: g,
    };
    let all_finite = loss.is_finite()
        && g.is_finite()
        && grads
            .main
            .iter()
            .chain(&grads.context)
            .all(|v| v.is_finite());
    if !all_finite {
        return Err(Error::NonFinite(format!(
            "loss or gradient for record ({}, {})",
            record.i, record.j
        )));
    }
    Ok((loss, grads))
}

/// AdaGrad: step by `lr·grad/sqrt(accum)`, then add `grad²` to the accumulator.
#[inline]
pub fn adagrad_step(param: f64, grad: f64, accum: f64, lr: f64) -> (f64, f64) {
    (param - lr * grad / accum.sqrt(), accum + grad * grad)
}

/// Applies one AdaGrad update for `record` and returns its pre-update loss.
pub fn sgd_step(
    model: &mut EmbeddingModel,
    record: &CoocRecord,
    weight: f64,
    lr: f64,
) -> Result<f64> {
    let (loss, grads) = loss_and_gradients(model, record, weight)?;
    let (ri, rj) = (model.row(record.i as usize), model.row(record.j as usize));
    for (k, g) in ri.clone().zip(&grads.main) {
        (model.main[k], model.main_sq[k]) = adagrad_step(model.main[k], *g, model.main_sq[k], lr);
    }
    for (k, g) in rj.clone().zip(&grads.context) {
        (model.context[k], model.context_sq[k]) =
            adagrad_step(model.context[k], *g, model.context_sq[k], lr);
    }
    let (i, j) = (record.i as usize, record.j as usize);
    (model.main_bias[i], model.main_bias_sq[i]) = adagrad_step(
        model.main_bias[i],
        grads.main_bias,
        model.main_bias_sq[i],
        lr,
    );
    (model.context_bias[j], model.context_bias_sq[j]) = adagrad_step(
        model.context_bias[j],
        grads.context_bias,
        model.context_bias_sq[j],
        lr,
    );
    Ok(loss)
}

struct Cells(Vec<AtomicU64>);

impl Cells {
    fn new(values: &[f64]) -> Self {
        Cells(values.iter().map(|v| AtomicU64::new(v.to_bits())).collect())
    }

    #[inline]
    fn get(&self, k: usize) -> f64 {
        f64::from_bits(self.0[k].load(Ordering::Relaxed))
    }

    #[inline]
    fn set(&self, k: usize, v: f64) {
        self.0[k].store(v.to_bits(), Ordering::Relaxed)
    }

    fn into_vec(self) -> Vec<f64> {
        self.0
            .into_iter()
            .map(|a| f64::from_bits(a.into_inner()))
            .collect()
    }
}

struct SharedModel {
    dim: usize,
    main: Cells,
    context: Cells,
    main_bias: Cells,
    context_bias: Cells,
    main_sq: Cells,
    context_sq: Cells,
    main_bias_sq: Cells,
    context_bias_sq: Cells,
}

impl SharedModel {
    fn new(m: &EmbeddingModel) -> Self {
        SharedModel {
            dim: m.dim,
            main: Cells::new(&m.main),
            context: Cells::new(&m.context),
            main_bias: Cells::new(&m.main_bias),
            context_bias: Cells::new(&m.context_bias),
            main_sq: Cells::new(&m.main_sq),
            context_sq: Cells::new(&m.context_sq),
            main_bias_sq: Cells::new(&m.main_bias_sq),
            context_bias_sq: Cells::new(&m.context_bias_sq),
        }
    }

    fn into_model(self, vocab_size: usize) -> EmbeddingModel {
        EmbeddingModel {
            vocab_size,
            dim: self.dim,
            main: self.main.into_vec(),
            context: self.context.into_vec(),
            main_bias: self.main_bias.into_vec(),
            context_bias: self.context_bias.into_vec(),
            main_sq: self.main_sq.into_vec(),
            context_sq: self.context_sq.into_vec(),
            main_bias_sq: self.main_bias_sq.into_vec(),
            context_bias_sq: self.context_bias_sq.into_vec(),
        }
    }

    /// Same arithmetic as [`sgd_step`], on shared cells.
    fn run_slice(
        &self,
        records: &[CoocRecord],
        scheme: &WeightingScheme,
        lr: f64,
        epoch: usize,
        offset: usize,
        stop: &AtomicBool,
    ) -> Result<f64> {
        let d = self.dim;
        let mut wi = vec![0.0; d];
        let mut wj = vec![0.0; d];
        let mut total = 0.0;
        for (n, rec) in records.iter().enumerate() {
            if stop.load(Ordering::Relaxed) {
                break;
            }
            let weight = scheme.record_weight(rec)?;
            let (i, j) = (rec.i as usize, rec.j as usize);
            let (bi, bj) = (i * d, j * d);
            for k in 0..d {
                wi[k] = self.main.get(bi + k);
                wj[k] = self.context.get(bj + k);
            }
            let diff = residual(
                &wi,
                &wj,
                self.main_bias.get(i),
                self.context_bias.get(j),
                rec.x,
            );
            let loss = weight * diff * diff;
            if !loss.is_finite() {
                stop.store(true, Ordering::Relaxed);
                return Err(Error::NonFiniteLoss {
                    epoch,
                    record: offset + n,
                });
            }
            total += loss;
            let g = 2.0 * weight * diff;
            for k in 0..d {
                let (p, a) = adagrad_step(wi[k], g * wj[k], self.main_sq.get(bi + k), lr);
                self.main.set(bi + k, p);
                self.main_sq.set(bi + k, a);
                let (p, a) = adagrad_step(wj[k], g * wi[k], self.context_sq.get(bj + k), lr);
                self.context.set(bj + k, p);
                self.context_sq.set(bj + k, a);
            }
            let (p, a) = adagrad_step(self.main_bias.get(i), g, self.main_bias_sq.get(i), lr);
            self.main_bias.set(i, p);
            self.main_bias_sq.set(i, a);
            let (p, a) = adagrad_step(self.context_bias.get(j), g, self.context_bias_sq.get(j), lr);
            self.context_bias.set(j, p);
            self.context_bias_sq.set(j, a);
        }
        Ok(total)
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutput {
    pub model: EmbeddingModel,
    /// Mean per-record loss observed during each pass.
    pub epoch_losses: Vec<f64>,
}

/// Record order used in `epoch` (0-based): the previous epoch's order
/// reshuffled with seed `seed + epoch`.
pub fn epoch_order(previous: Vec<CoocRecord>, seed: u64, epoch: usize) -> Vec<CoocRecord> {
    shuffle_records(previous, seed.wrapping_add(epoch as u64))
}

pub fn train(
    records: &[CoocRecord],
    vocab_size: usize,
    scheme: &WeightingScheme,
    config: &TrainConfig,
) -> Result<TrainOutput> {
    train_with_progress(records, vocab_size, scheme, config, |_, _| {})
}

/// Like [`train`], calling `on_epoch(epoch, mean_loss)` after every pass
/// (epochs numbered from 1).
pub fn train_with_progress(
    records: &[CoocRecord],
    vocab_size: usize,
    scheme: &WeightingScheme,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<TrainOutput> {
    if records.is_empty() {
        return Err(Error::InvalidParameter(
            "no co-occurrence records to train on".into(),
        ));
    }
    if vocab_size == 0 || config.dim == 0 {
        return Err(Error::InvalidParameter(
            "vocabulary size and dimension must be positive".into(),
        ));
    }
    if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "learning rate must be positive, got {}",
            config.learning_rate
        )));
    }
    let model = EmbeddingModel::init(vocab_size, config.dim, config.seed);
    for rec in records {
        model.check_record(rec)?;
    }

    let shared = SharedModel::new(&model);
    let threads = config.threads.clamp(1, records.len());
    let mut order = records.to_vec();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order = epoch_order(order, config.seed, epoch);
        let stop = AtomicBool::new(false);
        let chunk = order.len().div_ceil(threads);
        let partials: Vec<Result<f64>> = if threads == 1 {
            vec![shared.run_slice(&order, scheme, config.learning_rate, epoch + 1, 0, &stop)]
        } else {
            thread::scope(|s| {
                let handles: Vec<_> = order
                    .chunks(chunk)
                    .enumerate()
                    .map(|(t, slice)| {
                        let (shared, stop) = (&shared, &stop);
                        s.spawn(move || {
                            shared.run_slice(
                                slice,
                                scheme,
                                config.learning_rate,
                                epoch + 1,
                                t * chunk,
                                stop,
                            )
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("training worker panicked"))
                    .collect()
            })
        };
        let mut total = 0.0;
        for partial in partials {
            total += partial?;
        }
        let mean = total / order.len() as f64;
        on_epoch(epoch + 1, mean);
        epoch_losses.push(mean);
    }

    let model = shared.into_model(vocab_size);
    if !model.is_finite() {
        return Err(Error::NonFinite("model parameters after training".into()));
    }
    Ok(TrainOutput {
        model,
        epoch_losses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn zero_model(v: usize, d: usize) -> EmbeddingModel {
        let mut m = EmbeddingModel::init(v, d, 0);
        for i in 0..v {
            m.main_vector_mut(i).fill(0.0);
            m.context_vector_mut(i).fill(0.0);
            m.set_main_bias(i, 0.0);
            m.set_context_bias(i, 0.0);
        }
        m
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let a = EmbeddingModel::init(3, 2, 7);
        assert_eq!(a, EmbeddingModel::init(3, 2, 7));
        assert_ne!(a, EmbeddingModel::init(3, 2, 8));
        assert!(a.parameters().all(|v| v.abs() < 0.25));
        assert!(a.accumulators().all(|v| v == 1.0));
    }

    #[test]
    fn zero_model_has_zero_loss_at_unit_mass() {
        let m = zero_model(2, 3);
        let (loss, g) = loss_and_gradients(&m, &CoocRecord::new(0, 1, 1.0), 0.7).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.main.iter().chain(&g.context).all(|&v| v == 0.0));
        assert_eq!((g.main_bias, g.context_bias), (0.0, 0.0));
    }

    #[test]
    fn hand_evaluated_gradient() {
        let mut m = zero_model(2, 1);
        m.main_vector_mut(0)[0] = 1.0;
        m.context_vector_mut(1)[0] = 2.0;
        m.set_main_bias(0, 0.5);
        m.set_context_bias(1, 0.5);
        let (loss, g) = loss_and_gradients(&m, &CoocRecord::new(0, 1, E), 1.0).unwrap();
        assert!((loss - 4.0).abs() < 1e-12);
        assert!((g.main[0] - 8.0).abs() < 1e-12);
        assert!((g.context[0] - 4.0).abs() < 1e-12);
        assert!((g.main_bias - 4.0).abs() < 1e-12);
        assert!((g.context_bias - 4.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_out_of_range_record() {
        let m = zero_model(2, 1);
        assert!(matches!(
            loss_and_gradients(&m, &CoocRecord::new(0, 2, 1.0), 1.0),
            Err(Error::SizeMismatch { .. })
        ));
    }

    #[test]
    fn non_finite_loss_is_an_error() {
        let mut m = zero_model(1, 1);
        m.main_vector_mut(0)[0] = 1e200;
        m.context_vector_mut(0)[0] = 1e200;
        assert!(matches!(
            loss_and_gradients(&m, &CoocRecord::new(0, 0, 1.0), 1.0),
            Err(Error::NonFinite(_))
        ));
        // weight 1, and a learning rate that blows the parameters up in epoch 1
        let scheme = WeightingScheme::classic(1e-310, 0.75).unwrap();
        let cfg = TrainConfig {
            dim: 1,
            epochs: 3,
            learning_rate: 1e300,
            ..TrainConfig::default()
        };
        let err = train(&[CoocRecord::new(0, 0, 1e-300)], 1, &scheme, &cfg).unwrap_err();
        assert!(
            matches!(
                err,
                Error::NonFiniteLoss {
                    epoch: 2,
                    record: 0
                }
            ),
            "{err}"
        );
    }

    #[test]
    fn adagrad_values() {
        let (p, a) = adagrad_step(0.0, 3.0, 1.0, 0.05);
        assert!((p + 0.15).abs() < 1e-15);
        assert_eq!(a, 10.0);
        assert_eq!(adagrad_step(0.4, 0.0, 2.5, 0.05), (0.4, 2.5));

        let (mut p, mut a) = (0.0, 1.0);
        let mut last = f64::INFINITY;
        for _ in 0..10 {
            let (np, na) = adagrad_step(p, 1.5, a, 0.1);
            let step = (p - np).abs();
            assert!(step < last);
            (p, a, last) = (np, na, step);
        }
    }

    #[test]
    fn zero_epochs_returns_initial_model() {
        let scheme = WeightingScheme::classic(100.0, 0.75).unwrap();
        let cfg = TrainConfig {
            dim: 4,
            epochs: 0,
            seed: 3,
            ..TrainConfig::default()
        };
        let out = train(&[CoocRecord::new(0, 1, 2.0)], 2, &scheme, &cfg).unwrap();
        assert!(out.epoch_losses.is_empty());
        assert_eq!(out.model, EmbeddingModel::init(2, 4, 3));
    }

    #[test]
    fn empty_records_rejected() {
        let scheme = WeightingScheme::classic(100.0, 0.75).unwrap();
        assert!(train(&[], 2, &scheme, &TrainConfig::default()).is_err());
    }

    #[test]
    fn single_thread_matches_manual_steps() {
        let scheme = WeightingScheme::extremal(0.5, [9, 4, 2, 1]).unwrap();
        let records: Vec<_> = (0..12u32)
            .map(|k| CoocRecord::new(k % 4, (k * 3 + 1) % 4, 0.5 + k as f64))
            .collect();
        let cfg = TrainConfig {
            dim: 3,
            epochs: 4,
            learning_rate: 0.05,
            seed: 11,
            threads: 1,
        };
        let out = train(&records, 4, &scheme, &cfg).unwrap();

        let mut model = EmbeddingModel::init(4, 3, 11);
        let mut order = records.clone();
        for epoch in 0..cfg.epochs {
            order = epoch_order(order, cfg.seed, epoch);
            let mut total = 0.0;
            for rec in &order {
                let w = scheme.record_weight(rec).unwrap();
                total += sgd_step(&mut model, rec, w, cfg.learning_rate).unwrap();
            }
            assert_eq!(out.epoch_losses[epoch], total / order.len() as f64);
        }
        assert_eq!(out.model, model);
    }

    #[test]
    fn multi_threaded_training_stays_finite() {
        let scheme = WeightingScheme::classic(10.0, 0.75).unwrap();
        let records: Vec<_> = (0..400u32)
            .map(|k| CoocRecord::new(k % 20, (k * 7) % 20, 1.0 + (k % 9) as f64))
            .collect();
        let cfg = TrainConfig {
            dim: 8,
            epochs: 5,
            threads: 4,
            ..TrainConfig::default()
        };
        let out = train(&records, 20, &scheme, &cfg).unwrap();
        assert!(out.model.is_finite());
        assert!(out.epoch_losses.last().unwrap() < &out.epoch_losses[0]);
    }
}
