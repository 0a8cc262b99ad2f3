//! Offline training-set generation, dataset serialization and the training
//! loop.
//!
//! Each sample draws a fresh channel: decay factor uniform on [0.01, 0.5],
//! labeling delay bound from the LOS prior, SNR from the 7-point grid, and a
//! uniform timing offset. The tap count is tied to the sampled `tau_l`
//! (delays are unit-step), so the labeled bound is also the true maximum
//! delay of the training channel.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::channel::{assemble_frame, draw_realization, exp_decay_profile};
use crate::correlator::{normalize, timing_metric, FeatureVector};
use crate::error::{Error, Result};
use crate::label::{build_label, sample_tau_l, LabelMode, LabelSpec, LosPrior, TimingLabel};
use crate::network::{Mlp, Sample, TrainState};
use crate::rng::{derive_seed, derived_rng};
use crate::signal::{local_sequence, OfdmConfig, TrainingSymbol};

/// SNR grid (dB) the training set draws from, each value with probability 1/7.
pub const SNR_GRID_DB: [f64; 7] = [-2.0, 0.0, 2.0, 4.0, 6.0, 8.0, 10.0];

/// Decay-factor range for the training channels.
pub const ETA_RANGE: (f64, f64) = (0.01, 0.5);

const DATASET_MAGIC: &[u8; 4] = b"TSDS";
const DATASET_VERSION: u32 = 1;

/// Stream tags keeping sample generation and training shuffles independent.
const SAMPLE_STREAM: u64 = 0x5a;
const TRAIN_STREAM: u64 = 0x7b;

/// Generation parameters recorded alongside each sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleMeta {
    pub theta: usize,
    /// True maximum delay of the channel that produced the sample.
    pub tau_l_true: usize,
    /// Delay bound used to build the label.
    pub tau_l_label: usize,
    pub snr_db: f64,
    pub eta: f64,
}

/// One training pair plus its generation record.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub q: FeatureVector,
    pub t: TimingLabel,
    pub meta: SampleMeta,
}

/// Dimension echo and provenance of a dataset file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DatasetHeader {
    pub n: usize,
    pub ng: usize,
    pub ns: usize,
    pub count: usize,
    pub seed: u64,
    pub mode: LabelMode,
}

/// An in-memory training set.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    header: DatasetHeader,
    samples: Vec<TrainingSample>,
}

pub(crate) fn draw_snr_db<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    SNR_GRID_DB[rng.random_range(0..SNR_GRID_DB.len())]
}

/// Caches the training symbol so per-sample generation does not redo the
/// IDFT of the fixed sequence.
pub struct SampleGenerator {
    config: OfdmConfig,
    prior: LosPrior,
    mode: LabelMode,
    symbol: TrainingSymbol,
    local: Vec<num_complex::Complex64>,
}

impl SampleGenerator {
    pub fn new(config: OfdmConfig, prior: LosPrior, mode: LabelMode) -> Result<Self> {
        Ok(SampleGenerator {
            symbol: TrainingSymbol::new(&config)?,
            local: local_sequence(&config)?,
            config,
            prior,
            mode,
        })
    }

    /// Draws one sample. A degenerate (all-zero) metric triggers a full
    /// redraw; after eight attempts the error propagates.
    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<TrainingSample> {
        const MAX_ATTEMPTS: usize = 8;
        let mut last_err = Error::DegenerateMetric;
        for _ in 0..MAX_ATTEMPTS {
            match self.try_generate(rng) {
                Ok(sample) => return Ok(sample),
                Err(Error::DegenerateMetric) => last_err = Error::DegenerateMetric,
                Err(other) => return Err(other),
            }
        }
        Err(last_err)
    }

    fn try_generate<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<TrainingSample> {
        let cfg = &self.config;
        let eta = rng.random_range(ETA_RANGE.0..=ETA_RANGE.1);
        let tau_l = sample_tau_l(&self.prior, cfg.ng(), rng)?;
        let snr_db = draw_snr_db(rng);
        let theta = rng.random_range(0..=cfg.max_theta());

        // Unit-step delays: tau_l + 1 taps realize a true max delay of tau_l.
        let profile = exp_decay_profile(tau_l + 1, eta)?;
        profile.check_fits(cfg)?;
        let realization = draw_realization(&profile, cfg, theta, 0.0, snr_db, rng)?;
        let stream = assemble_frame(cfg, &self.symbol, theta, rng)?;
        let frame = crate::channel::observe(&stream, &realization, cfg, rng)?;
        let metric = timing_metric(cfg, frame.y(), &self.local)?;
        let q = normalize(&metric)?;
        let spec = LabelSpec::new(theta, tau_l, cfg.ng(), cfg.ns(), self.mode)?;
        let t = build_label(&spec);
        Ok(TrainingSample {
            q,
            t,
            meta: SampleMeta { theta, tau_l_true: tau_l, tau_l_label: tau_l, snr_db, eta },
        })
    }
}

/// Generates `count` independent samples. Sample `i` owns the RNG stream
/// `(seed, SAMPLE_STREAM, i)`, so the result is identical no matter how
/// generation would be scheduled.
pub fn generate_dataset(
    config: &OfdmConfig,
    prior: &LosPrior,
    mode: LabelMode,
    count: usize,
    seed: u64,
) -> Result<Dataset> {
    if count == 0 {
        return Err(Error::InvalidParam("dataset needs at least one sample".into()));
    }
    let generator = SampleGenerator::new(*config, *prior, mode)?;
    let samples: Vec<TrainingSample> = (0..count)
        .map(|i| {
            let mut rng = derived_rng(seed, &[SAMPLE_STREAM, i as u64]);
            generator.generate(&mut rng)
        })
        .collect::<Result<_>>()?;
    Ok(Dataset {
        header: DatasetHeader {
            n: config.n(),
            ng: config.ng(),
            ns: config.ns(),
            count,
            seed,
            mode,
        },
        samples,
    })
}

impl Dataset {
    pub fn header(&self) -> &DatasetHeader {
        &self.header
    }

    pub fn samples(&self) -> &[TrainingSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Checks the dimension echo against a config before training or eval.
    pub fn check_config(&self, config: &OfdmConfig) -> Result<()> {
        if self.header.n != config.n() || self.header.ng != config.ng() {
            return Err(Error::DimensionMismatch {
                what: "dataset dimensions vs config",
                expected: config.ns(),
                got: self.header.ns,
            });
        }
        Ok(())
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(DATASET_MAGIC)?;
        w.write_all(&DATASET_VERSION.to_le_bytes())?;
        for dim in [self.header.n, self.header.ng, self.header.ns, self.header.count] {
            w.write_all(&(dim as u64).to_le_bytes())?;
        }
        w.write_all(&self.header.seed.to_le_bytes())?;
        w.write_all(&[match self.header.mode {
            LabelMode::Triangular => 0u8,
            LabelMode::Rectangular => 1u8,
        }])?;
        for sample in &self.samples {
            for dim in [sample.meta.theta, sample.meta.tau_l_true, sample.meta.tau_l_label] {
                w.write_all(&(dim as u64).to_le_bytes())?;
            }
            w.write_all(&sample.meta.snr_db.to_le_bytes())?;
            w.write_all(&sample.meta.eta.to_le_bytes())?;
            for v in sample.q.values() {
                w.write_all(&v.to_le_bytes())?;
            }
            for v in sample.t.values() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        fs::write(path, buf)?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Dataset> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|_| Error::Format("dataset file truncated before header".into()))?;
        if &magic != DATASET_MAGIC {
            return Err(Error::Format("not a dataset file (bad magic)".into()));
        }
        let mut u32buf = [0u8; 4];
        r.read_exact(&mut u32buf)
            .map_err(|_| Error::Format("dataset file truncated in header".into()))?;
        let version = u32::from_le_bytes(u32buf);
        if version != DATASET_VERSION {
            return Err(Error::Format(format!(
                "unsupported dataset version {version} (expected {DATASET_VERSION})"
            )));
        }
        let mut u64buf = [0u8; 8];
        let mut read_u64 = |r: &mut R| -> Result<u64> {
            r.read_exact(&mut u64buf)
                .map_err(|_| Error::Format("dataset file truncated in header".into()))?;
            Ok(u64::from_le_bytes(u64buf))
        };
        let n = read_u64(r)? as usize;
        let ng = read_u64(r)? as usize;
        let ns = read_u64(r)? as usize;
        let count = read_u64(r)? as usize;
        let seed = read_u64(r)?;
        if count == 0 {
            return Err(Error::Format("dataset header has zero samples".into()));
        }
        if ns != n + ng {
            return Err(Error::Format(format!(
                "dataset header is inconsistent: ns={ns} but n+ng={}",
                n + ng
            )));
        }
        let mut mode_byte = [0u8; 1];
        r.read_exact(&mut mode_byte)
            .map_err(|_| Error::Format("dataset file truncated in header".into()))?;
        let mode = match mode_byte[0] {
            0 => LabelMode::Triangular,
            1 => LabelMode::Rectangular,
            other => return Err(Error::Format(format!("unknown label mode {other}"))),
        };
        let mut f64buf = [0u8; 8];
        let mut read_f64 = |r: &mut R| -> Result<f64> {
            r.read_exact(&mut f64buf)
                .map_err(|_| Error::Format("dataset file truncated in payload".into()))?;
            Ok(f64::from_le_bytes(f64buf))
        };
        let mut samples = Vec::with_capacity(count);
        for _ in 0..count {
            let mut header = [0u8; 24];
            r.read_exact(&mut header)
                .map_err(|_| Error::Format("dataset file truncated in payload".into()))?;
            let word = |i: usize| u64::from_le_bytes(header[8 * i..8 * i + 8].try_into().unwrap());
            let theta = word(0) as usize;
            let tau_l_true = word(1) as usize;
            let tau_l_label = word(2) as usize;
            let snr_db = read_f64(r)?;
            let eta = read_f64(r)?;
            let mut q = Vec::with_capacity(ns);
            for _ in 0..ns {
                q.push(read_f64(r)?);
            }
            let mut t = Vec::with_capacity(ns);
            for _ in 0..ns {
                t.push(read_f64(r)?);
            }
            samples.push(TrainingSample {
                q: FeatureVector::new(q)?,
                t: TimingLabel::from_values(t)?,
                meta: SampleMeta { theta, tau_l_true, tau_l_label, snr_db, eta },
            });
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(Error::Format("dataset file has trailing bytes".into()));
        }
        Ok(Dataset {
            header: DatasetHeader { n, ng, ns, count, seed, mode },
            samples,
        })
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Dataset> {
        let bytes = fs::read(path)?;
        Dataset::read_from(&mut bytes.as_slice())
    }
}

/// Training-loop settings. Defaults: rate 0.001, per-sample updates
/// (batch 1), up to 100 epochs with a 10-epoch early-stopping patience on a
/// 10% validation split.
///
/// Per-sample SGD is the default because batching divides the update by the
/// batch size: at the fixed 0.001 rate a batch of 32 stretches convergence
/// far beyond the default epoch budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub val_fraction: f64,
    /// Per-epoch multiplicative rate decay; 1.0 disables the hook.
    pub lr_decay: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            learning_rate: 0.001,
            batch_size: 1,
            max_epochs: 100,
            patience: 10,
            val_fraction: 0.1,
            lr_decay: 1.0,
        }
    }
}

/// Per-epoch training and validation losses.
#[derive(Debug, Clone, PartialEq)]
pub struct LossTrace {
    pub train: Vec<f64>,
    pub val: Vec<f64>,
}

fn validate_hyperparams(hp: &Hyperparams) -> Result<()> {
    if !(hp.learning_rate.is_finite() && hp.learning_rate >= 0.0) {
        return Err(Error::InvalidParam("learning rate must be >= 0".into()));
    }
    if hp.batch_size == 0 {
        return Err(Error::InvalidParam("batch size must be positive".into()));
    }
    if hp.max_epochs == 0 {
        return Err(Error::InvalidParam("epoch count must be positive".into()));
    }
    if !(0.0..1.0).contains(&hp.val_fraction) {
        return Err(Error::InvalidParam("validation fraction must be in [0, 1)".into()));
    }
    if !(hp.lr_decay.is_finite() && hp.lr_decay > 0.0 && hp.lr_decay <= 1.0) {
        return Err(Error::InvalidParam("lr decay must be in (0, 1]".into()));
    }
    Ok(())
}

/// Trains a fresh model on the dataset: seeded shuffling, (mini)batch SGD,
/// early stopping on the held-out split, best-validation model returned.
pub fn train_pipeline(
    dataset: &Dataset,
    hp: &Hyperparams,
    seed: u64,
) -> Result<(Mlp, LossTrace)> {
    if dataset.is_empty() {
        return Err(Error::EmptyBatch);
    }
    validate_hyperparams(hp)?;

    let header = dataset.header();
    let mut rng: ChaCha12Rng = derived_rng(seed, &[TRAIN_STREAM]);
    let mut indices: Vec<usize> = (0..dataset.len()).collect();
    indices.shuffle(&mut rng);
    let val_count = ((dataset.len() as f64 * hp.val_fraction).round() as usize)
        .min(dataset.len() - 1);
    let (train_idx, val_idx) = indices.split_at(dataset.len() - val_count);
    let mut train_idx = train_idx.to_vec();
    let val_batch: Vec<Sample<'_>> = val_idx
        .iter()
        .map(|&i| {
            let s = &dataset.samples[i];
            (&s.q, &s.t)
        })
        .collect();

    let model = Mlp::with_dims(header.ns, header.n, header.ns, derive_seed(seed, &[TRAIN_STREAM, 1]));
    let mut state = TrainState::new(model, hp.learning_rate)?;
    let mut trace = LossTrace { train: Vec::new(), val: Vec::new() };
    let mut best: Option<(f64, Mlp)> = None;
    let mut epochs_since_best = 0usize;

    for epoch in 0..hp.max_epochs {
        train_idx.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for chunk in train_idx.chunks(hp.batch_size) {
            let batch: Vec<Sample<'_>> = chunk
                .iter()
                .map(|&i| {
                    let s = &dataset.samples[i];
                    (&s.q, &s.t)
                })
                .collect();
            epoch_loss += state.sgd_step(&batch)?;
            batches += 1;
        }
        let train_loss = epoch_loss / batches as f64;
        let val_loss = if val_batch.is_empty() {
            train_loss
        } else {
            state.model().loss(&val_batch)?
        };
        if !train_loss.is_finite() || !val_loss.is_finite() {
            return Err(Error::Diverged { epoch, loss: train_loss });
        }
        trace.train.push(train_loss);
        trace.val.push(val_loss);

        let improved = best.as_ref().is_none_or(|(b, _)| val_loss < *b);
        if improved {
            best = Some((val_loss, state.model().clone()));
            epochs_since_best = 0;
        } else {
            epochs_since_best += 1;
            if epochs_since_best >= hp.patience {
                break;
            }
        }
        if hp.lr_decay < 1.0 {
            let rate = state.learning_rate() * hp.lr_decay;
            state.set_learning_rate(rate)?;
        }
    }

    let model = best.map(|(_, m)| m).unwrap_or_else(|| state.into_model());
    Ok((model, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::midpoint;

    fn small_config() -> OfdmConfig {
        OfdmConfig::new(16, 4, 1).unwrap()
    }

    fn cfg128() -> OfdmConfig {
        OfdmConfig::new(128, 32, 25).unwrap()
    }

    #[test]
    fn generated_tau_stays_in_prior_range() {
        let cfg = cfg128();
        let prior = LosPrior::new(28, cfg.ng()).unwrap();
        let gen = SampleGenerator::new(cfg, prior, LabelMode::Triangular).unwrap();
        for i in 0..50 {
            let mut rng = derived_rng(3, &[SAMPLE_STREAM, i]);
            let s = gen.generate(&mut rng).unwrap();
            assert!((24..=28).contains(&s.meta.tau_l_label), "tau {}", s.meta.tau_l_label);
            assert_eq!(s.meta.tau_l_true, s.meta.tau_l_label);
            assert!(SNR_GRID_DB.contains(&s.meta.snr_db));
            assert!((ETA_RANGE.0..=ETA_RANGE.1).contains(&s.meta.eta));
            assert!(s.meta.theta <= cfg.max_theta());
        }
    }

    #[test]
    fn sample_label_matches_meta_and_q_is_unit() {
        let cfg = cfg128();
        let prior = LosPrior::default_for(cfg.ng()).unwrap();
        let gen = SampleGenerator::new(cfg, prior, LabelMode::Triangular).unwrap();
        for i in 0..30 {
            let mut rng = derived_rng(11, &[SAMPLE_STREAM, i]);
            let s = gen.generate(&mut rng).unwrap();
            let spec = LabelSpec::new(
                s.meta.theta,
                s.meta.tau_l_label,
                cfg.ng(),
                cfg.ns(),
                LabelMode::Triangular,
            )
            .unwrap();
            assert_eq!(s.t, build_label(&spec));
            let norm: f64 = s.q.values().iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-9);
            assert!(s.t.support().iter().all(|&i| i < cfg.ns()));
        }
    }

    #[test]
    fn snr_draw_is_uniform_over_the_grid() {
        let mut rng = derived_rng(5, &[0]);
        let mut counts = [0usize; 7];
        let draws = 70_000;
        for _ in 0..draws {
            let snr = draw_snr_db(&mut rng);
            let idx = SNR_GRID_DB.iter().position(|&s| s == snr).unwrap();
            counts[idx] += 1;
        }
        for (i, &c) in counts.iter().enumerate() {
            let freq = c as f64 / draws as f64;
            assert!((freq - 1.0 / 7.0).abs() < 0.01, "snr {}: freq {freq}", SNR_GRID_DB[i]);
        }
    }

    #[test]
    fn tau_sampler_chi_square_sanity() {
        // 5 equally likely values over 1e5 draws; chi-square with 4 degrees
        // of freedom stays below the 1% critical value 13.277.
        let prior = LosPrior::new(28, 32).unwrap();
        let mut rng = derived_rng(6, &[0]);
        let mut counts = [0f64; 5];
        let draws = 100_000;
        for _ in 0..draws {
            let tau = sample_tau_l(&prior, 32, &mut rng).unwrap();
            counts[tau - 24] += 1.0;
        }
        let expected = draws as f64 / 5.0;
        let chi2: f64 = counts.iter().map(|c| (c - expected) * (c - expected) / expected).sum();
        assert!(chi2 < 13.277, "chi-square statistic {chi2}");
    }

    #[test]
    fn dataset_generation_is_deterministic() {
        let cfg = small_config();
        let prior = LosPrior::new(3, cfg.ng()).unwrap();
        let a = generate_dataset(&cfg, &prior, LabelMode::Triangular, 20, 42).unwrap();
        let b = generate_dataset(&cfg, &prior, LabelMode::Triangular, 20, 42).unwrap();
        assert_eq!(a, b);
        let mut bytes_a = Vec::new();
        a.write_to(&mut bytes_a).unwrap();
        let mut bytes_b = Vec::new();
        b.write_to(&mut bytes_b).unwrap();
        assert_eq!(bytes_a, bytes_b);
    }

    #[test]
    fn different_seeds_differ_in_first_sample() {
        let cfg = small_config();
        let prior = LosPrior::new(3, cfg.ng()).unwrap();
        let mut collisions = 0;
        for pair in 0..100u64 {
            let a = generate_dataset(&cfg, &prior, LabelMode::Triangular, 1, 2 * pair).unwrap();
            let b = generate_dataset(&cfg, &prior, LabelMode::Triangular, 1, 2 * pair + 1).unwrap();
            if a.samples()[0] == b.samples()[0] {
                collisions += 1;
            }
        }
        assert_eq!(collisions, 0);
    }

    #[test]
    fn dataset_boundaries() {
        let cfg = small_config();
        let prior = LosPrior::new(3, cfg.ng()).unwrap();
        let one = generate_dataset(&cfg, &prior, LabelMode::Triangular, 1, 7).unwrap();
        assert_eq!(one.len(), 1);
        assert!(matches!(
            generate_dataset(&cfg, &prior, LabelMode::Triangular, 0, 7),
            Err(Error::InvalidParam(_))
        ));
    }

    #[test]
    fn dataset_roundtrip_and_corruption() {
        let cfg = small_config();
        let prior = LosPrior::new(3, cfg.ng()).unwrap();
        let ds = generate_dataset(&cfg, &prior, LabelMode::Rectangular, 5, 9).unwrap();
        let mut bytes = Vec::new();
        ds.write_to(&mut bytes).unwrap();
        let restored = Dataset::read_from(&mut bytes.as_slice()).unwrap();
        assert_eq!(ds, restored);

        let truncated = &bytes[..bytes.len() - 1];
        assert!(matches!(Dataset::read_from(&mut &truncated[..]), Err(Error::Format(_))));

        let mut extended = bytes.clone();
        extended.push(7);
        assert!(matches!(Dataset::read_from(&mut extended.as_slice()), Err(Error::Format(_))));

        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'Z';
        assert!(matches!(Dataset::read_from(&mut bad_magic.as_slice()), Err(Error::Format(_))));

        // header count larger than payload
        let mut bad_count = bytes;
        // count is the 4th u64 after magic+version: offset 4 + 4 + 3*8 = 32
        bad_count[32] = bad_count[32].wrapping_add(1);
        assert!(matches!(Dataset::read_from(&mut bad_count.as_slice()), Err(Error::Format(_))));
    }

    #[test]
    fn dataset_config_check() {
        let cfg = small_config();
        let prior = LosPrior::new(3, cfg.ng()).unwrap();
        let ds = generate_dataset(&cfg, &prior, LabelMode::Triangular, 3, 1).unwrap();
        assert!(ds.check_config(&cfg).is_ok());
        let other = OfdmConfig::new(32, 4, 1).unwrap();
        assert!(matches!(ds.check_config(&other), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn training_descends_on_a_toy_dataset() {
        let cfg = small_config();
        let prior = LosPrior::new(3, cfg.ng()).unwrap();
        let ds = generate_dataset(&cfg, &prior, LabelMode::Triangular, 200, 13).unwrap();
        let hp = Hyperparams { max_epochs: 50, ..Hyperparams::default() };
        let (model, trace) = train_pipeline(&ds, &hp, 99).unwrap();
        assert_eq!(trace.train.len(), trace.val.len());
        assert!(trace.train.last().unwrap() < trace.train.first().unwrap());
        model.check_config(&cfg).unwrap();
    }

    #[test]
    fn training_is_deterministic_and_rejects_empty() {
        let cfg = small_config();
        let prior = LosPrior::new(3, cfg.ng()).unwrap();
        let ds = generate_dataset(&cfg, &prior, LabelMode::Triangular, 60, 21).unwrap();
        let hp = Hyperparams { max_epochs: 8, ..Hyperparams::default() };
        let (m1, t1) = train_pipeline(&ds, &hp, 5).unwrap();
        let (m2, t2) = train_pipeline(&ds, &hp, 5).unwrap();
        assert_eq!(m1, m2);
        assert_eq!(t1, t2);
        let empty = Dataset { header: *ds.header(), samples: Vec::new() };
        assert!(matches!(train_pipeline(&empty, &hp, 5), Err(Error::EmptyBatch)));
    }

    #[test]
    fn trained_network_concentrates_output_near_the_region_midpoint() {
        // 16-subcarrier sanity run: after training, the estimate lands inside
        // the ISI-free region far more often than the classic argmax does at
        // high SNR with rich multipath.
        let cfg = small_config();
        let prior = LosPrior::new(3, cfg.ng()).unwrap();
        let ds = generate_dataset(&cfg, &prior, LabelMode::Triangular, 400, 31).unwrap();
        let hp = Hyperparams { max_epochs: 60, ..Hyperparams::default() };
        let (model, _) = train_pipeline(&ds, &hp, 17).unwrap();
        let gen = SampleGenerator::new(cfg, prior, LabelMode::Triangular).unwrap();
        let mut hits = 0;
        let trials = 200;
        for i in 0..trials {
            let mut rng = derived_rng(777, &[SAMPLE_STREAM, i]);
            let s = gen.generate(&mut rng).unwrap();
            let est = crate::network::estimate(&model.forward(&s.q).unwrap());
            let mu = midpoint(s.meta.theta, s.meta.tau_l_label, cfg.ng());
            if est.abs_diff(mu) <= 2 {
                hits += 1;
            }
        }
        // loose sanity bound; the classic argmax of the metric would sit at
        // theta + ng + tau almost always, several samples to the right
        assert!(hits * 2 > trials, "only {hits}/{trials} near-midpoint estimates");
    }
}
