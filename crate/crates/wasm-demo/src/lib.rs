//! Browser bindings for the timing-synchronization laboratory.
//!
//! Three interactive operations back the demo page:
//! - [`label_curve`] renders the training label for chosen offsets and delay
//!   bounds;
//! - [`MiniLab::new`] trains a small synchronizer in the browser;
//! - [`MiniLab::frame`] draws one multipath frame and compares the classic
//!   correlator against the trained network on it.
//!
//! The `_impl` functions hold the logic and return crate errors; the
//! `#[wasm_bindgen]` wrappers only convert errors to `JsValue` (which can
//! only exist in a JS host, so unit tests target the `_impl` layer).

use wasm_bindgen::prelude::*;

use ofdm_tsync::channel::{assemble_frame, draw_realization, exp_decay_profile, observe};
use ofdm_tsync::correlator::{classic_estimate, normalize, timing_metric};
use ofdm_tsync::dataset::{generate_dataset, train_pipeline, Hyperparams};
use ofdm_tsync::eval::is_correct;
use ofdm_tsync::label::{build_label, midpoint, LabelMode, LabelSpec, LosPrior};
use ofdm_tsync::network::{estimate, Mlp};
use ofdm_tsync::rng::derived_rng;
use ofdm_tsync::signal::{local_sequence, OfdmConfig, TrainingSymbol};
use ofdm_tsync::Result;

use rand::Rng;

fn js_err(err: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&err.to_string())
}

/// A training label plus the markers the plot draws.
#[wasm_bindgen]
pub struct LabelView {
    values: Vec<f64>,
    region_lo: u32,
    region_hi: u32,
    midpoint: u32,
}

#[wasm_bindgen]
impl LabelView {
    #[wasm_bindgen(getter)]
    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn region_lo(&self) -> u32 {
        self.region_lo
    }

    #[wasm_bindgen(getter)]
    pub fn region_hi(&self) -> u32 {
        self.region_hi
    }

    #[wasm_bindgen(getter)]
    pub fn midpoint(&self) -> u32 {
        self.midpoint
    }
}

fn label_curve_impl(
    theta: u32,
    tau_l: u32,
    ng: u32,
    ns: u32,
    rectangular: bool,
) -> Result<LabelView> {
    let mode = if rectangular { LabelMode::Rectangular } else { LabelMode::Triangular };
    let spec = LabelSpec::new(theta as usize, tau_l as usize, ng as usize, ns as usize, mode)?;
    let label = build_label(&spec);
    Ok(LabelView {
        values: label.values().to_vec(),
        region_lo: theta + tau_l,
        region_hi: theta + ng,
        midpoint: midpoint(theta as usize, tau_l as usize, ng as usize) as u32,
    })
}

/// Builds the timing label for one (theta, tau_l) choice.
#[wasm_bindgen]
pub fn label_curve(
    theta: u32,
    tau_l: u32,
    ng: u32,
    ns: u32,
    rectangular: bool,
) -> std::result::Result<LabelView, JsValue> {
    label_curve_impl(theta, tau_l, ng, ns, rectangular).map_err(js_err)
}

/// One observed frame: the normalized timing metric, the network output and
/// both estimates.
#[wasm_bindgen]
pub struct FrameView {
    feature: Vec<f64>,
    output: Vec<f64>,
    theta: u32,
    region_lo: u32,
    region_hi: u32,
    classic_estimate: u32,
    classic_correct: bool,
    learned_estimate: u32,
    learned_correct: bool,
}

#[wasm_bindgen]
impl FrameView {
    /// Normalized cross-correlation metric (the network input).
    #[wasm_bindgen(getter)]
    pub fn feature(&self) -> Vec<f64> {
        self.feature.clone()
    }

    /// Network output magnitudes.
    #[wasm_bindgen(getter)]
    pub fn output(&self) -> Vec<f64> {
        self.output.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn theta(&self) -> u32 {
        self.theta
    }

    #[wasm_bindgen(getter)]
    pub fn region_lo(&self) -> u32 {
        self.region_lo
    }

    #[wasm_bindgen(getter)]
    pub fn region_hi(&self) -> u32 {
        self.region_hi
    }

    #[wasm_bindgen(getter)]
    pub fn classic_estimate(&self) -> u32 {
        self.classic_estimate
    }

    #[wasm_bindgen(getter)]
    pub fn classic_correct(&self) -> bool {
        self.classic_correct
    }

    #[wasm_bindgen(getter)]
    pub fn learned_estimate(&self) -> u32 {
        self.learned_estimate
    }

    #[wasm_bindgen(getter)]
    pub fn learned_correct(&self) -> bool {
        self.learned_correct
    }
}

/// A desk-drawer synchronization lab: a 32-subcarrier frame with an
/// 8-sample cyclic prefix and a network trained right in the browser.
#[wasm_bindgen]
pub struct MiniLab {
    config: OfdmConfig,
    model: Mlp,
    final_train_loss: f64,
    epochs_run: u32,
}

impl MiniLab {
    fn new_impl(seed: u32, samples: u32, epochs: u32) -> Result<MiniLab> {
        let config = OfdmConfig::new(32, 8, 3)?;
        let prior = LosPrior::default_for(config.ng())?;
        let dataset = generate_dataset(
            &config,
            &prior,
            LabelMode::Triangular,
            samples.max(10) as usize,
            seed as u64,
        )?;
        let hp = Hyperparams { max_epochs: epochs.max(1) as usize, ..Hyperparams::default() };
        let (model, trace) = train_pipeline(&dataset, &hp, seed as u64 + 1)?;
        Ok(MiniLab {
            config,
            model,
            final_train_loss: *trace.train.last().unwrap(),
            epochs_run: trace.train.len() as u32,
        })
    }

    fn frame_impl(
        &self,
        seed: u32,
        snr_db: f64,
        taps: u32,
        eta: f64,
        theta: i32,
        cfo: f64,
    ) -> Result<FrameView> {
        let config = &self.config;
        let mut rng = derived_rng(seed as u64, &[0xf0a]);
        let profile = exp_decay_profile(taps.max(1) as usize, eta.max(0.0))?;
        profile.check_fits(config)?;
        let theta = if theta < 0 {
            rng.random_range(0..=config.max_theta())
        } else {
            (theta as usize).min(config.max_theta())
        };
        let realization = draw_realization(&profile, config, theta, cfo, snr_db, &mut rng)?;
        let symbol = TrainingSymbol::new(config)?;
        let stream = assemble_frame(config, &symbol, theta, &mut rng)?;
        let frame = observe(&stream, &realization, config, &mut rng)?;
        let local = local_sequence(config)?;
        let metric = timing_metric(config, frame.y(), &local)?;
        let q = normalize(&metric)?;
        let out = self.model.forward(&q)?;

        let tau_l = profile.max_delay();
        let classic = classic_estimate(&metric);
        let learned = estimate(&out);
        Ok(FrameView {
            feature: q.values().to_vec(),
            output: out.values().iter().map(|v| v.abs()).collect(),
            theta: theta as u32,
            region_lo: (theta + tau_l) as u32,
            region_hi: (theta + config.ng()) as u32,
            classic_estimate: classic as u32,
            classic_correct: is_correct(classic, theta, tau_l, config.ng()),
            learned_estimate: learned as u32,
            learned_correct: is_correct(learned, theta, tau_l, config.ng()),
        })
    }
}

#[wasm_bindgen]
impl MiniLab {
    /// Generates `samples` training frames and trains for up to `epochs`
    /// epochs of per-sample SGD.
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32, samples: u32, epochs: u32) -> std::result::Result<MiniLab, JsValue> {
        MiniLab::new_impl(seed, samples, epochs).map_err(js_err)
    }

    #[wasm_bindgen(getter)]
    pub fn final_train_loss(&self) -> f64 {
        self.final_train_loss
    }

    #[wasm_bindgen(getter)]
    pub fn epochs_run(&self) -> u32 {
        self.epochs_run
    }

    /// Search-range length of the demo frame (the x axis of the plots).
    #[wasm_bindgen(getter)]
    pub fn ns(&self) -> u32 {
        self.config.ns() as u32
    }

    #[wasm_bindgen(getter)]
    pub fn ng(&self) -> u32 {
        self.config.ng() as u32
    }

    /// Simulates one observed frame and runs both estimators on it.
    /// `theta < 0` draws the offset uniformly.
    pub fn frame(
        &self,
        seed: u32,
        snr_db: f64,
        taps: u32,
        eta: f64,
        theta: i32,
        cfo: f64,
    ) -> std::result::Result<FrameView, JsValue> {
        self.frame_impl(seed, snr_db, taps, eta, theta, cfo).map_err(js_err)
    }
}
