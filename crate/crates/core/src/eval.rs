//! Monte-Carlo error-probability evaluation, complexity figures and result
//! emission (CSV plus an optional SVG plot).
//!
//! A trial is "correct" when the estimated offset lands inside the ISI-free
//! region of the true channel. Every (snr, trial) pair owns its own derived
//! RNG stream, so curves do not depend on the order SNR points are listed in
//! and identical seeds reproduce identical CSV bytes.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use crate::channel::{
    assemble_frame, draw_realization, exp_decay_profile, observe, DelayProfile,
};
use crate::correlator::{classic_estimate, normalize, timing_metric};
use crate::dataset::SNR_GRID_DB;
use crate::error::{Error, Result};
use crate::network::{estimate, Mlp};
use crate::rng::{derive_seed, derived_rng};
use crate::signal::{gcd, OfdmConfig, TrainingSymbol};

use rand::Rng;

const EVAL_STREAM: u64 = 0x3c;
const PRESET_STREAM: u64 = 0x11;

/// Channel model a scenario evaluates under.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelSpec {
    /// Exponentially decayed profile with `taps` unit-step delays.
    ExpDecay { taps: usize, eta: f64 },
    /// Explicit tapped-delay-line profile.
    Tdl(DelayProfile),
}

impl ChannelSpec {
    fn profile(&self) -> Result<DelayProfile> {
        match self {
            ChannelSpec::ExpDecay { taps, eta } => exp_decay_profile(*taps, *eta),
            ChannelSpec::Tdl(profile) => Ok(profile.clone()),
        }
    }
}

/// How the timing offset is chosen per trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaPolicy {
    /// Uniform over the full legal placement range.
    Uniform,
    Fixed(usize),
}

/// One evaluation setup: channel, offset policy, CFO, SNR grid, trial count
/// and the master seed of its RNG streams.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub channel: ChannelSpec,
    pub theta: ThetaPolicy,
    pub cfo: f64,
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
}

impl Scenario {
    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParam("scenario needs at least one trial".into()));
        }
        if self.snr_db.is_empty() {
            return Err(Error::InvalidParam("scenario needs a non-empty SNR list".into()));
        }
        Ok(())
    }
}

/// Estimator under test.
#[derive(Debug, Clone, Copy)]
pub enum Method<'a> {
    /// Argmax of the raw cross-correlation metric.
    Classic,
    /// Trained network on the normalized metric.
    Learned(&'a Mlp),
}

impl Method<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Classic => "classic",
            Method::Learned(_) => "learned",
        }
    }
}

/// Aggregated result at one SNR point.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub snr_db: f64,
    pub trials: usize,
    pub errors: usize,
    pub error_prob: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Error probability versus SNR for one (scenario, method) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorCurve {
    pub scenario: String,
    pub method: String,
    pub points: Vec<CurvePoint>,
}

impl ErrorCurve {
    /// The point evaluated at `snr_db`, if present.
    pub fn at(&self, snr_db: f64) -> Option<&CurvePoint> {
        self.points.iter().find(|p| p.snr_db == snr_db)
    }
}

/// A synchronization is correct when the estimate lands inside the ISI-free
/// region: `tau_l <= theta_hat - theta <= ng`.
pub fn is_correct(theta_hat: usize, theta: usize, tau_l: usize, ng: usize) -> bool {
    theta_hat >= theta + tau_l && theta_hat <= theta + ng
}

/// Runs `scenario.trials` independent frames per SNR point and aggregates
/// error counts with 95% Clopper-Pearson intervals.
pub fn run_curve(method: Method<'_>, scenario: &Scenario, config: &OfdmConfig) -> Result<ErrorCurve> {
    scenario.validate()?;
    let profile = scenario.channel.profile()?;
    profile.check_fits(config)?;
    let tau_l_true = profile.max_delay();
    if let Method::Learned(model) = method {
        model.check_config(config)?;
    }
    if let ThetaPolicy::Fixed(theta) = scenario.theta {
        if theta > config.max_theta() {
            return Err(Error::OffsetOutOfRange { theta, max: config.max_theta() });
        }
    }
    let symbol = TrainingSymbol::new(config)?;
    let local = symbol.body().to_vec();

    let mut points = Vec::with_capacity(scenario.snr_db.len());
    for &snr_db in &scenario.snr_db {
        let mut errors = 0usize;
        for trial in 0..scenario.trials {
            let mut rng = derived_rng(scenario.seed, &[EVAL_STREAM, snr_db.to_bits(), trial as u64]);
            // A degenerate all-zero metric (possible only in contrived
            // noiseless setups) redraws the trial.
            let mut outcome = None;
            for _ in 0..8 {
                let theta = match scenario.theta {
                    ThetaPolicy::Uniform => rng.random_range(0..=config.max_theta()),
                    ThetaPolicy::Fixed(t) => t,
                };
                let realization =
                    draw_realization(&profile, config, theta, scenario.cfo, snr_db, &mut rng)?;
                let stream = assemble_frame(config, &symbol, theta, &mut rng)?;
                let frame = observe(&stream, &realization, config, &mut rng)?;
                let metric = timing_metric(config, frame.y(), &local)?;
                let theta_hat = match method {
                    Method::Classic => classic_estimate(&metric),
                    Method::Learned(model) => match normalize(&metric) {
                        Ok(q) => estimate(&model.forward(&q)?),
                        Err(Error::DegenerateMetric) => continue,
                        Err(other) => return Err(other),
                    },
                };
                outcome = Some(is_correct(theta_hat, theta, tau_l_true, config.ng()));
                break;
            }
            match outcome {
                Some(true) => {}
                Some(false) => errors += 1,
                None => return Err(Error::DegenerateMetric),
            }
        }
        let error_prob = errors as f64 / scenario.trials as f64;
        let (ci_lo, ci_hi) = clopper_pearson(errors, scenario.trials, 0.95)?;
        points.push(CurvePoint {
            snr_db,
            trials: scenario.trials,
            errors,
            error_prob,
            ci_lo,
            ci_hi,
        });
    }
    Ok(ErrorCurve {
        scenario: scenario.name.clone(),
        method: method.name().to_string(),
        points,
    })
}

/// Log of the binomial CDF `P(X <= k)` for `X ~ Bin(n, p)`, computed with a
/// stable log-space term recurrence.
fn binom_cdf(k: usize, n: usize, p: f64) -> f64 {
    if p <= 0.0 || k >= n {
        return 1.0;
    }
    if p >= 1.0 {
        return 0.0;
    }
    let ln_p = p.ln();
    let ln_q = (1.0 - p).ln();
    // ln C(n, i) p^i q^(n-i), built incrementally from i = 0
    let mut ln_term = n as f64 * ln_q;
    let mut max_ln = ln_term;
    let mut terms = Vec::with_capacity(k + 1);
    terms.push(ln_term);
    for i in 0..k {
        ln_term += ((n - i) as f64 / (i + 1) as f64).ln() + ln_p - ln_q;
        terms.push(ln_term);
        if ln_term > max_ln {
            max_ln = ln_term;
        }
    }
    let sum: f64 = terms.iter().map(|&t| (t - max_ln).exp()).sum();
    (max_ln + sum.ln()).exp().min(1.0)
}

/// Exact two-sided Clopper-Pearson interval for `errors` out of `trials`.
pub fn clopper_pearson(errors: usize, trials: usize, level: f64) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::InvalidParam("interval needs at least one trial".into()));
    }
    if errors > trials {
        return Err(Error::InvalidParam(format!("{errors} errors out of {trials} trials")));
    }
    if !(0.0 < level && level < 1.0) {
        return Err(Error::InvalidParam(format!("confidence level must be in (0,1), got {level}")));
    }
    let alpha = 1.0 - level;
    let half = alpha / 2.0;

    // Lower limit: P(X >= errors; p) = alpha/2, i.e. cdf(errors-1, p) = 1 - alpha/2.
    let lo = if errors == 0 {
        0.0
    } else {
        bisect(|p| binom_cdf(errors - 1, trials, p) - (1.0 - half))
    };
    // Upper limit: P(X <= errors; p) = alpha/2.
    let hi = if errors == trials {
        1.0
    } else {
        bisect(|p| binom_cdf(errors, trials, p) - half)
    };
    Ok((lo, hi))
}

/// Bisection for a function decreasing in p over [0, 1].
fn bisect<F: Fn(f64) -> f64>(f: F) -> f64 {
    let mut lo = 0.0;
    let mut hi = 1.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Compared synchronizers in the complexity accounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComplexityMethod {
    /// Cross-correlation plus the shallow network (this crate).
    Proposed,
    /// CNN-based synchronizer.
    CnnTs,
    /// Earlier label-trained synchronizer.
    PriorLabel,
    /// Iterative joint synchronization / channel estimation.
    IterOmp,
}

impl ComplexityMethod {
    pub const ALL: [ComplexityMethod; 4] = [
        ComplexityMethod::Proposed,
        ComplexityMethod::CnnTs,
        ComplexityMethod::PriorLabel,
        ComplexityMethod::IterOmp,
    ];
}

impl fmt::Display for ComplexityMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ComplexityMethod::Proposed => "proposed",
            ComplexityMethod::CnnTs => "cnn-ts",
            ComplexityMethod::PriorLabel => "prior-label",
            ComplexityMethod::IterOmp => "iter-omp",
        };
        f.write_str(name)
    }
}

impl FromStr for ComplexityMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "proposed" | "prop" => Ok(ComplexityMethod::Proposed),
            "cnn-ts" | "cnn" => Ok(ComplexityMethod::CnnTs),
            "prior-label" => Ok(ComplexityMethod::PriorLabel),
            "iter-omp" | "omp" => Ok(ComplexityMethod::IterOmp),
            other => Err(Error::InvalidParam(format!("unknown method id `{other}`"))),
        }
    }
}

/// Complex-multiplication count of one synchronization pass.
///
/// The proposed method costs one cross-correlation (`n * ns`) plus the
/// network forward pass (`0.5 n ns`). The CNN method correlates over the
/// channel-extended sequence, hence the `n + taps - 1` term.
pub fn complexity_cm(method: ComplexityMethod, n: usize, ns: usize, ng: usize, taps: usize) -> u64 {
    let (nf, nsf, ngf, lf) = (n as f64, ns as f64, ng as f64, taps as f64);
    let cm = match method {
        ComplexityMethod::Proposed => nf * nsf + 0.5 * nf * nsf,
        ComplexityMethod::CnnTs => 0.5 * nsf * nsf + 2.0 * (nf + lf - 1.0) * nsf + 1.5 * ngf * nsf + nsf,
        ComplexityMethod::PriorLabel => 1.5 * nf + 4.0 * (nsf - 1.0) + 16.0 * nsf * nsf,
        ComplexityMethod::IterOmp => {
            let mut acc = lf * nf * nsf;
            for j in 1..=taps {
                let jf = j as f64;
                acc += 3.0 * jf * nsf + jf * jf * jf + jf * jf * nsf;
            }
            acc
        }
    };
    cm.round() as u64
}

/// A named scenario bundled with the frame config it runs under (the
/// robustness presets change `n`, which changes every derived dimension).
#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub config: OfdmConfig,
    pub scenario: Scenario,
}

/// Smallest root >= `preferred` that is coprime with `n`.
fn coprime_root(n: usize, preferred: usize) -> usize {
    let mut root = preferred.max(1);
    while gcd(root, n) != 1 {
        root += 1;
    }
    root
}

/// The standard evaluation suite:
///
/// - `effectiveness`: rich 28-tap exponential decay (first/last power ratio
///   10), training-style SNR grid;
/// - `robustness-n{96,128,160}`: the same channel under different sequence
///   lengths (models must be retrained per length since `ns` changes);
/// - `generalization-tdl-{b,c}`: bundled TDL profiles, evaluation-only
///   channel swap for a model trained on the decay channel.
pub fn preset_scenarios(base: &OfdmConfig, trials: usize, seed: u64) -> Vec<Preset> {
    let decay_eta = 10f64.ln() / 27.0;
    let decay = ChannelSpec::ExpDecay { taps: 28, eta: decay_eta };
    let mut presets = Vec::new();
    let mut push = |idx: u64, name: &str, config: OfdmConfig, channel: ChannelSpec| {
        presets.push(Preset {
            config,
            scenario: Scenario {
                name: name.to_string(),
                channel,
                theta: ThetaPolicy::Uniform,
                cfo: 0.0,
                snr_db: SNR_GRID_DB.to_vec(),
                trials,
                seed: derive_seed(seed, &[PRESET_STREAM, idx]),
            },
        });
    };
    push(0, "effectiveness", *base, decay.clone());
    for (i, n) in [96usize, 128, 160].iter().enumerate() {
        let config = OfdmConfig::new(*n, base.ng(), coprime_root(*n, base.zc_root()))
            .expect("preset dimensions are valid");
        push(1 + i as u64, &format!("robustness-n{n}"), config, decay.clone());
    }
    push(4, "generalization-tdl-b", *base, ChannelSpec::Tdl(DelayProfile::tdl_b()));
    push(5, "generalization-tdl-c", *base, ChannelSpec::Tdl(DelayProfile::tdl_c()));
    presets
}

/// Writes curves as CSV. Probabilities are printed with 18 significant
/// digits so parsing the file reproduces the exact f64 values.
pub fn write_results<W: Write>(curves: &[ErrorCurve], w: &mut W) -> Result<()> {
    if curves.is_empty() {
        return Err(Error::InvalidParam("no curves to write".into()));
    }
    writeln!(w, "scenario,method,snr_db,trials,errors,error_prob,ci_lo,ci_hi")?;
    for curve in curves {
        for p in &curve.points {
            writeln!(
                w,
                "{},{},{},{},{},{:.17e},{:.17e},{:.17e}",
                curve.scenario, curve.method, p.snr_db, p.trials, p.errors,
                p.error_prob, p.ci_lo, p.ci_hi
            )?;
        }
    }
    Ok(())
}

pub fn emit_results<P: AsRef<Path>>(curves: &[ErrorCurve], path: P) -> Result<()> {
    let mut buf = Vec::new();
    write_results(curves, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

/// Parses a CSV produced by [`write_results`] back into curves.
pub fn parse_results(text: &str) -> Result<Vec<ErrorCurve>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Format("empty results file".into()))?;
    if header != "scenario,method,snr_db,trials,errors,error_prob,ci_lo,ci_hi" {
        return Err(Error::Format("unexpected results header".into()));
    }
    let mut curves: Vec<ErrorCurve> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(Error::Format(format!("results line {}: expected 8 fields", lineno + 2)));
        }
        let parse_f = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Format(format!("results line {}: bad float `{s}`", lineno + 2)))
        };
        let parse_u = |s: &str| -> Result<usize> {
            s.parse().map_err(|_| Error::Format(format!("results line {}: bad integer `{s}`", lineno + 2)))
        };
        let point = CurvePoint {
            snr_db: parse_f(fields[2])?,
            trials: parse_u(fields[3])?,
            errors: parse_u(fields[4])?,
            error_prob: parse_f(fields[5])?,
            ci_lo: parse_f(fields[6])?,
            ci_hi: parse_f(fields[7])?,
        };
        match curves
            .iter_mut()
            .find(|c| c.scenario == fields[0] && c.method == fields[1])
        {
            Some(curve) => curve.points.push(point),
            None => curves.push(ErrorCurve {
                scenario: fields[0].to_string(),
                method: fields[1].to_string(),
                points: vec![point],
            }),
        }
    }
    Ok(curves)
}

const SVG_PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Renders error probability versus SNR with a log-scaled y axis. Zero
/// counts are clamped to half a trial for plotting.
pub fn render_svg(curves: &[ErrorCurve]) -> Result<String> {
    if curves.is_empty() || curves.iter().any(|c| c.points.is_empty()) {
        return Err(Error::InvalidParam("no points to plot".into()));
    }
    let (width, height) = (720.0, 480.0);
    let (ml, mr, mt, mb) = (80.0, 24.0, 24.0, 56.0);
    let plot_w = width - ml - mr;
    let plot_h = height - mt - mb;

    let clamp = |p: &CurvePoint| {
        if p.error_prob > 0.0 {
            p.error_prob
        } else {
            0.5 / p.trials as f64
        }
    };
    let snr_min = curves
        .iter()
        .flat_map(|c| c.points.iter().map(|p| p.snr_db))
        .fold(f64::INFINITY, f64::min);
    let snr_max = curves
        .iter()
        .flat_map(|c| c.points.iter().map(|p| p.snr_db))
        .fold(f64::NEG_INFINITY, f64::max);
    let p_min = curves
        .iter()
        .flat_map(|c| c.points.iter().map(clamp))
        .fold(f64::INFINITY, f64::min);
    let log_floor = p_min.log10().floor().min(-1.0);
    let snr_span = if snr_max > snr_min { snr_max - snr_min } else { 1.0 };

    let x_of = |snr: f64| ml + (snr - snr_min) / snr_span * plot_w;
    let y_of = |p: f64| mt + (0.0 - p.log10()) / (0.0 - log_floor) * plot_h;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    svg.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n"
    ));

    // decade grid
    let mut decade = 0i32;
    while decade >= log_floor as i32 {
        let y = y_of(10f64.powi(decade));
        svg.push_str(&format!(
            "<line x1=\"{ml}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#ddd\"/>\n",
            ml + plot_w
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">1e{decade}</text>\n",
            ml - 6.0,
            y + 4.0
        ));
        decade -= 1;
    }
    // snr ticks at every evaluated point of the first curve
    for p in &curves[0].points {
        let x = x_of(p.snr_db);
        svg.push_str(&format!(
            "<line x1=\"{x:.1}\" y1=\"{mt}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"#eee\"/>\n",
            mt + plot_h
        ));
        svg.push_str(&format!(
            "<text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
            mt + plot_h + 16.0,
            p.snr_db
        ));
    }
    svg.push_str(&format!(
        "<rect x=\"{ml}\" y=\"{mt}\" width=\"{plot_w}\" height=\"{plot_h}\" fill=\"none\" stroke=\"#333\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">SNR (dB)</text>\n",
        ml + plot_w / 2.0,
        height - 12.0
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{:.1}\" transform=\"rotate(-90 16 {:.1})\" text-anchor=\"middle\">error probability</text>\n",
        mt + plot_h / 2.0,
        mt + plot_h / 2.0
    ));

    for (i, curve) in curves.iter().enumerate() {
        let color = SVG_PALETTE[i % SVG_PALETTE.len()];
        let pts: Vec<String> = curve
            .points
            .iter()
            .map(|p| format!("{:.1},{:.1}", x_of(p.snr_db), y_of(clamp(p))))
            .collect();
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            pts.join(" ")
        ));
        for p in &curve.points {
            svg.push_str(&format!(
                "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3\" fill=\"{color}\"/>\n",
                x_of(p.snr_db),
                y_of(clamp(p))
            ));
        }
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" fill=\"{color}\">{} / {}</text>\n",
            ml + plot_w - 220.0,
            mt + 18.0 + 16.0 * i as f64,
            curve.scenario,
            curve.method
        ));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn emit_svg<P: AsRef<Path>>(curves: &[ErrorCurve], path: P) -> Result<()> {
    let svg = render_svg(curves)?;
    fs::write(path, svg)?;
    Ok(())
}
