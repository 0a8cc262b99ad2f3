//! Multipath delay profiles, Rayleigh realizations, transmit-stream assembly
//! and the observation model (timing offset, CFO, AWGN).

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::signal::{add_cp, idft_scaled, OfdmConfig, TrainingSymbol};

/// One resolvable path: integer sample delay and average linear power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileTap {
    pub delay: usize,
    pub power: f64,
}

/// A normalized power/delay profile. Delays are strictly increasing and start
/// at zero; powers sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayProfile {
    name: String,
    taps: Vec<ProfileTap>,
}

impl DelayProfile {
    pub fn new(name: impl Into<String>, taps: Vec<ProfileTap>) -> Result<Self> {
        let name = name.into();
        if taps.is_empty() {
            return Err(Error::InvalidProfile(format!("{name}: no taps")));
        }
        if taps[0].delay != 0 {
            return Err(Error::InvalidProfile(format!("{name}: first delay must be 0")));
        }
        for pair in taps.windows(2) {
            if pair[1].delay <= pair[0].delay {
                return Err(Error::InvalidProfile(format!(
                    "{name}: delays must be strictly increasing"
                )));
            }
        }
        let total: f64 = taps.iter().map(|t| t.power).sum();
        if !(total.is_finite() && total > 0.0) || taps.iter().any(|t| t.power <= 0.0) {
            return Err(Error::InvalidProfile(format!("{name}: powers must be positive")));
        }
        let taps = taps
            .into_iter()
            .map(|t| ProfileTap { delay: t.delay, power: t.power / total })
            .collect();
        Ok(DelayProfile { name, taps })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn taps(&self) -> &[ProfileTap] {
        &self.taps
    }

    pub fn tap_count(&self) -> usize {
        self.taps.len()
    }

    /// Delay of the last resolvable path (tau_L).
    pub fn max_delay(&self) -> usize {
        self.taps.last().expect("profile is never empty").delay
    }

    /// The maximum delay must fit inside the cyclic prefix.
    pub fn check_fits(&self, config: &OfdmConfig) -> Result<()> {
        if self.max_delay() >= config.ng() {
            return Err(Error::InvalidProfile(format!(
                "{}: max delay {} must be below the CP length {}",
                self.name,
                self.max_delay(),
                config.ng()
            )));
        }
        Ok(())
    }

    /// The bundled TDL-B profile (tapped-delay-line model B).
    pub fn tdl_b() -> DelayProfile {
        parse_tdl_profile(include_str!("../data/tdl_b.txt"), "tdl-b")
            .expect("bundled tdl_b.txt is valid")
    }

    /// The bundled TDL-C profile (tapped-delay-line model C).
    pub fn tdl_c() -> DelayProfile {
        parse_tdl_profile(include_str!("../data/tdl_c.txt"), "tdl-c")
            .expect("bundled tdl_c.txt is valid")
    }
}

/// Exponentially decayed profile: `power_l ~ exp(-eta (l-1))` with unit-step
/// delays `tau_l = l - 1`.
pub fn exp_decay_profile(taps: usize, eta: f64) -> Result<DelayProfile> {
    if taps < 1 {
        return Err(Error::InvalidProfile("tap count must be at least 1".into()));
    }
    if !(eta.is_finite() && eta >= 0.0) {
        return Err(Error::InvalidProfile(format!("decay factor must be >= 0 (got {eta})")));
    }
    let taps = (0..taps)
        .map(|l| ProfileTap { delay: l, power: (-eta * l as f64).exp() })
        .collect();
    DelayProfile::new(format!("exp-decay-{eta}"), taps)
}

/// Parses the TDL profile file format:
///
/// ```text
/// # comment
/// scale_samples 5.6
/// 0.0000  0.0      <- normalized delay, power in dB
/// 0.1072 -2.2
/// ```
///
/// Delays are scaled to samples, rounded to the nearest integer, and taps
/// quantized onto the same sample are merged by linear power addition.
pub fn parse_tdl_profile(text: &str, name: &str) -> Result<DelayProfile> {
    let mut scale: Option<f64> = None;
    let mut rows: Vec<(f64, f64)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.as_slice() {
            ["scale_samples", value] => {
                let v: f64 = value.parse().map_err(|_| {
                    Error::Format(format!("{name} line {}: bad scale `{value}`", lineno + 1))
                })?;
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::InvalidProfile(format!(
                        "{name}: scale_samples must be positive (got {v})"
                    )));
                }
                scale = Some(v);
            }
            [delay, power_db] => {
                let d: f64 = delay.parse().map_err(|_| {
                    Error::Format(format!("{name} line {}: bad delay `{delay}`", lineno + 1))
                })?;
                let p: f64 = power_db.parse().map_err(|_| {
                    Error::Format(format!("{name} line {}: bad power `{power_db}`", lineno + 1))
                })?;
                if !(d.is_finite() && d >= 0.0) {
                    return Err(Error::InvalidProfile(format!(
                        "{name}: normalized delays must be >= 0 (got {d})"
                    )));
                }
                rows.push((d, p));
            }
            _ => {
                return Err(Error::Format(format!(
                    "{name} line {}: expected `scale_samples <v>` or `<delay> <power_dB>`",
                    lineno + 1
                )))
            }
        }
    }
    let scale = scale
        .ok_or_else(|| Error::Format(format!("{name}: missing `scale_samples` header")))?;
    if rows.is_empty() {
        return Err(Error::InvalidProfile(format!("{name}: no taps")));
    }
    // Quantize to integer samples and merge collisions by linear power sum.
    let mut merged: Vec<ProfileTap> = Vec::new();
    let mut quantized: Vec<(usize, f64)> = rows
        .into_iter()
        .map(|(d, p_db)| ((d * scale).round() as usize, 10f64.powf(p_db / 10.0)))
        .collect();
    quantized.sort_by_key(|&(d, _)| d);
    for (delay, power) in quantized {
        match merged.last_mut() {
            Some(last) if last.delay == delay => last.power += power,
            _ => merged.push(ProfileTap { delay, power }),
        }
    }
    DelayProfile::new(name, merged)
}

pub fn load_tdl_profile<P: AsRef<Path>>(path: P) -> Result<DelayProfile> {
    let path = path.as_ref();
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "profile".into());
    parse_tdl_profile(&fs::read_to_string(path)?, &name)
}

/// One draw of the channel: per-tap complex gains (unit total power), the
/// timing offset, the normalized CFO and the noise variance.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    gains: Vec<Complex64>,
    delays: Vec<usize>,
    theta: usize,
    cfo: f64,
    noise_var: f64,
}

impl ChannelRealization {
    pub fn gains(&self) -> &[Complex64] {
        &self.gains
    }

    pub fn delays(&self) -> &[usize] {
        &self.delays
    }

    pub fn theta(&self) -> usize {
        self.theta
    }

    pub fn cfo(&self) -> f64 {
        self.cfo
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }
}

/// Draws Rayleigh tap gains from the profile and renormalizes them so the
/// realized total power is exactly one; the SNR of a trial therefore never
/// jitters with the fading draw. `noise_var = 10^(-snr_db/10)` against the
/// unit-power transmit signal.
pub fn draw_realization<R: Rng + ?Sized>(
    profile: &DelayProfile,
    config: &OfdmConfig,
    theta: usize,
    cfo: f64,
    snr_db: f64,
    rng: &mut R,
) -> Result<ChannelRealization> {
    let max_theta = config.max_theta();
    if theta > max_theta {
        return Err(Error::OffsetOutOfRange { theta, max: max_theta });
    }
    let mut gains: Vec<Complex64> = profile
        .taps()
        .iter()
        .map(|tap| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re, im) * (tap.power / 2.0).sqrt()
        })
        .collect();
    let total: f64 = gains.iter().map(|g| g.norm_sqr()).sum();
    debug_assert!(total > 0.0);
    let scale = 1.0 / total.sqrt();
    for g in &mut gains {
        *g *= scale;
    }
    Ok(ChannelRealization {
        gains,
        delays: profile.taps().iter().map(|t| t.delay).collect(),
        theta,
        cfo,
        noise_var: 10f64.powf(-snr_db / 10.0),
    })
}

/// A transmit stream with `lead` samples of history before index 0, so that
/// delayed paths see real data instead of an artificial silence.
#[derive(Debug, Clone)]
pub struct TransmitStream {
    samples: Vec<Complex64>,
    lead: usize,
}

impl TransmitStream {
    /// Sample at stream index `idx` (zero outside the generated cover).
    pub fn at(&self, idx: isize) -> Complex64 {
        let pos = idx + self.lead as isize;
        if pos < 0 || pos as usize >= self.samples.len() {
            Complex64::new(0.0, 0.0)
        } else {
            self.samples[pos as usize]
        }
    }

    pub fn lead(&self) -> usize {
        self.lead
    }

    #[cfg(test)]
    pub(crate) fn silent(len: usize, lead: usize) -> TransmitStream {
        TransmitStream { samples: vec![Complex64::new(0.0, 0.0); len], lead }
    }
}

/// Places the training symbol's CP at stream index `theta` and fills every
/// other symbol slot of the covered range with freshly drawn random-data
/// OFDM symbols, so early/late DFT windows suffer genuine ISI.
pub fn assemble_frame<R: Rng + ?Sized>(
    config: &OfdmConfig,
    symbol: &TrainingSymbol,
    theta: usize,
    rng: &mut R,
) -> Result<TransmitStream> {
    let max_theta = config.max_theta();
    if theta > max_theta {
        return Err(Error::OffsetOutOfRange { theta, max: max_theta });
    }
    let lead = config.ng();
    let nw = config.nw();
    let slot = config.ng() + config.n();
    let mut samples = vec![Complex64::new(0.0, 0.0); lead + nw];

    let place = |samples: &mut [Complex64], start: isize, sym: &[Complex64]| {
        for (i, &v) in sym.iter().enumerate() {
            let abs = start + i as isize + lead as isize;
            if abs >= 0 && (abs as usize) < samples.len() {
                samples[abs as usize] = v;
            }
        }
    };

    // Filler symbol slots sit on the grid theta + k * slot.
    let theta = theta as isize;
    let slot_i = slot as isize;
    let k_min = (-(lead as isize) - theta).div_euclid(slot_i);
    let k_max = (nw as isize - 1 - theta).div_euclid(slot_i);
    for k in k_min..=k_max {
        if k == 0 {
            continue;
        }
        let freq: Vec<Complex64> = (0..config.n())
            .map(|_| Complex64::from_polar(1.0, rng.random_range(0.0..2.0 * PI)))
            .collect();
        let body = idft_scaled(&freq);
        let with_cp = add_cp(&body, config.ng())?;
        place(&mut samples, theta + k * slot_i, &with_cp);
    }
    place(&mut samples, theta, symbol.with_cp());

    Ok(TransmitStream { samples, lead })
}

/// The observed window of length `nw`.
#[derive(Debug, Clone)]
pub struct ObservedFrame {
    y: Vec<Complex64>,
    truth: ChannelRealization,
}

impl ObservedFrame {
    pub fn y(&self) -> &[Complex64] {
        &self.y
    }

    pub fn truth(&self) -> &ChannelRealization {
        &self.truth
    }
}

/// Applies the channel to the stream:
/// `y(n) = e^{j 2 pi n cfo / N} sum_l h_l stream(n - tau_l) + w(n)`
/// for `n` in `[0, nw)`, with complex Gaussian noise of total variance
/// `noise_var` split equally over the real and imaginary parts.
pub fn observe<R: Rng + ?Sized>(
    stream: &TransmitStream,
    realization: &ChannelRealization,
    config: &OfdmConfig,
    rng: &mut R,
) -> Result<ObservedFrame> {
    let max_delay = realization.delays.iter().copied().max().unwrap_or(0);
    if stream.lead < max_delay {
        return Err(Error::DimensionMismatch {
            what: "observe: stream history",
            expected: max_delay,
            got: stream.lead,
        });
    }
    let nw = config.nw();
    let mut y = Vec::with_capacity(nw);
    let sigma = (realization.noise_var / 2.0).sqrt();
    for n in 0..nw {
        let mut acc = Complex64::new(0.0, 0.0);
        for (h, &tau) in realization.gains.iter().zip(&realization.delays) {
            acc += h * stream.at(n as isize - tau as isize);
        }
        if realization.cfo != 0.0 {
            acc *= Complex64::from_polar(1.0, 2.0 * PI * n as f64 * realization.cfo / config.n() as f64);
        }
        if sigma > 0.0 {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            acc += Complex64::new(re * sigma, im * sigma);
        }
        y.push(acc);
    }
    Ok(ObservedFrame { y, truth: realization.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derived_rng;

    fn cfg128() -> OfdmConfig {
        OfdmConfig::new(128, 32, 25).unwrap()
    }

    #[test]
    fn exp_decay_zero_eta_is_uniform() {
        let p = exp_decay_profile(3, 0.0).unwrap();
        for tap in p.taps() {
            assert!((tap.power - 1.0 / 3.0).abs() < 1e-12);
        }
        assert_eq!(p.max_delay(), 2);
    }

    #[test]
    fn exp_decay_single_tap() {
        let p = exp_decay_profile(1, 0.4).unwrap();
        assert_eq!(p.taps(), &[ProfileTap { delay: 0, power: 1.0 }]);
    }

    #[test]
    fn exp_decay_first_to_last_ratio() {
        let eta = 10f64.ln() / 27.0;
        let p = exp_decay_profile(28, eta).unwrap();
        let first = p.taps()[0].power;
        let last = p.taps()[27].power;
        assert!((first / last - 10.0).abs() < 1e-9);
        let total: f64 = p.taps().iter().map(|t| t.power).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn exp_decay_rejects_bad_args() {
        assert!(exp_decay_profile(0, 0.1).is_err());
        assert!(exp_decay_profile(3, -0.1).is_err());
    }

    #[test]
    fn tdl_parser_merges_collisions() {
        // 0.0 and 0.04 land on sample 0 and merge; 0.06 rounds up to sample 1.
        let text = "scale_samples 10\n0.0 0\n0.04 -3\n0.06 -3\n0.5 -10\n";
        let p = parse_tdl_profile(text, "t").unwrap();
        assert_eq!(p.taps().len(), 3);
        assert_eq!(p.taps()[0].delay, 0);
        assert_eq!(p.taps()[1].delay, 1);
        assert_eq!(p.taps()[2].delay, 5);

        let text = "scale_samples 10\n0.0 0\n0.31 -3\n0.29 -3\n";
        let p = parse_tdl_profile(text, "t").unwrap();
        assert_eq!(p.taps().len(), 2);
        let merged = p.taps()[1];
        assert_eq!(merged.delay, 3);
        // two equal dB taps merged: power ratio vs tap 0 is 2 * 10^-0.3
        let ratio = merged.power / p.taps()[0].power;
        assert!((ratio - 2.0 * 10f64.powf(-0.3)).abs() < 1e-12);
    }

    #[test]
    fn tdl_parser_single_row_and_errors() {
        let p = parse_tdl_profile("scale_samples 4\n0.0 -7.5\n", "t").unwrap();
        assert_eq!(p.taps(), &[ProfileTap { delay: 0, power: 1.0 }]);
        assert!(parse_tdl_profile("scale_samples 4\n", "t").is_err());
        assert!(parse_tdl_profile("0.0 0\n", "t").is_err());
        assert!(parse_tdl_profile("scale_samples -1\n0.0 0\n", "t").is_err());
        assert!(parse_tdl_profile("scale_samples 4\n0.5 0\n", "t").is_err()); // first delay != 0
        assert!(parse_tdl_profile("scale_samples 4\nnope\n", "t").is_err());
    }

    #[test]
    fn bundled_tdl_profiles_are_normalized_and_fit_the_cp() {
        let cfg = cfg128();
        for p in [DelayProfile::tdl_b(), DelayProfile::tdl_c()] {
            let total: f64 = p.taps().iter().map(|t| t.power).sum();
            assert!((total - 1.0).abs() < 1e-9, "{}: total {total}", p.name());
            assert_eq!(p.taps()[0].delay, 0);
            p.check_fits(&cfg).unwrap();
            assert_eq!(p.max_delay(), 27, "{}", p.name());
        }
    }

    #[test]
    fn realization_power_is_exactly_one() {
        let cfg = cfg128();
        let profile = exp_decay_profile(28, 0.1).unwrap();
        let mut rng = derived_rng(0xc4a, &[0]);
        for _ in 0..100 {
            let real = draw_realization(&profile, &cfg, 10, 0.0, 5.0, &mut rng).unwrap();
            let total: f64 = real.gains().iter().map(|g| g.norm_sqr()).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn realization_single_tap_and_snr_mapping() {
        let cfg = cfg128();
        let profile = exp_decay_profile(1, 0.0).unwrap();
        let mut rng = derived_rng(0xc4a, &[1]);
        let real = draw_realization(&profile, &cfg, 0, 0.0, 0.0, &mut rng).unwrap();
        assert!((real.gains()[0].norm() - 1.0).abs() < 1e-12);
        assert!((real.noise_var() - 1.0).abs() < 1e-15);
        let real = draw_realization(&profile, &cfg, 0, 0.0, 10.0, &mut rng).unwrap();
        assert!((real.noise_var() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn realization_rejects_bad_theta_and_is_deterministic() {
        let cfg = cfg128();
        let profile = exp_decay_profile(2, 0.1).unwrap();
        let mut rng = derived_rng(0xc4a, &[2]);
        assert!(matches!(
            draw_realization(&profile, &cfg, 128, 0.0, 0.0, &mut rng),
            Err(Error::OffsetOutOfRange { theta: 128, max: 127 })
        ));
        let a = draw_realization(&profile, &cfg, 5, 0.0, 3.0, &mut derived_rng(9, &[])).unwrap();
        let b = draw_realization(&profile, &cfg, 5, 0.0, 3.0, &mut derived_rng(9, &[])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn assemble_places_symbol_at_theta() {
        let cfg = cfg128();
        let sym = TrainingSymbol::new(&cfg).unwrap();
        let mut rng = derived_rng(0xc4a, &[3]);
        for theta in [0usize, 5, 127] {
            let stream = assemble_frame(&cfg, &sym, theta, &mut rng).unwrap();
            for (i, &v) in sym.with_cp().iter().enumerate() {
                assert_eq!(stream.at(theta as isize + i as isize), v, "theta {theta}, i {i}");
            }
        }
        assert!(assemble_frame(&cfg, &sym, 128, &mut rng).is_err());
    }

    #[test]
    fn filler_has_unit_mean_power() {
        let cfg = cfg128();
        let sym = TrainingSymbol::new(&cfg).unwrap();
        let mut rng = derived_rng(0xc4a, &[4]);
        let mut acc = 0.0;
        let mut count = 0usize;
        while count < 10_000 {
            let theta = 64;
            let stream = assemble_frame(&cfg, &sym, theta, &mut rng).unwrap();
            for idx in -(cfg.ng() as isize)..cfg.nw() as isize {
                let inside_symbol =
                    idx >= theta as isize && idx < theta as isize + (cfg.ng() + cfg.n()) as isize;
                if !inside_symbol {
                    acc += stream.at(idx).norm_sqr();
                    count += 1;
                }
            }
        }
        let mean = acc / count as f64;
        assert!((mean - 1.0).abs() < 0.1, "filler mean power {mean}");
    }

    #[test]
    fn observe_identity_channel_returns_stream() {
        let cfg = cfg128();
        let sym = TrainingSymbol::new(&cfg).unwrap();
        let mut rng = derived_rng(0xc4a, &[5]);
        let stream = assemble_frame(&cfg, &sym, 17, &mut rng).unwrap();
        let real = ChannelRealization {
            gains: vec![Complex64::new(1.0, 0.0)],
            delays: vec![0],
            theta: 17,
            cfo: 0.0,
            noise_var: 0.0,
        };
        let frame = observe(&stream, &real, &cfg, &mut rng).unwrap();
        for (n, v) in frame.y().iter().enumerate() {
            assert_eq!(*v, stream.at(n as isize));
        }
    }

    #[test]
    fn observe_two_tap_convolution_oracle() {
        let cfg = cfg128();
        let sym = TrainingSymbol::new(&cfg).unwrap();
        let mut rng = derived_rng(0xc4a, &[6]);
        let stream = assemble_frame(&cfg, &sym, 40, &mut rng).unwrap();
        let h1 = Complex64::new(0.6, 0.3);
        let h2 = Complex64::new(-0.2, 0.7);
        let real = ChannelRealization {
            gains: vec![h1, h2],
            delays: vec![0, 1],
            theta: 40,
            cfo: 0.0,
            noise_var: 0.0,
        };
        let frame = observe(&stream, &real, &cfg, &mut rng).unwrap();
        for n in 0..cfg.nw() as isize {
            let expected = h1 * stream.at(n) + h2 * stream.at(n - 1);
            assert!((frame.y()[n as usize] - expected).norm() < 1e-15);
        }
    }

    #[test]
    fn observe_multitap_toy_oracle() {
        // length-8 toy stream, direct convolution sum per index
        let cfg = OfdmConfig::new(8, 4, 1).unwrap();
        let mut stream = TransmitStream::silent(cfg.ng() + cfg.nw(), cfg.ng());
        for (i, v) in stream.samples.iter_mut().enumerate() {
            *v = Complex64::new(i as f64 * 0.25 - 1.0, (i % 3) as f64 * 0.5);
        }
        let gains = vec![
            Complex64::new(0.5, 0.1),
            Complex64::new(0.3, -0.2),
            Complex64::new(-0.1, 0.4),
        ];
        let delays = vec![0usize, 2, 3];
        let real = ChannelRealization {
            gains: gains.clone(),
            delays: delays.clone(),
            theta: 0,
            cfo: 0.0,
            noise_var: 0.0,
        };
        let mut rng = derived_rng(0xc4a, &[7]);
        let frame = observe(&stream, &real, &cfg, &mut rng).unwrap();
        for n in 0..cfg.nw() as isize {
            let mut expected = Complex64::new(0.0, 0.0);
            for (h, &tau) in gains.iter().zip(&delays) {
                expected += h * stream.at(n - tau as isize);
            }
            assert!((frame.y()[n as usize] - expected).norm() < 1e-15);
        }
    }

    #[test]
    fn single_tap_conserves_window_power() {
        let cfg = cfg128();
        let sym = TrainingSymbol::new(&cfg).unwrap();
        let mut rng = derived_rng(0xc4a, &[11]);
        let stream = assemble_frame(&cfg, &sym, 33, &mut rng).unwrap();
        let h = Complex64::new(0.3, -0.8);
        let real = ChannelRealization {
            gains: vec![h],
            delays: vec![0],
            theta: 33,
            cfo: 0.0,
            noise_var: 0.0,
        };
        let frame = observe(&stream, &real, &cfg, &mut rng).unwrap();
        let y_power: f64 = frame.y().iter().map(|v| v.norm_sqr()).sum();
        let stream_power: f64 =
            (0..cfg.nw() as isize).map(|n| stream.at(n).norm_sqr()).sum();
        let bound = h.norm_sqr() * stream_power;
        assert!((y_power - bound).abs() < 1e-9 * bound, "{y_power} vs {bound}");
    }

    #[test]
    fn observe_noise_variance_matches() {
        let cfg = cfg128();
        let stream = TransmitStream::silent(cfg.ng() + cfg.nw(), cfg.ng());
        let real = ChannelRealization {
            gains: vec![Complex64::new(1.0, 0.0)],
            delays: vec![0],
            theta: 0,
            cfo: 0.0,
            noise_var: 1.0,
        };
        let mut rng = derived_rng(0xc4a, &[8]);
        let mut acc = 0.0;
        let mut count = 0usize;
        for _ in 0..1000 {
            let frame = observe(&stream, &real, &cfg, &mut rng).unwrap();
            for v in frame.y() {
                acc += v.norm_sqr();
            }
            count += cfg.nw();
        }
        let var = acc / count as f64;
        assert!((var - 1.0).abs() < 0.05, "sample variance {var}");
    }

    #[test]
    fn cfo_rotates_without_changing_magnitude() {
        let cfg = cfg128();
        let sym = TrainingSymbol::new(&cfg).unwrap();
        let mut rng = derived_rng(0xc4a, &[9]);
        let stream = assemble_frame(&cfg, &sym, 3, &mut rng).unwrap();
        let mk = |cfo: f64| ChannelRealization {
            gains: vec![Complex64::new(1.0, 0.0)],
            delays: vec![0],
            theta: 3,
            cfo,
            noise_var: 0.0,
        };
        let plain = observe(&stream, &mk(0.0), &cfg, &mut rng).unwrap();
        let rotated = observe(&stream, &mk(0.21), &cfg, &mut rng).unwrap();
        for (n, (a, b)) in plain.y().iter().zip(rotated.y()).enumerate() {
            assert!((a.norm() - b.norm()).abs() < 1e-12);
            let phase = Complex64::from_polar(1.0, 2.0 * PI * n as f64 * 0.21 / 128.0);
            assert!((a * phase - b).norm() < 1e-12);
        }
    }

    #[test]
    fn observe_requires_enough_history() {
        let cfg = cfg128();
        let stream = TransmitStream::silent(cfg.nw(), 0);
        let real = ChannelRealization {
            gains: vec![Complex64::new(1.0, 0.0); 2],
            delays: vec![0, 5],
            theta: 0,
            cfo: 0.0,
            noise_var: 0.0,
        };
        let mut rng = derived_rng(0xc4a, &[10]);
        assert!(matches!(
            observe(&stream, &real, &cfg, &mut rng),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
