//! Training-symbol construction: Zadoff-Chu sequence, OFDM modulation and
//! cyclic-prefix extension.
//!
//! The time-domain body carries unit mean power, so the SNR of the observed
//! frame is exactly `1 / noise_var`.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default Zadoff-Chu root index; coprime with the usual subcarrier counts.
pub const DEFAULT_ZC_ROOT: usize = 25;

/// Frame dimensioning shared by every stage of the chain.
///
/// `nw` (observation window) and `ns` (search range) are derived from `n`
/// and `ng` and can never be set independently.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OfdmConfig {
    n: usize,
    ng: usize,
    zc_root: usize,
}

impl OfdmConfig {
    pub fn new(n: usize, ng: usize, zc_root: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig("subcarrier count must be positive".into()));
        }
        if ng == 0 || ng >= n {
            return Err(Error::InvalidConfig(format!(
                "cyclic prefix length must satisfy 0 < ng < n (got n={n}, ng={ng})"
            )));
        }
        if zc_root == 0 || gcd(zc_root, n) != 1 {
            return Err(Error::InvalidRoot { root: zc_root, len: n });
        }
        Ok(OfdmConfig { n, ng, zc_root })
    }

    /// Subcarrier count / DFT length.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Cyclic prefix length.
    pub fn ng(&self) -> usize {
        self.ng
    }

    /// Observation window length, `2n + ng`.
    pub fn nw(&self) -> usize {
        2 * self.n + self.ng
    }

    /// Search range length, `n + ng`.
    pub fn ns(&self) -> usize {
        self.n + self.ng
    }

    pub fn zc_root(&self) -> usize {
        self.zc_root
    }

    /// Largest legal timing offset for a training-symbol placement.
    pub fn max_theta(&self) -> usize {
        self.ns() - self.ng - 1
    }

    /// Parses the key-value config format:
    ///
    /// ```text
    /// # comment
    /// n = 128
    /// ng = 32
    /// zc_root = 25     (optional, defaults to 25)
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        let mut n = None;
        let mut ng = None;
        let mut zc_root = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Format(format!("config line {}: expected `key = value`", lineno + 1))
            })?;
            let value: usize = value.trim().parse().map_err(|_| {
                Error::Format(format!("config line {}: bad integer `{}`", lineno + 1, value.trim()))
            })?;
            let slot = match key.trim() {
                "n" => &mut n,
                "ng" => &mut ng,
                "zc_root" => &mut zc_root,
                other => {
                    return Err(Error::Format(format!(
                        "config line {}: unknown key `{other}`",
                        lineno + 1
                    )))
                }
            };
            if slot.replace(value).is_some() {
                return Err(Error::Format(format!(
                    "config line {}: duplicate key `{}`",
                    lineno + 1,
                    key.trim()
                )));
            }
        }
        let n = n.ok_or_else(|| Error::Format("config is missing `n`".into()))?;
        let ng = ng.ok_or_else(|| Error::Format("config is missing `ng`".into()))?;
        OfdmConfig::new(n, ng, zc_root.unwrap_or(DEFAULT_ZC_ROOT))
    }

    pub fn from_file<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }
}

pub(crate) fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        let t = b;
        b = a % b;
        a = t;
    }
    a
}

/// Generates a Zadoff-Chu sequence of length `len` with root index `root`.
///
/// Even lengths use `d(k) = exp(-j pi root k^2 / len)`, odd lengths
/// `d(k) = exp(-j pi root k (k+1) / len)`. The root must be coprime with the
/// length, which makes the sequence unit-modulus with perfect periodic
/// autocorrelation.
pub fn zadoff_chu(len: usize, root: usize) -> Result<Vec<Complex64>> {
    if len == 0 {
        return Err(Error::InvalidConfig("sequence length must be positive".into()));
    }
    if root == 0 || gcd(root, len) != 1 {
        return Err(Error::InvalidRoot { root, len });
    }
    let modulus = 2 * len as u128;
    Ok((0..len)
        .map(|k| {
            let k = k as u128;
            let quad = if len.is_multiple_of(2) { k * k } else { k * (k + 1) };
            // Reduce the phase index modulo 2N so the sin/cos argument stays small.
            let m = (root as u128 * quad) % modulus;
            let phase = -PI * m as f64 / len as f64;
            Complex64::from_polar(1.0, phase)
        })
        .collect())
}

/// Unitary inverse DFT: `body(n) = (1/sqrt N) sum_k freq(k) e^{j 2 pi k n / N}`.
///
/// Twiddles are read from an exact modular table, so two calls with the same
/// input are bit-identical.
pub(crate) fn idft_scaled(freq: &[Complex64]) -> Vec<Complex64> {
    let n = freq.len();
    let table: Vec<Complex64> = (0..n)
        .map(|m| Complex64::from_polar(1.0, 2.0 * PI * m as f64 / n as f64))
        .collect();
    let scale = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|t| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, d) in freq.iter().enumerate() {
                acc += d * table[(k * t) % n];
            }
            acc * scale
        })
        .collect()
}

/// OFDM-modulates one symbol worth of subcarrier values onto the time domain.
pub fn modulate(config: &OfdmConfig, freq: &[Complex64]) -> Result<Vec<Complex64>> {
    if freq.len() != config.n() {
        return Err(Error::DimensionMismatch {
            what: "modulate: subcarrier vector",
            expected: config.n(),
            got: freq.len(),
        });
    }
    Ok(idft_scaled(freq))
}

/// Prepends the cyclic prefix: the last `ng` body samples are copied in front.
pub fn add_cp(body: &[Complex64], ng: usize) -> Result<Vec<Complex64>> {
    if ng >= body.len() {
        return Err(Error::InvalidCp { ng, n: body.len() });
    }
    let mut out = Vec::with_capacity(ng + body.len());
    out.extend_from_slice(&body[body.len() - ng..]);
    out.extend_from_slice(body);
    Ok(out)
}

/// The training symbol in all three of its representations.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSymbol {
    freq: Vec<Complex64>,
    body: Vec<Complex64>,
    with_cp: Vec<Complex64>,
}

impl TrainingSymbol {
    pub fn new(config: &OfdmConfig) -> Result<Self> {
        let freq = zadoff_chu(config.n(), config.zc_root())?;
        let body = modulate(config, &freq)?;
        let with_cp = add_cp(&body, config.ng())?;
        Ok(TrainingSymbol { freq, body, with_cp })
    }

    /// Subcarrier values `d(k)`, unit modulus.
    pub fn freq(&self) -> &[Complex64] {
        &self.freq
    }

    /// Time-domain body `s(n)`, length `n`, unit mean power.
    pub fn body(&self) -> &[Complex64] {
        &self.body
    }

    /// CP-extended symbol, length `ng + n`.
    pub fn with_cp(&self) -> &[Complex64] {
        &self.with_cp
    }
}

/// The correlator's local reference: the time-domain body of the training
/// symbol (the reference must live in the same domain as the received
/// samples it is correlated against).
pub fn local_sequence(config: &OfdmConfig) -> Result<Vec<Complex64>> {
    Ok(TrainingSymbol::new(config)?.body)
}
