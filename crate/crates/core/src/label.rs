//! Training-label construction over the ISI-free region.
//!
//! A label is a length-`ns` vector that is zero outside the ISI-free region
//! `[theta + tau_l, theta + ng]` and, in triangular mode, ramps up towards the
//! region's approximate midpoint so the trained network concentrates its
//! maximum output away from the region boundaries. The `tau_l` used for
//! labeling is sampled from a line-of-sight prior rather than taken from the
//! (unknown at the receiver) true channel.

use rand::Rng;

use crate::error::{Error, Result};

/// Shape of the nonzero part of the label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelMode {
    /// Ramp `1, 2, ..., peak, ..., 2, 1` centred on the region midpoint.
    Triangular,
    /// All-ones plateau; approximates the earlier flat label designs and is
    /// flagged as an approximation wherever it is reported.
    Rectangular,
}

/// Validated inputs for one label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelSpec {
    theta: usize,
    tau_l: usize,
    ng: usize,
    ns: usize,
    mode: LabelMode,
}

impl LabelSpec {
    pub fn new(theta: usize, tau_l: usize, ng: usize, ns: usize, mode: LabelMode) -> Result<Self> {
        // tau_l == ng is the degenerate single-point region (D = 1).
        if tau_l == 0 || tau_l > ng {
            return Err(Error::InvalidLabelSpec(format!(
                "tau_l must satisfy 1 <= tau_l <= ng (got tau_l={tau_l}, ng={ng})"
            )));
        }
        if theta + ng > ns - 1 {
            return Err(Error::InvalidLabelSpec(format!(
                "theta + ng must not exceed ns - 1 (got theta={theta}, ng={ng}, ns={ns})"
            )));
        }
        Ok(LabelSpec { theta, tau_l, ng, ns, mode })
    }

    pub fn theta(&self) -> usize {
        self.theta
    }

    pub fn tau_l(&self) -> usize {
        self.tau_l
    }

    pub fn ng(&self) -> usize {
        self.ng
    }

    pub fn ns(&self) -> usize {
        self.ns
    }

    pub fn mode(&self) -> LabelMode {
        self.mode
    }
}

/// The ISI-free region `[theta + tau_l, theta + ng]` (inclusive bounds).
pub fn isi_free_region(theta: usize, tau_l: usize, ng: usize) -> Result<(usize, usize)> {
    if tau_l == 0 || tau_l > ng {
        return Err(Error::InvalidLabelSpec(format!(
            "tau_l must satisfy 1 <= tau_l <= ng (got tau_l={tau_l}, ng={ng})"
        )));
    }
    Ok((theta + tau_l, theta + ng))
}

/// Length of the ISI-free region, `D = ng - tau_l + 1`.
pub fn region_len(tau_l: usize, ng: usize) -> usize {
    ng - tau_l + 1
}

/// Label value at position `d` (1-based) inside a region of length `len`:
/// `d` on the rising half, `len - d + 1` on the falling half.
pub fn zeta(d: usize, len: usize) -> Result<usize> {
    if d == 0 || d > len {
        return Err(Error::InvalidParam(format!(
            "zeta position must satisfy 1 <= d <= {len} (got {d})"
        )));
    }
    // Rising branch holds strictly below ceil((len+1)/2).
    if d < (len + 1).div_ceil(2) {
        Ok(d)
    } else {
        Ok(len - d + 1)
    }
}

/// Approximate midpoint of the ISI-free region,
/// `mu = theta + ceil((tau_l + ng) / 2)`. Always a member of the region.
pub fn midpoint(theta: usize, tau_l: usize, ng: usize) -> usize {
    theta + (tau_l + ng).div_ceil(2)
}

/// A length-`ns` timing label.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingLabel {
    values: Vec<f64>,
}

impl TimingLabel {
    /// Wraps an explicit target vector (entries must be finite and >= 0).
    /// Labels produced by [`build_label`] always satisfy this; the
    /// constructor exists for custom regression targets.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParam(
                "label values must be finite and non-negative".into(),
            ));
        }
        Ok(TimingLabel { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Indices carrying nonzero label mass.
    pub fn support(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Builds the label `[zeros | zeta(1..D) | zeros]` (or an all-ones plateau in
/// rectangular mode). Label values stay as the raw ramp integers; the output
/// layer is linear, so their scale is absorbed by training.
pub fn build_label(spec: &LabelSpec) -> TimingLabel {
    let d_len = region_len(spec.tau_l, spec.ng);
    let mut values = vec![0.0; spec.ns];
    for d in 1..=d_len {
        let v = match spec.mode {
            LabelMode::Triangular => zeta(d, d_len).expect("d within region") as f64,
            LabelMode::Rectangular => 1.0,
        };
        values[spec.theta + spec.tau_l + d - 1] = v;
    }
    TimingLabel { values }
}

/// Integer bound on the maximum labeling delay, derived from the maximum
/// line-of-sight propagation range (in samples).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LosPrior {
    los_ratio: usize,
}

impl LosPrior {
    pub fn new(los_ratio: usize, ng: usize) -> Result<Self> {
        if los_ratio == 0 || los_ratio >= ng {
            return Err(Error::PriorViolation { los_ratio, ng });
        }
        Ok(LosPrior { los_ratio })
    }

    /// The default prior `ceil(7 ng / 8)`, clamped inside `(0, ng)`.
    pub fn default_for(ng: usize) -> Result<Self> {
        let ratio = (7 * ng).div_ceil(8).min(ng.saturating_sub(1)).max(1);
        LosPrior::new(ratio, ng)
    }

    pub fn los_ratio(&self) -> usize {
        self.los_ratio
    }
}

/// Samples a labeling `tau_l` from the LOS prior:
/// uniform on `[1, los_ratio]` when the prior sits below `ceil(ng/2)`,
/// uniform on `[2 los_ratio - ng, los_ratio]` otherwise. The lower bound is
/// clamped to 1 so the resulting label spec stays valid.
pub fn sample_tau_l<R: Rng + ?Sized>(prior: &LosPrior, ng: usize, rng: &mut R) -> Result<usize> {
    let ratio = prior.los_ratio;
    if ratio == 0 || ratio >= ng {
        return Err(Error::PriorViolation { los_ratio: ratio, ng });
    }
    let lo = if ratio < ng.div_ceil(2) {
        1
    } else {
        (2 * ratio).saturating_sub(ng).max(1)
    };
    Ok(rng.random_range(lo..=ratio))
}
