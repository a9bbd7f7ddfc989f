//! Distortion indices: THD, total power factor and the phasor harmonic
//! index (PHI), plus the descriptive statistics used by the studies.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::phasor::{HarmonicOrder, HarmonicSpectrum, PhaseId};
use crate::scalar::Scalar;

/// Total harmonic distortion in percent: `100·sqrt(sum_{h>=2} M_h²) / M_1`.
///
/// Serves both current (THDI) and voltage (THDV) spectra.
pub fn thd<T: Scalar>(s: &HarmonicSpectrum<T>, phase: PhaseId) -> Result<T> {
    let mut fundamental = None;
    let mut harmonic_sq = T::zero();
    for (h, p) in s.components(phase)? {
        if h.is_fundamental() {
            fundamental = Some(p.magnitude());
        } else {
            harmonic_sq += p.magnitude() * p.magnitude();
        }
    }
    match fundamental {
        Some(m1) if m1 > T::zero() => Ok(T::lit(100.0) * harmonic_sq.sqrt() / m1),
        _ => Err(Error::UndefinedThd(phase)),
    }
}

/// `cos(δ₁) / sqrt(1 + THDI²)` with `thdi` as a fraction (not percent).
pub fn total_power_factor<T: Scalar>(delta1: T, thdi: T) -> T {
    delta1.cos() / (T::one() + thdi * thdi).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhiOptions {
    /// Include the fundamental in both sums (default). When false the sums
    /// start at the lowest order above 1.
    pub include_fundamental: bool,
}

impl Default for PhiOptions {
    fn default() -> Self {
        Self {
            include_fundamental: true,
        }
    }
}

/// Phasor harmonic index: `sum_h |M_h·cos θ_h| / sum_h M_h`.
///
/// Both numerator and denominator use the same amplitude scale, so the
/// result lies in `[0, 1]` and reaches 1 only when every component is
/// aligned with (or opposed to) the sine reference.
pub fn phi<T: Scalar>(s: &HarmonicSpectrum<T>, phase: PhaseId) -> Result<T> {
    phi_with(s, phase, PhiOptions::default())
}

pub fn phi_with<T: Scalar>(s: &HarmonicSpectrum<T>, phase: PhaseId, opts: PhiOptions) -> Result<T> {
    let mut in_phase = T::zero();
    let mut total = T::zero();
    for (h, p) in s.components(phase)? {
        if h.is_fundamental() && !opts.include_fundamental {
            continue;
        }
        in_phase += (p.magnitude() * p.angle().cos()).abs();
        total += p.magnitude();
    }
    if total > T::zero() {
        Ok(in_phase / total)
    } else {
        Err(Error::UndefinedPhi(phase))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxStats<T> {
    pub min: T,
    pub max: T,
    pub mean: T,
    pub median: T,
}

pub fn box_stats<T: Scalar>(series: &[T]) -> Result<BoxStats<T>> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    let mut sorted = series.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / T::lit(2.0)
    };
    let sum = sorted.iter().fold(T::zero(), |acc, &x| acc + x);
    // the mean of nearly-equal values can round outside [min, max]
    let mean = (sum / T::from_count(n)).max(sorted[0]).min(sorted[n - 1]);
    Ok(BoxStats {
        min: sorted[0],
        max: sorted[n - 1],
        mean,
        median,
    })
}

/// Index values for one phase; `None` where an index is undefined
/// (e.g. zero fundamental current).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseIndices<T> {
    pub thdv: Option<T>,
    pub thdi: Option<T>,
    pub tpf: Option<T>,
    pub phi_v: Option<T>,
    pub phi_i: Option<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexReport<T> {
    pub point_id: String,
    pub per_phase: BTreeMap<PhaseId, PhaseIndices<T>>,
}

/// Evaluates all indices for one phase from the voltage and current
/// spectra observed at the same point.
pub fn phase_indices<T: Scalar>(
    voltage: &HarmonicSpectrum<T>,
    current: &HarmonicSpectrum<T>,
    phase: PhaseId,
    opts: PhiOptions,
) -> Result<PhaseIndices<T>> {
    for s in [voltage, current] {
        if !s.has_phase(phase) {
            return Err(Error::UnknownPhase(phase));
        }
    }
    let thdv = thd(voltage, phase).ok();
    let thdi = thd(current, phase).ok();
    let tpf = match (
        voltage.get(HarmonicOrder::FUNDAMENTAL, phase),
        current.get(HarmonicOrder::FUNDAMENTAL, phase),
        thdi,
    ) {
        (Some(v1), Some(i1), Some(thdi)) if v1.magnitude() > T::zero() => {
            Some(total_power_factor(v1.angle() - i1.angle(), thdi / T::lit(100.0)))
        }
        _ => None,
    };
    Ok(PhaseIndices {
        thdv,
        thdi,
        tpf,
        phi_v: phi_with(voltage, phase, opts).ok(),
        phi_i: phi_with(current, phase, opts).ok(),
    })
}
