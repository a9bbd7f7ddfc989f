//! Phasors, harmonic spectra and the orthogonal (in-phase / in-quadrature)
//! decomposition.
//!
//! Magnitudes are rms everywhere. Time-domain waveforms use the sine
//! reference
//!
//! ```text
//! x(t) = sum_h  sqrt(2)·M_h·cos(θ_h)·sin(hω₀t) − sqrt(2)·M_h·sin(θ_h)·cos(hω₀t)
//!      = sum_h  P_h·sin(hω₀t) − Q_h·cos(hω₀t)
//! ```
//!
//! so that `P_h` is the in-phase and `Q_h` the in-quadrature component of order `h`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Add;
use std::str::FromStr;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Wraps an angle in radians into `(−π, π]`.
pub fn normalize_angle<T: Scalar>(angle: T) -> T {
    let two_pi = T::PI() + T::PI();
    let mut a = angle % two_pi;
    if a > T::PI() {
        a -= two_pi;
    } else if a <= -T::PI() {
        a += two_pi;
    }
    a
}

/// An rms magnitude and a phase angle in radians.
///
/// The magnitude is never negative and the angle always lies in `(−π, π]`.
/// A zero phasor has angle 0.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Phasor<T> {
    magnitude: T,
    angle: T,
}

impl<T: Scalar> Phasor<T> {
    /// A negative magnitude is folded into the angle (rotated by π).
    pub fn new(magnitude: T, angle: T) -> Self {
        if magnitude == T::zero() {
            return Self::zero();
        }
        if magnitude < T::zero() {
            return Self::new(-magnitude, angle + T::PI());
        }
        Self {
            magnitude,
            angle: normalize_angle(angle),
        }
    }

    pub fn from_degrees(magnitude: T, angle_deg: T) -> Self {
        Self::new(magnitude, angle_deg.to_radians())
    }

    pub fn zero() -> Self {
        Self {
            magnitude: T::zero(),
            angle: T::zero(),
        }
    }

    pub fn from_complex(z: Complex<T>) -> Self {
        let magnitude = z.norm();
        if magnitude == T::zero() {
            return Self::zero();
        }
        let mut angle = z.im.atan2(z.re);
        if angle <= -T::PI() {
            angle = T::PI();
        }
        Self { magnitude, angle }
    }

    pub fn to_complex(self) -> Complex<T> {
        Complex::from_polar(self.magnitude, self.angle)
    }

    #[inline]
    pub fn magnitude(&self) -> T {
        self.magnitude
    }

    #[inline]
    pub fn angle(&self) -> T {
        self.angle
    }

    pub fn angle_deg(&self) -> T {
        self.angle.to_degrees()
    }

    pub fn rotate(self, by: T) -> Self {
        Self::new(self.magnitude, self.angle + by)
    }

    pub fn scale(self, k: T) -> Self {
        Self::new(self.magnitude * k, self.angle)
    }
}

impl<T: Scalar> Add for Phasor<T> {
    type Output = Phasor<T>;

    fn add(self, rhs: Self) -> Self::Output {
        phasor_add(self, rhs)
    }
}

impl<T: Scalar> From<Complex<T>> for Phasor<T> {
    fn from(z: Complex<T>) -> Self {
        Self::from_complex(z)
    }
}

impl<T: Scalar> fmt::Display for Phasor<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}∠{}°", self.magnitude, self.angle_deg())
    }
}

/// Vector sum of two phasors.
pub fn phasor_add<T: Scalar>(a: Phasor<T>, b: Phasor<T>) -> Phasor<T> {
    Phasor::from_complex(a.to_complex() + b.to_complex())
}

/// `sqrt(2)·M·cos(θ)`: peak amplitude of the `sin(hω₀t)` term.
pub fn in_phase_component<T: Scalar>(p: Phasor<T>) -> T {
    T::SQRT_2() * p.magnitude * p.angle.cos()
}

/// `sqrt(2)·M·sin(θ)`: peak amplitude of the `cos(hω₀t)` term.
pub fn in_quadrature_component<T: Scalar>(p: Phasor<T>) -> T {
    T::SQRT_2() * p.magnitude * p.angle.sin()
}

/// Harmonic order `h` (1 is the fundamental).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HarmonicOrder(u32);

impl HarmonicOrder {
    pub const FUNDAMENTAL: HarmonicOrder = HarmonicOrder(1);

    pub fn new(h: i64) -> Result<Self> {
        if h < 1 || h > u32::MAX as i64 {
            return Err(Error::InvalidOrder(h));
        }
        Ok(Self(h as u32))
    }

    #[inline]
    pub fn get(self) -> u32 {
        self.0
    }

    pub fn is_fundamental(self) -> bool {
        self.0 == 1
    }
}

impl fmt::Display for HarmonicOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PhaseId {
    A,
    B,
    C,
}

impl PhaseId {
    pub const ALL: [PhaseId; 3] = [PhaseId::A, PhaseId::B, PhaseId::C];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Lag of this phase in a positive-sequence set: 0°, 120°, 240°.
    pub fn sequence_lag_deg(self) -> u32 {
        120 * self.index() as u32
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PhaseId::A => "A",
            PhaseId::B => "B",
            PhaseId::C => "C",
        }
    }
}

impl fmt::Display for PhaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsePhaseError(pub String);

impl fmt::Display for ParsePhaseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown phase `{}` (expected A, B or C)", self.0)
    }
}

impl std::error::Error for ParsePhaseError {}

impl FromStr for PhaseId {
    type Err = ParsePhaseError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "A" | "a" => Ok(PhaseId::A),
            "B" | "b" => Ok(PhaseId::B),
            "C" | "c" => Ok(PhaseId::C),
            other => Err(ParsePhaseError(other.to_string())),
        }
    }
}

/// Per-order, per-phase phasors describing one voltage or current.
///
/// Every entry carries exactly the declared phase set.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicSpectrum<T> {
    phases: Vec<PhaseId>,
    entries: BTreeMap<HarmonicOrder, BTreeMap<PhaseId, Phasor<T>>>,
    base_frequency: T,
}

impl<T: Scalar> HarmonicSpectrum<T> {
    pub fn new(phases: impl IntoIterator<Item = PhaseId>, base_frequency: T) -> Self {
        let mut phases: Vec<PhaseId> = phases.into_iter().collect();
        phases.sort();
        phases.dedup();
        Self {
            phases,
            entries: BTreeMap::new(),
            base_frequency,
        }
    }

    /// One-phase spectrum from `(order, phasor)` pairs at 60 Hz.
    pub fn single_phase(phase: PhaseId, components: impl IntoIterator<Item = (u32, Phasor<T>)>) -> Result<Self> {
        let mut s = Self::new([phase], T::lit(60.0));
        for (h, p) in components {
            s.insert(HarmonicOrder::new(h as i64)?, BTreeMap::from([(phase, p)]))?;
        }
        Ok(s)
    }

    pub fn with_base_frequency(mut self, hz: T) -> Self {
        self.base_frequency = hz;
        self
    }

    /// Adds or replaces the entry for `order`.
    pub fn insert(&mut self, order: HarmonicOrder, per_phase: BTreeMap<PhaseId, Phasor<T>>) -> Result<()> {
        if !per_phase.keys().copied().eq(self.phases.iter().copied()) {
            return Err(Error::PhaseSetMismatch {
                order: order.get(),
                expected: self.phases.clone(),
                found: per_phase.keys().copied().collect(),
            });
        }
        self.entries.insert(order, per_phase);
        Ok(())
    }

    pub fn phases(&self) -> &[PhaseId] {
        &self.phases
    }

    pub fn has_phase(&self, phase: PhaseId) -> bool {
        self.phases.contains(&phase)
    }

    pub fn base_frequency(&self) -> T {
        self.base_frequency
    }

    pub fn orders(&self) -> impl Iterator<Item = HarmonicOrder> + '_ {
        self.entries.keys().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, order: HarmonicOrder, phase: PhaseId) -> Option<Phasor<T>> {
        self.entries.get(&order).and_then(|m| m.get(&phase)).copied()
    }

    /// Components of one phase in ascending order.
    pub fn components(&self, phase: PhaseId) -> Result<impl Iterator<Item = (HarmonicOrder, Phasor<T>)> + '_> {
        if !self.has_phase(phase) {
            return Err(Error::UnknownPhase(phase));
        }
        Ok(self.entries.iter().map(move |(h, m)| (*h, m[&phase])))
    }

    /// Applies `f` to every phasor, keeping orders and phases.
    pub fn map(&self, mut f: impl FnMut(HarmonicOrder, PhaseId, Phasor<T>) -> Phasor<T>) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|(h, m)| (*h, m.iter().map(|(ph, p)| (*ph, f(*h, *ph, *p))).collect()))
            .collect();
        Self {
            phases: self.phases.clone(),
            entries,
            base_frequency: self.base_frequency,
        }
    }
}

/// Instantaneous value of one phase at time `t` seconds.
pub fn synthesize_waveform<T: Scalar>(s: &HarmonicSpectrum<T>, phase: PhaseId, t: T) -> Result<T> {
    let omega0 = (T::PI() + T::PI()) * s.base_frequency();
    let mut x = T::zero();
    for (h, p) in s.components(phase)? {
        let arg = T::lit(h.get() as f64) * omega0 * t;
        x += in_phase_component(p) * arg.sin() - in_quadrature_component(p) * arg.cos();
    }
    Ok(x)
}

/// `sqrt(sum_h M_h²)` over every order present.
pub fn spectrum_rms<T: Scalar>(s: &HarmonicSpectrum<T>, phase: PhaseId) -> Result<T> {
    let sum = s
        .components(phase)?
        .fold(T::zero(), |acc, (_, p)| acc + p.magnitude() * p.magnitude());
    Ok(sum.sqrt())
}
