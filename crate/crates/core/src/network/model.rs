use std::collections::BTreeMap;

use num_complex::Complex;

use crate::linalg::CMatrix;
use crate::phasor::{PhaseId, Phasor};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Bus<T> {
    pub id: String,
    pub phases: Vec<PhaseId>,
    /// Line-to-neutral volts.
    pub nominal_voltage: T,
}

/// A line section or transformer between two buses.
///
/// The series impedance and shunt susceptance are total values in ohms and
/// siemens, referred to the `from` bus voltage level. A transformer is a
/// branch whose end buses have different nominal voltages; `tap` is an
/// off-nominal ratio applied at the `from` terminal.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch<T> {
    pub id: String,
    pub from: String,
    pub to: String,
    pub phases: Vec<PhaseId>,
    pub z: CMatrix<T>,
    /// Total shunt admittance `j·B`, split evenly between both ends.
    pub shunt: CMatrix<T>,
    pub tap: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LoadModel {
    #[default]
    ConstantPower,
    /// Fixed current phasor equal to `conj(S / V)` at the flat-start voltage.
    ConstantCurrent,
    ConstantImpedance,
}

/// Wye-connected load; `power` holds one complex VA value per phase.
#[derive(Debug, Clone, PartialEq)]
pub struct Load<T> {
    pub id: String,
    pub bus: String,
    pub phases: Vec<PhaseId>,
    pub model: LoadModel,
    pub power: Vec<Complex<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceComponent<T> {
    pub order: u32,
    /// Percent of the fundamental injection base.
    pub magnitude_pct: T,
    pub base_angle_deg: T,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum SequenceRule<T> {
    /// Phase `p` of order `h` lags by `h·(0°, 120°, 240°)[p]`.
    #[default]
    Auto,
    /// Per-order offsets in degrees, one per source phase, added to the base
    /// angle. Orders without an entry fall back to `Auto`.
    Explicit(BTreeMap<u32, Vec<T>>),
}

/// Ideal harmonic current injection.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicSource<T> {
    pub id: String,
    pub bus: String,
    pub phases: Vec<PhaseId>,
    /// Amps rms per phase that `magnitude_pct = 100` corresponds to.
    pub fundamental_base: T,
    pub spectrum: Vec<SourceComponent<T>>,
    pub sequence: SequenceRule<T>,
}

impl<T: Scalar> HarmonicSource<T> {
    /// Injection angle in degrees on `phase` for `component`.
    pub fn injection_angle_deg(&self, component: &SourceComponent<T>, phase: PhaseId) -> T {
        let explicit = match &self.sequence {
            SequenceRule::Explicit(offsets) => offsets.get(&component.order).and_then(|o| {
                self.phases
                    .iter()
                    .position(|p| *p == phase)
                    .and_then(|k| o.get(k).copied())
            }),
            SequenceRule::Auto => None,
        };
        match explicit {
            Some(offset) => component.base_angle_deg + offset,
            None => {
                let lag = (component.order as u64 * phase.sequence_lag_deg() as u64) % 360;
                component.base_angle_deg - T::lit(lag as f64)
            }
        }
    }

    /// Rotates the base angle of every component (or of the listed orders).
    pub fn rotated(&self, offset_deg: T, only_orders: Option<&[u32]>) -> Self {
        let mut out = self.clone();
        for c in &mut out.spectrum {
            if only_orders.is_none_or(|o| o.contains(&c.order)) {
                c.base_angle_deg += offset_deg;
            }
        }
        out
    }
}

/// Upstream grid seen from the feeder head: a voltage source behind an
/// impedance at the root bus.
#[derive(Debug, Clone, PartialEq)]
pub struct SubstationEquivalent<T> {
    /// Element id under which the source current is reported.
    pub id: String,
    pub bus: String,
    /// One fundamental phasor (volts, line-to-neutral) per root-bus phase.
    pub voltage: Vec<Phasor<T>>,
    pub z: CMatrix<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel<T> {
    pub base_frequency: T,
    /// Three-phase base power in VA.
    pub base_power: T,
    pub buses: Vec<Bus<T>>,
    pub branches: Vec<Branch<T>>,
    pub loads: Vec<Load<T>>,
    pub sources: Vec<HarmonicSource<T>>,
    pub substation: SubstationEquivalent<T>,
}

impl<T: Scalar> NetworkModel<T> {
    pub fn bus(&self, id: &str) -> Option<&Bus<T>> {
        self.buses.iter().find(|b| b.id == id)
    }

    pub fn bus_index(&self, id: &str) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn branch(&self, id: &str) -> Option<&Branch<T>> {
        self.branches.iter().find(|b| b.id == id)
    }

    pub fn source(&self, id: &str) -> Option<&HarmonicSource<T>> {
        self.sources.iter().find(|s| s.id == id)
    }

    pub fn source_mut(&mut self, id: &str) -> Option<&mut HarmonicSource<T>> {
        self.sources.iter_mut().find(|s| s.id == id)
    }

    pub fn root_bus(&self) -> Option<&Bus<T>> {
        self.bus(&self.substation.bus)
    }

    /// Harmonic orders present in any source spectrum.
    pub fn source_orders(&self) -> Vec<u32> {
        let mut orders: Vec<u32> = self
            .sources
            .iter()
            .flat_map(|s| s.spectrum.iter().map(|c| c.order))
            .collect();
        orders.sort_unstable();
        orders.dedup();
        orders
    }

    /// Copy with every branch and source-impedance mutual term set to zero.
    pub fn without_mutual_coupling(&self) -> Self {
        let mut out = self.clone();
        let zero = Complex::new(T::zero(), T::zero());
        let strip = |m: &CMatrix<T>| m.map_indexed(|i, j, z| if i == j { z } else { zero });
        for b in &mut out.branches {
            b.z = strip(&b.z);
            b.shunt = strip(&b.shunt);
        }
        out.substation.z = strip(&out.substation.z);
        out
    }

    /// Converts every value to another scalar type.
    pub fn cast<U: Scalar>(&self) -> NetworkModel<U> {
        let s = |x: T| U::lit(x.to_f64_lossy());
        let c = |z: Complex<T>| Complex::new(s(z.re), s(z.im));
        let m = |a: &CMatrix<T>| {
            CMatrix::from_rows(
                (0..a.rows())
                    .map(|i| (0..a.cols()).map(|j| c(a[(i, j)])).collect())
                    .collect(),
            )
        };
        NetworkModel {
            base_frequency: s(self.base_frequency),
            base_power: s(self.base_power),
            buses: self
                .buses
                .iter()
                .map(|b| Bus {
                    id: b.id.clone(),
                    phases: b.phases.clone(),
                    nominal_voltage: s(b.nominal_voltage),
                })
                .collect(),
            branches: self
                .branches
                .iter()
                .map(|b| Branch {
                    id: b.id.clone(),
                    from: b.from.clone(),
                    to: b.to.clone(),
                    phases: b.phases.clone(),
                    z: m(&b.z),
                    shunt: m(&b.shunt),
                    tap: s(b.tap),
                })
                .collect(),
            loads: self
                .loads
                .iter()
                .map(|l| Load {
                    id: l.id.clone(),
                    bus: l.bus.clone(),
                    phases: l.phases.clone(),
                    model: l.model,
                    power: l.power.iter().map(|&z| c(z)).collect(),
                })
                .collect(),
            sources: self
                .sources
                .iter()
                .map(|h| HarmonicSource {
                    id: h.id.clone(),
                    bus: h.bus.clone(),
                    phases: h.phases.clone(),
                    fundamental_base: s(h.fundamental_base),
                    spectrum: h
                        .spectrum
                        .iter()
                        .map(|k| SourceComponent {
                            order: k.order,
                            magnitude_pct: s(k.magnitude_pct),
                            base_angle_deg: s(k.base_angle_deg),
                        })
                        .collect(),
                    sequence: match &h.sequence {
                        SequenceRule::Auto => SequenceRule::Auto,
                        SequenceRule::Explicit(o) => SequenceRule::Explicit(
                            o.iter().map(|(k, v)| (*k, v.iter().map(|&x| s(x)).collect())).collect(),
                        ),
                    },
                })
                .collect(),
            substation: SubstationEquivalent {
                id: self.substation.id.clone(),
                bus: self.substation.bus.clone(),
                voltage: self
                    .substation
                    .voltage
                    .iter()
                    .map(|p| Phasor::new(s(p.magnitude()), s(p.angle())))
                    .collect(),
                z: m(&self.substation.z),
            },
        }
    }
}
