//! Harmonic assessment loop: a backward/forward sweep power flow at the
//! fundamental, then one linear nodal solve per harmonic order with the
//! sources as ideal current injections. Every per-order solution is kept
//! in a [`ResultStore`] for index evaluation.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::format::sig9;
use crate::linalg::{inf_norm, Lu};
use crate::network::{admittance_at_order, LoadModel, NetworkModel, PerUnit};
use crate::phasor::{HarmonicOrder, HarmonicSpectrum, PhaseId, Phasor};
use crate::scalar::Scalar;

type C<T> = Complex<T>;

/// Odd orders up to 11.
pub const DEFAULT_ORDERS: [u32; 5] = [3, 5, 7, 9, 11];

#[derive(Debug, Clone, PartialEq)]
pub struct AssessmentConfig {
    orders: Vec<u32>,
    /// Largest per-unit voltage change between sweeps accepted as converged.
    pub power_flow_tolerance: f64,
    pub max_iterations: usize,
    pub skin_effect: bool,
}

impl Default for AssessmentConfig {
    fn default() -> Self {
        Self {
            orders: DEFAULT_ORDERS.to_vec(),
            power_flow_tolerance: 1e-8,
            max_iterations: 100,
            skin_effect: false,
        }
    }
}

impl AssessmentConfig {
    /// Orders are sorted and deduplicated; each must be at least 2.
    pub fn with_orders(mut self, orders: impl IntoIterator<Item = u32>) -> Result<Self> {
        let mut orders: Vec<u32> = orders.into_iter().collect();
        if let Some(&bad) = orders.iter().find(|&&h| h < 2) {
            return Err(Error::InvalidConfig(format!("harmonic order {bad} must be >= 2")));
        }
        orders.sort_unstable();
        orders.dedup();
        self.orders = orders;
        Ok(self)
    }

    pub fn orders(&self) -> &[u32] {
        &self.orders
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.power_flow_tolerance > 0.0) {
            return Err(Error::InvalidConfig("power flow tolerance must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Phasors keyed by element id, then phase.
pub type ElementPhasors<T> = BTreeMap<String, BTreeMap<PhaseId, Phasor<T>>>;

#[derive(Debug, Clone, PartialEq)]
pub struct PerOrderSolution<T> {
    pub order: u32,
    /// Bus voltages in volts (line-to-neutral).
    pub node_voltages: ElementPhasors<T>,
    /// Series currents of every branch (from → to) and the substation source
    /// current into the feeder, in amps.
    pub branch_currents: ElementPhasors<T>,
    /// Sweep count for the fundamental; 0 for harmonic orders.
    pub iterations: usize,
    /// `‖Y·V − I‖∞` in per-unit for harmonic orders; final sweep mismatch
    /// for the fundamental.
    pub residual: T,
    pub(crate) v_pu: Vec<C<T>>,
}

impl<T: Scalar> PerOrderSolution<T> {
    pub fn voltage(&self, bus: &str, phase: PhaseId) -> Option<Phasor<T>> {
        self.node_voltages.get(bus).and_then(|m| m.get(&phase)).copied()
    }

    pub fn current(&self, element: &str, phase: PhaseId) -> Option<Phasor<T>> {
        self.branch_currents.get(element).and_then(|m| m.get(&phase)).copied()
    }

    /// Per-unit node voltages in node-index order.
    pub fn voltages_pu(&self) -> &[C<T>] {
        &self.v_pu
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultStore<T> {
    pub fundamental: PerOrderSolution<T>,
    pub harmonics: BTreeMap<u32, PerOrderSolution<T>>,
    pub config: AssessmentConfig,
    pub base_frequency: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Quantity {
    Voltage,
    Current,
}

impl Quantity {
    pub fn as_str(self) -> &'static str {
        match self {
            Quantity::Voltage => "voltage",
            Quantity::Current => "current",
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl<T: Scalar> ResultStore<T> {
    pub fn solutions(&self) -> impl Iterator<Item = &PerOrderSolution<T>> {
        std::iter::once(&self.fundamental).chain(self.harmonics.values())
    }

    pub fn max_residual(&self) -> T {
        self.harmonics.values().fold(T::zero(), |m, s| m.max(s.residual))
    }

    /// All orders of one bus voltage or element current as a spectrum.
    pub fn spectrum_at(&self, point: &str, kind: Quantity) -> Result<HarmonicSpectrum<T>> {
        fn pick<'s, T>(
            s: &'s PerOrderSolution<T>,
            kind: Quantity,
            point: &str,
        ) -> Option<&'s BTreeMap<PhaseId, Phasor<T>>> {
            match kind {
                Quantity::Voltage => s.node_voltages.get(point),
                Quantity::Current => s.branch_currents.get(point),
            }
        }
        let Some(first) = pick(&self.fundamental, kind, point) else {
            let other = match kind {
                Quantity::Voltage => &self.fundamental.branch_currents,
                Quantity::Current => &self.fundamental.node_voltages,
            };
            return Err(if other.contains_key(point) {
                Error::KindMismatch {
                    point: point.to_string(),
                    kind: kind.as_str(),
                }
            } else {
                Error::UnknownPoint(point.to_string())
            });
        };
        let mut spectrum = HarmonicSpectrum::new(first.keys().copied(), self.base_frequency);
        for sol in self.solutions() {
            let per_phase = pick(sol, kind, point).ok_or_else(|| Error::UnknownPoint(point.to_string()))?;
            spectrum.insert(HarmonicOrder::new(sol.order as i64)?, per_phase.clone())?;
        }
        Ok(spectrum)
    }

    /// Results table `point_id,kind,phase,order,magnitude,angle_deg`,
    /// ordered by point, kind, phase, order.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut rows = Vec::new();
        for sol in self.solutions() {
            for (kind, map) in [
                (Quantity::Voltage, &sol.node_voltages),
                (Quantity::Current, &sol.branch_currents),
            ] {
                for (id, per_phase) in map {
                    for (phase, p) in per_phase {
                        rows.push((id.as_str(), kind.as_str(), *phase, sol.order, *p));
                    }
                }
            }
        }
        rows.sort_by(|a, b| (a.0, a.1, a.2, a.3).cmp(&(b.0, b.1, b.2, b.3)));
        writeln!(w, "point_id,kind,phase,order,magnitude,angle_deg")?;
        for (id, kind, phase, order, p) in rows {
            writeln!(
                w,
                "{id},{kind},{phase},{order},{},{}",
                sig9(p.magnitude().to_f64_lossy()),
                sig9(p.angle_deg().to_f64_lossy())
            )?;
        }
        Ok(())
    }
}

/// Exposes the per-unit model the engine works on.
pub fn per_unit<T: Scalar>(m: &NetworkModel<T>) -> Result<PerUnit<T>> {
    let findings = crate::network::validate_topology(m);
    if !findings.is_empty() {
        return Err(Error::Validation(findings));
    }
    PerUnit::new(m)
}

fn flat_start<T: Scalar>(pu: &PerUnit<T>) -> Vec<C<T>> {
    let root_angle = |phase: PhaseId| {
        pu.substation
            .nodes
            .iter()
            .position(|&n| pu.nodes.key(n).1 == phase)
            .map(|k| pu.substation.voltage[k].arg())
            .unwrap_or_else(|| -T::lit(phase.sequence_lag_deg() as f64).to_radians())
    };
    (0..pu.nodes.len())
        .map(|k| C::from_polar(T::one(), root_angle(pu.nodes.key(k).1)))
        .collect()
}

struct Sweep<T> {
    series: Vec<Vec<C<T>>>,
    root: Vec<C<T>>,
}

/// Backward pass: series current of every branch and the current drawn
/// from the substation, for node voltages `v`.
fn backward<T: Scalar>(pu: &PerUnit<T>, v: &[C<T>], flat: &[C<T>]) -> Sweep<T> {
    let zero = C::new(T::zero(), T::zero());
    let mut acc = vec![zero; v.len()];
    for load in &pu.loads {
        for (&n, &s) in load.nodes.iter().zip(&load.power) {
            acc[n] += match load.model {
                LoadModel::ConstantPower => (s / v[n]).conj(),
                LoadModel::ConstantCurrent => (s / flat[n]).conj(),
                LoadModel::ConstantImpedance => s.conj() * v[n],
            };
        }
    }
    let mut series = vec![Vec::new(); pu.branches.len()];
    for &k in pu.tree.order.iter().rev() {
        let br = &pu.branches[k];
        let v_to: Vec<C<T>> = br.to_nodes.iter().map(|&n| v[n]).collect();
        let v_int: Vec<C<T>> = br.from_nodes.iter().map(|&n| v[n] / br.tap).collect();
        let sh_to = br.shunt_half.mul_vec(&v_to);
        let sh_from = br.shunt_half.mul_vec(&v_int);
        let i_series: Vec<C<T>> = br.to_nodes.iter().zip(&sh_to).map(|(&n, &s)| acc[n] + s).collect();
        for ((&n, &i), &s) in br.from_nodes.iter().zip(&i_series).zip(&sh_from) {
            acc[n] += (i + s) / br.tap;
        }
        series[k] = i_series;
    }
    let root = pu.substation.nodes.iter().map(|&n| acc[n]).collect();
    Sweep { series, root }
}

fn forward<T: Scalar>(pu: &PerUnit<T>, sweep: &Sweep<T>, v: &mut [C<T>]) {
    let drop = pu.substation.z.mul_vec(&sweep.root);
    for ((&n, &e), d) in pu.substation.nodes.iter().zip(&pu.substation.voltage).zip(drop) {
        v[n] = e - d;
    }
    for &k in &pu.tree.order {
        let br = &pu.branches[k];
        let drop = br.z.mul_vec(&sweep.series[k]);
        for ((&f, &t), d) in br.from_nodes.iter().zip(&br.to_nodes).zip(drop) {
            v[t] = v[f] / br.tap - d;
        }
    }
}

fn to_si<T: Scalar>(
    m: &NetworkModel<T>,
    pu: &PerUnit<T>,
    order: u32,
    v: Vec<C<T>>,
    series: &[Vec<C<T>>],
    source: &[C<T>],
) -> PerOrderSolution<T> {
    let mut node_voltages: ElementPhasors<T> = BTreeMap::new();
    for (b, bus) in m.buses.iter().enumerate() {
        let vb = pu.voltage_base(b);
        let entry = node_voltages.entry(bus.id.clone()).or_default();
        for &(phase, n) in pu.nodes.bus_nodes(b) {
            entry.insert(phase, Phasor::from_complex(v[n] * vb));
        }
    }
    let mut branch_currents: ElementPhasors<T> = BTreeMap::new();
    for (k, br) in m.branches.iter().enumerate() {
        let bpu = &pu.branches[k];
        let ib = pu.current_base(bpu.to);
        let entry = branch_currents.entry(br.id.clone()).or_default();
        for (&n, &i) in bpu.to_nodes.iter().zip(&series[k]) {
            entry.insert(pu.nodes.key(n).1, Phasor::from_complex(i * ib));
        }
    }
    let ib = pu.current_base(pu.tree.root);
    let entry = branch_currents.entry(m.substation.id.clone()).or_default();
    for (&n, &i) in pu.substation.nodes.iter().zip(source) {
        entry.insert(pu.nodes.key(n).1, Phasor::from_complex(i * ib));
    }
    PerOrderSolution {
        order,
        node_voltages,
        branch_currents,
        iterations: 0,
        residual: T::zero(),
        v_pu: v,
    }
}

/// Radial backward/forward sweep at the fundamental, from a flat start.
pub fn solve_fundamental<T: Scalar>(m: &NetworkModel<T>, cfg: &AssessmentConfig) -> Result<PerOrderSolution<T>> {
    solve_fundamental_pu(m, &per_unit(m)?, cfg)
}

pub(crate) fn solve_fundamental_pu<T: Scalar>(
    m: &NetworkModel<T>,
    pu: &PerUnit<T>,
    cfg: &AssessmentConfig,
) -> Result<PerOrderSolution<T>> {
    cfg.validate()?;
    let tol = T::lit(cfg.power_flow_tolerance);
    let flat = flat_start(pu);
    let mut v = flat.clone();
    let mut mismatch = T::infinity();
    for iteration in 1..=cfg.max_iterations {
        let sweep = backward(pu, &v, &flat);
        let mut next = v.clone();
        forward(pu, &sweep, &mut next);
        mismatch = v
            .iter()
            .zip(&next)
            .fold(T::zero(), |acc, (a, b)| acc.max((a - b).norm()));
        v = next;
        if !mismatch.is_finite() {
            break;
        }
        if mismatch < tol {
            let sweep = backward(pu, &v, &flat);
            let mut sol = to_si(m, pu, 1, v, &sweep.series, &sweep.root);
            sol.iterations = iteration;
            sol.residual = mismatch;
            return Ok(sol);
        }
    }
    Err(Error::NonConvergence {
        iterations: cfg.max_iterations,
        mismatch: mismatch.to_f64_lossy(),
    })
}

/// Harmonic current injections at order `h`, in amps, keyed by
/// `(bus id, phase)`. Sources sharing a bus-phase add as phasors.
pub fn injection_currents<T: Scalar>(m: &NetworkModel<T>, h: u32) -> BTreeMap<(String, PhaseId), Phasor<T>> {
    let mut sums: BTreeMap<(String, PhaseId), C<T>> = BTreeMap::new();
    for src in &m.sources {
        for comp in src.spectrum.iter().filter(|c| c.order == h) {
            let magnitude = comp.magnitude_pct / T::lit(100.0) * src.fundamental_base;
            for &phase in &src.phases {
                let angle = src.injection_angle_deg(comp, phase).to_radians();
                *sums
                    .entry((src.bus.clone(), phase))
                    .or_insert_with(|| C::new(T::zero(), T::zero())) += C::from_polar(magnitude, angle);
            }
        }
    }
    sums.into_iter().map(|(k, z)| (k, Phasor::from_complex(z))).collect()
}

pub fn solve_harmonic_order<T: Scalar>(
    m: &NetworkModel<T>,
    fundamental: &PerOrderSolution<T>,
    h: u32,
    cfg: &AssessmentConfig,
) -> Result<PerOrderSolution<T>> {
    solve_harmonic_pu(m, &per_unit(m)?, fundamental, h, cfg)
}

pub(crate) fn solve_harmonic_pu<T: Scalar>(
    m: &NetworkModel<T>,
    pu: &PerUnit<T>,
    fundamental: &PerOrderSolution<T>,
    h: u32,
    cfg: &AssessmentConfig,
) -> Result<PerOrderSolution<T>> {
    if h < 2 {
        return Err(Error::InvalidConfig(format!("harmonic order {h} must be >= 2")));
    }
    let ya = admittance_at_order(pu, fundamental.voltages_pu(), h, cfg.skin_effect)?;
    let n = pu.nodes.len();
    let mut rhs = vec![C::new(T::zero(), T::zero()); n];
    for ((bus, phase), p) in injection_currents(m, h) {
        let b = m.bus_index(&bus).ok_or_else(|| Error::UnknownPoint(bus.clone()))?;
        let node = pu
            .nodes
            .node(b, phase)
            .ok_or_else(|| Error::UnknownPoint(format!("{bus}.{phase}")))?;
        rhs[node] += p.to_complex() / pu.current_base(b);
    }
    let lu =
        Lu::factor(&ya.y).ok_or_else(|| Error::Singular(format!("Y({h}) (isolated island or zero-impedance loop)")))?;
    let mut v = lu.solve(&rhs);
    let residual_of = |v: &[C<T>]| -> Vec<C<T>> { ya.y.mul_vec(v).iter().zip(&rhs).map(|(a, b)| a - b).collect() };
    let bound = T::lit(1e-10) * T::one().max(inf_norm(&rhs));
    let mut r = residual_of(&v);
    if inf_norm(&r) > bound {
        let dv = lu.solve(&r);
        v.iter_mut().zip(dv).for_each(|(x, d)| *x -= d);
        r = residual_of(&v);
    }

    let series: Vec<Vec<C<T>>> = pu
        .branches
        .iter()
        .enumerate()
        .map(|(k, br)| {
            let dv: Vec<C<T>> = br
                .from_nodes
                .iter()
                .zip(&br.to_nodes)
                .map(|(&f, &t)| v[f] / br.tap - v[t])
                .collect();
            ya.series_admittance(k).mul_vec(&dv)
        })
        .collect();
    let v_root: Vec<C<T>> = pu.substation.nodes.iter().map(|&n| -v[n]).collect();
    let source = ya.source_admittance().mul_vec(&v_root);
    let mut sol = to_si(m, pu, h, v, &series, &source);
    sol.residual = inf_norm(&r);
    Ok(sol)
}

/// Fundamental solve followed by every configured harmonic order.
pub fn run_assessment<T: Scalar>(m: &NetworkModel<T>, cfg: &AssessmentConfig) -> Result<ResultStore<T>> {
    let pu = per_unit(m)?;
    run_assessment_pu(m, &pu, cfg)
}

pub(crate) fn run_assessment_pu<T: Scalar>(
    m: &NetworkModel<T>,
    pu: &PerUnit<T>,
    cfg: &AssessmentConfig,
) -> Result<ResultStore<T>> {
    let fundamental = solve_fundamental_pu(m, pu, cfg).map_err(|e| Error::AtOrder {
        order: 1,
        source: Box::new(e),
    })?;
    run_harmonics_pu(m, pu, fundamental, cfg)
}

/// Harmonic stage of the assessment on top of an existing fundamental.
pub(crate) fn run_harmonics_pu<T: Scalar>(
    m: &NetworkModel<T>,
    pu: &PerUnit<T>,
    fundamental: PerOrderSolution<T>,
    cfg: &AssessmentConfig,
) -> Result<ResultStore<T>> {
    let harmonics = cfg
        .orders()
        .par_iter()
        .map(|&h| {
            solve_harmonic_pu(m, pu, &fundamental, h, cfg)
                .map(|s| (h, s))
                .map_err(|e| Error::AtOrder {
                    order: h,
                    source: Box::new(e),
                })
        })
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(ResultStore {
        fundamental,
        harmonics,
        config: cfg.clone(),
        base_frequency: m.base_frequency,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_orders_are_odd_up_to_eleven() {
        assert_eq!(AssessmentConfig::default().orders(), &[3, 5, 7, 9, 11]);
    }

    #[test]
    fn orders_are_sorted_and_checked() {
        let cfg = AssessmentConfig::default().with_orders([9, 2, 4, 2]).unwrap();
        assert_eq!(cfg.orders(), &[2, 4, 9]);
        assert!(AssessmentConfig::default().with_orders([3, 1]).is_err());
        assert!(AssessmentConfig::default().with_orders([]).unwrap().orders().is_empty());
    }

    #[test]
    fn tolerance_must_be_positive() {
        let mut cfg = AssessmentConfig {
            power_flow_tolerance: 0.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        cfg.power_flow_tolerance = f64::NAN;
        assert!(cfg.validate().is_err());
    }
}
