//! Studies built on the assessment engine: two-source phase-angle surfaces,
//! single-phase injection coupling statistics and two-point comparisons.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use crate::engine::{
    per_unit, run_harmonics_pu, solve_fundamental_pu, AssessmentConfig, PerOrderSolution, Quantity, ResultStore,
};
use crate::error::{Error, Result};
use crate::format::sig9;
use crate::indices::{box_stats, phase_indices, BoxStats, IndexReport, PhaseIndices, PhiOptions};
use crate::network::{NetworkModel, PerUnit, SequenceRule, Tree};
use crate::phasor::PhaseId;
use crate::scalar::Scalar;

/// Where voltage and current are observed for one index report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementPoint {
    pub id: String,
    pub voltage_bus: String,
    /// Branch id, or the substation id for the current drawn from the grid.
    pub current_element: String,
}

/// Resolves a point id.
///
/// * bus: the bus voltage and the current entering the bus through its
///   feeding branch (for the root bus, the substation source current);
/// * branch: the `from` bus voltage and the branch current;
/// * substation id: the root bus voltage and the source current.
pub fn resolve_point<T: Scalar>(m: &NetworkModel<T>, id: &str) -> Result<MeasurementPoint> {
    let point = |v: &str, c: &str| MeasurementPoint {
        id: id.to_string(),
        voltage_bus: v.to_string(),
        current_element: c.to_string(),
    };
    if id == m.substation.id {
        return Ok(point(&m.substation.bus, &m.substation.id));
    }
    if let Some(b) = m.bus_index(id) {
        let tree = Tree::build(m)?;
        return Ok(match tree.parent[b] {
            Some(k) => point(id, &m.branches[k].id),
            None => point(id, &m.substation.id),
        });
    }
    if let Some(br) = m.branch(id) {
        return Ok(point(&br.from, id));
    }
    Err(Error::UnknownPoint(id.to_string()))
}

/// All indices per phase at a point.
pub fn index_report<T: Scalar>(
    m: &NetworkModel<T>,
    store: &ResultStore<T>,
    point_id: &str,
    opts: PhiOptions,
) -> Result<IndexReport<T>> {
    let point = resolve_point(m, point_id)?;
    let voltage = store.spectrum_at(&point.voltage_bus, Quantity::Voltage)?;
    let current = store.spectrum_at(&point.current_element, Quantity::Current)?;
    let mut per_phase = BTreeMap::new();
    for &phase in current.phases().iter().filter(|p| voltage.has_phase(**p)) {
        per_phase.insert(phase, phase_indices(&voltage, &current, phase, opts)?);
    }
    Ok(IndexReport {
        point_id: point_id.to_string(),
        per_phase,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Thdv,
    Thdi,
    PhiV,
    PhiI,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Thdv => "thdv",
            Metric::Thdi => "thdi",
            Metric::PhiV => "phi_v",
            Metric::PhiI => "phi_i",
        }
    }

    pub fn pick<T: Copy>(self, ix: &PhaseIndices<T>) -> Option<T> {
        match self {
            Metric::Thdv => ix.thdv,
            Metric::Thdi => ix.thdi,
            Metric::PhiV => ix.phi_v,
            Metric::PhiI => ix.phi_i,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "thdv" => Ok(Metric::Thdv),
            "thdi" => Ok(Metric::Thdi),
            "phi_v" | "phiv" => Ok(Metric::PhiV),
            "phi_i" | "phii" => Ok(Metric::PhiI),
            _ => Err(format!("unknown metric `{s}` (thdv, thdi, phi_v, phi_i)")),
        }
    }
}

/// `start, start+step, …` up to and including `stop` (within rounding).
pub fn angle_range(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "angle range {start}..{stop} step {step} is empty or malformed"
        )));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| start + k as f64 * step).collect())
}

/// 0°, 15°, …, 90°.
pub fn default_angles() -> Vec<f64> {
    angle_range(0.0, 90.0, 15.0).expect("static range")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub sources: (String, String),
    pub angles_deg: Vec<f64>,
    pub metric: Metric,
    pub point: String,
    pub phase: PhaseId,
    /// Rotate only these orders; `None` rotates the whole source spectrum.
    pub only_orders: Option<Vec<u32>>,
    pub phi: PhiOptions,
}

impl SweepSpec {
    pub fn new(sources: (String, String), metric: Metric, point: String, phase: PhaseId) -> Self {
        Self {
            sources,
            angles_deg: default_angles(),
            metric,
            point,
            phase,
            only_orders: None,
            phi: PhiOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid<T> {
    pub source_ids: (String, String),
    pub angles_deg: Vec<f64>,
    pub metric: Metric,
    pub point: String,
    pub phase: PhaseId,
    /// `values[i][j]`: source 1 rotated by `angles[i]`, source 2 by `angles[j]`.
    pub values: Vec<Vec<T>>,
}

impl<T: Scalar> SweepGrid<T> {
    /// Surface matrix: header `alpha_deg\beta_deg,<β…>`, one row per α.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "alpha_deg\\beta_deg")?;
        for b in &self.angles_deg {
            write!(w, ",{}", sig9(*b))?;
        }
        writeln!(w)?;
        for (a, row) in self.angles_deg.iter().zip(&self.values) {
            write!(w, "{}", sig9(*a))?;
            for v in row {
                write!(w, ",{}", sig9(v.to_f64_lossy()))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

fn rotate_sources<T: Scalar>(
    m: &NetworkModel<T>,
    offsets: &[(&str, f64)],
    only_orders: Option<&[u32]>,
) -> Result<NetworkModel<T>> {
    let mut out = m.clone();
    for &(id, offset) in offsets {
        let src = out.source_mut(id).ok_or_else(|| Error::UnknownSource(id.to_string()))?;
        *src = src.rotated(T::lit(offset), only_orders);
    }
    Ok(out)
}

fn metric_at<T: Scalar>(
    m: &NetworkModel<T>,
    store: &ResultStore<T>,
    point: &str,
    phase: PhaseId,
    metric: Metric,
    opts: PhiOptions,
) -> Result<T> {
    let report = index_report(m, store, point, opts)?;
    let ix = report.per_phase.get(&phase).ok_or(Error::UnknownPhase(phase))?;
    metric.pick(ix).ok_or_else(|| Error::UndefinedMetric {
        metric: metric.as_str(),
        point: point.to_string(),
        phase,
    })
}

struct Prepared<T> {
    pu: PerUnit<T>,
    fundamental: PerOrderSolution<T>,
}

fn prepare<T: Scalar>(m: &NetworkModel<T>, cfg: &AssessmentConfig) -> Result<Prepared<T>> {
    let pu = per_unit(m)?;
    let fundamental = solve_fundamental_pu(m, &pu, cfg).map_err(|e| Error::AtOrder {
        order: 1,
        source: Box::new(e),
    })?;
    Ok(Prepared { pu, fundamental })
}

fn check_sweep<T: Scalar>(m: &NetworkModel<T>, spec: &SweepSpec) -> Result<()> {
    for id in [&spec.sources.0, &spec.sources.1] {
        if m.source(id).is_none() {
            return Err(Error::UnknownSource(id.clone()));
        }
    }
    if spec.sources.0 == spec.sources.1 {
        return Err(Error::InvalidConfig("sweep needs two distinct sources".into()));
    }
    resolve_point(m, &spec.point)?;
    Ok(())
}

fn cell<T: Scalar>(
    m: &NetworkModel<T>,
    prep: &Prepared<T>,
    cfg: &AssessmentConfig,
    spec: &SweepSpec,
    alpha: f64,
    beta: f64,
) -> Result<T> {
    let run = || {
        let rotated = rotate_sources(
            m,
            &[(&spec.sources.0, alpha), (&spec.sources.1, beta)],
            spec.only_orders.as_deref(),
        )?;
        let store = run_harmonics_pu(&rotated, &prep.pu, prep.fundamental.clone(), cfg)?;
        metric_at(&rotated, &store, &spec.point, spec.phase, spec.metric, spec.phi)
    };
    run().map_err(|e| Error::AtCell {
        alpha,
        beta,
        source: Box::new(e),
    })
}

/// One surface cell evaluated on its own.
pub fn evaluate_cell<T: Scalar>(
    m: &NetworkModel<T>,
    cfg: &AssessmentConfig,
    spec: &SweepSpec,
    alpha: f64,
    beta: f64,
) -> Result<T> {
    check_sweep(m, spec)?;
    cell(m, &prepare(m, cfg)?, cfg, spec, alpha, beta)
}

/// Metric surface over `angles × angles` rotations of the two sources.
/// Cells are evaluated in parallel and assembled in `(i, j)` order.
pub fn angle_sweep<T: Scalar>(m: &NetworkModel<T>, cfg: &AssessmentConfig, spec: &SweepSpec) -> Result<SweepGrid<T>> {
    check_sweep(m, spec)?;
    let prep = prepare(m, cfg)?;
    let n = spec.angles_deg.len();
    let flat = (0..n * n)
        .into_par_iter()
        .map(|k| cell(m, &prep, cfg, spec, spec.angles_deg[k / n], spec.angles_deg[k % n]))
        .collect::<Result<Vec<T>>>()?;
    let values: Vec<Vec<T>> = flat.chunks(n.max(1)).map(<[T]>::to_vec).collect();
    if values.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig("sweep produced a non-finite value".into()));
    }
    Ok(SweepGrid {
        source_ids: spec.sources.clone(),
        angles_deg: spec.angles_deg.clone(),
        metric: spec.metric,
        point: spec.point.clone(),
        phase: spec.phase,
        values,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledStudySpec {
    pub injected_phase: PhaseId,
    pub angles_deg: Vec<f64>,
    pub point: String,
    pub metric: Metric,
    pub phi: PhiOptions,
}

impl CoupledStudySpec {
    pub fn new(injected_phase: PhaseId, point: String) -> Self {
        Self {
            injected_phase,
            angles_deg: default_angles(),
            point,
            metric: Metric::PhiI,
            phi: PhiOptions::default(),
        }
    }
}

/// Copy of the model with every source reduced to `phase`.
pub fn restrict_sources_to_phase<T: Scalar>(m: &NetworkModel<T>, phase: PhaseId) -> Result<NetworkModel<T>> {
    let mut out = m.clone();
    for src in &mut out.sources {
        let k = src
            .phases
            .iter()
            .position(|p| *p == phase)
            .ok_or_else(|| Error::InvalidConfig(format!("source `{}` has no phase {phase}", src.id)))?;
        if let SequenceRule::Explicit(offsets) = &mut src.sequence {
            for o in offsets.values_mut() {
                *o = o.get(k).map(|x| vec![*x]).unwrap_or_default();
            }
        }
        src.phases = vec![phase];
    }
    Ok(out)
}

/// Every combination of one angle per source: `angles^sources`.
fn angle_combinations(angles: &[f64], sources: usize) -> Vec<Vec<f64>> {
    let mut combos = vec![Vec::new()];
    for _ in 0..sources {
        combos = combos
            .into_iter()
            .flat_map(|c| {
                angles.iter().map(move |&a| {
                    let mut next = c.clone();
                    next.push(a);
                    next
                })
            })
            .collect();
    }
    combos
}

/// Single-phase injection study: all sources are reduced to the injected
/// phase, each source is rotated through every angle (all combinations),
/// and the metric at the point is summarized per phase.
pub fn coupled_phase_study<T: Scalar>(
    m: &NetworkModel<T>,
    cfg: &AssessmentConfig,
    spec: &CoupledStudySpec,
) -> Result<BTreeMap<PhaseId, BoxStats<T>>> {
    let restricted = restrict_sources_to_phase(m, spec.injected_phase)?;
    resolve_point(&restricted, &spec.point)?;
    let prep = prepare(&restricted, cfg)?;
    let ids: Vec<&str> = restricted.sources.iter().map(|s| s.id.as_str()).collect();
    let combos = angle_combinations(&spec.angles_deg, ids.len());
    if combos.len() > 100_000 {
        return Err(Error::InvalidConfig(format!(
            "{} angle combinations over {} sources is too many",
            combos.len(),
            ids.len()
        )));
    }
    let reports = combos
        .par_iter()
        .map(|angles| {
            let offsets: Vec<(&str, f64)> = ids.iter().copied().zip(angles.iter().copied()).collect();
            let rotated = rotate_sources(&restricted, &offsets, None)?;
            let store = run_harmonics_pu(&rotated, &prep.pu, prep.fundamental.clone(), cfg)?;
            index_report(&rotated, &store, &spec.point, spec.phi)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut series: BTreeMap<PhaseId, Vec<T>> = BTreeMap::new();
    for report in &reports {
        for (phase, ix) in &report.per_phase {
            let v = spec.metric.pick(ix).ok_or_else(|| Error::UndefinedMetric {
                metric: spec.metric.as_str(),
                point: spec.point.clone(),
                phase: *phase,
            })?;
            series.entry(*phase).or_default().push(v);
        }
    }
    series
        .into_iter()
        .map(|(phase, values)| Ok((phase, box_stats(&values)?)))
        .collect()
}

pub fn write_box_csv<T: Scalar, W: Write>(stats: &BTreeMap<PhaseId, BoxStats<T>>, mut w: W) -> std::io::Result<()> {
    writeln!(w, "phase,min,max,mean,median")?;
    for (phase, b) in stats {
        writeln!(
            w,
            "{phase},{},{},{},{}",
            sig9(b.min.to_f64_lossy()),
            sig9(b.max.to_f64_lossy()),
            sig9(b.mean.to_f64_lossy()),
            sig9(b.median.to_f64_lossy())
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport<T> {
    pub points: (IndexReport<T>, IndexReport<T>),
}

/// Indices at two points from one assessment run.
pub fn compare_points<T: Scalar>(
    m: &NetworkModel<T>,
    cfg: &AssessmentConfig,
    point_a: &str,
    point_b: &str,
    opts: PhiOptions,
) -> Result<ComparisonReport<T>> {
    resolve_point(m, point_a)?;
    resolve_point(m, point_b)?;
    let store = crate::engine::run_assessment(m, cfg)?;
    Ok(ComparisonReport {
        points: (
            index_report(m, &store, point_a, opts)?,
            index_report(m, &store, point_b, opts)?,
        ),
    })
}

fn opt(v: Option<impl Scalar>) -> String {
    v.map(|x| sig9(x.to_f64_lossy())).unwrap_or_default()
}

/// `point,phase,thdv,thdi,tpf,phi_v,phi_i`; undefined indices are empty.
pub fn write_index_csv<'a, T: Scalar + 'a, W: Write>(
    reports: impl IntoIterator<Item = &'a IndexReport<T>>,
    phases: Option<&[PhaseId]>,
    mut w: W,
) -> std::io::Result<()> {
    writeln!(w, "point,phase,thdv,thdi,tpf,phi_v,phi_i")?;
    for r in reports {
        for (phase, ix) in &r.per_phase {
            if phases.is_some_and(|p| !p.contains(phase)) {
                continue;
            }
            writeln!(
                w,
                "{},{phase},{},{},{},{},{}",
                r.point_id,
                opt(ix.thdv),
                opt(ix.thdi),
                opt(ix.tpf),
                opt(ix.phi_v),
                opt(ix.phi_i)
            )?;
        }
    }
    Ok(())
}
