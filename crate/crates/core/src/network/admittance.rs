//! Per-unit conversion and nodal admittance assembly at a harmonic order.
//!
//! Bases: per-phase power `S = base_power / 3`, bus voltage base equal to
//! the bus nominal line-to-neutral voltage. Branch data is referred to the
//! `from` bus base.

use num_complex::Complex;

use super::model::{LoadModel, NetworkModel};
use super::topology::Tree;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::phasor::PhaseId;
use crate::scalar::Scalar;

type C<T> = Complex<T>;

/// Maps `(bus, phase)` pairs to matrix rows, bus-major in model order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeIndex {
    nodes: Vec<(usize, PhaseId)>,
    by_bus: Vec<Vec<(PhaseId, usize)>>,
}

impl NodeIndex {
    fn new<T: Scalar>(m: &NetworkModel<T>) -> Self {
        let mut nodes = Vec::new();
        let mut by_bus = Vec::with_capacity(m.buses.len());
        for (b, bus) in m.buses.iter().enumerate() {
            let mut phases = bus.phases.clone();
            phases.sort();
            let mut row = Vec::with_capacity(phases.len());
            for p in phases {
                row.push((p, nodes.len()));
                nodes.push((b, p));
            }
            by_bus.push(row);
        }
        Self { nodes, by_bus }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, bus: usize, phase: PhaseId) -> Option<usize> {
        self.by_bus
            .get(bus)
            .and_then(|row| row.iter().find(|(p, _)| *p == phase).map(|(_, k)| *k))
    }

    /// `(bus, phase)` of row `k`.
    pub fn key(&self, k: usize) -> (usize, PhaseId) {
        self.nodes[k]
    }

    pub fn bus_nodes(&self, bus: usize) -> &[(PhaseId, usize)] {
        &self.by_bus[bus]
    }

    fn nodes_for(&self, bus: usize, phases: &[PhaseId]) -> Vec<usize> {
        phases
            .iter()
            .map(|p| self.node(bus, *p).expect("validated model: phase present at bus"))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub(crate) struct BranchPu<T> {
    pub to: usize,
    pub from_nodes: Vec<usize>,
    pub to_nodes: Vec<usize>,
    pub z: CMatrix<T>,
    /// `j·B/2` at each end.
    pub shunt_half: CMatrix<T>,
    pub tap: T,
}

#[derive(Debug, Clone)]
pub(crate) struct LoadPu<T> {
    pub nodes: Vec<usize>,
    pub power: Vec<C<T>>,
    pub model: LoadModel,
}

#[derive(Debug, Clone)]
pub(crate) struct SubstationPu<T> {
    pub nodes: Vec<usize>,
    pub voltage: Vec<C<T>>,
    pub z: CMatrix<T>,
}

/// A validated model in per-unit, with its tree and node numbering.
#[derive(Debug, Clone)]
pub struct PerUnit<T> {
    pub(crate) nodes: NodeIndex,
    pub(crate) tree: Tree,
    pub(crate) v_base: Vec<T>,
    pub(crate) i_base: Vec<T>,
    pub(crate) branches: Vec<BranchPu<T>>,
    pub(crate) loads: Vec<LoadPu<T>>,
    pub(crate) substation: SubstationPu<T>,
}

impl<T: Scalar> PerUnit<T> {
    /// Expects a model that passed [`super::validate_topology`].
    pub fn new(m: &NetworkModel<T>) -> Result<Self> {
        let tree = Tree::build(m)?;
        let nodes = NodeIndex::new(m);
        let s_phase = m.base_power / T::lit(3.0);
        let v_base: Vec<T> = m.buses.iter().map(|b| b.nominal_voltage).collect();
        let i_base: Vec<T> = v_base.iter().map(|&v| s_phase / v).collect();
        let z_base = |bus: usize| v_base[bus] * v_base[bus] / s_phase;
        let bus_of = |id: &str| m.bus_index(id).ok_or_else(|| Error::UnknownPoint(id.to_string()));

        let mut branches = Vec::with_capacity(m.branches.len());
        for br in &m.branches {
            let (from, to) = (bus_of(&br.from)?, bus_of(&br.to)?);
            let zb = z_base(from);
            branches.push(BranchPu {
                to,
                from_nodes: nodes.nodes_for(from, &br.phases),
                to_nodes: nodes.nodes_for(to, &br.phases),
                z: br.z.map(|z| z / zb),
                shunt_half: br.shunt.map(|y| y * zb * T::lit(0.5)),
                tap: br.tap,
            });
        }

        let loads = m
            .loads
            .iter()
            .map(|l| {
                let bus = bus_of(&l.bus)?;
                Ok(LoadPu {
                    nodes: nodes.nodes_for(bus, &l.phases),
                    power: l.power.iter().map(|&s| s / s_phase).collect(),
                    model: l.model,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let root = tree.root;
        let root_phases: Vec<PhaseId> = nodes.bus_nodes(root).iter().map(|(p, _)| *p).collect();
        let substation = SubstationPu {
            nodes: nodes.nodes_for(root, &root_phases),
            voltage: m
                .substation
                .voltage
                .iter()
                .map(|v| v.to_complex() / v_base[root])
                .collect(),
            z: m.substation.z.map(|z| z / z_base(root)),
        };

        Ok(Self {
            nodes,
            tree,
            v_base,
            i_base,
            branches,
            loads,
            substation,
        })
    }

    pub fn node_index(&self) -> &NodeIndex {
        &self.nodes
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    /// Per-unit voltage base (volts) of a bus.
    pub fn voltage_base(&self, bus: usize) -> T {
        self.v_base[bus]
    }

    /// Per-unit current base (amps) of a bus.
    pub fn current_base(&self, bus: usize) -> T {
        self.i_base[bus]
    }
}

/// `R·k + j·h·X` elementwise, with `k = sqrt(h)` under the skin-effect
/// option and 1 otherwise.
pub fn scaled_impedance<T: Scalar>(z: &CMatrix<T>, h: u32, skin_effect: bool) -> CMatrix<T> {
    let hh = T::lit(h as f64);
    let r_scale = if skin_effect { hh.sqrt() } else { T::one() };
    z.map(|z| C::new(z.re * r_scale, z.im * hh))
}

/// `Y(h)` plus the per-element admittances it was assembled from.
#[derive(Debug, Clone)]
pub struct AdmittanceMatrix<T> {
    pub order: u32,
    pub y: CMatrix<T>,
    pub(crate) series: Vec<CMatrix<T>>,
    pub(crate) shunt_half: Vec<CMatrix<T>>,
    pub(crate) source: CMatrix<T>,
    pub(crate) loads: Vec<Vec<C<T>>>,
}

impl<T: Scalar> AdmittanceMatrix<T> {
    /// Series admittance `Z(h)⁻¹` of branch `k` in per-unit.
    pub fn series_admittance(&self, k: usize) -> &CMatrix<T> {
        &self.series[k]
    }

    /// `j·h·B/2` shunt admittance at each end of branch `k`.
    pub fn shunt_admittance(&self, k: usize) -> &CMatrix<T> {
        &self.shunt_half[k]
    }

    /// Per-phase shunt admittances of load `l` (model order).
    pub fn load_admittances(&self, l: usize) -> &[C<T>] {
        &self.loads[l]
    }

    /// Admittance of the substation equivalent at this order.
    pub fn source_admittance(&self) -> &CMatrix<T> {
        &self.source
    }
}

/// Assembles the per-unit nodal admittance matrix at order `h`.
///
/// Reactances and shunt susceptances scale with `h`, resistances stay
/// constant (or grow as `sqrt(h)` with `skin_effect`). Loads become shunt
/// admittances `conj(S)/|V₁|²` using the fundamental node voltages
/// `fundamental_pu` (one per row of the node index).
pub fn admittance_at_order<T: Scalar>(
    pu: &PerUnit<T>,
    fundamental_pu: &[C<T>],
    h: u32,
    skin_effect: bool,
) -> Result<AdmittanceMatrix<T>> {
    let n = pu.nodes.len();
    if fundamental_pu.len() != n {
        return Err(Error::InvalidConfig(format!(
            "fundamental solution has {} node voltages, model has {n} nodes",
            fundamental_pu.len()
        )));
    }
    let hh = T::lit(h as f64);
    let mut y = CMatrix::zeros(n, n);
    let mut series = Vec::with_capacity(pu.branches.len());
    let mut shunts = Vec::with_capacity(pu.branches.len());

    for (k, br) in pu.branches.iter().enumerate() {
        let ys = scaled_impedance(&br.z, h, skin_effect)
            .symmetric_inverse()
            .ok_or_else(|| Error::Singular(format!("series impedance of branch #{k} at order {h}")))?;
        let ysh = br.shunt_half.scale(C::new(hh, T::zero()));
        let t = br.tap;
        let nb = br.from_nodes.len();
        for i in 0..nb {
            for j in 0..nb {
                let (fi, fj) = (br.from_nodes[i], br.from_nodes[j]);
                let (ti, tj) = (br.to_nodes[i], br.to_nodes[j]);
                let s = ys[(i, j)];
                let sh = ysh[(i, j)];
                y[(fi, fj)] += (s + sh) / (t * t);
                y[(fi, tj)] -= s / t;
                y[(ti, fj)] -= s / t;
                y[(ti, tj)] += s + sh;
            }
        }
        series.push(ys);
        shunts.push(ysh);
    }

    let source = scaled_impedance(&pu.substation.z, h, false)
        .symmetric_inverse()
        .ok_or_else(|| Error::Singular(format!("substation source impedance at order {h}")))?;
    for (i, &ni) in pu.substation.nodes.iter().enumerate() {
        for (j, &nj) in pu.substation.nodes.iter().enumerate() {
            y[(ni, nj)] += source[(i, j)];
        }
    }

    let mut loads = Vec::with_capacity(pu.loads.len());
    for load in &pu.loads {
        let mut per_phase = Vec::with_capacity(load.nodes.len());
        for (&node, &s) in load.nodes.iter().zip(&load.power) {
            let v2 = fundamental_pu[node].norm_sqr();
            if !(v2 > T::zero()) {
                return Err(Error::Singular(format!(
                    "zero fundamental voltage at a loaded node (row {node})"
                )));
            }
            let yl = s.conj() / v2;
            y[(node, node)] += yl;
            per_phase.push(yl);
        }
        loads.push(per_phase);
    }

    Ok(AdmittanceMatrix {
        order: h,
        y,
        series,
        shunt_half: shunts,
        source,
        loads,
    })
}
