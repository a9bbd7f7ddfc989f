use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use super::model::NetworkModel;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, Lu};
use crate::phasor::PhaseId;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FindingKind {
    DuplicateId,
    UnknownBus,
    PhaseMismatch,
    DimensionMismatch,
    Asymmetric,
    Singular,
    InvalidValue,
    Cycle,
    Disconnected,
    Orientation,
}

impl fmt::Display for FindingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FindingKind::DuplicateId => "duplicate id",
            FindingKind::UnknownBus => "unknown bus",
            FindingKind::PhaseMismatch => "phase mismatch",
            FindingKind::DimensionMismatch => "dimension mismatch",
            FindingKind::Asymmetric => "asymmetric matrix",
            FindingKind::Singular => "singular impedance",
            FindingKind::InvalidValue => "invalid value",
            FindingKind::Cycle => "non-radial cycle",
            FindingKind::Disconnected => "disconnected",
            FindingKind::Orientation => "reversed branch",
        })
    }
}

/// One violated model invariant, naming the offending element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub kind: FindingKind,
    pub element: String,
    pub detail: String,
}

impl Finding {
    fn new(kind: FindingKind, element: impl Into<String>, detail: impl Into<String>) -> Self {
        Self {
            kind,
            element: element.into(),
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.kind, self.element, self.detail)
    }
}

/// Rooted spanning structure of a radial model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tree {
    pub root: usize,
    /// Branch indices, every branch after the branch feeding its `from` bus.
    pub order: Vec<usize>,
    /// Branch feeding each bus; `None` for the root.
    pub parent: Vec<Option<usize>>,
}

struct Walk {
    tree: Tree,
    cycles: Vec<usize>,
    reversed: Vec<usize>,
    unreached: Vec<usize>,
}

fn walk<T: Scalar>(m: &NetworkModel<T>, root: usize) -> Walk {
    let n = m.buses.len();
    let mut incident: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (k, br) in m.branches.iter().enumerate() {
        if let (Some(f), Some(t)) = (m.bus_index(&br.from), m.bus_index(&br.to)) {
            if f != t {
                incident[f].push((k, t));
                incident[t].push((k, f));
            }
        }
    }
    let mut visited = vec![false; n];
    let mut used = vec![false; m.branches.len()];
    let mut parent = vec![None; n];
    let mut order = Vec::with_capacity(m.branches.len());
    let (mut cycles, mut reversed) = (Vec::new(), Vec::new());
    let mut queue = VecDeque::from([root]);
    visited[root] = true;
    while let Some(u) = queue.pop_front() {
        for &(k, v) in &incident[u] {
            if used[k] {
                continue;
            }
            used[k] = true;
            if visited[v] {
                cycles.push(k);
                continue;
            }
            if m.branches[k].from != m.buses[u].id {
                reversed.push(k);
            }
            visited[v] = true;
            parent[v] = Some(k);
            order.push(k);
            queue.push_back(v);
        }
    }
    cycles.sort_unstable();
    Walk {
        tree: Tree { root, order, parent },
        cycles,
        reversed,
        unreached: (0..n).filter(|&i| !visited[i]).collect(),
    }
}

impl Tree {
    pub fn build<T: Scalar>(m: &NetworkModel<T>) -> Result<Self> {
        let root = m
            .bus_index(&m.substation.bus)
            .ok_or_else(|| Error::NotRadial(format!("substation bus `{}` does not exist", m.substation.bus)))?;
        let w = walk(m, root);
        if let Some(&k) = w.cycles.first() {
            return Err(Error::NotRadial(format!(
                "branch `{}` closes a cycle",
                m.branches[k].id
            )));
        }
        if let Some(&b) = w.unreached.first() {
            return Err(Error::NotRadial(format!(
                "bus `{}` is not reachable from the substation",
                m.buses[b].id
            )));
        }
        if let Some(&k) = w.reversed.first() {
            return Err(Error::NotRadial(format!(
                "branch `{}` points toward the substation",
                m.branches[k].id
            )));
        }
        if w.tree.order.len() != m.branches.len() {
            return Err(Error::NotRadial("some branches are not part of the feeder tree".into()));
        }
        Ok(w.tree)
    }

    /// Parent branch of a branch (the one feeding its `from` bus).
    pub fn parent_branch<T: Scalar>(&self, m: &NetworkModel<T>, branch: usize) -> Option<usize> {
        m.bus_index(&m.branches[branch].from).and_then(|b| self.parent[b])
    }
}

/// Branch indices ordered root-to-leaf; reverse the list for leaf-to-root.
pub fn traversal_order<T: Scalar>(m: &NetworkModel<T>) -> Result<Vec<usize>> {
    Ok(Tree::build(m)?.order)
}

fn subset(inner: &[PhaseId], outer: &[PhaseId]) -> bool {
    inner.iter().all(|p| outer.contains(p))
}

fn phase_list_ok(phases: &[PhaseId]) -> bool {
    let set: BTreeSet<_> = phases.iter().collect();
    !phases.is_empty() && set.len() == phases.len()
}

fn check_matrix<T: Scalar>(
    out: &mut Vec<Finding>,
    element: &str,
    what: &str,
    m: &CMatrix<T>,
    n: usize,
    require_nonsingular: bool,
) {
    if m.rows() != n || m.cols() != n {
        out.push(Finding::new(
            FindingKind::DimensionMismatch,
            element,
            format!("{what} is {}x{} but the element has {n} phase(s)", m.rows(), m.cols()),
        ));
        return;
    }
    if m.asymmetry() > T::lit(1e-9) {
        out.push(Finding::new(
            FindingKind::Asymmetric,
            element,
            format!("{what} is not symmetric"),
        ));
    }
    if require_nonsingular && Lu::factor(m).is_none() {
        out.push(Finding::new(
            FindingKind::Singular,
            element,
            format!("{what} is singular at the fundamental"),
        ));
    }
}

/// Lists every violated model invariant; empty when the model is valid.
pub fn validate_topology<T: Scalar>(m: &NetworkModel<T>) -> Vec<Finding> {
    use FindingKind::*;
    let mut out = Vec::new();

    if !(m.base_frequency > T::zero()) {
        out.push(Finding::new(InvalidValue, "base", "frequency_hz must be positive"));
    }
    if !(m.base_power > T::zero()) {
        out.push(Finding::new(InvalidValue, "base", "power_va must be positive"));
    }

    let mut seen = BTreeSet::new();
    let element_ids = m
        .buses
        .iter()
        .map(|b| &b.id)
        .chain(m.branches.iter().map(|b| &b.id))
        .chain(std::iter::once(&m.substation.id));
    for id in element_ids {
        if !seen.insert(id.as_str()) {
            out.push(Finding::new(
                DuplicateId,
                id,
                "bus, branch and substation ids must be unique",
            ));
        }
    }
    let mut seen = BTreeSet::new();
    for id in m.loads.iter().map(|l| &l.id) {
        if !seen.insert(id.as_str()) {
            out.push(Finding::new(DuplicateId, id, "load ids must be unique"));
        }
    }
    let mut seen = BTreeSet::new();
    for id in m.sources.iter().map(|s| &s.id) {
        if !seen.insert(id.as_str()) {
            out.push(Finding::new(DuplicateId, id, "source ids must be unique"));
        }
    }

    for b in &m.buses {
        if !phase_list_ok(&b.phases) {
            out.push(Finding::new(
                PhaseMismatch,
                &b.id,
                "phase list is empty or repeats a phase",
            ));
        }
        if !(b.nominal_voltage > T::zero()) {
            out.push(Finding::new(InvalidValue, &b.id, "nominal_voltage must be positive"));
        }
    }

    for br in &m.branches {
        let ends = [&br.from, &br.to].map(|id| (id, m.bus(id)));
        for (id, bus) in ends {
            match bus {
                None => out.push(Finding::new(
                    UnknownBus,
                    &br.id,
                    format!("references unknown bus \"{id}\""),
                )),
                Some(bus) if !subset(&br.phases, &bus.phases) => out.push(Finding::new(
                    PhaseMismatch,
                    &br.id,
                    format!("phases {:?} are not all present at bus \"{id}\"", br.phases),
                )),
                _ => {}
            }
        }
        if br.from == br.to {
            out.push(Finding::new(Cycle, &br.id, "branch connects a bus to itself"));
        }
        if !phase_list_ok(&br.phases) {
            out.push(Finding::new(
                PhaseMismatch,
                &br.id,
                "phase list is empty or repeats a phase",
            ));
        }
        check_matrix(&mut out, &br.id, "series impedance", &br.z, br.phases.len(), true);
        check_matrix(&mut out, &br.id, "shunt susceptance", &br.shunt, br.phases.len(), false);
        if !(br.tap > T::zero()) {
            out.push(Finding::new(InvalidValue, &br.id, "tap must be positive"));
        }
    }

    let sub = &m.substation;
    match m.root_bus() {
        None => out.push(Finding::new(
            UnknownBus,
            &sub.id,
            format!("references unknown bus \"{}\"", sub.bus),
        )),
        Some(root) => {
            let n = root.phases.len();
            if sub.voltage.len() != n {
                out.push(Finding::new(
                    DimensionMismatch,
                    &sub.id,
                    format!("{} voltage phasor(s) for {n} root-bus phase(s)", sub.voltage.len()),
                ));
            }
            check_matrix(&mut out, &sub.id, "source impedance", &sub.z, n, true);
        }
    }
    if sub.voltage.iter().any(|v| !(v.magnitude() > T::zero())) {
        out.push(Finding::new(
            InvalidValue,
            &sub.id,
            "source voltage magnitudes must be positive",
        ));
    }

    for l in &m.loads {
        match m.bus(&l.bus) {
            None => out.push(Finding::new(
                UnknownBus,
                &l.id,
                format!("references unknown bus \"{}\"", l.bus),
            )),
            Some(bus) if !subset(&l.phases, &bus.phases) => out.push(Finding::new(
                PhaseMismatch,
                &l.id,
                format!("phases not present at bus \"{}\"", l.bus),
            )),
            _ => {}
        }
        if !phase_list_ok(&l.phases) {
            out.push(Finding::new(
                PhaseMismatch,
                &l.id,
                "phase list is empty or repeats a phase",
            ));
        }
        if l.power.len() != l.phases.len() {
            out.push(Finding::new(
                DimensionMismatch,
                &l.id,
                format!("{} power value(s) for {} phase(s)", l.power.len(), l.phases.len()),
            ));
        }
        if l.power.iter().any(|s| s.re < T::zero()) {
            out.push(Finding::new(InvalidValue, &l.id, "real power must be non-negative"));
        }
    }

    for s in &m.sources {
        match m.bus(&s.bus) {
            None => out.push(Finding::new(
                UnknownBus,
                &s.id,
                format!("references unknown bus \"{}\"", s.bus),
            )),
            Some(bus) if !subset(&s.phases, &bus.phases) => out.push(Finding::new(
                PhaseMismatch,
                &s.id,
                format!("phases not present at bus \"{}\"", s.bus),
            )),
            _ => {}
        }
        if !phase_list_ok(&s.phases) {
            out.push(Finding::new(
                PhaseMismatch,
                &s.id,
                "phase list is empty or repeats a phase",
            ));
        }
        if !(s.fundamental_base >= T::zero()) {
            out.push(Finding::new(
                InvalidValue,
                &s.id,
                "fundamental_base_a must be non-negative",
            ));
        }
        let mut orders = BTreeSet::new();
        for c in &s.spectrum {
            if c.order < 2 {
                out.push(Finding::new(
                    InvalidValue,
                    &s.id,
                    format!("harmonic order {} must be >= 2", c.order),
                ));
            }
            if !(c.magnitude_pct >= T::zero()) {
                out.push(Finding::new(
                    InvalidValue,
                    &s.id,
                    format!("order {} magnitude must be >= 0", c.order),
                ));
            }
            if !orders.insert(c.order) {
                out.push(Finding::new(
                    DuplicateId,
                    &s.id,
                    format!("order {} listed twice", c.order),
                ));
            }
        }
        if let super::SequenceRule::Explicit(offsets) = &s.sequence {
            for (h, o) in offsets {
                if o.len() != s.phases.len() {
                    out.push(Finding::new(
                        DimensionMismatch,
                        &s.id,
                        format!("order {h} has {} offset(s) for {} phase(s)", o.len(), s.phases.len()),
                    ));
                }
            }
        }
    }

    if let Some(root) = m.bus_index(&sub.bus) {
        let w = walk(m, root);
        for k in &w.cycles {
            out.push(Finding::new(
                Cycle,
                &m.branches[*k].id,
                "branch closes a loop in the feeder graph",
            ));
        }
        for b in &w.unreached {
            out.push(Finding::new(
                Disconnected,
                &m.buses[*b].id,
                "bus is not reachable from the substation",
            ));
        }
        for k in &w.reversed {
            out.push(Finding::new(
                Orientation,
                &m.branches[*k].id,
                "`from` must be the end nearer the substation",
            ));
        }
        for (b, parent) in w.tree.parent.iter().enumerate() {
            if let Some(k) = parent {
                let bus = &m.buses[b];
                if !subset(&bus.phases, &m.branches[*k].phases) {
                    out.push(Finding::new(
                        PhaseMismatch,
                        &bus.id,
                        format!(
                            "phases {:?} are not all fed by branch \"{}\"",
                            bus.phases, m.branches[*k].id
                        ),
                    ));
                }
            }
        }
    }
    out
}
