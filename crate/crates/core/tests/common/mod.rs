#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use num_complex::Complex64 as C;
use serde_json::{json, Value};

use harmsim::{parse_network, Network64};

pub const SMALL_FIXTURES: [&str; 4] = ["feeder_2bus", "feeder_cancel", "feeder_coupled3", "feeder_stiff"];
pub const VALID_FIXTURES: [&str; 5] = [
    "feeder_2bus",
    "feeder_cancel",
    "feeder_coupled3",
    "feeder_stiff",
    "feeder_y13",
];

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(format!("{name}.json"))
}

pub fn fixture_json(name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(fixture_path(name)).unwrap()).unwrap()
}

pub fn fixture(name: &str) -> Network64 {
    harmsim::load_network(fixture_path(name)).unwrap()
}

pub fn model(v: &Value) -> Network64 {
    parse_network(&v.to_string()).unwrap()
}

pub fn rel_close(a: C, b: C, scale: f64, tol: f64) -> bool {
    (a - b).norm() <= tol * scale.max(f64::MIN_POSITIVE)
}

/// Single-phase (A) two-bus feeder with a 1 Ω impedance base
/// (3 MVA three-phase, 1000 V line-to-neutral).
pub fn unit_base_2bus(z_branch: [f64; 2], load: Option<(&str, [f64; 2])>, z_source: [f64; 2]) -> Value {
    let loads = match load {
        Some((model, s)) => json!([{
            "id": "ld", "bus": "b2", "phases": ["A"], "model": model,
            "power_va": [[s[0] * 1e6, s[1] * 1e6]]
        }]),
        None => json!([]),
    };
    json!({
        "base": {"frequency_hz": 60.0, "power_va": 3.0e6},
        "buses": [
            {"id": "sub", "phases": ["A"], "nominal_voltage": 1000.0},
            {"id": "b2", "phases": ["A"], "nominal_voltage": 1000.0}
        ],
        "branches": [{"id": "L1", "from": "sub", "to": "b2", "phases": ["A"], "z": [[z_branch]]}],
        "loads": loads,
        "sources": [],
        "substation": {
            "bus": "sub",
            "voltage": [{"magnitude": 1000.0, "angle_deg": 0.0}],
            "z": [[z_source]]
        }
    })
}

pub fn parse_phase(s: &Value) -> usize {
    match s.as_str().unwrap() {
        "A" => 0,
        "B" => 1,
        "C" => 2,
        other => panic!("phase {other}"),
    }
}

fn cpair(v: &Value) -> C {
    C::new(v[0].as_f64().unwrap(), v[1].as_f64().unwrap())
}

fn cmatrix(v: &Value) -> Vec<Vec<C>> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|row| row.as_array().unwrap().iter().map(cpair).collect())
        .collect()
}

fn real_matrix(v: &Value, n: usize) -> Vec<Vec<C>> {
    match v.as_array() {
        Some(rows) => rows
            .iter()
            .map(|row| {
                row.as_array()
                    .unwrap()
                    .iter()
                    .map(|b| C::new(0.0, b.as_f64().unwrap()))
                    .collect()
            })
            .collect(),
        None => vec![vec![C::new(0.0, 0.0); n]; n],
    }
}

/// Dense complex Gaussian elimination with partial pivoting.
pub fn solve_dense(a: &[Vec<C>], b: &[C]) -> Vec<C> {
    let n = b.len();
    let mut m: Vec<Vec<C>> = a
        .iter()
        .zip(b)
        .map(|(row, &bi)| {
            let mut r = row.clone();
            r.push(bi);
            r
        })
        .collect();
    for col in 0..n {
        let p = (col..n)
            .max_by(|&i, &j| m[i][col].norm().total_cmp(&m[j][col].norm()))
            .unwrap();
        m.swap(col, p);
        assert!(m[col][col].norm() > 0.0, "oracle: singular matrix");
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            if f == C::new(0.0, 0.0) {
                continue;
            }
            for c in col..=n {
                let d = m[col][c];
                m[r][c] -= f * d;
            }
        }
    }
    let mut x = vec![C::new(0.0, 0.0); n];
    for r in (0..n).rev() {
        let mut s = m[r][n];
        for c in r + 1..n {
            s -= m[r][c] * x[c];
        }
        x[r] = s / m[r][r];
    }
    x
}

pub fn invert(a: &[Vec<C>]) -> Vec<Vec<C>> {
    let n = a.len();
    let cols: Vec<Vec<C>> = (0..n)
        .map(|j| {
            let e: Vec<C> = (0..n).map(|i| C::new(if i == j { 1.0 } else { 0.0 }, 0.0)).collect();
            solve_dense(a, &e)
        })
        .collect();
    (0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect()
}

fn mat_vec(a: &[Vec<C>], x: &[C]) -> Vec<C> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

#[derive(Debug, Clone)]
pub struct OracleBranch {
    pub id: String,
    pub from: String,
    pub to: String,
    pub from_nodes: Vec<usize>,
    pub to_nodes: Vec<usize>,
    /// Ideal-transformer ratio from:to.
    pub a: f64,
    /// Series admittance at order 1, siemens, on the to side.
    pub z_to: Vec<Vec<C>>,
    /// Total shunt `j·B` referred to the to side.
    pub shunt_to: Vec<Vec<C>>,
}

#[derive(Debug, Clone)]
pub struct OracleLoad {
    pub nodes: Vec<usize>,
    pub model: String,
    pub s: Vec<C>,
}

/// SI network built straight from the file, without the library's
/// per-unit layer.
#[derive(Debug, Clone)]
pub struct Oracle {
    pub nodes: Vec<(String, usize)>,
    pub vnom: Vec<f64>,
    pub flat: Vec<C>,
    pub branches: Vec<OracleBranch>,
    pub loads: Vec<OracleLoad>,
    pub root_nodes: Vec<usize>,
    pub e_source: Vec<C>,
    pub z_source: Vec<Vec<C>>,
    pub injections: BTreeMap<u32, Vec<C>>,
}

impl Oracle {
    pub fn new(v: &Value) -> Self {
        let mut nodes = Vec::new();
        let mut vnom = Vec::new();
        let mut bus_v = BTreeMap::new();
        for bus in v["buses"].as_array().unwrap() {
            let id = bus["id"].as_str().unwrap().to_string();
            let vn = bus["nominal_voltage"].as_f64().unwrap();
            bus_v.insert(id.clone(), vn);
            for p in bus["phases"].as_array().unwrap() {
                nodes.push((id.clone(), parse_phase(p)));
                vnom.push(vn);
            }
        }
        let node = |bus: &str, p: usize| nodes.iter().position(|(b, q)| b == bus && *q == p).unwrap();

        let sub = &v["substation"];
        let root = sub["bus"].as_str().unwrap();
        let root_nodes: Vec<usize> = {
            let mut r: Vec<usize> = (0..nodes.len()).filter(|&k| nodes[k].0 == root).collect();
            r.sort_by_key(|&k| nodes[k].1);
            r
        };
        let e_source: Vec<C> = sub["voltage"]
            .as_array()
            .unwrap()
            .iter()
            .map(|p| {
                C::from_polar(
                    p["magnitude"].as_f64().unwrap(),
                    p["angle_deg"].as_f64().unwrap().to_radians(),
                )
            })
            .collect();
        let z_source = cmatrix(&sub["z"]);
        let angle_of = |p: usize| {
            root_nodes
                .iter()
                .position(|&k| nodes[k].1 == p)
                .map(|k| e_source[k].arg())
                .unwrap_or(-(p as f64) * 120f64.to_radians())
        };
        let flat = nodes
            .iter()
            .zip(&vnom)
            .map(|((_, p), &vn)| C::from_polar(vn, angle_of(*p)))
            .collect();

        let branches = v["branches"]
            .as_array()
            .unwrap()
            .iter()
            .map(|br| {
                let from = br["from"].as_str().unwrap().to_string();
                let to = br["to"].as_str().unwrap().to_string();
                let phases: Vec<usize> = br["phases"].as_array().unwrap().iter().map(parse_phase).collect();
                let (vf, vt) = (bus_v[&from], bus_v[&to]);
                let tap = br.get("tap").and_then(Value::as_f64).unwrap_or(1.0);
                let k2 = (vt / vf) * (vt / vf);
                let z = cmatrix(&br["z"]);
                let sh = real_matrix(&br["b_shunt"], phases.len());
                OracleBranch {
                    id: br["id"].as_str().unwrap().to_string(),
                    from_nodes: phases.iter().map(|&p| node(&from, p)).collect(),
                    to_nodes: phases.iter().map(|&p| node(&to, p)).collect(),
                    from,
                    to,
                    a: tap * vf / vt,
                    z_to: z.iter().map(|r| r.iter().map(|x| x * k2).collect()).collect(),
                    shunt_to: sh.iter().map(|r| r.iter().map(|x| x / k2).collect()).collect(),
                }
            })
            .collect();

        let loads = v["loads"]
            .as_array()
            .map(|a| a.as_slice())
            .unwrap_or(&[])
            .iter()
            .map(|l| {
                let bus = l["bus"].as_str().unwrap();
                OracleLoad {
                    nodes: l["phases"]
                        .as_array()
                        .unwrap()
                        .iter()
                        .map(|p| node(bus, parse_phase(p)))
                        .collect(),
                    model: l
                        .get("model")
                        .and_then(Value::as_str)
                        .unwrap_or("constant_power")
                        .to_string(),
                    s: l["power_va"].as_array().unwrap().iter().map(cpair).collect(),
                }
            })
            .collect();

        let mut injections: BTreeMap<u32, Vec<C>> = BTreeMap::new();
        for src in v["sources"].as_array().map(|a| a.as_slice()).unwrap_or(&[]) {
            let bus = src["bus"].as_str().unwrap();
            let base = src["fundamental_base_a"].as_f64().unwrap();
            let phases: Vec<usize> = src["phases"].as_array().unwrap().iter().map(parse_phase).collect();
            let explicit: BTreeMap<u64, Vec<f64>> = src
                .get("sequence")
                .and_then(Value::as_array)
                .map(|entries| {
                    entries
                        .iter()
                        .map(|e| {
                            (
                                e["order"].as_u64().unwrap(),
                                e["offsets_deg"]
                                    .as_array()
                                    .unwrap()
                                    .iter()
                                    .map(|x| x.as_f64().unwrap())
                                    .collect(),
                            )
                        })
                        .collect()
                })
                .unwrap_or_default();
            for c in src["spectrum"].as_array().unwrap() {
                let h = c["order"].as_u64().unwrap();
                let mag = c["magnitude_pct"].as_f64().unwrap() / 100.0 * base;
                let ang = c.get("angle_deg").and_then(Value::as_f64).unwrap_or(0.0);
                let inj = injections
                    .entry(h as u32)
                    .or_insert_with(|| vec![C::new(0.0, 0.0); nodes.len()]);
                for (k, &p) in phases.iter().enumerate() {
                    let deg = match explicit.get(&h) {
                        Some(off) => ang + off[k],
                        None => ang - ((h * 120 * p as u64) % 360) as f64,
                    };
                    inj[node(bus, p)] += C::from_polar(mag, deg.to_radians());
                }
            }
        }

        Self {
            nodes,
            vnom,
            flat,
            branches,
            loads,
            root_nodes,
            e_source,
            z_source,
            injections,
        }
    }

    fn scale_z(z: &[Vec<C>], h: f64) -> Vec<Vec<C>> {
        z.iter()
            .map(|r| r.iter().map(|x| C::new(x.re, h * x.im)).collect())
            .collect()
    }

    /// Network `Y(h)` in siemens without loads; source as a Norton shunt.
    pub fn y_network(&self, h: f64) -> Vec<Vec<C>> {
        let n = self.nodes.len();
        let mut y = vec![vec![C::new(0.0, 0.0); n]; n];
        for br in &self.branches {
            let ys = invert(&Self::scale_z(&br.z_to, h));
            let nb = br.from_nodes.len();
            for i in 0..nb {
                for j in 0..nb {
                    let s = ys[i][j];
                    let sh = br.shunt_to[i][j] * h * 0.5;
                    let (fi, fj, ti, tj) = (br.from_nodes[i], br.from_nodes[j], br.to_nodes[i], br.to_nodes[j]);
                    y[fi][fj] += (s + sh) / (br.a * br.a);
                    y[fi][tj] -= s / br.a;
                    y[ti][fj] -= s / br.a;
                    y[ti][tj] += s + sh;
                }
            }
        }
        let ysrc = invert(&Self::scale_z(&self.z_source, h));
        for (i, &ni) in self.root_nodes.iter().enumerate() {
            for (j, &nj) in self.root_nodes.iter().enumerate() {
                y[ni][nj] += ysrc[i][j];
            }
        }
        y
    }

    pub fn source_admittance(&self, h: f64) -> Vec<Vec<C>> {
        invert(&Self::scale_z(&self.z_source, h))
    }

    /// Fundamental node voltages in volts by fixed-point iteration on the
    /// full nodal equations.
    pub fn fundamental(&self) -> Vec<C> {
        let y = self.y_network(1.0);
        let n = self.nodes.len();
        let ysrc = self.source_admittance(1.0);
        let norton = mat_vec(&ysrc, &self.e_source);
        let mut v = self.flat.clone();
        for _ in 0..500 {
            let mut rhs = vec![C::new(0.0, 0.0); n];
            for (&k, &i) in self.root_nodes.iter().zip(&norton) {
                rhs[k] += i;
            }
            for l in &self.loads {
                for (&k, &s) in l.nodes.iter().zip(&l.s) {
                    rhs[k] -= match l.model.as_str() {
                        "constant_power" => (s / v[k]).conj(),
                        "constant_current" => (s / self.flat[k]).conj(),
                        "constant_impedance" => s.conj() / (self.vnom[k] * self.vnom[k]) * v[k],
                        other => panic!("load model {other}"),
                    };
                }
            }
            let next = solve_dense(&y, &rhs);
            let change = next
                .iter()
                .zip(&v)
                .zip(&self.vnom)
                .map(|((a, b), vn)| (a - b).norm() / vn)
                .fold(0.0, f64::max);
            v = next;
            if change < 1e-14 {
                return v;
            }
        }
        panic!("oracle fixed point did not settle");
    }

    /// Load admittances (siemens) at harmonic orders, per load and phase.
    pub fn load_admittances(&self, v1: &[C]) -> Vec<Vec<C>> {
        self.loads
            .iter()
            .map(|l| {
                l.nodes
                    .iter()
                    .zip(&l.s)
                    .map(|(&k, s)| s.conj() / v1[k].norm_sqr())
                    .collect()
            })
            .collect()
    }

    /// Harmonic node voltages in volts for order `h`.
    pub fn harmonic(&self, v1: &[C], h: u32) -> Vec<C> {
        let mut y = self.y_network(h as f64);
        for (l, ys) in self.loads.iter().zip(self.load_admittances(v1)) {
            for (&k, yl) in l.nodes.iter().zip(ys) {
                y[k][k] += yl;
            }
        }
        let rhs = self
            .injections
            .get(&h)
            .cloned()
            .unwrap_or_else(|| vec![C::new(0.0, 0.0); self.nodes.len()]);
        solve_dense(&y, &rhs)
    }

    pub fn node(&self, bus: &str, phase: usize) -> usize {
        self.nodes.iter().position(|(b, p)| b == bus && *p == phase).unwrap()
    }
}

pub fn phase_index(p: harmsim::PhaseId) -> usize {
    p.index()
}
