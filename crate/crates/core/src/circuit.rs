//! Flat circuit description: named nodes, element instances and options.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::device::{FinFetParams, PtmParams, PtmState};
use crate::error::{Error, Result};

/// Name of the ground node.
pub const GROUND: &str = "0";

/// Time profile of an independent source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Waveform {
    Dc(f64),
    /// Piecewise-linear `(time, value)` corners with non-decreasing times.
    /// The value is held constant before the first and after the last corner.
    Pwl(Vec<(f64, f64)>),
}

impl Waveform {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Waveform::Dc(v) => *v,
            Waveform::Pwl(points) => pwl_value(points, t),
        }
    }

    /// Corner times strictly after `t`, in order.
    pub fn breakpoints_after(&self, t: f64) -> impl Iterator<Item = f64> + '_ {
        let points: &[(f64, f64)] = match self {
            Waveform::Dc(_) => &[],
            Waveform::Pwl(p) => p,
        };
        points.iter().map(|p| p.0).filter(move |&bp| bp > t)
    }

    pub fn initial_value(&self) -> f64 {
        self.value(0.0)
    }
}

fn pwl_value(points: &[(f64, f64)], t: f64) -> f64 {
    match points {
        [] => 0.0,
        [(_, v)] => *v,
        _ => {
            if t <= points[0].0 {
                return points[0].1;
            }
            for w in points.windows(2) {
                let ((t0, v0), (t1, v1)) = (w[0], w[1]);
                if t <= t1 {
                    if t1 <= t0 {
                        return v1;
                    }
                    return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
                }
            }
            points[points.len() - 1].1
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ElementKind {
    Resistor {
        ohms: f64,
    },
    Capacitor {
        farads: f64,
    },
    /// Voltage `V(n+) − V(n−)`.
    VoltageSource {
        wave: Waveform,
    },
    /// Current flowing from `n+` through the source to `n−`.
    CurrentSource {
        wave: Waveform,
    },
    /// Terminals are drain, gate, source.
    FinFet {
        params: FinFetParams,
    },
    Ptm {
        params: PtmParams,
        initial_state: PtmState,
    },
}

impl ElementKind {
    /// The netlist card letter.
    pub fn card(&self) -> char {
        match self {
            ElementKind::Resistor { .. } => 'R',
            ElementKind::Capacitor { .. } => 'C',
            ElementKind::VoltageSource { .. } => 'V',
            ElementKind::CurrentSource { .. } => 'I',
            ElementKind::FinFet { .. } => 'M',
            ElementKind::Ptm { .. } => 'P',
        }
    }

    fn terminal_count(&self) -> usize {
        match self {
            ElementKind::FinFet { .. } => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Element {
    /// Instance name, beginning with the card letter.
    pub name: String,
    pub nodes: Vec<String>,
    pub kind: ElementKind,
}

impl Element {
    fn two(name: &str, a: &str, b: &str, kind: ElementKind) -> Self {
        Self { name: name.to_string(), nodes: vec![a.to_string(), b.to_string()], kind }
    }

    pub fn resistor(name: &str, a: &str, b: &str, ohms: f64) -> Self {
        Self::two(name, a, b, ElementKind::Resistor { ohms })
    }

    pub fn capacitor(name: &str, a: &str, b: &str, farads: f64) -> Self {
        Self::two(name, a, b, ElementKind::Capacitor { farads })
    }

    pub fn vsource(name: &str, p: &str, n: &str, wave: Waveform) -> Self {
        Self::two(name, p, n, ElementKind::VoltageSource { wave })
    }

    pub fn isource(name: &str, p: &str, n: &str, wave: Waveform) -> Self {
        Self::two(name, p, n, ElementKind::CurrentSource { wave })
    }

    pub fn finfet(name: &str, d: &str, g: &str, s: &str, params: FinFetParams) -> Self {
        Self {
            name: name.to_string(),
            nodes: vec![d.to_string(), g.to_string(), s.to_string()],
            kind: ElementKind::FinFet { params },
        }
    }

    pub fn ptm(name: &str, a: &str, b: &str, params: PtmParams) -> Self {
        Self::two(name, a, b, ElementKind::Ptm { params, initial_state: PtmState::Insulating })
    }

    /// Device label without the card prefix for transistors (`MP1` → `P1`).
    pub fn label(&self) -> &str {
        match self.kind {
            ElementKind::FinFet { .. } => self.name.get(1..).unwrap_or(""),
            _ => &self.name,
        }
    }

    pub fn is_source(&self) -> bool {
        matches!(self.kind, ElementKind::VoltageSource { .. } | ElementKind::CurrentSource { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegrationMethod {
    #[default]
    BackwardEuler,
    Trapezoidal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub abstol_current: f64,
    pub reltol: f64,
    pub vntol: f64,
    pub max_newton_iters: usize,
    pub max_state_resolution_iters: usize,
    pub dt_initial: f64,
    pub dt_min: f64,
    /// Upper bound on the adaptive step. Setting it to `dt_initial` gives a
    /// fixed-step integration.
    pub dt_max: f64,
    /// Largest node-voltage change accepted in one adaptive step.
    pub max_step_dv: f64,
    /// Shunt conductance from every node to ground.
    pub gmin: f64,
    pub integration_method: IntegrationMethod,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            abstol_current: 1e-12,
            reltol: 1e-6,
            vntol: 1e-9,
            max_newton_iters: 100,
            max_state_resolution_iters: 10,
            dt_initial: 0.1e-12,
            dt_min: 1e-15,
            dt_max: 5e-12,
            max_step_dv: 0.05,
            gmin: 1e-12,
            integration_method: IntegrationMethod::BackwardEuler,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let positive =
            [self.abstol_current, self.reltol, self.vntol, self.dt_initial, self.dt_min, self.dt_max, self.max_step_dv];
        if positive.iter().any(|v| !(*v > 0.0)) || !(self.gmin >= 0.0) {
            return Err(Error::InvalidParams("solver tolerances must be positive".into()));
        }
        if self.dt_min > self.dt_initial {
            return Err(Error::InvalidParams("dt_min must not exceed dt_initial".into()));
        }
        if self.max_newton_iters == 0 || self.max_state_resolution_iters == 0 {
            return Err(Error::InvalidParams("iteration budgets must be non-zero".into()));
        }
        Ok(())
    }

    pub fn fixed_step(mut self, dt: f64) -> Self {
        self.dt_initial = dt;
        self.dt_max = dt;
        self.dt_min = self.dt_min.min(dt);
        self.max_step_dv = f64::INFINITY;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub elements: Vec<Element>,
    /// Global supply rail value.
    pub vdd: f64,
    pub options: SolverOptions,
    /// Initial DC guesses by node name.
    pub nodeset: BTreeMap<String, f64>,
}

pub const DEFAULT_VDD: f64 = 0.8;

impl Default for Circuit {
    fn default() -> Self {
        Self::new(DEFAULT_VDD)
    }
}

impl Circuit {
    pub fn new(vdd: f64) -> Self {
        Self { elements: Vec::new(), vdd, options: SolverOptions::default(), nodeset: BTreeMap::new() }
    }

    pub fn add(&mut self, element: Element) -> &mut Self {
        self.elements.push(element);
        self
    }

    pub fn with(mut self, element: Element) -> Self {
        self.elements.push(element);
        self
    }

    pub fn element(&self, name: &str) -> Option<&Element> {
        self.elements.iter().find(|e| e.name.eq_ignore_ascii_case(name))
    }

    pub fn element_mut(&mut self, name: &str) -> Option<&mut Element> {
        self.elements.iter_mut().find(|e| e.name.eq_ignore_ascii_case(name))
    }

    /// Non-ground node names in order of first appearance.
    pub fn node_names(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for n in self.elements.iter().flat_map(|e| e.nodes.iter()) {
            if n != GROUND && seen.insert(n.as_str()) {
                out.push(n.clone());
            }
        }
        out
    }

    /// Elements sorted by name, the canonical order used for printing and
    /// structural comparison.
    pub fn sorted_elements(&self) -> Vec<&Element> {
        let mut v: Vec<&Element> = self.elements.iter().collect();
        v.sort_by(|a, b| a.name.cmp(&b.name));
        v
    }

    /// Element-by-element equality independent of declaration order.
    pub fn structurally_eq(&self, other: &Circuit) -> bool {
        self.vdd == other.vdd
            && self.options == other.options
            && self.nodeset == other.nodeset
            && self.sorted_elements() == other.sorted_elements()
    }

    /// Checks the structural invariants without building solver tables.
    pub fn validate(&self) -> Result<()> {
        if !(self.vdd > 0.0) {
            return Err(Error::InvalidCircuit(format!("V_DD must be positive, got {}", self.vdd)));
        }
        self.options.validate()?;
        let mut names = HashSet::new();
        for e in &self.elements {
            if !names.insert(e.name.to_ascii_lowercase()) {
                return Err(Error::DuplicateName(e.name.clone()));
            }
            if e.nodes.len() != e.kind.terminal_count() {
                return Err(Error::InvalidCircuit(format!("element '{}' has wrong terminal count", e.name)));
            }
            if e.nodes.iter().any(|n| n.is_empty()) {
                return Err(Error::InvalidCircuit(format!("element '{}' has an empty node name", e.name)));
            }
            match &e.kind {
                ElementKind::Resistor { ohms } if !(*ohms > 0.0) => {
                    return Err(Error::InvalidCircuit(format!("resistor '{}' must be positive", e.name)))
                }
                ElementKind::Capacitor { farads } if !(*farads >= 0.0) => {
                    return Err(Error::InvalidCircuit(format!("capacitor '{}' must be non-negative", e.name)))
                }
                ElementKind::FinFet { params } => params.validate()?,
                ElementKind::Ptm { params, .. } => params.validate()?,
                ElementKind::VoltageSource { wave } | ElementKind::CurrentSource { wave } => {
                    if let Waveform::Pwl(p) = wave {
                        if p.is_empty() || p.windows(2).any(|w| w[1].0 < w[0].0) {
                            return Err(Error::InvalidCircuit(format!(
                                "source '{}' needs non-decreasing PWL times",
                                e.name
                            )));
                        }
                    }
                }
                _ => {}
            }
        }
        if !self.elements.is_empty() && !self.elements.iter().any(|e| e.nodes.iter().any(|n| n == GROUND)) {
            return Err(Error::InvalidCircuit("no element connects to ground node '0'".into()));
        }
        let known: HashSet<&str> = self.elements.iter().flat_map(|e| e.nodes.iter().map(|s| s.as_str())).collect();
        if let Some(n) = self.nodeset.keys().find(|n| !known.contains(n.as_str())) {
            return Err(Error::UnknownNode(n.clone()));
        }
        Ok(())
    }

    /// Validates the circuit and builds the index tables the solver uses.
    pub fn elaborate(&self) -> Result<Elaborated> {
        Elaborated::new(self)
    }
}

/// Terminal index, `None` for ground.
pub type NodeIx = Option<usize>;

#[derive(Debug, Clone)]
pub(crate) enum Stamp {
    Conductance { a: NodeIx, b: NodeIx, g: f64 },
    Capacitor { a: NodeIx, b: NodeIx, c: f64, slot: usize },
    VSource { p: NodeIx, n: NodeIx, branch: usize },
    ISource { p: NodeIx, n: NodeIx },
    FinFet { d: NodeIx, g: NodeIx, s: NodeIx, params: FinFetParams },
    Ptm { a: NodeIx, b: NodeIx, params: PtmParams, slot: usize },
}

/// A validated circuit with node and branch indices resolved.
#[derive(Debug, Clone)]
pub struct Elaborated {
    pub(crate) circuit: Circuit,
    pub(crate) node_names: Vec<String>,
    pub(crate) node_index: HashMap<String, usize>,
    pub(crate) stamps: Vec<Stamp>,
    /// Element index for every voltage-source branch.
    pub(crate) vsource_elements: Vec<usize>,
    pub(crate) ptm_elements: Vec<usize>,
    pub(crate) capacitor_count: usize,
}

impl Elaborated {
    fn new(circuit: &Circuit) -> Result<Self> {
        circuit.validate()?;
        let node_names = circuit.node_names();
        let node_index: HashMap<String, usize> = node_names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        let ix = |n: &str| -> NodeIx { node_index.get(n).copied() };

        let mut stamps = Vec::with_capacity(circuit.elements.len());
        let mut vsource_elements = Vec::new();
        let mut ptm_elements = Vec::new();
        let mut capacitor_count = 0;
        for (k, e) in circuit.elements.iter().enumerate() {
            let a = ix(&e.nodes[0]);
            let b = ix(&e.nodes[1]);
            let stamp = match &e.kind {
                ElementKind::Resistor { ohms } => Stamp::Conductance { a, b, g: 1.0 / ohms },
                ElementKind::Capacitor { farads } => {
                    capacitor_count += 1;
                    Stamp::Capacitor { a, b, c: *farads, slot: capacitor_count - 1 }
                }
                ElementKind::VoltageSource { .. } => {
                    vsource_elements.push(k);
                    Stamp::VSource { p: a, n: b, branch: vsource_elements.len() - 1 }
                }
                ElementKind::CurrentSource { .. } => Stamp::ISource { p: a, n: b },
                ElementKind::FinFet { params } => Stamp::FinFet { d: a, g: b, s: ix(&e.nodes[2]), params: *params },
                ElementKind::Ptm { params, .. } => {
                    ptm_elements.push(k);
                    Stamp::Ptm { a, b, params: *params, slot: ptm_elements.len() - 1 }
                }
            };
            stamps.push(stamp);
        }
        let elab = Self {
            circuit: circuit.clone(),
            node_names,
            node_index,
            stamps,
            vsource_elements,
            ptm_elements,
            capacitor_count,
        };
        elab.check_dc_paths()?;
        Ok(elab)
    }

    /// Every node needs a conducting path to ground or a capacitor.
    fn check_dc_paths(&self) -> Result<()> {
        let n = self.node_names.len();
        // Union-find with ground as index n.
        let mut parent: Vec<usize> = (0..=n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let key = |x: NodeIx| x.unwrap_or(n);
        let mut has_cap = vec![false; n];
        for s in &self.stamps {
            let (a, b) = match *s {
                Stamp::Conductance { a, b, .. } | Stamp::VSource { p: a, n: b, .. } | Stamp::Ptm { a, b, .. } => (a, b),
                Stamp::FinFet { d, s, .. } => (d, s),
                Stamp::Capacitor { a, b, .. } => {
                    for x in [a, b].into_iter().flatten() {
                        has_cap[x] = true;
                    }
                    continue;
                }
                Stamp::ISource { .. } => continue,
            };
            let (ra, rb) = (find(&mut parent, key(a)), find(&mut parent, key(b)));
            parent[ra] = rb;
        }
        let ground = find(&mut parent, n);
        for (i, &cap) in has_cap.iter().enumerate().take(n) {
            if !cap && find(&mut parent, i) != ground {
                return Err(Error::SingularStructure(self.node_names[i].clone()));
            }
        }
        Ok(())
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn node_names(&self) -> &[String] {
        &self.node_names
    }

    pub fn node(&self, name: &str) -> Option<usize> {
        self.node_index.get(name).copied()
    }

    pub fn node_count(&self) -> usize {
        self.node_names.len()
    }

    pub fn vsource_count(&self) -> usize {
        self.vsource_elements.len()
    }

    /// Size of the MNA system: one row per node plus one per voltage source.
    pub fn dimension(&self) -> usize {
        self.node_count() + self.vsource_count()
    }

    pub fn ptm_count(&self) -> usize {
        self.ptm_elements.len()
    }

    pub fn ptm_names(&self) -> impl Iterator<Item = &str> {
        self.ptm_elements.iter().map(|&k| self.circuit.elements[k].name.as_str())
    }

    pub fn vsource_names(&self) -> impl Iterator<Item = &str> {
        self.vsource_elements.iter().map(|&k| self.circuit.elements[k].name.as_str())
    }

    /// Branch index of the named voltage source.
    pub fn vsource_branch(&self, name: &str) -> Option<usize> {
        self.vsource_elements.iter().position(|&k| self.circuit.elements[k].name.eq_ignore_ascii_case(name))
    }

    pub fn ptm_slot(&self, name: &str) -> Option<usize> {
        self.ptm_elements.iter().position(|&k| self.circuit.elements[k].name.eq_ignore_ascii_case(name))
    }

    /// PWL corner times of all sources after `t`, sorted and deduplicated.
    pub fn breakpoints_after(&self, t: f64) -> Vec<f64> {
        let mut bps: Vec<f64> = self
            .circuit
            .elements
            .iter()
            .filter_map(|e| match &e.kind {
                ElementKind::VoltageSource { wave } | ElementKind::CurrentSource { wave } => Some(wave),
                _ => None,
            })
            .flat_map(|w| w.breakpoints_after(t))
            .collect();
        bps.sort_by(f64::total_cmp);
        bps.dedup();
        bps
    }
}
