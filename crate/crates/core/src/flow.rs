//! Flow networks with edge and node capacities and several sources and sinks.
//!
//! Integral maximum flows are computed with shortest augmenting paths on the
//! network obtained by splitting every finitely capacitated node `v` into an
//! edge `v_in -> v_out`. Flows over exact rationals are supported for
//! validation and for cancelling flow through a chosen edge.

use std::collections::VecDeque;
use std::fmt::Debug;
use std::ops::{Add, Sub};

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Capacity {
    Finite(u64),
    Unbounded,
}

impl Capacity {
    pub fn finite(self) -> Option<u64> {
        match self {
            Capacity::Finite(c) => Some(c),
            Capacity::Unbounded => None,
        }
    }

    pub fn admits<T: FlowValue>(self, x: &T) -> bool {
        match self {
            Capacity::Finite(c) => *x <= T::from_u64(c),
            Capacity::Unbounded => true,
        }
    }
}

impl Serialize for Capacity {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Capacity::Finite(c) => s.serialize_u64(*c),
            Capacity::Unbounded => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Capacity {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::String(s) if s == "inf" => Ok(Capacity::Unbounded),
            serde_json::Value::Number(n) => {
                n.as_u64().map(Capacity::Finite).ok_or_else(|| serde::de::Error::custom("capacity must be a u64"))
            }
            other => Err(serde::de::Error::custom(format!("bad capacity {other}"))),
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum FlowError {
    #[error("node {0} out of range")]
    NodeOutOfRange(usize),
    #[error("edge {0} out of range")]
    EdgeOutOfRange(usize),
    #[error("source {0} has an incoming edge")]
    SourceWithInEdge(usize),
    #[error("sink {0} has an outgoing edge")]
    SinkWithOutEdge(usize),
    #[error("node {0} is both a source and a sink")]
    SourceIsSink(usize),
    #[error("flow has {found} values for {expected} edges")]
    WrongLength { expected: usize, found: usize },
    #[error("edge {0} carries negative flow")]
    Negative(usize),
    #[error("edge {0} exceeds its capacity")]
    EdgeOverCapacity(usize),
    #[error("node {0} exceeds its capacity")]
    NodeOverCapacity(usize),
    #[error("flow is not conserved at node {0}")]
    NotConserved(usize),
}

/// Numeric type a flow may take values in.
pub trait FlowValue: Clone + Ord + Debug + Zero + Add<Output = Self> + Sub<Output = Self> {
    fn from_u64(c: u64) -> Self;
}

impl FlowValue for i64 {
    fn from_u64(c: u64) -> Self {
        c as i64
    }
}

impl FlowValue for Rational {
    fn from_u64(c: u64) -> Self {
        Rational::from_integer(c as i128)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowEdge {
    pub from: usize,
    pub to: usize,
    pub cap: Capacity,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowNetwork {
    pub labels: Vec<String>,
    pub node_caps: Vec<Capacity>,
    pub edges: Vec<FlowEdge>,
    pub sources: Vec<usize>,
    pub sinks: Vec<usize>,
}

impl FlowNetwork {
    pub fn new() -> Self {
        FlowNetwork::default()
    }

    pub fn add_node(&mut self, label: impl Into<String>, cap: Capacity) -> usize {
        self.labels.push(label.into());
        self.node_caps.push(cap);
        self.labels.len() - 1
    }

    pub fn add_edge(&mut self, from: usize, to: usize, cap: Capacity) -> usize {
        self.edges.push(FlowEdge { from, to, cap });
        self.edges.len() - 1
    }

    pub fn node_count(&self) -> usize {
        self.node_caps.len()
    }

    /// Structural checks: ids in range, sources without in-edges, sinks
    /// without out-edges, disjoint terminal sets.
    pub fn check(&self) -> Result<(), FlowError> {
        let n = self.node_count();
        let mut is_source = vec![false; n];
        let mut is_sink = vec![false; n];
        for &s in &self.sources {
            *is_source.get_mut(s).ok_or(FlowError::NodeOutOfRange(s))? = true;
        }
        for &t in &self.sinks {
            *is_sink.get_mut(t).ok_or(FlowError::NodeOutOfRange(t))? = true;
            if is_source[t] {
                return Err(FlowError::SourceIsSink(t));
            }
        }
        for e in &self.edges {
            if e.from >= n || e.to >= n {
                return Err(FlowError::NodeOutOfRange(e.from.max(e.to)));
            }
            if is_source[e.to] {
                return Err(FlowError::SourceWithInEdge(e.to));
            }
            if is_sink[e.from] {
                return Err(FlowError::SinkWithOutEdge(e.from));
            }
        }
        Ok(())
    }

    /// Stand-in for an unbounded capacity: one more than all finite
    /// capacities together, so no flow can reach it.
    pub fn unbounded_value(&self) -> u64 {
        let edges: u64 = self.edges.iter().filter_map(|e| e.cap.finite()).sum();
        let nodes: u64 = self.node_caps.iter().filter_map(|c| c.finite()).sum();
        edges + nodes + 1
    }

    /// Replaces each finitely capacitated node by an edge carrying its
    /// capacity. Node `v` keeps id `v` for its in-copy; new out-copies are
    /// appended. Sinks become their out-copies.
    pub fn split_vertex_capacities(&self) -> SplitNetwork {
        let mut net = FlowNetwork::new();
        for l in &self.labels {
            net.add_node(l.clone(), Capacity::Unbounded);
        }
        let mut out_copy: Vec<usize> = (0..self.node_count()).collect();
        let mut node_edge = vec![None; self.node_count()];
        for (v, cap) in self.node_caps.iter().enumerate() {
            if let Capacity::Finite(_) = cap {
                let o = net.add_node(format!("{}+", self.labels[v]), Capacity::Unbounded);
                out_copy[v] = o;
                node_edge[v] = Some(net.add_edge(v, o, *cap));
            }
        }
        let edge_map =
            self.edges.iter().map(|e| net.add_edge(out_copy[e.from], e.to, e.cap)).collect();
        net.sources = self.sources.clone();
        net.sinks = self.sinks.iter().map(|&t| out_copy[t]).collect();
        SplitNetwork { network: net, out_copy, node_edge, edge_map }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitNetwork {
    pub network: FlowNetwork,
    pub out_copy: Vec<usize>,
    pub node_edge: Vec<Option<usize>>,
    pub edge_map: Vec<usize>,
}

/// Flow value on each edge of a network.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flow<T> {
    pub values: Vec<T>,
}

impl<T: FlowValue> Flow<T> {
    pub fn zero(net: &FlowNetwork) -> Self {
        Flow { values: vec![T::zero(); net.edges.len()] }
    }

    /// Net flow leaving the sources.
    pub fn value(&self, net: &FlowNetwork) -> T {
        let mut is_source = vec![false; net.node_count()];
        for &s in &net.sources {
            is_source[s] = true;
        }
        let mut total = T::zero();
        for (e, x) in net.edges.iter().zip(&self.values) {
            if is_source[e.from] {
                total = total + x.clone();
            }
            if is_source[e.to] {
                total = total - x.clone();
            }
        }
        total
    }

    /// Inflow and outflow of every node.
    pub fn node_balance(&self, net: &FlowNetwork) -> Vec<(T, T)> {
        let mut b = vec![(T::zero(), T::zero()); net.node_count()];
        for (e, x) in net.edges.iter().zip(&self.values) {
            b[e.to].0 = b[e.to].0.clone() + x.clone();
            b[e.from].1 = b[e.from].1.clone() + x.clone();
        }
        b
    }

    pub fn validate(&self, net: &FlowNetwork) -> Result<(), FlowError> {
        net.check()?;
        if self.values.len() != net.edges.len() {
            return Err(FlowError::WrongLength { expected: net.edges.len(), found: self.values.len() });
        }
        for (i, (e, x)) in net.edges.iter().zip(&self.values).enumerate() {
            if *x < T::zero() {
                return Err(FlowError::Negative(i));
            }
            if !e.cap.admits(x) {
                return Err(FlowError::EdgeOverCapacity(i));
            }
        }
        let mut terminal = vec![false; net.node_count()];
        for &v in net.sources.iter().chain(&net.sinks) {
            terminal[v] = true;
        }
        for (v, (inflow, outflow)) in self.node_balance(net).into_iter().enumerate() {
            if !terminal[v] && inflow != outflow {
                return Err(FlowError::NotConserved(v));
            }
            let through = if inflow > outflow { inflow } else { outflow };
            if !net.node_caps[v].admits(&through) {
                return Err(FlowError::NodeOverCapacity(v));
            }
        }
        Ok(())
    }
}

/// A source-side set of the split network and the total capacity of the
/// edges leaving it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cut {
    pub source_side: Vec<usize>,
    pub cut_edges: Vec<usize>,
    pub capacity: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaxFlow {
    pub value: u64,
    /// Flow on the edges of the input network.
    pub flow: Flow<i64>,
    /// Minimum cut, expressed on `split.network`.
    pub cut: Cut,
    pub split: SplitNetwork,
}

struct Residual {
    to: Vec<usize>,
    cap: Vec<u64>,
    adj: Vec<Vec<usize>>,
}

impl Residual {
    fn new(n: usize) -> Self {
        Residual { to: Vec::new(), cap: Vec::new(), adj: vec![Vec::new(); n] }
    }

    /// Adds an arc and its reverse; returns the forward arc id.
    fn arc(&mut self, u: usize, v: usize, c: u64) -> usize {
        let id = self.to.len();
        self.to.push(v);
        self.cap.push(c);
        self.adj[u].push(id);
        self.to.push(u);
        self.cap.push(0);
        self.adj[v].push(id + 1);
        id
    }
}

/// Maximum integral flow with breadth-first augmenting paths. Neighbours are
/// scanned in increasing node id, so results are deterministic.
pub fn max_flow_integer(net: &FlowNetwork) -> Result<MaxFlow, FlowError> {
    net.check()?;
    let split = net.split_vertex_capacities();
    let sn = &split.network;
    let inf = sn.unbounded_value().max(net.unbounded_value());
    let n = sn.node_count();
    let (s, t) = (n, n + 1);
    let mut r = Residual::new(n + 2);
    let arcs: Vec<usize> = sn
        .edges
        .iter()
        .map(|e| r.arc(e.from, e.to, e.cap.finite().unwrap_or(inf)))
        .collect();
    for &src in &sn.sources {
        r.arc(s, src, inf);
    }
    for &snk in &sn.sinks {
        r.arc(snk, t, inf);
    }
    for v in 0..n + 2 {
        let to = &r.to;
        r.adj[v].sort_by_key(|&a| (to[a], a));
    }
    let mut value = 0u64;
    loop {
        let mut pred = vec![usize::MAX; n + 2];
        let mut seen = vec![false; n + 2];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            if u == t {
                break;
            }
            for &a in &r.adj[u] {
                let v = r.to[a];
                if !seen[v] && r.cap[a] > 0 {
                    seen[v] = true;
                    pred[v] = a;
                    queue.push_back(v);
                }
            }
        }
        if !seen[t] {
            let side: Vec<usize> = (0..n).filter(|&v| seen[v]).collect();
            let mut cut_edges = Vec::new();
            let mut capacity = 0u64;
            for (i, e) in sn.edges.iter().enumerate() {
                if seen[e.from] && !seen[e.to] {
                    cut_edges.push(i);
                    capacity += e.cap.finite().unwrap_or(inf);
                }
            }
            let split_flow: Vec<i64> = arcs.iter().map(|&a| r.cap[a + 1] as i64).collect();
            let flow = Flow { values: split.edge_map.iter().map(|&e| split_flow[e]).collect() };
            return Ok(MaxFlow { value, flow, cut: Cut { source_side: side, cut_edges, capacity }, split });
        }
        let mut push = u64::MAX;
        let mut v = t;
        while v != s {
            let a = pred[v];
            push = push.min(r.cap[a]);
            v = r.to[a ^ 1];
        }
        let mut v = t;
        while v != s {
            let a = pred[v];
            r.cap[a] -= push;
            r.cap[a ^ 1] += push;
            v = r.to[a ^ 1];
        }
        value += push;
    }
}

/// Returns a flow with zero on edge `e` whose value is at least
/// `value(f) - f(e)`. Positive-flow cycles are cancelled first (keeping the
/// value), then flow is removed along source-to-sink paths through `e`.
pub fn reduce_edge_to_zero<T: FlowValue>(net: &FlowNetwork, f: &Flow<T>, e: usize) -> Result<Flow<T>, FlowError> {
    f.validate(net)?;
    if e >= net.edges.len() {
        return Err(FlowError::EdgeOutOfRange(e));
    }
    let mut f = f.clone();
    if f.values[e] == T::zero() {
        return Ok(f);
    }
    cancel_cycles(net, &mut f);
    let n = net.node_count();
    let mut out_edges = vec![Vec::new(); n];
    let mut in_edges = vec![Vec::new(); n];
    for (i, ed) in net.edges.iter().enumerate() {
        out_edges[ed.from].push(i);
        in_edges[ed.to].push(i);
    }
    let mut is_source = vec![false; n];
    let mut is_sink = vec![false; n];
    net.sources.iter().for_each(|&v| is_source[v] = true);
    net.sinks.iter().for_each(|&v| is_sink[v] = true);
    while f.values[e] > T::zero() {
        let mut path = vec![e];
        let mut v = net.edges[e].from;
        while !is_source[v] {
            let Some(&a) = in_edges[v].iter().find(|&&a| f.values[a] > T::zero()) else { break };
            path.push(a);
            v = net.edges[a].from;
        }
        let mut v = net.edges[e].to;
        while !is_sink[v] {
            let Some(&a) = out_edges[v].iter().find(|&&a| f.values[a] > T::zero()) else { break };
            path.push(a);
            v = net.edges[a].to;
        }
        let amount = path.iter().map(|&a| f.values[a].clone()).min().unwrap();
        for &a in &path {
            f.values[a] = f.values[a].clone() - amount.clone();
        }
    }
    Ok(f)
}

/// Removes every directed cycle of positive-flow edges.
fn cancel_cycles<T: FlowValue>(net: &FlowNetwork, f: &mut Flow<T>) {
    let n = net.node_count();
    let mut out_edges = vec![Vec::new(); n];
    for (i, ed) in net.edges.iter().enumerate() {
        out_edges[ed.from].push(i);
    }
    while let Some(cycle) = find_positive_cycle(net, &out_edges, f) {
        let amount = cycle.iter().map(|&a| f.values[a].clone()).min().unwrap();
        for &a in &cycle {
            f.values[a] = f.values[a].clone() - amount.clone();
        }
    }
}

fn find_positive_cycle<T: FlowValue>(net: &FlowNetwork, out_edges: &[Vec<usize>], f: &Flow<T>) -> Option<Vec<usize>> {
    let n = net.node_count();
    // 0 unvisited, 1 on stack, 2 done
    let mut state = vec![0u8; n];
    let mut via = vec![usize::MAX; n];
    for s in 0..n {
        if state[s] != 0 {
            continue;
        }
        let mut stack = vec![(s, 0usize)];
        state[s] = 1;
        while let Some(&mut (v, ref mut i)) = stack.last_mut() {
            if let Some(&a) = out_edges[v].get(*i) {
                *i += 1;
                if f.values[a] <= T::zero() {
                    continue;
                }
                let w = net.edges[a].to;
                match state[w] {
                    0 => {
                        state[w] = 1;
                        via[w] = a;
                        stack.push((w, 0));
                    }
                    1 => {
                        let mut cycle = vec![a];
                        let mut x = v;
                        while x != w {
                            cycle.push(via[x]);
                            x = net.edges[via[x]].from;
                        }
                        return Some(cycle);
                    }
                    _ => {}
                }
            } else {
                state[v] = 2;
                stack.pop();
            }
        }
    }
    None
}
