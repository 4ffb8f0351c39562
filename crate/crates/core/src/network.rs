//! Road/bridge network, closure masks and bounded many-to-many travel times.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, ValidationReport};
use crate::geom::{nearest_index, Point};
use crate::hazard::{inundation_depth, road_inundation_closed, BridgeExposure, ExposureThresholds, SurgeField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: u64,
    pub location: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EdgeKind {
    /// Road segment with its representative (minimum) surface elevation.
    Road { h_r: f64 },
    Bridge { bridge_id: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeInput {
    pub id: u64,
    pub from: u64,
    pub to: u64,
    pub length_m: f64,
    pub speed_mps: f64,
    pub kind: EdgeKind,
    /// Polyline vertices, endpoints included. May be empty, in which case
    /// the endpoint node locations are used.
    pub geometry: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeRecord {
    pub bridge_id: String,
    /// Deck elevation (m).
    pub h_b: f64,
    /// Mean span mass per unit length (ton/m).
    pub mass_ton_per_m: f64,
    pub location: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: u64,
    pub from: usize,
    pub to: usize,
    pub length_m: f64,
    pub speed_mps: f64,
    pub kind: EdgeKind,
    pub geometry: Vec<Point>,
    minutes: f64,
}

impl Edge {
    /// Free-flow travel time in minutes.
    pub fn minutes(&self) -> f64 {
        self.minutes
    }

    pub fn bridge_id(&self) -> Option<&str> {
        match &self.kind {
            EdgeKind::Bridge { bridge_id } => Some(bridge_id),
            EdgeKind::Road { .. } => None,
        }
    }
}

/// Undirected road network. Nodes are stored sorted by id and bridges
/// sorted by bridge id; indices into these vectors are stable.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    bridges: Vec<BridgeRecord>,
    bridge_edges: Vec<Vec<usize>>,
    // CSR adjacency: (neighbor, edge index)
    adj_offsets: Vec<usize>,
    adj: Vec<(u32, u32)>,
    components: usize,
}

const NETWORK: &str = "network";
const BRIDGES: &str = "bridges";

/// Validates referential integrity and builds the graph. Every problem is
/// collected before failing.
pub fn build_graph(
    mut nodes: Vec<Node>,
    edges: Vec<EdgeInput>,
    mut bridges: Vec<BridgeRecord>,
) -> Result<RoadGraph> {
    let mut report = ValidationReport::new();

    nodes.sort_by_key(|n| n.id);
    for w in nodes.windows(2) {
        if w[0].id == w[1].id {
            report.push(NETWORK, None, format!("duplicate node id {}", w[0].id));
        }
    }
    for n in &nodes {
        if !n.location.is_finite() {
            report.push(NETWORK, None, format!("node {} has a non-finite location", n.id));
        }
    }
    let node_index: HashMap<u64, usize> = nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect();

    bridges.sort_by(|a, b| a.bridge_id.cmp(&b.bridge_id));
    for w in bridges.windows(2) {
        if w[0].bridge_id == w[1].bridge_id {
            report.push(BRIDGES, None, format!("duplicate bridge id {}", w[0].bridge_id));
        }
    }
    for b in &bridges {
        if !b.h_b.is_finite() {
            report.push(BRIDGES, None, format!("bridge {} has a non-finite deck elevation", b.bridge_id));
        }
        if !b.location.is_finite() {
            report.push(BRIDGES, None, format!("bridge {} has a non-finite location", b.bridge_id));
        }
    }
    let bridge_index: HashMap<&str, usize> = bridges
        .iter()
        .enumerate()
        .map(|(i, b)| (b.bridge_id.as_str(), i))
        .collect();

    let mut seen_edges = HashSet::new();
    let mut bridge_edges = vec![Vec::new(); bridges.len()];
    let mut built = Vec::with_capacity(edges.len());
    for e in edges {
        if !seen_edges.insert(e.id) {
            report.push(NETWORK, None, format!("duplicate edge id {}", e.id));
            continue;
        }
        let from = node_index.get(&e.from).copied();
        let to = node_index.get(&e.to).copied();
        if from.is_none() {
            report.push(NETWORK, None, format!("edge {} references missing node {}", e.id, e.from));
        }
        if to.is_none() {
            report.push(NETWORK, None, format!("edge {} references missing node {}", e.id, e.to));
        }
        if e.from == e.to {
            report.push(NETWORK, None, format!("edge {} is a self-loop on node {}", e.id, e.from));
        }
        let minutes = e.length_m / e.speed_mps / 60.0;
        if !(e.length_m > 0.0 && e.speed_mps > 0.0 && minutes.is_finite() && minutes > 0.0) {
            report.push(
                NETWORK,
                None,
                format!(
                    "edge {} needs positive finite length and speed (length_m={}, speed_mps={})",
                    e.id, e.length_m, e.speed_mps
                ),
            );
        }
        match &e.kind {
            EdgeKind::Road { h_r } if !h_r.is_finite() => {
                report.push(NETWORK, None, format!("road edge {} has a non-finite h_r", e.id));
            }
            EdgeKind::Bridge { bridge_id } => match bridge_index.get(bridge_id.as_str()) {
                Some(&b) => bridge_edges[b].push(built.len()),
                None => report.push(
                    NETWORK,
                    None,
                    format!("edge {} references unknown bridge {}", e.id, bridge_id),
                ),
            },
            _ => {}
        }
        if let (Some(from), Some(to)) = (from, to) {
            built.push(Edge {
                id: e.id,
                from,
                to,
                length_m: e.length_m,
                speed_mps: e.speed_mps,
                kind: e.kind,
                geometry: e.geometry,
                minutes,
            });
        }
    }
    for (b, list) in bridges.iter().zip(&bridge_edges) {
        if list.is_empty() {
            report.push(BRIDGES, None, format!("bridge {} is not attached to any edge", b.bridge_id));
        }
    }
    report.into_result()?;

    let mut degree = vec![0usize; nodes.len() + 1];
    for e in &built {
        degree[e.from] += 1;
        degree[e.to] += 1;
    }
    let mut adj_offsets = vec![0usize; nodes.len() + 1];
    for i in 0..nodes.len() {
        adj_offsets[i + 1] = adj_offsets[i] + degree[i];
    }
    let mut fill = adj_offsets.clone();
    let mut adj = vec![(0u32, 0u32); adj_offsets[nodes.len()]];
    for (ei, e) in built.iter().enumerate() {
        adj[fill[e.from]] = (e.to as u32, ei as u32);
        fill[e.from] += 1;
        adj[fill[e.to]] = (e.from as u32, ei as u32);
        fill[e.to] += 1;
    }

    let components = count_components(nodes.len(), &built);
    Ok(RoadGraph {
        nodes,
        edges: built,
        bridges,
        bridge_edges,
        adj_offsets,
        adj,
        components,
    })
}

fn count_components(n: usize, edges: &[Edge]) -> usize {
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut parent: Vec<usize> = (0..n).collect();
    let mut count = n;
    for e in edges {
        let (a, b) = (find(&mut parent, e.from), find(&mut parent, e.to));
        if a != b {
            parent[a] = b;
            count -= 1;
        }
    }
    count
}

impl RoadGraph {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn bridges(&self) -> &[BridgeRecord] {
        &self.bridges
    }

    /// Edge indices carrying bridge `bridge` (index into [`Self::bridges`]).
    pub fn bridge_edges(&self, bridge: usize) -> &[usize] {
        &self.bridge_edges[bridge]
    }

    pub fn component_count(&self) -> usize {
        self.components
    }

    pub fn node_index(&self, id: u64) -> Option<usize> {
        self.nodes.binary_search_by_key(&id, |n| n.id).ok()
    }

    pub fn edge_index(&self, id: u64) -> Option<usize> {
        self.edges.iter().position(|e| e.id == id)
    }

    /// Nearest node by planar distance; ties go to the lower node id.
    pub fn snap(&self, location: &Point) -> Option<usize> {
        nearest_index(self.nodes.iter().map(|n| &n.location), location).map(|(i, _)| i)
    }

    fn neighbors(&self, node: usize) -> &[(u32, u32)] {
        &self.adj[self.adj_offsets[node]..self.adj_offsets[node + 1]]
    }

    /// Vertices used to sample surge along an edge.
    pub fn edge_vertices(&self, edge: usize) -> Vec<Point> {
        let e = &self.edges[edge];
        if e.geometry.is_empty() {
            vec![self.nodes[e.from].location, self.nodes[e.to].location]
        } else {
            e.geometry.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Horizon {
    /// Structural failure plus bridge and road inundation.
    Short,
    /// Structural failure only.
    Long,
}

impl Horizon {
    pub const ALL: [Horizon; 2] = [Horizon::Short, Horizon::Long];

    pub fn as_str(&self) -> &'static str {
        match self {
            Horizon::Short => "short",
            Horizon::Long => "long",
        }
    }
}

impl std::str::FromStr for Horizon {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "short" | "short-term" => Ok(Horizon::Short),
            "long" | "long-term" => Ok(Horizon::Long),
            other => Err(Error::invalid(format!("unknown horizon `{other}`"))),
        }
    }
}

impl std::fmt::Display for Horizon {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Surge exposure of every bridge and road edge for one storm.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkExposure {
    /// Aligned with [`RoadGraph::bridges`].
    pub bridges: Vec<BridgeExposure>,
    /// Inundation depth per edge; `None` for bridge edges and unexposed roads.
    pub road_depths: Vec<Option<f64>>,
}

impl NetworkExposure {
    pub fn evaluate(graph: &RoadGraph, field: &SurgeField) -> Result<Self> {
        let bridges = graph
            .bridges
            .iter()
            .map(|b| BridgeExposure::evaluate(&b.bridge_id, b.h_b, field.sample_at(&b.location)))
            .collect::<Result<Vec<_>>>()?;
        let road_depths = graph
            .edges
            .iter()
            .enumerate()
            .map(|(i, e)| match e.kind {
                EdgeKind::Road { h_r } => {
                    let s = field.sample_along(&graph.edge_vertices(i));
                    if s.exposed {
                        inundation_depth(h_r, s.h_st).map(Some)
                    } else {
                        Ok(None)
                    }
                }
                EdgeKind::Bridge { .. } => Ok(None),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { bridges, road_depths })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ClosureCause {
    pub inundation: bool,
    pub structural: bool,
}

/// Closed edges (by edge index) with the reason for each closure.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClosureMask {
    closed: BTreeMap<usize, ClosureCause>,
}

impl ClosureMask {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn close(&mut self, edge: usize, structural: bool) {
        let cause = self.closed.entry(edge).or_default();
        if structural {
            cause.structural = true;
        } else {
            cause.inundation = true;
        }
    }

    pub fn is_closed(&self, edge: usize) -> bool {
        self.closed.contains_key(&edge)
    }

    pub fn cause(&self, edge: usize) -> Option<ClosureCause> {
        self.closed.get(&edge).copied()
    }

    pub fn len(&self) -> usize {
        self.closed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.closed.is_empty()
    }

    pub fn edges(&self) -> impl Iterator<Item = usize> + '_ {
        self.closed.keys().copied()
    }

    pub fn is_subset_of(&self, other: &ClosureMask) -> bool {
        self.closed.keys().all(|e| other.closed.contains_key(e))
    }

    pub fn union(&self, other: &ClosureMask) -> ClosureMask {
        let mut out = self.clone();
        for (&e, c) in &other.closed {
            let entry = out.closed.entry(e).or_default();
            entry.inundation |= c.inundation;
            entry.structural |= c.structural;
        }
        out
    }

    pub fn to_bits(&self, edge_count: usize) -> Vec<bool> {
        let mut bits = vec![false; edge_count];
        for &e in self.closed.keys() {
            bits[e] = true;
        }
        bits
    }

    pub fn check(&self, graph: &RoadGraph) -> Result<()> {
        match self.closed.keys().find(|&&e| e >= graph.edges.len()) {
            Some(e) => Err(Error::invalid(format!("closure mask references missing edge index {e}"))),
            None => Ok(()),
        }
    }
}

/// Closed edges for one horizon given per-bridge structural failure flags.
pub fn closure_mask(
    graph: &RoadGraph,
    exposure: &NetworkExposure,
    thresholds: &ExposureThresholds,
    failed: &[bool],
    horizon: Horizon,
) -> Result<ClosureMask> {
    if failed.len() != graph.bridges.len() {
        return Err(Error::invalid(format!(
            "failure draw covers {} bridges, network has {}",
            failed.len(),
            graph.bridges.len()
        )));
    }
    if exposure.bridges.len() != graph.bridges.len() || exposure.road_depths.len() != graph.edges.len() {
        return Err(Error::invalid("exposure does not match the network"));
    }
    let mut mask = ClosureMask::new();
    for (b, &f) in failed.iter().enumerate() {
        if f {
            for &e in &graph.bridge_edges[b] {
                mask.close(e, true);
            }
        }
    }
    if horizon == Horizon::Short {
        mask = mask.union(&inundation_mask(graph, exposure, thresholds));
    }
    Ok(mask)
}

/// Deterministic inundation closures of bridges and roads.
pub fn inundation_mask(graph: &RoadGraph, exposure: &NetworkExposure, thresholds: &ExposureThresholds) -> ClosureMask {
    let mut mask = ClosureMask::new();
    for (b, ex) in exposure.bridges.iter().enumerate() {
        if ex.inundation_closed(thresholds) {
            for &e in &graph.bridge_edges[b] {
                mask.close(e, false);
            }
        }
    }
    for (e, d) in exposure.road_depths.iter().enumerate() {
        if let Some(d) = d {
            if road_inundation_closed(*d, thresholds) {
                mask.close(e, false);
            }
        }
    }
    mask
}

/// Sparse demand x supply travel times (minutes), holding only pairs within
/// the cutoff. Indices refer to the demand and supply slices the table was
/// built for.
#[derive(Debug, Clone, PartialEq)]
pub struct TravelTimeTable {
    cutoff: f64,
    supply_count: usize,
    // per demand: (supply index, minutes), sorted by supply index
    by_demand: Vec<Vec<(u32, f64)>>,
}

impl TravelTimeTable {
    pub fn from_rows(cutoff: f64, supply_count: usize, mut by_demand: Vec<Vec<(u32, f64)>>) -> Self {
        for row in &mut by_demand {
            row.sort_by_key(|&(s, _)| s);
        }
        Self {
            cutoff,
            supply_count,
            by_demand,
        }
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn demand_count(&self) -> usize {
        self.by_demand.len()
    }

    pub fn supply_count(&self) -> usize {
        self.supply_count
    }

    pub fn get(&self, demand: usize, supply: usize) -> Option<f64> {
        let row = &self.by_demand[demand];
        row.binary_search_by_key(&(supply as u32), |&(s, _)| s)
            .ok()
            .map(|i| row[i].1)
    }

    /// Reachable supplies of one demand, sorted by supply index.
    pub fn row(&self, demand: usize) -> &[(u32, f64)] {
        &self.by_demand[demand]
    }

    pub fn len(&self) -> usize {
        self.by_demand.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All stored `(demand, supply, minutes)` triples in demand-major order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.by_demand
            .iter()
            .enumerate()
            .flat_map(|(d, row)| row.iter().map(move |&(s, t)| (d, s as usize, t)))
    }
}

#[derive(Clone, Copy, PartialEq)]
struct State {
    cost: f64,
    node: u32,
}

impl Eq for State {}

impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Reusable buffers for bounded Dijkstra searches.
struct SearchSpace {
    dist: Vec<f64>,
    parent_edge: Vec<u32>,
    touched: Vec<u32>,
    heap: BinaryHeap<State>,
}

const NO_EDGE: u32 = u32::MAX;

impl SearchSpace {
    fn new(n: usize) -> Self {
        Self {
            dist: vec![f64::INFINITY; n],
            parent_edge: vec![NO_EDGE; n],
            touched: Vec::new(),
            heap: BinaryHeap::new(),
        }
    }

    fn reset(&mut self) {
        for &n in &self.touched {
            self.dist[n as usize] = f64::INFINITY;
            self.parent_edge[n as usize] = NO_EDGE;
        }
        self.touched.clear();
        self.heap.clear();
    }

    /// Settles every node within `cutoff` of `source` over open edges.
    fn run(&mut self, graph: &RoadGraph, closed: &[bool], source: usize, cutoff: f64) {
        self.reset();
        self.dist[source] = 0.0;
        self.touched.push(source as u32);
        self.heap.push(State {
            cost: 0.0,
            node: source as u32,
        });
        while let Some(State { cost, node }) = self.heap.pop() {
            if cost > self.dist[node as usize] {
                continue;
            }
            for &(next, edge) in graph.neighbors(node as usize) {
                if closed[edge as usize] {
                    continue;
                }
                let nd = cost + graph.edges[edge as usize].minutes;
                if nd > cutoff {
                    continue;
                }
                let slot = &mut self.dist[next as usize];
                if nd < *slot {
                    if slot.is_infinite() {
                        self.touched.push(next);
                    }
                    *slot = nd;
                    self.parent_edge[next as usize] = edge;
                    self.heap.push(State { cost: nd, node: next });
                }
            }
        }
    }

    fn tree_edges(&self) -> Vec<u32> {
        let mut edges: Vec<u32> = self
            .touched
            .iter()
            .map(|&n| self.parent_edge[n as usize])
            .filter(|&e| e != NO_EDGE)
            .collect();
        edges.sort_unstable();
        edges
    }
}

/// Many-to-many bounded travel-time router for fixed demand and supply
/// nodes. Searches run from whichever side has fewer distinct nodes.
#[derive(Debug, Clone)]
pub struct TravelTimeRouter<'g> {
    graph: &'g RoadGraph,
    demand_nodes: Vec<usize>,
    supply_nodes: Vec<usize>,
    cutoff: f64,
    from_demand: bool,
    sources: Vec<usize>,
    // per source slot: the (demand or supply) indices sitting on that node
    source_members: Vec<Vec<u32>>,
}

/// Per-source search result: target-side index with minutes.
type SourceHits = Vec<(u32, f64)>;

/// Result of searching every source under a base mask, kept for cheap
/// re-evaluation when extra edges close.
#[derive(Debug, Clone)]
pub struct RouterBase {
    hits: Vec<SourceHits>,
    closed: Vec<bool>,
    // edge index -> source slots whose shortest-path tree uses it
    users: HashMap<u32, Vec<u32>>,
}

impl<'g> TravelTimeRouter<'g> {
    pub fn new(graph: &'g RoadGraph, demand_nodes: Vec<usize>, supply_nodes: Vec<usize>, cutoff: f64) -> Result<Self> {
        if !(cutoff > 0.0) || !cutoff.is_finite() {
            return Err(Error::invalid(format!("catchment must be positive and finite, got {cutoff}")));
        }
        if let Some(&n) = demand_nodes.iter().chain(&supply_nodes).find(|&&n| n >= graph.nodes.len()) {
            return Err(Error::invalid(format!("node index {n} is out of range")));
        }
        let distinct = |v: &[usize]| v.iter().collect::<HashSet<_>>().len();
        let from_demand = distinct(&demand_nodes) <= distinct(&supply_nodes);
        let side = if from_demand { &demand_nodes } else { &supply_nodes };
        let mut slots: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
        for (i, &n) in side.iter().enumerate() {
            slots.entry(n).or_default().push(i as u32);
        }
        let (sources, source_members) = slots.into_iter().unzip();
        Ok(Self {
            graph,
            demand_nodes,
            supply_nodes,
            cutoff,
            from_demand,
            sources,
            source_members,
        })
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn searches_from_demand(&self) -> bool {
        self.from_demand
    }

    fn targets(&self) -> &[usize] {
        if self.from_demand {
            &self.supply_nodes
        } else {
            &self.demand_nodes
        }
    }

    fn search(&self, space: &mut SearchSpace, closed: &[bool], slot: usize) -> SourceHits {
        space.run(self.graph, closed, self.sources[slot], self.cutoff);
        self.targets()
            .iter()
            .enumerate()
            .filter_map(|(t, &node)| {
                let d = space.dist[node];
                (d <= self.cutoff).then_some((t as u32, d))
            })
            .collect()
    }

    fn assemble(&self, hits: &[SourceHits]) -> TravelTimeTable {
        let mut by_demand = vec![Vec::new(); self.demand_nodes.len()];
        for (slot, slot_hits) in hits.iter().enumerate() {
            for &member in &self.source_members[slot] {
                for &(target, t) in slot_hits {
                    if self.from_demand {
                        by_demand[member as usize].push((target, t));
                    } else {
                        by_demand[target as usize].push((member, t));
                    }
                }
            }
        }
        TravelTimeTable::from_rows(self.cutoff, self.supply_nodes.len(), by_demand)
    }

    pub fn table(&self, mask: &ClosureMask) -> TravelTimeTable {
        let closed = mask.to_bits(self.graph.edges.len());
        let hits: Vec<SourceHits> = (0..self.sources.len())
            .into_par_iter()
            .map_init(
                || SearchSpace::new(self.graph.nodes.len()),
                |space, slot| self.search(space, &closed, slot),
            )
            .collect();
        self.assemble(&hits)
    }

    /// Searches every source under `mask` and records which tree edges each
    /// source depends on.
    pub fn base(&self, mask: &ClosureMask) -> RouterBase {
        let closed = mask.to_bits(self.graph.edges.len());
        let results: Vec<(SourceHits, Vec<u32>)> = (0..self.sources.len())
            .into_par_iter()
            .map_init(
                || SearchSpace::new(self.graph.nodes.len()),
                |space, slot| {
                    let hits = self.search(space, &closed, slot);
                    (hits, space.tree_edges())
                },
            )
            .collect();
        let mut users: HashMap<u32, Vec<u32>> = HashMap::new();
        let mut hits = Vec::with_capacity(results.len());
        for (slot, (h, tree)) in results.into_iter().enumerate() {
            for e in tree {
                users.entry(e).or_default().push(slot as u32);
            }
            hits.push(h);
        }
        RouterBase { hits, closed, users }
    }

    pub fn base_table(&self, base: &RouterBase) -> TravelTimeTable {
        self.assemble(&base.hits)
    }

    /// Table for the base mask plus `extra_closed` edges. Only sources whose
    /// bounded shortest-path tree crosses a newly closed edge are searched
    /// again; all other distances are unchanged because closing edges can
    /// only lengthen paths.
    pub fn table_with_extra(&self, base: &RouterBase, extra_closed: &[usize]) -> TravelTimeTable {
        let newly: Vec<usize> = extra_closed.iter().copied().filter(|&e| !base.closed[e]).collect();
        if newly.is_empty() {
            return self.assemble(&base.hits);
        }
        let mut closed = base.closed.clone();
        let mut affected: Vec<u32> = Vec::new();
        for &e in &newly {
            closed[e] = true;
            if let Some(list) = base.users.get(&(e as u32)) {
                affected.extend_from_slice(list);
            }
        }
        affected.sort_unstable();
        affected.dedup();
        let redone: Vec<(u32, SourceHits)> = affected
            .par_iter()
            .map_init(
                || SearchSpace::new(self.graph.nodes.len()),
                |space, &slot| (slot, self.search(space, &closed, slot as usize)),
            )
            .collect();
        if redone.is_empty() {
            return self.assemble(&base.hits);
        }
        let mut hits = base.hits.clone();
        for (slot, h) in redone {
            hits[slot as usize] = h;
        }
        self.assemble(&hits)
    }
}

/// Shortest free-flow travel times over the open subgraph from every demand
/// node to every supply node, truncated at `cutoff` minutes.
pub fn travel_time_table(
    graph: &RoadGraph,
    mask: &ClosureMask,
    demand_nodes: &[usize],
    supply_nodes: &[usize],
    cutoff: f64,
) -> Result<TravelTimeTable> {
    mask.check(graph)?;
    let router = TravelTimeRouter::new(graph, demand_nodes.to_vec(), supply_nodes.to_vec(), cutoff)?;
    Ok(router.table(mask))
}
