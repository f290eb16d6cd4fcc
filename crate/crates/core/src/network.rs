//! Grid road networks, their arteries, and a strictly fundamental cycle basis
//! annotated for the network loop constraints.
//!
//! Junctions are numbered row-major (`node = row * cols + col`). Row arteries
//! come first (outbound west to east), followed by column arteries (outbound
//! north to south). Signal `i` of an artery sits at its `i`-th node in the
//! outbound direction. Edges are numbered artery-major, so edge ids double as
//! segment ids for the per-segment data and the `m` variables.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetworkError {
    #[error("grid must have at least 2 rows and 2 columns, got {rows}x{cols}")]
    TooSmall { rows: usize, cols: usize },
    #[error("an artery needs at least 2 signals, got {0}")]
    ShortArtery(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Horizontal,
    Vertical,
}

/// A signal, identified by its artery and its position along the artery.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SignalId {
    pub artery: usize,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artery {
    pub orientation: Orientation,
    /// Row (horizontal) or column (vertical) the artery runs along.
    pub line: usize,
    /// Junctions in outbound order; signal `i` sits at `nodes[i]`.
    pub nodes: Vec<usize>,
}

impl Artery {
    pub fn num_signals(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_segments(&self) -> usize {
        self.nodes.len() - 1
    }
}

/// An undirected street segment between consecutive signals of one artery.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    /// Junction of signal `segment` (the outbound tail).
    pub tail: usize,
    /// Junction of signal `segment + 1`.
    pub head: usize,
    pub artery: usize,
    pub segment: usize,
}

/// A grid road network (or a lone artery, which has no cycles).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridNetwork {
    rows: usize,
    cols: usize,
    arteries: Vec<Artery>,
    edges: Vec<Edge>,
    signal_offsets: Vec<usize>,
    segment_offsets: Vec<usize>,
    node_signals: Vec<Vec<SignalId>>,
}

/// Shape descriptor used by the instance file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NetworkShape {
    Grid { rows: usize, cols: usize },
    SingleArtery { signals: usize },
}

/// Builds the `rows x cols` grid graph.
pub fn build_grid(rows: usize, cols: usize) -> Result<GridNetwork, NetworkError> {
    if rows < 2 || cols < 2 {
        return Err(NetworkError::TooSmall { rows, cols });
    }
    let mut arteries = Vec::with_capacity(rows + cols);
    for row in 0..rows {
        arteries.push(Artery {
            orientation: Orientation::Horizontal,
            line: row,
            nodes: (0..cols).map(|col| row * cols + col).collect(),
        });
    }
    for col in 0..cols {
        arteries.push(Artery {
            orientation: Orientation::Vertical,
            line: col,
            nodes: (0..rows).map(|row| row * cols + col).collect(),
        });
    }
    Ok(GridNetwork::from_arteries(rows, cols, arteries))
}

impl GridNetwork {
    /// A single two-way street with `signals` signals and no crossing streets.
    pub fn single_artery(signals: usize) -> Result<GridNetwork, NetworkError> {
        if signals < 2 {
            return Err(NetworkError::ShortArtery(signals));
        }
        let artery = Artery {
            orientation: Orientation::Horizontal,
            line: 0,
            nodes: (0..signals).collect(),
        };
        Ok(GridNetwork::from_arteries(1, signals, vec![artery]))
    }

    pub fn from_shape(shape: NetworkShape) -> Result<GridNetwork, NetworkError> {
        match shape {
            NetworkShape::Grid { rows, cols } => build_grid(rows, cols),
            NetworkShape::SingleArtery { signals } => GridNetwork::single_artery(signals),
        }
    }

    fn from_arteries(rows: usize, cols: usize, arteries: Vec<Artery>) -> GridNetwork {
        let mut edges = Vec::new();
        let mut signal_offsets = Vec::with_capacity(arteries.len());
        let mut segment_offsets = Vec::with_capacity(arteries.len());
        let mut node_signals = vec![Vec::new(); rows * cols];
        let mut signals = 0;
        for (a, artery) in arteries.iter().enumerate() {
            signal_offsets.push(signals);
            segment_offsets.push(edges.len());
            signals += artery.nodes.len();
            for (i, &node) in artery.nodes.iter().enumerate() {
                node_signals[node].push(SignalId { artery: a, index: i });
            }
            for (i, pair) in artery.nodes.windows(2).enumerate() {
                edges.push(Edge {
                    tail: pair[0],
                    head: pair[1],
                    artery: a,
                    segment: i,
                });
            }
        }
        GridNetwork {
            rows,
            cols,
            arteries,
            edges,
            signal_offsets,
            segment_offsets,
            node_signals,
        }
    }

    pub fn shape(&self) -> NetworkShape {
        if self.is_grid() {
            NetworkShape::Grid {
                rows: self.rows,
                cols: self.cols,
            }
        } else {
            NetworkShape::SingleArtery {
                signals: self.cols,
            }
        }
    }

    pub fn is_grid(&self) -> bool {
        self.arteries.len() == self.rows + self.cols && self.rows >= 2
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn num_nodes(&self) -> usize {
        self.rows * self.cols
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_signals(&self) -> usize {
        self.signal_offsets.last().copied().unwrap_or(0)
            + self.arteries.last().map_or(0, |a| a.nodes.len())
    }

    pub fn arteries(&self) -> &[Artery] {
        &self.arteries
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Dimension of the cycle space, `m - n + 1` for a connected graph.
    pub fn cycle_rank(&self) -> usize {
        self.num_edges() + 1 - self.num_nodes()
    }

    /// Global index of signal `(artery, index)`.
    pub fn signal_index(&self, artery: usize, index: usize) -> usize {
        debug_assert!(index < self.arteries[artery].nodes.len());
        self.signal_offsets[artery] + index
    }

    /// Global index (= edge id) of the segment between signals `index` and
    /// `index + 1` of `artery`.
    pub fn segment_index(&self, artery: usize, index: usize) -> usize {
        debug_assert!(index + 1 < self.arteries[artery].nodes.len());
        self.segment_offsets[artery] + index
    }

    /// All signals in global-index order.
    pub fn signals(&self) -> impl Iterator<Item = SignalId> + '_ {
        self.arteries.iter().enumerate().flat_map(|(a, artery)| {
            (0..artery.nodes.len()).map(move |i| SignalId { artery: a, index: i })
        })
    }

    /// Signals located at `node`.
    pub fn signals_at(&self, node: usize) -> &[SignalId] {
        &self.node_signals[node]
    }

    pub fn node_of(&self, signal: SignalId) -> usize {
        self.arteries[signal.artery].nodes[signal.index]
    }

    /// `(row, col)` of a junction.
    pub fn coords(&self, node: usize) -> (usize, usize) {
        (node / self.cols, node % self.cols)
    }

    /// Sorted neighbours of a junction.
    pub fn neighbors(&self, node: usize) -> Vec<usize> {
        let (row, col) = self.coords(node);
        let mut out = Vec::with_capacity(4);
        if self.is_grid() || row == 0 {
            if row > 0 && self.is_grid() {
                out.push(node - self.cols);
            }
            if col > 0 {
                out.push(node - 1);
            }
            if col + 1 < self.cols {
                out.push(node + 1);
            }
            if row + 1 < self.rows && self.is_grid() {
                out.push(node + self.cols);
            }
        }
        out
    }

    /// Edge id joining two adjacent junctions.
    pub fn edge_between(&self, u: usize, v: usize) -> Option<usize> {
        let (ru, cu) = self.coords(u);
        let (rv, cv) = self.coords(v);
        if ru == rv && cu.abs_diff(cv) == 1 {
            let artery = if self.is_grid() { ru } else { 0 };
            Some(self.segment_index(artery, cu.min(cv)))
        } else if cu == cv && ru.abs_diff(rv) == 1 && self.is_grid() {
            Some(self.segment_index(self.rows + cu, ru.min(rv)))
        } else {
            None
        }
    }

    /// Position of `node` along `artery`, if the artery passes through it.
    pub fn index_on(&self, artery: usize, node: usize) -> Option<usize> {
        let (row, col) = self.coords(node);
        let a = &self.arteries[artery];
        match a.orientation {
            Orientation::Horizontal if row == a.line => Some(col),
            Orientation::Vertical if col == a.line => Some(row),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Traversed in the artery's outbound direction.
    Forward,
    /// Traversed against it.
    Backward,
}

/// A maximal straight run of a cycle along one artery. `first < last` always
/// index signals in outbound order, whatever the traversal direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleSegment {
    pub artery: usize,
    pub first: usize,
    pub last: usize,
    pub direction: Direction,
}

/// A corner `(b, j, i, c, k)`: the walk arrives on artery `b` at its signal
/// `j`, turns at junction `i`, and leaves on artery `c` from its signal `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Junction {
    pub from_artery: usize,
    pub from_signal: usize,
    pub node: usize,
    pub to_artery: usize,
    pub to_signal: usize,
}

/// One basis cycle as a clockwise closed walk starting at a corner.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cycle {
    /// Junctions in walk order; the walk closes from the last back to the first.
    pub nodes: Vec<usize>,
    /// `edges[k]` joins `nodes[k]` and `nodes[k + 1]` (cyclically).
    pub edges: Vec<usize>,
    pub segments: Vec<CycleSegment>,
    /// `junctions[k]` sits between `segments[k]` and `segments[k + 1]`.
    pub junctions: Vec<Junction>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleBasis {
    pub cycles: Vec<Cycle>,
}

impl CycleBasis {
    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }

    /// JSON dump: one entry per cycle with its ordered segments and corners.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("basis serialises")
    }
}

/// Strictly fundamental cycle basis from a BFS spanning tree rooted at
/// junction 0: one cycle per non-tree edge, closed through the tree path.
pub fn fundamental_cycle_basis(net: &GridNetwork) -> CycleBasis {
    let n = net.num_nodes();
    let mut parent = vec![usize::MAX; n];
    let mut depth = vec![0usize; n];
    let mut tree_edge = vec![false; net.num_edges()];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    seen[0] = true;
    queue.push_back(0);
    while let Some(u) = queue.pop_front() {
        for v in net.neighbors(u) {
            if !seen[v] {
                seen[v] = true;
                parent[v] = u;
                depth[v] = depth[u] + 1;
                tree_edge[net.edge_between(u, v).expect("adjacent")] = true;
                queue.push_back(v);
            }
        }
    }

    let mut cycles = Vec::with_capacity(net.cycle_rank());
    for (id, edge) in net.edges().iter().enumerate() {
        if tree_edge[id] {
            continue;
        }
        let (mut u, mut v) = (edge.tail, edge.head);
        let mut up_u = vec![u];
        let mut up_v = vec![v];
        while depth[u] > depth[v] {
            u = parent[u];
            up_u.push(u);
        }
        while depth[v] > depth[u] {
            v = parent[v];
            up_v.push(v);
        }
        while u != v {
            u = parent[u];
            v = parent[v];
            up_u.push(u);
            up_v.push(v);
        }
        // tail -> ... -> lca -> ... -> head, closed by the non-tree edge.
        up_v.pop();
        up_v.reverse();
        up_u.extend(up_v);
        cycles.push(annotate_cycle(net, up_u));
    }
    CycleBasis { cycles }
}

fn annotate_cycle(net: &GridNetwork, mut nodes: Vec<usize>) -> Cycle {
    // Shoelace with north up: positive area means counter-clockwise.
    let len = nodes.len();
    let mut twice_area: i64 = 0;
    for k in 0..len {
        let (r0, c0) = net.coords(nodes[k]);
        let (r1, c1) = net.coords(nodes[(k + 1) % len]);
        let (x0, y0) = (c0 as i64, -(r0 as i64));
        let (x1, y1) = (c1 as i64, -(r1 as i64));
        twice_area += x0 * y1 - x1 * y0;
    }
    if twice_area > 0 {
        nodes.reverse();
    }

    let edges_of = |nodes: &[usize]| -> Vec<usize> {
        (0..nodes.len())
            .map(|k| {
                net.edge_between(nodes[k], nodes[(k + 1) % nodes.len()])
                    .expect("cycle walks along grid edges")
            })
            .collect()
    };
    let edges = edges_of(&nodes);
    let artery_of = |e: usize| net.edges()[e].artery;

    // Start the walk at a corner so every run is maximal.
    let start = (0..len)
        .find(|&k| artery_of(edges[(k + len - 1) % len]) != artery_of(edges[k]))
        .expect("a simple grid cycle has corners");
    nodes.rotate_left(start);
    let edges = edges_of(&nodes);

    let mut segments = Vec::new();
    let mut corners = Vec::new();
    let mut k = 0;
    while k < len {
        let artery = artery_of(edges[k]);
        let from = nodes[k];
        let mut end = k;
        while end + 1 < len && artery_of(edges[end + 1]) == artery {
            end += 1;
        }
        let to = nodes[(end + 1) % len];
        let i_from = net.index_on(artery, from).expect("on artery");
        let i_to = net.index_on(artery, to).expect("on artery");
        let (first, last, direction) = if i_from < i_to {
            (i_from, i_to, Direction::Forward)
        } else {
            (i_to, i_from, Direction::Backward)
        };
        segments.push(CycleSegment {
            artery,
            first,
            last,
            direction,
        });
        corners.push(to);
        k = end + 1;
    }

    let runs = segments.len();
    let junctions = (0..runs)
        .map(|s| {
            let b = segments[s].artery;
            let c = segments[(s + 1) % runs].artery;
            let node = corners[s];
            Junction {
                from_artery: b,
                from_signal: net.index_on(b, node).expect("corner on arriving artery"),
                node,
                to_artery: c,
                to_signal: net.index_on(c, node).expect("corner on leaving artery"),
            }
        })
        .collect();

    Cycle {
        nodes,
        edges,
        segments,
        junctions,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_closed_forms() {
        let g = build_grid(3, 4).unwrap();
        assert_eq!(g.num_nodes(), 12);
        assert_eq!(g.num_edges(), 17);
        assert_eq!(g.arteries().len(), 7);
        assert_eq!(g.num_signals(), 24);

        let g = build_grid(2, 2).unwrap();
        assert_eq!((g.num_nodes(), g.num_edges()), (4, 4));
        assert_eq!(fundamental_cycle_basis(&g).len(), 1);

        let g = build_grid(10, 10).unwrap();
        assert_eq!(g.num_edges(), 180);
        assert_eq!(fundamental_cycle_basis(&g).len(), 81);
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert_eq!(build_grid(1, 5), Err(NetworkError::TooSmall { rows: 1, cols: 5 }));
        assert!(build_grid(3, 0).is_err());
        assert!(GridNetwork::single_artery(1).is_err());
    }

    #[test]
    fn every_node_has_one_signal_per_crossing_artery() {
        let g = build_grid(4, 3).unwrap();
        for node in 0..g.num_nodes() {
            let s = g.signals_at(node);
            assert_eq!(s.len(), 2);
            assert_ne!(g.arteries()[s[0].artery].orientation, g.arteries()[s[1].artery].orientation);
            for &sig in s {
                assert_eq!(g.node_of(sig), node);
            }
        }
        let segs: usize = g.arteries().iter().map(Artery::num_segments).sum();
        assert_eq!(segs, g.num_edges());
    }

    #[test]
    fn two_by_two_cycle_is_the_clockwise_square() {
        let g = build_grid(2, 2).unwrap();
        let basis = fundamental_cycle_basis(&g);
        let c = &basis.cycles[0];
        assert_eq!(c.nodes.len(), 4);
        assert_eq!(c.segments.len(), 4);
        assert_eq!(c.junctions.len(), 4);
        // Up the west side, east along the top, down the east side, west along the bottom.
        assert_eq!(c.nodes, vec![2, 0, 1, 3]);
        let dirs: Vec<_> = c.segments.iter().map(|s| (s.artery, s.direction)).collect();
        assert_eq!(
            dirs,
            vec![
                (2, Direction::Backward),
                (0, Direction::Forward),
                (3, Direction::Forward),
                (1, Direction::Backward)
            ]
        );
        assert_eq!(
            c.junctions[0],
            Junction { from_artery: 2, from_signal: 0, node: 0, to_artery: 0, to_signal: 0 }
        );
    }

    #[test]
    fn single_artery_has_no_cycles() {
        let g = GridNetwork::single_artery(3).unwrap();
        assert_eq!(g.num_edges(), 2);
        assert_eq!(g.num_signals(), 3);
        assert!(!g.is_grid());
        assert_eq!(g.cycle_rank(), 0);
        assert!(fundamental_cycle_basis(&g).is_empty());
        assert_eq!(g.neighbors(1), vec![0, 2]);
    }
}
