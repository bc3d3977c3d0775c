//! Minimum-cost maximum-flow via successive shortest paths.
//!
//! Costs must be non-negative; Dijkstra with Johnson potentials finds each
//! augmenting path. Convex per-slot costs are modeled upstream as parallel
//! unit-capacity edges with increasing marginal costs, which successive
//! shortest paths fills in cheapest-first order, so the optimum is exact.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

#[derive(Clone, Debug)]
struct Edge {
    to: usize,
    capacity: u32,
    flow: u32,
    cost: i64,
}

/// A directed flow network with integer capacities and costs.
#[derive(Clone, Debug, Default)]
pub struct MinCostFlow {
    edges: Vec<Edge>,
    adjacency: Vec<Vec<usize>>,
}

impl MinCostFlow {
    pub fn new(nodes: usize) -> Self {
        Self {
            edges: Vec::new(),
            adjacency: vec![Vec::new(); nodes],
        }
    }

    pub fn add_node(&mut self) -> usize {
        self.adjacency.push(Vec::new());
        self.adjacency.len() - 1
    }

    /// Adds `from -> to` and its residual twin; returns the edge id.
    pub fn add_edge(&mut self, from: usize, to: usize, capacity: u32, cost: i64) -> usize {
        debug_assert!(cost >= 0);
        let id = self.edges.len();
        self.edges.push(Edge {
            to,
            capacity,
            flow: 0,
            cost,
        });
        self.edges.push(Edge {
            to: from,
            capacity: 0,
            flow: 0,
            cost: -cost,
        });
        self.adjacency[from].push(id);
        self.adjacency[to].push(id + 1);
        id
    }

    pub fn flow_on(&self, edge_id: usize) -> u32 {
        self.edges[edge_id].flow
    }

    fn residual(&self, edge_id: usize) -> u32 {
        let e = &self.edges[edge_id];
        if edge_id % 2 == 0 {
            e.capacity - e.flow
        } else {
            // Twin: residual equals the forward edge's current flow.
            self.edges[edge_id - 1].flow
        }
    }

    fn push(&mut self, edge_id: usize, amount: u32) {
        if edge_id % 2 == 0 {
            self.edges[edge_id].flow += amount;
        } else {
            self.edges[edge_id - 1].flow -= amount;
        }
    }

    /// Sends as much flow as possible from `source` to `sink` at minimum
    /// total cost; returns `(flow, cost)`.
    pub fn solve(&mut self, source: usize, sink: usize) -> (u32, i64) {
        let n = self.adjacency.len();
        let mut potential = vec![0i64; n];
        let mut total_flow = 0u32;
        let mut total_cost = 0i64;

        loop {
            let mut dist = vec![i64::MAX; n];
            let mut parent: Vec<Option<usize>> = vec![None; n];
            let mut heap = BinaryHeap::new();
            dist[source] = 0;
            heap.push(Reverse((0i64, source)));
            while let Some(Reverse((d, u))) = heap.pop() {
                if d > dist[u] {
                    continue;
                }
                for &edge_id in &self.adjacency[u] {
                    if self.residual(edge_id) == 0 {
                        continue;
                    }
                    let e = &self.edges[edge_id];
                    let reduced = d + e.cost + potential[u] - potential[e.to];
                    if reduced < dist[e.to] {
                        dist[e.to] = reduced;
                        parent[e.to] = Some(edge_id);
                        heap.push(Reverse((reduced, e.to)));
                    }
                }
            }
            if dist[sink] == i64::MAX {
                return (total_flow, total_cost);
            }
            for (p, &d) in potential.iter_mut().zip(&dist) {
                if d < i64::MAX {
                    *p += d;
                }
            }

            // Bottleneck along the path, then augment.
            let mut bottleneck = u32::MAX;
            let mut v = sink;
            while let Some(edge_id) = parent[v] {
                bottleneck = bottleneck.min(self.residual(edge_id));
                v = self.twin_tail(edge_id);
            }
            let mut v = sink;
            while let Some(edge_id) = parent[v] {
                self.push(edge_id, bottleneck);
                total_cost += i64::from(bottleneck) * self.edges[edge_id].cost;
                v = self.twin_tail(edge_id);
            }
            total_flow += bottleneck;
        }
    }

    fn twin_tail(&self, edge_id: usize) -> usize {
        let twin = edge_id ^ 1;
        self.edges[twin].to
    }
}
