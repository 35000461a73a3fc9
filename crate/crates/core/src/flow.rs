//! Min-cost flow by successive shortest paths with Dijkstra on reduced costs.
//!
//! Capacities are integers (probability mass is quantized by the callers);
//! costs are real. Edges must point from a lower to a higher node index when
//! added, which makes the initial graph a DAG whose shortest-path distances
//! give feasible starting potentials even with negative costs.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

pub(crate) const INF_CAP: i64 = i64::MAX / 4;

#[derive(Debug, Clone)]
pub(crate) struct MinCostFlow {
    adj: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<i64>,
    cost: Vec<f64>,
    potential: Vec<f64>,
    ready: bool,
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .total_cmp(&self.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl MinCostFlow {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            adj: vec![Vec::new(); n],
            to: Vec::new(),
            cap: Vec::new(),
            cost: Vec::new(),
            potential: vec![0.0; n],
            ready: false,
        }
    }

    pub(crate) fn add_edge(&mut self, from: usize, to: usize, cap: i64, cost: f64) -> usize {
        assert!(from < to, "edges must go forward in node order");
        assert!(cost.is_finite(), "edge cost must be finite");
        let id = self.to.len();
        self.adj[from].push(id);
        self.to.push(to);
        self.cap.push(cap);
        self.cost.push(cost);
        self.adj[to].push(id + 1);
        self.to.push(from);
        self.cap.push(0);
        self.cost.push(-cost);
        id
    }

    /// Flow currently routed through edge `id`.
    pub(crate) fn edge_flow(&self, id: usize) -> i64 {
        self.cap[id ^ 1]
    }

    pub(crate) fn potential(&self, node: usize) -> f64 {
        self.potential[node]
    }

    fn init_potentials(&mut self, source: usize) {
        let n = self.adj.len();
        let mut d = vec![f64::INFINITY; n];
        d[source] = 0.0;
        for u in 0..n {
            if !d[u].is_finite() {
                continue;
            }
            for &e in &self.adj[u] {
                if e % 2 == 0 && self.cap[e] > 0 {
                    let v = self.to[e];
                    let nd = d[u] + self.cost[e];
                    if nd < d[v] {
                        d[v] = nd;
                    }
                }
            }
        }
        let finite_max = d
            .iter()
            .copied()
            .filter(|x| x.is_finite())
            .fold(0.0, f64::max);
        let cost_max = self.cost.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        let fill = finite_max + cost_max + 1.0;
        for (p, x) in self.potential.iter_mut().zip(d) {
            *p = if x.is_finite() { x } else { fill };
        }
        self.ready = true;
    }

    /// Pushes up to `limit` units from `source` to `sink` along cheapest paths.
    /// Returns the amount sent.
    pub(crate) fn flow(&mut self, source: usize, sink: usize, limit: i64) -> i64 {
        if !self.ready {
            self.init_potentials(source);
        }
        let n = self.adj.len();
        let mut sent = 0;
        let mut dist = vec![f64::INFINITY; n];
        let mut prev_edge = vec![usize::MAX; n];
        let mut done = vec![false; n];
        while sent < limit {
            dist.fill(f64::INFINITY);
            prev_edge.fill(usize::MAX);
            done.fill(false);
            dist[source] = 0.0;
            let mut heap = BinaryHeap::new();
            heap.push(Entry(0.0, source));
            while let Some(Entry(d, u)) = heap.pop() {
                if done[u] {
                    continue;
                }
                done[u] = true;
                for &e in &self.adj[u] {
                    if self.cap[e] == 0 {
                        continue;
                    }
                    let v = self.to[e];
                    if done[v] {
                        continue;
                    }
                    let rc = (self.cost[e] + self.potential[u] - self.potential[v]).max(0.0);
                    let nd = d + rc;
                    if nd < dist[v] {
                        dist[v] = nd;
                        prev_edge[v] = e;
                        heap.push(Entry(nd, v));
                    }
                }
            }
            if !done[sink] {
                break;
            }
            let reach_max = (0..n)
                .filter(|&v| done[v])
                .map(|v| dist[v])
                .fold(0.0, f64::max);
            for v in 0..n {
                self.potential[v] += if done[v] { dist[v] } else { reach_max };
            }
            let mut push = limit - sent;
            let mut v = sink;
            while v != source {
                let e = prev_edge[v];
                push = push.min(self.cap[e]);
                v = self.to[e ^ 1];
            }
            let mut v = sink;
            while v != source {
                let e = prev_edge[v];
                self.cap[e] -= push;
                self.cap[e ^ 1] += push;
                v = self.to[e ^ 1];
            }
            sent += push;
        }
        sent
    }

    /// Nodes reachable from `source` through arcs with residual capacity.
    pub(crate) fn residual_reachable(&self, source: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[source] = true;
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.adj[u] {
                let v = self.to[e];
                if self.cap[e] > 0 && !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn picks_cheaper_route() {
        // 0 -> {1, 2} -> 3
        let mut g = MinCostFlow::new(4);
        let a = g.add_edge(0, 1, 5, 1.0);
        let b = g.add_edge(0, 2, 5, 3.0);
        g.add_edge(1, 3, 3, 1.0);
        g.add_edge(2, 3, 5, 0.0);
        assert_eq!(g.flow(0, 3, 6), 6);
        assert_eq!(g.edge_flow(a), 3);
        assert_eq!(g.edge_flow(b), 3);
    }

    #[test]
    fn handles_negative_costs_and_rerouting() {
        // classic case where the second path must cancel flow of the first
        let mut g = MinCostFlow::new(4);
        let s1 = g.add_edge(0, 1, 1, 0.0);
        let s2 = g.add_edge(0, 2, 1, 0.0);
        let x = g.add_edge(1, 2, 1, -5.0);
        let t1 = g.add_edge(1, 3, 1, 10.0);
        let t2 = g.add_edge(2, 3, 1, 0.0);
        assert_eq!(g.flow(0, 3, 2), 2);
        assert_eq!(g.edge_flow(s1) + g.edge_flow(s2), 2);
        assert_eq!(g.edge_flow(t1) + g.edge_flow(t2), 2);
        assert_eq!(g.edge_flow(x), 0);
    }

    #[test]
    fn stops_at_max_flow() {
        let mut g = MinCostFlow::new(3);
        g.add_edge(0, 1, 2, 1.0);
        g.add_edge(1, 2, 1, 1.0);
        assert_eq!(g.flow(0, 2, 10), 1);
        let reach = g.residual_reachable(0);
        assert_eq!(reach, vec![true, true, false]);
    }
}
