//! Max-flow (Dinic) and min-cost flow on small integer networks.

use std::collections::VecDeque;

#[derive(Debug, Clone)]
struct Edge {
    to: usize,
    cap: i64,
    cost: i64,
}

/// Residual network. Edge `2k` is the `k`-th added edge, `2k+1` its reverse.
#[derive(Debug, Clone)]
pub(crate) struct FlowNetwork {
    adj: Vec<Vec<usize>>,
    edges: Vec<Edge>,
    original_cap: Vec<i64>,
}

impl FlowNetwork {
    pub fn new(n_nodes: usize) -> Self {
        FlowNetwork {
            adj: vec![Vec::new(); n_nodes],
            edges: Vec::new(),
            original_cap: Vec::new(),
        }
    }

    /// Adds `from -> to` and returns its handle.
    pub fn add_edge(&mut self, from: usize, to: usize, cap: i64, cost: i64) -> usize {
        let id = self.edges.len();
        self.edges.push(Edge { to, cap, cost });
        self.edges.push(Edge {
            to: from,
            cap: 0,
            cost: -cost,
        });
        self.adj[from].push(id);
        self.adj[to].push(id + 1);
        self.original_cap.push(cap);
        id / 2
    }

    /// Flow currently routed through edge `handle`.
    pub fn flow(&self, handle: usize) -> i64 {
        self.original_cap[handle] - self.edges[2 * handle].cap
    }

    fn levels(&self, source: usize) -> Vec<i32> {
        let mut level = vec![-1; self.adj.len()];
        level[source] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.adj[u] {
                let Edge { to, cap, .. } = self.edges[e];
                if cap > 0 && level[to] < 0 {
                    level[to] = level[u] + 1;
                    queue.push_back(to);
                }
            }
        }
        level
    }

    fn augment(&mut self, u: usize, sink: usize, limit: i64, level: &[i32], next: &mut [usize]) -> i64 {
        if u == sink {
            return limit;
        }
        while next[u] < self.adj[u].len() {
            let e = self.adj[u][next[u]];
            let Edge { to, cap, .. } = self.edges[e];
            if cap > 0 && level[to] == level[u] + 1 {
                let pushed = self.augment(to, sink, limit.min(cap), level, next);
                if pushed > 0 {
                    self.edges[e].cap -= pushed;
                    self.edges[e ^ 1].cap += pushed;
                    return pushed;
                }
            }
            next[u] += 1;
        }
        0
    }

    pub fn max_flow(&mut self, source: usize, sink: usize) -> i64 {
        let mut total = 0;
        loop {
            let level = self.levels(source);
            if level[sink] < 0 {
                return total;
            }
            let mut next = vec![0; self.adj.len()];
            loop {
                let pushed = self.augment(source, sink, i64::MAX, &level, &mut next);
                if pushed == 0 {
                    break;
                }
                total += pushed;
            }
        }
    }

    /// Nodes reachable from `source` in the residual network.
    pub fn residual_reachable(&self, source: usize) -> Vec<bool> {
        self.levels(source).into_iter().map(|l| l >= 0).collect()
    }

    /// Successive shortest paths (Bellman-Ford queue). Routes up to `demand`
    /// units and returns `(flow, cost)`.
    pub fn min_cost_flow(&mut self, source: usize, sink: usize, demand: i64) -> (i64, i64) {
        let n = self.adj.len();
        let (mut flow, mut cost) = (0, 0);
        while flow < demand {
            let mut dist = vec![i64::MAX; n];
            let mut in_queue = vec![false; n];
            let mut via = vec![usize::MAX; n];
            dist[source] = 0;
            let mut queue = VecDeque::from([source]);
            while let Some(u) = queue.pop_front() {
                in_queue[u] = false;
                for &e in &self.adj[u] {
                    let Edge { to, cap, cost: c } = self.edges[e];
                    if cap > 0 && dist[u] + c < dist[to] {
                        dist[to] = dist[u] + c;
                        via[to] = e;
                        if !in_queue[to] {
                            in_queue[to] = true;
                            queue.push_back(to);
                        }
                    }
                }
            }
            if dist[sink] == i64::MAX {
                break;
            }
            let mut push = demand - flow;
            let mut v = sink;
            while v != source {
                let e = via[v];
                push = push.min(self.edges[e].cap);
                v = self.edges[e ^ 1].to;
            }
            let mut v = sink;
            while v != source {
                let e = via[v];
                self.edges[e].cap -= push;
                self.edges[e ^ 1].cap += push;
                v = self.edges[e ^ 1].to;
            }
            flow += push;
            cost += push * dist[sink];
        }
        (flow, cost)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_flow_diamond() {
        let mut g = FlowNetwork::new(4);
        g.add_edge(0, 1, 3, 0);
        g.add_edge(0, 2, 2, 0);
        let mid = g.add_edge(1, 2, 5, 0);
        g.add_edge(1, 3, 2, 0);
        g.add_edge(2, 3, 3, 0);
        assert_eq!(g.max_flow(0, 3), 5);
        assert_eq!(g.flow(mid), 1);
        let reach = g.residual_reachable(0);
        assert!(reach[0] && !reach[3]);
    }

    #[test]
    fn min_cost_prefers_cheap_paths() {
        let mut g = FlowNetwork::new(4);
        g.add_edge(0, 1, 1, 0);
        g.add_edge(0, 2, 1, 0);
        g.add_edge(1, 3, 1, 5);
        g.add_edge(2, 3, 1, 1);
        assert_eq!(g.min_cost_flow(0, 3, 1), (1, 1));
        assert_eq!(g.min_cost_flow(0, 3, 5), (1, 5));
    }
}
