//! Dinic's maximum flow on integer capacities, with a minimum-cut query on
//! the residual network.

use std::collections::VecDeque;

#[derive(Debug, Clone)]
struct Edge {
    to: usize,
    rev: usize,
    cap: i64,
}

#[derive(Debug, Clone)]
pub struct MaxFlow {
    graph: Vec<Vec<Edge>>,
    level: Vec<i32>,
    iter: Vec<usize>,
}

impl MaxFlow {
    pub fn new(nodes: usize) -> Self {
        MaxFlow { graph: vec![Vec::new(); nodes], level: vec![0; nodes], iter: vec![0; nodes] }
    }

    pub fn add_edge(&mut self, from: usize, to: usize, cap: i64) {
        debug_assert!(cap >= 0);
        let rev_from = self.graph[to].len();
        let rev_to = self.graph[from].len() + usize::from(from == to);
        self.graph[from].push(Edge { to, rev: rev_from, cap });
        self.graph[to].push(Edge { to: from, rev: rev_to, cap: 0 });
    }

    fn bfs(&mut self, s: usize) {
        self.level.fill(-1);
        self.level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for e in &self.graph[v] {
                if e.cap > 0 && self.level[e.to] < 0 {
                    self.level[e.to] = self.level[v] + 1;
                    queue.push_back(e.to);
                }
            }
        }
    }

    fn dfs(&mut self, v: usize, t: usize, limit: i64) -> i64 {
        if v == t {
            return limit;
        }
        while self.iter[v] < self.graph[v].len() {
            let Edge { to, rev, cap } = self.graph[v][self.iter[v]];
            if cap > 0 && self.level[v] < self.level[to] {
                let pushed = self.dfs(to, t, limit.min(cap));
                if pushed > 0 {
                    self.graph[v][self.iter[v]].cap -= pushed;
                    self.graph[to][rev].cap += pushed;
                    return pushed;
                }
            }
            self.iter[v] += 1;
        }
        0
    }

    pub fn max_flow(&mut self, s: usize, t: usize) -> i64 {
        let mut flow = 0;
        loop {
            self.bfs(s);
            if self.level[t] < 0 {
                return flow;
            }
            self.iter.fill(0);
            loop {
                let pushed = self.dfs(s, t, i64::MAX);
                if pushed == 0 {
                    break;
                }
                flow += pushed;
            }
        }
    }

    /// Nodes that can still reach `t` in the residual network. After
    /// `max_flow`, this is the smallest sink side among all minimum cuts.
    pub fn sink_side(&self, t: usize) -> Vec<bool> {
        let mut reaches = vec![false; self.graph.len()];
        reaches[t] = true;
        let mut queue = VecDeque::from([t]);
        while let Some(v) = queue.pop_front() {
            // u reaches v when the edge u→v has residual capacity; that edge's
            // twin sits in v's list.
            for e in &self.graph[v] {
                let u = e.to;
                if !reaches[u] && self.graph[u][e.rev].cap > 0 {
                    reaches[u] = true;
                    queue.push_back(u);
                }
            }
        }
        reaches
    }
}
