//! Shared fixtures and independent reference implementations for the
//! integration tests. Nothing here calls into the code paths it checks.
#![allow(dead_code)]

use evsparse::{FeatureVector, LastLayerParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Softmax probabilities of the two binary queries of the MNIST even/odd
/// CVAE prior.
pub const EVEN_SOFTMAX: [f64; 10] = [
    0.07175066, 0.18762952, 0.12967074, 0.14694512, 0.10367352, 0.02215276, 0.05927196,
    0.05245687, 0.04584087, 0.18060793,
];
pub const ODD_SOFTMAX: [f64; 10] = [
    0.11829948, 0.0170686, 0.06552684, 0.01989201, 0.16146706, 0.16441198, 0.2041005,
    0.13485213, 0.09432564, 0.02005576,
];
pub const EVEN_KEEP: [usize; 5] = [1, 2, 3, 4, 9];
pub const EVEN_FILTERED: [f64; 5] = [0.250665, 0.173235, 0.196312, 0.138503, 0.241285];
pub const ODD_KEEP: [usize; 6] = [0, 4, 5, 6, 7, 8];
pub const ODD_FILTERED: [f64; 6] = [0.134821, 0.184017, 0.187373, 0.232605, 0.153685, 0.107499];
/// Even-vs-odd target distribution: classes {1, 2, 3, 9} renormalized over
/// their even-query total 0.644853.
pub const TARGET_SUPPORT: [usize; 4] = [1, 2, 3, 9];
pub const TARGET_PROBS: [f64; 4] = [0.290963, 0.201086, 0.227874, 0.280077];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub phi: Vec<f64>,
}

impl Instance {
    pub fn random(rng: &mut impl Rng, k: usize, j: usize) -> Self {
        let scale = rng.random_range(0.1..3.0);
        let weights = (0..k)
            .map(|_| (0..j).map(|_| scale * rng.random_range(-1.0..1.0)).collect())
            .collect();
        let bias = (0..k).map(|_| rng.random_range(-2.0..2.0)).collect();
        let phi = (0..j).map(|_| rng.random_range(-2.0..2.0)).collect();
        Self { weights, bias, phi }
    }

    pub fn params(&self) -> LastLayerParams {
        LastLayerParams::new(self.weights.clone(), self.bias.clone()).unwrap()
    }

    pub fn features(&self) -> FeatureVector {
        FeatureVector::new(self.phi.clone()).unwrap()
    }

    /// Plain double loop over classes and features.
    pub fn naive_logits(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.bias.len());
        for k in 0..self.bias.len() {
            let mut acc = self.bias[k];
            for j in 0..self.phi.len() {
                acc += self.weights[k][j] * self.phi[j];
            }
            out.push(acc);
        }
        out
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()))
}

/// Simplex projection by enumerating every candidate support: on each, the
/// equality-constrained projection is `z_i − τ` with `τ` fixing the sum to 1;
/// keep the feasible candidate closest to `z`.
pub fn brute_force_sparsemax(z: &[f64]) -> Vec<f64> {
    let k = z.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for subset in 1u32..(1 << k) {
        let members: Vec<usize> = (0..k).filter(|&i| subset & (1 << i) != 0).collect();
        let tau = (members.iter().map(|&i| z[i]).sum::<f64>() - 1.0) / members.len() as f64;
        let mut p = vec![0.0; k];
        let mut feasible = true;
        for &i in &members {
            p[i] = z[i] - tau;
            if p[i] < -1e-14 {
                feasible = false;
            }
        }
        if !feasible {
            continue;
        }
        let dist: f64 = p.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
        if best.as_ref().is_none_or(|(d, _)| dist < *d) {
            best = Some((dist, p.iter().map(|v| v.max(0.0)).collect()));
        }
    }
    best.expect("some support is always feasible").1
}

/// Exact transport cost between `p` and `q` with ground cost `|i − j|`,
/// solved as a min-cost flow with successive shortest paths (Bellman–Ford on
/// the residual graph).
pub fn min_cost_transport(p: &[f64], q: &[f64]) -> f64 {
    const EPS: f64 = 1e-15;
    let k = p.len();
    // nodes: 0 source, 1..=k supplies, k+1..=2k demands, 2k+1 sink
    let source = 0;
    let sink = 2 * k + 1;
    let n = 2 * k + 2;
    let mut to = Vec::new();
    let mut cap = Vec::new();
    let mut cost = Vec::new();
    let mut adj = vec![Vec::new(); n];
    let mut add = |u: usize, v: usize, c: f64, w: f64, adj: &mut Vec<Vec<usize>>| {
        adj[u].push(to.len());
        to.push(v);
        cap.push(c);
        cost.push(w);
        adj[v].push(to.len());
        to.push(u);
        cap.push(0.0);
        cost.push(-w);
    };
    for i in 0..k {
        add(source, 1 + i, p[i], 0.0, &mut adj);
        add(1 + k + i, sink, q[i], 0.0, &mut adj);
        for j in 0..k {
            add(1 + i, 1 + k + j, f64::INFINITY, (i as f64 - j as f64).abs(), &mut adj);
        }
    }
    let mut total_cost = 0.0;
    loop {
        let mut dist = vec![f64::INFINITY; n];
        let mut via = vec![usize::MAX; n];
        dist[source] = 0.0;
        for _ in 0..n {
            let mut changed = false;
            for u in 0..n {
                if dist[u].is_infinite() {
                    continue;
                }
                for &e in &adj[u] {
                    if cap[e] > EPS && dist[u] + cost[e] < dist[to[e]] - 1e-12 {
                        dist[to[e]] = dist[u] + cost[e];
                        via[to[e]] = e;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        if dist[sink].is_infinite() {
            break;
        }
        let mut push = f64::INFINITY;
        let mut v = sink;
        while v != source {
            let e = via[v];
            push = push.min(cap[e]);
            v = to[e ^ 1];
        }
        let mut v = sink;
        while v != source {
            let e = via[v];
            cap[e] -= push;
            cap[e ^ 1] += push;
            v = to[e ^ 1];
        }
        total_cost += push * dist[sink];
    }
    total_cost
}

pub fn random_simplex(rng: &mut impl Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}
