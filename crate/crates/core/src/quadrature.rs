//! Gauss–Hermite rules and normalized Hermite functions.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;

/// `π^{-1/4}`
const PI_M4: f64 = 0.751_125_544_464_942_5;

/// Nodes and weights for `∫ e^{−x²} f(x) dx ≈ Σ wᵢ f(xᵢ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Eigenvalues of the Jacobi matrix seed the roots; each is then
    /// polished by Newton steps on the normalized recurrence, which also
    /// yields the weights. Nodes come out in descending order.
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "Gauss-Hermite rule needs at least one node");
        let jacobi = DMatrix::from_fn(n, n, |i, j| {
            if i.abs_diff(j) == 1 {
                (i.max(j) as f64 / 2.0).sqrt()
            } else {
                0.0
            }
        });
        let mut seeds: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
        seeds.sort_by(|a, b| b.total_cmp(a));
        let scale = (2.0 * n as f64).sqrt();
        let mut nodes: Vec<f64> = Vec::with_capacity(n);
        let mut weights: Vec<f64> = Vec::with_capacity(n);
        for i in 0..n {
            // solve on the nonnegative half and mirror, so the rule is exactly symmetric
            let mirror = n - 1 - i;
            if i > mirror {
                nodes.push(-nodes[mirror]);
                weights.push(weights[mirror]);
                continue;
            }
            let mut z = if i == mirror { 0.0 } else { seeds[i] };
            for _ in 0..8 {
                let (p1, p2) = hermite_pair(n, z);
                let dz = p1 / (scale * p2);
                z -= dz;
                if dz.abs() <= 1e-16 * z.abs().max(1.0) {
                    break;
                }
            }
            let (_, p2) = hermite_pair(n, z);
            nodes.push(z);
            weights.push(2.0 / (scale * p2).powi(2));
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫ f(x) dx` for `f` concentrated around `center` with width `scale`:
    /// substitutes `x = center + scale·y` and strips the weight.
    pub fn integrate<F: Fn(f64) -> f64>(&self, center: f64, scale: f64, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&y, &w)| (w.ln() + y * y).exp() * f(center + scale * y))
            .sum::<f64>()
            * scale
    }
}

/// Shared rule of order `n`, built once per process.
pub fn cached_rule(n: usize) -> Arc<GaussHermite> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussHermite>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap_or_else(|e| e.into_inner());
    map.entry(n).or_insert_with(|| Arc::new(GaussHermite::new(n))).clone()
}

/// `(ĥ_n(x), ĥ_{n−1}(x))` of the polynomial part, `ĥ₀ = π^{-1/4}`.
fn hermite_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p1 = PI_M4;
    let mut p2 = 0.0;
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = x * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
    }
    (p1, p2)
}

/// Polynomial parts `ĥ_k(x) = φ_k(x)·e^{x²/2}` for `k = 0..=n_max`.
pub fn hermite_polys(n_max: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(PI_M4);
    if n_max >= 1 {
        out.push(2f64.sqrt() * x * PI_M4);
    }
    for k in 1..n_max {
        let kf = k as f64;
        let next = x * (2.0 / (kf + 1.0)).sqrt() * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
        out.push(next);
    }
    out
}

/// Hermite function `φ_n(x) = H_n(x) e^{−x²/2} / √(2ⁿ n! √π)`.
pub fn hermite_function(n: usize, x: f64) -> f64 {
    // start the recurrence from the Gaussian so large n never overflows
    let mut prev = 0.0;
    let mut cur = PI_M4 * (-0.5 * x * x).exp();
    for k in 0..n {
        let kf = k as f64;
        let next = x * (2.0 / (kf + 1.0)).sqrt() * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}
