#![allow(dead_code)]

use peellab::{calibrate, StepLaw};
use std::collections::HashMap;
use std::sync::OnceLock;

pub const BETA: f64 = 0.5;

/// Law with a moderate table, enough for everything but the calibration gate.
pub fn law() -> &'static StepLaw {
    static LAW: OnceLock<StepLaw> = OnceLock::new();
    LAW.get_or_init(|| calibrate(BETA, 20_000, 1e-8).expect("calibration"))
}

fn catalan(n: usize) -> f64 {
    let mut c = 1.0;
    for i in 0..n {
        c = c * 2.0 * (2 * i + 1) as f64 / (i + 2) as f64;
    }
    c
}

/// Fill law of a hole of half-perimeter `l0` by face count `f` and excess `e = Σ(k_i - 1)`,
/// from Tutte's equation truncated to `f ≤ f_max`, `e ≤ e_max`.
///
/// With `ŵ(ℓ) = 2 W(ℓ) c^{-ℓ-1}` the equation reads
/// `ŵ_{f,e}(ℓ) = Σ_k ν(k-1) ŵ_{f-1,e-k+1}(ℓ+k-1) + ½ Σ_j Σ ŵ_{f1,e1}(j) ŵ_{f-f1,e-e1}(ℓ-1-j)`
/// with `ŵ_{0,0}(ℓ) = 2 Cat(ℓ) c^{-ℓ-1}`. Returns `ŵ_{f,e}(l0)/ν(-l0-1)`; the vertex count is `1 + l0 + e`.
pub fn fill_oracle(law: &StepLaw, l0: usize, f_max: usize, e_max: usize) -> HashMap<(usize, usize), f64> {
    let c = law.c_q;
    let l_max = l0 + e_max + 1;
    // w[f][e][l]
    let mut w = vec![vec![vec![0.0f64; l_max + 1]; e_max + 1]; f_max + 1];
    for l in 0..=l_max {
        w[0][0][l] = 2.0 * catalan(l) * c.powi(-(l as i32) - 1);
    }
    for f in 1..=f_max {
        for e in 0..=e_max {
            // perimeter can only grow by e in total, so l ≤ l_max - e suffices
            for l in 1..=(l_max - e) {
                let mut acc = 0.0;
                for k in 1..=e + 1 {
                    let m = l + k - 1;
                    if m <= l_max {
                        acc += law.nu(k as i64 - 1) * w[f - 1][e + 1 - k][m];
                    }
                }
                for j in 0..l {
                    let r = l - 1 - j;
                    for f1 in 0..=f {
                        for e1 in 0..=e {
                            acc += 0.5 * w[f1][e1][j] * w[f - f1][e - e1][r];
                        }
                    }
                }
                w[f][e][l] = acc;
            }
        }
        // split-only maps with f faces and e = 0 at l=0 do not exist: a hole of half-perimeter 0 is a vertex
    }
    let norm = law.nu(-(l0 as i64) - 1);
    let mut out = HashMap::new();
    for f in 0..=f_max {
        for e in 0..=e_max {
            let p = w[f][e][l0] / norm;
            if p > 0.0 {
                out.insert((f, e), p);
            }
        }
    }
    out
}
