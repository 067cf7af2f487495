//! Ruiz equilibration for the canonical form `min ½xᵀQx + cᵀx`,
//! `l ≤ Mx ≤ u`.
//!
//! Alternately normalizes the ∞-norms of the columns of `[Q; M]` and the
//! rows of `M` towards 1, then rescales the cost so its magnitude is O(1).
//! The scaled problem is `Q̂ = γDQD`, `ĉ = γDc`, `M̂ = EMD`, `l̂ = El`,
//! `û = Eu`; a scaled solution maps back via `x = Dx̂`, `y = Eŷ/γ`,
//! `z = E⁻¹ẑ`.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{norm_inf, Mat};
use crate::math;

const RUIZ_ITERS: usize = 10;
const MIN_SCALING: f64 = 1e-4;
const MAX_SCALING: f64 = 1e4;

pub struct Scaling {
    /// Variable scalings (diagonal of D).
    pub d: Vec<f64>,
    /// Row scalings (diagonal of E).
    pub e: Vec<f64>,
    /// Cost scaling γ.
    pub gamma: f64,
}

fn clamp_scale(s: f64) -> f64 {
    if s == 0.0 {
        1.0
    } else {
        s.clamp(MIN_SCALING, MAX_SCALING)
    }
}

/// Equilibrates the problem in place and returns the applied scaling.
pub fn ruiz(q: &mut Mat, c: &mut [f64], m: &mut Mat, l: &mut [f64], u: &mut [f64]) -> Scaling {
    let n = q.cols();
    let k = m.rows();
    let mut d = vec![1.0; n];
    let mut e = vec![1.0; k];
    let mut gamma = 1.0;

    for _ in 0..RUIZ_ITERS {
        // Column norms over the stacked [Q; M].
        let mut delta = vec![0.0f64; n];
        for i in 0..n {
            for j in 0..n {
                delta[j] = delta[j].max(q.at(i, j).abs());
            }
        }
        for i in 0..k {
            for j in 0..n {
                delta[j] = delta[j].max(m.at(i, j).abs());
            }
        }
        for dj in delta.iter_mut() {
            *dj = 1.0 / math::sqrt(clamp_scale(*dj));
        }
        // Row norms of M.
        let mut rho = vec![0.0f64; k];
        for i in 0..k {
            rho[i] = 1.0 / math::sqrt(clamp_scale(norm_inf(m.row(i))));
        }

        for i in 0..n {
            for j in 0..n {
                let v = q.at(i, j) * delta[i] * delta[j];
                q.set(i, j, v);
            }
        }
        for (cj, &dj) in c.iter_mut().zip(&delta) {
            *cj *= dj;
        }
        for i in 0..k {
            for j in 0..n {
                let v = m.at(i, j) * rho[i] * delta[j];
                m.set(i, j, v);
            }
        }
        for i in 0..k {
            // ±inf bounds stay infinite under positive scaling.
            l[i] *= rho[i];
            u[i] *= rho[i];
        }
        for (dj, &step) in d.iter_mut().zip(&delta) {
            *dj *= step;
        }
        for (ei, &step) in e.iter_mut().zip(&rho) {
            *ei *= step;
        }

        // Cost scaling: bring max(mean column norm of Q, ‖c‖∞) to 1.
        let mut mean_col = 0.0;
        for j in 0..n {
            let mut col = 0.0f64;
            for i in 0..n {
                col = col.max(q.at(i, j).abs());
            }
            mean_col += col;
        }
        if n > 0 {
            mean_col /= n as f64;
        }
        let denom = mean_col.max(norm_inf(c));
        let step = 1.0 / clamp_scale(denom);
        if step != 1.0 {
            for i in 0..n {
                for j in 0..n {
                    let v = q.at(i, j) * step;
                    q.set(i, j, v);
                }
            }
            for cj in c.iter_mut() {
                *cj *= step;
            }
            gamma *= step;
        }
    }

    Scaling { d, e, gamma }
}
