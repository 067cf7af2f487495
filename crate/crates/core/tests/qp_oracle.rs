//! Cross-checks the ADMM solver against an independent brute-force oracle.
//!
//! The oracle enumerates every subset of inequality constraints as a guess
//! for the active set, solves the corresponding equality-constrained KKT
//! system by Gaussian elimination (no code shared with the solver's
//! factorizations), discards infeasible candidates, and keeps the feasible
//! minimum. For a convex QP the true optimum's active set is one of the
//! enumerated subsets, so the oracle is exact up to roundoff.

// Like the kernels under test, this file walks co-indexed arrays with
// plain index loops.
#![allow(clippy::needless_range_loop)]

use gridprice_core::linalg::Mat;
use gridprice_core::qp::{kkt_residuals, solve_qp, QpProblem, SolveStatus};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn unit_f64(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * unit_f64(rng)
}

/// Gaussian elimination with partial pivoting; `None` if near-singular.
fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let (pivot, max) = (col..n)
            .map(|r| (r, a[r][col].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        if max < 1e-11 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in (col + 1)..n {
            let f = a[r][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut v = b[row];
        for c in (row + 1)..n {
            v -= a[row][c] * x[c];
        }
        x[row] = v / a[row][row];
    }
    Some(x)
}

/// All inequality rows of a problem as (coefficients, rhs) of `r·x ≤ s`.
fn inequality_rows(p: &QpProblem) -> Vec<(Vec<f64>, f64)> {
    let n = p.n();
    let mut rows = Vec::new();
    for i in 0..p.g.rows() {
        rows.push((p.g.row(i).to_vec(), p.h[i]));
    }
    for j in 0..n {
        if p.upper[j].is_finite() {
            let mut r = vec![0.0; n];
            r[j] = 1.0;
            rows.push((r, p.upper[j]));
        }
        if p.lower[j].is_finite() {
            let mut r = vec![0.0; n];
            r[j] = -1.0;
            rows.push((r, -p.lower[j]));
        }
    }
    rows
}

fn feasible(p: &QpProblem, rows: &[(Vec<f64>, f64)], x: &[f64], tol: f64) -> bool {
    for (r, s) in rows {
        if r.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() > s + tol {
            return false;
        }
    }
    for i in 0..p.a.rows() {
        let ax: f64 = p.a.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
        if (ax - p.b[i]).abs() > tol {
            return false;
        }
    }
    true
}

/// Global minimum by active-set enumeration; panics if nothing feasible.
fn enumerate_optimum(p: &QpProblem) -> (Vec<f64>, f64) {
    let n = p.n();
    let rows = inequality_rows(p);
    let ni = rows.len();
    let ne = p.a.rows();
    assert!(ni <= 16, "oracle is exponential in the row count");
    let mut best: Option<(Vec<f64>, f64)> = None;
    for mask in 0u32..(1 << ni) {
        let active: Vec<usize> = (0..ni).filter(|i| mask & (1 << i) != 0).collect();
        let na = active.len() + ne;
        if na > n {
            continue;
        }
        let dim = n + na;
        let mut kkt = vec![vec![0.0; dim]; dim];
        let mut rhs = vec![0.0; dim];
        for i in 0..n {
            for j in 0..n {
                kkt[i][j] = p.q.at(i, j);
            }
            rhs[i] = -p.c[i];
        }
        for (slot, &row_idx) in active.iter().enumerate() {
            let (r, s) = &rows[row_idx];
            for j in 0..n {
                kkt[n + slot][j] = r[j];
                kkt[j][n + slot] = r[j];
            }
            rhs[n + slot] = *s;
        }
        for e in 0..ne {
            let slot = n + active.len() + e;
            for j in 0..n {
                kkt[slot][j] = p.a.at(e, j);
                kkt[j][slot] = p.a.at(e, j);
            }
            rhs[slot] = p.b[e];
        }
        let Some(sol) = gauss_solve(kkt, rhs) else { continue };
        let x = &sol[..n];
        if !feasible(p, &rows, x, 1e-7) {
            continue;
        }
        let obj = p.objective(x);
        if best.as_ref().is_none_or(|(_, b)| obj < *b) {
            best = Some((x.to_vec(), obj));
        }
    }
    best.expect("constructed instances are feasible")
}

/// Random strictly convex instance with a known-feasible interior point.
fn random_instance(rng: &mut ChaCha8Rng) -> QpProblem {
    let n = 2 + (rng.next_u64() % 4) as usize;
    let mut q = Mat::zeros(n, n);
    // Q = RᵀR + 0.1 I is symmetric positive definite.
    let r: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| uniform(rng, -1.0, 1.0)).collect()).collect();
    for i in 0..n {
        for j in 0..n {
            let v: f64 = (0..n).map(|k| r[k][i] * r[k][j]).sum();
            q.set(i, j, v + if i == j { 0.1 } else { 0.0 });
        }
    }
    let c: Vec<f64> = (0..n).map(|_| uniform(rng, -2.0, 2.0)).collect();
    let mut p = QpProblem::new(q, c);
    for j in 0..n {
        p.lower[j] = -1.0 - unit_f64(rng);
        p.upper[j] = 1.0 + unit_f64(rng);
    }
    let x0: Vec<f64> = (0..n).map(|j| uniform(rng, p.lower[j], p.upper[j])).collect();
    let mg = (rng.next_u64() % 3) as usize;
    if mg > 0 {
        let mut g = Mat::zeros(mg, n);
        let mut h = vec![0.0; mg];
        for i in 0..mg {
            for j in 0..n {
                g.set(i, j, uniform(rng, -1.0, 1.0));
            }
            let gx: f64 = g.row(i).iter().zip(&x0).map(|(a, b)| a * b).sum();
            h[i] = gx + unit_f64(rng);
        }
        p.g = g;
        p.h = h;
    }
    if rng.next_u64().is_multiple_of(3) {
        let mut a = Mat::zeros(1, n);
        for j in 0..n {
            a.set(0, j, uniform(rng, -1.0, 1.0));
        }
        let b0: f64 = a.row(0).iter().zip(&x0).map(|(x, y)| x * y).sum();
        p.a = a;
        p.b = vec![b0];
    }
    p
}

#[test]
fn solver_matches_enumeration_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    for case in 0..40 {
        let p = random_instance(&mut rng);
        let s = solve_qp(&p, 1e-8, 20_000).expect("valid instance");
        assert_eq!(s.status, SolveStatus::Optimal, "case {case} did not converge");
        let (ox, oobj) = enumerate_optimum(&p);
        let scale = oobj.abs().max(1.0);
        assert!(
            (s.objective - oobj).abs() <= 1e-6 * scale,
            "case {case}: solver {} vs oracle {} (x {:?} vs {:?})",
            s.objective,
            oobj,
            s.x,
            ox
        );
        for (a, b) in s.x.iter().zip(&ox) {
            assert!((a - b).abs() < 1e-5, "case {case}: argmin mismatch {a} vs {b}");
        }
        let r = kkt_residuals(&p, &s).unwrap();
        assert!(r.stationarity <= 1e-8, "case {case}: stationarity {}", r.stationarity);
        assert!(r.primal <= 1e-8, "case {case}: primal {}", r.primal);
        assert!(r.complementarity <= 1e-8, "case {case}: comp {}", r.complementarity);
    }
}

#[test]
fn random_feasible_points_never_beat_solver() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    for _ in 0..15 {
        let p = random_instance(&mut rng);
        if p.a.rows() > 0 {
            continue; // sampling exactly onto an equality is hopeless
        }
        let s = solve_qp(&p, 1e-8, 20_000).expect("valid instance");
        assert_eq!(s.status, SolveStatus::Optimal);
        let rows = inequality_rows(&p);
        let n = p.n();
        for _ in 0..200 {
            let x: Vec<f64> = (0..n).map(|j| uniform(&mut rng, p.lower[j], p.upper[j])).collect();
            if feasible(&p, &rows, &x, 0.0) {
                assert!(p.objective(&x) >= s.objective - 1e-8);
            }
        }
    }
}
