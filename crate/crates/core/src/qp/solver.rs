//! Operator-splitting solve loop with active-set polish.
//!
//! The problem is rewritten in the canonical form `min ½xᵀQx + cᵀx` over
//! `l ≤ Mx ≤ u`, where `M` stacks the inequality rows (`-inf ≤ Gx ≤ h`),
//! the equality rows (`b ≤ Ax ≤ b`), and one unit row per finitely bounded
//! variable. Each ADMM step solves the quasi-definite KKT system
//!
//! ```text
//!   [ Q + σI   Mᵀ     ] [x̃]   [σx − c]
//!   [ M       −R⁻¹    ] [ν] = [z − R⁻¹y]
//! ```
//!
//! with per-row penalties `R` (equality rows get a stiffer penalty),
//! followed by over-relaxed projection and dual updates. Once the iterates
//! are close, a polish step re-solves the KKT system restricted to the
//! estimated active set in the original (unscaled) data and adopts the
//! result if it improves the KKT residuals.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{norm_inf, LdlFactor, Mat};
use crate::math;

use super::scaling;
use super::{QpProblem, QpSolution, SolveStatus};

const SIGMA: f64 = 1e-6;
const RELAXATION: f64 = 1.6;
const RHO_INIT: f64 = 0.1;
const RHO_EQ_FACTOR: f64 = 1e3;
const RHO_MIN: f64 = 1e-6;
const RHO_MAX: f64 = 1e6;
const CHECK_INTERVAL: usize = 25;
/// Relative threshold for the primal infeasibility certificate.
const EPS_PRIM_INF: f64 = 1e-7;
/// Try polishing as soon as residuals are within this factor of `tol`.
const EARLY_POLISH_FACTOR: f64 = 1e4;
/// Regularization for the polish KKT system, relative to `‖Q‖`.
const POLISH_DELTA: f64 = 1e-9;
/// Most negative inequality multiplier tolerated in an optimal solution.
const DUAL_SIGN_TOL: f64 = 1e-10;

#[derive(Clone, Copy)]
enum RowKind {
    Ineq(usize),
    Eq(usize),
    Bound(usize),
}

struct Canonical {
    m: Mat,
    l: Vec<f64>,
    u: Vec<f64>,
    kinds: Vec<RowKind>,
    /// `max(1, ‖row‖∞)`, used to normalize primal violations.
    row_scale: Vec<f64>,
}

fn canonicalize(p: &QpProblem) -> Canonical {
    let n = p.n();
    let k = p.g.rows() + p.a.rows() + p.lower.iter().zip(&p.upper).filter(|(l, u)| l.is_finite() || u.is_finite()).count();
    let mut m = Mat::zeros(k, n);
    let mut l = Vec::with_capacity(k);
    let mut u = Vec::with_capacity(k);
    let mut kinds = Vec::with_capacity(k);
    let mut row = 0;
    for i in 0..p.g.rows() {
        m.row_mut(row).copy_from_slice(p.g.row(i));
        l.push(f64::NEG_INFINITY);
        u.push(p.h[i]);
        kinds.push(RowKind::Ineq(i));
        row += 1;
    }
    for i in 0..p.a.rows() {
        m.row_mut(row).copy_from_slice(p.a.row(i));
        l.push(p.b[i]);
        u.push(p.b[i]);
        kinds.push(RowKind::Eq(i));
        row += 1;
    }
    for j in 0..n {
        if p.lower[j].is_finite() || p.upper[j].is_finite() {
            m.set(row, j, 1.0);
            l.push(p.lower[j]);
            u.push(p.upper[j]);
            kinds.push(RowKind::Bound(j));
            row += 1;
        }
    }
    let row_scale = (0..k).map(|i| norm_inf(m.row(i)).max(1.0)).collect();
    Canonical { m, l, u, kinds, row_scale }
}

/// KKT quality of an unscaled primal/dual candidate.
#[derive(Clone, Copy)]
struct Assessment {
    primal: f64,
    dual: f64,
    comp: f64,
    /// Magnitude of the worst wrong-signed multiplier on one-sided rows.
    sign: f64,
}

impl Assessment {
    fn composite(&self) -> f64 {
        self.primal.max(self.dual).max(self.comp).max(self.sign)
    }

    fn meets(&self, tol: f64) -> bool {
        self.primal <= tol && self.dual <= tol && self.comp <= tol && self.sign <= DUAL_SIGN_TOL
    }
}

fn assess(p: &QpProblem, canon: &Canonical, x: &[f64], y: &[f64]) -> Assessment {
    let n = p.n();
    let k = canon.m.rows();
    let mut grad = vec![0.0; n];
    p.q.matvec(x, &mut grad);
    for (g, &ci) in grad.iter_mut().zip(&p.c) {
        *g += ci;
    }
    canon.m.matvec_t_acc(y, 1.0, &mut grad);
    let dual = norm_inf(&grad);

    let mut s = vec![0.0; k];
    canon.m.matvec(x, &mut s);
    let mut primal = 0.0f64;
    let mut comp = 0.0f64;
    let mut sign = 0.0f64;
    for r in 0..k {
        let lo = canon.l[r];
        let hi = canon.u[r];
        let mut viol = 0.0f64;
        if hi.is_finite() {
            viol = viol.max(s[r] - hi);
        }
        if lo.is_finite() {
            viol = viol.max(lo - s[r]);
        }
        primal = primal.max(viol / canon.row_scale[r]);
        if matches!(canon.kinds[r], RowKind::Eq(_)) {
            continue;
        }
        if y[r] > 0.0 {
            if hi.is_finite() {
                comp = comp.max((y[r] * (s[r] - hi)).abs());
            } else {
                sign = sign.max(y[r]);
            }
        } else if y[r] < 0.0 {
            if lo.is_finite() {
                comp = comp.max((y[r] * (s[r] - lo)).abs());
            } else {
                sign = sign.max(-y[r]);
            }
        }
    }
    Assessment { primal, dual, comp, sign }
}

struct Candidate {
    x: Vec<f64>,
    y: Vec<f64>,
    quality: Assessment,
}

/// Estimated active set, and the KKT re-solve on it.
///
/// A row counts as active when its multiplier is significant relative to
/// the largest multiplier, or when the iterate sits essentially on the
/// bound. The magnitude test keeps ±1e-16 dual noise on slack rows from
/// polluting the set; the proximity test keeps degenerate active rows
/// (zero multiplier, zero slack) in it.
fn polish(p: &QpProblem, canon: &Canonical, x: &[f64], y: &[f64]) -> Option<Candidate> {
    let n = p.n();
    let k = canon.m.rows();
    let mut s = vec![0.0; k];
    canon.m.matvec(x, &mut s);
    let eps_dual = 1e-9 * norm_inf(y).max(1.0);
    let mut active: Vec<(usize, f64)> = Vec::new();
    for r in 0..k {
        match canon.kinds[r] {
            RowKind::Eq(_) => active.push((r, canon.u[r])),
            _ => {
                let eps_slack = 1e-7 * canon.row_scale[r];
                let near_u = canon.u[r].is_finite() && canon.u[r] - s[r] <= eps_slack;
                let near_l = canon.l[r].is_finite() && s[r] - canon.l[r] <= eps_slack;
                if (y[r] > eps_dual || near_u) && canon.u[r].is_finite() && !near_l {
                    active.push((r, canon.u[r]));
                } else if (y[r] < -eps_dual || near_l) && canon.l[r].is_finite() {
                    active.push((r, canon.l[r]));
                }
            }
        }
    }
    let na = active.len();
    let dim = n + na;
    let mut kkt = Mat::zeros(dim, dim);
    for i in 0..n {
        for j in 0..n {
            kkt.set(i, j, p.q.at(i, j));
        }
    }
    for (a, &(r, _)) in active.iter().enumerate() {
        for j in 0..n {
            let v = canon.m.at(r, j);
            kkt.set(n + a, j, v);
            kkt.set(j, n + a, v);
        }
    }
    let mut delta = POLISH_DELTA * p.q.max_abs().max(1.0);
    let factor = loop {
        let mut reg = kkt.clone();
        for i in 0..n {
            reg.add_at(i, i, delta);
        }
        for a in 0..na {
            reg.add_at(n + a, n + a, -delta);
        }
        match LdlFactor::factor(&reg) {
            Ok(f) => break f,
            Err(_) if delta < 1.0 => delta *= 100.0,
            Err(_) => return None,
        }
    };

    let mut rhs = vec![0.0; dim];
    for j in 0..n {
        rhs[j] = -p.c[j];
    }
    for (a, &(_, bound)) in active.iter().enumerate() {
        rhs[n + a] = bound;
    }
    let mut sol = rhs.clone();
    factor.solve(&mut sol);
    // Iterative refinement against the unregularized KKT matrix.
    for _ in 0..3 {
        let mut resid = rhs.clone();
        let mut kx = vec![0.0; dim];
        kkt.matvec(&sol, &mut kx);
        for (ri, &ki) in resid.iter_mut().zip(&kx) {
            *ri -= ki;
        }
        if norm_inf(&resid) < 1e-14 * norm_inf(&rhs).max(1.0) {
            break;
        }
        factor.solve(&mut resid);
        for (si, &di) in sol.iter_mut().zip(&resid) {
            *si += di;
        }
    }

    let x = sol[..n].to_vec();
    let mut y_full = vec![0.0; k];
    for (a, &(r, _)) in active.iter().enumerate() {
        y_full[r] = sol[n + a];
    }
    let quality = assess(p, canon, &x, &y_full);
    Some(Candidate { x, y: y_full, quality })
}

/// Farkas-style certificate test on the dual step direction.
fn primal_infeasibility_certificate(canon: &Canonical, dy: &[f64]) -> bool {
    let nrm = norm_inf(dy);
    if nrm <= 1e-12 {
        return false;
    }
    let mut mt_dy = vec![0.0; canon.m.cols()];
    canon.m.matvec_t_acc(dy, 1.0, &mut mt_dy);
    if norm_inf(&mt_dy) > EPS_PRIM_INF * nrm {
        return false;
    }
    let mut support = 0.0;
    for r in 0..dy.len() {
        if dy[r] > 0.0 {
            if !canon.u[r].is_finite() {
                return false;
            }
            support += canon.u[r] * dy[r];
        } else if dy[r] < 0.0 {
            if !canon.l[r].is_finite() {
                return false;
            }
            support += canon.l[r] * dy[r];
        }
    }
    support <= -EPS_PRIM_INF * nrm
}

fn build_kkt(qs: &Mat, ms: &Mat, rho: &[f64]) -> LdlFactor {
    let n = qs.rows();
    let k = ms.rows();
    let mut sigma = SIGMA;
    loop {
        let mut kkt = Mat::zeros(n + k, n + k);
        for i in 0..n {
            for j in 0..n {
                kkt.set(i, j, qs.at(i, j));
            }
            kkt.add_at(i, i, sigma);
        }
        for r in 0..k {
            for j in 0..n {
                let v = ms.at(r, j);
                kkt.set(n + r, j, v);
                kkt.set(j, n + r, v);
            }
            kkt.set(n + r, n + r, -1.0 / rho[r]);
        }
        match LdlFactor::factor(&kkt) {
            Ok(f) => return f,
            Err(_) => sigma *= 10.0,
        }
    }
}

fn finish(
    p: &QpProblem,
    canon: &Canonical,
    cand: Candidate,
    status: SolveStatus,
    iterations: usize,
) -> QpSolution {
    let n = p.n();
    let mut ineq_duals = vec![0.0; p.g.rows()];
    let mut eq_duals = vec![0.0; p.a.rows()];
    let mut lower_duals = vec![0.0; n];
    let mut upper_duals = vec![0.0; n];
    for (r, &kind) in canon.kinds.iter().enumerate() {
        let yr = cand.y[r];
        match kind {
            RowKind::Ineq(i) => ineq_duals[i] = yr,
            RowKind::Eq(i) => eq_duals[i] = yr,
            RowKind::Bound(j) => {
                if yr >= 0.0 {
                    upper_duals[j] = yr;
                } else {
                    lower_duals[j] = -yr;
                }
            }
        }
    }
    QpSolution {
        objective: p.objective(&cand.x),
        x: cand.x,
        status,
        iterations,
        ineq_duals,
        eq_duals,
        lower_duals,
        upper_duals,
        primal_residual: cand.quality.primal,
        dual_residual: cand.quality.dual,
    }
}

pub(super) fn solve(p: &QpProblem, tol: f64, max_iter: usize) -> QpSolution {
    let n = p.n();
    let canon = canonicalize(p);
    let k = canon.m.rows();

    // Crossed bounds are infeasible outright and admit no Farkas direction
    // in the single-multiplier form used below, so reject them here.
    for r in 0..k {
        if canon.l[r] > canon.u[r] {
            let x = vec![0.0; n];
            let y = vec![0.0; k];
            let quality = assess(p, &canon, &x, &y);
            return finish(p, &canon, Candidate { x, y, quality }, SolveStatus::Infeasible, 0);
        }
    }

    let mut qs = p.q.clone();
    let mut cs = p.c.clone();
    let mut ms = canon.m.clone();
    let mut ls = canon.l.clone();
    let mut us = canon.u.clone();
    let sc = scaling::ruiz(&mut qs, &mut cs, &mut ms, &mut ls, &mut us);

    let mut rho_bar = RHO_INIT;
    let rho_vec = |bar: f64, canon: &Canonical| -> Vec<f64> {
        canon
            .kinds
            .iter()
            .map(|kind| {
                let r = match kind {
                    RowKind::Eq(_) => bar * RHO_EQ_FACTOR,
                    _ => bar,
                };
                r.clamp(RHO_MIN, RHO_MAX)
            })
            .collect()
    };
    let mut rho = rho_vec(rho_bar, &canon);
    let mut factor = build_kkt(&qs, &ms, &rho);

    let mut x = vec![0.0; n];
    let mut z: Vec<f64> = (0..k).map(|r| 0.0f64.max(ls[r]).min(us[r])).collect();
    let mut y = vec![0.0; k];
    let mut y_prev = vec![0.0; k];
    let mut dy = vec![0.0; k];

    let mut rhs = vec![0.0; n + k];
    let mut zt = vec![0.0; k];
    let mut incumbent: Option<Candidate> = None;
    let mut last_polish = 0usize;
    let mut iterations = 0usize;
    let mut status = SolveStatus::MaxIterations;

    // Unscale the current iterate into a candidate.
    let unscale = |x: &[f64], y: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let xu: Vec<f64> = x.iter().zip(&sc.d).map(|(&v, &d)| v * d).collect();
        let yu: Vec<f64> = y.iter().zip(&sc.e).map(|(&v, &e)| v * e / sc.gamma).collect();
        (xu, yu)
    };

    'outer: for iter in 1..=max_iter {
        iterations = iter;
        y_prev.copy_from_slice(&y);

        for j in 0..n {
            rhs[j] = SIGMA * x[j] - cs[j];
        }
        for r in 0..k {
            rhs[n + r] = z[r] - y[r] / rho[r];
        }
        factor.solve(&mut rhs);
        for r in 0..k {
            zt[r] = z[r] + (rhs[n + r] - y[r]) / rho[r];
        }
        for j in 0..n {
            x[j] = RELAXATION * rhs[j] + (1.0 - RELAXATION) * x[j];
        }
        for r in 0..k {
            let v = RELAXATION * zt[r] + (1.0 - RELAXATION) * z[r];
            let znew = (v + y[r] / rho[r]).max(ls[r]).min(us[r]);
            y[r] += rho[r] * (v - znew);
            z[r] = znew;
        }
        for r in 0..k {
            dy[r] = y[r] - y_prev[r];
        }

        if iter % CHECK_INTERVAL != 0 && iter != max_iter {
            continue;
        }

        let (xu, yu) = unscale(&x, &y);
        let quality = assess(p, &canon, &xu, &yu);
        let better =
            incumbent.as_ref().is_none_or(|c| quality.composite() < c.quality.composite());
        if better {
            incumbent = Some(Candidate { x: xu.clone(), y: yu.clone(), quality });
        }

        let near = quality.primal <= EARLY_POLISH_FACTOR * tol && quality.dual <= EARLY_POLISH_FACTOR * tol;
        if near && (iter - last_polish >= 4 * CHECK_INTERVAL || quality.meets(tol) || iter == max_iter) {
            last_polish = iter;
            if let Some(pol) = polish(p, &canon, &xu, &yu) {
                let best = incumbent.as_ref().expect("incumbent set above");
                if pol.quality.composite() < best.quality.composite() {
                    incumbent = Some(pol);
                }
            }
        }
        if incumbent.as_ref().is_some_and(|c| c.quality.meets(tol)) {
            status = SolveStatus::Optimal;
            break 'outer;
        }

        let dyu: Vec<f64> = dy.iter().zip(&sc.e).map(|(&v, &e)| v * e / sc.gamma).collect();
        if primal_infeasibility_certificate(&canon, &dyu) {
            status = SolveStatus::Infeasible;
            break 'outer;
        }

        if iter != max_iter {
            // Adaptive penalty from the scaled residual balance.
            let mut msx = vec![0.0; k];
            ms.matvec(&x, &mut msx);
            let mut rp = 0.0f64;
            let mut den_p = 1e-10f64;
            for r in 0..k {
                rp = rp.max((msx[r] - z[r]).abs());
                den_p = den_p.max(msx[r].abs()).max(z[r].abs());
            }
            let mut grad = vec![0.0; n];
            qs.matvec(&x, &mut grad);
            let mut den_d = 1e-10f64.max(norm_inf(&grad)).max(norm_inf(&cs));
            let mut mty = vec![0.0; n];
            ms.matvec_t_acc(&y, 1.0, &mut mty);
            den_d = den_d.max(norm_inf(&mty));
            for j in 0..n {
                grad[j] += cs[j] + mty[j];
            }
            let rd = norm_inf(&grad);
            let ratio = math::sqrt((rp / den_p) / (rd / den_d).max(1e-14));
            let proposal = (rho_bar * ratio).clamp(RHO_MIN, RHO_MAX);
            if proposal > 5.0 * rho_bar || proposal < rho_bar / 5.0 {
                rho_bar = proposal;
                rho = rho_vec(rho_bar, &canon);
                factor = build_kkt(&qs, &ms, &rho);
            }
        }
    }

    let cand = incumbent.unwrap_or_else(|| {
        let (xu, yu) = unscale(&x, &y);
        let quality = assess(p, &canon, &xu, &yu);
        Candidate { x: xu, y: yu, quality }
    });
    if status == SolveStatus::MaxIterations && cand.quality.meets(tol) {
        status = SolveStatus::Optimal;
    }
    finish(p, &canon, cand, status, iterations)
}
