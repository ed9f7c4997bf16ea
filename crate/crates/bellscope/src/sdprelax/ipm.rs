//! Dense primal-dual interior-point method for small semidefinite programs.
//!
//! Standard pair, with all matrices real symmetric:
//!
//! ```text
//! (P)  min ⟨C, X⟩  s.t. ⟨A_i, X⟩ = b_i,  X ⪰ 0
//! (D)  max bᵀz     s.t. S = C − Σ z_i A_i ⪰ 0
//! ```
//!
//! Nesterov–Todd scaling with a Mehrotra predictor-corrector, infeasible start.
//! Linear inequalities ride along as 1×1 diagonal blocks of the same dense matrix.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SolverStatus {
    Converged,
    /// (D) has no feasible point; a primal ray certifies it.
    Infeasible,
    /// (D) is unbounded above.
    Unbounded,
    MaxIterations,
    NumericalFailure,
}

impl SolverStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolverStatus::Converged => "converged",
            SolverStatus::Infeasible => "infeasible",
            SolverStatus::Unbounded => "unbounded",
            SolverStatus::MaxIterations => "max_iterations",
            SolverStatus::NumericalFailure => "numerical_failure",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct IpmSettings {
    pub max_iter: usize,
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub step_fraction: f64,
}

impl Default for IpmSettings {
    fn default() -> Self {
        IpmSettings {
            max_iter: 200,
            gap_tol: 1e-7,
            feas_tol: 1e-8,
            step_fraction: 0.98,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SdpData {
    pub c: RMat,
    pub a: Vec<RMat>,
    pub b: RVec,
}

/// Last iterate and its quality measures.
#[derive(Clone, Debug)]
pub struct IpmResult {
    pub status: SolverStatus,
    pub x: RMat,
    pub s: RMat,
    pub z: RVec,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// `|p − d| / (1 + |p| + |d|)`.
    pub relative_gap: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub iterations: usize,
}

fn inner(a: &RMat, b: &RMat) -> f64 {
    a.dot(b)
}

fn sym(m: &RMat) -> RMat {
    (m + m.transpose()).scale(0.5)
}

fn lower_cholesky(m: &RMat) -> Option<RMat> {
    nalgebra::Cholesky::new(sym(m)).map(|c| c.l())
}

fn min_sym_eig(m: &RMat) -> f64 {
    sym(m)
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Largest `α` keeping `L Lᵀ + α Δ` positive semidefinite.
fn max_step(l: &RMat, delta: &RMat) -> f64 {
    let Some(t) = l.solve_lower_triangular(delta) else {
        return 0.0;
    };
    let Some(t) = l.solve_lower_triangular(&t.transpose()) else {
        return 0.0;
    };
    let lam = min_sym_eig(&t);
    if lam >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lam
    }
}

struct Scaling {
    g: RMat,
    lambda: RVec,
}

/// `G` with `Gᵀ S G = G⁻¹ X G⁻ᵀ = Λ` diagonal.
fn nt_scaling(lx: &RMat, ls: &RMat) -> Option<Scaling> {
    let svd = (ls.transpose() * lx).svd(false, true);
    let v = svd.v_t?.transpose();
    let lambda = svd.singular_values;
    if lambda.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return None;
    }
    let inv_sqrt = RMat::from_diagonal(&lambda.map(|l| 1.0 / l.sqrt()));
    let g = lx * &v * &inv_sqrt;
    Some(Scaling { g, lambda })
}

/// Solves `(Λ D + D Λ)/2 = R`.
fn lyapunov(lambda: &RVec, r: &RMat) -> RMat {
    RMat::from_fn(r.nrows(), r.ncols(), |i, j| 2.0 * r[(i, j)] / (lambda[i] + lambda[j]))
}

struct Direction {
    dx: RMat,
    ds: RMat,
    dz: RVec,
    dx_scaled: RMat,
    ds_scaled: RMat,
}

pub fn solve(data: &SdpData, settings: &IpmSettings) -> IpmResult {
    let n = data.c.nrows();
    let m = data.a.len();
    let c_norm = data.c.norm();
    let b_norm = data.b.norm();
    let a_max = data.a.iter().map(|a| a.norm()).fold(0.0, f64::max);

    let nf = n as f64;
    let xi = (0..m)
        .map(|i| nf * (1.0 + data.b[i].abs()) / (1.0 + data.a[i].norm()))
        .fold(nf.sqrt().max(10.0), f64::max);
    let eta = c_norm.max(a_max).max(nf.sqrt()).max(10.0);
    let mut x = RMat::identity(n, n).scale(xi);
    let mut s = RMat::identity(n, n).scale(eta);
    let mut z = RVec::zeros(m);

    let mut status = SolverStatus::MaxIterations;
    let mut iterations = 0;
    let mut measures = (0.0, 0.0, f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut stalls = 0;

    for k in 0..=settings.max_iter {
        iterations = k;
        let ax = RVec::from_fn(m, |i, _| inner(&data.a[i], &x));
        let rp = &data.b - &ax;
        let mut rd = &data.c - &s;
        for i in 0..m {
            rd -= data.a[i].scale(z[i]);
        }
        let pobj = inner(&data.c, &x);
        let dobj = data.b.dot(&z);
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        let pinf = rp.norm() / (1.0 + b_norm);
        let dinf = rd.norm() / (1.0 + c_norm);
        measures = (pobj, dobj, gap, pinf, dinf);

        if gap <= settings.gap_tol && pinf <= settings.feas_tol && dinf <= settings.feas_tol {
            status = SolverStatus::Converged;
            break;
        }
        // A primal ray with A(X) ≈ 0 and ⟨C, X⟩ < 0 certifies that (D) is empty.
        let x_norm = x.norm();
        if pobj < 0.0 && -pobj > 1e8 * ax.norm().max(1e-300) && -pobj > 1e-8 * x_norm {
            status = SolverStatus::Infeasible;
            break;
        }
        if dobj > 1e10 * (1.0 + c_norm) && dinf <= 1e-6 {
            status = SolverStatus::Unbounded;
            break;
        }
        if k == settings.max_iter {
            break;
        }

        let (Some(lx), Some(ls)) = (lower_cholesky(&x), lower_cholesky(&s)) else {
            status = SolverStatus::NumericalFailure;
            break;
        };
        let Some(sc) = nt_scaling(&lx, &ls) else {
            status = SolverStatus::NumericalFailure;
            break;
        };
        let gt = sc.g.transpose();
        let scaled_a: Vec<RMat> = data.a.iter().map(|a| &gt * a * &sc.g).collect();
        let rd_scaled = &gt * &rd * &sc.g;
        let mut schur = RMat::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                let v = inner(&scaled_a[i], &scaled_a[j]);
                schur[(i, j)] = v;
                schur[(j, i)] = v;
            }
        }
        let chol = match nalgebra::Cholesky::new(schur.clone()) {
            Some(ch) => ch,
            None => {
                let reg = 1e-14 * schur.trace().max(1.0);
                match nalgebra::Cholesky::new(schur + RMat::identity(m, m).scale(reg)) {
                    Some(ch) => ch,
                    None => {
                        status = SolverStatus::NumericalFailure;
                        break;
                    }
                }
            }
        };
        let mu = sc.lambda.iter().map(|l| l * l).sum::<f64>() / nf;

        let direction = |r: &RMat| -> Direction {
            let zmat = lyapunov(&sc.lambda, r);
            let base = &zmat - &rd_scaled;
            let rhs = RVec::from_fn(m, |i, _| rp[i] - inner(&scaled_a[i], &base));
            let dz = chol.solve(&rhs);
            let mut ds_scaled = rd_scaled.clone();
            let mut ds = rd.clone();
            for i in 0..m {
                ds_scaled -= scaled_a[i].scale(dz[i]);
                ds -= data.a[i].scale(dz[i]);
            }
            let dx_scaled = &zmat - &ds_scaled;
            let dx = sym(&(&sc.g * &dx_scaled * &gt));
            Direction {
                dx,
                ds: sym(&ds),
                dz,
                dx_scaled,
                ds_scaled,
            }
        };
        let steps = |d: &Direction| -> (f64, f64) {
            let ap = (settings.step_fraction * max_step(&lx, &d.dx)).min(1.0);
            let ad = (settings.step_fraction * max_step(&ls, &d.ds)).min(1.0);
            (ap, ad)
        };

        let lambda_sq = RMat::from_diagonal(&sc.lambda.map(|l| l * l));
        let affine = direction(&(-&lambda_sq));
        let (ap, ad) = steps(&affine);
        let mu_aff = inner(&(&x + affine.dx.scale(ap)), &(&s + affine.ds.scale(ad))) / nf;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        let cross = sym(&(&affine.dx_scaled * &affine.ds_scaled));
        let r = RMat::identity(n, n).scale(sigma * mu) - &lambda_sq - cross;
        let corrected = direction(&r);
        let (ap, ad) = steps(&corrected);
        if ap < 1e-12 && ad < 1e-12 {
            stalls += 1;
            if stalls >= 3 {
                status = SolverStatus::NumericalFailure;
                break;
            }
        } else {
            stalls = 0;
        }
        x = sym(&(&x + corrected.dx.scale(ap)));
        s = sym(&(&s + corrected.ds.scale(ad)));
        z += corrected.dz.scale(ad);
    }

    let (primal_objective, dual_objective, relative_gap, primal_infeasibility, dual_infeasibility) = measures;
    IpmResult {
        status,
        x,
        s,
        z,
        primal_objective,
        dual_objective,
        relative_gap,
        primal_infeasibility,
        dual_infeasibility,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(n: usize, i: usize, j: usize) -> RMat {
        let mut m = RMat::zeros(n, n);
        m[(i, j)] = 1.0;
        m[(j, i)] = 1.0;
        m
    }

    #[test]
    fn max_eigenvalue_as_sdp() {
        // max z s.t. C − z·I ⪰ 0 gives λ_min(C).
        let c = RMat::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0]);
        let data = SdpData {
            c: c.clone(),
            a: vec![RMat::identity(3, 3)],
            b: RVec::from_vec(vec![1.0]),
        };
        let res = solve(&data, &IpmSettings::default());
        assert_eq!(res.status, SolverStatus::Converged);
        assert!((res.dual_objective - min_sym_eig(&c)).abs() < 1e-6);
        assert!(res.relative_gap <= 1e-7);
    }

    #[test]
    fn bounded_off_diagonal() {
        // [[1, z],[z, 1]] ⪰ 0, max z = 1.
        let data = SdpData {
            c: RMat::identity(2, 2),
            a: vec![-e(2, 0, 1)],
            b: RVec::from_vec(vec![1.0]),
        };
        let res = solve(&data, &IpmSettings::default());
        assert_eq!(res.status, SolverStatus::Converged);
        assert!((res.primal_objective - 1.0).abs() < 1e-6);
    }

    #[test]
    fn detects_empty_feasible_set() {
        // S = diag(−1 − 0·z, 1) can never be PSD.
        let mut c = RMat::identity(2, 2);
        c[(0, 0)] = -1.0;
        let data = SdpData {
            c,
            a: vec![e(2, 0, 1)],
            b: RVec::from_vec(vec![1.0]),
        };
        let res = solve(&data, &IpmSettings::default());
        assert_eq!(res.status, SolverStatus::Infeasible, "{res:?}");
    }
}
