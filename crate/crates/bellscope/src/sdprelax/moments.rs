//! Moment-matrix relaxations at local levels 1–3 and their reduction to the solver's form.

use super::ipm::{self, IpmSettings, RMat, RVec, SdpData, SolverStatus};
use super::words::{Monomial, Party, Polynomial, Word};
use super::SdpError;
use crate::corrgeom::{all_cells, BellFunctional, ZeroPattern};
use crate::linalg::null_space_real;
use crate::qstrategy::{expectation, Strategy};
use serde::Serialize;
use std::collections::HashMap;

/// Sparse affine function `constant + Σ c_k y_k` of the moment vector.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearForm {
    pub constant: f64,
    pub coeffs: Vec<(usize, f64)>,
}

impl LinearForm {
    pub fn evaluate(&self, y: &[f64]) -> f64 {
        self.constant + self.coeffs.iter().map(|&(k, c)| c * y[k]).sum::<f64>()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Sense {
    Maximize,
    Minimize,
}

/// Constraint on the relaxed behavior.
#[derive(Clone, Debug)]
pub enum Constraint {
    Equal(Polynomial, f64),
    AtMost(Polynomial, f64),
    AtLeast(Polynomial, f64),
    /// Every listed cell at most `eps`; `eps = 0` restricts to the matching face exactly.
    Zeros {
        pattern: ZeroPattern,
        eps: f64,
    },
}

/// `P(a,b|x,y) = (1 + (−1)ᵃ A_x)(1 + (−1)ᵇ B_y)/4`.
pub fn cell_polynomial(a: usize, b: usize, x: usize, y: usize) -> Polynomial {
    let sa = if a == 0 { 1.0 } else { -1.0 };
    let sb = if b == 0 { 1.0 } else { -1.0 };
    let pa = Polynomial::constant(1.0).add(&Polynomial::letter(Party::A, x, sa));
    let pb = Polynomial::constant(1.0).add(&Polynomial::letter(Party::B, y, sb));
    pa.mul(&pb).scale(0.25)
}

/// `Σ f(a,b,x,y) P(a,b|x,y)` as a polynomial in the observables.
pub fn bell_polynomial(f: &BellFunctional) -> Polynomial {
    let mut out = Polynomial::default();
    for (a, b, x, y) in all_cells() {
        let coeff = f.coefficients[crate::corrgeom::cell(a, b, x, y)];
        if coeff != 0.0 {
            out = out.add(&cell_polynomial(a, b, x, y).scale(coeff));
        }
    }
    out
}

/// Moment matrix indexed by `u_A ⊗ u_B` with every word of length at most `level` on
/// each side, plus optional extra rows.
#[derive(Clone, Debug)]
pub struct RelaxationProblem {
    level: usize,
    rows: Vec<Monomial>,
    row_index: HashMap<Monomial, usize>,
    monomials: Vec<Monomial>,
    var_index: HashMap<Monomial, usize>,
    /// Variable id of each moment-matrix entry, row-major.
    entries: Vec<usize>,
    equalities: Vec<(LinearForm, f64)>,
    /// `form(y) ≤ bound`.
    inequalities: Vec<(LinearForm, f64)>,
    kernel: Vec<RVec>,
}

/// Solver output mapped back to moments.
#[derive(Clone, Debug, Serialize)]
pub struct SdpSolution {
    pub status: SolverStatus,
    /// Certified bound: upper for maximization, lower for minimization.
    pub value: f64,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub relative_gap: f64,
    pub iterations: usize,
    /// Moment vector at the final iterate, indexed like [`RelaxationProblem::monomials`].
    pub moments: Vec<f64>,
    #[serde(skip)]
    pub moment_matrix: RMat,
    /// Dual certificate of the conic form.
    #[serde(skip)]
    pub certificate: RMat,
    pub min_eigenvalue: f64,
}

impl RelaxationProblem {
    pub fn new(level: usize) -> Result<Self, SdpError> {
        Self::with_extra_rows(level, &[])
    }

    pub fn with_extra_rows(level: usize, extra: &[Monomial]) -> Result<Self, SdpError> {
        if !(1..=3).contains(&level) {
            return Err(SdpError::UnsupportedLevel(level));
        }
        let words = Word::up_to(level);
        let mut rows: Vec<Monomial> = Vec::new();
        for wa in &words {
            for wb in &words {
                rows.push(Monomial::new(*wa, *wb));
            }
        }
        for m in extra {
            if !rows.contains(m) {
                rows.push(*m);
            }
        }
        let row_index = rows.iter().enumerate().map(|(i, m)| (*m, i)).collect();
        let mut monomials = vec![Monomial::IDENTITY];
        let mut var_index: HashMap<Monomial, usize> = HashMap::from([(Monomial::IDENTITY, 0)]);
        let mut entries = Vec::with_capacity(rows.len() * rows.len());
        for ri in &rows {
            for rj in &rows {
                let key = ri.adjoint().mul(rj).canonical();
                let next = monomials.len();
                let id = *var_index.entry(key).or_insert(next);
                if id == next {
                    monomials.push(key);
                }
                entries.push(id);
            }
        }
        Ok(RelaxationProblem {
            level,
            rows,
            row_index,
            monomials,
            var_index,
            entries,
            equalities: Vec::new(),
            inequalities: Vec::new(),
            kernel: Vec::new(),
        })
    }

    /// Builds a relaxation and applies `constraints` in order.
    pub fn build(level: usize, constraints: &[Constraint]) -> Result<Self, SdpError> {
        let mut prob = Self::new(level)?;
        for c in constraints {
            prob.add(c)?;
        }
        Ok(prob)
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Monomial] {
        &self.rows
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn variable(&self, m: &Monomial) -> Option<usize> {
        self.var_index.get(&m.canonical()).copied()
    }

    pub fn linear_form(&self, p: &Polynomial) -> Result<LinearForm, SdpError> {
        let mut form = LinearForm::default();
        for (m, &c) in p.terms() {
            let k = self
                .variable(m)
                .ok_or_else(|| SdpError::MomentOutOfRange(m.to_string()))?;
            if k == 0 {
                form.constant += c;
            } else {
                form.coeffs.push((k, c));
            }
        }
        Ok(form)
    }

    pub fn add(&mut self, c: &Constraint) -> Result<(), SdpError> {
        match c {
            Constraint::Equal(p, v) => {
                let f = self.linear_form(p)?;
                self.equalities.push((f, *v));
            }
            Constraint::AtMost(p, v) => {
                let f = self.linear_form(p)?;
                self.inequalities.push((f, *v));
            }
            Constraint::AtLeast(p, v) => {
                let f = self.linear_form(&p.scale(-1.0))?;
                self.inequalities.push((f, -v));
            }
            Constraint::Zeros { pattern, eps } => self.add_zero_pattern(pattern, *eps)?,
        }
        Ok(())
    }

    pub fn add_zero_pattern(&mut self, pattern: &ZeroPattern, eps: f64) -> Result<(), SdpError> {
        for (a, b, x, y) in pattern.cells() {
            if eps == 0.0 {
                self.restrict_to_zero_face(a, b, x, y);
            } else {
                self.add(&Constraint::AtMost(cell_polynomial(a, b, x, y), eps))?;
            }
        }
        Ok(())
    }

    /// `P(a,b|x,y) = 0` forces `(w_A Π_{a|x} ⊗ w_B Π_{b|y})|ψ⟩ = 0` for all words, which
    /// gives kernel vectors of the moment matrix whenever the products are rows.
    fn restrict_to_zero_face(&mut self, a: usize, b: usize, x: usize, y: usize) {
        let sa = if a == 0 { 1.0 } else { -1.0 };
        let sb = if b == 0 { 1.0 } else { -1.0 };
        let n = self.rows.len();
        for r in self.rows.clone() {
            let wa_x = r.a.mul(&Word::letter(x));
            let wb_y = r.b.mul(&Word::letter(y));
            let idx = [
                (Monomial::new(r.a, r.b), 0.25),
                (Monomial::new(wa_x, r.b), 0.25 * sa),
                (Monomial::new(r.a, wb_y), 0.25 * sb),
                (Monomial::new(wa_x, wb_y), 0.25 * sa * sb),
            ];
            if idx.iter().all(|(m, _)| self.row_index.contains_key(m)) {
                let mut k = RVec::zeros(n);
                for (m, c) in idx {
                    k[self.row_index[&m]] += c;
                }
                self.kernel.push(k);
            }
        }
    }

    /// Moment matrix for a moment vector.
    pub fn moment_matrix(&self, y: &[f64]) -> RMat {
        let n = self.rows.len();
        RMat::from_fn(n, n, |i, j| y[self.entries[i * n + j]])
    }

    /// Real parts of `⟨ψ| W_A ⊗ W_B |ψ⟩` for every variable, using `2M_{0|x} − 1` as the
    /// observables. The real part of a Hermitian PSD matrix is PSD, so complex strategies
    /// give feasible points too.
    pub fn exact_moments(&self, s: &Strategy) -> Vec<f64> {
        let coeff = s.state.coefficient_matrix();
        let obs_a = [s.observable_a(0), s.observable_a(1)];
        let obs_b = [s.observable_b(0), s.observable_b(1)];
        let product = |w: &Word, obs: &[crate::linalg::CMat; 2]| {
            let d = obs[0].nrows();
            w.letters()
                .iter()
                .fold(crate::linalg::identity(d), |acc, &x| acc * &obs[x])
        };
        self.monomials
            .iter()
            .map(|m| expectation(&coeff, &product(&m.a, &obs_a), &product(&m.b, &obs_b)).re)
            .collect()
    }

    /// Equality system `E y = f` in the full moment vector.
    fn equality_system(&self) -> (RMat, RVec) {
        let nv = self.monomials.len();
        let n = self.rows.len();
        let mut rows: Vec<(Vec<(usize, f64)>, f64)> = vec![(vec![(0, 1.0)], 1.0)];
        for (f, v) in &self.equalities {
            let mut coeffs = f.coeffs.clone();
            coeffs.push((0, f.constant));
            rows.push((coeffs, *v));
        }
        for k in &self.kernel {
            for i in 0..n {
                let coeffs: Vec<(usize, f64)> = (0..n)
                    .filter(|&j| k[j] != 0.0)
                    .map(|j| (self.entries[i * n + j], k[j]))
                    .collect();
                rows.push((coeffs, 0.0));
            }
        }
        let mut e = RMat::zeros(rows.len(), nv);
        let mut f = RVec::zeros(rows.len());
        for (r, (coeffs, v)) in rows.iter().enumerate() {
            for &(k, c) in coeffs {
                e[(r, k)] += c;
            }
            f[r] = *v;
        }
        (e, f)
    }

    fn pattern_matrix(&self, weights: &RVec) -> RMat {
        let n = self.rows.len();
        RMat::from_fn(n, n, |i, j| weights[self.entries[i * n + j]])
    }

    /// Optimizes `objective` over the relaxation.
    pub fn solve(&self, objective: &Polynomial, sense: Sense) -> Result<SdpSolution, SdpError> {
        self.solve_with(objective, sense, &IpmSettings::default())
    }

    pub fn solve_with(
        &self,
        objective: &Polynomial,
        sense: Sense,
        settings: &IpmSettings,
    ) -> Result<SdpSolution, SdpError> {
        let sign = match sense {
            Sense::Maximize => 1.0,
            Sense::Minimize => -1.0,
        };
        let obj = self.linear_form(objective)?;
        let nv = self.monomials.len();
        let mut cvec = RVec::zeros(nv);
        for &(k, c) in &obj.coeffs {
            cvec[k] += sign * c;
        }
        let offset_const = sign * obj.constant;

        // Affine parametrization y = y₀ + N z of the equality-constrained moments.
        // Eigen-decomposition of EᵀE splits moment space into the determined range and the
        // free null space; the spectral gap here is wide, so squaring the condition is harmless.
        let (e, f) = self.equality_system();
        let (vals, vecs) = crate::linalg::eigh_real(&(e.transpose() * &e));
        let cut = 1e-12 * vals.last().copied().unwrap_or(0.0).max(1.0);
        let etf = e.transpose() * &f;
        let mut y0 = RVec::zeros(nv);
        let mut free = Vec::new();
        for k in 0..nv {
            let v = vecs.column(k);
            if vals[k] > cut {
                y0 += v.scale(v.dot(&etf) / vals[k]);
            } else {
                free.push(v.into_owned());
            }
        }
        let null = if free.is_empty() {
            RMat::zeros(nv, 0)
        } else {
            RMat::from_columns(&free)
        };
        if (&e * &y0 - &f).norm() > 1e-8 * (1.0 + f.norm()) {
            return Ok(self.infeasible(nv));
        }

        // Face of the PSD cone containing every matrix annihilating the kernel vectors.
        let n = self.rows.len();
        let face = if self.kernel.is_empty() {
            RMat::identity(n, n)
        } else {
            let kmat = RMat::from_columns(&self.kernel);
            null_space_real(&kmat.transpose(), 1e-10)
        };
        if face.ncols() == 0 {
            return Ok(self.infeasible(nv));
        }

        let n_sdp = face.ncols();
        let n_lp = self.inequalities.len();
        let dim = n_sdp + n_lp;
        let block = |g: &RMat, lp: &[f64]| {
            let mut m = RMat::zeros(dim, dim);
            m.view_mut((0, 0), (n_sdp, n_sdp))
                .copy_from(&(face.transpose() * g * &face));
            for (l, v) in lp.iter().enumerate() {
                m[(n_sdp + l, n_sdp + l)] = *v;
            }
            m
        };
        let g0 = self.pattern_matrix(&y0);
        let lp0: Vec<f64> = self
            .inequalities
            .iter()
            .map(|(form, h)| h - form.evaluate(y0.as_slice()))
            .collect();
        let c = block(&g0, &lp0);
        let raw_a: Vec<RMat> = (0..null.ncols())
            .map(|k| {
                let dir = null.column(k).into_owned();
                let lp: Vec<f64> = self
                    .inequalities
                    .iter()
                    .map(|(form, _)| form.evaluate(dir.as_slice()) - form.constant)
                    .collect();
                -block(&self.pattern_matrix(&dir), &lp.iter().map(|v| -v).collect::<Vec<_>>())
            })
            .collect();
        let raw_b = null.transpose() * &cvec;
        let offset = offset_const + cvec.dot(&y0);

        // Directions invisible to the cone leave the objective unbounded or are dropped.
        let m_raw = raw_a.len();
        let gram = RMat::from_fn(m_raw, m_raw, |i, j| raw_a[i].dot(&raw_a[j]));
        let (vals, vecs) = crate::linalg::eigh_real(&gram);
        let top = vals.iter().cloned().fold(0.0, f64::max);
        let keep: Vec<usize> = (0..m_raw).filter(|&k| vals[k] > 1e-12 * top.max(1.0)).collect();
        for k in 0..m_raw {
            if !keep.contains(&k) && vecs.column(k).dot(&raw_b).abs() > 1e-9 {
                return Err(SdpError::UnboundedObjective);
            }
        }
        let basis = RMat::from_fn(m_raw, keep.len(), |i, j| vecs[(i, keep[j])]);
        let a: Vec<RMat> = (0..keep.len())
            .map(|j| {
                let mut acc = RMat::zeros(dim, dim);
                for (i, ai) in raw_a.iter().enumerate() {
                    if basis[(i, j)] != 0.0 {
                        acc += ai.scale(basis[(i, j)]);
                    }
                }
                acc
            })
            .collect();
        let b = basis.transpose() * &raw_b;

        let (status, primal, dual, gap, iterations, z, certificate) = if a.is_empty() {
            let ok = crate::linalg::eigh_real(&c).0.first().copied().unwrap_or(0.0) >= -1e-9;
            let status = if ok {
                SolverStatus::Converged
            } else {
                SolverStatus::Infeasible
            };
            (status, 0.0, 0.0, 0.0, 0, RVec::zeros(0), RMat::zeros(dim, dim))
        } else {
            let res = ipm::solve(&SdpData { c, a, b }, settings);
            (
                res.status,
                res.primal_objective,
                res.dual_objective,
                res.relative_gap,
                res.iterations,
                res.z,
                res.x,
            )
        };
        let y = &y0 + &null * (&basis * &z);
        let moments: Vec<f64> = y.iter().copied().collect();
        let moment_matrix = self.moment_matrix(&moments);
        let min_eigenvalue = crate::linalg::eigh_real(&moment_matrix).0[0];
        Ok(SdpSolution {
            status,
            value: sign * (primal + offset),
            primal_objective: sign * (primal + offset),
            dual_objective: sign * (dual + offset),
            relative_gap: gap,
            iterations,
            moments,
            moment_matrix,
            certificate,
            min_eigenvalue,
        })
    }

    fn infeasible(&self, nv: usize) -> SdpSolution {
        let n = self.rows.len();
        SdpSolution {
            status: SolverStatus::Infeasible,
            value: f64::NAN,
            primal_objective: f64::NAN,
            dual_objective: f64::NAN,
            relative_gap: f64::NAN,
            iterations: 0,
            moments: vec![f64::NAN; nv],
            moment_matrix: RMat::from_element(n, n, f64::NAN),
            certificate: RMat::zeros(0, 0),
            min_eigenvalue: f64::NAN,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corrgeom::{chsh_value, ClassLabel};
    use crate::qstrategy::{born, named_point, NamedPoint};
    use std::f64::consts::SQRT_2;

    #[test]
    fn sizes_per_level() {
        for (level, n) in [(1, 9), (2, 25), (3, 49)] {
            assert_eq!(RelaxationProblem::new(level).unwrap().size(), n);
        }
        assert!(RelaxationProblem::new(4).is_err());
    }

    #[test]
    fn exact_moments_reproduce_born() {
        let s = named_point(NamedPoint::Hardy).0.unwrap();
        let prob = RelaxationProblem::new(2).unwrap();
        let y = prob.exact_moments(&s);
        let c = born(&s);
        for (a, b, x, yy) in all_cells() {
            let form = prob.linear_form(&cell_polynomial(a, b, x, yy)).unwrap();
            assert!((form.evaluate(&y) - c.get(a, b, x, yy)).abs() < 1e-12);
        }
        let chsh = prob.linear_form(&bell_polynomial(&BellFunctional::chsh())).unwrap();
        assert!((chsh.evaluate(&y) - chsh_value(&c)).abs() < 1e-12);
        let g = prob.moment_matrix(&y);
        assert!(crate::linalg::eigh_real(&g).0[0] > -1e-12);
    }

    #[test]
    fn tsirelson_at_level_one() {
        let prob = RelaxationProblem::new(1).unwrap();
        let sol = prob
            .solve(&bell_polynomial(&BellFunctional::chsh()), Sense::Maximize)
            .unwrap();
        assert_eq!(sol.status, SolverStatus::Converged);
        assert!((sol.value - 2.0 * SQRT_2).abs() < 1e-6, "{}", sol.value);
        assert!(sol.relative_gap <= 1e-6);
    }

    #[test]
    fn class_2a_face() {
        let pattern = ClassLabel::TwoA.representative_pattern().unwrap();
        let chsh = bell_polynomial(&BellFunctional::chsh());
        for level in 1..=2 {
            let prob = RelaxationProblem::build(level, &[Constraint::Zeros { pattern, eps: 0.0 }]).unwrap();
            let sol = prob.solve(&chsh, Sense::Maximize).unwrap();
            assert_eq!(sol.status, SolverStatus::Converged, "level {level}");
            assert!((sol.value - 2.5).abs() < 1e-5, "level {level}: {}", sol.value);
        }
    }

    #[test]
    fn negative_slack_is_infeasible() {
        let pattern = ClassLabel::One.representative_pattern().unwrap();
        let prob = RelaxationProblem::build(1, &[Constraint::Zeros { pattern, eps: -1.0 }]).unwrap();
        let sol = prob
            .solve(&bell_polynomial(&BellFunctional::chsh()), Sense::Maximize)
            .unwrap();
        assert_eq!(sol.status, SolverStatus::Infeasible);
    }
}
