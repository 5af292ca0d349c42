//! Clarabel adapter for [`ConicProblem`].
//!
//! Each `d x d` Hermitian variable is stored as `d²` real coordinates:
//! the diagonal, then `(Re, Im)` of every strictly upper entry. A 2x2
//! Hermitian block `[[a, c+id], [c-id, b]]` is PSD exactly when
//! `(a+b, a-b, 2c, 2d)` lies in the 4-dimensional second-order cone, so
//! qubit-sized PSD constraints map onto SOCs without any PSD-cone support.
//! 1x1 blocks become nonnegativity rows. Larger blocks are rejected.

use std::time::Instant;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use num_complex::Complex64;

use super::problem::{ConicProblem, MatrixExpr, Relation, ScalarExpr, Sense};
use super::{ConicSolver, Solution, SolveStatus};
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

/// Post-hoc acceptance thresholds for an `optimal` verdict.
pub const MAX_CONSTRAINT_RESIDUAL: f64 = 1e-6;
pub const MIN_PSD_RESIDUAL: f64 = -1e-7;

#[derive(Debug, Clone)]
pub struct ClarabelSolver {
    /// Requested feasibility and optimality tolerance.
    pub tol: f64,
    pub max_iter: u32,
    pub verbose: bool,
}

impl Default for ClarabelSolver {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200,
            verbose: false,
        }
    }
}

impl ClarabelSolver {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

/// Real-coordinate layout of all matrix variables.
struct Layout {
    offsets: Vec<usize>,
    dims: Vec<usize>,
    n: usize,
}

impl Layout {
    fn new(problem: &ConicProblem) -> Self {
        let mut offsets = Vec::with_capacity(problem.vars.len());
        let mut n = 0;
        for v in &problem.vars {
            offsets.push(n);
            n += v.dim * v.dim;
        }
        Self {
            offsets,
            dims: problem.vars.iter().map(|v| v.dim).collect(),
            n,
        }
    }

    fn decode(&self, x: &[f64]) -> Vec<ComplexMatrix> {
        self.offsets
            .iter()
            .zip(&self.dims)
            .map(|(&off, &d)| from_coords(d, &x[off..off + d * d]))
            .collect()
    }
}

/// Position of coordinate `(i, j)`, `i <= j`, within a `d x d` block.
/// Returns `(re_index, im_index)`; diagonal entries have no imaginary slot.
fn coord_index(d: usize, i: usize, j: usize) -> (usize, Option<usize>) {
    if i == j {
        return (i, None);
    }
    // strictly upper entries in row-major order
    let mut k = 0;
    for r in 0..i {
        k += d - r - 1;
    }
    k += j - i - 1;
    (d + 2 * k, Some(d + 2 * k + 1))
}

fn to_coords(m: &ComplexMatrix) -> Vec<f64> {
    let d = m.dim();
    let mut c = vec![0.0; d * d];
    for i in 0..d {
        for j in i..d {
            let (re, im) = coord_index(d, i, j);
            let z = if i == j {
                Complex64::new(m.get(i, i).re, 0.0)
            } else {
                (m.get(i, j) + m.get(j, i).conj()) * 0.5
            };
            c[re] = z.re;
            if let Some(im) = im {
                c[im] = z.im;
            }
        }
    }
    c
}

fn from_coords(d: usize, c: &[f64]) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(d);
    for i in 0..d {
        for j in i..d {
            let (re, im) = coord_index(d, i, j);
            if i == j {
                m.set(i, i, Complex64::new(c[re], 0.0));
            } else {
                let z = Complex64::new(c[re], c[im.unwrap()]);
                m.set(i, j, z);
                m.set(j, i, z.conj());
            }
        }
    }
    m
}

/// Multiplier `Y` of a 2x2 block from its SOC dual `z`, chosen so that
/// `Re tr(Y E) = z · T coords(E)`.
fn soc_dual_to_hermitian(z: &[f64]) -> ComplexMatrix {
    let off = Complex64::new(z[2], z[3]);
    let mut y = ComplexMatrix::diag(&[z[0] + z[1], z[0] - z[1]]);
    y.set(0, 1, off);
    y.set(1, 0, off.conj());
    y
}

/// Gradient of `X -> Re tr(C X)` in coordinates of `X`.
fn functional_coords(c: &ComplexMatrix) -> Vec<f64> {
    let d = c.dim();
    let mut g = vec![0.0; d * d];
    for i in 0..d {
        for j in i..d {
            let (re, im) = coord_index(d, i, j);
            if i == j {
                g[re] = c.get(i, i).re;
            } else {
                g[re] = c.get(j, i).re + c.get(i, j).re;
                g[im.unwrap()] = c.get(i, j).im - c.get(j, i).im;
            }
        }
    }
    g
}

/// Sparse row accumulator for `A` in `Ax + s = b`.
#[derive(Default)]
struct Rows {
    i: Vec<usize>,
    j: Vec<usize>,
    v: Vec<f64>,
    b: Vec<f64>,
    cones: Vec<SupportedConeT<f64>>,
}

impl Rows {
    fn m(&self) -> usize {
        self.b.len()
    }

    fn push_row(&mut self, entries: impl IntoIterator<Item = (usize, f64)>, rhs: f64) {
        let r = self.m();
        for (col, val) in entries {
            if val != 0.0 {
                self.i.push(r);
                self.j.push(col);
                self.v.push(val);
            }
        }
        self.b.push(rhs);
    }

    fn push_cone(&mut self, cone: SupportedConeT<f64>) {
        match (self.cones.last_mut(), &cone) {
            (Some(SupportedConeT::ZeroConeT(n)), SupportedConeT::ZeroConeT(k)) => *n += k,
            (Some(SupportedConeT::NonnegativeConeT(n)), SupportedConeT::NonnegativeConeT(k)) => {
                *n += k
            }
            _ => self.cones.push(cone),
        }
    }
}

fn scalar_row(layout: &Layout, e: &ScalarExpr, sign: f64) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    for (v, c) in &e.terms {
        let off = layout.offsets[v.0];
        out.extend(
            functional_coords(c)
                .into_iter()
                .enumerate()
                .map(|(k, g)| (off + k, sign * g)),
        );
    }
    out
}

/// Per-coordinate rows `(entries, constant)` of a matrix expression.
fn matrix_rows(layout: &Layout, e: &MatrixExpr) -> Vec<(Vec<(usize, f64)>, f64)> {
    let d = e.dim;
    let constant = e
        .constant
        .as_ref()
        .map(to_coords)
        .unwrap_or_else(|| vec![0.0; d * d]);
    (0..d * d)
        .map(|k| {
            let entries = e
                .terms
                .iter()
                .map(|(v, a)| (layout.offsets[v.0] + k, *a))
                .collect();
            (entries, constant[k])
        })
        .collect()
}

fn map_status(s: SolverStatus) -> SolveStatus {
    match s {
        SolverStatus::Solved => SolveStatus::Optimal,
        SolverStatus::AlmostSolved => SolveStatus::Inaccurate,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
            SolveStatus::Infeasible
        }
        _ => SolveStatus::Failed,
    }
}

impl ConicSolver for ClarabelSolver {
    fn solve(&self, problem: &ConicProblem) -> Result<Solution> {
        problem.validate()?;
        if let Some(big) = problem.psd_constraints.iter().find(|c| c.dim > 2) {
            return Err(Error::InvalidProblem(format!(
                "{0}x{0} PSD block: this backend supports blocks up to 2x2",
                big.dim
            )));
        }
        let start = Instant::now();
        let layout = Layout::new(problem);
        let mut rows = Rows::default();

        // zero cone: scalar and matrix equalities
        let mut n_eq = 0;
        for c in problem
            .scalar_constraints
            .iter()
            .filter(|c| c.relation == Relation::Eq)
        {
            rows.push_row(scalar_row(&layout, &c.expr, 1.0), c.rhs - c.expr.constant);
            n_eq += 1;
        }
        for c in &problem.matrix_equalities {
            let rhs = to_coords(&c.rhs);
            for (k, (entries, constant)) in matrix_rows(&layout, &c.expr).into_iter().enumerate() {
                rows.push_row(entries, rhs[k] - constant);
                n_eq += 1;
            }
        }
        if n_eq > 0 {
            rows.push_cone(SupportedConeT::ZeroConeT(n_eq));
        }

        // nonnegative cone: scalar inequalities
        for c in &problem.scalar_constraints {
            match c.relation {
                Relation::Eq => continue,
                Relation::Le => {
                    rows.push_row(scalar_row(&layout, &c.expr, 1.0), c.rhs - c.expr.constant)
                }
                Relation::Ge => {
                    rows.push_row(scalar_row(&layout, &c.expr, -1.0), c.expr.constant - c.rhs)
                }
            }
            rows.push_cone(SupportedConeT::NonnegativeConeT(1));
        }

        // PSD blocks: s = T (M x + k), i.e. A = -T M, b = T k
        let mut psd_rows = Vec::with_capacity(problem.psd_constraints.len());
        for c in &problem.psd_constraints {
            psd_rows.push(rows.m());
            let coord = matrix_rows(&layout, c);
            match c.dim {
                1 => {
                    let (entries, k) = &coord[0];
                    rows.push_row(entries.iter().map(|&(j, a)| (j, -a)), *k);
                    rows.push_cone(SupportedConeT::NonnegativeConeT(1));
                }
                2 => {
                    // coordinates: [x00, x11, re01, im01]
                    let t: [[f64; 4]; 4] = [
                        [1.0, 1.0, 0.0, 0.0],
                        [1.0, -1.0, 0.0, 0.0],
                        [0.0, 0.0, 2.0, 0.0],
                        [0.0, 0.0, 0.0, 2.0],
                    ];
                    for trow in &t {
                        let mut entries = Vec::new();
                        let mut rhs = 0.0;
                        for (k, &tk) in trow.iter().enumerate() {
                            if tk == 0.0 {
                                continue;
                            }
                            entries.extend(coord[k].0.iter().map(|&(j, a)| (j, -tk * a)));
                            rhs += tk * coord[k].1;
                        }
                        rows.push_row(entries, rhs);
                    }
                    rows.push_cone(SupportedConeT::SecondOrderConeT(4));
                }
                _ => unreachable!(),
            }
        }

        let n = layout.n;
        let sign = match problem.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let mut q = vec![0.0; n];
        for (j, g) in scalar_row(&layout, &problem.objective, sign) {
            q[j] += g;
        }
        let p = CscMatrix::zeros((n, n));
        let a = CscMatrix::new_from_triplets(rows.m(), n, rows.i, rows.j, rows.v);
        let settings = DefaultSettingsBuilder::default()
            .verbose(self.verbose)
            .max_iter(self.max_iter)
            .tol_gap_abs(self.tol)
            .tol_gap_rel(self.tol)
            .tol_feas(self.tol)
            .presolve_enable(true)
            .build()
            .map_err(|e| Error::InvalidProblem(format!("solver settings: {e}")))?;
        let mut solver = DefaultSolver::new(&p, &q, &a, &rows.b, &rows.cones, settings)
            .map_err(|e| Error::InvalidProblem(format!("solver setup: {e}")))?;
        solver.solve();

        let mut status = map_status(solver.solution.status);
        let values = layout.decode(&solver.solution.x);
        let objective = problem.objective_value(&values);
        let residuals = problem.residuals(&values)?;
        let z = &solver.solution.z;
        let psd_duals = problem
            .psd_constraints
            .iter()
            .zip(&psd_rows)
            .map(|(c, &r)| match c.dim {
                1 => ComplexMatrix::diag(&[z[r]]),
                _ => soc_dual_to_hermitian(&z[r..r + 4]),
            })
            .collect();
        if status == SolveStatus::Optimal
            && (residuals.max_constraint > MAX_CONSTRAINT_RESIDUAL
                || residuals.min_psd_eigenvalue < MIN_PSD_RESIDUAL)
        {
            log::debug!("downgrading optimal verdict: {residuals:?}");
            status = SolveStatus::Inaccurate;
        }
        Ok(Solution {
            status,
            objective,
            values,
            psd_duals,
            residuals,
            iterations: solver.solution.iterations,
            solve_seconds: start.elapsed().as_secs_f64(),
        })
    }
}
