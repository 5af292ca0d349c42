//! Solver-independent description of a linear program over Hermitian matrix
//! variables with PSD constraints.

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, HERMITIAN_CHECK_TOL};

/// Handle to a declared matrix variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VarId(pub(crate) usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
pub struct HermitianVar {
    pub dim: usize,
    pub name: String,
}

/// `Σ Re tr(C_i X_i) + constant`.
#[derive(Debug, Clone, Default)]
pub struct ScalarExpr {
    pub terms: Vec<(VarId, ComplexMatrix)>,
    pub constant: f64,
}

impl ScalarExpr {
    pub fn new() -> Self {
        Self::default()
    }

    /// `tr X`.
    pub fn trace_of(var: VarId, dim: usize) -> Self {
        Self {
            terms: vec![(var, ComplexMatrix::identity(dim))],
            constant: 0.0,
        }
    }

    pub fn add(&mut self, var: VarId, coefficient: ComplexMatrix) -> &mut Self {
        self.terms.push((var, coefficient));
        self
    }

    pub fn with_constant(mut self, c: f64) -> Self {
        self.constant = c;
        self
    }
}

/// `Σ a_i X_i + K` for real scalars `a_i` and an optional Hermitian constant `K`.
#[derive(Debug, Clone)]
pub struct MatrixExpr {
    pub dim: usize,
    pub terms: Vec<(VarId, f64)>,
    pub constant: Option<ComplexMatrix>,
}

impl MatrixExpr {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            terms: Vec::new(),
            constant: None,
        }
    }

    pub fn var(var: VarId, dim: usize) -> Self {
        Self {
            dim,
            terms: vec![(var, 1.0)],
            constant: None,
        }
    }

    pub fn add(&mut self, var: VarId, coefficient: f64) -> &mut Self {
        self.terms.push((var, coefficient));
        self
    }

    pub fn with_constant(mut self, k: ComplexMatrix) -> Self {
        self.constant = Some(k);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Eq,
    Le,
    Ge,
}

#[derive(Debug, Clone)]
pub struct ScalarConstraint {
    pub expr: ScalarExpr,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub struct MatrixEquality {
    pub expr: MatrixExpr,
    pub rhs: ComplexMatrix,
}

#[derive(Debug, Clone)]
pub struct ConicProblem {
    pub vars: Vec<HermitianVar>,
    pub sense: Sense,
    pub objective: ScalarExpr,
    pub scalar_constraints: Vec<ScalarConstraint>,
    pub matrix_equalities: Vec<MatrixEquality>,
    /// Each expression is required to be positive semidefinite.
    pub psd_constraints: Vec<MatrixExpr>,
}

/// Post-hoc feasibility measures of a candidate point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    /// Largest absolute violation among equalities and scalar inequalities.
    pub max_constraint: f64,
    /// Smallest eigenvalue among PSD-constrained expressions.
    pub min_psd_eigenvalue: f64,
}

impl ConicProblem {
    pub fn new(sense: Sense) -> Self {
        Self {
            vars: Vec::new(),
            sense,
            objective: ScalarExpr::new(),
            scalar_constraints: Vec::new(),
            matrix_equalities: Vec::new(),
            psd_constraints: Vec::new(),
        }
    }

    pub fn add_var(&mut self, dim: usize, name: impl Into<String>) -> VarId {
        self.vars.push(HermitianVar {
            dim,
            name: name.into(),
        });
        VarId(self.vars.len() - 1)
    }

    /// Declares a variable and constrains it to be PSD.
    pub fn add_psd_var(&mut self, dim: usize, name: impl Into<String>) -> VarId {
        let v = self.add_var(dim, name);
        self.psd_constraints.push(MatrixExpr::var(v, dim));
        v
    }

    pub fn dim(&self, v: VarId) -> usize {
        self.vars[v.0].dim
    }

    pub fn set_objective(&mut self, objective: ScalarExpr) {
        self.objective = objective;
    }

    pub fn add_scalar(&mut self, expr: ScalarExpr, relation: Relation, rhs: f64) {
        self.scalar_constraints.push(ScalarConstraint {
            expr,
            relation,
            rhs,
        });
    }

    pub fn add_matrix_eq(&mut self, expr: MatrixExpr, rhs: ComplexMatrix) {
        self.matrix_equalities.push(MatrixEquality { expr, rhs });
    }

    /// Adds `expr ⪰ 0` and returns its index in `psd_constraints`.
    pub fn add_psd(&mut self, expr: MatrixExpr) -> usize {
        self.psd_constraints.push(expr);
        self.psd_constraints.len() - 1
    }

    /// Checks that every term references a declared variable of matching
    /// dimension and that all constants are Hermitian.
    pub fn validate(&self) -> Result<()> {
        let check_var = |v: VarId| -> Result<usize> {
            self.vars
                .get(v.0)
                .map(|x| x.dim)
                .ok_or_else(|| Error::InvalidProblem(format!("undeclared variable #{}", v.0)))
        };
        let check_herm = |m: &ComplexMatrix, what: &str| -> Result<()> {
            if !m.is_hermitian(HERMITIAN_CHECK_TOL) {
                return Err(Error::InvalidProblem(format!("{what} is not Hermitian")));
            }
            Ok(())
        };
        let check_scalar = |e: &ScalarExpr| -> Result<()> {
            for (v, c) in &e.terms {
                if check_var(*v)? != c.dim() {
                    return Err(Error::InvalidProblem(format!(
                        "coefficient of {} has wrong dimension",
                        self.vars[v.0].name
                    )));
                }
                check_herm(c, "scalar coefficient")?;
            }
            Ok(())
        };
        let check_matrix = |e: &MatrixExpr| -> Result<()> {
            for (v, _) in &e.terms {
                if check_var(*v)? != e.dim {
                    return Err(Error::InvalidProblem(format!(
                        "{} used in a {}-dimensional expression",
                        self.vars[v.0].name, e.dim
                    )));
                }
            }
            if let Some(k) = &e.constant {
                if k.dim() != e.dim {
                    return Err(Error::InvalidProblem("constant has wrong dimension".into()));
                }
                check_herm(k, "matrix constant")?;
            }
            Ok(())
        };
        check_scalar(&self.objective)?;
        for c in &self.scalar_constraints {
            check_scalar(&c.expr)?;
        }
        for c in &self.matrix_equalities {
            check_matrix(&c.expr)?;
            if c.rhs.dim() != c.expr.dim {
                return Err(Error::InvalidProblem(
                    "right-hand side has wrong dimension".into(),
                ));
            }
            check_herm(&c.rhs, "right-hand side")?;
        }
        for c in &self.psd_constraints {
            check_matrix(c)?;
        }
        Ok(())
    }

    pub fn eval_scalar(&self, e: &ScalarExpr, values: &[ComplexMatrix]) -> f64 {
        e.constant
            + e.terms
                .iter()
                .map(|(v, c)| c.trace_product(&values[v.0]))
                .sum::<f64>()
    }

    pub fn eval_matrix(&self, e: &MatrixExpr, values: &[ComplexMatrix]) -> ComplexMatrix {
        let base = e
            .constant
            .clone()
            .unwrap_or_else(|| ComplexMatrix::zeros(e.dim));
        e.terms
            .iter()
            .fold(base, |acc, (v, a)| &acc + &values[v.0].scale(*a))
    }

    pub fn objective_value(&self, values: &[ComplexMatrix]) -> f64 {
        self.eval_scalar(&self.objective, values)
    }

    pub fn residuals(&self, values: &[ComplexMatrix]) -> Result<Residuals> {
        let mut max_constraint = 0.0_f64;
        for c in &self.scalar_constraints {
            let lhs = self.eval_scalar(&c.expr, values);
            let viol = match c.relation {
                Relation::Eq => (lhs - c.rhs).abs(),
                Relation::Le => (lhs - c.rhs).max(0.0),
                Relation::Ge => (c.rhs - lhs).max(0.0),
            };
            max_constraint = max_constraint.max(viol);
        }
        for c in &self.matrix_equalities {
            let lhs = self.eval_matrix(&c.expr, values);
            max_constraint = max_constraint.max(lhs.max_abs_diff(&c.rhs));
        }
        let mut min_psd_eigenvalue = f64::INFINITY;
        for c in &self.psd_constraints {
            let m = self.eval_matrix(c, values).hermitian_part();
            min_psd_eigenvalue = min_psd_eigenvalue.min(m.min_eigenvalue()?);
        }
        Ok(Residuals {
            max_constraint,
            min_psd_eigenvalue,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_catches_dimension_errors() {
        let mut p = ConicProblem::new(Sense::Maximize);
        let x = p.add_psd_var(2, "x");
        p.set_objective(ScalarExpr::trace_of(x, 3));
        assert!(matches!(p.validate(), Err(Error::InvalidProblem(_))));
        p.set_objective(ScalarExpr::trace_of(x, 2));
        assert!(p.validate().is_ok());
        p.add_psd(MatrixExpr::var(VarId(7), 2));
        assert!(p.validate().is_err());
    }

    #[test]
    fn residuals_of_a_feasible_point() {
        let mut p = ConicProblem::new(Sense::Maximize);
        let x = p.add_psd_var(2, "x");
        p.add_matrix_eq(MatrixExpr::var(x, 2), ComplexMatrix::identity(2).scale(0.5));
        p.add_scalar(ScalarExpr::trace_of(x, 2), Relation::Le, 2.0);
        let r = p
            .residuals(&[ComplexMatrix::identity(2).scale(0.5)])
            .unwrap();
        assert_eq!(r.max_constraint, 0.0);
        assert!((r.min_psd_eigenvalue - 0.5).abs() < 1e-15);
    }
}
