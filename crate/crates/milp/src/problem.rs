use crate::error::ModelError;

/// Direction of optimization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveSense {
    Minimize,
    Maximize,
}

/// Sense of a linear constraint `a·x (sense) rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub lower: f64,
    pub upper: f64,
    pub cost: f64,
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    /// Sparse row as `(variable index, coefficient)` pairs. Repeated indices are summed.
    pub coeffs: Vec<(usize, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
    pub name: Option<String>,
}

/// A linear program over bounded variables.
///
/// Upper bounds may be `f64::INFINITY` and lower bounds `f64::NEG_INFINITY`.
/// Everything else (coefficients, right-hand sides, costs) must be finite.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub sense: ObjectiveSense,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new(sense: ObjectiveSense) -> Self {
        Self {
            sense,
            variables: Vec::new(),
            constraints: Vec::new(),
        }
    }

    pub fn minimize() -> Self {
        Self::new(ObjectiveSense::Minimize)
    }

    pub fn maximize() -> Self {
        Self::new(ObjectiveSense::Maximize)
    }

    /// Adds a variable and returns its index.
    pub fn add_var(&mut self, lower: f64, upper: f64, cost: f64) -> usize {
        self.variables.push(Variable {
            lower,
            upper,
            cost,
            name: None,
        });
        self.variables.len() - 1
    }

    pub fn add_named_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, cost: f64) -> usize {
        let j = self.add_var(lower, upper, cost);
        self.variables[j].name = Some(name.into());
        j
    }

    /// Adds a constraint and returns its row index.
    pub fn add_constraint(&mut self, coeffs: Vec<(usize, f64)>, sense: RowSense, rhs: f64) -> usize {
        self.constraints.push(Constraint {
            coeffs,
            sense,
            rhs,
            name: None,
        });
        self.constraints.len() - 1
    }

    pub fn add_named_constraint(
        &mut self,
        name: impl Into<String>,
        coeffs: Vec<(usize, f64)>,
        sense: RowSense,
        rhs: f64,
    ) -> usize {
        let i = self.add_constraint(coeffs, sense, rhs);
        self.constraints[i].name = Some(name.into());
        i
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_rows(&self) -> usize {
        self.constraints.len()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (j, v) in self.variables.iter().enumerate() {
            if v.lower.is_nan() || v.upper.is_nan() || v.lower == f64::INFINITY || v.upper == f64::NEG_INFINITY {
                return Err(ModelError::NonFinite(format!("bounds of variable {j}")));
            }
            if v.lower > v.upper {
                return Err(ModelError::InvalidBounds {
                    var: j,
                    lower: v.lower,
                    upper: v.upper,
                });
            }
            if !v.cost.is_finite() {
                return Err(ModelError::NonFinite(format!("cost of variable {j}")));
            }
        }
        let n = self.variables.len();
        for (i, c) in self.constraints.iter().enumerate() {
            if !c.rhs.is_finite() {
                return Err(ModelError::NonFinite(format!("rhs of row {i}")));
            }
            for &(j, a) in &c.coeffs {
                if j >= n {
                    return Err(ModelError::UnknownVariable { row: i, var: j });
                }
                if !a.is_finite() {
                    return Err(ModelError::NonFinite(format!("coefficient ({i}, {j})")));
                }
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.variables.iter().zip(x).map(|(v, xj)| v.cost * xj).sum()
    }

    pub fn row_activity(&self, row: usize, x: &[f64]) -> f64 {
        self.constraints[row].coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Largest absolute violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (v, &xj) in self.variables.iter().zip(x) {
            worst = worst.max(v.lower - xj).max(xj - v.upper);
        }
        for (i, c) in self.constraints.iter().enumerate() {
            let act = self.row_activity(i, x);
            let viol = match c.sense {
                RowSense::Le => act - c.rhs,
                RowSense::Ge => c.rhs - act,
                RowSense::Eq => (act - c.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }
}

/// Integrality class of a variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
    Integer,
}

impl VarKind {
    pub fn is_integral(self) -> bool {
        !matches!(self, VarKind::Continuous)
    }
}

/// A linear program plus an integrality mask.
#[derive(Debug, Clone, PartialEq)]
pub struct MipProblem {
    pub lp: LinearProgram,
    pub kinds: Vec<VarKind>,
}

impl MipProblem {
    pub fn new(sense: ObjectiveSense) -> Self {
        Self {
            lp: LinearProgram::new(sense),
            kinds: Vec::new(),
        }
    }

    /// Wraps an LP, marking every variable continuous.
    pub fn from_lp(lp: LinearProgram) -> Self {
        let kinds = vec![VarKind::Continuous; lp.num_vars()];
        Self { lp, kinds }
    }

    pub fn add_var(&mut self, kind: VarKind, lower: f64, upper: f64, cost: f64) -> usize {
        let (lower, upper) = match kind {
            VarKind::Binary => (lower.max(0.0), upper.min(1.0)),
            _ => (lower, upper),
        };
        self.kinds.push(kind);
        self.lp.add_var(lower, upper, cost)
    }

    pub fn add_binary(&mut self, cost: f64) -> usize {
        self.add_var(VarKind::Binary, 0.0, 1.0, cost)
    }

    pub fn add_continuous(&mut self, lower: f64, upper: f64, cost: f64) -> usize {
        self.add_var(VarKind::Continuous, lower, upper, cost)
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, f64)>, sense: RowSense, rhs: f64) -> usize {
        self.lp.add_constraint(coeffs, sense, rhs)
    }

    pub fn set_name(&mut self, var: usize, name: impl Into<String>) {
        self.lp.variables[var].name = Some(name.into());
    }

    pub fn num_integral(&self) -> usize {
        self.kinds.iter().filter(|k| k.is_integral()).count()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.lp.validate()?;
        if self.kinds.len() != self.lp.num_vars() {
            return Err(ModelError::KindLength {
                kinds: self.kinds.len(),
                vars: self.lp.num_vars(),
            });
        }
        for (j, k) in self.kinds.iter().enumerate() {
            if *k == VarKind::Binary {
                let v = &self.lp.variables[j];
                if v.lower < 0.0 || v.upper > 1.0 {
                    return Err(ModelError::BinaryBounds { var: j });
                }
            }
        }
        Ok(())
    }

    /// True when every objective coefficient is integral and sits on an integer
    /// variable, so every feasible objective value is an integer.
    pub fn has_integral_objective(&self) -> bool {
        self.lp
            .variables
            .iter()
            .zip(&self.kinds)
            .all(|(v, k)| v.cost == 0.0 || (k.is_integral() && v.cost.fract() == 0.0))
    }
}
