//! Model containers: variables with bounds and integrality, linear rows,
//! and a linear minimization objective.

use std::collections::HashMap;

use crate::error::{MilpError, Result};

/// Index of a variable inside its [`MilpModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

/// Index of a constraint inside its [`MilpModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConstraintId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrality {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub integrality: Integrality,
    /// Branching class: fractional binaries with a higher priority are
    /// branched on first. Defaults to 0.
    pub priority: i32,
}

impl Variable {
    pub fn is_binary(&self) -> bool {
        self.integrality == Integrality::Binary
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintSense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub sense: ConstraintSense,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * values[v.0]).sum()
    }

    /// Amount by which `values` violates this row (zero when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.activity(values);
        match self.sense {
            ConstraintSense::Le => (lhs - self.rhs).max(0.0),
            ConstraintSense::Ge => (self.rhs - lhs).max(0.0),
            ConstraintSense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// Linear objective, always minimized.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Objective {
    pub terms: Vec<(VarId, f64)>,
    pub constant: f64,
}

impl Objective {
    pub fn evaluate(&self, values: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(v, c)| c * values[v.0]).sum::<f64>()
    }
}

/// A mixed-integer linear program. Immutable once handed to a solver.
#[derive(Debug, Clone, Default)]
pub struct MilpModel {
    variables: Vec<Variable>,
    constraints: Vec<Constraint>,
    objective: Objective,
    names: HashMap<String, VarId>,
    disjunctions: Vec<Vec<VarId>>,
}

fn merge_terms(terms: &[(VarId, f64)]) -> Vec<(VarId, f64)> {
    let mut merged: Vec<(VarId, f64)> = Vec::with_capacity(terms.len());
    let mut slot: HashMap<VarId, usize> = HashMap::new();
    for &(v, c) in terms {
        match slot.get(&v) {
            Some(&i) => merged[i].1 += c,
            None => {
                slot.insert(v, merged.len());
                merged.push((v, c));
            }
        }
    }
    merged
}

impl MilpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_variable(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        integrality: Integrality,
    ) -> Result<VarId> {
        let name = name.into();
        if self.names.contains_key(&name) {
            return Err(MilpError::DuplicateName(name));
        }
        if lower.is_nan() || upper.is_nan() || lower > upper || lower == f64::INFINITY || upper == f64::NEG_INFINITY {
            return Err(MilpError::InvalidBounds { name, lower, upper });
        }
        if integrality == Integrality::Binary && (lower < 0.0 || upper > 1.0) {
            return Err(MilpError::InvalidBounds { name, lower, upper });
        }
        let id = VarId(self.variables.len());
        self.names.insert(name.clone(), id);
        self.variables.push(Variable { name, lower, upper, integrality, priority: 0 });
        Ok(id)
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> Result<VarId> {
        self.add_variable(name, lower, upper, Integrality::Continuous)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> Result<VarId> {
        self.add_variable(name, 0.0, 1.0, Integrality::Binary)
    }

    /// Adds `Σ terms (sense) rhs`. Repeated variables in `terms` are summed.
    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: &[(VarId, f64)],
        sense: ConstraintSense,
        rhs: f64,
    ) -> Result<ConstraintId> {
        let name = name.into();
        for &(v, c) in terms {
            if v.0 >= self.variables.len() {
                return Err(MilpError::UnknownVariable { constraint: name, index: v.0 });
            }
            if !c.is_finite() {
                return Err(MilpError::NonFinite(format!("constraint `{name}`")));
            }
        }
        if !rhs.is_finite() {
            return Err(MilpError::NonFinite(format!("rhs of constraint `{name}`")));
        }
        let id = ConstraintId(self.constraints.len());
        self.constraints.push(Constraint { name, terms: merge_terms(terms), sense, rhs });
        Ok(id)
    }

    /// Adds the covering row `Σ members ≥ 1` over binaries and registers the
    /// set for disjunctive branching: a node where no member is at one is
    /// split into one child per member with that member fixed to one.
    pub fn add_disjunction(&mut self, name: impl Into<String>, members: &[VarId]) -> Result<ConstraintId> {
        let name = name.into();
        for &v in members {
            match self.variables.get(v.0) {
                Some(var) if var.is_binary() => {}
                Some(_) => return Err(MilpError::ModelMalformed(format!("disjunction `{name}` has a non-binary member"))),
                None => return Err(MilpError::UnknownVariable { constraint: name, index: v.0 }),
            }
        }
        if members.is_empty() {
            return Err(MilpError::ModelMalformed(format!("disjunction `{name}` is empty")));
        }
        let terms: Vec<(VarId, f64)> = members.iter().map(|&v| (v, 1.0)).collect();
        let id = self.add_constraint(name, &terms, ConstraintSense::Ge, 1.0)?;
        let mut set = members.to_vec();
        set.sort();
        set.dedup();
        self.disjunctions.push(set);
        Ok(id)
    }

    pub fn disjunctions(&self) -> &[Vec<VarId>] {
        &self.disjunctions
    }

    pub fn set_priority(&mut self, var: VarId, priority: i32) -> Result<()> {
        match self.variables.get_mut(var.0) {
            Some(v) => {
                v.priority = priority;
                Ok(())
            }
            None => Err(MilpError::UnknownVariable { constraint: "priority".into(), index: var.0 }),
        }
    }

    /// Adds `coef * var` to the objective.
    pub fn add_objective_term(&mut self, var: VarId, coef: f64) -> Result<()> {
        if var.0 >= self.variables.len() {
            return Err(MilpError::UnknownVariable { constraint: "objective".into(), index: var.0 });
        }
        if !coef.is_finite() {
            return Err(MilpError::NonFinite("objective".into()));
        }
        match self.objective.terms.iter_mut().find(|(v, _)| *v == var) {
            Some(t) => t.1 += coef,
            None => self.objective.terms.push((var, coef)),
        }
        Ok(())
    }

    pub fn set_objective_constant(&mut self, constant: f64) -> Result<()> {
        if !constant.is_finite() {
            return Err(MilpError::NonFinite("objective constant".into()));
        }
        self.objective.constant = constant;
        Ok(())
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, id: VarId) -> &Variable {
        &self.variables[id.0]
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.names.get(name).copied()
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn binary_ids(&self) -> Vec<VarId> {
        (0..self.variables.len()).filter(|&i| self.variables[i].is_binary()).map(VarId).collect()
    }

    /// Dense objective coefficient vector.
    pub fn objective_vector(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.variables.len()];
        for &(v, coef) in &self.objective.terms {
            c[v.0] += coef;
        }
        c
    }

    /// Re-checks every model invariant. Builders enforce them already; this
    /// guards models assembled by other means (e.g. deserialization).
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashMap::new();
        for (i, v) in self.variables.iter().enumerate() {
            if seen.insert(v.name.as_str(), i).is_some() {
                return Err(MilpError::DuplicateName(v.name.clone()));
            }
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return Err(MilpError::InvalidBounds { name: v.name.clone(), lower: v.lower, upper: v.upper });
            }
            if v.is_binary() && (v.lower < 0.0 || v.upper > 1.0) {
                return Err(MilpError::InvalidBounds { name: v.name.clone(), lower: v.lower, upper: v.upper });
            }
        }
        for c in &self.constraints {
            if !c.rhs.is_finite() {
                return Err(MilpError::NonFinite(format!("rhs of constraint `{}`", c.name)));
            }
            for &(v, coef) in &c.terms {
                if v.0 >= self.variables.len() {
                    return Err(MilpError::UnknownVariable { constraint: c.name.clone(), index: v.0 });
                }
                if !coef.is_finite() {
                    return Err(MilpError::NonFinite(format!("constraint `{}`", c.name)));
                }
            }
        }
        for &(v, coef) in &self.objective.terms {
            if v.0 >= self.variables.len() || !coef.is_finite() {
                return Err(MilpError::ModelMalformed("objective term out of range or non-finite".into()));
            }
        }
        Ok(())
    }

    /// Largest violation of any row or bound by `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let rows = self.constraints.iter().map(|c| c.violation(values)).fold(0.0, f64::max);
        let bounds = self
            .variables
            .iter()
            .zip(values)
            .map(|(v, &x)| (v.lower - x).max(x - v.upper).max(0.0))
            .fold(0.0, f64::max);
        rows.max(bounds)
    }
}
