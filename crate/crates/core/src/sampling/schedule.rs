use crate::{Error, Result};

/// Per-step compression budget `ε_n`, `n ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BudgetSchedule {
    /// `ε_n = ε`
    Constant(f64),
    /// `ε_n = αⁿ`
    Geometric(f64),
}

impl BudgetSchedule {
    pub fn constant(epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be finite and nonnegative, got {epsilon}"
            )));
        }
        Ok(BudgetSchedule::Constant(epsilon))
    }

    pub fn geometric(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha must lie in (0, 1), got {alpha}"
            )));
        }
        Ok(BudgetSchedule::Geometric(alpha))
    }

    pub fn epsilon(&self, n: usize) -> f64 {
        match *self {
            BudgetSchedule::Constant(eps) => eps,
            BudgetSchedule::Geometric(alpha) => alpha.powi(n.min(i32::MAX as usize) as i32),
        }
    }

    /// `Σ_{m=1}^{n} ε_m` in closed form.
    pub fn cumulative(&self, n: usize) -> f64 {
        match *self {
            BudgetSchedule::Constant(eps) => eps * n as f64,
            BudgetSchedule::Geometric(alpha) => {
                alpha * (1.0 - alpha.powi(n.min(i32::MAX as usize) as i32)) / (1.0 - alpha)
            }
        }
    }

    /// Limit of [`cumulative`](Self::cumulative) as `n → ∞`: `α / (1 − α)`
    /// for the geometric schedule, unbounded for a positive constant.
    pub fn total_bound(&self) -> f64 {
        match *self {
            BudgetSchedule::Constant(0.0) => 0.0,
            BudgetSchedule::Constant(_) => f64::INFINITY,
            BudgetSchedule::Geometric(alpha) => alpha / (1.0 - alpha),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(*self, BudgetSchedule::Constant(eps) if eps == 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constant_schedule() {
        let s = BudgetSchedule::constant(3.0).unwrap();
        assert_eq!(s.epsilon(1), 3.0);
        assert_eq!(s.epsilon(5000), 3.0);
        assert_eq!(s.cumulative(10), 30.0);
        assert_eq!(s.total_bound(), f64::INFINITY);
        assert!(BudgetSchedule::constant(0.0).unwrap().is_zero());
        assert!(BudgetSchedule::constant(-1.0).is_err());
    }

    #[test]
    fn geometric_schedule_sums_below_cap() {
        let s = BudgetSchedule::geometric(0.9).unwrap();
        assert_relative_eq!(s.epsilon(2), 0.81, epsilon = 1e-15);
        let mut running = 0.0;
        for n in 1..=500 {
            running += s.epsilon(n);
            assert_relative_eq!(s.cumulative(n), running, max_relative = 1e-12);
            assert!(running <= s.total_bound() + 1e-12);
        }
        assert_relative_eq!(s.total_bound(), 9.0, epsilon = 1e-12);
        assert!(BudgetSchedule::geometric(1.0).is_err());
        assert!(BudgetSchedule::geometric(0.0).is_err());
    }
}
