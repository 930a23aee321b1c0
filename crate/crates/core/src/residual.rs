//! Residual records shared by every verification routine.

/// Outcome of one identity check: the largest violation and the scale it is
/// measured against.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub id: String,
    pub tag: String,
    pub max_residual: f64,
    pub scale: f64,
}

impl Residual {
    pub fn new(id: impl Into<String>, tag: impl Into<String>, max_residual: f64, scale: f64) -> Self {
        Self {
            id: id.into(),
            tag: tag.into(),
            max_residual,
            scale,
        }
    }

    /// Absolute check, scale 1.
    pub fn absolute(id: impl Into<String>, tag: impl Into<String>, max_residual: f64) -> Self {
        Self::new(id, tag, max_residual, 1.0)
    }

    /// Relative to the largest summand, floored at 1.
    pub fn against_summands(id: impl Into<String>, tag: impl Into<String>, max_residual: f64, largest: f64) -> Self {
        Self::new(id, tag, max_residual, largest.max(1.0))
    }

    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.max_residual / self.scale
        } else {
            self.max_residual
        }
    }

    /// NaN never passes.
    pub fn passes(&self, tol: f64) -> bool {
        self.relative() <= tol
    }

    /// Keep the worse of two records for the same identity.
    pub fn merge(&mut self, other: &Residual) {
        let worse = other.relative() > self.relative() || other.relative().is_nan();
        if worse {
            self.max_residual = other.max_residual;
            self.scale = other.scale;
        }
    }
}

/// Largest absolute entry of a slice.
pub fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_keeps_worst() {
        let mut a = Residual::new("x", "t", 1e-9, 1.0);
        a.merge(&Residual::new("x", "t", 1e-6, 10.0));
        assert_eq!(a.max_residual, 1e-6);
        a.merge(&Residual::new("x", "t", 1e-12, 1.0));
        assert_eq!(a.relative(), 1e-7);
        a.merge(&Residual::new("x", "t", f64::NAN, 1.0));
        assert!(!a.passes(1.0));
    }

    #[test]
    fn summand_scale_floor() {
        let r = Residual::against_summands("x", "t", 1e-8, 1e-3);
        assert_eq!(r.scale, 1.0);
        let r = Residual::against_summands("x", "t", 1e-8, 100.0);
        assert_eq!(r.relative(), 1e-10);
    }
}
