use serde::{Deserialize, Serialize};

/// Japanese bracket `⟨s⟩ = (1 + s²)^{1/2}`.
#[inline]
pub fn jbracket(s: f64) -> f64 {
    (1.0 + s * s).sqrt()
}

/// Product weight `⟨r⟩^a r^b ⟨t−r⟩^c e^{−d q(t−r)}` with `q = arctan`, optionally restricted
/// to `r ≤ r_max`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WeightSpec {
    pub bracket_r: f64,
    pub power_r: f64,
    pub bracket_t_minus_r: f64,
    pub ghost: f64,
    pub r_max: Option<f64>,
}

impl WeightSpec {
    pub fn unit() -> Self {
        Self::default()
    }

    pub fn with_bracket_r(mut self, a: f64) -> Self {
        self.bracket_r = a;
        self
    }

    pub fn with_power_r(mut self, b: f64) -> Self {
        self.power_r = b;
        self
    }

    pub fn with_bracket_t_minus_r(mut self, c: f64) -> Self {
        self.bracket_t_minus_r = c;
        self
    }

    /// Multiplies by `e^{−d q(t−r)}`.
    pub fn with_ghost(mut self, d: f64) -> Self {
        self.ghost = d;
        self
    }

    pub fn within(mut self, r_max: f64) -> Self {
        self.r_max = Some(r_max);
        self
    }

    pub fn r_power(&self) -> f64 {
        self.power_r
    }

    pub fn support(&self) -> Option<f64> {
        self.r_max
    }

    pub fn eval(&self, r: f64, t: f64) -> f64 {
        let mut w = 1.0;
        if self.bracket_r != 0.0 {
            w *= jbracket(r).powf(self.bracket_r);
        }
        if self.power_r != 0.0 {
            w *= r.powf(self.power_r);
        }
        if self.bracket_t_minus_r != 0.0 {
            w *= jbracket(t - r).powf(self.bracket_t_minus_r);
        }
        if self.ghost != 0.0 {
            w *= (-self.ghost * (t - r).atan()).exp();
        }
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ghost_weight_bounds() {
        let w = WeightSpec::unit().with_ghost(1.0);
        let c = std::f64::consts::FRAC_PI_2.exp();
        for s in [-1e6, -3.0, 0.0, 2.0, 1e6] {
            let v = w.eval(0.0, s);
            assert!(v >= 1.0 / c - 1e-12 && v <= c + 1e-12);
        }
    }

    #[test]
    fn bracket_at_time_zero() {
        let a = WeightSpec::unit().with_bracket_t_minus_r(1.0);
        let b = WeightSpec::unit().with_bracket_r(1.0);
        assert_eq!(a.eval(2.5, 0.0), b.eval(2.5, 0.0));
    }
}
