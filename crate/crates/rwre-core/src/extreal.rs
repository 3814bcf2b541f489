use std::fmt;

/// Extended real number.
///
/// Several of the analytic quantities are genuinely infinite (the sublevel-set
/// exponent when `q1 = 0`, its negative counterpart, the Legendre transform
/// outside the support of `ln A`), so infinities are carried as explicit tags
/// rather than sentinel floats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    PosInf,
    NegInf,
}

impl ExtReal {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    /// Finite payload, if any.
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            _ => None,
        }
    }

    /// Collapse to `f64`, mapping the tags to IEEE infinities.
    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::Finite(x) => x,
            ExtReal::PosInf => f64::INFINITY,
            ExtReal::NegInf => f64::NEG_INFINITY,
        }
    }

}

impl std::ops::Neg for ExtReal {
    type Output = ExtReal;

    fn neg(self) -> ExtReal {
        match self {
            ExtReal::Finite(x) => ExtReal::Finite(-x),
            ExtReal::PosInf => ExtReal::NegInf,
            ExtReal::NegInf => ExtReal::PosInf,
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(x) => write!(f, "{x}"),
            ExtReal::PosInf => write!(f, "inf"),
            ExtReal::NegInf => write!(f, "-inf"),
        }
    }
}

impl From<f64> for ExtReal {
    fn from(x: f64) -> Self {
        if x == f64::INFINITY {
            ExtReal::PosInf
        } else if x == f64::NEG_INFINITY {
            ExtReal::NegInf
        } else {
            ExtReal::Finite(x)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::ExtReal;

    #[test]
    fn display_tags() {
        assert_eq!(ExtReal::PosInf.to_string(), "inf");
        assert_eq!(ExtReal::NegInf.to_string(), "-inf");
        assert_eq!(ExtReal::Finite(1.5).to_string(), "1.5");
    }

    #[test]
    fn negation_swaps_tags() {
        assert_eq!(-ExtReal::PosInf, ExtReal::NegInf);
        assert_eq!(-ExtReal::Finite(2.0), ExtReal::Finite(-2.0));
    }
}
