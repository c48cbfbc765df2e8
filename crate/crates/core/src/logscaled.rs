//! Signed numbers stored as (sign, ln|x|), for quantities like h·e^{−2S/h}
//! that underflow in plain floats.

use std::cmp::Ordering;
use std::fmt;

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LogScaled {
    /// −1, 0 or +1
    pub sign: i8,
    /// natural log of the magnitude; −∞ for zero
    pub log_mag: f64,
}

/// ln of the smallest normal double
const LN_MIN_NORMAL: f64 = -708.3964185322641;

impl LogScaled {
    pub const ZERO: LogScaled = LogScaled {
        sign: 0,
        log_mag: f64::NEG_INFINITY,
    };
    pub const ONE: LogScaled = LogScaled { sign: 1, log_mag: 0.0 };

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            LogScaled {
                sign: if x > 0.0 { 1 } else { -1 },
                log_mag: x.abs().ln(),
            }
        }
    }

    /// e^t
    pub fn exp(t: f64) -> Self {
        LogScaled { sign: 1, log_mag: t }
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    /// Plain value, or `None` when it would be subnormal or overflow.
    pub fn to_f64(&self) -> Option<f64> {
        if self.sign == 0 {
            return Some(0.0);
        }
        if self.log_mag <= LN_MIN_NORMAL || self.log_mag >= 709.0 {
            return None;
        }
        Some(self.sign as f64 * self.log_mag.exp())
    }

    /// Plain value, flushing underflow to zero.
    pub fn to_f64_lossy(&self) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            self.sign as f64 * self.log_mag.exp()
        }
    }

    pub fn log10_abs(&self) -> f64 {
        self.log_mag / std::f64::consts::LN_10
    }

    pub fn mul(self, o: Self) -> Self {
        if self.sign == 0 || o.sign == 0 {
            return Self::ZERO;
        }
        LogScaled {
            sign: self.sign * o.sign,
            log_mag: self.log_mag + o.log_mag,
        }
    }

    pub fn div(self, o: Self) -> Self {
        assert!(o.sign != 0, "division by zero");
        if self.sign == 0 {
            return Self::ZERO;
        }
        LogScaled {
            sign: self.sign * o.sign,
            log_mag: self.log_mag - o.log_mag,
        }
    }

    pub fn scale(self, x: f64) -> Self {
        self.mul(Self::from_f64(x))
    }

    pub fn powi(self, k: i32) -> Self {
        if self.sign == 0 {
            return if k == 0 { Self::ONE } else { Self::ZERO };
        }
        LogScaled {
            sign: if k % 2 == 0 { 1 } else { self.sign },
            log_mag: self.log_mag * k as f64,
        }
    }

    pub fn neg(self) -> Self {
        LogScaled {
            sign: -self.sign,
            log_mag: self.log_mag,
        }
    }

    pub fn add(self, o: Self) -> Self {
        if self.sign == 0 {
            return o;
        }
        if o.sign == 0 {
            return self;
        }
        let (big, small) = if self.log_mag >= o.log_mag { (self, o) } else { (o, self) };
        let r = (small.log_mag - big.log_mag).exp();
        if big.sign == small.sign {
            LogScaled {
                sign: big.sign,
                log_mag: big.log_mag + r.ln_1p(),
            }
        } else if r == 1.0 {
            Self::ZERO
        } else {
            LogScaled {
                sign: big.sign,
                log_mag: big.log_mag + (-r).ln_1p(),
            }
        }
    }

    pub fn sub(self, o: Self) -> Self {
        self.add(o.neg())
    }

    /// (sign, mantissa in [1, 10), base-10 exponent)
    pub fn scientific(&self) -> (i8, f64, i64) {
        if self.sign == 0 {
            return (0, 0.0, 0);
        }
        let l = self.log10_abs();
        let mut e = l.floor();
        let mut m = 10f64.powf(l - e);
        if m >= 10.0 {
            m /= 10.0;
            e += 1.0;
        }
        (self.sign, m, e as i64)
    }

    pub fn cmp_value(&self, o: &Self) -> Ordering {
        match self.sign.cmp(&o.sign) {
            Ordering::Equal => match self.sign {
                0 => Ordering::Equal,
                1 => self.log_mag.partial_cmp(&o.log_mag).unwrap_or(Ordering::Equal),
                _ => o.log_mag.partial_cmp(&self.log_mag).unwrap_or(Ordering::Equal),
            },
            other => other,
        }
    }
}

impl fmt::Display for LogScaled {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (s, m, e) = self.scientific();
        if s == 0 {
            return write!(f, "0");
        }
        let p = f.precision().unwrap_or(6);
        write!(f, "{}{:.*}e{}", if s < 0 { "-" } else { "" }, p, m, e)
    }
}
