//! Locale-free number formatting and grid parsing.

use crate::error::CliError;

/// Scientific notation with 17 significant digits; enough to round-trip any `f64`.
pub fn float(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

/// Inclusive grid `A:B:N`; `N = 1` yields just `A`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.end - self.start) / (self.count - 1) as f64;
        (0..self.count)
            .map(|k| {
                if k + 1 == self.count {
                    self.end
                } else {
                    self.start + step * k as f64
                }
            })
            .collect()
    }
}

impl std::str::FromStr for Grid {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::Usage(format!("grid {s:?} is not of the form A:B:N"));
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, n] = parts.as_slice() else {
            return Err(bad());
        };
        let start: f64 = a.trim().parse().map_err(|_| bad())?;
        let end: f64 = b.trim().parse().map_err(|_| bad())?;
        let count: usize = n.trim().parse().map_err(|_| bad())?;
        if count == 0 || !start.is_finite() || !end.is_finite() {
            return Err(bad());
        }
        Ok(Grid { start, end, count })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 2.0 * 2f64.sqrt(), -1e-300, 5e-324, f64::MAX] {
            assert_eq!(float(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(float(2.5), "2.5000000000000000e0");
    }

    #[test]
    fn grid_endpoints_exact() {
        let g: Grid = "2:2.5:6".parse().unwrap();
        let pts = g.points();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[0], 2.0);
        assert_eq!(pts[5], 2.5);
        assert!("2:3".parse::<Grid>().is_err());
        assert!("2:3:0".parse::<Grid>().is_err());
    }
}
