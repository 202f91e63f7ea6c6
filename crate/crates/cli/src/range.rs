use std::fmt;
use std::str::FromStr;

/// `lo:hi` or `lo:hi:n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeArg {
    pub lo: f64,
    pub hi: f64,
    pub n: Option<usize>,
}

impl FromStr for RangeArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if !(2..=3).contains(&parts.len()) {
            return Err(format!("expected lo:hi or lo:hi:n, got `{s}`"));
        }
        let num = |p: &str| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| format!("`{p}` is not a number"))
        };
        let lo = num(parts[0])?;
        let hi = num(parts[1])?;
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(format!("range needs finite lo < hi, got `{s}`"));
        }
        let n = match parts.get(2) {
            None => None,
            Some(p) => Some(
                p.trim()
                    .parse::<usize>()
                    .ok()
                    .filter(|n| *n >= 2)
                    .ok_or_else(|| format!("point count `{p}` must be an integer >= 2"))?,
            ),
        };
        Ok(Self { lo, hi, n })
    }
}

impl fmt::Display for RangeArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.n {
            Some(n) => write!(f, "{}:{}:{n}", self.lo, self.hi),
            None => write!(f, "{}:{}", self.lo, self.hi),
        }
    }
}
