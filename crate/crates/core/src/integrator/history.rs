//! Initial histories: continuous on `[-T_hist, 0]`, constant before that.

use serde::Serialize;

use super::SimError;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum HistoryKind<S> {
    Constant {
        c: Vec<S>,
    },
    /// `c + eps sin(omega theta)` on `[-horizon, 0]`.
    Oscillatory {
        c: Vec<S>,
        eps: Vec<S>,
        omega: S,
    },
    /// Monotone cubic (PCHIP) interpolation of samples. `times` ascend and
    /// end at 0.
    Sampled {
        times: Vec<S>,
        values: Vec<Vec<S>>,
        #[serde(skip)]
        slopes: Vec<Vec<S>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HistoryFunction<S> {
    kind: HistoryKind<S>,
    horizon: S,
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> SimError {
    SimError::InvalidHistory { field: field.into(), reason: reason.into() }
}

/// Fritsch-Carlson slopes for one component.
fn pchip_slopes<S: Scalar>(t: &[S], y: &[S]) -> Vec<S> {
    let m = t.len();
    if m == 2 {
        let s = (y[1] - y[0]) / (t[1] - t[0]);
        return vec![s, s];
    }
    let h: Vec<S> = t.windows(2).map(|w| w[1] - w[0]).collect();
    let del: Vec<S> = (0..m - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    let mut d = vec![S::zero(); m];
    for k in 1..m - 1 {
        if del[k - 1] * del[k] > S::zero() {
            let w1 = S::lit(2.0) * h[k] + h[k - 1];
            let w2 = h[k] + S::lit(2.0) * h[k - 1];
            d[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
        }
    }
    let end = |h0: S, h1: S, d0: S, d1: S| {
        let s = ((S::lit(2.0) * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s * d0 <= S::zero() {
            S::zero()
        } else if d0 * d1 < S::zero() && s.abs() > (S::lit(3.0) * d0).abs() {
            S::lit(3.0) * d0
        } else {
            s
        }
    };
    d[0] = end(h[0], h[1], del[0], del[1]);
    d[m - 1] = end(h[m - 2], h[m - 3], del[m - 2], del[m - 3]);
    d
}

impl<S: Scalar> HistoryFunction<S> {
    pub fn constant(c: Vec<S>) -> Result<Self, SimError> {
        for (i, &v) in c.iter().enumerate() {
            if !(v.is_finite() && v > S::zero()) {
                return Err(invalid(format!("c[{}]", i + 1), format!("value at 0 must be positive, got {v}")));
            }
        }
        Ok(Self { kind: HistoryKind::Constant { c }, horizon: S::zero() })
    }

    /// `c + eps sin(omega theta)` on `[-horizon, 0]`. Nonnegativity is
    /// guaranteed by requiring `c_i >= |eps_i|`.
    pub fn oscillatory(c: Vec<S>, eps: Vec<S>, omega: S, horizon: S) -> Result<Self, SimError> {
        if eps.len() != c.len() {
            return Err(invalid("eps", format!("expected {} entries, found {}", c.len(), eps.len())));
        }
        for i in 0..c.len() {
            if !(c[i].is_finite() && c[i] > S::zero()) {
                return Err(invalid(format!("c[{}]", i + 1), format!("value at 0 must be positive, got {}", c[i])));
            }
            if !(eps[i].is_finite() && eps[i].abs() <= c[i]) {
                return Err(invalid(format!("eps[{}]", i + 1), "|eps| must not exceed c (history must stay nonnegative)"));
            }
        }
        if !omega.is_finite() {
            return Err(invalid("omega", "must be finite"));
        }
        if !(horizon.is_finite() && horizon > S::zero()) {
            return Err(invalid("horizon", "must be positive"));
        }
        Ok(Self { kind: HistoryKind::Oscillatory { c, eps, omega }, horizon })
    }

    /// Samples `values[k]` (one vector per time) at ascending `times` ending
    /// at 0.
    pub fn sampled(times: Vec<S>, values: Vec<Vec<S>>) -> Result<Self, SimError> {
        if times.len() < 2 {
            return Err(invalid("times", "need at least two samples"));
        }
        if times.len() != values.len() {
            return Err(invalid("values", format!("expected {} rows, found {}", times.len(), values.len())));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("times", "must be strictly increasing"));
        }
        if *times.last().unwrap() != S::zero() {
            return Err(invalid("times", "last sample must be at 0"));
        }
        let n = values[0].len();
        for (k, row) in values.iter().enumerate() {
            if row.len() != n {
                return Err(invalid(format!("values[{}]", k + 1), format!("expected {n} entries, found {}", row.len())));
            }
            for (i, &v) in row.iter().enumerate() {
                if !(v.is_finite() && v >= S::zero()) {
                    return Err(invalid(format!("values[{}][{}]", k + 1, i + 1), "must be nonnegative"));
                }
            }
        }
        for (i, &v) in values.last().unwrap().iter().enumerate() {
            if !(v > S::zero()) {
                return Err(invalid(format!("values[{}][{}]", values.len(), i + 1), "value at 0 must be positive"));
            }
        }
        let slopes = (0..n)
            .map(|i| {
                let y: Vec<S> = values.iter().map(|r| r[i]).collect();
                pchip_slopes(&times, &y)
            })
            .collect();
        let horizon = -times[0];
        Ok(Self { kind: HistoryKind::Sampled { times, values, slopes }, horizon })
    }

    pub fn kind(&self) -> &HistoryKind<S> {
        &self.kind
    }

    pub fn horizon(&self) -> S {
        self.horizon
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            HistoryKind::Constant { c } | HistoryKind::Oscillatory { c, .. } => c.len(),
            HistoryKind::Sampled { values, .. } => values[0].len(),
        }
    }

    /// Locates the PCHIP interval containing `theta`.
    fn sample_interval(times: &[S], theta: S) -> usize {
        match times.iter().position(|&t| t >= theta) {
            Some(0) => 0,
            Some(k) => k - 1,
            None => times.len() - 2,
        }
    }

    /// `phi_j(theta)` for `theta <= 0`.
    pub fn eval(&self, j: usize, theta: S) -> S {
        let theta = theta.min(S::zero());
        match &self.kind {
            HistoryKind::Constant { c } => c[j],
            HistoryKind::Oscillatory { c, eps, omega } => {
                let th = theta.max(-self.horizon);
                c[j] + eps[j] * (*omega * th).sin()
            }
            HistoryKind::Sampled { times, values, slopes } => {
                let th = theta.max(times[0]);
                let k = Self::sample_interval(times, th);
                let h = times[k + 1] - times[k];
                let s = (th - times[k]) / h;
                let (h00, h10, h01, h11) = super::quad::hermite_basis(s);
                h00 * values[k][j] + h10 * h * slopes[j][k] + h01 * values[k + 1][j] + h11 * h * slopes[j][k + 1]
            }
        }
    }

    /// `phi_j'(theta)`, one-sided from the left at 0.
    pub fn derivative(&self, j: usize, theta: S) -> S {
        match &self.kind {
            HistoryKind::Constant { .. } => S::zero(),
            HistoryKind::Oscillatory { eps, omega, .. } => {
                if theta < -self.horizon {
                    S::zero()
                } else {
                    eps[j] * *omega * (*omega * theta.min(S::zero())).cos()
                }
            }
            HistoryKind::Sampled { times, values, slopes } => {
                if theta < times[0] {
                    return S::zero();
                }
                let th = theta.min(S::zero());
                let k = Self::sample_interval(times, th);
                let h = times[k + 1] - times[k];
                let s = (th - times[k]) / h;
                let (d00, d10, d01, d11) = super::quad::hermite_basis_derivative(s);
                (d00 * values[k][j] + d01 * values[k + 1][j]) / h + d10 * slopes[j][k] + d11 * slopes[j][k + 1]
            }
        }
    }

    pub fn at_zero(&self) -> Vec<S> {
        (0..self.dim()).map(|j| self.eval(j, S::zero())).collect()
    }

    /// Kinks of the history (where a quadrature should split its panels).
    pub fn breakpoints(&self) -> Vec<S> {
        match &self.kind {
            HistoryKind::Constant { .. } => Vec::new(),
            HistoryKind::Oscillatory { .. } => vec![-self.horizon],
            HistoryKind::Sampled { times, .. } => times.clone(),
        }
    }

    /// Lowest value over `[-horizon, 0]` on a fine sampling, plus the tail.
    pub fn is_constant(&self) -> bool {
        matches!(self.kind, HistoryKind::Constant { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_history() {
        let h = HistoryFunction::constant(vec![0.5, 2.0]).unwrap();
        assert_eq!(h.eval(1, -3.0), 2.0);
        assert_eq!(h.derivative(0, -1.0), 0.0);
        assert!(HistoryFunction::constant(vec![0.0]).is_err());
    }

    #[test]
    fn oscillatory_history() {
        let h = HistoryFunction::oscillatory(vec![1.0], vec![0.5], 2.0, 10.0).unwrap();
        assert_eq!(h.eval(0, 0.0), 1.0);
        assert!((h.eval(0, -1.0) - (1.0 + 0.5 * (-2.0f64).sin())).abs() < 1e-15);
        assert_eq!(h.eval(0, -50.0), h.eval(0, -10.0));
        assert!((h.derivative(0, 0.0) - 1.0).abs() < 1e-15);
        assert!(HistoryFunction::oscillatory(vec![1.0], vec![1.5], 2.0, 10.0).is_err());
    }

    #[test]
    fn sampled_history_interpolates_and_stays_nonnegative() {
        let times: Vec<f64> = vec![-3.0, -2.0, -1.0, -0.5, 0.0];
        let values = vec![vec![0.0], vec![2.0], vec![0.0], vec![0.1], vec![1.0]];
        let h = HistoryFunction::sampled(times.clone(), values.clone()).unwrap();
        for (t, v) in times.iter().zip(&values) {
            assert!((h.eval(0, *t) - v[0]).abs() < 1e-14);
        }
        let mut th = -3.0;
        while th <= 0.0 {
            assert!(h.eval(0, th) >= -1e-15, "{th}");
            th += 1e-3;
        }
        // derivative is consistent with the values
        let e = 1e-6f64;
        let fd = (h.eval(0, -1.5 + e) - h.eval(0, -1.5 - e)) / (2.0 * e);
        assert!((fd - h.derivative(0, -1.5)).abs() < 1e-6);
        assert!(HistoryFunction::sampled(vec![-1.0, 0.0], vec![vec![1.0], vec![0.0]]).is_err());
    }

    #[test]
    fn three_samples() {
        let h = HistoryFunction::sampled(vec![-4.0, -2.0, 0.0], vec![vec![0.0], vec![2.0], vec![0.5]]).unwrap();
        assert_eq!(h.eval(0, -2.0), 2.0);
        assert_eq!(h.eval(0, 0.0), 0.5);
    }
}
