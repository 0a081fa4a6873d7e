use crate::error::{Error, Result};

/// `⌊nu⌋`, robust to `u = k/n` landing a rounding error below `k`.
pub fn barred_index(u: f64, n: u32) -> usize {
    (f64::from(n) * u + 1e-9).floor().max(0.0) as usize
}

/// Active-count clock `η̄_u = τ̃_{⌊nu⌋}` and its inverse
/// `η_u = inf{t : η̄_t > u} - 1/n = Ñ(u)/n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeChange {
    n: u32,
    /// `τ̃_1 < τ̃_2 < …`
    times: Vec<f64>,
}

impl TimeChange {
    pub fn new(n: u32, active_times: Vec<f64>) -> Result<Self> {
        if active_times.is_empty() {
            return Err(Error::NotEnoughActiveEvents);
        }
        if active_times.windows(2).any(|w| w[0] >= w[1]) || active_times[0] < 0.0 {
            return Err(Error::InvalidArgument("active times must be positive and increasing".into()));
        }
        Ok(Self { n, times: active_times })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// `Ñ(t)`, the number of active events in `[0, t]`.
    pub fn count(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s <= t)
    }

    /// `η̄_u`; errors when `⌊nu⌋` exceeds the recorded active events.
    pub fn eta_bar(&self, u: f64) -> Result<f64> {
        match barred_index(u, self.n) {
            0 => Ok(0.0),
            k => self.times.get(k - 1).copied().ok_or(Error::NotEnoughActiveEvents),
        }
    }

    pub fn eta(&self, u: f64) -> f64 {
        self.count(u) as f64 / f64::from(self.n)
    }

    /// `sup_{0 <= u <= horizon} |η_u - u|`, taken over the jump points where
    /// the sawtooth attains its extremes.
    pub fn sup_deviation(&self, horizon: f64) -> f64 {
        let n = f64::from(self.n);
        let mut sup: f64 = 0.0;
        for (k, &t) in self.times.iter().enumerate() {
            if t > horizon {
                break;
            }
            // left limit (k events before t) and value at t (k+1 events)
            sup = sup.max((k as f64 / n - t).abs()).max(((k + 1) as f64 / n - t).abs());
        }
        sup.max((self.count(horizon) as f64 / n - horizon).abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_path_is_an_error() {
        assert_eq!(TimeChange::new(16, vec![]).unwrap_err(), Error::NotEnoughActiveEvents);
    }

    #[test]
    fn equally_spaced_jumps_give_identity_up_to_grid() {
        let n = 20;
        let times: Vec<f64> = (1..=40).map(|k| k as f64 / n as f64).collect();
        let tc = TimeChange::new(n, times).unwrap();
        for i in 0..=200 {
            let u = i as f64 * 0.01;
            assert!((tc.eta(u) - u).abs() <= 1.0 / n as f64 + 1e-12);
        }
        assert!(tc.sup_deviation(1.9) <= 1.0 / n as f64 + 1e-12);
    }

    #[test]
    fn inverse_relation_on_grid_points() {
        let tc = TimeChange::new(4, vec![0.1, 0.35, 0.4, 0.9, 1.3]).unwrap();
        for k in 0..=5u32 {
            let u = f64::from(k) / 4.0;
            let t = tc.eta_bar(u).unwrap();
            assert!((tc.eta(t) - u).abs() < 1e-12, "k={k}");
        }
        assert!(tc.eta_bar(1.5).is_err());
        assert!((tc.eta(0.05)).abs() < 1e-15);
    }

    #[test]
    fn sup_deviation_hand_case() {
        // n = 2, jumps at 0.2 and 1.4, horizon 1: candidates |0-.2|, |.5-.2|, |.5-1|
        let tc = TimeChange::new(2, vec![0.2, 1.4]).unwrap();
        assert!((tc.sup_deviation(1.0) - 0.5).abs() < 1e-15);
    }
}
