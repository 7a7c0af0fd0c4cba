/// Running mean and variance, mergeable in a fixed order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, o: &Moments) {
        if o.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *o;
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        let (na, nb) = (self.n as f64, o.n as f64);
        self.mean += d * nb / n as f64;
        self.m2 += o.m2 + d * d * na * nb / n as f64;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }

    pub fn std_err(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

/// Bivariate counterpart of [`Moments`] keeping the co-moment.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PairMoments {
    pub a: Moments,
    pub b: Moments,
    c: f64,
}

impl PairMoments {
    pub fn push(&mut self, x: f64, y: f64) {
        let dx = x - self.a.mean;
        self.a.push(x);
        self.b.push(y);
        self.c += dx * (y - self.b.mean);
    }

    pub fn merge(&mut self, o: &PairMoments) {
        if o.a.n == 0 {
            return;
        }
        if self.a.n == 0 {
            *self = *o;
            return;
        }
        let (na, nb) = (self.a.n as f64, o.a.n as f64);
        let n = na + nb;
        let dx = o.a.mean - self.a.mean;
        let dy = o.b.mean - self.b.mean;
        self.c += o.c + dx * dy * na * nb / n;
        self.a.merge(&o.a);
        self.b.merge(&o.b);
    }

    pub fn covariance(&self) -> f64 {
        if self.a.n < 2 {
            0.0
        } else {
            self.c / (self.a.n - 1) as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_matches_single_pass() {
        let xs: Vec<f64> = (0..101).map(|i| ((i * 37) % 17) as f64 * 0.3 - 1.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x * x - 0.5 * x).collect();
        let mut all = PairMoments::default();
        for (x, y) in xs.iter().zip(&ys) {
            all.push(*x, *y);
        }
        let mut parts = PairMoments::default();
        for chunk in xs.iter().zip(&ys).collect::<Vec<_>>().chunks(13) {
            let mut p = PairMoments::default();
            for (x, y) in chunk {
                p.push(**x, **y);
            }
            parts.merge(&p);
        }
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let vx = xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>() / (n - 1.0);
        let cxy = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / (n - 1.0);
        for m in [&all, &parts] {
            assert!((m.a.mean() - mx).abs() < 1e-13);
            assert!((m.a.variance() - vx).abs() < 1e-12);
            assert!((m.covariance() - cxy).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_samples_have_zero_error() {
        let mut m = Moments::default();
        for _ in 0..10 {
            m.push(0.7);
        }
        let mut other = m;
        other.merge(&m);
        assert_eq!(other.mean(), 0.7);
        assert_eq!(other.std_err(), 0.0);
    }
}
