use num_complex::Complex64;

/// Compensated running sum of `f64` vectors.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct CompensatedSum {
    sum: Vec<f64>,
    comp: Vec<f64>,
}

/// Knuth's branch-free two-sum; the rounding error goes to `comp`.
#[inline]
fn two_sum(sum: &mut f64, comp: &mut f64, x: f64) {
    let t = *sum + x;
    let z = t - *sum;
    *comp += (*sum - (t - z)) + (x - z);
    *sum = t;
}

impl CompensatedSum {
    pub(crate) fn new(len: usize) -> Self {
        Self { sum: vec![0.0; len], comp: vec![0.0; len] }
    }

    pub(crate) fn add_real(&mut self, offset: usize, weight: f64, xs: &[f64]) {
        let (sum, comp) = (&mut self.sum[offset..offset + xs.len()], &mut self.comp[offset..offset + xs.len()]);
        for ((s, c), x) in sum.iter_mut().zip(comp.iter_mut()).zip(xs) {
            two_sum(s, c, weight * x);
        }
    }

    pub(crate) fn add_complex(&mut self, weight: f64, xs: &[Complex64]) {
        let pairs = self.sum.chunks_exact_mut(2).zip(self.comp.chunks_exact_mut(2));
        for ((s, c), z) in pairs.zip(xs) {
            two_sum(&mut s[0], &mut c[0], weight * z.re);
            two_sum(&mut s[1], &mut c[1], weight * z.im);
        }
    }

    pub(crate) fn merge(&mut self, other: &Self) {
        for i in 0..self.sum.len() {
            two_sum(&mut self.sum[i], &mut self.comp[i], other.sum[i]);
            self.comp[i] += other.comp[i];
        }
    }

    pub(crate) fn value(&self, i: usize) -> f64 {
        self.sum[i] + self.comp[i]
    }

    pub(crate) fn scaled_real(&self, range: std::ops::Range<usize>, scale: f64) -> Vec<f64> {
        range.map(|i| self.value(i) * scale).collect()
    }

    pub(crate) fn scaled_complex(&self, scale: f64) -> Vec<Complex64> {
        (0..self.sum.len() / 2).map(|i| Complex64::new(self.value(2 * i), self.value(2 * i + 1)) * scale).collect()
    }
}

/// Scalar version of [`CompensatedSum`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct CompensatedScalar {
    sum: f64,
    comp: f64,
}

impl CompensatedScalar {
    pub(crate) fn add(&mut self, x: f64) {
        two_sum(&mut self.sum, &mut self.comp, x);
    }

    pub(crate) fn merge(&mut self, other: &Self) {
        self.add(other.sum);
        self.comp += other.comp;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_digits() {
        let mut s = CompensatedScalar::default();
        for x in [1.0, 1e100, 1.0, -1e100] {
            s.add(x);
        }
        assert_eq!(s.value(), 2.0);
    }

    #[test]
    fn tenths_sum_exactly() {
        let mut s = CompensatedScalar::default();
        for _ in 0..1_000_000 {
            s.add(0.1);
        }
        assert!((s.value() - 100_000.0).abs() <= 1e-10);
    }
}
