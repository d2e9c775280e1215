//! Compensated accumulation and seed derivation shared across the crate.

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
    abs: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
        self.abs += x.abs();
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }

    /// Sum of the magnitudes of everything added; scales the rounding error.
    pub fn abs_total(&self) -> f64 {
        self.abs
    }

    /// Adds `w` times another partial sum, carrying its magnitude along.
    pub fn add_weighted(&mut self, w: f64, other: &NeumaierSum) {
        let abs = self.abs + w.abs() * other.abs;
        self.add(w * other.value());
        self.abs = abs;
    }

    pub fn merge(&mut self, other: &NeumaierSum) {
        let abs = self.abs + other.abs;
        self.add(other.sum);
        self.add(other.comp);
        self.abs = abs;
    }
}

impl std::iter::FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

pub fn neumaier_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<NeumaierSum>().value()
}

/// Generous bound on accumulated rounding for a compensated sum whose
/// terms each carry a few ulps of evaluation error.
pub fn rounding_allowance(abs_total: f64) -> f64 {
    16.0 * f64::EPSILON * abs_total
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Expands a master seed into a sub-seed for the stream identified by `path`:
/// `seed_{k+1} = mix64(seed_k ^ mix64(path[k]))`, starting from `mix64(master)`.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(mix64(master), |acc, &p| mix64(acc ^ mix64(p)))
}
