//! Small shared helpers.

/// SplitMix64: tiny deterministic RNG for sampled checks. Keeping the
/// generator in-tree pins the sample sequence independently of any
/// external crate version, which keeps check reports and CSV output
/// reproducible bit for bit.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

/// Scientific notation with 7 significant digits and a signed two-digit
/// exponent, e.g. `2.185562e+00`.
pub fn sci7(x: f64) -> String {
    sci(x, 6)
}

/// Scientific notation with 9 significant digits, used for CSV output.
pub fn sci9(x: f64) -> String {
    sci(x, 8)
}

fn sci(x: f64, decimals: usize) -> String {
    let s = format!("{:.*e}", decimals, x);
    // pad rust's bare exponent ("e0", "e-4") to e+00 / e-04
    match s.split_once('e') {
        Some((mant, exp)) => {
            let (sign, digits) = match exp.strip_prefix('-') {
                Some(d) => ('-', d),
                None => ('+', exp),
            };
            format!("{mant}e{sign}{digits:0>2}")
        }
        None => s,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sci7_matches_table_format() {
        assert_eq!(sci7(2.185562), "2.185562e+00");
        assert_eq!(sci7(0.8938842), "8.938842e-01");
        assert_eq!(sci7(-1.589331e-2), "-1.589331e-02");
        assert_eq!(sci7(17.42094), "1.742094e+01");
    }

    #[test]
    fn rng_is_deterministic() {
        let mut a = SplitMix64::new(7);
        let mut b = SplitMix64::new(7);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn rng_range_respects_bounds() {
        let mut rng = SplitMix64::new(42);
        for _ in 0..1000 {
            let x = rng.range(-2.0, 3.0);
            assert!((-2.0..3.0).contains(&x));
        }
    }
}
