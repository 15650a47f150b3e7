//! Error-free transformations for residuals that must telescope exactly.

/// `a + b = s + e` exactly.
#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Double-double accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Acc {
    hi: f64,
    lo: f64,
}

impl Acc {
    pub(crate) fn new(v: f64) -> Self {
        Self { hi: v, lo: 0.0 }
    }

    #[inline]
    pub(crate) fn add(&mut self, v: f64) {
        let (s, e) = two_sum(self.hi, v);
        self.hi = s;
        self.lo += e;
    }

    /// Adds `a * b` without rounding the product.
    #[inline]
    pub(crate) fn add_product(&mut self, a: f64, b: f64) {
        let p = a * b;
        let e = a.mul_add(b, -p);
        self.add(p);
        self.lo += e;
    }

    pub(crate) fn value(self) -> f64 {
        self.hi + self.lo
    }
}
