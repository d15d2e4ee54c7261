//! Linear envelopes for bilinear terms.
//!
//! Several subproblems in this crate contain products of two decision
//! variables: supply-air mass exchange `z = m * c` in the ventilation
//! problem and thermal load `w = m * (t - t_c)` in the comfort problem.
//! Each product is replaced by an auxiliary variable constrained to the
//! convex hull of the bilinear surface over a bounding box
//! `x in [x_lo, x_hi]`, `y in [y_lo, y_hi]`:
//!
//! ```text
//! z >= x_lo*y + x*y_lo - x_lo*y_lo        (under-estimator at lower corner)
//! z >= x_hi*y + x*y_hi - x_hi*y_hi        (under-estimator at upper corner)
//! z <= x_hi*y + x*y_lo - x_hi*y_lo        (over-estimator, mixed corner)
//! z <= x_lo*y + x*y_hi - x_lo*y_hi        (over-estimator, mixed corner)
//! ```
//!
//! Every feasible `(x, y, x*y)` point satisfies all four rows (the
//! relaxation is sound), and the rows are tight whenever `x` or `y` sits
//! on a box edge, so fixing one factor recovers the exact product. The
//! envelope degrades gracefully: its worst-case gap is
//! `(x_hi - x_lo) * (y_hi - y_lo) / 4` at the box centre.

use crate::error::{Error, Result};

/// Bounding box for a bilinear product `z = x * y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeBox {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
}

/// One inequality row `cx*x + cy*y + cz*z <= rhs` of an envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeRow {
    pub cx: f64,
    pub cy: f64,
    pub cz: f64,
    pub rhs: f64,
}

impl EnvelopeRow {
    /// Signed slack of the row at a point; feasible iff `<= 0`.
    pub fn violation(&self, x: f64, y: f64, z: f64) -> f64 {
        self.cx * x + self.cy * y + self.cz * z - self.rhs
    }
}

impl EnvelopeBox {
    pub fn new(x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64) -> Result<Self> {
        let b = EnvelopeBox { x_lo, x_hi, y_lo, y_hi };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        for v in [self.x_lo, self.x_hi, self.y_lo, self.y_hi] {
            if !v.is_finite() {
                return Err(Error::Parameter("envelope box bound is not finite".into()));
            }
        }
        if self.x_lo > self.x_hi {
            return Err(Error::Parameter(format!(
                "envelope box has inverted x bounds: [{}, {}]",
                self.x_lo, self.x_hi
            )));
        }
        if self.y_lo > self.y_hi {
            return Err(Error::Parameter(format!(
                "envelope box has inverted y bounds: [{}, {}]",
                self.y_lo, self.y_hi
            )));
        }
        Ok(())
    }

    /// The four envelope rows in `cx*x + cy*y + cz*z <= rhs` form, ordered
    /// as: two under-estimators (lower corner, upper corner), then two
    /// over-estimators.
    pub fn rows(&self) -> [EnvelopeRow; 4] {
        let EnvelopeBox { x_lo, x_hi, y_lo, y_hi } = *self;
        [
            // z >= x_lo*y + x*y_lo - x_lo*y_lo
            EnvelopeRow { cx: y_lo, cy: x_lo, cz: -1.0, rhs: x_lo * y_lo },
            // z >= x_hi*y + x*y_hi - x_hi*y_hi
            EnvelopeRow { cx: y_hi, cy: x_hi, cz: -1.0, rhs: x_hi * y_hi },
            // z <= x_hi*y + x*y_lo - x_hi*y_lo
            EnvelopeRow { cx: -y_lo, cy: -x_hi, cz: 1.0, rhs: -x_hi * y_lo },
            // z <= x_lo*y + x*y_hi - x_lo*y_hi
            EnvelopeRow { cx: -y_hi, cy: -x_lo, cz: 1.0, rhs: -x_lo * y_hi },
        ]
    }

    /// Envelope value range for `z` at a given `(x, y)` inside the box:
    /// the tightest interval implied by the four rows.
    pub fn z_interval(&self, x: f64, y: f64) -> (f64, f64) {
        let lo = (self.x_lo * y + x * self.y_lo - self.x_lo * self.y_lo)
            .max(self.x_hi * y + x * self.y_hi - self.x_hi * self.y_hi);
        let hi = (self.x_hi * y + x * self.y_lo - self.x_hi * self.y_lo)
            .min(self.x_lo * y + x * self.y_hi - self.x_lo * self.y_hi);
        (lo, hi)
    }

    /// Range of the exact product over the box corners. Because `x*y` is
    /// bilinear its extrema over the box are attained at corners, so this
    /// is a valid variable bound for `z`.
    pub fn z_bounds(&self) -> (f64, f64) {
        let c = [
            self.x_lo * self.y_lo,
            self.x_lo * self.y_hi,
            self.x_hi * self.y_lo,
            self.x_hi * self.y_hi,
        ];
        let mut lo = c[0];
        let mut hi = c[0];
        for v in &c[1..] {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
        (lo, hi)
    }

    /// True if `(x, y, z)` satisfies all four rows within `tol`.
    pub fn contains(&self, x: f64, y: f64, z: f64, tol: f64) -> bool {
        self.rows().iter().all(|r| r.violation(x, y, z) <= tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_product_is_always_feasible() {
        let b = EnvelopeBox::new(-1.5, 2.0, 3.0, 7.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let x = rng.gen_range(b.x_lo..=b.x_hi);
            let y = rng.gen_range(b.y_lo..=b.y_hi);
            assert!(
                b.contains(x, y, x * y, 1e-9),
                "exact product escaped envelope at x={x} y={y}"
            );
        }
    }

    #[test]
    fn envelope_is_tight_at_corners() {
        let b = EnvelopeBox::new(0.0, 0.5, 400.0, 800.0).unwrap();
        for x in [b.x_lo, b.x_hi] {
            for y in [b.y_lo, b.y_hi] {
                let (lo, hi) = b.z_interval(x, y);
                assert!((lo - x * y).abs() < 1e-9);
                assert!((hi - x * y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn corner_point_pins_product_value() {
        // Flow box [0.1, 0.5] kg/s, concentration box [400, 800] ppm:
        // at the lower corner the envelope collapses to exactly 40.
        let b = EnvelopeBox::new(0.1, 0.5, 400.0, 800.0).unwrap();
        let (lo, hi) = b.z_interval(0.1, 400.0);
        assert!((lo - 40.0).abs() < 1e-9, "lower envelope {lo}");
        assert!((hi - 40.0).abs() < 1e-9, "upper envelope {hi}");
    }

    #[test]
    fn degenerate_x_box_recovers_linear_product() {
        // Collapsing the x interval turns the relaxation into z = a*y.
        let a = 0.3;
        let b = EnvelopeBox::new(a, a, 400.0, 800.0).unwrap();
        for y in [400.0, 512.7, 800.0] {
            let (lo, hi) = b.z_interval(a, y);
            assert!((lo - a * y).abs() < 1e-9);
            assert!((hi - a * y).abs() < 1e-9);
        }
    }

    #[test]
    fn interior_gap_matches_quarter_area_bound() {
        let b = EnvelopeBox::new(0.0, 2.0, 0.0, 4.0).unwrap();
        let (xm, ym) = (1.0, 2.0);
        let (lo, hi) = b.z_interval(xm, ym);
        let worst = (b.x_hi - b.x_lo) * (b.y_hi - b.y_lo) / 4.0;
        assert!(xm * ym - lo <= worst + 1e-12);
        assert!(hi - xm * ym <= worst + 1e-12);
        // At the centre the bound is attained.
        assert!((xm * ym - lo - worst).abs() < 1e-9);
    }

    #[test]
    fn z_bounds_cover_envelope() {
        let b = EnvelopeBox::new(-2.0, 3.0, -1.0, 5.0).unwrap();
        let (zl, zh) = b.z_bounds();
        assert_eq!(zl, -10.0); // (-2) * 5
        assert_eq!(zh, 15.0); // 3 * 5
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let x = rng.gen_range(b.x_lo..=b.x_hi);
            let y = rng.gen_range(b.y_lo..=b.y_hi);
            let (lo, hi) = b.z_interval(x, y);
            assert!(lo >= zl - 1e-9 && hi <= zh + 1e-9);
        }
    }

    #[test]
    fn inverted_bounds_are_rejected() {
        assert!(EnvelopeBox::new(1.0, 0.0, 0.0, 1.0).is_err());
        assert!(EnvelopeBox::new(0.0, 1.0, 2.0, 1.0).is_err());
        assert!(EnvelopeBox::new(0.0, f64::NAN, 0.0, 1.0).is_err());
    }
}
