use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed interval a linguistic variable lives on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Universe {
    pub lo: f64,
    pub hi: f64,
}

impl Universe {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidUniverse { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn span(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, u: f64) -> bool {
        u >= self.lo && u <= self.hi
    }

    /// Apex position of label `j` out of `m` evenly spaced labels.
    pub fn anchor(&self, j: usize, m: usize) -> f64 {
        if m <= 1 {
            self.midpoint()
        } else if j + 1 == m {
            self.hi
        } else {
            self.lo + j as f64 * self.span() / (m - 1) as f64
        }
    }
}

/// Triangle with left base `a`, apex `b` and right base `c`.
///
/// Either side may be degenerate (`a == b` or `b == c`), in which case that
/// side is a vertical edge and the apex evaluates to exactly one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangularMF {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl TriangularMF {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && c.is_finite() && a <= b && b <= c) {
            return Err(Error::InvalidMembership { a, b, c });
        }
        Ok(Self { a, b, c })
    }

    /// Symmetric triangle `(anchor - half_width, anchor, anchor + half_width)`.
    pub fn centered(anchor: f64, half_width: f64) -> Result<Self> {
        Self::new(anchor - half_width, anchor, anchor + half_width)
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        membership(u, self)
    }

    /// Length of the intersection of the two supports `[a, c]`.
    pub fn support_overlap(&self, other: &TriangularMF) -> f64 {
        (self.c.min(other.c) - self.a.max(other.a)).max(0.0)
    }
}

/// Degree of membership of `u` in the triangle; zero outside `[a, c]`.
#[inline]
pub fn membership(u: f64, mf: &TriangularMF) -> f64 {
    let TriangularMF { a, b, c } = *mf;
    if u < a || u > c || u.is_nan() {
        0.0
    } else if u == b {
        1.0
    } else if u < b {
        (u - a) / (b - a)
    } else {
        (c - u) / (c - b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn apex_and_ramps() {
        let mf = TriangularMF::new(0.0, 5.0, 10.0).unwrap();
        assert_eq!(membership(5.0, &mf), 1.0);
        assert_eq!(membership(2.5, &mf), 0.5);
        assert_eq!(membership(7.5, &mf), 0.5);
        assert_eq!(membership(12.0, &mf), 0.0);
        assert_eq!(membership(-0.1, &mf), 0.0);
        assert_eq!(membership(0.0, &mf), 0.0);
    }

    #[test]
    fn degenerate_sides() {
        let left = TriangularMF::new(5.0, 5.0, 10.0).unwrap();
        assert_eq!(left.eval(5.0), 1.0);
        assert_eq!(left.eval(4.999), 0.0);
        assert_eq!(left.eval(7.5), 0.5);
        let right = TriangularMF::new(0.0, 5.0, 5.0).unwrap();
        assert_eq!(right.eval(5.0), 1.0);
        assert_eq!(right.eval(5.001), 0.0);
        let spike = TriangularMF::new(3.0, 3.0, 3.0).unwrap();
        assert_eq!(spike.eval(3.0), 1.0);
        assert_eq!(spike.eval(3.1), 0.0);
    }

    #[test]
    fn rejects_unordered() {
        assert!(TriangularMF::new(1.0, 0.0, 2.0).is_err());
        assert!(TriangularMF::centered(5.0, -1.0).is_err());
        assert!(Universe::new(1.0, 1.0).is_err());
    }

    #[test]
    fn anchors_are_evenly_spaced() {
        let u = Universe::new(0.0, 10.0).unwrap();
        let anchors: Vec<f64> = (0..3).map(|j| u.anchor(j, 3)).collect();
        assert_eq!(anchors, vec![0.0, 5.0, 10.0]);
        assert_eq!(u.anchor(0, 1), 5.0);
    }

    proptest! {
        #[test]
        fn bounded_in_unit_interval(a in -50.0..50.0f64, w1 in 0.0..20.0f64, w2 in 0.0..20.0f64, u in -100.0..100.0f64) {
            let mf = TriangularMF::new(a, a + w1, a + w1 + w2).unwrap();
            let m = membership(u, &mf);
            prop_assert!((0.0..=1.0).contains(&m));
        }

        #[test]
        fn continuous_for_proper_triangles(a in -50.0..50.0f64, w1 in 0.1..20.0f64, w2 in 0.1..20.0f64, u in -100.0..100.0f64) {
            let mf = TriangularMF::new(a, a + w1, a + w1 + w2).unwrap();
            let h = 1e-7;
            let lipschitz = 1.0 / w1.min(w2);
            prop_assert!((membership(u + h, &mf) - membership(u, &mf)).abs() <= lipschitz * h * 1.0001 + 1e-12);
        }
    }
}
