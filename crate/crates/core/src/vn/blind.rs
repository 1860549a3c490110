//! Blind decoders: a fixed, finite family of metric directions used without
//! knowing which component the channel belongs to.

use super::CenteredDirection;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::VnGeometry;

#[derive(Clone, Debug, PartialEq)]
pub struct BlindRate<T> {
    /// `min_0 max_k ⟨L̃0, u_k⟩₊² / ‖u_k‖²`.
    pub rate: T,
    /// `min_0 ‖L̃0‖²`.
    pub capacity: T,
    /// `rate / capacity`, absent when the capacity is zero.
    pub ratio: Option<T>,
    /// Member attaining the outer minimum.
    pub binding_member: usize,
}

/// VN rate of the generalized decoder with centered metric directions `metrics`
/// over the member directions `members`.
pub fn blind_polytope_rate<T: Scalar>(
    geometry: &VnGeometry<T>,
    metrics: &[CenteredDirection<T>],
    members: &[CenteredDirection<T>],
) -> Result<BlindRate<T>> {
    if metrics.is_empty() {
        return Err(Error::EmptyMetrics);
    }
    if members.is_empty() {
        return Err(Error::InvalidCompoundSet("no member directions".into()));
    }
    if let Some(k) = metrics.iter().position(|u| u.tilde_norm_sq <= T::zero()) {
        return Err(Error::InvalidDirection(format!("metric direction {k} has zero centered norm")));
    }
    let mut rate: Option<(T, usize)> = None;
    let mut capacity = members[0].tilde_norm_sq;
    for (i, m) in members.iter().enumerate() {
        capacity = capacity.min_of(m.tilde_norm_sq);
        let mut best = T::zero();
        for u in metrics {
            let ip = geometry.inner(&m.tilde, &u.tilde)?;
            if ip > T::zero() {
                best = best.max_of(ip * ip / u.tilde_norm_sq);
            }
        }
        if rate.is_none_or(|(r, _)| best < r) {
            rate = Some((best, i));
        }
    }
    let (rate, binding_member) = rate.expect("members is nonempty");
    let ratio = (capacity > T::zero()).then(|| rate / capacity);
    Ok(BlindRate { rate, capacity, ratio, binding_member })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use crate::probability::Distribution;
    use crate::vn::{Counterexample, VnDirection};

    /// Centered 2x3 directions with uniform weights span a 2-dim space; this basis is orthonormal.
    fn basis() -> (VnGeometry<f64>, Matrix<f64>, Matrix<f64>) {
        let g = VnGeometry::new(Distribution::uniform(2), Distribution::uniform(3));
        let s = 0.5f64.sqrt();
        let t = 1.5f64.sqrt();
        let e1 = Matrix::from_f64_rows(&[&[2.0 * s, -s, -s], &[-2.0 * s, s, s]]).unwrap();
        let e2 = Matrix::from_f64_rows(&[&[0.0, t, -t], &[0.0, -t, t]]).unwrap();
        (g, e1, e2)
    }

    fn at_angle(g: &VnGeometry<f64>, e1: &Matrix<f64>, e2: &Matrix<f64>, phi: f64, r: f64) -> CenteredDirection<f64> {
        let m = e1.zip_map(e2, |x, y| r * (phi.cos() * x + phi.sin() * y)).unwrap();
        g.center(&VnDirection::new(m, g.noise.clone()).unwrap()).unwrap()
    }

    #[test]
    fn basis_is_orthonormal() {
        let (g, e1, e2) = basis();
        assert!((g.norm_sq(&e1).unwrap() - 1.0).abs() < 1e-12);
        assert!((g.norm_sq(&e2).unwrap() - 1.0).abs() < 1e-12);
        assert!(g.inner(&e1, &e2).unwrap().abs() < 1e-12);
    }

    #[test]
    fn three_directions_at_120_degrees() {
        let (g, e1, e2) = basis();
        let tau = std::f64::consts::TAU;
        let metrics: Vec<_> = (0..3).map(|k| at_angle(&g, &e1, &e2, k as f64 * tau / 3.0, 1.0)).collect();
        let n = 10_000;
        let members: Vec<_> = (0..n).map(|i| at_angle(&g, &e1, &e2, i as f64 * tau / n as f64, 2.0)).collect();
        let got = blind_polytope_rate(&g, &metrics, &members).unwrap();
        // brute-force angular sweep: each boundary point sees its nearest metric direction
        let mut oracle = f64::INFINITY;
        for i in 0..n {
            let phi = i as f64 * tau / n as f64;
            let best = (0..3).map(|k| (phi - k as f64 * tau / 3.0).cos().max(0.0).powi(2)).fold(0.0, f64::max);
            oracle = oracle.min(best);
        }
        assert!((got.ratio.unwrap() - oracle).abs() < 1e-9);
        assert!((oracle - 0.25).abs() < 1e-6);
    }

    #[test]
    fn matched_direction_gives_full_capacity() {
        let ce = Counterexample::<f64>::new();
        let g = &ce.geometry;
        let members: Vec<_> = [&ce.l0, &ce.l1].iter().map(|d| g.center(d).unwrap()).collect();
        let got = blind_polytope_rate(g, &[members[1].clone()], &members).unwrap();
        assert!(got.ratio.unwrap() >= 1.0 - 1e-12);
    }

    #[test]
    fn orthogonal_metric_gives_zero() {
        let (g, e1, e2) = basis();
        let m = at_angle(&g, &e1, &e2, 0.0, 1.0);
        let member = at_angle(&g, &e1, &e2, std::f64::consts::FRAC_PI_2, 1.0);
        assert!(blind_polytope_rate(&g, &[m], &[member]).unwrap().rate.abs() < 1e-12);
    }
}
