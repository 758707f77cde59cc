//! Two warm-up compactness criteria executed through the pullback cover:
//! truncation of little-lp sequences with structurally zero tails, and the
//! sup-norm criterion for function families on finite metric spaces.

use crate::error::Error;
use crate::grid::{check_exponent, compensated_sum, nth_root, pow_abs};
use crate::kolmogorov::{pullback_cover, CoverCertificate};

/// Family of little-lp sequences stored as finite prefixes. The tail beyond
/// each stored prefix is exactly zero, so the truncation condition holds
/// structurally and all norms are computable exactly.
#[derive(Debug, Clone)]
pub struct SequenceFamily {
    members: Vec<Vec<f64>>,
    p: f64,
}

impl SequenceFamily {
    pub fn new(members: Vec<Vec<f64>>, p: f64) -> Result<Self, Error> {
        check_exponent(p)?;
        if members.is_empty() {
            return Err(Error::EmptyFamily);
        }
        for (i, m) in members.iter().enumerate() {
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "member {i} contains a non-finite value"
                )));
            }
        }
        Ok(SequenceFamily { members, p })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn member(&self, i: usize) -> &[f64] {
        &self.members[i]
    }

    /// Longest stored prefix across the family: beyond it every tail is zero.
    pub fn max_prefix_len(&self) -> usize {
        self.members.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Exact little-lp distance between two members (missing entries are 0).
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (&self.members[i], &self.members[j]);
        let len = a.len().max(b.len());
        let total = compensated_sum((0..len).map(|t| {
            let x = a.get(t).copied().unwrap_or(0.0);
            let y = b.get(t).copied().unwrap_or(0.0);
            pow_abs(x - y, self.p)
        }));
        nth_root(total, self.p)
    }
}

/// Truncation cover for prefix-stored sequences: members are mapped to their
/// first `n` coordinates (n = the longest stored prefix, so the dropped tails
/// are exactly zero), greedily netted at `eps`, and pulled back to a cover
/// with claimed radius `3 * eps`. The verified distance is typically much
/// smaller because the embedding loses nothing here.
pub fn lp_truncation_certify(family: &SequenceFamily, eps: f64) -> Result<CoverCertificate, Error> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be a positive real, got {eps}"
        )));
    }
    let n = family.max_prefix_len();
    let images: Vec<Vec<f64>> = family
        .members
        .iter()
        .map(|m| {
            let mut img = m.clone();
            img.resize(n, 0.0);
            img
        })
        .collect();
    let p = family.p;
    let net = pullback_cover(&images, eps, 3.0 * eps, |a, b| {
        nth_root(
            compensated_sum(a.iter().zip(b).map(|(&x, &y)| pow_abs(x - y, p))),
            p,
        )
    });
    net.verify(eps, |i, j| family.distance(i, j))
}

/// Finite metric space with a family of real functions on its points. The
/// distance table is validated as a metric (symmetry, zero diagonal,
/// triangle inequality) at construction.
#[derive(Debug, Clone)]
pub struct DiscreteMetricFamily {
    distances: Vec<Vec<f64>>,
    members: Vec<Vec<f64>>,
}

impl DiscreteMetricFamily {
    pub fn new(distances: Vec<Vec<f64>>, members: Vec<Vec<f64>>) -> Result<Self, Error> {
        let m = distances.len();
        if m == 0 {
            return Err(Error::InvalidArgument("metric space needs points".into()));
        }
        if distances.iter().any(|row| row.len() != m) {
            return Err(Error::InvalidArgument(
                "distance table must be square".into(),
            ));
        }
        for i in 0..m {
            if distances[i][i] != 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "distance table has nonzero diagonal at {i}"
                )));
            }
            for j in 0..m {
                let d = distances[i][j];
                if !(d.is_finite() && d >= 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "distance ({i},{j}) = {d} is not a nonnegative real"
                    )));
                }
                if (d - distances[j][i]).abs() > 1e-12 {
                    return Err(Error::InvalidArgument(format!(
                        "distance table not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    if distances[i][k] > distances[i][j] + distances[j][k] + 1e-12 {
                        return Err(Error::InvalidArgument(format!(
                            "triangle inequality fails on points ({i},{j},{k})"
                        )));
                    }
                }
            }
        }
        if members.is_empty() {
            return Err(Error::EmptyFamily);
        }
        for (i, f) in members.iter().enumerate() {
            if f.len() != m {
                return Err(Error::InvalidArgument(format!(
                    "member {i} has {} values for {m} points",
                    f.len()
                )));
            }
            if f.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "member {i} contains a non-finite value"
                )));
            }
        }
        Ok(DiscreteMetricFamily { distances, members })
    }

    pub fn point_count(&self) -> usize {
        self.distances.len()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn member(&self, i: usize) -> &[f64] {
        &self.members[i]
    }

    /// Sup-norm distance between two members over all points.
    pub fn sup_distance(&self, i: usize, j: usize) -> f64 {
        self.members[i]
            .iter()
            .zip(&self.members[j])
            .map(|(&a, &b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Largest oscillation of any member over point pairs strictly closer than
/// `delta`; zero when no pair qualifies.
pub fn equicontinuity_modulus(family: &DiscreteMetricFamily, delta: f64) -> f64 {
    let m = family.point_count();
    let mut worst = 0.0_f64;
    for f in &family.members {
        for x in 0..m {
            for y in (x + 1)..m {
                if family.distances[x][y] < delta {
                    worst = worst.max((f[x] - f[y]).abs());
                }
            }
        }
    }
    worst
}

/// Sup-norm cover through landmark values. Requires every point to sit in
/// the equicontinuity neighborhood of some landmark: the gap
/// `min_landmark max_member |f(x) - f(landmark)|` must be strictly below
/// `eps` for every point; the worst offender is reported otherwise.
///
/// Members are embedded as their landmark-value vectors, netted at `eps` in
/// the sup norm, and pulled back. The claimed radius is
/// `eps + 2 * worst_gap` (at most `3 * eps`), which collapses to `eps`
/// exactly when every point is a landmark.
pub fn aa_certify(
    family: &DiscreteMetricFamily,
    eps: f64,
    landmarks: &[usize],
) -> Result<CoverCertificate, Error> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be a positive real, got {eps}"
        )));
    }
    let m = family.point_count();
    if landmarks.is_empty() || landmarks.iter().any(|&l| l >= m) {
        return Err(Error::InvalidArgument(
            "landmarks must be a nonempty set of valid point indices".into(),
        ));
    }

    // equicontinuity gap of each point relative to its best landmark
    let mut worst_gap = 0.0_f64;
    let mut worst_point = 0usize;
    for x in 0..m {
        let gap = landmarks
            .iter()
            .map(|&l| {
                family
                    .members
                    .iter()
                    .map(|f| (f[x] - f[l]).abs())
                    .fold(0.0, f64::max)
            })
            .fold(f64::INFINITY, f64::min);
        if gap > worst_gap {
            worst_gap = gap;
            worst_point = x;
        }
    }
    if worst_gap >= eps {
        return Err(Error::LandmarksInsufficient {
            point: worst_point,
            gap: worst_gap,
        });
    }

    let images: Vec<Vec<f64>> = family
        .members
        .iter()
        .map(|f| landmarks.iter().map(|&l| f[l]).collect())
        .collect();
    let radius = eps + 2.0 * worst_gap;
    let net = pullback_cover(&images, eps, radius, |a, b| {
        a.iter()
            .zip(b)
            .map(|(&x, &y)| (x - y).abs())
            .fold(0.0, f64::max)
    });
    net.verify(eps, |i, j| family.sup_distance(i, j))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_vectors(count: usize) -> Vec<Vec<f64>> {
        (0..count)
            .map(|i| {
                let mut v = vec![0.0; i + 1];
                v[i] = 1.0;
                v
            })
            .collect()
    }

    #[test]
    fn zero_sequence_family_collapses() {
        let family = SequenceFamily::new(vec![vec![0.0, 0.0]], 2.0).unwrap();
        let cert = lp_truncation_certify(&family, 0.5).unwrap();
        assert_eq!(cert.centers.len(), 1);
        assert_eq!(cert.verified_max_distance, 0.0);
    }

    #[test]
    fn unit_vector_family_keeps_all_centers() {
        for p in [1.0, 2.0] {
            let family = SequenceFamily::new(unit_vectors(5), p).unwrap();
            let cert = lp_truncation_certify(&family, 0.4).unwrap();
            assert_eq!(cert.centers.len(), 5);
            // pairwise distance is 2^(1/p), verified by brute force
            let expected = 2.0_f64.powf(1.0 / p);
            for i in 0..5 {
                for j in (i + 1)..5 {
                    assert!((family.distance(i, j) - expected).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn duplicate_members_collapse() {
        let e1 = vec![1.0];
        let family = SequenceFamily::new(vec![e1.clone(), e1.clone(), e1], 1.0).unwrap();
        let cert = lp_truncation_certify(&family, 0.4).unwrap();
        assert_eq!(cert.centers.len(), 1);
        assert_eq!(cert.assignment, vec![0, 0, 0]);
    }

    #[test]
    fn truncation_radius_bound_holds() {
        let family = SequenceFamily::new(
            vec![
                vec![0.1, 0.4, -0.2],
                vec![0.1, 0.35, -0.2, 0.0],
                vec![-0.5, 0.2],
                vec![0.12, 0.38, -0.18],
            ],
            2.0,
        )
        .unwrap();
        let eps = 0.2;
        let cert = lp_truncation_certify(&family, eps).unwrap();
        assert!((cert.radius - 3.0 * eps).abs() < 1e-15);
        for (i, &c) in cert.assignment.iter().enumerate() {
            assert!(family.distance(i, cert.centers[c]) <= cert.radius);
        }
    }

    fn path_metric(points: usize) -> Vec<Vec<f64>> {
        (0..points)
            .map(|i| (0..points).map(|j| (i as f64 - j as f64).abs()).collect())
            .collect()
    }

    #[test]
    fn equicontinuity_modulus_examples() {
        let constant =
            DiscreteMetricFamily::new(path_metric(3), vec![vec![2.0, 2.0, 2.0]]).unwrap();
        assert_eq!(equicontinuity_modulus(&constant, 5.0), 0.0);

        let two = DiscreteMetricFamily::new(path_metric(2), vec![vec![0.0, 1.0]]).unwrap();
        assert_eq!(equicontinuity_modulus(&two, 0.5), 0.0); // no pair qualifies
        assert_eq!(equicontinuity_modulus(&two, 2.0), 1.0);
    }

    #[test]
    fn metric_validation_catches_bad_tables() {
        // triangle violation: d(0,2) = 5 > d(0,1) + d(1,2) = 2
        let bad = vec![
            vec![0.0, 1.0, 5.0],
            vec![1.0, 0.0, 1.0],
            vec![5.0, 1.0, 0.0],
        ];
        assert!(DiscreteMetricFamily::new(bad, vec![vec![0.0; 3]]).is_err());
        let asym = vec![vec![0.0, 1.0], vec![2.0, 0.0]];
        assert!(DiscreteMetricFamily::new(asym, vec![vec![0.0; 2]]).is_err());
    }

    #[test]
    fn full_landmark_set_gives_radius_eps() {
        let members = vec![vec![0.0, 0.5, 1.0], vec![0.2, 0.6, 0.9]];
        let family = DiscreteMetricFamily::new(path_metric(3), members).unwrap();
        let eps = 0.45;
        let cert = aa_certify(&family, eps, &[0, 1, 2]).unwrap();
        assert_eq!(cert.radius, eps);
        assert!(cert.verified_max_distance <= eps);
    }

    #[test]
    fn lipschitz_family_on_path_graph() {
        let points = 7;
        let metric = path_metric(points);
        // 1-Lipschitz members on the path graph
        let members: Vec<Vec<f64>> = (0..4)
            .map(|c| {
                (0..points)
                    .map(|x| (x as f64 - c as f64).abs().min(3.0))
                    .collect()
            })
            .collect();
        let family = DiscreteMetricFamily::new(metric, members).unwrap();
        let landmarks: Vec<usize> = (0..points).step_by(2).collect();
        let eps = 1.5;
        let cert = aa_certify(&family, eps, &landmarks).unwrap();
        assert!(cert.radius <= 3.0 * eps);
        for (i, &c) in cert.assignment.iter().enumerate() {
            assert!(family.sup_distance(i, cert.centers[c]) <= cert.radius);
        }
    }

    #[test]
    fn singleton_member_single_center() {
        let family =
            DiscreteMetricFamily::new(path_metric(4), vec![vec![0.3, 0.1, -0.2, 0.0]]).unwrap();
        let cert = aa_certify(&family, 1.0, &[0, 2]).unwrap();
        assert_eq!(cert.centers.len(), 1);
    }

    #[test]
    fn insufficient_landmarks_report_worst_point() {
        // member oscillates fast; a single far landmark cannot control point 3
        let members = vec![vec![0.0, 5.0, 0.0, 9.0]];
        let family = DiscreteMetricFamily::new(path_metric(4), members).unwrap();
        let err = aa_certify(&family, 1.0, &[0]).unwrap_err();
        match err {
            Error::LandmarksInsufficient { point, gap } => {
                assert_eq!(point, 3);
                assert!((gap - 9.0).abs() < 1e-12);
            }
            other => panic!("expected LandmarksInsufficient, got {other:?}"),
        }
    }
}
