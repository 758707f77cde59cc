//! One-dimensional bounded-variation machinery: total variation with
//! zero-extension boundary jumps, the Jordan decomposition into nondecreasing
//! parts, the translation bound `defect <= |y| * TV`, and a finite pigeonhole
//! realization of the selection principle for TV- and sup-bounded sequences.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::grid::{compensated_sum, GridFunction};
use crate::moduli::translation_defect;

/// Sampled function of bounded variation on a one-dimensional grid.
///
/// The cached total variation is taken over all of `R` with the function
/// extended by zero, so it includes the two boundary jumps `|first|` and
/// `|last|` on top of the interior sum of absolute increments. For step
/// functions this attains the supremum over admissible partitions exactly.
#[derive(Debug, Clone)]
pub struct BVFunction {
    base: GridFunction,
    tv: f64,
}

impl BVFunction {
    pub fn new(base: GridFunction) -> Result<Self, Error> {
        if base.grid().dim() != 1 {
            return Err(Error::DimensionError {
                got: base.grid().dim(),
            });
        }
        let v = base.values();
        let interior = compensated_sum(v.windows(2).map(|w| (w[1] - w[0]).abs()));
        let tv = interior + v[0].abs() + v[v.len() - 1].abs();
        Ok(BVFunction { base, tv })
    }

    pub fn base(&self) -> &GridFunction {
        &self.base
    }

    pub fn values(&self) -> &[f64] {
        self.base.values()
    }

    /// Total variation of the zero extension, boundary jumps included.
    pub fn total_variation(&self) -> f64 {
        self.tv
    }

    /// Variation over the support interval only (no boundary jumps); this is
    /// what the Jordan parts account for.
    pub fn interior_variation(&self) -> f64 {
        compensated_sum(self.values().windows(2).map(|w| (w[1] - w[0]).abs()))
    }

    pub fn sup_norm(&self) -> f64 {
        self.base.sup_norm()
    }

    /// Support interval `[a, b]` of the sampled box.
    pub fn support_interval(&self) -> (f64, f64) {
        let g = self.base.grid();
        let a = g.origin()[0];
        (a, a + g.shape()[0] as f64 * g.spacing())
    }
}

/// Jordan decomposition `u = v - w` over the sample sequence: `v` starts at
/// `u(a)` and accumulates the positive variation, `w` starts at zero and
/// accumulates the negative variation. Both parts are nondecreasing and the
/// reconstruction is exact sample by sample (each increment lands in exactly
/// one part, untouched).
pub fn jordan_decomposition(u: &BVFunction) -> (BVFunction, BVFunction) {
    let vals = u.values();
    let mut v = Vec::with_capacity(vals.len());
    let mut w = Vec::with_capacity(vals.len());
    let mut pos = vals[0];
    let mut neg = 0.0;
    v.push(pos);
    w.push(neg);
    for t in vals.windows(2) {
        let d = t[1] - t[0];
        if d >= 0.0 {
            pos += d;
        } else {
            neg -= d;
        }
        v.push(pos);
        w.push(neg);
    }
    let grid = u.base.grid().clone();
    (
        BVFunction::new(GridFunction::from_parts(grid.clone(), v)).expect("dim 1"),
        BVFunction::new(GridFunction::from_parts(grid, w)).expect("dim 1"),
    )
}

/// L1 translation defect at `y = k*h` (zero-extended) next to its variation
/// bound `|y| * TV(u)`; the defect never exceeds the bound.
pub fn tv_translation_check(u: &BVFunction, k: i64) -> (f64, f64) {
    let defect = translation_defect(u.base(), &[k], 1.0).expect("p = 1 is valid");
    let h = u.base.grid().spacing();
    let bound = (k as f64 * h).abs() * u.tv;
    (defect, bound)
}

/// Indices selected by the pigeonhole pass, with the tolerances they certify:
/// any two selected members differ by at most `tau` at every grid point, and
/// hence by at most `l1_bound = tau * (b - a)` in L1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionResult {
    pub indices: Vec<usize>,
    pub tau: f64,
    pub l1_bound: f64,
    pub bins_per_point: usize,
}

/// One pigeonhole sweep over the grid points: at each point the surviving
/// indices are grouped by value bin and the largest group survives, lowest
/// bin winning ties.
fn pigeonhole_pass(
    mut survivors: Vec<usize>,
    parts: &[Vec<f64>],
    points: usize,
    bin_width: f64,
    bin_offset: f64,
    bin_count: usize,
) -> Vec<usize> {
    for point in 0..points {
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &i in &survivors {
            let raw = ((parts[i][point] + bin_offset) / bin_width).floor();
            let bin = (raw.max(0.0) as usize).min(bin_count - 1);
            groups.entry(bin).or_default().push(i);
        }
        let mut best: Option<&Vec<usize>> = None;
        for group in groups.values() {
            // strict comparison keeps the lowest bin on ties
            if best.is_none_or(|b| group.len() > b.len()) {
                best = Some(group);
            }
        }
        survivors = best.expect("survivors nonempty").clone();
    }
    survivors
}

/// Finite selection principle: verifies the TV and sup-norm bounds, Jordan
/// decomposes every member, then runs the pigeonhole pass on the
/// nondecreasing v-parts followed by the w-parts within the survivors.
///
/// Each pass bins values at width `tau / 2`, so two surviving members agree
/// to `tau / 2` in each part and to `tau` in `u = v - w` at every grid
/// point. Bins span `[-2M, 2M]` because the parts of a function with
/// `|u| <= M` and `TV <= M` range up to `2M`. How many members survive is
/// data-dependent and not guaranteed, but the result is never empty.
pub fn helly_select(
    sequence: &[BVFunction],
    tau: f64,
    m_check: f64,
) -> Result<SelectionResult, Error> {
    if sequence.is_empty() {
        return Err(Error::EmptyFamily);
    }
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tau must be a positive real, got {tau}"
        )));
    }
    if !(m_check.is_finite() && m_check > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "M bound must be a positive real, got {m_check}"
        )));
    }
    let grid = sequence[0].base().grid();
    for (i, u) in sequence.iter().enumerate() {
        grid.check_compatible(u.base().grid(), &format!("sequence member {i}"))?;
        if u.total_variation() > m_check {
            return Err(Error::BoundsViolated {
                member: i,
                reason: format!(
                    "total variation {:e} exceeds the stated bound {m_check:e}",
                    u.total_variation()
                ),
            });
        }
        if u.sup_norm() > m_check {
            return Err(Error::BoundsViolated {
                member: i,
                reason: format!(
                    "sup norm {:e} exceeds the stated bound {m_check:e}",
                    u.sup_norm()
                ),
            });
        }
    }

    let points = grid.shape()[0];
    let mut v_parts = Vec::with_capacity(sequence.len());
    let mut w_parts = Vec::with_capacity(sequence.len());
    for u in sequence {
        let (v, w) = jordan_decomposition(u);
        v_parts.push(v.values().to_vec());
        w_parts.push(w.values().to_vec());
    }

    let bin_width = tau / 2.0;
    let bin_offset = 2.0 * m_check;
    let bin_count = ((4.0 * m_check) / bin_width).ceil().max(1.0) as usize;

    let survivors: Vec<usize> = (0..sequence.len()).collect();
    let survivors = pigeonhole_pass(
        survivors, &v_parts, points, bin_width, bin_offset, bin_count,
    );
    let survivors = pigeonhole_pass(
        survivors, &w_parts, points, bin_width, bin_offset, bin_count,
    );

    let (a, b) = sequence[0].support_interval();
    Ok(SelectionResult {
        indices: survivors,
        tau,
        l1_bound: tau * (b - a),
        bins_per_point: bin_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn bv(values: &[f64], origin: f64, h: f64) -> BVFunction {
        let grid = Grid::line(values.len(), origin, h).unwrap();
        BVFunction::new(GridFunction::new(grid, values.to_vec()).unwrap()).unwrap()
    }

    /// Random dyadic samples: every value is a multiple of 2^-20, so running
    /// sums and differences stay exact in f64 and exactness assertions are
    /// meaningful.
    fn random_dyadic(rng: &mut StdRng, len: usize) -> Vec<f64> {
        let scale = (1u32 << 20) as f64;
        (0..len)
            .map(|_| rng.random_range(-(1 << 20)..(1 << 20)) as f64 / scale)
            .collect()
    }

    #[test]
    fn tv_examples() {
        assert_eq!(bv(&[0.0, 0.0, 0.0], 0.0, 1.0).total_variation(), 0.0);
        assert_eq!(bv(&[0.0, 1.0, 0.0], -3.0, 0.7).total_variation(), 2.0);
        // indicator of [0,1): two unit jumps under zero extension
        assert_eq!(bv(&[1.0, 1.0, 1.0, 1.0], 0.0, 0.25).total_variation(), 2.0);
    }

    #[test]
    fn dimension_guard() {
        let grid = crate::grid::Grid::new(vec![2, 2], vec![0.0, 0.0], 1.0).unwrap();
        let f = GridFunction::zeros(grid);
        assert!(matches!(
            BVFunction::new(f),
            Err(Error::DimensionError { got: 2 })
        ));
    }

    #[test]
    fn jordan_examples() {
        let u = bv(&[0.0, 1.0, 0.0], 0.0, 1.0);
        let (v, w) = jordan_decomposition(&u);
        assert_eq!(v.values(), &[0.0, 1.0, 1.0]);
        assert_eq!(w.values(), &[0.0, 0.0, 1.0]);

        let mono = bv(&[-1.0, 0.0, 2.0], 0.0, 1.0);
        let (v, w) = jordan_decomposition(&mono);
        assert_eq!(v.values(), mono.values());
        assert!(w.values().iter().all(|&x| x == 0.0));

        let constant = bv(&[3.5, 3.5], 0.0, 1.0);
        let (v, w) = jordan_decomposition(&constant);
        assert_eq!(v.values(), &[3.5, 3.5]);
        assert_eq!(w.values(), &[0.0, 0.0]);
    }

    #[test]
    fn jordan_exact_on_random_dyadic_samples() {
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..200 {
            let len = rng.random_range(1..40);
            let u = bv(&random_dyadic(&mut rng, len), -1.0, 0.125);
            let (v, w) = jordan_decomposition(&u);
            for i in 0..len {
                assert_eq!(u.values()[i], v.values()[i] - w.values()[i]);
            }
            assert!(v.values().windows(2).all(|t| t[1] >= t[0]));
            assert!(w.values().windows(2).all(|t| t[1] >= t[0]));
            // interior variation splits exactly into the two total rises
            let rise_v = v.values()[len - 1] - v.values()[0];
            let rise_w = w.values()[len - 1] - w.values()[0];
            assert_eq!(u.interior_variation(), rise_v + rise_w);
        }
    }

    #[test]
    fn translation_bound_examples() {
        let u = bv(&[1.0, 1.0, 1.0, 1.0], 0.0, 0.25);
        assert_eq!(tv_translation_check(&u, 0), (0.0, 0.0));
        // indicator, y = 0.25: defect 0.5 equals the bound |y| * TV = 0.5
        let (defect, bound) = tv_translation_check(&u, 1);
        assert!((defect - 0.5).abs() < 1e-12);
        assert!((bound - 0.5).abs() < 1e-12);

        // sampled monotone ramp: defect stays below the bound
        let grid = Grid::line(64, 0.0, 1.0 / 64.0).unwrap();
        let ramp = BVFunction::new(GridFunction::from_fn(grid, |x| x[0].clamp(0.0, 1.0)).unwrap())
            .unwrap();
        let (defect, bound) = tv_translation_check(&ramp, 2);
        assert!(defect <= bound + 1e-12);
        assert!(defect > 0.0);
    }

    #[test]
    fn translation_bound_random() {
        let mut rng = StdRng::seed_from_u64(17);
        for _ in 0..300 {
            let len = rng.random_range(1..50);
            let vals: Vec<f64> = (0..len).map(|_| rng.random_range(-3.0..3.0)).collect();
            let u = bv(&vals, rng.random_range(-2.0..0.0), 0.0625);
            let k = rng.random_range(-8i64..=8);
            let (defect, bound) = tv_translation_check(&u, k);
            assert!(defect <= bound + 1e-12, "defect {defect} > bound {bound}");
        }
    }

    #[test]
    fn helly_selects_everything_from_constant_sequence() {
        let u = bv(&[0.5, 0.25, 0.75], 0.0, 1.0);
        let seq = vec![u.clone(), u.clone(), u.clone(), u];
        let result = helly_select(&seq, 0.1, 2.0).unwrap();
        assert_eq!(result.indices, vec![0, 1, 2, 3]);
    }

    #[test]
    fn helly_alternating_sequence_selects_even_indices() {
        let a = bv(&[0.0, 0.0, 0.0, 0.0], 0.0, 0.5);
        let b = bv(&[1.0, 1.0, 1.0, 1.0], 0.0, 0.5);
        let tau = 0.5; // sup difference 1 > tau
        let seq = vec![a.clone(), b.clone(), a.clone(), b.clone()];
        let result = helly_select(&seq, tau, 3.0).unwrap();
        assert_eq!(result.indices, vec![0, 2]);
    }

    #[test]
    fn helly_bounds_are_verified() {
        let u = bv(&[0.0, 5.0, 0.0], 0.0, 1.0);
        let err = helly_select(&[u], 0.5, 1.0).unwrap_err();
        assert!(matches!(err, Error::BoundsViolated { member: 0, .. }));
    }

    #[test]
    fn helly_selection_passes_reverification() {
        // ramps with drifting breakpoints: survivors obey both tolerances
        let cells = 32;
        let h = 1.0 / cells as f64;
        let grid = Grid::line(cells, 0.0, h).unwrap();
        let members: Vec<BVFunction> = (0..24)
            .map(|i| {
                let c = 0.3 + 0.4 * (i as f64 / 23.0);
                BVFunction::new(
                    GridFunction::from_fn(grid.clone(), move |x| {
                        ((x[0] - c) * 4.0).clamp(0.0, 1.0)
                    })
                    .unwrap(),
                )
                .unwrap()
            })
            .collect();
        let tau = 0.25;
        let result = helly_select(&members, tau, 4.0).unwrap();
        assert!(!result.indices.is_empty());
        for (a, &i) in result.indices.iter().enumerate() {
            for &j in &result.indices[a + 1..] {
                let ui = members[i].values();
                let uj = members[j].values();
                let sup = ui
                    .iter()
                    .zip(uj)
                    .map(|(&x, &y)| (x - y).abs())
                    .fold(0.0, f64::max);
                assert!(sup <= tau + 1e-12, "pointwise gap {sup} > tau {tau}");
                let l1 = members[i]
                    .base()
                    .lp_distance(members[j].base(), 1.0)
                    .unwrap();
                assert!(l1 <= result.l1_bound + 1e-12);
            }
        }
    }

    #[test]
    fn helly_winning_v_bins_are_monotone() {
        // the selected v-parts share a bin at every point and the common bin
        // floor never decreases across the interval
        let mut rng = StdRng::seed_from_u64(5);
        let cells = 16;
        let grid = Grid::line(cells, 0.0, 0.25).unwrap();
        let members: Vec<BVFunction> = (0..12)
            .map(|_| {
                let vals: Vec<f64> = (0..cells).map(|_| rng.random_range(-0.5..0.5)).collect();
                BVFunction::new(GridFunction::new(grid.clone(), vals).unwrap()).unwrap()
            })
            .collect();
        let tau = 0.8;
        let m_check = members
            .iter()
            .map(|u| u.total_variation().max(u.sup_norm()))
            .fold(0.0, f64::max);
        let result = helly_select(&members, tau, m_check).unwrap();
        let width = tau / 2.0;
        let mut last_bin = i64::MIN;
        for point in 0..cells {
            let bins: Vec<i64> = result
                .indices
                .iter()
                .map(|&i| {
                    let (v, _) = jordan_decomposition(&members[i]);
                    ((v.values()[point] + 2.0 * m_check) / width).floor() as i64
                })
                .collect();
            assert!(
                bins.windows(2).all(|w| w[0] == w[1]),
                "split bin at {point}"
            );
            assert!(bins[0] >= last_bin, "v-bin profile decreased at {point}");
            last_bin = bins[0];
        }
    }
}
