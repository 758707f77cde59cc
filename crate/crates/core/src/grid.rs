//! Piecewise-constant grid functions and exact Lp arithmetic on them.
//!
//! A [`GridFunction`] is the step function equal to `values[i]` on cell `i`
//! of a uniform box grid and zero outside the box. Every Lp integral of such
//! a function is a finite sum, so norms, distances, lattice shifts and
//! integer rescalings satisfy their analytic identities up to rounding only.

use crate::error::Error;

/// Neumaier-compensated summation; keeps long reductions exact to a few ulps.
pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// |v|^p with exact fast paths for the common exponents.
pub(crate) fn pow_abs(value: f64, p: f64) -> f64 {
    if p == 1.0 {
        value.abs()
    } else if p == 2.0 {
        value * value
    } else {
        value.abs().powf(p)
    }
}

/// x^(1/p) with exact fast paths for the common exponents.
pub(crate) fn nth_root(value: f64, p: f64) -> f64 {
    if p == 1.0 {
        value
    } else if p == 2.0 {
        value.sqrt()
    } else {
        value.powf(1.0 / p)
    }
}

pub(crate) fn check_exponent(p: f64) -> Result<(), Error> {
    if p.is_finite() && p >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidExponent { p })
    }
}

/// Uniform box grid in `R^n`: `shape[j]` cells of side `spacing` per axis,
/// low corner at `origin`. Cell `i` covers
/// `[origin + i*h, origin + (i+1)*h)` per axis.
///
/// Two grids are compatible iff dim, shape, origin and spacing are all equal.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    shape: Vec<usize>,
    origin: Vec<f64>,
    spacing: f64,
}

impl Grid {
    pub fn new(shape: Vec<usize>, origin: Vec<f64>, spacing: f64) -> Result<Self, Error> {
        if shape.is_empty() {
            return Err(Error::InvalidArgument("grid must have dim >= 1".into()));
        }
        if shape.len() != origin.len() {
            return Err(Error::InvalidArgument(format!(
                "shape has {} axes but origin has {}",
                shape.len(),
                origin.len()
            )));
        }
        if shape.contains(&0) {
            return Err(Error::InvalidArgument(
                "every shape entry must be >= 1".into(),
            ));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "spacing must be a positive real, got {spacing}"
            )));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidArgument("origin must be finite".into()));
        }
        Ok(Grid {
            shape,
            origin,
            spacing,
        })
    }

    /// Convenience constructor for a one-dimensional grid.
    pub fn line(cells: usize, origin: f64, spacing: f64) -> Result<Self, Error> {
        Grid::new(vec![cells], vec![origin], spacing)
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Total number of cells.
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false // shape entries are >= 1 by construction
    }

    /// Cell volume h^n.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim() as i32)
    }

    /// Exact-equality compatibility test.
    pub fn compatible(&self, other: &Grid) -> bool {
        self == other
    }

    pub(crate) fn check_compatible(&self, other: &Grid, what: &str) -> Result<(), Error> {
        if self.compatible(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{what}: grids must share dim, shape, origin and spacing"
            )))
        }
    }

    /// Coordinates of the center of cell `idx`.
    pub fn cell_center(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .zip(&self.origin)
            .map(|(&i, &o)| o + (i as f64 + 0.5) * self.spacing)
            .collect()
    }

    /// Euclidean distance from the coordinate origin to the farthest box corner.
    pub fn box_radius(&self) -> f64 {
        let mut sq = 0.0;
        for (&s, &o) in self.shape.iter().zip(&self.origin) {
            let lo = o.abs();
            let hi = (o + s as f64 * self.spacing).abs();
            let m = lo.max(hi);
            sq += m * m;
        }
        sq.sqrt()
    }

    /// Row-major strides, last axis fastest.
    pub(crate) fn strides(&self) -> Vec<usize> {
        let n = self.dim();
        let mut strides = vec![1usize; n];
        for j in (0..n.saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * self.shape[j + 1];
        }
        strides
    }

    pub(crate) fn unflatten_into(&self, flat: usize, idx: &mut [usize]) {
        let mut rem = flat;
        for j in (0..self.dim()).rev() {
            idx[j] = rem % self.shape[j];
            rem /= self.shape[j];
        }
    }

    pub(crate) fn flatten(&self, idx: &[usize]) -> usize {
        let strides = self.strides();
        idx.iter().zip(&strides).map(|(&i, &s)| i * s).sum()
    }

    /// Distance from the coordinate origin to each cell center, in flat order.
    pub(crate) fn cell_center_radii(&self) -> Vec<f64> {
        let n = self.dim();
        let mut idx = vec![0usize; n];
        (0..self.len())
            .map(|flat| {
                self.unflatten_into(flat, &mut idx);
                let mut sq = 0.0;
                for j in 0..n {
                    let c = self.origin[j] + (idx[j] as f64 + 0.5) * self.spacing;
                    sq += c * c;
                }
                sq.sqrt()
            })
            .collect()
    }
}

/// Step function on a [`Grid`], zero outside the box.
///
/// `values` are stored row-major with the last axis fastest, and are finite
/// by construction. The Lp norm is exactly `(h^n * sum |v|^p)^(1/p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self, Error> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "grid has {} cells but {} values were supplied",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite value at index {i}"
            )));
        }
        Ok(GridFunction { grid, values })
    }

    /// Internal constructor for values produced by verified arithmetic.
    pub(crate) fn from_parts(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        GridFunction { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        let n = grid.len();
        GridFunction {
            grid,
            values: vec![0.0; n],
        }
    }

    /// Sample `f` at every cell center.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self, Error> {
        let n = grid.dim();
        let mut idx = vec![0usize; n];
        let values: Vec<f64> = (0..grid.len())
            .map(|flat| {
                grid.unflatten_into(flat, &mut idx);
                f(&grid.cell_center(&idx))
            })
            .collect();
        GridFunction::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at a signed multi-index, zero outside the box.
    pub(crate) fn get_signed(&self, idx: &[i64]) -> f64 {
        let mut flat = 0usize;
        let strides = self.grid.strides();
        for j in 0..self.grid.dim() {
            let i = idx[j];
            if i < 0 || i as usize >= self.grid.shape()[j] {
                return 0.0;
            }
            flat += i as usize * strides[j];
        }
        self.values[flat]
    }

    /// Lp norm `(h^n sum |v|^p)^(1/p)`; exact for step functions.
    pub fn lp_norm(&self, p: f64) -> Result<f64, Error> {
        check_exponent(p)?;
        let total = compensated_sum(self.values.iter().map(|&v| pow_abs(v, p)));
        Ok(nth_root(self.grid.cell_volume() * total, p))
    }

    /// Lp distance to a grid-compatible function.
    pub fn lp_distance(&self, other: &GridFunction, p: f64) -> Result<f64, Error> {
        check_exponent(p)?;
        self.grid.check_compatible(&other.grid, "lp_distance")?;
        let total = compensated_sum(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| pow_abs(a - b, p)),
        );
        Ok(nth_root(self.grid.cell_volume() * total, p))
    }

    /// Lattice translation by `y = k*h` with zero fill: the result takes the
    /// value `f(x + k*h)` where that point lies inside the box and 0 where it
    /// does not. Mass that leaves the box is dropped, so the norm is only
    /// guaranteed non-increasing when the support stays inside.
    pub fn shift(&self, k: &[i64]) -> GridFunction {
        assert_eq!(
            k.len(),
            self.grid.dim(),
            "shift vector must have dim entries"
        );
        let n = self.grid.dim();
        let mut idx = vec![0usize; n];
        let mut src = vec![0i64; n];
        let values: Vec<f64> = (0..self.values.len())
            .map(|flat| {
                self.grid.unflatten_into(flat, &mut idx);
                for j in 0..n {
                    src[j] = idx[j] as i64 + k[j];
                }
                self.get_signed(&src)
            })
            .collect();
        GridFunction {
            grid: self.grid.clone(),
            values,
        }
    }

    /// Dyadic-style rescaling `f^lambda(x) = f(x / lambda)` realized by cell
    /// replication: every cell becomes `lambda^n` cells of the same spacing,
    /// so `||f^lambda||_p = lambda^(n/p) ||f||_p` exactly.
    pub fn rescale(&self, lambda: usize) -> GridFunction {
        assert!(lambda >= 1, "rescale factor must be a positive integer");
        if lambda == 1 {
            return self.clone();
        }
        let n = self.grid.dim();
        let shape: Vec<usize> = self.grid.shape().iter().map(|&s| s * lambda).collect();
        let origin: Vec<f64> = self
            .grid
            .origin()
            .iter()
            .map(|&o| o * lambda as f64)
            .collect();
        let grid = Grid::new(shape, origin, self.grid.spacing()).expect("scaled grid is valid");
        let mut idx = vec![0usize; n];
        let mut src = vec![0usize; n];
        let values: Vec<f64> = (0..grid.len())
            .map(|flat| {
                grid.unflatten_into(flat, &mut idx);
                for j in 0..n {
                    src[j] = idx[j] / lambda;
                }
                self.values[self.grid.flatten(&src)]
            })
            .collect();
        GridFunction { grid, values }
    }

    /// Pointwise scalar multiple.
    pub fn scaled(&self, c: f64) -> GridFunction {
        GridFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| c * v).collect(),
        }
    }

    /// Pointwise `a*self + b*other` on a shared grid.
    pub fn linear_combination(
        &self,
        a: f64,
        other: &GridFunction,
        b: f64,
    ) -> Result<GridFunction, Error> {
        self.grid
            .check_compatible(&other.grid, "linear_combination")?;
        Ok(GridFunction {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&x, &y)| a * x + b * y)
                .collect(),
        })
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Finite ordered collection of grid functions on one shared grid; the object
/// the certification pipelines operate on.
#[derive(Debug, Clone)]
pub struct FunctionFamily {
    labels: Vec<String>,
    members: Vec<GridFunction>,
}

impl FunctionFamily {
    pub fn new(members: Vec<(String, GridFunction)>) -> Result<Self, Error> {
        if members.is_empty() {
            return Err(Error::EmptyFamily);
        }
        let (labels, members): (Vec<_>, Vec<_>) = members.into_iter().unzip();
        let grid = members[0].grid().clone();
        for (i, m) in members.iter().enumerate() {
            grid.check_compatible(m.grid(), &format!("family member '{}'", labels[i]))?;
        }
        Ok(FunctionFamily { labels, members })
    }

    /// Builds a family with generated labels `f0, f1, ...`.
    pub fn from_functions(functions: Vec<GridFunction>) -> Result<Self, Error> {
        let members = functions
            .into_iter()
            .enumerate()
            .map(|(i, f)| (format!("f{i}"), f))
            .collect();
        FunctionFamily::new(members)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        false // nonempty by construction
    }

    pub fn grid(&self) -> &Grid {
        self.members[0].grid()
    }

    pub fn member(&self, i: usize) -> &GridFunction {
        &self.members[i]
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn members(&self) -> &[GridFunction] {
        &self.members
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &GridFunction)> {
        self.labels
            .iter()
            .map(|l| l.as_str())
            .zip(self.members.iter())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gf(values: &[f64], h: f64) -> GridFunction {
        let grid = Grid::line(values.len(), 0.0, h).unwrap();
        GridFunction::new(grid, values.to_vec()).unwrap()
    }

    #[test]
    fn zero_function_has_zero_norm() {
        let f = GridFunction::zeros(Grid::line(5, 0.0, 0.5).unwrap());
        for p in [1.0, 1.5, 2.0, 3.0] {
            assert_eq!(f.lp_norm(p).unwrap(), 0.0);
        }
    }

    #[test]
    fn unit_mass_indicator_has_unit_norm_for_all_p() {
        let f = gf(&[1.0, 1.0, 1.0, 1.0], 0.25);
        for p in [1.0, 1.7, 2.0, 4.0] {
            assert!((f.lp_norm(p).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn l2_norm_direct_sum() {
        let f = gf(&[1.0, 2.0], 1.0);
        assert!((f.lp_norm(2.0).unwrap() - 5.0_f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn invalid_exponent_rejected() {
        let f = gf(&[1.0], 1.0);
        assert!(matches!(f.lp_norm(0.5), Err(Error::InvalidExponent { .. })));
        assert!(matches!(
            f.lp_norm(f64::NAN),
            Err(Error::InvalidExponent { .. })
        ));
    }

    #[test]
    fn distance_examples() {
        let f = gf(&[1.0, 0.0], 1.0);
        let g = gf(&[0.0, 1.0], 1.0);
        assert_eq!(f.lp_distance(&f, 2.0).unwrap(), 0.0);
        assert!((f.lp_distance(&g, 1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((f.lp_distance(&g, 2.0).unwrap() - 2.0_f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn distance_requires_compatible_grids() {
        let f = gf(&[1.0, 0.0], 1.0);
        let g = gf(&[1.0, 0.0], 0.5);
        assert!(matches!(
            f.lp_distance(&g, 1.0),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn shift_examples() {
        let f = gf(&[0.0, 1.0, 0.0], 1.0);
        assert_eq!(f.shift(&[0]), f);
        assert_eq!(f.shift(&[1]).values(), &[1.0, 0.0, 0.0]);
        let g = gf(&[1.0, 1.0], 1.0);
        assert_eq!(g.shift(&[5]).values(), &[0.0, 0.0]);
    }

    #[test]
    fn rescale_examples() {
        let f = gf(&[3.0], 1.0);
        assert_eq!(f.rescale(1), f);
        let r = f.rescale(2);
        assert_eq!(r.values(), &[3.0, 3.0]);
        assert!((r.lp_norm(1.0).unwrap() - 6.0).abs() < 1e-15);
    }

    #[test]
    fn rescale_2d_l2_ratio_is_lambda() {
        let grid = Grid::new(vec![3, 4], vec![-0.5, 0.25], 0.5).unwrap();
        let f = GridFunction::from_fn(grid, |x| (x[0] + 2.0 * x[1]).sin() + 0.3).unwrap();
        let r = f.rescale(2);
        let ratio = r.lp_norm(2.0).unwrap() / f.lp_norm(2.0).unwrap();
        assert!((ratio - 2.0).abs() < 1e-12);
    }

    #[test]
    fn row_major_last_axis_fastest() {
        let grid = Grid::new(vec![2, 3], vec![0.0, 0.0], 1.0).unwrap();
        assert_eq!(grid.strides(), vec![3, 1]);
        assert_eq!(grid.flatten(&[1, 2]), 5);
        let mut idx = [0usize; 2];
        grid.unflatten_into(4, &mut idx);
        assert_eq!(idx, [1, 1]);
    }

    #[test]
    fn family_rejects_empty_and_mismatched() {
        assert!(matches!(
            FunctionFamily::new(vec![]),
            Err(Error::EmptyFamily)
        ));
        let f = gf(&[1.0], 1.0);
        let g = gf(&[1.0, 2.0], 1.0);
        assert!(matches!(
            FunctionFamily::new(vec![("a".into(), f), ("b".into(), g)]),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn non_finite_values_rejected() {
        let grid = Grid::line(2, 0.0, 1.0).unwrap();
        assert!(GridFunction::new(grid, vec![1.0, f64::NAN]).is_err());
    }

    prop_compose! {
        fn arb_line_fn(max_cells: usize)
            (cells in 1..=max_cells)
            (values in prop::collection::vec(-10.0..10.0f64, cells),
             h in 0.1..2.0f64) -> GridFunction {
            let grid = Grid::line(values.len(), -1.0, h).unwrap();
            GridFunction::new(grid, values).unwrap()
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn norm_homogeneity(f in arb_line_fn(24), c in -5.0..5.0f64, p in 1.0..4.0f64) {
            let lhs = f.scaled(c).lp_norm(p).unwrap();
            let rhs = c.abs() * f.lp_norm(p).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
        }

        #[test]
        fn triangle_inequality(
            values in prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64), 1..20),
            p in 1.0..4.0f64,
        ) {
            let n = values.len();
            let grid = Grid::line(n, 0.0, 0.5).unwrap();
            let f = GridFunction::new(grid.clone(), values.iter().map(|t| t.0).collect()).unwrap();
            let g = GridFunction::new(grid.clone(), values.iter().map(|t| t.1).collect()).unwrap();
            let h = GridFunction::new(grid, values.iter().map(|t| t.2).collect()).unwrap();
            let fh = f.lp_distance(&h, p).unwrap();
            let fg = f.lp_distance(&g, p).unwrap();
            let gh = g.lp_distance(&h, p).unwrap();
            prop_assert!(fh <= fg + gh + 1e-12);
        }

        #[test]
        fn scaling_law_exact(f in arb_line_fn(16), lambda in 1usize..=3, p in 1.0..3.0f64) {
            let norm = f.lp_norm(p).unwrap();
            let scaled = f.rescale(lambda).lp_norm(p).unwrap();
            let expected = (lambda as f64).powf(1.0 / p) * norm;
            prop_assert!((scaled - expected).abs() <= 1e-12 * norm.max(1.0));
        }

        #[test]
        fn shift_roundtrip_on_interior(f in arb_line_fn(16), k in -3i64..=3) {
            let back = f.shift(&[k]).shift(&[-k]);
            let n = f.grid().shape()[0] as i64;
            for i in 0..n {
                // cells whose +/- k images stay in the box
                if i + k >= 0 && i + k < n && i - k >= 0 && i - k < n {
                    prop_assert_eq!(back.values()[i as usize], f.values()[i as usize]);
                }
            }
        }
    }
}
