//! Discrete Sobolev machinery: forward-difference derivative families, the
//! gradient translation bound, the conjugate exponent, and the reduction of
//! W^{1,p} families to the Lq projection pipeline with a rescaled-inequality
//! diagnostic.
//!
//! Derivatives are forward differences that shrink the box by one cell per
//! differentiated axis. Certification never relies on the configured
//! embedding constant: the Lq cover is built from directly computed Lq
//! moduli, and the constant only feeds the reported consistency diagnostic.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::grid::{
    check_exponent, compensated_sum, nth_root, pow_abs, FunctionFamily, Grid, GridFunction,
};
use crate::kolmogorov::{kr_certify, CoverCertificate, PipelineInfo};
use crate::moduli::{family_moduli, tail_mass, ModuliReport};

/// Forward difference along one axis: `(f(x + h e_axis) - f(x)) / h` on a box
/// one cell shorter along that axis.
pub fn axis_difference(f: &GridFunction, axis: usize) -> Result<GridFunction, Error> {
    let grid = f.grid();
    let n = grid.dim();
    if axis >= n {
        return Err(Error::ShapeError(format!(
            "axis {axis} out of range for dim {n}"
        )));
    }
    if grid.shape()[axis] < 2 {
        return Err(Error::ShapeError(format!(
            "axis {axis} has {} cells; forward differences need at least 2",
            grid.shape()[axis]
        )));
    }
    let mut shape = grid.shape().to_vec();
    shape[axis] -= 1;
    let out_grid = Grid::new(shape, grid.origin().to_vec(), grid.spacing())?;
    let h = grid.spacing();
    let mut idx = vec![0usize; n];
    let mut up = vec![0usize; n];
    let values: Vec<f64> = (0..out_grid.len())
        .map(|flat| {
            out_grid.unflatten_into(flat, &mut idx);
            up.copy_from_slice(&idx);
            up[axis] += 1;
            (f.values()[grid.flatten(&up)] - f.values()[grid.flatten(&idx)]) / h
        })
        .collect();
    Ok(GridFunction::from_parts(out_grid, values))
}

/// Forward-difference gradient, one component per axis. Requires at least
/// two cells on every axis.
pub fn gradient(f: &GridFunction) -> Result<Vec<GridFunction>, Error> {
    let n = f.grid().dim();
    (0..n).map(|axis| axis_difference(f, axis)).collect()
}

/// Cellwise vector p-norm of the gradient, `(sum_j |df/dx_j|^p)^(1/p)`, on
/// the common interior box (one cell shorter on every axis).
pub fn gradient_magnitude(components: &[GridFunction], p: f64) -> Result<GridFunction, Error> {
    check_exponent(p)?;
    if components.is_empty() {
        return Err(Error::ShapeError("gradient has no components".into()));
    }
    let n = components.len();
    let base = components[0].grid();
    let shape: Vec<usize> = (0..n)
        .map(|j| {
            // component j is already short along axis j; shorten the rest
            (0..n)
                .map(|a| components[a].grid().shape()[j])
                .min()
                .unwrap()
        })
        .collect();
    let grid = Grid::new(shape, base.origin().to_vec(), base.spacing())?;
    let mut idx = vec![0usize; n];
    let values: Vec<f64> = (0..grid.len())
        .map(|flat| {
            grid.unflatten_into(flat, &mut idx);
            let total: f64 = components
                .iter()
                .map(|c| pow_abs(c.values()[c.grid().flatten(&idx)], p))
                .sum();
            nth_root(total, p)
        })
        .collect();
    Ok(GridFunction::from_parts(grid, values))
}

/// Discrete Dirichlet energy `int |grad f|_p^p = sum_j ||d_j f||_p^p`, each
/// component over its own (shrunken) box.
pub fn gradient_energy(f: &GridFunction, p: f64) -> Result<f64, Error> {
    check_exponent(p)?;
    let mut total = 0.0;
    for axis in 0..f.grid().dim() {
        let d = axis_difference(f, axis)?;
        total += pow_abs(d.lp_norm(p)?, p);
    }
    Ok(total)
}

/// Dirichlet energy of the zero extension: forward differences taken across
/// the box boundary as well, so boundary jumps count like the interior ones.
/// This is the gradient that actually dominates the zero-extended
/// translation defect of a step function.
fn extended_gradient_energy(f: &GridFunction, p: f64) -> Result<f64, Error> {
    check_exponent(p)?;
    let grid = f.grid();
    let n = grid.dim();
    let h = grid.spacing();
    let mut total = 0.0;
    let mut idx = vec![0i64; n];
    for axis in 0..n {
        // difference positions: axis index in [-1, shape), others in [0, shape)
        let mut terms: Vec<f64> = Vec::new();
        let lo: Vec<i64> = (0..n).map(|j| if j == axis { -1 } else { 0 }).collect();
        let hi: Vec<i64> = grid.shape().iter().map(|&s| s as i64).collect();
        idx.copy_from_slice(&lo);
        let mut up = vec![0i64; n];
        'sweep: loop {
            up.copy_from_slice(&idx);
            up[axis] += 1;
            let d = (f.get_signed(&up) - f.get_signed(&idx)) / h;
            if d != 0.0 {
                terms.push(pow_abs(d, p));
            }
            let mut j = n;
            loop {
                if j == 0 {
                    break 'sweep;
                }
                j -= 1;
                idx[j] += 1;
                if idx[j] < hi[j] {
                    break;
                }
                idx[j] = lo[j];
            }
        }
        total += grid.cell_volume() * compensated_sum(terms);
    }
    Ok(total)
}

/// Translation defect at `y = k*h` (the p-th power, zero-extended) next to
/// the gradient bound `|y|_{p'}^p * int |grad f~|_p^p`, where `p'` is the
/// conjugate exponent (`|y|_inf` for p = 1) and the gradient is taken on the
/// zero extension so the bound genuinely dominates the defect. A small
/// discretization allowance on top of the bound is still recommended when
/// comparing sampled smooth functions against their continuum values.
pub fn gradient_translation_bound(
    f: &GridFunction,
    k: &[i64],
    p: f64,
) -> Result<(f64, f64), Error> {
    check_exponent(p)?;
    let defect = crate::moduli::translation_defect(f, k, p)?;
    let h = f.grid().spacing();
    let y: Vec<f64> = k.iter().map(|&c| c as f64 * h).collect();
    let y_conj = if p == 1.0 {
        y.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    } else {
        let pc = p / (p - 1.0);
        nth_root(compensated_sum(y.iter().map(|&v| pow_abs(v, pc))), pc)
    };
    let bound = pow_abs(y_conj, p) * extended_gradient_energy(f, p)?;
    Ok((defect, bound))
}

/// Conjugate Sobolev exponent `p* = p*n / (n - p)`, defined for `1 <= p < n`.
pub fn conjugate_sobolev_exponent(p: f64, n: usize) -> Result<f64, Error> {
    check_exponent(p)?;
    if p >= n as f64 {
        return Err(Error::ExponentUndefined { p, n });
    }
    Ok(p * n as f64 / (n as f64 - p))
}

/// All multi-indices `alpha` with `|alpha| <= k` over `n` axes.
pub fn multi_indices(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(out: &mut Vec<Vec<usize>>, prefix: &mut Vec<usize>, axes_left: usize, budget: usize) {
        if axes_left == 0 {
            out.push(prefix.clone());
            return;
        }
        for a in 0..=budget {
            prefix.push(a);
            rec(out, prefix, axes_left - 1, budget - a);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut out, &mut Vec::new(), n, k);
    out.sort();
    out
}

/// A family together with all its forward-difference derivative families up
/// to order `k`. The Sobolev norm is recomputable from the map:
/// `||f||_{k,p}^p = sum_{|alpha| <= k} ||D^alpha f||_p^p`.
#[derive(Debug, Clone)]
pub struct SobolevFamily {
    base: FunctionFamily,
    p: f64,
    k: usize,
    derivative_families: BTreeMap<Vec<usize>, FunctionFamily>,
}

/// Builds every `D^alpha` family with `|alpha| <= k` by repeated forward
/// differences; each differentiation shrinks the box one cell along its
/// axis. Requires `k + 1` cells per axis.
pub fn wkp_family_reduce(
    family: &FunctionFamily,
    k: usize,
    p: f64,
) -> Result<SobolevFamily, Error> {
    check_exponent(p)?;
    let n = family.grid().dim();
    if family.grid().shape().iter().any(|&s| s < k + 1) {
        return Err(Error::ShapeError(format!(
            "grid shape {:?} is too small for {k} forward differences per axis",
            family.grid().shape()
        )));
    }
    let mut derivative_families = BTreeMap::new();
    for alpha in multi_indices(n, k) {
        let members: Vec<(String, GridFunction)> = family
            .iter()
            .map(|(label, f)| {
                let mut d = f.clone();
                for (axis, &order) in alpha.iter().enumerate() {
                    for _ in 0..order {
                        d = axis_difference(&d, axis)?;
                    }
                }
                Ok((label.to_string(), d))
            })
            .collect::<Result<_, Error>>()?;
        derivative_families.insert(alpha, FunctionFamily::new(members)?);
    }
    Ok(SobolevFamily {
        base: family.clone(),
        p,
        k,
        derivative_families,
    })
}

impl SobolevFamily {
    pub fn base(&self) -> &FunctionFamily {
        &self.base
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn order(&self) -> usize {
        self.k
    }

    pub fn derivative_families(&self) -> &BTreeMap<Vec<usize>, FunctionFamily> {
        &self.derivative_families
    }

    /// `(sum_{|alpha| <= k} ||D^alpha f||_p^p)^(1/p)` for one member.
    pub fn sobolev_norm(&self, member: usize) -> f64 {
        let total: f64 = self
            .derivative_families
            .values()
            .map(|fam| {
                pow_abs(
                    fam.member(member).lp_norm(self.p).expect("validated p"),
                    self.p,
                )
            })
            .sum();
        nth_root(total, self.p)
    }
}

/// Per-derivative certification of a Sobolev family: every `D^alpha` family
/// is pushed through the projection pipeline at `eps / m^(1/p)` (m = number
/// of multi-indices), so the per-family cover radii recombine to the full
/// Sobolev radius at `eps`.
pub fn wkp_certify(
    family: &SobolevFamily,
    eps: f64,
    r_grid: &[f64],
    rho_grid: &[f64],
) -> Result<Vec<(Vec<usize>, CoverCertificate, PipelineInfo)>, Error> {
    let m = family.derivative_families.len() as f64;
    let eps_alpha = eps / m.powf(1.0 / family.p);
    let mut out = Vec::new();
    for (alpha, fam) in &family.derivative_families {
        let step = (|| {
            let report = family_moduli(fam, family.p, eps_alpha, r_grid, rho_grid)?;
            kr_certify(fam, family.p, eps_alpha, &report)
        })();
        match step {
            Ok((cert, info)) => out.push((alpha.clone(), cert, info)),
            Err(Error::PrerequisitesUnmet(msg)) => {
                return Err(Error::PrerequisitesUnmet(format!(
                    "derivative family D^{alpha:?}: {msg}"
                )))
            }
            Err(Error::NotCertifiedAtResolution(msg)) => {
                return Err(Error::NotCertifiedAtResolution(format!(
                    "derivative family D^{alpha:?}: {msg}"
                )))
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// One member's sides of the rescaled embedding inequality.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MemberBound {
    pub lhs: f64,
    pub rhs: f64,
    pub consistent: bool,
}

/// Consistency report for the rescaled Sobolev inequality
/// `lambda^{n/q} ||f||_q <= C (lambda^n ||f||_p^p + lambda^{n-p} E(f))^{1/p}`
/// at the chosen rescale parameter. An inconsistent member signals that the
/// configured constant is too small for this family; it never invalidates
/// the cover, which rests on directly computed Lq moduli.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddingDiagnostic {
    pub p: f64,
    pub q: f64,
    pub n: usize,
    pub p_star: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub lambda: f64,
    pub per_member: Vec<MemberBound>,
}

/// Certified outcome of the Sobolev-to-Lq reduction.
#[derive(Debug, Clone)]
pub struct RkOutcome {
    pub certificate: CoverCertificate,
    pub pipeline: PipelineInfo,
    pub lq_moduli: ModuliReport,
    pub diagnostic: EmbeddingDiagnostic,
}

const LAMBDA_CAP: f64 = 1e60;

/// Smallest power of two making the gradient term of the rescaled inequality
/// drop below `eps * lambda^{n/q}`; in closed form because the exponent
/// `(n-p)/p - n/q` is strictly negative whenever `q < p*`.
fn choose_lambda(c: f64, uniform_gradient_bound: f64, eps: f64, p: f64, q: f64, n: usize) -> f64 {
    let exponent = (n as f64 - p) / p - n as f64 / q;
    debug_assert!(exponent < 0.0);
    let ratio = c * uniform_gradient_bound.powf(1.0 / p) / eps;
    if ratio <= 1.0 {
        return 1.0;
    }
    let lambda_min = ratio.powf(-1.0 / exponent);
    let t = lambda_min.log2().ceil().max(0.0);
    2.0_f64.powf(t).min(LAMBDA_CAP)
}

/// Rellich-Kondrachov style certification of a first-order Sobolev family
/// as a totally bounded subset of Lq.
///
/// Certification path: verify the joint tail hypothesis
/// `int_{|x|>R} (|f|^p + |grad f|_p^p) < eps^p` on the tabulated radii,
/// compute the Lq moduli of the base family directly and run the projection
/// pipeline in Lq. Diagnostic path: pick the rescale parameter by the
/// doubling rule above and report both sides of the rescaled inequality per
/// member under the configured constant `C`.
pub fn rk_certify(
    family: &SobolevFamily,
    q: f64,
    eps: f64,
    embedding_constant: f64,
    r_grid: &[f64],
    rho_grid: &[f64],
) -> Result<RkOutcome, Error> {
    let p = family.p;
    let n = family.base.grid().dim();
    if family.k != 1 {
        return Err(Error::ExponentError(format!(
            "reduction requires a first-order family, got k = {}",
            family.k
        )));
    }
    if p >= n as f64 {
        return Err(Error::ExponentError(format!(
            "requires p < n, got p = {p}, n = {n}"
        )));
    }
    let p_star = conjugate_sobolev_exponent(p, n)?;
    if !(q >= p && q < p_star) {
        return Err(Error::ExponentError(format!(
            "requires p <= q < p* = {p_star}, got q = {q}"
        )));
    }
    if !(embedding_constant.is_finite() && embedding_constant > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "embedding constant must be a positive real, got {embedding_constant}"
        )));
    }

    // joint tail hypothesis on |f|^p + |grad f|_p^p
    let gradients: Vec<Vec<GridFunction>> = family
        .base
        .members()
        .iter()
        .map(gradient)
        .collect::<Result<_, _>>()?;
    let eps_p = pow_abs(eps, p);
    let joint_tail_ok = r_grid.iter().any(|&r| {
        family.base.members().iter().zip(&gradients).all(|(f, gs)| {
            let mut t = tail_mass(f, r, p).expect("validated");
            for g in gs {
                t += tail_mass(g, r, p).expect("validated");
            }
            t < eps_p
        })
    });
    if !joint_tail_ok {
        return Err(Error::PrerequisitesUnmet(format!(
            "joint tail of |f|^p + |grad f|_p^p stays >= eps^p = {eps_p:e} at every tabulated R"
        )));
    }

    // certification: Lq moduli computed directly, then the projection cover
    let lq_moduli = family_moduli(&family.base, q, eps, r_grid, rho_grid)?;
    let (certificate, pipeline) = kr_certify(&family.base, q, eps, &lq_moduli)?;

    // diagnostic: rescaled inequality at a sufficiently large lambda
    let energies: Vec<f64> = family
        .base
        .members()
        .iter()
        .map(|f| gradient_energy(f, p))
        .collect::<Result<_, _>>()?;
    let uniform_gradient_bound = 2.0_f64.powf(p) * energies.iter().fold(0.0_f64, |m, &e| m.max(e));
    let lambda = choose_lambda(embedding_constant, uniform_gradient_bound, eps, p, q, n);
    let per_member: Vec<MemberBound> = family
        .base
        .members()
        .iter()
        .zip(&energies)
        .map(|(f, &energy)| {
            let lhs = lambda.powf(n as f64 / q) * f.lp_norm(q).expect("validated q");
            let mass = pow_abs(f.lp_norm(p).expect("validated p"), p);
            let rhs = embedding_constant
                * nth_root(
                    lambda.powf(n as f64) * mass + lambda.powf(n as f64 - p) * energy,
                    p,
                );
            MemberBound {
                lhs,
                rhs,
                consistent: lhs <= rhs,
            }
        })
        .collect();

    Ok(RkOutcome {
        certificate,
        pipeline,
        lq_moduli,
        diagnostic: EmbeddingDiagnostic {
            p,
            q,
            n,
            p_star,
            c: embedding_constant,
            lambda,
            per_member,
        },
    })
}
