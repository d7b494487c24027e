//! Galerkin discretization of `K` on isotropic product modes and
//! singular-value diagnostics.
//!
//! Modes are `Φ_{ab}(v, I) = ψ_a(|v|)·χ_b(I)` with `ψ_a` built from
//! `L_j^{(1/2)}(|v|²/2k_BT_k)e^{−|v|²/4k_BT_k}` and `χ_b` from
//! `L_k^{(α)}(I/k_BT_i)e^{−I/2k_BT_i}`, each orthonormalized against a
//! numerically computed Gram matrix.  The flat index is `a·n_e + b`.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy_law::{EnergyLaw, LawKind};
use crate::error::{argument, Error, Result};
use crate::linearized_op::{LinearizedContext, PhaseFunction};
use crate::quad::{graded_breaks, merge_breaks, NodeSet};
use crate::report::{Check, VerificationReport};

/// Velocity modes vanish to double precision beyond `16√(k_BT_k)`.
const VELOCITY_CUT: f64 = 16.0;
/// Energy modes vanish beyond `60 k_BT_i` shifted by the mode degree.
const ENERGY_CUT: f64 = 60.0;
/// Orthonormal modes below this magnitude contribute nothing at double precision.
const NEGLIGIBLE: f64 = 1e-13;
/// Tolerance on the Gram matrix of the orthonormalized basis.
pub const GRAM_TOLERANCE: f64 = 1e-8;
/// Relative change of `σ₁` allowed under basis enrichment.
pub const STABILITY_TOLERANCE: f64 = 1e-3;
/// Decay level `σ_k/σ₁` reported as reached or not.
pub const DECAY_LEVEL: f64 = 1e-3;

/// `L_0^{(α)}(x), …, L_{n−1}^{(α)}(x)` by the three-term recurrence.
pub fn laguerre(alpha: f64, x: f64, out: &mut [f64]) {
    let n = out.len();
    if n == 0 {
        return;
    }
    out[0] = 1.0;
    if n == 1 {
        return;
    }
    out[1] = 1.0 + alpha - x;
    for k in 1..n - 1 {
        let kf = k as f64;
        out[k + 1] = ((2.0 * kf + 1.0 + alpha - x) * out[k] - (kf + alpha) * out[k - 1]) / (kf + 1.0);
    }
}

/// Orthonormal isotropic product basis of `L²(dv dμ)`.
#[derive(Debug, Clone)]
pub struct GalerkinBasis {
    pub velocity_modes: usize,
    pub energy_modes: usize,
    kt: f64,
    ki: f64,
    energy_alpha: f64,
    law: EnergyLaw,
    /// Row `a` holds the raw-mode coefficients of `ψ_a`.
    velocity_coeffs: DMatrix<f64>,
    energy_coeffs: DMatrix<f64>,
}

impl GalerkinBasis {
    pub fn new(ctx: &LinearizedContext, velocity_modes: usize, energy_modes: usize) -> Result<Self> {
        if velocity_modes == 0 || energy_modes == 0 {
            return Err(argument("a Galerkin basis needs at least one mode in each factor"));
        }
        if velocity_modes > 24 || energy_modes > 24 {
            return Err(argument("at most 24 modes per factor are supported"));
        }
        let energy_alpha = match ctx.law.kind() {
            LawKind::Power { alpha, .. } => *alpha,
            _ => 0.0,
        };
        let mut basis = GalerkinBasis {
            velocity_modes,
            energy_modes,
            kt: ctx.kt(),
            ki: ctx.ki(),
            energy_alpha,
            law: ctx.law.clone(),
            velocity_coeffs: DMatrix::identity(velocity_modes, velocity_modes),
            energy_coeffs: DMatrix::identity(energy_modes, energy_modes),
        };
        let gv = gram(&basis.velocity_nodes(1.0, 8), velocity_modes, |s, out| basis.raw_velocity(s, out));
        let ge = gram(&basis.energy_nodes(12), energy_modes, |x, out| basis.raw_energy(x, out));
        basis.velocity_coeffs = inverse_cholesky(gv)?;
        basis.energy_coeffs = inverse_cholesky(ge)?;
        Ok(basis)
    }

    pub fn len(&self) -> usize {
        self.velocity_modes * self.energy_modes
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index of `Φ_{ab}`.
    #[inline]
    pub fn index(&self, a: usize, b: usize) -> usize {
        a * self.energy_modes + b
    }

    /// The same modes with the velocity and energy factors relabelled:
    /// new mode `a` is old mode `velocity_order[a]`.
    pub fn reordered(&self, velocity_order: &[usize], energy_order: &[usize]) -> Result<Self> {
        let valid = |order: &[usize], n: usize| {
            let mut seen = vec![false; n];
            order.len() == n && order.iter().all(|&k| k < n && !std::mem::replace(&mut seen[k], true))
        };
        if !valid(velocity_order, self.velocity_modes) || !valid(energy_order, self.energy_modes) {
            return Err(argument("orders must be permutations of the mode indices"));
        }
        let mut out = self.clone();
        out.velocity_coeffs = self.velocity_coeffs.select_rows(velocity_order);
        out.energy_coeffs = self.energy_coeffs.select_rows(energy_order);
        Ok(out)
    }

    fn raw_velocity(&self, s: f64, out: &mut [f64]) {
        let x = s * s / (2.0 * self.kt);
        laguerre(0.5, x, out);
        let e = (-0.5 * x).exp();
        out.iter_mut().for_each(|o| *o *= e);
    }

    fn raw_energy(&self, i: f64, out: &mut [f64]) {
        let y = i / self.ki;
        laguerre(self.energy_alpha, y, out);
        let e = (-0.5 * y).exp();
        out.iter_mut().for_each(|o| *o *= e);
    }

    /// `ψ_0(s), …, ψ_{n_v−1}(s)`.
    pub fn velocity(&self, s: f64, out: &mut [f64]) {
        let mut raw = vec![0.0; self.velocity_modes];
        self.raw_velocity(s, &mut raw);
        combine(&self.velocity_coeffs, &raw, out);
    }

    /// `χ_0(I), …, χ_{n_e−1}(I)`.
    pub fn energy(&self, i: f64, out: &mut [f64]) {
        let mut raw = vec![0.0; self.energy_modes];
        self.raw_energy(i, &mut raw);
        combine(&self.energy_coeffs, &raw, out);
    }

    /// `Φ_{ab}` as a phase function.
    pub fn mode(&self, a: usize, b: usize) -> PhaseFunction {
        let vb = Arc::new(self.clone());
        let eb = vb.clone();
        PhaseFunction::Radial {
            velocity: Arc::new(move |s| {
                let mut out = vec![0.0; vb.velocity_modes];
                vb.velocity(s, &mut out);
                out[a]
            }),
            energy: Arc::new(move |i| {
                let mut out = vec![0.0; eb.energy_modes];
                eb.energy(i, &mut out);
                out[b]
            }),
            velocity_support: None,
            energy_support: None,
        }
    }

    /// Radial nodes on `[0, 16√T]`, weights including `4πs²`.
    fn velocity_nodes(&self, panel: f64, order: usize) -> NodeSet {
        let sd = self.kt.sqrt();
        let count = (VELOCITY_CUT / panel).ceil() as usize;
        let breaks: Vec<f64> = (0..=count).map(|k| k as f64 * VELOCITY_CUT * sd / count as f64).collect();
        let mut set = NodeSet::gauss_panels(&breaks, order);
        for (s, w) in set.nodes.iter().zip(set.weights.iter_mut()) {
            *w *= 4.0 * PI * s * s;
        }
        set
    }

    /// Breaks on `[0, (60 + 2n_e)k_BT_i]`, graded toward 0 and, if given,
    /// toward `center` from both sides.
    fn energy_breaks(&self, center: Option<f64>) -> Vec<f64> {
        let ki = self.ki;
        let hi = (ENERGY_CUT + 2.0 * self.energy_modes as f64) * ki;
        let mut points: Vec<f64> = (0..=12).map(|k| 0.25 * ki * 0.25f64.powi(k)).collect();
        points.extend(graded_breaks(0.25 * ki, hi, 0.25 * ki, 2.0, 4.0 * ki));
        if let Some(c) = center {
            points.push(c);
            points.extend((1..=6).flat_map(|k| {
                let h = c.min(ki) * 0.5f64.powi(k);
                [c - h, c + h]
            }));
        }
        points.extend(self.law.breakpoints());
        merge_breaks(points, 0.0, hi)
    }

    /// `μ` nodes on `[0, (60 + 2n_e)k_BT_i]`, weights including `ρ`.
    fn energy_nodes(&self, order: usize) -> NodeSet {
        let mut set = NodeSet::gauss_panels(&self.energy_breaks(None), order);
        for (x, w) in set.nodes.iter().zip(set.weights.iter_mut()) {
            *w *= self.law.rho(*x);
        }
        set
    }

    /// `max |⟨Φ_p, Φ_q⟩ − δ_pq|` on quadratures finer than the ones used
    /// to build the basis.
    pub fn gram_residual(&self) -> f64 {
        let gv = gram(&self.velocity_nodes(0.5, 12), self.velocity_modes, |s, out| self.velocity(s, out));
        let ge = gram(&self.energy_nodes(16), self.energy_modes, |x, out| self.energy(x, out));
        let g = gv.kronecker(&ge);
        (g - DMatrix::identity(self.len(), self.len())).abs().max()
    }
}

fn combine(coeffs: &DMatrix<f64>, raw: &[f64], out: &mut [f64]) {
    for (a, o) in out.iter_mut().enumerate() {
        *o = (0..raw.len()).map(|j| coeffs[(a, j)] * raw[j]).sum();
    }
}

fn gram(nodes: &NodeSet, n: usize, f: impl Fn(f64, &mut [f64])) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(n, n);
    let mut buf = vec![0.0; n];
    for (x, w) in nodes.iter() {
        f(x, &mut buf);
        for p in 0..n {
            for q in 0..n {
                g[(p, q)] += w * buf[p] * buf[q];
            }
        }
    }
    g
}

/// `C = L⁻¹` for the Cholesky factor `G = LLᵀ`, so that `CGCᵀ = 1`.
fn inverse_cholesky(g: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = g.nrows();
    let chol = g
        .cholesky()
        .ok_or_else(|| Error::Degenerate("Gram matrix of the raw modes is not positive definite".into()))?;
    let l = chol.l();
    l.solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or_else(|| Error::Degenerate("Cholesky factor is singular".into()))
}

/// Galerkin matrices of `K` and of its three parts.
#[derive(Debug, Clone)]
pub struct GalerkinMatrix {
    pub total: DMatrix<f64>,
    pub k1: DMatrix<f64>,
    pub k2: DMatrix<f64>,
    pub k3: DMatrix<f64>,
    /// Flat `(row, column)` of entries whose quadrature failed; set to zero.
    pub flagged: Vec<(usize, usize)>,
}

/// `⟨Φ_p, KΦ_q⟩` for all basis pairs, in kernel form.
///
/// The velocity and energy parts of each kernel separate, so every block is a
/// Kronecker product: `K₁ = −c·V₁⊗E₁`, `K₂ = V₂⊗E₂`, `K₃ = V₂⊗E₃`.
pub fn assemble_k_matrix(ctx: &LinearizedContext, basis: &GalerkinBasis) -> Result<GalerkinMatrix> {
    if (basis.kt - ctx.kt()).abs() > 1e-14 * ctx.kt() || (basis.ki - ctx.ki()).abs() > 1e-14 * ctx.ki() {
        return Err(argument("basis was built for different temperatures"));
    }
    let (v1, v2) = velocity_blocks(ctx, basis);
    let (e1, e2, e3) = energy_blocks(ctx, basis);
    let k1 = v1.kronecker(&e1) * (-ctx.prefactor());
    let k2 = v2.kronecker(&e2);
    let k3 = v2.kronecker(&e3);
    let mut total = &k1 + &k2 + &k3;
    let n = basis.len();
    let mut flagged = Vec::new();
    for p in 0..n {
        for q in 0..n {
            if !total[(p, q)].is_finite() {
                flagged.push((p, q));
                total[(p, q)] = 0.0;
            }
        }
    }
    if flagged.len() * 100 > n * n {
        return Err(Error::Degenerate(format!("{} of {} Galerkin entries failed", flagged.len(), n * n)));
    }
    Ok(GalerkinMatrix {
        total,
        k1,
        k2,
        k3,
        flagged,
    })
}

/// `V₁[a,c] = ∬ ψ_a(|v|)ψ_c(|v*|)e^{−(|v|²+|v*|²)/4k_BT_k}A_k(|v−v*|) dv dv*` and
/// `V₂[a,c] = ∫ ψ_a(|v|) ∫ ψ_c(|η|)κ_k(v, η) dη dv`.
fn velocity_blocks(ctx: &LinearizedContext, basis: &GalerkinBasis) -> (DMatrix<f64>, DMatrix<f64>) {
    let nv = basis.velocity_modes;
    let kt = ctx.kt();
    let outer = basis.velocity_nodes(1.0, 8);
    let kinetic = ctx.model.kinetic;
    let exponent = kinetic.exponents().1;
    let a1 = kinetic.sphere_average(1.0);
    // `∫₀^x ρA_k(ρ) dρ` for `A_k(ρ) = A_k(1)ρ^e`
    let primitive = |x: f64| a1 * x.powf(exponent + 2.0) / (exponent + 2.0);
    let sd = kt.sqrt();
    let base_breaks: Vec<f64> = (0..=32).map(|k| k as f64 * VELOCITY_CUT * sd / 32.0).collect();
    let vk = ctx.velocity_kernel();

    let rows: Vec<(Vec<f64>, Vec<f64>)> = outer
        .nodes
        .par_iter()
        .map(|&s| {
            let mut psi_s = vec![0.0; nv];
            basis.velocity(s, &mut psi_s);
            if psi_s.iter().all(|p| p.abs() < NEGLIGIBLE) {
                return (vec![0.0; nv * nv], vec![0.0; nv * nv]);
            }
            let inner = NodeSet::gauss_panels(&merge_breaks([base_breaks.clone(), vec![s]].concat(), 0.0, VELOCITY_CUT * sd), 8);
            let mut row1 = vec![0.0; nv];
            let mut buf = vec![0.0; nv];
            for (r, w) in inner.iter() {
                let angular = (primitive(s + r) - primitive((s - r).abs())) / (s * r);
                let weight = w * 2.0 * PI * r * r * (-(s * s + r * r) / (4.0 * kt)).exp() * angular;
                basis.velocity(r, &mut buf);
                for (o, b) in row1.iter_mut().zip(&buf) {
                    *o += weight * b;
                }
            }
            let mut row2 = vec![0.0; nv];
            vk.apply_radial(s, None, |r, out| basis.velocity(r, out), &mut row2);
            let outer1: Vec<f64> = psi_s.iter().flat_map(|pa| row1.iter().map(move |r| pa * r)).collect();
            let outer2: Vec<f64> = psi_s.iter().flat_map(|pa| row2.iter().map(move |r| pa * r)).collect();
            (outer1, outer2)
        })
        .collect();
    let mut v1 = DMatrix::zeros(nv, nv);
    let mut v2 = DMatrix::zeros(nv, nv);
    for ((r1, r2), w) in rows.iter().zip(&outer.weights) {
        for a in 0..nv {
            for c in 0..nv {
                v1[(a, c)] += w * r1[a * nv + c];
                v2[(a, c)] += w * r2[a * nv + c];
            }
        }
    }
    (v1, v2)
}

/// `E₁[b,d] = ∬ χ_bχ_d e^{−(I+I*)/2k_BT_i}E(I, I*) dμ dμ` and
/// `E₂, E₃[b,d] = ∬ χ_b(I)κ̃(I, J)χ_d(J) dμ(J) dμ(I)` for `κ̃_i`, `κ̃₃`.
fn energy_blocks(ctx: &LinearizedContext, basis: &GalerkinBasis) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let ne = basis.energy_modes;
    let ki = ctx.ki();
    let model = &ctx.model;
    let law = &ctx.law;
    let order = ctx.quadrature.energy_order;
    let outer = basis.energy_nodes(order);
    let ek = ctx.energy_kernel();
    let rows: Vec<[Vec<f64>; 3]> = outer
        .nodes
        .par_iter()
        .map(|&x| {
            let mut chi_x = vec![0.0; ne];
            basis.energy(x, &mut chi_x);
            let mut buf = vec![0.0; ne];
            let mut row1 = vec![0.0; ne];
            let inner = NodeSet::gauss_panels(&basis.energy_breaks(Some(x)), order);
            for (y, w) in inner.iter() {
                let weight = w * law.rho(y) * (-(x + y) / (2.0 * ki)).exp() * model.energy_average(x, y);
                if weight == 0.0 {
                    continue;
                }
                basis.energy(y, &mut buf);
                for (o, b) in row1.iter_mut().zip(&buf) {
                    *o += weight * b;
                }
            }
            let mut row2 = vec![0.0; ne];
            let mut row3 = vec![0.0; ne];
            for (j, w) in ek.j_nodes(x, None).iter() {
                let (k2, k3) = ek.modulated_pair(x, j);
                if k2 == 0.0 && k3 == 0.0 {
                    continue;
                }
                basis.energy(j, &mut buf);
                for d in 0..ne {
                    row2[d] += w * k2 * buf[d];
                    row3[d] += w * k3 * buf[d];
                }
            }
            let outer_of = |row: &[f64]| -> Vec<f64> { chi_x.iter().flat_map(|cb| row.iter().map(move |r| cb * r)).collect() };
            [outer_of(&row1), outer_of(&row2), outer_of(&row3)]
        })
        .collect();
    let mut blocks = [DMatrix::zeros(ne, ne), DMatrix::zeros(ne, ne), DMatrix::zeros(ne, ne)];
    for (row, w) in rows.iter().zip(&outer.weights) {
        for (block, r) in blocks.iter_mut().zip(row) {
            for b in 0..ne {
                for d in 0..ne {
                    block[(b, d)] += w * r[b * ne + d];
                }
            }
        }
    }
    let [e1, e2, e3] = blocks;
    (e1, e2, e3)
}

/// Singular values, largest first, and the decay profile `σ_k/σ₁`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub singular_values: Vec<f64>,
    pub decay: Vec<f64>,
    /// First `k` (zero-based) with `σ_k/σ₁ < 10⁻³`.
    pub decay_index: Option<usize>,
}

impl Spectrum {
    pub fn of(matrix: &DMatrix<f64>) -> Spectrum {
        let mut values: Vec<f64> = matrix.clone().svd(false, false).singular_values.iter().copied().collect();
        values.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
        let top = values.first().copied().unwrap_or(0.0);
        let decay: Vec<f64> = values.iter().map(|s| if top > 0.0 { s / top } else { 0.0 }).collect();
        let decay_index = decay.iter().position(|d| *d < DECAY_LEVEL);
        Spectrum {
            singular_values: values,
            decay,
            decay_index,
        }
    }

    pub fn leading(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }
}

/// Report on the singular values of `matrix`; with `enlarged`, the Galerkin
/// matrix on a richer basis, also on the stability of `σ₁`.
pub fn singular_value_report(matrix: &DMatrix<f64>, enlarged: Option<&DMatrix<f64>>) -> (VerificationReport, Spectrum) {
    let spectrum = Spectrum::of(matrix);
    let mut report = VerificationReport::new("spectrum");
    let finite = spectrum.singular_values.iter().all(|s| s.is_finite());
    let ordered = spectrum.singular_values.windows(2).all(|w| w[0] >= w[1]);
    report.push(
        Check::flag(
            "singular values finite and nonincreasing",
            spectrum.leading(),
            0.0,
            finite && ordered,
        )
        .with_detail(format!("{} values", spectrum.singular_values.len())),
    );
    let last = spectrum.decay.last().copied().unwrap_or(0.0);
    let reached = match spectrum.decay_index {
        Some(k) => format!("sigma_k / sigma_1 < {DECAY_LEVEL:e} from k = {k}"),
        None => format!("not reached within the basis, smallest ratio {last:.3e}"),
    };
    report.push(Check::flag("decay level (informational)", last, DECAY_LEVEL, true).with_detail(reached));
    if let Some(big) = enlarged {
        let richer = Spectrum::of(big);
        let base = spectrum.leading();
        let change = if base > 0.0 {
            (richer.leading() - base).abs() / base
        } else {
            (richer.leading() - base).abs()
        };
        let others: Vec<String> = (1..spectrum.singular_values.len().min(richer.singular_values.len()).min(4))
            .map(|k| {
                let a = spectrum.singular_values[k];
                let b = richer.singular_values[k];
                format!("sigma_{}: {:.3e}", k + 1, (b - a).abs() / a.max(f64::MIN_POSITIVE))
            })
            .collect();
        report.push(
            Check::at_most("relative change of sigma_1 under enrichment", change, STABILITY_TOLERANCE).with_detail(format!(
                "sigma_1 = {base:.12e} -> {:.12e}; {}",
                richer.leading(),
                others.join(", ")
            )),
        );
    }
    (report, spectrum)
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.into())
}

/// Write a matrix as CSV rows.
pub fn write_matrix_csv(path: &Path, matrix: &DMatrix<f64>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    for r in 0..matrix.nrows() {
        let row: Vec<String> = (0..matrix.ncols()).map(|c| format!("{:e}", matrix[(r, c)])).collect();
        w.write_record(&row).map_err(csv_error)?;
    }
    Ok(w.flush()?)
}

/// Write `k, σ_k, σ_k/σ₁` as CSV.
pub fn write_spectrum_csv(path: &Path, spectrum: &Spectrum) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(["k", "sigma", "ratio"]).map_err(csv_error)?;
    for (k, (s, d)) in spectrum.singular_values.iter().zip(&spectrum.decay).enumerate() {
        w.write_record(&[(k + 1).to_string(), format!("{s:e}"), format!("{d:e}")])
            .map_err(csv_error)?;
    }
    Ok(w.flush()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cross_section::{CrossSectionModel, InternalForm, KineticForm};
    use crate::equilibrium::Maxwellian;
    use crate::linearized_op::pairing_direct;
    use crate::mc::MonteCarloConfig;

    fn context(n: f64) -> LinearizedContext {
        let law = EnergyLaw::power(0.5, 1.0).unwrap();
        let m = Maxwellian::centered(n, 1.0, 1.0, law.clone()).unwrap();
        let model = CrossSectionModel::new(KineticForm::Power { exponent: 1.0 }, InternalForm::Normalized, 1.0, law)
            .unwrap()
            .with_modulation(0.2)
            .unwrap();
        LinearizedContext::new(m, model).unwrap()
    }

    #[test]
    fn laguerre_low_orders() {
        let mut out = [0.0; 3];
        laguerre(0.5, 2.0, &mut out);
        assert_eq!(out[0], 1.0);
        assert!((out[1] - (1.5 - 2.0)).abs() < 1e-15);
        // L_2^{(a)}(x) = x²/2 − (a+2)x + (a+2)(a+1)/2
        assert!((out[2] - (2.0 - 2.5 * 2.0 + 2.5 * 1.5 / 2.0)).abs() < 1e-14);
    }

    #[test]
    fn basis_is_orthonormal() {
        let basis = GalerkinBasis::new(&context(1.0), 6, 4).unwrap();
        assert!(basis.gram_residual() < GRAM_TOLERANCE, "{}", basis.gram_residual());
    }

    #[test]
    fn diagonal_spectrum() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 3.0, -2.0]));
        let s = Spectrum::of(&m);
        for (a, b) in s.singular_values.iter().zip([3.0, 2.0, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        let (report, _) = singular_value_report(&m, None);
        assert!(report.pass);
    }

    #[test]
    fn zero_density_gives_zero_matrix() {
        let ctx = context(0.0);
        let basis = GalerkinBasis::new(&ctx, 2, 2).unwrap();
        let k = assemble_k_matrix(&ctx, &basis).unwrap();
        assert_eq!(k.total.abs().max(), 0.0);
    }

    #[test]
    fn assembly_properties() {
        let ctx = context(1.0);
        let basis = GalerkinBasis::new(&ctx, 3, 2).unwrap();
        let k = assemble_k_matrix(&ctx, &basis).unwrap();
        assert!(k.flagged.is_empty());
        let asym = (&k.k1 - k.k1.transpose()).abs().max();
        assert!(asym <= 1e-8 * k.k1.abs().max(), "K1 asymmetry {asym}");

        let vo = [2, 0, 1];
        let eo = [1, 0];
        let permuted = assemble_k_matrix(&ctx, &basis.reordered(&vo, &eo).unwrap()).unwrap();
        for a in 0..3 {
            for b in 0..2 {
                for c in 0..3 {
                    for d in 0..2 {
                        let x = permuted.total[(basis.index(a, b), basis.index(c, d))];
                        let y = k.total[(basis.index(vo[a], eo[b]), basis.index(vo[c], eo[d]))];
                        assert!((x - y).abs() <= 1e-12 * k.total.abs().max());
                    }
                }
            }
        }

        let phi = basis.mode(0, 0);
        let mc = pairing_direct(&ctx, &phi, &phi, &MonteCarloConfig::new(400_000, 21)).unwrap();
        let entry = k.total[(0, 0)];
        assert!(
            (mc[3].mean - entry).abs() < 3.0 * mc[3].std_err,
            "{} +- {} vs {entry}",
            mc[3].mean,
            mc[3].std_err
        );
    }
}
