//! The Lagrangian split L = L0 + LM, the total-divergence property of LM,
//! and the conserved current of the global phase symmetry. Everything here
//! works at A = 0; the gauged cross-checks live in the currents module.

use crate::dynamics::schrodinger_rhs;
use crate::error::{Error, Result};
use crate::gauge::{Gauge, UnitsConfig};
use crate::grid::{divergence, Axis, ScalarField, VectorField3};
use crate::residual::ScaledResidual;
use crate::scalar::{real, Real};
use crate::spinor::analytic::AnalyticState;
use crate::spinor::{pauli, Mat2, Spinor, SpinorField};
use num_complex::Complex;

/// The split Lagrangian density, all fields real-checked, plus the largest
/// pointwise deviation of the unsplit (sigma.p psi)†(sigma.p psi) form from
/// L0 + LM. `scale` is the largest term magnitude that entered the
/// evaluation; on-shell eigenstates make L itself cancel to noise, so
/// residuals must be judged against the terms, not the result.
#[derive(Debug, Clone)]
pub struct LagrangianSample<R> {
    pub l0: ScalarField<R>,
    pub lm: ScalarField<R>,
    pub total: ScalarField<R>,
    pub scale: R,
    pub unsplit_residual: ScaledResidual<R>,
}

/// One-point analogue from exact derivatives.
#[derive(Debug, Clone, Copy)]
pub struct LagrangianPointSample<R> {
    pub l0: R,
    pub lm: R,
    pub total: R,
    pub scale: R,
    pub unsplit_residual: ScaledResidual<R>,
}

/// Noether current of psi -> e^{-i alpha/hbar} psi per unit delta-alpha:
/// time component identically the probability density, spatial part the
/// full probability current.
#[derive(Debug, Clone)]
pub struct NoetherCurrentSample<R> {
    pub time_component: ScalarField<R>,
    pub spatial: VectorField3<R>,
}

#[derive(Debug, Clone, Copy)]
pub struct NoetherPointSample<R> {
    pub time_component: R,
    pub spatial: [R; 3],
}

/// Both checks of the total-divergence property: pointwise
/// LM = (i hbar^2/2m) div(psi† sigma x grad psi), and the vanishing of the
/// periodic volume integral of LM.
#[derive(Debug, Clone, Copy)]
pub struct LmDivergenceReport<R> {
    pub pointwise: ScaledResidual<R>,
    pub integral: ScaledResidual<R>,
}

fn sigma_all<R: Real>() -> [Mat2<R>; 3] {
    [pauli(Axis::X), pauli(Axis::Y), pauli(Axis::Z)]
}

fn sigma_products<R: Real>() -> [[Mat2<R>; 3]; 3] {
    let mut out = [[Mat2::zero(); 3]; 3];
    for (a, axis_a) in Axis::ALL.into_iter().enumerate() {
        for (b, axis_b) in Axis::ALL.into_iter().enumerate() {
            out[a][b] = pauli(axis_a).mul(pauli(axis_b));
        }
    }
    out
}

const EPS_TERMS: [(usize, usize, usize, f64); 6] = [
    (0, 1, 2, 1.0),
    (1, 2, 0, 1.0),
    (2, 0, 1, 1.0),
    (1, 0, 2, -1.0),
    (2, 1, 0, -1.0),
    (0, 2, 1, -1.0),
];

/// Realness tolerance: the shared currents tolerance, floored at a small
/// multiple of the scalar's epsilon so single precision remains usable.
fn realness_tol<R: Real>() -> R {
    real::<R>(crate::currents::REALNESS_TOL).max(R::epsilon() * real(100.0))
}

/// The on-shell time derivative -(i/hbar) H psi with the free Hamiltonian.
pub fn on_shell_psi_dot<R: Real>(
    psi: &SpinorField<R>,
    units: &UnitsConfig<R>,
) -> Result<SpinorField<R>> {
    let gauge = Gauge::free(*psi.lattice(), *units);
    schrodinger_rhs(psi, &gauge, None)
}

/// Same from exact derivatives: psi_dot = (i hbar/2m) laplacian(psi).
pub fn on_shell_psi_dot_at<R: Real>(
    state: &dyn AnalyticState<R>,
    units: &UnitsConfig<R>,
    x: [R; 3],
) -> Spinor<R> {
    let hess = state.hessian(x);
    let mut lap = Spinor::zero();
    for a in 0..3 {
        lap = lap.add(hess[a][a]);
    }
    lap.scale(Complex::new(
        R::zero(),
        units.hbar / (real::<R>(2.0) * units.mass),
    ))
}

struct LagrangianTerms<R> {
    l0: Complex<R>,
    lm: Complex<R>,
    unsplit: Complex<R>,
    magnitude: R,
}

/// Shared pointwise evaluation from spinor values and first derivatives.
fn lagrangian_terms<R: Real>(
    psi: Spinor<R>,
    psi_dot: Spinor<R>,
    grad: [Spinor<R>; 3],
    units: &UnitsConfig<R>,
) -> LagrangianTerms<R> {
    let hbar = units.hbar;
    let h2_over_2m = hbar * hbar / (real::<R>(2.0) * units.mass);
    let sigmas = sigma_all::<R>();
    let products = sigma_products::<R>();

    // (i hbar/2)(psi† psi_dot - psi_dot† psi): the two dots are exact
    // conjugates, so this is exactly real.
    let a = psi.adjoint_dot(psi_dot);
    let b = psi_dot.adjoint_dot(psi);
    let time_term = (a - b) * Complex::new(R::zero(), hbar / real::<R>(2.0));

    let mut kinetic = Complex::new(R::zero(), R::zero());
    for g in &grad {
        kinetic += g.adjoint_dot(*g);
    }
    let kinetic_term = kinetic.scale(h2_over_2m);
    let l0 = time_term - kinetic_term;

    let mut eps_sum = Complex::new(R::zero(), R::zero());
    for &(i, j, k, sign) in &EPS_TERMS {
        let term = grad[i].adjoint_dot(sigmas[k].apply(grad[j]));
        eps_sum += term.scale(real(sign));
    }
    let lm = eps_sum * Complex::new(R::zero(), -h2_over_2m);

    // unsplit spatial term: -(1/2m)(sigma.p psi)†(sigma.p psi)
    // = -(hbar^2/2m) sum_ij grad_i† sigma_i sigma_j grad_j, products applied
    // without simplification
    let mut contraction = Complex::new(R::zero(), R::zero());
    for i in 0..3 {
        for j in 0..3 {
            contraction += grad[i].adjoint_dot(products[i][j].apply(grad[j]));
        }
    }
    let unsplit = time_term - contraction.scale(h2_over_2m);

    let magnitude = time_term.norm() + kinetic_term.norm() + lm.norm();
    LagrangianTerms {
        l0,
        lm,
        unsplit,
        magnitude,
    }
}

/// Evaluate L0, LM, and their sum on the lattice; `dpsi_dt` is supplied so
/// off-shell configurations can be probed (use [`on_shell_psi_dot`] for the
/// physical case).
pub fn lagrangian_density<R: Real>(
    psi: &SpinorField<R>,
    dpsi_dt: &SpinorField<R>,
    units: &UnitsConfig<R>,
) -> Result<LagrangianSample<R>> {
    if psi.lattice() != dpsi_dt.lattice() {
        return Err(Error::LatticeMismatch);
    }
    let grads = [
        psi.partial(Axis::X),
        psi.partial(Axis::Y),
        psi.partial(Axis::Z),
    ];
    let lat = *psi.lattice();
    let mut l0 = ScalarField::zeros(lat);
    let mut lm = ScalarField::zeros(lat);
    let mut total = ScalarField::zeros(lat);
    let mut scale = R::zero();
    let mut unsplit_residual = ScaledResidual::zero();
    for idx in 0..lat.n_sites() {
        let terms = lagrangian_terms(
            psi.values()[idx],
            dpsi_dt.values()[idx],
            [
                grads[0].values()[idx],
                grads[1].values()[idx],
                grads[2].values()[idx],
            ],
            units,
        );
        let sum = terms.l0 + terms.lm;
        l0.values_mut()[idx] = terms.l0;
        lm.values_mut()[idx] = terms.lm;
        total.values_mut()[idx] = sum;
        scale = scale.max(terms.magnitude);
        unsplit_residual.record((terms.unsplit - sum).norm(), terms.magnitude);
    }
    let tol = realness_tol::<R>();
    let max_im = l0
        .max_abs_im()
        .max(lm.max_abs_im())
        .max(total.max_abs_im());
    if max_im > tol * scale.max(R::min_positive_value()) {
        return Err(Error::NotReal {
            max_im: max_im.to_f64().unwrap_or(f64::NAN),
            scale: scale.to_f64().unwrap_or(f64::NAN),
            tolerance: tol.to_f64().unwrap_or(f64::NAN),
        });
    }
    let strip = |f: ScalarField<R>| f.map(|v| Complex::new(v.re, R::zero()));
    Ok(LagrangianSample {
        l0: strip(l0),
        lm: strip(lm),
        total: strip(total),
        scale,
        unsplit_residual,
    })
}

/// One-point Lagrangian sample from exact derivatives; `psi_dot` is the time
/// derivative at `x` (see [`on_shell_psi_dot_at`]).
pub fn lagrangian_density_at<R: Real>(
    state: &dyn AnalyticState<R>,
    psi_dot: Spinor<R>,
    units: &UnitsConfig<R>,
    x: [R; 3],
) -> LagrangianPointSample<R> {
    let terms = lagrangian_terms(state.value(x), psi_dot, state.gradient(x), units);
    let sum = terms.l0 + terms.lm;
    let mut unsplit_residual = ScaledResidual::zero();
    unsplit_residual.record((terms.unsplit - sum).norm(), terms.magnitude);
    LagrangianPointSample {
        l0: terms.l0.re,
        lm: terms.lm.re,
        total: sum.re,
        scale: terms.magnitude,
        unsplit_residual,
    }
}

fn lm_field<R: Real>(psi: &SpinorField<R>, units: &UnitsConfig<R>) -> ScalarField<R> {
    let sigmas = sigma_all::<R>();
    let h2_over_2m = units.hbar * units.hbar / (real::<R>(2.0) * units.mass);
    let grads = [
        psi.partial(Axis::X),
        psi.partial(Axis::Y),
        psi.partial(Axis::Z),
    ];
    let mut lm = ScalarField::zeros(*psi.lattice());
    for idx in 0..psi.lattice().n_sites() {
        let g = [
            grads[0].values()[idx],
            grads[1].values()[idx],
            grads[2].values()[idx],
        ];
        let mut eps_sum = Complex::new(R::zero(), R::zero());
        for &(i, j, k, sign) in &EPS_TERMS {
            eps_sum += g[i].adjoint_dot(sigmas[k].apply(g[j])).scale(real(sign));
        }
        lm.values_mut()[idx] = eps_sum * Complex::new(R::zero(), -h2_over_2m);
    }
    lm
}

/// W_i = epsilon_ijk psi† sigma_j d_k psi, the vector whose divergence
/// reproduces LM.
fn w_field<R: Real>(psi: &SpinorField<R>) -> VectorField3<R> {
    let sigmas = sigma_all::<R>();
    let grads = [
        psi.partial(Axis::X),
        psi.partial(Axis::Y),
        psi.partial(Axis::Z),
    ];
    let lat = *psi.lattice();
    let mut comps = [
        ScalarField::zeros(lat),
        ScalarField::zeros(lat),
        ScalarField::zeros(lat),
    ];
    for &(i, j, k, sign) in &EPS_TERMS {
        let out = comps[i].values_mut();
        for (idx, &p) in psi.values().iter().enumerate() {
            let term = p.adjoint_dot(sigmas[j].apply(grads[k].values()[idx]));
            out[idx] += term.scale(real(sign));
        }
    }
    VectorField3::from_components(comps)
}

/// Check (a): pointwise LM vs (i hbar^2/2m) div(W); check (b): the periodic
/// volume integral of LM vanishes (summation by parts telescopes). The
/// integral is judged against the larger of the integrated |LM| and the
/// integrated kinetic density, so states whose LM is pure rounding noise
/// (plane waves) are still measured against a physical scale.
pub fn lm_total_divergence_residual<R: Real>(
    psi: &SpinorField<R>,
    units: &UnitsConfig<R>,
) -> LmDivergenceReport<R> {
    let lm = lm_field(psi, units);
    let factor = Complex::new(
        R::zero(),
        units.hbar * units.hbar / (real::<R>(2.0) * units.mass),
    );
    let div_w = divergence(&w_field(psi)).scale(factor);
    let mut pointwise = ScaledResidual::zero();
    for (l, d) in lm.values().iter().zip(div_w.values()) {
        pointwise.record((l - d).norm(), l.norm().max(d.norm()));
    }

    let h2_over_2m = units.hbar * units.hbar / (real::<R>(2.0) * units.mass);
    let mut kinetic_integral = R::zero();
    for axis in Axis::ALL {
        let g = psi.partial(axis);
        for v in g.values() {
            kinetic_integral += v.norm_sqr();
        }
    }
    kinetic_integral *= h2_over_2m * psi.lattice().cell_volume();

    let mut integral = ScaledResidual::zero();
    integral.record(
        lm.grid_sum().norm(),
        lm.grid_sum_abs().max(kinetic_integral),
    );
    LmDivergenceReport { pointwise, integral }
}

/// Check (a) at one point with exact derivatives; rounding-level because
/// the symmetric-hessian term of div(W) cancels identically.
pub fn lm_total_divergence_residual_at<R: Real>(
    state: &dyn AnalyticState<R>,
    units: &UnitsConfig<R>,
    x: [R; 3],
) -> ScaledResidual<R> {
    let sigmas = sigma_all::<R>();
    let h2_over_2m = units.hbar * units.hbar / (real::<R>(2.0) * units.mass);
    let v = state.value(x);
    let grad = state.gradient(x);
    let hess = state.hessian(x);

    let mut eps_sum = Complex::new(R::zero(), R::zero());
    for &(i, j, k, sign) in &EPS_TERMS {
        eps_sum += grad[i].adjoint_dot(sigmas[k].apply(grad[j])).scale(real(sign));
    }
    let lm = eps_sum * Complex::new(R::zero(), -h2_over_2m);

    // d_i W_i = eps_ijk (d_i psi† sigma_j d_k psi + psi† sigma_j d_i d_k psi)
    let mut div_w = Complex::new(R::zero(), R::zero());
    for &(i, j, k, sign) in &EPS_TERMS {
        let first = grad[i].adjoint_dot(sigmas[j].apply(grad[k]));
        let second = v.adjoint_dot(sigmas[j].apply(hess[i][k]));
        div_w += (first + second).scale(real(sign));
    }
    let rhs = div_w * Complex::new(R::zero(), h2_over_2m);

    let mut res = ScaledResidual::zero();
    res.record((lm - rhs).norm(), lm.norm().max(rhs.norm()));
    res
}

struct NoetherTerms<R> {
    time: Complex<R>,
    spatial: [Complex<R>; 3],
}

/// Literal evaluation of J^mu per unit delta-alpha from the hard-coded
/// conjugate momenta:
///
///   dL/d(psi_dot)     = (i hbar/2) psi†
///   dL/d(psi_dot†)    = -(i hbar/2) psi
///   dL/d(d_l psi†)    = -(hbar^2/2m) d_l psi - (i hbar^2/2m) eps_ljk sigma_k d_j psi
///   dL/d(d_l psi)     = -(hbar^2/2m) d_l psi† - (i hbar^2/2m) eps_ilk d_i psi† sigma_k
///
/// contracted with delta psi = -(i/hbar) psi. The time derivative of psi
/// never appears: the momenta with respect to psi_dot multiply delta psi
/// itself. `include_lm` drops the LM-derived pieces of the spatial momenta.
fn noether_terms<R: Real>(
    psi: Spinor<R>,
    grad: [Spinor<R>; 3],
    units: &UnitsConfig<R>,
    include_lm: bool,
) -> NoetherTerms<R> {
    let hbar = units.hbar;
    let h2_over_2m = hbar * hbar / (real::<R>(2.0) * units.mass);
    let sigmas = sigma_all::<R>();
    let delta = psi.scale(Complex::new(R::zero(), -hbar.recip()));

    // J^0 = delta psi† [-(i hbar/2) psi] + [(i hbar/2) psi†] delta psi:
    // two identical halves of the density.
    let t1 = delta.adjoint_dot(psi.scale(Complex::new(R::zero(), -hbar / real::<R>(2.0))));
    let t2 = psi.adjoint_dot(delta) * Complex::new(R::zero(), hbar / real::<R>(2.0));
    let time = t1 + t2;

    let mut spatial = [Complex::new(R::zero(), R::zero()); 3];
    for l in 0..3 {
        // column momentum dL/d(d_l psi†)
        let mut col = grad[l].scale(Complex::new(-h2_over_2m, R::zero()));
        if include_lm {
            for &(ll, j, k, sign) in &EPS_TERMS {
                if ll != l {
                    continue;
                }
                col = col.add(
                    sigmas[k]
                        .apply(grad[j])
                        .scale(Complex::new(R::zero(), -h2_over_2m) * cplx_sign(sign)),
                );
            }
        }
        let term_a = delta.adjoint_dot(col);

        // row momentum dL/d(d_l psi) contracted with delta psi
        let mut term_b = grad[l].adjoint_dot(delta) * Complex::new(-h2_over_2m, R::zero());
        if include_lm {
            for &(i, ll, k, sign) in &EPS_TERMS {
                if ll != l {
                    continue;
                }
                term_b += grad[i].adjoint_dot(sigmas[k].apply(delta))
                    * Complex::new(R::zero(), -h2_over_2m)
                    * cplx_sign(sign);
            }
        }
        spatial[l] = term_a + term_b;
    }
    NoetherTerms { time, spatial }
}

fn cplx_sign<R: Real>(sign: f64) -> Complex<R> {
    Complex::new(real(sign), R::zero())
}

/// Noether current on the lattice. With `include_lm` false the LM momenta
/// are ablated and the spatial part loses exactly the magnetization current.
pub fn noether_current<R: Real>(
    psi: &SpinorField<R>,
    units: &UnitsConfig<R>,
    include_lm: bool,
) -> Result<NoetherCurrentSample<R>> {
    let lat = *psi.lattice();
    let grads = [
        psi.partial(Axis::X),
        psi.partial(Axis::Y),
        psi.partial(Axis::Z),
    ];
    let mut time = ScalarField::zeros(lat);
    let mut comps = [
        ScalarField::zeros(lat),
        ScalarField::zeros(lat),
        ScalarField::zeros(lat),
    ];
    for idx in 0..lat.n_sites() {
        let terms = noether_terms(
            psi.values()[idx],
            [
                grads[0].values()[idx],
                grads[1].values()[idx],
                grads[2].values()[idx],
            ],
            units,
            include_lm,
        );
        time.values_mut()[idx] = terms.time;
        for l in 0..3 {
            comps[l].values_mut()[idx] = terms.spatial[l];
        }
    }
    let tol = realness_tol::<R>();
    Ok(NoetherCurrentSample {
        time_component: time.into_real_checked(tol)?,
        spatial: VectorField3::from_components(comps).into_real_checked(tol)?,
    })
}

/// Noether current at one point from exact derivatives.
pub fn noether_current_at<R: Real>(
    state: &dyn AnalyticState<R>,
    units: &UnitsConfig<R>,
    x: [R; 3],
    include_lm: bool,
) -> NoetherPointSample<R> {
    let terms = noether_terms(state.value(x), state.gradient(x), units, include_lm);
    NoetherPointSample {
        time_component: terms.time.re,
        spatial: [terms.spatial[0].re, terms.spatial[1].re, terms.spatial[2].re],
    }
}
