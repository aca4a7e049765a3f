//! Physical constants, vector potentials, and the kinetic momentum
//! pi_a = -i hbar d_a - (q/c) A_a.

use crate::error::{Error, Result};
use crate::grid::{Axis, Lattice, ScalarField, VectorField3};
use crate::residual::ScaledResidual;
use crate::scalar::{real, Real};
use crate::spinor::analytic::AnalyticState;
use crate::spinor::{Spinor, SpinorField};
use num_complex::Complex;
use std::sync::Arc;

/// hbar, mass, charge, and the speed of light, all explicit so unit factors
/// can be traced through every expression (Gaussian convention, A carries a
/// 1/c in the minimal coupling).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitsConfig<R> {
    pub hbar: R,
    pub mass: R,
    pub charge: R,
    pub light_speed: R,
}

impl<R: Real> UnitsConfig<R> {
    pub fn new(hbar: R, mass: R, charge: R, light_speed: R) -> Result<Self> {
        let ok = hbar > R::zero()
            && hbar.is_finite()
            && mass > R::zero()
            && mass.is_finite()
            && light_speed > R::zero()
            && light_speed.is_finite()
            && charge.is_finite();
        if !ok {
            return Err(Error::InvalidUnits);
        }
        Ok(Self {
            hbar,
            mass,
            charge,
            light_speed,
        })
    }

    /// hbar = m = q = c = 1.
    pub fn natural() -> Self {
        Self {
            hbar: R::one(),
            mass: R::one(),
            charge: R::one(),
            light_speed: R::one(),
        }
    }

    pub fn with_charge(self, charge: R) -> Result<Self> {
        Self::new(self.hbar, self.mass, charge, self.light_speed)
    }

    /// q / c, the factor multiplying A in the kinetic momentum.
    #[inline]
    pub fn coupling(&self) -> R {
        self.charge / self.light_speed
    }

    /// q hbar / (2 m c), the factor turning spin density into magnetization.
    #[inline]
    pub fn magnetization_prefactor(&self) -> R {
        self.charge * self.hbar / (real::<R>(2.0) * self.mass * self.light_speed)
    }
}

/// A vector potential given in closed form. `jacobian` returns
/// J[j][a] = d A_a / d x_j; the magnetic field B = curl A is derived from it.
pub trait VectorPotential<R: Real>: Send + Sync {
    fn vector_potential(&self, x: [R; 3]) -> [R; 3];

    fn jacobian(&self, x: [R; 3]) -> [[R; 3]; 3];

    fn magnetic_field(&self, x: [R; 3]) -> [R; 3] {
        let j = self.jacobian(x);
        [
            j[1][2] - j[2][1],
            j[2][0] - j[0][2],
            j[0][1] - j[1][0],
        ]
    }

    /// True only when A vanishes identically; lets the coupled code paths be
    /// skipped entirely.
    fn is_identically_zero(&self) -> bool {
        false
    }
}

/// A = 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroPotential;

impl<R: Real> VectorPotential<R> for ZeroPotential {
    fn vector_potential(&self, _x: [R; 3]) -> [R; 3] {
        [R::zero(); 3]
    }

    fn jacobian(&self, _x: [R; 3]) -> [[R; 3]; 3] {
        [[R::zero(); 3]; 3]
    }

    fn is_identically_zero(&self) -> bool {
        true
    }
}

/// Uniform field B z-hat in the symmetric gauge about `center`:
/// A = (B/2) (-(y - yc), x - xc, 0). Linear, so lattice differences of it
/// are exact away from the periodic wrap.
#[derive(Debug, Clone, Copy)]
pub struct UniformBz<R> {
    pub field_strength: R,
    pub center: [R; 3],
}

impl<R: Real> UniformBz<R> {
    pub fn new(field_strength: R, center: [R; 3]) -> Self {
        Self {
            field_strength,
            center,
        }
    }

    /// Centered on the box so the potential is smallest where a centered
    /// packet lives.
    pub fn centered(field_strength: R, lattice: &Lattice<R>) -> Self {
        Self::new(field_strength, lattice.center())
    }
}

impl<R: Real> VectorPotential<R> for UniformBz<R> {
    fn vector_potential(&self, x: [R; 3]) -> [R; 3] {
        let half_b = self.field_strength / real(2.0);
        [
            -half_b * (x[1] - self.center[1]),
            half_b * (x[0] - self.center[0]),
            R::zero(),
        ]
    }

    fn jacobian(&self, _x: [R; 3]) -> [[R; 3]; 3] {
        let half_b = self.field_strength / real(2.0);
        let mut j = [[R::zero(); 3]; 3];
        j[1][0] = -half_b; // d A_x / d y
        j[0][1] = half_b; // d A_y / d x
        j
    }

    fn is_identically_zero(&self) -> bool {
        self.field_strength == R::zero()
    }
}

/// Arbitrary closed-form potential supplied as closures.
pub struct CustomPotential<R> {
    a: Box<dyn Fn([R; 3]) -> [R; 3] + Send + Sync>,
    jac: Box<dyn Fn([R; 3]) -> [[R; 3]; 3] + Send + Sync>,
}

impl<R: Real> CustomPotential<R> {
    pub fn new(
        a: impl Fn([R; 3]) -> [R; 3] + Send + Sync + 'static,
        jac: impl Fn([R; 3]) -> [[R; 3]; 3] + Send + Sync + 'static,
    ) -> Self {
        Self {
            a: Box::new(a),
            jac: Box::new(jac),
        }
    }
}

impl<R: Real> VectorPotential<R> for CustomPotential<R> {
    fn vector_potential(&self, x: [R; 3]) -> [R; 3] {
        (self.a)(x)
    }

    fn jacobian(&self, x: [R; 3]) -> [[R; 3]; 3] {
        (self.jac)(x)
    }
}

/// Units + potential bound to a lattice, with A pre-sampled once. When the
/// particle is neutral or A vanishes identically, no cache is built and the
/// A sweeps are skipped outright, so those results match the free case
/// bit for bit.
#[derive(Clone)]
pub struct Gauge<R: Real> {
    units: UnitsConfig<R>,
    potential: Arc<dyn VectorPotential<R>>,
    lattice: Lattice<R>,
    a_cached: Option<VectorField3<R>>,
}

impl<R: Real> Gauge<R> {
    pub fn new(
        lattice: Lattice<R>,
        units: UnitsConfig<R>,
        potential: Arc<dyn VectorPotential<R>>,
    ) -> Self {
        let coupled = units.coupling() != R::zero() && !potential.is_identically_zero();
        let a_cached = coupled.then(|| {
            VectorField3::sample(lattice, |x| {
                let a = potential.vector_potential(x);
                [
                    Complex::new(a[0], R::zero()),
                    Complex::new(a[1], R::zero()),
                    Complex::new(a[2], R::zero()),
                ]
            })
        });
        Self {
            units,
            potential,
            lattice,
            a_cached,
        }
    }

    /// Free particle: A = 0.
    pub fn free(lattice: Lattice<R>, units: UnitsConfig<R>) -> Self {
        Self::new(lattice, units, Arc::new(ZeroPotential))
    }

    #[inline]
    pub fn units(&self) -> &UnitsConfig<R> {
        &self.units
    }

    #[inline]
    pub fn lattice(&self) -> &Lattice<R> {
        &self.lattice
    }

    pub fn potential(&self) -> &Arc<dyn VectorPotential<R>> {
        &self.potential
    }

    /// True when the A-term actually participates.
    #[inline]
    pub fn is_coupled(&self) -> bool {
        self.a_cached.is_some()
    }

    /// The sampled vector potential, if the coupling is active.
    pub fn cached_potential(&self) -> Option<&VectorField3<R>> {
        self.a_cached.as_ref()
    }

    pub fn magnetic_field_at(&self, x: [R; 3]) -> [R; 3] {
        self.potential.magnetic_field(x)
    }

    /// B = curl A sampled from the closed form at every site.
    pub fn magnetic_field_sampled(&self) -> VectorField3<R> {
        let p = &self.potential;
        VectorField3::sample(self.lattice, |x| {
            let b = p.magnetic_field(x);
            [
                Complex::new(b[0], R::zero()),
                Complex::new(b[1], R::zero()),
                Complex::new(b[2], R::zero()),
            ]
        })
    }

    /// pi_a psi = -i hbar D_a psi - (q/c) A_a psi on the lattice.
    pub fn kinetic_momentum(&self, psi: &SpinorField<R>, axis: Axis) -> Result<SpinorField<R>> {
        if psi.lattice() != &self.lattice {
            return Err(Error::LatticeMismatch);
        }
        let mut out = psi.partial(axis);
        out.scale_in_place(Complex::new(R::zero(), -self.units.hbar));
        if let Some(a) = &self.a_cached {
            let kappa = self.units.coupling();
            let a_vals = a.component(axis).values();
            for ((o, &p), &av) in out
                .values_mut()
                .iter_mut()
                .zip(psi.values())
                .zip(a_vals)
            {
                *o = o.add(p.scale(Complex::new(-kappa * av.re, R::zero())));
            }
        }
        Ok(out)
    }

    /// pi_a psi at a point, from the state's exact gradient.
    pub fn kinetic_momentum_at(
        &self,
        state: &dyn AnalyticState<R>,
        x: [R; 3],
        axis: Axis,
    ) -> Spinor<R> {
        let a = axis.index();
        let mut out = state.gradient(x)[a].scale(Complex::new(R::zero(), -self.units.hbar));
        let kappa = self.units.coupling();
        if kappa != R::zero() && !self.potential.is_identically_zero() {
            let av = self.potential.vector_potential(x)[a];
            out = out.add(state.value(x).scale(Complex::new(-kappa * av, R::zero())));
        }
        out
    }

    /// pi_b (pi_a psi) at a point, expanded through the product rule:
    ///
    ///   -hbar^2 d_b d_a psi
    ///   + i hbar kappa (d_b A_a) psi
    ///   + i hbar kappa (A_a d_b psi + A_b d_a psi)
    ///   + kappa^2 A_a A_b psi
    pub fn kinetic_momentum_second_at(
        &self,
        state: &dyn AnalyticState<R>,
        x: [R; 3],
        b_axis: Axis,
        a_axis: Axis,
    ) -> Spinor<R> {
        let a = a_axis.index();
        let b = b_axis.index();
        let hbar = self.units.hbar;
        let hess = state.hessian(x);
        let mut out = hess[b][a].scale(Complex::new(-hbar * hbar, R::zero()));
        let kappa = self.units.coupling();
        if kappa != R::zero() && !self.potential.is_identically_zero() {
            let av = self.potential.vector_potential(x);
            let jac = self.potential.jacobian(x);
            let grad = state.gradient(x);
            let value = state.value(x);
            let i_hbar_kappa = Complex::new(R::zero(), hbar * kappa);
            out = out.add(value.scale(i_hbar_kappa * Complex::new(jac[b][a], R::zero())));
            out = out.add(grad[b].scale(i_hbar_kappa * Complex::new(av[a], R::zero())));
            out = out.add(grad[a].scale(i_hbar_kappa * Complex::new(av[b], R::zero())));
            out = out.add(value.scale(Complex::new(kappa * kappa * av[a] * av[b], R::zero())));
        }
        out
    }

    /// Pointwise residual of
    /// alpha†(pi_a beta) - (pi_a alpha)†beta = (hbar/i) d_a (alpha†beta)
    /// on the lattice. The A-terms cancel identically; what remains measures
    /// the discrete Leibniz defect of the central difference, O(h^2).
    pub fn leibniz_residual(
        &self,
        alpha: &SpinorField<R>,
        beta: &SpinorField<R>,
        axis: Axis,
    ) -> Result<ScaledResidual<R>> {
        if alpha.lattice() != &self.lattice || beta.lattice() != &self.lattice {
            return Err(Error::LatticeMismatch);
        }
        let pi_beta = self.kinetic_momentum(beta, axis)?;
        let pi_alpha = self.kinetic_momentum(alpha, axis)?;
        let overlap = ScalarField::from_values(
            self.lattice,
            alpha
                .values()
                .iter()
                .zip(beta.values())
                .map(|(&a, &b)| a.adjoint_dot(b))
                .collect(),
        );
        let d_overlap = overlap.partial(axis);
        let minus_i_hbar = Complex::new(R::zero(), -self.units.hbar);
        let mut res = ScaledResidual::zero();
        for i in 0..self.lattice.n_sites() {
            let lhs = alpha.values()[i].adjoint_dot(pi_beta.values()[i])
                - pi_alpha.values()[i].adjoint_dot(beta.values()[i]);
            let rhs = minus_i_hbar * d_overlap.values()[i];
            res.record((lhs - rhs).norm(), lhs.norm().max(rhs.norm()));
        }
        Ok(res)
    }

    /// The same identity evaluated from exact derivatives at one point; the
    /// right-hand side uses d_a(alpha†beta) = (d_a alpha)†beta + alpha†(d_a beta).
    pub fn leibniz_residual_at(
        &self,
        alpha: &dyn AnalyticState<R>,
        beta: &dyn AnalyticState<R>,
        x: [R; 3],
        axis: Axis,
    ) -> ScaledResidual<R> {
        let a = axis.index();
        let alpha_v = alpha.value(x);
        let beta_v = beta.value(x);
        let lhs = alpha_v.adjoint_dot(self.kinetic_momentum_at(beta, x, axis))
            - self.kinetic_momentum_at(alpha, x, axis).adjoint_dot(beta_v);
        let d_overlap =
            alpha.gradient(x)[a].adjoint_dot(beta_v) + alpha_v.adjoint_dot(beta.gradient(x)[a]);
        let rhs = Complex::new(R::zero(), -self.units.hbar) * d_overlap;
        let mut res = ScaledResidual::zero();
        res.record((lhs - rhs).norm(), lhs.norm().max(rhs.norm()));
        res
    }
}
