//! Closed-form reference states with exact derivatives.
//!
//! Every grid-path check in the crate has an analytic twin that evaluates the
//! same expression from these states' exact gradients and Hessians, so
//! truncation error can be separated from formula error.

use super::{pauli, Spinor, SpinorField};
use crate::grid::{Axis, Lattice};
use crate::scalar::{real, Real};
use num_complex::Complex;

/// A state with exact value, gradient, and Hessian at any point.
pub trait AnalyticState<R: Real> {
    fn value(&self, x: [R; 3]) -> Spinor<R>;

    /// d psi / d x_a for a = 0, 1, 2.
    fn gradient(&self, x: [R; 3]) -> [Spinor<R>; 3];

    /// d^2 psi / (d x_a d x_b), symmetric in (a, b).
    fn hessian(&self, x: [R; 3]) -> [[Spinor<R>; 3]; 3];

    /// Sample the exact value on a lattice.
    fn sample(&self, lattice: Lattice<R>) -> SpinorField<R> {
        SpinorField::sample(lattice, |x| self.value(x))
    }
}

/// psi(x) = chi exp(i k . x), uniform spin direction.
#[derive(Debug, Clone, Copy)]
pub struct PlaneWave<R> {
    pub wavevector: [R; 3],
    pub spin: Spinor<R>,
}

impl<R: Real> PlaneWave<R> {
    pub fn new(wavevector: [R; 3], spin: Spinor<R>) -> Self {
        Self { wavevector, spin }
    }

    /// Wavevector with `modes[a]` full periods along axis a of the given
    /// lattice, so the state is exactly box-periodic.
    pub fn commensurate(lattice: &Lattice<R>, modes: [i32; 3], spin: Spinor<R>) -> Self {
        let lengths = lattice.lengths();
        let two_pi = real::<R>(2.0) * R::PI();
        let mut k = [R::zero(); 3];
        for a in 0..3 {
            k[a] = two_pi * real::<R>(modes[a] as f64) / lengths[a];
        }
        Self::new(k, spin)
    }

    fn phase(&self, x: [R; 3]) -> Complex<R> {
        let mut kx = R::zero();
        for a in 0..3 {
            kx += self.wavevector[a] * x[a];
        }
        Complex::new(R::zero(), kx).exp()
    }
}

impl<R: Real> AnalyticState<R> for PlaneWave<R> {
    fn value(&self, x: [R; 3]) -> Spinor<R> {
        self.spin.scale(self.phase(x))
    }

    fn gradient(&self, x: [R; 3]) -> [Spinor<R>; 3] {
        let v = self.value(x);
        let mut out = [Spinor::zero(); 3];
        for a in 0..3 {
            out[a] = v.scale(Complex::new(R::zero(), self.wavevector[a]));
        }
        out
    }

    fn hessian(&self, x: [R; 3]) -> [[Spinor<R>; 3]; 3] {
        let v = self.value(x);
        let mut out = [[Spinor::zero(); 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                let factor = Complex::new(-self.wavevector[a] * self.wavevector[b], R::zero());
                out[a][b] = v.scale(factor);
            }
        }
        out
    }
}

/// psi(x) = chi g(x) exp(i k . (x - c)) with the envelope
/// g(x) = exp(-|x - c|^2 / (2 w^2)).
#[derive(Debug, Clone, Copy)]
pub struct GaussianPacket<R> {
    pub center: [R; 3],
    pub width: R,
    pub wavevector: [R; 3],
    pub spin: Spinor<R>,
}

impl<R: Real> GaussianPacket<R> {
    pub fn new(center: [R; 3], width: R, wavevector: [R; 3], spin: Spinor<R>) -> Self {
        Self {
            center,
            width,
            wavevector,
            spin,
        }
    }

    fn envelope(&self, x: [R; 3]) -> R {
        let mut r2 = R::zero();
        for a in 0..3 {
            let d = x[a] - self.center[a];
            r2 += d * d;
        }
        (-r2 / (real::<R>(2.0) * self.width * self.width)).exp()
    }

    /// Log-derivative phi_a with d_a psi = phi_a psi.
    fn log_grad(&self, x: [R; 3]) -> [Complex<R>; 3] {
        let w2 = self.width * self.width;
        let mut out = [Complex::new(R::zero(), R::zero()); 3];
        for a in 0..3 {
            out[a] = Complex::new(-(x[a] - self.center[a]) / w2, self.wavevector[a]);
        }
        out
    }
}

impl<R: Real> AnalyticState<R> for GaussianPacket<R> {
    fn value(&self, x: [R; 3]) -> Spinor<R> {
        let mut kx = R::zero();
        for a in 0..3 {
            kx += self.wavevector[a] * (x[a] - self.center[a]);
        }
        let factor = Complex::new(R::zero(), kx).exp() * Complex::new(self.envelope(x), R::zero());
        self.spin.scale(factor)
    }

    fn gradient(&self, x: [R; 3]) -> [Spinor<R>; 3] {
        let v = self.value(x);
        let phi = self.log_grad(x);
        [v.scale(phi[0]), v.scale(phi[1]), v.scale(phi[2])]
    }

    fn hessian(&self, x: [R; 3]) -> [[Spinor<R>; 3]; 3] {
        // d_b d_a psi = (phi_a phi_b + d_b phi_a) psi, with
        // d_b phi_a = -delta_ab / w^2.
        let v = self.value(x);
        let phi = self.log_grad(x);
        let inv_w2 = (self.width * self.width).recip();
        let mut out = [[Spinor::zero(); 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                let mut factor = phi[a] * phi[b];
                if a == b {
                    factor -= Complex::new(inv_w2, R::zero());
                }
                out[a][b] = v.scale(factor);
            }
        }
        out
    }
}

/// Gaussian envelope with a spin texture: the spinor is rotated about the
/// y-axis by an angle proportional to the x-offset,
/// chi(x) = exp(-i theta(x) sigma_y / 2) chi0, theta = pitch (x_0 - c_0).
#[derive(Debug, Clone, Copy)]
pub struct TexturedGaussian<R> {
    pub center: [R; 3],
    pub width: R,
    pub pitch: R,
    pub spin: Spinor<R>,
}

impl<R: Real> TexturedGaussian<R> {
    pub fn new(center: [R; 3], width: R, pitch: R, spin: Spinor<R>) -> Self {
        Self {
            center,
            width,
            pitch,
            spin,
        }
    }

    /// chi(theta) = cos(theta/2) chi0 - i sin(theta/2) sigma_y chi0.
    fn rotated_spin(&self, theta: R) -> Spinor<R> {
        let half = theta / real(2.0);
        let c = Complex::new(half.cos(), R::zero());
        let s = Complex::new(R::zero(), -half.sin());
        self.spin.scale(c).add(pauli(Axis::Y).apply(self.spin).scale(s))
    }

    /// d chi / d theta = -(i/2) sigma_y chi.
    fn spin_theta_derivative(&self, chi: Spinor<R>) -> Spinor<R> {
        pauli(Axis::Y)
            .apply(chi)
            .scale(Complex::new(R::zero(), -real::<R>(0.5)))
    }

    fn envelope(&self, x: [R; 3]) -> R {
        let mut r2 = R::zero();
        for a in 0..3 {
            let d = x[a] - self.center[a];
            r2 += d * d;
        }
        (-r2 / (real::<R>(2.0) * self.width * self.width)).exp()
    }
}

impl<R: Real> AnalyticState<R> for TexturedGaussian<R> {
    fn value(&self, x: [R; 3]) -> Spinor<R> {
        let theta = self.pitch * (x[0] - self.center[0]);
        self.rotated_spin(theta)
            .scale(Complex::new(self.envelope(x), R::zero()))
    }

    fn gradient(&self, x: [R; 3]) -> [Spinor<R>; 3] {
        let theta = self.pitch * (x[0] - self.center[0]);
        let chi = self.rotated_spin(theta);
        let dchi = self.spin_theta_derivative(chi).scale(Complex::new(self.pitch, R::zero()));
        let g = self.envelope(x);
        let w2 = self.width * self.width;
        let mut out = [Spinor::zero(); 3];
        for a in 0..3 {
            let dg = -(x[a] - self.center[a]) / w2 * g;
            out[a] = chi.scale(Complex::new(dg, R::zero()));
            if a == 0 {
                out[a] = out[a].add(dchi.scale(Complex::new(g, R::zero())));
            }
        }
        out
    }

    fn hessian(&self, x: [R; 3]) -> [[Spinor<R>; 3]; 3] {
        let theta = self.pitch * (x[0] - self.center[0]);
        let chi = self.rotated_spin(theta);
        let p = Complex::new(self.pitch, R::zero());
        // d_0 chi = pitch * chi_theta; d_0^2 chi = -(pitch^2/4) chi since
        // chi_theta_theta = -chi/4.
        let dchi = self.spin_theta_derivative(chi).scale(p);
        let ddchi = chi.scale(Complex::new(-self.pitch * self.pitch / real(4.0), R::zero()));
        let g = self.envelope(x);
        let w2 = self.width * self.width;
        let mut dg = [R::zero(); 3];
        for a in 0..3 {
            dg[a] = -(x[a] - self.center[a]) / w2 * g;
        }
        let mut out = [[Spinor::zero(); 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                // envelope part: d_b d_a g
                let mut ddg = dg[a] * dg[b] / g;
                if a == b {
                    ddg -= g / w2;
                }
                let mut term = chi.scale(Complex::new(ddg, R::zero()));
                if a == 0 {
                    term = term.add(dchi.scale(Complex::new(dg[b], R::zero())));
                }
                if b == 0 {
                    term = term.add(dchi.scale(Complex::new(dg[a], R::zero())));
                }
                if a == 0 && b == 0 {
                    term = term.add(ddchi.scale(Complex::new(g, R::zero())));
                }
                out[a][b] = term;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cplx;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spinor_dist(a: Spinor<f64>, b: Spinor<f64>) -> f64 {
        a.sub(b).max_abs()
    }

    /// Check gradient and Hessian of a state against central finite
    /// differences of value/gradient at random probe points.
    fn check_derivatives(state: &dyn AnalyticState<f64>, scale: f64, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = 1e-4;
        for _ in 0..25 {
            let x: [f64; 3] = [
                rng.gen_range(1.0..3.0),
                rng.gen_range(1.0..3.0),
                rng.gen_range(1.0..3.0),
            ];
            let grad = state.gradient(x);
            let hess = state.hessian(x);
            for a in 0..3 {
                let mut xp = x;
                let mut xm = x;
                xp[a] += h;
                xm[a] -= h;
                let fd = state.value(xp).sub(state.value(xm)).scale(cplx(1.0 / (2.0 * h), 0.0));
                assert!(
                    spinor_dist(fd, grad[a]) < 1e-6 * scale,
                    "gradient axis {a}: fd mismatch {}",
                    spinor_dist(fd, grad[a])
                );
                for b in 0..3 {
                    let gp = state.gradient(xp)[b];
                    let gm = state.gradient(xm)[b];
                    let fd2 = gp.sub(gm).scale(cplx(1.0 / (2.0 * h), 0.0));
                    assert!(
                        spinor_dist(fd2, hess[b][a]) < 1e-6 * scale,
                        "hessian ({a},{b}): fd mismatch {}",
                        spinor_dist(fd2, hess[b][a])
                    );
                    // symmetry
                    assert!(spinor_dist(hess[a][b], hess[b][a]) < 1e-12 * scale);
                }
            }
        }
    }

    #[test]
    fn plane_wave_derivatives_match_finite_differences() {
        let state = PlaneWave::new(
            [0.7, -0.4, 1.1],
            Spinor::new(cplx(0.8, 0.1), cplx(-0.3, 0.5)),
        );
        check_derivatives(&state, 1.0, 101);
    }

    #[test]
    fn gaussian_derivatives_match_finite_differences() {
        let state = GaussianPacket::new(
            [2.0, 2.0, 2.0],
            0.8,
            [0.9, 0.0, -0.5],
            Spinor::new(cplx(1.0, 0.0), cplx(0.2, -0.4)),
        );
        check_derivatives(&state, 1.0, 102);
    }

    #[test]
    fn textured_derivatives_match_finite_differences() {
        let state = TexturedGaussian::new(
            [2.0, 2.0, 2.0],
            0.9,
            1.3,
            Spinor::new(cplx(1.0, 0.0), cplx(0.0, 0.0)),
        );
        check_derivatives(&state, 1.0, 103);
    }

    #[test]
    fn plane_wave_gradient_is_ik_psi() {
        let k = [0.5, -1.5, 2.0];
        let state = PlaneWave::new(k, Spinor::new(cplx(0.6, 0.0), cplx(0.0, 0.8)));
        let x = [0.3, 1.7, -0.2];
        let v = state.value(x);
        let g = state.gradient(x);
        for a in 0..3 {
            let expected = v.scale(cplx(0.0, k[a]));
            assert!(spinor_dist(g[a], expected) < 1e-16);
        }
        assert_relative_eq!(v.norm_sqr(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn commensurate_wave_is_box_periodic() {
        let lat = Lattice::cubic(8, 0.5).unwrap();
        let state = PlaneWave::commensurate(&lat, [2, -1, 0], Spinor::basis_up());
        let l = lat.lengths();
        let x = [0.37, 0.91, 1.13];
        let shifted = [x[0] + l[0], x[1], x[2]];
        assert!(spinor_dist(state.value(x), state.value(shifted)) < 1e-13);
    }

    #[test]
    fn texture_rotation_is_unitary() {
        let state = TexturedGaussian::new(
            [0.0, 0.0, 0.0],
            1.0,
            2.0,
            Spinor::new(cplx(0.6, 0.3), cplx(-0.2, 0.7)),
        );
        let chi0_norm = state.spin.norm_sqr();
        for step in 0..20 {
            let theta = 0.37 * f64::from(step);
            let chi = state.rotated_spin(theta);
            assert_relative_eq!(chi.norm_sqr(), chi0_norm, max_relative = 1e-13);
        }
        // at the center the texture reduces to the base spinor
        let v = state.value([0.0, 0.0, 0.0]);
        assert!(spinor_dist(v, state.spin) < 1e-15);
    }

    #[test]
    fn gaussian_at_center_is_spin_with_unit_envelope() {
        let spin = Spinor::new(cplx(0.3, 0.4), cplx(0.5, 0.0));
        let state = GaussianPacket::new([1.0, 2.0, 3.0], 0.7, [0.4, 0.0, 0.0], spin);
        assert!(spinor_dist(state.value([1.0, 2.0, 3.0]), spin) < 1e-16);
    }

    #[test]
    fn sampled_state_matches_pointwise_values() {
        let lat = Lattice::cubic(6, 0.5).unwrap();
        let state = GaussianPacket::new(lat.center(), 0.6, [0.0, 0.0, 0.0], Spinor::basis_up());
        let field = state.sample(lat);
        for idx in [0, 7, 100, 215] {
            let x = lat.position(idx);
            assert!(spinor_dist(field.values()[idx], state.value(x)) < 1e-16);
        }
    }
}
