//! Matrix-free BiCGStab for the implicit time step.
//!
//! The Cayley operator 1 + (i dt/2 hbar) H is a small non-Hermitian
//! perturbation of the identity at sane step sizes, which BiCGStab handles in
//! a handful of iterations without ever materializing H.

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spinor::SpinorField;
use num_complex::Complex;

#[derive(Debug, Clone, Copy)]
pub struct SolverStats<R> {
    pub iterations: usize,
    /// Final residual norm relative to |rhs|.
    pub relative_residual: R,
}

/// Solve `apply(x) = rhs` iteratively, starting from `x0`, until the residual
/// drops below `tolerance * |rhs|`.
pub fn bicgstab<R: Real>(
    apply: impl Fn(&SpinorField<R>) -> SpinorField<R>,
    rhs: &SpinorField<R>,
    x0: &SpinorField<R>,
    tolerance: R,
    max_iterations: usize,
) -> Result<(SpinorField<R>, SolverStats<R>)> {
    let b_norm = rhs.norm();
    if b_norm == R::zero() {
        return Ok((
            SpinorField::zeros(*rhs.lattice()),
            SolverStats {
                iterations: 0,
                relative_residual: R::zero(),
            },
        ));
    }
    let breakdown_floor = R::min_positive_value().sqrt();

    let mut x = x0.clone();
    let mut r = rhs.sub(&apply(&x)).expect("operator must preserve the lattice");
    let r_shadow = r.clone();
    let mut rho_prev = Complex::new(R::one(), R::zero());
    let mut alpha = Complex::new(R::one(), R::zero());
    let mut omega = Complex::new(R::one(), R::zero());
    let mut v = SpinorField::zeros(*rhs.lattice());
    let mut p = SpinorField::zeros(*rhs.lattice());

    let mut res_norm = r.norm();
    if res_norm <= tolerance * b_norm {
        return Ok((
            x,
            SolverStats {
                iterations: 0,
                relative_residual: res_norm / b_norm,
            },
        ));
    }

    for iteration in 1..=max_iterations {
        let rho = r_shadow.dot(&r);
        if rho.norm() < breakdown_floor {
            return Err(Error::SolverBreakdown {
                iterations: iteration,
                residual: (res_norm / b_norm).to_f64().unwrap_or(f64::NAN),
            });
        }
        let beta = (rho / rho_prev) * (alpha / omega);
        // p = r + beta (p - omega v)
        p.axpy_in_place(-omega, &v);
        p.scale_in_place(beta);
        p.axpy_in_place(Complex::new(R::one(), R::zero()), &r);

        v = apply(&p);
        let denom = r_shadow.dot(&v);
        if denom.norm() < breakdown_floor {
            return Err(Error::SolverBreakdown {
                iterations: iteration,
                residual: (res_norm / b_norm).to_f64().unwrap_or(f64::NAN),
            });
        }
        alpha = rho / denom;

        // s = r - alpha v (reuse r)
        r.axpy_in_place(-alpha, &v);
        let s_norm = r.norm();
        if s_norm <= tolerance * b_norm {
            x.axpy_in_place(alpha, &p);
            return Ok((
                x,
                SolverStats {
                    iterations: iteration,
                    relative_residual: s_norm / b_norm,
                },
            ));
        }

        let t = apply(&r);
        let tt = t.dot(&t);
        if tt.norm() < breakdown_floor {
            return Err(Error::SolverBreakdown {
                iterations: iteration,
                residual: (s_norm / b_norm).to_f64().unwrap_or(f64::NAN),
            });
        }
        omega = t.dot(&r) / tt;

        x.axpy_in_place(alpha, &p);
        x.axpy_in_place(omega, &r);
        // r = s - omega t
        r.axpy_in_place(-omega, &t);
        res_norm = r.norm();
        if res_norm <= tolerance * b_norm {
            return Ok((
                x,
                SolverStats {
                    iterations: iteration,
                    relative_residual: res_norm / b_norm,
                },
            ));
        }
        rho_prev = rho;
    }

    Err(Error::SolverDidNotConverge {
        iterations: max_iterations,
        residual: (res_norm / b_norm).to_f64().unwrap_or(f64::NAN),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Axis, Lattice};
    use crate::scalar::cplx;
    use crate::spinor::Spinor;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(lat: Lattice<f64>, seed: u64) -> SpinorField<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SpinorField::from_values(
            lat,
            (0..lat.n_sites())
                .map(|_| {
                    Spinor::new(
                        cplx(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                        cplx(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                    )
                })
                .collect(),
        )
    }

    /// Identity plus a skewed second-difference coupling — the shape of the
    /// Cayley operator.
    fn cayley_like(psi: &SpinorField<f64>) -> SpinorField<f64> {
        let d2 = psi.partial(Axis::X).partial(Axis::X);
        let mut out = psi.clone();
        out.axpy_in_place(cplx(0.0, 0.05), &d2);
        out
    }

    #[test]
    fn identity_system_converges_immediately() {
        let lat = Lattice::cubic(6, 0.5).unwrap();
        let rhs = random_field(lat, 1);
        let x0 = SpinorField::zeros(lat);
        let (x, stats) = bicgstab(|p| p.clone(), &rhs, &x0, 1e-12, 50).unwrap();
        assert!(x.sub(&rhs).unwrap().max_abs() < 1e-12);
        assert!(stats.iterations <= 1);
    }

    #[test]
    fn zero_rhs_returns_zero() {
        let lat = Lattice::cubic(6, 0.5).unwrap();
        let rhs = SpinorField::zeros(lat);
        let x0 = random_field(lat, 2);
        let (x, stats) = bicgstab(cayley_like, &rhs, &x0, 1e-12, 50).unwrap();
        assert_eq!(x.max_abs(), 0.0);
        assert_eq!(stats.iterations, 0);
    }

    #[test]
    fn cayley_like_system_solves_to_tolerance() {
        let lat = Lattice::cubic(8, 0.5).unwrap();
        let rhs = random_field(lat, 3);
        let (x, stats) = bicgstab(cayley_like, &rhs, &rhs, 1e-12, 200).unwrap();
        let residual = rhs.sub(&cayley_like(&x)).unwrap().norm() / rhs.norm();
        assert!(residual <= 1e-12, "residual {residual:e}");
        assert!(stats.relative_residual <= 1e-12);
        assert!(stats.iterations < 50);
    }

    #[test]
    fn deterministic_given_same_inputs() {
        let lat = Lattice::cubic(8, 0.5).unwrap();
        let rhs = random_field(lat, 4);
        let run = || bicgstab(cayley_like, &rhs, &rhs, 1e-12, 200).unwrap();
        let (x1, s1) = run();
        let (x2, s2) = run();
        assert_eq!(x1, x2);
        assert_eq!(s1.iterations, s2.iterations);
    }

    #[test]
    fn reports_non_convergence() {
        let lat = Lattice::cubic(6, 0.5).unwrap();
        let rhs = random_field(lat, 5);
        let x0 = SpinorField::zeros(lat);
        let err = bicgstab(cayley_like, &rhs, &x0, 1e-15, 1).unwrap_err();
        match err {
            Error::SolverDidNotConverge { iterations, residual } => {
                assert_eq!(iterations, 1);
                assert!(residual > 0.0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
