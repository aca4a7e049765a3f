//! Two-component spinors, the Pauli matrices, and spinor fields on a lattice.

pub mod analytic;

use crate::error::{Error, Result};
use crate::grid::{Axis, Lattice, ScalarField, VectorField3};
use crate::scalar::{real, Real};
use num_complex::Complex;

/// One two-component spinor value (up, down).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spinor<R> {
    pub up: Complex<R>,
    pub down: Complex<R>,
}

impl<R: Real> Spinor<R> {
    pub fn new(up: Complex<R>, down: Complex<R>) -> Self {
        Self { up, down }
    }

    pub fn zero() -> Self {
        let z = Complex::new(R::zero(), R::zero());
        Self { up: z, down: z }
    }

    /// Spin-up basis state (1, 0).
    pub fn basis_up() -> Self {
        Self {
            up: Complex::new(R::one(), R::zero()),
            down: Complex::new(R::zero(), R::zero()),
        }
    }

    /// Spin-down basis state (0, 1).
    pub fn basis_down() -> Self {
        Self {
            up: Complex::new(R::zero(), R::zero()),
            down: Complex::new(R::one(), R::zero()),
        }
    }

    #[inline]
    pub fn add(self, other: Self) -> Self {
        Self {
            up: self.up + other.up,
            down: self.down + other.down,
        }
    }

    #[inline]
    pub fn sub(self, other: Self) -> Self {
        Self {
            up: self.up - other.up,
            down: self.down - other.down,
        }
    }

    #[inline]
    pub fn scale(self, factor: Complex<R>) -> Self {
        Self {
            up: self.up * factor,
            down: self.down * factor,
        }
    }

    /// self† other = conj(up) other.up + conj(down) other.down.
    #[inline]
    pub fn adjoint_dot(self, other: Self) -> Complex<R> {
        self.up.conj() * other.up + self.down.conj() * other.down
    }

    /// |up|^2 + |down|^2, the probability density carried by this value.
    #[inline]
    pub fn norm_sqr(self) -> R {
        self.up.norm_sqr() + self.down.norm_sqr()
    }

    pub fn max_abs(self) -> R {
        self.up.norm().max(self.down.norm())
    }

    /// Spin density (S_x, S_y, S_z) of this value in closed form.
    #[inline]
    pub fn spin(self) -> [R; 3] {
        let cross = self.up.conj() * self.down;
        let two = real::<R>(2.0);
        [
            two * cross.re,
            two * cross.im,
            self.up.norm_sqr() - self.down.norm_sqr(),
        ]
    }
}

/// Dense 2x2 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2<R> {
    pub rows: [[Complex<R>; 2]; 2],
}

impl<R: Real> Mat2<R> {
    pub fn new(rows: [[Complex<R>; 2]; 2]) -> Self {
        Self { rows }
    }

    pub fn zero() -> Self {
        let z = Complex::new(R::zero(), R::zero());
        Self { rows: [[z, z], [z, z]] }
    }

    pub fn identity() -> Self {
        let z = Complex::new(R::zero(), R::zero());
        let o = Complex::new(R::one(), R::zero());
        Self { rows: [[o, z], [z, o]] }
    }

    pub fn add(self, other: Self) -> Self {
        let mut out = Self::zero();
        for r in 0..2 {
            for c in 0..2 {
                out.rows[r][c] = self.rows[r][c] + other.rows[r][c];
            }
        }
        out
    }

    pub fn sub(self, other: Self) -> Self {
        let mut out = Self::zero();
        for r in 0..2 {
            for c in 0..2 {
                out.rows[r][c] = self.rows[r][c] - other.rows[r][c];
            }
        }
        out
    }

    pub fn scale(self, factor: Complex<R>) -> Self {
        let mut out = Self::zero();
        for r in 0..2 {
            for c in 0..2 {
                out.rows[r][c] = self.rows[r][c] * factor;
            }
        }
        out
    }

    /// Matrix product self * other, in that order.
    pub fn mul(self, other: Self) -> Self {
        let mut out = Self::zero();
        for r in 0..2 {
            for c in 0..2 {
                out.rows[r][c] =
                    self.rows[r][0] * other.rows[0][c] + self.rows[r][1] * other.rows[1][c];
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(self) -> Self {
        Self {
            rows: [
                [self.rows[0][0].conj(), self.rows[1][0].conj()],
                [self.rows[0][1].conj(), self.rows[1][1].conj()],
            ],
        }
    }

    #[inline]
    pub fn apply(self, s: Spinor<R>) -> Spinor<R> {
        Spinor {
            up: self.rows[0][0] * s.up + self.rows[0][1] * s.down,
            down: self.rows[1][0] * s.up + self.rows[1][1] * s.down,
        }
    }

    pub fn max_abs(self) -> R {
        let mut m = R::zero();
        for r in 0..2 {
            for c in 0..2 {
                m = m.max(self.rows[r][c].norm());
            }
        }
        m
    }
}

/// The Pauli matrix along `axis`.
pub fn pauli<R: Real>(axis: Axis) -> Mat2<R> {
    let z = Complex::new(R::zero(), R::zero());
    let o = Complex::new(R::one(), R::zero());
    let i = Complex::new(R::zero(), R::one());
    match axis {
        Axis::X => Mat2::new([[z, o], [o, z]]),
        Axis::Y => Mat2::new([[z, -i], [i, z]]),
        Axis::Z => Mat2::new([[o, z], [z, -o]]),
    }
}

/// sigma . v = sum_i v_i sigma_i for a complex 3-vector v.
pub fn sigma_dot<R: Real>(v: [Complex<R>; 3]) -> Mat2<R> {
    let mut out = Mat2::zero();
    for (a, axis) in Axis::ALL.into_iter().enumerate() {
        out = out.add(pauli(axis).scale(v[a]));
    }
    out
}

/// Largest entrywise violation of the product rule
/// sigma_i sigma_j = delta_ij I + i eps_ijk sigma_k over all nine pairs.
///
/// Every entry involved is 0, +-1 or +-i, so the residual is exactly zero in
/// floating point; the return value exists so the check is a measurement, not
/// an assumption.
pub fn pauli_identity_residual<R: Real>() -> R {
    let i = Complex::new(R::zero(), R::one());
    let mut worst = R::zero();
    for (ai, axis_i) in Axis::ALL.into_iter().enumerate() {
        for (aj, axis_j) in Axis::ALL.into_iter().enumerate() {
            let lhs = pauli::<R>(axis_i).mul(pauli(axis_j));
            let mut rhs = if ai == aj { Mat2::identity() } else { Mat2::zero() };
            for (ak, axis_k) in Axis::ALL.into_iter().enumerate() {
                let eps = crate::grid::levi_civita(ai, aj, ak);
                if eps != 0 {
                    rhs = rhs.add(pauli(axis_k).scale(i * Complex::new(real(eps as f64), R::zero())));
                }
            }
            worst = worst.max(lhs.sub(rhs).max_abs());
        }
    }
    worst
}

/// A two-component spinor per site, in the lattice's fixed site order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorField<R> {
    lattice: Lattice<R>,
    values: Vec<Spinor<R>>,
}

impl<R: Real> SpinorField<R> {
    pub fn zeros(lattice: Lattice<R>) -> Self {
        Self {
            lattice,
            values: vec![Spinor::zero(); lattice.n_sites()],
        }
    }

    pub fn from_values(lattice: Lattice<R>, values: Vec<Spinor<R>>) -> Self {
        assert_eq!(values.len(), lattice.n_sites(), "value count != site count");
        Self { lattice, values }
    }

    /// Sample `f(position)` at every site.
    pub fn sample(lattice: Lattice<R>, f: impl Fn([R; 3]) -> Spinor<R>) -> Self {
        let values = (0..lattice.n_sites()).map(|i| f(lattice.position(i))).collect();
        Self { lattice, values }
    }

    #[inline]
    pub fn lattice(&self) -> &Lattice<R> {
        &self.lattice
    }

    #[inline]
    pub fn values(&self) -> &[Spinor<R>] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [Spinor<R>] {
        &mut self.values
    }

    pub fn map(&self, f: impl Fn(Spinor<R>) -> Spinor<R>) -> Self {
        Self {
            lattice: self.lattice,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.lattice != other.lattice {
            return Err(Error::LatticeMismatch);
        }
        Ok(Self {
            lattice: self.lattice,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| a.add(b))
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.lattice != other.lattice {
            return Err(Error::LatticeMismatch);
        }
        Ok(Self {
            lattice: self.lattice,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| a.sub(b))
                .collect(),
        })
    }

    pub fn scale(&self, factor: Complex<R>) -> Self {
        self.map(|v| v.scale(factor))
    }

    /// Apply one fixed 2x2 matrix at every site.
    pub fn apply_matrix(&self, m: Mat2<R>) -> Self {
        self.map(|v| m.apply(v))
    }

    /// Multiply pointwise by a scalar field (e.g. a potential).
    pub fn mul_scalar_field(&self, f: &ScalarField<R>) -> Result<Self> {
        if self.lattice != *f.lattice() {
            return Err(Error::LatticeMismatch);
        }
        Ok(Self {
            lattice: self.lattice,
            values: self
                .values
                .iter()
                .zip(f.values())
                .map(|(&s, &c)| s.scale(c))
                .collect(),
        })
    }

    /// In-place self += alpha * other, the solver's workhorse.
    pub fn axpy_in_place(&mut self, alpha: Complex<R>, other: &Self) {
        debug_assert_eq!(self.lattice, other.lattice);
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a = a.add(b.scale(alpha));
        }
    }

    pub fn scale_in_place(&mut self, factor: Complex<R>) {
        for v in &mut self.values {
            *v = v.scale(factor);
        }
    }

    /// Unweighted conjugated inner product sum_sites self† other, used by the
    /// linear solver (no cell-volume weight).
    pub fn dot(&self, other: &Self) -> Complex<R> {
        let mut acc = Complex::new(R::zero(), R::zero());
        for (a, b) in self.values.iter().zip(&other.values) {
            acc += a.adjoint_dot(*b);
        }
        acc
    }

    pub fn norm(&self) -> R {
        let mut acc = R::zero();
        for v in &self.values {
            acc += v.norm_sqr();
        }
        acc.sqrt()
    }

    pub fn max_abs(&self) -> R {
        self.values.iter().map(|v| v.max_abs()).fold(R::zero(), R::max)
    }

    /// rho = psi† psi as a real-valued scalar field.
    pub fn probability_density(&self) -> ScalarField<R> {
        ScalarField::from_values(
            self.lattice,
            self.values
                .iter()
                .map(|v| Complex::new(v.norm_sqr(), R::zero()))
                .collect(),
        )
    }

    /// S_k = psi† sigma_k psi as a real vector field, via the closed forms.
    pub fn spin_density(&self) -> VectorField3<R> {
        let mut comps = [
            ScalarField::zeros(self.lattice),
            ScalarField::zeros(self.lattice),
            ScalarField::zeros(self.lattice),
        ];
        for (i, v) in self.values.iter().enumerate() {
            let s = v.spin();
            for a in 0..3 {
                comps[a].values_mut()[i] = Complex::new(s[a], R::zero());
            }
        }
        VectorField3::from_components(comps)
    }

    /// Integral of rho over the box.
    pub fn total_probability(&self) -> R {
        let dv = self.lattice.cell_volume();
        let mut acc = R::zero();
        for v in &self.values {
            acc += v.norm_sqr();
        }
        acc * dv
    }

    /// Rescaled so the total probability is one.
    pub fn normalized(&self) -> Result<Self> {
        let total = self.total_probability();
        if !(total > R::zero()) || !total.is_finite() {
            return Err(Error::ZeroNorm);
        }
        let factor = Complex::new(total.sqrt().recip(), R::zero());
        Ok(self.scale(factor))
    }

    /// max rho on boundary sites / max rho anywhere; the guard quantity for
    /// potentials that are not box-periodic.
    pub fn boundary_density_ratio(&self) -> R {
        let mut boundary = R::zero();
        let mut overall = R::zero();
        for (i, v) in self.values.iter().enumerate() {
            let rho = v.norm_sqr();
            overall = overall.max(rho);
            if self.lattice.is_boundary_site(i) {
                boundary = boundary.max(rho);
            }
        }
        if overall > R::zero() {
            boundary / overall
        } else {
            R::zero()
        }
    }

    /// Central difference along `axis`, applied to both components. Identical
    /// stencil and ordering as the scalar-field version.
    pub fn partial(&self, axis: Axis) -> Self {
        let lat = &self.lattice;
        let [nx, ny, _nz] = lat.dims();
        let inv2h = Complex::new(
            (real::<R>(2.0) * lat.spacing()[axis.index()]).recip(),
            R::zero(),
        );
        let (plus, minus) = lat.wrap_tables(axis);
        let mut out = vec![Spinor::zero(); lat.n_sites()];
        let v = &self.values;
        for iz in 0..lat.dims()[2] {
            for iy in 0..ny {
                let row = nx * (iy + ny * iz);
                match axis {
                    Axis::X => {
                        for ix in 0..nx {
                            out[row + ix] = v[row + plus[ix]].sub(v[row + minus[ix]]).scale(inv2h);
                        }
                    }
                    Axis::Y => {
                        let rp = nx * (plus[iy] + ny * iz);
                        let rm = nx * (minus[iy] + ny * iz);
                        for ix in 0..nx {
                            out[row + ix] = v[rp + ix].sub(v[rm + ix]).scale(inv2h);
                        }
                    }
                    Axis::Z => {
                        let rp = nx * (iy + ny * plus[iz]);
                        let rm = nx * (iy + ny * minus[iz]);
                        for ix in 0..nx {
                            out[row + ix] = v[rp + ix].sub(v[rm + ix]).scale(inv2h);
                        }
                    }
                }
            }
        }
        Self {
            lattice: self.lattice,
            values: out,
        }
    }

    /// One spinor component as a scalar field (0 = up, 1 = down).
    pub fn component(&self, which: usize) -> ScalarField<R> {
        assert!(which < 2, "spinor has two components");
        ScalarField::from_values(
            self.lattice,
            self.values
                .iter()
                .map(|v| if which == 0 { v.up } else { v.down })
                .collect(),
        )
    }
}
