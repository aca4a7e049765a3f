//! Periodic 3-D lattice and exact discrete vector calculus.
//!
//! All differential operators are 2nd-order central differences with periodic
//! wraparound. On such a grid the stencils commute exactly, which makes
//! `div . curl = 0`, `curl . grad = 0` and the telescoping `sum(partial f) = 0`
//! hold to rounding rather than to truncation order.

use crate::error::{Error, Result};
use crate::scalar::{real, Real};
use num_complex::Complex;

/// Coordinate axis. Invalid indices are rejected at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    #[inline]
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

impl TryFrom<usize> for Axis {
    type Error = Error;

    fn try_from(value: usize) -> Result<Self> {
        match value {
            0 => Ok(Axis::X),
            1 => Ok(Axis::Y),
            2 => Ok(Axis::Z),
            other => Err(Error::InvalidAxis(other)),
        }
    }
}

/// Totally antisymmetric symbol eps_{ijk}.
#[inline]
pub fn levi_civita(i: usize, j: usize, k: usize) -> i32 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1,
        _ => 0,
    }
}

/// Periodic lattice geometry: dims, spacing, and the fixed site ordering
/// (x fastest) used by every field in the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice<R> {
    dims: [usize; 3],
    spacing: [R; 3],
}

impl<R: Real> Lattice<R> {
    pub fn new(dims: [usize; 3], spacing: [R; 3]) -> Result<Self> {
        if dims.iter().any(|&n| n < 3) {
            return Err(Error::LatticeTooSmall(dims[0], dims[1], dims[2]));
        }
        if spacing.iter().any(|&h| !(h > R::zero()) || !h.is_finite()) {
            return Err(Error::NonPositiveSpacing);
        }
        Ok(Self { dims, spacing })
    }

    /// Cubic lattice, n sites and spacing h per axis.
    pub fn cubic(n: usize, h: R) -> Result<Self> {
        Self::new([n, n, n], [h, h, h])
    }

    #[inline]
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    #[inline]
    pub fn spacing(&self) -> [R; 3] {
        self.spacing
    }

    /// Box lengths L_i = n_i * h_i.
    pub fn lengths(&self) -> [R; 3] {
        let mut out = [R::zero(); 3];
        for a in 0..3 {
            out[a] = real::<R>(self.dims[a] as f64) * self.spacing[a];
        }
        out
    }

    /// Geometric center of the box, the reference point for centered
    /// potentials and wavepackets.
    pub fn center(&self) -> [R; 3] {
        let l = self.lengths();
        [
            l[0] / real(2.0),
            l[1] / real(2.0),
            l[2] / real(2.0),
        ]
    }

    #[inline]
    pub fn n_sites(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    /// dV = h_x h_y h_z.
    pub fn cell_volume(&self) -> R {
        self.spacing[0] * self.spacing[1] * self.spacing[2]
    }

    pub fn volume(&self) -> R {
        let l = self.lengths();
        l[0] * l[1] * l[2]
    }

    /// Linear site index, x fastest.
    #[inline]
    pub fn site_index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        ix + self.dims[0] * (iy + self.dims[1] * iz)
    }

    /// Inverse of `site_index`.
    #[inline]
    pub fn site_coords(&self, idx: usize) -> [usize; 3] {
        let ix = idx % self.dims[0];
        let rest = idx / self.dims[0];
        [ix, rest % self.dims[1], rest / self.dims[1]]
    }

    /// Physical position of a site, in [0, L) per axis.
    pub fn position(&self, idx: usize) -> [R; 3] {
        let c = self.site_coords(idx);
        [
            real::<R>(c[0] as f64) * self.spacing[0],
            real::<R>(c[1] as f64) * self.spacing[1],
            real::<R>(c[2] as f64) * self.spacing[2],
        ]
    }

    /// Same box, `factor` times more sites per axis.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        let f = real::<R>(factor.max(1) as f64);
        Self::new(
            [
                self.dims[0] * factor.max(1),
                self.dims[1] * factor.max(1),
                self.dims[2] * factor.max(1),
            ],
            [
                self.spacing[0] / f,
                self.spacing[1] / f,
                self.spacing[2] / f,
            ],
        )
    }

    /// True if the site touches the box boundary on any axis.
    pub fn is_boundary_site(&self, idx: usize) -> bool {
        let c = self.site_coords(idx);
        (0..3).any(|a| c[a] == 0 || c[a] + 1 == self.dims[a])
    }

    /// Periodic neighbor tables (plus, minus) along `axis`, indexed by the
    /// axis coordinate. Keeps the stencil loops branch-free.
    pub(crate) fn wrap_tables(&self, axis: Axis) -> (Vec<usize>, Vec<usize>) {
        let n = self.dims[axis.index()];
        let plus = (0..n).map(|i| (i + 1) % n).collect();
        let minus = (0..n).map(|i| (i + n - 1) % n).collect();
        (plus, minus)
    }
}

/// One complex value per site. Real-valued fields are complex fields with
/// zero imaginary part; see [`ScalarField::is_real`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField<R> {
    lattice: Lattice<R>,
    values: Vec<Complex<R>>,
}

impl<R: Real> ScalarField<R> {
    pub fn zeros(lattice: Lattice<R>) -> Self {
        Self {
            lattice,
            values: vec![Complex::new(R::zero(), R::zero()); lattice.n_sites()],
        }
    }

    pub fn constant(lattice: Lattice<R>, value: Complex<R>) -> Self {
        Self {
            lattice,
            values: vec![value; lattice.n_sites()],
        }
    }

    pub fn from_values(lattice: Lattice<R>, values: Vec<Complex<R>>) -> Self {
        assert_eq!(values.len(), lattice.n_sites(), "value count != site count");
        Self { lattice, values }
    }

    /// Sample `f(position)` at every site, in the fixed site order.
    pub fn sample(lattice: Lattice<R>, f: impl Fn([R; 3]) -> Complex<R>) -> Self {
        let values = (0..lattice.n_sites()).map(|i| f(lattice.position(i))).collect();
        Self { lattice, values }
    }

    #[inline]
    pub fn lattice(&self) -> &Lattice<R> {
        &self.lattice
    }

    #[inline]
    pub fn values(&self) -> &[Complex<R>] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [Complex<R>] {
        &mut self.values
    }

    pub fn map(&self, f: impl Fn(Complex<R>) -> Complex<R>) -> Self {
        Self {
            lattice: self.lattice,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(Complex<R>, Complex<R>) -> Complex<R>) -> Result<Self> {
        if self.lattice != other.lattice {
            return Err(Error::LatticeMismatch);
        }
        Ok(Self {
            lattice: self.lattice,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, factor: Complex<R>) -> Self {
        self.map(|v| v * factor)
    }

    pub fn max_abs(&self) -> R {
        self.values
            .iter()
            .map(|v| v.norm())
            .fold(R::zero(), R::max)
    }

    pub fn max_abs_im(&self) -> R {
        self.values
            .iter()
            .map(|v| v.im.abs())
            .fold(R::zero(), R::max)
    }

    pub fn is_real(&self, tolerance: R) -> bool {
        self.max_abs_im() <= tolerance * self.max_abs().max(R::min_positive_value())
    }

    /// Drops the imaginary part after checking it is below
    /// `tolerance * max_abs` — never silently.
    pub fn into_real_checked(self, tolerance: R) -> Result<Self> {
        let scale = self.max_abs();
        let max_im = self.max_abs_im();
        if max_im > tolerance * scale.max(R::min_positive_value()) {
            return Err(Error::NotReal {
                max_im: max_im.to_f64().unwrap_or(f64::NAN),
                scale: scale.to_f64().unwrap_or(f64::NAN),
                tolerance: tolerance.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(self.map(|v| Complex::new(v.re, R::zero())))
    }

    /// Central difference along `axis` with periodic wraparound:
    /// (f(x + h e) - f(x - h e)) / (2 h).
    pub fn partial(&self, axis: Axis) -> Self {
        let lat = &self.lattice;
        let [nx, ny, _nz] = lat.dims();
        let inv2h = (real::<R>(2.0) * lat.spacing()[axis.index()]).recip();
        let inv2h = Complex::new(inv2h, R::zero());
        let (plus, minus) = lat.wrap_tables(axis);
        let mut out = vec![Complex::new(R::zero(), R::zero()); lat.n_sites()];
        let v = &self.values;
        for iz in 0..lat.dims()[2] {
            for iy in 0..ny {
                let row = nx * (iy + ny * iz);
                match axis {
                    Axis::X => {
                        for ix in 0..nx {
                            out[row + ix] = (v[row + plus[ix]] - v[row + minus[ix]]) * inv2h;
                        }
                    }
                    Axis::Y => {
                        let rp = nx * (plus[iy] + ny * iz);
                        let rm = nx * (minus[iy] + ny * iz);
                        for ix in 0..nx {
                            out[row + ix] = (v[rp + ix] - v[rm + ix]) * inv2h;
                        }
                    }
                    Axis::Z => {
                        let rp = nx * (iy + ny * plus[iz]);
                        let rm = nx * (iy + ny * minus[iz]);
                        for ix in 0..nx {
                            out[row + ix] = (v[rp + ix] - v[rm + ix]) * inv2h;
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

    /// Discrete integral: sum of f * dV in the fixed site order.
    pub fn grid_sum(&self) -> Complex<R> {
        let dv = self.lattice.cell_volume();
        let mut acc = Complex::new(R::zero(), R::zero());
        for &v in &self.values {
            acc += v;
        }
        acc * Complex::new(dv, R::zero())
    }

    /// L1-style magnitude integral, the natural scale for grid_sum checks.
    pub fn grid_sum_abs(&self) -> R {
        let dv = self.lattice.cell_volume();
        let mut acc = R::zero();
        for v in &self.values {
            acc += v.norm();
        }
        acc * dv
    }
}

/// Gradient of a scalar field: component i is partial(f, i).
pub fn gradient<R: Real>(f: &ScalarField<R>) -> VectorField3<R> {
    VectorField3::from_components([f.partial(Axis::X), f.partial(Axis::Y), f.partial(Axis::Z)])
}

/// Divergence of a vector field: sum_i partial(F_i, i).
pub fn divergence<R: Real>(field: &VectorField3<R>) -> ScalarField<R> {
    let dx = field.component(Axis::X).partial(Axis::X);
    let dy = field.component(Axis::Y).partial(Axis::Y);
    let dz = field.component(Axis::Z).partial(Axis::Z);
    dx.add(&dy).and_then(|s| s.add(&dz)).expect("components share a lattice")
}

/// Curl of a vector field: component i is eps_{ijk} partial(F_k, j).
pub fn curl<R: Real>(field: &VectorField3<R>) -> VectorField3<R> {
    let [fx, fy, fz] = field.components();
    let x = fz.partial(Axis::Y).sub(&fy.partial(Axis::Z)).expect("shared lattice");
    let y = fx.partial(Axis::Z).sub(&fz.partial(Axis::X)).expect("shared lattice");
    let z = fy.partial(Axis::X).sub(&fx.partial(Axis::Y)).expect("shared lattice");
    VectorField3::from_components([x, y, z])
}

/// Three complex components per site, stored as three scalar fields on the
/// same lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField3<R> {
    components: [ScalarField<R>; 3],
}

impl<R: Real> VectorField3<R> {
    pub fn zeros(lattice: Lattice<R>) -> Self {
        Self {
            components: [
                ScalarField::zeros(lattice),
                ScalarField::zeros(lattice),
                ScalarField::zeros(lattice),
            ],
        }
    }

    pub fn from_components(components: [ScalarField<R>; 3]) -> Self {
        assert!(
            components[0].lattice() == components[1].lattice()
                && components[1].lattice() == components[2].lattice(),
            "vector field components must share a lattice"
        );
        Self { components }
    }

    /// Sample `f(position) -> [F_x, F_y, F_z]` at every site.
    pub fn sample(lattice: Lattice<R>, f: impl Fn([R; 3]) -> [Complex<R>; 3]) -> Self {
        let mut comps = [
            ScalarField::zeros(lattice),
            ScalarField::zeros(lattice),
            ScalarField::zeros(lattice),
        ];
        for i in 0..lattice.n_sites() {
            let v = f(lattice.position(i));
            for a in 0..3 {
                comps[a].values_mut()[i] = v[a];
            }
        }
        Self { components: comps }
    }

    #[inline]
    pub fn lattice(&self) -> &Lattice<R> {
        self.components[0].lattice()
    }

    #[inline]
    pub fn component(&self, axis: Axis) -> &ScalarField<R> {
        &self.components[axis.index()]
    }

    #[inline]
    pub fn components(&self) -> &[ScalarField<R>; 3] {
        &self.components
    }

    /// Per-site vector value.
    #[inline]
    pub fn at(&self, idx: usize) -> [Complex<R>; 3] {
        [
            self.components[0].values()[idx],
            self.components[1].values()[idx],
            self.components[2].values()[idx],
        ]
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Ok(Self {
            components: [
                self.components[0].add(&other.components[0])?,
                self.components[1].add(&other.components[1])?,
                self.components[2].add(&other.components[2])?,
            ],
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Ok(Self {
            components: [
                self.components[0].sub(&other.components[0])?,
                self.components[1].sub(&other.components[1])?,
                self.components[2].sub(&other.components[2])?,
            ],
        })
    }

    pub fn scale(&self, factor: Complex<R>) -> Self {
        Self {
            components: [
                self.components[0].scale(factor),
                self.components[1].scale(factor),
                self.components[2].scale(factor),
            ],
        }
    }

    pub fn max_abs(&self) -> R {
        self.components
            .iter()
            .map(|c| c.max_abs())
            .fold(R::zero(), R::max)
    }

    pub fn max_abs_im(&self) -> R {
        self.components
            .iter()
            .map(|c| c.max_abs_im())
            .fold(R::zero(), R::max)
    }

    pub fn into_real_checked(self, tolerance: R) -> Result<Self> {
        let scale = self.max_abs();
        let max_im = self.max_abs_im();
        if max_im > tolerance * scale.max(R::min_positive_value()) {
            return Err(Error::NotReal {
                max_im: max_im.to_f64().unwrap_or(f64::NAN),
                scale: scale.to_f64().unwrap_or(f64::NAN),
                tolerance: tolerance.to_f64().unwrap_or(f64::NAN),
            });
        }
        let [x, y, z] = self.components;
        Ok(Self {
            components: [
                x.map(|v| Complex::new(v.re, R::zero())),
                y.map(|v| Complex::new(v.re, R::zero())),
                z.map(|v| Complex::new(v.re, R::zero())),
            ],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cplx;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lat8() -> Lattice<f64> {
        Lattice::cubic(8, 0.5).unwrap()
    }

    fn random_scalar(lat: Lattice<f64>, rng: &mut ChaCha8Rng) -> ScalarField<f64> {
        let values = (0..lat.n_sites())
            .map(|_| cplx(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        ScalarField::from_values(lat, values)
    }

    fn random_vector(lat: Lattice<f64>, rng: &mut ChaCha8Rng) -> VectorField3<f64> {
        VectorField3::from_components([
            random_scalar(lat, rng),
            random_scalar(lat, rng),
            random_scalar(lat, rng),
        ])
    }

    #[test]
    fn lattice_validation() {
        assert!(matches!(
            Lattice::<f64>::new([2, 4, 4], [0.5; 3]),
            Err(Error::LatticeTooSmall(2, 4, 4))
        ));
        assert!(matches!(
            Lattice::<f64>::new([4, 4, 4], [0.5, -1.0, 0.5]),
            Err(Error::NonPositiveSpacing)
        ));
        assert!(Lattice::<f64>::new([3, 3, 3], [0.1; 3]).is_ok());
    }

    #[test]
    fn axis_from_index() {
        assert_eq!(Axis::try_from(1).unwrap(), Axis::Y);
        assert!(matches!(Axis::try_from(3), Err(Error::InvalidAxis(3))));
    }

    #[test]
    fn site_ordering_x_fastest() {
        let lat = Lattice::<f64>::new([4, 3, 5], [0.5, 1.0, 0.25]).unwrap();
        assert_eq!(lat.site_index(1, 0, 0), 1);
        assert_eq!(lat.site_index(0, 1, 0), 4);
        assert_eq!(lat.site_index(0, 0, 1), 12);
        for idx in 0..lat.n_sites() {
            let [ix, iy, iz] = lat.site_coords(idx);
            assert_eq!(lat.site_index(ix, iy, iz), idx);
        }
    }

    #[test]
    fn partial_of_constant_is_zero() {
        let f = ScalarField::constant(lat8(), cplx(3.25, -1.5));
        for axis in Axis::ALL {
            assert_eq!(f.partial(axis).max_abs(), 0.0);
        }
    }

    // Sampled sinusoid: the discrete derivative of sin(2 pi x / L) is
    // (sin(2 pi h / L)/h) cos(2 pi x / L) exactly, with
    // sin(2 pi h / L)/h = sqrt(2) for h = 0.5, L = 4.
    #[test]
    fn partial_of_sampled_sinusoid() {
        let lat = lat8();
        let l = lat.lengths()[0];
        let k = 2.0 * std::f64::consts::PI / l;
        let f = ScalarField::sample(lat, |x| cplx((k * x[0]).sin(), 0.0));
        let df = f.partial(Axis::X);
        let factor = (k * lat.spacing()[0]).sin() / lat.spacing()[0];
        assert_relative_eq!(factor, 1.4142135623730950488, max_relative = 1e-15);
        for idx in 0..lat.n_sites() {
            let x = lat.position(idx)[0];
            let expected = factor * (k * x).cos();
            assert_relative_eq!(df.values()[idx].re, expected, epsilon = 1e-13);
            assert_eq!(df.values()[idx].im, 0.0);
        }
    }

    #[test]
    fn partial_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let lat = lat8();
        let f = random_scalar(lat, &mut rng);
        let g = random_scalar(lat, &mut rng);
        let a = cplx(0.7, -0.3);
        let b = cplx(-1.1, 0.2);
        let combo = f.scale(a).add(&g.scale(b)).unwrap();
        let lhs = combo.partial(Axis::Y);
        let rhs = f.partial(Axis::Y).scale(a).add(&g.partial(Axis::Y).scale(b)).unwrap();
        assert!(lhs.sub(&rhs).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn plane_wave_discrete_eigenvalue_every_mode() {
        let lat = lat8();
        let l = lat.lengths()[0];
        let h = lat.spacing()[0];
        for mode in 0..8i32 {
            let k = 2.0 * std::f64::consts::PI * f64::from(mode) / l;
            let f = ScalarField::sample(lat, |x| cplx(0.0, k * x[0]).exp());
            let df = f.partial(Axis::X);
            // partial multiplies e^{ikx} by i sin(k h)/h
            let eig = cplx(0.0, (k * h).sin() / h);
            let expected = f.scale(eig);
            assert!(
                df.sub(&expected).unwrap().max_abs() < 1e-12,
                "mode {mode}"
            );
        }
    }

    #[test]
    fn divergence_of_x_sinusoid() {
        let lat = lat8();
        let l = lat.lengths()[0];
        let k = 2.0 * std::f64::consts::PI / l;
        let field = VectorField3::sample(lat, |x| {
            [cplx((k * x[0]).sin(), 0.0), cplx(0.0, 0.0), cplx(0.0, 0.0)]
        });
        let div = divergence(&field);
        let factor = (k * lat.spacing()[0]).sin() / lat.spacing()[0];
        for idx in 0..lat.n_sites() {
            let x = lat.position(idx)[0];
            assert_relative_eq!(div.values()[idx].re, factor * (k * x).cos(), epsilon = 1e-13);
        }
    }

    #[test]
    fn divergence_of_constant_vector_is_zero() {
        let field = VectorField3::sample(lat8(), |_| [cplx(1.0, 2.0), cplx(-0.5, 0.0), cplx(0.25, 1.0)]);
        assert_eq!(divergence(&field).max_abs(), 0.0);
    }

    #[test]
    fn curl_of_symmetric_gauge_is_uniform() {
        // F = (-y/2, x/2, 0) is linear, so central differences are exact:
        // curl F = (0, 0, 1) everywhere.
        let lat = lat8();
        let c = lat.center();
        let field = VectorField3::sample(lat, |x| {
            [
                cplx(-(x[1] - c[1]) / 2.0, 0.0),
                cplx((x[0] - c[0]) / 2.0, 0.0),
                cplx(0.0, 0.0),
            ]
        });
        let b = curl(&field);
        // Non-periodicity of F only corrupts the wrap rows; interior is exact.
        for idx in 0..lat.n_sites() {
            if lat.is_boundary_site(idx) {
                continue;
            }
            let v = b.at(idx);
            assert_relative_eq!(v[0].re, 0.0, epsilon = 1e-14);
            assert_relative_eq!(v[1].re, 0.0, epsilon = 1e-14);
            assert_relative_eq!(v[2].re, 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn curl_of_z_component_gaussian() {
        // F = (0, 0, rho) -> curl F = (partial_y rho, -partial_x rho, 0),
        // checked against the stencil applied to rho directly.
        let lat = Lattice::cubic(12, 0.4).unwrap();
        let c = lat.center();
        let rho = ScalarField::sample(lat, |x: [f64; 3]| {
            let r2: f64 = (0..3).map(|a| (x[a] - c[a]).powi(2)).sum();
            cplx((-r2 / 1.5).exp(), 0.0)
        });
        let field = VectorField3::from_components([
            ScalarField::zeros(lat),
            ScalarField::zeros(lat),
            rho.clone(),
        ]);
        let w = curl(&field);
        assert!(w.component(Axis::X).sub(&rho.partial(Axis::Y)).unwrap().max_abs() < 1e-15);
        assert!(w
            .component(Axis::Y)
            .sub(&rho.partial(Axis::X).scale(cplx(-1.0, 0.0)))
            .unwrap()
            .max_abs()
            < 1e-15);
        assert_eq!(w.component(Axis::Z).max_abs(), 0.0);
    }

    #[test]
    fn exact_operator_identities_on_random_fields() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let lat = lat8();
        let f = random_scalar(lat, &mut rng);
        let g = random_vector(lat, &mut rng);
        let h = lat.spacing()[0];

        // div(curl G) = 0 and curl(grad f) = 0 to rounding: the periodic
        // central-difference operators commute exactly.
        let noise = 1e-13 / h;
        assert!(divergence(&curl(&g)).max_abs() < noise * g.max_abs());
        assert!(curl(&gradient(&f)).max_abs() < noise * f.max_abs());

        // Telescoping: grid_sum(partial f) = 0.
        for axis in Axis::ALL {
            let s = f.partial(axis).grid_sum().norm();
            assert!(s < 1e-13 * f.grid_sum_abs() / h);
        }
    }

    #[test]
    fn grid_sum_of_normalized_gaussian() {
        let lat = Lattice::cubic(16, 0.4).unwrap();
        let c = lat.center();
        let rho = ScalarField::sample(lat, |x: [f64; 3]| {
            let r2: f64 = (0..3).map(|a| (x[a] - c[a]).powi(2)).sum();
            cplx((-r2 / 0.8).exp(), 0.0)
        });
        let norm = rho.grid_sum().re;
        let normalized = rho.scale(cplx(1.0 / norm, 0.0));
        assert_relative_eq!(normalized.grid_sum().re, 1.0, epsilon = 1e-14);
        assert_eq!(ScalarField::zeros(lat).grid_sum(), cplx(0.0, 0.0));
    }

    #[test]
    fn partial_converges_at_second_order() {
        // Smooth periodic test function, three refinements; the fitted
        // slope of log(err) vs log(h) must be >= 1.9.
        let mut errs = Vec::new();
        let mut hs = Vec::new();
        for level in 0..3 {
            let n = 16 << level;
            let lat = Lattice::cubic(n, 8.0 / n as f64).unwrap();
            let l = lat.lengths()[0];
            let k = 2.0 * std::f64::consts::PI / l;
            let f = ScalarField::sample(lat, |x| cplx((k * x[0]).sin() * (2.0 * k * x[1]).cos(), 0.0));
            let df = f.partial(Axis::X);
            let mut err: f64 = 0.0;
            for idx in 0..lat.n_sites() {
                let x = lat.position(idx);
                let exact = k * (k * x[0]).cos() * (2.0 * k * x[1]).cos();
                err = err.max((df.values()[idx].re - exact).abs());
            }
            errs.push(err);
            hs.push(lat.spacing()[0]);
        }
        let slope = fit_slope(&hs, &errs);
        println!("partial convergence slope = {slope:.3}, errors = {errs:?}");
        assert!(slope >= 1.9, "slope {slope}");
    }

    fn fit_slope(hs: &[f64], errs: &[f64]) -> f64 {
        let n = hs.len() as f64;
        let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
        let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
        let sx: f64 = xs.iter().sum();
        let sy: f64 = ys.iter().sum();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
        (n * sxy - sx * sy) / (n * sxx - sx * sx)
    }

    #[test]
    fn works_at_f32() {
        let lat = Lattice::<f32>::cubic(8, 0.5).unwrap();
        let f = ScalarField::sample(lat, |x| Complex::new((x[0] * 1.2).sin(), 0.0));
        let g = VectorField3::from_components([f.clone(), f.clone(), f.clone()]);
        assert!(divergence(&curl(&g)).max_abs() < 1e-5);
    }
}
