//! Turn a validated config into lattice, gauge, state field, and the
//! matching closed-form state for the analytic path.

use std::f64::consts::PI;
use std::sync::Arc;

use pauli_current::{
    AnalyticState, Gauge, GaussianPacket, Lattice64, PlaneWave, Spinor, SpinorField, TexturedGaussian,
    UniformBz, UnitsConfig, ZeroPotential,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{GaugeKind, ScenarioConfig, ScenarioKind};
use crate::CliError;

pub enum AnalyticScenario {
    PlaneWave(PlaneWave<f64>),
    Gaussian(GaussianPacket<f64>),
    Textured(TexturedGaussian<f64>),
}

impl AnalyticScenario {
    pub fn as_state(&self) -> &dyn AnalyticState<f64> {
        match self {
            Self::PlaneWave(s) => s,
            Self::Gaussian(s) => s,
            Self::Textured(s) => s,
        }
    }
}

pub struct Scenario {
    pub lattice: Lattice64,
    pub units: UnitsConfig<f64>,
    pub gauge: Gauge<f64>,
    /// Normalized state field sampled from `analytic`.
    pub psi: SpinorField<f64>,
    pub analytic: AnalyticScenario,
    /// Companion state for two-field identities (Leibniz).
    pub companion: AnalyticScenario,
    /// Characteristic variation length; grid tolerances scale with
    /// (h / length_scale)^2.
    pub length_scale: f64,
}

fn core_err(e: pauli_current::Error) -> CliError {
    CliError::Invalid(e.to_string())
}

fn wavevector(config: &ScenarioConfig, lattice: &Lattice64) -> [f64; 3] {
    let lengths = lattice.lengths();
    let mut k = [0.0; 3];
    for a in 0..3 {
        k[a] = 2.0 * PI * config.state.wavevector[a] as f64 / lengths[a];
    }
    k
}

pub fn build(config: &ScenarioConfig) -> Result<Scenario, CliError> {
    let lattice =
        Lattice64::new(config.lattice.dims, config.lattice.spacing).map_err(core_err)?;
    let units = UnitsConfig::new(
        config.units.hbar,
        config.units.mass,
        config.units.charge,
        config.units.light_speed,
    )
    .map_err(core_err)?;
    let gauge = match config.gauge.kind {
        GaugeKind::Zero => Gauge::new(lattice, units, Arc::new(ZeroPotential)),
        GaugeKind::UniformBz => Gauge::new(
            lattice,
            units,
            Arc::new(UniformBz::centered(config.gauge.field_strength, &lattice)),
        ),
    };

    let center = lattice.center();
    let k = wavevector(config, &lattice);
    let width = config.state.width;
    let pitch = config.state.pitch;

    let (analytic, companion, length_scale) = match config.scenario {
        ScenarioKind::PlaneWave => {
            let modes = [
                config.state.wavevector[0] as i32,
                config.state.wavevector[1] as i32,
                config.state.wavevector[2] as i32,
            ];
            let state = PlaneWave::commensurate(&lattice, modes, Spinor::basis_up());
            let companion = PlaneWave::commensurate(
                &lattice,
                [modes[0] + 1, modes[1], modes[2] - 1],
                Spinor::basis_up(),
            );
            let k_max = k.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
            let scale = if k_max > 0.0 {
                k_max.recip()
            } else {
                lattice.lengths()[0]
            };
            (
                AnalyticScenario::PlaneWave(state),
                AnalyticScenario::PlaneWave(companion),
                scale,
            )
        }
        ScenarioKind::GaussianSpinUp | ScenarioKind::UniformBZeeman => {
            let state = GaussianPacket::new(center, width, k, Spinor::basis_up());
            let mut shifted = center;
            for c in &mut shifted {
                *c += width / 3.0;
            }
            // equal widths: wider companions leak around the periodic seam,
            // sharper ones stall the coarse ladder levels; a stationary
            // offset packet keeps the overlap phase gentle
            let companion = GaussianPacket::new(shifted, width, [0.0; 3], Spinor::basis_up());
            (
                AnalyticScenario::Gaussian(state),
                AnalyticScenario::Gaussian(companion),
                width,
            )
        }
        ScenarioKind::GaussianSpinTexture | ScenarioKind::NeutralParticle => {
            let state = TexturedGaussian::new(center, width, pitch, Spinor::basis_up());
            // same width (see above); the pitch offset keeps the spin-overlap
            // winding slow
            let companion = TexturedGaussian::new(center, width, pitch * 0.7, Spinor::basis_up());
            (
                AnalyticScenario::Textured(state),
                AnalyticScenario::Textured(companion),
                width.min(pitch.recip()),
            )
        }
    };

    let psi = analytic
        .as_state()
        .sample(lattice)
        .normalized()
        .map_err(core_err)?;

    Ok(Scenario {
        lattice,
        units,
        gauge,
        psi,
        analytic,
        companion,
        length_scale,
    })
}

/// Probe points for the analytic checks: uniform over the box for
/// delocalized states, within ~1.5 widths of the center for packets.
pub fn probe_points(s: &Scenario, seed: u64, n: usize) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lengths = s.lattice.lengths();
    let center = s.lattice.center();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let mut x = [0.0; 3];
        for a in 0..3 {
            match &s.analytic {
                AnalyticScenario::PlaneWave(_) => {
                    x[a] = rng.gen_range(0.0..lengths[a]);
                }
                AnalyticScenario::Gaussian(g) => {
                    let r = 1.5 * g.width;
                    x[a] = center[a] + rng.gen_range(-r..r);
                }
                AnalyticScenario::Textured(t) => {
                    let r = 1.5 * t.width;
                    x[a] = center[a] + rng.gen_range(-r..r);
                }
            }
        }
        out.push(x);
    }
    out
}

/// True when the configured state has LM = 0 identically: uniform spin kills
/// the antisymmetrized spin-gradient terms unless a travelling phase mixes
/// with the envelope gradient.
pub fn lm_vanishes(config: &ScenarioConfig) -> bool {
    match config.scenario {
        ScenarioKind::PlaneWave => true,
        ScenarioKind::GaussianSpinUp | ScenarioKind::UniformBZeeman => {
            config.state.wavevector == [0, 0, 0]
        }
        ScenarioKind::GaussianSpinTexture | ScenarioKind::NeutralParticle => false,
    }
}

/// Relative tolerance for O(h^2) grid checks: second-order stencils on a
/// feature of size `length_scale` leave residuals ~ (h/l)^2 with an O(1)
/// prefactor; 5 gives headroom without masking a broken stencil.
pub fn grid_tolerance(s: &Scenario) -> f64 {
    let h_max = s
        .lattice
        .spacing()
        .iter()
        .cloned()
        .fold(0.0f64, f64::max);
    5.0 * (h_max / s.length_scale).powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScenarioKind;

    #[test]
    fn lm_vanishes_follows_the_state_taxonomy() {
        let config = |kind, k: [i64; 3]| {
            let mut c = ScenarioConfig::example(kind);
            c.state.wavevector = k;
            c
        };
        assert!(lm_vanishes(&config(ScenarioKind::PlaneWave, [1, 0, 0])));
        assert!(lm_vanishes(&config(ScenarioKind::GaussianSpinUp, [0, 0, 0])));
        assert!(!lm_vanishes(&config(ScenarioKind::GaussianSpinUp, [1, 0, 0])));
        assert!(lm_vanishes(&config(ScenarioKind::UniformBZeeman, [0, 0, 0])));
        assert!(!lm_vanishes(&config(ScenarioKind::GaussianSpinTexture, [0, 0, 0])));
        assert!(!lm_vanishes(&config(ScenarioKind::NeutralParticle, [0, 0, 0])));
    }

    #[test]
    fn grid_tolerance_scales_with_spacing_and_length() {
        let s = build(&ScenarioConfig::example(ScenarioKind::GaussianSpinUp)).unwrap();
        // h = 0.25, width 1.0 -> 5 (h/w)^2
        assert!((grid_tolerance(&s) - 0.3125).abs() < 1e-15);
    }

    #[test]
    fn probe_points_are_seeded_and_stay_near_the_packet() {
        let s = build(&ScenarioConfig::example(ScenarioKind::GaussianSpinUp)).unwrap();
        let a = probe_points(&s, 11, 50);
        let b = probe_points(&s, 11, 50);
        assert_eq!(a, b);
        let c = probe_points(&s, 12, 50);
        assert_ne!(a, c);
        let center = s.lattice.center();
        for x in &a {
            for axis in 0..3 {
                assert!((x[axis] - center[axis]).abs() <= 1.5);
            }
        }
    }

    #[test]
    fn coupled_gauge_only_for_charged_field_scenarios() {
        for (kind, coupled) in [
            (ScenarioKind::PlaneWave, false),
            (ScenarioKind::GaussianSpinUp, false),
            (ScenarioKind::GaussianSpinTexture, false),
            (ScenarioKind::UniformBZeeman, true),
            (ScenarioKind::NeutralParticle, false),
        ] {
            let s = build(&ScenarioConfig::example(kind)).unwrap();
            assert_eq!(s.gauge.is_coupled(), coupled, "{kind:?}");
        }
    }
}
