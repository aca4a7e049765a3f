//! Config file schema, validation, and the provenance hash.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use std::path::Path;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    PlaneWave,
    GaussianSpinUp,
    GaussianSpinTexture,
    UniformBZeeman,
    NeutralParticle,
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Self::PlaneWave => "plane_wave",
            Self::GaussianSpinUp => "gaussian_spin_up",
            Self::GaussianSpinTexture => "gaussian_spin_texture",
            Self::UniformBZeeman => "uniform_b_zeeman",
            Self::NeutralParticle => "neutral_particle",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaugeKind {
    Zero,
    UniformBz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegratorKind {
    ImplicitMidpoint,
    Rk4,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
}

impl Default for LatticeSection {
    fn default() -> Self {
        Self {
            dims: [32; 3],
            spacing: [0.25; 3],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UnitsSection {
    pub hbar: f64,
    pub mass: f64,
    pub charge: f64,
    pub light_speed: f64,
}

impl Default for UnitsSection {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            mass: 1.0,
            charge: 1.0,
            light_speed: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaugeSection {
    pub kind: GaugeKind,
    /// B_z for the uniform_bz kind; ignored for zero.
    pub field_strength: f64,
}

impl Default for GaugeSection {
    fn default() -> Self {
        Self {
            kind: GaugeKind::Zero,
            field_strength: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StateSection {
    /// Integer mode numbers; the wavevector is 2 pi n / L per axis, so every
    /// state is lattice-commensurate by construction.
    pub wavevector: [i64; 3],
    /// Packet width for the Gaussian-envelope scenarios.
    pub width: f64,
    /// Spin-rotation rate per unit x for the textured scenarios.
    pub pitch: f64,
}

impl Default for StateSection {
    fn default() -> Self {
        Self {
            wavevector: [1, 0, 0],
            width: 1.0,
            pitch: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolutionSection {
    pub dt: f64,
    pub steps: usize,
    pub integrator: IntegratorKind,
    pub linear_solve_tolerance: f64,
    pub linear_solve_max_iterations: usize,
    /// Emit a field snapshot every this many steps (plus t = 0 and the end).
    pub snapshot_every: usize,
}

impl Default for EvolutionSection {
    fn default() -> Self {
        Self {
            dt: 0.02,
            steps: 50,
            integrator: IntegratorKind::ImplicitMidpoint,
            linear_solve_tolerance: 1e-12,
            linear_solve_max_iterations: 500,
            snapshot_every: 25,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergenceSection {
    /// Total ladder levels: (h, dt), (h/2, dt/2), ...
    pub refinements: usize,
    /// Refusal threshold on the finest lattice's site count.
    pub max_sites: usize,
}

impl Default for ConvergenceSection {
    fn default() -> Self {
        Self {
            refinements: 2,
            max_sites: 64 * 64 * 64,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChecksSection {
    /// Probe points per analytic check.
    pub probes: usize,
    /// Random vector pairs for the Pauli product identity.
    pub pauli_pairs: usize,
}

impl Default for ChecksSection {
    fn default() -> Self {
        Self {
            probes: 100,
            pauli_pairs: 1000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    // scalar fields stay ahead of the sections so the config also
    // serializes as valid TOML
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    #[serde(default)]
    pub lattice: LatticeSection,
    #[serde(default)]
    pub units: UnitsSection,
    #[serde(default)]
    pub gauge: GaugeSection,
    #[serde(default)]
    pub state: StateSection,
    #[serde(default)]
    pub evolution: EvolutionSection,
    #[serde(default)]
    pub convergence: ConvergenceSection,
    #[serde(default)]
    pub checks: ChecksSection,
}

fn default_output_dir() -> String {
    "out".to_string()
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Invalid(format!("cannot read config {}: {e}", path.display())))?;
        let config: Self = toml::from_str(&text)
            .map_err(|e| CliError::Invalid(format!("cannot parse config {}: {e}", path.display())))?;
        Ok(config)
    }

    /// A coherent full config for each scenario, used by tests and as the
    /// template for the shipped examples.
    pub fn example(kind: ScenarioKind) -> Self {
        let mut config = Self {
            scenario: kind,
            lattice: LatticeSection::default(),
            units: UnitsSection::default(),
            gauge: GaugeSection::default(),
            state: StateSection::default(),
            evolution: EvolutionSection::default(),
            convergence: ConvergenceSection::default(),
            checks: ChecksSection::default(),
            seed: 0,
            output_dir: default_output_dir(),
        };
        match kind {
            ScenarioKind::PlaneWave => {
                config.state.wavevector = [1, 0, 0];
                config.evolution.dt = 0.01;
                config.evolution.steps = 100;
                config.evolution.snapshot_every = 50;
            }
            ScenarioKind::GaussianSpinUp => {
                config.state.wavevector = [1, 0, 0];
                config.state.width = 1.0;
            }
            ScenarioKind::GaussianSpinTexture => {
                config.state.wavevector = [0, 0, 0];
                config.state.width = 1.2;
                config.state.pitch = 0.8;
            }
            ScenarioKind::UniformBZeeman => {
                // extra box padding: the packet spreads during evolution and
                // must stay clear of the boundary-density guard
                config.lattice.dims = [44; 3];
                config.gauge = GaugeSection {
                    kind: GaugeKind::UniformBz,
                    field_strength: 0.5,
                };
                config.state.wavevector = [0, 0, 0];
                config.state.width = 0.9;
                config.evolution.dt = 0.01;
                config.evolution.steps = 25;
                config.convergence.max_sites = 88 * 88 * 88;
            }
            ScenarioKind::NeutralParticle => {
                config.units.charge = 0.0;
                config.gauge = GaugeSection {
                    kind: GaugeKind::UniformBz,
                    field_strength: 0.5,
                };
                config.state.wavevector = [0, 0, 0];
                config.state.width = 1.2;
                config.state.pitch = 0.8;
            }
        }
        config
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let invalid = |msg: String| Err(CliError::Invalid(msg));
        for (d, h) in self.lattice.dims.iter().zip(&self.lattice.spacing) {
            if *d < 3 {
                return invalid(format!("lattice dims must be >= 3, got {:?}", self.lattice.dims));
            }
            if !(*h > 0.0) || !h.is_finite() {
                return invalid(format!(
                    "lattice spacing must be positive and finite, got {:?}",
                    self.lattice.spacing
                ));
            }
        }
        let u = &self.units;
        for (name, v) in [
            ("hbar", u.hbar),
            ("mass", u.mass),
            ("light_speed", u.light_speed),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return invalid(format!("units.{name} must be positive and finite, got {v}"));
            }
        }
        if !u.charge.is_finite() {
            return invalid(format!("units.charge must be finite, got {}", u.charge));
        }
        if !self.gauge.field_strength.is_finite() {
            return invalid("gauge.field_strength must be finite".into());
        }

        let h_max = self
            .lattice
            .spacing
            .iter()
            .cloned()
            .fold(0.0f64, f64::max);
        let uses_packet = !matches!(self.scenario, ScenarioKind::PlaneWave);
        if uses_packet {
            if !self.state.width.is_finite() || self.state.width < 2.0 * h_max {
                return invalid(format!(
                    "state.width must be at least twice the largest spacing ({:.6}), got {}",
                    2.0 * h_max,
                    self.state.width
                ));
            }
        }
        let uses_texture = matches!(
            self.scenario,
            ScenarioKind::GaussianSpinTexture | ScenarioKind::NeutralParticle
        );
        if uses_texture && (!self.state.pitch.is_finite() || self.state.pitch <= 0.0) {
            return invalid(format!(
                "state.pitch must be positive for textured scenarios, got {}",
                self.state.pitch
            ));
        }

        match self.scenario {
            ScenarioKind::PlaneWave => {
                if self.gauge.kind != GaugeKind::Zero {
                    return invalid(
                        "plane_wave requires gauge.kind = \"zero\" (uniform density is incompatible with a localized-potential run)".into(),
                    );
                }
            }
            ScenarioKind::UniformBZeeman => {
                if self.gauge.kind != GaugeKind::UniformBz || self.gauge.field_strength == 0.0 {
                    return invalid(
                        "uniform_b_zeeman requires gauge.kind = \"uniform_bz\" with a nonzero field_strength".into(),
                    );
                }
                if u.charge == 0.0 {
                    return invalid("uniform_b_zeeman requires a nonzero charge".into());
                }
            }
            ScenarioKind::NeutralParticle => {
                if u.charge != 0.0 {
                    return invalid(format!(
                        "neutral_particle requires units.charge = 0, got {}",
                        u.charge
                    ));
                }
            }
            _ => {}
        }

        let e = &self.evolution;
        if !(e.dt > 0.0) || !e.dt.is_finite() {
            return invalid(format!("evolution.dt must be positive and finite, got {}", e.dt));
        }
        if !(e.linear_solve_tolerance > 0.0) {
            return invalid("evolution.linear_solve_tolerance must be positive".into());
        }
        if e.linear_solve_max_iterations == 0 {
            return invalid("evolution.linear_solve_max_iterations must be positive".into());
        }
        if e.snapshot_every == 0 {
            return invalid("evolution.snapshot_every must be positive".into());
        }
        if self.convergence.refinements < 2 {
            return invalid(format!(
                "convergence.refinements must be at least 2, got {}",
                self.convergence.refinements
            ));
        }
        let base_sites: usize = self.lattice.dims.iter().product();
        if self.convergence.max_sites < base_sites {
            return invalid(format!(
                "convergence.max_sites ({}) is below the base lattice's {} sites",
                self.convergence.max_sites, base_sites
            ));
        }
        if self.checks.probes == 0 || self.checks.pauli_pairs == 0 {
            return invalid("checks.probes and checks.pauli_pairs must be positive".into());
        }
        Ok(())
    }

    /// Hash of the resolved config (defaults included) for the provenance
    /// block. JSON keeps field order stable, so the hash is reproducible.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        let mut out = String::with_capacity(64);
        for byte in digest {
            out.push_str(&format!("{byte:02x}"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const KINDS: [ScenarioKind; 5] = [
        ScenarioKind::PlaneWave,
        ScenarioKind::GaussianSpinUp,
        ScenarioKind::GaussianSpinTexture,
        ScenarioKind::UniformBZeeman,
        ScenarioKind::NeutralParticle,
    ];

    #[test]
    fn example_configs_validate() {
        for kind in KINDS {
            ScenarioConfig::example(kind).validate().unwrap();
        }
    }

    #[test]
    fn example_configs_round_trip_through_toml() {
        for kind in KINDS {
            let config = ScenarioConfig::example(kind);
            let text = toml::to_string(&config).unwrap();
            let back: ScenarioConfig = toml::from_str(&text).unwrap();
            assert_eq!(
                serde_json::to_value(&back).unwrap(),
                serde_json::to_value(&config).unwrap()
            );
        }
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = ScenarioConfig::example(ScenarioKind::PlaneWave);
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn validation_rejects_bad_sections() {
        let base = || ScenarioConfig::example(ScenarioKind::GaussianSpinUp);

        let mut c = base();
        c.lattice.dims = [2, 8, 8];
        assert!(c.validate().is_err());

        let mut c = base();
        c.state.width = 0.3; // below 2 h_max
        assert!(c.validate().is_err());

        let mut c = base();
        c.evolution.snapshot_every = 0;
        assert!(c.validate().is_err());

        let mut c = base();
        c.convergence.refinements = 1;
        assert!(c.validate().is_err());

        let mut c = base();
        c.convergence.max_sites = 10;
        assert!(c.validate().is_err());

        let mut c = ScenarioConfig::example(ScenarioKind::PlaneWave);
        c.gauge.kind = GaugeKind::UniformBz;
        c.gauge.field_strength = 0.5;
        assert!(c.validate().is_err());

        let mut c = ScenarioConfig::example(ScenarioKind::UniformBZeeman);
        c.gauge.field_strength = 0.0;
        assert!(c.validate().is_err());

        let mut c = ScenarioConfig::example(ScenarioKind::NeutralParticle);
        c.units.charge = 1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = toml::from_str::<ScenarioConfig>(
            "scenario = \"plane_wave\"\nnot_a_key = 1\n",
        );
        assert!(err.is_err());
    }
}
