//! Grid-refinement study: rerun the grid-path identities on successively
//! halved spacings, fit observed orders, and flag the identities that sit at
//! the rounding floor instead.

use pauli_current::{
    continuity_residual, convective_current, decompose, jm_divergence_relative, lagrangian_density,
    lm_total_divergence_residual, magnetization_current, noether_current, step, zeeman_residual,
    antisymmetric_remainder, EvolutionConfig, Gauge, Integrator, SpinorField,
};

use crate::config::{IntegratorKind, ScenarioConfig, ScenarioKind};
use crate::report::{ConvergenceRow, ConvergenceTable};
use crate::scenario::{build, Scenario};
use crate::CliError;

/// Residual floor for identities that hold to rounding at every spacing.
const EXACT_FLOOR: f64 = 1e-13;
const REQUIRED_ORDER: f64 = 1.9;
/// The continuity ladder only needs a few steps per level to expose the
/// discretization order; long runs belong to `evolve`.
const CONTINUITY_STEPS: usize = 6;

fn core_err(e: pauli_current::Error) -> CliError {
    CliError::Invalid(e.to_string())
}

struct LevelResiduals {
    row: ConvergenceRow,
    leibniz: f64,
    direct: f64,
    zeeman: f64,
    noether_spatial: f64,
    lm_pointwise: f64,
    div_jm: f64,
    antisym: f64,
    continuity: Option<(f64, f64)>, // (dt, residual)
}

fn measure_level(
    s: &Scenario,
    config: &ScenarioConfig,
    dt: f64,
    lm_is_zero: bool,
) -> Result<LevelResiduals, CliError> {
    let beta = s.companion.as_state().sample(s.lattice);
    let mut leibniz = 0.0f64;
    for axis in pauli_current::Axis::ALL {
        let r = s
            .gauge
            .leibniz_residual(&s.psi, &beta, axis)
            .map_err(core_err)?;
        leibniz = leibniz.max(r.relative());
    }

    let d = decompose(&s.psi, &s.gauge).map_err(core_err)?;
    let direct = d.direct_residual.relative();
    let div_jm = jm_divergence_relative(&d.jm);
    let antisym = antisymmetric_remainder(&s.psi, &s.gauge)
        .map_err(core_err)?
        .relative();
    let zeeman = zeeman_residual(&s.psi, &s.gauge).map_err(core_err)?.relative();

    let noether = noether_current(&s.psi, &s.units, true).map_err(core_err)?;
    let free = Gauge::free(s.lattice, s.units);
    let total = convective_current(&s.psi, &free)
        .map_err(core_err)?
        .add(&magnetization_current(&s.psi, &s.units))
        .map_err(core_err)?;
    let noether_spatial = noether.spatial.sub(&total).map_err(core_err)?.max_abs()
        / total.max_abs().max(f64::MIN_POSITIVE);

    let lm = lm_total_divergence_residual(&s.psi, &s.units);
    let lm_pointwise = if lm_is_zero {
        let zero_dot = SpinorField::zeros(s.lattice);
        let lagrangian = lagrangian_density(&s.psi, &zero_dot, &s.units).map_err(core_err)?;
        lm.pointwise.max_abs / lagrangian.scale.max(f64::MIN_POSITIVE)
    } else {
        lm.pointwise.relative()
    };

    let continuity = if config.scenario != ScenarioKind::PlaneWave && config.evolution.steps > 0 {
        let ev = &config.evolution;
        let integrator = match ev.integrator {
            IntegratorKind::ImplicitMidpoint => Integrator::ImplicitMidpoint,
            IntegratorKind::Rk4 => Integrator::Rk4,
        };
        let cfg = EvolutionConfig::new(dt, CONTINUITY_STEPS)
            .and_then(|c| c.with_solver(ev.linear_solve_tolerance, ev.linear_solve_max_iterations))
            .map_err(core_err)?
            .with_integrator(integrator);
        let mut psi = s.psi.clone();
        let mut worst = 0.0f64;
        for _ in 0..CONTINUITY_STEPS {
            let (next, _) = step(&psi, &s.gauge, &cfg).map_err(core_err)?;
            worst = worst
                .max(continuity_residual(&psi, &next, &s.gauge, &cfg, true).map_err(core_err)?);
            psi = next;
        }
        Some((dt, worst))
    } else {
        None
    };

    let spacing = s.lattice.spacing();
    Ok(LevelResiduals {
        row: ConvergenceRow {
            dims: s.lattice.dims(),
            h: spacing[0].max(spacing[1]).max(spacing[2]),
            dt: None,
            residual: 0.0,
        },
        leibniz,
        direct,
        zeeman,
        noether_spatial,
        lm_pointwise,
        div_jm,
        antisym,
        continuity,
    })
}

pub fn run_converge(config: &ScenarioConfig) -> Result<Vec<ConvergenceTable>, CliError> {
    let refinements = config.convergence.refinements;
    let base_dims = config.lattice.dims;
    let base_sites: usize = base_dims.iter().product();
    let finest_sites = base_sites << (3 * (refinements - 1));
    if finest_sites > config.convergence.max_sites {
        return Err(CliError::Invalid(format!(
            "finest refinement level needs {finest_sites} sites, above the configured limit of {}",
            config.convergence.max_sites
        )));
    }

    // states with LM = 0 identically need the defect judged against the
    // Lagrangian term scale; the identity's own scale is degenerate there
    let lm_is_zero = crate::scenario::lm_vanishes(config);
    // plane waves carry uniform spin and density: every spin-gradient
    // identity is exact, and so is the current decomposition
    let spin_flat = matches!(config.scenario, ScenarioKind::PlaneWave);
    let zeeman_is_exact = !(config.units.charge != 0.0
        && config.gauge.kind == crate::config::GaugeKind::UniformBz
        && config.gauge.field_strength != 0.0);

    let mut levels = Vec::with_capacity(refinements);
    for j in 0..refinements {
        let mut level_cfg = config.clone();
        for a in 0..3 {
            level_cfg.lattice.dims[a] = base_dims[a] << j;
            level_cfg.lattice.spacing[a] = config.lattice.spacing[a] / (1u64 << j) as f64;
        }
        let dt = config.evolution.dt / (1u64 << j) as f64;
        let s = build(&level_cfg)?;
        levels.push(measure_level(&s, config, dt, lm_is_zero)?);
        println!(
            "refinement level {j}: {}^3 sites done",
            level_cfg.lattice.dims[0]
        );
    }

    let rows = |f: &dyn Fn(&LevelResiduals) -> f64| -> Vec<ConvergenceRow> {
        levels
            .iter()
            .map(|l| ConvergenceRow {
                residual: f(l),
                ..l.row.clone()
            })
            .collect()
    };

    let mut tables = Vec::new();
    tables.push(ConvergenceTable::second_order(
        "leibniz_identity",
        rows(&|l| l.leibniz),
        REQUIRED_ORDER,
    ));
    if spin_flat {
        tables.push(ConvergenceTable::exact(
            "direct_vs_decomposed_current",
            rows(&|l| l.direct),
            EXACT_FLOOR,
        ));
        tables.push(ConvergenceTable::exact(
            "noether_spatial_current",
            rows(&|l| l.noether_spatial),
            EXACT_FLOOR,
        ));
    } else {
        tables.push(ConvergenceTable::second_order(
            "direct_vs_decomposed_current",
            rows(&|l| l.direct),
            REQUIRED_ORDER,
        ));
        tables.push(ConvergenceTable::second_order(
            "noether_spatial_current",
            rows(&|l| l.noether_spatial),
            REQUIRED_ORDER,
        ));
    }
    if zeeman_is_exact {
        tables.push(ConvergenceTable::exact(
            "zeeman_expansion",
            rows(&|l| l.zeeman),
            EXACT_FLOOR,
        ));
    } else {
        tables.push(ConvergenceTable::second_order(
            "zeeman_expansion",
            rows(&|l| l.zeeman),
            REQUIRED_ORDER,
        ));
    }
    if spin_flat {
        // uniform density and spin: W is constant, so div W is bitwise zero
        tables.push(ConvergenceTable::exact(
            "lm_divergence_form",
            rows(&|l| l.lm_pointwise),
            EXACT_FLOOR,
        ));
    } else {
        tables.push(ConvergenceTable::second_order(
            "lm_divergence_form",
            rows(&|l| l.lm_pointwise),
            REQUIRED_ORDER,
        ));
    }
    tables.push(ConvergenceTable::exact(
        "jm_divergence",
        rows(&|l| l.div_jm),
        EXACT_FLOOR,
    ));
    tables.push(ConvergenceTable::exact(
        "antisymmetric_remainder",
        rows(&|l| l.antisym),
        EXACT_FLOOR,
    ));
    if levels.iter().all(|l| l.continuity.is_some()) && !levels.is_empty() {
        let rows: Vec<ConvergenceRow> = levels
            .iter()
            .map(|l| {
                let (dt, residual) = l.continuity.unwrap();
                ConvergenceRow {
                    dt: Some(dt),
                    residual,
                    ..l.row.clone()
                }
            })
            .collect();
        tables.push(ConvergenceTable::second_order(
            "continuity_residual",
            rows,
            REQUIRED_ORDER,
        ));
    }

    Ok(tables)
}
