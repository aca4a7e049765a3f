//! Serialized run artifacts: per-check results, convergence tables,
//! continuity series, and the provenance block.

use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::config::ScenarioConfig;
use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    /// Which evaluation path produced the residual: "grid", "analytic", or
    /// "exact" for identities that hold to rounding on the lattice.
    pub path: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckResult {
    /// Standard check: passes when the residual is within tolerance.
    pub fn bounded(name: &str, path: &str, residual: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            path: path.to_string(),
            residual,
            tolerance,
            pass: residual <= tolerance && residual.is_finite(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub dims: [usize; 3],
    pub h: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceTable {
    pub name: String,
    pub rows: Vec<ConvergenceRow>,
    /// Present for second-order checks; absent for exact ones.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fitted_order: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub required_order: Option<f64>,
    /// True when the residual sits at the rounding floor at every level and
    /// an order fit is meaningless.
    pub exact: bool,
    pub pass: bool,
}

impl ConvergenceTable {
    /// Least-squares slope of ln(residual) against ln(h).
    pub fn fit_order(rows: &[ConvergenceRow]) -> f64 {
        let n = rows.len() as f64;
        let xs: Vec<f64> = rows.iter().map(|r| r.h.ln()).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.residual.max(f64::MIN_POSITIVE).ln()).collect();
        let x_mean = xs.iter().sum::<f64>() / n;
        let y_mean = ys.iter().sum::<f64>() / n;
        let mut num = 0.0;
        let mut den = 0.0;
        for (x, y) in xs.iter().zip(&ys) {
            num += (x - x_mean) * (y - y_mean);
            den += (x - x_mean) * (x - x_mean);
        }
        num / den
    }

    pub fn second_order(name: &str, rows: Vec<ConvergenceRow>, required: f64) -> Self {
        let order = Self::fit_order(&rows);
        Self {
            name: name.to_string(),
            rows,
            fitted_order: Some(order),
            required_order: Some(required),
            exact: false,
            pass: order >= required,
        }
    }

    pub fn exact(name: &str, rows: Vec<ConvergenceRow>, floor: f64) -> Self {
        let pass = rows.iter().all(|r| r.residual <= floor);
        Self {
            name: name.to_string(),
            rows,
            fitted_order: None,
            required_order: None,
            exact: true,
            pass,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuitySeries {
    pub dt: f64,
    pub steps: usize,
    pub residual_total: Vec<f64>,
    pub residual_convective: Vec<f64>,
    pub norm_drift: Vec<f64>,
    pub solver_iterations: Vec<usize>,
    pub max_residual: f64,
    pub rms_residual: f64,
    pub max_flag_difference: f64,
    pub max_norm_drift: f64,
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub version: String,
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub path_mode: String,
    pub config: ScenarioConfig,
    pub checks: Vec<CheckResult>,
    pub convergence: Vec<ConvergenceTable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub continuity: Option<ContinuitySeries>,
    pub snapshots: Vec<String>,
    pub all_passed: bool,
}

impl RunReport {
    pub fn new(command: &str, config: &ScenarioConfig, seed: u64, path_mode: &str) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_hash: config.hash(),
            seed,
            path_mode: path_mode.to_string(),
            config: config.clone(),
            checks: Vec::new(),
            convergence: Vec::new(),
            continuity: None,
            snapshots: Vec::new(),
            all_passed: true,
        }
    }

    pub fn push_check(&mut self, check: CheckResult) {
        self.all_passed &= check.pass;
        println!(
            "[{}] {} ({}): residual {:.3e}, tolerance {:.3e}",
            if check.pass { "PASS" } else { "FAIL" },
            check.name,
            check.path,
            check.residual,
            check.tolerance
        );
        self.checks.push(check);
    }

    pub fn push_table(&mut self, table: ConvergenceTable) {
        self.all_passed &= table.pass;
        let verdict = if table.pass { "PASS" } else { "FAIL" };
        match table.fitted_order {
            Some(order) => println!(
                "[{verdict}] {} (grid): fitted order {:.3} (required {:.2})",
                table.name,
                order,
                table.required_order.unwrap_or(f64::NAN)
            ),
            None => println!("[{verdict}] {} (grid): exact check, no order fit", table.name),
        }
        for row in &table.rows {
            match row.dt {
                Some(dt) => println!(
                    "    {:>3}^3  h = {:.6}  dt = {:.6}  residual = {:.6e}",
                    row.dims[0], row.h, dt, row.residual
                ),
                None => println!(
                    "    {:>3}^3  h = {:.6}  residual = {:.6e}",
                    row.dims[0], row.h, row.residual
                ),
            }
        }
        self.convergence.push(table);
    }

    pub fn write(&self, out_dir: &Path) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(out_dir).map_err(|e| {
            CliError::Invalid(format!("cannot create output dir {}: {e}", out_dir.display()))
        })?;
        let path = out_dir.join("report.json");
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Invalid(format!("cannot serialize report: {e}")))?;
        let mut file = std::fs::File::create(&path)
            .map_err(|e| CliError::Invalid(format!("cannot write {}: {e}", path.display())))?;
        file.write_all(json.as_bytes())
            .and_then(|_| file.write_all(b"\n"))
            .map_err(|e| CliError::Invalid(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ScenarioConfig, ScenarioKind};

    fn rows(order: f64) -> Vec<ConvergenceRow> {
        (0..3)
            .map(|level| {
                let h = 0.5 / (1 << level) as f64;
                ConvergenceRow {
                    dims: [16 << level; 3],
                    h,
                    dt: None,
                    residual: 0.7 * h.powf(order),
                }
            })
            .collect()
    }

    #[test]
    fn fit_order_recovers_synthetic_slopes() {
        for order in [1.0, 2.0, 2.5] {
            let fitted = ConvergenceTable::fit_order(&rows(order));
            assert!((fitted - order).abs() < 1e-12, "order {order}: fitted {fitted}");
        }
    }

    #[test]
    fn second_order_table_passes_and_fails_by_fit() {
        assert!(ConvergenceTable::second_order("t", rows(2.0), 1.9).pass);
        assert!(!ConvergenceTable::second_order("t", rows(1.5), 1.9).pass);
    }

    #[test]
    fn exact_table_bounds_every_level() {
        let mut r = rows(2.0);
        for row in &mut r {
            row.residual = 5e-14;
        }
        assert!(ConvergenceTable::exact("t", r.clone(), 1e-13).pass);
        r[1].residual = 1e-10;
        assert!(!ConvergenceTable::exact("t", r, 1e-13).pass);
    }

    #[test]
    fn bounded_check_rejects_non_finite_residuals() {
        assert!(CheckResult::bounded("c", "exact", 1e-14, 1e-13).pass);
        assert!(!CheckResult::bounded("c", "exact", 2e-13, 1e-13).pass);
        assert!(!CheckResult::bounded("c", "exact", f64::NAN, 1e-13).pass);
        assert!(!CheckResult::bounded("c", "exact", f64::INFINITY, 1e-13).pass);
    }

    #[test]
    fn written_report_is_valid_json_with_trailing_newline() {
        let config = ScenarioConfig::example(ScenarioKind::PlaneWave);
        let mut report = RunReport::new("verify", &config, 0, "both");
        report.push_check(CheckResult::bounded("c", "exact", 0.0, 1e-13));
        let dir = tempfile::tempdir().unwrap();
        let path = report.write(dir.path()).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        assert!(text.ends_with("}\n"));
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["config_hash"], config.hash());
        assert_eq!(value["all_passed"], true);
    }
}
