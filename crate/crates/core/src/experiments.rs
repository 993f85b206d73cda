//! Observable extraction, preset experiments, and tabular output.
//!
//! Each preset mirrors one published experiment family: free signal
//! evolution, dissipative stabilization of the limit cycle (from the ground
//! or the excited states), onset of synchronization, detuning / strength /
//! phase scans, the interference blockade, and the surplus-state leakage
//! check. A preset runs on one of two engines:
//!
//! - `trajectory`: stochastic shots averaged into a density matrix, every
//!   value carrying a Monte Carlo standard error;
//! - `oracle`: the exact expectation of the same protocol: deterministic
//!   density-matrix propagation of the step circuit (including the noise
//!   channels when enabled);
//!
//! or `both`, which emits paired columns plus discrepancy flags wherever the
//! engines disagree beyond three standard errors.
//!
//! The synchronized phase is read from the phase distribution
//!
//! ```text
//! S(φ) = 3/(8√2)·|ρ_{1,0} + ρ_{0,−1}|·cos(φ + arg(ρ_{1,0} + ρ_{0,−1}))
//!      + 1/(2π)·|ρ_{1,−1}|·cos(2φ + arg(ρ_{1,−1}))
//! ```
//!
//! evaluated on the renormalized spin block. The coherence noise floor is
//! measured, not modeled: a companion run at ε = 0 defines it, exactly as
//! the gray reference circle in the plots.

use crate::channel::circuit_channel_series;
use crate::lindblad::spin_block_view;
use crate::linalg::{C64, CMat, ZERO};
use crate::noise::NoiseParams;
use crate::spin1::{
    build_trotter_step, SpinEncoding, SpinModelParams, SpinState, TrotterVariant,
};
use crate::trajectory::{
    run_ensemble_series, EnsembleStats, InitialState, TrajectoryConfig,
};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

// ---------------------------------------------------------------------------
// Phase distribution and observables
// ---------------------------------------------------------------------------

/// S(φ) on a grid, with its maximum and maximizer.
#[derive(Debug, Clone)]
pub struct PhaseDistribution {
    pub phi: Vec<f64>,
    pub values: Vec<f64>,
    pub max: f64,
    pub argmax: f64,
}

/// Evaluate the two-harmonic phase distribution of a 3×3 spin density
/// matrix (basis order +1, 0, −1) on `phi_grid`.
pub fn phase_distribution(rho: &CMat, phi_grid: &[f64]) -> PhaseDistribution {
    assert_eq!(rho.dim(), 3);
    let first = rho.get(0, 1) + rho.get(1, 2); // rho_{1,0} + rho_{0,-1}
    let second = rho.get(0, 2); // rho_{1,-1}
    let a1 = 3.0 / (8.0 * 2f64.sqrt()) * first.norm();
    let p1 = first.arg();
    let a2 = second.norm() / (2.0 * PI);
    let p2 = second.arg();
    let values: Vec<f64> = phi_grid
        .iter()
        .map(|&phi| a1 * (phi + p1).cos() + a2 * (2.0 * phi + p2).cos())
        .collect();
    let (mut max, mut argmax) = (f64::NEG_INFINITY, 0.0);
    for (&phi, &v) in phi_grid.iter().zip(&values) {
        if v > max {
            max = v;
            argmax = phi;
        }
    }
    PhaseDistribution { phi: phi_grid.to_vec(), values, max, argmax }
}

/// Default φ grid: 256 points on [0, 2π).
pub fn default_phi_grid() -> Vec<f64> {
    (0..256).map(|k| 2.0 * PI * k as f64 / 256.0).collect()
}

/// Named observables of an encoded two-qubit density matrix.
#[derive(Debug, Clone)]
pub struct Observables {
    /// Populations of (+1, 0, −1, X).
    pub pops: [f64; 4],
    /// Raw coherences ρ_{1,0}, ρ_{0,−1}, ρ_{1,−1} (matrix-element order
    /// ⟨1|ρ|0⟩, ⟨0|ρ|−1⟩, ⟨1|ρ|−1⟩).
    pub coh: [C64; 3],
    /// Surplus coherences ρ_{+1,X}, ρ_{0,X}, ρ_{−1,X}.
    pub leak: [C64; 3],
    pub rho_xx: f64,
    /// max_φ S(φ) of the renormalized spin block and its maximizer.
    pub s_max: f64,
    pub s_argmax: f64,
    /// Purity of the renormalized spin block.
    pub spin_purity: f64,
}

/// Extract populations, coherences, surplus quantities and the phase
/// distribution summary from a two-qubit density matrix.
///
/// When the state sits entirely in |X⟩ there is no spin content to
/// renormalize; the spin-block summaries (S(φ) peak, purity) are reported
/// as zero so that tables over such rows stay well-defined.
pub fn observables_from_density(rho4: &CMat) -> Result<Observables> {
    assert_eq!(rho4.dim(), 4);
    let enc = SpinEncoding::default();
    let ip = enc.two_qubit_index(SpinState::Plus1);
    let iz = enc.two_qubit_index(SpinState::Zero);
    let im = enc.two_qubit_index(SpinState::Minus1);
    let ix = enc.two_qubit_index(SpinState::Surplus);
    let rho_xx = rho4.get(ix, ix).re;
    let (leak, s_max, s_argmax, spin_purity) = match spin_block_view(rho4) {
        Ok(view) => {
            let dist = phase_distribution(&view.spin, &default_phi_grid());
            (
                view.leak,
                dist.max,
                dist.argmax,
                view.spin.matmul(&view.spin).trace().re,
            )
        }
        Err(Error::DegenerateRenormalization { .. }) => (
            [rho4.get(ip, ix), rho4.get(iz, ix), rho4.get(im, ix)],
            0.0,
            0.0,
            0.0,
        ),
        Err(e) => return Err(e),
    };
    Ok(Observables {
        pops: [
            rho4.get(ip, ip).re,
            rho4.get(iz, iz).re,
            rho4.get(im, im).re,
            rho4.get(ix, ix).re,
        ],
        coh: [rho4.get(ip, iz), rho4.get(iz, im), rho4.get(ip, im)],
        leak,
        rho_xx,
        s_max,
        s_argmax,
        spin_purity,
    })
}

// ---------------------------------------------------------------------------
// Experiment specification
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    SignalOnly,
    Stabilization,
    Onset,
    DetuningScan,
    StrengthScan,
    PhaseScanGlobal,
    BlockadeScan,
    LeakageCheck,
    StabilizationFromExcited,
}

impl Preset {
    pub const ALL: [Preset; 9] = [
        Preset::SignalOnly,
        Preset::Stabilization,
        Preset::Onset,
        Preset::DetuningScan,
        Preset::StrengthScan,
        Preset::PhaseScanGlobal,
        Preset::BlockadeScan,
        Preset::LeakageCheck,
        Preset::StabilizationFromExcited,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::SignalOnly => "signal_only",
            Preset::Stabilization => "stabilization",
            Preset::Onset => "onset",
            Preset::DetuningScan => "detuning_scan",
            Preset::StrengthScan => "strength_scan",
            Preset::PhaseScanGlobal => "phase_scan_global",
            Preset::BlockadeScan => "blockade_scan",
            Preset::LeakageCheck => "leakage_check",
            Preset::StabilizationFromExcited => "stabilization_from_excited",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s.trim())
            .ok_or_else(|| Error::UnknownPreset(s.to_string()))
    }

    pub fn description(self) -> &'static str {
        match self {
            Preset::SignalOnly => "free evolution of |0> under the semiclassical signal, no dissipation (time series)",
            Preset::Stabilization => "dissipative stabilization of the limit cycle from |0>, no signal (time series)",
            Preset::Onset => "signal plus dissipation: transient buildup of synchronization (time series)",
            Preset::DetuningScan => "phase-distribution peak vs detuning",
            Preset::StrengthScan => "coherence and population growth vs signal strength",
            Preset::PhaseScanGlobal => "coherence phases under a global signal phase",
            Preset::BlockadeScan => "interference blockade: one signal phase varied",
            Preset::LeakageCheck => "surplus-state coherences and population vs signal strength (uncontrolled gates)",
            Preset::StabilizationFromExcited => "relaxation to the limit cycle from |+1>, |-1>, |X> (time series)",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Trajectory,
    Oracle,
    Both,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Trajectory => "trajectory",
            Engine::Oracle => "oracle",
            Engine::Both => "both",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        match s.trim() {
            "trajectory" => Ok(Engine::Trajectory),
            "oracle" => Ok(Engine::Oracle),
            "both" => Ok(Engine::Both),
            other => Err(Error::InvalidParams(format!("unknown engine `{other}`"))),
        }
    }
}

/// Which model quantity a scan grid varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridParam {
    /// Trotter step index (time series).
    Step,
    Delta,
    Epsilon,
    /// Global or single-component signal phase χ, preset-dependent.
    Chi,
    /// Initial-state code: +1 → 1, −1 → −1, X → 3.
    Initial,
}

impl GridParam {
    pub fn column_name(self) -> &'static str {
        match self {
            GridParam::Step => "step",
            GridParam::Delta => "delta",
            GridParam::Epsilon => "epsilon",
            GridParam::Chi => "chi",
            GridParam::Initial => "initial",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        match s.trim() {
            "step" => Ok(GridParam::Step),
            "delta" => Ok(GridParam::Delta),
            "epsilon" => Ok(GridParam::Epsilon),
            "chi" => Ok(GridParam::Chi),
            "initial" => Ok(GridParam::Initial),
            other => Err(Error::InvalidGrid(format!("unknown grid parameter `{other}`"))),
        }
    }
}

/// A fully resolved experiment: preset defaults with any overrides applied.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub preset: Preset,
    pub params: SpinModelParams,
    pub variant: TrotterVariant,
    pub n_steps: usize,
    pub trajectories: usize,
    pub seed: u64,
    pub noise: NoiseParams,
    pub engine: Engine,
    pub hardware_faithful: bool,
    pub grid: GridParam,
    pub grid_values: Vec<f64>,
    pub initial: SpinState,
}

impl ExperimentSpec {
    /// Defaults reproducing each preset's published parameter set.
    pub fn preset_defaults(preset: Preset) -> Self {
        let mut spec = ExperimentSpec {
            preset,
            params: SpinModelParams::default(),
            variant: TrotterVariant::controlled(),
            n_steps: 4,
            trajectories: 20_000,
            seed: 7,
            noise: NoiseParams::off(),
            engine: Engine::Trajectory,
            hardware_faithful: false,
            grid: GridParam::Step,
            grid_values: Vec::new(),
            initial: SpinState::Zero,
        };
        let fig3_params = SpinModelParams {
            delta: 0.0,
            epsilon: 0.25,
            gamma_10: 1.0,
            gamma_m10: 1.0,
            j_01: C64::from_polar(2.0, -PI / 6.0),
            j_0m1: C64::from_polar(2.0, PI / 3.0),
            j_m11: ZERO,
            dt: 0.2,
        };
        match preset {
            Preset::SignalOnly => {
                spec.params = SpinModelParams {
                    epsilon: 1.0,
                    j_01: C64::from_polar(1.0, 5.0 * PI / 6.0),
                    j_0m1: C64::from_polar(0.5, -PI / 6.0),
                    dt: 0.1,
                    ..SpinModelParams::default()
                };
                spec.n_steps = 30;
            }
            Preset::Stabilization => {
                spec.params = SpinModelParams { j_01: ZERO, j_0m1: ZERO, ..fig3_params };
            }
            Preset::Onset => {
                spec.params = SpinModelParams {
                    j_01: C64::from_polar(2.0, -PI / 6.0),
                    j_0m1: C64::from_polar(1.0, PI / 3.0),
                    ..fig3_params
                };
            }
            Preset::DetuningScan => {
                spec.params = fig3_params;
                spec.n_steps = 3;
                spec.grid = GridParam::Delta;
                spec.grid_values = (0..21).map(|k| -1.0 + k as f64 / 10.0).collect();
            }
            Preset::StrengthScan => {
                spec.params = fig3_params;
                spec.n_steps = 3;
                spec.grid = GridParam::Epsilon;
                spec.grid_values =
                    (0..5).map(|k| 0.05 * 2f64.powf(k as f64 / 2.0)).collect();
            }
            Preset::PhaseScanGlobal => {
                spec.params = SpinModelParams { gamma_m10: 1.25, ..fig3_params };
                spec.n_steps = 3;
                spec.grid = GridParam::Chi;
                spec.grid_values = (0..13).map(|k| 2.0 * PI * k as f64 / 12.0).collect();
            }
            Preset::BlockadeScan => {
                spec.params = SpinModelParams {
                    gamma_m10: 1.25,
                    j_01: C64::from_polar(2.0, -PI / 3.0),
                    j_0m1: C64::from_polar(2.0, -PI / 3.0),
                    ..fig3_params
                };
                spec.n_steps = 3;
                spec.grid = GridParam::Chi;
                spec.grid_values = (0..25).map(|k| 2.0 * PI * k as f64 / 24.0).collect();
            }
            Preset::LeakageCheck => {
                spec.params = SpinModelParams {
                    j_01: C64::from_polar(2.0, -PI / 6.0),
                    j_0m1: C64::from_polar(1.0, PI / 3.0),
                    ..fig3_params
                };
                spec.variant = TrotterVariant::uncontrolled();
                spec.engine = Engine::Oracle;
                spec.n_steps = 15;
                spec.grid = GridParam::Epsilon;
                spec.grid_values = vec![0.0125, 0.025, 0.05, 0.1];
            }
            Preset::StabilizationFromExcited => {
                spec.params = SpinModelParams { j_01: ZERO, j_0m1: ZERO, ..fig3_params };
                spec.grid = GridParam::Initial;
                spec.grid_values = vec![1.0, -1.0, 3.0];
            }
        }
        spec
    }

    /// Model parameters at one grid point.
    fn params_at(&self, value: f64) -> SpinModelParams {
        let mut p = self.params;
        match (self.preset, self.grid) {
            (_, GridParam::Delta) => p.delta = value,
            (_, GridParam::Epsilon) => p.epsilon = value,
            (Preset::BlockadeScan, GridParam::Chi) => {
                p.j_0m1 *= C64::from_polar(1.0, value);
            }
            (_, GridParam::Chi) => {
                p.j_01 *= C64::from_polar(1.0, value);
                p.j_0m1 *= C64::from_polar(1.0, value);
            }
            _ => {}
        }
        p
    }

    fn initial_at(&self, value: f64) -> Result<SpinState> {
        if self.grid != GridParam::Initial {
            return Ok(self.initial);
        }
        match value as i64 {
            1 => Ok(SpinState::Plus1),
            -1 => Ok(SpinState::Minus1),
            3 => Ok(SpinState::Surplus),
            0 => Ok(SpinState::Zero),
            other => Err(Error::InvalidGrid(format!("unknown initial-state code {other}"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate(self.variant.jump_convention)?;
        self.noise.validate()?;
        if self.grid != GridParam::Step && self.grid_values.is_empty() {
            return Err(Error::InvalidGrid("scan preset needs grid values".into()));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Result table
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    /// Ordered provenance records (seed, engine, conventions, version, ...).
    pub provenance: BTreeMap<String, String>,
    pub columns: Vec<Column>,
}

impl ResultTable {
    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, |c| c.values.len())
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.iter().find(|c| c.name == name).map(|c| c.values.as_slice())
    }

    /// CSV with a `#`-prefixed provenance block; values at 17 significant
    /// digits so parsing them back is lossless.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.provenance {
            let _ = writeln!(out, "# {k}: {v}");
        }
        let header: Vec<&str> = self.columns.iter().map(|c| c.name.as_str()).collect();
        let _ = writeln!(out, "{}", header.join(","));
        for row in 0..self.n_rows() {
            let cells: Vec<String> =
                self.columns.iter().map(|c| format!("{:.16e}", c.values[row])).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    pub fn from_csv_string(text: &str) -> Result<Self> {
        let mut provenance = BTreeMap::new();
        let mut lines = text.lines().peekable();
        while let Some(line) = lines.peek() {
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.split_once(':') {
                    provenance.insert(k.trim().to_string(), v.trim().to_string());
                }
                lines.next();
            } else {
                break;
            }
        }
        let header = lines
            .next()
            .ok_or_else(|| Error::MalformedTable("missing header row".into()))?;
        let mut columns: Vec<Column> = header
            .split(',')
            .map(|name| Column { name: name.trim().to_string(), values: Vec::new() })
            .collect();
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != columns.len() {
                return Err(Error::MalformedTable(format!("ragged row `{line}`")));
            }
            for (col, cell) in columns.iter_mut().zip(cells) {
                let v: f64 = cell
                    .trim()
                    .parse()
                    .map_err(|_| Error::MalformedTable(format!("bad number `{cell}`")))?;
                col.values.push(v);
            }
        }
        Ok(ResultTable { provenance, columns })
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json_string(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn from_name(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::InvalidParams(format!("unknown format `{other}`"))),
        }
    }
}

/// Write a result table to disk in the requested format.
pub fn write_results(table: &ResultTable, path: &Path, format: OutputFormat) -> Result<()> {
    let text = match format {
        OutputFormat::Csv => table.to_csv_string(),
        OutputFormat::Json => table.to_json_string()?,
    };
    std::fs::write(path, text)?;
    Ok(())
}

/// Read a result table back (format inferred from the first byte).
pub fn read_results(path: &Path) -> Result<ResultTable> {
    let text = std::fs::read_to_string(path)?;
    if text.trim_start().starts_with('{') {
        ResultTable::from_json_string(&text)
    } else {
        ResultTable::from_csv_string(&text)
    }
}

// ---------------------------------------------------------------------------
// Preset runner
// ---------------------------------------------------------------------------

/// One engine's row values: observables plus optional standard errors.
struct RowData {
    obs: Observables,
    se: Option<RowErrors>,
}

struct RowErrors {
    pops: [f64; 4],
    coh: [f64; 3],
    /// Phase errors, se(|coh|)/|coh| capped at π for vanishing coherences.
    coh_arg: [f64; 3],
    leak: [f64; 3],
    s_max: f64,
}

fn row_from_stats(stats: &EnsembleStats) -> Result<RowData> {
    let obs = observables_from_density(&stats.mean_density)?;
    let enc = SpinEncoding::default();
    let ip = enc.two_qubit_index(SpinState::Plus1);
    let iz = enc.two_qubit_index(SpinState::Zero);
    let im = enc.two_qubit_index(SpinState::Minus1);
    let ix = enc.two_qubit_index(SpinState::Surplus);
    let se_c = |r: usize, c: usize| stats.stderr_re[r][c].hypot(stats.stderr_im[r][c]);
    let coh = [se_c(ip, iz), se_c(iz, im), se_c(ip, im)];
    let arg = |k: usize| {
        let r = obs.coh[k].norm();
        if r > 0.0 { (coh[k] / r).min(PI) } else { PI }
    };
    let se = RowErrors {
        pops: [
            stats.stderr_re[ip][ip],
            stats.stderr_re[iz][iz],
            stats.stderr_re[im][im],
            stats.stderr_re[ix][ix],
        ],
        coh,
        coh_arg: [arg(0), arg(1), arg(2)],
        leak: [se_c(ip, ix), se_c(iz, ix), se_c(im, ix)],
        s_max: 3.0 / (8.0 * 2f64.sqrt()) * (coh[0] + coh[1]) + coh[2] / (2.0 * PI),
    };
    Ok(RowData { obs, se: Some(se) })
}

fn row_from_density(rho4: &CMat) -> Result<RowData> {
    Ok(RowData { obs: observables_from_density(rho4)?, se: None })
}

fn observable_names() -> Vec<&'static str> {
    vec![
        "pop_p1", "pop_0", "pop_m1", "pop_x", "coh_10_abs", "coh_10_arg", "coh_0m1_abs",
        "coh_0m1_arg", "coh_1m1_abs", "coh_1m1_arg", "leak_p1_abs", "leak_0_abs", "leak_m1_abs",
        "rho_xx", "smax", "smax_phi", "spin_purity",
    ]
}

fn observable_values(row: &RowData) -> Vec<f64> {
    let o = &row.obs;
    vec![
        o.pops[0],
        o.pops[1],
        o.pops[2],
        o.pops[3],
        o.coh[0].norm(),
        o.coh[0].arg(),
        o.coh[1].norm(),
        o.coh[1].arg(),
        o.coh[2].norm(),
        o.coh[2].arg(),
        o.leak[0].norm(),
        o.leak[1].norm(),
        o.leak[2].norm(),
        o.rho_xx,
        o.s_max,
        o.s_argmax,
        o.spin_purity,
    ]
}

fn error_names() -> Vec<&'static str> {
    vec![
        "pop_p1_se", "pop_0_se", "pop_m1_se", "pop_x_se", "coh_10_abs_se", "coh_0m1_abs_se",
        "coh_1m1_abs_se", "coh_10_arg_se", "coh_0m1_arg_se", "coh_1m1_arg_se", "leak_p1_abs_se",
        "leak_0_abs_se", "leak_m1_abs_se", "smax_se",
    ]
}

fn error_values(se: &RowErrors) -> Vec<f64> {
    vec![
        se.pops[0], se.pops[1], se.pops[2], se.pops[3], se.coh[0], se.coh[1], se.coh[2],
        se.coh_arg[0], se.coh_arg[1], se.coh_arg[2], se.leak[0], se.leak[1], se.leak[2],
        se.s_max,
    ]
}

/// Quantities compared by the engine-agreement flags, and their indexes in
/// the observable column order.
const FLAGGED: [(usize, usize); 7] = [
    (0, 0), // pop_p1 <- se idx 0
    (1, 1),
    (2, 2),
    (3, 3),
    (4, 4),  // coh_10_abs <- se idx 4
    (6, 5),  // coh_0m1_abs
    (8, 6),  // coh_1m1_abs
];

fn run_grid_point_trajectory(
    spec: &ExperimentSpec,
    params: &SpinModelParams,
    initial: SpinState,
) -> Result<Vec<RowData>> {
    let config = TrajectoryConfig {
        n_steps: spec.n_steps,
        n_trajectories: spec.trajectories,
        seed: spec.seed,
        params: *params,
        variant: spec.variant,
        initial: InitialState::Spin(initial),
        noise: spec.noise,
        hardware_faithful: spec.hardware_faithful,
    };
    let series = run_ensemble_series(&config)?;
    series.iter().map(row_from_stats).collect()
}

fn run_grid_point_oracle(
    spec: &ExperimentSpec,
    params: &SpinModelParams,
    initial: SpinState,
) -> Result<Vec<RowData>> {
    let step = build_trotter_step(params, &spec.variant, (2, 2))?;
    let enc = SpinEncoding::default();
    let mut rho0 = CMat::zeros(4);
    rho0.set(enc.two_qubit_index(initial), enc.two_qubit_index(initial), crate::linalg::ONE);
    let noise = spec.noise.is_active().then_some(&spec.noise);
    let series = circuit_channel_series(&step, &rho0, spec.n_steps, noise);
    series.iter().map(row_from_density).collect()
}

/// Endpoint-only convenience used by scans.
fn last_row(mut rows: Vec<RowData>) -> RowData {
    rows.pop().expect("series includes step 0")
}

/// Measured coherence noise floor: the largest spin-coherence modulus seen
/// in a companion run with the signal switched off.
fn noise_floor(spec: &ExperimentSpec) -> Result<f64> {
    let mut params = spec.params;
    params.epsilon = 0.0;
    let rows = match spec.engine {
        Engine::Oracle => run_grid_point_oracle(spec, &params, spec.initial)?,
        _ => run_grid_point_trajectory(spec, &params, spec.initial)?,
    };
    Ok(rows
        .iter()
        .flat_map(|r| r.obs.coh.iter().map(|c| c.norm()))
        .fold(0.0, f64::max))
}

fn provenance(spec: &ExperimentSpec) -> BTreeMap<String, String> {
    let mut p = BTreeMap::new();
    p.insert("preset".into(), spec.preset.name().into());
    p.insert("engine".into(), spec.engine.name().into());
    p.insert("seed".into(), spec.seed.to_string());
    p.insert("trajectories".into(), spec.trajectories.to_string());
    p.insert("steps".into(), spec.n_steps.to_string());
    p.insert(
        "jump_convention".into(),
        match spec.variant.jump_convention {
            crate::spin1::JumpConvention::OracleConsistent => "oracle-consistent".into(),
            crate::spin1::JumpConvention::PaperLiteral => "paper-literal".into(),
        },
    );
    p.insert(
        "signal_style".into(),
        match spec.variant.signal_style {
            crate::spin1::SignalStyle::Controlled => "controlled".into(),
            crate::spin1::SignalStyle::Uncontrolled => "uncontrolled".into(),
        },
    );
    p.insert(
        "dissipation_style".into(),
        match spec.variant.dissipation_style {
            crate::spin1::DissipationStyle::ControlledRotation => "controlled-rotation".into(),
            crate::spin1::DissipationStyle::TwoCnot => "two-cnot".into(),
        },
    );
    p.insert("noise".into(), if spec.noise.is_active() { "on".into() } else { "off".into() });
    p.insert("hardware_faithful".into(), spec.hardware_faithful.to_string());
    p.insert("version".into(), version_string());
    p
}

/// `git describe` of the working tree when available, package version
/// otherwise.
pub fn version_string() -> String {
    std::process::Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| format!("v{}", env!("CARGO_PKG_VERSION")))
}

/// Run a preset experiment into a result table.
pub fn run_preset(spec: &ExperimentSpec) -> Result<ResultTable> {
    spec.validate()?;
    // (grid value, rows per engine)
    let mut grid_col: Vec<f64> = Vec::new();
    let mut traj_rows: Vec<RowData> = Vec::new();
    let mut oracle_rows: Vec<RowData> = Vec::new();
    let want_traj = matches!(spec.engine, Engine::Trajectory | Engine::Both);
    let want_oracle = matches!(spec.engine, Engine::Oracle | Engine::Both);

    if spec.grid == GridParam::Step {
        // time series: one run, rows are steps 0..=N
        if want_traj {
            traj_rows = run_grid_point_trajectory(spec, &spec.params, spec.initial)?;
        }
        if want_oracle {
            oracle_rows = run_grid_point_oracle(spec, &spec.params, spec.initial)?;
        }
        grid_col = (0..=spec.n_steps).map(|n| n as f64).collect();
    } else if spec.grid == GridParam::Initial {
        // time series per initial state, stacked
        for &code in &spec.grid_values {
            let initial = spec.initial_at(code)?;
            if want_traj {
                traj_rows.extend(run_grid_point_trajectory(spec, &spec.params, initial)?);
            }
            if want_oracle {
                oracle_rows.extend(run_grid_point_oracle(spec, &spec.params, initial)?);
            }
            grid_col.extend((0..=spec.n_steps).map(|_| code));
        }
    } else {
        // scan: one endpoint row per grid value
        for &value in &spec.grid_values {
            let params = spec.params_at(value);
            if want_traj {
                traj_rows.push(last_row(run_grid_point_trajectory(spec, &params, spec.initial)?));
            }
            if want_oracle {
                oracle_rows.push(last_row(run_grid_point_oracle(spec, &params, spec.initial)?));
            }
            grid_col.push(value);
        }
    }

    let floor = noise_floor(spec)?;
    let n_rows = grid_col.len();
    let mut columns = Vec::new();
    columns.push(Column { name: spec.grid.column_name().into(), values: grid_col.clone() });
    if spec.grid == GridParam::Initial {
        let steps: Vec<f64> = (0..n_rows).map(|k| (k % (spec.n_steps + 1)) as f64).collect();
        columns.push(Column { name: "step".into(), values: steps });
    }

    let mut emit = |prefix: &str, rows: &[RowData]| {
        for (k, name) in observable_names().into_iter().enumerate() {
            columns.push(Column {
                name: format!("{prefix}{name}"),
                values: rows.iter().map(|r| observable_values(r)[k]).collect(),
            });
        }
        if rows.iter().all(|r| r.se.is_some()) {
            for (k, name) in error_names().into_iter().enumerate() {
                columns.push(Column {
                    name: format!("{prefix}{name}"),
                    values: rows.iter().map(|r| error_values(r.se.as_ref().unwrap())[k]).collect(),
                });
            }
        }
    };

    match spec.engine {
        Engine::Trajectory => emit("", &traj_rows),
        Engine::Oracle => emit("", &oracle_rows),
        Engine::Both => {
            emit("traj_", &traj_rows);
            emit("oracle_", &oracle_rows);
            // discrepancy flags: |trajectory - oracle| > 3 sigma
            let mut any = vec![0.0; n_rows];
            for (obs_idx, se_idx) in FLAGGED {
                let mut flags = Vec::with_capacity(n_rows);
                for row in 0..n_rows {
                    let t = observable_values(&traj_rows[row])[obs_idx];
                    let o = observable_values(&oracle_rows[row])[obs_idx];
                    let se = error_values(traj_rows[row].se.as_ref().unwrap())[se_idx];
                    let flag = ((t - o).abs() > 3.0 * se + 1e-12) as u8 as f64;
                    if flag > 0.0 {
                        any[row] = 1.0;
                    }
                    flags.push(flag);
                }
                columns.push(Column {
                    name: format!("flag_{}", observable_names()[obs_idx]),
                    values: flags,
                });
            }
            columns.push(Column { name: "flag_any".into(), values: any });
        }
    }
    columns.push(Column { name: "noise_floor".into(), values: vec![floor; n_rows] });

    Ok(ResultTable { provenance: provenance(spec), columns })
}
