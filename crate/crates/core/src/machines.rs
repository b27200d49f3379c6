//! Thermal machines built from rotor chains: dimer motor, trimer absorption
//! refrigerator, heat switch and rectifier.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clock::ClockSystemSpec;
use crate::error::{Error, Result};
use crate::lindblad::Liouvillian;
use crate::qops::Tolerances;
use crate::thermo::{format_float, CurrentsReport};

/// Cutoff below which the hot-bath current is treated as zero in ratios.
pub const COP_GUARD: f64 = 1e-14;

/// Ready-made parameter sets.
pub mod presets {
    use super::*;

    /// Two rotors with K = 2, T = (0.2, 1), g = 0.2.
    pub fn dimer_motor(phase: f64, tau: f64) -> ClockSystemSpec {
        ClockSystemSpec::new(2, 3)
            .with_pair(0, 1, 2.0, phase)
            .with_tau(tau)
            .with_bath(0.2, 0.2, 0)
            .with_bath(1.0, 0.2, 1)
    }

    fn trimer(g: [f64; 3]) -> ClockSystemSpec {
        ClockSystemSpec::new(3, 3)
            .with_bath(1.0, g[0], 0)
            .with_bath(1.5, g[1], 1)
            .with_bath(2.5, g[2], 2)
    }

    /// Refrigerator family with phi_12 = pi/6 = -phi_13 and no 2-3 coupling.
    pub fn refrigerator_window(k12: f64, k13: f64) -> ClockSystemSpec {
        trimer([1.0; 3])
            .with_pair(0, 1, k12, PI / 6.0)
            .with_pair(0, 2, k13, -PI / 6.0)
    }

    /// Best refrigerator found by the optimizer campaign.
    pub fn refrigerator_optimum() -> ClockSystemSpec {
        let p = 2.0 * PI / 3.0;
        trimer([1.0; 3])
            .with_pair(0, 1, 15.0, -p)
            .with_pair(0, 2, -17.4, p)
            .with_pair(1, 2, -25.1, -p)
    }

    /// Refrigerator with a transverse field on every rotor.
    pub fn coherent_refrigerator(tau: f64) -> ClockSystemSpec {
        refrigerator_window(-24.0, -20.0).with_tau(tau)
    }

    /// Linear chain whose middle bath coupling acts as a switch.
    pub fn switch_chain(g2: f64) -> ClockSystemSpec {
        trimer([1.0, g2, 1.0])
            .with_pair(0, 1, -24.0, PI / 6.0)
            .with_pair(1, 2, -20.0, -PI / 6.0)
    }

    /// Rectifier family scanned over phi_12 with phi_13 = 0.
    pub fn rectifier_line(phi12: f64) -> ClockSystemSpec {
        trimer([1.0, 1e-5, 1.0])
            .with_pair(0, 1, -24.0, phi12)
            .with_pair(0, 2, -20.0, 0.0)
    }

    /// Best rectifier found by the optimizer campaign.
    pub fn rectifier_optimum() -> ClockSystemSpec {
        trimer([1.0, 1.0, 1e-5])
            .with_pair(0, 1, 0.070, PI / 3.0)
            .with_pair(0, 2, -30.0, -0.0072)
            .with_pair(1, 2, -0.97, 2.0 * PI / 3.0)
    }
}

/// A parameter that a sweep varies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SweepAxis {
    /// phi_ij (phi_ji follows antisymmetrically).
    Phase { i: usize, j: usize },
    /// K_ij (K_ji follows).
    Coupling { i: usize, j: usize },
    /// The same field tau on every rotor.
    TauAll,
    /// Field of one rotor.
    Tau { rotor: usize },
    /// Coupling g of one bath.
    BathCoupling { bath: usize },
    /// Temperature of one bath.
    Temperature { bath: usize },
}

impl SweepAxis {
    pub fn apply(&self, spec: &mut ClockSystemSpec, value: f64) -> Result<()> {
        let n = spec.n_rotors;
        let pair = |i: usize, j: usize| -> Result<()> {
            if i >= n || j >= n || i == j {
                return Err(Error::InvalidArgument(format!("invalid rotor pair ({i}, {j})")));
            }
            Ok(())
        };
        let bath_ok = |b: usize| -> Result<()> {
            if b >= spec.baths.len() {
                return Err(Error::UnknownBath {
                    index: b,
                    n_baths: spec.baths.len(),
                });
            }
            Ok(())
        };
        match *self {
            SweepAxis::Phase { i, j } => {
                pair(i, j)?;
                spec.set_phase(i, j, value);
            }
            SweepAxis::Coupling { i, j } => {
                pair(i, j)?;
                spec.set_coupling(i, j, value);
            }
            SweepAxis::TauAll => spec.tau.iter_mut().for_each(|t| *t = value),
            SweepAxis::Tau { rotor } => {
                if rotor >= n {
                    return Err(Error::InvalidArgument(format!("rotor {rotor} out of range")));
                }
                spec.tau[rotor] = value;
            }
            SweepAxis::BathCoupling { bath } => {
                bath_ok(bath)?;
                spec.baths[bath].coupling = value;
            }
            SweepAxis::Temperature { bath } => {
                bath_ok(bath)?;
                spec.baths[bath].temperature = value;
            }
        }
        Ok(())
    }

    pub fn name(&self) -> String {
        match *self {
            SweepAxis::Phase { i, j } => format!("phase_{i}{j}"),
            SweepAxis::Coupling { i, j } => format!("coupling_{i}{j}"),
            SweepAxis::TauAll => "tau".into(),
            SweepAxis::Tau { rotor } => format!("tau_{rotor}"),
            SweepAxis::BathCoupling { bath } => format!("g_{bath}"),
            SweepAxis::Temperature { bath } => format!("temperature_{bath}"),
        }
    }
}

/// One solved grid point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub value: f64,
    pub report: CurrentsReport,
    pub residual: f64,
    /// The generator had a degenerate null space and the minimum-norm
    /// steady state was used.
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub spec: ClockSystemSpec,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    pub fn reports(&self) -> impl Iterator<Item = &CurrentsReport> {
        self.points.iter().map(|p| &p.report)
    }

    pub fn csv_header(&self) -> Vec<String> {
        let mut cols = vec![self.axis.name()];
        cols.extend(CurrentsReport::csv_header(self.spec.n_baths(), self.spec.n_rotors));
        cols.push("residual".into());
        cols.push("degenerate".into());
        cols
    }

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        self.points
            .iter()
            .map(|p| {
                let mut row = vec![format_float(p.value)];
                row.extend(p.report.csv_row());
                row.push(format_float(p.residual));
                row.push(u8::from(p.degenerate).to_string());
                row
            })
            .collect()
    }
}

/// Solved steady state of one spec.
#[derive(Clone, Debug)]
pub struct SteadyReport {
    pub report: CurrentsReport,
    pub residual: f64,
    pub degenerate: bool,
}

/// Steady state and currents of `spec`. With `allow_degenerate`, a
/// non-unique generator falls back to the minimum-norm steady state.
pub fn solve_point(spec: &ClockSystemSpec, tol: &Tolerances, allow_degenerate: bool) -> Result<SteadyReport> {
    let l = Liouvillian::with_tolerances(spec.clone(), *tol)?;
    let (sol, degenerate) = match l.solve_steady_state() {
        Ok(sol) => (sol, false),
        Err(Error::NonUniqueSteadyState { indicator, threshold }) if allow_degenerate => {
            log::info!("degenerate steady state (indicator {indicator:e} < {threshold:e}); using min-norm solution");
            (l.steady_state_min_norm()?, true)
        }
        Err(e) => return Err(e),
    };
    Ok(SteadyReport {
        report: CurrentsReport::steady(&sol.rho, &l)?,
        residual: sol.residual,
        degenerate,
    })
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("grid must not be empty".into()));
    }
    if let Some(v) = grid.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("grid value {v} is not finite")));
    }
    Ok(())
}

fn run_sweep(
    template: &ClockSystemSpec,
    axis: SweepAxis,
    grid: &[f64],
    tol: &Tolerances,
    allow_degenerate: bool,
) -> Result<SweepResult> {
    check_grid(grid)?;
    template.validate()?;
    let points = grid
        .par_iter()
        .map(|&value| {
            let mut spec = template.clone();
            axis.apply(&mut spec, value)?;
            let s = solve_point(&spec, tol, allow_degenerate)?;
            Ok(SweepPoint {
                value,
                report: s.report,
                residual: s.residual,
                degenerate: s.degenerate,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        axis,
        spec: template.clone(),
        points,
    })
}

/// Steady-state currents along one parameter axis, in grid order.
pub fn sweep(template: &ClockSystemSpec, axis: SweepAxis, grid: &[f64], tol: &Tolerances) -> Result<SweepResult> {
    run_sweep(template, axis, grid, tol, false)
}

/// Dimer sweep over the pair phase or the common field.
pub fn dimer_sweep(template: &ClockSystemSpec, axis: SweepAxis, grid: &[f64], tol: &Tolerances) -> Result<SweepResult> {
    if template.n_rotors != 2 {
        return Err(Error::InvalidSpec(format!(
            "dimer sweep needs 2 rotors, got {}",
            template.n_rotors
        )));
    }
    if !matches!(axis, SweepAxis::Phase { .. } | SweepAxis::TauAll) {
        return Err(Error::InvalidArgument(format!(
            "dimer sweep axis must be the phase or tau, got {}",
            axis.name()
        )));
    }
    sweep(template, axis, grid, tol)
}

/// Sweep of the middle-bath coupling of a linear chain. At `g = 0` the middle
/// rotor is frozen and the minimum-norm steady state is reported.
pub fn switch_sweep(template: &ClockSystemSpec, grid: &[f64], tol: &Tolerances) -> Result<SweepResult> {
    if template.n_rotors != 3 {
        return Err(Error::InvalidSpec("switch needs a three-rotor chain".into()));
    }
    if template.coupling[0][2] != 0.0 {
        return Err(Error::InvalidSpec("switch chain must have coupling[0][2] = 0".into()));
    }
    let middle = template
        .baths
        .iter()
        .position(|b| b.rotor == 1)
        .ok_or_else(|| Error::InvalidSpec("no bath attached to the middle rotor".into()))?;
    run_sweep(template, SweepAxis::BathCoupling { bath: middle }, grid, tol, true)
}

/// Sampling box for random dimers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScatterRanges {
    pub coupling: (f64, f64),
    pub phase: (f64, f64),
    pub tau: (f64, f64),
    pub g: (f64, f64),
    /// Bath temperatures of rotors 0 and 1.
    pub temperatures: (f64, f64),
}

impl Default for ScatterRanges {
    fn default() -> Self {
        Self {
            coupling: (-30.0, 30.0),
            phase: (0.0, 2.0 * PI),
            tau: (0.0, 1.0),
            g: (0.01, 2.0),
            temperatures: (0.2, 1.0),
        }
    }
}

impl ScatterRanges {
    fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [
            ("coupling", self.coupling),
            ("phase", self.phase),
            ("tau", self.tau),
            ("g", self.g),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidArgument(format!("range {name} = [{lo}, {hi}] is invalid")));
            }
        }
        Ok(())
    }
}

/// Parameters and heat currents of one random dimer.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScatterSample {
    pub coupling: f64,
    pub phase: f64,
    pub tau: [f64; 2],
    pub g: [f64; 2],
    pub q_dot_d: [f64; 2],
    pub q_dot_nd_sum: f64,
}

impl ScatterSample {
    pub const CSV_HEADER: [&'static str; 10] = [
        "coupling", "phase", "tau_0", "tau_1", "g_0", "g_1", "q_dot_d_0", "q_dot_d_1", "q_dot_nd_sum", "q_dot_d_sum",
    ];

    pub fn csv_row(&self) -> Vec<String> {
        [
            self.coupling,
            self.phase,
            self.tau[0],
            self.tau[1],
            self.g[0],
            self.g[1],
            self.q_dot_d[0],
            self.q_dot_d[1],
            self.q_dot_nd_sum,
            self.q_dot_d[0] + self.q_dot_d[1],
        ]
        .iter()
        .map(|&v| format_float(v))
        .collect()
    }
}

fn draw(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..hi)
    }
}

/// Uniform random dimers. Parameters are drawn in the order K, phi, tau_0,
/// tau_1, g_0, g_1 from a ChaCha8 stream seeded with `seed`; with
/// `zero_tau` the field draws are skipped and both fields are zero.
pub fn dimer_scatter(
    n_samples: usize,
    ranges: &ScatterRanges,
    seed: u64,
    zero_tau: bool,
    tol: &Tolerances,
) -> Result<Vec<ScatterSample>> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    ranges.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params: Vec<(f64, f64, [f64; 2], [f64; 2])> = (0..n_samples)
        .map(|_| {
            let k = draw(&mut rng, ranges.coupling);
            let phi = draw(&mut rng, ranges.phase);
            let tau = if zero_tau {
                [0.0, 0.0]
            } else {
                [draw(&mut rng, ranges.tau), draw(&mut rng, ranges.tau)]
            };
            let g = [draw(&mut rng, ranges.g), draw(&mut rng, ranges.g)];
            (k, phi, tau, g)
        })
        .collect();
    let (t0, t1) = ranges.temperatures;
    params
        .into_par_iter()
        .map(|(k, phi, tau, g)| {
            let mut spec = ClockSystemSpec::new(2, 3)
                .with_pair(0, 1, k, phi)
                .with_bath(t0, g[0], 0)
                .with_bath(t1, g[1], 1);
            spec.tau = tau.to_vec();
            let s = solve_point(&spec, tol, false)?;
            Ok(ScatterSample {
                coupling: k,
                phase: phi,
                tau,
                g,
                q_dot_d: [s.report.q_dot_d[0], s.report.q_dot_d[1]],
                q_dot_nd_sum: s.report.q_dot_nd.iter().sum(),
            })
        })
        .collect()
}

/// Heat currents over a grid of (K_01, K_02).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RefrigeratorMap {
    pub k12: Vec<f64>,
    pub k13: Vec<f64>,
    /// Row-major with `k12` as the outer index.
    pub reports: Vec<CurrentsReport>,
    pub spec: ClockSystemSpec,
}

impl RefrigeratorMap {
    pub fn report(&self, i: usize, j: usize) -> &CurrentsReport {
        &self.reports[i * self.k13.len() + j]
    }

    /// Heat drawn from the coldest (first) bath.
    pub fn q_cold(&self, i: usize, j: usize) -> f64 {
        self.report(i, j).q_dot_d[0]
    }

    /// Grid indices where the first bath is cooled.
    pub fn refrigeration_region(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.k12.len() {
            for j in 0..self.k13.len() {
                if self.q_cold(i, j) > 0.0 {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn csv_header(&self) -> Vec<String> {
        let mut cols = vec!["coupling_01".to_string(), "coupling_02".to_string()];
        cols.extend(CurrentsReport::csv_header(self.spec.n_baths(), self.spec.n_rotors));
        cols
    }

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        let mut rows = Vec::with_capacity(self.reports.len());
        for (i, &a) in self.k12.iter().enumerate() {
            for (j, &b) in self.k13.iter().enumerate() {
                let mut row = vec![format_float(a), format_float(b)];
                row.extend(self.report(i, j).csv_row());
                rows.push(row);
            }
        }
        rows
    }
}

/// Steady-state currents for every (K_01, K_02) pair on the grid.
pub fn refrigerator_map(template: &ClockSystemSpec, k12: &[f64], k13: &[f64], tol: &Tolerances) -> Result<RefrigeratorMap> {
    if template.n_rotors != 3 {
        return Err(Error::InvalidSpec("refrigerator map needs three rotors".into()));
    }
    check_grid(k12)?;
    check_grid(k13)?;
    template.validate()?;
    let cells: Vec<(f64, f64)> = k12.iter().flat_map(|&a| k13.iter().map(move |&b| (a, b))).collect();
    let reports = cells
        .par_iter()
        .map(|&(a, b)| {
            let mut spec = template.clone();
            spec.set_coupling(0, 1, a);
            spec.set_coupling(0, 2, b);
            solve_point(&spec, tol, false).map(|s| s.report)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RefrigeratorMap {
        k12: k12.to_vec(),
        k13: k13.to_vec(),
        reports,
        spec: template.clone(),
    })
}

/// `Q_cold / Q_hot` from the total currents of the first and last baths.
/// `None` when the hot current is below [`COP_GUARD`].
pub fn cop(report: &CurrentsReport) -> Option<f64> {
    let n = report.q_dot_total.len();
    if n < 2 {
        return None;
    }
    let hot = report.q_dot_total[n - 1];
    if hot.abs() < COP_GUARD {
        return None;
    }
    Some(report.q_dot_total[0] / hot)
}

/// `sqrt(T_H / (T_H - T_C)) - 1`.
pub fn cop_curzon_ahlborn(t_hot: f64, t_cold: f64) -> Result<f64> {
    if !(t_cold > 0.0 && t_hot > t_cold && t_hot.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "need t_hot > t_cold > 0, got t_hot = {t_hot}, t_cold = {t_cold}"
        )));
    }
    Ok((t_hot / (t_hot - t_cold)).sqrt() - 1.0)
}

/// Forward and reversed heat throughput of a chain.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RectificationResult {
    /// Heat absorbed from the hot end with the spec's temperatures.
    pub q_forward: f64,
    /// Same after swapping the end temperatures.
    pub q_backward: f64,
    pub ratio_as_printed: Option<f64>,
    pub ratio_max_min: Option<f64>,
    /// Whether the forward run carries the larger current.
    pub forward_larger: bool,
}

impl RectificationResult {
    pub const CSV_HEADER: [&'static str; 4] = ["q_forward", "q_backward", "ratio_as_printed", "ratio_max_min"];

    pub fn csv_row(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map_or_else(|| "nan".to_string(), format_float);
        vec![
            format_float(self.q_forward),
            format_float(self.q_backward),
            opt(self.ratio_as_printed),
            opt(self.ratio_max_min),
        ]
    }
}

fn end_baths(spec: &ClockSystemSpec) -> Result<(usize, usize)> {
    let last = spec.n_rotors - 1;
    let find = |rotor: usize| {
        spec.baths
            .iter()
            .position(|b| b.rotor == rotor)
            .ok_or_else(|| Error::InvalidSpec(format!("no bath attached to end rotor {rotor}")))
    };
    Ok((find(0)?, find(last)?))
}

fn hot_end_current(spec: &ClockSystemSpec, left: usize, right: usize, tol: &Tolerances) -> Result<f64> {
    let s = solve_point(spec, tol, false)?;
    let hot = if spec.baths[left].temperature >= spec.baths[right].temperature {
        left
    } else {
        right
    };
    Ok(s.report.q_dot_total[hot])
}

/// Heat taken from the hot end bath, forward and with the end temperatures
/// swapped (bath couplings stay with their rotors).
pub fn rectification(spec: &ClockSystemSpec, tol: &Tolerances) -> Result<RectificationResult> {
    spec.validate()?;
    if spec.n_rotors < 2 {
        return Err(Error::InvalidSpec("rectification needs at least two rotors".into()));
    }
    let (left, right) = end_baths(spec)?;
    let mut reversed = spec.clone();
    let (tl, tr) = (spec.baths[left].temperature, spec.baths[right].temperature);
    reversed.baths[left].temperature = tr;
    reversed.baths[right].temperature = tl;
    let (q_forward, q_backward) = rayon::join(
        || hot_end_current(spec, left, right, tol),
        || hot_end_current(&reversed, left, right, tol),
    );
    let (q_forward, q_backward) = (q_forward?, q_backward?);
    let ratio = |a: f64, b: f64| if b.abs() < COP_GUARD { None } else { Some(a / b) };
    let (big, small) = if q_forward.abs() >= q_backward.abs() {
        (q_forward.abs(), q_backward.abs())
    } else {
        (q_backward.abs(), q_forward.abs())
    };
    Ok(RectificationResult {
        q_forward,
        q_backward,
        ratio_as_printed: ratio(q_forward, q_backward),
        ratio_max_min: ratio(big, small),
        forward_larger: q_forward.abs() >= q_backward.abs(),
    })
}

/// Rectification along one parameter axis.
pub fn rectification_sweep(
    template: &ClockSystemSpec,
    axis: SweepAxis,
    grid: &[f64],
    tol: &Tolerances,
) -> Result<Vec<(f64, RectificationResult)>> {
    check_grid(grid)?;
    grid.par_iter()
        .map(|&v| {
            let mut spec = template.clone();
            axis.apply(&mut spec, v)?;
            rectification(&spec, tol).map(|r| (v, r))
        })
        .collect()
}

/// Grid points where the objective peaks, first occurrence on ties.
pub fn argmax(values: &[f64]) -> Option<usize> {
    values
        .iter()
        .enumerate()
        .filter(|(_, v)| !v.is_nan())
        .fold(None, |best: Option<(usize, f64)>, (i, &v)| match best {
            Some((_, b)) if b >= v => best,
            _ => Some((i, v)),
        })
        .map(|(i, _)| i)
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
    }
}
