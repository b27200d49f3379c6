//! Differential evolution (DE/rand/1/bin) over boxed parameters.
//!
//! All random draws for a generation happen on one thread before the trial
//! vectors are evaluated, so results do not depend on how rayon schedules
//! the evaluations.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clock::ClockSystemSpec;
use crate::error::{Error, Result};
use crate::machines::{cop, rectification, solve_point, SweepAxis};
use crate::qops::Tolerances;

/// Mutation factor and crossover rate; one pair is picked per generation.
pub const STRATEGIES: [(f64, f64); 3] = [(1.0, 0.1), (1.0, 0.9), (0.8, 0.2)];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeSettings {
    pub max_iterations: usize,
    /// Stop when the best value improved by less than `stall_tolerance`
    /// over this many generations.
    pub stall_iterations: usize,
    pub stall_tolerance: f64,
    pub seed: u64,
}

impl Default for DeSettings {
    fn default() -> Self {
        Self {
            max_iterations: 300,
            stall_iterations: 50,
            stall_tolerance: 1e-10,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimizeResult {
    pub best: Vec<f64>,
    pub best_value: f64,
    /// Best value after each generation.
    pub history: Vec<f64>,
    pub evaluations: usize,
}

fn check_bounds(bounds: &[(f64, f64)]) -> Result<()> {
    if bounds.is_empty() {
        return Err(Error::Config("at least one free parameter is required".into()));
    }
    for (k, &(lo, hi)) in bounds.iter().enumerate() {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::Config(format!("bounds[{k}] = [{lo}, {hi}] is invalid")));
        }
    }
    let pop = 2 * bounds.len();
    if pop < 4 {
        return Err(Error::Config(format!(
            "population of {pop} is too small for three distinct donors"
        )));
    }
    Ok(())
}

fn score<F: Fn(&[f64]) -> f64 + Sync>(objective: &F, xs: &[Vec<f64>]) -> Vec<f64> {
    xs.par_iter()
        .map(|x| {
            let v = objective(x);
            if v.is_nan() {
                f64::NEG_INFINITY
            } else {
                v
            }
        })
        .collect()
}

fn best_of(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Distinct donor indices, all different from `i`.
fn donors(rng: &mut ChaCha8Rng, n: usize, i: usize) -> [usize; 3] {
    let mut out = [0; 3];
    let mut filled = 0;
    while filled < 3 {
        let c = rng.gen_range(0..n);
        if c != i && !out[..filled].contains(&c) {
            out[filled] = c;
            filled += 1;
        }
    }
    out
}

/// Maximizes `objective` over the box `bounds`. NaN scores count as -inf.
pub fn optimize_fn<F>(bounds: &[(f64, f64)], objective: F, settings: &DeSettings) -> Result<OptimizeResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    check_bounds(bounds)?;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let population = (0..2 * bounds.len())
        .map(|_| {
            bounds
                .iter()
                .map(|&(lo, hi)| if lo == hi { lo } else { rng.gen_range(lo..hi) })
                .collect()
        })
        .collect();
    evolve(bounds, objective, settings, population, rng)
}

/// Runs the generations from a given initial population.
pub fn optimize_from<F>(
    bounds: &[(f64, f64)],
    objective: F,
    settings: &DeSettings,
    population: Vec<Vec<f64>>,
) -> Result<OptimizeResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    check_bounds(bounds)?;
    if population.len() < 4 || population.iter().any(|x| x.len() != bounds.len()) {
        return Err(Error::Config("initial population has the wrong shape".into()));
    }
    let rng = ChaCha8Rng::seed_from_u64(settings.seed);
    evolve(bounds, objective, settings, population, rng)
}

fn evolve<F>(
    bounds: &[(f64, f64)],
    objective: F,
    settings: &DeSettings,
    mut population: Vec<Vec<f64>>,
    mut rng: ChaCha8Rng,
) -> Result<OptimizeResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if settings.max_iterations == 0 {
        return Err(Error::Config("max_iterations must be at least 1".into()));
    }
    let d = bounds.len();
    let n = population.len();
    let mut values = score(&objective, &population);
    let mut evaluations = n;
    let mut history = Vec::with_capacity(settings.max_iterations);
    for _ in 0..settings.max_iterations {
        let (f, cr) = STRATEGIES[rng.gen_range(0..STRATEGIES.len())];
        let trials: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let [k, l, m] = donors(&mut rng, n, i);
                let forced = rng.gen_range(0..d);
                (0..d)
                    .map(|g| {
                        let u: f64 = rng.gen();
                        if u < cr || g == forced {
                            let (lo, hi) = bounds[g];
                            (population[k][g] + f * (population[l][g] - population[m][g])).clamp(lo, hi)
                        } else {
                            population[i][g]
                        }
                    })
                    .collect()
            })
            .collect();
        let trial_values = score(&objective, &trials);
        evaluations += n;
        for (i, (x, v)) in trials.into_iter().zip(trial_values).enumerate() {
            if v > values[i] {
                population[i] = x;
                values[i] = v;
            }
        }
        history.push(values[best_of(&values)]);
        let it = history.len();
        if settings.stall_iterations > 0 && it > settings.stall_iterations {
            let gain = history[it - 1] - history[it - 1 - settings.stall_iterations];
            if gain < settings.stall_tolerance {
                break;
            }
        }
    }
    let b = best_of(&values);
    Ok(OptimizeResult {
        best: population[b].clone(),
        best_value: values[b],
        history,
        evaluations,
    })
}

/// A free machine parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreeParameter {
    pub binding: SweepAxis,
    pub lower: f64,
    pub upper: f64,
}

impl FreeParameter {
    pub fn new(binding: SweepAxis, lower: f64, upper: f64) -> Self {
        Self { binding, lower, upper }
    }
}

/// Quantity to maximize, computed from the steady state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Objective {
    /// Diagonal heat current drawn from one bath.
    HeatDiag { bath: usize },
    /// Total heat current drawn from one bath.
    HeatTotal { bath: usize },
    /// Cold over hot heat current.
    Cop,
    /// Larger over smaller end-to-end throughput under a reversed gradient.
    Rectification,
}

/// Machine optimization: a base spec whose non-free fields stay frozen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizationProblem {
    pub base: ClockSystemSpec,
    pub parameters: Vec<FreeParameter>,
    pub objective: Objective,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl OptimizationProblem {
    /// Three-rotor refrigerator: temperatures (1, 1.5, 2.5) and g = 1 frozen;
    /// field, couplings and phases free.
    pub fn refrigeration_campaign() -> Self {
        let base = ClockSystemSpec::new(3, 3)
            .with_bath(1.0, 1.0, 0)
            .with_bath(1.5, 1.0, 1)
            .with_bath(2.5, 1.0, 2);
        Self {
            base,
            parameters: trimer_parameters(),
            objective: Objective::HeatDiag { bath: 0 },
            tolerances: Tolerances::default(),
        }
    }

    /// Three-rotor rectifier with g = (1, 1, 1e-5).
    pub fn rectification_campaign() -> Self {
        let base = ClockSystemSpec::new(3, 3)
            .with_bath(1.0, 1.0, 0)
            .with_bath(1.5, 1.0, 1)
            .with_bath(2.5, 1e-5, 2);
        Self {
            base,
            parameters: trimer_parameters(),
            objective: Objective::Rectification,
            tolerances: Tolerances::default(),
        }
    }

    pub fn dim(&self) -> usize {
        self.parameters.len()
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.parameters.iter().map(|p| (p.lower, p.upper)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        check_bounds(&self.bounds())?;
        let mut probe = self.base.clone();
        for (k, p) in self.parameters.iter().enumerate() {
            p.binding
                .apply(&mut probe, p.lower)
                .map_err(|e| Error::Config(format!("parameters[{k}]: {e}")))?;
        }
        match self.objective {
            Objective::HeatDiag { bath } | Objective::HeatTotal { bath } if bath >= self.base.n_baths() => {
                Err(Error::UnknownBath {
                    index: bath,
                    n_baths: self.base.n_baths(),
                })
            }
            _ => Ok(()),
        }
    }

    /// The base spec with the free parameters set to `x`.
    pub fn spec_at(&self, x: &[f64]) -> Result<ClockSystemSpec> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} parameters",
                x.len(),
                self.dim()
            )));
        }
        let mut spec = self.base.clone();
        for (p, &v) in self.parameters.iter().zip(x) {
            p.binding.apply(&mut spec, v)?;
        }
        Ok(spec)
    }

    /// Objective value at `x`; any failure scores -inf.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.try_evaluate(x).unwrap_or(f64::NEG_INFINITY)
    }

    fn try_evaluate(&self, x: &[f64]) -> Result<f64> {
        let spec = self.spec_at(x)?;
        let tol = &self.tolerances;
        let value = match self.objective {
            Objective::HeatDiag { bath } => solve_point(&spec, tol, false)?.report.q_dot_d[bath],
            Objective::HeatTotal { bath } => solve_point(&spec, tol, false)?.report.q_dot_total[bath],
            Objective::Cop => cop(&solve_point(&spec, tol, false)?.report).unwrap_or(f64::NEG_INFINITY),
            Objective::Rectification => rectification(&spec, tol)?.ratio_max_min.unwrap_or(f64::NEG_INFINITY),
        };
        Ok(value)
    }
}

fn trimer_parameters() -> Vec<FreeParameter> {
    let mut out = vec![FreeParameter::new(SweepAxis::TauAll, 0.0, 1.0)];
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        out.push(FreeParameter::new(SweepAxis::Coupling { i, j }, -30.0, 30.0));
    }
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        out.push(FreeParameter::new(SweepAxis::Phase { i, j }, 0.0, 2.0 * PI));
    }
    out
}

/// Runs differential evolution on a machine problem.
pub fn optimize(problem: &OptimizationProblem, settings: &DeSettings) -> Result<OptimizeResult> {
    problem.validate()?;
    optimize_fn(&problem.bounds(), |x| problem.evaluate(x), settings)
}
