//! Local GKLS generator, steady states and time evolution.
//!
//! Superoperators act on column-stacked density matrices: entry `rho[(a, b)]`
//! sits at flat index `a + b * dim`.

use std::io::{self, Write};
use std::sync::OnceLock;

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::Mat;
use log::warn;
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::clock::{build_hamiltonian, diagonal_split, enumerate_jump_channels, ClockSystemSpec, JumpChannel};
use crate::error::{Error, Result};
use crate::qops::{commutator, DensityMatrix, Operator, Tolerances, I, ZERO};

/// Inverse-iteration sweeps used to estimate the smallest singular value.
const INVERSE_ITERATIONS: usize = 12;
/// Power-iteration sweeps used to estimate the spectral norm.
const POWER_ITERATIONS: usize = 40;
/// Trace drift above which an integration step is rejected.
const STEP_DRIFT_LIMIT: f64 = 1e-6;

/// The generator of a rotor machine together with its ingredients.
#[derive(Debug)]
pub struct Liouvillian {
    spec: ClockSystemSpec,
    h: Operator,
    h_d: Operator,
    h_nd: Operator,
    channels: Vec<JumpChannel>,
    tolerances: Tolerances,
    superop: OnceLock<DMatrix<Complex64>>,
}

/// A steady state with the diagnostics of the solve that produced it.
#[derive(Clone, Debug)]
pub struct SteadyState {
    pub rho: DensityMatrix,
    /// `max |L[rho]|` over all entries.
    pub residual: f64,
    /// Smallest singular value of the normalized system relative to `|M|_2`.
    /// `None` when the state came from the degenerate min-norm solver.
    pub uniqueness: Option<f64>,
}

impl Liouvillian {
    pub fn new(spec: ClockSystemSpec) -> Result<Self> {
        Self::with_tolerances(spec, Tolerances::default())
    }

    pub fn with_tolerances(spec: ClockSystemSpec, tolerances: Tolerances) -> Result<Self> {
        let h = build_hamiltonian(&spec)?;
        let (h_d, h_nd) = diagonal_split(&h);
        let channels = enumerate_jump_channels(&spec, &h)?;
        Ok(Self {
            spec,
            h,
            h_d,
            h_nd,
            channels,
            tolerances,
            superop: OnceLock::new(),
        })
    }

    pub fn spec(&self) -> &ClockSystemSpec {
        &self.spec
    }

    pub fn hamiltonian(&self) -> &Operator {
        &self.h
    }

    pub fn h_diag(&self) -> &Operator {
        &self.h_d
    }

    pub fn h_offdiag(&self) -> &Operator {
        &self.h_nd
    }

    pub fn channels(&self) -> &[JumpChannel] {
        &self.channels
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tolerances
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    pub fn n_baths(&self) -> usize {
        self.spec.n_baths()
    }

    pub fn check_bath(&self, bath: usize) -> Result<()> {
        if bath >= self.n_baths() {
            return Err(Error::UnknownBath {
                index: bath,
                n_baths: self.n_baths(),
            });
        }
        Ok(())
    }

    fn check_dim(&self, op: &Operator) -> Result<()> {
        if op.dim() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "operator of dimension {} applied to a generator of dimension {}",
                op.dim(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// `-i [H, rho] + sum_a D_a[rho]`.
    pub fn apply(&self, rho: &Operator) -> Result<Operator> {
        self.check_dim(rho)?;
        let mut out = commutator(&self.h, rho)?.scale(-I);
        for bath in 0..self.n_baths() {
            out = &out + &dissipator_apply(rho, &self.channels, bath)?;
        }
        Ok(out)
    }

    /// `D_a[rho]` for one bath.
    pub fn dissipator(&self, rho: &Operator, bath: usize) -> Result<Operator> {
        self.check_dim(rho)?;
        self.check_bath(bath)?;
        dissipator_apply(rho, &self.channels, bath)
    }

    /// `D*_a[a]` for one bath.
    pub fn dual_dissipator(&self, a: &Operator, bath: usize) -> Result<Operator> {
        self.check_dim(a)?;
        self.check_bath(bath)?;
        dual_dissipator_apply(a, &self.channels, bath)
    }

    /// Partial generator `-(i / n_baths) [H_D, rho] + D_a[rho]`, whose fixed
    /// point is the local Gibbs state of bath `a`.
    pub fn apply_partial(&self, rho: &Operator, bath: usize) -> Result<Operator> {
        self.check_dim(rho)?;
        self.check_bath(bath)?;
        let unitary = commutator(&self.h_d, rho)?.scale(-I / self.n_baths() as f64);
        Ok(&unitary + &dissipator_apply(rho, &self.channels, bath)?)
    }

    /// The column-stacked generator matrix, built on first use.
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        self.superop.get_or_init(|| assemble_superoperator(&self.h, &self.channels))
    }

    /// Unique steady state of the full generator.
    pub fn steady_state(&self) -> Result<DensityMatrix> {
        self.solve_steady_state().map(|s| s.rho)
    }

    /// Steady state plus solver diagnostics.
    pub fn solve_steady_state(&self) -> Result<SteadyState> {
        let d = self.dim();
        let real = hermitian_real_form(self.matrix(), d);
        let diag: Vec<usize> = (0..d).map(|a| a + a * d).collect();
        let (x, indicator) = solve_stationary(&real, &diag, self.tolerances.null_space)?;
        self.finish(unpack_hermitian(&x, d), Some(indicator))
    }

    /// Minimum-norm trace-one element of the numerical null space.
    ///
    /// Meant for generators whose steady state is not unique, e.g. a rotor
    /// without a bath and without tunnelling. The result is still validated.
    pub fn steady_state_min_norm(&self) -> Result<SteadyState> {
        let d = self.dim();
        let real = hermitian_real_form(self.matrix(), d);
        let diag: Vec<usize> = (0..d).map(|a| a + a * d).collect();
        let x = min_norm_null_vector(&real, &diag, self.tolerances.null_space)?;
        self.finish(unpack_hermitian(&x, d), None)
    }

    fn finish(&self, op: Operator, uniqueness: Option<f64>) -> Result<SteadyState> {
        let residual = self.apply(&op)?.max_abs();
        if !(residual <= self.tolerances.residual) {
            return Err(Error::SolverFailure(format!(
                "steady-state residual {residual:e} exceeds {:e}",
                self.tolerances.residual
            )));
        }
        let rho = DensityMatrix::with_tolerances(op, &self.tolerances)?;
        Ok(SteadyState {
            rho,
            residual,
            uniqueness,
        })
    }

    /// Fixed-step RK4 from `rho0` to `t_final`, returning every step.
    pub fn evolve(&self, rho0: &DensityMatrix, t_final: f64, dt: f64) -> Result<Vec<(f64, DensityMatrix)>> {
        self.evolve_sampled(rho0, t_final, dt, 1)
    }

    /// Like [`Liouvillian::evolve`] but keeps only every `stride`-th step
    /// (plus the initial and final states).
    pub fn evolve_sampled(
        &self,
        rho0: &DensityMatrix,
        t_final: f64,
        dt: f64,
        stride: usize,
    ) -> Result<Vec<(f64, DensityMatrix)>> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        if !(t_final >= 0.0) || !t_final.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "final time must be non-negative, got {t_final}"
            )));
        }
        if stride == 0 {
            return Err(Error::InvalidArgument("sampling stride must be positive".into()));
        }
        self.check_dim(rho0.operator())?;
        let steps = (t_final / dt).ceil() as usize;
        let h = if steps == 0 { 0.0 } else { t_final / steps as f64 };
        let snapshot_tol = Tolerances {
            positivity: self.tolerances.trajectory_positivity,
            trace: STEP_DRIFT_LIMIT,
            ..self.tolerances
        };
        let mut out = vec![(0.0, rho0.clone())];
        let mut rho = rho0.operator().clone();
        for step in 1..=steps {
            let k1 = self.apply(&rho)?;
            let k2 = self.apply(&(&rho + &k1.scale_real(h / 2.0)))?;
            let k3 = self.apply(&(&rho + &k2.scale_real(h / 2.0)))?;
            let k4 = self.apply(&(&rho + &k3.scale_real(h)))?;
            let incr = &(&k1 + &k4) + &(&k2 + &k3).scale_real(2.0);
            rho = (&rho + &incr.scale_real(h / 6.0)).hermitian_part();
            let t = step as f64 * h;
            let drift = (rho.trace().re - 1.0).abs();
            if drift > STEP_DRIFT_LIMIT {
                return Err(Error::StepRejected {
                    drift,
                    limit: STEP_DRIFT_LIMIT,
                    time: t,
                });
            }
            if step % stride == 0 || step == steps {
                out.push((t, DensityMatrix::with_tolerances(rho.clone(), &snapshot_tol)?));
            }
        }
        Ok(out)
    }

    /// Steady state of the classical rate equation on the diagonal, with
    /// `W[to][from]` the summed bath rate of the jump `from -> to`.
    pub fn classical_steady_state(&self) -> Result<Vec<f64>> {
        let d = self.dim();
        let mut gen = Mat::<f64>::zeros(d, d);
        for ch in &self.channels {
            let rate = ch.total_rate();
            gen[(ch.to, ch.from)] += rate;
            gen[(ch.from, ch.from)] -= rate;
        }
        let diag: Vec<usize> = (0..d).collect();
        let (p, _) = solve_stationary(&gen, &diag, self.tolerances.null_space)?;
        if let Some(bad) = p.iter().position(|&v| v < -self.tolerances.positivity) {
            return Err(Error::SolverFailure(format!(
                "classical steady state has negative probability {} at state {bad}",
                p[bad]
            )));
        }
        Ok(p.into_iter().map(|v| v.max(0.0)).collect())
    }

    /// Writes the jump-channel table as CSV.
    pub fn write_channel_table<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "index,from,to,rotor,direction,omega")?;
        for a in 0..self.n_baths() {
            write!(w, ",gamma_{a}")?;
        }
        writeln!(w)?;
        for (k, ch) in self.channels.iter().enumerate() {
            write!(w, "{k},{},{},{},{},{:.16e}", ch.from, ch.to, ch.rotor, ch.direction, ch.omega)?;
            for r in &ch.rates {
                write!(w, ",{r:.16e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Writes the nonzero entries of the generator matrix as CSV.
    pub fn write_superoperator<W: Write>(&self, mut w: W) -> io::Result<()> {
        let m = self.matrix();
        writeln!(w, "row,col,re,im")?;
        for c in 0..m.ncols() {
            for r in 0..m.nrows() {
                let v = m[(r, c)];
                if v != ZERO {
                    writeln!(w, "{r},{c},{:.16e},{:.16e}", v.re, v.im)?;
                }
            }
        }
        Ok(())
    }
}

fn bath_count(channels: &[JumpChannel]) -> usize {
    channels.first().map_or(0, |c| c.rates.len())
}

fn check_channels(dim: usize, channels: &[JumpChannel], bath: usize) -> Result<()> {
    let n_baths = bath_count(channels);
    if bath >= n_baths {
        return Err(Error::UnknownBath { index: bath, n_baths });
    }
    for ch in channels {
        if ch.from >= dim || ch.to >= dim || ch.rates.len() != n_baths {
            return Err(Error::DimensionMismatch(format!(
                "channel {} -> {} does not fit a {dim}-dimensional system with {n_baths} baths",
                ch.from, ch.to
            )));
        }
    }
    Ok(())
}

/// Total escape rate out of each basis state for one bath.
fn escape_rates(dim: usize, channels: &[JumpChannel], bath: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    for ch in channels {
        out[ch.from] += ch.rates[bath];
    }
    out
}

/// `D_a[rho] = sum_l g_l (L rho L^dag - {L^dag L, rho} / 2)` with `L = |to><from|`.
pub fn dissipator_apply(rho: &Operator, channels: &[JumpChannel], bath: usize) -> Result<Operator> {
    let d = rho.dim();
    check_channels(d, channels, bath)?;
    let escape = escape_rates(d, channels, bath);
    let mut out = Operator::from_fn(d, |a, b| rho.get(a, b) * (-0.5 * (escape[a] + escape[b])));
    for ch in channels {
        let g = ch.rates[bath];
        if g != 0.0 {
            *out.get_mut(ch.to, ch.to) += rho.get(ch.from, ch.from) * g;
        }
    }
    Ok(out)
}

/// `D*_a[x] = sum_l g_l (L^dag x L - {L^dag L, x} / 2)`.
pub fn dual_dissipator_apply(x: &Operator, channels: &[JumpChannel], bath: usize) -> Result<Operator> {
    let d = x.dim();
    check_channels(d, channels, bath)?;
    let escape = escape_rates(d, channels, bath);
    let mut out = Operator::from_fn(d, |a, b| x.get(a, b) * (-0.5 * (escape[a] + escape[b])));
    for ch in channels {
        let g = ch.rates[bath];
        if g != 0.0 {
            *out.get_mut(ch.from, ch.from) += x.get(ch.to, ch.to) * g;
        }
    }
    Ok(out)
}

/// Column-stacked matrix of `rho -> -i [H, rho] + sum_a D_a[rho]`.
pub fn assemble_superoperator(h: &Operator, channels: &[JumpChannel]) -> DMatrix<Complex64> {
    let d = h.dim();
    let n = d * d;
    let vec_idx = |a: usize, b: usize| a + b * d;
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for a in 0..d {
        for c in 0..d {
            let hac = h.get(a, c);
            if hac == ZERO {
                continue;
            }
            for b in 0..d {
                // -i (H rho)_ab gets H_ac rho_cb; i (rho H)_bc gets rho_ba H_ac.
                m[(vec_idx(a, b), vec_idx(c, b))] += -I * hac;
                m[(vec_idx(b, c), vec_idx(b, a))] += I * hac;
            }
        }
    }
    let mut escape = vec![0.0; d];
    for ch in channels {
        let g = ch.total_rate();
        escape[ch.from] += g;
        m[(vec_idx(ch.to, ch.to), vec_idx(ch.from, ch.from))] += Complex64::from(g);
    }
    for a in 0..d {
        for b in 0..d {
            m[(vec_idx(a, b), vec_idx(a, b))] -= Complex64::from(0.5 * (escape[a] + escape[b]));
        }
    }
    m
}

/// Restricts a Hermiticity-preserving superoperator to Hermitian matrices in
/// real coordinates.
///
/// Coordinate `a + a d` is `Re rho_aa`; for `a < b`, coordinate `a + b d` is
/// `Re rho_ab` and `b + a d` is `Im rho_ab`. Rows use the same layout.
fn hermitian_real_form(m: &DMatrix<Complex64>, d: usize) -> Mat<f64> {
    let n = d * d;
    let idx = |a: usize, b: usize| a + b * d;
    let mut real = Mat::<f64>::zeros(n, n);
    let mut column = vec![ZERO; n];
    for b in 0..d {
        for a in 0..=b {
            // Real part (or diagonal) and imaginary part parameters.
            let kinds: &[bool] = if a == b { &[false] } else { &[false, true] };
            for &imag in kinds {
                let p = if imag { idx(b, a) } else { idx(a, b) };
                for (r, slot) in column.iter_mut().enumerate() {
                    *slot = if a == b {
                        m[(r, idx(a, a))]
                    } else if imag {
                        I * (m[(r, idx(a, b))] - m[(r, idx(b, a))])
                    } else {
                        m[(r, idx(a, b))] + m[(r, idx(b, a))]
                    };
                }
                for bb in 0..d {
                    for aa in 0..=bb {
                        let w = column[idx(aa, bb)];
                        real[(idx(aa, bb), p)] = w.re;
                        if aa != bb {
                            real[(idx(bb, aa), p)] = w.im;
                        }
                    }
                }
            }
        }
    }
    real
}

fn unpack_hermitian(x: &[f64], d: usize) -> Operator {
    Operator::from_fn(d, |a, b| {
        if a == b {
            Complex64::new(x[a + a * d], 0.0)
        } else if a < b {
            Complex64::new(x[a + b * d], x[b + a * d])
        } else {
            Complex64::new(x[b + a * d], -x[a + b * d])
        }
    })
}

fn mat_vec(m: &Mat<f64>, x: &[f64], transpose: bool) -> Vec<f64> {
    let (rows, cols) = (m.nrows(), m.ncols());
    if transpose {
        (0..cols)
            .map(|c| (0..rows).map(|r| m[(r, c)] * x[r]).sum())
            .collect()
    } else {
        let mut out = vec![0.0; rows];
        for (c, &xc) in x.iter().enumerate() {
            if xc != 0.0 {
                for (r, o) in out.iter_mut().enumerate() {
                    *o += m[(r, c)] * xc;
                }
            }
        }
        out
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Deterministic non-degenerate start vector for the iterative estimates.
fn start_vector(n: usize) -> Vec<f64> {
    (0..n).map(|i| 1.0 + ((i * 7919) % 101) as f64 / 101.0).collect()
}

/// Spectral norm estimate by power iteration on `M^T M`.
fn spectral_norm(m: &Mat<f64>) -> f64 {
    let mut v = start_vector(m.ncols());
    let mut sigma = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let nv = norm(&v);
        if nv == 0.0 {
            return 0.0;
        }
        v.iter_mut().for_each(|x| *x /= nv);
        let mv = mat_vec(m, &v, false);
        sigma = norm(&mv);
        v = mat_vec(m, &mv, true);
    }
    sigma
}

fn col_to_vec(c: &Mat<f64>) -> Vec<f64> {
    (0..c.nrows()).map(|i| c[(i, 0)]).collect()
}

fn vec_to_col(v: &[f64]) -> Mat<f64> {
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

/// Smallest singular value of the factored matrix by inverse iteration on
/// `(A^T A)^{-1}`.
fn smallest_singular_value(lu: &PartialPivLu<f64>, n: usize) -> f64 {
    let mut v = start_vector(n);
    let mut growth = 0.0;
    for _ in 0..INVERSE_ITERATIONS {
        let nv = norm(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        let y = lu.solve_transpose(vec_to_col(&v));
        let z = lu.solve(&y);
        v = col_to_vec(&z);
        growth = norm(&v);
        if !growth.is_finite() {
            return 0.0;
        }
    }
    if growth > 0.0 {
        1.0 / growth.sqrt()
    } else {
        f64::INFINITY
    }
}

/// Solves `G x = 0` with `sum_{i in diag} x_i = 1` by replacing the first
/// diagonal row of `G` with the normalization row.
///
/// Returns the solution and the uniqueness indicator `sigma_min / |G|_2`.
fn solve_stationary(gen: &Mat<f64>, diag: &[usize], null_tol: f64) -> Result<(Vec<f64>, f64)> {
    let n = gen.nrows();
    let scale = spectral_norm(gen);
    if scale == 0.0 {
        return Err(Error::NonUniqueSteadyState {
            indicator: 0.0,
            threshold: null_tol,
        });
    }
    let pivot_row = diag[0];
    let mut a = gen.clone();
    for c in 0..n {
        a[(pivot_row, c)] = 0.0;
    }
    for &c in diag {
        a[(pivot_row, c)] = 1.0;
    }
    let mut rhs = vec![0.0; n];
    rhs[pivot_row] = 1.0;
    let lu = a.partial_piv_lu();
    let indicator = smallest_singular_value(&lu, n) / scale;
    if indicator < null_tol {
        return Err(Error::NonUniqueSteadyState {
            indicator,
            threshold: null_tol,
        });
    }
    let x = col_to_vec(&lu.solve(vec_to_col(&rhs)));
    let residual = norm(&mat_vec(&a, &x, false).iter().zip(&rhs).map(|(l, r)| l - r).collect::<Vec<_>>());
    if x.iter().all(|v| v.is_finite()) && residual <= 1e-8 * (1.0 + norm(&x)) * scale.max(1.0) {
        return Ok((x, indicator));
    }
    warn!("constrained solve inaccurate (residual {residual:e}); falling back to SVD null vector");
    svd_null_vector(gen, diag, null_tol).map(|x| (x, indicator))
}

fn svd_parts(gen: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let svd = gen
        .svd()
        .map_err(|e| Error::SolverFailure(format!("SVD did not converge: {e:?}")))?;
    let s = svd.S().column_vector();
    let values: Vec<f64> = (0..s.nrows()).map(|i| s[i]).collect();
    Ok((values, svd.V().to_owned()))
}

/// Right singular vector of the smallest singular value, trace-normalized.
fn svd_null_vector(gen: &Mat<f64>, diag: &[usize], null_tol: f64) -> Result<Vec<f64>> {
    let n = gen.ncols();
    let (s, v) = svd_parts(gen)?;
    let top = s[0];
    if n >= 2 && s[n - 2] < null_tol * top {
        return Err(Error::NonUniqueSteadyState {
            indicator: s[n - 2] / top,
            threshold: null_tol,
        });
    }
    let x: Vec<f64> = (0..n).map(|i| v[(i, n - 1)]).collect();
    let tr: f64 = diag.iter().map(|&i| x[i]).sum();
    if tr.abs() < 1e-300 {
        return Err(Error::SolverFailure("null vector has zero trace".into()));
    }
    Ok(x.into_iter().map(|v| v / tr).collect())
}

/// Minimum-norm `x` in the numerical null space with unit trace:
/// `x = V (V^T t) / |V^T t|^2` for null basis `V` and trace row `t`.
fn min_norm_null_vector(gen: &Mat<f64>, diag: &[usize], null_tol: f64) -> Result<Vec<f64>> {
    let n = gen.ncols();
    let (s, v) = svd_parts(gen)?;
    let cutoff = null_tol * s[0];
    let null_cols: Vec<usize> = (0..n).filter(|&k| s[k] <= cutoff).collect();
    if null_cols.is_empty() {
        return Err(Error::SolverFailure("generator has no null space".into()));
    }
    let weights: Vec<f64> = null_cols
        .iter()
        .map(|&k| diag.iter().map(|&i| v[(i, k)]).sum())
        .collect();
    let w2: f64 = weights.iter().map(|w| w * w).sum();
    if w2 < 1e-300 {
        return Err(Error::SolverFailure("null space is traceless".into()));
    }
    let mut x = vec![0.0; n];
    for (&k, &w) in null_cols.iter().zip(&weights) {
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += v[(i, k)] * w / w2;
        }
    }
    Ok(x)
}
