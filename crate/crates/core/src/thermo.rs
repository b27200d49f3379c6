//! Heat, probability and energy currents, entropy production.
//!
//! Sign convention: a heat current is positive when energy flows from the
//! bath into the system. Entropies are in nats.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lindblad::Liouvillian;
use crate::qops::{matrix_log_pinv, trace_product, von_neumann_entropy, DensityMatrix, Operator};

/// Which part of the probability current to aggregate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurrentKind {
    Thermal,
    Tunnel,
}

fn check_state(rho: &DensityMatrix, l: &Liouvillian) -> Result<()> {
    if rho.dim() != l.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state of dimension {} for a system of dimension {}",
            rho.dim(),
            l.dim()
        )));
    }
    Ok(())
}

fn check_pair(dim: usize, j: usize, k: usize) -> Result<()> {
    if j >= dim || k >= dim {
        return Err(Error::InvalidArgument(format!(
            "basis index pair ({j}, {k}) out of range for dimension {dim}"
        )));
    }
    Ok(())
}

/// `tr(rho D*_a[H_D]) = sum_l g_l,a w_l p_from`.
pub fn heat_current_diag(rho: &DensityMatrix, l: &Liouvillian, bath: usize) -> Result<f64> {
    check_state(rho, l)?;
    l.check_bath(bath)?;
    Ok(l.channels()
        .iter()
        .map(|ch| ch.rates[bath] * ch.omega * rho.get(ch.from, ch.from).re)
        .sum())
}

/// `tr(rho D*_a[H_ND])`.
///
/// With `L = |to><from|` this is `sum_l g_l,a Re(A_to,to rho_from,from - (A rho)_from,from)`
/// for `A = H_ND`; the first term vanishes because `H_ND` has no diagonal.
pub fn heat_current_nondiag(rho: &DensityMatrix, l: &Liouvillian, bath: usize) -> Result<f64> {
    check_state(rho, l)?;
    l.check_bath(bath)?;
    let a = l.h_offdiag();
    if a.max_abs() == 0.0 {
        return Ok(0.0);
    }
    let d = l.dim();
    let a_rho_diag: Vec<f64> = (0..d)
        .map(|s| (0..d).map(|c| a.get(s, c) * rho.get(c, s)).sum::<num_complex::Complex64>().re)
        .collect();
    Ok(l.channels()
        .iter()
        .map(|ch| {
            let g = ch.rates[bath];
            g * (a.get(ch.to, ch.to).re * rho.get(ch.from, ch.from).re - a_rho_diag[ch.from])
        })
        .sum())
}

/// `tr(H D_a[rho])`.
pub fn heat_current_total(rho: &DensityMatrix, l: &Liouvillian, bath: usize) -> Result<f64> {
    check_state(rho, l)?;
    let d_rho = l.dissipator(rho.operator(), bath)?;
    Ok(trace_product(l.hamiltonian(), &d_rho)?.re)
}

/// Bath-driven probability current `j -> k`:
/// `sum_a (g_(j->k),a p_j - g_(k->j),a p_k)`.
pub fn probability_current_thermal(rho: &DensityMatrix, l: &Liouvillian, j: usize, k: usize) -> Result<f64> {
    check_state(rho, l)?;
    check_pair(l.dim(), j, k)?;
    if j == k {
        return Ok(0.0);
    }
    let (pj, pk) = (rho.get(j, j).re, rho.get(k, k).re);
    Ok(l.channels()
        .iter()
        .map(|ch| {
            if ch.from == j && ch.to == k {
                ch.total_rate() * pj
            } else if ch.from == k && ch.to == j {
                -ch.total_rate() * pk
            } else {
                0.0
            }
        })
        .sum())
}

/// Coherent probability current `j -> k`: `i (H_jk rho_kj - H_kj rho_jk) = -2 Im(H_jk rho_kj)`.
pub fn probability_current_tunnel(rho: &DensityMatrix, h: &Operator, j: usize, k: usize) -> Result<f64> {
    check_pair(h.dim().min(rho.dim()), j, k)?;
    if h.dim() != rho.dim() {
        return Err(Error::DimensionMismatch(format!(
            "Hamiltonian dimension {} vs state dimension {}",
            h.dim(),
            rho.dim()
        )));
    }
    Ok(-2.0 * (h.get(j, k) * rho.get(k, j)).im)
}

/// Net flux across one cut of rotor `rotor`'s cyclic coordinate:
/// `sum_j J(j -> j with rotor advanced by one)`. Positive means the rotor
/// turns towards increasing clock position.
pub fn rotor_winding_current(rho: &DensityMatrix, l: &Liouvillian, rotor: usize, kind: CurrentKind) -> Result<f64> {
    check_state(rho, l)?;
    let spec = l.spec();
    if rotor >= spec.n_rotors {
        return Err(Error::InvalidArgument(format!(
            "rotor {rotor} out of range for {} rotors",
            spec.n_rotors
        )));
    }
    let idx = spec.indexer();
    let mut total = 0.0;
    for j in 0..l.dim() {
        let k = idx.shift(j, rotor, 1);
        total += match kind {
            CurrentKind::Thermal => probability_current_thermal(rho, l, j, k)?,
            CurrentKind::Tunnel => probability_current_tunnel(rho, l.hamiltonian(), j, k)?,
        };
    }
    Ok(total)
}

/// Energy carried by bath `bath` through the jump `j -> k`: `g_(j->k),a w_(j->k) p_j`.
///
/// Summing over all channels reproduces [`heat_current_diag`].
pub fn energy_current_thermal(rho: &DensityMatrix, l: &Liouvillian, bath: usize, j: usize, k: usize) -> Result<f64> {
    check_state(rho, l)?;
    l.check_bath(bath)?;
    check_pair(l.dim(), j, k)?;
    let pj = rho.get(j, j).re;
    Ok(l.channels()
        .iter()
        .filter(|ch| ch.from == j && ch.to == k)
        .map(|ch| ch.rates[bath] * ch.omega * pj)
        .sum())
}

/// `(w_kj / 2) J_tun(j -> k)` with `w_kj = H_kk - H_jj`.
pub fn energy_current_tunnel(rho: &DensityMatrix, h: &Operator, j: usize, k: usize) -> Result<f64> {
    let current = probability_current_tunnel(rho, h, j, k)?;
    let omega = h.get(k, k).re - h.get(j, j).re;
    Ok(0.5 * omega * current)
}

/// Sum of [`energy_current_tunnel`] over all ordered pairs of basis states.
pub fn total_tunnel_energy_current(rho: &DensityMatrix, h: &Operator) -> Result<f64> {
    let d = h.dim();
    let mut total = 0.0;
    for j in 0..d {
        for k in 0..d {
            if j != k && h.get(j, k).norm() != 0.0 {
                total += energy_current_tunnel(rho, h, j, k)?;
            }
        }
    }
    Ok(total)
}

/// `dS/dt = -tr(L[rho] ln rho)`, with small eigenvalues clamped before the log.
pub fn entropy_rate(rho: &DensityMatrix, l: &Liouvillian) -> Result<f64> {
    check_state(rho, l)?;
    let log_rho = matrix_log_pinv(rho.operator(), l.tolerances().log_floor)?;
    let flow = l.apply(rho.operator())?;
    Ok(-trace_product(&flow, &log_rho)?.re)
}

/// `dS/dt - sum_a beta_a Q_D,a`.
pub fn entropy_production_rate(rho: &DensityMatrix, l: &Liouvillian) -> Result<f64> {
    Ok(entropy_rate(rho, l)? - entropy_flow(rho, l)?)
}

/// `sum_a beta_a Q_D,a`.
fn entropy_flow(rho: &DensityMatrix, l: &Liouvillian) -> Result<f64> {
    l.spec()
        .betas()
        .iter()
        .enumerate()
        .map(|(a, beta)| heat_current_diag(rho, l, a).map(|q| beta * q))
        .sum()
}

/// `-tr{L_a[rho] (ln rho - ln rho_a)}` with `rho_a` the Gibbs state of `H_D`
/// at the temperature of bath `a`. Non-negative for every state.
pub fn spohn_lhs(rho: &DensityMatrix, l: &Liouvillian, bath: usize) -> Result<f64> {
    check_state(rho, l)?;
    l.check_bath(bath)?;
    let beta = l.spec().baths[bath].beta();
    let log_rho = matrix_log_pinv(rho.operator(), l.tolerances().log_floor)?;
    let log_ref = log_gibbs_diag(beta, l.h_diag());
    let flow = l.apply_partial(rho.operator(), bath)?;
    Ok(-trace_product(&flow, &(&log_rho - &log_ref))?.re)
}

/// `ln(exp(-beta H) / Z)` for diagonal `H`, without clamping tiny weights.
fn log_gibbs_diag(beta: f64, h_d: &Operator) -> Operator {
    let e = h_d.real_diagonal();
    let e_min = e.iter().cloned().fold(f64::INFINITY, f64::min);
    let log_z = -beta * e_min + e.iter().map(|x| (-beta * (x - e_min)).exp()).sum::<f64>().ln();
    let logs: Vec<f64> = e.iter().map(|x| -beta * x - log_z).collect();
    Operator::from_real_diagonal(&logs)
}

/// All observables of one state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurrentsReport {
    pub q_dot_d: Vec<f64>,
    pub q_dot_nd: Vec<f64>,
    pub q_dot_total: Vec<f64>,
    pub j_th: Vec<f64>,
    pub j_tun: Vec<f64>,
    pub sigma_dot: f64,
    pub entropy: f64,
    pub first_law_residual: f64,
}

impl CurrentsReport {
    /// Report for a steady state, where `dS/dt = 0` and the entropy
    /// production reduces to `-sum_a beta_a Q_D,a`.
    pub fn steady(rho: &DensityMatrix, l: &Liouvillian) -> Result<Self> {
        let sigma = -entropy_flow(rho, l)?;
        Self::build(rho, l, sigma)
    }

    /// Report for an arbitrary state with the full entropy production.
    pub fn transient(rho: &DensityMatrix, l: &Liouvillian) -> Result<Self> {
        let sigma = entropy_production_rate(rho, l)?;
        Self::build(rho, l, sigma)
    }

    fn build(rho: &DensityMatrix, l: &Liouvillian, sigma_dot: f64) -> Result<Self> {
        let n_baths = l.n_baths();
        let n_rotors = l.spec().n_rotors;
        let q_dot_d = (0..n_baths)
            .map(|a| heat_current_diag(rho, l, a))
            .collect::<Result<Vec<_>>>()?;
        let q_dot_nd = (0..n_baths)
            .map(|a| heat_current_nondiag(rho, l, a))
            .collect::<Result<Vec<_>>>()?;
        let q_dot_total = (0..n_baths)
            .map(|a| heat_current_total(rho, l, a))
            .collect::<Result<Vec<_>>>()?;
        let j_th = (0..n_rotors)
            .map(|k| rotor_winding_current(rho, l, k, CurrentKind::Thermal))
            .collect::<Result<Vec<_>>>()?;
        let j_tun = (0..n_rotors)
            .map(|k| rotor_winding_current(rho, l, k, CurrentKind::Tunnel))
            .collect::<Result<Vec<_>>>()?;
        let first_law_residual = q_dot_d.iter().chain(&q_dot_nd).sum::<f64>().abs();
        Ok(Self {
            q_dot_d,
            q_dot_nd,
            q_dot_total,
            j_th,
            j_tun,
            sigma_dot,
            entropy: von_neumann_entropy(rho),
            first_law_residual,
        })
    }

    pub fn n_baths(&self) -> usize {
        self.q_dot_d.len()
    }

    /// Column names matching [`CurrentsReport::csv_row`].
    pub fn csv_header(n_baths: usize, n_rotors: usize) -> Vec<String> {
        let mut cols = Vec::new();
        for prefix in ["q_dot_d", "q_dot_nd", "q_dot_total"] {
            cols.extend((0..n_baths).map(|a| format!("{prefix}_{a}")));
        }
        for prefix in ["j_th", "j_tun"] {
            cols.extend((0..n_rotors).map(|k| format!("{prefix}_{k}")));
        }
        cols.extend(["sigma_dot", "entropy", "first_law_residual"].map(String::from));
        cols
    }

    pub fn csv_row(&self) -> Vec<String> {
        self.q_dot_d
            .iter()
            .chain(&self.q_dot_nd)
            .chain(&self.q_dot_total)
            .chain(&self.j_th)
            .chain(&self.j_tun)
            .chain([self.sigma_dot, self.entropy, self.first_law_residual].iter())
            .map(|&v| format_float(v))
            .collect()
    }
}

/// Round-trip float formatting used in every CSV.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}
