//! Chiral clock-model rotor chains: Hamiltonian, jump channels and bath rates.
//!
//! Energies are in units with hbar = k_B = 1. Each rotor has `n_levels`
//! clock positions; psi = 2 pi / n_levels and nu = exp(i psi).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qops::{embed_site, Operator, ONE, ZERO};

/// Tolerance on the symmetry of `coupling` and antisymmetry of `phase`.
const SYMMETRY_TOL: f64 = 1e-12;

/// A thermal bath attached to one rotor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathSpec {
    pub temperature: f64,
    /// Coupling g (sets the rate scale).
    pub coupling: f64,
    /// Index of the rotor whose transitions this bath drives.
    pub rotor: usize,
}

impl BathSpec {
    pub fn new(temperature: f64, coupling: f64, rotor: usize) -> Self {
        Self {
            temperature,
            coupling,
            rotor,
        }
    }

    pub fn beta(&self) -> f64 {
        1.0 / self.temperature
    }
}

/// Full description of a rotor machine.
///
/// `coupling[i][j]` is K_ij (symmetric, zero diagonal) and `phase[i][j]` is
/// phi_ij (antisymmetric). Only pairs with `i < j` enter the Hamiltonian once
/// the invariants hold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClockSystemSpec {
    pub n_rotors: usize,
    pub n_levels: usize,
    pub tau: Vec<f64>,
    pub coupling: Vec<Vec<f64>>,
    pub phase: Vec<Vec<f64>>,
    pub baths: Vec<BathSpec>,
}

impl ClockSystemSpec {
    /// Uncoupled rotors with no field and no baths.
    pub fn new(n_rotors: usize, n_levels: usize) -> Self {
        Self {
            n_rotors,
            n_levels,
            tau: vec![0.0; n_rotors],
            coupling: vec![vec![0.0; n_rotors]; n_rotors],
            phase: vec![vec![0.0; n_rotors]; n_rotors],
            baths: Vec::new(),
        }
    }

    pub fn with_pair(mut self, i: usize, j: usize, coupling: f64, phase: f64) -> Self {
        self.set_coupling(i, j, coupling);
        self.set_phase(i, j, phase);
        self
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau.iter_mut().for_each(|t| *t = tau);
        self
    }

    pub fn with_bath(mut self, temperature: f64, coupling: f64, rotor: usize) -> Self {
        self.baths.push(BathSpec::new(temperature, coupling, rotor));
        self
    }

    /// Sets K_ij = K_ji.
    pub fn set_coupling(&mut self, i: usize, j: usize, value: f64) {
        self.coupling[i][j] = value;
        self.coupling[j][i] = value;
    }

    /// Sets phi_ij = -phi_ji.
    pub fn set_phase(&mut self, i: usize, j: usize, value: f64) {
        self.phase[i][j] = value;
        self.phase[j][i] = -value;
    }

    pub fn dim(&self) -> usize {
        self.n_levels.pow(self.n_rotors as u32)
    }

    pub fn psi(&self) -> f64 {
        2.0 * PI / self.n_levels as f64
    }

    pub fn n_baths(&self) -> usize {
        self.baths.len()
    }

    pub fn indexer(&self) -> BasisIndexer {
        BasisIndexer::new(self.n_rotors, self.n_levels)
    }

    pub fn betas(&self) -> Vec<f64> {
        self.baths.iter().map(BathSpec::beta).collect()
    }

    /// Checks every structural invariant; errors name the offending key.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_rotors;
        if n == 0 {
            return Err(Error::InvalidSpec("n_rotors must be positive".into()));
        }
        if self.n_levels < 2 {
            return Err(Error::InvalidSpec(format!(
                "n_levels must be at least 2, got {}",
                self.n_levels
            )));
        }
        if self
            .n_levels
            .checked_pow(n as u32)
            .map_or(true, |d| d > 1 << 16)
        {
            return Err(Error::InvalidSpec(format!(
                "Hilbert space {}^{} is too large",
                self.n_levels, n
            )));
        }
        if self.tau.len() != n {
            return Err(Error::InvalidSpec(format!(
                "tau has {} entries, expected {n}",
                self.tau.len()
            )));
        }
        for (k, t) in self.tau.iter().enumerate() {
            if !t.is_finite() {
                return Err(Error::InvalidSpec(format!("tau[{k}] is not finite")));
            }
        }
        check_square("coupling", &self.coupling, n)?;
        check_square("phase", &self.phase, n)?;
        for i in 0..n {
            if self.coupling[i][i] != 0.0 {
                return Err(Error::InvalidSpec(format!(
                    "coupling[{i}][{i}] must be zero"
                )));
            }
            for j in i + 1..n {
                let (a, b) = (self.coupling[i][j], self.coupling[j][i]);
                if (a - b).abs() > SYMMETRY_TOL {
                    return Err(Error::InvalidSpec(format!(
                        "coupling[{i}][{j}] = {a} differs from coupling[{j}][{i}] = {b}"
                    )));
                }
                let (p, q) = (self.phase[i][j], self.phase[j][i]);
                if (p + q).abs() > SYMMETRY_TOL {
                    return Err(Error::InvalidSpec(format!(
                        "phase[{j}][{i}] = {q} must equal -phase[{i}][{j}] = {}",
                        -p
                    )));
                }
            }
            if self.phase[i][i] != 0.0 {
                return Err(Error::InvalidSpec(format!("phase[{i}][{i}] must be zero")));
            }
        }
        for (a, bath) in self.baths.iter().enumerate() {
            if !(bath.temperature > 0.0 && bath.temperature.is_finite()) {
                return Err(Error::InvalidSpec(format!(
                    "baths[{a}].temperature must be positive, got {}",
                    bath.temperature
                )));
            }
            if !(bath.coupling >= 0.0 && bath.coupling.is_finite()) {
                return Err(Error::InvalidSpec(format!(
                    "baths[{a}].coupling must be non-negative, got {}",
                    bath.coupling
                )));
            }
            if bath.rotor >= n {
                return Err(Error::InvalidSpec(format!(
                    "baths[{a}].rotor = {} out of range for {n} rotors",
                    bath.rotor
                )));
            }
        }
        Ok(())
    }
}

fn check_square(name: &str, m: &[Vec<f64>], n: usize) -> Result<()> {
    if m.len() != n {
        return Err(Error::InvalidSpec(format!(
            "{name} has {} rows, expected {n}",
            m.len()
        )));
    }
    for (i, row) in m.iter().enumerate() {
        if row.len() != n {
            return Err(Error::InvalidSpec(format!(
                "{name}[{i}] has {} entries, expected {n}",
                row.len()
            )));
        }
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec(format!("{name}[{i}][{j}] is not finite")));
        }
    }
    Ok(())
}

/// Maps between flat basis indices and per-rotor clock positions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasisIndexer {
    n_levels: usize,
    strides: Vec<usize>,
    dim: usize,
}

impl BasisIndexer {
    pub fn new(n_rotors: usize, n_levels: usize) -> Self {
        let mut strides = vec![1; n_rotors];
        for k in (0..n_rotors.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * n_levels;
        }
        let dim = n_levels.pow(n_rotors as u32);
        Self {
            n_levels,
            strides,
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_rotors(&self) -> usize {
        self.strides.len()
    }

    pub fn digit(&self, index: usize, rotor: usize) -> usize {
        (index / self.strides[rotor]) % self.n_levels
    }

    pub fn digits(&self, index: usize) -> Vec<usize> {
        (0..self.n_rotors()).map(|k| self.digit(index, k)).collect()
    }

    pub fn index(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.strides).map(|(d, s)| d * s).sum()
    }

    /// Moves rotor `rotor` by `delta` positions, cyclically.
    pub fn shift(&self, index: usize, rotor: usize, delta: isize) -> usize {
        let ns = self.n_levels as isize;
        let current = self.digit(index, rotor) as isize;
        let next = (current + delta).rem_euclid(ns) as usize;
        index - (current as usize) * self.strides[rotor] + next * self.strides[rotor]
    }

    /// If `a` and `b` differ in exactly one rotor by one step, returns that rotor
    /// and the direction (`+1` when `b` is `a` advanced).
    pub fn single_flip(&self, a: usize, b: usize) -> Option<(usize, i8)> {
        let mut found = None;
        for k in 0..self.n_rotors() {
            let (da, db) = (self.digit(a, k), self.digit(b, k));
            if da == db {
                continue;
            }
            if found.is_some() {
                return None;
            }
            let up = (da + 1) % self.n_levels == db;
            let down = (db + 1) % self.n_levels == da;
            found = match (up, down) {
                (true, _) => Some((k, 1)),
                (false, true) => Some((k, -1)),
                _ => return None,
            };
        }
        found
    }
}

/// One allowed transition `from -> to` with jump operator |to><from|.
#[derive(Clone, Debug, PartialEq)]
pub struct JumpChannel {
    pub from: usize,
    pub to: usize,
    pub rotor: usize,
    pub direction: i8,
    /// Bohr frequency `H_{to,to} - H_{from,from}`.
    pub omega: f64,
    /// Rate contributed by each bath.
    pub rates: Vec<f64>,
}

impl JumpChannel {
    pub fn total_rate(&self) -> f64 {
        self.rates.iter().sum()
    }

    pub fn jump_operator(&self, dim: usize) -> Operator {
        Operator::ket_bra(dim, self.to, self.from)
    }
}

/// The clock operators: mu = diag(1, nu, ..., nu^{n-1}) and the cyclic shift
/// sigma with ones on the first superdiagonal and at the bottom-left corner.
pub fn clock_matrices(n_levels: usize) -> Result<(Operator, Operator)> {
    if n_levels < 2 {
        return Err(Error::InvalidArgument(format!(
            "clock matrices need at least 2 levels, got {n_levels}"
        )));
    }
    let psi = 2.0 * PI / n_levels as f64;
    let mu = Operator::from_fn(n_levels, |i, j| {
        if i == j {
            Complex64::from_polar(1.0, psi * i as f64)
        } else {
            ZERO
        }
    });
    let sigma = Operator::from_fn(n_levels, |i, j| {
        if j == (i + 1) % n_levels {
            ONE
        } else {
            ZERO
        }
    });
    Ok((mu, sigma))
}

/// `H = sum_i tau_i (sigma_i + sigma_i^dagger)
///    + sum_{i<j} (K_ij / 4) (mu_i mu_j^dagger e^{i phi_ij} + h.c.)`.
///
/// On a basis state each pair contributes `(K_ij / 2) cos(psi (n_i - n_j) + phi_ij)`.
pub fn build_hamiltonian(spec: &ClockSystemSpec) -> Result<Operator> {
    spec.validate()?;
    let n = spec.n_rotors;
    let dims = vec![spec.n_levels; n];
    let dim = spec.dim();
    let (mu, sigma) = clock_matrices(spec.n_levels)?;
    let tunnel = &sigma + &sigma.dagger();
    let mut h = Operator::zeros(dim);
    for k in 0..n {
        if spec.tau[k] != 0.0 {
            h = &h + &embed_site(&tunnel, k, &dims)?.scale_real(spec.tau[k]);
        }
    }
    let mu_diag: Vec<Vec<Complex64>> = (0..n)
        .map(|k| embed_site(&mu, k, &dims).map(|op| op.diagonal()))
        .collect::<Result<_>>()?;
    let mut interaction = vec![ZERO; dim];
    for i in 0..n {
        for j in i + 1..n {
            let k_ij = spec.coupling[i][j];
            if k_ij == 0.0 {
                continue;
            }
            let chiral = Complex64::from_polar(1.0, spec.phase[i][j]);
            for (s, slot) in interaction.iter_mut().enumerate() {
                let term = mu_diag[i][s] * mu_diag[j][s].conj() * chiral;
                *slot += (term + term.conj()) * (k_ij / 4.0);
            }
        }
    }
    for (s, value) in interaction.into_iter().enumerate() {
        *h.get_mut(s, s) += value;
    }
    Ok(h)
}

/// Splits `h` into its diagonal and off-diagonal parts in the site basis.
pub fn diagonal_split(h: &Operator) -> (Operator, Operator) {
    let h_d = Operator::from_diagonal(&h.diagonal());
    let h_nd = h - &h_d;
    (h_d, h_nd)
}

/// All single-rotor jumps: for each basis state, each rotor and both
/// directions, in that nesting order.
pub fn enumerate_jump_channels(spec: &ClockSystemSpec, h: &Operator) -> Result<Vec<JumpChannel>> {
    spec.validate()?;
    if h.dim() != spec.dim() {
        return Err(Error::DimensionMismatch(format!(
            "Hamiltonian dimension {} does not match spec dimension {}",
            h.dim(),
            spec.dim()
        )));
    }
    let idx = spec.indexer();
    let energies = h.real_diagonal();
    let betas = spec.betas();
    let mut channels = Vec::with_capacity(spec.dim() * spec.n_rotors * 2);
    for from in 0..spec.dim() {
        for rotor in 0..spec.n_rotors {
            for direction in [1i8, -1] {
                let to = idx.shift(from, rotor, direction as isize);
                let omega = energies[to] - energies[from];
                let rates = spec
                    .baths
                    .iter()
                    .zip(&betas)
                    .map(|(bath, &beta)| {
                        if bath.rotor == rotor {
                            bosonic_rate(omega, beta, bath.coupling)
                        } else {
                            Ok(0.0)
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                channels.push(JumpChannel {
                    from,
                    to,
                    rotor,
                    direction,
                    omega,
                    rates,
                });
            }
        }
    }
    Ok(channels)
}

/// Bosonic bath rate obeying `rate(w) / rate(-w) = exp(-beta w)`.
///
/// Emission (`w < 0`) runs at `g |w| (n + 1)` and absorption at
/// `g |w| (n + 1) exp(-beta w) = g |w| n`, with `n` the Bose occupation at
/// `|w|`. At `w = 0` the continuous limit `g / beta` is returned.
pub fn bosonic_rate(omega: f64, beta: f64, g: f64) -> Result<f64> {
    if !(beta > 0.0) || beta.is_nan() {
        return Err(Error::InvalidArgument(format!(
            "inverse temperature must be positive, got {beta}"
        )));
    }
    if !(g >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "bath coupling must be non-negative, got {g}"
        )));
    }
    if omega == 0.0 {
        return Ok(g / beta);
    }
    let x = beta * omega.abs();
    // 1 - exp(-x), accurate for small x.
    let base = g * omega.abs() / (-(-x).exp_m1());
    if omega > 0.0 {
        Ok(base * (-beta * omega).exp())
    } else {
        Ok(base)
    }
}

/// Pair interaction energy `(K / 2) cos(psi (n1 - n2) + phi)`.
pub fn interaction_energy(n1: usize, n2: usize, coupling: f64, phase: f64, n_levels: usize) -> f64 {
    let psi = 2.0 * PI / n_levels as f64;
    0.5 * coupling * (psi * (n1 as f64 - n2 as f64) + phase).cos()
}
