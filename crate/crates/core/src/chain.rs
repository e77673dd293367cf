//! Finite-state continuous-time Markov chain for the economic regime.
//!
//! Convention: the generator is stored **column-wise**. Entry `q[(j, i)]` is
//! the jump rate from state `i` into state `j`, and every column sums to zero.
//! With states encoded as unit column vectors `e_i` this gives
//! `E[Z_t | Z_0] = exp(Q t) Z_0`, so `exp(Q t)[(j, i)] = P(Z_t = j | Z_0 = i)`.
//! Most textbooks use the transposed (row) convention.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};

const COLUMN_SUM_TOL: f64 = 1e-9;
const NEGATIVE_RATE_TOL: f64 = 1e-12;
const ROW_SUM_TOL: f64 = 1e-6;
const CLAMP_TOL: f64 = 1e-12;

/// Rate matrix of the regime chain, column convention.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    q: DMatrix<f64>,
}

/// One-step transition probabilities of a discrete-time chain, row convention
/// (`p[(i, j)] = P(next = j | now = i)`), describing a step of length `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    p: DMatrix<f64>,
    dt: f64,
}

/// Realisation of the chain on `[0, horizon]`: state `states[k]` holds on
/// `[times[k], times[k + 1])`.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePath {
    pub times: Vec<f64>,
    pub states: Vec<usize>,
    pub horizon: f64,
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::Dimension("matrix must have at least one row".into()));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Dimension(format!(
                "row {i} has {} entries, expected {n} (matrix must be square)",
                row.len()
            )));
        }
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Checks the column-convention generator constraints. Off-diagonal entries in
/// `[-1e-12, 0)` are clamped to zero.
pub fn validate_generator(q: DMatrix<f64>) -> Result<Generator> {
    let n = q.nrows();
    if n == 0 || q.ncols() != n {
        return Err(Error::Dimension(format!(
            "generator must be square and non-empty, got {}x{}",
            q.nrows(),
            q.ncols()
        )));
    }
    let mut q = q;
    for j in 0..n {
        for i in 0..n {
            let v = q[(i, j)];
            if !v.is_finite() {
                return Err(Error::NotAGenerator {
                    row: i,
                    col: j,
                    value: v,
                    reason: "entry is not finite",
                });
            }
            if i != j {
                if v < -NEGATIVE_RATE_TOL {
                    return Err(Error::NotAGenerator {
                        row: i,
                        col: j,
                        value: v,
                        reason: "off-diagonal rate is negative",
                    });
                }
                if v < 0.0 {
                    q[(i, j)] = 0.0;
                }
            } else if v > NEGATIVE_RATE_TOL {
                return Err(Error::NotAGenerator {
                    row: i,
                    col: j,
                    value: v,
                    reason: "diagonal entry is positive",
                });
            }
        }
    }
    for j in 0..n {
        let sum: f64 = q.column(j).iter().sum();
        if sum.abs() > COLUMN_SUM_TOL {
            return Err(Error::NotAGenerator {
                row: j,
                col: j,
                value: sum,
                reason: "column does not sum to zero",
            });
        }
    }
    Ok(Generator { q })
}

impl TransitionMatrix {
    /// Builds from row-major rows. Rows must sum to one within `1e-6`; a
    /// defective row is reported, never renormalised.
    pub fn from_rows(rows: &[Vec<f64>], dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::BadTransition(format!("dt must be positive, got {dt}")));
        }
        let p = rows_to_matrix(rows)?;
        let n = p.nrows();
        for i in 0..n {
            for j in 0..n {
                let v = p[(i, j)];
                if !(v.is_finite() && (0.0..=1.0).contains(&v)) {
                    return Err(Error::BadTransition(format!(
                        "entry ({i}, {j}) = {v} is not a probability"
                    )));
                }
            }
            let sum: f64 = p.row(i).iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::NotStochastic { row: i, sum });
            }
        }
        Ok(TransitionMatrix { p, dt })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
}

impl Generator {
    /// Validates a column-convention rate matrix given as row-major rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        validate_generator(rows_to_matrix(rows)?)
    }

    /// First-order bridge from a discrete step to rates: `((P - I) / dt)^T`.
    /// This is an approximation of the matrix logarithm, accurate when the
    /// off-diagonal probabilities are small.
    pub fn from_transition(tm: &TransitionMatrix) -> Result<Self> {
        let n = tm.p.nrows();
        let q = (&tm.p - DMatrix::<f64>::identity(n, n)).transpose() / tm.dt;
        validate_generator(q)
    }

    /// Frozen chain on `n` states.
    pub fn zero(n: usize) -> Self {
        Generator {
            q: DMatrix::zeros(n.max(1), n.max(1)),
        }
    }

    pub fn n(&self) -> usize {
        self.q.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.q
    }

    /// Total rate of leaving state `i`.
    pub fn exit_rate(&self, i: usize) -> f64 {
        -self.q[(i, i)]
    }

    /// `exp(Q t)`, column-stochastic.
    pub fn exp(&self, t: f64) -> Result<DMatrix<f64>> {
        matrix_exp(self, t)
    }

    /// Law of `Z_t` given the law `p0` of `Z_0`.
    pub fn distribution_at(&self, p0: &[f64], t: f64) -> Result<Vec<f64>> {
        distribution_at(self, p0, t)
    }

    pub fn sample_path<R: Rng + ?Sized>(&self, z0: usize, horizon: f64, rng: &mut R) -> Result<StatePath> {
        sample_path(self, z0, horizon, rng)
    }

    pub fn check_state(&self, z: usize) -> Result<()> {
        if z < self.n() {
            Ok(())
        } else {
            Err(Error::StateOutOfRange { state: z, n: self.n() })
        }
    }
}

// Coefficients of the [13/13] Padé approximant to exp, and the largest
// 1-norm for which it is accurate to double precision (Higham 2005).
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// Exponential of a general square matrix by scaling and squaring with the
/// diagonal Padé approximant of order 13.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    let norm = one_norm(a);
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a = a / 2f64.powi(squarings);

    let b = &PADE13;
    let ident = DMatrix::<f64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9])
        + &a6 * b[7]
        + &a4 * b[5]
        + &a2 * b[3]
        + &ident * b[1];
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8])
        + &a6 * b[6]
        + &a4 * b[4]
        + &a2 * b[2]
        + &ident * b[0];

    let lhs = &v - &u;
    let rhs = &v + &u;
    let mut r = lhs
        .lu()
        .solve(&rhs)
        .expect("Padé denominator is nonsingular after scaling");
    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}

fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(Q t)` for a generator; tiny negative round-off entries are clamped.
pub fn matrix_exp(g: &Generator, t: f64) -> Result<DMatrix<f64>> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::TimeOrder { start: 0.0, end: t });
    }
    let n = g.n();
    if t == 0.0 {
        return Ok(DMatrix::identity(n, n));
    }
    let mut p = expm(&(&g.q * t));
    for v in p.iter_mut() {
        if *v < 0.0 && *v >= -CLAMP_TOL {
            *v = 0.0;
        }
    }
    Ok(p)
}

pub fn distribution_at(g: &Generator, p0: &[f64], t: f64) -> Result<Vec<f64>> {
    let n = g.n();
    if p0.len() != n {
        return Err(Error::BadDistribution(format!(
            "length {} does not match {n} states",
            p0.len()
        )));
    }
    if let Some((i, v)) = p0.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::BadDistribution(format!("entry {i} = {v}")));
    }
    let sum: f64 = p0.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::BadDistribution(format!("sums to {sum}")));
    }
    let p = matrix_exp(g, t)?;
    let out = &p * nalgebra::DVector::from_column_slice(p0);
    Ok(out.iter().copied().collect())
}

/// Exact simulation: exponential holding times with the exit rate of the
/// current state, then a jump to `j` with probability `q[(j, i)] / exit_rate`.
pub fn sample_path<R: Rng + ?Sized>(
    g: &Generator,
    z0: usize,
    horizon: f64,
    rng: &mut R,
) -> Result<StatePath> {
    g.check_state(z0)?;
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::TimeOrder { start: 0.0, end: horizon });
    }
    let mut times = vec![0.0];
    let mut states = vec![z0];
    let mut t = 0.0;
    let mut state = z0;
    loop {
        let rate = g.exit_rate(state);
        if rate <= 0.0 {
            break;
        }
        let hold: f64 = Exp1.sample(rng);
        t += hold / rate;
        if t > horizon {
            break;
        }
        let mut u = rng.random::<f64>() * rate;
        let mut next = state;
        for j in (0..g.n()).filter(|&j| j != state) {
            let r = g.q[(j, state)];
            next = j;
            if u < r {
                break;
            }
            u -= r;
        }
        // Round-off can leave `u` just above the last rate; the loop then
        // settles on the last state with a positive rate.
        if g.q[(next, state)] <= 0.0 {
            next = (0..g.n())
                .rev()
                .find(|&j| j != state && g.q[(j, state)] > 0.0)
                .unwrap_or(state);
        }
        state = next;
        times.push(t);
        states.push(state);
    }
    Ok(StatePath { times, states, horizon })
}

impl StatePath {
    /// State occupied at time `t` (right-continuous).
    pub fn state_at(&self, t: f64) -> usize {
        let k = self.times.partition_point(|&s| s <= t);
        self.states[k.saturating_sub(1)]
    }

    pub fn final_state(&self) -> usize {
        *self.states.last().expect("path has an initial state")
    }

    pub fn jumps(&self) -> usize {
        self.states.len() - 1
    }

    /// Time spent in each of `n` states over `[0, horizon]`.
    pub fn occupation(&self, n: usize) -> Vec<f64> {
        let mut occ = vec![0.0; n];
        for (k, &s) in self.states.iter().enumerate() {
            let end = self.times.get(k + 1).copied().unwrap_or(self.horizon);
            occ[s] += end - self.times[k];
        }
        occ
    }
}
