//! Monte Carlo check of the Cramér–Rao bound for the two-outcome
//! measurement that projects back onto the probe state.
//!
//! Each run draws `N` yes/no outcomes with probability `P(theta_true)` and
//! inverts `P` to get an estimate; the spread of the estimates over runs is
//! compared with `1/sqrt(N F)`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numfmt::sig17;
use crate::spin::{HermitianSpectrum, SpinOperator, SpinState};

/// Spectral form of `P(theta) = |<psi| exp(-i theta G) |psi>|^2`.
///
/// With `p_k = |<v_k|psi>|^2` the overlap is `sum_k p_k exp(-i theta l_k)`,
/// which gives `P` and its derivatives in closed form.
#[derive(Debug, Clone)]
pub struct SurvivalModel {
    weights: Vec<f64>,
    eigenvalues: Vec<f64>,
}

impl SurvivalModel {
    pub fn new(psi: &SpinState, g: &SpinOperator) -> Result<Self> {
        g.ensure_hermitian()?;
        if g.j() != psi.j() {
            return Err(Error::DimensionMismatch {
                expected: psi.dim(),
                found: g.dim(),
            });
        }
        let spectrum = HermitianSpectrum::of(g)?;
        let weights = spectrum
            .vectors
            .column_iter()
            .map(|v| v.dotc(psi.amplitudes()).norm_sqr())
            .collect();
        Ok(SurvivalModel {
            weights,
            eigenvalues: spectrum.values.iter().copied().collect(),
        })
    }

    /// Overlap and its first two derivatives in `theta`.
    fn overlap(&self, theta: f64) -> [Complex64; 3] {
        let mut out = [Complex64::new(0.0, 0.0); 3];
        for (&p, &l) in self.weights.iter().zip(&self.eigenvalues) {
            let phase = Complex64::from_polar(p, -theta * l);
            out[0] += phase;
            out[1] += phase * Complex64::new(0.0, -l);
            out[2] += phase * (-l * l);
        }
        out
    }

    pub fn probability(&self, theta: f64) -> f64 {
        self.overlap(theta)[0].norm_sqr().clamp(0.0, 1.0)
    }

    pub fn derivative(&self, theta: f64) -> f64 {
        let [a, da, _] = self.overlap(theta);
        2.0 * (a.conj() * da).re
    }

    pub fn second_derivative(&self, theta: f64) -> f64 {
        let [a, da, dda] = self.overlap(theta);
        2.0 * (da.norm_sqr() + (a.conj() * dda).re)
    }

    /// `4 Var(G)`.
    pub fn fisher_information(&self) -> f64 {
        let mean: f64 = self.weights.iter().zip(&self.eigenvalues).map(|(p, l)| p * l).sum();
        let var: f64 = self
            .weights
            .iter()
            .zip(&self.eigenvalues)
            .map(|(p, l)| p * (l - mean).powi(2))
            .sum();
        4.0 * var
    }

    fn spread(&self) -> f64 {
        let active = self
            .weights
            .iter()
            .zip(&self.eigenvalues)
            .filter(|(p, _)| **p > 1e-15)
            .map(|(_, &l)| l);
        let (lo, hi) = active.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), l| (a.min(l), b.max(l)));
        hi - lo
    }

    /// First `theta > 0` where `f` changes sign.
    fn first_crossing(&self, f: impl Fn(f64) -> f64, what: &str) -> Result<f64> {
        let spread = self.spread();
        if !(spread > 0.0) || self.fisher_information() <= 0.0 {
            return Err(Error::DegenerateModel("the state is an eigenstate of the generator".into()));
        }
        let h = PI / (64.0 * spread);
        let limit = 1e4 * PI / spread;
        let mut a = 0.0;
        let mut b = h;
        let start = f(0.5 * h).signum();
        while f(b).signum() == start {
            a = b;
            b += h;
            if b > limit {
                return Err(Error::DegenerateModel(format!("no {what} found")));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if f(mid).signum() == start {
                a = mid;
            } else {
                b = mid;
            }
        }
        Ok(0.5 * (a + b))
    }

    /// First maximum of `|P'|` after zero.
    pub fn theta_half(&self) -> Result<f64> {
        self.first_crossing(|t| self.second_derivative(t), "inflection point")
    }

    /// `[0, first local minimum of P]`, on which `P` decreases.
    pub fn monotone_bracket(&self) -> Result<(f64, f64)> {
        Ok((0.0, self.first_crossing(|t| self.derivative(t), "local minimum")?))
    }
}

/// `|<psi| exp(-i theta G) |psi>|^2`.
pub fn survival_probability(psi: &SpinState, g: &SpinOperator, theta: f64) -> Result<f64> {
    Ok(SurvivalModel::new(psi, g)?.probability(theta))
}

const MONOTONE_SAMPLES: usize = 64;
const INVERSION_TOL: f64 = 1e-12;

/// Inverts `P(theta) = count / n` by bisection on `bracket`, clipping to the
/// endpoint when the frequency lies outside `P`'s range there.
pub fn estimate_theta(count: u64, n: u64, model: &SurvivalModel, bracket: (f64, f64)) -> Result<f64> {
    let (lo, hi) = bracket;
    if n == 0 || count > n {
        return Err(Error::InvalidInput(format!("count {count} out of range for N = {n}")));
    }
    if !(lo < hi) {
        return Err(Error::InvalidInput(format!("empty bracket [{lo}, {hi}]")));
    }
    let scale = model.fisher_information().sqrt().max(1.0);
    let (mut rising, mut falling) = (false, false);
    for i in 0..=MONOTONE_SAMPLES {
        let d = model.derivative(lo + (hi - lo) * i as f64 / MONOTONE_SAMPLES as f64);
        rising |= d > 1e-12 * scale;
        falling |= d < -1e-12 * scale;
    }
    if rising && falling {
        return Err(Error::NonMonotone { lo, hi });
    }
    let target = count as f64 / n as f64;
    let (p_lo, p_hi) = (model.probability(lo), model.probability(hi));
    let increasing = p_hi > p_lo;
    // Work with a function that increases along the bracket.
    let g = |t: f64| if increasing { model.probability(t) - target } else { target - model.probability(t) };
    if g(lo) >= 0.0 {
        return Ok(lo);
    }
    if g(hi) <= 0.0 {
        return Ok(hi);
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > INVERSION_TOL {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if g(mid) < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

#[derive(Debug, Clone)]
pub struct EstimationConfig {
    pub psi: SpinState,
    pub generator: SpinOperator,
    pub theta_true: f64,
    pub trials_per_run: u64,
    pub runs: usize,
    pub seed: u64,
}

pub const MIN_TRIALS: u64 = 100;

impl EstimationConfig {
    /// Checks the parameters and that `theta_true` lies in `(0, theta_half)`,
    /// where `P` is steep enough for inversion (`P'(0) = 0` because `P` is
    /// even in `theta`).
    pub fn validate(&self) -> Result<SurvivalModel> {
        let model = self.basic_checks()?;
        if self.runs < 2 {
            return Err(Error::InvalidInput("at least two runs are needed for a spread".into()));
        }
        let half = model.theta_half()?;
        if !(self.theta_true > 0.0 && self.theta_true < half) {
            return Err(Error::InvalidInput(format!(
                "theta_true = {} must lie in (0, {half})",
                self.theta_true
            )));
        }
        Ok(model)
    }

    fn basic_checks(&self) -> Result<SurvivalModel> {
        if self.trials_per_run < MIN_TRIALS {
            return Err(Error::InvalidInput(format!(
                "trials per run must be at least {MIN_TRIALS}, got {}",
                self.trials_per_run
            )));
        }
        if self.runs == 0 {
            return Err(Error::InvalidInput("runs must be positive".into()));
        }
        if !self.theta_true.is_finite() {
            return Err(Error::InvalidInput("theta_true must be finite".into()));
        }
        SurvivalModel::new(&self.psi, &self.generator)
    }
}

fn run_rng(seed: u64, run: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run as u64);
    rng
}

/// Number of "still in `psi`" outcomes for each run. Each run has its own
/// random stream keyed by `(seed, run)`, so results do not depend on
/// scheduling.
pub fn simulate_trials(config: &EstimationConfig) -> Result<Vec<u64>> {
    let model = config.basic_checks()?;
    let p = model.probability(config.theta_true);
    let dist = Binomial::new(config.trials_per_run, p).map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok((0..config.runs)
        .into_par_iter()
        .map(|run| dist.sample(&mut run_rng(config.seed, run)))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimationResult {
    pub counts: Vec<u64>,
    pub theta_hats: Vec<f64>,
    pub empirical_sigma: f64,
    pub crb_sigma: f64,
    pub ratio: f64,
    pub fisher_information: f64,
    pub bracket: (f64, f64),
}

/// Simulates every run, inverts each count, and compares the sample spread
/// of the estimates with `1/sqrt(N F)`.
pub fn crb_report(config: &EstimationConfig) -> Result<EstimationResult> {
    let model = config.validate()?;
    let fisher = model.fisher_information();
    if fisher <= 0.0 {
        return Err(Error::DegenerateModel("zero Fisher information".into()));
    }
    let bracket = model.monotone_bracket()?;
    let counts = simulate_trials(config)?;
    let theta_hats = counts
        .par_iter()
        .map(|&c| estimate_theta(c, config.trials_per_run, &model, bracket))
        .collect::<Result<Vec<_>>>()?;
    let n = theta_hats.len() as f64;
    let mean = theta_hats.iter().sum::<f64>() / n;
    let empirical_sigma = (theta_hats.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let crb_sigma = 1.0 / (config.trials_per_run as f64 * fisher).sqrt();
    Ok(EstimationResult {
        counts,
        theta_hats,
        empirical_sigma,
        crb_sigma,
        ratio: empirical_sigma / crb_sigma,
        fisher_information: fisher,
        bracket,
    })
}

/// Headline numbers of a run, for JSON output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimationSummary {
    pub theta_true: f64,
    pub trials_per_run: u64,
    pub runs: usize,
    pub seed: u64,
    pub mean_theta_hat: f64,
    pub empirical_sigma: f64,
    pub crb_sigma: f64,
    pub ratio: f64,
    pub fisher_information: f64,
}

impl EstimationResult {
    pub fn summary(&self, config: &EstimationConfig) -> EstimationSummary {
        EstimationSummary {
            theta_true: config.theta_true,
            trials_per_run: config.trials_per_run,
            runs: config.runs,
            seed: config.seed,
            mean_theta_hat: self.theta_hats.iter().sum::<f64>() / self.theta_hats.len() as f64,
            empirical_sigma: self.empirical_sigma,
            crb_sigma: self.crb_sigma,
            ratio: self.ratio,
            fisher_information: self.fisher_information,
        }
    }

    /// `run,theta_hat` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["run", "theta_hat"])?;
        for (run, t) in self.theta_hats.iter().enumerate() {
            w.write_record([run.to_string(), sig17(*t)])?;
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensing::noon_state;
    use crate::spin::{build_spin_operators, SpinJ};
    use approx::assert_abs_diff_eq;

    fn noon_config(jv: u32, theta: f64, n: u64, runs: usize, seed: u64) -> EstimationConfig {
        let j = SpinJ::integer(jv);
        EstimationConfig {
            psi: noon_state(j).unwrap(),
            generator: build_spin_operators(j).jz,
            theta_true: theta,
            trials_per_run: n,
            runs,
            seed,
        }
    }

    #[test]
    fn survival_examples() {
        let c = noon_config(2, 0.05, 100, 2, 0);
        assert_abs_diff_eq!(survival_probability(&c.psi, &c.generator, 0.0).unwrap(), 1.0, epsilon = 1e-15);
        for theta in [0.05, 0.3, 1.2] {
            let p = survival_probability(&c.psi, &c.generator, theta).unwrap();
            assert_abs_diff_eq!(p, (2.0 * theta).cos().powi(2), epsilon = 1e-14);
        }
        let eig = SpinState::basis(SpinJ::integer(2), 2).unwrap();
        assert_abs_diff_eq!(survival_probability(&eig, &c.generator, 0.9).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let j = SpinJ::from_twice(3);
        let psi = SpinState::from_components(j, &[(3, Complex64::new(0.4, 0.2)), (-1, Complex64::new(0.1, -0.8))]).unwrap();
        let model = SurvivalModel::new(&psi, &build_spin_operators(j).jx).unwrap();
        let h = 1e-5;
        for t in [0.1, 0.7, 1.9] {
            let fd = (model.probability(t + h) - model.probability(t - h)) / (2.0 * h);
            assert_abs_diff_eq!(model.derivative(t), fd, epsilon = 1e-8);
            let fd2 = (model.derivative(t + h) - model.derivative(t - h)) / (2.0 * h);
            assert_abs_diff_eq!(model.second_derivative(t), fd2, epsilon = 1e-8);
        }
        assert_abs_diff_eq!(model.second_derivative(0.0), -0.5 * model.fisher_information(), epsilon = 1e-12);
    }

    #[test]
    fn noon_landmarks() {
        for jv in [1u32, 2, 5] {
            let c = noon_config(jv, 0.01, 100, 2, 0);
            let model = SurvivalModel::new(&c.psi, &c.generator).unwrap();
            assert_abs_diff_eq!(model.theta_half().unwrap(), PI / (4.0 * jv as f64), epsilon = 1e-12);
            let (lo, hi) = model.monotone_bracket().unwrap();
            assert_eq!(lo, 0.0);
            assert_abs_diff_eq!(hi, PI / (2.0 * jv as f64), epsilon = 1e-12);
        }
    }

    #[test]
    fn inversion_examples() {
        let c = noon_config(2, 0.05, 100, 2, 0);
        let model = SurvivalModel::new(&c.psi, &c.generator).unwrap();
        let bracket = model.monotone_bracket().unwrap();
        let n = 1u64 << 40;
        let count = (0.1f64.cos().powi(2) * n as f64).round() as u64;
        assert_abs_diff_eq!(estimate_theta(count, n, &model, bracket).unwrap(), 0.05, epsilon = 1e-10);
        assert_eq!(estimate_theta(100, 100, &model, bracket).unwrap(), bracket.0);
        assert_eq!(estimate_theta(0, 100, &model, bracket).unwrap(), bracket.1);
        assert!(matches!(estimate_theta(5, 100, &model, (0.3, 1.2)), Err(Error::NonMonotone { .. })));
        assert!(estimate_theta(101, 100, &model, bracket).is_err());
    }

    #[test]
    fn inversion_on_rising_branch() {
        let c = noon_config(2, 0.05, 100, 2, 0);
        let model = SurvivalModel::new(&c.psi, &c.generator).unwrap();
        let bracket = (PI / 4.0, PI / 2.0);
        let theta = 1.3;
        let p = model.probability(theta);
        let n = 1u64 << 40;
        let t = estimate_theta((p * n as f64).round() as u64, n, &model, bracket).unwrap();
        assert_abs_diff_eq!(t, theta, epsilon = 1e-10);
    }

    #[test]
    fn simulation_extremes() {
        let j = SpinJ::integer(2);
        let mut c = noon_config(2, 0.05, 1000, 5, 3);
        c.psi = SpinState::basis(j, 4).unwrap();
        assert!(simulate_trials(&c).unwrap().iter().all(|&k| k == 1000));
        let mut c = noon_config(2, PI / 4.0, 1000, 5, 3);
        c.trials_per_run = 500;
        assert!(simulate_trials(&c).unwrap().iter().all(|&k| k == 0));
    }

    #[test]
    fn simulation_concentrates() {
        let c = noon_config(2, 0.05, 100_000, 20, 42);
        let p = 0.1f64.cos().powi(2);
        let sd = (p * (1.0 - p) / 1e5).sqrt();
        for k in simulate_trials(&c).unwrap() {
            assert!((k as f64 / 1e5 - p).abs() < 5.0 * sd);
        }
    }

    #[test]
    fn simulation_is_deterministic() {
        let c = noon_config(2, 0.05, 10_000, 50, 7);
        assert_eq!(simulate_trials(&c).unwrap(), simulate_trials(&c).unwrap());
        let other = EstimationConfig { seed: 8, ..c.clone() };
        assert_ne!(simulate_trials(&c).unwrap(), simulate_trials(&other).unwrap());
    }

    #[test]
    fn config_validation() {
        assert!(noon_config(2, 0.05, 99, 10, 0).validate().is_err());
        assert!(noon_config(2, 0.0, 1000, 10, 0).validate().is_err());
        assert!(noon_config(2, PI / 8.0 + 1e-3, 1000, 10, 0).validate().is_err());
        assert!(noon_config(2, PI / 8.0 - 1e-3, 1000, 10, 0).validate().is_ok());
        assert!(noon_config(2, 0.05, 1000, 1, 0).validate().is_err());

        let mut c = noon_config(2, 0.05, 1000, 10, 0);
        c.psi = SpinState::basis(SpinJ::integer(2), 0).unwrap();
        assert!(matches!(crb_report(&c), Err(Error::DegenerateModel(_))));
    }

    #[test]
    fn crb_scaling() {
        let a = crb_report(&noon_config(2, 0.05, 1000, 10, 1)).unwrap();
        let b = crb_report(&noon_config(2, 0.05, 2000, 10, 1)).unwrap();
        assert_abs_diff_eq!(a.crb_sigma / b.crb_sigma, 2f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(a.crb_sigma, 1.0 / (1000.0f64 * 16.0).sqrt(), epsilon = 1e-16);
        assert_abs_diff_eq!(a.ratio, a.empirical_sigma / a.crb_sigma, epsilon = 0.0);
    }

    #[test]
    fn csv_layout() {
        let r = crb_report(&noon_config(2, 0.05, 1000, 3, 1)).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "run,theta_hat");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,"));
        assert_eq!(lines[2].split(',').nth(1).unwrap().parse::<f64>().unwrap(), r.theta_hats[1]);
    }
}
