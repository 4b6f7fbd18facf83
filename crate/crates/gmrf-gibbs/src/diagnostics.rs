//! Monte Carlo efficiency diagnostics: autocorrelation, integrated
//! autocorrelation time, effective sample size, cost per effective sample,
//! and the Gelman-Rubin potential scale reduction factor.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DiagnosticsError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("undefined variance: chain is constant")]
    UndefinedVariance,
}

fn mean_and_centered_var(chain: &[f64]) -> Result<(f64, f64), DiagnosticsError> {
    let n = chain.len() as f64;
    let mean = chain.iter().sum::<f64>() / n;
    let var = chain.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    if var <= 0.0 || !var.is_finite() {
        return Err(DiagnosticsError::UndefinedVariance);
    }
    Ok((mean, var))
}

fn acf_at(chain: &[f64], mean: f64, var: f64, lag: usize) -> f64 {
    let n = chain.len();
    let mut acc = 0.0;
    for t in 0..(n - lag) {
        acc += (chain[t] - mean) * (chain[t + lag] - mean);
    }
    acc / (n as f64 * var)
}

/// Standard biased autocorrelation estimates for lags `0..=max_lag`
/// (denominator N, so lag 0 is exactly 1).
pub fn acf(chain: &[f64], max_lag: usize) -> Result<Vec<f64>, DiagnosticsError> {
    if chain.len() < 2 {
        return Err(DiagnosticsError::InvalidArgument(
            "chain must have at least 2 samples".to_string(),
        ));
    }
    if max_lag >= chain.len() {
        return Err(DiagnosticsError::InvalidArgument(format!(
            "max_lag {max_lag} must be below the chain length {}",
            chain.len()
        )));
    }
    let (mean, var) = mean_and_centered_var(chain)?;
    Ok((0..=max_lag).map(|l| acf_at(chain, mean, var, l)).collect())
}

/// Integrated autocorrelation time `1 + 2 sum rho(l)`, truncated by Geyer's
/// initial positive sequence: consecutive lag pairs are summed while the pair
/// sums stay positive.
pub fn iat(chain: &[f64]) -> Result<f64, DiagnosticsError> {
    if chain.len() < 50 {
        return Err(DiagnosticsError::InvalidArgument(format!(
            "need at least 50 samples for IAT, got {}",
            chain.len()
        )));
    }
    let (mean, var) = mean_and_centered_var(chain)?;
    let n = chain.len();
    let mut total = 0.0; // sum of positive pair sums Gamma_m = rho(2m) + rho(2m+1)
    let mut m = 0usize;
    loop {
        let l0 = 2 * m;
        let l1 = 2 * m + 1;
        if l1 >= n {
            break;
        }
        let pair = acf_at(chain, mean, var, l0) + acf_at(chain, mean, var, l1);
        if pair <= 0.0 {
            break;
        }
        total += pair;
        m += 1;
    }
    Ok(2.0 * total - 1.0)
}

/// Effective sample size `N / IAT`.
pub fn ess(chain: &[f64]) -> Result<f64, DiagnosticsError> {
    Ok(chain.len() as f64 / iat(chain)?)
}

/// Cost per effective sample `IAT * T / N`: total compute per effectively
/// independent draw.
pub fn ces(cpu_seconds: f64, n_retained: usize, iat: f64) -> Result<f64, DiagnosticsError> {
    if !(cpu_seconds > 0.0) || n_retained == 0 || !(iat > 0.0) {
        return Err(DiagnosticsError::InvalidArgument(format!(
            "ces needs positive inputs, got T={cpu_seconds} N={n_retained} IAT={iat}"
        )));
    }
    Ok(iat * cpu_seconds / n_retained as f64)
}

/// Gelman-Rubin potential scale reduction factor (plain PSRF from the
/// between/within variance decomposition, no rank normalization).
pub fn gelman_rubin(chains: &[Vec<f64>]) -> Result<f64, DiagnosticsError> {
    let m = chains.len();
    if m < 2 {
        return Err(DiagnosticsError::InvalidArgument(format!(
            "need at least 2 chains, got {m}"
        )));
    }
    let n = chains[0].len();
    if n < 10 || chains.iter().any(|c| c.len() != n) {
        return Err(DiagnosticsError::InvalidArgument(
            "chains must have equal length of at least 10".to_string(),
        ));
    }
    let nf = n as f64;
    let mf = m as f64;
    let means: Vec<f64> = chains.iter().map(|c| c.iter().sum::<f64>() / nf).collect();
    let within = chains
        .iter()
        .zip(&means)
        .map(|(c, mu)| c.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (nf - 1.0))
        .sum::<f64>()
        / mf;
    if within <= 0.0 || !within.is_finite() {
        return Err(DiagnosticsError::UndefinedVariance);
    }
    let grand = means.iter().sum::<f64>() / mf;
    let between = nf / (mf - 1.0)
        * means
            .iter()
            .map(|mu| (mu - grand) * (mu - grand))
            .sum::<f64>();
    let v_hat = (nf - 1.0) / nf * within + (mf + 1.0) / (mf * nf) * between;
    Ok((v_hat / within).sqrt())
}

/// Table row tying together the cost and mixing of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyReport {
    pub n_retained: usize,
    pub cpu_seconds: f64,
    pub iat: f64,
    pub ess: f64,
    pub ces: f64,
}

impl EfficiencyReport {
    pub fn from_chain(chain: &[f64], cpu_seconds: f64) -> Result<Self, DiagnosticsError> {
        let kappa = iat(chain)?;
        let n = chain.len();
        Ok(EfficiencyReport {
            n_retained: n,
            cpu_seconds,
            iat: kappa,
            ess: n as f64 / kappa,
            ces: ces(cpu_seconds, n, kappa)?,
        })
    }
}
