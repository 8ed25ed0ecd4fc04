//! Semiclassical escape rate and its comparison with exact quantum decay.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{fit_observable, ObservableSeries};

/// Ratio at or above which the quantum rates count as far exceeding Λ.
pub const PASS_RATIO: f64 = 5.0;

fn check_domain(h_ks: f64, delta_theta0: f64) -> Result<()> {
    if !(h_ks > 0.0 && h_ks.is_finite()) {
        return Err(Error::DomainError(format!("h_ks must be positive, got {h_ks}")));
    }
    if !(delta_theta0 > 0.0 && delta_theta0 < 1.0) {
        return Err(Error::DomainError(format!("delta_theta0 must lie in (0, 1), got {delta_theta0}")));
    }
    Ok(())
}

/// t* = ln(1/δθ₀) / h_KS.
pub fn escape_time(h_ks: f64, delta_theta0: f64) -> Result<f64> {
    check_domain(h_ks, delta_theta0)?;
    Ok((1.0 / delta_theta0).ln() / h_ks)
}

/// Λ = h_KS / ln(1/δθ₀).
pub fn escape_rate(h_ks: f64, delta_theta0: f64) -> Result<f64> {
    check_domain(h_ks, delta_theta0)?;
    Ok(h_ks / (1.0 / delta_theta0).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantumRates {
    pub density: Rate,
    pub entropy: Rate,
    pub echo: Rate,
}

impl QuantumRates {
    pub fn max(&self) -> f64 {
        self.density.value.max(self.entropy.value).max(self.echo.value)
    }

    pub fn min(&self) -> f64 {
        self.density.value.min(self.entropy.value).min(self.echo.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscapeReport {
    pub h_ks: f64,
    pub delta_theta0: f64,
    pub t_star: f64,
    pub lambda: f64,
    pub rates: QuantumRates,
    pub ratio: f64,
    pub pass: bool,
    /// λ_max / ln(1/δθ₀): the rate if only the fastest direction stretched.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lambda_max: Option<f64>,
}

/// Everything `build_report` consumes. Any `None` is reported as missing.
#[derive(Debug, Clone, Default)]
pub struct ReportInputs {
    pub h_ks: Option<f64>,
    pub lambda_max_exponent: Option<f64>,
    pub delta_theta0: Option<f64>,
    pub density: Option<ObservableSeries>,
    pub entropy: Option<ObservableSeries>,
    pub echo: Option<ObservableSeries>,
}

pub fn report_from_rates(h_ks: f64, delta_theta0: f64, rates: QuantumRates, lambda_max_exponent: Option<f64>) -> Result<EscapeReport> {
    let lambda = escape_rate(h_ks, delta_theta0)?;
    let t_star = escape_time(h_ks, delta_theta0)?;
    let ratio = rates.max() / lambda;
    let lambda_max = match lambda_max_exponent {
        Some(l) if l > 0.0 => Some(escape_rate(l, delta_theta0)?),
        _ => None,
    };
    Ok(EscapeReport { h_ks, delta_theta0, t_star, lambda, rates, ratio, pass: ratio >= PASS_RATIO, lambda_max })
}

pub fn build_report(inputs: &ReportInputs) -> Result<EscapeReport> {
    let mut missing = Vec::new();
    for (name, present) in [
        ("h_ks", inputs.h_ks.is_some()),
        ("delta_theta0", inputs.delta_theta0.is_some()),
        ("density", inputs.density.is_some()),
        ("entropy", inputs.entropy.is_some()),
        ("echo", inputs.echo.is_some()),
    ] {
        if !present {
            missing.push(name.to_string());
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingInput(missing));
    }
    let fit = |s: &Option<ObservableSeries>| -> Result<Rate> {
        let f = fit_observable(s.as_ref().unwrap())?;
        Ok(Rate { value: f.rate, stderr: f.stderr })
    };
    let rates = QuantumRates { density: fit(&inputs.density)?, entropy: fit(&inputs.entropy)?, echo: fit(&inputs.echo)? };
    report_from_rates(inputs.h_ks.unwrap(), inputs.delta_theta0.unwrap(), rates, inputs.lambda_max_exponent)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(v: f64) -> QuantumRates {
        let r = Rate { value: v, stderr: 0.0 };
        QuantumRates { density: r, entropy: r, echo: r }
    }

    #[test]
    fn reference_arithmetic() {
        let l = escape_rate(0.006, 0.01).unwrap();
        assert!((l - 0.006 / 100f64.ln()).abs() < 1e-12);
        assert!((escape_time(0.006, 0.01).unwrap() - 767.528).abs() < 1e-3);
        assert!((escape_rate(0.012, 0.01).unwrap() - 0.0026058).abs() < 1e-6);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(escape_rate(0.0, 0.01), Err(Error::DomainError(_))));
        assert!(matches!(escape_time(0.006, 1.0), Err(Error::DomainError(_))));
        assert!(matches!(escape_time(0.006, 0.0), Err(Error::DomainError(_))));
    }

    #[test]
    fn ratio_flag() {
        let r = report_from_rates(0.0013 * 100f64.ln(), 0.01, flat(0.025), None).unwrap();
        assert!((r.ratio - 0.025 / 0.0013).abs() < 1e-9 && r.pass);
        let eq = report_from_rates(0.006, 0.01, flat(escape_rate(0.006, 0.01).unwrap()), None).unwrap();
        assert!((eq.ratio - 1.0).abs() < 1e-12 && !eq.pass);
    }

    #[test]
    fn missing_entropy() {
        let inputs = ReportInputs { h_ks: Some(0.006), delta_theta0: Some(0.01), ..Default::default() };
        match build_report(&inputs) {
            Err(Error::MissingInput(m)) => assert_eq!(m, vec!["density", "entropy", "echo"]),
            other => panic!("{other:?}"),
        }
    }
}
