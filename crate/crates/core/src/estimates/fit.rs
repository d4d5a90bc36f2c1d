use super::{EstimateError, FieldSample};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Number of logarithmic `d`-bins used for the upper envelope.
pub const ENVELOPE_BINS: usize = 20;

/// Fewest samples accepted inside the fitting band.
pub const MIN_BAND_SAMPLES: usize = 50;

/// Power law `proxy ≈ C·d^slope` fitted to the upper envelope.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlowupFit {
    pub slope: f64,
    /// 95% confidence interval for the slope.
    pub ci: (f64, f64),
    /// `log C`.
    pub intercept: f64,
    /// Non-empty bins entering the regression.
    pub bins: usize,
    pub band_samples: usize,
    /// Envelope points `(d, proxy)`, one per non-empty bin.
    pub envelope: Vec<(f64, f64)>,
}

/// Least-squares slope of `log proxy` against `log d` over the maxima of
/// the samples in [`ENVELOPE_BINS`] logarithmic bins of `band`.
pub fn blowup_fit(samples: &[FieldSample], band: (f64, f64)) -> Result<BlowupFit, EstimateError> {
    let (lo, hi) = band;
    if !(lo > 0.0 && hi > lo) {
        return Err(EstimateError::InvalidParameter(format!("bad band [{lo}, {hi}]")));
    }
    let inside: Vec<&FieldSample> =
        samples.iter().filter(|s| s.d >= lo && s.d <= hi && s.hessian_proxy > 0.0).collect();
    if inside.len() < MIN_BAND_SAMPLES {
        return Err(EstimateError::UnderSampled { found: inside.len(), required: MIN_BAND_SAMPLES });
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    let width = (lhi - llo) / ENVELOPE_BINS as f64;
    let mut env: Vec<Option<(f64, f64)>> = vec![None; ENVELOPE_BINS];
    for s in &inside {
        let ld = s.d.ln();
        let b = (((ld - llo) / width) as usize).min(ENVELOPE_BINS - 1);
        let lp = s.hessian_proxy.ln();
        if env[b].is_none_or(|(_, best)| lp > best) {
            env[b] = Some((ld, lp));
        }
    }
    let pts: Vec<(f64, f64)> = env.into_iter().flatten().collect();
    if pts.len() < 3 {
        return Err(EstimateError::UnderSampled { found: pts.len(), required: 3 });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let se = (sse / (n - 2.0) / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, n - 2.0)
        .map_err(|e| EstimateError::InvalidParameter(e.to_string()))?
        .inverse_cdf(0.975);
    Ok(BlowupFit {
        slope,
        ci: (slope - t * se, slope + t * se),
        intercept,
        bins: pts.len(),
        band_samples: inside.len(),
        envelope: pts.iter().map(|p| (p.0.exp(), p.1.exp())).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimates::{hessian_field, FieldOptions};
    use crate::geometry::{HoledDomain, Vec2};
    use crate::potential::ModelPotential;

    fn synthetic(exponent: f64, n: usize) -> Vec<FieldSample> {
        (0..n)
            .map(|i| {
                let d = 1e-4 * 100f64.powf(i as f64 / (n - 1) as f64);
                // a spread below the envelope must not bias the fit
                let dip = if i % 3 == 0 { 1.0 } else { 0.3 };
                FieldSample { point: Vec2::zeros(), d, hessian_proxy: 2.0 * d.powf(exponent) * dip, weight: 1.0 }
            })
            .collect()
    }

    #[test]
    fn recovers_exact_power_law() {
        let f = blowup_fit(&synthetic(-0.5, 600), (1e-4, 1e-2)).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-3, "{f:?}");
        assert!(f.ci.0 <= f.slope && f.slope <= f.ci.1);
        assert!((f.intercept - 2f64.ln()).abs() < 0.01);
    }

    #[test]
    fn flags_undersampling() {
        let err = blowup_fit(&synthetic(-0.5, 40), (1e-4, 1e-2)).unwrap_err();
        assert!(matches!(err, EstimateError::UnderSampled { found: 40, .. }));
    }

    #[test]
    fn model_envelope_slope() {
        let dom = HoledDomain::annulus(0.3, 0.05).unwrap();
        let u = ModelPotential::new(dom.holes()[0].shape.size()).unwrap();
        let opts = FieldOptions { bulk_spacing: None, ..FieldOptions::new(&dom, 10) };
        let s = hessian_field(&u, &dom, &opts).unwrap();
        let f = blowup_fit(&s, (1e-4, 1e-2)).unwrap();
        assert!(f.slope > -0.52 && f.slope < -0.48, "{f:?}");
        for band in [(2e-4, 1e-2), (1e-4, 5e-3), (2e-4, 2e-2)] {
            let g = blowup_fit(&s, band).unwrap();
            assert!((g.slope - f.slope).abs() < 0.05);
        }
    }
}
