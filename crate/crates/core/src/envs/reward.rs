use crate::error::{Error, Result};

/// Named scalar reward terms.
pub type RewardTerms<'a> = [(&'a str, f64)];

/// Weighted sum Σ_k w_k·r_k. Every term needs a weight.
pub fn reward_combine(terms: &RewardTerms<'_>, weights: &[(&str, f64)]) -> Result<f64> {
    terms.iter().try_fold(0.0, |acc, &(name, value)| {
        let w = weights
            .iter()
            .find(|(n, _)| *n == name)
            .map(|&(_, w)| w)
            .ok_or_else(|| Error::MissingWeight(name.to_string()))?;
        Ok(acc + w * value)
    })
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;

    #[test]
    fn weighted_sum() {
        let terms = [("v", 0.5), ("alive", 1.0), ("action", 0.04)];
        let weights = [("v", 1.0), ("alive", 2.0), ("action", -0.01)];
        assert_abs_diff_eq!(reward_combine(&terms, &weights).unwrap(), 2.4996, epsilon = 1e-12);
    }

    #[test]
    fn zero_weights_and_single_term() {
        let terms = [("a", 3.0), ("b", -7.5)];
        assert_eq!(reward_combine(&terms, &[("a", 0.0), ("b", 0.0)]).unwrap(), 0.0);
        assert_eq!(reward_combine(&[("t", 0.123)], &[("t", 1.0)]).unwrap(), 0.123);
    }

    #[test]
    fn missing_weight_is_named() {
        let err = reward_combine(&[("alive", 1.0)], &[("task", 1.0)]).unwrap_err();
        assert!(matches!(err, Error::MissingWeight(name) if name == "alive"));
    }
}
