/// Lowest acceptable frequency at any instant, Hz.
pub const NADIR_MIN_HZ: f64 = 58.0;
pub const SETTLING_MIN_HZ: f64 = 59.5;
pub const SETTLING_MAX_HZ: f64 = 60.7;

/// Frequency design criteria, boundaries inclusive.
pub fn criteria_met(nadir_hz: f64, settling_hz: f64) -> bool {
    nadir_hz >= NADIR_MIN_HZ && (SETTLING_MIN_HZ..=SETTLING_MAX_HZ).contains(&settling_hz)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundaries_are_inclusive() {
        assert!(criteria_met(58.0, 59.5));
        assert!(criteria_met(58.0, 60.7));
        assert!(!criteria_met(57.999_999, 59.8));
        assert!(!criteria_met(59.0, 59.499_999));
        assert!(!criteria_met(59.0, 60.700_001));
    }

    #[test]
    fn nan_never_passes() {
        assert!(!criteria_met(f64::NAN, 60.0));
        assert!(!criteria_met(59.0, f64::NAN));
    }
}
