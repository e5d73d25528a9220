use thiserror::Error;

use crate::time::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum SessionError {
    #[error("departure must be strictly after arrival")]
    NonPositiveDuration,
    #[error("energy must be a positive, finite number of kWh")]
    NonPositiveEnergy,
}

/// One charging event. Connected time is derived, never stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Session {
    arrival: Timestamp,
    departure: Timestamp,
    energy_kwh: f64,
}

impl Session {
    pub fn new(arrival: Timestamp, departure: Timestamp, energy_kwh: f64) -> Result<Self, SessionError> {
        if departure <= arrival {
            return Err(SessionError::NonPositiveDuration);
        }
        if !(energy_kwh.is_finite() && energy_kwh > 0.0) {
            return Err(SessionError::NonPositiveEnergy);
        }
        Ok(Self { arrival, departure, energy_kwh })
    }

    pub fn arrival(&self) -> Timestamp {
        self.arrival
    }

    pub fn departure(&self) -> Timestamp {
        self.departure
    }

    pub fn energy_kwh(&self) -> f64 {
        self.energy_kwh
    }

    pub fn connected_seconds(&self) -> i64 {
        self.departure.seconds() - self.arrival.seconds()
    }

    /// Departure minus arrival, in hours; always positive.
    pub fn connected_hours(&self) -> f64 {
        self.connected_seconds() as f64 / 3600.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use crate::math;
    use proptest::prelude::*;

    fn t(secs: i64) -> Timestamp {
        Timestamp::from_seconds(secs).unwrap()
    }

    #[test]
    fn connected_hours_examples() {
        let base = 1_578_304_800; // 2020-01-06T10:00:00
        let s = Session::new(t(base), t(base + 9_000), 7.4).unwrap();
        assert_eq!(s.connected_hours(), 2.5);

        let late = base + 13 * 3600; // 23:00
        let s = Session::new(t(late), t(late + 8 * 3600), 1.0).unwrap();
        assert_eq!(s.connected_hours(), 8.0);
        assert_eq!(s.departure().to_string(), "2020-01-07T07:00:00");
    }

    #[test]
    fn rejects_invalid_sessions() {
        assert_eq!(Session::new(t(10), t(10), 1.0), Err(SessionError::NonPositiveDuration));
        assert_eq!(Session::new(t(10), t(5), 1.0), Err(SessionError::NonPositiveDuration));
        assert_eq!(Session::new(t(10), t(20), 0.0), Err(SessionError::NonPositiveEnergy));
        assert_eq!(Session::new(t(10), t(20), f64::NAN), Err(SessionError::NonPositiveEnergy));
    }

    proptest! {
        #[test]
        fn arrival_plus_connected_time_is_departure(
            arrival in 0i64..4_000_000_000,
            secs in 1i64..10_000_000,
        ) {
            let s = Session::new(t(arrival), t(arrival + secs), 3.0).unwrap();
            let back = arrival + math::round(s.connected_hours() * 3600.0) as i64;
            prop_assert_eq!(back, s.departure().seconds());
            prop_assert!(s.connected_hours() > 0.0);
        }
    }
}
