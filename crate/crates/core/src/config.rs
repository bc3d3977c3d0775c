use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hour of day at which an episodic day begins.
pub const EPISODE_START_HOUR: u32 = 7;

/// Sizing of the jointly coordinated fleet and its decision grid.
///
/// The control horizon is divided into `s_max = h_max / slot` equal decision
/// slots; all durations are kept in whole minutes so the grid is exact.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FleetConfig {
    /// Number of charging stations jointly coordinated.
    pub n_max: u32,
    /// Maximum connection time, in minutes (default 24 h).
    pub h_max_min: u32,
    /// Duration of one decision slot, in minutes (default 2 h).
    pub slot_min: u32,
}

impl FleetConfig {
    pub fn new(n_max: u32, h_max_min: u32, slot_min: u32) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::Config("n_max must be at least 1".into()));
        }
        if slot_min == 0 || h_max_min == 0 {
            return Err(Error::Config("durations must be positive".into()));
        }
        if h_max_min % slot_min != 0 {
            return Err(Error::Config(format!(
                "slot ({slot_min} min) must divide the horizon ({h_max_min} min) exactly"
            )));
        }
        Ok(Self {
            n_max,
            h_max_min,
            slot_min,
        })
    }

    /// 24 h horizon with 2 h slots.
    pub fn with_defaults(n_max: u32) -> Result<Self> {
        Self::new(n_max, 24 * 60, 2 * 60)
    }

    /// Number of decision slots in the horizon.
    pub fn s_max(&self) -> usize {
        (self.h_max_min / self.slot_min) as usize
    }

    pub fn slot_hours(&self) -> f64 {
        f64::from(self.slot_min) / 60.0
    }

    /// The same grid with `scale` times as many stations, for duplicated days.
    pub fn scaled(&self, scale: u32) -> Result<Self> {
        if scale < 1 {
            return Err(Error::InvalidArgument("scale must be at least 1".into()));
        }
        Self::new(self.n_max * scale, self.h_max_min, self.slot_min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_give_twelve_slots() {
        let cfg = FleetConfig::with_defaults(10).unwrap();
        assert_eq!(cfg.s_max(), 12);
        assert_eq!(cfg.slot_hours(), 2.0);
    }

    #[test]
    fn slot_must_divide_horizon() {
        assert!(FleetConfig::new(10, 24 * 60, 7 * 60).is_err());
        assert!(FleetConfig::new(0, 24 * 60, 2 * 60).is_err());
    }

    #[test]
    fn scaled_multiplies_stations_only() {
        let cfg = FleetConfig::with_defaults(10).unwrap();
        let big = cfg.scaled(4).unwrap();
        assert_eq!(big.n_max, 40);
        assert_eq!(big.s_max(), cfg.s_max());
        assert!(cfg.scaled(0).is_err());
    }
}
