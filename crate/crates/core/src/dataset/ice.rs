use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ice mass (kg) in each of the three blade zones, written `x-y-z`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IceConfig {
    pub zone1_mass: f64,
    pub zone2_mass: f64,
    pub zone3_mass: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IceLabel {
    Normal,
    /// Ice in exactly one zone (1, 2 or 3).
    Zone(u8),
    /// Ice in more than one zone; excluded from the classification tasks.
    MultiZone,
}

impl IceLabel {
    /// Class tag used throughout the pipeline: 0 normal, 1..=3 zone.
    pub fn class_index(self) -> Option<usize> {
        match self {
            IceLabel::Normal => Some(0),
            IceLabel::Zone(z) => Some(z as usize),
            IceLabel::MultiZone => None,
        }
    }
}

impl IceConfig {
    pub const NORMAL: IceConfig = IceConfig {
        zone1_mass: 0.0,
        zone2_mass: 0.0,
        zone3_mass: 0.0,
    };

    pub fn new(zone1_mass: f64, zone2_mass: f64, zone3_mass: f64) -> Result<Self> {
        let c = IceConfig {
            zone1_mass,
            zone2_mass,
            zone3_mass,
        };
        if c.masses().iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::invalid(format!("ice masses must be finite and >= 0, got {c}")));
        }
        Ok(c)
    }

    /// Mass `m` in zone `zone` (1-based), nothing elsewhere.
    pub fn single_zone(zone: u8, m: f64) -> Result<Self> {
        match zone {
            1 => Self::new(m, 0.0, 0.0),
            2 => Self::new(0.0, m, 0.0),
            3 => Self::new(0.0, 0.0, m),
            _ => Err(Error::invalid(format!("zone must be 1, 2 or 3, got {zone}"))),
        }
    }

    pub fn masses(&self) -> [f64; 3] {
        [self.zone1_mass, self.zone2_mass, self.zone3_mass]
    }

    pub fn label(&self) -> IceLabel {
        let iced: Vec<usize> = (0..3).filter(|&k| self.masses()[k] > 0.0).collect();
        match iced.as_slice() {
            [] => IceLabel::Normal,
            [k] => IceLabel::Zone(*k as u8 + 1),
            _ => IceLabel::MultiZone,
        }
    }
}

impl fmt::Display for IceConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}-{}", self.zone1_mass, self.zone2_mass, self.zone3_mass)
    }
}

impl FromStr for IceConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split('-').collect();
        if parts.len() != 3 {
            return Err(Error::Data(format!(
                "ice configuration '{s}' is not of the form x-y-z"
            )));
        }
        let mut m = [0.0; 3];
        for (k, p) in parts.iter().enumerate() {
            m[k] = p.trim().parse().map_err(|_| {
                Error::Data(format!("ice configuration '{s}': zone {} mass '{p}' is not a number", k + 1))
            })?;
        }
        IceConfig::new(m[0], m[1], m[2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_label() {
        let c: IceConfig = "0.4-0.6-0.8".parse().unwrap();
        assert_eq!(c, IceConfig::new(0.4, 0.6, 0.8).unwrap());
        assert_eq!(c.label(), IceLabel::MultiZone);
        assert_eq!("0-0-0".parse::<IceConfig>().unwrap().label(), IceLabel::Normal);
        assert_eq!("0-0.6-0".parse::<IceConfig>().unwrap().label(), IceLabel::Zone(2));
        assert_eq!(IceLabel::Zone(3).class_index(), Some(3));
        assert_eq!(IceLabel::MultiZone.class_index(), None);
        assert!("0.4-0.6".parse::<IceConfig>().is_err());
        assert!("a-0-0".parse::<IceConfig>().is_err());
        assert!("1--1-0".parse::<IceConfig>().is_err());
    }

    #[test]
    fn display_round_trips() {
        let c = IceConfig::single_zone(1, 0.4).unwrap();
        assert_eq!(c.to_string(), "0.4-0-0");
        assert_eq!(c.to_string().parse::<IceConfig>().unwrap(), c);
    }
}
