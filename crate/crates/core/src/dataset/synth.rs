use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dataset::{IceConfig, TimeSeriesRecord};
use crate::error::{Error, Result};
use crate::numerics::{Matrix, SeededRng};

/// Flapwise (`x`) and edgewise (`y`) accelerations at span station 1 of each blade.
pub const BLADE_FEATURES: [&str; 6] = [
    "Spn1ALxb1", "Spn1ALyb1", "Spn1ALxb2", "Spn1ALyb2", "Spn1ALxb3", "Spn1ALyb3",
];

/// How ice in one blade zone perturbs the signals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZoneModulation {
    /// Relative amplitude increase of the baseline at full strength.
    pub amplitude_gain: f64,
    /// Side-band sits at rotation frequency plus this offset.
    pub frequency_shift_hz: f64,
    /// Side-band amplitude at full strength.
    pub sideband_gain: f64,
    /// Share of the effect seen by blades 1, 2, 3 (ice sits on blade 1).
    pub blade_coupling: [f64; 3],
    /// Weights of the side-band in the flapwise and edgewise components.
    pub flap_weight: f64,
    pub edge_weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub rotation_hz: f64,
    pub sample_rate_hz: f64,
    pub harmonics: usize,
    pub flap_amplitude: f64,
    pub edge_amplitude: f64,
    pub zones: [ZoneModulation; 3],
    /// Mass (kg) at which a zone's effect reaches `1 - 1/e` of full strength.
    pub saturation_mass: f64,
    /// Std of the per-simulation amplitude factor (wind variation).
    pub wind_variability: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            rotation_hz: 0.2,
            sample_rate_hz: 20.0,
            harmonics: 3,
            flap_amplitude: 1.0,
            edge_amplitude: 1.5,
            zones: [
                ZoneModulation {
                    amplitude_gain: 0.30,
                    frequency_shift_hz: 0.15,
                    sideband_gain: 0.50,
                    blade_coupling: [1.0, 0.2, 0.2],
                    flap_weight: 1.0,
                    edge_weight: 0.3,
                },
                ZoneModulation {
                    amplitude_gain: 0.45,
                    frequency_shift_hz: 0.35,
                    sideband_gain: 0.55,
                    blade_coupling: [1.0, 0.2, 0.2],
                    flap_weight: 0.7,
                    edge_weight: 0.7,
                },
                ZoneModulation {
                    amplitude_gain: 0.60,
                    frequency_shift_hz: 0.55,
                    sideband_gain: 0.60,
                    blade_coupling: [1.0, 0.2, 0.2],
                    flap_weight: 0.4,
                    edge_weight: 1.0,
                },
            ],
            saturation_mass: 0.25,
            wind_variability: 0.03,
            noise_std: 0.05,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn sideband_hz(&self, zone: usize) -> f64 {
        self.rotation_hz + self.zones[zone].frequency_shift_hz
    }

    pub fn highest_frequency_hz(&self) -> f64 {
        let harmonic = self.rotation_hz * self.harmonics as f64;
        (0..3).map(|k| self.sideband_hz(k)).fold(harmonic, f64::max)
    }

    /// Samples per rotor revolution.
    pub fn samples_per_rotation(&self) -> f64 {
        self.sample_rate_hz / self.rotation_hz
    }

    /// Strength in `[0, 1)` of ice mass `m`; strictly increasing in `m`.
    pub fn ice_strength(&self, m: f64) -> f64 {
        1.0 - (-m / self.saturation_mass).exp()
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64, name: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be positive, got {v}")))
            }
        };
        pos(self.rotation_hz, "rotation_hz")?;
        pos(self.sample_rate_hz, "sample_rate_hz")?;
        pos(self.saturation_mass, "saturation_mass")?;
        if self.harmonics == 0 {
            return Err(Error::invalid("harmonics must be at least 1"));
        }
        for (name, v) in [
            ("noise_std", self.noise_std),
            ("wind_variability", self.wind_variability),
            ("flap_amplitude", self.flap_amplitude),
            ("edge_amplitude", self.edge_amplitude),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("{name} must be >= 0, got {v}")));
            }
        }
        for (k, z) in self.zones.iter().enumerate() {
            let vals = [
                z.amplitude_gain,
                z.frequency_shift_hz,
                z.sideband_gain,
                z.flap_weight,
                z.edge_weight,
            ];
            if vals.iter().chain(&z.blade_coupling).any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("zone {} modulation has non-finite entries", k + 1)));
            }
            if self.sideband_hz(k) <= 0.0 {
                return Err(Error::invalid(format!("zone {} side-band frequency must be positive", k + 1)));
            }
        }
        let nyquist = self.sample_rate_hz / 2.0;
        if self.highest_frequency_hz() >= nyquist {
            return Err(Error::invalid(format!(
                "sample rate {} Hz must exceed twice the highest frequency {} Hz",
                self.sample_rate_hz,
                self.highest_frequency_hz()
            )));
        }
        Ok(())
    }
}

/// Generates a six-channel record (see [`BLADE_FEATURES`]) of `steps` samples.
///
/// Each blade sees the same harmonic baseline shifted by a third of a
/// revolution. Ice in a zone scales the baseline and adds a side-band whose
/// amplitude grows with mass; blade 1 carries the ice.
pub fn synthesize(config: &SynthConfig, ice: IceConfig, steps: usize, sim_id: &str) -> Result<TimeSeriesRecord> {
    config.validate()?;
    if steps == 0 {
        return Err(Error::invalid("synthesize needs at least one time step"));
    }
    let mut rng = SeededRng::new(config.seed);
    let wind = 1.0 + config.wind_variability * rng.standard_normal();
    let masses = ice.masses();
    let strength: Vec<f64> = masses.iter().map(|&m| config.ice_strength(m)).collect();

    let omega = 2.0 * PI * config.rotation_hz;
    let blade_offset = 2.0 * PI / 3.0;
    let mut data = Vec::with_capacity(steps * 6);
    for k in 0..steps {
        let t = k as f64 / config.sample_rate_hz;
        for b in 0..3 {
            let azimuth = omega * t + b as f64 * blade_offset;
            let mut gain = 1.0;
            let (mut flap_sb, mut edge_sb) = (0.0, 0.0);
            for (z, zone) in config.zones.iter().enumerate() {
                let s = strength[z] * zone.blade_coupling[b];
                if s == 0.0 {
                    continue;
                }
                gain += zone.amplitude_gain * s;
                let phase = 2.0 * PI * config.sideband_hz(z) * t + b as f64 * blade_offset;
                let sb = zone.sideband_gain * s * phase.sin();
                flap_sb += zone.flap_weight * sb;
                edge_sb += zone.edge_weight * sb;
            }
            let (mut flap, mut edge) = (0.0, 0.0);
            for h in 1..=config.harmonics {
                let hf = h as f64;
                flap += config.flap_amplitude / hf * (hf * azimuth + 0.3 * hf).sin();
                edge += config.edge_amplitude / hf * (hf * azimuth + PI / 2.0 + 0.2 * hf).sin();
            }
            data.push(wind * gain * flap + flap_sb);
            data.push(wind * gain * edge + edge_sb);
        }
    }
    if config.noise_std > 0.0 {
        for v in &mut data {
            *v += config.noise_std * rng.standard_normal();
        }
    }
    let names = BLADE_FEATURES.iter().map(|s| s.to_string()).collect();
    TimeSeriesRecord::new(sim_id, ice, names, Matrix::from_vec(steps, 6, data)?)
}

/// Composition of a simulated fleet: normal runs plus single-zone iced runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FleetSpec {
    pub normal_runs: usize,
    /// Ice masses simulated in zones 1, 2 and 3; one run per entry.
    pub zone_masses: [Vec<f64>; 3],
    pub steps: usize,
}

impl Default for FleetSpec {
    fn default() -> Self {
        FleetSpec {
            normal_runs: 14,
            zone_masses: [
                vec![0.4, 0.6, 0.8, 1.0],
                vec![0.4, 0.6, 0.8, 1.0],
                vec![0.4, 0.7, 1.0],
            ],
            steps: 10_000,
        }
    }
}

impl FleetSpec {
    pub fn runs(&self) -> usize {
        self.normal_runs + self.zone_masses.iter().map(Vec::len).sum::<usize>()
    }
}

/// Simulates every run of `fleet`; run `i` is named `sim_NN` and uses a
/// seed derived from `config.seed` and `i`.
pub fn generate_fleet(config: &SynthConfig, fleet: &FleetSpec) -> Result<Vec<TimeSeriesRecord>> {
    let mut ices = vec![IceConfig::NORMAL; fleet.normal_runs];
    for (z, masses) in fleet.zone_masses.iter().enumerate() {
        for &m in masses {
            if m <= 0.0 {
                return Err(Error::invalid(format!("zone {} mass must be positive, got {m}", z + 1)));
            }
            ices.push(IceConfig::single_zone(z as u8 + 1, m)?);
        }
    }
    let root = SeededRng::new(config.seed);
    let width = ices.len().saturating_sub(1).to_string().len().max(2);
    ices.iter()
        .enumerate()
        .map(|(i, &ice)| {
            let run = SynthConfig {
                seed: root.fork(i as u64).next_u64(),
                ..config.clone()
            };
            synthesize(&run, ice, fleet.steps, &format!("sim_{i:0width$}"))
        })
        .collect()
}
