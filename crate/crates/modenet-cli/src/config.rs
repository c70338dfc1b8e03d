//! TOML configuration schema. All frequencies and rates in the file are
//! ordinary frequencies in Hz; phases are radians. Conversion to angular
//! units happens exactly once, when a network or sweep grid is built.

use std::collections::BTreeMap;

use serde::Deserialize;

use modenet::circulator::{beta_for_cooperativity, design, CirculatorDesign, Direction};
use modenet::model::{
    coupling_for_cooperativity, CavityMode, Coupling, MechanicalMode, NetworkSpec,
};

use crate::CliError;

pub const TAU: f64 = std::f64::consts::TAU;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub network: Option<NetworkSection>,
    pub sweep: Option<SweepSection>,
    pub occupations: Option<OccupationsSection>,
    pub output: Option<OutputSection>,
    pub design: Option<DesignSection>,
}

impl ConfigDocument {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("config parse error: {e}")))
    }

    pub fn network(&self) -> Result<NetworkSpec, CliError> {
        self.network
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [network] section".into()))?
            .build()
    }

    pub fn sweep_grid_hz(&self) -> Result<Vec<f64>, CliError> {
        self.sweep
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [sweep] section".into()))?
            .grid_hz()
    }

    pub fn precision(&self) -> Result<usize, CliError> {
        let p = self.output.as_ref().and_then(|o| o.precision).unwrap_or(12);
        if (1..=17).contains(&p) {
            Ok(p)
        } else {
            Err(CliError::Config(format!(
                "output.precision = {p} must be between 1 and 17 significant digits"
            )))
        }
    }

    pub fn output_path(&self) -> Option<&str> {
        self.output.as_ref().and_then(|o| o.path.as_deref())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    pub isolator: Option<IsolatorNetwork>,
    pub circulator: Option<CirculatorNetwork>,
    #[serde(default)]
    pub cavity: Vec<CavityEntry>,
    #[serde(default)]
    pub mechanical: Vec<MechanicalEntry>,
    #[serde(default)]
    pub coupling: Vec<CouplingEntry>,
}

impl NetworkSection {
    pub fn build(&self) -> Result<NetworkSpec, CliError> {
        let explicit = !self.cavity.is_empty();
        match (&self.isolator, &self.circulator, explicit) {
            (Some(iso), None, false) => iso.build(),
            (None, Some(circ), false) => circ.build().map(|(_, net)| net),
            (None, None, true) => self.build_explicit(),
            (None, None, false) => Err(CliError::Config(
                "empty [network]: give [network.isolator], [network.circulator] or [[network.cavity]] entries".into(),
            )),
            _ => Err(CliError::Config(
                "[network] must contain exactly one of: isolator preset, circulator preset, explicit mode lists".into(),
            )),
        }
    }

    fn build_explicit(&self) -> Result<NetworkSpec, CliError> {
        let cavities = self
            .cavity
            .iter()
            .map(|c| {
                let mut mode =
                    CavityMode::new(&c.label, TAU * c.kappa_ext_hz, TAU * c.kappa_int_hz);
                mode.bath_occupation = c.bath_occupation;
                mode
            })
            .collect();
        let mechanicals = self
            .mechanical
            .iter()
            .map(|m| {
                let mut mode = MechanicalMode::new(&m.label, TAU * m.gamma_hz, TAU * m.detuning_hz);
                mode.thermal_occupation = m.thermal_occupation;
                mode
            })
            .collect();
        let couplings = self
            .coupling
            .iter()
            .map(|c| Coupling::new(&c.cavity, &c.mechanical, TAU * c.g_hz, c.phase_rad))
            .collect();
        Ok(NetworkSpec::new(cavities, mechanicals, couplings)?)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsolatorNetwork {
    pub kappa_ext_hz: [f64; 2],
    #[serde(default)]
    pub kappa_int_hz: [f64; 2],
    pub gamma_hz: [f64; 2],
    pub delta_hz: f64,
    pub phi_rad: f64,
    /// Coupling magnitudes in Hz, rows = cavities, columns = mechanicals.
    pub g_hz: Option<[[f64; 2]; 2]>,
    /// Alternative: per-pair cooperativities, converted through the total
    /// cavity linewidths.
    pub cooperativity: Option<[[f64; 2]; 2]>,
}

impl IsolatorNetwork {
    fn build(&self) -> Result<NetworkSpec, CliError> {
        let kappas: [(f64, f64); 2] = [
            (TAU * self.kappa_ext_hz[0], TAU * self.kappa_int_hz[0]),
            (TAU * self.kappa_ext_hz[1], TAU * self.kappa_int_hz[1]),
        ];
        let gammas = [TAU * self.gamma_hz[0], TAU * self.gamma_hz[1]];
        let g = match (&self.g_hz, &self.cooperativity) {
            (Some(g_hz), None) => [
                [TAU * g_hz[0][0], TAU * g_hz[0][1]],
                [TAU * g_hz[1][0], TAU * g_hz[1][1]],
            ],
            (None, Some(coop)) => {
                let mut g = [[0.0; 2]; 2];
                for i in 0..2 {
                    for j in 0..2 {
                        g[i][j] = coupling_for_cooperativity(
                            coop[i][j],
                            kappas[i].0 + kappas[i].1,
                            gammas[j],
                        )?;
                    }
                }
                g
            }
            _ => {
                return Err(CliError::Config(
                    "isolator preset needs exactly one of g_hz or cooperativity".into(),
                ))
            }
        };
        Ok(modenet::model::isolator_preset(
            kappas,
            gammas,
            g,
            TAU * self.delta_hz,
            self.phi_rad,
        )?)
    }
}

fn default_direction() -> String {
    "ccw".into()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CirculatorNetwork {
    pub kappa_ext_hz: [f64; 3],
    #[serde(default)]
    pub kappa_int_hz: [f64; 3],
    pub gamma_hz: [f64; 2],
    pub beta: Option<f64>,
    pub cooperativity: Option<f64>,
    #[serde(default = "default_direction")]
    pub direction: String,
}

impl CirculatorNetwork {
    pub fn build(&self) -> Result<(CirculatorDesign, NetworkSpec), CliError> {
        let beta = match (self.beta, self.cooperativity) {
            (Some(b), None) => b,
            (None, Some(c)) => beta_for_cooperativity(c)?,
            _ => {
                return Err(CliError::Config(
                    "circulator preset needs exactly one of beta or cooperativity".into(),
                ))
            }
        };
        let kappas = [
            (TAU * self.kappa_ext_hz[0], TAU * self.kappa_int_hz[0]),
            (TAU * self.kappa_ext_hz[1], TAU * self.kappa_int_hz[1]),
            (TAU * self.kappa_ext_hz[2], TAU * self.kappa_int_hz[2]),
        ];
        let gammas = [TAU * self.gamma_hz[0], TAU * self.gamma_hz[1]];
        Ok(design(
            beta,
            gammas,
            kappas,
            parse_direction(&self.direction)?,
        )?)
    }
}

pub fn parse_direction(text: &str) -> Result<Direction, CliError> {
    match text {
        "ccw" | "counter_clockwise" => Ok(Direction::CounterClockwise),
        "cw" | "clockwise" => Ok(Direction::Clockwise),
        other => Err(CliError::Config(format!(
            "direction '{other}' must be ccw or cw"
        ))),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityEntry {
    pub label: String,
    pub kappa_ext_hz: f64,
    #[serde(default)]
    pub kappa_int_hz: f64,
    #[serde(default)]
    pub bath_occupation: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanicalEntry {
    pub label: String,
    pub gamma_hz: f64,
    #[serde(default)]
    pub detuning_hz: f64,
    #[serde(default)]
    pub thermal_occupation: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingEntry {
    pub cavity: String,
    pub mechanical: String,
    pub g_hz: f64,
    #[serde(default)]
    pub phase_rad: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepScale {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub omega_min_hz: f64,
    pub omega_max_hz: f64,
    pub points: usize,
    #[serde(default)]
    pub scale: SweepScale,
}

impl SweepSection {
    pub fn grid_hz(&self) -> Result<Vec<f64>, CliError> {
        if self.points == 0 {
            return Err(CliError::Config("sweep.points must be >= 1".into()));
        }
        if !(self.omega_min_hz.is_finite() && self.omega_max_hz.is_finite())
            || self.omega_min_hz > self.omega_max_hz
        {
            return Err(CliError::Config(
                "sweep range needs finite omega_min_hz <= omega_max_hz".into(),
            ));
        }
        if self.points == 1 {
            return Ok(vec![self.omega_min_hz]);
        }
        let n = self.points;
        match self.scale {
            SweepScale::Linear => Ok((0..n)
                .map(|i| {
                    self.omega_min_hz
                        + (self.omega_max_hz - self.omega_min_hz) * (i as f64) / ((n - 1) as f64)
                })
                .collect()),
            SweepScale::Log => {
                if self.omega_min_hz <= 0.0 {
                    return Err(CliError::Config("log sweeps need omega_min_hz > 0".into()));
                }
                let ratio = self.omega_max_hz / self.omega_min_hz;
                Ok((0..n)
                    .map(|i| self.omega_min_hz * ratio.powf((i as f64) / ((n - 1) as f64)))
                    .collect())
            }
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OccupationsSection {
    #[serde(default)]
    pub mechanical: BTreeMap<String, f64>,
    #[serde(default)]
    pub cavity: BTreeMap<String, f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<String>,
    pub precision: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSection {
    pub isolator: Option<IsolatorDesignParams>,
    pub circulator: Option<CirculatorDesignParams>,
}

fn default_eta2() -> [f64; 2] {
    [1.0, 1.0]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsolatorDesignParams {
    pub gamma_hz: f64,
    pub delta_hz: f64,
    #[serde(default = "default_eta2")]
    pub eta: [f64; 2],
    /// Mechanical bath occupations used for the noise predictions.
    #[serde(default)]
    pub occupation: [f64; 2],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CirculatorDesignParams {
    pub gamma_hz: [f64; 2],
    pub kappa_ext_hz: [f64; 3],
    #[serde(default)]
    pub kappa_int_hz: [f64; 3],
    pub beta: Option<f64>,
    pub cooperativity: Option<f64>,
    #[serde(default = "default_direction")]
    pub direction: String,
    #[serde(default)]
    pub occupation: [f64; 2],
}
