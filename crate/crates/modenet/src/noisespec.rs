//! Symmetrized output-noise spectra, the isolator's forward/backward noise
//! closed forms, and the reduced two-mode picture of noise interference
//! (effective couplings after eliminating the auxiliary cavity and the
//! shared mechanical mode).
//!
//! All noise values are symmetrized and measured in quanta: vacuum
//! contributes 1/2. Output spectra evaluate the scattering matrix at -omega,
//! consistent with the e^{-i*omega*t} signal convention used in [`crate::dynamics`].

use std::collections::BTreeMap;

use nalgebra::Matrix2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::dynamics::{assemble, scattering, DynamicsMatrices, PortKind};
use crate::error::{Error, Result};
use crate::isolator::IsolatorParams;
use crate::model::{mechanical_susceptibility, NetworkSpec};

/// Bath occupations keyed by mode label. Labels absent from a map fall back
/// to the occupation stored on the network itself, so an empty set means
/// "use the network as configured".
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OccupationSet {
    pub mechanical: BTreeMap<String, f64>,
    pub cavity: BTreeMap<String, f64>,
}

impl OccupationSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builder-style mechanical occupation override.
    pub fn with_mechanical(mut self, label: impl Into<String>, n: f64) -> Self {
        self.mechanical.insert(label.into(), n);
        self
    }

    /// Builder-style cavity-bath occupation override.
    pub fn with_cavity(mut self, label: impl Into<String>, n: f64) -> Self {
        self.cavity.insert(label.into(), n);
        self
    }

    fn validate(&self, net: &NetworkSpec) -> Result<()> {
        for (label, &n) in &self.mechanical {
            if net.mechanical(label).is_none() {
                return Err(Error::NotFound(format!("mechanical '{label}'")));
            }
            if !n.is_finite() || n < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "occupation of '{label}' must be >= 0"
                )));
            }
        }
        for (label, &n) in &self.cavity {
            if net.cavity(label).is_none() {
                return Err(Error::NotFound(format!("cavity '{label}'")));
            }
            if !n.is_finite() || n < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "occupation of '{label}' must be >= 0"
                )));
            }
        }
        Ok(())
    }
}

/// Symmetrized input occupation per channel, in port order: 1/2 on external
/// channels, bath occupation + 1/2 on internal-loss channels, thermal
/// occupation + 1/2 on mechanical channels.
fn symmetrized_inputs(
    net: &NetworkSpec,
    dynamics: &DynamicsMatrices,
    occ: &OccupationSet,
) -> Vec<f64> {
    dynamics
        .ports
        .iter()
        .map(|port| match port.kind {
            PortKind::External => 0.5,
            PortKind::InternalLoss => {
                let stored = net.cavity(&port.mode).map_or(0.0, |c| c.bath_occupation);
                occ.cavity.get(&port.mode).copied().unwrap_or(stored) + 0.5
            }
            PortKind::MechanicalBath => {
                let stored = net
                    .mechanical(&port.mode)
                    .map_or(0.0, |m| m.thermal_occupation);
                occ.mechanical.get(&port.mode).copied().unwrap_or(stored) + 0.5
            }
        })
        .collect()
}

fn noise_row(dynamics: &DynamicsMatrices, inputs: &[f64], row: usize, omega: f64) -> Result<f64> {
    let s = scattering(dynamics, -omega)?;
    Ok(inputs
        .iter()
        .enumerate()
        .map(|(q, &n)| s.element(row, q).norm_sqr() * n)
        .sum())
}

/// Symmetrized output noise in quanta at one external cavity port:
/// N_p(omega) = sum_q |S_pq(-omega)|^2 * n_q^sym.
pub fn output_noise(net: &NetworkSpec, occ: &OccupationSet, omega: f64, port: &str) -> Result<f64> {
    occ.validate(net)?;
    let row = net
        .cavities()
        .iter()
        .position(|c| c.label == port)
        .ok_or_else(|| Error::NotFound(format!("external port '{port}'")))?;
    let dynamics = assemble(net);
    let inputs = symmetrized_inputs(net, &dynamics, occ);
    noise_row(&dynamics, &inputs, row, omega)
}

/// Output-noise spectrum of one external port over a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpectrum {
    pub port: String,
    pub omegas: Vec<f64>,
    pub quanta: Vec<f64>,
}

/// Evaluate [`output_noise`] over many frequencies in parallel.
pub fn noise_spectrum(
    net: &NetworkSpec,
    occ: &OccupationSet,
    port: &str,
    omegas: &[f64],
) -> Result<NoiseSpectrum> {
    occ.validate(net)?;
    let row = net
        .cavities()
        .iter()
        .position(|c| c.label == port)
        .ok_or_else(|| Error::NotFound(format!("external port '{port}'")))?;
    let dynamics = assemble(net);
    let inputs = symmetrized_inputs(net, &dynamics, occ);
    let quanta = omegas
        .par_iter()
        .map(|&w| noise_row(&dynamics, &inputs, row, w))
        .collect::<Result<Vec<f64>>>()?;
    Ok(NoiseSpectrum {
        port: port.to_string(),
        omegas: omegas.to_vec(),
        quanta,
    })
}

/// On-resonance noise of the symmetric overcoupled isolator design point:
/// forward N_fw = 1/2 + (n1+n2)/(4C), backward N_bw = 1/2 + (n1+n2)/2.
pub fn forward_backward_noise(n1: f64, n2: f64, c: f64) -> Result<(f64, f64)> {
    if !(n1.is_finite() && n2.is_finite() && c.is_finite()) || n1 < 0.0 || n2 < 0.0 {
        return Err(Error::InvalidParameter("occupations must be >= 0".into()));
    }
    if c < 0.5 {
        return Err(Error::DesignInfeasible(format!(
            "cooperativity {c} < 1/2 is outside the isolation design branch"
        )));
    }
    let forward = 0.5 + (n1 + n2) / (4.0 * c);
    let backward = 0.5 + (n1 + n2) / 2.0;
    Ok((forward, backward))
}

/// Effective coupling between the second cavity and the second mechanical
/// mode once the first cavity and first mechanical mode are eliminated at
/// frequency omega:
///
/// T22(omega) = -i * (g22 e^{i phi} - g21 g11 g12 / D1(omega)),
/// D1 = chi1^{-1} chi_c1^{-1} + g11^2.
///
/// The direct term carries the stored coupling phase; the subtracted term is
/// the interference path through the eliminated pair.
pub fn effective_coupling_t22(p: &IsolatorParams, omega: f64) -> Result<Complex64> {
    p.validate()?;
    let chi1_inv = Complex64::new(p.gamma1 / 2.0, -(p.delta + omega));
    let chi_c1_inv = Complex64::new(p.kappa1 / 2.0, -omega);
    let d1 = chi1_inv * chi_c1_inv + p.g11 * p.g11;
    if d1.norm() == 0.0 {
        return Err(Error::DegenerateDenominator {
            omega,
            magnitude: 0.0,
        });
    }
    let direct = p.g22 * Complex64::from_polar(1.0, p.phi);
    let path = p.g21 * p.g11 * p.g12 / d1;
    Ok(-Complex64::i() * (direct - path))
}

/// Companion of [`effective_coupling_t22`]: effective coupling between the
/// first cavity and the second mechanical mode once the second cavity and
/// first mechanical mode are eliminated:
///
/// T12(omega) = -i * (g12 - g11 g21 g22 e^{i phi} / D2(omega)),
/// D2 = chi1^{-1} chi_c2^{-1} + g21^2.
pub fn effective_coupling_t12(p: &IsolatorParams, omega: f64) -> Result<Complex64> {
    p.validate()?;
    let chi1_inv = Complex64::new(p.gamma1 / 2.0, -(p.delta + omega));
    let chi_c2_inv = Complex64::new(p.kappa2 / 2.0, -omega);
    let d2 = chi1_inv * chi_c2_inv + p.g21 * p.g21;
    if d2.norm() == 0.0 {
        return Err(Error::DegenerateDenominator {
            omega,
            magnitude: 0.0,
        });
    }
    let path = p.g11 * p.g21 * p.g22 * Complex64::from_polar(1.0, p.phi) / d2;
    Ok(-Complex64::i() * (Complex64::new(p.g12, 0.0) - path))
}

/// Frequency-dependent cavity-cavity coupling left after eliminating every
/// mechanical mode: -i * sum_k chi_k(omega) g_ik g_jk^*, with the coupling
/// phases folded into complex amplitudes.
pub fn eliminated_cavity_coupling(
    net: &NetworkSpec,
    cavity_i: &str,
    cavity_j: &str,
    omega: f64,
) -> Result<Complex64> {
    if net.cavity(cavity_i).is_none() {
        return Err(Error::NotFound(format!("cavity '{cavity_i}'")));
    }
    if net.cavity(cavity_j).is_none() {
        return Err(Error::NotFound(format!("cavity '{cavity_j}'")));
    }
    let mut sum = Complex64::new(0.0, 0.0);
    for mech in net.mechanicals() {
        let (Some(ci), Some(cj)) = (
            net.coupling(cavity_i, &mech.label),
            net.coupling(cavity_j, &mech.label),
        ) else {
            continue;
        };
        let chi = mechanical_susceptibility(mech, omega);
        sum += chi * ci.amplitude() * cj.amplitude().conj();
    }
    Ok(-Complex64::i() * sum)
}

/// Scattering matrix of the loss-matched ideal isolator:
/// [[0, 0], [T, 0]] with T = sqrt(1 - 1/(2C)).
pub fn ideal_isolator_scattering(c: f64) -> Result<Matrix2<Complex64>> {
    if !c.is_finite() {
        return Err(Error::InvalidParameter("non-finite cooperativity".into()));
    }
    if c < 0.5 {
        return Err(Error::DesignInfeasible(format!(
            "cooperativity {c} < 1/2 has no isolating design"
        )));
    }
    let t = (1.0 - 1.0 / (2.0 * c)).sqrt();
    let zero = Complex64::new(0.0, 0.0);
    Ok(Matrix2::new(zero, zero, Complex64::new(t, 0.0), zero))
}

/// Noise leaving the isolated port of the ideal isolator: (n1 + n2 + 1)/2.
/// The back-routed mechanical baths hit the port at full weight regardless
/// of cooperativity.
pub fn ideal_backward_noise(n1: f64, n2: f64) -> f64 {
    (n1 + n2 + 1.0) / 2.0
}
