//! Mode-network description: cavities, mechanical modes and their
//! parametric couplings, plus the closed-form parameter helpers
//! (cooperativity, susceptibility, effective linewidth) and the
//! two-cavity / three-cavity presets.
//!
//! All rates and frequencies are angular (rad/s). Conversion from ordinary
//! frequency happens at the configuration boundary, not here.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// An optical or microwave cavity mode with an external (measured) port and
/// an internal loss channel.
#[derive(Debug, Clone, PartialEq)]
pub struct CavityMode {
    pub label: String,
    /// External coupling rate kappa_ext >= 0.
    pub kappa_ext: f64,
    /// Internal loss rate kappa_int >= 0; kappa_ext + kappa_int > 0.
    pub kappa_int: f64,
    /// Thermal occupation of the internal-loss bath.
    pub bath_occupation: f64,
}

impl CavityMode {
    pub fn new(label: impl Into<String>, kappa_ext: f64, kappa_int: f64) -> Self {
        Self {
            label: label.into(),
            kappa_ext,
            kappa_int,
            bath_occupation: 0.0,
        }
    }

    /// Total linewidth kappa = kappa_ext + kappa_int.
    pub fn kappa(&self) -> f64 {
        self.kappa_ext + self.kappa_int
    }

    /// External coupling fraction eta = kappa_ext / kappa.
    pub fn eta(&self) -> f64 {
        self.kappa_ext / self.kappa()
    }
}

/// A mechanical mode in its rotating frame.
#[derive(Debug, Clone, PartialEq)]
pub struct MechanicalMode {
    pub label: String,
    /// Intrinsic linewidth Gamma_m > 0.
    pub gamma: f64,
    /// Rotating-frame detuning d (the frame offset of this mode's pump).
    pub detuning: f64,
    /// Thermal bath occupation n >= 0.
    pub thermal_occupation: f64,
}

impl MechanicalMode {
    pub fn new(label: impl Into<String>, gamma: f64, detuning: f64) -> Self {
        Self {
            label: label.into(),
            gamma,
            detuning,
            thermal_occupation: 0.0,
        }
    }
}

/// A pump-enhanced beam-splitter coupling between one cavity and one
/// mechanical mode: magnitude g >= 0 and pump phase theta.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    pub cavity: String,
    pub mechanical: String,
    pub g: f64,
    pub phase: f64,
}

impl Coupling {
    pub fn new(
        cavity: impl Into<String>,
        mechanical: impl Into<String>,
        g: f64,
        phase: f64,
    ) -> Self {
        Self {
            cavity: cavity.into(),
            mechanical: mechanical.into(),
            g,
            phase,
        }
    }

    /// Coupling as a complex amplitude g * exp(i*theta).
    pub fn amplitude(&self) -> Complex64 {
        Complex64::from_polar(self.g, self.phase)
    }
}

/// A pump tone described by the vacuum coupling rate it enhances and the
/// intracavity pump photon number. The field-enhanced coupling magnitude is
/// g0 * sqrt(n); only that product enters the linearized dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpSpec {
    /// Single-photon coupling rate g0 >= 0 (rad/s).
    pub vacuum_coupling: f64,
    /// Pump photon number n >= 0.
    pub photon_number: f64,
}

impl PumpSpec {
    pub fn new(vacuum_coupling: f64, photon_number: f64) -> Result<Self> {
        if !(vacuum_coupling.is_finite() && photon_number.is_finite()) {
            return Err(Error::InvalidParameter(
                "pump parameters must be finite".into(),
            ));
        }
        if vacuum_coupling < 0.0 || photon_number < 0.0 {
            return Err(Error::InvalidParameter(
                "pump parameters must be >= 0".into(),
            ));
        }
        Ok(Self {
            vacuum_coupling,
            photon_number,
        })
    }

    /// Enhanced coupling magnitude g = g0 * sqrt(n).
    pub fn enhanced_coupling(&self) -> f64 {
        self.vacuum_coupling * self.photon_number.sqrt()
    }
}

/// A validated mode network. Construction checks every invariant once;
/// afterwards the network is immutable, so it can be shared freely across
/// threads during sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    cavities: Vec<CavityMode>,
    mechanicals: Vec<MechanicalMode>,
    couplings: Vec<Coupling>,
}

fn check_finite(name: &str, label: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} of '{label}' is not finite"
        )))
    }
}

fn check_label(label: &str) -> Result<()> {
    let ok = !label.is_empty() && label.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "label '{label}' must be non-empty and use only [A-Za-z0-9_]"
        )))
    }
}

/// Wrap a phase onto the principal branch (-pi, pi].
pub fn wrap_phase(phase: f64) -> f64 {
    let pi = std::f64::consts::PI;
    if phase > -pi && phase <= pi {
        // already on the branch: keep the value bit-exact
        return phase;
    }
    let mut w = (phase + pi).rem_euclid(std::f64::consts::TAU) - pi;
    if w == -pi {
        w = pi;
    }
    w
}

impl NetworkSpec {
    /// Validate and freeze a network description.
    ///
    /// Invariants enforced here:
    /// * at least one cavity; labels unique across cavities and mechanicals;
    /// * kappa_ext, kappa_int >= 0 with kappa > 0; Gamma_m > 0;
    /// * occupations >= 0; coupling magnitudes >= 0;
    /// * every coupling endpoint refers to a declared mode, at most one
    ///   coupling per (cavity, mechanical) pair;
    /// * all scalars finite; phases stored on the principal branch (-pi, pi].
    pub fn new(
        cavities: Vec<CavityMode>,
        mechanicals: Vec<MechanicalMode>,
        couplings: Vec<Coupling>,
    ) -> Result<Self> {
        if cavities.is_empty() {
            return Err(Error::InvalidParameter(
                "a network needs at least one cavity".into(),
            ));
        }
        let mut labels = std::collections::BTreeSet::new();
        for c in &cavities {
            check_label(&c.label)?;
            check_finite("kappa_ext", &c.label, c.kappa_ext)?;
            check_finite("kappa_int", &c.label, c.kappa_int)?;
            check_finite("bath_occupation", &c.label, c.bath_occupation)?;
            if c.kappa_ext < 0.0 || c.kappa_int < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "cavity '{}' has a negative loss rate",
                    c.label
                )));
            }
            if c.kappa() <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "cavity '{}' has zero total linewidth",
                    c.label
                )));
            }
            if c.bath_occupation < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "cavity '{}' has a negative bath occupation",
                    c.label
                )));
            }
            if !labels.insert(c.label.clone()) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate label '{}'",
                    c.label
                )));
            }
        }
        for m in &mechanicals {
            check_label(&m.label)?;
            check_finite("gamma", &m.label, m.gamma)?;
            check_finite("detuning", &m.label, m.detuning)?;
            check_finite("thermal_occupation", &m.label, m.thermal_occupation)?;
            if m.gamma <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "mechanical '{}' needs Gamma_m > 0",
                    m.label
                )));
            }
            if m.thermal_occupation < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "mechanical '{}' has a negative occupation",
                    m.label
                )));
            }
            if !labels.insert(m.label.clone()) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate label '{}'",
                    m.label
                )));
            }
        }
        let cavity_index: std::collections::BTreeMap<&str, usize> = cavities
            .iter()
            .enumerate()
            .map(|(i, c)| (c.label.as_str(), i))
            .collect();
        let mech_index: std::collections::BTreeMap<&str, usize> = mechanicals
            .iter()
            .enumerate()
            .map(|(i, m)| (m.label.as_str(), i))
            .collect();
        let mut seen_pairs = std::collections::BTreeSet::new();
        let mut couplings = couplings;
        for cpl in &mut couplings {
            if !cavity_index.contains_key(cpl.cavity.as_str()) {
                return Err(Error::NotFound(format!("cavity '{}'", cpl.cavity)));
            }
            if !mech_index.contains_key(cpl.mechanical.as_str()) {
                return Err(Error::NotFound(format!("mechanical '{}'", cpl.mechanical)));
            }
            check_finite("g", &cpl.cavity, cpl.g)?;
            check_finite("phase", &cpl.cavity, cpl.phase)?;
            if cpl.g < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "coupling {} <-> {} has negative magnitude",
                    cpl.cavity, cpl.mechanical
                )));
            }
            if !seen_pairs.insert((cpl.cavity.clone(), cpl.mechanical.clone())) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate coupling {} <-> {}",
                    cpl.cavity, cpl.mechanical
                )));
            }
            cpl.phase = wrap_phase(cpl.phase);
        }
        Ok(Self {
            cavities,
            mechanicals,
            couplings,
        })
    }

    pub fn cavities(&self) -> &[CavityMode] {
        &self.cavities
    }

    pub fn mechanicals(&self) -> &[MechanicalMode] {
        &self.mechanicals
    }

    pub fn couplings(&self) -> &[Coupling] {
        &self.couplings
    }

    pub fn cavity(&self, label: &str) -> Option<&CavityMode> {
        self.cavities.iter().find(|c| c.label == label)
    }

    pub fn mechanical(&self, label: &str) -> Option<&MechanicalMode> {
        self.mechanicals.iter().find(|m| m.label == label)
    }

    pub fn coupling(&self, cavity: &str, mechanical: &str) -> Option<&Coupling> {
        self.couplings
            .iter()
            .find(|c| c.cavity == cavity && c.mechanical == mechanical)
    }

    /// Number of internal modes (cavities + mechanicals).
    pub fn dim(&self) -> usize {
        self.cavities.len() + self.mechanicals.len()
    }

    /// Number of input-output channels: one external and one internal-loss
    /// channel per cavity plus one bath channel per mechanical mode.
    pub fn n_ports(&self) -> usize {
        2 * self.cavities.len() + self.mechanicals.len()
    }

    /// Cooperativity of one coupling, 4g^2/(kappa*Gamma), using the stored
    /// magnitudes. Zero when the pair is uncoupled.
    pub fn pair_cooperativity(&self, cavity: &str, mechanical: &str) -> Result<f64> {
        let cav = self
            .cavity(cavity)
            .ok_or_else(|| Error::NotFound(format!("cavity '{cavity}'")))?;
        let mech = self
            .mechanical(mechanical)
            .ok_or_else(|| Error::NotFound(format!("mechanical '{mechanical}'")))?;
        match self.coupling(cavity, mechanical) {
            Some(cpl) => cooperativity(cpl.g, cav.kappa(), mech.gamma),
            None => Ok(0.0),
        }
    }

    /// Effective linewidth of one mechanical mode, Gamma_m * (1 + sum_i C_i),
    /// summed over every cavity coupled to it.
    pub fn effective_mechanical_linewidth(&self, mechanical: &str) -> Result<f64> {
        let mech = self
            .mechanical(mechanical)
            .ok_or_else(|| Error::NotFound(format!("mechanical '{mechanical}'")))?;
        let mut coops = Vec::new();
        for cav in &self.cavities {
            coops.push(self.pair_cooperativity(&cav.label, mechanical)?);
        }
        effective_linewidth(mech.gamma, &coops)
    }
}

/// Cooperativity C = 4 g^2 / (kappa * Gamma_m).
pub fn cooperativity(g: f64, kappa: f64, gamma_m: f64) -> Result<f64> {
    if !(g.is_finite() && kappa.is_finite() && gamma_m.is_finite()) {
        return Err(Error::InvalidParameter("non-finite input".into()));
    }
    if g < 0.0 {
        return Err(Error::InvalidParameter("coupling g must be >= 0".into()));
    }
    if kappa <= 0.0 || gamma_m <= 0.0 {
        return Err(Error::InvalidParameter(
            "kappa and Gamma_m must be positive".into(),
        ));
    }
    Ok(4.0 * g * g / (kappa * gamma_m))
}

/// Coupling magnitude that realizes cooperativity C: g = sqrt(C*kappa*Gamma)/2.
pub fn coupling_for_cooperativity(c: f64, kappa: f64, gamma_m: f64) -> Result<f64> {
    if !(c.is_finite() && kappa.is_finite() && gamma_m.is_finite()) {
        return Err(Error::InvalidParameter("non-finite input".into()));
    }
    if c < 0.0 {
        return Err(Error::InvalidParameter("cooperativity must be >= 0".into()));
    }
    if kappa <= 0.0 || gamma_m <= 0.0 {
        return Err(Error::InvalidParameter(
            "kappa and Gamma_m must be positive".into(),
        ));
    }
    Ok((c * kappa * gamma_m).sqrt() / 2.0)
}

/// Rotating-frame mechanical susceptibility
/// chi(omega) = 1 / (Gamma_m/2 - i*(d + omega)).
///
/// With d = +delta this is 1/(Gamma/2 - i(delta + omega)); with d = -delta,
/// 1/(Gamma/2 + i(delta - omega)).
pub fn mechanical_susceptibility(mode: &MechanicalMode, omega: f64) -> Complex64 {
    Complex64::new(mode.gamma / 2.0, -(mode.detuning + omega)).inv()
}

/// Cavity susceptibility chi_c(omega) = 1 / (kappa/2 - i*omega).
pub fn cavity_susceptibility(mode: &CavityMode, omega: f64) -> Complex64 {
    Complex64::new(mode.kappa() / 2.0, -omega).inv()
}

/// Damped effective linewidth Gamma_eff = Gamma_m * (1 + sum C_i).
pub fn effective_linewidth(gamma_m: f64, cooperativities: &[f64]) -> Result<f64> {
    if !gamma_m.is_finite() || gamma_m <= 0.0 {
        return Err(Error::InvalidParameter("Gamma_m must be positive".into()));
    }
    let mut sum = 0.0;
    for &c in cooperativities {
        if !c.is_finite() || c < 0.0 {
            return Err(Error::InvalidParameter(
                "cooperativities must be >= 0".into(),
            ));
        }
        sum += c;
    }
    Ok(gamma_m * (1.0 + sum))
}

/// Return a copy of the network with one mechanical linewidth broadened by an
/// extra damping channel: Gamma_m -> Gamma_m + gamma_cross. Cooperativities
/// computed from the stored couplings then scale by Gamma_m/(Gamma_m +
/// gamma_cross) automatically.
pub fn apply_cross_damping(
    net: &NetworkSpec,
    mechanical: &str,
    gamma_cross: f64,
) -> Result<NetworkSpec> {
    if !gamma_cross.is_finite() || gamma_cross < 0.0 {
        return Err(Error::InvalidParameter(
            "cross-damping rate must be >= 0".into(),
        ));
    }
    if net.mechanical(mechanical).is_none() {
        return Err(Error::NotFound(format!("mechanical '{mechanical}'")));
    }
    let mechanicals = net
        .mechanicals
        .iter()
        .map(|m| {
            let mut m = m.clone();
            if m.label == mechanical {
                m.gamma += gamma_cross;
            }
            m
        })
        .collect();
    NetworkSpec::new(net.cavities.clone(), mechanicals, net.couplings.clone())
}

/// Two cavities sharing two mechanical modes: the interference isolator.
///
/// Layout: cavities `a1`, `a2`; mechanicals `b1` (frame detuning +delta) and
/// `b2` (frame detuning -delta). Couplings `g[i][j]` connect cavity i+1 to
/// mechanical j+1; the loop phase phi sits on the a2-b2 coupling, so the
/// dynamics matrix carries -i*g22*exp(+i*phi) in the (a2, b2) slot. With
/// tan(phi/2) = Gamma_m/(2*delta) the backward element S12 is nulled on
/// resonance while the forward element S21 passes.
///
/// `kappas` holds (kappa_ext, kappa_int) per cavity.
pub fn isolator_preset(
    kappas: [(f64, f64); 2],
    gammas: [f64; 2],
    g: [[f64; 2]; 2],
    delta: f64,
    phi: f64,
) -> Result<NetworkSpec> {
    if !delta.is_finite() || !phi.is_finite() {
        return Err(Error::InvalidParameter(
            "delta and phi must be finite".into(),
        ));
    }
    let cavities = vec![
        CavityMode::new("a1", kappas[0].0, kappas[0].1),
        CavityMode::new("a2", kappas[1].0, kappas[1].1),
    ];
    let mechanicals = vec![
        MechanicalMode::new("b1", gammas[0], delta),
        MechanicalMode::new("b2", gammas[1], -delta),
    ];
    let couplings = vec![
        Coupling::new("a1", "b1", g[0][0], 0.0),
        Coupling::new("a1", "b2", g[0][1], 0.0),
        Coupling::new("a2", "b1", g[1][0], 0.0),
        Coupling::new("a2", "b2", g[1][1], phi),
    ];
    NetworkSpec::new(cavities, mechanicals, couplings)
}

/// Lower bound on the circulator pump-phase parameter beta.
pub const CIRCULATOR_BETA_MIN: f64 = 0.288_675_134_594_812_9; // 1/(2 sqrt(3))

/// Three cavities sharing two mechanical modes: the circulator.
///
/// Layout: cavities `a1`..`a3`, mechanicals `b1`, `b2` with frame detunings
/// d1 = -beta*Gamma_1 and d2 = +beta*Gamma_2. Every cavity couples to both
/// mechanicals with matched cooperativity C = 2*beta/sqrt(3) - 1/3
/// (g_ij = sqrt(C*kappa_i*Gamma_j)/2); the b1 couplings carry the pump
/// phases `phases[i]`, the b2 couplings are real.
///
/// `kappas` holds (kappa_ext, kappa_int) per cavity. Infeasible when
/// beta <= 1/(2*sqrt(3)) (the cooperativity would not be positive).
pub fn circulator_preset(
    kappas: [(f64, f64); 3],
    gammas: [f64; 2],
    beta: f64,
    phases: [f64; 3],
) -> Result<NetworkSpec> {
    if !beta.is_finite() {
        return Err(Error::InvalidParameter("beta must be finite".into()));
    }
    if beta <= CIRCULATOR_BETA_MIN {
        return Err(Error::DesignInfeasible(format!(
            "beta = {beta} <= 1/(2 sqrt(3)); cooperativity would be <= 0"
        )));
    }
    let c = 2.0 * beta / 3.0_f64.sqrt() - 1.0 / 3.0;
    let detunings = [-beta * gammas[0], beta * gammas[1]];
    let cavities: Vec<CavityMode> = (0..3)
        .map(|i| CavityMode::new(format!("a{}", i + 1), kappas[i].0, kappas[i].1))
        .collect();
    let mechanicals: Vec<MechanicalMode> = (0..2)
        .map(|j| MechanicalMode::new(format!("b{}", j + 1), gammas[j], detunings[j]))
        .collect();
    let mut couplings = Vec::new();
    for i in 0..3 {
        let kappa = kappas[i].0 + kappas[i].1;
        for (j, &gamma) in gammas.iter().enumerate() {
            let g = coupling_for_cooperativity(c, kappa, gamma)?;
            let phase = if j == 0 { phases[i] } else { 0.0 };
            couplings.push(Coupling::new(
                format!("a{}", i + 1),
                format!("b{}", j + 1),
                g,
                phase,
            ));
        }
    }
    NetworkSpec::new(cavities, mechanicals, couplings)
}
