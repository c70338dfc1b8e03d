//! Design and closed-form analysis of the three-cavity, two-mechanical-mode
//! circulator: the phase/detuning/cooperativity solution, per-hop
//! transmission, port noise, numeric null certification, and the isolation
//! bandwidth of designed nonreciprocal networks.

use std::fmt;

use crate::dynamics::{assemble, scattering, DynamicsMatrices};
use crate::error::{Error, Result};
use crate::isolator::{ratio_db, DEFAULT_ISOLATION_CAP_DB};
use crate::model::{circulator_preset, NetworkSpec, CIRCULATOR_BETA_MIN};

/// Suppressed elements must fall below this amplitude for certification.
pub const NULL_TOLERANCE: f64 = 1e-10;

/// Circulating power transmissions must match the closed form to this
/// relative tolerance for certification.
pub const TRANSMISSION_TOLERANCE: f64 = 1e-9;

/// Circulation sense of a designed network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Signals hop 1 -> 2 -> 3 -> 1; the reversed elements are suppressed.
    CounterClockwise,
    /// Signals hop 1 -> 3 -> 2 -> 1.
    Clockwise,
}

/// Solved circulator parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirculatorDesign {
    /// Detuning scale in units of the mechanical linewidths.
    pub beta: f64,
    /// First-mode detuning scale; the solution branch fixes alpha = -beta.
    pub alpha: f64,
    /// Matched cooperativity C = 2 beta / sqrt(3) - 1/3 of every pair.
    pub cooperativity: f64,
    /// Pump phases on the first-mechanical couplings.
    pub phases: [f64; 3],
    /// Mechanical frame detunings (alpha Gamma_1, beta Gamma_2); they do not
    /// change with direction.
    pub detunings: [f64; 2],
    pub direction: Direction,
}

/// Detuning parameter realizing a target cooperativity:
/// beta = (sqrt(3)/2) (C + 1/3).
pub fn beta_for_cooperativity(c: f64) -> Result<f64> {
    if !c.is_finite() || c <= 0.0 {
        return Err(Error::DesignInfeasible(format!(
            "cooperativity {c} must be positive"
        )));
    }
    Ok(3.0_f64.sqrt() / 2.0 * (c + 1.0 / 3.0))
}

/// Solve the circulator design at detuning parameter `beta` and emit the
/// matching five-mode network.
///
/// The counter-clockwise branch uses pump phases (2pi/3, -2pi/3, 0) and
/// frame detunings (-beta Gamma_1, +beta Gamma_2); the clockwise branch
/// negates the phases and keeps the detunings. Feasibility requires
/// beta > 1/(2 sqrt(3)) (so C > 0) and C < min(kappa_i / Gamma_j), the
/// validity range of the closed-form transmission and noise expressions.
pub fn design(
    beta: f64,
    gammas: [f64; 2],
    kappas: [(f64, f64); 3],
    direction: Direction,
) -> Result<(CirculatorDesign, NetworkSpec)> {
    if !beta.is_finite() {
        return Err(Error::InvalidParameter("beta must be finite".into()));
    }
    if gammas.iter().any(|&g| !g.is_finite() || g <= 0.0) {
        return Err(Error::InvalidParameter(
            "mechanical linewidths must be positive".into(),
        ));
    }
    if beta <= CIRCULATOR_BETA_MIN {
        return Err(Error::DesignInfeasible(format!(
            "beta = {beta} <= 1/(2 sqrt(3)); cooperativity would be <= 0"
        )));
    }
    let c = 2.0 * beta / 3.0_f64.sqrt() - 1.0 / 3.0;
    let kappa_min = kappas
        .iter()
        .map(|&(ext, int)| ext + int)
        .fold(f64::INFINITY, f64::min);
    let gamma_max = gammas[0].max(gammas[1]);
    let bound = kappa_min / gamma_max;
    if c >= bound {
        return Err(Error::DesignInfeasible(format!(
            "cooperativity {c:.6} >= min(kappa)/max(Gamma) = {bound:.6}; closed forms invalid"
        )));
    }
    let third = std::f64::consts::TAU / 3.0;
    let phases = match direction {
        Direction::CounterClockwise => [third, -third, 0.0],
        Direction::Clockwise => [-third, third, 0.0],
    };
    let net = circulator_preset(kappas, gammas, beta, phases)?;
    let design = CirculatorDesign {
        beta,
        alpha: -beta,
        cooperativity: c,
        phases,
        detunings: [-beta * gammas[0], beta * gammas[1]],
        direction,
    };
    Ok((design, net))
}

/// Power transmission of one circulating hop: eta_pair / (1 + 1/(3C))^2,
/// where `eta_pair` is the product of the two external coupling fractions of
/// the hop.
pub fn circulation_transmission(c: f64, eta_pair: f64) -> Result<f64> {
    if !c.is_finite() || c <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "cooperativity {c} must be positive"
        )));
    }
    if !eta_pair.is_finite() || !(0.0..=1.0).contains(&eta_pair) {
        return Err(Error::InvalidParameter(
            "eta product must lie in [0, 1]".into(),
        ));
    }
    let f = 1.0 + 1.0 / (3.0 * c);
    Ok(eta_pair / (f * f))
}

/// On-resonance noise emitted at each circulator port:
/// 1/2 + 3C/(3C+1)^2 (n1 + n2). Identical at all three ports. Valid on the
/// design branch only (C > 0 and, at design time, C < min(kappa_i/Gamma_j)).
pub fn circulator_noise(c: f64, n1: f64, n2: f64) -> Result<f64> {
    if !c.is_finite() || c <= 0.0 {
        return Err(Error::DesignInfeasible(format!(
            "cooperativity {c} is outside the design branch"
        )));
    }
    if !(n1.is_finite() && n2.is_finite()) || n1 < 0.0 || n2 < 0.0 {
        return Err(Error::InvalidParameter("occupations must be >= 0".into()));
    }
    let t = 3.0 * c;
    Ok(0.5 + t / ((t + 1.0) * (t + 1.0)) * (n1 + n2))
}

/// Numeric certification report of a designed circulator: the three
/// suppressed elements and the three circulating ones at omega = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct NullCertificate {
    pub direction: Direction,
    /// Matched cooperativity recovered from the network couplings.
    pub cooperativity: f64,
    /// (element, amplitude) of the suppressed-direction entries.
    pub suppressed: [(String, f64); 3],
    /// (element, measured power, predicted power) of the circulating entries.
    pub circulating: [(String, f64, f64); 3],
    pub max_suppressed: f64,
    pub max_transmission_error: f64,
}

impl fmt::Display for NullCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "circulator certificate ({}) C = {:.9}",
            match self.direction {
                Direction::CounterClockwise => "counter-clockwise",
                Direction::Clockwise => "clockwise",
            },
            self.cooperativity
        )?;
        for (name, mag) in &self.suppressed {
            writeln!(f, "  suppressed |{name}| = {mag:.3e}")?;
        }
        for (name, got, want) in &self.circulating {
            writeln!(
                f,
                "  circulating |{name}|^2 = {got:.12} (predicted {want:.12})"
            )?;
        }
        write!(
            f,
            "  worst null {:.3e}, worst transmission error {:.3e}",
            self.max_suppressed, self.max_transmission_error
        )
    }
}

fn matched_cooperativity(net: &NetworkSpec) -> Result<f64> {
    let mut coops = Vec::new();
    for cav in net.cavities() {
        for mech in net.mechanicals() {
            coops.push(net.pair_cooperativity(&cav.label, &mech.label)?);
        }
    }
    let first = coops[0];
    if first <= 0.0 {
        return Err(Error::InvalidParameter(
            "network has an uncoupled cavity/mechanical pair".into(),
        ));
    }
    for &c in &coops {
        if (c - first).abs() > 1e-6 * first {
            return Err(Error::InvalidParameter(
                "cooperativities are not matched; not a designed circulator".into(),
            ));
        }
    }
    Ok(first)
}

/// Evaluate the designed null pattern at omega = 0: the three elements
/// against the circulation sense must vanish below [`NULL_TOLERANCE`] and
/// the three circulating powers must match [`circulation_transmission`] to
/// [`TRANSMISSION_TOLERANCE`] relative. The first violation is returned as a
/// certification error naming the element.
pub fn null_certificate(net: &NetworkSpec, direction: Direction) -> Result<NullCertificate> {
    if net.cavities().len() != 3 || net.mechanicals().len() != 2 {
        return Err(Error::InvalidParameter(
            "a circulator network has three cavities and two mechanical modes".into(),
        ));
    }
    let c = matched_cooperativity(net)?;
    let s = scattering(&assemble(net), 0.0)?;
    // counter-clockwise circulation 1 -> 2 -> 3 -> 1 suppresses S12, S23, S31
    let (null_slots, pass_slots) = match direction {
        Direction::CounterClockwise => (
            [(0usize, 1usize), (1, 2), (2, 0)],
            [(1usize, 0usize), (2, 1), (0, 2)],
        ),
        Direction::Clockwise => ([(1, 0), (2, 1), (0, 2)], [(0, 1), (1, 2), (2, 0)]),
    };
    let name = |out: usize, input: usize| format!("S{}{}", out + 1, input + 1);

    let mut suppressed: Vec<(String, f64)> = Vec::with_capacity(3);
    let mut max_suppressed = 0.0f64;
    for &(out, input) in &null_slots {
        let mag = s.element(out, input).norm();
        max_suppressed = max_suppressed.max(mag);
        suppressed.push((name(out, input), mag));
    }
    let mut circulating: Vec<(String, f64, f64)> = Vec::with_capacity(3);
    let mut max_error = 0.0f64;
    for &(out, input) in &pass_slots {
        let eta_pair = net.cavities()[out].eta() * net.cavities()[input].eta();
        let predicted = circulation_transmission(c, eta_pair)?;
        let got = s.element(out, input).norm_sqr();
        if predicted > 0.0 {
            max_error = max_error.max((got - predicted).abs() / predicted);
        }
        circulating.push((name(out, input), got, predicted));
    }

    for (label, mag) in &suppressed {
        if *mag >= NULL_TOLERANCE {
            return Err(Error::Certification {
                element: label.clone(),
                magnitude: *mag,
            });
        }
    }
    for (label, got, want) in &circulating {
        let err = if *want > 0.0 {
            (got - want).abs() / want
        } else {
            *got
        };
        if err > TRANSMISSION_TOLERANCE {
            return Err(Error::Certification {
                element: format!("{label} transmission"),
                magnitude: err,
            });
        }
    }

    Ok(NullCertificate {
        direction,
        cooperativity: c,
        suppressed: suppressed.try_into().expect("three suppressed slots"),
        circulating: circulating.try_into().expect("three circulating slots"),
        max_suppressed,
        max_transmission_error: max_error,
    })
}

/// A circulating element paired with its reverse, both as (out, in) indices.
type HopPair = ((usize, usize), (usize, usize));

fn directed_isolation_db(dynamics: &DynamicsMatrices, hops: &[HopPair], omega: f64) -> Result<f64> {
    let s = scattering(dynamics, omega)?;
    let mut worst = f64::INFINITY;
    for &((fo, fi), (bo, bi)) in hops {
        let iso = ratio_db(
            s.element(fo, fi).norm_sqr(),
            s.element(bo, bi).norm_sqr(),
            DEFAULT_ISOLATION_CAP_DB,
        );
        worst = worst.min(iso);
    }
    Ok(worst)
}

/// Width of the contiguous frequency interval around omega = 0 over which
/// the network isolates by at least `threshold_db`.
///
/// For a two-cavity network the isolation is the single forward/backward
/// pair; for a three-cavity network it is the minimum over the three
/// circulating hops. The transmission sense is read off at omega = 0; the
/// band edges are located by marching outward in steps of kappa_min/50 and
/// bisecting the first crossing, capped at +/- 50 kappa_max. A threshold at
/// or below 0 dB returns the full capped window; a threshold never met
/// returns zero width.
pub fn isolation_bandwidth(net: &NetworkSpec, threshold_db: f64) -> Result<f64> {
    if !threshold_db.is_finite() {
        return Err(Error::InvalidParameter("threshold must be finite".into()));
    }
    let nc = net.cavities().len();
    if nc != 2 && nc != 3 {
        return Err(Error::InvalidParameter(
            "isolation bandwidth needs two or three external ports".into(),
        ));
    }
    let kappa_min = net
        .cavities()
        .iter()
        .map(|c| c.kappa())
        .fold(f64::INFINITY, f64::min);
    let kappa_max = net
        .cavities()
        .iter()
        .map(|c| c.kappa())
        .fold(0.0f64, f64::max);
    let window = 50.0 * kappa_max;
    if threshold_db <= 0.0 {
        return Ok(2.0 * window);
    }

    let dynamics = assemble(net);
    let s0 = scattering(&dynamics, 0.0)?;
    let forward_first = s0.element(1, 0).norm() >= s0.element(0, 1).norm();
    let hops: Vec<((usize, usize), (usize, usize))> = if nc == 2 {
        if forward_first {
            vec![((1, 0), (0, 1))]
        } else {
            vec![((0, 1), (1, 0))]
        }
    } else if forward_first {
        vec![((1, 0), (0, 1)), ((2, 1), (1, 2)), ((0, 2), (2, 0))]
    } else {
        vec![((0, 1), (1, 0)), ((1, 2), (2, 1)), ((2, 0), (0, 2))]
    };

    if directed_isolation_db(&dynamics, &hops, 0.0)? < threshold_db {
        return Ok(0.0);
    }

    let step = kappa_min / 50.0;
    let mut edges = [0.0f64; 2];
    for (side, sign) in [1.0f64, -1.0].iter().enumerate() {
        let mut lo = 0.0f64;
        let mut edge = window;
        let mut k = 1u64;
        loop {
            let w = (k as f64) * step;
            if w >= window {
                break;
            }
            if directed_isolation_db(&dynamics, &hops, sign * w)? < threshold_db {
                // bisect the first crossing in (lo, w]
                let mut hi = w;
                let mut iters = 0;
                while hi - lo > 1e-6 * hi.max(lo.abs()) && iters < 200 {
                    let mid = 0.5 * (lo + hi);
                    if directed_isolation_db(&dynamics, &hops, sign * mid)? < threshold_db {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                    iters += 1;
                }
                edge = 0.5 * (lo + hi);
                break;
            }
            lo = w;
            k += 1;
        }
        edges[side] = edge;
    }
    Ok(edges[0] + edges[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{coupling_for_cooperativity, CavityMode, Coupling, MechanicalMode};
    use approx::assert_relative_eq;

    const TAU: f64 = std::f64::consts::TAU;

    fn small_design(direction: Direction) -> (CirculatorDesign, NetworkSpec) {
        let beta = beta_for_cooperativity(2.0 / 3.0).unwrap();
        design(
            beta,
            [0.1, 0.2],
            [(2.0, 0.0), (2.5, 0.0), (3.0, 0.0)],
            direction,
        )
        .unwrap()
    }

    #[test]
    fn beta_inversion_round_trip() {
        let beta = beta_for_cooperativity(2.0 / 3.0).unwrap();
        assert_relative_eq!(beta, 3.0_f64.sqrt() / 2.0);
        let c = 2.0 * beta / 3.0_f64.sqrt() - 1.0 / 3.0;
        assert_relative_eq!(c, 2.0 / 3.0, max_relative = 1e-14);
        assert!(beta_for_cooperativity(0.0).is_err());
        assert!(beta_for_cooperativity(-1.0).is_err());
    }

    #[test]
    fn design_solves_the_standard_branch() {
        let (d, net) = small_design(Direction::CounterClockwise);
        assert_relative_eq!(d.alpha, -d.beta);
        assert_relative_eq!(d.cooperativity, 2.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(d.phases[0], TAU / 3.0);
        assert_relative_eq!(d.phases[1], -TAU / 3.0);
        assert_relative_eq!(d.phases[2], 0.0);
        assert_relative_eq!(d.detunings[0], -d.beta * 0.1);
        assert_relative_eq!(d.detunings[1], d.beta * 0.2);
        assert_eq!(net.cavities().len(), 3);
        assert_eq!(net.mechanicals().len(), 2);
        assert_relative_eq!(net.mechanical("b1").unwrap().detuning, -d.beta * 0.1);
        assert_relative_eq!(net.mechanical("b2").unwrap().detuning, d.beta * 0.2);
    }

    #[test]
    fn design_bounds_are_enforced() {
        // beta at the lower bound: C = 0
        assert!(matches!(
            design(
                CIRCULATOR_BETA_MIN,
                [0.1, 0.2],
                [(2.0, 0.0); 3],
                Direction::CounterClockwise
            ),
            Err(Error::DesignInfeasible(_))
        ));
        // closed-form validity bound C < min(kappa)/max(Gamma)
        let beta = beta_for_cooperativity(25.0).unwrap();
        assert!(matches!(
            design(
                beta,
                [0.1, 0.2],
                [(2.0, 0.0); 3],
                Direction::CounterClockwise
            ),
            Err(Error::DesignInfeasible(_))
        ));
        assert!(design(
            f64::NAN,
            [0.1, 0.2],
            [(2.0, 0.0); 3],
            Direction::CounterClockwise
        )
        .is_err());
    }

    #[test]
    fn transmission_and_noise_closed_forms() {
        assert_relative_eq!(circulation_transmission(1.0, 1.0).unwrap(), 9.0 / 16.0);
        assert_relative_eq!(
            circulation_transmission(1e9, 1.0).unwrap(),
            1.0,
            max_relative = 1e-8
        );
        assert_relative_eq!(
            circulation_transmission(2.0, 0.5).unwrap(),
            0.5 / (1.0 + 1.0 / 6.0_f64).powi(2)
        );
        assert!(circulation_transmission(0.0, 1.0).is_err());
        assert!(circulation_transmission(1.0, 1.5).is_err());

        assert_relative_eq!(circulator_noise(1.0, 800.0, 800.0).unwrap(), 300.5);
        assert_relative_eq!(circulator_noise(3.0, 0.0, 0.0).unwrap(), 0.5);
        assert_relative_eq!(
            circulator_noise(1e8, 800.0, 800.0).unwrap(),
            0.5,
            max_relative = 1e-4
        );
        assert!(matches!(
            circulator_noise(-1.0, 1.0, 1.0),
            Err(Error::DesignInfeasible(_))
        ));
        assert!(circulator_noise(1.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn certificate_passes_for_designed_networks() {
        for direction in [Direction::CounterClockwise, Direction::Clockwise] {
            let (d, net) = small_design(direction);
            let cert = null_certificate(&net, direction).unwrap();
            assert!(cert.max_suppressed < NULL_TOLERANCE);
            assert!(cert.max_transmission_error < TRANSMISSION_TOLERANCE);
            assert_relative_eq!(cert.cooperativity, d.cooperativity, max_relative = 1e-9);
            let text = cert.to_string();
            assert!(text.contains("suppressed"));
        }
    }

    #[test]
    fn certificate_passes_with_internal_loss() {
        let beta = beta_for_cooperativity(1.5).unwrap();
        let (_, net) = design(
            beta,
            [0.1, 0.2],
            [(1.6, 0.4), (2.0, 0.5), (2.2, 0.8)],
            Direction::CounterClockwise,
        )
        .unwrap();
        let cert = null_certificate(&net, Direction::CounterClockwise).unwrap();
        assert!(cert.max_suppressed < NULL_TOLERANCE);
        assert!(cert.max_transmission_error < TRANSMISSION_TOLERANCE);
        // lossy hops transmit less than the overcoupled prediction
        assert!(cert.circulating.iter().all(|(_, got, _)| *got < 0.9));
    }

    #[test]
    fn certificate_rejects_wrong_direction_and_broken_phase() {
        let (_, net) = small_design(Direction::CounterClockwise);
        let err = null_certificate(&net, Direction::Clockwise).unwrap_err();
        assert!(matches!(err, Error::Certification { .. }));

        // perturb the first pump phase
        let beta = beta_for_cooperativity(2.0 / 3.0).unwrap();
        let third = TAU / 3.0;
        let broken = circulator_preset(
            [(2.0, 0.0), (2.5, 0.0), (3.0, 0.0)],
            [0.1, 0.2],
            beta,
            [third + 0.1, -third, 0.0],
        )
        .unwrap();
        let err = null_certificate(&broken, Direction::CounterClockwise).unwrap_err();
        match err {
            Error::Certification { element, magnitude } => {
                assert!(element.starts_with('S'), "element = {element}");
                assert!(magnitude > NULL_TOLERANCE);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn main_text_detuning_sign_fails_certification() {
        // Flip the first frame detuning to +beta*Gamma_1: the printed
        // alternative convention does not produce the null pattern.
        let c = 2.0 / 3.0;
        let beta = beta_for_cooperativity(c).unwrap();
        let gammas = [0.1, 0.2];
        let kappas = [2.0, 2.5, 3.0];
        let third = TAU / 3.0;
        let phases = [third, -third, 0.0];
        let cavities: Vec<CavityMode> = kappas
            .iter()
            .enumerate()
            .map(|(i, &k)| CavityMode::new(format!("a{}", i + 1), k, 0.0))
            .collect();
        let mechanicals = vec![
            MechanicalMode::new("b1", gammas[0], beta * gammas[0]),
            MechanicalMode::new("b2", gammas[1], beta * gammas[1]),
        ];
        let mut couplings = Vec::new();
        for (i, &k) in kappas.iter().enumerate() {
            for (j, &g) in gammas.iter().enumerate() {
                couplings.push(Coupling::new(
                    format!("a{}", i + 1),
                    format!("b{}", j + 1),
                    coupling_for_cooperativity(c, k, g).unwrap(),
                    if j == 0 { phases[i] } else { 0.0 },
                ));
            }
        }
        let net = NetworkSpec::new(cavities, mechanicals, couplings).unwrap();
        assert!(null_certificate(&net, Direction::CounterClockwise).is_err());
        assert!(null_certificate(&net, Direction::Clockwise).is_err());
    }

    #[test]
    fn certificate_rejects_non_circulator_shapes() {
        let (_, net) = small_design(Direction::CounterClockwise);
        let two_port = crate::model::isolator_preset(
            [(1.0, 0.0), (1.0, 0.0)],
            [0.1, 0.1],
            [[0.1, 0.1], [0.1, 0.1]],
            0.5,
            0.2,
        )
        .unwrap();
        assert!(matches!(
            null_certificate(&two_port, Direction::CounterClockwise),
            Err(Error::InvalidParameter(_))
        ));
        drop(net);
    }

    #[test]
    fn bandwidth_behaviour() {
        let (_, net) = small_design(Direction::CounterClockwise);
        let bw = isolation_bandwidth(&net, 20.0).unwrap();
        assert!(bw > 0.0);
        let window = 2.0 * 50.0 * 3.0;
        assert!(bw < window);
        // trivial threshold: the full capped window
        assert_relative_eq!(isolation_bandwidth(&net, 0.0).unwrap(), window);
        // unreachable threshold (beyond the dB cap): zero width
        assert_eq!(isolation_bandwidth(&net, 500.0).unwrap(), 0.0);
        // reciprocal two-port network: no isolation band at all
        let reciprocal = crate::model::isolator_preset(
            [(1.0, 0.0), (1.0, 0.0)],
            [0.1, 0.1],
            [[0.2, 0.2], [0.2, 0.2]],
            0.5,
            0.0,
        )
        .unwrap();
        assert_eq!(isolation_bandwidth(&reciprocal, 20.0).unwrap(), 0.0);
        // single cavity is rejected
        let single =
            NetworkSpec::new(vec![CavityMode::new("a", 1.0, 0.0)], vec![], vec![]).unwrap();
        assert!(isolation_bandwidth(&single, 20.0).is_err());
    }

    #[test]
    fn clockwise_bandwidth_matches_counter_clockwise() {
        let (_, ccw) = small_design(Direction::CounterClockwise);
        let (_, cw) = small_design(Direction::Clockwise);
        let b1 = isolation_bandwidth(&ccw, 20.0).unwrap();
        let b2 = isolation_bandwidth(&cw, 20.0).unwrap();
        assert_relative_eq!(b1, b2, max_relative = 1e-6);
    }
}
