//! Closed-form analytics for the two-cavity, two-mechanical-mode isolator:
//! single-path conversion, the forward/backward transmission ratio, the
//! isolation phase and cooperativity conditions, unequal-linewidth operating
//! points, and a numeric isolation figure.
//!
//! Conventions follow the rest of the crate: the loop phase phi sits on the
//! second cavity / second mechanical coupling, mechanical frames are detuned
//! by +delta and -delta, and the backward element S12 (into the first
//! external port) is the one that nulls for positive phi.

use num_complex::Complex64;

use crate::dynamics::{assemble, scattering};
use crate::error::{Error, Result};
use crate::model::{
    cooperativity, coupling_for_cooperativity, isolator_preset, mechanical_susceptibility,
    MechanicalMode, NetworkSpec,
};

/// Ceiling applied to isolation figures so perfect nulls stay finite.
pub const DEFAULT_ISOLATION_CAP_DB: f64 = 200.0;

/// Analytic parameter set of the isolator: four coupling magnitudes g_ij
/// (cavity i, mechanical j), loop phase, frame detuning, mechanical
/// linewidths, total cavity linewidths and external coupling fractions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsolatorParams {
    pub g11: f64,
    pub g12: f64,
    pub g21: f64,
    pub g22: f64,
    pub phi: f64,
    pub delta: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub eta1: f64,
    pub eta2: f64,
}

impl IsolatorParams {
    /// Check ranges: magnitudes >= 0, linewidths > 0, fractions in [0, 1],
    /// everything finite.
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.g11,
            self.g12,
            self.g21,
            self.g22,
            self.phi,
            self.delta,
            self.gamma1,
            self.gamma2,
            self.kappa1,
            self.kappa2,
            self.eta1,
            self.eta2,
        ];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(
                "isolator parameters must be finite".into(),
            ));
        }
        if [self.g11, self.g12, self.g21, self.g22]
            .iter()
            .any(|&g| g < 0.0)
        {
            return Err(Error::InvalidParameter(
                "coupling magnitudes must be >= 0".into(),
            ));
        }
        if self.gamma1 <= 0.0 || self.gamma2 <= 0.0 || self.kappa1 <= 0.0 || self.kappa2 <= 0.0 {
            return Err(Error::InvalidParameter(
                "linewidths must be positive".into(),
            ));
        }
        if ![self.eta1, self.eta2]
            .iter()
            .all(|&e| (0.0..=1.0).contains(&e))
        {
            return Err(Error::InvalidParameter(
                "external coupling fractions must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }

    /// Matched-cooperativity parameter set: every pair shares cooperativity
    /// `c`, both mechanical modes share `gamma_m`.
    pub fn symmetric(
        c: f64,
        gamma_m: f64,
        delta: f64,
        phi: f64,
        kappa: [f64; 2],
        eta: [f64; 2],
    ) -> Result<Self> {
        let g1 = coupling_for_cooperativity(c, kappa[0], gamma_m)?;
        let g2 = coupling_for_cooperativity(c, kappa[1], gamma_m)?;
        let params = Self {
            g11: g1,
            g12: g1,
            g21: g2,
            g22: g2,
            phi,
            delta,
            gamma1: gamma_m,
            gamma2: gamma_m,
            kappa1: kappa[0],
            kappa2: kappa[1],
            eta1: eta[0],
            eta2: eta[1],
        };
        params.validate()?;
        Ok(params)
    }

    /// The corresponding simulation network.
    pub fn network(&self) -> Result<NetworkSpec> {
        self.validate()?;
        isolator_preset(
            [
                (self.eta1 * self.kappa1, (1.0 - self.eta1) * self.kappa1),
                (self.eta2 * self.kappa2, (1.0 - self.eta2) * self.kappa2),
            ],
            [self.gamma1, self.gamma2],
            [[self.g11, self.g12], [self.g21, self.g22]],
            self.delta,
            self.phi,
        )
    }

    /// Cooperativities C_ij = 4 g_ij^2 / (kappa_i Gamma_j).
    pub fn cooperativities(&self) -> Result<[[f64; 2]; 2]> {
        self.validate()?;
        Ok([
            [
                cooperativity(self.g11, self.kappa1, self.gamma1)?,
                cooperativity(self.g12, self.kappa1, self.gamma2)?,
            ],
            [
                cooperativity(self.g21, self.kappa2, self.gamma1)?,
                cooperativity(self.g22, self.kappa2, self.gamma2)?,
            ],
        ])
    }
}

/// Single-path conversion amplitude through one shared mechanical mode:
/// sqrt(eta1*eta2) * sqrt(C11*C21) * Gamma_m / (Gamma_eff/2 - i*omega) with
/// Gamma_eff = Gamma_m (1 + C11 + C21).
pub fn single_path_s21(
    c11: f64,
    c21: f64,
    gamma_m: f64,
    kappa_fracs: (f64, f64),
    omega: f64,
) -> Result<Complex64> {
    if !(c11.is_finite() && c21.is_finite() && gamma_m.is_finite() && omega.is_finite()) {
        return Err(Error::InvalidParameter("non-finite input".into()));
    }
    if c11 < 0.0 || c21 < 0.0 {
        return Err(Error::InvalidParameter(
            "cooperativities must be >= 0".into(),
        ));
    }
    if gamma_m <= 0.0 {
        return Err(Error::InvalidParameter("Gamma_m must be positive".into()));
    }
    let (eta1, eta2) = kappa_fracs;
    if ![eta1, eta2].iter().all(|&e| (0.0..=1.0).contains(&e)) {
        return Err(Error::InvalidParameter(
            "external coupling fractions must lie in [0, 1]".into(),
        ));
    }
    let gamma_eff = gamma_m * (1.0 + c11 + c21);
    let den = Complex64::new(gamma_eff / 2.0, -omega);
    Ok((eta1 * eta2).sqrt() * (c11 * c21).sqrt() * gamma_m * den.inv())
}

/// Backward/forward transmission ratio S12(omega)/S21(omega):
///
/// (g11 chi1 g21 + g12 chi2 g22 e^{-i phi}) /
/// (g11 chi1 g21 + g12 chi2 g22 e^{+i phi})
///
/// with chi1 evaluated in the +delta frame and chi2 in the -delta frame.
/// A vanishing denominator (perfect forward null) is reported as a
/// degenerate-denominator error rather than dividing through.
pub fn transmission_ratio(p: &IsolatorParams, omega: f64) -> Result<Complex64> {
    p.validate()?;
    if !omega.is_finite() {
        return Err(Error::InvalidParameter("omega must be finite".into()));
    }
    let chi1 = mechanical_susceptibility(&MechanicalMode::new("b1", p.gamma1, p.delta), omega);
    let chi2 = mechanical_susceptibility(&MechanicalMode::new("b2", p.gamma2, -p.delta), omega);
    let p1 = p.g11 * p.g21;
    let p2 = p.g12 * p.g22;
    let t1 = chi1 * p1;
    let t2 = chi2 * p2;
    let num = t1 + t2 * Complex64::from_polar(1.0, -p.phi);
    let den = t1 + t2 * Complex64::from_polar(1.0, p.phi);
    let scale = t1.norm() + t2.norm();
    if den.norm() <= 1e-14 * scale || den.norm() == 0.0 {
        return Err(Error::DegenerateDenominator {
            omega,
            magnitude: den.norm(),
        });
    }
    Ok(num / den)
}

/// Loop phase that nulls the backward element on resonance:
/// phi = 2 atan(Gamma_m / (2 delta)).
pub fn isolation_phase(gamma_m: f64, delta: f64) -> Result<f64> {
    if !(gamma_m.is_finite() && delta.is_finite()) || gamma_m <= 0.0 {
        return Err(Error::InvalidParameter("Gamma_m must be positive".into()));
    }
    if delta == 0.0 {
        return Err(Error::NoFiniteSolution(
            "delta = 0 pushes the isolation phase to its pi limit".into(),
        ));
    }
    Ok(2.0 * (gamma_m / (2.0 * delta)).atan())
}

/// Cooperativity that maximizes on-resonance forward transmission at the
/// isolation phase: C = 1/2 + 2 delta^2 / Gamma_m^2.
pub fn optimal_cooperativity(gamma_m: f64, delta: f64) -> Result<f64> {
    if !(gamma_m.is_finite() && delta.is_finite()) || gamma_m <= 0.0 {
        return Err(Error::InvalidParameter("Gamma_m must be positive".into()));
    }
    Ok(0.5 + 2.0 * delta * delta / (gamma_m * gamma_m))
}

/// Peak forward power transmission at the matched design point:
/// eta1 * eta2 * (1 - 1/(2C)).
pub fn max_forward_transmission(eta1: f64, eta2: f64, c: f64) -> Result<f64> {
    if !(eta1.is_finite() && eta2.is_finite() && c.is_finite()) {
        return Err(Error::InvalidParameter("non-finite input".into()));
    }
    if ![eta1, eta2].iter().all(|&e| (0.0..=1.0).contains(&e)) {
        return Err(Error::InvalidParameter(
            "external coupling fractions must lie in [0, 1]".into(),
        ));
    }
    if c < 0.5 {
        return Err(Error::DesignInfeasible(format!(
            "cooperativity {c} < 1/2 cannot reach the isolation condition"
        )));
    }
    Ok(eta1 * eta2 * (1.0 - 1.0 / (2.0 * c)))
}

/// How the four couplings are balanced when the two mechanical linewidths
/// differ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchingVariant {
    /// Equal coupling products g11*g21 = g12*g22 (both interference paths
    /// carry equal effective rates).
    EqualEffectiveRates,
    /// Cooperativities matched pairwise, C_i1 = C_i2, so the coupling
    /// products scale as Gamma_1/Gamma_2.
    MatchedCooperativities,
}

/// An operating point at which one external port is fully isolated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsolationPoint {
    /// Loop phase of the null.
    pub phi: f64,
    /// Signal frequency of the null (0 only when the linewidths are equal).
    pub omega: f64,
    /// External port index (0-based) that no signal reaches: the backward
    /// element S[isolated_port, other] vanishes.
    pub isolated_port: usize,
}

/// Exact isolation point for unequal mechanical linewidths. With
/// Gamma_pm = (Gamma_1 +/- Gamma_2)/2 both balancing variants share
/// phi = 2 atan(Gamma_+ / (2 delta)); the null frequency moves to
/// -Gamma_+ Gamma_- / (4 delta) for equal effective rates and to
/// +Gamma_- delta / Gamma_+ for matched cooperativities.
pub fn asymmetric_isolation_point(
    gamma1: f64,
    gamma2: f64,
    delta: f64,
    matching: MatchingVariant,
) -> Result<IsolationPoint> {
    if !(gamma1.is_finite() && gamma2.is_finite() && delta.is_finite())
        || gamma1 <= 0.0
        || gamma2 <= 0.0
    {
        return Err(Error::InvalidParameter(
            "mechanical linewidths must be positive".into(),
        ));
    }
    if delta == 0.0 {
        return Err(Error::NoFiniteSolution(
            "delta = 0 admits no isolation point".into(),
        ));
    }
    let gp = (gamma1 + gamma2) / 2.0;
    let gm = (gamma1 - gamma2) / 2.0;
    let phi = 2.0 * (gp / (2.0 * delta)).atan();
    let omega = match matching {
        MatchingVariant::EqualEffectiveRates => -gp * gm / (4.0 * delta),
        MatchingVariant::MatchedCooperativities => gm * delta / gp,
    };
    Ok(IsolationPoint {
        phi,
        omega,
        isolated_port: 0,
    })
}

/// Numeric isolation in dB, 10 log10(|S21|^2 / |S12|^2) between the first
/// two external ports, clamped to +/- `cap_db`. A perfect backward null
/// reports +cap, a perfect forward null -cap, and a doubly dark pair 0.
pub fn isolation_db_with_cap(net: &NetworkSpec, omega: f64, cap_db: f64) -> Result<f64> {
    if net.cavities().len() < 2 {
        return Err(Error::InvalidParameter(
            "isolation needs at least two external ports".into(),
        ));
    }
    if !(cap_db.is_finite() && cap_db > 0.0) {
        return Err(Error::InvalidParameter("cap must be positive".into()));
    }
    let s = scattering(&assemble(net), omega)?;
    let fwd = s.element(1, 0).norm_sqr();
    let bwd = s.element(0, 1).norm_sqr();
    Ok(ratio_db(fwd, bwd, cap_db))
}

/// [`isolation_db_with_cap`] at the default 200 dB ceiling.
pub fn isolation_db(net: &NetworkSpec, omega: f64) -> Result<f64> {
    isolation_db_with_cap(net, omega, DEFAULT_ISOLATION_CAP_DB)
}

pub(crate) fn ratio_db(fwd_power: f64, bwd_power: f64, cap_db: f64) -> f64 {
    match (fwd_power > 0.0, bwd_power > 0.0) {
        (false, false) => 0.0,
        (true, false) => cap_db,
        (false, true) => -cap_db,
        (true, true) => (10.0 * (fwd_power / bwd_power).log10()).clamp(-cap_db, cap_db),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{assemble, scattering};
    use approx::assert_relative_eq;

    const TAU: f64 = std::f64::consts::TAU;

    fn device_params(c: f64, phi: f64, delta: f64) -> IsolatorParams {
        IsolatorParams::symmetric(
            c,
            TAU * 20.0,
            delta,
            phi,
            [TAU * 0.2e6, TAU * 3.4e6],
            [1.0, 1.0],
        )
        .unwrap()
    }

    #[test]
    fn single_path_known_values() {
        // matched unit cooperativities on resonance: 2/3
        let s = single_path_s21(1.0, 1.0, 2.0, (1.0, 1.0), 0.0).unwrap();
        assert_relative_eq!(s.re, 2.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(s.im, 0.0);
        // broken path
        assert_eq!(
            single_path_s21(0.0, 1.0, 2.0, (1.0, 1.0), 0.0)
                .unwrap()
                .norm(),
            0.0
        );
        // large cooperativity limit
        let s = single_path_s21(1e8, 1e8, 2.0, (1.0, 1.0), 0.0).unwrap();
        assert_relative_eq!(s.norm_sqr(), 1.0, max_relative = 1e-7);
        // eta scaling
        let s = single_path_s21(1.0, 1.0, 2.0, (0.5, 0.5), 0.0).unwrap();
        assert_relative_eq!(s.re, 0.5 * 2.0 / 3.0, epsilon = 1e-15);
        assert!(single_path_s21(1.0, 1.0, 0.0, (1.0, 1.0), 0.0).is_err());
    }

    #[test]
    fn ratio_is_one_without_phase() {
        let mut p = device_params(3.0, 0.0, TAU * 100.0);
        p.phi = 0.0;
        for &w in &[-500.0 * TAU, 0.0, 123.0 * TAU] {
            let r = transmission_ratio(&p, w).unwrap();
            assert_relative_eq!(r.re, 1.0, epsilon = 1e-12);
            assert_relative_eq!(r.im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn ratio_unimodular_at_zero_detuning_resonance() {
        for phi in [0.3, 1.2, -2.0] {
            let mut p = device_params(3.0, phi, TAU * 100.0);
            p.delta = 0.0;
            let r = transmission_ratio(&p, 0.0).unwrap();
            assert_relative_eq!(r.norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn ratio_nulls_at_isolation_phase() {
        let gm = TAU * 20.0;
        let delta = TAU * 50.0;
        let phi = isolation_phase(gm, delta).unwrap();
        let c = optimal_cooperativity(gm, delta).unwrap();
        let p = device_params(c, phi, delta);
        let r = transmission_ratio(&p, 0.0).unwrap();
        assert!(r.norm() < 1e-12, "|ratio| = {}", r.norm());
        // the opposite phase nulls the denominator instead
        let mut flipped = p;
        flipped.phi = -phi;
        assert!(matches!(
            transmission_ratio(&flipped, 0.0),
            Err(Error::DegenerateDenominator { .. })
        ));
    }

    #[test]
    fn ratio_matches_numeric_scattering() {
        let p = device_params(7.0, 0.8, TAU * 300.0);
        let dynamics = assemble(&p.network().unwrap());
        for &w in &[-TAU * 4e3, -TAU * 35.0, TAU * 12.0, TAU * 900.0] {
            let s = scattering(&dynamics, w).unwrap();
            let numeric = s.element(0, 1) / s.element(1, 0);
            let analytic = transmission_ratio(&p, w).unwrap();
            assert!(
                (numeric - analytic).norm() <= 1e-9 * analytic.norm().max(1.0),
                "omega = {w}"
            );
        }
    }

    #[test]
    fn isolation_phase_values() {
        // Gamma = 2 delta makes tan(phi/2) = 1
        assert_relative_eq!(
            isolation_phase(2.0, 1.0).unwrap(),
            std::f64::consts::FRAC_PI_2
        );
        // device-scale smallness
        let phi = isolation_phase(TAU * 20.0, TAU * 18e3).unwrap();
        assert_relative_eq!(phi, 1.111e-3, max_relative = 1e-3);
        assert!(matches!(
            isolation_phase(2.0, 0.0),
            Err(Error::NoFiniteSolution(_))
        ));
        assert!(isolation_phase(-1.0, 1.0).is_err());
    }

    #[test]
    fn optimal_cooperativity_values() {
        assert_relative_eq!(optimal_cooperativity(2.0, 0.0).unwrap(), 0.5);
        assert_relative_eq!(optimal_cooperativity(2.0, 1.0).unwrap(), 1.0);
        assert_relative_eq!(optimal_cooperativity(1.0, 1.0).unwrap(), 2.5);
    }

    #[test]
    fn max_forward_transmission_values() {
        assert_relative_eq!(max_forward_transmission(1.0, 1.0, 0.5).unwrap(), 0.0);
        assert_relative_eq!(max_forward_transmission(1.0, 1.0, 1.0).unwrap(), 0.5);
        assert_relative_eq!(
            max_forward_transmission(0.8, 0.6, 1e12).unwrap(),
            0.48,
            max_relative = 1e-9
        );
        assert!(matches!(
            max_forward_transmission(1.0, 1.0, 0.49),
            Err(Error::DesignInfeasible(_))
        ));
    }

    #[test]
    fn asymmetric_point_reduces_to_symmetric() {
        for variant in [
            MatchingVariant::EqualEffectiveRates,
            MatchingVariant::MatchedCooperativities,
        ] {
            let pt = asymmetric_isolation_point(2.0, 2.0, 5.0, variant).unwrap();
            assert_relative_eq!(pt.omega, 0.0);
            assert_relative_eq!(pt.phi, isolation_phase(2.0, 5.0).unwrap());
            assert_eq!(pt.isolated_port, 0);
        }
        assert!(
            asymmetric_isolation_point(2.0, 1.0, 0.0, MatchingVariant::EqualEffectiveRates)
                .is_err()
        );
    }

    #[test]
    fn asymmetric_points_null_the_backward_element() {
        let (gamma1, gamma2, delta) = (0.3, 0.1, 1.3);
        let kappa = [2.0, 3.0];

        // equal products: g11 g21 = g12 g22
        let pt =
            asymmetric_isolation_point(gamma1, gamma2, delta, MatchingVariant::EqualEffectiveRates)
                .unwrap();
        let p = IsolatorParams {
            g11: 0.37,
            g12: 0.29,
            g21: 0.23,
            g22: 0.37 * 0.23 / 0.29,
            phi: pt.phi,
            delta,
            gamma1,
            gamma2,
            kappa1: kappa[0],
            kappa2: kappa[1],
            eta1: 1.0,
            eta2: 1.0,
        };
        let s = scattering(&assemble(&p.network().unwrap()), pt.omega).unwrap();
        assert!(
            s.element(0, 1).norm() < 1e-12,
            "|S12| = {}",
            s.element(0, 1).norm()
        );
        assert!(s.element(1, 0).norm() > 1e-2);
        assert!(s.element(1, 0).norm() > 1e9 * s.element(0, 1).norm());

        // matched cooperativities: C_ij all equal
        let pt = asymmetric_isolation_point(
            gamma1,
            gamma2,
            delta,
            MatchingVariant::MatchedCooperativities,
        )
        .unwrap();
        let c = 0.9;
        let p = IsolatorParams {
            g11: coupling_for_cooperativity(c, kappa[0], gamma1).unwrap(),
            g12: coupling_for_cooperativity(c, kappa[0], gamma2).unwrap(),
            g21: coupling_for_cooperativity(c, kappa[1], gamma1).unwrap(),
            g22: coupling_for_cooperativity(c, kappa[1], gamma2).unwrap(),
            phi: pt.phi,
            delta,
            gamma1,
            gamma2,
            kappa1: kappa[0],
            kappa2: kappa[1],
            eta1: 1.0,
            eta2: 1.0,
        };
        let s = scattering(&assemble(&p.network().unwrap()), pt.omega).unwrap();
        assert!(
            s.element(0, 1).norm() < 1e-12,
            "|S12| = {}",
            s.element(0, 1).norm()
        );
        assert!(s.element(1, 0).norm() > 1e-2);
        assert!(s.element(1, 0).norm() > 1e9 * s.element(0, 1).norm());
    }

    #[test]
    fn isolation_db_reports_direction_and_caps() {
        let gm = TAU * 20.0;
        let delta = TAU * 50.0;
        let phi = isolation_phase(gm, delta).unwrap();
        let c = optimal_cooperativity(gm, delta).unwrap();
        let net = device_params(c, phi, delta).network().unwrap();
        let iso = isolation_db(&net, 0.0).unwrap();
        assert!(iso > 100.0, "iso = {iso}");
        let net_flipped = device_params(c, -phi, delta).network().unwrap();
        let iso_flipped = isolation_db(&net_flipped, 0.0).unwrap();
        assert!(iso_flipped < -100.0, "iso = {iso_flipped}");
        // reciprocal case
        let net_rec = device_params(c, 0.0, delta).network().unwrap();
        assert_relative_eq!(isolation_db(&net_rec, 0.0).unwrap(), 0.0, epsilon = 1e-9);
        // cap plumbing
        assert_eq!(ratio_db(1.0, 0.0, 200.0), 200.0);
        assert_eq!(ratio_db(0.0, 1.0, 200.0), -200.0);
        assert_eq!(ratio_db(0.0, 0.0, 200.0), 0.0);
        assert_eq!(ratio_db(1.0, 1e-30, 150.0), 150.0);
    }

    #[test]
    fn forward_transmission_exact_with_internal_loss() {
        let gm = TAU * 20.0;
        let delta = TAU * 18e3;
        let phi = isolation_phase(gm, delta).unwrap();
        let c = optimal_cooperativity(gm, delta).unwrap();
        let p =
            IsolatorParams::symmetric(c, gm, delta, phi, [TAU * 0.2e6, TAU * 3.4e6], [0.8, 0.6])
                .unwrap();
        let s = scattering(&assemble(&p.network().unwrap()), 0.0).unwrap();
        assert!(s.element(0, 1).norm() < 1e-10);
        let predicted = max_forward_transmission(0.8, 0.6, c).unwrap();
        assert_relative_eq!(s.element(1, 0).norm_sqr(), predicted, max_relative = 1e-9);
    }
}
