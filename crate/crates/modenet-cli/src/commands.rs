//! Subcommand implementations: CSV sweeps, noise spectra, design reports and
//! the invariant checker. All emitted numbers go through one significant-
//! digit formatter so repeat runs are byte-identical.

use num_complex::Complex64;

use modenet::circulator::{
    circulation_transmission, circulator_noise, design, null_certificate, Direction,
};
use modenet::dynamics::{
    assemble, frequency_sweep, oracle_step, scattering, time_domain_response, unitarity_defect,
};
use modenet::isolator::{isolation_phase, max_forward_transmission, optimal_cooperativity};
use modenet::model::NetworkSpec;
use modenet::noisespec::{forward_backward_noise, noise_spectrum, OccupationSet};

use crate::config::{parse_direction, ConfigDocument, TAU};
use crate::CliError;

const DB_CAP: f64 = 200.0;

/// One number, `digits` significant digits, scientific notation.
fn fmt_sig(x: f64, digits: usize) -> String {
    format!("{:.*e}", digits.saturating_sub(1), x)
}

fn mag2_db(z: Complex64) -> f64 {
    let p = z.norm_sqr();
    if p <= 0.0 {
        -DB_CAP
    } else {
        (10.0 * p.log10()).clamp(-DB_CAP, DB_CAP)
    }
}

fn occupations(config: &ConfigDocument) -> Result<OccupationSet, CliError> {
    let section = config
        .occupations
        .as_ref()
        .ok_or_else(|| CliError::Config("missing [occupations] section".into()))?;
    let mut occ = OccupationSet::new();
    for (label, n) in &section.mechanical {
        occ = occ.with_mechanical(label, *n);
    }
    for (label, n) in &section.cavity {
        occ = occ.with_cavity(label, *n);
    }
    Ok(occ)
}

/// Full scattering sweep over the external ports, one row per frequency.
pub fn cmd_sweep(config: &ConfigDocument) -> Result<String, CliError> {
    let net = config.network()?;
    let grid_hz = config.sweep_grid_hz()?;
    let digits = config.precision()?;
    let omegas: Vec<f64> = grid_hz.iter().map(|f| TAU * f).collect();
    let mats = frequency_sweep(&net, &omegas)?;

    let labels: Vec<&str> = net.cavities().iter().map(|c| c.label.as_str()).collect();
    let mut out = String::from("omega_hz");
    for out_label in &labels {
        for in_label in &labels {
            out.push_str(&format!(
                ",S_{out_label}_{in_label}_mag2_db,S_{out_label}_{in_label}_phase_rad"
            ));
        }
    }
    out.push('\n');
    for (f_hz, s) in grid_hz.iter().zip(&mats) {
        out.push_str(&fmt_sig(*f_hz, digits));
        for i in 0..labels.len() {
            for j in 0..labels.len() {
                let z = s.element(i, j);
                out.push(',');
                out.push_str(&fmt_sig(mag2_db(z), digits));
                out.push(',');
                out.push_str(&fmt_sig(z.arg(), digits));
            }
        }
        out.push('\n');
    }
    Ok(out)
}

/// Symmetrized output-noise spectra at every external port.
pub fn cmd_noise(config: &ConfigDocument) -> Result<String, CliError> {
    let net = config.network()?;
    let grid_hz = config.sweep_grid_hz()?;
    let digits = config.precision()?;
    let occ = occupations(config)?;
    let omegas: Vec<f64> = grid_hz.iter().map(|f| TAU * f).collect();

    let labels: Vec<String> = net.cavities().iter().map(|c| c.label.clone()).collect();
    let mut spectra = Vec::with_capacity(labels.len());
    for label in &labels {
        spectra.push(noise_spectrum(&net, &occ, label, &omegas)?);
    }

    let mut out = String::from("omega_hz");
    for label in &labels {
        out.push_str(&format!(",N_{label}_quanta"));
    }
    out.push('\n');
    for (row, f_hz) in grid_hz.iter().enumerate() {
        out.push_str(&fmt_sig(*f_hz, digits));
        for spectrum in &spectra {
            out.push(',');
            out.push_str(&fmt_sig(spectrum.quanta[row], digits));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Solve an operating point and report it, human-readable plus a flat
/// key=value machine section.
pub fn cmd_design(config: &ConfigDocument) -> Result<String, CliError> {
    let section = config
        .design
        .as_ref()
        .ok_or_else(|| CliError::Config("missing [design] section".into()))?;
    let digits = config.precision()?;
    let f = |x: f64| fmt_sig(x, digits);

    match (&section.isolator, &section.circulator) {
        (Some(p), None) => {
            let gamma = TAU * p.gamma_hz;
            let delta = TAU * p.delta_hz;
            let phi = isolation_phase(gamma, delta)?;
            let c = optimal_cooperativity(gamma, delta)?;
            let t_max = max_forward_transmission(p.eta[0], p.eta[1], c)?;
            let (n_fw, n_bw) = forward_backward_noise(p.occupation[0], p.occupation[1], c)?;
            let mut out = String::new();
            out.push_str("isolator design point\n");
            out.push_str(&format!("  mechanical linewidth : {} Hz\n", f(p.gamma_hz)));
            out.push_str(&format!("  frame detuning       : {} Hz\n", f(p.delta_hz)));
            out.push_str(&format!("  isolation phase      : {} rad\n", f(phi)));
            out.push_str(&format!("  cooperativity        : {}\n", f(c)));
            out.push_str(&format!("  forward |S21|^2      : {}\n", f(t_max)));
            out.push_str(&format!("  forward noise        : {} quanta\n", f(n_fw)));
            out.push_str(&format!("  backward noise       : {} quanta\n", f(n_bw)));
            out.push_str("\n[machine]\n");
            out.push_str("kind=isolator\n");
            out.push_str(&format!("gamma_hz={}\n", f(p.gamma_hz)));
            out.push_str(&format!("delta_hz={}\n", f(p.delta_hz)));
            out.push_str(&format!("phi_rad={}\n", f(phi)));
            out.push_str(&format!("cooperativity={}\n", f(c)));
            out.push_str(&format!("max_transmission={}\n", f(t_max)));
            out.push_str(&format!("noise_forward_quanta={}\n", f(n_fw)));
            out.push_str(&format!("noise_backward_quanta={}\n", f(n_bw)));
            Ok(out)
        }
        (None, Some(p)) => {
            let beta = match (p.beta, p.cooperativity) {
                (Some(b), None) => b,
                (None, Some(c)) => modenet::circulator::beta_for_cooperativity(c)?,
                _ => {
                    return Err(CliError::Config(
                        "circulator design needs exactly one of beta or cooperativity".into(),
                    ))
                }
            };
            let direction = parse_direction(&p.direction)?;
            let kappas = [
                (TAU * p.kappa_ext_hz[0], TAU * p.kappa_int_hz[0]),
                (TAU * p.kappa_ext_hz[1], TAU * p.kappa_int_hz[1]),
                (TAU * p.kappa_ext_hz[2], TAU * p.kappa_int_hz[2]),
            ];
            let gammas = [TAU * p.gamma_hz[0], TAU * p.gamma_hz[1]];
            let (solved, net) = design(beta, gammas, kappas, direction)?;
            let c = solved.cooperativity;
            let noise = circulator_noise(c, p.occupation[0], p.occupation[1])?;
            let etas: Vec<f64> = net.cavities().iter().map(|cav| cav.eta()).collect();
            // circulating hops in port order out <- in
            let hops: [(usize, usize); 3] = match direction {
                Direction::CounterClockwise => [(1, 0), (2, 1), (0, 2)],
                Direction::Clockwise => [(0, 1), (1, 2), (2, 0)],
            };
            let mut out = String::new();
            out.push_str("circulator design point\n");
            out.push_str(&format!(
                "  direction            : {}\n",
                match direction {
                    Direction::CounterClockwise => "counter-clockwise",
                    Direction::Clockwise => "clockwise",
                }
            ));
            out.push_str(&format!("  beta                 : {}\n", f(solved.beta)));
            out.push_str(&format!("  alpha                : {}\n", f(solved.alpha)));
            out.push_str(&format!("  cooperativity        : {}\n", f(c)));
            out.push_str(&format!(
                "  pump phases          : {}, {}, {} rad\n",
                f(solved.phases[0]),
                f(solved.phases[1]),
                f(solved.phases[2])
            ));
            out.push_str(&format!(
                "  frame detunings      : {}, {} Hz\n",
                f(solved.detunings[0] / TAU),
                f(solved.detunings[1] / TAU)
            ));
            for &(o, i) in &hops {
                let t = circulation_transmission(c, etas[o] * etas[i])?;
                out.push_str(&format!(
                    "  |S{}{}|^2             : {}\n",
                    o + 1,
                    i + 1,
                    f(t)
                ));
            }
            out.push_str(&format!("  port noise           : {} quanta\n", f(noise)));
            out.push_str("\n[machine]\n");
            out.push_str("kind=circulator\n");
            out.push_str(&format!("direction={}\n", p.direction));
            out.push_str(&format!("beta={}\n", f(solved.beta)));
            out.push_str(&format!("alpha={}\n", f(solved.alpha)));
            out.push_str(&format!("cooperativity={}\n", f(c)));
            for (k, phase) in solved.phases.iter().enumerate() {
                out.push_str(&format!("phase_{}_rad={}\n", k + 1, f(*phase)));
            }
            for (k, d) in solved.detunings.iter().enumerate() {
                out.push_str(&format!("detuning_{}_hz={}\n", k + 1, f(*d / TAU)));
            }
            for &(o, i) in &hops {
                let t = circulation_transmission(c, etas[o] * etas[i])?;
                out.push_str(&format!("transmission_s{}{}={}\n", o + 1, i + 1, f(t)));
            }
            out.push_str(&format!("noise_quanta={}\n", f(noise)));
            Ok(out)
        }
        _ => Err(CliError::Config(
            "[design] must contain exactly one of [design.isolator] or [design.circulator]".into(),
        )),
    }
}

/// Largest per-mode decay rate, used to scale the check frequencies.
fn rate_extrema(net: &NetworkSpec) -> (f64, f64) {
    let mut min_rate = f64::INFINITY;
    let mut max_rate = 0.0f64;
    for c in net.cavities() {
        min_rate = min_rate.min(c.kappa());
        max_rate = max_rate.max(c.kappa());
    }
    for m in net.mechanicals() {
        min_rate = min_rate.min(m.gamma);
        max_rate = max_rate.max(m.gamma);
    }
    (min_rate, max_rate)
}

/// Run the invariant suite on the configured network. Returns the report and
/// whether every non-skipped invariant passed.
pub fn cmd_check(config: &ConfigDocument) -> Result<(String, bool), CliError> {
    let net = config.network()?;
    let (min_rate, max_rate) = rate_extrema(&net);
    let mut report = String::new();
    let mut ok = true;

    // unitarity across a rate-scaled frequency spread
    let dynamics = assemble(&net);
    let mut worst = 0.0f64;
    for scale in [0.0, 0.25, -0.25, 1.0, -1.0, 4.0, -4.0] {
        let s = scattering(&dynamics, scale * max_rate)?;
        worst = worst.max(unitarity_defect(&s));
    }
    if worst < 1e-10 {
        report.push_str(&format!("PASS unitarity: max defect {worst:.3e}\n"));
    } else {
        report.push_str(&format!("FAIL unitarity: max defect {worst:.3e}\n"));
        ok = false;
    }

    // time-domain steady state against the frequency-domain solve; skipped
    // when the rate spread makes explicit integration impractical
    let horizon = 80.0 / (0.5 * min_rate);
    let step = oracle_step(&net, 0.0);
    let estimated_steps = horizon / step;
    if estimated_steps > 2e7 {
        report.push_str(&format!(
            "SKIP scattering_oracle (stiffness): ~{estimated_steps:.1e} integration steps needed\n"
        ));
    } else {
        let drive = net.cavities()[0].label.clone();
        let column = time_domain_response(&net, &drive, 0.0, horizon)?;
        let s = scattering(&dynamics, 0.0)?;
        let q = dynamics.port_index(&drive).expect("external port exists");
        let mut dev = 0.0f64;
        for (p, z) in column.iter().enumerate() {
            dev = dev.max((z - s.element(p, q)).norm());
        }
        if dev < 1e-4 {
            report.push_str(&format!(
                "PASS scattering_oracle: max deviation {dev:.3e}\n"
            ));
        } else {
            report.push_str(&format!(
                "FAIL scattering_oracle: max deviation {dev:.3e}\n"
            ));
            ok = false;
        }
    }

    // null certificate for circulator-shaped networks
    if net.cavities().len() == 3 && net.mechanicals().len() == 2 {
        let mut certified = None;
        let mut failure = None;
        for direction in [Direction::CounterClockwise, Direction::Clockwise] {
            match null_certificate(&net, direction) {
                Ok(cert) => {
                    certified = Some((direction, cert));
                    break;
                }
                Err(e) => failure = Some(e),
            }
        }
        match (certified, failure) {
            (Some((direction, cert)), _) => {
                report.push_str(&format!(
                    "PASS null_certificate ({}): worst null {:.3e}, worst transmission error {:.3e}\n",
                    match direction {
                        Direction::CounterClockwise => "ccw",
                        Direction::Clockwise => "cw",
                    },
                    cert.max_suppressed,
                    cert.max_transmission_error
                ));
            }
            (None, Some(modenet::Error::InvalidParameter(why))) => {
                report.push_str(&format!("SKIP null_certificate: {why}\n"));
            }
            (None, Some(e)) => {
                report.push_str(&format!("FAIL null_certificate: {e}\n"));
                ok = false;
            }
            (None, None) => unreachable!("certificate neither passed nor failed"),
        }
    } else {
        report.push_str("SKIP null_certificate: not a three-cavity circulator topology\n");
    }

    report.push_str(if ok { "CHECK PASS\n" } else { "CHECK FAIL\n" });
    Ok((report, ok))
}
