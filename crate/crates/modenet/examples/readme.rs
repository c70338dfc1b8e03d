// The quick-start example from the README: a symmetric isolator tuned for a
// reverse-transmission null at the carrier.

use modenet::dynamics::{assemble, scattering};
use modenet::isolator::{isolation_phase, optimal_cooperativity, IsolatorParams};

fn main() -> modenet::Result<()> {
    let tau = std::f64::consts::TAU;
    let (gamma, delta) = (tau * 100.0, tau * 250.0);

    // phase and cooperativity that null the reverse path at the carrier
    let phi = isolation_phase(gamma, delta)?;
    let c = optimal_cooperativity(gamma, delta)?;
    let params = IsolatorParams::symmetric(
        c,
        gamma,
        delta,
        phi,
        [tau * 200e3, tau * 3.4e6], // cavity linewidths
        [1.0, 1.0],                 // external coupling fractions
    )?;

    let dynamics = assemble(&params.network()?);
    let s = scattering(&dynamics, 0.0)?;
    println!("|S21|^2 = {:.6}", s.element(1, 0).norm_sqr());
    println!("|S12|^2 = {:.3e}", s.element(0, 1).norm_sqr());
    Ok(())
}
