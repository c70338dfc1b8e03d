//! Dynamics-matrix assembly, frequency-domain scattering, parallel sweeps,
//! and an independent time-domain steady-state oracle.
//!
//! Conventions, fixed here and used everywhere else:
//! * signals rotate as e^{-i*omega*t}, so the frequency-domain solution is
//!   S(omega) = 1 + L^T (i*omega*1 + M)^{-1} L;
//! * mode order: cavities (declaration order), then mechanicals;
//! * port order: external channels (cavity order), then internal-loss
//!   channels (cavity order), then mechanical baths (declaration order).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::NetworkSpec;

/// Which physical bath a scattering channel belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PortKind {
    /// Measured input/output line of a cavity.
    External,
    /// Internal-loss channel of a cavity.
    InternalLoss,
    /// Thermal bath of a mechanical mode.
    MechanicalBath,
}

/// One input/output channel: the bath kind plus the label of the mode it
/// attaches to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Port {
    pub kind: PortKind,
    pub mode: String,
}

impl Port {
    /// Channel name: external ports carry the bare cavity label, internal
    /// losses append `_0`, mechanical baths carry the mechanical label.
    pub fn name(&self) -> String {
        match self.kind {
            PortKind::External | PortKind::MechanicalBath => self.mode.clone(),
            PortKind::InternalLoss => format!("{}_0", self.mode),
        }
    }
}

/// The linear Langevin system: complex dynamics matrix `m` (n x n), real
/// input matrix `l` (n x p) and the port bookkeeping for the p channels.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsMatrices {
    pub m: DMatrix<Complex64>,
    pub l: DMatrix<f64>,
    pub ports: Vec<Port>,
}

impl DynamicsMatrices {
    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn n_ports(&self) -> usize {
        self.ports.len()
    }

    pub fn port_labels(&self) -> Vec<String> {
        self.ports.iter().map(Port::name).collect()
    }

    /// Index of the first port whose name matches.
    pub fn port_index(&self, name: &str) -> Option<usize> {
        self.ports.iter().position(|p| p.name() == name)
    }
}

/// Full scattering matrix at one frequency, port-ordered as in
/// [`DynamicsMatrices`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringMatrix {
    pub omega: f64,
    pub s: DMatrix<Complex64>,
    pub ports: Vec<Port>,
}

impl ScatteringMatrix {
    /// Number of external (measured) ports.
    pub fn n_external(&self) -> usize {
        self.ports
            .iter()
            .filter(|p| p.kind == PortKind::External)
            .count()
    }

    /// S[out, in] over every channel.
    pub fn element(&self, out: usize, input: usize) -> Complex64 {
        self.s[(out, input)]
    }
}

/// Sub-matrix of S restricted to the external cavity ports (the
/// experimentally measured block). External ports come first, so this is the
/// leading principal block.
pub fn external_block(s: &ScatteringMatrix) -> DMatrix<Complex64> {
    let n = s.n_external();
    s.s.view((0, 0), (n, n)).into_owned()
}

/// Build M and L from a validated network.
///
/// Cavity diagonal -kappa_i/2; mechanical diagonal -Gamma_j/2 + i*d_j;
/// coupling entries -i*g*e^{+i*theta} in the (cavity, mechanical) slot and
/// -i*g*e^{-i*theta} in the transpose slot; L carries sqrt(kappa_ext),
/// sqrt(kappa_int), sqrt(Gamma_m) in the port order documented above.
pub fn assemble(net: &NetworkSpec) -> DynamicsMatrices {
    let nc = net.cavities().len();
    let nm = net.mechanicals().len();
    let n = nc + nm;
    let p = 2 * nc + nm;

    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for (i, cav) in net.cavities().iter().enumerate() {
        m[(i, i)] = Complex64::new(-cav.kappa() / 2.0, 0.0);
    }
    for (j, mech) in net.mechanicals().iter().enumerate() {
        m[(nc + j, nc + j)] = Complex64::new(-mech.gamma / 2.0, mech.detuning);
    }
    let cavity_pos = |label: &str| {
        net.cavities()
            .iter()
            .position(|c| c.label == label)
            .expect("validated endpoint")
    };
    let mech_pos = |label: &str| {
        net.mechanicals()
            .iter()
            .position(|m| m.label == label)
            .expect("validated endpoint")
    };
    for cpl in net.couplings() {
        let i = cavity_pos(&cpl.cavity);
        let j = nc + mech_pos(&cpl.mechanical);
        let amp = cpl.amplitude();
        m[(i, j)] = -Complex64::i() * amp;
        m[(j, i)] = -Complex64::i() * amp.conj();
    }

    let mut l = DMatrix::<f64>::zeros(n, p);
    let mut ports = Vec::with_capacity(p);
    for (i, cav) in net.cavities().iter().enumerate() {
        l[(i, i)] = cav.kappa_ext.sqrt();
        ports.push(Port {
            kind: PortKind::External,
            mode: cav.label.clone(),
        });
    }
    for (i, cav) in net.cavities().iter().enumerate() {
        l[(i, nc + i)] = cav.kappa_int.sqrt();
        ports.push(Port {
            kind: PortKind::InternalLoss,
            mode: cav.label.clone(),
        });
    }
    for (j, mech) in net.mechanicals().iter().enumerate() {
        l[(nc + j, 2 * nc + j)] = mech.gamma.sqrt();
        ports.push(Port {
            kind: PortKind::MechanicalBath,
            mode: mech.label.clone(),
        });
    }

    DynamicsMatrices { m, l, ports }
}

fn complex_l(l: &DMatrix<f64>) -> DMatrix<Complex64> {
    l.map(|x| Complex64::new(x, 0.0))
}

/// Solve the input-output problem at one frequency:
/// S(omega) = 1 + L^T (i*omega*1 + M)^{-1} L.
pub fn scattering(dynamics: &DynamicsMatrices, omega: f64) -> Result<ScatteringMatrix> {
    let n = dynamics.dim();
    let p = dynamics.n_ports();
    let mut a = dynamics.m.clone();
    for i in 0..n {
        a[(i, i)] += Complex64::new(0.0, omega);
    }
    let lc = complex_l(&dynamics.l);
    let x = a.lu().solve(&lc).ok_or(Error::SingularMatrix { omega })?;
    let s = DMatrix::<Complex64>::identity(p, p) + lc.transpose() * x;
    if s.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::SingularMatrix { omega });
    }
    Ok(ScatteringMatrix {
        omega,
        s,
        ports: dynamics.ports.clone(),
    })
}

/// Scattering matrices at many frequencies, computed in parallel; output
/// order matches the input order.
pub fn frequency_sweep(net: &NetworkSpec, omegas: &[f64]) -> Result<Vec<ScatteringMatrix>> {
    let dynamics = assemble(net);
    omegas
        .par_iter()
        .map(|&w| scattering(&dynamics, w))
        .collect()
}

/// Worst-case deviation of S from unitarity: max |(S^dag S - 1)_ij|.
pub fn unitarity_defect(s: &ScatteringMatrix) -> f64 {
    let p = s.s.nrows();
    let product = s.s.adjoint() * &s.s;
    let mut worst = 0.0f64;
    for i in 0..p {
        for j in 0..p {
            let target = if i == j {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
            worst = worst.max((product[(i, j)] - target).norm());
        }
    }
    worst
}

/// Fixed integration step used by the time-domain oracle: 1/50 of the
/// fastest configured timescale (drive frequency, cavity linewidths,
/// damped mechanical linewidths, frame detunings, coupling rates).
pub fn oracle_step(net: &NetworkSpec, omega: f64) -> f64 {
    let mut scale = omega.abs();
    for c in net.cavities() {
        scale = scale.max(c.kappa());
    }
    for m in net.mechanicals() {
        let geff = net
            .effective_mechanical_linewidth(&m.label)
            .unwrap_or(m.gamma);
        scale = scale.max(geff).max(m.detuning.abs());
    }
    for cpl in net.couplings() {
        scale = scale.max(cpl.g);
    }
    1.0 / (50.0 * scale.max(f64::MIN_POSITIVE))
}

/// Independent cross-check of [`scattering`]: drive one channel with a unit
/// coherent tone e^{-i*omega*t}, integrate du/dt = M u + L u_in with
/// fixed-step fourth-order Runge-Kutta until the rotating-frame envelope
/// stops changing, then read the outputs through u_out = u_in - L^T u.
///
/// Returns one complex amplitude per port; the result equals the
/// `drive_port` column of S(omega). `horizon` caps the integrated time and
/// must comfortably exceed the slowest decay time of the network.
pub fn time_domain_response(
    net: &NetworkSpec,
    drive_port: &str,
    omega: f64,
    horizon: f64,
) -> Result<Vec<Complex64>> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidParameter("horizon must be positive".into()));
    }
    let dynamics = assemble(net);
    let q = dynamics
        .port_index(drive_port)
        .ok_or_else(|| Error::NotFound(format!("port '{drive_port}'")))?;
    let n = dynamics.dim();
    let p = dynamics.n_ports();
    let m = &dynamics.m;
    let drive: DVector<Complex64> =
        DVector::from_iterator(n, (0..n).map(|i| Complex64::new(dynamics.l[(i, q)], 0.0)));

    let h = oracle_step(net, omega);
    let window = 256usize;
    let tol = 1e-6;

    let deriv = |t: f64, u: &DVector<Complex64>| -> DVector<Complex64> {
        m * u + &drive * Complex64::from_polar(1.0, -omega * t)
    };

    let mut u = DVector::<Complex64>::zeros(n);
    let mut steps: u64 = 0;
    let mut prev_env = DVector::<Complex64>::zeros(n);
    let mut residual;
    loop {
        for _ in 0..window {
            let t = steps as f64 * h;
            let k1 = deriv(t, &u);
            let k2 = deriv(t + h / 2.0, &(&u + &k1 * Complex64::new(h / 2.0, 0.0)));
            let k3 = deriv(t + h / 2.0, &(&u + &k2 * Complex64::new(h / 2.0, 0.0)));
            let k4 = deriv(t + h, &(&u + &k3 * Complex64::new(h, 0.0)));
            u += (k1 + k2 * Complex64::new(2.0, 0.0) + k3 * Complex64::new(2.0, 0.0) + k4)
                * Complex64::new(h / 6.0, 0.0);
            steps += 1;
        }
        let t = steps as f64 * h;
        let env = &u * Complex64::from_polar(1.0, omega * t);
        let diff = (&env - &prev_env)
            .iter()
            .fold(0.0f64, |acc, z| acc.max(z.norm()));
        let norm = env
            .iter()
            .chain(prev_env.iter())
            .fold(0.0f64, |acc, z| acc.max(z.norm()));
        residual = diff / (norm + 1e-300);
        if diff <= tol * norm + 1e-300 {
            let mut out = Vec::with_capacity(p);
            for j in 0..p {
                let mut coupled = Complex64::new(0.0, 0.0);
                for i in 0..n {
                    coupled += Complex64::new(dynamics.l[(i, j)], 0.0) * env[i];
                }
                let inject = if j == q {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                out.push(inject - coupled);
            }
            return Ok(out);
        }
        prev_env = env;
        if t > horizon {
            return Err(Error::OracleFailure { residual, horizon });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{isolator_preset, CavityMode, Coupling, MechanicalMode, NetworkSpec};
    use approx::assert_relative_eq;

    fn single_cavity(kappa_ext: f64, kappa_int: f64) -> NetworkSpec {
        NetworkSpec::new(
            vec![CavityMode::new("a", kappa_ext, kappa_int)],
            vec![],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn overcoupled_cavity_reflects_with_sign_flip() {
        let s = scattering(&assemble(&single_cavity(2.0, 0.0)), 0.0).unwrap();
        let r = s.element(0, 0);
        assert_relative_eq!(r.re, -1.0, epsilon = 1e-14);
        assert_relative_eq!(r.im, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn critically_coupled_cavity_absorbs() {
        let s = scattering(&assemble(&single_cavity(1.0, 1.0)), 0.0).unwrap();
        assert!(s.element(0, 0).norm() < 1e-14);
    }

    #[test]
    fn assembled_matrices_match_hand_written_form() {
        // kappa = 2, Gamma = 2, g = 1, delta = 1, phi = pi/2 for easy entries
        let net = isolator_preset(
            [(2.0, 0.0), (2.0, 0.0)],
            [2.0, 2.0],
            [[1.0, 1.0], [1.0, 1.0]],
            1.0,
            std::f64::consts::FRAC_PI_2,
        )
        .unwrap();
        let dynamics = assemble(&net);
        let m = &dynamics.m;
        let i = Complex64::i();
        let one = Complex64::new(1.0, 0.0);
        assert_eq!(m[(0, 0)], -one);
        assert_eq!(m[(1, 1)], -one);
        assert_eq!(m[(2, 2)], -one + i);
        assert_eq!(m[(3, 3)], -one - i);
        assert_eq!(m[(0, 2)], -i);
        assert_eq!(m[(0, 3)], -i);
        assert_eq!(m[(1, 2)], -i);
        // phased coupling: -i * e^{i pi/2} = 1 and its conjugate slot -1
        assert_relative_eq!((m[(1, 3)] - one).norm(), 0.0, epsilon = 1e-15);
        assert_relative_eq!((m[(3, 1)] + one).norm(), 0.0, epsilon = 1e-15);
        assert_eq!(m[(2, 0)], -i);
        assert_eq!(m[(3, 0)], -i);
        assert_eq!(m[(2, 1)], -i);
        assert_eq!(m[(0, 1)], Complex64::new(0.0, 0.0));

        let l = &dynamics.l;
        let s2 = 2.0f64.sqrt();
        assert_relative_eq!(l[(0, 0)], s2);
        assert_relative_eq!(l[(1, 1)], s2);
        assert_relative_eq!(l[(0, 2)], 0.0);
        assert_relative_eq!(l[(1, 3)], 0.0);
        assert_relative_eq!(l[(2, 4)], s2);
        assert_relative_eq!(l[(3, 5)], s2);
        assert_eq!(
            dynamics.port_labels(),
            vec!["a1", "a2", "a1_0", "a2_0", "b1", "b2"]
        );
    }

    #[test]
    fn l_gram_matrix_collects_total_rates() {
        let net = isolator_preset(
            [(1.5, 0.5), (2.5, 0.5)],
            [0.2, 0.3],
            [[0.4, 0.3], [0.2, 0.1]],
            0.5,
            0.7,
        )
        .unwrap();
        let dynamics = assemble(&net);
        let gram = &dynamics.l * dynamics.l.transpose();
        let expected = [2.0, 3.0, 0.2, 0.3];
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { expected[i] } else { 0.0 };
                assert_relative_eq!(gram[(i, j)], want, epsilon = 1e-14);
            }
        }
    }

    fn busy_network() -> NetworkSpec {
        NetworkSpec::new(
            vec![
                CavityMode::new("a1", 3.0, 0.5),
                CavityMode::new("a2", 5.0, 0.2),
            ],
            vec![
                MechanicalMode::new("b1", 0.8, 0.4),
                MechanicalMode::new("b2", 0.6, -0.4),
            ],
            vec![
                Coupling::new("a1", "b1", 1.1, 0.0),
                Coupling::new("a1", "b2", 0.7, 0.0),
                Coupling::new("a2", "b1", 0.9, 0.0),
                Coupling::new("a2", "b2", 1.3, 0.9),
            ],
        )
        .unwrap()
    }

    #[test]
    fn scattering_is_unitary() {
        let dynamics = assemble(&busy_network());
        for &w in &[-3.0, -0.4, 0.0, 0.7, 2.5] {
            let s = scattering(&dynamics, w).unwrap();
            assert!(unitarity_defect(&s) < 1e-12, "omega = {w}");
        }
    }

    #[test]
    fn sweep_preserves_order_and_matches_pointwise() {
        let net = busy_network();
        let omegas = [-1.0, 0.0, 0.5, 2.0];
        let sweep = frequency_sweep(&net, &omegas).unwrap();
        assert_eq!(sweep.len(), 4);
        let dynamics = assemble(&net);
        for (k, &w) in omegas.iter().enumerate() {
            assert_eq!(sweep[k].omega, w);
            let direct = scattering(&dynamics, w).unwrap();
            assert_eq!(sweep[k].s, direct.s);
        }
        assert!(frequency_sweep(&net, &[]).unwrap().is_empty());
    }

    #[test]
    fn external_block_shape() {
        let s = scattering(&assemble(&busy_network()), 0.3).unwrap();
        let block = external_block(&s);
        assert_eq!(block.shape(), (2, 2));
        assert_eq!(block[(1, 0)], s.element(1, 0));
    }

    #[test]
    fn oracle_matches_frequency_domain() {
        let net = busy_network();
        let dynamics = assemble(&net);
        let omega = 1.7;
        let s = scattering(&dynamics, omega).unwrap();
        for port in ["a1", "b1"] {
            let col = dynamics.port_index(port).unwrap();
            let out = time_domain_response(&net, port, omega, 5e3).unwrap();
            for (j, amp) in out.iter().enumerate() {
                assert!(
                    (amp - s.element(j, col)).norm() < 1e-4,
                    "port {port} row {j}"
                );
            }
        }
    }

    #[test]
    fn oracle_rejects_unknown_port_and_bad_horizon() {
        let net = busy_network();
        assert!(matches!(
            time_domain_response(&net, "zz", 0.0, 10.0),
            Err(Error::NotFound(_))
        ));
        assert!(time_domain_response(&net, "a1", 0.0, -1.0).is_err());
    }

    #[test]
    fn oracle_reports_nonconvergence() {
        // horizon far below the decay time forces the failure path
        let net = busy_network();
        let err = time_domain_response(&net, "a1", 0.0, 1e-3).unwrap_err();
        assert!(matches!(err, Error::OracleFailure { .. }));
    }
}
