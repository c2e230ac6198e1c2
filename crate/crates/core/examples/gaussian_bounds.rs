//! Lower, upper and relay-deaf bounds on a three-subchannel Gaussian
//! relay-eavesdropper channel, with the optimized allocations.

use secrelay::channel::{GaussianSubchannel, Mode, ModeAssignment, ParallelChannel, PowerBudget};
use secrelay::optim::{maximize_deaf, maximize_lower, maximize_upper, SolverOptions};
use secrelay::BoundResult;

fn show(name: &str, r: &BoundResult) {
    println!("{name:<22} {:.6} bits", r.value);
    let a = &r.allocation;
    for l in 0..a.len() {
        println!(
            "    l={l}  p1={:7.4}  p2={:7.4}  alpha={:.3}  psi={:+.3}",
            a.p1[l], a.p2[l], a.alpha[l], a.psi[l]
        );
    }
}

fn main() -> secrelay::Result<()> {
    // sigma2_relay, sigma2_dest, sigma2_eve, rho1, rho2
    let channel = ParallelChannel::new(vec![
        GaussianSubchannel::new(0.3, 1.0, 2.0, 1.5, 0.5),
        GaussianSubchannel::new(2.0, 0.8, 1.0, 3.0, 0.4),
        GaussianSubchannel::new(1.0, 1.5, 1.2, 0.5, 2.0),
    ])?;
    let budget = PowerBudget::new(4.0, 4.0)?;
    let options = SolverOptions::default();

    for modes in [
        ModeAssignment::all(3, Mode::Df),
        ModeAssignment::all(3, Mode::Nf),
        ModeAssignment(vec![Mode::Df, Mode::Nf, Mode::Nf]),
    ] {
        let r = maximize_lower(&channel, &budget, &modes, &options)?;
        show(&format!("lower {:?}", modes.modes()), &r);
    }
    show("upper", &maximize_upper(&channel, &budget, &options)?);
    show("relay-deaf (upper)", &maximize_deaf(&channel, &budget, &options, false)?);
    show("relay-deaf (achiev.)", &maximize_deaf(&channel, &budget, &options, true)?);
    Ok(())
}
