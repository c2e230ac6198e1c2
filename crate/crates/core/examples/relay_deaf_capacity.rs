//! Secrecy capacity when the relay cannot hear the source: the relay-deaf
//! upper and lower bounds coincide whenever the unconstrained maximizer also
//! satisfies the relay-deaf condition.

use secrelay::channel::{GaussianSubchannel, ParallelChannel, PowerBudget};
use secrelay::optim::{detect_deaf_capacity, SolverOptions};

fn main() -> secrelay::Result<()> {
    let budget = PowerBudget::new(2.0, 2.0)?;
    let options = SolverOptions::default();
    let cases = [
        ("strong relay-destination link", GaussianSubchannel::new(1.0, 1.0, 1.0, 4.0, 1.0)),
        ("relay unheard by eavesdropper", GaussianSubchannel::new(1.0, 1.0, 2.0, 1.0, 0.0)),
        ("relay only reaches eavesdropper", GaussianSubchannel::new(1.0, 1.0, 1.0, 0.0, 4.0)),
    ];
    for (name, sub) in cases {
        let channel = ParallelChannel::new(vec![sub])?;
        let d = detect_deaf_capacity(&channel, &budget, &options)?;
        match d.capacity {
            Some(c) => println!(
                "{name:<34} capacity {c:.6} bits at p1={:.4}, p2={:.4} (margin {:.2e})",
                d.certificate.p1[0], d.certificate.p2[0], d.margin
            ),
            None => println!(
                "{name:<34} no capacity result: maximizer violates the condition by {:.4}",
                -d.margin
            ),
        }
    }
    Ok(())
}
