//! Cross-checks of the optimizer: exhaustive lattice search on a small
//! instance and finite-difference gradients at an interior point.

use secrelay::channel::{
    Allocation, GaussianSubchannel, Mode, ModeAssignment, ParallelChannel, PowerBudget,
};
use secrelay::optim::{
    finite_diff_check, grid_oracle, maximize_deaf, maximize_lower, maximize_upper, BoundKind,
    SolverOptions,
};

fn main() -> secrelay::Result<()> {
    let channel = ParallelChannel::new(vec![
        GaussianSubchannel::new(0.5, 1.0, 2.0, 2.0, 0.5),
        GaussianSubchannel::new(1.0, 0.8, 1.5, 1.2, 0.3),
    ])?;
    let budget = PowerBudget::new(3.0, 3.0)?;
    let options = SolverOptions::default();
    let modes = ModeAssignment(vec![Mode::Df, Mode::Nf]);

    let kinds = [
        BoundKind::Lower(modes.clone()),
        BoundKind::Upper,
        BoundKind::Deaf { require_condition: false },
    ];
    for kind in &kinds {
        let opt = match kind {
            BoundKind::Lower(m) => maximize_lower(&channel, &budget, m, &options)?,
            BoundKind::Upper => maximize_upper(&channel, &budget, &options)?,
            BoundKind::Deaf { require_condition } => {
                maximize_deaf(&channel, &budget, &options, *require_condition)?
            }
        };
        let grid = grid_oracle(&channel, &budget, kind, 101)?;
        println!(
            "{:<6} optimizer {:.6}  oracle {:.6}  ({} lattice points)",
            name(kind),
            opt.value,
            grid.value,
            grid.diagnostics.starts_tried
        );
    }

    let point = Allocation {
        p1: vec![1.2, 0.7],
        p2: vec![0.9, 1.1],
        alpha: vec![0.6, 0.3],
        psi: vec![0.4, -0.2],
    };
    for kind in &kinds {
        match finite_diff_check(kind, &channel, &budget, &point) {
            Ok(e) => println!("{:<6} relative gradient error {e:.2e}", name(kind)),
            Err(e) => println!("{:<6} {e}", name(kind)),
        }
    }
    Ok(())
}

fn name(kind: &BoundKind) -> &'static str {
    match kind {
        BoundKind::Lower(_) => "lower",
        BoundKind::Upper => "upper",
        BoundKind::Deaf { .. } => "deaf",
    }
}
