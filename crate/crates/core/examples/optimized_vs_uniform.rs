//! Gain of optimized power allocation over the uniform split on random
//! channels.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use secrelay::channel::{
    uniform_allocation, GaussianSubchannel, Mode, ModeAssignment, ParallelChannel, PowerBudget,
};
use secrelay::optim::{maximize_lower, SolverOptions};
use secrelay::rates::lower_bound_value;

fn main() -> secrelay::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let options = SolverOptions::default();
    println!("{:>3} {:>10} {:>10} {:>8}", "L", "uniform", "optimized", "gain");
    for _ in 0..8 {
        let l = rng.gen_range(1..=4);
        let subs = (0..l)
            .map(|_| {
                GaussianSubchannel::new(
                    rng.gen_range(0.25..4.0),
                    rng.gen_range(0.25..4.0),
                    rng.gen_range(0.25..4.0),
                    rng.gen_range(0.0..4.0),
                    rng.gen_range(0.0..4.0),
                )
            })
            .collect();
        let channel = ParallelChannel::new(subs)?;
        let budget = PowerBudget::new(rng.gen_range(0.5..8.0), rng.gen_range(0.5..8.0))?;
        let modes = ModeAssignment(
            (0..l)
                .map(|_| if rng.gen_bool(0.5) { Mode::Df } else { Mode::Nf })
                .collect(),
        );
        let uniform = lower_bound_value(&channel, &modes, &uniform_allocation(&channel, &budget))?;
        let best = maximize_lower(&channel, &budget, &modes, &options)?.value;
        println!("{l:>3} {uniform:>10.5} {best:>10.5} {:>+8.4}", best - uniform);
    }
    Ok(())
}
