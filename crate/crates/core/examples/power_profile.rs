//! Per-state power allocation of the hybrid scheme with the relay at
//! (0.5, 0): which states run DF or NF and which are switched off.

use secrelay::channel::Mode;
use secrelay::fading::{
    ergodic_lower_batch, sample_fading, select_modes_heuristic, FadingScenario,
};
use secrelay::optim::SolverOptions;

fn main() -> secrelay::Result<()> {
    let scenario = FadingScenario {
        n_states: 16,
        ..FadingScenario::reference(0.5, 42)
    };
    let batch = sample_fading(&scenario)?;
    let modes = select_modes_heuristic(&batch);
    let r = ergodic_lower_batch(&batch, &scenario, &modes, &SolverOptions::default())?;
    println!("average secrecy rate {:.4} bits per channel use", r.value);
    println!("{:>5} {:>4} {:>9} {:>9} {:>9} {:>9}", "state", "mode", "|h_sd|^2", "|h_sr|^2", "P1", "P2");
    for (i, draw) in batch.draws.iter().enumerate() {
        let mode = match modes.modes()[i] {
            Mode::Df => "DF",
            Mode::Nf => "NF",
        };
        println!(
            "{i:>5} {mode:>4} {:>9.4} {:>9.4} {:>9.3} {:>9.3}",
            draw.h_sd.norm_sqr(),
            draw.h_sr.norm_sqr(),
            r.allocation.p1[i],
            r.allocation.p2[i]
        );
    }
    Ok(())
}
