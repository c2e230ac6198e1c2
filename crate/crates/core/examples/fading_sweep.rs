//! Average secrecy rate of every relaying scheme as the relay moves from the
//! source towards (and past) the destination. Prints the sweep as CSV.
//!
//! Usage: `cargo run --release --example fading_sweep [n_states]`

use secrelay::fading::{d_grid, sweep_relay_position, write_csv, FadingScenario, Scheme};
use secrelay::optim::SolverOptions;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n_states = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(8);
    let scenario = FadingScenario {
        n_states,
        ..FadingScenario::reference(0.1, 42)
    };
    let d = d_grid(0.1, 1.9, 0.3)?;
    let rows = sweep_relay_position(&scenario, &d, &Scheme::ALL, &SolverOptions::default())?;
    write_csv(&rows, std::io::stdout().lock())?;
    Ok(())
}
