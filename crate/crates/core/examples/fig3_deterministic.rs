//! Coding across subchannels versus coding on each one separately, for the
//! two-subchannel deterministic relay-eavesdropper example.

use secrelay::channel::DeterministicSubchannel;
use secrelay::rates::{deterministic_across, deterministic_separate};

fn main() -> secrelay::Result<()> {
    // (source->relay, relay->destination, eavesdropper) capacities in bits
    let subs = [
        DeterministicSubchannel::new(4.0, 3.0, 2.0)?,
        DeterministicSubchannel::new(5.0, 7.0, 3.0)?,
    ];
    for (l, s) in subs.iter().enumerate() {
        println!(
            "subchannel {l}: relay-in {} relay-out {} eve {}",
            s.cap_relay_in, s.cap_relay_out, s.cap_eve
        );
    }
    let across = deterministic_across(&subs)?;
    let separate = deterministic_separate(&subs)?;
    println!("coding across subchannels : {across} bits");
    println!("coding separately         : {separate} bits");
    Ok(())
}
