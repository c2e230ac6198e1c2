//! Upper bound when the eavesdropper sees all subchannels at once and treats
//! the other subchannels as interference, under both readings of the relay
//! interference term.

use secrelay::channel::{Allocation, GaussianSubchannel, ParallelChannel};
use secrelay::rates::{interference_upper_value_with, upper_bound_value, InterferenceConvention};

fn main() -> secrelay::Result<()> {
    let channel = ParallelChannel::repeated(GaussianSubchannel::new(1.0, 1.0, 1.0, 2.0, 4.0), 3)?;
    for p2 in [0.0, 0.5, 2.0] {
        let alloc = Allocation {
            p1: vec![1.0; 3],
            p2: vec![p2; 3],
            alpha: vec![1.0; 3],
            psi: vec![0.0; 3],
        };
        let separate = upper_bound_value(&channel, &alloc)?;
        let printed = interference_upper_value_with(&channel, &alloc, InterferenceConvention::AsPrinted)?;
        let power =
            interference_upper_value_with(&channel, &alloc, InterferenceConvention::PowerConsistent)?;
        println!(
            "p2={p2:<4} separate {separate:.5}  interference(as printed) {printed:.5}  interference(power) {power:.5}"
        );
    }
    Ok(())
}
