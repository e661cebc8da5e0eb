//! Shows how each allocation strategy spends a 1,000-example training set
//! over three epochs at ratio 0.3.

use std::collections::HashSet;

use stsm::select::{allocate, AllocationStrategy};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for strategy in [
        AllocationStrategy::FixedNonOverlap,
        AllocationStrategy::FixedRepeated,
        AllocationStrategy::RandomPerEpoch,
    ] {
        let plan = allocate(1000, strategy, 0.3, 3, 42)?;
        let distinct: HashSet<usize> = plan.epoch_indices.iter().flatten().copied().collect();
        println!("{strategy:?}");
        println!("  block size {}", plan.block_size());
        println!("  distinct examples used {}", distinct.len());
        println!("  never used {}", plan.unused().len());
        for (e, block) in plan.epoch_indices.iter().enumerate() {
            println!("  epoch {}: first indices {:?}", e + 1, &block[..5]);
        }
    }
    Ok(())
}
