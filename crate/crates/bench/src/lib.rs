//! Fixed machines shared by the benchmarks.

use hqmm_core::sampler::{EnsembleSpec, MachineClass};
use hqmm_core::Machine;

pub const SEED: u64 = 1;

/// The `index`-th machine of a seeded ensemble.
pub fn machine(class: MachineClass, n_states: Option<usize>, index: usize) -> Machine {
    EnsembleSpec {
        machine_class: class,
        n_states,
        n_machines: index + 1,
        master_seed: SEED,
    }
    .sample(index)
    .expect("valid ensemble")
}

pub fn label(m: &Machine) -> String {
    m.class_tag()
}
