//! Fixtures shared by the benchmarks.

use demu_core::design::maximin_lhd;
use demu_core::simulators::{BananaVariant, SimulatorSpec};
use demu_core::Result;
use nalgebra::DMatrix;

/// Banana simulator grounded on roughly half of the unit square.
pub fn banana_half() -> SimulatorSpec {
    SimulatorSpec::Banana {
        dim: 2,
        variant: BananaVariant::Squared,
        a: 6.4,
        b: 0.5,
        m_scale: 94.6,
        g: 0.0,
    }
}

/// Maximin design of `n` points with the simulator evaluated on it.
pub fn training_set(sim: &SimulatorSpec, n: usize, seed: u64) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let x = maximin_lhd(n, sim.dim(), 10, seed)?.points;
    let y = (0..n)
        .map(|i| sim.eval(&x.row(i).iter().copied().collect::<Vec<_>>()))
        .collect::<Result<Vec<_>>>()?;
    Ok((x, y))
}
