//! Fixtures shared by the benchmarks.

use anderson_core::lattice::assemble_hamiltonian;
use anderson_core::{CubeGeometry, HamiltonianSpec, Hopping, RandomStream, SingleSiteDistribution, SparseHamiltonian};

/// A disordered Laplacian on `{-l..l}^d` with uniform disorder of strength 4.
pub fn sample_hamiltonian(d: usize, l: usize, seed: u64) -> SparseHamiltonian {
    let geom = CubeGeometry::whole(d, l).expect("valid geometry");
    let spec = HamiltonianSpec::new(Hopping::LaplacianOffdiag, 4.0).expect("valid spec");
    let dist = SingleSiteDistribution::uniform(-0.5, 0.5).expect("valid distribution");
    let mut omega = vec![0.0; geom.volume()];
    dist.sample_into(&mut omega, &mut RandomStream::from_seed(seed));
    assemble_hamiltonian(&spec, &geom, &omega).expect("valid hamiltonian")
}
