use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Circuit, CliffordGroup};
use crate::error::{Error, Result};

/// Samples an RB sequence of total depth `depth`: `depth − 1` uniformly random
/// Cliffords followed by the Clifford that inverts them. The depth counts the
/// inversion gate.
pub fn sample_rb_circuit_with<R: Rng + ?Sized>(
    group: &CliffordGroup,
    depth: usize,
    rng: &mut R,
) -> Result<Circuit> {
    if depth == 0 {
        return Err(Error::InvalidInput("RB depth must be at least 1".into()));
    }
    let mut net = 0;
    let mut labels = Vec::with_capacity(depth);
    for _ in 0..depth - 1 {
        let c = rng.random_range(0..group.len());
        net = group.compose(net, c);
        labels.push(CliffordGroup::label(c));
    }
    labels.push(CliffordGroup::label(group.inverse(net)));
    Circuit::new(labels)
}

pub fn sample_rb_circuit(group: &CliffordGroup, depth: usize, seed: u64) -> Result<Circuit> {
    sample_rb_circuit_with(group, depth, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// `K` sampled sequences at each depth. Circuits may repeat at small depths.
#[derive(Clone, Debug)]
pub struct RbDesign {
    pub depths: Vec<usize>,
    pub per_depth: usize,
    pub circuits: Vec<Circuit>,
}

pub fn rb_design(
    group: &CliffordGroup,
    depths: &[usize],
    per_depth: usize,
    seed: u64,
) -> Result<RbDesign> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut circuits = Vec::with_capacity(depths.len() * per_depth);
    for &d in depths {
        for _ in 0..per_depth {
            circuits.push(sample_rb_circuit_with(group, d, &mut rng)?);
        }
    }
    Ok(RbDesign {
        depths: depths.to_vec(),
        per_depth,
        circuits,
    })
}
