//! The i.i.d. deletion channel.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;
use crate::vocab::{ObservedSequence, Word};

/// Deletes each symbol independently with probability `p`, keeping the
/// order of the survivors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeletionChannel {
    p: f64,
    seed: u64,
}

impl DeletionChannel {
    pub fn new(p: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!(
                "deletion probability must be in [0, 1], got {p}"
            )));
        }
        Ok(DeletionChannel { p, seed })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The `draw_index`-th transmission; a pure function of
    /// `(seed, draw_index, w)`.
    pub fn transmit(&self, w: &Word, draw_index: u64) -> ObservedSequence {
        let mut rng = rng::stream(self.seed, &[draw_index]);
        self.transmit_with(w, &mut rng)
    }

    pub fn transmit_with<R: Rng + ?Sized>(&self, w: &Word, rng: &mut R) -> ObservedSequence {
        let kept = w
            .letters()
            .iter()
            .copied()
            .filter(|_| rng.random::<f64>() >= self.p)
            .collect();
        ObservedSequence::from_trusted(kept)
    }
}
