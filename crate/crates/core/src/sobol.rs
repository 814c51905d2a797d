//! Sobol low-discrepancy sequence in Gray-code order.
//!
//! Direction numbers are the Joe-Kuo `new-joe-kuo-6.21201` set; the first
//! dimension is the van der Corput sequence in base 2. Points are produced
//! with 32 bits of precision. Index 0 is the origin and index 1 is 0.5 in
//! every coordinate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

const BITS: usize = 32;

/// (degree s, polynomial coefficients a, initial direction numbers m) for
/// dimensions 2, 3, ...
const JOE_KUO: [(u32, u32, &[u32]); 39] = [
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
    (5, 4, &[1, 1, 5, 5, 5]),
    (5, 7, &[1, 1, 7, 11, 19]),
    (5, 11, &[1, 1, 5, 1, 1]),
    (5, 13, &[1, 1, 1, 3, 11]),
    (5, 14, &[1, 3, 5, 5, 31]),
    (6, 1, &[1, 3, 3, 9, 7, 49]),
    (6, 13, &[1, 1, 1, 15, 21, 21]),
    (6, 16, &[1, 3, 1, 13, 27, 49]),
    (6, 19, &[1, 1, 1, 15, 7, 5]),
    (6, 22, &[1, 3, 1, 15, 13, 25]),
    (6, 25, &[1, 1, 5, 5, 19, 61]),
    (7, 1, &[1, 3, 7, 11, 23, 15, 103]),
    (7, 4, &[1, 3, 7, 13, 13, 15, 69]),
    (7, 7, &[1, 1, 3, 13, 7, 35, 63]),
    (7, 8, &[1, 3, 5, 9, 1, 25, 53]),
    (7, 14, &[1, 3, 1, 13, 9, 35, 107]),
    (7, 19, &[1, 3, 1, 5, 27, 61, 31]),
    (7, 21, &[1, 1, 5, 11, 19, 41, 61]),
    (7, 28, &[1, 3, 5, 3, 3, 13, 69]),
    (7, 31, &[1, 1, 7, 13, 1, 19, 1]),
    (7, 32, &[1, 3, 7, 5, 13, 19, 59]),
    (7, 37, &[1, 1, 3, 9, 25, 29, 41]),
    (7, 41, &[1, 3, 5, 13, 23, 1, 55]),
    (7, 42, &[1, 3, 7, 3, 13, 59, 17]),
    (7, 50, &[1, 3, 1, 3, 5, 53, 69]),
    (7, 55, &[1, 1, 5, 5, 23, 33, 13]),
    (7, 56, &[1, 1, 7, 7, 1, 61, 123]),
    (7, 59, &[1, 1, 7, 9, 13, 61, 49]),
    (7, 62, &[1, 3, 3, 5, 3, 55, 33]),
    (8, 14, &[1, 3, 1, 15, 31, 13, 49, 245]),
    (8, 21, &[1, 3, 5, 15, 31, 59, 63, 97]),
    (8, 22, &[1, 3, 1, 11, 11, 11, 77, 249]),
];

/// Highest supported dimension.
pub const MAX_DIM: usize = JOE_KUO.len() + 1;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SobolError {
    #[error("Sobol dimension {0} unsupported (1..={MAX_DIM})")]
    Dimension(usize),
    #[error("Sobol index range exceeds 2^32 points")]
    Exhausted,
}

fn directions(dim: usize) -> [u32; BITS] {
    let mut v = [0u32; BITS];
    if dim == 0 {
        for (k, x) in v.iter_mut().enumerate() {
            *x = 1 << (BITS - 1 - k);
        }
        return v;
    }
    let (s, a, m) = JOE_KUO[dim - 1];
    let s = s as usize;
    for k in 0..s {
        v[k] = m[k] << (BITS - 1 - k);
    }
    for k in s..BITS {
        let mut x = v[k - s] ^ (v[k - s] >> s);
        for i in 1..s {
            if (a >> (s - 1 - i)) & 1 == 1 {
                x ^= v[k - i];
            }
        }
        v[k] = x;
    }
    v
}

#[derive(Debug, Clone)]
pub struct Sobol {
    directions: Vec<[u32; BITS]>,
    shift: Vec<u32>,
}

impl Sobol {
    pub fn new(dim: usize) -> Result<Self, SobolError> {
        if dim == 0 || dim > MAX_DIM {
            return Err(SobolError::Dimension(dim));
        }
        Ok(Sobol { directions: (0..dim).map(directions).collect(), shift: vec![0; dim] })
    }

    /// Sequence XOR-ed with a random digital shift drawn from `seed`.
    /// Seed 0 leaves the sequence unshifted. The shift preserves the
    /// dyadic stratification of the unshifted sequence.
    pub fn with_digital_shift(dim: usize, seed: u64) -> Result<Self, SobolError> {
        let mut s = Self::new(dim)?;
        if seed != 0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            s.shift.iter_mut().for_each(|x| *x = rng.gen());
        }
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.directions.len()
    }

    fn state_at(&self, index: u64) -> Vec<u32> {
        let gray = index ^ (index >> 1);
        self.directions
            .iter()
            .zip(&self.shift)
            .map(|(v, &shift)| {
                (0..BITS).filter(|&b| (gray >> b) & 1 == 1).fold(shift, |acc, b| acc ^ v[b])
            })
            .collect()
    }

    /// `n` consecutive points starting at sequence index `skip`, each in
    /// `[0, 1)^dim`.
    pub fn points(&self, skip: u64, n: usize) -> Result<Vec<Vec<f64>>, SobolError> {
        if skip.checked_add(n as u64).map_or(true, |end| end > 1u64 << BITS) {
            return Err(SobolError::Exhausted);
        }
        let scale = 1.0 / (1u64 << BITS) as f64;
        let mut state = self.state_at(skip);
        let mut out = Vec::with_capacity(n);
        for i in 0..n as u64 {
            if i > 0 {
                let c = (skip + i).trailing_zeros() as usize;
                for (x, v) in state.iter_mut().zip(&self.directions) {
                    *x ^= v[c];
                }
            }
            out.push(state.iter().map(|&x| x as f64 * scale).collect());
        }
        Ok(out)
    }
}

/// `n` unshifted Sobol points of dimension `dim`, starting at index `skip`.
pub fn sobol_points(dim: usize, n: usize, skip: u64) -> Result<Vec<Vec<f64>>, SobolError> {
    Sobol::new(dim)?.points(skip, n)
}
