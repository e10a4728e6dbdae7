//! Sobol low-discrepancy designs with optional XOR digital shifts.
//!
//! Direction numbers are the first 16 dimensions of the Joe & Kuo
//! `new-joe-kuo-6.21201` table. Points are produced in Gray-code order and
//! the all-zeros point at index 0 is skipped.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

pub const MAX_SOBOL_DIM: usize = 16;
const BITS: usize = 32;

/// `(s, a, m_1..m_s)` for dimensions 2..=16; dimension 1 is van der Corput.
const JOE_KUO: [(u32, u32, &[u32]); MAX_SOBOL_DIM - 1] = [
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
];

fn direction_numbers(dim_index: usize) -> [u32; BITS] {
    let mut v = [0u32; BITS];
    if dim_index == 0 {
        for (i, v) in v.iter_mut().enumerate() {
            *v = 1 << (BITS - 1 - i);
        }
        return v;
    }
    let (s, a, m) = JOE_KUO[dim_index - 1];
    let s = s as usize;
    for i in 0..s.min(BITS) {
        v[i] = m[i] << (BITS - 1 - i);
    }
    for i in s..BITS {
        let mut x = v[i - s] ^ (v[i - s] >> s);
        for k in 1..s {
            if (a >> (s - 1 - k)) & 1 == 1 {
                x ^= v[i - k];
            }
        }
        v[i] = x;
    }
    v
}

/// Raw 32-bit Sobol coordinates of point `index` (Gray-code order).
pub fn sobol_u32(index: u32, dim: usize) -> Result<Vec<u32>> {
    if dim == 0 || dim > MAX_SOBOL_DIM {
        return Err(Error::domain(format!(
            "Sobol dimension {dim} outside supported range 1..={MAX_SOBOL_DIM}"
        )));
    }
    let gray = index ^ (index >> 1);
    Ok((0..dim)
        .map(|j| {
            let v = direction_numbers(j);
            (0..BITS)
                .filter(|b| (gray >> b) & 1 == 1)
                .fold(0u32, |acc, b| acc ^ v[b])
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleDesign {
    pub n: usize,
    pub dim: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// 0 means unscrambled.
    pub scramble_seed: u64,
}

impl SampleDesign {
    pub fn new(n: usize, dim: usize, lo: f64, hi: f64) -> Self {
        Self {
            n,
            dim,
            lo: vec![lo; dim],
            hi: vec![hi; dim],
            scramble_seed: 0,
        }
    }

    pub fn with_scramble(mut self, seed: u64) -> Self {
        self.scramble_seed = seed;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::domain("sample design needs n >= 1"));
        }
        if self.n as u64 >= u32::MAX as u64 {
            return Err(Error::domain("sample design exceeds 2^32 - 1 points"));
        }
        if self.lo.len() != self.dim || self.hi.len() != self.dim {
            return Err(Error::domain("bounds length does not match dimension"));
        }
        if self.lo.iter().zip(&self.hi).any(|(l, h)| !(l < h)) {
            return Err(Error::domain("sample design needs lo < hi elementwise"));
        }
        Ok(())
    }
}

fn digital_shifts(seed: u64, dim: usize) -> Vec<u32> {
    if seed == 0 {
        return vec![0; dim];
    }
    let mut rng = seed::rng_for(seed, "sobol-shift", &[]);
    (0..dim).map(|_| rng.random::<u32>()).collect()
}

/// First `n` points of the (optionally shifted) Sobol sequence mapped to the
/// design's box, one row per point.
pub fn sobol_points(design: &SampleDesign) -> Result<Vec<Vec<f64>>> {
    design.validate()?;
    if design.dim == 0 || design.dim > MAX_SOBOL_DIM {
        return Err(Error::domain(format!(
            "Sobol dimension {} outside supported range 1..={MAX_SOBOL_DIM}",
            design.dim
        )));
    }
    let dirs: Vec<[u32; BITS]> = (0..design.dim).map(direction_numbers).collect();
    let shifts = digital_shifts(design.scramble_seed, design.dim);
    let scale = 1.0 / (1u64 << BITS) as f64;
    let mut x = vec![0u32; design.dim];
    let mut out = Vec::with_capacity(design.n);
    // Gray-code recursion: point i differs from point i-1 in the direction
    // number indexed by the trailing zeros of i.
    for i in 1..=design.n as u32 {
        let c = i.trailing_zeros() as usize;
        for (xj, v) in x.iter_mut().zip(&dirs) {
            *xj ^= v[c];
        }
        out.push(
            x.iter()
                .zip(&shifts)
                .enumerate()
                .map(|(j, (&xj, &s))| {
                    let u = (xj ^ s) as f64 * scale;
                    let y = design.lo[j] + u * (design.hi[j] - design.lo[j]);
                    y.min(design.hi[j])
                })
                .collect(),
        );
    }
    Ok(out)
}

/// `repetitions` copies of `base` that differ only in their scramble seed.
pub fn repeat_designs(base: &SampleDesign, repetitions: usize, seed: u64) -> Vec<SampleDesign> {
    (0..repetitions as u64)
        .map(|r| {
            let mut s = seed::derive_seed(seed, "design-repetition", &[r]);
            if s == 0 {
                s = 1;
            }
            base.clone().with_scramble(s)
        })
        .collect()
}

/// Writes a design's points as CSV (debugging aid).
pub fn write_points_csv<W: std::io::Write>(points: &[Vec<f64>], mut w: W) -> std::io::Result<()> {
    if let Some(first) = points.first() {
        let header: Vec<String> = (1..=first.len()).map(|j| format!("x{j}")).collect();
        writeln!(w, "{}", header.join(","))?;
    }
    for p in points {
        let row: Vec<String> = p.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}
