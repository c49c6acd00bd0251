#![allow(dead_code)]

use rand_core::Rng;
use rand_pcg::Pcg32;

pub struct Draw(Pcg32);

impl Draw {
    pub fn new(seed: u64) -> Self {
        Self(Pcg32::new(seed, 7))
    }

    pub fn unit(&mut self) -> f64 {
        self.0.next_u32() as f64 / 4_294_967_296.0
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn below(&mut self, n: usize) -> usize {
        ((self.0.next_u32() as u64 * n as u64) >> 32) as usize
    }
}
