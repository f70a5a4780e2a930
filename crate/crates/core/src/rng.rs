//! Counter-based random streams (Philox4x64-10).
//!
//! A stream is a pure function of its `(key, counter)` pair. The sampler keys
//! streams by `(seed, sweep index)` and starts the counter at
//! `(0, link index)`, so every link update in every sweep reads its own
//! independent sequence no matter which worker runs it or in what order.

use rand_core::{impls, RngCore};

const MUL0: u64 = 0xD2E7_470E_E14C_6C93;
const MUL1: u64 = 0xCA5A_8263_9512_1157;
const WEYL0: u64 = 0x9E37_79B9_7F4A_7C15;
const WEYL1: u64 = 0xBB67_AE85_84CA_A73B;
const ROUNDS: usize = 10;

#[inline(always)]
fn mulhilo(a: u64, b: u64) -> (u64, u64) {
    let p = (a as u128) * (b as u128);
    ((p >> 64) as u64, p as u64)
}

/// One Philox4x64-10 block: 256-bit counter, 128-bit key, 256-bit output.
pub fn philox4x64(counter: [u64; 4], key: [u64; 2]) -> [u64; 4] {
    let mut ctr = counter;
    let mut k = key;
    for round in 0..ROUNDS {
        if round > 0 {
            k[0] = k[0].wrapping_add(WEYL0);
            k[1] = k[1].wrapping_add(WEYL1);
        }
        let (hi0, lo0) = mulhilo(MUL0, ctr[0]);
        let (hi1, lo1) = mulhilo(MUL1, ctr[2]);
        ctr = [hi1 ^ ctr[1] ^ k[0], lo1, hi0 ^ ctr[3] ^ k[1], lo0];
    }
    ctr
}

/// A `(key, counter)` pair plus a small output buffer.
///
/// The 128-bit counter is stored as `[low, high]` words and advances by one
/// per generated block of four 64-bit words.
#[derive(Clone, Debug)]
pub struct RandomStream {
    key: [u64; 2],
    counter: [u64; 2],
    buf: [u64; 4],
    pos: usize,
}

impl RandomStream {
    pub fn new(key: [u64; 2], counter: [u64; 2]) -> Self {
        Self {
            key,
            counter,
            buf: [0; 4],
            pos: 4,
        }
    }

    /// Stream for one link update: key `(seed, sweep)`, counter `(0, link)`.
    pub fn for_link(seed: u64, sweep: u64, link: u64) -> Self {
        Self::new([seed, sweep], [0, link])
    }

    pub fn key(&self) -> [u64; 2] {
        self.key
    }

    /// Counter of the next block to be generated.
    pub fn counter(&self) -> [u64; 2] {
        self.counter
    }

    fn refill(&mut self) {
        self.buf = philox4x64([self.counter[0], self.counter[1], 0, 0], self.key);
        let (lo, carry) = self.counter[0].overflowing_add(1);
        self.counter[0] = lo;
        if carry {
            self.counter[1] = self.counter[1].wrapping_add(1);
        }
        self.pos = 0;
    }

    #[inline]
    pub fn next_word(&mut self) -> u64 {
        if self.pos == 4 {
            self.refill();
        }
        let w = self.buf[self.pos];
        self.pos += 1;
        w
    }

    /// Uniform in `[0, 1)` with 53 bits of resolution.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_word() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `(0, 1]`, safe as a logarithm argument.
    #[inline]
    pub fn uniform_open0(&mut self) -> f64 {
        ((self.next_word() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal deviate (Box-Muller, one value per call).
    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform_open0();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        (self.next_word() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.next_word()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        impls::fill_bytes_via_next(self, dst)
    }
}

/// SplitMix64 finalizer, used to derive independent seeds (e.g. per scan point).
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for point `index` of a scan driven by `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(1)))
}

#[cfg(test)]
mod tests {
    use super::*;

    // Known-answer vectors from the Random123 distribution (kat_vectors).
    #[test]
    fn philox_known_answers() {
        assert_eq!(
            philox4x64([0; 4], [0; 2]),
            [
                0x16554d9eca36314c,
                0xdb20fe9d672d0fdc,
                0xd7e772cee186176b,
                0x7e68b68aec7ba23b
            ]
        );
        assert_eq!(
            philox4x64([u64::MAX; 4], [u64::MAX; 2]),
            [
                0x87b092c3013fe90b,
                0x438c3c67be8d0224,
                0x9cc7d7c69cd777b6,
                0xa09caebf594f0ba0
            ]
        );
        assert_eq!(
            philox4x64(
                [
                    0x243f6a8885a308d3,
                    0x13198a2e03707344,
                    0xa4093822299f31d0,
                    0x082efa98ec4e6c89
                ],
                [0x452821e638d01377, 0xbe5466cf34e90c6c]
            ),
            [
                0xa528f45403e61d95,
                0x38c72dbd566e9788,
                0xa5a1610e72fd18b5,
                0x57bd43b5e52b7fe6
            ]
        );
    }

    #[test]
    fn counter_advances_per_block() {
        let mut s = RandomStream::new([1, 2], [u64::MAX, 0]);
        for _ in 0..4 {
            s.next_word();
        }
        assert_eq!(s.counter(), [0, 1]);
        s.next_word();
        assert_eq!(s.counter(), [1, 1]);
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = {
            let mut s = RandomStream::for_link(7, 3, 11);
            (0..10).map(|_| s.next_word()).collect()
        };
        let b: Vec<u64> = {
            let mut s = RandomStream::for_link(7, 3, 11);
            (0..10).map(|_| s.next_word()).collect()
        };
        let c: Vec<u64> = {
            let mut s = RandomStream::for_link(7, 3, 12);
            (0..10).map(|_| s.next_word()).collect()
        };
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn uniform_moments() {
        let mut s = RandomStream::for_link(1, 0, 0);
        let n = 200_000;
        let (mut m1, mut m2) = (0.0, 0.0);
        for _ in 0..n {
            let u = s.uniform();
            assert!((0.0..1.0).contains(&u));
            m1 += u;
            m2 += u * u;
        }
        m1 /= n as f64;
        m2 /= n as f64;
        assert!((m1 - 0.5).abs() < 0.005);
        assert!((m2 - 1.0 / 3.0).abs() < 0.005);
    }

    #[test]
    fn normal_moments() {
        let mut s = RandomStream::for_link(2, 0, 0);
        let n = 200_000;
        let (mut m1, mut m2) = (0.0, 0.0);
        for _ in 0..n {
            let z = s.normal();
            m1 += z;
            m2 += z * z;
        }
        m1 /= n as f64;
        m2 /= n as f64;
        assert!(m1.abs() < 0.01);
        assert!((m2 - 1.0).abs() < 0.015);
    }
}
