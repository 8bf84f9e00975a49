//! Electronic level labels and the two-atom state on 16 channels × `n_r`
//! grid points.

use std::fmt;

use crate::grid::Wavefunction1D;
use crate::C64;

/// One-atom electronic levels: the qubit states, the intermediate state and
/// the Rydberg state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    Q0 = 0,
    Q1 = 1,
    I = 2,
    R = 3,
}

impl Level {
    pub const ALL: [Level; 4] = [Level::Q0, Level::Q1, Level::I, Level::R];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Level {
        Self::ALL[i]
    }

    pub fn label(self) -> &'static str {
        match self {
            Level::Q0 => "0",
            Level::Q1 => "1",
            Level::I => "i",
            Level::R => "r",
        }
    }
}

pub const N_LEVELS: usize = 4;
pub const N_CHANNELS: usize = N_LEVELS * N_LEVELS;

/// Two-atom channel index, atom 1 major.
pub fn channel(a: Level, b: Level) -> usize {
    a.index() * N_LEVELS + b.index()
}

pub fn channel_levels(c: usize) -> (Level, Level) {
    (Level::from_index(c / N_LEVELS), Level::from_index(c % N_LEVELS))
}

pub fn channel_label(c: usize) -> String {
    let (a, b) = channel_levels(c);
    format!("{}{}", a.label(), b.label())
}

/// Channels of the computational basis `|00>, |01>, |10>, |11>`.
pub const REGISTER_CHANNELS: [usize; 4] = [0, 1, 4, 5];

/// Complex amplitudes over 16 channels × `n_r` points, channel-major.
#[derive(Clone, PartialEq)]
pub struct TwoAtomState {
    pub n_r: usize,
    pub dr: f64,
    pub data: Vec<C64>,
}

impl fmt::Debug for TwoAtomState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TwoAtomState")
            .field("n_r", &self.n_r)
            .field("norm", &self.norm())
            .finish()
    }
}

impl TwoAtomState {
    pub fn zeros(n_r: usize, dr: f64) -> Self {
        Self {
            n_r,
            dr,
            data: vec![C64::new(0.0, 0.0); N_CHANNELS * n_r],
        }
    }

    /// `|a b> ⊗ motion`.
    pub fn product(a: Level, b: Level, motion: &Wavefunction1D) -> Self {
        let mut s = Self::zeros(motion.len(), motion.dr);
        s.channel_mut(channel(a, b))
            .copy_from_slice(&motion.amplitudes);
        s
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn channel(&self, c: usize) -> &[C64] {
        &self.data[c * self.n_r..(c + 1) * self.n_r]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [C64] {
        &mut self.data[c * self.n_r..(c + 1) * self.n_r]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.dr * self.data.iter().map(|a| a.norm_sqr()).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn inner(&self, other: &Self) -> C64 {
        inner(&self.data, &other.data, self.dr)
    }

    /// Population `dr Σ_j |ψ_{c,j}|²` of each channel.
    pub fn populations(&self) -> [f64; N_CHANNELS] {
        let mut p = [0.0; N_CHANNELS];
        for (c, pc) in p.iter_mut().enumerate() {
            *pc = self.dr * self.channel(c).iter().map(|a| a.norm_sqr()).sum::<f64>();
        }
        p
    }

    /// Overlap of one channel with a motional wavefunction.
    pub fn channel_overlap(&self, c: usize, motion: &Wavefunction1D) -> C64 {
        inner(&motion.amplitudes, self.channel(c), self.dr)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|a| a.re.is_finite() && a.im.is_finite())
    }
}

/// Weighted inner product `dr Σ conj(a) b`.
pub fn inner(a: &[C64], b: &[C64], dr: f64) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>() * dr
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_ordering() {
        assert_eq!(channel(Level::Q0, Level::Q0), 0);
        assert_eq!(channel(Level::Q1, Level::Q1), 5);
        assert_eq!(channel(Level::R, Level::R), 15);
        assert_eq!(channel(Level::I, Level::Q1), 9);
        for c in 0..N_CHANNELS {
            let (a, b) = channel_levels(c);
            assert_eq!(channel(a, b), c);
        }
        assert_eq!(channel_label(14), "ri");
        let reg: Vec<String> = REGISTER_CHANNELS.iter().map(|&c| channel_label(c)).collect();
        assert_eq!(reg, ["00", "01", "10", "11"]);
    }
}
