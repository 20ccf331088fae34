//! Dense statevector used as the exact oracle backend.
//!
//! Qubit `0` is the most significant bit of the basis index, so the basis
//! state `|q0 q1 … q(n-1)⟩` lives at index `q0·2^(n-1) + … + q(n-1)`.

use num_complex::Complex64;
use rand::Rng;

use super::SimRng;

pub type Matrix2 = [[Complex64; 2]; 2];

pub fn hadamard_matrix() -> Matrix2 {
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [[h, h], [h, -h]]
}

pub fn identity_matrix() -> Matrix2 {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    [[one, zero], [zero, one]]
}

/// Largest deviation of `m† m` from the identity.
pub fn unitarity_defect(m: &Matrix2) -> f64 {
    let mut worst: f64 = 0.0;
    for r in 0..2 {
        for c in 0..2 {
            let dot = m[0][r].conj() * m[0][c] + m[1][r].conj() * m[1][c];
            let target = if r == c { 1.0 } else { 0.0 };
            worst = worst.max((dot - Complex64::new(target, 0.0)).norm());
        }
    }
    worst
}

pub fn is_diagonal(m: &Matrix2) -> bool {
    m[0][1].norm() < 1e-12 && m[1][0].norm() < 1e-12
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `(|0…0⟩ + |1…1⟩)/√2` on `qubits` qubits.
    pub fn ghz(qubits: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << qubits];
        let a = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        amps[0] = a;
        amps[(1 << qubits) - 1] = a;
        StateVector { qubits, amps }
    }

    /// Computational basis state with every qubit equal to `bit`.
    pub fn uniform_basis(qubits: usize, bit: u8) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << qubits];
        let idx = if bit == 0 { 0 } else { (1 << qubits) - 1 };
        amps[idx] = Complex64::new(1.0, 0.0);
        StateVector { qubits, amps }
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn mask(&self, qubit: usize) -> usize {
        1 << (self.qubits - 1 - qubit)
    }

    /// Appends a fresh `|0⟩` qubit as the new least significant bit.
    pub fn push_zero_qubit(&mut self) -> usize {
        let zero = Complex64::new(0.0, 0.0);
        let mut amps = vec![zero; self.amps.len() * 2];
        for (i, a) in self.amps.iter().enumerate() {
            amps[2 * i] = *a;
        }
        self.amps = amps;
        self.qubits += 1;
        self.qubits - 1
    }

    pub fn apply_1q(&mut self, qubit: usize, m: &Matrix2) {
        let mask = self.mask(qubit);
        for i in 0..self.amps.len() {
            if i & mask == 0 {
                let a0 = self.amps[i];
                let a1 = self.amps[i | mask];
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[i | mask] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) {
        let cm = self.mask(control);
        let tm = self.mask(target);
        for i in 0..self.amps.len() {
            if i & cm != 0 && i & tm == 0 {
                self.amps.swap(i, i | tm);
            }
        }
    }

    /// Probability that `qubit` reads `1` in the computational basis.
    pub fn prob_one(&self, qubit: usize) -> f64 {
        let mask = self.mask(qubit);
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Projective computational-basis measurement with renormalisation.
    pub fn measure(&mut self, qubit: usize, rng: &mut SimRng) -> u8 {
        let p1 = self.prob_one(qubit).clamp(0.0, 1.0);
        let bit = u8::from(rng.random::<f64>() < p1);
        self.collapse(qubit, bit);
        bit
    }

    fn collapse(&mut self, qubit: usize, bit: u8) {
        let mask = self.mask(qubit);
        let keep = |i: usize| (i & mask != 0) == (bit == 1);
        let mut norm = 0.0;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if keep(i) {
                norm += a.norm_sqr();
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        let scale = 1.0 / norm.sqrt();
        for a in self.amps.iter_mut() {
            *a *= scale;
        }
    }

    /// Joint outcome distribution of the first `leading` qubits, marginalised
    /// over the rest. Index uses the same big-endian convention.
    pub fn leading_distribution(&self, leading: usize) -> Vec<f64> {
        let shift = self.qubits - leading;
        let mut out = vec![0.0; 1 << leading];
        for (i, a) in self.amps.iter().enumerate() {
            out[i >> shift] += a.norm_sqr();
        }
        out
    }

    /// Nonzero amplitudes as `(index, re, im)` triples.
    pub fn export(&self) -> Vec<(usize, f64, f64)> {
        self.amps
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm_sqr() > 0.0)
            .map(|(i, a)| (i, a.re, a.im))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn ghz_amplitudes() {
        let s = StateVector::ghz(3);
        let exported = s.export();
        assert_eq!(exported.len(), 2);
        assert_eq!(exported[0].0, 0b000);
        assert_eq!(exported[1].0, 0b111);
        assert!((exported[0].1 - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn measuring_one_qubit_leaves_correlated_pair() {
        let mut rng = SimRng::seed_from_u64(5);
        for _ in 0..32 {
            let mut s = StateVector::ghz(3);
            let b = s.measure(0, &mut rng);
            let idx = if b == 0 { 0 } else { 0b111 };
            assert!((s.amplitudes()[idx].norm_sqr() - 1.0).abs() < 1e-12);
            assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn hadamard_then_measure_on_ghz2() {
        // H on qubit 0 of (|00⟩+|11⟩)/√2 gives (|00⟩+|01⟩+|10⟩-|11⟩)/2
        let mut s = StateVector::ghz(2);
        s.apply_1q(0, &hadamard_matrix());
        assert!((s.prob_one(0) - 0.5).abs() < 1e-12);
        let mut zero_branch = s.clone();
        zero_branch.collapse(0, 0);
        let a = zero_branch.amplitudes();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((a[0b00].re - h).abs() < 1e-12);
        assert!((a[0b01].re - h).abs() < 1e-12);
    }

    #[test]
    fn ancilla_and_cnot_copy_branch() {
        let mut s = StateVector::ghz(2);
        let anc = s.push_zero_qubit();
        s.apply_cnot(0, anc);
        let e = s.export();
        assert_eq!(
            e.iter().map(|t| t.0).collect::<Vec<_>>(),
            vec![0b000, 0b111]
        );
    }

    #[test]
    fn unitarity() {
        assert!(unitarity_defect(&hadamard_matrix()) < 1e-12);
        let mut m = identity_matrix();
        m[0][1] = Complex64::new(0.5, 0.0);
        assert!(unitarity_defect(&m) > 0.1);
    }
}
