use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest register the dense simulator will allocate.
pub const MAX_QUBITS: usize = 24;

/// Product state used to initialise a register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    /// |0⟩ on every qubit.
    AllZero,
    /// |+⟩ on every qubit.
    AllPlus,
}

/// Dense statevector over `n_qubits` qubits.
///
/// Qubit `q` corresponds to bit `q` of the amplitude index, so qubit 0 is the
/// least-significant bit.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn new(n_qubits: usize, basis: Basis) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        let amps = match basis {
            Basis::AllZero => {
                let mut v = vec![Complex64::new(0.0, 0.0); dim];
                v[0] = Complex64::new(1.0, 0.0);
                v
            }
            Basis::AllPlus => {
                let a = (dim as f64).sqrt().recip();
                vec![Complex64::new(a, 0.0); dim]
            }
        };
        Ok(Self { n_qubits, amps })
    }

    /// Wraps raw amplitudes. The vector is not renormalised.
    pub fn from_amplitudes(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        check_qubits(n_qubits)?;
        if amps.len() != 1usize << n_qubits {
            return Err(Error::shape(
                "StateVector::from_amplitudes",
                format!("{} amplitudes for {} qubits", amps.len(), n_qubits),
            ));
        }
        Ok(Self { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Applies the 2×2 matrix `[[m00, m01], [m10, m11]]` to qubit `q`.
    pub(crate) fn apply_single(&mut self, q: usize, m: [[Complex64; 2]; 2]) {
        let stride = 1usize << q;
        let dim = self.amps.len();
        let mut base = 0;
        while base < dim {
            for i in base..base + stride {
                let j = i + stride;
                let a = self.amps[i];
                let b = self.amps[j];
                self.amps[i] = m[0][0] * a + m[0][1] * b;
                self.amps[j] = m[1][0] * a + m[1][1] * b;
            }
            base += 2 * stride;
        }
    }

    /// Real-valued 2×2 update, used by R_y where all entries are real.
    pub(crate) fn apply_single_real(&mut self, q: usize, m: [[f64; 2]; 2]) {
        let stride = 1usize << q;
        let dim = self.amps.len();
        let mut base = 0;
        while base < dim {
            for i in base..base + stride {
                let j = i + stride;
                let a = self.amps[i];
                let b = self.amps[j];
                self.amps[i] = a * m[0][0] + b * m[0][1];
                self.amps[j] = a * m[1][0] + b * m[1][1];
            }
            base += 2 * stride;
        }
    }

    /// Diagonal update `diag(d0, d1)` on qubit `q`.
    pub(crate) fn apply_diag(&mut self, q: usize, d0: Complex64, d1: Complex64) {
        let mask = 1usize << q;
        for (i, a) in self.amps.iter_mut().enumerate() {
            *a *= if i & mask == 0 { d0 } else { d1 };
        }
    }

    pub(crate) fn apply_cnot_unchecked(&mut self, control: usize, target: usize) {
        let cmask = 1usize << control;
        let tmask = 1usize << target;
        for i in 0..self.amps.len() {
            if i & cmask != 0 && i & tmask == 0 {
                self.amps.swap(i, i | tmask);
            }
        }
    }

    pub(crate) fn apply_x_unchecked(&mut self, q: usize) {
        let mask = 1usize << q;
        for i in 0..self.amps.len() {
            if i & mask == 0 {
                self.amps.swap(i, i | mask);
            }
        }
    }

    pub(crate) fn apply_y_unchecked(&mut self, q: usize) {
        // Y|0⟩ = i|1⟩, Y|1⟩ = −i|0⟩
        let mask = 1usize << q;
        let i_unit = Complex64::new(0.0, 1.0);
        for i in 0..self.amps.len() {
            if i & mask == 0 {
                let j = i | mask;
                let a = self.amps[i];
                let b = self.amps[j];
                self.amps[i] = -i_unit * b;
                self.amps[j] = i_unit * a;
            }
        }
    }

    pub(crate) fn apply_z_unchecked(&mut self, q: usize) {
        let mask = 1usize << q;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & mask != 0 {
                *a = -*a;
            }
        }
    }

    pub(crate) fn scale_add(&mut self, alpha: f64, other: &StateVector) {
        for (a, b) in self.amps.iter_mut().zip(&other.amps) {
            *a += b * alpha;
        }
    }

    pub(crate) fn zeros_like(&self) -> StateVector {
        StateVector {
            n_qubits: self.n_qubits,
            amps: vec![Complex64::new(0.0, 0.0); self.amps.len()],
        }
    }
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        Err(Error::QubitCount(n))
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(v: &StateVector) -> Vec<f64> {
        v.amplitudes().iter().map(|a| a.re).collect()
    }

    #[test]
    fn zero_and_plus_states() {
        assert_eq!(re(&StateVector::new(1, Basis::AllZero).unwrap()), vec![1.0, 0.0]);
        let plus = StateVector::new(1, Basis::AllPlus).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for a in re(&plus) {
            assert!((a - h).abs() < 1e-15);
        }
        assert_eq!(re(&StateVector::new(2, Basis::AllPlus).unwrap()), vec![0.5; 4]);
    }

    #[test]
    fn qubit_guard() {
        assert!(matches!(StateVector::new(0, Basis::AllZero), Err(Error::QubitCount(0))));
        assert!(StateVector::new(MAX_QUBITS + 1, Basis::AllZero).is_err());
    }

    #[test]
    fn from_amplitudes_checks_length() {
        let amps = vec![Complex64::new(1.0, 0.0); 3];
        assert!(StateVector::from_amplitudes(2, amps).is_err());
    }
}
