//! Count-sketches of Kronecker products, applied in the Fourier domain.
//!
//! With per-mode hashes combined additively modulo `L`, the sketch of a
//! Kronecker column `q_{N-1} (x) .. (x) q_0` is the circular convolution of
//! the per-mode sketches `C_k q_k`, so its DFT is the elementwise product
//! of their DFTs. Products with the sketched operator then cost
//! `O(L prod R_k)` and never form the `prod I_k` Kronecker rows.

use std::sync::Arc;

use nalgebra::DMatrix;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::count_sketch::CountSketchOp;
use super::operator::LinearOperator;
use crate::error::{mismatch, Result, TuckerError};

/// `T (Q_{N-1} (x) .. (x) Q_0)` for a [`CountSketchOp::tensor`] sketch `T`
/// over dims `(I_0, .., I_{N-1})`, as an implicit `L x prod R_k` operator.
/// Column index `a_0 + R_0 a_1 + ..` (first mode fastest).
pub struct KroneckerSketch {
    len: usize,
    ranks: Vec<usize>,
    /// Per mode, the `L x R_k` spectra stored row-major (one frequency per row).
    spectra: Vec<Vec<Complex64>>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl KroneckerSketch {
    /// `mats[k]` is the `I_k x R_k` factor of mode `k`.
    pub fn new(op: &CountSketchOp, mats: &[&DMatrix<f64>]) -> Result<Self> {
        let modes = op.mode_hashes();
        if modes.is_empty() {
            return Err(TuckerError::InvalidParameter("Kronecker sketch needs a per-mode count-sketch".into()));
        }
        if modes.len() != mats.len() {
            return Err(mismatch(format!("sketch has {} modes, got {} factors", modes.len(), mats.len())));
        }
        let len = op.sketch_dim();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(len);
        let ifft = planner.plan_fft_inverse(len);
        let mut spectra = Vec::with_capacity(mats.len());
        for (k, ((hash, signs), m)) in modes.iter().zip(mats).enumerate() {
            if m.nrows() != hash.len() {
                return Err(mismatch(format!("mode {k}: sketch over {} rows, factor has {}", hash.len(), m.nrows())));
            }
            let r = m.ncols();
            let mut spec = vec![Complex64::default(); len * r];
            let mut col = vec![Complex64::default(); len];
            for a in 0..r {
                col.fill(Complex64::default());
                for (i, (&h, &s)) in hash.iter().zip(signs).enumerate() {
                    col[h].re += s * m[(i, a)];
                }
                fft.process(&mut col);
                for (w, &v) in col.iter().enumerate() {
                    spec[w * r + a] = v;
                }
            }
            spectra.push(spec);
        }
        Ok(Self { len, ranks: mats.iter().map(|m| m.ncols()).collect(), spectra, fft, ifft })
    }

    pub fn sketch_dim(&self) -> usize {
        self.len
    }

    pub fn unknowns(&self) -> usize {
        self.ranks.iter().product()
    }

    /// `T B s`.
    pub fn apply(&self, s: &[f64]) -> Vec<f64> {
        assert_eq!(s.len(), self.unknowns(), "coefficient length");
        let n = self.ranks.len();
        let mut spectrum = vec![Complex64::default(); self.len];
        let mut buf = vec![Complex64::default(); s.len()];
        let mut next = vec![Complex64::default(); s.len()];
        // Real input: only frequencies up to L/2 are computed, the rest are
        // their conjugates.
        let half = self.len / 2;
        for (w, out) in spectrum.iter_mut().enumerate().take(half + 1) {
            // Contract the slowest (last) mode first, working towards mode 0.
            let r_last = self.ranks[n - 1];
            let f = &self.spectra[n - 1][w * r_last..(w + 1) * r_last];
            let mut m = s.len() / r_last;
            buf[..m].fill(Complex64::default());
            for (a, &fa) in f.iter().enumerate() {
                for (acc, &v) in buf[..m].iter_mut().zip(&s[a * m..(a + 1) * m]) {
                    *acc += fa * v;
                }
            }
            for k in (0..n - 1).rev() {
                let r = self.ranks[k];
                let f = &self.spectra[k][w * r..(w + 1) * r];
                let m_next = m / r;
                next[..m_next].fill(Complex64::default());
                for (a, &fa) in f.iter().enumerate() {
                    for (acc, &v) in next[..m_next].iter_mut().zip(&buf[a * m_next..(a + 1) * m_next]) {
                        *acc += fa * v;
                    }
                }
                std::mem::swap(&mut buf, &mut next);
                m = m_next;
            }
            *out = buf[0];
        }
        for w in half + 1..self.len {
            spectrum[w] = spectrum[self.len - w].conj();
        }
        self.ifft.process(&mut spectrum);
        let scale = 1.0 / self.len as f64;
        spectrum.iter().map(|c| c.re * scale).collect()
    }

    /// `(T B)^T y`.
    pub fn apply_t(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.len, "sketch length");
        let mut spectrum: Vec<Complex64> = y.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft.process(&mut spectrum);
        // <T B e_a, y> = Re sum_w conj(prod_k F_k[w, a_k]) Y[w] / L.
        let total = self.unknowns();
        let scale = 1.0 / self.len as f64;
        let mut acc = vec![0.0; total];
        let mut buf = vec![Complex64::default(); total];
        let mut next = vec![Complex64::default(); total];
        // Frequencies w and L - w contribute equal real parts.
        let half = self.len / 2;
        for (w, &yw) in spectrum.iter().enumerate().take(half + 1) {
            let paired = w != 0 && 2 * w != self.len;
            buf[0] = yw * if paired { 2.0 * scale } else { scale };
            let mut m = 1;
            for (k, &r) in self.ranks.iter().enumerate() {
                let f = &self.spectra[k][w * r..(w + 1) * r];
                for (a, fa) in f.iter().enumerate() {
                    let fa = fa.conj();
                    for (dst, &v) in next[a * m..(a + 1) * m].iter_mut().zip(&buf[..m]) {
                        *dst = v * fa;
                    }
                }
                m *= r;
                std::mem::swap(&mut buf, &mut next);
            }
            for (a, v) in acc.iter_mut().zip(&buf[..m]) {
                *a += v.re;
            }
        }
        acc
    }

    /// The explicit `L x prod R_k` matrix.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        let cols = self.unknowns();
        let mut out = DMatrix::zeros(self.len, cols);
        let mut e = vec![0.0; cols];
        for c in 0..cols {
            e[c] = 1.0;
            out.set_column(c, &nalgebra::DVector::from_vec(self.apply(&e)));
            e[c] = 0.0;
        }
        out
    }
}

impl LinearOperator for KroneckerSketch {
    fn nrows(&self) -> usize {
        self.len
    }

    fn ncols(&self) -> usize {
        self.unknowns()
    }

    fn mul(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.len, m.ncols());
        for (c, col) in m.column_iter().enumerate() {
            let v: Vec<f64> = col.iter().copied().collect();
            out.set_column(c, &nalgebra::DVector::from_vec(self.apply(&v)));
        }
        out
    }

    fn mul_t(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.unknowns(), m.ncols());
        for (c, col) in m.column_iter().enumerate() {
            let v: Vec<f64> = col.iter().copied().collect();
            out.set_column(c, &nalgebra::DVector::from_vec(self.apply_t(&v)));
        }
        out
    }
}
