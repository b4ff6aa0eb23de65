//! Dense statevector utilities.
//!
//! Amplitude indexing is big-endian over qubit labels: qubit 0 is the most
//! significant bit, so basis string `x_0 x_1 ... x_{n-1}` sits at index
//! `sum_q x_q << (n-1-q)`. All file formats and tensors follow the same
//! convention.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{domain, Result};

pub type C64 = Complex64;

/// Relative cutoff below which singular values count as zero.
pub const SVD_RANK_TOL: f64 = 1e-10;

/// Magnitude below which an amplitude is ignored when fixing global phase.
pub const PHASE_TOL: f64 = 1e-12;

pub fn num_qubits(len: usize) -> Result<usize> {
    if len == 0 || !len.is_power_of_two() {
        return Err(domain(format!(
            "statevector length {len} is not a power of two"
        )));
    }
    Ok(len.trailing_zeros() as usize)
}

pub fn norm(psi: &[C64]) -> f64 {
    psi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// ⟨a|b⟩ with the conjugate on the first argument.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    assert_eq!(a.len(), b.len(), "inner: length mismatch");
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// |⟨a|b⟩| after normalizing both vectors.
pub fn fidelity(a: &[C64], b: &[C64]) -> f64 {
    let na = norm(a);
    let nb = norm(b);
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    inner(a, b).norm() / (na * nb)
}

/// Multiply by the phase that makes the first amplitude above [`PHASE_TOL`]
/// real positive.
pub fn canonicalize_phase(v: &mut [C64]) {
    if let Some(first) = v.iter().find(|c| c.norm() > PHASE_TOL) {
        let phase = first / first.norm();
        let correction = phase.conj();
        for c in v.iter_mut() {
            *c *= correction;
        }
    }
}

/// Basis index of the bit assignment `bits[q]` for qubit `q`.
pub fn basis_index(bits: &[u8]) -> usize {
    bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize)
}

/// Bit of qubit `q` within basis index `idx` of an `n`-qubit register.
pub fn bit_of(idx: usize, n: usize, q: usize) -> u8 {
    ((idx >> (n - 1 - q)) & 1) as u8
}

/// Reshape |psi⟩ into a matrix whose row index runs over the qubits in
/// `row_qubits` (big-endian in the given order) and whose column index runs
/// over the remaining qubits ascending.
pub fn matricize(psi: &[C64], n: usize, row_qubits: &[usize]) -> DMatrix<C64> {
    assert_eq!(psi.len(), 1 << n, "statevector length mismatch");
    let cols_qubits: Vec<usize> = (0..n).filter(|q| !row_qubits.contains(q)).collect();
    let rows = 1usize << row_qubits.len();
    let cols = 1usize << cols_qubits.len();
    let mut m = DMatrix::zeros(rows, cols);
    for (idx, &amp) in psi.iter().enumerate() {
        let mut r = 0usize;
        for &q in row_qubits {
            r = (r << 1) | bit_of(idx, n, q) as usize;
        }
        let mut c = 0usize;
        for &q in &cols_qubits {
            c = (c << 1) | bit_of(idx, n, q) as usize;
        }
        m[(r, c)] = amp;
    }
    m
}

/// Inverse of [`matricize`]: scatter matrix entries back into a statevector.
pub fn dematricize(m: &DMatrix<C64>, n: usize, row_qubits: &[usize]) -> Vec<C64> {
    let cols_qubits: Vec<usize> = (0..n).filter(|q| !row_qubits.contains(q)).collect();
    let mut psi = vec![C64::new(0.0, 0.0); 1 << n];
    for (idx, amp) in psi.iter_mut().enumerate() {
        let mut r = 0usize;
        for &q in row_qubits {
            r = (r << 1) | bit_of(idx, n, q) as usize;
        }
        let mut c = 0usize;
        for &q in &cols_qubits {
            c = (c << 1) | bit_of(idx, n, q) as usize;
        }
        *amp = m[(r, c)];
    }
    psi
}

/// Schmidt decomposition of |psi⟩ across (`part`, complement).
///
/// `values` are the nonzero Schmidt coefficients, descending. `left` holds
/// the orthonormal frame on `part` (one column per coefficient, phases
/// canonicalized); `right` the matching orthonormal frame on the complement,
/// so that psi = Σ_i values[i] · left_i ⊗ right_i.
pub struct Schmidt {
    pub values: Vec<f64>,
    pub left: DMatrix<C64>,
    pub right: DMatrix<C64>,
}

impl Schmidt {
    pub fn rank(&self) -> usize {
        self.values.len()
    }

    /// Base-2 von Neumann entropy of the squared coefficients.
    pub fn entropy(&self) -> f64 {
        let total: f64 = self.values.iter().map(|v| v * v).sum();
        self.values
            .iter()
            .map(|v| {
                let p = v * v / total;
                if p > 0.0 {
                    -p * p.log2()
                } else {
                    0.0
                }
            })
            .sum()
    }
}

/// Compute the Schmidt decomposition across (`part` ascending, complement).
pub fn schmidt(psi: &[C64], n: usize, part: &[usize]) -> Result<Schmidt> {
    if part.is_empty() || part.len() >= n {
        return Err(domain(format!(
            "schmidt decomposition needs a nonempty proper subset, got |A|={} of n={n}",
            part.len()
        )));
    }
    let mut sorted = part.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != part.len() {
        return Err(domain("schmidt part contains duplicates".to_string()));
    }
    if *sorted.last().unwrap() >= n {
        return Err(domain(format!(
            "schmidt part vertex {} out of range",
            sorted.last().unwrap()
        )));
    }
    let m = matricize(psi, n, &sorted);
    let svd = m.svd(true, true);
    let u = svd.u.expect("svd with u");
    let vt = svd.v_t.expect("svd with v_t");
    let s = svd.singular_values;
    let smax = s.iter().cloned().fold(0.0f64, f64::max);
    let rank = s.iter().filter(|&&x| x > SVD_RANK_TOL * smax).count();
    let rank = rank.max(usize::from(smax > 0.0)).min(s.len());

    let mut left = DMatrix::zeros(u.nrows(), rank);
    let mut right = DMatrix::zeros(vt.ncols(), rank);
    let mut values = Vec::with_capacity(rank);
    for i in 0..rank {
        values.push(s[i]);
        let mut col: Vec<C64> = (0..u.nrows()).map(|r| u[(r, i)]).collect();
        // Keep left ⊗ right invariant: the phase pulled out of the left
        // column is pushed into the right one.
        let phase = col
            .iter()
            .find(|c| c.norm() > PHASE_TOL)
            .map(|c| c / c.norm())
            .unwrap_or(C64::new(1.0, 0.0));
        for c in col.iter_mut() {
            *c *= phase.conj();
        }
        for (r, &c) in col.iter().enumerate() {
            left[(r, i)] = c;
        }
        for cidx in 0..vt.ncols() {
            right[(cidx, i)] = vt[(i, cidx)] * phase;
        }
    }
    Ok(Schmidt {
        values,
        left,
        right,
    })
}

/// Nonzero Schmidt coefficients only (descending), skipping the frames.
pub fn schmidt_values(psi: &[C64], n: usize, part: &[usize]) -> Result<Vec<f64>> {
    if part.is_empty() || part.len() >= n {
        return Err(domain(format!(
            "schmidt decomposition needs a nonempty proper subset, got |A|={} of n={n}",
            part.len()
        )));
    }
    let mut sorted = part.to_vec();
    sorted.sort_unstable();
    let m = matricize(psi, n, &sorted);
    let s = m.singular_values();
    let smax = s.iter().cloned().fold(0.0f64, f64::max);
    let mut out: Vec<f64> = s
        .iter()
        .copied()
        .filter(|&x| x > SVD_RANK_TOL * smax && smax > 0.0)
        .collect();
    out.sort_by(|a, b| b.partial_cmp(a).expect("finite singular values"));
    Ok(out)
}

/// Base-2 von Neumann entropy from a Schmidt value list.
pub fn entropy_of_values(values: &[f64]) -> f64 {
    let total: f64 = values.iter().map(|v| v * v).sum();
    values
        .iter()
        .map(|v| {
            let p = v * v / total;
            if p > 0.0 {
                -p * p.log2()
            } else {
                0.0
            }
        })
        .sum()
}

/// Apply a single-qubit operator to qubit `q`.
pub fn apply_single_qubit(psi: &[C64], n: usize, q: usize, op: &[[C64; 2]; 2]) -> Vec<C64> {
    assert_eq!(psi.len(), 1 << n);
    assert!(q < n);
    let stride = 1usize << (n - 1 - q);
    let mut out = vec![C64::new(0.0, 0.0); psi.len()];
    for (idx, value) in out.iter_mut().enumerate() {
        let bit = (idx / stride) & 1;
        let base = idx - bit * stride;
        *value = op[bit][0] * psi[base] + op[bit][1] * psi[base + stride];
    }
    out
}

/// Contract a bra ⟨phi| (length 2) against qubit `q`, returning the reduced
/// vector on the remaining `n-1` qubits (label order preserved).
pub fn project_out_qubit(psi: &[C64], n: usize, q: usize, bra: &[C64; 2]) -> Vec<C64> {
    assert_eq!(psi.len(), 1 << n);
    assert!(q < n);
    let stride = 1usize << (n - 1 - q);
    let mut out = vec![C64::new(0.0, 0.0); psi.len() / 2];
    for (ridx, amp) in out.iter_mut().enumerate() {
        let high = ridx / stride;
        let low = ridx % stride;
        let base = (high << (n - q)) | low;
        *amp = bra[0].conj() * psi[base] + bra[1].conj() * psi[base + stride];
    }
    out
}

/// Contract a bra over a subset of qubits: returns ⟨bra|_Q |psi⟩ as a vector
/// on the remaining qubits (ascending label order preserved).
///
/// `qubits` must be ascending; `bra` has length `2^|qubits|`, indexed
/// big-endian over `qubits`.
pub fn project_out_subset(psi: &[C64], n: usize, qubits: &[usize], bra: &[C64]) -> Vec<C64> {
    assert_eq!(psi.len(), 1 << n);
    assert_eq!(bra.len(), 1 << qubits.len());
    debug_assert!(qubits.windows(2).all(|w| w[0] < w[1]));
    let rest: Vec<usize> = (0..n).filter(|q| !qubits.contains(q)).collect();
    let mut out = vec![C64::new(0.0, 0.0); 1 << rest.len()];
    for (idx, &amp) in psi.iter().enumerate() {
        let mut b = 0usize;
        for &q in qubits {
            b = (b << 1) | bit_of(idx, n, q) as usize;
        }
        let mut r = 0usize;
        for &q in &rest {
            r = (r << 1) | bit_of(idx, n, q) as usize;
        }
        out[r] += bra[b].conj() * amp;
    }
    out
}

/// Standard normal sample via Box-Muller.
fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Haar-ish random state: i.i.d. complex Gaussian amplitudes, normalized.
pub fn random_state(n: usize, rng: &mut impl Rng) -> Vec<C64> {
    let mut psi: Vec<C64> = (0..1usize << n)
        .map(|_| C64::new(gaussian(rng), gaussian(rng)))
        .collect();
    let nrm = norm(&psi);
    for c in psi.iter_mut() {
        *c /= nrm;
    }
    psi
}

/// Random single-qubit unitary (Gram-Schmidt on Gaussian columns).
pub fn random_unitary_2x2(rng: &mut impl Rng) -> [[C64; 2]; 2] {
    let gauss = gaussian::<_>;
    let mut a = [
        C64::new(gauss(rng), gauss(rng)),
        C64::new(gauss(rng), gauss(rng)),
    ];
    let na = (a[0].norm_sqr() + a[1].norm_sqr()).sqrt();
    a[0] /= na;
    a[1] /= na;
    let mut b = [
        C64::new(gauss(rng), gauss(rng)),
        C64::new(gauss(rng), gauss(rng)),
    ];
    let proj = a[0].conj() * b[0] + a[1].conj() * b[1];
    b[0] -= proj * a[0];
    b[1] -= proj * a[1];
    let nb = (b[0].norm_sqr() + b[1].norm_sqr()).sqrt();
    b[0] /= nb;
    b[1] /= nb;
    [[a[0], b[0]], [a[1], b[1]]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn bell() -> Vec<C64> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        vec![
            C64::new(s, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(s, 0.0),
        ]
    }

    #[test]
    fn bell_schmidt() {
        let d = schmidt(&bell(), 2, &[0]).unwrap();
        assert_eq!(d.rank(), 2);
        assert_abs_diff_eq!(d.values[0], std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
        assert_abs_diff_eq!(d.entropy(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn schmidt_reconstructs_state() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for n in 2..=5 {
            let psi = random_state(n, &mut rng);
            for part_bits in 1..(1usize << n) - 1 {
                if part_bits.count_ones() > 2 {
                    continue;
                }
                let part: Vec<usize> = (0..n).filter(|q| (part_bits >> q) & 1 == 1).collect();
                let d = schmidt(&psi, n, &part).unwrap();
                // rebuild: psi' = sum_i s_i left_i ⊗ right_i, scattered back
                let comp: Vec<usize> = (0..n).filter(|q| !part.contains(q)).collect();
                let mut rebuilt = vec![C64::new(0.0, 0.0); 1 << n];
                for i in 0..d.rank() {
                    for r in 0..d.left.nrows() {
                        for c in 0..d.right.nrows() {
                            let mut idx = 0usize;
                            for (pos, &q) in part.iter().enumerate() {
                                let bit = (r >> (part.len() - 1 - pos)) & 1;
                                idx |= bit << (n - 1 - q);
                            }
                            for (pos, &q) in comp.iter().enumerate() {
                                let bit = (c >> (comp.len() - 1 - pos)) & 1;
                                idx |= bit << (n - 1 - q);
                            }
                            rebuilt[idx] += d.values[i] * d.left[(r, i)] * d.right[(c, i)];
                        }
                    }
                }
                assert!(
                    fidelity(&psi, &rebuilt) > 1.0 - 1e-12,
                    "n={n}, part={part:?}"
                );
            }
        }
    }

    #[test]
    fn matricize_round_trip() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let psi = random_state(4, &mut rng);
        for part in [vec![0], vec![2, 3], vec![1, 3]] {
            let m = matricize(&psi, 4, &part);
            let back = dematricize(&m, 4, &part);
            assert_eq!(psi.len(), back.len());
            for (a, b) in psi.iter().zip(&back) {
                assert_abs_diff_eq!(a.re, b.re, epsilon = 0.0);
                assert_abs_diff_eq!(a.im, b.im, epsilon = 0.0);
            }
        }
    }

    #[test]
    fn apply_z_flips_one_amplitude_sign() {
        let z = [
            [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            [C64::new(0.0, 0.0), C64::new(-1.0, 0.0)],
        ];
        let psi = bell();
        let out = apply_single_qubit(&psi, 2, 0, &z);
        assert_abs_diff_eq!(out[0].re, psi[0].re, epsilon = 1e-15);
        assert_abs_diff_eq!(out[3].re, -psi[3].re, epsilon = 1e-15);
    }

    #[test]
    fn project_out_qubit_reduces() {
        // Projecting qubit 0 of the Bell state onto ⟨0| leaves |0⟩/√2.
        let bra = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let out = project_out_qubit(&bell(), 2, 0, &bra);
        assert_eq!(out.len(), 2);
        assert_abs_diff_eq!(out[0].re, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(out[1].norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..20 {
            let u = random_unitary_2x2(&mut rng);
            let dot00 = u[0][0].conj() * u[0][0] + u[1][0].conj() * u[1][0];
            let dot01 = u[0][0].conj() * u[0][1] + u[1][0].conj() * u[1][1];
            let dot11 = u[0][1].conj() * u[0][1] + u[1][1].conj() * u[1][1];
            assert_abs_diff_eq!(dot00.re, 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(dot11.re, 1.0, epsilon = 1e-12);
            assert!(dot01.norm() < 1e-12);
        }
    }

    #[test]
    fn singular_values_sorted_descending() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let psi = random_state(5, &mut rng);
        let d = schmidt(&psi, 5, &[0, 2]).unwrap();
        for w in d.values.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }
}
