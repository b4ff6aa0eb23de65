//! Symplectic Pauli and stabilizer machinery for graph states.
//!
//! A Pauli operator is stored as `i^phase · Π_q X_q^{x_q} Z_q^{z_q}` with the
//! X factor left of the Z factor on every qubit; the phase exponent is
//! tracked exactly under multiplication, since sign slips here surface as
//! wrong tensor entries much later. All Schmidt data of a graph state across
//! a bipartition (A, B) comes from the subgroup S_A of stabilizer elements
//! acting trivially outside A: the reduced state is a uniform mixture over
//! `r = 2^{|A|}/|S_A|` orthogonal stabilizer eigenvectors.

use num_complex::Complex64;

use crate::dense::{canonicalize_phase, C64};
use crate::error::{domain, size, Result};
use crate::gf2::{rank_of_rows, BitVec, Gf2Matrix};
use crate::graph::Graph;

/// Default qubit ceiling for dense statevector conversion.
pub const DEFAULT_DENSE_LIMIT: usize = 20;

const I_POWERS: [C64; 4] = [
    C64::new(1.0, 0.0),
    C64::new(0.0, 1.0),
    C64::new(-1.0, 0.0),
    C64::new(0.0, -1.0),
];

/// n-qubit Pauli operator `i^phase · Π_q X^{x[q]} Z^{z[q]}`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PauliOperator {
    n: usize,
    x: BitVec,
    z: BitVec,
    /// Exponent of i, mod 4.
    phase: u8,
}

impl PauliOperator {
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            x: BitVec::zeros(n),
            z: BitVec::zeros(n),
            phase: 0,
        }
    }

    pub fn from_bits(x: BitVec, z: BitVec, phase: u8) -> Self {
        assert_eq!(x.len(), z.len());
        Self {
            n: x.len(),
            x,
            z,
            phase: phase & 3,
        }
    }

    pub fn qubit_count(&self) -> usize {
        self.n
    }

    pub fn x_bit(&self, q: usize) -> bool {
        self.x.get(q)
    }

    pub fn z_bit(&self, q: usize) -> bool {
        self.z.get(q)
    }

    pub fn phase_exponent(&self) -> u8 {
        self.phase
    }

    pub fn phase_factor(&self) -> C64 {
        I_POWERS[self.phase as usize]
    }

    /// Qubits on which the operator differs from the identity.
    pub fn support(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|&q| self.x.get(q) || self.z.get(q))
            .collect()
    }

    pub fn is_identity_bare(&self) -> bool {
        self.x.is_zero() && self.z.is_zero()
    }

    /// True when the operator acts as the identity on every qubit of `outside`.
    pub fn trivial_on(&self, outside: &[usize]) -> bool {
        outside.iter().all(|&q| !self.x.get(q) && !self.z.get(q))
    }

    /// Exact product. `X^a Z^b · X^c Z^d = (-1)^{bc} X^{a+c} Z^{b+d}`
    /// qubit-wise, so the phase picks up `2·(z_self · x_other)` quarter turns.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "pauli product: qubit count mismatch");
        let swaps = self.z.dot(&other.x);
        let mut x = self.x.clone();
        x.xor_assign(&other.x);
        let mut z = self.z.clone();
        z.xor_assign(&other.z);
        Self {
            n: self.n,
            x,
            z,
            phase: (self.phase + other.phase + if swaps { 2 } else { 0 }) & 3,
        }
    }

    /// Symplectic form: zero iff the two operators commute.
    pub fn commutes_with(&self, other: &Self) -> bool {
        self.x.dot(&other.z) == self.z.dot(&other.x)
    }

    /// Hermitian iff the phase parity matches the number of qubits carrying
    /// both an X and a Z factor (each XZ contributes a factor -i·Y).
    pub fn is_hermitian(&self) -> bool {
        let mut xz = self.x.clone();
        xz.and_assign(&self.z);
        (self.phase & 1) as usize == xz.count_ones() % 2
    }

    /// Restrict to `qubits` (ascending), which must cover the support.
    pub fn restrict(&self, qubits: &[usize]) -> Self {
        debug_assert!(qubits.windows(2).all(|w| w[0] < w[1]));
        let mut x = BitVec::zeros(qubits.len());
        let mut z = BitVec::zeros(qubits.len());
        for (i, &q) in qubits.iter().enumerate() {
            x.set(i, self.x.get(q));
            z.set(i, self.z.get(q));
        }
        debug_assert!(
            self.support().iter().all(|q| qubits.contains(q)),
            "restriction must cover the support"
        );
        Self {
            n: qubits.len(),
            x,
            z,
            phase: self.phase,
        }
    }

    /// Apply to a dense vector: `g|j⟩ = i^phase (-1)^{z·j} |j ⊕ x⟩`.
    pub fn apply_dense(&self, psi: &[C64]) -> Vec<C64> {
        assert_eq!(psi.len(), 1 << self.n);
        let x_idx: usize = (0..self.n)
            .filter(|&q| self.x.get(q))
            .map(|q| 1usize << (self.n - 1 - q))
            .sum();
        let front = self.phase_factor();
        let mut out = vec![C64::new(0.0, 0.0); psi.len()];
        for (j, &amp) in psi.iter().enumerate() {
            let mut sign_bits = 0u32;
            for q in 0..self.n {
                if self.z.get(q) {
                    sign_bits += ((j >> (self.n - 1 - q)) & 1) as u32;
                }
            }
            let sign = if sign_bits & 1 == 1 { -1.0 } else { 1.0 };
            out[j ^ x_idx] += front * sign * amp;
        }
        out
    }

    /// Symplectic (x|z) coordinates as one bit vector of length 2n.
    fn symplectic_bits(&self) -> BitVec {
        let mut v = BitVec::zeros(2 * self.n);
        for q in 0..self.n {
            v.set(q, self.x.get(q));
            v.set(self.n + q, self.z.get(q));
        }
        v
    }
}

impl std::fmt::Display for PauliOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}",
            match self.phase {
                0 => "+",
                1 => "+i",
                2 => "-",
                _ => "-i",
            }
        )?;
        for q in 0..self.n {
            let c = match (self.x.get(q), self.z.get(q)) {
                (false, false) => '.',
                (true, false) => 'X',
                (false, true) => 'Z',
                (true, true) => 'Y', // displayed as Y; the stored form is XZ
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Commuting, independent set of Hermitian Pauli generators.
#[derive(Clone, Debug)]
pub struct StabilizerGroup {
    n: usize,
    generators: Vec<PauliOperator>,
}

impl StabilizerGroup {
    /// Validate generators: pairwise commuting, independent over GF(2), and
    /// Hermitian. Independence of Hermitian commuting generators rules out
    /// -I in the generated group.
    pub fn new(n: usize, generators: Vec<PauliOperator>) -> Result<Self> {
        for g in &generators {
            if g.qubit_count() != n {
                return Err(domain(format!(
                    "generator on {} qubits in a group on {n}",
                    g.qubit_count()
                )));
            }
            if !g.is_hermitian() {
                return Err(domain(format!("generator {g} is not Hermitian")));
            }
        }
        for (i, a) in generators.iter().enumerate() {
            for b in generators.iter().skip(i + 1) {
                if !a.commutes_with(b) {
                    return Err(domain(format!("generators {a} and {b} anticommute")));
                }
            }
        }
        let mut rows: Vec<BitVec> = generators.iter().map(|g| g.symplectic_bits()).collect();
        if rank_of_rows(&mut rows) != generators.len() {
            return Err(domain(
                "generators are dependent over GF(2) (group is inconsistent or redundant)"
                    .to_string(),
            ));
        }
        Ok(Self { n, generators })
    }

    pub(crate) fn new_unchecked(n: usize, generators: Vec<PauliOperator>) -> Self {
        Self { n, generators }
    }

    pub fn qubit_count(&self) -> usize {
        self.n
    }

    pub fn generators(&self) -> &[PauliOperator] {
        &self.generators
    }

    /// Product Π generators[i]^{c_i} in ascending index order.
    pub fn element(&self, exponents: &BitVec) -> PauliOperator {
        assert_eq!(exponents.len(), self.generators.len());
        let mut acc = PauliOperator::identity(self.n);
        for i in exponents.ones() {
            acc = acc.mul(&self.generators[i]);
        }
        acc
    }

    /// Dense unit vector stabilized by all generators, global phase fixed by
    /// making the first nonzero amplitude real positive.
    ///
    /// Needs the full generator count (`len == n`) to pin a unique state.
    pub fn to_dense(&self) -> Result<Vec<C64>> {
        self.to_dense_limited(DEFAULT_DENSE_LIMIT)
    }

    pub fn to_dense_limited(&self, limit: usize) -> Result<Vec<C64>> {
        let m = self.n;
        if m > limit {
            return Err(size(format!(
                "dense conversion refused for {m} qubits > limit {limit}"
            )));
        }
        if self.generators.len() != m {
            return Err(domain(format!(
                "need {m} generators to fix a state, got {}",
                self.generators.len()
            )));
        }

        // Seed basis state: a computational basis vector inside the support,
        // read off from the Z-only subgroup. Z-only elements g constrain
        // z_g · j = phase_g/2 (mod 2); solve the affine system for j.
        let g_count = self.generators.len();
        let x_cols = Gf2Matrix::from_fn(m, g_count, |q, i| self.generators[i].x_bit(q));
        let z_only_exponents = nullspace(&x_cols);
        let mut rows: Vec<(BitVec, bool)> = Vec::new();
        for c in &z_only_exponents {
            let g = self.element(c);
            if !g.phase_exponent().is_multiple_of(2) {
                return Err(domain("inconsistent group: non-real diagonal element"));
            }
            let rhs = g.phase_exponent() == 2;
            let mut z = BitVec::zeros(m);
            for q in 0..m {
                z.set(q, g.z_bit(q));
            }
            rows.push((z, rhs));
        }
        let seed_bits = solve_affine(&rows, m).ok_or_else(|| {
            domain("generators inconsistent: -I is in the generated group".to_string())
        })?;
        let mut seed_idx = 0usize;
        for q in 0..m {
            seed_idx = (seed_idx << 1) | seed_bits.get(q) as usize;
        }

        let mut v = vec![C64::new(0.0, 0.0); 1 << m];
        v[seed_idx] = C64::new(1.0, 0.0);
        for g in &self.generators {
            let gv = g.apply_dense(&v);
            for (a, b) in v.iter_mut().zip(gv) {
                *a = (*a + b) * 0.5;
            }
        }
        let nrm = crate::dense::norm(&v);
        if nrm < 1e-9 {
            return Err(domain(
                "generators inconsistent: projector annihilates the seed state".to_string(),
            ));
        }
        for c in v.iter_mut() {
            *c /= nrm;
        }
        canonicalize_phase(&mut v);
        Ok(v)
    }
}

/// Basis of the right nullspace {v : M v = 0}, deterministic: reduced row
/// echelon form with ascending pivot columns, one basis vector per free
/// column in ascending order.
#[allow(clippy::needless_range_loop)] // row/column elimination reads clearer indexed
pub fn nullspace(m: &Gf2Matrix) -> Vec<BitVec> {
    let rows = m.rows();
    let cols = m.cols();
    let mut work: Vec<BitVec> = (0..rows).map(|r| m.row(r).clone()).collect();
    let mut pivot_of_col: Vec<Option<usize>> = vec![None; cols];
    let mut rank = 0;
    for c in 0..cols {
        let Some(pivot_row) = (rank..rows).find(|&r| work[r].get(c)) else {
            continue;
        };
        work.swap(rank, pivot_row);
        let pivot = work[rank].clone();
        for (r, row) in work.iter_mut().enumerate() {
            if r != rank && row.get(c) {
                row.xor_assign(&pivot);
            }
        }
        pivot_of_col[c] = Some(rank);
        rank += 1;
    }
    let mut basis = Vec::new();
    for free in 0..cols {
        if pivot_of_col[free].is_some() {
            continue;
        }
        let mut v = BitVec::zeros(cols);
        v.set(free, true);
        for c in 0..cols {
            if let Some(r) = pivot_of_col[c] {
                if work[r].get(free) {
                    v.set(c, true);
                }
            }
        }
        basis.push(v);
    }
    basis
}

/// Solve the affine system `row · j = rhs` over GF(2); free variables are
/// set to zero. Returns `None` when inconsistent.
#[allow(clippy::needless_range_loop)]
fn solve_affine(rows: &[(BitVec, bool)], vars: usize) -> Option<BitVec> {
    let mut work: Vec<(BitVec, bool)> = rows.to_vec();
    let mut pivot_of_col: Vec<Option<usize>> = vec![None; vars];
    let mut rank = 0;
    for c in 0..vars {
        let Some(pr) = (rank..work.len()).find(|&r| work[r].0.get(c)) else {
            continue;
        };
        work.swap(rank, pr);
        let (prow, prhs) = work[rank].clone();
        for (r, (row, rhs)) in work.iter_mut().enumerate() {
            if r != rank && row.get(c) {
                row.xor_assign(&prow);
                *rhs ^= prhs;
            }
        }
        pivot_of_col[c] = Some(rank);
        rank += 1;
    }
    for (row, rhs) in work.iter().skip(rank) {
        if row.is_zero() && *rhs {
            return None;
        }
    }
    let mut sol = BitVec::zeros(vars);
    for c in 0..vars {
        if let Some(r) = pivot_of_col[c] {
            sol.set(c, work[r].1);
        }
    }
    Some(sol)
}

/// The n graph-state generators `K_a = X_a ⊗ Z_{N(a)}`, all with phase +1.
pub fn graph_state_stabilizer(g: &Graph) -> StabilizerGroup {
    let n = g.vertex_count();
    let generators = (0..n)
        .map(|a| {
            let mut x = BitVec::zeros(n);
            x.set(a, true);
            let mut z = BitVec::zeros(n);
            for b in g.neighbors(a) {
                z.set(b, true);
            }
            PauliOperator::from_bits(x, z, 0)
        })
        .collect();
    StabilizerGroup::new_unchecked(n, generators)
}

/// Generating set of S_A: the stabilizer elements supported inside `part`.
///
/// Solves over GF(2) for exponent vectors whose product is trivial outside
/// `part`; the returned operators are full-width with support in `part`.
pub fn restricted_subgroup(s: &StabilizerGroup, part: &[usize]) -> Result<Vec<PauliOperator>> {
    let n = s.qubit_count();
    let mut in_part = vec![false; n];
    for &q in part {
        if q >= n {
            return Err(domain(format!("qubit {q} out of range for {n}-qubit group")));
        }
        in_part[q] = true;
    }
    let outside: Vec<usize> = (0..n).filter(|&q| !in_part[q]).collect();
    let g_count = s.generators().len();
    // Constraints: x and z of the product vanish on every outside qubit.
    let constraints = Gf2Matrix::from_fn(2 * outside.len(), g_count, |row, i| {
        let q = outside[row / 2];
        if row % 2 == 0 {
            s.generators()[i].x_bit(q)
        } else {
            s.generators()[i].z_bit(q)
        }
    });
    let gens = nullspace(&constraints)
        .iter()
        .map(|c| s.element(c))
        .collect::<Vec<_>>();
    debug_assert!(gens.iter().all(|g| g.trivial_on(&outside)));
    Ok(gens)
}

fn check_proper_part(g: &Graph, part: &[usize]) -> Result<Vec<usize>> {
    let n = g.vertex_count();
    let mut sorted = part.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != part.len() {
        return Err(domain("part contains duplicate qubits".to_string()));
    }
    if sorted.is_empty() || sorted.len() >= n {
        return Err(domain(format!(
            "need a nonempty proper subset, got |A|={} of n={n}",
            sorted.len()
        )));
    }
    if *sorted.last().unwrap() >= n {
        return Err(domain(format!("qubit {} out of range", sorted.last().unwrap())));
    }
    Ok(sorted)
}

/// Schmidt rank of |G⟩ across (part, complement): `2^{|A|}/|S_A|`, which
/// equals `2^{cut_rank}`.
pub fn schmidt_rank(g: &Graph, part: &[usize]) -> Result<usize> {
    let part = check_proper_part(g, part)?;
    let s = graph_state_stabilizer(g);
    let gens = restricted_subgroup(&s, &part)?;
    let rank = 1usize << (part.len() - gens.len());
    debug_assert_eq!(rank, 1usize << g.cut_rank(&part).unwrap());
    Ok(rank)
}

/// The single repeated Schmidt coefficient sqrt(1/r).
pub fn schmidt_coefficient(g: &Graph, part: &[usize]) -> Result<f64> {
    Ok((schmidt_rank(g, part)? as f64).sqrt().recip())
}

/// Orthonormal Schmidt vectors of |G⟩ on `part`, as stabilizer groups on
/// `part.len()` qubits (relabeled ascending).
///
/// The restricted S_A generators are completed to a full commuting
/// independent set; the `2^{|A|-s}` sign patterns on the added generators
/// enumerate the family. The completion picks, at each step, the first
/// nullspace basis vector outside the current span, with symplectic
/// coordinates ordered X-block first, so the choice is deterministic.
pub fn schmidt_vectors(g: &Graph, part: &[usize]) -> Result<Vec<StabilizerGroup>> {
    let part = check_proper_part(g, part)?;
    let s = graph_state_stabilizer(g);
    let sa = restricted_subgroup(&s, &part)?;
    let m = part.len();
    let base: Vec<PauliOperator> = sa.iter().map(|p| p.restrict(&part)).collect();

    let mut full = base.clone();
    while full.len() < m {
        // v commutes with all of `full` iff [z|x]·[x_v|z_v] = 0 row-wise.
        let constraints = Gf2Matrix::from_fn(full.len(), 2 * m, |row, col| {
            if col < m {
                full[row].z_bit(col)
            } else {
                full[row].x_bit(col - m)
            }
        });
        let candidates = nullspace(&constraints);
        let mut span: Vec<BitVec> = full.iter().map(|p| p.symplectic_bits()).collect();
        let span_rank = {
            let mut scratch = span.clone();
            rank_of_rows(&mut scratch)
        };
        let picked = candidates
            .into_iter()
            .find(|v| {
                let mut scratch = span.clone();
                scratch.push(v.clone());
                rank_of_rows(&mut scratch) > span_rank
            })
            .expect("isotropic subspace of dimension < m always extends");
        let mut x = BitVec::zeros(m);
        let mut z = BitVec::zeros(m);
        for q in 0..m {
            x.set(q, picked.get(q));
            z.set(q, picked.get(m + q));
        }
        let mut xz = x.clone();
        xz.and_assign(&z);
        let phase = (xz.count_ones() % 2) as u8;
        full.push(PauliOperator::from_bits(x, z, phase));
        span.push(picked);
    }

    let added = m - base.len();
    let mut out = Vec::with_capacity(1 << added);
    for alpha in 0..(1usize << added) {
        let mut gens = base.clone();
        for j in 0..added {
            let mut p = full[base.len() + j].clone();
            if (alpha >> (added - 1 - j)) & 1 == 1 {
                p = PauliOperator::from_bits(
                    p.x.clone(),
                    p.z.clone(),
                    (p.phase_exponent() + 2) & 3,
                );
            }
            gens.push(p);
        }
        out.push(StabilizerGroup::new_unchecked(m, gens));
    }
    Ok(out)
}

/// Amplitude `⟨u|G⟩ = 2^{-n/2} (-1)^{q_G(u)}` with `q_G(u)` counting the
/// graph edges inside the support of `u`, mod 2.
pub fn graph_state_amplitude(g: &Graph, u: &[u8]) -> C64 {
    let n = g.vertex_count();
    assert_eq!(u.len(), n, "bit string length mismatch");
    let mut q = 0u32;
    for (a, b) in g.edges() {
        q += (u[a] & u[b]) as u32;
    }
    let mag = (2.0f64).powi(-(n as i32) / 2) * if n % 2 == 1 { std::f64::consts::FRAC_1_SQRT_2 } else { 1.0 };
    let sign = if q % 2 == 1 { -1.0 } else { 1.0 };
    Complex64::new(sign * mag, 0.0)
}

/// Dense |G⟩ via the amplitude formula.
pub fn graph_state_dense(g: &Graph) -> Vec<C64> {
    let n = g.vertex_count();
    let mut psi = vec![C64::new(0.0, 0.0); 1 << n];
    let mut bits = vec![0u8; n];
    for (idx, amp) in psi.iter_mut().enumerate() {
        for (q, b) in bits.iter_mut().enumerate() {
            *b = ((idx >> (n - 1 - q)) & 1) as u8;
        }
        *amp = graph_state_amplitude(g, &bits);
    }
    psi
}

/// Inner product of the canonical dense vectors of two stabilizer states.
pub fn overlap_dense(s1: &StabilizerGroup, s2: &StabilizerGroup) -> Result<C64> {
    if s1.qubit_count() != s2.qubit_count() {
        return Err(domain(format!(
            "overlap of groups on {} and {} qubits",
            s1.qubit_count(),
            s2.qubit_count()
        )));
    }
    let v1 = s1.to_dense()?;
    let v2 = s2.to_dense()?;
    Ok(crate::dense::inner(&v1, &v2))
}
