//! Classical simulation of adaptive single-qubit measurement sequences on a
//! TTN, with a dense statevector oracle.
//!
//! Each measurement step computes the outcome probability by one bottom-up
//! contraction of the sandwiched network (messages are (ket, bra) bond
//! matrices), absorbs the outcome bra into the tensor holding the leaf, and
//! renormalizes by 1/sqrt(p). Measured leaves keep a dimension-1 open index,
//! so the tree topology never changes during a program.
//!
//! Outcome labels: the +1 eigenvalue maps to bit 0, -1 to bit 1. Adaptivity
//! is restricted to parity-controlled sign flips of the measurement angle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dense::{self, C64};
use crate::error::{domain, Error, Result};
use crate::ttn::{Tensor, TreeTensorNetwork};

/// Measurement basis: a Pauli axis or an equatorial angle φ, meaning the
/// observable cos(φ)·X + sin(φ)·Y.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum MeasBasis {
    X,
    Y,
    Z,
    #[serde(untagged)]
    Equatorial {
        angle: f64,
    },
}

/// One adaptive measurement step. The angle sign flips when the outcome
/// parity over `adapt` is odd; a Z measurement has no angle and ignores it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeasStep {
    pub qubit: usize,
    pub basis: MeasBasis,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub adapt: Vec<usize>,
}

/// Ordered list of adaptive single-qubit measurements.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct MeasurementProgram {
    pub steps: Vec<MeasStep>,
}

impl MeasurementProgram {
    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text)?;
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    /// Each qubit measured at most once; adapt references strictly earlier
    /// steps; qubits within range.
    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let mut seen = vec![false; n_qubits];
        for (i, step) in self.steps.iter().enumerate() {
            if step.qubit >= n_qubits {
                return Err(domain(format!(
                    "step {i}: qubit {} out of range for {n_qubits} qubits",
                    step.qubit
                )));
            }
            if seen[step.qubit] {
                return Err(domain(format!(
                    "step {i}: qubit {} measured twice",
                    step.qubit
                )));
            }
            seen[step.qubit] = true;
            for &j in &step.adapt {
                if j >= i {
                    return Err(domain(format!(
                        "step {i}: adapt reference {j} is not strictly earlier"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Outcome record of one executed program.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimulationRecord {
    pub seed: u64,
    pub shot: usize,
    /// One bit per executed step, in step order.
    pub outcomes: String,
    pub step_probabilities: Vec<f64>,
}

/// Where outcomes come from during one run.
pub enum OutcomeSource<'a> {
    /// Sample with the provided generator.
    Sampled(&'a mut ChaCha12Rng),
    /// Force the listed outcomes (one bit per step).
    Forced(&'a [u8]),
}

fn eigenvector_ket(basis: MeasBasis, angle_sign: f64, outcome: u8) -> [C64; 2] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match basis {
        MeasBasis::Z => {
            if outcome == 0 {
                [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]
            } else {
                [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]
            }
        }
        other => {
            let phi = angle_sign
                * match other {
                    MeasBasis::X => 0.0,
                    MeasBasis::Y => std::f64::consts::FRAC_PI_2,
                    MeasBasis::Equatorial { angle } => angle,
                    MeasBasis::Z => unreachable!(),
                };
            let sign = if outcome == 0 { 1.0 } else { -1.0 };
            [
                C64::new(s, 0.0),
                C64::new(0.0, phi).exp() * s * sign,
            ]
        }
    }
}

fn angle_sign(step: &MeasStep, outcomes: &[u8]) -> f64 {
    let parity = step
        .adapt
        .iter()
        .fold(0u8, |acc, &j| acc ^ outcomes[j]);
    if parity == 1 {
        -1.0
    } else {
        1.0
    }
}

/// (ket, bra) message matrix for a leaf edge: the sandwiched single-qubit
/// operator, or the identity on the leaf's current dimension.
fn leaf_message(dim: usize, op: Option<&[[C64; 2]; 2]>) -> Tensor {
    match op {
        Some(m) => {
            assert_eq!(dim, 2, "operator on an unmeasured leaf");
            // E[ket, bra] = O[bra, ket]: the bra index multiplies conj(T)
            Tensor::new(
                vec![2, 2],
                vec!["ket".into(), "bra".into()],
                vec![m[0][0], m[1][0], m[0][1], m[1][1]],
            )
        }
        None => Tensor::from_fn(
            vec![dim, dim],
            vec!["ket".into(), "bra".into()],
            |idx| {
                if idx[0] == idx[1] {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            },
        ),
    }
}

/// ⟨psi| Op_q |psi⟩ for a TTN, by message passing toward the vertex holding
/// leaf `op_qubit`. `op` given in the computational basis; `None` computes
/// the squared norm.
pub fn sandwich_leaf_op(
    ttn: &TreeTensorNetwork,
    op_qubit: usize,
    op: Option<&[[C64; 2]; 2]>,
) -> Result<C64> {
    let n = ttn.leaf_count();
    if n == 2 {
        let t = ttn.tensor(0);
        let msg0 = leaf_message(ttn.leaf_dim(0), if op_qubit == 0 { op } else { None });
        let msg1 = leaf_message(ttn.leaf_dim(1), if op_qubit == 1 { op } else { None });
        // sum_{x0,x1,x0',x1'} conj(T[x0',x1']) M0[x0,x0'] M1[x1,x1'] T[x0,x1]
        let a = t.contract_multi(&msg0, &[(0, 0)])?; // [x1, x0']
        let b = a.contract_multi(&msg1, &[(0, 0)])?; // [x0', x1']
        let out = b.contract_multi(&t.conj(), &[(0, 0), (1, 1)])?;
        return Ok(out.data()[0]);
    }
    let root = ttn.vertex_holding_leaf(op_qubit);
    let value = sandwich_message(ttn, root, None, op_qubit, op)?;
    Ok(value.data()[0])
}

/// Message for the edge (vertex -> parent): a (ket, bra) matrix, or the full
/// scalar when `parent` is None.
fn sandwich_message(
    ttn: &TreeTensorNetwork,
    vertex: usize,
    parent: Option<usize>,
    op_qubit: usize,
    op: Option<&[[C64; 2]; 2]>,
) -> Result<Tensor> {
    let tree = ttn.tree();
    let t = ttn.tensor(vertex);
    let mut acc = t.clone(); // ket-side tensor; indices sorted by neighbor
    let mut bra_pairs: Vec<(String, String)> = Vec::new(); // (acc label, conj label)

    for &w in tree.neighbors(vertex) {
        if Some(w) == parent {
            continue;
        }
        let msg = if tree.is_leaf(w) {
            leaf_message(ttn.leaf_dim(w), if w == op_qubit { op } else { None })
        } else {
            sandwich_message(ttn, w, Some(vertex), op_qubit, op)?
        };
        // rename the message's ket/bra labels to edge-specific ones
        let edge_label = |side: &str| format!("{side}:{vertex}-{w}");
        let msg = Tensor::new(
            msg.dims().to_vec(),
            vec![edge_label("ket"), edge_label("bra")],
            msg.data().to_vec(),
        );
        let pos = acc
            .label_pos(&acc_label_for(ttn, vertex, w))
            .expect("edge label in tensor");
        acc = acc.contract_multi(&msg, &[(pos, 0)])?;
        bra_pairs.push((edge_label("bra"), acc_label_for(ttn, vertex, w)));
    }

    // contract with the conjugate tensor over all bra labels
    let conj = t.conj();
    let pairs: Vec<(usize, usize)> = bra_pairs
        .iter()
        .map(|(acc_label, conj_label)| {
            (
                acc.label_pos(acc_label).expect("bra label"),
                conj.label_pos(conj_label).expect("tensor label"),
            )
        })
        .collect();
    let out = acc.contract_multi(&conj, &pairs)?;
    if parent.is_some() {
        // remaining: [ket up, bra up]
        debug_assert_eq!(out.rank(), 2);
        Ok(Tensor::new(
            out.dims().to_vec(),
            vec!["ket".into(), "bra".into()],
            out.data().to_vec(),
        ))
    } else {
        debug_assert_eq!(out.rank(), 0);
        Ok(out)
    }
}

fn acc_label_for(ttn: &TreeTensorNetwork, vertex: usize, neighbor: usize) -> String {
    let t = ttn.tensor(vertex);
    t.labels()[ttn.index_position(vertex, neighbor)].clone()
}

/// Absorb a (d_new × d_old) matrix into the leaf index of the adjacent
/// tensor: new[.., x, ..] = Σ_y M[x, y] old[.., y, ..].
fn absorb_leaf_matrix(ttn: &mut TreeTensorNetwork, qubit: usize, m: &Tensor) -> Result<()> {
    let vertex = ttn.vertex_holding_leaf(qubit);
    let t = ttn.tensor(vertex).clone();
    let pos = ttn.index_position(vertex, qubit);
    let labels = t.labels().to_vec();
    // contract old leaf index with M's column index; result appends the new
    // leaf index, so permute back to the original slot order.
    let contracted = t.contract_multi(m, &[(pos, 1)])?;
    let mut perm: Vec<usize> = Vec::with_capacity(labels.len());
    for (k, label) in labels.iter().enumerate() {
        if k == pos {
            perm.push(contracted.rank() - 1);
        } else {
            perm.push(
                contracted
                    .label_pos(label)
                    .expect("untouched labels survive"),
            );
        }
    }
    let mut back = contracted.permute(&perm);
    // restore the leaf label on the new index
    let mut labels_back = back.labels().to_vec();
    labels_back[pos] = labels[pos].clone();
    back = Tensor::new(back.dims().to_vec(), labels_back, back.data().to_vec());
    ttn.set_leaf_dim(qubit, m.dims()[0]);
    ttn.set_tensor(vertex, back);
    Ok(())
}

/// Absorb a single-qubit unitary into the tensor adjacent to `qubit`.
/// Bond dimensions are untouched.
pub fn apply_local_unitary(
    ttn: &mut TreeTensorNetwork,
    qubit: usize,
    u: &[[C64; 2]; 2],
) -> Result<()> {
    if qubit >= ttn.leaf_count() {
        return Err(domain(format!("qubit {qubit} out of range")));
    }
    if ttn.leaf_dim(qubit) != 2 {
        return Err(domain(format!("qubit {qubit} was already measured")));
    }
    // unitarity: U† U = I
    for col in 0..2 {
        for col2 in 0..2 {
            let dot = u[0][col].conj() * u[0][col2] + u[1][col].conj() * u[1][col2];
            let want = if col == col2 { 1.0 } else { 0.0 };
            if (dot - C64::new(want, 0.0)).norm() > 1e-9 {
                return Err(domain("matrix is not unitary within 1e-9".to_string()));
            }
        }
    }
    let m = Tensor::new(
        vec![2, 2],
        vec!["new".into(), "old".into()],
        vec![u[0][0], u[0][1], u[1][0], u[1][1]],
    );
    absorb_leaf_matrix(ttn, qubit, &m)
}

/// Execute one measurement step: resolve the adaptive angle, compute the
/// outcome distribution by a sandwich contraction, pick the outcome, absorb
/// the projector bra, renormalize by 1/sqrt(p).
pub fn measure_step(
    ttn: &mut TreeTensorNetwork,
    step: &MeasStep,
    earlier_outcomes: &[u8],
    step_index: usize,
    source: &mut OutcomeSource<'_>,
) -> Result<(u8, f64)> {
    if step.qubit >= ttn.leaf_count() {
        return Err(domain(format!("qubit {} out of range", step.qubit)));
    }
    if ttn.leaf_dim(step.qubit) != 2 {
        return Err(domain(format!("qubit {} was already measured", step.qubit)));
    }
    if let Some(&bad) = step.adapt.iter().find(|&&j| j >= earlier_outcomes.len()) {
        return Err(domain(format!(
            "step {step_index}: adapt reference {bad} has no recorded outcome"
        )));
    }
    let sign = angle_sign(step, earlier_outcomes);
    let ket_plus = eigenvector_ket(step.basis, sign, 0);
    let proj_plus = [
        [
            ket_plus[0] * ket_plus[0].conj(),
            ket_plus[0] * ket_plus[1].conj(),
        ],
        [
            ket_plus[1] * ket_plus[0].conj(),
            ket_plus[1] * ket_plus[1].conj(),
        ],
    ];
    let p_plus = sandwich_leaf_op(ttn, step.qubit, Some(&proj_plus))?
        .re
        .clamp(0.0, 1.0);
    let outcome: u8 = match source {
        OutcomeSource::Sampled(rng) => u8::from(rng.gen_range(0.0..1.0) >= p_plus),
        OutcomeSource::Forced(bits) => {
            let b = *bits.get(step_index).ok_or_else(|| {
                domain(format!("forced outcomes shorter than program at step {step_index}"))
            })?;
            if b > 1 {
                return Err(domain(format!("forced outcome {b} is not a bit")));
            }
            b
        }
    };
    let prob = if outcome == 0 { p_plus } else { 1.0 - p_plus };
    if prob < 1e-12 {
        return Err(Error::ImpossibleBranch {
            step: step_index,
            outcome,
            prob,
        });
    }
    let ket = eigenvector_ket(step.basis, sign, outcome);
    // bra row vector scaled by the renormalization
    let scale = prob.sqrt().recip();
    let bra = Tensor::new(
        vec![1, 2],
        vec!["new".into(), "old".into()],
        vec![ket[0].conj() * scale, ket[1].conj() * scale],
    );
    absorb_leaf_matrix(ttn, step.qubit, &bra)?;
    Ok((outcome, prob))
}

/// Run a whole program once, mutating the TTN in place.
pub fn run_program_once(
    ttn: &mut TreeTensorNetwork,
    prog: &MeasurementProgram,
    mut source: OutcomeSource<'_>,
    seed: u64,
    shot: usize,
) -> Result<SimulationRecord> {
    prog.validate(ttn.leaf_count())?;
    let mut outcomes: Vec<u8> = Vec::with_capacity(prog.steps.len());
    let mut probs: Vec<f64> = Vec::with_capacity(prog.steps.len());
    for (i, step) in prog.steps.iter().enumerate() {
        let (bit, p) = measure_step(ttn, step, &outcomes, i, &mut source)?;
        outcomes.push(bit);
        probs.push(p);
    }
    Ok(SimulationRecord {
        seed,
        shot,
        outcomes: outcomes.iter().map(|b| char::from(b'0' + b)).collect(),
        step_probabilities: probs,
    })
}

/// Run `shots` independent seeded shots. Shot `k` draws from a ChaCha12
/// stream derived as (seed, stream = k), so identical inputs give identical
/// records and shots can run on any worker count.
pub fn run_program(
    ttn: &TreeTensorNetwork,
    prog: &MeasurementProgram,
    seed: u64,
    shots: usize,
    threads: usize,
) -> Result<Vec<SimulationRecord>> {
    prog.validate(ttn.leaf_count())?;
    let run_shot = |shot: usize| -> Result<SimulationRecord> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(shot as u64);
        let mut state = ttn.clone();
        run_program_once(&mut state, prog, OutcomeSource::Sampled(&mut rng), seed, shot)
    };
    if threads <= 1 {
        (0..shots).map(run_shot).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| domain(format!("thread pool: {e}")))?;
        pool.install(|| (0..shots).into_par_iter().map(run_shot).collect())
    }
}

/// Dense-statevector execution of the same program semantics, as an
/// independent oracle. Returns the record and the final state on the
/// unmeasured qubits (ascending label order).
pub fn oracle_run(
    psi: &[C64],
    prog: &MeasurementProgram,
    mut source: OutcomeSource<'_>,
    seed: u64,
    shot: usize,
) -> Result<(SimulationRecord, Vec<C64>)> {
    let n = dense::num_qubits(psi.len())?;
    prog.validate(n)?;
    let mut state = psi.to_vec();
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut outcomes: Vec<u8> = Vec::new();
    let mut probs: Vec<f64> = Vec::new();
    for (i, step) in prog.steps.iter().enumerate() {
        let pos = remaining
            .iter()
            .position(|&q| q == step.qubit)
            .ok_or_else(|| domain(format!("qubit {} already measured", step.qubit)))?;
        let sign = angle_sign(step, &outcomes);
        let ket_plus = eigenvector_ket(step.basis, sign, 0);
        let reduced_plus =
            dense::project_out_qubit(&state, remaining.len(), pos, &ket_plus);
        let p_plus = reduced_plus
            .iter()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .clamp(0.0, 1.0);
        let outcome: u8 = match &mut source {
            OutcomeSource::Sampled(rng) => u8::from(rng.gen_range(0.0..1.0) >= p_plus),
            OutcomeSource::Forced(bits) => *bits.get(i).ok_or_else(|| {
                domain(format!("forced outcomes shorter than program at step {i}"))
            })?,
        };
        let prob = if outcome == 0 { p_plus } else { 1.0 - p_plus };
        if prob < 1e-12 {
            return Err(Error::ImpossibleBranch {
                step: i,
                outcome,
                prob,
            });
        }
        let ket = eigenvector_ket(step.basis, sign, outcome);
        let mut reduced = if outcome == 0 {
            reduced_plus
        } else {
            dense::project_out_qubit(&state, remaining.len(), pos, &ket)
        };
        let scale = prob.sqrt().recip();
        for c in reduced.iter_mut() {
            *c *= scale;
        }
        state = reduced;
        remaining.remove(pos);
        outcomes.push(outcome);
        probs.push(prob);
    }
    Ok((
        SimulationRecord {
            seed,
            shot,
            outcomes: outcomes.iter().map(|b| char::from(b'0' + b)).collect(),
            step_probabilities: probs,
        },
        state,
    ))
}

/// Contract the TTN over the unmeasured qubits: measured dimension-1 leaf
/// indices are squeezed out, so the result aligns with [`oracle_run`]'s
/// final state.
pub fn contract_remaining(ttn: &TreeTensorNetwork) -> Result<Vec<C64>> {
    ttn.contract_full()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{fidelity, random_state};
    use crate::graph::{Graph, SubcubicTree};
    use crate::stabilizer::graph_state_dense;
    use crate::ttn::{build_ttn_from_state, build_ttn_graph_state};
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn identity2() -> [[C64; 2]; 2] {
        [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]]
    }

    fn z_matrix() -> [[C64; 2]; 2] {
        [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]]
    }

    #[test]
    fn program_json_round_trip() {
        let prog = MeasurementProgram {
            steps: vec![
                MeasStep {
                    qubit: 0,
                    basis: MeasBasis::X,
                    adapt: vec![],
                },
                MeasStep {
                    qubit: 2,
                    basis: MeasBasis::Equatorial { angle: 0.37 },
                    adapt: vec![0],
                },
            ],
        };
        let text = prog.to_json();
        let back = MeasurementProgram::from_json(&text).unwrap();
        assert_eq!(back.steps.len(), 2);
        assert_eq!(back.steps[1].adapt, vec![0]);
        assert!(matches!(
            back.steps[1].basis,
            MeasBasis::Equatorial { angle } if (angle - 0.37).abs() < 1e-15
        ));
    }

    #[test]
    fn program_basis_json_shapes() {
        let text = r#"{ "steps": [
            { "qubit": 0, "basis": "X" },
            { "qubit": 1, "basis": "Z", "adapt": [0] },
            { "qubit": 2, "basis": {"angle": 1.5707963267948966} }
        ] }"#;
        let prog = MeasurementProgram::from_json(text).unwrap();
        assert_eq!(prog.steps[0].basis, MeasBasis::X);
        assert_eq!(prog.steps[1].basis, MeasBasis::Z);
        prog.validate(3).unwrap();
    }

    #[test]
    fn program_validation_rejects_bad_refs() {
        let twice = MeasurementProgram {
            steps: vec![
                MeasStep {
                    qubit: 0,
                    basis: MeasBasis::Z,
                    adapt: vec![],
                },
                MeasStep {
                    qubit: 0,
                    basis: MeasBasis::Z,
                    adapt: vec![],
                },
            ],
        };
        assert!(twice.validate(2).is_err());
        let forward = MeasurementProgram {
            steps: vec![MeasStep {
                qubit: 0,
                basis: MeasBasis::Z,
                adapt: vec![0],
            }],
        };
        assert!(forward.validate(2).is_err());
    }

    #[test]
    fn sandwich_norm_is_one_after_build() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let psi = random_state(5, &mut rng);
        let tree = SubcubicTree::caterpillar(5).unwrap();
        let ttn = build_ttn_from_state(&psi, &tree).unwrap();
        for q in 0..5 {
            let norm_sqr = sandwich_leaf_op(&ttn, q, None).unwrap();
            assert_abs_diff_eq!(norm_sqr.re, 1.0, epsilon = 1e-10);
            assert_abs_diff_eq!(norm_sqr.im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn sandwich_matches_dense_expectation() {
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let psi = random_state(4, &mut rng);
        let tree = SubcubicTree::caterpillar(4).unwrap();
        let ttn = build_ttn_from_state(&psi, &tree).unwrap();
        let y_proj = [
            [c(0.5, 0.0), c(0.0, -0.5)],
            [c(0.0, 0.5), c(0.5, 0.0)],
        ];
        let skew = [
            [c(0.3, 0.1), c(-0.2, 0.7)],
            [c(0.9, -0.4), c(0.0, 0.2)],
        ];
        for q in 0..4 {
            for op in [z_matrix(), y_proj, skew] {
                let via_ttn = sandwich_leaf_op(&ttn, q, Some(&op)).unwrap();
                let dense_op = dense::apply_single_qubit(&psi, 4, q, &op);
                let via_dense = dense::inner(&psi, &dense_op);
                assert!((via_ttn - via_dense).norm() < 1e-10, "qubit {q}");
            }
        }
    }

    #[test]
    fn local_unitary_identity_is_noop() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let psi = random_state(4, &mut rng);
        let tree = SubcubicTree::caterpillar(4).unwrap();
        let mut ttn = build_ttn_from_state(&psi, &tree).unwrap();
        let before = ttn.contract_full().unwrap();
        apply_local_unitary(&mut ttn, 2, &identity2()).unwrap();
        let after = ttn.contract_full().unwrap();
        for (a, b) in before.iter().zip(&after) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn local_unitary_z_on_plus_gives_minus() {
        // |+>^2 product TTN; Z on qubit 0 flips it to |->|+>.
        let g = Graph::new(2);
        let tree = SubcubicTree::caterpillar(2).unwrap();
        let mut ttn = build_ttn_graph_state(&g, &tree).unwrap();
        apply_local_unitary(&mut ttn, 0, &z_matrix()).unwrap();
        let got = ttn.contract_full().unwrap();
        let want = [c(0.5, 0.0), c(0.5, 0.0), c(-0.5, 0.0), c(-0.5, 0.0)];
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn local_unitary_matches_dense_on_graph_state() {
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let g = Graph::cycle(6).unwrap();
        let tree = SubcubicTree::caterpillar(6).unwrap();
        let mut ttn = build_ttn_graph_state(&g, &tree).unwrap();
        let u = dense::random_unitary_2x2(&mut rng);
        apply_local_unitary(&mut ttn, 3, &u).unwrap();
        let got = ttn.contract_full().unwrap();
        let want = dense::apply_single_qubit(&graph_state_dense(&g), 6, 3, &u);
        assert!(fidelity(&got, &want) > 1.0 - 1e-10);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn non_unitary_rejected() {
        let g = Graph::new(2);
        let tree = SubcubicTree::caterpillar(2).unwrap();
        let mut ttn = build_ttn_graph_state(&g, &tree).unwrap();
        let bad = [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(2.0, 0.0)]];
        assert!(apply_local_unitary(&mut ttn, 0, &bad).is_err());
    }

    #[test]
    fn z_measurement_on_single_edge_graph() {
        // Measuring Z on one qubit of the 2-qubit graph state: p = 1/2 each;
        // the partner collapses to |+> (outcome 0) or |-> (outcome 1).
        for forced in [0u8, 1u8] {
            let g = Graph::with_edges(2, &[(0, 1)]).unwrap();
            let tree = SubcubicTree::caterpillar(2).unwrap();
            let mut ttn = build_ttn_graph_state(&g, &tree).unwrap();
            let prog = MeasurementProgram {
                steps: vec![MeasStep {
                    qubit: 0,
                    basis: MeasBasis::Z,
                    adapt: vec![],
                }],
            };
            let record = run_program_once(
                &mut ttn,
                &prog,
                OutcomeSource::Forced(&[forced]),
                0,
                0,
            )
            .unwrap();
            assert_abs_diff_eq!(record.step_probabilities[0], 0.5, epsilon = 1e-12);
            let rest = contract_remaining(&ttn).unwrap();
            let s = std::f64::consts::FRAC_1_SQRT_2;
            let want = if forced == 0 {
                [c(s, 0.0), c(s, 0.0)]
            } else {
                [c(s, 0.0), c(-s, 0.0)]
            };
            assert!(fidelity(&rest, &want) > 1.0 - 1e-12);
        }
    }

    #[test]
    fn x_measurement_on_isolated_plus_is_deterministic() {
        let g = Graph::new(3);
        let tree = SubcubicTree::caterpillar(3).unwrap();
        let mut ttn = build_ttn_graph_state(&g, &tree).unwrap();
        let prog = MeasurementProgram {
            steps: vec![MeasStep {
                qubit: 1,
                basis: MeasBasis::X,
                adapt: vec![],
            }],
        };
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let record =
            run_program_once(&mut ttn, &prog, OutcomeSource::Sampled(&mut rng), 0, 0).unwrap();
        assert_eq!(record.outcomes, "0");
        assert_abs_diff_eq!(record.step_probabilities[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn branch_probabilities_sum_to_one() {
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let psi = random_state(5, &mut rng);
        let tree = SubcubicTree::caterpillar(5).unwrap();
        let ttn = build_ttn_from_state(&psi, &tree).unwrap();
        for q in 0..5 {
            for basis in [
                MeasBasis::X,
                MeasBasis::Y,
                MeasBasis::Z,
                MeasBasis::Equatorial { angle: 1.234 },
            ] {
                let step = MeasStep {
                    qubit: q,
                    basis,
                    adapt: vec![],
                };
                let mut p_sum = 0.0;
                for forced in [0u8, 1u8] {
                    let mut state = ttn.clone();
                    let mut source = OutcomeSource::Forced(&[forced]);
                    match measure_step(&mut state, &step, &[], 0, &mut source) {
                        Ok((_, p)) => p_sum += p,
                        Err(Error::ImpossibleBranch { prob, .. }) => p_sum += prob,
                        Err(e) => panic!("{e}"),
                    }
                }
                assert_abs_diff_eq!(p_sum, 1.0, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn impossible_branch_reported() {
        // X measurement on |+> cannot give outcome 1.
        let g = Graph::new(2);
        let tree = SubcubicTree::caterpillar(2).unwrap();
        let mut ttn = build_ttn_graph_state(&g, &tree).unwrap();
        let prog = MeasurementProgram {
            steps: vec![MeasStep {
                qubit: 0,
                basis: MeasBasis::X,
                adapt: vec![],
            }],
        };
        let err = run_program_once(&mut ttn, &prog, OutcomeSource::Forced(&[1]), 0, 0)
            .unwrap_err();
        assert!(matches!(err, Error::ImpossibleBranch { step: 0, .. }));
    }

    #[test]
    fn empty_program_returns_empty_record() {
        let g = Graph::cycle(4).unwrap();
        let tree = SubcubicTree::caterpillar(4).unwrap();
        let ttn = build_ttn_graph_state(&g, &tree).unwrap();
        let records = run_program(&ttn, &MeasurementProgram::default(), 7, 3, 1).unwrap();
        assert_eq!(records.len(), 3);
        for r in &records {
            assert!(r.outcomes.is_empty());
            assert!(r.step_probabilities.is_empty());
        }
    }

    #[test]
    fn identical_seeds_give_identical_records() {
        let g = Graph::cycle(5).unwrap();
        let tree = SubcubicTree::caterpillar(5).unwrap();
        let ttn = build_ttn_graph_state(&g, &tree).unwrap();
        let prog = MeasurementProgram {
            steps: (0..5)
                .map(|q| MeasStep {
                    qubit: q,
                    basis: MeasBasis::Z,
                    adapt: vec![],
                })
                .collect(),
        };
        let a = run_program(&ttn, &prog, 99, 8, 1).unwrap();
        let b = run_program(&ttn, &prog, 99, 8, 1).unwrap();
        let par = run_program(&ttn, &prog, 99, 8, 3).unwrap();
        for ((x, y), z) in a.iter().zip(&b).zip(&par) {
            assert_eq!(x.outcomes, y.outcomes);
            assert_eq!(x.outcomes, z.outcomes);
            assert_eq!(x.step_probabilities, y.step_probabilities);
            assert_eq!(x.step_probabilities, z.step_probabilities);
        }
    }

    #[test]
    fn ttn_and_oracle_agree_on_forced_outcomes() {
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        for trial in 0..10 {
            let n = 5;
            let mut g = Graph::new(n);
            for a in 0..n {
                for b in (a + 1)..n {
                    if rng.gen_bool(0.5) {
                        g.add_edge(a, b).unwrap();
                    }
                }
            }
            let tree_idx = rng.gen_range(0..crate::graph::subcubic_tree_count(n));
            let tree = crate::graph::tree_from_index(n, tree_idx).unwrap();
            let mut ttn = build_ttn_graph_state(&g, &tree).unwrap();
            let psi = graph_state_dense(&g);

            let prog = MeasurementProgram {
                steps: (0..3)
                    .map(|i| MeasStep {
                        qubit: i,
                        basis: match i % 3 {
                            0 => MeasBasis::Equatorial {
                                angle: rng.gen_range(-3.0..3.0),
                            },
                            1 => MeasBasis::Y,
                            _ => MeasBasis::Z,
                        },
                        adapt: if i > 0 { vec![i - 1] } else { vec![] },
                    })
                    .collect(),
            };
            // sample the TTN path, then force the oracle to the same branch
            let mut rng_shot = ChaCha12Rng::seed_from_u64(1000 + trial);
            let rec = run_program_once(
                &mut ttn,
                &prog,
                OutcomeSource::Sampled(&mut rng_shot),
                0,
                0,
            )
            .unwrap();
            let forced: Vec<u8> = rec.outcomes.bytes().map(|b| b - b'0').collect();
            let (orec, ostate) =
                oracle_run(&psi, &prog, OutcomeSource::Forced(&forced), 0, 0).unwrap();
            for (p, q) in rec.step_probabilities.iter().zip(&orec.step_probabilities) {
                assert!((p - q).abs() < 1e-9, "trial {trial}");
            }
            let tstate = contract_remaining(&ttn).unwrap();
            assert!(fidelity(&tstate, &ostate) > 1.0 - 1e-9, "trial {trial}");
        }
    }

    #[test]
    fn cluster_rotation_pattern_teleports() {
        // One-way single-qubit rotation on L5: measure qubits 0..4 with
        // angles (0, -a1 adapted on s0, -a2 adapted on s1, 0). Projecting
        // the left end of a chain in basis B(phi) maps the flowing state by
        // H Z^s diag(1, e^{-i phi}), so the qubit-4 post-state must equal
        // that cascade, and stripping X^{s1+s3} Z^{s0+s2} must recover the
        // all-zero branch (the teleported rotation itself).
        let a1 = 0.7341;
        let a2 = -1.2113;
        let g = Graph::path(5).unwrap();
        let tree = SubcubicTree::caterpillar(5).unwrap();
        let prog = MeasurementProgram {
            steps: vec![
                MeasStep {
                    qubit: 0,
                    basis: MeasBasis::X,
                    adapt: vec![],
                },
                MeasStep {
                    qubit: 1,
                    basis: MeasBasis::Equatorial { angle: -a1 },
                    adapt: vec![0],
                },
                MeasStep {
                    qubit: 2,
                    basis: MeasBasis::Equatorial { angle: -a2 },
                    adapt: vec![1],
                },
                MeasStep {
                    qubit: 3,
                    basis: MeasBasis::X,
                    adapt: vec![],
                },
            ],
        };
        let sq = std::f64::consts::FRAC_1_SQRT_2;
        let h = [[c(sq, 0.0), c(sq, 0.0)], [c(sq, 0.0), c(-sq, 0.0)]];
        let zm = z_matrix();
        let xm = [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]];
        let apply = |m: &[[C64; 2]; 2], v: [C64; 2]| {
            [
                m[0][0] * v[0] + m[0][1] * v[1],
                m[1][0] * v[0] + m[1][1] * v[1],
            ]
        };
        let cascade = |s: &[u8; 4]| {
            let phis = [
                0.0,
                -a1 * if s[0] == 1 { -1.0 } else { 1.0 },
                -a2 * if s[1] == 1 { -1.0 } else { 1.0 },
                0.0,
            ];
            let mut v = [c(sq, 0.0), c(sq, 0.0)];
            for j in 0..4 {
                v[1] *= C64::new(0.0, -phis[j]).exp();
                if s[j] == 1 {
                    v = apply(&zm, v);
                }
                v = apply(&h, v);
            }
            v
        };
        let ref0 = cascade(&[0, 0, 0, 0]);
        for bits in 0..16u8 {
            let s = [(bits >> 3) & 1, (bits >> 2) & 1, (bits >> 1) & 1, bits & 1];
            let mut ttn = build_ttn_graph_state(&g, &tree).unwrap();
            let rec =
                run_program_once(&mut ttn, &prog, OutcomeSource::Forced(&s), 0, 0).unwrap();
            // every branch of this pattern has probability 1/16
            let joint: f64 = rec.step_probabilities.iter().product();
            assert_abs_diff_eq!(joint, 1.0 / 16.0, epsilon = 1e-12);
            let got = contract_remaining(&ttn).unwrap();

            let want = cascade(&s);
            assert!(
                fidelity(&got, &want) > 1.0 - 1e-9,
                "branch {s:?}: cascade mismatch"
            );
            // strip the byproduct Pauli
            let mut stripped = got.clone();
            let v2 = [stripped[0], stripped[1]];
            let v2 = if (s[0] + s[2]) % 2 == 1 {
                apply(&zm, v2)
            } else {
                v2
            };
            let v2 = if (s[1] + s[3]) % 2 == 1 {
                apply(&xm, v2)
            } else {
                v2
            };
            stripped = vec![v2[0], v2[1]];
            assert!(
                fidelity(&stripped, &ref0) > 1.0 - 1e-9,
                "branch {s:?}: byproduct removal fails"
            );
        }
    }

    #[test]
    fn bond_dims_never_grow_during_program() {
        let g = Graph::cycle(6).unwrap();
        let tree = SubcubicTree::caterpillar(6).unwrap();
        let mut ttn = build_ttn_graph_state(&g, &tree).unwrap();
        let before: Vec<usize> = ttn.bond_dims().values().copied().collect();
        let prog = MeasurementProgram {
            steps: (0..6)
                .map(|q| MeasStep {
                    qubit: q,
                    basis: MeasBasis::Z,
                    adapt: vec![],
                })
                .collect(),
        };
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        run_program_once(&mut ttn, &prog, OutcomeSource::Sampled(&mut rng), 3, 0).unwrap();
        let after: Vec<usize> = ttn.bond_dims().values().copied().collect();
        assert_eq!(before, after);
    }

    #[test]
    fn norm_stays_one_after_each_step() {
        let mut rng = ChaCha12Rng::seed_from_u64(29);
        let psi = random_state(6, &mut rng);
        let tree = SubcubicTree::caterpillar(6).unwrap();
        let mut ttn = build_ttn_from_state(&psi, &tree).unwrap();
        let prog = MeasurementProgram {
            steps: (0..6)
                .map(|q| MeasStep {
                    qubit: q,
                    basis: if q % 2 == 0 { MeasBasis::Z } else { MeasBasis::Y },
                    adapt: vec![],
                })
                .collect(),
        };
        let mut outcomes = Vec::new();
        for (i, step) in prog.steps.iter().enumerate() {
            let mut source = OutcomeSource::Sampled(&mut rng);
            let (bit, _) = measure_step(&mut ttn, step, &outcomes, i, &mut source).unwrap();
            outcomes.push(bit);
            let norm_sqr = sandwich_leaf_op(&ttn, prog.steps[0].qubit, None).unwrap();
            assert_abs_diff_eq!(norm_sqr.re, 1.0, epsilon = 1e-9);
        }
    }
}
