//! Inelastic DMN evaluation at a material point.
//!
//! The phase strains of the flattened laminate tree are
//! `eps = E + A a`, where `A` is the sparse gradient operator built from
//! symmetrization blocks `kappa N(n)` (volume-fraction coefficient times
//! the jump operator of the node's lamination direction) and `a` stacks one
//! jump vector per surviving laminate node. Solving the Euler-Lagrange
//! equation `A^T W sigma(E + A a) = 0` by Newton's method yields the
//! effective stress and, by reusing the factorized Newton matrix for six
//! right-hand sides, the algorithmic tangent.

mod bench;
mod ldlt;
mod metrics;
mod solver;

pub use bench::{bench_material_point, BenchReport};
pub use metrics::{validation_metrics, ValidationMetrics};
pub use solver::{
    drive_path, path_work, solve_step, uniaxial_hysteresis, uniaxial_ramp, PathResult, PathStep,
    SolveOptions, StepResult,
};

use nalgebra::{Matrix6x3, Vector3};

use crate::error::{Error, Result};
use crate::gsm::{GsmSpec, GsmState};
use crate::mech::{jump_operator, OrientationPoint, SymMat};
use crate::model::{ChildRef, DmnModel, NodeAlive};
use crate::scalar::Real;

/// One ancestor contribution to a slot's strain: `op = kappa B(n_node)`.
#[derive(Clone, Debug)]
pub struct SlotPathEntry<S: Real> {
    pub node: usize,
    /// Signed volume-fraction coefficient (`-c2` left of the node, `+c1`
    /// right of it).
    pub coeff: S,
    pub op: Matrix6x3<S>,
}

/// Assembled, immutable per-material-point context: topology, lamination
/// directions and weights are fixed; states evolve outside.
#[derive(Clone, Debug)]
pub struct GaussPointContext<S: Real> {
    orientation: OrientationPoint<S>,
    phases: (GsmSpec<S>, GsmSpec<S>),
    depth: u32,
    /// Jump operators `B(n)` per node, in elimination order.
    jump_ops: Vec<Matrix6x3<S>>,
    /// Per-slot root paths (root first).
    paths: Vec<Vec<SlotPathEntry<S>>>,
    slot_weights: Vec<S>,
    /// 0 = phase 1, 1 = phase 2.
    slot_phase: Vec<u8>,
    /// Strictly higher-index nodes on each node's root path, ascending.
    node_ancestors: Vec<Vec<usize>>,
    /// Columns whose pivot may legitimately vanish (reference assembly of
    /// an uncompressed tree carries dead nodes).
    allow_null_pivots: bool,
}

impl<S: Real> GaussPointContext<S> {
    pub fn orientation(&self) -> OrientationPoint<S> {
        self.orientation
    }

    pub fn phases(&self) -> &(GsmSpec<S>, GsmSpec<S>) {
        &self.phases
    }

    pub fn n_jump_nodes(&self) -> usize {
        self.jump_ops.len()
    }

    pub fn n_slots(&self) -> usize {
        self.slot_weights.len()
    }

    pub fn slot_weights(&self) -> &[S] {
        &self.slot_weights
    }

    pub fn paths(&self) -> &[Vec<SlotPathEntry<S>>] {
        &self.paths
    }

    /// Node count of the uncompressed tree, the fixed normalization of the
    /// convergence criterion.
    pub fn full_node_count(&self) -> usize {
        (1usize << self.depth) - 1
    }

    pub fn phase_spec(&self, slot: usize) -> &GsmSpec<S> {
        if self.slot_phase[slot] == 0 {
            &self.phases.0
        } else {
            &self.phases.1
        }
    }

    /// Gradient-operator block for (slot, node), if structurally nonzero.
    pub fn operator_block(&self, slot: usize, node: usize) -> Option<Matrix6x3<S>> {
        self.paths[slot]
            .iter()
            .find(|e| e.node == node)
            .map(|e| e.op)
    }

    /// Phase strains `E + A a`.
    pub fn phase_strains(&self, macro_strain: &SymMat<S>, jumps: &[Vector3<S>]) -> Vec<SymMat<S>> {
        self.paths
            .iter()
            .map(|path| {
                let mut e = *macro_strain;
                for entry in path {
                    e += SymMat::new(entry.op * jumps[entry.node]);
                }
                e
            })
            .collect()
    }
}

/// Per-material-point state: committed internal variables per input slot
/// and the displacement jumps plus macro strain of the last converged step
/// (the warm start for the next one).
#[derive(Clone, Debug)]
pub struct MaterialPointState<S: Real> {
    pub leaf_states: Vec<GsmState<S>>,
    pub jumps: Vec<Vector3<S>>,
    pub prev_strain: SymMat<S>,
}

impl<S: Real> MaterialPointState<S> {
    pub fn initial(ctx: &GaussPointContext<S>) -> Self {
        Self {
            leaf_states: vec![GsmState::initial(); ctx.n_slots()],
            jumps: vec![Vector3::zeros(); ctx.n_jump_nodes()],
            prev_strain: SymMat::zero(),
        }
    }

    /// Adopts a trial state returned by `solve_step`.
    pub fn commit(&mut self, trial: MaterialPointState<S>) {
        *self = trial;
    }
}

struct PathFrame<S: Real> {
    entries: Vec<SlotPathEntry<S>>,
}

/// Assembles the gradient operator and solver structure for a trained model
/// at a fixed orientation. The tree is compressed first; rows and columns of
/// removed nodes never enter.
pub fn assemble_context<S: Real>(
    model: &DmnModel<S>,
    point: &OrientationPoint<S>,
    phases: (GsmSpec<S>, GsmSpec<S>),
) -> Result<GaussPointContext<S>> {
    let topo = model.compress()?;
    let normals = model.normals_at(point);

    let n_nodes = topo.nodes.len();
    let jump_ops: Vec<Matrix6x3<S>> = topo
        .nodes
        .iter()
        .map(|n| jump_operator(&normals[n.source_index]))
        .collect();

    let mut paths: Vec<Vec<SlotPathEntry<S>>> = vec![Vec::new(); topo.slots.len()];
    let mut node_ancestors: Vec<Vec<usize>> = vec![Vec::new(); n_nodes];

    fn walk<S: Real>(
        topo: &crate::model::CompressedTopology<S>,
        jump_ops: &[Matrix6x3<S>],
        frame: &mut PathFrame<S>,
        node_ancestors: &mut [Vec<usize>],
        paths: &mut [Vec<SlotPathEntry<S>>],
        r: ChildRef,
    ) {
        match r {
            ChildRef::Slot(s) => {
                paths[s] = frame.entries.clone();
            }
            ChildRef::Node(n) => {
                // The frame holds this node's ancestors, root first; the
                // elimination structure wants them ascending, which the
                // storage order already delivers when reversed.
                let mut anc: Vec<usize> = frame.entries.iter().map(|e| e.node).collect();
                anc.sort_unstable();
                node_ancestors[n] = anc;
                let node = &topo.nodes[n];
                let c1 = node.fraction_left;
                for (side, child) in node.children.iter().enumerate() {
                    let coeff = if side == 0 { -(S::one() - c1) } else { c1 };
                    frame.entries.push(SlotPathEntry {
                        node: n,
                        coeff,
                        op: jump_ops[n] * coeff,
                    });
                    walk(topo, jump_ops, frame, node_ancestors, paths, *child);
                    frame.entries.pop();
                }
            }
        }
    }

    let mut frame = PathFrame { entries: Vec::new() };
    walk(
        &topo,
        &jump_ops,
        &mut frame,
        &mut node_ancestors,
        &mut paths,
        topo.root(),
    );

    Ok(GaussPointContext {
        orientation: *point,
        phases,
        depth: model.depth(),
        jump_ops,
        paths,
        slot_weights: topo.slots.iter().map(|s| s.weight).collect(),
        slot_phase: topo.slots.iter().map(|s| s.phase).collect(),
        node_ancestors,
        allow_null_pivots: false,
    })
}

/// Reference assembly over the full (uncompressed) tree: every input slot
/// and every laminate node is kept, dead ones included. Jump columns of
/// dead or spliced nodes carry zero coefficients, so the Newton matrix has
/// null pivots there; the solver pins those jumps to zero. Intended for
/// verifying compression, not for production use.
pub fn assemble_context_full<S: Real>(
    model: &DmnModel<S>,
    point: &OrientationPoint<S>,
    phases: (GsmSpec<S>, GsmSpec<S>),
) -> Result<GaussPointContext<S>> {
    let weights = model.effective_weights()?;
    let normals = model.normals_at(point);
    let depth = model.depth();
    let n_nodes = model.n_nodes();
    let n_slots = model.n_inputs();

    let jump_ops: Vec<Matrix6x3<S>> = normals.iter().map(jump_operator).collect();
    let mut paths: Vec<Vec<SlotPathEntry<S>>> = vec![Vec::new(); n_slots];
    let mut node_ancestors: Vec<Vec<usize>> = vec![Vec::new(); n_nodes];

    // Walk the perfect tree; every node contributes to all descendants.
    // Left child of (k, i) is (k+1, 2i-1), right child (k+1, 2i).
    fn walk<S: Real>(
        depth: u32,
        weights: &crate::model::Weights<S>,
        jump_ops: &[Matrix6x3<S>],
        frame: &mut Vec<SlotPathEntry<S>>,
        node_ancestors: &mut [Vec<usize>],
        paths: &mut [Vec<SlotPathEntry<S>>],
        k: u32,
        i: usize,
    ) {
        if k == depth + 1 {
            paths[i - 1] = frame.clone();
            return;
        }
        let idx = crate::model::node_index(depth, k, i);
        let mut anc: Vec<usize> = frame.iter().map(|e| e.node).collect();
        anc.sort_unstable();
        node_ancestors[idx] = anc;
        let c1 = weights.fraction_left[idx];
        for (side, child_i) in [(0usize, 2 * i - 1), (1, 2 * i)] {
            let coeff = if side == 0 { -(S::one() - c1) } else { c1 };
            frame.push(SlotPathEntry { node: idx, coeff, op: jump_ops[idx] * coeff });
            walk(
                depth,
                weights,
                jump_ops,
                frame,
                node_ancestors,
                paths,
                k + 1,
                child_i,
            );
            frame.pop();
        }
    }

    let mut frame = Vec::new();
    walk(
        depth,
        &weights,
        &jump_ops,
        &mut frame,
        &mut node_ancestors,
        &mut paths,
        1,
        1,
    );

    // Alive check mirrors effective_weights; dead nodes are kept but their
    // columns vanish through the zero weights.
    let any_alive = weights.alive.iter().any(|a| *a != NodeAlive::Dead);
    if !any_alive {
        return Err(Error::invalid("all input weights are zero"));
    }

    Ok(GaussPointContext {
        orientation: *point,
        phases,
        depth,
        jump_ops,
        paths,
        slot_weights: weights.leaf.clone(),
        slot_phase: (0..n_slots).map(|s| (s % 2) as u8).collect(),
        node_ancestors,
        allow_null_pivots: true,
    })
}
