//! The DMN data structure: a perfect binary tree of two-phase laminates
//! with orientation-interpolated lamination directions and trainable input
//! weights.
//!
//! Nodes are stored deepest level first, root last, so serialized models are
//! portable: node `(k, i)` with level `k` in `1..=K` and horizontal index
//! `i` in `1..=2^(k-1)` lives at `2^K - 2^k + (i - 1)`. Children therefore
//! always precede their parent, and a single ascending sweep evaluates the
//! tree leaves-to-root.

mod autodiff;
mod io;

pub use autodiff::{ModelGradients, TreeWorkspace};
pub use io::{ModelMeta, CURRENT_FORMAT_VERSION};

use nalgebra::{DMatrix, DVector, Vector3};

use crate::error::{Error, Result};
use crate::laminate::eval_cached;
use crate::mech::{OrientationPoint, ShapeKind, Stiffness};
use crate::scalar::Real;

/// Direct deep material network of depth `K`.
#[derive(Clone, Debug)]
pub struct DmnModel<S: Real> {
    depth: u32,
    kind: ShapeKind,
    /// Per-node coefficient rows for the inclination angle, `n_nodes x M`.
    p: DMatrix<S>,
    /// Per-node coefficient rows for the azimuth angle, `n_nodes x M`.
    q: DMatrix<S>,
    /// Unconstrained input weights, length `2^K`.
    v: DVector<S>,
    meta: ModelMeta,
}

/// Liveness of a laminate node derived from its subtree weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeAlive {
    Both,
    LeftOnly,
    RightOnly,
    Dead,
}

/// Propagated weights and volume fractions for every node.
#[derive(Clone, Debug)]
pub struct Weights<S: Real> {
    /// Macauley-bracketed input weights, length `2^K`.
    pub leaf: Vec<S>,
    /// Subtree weight per node, storage order.
    pub node_weight: Vec<S>,
    /// Volume fraction of the left child per node; zero when dead.
    pub fraction_left: Vec<S>,
    pub alive: Vec<NodeAlive>,
}

/// Node index for level `k` (1-based) and horizontal index `i` (1-based).
pub fn node_index(depth: u32, k: u32, i: usize) -> usize {
    (1usize << depth) - (1usize << k) + (i - 1)
}

impl<S: Real> DmnModel<S> {
    /// Builds a model from raw parameters.
    pub fn new(
        depth: u32,
        kind: ShapeKind,
        p: DMatrix<S>,
        q: DMatrix<S>,
        v: DVector<S>,
        meta: ModelMeta,
    ) -> Result<Self> {
        if depth < 1 {
            return Err(Error::invalid("depth must be at least 1"));
        }
        let nodes = (1usize << depth) - 1;
        let m = kind.count();
        if p.nrows() != nodes || p.ncols() != m || q.nrows() != nodes || q.ncols() != m {
            return Err(Error::invalid(format!(
                "coefficient shape mismatch: expected {nodes}x{m}"
            )));
        }
        if v.len() != 1usize << depth {
            return Err(Error::invalid(format!(
                "expected {} input weights, got {}",
                1usize << depth,
                v.len()
            )));
        }
        Ok(Self { depth, kind, p, q, v, meta })
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn interpolation(&self) -> ShapeKind {
        self.kind
    }

    pub fn n_nodes(&self) -> usize {
        (1usize << self.depth) - 1
    }

    pub fn n_inputs(&self) -> usize {
        1usize << self.depth
    }

    pub fn coefficients_p(&self) -> &DMatrix<S> {
        &self.p
    }

    pub fn coefficients_q(&self) -> &DMatrix<S> {
        &self.q
    }

    pub fn weights_raw(&self) -> &DVector<S> {
        &self.v
    }

    pub fn meta(&self) -> &ModelMeta {
        &self.meta
    }

    pub fn meta_mut(&mut self) -> &mut ModelMeta {
        &mut self.meta
    }

    /// Mutable access to the trainable parameter groups `(p, q, v)`.
    pub fn params_mut(&mut self) -> (&mut DMatrix<S>, &mut DMatrix<S>, &mut DVector<S>) {
        (&mut self.p, &mut self.q, &mut self.v)
    }

    /// Children of node `(k, i)`: node indices below the deepest level,
    /// 0-based input slots at the deepest level.
    fn children(&self, k: u32, i: usize) -> (usize, usize) {
        if k == self.depth {
            (2 * i - 2, 2 * i - 1)
        } else {
            (
                node_index(self.depth, k + 1, 2 * i - 1),
                node_index(self.depth, k + 1, 2 * i),
            )
        }
    }

    /// Shape-function values at an orientation point.
    pub fn shape_values(&self, point: &OrientationPoint<S>) -> DVector<S> {
        DVector::from_vec(self.kind.eval(&point.to_barycentric()))
    }

    /// Interpolated angles `(alpha, beta)` for every node.
    pub fn angles(&self, phi: &DVector<S>) -> (DVector<S>, DVector<S>) {
        (&self.p * phi, &self.q * phi)
    }

    /// Interpolated lamination directions at an orientation point; unit
    /// length by the spherical parameterization.
    pub fn normals_at(&self, point: &OrientationPoint<S>) -> Vec<Vector3<S>> {
        self.normals_from_phi(&self.shape_values(point))
    }

    pub(crate) fn normals_from_phi(&self, phi: &DVector<S>) -> Vec<Vector3<S>> {
        let (alpha, beta) = self.angles(phi);
        (0..self.n_nodes())
            .map(|n| spherical_direction(alpha[n], beta[n]))
            .collect()
    }

    /// Propagates Macauley-bracketed input weights leaves-to-root.
    pub fn effective_weights(&self) -> Result<Weights<S>> {
        let leaf: Vec<S> = self.v.iter().map(|&v| v.max(S::zero())).collect();
        if leaf.iter().all(|&w| w == S::zero()) {
            return Err(Error::invalid("all input weights are zero"));
        }
        let n_nodes = self.n_nodes();
        let mut node_weight = vec![S::zero(); n_nodes];
        let mut fraction_left = vec![S::zero(); n_nodes];
        let mut alive = vec![NodeAlive::Dead; n_nodes];
        for k in (1..=self.depth).rev() {
            for i in 1..=(1usize << (k - 1)) {
                let idx = node_index(self.depth, k, i);
                let (l, r) = self.children(k, i);
                let (wl, wr) = if k == self.depth {
                    (leaf[l], leaf[r])
                } else {
                    (node_weight[l], node_weight[r])
                };
                let sum = wl + wr;
                node_weight[idx] = sum;
                alive[idx] = match (wl > S::zero(), wr > S::zero()) {
                    (true, true) => NodeAlive::Both,
                    (true, false) => NodeAlive::LeftOnly,
                    (false, true) => NodeAlive::RightOnly,
                    // 0/0 convention: the node is dead and never evaluated.
                    (false, false) => NodeAlive::Dead,
                };
                fraction_left[idx] = if sum > S::zero() { wl / sum } else { S::zero() };
            }
        }
        Ok(Weights { leaf, node_weight, fraction_left, alive })
    }

    /// Linear-elastic forward pass: leaf-to-root laminate recursion with
    /// alternating phase assignment and dead subtrees skipped.
    pub fn forward_stiffness(
        &self,
        c1: &Stiffness<S>,
        c2: &Stiffness<S>,
        point: &OrientationPoint<S>,
        alpha: S,
    ) -> Result<Stiffness<S>> {
        let weights = self.effective_weights()?;
        let normals = self.normals_at(point);
        self.forward_with(c1, c2, &weights, &normals, alpha)
    }

    pub(crate) fn forward_with(
        &self,
        c1: &Stiffness<S>,
        c2: &Stiffness<S>,
        weights: &Weights<S>,
        normals: &[Vector3<S>],
        alpha: S,
    ) -> Result<Stiffness<S>> {
        let n_nodes = self.n_nodes();
        let mut out: Vec<Option<Stiffness<S>>> = vec![None; n_nodes];
        for k in (1..=self.depth).rev() {
            for i in 1..=(1usize << (k - 1)) {
                let idx = node_index(self.depth, k, i);
                let (l, r) = self.children(k, i);
                let (cl, cr) = if k == self.depth {
                    // Inputs alternate: phase 1 on odd slots, phase 2 on even
                    // slots (1-based numbering).
                    (Some(*c1), Some(*c2))
                } else {
                    (out[l], out[r])
                };
                out[idx] = match weights.alive[idx] {
                    NodeAlive::Dead => None,
                    NodeAlive::LeftOnly => cl,
                    NodeAlive::RightOnly => cr,
                    NodeAlive::Both => {
                        let (cl, cr) = (cl.expect("live child"), cr.expect("live child"));
                        let (c, _) = eval_cached(
                            &cl,
                            &cr,
                            weights.fraction_left[idx],
                            &normals[idx],
                            alpha,
                        )
                        .map_err(|e| {
                            Error::numerical(format!("laminate node (k={k}, i={i}): {e}"))
                        })?;
                        Some(c)
                    }
                };
            }
        }
        out[n_nodes - 1].ok_or_else(|| Error::invalid("all input weights are zero"))
    }

    /// Removes dead subtrees and splices single-child nodes; the compressed
    /// forward pass and online solve are exact on the surviving topology.
    pub fn compress(&self) -> Result<CompressedTopology<S>> {
        let weights = self.effective_weights()?;
        CompressedTopology::build(self, &weights)
    }
}

/// Direction on the unit sphere from inclination `alpha` and azimuth `beta`.
pub fn spherical_direction<S: Real>(alpha: S, beta: S) -> Vector3<S> {
    Vector3::new(
        alpha.sin() * beta.cos(),
        alpha.sin() * beta.sin(),
        alpha.cos(),
    )
}

/// Reference to a child in the compressed topology.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChildRef {
    Node(usize),
    Slot(usize),
}

/// Surviving laminate node.
#[derive(Clone, Debug)]
pub struct CompressedNode<S: Real> {
    /// Index of the node in the uncompressed tree (for normals lookup).
    pub source_index: usize,
    /// Level in the uncompressed tree.
    pub level: u32,
    pub fraction_left: S,
    pub children: [ChildRef; 2],
}

/// Surviving input slot.
#[derive(Clone, Debug)]
pub struct CompressedSlot<S: Real> {
    /// Index into the uncompressed input level.
    pub source_input: usize,
    pub weight: S,
    /// 0 for phase 1, 1 for phase 2 (alternating assignment).
    pub phase: u8,
}

/// Tree with dead subtrees removed and single-child nodes spliced out.
///
/// Nodes are ordered deepest level first (as in the full tree); slots are
/// ordered left-to-right. The effective linear response is identical to the
/// uncompressed tree.
#[derive(Clone, Debug)]
pub struct CompressedTopology<S: Real> {
    pub depth: u32,
    pub nodes: Vec<CompressedNode<S>>,
    pub slots: Vec<CompressedSlot<S>>,
    root: ChildRef,
}

enum Resolved {
    Dead,
    Ref(ChildRef),
}

impl<S: Real> CompressedTopology<S> {
    fn build(model: &DmnModel<S>, weights: &Weights<S>) -> Result<Self> {
        struct Builder<S: Real> {
            nodes: Vec<CompressedNode<S>>,
            slots: Vec<CompressedSlot<S>>,
        }
        fn resolve<S: Real>(
            model: &DmnModel<S>,
            weights: &Weights<S>,
            b: &mut Builder<S>,
            k: u32,
            i: usize,
        ) -> Resolved {
            if k == model.depth() + 1 {
                let slot = i - 1;
                if weights.leaf[slot] > S::zero() {
                    b.slots.push(CompressedSlot {
                        source_input: slot,
                        weight: weights.leaf[slot],
                        phase: (slot % 2) as u8,
                    });
                    return Resolved::Ref(ChildRef::Slot(b.slots.len() - 1));
                }
                return Resolved::Dead;
            }
            let idx = node_index(model.depth(), k, i);
            match weights.alive[idx] {
                NodeAlive::Dead => Resolved::Dead,
                NodeAlive::LeftOnly => resolve(model, weights, b, k + 1, 2 * i - 1),
                NodeAlive::RightOnly => resolve(model, weights, b, k + 1, 2 * i),
                NodeAlive::Both => {
                    let left = match resolve(model, weights, b, k + 1, 2 * i - 1) {
                        Resolved::Ref(r) => r,
                        Resolved::Dead => unreachable!("alive node with dead left subtree"),
                    };
                    let right = match resolve(model, weights, b, k + 1, 2 * i) {
                        Resolved::Ref(r) => r,
                        Resolved::Dead => unreachable!("alive node with dead right subtree"),
                    };
                    b.nodes.push(CompressedNode {
                        source_index: idx,
                        level: k,
                        fraction_left: weights.fraction_left[idx],
                        children: [left, right],
                    });
                    Resolved::Ref(ChildRef::Node(b.nodes.len() - 1))
                }
            }
        }

        let mut b = Builder { nodes: Vec::new(), slots: Vec::new() };
        let root = match resolve(model, weights, &mut b, 1, 1) {
            Resolved::Ref(r) => r,
            Resolved::Dead => return Err(Error::invalid("all input weights are zero")),
        };

        // Reorder nodes to storage order (deepest level first, then by
        // horizontal position) and remap child references.
        let mut order: Vec<usize> = (0..b.nodes.len()).collect();
        order.sort_by_key(|&n| b.nodes[n].source_index);
        let mut remap = vec![0usize; b.nodes.len()];
        for (new, &old) in order.iter().enumerate() {
            remap[old] = new;
        }
        let mut nodes: Vec<CompressedNode<S>> = order.iter().map(|&o| b.nodes[o].clone()).collect();
        for node in &mut nodes {
            for child in &mut node.children {
                if let ChildRef::Node(n) = child {
                    *n = remap[*n];
                }
            }
        }
        let root = match root {
            ChildRef::Node(n) => ChildRef::Node(remap[n]),
            slot => slot,
        };
        Ok(Self { depth: model.depth(), nodes, slots: b.slots, root })
    }

    pub fn root(&self) -> ChildRef {
        self.root
    }

    fn subtree_weight(&self, r: ChildRef, memo: &[S]) -> S {
        match r {
            ChildRef::Slot(s) => self.slots[s].weight,
            ChildRef::Node(n) => memo[n],
        }
    }

    /// Forward pass over the compressed topology. `normals` are indexed by
    /// the uncompressed node index (as returned by `DmnModel::normals_at`).
    pub fn forward(
        &self,
        c1: &Stiffness<S>,
        c2: &Stiffness<S>,
        normals: &[Vector3<S>],
        alpha: S,
    ) -> Result<Stiffness<S>> {
        let phase = |slot: &CompressedSlot<S>| if slot.phase == 0 { *c1 } else { *c2 };
        let mut out: Vec<Stiffness<S>> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let fetch = |r: ChildRef| match r {
                ChildRef::Slot(s) => phase(&self.slots[s]),
                ChildRef::Node(n) => out[n],
            };
            let (c, _) = eval_cached(
                &fetch(node.children[0]),
                &fetch(node.children[1]),
                node.fraction_left,
                &normals[node.source_index],
                alpha,
            )?;
            out.push(c);
        }
        Ok(match self.root {
            ChildRef::Node(n) => out[n],
            ChildRef::Slot(s) => phase(&self.slots[s]),
        })
    }

    /// Per-node subtree weights, storage order.
    pub fn node_weights(&self) -> Vec<S> {
        let mut memo = vec![S::zero(); self.nodes.len()];
        for (idx, node) in self.nodes.iter().enumerate() {
            memo[idx] = self.subtree_weight(node.children[0], &memo)
                + self.subtree_weight(node.children[1], &memo);
        }
        memo
    }
}

#[cfg(test)]
pub(crate) fn random_model_for_tests(
    depth: u32,
    kind: ShapeKind,
    seed: u64,
) -> DmnModel<f64> {
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    let mut rng = StdRng::seed_from_u64(seed);
    let nodes = (1usize << depth) - 1;
    let m = kind.count();
    let p = DMatrix::from_fn(nodes, m, |_, _| rng.gen_range(0.0..std::f64::consts::TAU));
    let q = DMatrix::from_fn(nodes, m, |_, _| rng.gen_range(0.0..std::f64::consts::TAU));
    let mut v = DVector::from_fn(1 << depth, |_, _| rng.gen_range(0.0..1.0));
    let sum: f64 = v.iter().sum();
    v /= sum;
    DmnModel::new(depth, kind, p, q, v, ModelMeta::default()).unwrap()
}
