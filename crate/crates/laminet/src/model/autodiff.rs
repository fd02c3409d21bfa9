//! Reverse-mode differentiation of the linear forward pass.
//!
//! The forward sweep stores the laminate intermediates per node; the
//! backward sweep chains the laminate adjoint through the tree, the
//! spherical direction map and the shape functions, and pushes volume
//! fraction gradients down to the unconstrained input weights through the
//! Macauley bracket (subgradient zero at and below zero).

use nalgebra::{DMatrix, DVector, Vector3};

use super::{node_index, DmnModel, NodeAlive, Weights};
use crate::error::{Error, Result};
use crate::laminate::{adjoint_cached, eval_cached, LaminateCache};
use crate::mech::Stiffness;
use crate::scalar::Real;

/// Gradients with respect to the trainable parameter groups.
#[derive(Clone, Debug)]
pub struct ModelGradients<S: Real> {
    pub dp: DMatrix<S>,
    pub dq: DMatrix<S>,
    pub dv: DVector<S>,
}

impl<S: Real> ModelGradients<S> {
    pub fn zeros_like(model: &DmnModel<S>) -> Self {
        let m = model.interpolation().count();
        Self {
            dp: DMatrix::zeros(model.n_nodes(), m),
            dq: DMatrix::zeros(model.n_nodes(), m),
            dv: DVector::zeros(model.n_inputs()),
        }
    }
}

enum NodeEval<S: Real> {
    Dead,
    PassLeft,
    PassRight,
    Lam(Box<LaminateCache<S>>),
}

/// Reusable buffers for one forward/backward pass over the tree.
pub struct TreeWorkspace<S: Real> {
    depth: u32,
    evals: Vec<NodeEval<S>>,
    outs: Vec<Option<Stiffness<S>>>,
    cotangents: Vec<Stiffness<S>>,
    d_fraction: Vec<S>,
    d_normal: Vec<Vector3<S>>,
}

impl<S: Real> TreeWorkspace<S> {
    pub fn new(depth: u32) -> Self {
        let n = (1usize << depth) - 1;
        Self {
            depth,
            evals: (0..n).map(|_| NodeEval::Dead).collect(),
            outs: vec![None; n],
            cotangents: vec![Stiffness::zero(); n],
            d_fraction: vec![S::zero(); n],
            d_normal: vec![Vector3::zeros(); n],
        }
    }

    /// Leaf-to-root pass, retaining the per-node laminate caches.
    pub fn forward(
        &mut self,
        model: &DmnModel<S>,
        c1: &Stiffness<S>,
        c2: &Stiffness<S>,
        weights: &Weights<S>,
        normals: &[Vector3<S>],
        alpha: S,
    ) -> Result<Stiffness<S>> {
        assert_eq!(model.depth(), self.depth, "workspace depth mismatch");
        let depth = self.depth;
        for k in (1..=depth).rev() {
            for i in 1..=(1usize << (k - 1)) {
                let idx = node_index(depth, k, i);
                let (cl, cr) = if k == depth {
                    (Some(*c1), Some(*c2))
                } else {
                    let l = node_index(depth, k + 1, 2 * i - 1);
                    let r = node_index(depth, k + 1, 2 * i);
                    (self.outs[l], self.outs[r])
                };
                let (eval, out) = match weights.alive[idx] {
                    NodeAlive::Dead => (NodeEval::Dead, None),
                    NodeAlive::LeftOnly => (NodeEval::PassLeft, cl),
                    NodeAlive::RightOnly => (NodeEval::PassRight, cr),
                    NodeAlive::Both => {
                        let (cl, cr) = (cl.expect("live child"), cr.expect("live child"));
                        let (c, cache) = eval_cached(
                            &cl,
                            &cr,
                            weights.fraction_left[idx],
                            &normals[idx],
                            alpha,
                        )
                        .map_err(|e| {
                            Error::numerical(format!("laminate node (k={k}, i={i}): {e}"))
                        })?;
                        (NodeEval::Lam(Box::new(cache)), Some(c))
                    }
                };
                self.evals[idx] = eval;
                self.outs[idx] = out;
            }
        }
        self.outs[(1usize << depth) - 2]
            .ok_or_else(|| Error::invalid("all input weights are zero"))
    }

    /// Root-to-leaf adjoint sweep; accumulates into `grads`.
    ///
    /// `phi` must be the shape-function values used for `normals` in the
    /// preceding `forward` call, `cotangent` the loss gradient with respect
    /// to the root stiffness.
    pub fn backward(
        &mut self,
        model: &DmnModel<S>,
        weights: &Weights<S>,
        phi: &DVector<S>,
        cotangent: &Stiffness<S>,
        grads: &mut ModelGradients<S>,
    ) {
        let depth = self.depth;
        let n_nodes = model.n_nodes();
        for c in self.cotangents.iter_mut() {
            *c = Stiffness::zero();
        }
        for g in self.d_fraction.iter_mut() {
            *g = S::zero();
        }
        self.cotangents[n_nodes - 1] = *cotangent;

        // Stiffness cotangents flow root-to-leaves; storage order is
        // children-first, so walk indices downwards.
        for k in 1..=depth {
            for i in 1..=(1usize << (k - 1)) {
                let idx = node_index(depth, k, i);
                let gbar = self.cotangents[idx];
                let (l, r) = if k == depth {
                    (None, None)
                } else {
                    (
                        Some(node_index(depth, k + 1, 2 * i - 1)),
                        Some(node_index(depth, k + 1, 2 * i)),
                    )
                };
                match &self.evals[idx] {
                    NodeEval::Dead => {}
                    NodeEval::PassLeft => {
                        if let Some(l) = l {
                            self.cotangents[l] = self.cotangents[l] + gbar;
                        }
                    }
                    NodeEval::PassRight => {
                        if let Some(r) = r {
                            self.cotangents[r] = self.cotangents[r] + gbar;
                        }
                    }
                    NodeEval::Lam(cache) => {
                        let g = adjoint_cached(cache, &gbar);
                        if let Some(l) = l {
                            self.cotangents[l] = self.cotangents[l] + g.d_stiffness_a;
                        }
                        if let Some(r) = r {
                            self.cotangents[r] = self.cotangents[r] + g.d_stiffness_b;
                        }
                        self.d_fraction[idx] = g.d_fraction_a;
                        self.d_normal[idx] = g.d_normal;
                    }
                }
            }
        }

        // Chain direction gradients through the spherical map and the
        // shape functions.
        let (alpha_ang, beta_ang) = model.angles(phi);
        for idx in 0..n_nodes {
            if !matches!(self.evals[idx], NodeEval::Lam(_)) {
                continue;
            }
            let (a, b) = (alpha_ang[idx], beta_ang[idx]);
            let (sa, ca) = (a.sin(), a.cos());
            let (sb, cb) = (b.sin(), b.cos());
            let dn = self.d_normal[idx];
            let d_alpha = dn[0] * ca * cb + dn[1] * ca * sb - dn[2] * sa;
            let d_beta = -dn[0] * sa * sb + dn[1] * sa * cb;
            for m in 0..phi.len() {
                grads.dp[(idx, m)] += d_alpha * phi[m];
                grads.dq[(idx, m)] += d_beta * phi[m];
            }
        }

        // Push fraction gradients down to the input weights.
        let mut d_node_w = vec![S::zero(); n_nodes];
        let mut d_leaf_w = vec![S::zero(); model.n_inputs()];
        for k in 1..=depth {
            for i in 1..=(1usize << (k - 1)) {
                let idx = node_index(depth, k, i);
                let (wl, wr, dst_l, dst_r) = if k == depth {
                    let (l, r) = (2 * i - 2, 2 * i - 1);
                    (weights.leaf[l], weights.leaf[r], Dst::Leaf(l), Dst::Leaf(r))
                } else {
                    let l = node_index(depth, k + 1, 2 * i - 1);
                    let r = node_index(depth, k + 1, 2 * i);
                    (
                        weights.node_weight[l],
                        weights.node_weight[r],
                        Dst::Node(l),
                        Dst::Node(r),
                    )
                };
                let carried = d_node_w[idx];
                let (add_l, add_r) = match weights.alive[idx] {
                    NodeAlive::Dead => (S::zero(), S::zero()),
                    NodeAlive::LeftOnly => (carried, S::zero()),
                    NodeAlive::RightOnly => (S::zero(), carried),
                    NodeAlive::Both => {
                        let sum = wl + wr;
                        let dfrac = self.d_fraction[idx];
                        (
                            carried + dfrac * wr / (sum * sum),
                            carried - dfrac * wl / (sum * sum),
                        )
                    }
                };
                let mut put = |dst: Dst, val: S| match dst {
                    Dst::Leaf(s) => d_leaf_w[s] += val,
                    Dst::Node(n) => d_node_w[n] += val,
                };
                put(dst_l, add_l);
                put(dst_r, add_r);
            }
        }
        for (slot, &d) in d_leaf_w.iter().enumerate() {
            // Macauley bracket: zero subgradient at and below zero.
            if model.weights_raw()[slot] > S::zero() {
                grads.dv[slot] += d;
            }
        }
    }
}

enum Dst {
    Leaf(usize),
    Node(usize),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laminate::default_alpha;
    use crate::mech::{OrientationPoint, ShapeKind};

    /// Central finite differences of the root stiffness contracted with a
    /// fixed cotangent, compared against the adjoint sweep.
    #[test]
    fn tree_gradients_match_finite_differences() {
        let model = super::super::random_model_for_tests(3, ShapeKind::Linear, 42);
        let c1 = Stiffness::isotropic(1.0, 0.5);
        let c2 = Stiffness::isotropic(12.0, 4.0);
        let point = OrientationPoint::new(0.62, 0.2).unwrap();
        let alpha = default_alpha(&c1, &c2);
        let phi = model.shape_values(&point);

        let mut seed = Stiffness::zero();
        for i in 0..6 {
            for j in 0..6 {
                seed.matrix_mut()[(i, j)] = 0.1 + 0.03 * (i as f64) - 0.02 * (j as f64);
            }
        }
        seed = seed.symmetrized();

        let loss = |m: &DmnModel<f64>| -> f64 {
            let out = m.forward_stiffness(&c1, &c2, &point, alpha).unwrap();
            out.matrix().dot(seed.matrix())
        };

        let mut ws = TreeWorkspace::new(3);
        let mut grads = ModelGradients::zeros_like(&model);
        let weights = model.effective_weights().unwrap();
        let normals = model.normals_from_phi(&phi);
        ws.forward(&model, &c1, &c2, &weights, &normals, alpha).unwrap();
        ws.backward(&model, &weights, &phi, &seed, &mut grads);

        let h = 1e-6;
        let check = |got: f64, expect: f64, what: &str| {
            let scale = expect.abs().max(1e-6);
            assert!(
                (got - expect).abs() / scale < 2e-4,
                "{what}: adjoint {got} vs fd {expect}"
            );
        };
        for node in [0usize, 3, 6] {
            for m in 0..3 {
                let mut up = model.clone();
                up.params_mut().0[(node, m)] += h;
                let mut dn = model.clone();
                dn.params_mut().0[(node, m)] -= h;
                check(grads.dp[(node, m)], (loss(&up) - loss(&dn)) / (2.0 * h), "dp");

                let mut up = model.clone();
                up.params_mut().1[(node, m)] += h;
                let mut dn = model.clone();
                dn.params_mut().1[(node, m)] -= h;
                check(grads.dq[(node, m)], (loss(&up) - loss(&dn)) / (2.0 * h), "dq");
            }
        }
        for slot in 0..8 {
            let mut up = model.clone();
            up.params_mut().2[slot] += h;
            let mut dn = model.clone();
            dn.params_mut().2[slot] -= h;
            check(grads.dv[slot], (loss(&up) - loss(&dn)) / (2.0 * h), "dv");
        }
    }
}
