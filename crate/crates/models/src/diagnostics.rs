//! Finite-difference support: every architecture's composite training loss
//! exposed as a deterministic function of one flat parameter vector, so
//! central differences can validate the analytic gradients end to end.
//! Dropout stays off — its mask is resampled per forward pass, which would
//! turn the loss into a different function at every probe.

use crate::graphops::{cheb_operator, gat_edges, GatEdges};
use crate::static_gnn::{build_static_op, static_logits, StaticOp};
use crate::{nets, ModelError, ModelKind, ModelSpec};
use placenet_autograd::{NamedTensor, SparseMatrix, Tape, TensorId};
use placenet_core::rng;
use placenet_core::tempgraph::SnapshotSequence;

enum ProbeGraph {
    None,
    Static(StaticOp),
    Recurrent(Vec<SparseMatrix>),
}

/// One architecture instance pinned to explicit inputs: features `x`
/// (n × d), integer labels, a loss mask, and — for graph kinds — the
/// snapshot sequence (static kinds use its final year; the recurrent kind
/// unrolls across all its years).
pub struct ArchProbe {
    spec: ModelSpec,
    graph: ProbeGraph,
    gat: Option<GatEdges>,
    x: Vec<f64>,
    n: usize,
    d: usize,
    y: Vec<u32>,
    mask: Vec<u32>,
    template: Vec<NamedTensor>,
}

impl ArchProbe {
    pub fn new(
        spec: &ModelSpec,
        seq: Option<&SnapshotSequence>,
        x: Vec<f64>,
        n: usize,
        y: Vec<u32>,
        mask: Vec<u32>,
    ) -> Result<ArchProbe, ModelError> {
        let mut spec = spec.clone();
        spec.validate()?;
        if spec.kind.is_heuristic() {
            return Err(ModelError::BadSpec(
                "heuristics carry no gradients to probe".into(),
            ));
        }
        assert_eq!(x.len() % n, 0, "feature matrix shape mismatch");
        let d = x.len() / n;
        let mut gat = None;
        let graph = if spec.kind.is_tabular() {
            ProbeGraph::None
        } else {
            let seq = seq.ok_or_else(|| {
                ModelError::BadSpec("graph kinds need a snapshot sequence".into())
            })?;
            let last = seq.years().last().expect("sequence has years");
            if spec.kind == ModelKind::Gconvgru {
                let ops = seq
                    .years()
                    .map(|t| cheb_operator(seq, t, n, spec.use_weights))
                    .collect::<Result<Vec<_>, _>>()?;
                ProbeGraph::Recurrent(ops)
            } else {
                if spec.kind == ModelKind::Gat {
                    gat = Some(gat_edges(seq, last, n)?);
                }
                ProbeGraph::Static(build_static_op(spec.kind, seq, last, n, spec.use_weights)?)
            }
        };
        let mut init_rng = rng::stream(spec.seed, "init");
        let template = match spec.kind {
            ModelKind::Logreg | ModelKind::Mlp => nets::init_dense(
                spec.layers,
                d,
                spec.hidden_dim,
                spec.kind == ModelKind::Logreg,
                &mut init_rng,
            ),
            ModelKind::Gcn => nets::init_gcn(spec.layers, d, spec.hidden_dim, &mut init_rng),
            ModelKind::Sage => nets::init_sage(spec.layers, d, spec.hidden_dim, &mut init_rng),
            ModelKind::Gat => nets::init_gat(
                spec.layers,
                d,
                spec.hidden_dim,
                spec.attention_heads,
                &mut init_rng,
            ),
            ModelKind::Gconvgru => {
                nets::init_gconvgru(spec.layers, d, spec.hidden_dim, &mut init_rng)
            }
            _ => unreachable!("heuristics rejected above"),
        };
        Ok(ArchProbe {
            spec,
            graph,
            gat,
            x,
            n,
            d,
            y,
            mask,
            template,
        })
    }

    pub fn dim(&self) -> usize {
        self.template.iter().map(|t| t.data.len()).sum()
    }

    /// The seeded initialization as one flat vector.
    pub fn init_flat(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.dim());
        for t in &self.template {
            flat.extend_from_slice(&t.data);
        }
        flat
    }

    fn unflatten(&self, flat: &[f64]) -> Result<Vec<NamedTensor>, ModelError> {
        if flat.len() != self.dim() {
            return Err(ModelError::BadSpec(format!(
                "flat parameter vector has {} entries, expected {}",
                flat.len(),
                self.dim()
            )));
        }
        let mut params = self.template.clone();
        let mut at = 0;
        for t in &mut params {
            t.data.copy_from_slice(&flat[at..at + t.rows * t.cols]);
            at += t.rows * t.cols;
        }
        Ok(params)
    }

    fn build_loss(
        &self,
        params: &[NamedTensor],
    ) -> Result<(Tape, TensorId, nets::Binding), ModelError> {
        let mut tape = Tape::new();
        let b = nets::bind(&mut tape, params, true)?;
        let xid = tape.constant(self.n, self.d, self.x.clone())?;
        let logits = match &self.graph {
            ProbeGraph::None => {
                nets::dense_logits(&mut tape, &b, xid, self.spec.layers, 0.0, None)?
            }
            ProbeGraph::Static(op) => {
                if let Some(e) = &self.gat {
                    nets::gat_logits(
                        &mut tape,
                        &b,
                        e,
                        xid,
                        self.spec.layers,
                        self.spec.hidden_dim,
                        self.spec.attention_heads,
                        0.0,
                        None,
                    )?
                } else {
                    static_logits(&mut tape, &b, &self.spec, op, xid, 0.0, None)?
                }
            }
            ProbeGraph::Recurrent(ops) => {
                let h0 = tape.constant(
                    self.n,
                    self.spec.hidden_dim,
                    vec![0.0; self.n * self.spec.hidden_dim],
                )?;
                let mut hs = vec![h0; self.spec.layers];
                for op in ops {
                    let sid = tape.sparse(op.clone());
                    nets::gconvgru_step(&mut tape, &b, sid, xid, &mut hs, 0.0, None)?;
                }
                nets::recurrent_head(&mut tape, &b, *hs.last().expect("layers >= 1"))?
            }
        };
        let loss = tape.softmax_cross_entropy(logits, &self.y, &self.mask)?;
        Ok((tape, loss, b))
    }

    pub fn loss_at(&self, flat: &[f64]) -> Result<f64, ModelError> {
        let params = self.unflatten(flat)?;
        let (tape, loss, _) = self.build_loss(&params)?;
        Ok(tape.value(loss)[0])
    }

    pub fn grad_at(&self, flat: &[f64]) -> Result<Vec<f64>, ModelError> {
        let params = self.unflatten(flat)?;
        let (mut tape, loss, b) = self.build_loss(&params)?;
        tape.backward(loss)?;
        let mut out = Vec::with_capacity(self.dim());
        for part in nets::collect_grads(&tape, &b)? {
            out.extend(part);
        }
        Ok(out)
    }
}
