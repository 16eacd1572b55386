//! Recurrent graph model unrolled over cumulative snapshots. Training
//! builds one w-step sequence per supervisable year with a fresh hidden
//! state, sums all sequence losses into a single per-epoch objective, and
//! backpropagates through time once per epoch. The test pass runs once over
//! the final three input years with a carried hidden state, scoring each
//! test cohort at the step that still precedes its hire year.

use crate::adam::{Adam, EarlyStop};
use crate::graphops::cheb_operator;
use crate::{inputs, nets};
use crate::{ArchInfo, EpochLoss, ModelError, ModelKind, ModelSpec, ScoreSet, Scaler, TrainedModel};
use placenet_autograd::{softmax_rows, NamedTensor, SparseId, SparseMatrix, Tape, TensorId};
use placenet_core::featurize::{FeatureTensor, LabelVector, SplitMasks};
use placenet_core::rng;
use placenet_core::tempgraph::SnapshotSequence;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// Snapshot operators and scaled feature slices for every input year the
/// model can consume (all window years except the last, which is never an
/// input).
pub(crate) struct TemporalInputs {
    pub ops: BTreeMap<i32, SparseMatrix>,
    pub xs: BTreeMap<i32, Vec<f64>>,
    pub n: usize,
    pub d: usize,
}

pub(crate) fn build_temporal_inputs(
    spec: &ModelSpec,
    seq: &SnapshotSequence,
    features: &[FeatureTensor],
    splits: &SplitMasks,
    scaler: Option<&Scaler>,
) -> Result<TemporalInputs, ModelError> {
    let tensors = inputs::select_tensors(&spec.feature_set, features)?;
    let n = splits.node_count();
    let d = inputs::total_dim(&tensors);
    let mut ops = BTreeMap::new();
    let mut xs = BTreeMap::new();
    for year in splits.t0..splits.tf {
        ops.insert(year, cheb_operator(seq, year, n, spec.use_weights)?);
        let mut x = inputs::year_matrix(&tensors, year, n)?;
        if let Some(s) = scaler {
            s.transform(&mut x);
        }
        xs.insert(year, x);
    }
    Ok(TemporalInputs { ops, xs, n, d })
}

/// Per-tape cache of snapshot operators and feature constants, so sequences
/// sharing an input year share its tensors.
struct YearCache {
    ops: BTreeMap<i32, SparseId>,
    xs: BTreeMap<i32, TensorId>,
}

impl YearCache {
    fn build(tape: &mut Tape, inp: &TemporalInputs, years: &[i32]) -> Result<YearCache, ModelError> {
        let mut ops = BTreeMap::new();
        let mut xs = BTreeMap::new();
        for &y in years {
            if ops.contains_key(&y) {
                continue;
            }
            ops.insert(y, tape.sparse(inp.ops[&y].clone()));
            xs.insert(y, tape.constant(inp.n, inp.d, inp.xs[&y].clone())?);
        }
        Ok(YearCache { ops, xs })
    }
}

/// Unroll one sequence over `years` from a zero hidden state and return the
/// final-step logits.
#[allow(clippy::too_many_arguments)]
fn unroll(
    tape: &mut Tape,
    b: &nets::Binding,
    spec: &ModelSpec,
    cache: &YearCache,
    years: std::ops::RangeInclusive<i32>,
    n: usize,
    dropout: f64,
    rng: &mut Option<&mut ChaCha8Rng>,
) -> Result<TensorId, ModelError> {
    let h0 = tape.constant(n, spec.hidden_dim, vec![0.0; n * spec.hidden_dim])?;
    let mut hs = vec![h0; spec.layers];
    for y in years {
        nets::gconvgru_step(
            tape,
            b,
            cache.ops[&y],
            cache.xs[&y],
            &mut hs,
            dropout,
            rng.as_deref_mut(),
        )?;
    }
    nets::recurrent_head(tape, b, *hs.last().expect("at least one layer"))
}

/// Supervision years and their masks for the training phase. Years whose
/// train mask is empty cannot contribute a loss term and are skipped; the
/// caller checks that at least one year survives.
struct YearMasksSet {
    years: Vec<i32>,
    train: BTreeMap<i32, Vec<u32>>,
    val: BTreeMap<i32, Vec<u32>>,
}

fn training_masks(splits: &SplitMasks, w: u32) -> Result<YearMasksSet, ModelError> {
    let mut set = YearMasksSet {
        years: Vec::new(),
        train: BTreeMap::new(),
        val: BTreeMap::new(),
    };
    for t in (splits.t0 + w as i32)..=(splits.tf - 3) {
        let m = splits.year_masks(t, w)?;
        let idx_train = inputs::mask_indices(&m.train);
        if idx_train.is_empty() {
            continue;
        }
        let idx_val = inputs::mask_indices(&m.val);
        set.years.push(t);
        set.train.insert(t, idx_train);
        set.val.insert(t, idx_val);
    }
    Ok(set)
}

fn sum_losses(tape: &mut Tape, losses: &[TensorId]) -> Result<TensorId, ModelError> {
    let mut total = losses[0];
    for &l in &losses[1..] {
        total = tape.add(total, l)?;
    }
    Ok(total)
}

/// Total validation loss across sequences, dropout disabled.
fn epoch_val_loss(
    params: &[NamedTensor],
    spec: &ModelSpec,
    inp: &TemporalInputs,
    masks: &YearMasksSet,
    y: &[u32],
) -> Result<f64, ModelError> {
    let w = spec.window as i32;
    let mut tape = Tape::new();
    let b = nets::bind(&mut tape, params, false)?;
    let input_years: Vec<i32> = masks
        .years
        .iter()
        .flat_map(|&t| (t - w)..=(t - 1))
        .collect();
    let cache = YearCache::build(&mut tape, inp, &input_years)?;
    let mut losses = Vec::new();
    for &t in &masks.years {
        let idx_val = &masks.val[&t];
        if idx_val.is_empty() {
            continue;
        }
        let logits = unroll(
            &mut tape,
            &b,
            spec,
            &cache,
            (t - w)..=(t - 1),
            inp.n,
            0.0,
            &mut None,
        )?;
        losses.push(tape.softmax_cross_entropy(logits, y, idx_val)?);
    }
    if losses.is_empty() {
        return Err(ModelError::EmptySplit { split: "validation" });
    }
    let total = sum_losses(&mut tape, &losses)?;
    Ok(tape.value(total)[0])
}

/// One carried pass over the last three input years with the given
/// parameters; returns per-step class-1 probabilities keyed by the cohort
/// year each step may score (input year + 1).
pub(crate) fn carried_test_pass(
    params: &[NamedTensor],
    spec: &ModelSpec,
    inp: &TemporalInputs,
    splits: &SplitMasks,
) -> Result<BTreeMap<i32, Vec<f64>>, ModelError> {
    let mut tape = Tape::new();
    let b = nets::bind(&mut tape, params, false)?;
    let input_years: Vec<i32> = (splits.tf - 3..=splits.tf - 1).collect();
    let cache = YearCache::build(&mut tape, inp, &input_years)?;
    let h0 = tape.constant(inp.n, spec.hidden_dim, vec![0.0; inp.n * spec.hidden_dim])?;
    let mut hs = vec![h0; spec.layers];
    let mut out = BTreeMap::new();
    for &y in &input_years {
        nets::gconvgru_step(&mut tape, &b, cache.ops[&y], cache.xs[&y], &mut hs, 0.0, None)?;
        let logits = nets::recurrent_head(&mut tape, &b, *hs.last().expect("layers >= 1"))?;
        let probs = softmax_rows(tape.value(logits), inp.n, 2);
        out.insert(y + 1, (0..inp.n).map(|r| probs[2 * r + 1]).collect());
    }
    Ok(out)
}

pub fn train_gconvgru(
    spec: &ModelSpec,
    seq: &SnapshotSequence,
    features: &[FeatureTensor],
    labels: &LabelVector,
    splits: &SplitMasks,
) -> Result<(TrainedModel, ScoreSet), ModelError> {
    let mut spec = spec.clone();
    spec.validate()?;
    if spec.kind != ModelKind::Gconvgru {
        return Err(ModelError::BadSpec(format!(
            "train_gconvgru cannot fit kind {}",
            spec.kind.as_str()
        )));
    }
    let w = spec.window;
    if splits.t0 + w as i32 > splits.tf - 3 {
        return Err(ModelError::WindowTooLong {
            w,
            t0: splits.t0,
            tf: splits.tf,
        });
    }
    let masks = training_masks(splits, w)?;
    if masks.years.is_empty() {
        return Err(ModelError::EmptyTrainSet);
    }

    // Scale with statistics of the training rows at their supervision-time
    // inputs: the year-(t−1) slices of each year-t train mask, pooled.
    let raw = build_temporal_inputs(&spec, seq, features, splits, None)?;
    let mut fit_rows = Vec::new();
    let mut n_fit = 0;
    for &t in &masks.years {
        let x = &raw.xs[&(t - 1)];
        for &i in &masks.train[&t] {
            fit_rows.extend_from_slice(&x[i as usize * raw.d..(i as usize + 1) * raw.d]);
            n_fit += 1;
        }
    }
    let scaler = Scaler::fit(&fit_rows, n_fit, raw.d);
    let mut inp = raw;
    for x in inp.xs.values_mut() {
        scaler.transform(x);
    }

    let y = inputs::labels_u32(labels);
    let mut init_rng = rng::stream(spec.seed, "init");
    let mut params = nets::init_gconvgru(spec.layers, inp.d, spec.hidden_dim, &mut init_rng);
    let mut adam = Adam::new(&params, spec.learning_rate);
    let mut drop_rng = rng::stream(spec.seed, "dropout");
    let mut stop = EarlyStop::new(&params, spec.patience);
    let mut epoch_log = Vec::new();
    let w_i = w as i32;

    for epoch in 1..=spec.epochs {
        let mut tape = Tape::new();
        let b = nets::bind(&mut tape, &params, true)?;
        let input_years: Vec<i32> = masks
            .years
            .iter()
            .flat_map(|&t| (t - w_i)..=(t - 1))
            .collect();
        let cache = YearCache::build(&mut tape, &inp, &input_years)?;
        let mut rng_opt = Some(&mut drop_rng);
        let mut losses = Vec::new();
        for &t in &masks.years {
            let logits = unroll(
                &mut tape,
                &b,
                &spec,
                &cache,
                (t - w_i)..=(t - 1),
                inp.n,
                spec.dropout,
                &mut rng_opt,
            )?;
            losses.push(tape.softmax_cross_entropy(logits, &y, &masks.train[&t])?);
        }
        let total = sum_losses(&mut tape, &losses)?;
        tape.backward(total)?;
        let grads = nets::collect_grads(&tape, &b)?;
        let train_loss = tape.value(total)[0];
        adam.step(&mut params, &grads);

        let val_loss = epoch_val_loss(&params, &spec, &inp, &masks, &y)?;
        epoch_log.push(EpochLoss {
            epoch,
            train_loss,
            val_loss,
        });
        if stop.observe(epoch, val_loss, &params) {
            break;
        }
    }

    let best = stop.best_params;
    let per_year = carried_test_pass(&best, &spec, &inp, splits)?;
    let mut probabilities = BTreeMap::new();
    for (&cohort_year, probs) in &per_year {
        let m = splits.year_masks(cohort_year, w)?;
        for i in inputs::mask_indices(&m.test) {
            probabilities.insert(i, probs[i as usize]);
        }
    }
    let scores = ScoreSet {
        run_id: spec.seed as u32,
        probabilities,
    };
    let model = TrainedModel {
        spec,
        arch: ArchInfo::Temporal,
        params: best,
        scaler,
        best_epoch: stop.best_epoch,
        epoch_log,
    };
    Ok((model, scores))
}
