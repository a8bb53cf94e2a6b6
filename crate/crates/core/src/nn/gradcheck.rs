use ndarray::ArrayView2;

use super::{MlpModel, Mode, NnError};

/// Agreement between backpropagated and numerical gradients for one
/// parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorCheck {
    /// Position in [`MlpModel::parameters_mut`] order.
    pub tensor: usize,
    pub len: usize,
    /// `‖g − n‖ / max(‖g‖ + ‖n‖, 1e-8)` over the tensor.
    pub relative_error: f64,
    pub max_abs_error: f64,
}

/// Compare [`MlpModel::loss_and_gradients`] against central differences of
/// the training-mode loss with step `h`. Dropout must be off for the loss
/// to be a deterministic function of the parameters.
pub fn gradient_check(
    model: &MlpModel,
    x: ArrayView2<f64>,
    labels: &[usize],
    h: f64,
) -> Result<Vec<TensorCheck>, NnError> {
    if model.config.dropout_rate != 0.0 {
        return Err(NnError::InvalidConfig("gradient check needs dropout 0".into()));
    }
    let (_, grads) = model.loss_and_gradients(x, labels, 0)?;
    let analytic: Vec<Vec<f64>> = grads.slices().iter().map(|s| s.to_vec()).collect();
    let mut probe = model.clone();
    let mode = Mode::Train { dropout_seed: 0 };
    let mut out = Vec::with_capacity(analytic.len());
    for (t, tensor) in analytic.iter().enumerate() {
        let (mut diff2, mut g2, mut n2, mut max_abs) = (0.0, 0.0, 0.0, 0.0f64);
        for (i, &g) in tensor.iter().enumerate() {
            let orig = probe.parameters_mut()[t][i];
            probe.parameters_mut()[t][i] = orig + h;
            let up = probe.loss(x, labels, mode)?;
            probe.parameters_mut()[t][i] = orig - h;
            let down = probe.loss(x, labels, mode)?;
            probe.parameters_mut()[t][i] = orig;
            let numeric = (up - down) / (2.0 * h);
            diff2 += (g - numeric) * (g - numeric);
            g2 += g * g;
            n2 += numeric * numeric;
            max_abs = max_abs.max((g - numeric).abs());
        }
        let denom: f64 = (g2.sqrt() + n2.sqrt()).max(1e-8);
        out.push(TensorCheck {
            tensor: t,
            len: tensor.len(),
            relative_error: diff2.sqrt() / denom,
            max_abs_error: max_abs,
        });
    }
    Ok(out)
}
