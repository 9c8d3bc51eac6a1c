//! Central finite differences against taped gradients.

use super::{Gradients, ParamId, ParamStore};
use crate::{Result, Scalar};

#[derive(Clone, Debug, serde::Serialize)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_rel_err: f64,
    /// Coordinates whose probes changed the activation pattern.
    pub skipped: usize,
    pub worst: Option<(String, usize)>,
}

/// `|a - n| / max(|a|, |n|, 1e-6)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Compares `analytic` with central differences of `loss` for every entry of
/// the listed parameters. `loss` must be a pure function of the store.
pub fn check_gradients<T, F>(
    store: &mut ParamStore<T>,
    params: &[ParamId],
    analytic: &Gradients<T>,
    h: f64,
    mut loss: F,
) -> Result<GradCheckReport>
where
    T: Scalar,
    F: FnMut(&ParamStore<T>) -> Result<T>,
{
    check_gradients_piecewise(store, params, analytic, h, |s| Ok((loss(s)?, 0)))
}

/// As [`check_gradients`] for piecewise-smooth losses. `loss` also returns
/// the activation pattern of the evaluation; a coordinate is skipped when
/// either probe lands on a different linear piece than the unperturbed
/// point, since the central difference then straddles a kink.
pub fn check_gradients_piecewise<T, F>(
    store: &mut ParamStore<T>,
    params: &[ParamId],
    analytic: &Gradients<T>,
    h: f64,
    mut loss: F,
) -> Result<GradCheckReport>
where
    T: Scalar,
    F: FnMut(&ParamStore<T>) -> Result<(T, u64)>,
{
    let mut report = GradCheckReport { checked: 0, max_rel_err: 0.0, skipped: 0, worst: None };
    let (_, base) = loss(store)?;
    let step = T::from_f64_lossy(h);
    for &id in params {
        let len = store.value(id).as_slice().len();
        for k in 0..len {
            let orig = store.value(id).as_slice()[k];
            store.value_mut(id).as_mut_slice()[k] = orig + step;
            let (plus, p_plus) = loss(store)?;
            store.value_mut(id).as_mut_slice()[k] = orig - step;
            let (minus, p_minus) = loss(store)?;
            store.value_mut(id).as_mut_slice()[k] = orig;
            if p_plus != base || p_minus != base {
                report.skipped += 1;
                continue;
            }
            let numeric = (plus - minus).to_f64_lossy() / (2.0 * h);
            let a = analytic.get(id).map_or(0.0, |g| g.as_slice()[k].to_f64_lossy());
            let err = relative_error(a, numeric);
            report.checked += 1;
            if err > report.max_rel_err || report.worst.is_none() {
                report.max_rel_err = err;
                report.worst = Some((store.name(id).to_string(), k));
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Matrix, Mlp, Tape};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mlp_cross_entropy_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut store = ParamStore::<f64>::new();
        let mlp = Mlp::two_layer(&mut store, "m", 3, 6, 3, &mut rng);
        let x = Matrix::from_rows(&[vec![0.2, -0.4, 1.1], vec![-1.3, 0.8, 0.05], vec![0.7, 0.7, -0.2]]);
        let labels = vec![2, 0, 1];
        let run = |s: &ParamStore<f64>| -> Result<(f64, Gradients<f64>)> {
            let mut tape = Tape::new();
            let xv = tape.leaf(x.clone());
            let y = mlp.forward(&mut tape, s, xv)?;
            let l = tape.softmax_cross_entropy(y, labels.clone())?;
            let b = tape.backward_scalar(l)?;
            Ok((tape.value(l)[(0, 0)], b.params))
        };
        let (_, grads) = run(&store).unwrap();
        let ids: Vec<_> = store.trainable_ids().collect();
        let rep = check_gradients(&mut store, &ids, &grads, 1e-5, |s| run(s).map(|r| r.0)).unwrap();
        assert!(rep.max_rel_err < 1e-4, "{rep:?}");
        assert_eq!(rep.checked, 3 * 6 + 6 + 6 * 3 + 3);
    }

    #[test]
    fn kinks_are_skipped_not_scored() {
        let mut store = ParamStore::<f64>::new();
        let id = store.add("p", Matrix::from_vec(1, 2, vec![0.0, 0.3]));
        let run = |s: &ParamStore<f64>| -> Result<(f64, u64, Gradients<f64>)> {
            let mut tape = Tape::new();
            let p = tape.param(s, id);
            let r = tape.relu(p);
            let l = tape.sum_all(r);
            let b = tape.backward_scalar(l)?;
            Ok((tape.value(l)[(0, 0)], tape.activation_pattern(), b.params))
        };
        let (_, _, grads) = run(&store).unwrap();
        let plain = check_gradients(&mut store, &[id], &grads, 1e-5, |s| run(s).map(|r| r.0)).unwrap();
        assert!(plain.max_rel_err > 0.4);
        let rep = check_gradients_piecewise(&mut store, &[id], &grads, 1e-5, |s| run(s).map(|r| (r.0, r.1))).unwrap();
        assert_eq!((rep.checked, rep.skipped), (1, 1));
        assert!(rep.max_rel_err < 1e-8, "{rep:?}");
    }

    #[test]
    fn relative_error_floor() {
        assert_eq!(relative_error(0.0, 0.0), 0.0);
        assert!((relative_error(1e-9, 0.0) - 1e-3).abs() < 1e-12);
    }
}
