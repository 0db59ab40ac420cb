use crate::config::TrainConfig;

/// Triangular cyclical learning rate: `lr_min` at each cycle boundary,
/// `lr_max` at the half-cycle, linear in between. `step` counts optimizer
/// steps from the start of training.
pub fn cyclical_lr(step: usize, steps_per_epoch: usize, cfg: &TrainConfig) -> f64 {
    let steps_per_epoch = steps_per_epoch.max(1) as f64;
    let epoch = step as f64 / steps_per_epoch;
    let phase = (epoch / cfg.cycle_epochs as f64).fract();
    let tri = 1.0 - (2.0 * phase - 1.0).abs();
    cfg.lr_min + (cfg.lr_max - cfg.lr_min) * tri
}

/// Fine-tuning schedule: linear from `finetune_lr0` at epoch 0 down to
/// exactly 0 at `finetune_epochs`.
pub fn finetune_lr(epoch: usize, cfg: &TrainConfig) -> f64 {
    let frac = (epoch as f64 / cfg.finetune_epochs as f64).min(1.0);
    cfg.finetune_lr0 * (1.0 - frac)
}

/// Layer-wise learning-rate decay: per-encoder-layer rates, top first.
/// The top layer (and every head) runs at `base_lr`; each layer below is
/// the previous times `decay`.
pub fn llrd_rates(base_lr: f64, decay: f64, num_layers: usize) -> Vec<f64> {
    (0..num_layers).map(|i| base_lr * decay.powi(i as i32)).collect()
}

/// The LLRD rate for one named parameter. Heads and the final norm run at
/// `base_lr`; encoder layer `i` (0 = bottom) runs at
/// `base_lr · decay^(num_layers − 1 − i)`; the input projection and the
/// positional table sit below every layer.
pub fn llrd_rate_for(name: &str, base_lr: f64, decay: f64, num_layers: usize) -> f64 {
    if let Some(rest) = name.strip_prefix("layer") {
        if let Some((index, _)) = rest.split_once('.') {
            if let Ok(i) = index.parse::<usize>() {
                let depth_from_top = num_layers.saturating_sub(1).saturating_sub(i);
                return base_lr * decay.powi(depth_from_top as i32);
            }
        }
    }
    if name == "pos" || name.starts_with("input.") {
        return base_lr * decay.powi(num_layers as i32);
    }
    base_lr
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cfg() -> TrainConfig {
        TrainConfig::default()
    }

    #[test]
    fn cyclical_lr_hits_the_documented_waypoints() {
        let c = cfg();
        let spe = 10;
        assert_abs_diff_eq!(cyclical_lr(0, spe, &c), 0.0001, epsilon = 1e-12);
        assert_abs_diff_eq!(cyclical_lr(10 * spe, spe, &c), 0.001, epsilon = 1e-12);
        assert_abs_diff_eq!(cyclical_lr(20 * spe, spe, &c), 0.0001, epsilon = 1e-12);
        assert_abs_diff_eq!(cyclical_lr(5 * spe, spe, &c), 0.00055, epsilon = 1e-12);
        assert_abs_diff_eq!(
            cyclical_lr(30 * spe, spe, &c),
            cyclical_lr(10 * spe, spe, &c),
            epsilon = 1e-15
        );
    }

    #[test]
    fn cyclical_lr_interpolates_within_an_epoch() {
        let c = cfg();
        let quarter = cyclical_lr(25, 10, &c);
        let expected = 0.0001 + (0.001 - 0.0001) * (2.5 / 20.0) * 2.0;
        assert_abs_diff_eq!(quarter, expected, epsilon = 1e-12);
    }

    #[test]
    fn finetune_lr_decays_linearly_to_zero() {
        let c = cfg();
        assert_abs_diff_eq!(finetune_lr(0, &c), 0.0001, epsilon = 1e-12);
        assert_abs_diff_eq!(finetune_lr(100, &c), 5e-5, epsilon = 1e-12);
        assert_eq!(finetune_lr(200, &c), 0.0);
        assert_eq!(finetune_lr(250, &c), 0.0);
    }

    #[test]
    fn llrd_is_the_documented_geometric_sequence() {
        let rates = llrd_rates(1e-4, 0.9, 4);
        let expected = [1e-4, 9e-5, 8.1e-5, 7.29e-5];
        for (r, e) in rates.iter().zip(expected) {
            assert_abs_diff_eq!(*r, e, epsilon = 1e-15);
        }
        assert!(rates.windows(2).all(|w| w[0] >= w[1]));
        assert!(llrd_rates(1e-4, 1.0, 4).iter().all(|&r| r == 1e-4));
    }

    #[test]
    fn llrd_rate_for_maps_parameter_names() {
        let base = 1e-4;
        assert_abs_diff_eq!(llrd_rate_for("layer3.ff.w1", base, 0.9, 4), base, epsilon = 1e-15);
        assert_abs_diff_eq!(
            llrd_rate_for("layer0.attn.wq", base, 0.9, 4),
            base * 0.9_f64.powi(3),
            epsilon = 1e-15
        );
        for head in ["embed.w", "proj.b", "attr.w", "final_ln.g", "head.w"] {
            assert_abs_diff_eq!(llrd_rate_for(head, base, 0.9, 4), base, epsilon = 1e-15);
        }
        let lowest = base * 0.9_f64.powi(4);
        assert_abs_diff_eq!(llrd_rate_for("input.w", base, 0.9, 4), lowest, epsilon = 1e-15);
        assert_abs_diff_eq!(llrd_rate_for("pos", base, 0.9, 4), lowest, epsilon = 1e-15);
    }
}
