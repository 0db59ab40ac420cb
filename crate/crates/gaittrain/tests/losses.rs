use gaittrain::{bce_soft, combined_loss, supcon_loss};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tensorad::{grad_check, GradCheckOptions, Graph, Tensor, Var};

/// Literal transcription of the loss definition: for every anchor, average
/// the log-probability of its positives over all other views, with its own
/// max-shifted log-sum-exp. Kept independent of the graph implementation.
fn oracle_supcon(rows: &[Vec<f64>], labels: &[u64], tau: f64) -> f64 {
    let z: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            let n = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            r.iter().map(|v| v / n).collect()
        })
        .collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let n = z.len();
    let mut total = 0.0;
    for i in 0..n {
        let others: Vec<usize> = (0..n).filter(|&a| a != i).collect();
        let logits: Vec<f64> = others.iter().map(|&a| dot(&z[i], &z[a]) / tau).collect();
        let m = logits.iter().fold(f64::NEG_INFINITY, |acc, &v| acc.max(v));
        let lse = m + logits.iter().map(|l| (l - m).exp()).sum::<f64>().ln();
        let positives: Vec<usize> = others
            .iter()
            .copied()
            .filter(|&p| labels[p] == labels[i])
            .collect();
        let mut anchor = 0.0;
        for &p in &positives {
            anchor += dot(&z[i], &z[p]) / tau - lse;
        }
        total -= anchor / positives.len() as f64;
    }
    total / n as f64
}

fn graph_supcon(rows: &[Vec<f64>], labels: &[u64], tau: f64) -> f64 {
    let dim = rows[0].len();
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    let mut g = Graph::new();
    let p = g.leaf(Tensor::from_vec(flat, &[rows.len(), dim]).unwrap());
    let loss = supcon_loss(&mut g, p, labels, tau).unwrap();
    g.value(loss).item()
}

fn random_two_view_rows(
    rng: &mut ChaCha8Rng,
    pairs: usize,
    dim: usize,
) -> (Vec<Vec<f64>>, Vec<u64>) {
    let mut rows = Vec::with_capacity(2 * pairs);
    let mut labels = Vec::with_capacity(2 * pairs);
    for _ in 0..2 * pairs {
        rows.push((0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect());
    }
    for half in 0..2 {
        let _ = half;
        for p in 0..pairs {
            // A small label alphabet makes |P(i)| > 1 common.
            labels.push((p % 3) as u64);
        }
    }
    (rows, labels)
}

#[test]
fn matches_the_brute_force_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for trial in 0..50 {
        let pairs = rng.gen_range(2..=8);
        let dim = rng.gen_range(2..=16);
        let (rows, labels) = random_two_view_rows(&mut rng, pairs, dim);
        for tau in [0.001, 0.1, 1.0] {
            let expected = oracle_supcon(&rows, &labels, tau);
            let got = graph_supcon(&rows, &labels, tau);
            assert!(
                (expected - got).abs() < 1e-9,
                "trial {trial}, tau {tau}: oracle {expected}, graph {got}"
            );
        }
    }
}

fn givens_rotate(rows: &mut [Vec<f64>], i: usize, j: usize, theta: f64) {
    let (s, c) = theta.sin_cos();
    for r in rows {
        let (a, b) = (r[i], r[j]);
        r[i] = c * a - s * b;
        r[j] = s * a + c * b;
    }
}

#[test]
fn invariant_to_common_rotations_of_the_projections() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let (rows, labels) = random_two_view_rows(&mut rng, 5, 8);
    let base = graph_supcon(&rows, &labels, 0.1);
    let mut rotated = rows;
    for _ in 0..12 {
        let i = rng.gen_range(0..8);
        let mut j = rng.gen_range(0..8);
        if i == j {
            j = (j + 1) % 8;
        }
        givens_rotate(&mut rotated, i, j, rng.gen_range(0.0..std::f64::consts::TAU));
    }
    let after = graph_supcon(&rotated, &labels, 0.1);
    assert!(
        (base - after).abs() < 1e-9,
        "rotation moved the loss: {base} vs {after}"
    );
}

#[test]
fn invariant_to_label_consistent_view_permutations() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let (rows, labels) = random_two_view_rows(&mut rng, 6, 5);
    let base = graph_supcon(&rows, &labels, 0.05);

    let mut order: Vec<usize> = (0..rows.len()).collect();
    for i in (1..order.len()).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let permuted_rows: Vec<Vec<f64>> = order.iter().map(|&i| rows[i].clone()).collect();
    let permuted_labels: Vec<u64> = order.iter().map(|&i| labels[i]).collect();
    let after = graph_supcon(&permuted_rows, &permuted_labels, 0.05);
    assert!((base - after).abs() < 1e-12, "{base} vs {after}");
}

#[test]
fn tighter_positives_lower_the_loss() {
    // id-A views close on a 2-plane, id-B views fixed on orthogonal axes,
    // so only the positive similarity cos(2·phi) varies.
    let batch = |phi: f64| -> Vec<Vec<f64>> {
        vec![
            vec![phi.cos(), phi.sin(), 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
            vec![phi.cos(), -phi.sin(), 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
        ]
    };
    let labels = [1, 2, 1, 2];
    let tight = graph_supcon(&batch(0.1), &labels, 0.1);
    let loose = graph_supcon(&batch(0.5), &labels, 0.1);
    assert!(
        tight < loose,
        "raising positive similarity should lower the loss: {tight} vs {loose}"
    );
}

#[test]
fn supcon_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let (rows, labels) = random_two_view_rows(&mut rng, 4, 6);
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    let params = [(
        "projections".to_string(),
        Tensor::from_vec(flat, &[8, 6]).unwrap(),
    )];
    for tau in [0.1, 1.0] {
        let build = |g: &mut Graph, vars: &[Var]| {
            supcon_loss(g, vars[0], &labels, tau).map_err(|_| tensorad::TensorError::EmptyOperands {
                op: "supcon",
            })
        };
        let report = grad_check(build, &params, &GradCheckOptions::default()).unwrap();
        assert!(
            report.passes(1e-4),
            "tau {tau}: max relative error {:.3e}",
            report.max_rel_err
        );
    }
}

#[test]
fn bce_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    let logits: Vec<f64> = (0..24).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let targets: Vec<f64> = (0..24).map(|_| rng.gen_range(0.0..1.0)).collect();
    let targets = Tensor::from_vec(targets, &[4, 6]).unwrap();
    let params = [(
        "logits".to_string(),
        Tensor::from_vec(logits, &[4, 6]).unwrap(),
    )];
    let build = |g: &mut Graph, vars: &[Var]| {
        bce_soft(g, vars[0], &targets).map_err(|_| tensorad::TensorError::EmptyOperands {
            op: "bce",
        })
    };
    let report = grad_check(build, &params, &GradCheckOptions::default()).unwrap();
    assert!(report.passes(1e-4), "{:.3e}", report.max_rel_err);
}

#[test]
fn bce_is_stationary_at_matching_sigmoid_targets() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let logits: Vec<f64> = (0..30).map(|_| rng.gen_range(-4.0..4.0)).collect();
    let sigmoid: Vec<f64> = logits.iter().map(|l| 1.0 / (1.0 + (-l).exp())).collect();
    let mut g = Graph::new();
    let l = g.param(Tensor::from_vec(logits, &[5, 6]).unwrap());
    let t = Tensor::from_vec(sigmoid, &[5, 6]).unwrap();
    let loss = bce_soft(&mut g, l, &t).unwrap();
    g.backward(loss).unwrap();
    let worst = g
        .grad(l)
        .unwrap()
        .data()
        .iter()
        .fold(0.0_f64, |m, &v| m.max(v.abs()));
    assert!(worst < 1e-9, "gradient at the minimum is {worst:.3e}");
}

#[test]
fn combined_loss_gradients_flow_to_both_terms() {
    let labels = [1, 2, 1, 2];
    let targets = Tensor::from_vec(vec![0.2, 0.9, 0.5, 0.7], &[4, 1]).unwrap();
    let params = [
        (
            "projections".to_string(),
            Tensor::from_vec(
                vec![0.9, 0.1, 0.2, 0.8, 0.7, 0.3, 0.1, 0.9],
                &[4, 2],
            )
            .unwrap(),
        ),
        (
            "logits".to_string(),
            Tensor::from_vec(vec![0.3, -0.2, 0.8, -1.0], &[4, 1]).unwrap(),
        ),
    ];
    let build = |g: &mut Graph, vars: &[Var]| {
        let s = supcon_loss(g, vars[0], &labels, 0.5)
            .map_err(|_| tensorad::TensorError::EmptyOperands { op: "supcon" })?;
        let a = bce_soft(g, vars[1], &targets)
            .map_err(|_| tensorad::TensorError::EmptyOperands { op: "bce" })?;
        combined_loss(g, s, a, 0.5).map_err(|_| tensorad::TensorError::EmptyOperands {
            op: "combined",
        })
    };
    let report = grad_check(build, &params, &GradCheckOptions::default()).unwrap();
    assert!(report.passes(1e-4), "{:.3e}", report.max_rel_err);
    for t in &report.tensors {
        assert!(t.coords_checked > 0);
    }
}
