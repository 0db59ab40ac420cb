use gaiteval::{casia_protocol, nm_gallery, rank1, Condition, EvalError, LabeledEmbedding};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ANGLES: [u16; 3] = [0, 18, 36];

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in &mut v {
        *x /= n;
    }
    v
}

/// Four identities on orthogonal axes, each cell perturbed far less than
/// the inter-identity distance.
fn separable_fixture(rng: &mut ChaCha8Rng) -> Vec<LabeledEmbedding> {
    let mut out = Vec::new();
    for id in 0..4u64 {
        for &angle in &ANGLES {
            for condition in Condition::ALL {
                for _ in 0..2 {
                    let mut v = vec![0.0; 4];
                    v[id as usize] = 1.0;
                    for x in &mut v {
                        *x += rng.gen_range(-0.05..0.05);
                    }
                    out.push(
                        LabeledEmbedding::new(normalize(v), id)
                            .unwrap()
                            .with_viewpoint(angle)
                            .with_condition(condition),
                    );
                }
            }
        }
    }
    out
}

#[test]
fn separable_identities_score_perfectly_in_every_cell() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let table = casia_protocol(&separable_fixture(&mut rng)).unwrap();
    assert_eq!(table.angles, ANGLES.to_vec());
    for condition in Condition::ALL {
        for &angle in &ANGLES {
            assert_eq!(table.accuracy(condition, angle), Some(1.0));
        }
        assert_eq!(table.means[&condition], 1.0);
    }
}

#[test]
fn shuffled_labels_fall_to_chance() {
    // Permuting labels within each (angle, condition) group breaks the
    // identity–vector association while keeping every protocol cell covered.
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut embeddings = separable_fixture(&mut rng);
    for &angle in &ANGLES {
        for condition in Condition::ALL {
            let group: Vec<usize> = (0..embeddings.len())
                .filter(|&i| {
                    embeddings[i].viewpoint == Some(angle)
                        && embeddings[i].condition == Some(condition)
                })
                .collect();
            let mut labels: Vec<u64> = group.iter().map(|&i| embeddings[i].identity).collect();
            for i in (1..labels.len()).rev() {
                labels.swap(i, rng.gen_range(0..=i));
            }
            for (&i, &label) in group.iter().zip(&labels) {
                embeddings[i].identity = label;
            }
        }
    }
    let table = casia_protocol(&embeddings).unwrap();
    let overall: f64 =
        table.means.values().sum::<f64>() / table.means.len() as f64;
    assert!(
        (overall - 0.25).abs() < 0.10,
        "shuffled accuracy {overall} should sit near chance 0.25"
    );
}

#[test]
fn the_gallery_never_contains_the_probe_angle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let embeddings = separable_fixture(&mut rng);
    for &angle in &ANGLES {
        let gallery = nm_gallery(&embeddings, angle);
        assert!(!gallery.is_empty());
        assert!(gallery.iter().all(|e| e.viewpoint != Some(angle)));
        assert!(gallery.iter().all(|e| e.condition == Some(Condition::Nm)));
    }
}

#[test]
fn same_angle_duplicates_cannot_leak_into_the_gallery() {
    // id 0's normal-walk embedding at its probe angle is an exact duplicate
    // of the probe, while id 1 sits nearby and id 0's other angles point
    // away. Only gallery leakage could make the probe match id 0.
    let e = |v: Vec<f64>, id: u64, angle: u16| {
        LabeledEmbedding::new(normalize(v), id)
            .unwrap()
            .with_viewpoint(angle)
            .with_condition(Condition::Nm)
    };
    let embeddings = vec![
        e(vec![1.0, 0.0, 0.0], 0, 0),
        e(vec![-1.0, 0.2, 0.0], 0, 18),
        e(vec![-1.0, 0.0, 0.2], 0, 36),
        e(vec![0.9, 0.1, 0.0], 1, 0),
        e(vec![0.9, 0.0, 0.1], 1, 18),
        e(vec![0.9, 0.1, 0.1], 1, 36),
    ];
    let table = casia_protocol(&embeddings).unwrap();
    assert_eq!(table.accuracy(Condition::Nm, 0), Some(0.5));
}

#[test]
fn missing_cells_are_listed() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut embeddings = separable_fixture(&mut rng);
    embeddings.retain(|e| {
        !(e.identity == 2 && e.viewpoint == Some(18) && e.condition == Some(Condition::Nm))
    });
    let err = casia_protocol(&embeddings).unwrap_err();
    match err {
        EvalError::MissingCells { cells } => {
            assert_eq!(cells, vec!["NM gallery for id 2 at angle 18".to_string()]);
        }
        other => panic!("expected MissingCells, got {other}"),
    }
}

#[test]
fn untagged_embeddings_are_rejected() {
    let plain = LabeledEmbedding::new(vec![1.0, 0.0], 3).unwrap();
    assert!(matches!(
        casia_protocol(&[plain.clone().with_condition(Condition::Nm)]),
        Err(EvalError::MissingTag { what: "viewpoint", identity: 3 })
    ));
    assert!(matches!(
        casia_protocol(&[plain.with_viewpoint(0)]),
        Err(EvalError::MissingTag { what: "condition", identity: 3 })
    ));
}

#[test]
fn rank1_is_rotation_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let dim = 6;
    let random_unit = |rng: &mut ChaCha8Rng| {
        normalize((0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
    };
    let gallery: Vec<LabeledEmbedding> = (0..10)
        .map(|i| LabeledEmbedding::new(random_unit(&mut rng), i % 5).unwrap())
        .collect();
    let probes: Vec<LabeledEmbedding> = (0..20)
        .map(|i| LabeledEmbedding::new(random_unit(&mut rng), i % 5).unwrap())
        .collect();
    let base = rank1(&gallery, &probes).unwrap();

    let rotate = |v: &[f64], i: usize, j: usize, theta: f64| {
        let mut out = v.to_vec();
        let (s, c) = theta.sin_cos();
        out[i] = c * v[i] - s * v[j];
        out[j] = s * v[i] + c * v[j];
        out
    };
    let mut plan = Vec::new();
    for _ in 0..8 {
        let i = rng.gen_range(0..dim);
        let j = (i + rng.gen_range(1..dim)) % dim;
        plan.push((i, j, rng.gen_range(0.0..std::f64::consts::TAU)));
    }
    let apply = |e: &LabeledEmbedding| {
        let mut v = e.vector().to_vec();
        for &(i, j, theta) in &plan {
            v = rotate(&v, i, j, theta);
        }
        LabeledEmbedding::new(v, e.identity).unwrap()
    };
    let gallery_r: Vec<LabeledEmbedding> = gallery.iter().map(apply).collect();
    let probes_r: Vec<LabeledEmbedding> = probes.iter().map(apply).collect();
    assert_eq!(rank1(&gallery_r, &probes_r).unwrap(), base);
}
