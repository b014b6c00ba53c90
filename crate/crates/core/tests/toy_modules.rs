use spikeplace::data::{generate_synthetic_dataset, PlaceDataset, PreprocessConfig, SYNTH_SIDE};
use spikeplace::modular::{
    argmax, detect_hyperactive, module_response, train_modular, train_module, MemberSeeds, ModularTraining,
    ModuleSeeds, ThetaRegime,
};
use spikeplace::seed::rng_from_seed;
use spikeplace::SimulationParams;

fn params(k_e: usize) -> SimulationParams {
    SimulationParams {
        k_e,
        k_i: k_e,
        ..SimulationParams::default()
    }
}

fn normalized_reference(places: usize, seed: u64) -> PlaceDataset {
    let mut reference = generate_synthetic_dataset(places, 0.0, 0.0, seed).unwrap().reference;
    reference.patch_normalize(&PreprocessConfig::default()).unwrap();
    reference
}

fn seeds(base: u64) -> ModuleSeeds {
    ModuleSeeds {
        weight_seed: base,
        shuffle_seed: Some(base + 1),
        sim_seed: base + 2,
    }
}

#[test]
fn orthogonal_patterns_separate_by_assignment() {
    let half = 28 * 14;
    let a: Vec<f64> = (0..784).map(|i| if i < half { 255.0 } else { 0.0 }).collect();
    let b: Vec<f64> = (0..784).map(|i| if i >= half { 255.0 } else { 0.0 }).collect();
    let reference = PlaceDataset::reference(vec![a.clone(), b.clone()]);
    let module = train_module(&reference, &[0, 1], &params(10), 30, seeds(1)).unwrap();
    assert!(module.assignments.iter().all(|&p| p < 2));

    let mut rng = rng_from_seed(8);
    let on_a = module_response(&module, &a, &mut rng).unwrap();
    let on_b = module_response(&module, &b, &mut rng).unwrap();
    assert!(on_a[0] > on_a[1], "pattern A responses {on_a:?}");
    assert!(on_b[1] > on_b[0], "pattern B responses {on_b:?}");
}

#[test]
fn module_recognizes_its_training_images() {
    let reference = normalized_reference(25, 4);
    let ids: Vec<usize> = (0..25).collect();
    let module = train_module(&reference, &ids, &params(400), 30, seeds(10)).unwrap();
    let hits = ids
        .iter()
        .filter(|&&p| {
            let mut rng = rng_from_seed(100 + p as u64);
            let response = module_response(&module, reference.image(p), &mut rng).unwrap();
            module.trained_place_ids[argmax(&response)] == p
        })
        .count();
    assert!(hits >= 23, "{hits}/25 probes recognized");
}

#[test]
fn two_module_queries_land_in_their_module() {
    let reference = normalized_reference(10, 6);
    let training = ModularTraining {
        kappa: 5,
        epochs: 10,
        theta: ThetaRegime::Fixed { value: f64::MAX },
        detection_subsample: None,
    };
    let member = MemberSeeds {
        weight_seed: 21,
        shuffle_seed: Some(22),
        theta_seed: 23,
    };
    let snn = train_modular(&reference, &params(100), &training, member).unwrap();
    let second = &snn.modules[1].trained_place_ids;
    let hits = second
        .iter()
        .filter(|&&p| {
            let column = snn.similarity_column(reference.image(p), 500 + p as u64).unwrap();
            second.contains(&argmax(&column))
        })
        .count();
    assert!(hits * 10 >= second.len() * 9, "{hits}/{} probes in module 2", second.len());
}

#[test]
fn cloned_strong_row_is_the_only_hyperactive_neuron() {
    let reference = normalized_reference(15, 12);
    let mut module = train_module(&reference, &[0, 1, 2, 3, 4], &params(50), 5, seeds(30)).unwrap();

    // neuron 0 gets the strongest afferent weights of any neuron for every input
    let syn = &mut module.network.syn;
    for p in 0..syn.k_p {
        let row = &mut syn.w_pe[p * syn.k_e..(p + 1) * syn.k_e];
        let max = row.iter().copied().fold(0.0, f64::max);
        row[0] = (max * 3.0).min(1.0);
    }
    module.network.theta[0] = 0.0;

    detect_hyperactive(&mut module, &reference, f64::MAX, None).unwrap();
    let totals = module.reference_totals.clone();
    let mut sorted = totals.clone();
    sorted.sort_unstable();
    let median = sorted[sorted.len() / 2];
    let runner_up = totals[1..].iter().copied().max().unwrap();
    assert!(totals[0] > median && totals[0] > runner_up, "totals {totals:?}");

    let theta = (runner_up + totals[0]) as f64 / 2.0;
    module.apply_threshold(theta).unwrap();
    let expected: Vec<bool> = (0..50).map(|e| e == 0).collect();
    assert_eq!(module.hyperactive, expected);
}

#[test]
fn synthetic_noise_matches_half_normal_mean() {
    let sigma = 20.0;
    let data = generate_synthetic_dataset(100, sigma, 0.1, 2).unwrap();
    let expected = sigma * (2.0 / std::f64::consts::PI).sqrt();
    let mut sum = 0.0;
    let mut count = 0usize;
    for (q, occ) in data.occlusions.iter().enumerate() {
        let (r, s) = (data.reference.image(q), data.query.image(q));
        for y in 0..SYNTH_SIDE {
            for x in 0..SYNTH_SIDE {
                if occ.is_some_and(|o| o.contains(x, y)) {
                    continue;
                }
                let i = y * SYNTH_SIDE + x;
                sum += (r[i] - s[i]).abs();
                count += 1;
            }
        }
    }
    let mean = sum / count as f64;
    assert!((mean - expected).abs() <= 0.15 * expected, "mean abs diff {mean}, expected {expected}");
}
