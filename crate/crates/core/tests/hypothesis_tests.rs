// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

use homotest::community_detection::Detector;
use homotest::graph::CommunityAssignment;
use homotest::hypothesis_tests::*;
use homotest::null_models::*;
use homotest::rng::stream;

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let model = ModelSpec::Sbm {
        n: 60,
        k: Some(2),
        p_in: Some(0.4),
        p_out: Some(0.2),
        labels: None,
        omega: None,
    };
    let g = model
        .build(&mut stream(1, 0))
        .unwrap()
        .sample(&mut stream(1, 1));
    for (null, detector) in [
        (fit_er(&g).unwrap(), Detector::default()),
        (fit_chung_lu(&g).unwrap(), Detector::local_search()),
    ] {
        let one = pool(1).install(|| bootstrap_test(&g, &null, 40, &detector, 0.05, 77).unwrap());
        let many = pool(4).install(|| bootstrap_test(&g, &null, 40, &detector, 0.05, 77).unwrap());
        assert_eq!(one.to_json().unwrap(), many.to_json().unwrap());
    }
}

#[test]
fn p_value_is_exact_count() {
    let model = ModelSpec::Er { n: 40, p: 0.2 };
    let g = model
        .build(&mut stream(2, 0))
        .unwrap()
        .sample(&mut stream(2, 1));
    let r = bootstrap_test(&g, &fit_er(&g).unwrap(), 100, &Detector::default(), 0.05, 5).unwrap();
    let hits = r
        .bootstrap_samples
        .iter()
        .filter(|&&t| t >= r.t_obs)
        .count();
    assert_eq!(r.p_value, Some(hits as f64 / 100.0));
    assert_eq!(r.reject, r.p_value.unwrap() < 0.05);
    assert_eq!(r.bootstrap_samples.len(), r.b);
}

#[test]
fn planted_labels_reject_under_er_null() {
    let model = ModelSpec::Sbm {
        n: 100,
        k: Some(2),
        p_in: Some(0.5),
        p_out: Some(0.1),
        labels: None,
        omega: None,
    };
    let built = model.build(&mut stream(3, 0)).unwrap();
    let g = built.sample(&mut stream(3, 1));
    let c = built.planted().unwrap();
    let r = labeled_bootstrap_test(&g, c, &fit_er(&g).unwrap(), 200, 0.05, 3).unwrap();
    assert_eq!(r.p_value, Some(0.0));
    assert!(r.labeled);
}

#[test]
fn labeled_p_values_are_roughly_uniform_under_the_null() {
    let n = 50;
    let c = CommunityAssignment::from_labels(&(0..n).map(|i| i % 2).collect::<Vec<_>>());
    let model = Model::Er(ErParams::new(n, 0.2).unwrap());
    let p_values: Vec<f64> = (0..200u64)
        .map(|r| {
            let g = model.sample(&mut stream(100, r));
            labeled_bootstrap_test(&g, &c, &fit_er(&g).unwrap(), 100, 0.05, r)
                .unwrap()
                .p_value
                .unwrap()
        })
        .collect();
    let mean = p_values.iter().sum::<f64>() / p_values.len() as f64;
    let small = p_values.iter().filter(|&&p| p < 0.05).count() as f64 / p_values.len() as f64;
    assert!((0.42..=0.58).contains(&mean), "mean p {mean}");
    assert!(small <= 0.10, "rate {small}");
    for q in [0.25, 0.5, 0.75] {
        let below = p_values.iter().filter(|&&p| p <= q).count() as f64 / p_values.len() as f64;
        assert!((below - q).abs() <= 0.1, "P(p <= {q}) = {below}");
    }
}

#[test]
fn threshold_forms_compared() {
    // Both forms shrink with n, but they count different assignment sets:
    // the general form is several times smaller than the equal-size form.
    for n in [100, 200] {
        let equal = asymptotic_threshold(n, 2, 0.05, 0.3, 0.0, true).unwrap();
        let general = asymptotic_threshold(n, 2, 0.05, 0.3, 0.0, false).unwrap();
        assert!(general < equal);
        let ratio = general / equal;
        assert!(ratio > 0.1 && ratio < 0.2, "n = {n}: ratio {ratio}");
    }
    let e100 = asymptotic_threshold(100, 2, 0.05, 0.3, 0.0, true).unwrap();
    let e200 = asymptotic_threshold(200, 2, 0.05, 0.3, 0.0, true).unwrap();
    assert!(e200 < e100);
    assert!((e100 - 0.79556).abs() < 1e-4);
    assert!((e200 - 0.55807).abs() < 1e-4);
}

#[test]
fn threshold_limit_at_trivial_count() {
    // K = n gives a single assignment; as alpha -> 1 only log 2 remains under the root.
    let c = asymptotic_threshold(5, 5, 0.999_999, 1.0, 0.0, false).unwrap();
    let expected = (2.0 * (2.0f64.ln() - 0.999_999f64.ln()) / 25.0).sqrt();
    assert!((c - expected).abs() < 1e-12);
}

fn asymptotic_rate(model: &ModelSpec, runs: u64, seed: u64) -> f64 {
    let rejections = (0..runs)
        .filter(|&r| {
            let g = model
                .build(&mut stream(seed, r))
                .unwrap()
                .sample(&mut stream(seed, r));
            asymptotic_test(&g, None, 0.05, 0.0, &Detector::default(), true, r)
                .unwrap()
                .reject
        })
        .count();
    rejections as f64 / runs as f64
}

#[test]
fn asymptotic_test_is_conservative_and_has_power() {
    let er = asymptotic_rate(&ModelSpec::Er { n: 200, p: 0.3 }, 100, 8);
    assert!(er <= 0.05, "ER rate {er}");
    let sbm = ModelSpec::Sbm {
        n: 200,
        k: Some(2),
        p_in: Some(0.45),
        p_out: Some(0.2),
        labels: None,
        omega: None,
    };
    let power = asymptotic_rate(&sbm, 100, 9);
    assert!(power > er, "SBM rate {power} vs ER rate {er}");
}
