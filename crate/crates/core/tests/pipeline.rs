use std::collections::BTreeMap;

use fdkit_core::dgs::{build_notch_model, NotchModelConfig};
use fdkit_core::layout::{build_stage, validate, Stage};
use fdkit_core::microstrip::{synthesize_patch, Substrate, SynthesisOptions};
use fdkit_core::mimo::{ecc, isolation_report, BandSpec, IsolationThresholds};
use fdkit_core::rfnet::network_checks;
use fdkit_core::silink::{residual_si, stage_compare, SiBudget};
use fdkit_core::touchstone::{self, DataFormat, TouchstoneDocument};

#[test]
fn synthesized_patch_drops_into_stage_one_layout() {
    let sub = Substrate::rt5880_1p6mm();
    let g = synthesize_patch(5.9e9, &sub, &SynthesisOptions::default()).unwrap();
    let overrides: BTreeMap<String, f64> = [
        ("l_p", g.l_p),
        ("w_p", g.w_p),
        ("l_1", g.l_1),
        ("g_1", g.g_1),
        ("w_f", g.w_f),
        ("l_f", g.l_f),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v * 1e3))
    .collect();
    let layout = build_stage(Stage::I, &overrides).unwrap();
    let report = validate(&layout);
    assert!(report.is_clean(), "{:?}", report.violations);
    assert!((layout.dimension("w_p").unwrap() - g.w_p).abs() < 1e-15);
}

#[test]
fn notch_model_survives_touchstone_and_feeds_budget() {
    let model = build_notch_model(&NotchModelConfig::two_slot_default().unwrap()).unwrap();
    let checks = network_checks(&model.network);
    assert!(checks.is_reciprocal() && checks.is_passive());

    let text = touchstone::write(
        &TouchstoneDocument::new(model.network.clone(), DataFormat::RI),
        DataFormat::RI,
    );
    let back = touchstone::parse(&text, Some(2)).unwrap().network;

    let band = BandSpec::its_5p9();
    let iso = isolation_report(&back, &band, &IsolationThresholds::uniform(Some(30.0), None)).unwrap();
    let pair = iso.pair(1, 2).unwrap();
    assert!(
        (pair.center_isolation_db() - 41.28).abs() < 0.01,
        "{}",
        pair.center_isolation_db()
    );

    // transmission through the notch reads as SI coupling from port 1 into port 2
    let si = SiBudget::from_network(-38.2, -90.0, &back, 1, 0).unwrap();
    let points = residual_si(&si);
    let k = back.grid().nearest_index(5.9e9);
    assert!((points[k].si_level_dbm - (-38.2 - 41.28)).abs() < 0.01);

    let bare_cfg = NotchModelConfig {
        with_slots: false,
        ..NotchModelConfig::two_slot_default().unwrap()
    };
    let bare = build_notch_model(&bare_cfg).unwrap().network;
    let cmp = stage_compare(&bare, &back, &band, 1, 0).unwrap();
    // the notch is narrower than the band, so the edges gain far less than the centre
    assert!(cmp.center_db > 40.0, "{}", cmp.center_db);
    assert!(
        cmp.band_min_db > 5.0 && cmp.band_min_db < cmp.center_db,
        "{}",
        cmp.band_min_db
    );

    // reflection-dominated two-port: the pair still has a defined, small ECC
    let e = ecc(&back, 0, 1).unwrap();
    assert!(e.values.iter().all(|v| v.is_nan() || (0.0..=1.0 + 1e-9).contains(v)));
}
