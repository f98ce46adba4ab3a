//! The bundled layout file must stay in sync with the built-in preset
//! (regenerate with the export_preset example).

use qvn_core::layout::{load_layout_str, resource_table};
use qvn_core::quantum4004_preset;

const BUNDLED: &str = include_str!("../data/quantum4004.json");

#[test]
fn bundled_file_matches_preset() {
    let loaded = load_layout_str(BUNDLED).unwrap();
    let preset = quantum4004_preset();
    assert_eq!(loaded.zones.len(), preset.zones.len());
    assert_eq!(loaded.tracks.len(), preset.tracks.len());
    assert_eq!(loaded.junctions.len(), preset.junctions.len());
    assert_eq!(loaded.total_segments(), preset.total_segments());
    assert_eq!(loaded.total_dacs(), preset.total_dacs());
    assert_eq!(loaded.size_ul, preset.size_ul);
    for (a, b) in loaded.tracks.iter().zip(&preset.tracks) {
        assert_eq!(a.pair_base, b.pair_base);
    }
}

#[test]
fn bundled_file_estimates_round_trip() {
    let loaded = load_layout_str(BUNDLED).unwrap();
    let a = serde_json::to_value(resource_table(&loaded)).unwrap();
    let b = serde_json::to_value(resource_table(&quantum4004_preset())).unwrap();
    assert_eq!(a, b);
}
