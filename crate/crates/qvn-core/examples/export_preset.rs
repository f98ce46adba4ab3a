//! Regenerate the bundled Quantum 4004 layout file:
//!
//!     cargo run -p qvn-core --example export_preset > crates/qvn-core/data/quantum4004.json

fn main() {
    let layout = qvn_core::quantum4004_preset();
    println!("{}", serde_json::to_string_pretty(&layout).unwrap());
}
