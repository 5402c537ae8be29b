#![allow(dead_code)]

use qaideal::triangulation::{build_chart, parse_gluing, ChartPresentation};
use serde_json::Value;
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

pub const GLUED: [&str; 6] = ["trefoil", "fig8_2tet", "fig8_3tet", "knot_5_1", "knot_5_2", "knot_8_9"];

pub fn source(name: &str) -> String {
    std::fs::read_to_string(format!("{}/../../fixtures/{name}.json", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

pub fn fixture(name: &str) -> Value {
    serde_json::from_str(&source(name)).unwrap()
}

/// Charts are shared between tests in one binary.
pub fn chart(name: &str) -> ChartPresentation {
    static CACHE: OnceLock<Mutex<HashMap<String, ChartPresentation>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(c) = cache.lock().unwrap().get(name) {
        return c.clone();
    }
    let c = build_chart(&parse_gluing(&source(name)).unwrap()).unwrap();
    cache.lock().unwrap().insert(name.into(), c.clone());
    c
}
