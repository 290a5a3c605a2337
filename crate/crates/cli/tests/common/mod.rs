//! Helpers shared by the CLI test targets.

use std::collections::BTreeMap;
use std::path::Path;

/// Every file under `dir`, keyed by relative path.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, acc: &mut BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                walk(root, &p, acc);
            } else {
                let key = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                acc.insert(key, std::fs::read(&p).unwrap());
            }
        }
    }
    let mut acc = BTreeMap::new();
    if dir.exists() {
        walk(dir, dir, &mut acc);
    }
    acc
}

/// Deterministic pseudo-random walk prices for `tickers` over `days` dates.
pub fn write_prices(path: &Path, tickers: &[&str], days: usize, constant: &[usize]) {
    let mut state = 0x2545F4914F6CDD1Du64;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let mut text = format!("date,{}\n", tickers.join(","));
    let mut prices = vec![100.0f64; tickers.len()];
    for d in 0..days {
        let date = format!("{}-{:02}-{:02}", 2000 + d / 336, (d / 28) % 12 + 1, d % 28 + 1);
        for (i, p) in prices.iter_mut().enumerate() {
            if !constant.contains(&i) {
                *p *= (0.02 * next()).exp();
            }
        }
        let cells: Vec<String> = prices.iter().map(|p| format!("{p:.6}")).collect();
        text.push_str(&format!("{date},{}\n", cells.join(",")));
    }
    std::fs::write(path, text).unwrap();
}
