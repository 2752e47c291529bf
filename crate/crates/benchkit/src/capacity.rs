//! Memory needed for a glass of a given size.

use std::fmt::Write as _;

use glass::bitops::TrieGeometry;
use glass::nodepool::{CapacityModel, HandleWidth};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CapacityRow {
    pub size: u64,
    pub nodes: u64,
    pub bytes: u64,
    pub addressable: bool,
}

impl CapacityRow {
    pub fn cell(&self) -> String {
        if self.addressable {
            format_bytes(self.bytes)
        } else {
            "N/A".to_string()
        }
    }
}

/// Binary units, printed as `Kb` and `Mb`.
pub fn format_bytes(bytes: u64) -> String {
    const KIB: f64 = 1024.0;
    let b = bytes as f64;
    if b < KIB * KIB {
        format!("{:.2} Kb", b / KIB)
    } else {
        format!("{:.2} Mb", b / (KIB * KIB))
    }
}

/// Rows for the reference geometry `K = 50`, `C = 5`.
pub fn capacity_report(width: HandleWidth, sizes: &[u64]) -> Vec<CapacityRow> {
    let geo = TrieGeometry::new(50, 5).expect("reference geometry");
    let model = CapacityModel::new(geo, width);
    sizes
        .iter()
        .map(|&size| CapacityRow {
            size,
            nodes: model.bound_for_size(size),
            bytes: model.bytes_for_size(size),
            addressable: model.addressable(size),
        })
        .collect()
}

pub fn report_to_text(rows: &[CapacityRow]) -> String {
    let mut out = String::from("size nodes memory\n");
    for r in rows {
        let _ = writeln!(out, "{} {} {}", r.size, r.nodes, r.cell());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn units() {
        assert_eq!(format_bytes(347_184), "339.05 Kb");
        assert_eq!(format_bytes(1 << 20), "1.00 Mb");
        assert_eq!(format_bytes(0), "0.00 Kb");
    }

    #[test]
    fn sixteen_bit_table() {
        let rows = capacity_report(HandleWidth::W16, &[900, 9000, 90_000]);
        let cells: Vec<String> = rows.iter().map(CapacityRow::cell).collect();
        assert_eq!(cells, ["339.05 Kb", "2.93 Mb", "N/A"]);
        assert_eq!(rows[0].nodes, 7233);
    }
}
