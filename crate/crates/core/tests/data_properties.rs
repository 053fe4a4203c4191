use deft_core::csvfmt::{format_value, Table};
use deft_core::data::{generate_dynamic_sbm, parse_snapshots, snapshots_to_text, SbmConfig};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sbm_text_round_trip(seed in 0u64..10_000, n in 4usize..40, t in 1usize..6, labels: bool) {
        let cfg = SbmConfig {
            n_nodes: n,
            n_snapshots: t,
            seed,
            edge_labels: labels,
            ..Default::default()
        };
        let g = generate_dynamic_sbm(&cfg).unwrap();
        let text = snapshots_to_text(&g);
        prop_assert_eq!(parse_snapshots(&text).unwrap(), g);
    }

    #[test]
    fn drift_moves_exact_count(seed in 0u64..10_000, drift in 0.0f64..0.5) {
        let cfg = SbmConfig {
            n_nodes: 30,
            n_snapshots: 3,
            drift_fraction: drift,
            seed,
            ..Default::default()
        };
        let g = generate_dynamic_sbm(&cfg).unwrap();
        for w in g.snapshots().windows(2) {
            let (a, b) = (w[0].node_labels().unwrap(), w[1].node_labels().unwrap());
            let moved = a.iter().zip(b).filter(|(x, y)| x != y).count();
            prop_assert_eq!(moved, cfg.moved_per_step());
        }
    }

    #[test]
    fn csv_tables_parse_back(values in proptest::collection::vec(-1e9f64..1e9, 1..20)) {
        let mut t = Table::new(["i", "v"]);
        for (i, v) in values.iter().enumerate() {
            t.push(vec![i.to_string(), format_value(*v)]);
        }
        let back = Table::parse_strict(&t.to_csv()).unwrap();
        let parsed = back.column_f64("v").unwrap();
        for (p, v) in parsed.iter().zip(&values) {
            prop_assert!((p - v).abs() <= 1e-7 * v.abs());
        }
    }
}
