//! Randomized invariants over the public API.

use proptest::prelude::*;
use std::collections::BTreeSet;

use laborscape::crosswalk::{aggregate_votes, transfer_risk, VoteMatrix};
use laborscape::dataset::{EmploymentTable, OccupationId, RiskTable, TableSchema};
use laborscape::metrics::{self, normalized_entropy, RcaMatrix};
use laborscape::occspace;
use laborscape::regress;

/// Small random employment table: every row has at least one positive count.
fn employment_strategy() -> impl Strategy<Value = EmploymentTable> {
    (2usize..=5, 2usize..=5)
        .prop_flat_map(|(n_cities, n_occs)| {
            let counts = proptest::collection::vec(0u64..40, n_cities * n_occs);
            (Just(n_cities), Just(n_occs), counts)
        })
        .prop_map(|(n_cities, n_occs, mut counts)| {
            for i in 0..n_cities {
                let row = &mut counts[i * n_occs..(i + 1) * n_occs];
                if row.iter().all(|&c| c == 0) {
                    row[i % n_occs] = 1;
                }
            }
            EmploymentTable::from_parts(
                (0..n_cities).map(|i| format!("c{i}")).collect(),
                (0..n_occs).map(|j| OccupationId::new(format!("o{j}"))).collect(),
                counts,
            )
            .expect("constructed table is valid")
        })
}

proptest! {
    #[test]
    fn table_round_trips_through_both_schemas(emp in employment_strategy()) {
        let dir = tempfile::tempdir().unwrap();
        for (i, schema) in [TableSchema::Wide, TableSchema::Long].into_iter().enumerate() {
            let path = dir.path().join(format!("t{i}.csv"));
            emp.write(&path, schema).unwrap();
            let back = EmploymentTable::load(&path, schema).unwrap();
            prop_assert_eq!(&back, &emp);
        }
    }

    #[test]
    fn entropy_is_permutation_and_scale_invariant(
        mut counts in proptest::collection::vec(1u64..60, 2..8),
        scale in 2u64..9,
    ) {
        let h = normalized_entropy(&counts);
        prop_assert!((0.0..=1.0).contains(&h));
        let scaled: Vec<u64> = counts.iter().map(|c| c * scale).collect();
        prop_assert!((normalized_entropy(&scaled) - h).abs() < 1e-12);
        counts.reverse();
        prop_assert!((normalized_entropy(&counts) - h).abs() < 1e-12);
    }

    #[test]
    fn impact_rate_bounded_by_present_risks(emp in employment_strategy()) {
        let risk = RiskTable::from_pairs(
            emp.occupations()
                .iter()
                .enumerate()
                .map(|(j, o)| (o.code.clone(), (j as f64 * 0.17 + 0.05) % 1.0)),
        )
        .unwrap();
        for (i, city) in emp.cities().iter().enumerate() {
            let rate = metrics::impact_rate(&emp, &risk, city).unwrap();
            let present: Vec<f64> = emp
                .occupations()
                .iter()
                .zip(emp.row(i))
                .filter(|(_, &c)| c > 0)
                .map(|(o, _)| risk.get(&o.code).unwrap())
                .collect();
            let lo = present.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = present.iter().cloned().fold(0.0f64, f64::max);
            prop_assert!(rate >= lo - 1e-12 && rate <= hi + 1e-12);
        }
    }

    #[test]
    fn rca_share_weighted_mean_is_one(emp in employment_strategy()) {
        let rca = metrics::rca(&emp).unwrap();
        let grand = emp.grand_total() as f64;
        for j in 0..emp.occupations().len() {
            let national: u64 = (0..emp.cities().len()).map(|i| emp.row(i)[j]).sum();
            if national == 0 {
                continue;
            }
            let weighted: f64 = (0..emp.cities().len())
                .map(|i| (emp.city_total(i) as f64 / grand) * rca.value(i, j))
                .sum();
            prop_assert!((weighted - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn proximity_symmetric_in_unit_range(
        advantage in proptest::collection::vec(proptest::collection::vec(any::<bool>(), 4), 3..8),
    ) {
        let n_occs = 4;
        let values: Vec<f64> = advantage
            .iter()
            .flat_map(|row| row.iter().map(|&a| if a { 1.5 } else { 0.0 }))
            .collect();
        let rca = RcaMatrix::from_parts(
            (0..advantage.len()).map(|i| format!("c{i}")).collect(),
            (0..n_occs).map(|j| format!("o{j}")).collect(),
            values,
        );
        let prox = occspace::proximity(&rca, 1.0);
        for i in 0..n_occs {
            prop_assert_eq!(prox.value(i, i), 0.0);
            for j in 0..n_occs {
                let v = prox.value(i, j);
                prop_assert!((0.0..=1.0).contains(&v));
                prop_assert_eq!(v, prox.value(j, i));
            }
        }
    }

    #[test]
    fn lowering_threshold_only_adds_edges(
        advantage in proptest::collection::vec(proptest::collection::vec(any::<bool>(), 5), 4..9),
        t_low in 0.05f64..0.5,
        t_gap in 0.05f64..0.4,
    ) {
        let values: Vec<f64> = advantage
            .iter()
            .flat_map(|row| row.iter().map(|&a| if a { 1.5 } else { 0.0 }))
            .collect();
        let rca = RcaMatrix::from_parts(
            (0..advantage.len()).map(|i| format!("c{i}")).collect(),
            (0..5).map(|j| format!("o{j}")).collect(),
            values,
        );
        let prox = occspace::proximity(&rca, 1.0);
        let loose = occspace::build_network(&prox, t_low);
        let tight = occspace::build_network(&prox, t_low + t_gap);
        for e in tight.edges() {
            prop_assert!(
                loose.edges().iter().any(|f| f.a == e.a && f.b == e.b),
                "edge lost when threshold lowered"
            );
        }
    }

    #[test]
    fn ols_satisfies_normal_equations(
        ys in proptest::collection::vec(-50.0f64..50.0, 5..20),
        jitter in proptest::collection::vec(0.0f64..0.2, 5..20),
    ) {
        let n = ys.len().min(jitter.len());
        let xs: Vec<f64> = (0..n).map(|i| i as f64 + jitter[i]).collect();
        let ys = &ys[..n];
        let fit = regress::ols(&xs, ys).unwrap();
        let residuals: Vec<f64> = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| y - (fit.intercept + fit.beta * x))
            .collect();
        let sum: f64 = residuals.iter().sum();
        let dot: f64 = residuals.iter().zip(&xs).map(|(e, x)| e * x).sum();
        prop_assert!(sum.abs() < 1e-7, "residual sum {sum}");
        prop_assert!(dot.abs() < 1e-6, "residual-x dot {dot}");
        prop_assert!((0.0..=1.0).contains(&fit.r_squared));
        prop_assert!((0.0..=1.0).contains(&fit.p_value));
    }

    #[test]
    fn transferred_risk_stays_in_unit_interval(
        rows in proptest::collection::vec(proptest::collection::vec(0u32..4, 4), 2..6),
        risks in proptest::collection::vec(0.0f64..=1.0, 4),
    ) {
        let n_targets = rows.len();
        let targets: Vec<String> = (0..n_targets).map(|i| format!("t{i}")).collect();
        let sources: Vec<String> = (0..4).map(|j| format!("k{j}")).collect();
        let votes: Vec<u32> = rows.iter().flatten().copied().collect();
        let matrix = VoteMatrix::new(targets.clone(), sources.clone(), votes, 3).unwrap();
        let (crosswalk, queue) = aggregate_votes(&matrix, 2);
        let source_risk = RiskTable::from_pairs(
            sources.iter().cloned().zip(risks.iter().copied()),
        )
        .unwrap();
        // unresolved rows are overridden to zero so the transfer can run
        let overrides: BTreeSet<String> = queue.into_iter().collect();
        let out = transfer_risk(&crosswalk, &source_risk, &overrides).unwrap();
        for (_, value) in out.iter() {
            prop_assert!((0.0..=1.0).contains(&value));
        }
    }

    #[test]
    fn vote_column_permutation_permutes_output(
        rows in proptest::collection::vec(proptest::collection::vec(0u32..4, 4), 2..5),
    ) {
        let n_targets = rows.len();
        let targets: Vec<String> = (0..n_targets).map(|i| format!("t{i}")).collect();
        let sources: Vec<String> = (0..4).map(|j| format!("k{j}")).collect();
        let votes: Vec<u32> = rows.iter().flatten().copied().collect();
        let matrix = VoteMatrix::new(targets.clone(), sources.clone(), votes, 3).unwrap();
        let (base, _) = aggregate_votes(&matrix, 2);

        // rotate columns left by one
        let rotated_sources: Vec<String> =
            (0..4).map(|j| sources[(j + 1) % 4].clone()).collect();
        let rotated_votes: Vec<u32> = rows
            .iter()
            .flat_map(|row| (0..4).map(|j| row[(j + 1) % 4]).collect::<Vec<_>>())
            .collect();
        let rotated = VoteMatrix::new(targets, rotated_sources, rotated_votes, 3).unwrap();
        let (permuted, _) = aggregate_votes(&rotated, 2);
        for i in 0..n_targets {
            for j in 0..4 {
                prop_assert_eq!(base.entry(i, (j + 1) % 4), permuted.entry(i, j));
            }
        }
    }
}
