//! Seeded, restarted k-means (k = 2) over premium-resource features.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::CityAttributes;

use super::{CityGrouping, GroupScheme, Result, StructureError};

/// Splits cities into premium and non-premium by k-means (k = 2) on
/// z-scored (universities, bullet_trains). Runs `restarts` seeded
/// initializations and keeps the lowest within-cluster sum of squares;
/// the cluster whose centroid has the larger norm in standardized space
/// is labeled premium. Cities are processed in sorted id order, so the
/// outcome does not depend on input order.
pub fn kmeans_premium(attrs: &[CityAttributes], seed: u64, restarts: u32) -> Result<CityGrouping> {
    if attrs.len() < 2 {
        return Err(StructureError::EmptyInput);
    }
    let mut ordered: Vec<&CityAttributes> = attrs.iter().collect();
    ordered.sort_by(|a, b| a.city.cmp(&b.city));

    let mut points = Vec::with_capacity(ordered.len());
    for a in &ordered {
        let universities = a.universities.ok_or_else(|| StructureError::MissingFeature {
            city: a.city.clone(),
            feature: "universities".into(),
        })? as f64;
        let trains = a.bullet_trains.ok_or_else(|| StructureError::MissingFeature {
            city: a.city.clone(),
            feature: "bullet_trains".into(),
        })? as f64;
        points.push([universities, trains]);
    }

    let standardized = zscore(&points);
    if standardized
        .iter()
        .all(|p| p == &standardized[0])
    {
        return Err(StructureError::DegenerateClustering);
    }

    let restarts = restarts.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<usize>, [[f64; 2]; 2])> = None;
    for _ in 0..restarts {
        let (wcss, assignment, centroids) = lloyd(&standardized, &mut rng);
        if best.as_ref().is_none_or(|(best_wcss, _, _)| wcss < *best_wcss) {
            best = Some((wcss, assignment, centroids));
        }
    }
    let (_, assignment, centroids) = best.expect("at least one restart");

    let norm = |c: &[f64; 2]| c[0] * c[0] + c[1] * c[1];
    let premium_cluster = if norm(&centroids[0]) >= norm(&centroids[1]) { 0 } else { 1 };

    let (advantaged, other) = GroupScheme::Premium.labels();
    let mut labels = BTreeMap::new();
    for (attr, &cluster) in ordered.iter().zip(&assignment) {
        let label = if cluster == premium_cluster { advantaged } else { other };
        labels.insert(attr.city.clone(), label.to_string());
    }
    let ordered_centroids = vec![
        centroids[premium_cluster].to_vec(),
        centroids[1 - premium_cluster].to_vec(),
    ];
    Ok(CityGrouping::new(
        GroupScheme::Premium,
        labels,
        Some(ordered_centroids),
    ))
}

/// Column z-scores with sample standard deviation; a constant column maps
/// to zero so the other feature alone drives the clustering.
fn zscore(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let n = points.len() as f64;
    let mut out = vec![[0.0; 2]; points.len()];
    for d in 0..2 {
        let mean = points.iter().map(|p| p[d]).sum::<f64>() / n;
        let var = points.iter().map(|p| (p[d] - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let sd = var.sqrt();
        for (o, p) in out.iter_mut().zip(points) {
            o[d] = if sd > 0.0 { (p[d] - mean) / sd } else { 0.0 };
        }
    }
    out
}

fn squared_distance(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// One Lloyd run from a k-means++ style initialization.
fn lloyd(points: &[[f64; 2]], rng: &mut ChaCha8Rng) -> (f64, Vec<usize>, [[f64; 2]; 2]) {
    let n = points.len();
    let first = rng.gen_range(0..n);
    // Second seed drawn proportional to squared distance from the first.
    let weights: Vec<f64> = points.iter().map(|p| squared_distance(p, &points[first])).collect();
    let total: f64 = weights.iter().sum();
    let second = if total > 0.0 {
        let mut draw = rng.gen_range(0.0..total);
        let mut chosen = n - 1;
        for (i, w) in weights.iter().enumerate() {
            if draw < *w {
                chosen = i;
                break;
            }
            draw -= w;
        }
        chosen
    } else {
        (first + 1) % n
    };

    let mut centroids = [points[first], points[second]];
    let mut assignment = vec![0usize; n];
    for _ in 0..100 {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let cluster =
                if squared_distance(p, &centroids[0]) <= squared_distance(p, &centroids[1]) {
                    0
                } else {
                    1
                };
            if assignment[i] != cluster {
                assignment[i] = cluster;
                changed = true;
            }
        }
        let mut sums = [[0.0; 2]; 2];
        let mut counts = [0usize; 2];
        for (p, &c) in points.iter().zip(&assignment) {
            sums[c][0] += p[0];
            sums[c][1] += p[1];
            counts[c] += 1;
        }
        for c in 0..2 {
            if counts[c] == 0 {
                // Re-seed an empty cluster with the point farthest from the
                // other centroid.
                let other = 1 - c;
                let far = points
                    .iter()
                    .enumerate()
                    .max_by(|(_, a), (_, b)| {
                        squared_distance(a, &centroids[other])
                            .partial_cmp(&squared_distance(b, &centroids[other]))
                            .unwrap()
                    })
                    .map(|(i, _)| i)
                    .unwrap();
                centroids[c] = points[far];
                changed = true;
            } else {
                centroids[c] = [sums[c][0] / counts[c] as f64, sums[c][1] / counts[c] as f64];
            }
        }
        if !changed {
            break;
        }
    }
    let wcss: f64 = points
        .iter()
        .zip(&assignment)
        .map(|(p, &c)| squared_distance(p, &centroids[c]))
        .sum();
    (wcss, assignment, centroids)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn city(name: &str, universities: u64, trains: u64) -> CityAttributes {
        let mut a = CityAttributes::new(name);
        a.universities = Some(universities);
        a.bullet_trains = Some(trains);
        a
    }

    #[test]
    fn well_separated_points_cluster_cleanly() {
        let attrs = vec![
            city("a", 0, 0),
            city("b", 0, 1),
            city("c", 10, 10),
            city("d", 10, 11),
        ];
        let g = kmeans_premium(&attrs, 7, 10).unwrap();
        assert_eq!(g.group_of("a"), Some("non-premium"));
        assert_eq!(g.group_of("b"), Some("non-premium"));
        assert_eq!(g.group_of("c"), Some("premium"));
        assert_eq!(g.group_of("d"), Some("premium"));
        assert!(g.centroids.is_some());
    }

    #[test]
    fn identical_points_are_degenerate() {
        let attrs = vec![city("a", 5, 5), city("b", 5, 5), city("c", 5, 5)];
        assert!(matches!(
            kmeans_premium(&attrs, 1, 10),
            Err(StructureError::DegenerateClustering)
        ));
    }

    #[test]
    fn missing_feature_reported() {
        let mut bad = CityAttributes::new("x");
        bad.universities = Some(1);
        let attrs = vec![city("a", 0, 0), bad];
        assert!(matches!(
            kmeans_premium(&attrs, 1, 10),
            Err(StructureError::MissingFeature { feature, .. }) if feature == "bullet_trains"
        ));
    }

    #[test]
    fn input_order_does_not_matter() {
        let mut attrs = vec![
            city("a", 0, 0),
            city("b", 1, 2),
            city("c", 12, 180),
            city("d", 9, 220),
            city("e", 0, 3),
        ];
        let forward = kmeans_premium(&attrs, 42, 10).unwrap();
        attrs.reverse();
        let reversed = kmeans_premium(&attrs, 42, 10).unwrap();
        for a in &attrs {
            assert_eq!(forward.group_of(&a.city), reversed.group_of(&a.city));
        }
    }

    #[test]
    fn high_resource_city_lands_in_premium_group() {
        // Table-style fixture: one Beijing-like city, many zero-resource ones.
        let mut attrs = vec![city("Beijing", 35, 349)];
        for i in 0..9 {
            attrs.push(city(&format!("town{i}"), 0, i % 3));
        }
        let g = kmeans_premium(&attrs, 9, 10).unwrap();
        assert_eq!(g.group_of("Beijing"), Some("premium"));
        assert_eq!(g.count_of("premium"), 1);
    }

    #[test]
    fn constant_feature_falls_back_to_other_axis() {
        let attrs = vec![
            city("a", 3, 0),
            city("b", 3, 2),
            city("c", 3, 100),
            city("d", 3, 110),
        ];
        let g = kmeans_premium(&attrs, 5, 10).unwrap();
        assert_eq!(g.group_of("c"), g.group_of("d"));
        assert_eq!(g.group_of("a"), g.group_of("b"));
        assert_ne!(g.group_of("a"), g.group_of("c"));
    }
}
