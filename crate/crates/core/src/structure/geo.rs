//! Great-circle distances to the nearest elite city.

use std::collections::BTreeMap;
use std::path::Path;

use crate::dataset::CityAttributes;

use super::{Result, StructureError};

const EARTH_RADIUS_KM: f64 = 6371.0;

/// Haversine great-circle distance in kilometers.
pub fn haversine_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let phi1 = lat1.to_radians();
    let phi2 = lat2.to_radians();
    let dphi = (lat2 - lat1).to_radians();
    let dlambda = (lon2 - lon1).to_radians();
    let a = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    EARTH_RADIUS_KM * 2.0 * a.sqrt().min(1.0).asin()
}

/// Minimum haversine distance from each city to any elite coordinate.
/// The elite list may include cities outside the dataset; a city that is
/// itself at an elite coordinate gets 0.
pub fn distance_to_nearest_elite(
    attrs: &[CityAttributes],
    elite_coords: &[(f64, f64)],
) -> Result<BTreeMap<String, f64>> {
    if elite_coords.is_empty() {
        return Err(StructureError::EmptyInput);
    }
    let mut out = BTreeMap::new();
    for a in attrs {
        let (lat, lon) = match (a.latitude, a.longitude) {
            (Some(lat), Some(lon)) => (lat, lon),
            _ => return Err(StructureError::MissingCoordinates(a.city.clone())),
        };
        let nearest = elite_coords
            .iter()
            .map(|&(elat, elon)| haversine_km(lat, lon, elat, elon))
            .fold(f64::INFINITY, f64::min);
        out.insert(a.city.clone(), nearest);
    }
    Ok(out)
}

/// Loads a `name,lat,lon` coordinate list.
pub fn load_elite_coordinates(path: impl AsRef<Path>) -> Result<Vec<(String, f64, f64)>> {
    let content = std::fs::read_to_string(path.as_ref())?;
    let mut out = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let line_no = (i + 1) as u64;
        if i == 0 {
            if line.trim() != "name,lat,lon" {
                return Err(StructureError::MalformedRow {
                    line: 1,
                    message: "elite coordinates header must be 'name,lat,lon'".into(),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(StructureError::MalformedRow {
                line: line_no,
                message: "expected 3 fields".into(),
            });
        }
        let lat: f64 = fields[1].trim().parse().map_err(|_| StructureError::MalformedRow {
            line: line_no,
            message: format!("bad latitude '{}'", fields[1]),
        })?;
        let lon: f64 = fields[2].trim().parse().map_err(|_| StructureError::MalformedRow {
            line: line_no,
            message: format!("bad longitude '{}'", fields[2]),
        })?;
        if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
            return Err(StructureError::MalformedRow {
                line: line_no,
                message: format!("coordinates ({lat}, {lon}) out of range"),
            });
        }
        out.push((fields[0].trim().to_string(), lat, lon));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn city_at(name: &str, lat: f64, lon: f64) -> CityAttributes {
        let mut a = CityAttributes::new(name);
        a.latitude = Some(lat);
        a.longitude = Some(lon);
        a
    }

    #[test]
    fn coincident_points_are_zero() {
        assert_eq!(haversine_km(39.9, 116.4, 39.9, 116.4), 0.0);
    }

    #[test]
    fn known_pair_matches_oracle() {
        // Beijing center to a point near Tianjin, hand-checked: ~102.8 km.
        let d = haversine_km(39.9042, 116.4074, 39.3434, 117.3616);
        assert!(d > 102.0 && d < 105.0, "distance {d}");
        assert!((d - 102.7973361486524).abs() < 1e-6);
    }

    #[test]
    fn antipodal_pair_is_half_circumference() {
        let d = haversine_km(0.0, 0.0, 0.0, 180.0);
        assert!((d - 20015.086796020572).abs() < 1.0);
    }

    #[test]
    fn symmetric_and_triangle_inequality() {
        let pts = [
            (39.9, 116.4),
            (31.2, 121.5),
            (23.1, 113.3),
            (-33.9, 151.2),
        ];
        for &(a1, o1) in &pts {
            for &(a2, o2) in &pts {
                let d12 = haversine_km(a1, o1, a2, o2);
                let d21 = haversine_km(a2, o2, a1, o1);
                assert!((d12 - d21).abs() < 1e-9);
                for &(a3, o3) in &pts {
                    let d13 = haversine_km(a1, o1, a3, o3);
                    let d32 = haversine_km(a3, o3, a2, o2);
                    assert!(d12 <= d13 + d32 + 1e-6);
                }
            }
        }
    }

    #[test]
    fn nearest_elite_takes_minimum_over_list() {
        let attrs = vec![city_at("x", 30.0, 110.0), city_at("y", 39.9042, 116.4074)];
        let elites = vec![(39.9042, 116.4074), (31.2304, 121.4737)];
        let d = distance_to_nearest_elite(&attrs, &elites).unwrap();
        assert_eq!(d["y"], 0.0);
        let direct0 = haversine_km(30.0, 110.0, 39.9042, 116.4074);
        let direct1 = haversine_km(30.0, 110.0, 31.2304, 121.4737);
        assert!((d["x"] - direct0.min(direct1)).abs() < 1e-12);
    }

    #[test]
    fn missing_coordinates_reported() {
        let attrs = vec![CityAttributes::new("nowhere")];
        assert!(matches!(
            distance_to_nearest_elite(&attrs, &[(0.0, 0.0)]),
            Err(StructureError::MissingCoordinates(c)) if c == "nowhere"
        ));
    }

    #[test]
    fn elite_list_rejects_out_of_range_coordinates() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        use std::io::Write as _;
        f.write_all(b"name,lat,lon\nBad,95.0,10.0\n").unwrap();
        assert!(matches!(
            load_elite_coordinates(f.path()),
            Err(StructureError::MalformedRow { .. })
        ));
    }
}
