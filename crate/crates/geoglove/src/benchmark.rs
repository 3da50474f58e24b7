//! Geodesic error measurement: haversine distance from each ranked city
//! to its nearest mine, RMSE aggregation, and report/GeoJSON emission.

use serde_json::{Value, json};

use crate::error::{Error, Result};
use crate::gazetteer::{FilteredVocabulary, MineRecord};
use crate::glove::EmbeddingTable;
use crate::ranking::{self, RankedCity};
use crate::reducers::{ReducerKind, ReducerModel};

/// Mean Earth radius in kilometers.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// A validated geodetic coordinate pair in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    pub lat: f64,
    pub lng: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lng: f64) -> Result<Self> {
        if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lng) {
            return Err(Error::Config(format!("({lat}, {lng}) out of range")));
        }
        Ok(Self { lat, lng })
    }
}

/// Great-circle distance in kilometers:
/// a = sin^2(dphi/2) + cos(phi1) cos(phi2) sin^2(dlambda/2),
/// c = 2 atan2(sqrt(a), sqrt(1 - a)), d = R c, with a clamped into [0, 1]
/// to absorb floating-point overshoot near antipodes.
pub fn haversine_km(p: &GeoPoint, q: &GeoPoint) -> f64 {
    let phi1 = p.lat.to_radians();
    let phi2 = q.lat.to_radians();
    let dphi = (q.lat - p.lat).to_radians();
    let dlambda = (q.lng - p.lng).to_radians();
    let a = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    let a = a.clamp(0.0, 1.0);
    let c = 2.0 * a.sqrt().atan2((1.0 - a).sqrt());
    EARTH_RADIUS_KM * c
}

/// The mine minimizing haversine distance; ties keep the earliest file
/// row.
pub fn nearest_mine<'m>(city: &GeoPoint, mines: &'m [MineRecord]) -> Result<(&'m MineRecord, f64)> {
    if mines.is_empty() {
        return Err(Error::EmptyMineSet);
    }
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, m) in mines.iter().enumerate() {
        let d = haversine_km(
            city,
            &GeoPoint {
                lat: m.lat,
                lng: m.lng,
            },
        );
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    Ok((&mines[best], best_d))
}

/// One benchmark row: a ranked city, its nearest mine and the error
/// distance between them.
#[derive(Debug, Clone)]
pub struct CityError {
    pub ranked: RankedCity,
    pub nearest_mine: MineRecord,
    pub distance_km: f64,
}

/// Per-technique benchmark result.
#[derive(Debug, Clone)]
pub struct BenchmarkReport {
    pub technique: ReducerKind,
    pub keyword: String,
    pub rows: Vec<CityError>,
    pub rmse_km: f64,
    /// Fewer candidate city rows than requested existed before truncation.
    pub short_list: bool,
}

/// sqrt(mean of squared distances).
pub fn rmse(rows: &[CityError]) -> Result<f64> {
    if rows.is_empty() {
        return Err(Error::EmptyRows);
    }
    let sum_sq: f64 = rows.iter().map(|r| r.distance_km * r.distance_km).sum();
    Ok((sum_sq / rows.len() as f64).sqrt())
}

/// score_all -> top_k_cities -> nearest_mine per row -> rmse.
pub fn run_benchmark(
    keyword: &str,
    table: &EmbeddingTable,
    model: &ReducerModel,
    fvocab: &FilteredVocabulary,
    mines: &[MineRecord],
    k: usize,
) -> Result<BenchmarkReport> {
    let scores = ranking::score_all(keyword, table, model, fvocab)?;
    let top = ranking::top_k_cities(&scores.scores, fvocab, k);
    let mut rows = Vec::with_capacity(top.rows.len());
    for ranked in top.rows {
        let point = GeoPoint::new(ranked.city.lat, ranked.city.lng)?;
        let (mine, d) = nearest_mine(&point, mines)?;
        rows.push(CityError {
            ranked,
            nearest_mine: mine.clone(),
            distance_km: d,
        });
    }
    let rmse_km = rmse(&rows)?;
    Ok(BenchmarkReport {
        technique: model.kind(),
        keyword: keyword.to_string(),
        rows,
        rmse_km,
        short_list: top.short_list,
    })
}

/// `Technique, 1234.5678 km`, the shape used in the summary table.
pub fn summary_line(technique: ReducerKind, rmse_km: f64) -> String {
    format!("{}, {rmse_km:.4} km", technique.label())
}

/// Report CSV: one row per ranked city with its nearest mine, floats to
/// four decimals.
pub fn report_csv(report: &BenchmarkReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "technique",
        "keyword",
        "rank",
        "word",
        "city",
        "admin_name",
        "lat",
        "lng",
        "nearest_mine",
        "error_km",
    ])
    .expect("csv write");
    for row in &report.rows {
        w.write_record([
            report.technique.as_str().to_string(),
            report.keyword.clone(),
            row.ranked.rank.to_string(),
            row.ranked.word.clone(),
            row.ranked.city.city.clone(),
            row.ranked.city.admin_name.clone(),
            format!("{:.4}", row.ranked.city.lat),
            format!("{:.4}", row.ranked.city.lng),
            row.nearest_mine.name.clone(),
            format!("{:.4}", row.distance_km),
        ])
        .expect("csv write");
    }
    String::from_utf8(w.into_inner().expect("csv flush")).expect("utf8")
}

/// Summary CSV mirroring the technique/error table: `technique,rmse_km`.
pub fn summary_csv(entries: &[(ReducerKind, f64)]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["technique", "rmse_km"]).expect("csv write");
    for (kind, rmse_km) in entries {
        w.write_record([kind.label().to_string(), format!("{rmse_km:.4}")])
            .expect("csv write");
    }
    String::from_utf8(w.into_inner().expect("csv flush")).expect("utf8")
}

/// One FeatureCollection: a Point per ranked city (role=city) and per
/// mine (role=mine), coordinates ordered longitude then latitude.
pub fn emit_geojson(report: &BenchmarkReport, mines: &[MineRecord]) -> Value {
    let mut features = Vec::with_capacity(report.rows.len() + mines.len());
    for row in &report.rows {
        features.push(json!({
            "type": "Feature",
            "geometry": {
                "type": "Point",
                "coordinates": [row.ranked.city.lng, row.ranked.city.lat],
            },
            "properties": {
                "role": "city",
                "name": row.ranked.city.city,
                "word": row.ranked.word,
                "rank": row.ranked.rank,
                "score": row.ranked.score,
                "error_km": row.distance_km,
            },
        }));
    }
    for m in mines {
        features.push(json!({
            "type": "Feature",
            "geometry": {
                "type": "Point",
                "coordinates": [m.lng, m.lat],
            },
            "properties": {
                "role": "mine",
                "name": m.name,
                "commodity": m.commodity,
            },
        }));
    }
    json!({
        "type": "FeatureCollection",
        "features": features,
    })
}
