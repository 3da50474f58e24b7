//! Seeded synthetic data generators shared by the examples and the test
//! suite: a two-cluster token corpus for embedding sanity checks, a
//! low-rank embedding table for reducer training, an independent
//! eigenvalue oracle, and a small planted-resource world (cities, one
//! mine, corpus) for end-to-end runs.

use crate::corpus::TokenStream;
use crate::gazetteer::{CityRecord, MineRecord};
use crate::glove::{EmbeddingTable, Vocabulary};
use crate::nnkit::Tensor;
use crate::ranking::cosine_similarity;
use crate::rng;

/// Word sets of the two co-occurrence clusters.
pub fn cluster_words() -> (&'static [&'static str], &'static [&'static str]) {
    (
        &["granite", "basalt", "quartz", "felsite", "gabbro", "schist"],
        &["harbor", "vessel", "cargo", "sailor", "anchor", "marina"],
    )
}

/// Token streams where words co-occur within their cluster and never
/// across clusters.
pub fn two_cluster_corpus(seed: u64, docs_per_cluster: usize, doc_len: usize) -> Vec<TokenStream> {
    let (a, b) = cluster_words();
    let mut r = rng::seeded(seed);
    let mut streams = Vec::with_capacity(docs_per_cluster * 2);
    for (cluster_id, words) in [a, b].into_iter().enumerate() {
        for d in 0..docs_per_cluster {
            let tokens = (0..doc_len)
                .map(|_| {
                    let pick = (rng::uniform01(&mut r) * words.len() as f64) as usize;
                    words[pick.min(words.len() - 1)].to_string()
                })
                .collect();
            streams.push(TokenStream {
                doc_id: format!("cluster{cluster_id}-doc{d}"),
                tokens,
            });
        }
    }
    streams
}

/// Mean cosine within clusters versus across clusters, over every word
/// pair present in the table.
pub fn cluster_cosine_means(table: &EmbeddingTable) -> (f64, f64) {
    let (a, b) = cluster_words();
    let vec_of = |w: &str| table.vector(w);
    let mut within = Vec::new();
    let mut across = Vec::new();
    for set in [a, b] {
        for (i, w1) in set.iter().enumerate() {
            for w2 in set.iter().skip(i + 1) {
                if let (Some(u), Some(v)) = (vec_of(w1), vec_of(w2)) {
                    within.push(cosine_similarity(u, v).expect("nonzero fixture vectors"));
                }
            }
        }
    }
    for w1 in a {
        for w2 in b {
            if let (Some(u), Some(v)) = (vec_of(w1), vec_of(w2)) {
                across.push(cosine_similarity(u, v).expect("nonzero fixture vectors"));
            }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    (mean(&within), mean(&across))
}

/// A table of `n` vectors in `dim` dimensions lying near a random 2-D
/// subspace (plus small isotropic noise), so a 2-D bottleneck can
/// reconstruct it well. The signal scale is a few units, large enough
/// that reconstruction error dominates regularizers at default weights.
/// Words are `w0000`, `w0001`, ...
pub fn synthetic_embedding_table(seed: u64, n: usize, dim: usize) -> EmbeddingTable {
    let mut r = rng::seeded(seed);
    let loading: Vec<f64> = (0..dim * 2)
        .map(|_| rng::uniform_symmetric(&mut r, 3.0))
        .collect();
    let mut data = Vec::with_capacity(n * dim);
    for _ in 0..n {
        let z0 = rng::standard_normal(&mut r);
        let z1 = rng::standard_normal(&mut r);
        for k in 0..dim {
            let signal = loading[k * 2] * z0 + loading[k * 2 + 1] * z1;
            data.push(signal + 0.1 * rng::standard_normal(&mut r));
        }
    }
    let words = (0..n).map(|i| format!("w{i:04}")).collect();
    let vocab = Vocabulary::from_words(words).expect("unique fixture words");
    EmbeddingTable::new(vocab, dim, data).expect("finite fixture data")
}

/// Independent reference decomposition for PCA tests: sample covariance
/// computed directly, then power iteration with deflation. Returns the
/// top `k` eigenvalues, largest first.
pub fn top_eigenvalues_bruteforce(data: &Tensor, k: usize) -> Vec<f64> {
    let (n, d) = (data.rows(), data.cols());
    let mut mean = vec![0.0; d];
    for r in 0..n {
        for (m, v) in mean.iter_mut().zip(data.row_slice(r)) {
            *m += v / n as f64;
        }
    }
    let mut cov = vec![0.0; d * d];
    for r in 0..n {
        let row = data.row_slice(r);
        for i in 0..d {
            for j in 0..d {
                cov[i * d + j] += (row[i] - mean[i]) * (row[j] - mean[j]);
            }
        }
    }
    if n > 1 {
        for v in cov.iter_mut() {
            *v /= (n - 1) as f64;
        }
    }

    let mut r = rng::seeded(0x5eed);
    let mut values = Vec::with_capacity(k);
    for _ in 0..k {
        let mut v: Vec<f64> = (0..d).map(|_| rng::standard_normal(&mut r)).collect();
        normalize(&mut v);
        let mut lambda = 0.0;
        for _ in 0..5000 {
            let mut av = vec![0.0; d];
            for i in 0..d {
                for j in 0..d {
                    av[i] += cov[i * d + j] * v[j];
                }
            }
            lambda = dot(&av, &v);
            let norm = dot(&av, &av).sqrt();
            if norm < 1e-300 {
                lambda = 0.0;
                break;
            }
            for (x, a) in v.iter_mut().zip(&av) {
                *x = a / norm;
            }
        }
        values.push(lambda);
        for i in 0..d {
            for j in 0..d {
                cov[i * d + j] -= lambda * v[i] * v[j];
            }
        }
    }
    values
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
}

/// A synthetic end-to-end scenario: one mine, three "ore" cities within
/// 50 km of it whose names co-occur with the keyword, and a ring of
/// decoy cities all at the same large distance from the mine.
pub struct PlantedWorld {
    pub streams: Vec<TokenStream>,
    pub cities: Vec<CityRecord>,
    pub mines: Vec<MineRecord>,
    pub keyword: String,
    pub english: Vec<String>,
}

const MINE_LAT: f64 = -23.5;
const MINE_LNG: f64 = -68.3;
const DECOY_COUNT: usize = 37;

/// City names are plain five-letter consonant/vowel shapes chosen so the
/// Porter stemmer leaves them unchanged.
fn city_name(i: usize) -> String {
    const C: [char; 6] = ['b', 'd', 'g', 'l', 'n', 'r'];
    const V: [char; 4] = ['a', 'o', 'u', 'i'];
    const TAIL: [char; 4] = ['k', 'm', 'p', 't'];
    let mut s = String::with_capacity(5);
    s.push(C[i % 6]);
    s.push(V[(i / 6) % 4]);
    s.push(C[(i / 24) % 6]);
    s.push(V[(i / 144) % 4]);
    s.push(TAIL[(i / 576) % 4]);
    s
}

fn city_record(name: &str, lat: f64, lng: f64, admin: &str) -> CityRecord {
    CityRecord {
        city: name.to_string(),
        city_ascii: name.to_string(),
        lat,
        lng,
        country: "Synthland".into(),
        iso2: "SY".into(),
        iso3: "SYN".into(),
        admin_name: admin.into(),
    }
}

/// Points at a fixed 72-degree angular distance from the mine, evenly
/// spaced in bearing.
fn decoy_ring() -> Vec<(f64, f64)> {
    let (lat0, lng0) = (MINE_LAT.to_radians(), MINE_LNG.to_radians());
    let u = [lat0.cos() * lng0.cos(), lat0.cos() * lng0.sin(), lat0.sin()];
    // orthonormal frame perpendicular to u
    let mut e1 = [u[1], -u[0], 0.0];
    normalize(&mut e1);
    let mut e2 = [
        u[1] * e1[2] - u[2] * e1[1],
        u[2] * e1[0] - u[0] * e1[2],
        u[0] * e1[1] - u[1] * e1[0],
    ];
    normalize(&mut e2);

    let ang = 72.0_f64.to_radians();
    (0..DECOY_COUNT)
        .map(|i| {
            let phi = std::f64::consts::TAU * i as f64 / DECOY_COUNT as f64;
            let p: Vec<f64> = (0..3)
                .map(|k| ang.cos() * u[k] + ang.sin() * (phi.cos() * e1[k] + phi.sin() * e2[k]))
                .collect();
            let lat = p[2].asin().to_degrees();
            let lng = p[1].atan2(p[0]).to_degrees();
            (lat, lng)
        })
        .collect()
}

pub fn planted_world(seed: u64) -> PlantedWorld {
    let keyword = "lithium".to_string();
    let mut cities = Vec::new();

    // three ore cities ~20 km from the mine
    let ore_offsets = [(0.15, 0.0), (-0.1, 0.15), (0.05, -0.15)];
    let mut ore_names = Vec::new();
    for (i, (dlat, dlng)) in ore_offsets.iter().enumerate() {
        let name = city_name(i);
        cities.push(city_record(
            &name,
            MINE_LAT + dlat,
            MINE_LNG + dlng,
            "Ore Belt",
        ));
        ore_names.push(name);
    }
    for (i, (lat, lng)) in decoy_ring().into_iter().enumerate() {
        let name = city_name(i + 3);
        cities.push(city_record(&name, lat, lng, "Far Ring"));
    }

    let mines = vec![MineRecord {
        name: "planted".into(),
        lat: MINE_LAT,
        lng: MINE_LNG,
        commodity: "lithium".into(),
    }];

    // corpus: keyword interleaved with ore city names; decoys co-occur
    // only with filler words
    let fillers: Vec<String> = (0..20)
        .map(|i| format!("fill{}", city_name(i + 200)))
        .collect();
    let mut r = rng::seeded(seed);
    let mut streams = Vec::new();
    for d in 0..30 {
        let mut tokens = Vec::with_capacity(24);
        for _ in 0..12 {
            tokens.push(keyword.clone());
            let pick = (rng::uniform01(&mut r) * 3.0) as usize;
            tokens.push(ore_names[pick.min(2)].clone());
        }
        streams.push(TokenStream {
            doc_id: format!("ore-doc{d}"),
            tokens,
        });
    }
    for (ci, city) in cities.iter().enumerate().skip(3) {
        for d in 0..3 {
            let mut tokens = Vec::with_capacity(24);
            for _ in 0..12 {
                tokens.push(city.city_ascii.clone());
                let pick = (rng::uniform01(&mut r) * fillers.len() as f64) as usize;
                tokens.push(fillers[pick.min(fillers.len() - 1)].clone());
            }
            streams.push(TokenStream {
                doc_id: format!("decoy{ci}-doc{d}"),
                tokens,
            });
        }
    }

    PlantedWorld {
        streams,
        cities,
        mines,
        keyword,
        english: vec!["lithium".to_string()],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmark::GeoPoint;
    use crate::benchmark::haversine_km;

    #[test]
    fn corpus_clusters_never_mix() {
        let (a, b) = cluster_words();
        let streams = two_cluster_corpus(1, 4, 30);
        assert_eq!(streams.len(), 8);
        for s in &streams {
            let in_a = s.tokens.iter().all(|t| a.contains(&t.as_str()));
            let in_b = s.tokens.iter().all(|t| b.contains(&t.as_str()));
            assert!(in_a || in_b, "stream {} mixes clusters", s.doc_id);
        }
    }

    #[test]
    fn synthetic_table_is_seeded() {
        let a = synthetic_embedding_table(3, 10, 8);
        let b = synthetic_embedding_table(3, 10, 8);
        assert_eq!(a.vector_at(5), b.vector_at(5));
    }

    #[test]
    fn bruteforce_oracle_matches_known_covariance() {
        // two columns, variance 4 and 1, independent by construction
        let mut data = Vec::new();
        for i in 0..4 {
            let a = [2.0, -2.0, 2.0, -2.0][i];
            let b = [1.0, 1.0, -1.0, -1.0][i];
            data.extend_from_slice(&[a, b]);
        }
        let t = Tensor::matrix(4, 2, data).unwrap();
        let vals = top_eigenvalues_bruteforce(&t, 2);
        assert!((vals[0] - 16.0 / 3.0).abs() < 1e-9, "{vals:?}");
        assert!((vals[1] - 4.0 / 3.0).abs() < 1e-9, "{vals:?}");
    }

    #[test]
    fn planted_world_geometry_holds() {
        let w = planted_world(11);
        assert_eq!(w.cities.len(), 3 + DECOY_COUNT);
        let mine = GeoPoint::new(w.mines[0].lat, w.mines[0].lng).unwrap();
        for c in &w.cities[..3] {
            let d = haversine_km(&GeoPoint::new(c.lat, c.lng).unwrap(), &mine);
            assert!(d < 50.0, "ore city {} is {d} km away", c.city);
        }
        let ring_dist = 72.0_f64.to_radians() * 6371.0;
        for c in &w.cities[3..] {
            let d = haversine_km(&GeoPoint::new(c.lat, c.lng).unwrap(), &mine);
            assert!((d - ring_dist).abs() < 1.0, "decoy {} at {d} km", c.city);
        }
    }

    #[test]
    fn planted_city_names_are_porter_stable() {
        let w = planted_world(11);
        for c in &w.cities {
            assert_eq!(crate::corpus::stem(&c.city_ascii), c.city_ascii);
        }
    }
}
