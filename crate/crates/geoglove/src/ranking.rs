//! Cosine-similarity scoring of a keyword against the filtered vocabulary
//! and extraction of the top-k city rows.
//!
//! Scoring happens in the reducer's output space: vectors are transformed
//! first (identity for the `none` technique), then compared.

use crate::error::{Error, Result};
use crate::gazetteer::{CityRecord, FilteredVocabulary};
use crate::glove::EmbeddingTable;
use crate::nnkit::Tensor;
use crate::reducers::ReducerModel;

/// Similarity of one vocabulary word to the keyword, in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityScore {
    pub word: String,
    pub score: f64,
}

/// One output row: a city expanded from a scored word. Homonym cities
/// share their word's score.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedCity {
    pub rank: usize,
    pub word: String,
    pub city: CityRecord,
    pub score: f64,
}

/// Scores for every usable filtered-vocabulary word, plus how many words
/// were skipped for having a zero-norm vector in the scoring space.
#[derive(Debug, Clone)]
pub struct ScoreSet {
    pub scores: Vec<SimilarityScore>,
    pub skipped_zero_norm: usize,
}

/// The top-k city rows; `short_list` flags that fewer than k candidate
/// rows existed before truncation.
#[derive(Debug, Clone)]
pub struct TopCities {
    pub rows: Vec<RankedCity>,
    pub short_list: bool,
}

const ZERO_NORM: f64 = 1e-12;

/// u.v / (||u|| ||v||), clamped into [-1, 1] to absorb rounding.
pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::ShapeMismatch(format!(
            "cosine over {} vs {} dims",
            u.len(),
            v.len()
        )));
    }
    let nu = norm(u);
    let nv = norm(v);
    if nu < ZERO_NORM || nv < ZERO_NORM {
        return Err(Error::ZeroVector("cosine operand".into()));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Transforms the keyword and every filtered word into the model's output
/// space and scores them against the keyword. The keyword itself is
/// excluded; zero-norm vectors are skipped and counted.
pub fn score_all(
    keyword: &str,
    table: &EmbeddingTable,
    model: &ReducerModel,
    fvocab: &FilteredVocabulary,
) -> Result<ScoreSet> {
    if table.vector(keyword).is_none() {
        return Err(Error::UnknownKeyword {
            keyword: keyword.to_string(),
            suggestions: Vec::new(),
        });
    }

    // One batch: keyword first, then the filtered words in vocab order.
    let dim = table.dim();
    let mut data = Vec::with_capacity((fvocab.len() + 1) * dim);
    data.extend_from_slice(table.vector(keyword).expect("checked above"));
    for w in fvocab.words() {
        data.extend_from_slice(table.vector(w).expect("filtered words come from the table"));
    }
    let batch = Tensor::matrix(fvocab.len() + 1, dim, data)?;
    let reduced = model.transform(&batch)?;

    let key_vec = reduced.row_slice(0);
    if norm(key_vec) < ZERO_NORM {
        return Err(Error::ZeroVector(keyword.to_string()));
    }

    let mut scores = Vec::with_capacity(fvocab.len());
    let mut skipped = 0;
    for (i, w) in fvocab.words().iter().enumerate() {
        if w == keyword {
            continue;
        }
        let vec = reduced.row_slice(i + 1);
        if norm(vec) < ZERO_NORM {
            skipped += 1;
            continue;
        }
        scores.push(SimilarityScore {
            word: w.clone(),
            score: cosine_similarity(key_vec, vec)?,
        });
    }
    Ok(ScoreSet {
        scores,
        skipped_zero_norm: skipped,
    })
}

/// Keeps city-bearing words, expands each into one row per matching city
/// (gazetteer file order), sorts by score descending then word ascending,
/// truncates to k and assigns 1-based ranks.
pub fn top_k_cities(
    scores: &[SimilarityScore],
    fvocab: &FilteredVocabulary,
    k: usize,
) -> TopCities {
    let mut candidates: Vec<RankedCity> = Vec::new();
    for s in scores {
        for city in fvocab.cities_for(&s.word) {
            candidates.push(RankedCity {
                rank: 0,
                word: s.word.clone(),
                city: city.clone(),
                score: s.score,
            });
        }
    }
    let short_list = candidates.len() < k;
    // Stable sort keeps gazetteer file order within equal (score, word).
    candidates.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.word.cmp(&b.word))
    });
    candidates.truncate(k);
    for (i, c) in candidates.iter_mut().enumerate() {
        c.rank = i + 1;
    }
    TopCities {
        rows: candidates,
        short_list,
    }
}

/// Renders the ranking CSV (`rank,word,city,admin_name,country,lat,lng,score`)
/// with scores to six decimals.
pub fn ranking_csv(rows: &[RankedCity]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "rank",
        "word",
        "city",
        "admin_name",
        "country",
        "lat",
        "lng",
        "score",
    ])
    .expect("csv write");
    for r in rows {
        w.write_record([
            r.rank.to_string(),
            r.word.clone(),
            r.city.city.clone(),
            r.city.admin_name.clone(),
            r.city.country.clone(),
            format!("{}", r.city.lat),
            format!("{}", r.city.lng),
            format!("{:.6}", r.score),
        ])
        .expect("csv write");
    }
    String::from_utf8(w.into_inner().expect("csv flush")).expect("utf8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gazetteer::filter_vocabulary;
    use crate::glove::Vocabulary;
    use crate::reducers::ReducerModel;

    #[test]
    fn cosine_identity_orthogonal_antipodal() {
        let u = [1.0, 0.0];
        assert_eq!(cosine_similarity(&u, &u).unwrap(), 1.0);
        assert_eq!(cosine_similarity(&u, &[0.0, 3.0]).unwrap(), 0.0);
        assert_eq!(cosine_similarity(&u, &[-1.0, 0.0]).unwrap(), -1.0);
    }

    #[test]
    fn cosine_forty_five_degrees() {
        let got = cosine_similarity(&[1.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!(
            (got - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12,
            "{got}"
        );
    }

    #[test]
    fn cosine_scale_invariance() {
        let mut r = crate::rng::seeded(3);
        for _ in 0..100 {
            let u: Vec<f64> = (0..5)
                .map(|_| crate::rng::uniform_symmetric(&mut r, 2.0))
                .collect();
            let v: Vec<f64> = (0..5)
                .map(|_| crate::rng::uniform_symmetric(&mut r, 2.0))
                .collect();
            if norm(&u) < 1e-6 || norm(&v) < 1e-6 {
                continue;
            }
            let base = cosine_similarity(&u, &v).unwrap();
            let au: Vec<f64> = u.iter().map(|x| 3.7 * x).collect();
            let bv: Vec<f64> = v.iter().map(|x| 0.002 * x).collect();
            let scaled = cosine_similarity(&au, &bv).unwrap();
            assert!((base - scaled).abs() < 1e-12);
        }
    }

    #[test]
    fn cosine_rejects_zero_vectors() {
        assert!(matches!(
            cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]),
            Err(Error::ZeroVector(_))
        ));
    }

    fn city(name: &str, admin: &str) -> CityRecord {
        CityRecord {
            city: name.to_string(),
            city_ascii: name.to_lowercase(),
            lat: 1.0,
            lng: 2.0,
            country: "X".into(),
            iso2: "XX".into(),
            iso3: "XXX".into(),
            admin_name: admin.into(),
        }
    }

    fn table(words: &[&str], vectors: &[&[f64]]) -> EmbeddingTable {
        let vocab = Vocabulary::from_words(words.iter().map(|s| s.to_string()).collect()).unwrap();
        let dim = vectors[0].len();
        let data: Vec<f64> = vectors.iter().flat_map(|v| v.iter().copied()).collect();
        EmbeddingTable::new(vocab, dim, data).unwrap()
    }

    #[test]
    fn score_all_unknown_keyword() {
        let t = table(&["ore"], &[&[1.0, 0.0]]);
        let f = filter_vocabulary(&t, &["ore".to_string()], &[]);
        let model = ReducerModel::identity(2);
        assert!(matches!(
            score_all("lithium", &t, &model, &f),
            Err(Error::UnknownKeyword { .. })
        ));
    }

    #[test]
    fn score_all_excludes_the_keyword_itself() {
        let t = table(&["lithium"], &[&[1.0, 0.0]]);
        let f = filter_vocabulary(&t, &["lithium".to_string()], &[]);
        let model = ReducerModel::identity(2);
        let s = score_all("lithium", &t, &model, &f).unwrap();
        assert!(s.scores.is_empty());
        assert_eq!(s.skipped_zero_norm, 0);
    }

    #[test]
    fn score_all_matches_bruteforce_pairwise_cosine() {
        let words = ["lithium", "ore", "tin", "mica", "gneiss"];
        let vecs: Vec<Vec<f64>> = vec![
            vec![1.0, 0.2, -0.3],
            vec![0.9, 0.1, -0.2],
            vec![-0.5, 0.8, 0.1],
            vec![0.0, 0.0, 1.0],
            vec![0.3, -0.7, 0.2],
        ];
        let refs: Vec<&[f64]> = vecs.iter().map(|v| v.as_slice()).collect();
        let t = table(&words, &refs);
        let english: Vec<String> = words.iter().map(|s| s.to_string()).collect();
        let f = filter_vocabulary(&t, &english, &[]);
        let model = ReducerModel::identity(3);
        let s = score_all("lithium", &t, &model, &f).unwrap();
        assert_eq!(s.scores.len(), 4);
        for sc in &s.scores {
            let expect =
                cosine_similarity(t.vector("lithium").unwrap(), t.vector(&sc.word).unwrap())
                    .unwrap();
            assert!((sc.score - expect).abs() < 1e-15);
            assert!((-1.0..=1.0).contains(&sc.score));
        }
    }

    #[test]
    fn score_all_skips_zero_norm_words() {
        let t = table(
            &["lithium", "ore", "null"],
            &[&[1.0, 0.0], &[0.5, 0.5], &[0.0, 0.0]],
        );
        let english: Vec<String> = ["lithium", "ore", "null"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let f = filter_vocabulary(&t, &english, &[]);
        let model = ReducerModel::identity(2);
        let s = score_all("lithium", &t, &model, &f).unwrap();
        assert_eq!(s.scores.len(), 1);
        assert_eq!(s.skipped_zero_norm, 1);
    }

    fn fvocab_with_cities(
        pairs: &[(&str, Vec<CityRecord>)],
    ) -> (EmbeddingTable, FilteredVocabulary) {
        let words: Vec<&str> = pairs.iter().map(|(w, _)| *w).collect();
        let vecs: Vec<Vec<f64>> = (0..words.len()).map(|i| vec![1.0, i as f64]).collect();
        let refs: Vec<&[f64]> = vecs.iter().map(|v| v.as_slice()).collect();
        let t = table(&words, &refs);
        let cities: Vec<CityRecord> = pairs.iter().flat_map(|(_, cs)| cs.clone()).collect();
        let f = filter_vocabulary(&t, &[], &cities);
        (t, f)
    }

    #[test]
    fn top_k_zero_returns_empty() {
        let (_t, f) = fvocab_with_cities(&[("tokyo", vec![city("Tokyo", "Tōkyō")])]);
        let scores = vec![SimilarityScore {
            word: "tokyo".into(),
            score: 0.9,
        }];
        let top = top_k_cities(&scores, &f, 0);
        assert!(top.rows.is_empty());
        assert!(!top.short_list);
    }

    #[test]
    fn homonyms_expand_into_consecutive_equal_score_rows() {
        let (_t, f) = fvocab_with_cities(&[(
            "wyoming",
            vec![city("Wyoming", "Ohio"), city("Wyoming", "Michigan")],
        )]);
        let scores = vec![SimilarityScore {
            word: "wyoming".into(),
            score: 0.7,
        }];
        let top = top_k_cities(&scores, &f, 10);
        assert_eq!(top.rows.len(), 2);
        assert_eq!(top.rows[0].rank, 1);
        assert_eq!(top.rows[1].rank, 2);
        assert_eq!(top.rows[0].score, top.rows[1].score);
        assert_eq!(top.rows[0].city.admin_name, "Ohio");
        assert_eq!(top.rows[1].city.admin_name, "Michigan");
    }

    #[test]
    fn expansion_consumes_slots_and_flags_short_lists() {
        let (_t, f) = fvocab_with_cities(&[
            ("avos", vec![city("Avos", "A1")]),
            ("bori", vec![city("Bori", "B1"), city("Bori", "B2")]),
        ]);
        let scores = vec![
            SimilarityScore {
                word: "avos".into(),
                score: 0.9,
            },
            SimilarityScore {
                word: "bori".into(),
                score: 0.8,
            },
        ];
        let top = top_k_cities(&scores, &f, 10);
        assert!(top.short_list);
        let seq: Vec<(usize, &str)> = top.rows.iter().map(|r| (r.rank, r.word.as_str())).collect();
        assert_eq!(seq, vec![(1, "avos"), (2, "bori"), (3, "bori")]);
    }

    #[test]
    fn ties_break_by_word_then_file_order() {
        let (_t, f) = fvocab_with_cities(&[
            ("zeta", vec![city("Zeta", "Z1")]),
            ("alfa", vec![city("Alfa", "A1")]),
        ]);
        let scores = vec![
            SimilarityScore {
                word: "zeta".into(),
                score: 0.5,
            },
            SimilarityScore {
                word: "alfa".into(),
                score: 0.5,
            },
        ];
        let top = top_k_cities(&scores, &f, 2);
        assert_eq!(top.rows[0].word, "alfa");
        assert_eq!(top.rows[1].word, "zeta");
    }

    #[test]
    fn ranking_csv_has_expected_header_and_score_precision() {
        let rows = vec![RankedCity {
            rank: 1,
            word: "tokyo".into(),
            city: city("Tokyo", "Tōkyō"),
            score: 0.123456789,
        }];
        let text = ranking_csv(&rows);
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "rank,word,city,admin_name,country,lat,lng,score"
        );
        let row = lines.next().unwrap();
        assert!(row.contains("0.123457"), "{row}");
    }
}
