//! City and mine tables plus the vocabulary filter that keeps only
//! recognized city names and meaningful English words.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::glove::EmbeddingTable;

/// One gazetteer row. `city_ascii` is the lowercase join key; multi-token
/// names are kept but only single-token names are ever matched against
/// embedding vocabulary words.
#[derive(Debug, Clone, PartialEq)]
pub struct CityRecord {
    pub city: String,
    pub city_ascii: String,
    pub lat: f64,
    pub lng: f64,
    pub country: String,
    pub iso2: String,
    pub iso3: String,
    pub admin_name: String,
}

/// A known mine site.
#[derive(Debug, Clone, PartialEq)]
pub struct MineRecord {
    pub name: String,
    pub lat: f64,
    pub lng: f64,
    pub commodity: String,
}

fn check_range(path: &str, line: u64, lat: f64, lng: f64) -> Result<()> {
    if !(-90.0..=90.0).contains(&lat) {
        return Err(Error::Range {
            path: path.into(),
            line,
            msg: format!("lat {lat} outside [-90, 90]"),
        });
    }
    if !(-180.0..=180.0).contains(&lng) {
        return Err(Error::Range {
            path: path.into(),
            line,
            msg: format!("lng {lng} outside [-180, 180]"),
        });
    }
    Ok(())
}

/// Lowercases and maps every non-letter to a space, collapsing runs, so
/// the key always matches `[a-z][a-z ]*`.
fn normalize_city_key(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut pending_space = false;
    for c in raw.chars() {
        if c.is_ascii_alphabetic() {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.push(c.to_ascii_lowercase());
        } else {
            pending_space = true;
        }
    }
    out
}

struct HeaderMap {
    positions: HashMap<String, usize>,
}

impl HeaderMap {
    fn new(path: &str, headers: &csv::StringRecord, required: &[&str]) -> Result<Self> {
        let positions: HashMap<String, usize> = headers
            .iter()
            .enumerate()
            .map(|(i, h)| (h.trim().to_lowercase(), i))
            .collect();
        for name in required {
            if !positions.contains_key(*name) {
                return Err(Error::Parse {
                    path: path.into(),
                    line: 1,
                    msg: format!("missing required column `{name}`"),
                });
            }
        }
        Ok(Self { positions })
    }

    fn get<'r>(
        &self,
        path: &str,
        line: u64,
        record: &'r csv::StringRecord,
        name: &str,
    ) -> Result<&'r str> {
        self.positions
            .get(name)
            .and_then(|&i| record.get(i))
            .ok_or_else(|| Error::Parse {
                path: path.into(),
                line,
                msg: format!("row is missing field `{name}`"),
            })
    }
}

fn parse_coord(path: &str, line: u64, name: &str, raw: &str) -> Result<f64> {
    raw.trim().parse::<f64>().map_err(|_| Error::Parse {
        path: path.into(),
        line,
        msg: format!("bad {name} value `{raw}`"),
    })
}

fn record_line(record: &csv::StringRecord, fallback: u64) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(fallback)
}

/// Loads the cities CSV. The header must name at least
/// `city,city_ascii,lat,lng,country,iso2,iso3,admin_name` in any order;
/// extra columns are ignored.
pub fn load_cities(path: &Path) -> Result<Vec<CityRecord>> {
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(&display, e))?;
    let required = [
        "city",
        "city_ascii",
        "lat",
        "lng",
        "country",
        "iso2",
        "iso3",
        "admin_name",
    ];
    let header = HeaderMap::new(
        &display,
        reader.headers().map_err(|e| csv_error(&display, e))?,
        &required,
    )?;

    let mut cities = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(&display, e))?;
        let line = record_line(&record, i as u64 + 2);
        let get = |name: &str| header.get(&display, line, &record, name);
        let lat = parse_coord(&display, line, "lat", get("lat")?)?;
        let lng = parse_coord(&display, line, "lng", get("lng")?)?;
        check_range(&display, line, lat, lng)?;
        let city_ascii = normalize_city_key(get("city_ascii")?);
        if city_ascii.is_empty() {
            return Err(Error::Parse {
                path: display.clone(),
                line,
                msg: "empty city_ascii".into(),
            });
        }
        cities.push(CityRecord {
            city: get("city")?.to_string(),
            city_ascii,
            lat,
            lng,
            country: get("country")?.to_string(),
            iso2: get("iso2")?.to_string(),
            iso3: get("iso3")?.to_string(),
            admin_name: get("admin_name")?.to_string(),
        });
    }
    Ok(cities)
}

/// Loads the mines CSV (`name,lat,lng,commodity`). Zero data rows is an
/// error: a benchmark without mines is meaningless.
pub fn load_mines(path: &Path) -> Result<Vec<MineRecord>> {
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(&display, e))?;
    let header = HeaderMap::new(
        &display,
        reader.headers().map_err(|e| csv_error(&display, e))?,
        &["name", "lat", "lng", "commodity"],
    )?;

    let mut mines = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(&display, e))?;
        let line = record_line(&record, i as u64 + 2);
        let get = |name: &str| header.get(&display, line, &record, name);
        let lat = parse_coord(&display, line, "lat", get("lat")?)?;
        let lng = parse_coord(&display, line, "lng", get("lng")?)?;
        check_range(&display, line, lat, lng)?;
        mines.push(MineRecord {
            name: get("name")?.to_string(),
            lat,
            lng,
            commodity: get("commodity")?.to_string(),
        });
    }
    if mines.is_empty() {
        return Err(Error::EmptyMineSet);
    }
    Ok(mines)
}

fn csv_error(path: &str, e: csv::Error) -> Error {
    let line = match e.position() {
        Some(p) => p.line(),
        None => 0,
    };
    Error::Parse {
        path: path.into(),
        line,
        msg: e.to_string(),
    }
}

/// Loads a one-word-per-line lowercase English word list.
pub fn load_word_list(path: &Path) -> Result<Vec<String>> {
    let text = crate::ioutil::read_to_string(path)?;
    Ok(parse_word_list(&text))
}

fn parse_word_list(text: &str) -> Vec<String> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim().to_lowercase())
        .filter(|l| !l.is_empty())
        .collect()
}

/// The compact English word list shipped with the crate. Real runs
/// should supply a fuller list (e.g. a dictionary dump) by path.
pub fn default_english_words() -> Vec<String> {
    parse_word_list(include_str!("../data/english_words.txt"))
}

/// Embedding-vocabulary words that survived the gazetteer/English filter.
/// `city_index` maps a kept word to every city sharing that name, in
/// gazetteer file order; non-city English words map to no cities.
#[derive(Debug, Clone)]
pub struct FilteredVocabulary {
    words: Vec<String>,
    city_index: HashMap<String, Vec<CityRecord>>,
}

impl FilteredVocabulary {
    /// Kept words in embedding-vocabulary order.
    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn cities_for(&self, word: &str) -> &[CityRecord] {
        self.city_index.get(word).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Keeps a vocabulary word iff it is in the English list or names at
/// least one city (single-token `city_ascii` match). Every matching city
/// is attached; homonyms are deliberately not disambiguated.
pub fn filter_vocabulary(
    table: &EmbeddingTable,
    english: &[String],
    cities: &[CityRecord],
) -> FilteredVocabulary {
    let english: std::collections::HashSet<&str> = english.iter().map(String::as_str).collect();
    let mut by_name: HashMap<&str, Vec<&CityRecord>> = HashMap::new();
    for c in cities {
        if !c.city_ascii.contains(' ') {
            by_name.entry(c.city_ascii.as_str()).or_default().push(c);
        }
    }

    let mut words = Vec::new();
    let mut city_index = HashMap::new();
    for w in table.vocab().words() {
        let matched = by_name.get(w.as_str());
        if english.contains(w.as_str()) || matched.is_some() {
            words.push(w.clone());
            if let Some(list) = matched {
                city_index.insert(w.clone(), list.iter().map(|&c| c.clone()).collect());
            }
        }
    }
    FilteredVocabulary { words, city_index }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glove::{EmbeddingTable, Vocabulary};

    fn write_csv(contents: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        std::fs::write(&path, contents).unwrap();
        (dir, path)
    }

    const CITY_HEADER: &str = "city,city_ascii,lat,lng,country,iso2,iso3,admin_name\n";

    #[test]
    fn parses_a_tokyo_row() {
        let (_d, path) = write_csv(&format!(
            "{CITY_HEADER}Tokyo,Tokyo,35.6897,139.6922,Japan,JP,JPN,Tōkyō\n"
        ));
        let cities = load_cities(&path).unwrap();
        assert_eq!(cities.len(), 1);
        let c = &cities[0];
        assert_eq!(c.city, "Tokyo");
        assert_eq!(c.city_ascii, "tokyo");
        assert_eq!(c.lat, 35.6897);
        assert_eq!(c.lng, 139.6922);
        assert_eq!(c.country, "Japan");
        assert_eq!(c.admin_name, "Tōkyō");
    }

    #[test]
    fn rejects_out_of_range_latitude() {
        let (_d, path) = write_csv(&format!(
            "{CITY_HEADER}Nowhere,Nowhere,95.0,10.0,X,XX,XXX,Y\n"
        ));
        match load_cities(&path) {
            Err(Error::Range { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected range error, got {other:?}"),
        }
    }

    #[test]
    fn keeps_duplicate_city_names() {
        let (_d, path) = write_csv(&format!(
            "{CITY_HEADER}Wyoming,Wyoming,39.2297,-84.4816,United States,US,USA,Ohio\n\
             Wyoming,Wyoming,42.8908,-85.7066,United States,US,USA,Michigan\n"
        ));
        let cities = load_cities(&path).unwrap();
        assert_eq!(cities.len(), 2);
        assert!(cities.iter().all(|c| c.city_ascii == "wyoming"));
        assert_eq!(cities[0].admin_name, "Ohio");
        assert_eq!(cities[1].admin_name, "Michigan");
    }

    #[test]
    fn header_columns_may_be_reordered_and_extra() {
        let (_d, path) = write_csv(
            "population,admin_name,iso3,iso2,country,lng,lat,city_ascii,city\n\
             1000,Kanto,JPN,JP,Japan,139.0,35.0,Chiba,Chiba\n",
        );
        let cities = load_cities(&path).unwrap();
        assert_eq!(cities[0].city_ascii, "chiba");
        assert_eq!(cities[0].lat, 35.0);
    }

    #[test]
    fn missing_column_is_a_parse_error() {
        let (_d, path) = write_csv("city,lat,lng\na,1,2\n");
        assert!(matches!(
            load_cities(&path),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn quoted_fields_and_key_normalization() {
        let (_d, path) = write_csv(&format!(
            "{CITY_HEADER}\"Washington, D.C.\",\"Washington, D.C.\",38.9047,-77.0163,United States,US,USA,\"District of Columbia\"\n"
        ));
        let cities = load_cities(&path).unwrap();
        assert_eq!(cities[0].city, "Washington, D.C.");
        assert_eq!(cities[0].city_ascii, "washington d c");
    }

    #[test]
    fn mines_parse_and_validate() {
        let (_d, path) = write_csv(
            "name,lat,lng,commodity\nGreenbushes,-33.86,116.06,lithium\nAtacama,-23.5,-68.3,lithium\nPilgangoora,-21.0,118.9,lithium\n",
        );
        let mines = load_mines(&path).unwrap();
        assert_eq!(mines.len(), 3);
        assert_eq!(mines[0].name, "Greenbushes");
    }

    #[test]
    fn empty_mine_body_is_an_error() {
        let (_d, path) = write_csv("name,lat,lng,commodity\n");
        assert!(matches!(load_mines(&path), Err(Error::EmptyMineSet)));
    }

    #[test]
    fn mine_longitude_out_of_range() {
        let (_d, path) = write_csv("name,lat,lng,commodity\nBad,-20.0,-200.0,lithium\n");
        assert!(matches!(load_mines(&path), Err(Error::Range { .. })));
    }

    fn table_with(words: &[&str]) -> EmbeddingTable {
        let vocab = Vocabulary::from_words(words.iter().map(|s| s.to_string()).collect()).unwrap();
        let dim = 2;
        let vectors = (0..words.len() * dim).map(|i| i as f64 + 1.0).collect();
        EmbeddingTable::new(vocab, dim, vectors).unwrap()
    }

    fn city(name: &str, admin: &str) -> CityRecord {
        CityRecord {
            city: name.to_string(),
            city_ascii: name.to_lowercase(),
            lat: 0.0,
            lng: 0.0,
            country: "X".into(),
            iso2: "XX".into(),
            iso3: "XXX".into(),
            admin_name: admin.into(),
        }
    }

    #[test]
    fn filter_keeps_english_or_city_words() {
        let table = table_with(&["pegmatite", "zzxq", "tokyo"]);
        let english = vec!["pegmatite".to_string()];
        let cities = vec![city("Tokyo", "Tōkyō")];
        let f = filter_vocabulary(&table, &english, &cities);
        assert_eq!(f.words(), &["pegmatite", "tokyo"]);
        assert_eq!(f.cities_for("tokyo").len(), 1);
        assert!(f.cities_for("pegmatite").is_empty());
    }

    #[test]
    fn homonyms_attach_all_matching_cities_in_file_order() {
        let table = table_with(&["wyoming"]);
        let cities = vec![city("Wyoming", "Ohio"), city("Wyoming", "Michigan")];
        let f = filter_vocabulary(&table, &[], &cities);
        let matched = f.cities_for("wyoming");
        assert_eq!(matched.len(), 2);
        assert_eq!(matched[0].admin_name, "Ohio");
        assert_eq!(matched[1].admin_name, "Michigan");
        // every attached record keys back to the word it is filed under
        for c in matched {
            assert_eq!(c.city_ascii, "wyoming");
        }
    }

    #[test]
    fn empty_city_list_keeps_english_intersection_only() {
        let table = table_with(&["pegmatite", "zzxq"]);
        let english = vec!["pegmatite".to_string(), "other".to_string()];
        let f = filter_vocabulary(&table, &english, &[]);
        assert_eq!(f.words(), &["pegmatite"]);
        assert!(f.cities_for("pegmatite").is_empty());
    }

    #[test]
    fn multi_token_city_names_are_never_matched() {
        let table = table_with(&["new", "york"]);
        let mut c = city("New York", "New York");
        c.city_ascii = "new york".into();
        let f = filter_vocabulary(&table, &[], &[c]);
        assert!(f.is_empty());
    }

    #[test]
    fn filtering_is_monotone_in_both_lists() {
        let table = table_with(&["alpha", "beta", "tokyo"]);
        let small_english = vec!["alpha".to_string()];
        let big_english = vec!["alpha".to_string(), "beta".to_string()];
        let no_cities: Vec<CityRecord> = vec![];
        let some_cities = vec![city("Tokyo", "Tōkyō")];

        let base = filter_vocabulary(&table, &small_english, &no_cities);
        let more_words = filter_vocabulary(&table, &big_english, &no_cities);
        let more_cities = filter_vocabulary(&table, &small_english, &some_cities);
        for w in base.words() {
            assert!(more_words.words().contains(w));
            assert!(more_cities.words().contains(w));
        }
    }
}
