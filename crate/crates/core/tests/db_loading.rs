use std::fs;

use mwzeval::db::{load_database, table_to_json, Database, SearchMode, DEFAULT_THRESHOLD};
use mwzeval::domain::Domain;
use serde_json::json;

fn fixture_db() -> Database {
    load_database(&std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/sng0805/db")).unwrap()
}

#[test]
fn fixture_loads_with_warnings_for_missing_tables() {
    let db = fixture_db();
    assert_eq!(db.counts()[&Domain::Restaurant], 4);
    assert_eq!(db.warnings.len(), Domain::DATABASED.len() - 1);
    assert!(db.warnings.iter().all(|w| !w.contains("restaurant")));
}

#[test]
fn empty_directory_warns_for_every_table() {
    let dir = tempfile::tempdir().unwrap();
    let db = load_database(dir.path()).unwrap();
    assert_eq!(db.warnings.len(), Domain::DATABASED.len());
    let result = db
        .query(Domain::Hotel, [("area", "east")], SearchMode::Full, DEFAULT_THRESHOLD)
        .unwrap();
    assert!(result.entity_ids.is_empty());
}

#[test]
fn missing_directory_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let err = load_database(&dir.path().join("absent")).unwrap_err();
    assert!(err.is_io());
}

#[test]
fn duplicate_ids_are_rejected_with_the_file_name() {
    let dir = tempfile::tempdir().unwrap();
    let table = json!([
        {"id": "1", "name": "a and b guest house", "area": "east"},
        {"id": "1", "name": "acorn guest house", "area": "north"},
    ]);
    fs::write(dir.path().join("hotel_db.json"), table.to_string()).unwrap();
    let err = load_database(dir.path()).unwrap_err().to_string();
    assert!(err.contains("hotel_db.json"), "{err}");
}

#[test]
fn train_ids_stand_in_for_missing_ids() {
    let dir = tempfile::tempdir().unwrap();
    let table = json!({"format_version": 1, "entities": [
        {"trainID": "TR1234", "departure": "cambridge", "destination": "ely", "day": "monday", "leaveAt": "09:15", "arriveBy": "09:32"},
    ]});
    fs::write(dir.path().join("train.json"), table.to_string()).unwrap();
    let db = load_database(dir.path()).unwrap();
    assert_eq!(db.table(Domain::Train)[0].id, "TR1234");
    let hits = db
        .query(
            Domain::Train,
            [("departure", "cambridge"), ("arriveby", "10:00")],
            SearchMode::Full,
            DEFAULT_THRESHOLD,
        )
        .unwrap();
    assert_eq!(hits.entity_ids.len(), 1);
}

#[test]
fn bad_version_and_malformed_json_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("hotel.json"),
        r#"{"format_version": 2, "entities": []}"#,
    )
    .unwrap();
    assert!(load_database(dir.path()).is_err());
    fs::write(dir.path().join("hotel.json"), "[{").unwrap();
    assert!(load_database(dir.path()).is_err());
}

#[test]
fn tables_round_trip_through_json() {
    let db = fixture_db();
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("restaurant.json"),
        table_to_json(&db, Domain::Restaurant).to_string(),
    )
    .unwrap();
    let again = load_database(dir.path()).unwrap();
    assert_eq!(again.table(Domain::Restaurant), db.table(Domain::Restaurant));
}
