mod common;

use std::fs;

use ise::model_io::{load_binary, load_model, load_text_model, save_model, BINARY_FILE, CONTEXTS_FILE, IDENTITIES_FILE, SENSES_FILE};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn saved() -> (tempfile::TempDir, ise::model::EmbeddingModel) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let model = common::random_model(&mut rng, 7, 2, 4);
    let dir = tempfile::tempdir().unwrap();
    save_model(&model, dir.path()).unwrap();
    (dir, model)
}

#[test]
fn binary_round_trip_is_exact() {
    let (dir, model) = saved();
    assert_eq!(load_model(dir.path()).unwrap(), model);
    assert_eq!(load_binary(dir.path().join(BINARY_FILE)).unwrap(), model);
}

#[test]
fn text_round_trip_is_close() {
    let (dir, model) = saved();
    let text = load_text_model(dir.path()).unwrap();
    assert_eq!(text.words, model.words);
    assert_eq!(text.num_senses(), model.num_senses());
    for (a, b) in text.sense_vectors.as_slice().iter().zip(model.sense_vectors.as_slice()) {
        assert!((a - b).abs() <= 1e-5 * b.abs().max(1e-6), "{a} vs {b}");
    }
    let header = fs::read_to_string(dir.path().join(SENSES_FILE)).unwrap();
    assert!(header.starts_with("14 4\nw0#0 "));
}

#[test]
fn wrong_row_count_names_the_file() {
    let (dir, _) = saved();
    let path = dir.path().join(CONTEXTS_FILE);
    let text = fs::read_to_string(&path).unwrap().replacen("7 4", "8 4", 1);
    fs::write(&path, text).unwrap();
    let err = load_text_model(dir.path()).unwrap_err().to_string();
    assert!(err.contains(CONTEXTS_FILE) && err.contains("declares 8 rows"), "{err}");
}

#[test]
fn mismatched_dimensions_are_rejected() {
    let (dir, _) = saved();
    fs::write(dir.path().join(IDENTITIES_FILE), "2 3\n0 1 2 3 4\n1 1 2 3 4\n").unwrap();
    let err = load_text_model(dir.path()).unwrap_err().to_string();
    assert!(err.contains(IDENTITIES_FILE), "{err}");
    fs::write(dir.path().join(IDENTITIES_FILE), "2 3\n0 1 2 3\n1 1 2\n").unwrap();
    let err = load_text_model(dir.path()).unwrap_err().to_string();
    assert!(err.contains(IDENTITIES_FILE) && err.contains(":3:"), "{err}");
    fs::write(dir.path().join(IDENTITIES_FILE), "2 3\n0 1 2 3\n1 1 2 3\n").unwrap();
    let err = load_text_model(dir.path()).unwrap_err().to_string();
    assert!(err.contains(IDENTITIES_FILE), "{err}");
}

#[test]
fn corrupted_header_and_binary_are_rejected() {
    let (dir, _) = saved();
    fs::write(dir.path().join(SENSES_FILE), "fourteen four\n").unwrap();
    let err = load_text_model(dir.path()).unwrap_err().to_string();
    assert!(err.contains(SENSES_FILE), "{err}");

    let bin = dir.path().join(BINARY_FILE);
    let bytes = fs::read(&bin).unwrap();
    fs::write(&bin, &bytes[..bytes.len() - 3]).unwrap();
    assert!(load_binary(&bin).is_err());
    let mut magic = bytes.clone();
    magic[0] = b'X';
    fs::write(&bin, &magic).unwrap();
    assert!(load_binary(&bin).is_err());
    let mut trailing = bytes;
    trailing.push(0);
    fs::write(&bin, &trailing).unwrap();
    assert!(load_binary(&bin).is_err());
}
