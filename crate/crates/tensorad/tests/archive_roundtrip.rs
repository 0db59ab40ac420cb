use tensorad::{load_archive, save_archive, ArchiveError, Tensor};

#[test]
fn round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("weights.gta");

    let a = Tensor::from_vec(
        vec![
            0.384,
            23.04,
            -0.0,
            f64::MIN_POSITIVE,
            1.0 + f64::EPSILON,
            -1e300,
        ],
        &[2, 3],
    )
    .unwrap();
    let b = Tensor::from_vec(vec![std::f64::consts::PI], &[1]).unwrap();
    let c = Tensor::zeros(&[2, 2, 2]);

    save_archive(&path, &[("enc/w", &a), ("enc/b", &b), ("head.w", &c)]).unwrap();
    let loaded = load_archive(&path).unwrap();

    assert_eq!(loaded.len(), 3);
    assert_eq!(loaded[0].0, "enc/w");
    assert_eq!(loaded[1].0, "enc/b");
    assert_eq!(loaded[2].0, "head.w");
    for (orig, (_, back)) in [a, b, c].iter().zip(&loaded) {
        assert_eq!(orig.shape(), back.shape());
        let orig_bits: Vec<u64> = orig.data().iter().map(|v| v.to_bits()).collect();
        let back_bits: Vec<u64> = back.data().iter().map(|v| v.to_bits()).collect();
        assert_eq!(orig_bits, back_bits);
    }
}

#[test]
fn duplicate_names_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dup.gta");
    let t = Tensor::zeros(&[1]);
    let err = save_archive(&path, &[("w", &t), ("w", &t)]).unwrap_err();
    assert!(matches!(err, ArchiveError::DuplicateName { .. }));
}

#[test]
fn invalid_name_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.gta");
    let t = Tensor::zeros(&[1]);
    let err = save_archive(&path, &[("two words", &t)]).unwrap_err();
    assert!(matches!(err, ArchiveError::BadName { .. }));
}

#[test]
fn bad_header_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("junk.gta");
    std::fs::write(&path, b"NOTANARCHIVE 1\nDATA\n").unwrap();
    let err = load_archive(&path).unwrap_err();
    assert!(matches!(err, ArchiveError::BadHeader(_)));
}

#[test]
fn future_version_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("future.gta");
    std::fs::write(&path, b"TENSORARCHIVE 2\nDATA\n").unwrap();
    let err = load_archive(&path).unwrap_err();
    assert!(matches!(err, ArchiveError::BadVersion(2)));
}

#[test]
fn truncated_payload_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("short.gta");
    let t = Tensor::zeros(&[4]);
    save_archive(&path, &[("w", &t)]).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 8]).unwrap();
    let err = load_archive(&path).unwrap_err();
    assert!(matches!(err, ArchiveError::ShortPayload { .. }));
}

#[test]
fn trailing_bytes_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("long.gta");
    let t = Tensor::zeros(&[2]);
    save_archive(&path, &[("w", &t)]).unwrap();
    let mut bytes = std::fs::read(&path).unwrap();
    bytes.extend_from_slice(&[0u8; 8]);
    std::fs::write(&path, &bytes).unwrap();
    let err = load_archive(&path).unwrap_err();
    assert!(matches!(err, ArchiveError::TrailingBytes { .. }));
}

#[test]
fn garbled_manifest_line_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("garbled.gta");
    std::fs::write(&path, b"TENSORARCHIVE 1\ntensor w two 3\nDATA\n").unwrap();
    let err = load_archive(&path).unwrap_err();
    match err {
        ArchiveError::BadManifest { line, .. } => assert_eq!(line, 2),
        other => panic!("unexpected error: {other:?}"),
    }
}
