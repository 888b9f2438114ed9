use proptest::prelude::*;
use tensor_merge::dtype::{bf16_to_f32, f16_to_f32, f32_to_bf16, f32_to_f16};
use tensor_merge::{
    glob_match, load_tensors, merge_checkpoints, render_table, run_sweep, save_tensors,
    slerp_slice, tensor_bytes, Dtype, MergeError, MergeMethod, MergeSpec, SweepConfig, Tensor,
    TensorSet,
};

fn f32_tensor(shape: Vec<usize>, values: &[f32]) -> Tensor {
    Tensor::from_f32(shape, values).expect("valid f32 tensor")
}

fn f16_tensor(shape: Vec<usize>, values: &[f32]) -> Tensor {
    let data = values.iter().flat_map(|v| f32_to_f16(*v).to_le_bytes()).collect();
    Tensor::new(Dtype::F16, shape, data).expect("valid f16 tensor")
}

fn bf16_tensor(shape: Vec<usize>, values: &[f32]) -> Tensor {
    let data = values.iter().flat_map(|v| f32_to_bf16(*v).to_le_bytes()).collect();
    Tensor::new(Dtype::BF16, shape, data).expect("valid bf16 tensor")
}

fn i64_tensor(shape: Vec<usize>, values: &[i64]) -> Tensor {
    let data = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    Tensor::new(Dtype::I64, shape, data).expect("valid i64 tensor")
}

fn set_of(entries: Vec<(&str, Tensor)>) -> TensorSet {
    let mut set = TensorSet::default();
    for (name, tensor) in entries {
        set.tensors.insert(name.to_string(), tensor);
    }
    set
}

fn decode_f32(tensor: &Tensor) -> Vec<f32> {
    assert_eq!(tensor.dtype, Dtype::F32);
    tensor.data.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect()
}

// Second implementation of the interpolation, written as a plain scalar loop,
// used as an oracle for the production path.
fn slerp_oracle(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    let mut sum_a = 0.0;
    let mut sum_b = 0.0;
    let mut dot = 0.0;
    for i in 0..a.len() {
        sum_a += a[i] * a[i];
        sum_b += b[i] * b[i];
        dot += a[i] * b[i];
    }
    let mut cos = dot / (sum_a.sqrt() * sum_b.sqrt());
    if cos > 1.0 {
        cos = 1.0;
    }
    if cos < -1.0 {
        cos = -1.0;
    }
    let mut out = Vec::with_capacity(a.len());
    if cos.abs() > 1.0 - 1e-7 {
        for i in 0..a.len() {
            out.push((1.0 - t) * a[i] + t * b[i]);
        }
    } else {
        let omega = cos.acos();
        let coeff_a = ((1.0 - t) * omega).sin() / omega.sin();
        let coeff_b = (t * omega).sin() / omega.sin();
        for i in 0..a.len() {
            out.push(coeff_a * a[i] + coeff_b * b[i]);
        }
    }
    out
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

// ---------------------------------------------------------------- container

#[test]
fn container_loads_basic_two_tensor_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pair.tensors");
    let set = set_of(vec![
        ("layer.weight", f32_tensor(vec![2, 2], &[1.0, 2.0, 3.0, 4.0])),
        ("layer.bias", f32_tensor(vec![3], &[0.5, -0.5, 0.25])),
    ]);
    save_tensors(&set, &path).unwrap();

    let loaded = load_tensors(&path).unwrap();
    assert_eq!(loaded.tensors.len(), 2);
    assert_eq!(loaded.tensors["layer.weight"].shape, vec![2, 2]);
    assert_eq!(decode_f32(&loaded.tensors["layer.bias"]), vec![0.5, -0.5, 0.25]);
}

#[test]
fn container_round_trip_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mixed.tensors");
    let mut set = set_of(vec![
        ("a.float", f32_tensor(vec![4], &[1.5, -2.25, 0.0, 3.75])),
        ("b.half", f16_tensor(vec![2], &[1.0, -0.5])),
        ("c.brain", bf16_tensor(vec![2], &[2.0, 4.0])),
        ("d.ints", i64_tensor(vec![3], &[7, -9, 11])),
    ]);
    set.metadata.insert("producer".into(), "merge-test".into());

    save_tensors(&set, &path).unwrap();
    let first_bytes = std::fs::read(&path).unwrap();
    let loaded = load_tensors(&path).unwrap();
    assert_eq!(loaded, set);

    let second_bytes = tensor_bytes(&loaded).unwrap();
    assert_eq!(first_bytes, second_bytes, "save-load-save must be byte stable");
}

#[test]
fn load_rejects_offsets_past_end_of_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("short.tensors");
    let header = br#"{"w":{"dtype":"F32","shape":[4],"data_offsets":[0,16]}}"#;
    let mut bytes = Vec::new();
    bytes.extend_from_slice(&(header.len() as u64).to_le_bytes());
    bytes.extend_from_slice(header);
    bytes.extend_from_slice(&[0u8; 8]); // only half the declared payload
    std::fs::write(&path, &bytes).unwrap();

    match load_tensors(&path) {
        Err(MergeError::TruncatedData { name, needed, available }) => {
            assert_eq!(name, "w");
            assert_eq!(needed, 16);
            assert_eq!(available, 8);
        }
        other => panic!("expected TruncatedData, got {other:?}"),
    }
}

#[test]
fn load_rejects_corrupt_headers() {
    let dir = tempfile::tempdir().unwrap();

    let write = |name: &str, bytes: &[u8]| {
        let path = dir.path().join(name);
        std::fs::write(&path, bytes).unwrap();
        path
    };

    // File shorter than the 8-byte length field.
    let p = write("tiny", &[1, 2, 3]);
    assert!(matches!(load_tensors(&p), Err(MergeError::CorruptHeader(_))));

    // Header length field pointing past end of file.
    let mut bytes = Vec::new();
    bytes.extend_from_slice(&(1000u64).to_le_bytes());
    bytes.extend_from_slice(b"{}");
    let p = write("overlong", &bytes);
    assert!(matches!(load_tensors(&p), Err(MergeError::TruncatedData { .. })));

    // Header that is not JSON.
    let mut bytes = Vec::new();
    bytes.extend_from_slice(&(7u64).to_le_bytes());
    bytes.extend_from_slice(b"not-json");
    let p = write("notjson", &bytes[..15]);
    assert!(matches!(load_tensors(&p), Err(MergeError::CorruptHeader(_))));

    // Unknown dtype tag.
    let header = br#"{"w":{"dtype":"Q8","shape":[1],"data_offsets":[0,1]}}"#;
    let mut bytes = Vec::new();
    bytes.extend_from_slice(&(header.len() as u64).to_le_bytes());
    bytes.extend_from_slice(header);
    bytes.push(0);
    let p = write("baddtype", &bytes);
    assert!(matches!(load_tensors(&p), Err(MergeError::UnsupportedDtype(_))));

    // Span length disagrees with dtype * shape.
    let header = br#"{"w":{"dtype":"F32","shape":[2],"data_offsets":[0,4]}}"#;
    let mut bytes = Vec::new();
    bytes.extend_from_slice(&(header.len() as u64).to_le_bytes());
    bytes.extend_from_slice(header);
    bytes.extend_from_slice(&[0u8; 4]);
    let p = write("badspan", &bytes);
    assert!(matches!(load_tensors(&p), Err(MergeError::CorruptHeader(_))));

    // Overlapping spans.
    let header = concat!(
        r#"{"v":{"dtype":"F32","shape":[1],"data_offsets":[0,4]},"#,
        r#""w":{"dtype":"F32","shape":[1],"data_offsets":[2,6]}}"#
    )
    .as_bytes();
    let mut bytes = Vec::new();
    bytes.extend_from_slice(&(header.len() as u64).to_le_bytes());
    bytes.extend_from_slice(header);
    bytes.extend_from_slice(&[0u8; 6]);
    let p = write("overlap", &bytes);
    assert!(matches!(load_tensors(&p), Err(MergeError::CorruptHeader(_))));

    // Trailing bytes the header never accounts for.
    let header = br#"{"w":{"dtype":"F32","shape":[1],"data_offsets":[0,4]}}"#;
    let mut bytes = Vec::new();
    bytes.extend_from_slice(&(header.len() as u64).to_le_bytes());
    bytes.extend_from_slice(header);
    bytes.extend_from_slice(&[0u8; 9]);
    let p = write("tail", &bytes);
    assert!(matches!(load_tensors(&p), Err(MergeError::CorruptHeader(_))));
}

#[test]
fn tensor_construction_checks_byte_length() {
    match Tensor::new(Dtype::F32, vec![2, 2], vec![0u8; 15]) {
        Err(MergeError::CorruptHeader(msg)) => assert!(msg.contains("16")),
        other => panic!("expected length error, got {other:?}"),
    }
}

// -------------------------------------------------------------- slerp math

#[test]
fn endpoints_reproduce_inputs_exactly() {
    let a = vec![0.3, -1.2, 4.5, 0.007];
    let b = vec![2.0, 0.1, -3.0, 5.5];
    let (at_zero, _) = slerp_slice(&a, &b, 0.0, 1e-7).unwrap();
    let (at_one, _) = slerp_slice(&a, &b, 1.0, 1e-7).unwrap();
    assert_eq!(at_zero, a);
    assert_eq!(at_one, b);
}

#[test]
fn orthonormal_midpoint_matches_closed_form() {
    let a = vec![1.0, 0.0, 0.0, 0.0];
    let b = vec![0.0, 1.0, 0.0, 0.0];
    let (mid, method) = slerp_slice(&a, &b, 0.5, 1e-7).unwrap();
    assert_eq!(method, MergeMethod::Slerp);

    // sin(pi/4)/sin(pi/2) on both coefficients: (a + b) / sqrt(2).
    let expected = 1.0 / 2.0f64.sqrt();
    assert!((mid[0] - expected).abs() < 1e-12);
    assert!((mid[1] - expected).abs() < 1e-12);
    assert_eq!(mid[2], 0.0);
    assert!((norm(&mid) - 1.0).abs() < 1e-6);
}

#[test]
fn slerp_is_symmetric_under_argument_reversal() {
    let a = vec![0.9, -0.2, 0.4, 1.3, -2.2];
    let b = vec![-0.5, 1.1, 0.6, 0.2, 0.8];
    for t in [0.0, 0.1, 0.25, 0.5, 0.77, 1.0] {
        let (fwd, _) = slerp_slice(&a, &b, t, 1e-7).unwrap();
        let (rev, _) = slerp_slice(&b, &a, 1.0 - t, 1e-7).unwrap();
        for (x, y) in fwd.iter().zip(&rev) {
            assert!((x - y).abs() < 1e-6, "t={t}: {x} vs {y}");
        }
    }
}

#[test]
fn lerp_fallback_is_continuous_with_slerp_at_tiny_angles() {
    // Unit vectors separated by 1e-4 radians: inside the fallback window.
    let theta: f64 = 1e-4;
    let a = vec![1.0, 0.0, 0.0];
    let b = vec![theta.cos(), theta.sin(), 0.0];
    let t = 0.4;

    let (result, method) = slerp_slice(&a, &b, t, 1e-7).unwrap();
    assert_eq!(method, MergeMethod::LerpFallback);

    // Exact great-circle formula evaluated by hand at the same angle.
    let coeff_a = ((1.0 - t) * theta).sin() / theta.sin();
    let coeff_b = (t * theta).sin() / theta.sin();
    for i in 0..3 {
        let exact = coeff_a * a[i] + coeff_b * b[i];
        assert!((result[i] - exact).abs() < 1e-5, "component {i}");
    }

    // A clearly separated pair takes the spherical path.
    let wide = vec![0.1f64.cos(), 0.1f64.sin(), 0.0];
    let (_, method) = slerp_slice(&a, &wide, t, 1e-7).unwrap();
    assert_eq!(method, MergeMethod::Slerp);
}

#[test]
fn zero_norm_input_is_rejected() {
    let zero = vec![0.0, 0.0];
    let b = vec![1.0, 2.0];
    assert!(matches!(slerp_slice(&zero, &b, 0.5, 1e-7), Err(MergeError::ZeroNorm)));
    assert!(matches!(slerp_slice(&b, &zero, 0.5, 1e-7), Err(MergeError::ZeroNorm)));
}

#[test]
fn length_mismatch_is_rejected() {
    let a = vec![1.0, 2.0];
    let b = vec![1.0, 2.0, 3.0];
    assert!(matches!(
        slerp_slice(&a, &b, 0.5, 1e-7),
        Err(MergeError::ShapeMismatch { expected: 2, got: 3 })
    ));
}

proptest! {
    #[test]
    fn unit_norm_inputs_stay_on_the_sphere(
        raw_a in prop::collection::vec(-1.0f64..1.0, 6),
        raw_b in prop::collection::vec(-1.0f64..1.0, 6),
        t in 0.0f64..=1.0,
    ) {
        let na = norm(&raw_a);
        let nb = norm(&raw_b);
        prop_assume!(na > 1e-3 && nb > 1e-3);
        let a: Vec<f64> = raw_a.iter().map(|x| x / na).collect();
        let b: Vec<f64> = raw_b.iter().map(|x| x / nb).collect();
        let cos: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        // Near-collinear and near-antipodal pairs leave the spherical path.
        prop_assume!(cos.abs() < 0.999);

        let (out, method) = slerp_slice(&a, &b, t, 1e-7).unwrap();
        prop_assert_eq!(method, MergeMethod::Slerp);
        prop_assert!((norm(&out) - 1.0).abs() < 1e-5);
    }
}

// ------------------------------------------------------------------- merge

fn checkpoint_pair() -> (TensorSet, TensorSet) {
    let a = set_of(vec![
        ("model.w1", f32_tensor(vec![2, 2], &[0.6, -1.2, 0.9, 2.4])),
        ("model.w2", f32_tensor(vec![3], &[1.0, 0.0, -1.0])),
        ("model.steps", i64_tensor(vec![1], &[1200])),
    ]);
    let b = set_of(vec![
        ("model.w1", f32_tensor(vec![2, 2], &[-0.3, 0.8, 1.5, -2.0])),
        ("model.w2", f32_tensor(vec![3], &[0.5, 0.5, 0.5])),
        ("model.steps", i64_tensor(vec![1], &[9999])),
    ]);
    (a, b)
}

#[test]
fn merge_at_zero_is_bit_equal_to_first_input() {
    let (a, b) = checkpoint_pair();
    let spec = MergeSpec::new(0.0).unwrap();
    let (merged, report) = merge_checkpoints(&a, &b, &spec, &[]).unwrap();
    assert_eq!(tensor_bytes(&merged).unwrap(), tensor_bytes(&a).unwrap());
    assert_eq!(report.copied_endpoint, 2);
    assert_eq!(report.copied_integer, 1);
}

#[test]
fn merge_at_one_reproduces_second_input_floats() {
    let (a, b) = checkpoint_pair();
    let spec = MergeSpec::new(1.0).unwrap();
    let (merged, _) = merge_checkpoints(&a, &b, &spec, &[]).unwrap();
    assert_eq!(merged.tensors["model.w1"].data, b.tensors["model.w1"].data);
    assert_eq!(merged.tensors["model.w2"].data, b.tensors["model.w2"].data);
    // Integer buffers always travel with the first checkpoint.
    assert_eq!(merged.tensors["model.steps"].data, a.tensors["model.steps"].data);
}

#[test]
fn identical_checkpoints_merge_to_themselves_for_every_t() {
    let (a, _) = checkpoint_pair();
    for t in [0.0, 0.3, 0.5, 0.8, 1.0] {
        let spec = MergeSpec::new(t).unwrap();
        let (merged, _) = merge_checkpoints(&a, &a, &spec, &[]).unwrap();
        assert_eq!(
            tensor_bytes(&merged).unwrap(),
            tensor_bytes(&a).unwrap(),
            "t={t} should leave identical checkpoints untouched"
        );
    }
}

#[test]
fn merge_matches_independent_scalar_implementation() {
    let (a, b) = checkpoint_pair();
    let spec = MergeSpec::new(0.3).unwrap();
    let (merged, report) = merge_checkpoints(&a, &b, &spec, &[]).unwrap();
    assert_eq!(report.slerped, 2);

    for name in ["model.w1", "model.w2"] {
        let va = a.tensors[name].to_f64_vec().unwrap();
        let vb = b.tensors[name].to_f64_vec().unwrap();
        let expected = slerp_oracle(&va, &vb, 0.3);
        let got = decode_f32(&merged.tensors[name]);
        for (g, e) in got.iter().zip(&expected) {
            let e32 = *e as f32;
            let scale = e32.abs().max(1e-6);
            assert!(
                (g - e32).abs() / scale < 1e-6,
                "{name}: {g} vs oracle {e32}"
            );
        }
    }
}

#[test]
fn half_precision_storage_merges_through_wide_arithmetic() {
    let values_a = [0.5f32, -1.25, 2.0, 0.125];
    let values_b = [1.5f32, 0.75, -2.5, 0.0625];
    let a = set_of(vec![
        ("h", f16_tensor(vec![4], &values_a)),
        ("bh", bf16_tensor(vec![4], &values_a)),
    ]);
    let b = set_of(vec![
        ("h", f16_tensor(vec![4], &values_b)),
        ("bh", bf16_tensor(vec![4], &values_b)),
    ]);
    let spec = MergeSpec::new(0.5).unwrap();
    let (merged, _) = merge_checkpoints(&a, &b, &spec, &[]).unwrap();

    assert_eq!(merged.tensors["h"].dtype, Dtype::F16);
    assert_eq!(merged.tensors["bh"].dtype, Dtype::BF16);

    let oracle = slerp_oracle(
        &values_a.iter().map(|v| *v as f64).collect::<Vec<_>>(),
        &values_b.iter().map(|v| *v as f64).collect::<Vec<_>>(),
        0.5,
    );
    let h: Vec<f32> = merged.tensors["h"]
        .data
        .chunks_exact(2)
        .map(|c| f16_to_f32(u16::from_le_bytes(c.try_into().unwrap())))
        .collect();
    let bh: Vec<f32> = merged.tensors["bh"]
        .data
        .chunks_exact(2)
        .map(|c| bf16_to_f32(u16::from_le_bytes(c.try_into().unwrap())))
        .collect();
    for i in 0..4 {
        // Tolerances sized to each format's mantissa width.
        assert!((h[i] as f64 - oracle[i]).abs() < 2e-3, "f16 lane {i}");
        assert!((bh[i] as f64 - oracle[i]).abs() < 2e-2, "bf16 lane {i}");
    }
}

#[test]
fn name_set_mismatch_lists_symmetric_difference() {
    let a = set_of(vec![
        ("w1", f32_tensor(vec![1], &[1.0])),
        ("w2", f32_tensor(vec![1], &[2.0])),
    ]);
    let b = set_of(vec![
        ("w2", f32_tensor(vec![1], &[3.0])),
        ("w3", f32_tensor(vec![1], &[4.0])),
    ]);
    let spec = MergeSpec::new(0.5).unwrap();
    match merge_checkpoints(&a, &b, &spec, &[]) {
        Err(MergeError::NameSetMismatch { only_a, only_b }) => {
            assert_eq!(only_a, vec!["w1".to_string()]);
            assert_eq!(only_b, vec!["w3".to_string()]);
        }
        other => panic!("expected NameSetMismatch, got {other:?}"),
    }
}

#[test]
fn per_tensor_failures_carry_the_tensor_name() {
    let spec = MergeSpec::new(0.5).unwrap();

    let a = set_of(vec![("model.bad", f32_tensor(vec![2], &[1.0, 2.0]))]);
    let b = set_of(vec![("model.bad", f32_tensor(vec![3], &[1.0, 2.0, 3.0]))]);
    match merge_checkpoints(&a, &b, &spec, &[]) {
        Err(MergeError::TensorFailed { name, reason }) => {
            assert_eq!(name, "model.bad");
            assert!(reason.contains("shape"));
        }
        other => panic!("expected shape failure, got {other:?}"),
    }

    let a = set_of(vec![("model.zero", f32_tensor(vec![2], &[0.0, 0.0]))]);
    let b = set_of(vec![("model.zero", f32_tensor(vec![2], &[1.0, 2.0]))]);
    match merge_checkpoints(&a, &b, &spec, &[]) {
        Err(MergeError::TensorFailed { name, reason }) => {
            assert_eq!(name, "model.zero");
            assert!(reason.contains("zero-norm"));
        }
        other => panic!("expected zero-norm failure, got {other:?}"),
    }

    let a = set_of(vec![("model.h", f16_tensor(vec![1], &[1.0]))]);
    let b = set_of(vec![("model.h", f32_tensor(vec![1], &[1.0]))]);
    match merge_checkpoints(&a, &b, &spec, &[]) {
        Err(MergeError::TensorFailed { name, reason }) => {
            assert_eq!(name, "model.h");
            assert!(reason.contains("dtype"));
        }
        other => panic!("expected dtype failure, got {other:?}"),
    }
}

#[test]
fn excluded_patterns_copy_from_first_input() {
    let a = set_of(vec![
        ("model.embed.weight", f32_tensor(vec![2], &[1.0, 2.0])),
        ("model.layer.weight", f32_tensor(vec![2], &[3.0, 4.0])),
    ]);
    let b = set_of(vec![
        ("model.embed.weight", f32_tensor(vec![2], &[9.0, 9.0])),
        ("model.layer.weight", f32_tensor(vec![2], &[5.0, 6.0])),
    ]);
    let spec = MergeSpec::new(0.7).unwrap();
    let (merged, report) =
        merge_checkpoints(&a, &b, &spec, &["model.embed.*".to_string()]).unwrap();

    assert_eq!(merged.tensors["model.embed.weight"].data, a.tensors["model.embed.weight"].data);
    assert_ne!(merged.tensors["model.layer.weight"].data, a.tensors["model.layer.weight"].data);
    assert_eq!(report.copied_excluded, 1);
    assert_eq!(report.slerped, 1);
}

#[test]
fn glob_patterns_span_prefixes_suffixes_and_infixes() {
    assert!(glob_match("model.embed.*", "model.embed.weight"));
    assert!(glob_match("*.bias", "model.layer7.bias"));
    assert!(glob_match("*norm*", "model.layernorm.weight"));
    assert!(glob_match("exact.name", "exact.name"));
    assert!(!glob_match("model.embed.*", "model.layer.weight"));
    assert!(!glob_match("*.bias", "model.bias.extra"));
}

#[test]
fn merge_spec_rejects_out_of_range_parameters() {
    assert!(matches!(MergeSpec::new(1.5), Err(MergeError::InvalidSpec(_))));
    assert!(matches!(MergeSpec::new(-0.1), Err(MergeError::InvalidSpec(_))));
    assert!(matches!(MergeSpec::new(f64::NAN), Err(MergeError::InvalidSpec(_))));
    let bad_eps = MergeSpec { t: 0.5, eps: 0.0 };
    assert!(matches!(bad_eps.validate(), Err(MergeError::InvalidSpec(_))));
}

// ------------------------------------------------------------------- sweep

fn sweep_inputs() -> (TensorSet, TensorSet) {
    let a = set_of(vec![
        ("w", f32_tensor(vec![4], &[1.0, 0.0, 0.5, -0.5])),
        ("v", f32_tensor(vec![2], &[2.0, -1.0])),
    ]);
    let b = set_of(vec![
        ("w", f32_tensor(vec![4], &[0.0, 1.0, -0.5, 0.5])),
        ("v", f32_tensor(vec![2], &[-1.0, 2.0])),
    ]);
    (a, b)
}

#[test]
fn sweep_collects_hook_metrics_in_order() {
    let (a, b) = sweep_inputs();
    let dir = tempfile::tempdir().unwrap();
    let config = SweepConfig {
        ts: vec![0.0, 0.5, 1.0],
        eps: 1e-7,
        exclude: vec![],
        eval_command: Some(r#"printf '{"checkpoint":"%s","score":42}' "{checkpoint}""#.into()),
        out_dir: dir.path().to_path_buf(),
    };
    let outcome = run_sweep(&a, &b, &config).unwrap();

    assert_eq!(outcome.rows.len(), 3);
    let ts: Vec<f64> = outcome.rows.iter().map(|r| r.t).collect();
    assert_eq!(ts, vec![0.0, 0.5, 1.0]);
    for row in &outcome.rows {
        assert!(row.eval_error.is_none());
        let metrics = row.metrics.as_ref().expect("hook metrics");
        assert_eq!(
            metrics["checkpoint"].as_str().unwrap(),
            row.checkpoint.display().to_string()
        );
        assert_eq!(metrics["score"], 42);
    }

    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("sweep.json")).unwrap()).unwrap();
    assert_eq!(summary["rows"].as_array().unwrap().len(), 3);

    let table = render_table(&outcome);
    assert!(table.contains("score"));
    assert_eq!(table.lines().count(), 4, "header plus one line per point");
}

#[test]
fn sweep_dedupes_duplicate_points() {
    let (a, b) = sweep_inputs();
    let dir = tempfile::tempdir().unwrap();
    let config = SweepConfig {
        ts: vec![0.3, 0.5, 0.3],
        eps: 1e-7,
        exclude: vec![],
        eval_command: None,
        out_dir: dir.path().to_path_buf(),
    };
    let outcome = run_sweep(&a, &b, &config).unwrap();
    let ts: Vec<f64> = outcome.rows.iter().map(|r| r.t).collect();
    assert_eq!(ts, vec![0.3, 0.5]);
}

#[test]
fn failing_hook_is_recorded_and_sweep_continues() {
    let (a, b) = sweep_inputs();
    let dir = tempfile::tempdir().unwrap();
    let config = SweepConfig {
        ts: vec![0.2, 0.8],
        eps: 1e-7,
        exclude: vec![],
        eval_command: Some("echo boom >&2; exit 3".into()),
        out_dir: dir.path().to_path_buf(),
    };
    let outcome = run_sweep(&a, &b, &config).unwrap();

    assert_eq!(outcome.rows.len(), 2);
    for row in &outcome.rows {
        assert!(row.metrics.is_none());
        let err = row.eval_error.as_ref().expect("recorded failure");
        assert!(err.contains("boom") || err.contains("3"), "got: {err}");
        assert!(row.checkpoint.exists(), "merge output still written");
    }

    let table = render_table(&outcome);
    assert!(table.contains("eval failed"));
}

#[test]
fn hook_stdout_must_be_json() {
    let (a, b) = sweep_inputs();
    let dir = tempfile::tempdir().unwrap();
    let config = SweepConfig {
        ts: vec![0.5],
        eps: 1e-7,
        exclude: vec![],
        eval_command: Some("echo plain-text".into()),
        out_dir: dir.path().to_path_buf(),
    };
    let outcome = run_sweep(&a, &b, &config).unwrap();
    let err = outcome.rows[0].eval_error.as_ref().expect("parse failure recorded");
    assert!(err.contains("JSON"));
}

#[test]
fn eleven_point_sweep_writes_eleven_checkpoints() {
    let (a, b) = sweep_inputs();
    let dir = tempfile::tempdir().unwrap();
    let config = SweepConfig {
        ts: (0..=10).map(|i| f64::from(i) / 10.0).collect(),
        eps: 1e-7,
        exclude: vec![],
        eval_command: None,
        out_dir: dir.path().to_path_buf(),
    };
    let outcome = run_sweep(&a, &b, &config).unwrap();

    assert_eq!(outcome.rows.len(), 11);
    for row in &outcome.rows {
        assert!(row.checkpoint.exists(), "missing checkpoint for t={}", row.t);
    }

    // The endpoints round-trip the inputs bit for bit.
    let at_zero = load_tensors(&outcome.rows[0].checkpoint).unwrap();
    assert_eq!(tensor_bytes(&at_zero).unwrap(), tensor_bytes(&a).unwrap());
    let at_one = load_tensors(&outcome.rows[10].checkpoint).unwrap();
    assert_eq!(at_one.tensors["w"].data, b.tensors["w"].data);
}

#[test]
fn sweep_requires_at_least_one_point() {
    let (a, b) = sweep_inputs();
    let dir = tempfile::tempdir().unwrap();
    let config = SweepConfig {
        ts: vec![],
        eps: 1e-7,
        exclude: vec![],
        eval_command: None,
        out_dir: dir.path().to_path_buf(),
    };
    assert!(matches!(run_sweep(&a, &b, &config), Err(MergeError::InvalidSpec(_))));
}
