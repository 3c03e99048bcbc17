//! End-to-end acceptance run: one PASS/FAIL line per check.

mod common;

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::Value;
use sre::checkpoint::load_checkpoint;
use sre::cli::{execute, Outcome, CHECKPOINT_FILE, REPORT_FILE};
use sre::features::export_feature_maps;
use sre::npy::{read_npy, write_npy, NpyArray};
use sre_core::data::{make_synthetic_dataset, SyntheticKind, SyntheticSpec};
use sre_core::eval::argmax;
use sre_core::kernel::{
    band_count, distance_matrix, kernel_param_count, standard_param_count, BandSpec, BandWeights, IndexMatrix,
};
use sre_core::layers::{BatchNorm, DenseConv, Linear, Mode, PointwiseConv, SreConv};
use sre_core::loss::{bce, cross_entropy};
use sre_core::network::{ConvKind, NetworkConfig, StageConfig};
use sre_core::testing::{central_difference, random_tensor, relative_error};
use sre_core::train::{train_run, TrainConfig};
use sre_core::{GridSymmetry, Network, Scalar, Tensor};

type Verdict = Result<String, String>;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(limit: Duration, start: Instant, v: Verdict) -> Verdict {
    let took = start.elapsed();
    let v = v.map(|d| format!("{d}; {:.1} s", took.as_secs_f64()));
    match v {
        Ok(d) if took > limit => Err(format!("{d} exceeds {} s", limit.as_secs())),
        other => other,
    }
}

fn cli(args: &[&str]) -> Outcome {
    execute(std::iter::once("sre").chain(args.iter().copied()))
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("UTF-8 temp path")
}

fn kernel_symmetry() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut kernels = 0;
    for (dims, sizes) in [(2, &[3usize, 5, 7, 9][..]), (3, &[3, 5][..])] {
        let group = GridSymmetry::all(dims);
        for &k in sizes {
            let spec = BandSpec::new(k, dims).map_err(|e| e.to_string())?;
            let idx = IndexMatrix::new(spec);
            let dist = distance_matrix(spec);
            for _ in 0..100 {
                let theta: Vec<f64> = (0..spec.bands()).map(|_| rng.random_range(-1.0..1.0)).collect();
                let theta = Tensor::from_vec(&[1, 1, spec.bands()], theta).unwrap();
                let kernel = idx.expand(&theta).unwrap();
                for g in &group {
                    if !g.transform(&kernel).unwrap().bit_eq(&kernel) {
                        return Err(format!("k={k} {dims}D not invariant under {}", g.label()));
                    }
                }
                let corner = dist
                    .values()
                    .data()
                    .iter()
                    .zip(kernel.data())
                    .any(|(&d, &v)| d > (k / 2) as f64 && v.to_bits() != 0);
                if corner {
                    return Err(format!("k={k} {dims}D has a nonzero corner"));
                }
                kernels += 1;
            }
        }
    }
    within(
        Duration::from_secs(5),
        start,
        Ok(format!("{kernels} kernels bit-identical under 8 / 48 symmetries, corners zero")),
    )
}

fn band_formulas() -> Verdict {
    for k in (1..=15).step_by(2) {
        let b = band_count(k).map_err(|e| e.to_string())?;
        if b != k / 2 + 2 {
            return Err(format!("band_count({k}) = {b}"));
        }
    }
    let spec = BandSpec::new(9, 2).unwrap();
    let (sre, std) = (kernel_param_count(64, 64, spec, true), standard_param_count(64, 64, spec, true));
    check(
        sre == 24_640 && std == 331_840,
        format!("b = k/2+2 for k = 1..15; 64→64 k=9: {sre} vs {std}"),
    )
}

const H: f64 = 1e-6;

fn dot(a: &Tensor<f64>, b: &Tensor<f64>) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

fn with(t: &Tensor<f64>, v: &[f64]) -> Tensor<f64> {
    Tensor::from_vec(t.dims(), v.to_vec()).unwrap()
}

struct Errors(Vec<(String, f64)>);

impl Errors {
    fn add(&mut self, name: impl Into<String>, analytic: &[f64], numeric: &[f64]) {
        self.0.push((name.into(), relative_error(analytic, numeric)));
    }

    fn worst(&self) -> (String, f64) {
        self.0
            .iter()
            .cloned()
            .fold((String::new(), 0.0), |a, b| if b.1 > a.1 { b } else { a })
    }
}

fn fd_sre(errs: &mut Errors, k: usize, dims: usize, x_dims: &[usize], c_out: usize) {
    let idx = IndexMatrix::new(BandSpec::new(k, dims).unwrap());
    let b = idx.spec().bands();
    let weights = BandWeights { theta: random_tensor(&[c_out, x_dims[1], b], 11), bias: random_tensor(&[c_out], 12) };
    let layer = SreConv::new(idx, weights).unwrap();
    let x = random_tensor(x_dims, 13);
    let (y, cache) = layer.forward(&x, Mode::Train).unwrap();
    let r = random_tensor(y.dims(), 14);
    let g = layer.backward(&r, cache).unwrap();
    let theta = layer.weights().theta.clone();
    let num = central_difference(
        |v| {
            let mut l = layer.clone();
            l.weights_mut().theta = with(&theta, v);
            dot(&l.forward(&x, Mode::Train).unwrap().0, &r)
        },
        theta.data(),
        H,
    );
    errs.add(format!("sre k={k} {dims}D theta"), g.weight.data(), &num);
    let bias = layer.weights().bias.clone();
    let num = central_difference(
        |v| {
            let mut l = layer.clone();
            l.weights_mut().bias = with(&bias, v);
            dot(&l.forward(&x, Mode::Train).unwrap().0, &r)
        },
        bias.data(),
        H,
    );
    errs.add(format!("sre k={k} {dims}D bias"), g.bias.data(), &num);
    let num = central_difference(|v| dot(&layer.forward(&with(&x, v), Mode::Train).unwrap().0, &r), x.data(), H);
    errs.add(format!("sre k={k} {dims}D input"), g.dx.data(), &num);
}

fn fd_layers(errs: &mut Errors) {
    let conv = DenseConv::new(2, random_tensor(&[2, 3, 3, 3], 1), random_tensor(&[2], 2)).unwrap();
    let x = random_tensor(&[2, 3, 5, 5], 3);
    let (y, cache) = conv.forward(&x, Mode::Train).unwrap();
    let r = random_tensor(y.dims(), 4);
    let g = conv.backward(&r, cache).unwrap();
    let w = conv.weight().clone();
    let num = central_difference(
        |v| {
            let mut l = conv.clone();
            *l.weight_mut() = with(&w, v);
            dot(&l.forward(&x, Mode::Train).unwrap().0, &r)
        },
        w.data(),
        H,
    );
    errs.add("dense conv weight", g.weight.data(), &num);

    let pw = PointwiseConv::new(random_tensor(&[3, 2], 5), random_tensor(&[3], 6)).unwrap();
    let x = random_tensor(&[2, 2, 3, 3], 7);
    let (y, cache) = pw.forward(&x).unwrap();
    let r = random_tensor(y.dims(), 8);
    let g = pw.backward(&r, cache).unwrap();
    let w = pw.weight().clone();
    let num = central_difference(
        |v| {
            let mut l = pw.clone();
            *l.weight_mut() = with(&w, v);
            dot(&l.forward(&x).unwrap().0, &r)
        },
        w.data(),
        H,
    );
    errs.add("pointwise weight", g.weight.data(), &num);
    let b = pw.bias().clone();
    let num = central_difference(
        |v| {
            let mut l = pw.clone();
            *l.bias_mut() = with(&b, v);
            dot(&l.forward(&x).unwrap().0, &r)
        },
        b.data(),
        H,
    );
    errs.add("pointwise bias", g.bias.data(), &num);
    let num = central_difference(|v| dot(&pw.forward(&with(&x, v)).unwrap().0, &r), x.data(), H);
    errs.add("pointwise input", g.dx.data(), &num);

    let mut bn = BatchNorm::<f64>::new(3).unwrap();
    bn.gamma = random_tensor(&[3], 9);
    bn.beta = random_tensor(&[3], 10);
    bn.running_var = random_tensor(&[3], 11).map(|v| v.abs() + 0.5);
    let x = random_tensor(&[2, 3, 3, 3], 12);
    for mode in [Mode::Train, Mode::Eval] {
        let (y, cache) = bn.clone().forward(&x, mode).unwrap();
        let r = random_tensor(y.dims(), 13);
        let g = bn.backward(&r, cache).unwrap();
        let num = central_difference(|v| dot(&bn.clone().forward(&with(&x, v), mode).unwrap().0, &r), x.data(), H);
        errs.add(format!("batch norm {mode:?} input"), g.dx.data(), &num);
        let gamma = bn.gamma.clone();
        let num = central_difference(
            |v| {
                let mut m = bn.clone();
                m.gamma = with(&gamma, v);
                dot(&m.forward(&x, mode).unwrap().0, &r)
            },
            gamma.data(),
            H,
        );
        errs.add(format!("batch norm {mode:?} gamma"), g.gamma.data(), &num);
        let beta = bn.beta.clone();
        let num = central_difference(
            |v| {
                let mut m = bn.clone();
                m.beta = with(&beta, v);
                dot(&m.forward(&x, mode).unwrap().0, &r)
            },
            beta.data(),
            H,
        );
        errs.add(format!("batch norm {mode:?} beta"), g.beta.data(), &num);
    }

    let lin = Linear::new(random_tensor(&[3, 4], 14), random_tensor(&[3], 15)).unwrap();
    let x = random_tensor(&[5, 4], 16);
    let (y, cache) = lin.forward(&x).unwrap();
    let r = random_tensor(y.dims(), 17);
    let g = lin.backward(&r, cache).unwrap();
    let w = lin.weight().clone();
    let num = central_difference(
        |v| {
            let mut l = lin.clone();
            *l.weight_mut() = with(&w, v);
            dot(&l.forward(&x).unwrap().0, &r)
        },
        w.data(),
        H,
    );
    errs.add("linear weight", g.weight.data(), &num);
    let num = central_difference(|v| dot(&lin.forward(&with(&x, v)).unwrap().0, &r), x.data(), H);
    errs.add("linear input", g.dx.data(), &num);

    let z = random_tensor(&[4, 3], 18).scale(3.0);
    let labels = [0, 2, 1, 2];
    let (_, g) = cross_entropy(&z, &labels).unwrap();
    let num = central_difference(|v| cross_entropy(&with(&z, v), &labels).unwrap().0, z.data(), H);
    errs.add("cross-entropy", g.data(), &num);
    let t = Tensor::from_f64(&[4, 3], &[1., 0., 1., 0., 0., 1., 1., 1., 0., 0., 1., 0.]).unwrap();
    let (_, g) = bce(&z, &t).unwrap();
    let num = central_difference(|v| bce(&with(&z, v), &t).unwrap().0, z.data(), H);
    errs.add("bce", g.data(), &num);
}

fn fd_network(errs: &mut Errors) -> Result<(), String> {
    let stage = |channels, downsample| StageConfig { channels, kernel_size: 3, blocks: 1, downsample };
    let cfg = NetworkConfig {
        stem_channels: 2,
        stages: vec![stage(2, false), stage(3, true)],
        seed: 4,
        ..NetworkConfig::default()
    };
    let mut net = Network::<f64>::build(&cfg).unwrap();
    net.set_input_norm(0.1, 0.9).unwrap();
    let x = random_tensor(&[2, 1, 8, 8], 7);
    let labels = [1, 0];
    let (logits, cache) = net.forward(&x, Mode::Train).unwrap();
    let grads = net.backward(&cross_entropy(&logits, &labels).unwrap().1, cache).unwrap();
    let loss_at = |m: &Network<f64>, x: &Tensor<f64>| {
        let (l, _) = m.clone().forward(x, Mode::Train).unwrap();
        cross_entropy(&l, &labels).unwrap().0
    };
    for (name, p) in net.params().into_iter().map(|(n, p)| (n, p.clone())) {
        let num = central_difference(
            |v| {
                let mut m = net.clone();
                m.set_tensor(&name, with(&p, v)).unwrap();
                loss_at(&m, &x)
            },
            p.data(),
            H,
        );
        let analytic = grads.get(&name).unwrap().data();
        if name.ends_with(".conv.bias") && !name.contains("transition") {
            if analytic.iter().any(|v| v.abs() > 1e-12) || num.iter().any(|v| v.abs() > 1e-8) {
                return Err(format!("{name}: bias ahead of batch norm has a nonzero gradient"));
            }
            continue;
        }
        errs.add(format!("network {name}"), analytic, &num);
    }
    let num = central_difference(|v| loss_at(&net, &with(&x, v)), x.data(), H);
    errs.add("network input", grads.input.data(), &num);
    Ok(())
}

fn gradient_fidelity() -> Verdict {
    let start = Instant::now();
    let mut errs = Errors(Vec::new());
    fd_sre(&mut errs, 3, 2, &[1, 1, 5, 5], 1);
    fd_sre(&mut errs, 5, 2, &[2, 3, 6, 6], 2);
    fd_sre(&mut errs, 9, 2, &[1, 2, 4, 4], 2);
    fd_sre(&mut errs, 3, 3, &[1, 2, 4, 4, 4], 2);
    fd_layers(&mut errs);
    fd_network(&mut errs)?;
    let (name, worst) = errs.worst();
    within(
        Duration::from_secs(60),
        start,
        check(worst < 1e-5, format!("{} checks, max relative error {worst:.2e} ({name})", errs.0.len())),
    )
}

/// Zero-mean white noise; a constant offset would mostly vanish in the global pool.
fn random_batch<T: Scalar>(n: usize, extent: usize, seed: u64) -> Tensor<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = (0..n * extent * extent).map(|_| T::from_f64(StandardNormal.sample(&mut rng))).collect();
    Tensor::from_vec(&[n, 1, extent, extent], v).unwrap()
}

/// Per input: worst absolute logit change and whether any argmax moved.
fn logit_drift<T: Scalar>(net: &Network<T>, x: &Tensor<T>) -> Vec<(f64, bool)> {
    let base = net.predict(x).unwrap();
    let c = base.dims()[1];
    let n = x.dims()[0];
    let mut out = vec![(0.0f64, false); n];
    for g in GridSymmetry::all(2) {
        let moved = net.predict(&g.transform(x).unwrap()).unwrap();
        for (i, slot) in out.iter_mut().enumerate() {
            let (a, b) = (&base.data()[i * c..(i + 1) * c], &moved.data()[i * c..(i + 1) * c]);
            let d = a.iter().zip(b).map(|(&p, &q)| (p.to_f64() - q.to_f64()).abs()).fold(0.0, f64::max);
            slot.0 = slot.0.max(d);
            slot.1 |= argmax(a) != argmax(b);
        }
    }
    out
}

fn c6_config(kind: ConvKind) -> NetworkConfig {
    let stage = |channels, kernel_size, downsample| StageConfig { channels, kernel_size, blocks: 1, downsample };
    NetworkConfig {
        stem_channels: 8,
        stages: vec![stage(8, 9, false), stage(16, 5, true)],
        num_classes: 3,
        conv_kind: kind,
        ..NetworkConfig::default()
    }
}

fn logit_invariance() -> Verdict {
    let start = Instant::now();
    let mut spec = SyntheticSpec::new(SyntheticKind::OrientedShapes, 40, 32, 3, 9);
    spec.test_n = Some(10);
    let data = make_synthetic_dataset(&spec).map_err(|e| e.to_string())?;
    let train = TrainConfig { epochs: 2, batch_size: Some(16), ..TrainConfig::default() };
    let mut nets = Vec::new();
    for kind in [ConvKind::Sre, ConvKind::Standard] {
        let mut fresh = Network::<f32>::build(&c6_config(kind)).unwrap();
        fresh.precompute().unwrap();
        let mut trained = Network::<f32>::build(&c6_config(kind)).unwrap();
        train_run(&mut trained, &data, &train, |_, _| Ok(())).map_err(|e| e.to_string())?;
        trained.precompute().unwrap();
        nets.push((kind, fresh, trained));
    }
    let x32 = random_batch::<f32>(100, 32, 21);
    let x64 = random_batch::<f64>(100, 32, 21);
    let mut notes = Vec::new();
    for (kind, fresh, trained) in &nets {
        for (state, net) in [("fresh", fresh), ("trained", trained)] {
            let d32 = logit_drift(net, &x32);
            let mut net64 = net.cast::<f64>();
            net64.precompute().unwrap();
            let d64 = logit_drift(&net64, &x64);
            let worst32 = d32.iter().map(|d| d.0).fold(0.0, f64::max);
            let worst64 = d64.iter().map(|d| d.0).fold(0.0, f64::max);
            match kind {
                ConvKind::Sre => {
                    let flips = d32.iter().chain(&d64).filter(|d| d.1).count();
                    if worst32 > 1e-4 || worst64 != 0.0 || flips > 0 {
                        return Err(format!(
                            "SRE {state}: drift {worst32:.1e} (32-bit) {worst64:.1e} (64-bit), {flips} argmax changes"
                        ));
                    }
                    notes.push(format!("SRE {state} {worst32:.0e}/0"));
                }
                ConvKind::Standard => {
                    let violating = d32.iter().filter(|d| d.0 > 1e-2).count();
                    if violating < 90 {
                        return Err(format!("standard {state}: only {violating}/100 inputs exceed 1e-2"));
                    }
                    notes.push(format!("standard {state} {violating}/100 over 1e-2"));
                }
            }
        }
    }
    within(Duration::from_secs(60), start, Ok(notes.join(", ")))
}

fn flop_parity() -> Verdict {
    let stage = |channels, kernel_size, downsample| StageConfig { channels, kernel_size, blocks: 1, downsample };
    let configs = [
        (NetworkConfig::default(), 28),
        (c6_config(ConvKind::Sre), 32),
        (
            NetworkConfig {
                dims: 3,
                stem_channels: 4,
                stages: vec![stage(8, 5, false), stage(8, 3, true)],
                ..NetworkConfig::default()
            },
            16,
        ),
    ];
    let mut notes = Vec::new();
    for (cfg, extent) in configs {
        let sre = Network::<f32>::build(&cfg).unwrap();
        let std = Network::<f32>::build(&cfg.twin(ConvKind::Standard)).unwrap();
        let (a, b) = (sre.inference_macs(extent), std.inference_macs(extent));
        if a != b || a == 0 {
            return Err(format!("{}D extent {extent}: {a} vs {b}", cfg.dims));
        }
        notes.push(format!("{}D@{extent} {a}", cfg.dims));
    }
    Ok(format!("equal multiply-adds: {}", notes.join(", ")))
}

struct Trend {
    dir: PathBuf,
}

const C6_DATA: &str = r#"{"synthetic": {"kind": "oriented-shapes", "n": 667, "test_n": 167, "size": 32, "num_classes": 3, "seed": 1}}"#;

fn c6_run_config() -> String {
    format!(
        r#"{{
  "network": {{
    "stem_channels": 8,
    "stages": [{{"channels": 8, "kernel_size": 9}}, {{"channels": 16, "kernel_size": 5, "downsample": true}}],
    "num_classes": 3
  }},
  "train": {{"epochs": 20, "batch_size": 32}},
  "data": {C6_DATA}
}}"#
    )
}

fn trend(t: &Trend) -> Verdict {
    let start = Instant::now();
    let cfg = t.dir.join("trend.json");
    std::fs::write(&cfg, c6_run_config()).unwrap();
    let mut rows = Vec::new();
    for kind in ["sre", "standard"] {
        let out = t.dir.join(kind);
        let o = cli(&[
            "train", "--config", path_str(&cfg), "--out", path_str(&out), "--override", &format!("conv_kind={kind}"),
        ]);
        if o.code != 0 {
            return Err(format!("{kind} training failed: {}", o.json));
        }
        let ckpt = out.join(CHECKPOINT_FILE);
        let r = cli(&["eval", "--checkpoint", path_str(&ckpt), "--protocol", "rotated"]);
        if r.code != 0 {
            return Err(format!("{kind} eval failed: {}", r.json));
        }
        rows.push((r.json["original"].as_f64().unwrap(), r.json["mean"].as_f64().unwrap()));
    }
    let [(so, sr), (to, tr)] = [rows[0], rows[1]];
    let detail = format!(
        "SRE {:.1}→{:.1}, standard {:.1}→{:.1}",
        100.0 * so,
        100.0 * sr,
        100.0 * to,
        100.0 * tr
    );
    let ok = so >= 0.85 && to >= 0.85 && (so - sr).abs() <= 0.05 && to - tr >= 0.15;
    within(Duration::from_secs(15 * 60), start, check(ok, detail))
}

fn reflection(t: &Trend) -> Verdict {
    let ckpt = t.dir.join("sre").join(CHECKPOINT_FILE);
    if !ckpt.exists() {
        return Err("no trained SRE checkpoint".into());
    }
    let o = cli(&["eval", "--checkpoint", path_str(&ckpt), "--protocol", "reflected"]);
    let orig = o.json["original"].as_f64();
    let accs: Vec<f64> = o.json["accuracies"].as_array().map_or(vec![], |a| a.iter().filter_map(Value::as_f64).collect());
    let ok = o.code == 0 && !accs.is_empty() && accs.iter().all(|&a| Some(a) == orig) && o.json["mean"].as_f64() == orig;
    check(ok, format!("original {orig:?}, flips {accs:?}"))
}

fn parser_robustness() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for round in 0..200 {
        let shape = vec![rng.random_range(0..4), rng.random_range(1..5)];
        let n = shape[0] * shape[1];
        let u: Vec<u8> = (0..n).map(|_| rng.random()).collect();
        let i: Vec<i64> = (0..n).map(|_| rng.random()).collect();
        let f: Vec<f32> = (0..n).map(|_| f32::from_bits(rng.random())).collect();
        let arrays = [
            NpyArray::from_u8(shape.clone(), u).unwrap(),
            NpyArray::from_i64(shape.clone(), &i).unwrap(),
            NpyArray::from_f32(shape.clone(), &f).unwrap(),
        ];
        for a in arrays {
            if read_npy(&write_npy(&a)).as_ref() != Ok(&a) {
                return Err(format!("round trip {round} changed a {} array", a.dtype()));
            }
        }
    }
    let mut rejected = 0;
    for seed in 0..10_000 {
        let bytes = common::fuzzed_npy(seed);
        match std::panic::catch_unwind(|| read_npy(&bytes)) {
            Ok(r) => rejected += r.is_err() as usize,
            Err(_) => return Err(format!("reader panicked on fuzz case {seed}")),
        }
    }
    within(
        Duration::from_secs(30),
        start,
        Ok(format!("u1/i8/f4 bit-exact; 10000 fuzzed inputs, {rejected} typed errors, no panics")),
    )
}

fn determinism(t: &Trend) -> Verdict {
    std::env::set_var(sre::protocol::THREADS_VAR, "1");
    let cfg = t.dir.join("small.json");
    std::fs::write(&cfg, common::small_config("sre")).unwrap();
    let mut files = Vec::new();
    for run in ["det_a", "det_b"] {
        let out = t.dir.join(run);
        let o = cli(&["train", "--config", path_str(&cfg), "--out", path_str(&out), "--seed", "17"]);
        if o.code != 0 {
            return Err(format!("training failed: {}", o.json));
        }
        let read = |f: &str| std::fs::read(out.join(f)).unwrap();
        files.push((read(REPORT_FILE), read(CHECKPOINT_FILE)));
    }
    check(
        files[0] == files[1],
        format!("report ({} B) and checkpoint ({} B) byte-identical", files[0].0.len(), files[0].1.len()),
    )
}

fn feature_consistency(t: &Trend) -> Verdict {
    let start = Instant::now();
    let spec: SyntheticSpec = serde_json::from_value(serde_json::from_str::<Value>(C6_DATA).unwrap()["synthetic"].clone()).unwrap();
    let data = make_synthetic_dataset(&spec).map_err(|e| e.to_string())?;
    let angles: Vec<f64> = (0..6).map(|i| 60.0 * i as f64).collect();
    let mut nets = Vec::new();
    for kind in ["sre", "standard"] {
        let mut net: Network<f64> = load_checkpoint(&t.dir.join(kind).join(CHECKPOINT_FILE)).map_err(|e| e.to_string())?;
        net.precompute().unwrap();
        nets.push(net);
    }
    let mut pairs = Vec::new();
    for (i, sample) in [0usize, 1, 2, 200, 401].into_iter().enumerate() {
        let x = data.test.input::<f64>(&[sample]).unwrap();
        let mut scores = Vec::new();
        for (net, kind) in nets.iter().zip(["sre", "standard"]) {
            let out = t.dir.join(format!("panels_{kind}_{i}"));
            scores.push(export_feature_maps(net, &x, &angles, &out).map_err(|e| e.to_string())?.consistency);
        }
        pairs.push((scores[0], scores[1]));
    }
    let ok = pairs.iter().all(|(s, d)| s < d);
    let mean = |f: fn(&(f64, f64)) -> f64| pairs.iter().map(f).sum::<f64>() / pairs.len() as f64;
    within(
        Duration::from_secs(60),
        start,
        check(ok, format!("masked panel difference SRE {:.4} vs standard {:.4} over {} inputs", mean(|p| p.0), mean(|p| p.1), pairs.len())),
    )
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let t = Trend { dir: dir.path().to_path_buf() };
    let criteria: Vec<(&str, Box<dyn Fn() -> Verdict + '_>)> = vec![
        ("kernel symmetry", Box::new(kernel_symmetry)),
        ("band count and parameter formulas", Box::new(band_formulas)),
        ("gradient fidelity", Box::new(gradient_fidelity)),
        ("logit invariance", Box::new(logit_invariance)),
        ("multiply-add parity", Box::new(flop_parity)),
        ("rotation trend on oriented shapes", Box::new(|| trend(&t))),
        ("reflection exactness", Box::new(|| reflection(&t))),
        ("NPY parser robustness", Box::new(parser_robustness)),
        ("training determinism", Box::new(|| determinism(&t))),
        ("feature-map consistency", Box::new(|| feature_consistency(&t))),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let verdict = std::panic::catch_unwind(std::panic::AssertUnwindSafe(run))
            .unwrap_or_else(|_| Err("panicked".into()));
        match verdict {
            Ok(d) => println!("PASS {:>2} {name}: {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {d}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
