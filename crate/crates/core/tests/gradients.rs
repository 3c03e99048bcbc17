use sre_core::kernel::{BandSpec, BandWeights, IndexMatrix};
use sre_core::layers::{
    avg_pool, avg_pool_backward, global_avg_pool, global_avg_pool_backward, BatchNorm, DenseConv, Linear, Mode,
    PointwiseConv, SreConv,
};
use sre_core::loss::{bce, cross_entropy};
use sre_core::network::{ConvKind, NetworkConfig, StageConfig};
use sre_core::testing::{central_difference, random_tensor, relative_error};
use sre_core::{Network, Tensor};

const H: f64 = 1e-6;

fn dot(a: &Tensor<f64>, b: &Tensor<f64>) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

fn with(t: &Tensor<f64>, v: &[f64]) -> Tensor<f64> {
    Tensor::from_vec(t.dims(), v.to_vec()).unwrap()
}

fn sre_layer(k: usize, dims: usize, c_in: usize, c_out: usize, seed: u64) -> SreConv<f64> {
    let idx = IndexMatrix::new(BandSpec::new(k, dims).unwrap());
    let b = idx.spec().bands();
    SreConv::new(
        idx,
        BandWeights {
            theta: random_tensor(&[c_out, c_in, b], seed),
            bias: random_tensor(&[c_out], seed + 1),
        },
    )
    .unwrap()
}

fn check_sre(k: usize, dims: usize, x_dims: &[usize], c_out: usize, tol: f64) {
    let layer = sre_layer(k, dims, x_dims[1], c_out, 11);
    let x = random_tensor(x_dims, 12);
    let (y, cache) = layer.forward(&x, Mode::Train).unwrap();
    let r = random_tensor(y.dims(), 13);
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
    let e = relative_error(g.weight.data(), &num);
    assert!(e < tol, "dTheta k={k} d={dims}: {e:e}");

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
    assert!(relative_error(g.bias.data(), &num) < tol);

    let num = central_difference(|v| dot(&layer.forward(&with(&x, v), Mode::Eval).unwrap().0, &r), x.data(), H);
    let e = relative_error(g.dx.data(), &num);
    assert!(e < tol, "dx k={k} d={dims}: {e:e}");
}

#[test]
fn sre_conv_2d() {
    check_sre(3, 2, &[1, 1, 5, 5], 1, 1e-7);
    check_sre(5, 2, &[2, 3, 6, 6], 2, 1e-7);
    check_sre(9, 2, &[1, 2, 4, 4], 2, 1e-7);
}

#[test]
fn sre_conv_3d() {
    check_sre(3, 3, &[1, 2, 4, 4, 4], 2, 1e-7);
}

#[test]
fn dense_conv() {
    let layer = DenseConv::new(2, random_tensor(&[2, 3, 3, 3], 1), random_tensor(&[2], 2)).unwrap();
    let x = random_tensor(&[2, 3, 5, 4], 3);
    let (y, cache) = layer.forward(&x, Mode::Train).unwrap();
    let r = random_tensor(y.dims(), 4);
    let g = layer.backward(&r, cache).unwrap();
    let w = layer.weight().clone();
    let num = central_difference(
        |v| {
            let mut l = layer.clone();
            *l.weight_mut() = with(&w, v);
            dot(&l.forward(&x, Mode::Train).unwrap().0, &r)
        },
        w.data(),
        H,
    );
    assert!(relative_error(g.weight.data(), &num) < 1e-7);
    let num = central_difference(|v| dot(&layer.forward(&with(&x, v), Mode::Train).unwrap().0, &r), x.data(), H);
    assert!(relative_error(g.dx.data(), &num) < 1e-7);
}

#[test]
fn pointwise_conv() {
    let layer = PointwiseConv::new(random_tensor(&[3, 2], 1), random_tensor(&[3], 2)).unwrap();
    let x = random_tensor(&[2, 2, 3, 3], 3);
    let (y, cache) = layer.forward(&x).unwrap();
    let r = random_tensor(y.dims(), 4);
    let g = layer.backward(&r, cache).unwrap();
    let w = layer.weight().clone();
    let num = central_difference(
        |v| {
            let mut l = layer.clone();
            *l.weight_mut() = with(&w, v);
            dot(&l.forward(&x).unwrap().0, &r)
        },
        w.data(),
        H,
    );
    assert!(relative_error(g.weight.data(), &num) < 1e-7);
    let b = layer.bias().clone();
    let num = central_difference(
        |v| {
            let mut l = layer.clone();
            *l.bias_mut() = with(&b, v);
            dot(&l.forward(&x).unwrap().0, &r)
        },
        b.data(),
        H,
    );
    assert!(relative_error(g.bias.data(), &num) < 1e-7);
    let num = central_difference(|v| dot(&layer.forward(&with(&x, v)).unwrap().0, &r), x.data(), H);
    assert!(relative_error(g.dx.data(), &num) < 1e-7);
}

#[test]
fn identity_pointwise_and_linear() {
    let x = random_tensor(&[1, 2, 3, 3], 5);
    let eye = Tensor::<f64>::identity(2).unwrap();
    let pw = PointwiseConv::new(eye.clone(), Tensor::zeros(&[2]).unwrap()).unwrap();
    assert!(pw.forward(&x).unwrap().0.bit_eq(&x));
    let sum = PointwiseConv::new(Tensor::from_f64(&[1, 2], &[1., 1.]).unwrap(), Tensor::zeros(&[1]).unwrap()).unwrap();
    let y = sum.forward(&x).unwrap().0;
    for p in 0..9 {
        assert_eq!(y.data()[p], x.data()[p] + x.data()[9 + p]);
    }
    let lin = Linear::new(eye, Tensor::from_f64(&[2], &[0.5, -1.]).unwrap()).unwrap();
    let f = random_tensor(&[3, 2], 6);
    let out = lin.forward(&f).unwrap().0;
    for i in 0..6 {
        assert_eq!(out.data()[i], f.data()[i] + [0.5, -1.][i % 2]);
    }
    let z = lin.forward(&Tensor::zeros(&[1, 2]).unwrap()).unwrap().0;
    assert_eq!(z.data(), &[0.5, -1.]);
}

#[test]
fn linear() {
    let layer = Linear::new(random_tensor(&[3, 4], 1), random_tensor(&[3], 2)).unwrap();
    let x = random_tensor(&[5, 4], 3);
    let (y, cache) = layer.forward(&x).unwrap();
    let r = random_tensor(y.dims(), 4);
    let g = layer.backward(&r, cache).unwrap();
    let w = layer.weight().clone();
    let num = central_difference(
        |v| {
            let mut l = layer.clone();
            *l.weight_mut() = with(&w, v);
            dot(&l.forward(&x).unwrap().0, &r)
        },
        w.data(),
        H,
    );
    assert!(relative_error(g.weight.data(), &num) < 1e-7);
    let num = central_difference(|v| dot(&layer.forward(&with(&x, v)).unwrap().0, &r), x.data(), H);
    assert!(relative_error(g.dx.data(), &num) < 1e-7);
    let b = layer.bias().clone();
    let num = central_difference(
        |v| {
            let mut l = layer.clone();
            *l.bias_mut() = with(&b, v);
            dot(&l.forward(&x).unwrap().0, &r)
        },
        b.data(),
        H,
    );
    assert!(relative_error(g.bias.data(), &num) < 1e-7);
}

#[test]
fn batch_norm_train_and_eval() {
    let mut bn = BatchNorm::<f64>::new(3).unwrap();
    bn.gamma = random_tensor(&[3], 1);
    bn.beta = random_tensor(&[3], 2);
    bn.running_mean = random_tensor(&[3], 3);
    bn.running_var = random_tensor(&[3], 4).map(|v| v.abs() + 0.5);
    let x = random_tensor(&[2, 3, 3, 3], 5);
    for mode in [Mode::Train, Mode::Eval] {
        let (y, cache) = bn.clone().forward(&x, mode).unwrap();
        let r = random_tensor(y.dims(), 6);
        let g = bn.backward(&r, cache).unwrap();
        let num = central_difference(|v| dot(&bn.clone().forward(&with(&x, v), mode).unwrap().0, &r), x.data(), H);
        let e = relative_error(g.dx.data(), &num);
        assert!(e < 1e-7, "{mode:?} dx {e:e}");
        let gamma = bn.gamma.clone();
        let num = central_difference(
            |v| {
                let mut b = bn.clone();
                b.gamma = with(&gamma, v);
                dot(&b.forward(&x, mode).unwrap().0, &r)
            },
            gamma.data(),
            H,
        );
        assert!(relative_error(g.gamma.data(), &num) < 1e-7);
        let beta = bn.beta.clone();
        let num = central_difference(
            |v| {
                let mut b = bn.clone();
                b.beta = with(&beta, v);
                dot(&b.forward(&x, mode).unwrap().0, &r)
            },
            beta.data(),
            H,
        );
        assert!(relative_error(g.beta.data(), &num) < 1e-7);
    }
}

#[test]
fn pooling() {
    let x = random_tensor(&[2, 2, 4, 6], 1);
    let (y, c) = avg_pool(&x).unwrap();
    let r = random_tensor(y.dims(), 2);
    let dx = avg_pool_backward(&r, c).unwrap();
    let num = central_difference(|v| dot(&avg_pool(&with(&x, v)).unwrap().0, &r), x.data(), H);
    assert!(relative_error(dx.data(), &num) < 1e-8);
    let (y, c) = global_avg_pool(&x).unwrap();
    let r = random_tensor(y.dims(), 3);
    let dx = global_avg_pool_backward(&r, c).unwrap();
    let num = central_difference(|v| dot(&global_avg_pool(&with(&x, v)).unwrap().0, &r), x.data(), H);
    assert!(relative_error(dx.data(), &num) < 1e-8);
}

#[test]
fn losses() {
    let z = random_tensor(&[4, 3], 1).scale(3.0);
    let labels = [0, 2, 1, 2];
    let (_, g) = cross_entropy(&z, &labels).unwrap();
    let num = central_difference(|v| cross_entropy(&with(&z, v), &labels).unwrap().0, z.data(), H);
    assert!(relative_error(g.data(), &num) < 1e-8);
    for row in g.data().chunks(3) {
        assert!(row.iter().sum::<f64>().abs() < 1e-15);
    }
    let t = Tensor::from_f64(&[4, 3], &[1., 0., 1., 0., 0., 1., 1., 1., 0., 0., 1., 0.]).unwrap();
    let (_, g) = bce(&z, &t).unwrap();
    let num = central_difference(|v| bce(&with(&z, v), &t).unwrap().0, z.data(), H);
    assert!(relative_error(g.data(), &num) < 1e-8);
}

fn small_net(kind: ConvKind) -> Network<f64> {
    let cfg = NetworkConfig {
        dims: 2,
        in_channels: 1,
        stem_channels: 2,
        stages: vec![
            StageConfig {
                channels: 2,
                kernel_size: 3,
                blocks: 1,
                downsample: false,
            },
            StageConfig {
                channels: 3,
                kernel_size: 3,
                blocks: 1,
                downsample: true,
            },
        ],
        num_classes: 2,
        seed: 4,
        conv_kind: kind,
        ..NetworkConfig::default()
    };
    let mut net = Network::build(&cfg).unwrap();
    net.set_input_norm(0.1, 0.9).unwrap();
    net
}

#[test]
fn whole_network() {
    for kind in [ConvKind::Sre, ConvKind::Standard] {
        let mut net = small_net(kind);
        let x = random_tensor(&[2, 1, 8, 8], 7);
        let labels = [1, 0];
        let (logits, cache) = net.forward(&x, Mode::Train).unwrap();
        let (_, dl) = cross_entropy(&logits, &labels).unwrap();
        let grads = net.backward(&dl, cache).unwrap();
        let loss_at = |net: &Network<f64>, x: &Tensor<f64>| {
            let (l, _) = net.clone().forward(x, Mode::Train).unwrap();
            cross_entropy(&l, &labels).unwrap().0
        };
        let names: Vec<String> = net.params().into_iter().map(|(n, _)| n).collect();
        for name in &names {
            let p = net.params().into_iter().find(|(n, _)| n == name).unwrap().1.clone();
            let num = central_difference(
                |v| {
                    let mut m = net.clone();
                    m.set_tensor(name, with(&p, v)).unwrap();
                    loss_at(&m, &x)
                },
                p.data(),
                H,
            );
            let analytic = grads.get(name).unwrap().data();
            // conv biases ahead of train-mode BN have zero gradient
            let before_bn = name.ends_with(".conv.bias") && !name.contains("transition");
            if before_bn {
                assert!(analytic.iter().all(|v| v.abs() < 1e-12), "{kind:?} {name}");
                assert!(num.iter().all(|v| v.abs() < 1e-8), "{kind:?} {name}");
                continue;
            }
            let e = relative_error(analytic, &num);
            assert!(e < 1e-5, "{kind:?} {name}: {e:e}");
        }
        let num = central_difference(|v| loss_at(&net, &with(&x, v)), x.data(), H);
        assert!(relative_error(grads.input.data(), &num) < 1e-5);
    }
}
