use ctkrylov::geometry::{ScanGeometry, SizeClass};
use ctkrylov::projector::{build_matrix, build_pair, threshold_transpose, unmatchedness};
use ctkrylov::rng::SplitMix64;
use ctkrylov::{CsrMatrix, ProjModel, ProjectorPair};

fn desk() -> ScanGeometry {
    ScanGeometry::standard(SizeClass::Desk)
}

/// Monte Carlo estimate of the ray's coverage of the image square: chord
/// length for a line, strip area over width for a strip.
fn coverage_estimate(g: &ScanGeometry, a: usize, d: usize, width: f64, rng: &mut SplitMix64) -> f64 {
    let ray = g.ray_of(a, d).unwrap();
    let h = g.n_pixels as f64 / 2.0;
    let len = 2.0 * g.n_pixels as f64;
    let samples = 100_000;
    let mut inside = 0usize;
    for _ in 0..samples {
        let t = rng.uniform(-len / 2.0, len / 2.0);
        let s = if width > 0.0 { rng.uniform(-width / 2.0, width / 2.0) } else { 0.0 };
        let x = ray.point[0] + t * ray.direction[0] + s * ray.axis[0];
        let y = ray.point[1] + t * ray.direction[1] + s * ray.axis[1];
        if x.abs() < h && y.abs() < h {
            inside += 1;
        }
    }
    inside as f64 / samples as f64 * len
}

#[test]
fn row_sums_match_monte_carlo_coverage() {
    let g = desk();
    let mut rng = SplitMix64::new(2024);
    for model in ProjModel::ALL {
        let a = build_matrix(&g, model).unwrap();
        let width = if model == ProjModel::Strip { g.det_width } else { 0.0 };
        let mut checked = 0;
        while checked < 20 {
            let ai = (rng.next_u64() % g.n_angles() as u64) as usize;
            // Interior rays only: the chord is long against the pixel size.
            let di = 16 + (rng.next_u64() % 32) as usize;
            let est = coverage_estimate(&g, ai, di, width, &mut rng);
            let row = a.row_sum(g.ray_index(ai, di));
            assert!(
                (row - est).abs() <= 0.01 * est,
                "{model}: angle {ai} det {di}: row sum {row} vs estimate {est}"
            );
            checked += 1;
        }
    }
}

#[test]
fn mirrored_rays_give_identical_rows() {
    let mut g = desk();
    g.angles_deg = vec![0.0, 17.3, 45.0, 61.1, 90.0, 133.7];
    let mut flipped = g.clone();
    flipped.angles_deg = g.angles_deg.iter().map(|a| a + 180.0).collect();
    for model in ProjModel::ALL {
        let a = build_matrix(&g, model).unwrap();
        let f = build_matrix(&flipped, model).unwrap();
        for ai in 0..g.n_angles() {
            for d in 0..g.n_det {
                let r1 = g.ray_index(ai, d);
                let r2 = g.ray_index(ai, g.n_det - 1 - d);
                let (c1, v1) = a.row(r1);
                for (&c, &v) in c1.iter().zip(v1) {
                    assert!((f.get(r2, c) - v).abs() <= 1e-12, "{model} angle {ai} det {d}");
                }
                assert_eq!(f.row(r2).0.len(), c1.len(), "{model} angle {ai} det {d}");
            }
        }
    }
}

#[test]
fn quarter_turn_permutes_pixels() {
    let n = 64;
    let mut g = desk();
    g.angles_deg = vec![0.0, 17.3, 33.7, 61.1];
    let mut turned = g.clone();
    turned.angles_deg = g.angles_deg.iter().map(|a| a + 90.0).collect();
    for model in ProjModel::ALL {
        let a = build_matrix(&g, model).unwrap();
        let t = build_matrix(&turned, model).unwrap();
        for r in 0..a.nrows() {
            let (cols, vals) = a.row(r);
            for (&p, &v) in cols.iter().zip(vals) {
                let (row, col) = (p / n, p % n);
                let q = (n - 1 - col) * n + row;
                assert!((t.get(r, q) - v).abs() <= 1e-12, "{model} ray {r} pixel {p}");
            }
            assert_eq!(t.row(r).0.len(), cols.len(), "{model} ray {r}");
        }
    }
}

#[test]
fn strip_tends_to_line_as_width_shrinks() {
    let g = ScanGeometry::new(64, vec![0.0, 23.0, 41.5, 77.0], 1024, 1.0 / 16.0, 0.0).unwrap();
    let line = build_matrix(&g, ProjModel::Line).unwrap();
    let strip = build_matrix(&g, ProjModel::Strip).unwrap();
    for ai in 0..g.n_angles() {
        for d in (256..768).step_by(37) {
            let r = g.ray_index(ai, d);
            let (cols, vals) = line.row(r);
            let norm: f64 = vals.iter().map(|v| v * v).sum::<f64>().sqrt();
            let mut diff2 = 0.0;
            for (&c, &v) in cols.iter().zip(vals) {
                diff2 += (strip.get(r, c) - v).powi(2);
            }
            let (scols, svals) = strip.row(r);
            for (&c, &v) in scols.iter().zip(svals) {
                if line.get(r, c) == 0.0 {
                    diff2 += v * v;
                }
            }
            assert!(diff2.sqrt() <= 0.05 * norm, "angle {ai} det {d}: {}", diff2.sqrt() / norm);
            let total: f64 = vals.iter().sum();
            assert!((strip.row_sum(r) - total).abs() <= 0.01 * total);
        }
    }
}

#[test]
fn matched_and_unmatched_pairs() {
    let g = desk();
    let pair = build_pair(&g, ProjModel::Strip, ProjModel::Strip).unwrap();
    assert_eq!(pair.b, pair.a.transpose());
    assert_eq!(unmatchedness(&pair).unwrap(), 0.0);
    let sl = build_pair(&g, ProjModel::Strip, ProjModel::Line).unwrap();
    assert!(unmatchedness(&sl).unwrap() > 0.0);
    let doubled = ProjectorPair::new(pair.a.clone(), pair.a.transpose().scaled(2.0), "A".into(), "2A^T".into()).unwrap();
    assert!((unmatchedness(&doubled).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn strip_line_difference_is_size_stable() {
    let d = build_pair(&desk(), ProjModel::Strip, ProjModel::Line).unwrap();
    let s = build_pair(&ScanGeometry::standard(SizeClass::Small), ProjModel::Strip, ProjModel::Line).unwrap();
    let (ud, us) = (unmatchedness(&d).unwrap(), unmatchedness(&s).unwrap());
    println!("unmatchedness (A_s, A_l^T): desk {ud:.4}, small {us:.4}, reference 0.3700");
    assert!((ud - us).abs() < 0.05);
    assert!((us - 0.37).abs() <= 0.15, "{us}");
}

#[test]
fn small_geometry_metadata() {
    let g = ScanGeometry::standard(SizeClass::Small);
    for model in ProjModel::ALL {
        let a = build_matrix(&g, model).unwrap();
        assert_eq!(a.shape(), (23040, 16384));
        println!("{model}: sparsity {:.4}", a.sparsity());
        // Strips and interpolation touch more than one pixel per column.
        let floor = if model == ProjModel::Line { 0.99 } else { 0.98 };
        assert!(a.sparsity() >= floor, "{model}: {}", a.sparsity());
        assert!(a.values().iter().all(|&v| v >= 0.0));
    }
}

#[test]
fn threshold_sweep_on_desk_strip() {
    let a = build_matrix(&desk(), ProjModel::Strip).unwrap();
    let exact = threshold_transpose(&a, 0.0).unwrap();
    assert_eq!(exact, a.transpose());
    assert_eq!(threshold_transpose(&a, 1.5).unwrap().nnz(), 0);
    let mut prev = 0.0;
    let anchors = [(0.01, 0.0021), (0.1, 0.0386), (0.3, 0.1640), (0.5, 0.3366)];
    for (tau, reference) in anchors {
        let b = threshold_transpose(&a, tau).unwrap();
        let u = unmatchedness(&ProjectorPair::new(a.clone(), b, "A".into(), "B".into()).unwrap()).unwrap();
        println!("tau {tau}: unmatchedness {u:.4} (reference {reference})");
        assert!(u > prev);
        prev = u;
    }
    let neg = CsrMatrix::from_triplets(1, 1, vec![(0, 0, -1.0)]).unwrap();
    assert!(threshold_transpose(&neg, 0.1).is_err());
}
