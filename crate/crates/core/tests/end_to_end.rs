use stabverify::gf2::BitVector;
use stabverify::pauli::block_class;
use stabverify::protocol::{estimate_with, simulate_transcripts, Execution, RunOptions};
use stabverify::{AdversaryModel, BipartiteGraphState, BlockPauli, GraphSpec, Reduction};

fn bits(mask: u32, offset: usize, n: usize) -> BitVector {
    let v: Vec<bool> = (0..n).map(|i| mask >> (offset + i) & 1 == 1).collect();
    BitVector::from_bools(&v)
}

/// Exact per-copy probabilities of (s = 0), (t = 0) and a clean copy under
/// independent X/Z noise, by summing over every Pauli pattern.
fn iid_marginals(g: &BipartiteGraphState, p_x: f64, p_z: f64) -> (f64, f64, f64) {
    let (nb, nw) = (g.n_b(), g.n_w());
    let n = nb + nw;
    let (mut s0, mut t0, mut clean) = (0.0, 0.0, 0.0);
    for mask in 0u32..1 << (2 * n) {
        let p = BlockPauli {
            u_b: bits(mask, 0, nb),
            u_w: bits(mask, nb, nw),
            v_b: bits(mask, n, nb),
            v_w: bits(mask, n + nb, nw),
        };
        let xs = (mask & ((1 << n) - 1)).count_ones() as i32;
        let zs = (mask >> n).count_ones() as i32;
        let w = p_x.powi(xs)
            * (1.0 - p_x).powi(n as i32 - xs)
            * p_z.powi(zs)
            * (1.0 - p_z).powi(n as i32 - zs);
        let class = block_class(g, &p).unwrap();
        if !class.s {
            s0 += w;
        }
        if !class.t {
            t0 += w;
        }
        if class.is_clean() {
            clean += w;
        }
    }
    (s0, t0, clean)
}

#[test]
fn iid_noise_matches_exact_enumeration() {
    let g = BipartiteGraphState::path(4).unwrap();
    let (p_x, p_z) = (0.08, 0.05);
    let k = 2;
    let (s0, t0, clean) = iid_marginals(&g, p_x, p_z);
    let pass = s0.powi(k as i32) * t0.powi(k as i32);
    let trials = 200_000;
    let est = estimate_with(
        &g,
        k,
        &AdversaryModel::IidPauli { p_x, p_z },
        trials,
        3,
        Execution::Parallel,
    )
    .unwrap();
    let z = (est.pass_rate() - pass) / est.pass_std_error(pass);
    assert!(z.abs() <= 4.0, "pass {} vs {pass}", est.pass_rate());
    let cond = est.conditional_fidelity().unwrap();
    let se = est.conditional_std_error(clean).unwrap();
    assert!(
        (cond - clean).abs() <= 4.0 * se,
        "conditional {cond} vs {clean}"
    );
}

#[test]
fn raw_outcomes_reproduce_syndrome_verdicts() {
    let g = GraphSpec::Rhg(1, 1, 1).build().unwrap();
    let model = AdversaryModel::IidPauli {
        p_x: 0.03,
        p_z: 0.03,
    };
    let run = |raw| {
        simulate_transcripts(
            &g,
            2,
            &model,
            2_000,
            99,
            RunOptions { raw_outcomes: raw },
            Execution::Sequential,
        )
        .unwrap()
    };
    let (est_a, ta) = run(false);
    let (est_b, tb) = run(true);
    assert_eq!(est_a, est_b);
    for (a, b) in ta.iter().zip(&tb) {
        assert_eq!(
            (a.accepted, &a.partition, &a.classes),
            (b.accepted, &b.partition, &b.classes)
        );
        assert!(b.raw_outcomes.is_some());
    }
}

#[test]
fn execution_mode_does_not_change_results() {
    let g = BipartiteGraphState::grid(4, 3).unwrap();
    let model = AdversaryModel::IidPauli {
        p_x: 0.02,
        p_z: 0.04,
    };
    let seq = simulate_transcripts(
        &g,
        3,
        &model,
        5_000,
        5,
        RunOptions::default(),
        Execution::Sequential,
    )
    .unwrap();
    let par = simulate_transcripts(
        &g,
        3,
        &model,
        5_000,
        5,
        RunOptions::default(),
        Execution::Parallel,
    )
    .unwrap();
    assert_eq!(seq, par);
}

#[test]
fn graph_json_roundtrip_preserves_reduction() {
    for spec in ["path:7", "grid:4x4", "rhg:2x1x1", "edgeless:4"] {
        let g = spec.parse::<GraphSpec>().unwrap().build().unwrap();
        let back = BipartiteGraphState::from_json(&g.to_json()).unwrap();
        assert_eq!(back.adjacency(), g.adjacency(), "{spec}");
        let (r1, r2) = (
            Reduction::compute(&g).unwrap(),
            Reduction::compute(&back).unwrap(),
        );
        assert_eq!(r1.n_prime(), r2.n_prime());
        assert_eq!(r1.c(), r2.c());
        assert_eq!(r1.d(), r2.d());
        assert_eq!(r1.n_prime(), g.adjacency().rank());
    }
}
