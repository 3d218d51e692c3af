use regmatch::adversary::{run_game, CanonicalInstance, GreedyAugmentProber, Mode, Prober, ScanProber, Vertex};
use regmatch::canonical::validate_canonical;

#[test]
fn probers_meet_the_quadratic_lower_bound() {
    for d in [2usize, 4, 8, 16, 32] {
        let probers: [Box<dyn Prober>; 2] = [Box::new(ScanProber), Box::new(GreedyAugmentProber::default())];
        for mut prober in probers {
            let report = run_game(prober.as_mut(), d).unwrap();
            let probes = report.probes_to_hidden.expect("hidden edge revealed");
            assert!(probes >= (d * d) as u64, "{} d={d}: {probes}", report.prober);
            assert!(report.evasive_answers >= (d * d) as u64);
            assert!(report.is_consistent());
            assert_eq!(validate_canonical(&report.graph.graph, d, &report.graph.hidden), Ok(()));
        }
    }
}

/// Queries Q-side vertices round-robin, the opposite order to the scan prober.
struct ReverseProber;

impl Prober for ReverseProber {
    fn name(&self) -> &'static str {
        "reverse"
    }

    fn play(&mut self, board: &mut regmatch::adversary::Board<'_>) -> Result<(), regmatch::adversary::GameOver> {
        let n = board.layout().side_len();
        let d = board.d();
        loop {
            let mut asked = false;
            for u in (0..n).rev().map(Vertex::Q).chain((0..n).rev().map(Vertex::P)) {
                if board.degree_known(u) < d {
                    board.query(u)?;
                    asked = true;
                }
            }
            if !asked {
                return Ok(());
            }
        }
    }
}

#[test]
fn other_probers_also_need_quadratic_probes() {
    for d in 1..=12 {
        let report = run_game(&mut ReverseProber, d).unwrap();
        let probes = report.probes_to_hidden.expect("hidden edge revealed");
        assert!(probes >= (d * d) as u64, "d={d}: {probes}");
        assert!(report.is_consistent());
    }
}

#[test]
fn evasive_states_stay_completable_under_mixed_queries() {
    for d in 1..=6 {
        let mut inst = CanonicalInstance::new(d);
        let n = inst.layout().side_len();
        let mut i = 0usize;
        while inst.mode() == Mode::Evasive {
            // Alternate sides, walking each side from the top index down.
            let idx = n - 1 - (i / 2) % n;
            let u = if i.is_multiple_of(2) { Vertex::P(idx) } else { Vertex::Q(idx) };
            i += 1;
            assert!(i < 100 * n * d, "no progress");
            if inst.revealed(u).unwrap().len() >= d {
                continue;
            }
            let a = inst.answer_query(u).unwrap();
            assert!(!a.hidden);
            let g = inst.complete().unwrap();
            assert_eq!(validate_canonical(&g.graph, d, &g.hidden), Ok(()));
        }
        assert!(inst.probe_count() >= (d * d) as u64);
    }
}

#[test]
fn each_evasive_answer_adds_one_to_q1_or_p2() {
    use regmatch::canonical::Part;
    for d in [2usize, 3, 5] {
        let mut inst = CanonicalInstance::new(d);
        let layout = inst.layout();
        let load = |inst: &CanonicalInstance| -> usize {
            let q1: usize = layout.range(Part::Q1).map(|q| inst.revealed(Vertex::Q(q)).unwrap().len()).sum();
            let p2: usize = layout.range(Part::P2).map(|p| inst.revealed(Vertex::P(p)).unwrap().len()).sum();
            q1 + p2
        };
        let n = layout.side_len();
        let mut u = 0;
        while inst.mode() == Mode::Evasive {
            let v = Vertex::P(u % n);
            u += 1;
            if inst.revealed(v).unwrap().len() >= d {
                continue;
            }
            let before = load(&inst);
            let a = inst.answer_query(v).unwrap();
            if a.mode == Mode::Evasive {
                assert_eq!(load(&inst), before + 1);
            }
        }
    }
}

#[test]
fn evasive_answers_never_repeat_a_neighbour() {
    let d = 4;
    let mut inst = CanonicalInstance::new(d);
    for _ in 0..d {
        let before: Vec<usize> = inst.revealed(Vertex::Q(1)).unwrap().to_vec();
        let a = inst.answer_query(Vertex::Q(1)).unwrap();
        if a.mode == Mode::Evasive {
            let Vertex::P(p) = a.reply else { panic!("Q query answered with {}", a.reply) };
            assert!(!before.contains(&p));
        }
    }
}

#[test]
fn saturated_query_reports_position() {
    let mut inst = CanonicalInstance::new(1);
    inst.answer_query(Vertex::P(1)).unwrap();
    let err = inst.answer_query(Vertex::P(1)).unwrap_err();
    assert_eq!(err, regmatch::adversary::GameError::Saturated { vertex: Vertex::P(1), position: 2 });
}
