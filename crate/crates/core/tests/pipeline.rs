use hardattn_core::circuit::netlist::{read_netlist, write_netlist};
use hardattn_core::compiler::{compile, encode_input, CompileOptions, MAX_DYCK_TABLE_LEN};
use hardattn_core::harness::{self, EquivOptions};
use hardattn_core::lang::Words;
use hardattn_core::normal_form::{normalize, EnumerationMode, NormalFormModel, NormalizeOptions};
use hardattn_core::value::{Alphabet, Token, Value};
use hardattn_core::zoo::{self, ZooModel};
use hardattn_core::{depth_budget, rational, Error, GuhatModel, MaskMode, Pooling};

fn guhat(name: &str) -> GuhatModel {
    zoo::registry(name)
        .unwrap()
        .build()
        .unwrap()
        .as_guhat()
        .unwrap()
}

fn nf(model: &GuhatModel, n: usize) -> NormalFormModel {
    normalize(model, n, &NormalizeOptions::default()).unwrap()
}

fn superset() -> NormalizeOptions {
    NormalizeOptions {
        force_superset: true,
        ..NormalizeOptions::default()
    }
}

/// Leftmost-`a` model with a causal mask: position `i` attends to the
/// leftmost `a` among `1..=i`, else to position 1.
fn leftmost_a_masked() -> GuhatModel {
    GuhatModel::builder("leftmost-a", Alphabet::from_chars("ab").unwrap(), 1, 1)
        .unwrap()
        .mask(MaskMode::Future)
        .input(|t, i, n| Ok(Value::leaf(t, i, n)))
        .attention(0, 0, |_, k| {
            let (t, _, _) = k.as_leaf()?;
            Ok(rational::int(i64::from(t == Token::Sym('a'))))
        })
        .activation(0, |own, pooled| {
            let (_, i, _) = own.as_leaf()?;
            let (t, j, _) = pooled[0].as_leaf()?;
            Ok(Value::pair(
                i as i64,
                if t == Token::Sym('a') { j as i64 } else { 0 },
            ))
        })
        // accepts iff the word contains an `a`
        .output(|y| Ok(y.as_pair()?.1 > 0))
        .build()
        .unwrap()
}

#[test]
fn zoo_models_decide_their_languages() {
    for entry in zoo::entries() {
        let model = entry.build().unwrap();
        for m in 0..=entry.sweep_len.min(8) {
            for w in Words::new(model.alphabet(), m) {
                assert_eq!(
                    model.accepts(&w).unwrap(),
                    entry.language.member(&w).unwrap(),
                    "{} on {w:?}",
                    entry.name
                );
            }
        }
    }
}

#[test]
fn unique_vector_model_lifts_to_the_same_decisions() {
    let ZooModel::Restricted(m) = zoo::registry("contains-one").unwrap().build().unwrap() else {
        panic!("expected a vector model");
    };
    let lifted = m.to_guhat().unwrap();
    for len in 0..=6 {
        for w in Words::new(&m.alphabet, len) {
            assert_eq!(
                lifted.accepts(&w, Pooling::Unique).unwrap(),
                m.accepts(&w).unwrap(),
                "{w}"
            );
        }
    }
}

#[test]
fn averaging_models_are_rejected_by_the_compiler_path() {
    let model = zoo::registry("majority-ahat").unwrap().build().unwrap();
    assert!(matches!(model.as_guhat(), Err(Error::Unsupported(_))));
}

#[test]
fn superset_mode_agrees_with_reachable_mode() {
    for name in ["palindromes", "onestar", "anbn"] {
        let model = guhat(name);
        for n in 1..=5 {
            let exact = nf(&model, n);
            let wide = normalize(&model, n, &superset()).unwrap();
            assert_eq!(exact.mode(), EnumerationMode::Reachable);
            assert_eq!(wide.mode(), EnumerationMode::Superset);
            for k in 0..=model.layers() {
                assert!(
                    wide.table(k).len() >= exact.table(k).len(),
                    "{name} n={n} layer {k}"
                );
            }
            for w in Words::new(model.alphabet(), n - 1) {
                assert_eq!(wide.run(&w).unwrap(), exact.run(&w).unwrap(), "{name} {w}");
            }
        }
    }
}

#[test]
fn input_budget_falls_back_to_superset() {
    let model = guhat("onestar");
    let opts = NormalizeOptions {
        max_inputs: 4,
        ..NormalizeOptions::default()
    };
    let nf = normalize(&model, 6, &opts).unwrap();
    assert_eq!(nf.mode(), EnumerationMode::Superset);
    for w in Words::new(model.alphabet(), 5) {
        assert_eq!(nf.run(&w).unwrap(), w.chars().all(|c| c == '1'));
    }
}

#[test]
fn value_budget_is_a_resource_error() {
    let opts = NormalizeOptions {
        max_values: 3,
        ..NormalizeOptions::default()
    };
    assert!(matches!(
        normalize(&guhat("palindromes"), 5, &opts),
        Err(Error::Resource { .. })
    ));
}

#[test]
fn ranks_preserve_score_order_within_each_query() {
    for model in [guhat("palindromes"), guhat("anbn"), leftmost_a_masked()] {
        for n in 1..=5 {
            let nf = nf(&model, n);
            for l in 0..model.layers() {
                let table = nf.table(l);
                let ranks = nf.ranks(l, 0);
                let any_masked = (0..table.len() as u32).any(|q| {
                    (0..table.len() as u32)
                        .any(|k| !model.mask().allows(table.position(q), table.position(k)))
                });
                assert_eq!(ranks.has_masked_rank(), any_masked);
                for q in 0..table.len() as u32 {
                    let qv = table.translated(q);
                    let visible: Vec<u32> = (0..table.len() as u32)
                        .filter(|&k| model.mask().allows(table.position(q), table.position(k)))
                        .collect();
                    for k in 0..table.len() as u32 {
                        let r = ranks.rank(q, k);
                        assert!(r < ranks.num_ranks());
                        if !visible.contains(&k) {
                            assert_eq!(r, 0, "masked pair must take the reserved rank");
                        } else if ranks.has_masked_rank() {
                            assert!(r >= 1);
                        }
                    }
                    for &a in &visible {
                        for &b in &visible {
                            let sa = model.score(l, 0, qv, table.translated(a)).unwrap();
                            let sb = model.score(l, 0, qv, table.translated(b)).unwrap();
                            assert_eq!(sa.cmp(&sb), ranks.rank(q, a).cmp(&ranks.rank(q, b)));
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn masked_model_normalizes_and_compiles() {
    let model = leftmost_a_masked();
    for m in 0..=6 {
        let (nf, compiled) = harness::build_circuit(
            &model,
            m,
            &NormalizeOptions::default(),
            &CompileOptions::default(),
        )
        .unwrap();
        for w in Words::new(model.alphabet(), m) {
            let expected = w.contains('a');
            assert_eq!(model.accepts(&w, Pooling::Unique).unwrap(), expected);
            assert_eq!(nf.run(&w).unwrap(), expected);
            let bits = encode_input(&nf, &w).unwrap();
            assert_eq!(
                compiled.circuit.evaluate(&bits).unwrap(),
                vec![expected],
                "{w}"
            );
        }
    }
}

#[test]
fn value_encodings_round_trip() {
    for name in ["palindromes", "anbn"] {
        let nf = nf(&guhat(name), 6);
        for k in 0..=nf.layers() {
            let width = nf.layout().value_width(k);
            for idx in 0..nf.table(k).len() as u32 {
                let bits = nf.encode_value(k, idx).unwrap();
                assert_eq!(bits.len(), width);
                assert_eq!(nf.decode_value(k, &bits).unwrap(), idx);
            }
        }
    }
}

#[test]
fn tables_are_sorted_by_rendering() {
    let nf = nf(&guhat("palindromes"), 6);
    for k in 0..=2 {
        let t = nf.table(k);
        let rendered: Vec<String> = (0..t.len() as u32)
            .map(|i| t.expanded(i).to_string())
            .collect();
        assert!(rendered.windows(2).all(|w| w[0] < w[1]), "layer {k}");
    }
}

#[test]
fn selection_probes_are_one_hot() {
    let model = guhat("palindromes");
    let nf = nf(&model, 5);
    let compiled = compile(&nf, &CompileOptions::default()).unwrap();
    assert_eq!(compiled.probes.len(), 2 * 5);
    for w in Words::new(model.alphabet(), 4) {
        let bits = encode_input(&nf, &w).unwrap();
        let (_, trace) = model.run(&w, Pooling::Unique).unwrap();
        for p in &compiled.probes {
            let z = compiled.circuit.probe(&bits, &p.z).unwrap();
            assert_eq!(
                z.iter().filter(|&&b| b).count(),
                1,
                "{w} layer {} pos {}",
                p.layer,
                p.position
            );
            let chosen = z.iter().position(|&b| b).unwrap();
            assert_eq!(
                chosen,
                trace.chosen(p.layer - 1, p.head, p.position - 1)[0],
                "{w}"
            );
        }
    }
}

#[test]
fn shortest_length_has_only_the_end_marker() {
    for name in ["palindromes", "onestar", "anbn"] {
        let model = guhat(name);
        let (_, compiled) = harness::build_circuit(
            &model,
            0,
            &NormalizeOptions::default(),
            &CompileOptions::default(),
        )
        .unwrap();
        assert_eq!(compiled.circuit.num_inputs(), 0);
        assert_eq!(
            compiled.circuit.evaluate(&[]).unwrap(),
            vec![model.accepts("", Pooling::Unique).unwrap()]
        );
    }
}

#[test]
fn palindrome_examples_at_length_four() {
    let model = guhat("palindromes");
    let nf = nf(&model, 4);
    let c = compile(&nf, &CompileOptions::default()).unwrap().circuit;
    for (w, expected) in [("aba", true), ("abc", false), ("ccc", true), ("bca", false)] {
        assert_eq!(
            c.evaluate(&encode_input(&nf, w).unwrap()).unwrap(),
            vec![expected],
            "{w}"
        );
    }
}

#[test]
fn compiler_variants_agree() {
    let variants = [
        CompileOptions {
            structured_comparator: true,
            ..CompileOptions::default()
        },
        CompileOptions {
            leveled: false,
            ..CompileOptions::default()
        },
        CompileOptions {
            structured_comparator: true,
            leveled: false,
            ..CompileOptions::default()
        },
    ];
    for name in ["palindromes", "onestar", "anbn"] {
        let model = guhat(name);
        let max = if name == "palindromes" { 4 } else { 6 };
        for opts in &variants {
            let eq = EquivOptions {
                normalize: NormalizeOptions::default(),
                compile: *opts,
                inject_fault: false,
            };
            let report = harness::equiv(&model, max, &eq).unwrap();
            assert!(report.passed(), "{name}: {report}");
        }
    }
}

#[test]
fn leveled_depth_equals_the_budget_form() {
    // attention, comparator, argmax, leftmost and selection per layer, plus the input and output blocks
    for name in ["palindromes", "anbn"] {
        for n in 2..=7 {
            let c = compile(&nf(&guhat(name), n), &CompileOptions::default()).unwrap();
            assert_eq!(c.report.depth, 25, "{name} n={n}");
            assert_eq!(c.report.depth_budget, 11 * 2 + 3);
        }
    }
    assert_eq!(depth_budget(1), 14);
    let structured = CompileOptions {
        structured_comparator: true,
        ..CompileOptions::default()
    };
    let c = compile(&nf(&guhat("palindromes"), 5), &structured).unwrap();
    assert_eq!(c.report.depth, 31);
    assert!(c.circuit.metrics().depth <= 14 * 2 + 3);
}

#[test]
fn report_matches_circuit_metrics() {
    let c = compile(&nf(&guhat("anbn"), 6), &CompileOptions::default()).unwrap();
    let m = c.circuit.metrics();
    assert_eq!(c.report.size, m.size);
    assert_eq!(c.report.depth, m.depth);
    assert_eq!(
        c.report.stages.iter().map(|s| s.wires).sum::<usize>(),
        m.size
    );
    assert_eq!(c.report.inputs, 5 * 2);
}

#[test]
fn wire_budget_is_a_resource_error() {
    let opts = CompileOptions {
        budget_wires: 50,
        ..CompileOptions::default()
    };
    assert!(matches!(
        compile(&nf(&guhat("palindromes"), 5), &opts),
        Err(Error::Resource { .. })
    ));
}

#[test]
fn compilation_is_deterministic_across_thread_counts() {
    let model = guhat("palindromes");
    let render = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            write_netlist(
                &compile(&nf(&model, 6), &CompileOptions::default())
                    .unwrap()
                    .circuit,
            )
        })
    };
    assert_eq!(render(1), render(4));
}

#[test]
fn compiled_netlists_round_trip() {
    let c = compile(&nf(&guhat("onestar"), 5), &CompileOptions::default())
        .unwrap()
        .circuit;
    let text = write_netlist(&c);
    let back = read_netlist(&text).unwrap();
    assert_eq!(back, c);
    assert_eq!(write_netlist(&back), text);
}

#[test]
fn growth_rejects_bad_ranges_and_reports_constant_depth() {
    let model = guhat("onestar");
    let (nopts, copts) = (NormalizeOptions::default(), CompileOptions::default());
    assert!(harness::growth(&model, 0, 3, &nopts, &copts).is_err());
    assert!(harness::growth(&model, 5, 4, &nopts, &copts).is_err());
    let g = harness::growth(&model, 4, 7, &nopts, &copts).unwrap();
    assert!(g.depth_constant() && g.size_monotone());
    assert!(g.slope.unwrap() > 0.0);
    assert!(!g.render(false).contains("TIME_MS"));
}

#[test]
fn reductions_agree_with_equality() {
    for n in 1..=6 {
        let r = harness::reduce(n).unwrap();
        assert_eq!((r.agree, r.total), (1 << n, 1 << n), "n={n}");
    }
    assert!(harness::reduce(0).is_err());
    assert!(harness::reduce(MAX_DYCK_TABLE_LEN).is_err());
}
