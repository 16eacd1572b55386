//! Snapshot construction, bibliometric tensors, and the temporal
//! train/val/test machinery, exercised end to end from linked records.

use placenet_core::featurize::*;
use placenet_core::ingest::*;
use placenet_core::synth::{generate, SynthConfig};
use placenet_core::tempgraph::*;

fn pub_rec(id: &str, year: i32, authors: &[&str]) -> PublicationRecord {
    PublicationRecord {
        paper_id: id.to_string(),
        year,
        authors: authors.iter().map(|s| s.to_string()).collect(),
    }
}

fn fac_rec(name: &str, univ: &str, hire: i32, phd: &str) -> FacultyRecord {
    FacultyRecord {
        full_name: name.to_string(),
        university: univ.to_string(),
        hire_year: Some(hire),
        phd_university: phd.to_string(),
        subfield: "cs".to_string(),
    }
}

fn two_person_dataset(pubs: &[PublicationRecord]) -> LinkedDataset {
    let faculty = vec![
        fac_rec("A Person", "u1", 2015, "u1"),
        fac_rec("B Person", "u1", 2012, "u1"),
    ];
    let table = RankTable::from_rows(&[("u1".to_string(), 1)], &AliasMap::default()).unwrap();
    link(pubs, &faculty, &table, &AliasMap::default()).unwrap()
}

#[test]
fn fold_policy_moves_pre_window_papers_to_the_first_snapshot() {
    let pubs = vec![
        pub_rec("p1", 2009, &["A Person", "B Person"]),
        pub_rec("p2", 2011, &["A Person", "B Person"]),
    ];
    let ds = two_person_dataset(&pubs);

    let fold = build_sequence(&ds, 2010, 2020, HistoryPolicy::Fold).unwrap();
    assert_eq!(fold.edges_at(2010).unwrap(), &[(0, 1, 1)]);
    assert_eq!(fold.edges_at(2011).unwrap(), &[(0, 1, 2)]);
    assert_eq!(fold.edges_at(2020).unwrap(), &[(0, 1, 2)]);
    assert_eq!(fold.total_weight(2011).unwrap(), 2);
    assert_eq!(fold.neighbors(2011, 0).unwrap(), &[(1, 2)]);
    let first = &fold.increments[fold.year_index(2010).unwrap()];
    assert_eq!(first.first_pairs, vec![(0, 1, 1)]);
    assert!(first.repeat_pairs.is_empty());
    let second = &fold.increments[fold.year_index(2011).unwrap()];
    assert!(second.first_pairs.is_empty());
    assert_eq!(second.repeat_pairs, vec![(0, 1, 1)]);

    let drop = build_sequence(&ds, 2010, 2020, HistoryPolicy::Drop).unwrap();
    assert!(drop.edges_at(2010).unwrap().is_empty());
    assert_eq!(drop.edges_at(2011).unwrap(), &[(0, 1, 1)]);
}

#[test]
fn papers_after_the_window_are_discarded_under_both_policies() {
    let pubs = vec![pub_rec("p1", 2021, &["A Person", "B Person"])];
    let faculty = vec![
        fac_rec("A Person", "u1", 2015, "u1"),
        fac_rec("B Person", "u1", 2012, "u1"),
    ];
    let table = RankTable::from_rows(&[("u1".to_string(), 1)], &AliasMap::default()).unwrap();
    let ds = link(&pubs, &faculty, &table, &AliasMap::default()).unwrap();
    for policy in [HistoryPolicy::Fold, HistoryPolicy::Drop] {
        let seq = build_sequence(&ds, 2010, 2020, policy).unwrap();
        for t in seq.years() {
            assert!(seq.edges_at(t).unwrap().is_empty());
        }
    }
}

#[test]
fn clique_expansion_pairs_cohort_authors_and_skips_externals() {
    let pubs = vec![
        pub_rec("p1", 2012, &["A Person", "B Person", "C Person", "Ext One"]),
        pub_rec("p2", 2012, &["B Person", "A Person"]),
        pub_rec("p3", 2013, &["B Person", "C Person"]),
    ];
    let faculty = vec![
        fac_rec("A Person", "u1", 2015, "u1"),
        fac_rec("B Person", "u1", 2016, "u1"),
        fac_rec("C Person", "u1", 2017, "u1"),
    ];
    let table = RankTable::from_rows(&[("u1".to_string(), 1)], &AliasMap::default()).unwrap();
    let ds = link(&pubs, &faculty, &table, &AliasMap::default()).unwrap();
    let seq = build_sequence(&ds, 2010, 2020, HistoryPolicy::Fold).unwrap();
    assert_eq!(
        seq.edges_at(2012).unwrap(),
        &[(0, 1, 2), (0, 2, 1), (1, 2, 1)]
    );
    assert_eq!(
        seq.edges_at(2013).unwrap(),
        &[(0, 1, 2), (0, 2, 1), (1, 2, 2)]
    );
    assert_eq!(seq.neighbors(2013, 1).unwrap(), &[(0, 2), (2, 2)]);
    assert_eq!(seq.increments[seq.year_index(2012).unwrap()].support_size(), 3);
}

#[test]
fn repeated_author_credits_on_one_paper_do_not_self_loop_or_double_count() {
    let pubs = vec![pub_rec("p1", 2012, &["A Person", "A  Person", "B Person"])];
    let ds = two_person_dataset(&pubs);
    let seq = build_sequence(&ds, 2010, 2020, HistoryPolicy::Fold).unwrap();
    assert_eq!(seq.edges_at(2012).unwrap(), &[(0, 1, 1)]);
}

#[test]
fn hire_years_beyond_the_window_are_rejected() {
    let faculty = vec![fac_rec("A Person", "u1", 2021, "u1")];
    let table = RankTable::from_rows(&[("u1".to_string(), 1)], &AliasMap::default()).unwrap();
    let ds = link(&[], &faculty, &table, &AliasMap::default()).unwrap();
    assert!(matches!(
        build_sequence(&ds, 2010, 2020, HistoryPolicy::Fold),
        Err(TempGraphError::HireAfterWindow { year: 2021, .. })
    ));
}

#[test]
fn inconsistent_increment_streams_are_rejected() {
    let inc = |year: i32, first: Vec<(u32, u32, u32)>, repeat: Vec<(u32, u32, u32)>| YearIncrement {
        year,
        first_pairs: first,
        repeat_pairs: repeat,
    };
    // Repeat event with no prior first occurrence.
    let incs = vec![inc(2010, vec![], vec![(0, 1, 1)]), inc(2011, vec![], vec![])];
    assert!(matches!(
        SnapshotSequence::from_increments(2010, 2011, 2, incs),
        Err(TempGraphError::BadIncrement { year: 2010, .. })
    ));
    // First occurrence declared twice.
    let incs = vec![
        inc(2010, vec![(0, 1, 1)], vec![]),
        inc(2011, vec![(0, 1, 1)], vec![]),
    ];
    assert!(matches!(
        SnapshotSequence::from_increments(2010, 2011, 2, incs),
        Err(TempGraphError::BadIncrement { year: 2011, .. })
    ));
    // Self-pair ordering violation.
    let incs = vec![inc(2010, vec![(1, 1, 1)], vec![]), inc(2011, vec![], vec![])];
    assert!(SnapshotSequence::from_increments(2010, 2011, 2, incs).is_err());
    // Node id outside the declared node set.
    let incs = vec![inc(2010, vec![(0, 5, 1)], vec![]), inc(2011, vec![], vec![])];
    assert!(SnapshotSequence::from_increments(2010, 2011, 2, incs).is_err());
}

fn small_synth_dataset(seed: u64) -> (LinkedDataset, SynthConfig) {
    let config = SynthConfig::small_market(seed);
    let out = generate(&config).unwrap();
    let table = RankTable::from_rows(&out.rankings, &AliasMap::default()).unwrap();
    let mut ds = link(&out.publications, &out.faculty, &table, &AliasMap::default()).unwrap();
    impute_missing_ranks(&mut ds).unwrap();
    (ds, config)
}

#[test]
fn increments_csv_round_trips_the_full_sequence() {
    let (ds, config) = small_synth_dataset(41);
    let seq = build_sequence(&ds, config.t0, config.tf, HistoryPolicy::Fold).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("increments.csv");
    seq.write_increments_csv(&path).unwrap();
    let back = read_increments_csv(&path, seq.node_count, config.t0, config.tf).unwrap();
    assert_eq!(seq.increments, back.increments);
    for t in seq.years() {
        assert_eq!(seq.edges_at(t).unwrap(), back.edges_at(t).unwrap());
    }
}

#[test]
fn snapshot_csvs_hold_cumulative_weights_per_year() {
    let (ds, config) = small_synth_dataset(42);
    let seq = build_sequence(&ds, config.t0, config.tf, HistoryPolicy::Fold).unwrap();
    let dir = tempfile::tempdir().unwrap();
    seq.write_snapshot_csvs(dir.path()).unwrap();
    for t in [config.t0, 2015, config.tf] {
        let text = std::fs::read_to_string(dir.path().join(format!("snapshot_{t}.csv"))).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("i,j,weight"));
        let parsed: Vec<(u32, u32, u32)> = lines
            .map(|l| {
                let mut p = l.split(',');
                (
                    p.next().unwrap().parse().unwrap(),
                    p.next().unwrap().parse().unwrap(),
                    p.next().unwrap().parse().unwrap(),
                )
            })
            .collect();
        assert_eq!(parsed, seq.edges_at(t).unwrap());
    }
}

#[test]
fn cumulative_weights_never_shrink_and_match_increment_totals() {
    let (ds, config) = small_synth_dataset(43);
    let seq = build_sequence(&ds, config.t0, config.tf, HistoryPolicy::Fold).unwrap();
    let mut prev_weight = 0u64;
    let mut prev_support = 0usize;
    for t in seq.years() {
        let inc = &seq.increments[seq.year_index(t).unwrap()];
        let added: u64 = inc
            .first_pairs
            .iter()
            .chain(&inc.repeat_pairs)
            .map(|&(_, _, c)| c as u64)
            .sum();
        let weight = seq.total_weight(t).unwrap();
        assert_eq!(weight, prev_weight + added);
        let support = seq.edges_at(t).unwrap().len();
        assert_eq!(support, prev_support + inc.support_size());
        prev_weight = weight;
        prev_support = support;
    }
    assert!(prev_weight > 0, "synthetic market produced no co-authorships");
}

#[test]
fn partition_separates_window_hires_from_established_faculty() {
    let (ds, config) = small_synth_dataset(44);
    let part = partition_nodes(&ds, config.t0, config.tf).unwrap();
    assert_eq!(part.v_hire.len() + part.v_faculty.len(), part.node_count());
    for &n in &part.v_hire {
        assert!(part.hire_year[n] >= config.t0 && part.hire_year[n] <= config.tf);
        assert!(part.is_hire(n));
    }
    for &n in &part.v_faculty {
        assert!(part.hire_year[n] < config.t0);
        assert!(!part.is_hire(n));
    }
    assert_eq!(part.v_hire.len(), config.n_hires);
    assert_eq!(part.v_faculty.len(), config.n_faculty);
}

#[test]
fn labels_follow_the_faculty_rank_threshold() {
    let (ds, _) = small_synth_dataset(45);
    let labels = assign_labels(&ds, 30).unwrap();
    assert_eq!(labels.y.len(), ds.researchers.len());
    for r in &ds.researchers {
        assert_eq!(labels.y[r.node_id], r.faculty_rank.unwrap() <= 30.0);
    }
    assert!(labels.y.iter().any(|&b| b));
    assert!(labels.y.iter().any(|&b| !b));
}

#[test]
fn phd_and_ones_tensors_are_constant_across_years() {
    let (ds, config) = small_synth_dataset(46);
    let phd = phd_tensor(&ds, config.t0, config.tf).unwrap();
    assert_eq!(phd.d, 1);
    for r in &ds.researchers {
        for t in config.t0..=config.tf {
            assert_eq!(phd.get(r.node_id, 0, t).unwrap(), r.phd_rank.unwrap());
        }
    }
    let ones = ones_tensor(ds.researchers.len(), config.t0, config.tf);
    assert!(ones.raw().iter().all(|&v| v == 1.0));
}

#[test]
fn bib_tensor_matches_hand_computed_slices() {
    // D (hired 2011, rank 8) is already faculty when the papers appear;
    // A and B are window hires with two joint papers.
    let pubs = vec![
        pub_rec("p1", 2012, &["B Person", "A Person", "D Person", "Ext One"]),
        pub_rec("p2", 2013, &["A Person", "B Person"]),
    ];
    let faculty = vec![
        fac_rec("A Person", "u1", 2016, "u1"),
        fac_rec("B Person", "u1", 2017, "u1"),
        fac_rec("D Person", "u2", 2011, "u1"),
    ];
    let table = RankTable::from_rows(
        &[("u1".to_string(), 40), ("u2".to_string(), 8)],
        &AliasMap::default(),
    )
    .unwrap();
    let ds = link(&pubs, &faculty, &table, &AliasMap::default()).unwrap();
    let bib = bib_tensor(&ds, 2010, 2020, HistoryPolicy::Fold).unwrap();
    assert_eq!(bib.d, 22);

    let a = ds.node_by_name("a person").unwrap();
    let get = |feat: usize, t: i32| bib.get(a, feat, t).unwrap();
    // 2012 cumulative for A: one 4-author paper, position 2, with a faculty
    // co-author from a top-10 department.
    assert_eq!(get(0, 2012), 1.0);
    assert_eq!(get(1, 2012), 4.0);
    assert_eq!(get(2, 2012), 0.0);
    assert_eq!(get(3, 2012), 0.0);
    assert_eq!(get(4, 2012), 2.0);
    assert_eq!(get(5, 2012), 1.0);
    assert_eq!(get(6, 2012), 1.0);
    assert_eq!(get(7, 2012), 1.0);
    assert_eq!(get(8, 2012), 1.0);
    assert_eq!(get(9, 2012), 1.0);
    assert_eq!(get(10, 2012), 1.0);
    // 2013 cumulative: both papers; A is first author on the 2013 one.
    assert_eq!(get(0, 2013), 2.0);
    assert_eq!(get(1, 2013), 3.0);
    assert_eq!(get(2, 2013), 1.0);
    assert_eq!(get(3, 2013), 0.5);
    assert_eq!(get(4, 2013), 1.5);
    assert_eq!(get(5, 2013), 1.0);
    assert_eq!(get(6, 2013), 0.5);
    // Prior-year block at 2013 sees only the 2012 paper.
    assert_eq!(get(11, 2013), 1.0);
    assert_eq!(get(12, 2013), 4.0);
    assert_eq!(get(15, 2013), 2.0);
    assert_eq!(get(16, 2013), 1.0);
    // Prior-year block at 2014 sees only the 2013 paper, which has no
    // faculty co-author (B is hired in 2017).
    assert_eq!(get(11, 2014), 1.0);
    assert_eq!(get(16, 2014), 0.0);
    // Before any papers both blocks are zero.
    for feat in 0..22 {
        assert_eq!(get(feat, 2010), 0.0);
        assert_eq!(get(feat, 2011), 0.0);
    }
}

#[test]
fn feature_tensor_files_round_trip_bitwise() {
    let (ds, config) = small_synth_dataset(47);
    let bib = bib_tensor(&ds, config.t0, config.tf, HistoryPolicy::Fold).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("bib.f64");
    let json = dir.path().join("bib.json");
    bib.write_binary(&bin, &json).unwrap();
    let back = FeatureTensor::read_binary(&bin, &json).unwrap();
    assert_eq!(bib, back);
    let a: Vec<u64> = bib.raw().iter().map(|v| v.to_bits()).collect();
    let b: Vec<u64> = back.raw().iter().map(|v| v.to_bits()).collect();
    assert_eq!(a, b);

    std::fs::write(&bin, &std::fs::read(&bin).unwrap()[..16]).unwrap();
    assert!(FeatureTensor::read_binary(&bin, &json).is_err());
}

/// Partition with a deterministic spread of hire years over [t0-5, tf].
fn spread_partition(n: usize, t0: i32, tf: i32) -> NodePartition {
    let span = (tf - t0 + 6) as usize;
    let hire_year: Vec<i32> = (0..n).map(|i| t0 - 5 + ((i * 7 + i / 3) % span) as i32).collect();
    let v_hire = (0..n).filter(|&i| hire_year[i] >= t0).collect();
    let v_faculty = (0..n).filter(|&i| hire_year[i] < t0).collect();
    NodePartition {
        t0,
        tf,
        hire_year,
        v_hire,
        v_faculty,
    }
}

#[test]
fn split_takes_eighty_percent_of_each_pool_year_exactly() {
    for n in [500usize, 1000, 2000] {
        let part = spread_partition(n, 2010, 2020);
        let masks = temporal_split(&part, 7).unwrap();
        for year in 2010..=2017 {
            let pool: Vec<usize> = part
                .v_hire
                .iter()
                .copied()
                .filter(|&i| part.hire_year[i] == year)
                .collect();
            let train = pool
                .iter()
                .filter(|&&i| masks.assignment[i] == Some(Split::Train))
                .count();
            let val = pool
                .iter()
                .filter(|&&i| masks.assignment[i] == Some(Split::Val))
                .count();
            assert_eq!(train + val, pool.len());
            assert_eq!(train, (0.8 * pool.len() as f64).round() as usize);
        }
        for &i in &part.v_hire {
            if part.hire_year[i] >= 2018 {
                assert_eq!(masks.assignment[i], Some(Split::Test));
            } else {
                assert!(matches!(
                    masks.assignment[i],
                    Some(Split::Train) | Some(Split::Val)
                ));
            }
        }
        for &i in &part.v_faculty {
            assert_eq!(masks.assignment[i], None);
        }
    }
}

#[test]
fn split_is_seed_deterministic_and_seed_sensitive() {
    let part = spread_partition(1200, 2010, 2020);
    let a = temporal_split(&part, 7).unwrap();
    let b = temporal_split(&part, 7).unwrap();
    assert_eq!(a, b);
    let c = temporal_split(&part, 8).unwrap();
    assert_ne!(a.assignment, c.assignment);
    // Same counts either way: only the membership moves.
    for year in 2010..=2017 {
        let count = |m: &SplitMasks, s: Split| {
            m.assignment
                .iter()
                .enumerate()
                .filter(|&(i, a)| *a == Some(s) && part.hire_year[i] == year)
                .count()
        };
        assert_eq!(count(&a, Split::Train), count(&c, Split::Train));
        assert_eq!(count(&a, Split::Val), count(&c, Split::Val));
    }
}

#[test]
fn short_windows_cannot_be_split() {
    let part = spread_partition(50, 2018, 2019);
    assert!(matches!(
        temporal_split(&part, 1),
        Err(FeaturizeError::WindowTooShort { .. })
    ));
}

#[test]
fn year_masks_cover_the_trailing_window_and_exact_test_year() {
    let part = spread_partition(900, 2010, 2020);
    let masks = temporal_split(&part, 11).unwrap();
    let ym = masks.year_masks(2018, 8).unwrap();
    for i in 0..part.node_count() {
        let y = part.hire_year[i];
        let in_window = (2010..=2017).contains(&y);
        assert_eq!(
            ym.train[i],
            masks.assignment[i] == Some(Split::Train) && in_window
        );
        assert_eq!(ym.val[i], masks.assignment[i] == Some(Split::Val) && in_window);
        assert_eq!(ym.test[i], masks.assignment[i] == Some(Split::Test) && y == 2018);
        let lit = ym.train[i] as u8 + ym.val[i] as u8 + ym.test[i] as u8;
        assert!(lit <= 1, "masks overlap at node {i}");
    }
    // A shorter window drops early hires from the supervision masks.
    let narrow = masks.year_masks(2018, 2).unwrap();
    for i in 0..part.node_count() {
        assert_eq!(
            narrow.train[i],
            masks.assignment[i] == Some(Split::Train)
                && (2016..=2017).contains(&part.hire_year[i])
        );
    }
    assert!(masks.year_masks(2021, 2).is_err());
    assert!(masks.year_masks(2018, 0).is_err());
}

#[test]
fn masks_csv_lists_only_set_bits() {
    let part = spread_partition(40, 2010, 2020);
    let masks = temporal_split(&part, 3).unwrap();
    let ym = masks.year_masks(2019, 9).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("masks.csv");
    write_masks_csv(&path, std::slice::from_ref(&ym)).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("node_id,year,mask_kind,value"));
    let mut seen = 0usize;
    for line in lines {
        let parts: Vec<&str> = line.split(',').collect();
        assert_eq!(parts.len(), 4);
        let node: usize = parts[0].parse().unwrap();
        assert_eq!(parts[1], "2019");
        assert_eq!(parts[3], "1");
        match parts[2] {
            "train" => assert!(ym.train[node]),
            "val" => assert!(ym.val[node]),
            "test" => assert!(ym.test[node]),
            other => panic!("unexpected mask kind {other}"),
        }
        seen += 1;
    }
    let expected = ym.train.iter().filter(|&&b| b).count()
        + ym.val.iter().filter(|&&b| b).count()
        + ym.test.iter().filter(|&&b| b).count();
    assert_eq!(seen, expected);
}

/// Events dated at or after a hire's own year must not touch anything the
/// pipeline computes for that hire: features before the hire year, split
/// assignment, or mask rows. Exercised by record-level perturbations.
#[test]
fn later_events_leave_pre_hire_inputs_bit_identical() {
    let (ds0, config) = small_synth_dataset(48);
    let out = generate(&config).unwrap();
    let table = RankTable::from_rows(&out.rankings, &AliasMap::default()).unwrap();

    // Target: a test-cohort hire from the middle test year.
    let target = ds0
        .researchers
        .iter()
        .find(|r| r.hire_year == config.tf - 1)
        .expect("no hire in the middle test year")
        .canonical_name
        .clone();
    let t_i = config.tf - 1;

    let snapshot = |ds: &LinkedDataset| {
        let i = ds.node_by_name(&target).unwrap();
        let bib = bib_tensor(ds, config.t0, config.tf, HistoryPolicy::Fold).unwrap();
        let seq = build_sequence(ds, config.t0, config.tf, HistoryPolicy::Fold).unwrap();
        let part = partition_nodes(ds, config.t0, config.tf).unwrap();
        let splits = temporal_split(&part, 99).unwrap();
        let mut feats: Vec<u64> = Vec::new();
        for t in config.t0..t_i {
            for f in 0..22 {
                feats.push(bib.get(i, f, t).unwrap().to_bits());
            }
        }
        let mut nbrs: Vec<Vec<(u32, u32)>> = Vec::new();
        for t in config.t0..t_i {
            nbrs.push(seq.neighbors(t, i).unwrap().to_vec());
        }
        let mut mask_bits = Vec::new();
        for t in (config.t0 + 1)..=t_i {
            let ym = splits.year_masks(t, (t - config.t0) as u32).unwrap();
            mask_bits.push((ym.train[i], ym.val[i], ym.test[i]));
        }
        (feats, nbrs, splits.assignment[i], mask_bits)
    };
    let base = snapshot(&ds0);
    assert_eq!(base.2, Some(Split::Test));

    let relink = |pubs: &[PublicationRecord], fac: &[FacultyRecord]| {
        let mut ds = link(pubs, fac, &table, &AliasMap::default()).unwrap();
        impute_missing_ranks(&mut ds).unwrap();
        ds
    };

    // Perturbation 1: a brand-new publication dated at the hire year,
    // co-authored by the target.
    let mut pubs = out.publications.clone();
    pubs.push(pub_rec("zz_extra", t_i, &[target.as_str(), "Late Arrival"]));
    assert_eq!(snapshot(&relink(&pubs, &out.faculty)), base);

    // Perturbation 2: delete every publication dated after the hire year.
    let pubs: Vec<PublicationRecord> = out
        .publications
        .iter()
        .filter(|p| p.year <= t_i)
        .cloned()
        .collect();
    assert!(pubs.len() < out.publications.len());
    assert_eq!(snapshot(&relink(&pubs, &out.faculty)), base);

    // Perturbation 3: move another final-year hire's placement to a
    // different department (label-side change dated after t_i).
    let mut fac = out.faculty.clone();
    let j = fac
        .iter()
        .position(|f| f.hire_year == Some(config.tf) && f.full_name != target)
        .unwrap();
    fac[j].university = out.rankings.first().unwrap().0.clone();
    assert_eq!(snapshot(&relink(&out.publications, &fac)), base);

    // Perturbation 4: shift a same-year peer into the final year.
    let mut fac = out.faculty.clone();
    let j = fac
        .iter()
        .position(|f| f.hire_year == Some(t_i) && f.full_name != target)
        .unwrap();
    fac[j].hire_year = Some(config.tf);
    assert_eq!(snapshot(&relink(&out.publications, &fac)), base);
}
