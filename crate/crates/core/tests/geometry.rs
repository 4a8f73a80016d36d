use std::collections::BTreeMap;

use dance_core::cgr::{fcgr_grid, walk_residues, CgrParams};
use dance_core::kaleidoscope::{
    generate_from_residues, segment_count_oracle, CoordinateTable, KaleidoscopeParams, SegmentSet,
};
use dance_core::raster::{rasterize, read_pgm, read_png, write_pgm, write_png};
use dance_core::{Point, Segment};
use proptest::prelude::*;

const ALPHABET: &[u8] = b"ACDEFGHIKLMNPQRSTVWY";

fn residues(max_len: usize) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(prop::sample::select(ALPHABET), 1..=max_len)
}

fn params(depth: u32) -> KaleidoscopeParams {
    KaleidoscopeParams {
        depth,
        ..KaleidoscopeParams::default()
    }
}

type Key = (u64, u64);

fn key(p: Point) -> Key {
    ((p.x + 0.0).to_bits(), (p.y + 0.0).to_bits())
}

/// Segments as an unordered, undirected multiset.
fn multiset<'a>(segments: impl IntoIterator<Item = &'a Segment>) -> BTreeMap<(Key, Key), usize> {
    let mut m = BTreeMap::new();
    for s in segments {
        let (a, b) = (key(s.a), key(s.b));
        *m.entry(if a <= b { (a, b) } else { (b, a) }).or_default() += 1;
    }
    m
}

fn mirrored(set: &SegmentSet) -> Vec<Segment> {
    let flip = |p: Point| Point::new(p.x, -p.y);
    set.iter().map(|s| Segment::new(flip(s.a), flip(s.b))).collect()
}

#[test]
fn count_for_reference_length() {
    let seq = b"ACDEFGHIKLMNP";
    let set = generate_from_residues(seq, &params(4), &CoordinateTable::default()).unwrap();
    assert_eq!(set.len(), 6500);
    assert_eq!(segment_count_oracle(13, 4), 6500);
}

#[test]
fn empty_inputs_draw_nothing() {
    let table = CoordinateTable::default();
    assert!(generate_from_residues(b"", &params(4), &table).unwrap().is_empty());
    assert!(generate_from_residues(b"ACD", &params(0), &table).unwrap().is_empty());
}

#[test]
fn unknown_residue_rejected() {
    let table = CoordinateTable::default();
    assert!(generate_from_residues(b"ACXD", &params(2), &table).is_err());
    assert!(generate_from_residues(b"AC-D", &params(2), &table).is_err());
}

#[test]
fn invalid_params_rejected() {
    let table = CoordinateTable::default();
    for p in [
        KaleidoscopeParams {
            scale: 0.0,
            ..params(2)
        },
        KaleidoscopeParams {
            scale: f64::NAN,
            ..params(2)
        },
        KaleidoscopeParams {
            angle: f64::INFINITY,
            ..params(2)
        },
        KaleidoscopeParams {
            depth: 1000,
            ..params(2)
        },
    ] {
        assert!(generate_from_residues(b"ACD", &p, &table).is_err(), "{p:?}");
    }
}

#[test]
fn lowercase_matches_uppercase() {
    let table = CoordinateTable::default();
    let upper = generate_from_residues(b"MKVLA", &params(3), &table).unwrap();
    let lower = generate_from_residues(b"mkvla", &params(3), &table).unwrap();
    assert_eq!(upper, lower);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn count_matches_oracle(seq in residues(16), depth in 0u32..=5) {
        let set = generate_from_residues(&seq, &params(depth), &CoordinateTable::default()).unwrap();
        prop_assert_eq!(set.len() as u128, segment_count_oracle(seq.len() as u64, depth));
    }

    #[test]
    fn oracle_closed_form_for_long_sequences(len in 1u64..200, depth in 1u32..=8) {
        prop_assume!(len + 1 >= u64::from(depth));
        prop_assert_eq!(segment_count_oracle(len, depth), 4 * u128::from(len) * 5u128.pow(depth - 1));
    }

    #[test]
    fn reproducible(seq in residues(10), depth in 1u32..=4) {
        let table = CoordinateTable::default();
        let a = generate_from_residues(&seq, &params(depth), &table).unwrap();
        let b = generate_from_residues(&seq, &params(depth), &table).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn closed_under_vertical_mirror(seq in residues(8), depth in 1u32..=4) {
        let set = generate_from_residues(&seq, &params(depth), &CoordinateTable::default()).unwrap();
        prop_assert_eq!(multiset(&set), multiset(&mirrored(&set)));
    }

    /// One end of every segment is a table point or its reflection.
    #[test]
    fn endpoints_reach_table(seq in residues(8), depth in 1u32..=3) {
        let table = CoordinateTable::default();
        let anchors: Vec<_> = table
            .entries()
            .flat_map(|(_, c)| [key(c), key(Point::new(c.x, -c.y))])
            .collect();
        let set = generate_from_residues(&seq, &params(depth), &table).unwrap();
        for s in &set {
            prop_assert!(anchors.contains(&key(s.b)), "{:?}", s);
        }
    }

    /// Memoization only drops repeated sub-walks, never a distinct segment.
    #[test]
    fn memo_keeps_distinct_segments(seq in residues(6), depth in 1u32..=5) {
        let table = CoordinateTable::default();
        let full = generate_from_residues(&seq, &params(depth), &table).unwrap();
        let memo = generate_from_residues(&seq, &KaleidoscopeParams { memoize: true, ..params(depth) }, &table).unwrap();
        prop_assert!(memo.len() <= full.len());
        let distinct = |s: &SegmentSet| multiset(s).into_keys().collect::<Vec<_>>();
        prop_assert_eq!(distinct(&full), distinct(&memo));
    }

    #[test]
    fn table_swap_only_affects_sequences_using_it(seq in residues(8)) {
        let table = CoordinateTable::default();
        let swapped = table.swapped(b'A', b'W').unwrap();
        let a = generate_from_residues(&seq, &params(2), &table).unwrap();
        let b = generate_from_residues(&seq, &params(2), &swapped).unwrap();
        if seq.contains(&b'A') || seq.contains(&b'W') {
            prop_assert_ne!(a, b);
        } else {
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn dump_round_trips(seq in residues(6), depth in 1u32..=3, angle in -3.0f64..3.0) {
        let p = KaleidoscopeParams { angle, ..params(depth) };
        let set = generate_from_residues(&seq, &p, &CoordinateTable::default()).unwrap();
        let mut buf = Vec::new();
        set.write_dump(&mut buf).unwrap();
        prop_assert_eq!(SegmentSet::read_dump(&buf[..]).unwrap(), set);
    }

    #[test]
    fn cgr_stays_in_unit_square(seq in residues(64), ratio in 0.05f64..0.95) {
        let walk = walk_residues(&seq, &CoordinateTable::default(), &CgrParams { ratio, ..CgrParams::default() }).unwrap();
        prop_assert_eq!(walk.len(), seq.len());
        for p in &walk.points {
            prop_assert!((0.0..=1.0).contains(&p.x) && (0.0..=1.0).contains(&p.y));
        }
    }

    /// Two walks over the same residues from different starts close their
    /// gap by the factor `1 - ratio` each step.
    #[test]
    fn cgr_contracts(seq in residues(30), sx in 0.0f64..1.0, sy in 0.0f64..1.0) {
        let table = CoordinateTable::default();
        let a = walk_residues(&seq, &table, &CgrParams { start: Point::new(sx, sy), ratio: 0.5 }).unwrap();
        let b = walk_residues(&seq, &table, &CgrParams { start: Point::new(1.0 - sx, 1.0 - sy), ratio: 0.5 }).unwrap();
        let mut gap = ((2.0 * sx - 1.0).powi(2) + (2.0 * sy - 1.0).powi(2)).sqrt();
        for (p, q) in a.points.iter().zip(&b.points) {
            gap *= 0.5;
            let d = ((p.x - q.x).powi(2) + (p.y - q.y).powi(2)).sqrt();
            prop_assert!((d - gap).abs() <= 1e-12, "{} vs {}", d, gap);
        }
    }

    #[test]
    fn fcgr_counts_every_point(seq in residues(100), res in 1usize..=32) {
        let walk = walk_residues(&seq, &CoordinateTable::default(), &CgrParams::default()).unwrap();
        let grid = fcgr_grid(&walk, res).unwrap();
        prop_assert_eq!(grid.total(), seq.len() as u64);
        prop_assert_eq!(grid.counts().len(), res * res);
    }

    #[test]
    fn images_round_trip(seq in residues(6), w in 8usize..64, h in 8usize..64) {
        let set = generate_from_residues(&seq, &params(2), &CoordinateTable::default()).unwrap();
        let img = rasterize(&set, w, h, 0.05).unwrap();
        prop_assert!(img.ink_count() > 0);
        let mut pgm = Vec::new();
        write_pgm(&img, &mut pgm).unwrap();
        let back = read_pgm(&pgm).unwrap();
        prop_assert_eq!(back.pixels(), img.pixels());
        let mut png = Vec::new();
        write_png(&img, &mut png).unwrap();
        let back = read_png(&png).unwrap();
        prop_assert_eq!(back.pixels(), img.pixels());
    }
}
