use std::collections::BTreeMap;

use mpsched_core::endpoint::ReceiverState;
use mpsched_core::{compute_rbd, compute_rd, ArrivalRecord, SimDelta};

/// Every permutation of `items`, in lexicographic order.
fn permutations(items: &[u64]) -> Vec<Vec<u64>> {
    let mut cur = items.to_vec();
    cur.sort_unstable();
    let mut out = vec![cur.clone()];
    loop {
        let Some(i) = (0..cur.len().saturating_sub(1)).rev().find(|&i| cur[i] < cur[i + 1]) else {
            return out;
        };
        let j = (i + 1..cur.len()).rev().find(|&j| cur[j] > cur[i]).unwrap();
        cur.swap(i, j);
        cur[i + 1..].reverse();
        out.push(cur.clone());
    }
}

/// Hypothetical re-sort buffer, recomputed from scratch after each arrival:
/// occupancy is the number of arrived packets above the contiguous prefix.
fn brute_force_occupancies(order: &[u64]) -> Vec<u64> {
    let n = order.len();
    let mut arrived = vec![false; n + 1];
    order
        .iter()
        .map(|&s| {
            arrived[s as usize] = true;
            let prefix = (1..=n).take_while(|&k| arrived[k]).count();
            (prefix + 1..=n).filter(|&k| arrived[k]).count() as u64
        })
        .collect()
}

fn brute_force_displacements(order: &[u64]) -> Vec<i64> {
    order
        .iter()
        .enumerate()
        .map(|(pos, &s)| (pos as i64 + 1) - s as i64)
        .collect()
}

fn normalized(values: impl IntoIterator<Item = i64>, n: usize) -> BTreeMap<i64, f64> {
    let mut counts: BTreeMap<i64, u64> = BTreeMap::new();
    for v in values {
        *counts.entry(v).or_default() += 1;
    }
    counts.into_iter().map(|(k, c)| (k, c as f64 / n as f64)).collect()
}

fn record_via_receiver(order: &[u64]) -> ArrivalRecord {
    let mut rx = ReceiverState::new(1, SimDelta::ZERO);
    let mut record = ArrivalRecord::new();
    for &s in order {
        let out = rx.on_data(s);
        assert!(!out.duplicate);
        record.push(s, out.occupancy_after);
    }
    record
}

#[test]
fn all_permutations_of_seven_match_brute_force() {
    let perms = permutations(&[1, 2, 3, 4, 5, 6, 7]);
    assert_eq!(perms.len(), 5040);
    for order in &perms {
        let occ = brute_force_occupancies(order);
        let record = record_via_receiver(order);
        let from_rx: Vec<u64> = record.iter().map(|a| a.occupancy_after).collect();
        assert_eq!(from_rx, occ, "receiver occupancy for {order:?}");

        let rbd = compute_rbd(&record);
        let want = normalized(occ.iter().map(|&o| o as i64), order.len());
        let got: BTreeMap<i64, f64> = rbd.iter().collect();
        assert_eq!(got, want, "rbd for {order:?}");
        assert!((rbd.total() - 1.0).abs() < 1e-9);

        let disp = brute_force_displacements(order);
        assert_eq!(disp.iter().sum::<i64>(), 0);
        let rd = compute_rd(&record);
        let got: BTreeMap<i64, f64> = rd.iter().collect();
        assert_eq!(got, normalized(disp, order.len()), "rd for {order:?}");
        assert!((rd.total() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn in_order_is_a_fixed_point() {
    let order: Vec<u64> = (1..=50).collect();
    let record = record_via_receiver(&order);
    assert_eq!(compute_rbd(&record).iter().collect::<Vec<_>>(), vec![(0, 1.0)]);
    assert_eq!(compute_rd(&record).iter().collect::<Vec<_>>(), vec![(0, 1.0)]);
    assert_eq!(compute_rbd(&record).to_csv(), "index,density\n0,1.0\n");
}

#[test]
fn worked_examples() {
    let rec = record_via_receiver(&[3, 4, 5, 1, 2]);
    let occ: Vec<u64> = rec.iter().map(|a| a.occupancy_after).collect();
    assert_eq!(occ, [1, 2, 3, 3, 0]);
    let rbd = compute_rbd(&rec);
    assert_eq!(rbd.density(0), 0.2);
    assert_eq!(rbd.density(3), 0.4);

    let rd = compute_rd(&record_via_receiver(&[3, 1, 2]));
    assert!((rd.density(-2) - 1.0 / 3.0).abs() < 1e-12);
    assert!((rd.density(1) - 2.0 / 3.0).abs() < 1e-12);
}

#[test]
fn rd_uses_rank_not_absolute_sequence() {
    // A record that starts at an arbitrary sequence number still measures
    // displacement relative to its own ordering.
    let mut rec = ArrivalRecord::new();
    for (s, o) in [(101, 1), (100, 0), (102, 0)] {
        rec.push(s, o);
    }
    let rd = compute_rd(&rec);
    assert!((rd.density(-1) - 1.0 / 3.0).abs() < 1e-12);
    assert!((rd.density(0) - 1.0 / 3.0).abs() < 1e-12);
    assert!((rd.density(1) - 1.0 / 3.0).abs() < 1e-12);
}
