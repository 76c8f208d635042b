mod common;

use chainmove::merkle::{build_root, empty_root, fold_path, leaf_hash, prove, verify_proof};
use chainmove::state_proof::verify_contract_proof;
use chainmove::{prove_contract, ChainId};
use common::brute_root;
use proptest::prelude::*;

fn items() -> impl Strategy<Value = Vec<Vec<u8>>> {
    prop::collection::vec(prop::collection::vec(any::<u8>(), 0..40), 1..80)
}

proptest! {
    #[test]
    fn root_matches_recomputation(xs in items()) {
        prop_assert_eq!(build_root(&xs).0, brute_root(&xs));
    }

    #[test]
    fn every_honest_proof_verifies(xs in items()) {
        let root = build_root(&xs);
        for (i, x) in xs.iter().enumerate() {
            let p = prove(&xs, i).unwrap();
            prop_assert!(verify_proof(&root, x, &p));
            prop_assert_eq!(fold_path(leaf_hash(x), &p.path), root);
        }
    }

    #[test]
    fn path_length_is_logarithmic(xs in items(), pick in any::<prop::sample::Index>()) {
        let i = pick.index(xs.len());
        let p = prove(&xs, i).unwrap();
        let depth = usize::BITS - (xs.len() - 1).leading_zeros();
        prop_assert!(p.path.len() <= depth as usize);
    }

    #[test]
    fn flipped_sibling_bit_fails(xs in items(), pick in any::<prop::sample::Index>(), bit in 0usize..256) {
        prop_assume!(xs.len() > 1);
        let i = pick.index(xs.len());
        let root = build_root(&xs);
        let mut p = prove(&xs, i).unwrap();
        let s = bit % p.path.len();
        p.path[s].sibling.0[bit / 8] ^= 1 << (bit % 8);
        prop_assert!(!verify_proof(&root, &xs[i], &p));
    }

    #[test]
    fn proof_does_not_transfer_to_other_leaf(xs in items(), a in any::<prop::sample::Index>(), b in any::<prop::sample::Index>()) {
        let (i, j) = (a.index(xs.len()), b.index(xs.len()));
        prop_assume!(xs[i] != xs[j]);
        let root = build_root(&xs);
        let p = prove(&xs, i).unwrap();
        prop_assert!(!verify_proof(&root, &xs[j], &p));
    }

    #[test]
    fn appending_a_leaf_changes_the_root(xs in items(), extra in prop::collection::vec(any::<u8>(), 0..8)) {
        let mut ys = xs.clone();
        ys.push(extra);
        prop_assert_ne!(build_root(&xs), build_root(&ys));
    }
}

#[test]
fn empty_root_is_not_a_leaf_hash() {
    let none: Vec<Vec<u8>> = vec![];
    assert_eq!(build_root(&none), empty_root());
    assert_ne!(empty_root(), leaf_hash(b""));
}

#[test]
fn contract_proofs_verify_against_the_header_root() {
    use chainmove::apps::standard_registry;
    use chainmove::apps::state_n::state_n_name;
    use chainmove::script::Script;
    use chainmove::{Address, ChainConfig};
    use std::sync::Arc;

    let mut s = Script::new(&[ChainConfig::burrow_like(ChainId(0))], Arc::new(standard_registry())).unwrap();
    let owner = Address([3; 20]);
    let mut addrs = Vec::new();
    for n in [1usize, 10, 100] {
        addrs.push(s.create(ChainId(0), owner, &state_n_name(n), [n as u8; 32], vec![]).unwrap().0);
    }
    let chain = s.net.chain(ChainId(0));
    let h = chain.head_height();
    let root = chain.head().state_root;
    for a in &addrs {
        let snap = chain.snapshot(h).unwrap();
        let proof = prove_contract(&snap, ChainId(0), a).unwrap();
        assert_eq!(proof.state_root, root);
        assert!(verify_contract_proof(&root, &proof));
        let mut bad = proof.clone();
        bad.record.balance += 1;
        assert!(!verify_contract_proof(&root, &bad));
    }
}
