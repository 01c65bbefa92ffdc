use proptest::prelude::*;
use sfcnb::codec::{
    band_size_bits, decode, delta_decode, delta_encode, encode, encode_block, encoded_size_bits,
    stream_vbyte_size_bits, CodecError, Decoder,
};

/// Storage cost taken row by row from the published size table.
fn table_bits(v: u32) -> u32 {
    match v {
        1 => 1,
        2..=9 => 5,
        10..=15 => 9,
        _ => {
            let n = (1..8).find(|&n| (v as u64) < 1u64 << (4 * n + 4)).unwrap();
            9 + 4 * n
        }
    }
}

#[test]
fn golden_blocks() {
    let b = encode_block(&[1, 1, 1, 1, 1, 1], 6).unwrap();
    assert_eq!((b.bitmask_string().as_str(), b.info.len(), b.data.len()), ("000000", 0, 0));
    let b = encode_block(&[1, 2, 9, 7, 1, 1], 6).unwrap();
    assert_eq!(b.bitmask_string(), "011100");
    assert_eq!(b.info, [0x8, 0xF, 0xD]);
    assert!(b.data.is_empty());
    let b = encode_block(&[234, 1, 1, 56789, 1, 1], 6).unwrap();
    assert_eq!(b.bitmask_string(), "100100");
    assert_eq!(b.info, [0x1, 0x3]);
    assert_eq!(b.data, [0xE, 0xA, 0xD, 0xD, 0xD, 0x5]);
}

#[test]
fn size_law_small_values_exhaustive() {
    for v in 1..=1u32 << 16 {
        assert_eq!(encoded_size_bits(v).unwrap(), table_bits(v), "v = {v}");
    }
    assert_eq!(encoded_size_bits(56789).unwrap(), 21);
    assert_eq!(encoded_size_bits(u32::MAX).unwrap(), 37);
    assert!(encoded_size_bits(0).is_err());
}

#[test]
fn reference_codec_sizes() {
    assert_eq!(stream_vbyte_size_bits(200), 10);
    assert_eq!(stream_vbyte_size_bits(256), 18);
    assert_eq!(stream_vbyte_size_bits(1 << 16), 26);
    assert_eq!(stream_vbyte_size_bits(u32::MAX), 34);
    assert_eq!(band_size_bits(1).unwrap(), 2);
    assert_eq!(band_size_bits(2).unwrap(), 2);
    assert_eq!(band_size_bits(256).unwrap(), 10);
    assert_eq!(band_size_bits(300).unwrap(), 34);
    assert_eq!(band_size_bits(1 << 32).unwrap(), 34);
    assert!(band_size_bits((1 << 32) + 1).is_err());
}

#[test]
fn delta_coding() {
    assert_eq!(delta_encode(&[0, 2, 302]).unwrap(), [1, 2, 300]);
    assert_eq!(delta_decode(&[1, 2, 300]).unwrap(), [0, 2, 302]);
    assert_eq!(delta_encode(&[5, 5]), Err(CodecError::NotIncreasing { index: 1 }));
    assert_eq!(delta_encode(&[u32::MAX]), Err(CodecError::FirstTooLarge { value: u32::MAX }));
    assert_eq!(delta_decode(&[1, 0]), Err(CodecError::ZeroDifference { index: 1 }));
}

#[test]
fn empty_and_extreme_lists() {
    for w in [8, 32, 64] {
        let e = encode(&[], w).unwrap();
        assert_eq!(e.byte_len(), 0);
        assert_eq!(e.decode().unwrap(), Vec::<u32>::new());
        let big = [0, u32::MAX - 1];
        assert_eq!(encode(&big, w).unwrap().decode().unwrap(), big);
    }
    assert!(matches!(encode(&[1], 12), Err(CodecError::InvalidBlockWidth(12))));
}

#[test]
fn corrupt_streams_are_reported() {
    let list: Vec<u32> = (0..100).map(|k| k * 37).collect();
    let e = encode(&list, 32).unwrap();
    let cut = &e.bytes[..e.bytes.len() - 1];
    assert!(decode(cut, list.len(), 32).is_err());
    let mut longer = e.bytes.clone();
    longer.push(0);
    assert!(matches!(
        decode(&longer, list.len(), 32),
        Err(CodecError::Corrupt { reason: "trailing bytes", .. })
    ));
    // streaming decoder stops after the first error
    let mut d = Decoder::new(cut, list.len(), 32).unwrap();
    let results: Vec<_> = d.by_ref().collect();
    assert!(results.last().unwrap().is_err());
    assert_eq!(results.iter().filter(|r| r.is_err()).count(), 1);
}

fn sorted_list() -> impl Strategy<Value = Vec<u32>> {
    prop::collection::btree_set(0..u32::MAX, 0..600).prop_map(|s| s.into_iter().collect())
}

proptest! {
    #[test]
    fn round_trip(list in sorted_list(), wide in any::<bool>()) {
        let w = if wide { 64 } else { 32 };
        let e = encode(&list, w).unwrap();
        prop_assert_eq!(e.decode().unwrap(), list.clone());
        let streamed: Vec<u32> = Decoder::new(&e.bytes, list.len(), w).unwrap().map(Result::unwrap).collect();
        prop_assert_eq!(streamed, list);
    }

    #[test]
    fn dense_round_trip(start in 0u32..1000, gaps in prop::collection::vec(1u32..20, 0..300)) {
        let mut list = vec![start];
        for g in gaps {
            list.push(list.last().unwrap() + g);
        }
        prop_assert_eq!(encode(&list, 32).unwrap().decode().unwrap(), list);
    }

    #[test]
    fn byte_length_follows_bit_accounting(list in sorted_list(), wide in any::<bool>()) {
        let w = if wide { 64 } else { 32 };
        let diffs = delta_encode(&list).unwrap();
        let expected: usize = diffs
            .chunks(w)
            .map(|c| {
                let nibble_bits: u32 = c.iter().map(|&v| encoded_size_bits(v).unwrap() - 1).sum();
                w / 8 + (nibble_bits as usize).div_ceil(8)
            })
            .sum();
        prop_assert_eq!(encode(&list, w).unwrap().byte_len(), expected);
        // never more than the mask plus nine nibbles per value
        prop_assert!(expected <= list.len().div_ceil(w) * w / 8 + (list.len() * 9).div_ceil(2) + list.len().div_ceil(w));
    }

    #[test]
    fn size_law_sampled(v in 1u32..=u32::MAX) {
        prop_assert_eq!(encoded_size_bits(v).unwrap(), table_bits(v));
    }
}
