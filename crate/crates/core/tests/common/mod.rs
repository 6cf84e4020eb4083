//! Independent oracles shared by the integration suites. These compute
//! expected values by routes unrelated to the engine under test.

/// Positive integers whose prime factors are all in {2, 3, 5}, ascending.
pub fn five_smooth(count: usize) -> Vec<i64> {
    let mut out: Vec<i64> = Vec::new();
    let mut candidates = std::collections::BTreeSet::new();
    candidates.insert(1i64);
    while out.len() < count {
        let n = *candidates.iter().next().expect("nonempty");
        candidates.remove(&n);
        out.push(n);
        for p in [2, 3, 5] {
            candidates.insert(n * p);
        }
    }
    out
}

/// Index oracle for the nested stream
/// `D = 0 : 1 : 1 : zip (add (tl D) (tl (tl D))) (even (tl D))`,
/// computed by direct recursion on demanded indices with memoization:
/// the element at 3+2k is D(k+1) + D(k+2), the element at 4+2k is D(2k+1).
pub fn d_index_oracle(count: usize) -> Vec<i64> {
    fn d(i: usize, memo: &mut std::collections::HashMap<usize, i64>) -> i64 {
        if let Some(v) = memo.get(&i) {
            return *v;
        }
        let v = match i {
            0 => 0,
            1 | 2 => 1,
            _ if (i - 3) % 2 == 0 => {
                let k = (i - 3) / 2;
                d(k + 1, memo) + d(k + 2, memo)
            }
            _ => {
                let k = (i - 4) / 2;
                d(2 * k + 1, memo)
            }
        };
        memo.insert(i, v);
        v
    }
    let mut memo = std::collections::HashMap::new();
    (0..count).map(|i| d(i, &mut memo)).collect()
}

#[allow(dead_code)]
pub fn unused() {}
