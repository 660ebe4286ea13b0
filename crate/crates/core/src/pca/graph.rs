//! Scott's graph model restricted to finite sets of naturals.
//!
//! Elements are sorted vectors. Application is the usual rule
//! `U·V = {m | <c,m> ∈ U, decode(c) ⊆ V}`. Combinators are infinite sets, so
//! they are materialised at a level `l`: only entries whose finite argument
//! sets lie in `[0,l)` and whose result lies in `[0,l)` are kept.

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

pub type GSet = Arc<Vec<u64>>;

pub fn pair(x: u64, y: u64) -> u64 {
    let (x, y) = (x as u128, y as u128);
    let s = x + y;
    let v = s * (s + 1) / 2 + y;
    u64::try_from(v).expect("pair code overflows u64")
}

pub fn unpair(n: u64) -> (u64, u64) {
    let n = n as u128;
    // largest w with w(w+1)/2 <= n
    let mut w = (((8 * n + 1) as f64).sqrt() as u128).saturating_sub(1) / 2;
    while (w + 1) * (w + 2) / 2 <= n {
        w += 1;
    }
    while w * (w + 1) / 2 > n {
        w -= 1;
    }
    let y = n - w * (w + 1) / 2;
    let x = w - y;
    (x as u64, y as u64)
}

pub fn code(e: &[u64]) -> u64 {
    e.iter().fold(0u64, |acc, &i| {
        assert!(i < 64, "finite set too large to code");
        acc | (1u64 << i)
    })
}

pub fn decode(c: u64) -> Vec<u64> {
    (0..64).filter(|i| c >> i & 1 == 1).collect()
}

pub fn gset(items: impl IntoIterator<Item = u64>) -> GSet {
    let s: BTreeSet<u64> = items.into_iter().collect();
    Arc::new(s.into_iter().collect())
}

fn subset(small: &[u64], big: &[u64]) -> bool {
    small.iter().all(|x| big.binary_search(x).is_ok())
}

pub fn apply(u: &[u64], v: &[u64]) -> GSet {
    gset(u.iter().filter_map(|&n| {
        let (c, m) = unpair(n);
        subset(&decode(c), v).then_some(m)
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Table {
    K,
    S,
    I,
    Kbar,
    P,
    P0,
    P1,
}

fn subsets(level: u64) -> Vec<Vec<u64>> {
    (0..1u64 << level).map(decode).collect()
}

fn curried(level: u64, arity: usize, f: &dyn Fn(&[Vec<u64>]) -> GSet) -> GSet {
    let subs = subsets(level);
    let mut out = Vec::new();
    let mut idx = vec![0usize; arity];
    loop {
        let args: Vec<Vec<u64>> = idx.iter().map(|&i| subs[i].clone()).collect();
        for m in f(&args).iter().copied().filter(|&m| m < level) {
            let n = idx.iter().rev().fold(m, |acc, &i| pair(code(&subs[i]), acc));
            out.push(n);
        }
        let mut k = arity;
        loop {
            if k == 0 {
                return gset(out);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < subs.len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Level-`level` truncation of a combinator's graph. Cached per (table, level).
pub fn table(t: Table, level: u64) -> GSet {
    static CACHE: OnceLock<Mutex<HashMap<(Table, u64), GSet>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(g) = cache.lock().unwrap().get(&(t, level)) {
        return g.clone();
    }
    assert!(level <= 8, "graph level above 8 is not materialisable");
    let g = match t {
        Table::K => curried(level, 2, &|a| gset(a[0].iter().copied())),
        Table::Kbar => curried(level, 2, &|a| gset(a[1].iter().copied())),
        Table::I => curried(level, 1, &|a| gset(a[0].iter().copied())),
        Table::S => curried(level, 3, &|a| {
            apply(&apply(&a[0], &a[2]), &apply(&a[1], &a[2]))
        }),
        Table::P => curried(level, 3, &|a| apply(&apply(&a[2], &a[0]), &a[1])),
        Table::P0 => {
            let k = table(Table::K, level);
            curried(level, 1, &|a| apply(&a[0], &k))
        }
        Table::P1 => {
            let kb = table(Table::Kbar, level);
            curried(level, 1, &|a| apply(&a[0], &kb))
        }
    };
    cache.lock().unwrap().insert((t, level), g.clone());
    g
}
