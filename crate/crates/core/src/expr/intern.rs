//! Hash-consing table. Entries are weak so unused nodes are freed.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, Mutex, OnceLock, Weak};

use super::{Expr, Kind, Node};

const SHARDS: usize = 64;

struct Shard {
    map: HashMap<u64, Vec<Weak<Node>>>,
    sweep_at: usize,
}

fn table() -> &'static [Mutex<Shard>] {
    static TABLE: OnceLock<Vec<Mutex<Shard>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        (0..SHARDS)
            .map(|_| Mutex::new(Shard { map: HashMap::new(), sweep_at: 1024 }))
            .collect()
    })
}

fn hash_kind(kind: &Kind) -> u64 {
    let mut h = DefaultHasher::new();
    match kind {
        Kind::Num(c) => {
            0u8.hash(&mut h);
            c.hash(&mut h);
        }
        Kind::Sym(s) => {
            1u8.hash(&mut h);
            s.hash(&mut h);
        }
        Kind::Jet(j) => {
            2u8.hash(&mut h);
            j.hash(&mut h);
        }
        Kind::Exp(a) => {
            3u8.hash(&mut h);
            a.hash(&mut h);
        }
        Kind::Ln(a) => {
            4u8.hash(&mut h);
            a.hash(&mut h);
        }
        Kind::Int(a, s) => {
            5u8.hash(&mut h);
            a.hash(&mut h);
            s.hash(&mut h);
        }
        Kind::Mul(c, fs) => {
            6u8.hash(&mut h);
            c.hash(&mut h);
            fs.hash(&mut h);
        }
        Kind::Add(c, ts) => {
            7u8.hash(&mut h);
            c.hash(&mut h);
            ts.hash(&mut h);
        }
    }
    h.finish()
}

fn shallow_eq(a: &Kind, b: &Kind) -> bool {
    match (a, b) {
        (Kind::Num(x), Kind::Num(y)) => x == y,
        (Kind::Sym(x), Kind::Sym(y)) => x == y,
        (Kind::Jet(x), Kind::Jet(y)) => x == y,
        (Kind::Exp(x), Kind::Exp(y)) | (Kind::Ln(x), Kind::Ln(y)) => x == y,
        (Kind::Int(x, s), Kind::Int(y, t)) => x == y && s == t,
        (Kind::Mul(c, fs), Kind::Mul(d, gs)) => c == d && fs == gs,
        (Kind::Add(c, ts), Kind::Add(d, us)) => c == d && ts == us,
        _ => false,
    }
}

pub(super) fn intern(kind: Kind) -> Expr {
    let hash = hash_kind(&kind);
    let mut shard = table()[(hash as usize) % SHARDS].lock().unwrap();
    if let Some(bucket) = shard.map.get_mut(&hash) {
        // A node that is dropped and rebuilt repeatedly would otherwise pile
        // dead entries into one bucket without growing the map.
        bucket.retain(|w| w.strong_count() > 0);
        for w in bucket.iter() {
            if let Some(node) = w.upgrade() {
                if shallow_eq(&node.kind, &kind) {
                    return Expr(node);
                }
            }
        }
    }
    let node = Arc::new(Node { kind, hash });
    shard.map.entry(hash).or_default().push(Arc::downgrade(&node));
    if shard.map.len() > shard.sweep_at {
        shard.map.retain(|_, bucket| {
            bucket.retain(|w| w.strong_count() > 0);
            !bucket.is_empty()
        });
        shard.sweep_at = (2 * shard.map.len()).max(1024);
    }
    Expr(node)
}
