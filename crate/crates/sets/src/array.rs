//! Hash-consed, ordered arrays for sets of 2..=16 elements.

use std::hash::BuildHasher;

use hashbrown::HashTable;
use rustc_hash::FxBuildHasher;

/// Arena of interned sorted id arrays. Identical contents share one id.
#[derive(Clone, Default)]
pub(crate) struct ArrayArena {
    data: Vec<u32>,
    spans: Vec<(u32, u32)>,
    table: HashTable<u32>,
}

fn hash_slice(elems: &[u32]) -> u64 {
    FxBuildHasher.hash_one(elems)
}

impl ArrayArena {
    pub(crate) fn get(&self, id: u32) -> &[u32] {
        let (start, len) = self.spans[id as usize];
        &self.data[start as usize..(start + len) as usize]
    }

    /// Interns a strictly ascending slice.
    pub(crate) fn intern(&mut self, elems: &[u32]) -> u32 {
        debug_assert!(elems.windows(2).all(|w| w[0] < w[1]));
        let hash = hash_slice(elems);
        let Self { data, spans, table } = self;
        let slice_of = |id: u32| {
            let (start, len) = spans[id as usize];
            &data[start as usize..(start + len) as usize]
        };
        if let Some(&id) = table.find(hash, |&id| slice_of(id) == elems) {
            return id;
        }
        let id = spans.len() as u32;
        spans.push((data.len() as u32, elems.len() as u32));
        data.extend_from_slice(elems);
        let Self { data, spans, table } = self;
        table.insert_unique(hash, id, |&other| {
            let (start, len) = spans[other as usize];
            hash_slice(&data[start as usize..(start + len) as usize])
        });
        id
    }

    pub(crate) fn len(&self) -> usize {
        self.spans.len()
    }
}
