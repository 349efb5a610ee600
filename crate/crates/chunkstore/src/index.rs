//! Top-k nearest-neighbor search over datastore keys.
//!
//! Two modes. Flat scans every key and is exact; it needs no refresh
//! because it always reads the datastore's current entries. IVF
//! partitions keys with seeded k-means and scans only the `nprobe`
//! closest clusters per query; appended epochs become visible after
//! [`SearchIndex::refresh`], which assigns new entries to their nearest
//! existing centroid without re-clustering.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fs::OpenOptions;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::datastore::{self, Datastore};
use crate::prob::sq_l2_raw;
use crate::{Error, Result};

const IVF_MAGIC: [u8; 4] = *b"CKIV";
const IVF_VERSION: u32 = 1;

/// One search result: a datastore entry and its squared L2 distance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit {
    pub entry: u64,
    pub distance: f32,
}

/// Common ANN heuristic for the cluster count.
pub fn default_n_clusters(entry_count: usize) -> usize {
    (entry_count as f64).sqrt().ceil() as usize
}

/// Probe a tenth of the clusters by default, at least one.
pub fn default_nprobe(n_clusters: usize) -> usize {
    (n_clusters / 10).max(1)
}

/// Exact scan over all current datastore entries.
#[derive(Clone, Copy, Debug, Default)]
pub struct FlatIndex;

/// Inverted-file index: coarse k-means centroids plus per-cluster entry lists.
#[derive(Clone, Debug, PartialEq)]
pub struct IvfIndex {
    d_key: usize,
    nprobe: usize,
    seed: u64,
    /// `n_clusters x d_key`, row-major.
    centroids: Vec<f32>,
    clusters: Vec<Vec<u64>>,
    /// Entries assigned so far; later datastore entries need a refresh.
    covered: u64,
}

#[derive(Clone, Debug)]
pub enum SearchIndex {
    Flat(FlatIndex),
    Ivf(IvfIndex),
}

impl SearchIndex {
    pub fn flat() -> Self {
        SearchIndex::Flat(FlatIndex)
    }

    /// Returns the `k` nearest entries in ascending distance order, ties
    /// broken by the smaller entry id. Returns every entry (sorted) when
    /// fewer than `k` exist in scope.
    pub fn search(&self, ds: &Datastore, query: &[f32], k: usize) -> Result<Vec<Hit>> {
        if query.len() != ds.d_key() {
            return Err(Error::DimensionMismatch {
                expected: ds.d_key(),
                got: query.len(),
            });
        }
        if k == 0 {
            return Err(Error::Config("search needs k >= 1".into()));
        }
        match self {
            SearchIndex::Flat(_) => {
                if ds.entry_count() == 0 {
                    return Err(Error::EmptyIndex);
                }
                let mut top = TopK::new(k);
                for entry in 0..ds.entry_count() {
                    top.offer(entry as u64, sq_l2_raw(query, ds.key(entry)));
                }
                Ok(top.into_sorted())
            }
            SearchIndex::Ivf(ivf) => ivf.search(ds, query, k),
        }
    }

    /// Makes appended datastore epochs searchable. Flat mode already
    /// reads the live datastore, so only IVF does any work.
    pub fn refresh(&mut self, ds: &Datastore) {
        if let SearchIndex::Ivf(ivf) = self {
            ivf.refresh(ds);
        }
    }
}

impl IvfIndex {
    /// Clusters all current datastore keys with seeded k-means
    /// (k-means++ style initialization, Lloyd iterations).
    pub fn build(ds: &Datastore, n_clusters: usize, seed: u64, iters: usize) -> Result<Self> {
        let n = ds.entry_count();
        if n < n_clusters {
            return Err(Error::TooFewEntries {
                needed: n_clusters,
                got: n,
            });
        }
        if n_clusters == 0 {
            return Err(Error::Config("n_clusters must be at least 1".into()));
        }
        let d = ds.d_key();
        let key = |i: usize| ds.key(i);

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut centroids = Vec::with_capacity(n_clusters * d);
        let first = rng.random_range(0..n);
        centroids.extend_from_slice(key(first));
        let mut min_d2: Vec<f32> = (0..n).map(|i| sq_l2_raw(key(i), key(first))).collect();
        for _ in 1..n_clusters {
            let total: f64 = min_d2.iter().map(|&d| f64::from(d)).sum();
            let pick = if total > 0.0 {
                let mut r = rng.random::<f64>() * total;
                let mut chosen = n - 1;
                for (i, &d2) in min_d2.iter().enumerate() {
                    r -= f64::from(d2);
                    if r <= 0.0 {
                        chosen = i;
                        break;
                    }
                }
                chosen
            } else {
                rng.random_range(0..n)
            };
            let c = key(pick).to_vec();
            for (i, slot) in min_d2.iter_mut().enumerate() {
                let d2 = sq_l2_raw(key(i), &c);
                if d2 < *slot {
                    *slot = d2;
                }
            }
            centroids.extend_from_slice(&c);
        }

        let centroid = |cs: &[f32], c: usize| -> Vec<f32> { cs[c * d..(c + 1) * d].to_vec() };
        let mut assignment = vec![0usize; n];
        for _ in 0..iters.max(1) {
            let mut changed = false;
            for (i, slot) in assignment.iter_mut().enumerate() {
                let best = nearest_centroid(&centroids, d, n_clusters, key(i)).0;
                if best != *slot {
                    *slot = best;
                    changed = true;
                }
            }

            let mut sums = vec![0.0f64; n_clusters * d];
            let mut counts = vec![0usize; n_clusters];
            for (i, &c) in assignment.iter().enumerate() {
                counts[c] += 1;
                for (j, &v) in key(i).iter().enumerate() {
                    sums[c * d + j] += f64::from(v);
                }
            }

            // Re-seed empty clusters from the point farthest from its
            // assigned centroid, one point per empty cluster.
            let mut claimed: Vec<usize> = Vec::new();
            for c in 0..n_clusters {
                if counts[c] > 0 {
                    continue;
                }
                let mut far_i = usize::MAX;
                let mut far_d = -1.0f32;
                for (i, &assigned) in assignment.iter().enumerate() {
                    if claimed.contains(&i) {
                        continue;
                    }
                    let own = centroid(&centroids, assigned);
                    let d2 = sq_l2_raw(key(i), &own);
                    if d2 > far_d {
                        far_d = d2;
                        far_i = i;
                    }
                }
                if far_i != usize::MAX {
                    claimed.push(far_i);
                    centroids[c * d..(c + 1) * d].copy_from_slice(key(far_i));
                    changed = true;
                }
            }

            for c in 0..n_clusters {
                if counts[c] > 0 {
                    for j in 0..d {
                        centroids[c * d + j] = (sums[c * d + j] / counts[c] as f64) as f32;
                    }
                }
            }
            if !changed {
                break;
            }
        }

        let mut clusters: Vec<Vec<u64>> = vec![Vec::new(); n_clusters];
        for i in 0..n {
            let c = nearest_centroid(&centroids, d, n_clusters, key(i)).0;
            clusters[c].push(i as u64);
        }

        Ok(Self {
            d_key: d,
            nprobe: default_nprobe(n_clusters),
            seed,
            centroids,
            clusters,
            covered: n as u64,
        })
    }

    pub fn n_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn nprobe(&self) -> usize {
        self.nprobe
    }

    pub fn set_nprobe(&mut self, nprobe: usize) {
        self.nprobe = nprobe.clamp(1, self.n_clusters());
    }

    pub fn covered_entries(&self) -> u64 {
        self.covered
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        self.clusters.iter().map(Vec::len).collect()
    }

    pub fn centroid(&self, c: usize) -> &[f32] {
        &self.centroids[c * self.d_key..(c + 1) * self.d_key]
    }

    fn search(&self, ds: &Datastore, query: &[f32], k: usize) -> Result<Vec<Hit>> {
        if self.covered == 0 {
            return Err(Error::EmptyIndex);
        }
        let n_clusters = self.n_clusters();
        let mut order: Vec<(f32, usize)> = (0..n_clusters)
            .map(|c| (sq_l2_raw(query, self.centroid(c)), c))
            .collect();
        order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1)));

        let mut top = TopK::new(k);
        for &(_, c) in order.iter().take(self.nprobe.min(n_clusters)) {
            for &entry in &self.clusters[c] {
                top.offer(entry, sq_l2_raw(query, ds.key(entry as usize)));
            }
        }
        Ok(top.into_sorted())
    }

    fn refresh(&mut self, ds: &Datastore) {
        let d = self.d_key;
        let n_clusters = self.n_clusters();
        for entry in self.covered as usize..ds.entry_count() {
            let c = nearest_centroid(&self.centroids, d, n_clusters, ds.key(entry)).0;
            self.clusters[c].push(entry as u64);
        }
        self.covered = ds.entry_count() as u64;
    }
}

fn nearest_centroid(centroids: &[f32], d: usize, n_clusters: usize, x: &[f32]) -> (usize, f32) {
    let mut best = 0usize;
    let mut best_d = f32::INFINITY;
    for c in 0..n_clusters {
        let d2 = sq_l2_raw(x, &centroids[c * d..(c + 1) * d]);
        if d2 < best_d {
            best_d = d2;
            best = c;
        }
    }
    (best, best_d)
}

/// Bounded worst-out collection of the k best `(distance, entry)` pairs.
struct TopK {
    k: usize,
    heap: BinaryHeap<HeapItem>,
}

#[derive(PartialEq)]
struct HeapItem {
    distance: f32,
    entry: u64,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        self.distance
            .partial_cmp(&other.distance)
            .unwrap_or(Ordering::Equal)
            .then(self.entry.cmp(&other.entry))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl TopK {
    fn new(k: usize) -> Self {
        Self {
            k,
            heap: BinaryHeap::with_capacity(k + 1),
        }
    }

    #[inline]
    fn offer(&mut self, entry: u64, distance: f32) {
        let item = HeapItem { distance, entry };
        if self.heap.len() < self.k {
            self.heap.push(item);
        } else if let Some(worst) = self.heap.peek() {
            if item.cmp(worst) == Ordering::Less {
                self.heap.pop();
                self.heap.push(item);
            }
        }
    }

    fn into_sorted(self) -> Vec<Hit> {
        let mut items = self.heap.into_vec();
        items.sort();
        items
            .into_iter()
            .map(|i| Hit {
                entry: i.entry,
                distance: i.distance,
            })
            .collect()
    }
}

/// Writes the IVF section after the datastore section of `path`,
/// replacing any previous trailer.
pub fn append_ivf(path: impl AsRef<Path>, ds: &Datastore, ivf: &IvfIndex) -> Result<()> {
    let file = OpenOptions::new().write(true).open(path)?;
    file.set_len(datastore::serialized_len(ds))?;
    let mut w = BufWriter::new(file);
    w.seek(SeekFrom::End(0))?;
    w.write_all(&IVF_MAGIC)?;
    w.write_u32::<LittleEndian>(IVF_VERSION)?;
    w.write_u32::<LittleEndian>(ivf.n_clusters() as u32)?;
    w.write_u32::<LittleEndian>(ivf.nprobe as u32)?;
    w.write_u64::<LittleEndian>(ivf.covered)?;
    w.write_u64::<LittleEndian>(ivf.seed)?;
    for &v in &ivf.centroids {
        w.write_f32::<LittleEndian>(v)?;
    }
    for cluster in &ivf.clusters {
        w.write_u64::<LittleEndian>(cluster.len() as u64)?;
        for &id in cluster {
            w.write_u64::<LittleEndian>(id)?;
        }
    }
    Ok(())
}

/// Reads the IVF trailer of a datastore file, if one is present.
pub fn load_ivf(path: impl AsRef<Path>, ds: &Datastore) -> Result<Option<IvfIndex>> {
    let file = std::fs::File::open(path)?;
    let mut r = BufReader::new(file);
    r.seek(SeekFrom::Start(datastore::serialized_len(ds)))?;
    let mut magic = [0u8; 4];
    match r.read_exact(&mut magic) {
        Ok(()) => {}
        Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e.into()),
    }
    if magic != IVF_MAGIC {
        return Err(Error::BadMagic { expected: IVF_MAGIC });
    }
    let version = r
        .read_u32::<LittleEndian>()
        .map_err(|_| Error::TruncatedFile { context: "IVF header" })?;
    if version != IVF_VERSION {
        return Err(Error::VersionMismatch {
            expected: IVF_VERSION,
            got: version,
        });
    }
    let n_clusters = read_u32(&mut r)? as usize;
    let nprobe = read_u32(&mut r)? as usize;
    let covered = read_u64(&mut r)?;
    let seed = read_u64(&mut r)?;
    let d = ds.d_key();
    let mut centroids = Vec::with_capacity(n_clusters * d);
    for _ in 0..n_clusters * d {
        centroids.push(
            r.read_f32::<LittleEndian>()
                .map_err(|_| Error::TruncatedFile { context: "IVF centroids" })?,
        );
    }
    let mut clusters = Vec::with_capacity(n_clusters);
    for _ in 0..n_clusters {
        let len = read_u64(&mut r)? as usize;
        let mut ids = Vec::with_capacity(len);
        for _ in 0..len {
            ids.push(read_u64(&mut r)?);
        }
        clusters.push(ids);
    }
    Ok(Some(IvfIndex {
        d_key: d,
        nprobe,
        seed,
        centroids,
        clusters,
        covered,
    }))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    r.read_u32::<LittleEndian>()
        .map_err(|_| Error::TruncatedFile { context: "IVF section" })
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    r.read_u64::<LittleEndian>()
        .map_err(|_| Error::TruncatedFile { context: "IVF section" })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datastore::test_support::raw_keys_datastore;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    /// Clustered synthetic keys: `blobs` Gaussian blobs in `d` dims.
    fn blob_keys(n: usize, d: usize, blobs: usize, spread: f32, seed: u64) -> (Vec<f32>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centers: Vec<Vec<f32>> = (0..blobs)
            .map(|_| (0..d).map(|_| rng.random_range(-4.0..4.0)).collect())
            .collect();
        let mut keys = Vec::with_capacity(n * d);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let b = i % blobs;
            labels.push(b);
            for &center in &centers[b] {
                let z: f64 = StandardNormal.sample(&mut rng);
                keys.push(center + z as f32 * spread);
            }
        }
        (keys, labels)
    }

    fn naive_top_k(ds: &Datastore, query: &[f32], k: usize) -> Vec<Hit> {
        let mut all: Vec<Hit> = (0..ds.entry_count())
            .map(|e| Hit {
                entry: e as u64,
                distance: sq_l2_raw(query, ds.key(e)),
            })
            .collect();
        all.sort_by(|a, b| {
            a.distance
                .partial_cmp(&b.distance)
                .unwrap()
                .then(a.entry.cmp(&b.entry))
        });
        all.truncate(k);
        all
    }

    #[test]
    fn self_retrieval_at_distance_zero() {
        let (keys, _) = blob_keys(200, 8, 4, 0.5, 1);
        let ds = raw_keys_datastore(keys, 8);
        let index = SearchIndex::flat();
        let query = ds.key(57).to_vec();
        let hits = index.search(&ds, &query, 1).unwrap();
        assert_eq!(hits[0].entry, 57);
        assert_eq!(hits[0].distance, 0.0);
    }

    #[test]
    fn oversized_k_returns_all_sorted() {
        let (keys, _) = blob_keys(10, 4, 2, 0.5, 2);
        let ds = raw_keys_datastore(keys, 4);
        let index = SearchIndex::flat();
        let hits = index.search(&ds, &[0.0; 4], 50).unwrap();
        assert_eq!(hits.len(), 10);
        for w in hits.windows(2) {
            assert!(w[0].distance <= w[1].distance);
        }
    }

    #[test]
    fn flat_matches_naive_oracle() {
        let (keys, _) = blob_keys(2000, 16, 10, 0.7, 3);
        let ds = raw_keys_datastore(keys, 16);
        let index = SearchIndex::flat();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let query: Vec<f32> = (0..16).map(|_| rng.random_range(-5.0..5.0)).collect();
            let got = index.search(&ds, &query, 8).unwrap();
            let want = naive_top_k(&ds, &query, 8);
            assert_eq!(got.len(), want.len());
            for (g, w) in got.iter().zip(&want) {
                assert_eq!(g.entry, w.entry);
                assert!((g.distance - w.distance).abs() <= 1e-5 * w.distance.max(1.0));
            }
        }
    }

    #[test]
    fn search_input_validation() {
        let (keys, _) = blob_keys(10, 4, 2, 0.5, 5);
        let ds = raw_keys_datastore(keys, 4);
        let index = SearchIndex::flat();
        assert!(matches!(
            index.search(&ds, &[0.0; 3], 1),
            Err(Error::DimensionMismatch { .. })
        ));
        let empty = raw_keys_datastore(Vec::new(), 4);
        assert!(matches!(
            index.search(&empty, &[0.0; 4], 1),
            Err(Error::EmptyIndex)
        ));
    }

    #[test]
    fn single_cluster_ivf_equals_flat() {
        let (keys, _) = blob_keys(300, 8, 3, 0.6, 6);
        let ds = raw_keys_datastore(keys, 8);
        let ivf = IvfIndex::build(&ds, 1, 9, 5).unwrap();
        let ivf = SearchIndex::Ivf(ivf);
        let flat = SearchIndex::flat();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let query: Vec<f32> = (0..8).map(|_| rng.random_range(-5.0..5.0)).collect();
            assert_eq!(
                ivf.search(&ds, &query, 8).unwrap(),
                flat.search(&ds, &query, 8).unwrap()
            );
        }
    }

    #[test]
    fn full_probe_ivf_equals_flat() {
        let (keys, _) = blob_keys(500, 8, 5, 0.6, 8);
        let ds = raw_keys_datastore(keys, 8);
        let mut ivf = IvfIndex::build(&ds, 10, 9, 8).unwrap();
        ivf.set_nprobe(10);
        let ivf = SearchIndex::Ivf(ivf);
        let flat = SearchIndex::flat();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let query: Vec<f32> = (0..8).map(|_| rng.random_range(-5.0..5.0)).collect();
            assert_eq!(
                ivf.search(&ds, &query, 8).unwrap(),
                flat.search(&ds, &query, 8).unwrap()
            );
        }
    }

    #[test]
    fn two_blobs_cluster_cleanly() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let n = 400;
        let d = 6;
        let mut keys = Vec::with_capacity(n * d);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let b = i % 2;
            labels.push(b);
            let center = if b == 0 { -5.0f32 } else { 5.0 };
            for _ in 0..d {
                let z: f64 = StandardNormal.sample(&mut rng);
                keys.push(center + z as f32 * 0.4);
            }
        }
        let ds = raw_keys_datastore(keys, d);
        let ivf = IvfIndex::build(&ds, 2, 11, 10).unwrap();

        let mut agreement = [[0usize; 2]; 2];
        for (c, cluster) in ivf.clusters.iter().enumerate() {
            for &e in cluster {
                agreement[c][labels[e as usize]] += 1;
            }
        }
        let pure = (agreement[0][0] + agreement[1][1]).max(agreement[0][1] + agreement[1][0]);
        assert!(pure as f64 / n as f64 >= 0.99, "purity {pure}/{n}");
    }

    #[test]
    fn kmeans_deterministic_per_seed() {
        let (keys, _) = blob_keys(500, 8, 5, 0.6, 12);
        let ds = raw_keys_datastore(keys, 8);
        let a = IvfIndex::build(&ds, 8, 77, 10).unwrap();
        let b = IvfIndex::build(&ds, 8, 77, 10).unwrap();
        assert_eq!(a, b);
        let c = IvfIndex::build(&ds, 8, 78, 10).unwrap();
        assert!(a.centroids != c.centroids || a.clusters != c.clusters);
    }

    #[test]
    fn too_few_entries_rejected() {
        let (keys, _) = blob_keys(5, 4, 1, 0.5, 13);
        let ds = raw_keys_datastore(keys, 4);
        assert!(matches!(
            IvfIndex::build(&ds, 10, 1, 5),
            Err(Error::TooFewEntries { .. })
        ));
    }

    #[test]
    fn refresh_makes_appends_visible() {
        let (keys, _) = blob_keys(1000, 8, 10, 0.5, 14);
        let small = raw_keys_datastore(keys[..900 * 8].to_vec(), 8);
        let big = raw_keys_datastore(keys.clone(), 8);

        let ivf = IvfIndex::build(&small, 10, 15, 8).unwrap();
        let mut index = SearchIndex::Ivf(ivf.clone());

        // Unrefreshed index never returns appended ids.
        let appended_query = big.key(950).to_vec();
        let before = index.search(&big, &appended_query, 8).unwrap();
        assert!(before.iter().all(|h| h.entry < 900));

        index.refresh(&big);
        let after = index.search(&big, &appended_query, 1).unwrap();
        assert_eq!(after[0].entry, 950);
        assert_eq!(after[0].distance, 0.0);

        // Refresh with no appends changes nothing.
        let mut again = SearchIndex::Ivf(ivf);
        again.refresh(&small);
        if let (SearchIndex::Ivf(a), SearchIndex::Ivf(b)) = (&index, &again) {
            assert_eq!(b.covered, 900);
            assert_eq!(a.covered, 1000);
        }
    }

    #[test]
    fn refresh_keeps_recall_close() {
        let (keys, _) = blob_keys(1100, 8, 12, 0.5, 16);
        let base = raw_keys_datastore(keys[..1000 * 8].to_vec(), 8);
        let grown = raw_keys_datastore(keys.clone(), 8);
        let flat = SearchIndex::flat();

        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let queries: Vec<Vec<f32>> = (0..100)
            .map(|_| {
                let i = rng.random_range(0..1000);
                base.key(i)
                    .iter()
                    .map(|&v| v + rng.random_range(-0.1..0.1))
                    .collect()
            })
            .collect();

        let recall = |index: &SearchIndex, ds: &Datastore| -> f64 {
            let mut hit = 0usize;
            let mut total = 0usize;
            for q in &queries {
                let truth = flat.search(ds, q, 8).unwrap();
                let approx = index.search(ds, q, 8).unwrap();
                for t in &truth {
                    total += 1;
                    if approx.iter().any(|h| h.entry == t.entry) {
                        hit += 1;
                    }
                }
            }
            hit as f64 / total as f64
        };

        let ivf_base = SearchIndex::Ivf(IvfIndex::build(&base, 33, 18, 8).unwrap());
        let before = recall(&ivf_base, &base);
        let mut ivf_grown = ivf_base.clone();
        ivf_grown.refresh(&grown);
        let after = recall(&ivf_grown, &grown);
        assert!(
            after >= before - 0.05,
            "recall dropped from {before} to {after}"
        );
    }

    #[test]
    fn ivf_trailer_round_trip() {
        let (keys, _) = blob_keys(300, 8, 4, 0.5, 19);
        let ds = raw_keys_datastore(keys, 8);
        let ivf = IvfIndex::build(&ds, 6, 20, 6).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.ckds");
        datastore::save(&ds, &path).unwrap();
        assert!(load_ivf(&path, &ds).unwrap().is_none());

        append_ivf(&path, &ds, &ivf).unwrap();
        let loaded = load_ivf(&path, &ds).unwrap().unwrap();
        assert_eq!(ivf, loaded);

        // The datastore section is untouched by the trailer.
        let reloaded = datastore::load(&path).unwrap();
        assert_eq!(ds, reloaded);

        // Re-appending replaces the trailer instead of stacking.
        append_ivf(&path, &ds, &ivf).unwrap();
        let len = std::fs::metadata(&path).unwrap().len();
        append_ivf(&path, &ds, &ivf).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len(), len);
    }
}
